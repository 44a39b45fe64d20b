//! Stationary advection–reaction `β·∇u + ρu = f` with inflow data `g`.
//!
//! Test space `L²(Ω) × L²(Γ₋; |n·β|)` with `‖v̂‖² = ∫ρv² + ∫_{Γ₋}|n·β|v₋²`.
//! The supremum of the residual over that space is
//! `R(u) = ∫ρ⁻¹(Tu − f)² + ∫_{Γ₋}|n·β|(u − g)²`; solutions are measured in
//! `‖u‖²_W = ∫ρu² + (β·∇u)²`.

use crate::assembly::{
    assemble_bilinear, assemble_ls, der, integrate_cells, integrate_facets, val, BilinearForm, LeastSquaresForm,
    PairSink, RowSink,
};
use crate::error::{Error, Result};
use crate::expr::{Expr, Point};
use crate::mesh::{
    classify_boundary_advection, tag_distance, AdvectionTag, BoundaryFacet, BoundaryTag, StructuredMesh2D,
};
use crate::problem::sample_cell_points;
use crate::quad_basis::{FeFunction, FeSpace, QuadRule};
use crate::solver::{dot, factor_solve, CsrMatrix, SpdFactor, SymMatrix, DEFAULT_SOLVE_TOL};

pub const INFLOW: BoundaryTag = BoundaryTag::Advection(AdvectionTag::Inflow);
pub const OUTFLOW: BoundaryTag = BoundaryTag::Advection(AdvectionTag::Outflow);

#[derive(Debug, Clone)]
pub struct AdvectionParams {
    pub beta: [Expr; 2],
    pub rho: Expr,
    /// Lower bound for ρ; defaults to the sampled minimum.
    pub rho0: Option<f64>,
    pub f: Expr,
    pub g: Expr,
    pub classify_tol: f64,
}

impl AdvectionParams {
    pub fn new(beta: [Expr; 2], rho: Expr, f: Expr, g: Expr) -> Self {
        AdvectionParams {
            beta,
            rho,
            rho0: None,
            f,
            g,
            classify_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdvectionProblem {
    pub mesh: StructuredMesh2D,
    pub beta: [Expr; 2],
    pub rho: Expr,
    pub rho0: f64,
    pub f: Expr,
    pub g: Expr,
    pub facets: Vec<BoundaryFacet>,
    inflow: Vec<BoundaryFacet>,
    outflow: Vec<BoundaryFacet>,
}

impl AdvectionProblem {
    /// Validates the coefficients at Gauss points of the given order.
    pub fn new(mesh: StructuredMesh2D, p: AdvectionParams, sample_order: usize) -> Result<Self> {
        let facets = classify_boundary_advection(&mesh, &p.beta, p.classify_tol)?;
        let cells = sample_cell_points(&mesh, sample_order)?;
        let mut rho_min = f64::INFINITY;
        let mut beta_inf: f64 = 0.0;
        for &x in &cells {
            rho_min = rho_min.min(p.rho.eval(x)?);
            beta_inf = beta_inf.max(p.beta[0].eval(x)?.abs()).max(p.beta[1].eval(x)?.abs());
        }
        let rho0 = match p.rho0 {
            Some(r) if !(r > 0.0) => {
                return Err(Error::Config(format!("rho0 = {r} must be positive")));
            }
            Some(r) if rho_min < r => {
                return Err(Error::Config(format!("rho drops to {rho_min} below rho0 = {r}")));
            }
            Some(r) => r,
            None if !(rho_min > 0.0) => {
                return Err(Error::Config(format!(
                    "rho must be bounded below by a positive constant, sampled minimum {rho_min}"
                )));
            }
            None => rho_min,
        };
        let h = mesh.h()[0].max(mesh.h()[1]);
        let div_tol = 1e-6 * beta_inf / h;
        for &x in &cells {
            let d = divergence(&p.beta, x)?;
            if d.abs() > div_tol {
                return Err(Error::Config(format!(
                    "beta is not divergence free: div beta = {d:e} at ({}, {})",
                    x.x, x.y
                )));
            }
        }
        let dist = tag_distance(&facets, INFLOW, OUTFLOW);
        if !(dist > 0.0) {
            return Err(Error::Config(
                "inflow and outflow boundaries touch; their distance must be positive".into(),
            ));
        }
        let inflow = facets.iter().filter(|f| f.tag == INFLOW).copied().collect();
        let outflow = facets.iter().filter(|f| f.tag == OUTFLOW).copied().collect();
        Ok(AdvectionProblem {
            mesh,
            beta: p.beta,
            rho0,
            rho: p.rho,
            f: p.f,
            g: p.g,
            facets,
            inflow,
            outflow,
        })
    }

    pub fn inflow(&self) -> &[BoundaryFacet] {
        &self.inflow
    }

    pub fn outflow(&self) -> &[BoundaryFacet] {
        &self.outflow
    }

    pub fn beta_at(&self, x: Point) -> Result<[f64; 2]> {
        Ok([self.beta[0].eval(x)?, self.beta[1].eval(x)?])
    }

    fn n_beta(&self, facet: &BoundaryFacet, x: Point) -> Result<f64> {
        let b = self.beta_at(x)?;
        Ok(facet.normal[0] * b[0] + facet.normal[1] * b[1])
    }

    /// `Tu = β·∇u + ρu` at the points of a 2D rule on one cell.
    pub fn apply_t(&self, u: &FeFunction, cell: usize, rule: &QuadRule) -> Result<Vec<f64>> {
        let s = &u.space;
        let basis = s.eval_basis(cell, rule);
        let mut dofs = Vec::new();
        s.cell_dofs(cell, &mut dofs);
        let mut jet = [0.0; 3];
        let mut out = Vec::with_capacity(rule.len());
        for (q, c) in basis.points.iter().enumerate() {
            s.jet(&u.coeffs, &dofs, &basis.tab, q, &mut jet);
            out.push(self.t_jet(s.mesh().point(*c), &jet, false)?);
        }
        Ok(out)
    }

    /// `Tu` (or the formal adjoint `−β·∇u + ρu`) from a jet.
    pub fn t_jet(&self, x: Point, jet: &[f64], adjoint: bool) -> Result<f64> {
        let b = self.beta_at(x)?;
        let s = if adjoint { -1.0 } else { 1.0 };
        Ok(s * (b[0] * jet[1] + b[1] * jet[2]) + self.rho.eval(x)? * jet[0])
    }

    pub fn space(&self, degree: usize) -> Result<FeSpace> {
        FeSpace::new(self.mesh.clone(), degree, 1)
    }

    pub fn v_form(&self) -> WNormForm<'_> {
        WNormForm { p: self }
    }

    /// Matrix of the unstabilized form `a₀(v, u)`, rows indexed by tests.
    pub fn assemble_illposed(&self, space: &FeSpace, order: usize) -> Result<(CsrMatrix, SymMatrix)> {
        let a0 = assemble_bilinear(space, &IllposedForm { p: self }, order)?;
        let w = assemble_ls(space, &self.v_form(), order)?.matrix;
        Ok((a0, w))
    }

    /// `a(v̂, u) = ∫ v Tu − ∫_{Γ₋} n·β v u` with `v̂ = (v, tr₋ v)`.
    pub fn a_wellposed(&self, v: &FeFunction, u: &FeFunction, order: usize) -> Result<f64> {
        let s = &u.space;
        let i = integrate_cells(s, &[v, u], order, |q| {
            Ok(q.jets[0][0] * self.t_jet(q.x, &q.jets[1], false)?)
        })?;
        let b = integrate_facets(s, &self.inflow, &[v, u], order, |f, q| {
            Ok(-self.n_beta(f, q.x)? * q.jets[0][0] * q.jets[1][0])
        })?;
        Ok(i + b)
    }

    /// `a*(û, v) = ∫ u T̃v + ∫_{Γ₊} n·β u v` with `û = (u, tr₊ u)`.
    pub fn a_adjoint(&self, u: &FeFunction, v: &FeFunction, order: usize) -> Result<f64> {
        let s = &u.space;
        let i = integrate_cells(s, &[u, v], order, |q| {
            Ok(q.jets[0][0] * self.t_jet(q.x, &q.jets[1], true)?)
        })?;
        let b = integrate_facets(s, &self.outflow, &[u, v], order, |f, q| {
            Ok(self.n_beta(f, q.x)? * q.jets[0][0] * q.jets[1][0])
        })?;
        Ok(i + b)
    }

    /// The unstabilized form `a₀(v, u)`, which coincides with `a` on
    /// conforming fields.
    pub fn a0(&self, v: &FeFunction, u: &FeFunction, order: usize) -> Result<f64> {
        self.a_wellposed(v, u, order)
    }

    /// `|a*(û, v) − a(v̂, u)|`.
    pub fn adjoint_residual(&self, u: &FeFunction, v: &FeFunction, order: usize) -> Result<f64> {
        Ok((self.a_adjoint(u, v, order)? - self.a_wellposed(v, u, order)?).abs())
    }

    /// `∫_∂Ω |n·β| u²`.
    pub fn boundary_flux_norm_sq(&self, u: &FeFunction, order: usize) -> Result<f64> {
        integrate_facets(&u.space, &self.facets, &[u], order, |f, q| {
            Ok(self.n_beta(f, q.x)?.abs() * q.jets[0][0].powi(2))
        })
    }

    pub fn norms(&self, u: &FeFunction, order: usize) -> Result<AdvectionNorms> {
        let s = &u.space;
        let l2_rho = integrate_cells(s, &[u], order, |q| Ok(self.rho.eval(q.x)? * q.jets[0][0].powi(2)))?;
        let conv = integrate_cells(s, &[u], order, |q| {
            let b = self.beta_at(q.x)?;
            Ok((b[0] * q.jets[0][1] + b[1] * q.jets[0][2]).powi(2))
        })?;
        Ok(AdvectionNorms {
            l2_rho: l2_rho.sqrt(),
            w_norm: (l2_rho + conv).sqrt(),
            l_dual: self.l_dual_norm(s, order)?,
        })
    }

    /// `‖l‖² = ∫ρ⁻¹f² + ∫_{Γ₋}|n·β|g²`.
    pub fn l_dual_norm(&self, space: &FeSpace, order: usize) -> Result<f64> {
        let z = space.zero();
        let i = integrate_cells(space, &[&z], order, |q| {
            Ok(self.f.eval(q.x)?.powi(2) / self.rho.eval(q.x)?)
        })?;
        let b = integrate_facets(space, &self.inflow, &[&z], order, |f, q| {
            Ok(self.n_beta(f, q.x)?.abs() * self.g.eval(q.x)?.powi(2))
        })?;
        Ok((i + b).sqrt())
    }

    /// Sup-ratios of `a₀(·, I_h u_n)` for `u_n = sin(nπx) sin(πy)`.
    pub fn illposed_table(&self, space: &FeSpace, n_max: usize, order: usize) -> Result<Vec<IllposedRow>> {
        let e = self.mesh.extent;
        if (e.x0, e.x1, e.y0, e.y1) != (0.0, 1.0, 0.0, 1.0) {
            return Err(Error::Config("the ill-posedness study needs the unit square".into()));
        }
        if self.mesh.nx < 2 * n_max || self.mesh.ny < 2 {
            return Err(Error::Resolution(format!(
                "mode {n_max} needs at least {} cells along x (4 per wavelength), mesh has {}",
                2 * n_max,
                self.mesh.nx
            )));
        }
        let (a0, w) = self.assemble_illposed(space, order)?;
        let factor = SpdFactor::new(&w)?;
        let mut rows = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            let un = mode(n);
            let u = space.interpolate(std::slice::from_ref(&un))?;
            let rhs = a0.mul(&u.coeffs);
            let riesz = factor_solve(&w, &factor, &rhs, DEFAULT_SOLVE_TOL)?;
            let sup = dot(&rhs, &riesz).max(0.0).sqrt();
            let w_norm = w.quad_form(&u.coeffs).sqrt();
            let l2 = integrate_cells(space, &[&u], order, |q| Ok(q.jets[0][0].powi(2)))?.sqrt();
            let ratio = sup / w_norm;
            rows.push(IllposedRow {
                n,
                ratio,
                l2_norm: l2,
                w_norm,
                envelope: ratio * w_norm / l2,
            });
        }
        Ok(rows)
    }
}

pub fn mode(n: usize) -> Expr {
    crate::expr::parse(&format!("sin({n}*pi*x)*sin(pi*y)")).expect("static expression")
}

fn divergence(beta: &[Expr; 2], x: Point) -> Result<f64> {
    let hx = 1e-6 * (1.0 + x.x.abs());
    let hy = 1e-6 * (1.0 + x.y.abs());
    let dx = (beta[0].eval(Point { x: x.x + hx, ..x })? - beta[0].eval(Point { x: x.x - hx, ..x })?) / (2.0 * hx);
    let dy = (beta[1].eval(Point { y: x.y + hy, ..x })? - beta[1].eval(Point { y: x.y - hy, ..x })?) / (2.0 * hy);
    Ok(dx + dy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvectionNorms {
    pub l2_rho: f64,
    pub w_norm: f64,
    pub l_dual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IllposedRow {
    pub n: usize,
    pub ratio: f64,
    pub l2_norm: f64,
    pub w_norm: f64,
    pub envelope: f64,
}

impl LeastSquaresForm for AdvectionProblem {
    fn n_components(&self) -> usize {
        1
    }

    fn interior(&self, x: Point, rows: &mut RowSink) -> Result<()> {
        let b = self.beta_at(x)?;
        let rho = self.rho.eval(x)?;
        let r = rows.row(1.0 / rho, self.f.eval(x)?);
        r[val(0)] = rho;
        r[der(0, 0)] = b[0];
        r[der(0, 1)] = b[1];
        Ok(())
    }

    fn boundary(&self, facet: &BoundaryFacet, x: Point, rows: &mut RowSink) -> Result<()> {
        let w = self.n_beta(facet, x)?.abs();
        rows.row(w, self.g.eval(x)?)[val(0)] = 1.0;
        Ok(())
    }

    fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.inflow
    }
}

/// `‖u‖²_W = ∫ρu² + (β·∇u)²`.
pub struct WNormForm<'a> {
    p: &'a AdvectionProblem,
}

impl LeastSquaresForm for WNormForm<'_> {
    fn n_components(&self) -> usize {
        1
    }

    fn interior(&self, x: Point, rows: &mut RowSink) -> Result<()> {
        let b = self.p.beta_at(x)?;
        rows.row(self.p.rho.eval(x)?, 0.0)[val(0)] = 1.0;
        let r = rows.row(1.0, 0.0);
        r[der(0, 0)] = b[0];
        r[der(0, 1)] = b[1];
        Ok(())
    }

    fn boundary(&self, _: &BoundaryFacet, _: Point, _: &mut RowSink) -> Result<()> {
        Ok(())
    }

    fn boundary_facets(&self) -> &[BoundaryFacet] {
        &[]
    }
}

struct IllposedForm<'a> {
    p: &'a AdvectionProblem,
}

impl BilinearForm for IllposedForm<'_> {
    fn n_components(&self) -> usize {
        1
    }

    fn interior(&self, x: Point, pairs: &mut PairSink) -> Result<()> {
        let b = self.p.beta_at(x)?;
        let rho = self.p.rho.eval(x)?;
        let (test, trial) = pairs.pair(1.0);
        test[val(0)] = 1.0;
        trial[val(0)] = rho;
        trial[der(0, 0)] = b[0];
        trial[der(0, 1)] = b[1];
        Ok(())
    }

    fn boundary(&self, facet: &BoundaryFacet, x: Point, pairs: &mut PairSink) -> Result<()> {
        let (test, trial) = pairs.pair(-self.p.n_beta(facet, x)?);
        test[val(0)] = 1.0;
        trial[val(0)] = 1.0;
        Ok(())
    }

    fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.p.inflow
    }
}
