//! First-order form of `−Δp + p = f` with the interpolated Robin condition
//! `(1−α)p − (1+α)n·u = 2g`, unknown `ξ = (u, p)`, `u = −∇p`.
//!
//! Block operator `Tξ = (ξ₁ + ∇ξ₂, ξ₂ + ∇·ξ₁)` and trace
//! `tr_α ξ = ((1−α)ξ₂ − (1+α)n·ξ₁)/√2`. The residual supremum is
//! `‖Tξ − f‖² + ‖tr_α ξ − √2 g‖²_∂Ω`, the solution norm is
//! `‖ξ‖² + ‖Tξ‖² + ‖n·ξ₁‖²_∂Ω`.

use std::f64::consts::SQRT_2;

use crate::assembly::{der, integrate_cells, integrate_facets, val, LeastSquaresForm, RowSink};
use crate::error::{Error, Result};
use crate::expr::{Expr, Point};
use crate::mesh::{classify_boundary_robin, BoundaryFacet, StructuredMesh2D};
use crate::problem::sample_facet_points;
use crate::quad_basis::{FeFunction, FeSpace, QuadRule};

#[derive(Debug, Clone)]
pub struct EllipticParams {
    pub alpha: Expr,
    /// Bound on |α|; defaults to the sampled maximum.
    pub alpha_m: Option<f64>,
    /// `(f₁ₓ, f₁ᵧ, f₂)`.
    pub f: [Expr; 3],
    pub g: Expr,
}

#[derive(Debug, Clone)]
pub struct EllipticProblem {
    pub mesh: StructuredMesh2D,
    pub alpha: Expr,
    pub alpha_m: f64,
    pub f: [Expr; 3],
    pub g: Expr,
    pub facets: Vec<BoundaryFacet>,
}

/// Checks `|α| ≤ α_M < 1` at the sampled points and returns `α_M`.
pub(crate) fn validate_alpha(alpha: &Expr, alpha_m: Option<f64>, points: &[Point]) -> Result<f64> {
    let mut amax: f64 = 0.0;
    for &x in points {
        amax = amax.max(alpha.eval(x)?.abs());
    }
    let am = alpha_m.unwrap_or(amax);
    if !(0.0..1.0).contains(&am) {
        return Err(Error::Config(format!(
            "alpha_m = {am} must lie in [0, 1); pure Dirichlet or Neumann conditions are excluded"
        )));
    }
    if amax > am {
        return Err(Error::Config(format!("|alpha| reaches {amax}, above alpha_m = {am}")));
    }
    Ok(am)
}

impl EllipticProblem {
    pub fn new(mesh: StructuredMesh2D, p: EllipticParams, sample_order: usize) -> Result<Self> {
        let facets = classify_boundary_robin(&mesh);
        let pts = sample_facet_points(&mesh, &facets, sample_order)?;
        let alpha_m = validate_alpha(&p.alpha, p.alpha_m, &pts)?;
        Ok(EllipticProblem {
            mesh,
            alpha: p.alpha,
            alpha_m,
            f: p.f,
            g: p.g,
            facets,
        })
    }

    pub fn space(&self, degree: usize) -> Result<FeSpace> {
        FeSpace::new(self.mesh.clone(), degree, 3)
    }

    pub fn infsup_bound(&self) -> f64 {
        (1.0 - self.alpha_m) / 3.0
    }

    pub fn stability_constant(&self) -> f64 {
        3.0 / (1.0 - self.alpha_m)
    }

    pub fn v_form(&self) -> EllipticVForm<'_> {
        EllipticVForm { p: self }
    }

    /// `Tξ` of a jet, or the formal adjoint `(ξ₁ − ∇ξ₂, ξ₂ − ∇·ξ₁)`.
    pub fn t_jet(jet: &[f64], adjoint: bool) -> [f64; 3] {
        let s = if adjoint { -1.0 } else { 1.0 };
        [
            jet[val(0)] + s * jet[der(2, 0)],
            jet[val(1)] + s * jet[der(2, 1)],
            jet[val(2)] + s * (jet[der(0, 0)] + jet[der(1, 1)]),
        ]
    }

    pub fn apply_t_block(&self, xi: &FeFunction, cell: usize, rule: &QuadRule, adjoint: bool) -> Vec<[f64; 3]> {
        let s = &xi.space;
        let basis = s.eval_basis(cell, rule);
        let mut dofs = Vec::new();
        s.cell_dofs(cell, &mut dofs);
        let mut jet = [0.0; 9];
        (0..rule.len())
            .map(|q| {
                s.jet(&xi.coeffs, &dofs, &basis.tab, q, &mut jet);
                Self::t_jet(&jet, adjoint)
            })
            .collect()
    }

    /// `((1−α)ξ₂ ∓ (1+α)n·ξ₁)/√2`; the adjoint trace takes the plus sign.
    pub fn trace(alpha: f64, normal: [f64; 2], jet: &[f64], adjoint: bool) -> f64 {
        let nxi = normal[0] * jet[val(0)] + normal[1] * jet[val(1)];
        let s = if adjoint { 1.0 } else { -1.0 };
        ((1.0 - alpha) * jet[val(2)] + s * (1.0 + alpha) * nxi) / SQRT_2
    }

    pub fn tr_alpha(&self, xi: &FeFunction, facet: &BoundaryFacet, rule: &QuadRule, adjoint: bool) -> Result<Vec<f64>> {
        let s = &xi.space;
        let tr = s.facet_trace(facet, rule);
        let mut dofs = Vec::new();
        s.cell_dofs(facet.cell, &mut dofs);
        let mut jet = [0.0; 9];
        let mut out = Vec::with_capacity(rule.len());
        for (q, c) in tr.points.iter().enumerate() {
            s.jet(&xi.coeffs, &dofs, &tr.tab, q, &mut jet);
            let a = self.alpha.eval(s.mesh().point(*c))?;
            out.push(Self::trace(a, facet.normal, &jet, adjoint));
        }
        Ok(out)
    }

    /// `a(η̂, ξ) = ∫ηᵀTξ + ∫_∂Ω η_R tr_α ξ` with `η_R = tr_β η` for the
    /// given trace parameter `beta`.
    pub fn a_form(&self, eta: &FeFunction, xi: &FeFunction, beta: f64, order: usize) -> Result<f64> {
        let s = &xi.space;
        let i = integrate_cells(s, &[eta, xi], order, |q| {
            let t = Self::t_jet(&q.jets[1], false);
            Ok((0..3).map(|c| q.jets[0][val(c)] * t[c]).sum())
        })?;
        let b = integrate_facets(s, &self.facets, &[eta, xi], order, |f, q| {
            let a = self.alpha.eval(q.x)?;
            Ok(Self::trace(beta, f.normal, &q.jets[0], false) * Self::trace(a, f.normal, &q.jets[1], false))
        })?;
        Ok(i + b)
    }

    /// `a*(ξ̂, η) = ∫ξᵀT̃η + ∫_∂Ω ξ_R tr*_α η` with `ξ_R = tr*_β ξ`.
    pub fn a_adjoint(&self, xi: &FeFunction, eta: &FeFunction, beta: f64, order: usize) -> Result<f64> {
        let s = &xi.space;
        let i = integrate_cells(s, &[xi, eta], order, |q| {
            let t = Self::t_jet(&q.jets[1], true);
            Ok((0..3).map(|c| q.jets[0][val(c)] * t[c]).sum())
        })?;
        let b = integrate_facets(s, &self.facets, &[xi, eta], order, |f, q| {
            let a = self.alpha.eval(q.x)?;
            Ok(Self::trace(beta, f.normal, &q.jets[0], true) * Self::trace(a, f.normal, &q.jets[1], true))
        })?;
        Ok(i + b)
    }

    /// `∫ξᵀTξ` and `∫|ξ|² + ∫_∂Ω (n·ξ₁) ξ₂`.
    pub fn ibp_sides(&self, xi: &FeFunction, order: usize) -> Result<(f64, f64)> {
        let s = &xi.space;
        let lhs = integrate_cells(s, &[xi], order, |q| {
            let t = Self::t_jet(&q.jets[0], false);
            Ok((0..3).map(|c| q.jets[0][val(c)] * t[c]).sum())
        })?;
        let sq = integrate_cells(s, &[xi], order, |q| Ok((0..3).map(|c| q.jets[0][val(c)].powi(2)).sum()))?;
        let bd = integrate_facets(s, &self.facets, &[xi], order, |f, q| {
            let j = &q.jets[0];
            Ok((f.normal[0] * j[val(0)] + f.normal[1] * j[val(1)]) * j[val(2)])
        })?;
        Ok((lhs, sq + bd))
    }

    pub fn ibp_residual(&self, xi: &FeFunction, order: usize) -> Result<f64> {
        let (l, r) = self.ibp_sides(xi, order)?;
        Ok((l - r).abs())
    }

    /// `‖ξ‖² + ‖n·ξ₁‖²_∂Ω`.
    pub fn l2_plus_normal_sq(&self, xi: &FeFunction, order: usize) -> Result<f64> {
        let s = &xi.space;
        let sq = integrate_cells(s, &[xi], order, |q| Ok((0..3).map(|c| q.jets[0][val(c)].powi(2)).sum()))?;
        let bd = integrate_facets(s, &self.facets, &[xi], order, |f, q| {
            let j = &q.jets[0];
            Ok((f.normal[0] * j[val(0)] + f.normal[1] * j[val(1)]).powi(2))
        })?;
        Ok(sq + bd)
    }

    /// `‖l‖² = ‖f‖² + 2‖g‖²_∂Ω`.
    pub fn l_dual_norm(&self, space: &FeSpace, order: usize) -> Result<f64> {
        let z = space.zero();
        let i = integrate_cells(space, &[&z], order, |q| {
            let mut s = 0.0;
            for f in &self.f {
                s += f.eval(q.x)?.powi(2);
            }
            Ok(s)
        })?;
        let b = integrate_facets(space, &self.facets, &[&z], order, |_, q| {
            Ok(2.0 * self.g.eval(q.x)?.powi(2))
        })?;
        Ok((i + b).sqrt())
    }
}

impl LeastSquaresForm for EllipticProblem {
    fn n_components(&self) -> usize {
        3
    }

    fn interior(&self, x: Point, rows: &mut RowSink) -> Result<()> {
        let r = rows.row(1.0, self.f[0].eval(x)?);
        r[val(0)] = 1.0;
        r[der(2, 0)] = 1.0;
        let r = rows.row(1.0, self.f[1].eval(x)?);
        r[val(1)] = 1.0;
        r[der(2, 1)] = 1.0;
        let r = rows.row(1.0, self.f[2].eval(x)?);
        r[val(2)] = 1.0;
        r[der(0, 0)] = 1.0;
        r[der(1, 1)] = 1.0;
        Ok(())
    }

    fn boundary(&self, facet: &BoundaryFacet, x: Point, rows: &mut RowSink) -> Result<()> {
        let a = self.alpha.eval(x)?;
        let r = rows.row(1.0, SQRT_2 * self.g.eval(x)?);
        r[val(2)] = (1.0 - a) / SQRT_2;
        r[val(0)] = -(1.0 + a) * facet.normal[0] / SQRT_2;
        r[val(1)] = -(1.0 + a) * facet.normal[1] / SQRT_2;
        Ok(())
    }

    fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.facets
    }
}

/// `‖ξ‖² + ‖Tξ‖² + ‖n·ξ₁‖²_∂Ω`.
pub struct EllipticVForm<'a> {
    p: &'a EllipticProblem,
}

impl LeastSquaresForm for EllipticVForm<'_> {
    fn n_components(&self) -> usize {
        3
    }

    fn interior(&self, _: Point, rows: &mut RowSink) -> Result<()> {
        for c in 0..3 {
            rows.row(1.0, 0.0)[val(c)] = 1.0;
        }
        let r = rows.row(1.0, 0.0);
        r[val(0)] = 1.0;
        r[der(2, 0)] = 1.0;
        let r = rows.row(1.0, 0.0);
        r[val(1)] = 1.0;
        r[der(2, 1)] = 1.0;
        let r = rows.row(1.0, 0.0);
        r[val(2)] = 1.0;
        r[der(0, 0)] = 1.0;
        r[der(1, 1)] = 1.0;
        Ok(())
    }

    fn boundary(&self, facet: &BoundaryFacet, _: Point, rows: &mut RowSink) -> Result<()> {
        let r = rows.row(1.0, 0.0);
        r[val(0)] = facet.normal[0];
        r[val(1)] = facet.normal[1];
        Ok(())
    }

    fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.p.facets
    }
}
