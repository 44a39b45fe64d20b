//! 1D acoustics on the space–time rectangle `Q = (0, 1) × (0, τ)` with unknown
//! `ξ = (ρ₀c₀u, p)`, operator `Tξ = (∂ₜξ₁ + c₀∂ₓξ₂, ∂ₜξ₂ + c₀∂ₓξ₁)`, lateral
//! impedance condition `tr⁻ − α tr⁺ = √(2c₀) g` on Σ and initial data on Q₀.
//!
//! Lateral traces `tr± ξ = √(c₀/2)(ξ₂ ± nξ₁)` with `n = ∓1` at `x = 0, 1`.

use std::f64::consts::E;

use crate::assembly::{der, integrate_cells, integrate_facets, val, LeastSquaresForm, RowSink};
use crate::error::{Error, Result};
use crate::expr::{Expr, Point};
use crate::mesh::{classify_boundary_wave, BoundaryFacet, BoundaryTag, SecondAxis, StructuredMesh2D, WaveTag};
use crate::problem::sample_facet_points;
use crate::quad_basis::{FeFunction, FeSpace, QuadRule};

pub const SIGMA: BoundaryTag = BoundaryTag::Wave(WaveTag::Sigma);
pub const Q0: BoundaryTag = BoundaryTag::Wave(WaveTag::Q0);
pub const QTAU: BoundaryTag = BoundaryTag::Wave(WaveTag::Qtau);

#[derive(Debug, Clone)]
pub struct WaveParams {
    pub c0: f64,
    pub rho0: f64,
    pub tau: f64,
    pub alpha: Expr,
    pub alpha_m: Option<f64>,
    /// `(f₁, f₂)`; the first residual row carries `c₀f₁`.
    pub f: [Expr; 2],
    pub g: Expr,
    pub u_init: Expr,
    pub p_init: Expr,
}

#[derive(Debug, Clone)]
pub struct WaveProblem {
    pub mesh: StructuredMesh2D,
    pub c0: f64,
    pub rho0: f64,
    pub tau: f64,
    pub alpha: Expr,
    pub alpha_m: f64,
    pub f: [Expr; 2],
    pub g: Expr,
    pub u_init: Expr,
    pub p_init: Expr,
    pub facets: Vec<BoundaryFacet>,
    sigma: Vec<BoundaryFacet>,
    q0: Vec<BoundaryFacet>,
    qtau: Vec<BoundaryFacet>,
    residual_facets: Vec<BoundaryFacet>,
}

impl WaveProblem {
    pub fn new(mesh: StructuredMesh2D, p: WaveParams, sample_order: usize) -> Result<Self> {
        for (name, v) in [("c0", p.c0), ("rho0", p.rho0), ("tau", p.tau)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} = {v} must be positive")));
            }
        }
        let e = mesh.extent;
        if mesh.second_axis != SecondAxis::Time || (e.x0, e.x1, e.y0) != (0.0, 1.0, 0.0) || e.y1 != p.tau {
            return Err(Error::Config(format!(
                "wave mesh must cover [0,1] x [0,{}] in space-time",
                p.tau
            )));
        }
        let facets = classify_boundary_wave(&mesh)?;
        let pick = |t: BoundaryTag| facets.iter().filter(|f| f.tag == t).copied().collect::<Vec<_>>();
        let sigma = pick(SIGMA);
        let q0 = pick(Q0);
        let qtau = pick(QTAU);
        let pts = sample_facet_points(&mesh, &sigma, sample_order)?;
        let alpha_m = crate::elliptic::validate_alpha(&p.alpha, p.alpha_m, &pts)?;
        let residual_facets = sigma.iter().chain(&q0).copied().collect();
        Ok(WaveProblem {
            mesh,
            c0: p.c0,
            rho0: p.rho0,
            tau: p.tau,
            alpha: p.alpha,
            alpha_m,
            f: p.f,
            g: p.g,
            u_init: p.u_init,
            p_init: p.p_init,
            facets,
            sigma,
            q0,
            qtau,
            residual_facets,
        })
    }

    pub fn space(&self, degree: usize) -> Result<FeSpace> {
        FeSpace::new(self.mesh.clone(), degree, 2)
    }

    pub fn sigma(&self) -> &[BoundaryFacet] {
        &self.sigma
    }

    pub fn q0(&self) -> &[BoundaryFacet] {
        &self.q0
    }

    pub fn qtau(&self) -> &[BoundaryFacet] {
        &self.qtau
    }

    /// `β = (1 − α_M)/(4τe)`.
    pub fn beta(&self) -> f64 {
        (1.0 - self.alpha_m) / (4.0 * self.tau * E)
    }

    pub fn infsup_bound(&self) -> f64 {
        0.5 * self.beta()
    }

    pub fn stability_constant(&self) -> f64 {
        8.0 * self.tau * E / (1.0 - self.alpha_m)
    }

    pub fn v_form(&self) -> WaveVForm<'_> {
        WaveVForm { p: self }
    }

    pub fn t_jet(&self, jet: &[f64]) -> [f64; 2] {
        [
            jet[der(0, 1)] + self.c0 * jet[der(1, 0)],
            jet[der(1, 1)] + self.c0 * jet[der(0, 0)],
        ]
    }

    pub fn apply_t_spacetime(&self, xi: &FeFunction, cell: usize, rule: &QuadRule) -> Vec<[f64; 2]> {
        let s = &xi.space;
        let basis = s.eval_basis(cell, rule);
        let mut dofs = Vec::new();
        s.cell_dofs(cell, &mut dofs);
        let mut jet = [0.0; 6];
        (0..rule.len())
            .map(|q| {
                s.jet(&xi.coeffs, &dofs, &basis.tab, q, &mut jet);
                self.t_jet(&jet)
            })
            .collect()
    }

    /// `(tr⁺, tr⁻)` at a lateral point with scalar normal `n`.
    pub fn lateral_traces(&self, n: f64, jet: &[f64]) -> (f64, f64) {
        let k = (0.5 * self.c0).sqrt();
        (k * (jet[val(1)] + n * jet[val(0)]), k * (jet[val(1)] - n * jet[val(0)]))
    }

    pub fn traces_wave(&self, xi: &FeFunction, facet: &BoundaryFacet, rule: &QuadRule) -> Result<Vec<WaveTrace>> {
        let s = &xi.space;
        let tr = s.facet_trace(facet, rule);
        let mut dofs = Vec::new();
        s.cell_dofs(facet.cell, &mut dofs);
        let mut jet = [0.0; 6];
        let mut out = Vec::with_capacity(rule.len());
        for q in 0..rule.len() {
            s.jet(&xi.coeffs, &dofs, &tr.tab, q, &mut jet);
            out.push(match facet.tag {
                SIGMA => {
                    let (p, m) = self.lateral_traces(facet.normal[0], &jet);
                    WaveTrace::Sigma { plus: p, minus: m }
                }
                Q0 => WaveTrace::Q0([jet[val(0)], jet[val(1)]]),
                QTAU => WaveTrace::Qtau([jet[val(0)], jet[val(1)]]),
                t => return Err(Error::Classification(format!("facet tag {t:?} is not a wave tag"))),
            });
        }
        Ok(out)
    }

    /// Boundary flux `T_ν ξ`: `c₀(nξ₂, nξ₁)` on Σ, `ξ` on Q_τ, `−ξ` on Q₀.
    pub fn t_nu(&self, facet: &BoundaryFacet, jet: &[f64]) -> [f64; 2] {
        let n = facet.normal[0];
        match facet.tag {
            SIGMA => [self.c0 * n * jet[val(1)], self.c0 * n * jet[val(0)]],
            QTAU => [jet[val(0)], jet[val(1)]],
            _ => [-jet[val(0)], -jet[val(1)]],
        }
    }

    /// Multiplier `h± = (n*, ±1)/√(2c₀)` evaluated with the normal extension.
    pub fn multiplier(&self, nstar: f64, plus: bool) -> [f64; 2] {
        let k = 1.0 / (2.0 * self.c0).sqrt();
        [k * nstar, if plus { k } else { -k }]
    }

    fn dot_t(&self, a: &[f64], b: &[f64]) -> f64 {
        let t = self.t_jet(b);
        a[val(0)] * t[0] + a[val(1)] * t[1]
    }

    /// `a(η̂, ξ)` with `η̂ = (η, tr⁻η, tr_{Q₀}η)`.
    pub fn a_form(&self, eta: &FeFunction, xi: &FeFunction, order: usize) -> Result<f64> {
        let s = &xi.space;
        let i = integrate_cells(s, &[eta, xi], order, |q| Ok(self.dot_t(&q.jets[0], &q.jets[1])))?;
        let sg = integrate_facets(s, &self.sigma, &[eta, xi], order, |f, q| {
            let a = self.alpha.eval(q.x)?;
            let (_, em) = self.lateral_traces(f.normal[0], &q.jets[0]);
            let (xp, xm) = self.lateral_traces(f.normal[0], &q.jets[1]);
            Ok(em * (xm - a * xp))
        })?;
        let b = integrate_facets(s, &self.q0, &[eta, xi], order, |_, q| Ok(dot2(&q.jets[0], &q.jets[1])))?;
        Ok(i + sg + b)
    }

    /// `a*(ξ̂, η) = −∫ξᵀTη + ∫_Σ tr⁺ξ(tr⁺η − α tr⁻η) + ∫_{Q_τ} ξᵀη`
    /// with `ξ̂ = (ξ, tr⁺ξ, tr_{Q_τ}ξ)`.
    pub fn a_adjoint(&self, xi: &FeFunction, eta: &FeFunction, order: usize) -> Result<f64> {
        let s = &xi.space;
        let i = integrate_cells(s, &[xi, eta], order, |q| Ok(-self.dot_t(&q.jets[0], &q.jets[1])))?;
        let sg = integrate_facets(s, &self.sigma, &[xi, eta], order, |f, q| {
            let a = self.alpha.eval(q.x)?;
            let (xp, _) = self.lateral_traces(f.normal[0], &q.jets[0]);
            let (ep, em) = self.lateral_traces(f.normal[0], &q.jets[1]);
            Ok(xp * (ep - a * em))
        })?;
        let b = integrate_facets(s, &self.qtau, &[xi, eta], order, |_, q| {
            Ok(dot2(&q.jets[0], &q.jets[1]))
        })?;
        Ok(i + sg + b)
    }

    /// The three terms `∫ηᵀTξ`, `∫ξᵀTη`, `∫_∂Q ηᵀT_νξ`.
    pub fn ibp_terms(&self, eta: &FeFunction, xi: &FeFunction, order: usize) -> Result<[f64; 3]> {
        let s = &xi.space;
        let a = integrate_cells(s, &[eta, xi], order, |q| Ok(self.dot_t(&q.jets[0], &q.jets[1])))?;
        let b = integrate_cells(s, &[eta, xi], order, |q| Ok(self.dot_t(&q.jets[1], &q.jets[0])))?;
        let c = integrate_facets(s, &self.facets, &[eta, xi], order, |f, q| {
            let t = self.t_nu(f, &q.jets[1]);
            Ok(q.jets[0][val(0)] * t[0] + q.jets[0][val(1)] * t[1])
        })?;
        Ok([a, b, c])
    }

    pub fn ibp_residual(&self, eta: &FeFunction, xi: &FeFunction, order: usize) -> Result<f64> {
        let [a, b, c] = self.ibp_terms(eta, xi, order)?;
        Ok((a + b - c).abs())
    }

    /// Sides of `∫ξᵀTξ = ½‖ξ‖²_{Q_τ} − ½‖ξ‖²_{Q₀} + ½∫_Σ((tr⁺)² − (tr⁻)²)`.
    pub fn energy_identity(&self, xi: &FeFunction, order: usize) -> Result<(f64, f64)> {
        let s = &xi.space;
        let lhs = integrate_cells(s, &[xi], order, |q| Ok(self.dot_t(&q.jets[0], &q.jets[0])))?;
        let top = self.boundary_sq(xi, &self.qtau, order)?;
        let bottom = self.boundary_sq(xi, &self.q0, order)?;
        let lat = integrate_facets(s, &self.sigma, &[xi], order, |f, q| {
            let (p, m) = self.lateral_traces(f.normal[0], &q.jets[0]);
            Ok(p * p - m * m)
        })?;
        Ok((lhs, 0.5 * (top - bottom + lat)))
    }

    fn boundary_sq(&self, xi: &FeFunction, facets: &[BoundaryFacet], order: usize) -> Result<f64> {
        integrate_facets(&xi.space, facets, &[xi], order, |_, q| Ok(dot2(&q.jets[0], &q.jets[0])))
    }

    fn lateral_sq(&self, xi: &FeFunction, plus: bool, order: usize) -> Result<f64> {
        integrate_facets(&xi.space, &self.sigma, &[xi], order, |f, q| {
            let (p, m) = self.lateral_traces(f.normal[0], &q.jets[0]);
            Ok(if plus { p * p } else { m * m })
        })
    }

    /// `(τ‖tr_{Q_τ}ξ‖² + τ‖tr⁺ξ‖²_Σ, ‖ξ‖²_V)`.
    pub fn trace_energy(&self, xi: &FeFunction, order: usize) -> Result<(f64, f64)> {
        let lhs = self.tau * (self.boundary_sq(xi, &self.qtau, order)? + self.lateral_sq(xi, true, order)?);
        let v = crate::assembly::ls_functional(&self.v_form(), xi, order)?;
        Ok((lhs, v))
    }

    /// `(a(η̃, ξ), (1 − α_M)/(4τ)·‖η̃‖²_L)` for the exponentially weighted
    /// test tuple `η̃ = (e^{−t/τ}ξ, e^{−t/τ}tr⁻ξ, tr_{Q₀}ξ)`.
    pub fn weighted_coercivity(&self, xi: &FeFunction, order: usize) -> Result<(f64, f64)> {
        let s = &xi.space;
        let tau = self.tau;
        let w = |x: Point| (-x.t / tau).exp();
        let vol = integrate_cells(s, &[xi], order, |q| Ok(w(q.x) * self.dot_t(&q.jets[0], &q.jets[0])))?;
        let lat = integrate_facets(s, &self.sigma, &[xi], order, |f, q| {
            let a = self.alpha.eval(q.x)?;
            let (p, m) = self.lateral_traces(f.normal[0], &q.jets[0]);
            Ok(w(q.x) * m * (m - a * p))
        })?;
        let bottom = self.boundary_sq(xi, &self.q0, order)?;
        let lhs = vol + lat + bottom;
        let vol_l = integrate_cells(s, &[xi], order, |q| Ok(w(q.x).powi(2) * dot2(&q.jets[0], &q.jets[0])))?;
        let lat_l = integrate_facets(s, &self.sigma, &[xi], order, |f, q| {
            let (_, m) = self.lateral_traces(f.normal[0], &q.jets[0]);
            Ok(w(q.x).powi(2) * m * m)
        })?;
        let norm_l = vol_l + tau * lat_l + tau * bottom;
        Ok((lhs, (1.0 - self.alpha_m) / (4.0 * tau) * norm_l))
    }

    /// `‖l‖² = ‖f‖² + (2c₀/τ)‖g‖²_Σ + (1/τ)‖ξ_s‖²_{Q₀}` with `f = (c₀f₁, f₂)`.
    pub fn l_dual_norm(&self, space: &FeSpace, order: usize) -> Result<f64> {
        let z = space.zero();
        let i = integrate_cells(space, &[&z], order, |q| {
            Ok((self.c0 * self.f[0].eval(q.x)?).powi(2) + self.f[1].eval(q.x)?.powi(2))
        })?;
        let sg = integrate_facets(space, &self.sigma, &[&z], order, |_, q| {
            Ok(2.0 * self.c0 / self.tau * self.g.eval(q.x)?.powi(2))
        })?;
        let b = integrate_facets(space, &self.q0, &[&z], order, |_, q| {
            let s = self.initial(q.x)?;
            Ok((s[0] * s[0] + s[1] * s[1]) / self.tau)
        })?;
        Ok((i + sg + b).sqrt())
    }

    /// `ξ_s = (ρ₀c₀u_s, p_s)`.
    pub fn initial(&self, x: Point) -> Result<[f64; 2]> {
        Ok([self.rho0 * self.c0 * self.u_init.eval(x)?, self.p_init.eval(x)?])
    }
}

fn dot2(a: &[f64], b: &[f64]) -> f64 {
    a[val(0)] * b[val(0)] + a[val(1)] * b[val(1)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaveTrace {
    Sigma { plus: f64, minus: f64 },
    Q0([f64; 2]),
    Qtau([f64; 2]),
}

impl LeastSquaresForm for WaveProblem {
    fn n_components(&self) -> usize {
        2
    }

    fn interior(&self, x: Point, rows: &mut RowSink) -> Result<()> {
        let r = rows.row(1.0, self.c0 * self.f[0].eval(x)?);
        r[der(0, 1)] = 1.0;
        r[der(1, 0)] = self.c0;
        let r = rows.row(1.0, self.f[1].eval(x)?);
        r[der(1, 1)] = 1.0;
        r[der(0, 0)] = self.c0;
        Ok(())
    }

    fn boundary(&self, facet: &BoundaryFacet, x: Point, rows: &mut RowSink) -> Result<()> {
        let w = 1.0 / self.tau;
        if facet.tag == SIGMA {
            let a = self.alpha.eval(x)?;
            let n = facet.normal[0];
            let k = (0.5 * self.c0).sqrt();
            let r = rows.row(w, (2.0 * self.c0).sqrt() * self.g.eval(x)?);
            r[val(1)] = k * (1.0 - a);
            r[val(0)] = -k * (1.0 + a) * n;
        } else {
            let s = self.initial(x)?;
            rows.row(w, s[0])[val(0)] = 1.0;
            rows.row(w, s[1])[val(1)] = 1.0;
        }
        Ok(())
    }

    fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.residual_facets
    }
}

/// `‖ξ‖² + τ²‖Tξ‖² + τ‖tr⁻ξ‖²_Σ + τ‖ξ‖²_{Q₀}`.
pub struct WaveVForm<'a> {
    p: &'a WaveProblem,
}

impl LeastSquaresForm for WaveVForm<'_> {
    fn n_components(&self) -> usize {
        2
    }

    fn interior(&self, _: Point, rows: &mut RowSink) -> Result<()> {
        let p = self.p;
        rows.row(1.0, 0.0)[val(0)] = 1.0;
        rows.row(1.0, 0.0)[val(1)] = 1.0;
        let t2 = p.tau * p.tau;
        let r = rows.row(t2, 0.0);
        r[der(0, 1)] = 1.0;
        r[der(1, 0)] = p.c0;
        let r = rows.row(t2, 0.0);
        r[der(1, 1)] = 1.0;
        r[der(0, 0)] = p.c0;
        Ok(())
    }

    fn boundary(&self, facet: &BoundaryFacet, _: Point, rows: &mut RowSink) -> Result<()> {
        let p = self.p;
        if facet.tag == SIGMA {
            let k = (0.5 * p.c0).sqrt();
            let r = rows.row(p.tau, 0.0);
            r[val(1)] = k;
            r[val(0)] = -k * facet.normal[0];
        } else {
            rows.row(p.tau, 0.0)[val(0)] = 1.0;
            rows.row(p.tau, 0.0)[val(1)] = 1.0;
        }
        Ok(())
    }

    fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.p.residual_facets
    }
}
