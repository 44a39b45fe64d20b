//! Verification batteries: derivative oracle, identity suites on random
//! fields, stability and inf-sup certification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::advection::AdvectionProblem;
use crate::assembly::default_error_order;
use crate::elliptic::EllipticProblem;
use crate::error::Result;
use crate::expr::{Expr, Point};
use crate::problem::Problem;
use crate::quad_basis::{FeFunction, FeSpace};
use crate::solver::{EigOptions, EigResult};
use crate::wave::WaveProblem;

/// Relative tolerance for pointwise algebra.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Relative tolerance for identities between quadrature sums.
pub const QUADRATURE_TOL: f64 = 1e-10;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `measured ≤ bound + tolerance`.
    AtMost,
    /// `measured ≥ bound − tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub context: String,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, measured: f64, relation: Relation, bound: f64, tolerance: f64) -> Self {
        let passed = measured.is_finite()
            && match relation {
                Relation::AtMost => measured <= bound + tolerance,
                Relation::AtLeast => measured >= bound - tolerance,
            };
        CheckReport {
            name: name.into(),
            passed,
            measured,
            bound,
            tolerance,
            relation,
            context: String::new(),
        }
    }

    /// A relative residual that must vanish up to `tol`.
    pub fn identity(name: impl Into<String>, lhs: f64, rhs: f64, scale: f64, tol: f64) -> Self {
        let s = scale.abs().max(lhs.abs()).max(rhs.abs());
        let rel = if s > 0.0 { (lhs - rhs).abs() / s } else { 0.0 };
        Self::new(name, rel, Relation::AtMost, 0.0, tol)
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context = context.into();
        self
    }

    pub fn status(&self) -> &'static str {
        if self.passed {
            "pass"
        } else {
            "fail"
        }
    }
}

/// Central difference `(e(p + h) − e(p − h)) / 2h` along axis 0 = x,
/// 1 = y, 2 = t; `h` defaults to `1e-6·(1 + |coordinate|)`.
pub fn fd_derivative_oracle(e: &Expr, p: Point, axis: usize, h: Option<f64>) -> Result<f64> {
    let coord = match axis {
        0 => p.x,
        1 => p.y,
        _ => p.t,
    };
    let h = h.unwrap_or(1e-6 * (1.0 + coord.abs()));
    let shift = |s: f64| {
        let mut q = p;
        match axis {
            0 => q.x += s,
            1 => q.y += s,
            _ => q.t += s,
        }
        q
    };
    Ok((e.eval(shift(h))? - e.eval(shift(-h))?) / (2.0 * h))
}

pub fn space_context(space: &FeSpace) -> String {
    let m = space.mesh();
    format!("{}x{} Q{}", m.nx, m.ny, space.degree())
}

fn random_field(space: &FeSpace, rng: &mut ChaCha8Rng) -> FeFunction {
    let c = (0..space.n_dofs()).map(|_| rng.sample(StandardNormal)).collect();
    FeFunction::new(space.clone(), c)
}

fn normal3(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ]
}

/// Evaluates the identities of the given formulation on `n_random` fields
/// with standard-normal coefficients. Failures are reported, not raised.
pub fn run_identity_suite(problem: &Problem, space: &FeSpace, n_random: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = default_error_order(space);
    let ctx = space_context(space);
    let mut out = Vec::new();
    for k in 0..n_random {
        let u = random_field(space, &mut rng);
        let v = random_field(space, &mut rng);
        let checks = match problem {
            Problem::Advection(p) => advection_checks(p, &u, &v, order, k)?,
            Problem::Elliptic(p) => elliptic_checks(p, &u, &v, order, k, &mut rng)?,
            Problem::Wave(p) => wave_checks(p, &u, &v, order, k, &mut rng)?,
        };
        out.extend(checks.into_iter().map(|c| c.with_context(ctx.clone())));
    }
    Ok(out)
}

fn advection_checks(
    p: &AdvectionProblem,
    u: &FeFunction,
    v: &FeFunction,
    order: usize,
    k: usize,
) -> Result<Vec<CheckReport>> {
    let auu = p.a_wellposed(u, u, order)?;
    let n = p.norms(u, order)?;
    let flux = p.boundary_flux_norm_sq(u, order)?;
    let l2 = crate::assembly::integrate_cells(&u.space, &[u], order, |q| Ok(q.jets[0][0].powi(2)))?;
    let lower = p.rho0 * l2 + 0.5 * flux;
    let energy = n.l2_rho.powi(2) + 0.5 * flux;
    let avu = p.a_wellposed(v, u, order)?;
    let auv = p.a_adjoint(u, v, order)?;
    let scale = n.w_norm * p.norms(v, order)?.w_norm;
    Ok(vec![
        CheckReport::new(
            format!("advection.coercivity[{k}]"),
            auu,
            Relation::AtLeast,
            lower,
            QUADRATURE_TOL * lower,
        ),
        CheckReport::identity(format!("advection.energy[{k}]"), auu, energy, 0.0, QUADRATURE_TOL),
        CheckReport::identity(format!("advection.adjoint[{k}]"), auv, avu, scale, QUADRATURE_TOL),
    ])
}

fn elliptic_checks(
    p: &EllipticProblem,
    xi: &FeFunction,
    eta: &FeFunction,
    order: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CheckReport>> {
    let (l, r) = p.ibp_sides(xi, order)?;
    let ibp_scale = p.l2_plus_normal_sq(xi, order)?;
    let a = p.a_form(eta, xi, 0.0, order)?;
    let b = p.a_adjoint(xi, eta, 0.0, order)?;
    let [s, t, _] = normal3(rng);
    let lhs = s * s + t * t;
    let rhs = 0.5 * ((s - t).powi(2) + (s + t).powi(2));
    Ok(vec![
        CheckReport::identity(format!("elliptic.ibp[{k}]"), l, r, ibp_scale, QUADRATURE_TOL),
        CheckReport::identity(format!("elliptic.adjoint[{k}]"), a, b, 0.0, QUADRATURE_TOL),
        CheckReport::identity(format!("elliptic.squares[{k}]"), lhs, rhs, 0.0, ALGEBRAIC_TOL),
        CheckReport::new(
            format!("elliptic.squares_lower[{k}]"),
            lhs,
            Relation::AtLeast,
            0.5 * (s - t).powi(2),
            ALGEBRAIC_TOL * lhs,
        ),
    ])
}

fn wave_checks(
    p: &WaveProblem,
    xi: &FeFunction,
    eta: &FeFunction,
    order: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    let [a, b, c] = p.ibp_terms(eta, xi, order)?;
    out.push(CheckReport::identity(
        format!("wave.ibp[{k}]"),
        a + b,
        c,
        a.abs() + b.abs() + c.abs(),
        QUADRATURE_TOL,
    ));
    let fwd = p.a_form(eta, xi, order)?;
    let adj = p.a_adjoint(xi, eta, order)?;
    out.push(CheckReport::identity(
        format!("wave.adjoint[{k}]"),
        fwd,
        adj,
        0.0,
        QUADRATURE_TOL,
    ));
    let (l, r) = p.energy_identity(xi, order)?;
    out.push(CheckReport::identity(
        format!("wave.energy[{k}]"),
        l,
        r,
        0.0,
        QUADRATURE_TOL,
    ));
    let (te, vn) = p.trace_energy(xi, order)?;
    out.push(CheckReport::new(
        format!("wave.trace_energy[{k}]"),
        te,
        Relation::AtMost,
        vn,
        QUADRATURE_TOL * vn,
    ));
    let (wl, wr) = p.weighted_coercivity(xi, order)?;
    out.push(CheckReport::new(
        format!("wave.weighted_coercivity[{k}]"),
        wl,
        Relation::AtLeast,
        wr,
        QUADRATURE_TOL * wr,
    ));

    // Pointwise lateral splitting at facet midpoints.
    let mut worst: f64 = 0.0;
    for f in p.sigma() {
        let jet = xi.jet_at(f.at(0.0));
        let n = f.normal[0];
        let (plus, minus) = p.lateral_traces(n, &jet);
        let lhs = p.c0 * n * jet[0] * jet[3];
        let rhs = 0.5 * (plus * plus - minus * minus);
        let s = (plus * plus + minus * minus).max(f64::MIN_POSITIVE);
        worst = worst.max((lhs - rhs).abs() / s);
    }
    out.push(CheckReport::new(
        format!("wave.lateral_split[{k}]"),
        worst,
        Relation::AtMost,
        0.0,
        ALGEBRAIC_TOL,
    ));

    let [s, t, _] = normal3(rng);
    let lhs = 2.0 * s * t;
    let rhs = 0.5 * ((s + t).powi(2) - (s - t).powi(2));
    out.push(CheckReport::identity(
        format!("wave.polarization[{k}]"),
        lhs,
        rhs,
        s * s + t * t,
        ALGEBRAIC_TOL,
    ));
    let alpha = p.alpha_m * rng.random_range(-1.0..=1.0);
    let (a2, b2) = (s, t);
    let lhs = 0.25 * (b2 * b2 - a2 * a2) + 0.5 * a2 * (a2 - alpha * b2);
    let bound = 0.25 * (1.0 - p.alpha_m) * a2 * a2;
    out.push(CheckReport::new(
        format!("wave.boundary_lower[{k}]"),
        lhs,
        Relation::AtLeast,
        bound,
        ALGEBRAIC_TOL * (a2 * a2 + b2 * b2),
    ));
    Ok(out)
}

/// `‖u_h‖_V ≤ C‖l‖` for the discrete solution, with no slack.
pub fn run_stability_check(problem: &Problem, space: &FeSpace, tol: f64) -> Result<CheckReport> {
    let sol = problem.solve(space, None, tol)?;
    let bound = problem.stability_constant() * sol.l_dual_norm;
    Ok(CheckReport::new(
        format!("{}.stability", problem.kind().name()),
        sol.v_norm,
        Relation::AtMost,
        bound,
        0.0,
    )
    .with_context(space_context(space)))
}

/// `α_h ≥ bound − eig_tol` for the proven inf-sup constant.
pub fn certify_infsup(problem: &Problem, space: &FeSpace, opts: EigOptions) -> Result<(EigResult, CheckReport)> {
    let r = problem.infsup(space, None, opts)?;
    let report = CheckReport::new(
        format!("{}.infsup", problem.kind().name()),
        r.alpha(),
        Relation::AtLeast,
        problem.theory_bound(),
        opts.tol,
    )
    .with_context(space_context(space));
    Ok((r, report))
}
