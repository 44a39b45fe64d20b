//! Experiment drivers shared by the command-line tool and the acceptance
//! suite. Every table renders to byte-stable CSV.

use serde::Serialize;

use crate::assembly::default_assembly_order;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fracnorm::{
    gagliardo_half_norm, lipschitz_estimate, multiplier_ratio, normal_extension, test_functions, BoundaryCurve,
    BoundaryFn,
};
use crate::problem::{Problem, ProblemKind};
use crate::verify::{certify_infsup, run_identity_suite, run_stability_check, CheckReport, Relation};

/// Number of random fields per identity suite.
pub const IDENTITY_FIELDS: usize = 20;
pub const COARSE_PANELS: usize = 32;
pub const FINE_PANELS: usize = 128;
pub const MAX_DRIFT: f64 = 0.1;
pub const CONSTANT_SEMINORM_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub dofs: usize,
    pub residual_dual_norm: f64,
    pub v_norm: f64,
    pub l_dual_norm: f64,
    pub stability_ok: bool,
    pub config_hash: String,
}

pub fn run_solve(cfg: &RunConfig) -> Result<SolveSummary> {
    let p = cfg.build_problem(cfg.nx, cfg.ny)?;
    let s = p.space(cfg.degree)?;
    let sol = p.solve(&s, cfg.quad_order, cfg.cg_tol)?;
    Ok(SolveSummary {
        dofs: sol.dofs,
        residual_dual_norm: sol.residual_dual_norm,
        v_norm: sol.v_norm,
        l_dual_norm: sol.l_dual_norm,
        stability_ok: sol.stability_ok(p.stability_constant()),
        config_hash: cfg.hash(),
    })
}

impl SolveSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub err_l2: f64,
    pub err_v: f64,
    pub rate_l2: Option<f64>,
    pub rate_v: Option<f64>,
}

fn rate(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0).then(|| (coarse / fine).log2())
}

fn level_size(cfg: &RunConfig, level: usize) -> (usize, usize) {
    (cfg.nx << level, cfg.ny << level)
}

/// Errors against the configured exact solution on `levels` meshes, each
/// doubling the previous one in both directions.
pub fn run_convergence(cfg: &RunConfig, levels: usize) -> Result<Vec<ConvergenceRow>> {
    let exact = cfg
        .exact_solution()
        .ok_or_else(|| Error::Config("convergence needs the exact solution keys".into()))?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let (nx, ny) = level_size(cfg, level);
        let p = cfg.build_problem(nx, ny)?;
        let s = p.space(cfg.degree)?;
        let sol = p.solve(&s, cfg.quad_order, cfg.cg_tol)?;
        let (err_l2, err_v) = p.errors(&sol.field, &exact, None)?;
        let h = p.mesh().h();
        let prev = rows.last();
        rows.push(ConvergenceRow {
            level,
            h: h[0].max(h[1]),
            dofs: sol.dofs,
            err_l2,
            err_v,
            rate_l2: prev.and_then(|r| rate(r.err_l2, err_l2)),
            rate_v: prev.and_then(|r| rate(r.err_v, err_v)),
        });
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("level,h,dofs,err_l2,err_v,rate_l2,rate_v\n");
    for r in rows {
        out += &format!(
            "{},{},{},{},{},{},{}\n",
            r.level,
            r.h,
            r.dofs,
            r.err_l2,
            r.err_v,
            opt(r.rate_l2),
            opt(r.rate_v)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfsupRow {
    pub level: usize,
    pub dofs: usize,
    pub alpha_h: f64,
    pub iterations: usize,
    /// Proven lower bound for the formulation.
    pub theory_bound: f64,
    pub pass: bool,
}

pub fn run_infsup(cfg: &RunConfig, levels: usize) -> Result<Vec<InfsupRow>> {
    (0..levels)
        .map(|level| {
            let (nx, ny) = level_size(cfg, level);
            let p = cfg.build_problem(nx, ny)?;
            let s = p.space(cfg.degree)?;
            let (r, report) = certify_infsup(&p, &s, cfg.eig_options())?;
            Ok(InfsupRow {
                level,
                dofs: s.n_dofs(),
                alpha_h: r.alpha(),
                iterations: r.iterations,
                theory_bound: p.theory_bound(),
                pass: report.passed,
            })
        })
        .collect()
}

pub fn infsup_csv(rows: &[InfsupRow]) -> String {
    let mut out = String::from("level,dofs,alpha_h,iterations,paper_bound,pass\n");
    for r in rows {
        out += &format!(
            "{},{},{},{},{},{}\n",
            r.level, r.dofs, r.alpha_h, r.iterations, r.theory_bound, r.pass
        );
    }
    out
}

pub fn run_illposed(cfg: &RunConfig, n_max: usize) -> Result<Vec<crate::advection::IllposedRow>> {
    let p = cfg.build_problem(cfg.nx, cfg.ny)?;
    let Problem::Advection(a) = &p else {
        return Err(Error::Config(
            "the ill-posedness study is defined for advection only".into(),
        ));
    };
    let s = p.space(cfg.degree)?;
    a.illposed_table(&s, n_max, cfg.quad_order.unwrap_or_else(|| default_assembly_order(&s)))
}

pub fn illposed_csv(rows: &[crate::advection::IllposedRow]) -> String {
    let mut out = String::from("n,ratio,l2_norm,w_norm,envelope\n");
    for r in rows {
        out += &format!("{},{},{},{},{}\n", r.n, r.ratio, r.l2_norm, r.w_norm, r.envelope);
    }
    out
}

/// `(max/min envelope, ratio(n_max)/ratio(1))`.
pub fn illposed_summary(rows: &[crate::advection::IllposedRow]) -> (f64, f64) {
    let env = rows.iter().map(|r| r.envelope);
    let hi = env.clone().fold(f64::MIN, f64::max);
    let lo = env.fold(f64::MAX, f64::min);
    let decay = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => b.ratio / a.ratio,
        _ => f64::NAN,
    };
    (hi / lo, decay)
}

/// Identity suite plus the stability bound for the configured problem.
pub fn run_verify(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let p = cfg.build_problem(cfg.nx, cfg.ny)?;
    let s = p.space(cfg.degree)?;
    let hash = cfg.hash();
    let mut out = run_identity_suite(&p, &s, IDENTITY_FIELDS, cfg.seed)?;
    out.push(run_stability_check(&p, &s, cfg.cg_tol)?);
    for c in &mut out {
        c.context = format!("{} {}", c.context, &hash[..12]);
    }
    Ok(out)
}

/// Multiplier and seminorm checks on the boundary of `[0,1] × [0,τ]`.
pub fn run_fracnorm(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let tau = if cfg.problem == ProblemKind::Wave { cfg.tau } else { 1.0 };
    let coarse = BoundaryCurve::new(tau, COARSE_PANELS)?;
    let fine = BoundaryCurve::new(tau, FINE_PANELS)?;
    let mut out = Vec::new();
    for (curve, n) in [(&coarse, COARSE_PANELS), (&fine, FINE_PANELS)] {
        let c = gagliardo_half_norm(curve, &BoundaryFn::scalar(|_, _| 1.0))?;
        out.push(CheckReport::new(
            format!("fracnorm.constant_seminorm[{n}]"),
            c.semi_sq.sqrt(),
            Relation::AtMost,
            0.0,
            CONSTANT_SEMINORM_TOL,
        ));
    }
    let lip = lipschitz_estimate(&fine, &normal_extension(), 512)?;
    out.push(CheckReport::new(
        "fracnorm.extension_lipschitz",
        lip,
        Relation::AtMost,
        2.0,
        1e-12,
    ));
    let fns_c = test_functions(&coarse);
    let fns_f = test_functions(&fine);
    for ((name, uc), (_, uf)) in fns_c.iter().zip(&fns_f) {
        for plus in [true, false] {
            let rc = multiplier_ratio(&coarse, uc, plus, cfg.c0)?;
            let rf = multiplier_ratio(&fine, uf, plus, cfg.c0)?;
            let sign = if plus { "plus" } else { "minus" };
            out.push(CheckReport::new(
                format!("fracnorm.drift[{name},{sign}]"),
                (rf - rc).abs() / rf,
                Relation::AtMost,
                MAX_DRIFT,
                0.0,
            ));
        }
    }
    let ctx = format!("tau={tau} c0={} {}", cfg.c0, &cfg.hash()[..12]);
    for c in &mut out {
        c.context = ctx.clone();
    }
    Ok(out)
}

pub fn checks_csv(reports: &[CheckReport]) -> String {
    let mut out = String::from("check,status,measured,bound,tolerance\n");
    for r in reports {
        out += &format!("{},{},{},{},{}\n", r.name, r.status(), r.measured, r.bound, r.tolerance);
    }
    out
}
