//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

use std::time::{Duration, Instant};

use friedrichs::config::RunConfig;
use friedrichs::experiments::{
    checks_csv, convergence_csv, illposed_summary, infsup_csv, run_convergence, run_fracnorm, run_illposed, run_infsup,
    run_solve, run_verify, IDENTITY_FIELDS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ADVECTION: &str = include_str!("../../../configs/advection_manufactured.cfg");
const ELLIPTIC: &str = include_str!("../../../configs/elliptic_manufactured.cfg");
const WAVE: &str = include_str!("../../../configs/wave_plane.cfg");
const WAVE_CONSTANT: &str = include_str!("../../../configs/wave_constant.cfg");
const ILLPOSED: &str = include_str!("../../../configs/illposed.cfg");

const INFSUP_SLACK: f64 = 1e-4;
const MONOTONE_SLACK: f64 = 1e-10;
const INFSUP_LEVEL_BUDGET: Duration = Duration::from_secs(60);
const ILLPOSED_BUDGET: Duration = Duration::from_secs(300);
const SUITE_BUDGET: Duration = Duration::from_secs(60);
const RATE_Q1: f64 = 0.9;
const RATE_Q2: f64 = 1.9;
const EXACT_TOL: f64 = 1e-10;
const RANDOM_CONFIGS: usize = 5;

type Outcome = Result<(bool, String), friedrichs::Error>;

fn cfg(base: &str, overrides: &[(&str, &str)]) -> RunConfig {
    let mut c = RunConfig::parse(base).expect("bundled config is valid");
    for (k, v) in overrides {
        c = c.with_value(k, v).expect("override is valid");
    }
    c
}

/// Inf-sup constants on 8², 16², 32² for Q1 and Q2 against `bound`.
fn infsup_series(base: &RunConfig, bound: f64) -> Outcome {
    let mut ok = true;
    let mut worst = f64::INFINITY;
    let mut slowest = Duration::ZERO;
    for degree in ["1", "2"] {
        let mut prev = f64::INFINITY;
        for level in 0..3 {
            let size = (8usize << level).to_string();
            let c = base
                .with_value("degree", degree)?
                .with_value("nx", &size)?
                .with_value("ny", &size)?;
            let start = Instant::now();
            let row = run_infsup(&c, 1)?.remove(0);
            slowest = slowest.max(start.elapsed());
            ok &= row.alpha_h >= bound - INFSUP_SLACK && row.alpha_h <= prev + MONOTONE_SLACK;
            worst = worst.min(row.alpha_h);
            prev = row.alpha_h;
        }
    }
    ok &= slowest <= INFSUP_LEVEL_BUDGET;
    Ok((
        ok,
        format!("min alpha_h = {worst:.6} vs bound {bound:.6} - {INFSUP_SLACK:e}; slowest level {slowest:.1?}"),
    ))
}

fn criterion_1() -> Outcome {
    infsup_series(&cfg(ADVECTION, &[]), 0.5)
}

fn criterion_2() -> Outcome {
    let (a, da) = infsup_series(&cfg(ELLIPTIC, &[("alpha", "0")]), 1.0 / 3.0)?;
    let (b, db) = infsup_series(&cfg(ELLIPTIC, &[("alpha", "0.5")]), 1.0 / 6.0)?;
    Ok((a && b, format!("alpha=0: {da}; alpha=0.5: {db}")))
}

fn criterion_3() -> Outcome {
    let e = std::f64::consts::E;
    let (a, da) = infsup_series(&cfg(WAVE, &[("alpha", "0")]), 1.0 / (8.0 * e))?;
    let (b, db) = infsup_series(&cfg(WAVE, &[("alpha", "0.5")]), 1.0 / (16.0 * e))?;
    Ok((a && b, format!("alpha=0: {da}; alpha=0.5: {db}")))
}

fn n(rng: &mut ChaCha8Rng) -> String {
    format!("{:.6}", rng.random_range(-2.0..2.0))
}

fn smooth(rng: &mut ChaCha8Rng) -> String {
    format!(
        "({})*sin({}*x + {}*y + {}) + ({})",
        n(rng),
        n(rng),
        n(rng),
        n(rng),
        n(rng)
    )
}

fn smooth_xt(rng: &mut ChaCha8Rng) -> String {
    smooth(rng).replace('y', "t")
}

fn random_configs(seed: u64) -> Vec<RunConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..RANDOM_CONFIGS {
        let a = format!(
            "problem = advection\nnx = 16\nny = 16\nbeta_x = 1\nbeta_y = 0\nrho = 1\nf = {}\ng = {}\n",
            smooth(&mut rng),
            smooth(&mut rng)
        );
        let e = format!(
            "problem = elliptic\nnx = 16\nny = 16\nalpha = 0.5*sin({}*x + {}*y)\nalpha_m = 0.5\nf1_x = {}\nf1_y = {}\nf2 = {}\ng = {}\n",
            n(&mut rng),
            n(&mut rng),
            smooth(&mut rng),
            smooth(&mut rng),
            smooth(&mut rng),
            smooth(&mut rng)
        );
        let w = format!(
            "problem = wave\nnx = 16\nny = 16\nalpha = {:.6}\nalpha_m = 0.5\nf1_x = {}\nf2 = {}\ng_sigma = {}\nu_init = {}\np_init = {}\n",
            rng.random_range(-0.5..0.5),
            smooth_xt(&mut rng),
            smooth_xt(&mut rng),
            smooth_xt(&mut rng),
            smooth_xt(&mut rng),
            smooth_xt(&mut rng)
        );
        for text in [a, e, w] {
            out.push(RunConfig::parse(&text).expect("generated config is valid"));
        }
    }
    out
}

fn criterion_4() -> Outcome {
    let mut configs = vec![
        cfg(ADVECTION, &[("nx", "16"), ("ny", "16")]),
        cfg(ELLIPTIC, &[("nx", "16"), ("ny", "16")]),
        cfg(WAVE, &[("nx", "16"), ("ny", "16")]),
    ];
    configs.extend(random_configs(42));
    let mut violations = 0;
    let mut tightest: f64 = 0.0;
    for c in &configs {
        let s = run_solve(c)?;
        let p = c.build_problem(c.nx, c.ny)?;
        let ratio = s.v_norm / (p.stability_constant() * s.l_dual_norm);
        tightest = tightest.max(ratio);
        if !s.stability_ok {
            violations += 1;
        }
    }
    Ok((
        violations == 0,
        format!(
            "{} configs, {violations} violations, largest ||u_h||_V / (C ||l||) = {tightest:.4}",
            configs.len()
        ),
    ))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let rows = run_illposed(&cfg(ILLPOSED, &[]), 8)?;
    let t = start.elapsed();
    let (spread, decay) = illposed_summary(&rows);
    Ok((
        decay <= 0.3 && spread <= 3.0 && t <= ILLPOSED_BUDGET,
        format!("ratio(8)/ratio(1) = {decay:.4} (<= 0.3), envelope max/min = {spread:.4} (<= 3), {t:.1?}"),
    ))
}

fn constant_config(problem: &str) -> RunConfig {
    let text = match problem {
        "advection" => "problem = advection\nbeta_x = 1\nbeta_y = 0\nrho = 1\nf = 1\ng = 1\nexact_u = 1\n",
        "elliptic" => "problem = elliptic\nalpha = 0\nf2 = 1\ng = 0.5\nexact_u_x = 0\nexact_u_y = 0\nexact_p = 1\n",
        _ => WAVE_CONSTANT,
    };
    cfg(text, &[("nx", "8"), ("ny", "8"), ("degree", "1")])
}

fn criterion_6() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, base) in [("advection", ADVECTION), ("elliptic", ELLIPTIC), ("wave", WAVE)] {
        for (degree, target) in [("1", RATE_Q1), ("2", RATE_Q2)] {
            let rows = run_convergence(&cfg(base, &[("degree", degree), ("nx", "8"), ("ny", "8")]), 4)?;
            let rate = rows.last().and_then(|r| r.rate_v).unwrap_or(f64::NAN);
            ok &= rate >= target;
            notes.push(format!("{name} Q{degree} {rate:.3}"));
        }
        let rows = run_convergence(&constant_config(name), 4)?;
        let worst = rows.iter().map(|r| r.err_v.max(r.err_l2)).fold(0.0, f64::max);
        ok &= worst <= EXACT_TOL;
        notes.push(format!("{name} constant {worst:.1e}"));
    }
    Ok((ok, format!("final V-rates / exact errors: {}", notes.join(", "))))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    let mut failed = 0;
    for c in [
        cfg(ADVECTION, &[]),
        cfg(ELLIPTIC, &[("alpha", "0")]),
        cfg(ELLIPTIC, &[("alpha", "0.5*x")]),
        cfg(WAVE, &[("alpha", "0")]),
        cfg(WAVE, &[("alpha", "0.5")]),
    ] {
        let reports = run_verify(&c)?;
        total += reports.len();
        failed += reports.iter().filter(|r| !r.passed).count();
    }
    let t = start.elapsed();
    Ok((
        failed == 0 && total > 0 && t <= SUITE_BUDGET,
        format!("{total} checks over {IDENTITY_FIELDS} fields per suite, {failed} failed, {t:.1?}"),
    ))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let reports = run_fracnorm(&cfg(WAVE, &[]))?;
    let t = start.elapsed();
    let drift = reports
        .iter()
        .filter(|r| r.name.contains("drift"))
        .map(|r| r.measured)
        .fold(0.0, f64::max);
    let constant = reports
        .iter()
        .filter(|r| r.name.contains("constant"))
        .map(|r| r.measured)
        .fold(0.0, f64::max);
    Ok((
        reports.iter().all(|r| r.passed) && t <= SUITE_BUDGET,
        format!("max drift 32->128 panels {drift:.2e} (< 0.1), constant seminorm {constant:.1e} (<= 1e-13), {t:.1?}"),
    ))
}

fn criterion_9() -> Outcome {
    let run = || -> Result<Vec<String>, friedrichs::Error> {
        let a = cfg(ADVECTION, &[("degree", "1")]);
        Ok(vec![
            infsup_csv(&run_infsup(&cfg(WAVE, &[("degree", "1")]), 2)?),
            convergence_csv(&run_convergence(&a, 2)?),
            checks_csv(&run_verify(&cfg(ELLIPTIC, &[("degree", "1")]))?),
            checks_csv(&run_fracnorm(&cfg(WAVE, &[]))?),
        ])
    };
    let first = run()?;
    let second = run()?;
    let bytes: usize = first.iter().map(String::len).sum();
    Ok((
        first == second,
        format!("{} CSV outputs, {bytes} bytes, identical across runs", first.len()),
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("inf-sup certification, advection", criterion_1),
        ("inf-sup certification, elliptic", criterion_2),
        ("inf-sup certification, wave", criterion_3),
        ("stability bounds", criterion_4),
        ("ill-posedness demonstration", criterion_5),
        ("manufactured convergence", criterion_6),
        ("identity suites", criterion_7),
        ("boundary multiplier drift", criterion_8),
        ("determinism", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let (status, detail) = match f() {
            Ok((true, d)) => ("PASS", d),
            Ok((false, d)) => ("FAIL", d),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("{status} {} {name}: {detail}", i + 1);
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
