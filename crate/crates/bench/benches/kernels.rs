use criterion::{criterion_group, criterion_main, Criterion};
use friedrichs::assembly::assemble_ls;
use friedrichs::config::RunConfig;
use friedrichs::fracnorm::{gagliardo_half_norm, BoundaryCurve, BoundaryFn};
use friedrichs::solver::{min_gen_eig, EigOptions, SpdFactor};

const ELLIPTIC: &str = "problem = elliptic\nnx = 16\nny = 16\ndegree = 2\nalpha = 0\nf2 = 1\n";
const ADVECTION: &str = "problem = advection\nnx = 16\nny = 16\nbeta_x = 1\nbeta_y = 0\nrho = 1\n";

fn kernels(c: &mut Criterion) {
    let cfg = RunConfig::parse(ELLIPTIC).unwrap();
    let p = cfg.build_problem(cfg.nx, cfg.ny).unwrap();
    let s = p.space(cfg.degree).unwrap();
    c.bench_function("assemble elliptic Q2 16x16", |b| {
        b.iter(|| assemble_ls(&s, p.residual_form(), 4).unwrap())
    });
    let sys = p.assemble(&s, 4).unwrap();
    c.bench_function("skyline factor elliptic Q2 16x16", |b| {
        b.iter(|| SpdFactor::new(&sys.operator).unwrap())
    });

    let cfg = RunConfig::parse(ADVECTION).unwrap();
    let p = cfg.build_problem(cfg.nx, cfg.ny).unwrap();
    let s = p.space(1).unwrap();
    let sys = p.assemble(&s, 3).unwrap();
    c.bench_function("min_gen_eig advection Q1 16x16", |b| {
        b.iter(|| min_gen_eig(&sys.operator, &sys.v_gram, EigOptions::default()).unwrap())
    });

    let curve = BoundaryCurve::new(1.0, 64).unwrap();
    let u = BoundaryFn::scalar(|s, _| (2.0 * s).sin());
    c.bench_function("gagliardo norm 64 panels", |b| {
        b.iter(|| gagliardo_half_norm(&curve, &u).unwrap())
    });
}

criterion_group!(benches, kernels);
criterion_main!(benches);
