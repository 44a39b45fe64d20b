//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::advection::{AdvectionParams, AdvectionProblem};
use crate::elliptic::{EllipticParams, EllipticProblem};
use crate::error::{Error, Result};
use crate::expr::{parse, BinOp, Expr};
use crate::mesh::{build_mesh, Rect, StructuredMesh2D};
use crate::problem::{Problem, ProblemKind};
use crate::solver::EigOptions;
use crate::wave::{WaveParams, WaveProblem};

pub const KEYS: &[&str] = &[
    "problem",
    "nx",
    "ny",
    "degree",
    "quad_order",
    "beta_x",
    "beta_y",
    "rho",
    "rho0",
    "f",
    "g",
    "alpha",
    "alpha_m",
    "f1_x",
    "f1_y",
    "f2",
    "c0",
    "tau",
    "p_init",
    "u_init",
    "g_sigma",
    "cg_tol",
    "eig_tol",
    "seed",
    "output",
    "exact_u",
    "exact_u_x",
    "exact_u_y",
    "exact_p",
];

const EXPR_KEYS: &[&str] = &[
    "beta_x",
    "beta_y",
    "rho",
    "f",
    "g",
    "alpha",
    "f1_x",
    "f1_y",
    "f2",
    "p_init",
    "u_init",
    "g_sigma",
    "exact_u",
    "exact_u_x",
    "exact_u_y",
    "exact_p",
];

/// Points used to validate coefficient bounds.
const SAMPLE_ORDER: usize = 4;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub nx: usize,
    pub ny: usize,
    pub degree: usize,
    pub quad_order: Option<usize>,
    pub c0: f64,
    pub tau: f64,
    pub rho0: Option<f64>,
    pub alpha_m: Option<f64>,
    pub cg_tol: f64,
    pub eig_tol: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    exprs: BTreeMap<String, Expr>,
    raw: BTreeMap<String, String>,
}

fn line_err(line: usize, message: impl Into<String>) -> Error {
    Error::ConfigLine {
        line,
        message: message.into(),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = BTreeMap::new();
        let mut lines = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| line_err(n, format!("expected `key = value`, found `{content}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(line_err(n, format!("unknown key `{k}`")));
            }
            if v.is_empty() {
                return Err(line_err(n, format!("empty value for `{k}`")));
            }
            if raw.insert(k.to_string(), v.to_string()).is_some() {
                return Err(line_err(n, format!("duplicate key `{k}`")));
            }
            lines.insert(k.to_string(), n);
        }
        let line_of = |k: &str| lines.get(k).copied().unwrap_or(0);
        let get = |k: &str| raw.get(k).map(String::as_str);

        fn num<T: std::str::FromStr>(v: Option<&str>, k: &str, line: usize) -> Result<Option<T>> {
            v.map(|s| {
                s.parse::<T>()
                    .map_err(|_| line_err(line, format!("`{k}` expects a number, found `{s}`")))
            })
            .transpose()
        }

        let problem: ProblemKind = get("problem")
            .ok_or_else(|| Error::Config("missing required key `problem`".into()))?
            .parse()
            .map_err(|m: String| line_err(line_of("problem"), m))?;
        let mut exprs = BTreeMap::new();
        for &k in EXPR_KEYS {
            if let Some(v) = get(k) {
                let e = parse(v).map_err(|e| line_err(line_of(k), format!("`{k}`: {e}")))?;
                exprs.insert(k.to_string(), e);
            }
        }
        let cfg = RunConfig {
            problem,
            nx: num(get("nx"), "nx", line_of("nx"))?.unwrap_or(8),
            ny: num(get("ny"), "ny", line_of("ny"))?.unwrap_or(8),
            degree: num(get("degree"), "degree", line_of("degree"))?.unwrap_or(1),
            quad_order: num(get("quad_order"), "quad_order", line_of("quad_order"))?,
            c0: num(get("c0"), "c0", line_of("c0"))?.unwrap_or(1.0),
            tau: num(get("tau"), "tau", line_of("tau"))?.unwrap_or(1.0),
            rho0: num(get("rho0"), "rho0", line_of("rho0"))?,
            alpha_m: num(get("alpha_m"), "alpha_m", line_of("alpha_m"))?,
            cg_tol: num(get("cg_tol"), "cg_tol", line_of("cg_tol"))?.unwrap_or(crate::solver::DEFAULT_SOLVE_TOL),
            eig_tol: num(get("eig_tol"), "eig_tol", line_of("eig_tol"))?.unwrap_or(EigOptions::default().tol),
            seed: num(get("seed"), "seed", line_of("seed"))?.unwrap_or(crate::verify::DEFAULT_SEED),
            output: get("output").map(PathBuf::from),
            exprs,
            raw: raw.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.degree) {
            return Err(Error::Config(format!("degree = {} must be 1 or 2", self.degree)));
        }
        if let Some(q) = self.quad_order {
            if q == 0 || q > crate::quad_basis::MAX_GAUSS_POINTS {
                return Err(Error::Config(format!("quad_order = {q} is out of range")));
            }
        }
        for (k, v) in [("cg_tol", self.cg_tol), ("eig_tol", self.eig_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{k} = {v} must lie in (0, 1)")));
            }
        }
        // Coefficient bounds and boundary classification are checked by
        // building the problem once at the configured resolution.
        self.build_problem(self.nx, self.ny).map(|_| ()).map_err(|e| match e {
            Error::Eval(e) => Error::Config(format!("data cannot be evaluated: {e}")),
            e => e,
        })
    }

    pub fn expr(&self, key: &str) -> Option<&Expr> {
        self.exprs.get(key)
    }

    fn expr_or_zero(&self, key: &str) -> Expr {
        self.exprs.get(key).cloned().unwrap_or(Expr::num(0.0))
    }

    fn required(&self, key: &str) -> Result<Expr> {
        self.exprs
            .get(key)
            .cloned()
            .ok_or_else(|| Error::Config(format!("{} requires `{key}`", self.problem.name())))
    }

    fn wave_density(&self) -> f64 {
        self.rho0.unwrap_or(1.0)
    }

    pub fn mesh(&self, nx: usize, ny: usize) -> Result<StructuredMesh2D> {
        match self.problem {
            ProblemKind::Wave => StructuredMesh2D::space_time(nx, ny, self.tau),
            _ => build_mesh(nx, ny, Rect::unit()),
        }
    }

    /// The configured problem on an `nx × ny` mesh; for the wave problem
    /// `ny` counts time slabs.
    pub fn build_problem(&self, nx: usize, ny: usize) -> Result<Problem> {
        let mesh = self.mesh(nx, ny)?;
        Ok(match self.problem {
            ProblemKind::Advection => {
                let mut p = AdvectionParams::new(
                    [self.required("beta_x")?, self.required("beta_y")?],
                    self.exprs.get("rho").cloned().unwrap_or(Expr::num(1.0)),
                    self.expr_or_zero("f"),
                    self.expr_or_zero("g"),
                );
                p.rho0 = self.rho0;
                Problem::Advection(AdvectionProblem::new(mesh, p, SAMPLE_ORDER)?)
            }
            ProblemKind::Elliptic => {
                let p = EllipticParams {
                    alpha: self.expr_or_zero("alpha"),
                    alpha_m: self.alpha_m,
                    f: [
                        self.expr_or_zero("f1_x"),
                        self.expr_or_zero("f1_y"),
                        self.expr_or_zero("f2"),
                    ],
                    g: self.expr_or_zero("g"),
                };
                Problem::Elliptic(EllipticProblem::new(mesh, p, SAMPLE_ORDER)?)
            }
            ProblemKind::Wave => {
                let g = self
                    .exprs
                    .get("g_sigma")
                    .or(self.exprs.get("g"))
                    .cloned()
                    .unwrap_or(Expr::num(0.0));
                let p = WaveParams {
                    c0: self.c0,
                    rho0: self.wave_density(),
                    tau: self.tau,
                    alpha: self.expr_or_zero("alpha"),
                    alpha_m: self.alpha_m,
                    f: [self.expr_or_zero("f1_x"), self.expr_or_zero("f2")],
                    g,
                    u_init: self.expr_or_zero("u_init"),
                    p_init: self.expr_or_zero("p_init"),
                };
                Problem::Wave(WaveProblem::new(mesh, p, SAMPLE_ORDER)?)
            }
        })
    }

    /// Exact solution per component, when supplied.
    pub fn exact_solution(&self) -> Option<Vec<Expr>> {
        let e = |k: &str| self.exprs.get(k).cloned();
        match self.problem {
            ProblemKind::Advection => Some(vec![e("exact_u")?]),
            ProblemKind::Elliptic => Some(vec![e("exact_u_x")?, e("exact_u_y")?, e("exact_p")?]),
            ProblemKind::Wave => {
                let k = Expr::num(self.wave_density() * self.c0);
                let u = Expr::Bin(BinOp::Mul, Box::new(k), Box::new(e("exact_u")?));
                Some(vec![u, e("exact_p")?])
            }
        }
    }

    pub fn eig_options(&self) -> EigOptions {
        EigOptions {
            tol: self.eig_tol,
            seed: self.seed,
            ..EigOptions::default()
        }
    }

    /// Canonical `key=value` listing, sorted by key.
    pub fn canonical(&self) -> String {
        self.raw.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// SHA-256 of the canonical listing, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Same configuration with one key replaced; used to derive variants.
    pub fn with_value(&self, key: &str, value: &str) -> Result<Self> {
        let mut raw = self.raw.clone();
        raw.insert(key.to_string(), value.to_string());
        Self::parse(&raw.iter().map(|(k, v)| format!("{k} = {v}\n")).collect::<String>())
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    RunConfig::parse(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# inflow from the left
problem = advection
nx = 4
ny = 4
degree = 1
beta_x = 1
beta_y = 0
rho = 1
f = 0
g = sin(pi*y)
";

    #[test]
    fn minimal_advection() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.problem, ProblemKind::Advection);
        assert_eq!((c.nx, c.ny, c.degree), (4, 4, 1));
        assert_eq!(c.seed, 42);
        assert!(c.exact_solution().is_none());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn hash_ignores_layout_and_comments() {
        let a = RunConfig::parse(MINIMAL).unwrap();
        let shuffled: String = MINIMAL.lines().rev().map(|l| format!("  {l}  # note\n")).collect();
        let b = RunConfig::parse(&shuffled).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), a.with_value("nx", "8").unwrap().hash());
    }

    #[test]
    fn rejects_unknown_key_with_line() {
        let err = RunConfig::parse("problem = advection\nbeta_x = 1\nbeta_y = 0\nspeed = 3\n").unwrap_err();
        assert!(matches!(err, Error::ConfigLine { line: 4, .. }), "{err}");
    }

    #[test]
    fn rejects_bad_expression_with_line() {
        let err = RunConfig::parse("problem = advection\nbeta_x = 1 +\nbeta_y = 0\n").unwrap_err();
        assert!(matches!(err, Error::ConfigLine { line: 2, .. }), "{err}");
    }

    #[test]
    fn rejects_invalid_coefficients() {
        let e = RunConfig::parse("problem = elliptic\nalpha = 1.0\n").unwrap_err();
        assert_eq!(e.kind(), crate::error::ErrorKind::Config, "{e}");
        let e = RunConfig::parse(&MINIMAL.replace("rho = 1", "rho = -1")).unwrap_err();
        assert_eq!(e.kind(), crate::error::ErrorKind::Config, "{e}");
        let e = RunConfig::parse(&MINIMAL.replace("rho = 1", "rho = sqrt(x - 2)")).unwrap_err();
        assert_eq!(e.kind(), crate::error::ErrorKind::Config, "{e}");
    }

    #[test]
    fn wave_exact_solution_is_scaled() {
        let c = RunConfig::parse("problem = wave\nc0 = 2\nrho0 = 3\nexact_u = 1\nexact_p = x\n").unwrap();
        let ex = c.exact_solution().unwrap();
        assert_eq!(ex[0].eval(crate::expr::Point::xt(0.3, 0.1)).unwrap(), 6.0);
        assert!(matches!(c.build_problem(4, 4).unwrap(), Problem::Wave(_)));
        assert!(c.mesh(4, 4).unwrap().extent.y1 == 1.0);
    }
}
