//! Gagliardo `H^{1/2}` norms on the boundary curve of `[0, 1] × [0, τ]`.
//!
//! `‖u‖² = ∫|u|² + ∫∫ |u(x) − u(y)|² / |x − y|²` with chordal distance,
//! evaluated by panel-pair Gauss quadrature.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{EvalError, Expr, Point};
use crate::quad_basis::gauss_rule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    /// Arclength at the panel start.
    pub s0: f64,
    pub len: f64,
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Panel {
    fn at(&self, r: f64) -> [f64; 2] {
        let l = 0.5 * (r + 1.0);
        [
            self.a[0] + l * (self.b[0] - self.a[0]),
            self.a[1] + l * (self.b[1] - self.a[1]),
        ]
    }
}

/// Counter-clockwise boundary of `[0, 1] × [0, τ]` starting at the origin.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    pub tau: f64,
    pub panels: Vec<Panel>,
    /// Gauss points per panel.
    pub gauss: usize,
}

pub const DEFAULT_PANEL_POINTS: usize = 4;

impl BoundaryCurve {
    pub fn new(tau: f64, n_panels: usize) -> Result<Self> {
        Self::with_points(tau, n_panels, DEFAULT_PANEL_POINTS)
    }

    pub fn with_points(tau: f64, n_panels: usize, gauss: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("tau = {tau} must be positive")));
        }
        if n_panels < 4 {
            return Err(Error::Config(format!("need at least 4 panels, got {n_panels}")));
        }
        if gauss + 1 > crate::quad_basis::MAX_GAUSS_POINTS {
            return Err(Error::Config(format!("{gauss} points per panel is too many")));
        }
        let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, tau], [0.0, tau], [0.0, 0.0]];
        let lens = [1.0, tau, 1.0, tau];
        let period = 2.0 * (1.0 + tau);
        // Largest-remainder split with at least one panel per side.
        let ideal: Vec<f64> = lens.iter().map(|l| n_panels as f64 * l / period).collect();
        let mut counts: Vec<usize> = ideal.iter().map(|v| (v.floor() as usize).max(1)).collect();
        while counts.iter().sum::<usize>() < n_panels {
            let k = (0..4)
                .max_by(|&a, &b| {
                    (ideal[a] - counts[a] as f64)
                        .total_cmp(&(ideal[b] - counts[b] as f64))
                        .then(b.cmp(&a))
                })
                .expect("four sides");
            counts[k] += 1;
        }
        while counts.iter().sum::<usize>() > n_panels {
            let k = (0..4)
                .filter(|&k| counts[k] > 1)
                .min_by(|&a, &b| (ideal[a] - counts[a] as f64).total_cmp(&(ideal[b] - counts[b] as f64)))
                .expect("a side with spare panels");
            counts[k] -= 1;
        }
        let mut panels = Vec::with_capacity(n_panels);
        let mut s0 = 0.0;
        for side in 0..4 {
            let (p, q) = (corners[side], corners[side + 1]);
            let m = counts[side];
            for k in 0..m {
                let t0 = k as f64 / m as f64;
                let t1 = (k + 1) as f64 / m as f64;
                let lerp = |t: f64| [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                panels.push(Panel {
                    s0,
                    len: lens[side] / m as f64,
                    a: lerp(t0),
                    b: lerp(t1),
                });
                s0 += lens[side] / m as f64;
            }
        }
        Ok(BoundaryCurve { tau, panels, gauss })
    }

    pub fn period(&self) -> f64 {
        2.0 * (1.0 + self.tau)
    }

    /// Point at arclength `s`, taken modulo the period.
    pub fn point(&self, s: f64) -> [f64; 2] {
        let s = s.rem_euclid(self.period());
        let tau = self.tau;
        if s <= 1.0 {
            [s, 0.0]
        } else if s <= 1.0 + tau {
            [1.0, s - 1.0]
        } else if s <= 2.0 + tau {
            [2.0 + tau - s, tau]
        } else {
            [0.0, 2.0 * (1.0 + tau) - s]
        }
    }

    /// Quadrature nodes `(s, x, w)` of a panel for an `n`-point rule.
    fn nodes(&self, panel: &Panel, n: usize) -> Result<Vec<(f64, [f64; 2], f64)>> {
        let rule = gauss_rule(n, 1)?;
        Ok(rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(r, w)| {
                (
                    panel.s0 + 0.5 * (r[0] + 1.0) * panel.len,
                    panel.at(r[0]),
                    0.5 * w * panel.len,
                )
            })
            .collect())
    }
}

type Component = Arc<dyn Fn(f64, [f64; 2]) -> Result<f64> + Send + Sync>;

/// Scalar or vector function on the boundary, of arclength and position.
#[derive(Clone)]
pub struct BoundaryFn {
    comps: Vec<Component>,
}

impl std::fmt::Debug for BoundaryFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BoundaryFn({} components)", self.comps.len())
    }
}

impl BoundaryFn {
    pub fn scalar<F>(f: F) -> Self
    where
        F: Fn(f64, [f64; 2]) -> f64 + Send + Sync + 'static,
    {
        BoundaryFn {
            comps: vec![Arc::new(move |s, x| Ok(f(s, x)))],
        }
    }

    /// Expression in the space–time coordinates `x` and `t`.
    pub fn from_expr(e: Expr) -> Self {
        BoundaryFn {
            comps: vec![Arc::new(move |_, x| Ok(e.eval(Point::xt(x[0], x[1]))?))],
        }
    }

    pub fn n_components(&self) -> usize {
        self.comps.len()
    }

    pub fn eval(&self, c: usize, s: f64, x: [f64; 2]) -> Result<f64> {
        (self.comps[c])(s, x)
    }

    pub fn scale(&self, k: f64) -> Self {
        BoundaryFn {
            comps: self
                .comps
                .iter()
                .map(|c| {
                    let c = c.clone();
                    Arc::new(move |s, x| Ok(k * c(s, x)?)) as Component
                })
                .collect(),
        }
    }

    /// Componentwise product `h u` of a vector multiplier and a scalar.
    pub fn multiply(h: &BoundaryFn, u: &BoundaryFn) -> Self {
        let u = u.comps[0].clone();
        BoundaryFn {
            comps: h
                .comps
                .iter()
                .map(|hc| {
                    let (hc, u) = (hc.clone(), u.clone());
                    Arc::new(move |s, x| Ok(hc(s, x)? * u(s, x)?)) as Component
                })
                .collect(),
        }
    }
}

/// Lipschitz extension of the lateral normal: `n*(x, t) = 2x − 1`, which is
/// `∓1` on the lateral sides and linear along the bottom and top.
pub fn normal_extension() -> BoundaryFn {
    BoundaryFn::scalar(|_, x| 2.0 * x[0] - 1.0)
}

/// `h± = (n*, ±1)/√(2c₀)`.
pub fn multiplier(c0: f64, plus: bool) -> BoundaryFn {
    let k = 1.0 / (2.0 * c0).sqrt();
    let sign = if plus { 1.0 } else { -1.0 };
    BoundaryFn {
        comps: vec![
            Arc::new(move |_, x: [f64; 2]| Ok(k * (2.0 * x[0] - 1.0))),
            Arc::new(move |_, _| Ok(sign * k)),
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfNorm {
    pub l2_sq: f64,
    pub semi_sq: f64,
}

impl HalfNorm {
    pub fn norm(&self) -> f64 {
        (self.l2_sq + self.semi_sq).sqrt()
    }
}

/// Node, weight and component values.
type Node = ([f64; 2], f64, Vec<f64>);

struct Sampled {
    /// Per panel, nodes of the `q`- and `(q+1)`-point rules with values.
    base: Vec<Vec<Node>>,
    fine: Vec<Vec<Node>>,
}

fn sample(curve: &BoundaryCurve, u: &BoundaryFn) -> Result<Sampled> {
    let nc = u.n_components();
    let at = |n: usize| -> Result<Vec<Vec<Node>>> {
        curve
            .panels
            .iter()
            .map(|p| {
                curve
                    .nodes(p, n)?
                    .into_iter()
                    .map(|(s, x, w)| {
                        let v = (0..nc).map(|c| u.eval(c, s, x)).collect::<Result<Vec<_>>>()?;
                        if v.iter().any(|v| !v.is_finite()) {
                            return Err(Error::Eval(EvalError::NonFinite("boundary function")));
                        }
                        Ok((x, w, v))
                    })
                    .collect()
            })
            .collect()
    };
    Ok(Sampled {
        base: at(curve.gauss)?,
        fine: at(curve.gauss + 1)?,
    })
}

fn pair_sum(a: &[([f64; 2], f64, Vec<f64>)], b: &[([f64; 2], f64, Vec<f64>)]) -> f64 {
    let mut s = 0.0;
    for (xa, wa, va) in a {
        for (xb, wb, vb) in b {
            let d2 = (xa[0] - xb[0]).powi(2) + (xa[1] - xb[1]).powi(2);
            let diff: f64 = va.iter().zip(vb).map(|(p, q)| (p - q).powi(2)).sum();
            s += wa * wb * diff / d2;
        }
    }
    s
}

/// `‖u‖²_{L²}` and the Gagliardo seminorm squared, summed over components.
///
/// Same-panel pairs average the `q × (q+1)` and `(q+1) × q` product rules,
/// whose nodes interlace and never coincide.
pub fn gagliardo_half_norm(curve: &BoundaryCurve, u: &BoundaryFn) -> Result<HalfNorm> {
    let sm = sample(curve, u)?;
    let l2_sq: f64 = sm
        .base
        .iter()
        .flatten()
        .map(|(_, w, v)| w * v.iter().map(|x| x * x).sum::<f64>())
        .sum();
    let rows: Vec<f64> = (0..curve.panels.len())
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for j in 0..curve.panels.len() {
                s += if i == j {
                    0.5 * (pair_sum(&sm.base[i], &sm.fine[i]) + pair_sum(&sm.fine[i], &sm.base[i]))
                } else {
                    pair_sum(&sm.base[i], &sm.base[j])
                };
            }
            s
        })
        .collect();
    let semi_sq: f64 = rows.iter().sum();
    if !semi_sq.is_finite() {
        return Err(Error::Eval(EvalError::NonFinite("gagliardo seminorm")));
    }
    Ok(HalfNorm { l2_sq, semi_sq })
}

/// `‖h± u‖ / ‖u‖` in `H^{1/2}(∂Q)`, componentwise for the numerator.
pub fn multiplier_ratio(curve: &BoundaryCurve, u: &BoundaryFn, plus: bool, c0: f64) -> Result<f64> {
    if !(c0 > 0.0) {
        return Err(Error::Config(format!("c0 = {c0} must be positive")));
    }
    let den = gagliardo_half_norm(curve, u)?.norm();
    if den == 0.0 {
        return Err(Error::Undefined("multiplier ratio of the zero function".into()));
    }
    let hu = BoundaryFn::multiply(&multiplier(c0, plus), u);
    Ok(gagliardo_half_norm(curve, &hu)?.norm() / den)
}

/// Largest difference quotient `|f(x) − f(y)| / |x − y|` over sampled pairs.
pub fn lipschitz_estimate(curve: &BoundaryCurve, f: &BoundaryFn, samples: usize) -> Result<f64> {
    let p = curve.period();
    let pts: Vec<(f64, [f64; 2])> = (0..samples)
        .map(|k| {
            let s = p * (k as f64 + 0.5) / samples as f64;
            (s, curve.point(s))
        })
        .collect();
    let vals = pts.iter().map(|(s, x)| f.eval(0, *s, *x)).collect::<Result<Vec<_>>>()?;
    let mut best: f64 = 0.0;
    for i in 0..pts.len() {
        for j in 0..i {
            let d = ((pts[i].1[0] - pts[j].1[0]).powi(2) + (pts[i].1[1] - pts[j].1[1]).powi(2)).sqrt();
            if d > 0.0 {
                best = best.max((vals[i] - vals[j]).abs() / d);
            }
        }
    }
    Ok(best)
}

/// The five reference functions of arclength used for refinement studies.
pub fn test_functions(curve: &BoundaryCurve) -> Vec<(&'static str, BoundaryFn)> {
    let p = curve.period();
    let two_pi = 2.0 * std::f64::consts::PI;
    let delta = p / 32.0;
    vec![
        ("one", BoundaryFn::scalar(|_, _| 1.0)),
        ("sin", BoundaryFn::scalar(move |s, _| (two_pi * s / p).sin())),
        ("cos", BoundaryFn::scalar(move |s, _| (two_pi * s / p).cos())),
        (
            "hat",
            BoundaryFn::scalar(move |s, _| (1.0 - (s - 0.5 * p).abs() / (0.25 * p)).max(0.0)),
        ),
        (
            "sawtooth",
            BoundaryFn::scalar(move |s, _| {
                let s = s.rem_euclid(p);
                if s <= p - delta {
                    s / (p - delta)
                } else {
                    (p - s) / delta
                }
            }),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn panels_cover_the_period() {
        for (tau, n) in [(1.0, 32), (0.3, 17), (2.5, 9)] {
            let c = BoundaryCurve::new(tau, n).unwrap();
            assert_eq!(c.panels.len(), n);
            let total: f64 = c.panels.iter().map(|p| p.len).sum();
            assert!((total - c.period()).abs() < 1e-13);
            for w in c.panels.windows(2) {
                assert!((w[0].s0 + w[0].len - w[1].s0).abs() < 1e-13);
                assert_eq!(w[0].b, w[1].a);
            }
            for p in &c.panels {
                let m = c.point(p.s0 + 0.5 * p.len);
                let e = p.at(0.0);
                assert!((m[0] - e[0]).abs() < 1e-13 && (m[1] - e[1]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn constants() {
        let c = BoundaryCurve::new(1.0, 32).unwrap();
        let n = gagliardo_half_norm(&c, &BoundaryFn::scalar(|_, _| 3.0)).unwrap();
        assert_eq!(n.semi_sq, 0.0);
        assert!((n.norm() - 3.0 * c.period().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn homogeneity() {
        let c = BoundaryCurve::new(1.0, 16).unwrap();
        let u = BoundaryFn::scalar(|s, x| s.sin() + x[1]);
        let a = gagliardo_half_norm(&c, &u).unwrap().norm();
        let b = gagliardo_half_norm(&c, &u.scale(2.0)).unwrap().norm();
        assert!((b - 2.0 * a).abs() < 1e-12 * a);
    }

    #[test]
    fn sine_self_convergence() {
        let vals: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let c = BoundaryCurve::new(1.0, n).unwrap();
                let p = c.period();
                let u = BoundaryFn::scalar(move |s, _| (2.0 * std::f64::consts::PI * s / p).sin());
                gagliardo_half_norm(&c, &u).unwrap().norm()
            })
            .collect();
        let d1 = (vals[1] - vals[0]).abs();
        let d2 = (vals[2] - vals[1]).abs();
        assert!(d2 * 2.0 <= d1, "{vals:?}");
    }

    #[test]
    fn kernel_sum_is_transpose_symmetric() {
        let c = BoundaryCurve::new(1.0, 12).unwrap();
        let u = BoundaryFn::scalar(|s, _| (1.3 * s).cos());
        let sm = sample(&c, &u).unwrap();
        for i in 0..c.panels.len() {
            for j in (0..c.panels.len()).filter(|&j| j != i) {
                let a = pair_sum(&sm.base[i], &sm.base[j]);
                let b = pair_sum(&sm.base[j], &sm.base[i]);
                assert!((a - b).abs() <= 1e-13 * a.abs(), "{i} {j} {a} {b}");
            }
        }
    }

    #[test]
    fn normal_extension_values() {
        let n = normal_extension();
        assert_eq!(n.eval(0, 0.0, [0.0, 0.7]).unwrap(), -1.0);
        assert_eq!(n.eval(0, 0.0, [1.0, 0.2]).unwrap(), 1.0);
        assert_eq!(n.eval(0, 0.0, [0.5, 0.0]).unwrap(), 0.0);
        let c = BoundaryCurve::new(1.0, 8).unwrap();
        let l = lipschitz_estimate(&c, &n, 400).unwrap();
        assert!(l <= 2.0 + 1e-12, "{l}");
        assert!(l > 1.99);
    }

    #[test]
    fn multiplier_of_one() {
        let c = BoundaryCurve::new(1.0, 32).unwrap();
        let c0 = 2.0;
        // ∫(2x − 1)² over ∂Q: 1/3 on bottom and top, 1 on each lateral side.
        let n = gagliardo_half_norm(&c, &normal_extension()).unwrap();
        assert!((n.l2_sq - 8.0 / 3.0).abs() < 1e-12);
        // For u = 1 the components of h±u are n*/√(2c₀) and ±1/√(2c₀), and
        // constants have zero seminorm.
        let p = c.period();
        let oracle = ((n.l2_sq + n.semi_sq + p) / (2.0 * c0) / p).sqrt();
        for plus in [true, false] {
            let r = multiplier_ratio(&c, &BoundaryFn::scalar(|_, _| 1.0), plus, c0).unwrap();
            assert!((r - oracle).abs() < 1e-12 * oracle, "{r} {oracle}");
        }
        let zero = BoundaryFn::scalar(|_, _| 0.0);
        assert!(matches!(
            multiplier_ratio(&c, &zero, true, 1.0),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn non_finite_reported() {
        let c = BoundaryCurve::new(1.0, 8).unwrap();
        let u = BoundaryFn::scalar(|s, _| if s < 1.0 { f64::NAN } else { 0.0 });
        assert!(matches!(gagliardo_half_norm(&c, &u), Err(Error::Eval(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn scaling_property(k in -5.0f64..5.0, a in -2.0f64..2.0) {
            let c = BoundaryCurve::new(1.0, 8).unwrap();
            let u = BoundaryFn::scalar(move |s, _| (a * s).sin() + 0.5);
            let n1 = gagliardo_half_norm(&c, &u).unwrap().norm();
            let n2 = gagliardo_half_norm(&c, &u.scale(k)).unwrap().norm();
            prop_assert!((n2 - k.abs() * n1).abs() <= 1e-12 * (1.0 + n2));
        }
    }
}
