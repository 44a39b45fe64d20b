//! Gauss–Legendre quadrature and continuous tensor-product Lagrange spaces.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Expr, Point};
use crate::mesh::{BoundaryFacet, Side, StructuredMesh2D};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub dim: usize,
    /// Reference coordinates; the second entry is unused for `dim == 1`.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub const MAX_GAUSS_POINTS: usize = 12;

/// Legendre polynomial `P_n` and its derivative at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn gauss_legendre_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut pts = vec![0.0; n];
    let mut wts = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        pts[i] = -x;
        pts[n - 1 - i] = x;
        wts[i] = w;
        wts[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        pts[n / 2] = 0.0;
    }
    (pts, wts)
}

/// `n`-point Gauss–Legendre rule on `[−1, 1]` or its tensor square.
pub fn gauss_rule(n: usize, dim: usize) -> Result<QuadRule> {
    if !(1..=MAX_GAUSS_POINTS).contains(&n) {
        return Err(Error::Config(format!(
            "quadrature order {n} outside 1..={MAX_GAUSS_POINTS}"
        )));
    }
    let (p, w) = gauss_legendre_1d(n);
    match dim {
        1 => Ok(QuadRule {
            dim,
            points: p.iter().map(|&x| [x, 0.0]).collect(),
            weights: w,
        }),
        2 => {
            let mut points = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    points.push([p[i], p[j]]);
                    weights.push(w[i] * w[j]);
                }
            }
            Ok(QuadRule { dim, points, weights })
        }
        _ => Err(Error::Config(format!("quadrature dimension {dim} not in 1..=2"))),
    }
}

/// Values and derivatives of the 1D Lagrange basis of degree `k` on
/// equispaced nodes of `[−1, 1]`.
fn lagrange_1d(k: usize, s: f64) -> ([f64; 3], [f64; 3]) {
    let mut v = [0.0; 3];
    let mut d = [0.0; 3];
    match k {
        1 => {
            v[0] = 0.5 * (1.0 - s);
            v[1] = 0.5 * (1.0 + s);
            d[0] = -0.5;
            d[1] = 0.5;
        }
        2 => {
            v[0] = 0.5 * s * (s - 1.0);
            v[1] = 1.0 - s * s;
            v[2] = 0.5 * s * (s + 1.0);
            d[0] = s - 0.5;
            d[1] = -2.0 * s;
            d[2] = s + 0.5;
        }
        _ => unreachable!("degree validated at space construction"),
    }
    (v, d)
}

/// Basis values and physical gradients at a fixed set of reference points,
/// shared by every cell of a uniform mesh.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_local: usize,
    pub ref_points: Vec<[f64; 2]>,
    /// Quadrature weights including the cell or facet Jacobian.
    pub weights: Vec<f64>,
    /// `values[q * n_local + a]`.
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
}

impl Tabulation {
    pub fn n_points(&self) -> usize {
        self.weights.len()
    }

    pub fn value(&self, q: usize, a: usize) -> f64 {
        self.values[q * self.n_local + a]
    }

    pub fn grad(&self, q: usize, a: usize) -> [f64; 2] {
        self.grads[q * self.n_local + a]
    }
}

/// Basis data on one specific cell, with physical quadrature points.
#[derive(Debug, Clone)]
pub struct CellBasis {
    pub points: Vec<[f64; 2]>,
    pub tab: Tabulation,
}

#[derive(Debug)]
struct SpaceInner {
    mesh: StructuredMesh2D,
    degree: usize,
    n_components: usize,
}

/// Conforming Q_k Lagrange space, scalar or blocked. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct FeSpace {
    inner: Arc<SpaceInner>,
}

impl FeSpace {
    pub fn new(mesh: StructuredMesh2D, degree: usize, n_components: usize) -> Result<Self> {
        if !(1..=2).contains(&degree) {
            return Err(Error::Config(format!("degree {degree} not in 1..=2")));
        }
        if n_components == 0 {
            return Err(Error::Config("space needs at least one component".into()));
        }
        Ok(FeSpace {
            inner: Arc::new(SpaceInner {
                mesh,
                degree,
                n_components,
            }),
        })
    }

    pub fn mesh(&self) -> &StructuredMesh2D {
        &self.inner.mesh
    }

    pub fn degree(&self) -> usize {
        self.inner.degree
    }

    pub fn n_components(&self) -> usize {
        self.inner.n_components
    }

    /// Nodes per axis.
    pub fn node_counts(&self) -> (usize, usize) {
        let k = self.degree();
        (k * self.mesh().nx + 1, k * self.mesh().ny + 1)
    }

    pub fn n_nodes(&self) -> usize {
        let (a, b) = self.node_counts();
        a * b
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes() * self.n_components()
    }

    pub fn n_local_nodes(&self) -> usize {
        (self.degree() + 1).pow(2)
    }

    pub fn n_local_dofs(&self) -> usize {
        self.n_local_nodes() * self.n_components()
    }

    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        let (nnx, _) = self.node_counts();
        let (i, j) = (node % nnx, node / nnx);
        let k = self.degree() as f64;
        let [hx, hy] = self.mesh().h();
        let e = self.mesh().extent;
        [e.x0 + i as f64 * hx / k, e.y0 + j as f64 * hy / k]
    }

    /// Global node indices of a cell, first reference axis fastest.
    pub fn cell_nodes(&self, cell: usize, out: &mut Vec<usize>) {
        out.clear();
        let k = self.degree();
        let (nnx, _) = self.node_counts();
        let (i, j) = self.mesh().cell_ij(cell);
        for b in 0..=k {
            for a in 0..=k {
                out.push((k * j + b) * nnx + k * i + a);
            }
        }
    }

    /// Global dofs of a cell; local dof `a * n_components + c`.
    pub fn cell_dofs(&self, cell: usize, out: &mut Vec<usize>) {
        let nc = self.n_components();
        let mut nodes = Vec::with_capacity(self.n_local_nodes());
        self.cell_nodes(cell, &mut nodes);
        out.clear();
        for n in nodes {
            for c in 0..nc {
                out.push(n * nc + c);
            }
        }
    }

    /// Local basis values and reference gradients at a reference point.
    pub fn reference_basis(&self, r: [f64; 2], values: &mut [f64], grads: &mut [[f64; 2]]) {
        let k = self.degree();
        let (vx, dx) = lagrange_1d(k, r[0]);
        let (vy, dy) = lagrange_1d(k, r[1]);
        for b in 0..=k {
            for a in 0..=k {
                let l = b * (k + 1) + a;
                values[l] = vx[a] * vy[b];
                grads[l] = [dx[a] * vy[b], vx[a] * dy[b]];
            }
        }
    }

    fn tabulate(&self, ref_points: Vec<[f64; 2]>, weights: Vec<f64>) -> Tabulation {
        let nl = self.n_local_nodes();
        let [hx, hy] = self.mesh().h();
        let mut values = vec![0.0; ref_points.len() * nl];
        let mut grads = vec![[0.0; 2]; ref_points.len() * nl];
        for (q, r) in ref_points.iter().enumerate() {
            let range = q * nl..(q + 1) * nl;
            self.reference_basis(*r, &mut values[range.clone()], &mut grads[range.clone()]);
            for g in &mut grads[range] {
                g[0] *= 2.0 / hx;
                g[1] *= 2.0 / hy;
            }
        }
        Tabulation {
            n_local: nl,
            ref_points,
            weights,
            values,
            grads,
        }
    }

    /// Tensor Gauss tabulation for cell integrals.
    pub fn cell_tabulation(&self, order: usize) -> Result<Tabulation> {
        let rule = gauss_rule(order, 2)?;
        let jac = 0.25 * self.mesh().cell_measure();
        let w = rule.weights.iter().map(|w| w * jac).collect();
        Ok(self.tabulate(rule.points, w))
    }

    /// Gauss tabulation along one side of the reference cell, with weights
    /// scaled to the physical facet length.
    pub fn side_tabulation(&self, side: Side, order: usize) -> Result<Tabulation> {
        let rule = gauss_rule(order, 1)?;
        let [hx, hy] = self.mesh().h();
        let len = match side {
            Side::Bottom | Side::Top => hx,
            Side::Left | Side::Right => hy,
        };
        let pts = rule.points.iter().map(|p| side.reference_point(p[0])).collect();
        let w = rule.weights.iter().map(|w| 0.5 * w * len).collect();
        Ok(self.tabulate(pts, w))
    }

    /// Basis values and physical gradients at the points of a 2D rule on `cell`.
    pub fn eval_basis(&self, cell: usize, rule: &QuadRule) -> CellBasis {
        let jac = 0.25 * self.mesh().cell_measure();
        let tab = self.tabulate(rule.points.clone(), rule.weights.iter().map(|w| w * jac).collect());
        let points = rule.points.iter().map(|r| self.mesh().map(cell, *r)).collect();
        CellBasis { points, tab }
    }

    /// Basis values restricted to a boundary facet at the points of a 1D rule.
    pub fn facet_trace(&self, facet: &BoundaryFacet, rule: &QuadRule) -> CellBasis {
        let pts: Vec<[f64; 2]> = rule.points.iter().map(|p| facet.side.reference_point(p[0])).collect();
        let tab = self.tabulate(pts, rule.weights.iter().map(|w| 0.5 * w * facet.measure).collect());
        let points = rule.points.iter().map(|p| facet.at(p[0])).collect();
        CellBasis { points, tab }
    }

    /// Nodal interpolation of one expression per component.
    pub fn interpolate(&self, f: &[Expr]) -> Result<FeFunction> {
        if f.len() != self.n_components() {
            return Err(Error::Config(format!(
                "interpolation needs {} component expressions, got {}",
                self.n_components(),
                f.len()
            )));
        }
        let mut vals = vec![0.0; f.len()];
        self.interpolate_with(|p| {
            for (v, e) in vals.iter_mut().zip(f) {
                *v = e.eval(p)?;
            }
            Ok(vals.clone())
        })
    }

    pub fn interpolate_with<F>(&self, mut f: F) -> Result<FeFunction>
    where
        F: FnMut(Point) -> Result<Vec<f64>>,
    {
        let nc = self.n_components();
        let mut coeffs = vec![0.0; self.n_dofs()];
        for node in 0..self.n_nodes() {
            let v = f(self.mesh().point(self.node_coords(node)))?;
            coeffs[node * nc..(node + 1) * nc].copy_from_slice(&v[..nc]);
        }
        Ok(FeFunction::new(self.clone(), coeffs))
    }

    pub fn zero(&self) -> FeFunction {
        FeFunction::new(self.clone(), vec![0.0; self.n_dofs()])
    }

    /// Jet `[v_c, ∂₀v_c, ∂₁v_c]` per component at tabulation point `q`.
    pub fn jet(&self, coeffs: &[f64], dofs: &[usize], tab: &Tabulation, q: usize, out: &mut [f64]) {
        let nc = self.n_components();
        out[..3 * nc].iter_mut().for_each(|v| *v = 0.0);
        for a in 0..tab.n_local {
            let v = tab.value(q, a);
            let g = tab.grad(q, a);
            for c in 0..nc {
                let u = coeffs[dofs[a * nc + c]];
                out[3 * c] += u * v;
                out[3 * c + 1] += u * g[0];
                out[3 * c + 2] += u * g[1];
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeFunction {
    pub space: FeSpace,
    pub coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn new(space: FeSpace, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), space.n_dofs(), "coefficient length mismatch");
        FeFunction { space, coeffs }
    }

    /// Jet at an arbitrary physical point (cells are half-open, the upper
    /// boundary belongs to the last cell).
    pub fn jet_at(&self, x: [f64; 2]) -> Vec<f64> {
        let s = &self.space;
        let m = s.mesh();
        let [hx, hy] = m.h();
        let locate = |v: f64, v0: f64, h: f64, n: usize| -> (usize, f64) {
            let i = (((v - v0) / h).floor().max(0.0) as usize).min(n - 1);
            let r = 2.0 * (v - v0 - i as f64 * h) / h - 1.0;
            (i, r)
        };
        let (i, rx) = locate(x[0], m.extent.x0, hx, m.nx);
        let (j, ry) = locate(x[1], m.extent.y0, hy, m.ny);
        let cell = m.cell_index(i, j);
        let tab = s.tabulate(vec![[rx, ry]], vec![1.0]);
        let mut dofs = Vec::new();
        s.cell_dofs(cell, &mut dofs);
        let mut out = vec![0.0; 3 * s.n_components()];
        s.jet(&self.coeffs, &dofs, &tab, 0, &mut out);
        out
    }

    pub fn value_at(&self, x: [f64; 2], component: usize) -> f64 {
        self.jet_at(x)[3 * component]
    }

    pub fn scaled(&self, s: f64) -> FeFunction {
        FeFunction::new(self.space.clone(), self.coeffs.iter().map(|c| c * s).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::mesh::{build_mesh, classify_boundary_robin, Rect};
    use proptest::prelude::*;

    /// Oracle nodes: eigenvalues of the symmetric Jacobi matrix of the
    /// Legendre three-term recurrence; weights 2·(first eigenvector entry)².
    fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut j = nalgebra::DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let kf = k as f64;
            let b = kf / (4.0 * kf * kf - 1.0).sqrt();
            j[(k, k - 1)] = b;
            j[(k - 1, k)] = b;
        }
        let eig = j.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pairs.into_iter().unzip()
    }

    #[test]
    fn midpoint_rule() {
        let r = gauss_rule(1, 1).unwrap();
        assert_eq!(r.points[0][0], 0.0);
        assert_eq!(r.weights, vec![2.0]);
    }

    #[test]
    fn two_point_rule() {
        let r = gauss_rule(2, 1).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r.points[0][0] + s).abs() < 1e-15);
        assert!((r.points[1][0] - s).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15 && (r.weights[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rules_match_jacobi_matrix_oracle() {
        for n in 1..=MAX_GAUSS_POINTS {
            let (p, w) = golub_welsch(n);
            let r = gauss_rule(n, 1).unwrap();
            for i in 0..n {
                assert!((r.points[i][0] - p[i]).abs() < 1e-13, "n={n} i={i}");
                assert!((r.weights[i] - w[i]).abs() < 1e-13, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn odd_monomial_vanishes() {
        let r = gauss_rule(3, 1).unwrap();
        let s: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0].powi(5)).sum();
        assert!(s.abs() < 1e-15);
    }

    #[test]
    fn order_out_of_range() {
        assert!(gauss_rule(0, 1).is_err());
        assert!(gauss_rule(13, 2).is_err());
        assert!(gauss_rule(2, 3).is_err());
    }

    #[test]
    fn monomial_exactness_2d() {
        for n in 1..=MAX_GAUSS_POINTS {
            let r = gauss_rule(n, 2).unwrap();
            let total: f64 = r.weights.iter().sum();
            assert!((total - 4.0).abs() < 1e-13);
            for a in 0..2 * n {
                for b in 0..2 * n {
                    let q: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact1 = |k: usize| if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                    let exact = exact1(a) * exact1(b);
                    assert!((q - exact).abs() < 1e-12, "n={n} a={a} b={b}: {q} vs {exact}");
                }
            }
        }
    }

    fn unit_space(n: usize, k: usize, nc: usize) -> FeSpace {
        FeSpace::new(build_mesh(n, n, Rect::unit()).unwrap(), k, nc).unwrap()
    }

    #[test]
    fn partition_of_unity() {
        for k in 1..=2 {
            let s = unit_space(3, k, 1);
            let b = s.eval_basis(4, &gauss_rule(4, 2).unwrap());
            for q in 0..b.tab.n_points() {
                let sv: f64 = (0..b.tab.n_local).map(|a| b.tab.value(q, a)).sum();
                let sg = (0..b.tab.n_local).fold([0.0, 0.0], |acc, a| {
                    let g = b.tab.grad(q, a);
                    [acc[0] + g[0], acc[1] + g[1]]
                });
                assert!((sv - 1.0).abs() < 1e-14);
                assert!(sg[0].abs() < 1e-12 && sg[1].abs() < 1e-12);
            }
            if k == 1 {
                assert_eq!(b.tab.n_local, 4);
            }
        }
    }

    #[test]
    fn q2_center_node() {
        let s = unit_space(1, 2, 1);
        let rule = QuadRule {
            dim: 2,
            points: vec![[0.0, 0.0]],
            weights: vec![4.0],
        };
        let b = s.eval_basis(0, &rule);
        assert!((b.points[0][0] - 0.5).abs() < 1e-15);
        for a in 0..9 {
            let expected = if a == 4 { 1.0 } else { 0.0 };
            assert!((b.tab.value(0, a) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn interpolate_constant_and_linear() {
        let s = unit_space(4, 1, 1);
        let one = s.interpolate(&[parse("1").unwrap()]).unwrap();
        assert!(one.coeffs.iter().all(|&c| c == 1.0));
        let x = s.interpolate(&[parse("x").unwrap()]).unwrap();
        for n in 0..s.n_nodes() {
            assert_eq!(x.coeffs[n], s.node_coords(n)[0]);
        }
    }

    fn l2_error(u: &FeFunction, exact: &Expr, order: usize) -> f64 {
        let s = &u.space;
        let tab = s.cell_tabulation(order).unwrap();
        let mut dofs = Vec::new();
        let mut jet = vec![0.0; 3];
        let mut sum = 0.0;
        for cell in 0..s.mesh().n_cells() {
            s.cell_dofs(cell, &mut dofs);
            for q in 0..tab.n_points() {
                s.jet(&u.coeffs, &dofs, &tab, q, &mut jet);
                let x = s.mesh().point(s.mesh().map(cell, tab.ref_points[q]));
                sum += tab.weights[q] * (jet[0] - exact.eval(x).unwrap()).powi(2);
            }
        }
        sum.sqrt()
    }

    #[test]
    fn q2_interpolation_of_sine() {
        let s = unit_space(8, 2, 1);
        let e = parse("sin(pi*y)").unwrap();
        let u = s.interpolate(std::slice::from_ref(&e)).unwrap();
        for n in 0..s.n_nodes() {
            let c = s.node_coords(n);
            assert!((u.coeffs[n] - (std::f64::consts::PI * c[1]).sin()).abs() < 1e-15);
        }
        let err = l2_error(&u, &e, 8);
        assert!(err <= 1e-3, "{err}");
        // Refined quadrature agrees with the assembly-level order.
        assert!((err - l2_error(&u, &e, 5)).abs() < 1e-3 * err);
    }

    #[test]
    fn polynomial_reproduction() {
        let cases = [(1, "1 + 2*x - y + 3*x*y"), (2, "x^2*y^2 - 3*x*y^2 + y + 1")];
        for (k, src) in cases {
            let s = FeSpace::new(build_mesh(3, 2, Rect::new(-1.0, 2.0, 0.0, 1.0)).unwrap(), k, 1).unwrap();
            let e = parse(src).unwrap();
            let u = s.interpolate(std::slice::from_ref(&e)).unwrap();
            assert!(l2_error(&u, &e, k + 3) < 1e-13, "k={k}");
        }
    }

    #[test]
    fn traces() {
        let s = unit_space(4, 2, 1);
        let rule = gauss_rule(5, 1).unwrap();
        let one = s.interpolate(&[parse("1").unwrap()]).unwrap();
        let x = s.interpolate(&[parse("x").unwrap()]).unwrap();
        let sn = s.interpolate(&[parse("sin(pi*y)").unwrap()]).unwrap();
        let mut left_norm = 0.0;
        let mut dofs = Vec::new();
        let mut jet = [0.0; 3];
        for f in classify_boundary_robin(s.mesh()) {
            let tr = s.facet_trace(&f, &rule);
            s.cell_dofs(f.cell, &mut dofs);
            for q in 0..tr.tab.n_points() {
                s.jet(&one.coeffs, &dofs, &tr.tab, q, &mut jet);
                assert!((jet[0] - 1.0).abs() < 1e-14);
                if f.side == Side::Left {
                    s.jet(&x.coeffs, &dofs, &tr.tab, q, &mut jet);
                    assert!(jet[0].abs() < 1e-15);
                    s.jet(&sn.coeffs, &dofs, &tr.tab, q, &mut jet);
                    left_norm += tr.tab.weights[q] * jet[0] * jet[0];
                }
            }
        }
        // ∫₀¹ sin²(πy) dy = 1/2, up to Q2 interpolation error on 2 cells
        // per side (about 4e-4 here).
        assert!((left_norm - 0.5).abs() < 1e-3, "{left_norm}");
    }

    #[test]
    fn block_dofs_are_interleaved() {
        let s = unit_space(2, 1, 3);
        assert_eq!(s.n_dofs(), 27);
        let mut d = Vec::new();
        s.cell_dofs(0, &mut d);
        assert_eq!(&d[..6], &[0, 1, 2, 3, 4, 5]);
        assert_eq!(d[6], 9);
    }

    #[test]
    fn shared_edges_agree() {
        // Continuity: a function evaluated from both cells adjacent to an
        // interior edge gives the same value.
        let s = unit_space(2, 2, 1);
        let coeffs: Vec<f64> = (0..s.n_dofs()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let u = FeFunction::new(s.clone(), coeffs);
        for t in [0.1, 0.33, 0.77] {
            let left = u.value_at([0.5 - 1e-13, t], 0);
            let right = u.value_at([0.5, t], 0);
            assert!((left - right).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn interpolate_evaluate_round_trip(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0,
                                           px in 0.0f64..1.0, py in 0.0f64..1.0) {
            // Q1 reproduces bilinear functions everywhere.
            let s = unit_space(3, 1, 1);
            let e = parse(&format!("{a:?} + {b:?}*x + {c:?}*x*y")).unwrap();
            let u = s.interpolate(std::slice::from_ref(&e)).unwrap();
            let exact = e.eval(Point::xy(px, py)).unwrap();
            prop_assert!((u.value_at([px, py], 0) - exact).abs() < 1e-12);
        }
    }
}
