//! Sparse symmetric storage, SPD solves and the smallest generalized
//! eigenpair.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Compressed sparse rows with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a zero matrix with the given per-row column sets.
    pub fn from_pattern(n_cols: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for mut r in rows.iter().cloned() {
            r.sort_unstable();
            r.dedup();
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix {
            n_rows: rows.len(),
            n_cols,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::from_pattern(n, (0..n).map(|i| vec![i]).collect());
        m.values.iter_mut().for_each(|v| *v = 1.0);
        m
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let rows = (0..a.nrows())
            .map(|i| (0..a.ncols()).filter(|&j| a[(i, j)] != 0.0).collect())
            .collect();
        let mut m = Self::from_pattern(a.ncols(), rows);
        for i in 0..m.n_rows {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                m.values[k] = a[(i, m.col_idx[k])];
            }
        }
        m
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                a[(i, self.col_idx[k])] = self.values[k];
            }
        }
        a
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Position of entry `(i, j)` in `values`, if it is in the pattern.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|p| self.row_ptr[i] + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self
            .find(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[p] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, a)| a * x[j]).sum();
        });
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec(x, &mut y);
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows = vec![Vec::new(); self.n_cols];
        for i in 0..self.n_rows {
            for &j in self.row(i).0 {
                rows[j].push(i);
            }
        }
        let mut t = CsrMatrix::from_pattern(self.n_rows, rows);
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                t.add(j, i, self.values[k]);
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n_rows).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    /// `self + s·other`, patterns merged.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let rows = (0..self.n_rows)
            .map(|i| {
                let mut r = self.row(i).0.to_vec();
                r.extend_from_slice(other.row(i).0);
                r
            })
            .collect();
        let mut out = CsrMatrix::from_pattern(self.n_cols, rows);
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                out.add(i, j, a);
            }
            let (c, v) = other.row(i);
            for (&j, &a) in c.iter().zip(v) {
                out.add(i, j, s * a);
            }
        }
        out
    }
}

pub const SYMMETRY_TOL: f64 = 1e-13;

/// Sparse matrix whose symmetry has been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    csr: CsrMatrix,
}

impl SymMatrix {
    pub fn new(csr: CsrMatrix) -> Result<Self> {
        if csr.n_rows != csr.n_cols {
            return Err(Error::NotSymmetric {
                asymmetry: f64::INFINITY,
                scale: 0.0,
            });
        }
        let scale = csr.max_abs();
        let mut asym: f64 = 0.0;
        for i in 0..csr.n_rows {
            let (c, v) = csr.row(i);
            for (&j, &a) in c.iter().zip(v) {
                if j > i {
                    asym = asym.max((a - csr.get(j, i)).abs());
                } else if csr.find(j, i).is_none() {
                    asym = asym.max(a.abs());
                }
            }
        }
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry: asym, scale });
        }
        Ok(SymMatrix { csr })
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        Self::new(CsrMatrix::from_dense(a))
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.csr
    }

    pub fn dim(&self) -> usize {
        self.csr.n_rows
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.csr.mul(x)
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul(x))
    }

    pub fn add_scaled(&self, s: f64, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            csr: self.csr.add_scaled(s, &other.csr),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Envelope (skyline) Cholesky factor `A = L Lᵀ`, rows of `L` stored from the
/// first structurally nonzero column to the diagonal.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl SpdFactor {
    pub fn new(a: &SymMatrix) -> Result<Self> {
        let m = a.csr();
        let n = m.n_rows;
        let mut first = vec![0; n];
        for (i, f) in first.iter_mut().enumerate() {
            *f = m.row(i).0.first().copied().unwrap_or(i).min(i);
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for i in 0..n {
            let (c, v) = m.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j <= i {
                    data[offset[i] + j - first[i]] = x;
                }
            }
        }
        let diag_scale = (0..n).fold(0.0f64, |s, i| s.max(m.get(i, i).abs()));
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = data.split_at_mut(offset[i]);
            let row = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let lj = &done[offset[j]..offset[j + 1]];
                let s: f64 = row[k0 - fi..j - fi]
                    .iter()
                    .zip(&lj[k0 - fj..j - fj])
                    .map(|(a, b)| a * b)
                    .sum();
                row[j - fi] = (row[j - fi] - s) / lj[j - fj];
            }
            let s: f64 = row[..i - fi].iter().map(|v| v * v).sum();
            let pivot = row[i - fi] - s;
            if !(pivot > 1e-14 * diag_scale) || !pivot.is_finite() {
                return Err(Error::NotPositiveDefinite { row: i, pivot });
            }
            row[i - fi] = pivot.sqrt();
        }
        Ok(SpdFactor { first, offset, data })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&x[fi..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            x[i] /= row[i - fi];
            let xi = x[i];
            for (xk, l) in x[fi..i].iter_mut().zip(&row[..i - fi]) {
                *xk -= l * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Stored envelope size, a proxy for factorization memory.
    pub fn envelope(&self) -> usize {
        self.data.len()
    }
}

pub const DEFAULT_SOLVE_TOL: f64 = 1e-10;

fn relative_residual(a: &SymMatrix, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let ax = a.mul(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let nb = norm(b);
    let rel = if nb == 0.0 { norm(&r) } else { norm(&r) / nb };
    (r, rel)
}

/// Solves with an existing factor plus one step of iterative refinement and
/// checks the relative residual.
pub fn factor_solve(a: &SymMatrix, f: &SpdFactor, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut x = f.solve(b);
    let (r, _) = relative_residual(a, &x, b);
    let dx = f.solve(&r);
    x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
    let (_, rel) = relative_residual(a, &x, b);
    if !(rel <= tol) {
        return Err(Error::Inaccurate { residual: rel, tol });
    }
    Ok(x)
}

/// Direct SPD solve.
pub fn spd_solve(a: &SymMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let f = SpdFactor::new(a)?;
    factor_solve(a, &f, b, tol)
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg_solve(a: &SymMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<CgResult> {
    let n = a.dim();
    let diag = a.csr().diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::NotPositiveDefinite { row: i, pivot: diag[i] });
    }
    let nb = norm(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok(CgResult {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.csr().matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Breakdown { iteration: it });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / nb;
        if rel <= tol {
            return Ok(CgResult {
                x,
                iterations: it,
                residual: rel,
            });
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        method: "conjugate gradients",
        iterations: max_iter,
        residual: norm(&r) / nb,
    })
}

#[derive(Debug, Clone)]
pub struct EigResult {
    pub lambda_min: f64,
    pub eigvector: Vec<f64>,
    pub iterations: usize,
    /// `‖Bx − λMx‖ / ‖Mx‖` for the returned pair.
    pub residual: f64,
}

impl EigResult {
    pub fn alpha(&self) -> f64 {
        self.lambda_min.max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub block: usize,
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            tol: 1e-8,
            max_iter: 500,
            block: 8,
            seed: 42,
        }
    }
}

/// M-orthonormalizes the columns of `y` in place (two Gram–Schmidt passes),
/// dropping numerically dependent columns.
fn m_orthonormalize(y: &mut Vec<Vec<f64>>, m: &SymMatrix) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(y.len());
    let mut mout: Vec<Vec<f64>> = Vec::with_capacity(y.len());
    for mut v in y.drain(..) {
        let n0 = m.quad_form(&v).max(0.0).sqrt();
        for _ in 0..2 {
            for (u, mu) in out.iter().zip(&mout) {
                let c = dot(&v, mu);
                v.iter_mut().zip(u).for_each(|(v, u)| *v -= c * u);
            }
        }
        let mv = m.mul(&v);
        let nv = dot(&v, &mv).max(0.0).sqrt();
        if nv > 1e-10 * n0 && nv > 0.0 {
            v.iter_mut().for_each(|x| *x /= nv);
            out.push(v);
            mout.push(mv.into_iter().map(|x| x / nv).collect());
        }
    }
    *y = out;
}

/// Lowest `count` Ritz pairs of `B` on an M-orthonormal basis.
fn rayleigh_ritz(basis: &[Vec<f64>], b: &SymMatrix, count: usize) -> Vec<Vec<f64>> {
    let q = basis.len();
    let n = basis[0].len();
    let bv: Vec<Vec<f64>> = basis.iter().map(|v| b.mul(v)).collect();
    let mut h = DMatrix::<f64>::zeros(q, q);
    for i in 0..q {
        for j in 0..=i {
            let v = 0.5 * (dot(&basis[i], &bv[j]) + dot(&basis[j], &bv[i]));
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[c]));
    order
        .iter()
        .take(count)
        .map(|&c| {
            let mut v = vec![0.0; n];
            for (i, yi) in basis.iter().enumerate() {
                let s = eig.eigenvectors[(i, c)];
                v.iter_mut().zip(yi).for_each(|(v, y)| *v += s * y);
            }
            v
        })
        .collect()
}

/// Smallest eigenpair of `B x = λ M x` by locally optimal block inverse
/// iteration: each step runs Rayleigh–Ritz on the current block, its
/// residuals preconditioned with the exact inverse of `B + σM`, and the
/// previous update direction.
pub fn min_gen_eig(b: &SymMatrix, m: &SymMatrix, opts: EigOptions) -> Result<EigResult> {
    let n = b.dim();
    if m.dim() != n {
        return Err(Error::Config(format!("eigenproblem dimensions {n} and {}", m.dim())));
    }
    let sigma = 1e-12 * m.csr().trace() / n as f64;
    let k = b.add_scaled(sigma, m);
    let factor = SpdFactor::new(&k)?;
    let p = opts.block.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    x = x.iter().map(|v| factor.solve(&m.mul(v))).collect();
    m_orthonormalize(&mut x, m);
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    let mut last_res = f64::INFINITY;
    for it in 1..=opts.max_iter {
        if x.is_empty() {
            return Err(Error::Undefined("eigen iteration lost its basis".into()));
        }
        let mut basis = x.clone();
        for v in &x {
            let bv = b.mul(v);
            let mv = m.mul(v);
            let lam = dot(v, &bv);
            let r: Vec<f64> = bv.iter().zip(&mv).map(|(b, m)| b - lam * m).collect();
            let mut w = factor.solve(&r);
            let s = norm(&w);
            if s > 0.0 {
                w.iter_mut().for_each(|w| *w /= s);
                basis.push(w);
            }
        }
        basis.extend(dirs.iter().cloned());
        m_orthonormalize(&mut basis, m);
        let new_x = rayleigh_ritz(&basis, b, p.min(basis.len()));

        let x0 = &new_x[0];
        let bx = b.mul(x0);
        let mx = m.mul(x0);
        let lambda = dot(x0, &bx) / dot(x0, &mx);
        let r: Vec<f64> = bx.iter().zip(&mx).map(|(b, m)| b - lambda * m).collect();
        let res = norm(&r) / norm(&mx);
        last_res = res;
        if res <= opts.tol {
            return Ok(EigResult {
                lambda_min: lambda,
                eigvector: new_x.into_iter().next().expect("nonempty block"),
                iterations: it,
                residual: res,
            });
        }
        // Update directions: the new block with its component along the
        // old block removed.
        let mx_old: Vec<Vec<f64>> = x.iter().map(|v| m.mul(v)).collect();
        dirs = new_x
            .iter()
            .map(|v| {
                let mut d = v.clone();
                for (u, mu) in x.iter().zip(&mx_old) {
                    let c = dot(v, mu);
                    d.iter_mut().zip(u).for_each(|(d, u)| *d -= c * u);
                }
                d
            })
            .collect();
        x = new_x;
    }
    Err(Error::NoConvergence {
        method: "inverse iteration",
        iterations: opts.max_iter,
        residual: last_res,
    })
}
