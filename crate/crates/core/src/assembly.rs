//! Quadrature loops shared by all formulations.
//!
//! A least-squares form is described pointwise: at every quadrature point it
//! emits weighted rows `(w, r, d)` and contributes `w·(r·J(u) − d)²` to the
//! functional, where `J(u)` is the jet of the field (value and both partial
//! derivatives of every component, in the layout `[u_c, ∂₀u_c, ∂₁u_c]`).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::Point;
use crate::mesh::{BoundaryFacet, Side};
use crate::quad_basis::{FeFunction, FeSpace, Tabulation};
use crate::solver::{CsrMatrix, SymMatrix};

/// Row buffer filled by a form at one quadrature point.
#[derive(Debug, Clone)]
pub struct RowSink {
    width: usize,
    weights: Vec<f64>,
    data: Vec<f64>,
    coeffs: Vec<f64>,
}

impl RowSink {
    pub fn new(n_components: usize) -> Self {
        RowSink {
            width: 3 * n_components,
            weights: Vec::new(),
            data: Vec::new(),
            coeffs: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        self.weights.clear();
        self.data.clear();
        self.coeffs.clear();
    }

    /// Starts a new row and returns its zeroed jet coefficients.
    pub fn row(&mut self, weight: f64, data: f64) -> &mut [f64] {
        self.weights.push(weight);
        self.data.push(data);
        let start = self.coeffs.len();
        self.coeffs.resize(start + self.width, 0.0);
        &mut self.coeffs[start..]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, k: usize) -> (f64, &[f64], f64) {
        (
            self.weights[k],
            &self.coeffs[k * self.width..(k + 1) * self.width],
            self.data[k],
        )
    }
}

/// Jet index of the value of component `c`.
pub const fn val(c: usize) -> usize {
    3 * c
}

/// Jet index of the derivative of component `c` along axis `axis`.
pub const fn der(c: usize, axis: usize) -> usize {
    3 * c + 1 + axis
}

pub trait LeastSquaresForm: Sync {
    fn n_components(&self) -> usize;
    fn interior(&self, x: Point, rows: &mut RowSink) -> Result<()>;
    fn boundary(&self, facet: &BoundaryFacet, x: Point, rows: &mut RowSink) -> Result<()>;
    fn boundary_facets(&self) -> &[BoundaryFacet];
}

/// Pointwise bilinear form `Σ w (l·J(v)) (r·J(u))` with test field `v`.
pub trait BilinearForm: Sync {
    fn n_components(&self) -> usize;
    fn interior(&self, x: Point, pairs: &mut PairSink) -> Result<()>;
    fn boundary(&self, facet: &BoundaryFacet, x: Point, pairs: &mut PairSink) -> Result<()>;
    fn boundary_facets(&self) -> &[BoundaryFacet];
}

#[derive(Debug, Clone)]
pub struct PairSink {
    width: usize,
    weights: Vec<f64>,
    coeffs: Vec<f64>,
}

impl PairSink {
    pub fn new(n_components: usize) -> Self {
        PairSink {
            width: 3 * n_components,
            weights: Vec::new(),
            coeffs: Vec::new(),
        }
    }

    fn clear(&mut self) {
        self.weights.clear();
        self.coeffs.clear();
    }

    /// Starts a new pair and returns zeroed `(test, trial)` coefficients.
    pub fn pair(&mut self, weight: f64) -> (&mut [f64], &mut [f64]) {
        self.weights.push(weight);
        let start = self.coeffs.len();
        self.coeffs.resize(start + 2 * self.width, 0.0);
        self.coeffs[start..].split_at_mut(self.width)
    }

    fn get(&self, k: usize) -> (f64, &[f64], &[f64]) {
        let s = &self.coeffs[2 * k * self.width..2 * (k + 1) * self.width];
        let (l, r) = s.split_at(self.width);
        (self.weights[k], l, r)
    }
}

/// Quadrature tables for cells and the four reference sides.
pub struct QuadTables {
    pub cell: Tabulation,
    pub sides: [Tabulation; 4],
}

impl QuadTables {
    pub fn new(space: &FeSpace, order: usize) -> Result<Self> {
        Ok(QuadTables {
            cell: space.cell_tabulation(order)?,
            sides: [
                space.side_tabulation(Side::Bottom, order)?,
                space.side_tabulation(Side::Right, order)?,
                space.side_tabulation(Side::Top, order)?,
                space.side_tabulation(Side::Left, order)?,
            ],
        })
    }

    pub fn side(&self, side: Side) -> &Tabulation {
        &self.sides[side as usize]
    }
}

pub fn default_assembly_order(space: &FeSpace) -> usize {
    space.degree() + 2
}

pub fn default_error_order(space: &FeSpace) -> usize {
    space.degree() + 3
}

#[derive(Debug, Clone)]
pub struct LsSystem {
    pub matrix: SymMatrix,
    pub rhs: Vec<f64>,
    /// `Σ w d²` over all rows: the functional at the zero field.
    pub data_norm_sq: f64,
}

struct Local {
    dofs: Vec<usize>,
    mat: Vec<f64>,
    rhs: Vec<f64>,
    data: f64,
}

fn sparsity(space: &FeSpace) -> CsrMatrix {
    let n = space.n_dofs();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dofs = Vec::new();
    for cell in 0..space.mesh().n_cells() {
        space.cell_dofs(cell, &mut dofs);
        for &i in &dofs {
            rows[i].extend_from_slice(&dofs);
        }
    }
    for r in &mut rows {
        r.sort_unstable();
        r.dedup();
    }
    CsrMatrix::from_pattern(n, rows)
}

fn check_components(space: &FeSpace, nc: usize) -> Result<()> {
    if space.n_components() != nc {
        return Err(Error::Config(format!(
            "form has {nc} components but the space has {}",
            space.n_components()
        )));
    }
    Ok(())
}

/// Projects row coefficients onto the local basis at point `q`.
fn project_row(tab: &Tabulation, q: usize, nc: usize, coeffs: &[f64], phi: &mut [f64]) {
    for a in 0..tab.n_local {
        let v = tab.value(q, a);
        let g = tab.grad(q, a);
        for c in 0..nc {
            phi[a * nc + c] = coeffs[3 * c] * v + coeffs[3 * c + 1] * g[0] + coeffs[3 * c + 2] * g[1];
        }
    }
}

fn ls_local<F: LeastSquaresForm + ?Sized>(
    space: &FeSpace,
    form: &F,
    tab: &Tabulation,
    cell: usize,
    emit: impl Fn(&F, Point, &mut RowSink) -> Result<()>,
) -> Result<Local> {
    let nc = space.n_components();
    let nl = space.n_local_dofs();
    let mut dofs = Vec::new();
    space.cell_dofs(cell, &mut dofs);
    let mut mat = vec![0.0; nl * nl];
    let mut rhs = vec![0.0; nl];
    let mut data = 0.0;
    let mut sink = RowSink::new(nc);
    let mut phi = vec![0.0; nl];
    for q in 0..tab.n_points() {
        let x = space.mesh().point(space.mesh().map(cell, tab.ref_points[q]));
        sink.clear();
        emit(form, x, &mut sink)?;
        for k in 0..sink.len() {
            let (w, coeffs, d) = sink.get(k);
            let w = w * tab.weights[q];
            project_row(tab, q, nc, coeffs, &mut phi);
            for i in 0..nl {
                let wi = w * phi[i];
                if wi == 0.0 {
                    continue;
                }
                rhs[i] += wi * d;
                let row = &mut mat[i * nl..(i + 1) * nl];
                for (m, p) in row.iter_mut().zip(&phi) {
                    *m += wi * p;
                }
            }
            data += w * d * d;
        }
    }
    Ok(Local { dofs, mat, rhs, data })
}

/// Normal-equation matrix and right-hand side of a least-squares form.
pub fn assemble_ls<F: LeastSquaresForm + ?Sized>(space: &FeSpace, form: &F, order: usize) -> Result<LsSystem> {
    check_components(space, form.n_components())?;
    let tables = QuadTables::new(space, order)?;
    let cells: Vec<Local> = (0..space.mesh().n_cells())
        .into_par_iter()
        .map(|c| ls_local(space, form, &tables.cell, c, |f, x, s| f.interior(x, s)))
        .collect::<Result<_>>()?;
    let facets: Vec<Local> = form
        .boundary_facets()
        .par_iter()
        .map(|fa| {
            ls_local(space, form, tables.side(fa.side), fa.cell, |f, x, s| {
                f.boundary(fa, x, s)
            })
        })
        .collect::<Result<_>>()?;
    let mut m = sparsity(space);
    let mut rhs = vec![0.0; space.n_dofs()];
    let mut data_norm_sq = 0.0;
    for l in cells.iter().chain(&facets) {
        scatter(&mut m, &mut rhs, l);
        data_norm_sq += l.data;
    }
    Ok(LsSystem {
        matrix: SymMatrix::new(m)?,
        rhs,
        data_norm_sq,
    })
}

fn scatter(m: &mut CsrMatrix, rhs: &mut [f64], l: &Local) {
    let nl = l.dofs.len();
    for (i, &gi) in l.dofs.iter().enumerate() {
        rhs[gi] += l.rhs[i];
        let start = m.row_ptr[gi];
        let cols = &m.col_idx[start..m.row_ptr[gi + 1]];
        for (j, &gj) in l.dofs.iter().enumerate() {
            let v = l.mat[i * nl + j];
            if v != 0.0 {
                let p = cols.binary_search(&gj).expect("dof pair outside pattern");
                m.values[start + p] += v;
            }
        }
    }
}

fn bilinear_local<F: BilinearForm + ?Sized>(
    space: &FeSpace,
    form: &F,
    tab: &Tabulation,
    cell: usize,
    emit: impl Fn(&F, Point, &mut PairSink) -> Result<()>,
) -> Result<Local> {
    let nc = space.n_components();
    let nl = space.n_local_dofs();
    let mut dofs = Vec::new();
    space.cell_dofs(cell, &mut dofs);
    let mut mat = vec![0.0; nl * nl];
    let mut sink = PairSink::new(nc);
    let mut pl = vec![0.0; nl];
    let mut pr = vec![0.0; nl];
    for q in 0..tab.n_points() {
        let x = space.mesh().point(space.mesh().map(cell, tab.ref_points[q]));
        sink.clear();
        emit(form, x, &mut sink)?;
        for k in 0..sink.weights.len() {
            let (w, l, r) = sink.get(k);
            let w = w * tab.weights[q];
            project_row(tab, q, nc, l, &mut pl);
            project_row(tab, q, nc, r, &mut pr);
            for i in 0..nl {
                let wi = w * pl[i];
                if wi == 0.0 {
                    continue;
                }
                for (m, p) in mat[i * nl..(i + 1) * nl].iter_mut().zip(&pr) {
                    *m += wi * p;
                }
            }
        }
    }
    Ok(Local {
        dofs,
        mat,
        rhs: vec![0.0; nl],
        data: 0.0,
    })
}

/// Matrix `A_ij = a(φ_i, φ_j)`, test index first.
pub fn assemble_bilinear<F: BilinearForm + ?Sized>(space: &FeSpace, form: &F, order: usize) -> Result<CsrMatrix> {
    check_components(space, form.n_components())?;
    let tables = QuadTables::new(space, order)?;
    let cells: Vec<Local> = (0..space.mesh().n_cells())
        .into_par_iter()
        .map(|c| bilinear_local(space, form, &tables.cell, c, |f, x, s| f.interior(x, s)))
        .collect::<Result<_>>()?;
    let facets: Vec<Local> = form
        .boundary_facets()
        .par_iter()
        .map(|fa| {
            bilinear_local(space, form, tables.side(fa.side), fa.cell, |f, x, s| {
                f.boundary(fa, x, s)
            })
        })
        .collect::<Result<_>>()?;
    let mut m = sparsity(space);
    let mut rhs = vec![0.0; space.n_dofs()];
    for l in cells.iter().chain(&facets) {
        scatter(&mut m, &mut rhs, l);
    }
    Ok(m)
}

/// Quadrature point handed to integrand closures.
pub struct QPoint<'a> {
    pub x: Point,
    pub coords: [f64; 2],
    /// Jets of the supplied fields, in order.
    pub jets: &'a [Vec<f64>],
}

fn integrate_on<G>(space: &FeSpace, fields: &[&FeFunction], tab: &Tabulation, cell: usize, g: &G) -> Result<f64>
where
    G: Fn(&QPoint) -> Result<f64>,
{
    let nc = space.n_components();
    let mut dofs = Vec::new();
    space.cell_dofs(cell, &mut dofs);
    let mut jets = vec![vec![0.0; 3 * nc]; fields.len()];
    let mut sum = 0.0;
    for q in 0..tab.n_points() {
        for (j, f) in jets.iter_mut().zip(fields) {
            space.jet(&f.coeffs, &dofs, tab, q, j);
        }
        let coords = space.mesh().map(cell, tab.ref_points[q]);
        let qp = QPoint {
            x: space.mesh().point(coords),
            coords,
            jets: &jets,
        };
        sum += tab.weights[q] * g(&qp)?;
    }
    Ok(sum)
}

fn check_fields(space: &FeSpace, fields: &[&FeFunction]) -> Result<()> {
    for f in fields {
        if f.space.n_dofs() != space.n_dofs() || f.space.n_components() != space.n_components() {
            return Err(Error::Config("field does not belong to the integration space".into()));
        }
    }
    Ok(())
}

/// `∫_Ω g` over all cells, with jets of `fields` available to `g`.
pub fn integrate_cells<G>(space: &FeSpace, fields: &[&FeFunction], order: usize, g: G) -> Result<f64>
where
    G: Fn(&QPoint) -> Result<f64> + Sync,
{
    check_fields(space, fields)?;
    let tab = space.cell_tabulation(order)?;
    let parts: Vec<f64> = (0..space.mesh().n_cells())
        .into_par_iter()
        .map(|c| integrate_on(space, fields, &tab, c, &g))
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// `∫ g` over the given boundary facets.
pub fn integrate_facets<G>(
    space: &FeSpace,
    facets: &[BoundaryFacet],
    fields: &[&FeFunction],
    order: usize,
    g: G,
) -> Result<f64>
where
    G: Fn(&BoundaryFacet, &QPoint) -> Result<f64> + Sync,
{
    check_fields(space, fields)?;
    let tables = QuadTables::new(space, order)?;
    let parts: Vec<f64> = facets
        .par_iter()
        .map(|fa| integrate_on(space, fields, tables.side(fa.side), fa.cell, &|q: &QPoint| g(fa, q)))
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// Value of the least-squares functional `Σ w (r·J(u) − d)²`.
pub fn ls_functional<F: LeastSquaresForm + ?Sized>(form: &F, u: &FeFunction, order: usize) -> Result<f64> {
    ls_error(
        form,
        u,
        order,
        |_, jet| {
            jet.iter_mut().for_each(|v| *v = 0.0);
            Ok(())
        },
        true,
    )
}

/// Functional of the difference `u − u_exact`, data ignored when
/// `with_data` is false.
pub fn ls_error<F, E>(form: &F, u: &FeFunction, order: usize, exact: E, with_data: bool) -> Result<f64>
where
    F: LeastSquaresForm + ?Sized,
    E: Fn(Point, &mut [f64]) -> Result<()> + Sync,
{
    let space = &u.space;
    check_components(space, form.n_components())?;
    let nc = space.n_components();
    let eval = |q: &QPoint, emit: &dyn Fn(&mut RowSink) -> Result<()>| -> Result<f64> {
        let mut sink = RowSink::new(nc);
        emit(&mut sink)?;
        let mut ex = vec![0.0; 3 * nc];
        exact(q.x, &mut ex)?;
        let jet = &q.jets[0];
        let mut s = 0.0;
        for k in 0..sink.len() {
            let (w, r, d) = sink.get(k);
            let mut v: f64 = r.iter().zip(jet.iter().zip(&ex)).map(|(r, (j, e))| r * (j - e)).sum();
            if with_data {
                v -= d;
            }
            s += w * v * v;
        }
        Ok(s)
    };
    let interior = integrate_cells(space, &[u], order, |q| eval(q, &|s| form.interior(q.x, s)))?;
    let boundary = integrate_facets(space, form.boundary_facets(), &[u], order, |fa, q| {
        eval(q, &|s| form.boundary(fa, q.x, s))
    })?;
    Ok(interior + boundary)
}

/// Jet of a smooth field by central differences, `h = 1e-6·(1 + |coord|)`.
pub fn fd_jet<F>(mut f: F, x: Point, time_axis: bool, nc: usize, out: &mut [f64]) -> Result<()>
where
    F: FnMut(Point, &mut [f64]) -> Result<()>,
{
    let mut v = vec![0.0; nc];
    let mut vp = vec![0.0; nc];
    let mut vm = vec![0.0; nc];
    f(x, &mut v)?;
    for c in 0..nc {
        out[val(c)] = v[c];
    }
    for axis in 0..2 {
        let coord = match (axis, time_axis) {
            (0, _) => x.x,
            (_, false) => x.y,
            (_, true) => x.t,
        };
        let h = 1e-6 * (1.0 + coord.abs());
        let shift = |s: f64| {
            let mut p = x;
            match (axis, time_axis) {
                (0, _) => p.x += s,
                (_, false) => p.y += s,
                (_, true) => p.t += s,
            }
            p
        };
        f(shift(h), &mut vp)?;
        f(shift(-h), &mut vm)?;
        for c in 0..nc {
            out[der(c, axis)] = (vp[c] - vm[c]) / (2.0 * h);
        }
    }
    Ok(())
}
