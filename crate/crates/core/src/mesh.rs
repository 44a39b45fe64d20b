//! Tensor-product quadrilateral meshes of axis-aligned rectangles.

use crate::error::{Error, Result};
use crate::expr::{Expr, Point};
use crate::quad_basis::gauss_rule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn unit() -> Self {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// Interpretation of the second coordinate axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondAxis {
    Space,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }

    /// Reference-cell coordinates of the side at parameter `s ∈ [−1, 1]`.
    pub fn reference_point(self, s: f64) -> [f64; 2] {
        match self {
            Side::Bottom => [s, -1.0],
            Side::Right => [1.0, s],
            Side::Top => [s, 1.0],
            Side::Left => [-1.0, s],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvectionTag {
    Inflow,
    Outflow,
    Tangential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveTag {
    Sigma,
    Q0,
    Qtau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Advection(AdvectionTag),
    Robin,
    Wave(WaveTag),
    Untagged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFacet {
    pub cell: usize,
    pub side: Side,
    pub normal: [f64; 2],
    pub measure: f64,
    /// Endpoints in increasing coordinate order along the side.
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub tag: BoundaryTag,
}

impl BoundaryFacet {
    /// Physical point at side parameter `s ∈ [−1, 1]`.
    pub fn at(&self, s: f64) -> [f64; 2] {
        let l = 0.5 * (s + 1.0);
        [
            self.start[0] + l * (self.end[0] - self.start[0]),
            self.start[1] + l * (self.end[1] - self.start[1]),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMesh2D {
    pub nx: usize,
    pub ny: usize,
    pub extent: Rect,
    pub second_axis: SecondAxis,
}

pub fn build_mesh(nx: usize, ny: usize, extent: Rect) -> Result<StructuredMesh2D> {
    StructuredMesh2D::new(nx, ny, extent, SecondAxis::Space)
}

impl StructuredMesh2D {
    pub fn new(nx: usize, ny: usize, extent: Rect, second_axis: SecondAxis) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Mesh(format!("cell counts must be positive, got {nx}x{ny}")));
        }
        let finite = [extent.x0, extent.x1, extent.y0, extent.y1]
            .iter()
            .all(|v| v.is_finite());
        if !finite || extent.x1 <= extent.x0 || extent.y1 <= extent.y0 {
            return Err(Error::Mesh(format!("degenerate extent {extent:?}")));
        }
        Ok(StructuredMesh2D {
            nx,
            ny,
            extent,
            second_axis,
        })
    }

    /// Space–time mesh of `[0, 1] × [0, tau]`.
    pub fn space_time(nx: usize, nt: usize, tau: f64) -> Result<Self> {
        Self::new(nx, nt, Rect::new(0.0, 1.0, 0.0, tau), SecondAxis::Time)
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn h(&self) -> [f64; 2] {
        [
            self.extent.width() / self.nx as f64,
            self.extent.height() / self.ny as f64,
        ]
    }

    pub fn cell_measure(&self) -> f64 {
        let [hx, hy] = self.h();
        hx * hy
    }

    pub fn cell_ij(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Lower-left corner of a cell.
    pub fn cell_origin(&self, cell: usize) -> [f64; 2] {
        let (i, j) = self.cell_ij(cell);
        let [hx, hy] = self.h();
        [self.extent.x0 + i as f64 * hx, self.extent.y0 + j as f64 * hy]
    }

    /// Maps reference coordinates of a cell to physical coordinates.
    pub fn map(&self, cell: usize, r: [f64; 2]) -> [f64; 2] {
        let o = self.cell_origin(cell);
        let [hx, hy] = self.h();
        [o[0] + 0.5 * (r[0] + 1.0) * hx, o[1] + 0.5 * (r[1] + 1.0) * hy]
    }

    /// Physical coordinates as an expression evaluation point.
    pub fn point(&self, c: [f64; 2]) -> Point {
        match self.second_axis {
            SecondAxis::Space => Point::xy(c[0], c[1]),
            SecondAxis::Time => Point::xt(c[0], c[1]),
        }
    }

    pub fn vertex(&self, i: usize, j: usize) -> [f64; 2] {
        let [hx, hy] = self.h();
        [self.extent.x0 + i as f64 * hx, self.extent.y0 + j as f64 * hy]
    }

    pub fn vertices(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity((self.nx + 1) * (self.ny + 1));
        for j in 0..=self.ny {
            for i in 0..=self.nx {
                out.push(self.vertex(i, j));
            }
        }
        out
    }

    /// Uniform refinement by a factor of two in each axis.
    pub fn refine(&self) -> Self {
        StructuredMesh2D {
            nx: 2 * self.nx,
            ny: 2 * self.ny,
            ..self.clone()
        }
    }

    pub fn side_length(&self, side: Side) -> f64 {
        match side {
            Side::Bottom | Side::Top => self.extent.width(),
            Side::Left | Side::Right => self.extent.height(),
        }
    }

    /// All boundary facets, untagged, ordered bottom, right, top, left and by
    /// increasing coordinate within each side.
    pub fn boundary_facets(&self) -> Vec<BoundaryFacet> {
        let [hx, hy] = self.h();
        let mut out = Vec::with_capacity(2 * (self.nx + self.ny));
        for side in Side::ALL {
            let count = match side {
                Side::Bottom | Side::Top => self.nx,
                Side::Left | Side::Right => self.ny,
            };
            for k in 0..count {
                let (cell, start, end, measure) = match side {
                    Side::Bottom => (self.cell_index(k, 0), self.vertex(k, 0), self.vertex(k + 1, 0), hx),
                    Side::Top => (
                        self.cell_index(k, self.ny - 1),
                        self.vertex(k, self.ny),
                        self.vertex(k + 1, self.ny),
                        hx,
                    ),
                    Side::Left => (self.cell_index(0, k), self.vertex(0, k), self.vertex(0, k + 1), hy),
                    Side::Right => (
                        self.cell_index(self.nx - 1, k),
                        self.vertex(self.nx, k),
                        self.vertex(self.nx, k + 1),
                        hy,
                    ),
                };
                out.push(BoundaryFacet {
                    cell,
                    side,
                    normal: side.normal(),
                    measure,
                    start,
                    end,
                    tag: BoundaryTag::Untagged,
                });
            }
        }
        out
    }
}

/// Tags every boundary facet for the Robin-type elliptic problem.
pub fn classify_boundary_robin(mesh: &StructuredMesh2D) -> Vec<BoundaryFacet> {
    let mut f = mesh.boundary_facets();
    for facet in &mut f {
        facet.tag = BoundaryTag::Robin;
    }
    f
}

pub fn classify_boundary_wave(mesh: &StructuredMesh2D) -> Result<Vec<BoundaryFacet>> {
    if mesh.second_axis != SecondAxis::Time {
        return Err(Error::Classification(
            "wave boundary classification needs a space-time mesh".into(),
        ));
    }
    let mut f = mesh.boundary_facets();
    for facet in &mut f {
        facet.tag = BoundaryTag::Wave(match facet.side {
            Side::Left | Side::Right => WaveTag::Sigma,
            Side::Bottom => WaveTag::Q0,
            Side::Top => WaveTag::Qtau,
        });
    }
    Ok(f)
}

const CLASSIFY_POINTS: usize = 5;

/// Classifies facets by the sign of `n·β`, sampled at Gauss points. A facet
/// whose samples fall in more than one class is rejected.
pub fn classify_boundary_advection(mesh: &StructuredMesh2D, beta: &[Expr; 2], tol: f64) -> Result<Vec<BoundaryFacet>> {
    let rule = gauss_rule(CLASSIFY_POINTS, 1)?;
    let mut facets = mesh.boundary_facets();
    let mut nbeta = Vec::with_capacity(facets.len());
    let mut beta_inf: f64 = 0.0;
    for f in &facets {
        let mut vals = [0.0; CLASSIFY_POINTS];
        for (v, p) in vals.iter_mut().zip(&rule.points) {
            let x = mesh.point(f.at(p[0]));
            let b = [beta[0].eval(x)?, beta[1].eval(x)?];
            beta_inf = beta_inf.max(b[0].abs()).max(b[1].abs());
            *v = f.normal[0] * b[0] + f.normal[1] * b[1];
        }
        nbeta.push(vals);
    }
    let thr = tol * beta_inf;
    for (f, vals) in facets.iter_mut().zip(&nbeta) {
        let class = |v: f64| {
            if v < -thr {
                AdvectionTag::Inflow
            } else if v > thr {
                AdvectionTag::Outflow
            } else {
                AdvectionTag::Tangential
            }
        };
        let first = class(vals[0]);
        if vals.iter().any(|&v| class(v) != first) {
            return Err(Error::Classification(format!(
                "n·beta changes class within the {:?} facet from {:?} to {:?}; \
                 refine or align the mesh with the sign changes of n·beta",
                f.side, f.start, f.end
            )));
        }
        f.tag = BoundaryTag::Advection(first);
    }
    Ok(facets)
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + s * d[0], a[1] + s * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Distance between two boundary segments. Boundary segments of a rectangle
/// never cross in their interiors, so endpoint distances suffice.
fn segment_distance(a: &BoundaryFacet, b: &BoundaryFacet) -> f64 {
    point_segment_distance(a.start, b.start, b.end)
        .min(point_segment_distance(a.end, b.start, b.end))
        .min(point_segment_distance(b.start, a.start, a.end))
        .min(point_segment_distance(b.end, a.start, a.end))
}

/// Minimum distance between facets tagged `a` and facets tagged `b`;
/// infinite when either set is empty.
pub fn tag_distance(facets: &[BoundaryFacet], a: BoundaryTag, b: BoundaryTag) -> f64 {
    let mut d = f64::INFINITY;
    for fa in facets.iter().filter(|f| f.tag == a) {
        for fb in facets.iter().filter(|f| f.tag == b) {
            d = d.min(segment_distance(fa, fb));
        }
    }
    d
}

pub fn tag_measure(facets: &[BoundaryFacet], tag: BoundaryTag) -> f64 {
    facets.iter().filter(|f| f.tag == tag).map(|f| f.measure).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use proptest::prelude::*;

    fn beta(bx: &str, by: &str) -> [Expr; 2] {
        [parse(bx).unwrap(), parse(by).unwrap()]
    }

    #[test]
    fn unit_cell() {
        let m = build_mesh(1, 1, Rect::unit()).unwrap();
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.boundary_facets().len(), 4);
        assert_eq!(m.h(), [1.0, 1.0]);
    }

    #[test]
    fn perimeter_identity() {
        let m = build_mesh(2, 3, Rect::new(0.0, 1.0, 0.0, 2.0)).unwrap();
        assert_eq!(m.n_cells(), 6);
        let total: f64 = m.boundary_facets().iter().map(|f| f.measure).sum();
        assert!((total - 6.0).abs() < 1e-14);
        let f = m.boundary_facets();
        for side in Side::ALL {
            let count = f.iter().filter(|x| x.side == side).count();
            let expected = if matches!(side, Side::Bottom | Side::Top) { 2 } else { 3 };
            assert_eq!(count, expected);
            let len: f64 = f.iter().filter(|x| x.side == side).map(|x| x.measure).sum();
            assert!((len - m.side_length(side)).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_extent_rejected() {
        assert!(matches!(
            build_mesh(1, 1, Rect::new(0.0, 0.0, 0.0, 1.0)),
            Err(Error::Mesh(_))
        ));
        assert!(matches!(
            build_mesh(1, 1, Rect::new(0.0, 1.0, 1.0, 0.5)),
            Err(Error::Mesh(_))
        ));
        assert!(matches!(build_mesh(0, 1, Rect::unit()), Err(Error::Mesh(_))));
    }

    #[test]
    fn refinement_nests_vertices() {
        let m = build_mesh(8, 8, Rect::unit()).unwrap();
        let r = m.refine();
        assert_eq!((r.nx, r.ny), (16, 16));
        let fine = r.vertices();
        for v in m.vertices() {
            assert!(fine
                .iter()
                .any(|w| (w[0] - v[0]).abs() < 1e-15 && (w[1] - v[1]).abs() < 1e-15));
        }
    }

    #[test]
    fn normals_are_outward_units() {
        let m = build_mesh(3, 2, Rect::new(-1.0, 2.0, 0.5, 1.5)).unwrap();
        let c = [0.5, 1.0];
        for f in m.boundary_facets() {
            let n = f.normal;
            assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() < 1e-15);
            let mid = f.at(0.0);
            let out = (mid[0] - c[0]) * n[0] + (mid[1] - c[1]) * n[1];
            assert!(out > 0.0);
        }
    }

    #[test]
    fn advection_unit_flow() {
        let m = build_mesh(4, 4, Rect::unit()).unwrap();
        let f = classify_boundary_advection(&m, &beta("1", "0"), 1e-12).unwrap();
        for x in &f {
            let expected = match x.side {
                Side::Left => AdvectionTag::Inflow,
                Side::Right => AdvectionTag::Outflow,
                _ => AdvectionTag::Tangential,
            };
            assert_eq!(x.tag, BoundaryTag::Advection(expected));
        }
        let inflow = BoundaryTag::Advection(AdvectionTag::Inflow);
        let outflow = BoundaryTag::Advection(AdvectionTag::Outflow);
        assert!((tag_distance(&f, inflow, outflow) - 1.0).abs() < 1e-15);
        assert!((tag_measure(&f, inflow) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn advection_zero_field() {
        let m = build_mesh(2, 2, Rect::unit()).unwrap();
        let f = classify_boundary_advection(&m, &beta("0", "0"), 1e-12).unwrap();
        assert!(f
            .iter()
            .all(|x| x.tag == BoundaryTag::Advection(AdvectionTag::Tangential)));
    }

    #[test]
    fn advection_diagonal_flow() {
        let m = build_mesh(3, 3, Rect::unit()).unwrap();
        let f = classify_boundary_advection(&m, &beta("1/sqrt(2)", "1/sqrt(2)"), 1e-12).unwrap();
        for x in &f {
            // Oracle: sign of n·β with β = (1, 1)/√2.
            let nb = (x.normal[0] + x.normal[1]) / 2f64.sqrt();
            let expected = if nb < 0.0 {
                AdvectionTag::Inflow
            } else {
                AdvectionTag::Outflow
            };
            assert_eq!(x.tag, BoundaryTag::Advection(expected));
        }
        let inflow = BoundaryTag::Advection(AdvectionTag::Inflow);
        let outflow = BoundaryTag::Advection(AdvectionTag::Outflow);
        // Inflow and outflow meet at the corners (1,0) and (0,1).
        assert_eq!(tag_distance(&f, inflow, outflow), 0.0);
    }

    #[test]
    fn mixed_sign_facet_rejected() {
        let m = build_mesh(1, 1, Rect::unit()).unwrap();
        // On the left side n·β = -(y - 0.5) changes sign mid-facet.
        let r = classify_boundary_advection(&m, &beta("y - 0.5", "0"), 1e-12);
        assert!(matches!(r, Err(Error::Classification(_))));
        // Two cells per side aligns facets with the sign change.
        let m = build_mesh(2, 2, Rect::unit()).unwrap();
        let r = classify_boundary_advection(&m, &beta("y - 0.5", "0"), 1e-12);
        assert!(r.is_ok());
    }

    #[test]
    fn wave_classification() {
        let m = StructuredMesh2D::space_time(4, 4, 1.0).unwrap();
        let f = classify_boundary_wave(&m).unwrap();
        let count = |t| f.iter().filter(|x| x.tag == BoundaryTag::Wave(t)).count();
        assert_eq!(count(WaveTag::Sigma), 8);
        assert_eq!(count(WaveTag::Q0), 4);
        assert_eq!(count(WaveTag::Qtau), 4);
        for x in &f {
            if x.tag == BoundaryTag::Wave(WaveTag::Q0) {
                assert_eq!(x.normal, [0.0, -1.0]);
            }
            if x.side == Side::Left {
                assert_eq!(x.tag, BoundaryTag::Wave(WaveTag::Sigma));
                assert_eq!(x.normal, [-1.0, 0.0]);
            }
        }
        let m = build_mesh(2, 2, Rect::unit()).unwrap();
        assert!(classify_boundary_wave(&m).is_err());
    }

    #[test]
    fn wave_tag_measures() {
        let tau = 1.7;
        let m = StructuredMesh2D::space_time(5, 3, tau).unwrap();
        let f = classify_boundary_wave(&m).unwrap();
        assert!((tag_measure(&f, BoundaryTag::Wave(WaveTag::Sigma)) - 2.0 * tau).abs() < 1e-14);
        assert!((tag_measure(&f, BoundaryTag::Wave(WaveTag::Q0)) - 1.0).abs() < 1e-14);
        assert!((tag_measure(&f, BoundaryTag::Wave(WaveTag::Qtau)) - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn facet_measures_partition_sides(nx in 1usize..20, ny in 1usize..20,
                                          w in 0.1f64..5.0, h in 0.1f64..5.0) {
            let m = build_mesh(nx, ny, Rect::new(0.0, w, 0.0, h)).unwrap();
            let f = m.boundary_facets();
            prop_assert_eq!(f.len(), 2 * (nx + ny));
            for side in Side::ALL {
                let len: f64 = f.iter().filter(|x| x.side == side).map(|x| x.measure).sum();
                prop_assert!((len - m.side_length(side)).abs() < 1e-12 * (1.0 + len));
            }
            prop_assert!(m.cell_measure() > 0.0);
        }
    }
}
