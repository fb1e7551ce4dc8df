//! Rectangular physical domains, Gauss quadrature and cached basis tables.
//!
//! The parametric unit square maps affinely onto an axis-aligned rectangle, so every element
//! shares the same Jacobian and the Laplacian pulls back without mixed terms. Basis values on
//! quadrature points are tabulated once per direction at mesh build.

use serde::{Deserialize, Serialize};

use crate::bspline::{tensor_eval, KnotVector, SplineSpace};
use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z_old = z;
            z = z_old - p1 / dp;
            if (z - z_old).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Rect {
    pub fn new(x: [f64; 2], y: [f64; 2]) -> Result<Self> {
        let ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[1] > r[0];
        if !ok(x) || !ok(y) {
            return Err(Error::config(format!("degenerate rectangle {x:?} x {y:?}")));
        }
        Ok(Rect { x, y })
    }

    pub fn width(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn height(&self) -> f64 {
        self.y[1] - self.y[0]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// Per-direction table of basis data on the quadrature points of every element.
#[derive(Clone, Debug)]
pub struct AxisTable {
    pub n_elems: usize,
    pub nq: usize,
    pub nloc: usize,
    /// Physical element length.
    pub h: f64,
    origin: f64,
    /// Global function indices, `n_elems * nloc`.
    idx: Vec<usize>,
    /// Value, first and second physical derivative, `n_elems * nq * 3 * nloc`.
    vals: Vec<f64>,
    /// Same layout evaluated at the element's two end points.
    ends: Vec<f64>,
    /// Reference coordinates of the quadrature points on `[0, 1]` and their weights.
    xi: Vec<f64>,
    wi: Vec<f64>,
}

impl AxisTable {
    fn new(kv: &KnotVector, lo: f64, hi: f64, nq: usize) -> Self {
        let n_elems = kv.n_elems();
        let nloc = kv.degree() + 1;
        let length = hi - lo;
        let h = length / n_elems as f64;
        let (gx, gw) = gauss_legendre(nq);
        let xi: Vec<f64> = gx.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let wi: Vec<f64> = gw.iter().map(|w| 0.5 * w).collect();
        let mut idx = Vec::with_capacity(n_elems * nloc);
        let mut vals = Vec::with_capacity(n_elems * nq * 3 * nloc);
        let mut ends = Vec::with_capacity(n_elems * 2 * 3 * nloc);
        let inv = [1.0, 1.0 / length, 1.0 / (length * length)];
        let push = |out: &mut Vec<f64>, e: usize, u: f64| {
            let d = kv.derivatives_on(e, u, 2);
            for (k, row) in d.iter().enumerate() {
                out.extend(row.iter().map(|v| v * inv[k]));
            }
        };
        for e in 0..n_elems {
            idx.extend((0..nloc).map(|k| kv.global_index(e, k)));
            let u0 = e as f64 / n_elems as f64;
            let du = 1.0 / n_elems as f64;
            for &x in &xi {
                push(&mut vals, e, u0 + x * du);
            }
            push(&mut ends, e, u0);
            push(&mut ends, e, u0 + du);
        }
        AxisTable { n_elems, nq, nloc, h, origin: lo, idx, vals, ends, xi, wi }
    }

    #[inline]
    pub fn indices(&self, e: usize) -> &[usize] {
        &self.idx[e * self.nloc..(e + 1) * self.nloc]
    }

    /// `[values | d/dx | d2/dx2]` at quadrature point `q` of element `e`.
    #[inline]
    pub fn basis(&self, e: usize, q: usize) -> &[f64] {
        let s = 3 * self.nloc;
        let o = (e * self.nq + q) * s;
        &self.vals[o..o + s]
    }

    /// Same as [`AxisTable::basis`] at the left (`end = 0`) or right (`end = 1`) element end.
    #[inline]
    pub fn end_basis(&self, e: usize, end: usize) -> &[f64] {
        let s = 3 * self.nloc;
        let o = (e * 2 + end) * s;
        &self.ends[o..o + s]
    }

    #[inline]
    pub fn point(&self, e: usize, q: usize) -> f64 {
        self.origin + (e as f64 + self.xi[q]) * self.h
    }

    #[inline]
    pub fn weight(&self, q: usize) -> f64 {
        self.wi[q] * self.h
    }
}

/// Structured element mesh of a tensor-product spline space over a rectangle.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub space: SplineSpace,
    pub rect: Rect,
    pub quad_order: usize,
    pub ax: AxisTable,
    pub ay: AxisTable,
}

pub fn build_mesh(space: SplineSpace, rect: Rect, quad_order: usize) -> Result<Mesh> {
    let rect = Rect::new(rect.x, rect.y)?;
    if quad_order == 0 {
        return Err(Error::config("quadrature order must be positive"));
    }
    let ax = AxisTable::new(&space.ku, rect.x[0], rect.x[1], quad_order);
    let ay = AxisTable::new(&space.kv, rect.y[0], rect.y[1], quad_order);
    Ok(Mesh { space, rect, quad_order, ax, ay })
}

impl Mesh {
    pub fn n_elements(&self) -> usize {
        self.ax.n_elems * self.ay.n_elems
    }

    pub fn n_basis(&self) -> usize {
        self.space.n_basis()
    }

    /// `(span_u, span_v)` of element `e`, numbered with u fastest.
    #[inline]
    pub fn element(&self, e: usize) -> (usize, usize) {
        (e % self.ax.n_elems, e / self.ax.n_elems)
    }

    pub fn elements(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_elements()).map(|e| self.element(e))
    }

    pub fn points_per_element(&self) -> usize {
        self.quad_order * self.quad_order
    }

    /// Constant affine Jacobian from the unit reference square to an element.
    pub fn jacobian(&self) -> [f64; 2] {
        [self.ax.h, self.ay.h]
    }

    pub fn jacobian_det(&self) -> f64 {
        self.ax.h * self.ay.h
    }

    pub fn element_area(&self) -> f64 {
        self.jacobian_det()
    }

    /// Global indices of the local functions of element `(eu, ev)`, u fastest.
    pub fn element_dofs(&self, eu: usize, ev: usize, out: &mut Vec<usize>) {
        out.clear();
        let nu = self.space.n_u();
        for &gv in self.ay.indices(ev) {
            for &gu in self.ax.indices(eu) {
                out.push(gv * nu + gu);
            }
        }
    }

    /// Physical quadrature points `(x, y, weight)` of an element.
    pub fn quadrature_points(&self, eu: usize, ev: usize) -> Vec<(f64, f64, f64)> {
        let nq = self.quad_order;
        let mut pts = Vec::with_capacity(nq * nq);
        for qy in 0..nq {
            for qx in 0..nq {
                pts.push((self.ax.point(eu, qx), self.ay.point(ev, qy), self.ax.weight(qx) * self.ay.weight(qy)));
            }
        }
        pts
    }

    pub fn boundary_faces(&self) -> Vec<BoundaryFace> {
        boundary_faces(self)
    }

    /// Parametric coordinates of a physical point.
    pub fn to_parametric(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.rect.x[0]) / self.rect.width(), (y - self.rect.y[0]) / self.rect.height())
    }

    /// Value and physical derivatives of the spline with control variables `coeffs` at `(x, y)`.
    pub fn evaluate(&self, coeffs: &[f64], x: f64, y: f64) -> Result<FieldValue> {
        let (u, v) = self.to_parametric(x, y);
        let t = tensor_eval(&self.space, u, v)?;
        let (w, h) = (self.rect.width(), self.rect.height());
        let mut out = FieldValue::default();
        for (k, &g) in t.indices.iter().enumerate() {
            let a = coeffs[g];
            out.value += a * t.values[k];
            out.dx += a * t.du[k] / w;
            out.dy += a * t.dv[k] / h;
            out.dxx += a * t.duu[k] / (w * w);
            out.dyy += a * t.dvv[k] / (h * h);
            out.dxy += a * t.duv[k] / (w * h);
        }
        Ok(out)
    }
}

/// Spline value with first and second physical derivatives at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldValue {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dyy: f64,
    pub dxy: f64,
}

impl FieldValue {
    pub fn laplacian(&self) -> f64 {
        self.dxx + self.dyy
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }
}

/// One element edge lying on the non-periodic part of the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFace {
    pub element: (usize, usize),
    pub side: Side,
    pub normal: [f64; 2],
    pub length: f64,
    /// Element size normal to the face, used to scale the Nitsche penalty.
    pub h_e: f64,
    /// Physical quadrature points `(x, y, weight)` along the face.
    pub points: Vec<(f64, f64, f64)>,
}

/// Faces of the non-periodic sides, each boundary edge exactly once.
pub fn boundary_faces(mesh: &Mesh) -> Vec<BoundaryFace> {
    let (ax, ay) = (&mesh.ax, &mesh.ay);
    let nq = mesh.quad_order;
    let mut faces = Vec::new();
    if !mesh.space.ku.is_periodic() {
        for (side, eu, x) in [(Side::Left, 0, mesh.rect.x[0]), (Side::Right, ax.n_elems - 1, mesh.rect.x[1])] {
            for ev in 0..ay.n_elems {
                faces.push(BoundaryFace {
                    element: (eu, ev),
                    side,
                    normal: side.normal(),
                    length: ay.h,
                    h_e: ax.h,
                    points: (0..nq).map(|q| (x, ay.point(ev, q), ay.weight(q))).collect(),
                });
            }
        }
    }
    if !mesh.space.kv.is_periodic() {
        for (side, ev, y) in [(Side::Bottom, 0, mesh.rect.y[0]), (Side::Top, ay.n_elems - 1, mesh.rect.y[1])] {
            for eu in 0..ax.n_elems {
                faces.push(BoundaryFace {
                    element: (eu, ev),
                    side,
                    normal: side.normal(),
                    length: ax.h,
                    h_e: ay.h,
                    points: (0..nq).map(|q| (ax.point(eu, q), y, ax.weight(q))).collect(),
                });
            }
        }
    }
    faces
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::Topology;
    use approx::assert_abs_diff_eq;

    fn mesh(n: usize, top: [Topology; 2], rect: Rect, nq: usize) -> Mesh {
        let space = SplineSpace::uniform(n, n, 3, top).unwrap();
        build_mesh(space, rect, nq).unwrap()
    }

    #[test]
    fn gauss_exactness() {
        let (x, w) = gauss_legendre(4);
        let int = |k: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum::<f64>();
        assert_abs_diff_eq!(int(2), 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(int(6), 2.0 / 7.0, epsilon = 1e-14);
        assert_abs_diff_eq!(int(7), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(int(0), 2.0, epsilon = 1e-14);
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert_abs_diff_eq!(s, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn counts_and_jacobian() {
        let r = Rect::new([0.0, 16.0], [0.0, 16.0]).unwrap();
        let m = mesh(4, [Topology::Open; 2], r, 4);
        assert_eq!(m.n_basis(), 49);
        assert_eq!(m.points_per_element(), 16);
        assert_eq!(m.points_per_element() * m.n_elements(), 256);
        assert_eq!(m.jacobian(), [4.0, 4.0]);
        assert_eq!(m.jacobian_det(), 16.0);
        let total: f64 =
            m.elements().map(|(eu, ev)| m.quadrature_points(eu, ev).iter().map(|p| p.2).sum::<f64>()).sum();
        assert_abs_diff_eq!(total, 256.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_rect_rejected() {
        assert!(Rect::new([0.0, 0.0], [0.0, 1.0]).is_err());
        assert!(Rect::new([0.0, 1.0], [2.0, 1.0]).is_err());
    }

    #[test]
    fn faces_cover_open_boundary() {
        let r = Rect::new([0.0, 16.0], [-2.0, 6.0]).unwrap();
        let m = mesh(4, [Topology::Open; 2], r, 4);
        let faces = m.boundary_faces();
        assert_eq!(faces.len(), 16);
        let perimeter: f64 = faces.iter().map(|f| f.length).sum();
        assert_abs_diff_eq!(perimeter, 2.0 * (16.0 + 8.0), epsilon = 1e-12);
        for f in &faces {
            let n = f.normal;
            assert_abs_diff_eq!(n[0].hypot(n[1]), 1.0);
            assert!(f.h_e > 0.0);
            let wsum: f64 = f.points.iter().map(|p| p.2).sum();
            assert_abs_diff_eq!(wsum, f.length, epsilon = 1e-13);
            match f.side {
                Side::Left | Side::Right => assert_eq!(f.h_e, 4.0),
                Side::Bottom | Side::Top => assert_eq!(f.h_e, 2.0),
            }
        }
    }

    #[test]
    fn periodic_direction_has_no_faces() {
        let r = Rect::new([0.0, 16.0], [0.0, 16.0]).unwrap();
        let m = mesh(4, [Topology::Open, Topology::Periodic], r, 4);
        let faces = m.boundary_faces();
        assert_eq!(faces.len(), 8);
        assert!(faces.iter().all(|f| matches!(f.side, Side::Left | Side::Right)));
        let m = mesh(4, [Topology::Periodic; 2], r, 4);
        assert!(m.boundary_faces().is_empty());
    }

    #[test]
    fn tables_match_direct_evaluation() {
        let r = Rect::new([-8.0, 8.0], [0.0, 4.0]).unwrap();
        let m = mesh(5, [Topology::Open, Topology::Periodic], r, 4);
        let (eu, q) = (3, 2);
        let x = m.ax.point(eu, q);
        let u = (x - r.x[0]) / r.width();
        let b = crate::bspline::eval_basis(&m.space.ku, u).unwrap();
        assert_eq!(b.span, eu);
        let t = m.ax.basis(eu, q);
        for k in 0..4 {
            assert_abs_diff_eq!(t[k], b.values[k], epsilon = 1e-14);
            assert_abs_diff_eq!(t[4 + k], b.d1[k] / 16.0, epsilon = 1e-14);
            assert_abs_diff_eq!(t[8 + k], b.d2[k] / 256.0, epsilon = 1e-14);
        }
    }
}
