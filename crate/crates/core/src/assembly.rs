//! Residual and consistent tangent of the coupled Galerkin system.
//!
//! Unknowns are packed as `[C | H]`, each block holding `n_b` control variables. Element
//! contributions are computed in parallel batches and merged in element order, so the
//! assembled objects do not depend on the worker count.

use rayon::prelude::*;

use crate::domain::{AxisTable, Mesh, Side};
use crate::error::{Error, Result};
use crate::linsolve;
use crate::model::{Mobility, ModelParams, Roughness};

/// Elements per parallel batch.
const BATCH: usize = 512;

/// Control variables and their rates for both fields.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub n_b: usize,
    /// `S = [C | H]`.
    pub values: Vec<f64>,
    /// `dS/dt = [dC/dt | dH/dt]`.
    pub rates: Vec<f64>,
}

impl State {
    pub fn zeros(n_b: usize) -> Self {
        State { n_b, values: vec![0.0; 2 * n_b], rates: vec![0.0; 2 * n_b] }
    }

    pub fn from_fields(c: Vec<f64>, h: Vec<f64>) -> Self {
        assert_eq!(c.len(), h.len());
        let n_b = c.len();
        let mut values = c;
        values.extend(h);
        State { n_b, values, rates: vec![0.0; 2 * n_b] }
    }

    pub fn c(&self) -> &[f64] {
        &self.values[..self.n_b]
    }

    pub fn h(&self) -> &[f64] {
        &self.values[self.n_b..]
    }

    pub fn c_rate(&self) -> &[f64] {
        &self.rates[..self.n_b]
    }

    pub fn h_rate(&self) -> &[f64] {
        &self.rates[self.n_b..]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().chain(&self.rates).all(|v| v.is_finite())
    }
}

/// Square matrix in compressed sparse row form with a fixed, sorted pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }

    /// Identity with the given pattern-free layout, mostly for tests.
    pub fn identity(n: usize) -> Self {
        SparseMatrix { n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![1.0; n] }
    }

    /// Builds a matrix from unsorted `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (j, v) in r {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix { n, row_ptr, col_idx, values }
    }
}

/// Overlap structure of one parametric direction.
#[derive(Clone, Debug)]
struct AxisPattern {
    /// Sorted overlapping function indices for every function.
    cols: Vec<Vec<usize>>,
    /// `pos[e][a * nloc + b]`: position of local function `b` in the column list of local `a`.
    pos: Vec<Vec<usize>>,
}

impl AxisPattern {
    fn new(t: &AxisTable, n_basis: usize) -> Self {
        let mut cols = vec![Vec::new(); n_basis];
        for e in 0..t.n_elems {
            for &a in t.indices(e) {
                cols[a].extend_from_slice(t.indices(e));
            }
        }
        for c in &mut cols {
            c.sort_unstable();
            c.dedup();
        }
        let pos = (0..t.n_elems)
            .map(|e| {
                let idx = t.indices(e);
                let mut p = Vec::with_capacity(idx.len() * idx.len());
                for &a in idx {
                    for &b in idx {
                        p.push(cols[a].binary_search(&b).unwrap());
                    }
                }
                p
            })
            .collect();
        AxisPattern { cols, pos }
    }
}

/// Sparsity pattern of an `n_fields x n_fields` block system over a tensor spline space.
#[derive(Clone, Debug)]
struct Pattern {
    n_fields: usize,
    n_b: usize,
    nu: usize,
    u: AxisPattern,
    v: AxisPattern,
    row_ptr: Vec<usize>,
}

impl Pattern {
    fn new(mesh: &Mesh, n_fields: usize) -> Self {
        let nu = mesh.space.n_u();
        let nv = mesh.space.n_v();
        let u = AxisPattern::new(&mesh.ax, nu);
        let v = AxisPattern::new(&mesh.ay, nv);
        let n_b = nu * nv;
        let mut row_ptr = Vec::with_capacity(n_fields * n_b + 1);
        row_ptr.push(0);
        for _ in 0..n_fields {
            for iv in 0..nv {
                for iu in 0..nu {
                    let len = n_fields * u.cols[iu].len() * v.cols[iv].len();
                    row_ptr.push(row_ptr.last().unwrap() + len);
                }
            }
        }
        Pattern { n_fields, n_b, nu, u, v, row_ptr }
    }

    fn matrix(&self) -> SparseMatrix {
        let n = self.n_fields * self.n_b;
        let nnz = *self.row_ptr.last().unwrap();
        let mut col_idx = Vec::with_capacity(nnz);
        for _ in 0..self.n_fields {
            for a in 0..self.n_b {
                let (iu, iv) = (a % self.nu, a / self.nu);
                for j in 0..self.n_fields {
                    for &jv in &self.v.cols[iv] {
                        for &ju in &self.u.cols[iu] {
                            col_idx.push(j * self.n_b + jv * self.nu + ju);
                        }
                    }
                }
            }
        }
        SparseMatrix { n, row_ptr: self.row_ptr.clone(), col_idx, values: vec![0.0; nnz] }
    }
}

/// Weights of the rate and state Jacobians in the combined tangent
/// `K = mass * dR/d(rate) + stiffness * dR/dS`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentCoeffs {
    pub mass: f64,
    pub stiffness: f64,
}

/// Quadrature data of one boundary point.
#[derive(Clone, Debug)]
struct FacePoint {
    element: usize,
    x: f64,
    y: f64,
    w: f64,
    alpha: f64,
    f: f64,
    /// `[N | dN/dm | lap N]` over the element's local functions.
    phi: Vec<f64>,
}

/// Local element output: residual (`2 nloc`) and optionally the tangent (`(2 nloc)^2`).
struct Local {
    r: Vec<f64>,
    k: Vec<f64>,
}

/// Scratch buffers for one element evaluation.
struct Scratch {
    phi: Vec<f64>,
    t: Vec<f64>,
}

/// Residual, tangent and projection operators for a fixed mesh, physics and substrate.
#[derive(Clone, Debug)]
pub struct Assembler {
    mesh: Mesh,
    params: ModelParams,
    roughness: Roughness,
    /// `[f, df/dx, df/dy]` at every volume quadrature point.
    rough: Vec<[f64; 3]>,
    faces: Vec<FacePoint>,
    /// Face points grouped by element, sorted by element.
    face_ranges: Vec<(usize, std::ops::Range<usize>)>,
    pattern: Pattern,
    scalar_pattern: Pattern,
    nloc: usize,
}

impl Assembler {
    pub fn new(mesh: Mesh, params: ModelParams, roughness: Roughness) -> Result<Self> {
        params.validate()?;
        let nq = mesh.quad_order;
        let mut rough = Vec::with_capacity(mesh.n_elements() * nq * nq);
        for (eu, ev) in mesh.elements() {
            for qy in 0..nq {
                for qx in 0..nq {
                    let (f, g) = roughness.eval(mesh.ax.point(eu, qx), mesh.ay.point(ev, qy));
                    rough.push([f, g[0], g[1]]);
                }
            }
        }
        let nloc = mesh.ax.nloc * mesh.ay.nloc;
        let mut faces = Vec::new();
        for face in mesh.boundary_faces() {
            let (eu, ev) = face.element;
            let element = ev * mesh.ax.n_elems + eu;
            let alpha = params.nitsche_scale / face.h_e;
            for (q, &(x, y, w)) in face.points.iter().enumerate() {
                let (bu, bv) = match face.side {
                    Side::Left => (mesh.ax.end_basis(eu, 0), mesh.ay.basis(ev, q)),
                    Side::Right => (mesh.ax.end_basis(eu, 1), mesh.ay.basis(ev, q)),
                    Side::Bottom => (mesh.ax.basis(eu, q), mesh.ay.end_basis(ev, 0)),
                    Side::Top => (mesh.ax.basis(eu, q), mesh.ay.end_basis(ev, 1)),
                };
                let mut phi = vec![0.0; 3 * nloc];
                fill_features(bu, bv, mesh.ax.nloc, Some(face.normal), &mut phi);
                let (f, _) = roughness.eval(x, y);
                faces.push(FacePoint { element, x, y, w, alpha, f, phi });
            }
        }
        faces.sort_by_key(|p| p.element);
        let mut face_ranges: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
        for (i, p) in faces.iter().enumerate() {
            match face_ranges.last_mut() {
                Some((e, r)) if *e == p.element => r.end = i + 1,
                _ => face_ranges.push((p.element, i..i + 1)),
            }
        }
        let pattern = Pattern::new(&mesh, 2);
        let scalar_pattern = Pattern::new(&mesh, 1);
        Ok(Assembler { mesh, params, roughness, rough, faces, face_ranges, pattern, scalar_pattern, nloc })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn roughness(&self) -> &Roughness {
        &self.roughness
    }

    pub fn n_b(&self) -> usize {
        self.mesh.n_basis()
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.n_b()
    }

    /// Zero matrix with the pattern of the coupled tangent.
    pub fn new_matrix(&self) -> SparseMatrix {
        self.pattern.matrix()
    }

    /// Roughness `f` at volume quadrature point `q` of element `e`.
    pub fn roughness_at(&self, e: usize, q: usize) -> [f64; 3] {
        self.rough[e * self.mesh.points_per_element() + q]
    }

    /// Residual `R(rates, values)`.
    pub fn residual(&self, rates: &[f64], values: &[f64], r: &mut [f64]) -> Result<()> {
        self.assemble(rates, values, r, None)
    }

    /// Residual and tangent `coeffs.mass * dR/d(rate) + coeffs.stiffness * dR/dS` together.
    pub fn residual_and_tangent(
        &self,
        rates: &[f64],
        values: &[f64],
        coeffs: TangentCoeffs,
        r: &mut [f64],
        k: &mut SparseMatrix,
    ) -> Result<()> {
        self.assemble(rates, values, r, Some((coeffs, k)))
    }

    /// Tangent only.
    pub fn tangent(&self, rates: &[f64], values: &[f64], coeffs: TangentCoeffs, k: &mut SparseMatrix) -> Result<()> {
        let mut r = vec![0.0; self.n_dofs()];
        self.assemble(rates, values, &mut r, Some((coeffs, k)))
    }

    fn assemble(
        &self,
        rates: &[f64],
        values: &[f64],
        r: &mut [f64],
        mut k: Option<(TangentCoeffs, &mut SparseMatrix)>,
    ) -> Result<()> {
        let n = self.n_dofs();
        assert_eq!(rates.len(), n);
        assert_eq!(values.len(), n);
        assert_eq!(r.len(), n);
        r.iter_mut().for_each(|v| *v = 0.0);
        let coeffs = k.as_ref().map(|(c, _)| *c);
        if let Some((_, m)) = k.as_mut() {
            assert_eq!(m.n, n);
            m.clear();
        }
        let ne = self.mesh.n_elements();
        let mut start = 0;
        while start < ne {
            let end = (start + BATCH).min(ne);
            let locals: Vec<Result<Local>> = (start..end)
                .into_par_iter()
                .map_init(
                    || Scratch { phi: vec![0.0; 4 * self.nloc], t: vec![0.0; 4 * self.nloc] },
                    |s, e| self.element(e, rates, values, coeffs, s),
                )
                .collect();
            for (e, loc) in (start..end).zip(locals) {
                let loc = loc?;
                self.scatter(e, &loc, r, k.as_mut().map(|(_, m)| &mut **m));
            }
            start = end;
        }
        Ok(())
    }

    fn scatter(&self, e: usize, loc: &Local, r: &mut [f64], k: Option<&mut SparseMatrix>) {
        let (eu, ev) = self.mesh.element(e);
        let p = &self.pattern;
        let iu = self.mesh.ax.indices(eu);
        let iv = self.mesh.ay.indices(ev);
        let (nlu, nlv) = (iu.len(), iv.len());
        let nloc = self.nloc;
        let n_b = p.n_b;
        for i in 0..2 {
            for (av, &gv) in iv.iter().enumerate() {
                for (au, &gu) in iu.iter().enumerate() {
                    let a = av * nlu + au;
                    r[i * n_b + gv * p.nu + gu] += loc.r[i * nloc + a];
                }
            }
        }
        let Some(k) = k else { return };
        let (pu, pv) = (&p.u.pos[eu], &p.v.pos[ev]);
        for i in 0..2 {
            for (av, &gv) in iv.iter().enumerate() {
                let lenv = p.v.cols[gv].len();
                for (au, &gu) in iu.iter().enumerate() {
                    let lenu = p.u.cols[gu].len();
                    let block = lenu * lenv;
                    let row = i * n_b + gv * p.nu + gu;
                    let base = p.row_ptr[row];
                    let a = av * nlu + au;
                    let krow = &loc.k[(i * nloc + a) * 2 * nloc..(i * nloc + a + 1) * 2 * nloc];
                    for j in 0..2 {
                        for bv in 0..nlv {
                            let off = base + j * block + pv[av * nlv + bv] * lenu;
                            for bu in 0..nlu {
                                let b = bv * nlu + bu;
                                k.values[off + pu[au * nlu + bu]] += krow[j * nloc + b];
                            }
                        }
                    }
                }
            }
        }
    }

    fn gather(&self, e: usize, field: &[f64], out: &mut [f64]) {
        let (eu, ev) = self.mesh.element(e);
        let nu = self.pattern.nu;
        let iu = self.mesh.ax.indices(eu);
        let mut a = 0;
        for &gv in self.mesh.ay.indices(ev) {
            for &gu in iu {
                out[a] = field[gv * nu + gu];
                a += 1;
            }
        }
    }

    fn element(
        &self,
        e: usize,
        rates: &[f64],
        values: &[f64],
        coeffs: Option<TangentCoeffs>,
        s: &mut Scratch,
    ) -> Result<Local> {
        let nloc = self.nloc;
        let n_b = self.n_b();
        let (eu, ev) = self.mesh.element(e);
        let mut dofs = vec![0.0; 4 * nloc];
        let (lc, rest) = dofs.split_at_mut(nloc);
        let (lh, rest) = rest.split_at_mut(nloc);
        let (lcd, lhd) = rest.split_at_mut(nloc);
        self.gather(e, &values[..n_b], lc);
        self.gather(e, &values[n_b..], lh);
        self.gather(e, &rates[..n_b], lcd);
        self.gather(e, &rates[n_b..], lhd);

        let mut loc =
            Local { r: vec![0.0; 2 * nloc], k: if coeffs.is_some() { vec![0.0; 4 * nloc * nloc] } else { Vec::new() } };
        let nq = self.mesh.quad_order;
        let prm = &self.params;
        let (cap, grav, inv_pe) = (prm.capillarity, prm.gravity, 1.0 / prm.peclet);
        for qy in 0..nq {
            for qx in 0..nq {
                let q = qy * nq + qx;
                let w = self.mesh.ax.weight(qx) * self.mesh.ay.weight(qy);
                fill_features(
                    self.mesh.ax.basis(eu, qx),
                    self.mesh.ay.basis(ev, qy),
                    self.mesh.ax.nloc,
                    None,
                    &mut s.phi,
                );
                let phi = &s.phi;
                let ev4 = |coef: &[f64]| -> [f64; 4] {
                    let mut o = [0.0; 4];
                    for (k, ok) in o.iter_mut().enumerate() {
                        *ok = dot(&phi[k * nloc..(k + 1) * nloc], coef);
                    }
                    o
                };
                let [c, cx, cy, lapc] = ev4(lc);
                let [h, hx, hy, lap] = ev4(lh);
                let cdot = dot(&phi[..nloc], lcd);
                let hdot = dot(&phi[..nloc], lhd);
                let [f, fx, fy] = self.rough[e * nq * nq + q];
                let hp = h - f;
                if !(hp > 0.0) {
                    return Err(Error::PositivityLoss {
                        value: hp,
                        x: self.mesh.ax.point(eu, qx),
                        y: self.mesh.ay.point(ev, qy),
                    });
                }
                let gp = [hx - fx, hy - fy];
                let m = Mobility::at(hp);
                let eos = prm.eos.eval(c);
                let (s1, s2) = (eos.d1, eos.d2);
                let gc = [cx, cy];
                let gh = [hx, hy];

                let mut a = [cdot - lapc * inv_pe, 0.0, 0.0, cap * m.m2 * c * lap];
                let mut b = [hdot, 0.0, 0.0, cap * m.m3 * lap];
                for d in 0..2 {
                    a[1 + d] = cap * grav * m.m2 * c * gh[d] - m.m1 * s1 * c * gc[d]
                        + cap * m.m2 * lap * gc[d]
                        + cap * m.dm2 * c * lap * gp[d];
                    b[1 + d] = cap * m.dm3 * lap * gp[d] + cap * grav * m.m3 * gh[d] - m.m2 * s1 * gc[d];
                }
                for k in 0..4 {
                    let (ak, bk) = (w * a[k], w * b[k]);
                    let row = &phi[k * nloc..(k + 1) * nloc];
                    for i in 0..nloc {
                        loc.r[i] += ak * row[i];
                        loc.r[nloc + i] += bk * row[i];
                    }
                }

                let Some(tc) = coeffs else { continue };
                let st = tc.stiffness;
                // Rows: test coefficients [0, grad_x, grad_y, lap]; columns: trial features
                // [N, N_x, N_y, lap N].
                let mut dcc = [[0.0; 4]; 4];
                let mut dch = [[0.0; 4]; 4];
                let mut dhc = [[0.0; 4]; 4];
                let mut dhh = [[0.0; 4]; 4];
                dcc[0][0] = tc.mass;
                dcc[0][3] = -st * inv_pe;
                dhh[0][0] = tc.mass;
                for d in 0..2 {
                    let r = 1 + d;
                    dcc[r][0] =
                        st * (cap * grav * m.m2 * gh[d] - m.m1 * (s2 * c + s1) * gc[d] + cap * m.dm2 * lap * gp[d]);
                    dcc[r][r] = st * (-m.m1 * s1 * c + cap * m.m2 * lap);
                    dch[r][0] = st
                        * (cap * grav * m.dm2 * c * gh[d] - s1 * c * gc[d]
                            + cap * m.dm2 * lap * gc[d]
                            + cap * c * lap * gp[d]);
                    dch[r][r] = st * (cap * grav * m.m2 * c + cap * m.dm2 * c * lap);
                    dch[r][3] = st * (cap * m.m2 * gc[d] + cap * m.dm2 * c * gp[d]);
                    dhc[r][0] = -st * m.m2 * s2 * gc[d];
                    dhc[r][r] = -st * m.m2 * s1;
                    dhh[r][0] = st * (cap * 2.0 * hp * lap * gp[d] + cap * grav * m.dm3 * gh[d] - m.dm2 * s1 * gc[d]);
                    dhh[r][r] = st * (cap * m.dm3 * lap + cap * grav * m.m3);
                    dhh[r][3] = st * cap * m.dm3 * gp[d];
                }
                dcc[3][0] = st * cap * m.m2 * lap;
                dch[3][0] = st * cap * m.dm2 * c * lap;
                dch[3][3] = st * cap * m.m2 * c;
                dhh[3][0] = st * cap * m.dm3 * lap;
                dhh[3][3] = st * cap * m.m3;
                for (bi, bj, dm) in [(0, 0, &dcc), (0, 1, &dch), (1, 0, &dhc), (1, 1, &dhh)] {
                    add_block(&mut loc.k, nloc, 4, bi, bj, phi, phi, dm, w, &mut s.t);
                }
            }
        }
        if let Ok(i) = self.face_ranges.binary_search_by_key(&e, |(el, _)| *el) {
            let range = self.face_ranges[i].1.clone();
            for p in &self.faces[range] {
                self.face_point(p, lc, lh, coeffs, &mut loc, &mut s.t)?;
            }
        }
        Ok(loc)
    }

    fn face_point(
        &self,
        p: &FacePoint,
        lc: &[f64],
        lh: &[f64],
        coeffs: Option<TangentCoeffs>,
        loc: &mut Local,
        t: &mut [f64],
    ) -> Result<()> {
        let nloc = self.nloc;
        let phi = &p.phi;
        let c = dot(&phi[..nloc], lc);
        let h = dot(&phi[..nloc], lh);
        let hn = dot(&phi[nloc..2 * nloc], lh);
        let lap = dot(&phi[2 * nloc..], lh);
        let hp = h - p.f;
        if !(hp > 0.0) {
            return Err(Error::PositivityLoss { value: hp, x: p.x, y: p.y });
        }
        let m = Mobility::at(hp);
        let cap = self.params.capillarity;
        let w = p.w;
        let a = [0.0, -cap * m.m2 * c * lap, 0.0];
        let b = [0.0, -cap * m.m3 * lap + p.alpha * hn, -cap * m.m3 * hn];
        for k in 1..3 {
            let row = &phi[k * nloc..(k + 1) * nloc];
            for i in 0..nloc {
                loc.r[i] += w * a[k] * row[i];
                loc.r[nloc + i] += w * b[k] * row[i];
            }
        }
        let Some(tc) = coeffs else { return Ok(()) };
        let st = tc.stiffness;
        // Rows: test features [N, dN/dm, lap N]; columns: trial features in the same order.
        let mut dcc = [[0.0; 4]; 4];
        let mut dch = [[0.0; 4]; 4];
        let mut dhh = [[0.0; 4]; 4];
        dcc[1][0] = -st * cap * m.m2 * lap;
        dch[1][0] = -st * cap * m.dm2 * c * lap;
        dch[1][2] = -st * cap * m.m2 * c;
        dhh[1][0] = -st * cap * m.dm3 * lap;
        dhh[1][2] = -st * cap * m.m3;
        dhh[1][1] = st * p.alpha;
        dhh[2][0] = -st * cap * m.dm3 * hn;
        dhh[2][1] = -st * cap * m.m3;
        for (bi, bj, dm) in [(0, 0, &dcc), (0, 1, &dch), (1, 1, &dhh)] {
            add_block(&mut loc.k, nloc, 3, bi, bj, phi, phi, dm, w, t);
        }
        Ok(())
    }

    /// Mass matrix `(N_A, N_B)` of one field.
    pub fn mass_matrix(&self) -> SparseMatrix {
        let mut m = self.scalar_pattern.matrix();
        let nq = self.mesh.quad_order;
        let nloc = self.nloc;
        let nlu = self.mesh.ax.nloc;
        let p = &self.scalar_pattern;
        let mut phi = vec![0.0; 4 * nloc];
        for e in 0..self.mesh.n_elements() {
            let (eu, ev) = self.mesh.element(e);
            let mut loc = vec![0.0; nloc * nloc];
            for qy in 0..nq {
                for qx in 0..nq {
                    let w = self.mesh.ax.weight(qx) * self.mesh.ay.weight(qy);
                    fill_features(self.mesh.ax.basis(eu, qx), self.mesh.ay.basis(ev, qy), nlu, None, &mut phi);
                    for a in 0..nloc {
                        for b in 0..nloc {
                            loc[a * nloc + b] += w * phi[a] * phi[b];
                        }
                    }
                }
            }
            let iu = self.mesh.ax.indices(eu);
            let iv = self.mesh.ay.indices(ev);
            let nlv = iv.len();
            let (pu, pv) = (&p.u.pos[eu], &p.v.pos[ev]);
            for (av, &gv) in iv.iter().enumerate() {
                for (au, &gu) in iu.iter().enumerate() {
                    let lenu = p.u.cols[gu].len();
                    let base = p.row_ptr[gv * p.nu + gu];
                    let a = av * nlu + au;
                    for bv in 0..nlv {
                        for bu in 0..nlu {
                            let b = bv * nlu + bu;
                            m.values[base + pv[av * nlv + bv] * lenu + pu[au * nlu + bu]] += loc[a * nloc + b];
                        }
                    }
                }
            }
        }
        m
    }

    /// Load vector `(N_A, g)`.
    pub fn load_vector(&self, g: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut b = vec![0.0; self.n_b()];
        let nq = self.mesh.quad_order;
        let nloc = self.nloc;
        let mut phi = vec![0.0; 4 * nloc];
        let mut dofs = Vec::new();
        for e in 0..self.mesh.n_elements() {
            let (eu, ev) = self.mesh.element(e);
            self.mesh.element_dofs(eu, ev, &mut dofs);
            for qy in 0..nq {
                for qx in 0..nq {
                    let w = self.mesh.ax.weight(qx) * self.mesh.ay.weight(qy);
                    let gv = g(self.mesh.ax.point(eu, qx), self.mesh.ay.point(ev, qy));
                    fill_features(
                        self.mesh.ax.basis(eu, qx),
                        self.mesh.ay.basis(ev, qy),
                        self.mesh.ax.nloc,
                        None,
                        &mut phi,
                    );
                    for (a, &d) in dofs.iter().enumerate() {
                        b[d] += w * gv * phi[a];
                    }
                }
            }
        }
        b
    }

    /// `L2` projection of `g` onto the spline space.
    pub fn l2_project(&self, g: impl Fn(f64, f64) -> f64) -> Result<Vec<f64>> {
        let m = self.mass_matrix();
        let b = self.load_vector(g);
        linsolve::conjugate_gradient(&m, &b, 1e-14, 10 * self.n_b() + 100)
    }

    /// `(integral of c, integral of h - f)` by Gauss quadrature.
    pub fn mass_integrals(&self, values: &[f64]) -> (f64, f64) {
        let n_b = self.n_b();
        let nq = self.mesh.quad_order;
        let nloc = self.nloc;
        let mut phi = vec![0.0; 4 * nloc];
        let mut lc = vec![0.0; nloc];
        let mut lh = vec![0.0; nloc];
        let (mut ic, mut ih) = (0.0, 0.0);
        for e in 0..self.mesh.n_elements() {
            let (eu, ev) = self.mesh.element(e);
            self.gather(e, &values[..n_b], &mut lc);
            self.gather(e, &values[n_b..], &mut lh);
            for qy in 0..nq {
                for qx in 0..nq {
                    let w = self.mesh.ax.weight(qx) * self.mesh.ay.weight(qy);
                    fill_features(
                        self.mesh.ax.basis(eu, qx),
                        self.mesh.ay.basis(ev, qy),
                        self.mesh.ax.nloc,
                        None,
                        &mut phi,
                    );
                    let f = self.rough[e * nq * nq + qy * nq + qx][0];
                    ic += w * dot(&phi[..nloc], &lc);
                    ih += w * (dot(&phi[..nloc], &lh) - f);
                }
            }
        }
        (ic, ih)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Tensor-product features over the local functions (u fastest).
///
/// Volume form writes `[N | N_x | N_y | lap N]`; with a normal it writes
/// `[N | grad N . m | lap N]`.
fn fill_features(bu: &[f64], bv: &[f64], nl: usize, normal: Option<[f64; 2]>, out: &mut [f64]) {
    let (nu, du, ddu) = (&bu[..nl], &bu[nl..2 * nl], &bu[2 * nl..]);
    let nlv = bv.len() / 3;
    let (nv, dv, ddv) = (&bv[..nlv], &bv[nlv..2 * nlv], &bv[2 * nlv..]);
    let nloc = nl * nlv;
    let mut a = 0;
    for j in 0..nlv {
        for i in 0..nl {
            let (gx, gy) = (du[i] * nv[j], nu[i] * dv[j]);
            out[a] = nu[i] * nv[j];
            let lap = ddu[i] * nv[j] + nu[i] * ddv[j];
            match normal {
                None => {
                    out[nloc + a] = gx;
                    out[2 * nloc + a] = gy;
                    out[3 * nloc + a] = lap;
                }
                Some(m) => {
                    out[nloc + a] = gx * m[0] + gy * m[1];
                    out[2 * nloc + a] = lap;
                }
            }
            a += 1;
        }
    }
}

/// `K[bi, bj] += w * Phi^T D Phi` for `nf` feature rows.
#[allow(clippy::too_many_arguments)]
fn add_block(
    k: &mut [f64],
    nloc: usize,
    nf: usize,
    bi: usize,
    bj: usize,
    phi_test: &[f64],
    phi_trial: &[f64],
    d: &[[f64; 4]; 4],
    w: f64,
    t: &mut [f64],
) {
    // t[row] = sum_l D[row][l] * phi_trial[l]
    let mut any = false;
    for r in 0..nf {
        let tr = &mut t[r * nloc..(r + 1) * nloc];
        tr.iter_mut().for_each(|v| *v = 0.0);
        for l in 0..nf {
            let dl = w * d[r][l];
            if dl != 0.0 {
                any = true;
                let pl = &phi_trial[l * nloc..(l + 1) * nloc];
                for b in 0..nloc {
                    tr[b] += dl * pl[b];
                }
            }
        }
    }
    if !any {
        return;
    }
    let stride = 2 * nloc;
    for r in 0..nf {
        if d[r].iter().all(|&v| v == 0.0) {
            continue;
        }
        let pr = &phi_test[r * nloc..(r + 1) * nloc];
        let tr = &t[r * nloc..(r + 1) * nloc];
        for a in 0..nloc {
            let pa = pr[a];
            if pa == 0.0 {
                continue;
            }
            let row = &mut k[(bi * nloc + a) * stride + bj * nloc..(bi * nloc + a) * stride + bj * nloc + nloc];
            for b in 0..nloc {
                row[b] += pa * tr[b];
            }
        }
    }
}
