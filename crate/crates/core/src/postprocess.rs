//! Field sampling and the measured quantities of spreading runs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assembly::Assembler;
use crate::bspline::tensor_eval;
use crate::domain::Mesh;
use crate::error::{Error, Result};
use crate::model::Roughness;

/// Fields on a uniform grid covering the domain, row-major with `x` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
    pub hp: Vec<f64>,
    pub grad_c: Vec<f64>,
    pub lap_h: Vec<f64>,
}

impl FieldSample {
    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.x.len() + i
    }

    pub fn max_c(&self) -> f64 {
        self.c.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear interpolation of `field` at `(x, y)`; `None` outside the grid.
    pub fn interpolate(&self, field: &[f64], x: f64, y: f64) -> Option<f64> {
        let locate = |g: &[f64], s: f64| -> Option<(usize, f64)> {
            let (a, b) = (g[0], g[g.len() - 1]);
            if !(s >= a - 1e-12 && s <= b + 1e-12) {
                return None;
            }
            let t = ((s - a) / (b - a) * (g.len() - 1) as f64).clamp(0.0, (g.len() - 1) as f64);
            let i = (t.floor() as usize).min(g.len() - 2);
            Some((i, t - i as f64))
        };
        let (i, fx) = locate(&self.x, x)?;
        let (j, fy) = locate(&self.y, y)?;
        let v = |i, j| field[self.index(i, j)];
        Some(
            (1.0 - fx) * (1.0 - fy) * v(i, j)
                + fx * (1.0 - fy) * v(i + 1, j)
                + (1.0 - fx) * fy * v(i, j + 1)
                + fx * fy * v(i + 1, j + 1),
        )
    }
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Pointwise values of both fields with physical derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointSample {
    pub c: f64,
    pub grad_c: [f64; 2],
    pub h: f64,
    pub grad_h: [f64; 2],
    pub lap_h: f64,
    pub f: f64,
}

/// Evaluates the state (`[c | h]` control variables) at a physical point.
pub fn sample_point(mesh: &Mesh, roughness: &Roughness, values: &[f64], x: f64, y: f64) -> Result<PointSample> {
    let n_b = mesh.n_basis();
    let (u, v) = mesh.to_parametric(x, y);
    let t = tensor_eval(&mesh.space, u, v)?;
    let (w, hh) = (mesh.rect.width(), mesh.rect.height());
    let mut s = PointSample::default();
    for (k, &g) in t.indices.iter().enumerate() {
        let (c, h) = (values[g], values[n_b + g]);
        let (dx, dy) = (t.du[k] / w, t.dv[k] / hh);
        s.c += c * t.values[k];
        s.grad_c[0] += c * dx;
        s.grad_c[1] += c * dy;
        s.h += h * t.values[k];
        s.grad_h[0] += h * dx;
        s.grad_h[1] += h * dy;
        s.lap_h += h * (t.duu[k] / (w * w) + t.dvv[k] / (hh * hh));
    }
    s.f = roughness.eval(x, y).0;
    Ok(s)
}

/// Samples `c`, `h`, `h - f`, `|grad c|` and `Delta h` on an `n x n` grid including the domain edges.
pub fn sample_fields(mesh: &Mesh, roughness: &Roughness, values: &[f64], n: usize) -> Result<FieldSample> {
    assert!(n >= 2, "sample grid needs at least two points per direction");
    assert_eq!(values.len(), 2 * mesh.n_basis());
    let x = grid(mesh.rect.x[0], mesh.rect.x[1], n);
    let y = grid(mesh.rect.y[0], mesh.rect.y[1], n);
    let mut out = FieldSample {
        c: Vec::with_capacity(n * n),
        h: Vec::with_capacity(n * n),
        hp: Vec::with_capacity(n * n),
        grad_c: Vec::with_capacity(n * n),
        lap_h: Vec::with_capacity(n * n),
        x: x.clone(),
        y: y.clone(),
    };
    for &yj in &y {
        for &xi in &x {
            let s = sample_point(mesh, roughness, values, xi, yj)?;
            out.c.push(s.c);
            out.h.push(s.h);
            out.hp.push(s.h - s.f);
            out.grad_c.push(s.grad_c[0].hypot(s.grad_c[1]));
            out.lap_h.push(s.lap_h);
        }
    }
    Ok(out)
}

/// How the leading edge is measured.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FrontSpec {
    /// Outermost `x` with `c >= threshold`, averaged over grid rows.
    Planar,
    /// Outermost radius with `c >= threshold` along `rays` equally spaced rays, averaged.
    Radial { center: [f64; 2], rays: usize },
}

/// Outermost crossing of `level` in a sequence scanned from the far end, linearly interpolated.
fn outermost_crossing(s: &[f64], c: &[f64], level: f64) -> Option<f64> {
    let k = c.iter().rposition(|&v| v >= level)?;
    if k + 1 == c.len() {
        return Some(s[k]);
    }
    let (a, b) = (c[k], c[k + 1]);
    let t = if a > b { (a - level) / (a - b) } else { 0.0 };
    Some(s[k] + t * (s[k + 1] - s[k]))
}

/// Leading-edge position at `threshold * max c`.
pub fn leading_edge(sample: &FieldSample, spec: FrontSpec, threshold: f64) -> Result<f64> {
    let cmax = sample.max_c();
    if !(cmax > 0.0) {
        return Err(Error::FrontNotFound);
    }
    let level = threshold * cmax;
    match spec {
        FrontSpec::Planar => {
            let nx = sample.nx();
            let mut sum = 0.0;
            for j in 0..sample.ny() {
                let row = &sample.c[j * nx..(j + 1) * nx];
                sum += outermost_crossing(&sample.x, row, level).ok_or(Error::FrontNotFound)?;
            }
            Ok(sum / sample.ny() as f64)
        }
        FrontSpec::Radial { center, rays } => {
            let dx = (sample.x[1] - sample.x[0]).min(sample.y[1] - sample.y[0]);
            let ds = 0.25 * dx;
            let mut sum = 0.0;
            for k in 0..rays {
                let phi = 2.0 * PI * k as f64 / rays as f64;
                let (cs, sn) = (phi.cos(), phi.sin());
                let (mut s, mut c) = (Vec::new(), Vec::new());
                let mut r = 0.0;
                while let Some(v) = sample.interpolate(&sample.c, center[0] + r * cs, center[1] + r * sn) {
                    s.push(r);
                    c.push(v);
                    r += ds;
                }
                sum += outermost_crossing(&s, &c, level).ok_or(Error::FrontNotFound)?;
            }
            Ok(sum / rays as f64)
        }
    }
}

/// Time series of front positions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrontSeries {
    pub points: Vec<(f64, f64)>,
}

impl FrontSeries {
    pub fn push(&mut self, t: f64, position: f64) {
        if let Some(&(last, _)) = self.points.last() {
            assert!(t > last, "front series times must increase");
        }
        self.points.push((t, position));
    }

    pub fn at(&self, t: f64) -> Option<f64> {
        self.points.iter().find(|p| (p.0 - t).abs() <= 1e-9 * t.abs().max(1.0)).map(|p| p.1)
    }

    pub fn is_monotone(&self, tol: f64) -> bool {
        self.points.windows(2).all(|w| w[1].1 >= w[0].1 - tol)
    }
}

/// Least-squares slope of `log(position)` against `log(t)` over points with `t` in the window.
pub fn fit_spreading_exponent(points: &[(f64, f64)], window: [f64; 2]) -> Result<f64> {
    let sel: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, r)| *t >= window[0] * (1.0 - 1e-12) && *t <= window[1] * (1.0 + 1e-12) && *t > 0.0 && *r > 0.0)
        .map(|(t, r)| (t.ln(), r.ln()))
        .collect();
    if sel.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} points in [{}, {}]", sel.len(), window[0], window[1])));
    }
    let n = sel.len() as f64;
    let (mx, my) = (sel.iter().map(|p| p.0).sum::<f64>() / n, sel.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = sel.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = sel.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-300 {
        return Err(Error::DegenerateFit("all times coincide".into()));
    }
    Ok(sxy / sxx)
}

/// `(integral of c, integral of h - f)` by Gauss quadrature.
pub fn mass_integrals(assembler: &Assembler, values: &[f64]) -> (f64, f64) {
    assembler.mass_integrals(values)
}

/// Path along which fingers are counted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Transect {
    /// Straight segment; `cyclic` when its ends are identified by periodicity.
    Line { from: [f64; 2], to: [f64; 2], points: usize, cyclic: bool },
    /// Full circle, always cyclic.
    Circle { center: [f64; 2], radius: f64, points: usize },
}

impl Transect {
    pub fn is_cyclic(&self) -> bool {
        match *self {
            Transect::Line { cyclic, .. } => cyclic,
            Transect::Circle { .. } => true,
        }
    }

    /// Sample points; a cyclic line omits its duplicated end point.
    pub fn points(&self) -> Vec<[f64; 2]> {
        match *self {
            Transect::Line { from, to, points, cyclic } => {
                let denom = if cyclic { points } else { points.max(2) - 1 } as f64;
                (0..points)
                    .map(|k| {
                        let t = k as f64 / denom;
                        [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])]
                    })
                    .collect()
            }
            Transect::Circle { center, radius, points } => (0..points)
                .map(|k| {
                    let phi = 2.0 * PI * k as f64 / points as f64;
                    [center[0] + radius * phi.cos(), center[1] + radius * phi.sin()]
                })
                .collect(),
        }
    }
}

/// `h - f` along a transect.
pub fn transect_values(mesh: &Mesh, roughness: &Roughness, values: &[f64], transect: &Transect) -> Result<Vec<f64>> {
    transect.points().into_iter().map(|[x, y]| sample_point(mesh, roughness, values, x, y).map(|s| s.h - s.f)).collect()
}

/// Number of strict interior local maxima whose topographic prominence reaches `floor * (max - min)`.
pub fn count_peaks(values: &[f64], cyclic: bool, floor: f64) -> usize {
    // collapse plateaus so that a flat top counts once
    let mut v: Vec<f64> = Vec::with_capacity(values.len());
    for &x in values {
        if v.last() != Some(&x) {
            v.push(x);
        }
    }
    if cyclic && v.len() > 1 && v.first() == v.last() {
        v.pop();
    }
    let n = v.len();
    if n < 3 {
        return 0;
    }
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let min_prom = floor * (hi - lo);
    if !(hi - lo > 1e-9 * hi.abs().max(1.0)) {
        return 0;
    }
    let at = |k: isize| -> Option<f64> {
        if cyclic {
            Some(v[k.rem_euclid(n as isize) as usize])
        } else if k < 0 || k >= n as isize {
            None
        } else {
            Some(v[k as usize])
        }
    };
    // lowest value between peak i and the nearest higher point in direction `dir`
    let saddle = |i: usize, dir: isize| -> f64 {
        let (peak, mut low) = (v[i], v[i]);
        for step in 1..n as isize {
            match at(i as isize + dir * step) {
                Some(x) if x > peak => return low,
                Some(x) => low = low.min(x),
                None => break,
            }
        }
        // no higher point: the slope on this side never leads up again
        if cyclic {
            lo
        } else {
            low
        }
    };
    (0..n)
        .filter(|&i| {
            let (l, r) = (at(i as isize - 1), at(i as isize + 1));
            let is_max = matches!((l, r), (Some(a), Some(b)) if v[i] > a && v[i] > b);
            is_max && v[i] - saddle(i, -1).max(saddle(i, 1)) >= min_prom
        })
        .count()
}

/// Default prominence floor relative to the transect range.
pub const FINGER_PROMINENCE: f64 = 0.05;

/// Fingers crossing the transect, counted as prominent maxima of `h - f`.
pub fn count_fingers(mesh: &Mesh, roughness: &Roughness, values: &[f64], transect: &Transect) -> Result<usize> {
    let v = transect_values(mesh, roughness, values, transect)?;
    Ok(count_peaks(&v, transect.is_cyclic(), FINGER_PROMINENCE))
}

/// Cross-section at fixed `x`: rows of `(y, c, h, h - f, |grad c|)`.
pub fn profile_at_x(mesh: &Mesh, roughness: &Roughness, values: &[f64], x: f64, n: usize) -> Result<Vec<[f64; 5]>> {
    grid(mesh.rect.y[0], mesh.rect.y[1], n)
        .into_iter()
        .map(|y| {
            let s = sample_point(mesh, roughness, values, x, y)?;
            Ok([y, s.c, s.h, s.h - s.f, s.grad_c[0].hypot(s.grad_c[1])])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::{SplineSpace, Topology};
    use crate::domain::{build_mesh, Rect};
    use crate::model::{heaviside, Eos, ModelParams};
    use proptest::prelude::*;

    fn mesh(n: usize, x: [f64; 2], y: [f64; 2], periodic_y: bool) -> Mesh {
        let top = [Topology::Open, if periodic_y { Topology::Periodic } else { Topology::Open }];
        build_mesh(SplineSpace::uniform(n, n, 3, top).unwrap(), Rect::new(x, y).unwrap(), 4).unwrap()
    }

    fn assembler(m: Mesh) -> Assembler {
        let p = ModelParams { capillarity: 1e-4, gravity: 0.0, peclet: 1e4, eos: Eos::Linear, nitsche_scale: 5.0 };
        Assembler::new(m, p, Roughness::zero()).unwrap()
    }

    fn project(a: &Assembler, c: impl Fn(f64, f64) -> f64, h: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut v = a.l2_project(c).unwrap();
        v.extend(a.l2_project(h).unwrap());
        v
    }

    #[test]
    fn constant_fields() {
        let a = assembler(mesh(4, [0.0, 2.0], [0.0, 2.0], false));
        let n_b = a.n_b();
        let mut v = vec![0.3; n_b];
        v.extend(vec![1.2; n_b]);
        let s = sample_fields(a.mesh(), &Roughness::zero(), &v, 9).unwrap();
        assert!(s.c.iter().all(|&x| (x - 0.3).abs() < 1e-12));
        assert!(s.hp.iter().all(|&x| (x - 1.2).abs() < 1e-12));
        assert!(s.grad_c.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn linear_h_has_zero_laplacian() {
        let a = assembler(mesh(6, [0.0, 3.0], [-1.0, 1.0], false));
        let v = project(&a, |_, _| 0.0, |x, y| 1.0 + 0.1 * x - 0.2 * y);
        let s = sample_fields(a.mesh(), &Roughness::zero(), &v, 17).unwrap();
        assert!(s.lap_h.iter().all(|&x| x.abs() < 1e-8));
    }

    #[test]
    fn gradient_peak_at_tanh_center() {
        let a = assembler(mesh(48, [0.0, 4.0], [0.0, 1.0], true));
        let v = project(&a, |x, _| 0.5 * (1.0 - (4.0 * (x - 2.0)).tanh()), |_, _| 1.0);
        let s = sample_fields(a.mesh(), &Roughness::zero(), &v, 81).unwrap();
        let row = &s.grad_c[40 * 81..41 * 81];
        let imax = (0..81).max_by(|&i, &j| row[i].partial_cmp(&row[j]).unwrap()).unwrap();
        assert!((s.x[imax] - 2.0).abs() <= s.x[1] - s.x[0]);
        // analytic peak of d/dx of the tanh profile
        assert!((row[imax] - 2.0).abs() < 1e-2, "{}", row[imax]);
    }

    fn step_sample(n: usize) -> FieldSample {
        let x = grid(0.0, 4.0, n);
        let y = grid(0.0, 1.0, 5);
        let c: Vec<f64> = y.iter().flat_map(|_| x.iter().map(|&x| if x <= 1.0 { 1.0 } else { 0.0 })).collect();
        let z = vec![0.0; c.len()];
        FieldSample { x, y, hp: z.clone(), h: z.clone(), grad_c: z.clone(), lap_h: z, c }
    }

    #[test]
    fn planar_front_of_step() {
        let s = step_sample(33);
        let xs = leading_edge(&s, FrontSpec::Planar, 1e-3).unwrap();
        assert!((xs - 1.0).abs() <= s.x[1] - s.x[0]);
    }

    #[test]
    fn radial_front_of_disc() {
        let n = 161;
        let x = grid(-4.0, 4.0, n);
        let c: Vec<f64> =
            x.iter().flat_map(|&y| x.iter().map(move |&x| 0.5 * (1.0 - (10.0 * (x.hypot(y) - 2.0)).tanh()))).collect();
        let z = vec![0.0; c.len()];
        let s = FieldSample { x: x.clone(), y: x, hp: z.clone(), h: z.clone(), grad_c: z.clone(), lap_h: z, c };
        let r = leading_edge(&s, FrontSpec::Radial { center: [0.0, 0.0], rays: 64 }, 1e-3).unwrap();
        // 0.5 (1 - tanh(10 (r - 2))) = 1e-3 (max c ~ 1)
        let exact = 2.0 + (1.0f64 - 2e-3).atanh() / 10.0;
        assert!((r - exact).abs() < 0.01, "{r} vs {exact}");
    }

    #[test]
    fn front_missing() {
        let mut s = step_sample(9);
        s.c.iter_mut().for_each(|c| *c = 0.0);
        assert!(matches!(leading_edge(&s, FrontSpec::Planar, 1e-3), Err(Error::FrontNotFound)));
    }

    #[test]
    fn exponent_of_power_law() {
        let pts: Vec<_> = (0..8).map(|k| 2f64.powi(k)).map(|t| (t, 2.0 * t.powf(0.25))).collect();
        assert!((fit_spreading_exponent(&pts, [1.0, 128.0]).unwrap() - 0.25).abs() < 1e-14);
        assert!(fit_spreading_exponent(&pts, [200.0, 300.0]).is_err());
        assert!(fit_spreading_exponent(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)], [0.0, 2.0]).is_err());
    }

    // reference front data for the drop and strip cases (t, r_s) and (t, x_s)
    const DROP: [(f64, f64); 4] = [(16.0, 4.18), (32.0, 4.94), (64.0, 5.82), (128.0, 6.91)];
    const STRIP: [(f64, f64); 4] = [(16.0, 5.55), (32.0, 6.99), (64.0, 8.8), (128.0, 11.09)];

    fn ls_oracle(p: &[(f64, f64)]) -> f64 {
        // normal equations for y = a + b x on log data, solved by Cramer's rule
        let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(t, r) in p {
            let (x, y) = (t.log10(), r.log10());
            n += 1.0;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }

    #[test]
    fn exponent_of_reference_tables() {
        let d = fit_spreading_exponent(&DROP, [16.0, 128.0]).unwrap();
        let s = fit_spreading_exponent(&STRIP, [16.0, 128.0]).unwrap();
        assert!((d - ls_oracle(&DROP)).abs() < 1e-12);
        assert!((s - ls_oracle(&STRIP)).abs() < 1e-12);
        assert!((d - 0.24).abs() < 0.01, "{d}");
        assert!((s - 0.33).abs() < 0.01, "{s}");
    }

    #[test]
    fn mass_of_constant_and_strip() {
        let a = assembler(mesh(32, [0.0, 16.0], [0.0, 16.0], true));
        let n_b = a.n_b();
        let mut v = vec![1.0; 2 * n_b];
        let (mc, mh) = mass_integrals(&a, &v);
        assert!((mc - 256.0).abs() < 1e-10 && (mh - 256.0).abs() < 1e-10);
        v = project(&a, |x, _| 0.5 * (1.0 - (10.0 * (x - 1.0)).tanh()), |_, _| 1.0);
        let (mc, _) = mass_integrals(&a, &v);
        // adaptive Simpson oracle of the 1D profile times the 16-wide strip
        let exact = 16.0 * simpson(&|x: f64| 0.5 * (1.0 - (10.0 * (x - 1.0)).tanh()), 0.0, 16.0, 1e-12);
        assert!((exact - 16.0).abs() < 1e-6);
        assert!((mc - exact).abs() < 1e-3, "{mc} vs {exact}");
    }

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0) + rec(f, m, b, fm, frm, fb, right, tol / 2.0)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol)
    }

    #[test]
    fn peaks_of_cosine() {
        for k in [1usize, 7, 20] {
            let v: Vec<f64> = (0..400).map(|i| (k as f64 * 2.0 * PI * i as f64 / 400.0).cos()).collect();
            assert_eq!(count_peaks(&v, true, 0.05), k);
        }
        assert_eq!(count_peaks(&[1.0; 50], true, 0.05), 0);
    }

    #[test]
    fn small_ripples_ignored() {
        let v: Vec<f64> = (0..700)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 700.0;
                (7.0 * t).cos() + 0.01 * (90.0 * t).sin()
            })
            .collect();
        assert_eq!(count_peaks(&v, true, 0.05), 7);
    }

    #[test]
    fn open_transect_edges() {
        // rising to the right end: the end point is not a strict interior maximum
        assert_eq!(count_peaks(&[0.0, 1.0, 2.0, 3.0], false, 0.05), 0);
        assert_eq!(count_peaks(&[0.0, 2.0, 0.0, 1.0, 0.0], false, 0.05), 2);
    }

    #[test]
    fn flat_strip_has_no_fingers() {
        let a = assembler(mesh(16, [0.0, 4.0], [0.0, 2.0], true));
        let v = project(&a, |x, _| heaviside(1.0 - x, 10.0), |x, _| 1.0 + 0.2 * (-(x - 1.0).powi(2)).exp());
        let t = Transect::Line { from: [1.0, 0.0], to: [1.0, 2.0], points: 64, cyclic: true };
        assert_eq!(count_fingers(a.mesh(), &Roughness::zero(), &v, &t).unwrap(), 0);
    }

    proptest! {
        #[test]
        fn shifted_cosine_count_is_invariant(k in 1usize..12, shift in 0.0..1.0f64) {
            let n = 360;
            let v: Vec<f64> = (0..n)
                .map(|i| (k as f64 * 2.0 * PI * (i as f64 / n as f64 + shift)).cos())
                .collect();
            prop_assert_eq!(count_peaks(&v, true, 0.05), k);
        }
    }
}
