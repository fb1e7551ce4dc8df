//! Uniform B-spline bases on the unit parametric interval and their tensor products.
//!
//! Open (clamped) knot vectors interpolate at the ends; periodic knot vectors carry `p` ghost
//! knots on either side and the basis functions are numbered modulo the element count, so a
//! periodic space of `n` elements has exactly `n` functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when testing whether a coordinate lies inside `[0, 1]`.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Open,
    Periodic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector {
    degree: usize,
    n_elems: usize,
    topology: Topology,
    knots: Vec<f64>,
}

/// Builds a uniform knot vector with `n_elems` elements on `[0, 1]`.
pub fn make_knot_vector(n_elems: usize, degree: usize, topology: Topology) -> Result<KnotVector> {
    if n_elems == 0 {
        return Err(Error::config("knot vector needs at least one element"));
    }
    if degree == 0 {
        return Err(Error::config("spline degree must be at least 1"));
    }
    let n = n_elems as f64;
    let knots = match topology {
        Topology::Open => {
            let mut k = vec![0.0; degree + 1];
            k.extend((1..n_elems).map(|i| i as f64 / n));
            k.extend(std::iter::repeat_n(1.0, degree + 1));
            k
        }
        Topology::Periodic => {
            if n_elems < degree + 1 {
                return Err(Error::config(format!(
                    "periodic degree-{degree} basis needs at least {} elements, got {n_elems}",
                    degree + 1
                )));
            }
            (0..=n_elems + 2 * degree).map(|i| (i as f64 - degree as f64) / n).collect()
        }
    };
    Ok(KnotVector { degree, n_elems, topology, knots })
}

impl KnotVector {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_elems(&self) -> usize {
        self.n_elems
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn is_periodic(&self) -> bool {
        self.topology == Topology::Periodic
    }

    /// Number of basis functions in this direction.
    pub fn n_basis(&self) -> usize {
        match self.topology {
            Topology::Open => self.n_elems + self.degree,
            Topology::Periodic => self.n_elems,
        }
    }

    /// Global index of local function `k` supported on element `elem`.
    #[inline]
    pub fn global_index(&self, elem: usize, k: usize) -> usize {
        match self.topology {
            Topology::Open => elem + k,
            Topology::Periodic => (elem + k) % self.n_elems,
        }
    }

    /// Element containing `u` together with `u` mapped into `[0, 1]`.
    pub fn locate(&self, u: f64) -> Result<(usize, f64)> {
        if !u.is_finite() {
            return Err(Error::Domain(u));
        }
        let u = match self.topology {
            Topology::Open => {
                if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&u) {
                    return Err(Error::Domain(u));
                }
                u.clamp(0.0, 1.0)
            }
            Topology::Periodic => u.rem_euclid(1.0),
        };
        let elem = ((u * self.n_elems as f64).floor() as usize).min(self.n_elems - 1);
        Ok((elem, u))
    }

    /// Values and derivatives up to order `n_ders` of the `p + 1` functions supported on
    /// element `elem`, evaluated at `u` (which need not lie inside the element).
    ///
    /// Row `k` of the result holds the `k`-th derivative with respect to `u`.
    pub fn derivatives_on(&self, elem: usize, u: f64, n_ders: usize) -> Vec<Vec<f64>> {
        let p = self.degree;
        let span = elem + p;
        let knots = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = u - knots[span + 1 - j];
            right[j] = knots[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = vec![vec![0.0; p + 1]; n_ders + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0].fill(0.0);
            a[1].fill(0.0);
            a[0][0] = 1.0;
            for k in 1..=n_ders.min(p) {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    let rk = rk as usize;
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for k in 1..=n_ders.min(p) {
            for v in ders[k].iter_mut() {
                *v *= factor;
            }
            factor *= (p - k) as f64;
        }
        ders
    }
}

/// The `p + 1` nonzero basis functions at a parametric point.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisEval {
    /// Element (knot span) containing the point.
    pub span: usize,
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl BasisEval {
    pub fn global_indices(&self, kv: &KnotVector) -> Vec<usize> {
        (0..self.values.len()).map(|k| kv.global_index(self.span, k)).collect()
    }
}

/// Cox–de Boor evaluation of values, first and second parametric derivatives.
pub fn eval_basis(kv: &KnotVector, u: f64) -> Result<BasisEval> {
    let (span, u) = kv.locate(u)?;
    let mut ders = kv.derivatives_on(span, u, 2).into_iter();
    let values = ders.next().unwrap_or_default();
    let d1 = ders.next().unwrap_or_default();
    let d2 = ders.next().unwrap_or_else(|| vec![0.0; values.len()]);
    Ok(BasisEval { span, values, d1, d2 })
}

/// Tensor-product spline space over the unit square.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineSpace {
    pub ku: KnotVector,
    pub kv: KnotVector,
}

impl SplineSpace {
    pub fn new(ku: KnotVector, kv: KnotVector) -> Result<Self> {
        if ku.degree() != kv.degree() {
            return Err(Error::config("both directions must share the spline degree"));
        }
        Ok(SplineSpace { ku, kv })
    }

    pub fn uniform(n_u: usize, n_v: usize, degree: usize, topology: [Topology; 2]) -> Result<Self> {
        Self::new(make_knot_vector(n_u, degree, topology[0])?, make_knot_vector(n_v, degree, topology[1])?)
    }

    pub fn degree(&self) -> usize {
        self.ku.degree()
    }

    pub fn n_u(&self) -> usize {
        self.ku.n_basis()
    }

    pub fn n_v(&self) -> usize {
        self.kv.n_basis()
    }

    /// Global basis count `n_b`.
    pub fn n_basis(&self) -> usize {
        self.n_u() * self.n_v()
    }

    /// Global index of the function that is `iu`-th along u and `iv`-th along v.
    #[inline]
    pub fn index(&self, iu: usize, iv: usize) -> usize {
        iv * self.n_u() + iu
    }
}

/// Local tensor-product basis at one parametric point; local function `j * (p + 1) + i`
/// is the product of the `i`-th u-function and the `j`-th v-function.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorBasis {
    pub span: (usize, usize),
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    pub duu: Vec<f64>,
    pub dvv: Vec<f64>,
    pub duv: Vec<f64>,
}

pub fn tensor_eval(space: &SplineSpace, u: f64, v: f64) -> Result<TensorBasis> {
    let bu = eval_basis(&space.ku, u)?;
    let bv = eval_basis(&space.kv, v)?;
    let nl = bu.values.len();
    let n = nl * nl;
    let mut t = TensorBasis {
        span: (bu.span, bv.span),
        indices: Vec::with_capacity(n),
        values: Vec::with_capacity(n),
        du: Vec::with_capacity(n),
        dv: Vec::with_capacity(n),
        duu: Vec::with_capacity(n),
        dvv: Vec::with_capacity(n),
        duv: Vec::with_capacity(n),
    };
    for j in 0..nl {
        let gv = space.kv.global_index(bv.span, j);
        for i in 0..nl {
            let gu = space.ku.global_index(bu.span, i);
            t.indices.push(space.index(gu, gv));
            t.values.push(bu.values[i] * bv.values[j]);
            t.du.push(bu.d1[i] * bv.values[j]);
            t.dv.push(bu.values[i] * bv.d1[j]);
            t.duu.push(bu.d2[i] * bv.values[j]);
            t.dvv.push(bu.values[i] * bv.d2[j]);
            t.duv.push(bu.d1[i] * bv.d1[j]);
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn open_cubic_knots() {
        let kv = make_knot_vector(4, 3, Topology::Open).unwrap();
        assert_eq!(kv.knots(), &[0.0, 0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(kv.n_basis(), 7);
    }

    #[test]
    fn periodic_count_equals_elements() {
        let kv = make_knot_vector(8, 3, Topology::Periodic).unwrap();
        assert_eq!(kv.n_basis(), 8);
        assert_eq!(kv.knots().len(), 8 + 2 * 3 + 1);
        assert!(make_knot_vector(3, 3, Topology::Periodic).is_err());
    }

    #[test]
    fn empty_mesh_rejected() {
        assert!(matches!(make_knot_vector(0, 3, Topology::Open), Err(Error::Config(_))));
        assert!(make_knot_vector(4, 0, Topology::Open).is_err());
    }

    #[test]
    fn cubic_values_at_interior_knot() {
        let kv = make_knot_vector(8, 3, Topology::Open).unwrap();
        let b = eval_basis(&kv, 0.5).unwrap();
        // the function starting at this knot vanishes there
        let expect = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 0.0];
        for (v, e) in b.values.iter().zip(expect) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-14);
        }
    }

    #[test]
    fn cubic_values_at_element_midpoint() {
        let kv = make_knot_vector(8, 3, Topology::Periodic).unwrap();
        let b = eval_basis(&kv, 2.5 / 8.0).unwrap();
        let expect = [1.0 / 48.0, 23.0 / 48.0, 23.0 / 48.0, 1.0 / 48.0];
        for (v, e) in b.values.iter().zip(expect) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-14);
        }
    }

    #[test]
    fn outside_domain_is_an_error() {
        let kv = make_knot_vector(4, 3, Topology::Open).unwrap();
        assert!(matches!(eval_basis(&kv, 1.5), Err(Error::Domain(_))));
        assert!(eval_basis(&kv, -0.1).is_err());
        assert!(eval_basis(&kv, 1.0).is_ok());
        let kp = make_knot_vector(4, 3, Topology::Periodic).unwrap();
        assert!(eval_basis(&kp, 1.5).is_ok());
        assert!(eval_basis(&kp, f64::NAN).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let kv = make_knot_vector(5, 3, Topology::Open).unwrap();
        let u = 0.37;
        let e = 1e-6;
        let b = eval_basis(&kv, u).unwrap();
        let d = kv.derivatives_on(b.span, u, 3);
        let bp = kv.derivatives_on(b.span, u + e, 2);
        let bm = kv.derivatives_on(b.span, u - e, 2);
        for k in 0..4 {
            assert_abs_diff_eq!(b.d1[k], (bp[0][k] - bm[0][k]) / (2.0 * e), epsilon = 1e-6);
            assert_abs_diff_eq!(b.d2[k], (bp[1][k] - bm[1][k]) / (2.0 * e), epsilon = 1e-5);
            assert_abs_diff_eq!(d[3][k], (bp[2][k] - bm[2][k]) / (2.0 * e), epsilon = 1e-3);
        }
    }

    #[test]
    fn tensor_product_structure() {
        let space = SplineSpace::uniform(4, 6, 3, [Topology::Open, Topology::Periodic]).unwrap();
        let (u, v) = (0.31, 0.77);
        let t = tensor_eval(&space, u, v).unwrap();
        let bu = eval_basis(&space.ku, u).unwrap();
        let bv = eval_basis(&space.kv, v).unwrap();
        for j in 0..4 {
            for i in 0..4 {
                assert_eq!(t.values[j * 4 + i], bu.values[i] * bv.values[j]);
            }
        }
        assert_abs_diff_eq!(t.values.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t.du.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.dv.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
        assert_eq!(space.n_basis(), 7 * 6);
    }

    #[test]
    fn periodic_wrap_rotates_indices() {
        let kv = make_knot_vector(6, 3, Topology::Periodic).unwrap();
        let a = eval_basis(&kv, 0.9).unwrap();
        let b = eval_basis(&kv, 1.9).unwrap();
        let c = eval_basis(&kv, -0.1).unwrap();
        assert_eq!(a.global_indices(&kv), b.global_indices(&kv));
        assert_eq!(a.global_indices(&kv), c.global_indices(&kv));
        for k in 0..4 {
            assert_abs_diff_eq!(a.values[k], b.values[k], epsilon = 1e-13);
            assert_abs_diff_eq!(a.values[k], c.values[k], epsilon = 1e-13);
        }
        assert_eq!(a.global_indices(&kv), vec![5, 0, 1, 2]);
    }
}
