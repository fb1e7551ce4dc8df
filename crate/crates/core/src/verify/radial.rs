//! Axisymmetric finite-volume reference for a flat film with a central surfactant drop.
//!
//! Cell averages of `c` and `h` on `r in [0, R]`, zero flux at both ends, upwinded surfactant
//! transport, linear equation of state. Stored interleaved `[c_0, h_0, c_1, h_1, ...]`.

use crate::assembly::{SparseMatrix, TangentCoeffs};
use crate::error::Result;
use crate::timestepping::Semidiscrete;

/// Residual entries of a cell depend on unknowns at most this many slots away.
const BAND: usize = 5;

pub struct RadialDrop {
    pub capillarity: f64,
    pub gravity: f64,
    pub peclet: f64,
    n: usize,
    dr: f64,
}

impl RadialDrop {
    pub fn new(radius: f64, cells: usize, capillarity: f64, gravity: f64, peclet: f64) -> Self {
        RadialDrop { capillarity, gravity, peclet, n: cells, dr: radius / cells as f64 }
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr
    }

    /// Cell averages sampled at the centers: `c = (1 - tanh(K (r - r0))) / 2`, `h = 1`.
    pub fn initial(&self, r0: f64, steepness: f64) -> Vec<f64> {
        (0..self.n).flat_map(|i| [0.5 * (1.0 - (steepness * (self.center(i) - r0)).tanh()), 1.0]).collect()
    }

    /// `2 pi int c r dr` and `2 pi int h r dr`.
    pub fn masses(&self, y: &[f64]) -> (f64, f64) {
        let w = |i: usize| 2.0 * std::f64::consts::PI * self.center(i) * self.dr;
        (0..self.n).fold((0.0, 0.0), |(a, b), i| (a + w(i) * y[2 * i], b + w(i) * y[2 * i + 1]))
    }

    /// Largest film height and the smallest, over cells.
    pub fn extremes(&self, y: &[f64]) -> (f64, f64) {
        y.iter().skip(1).step_by(2).fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), &h| (hi.max(h), lo.min(h)))
    }

    /// `dy/dt`.
    pub fn rate(&self, y: &[f64], out: &mut [f64]) {
        let (n, dr) = (self.n, self.dr);
        let c = |i: usize| y[2 * i];
        let h = |i: usize| y[2 * i + 1];
        let lap: Vec<f64> = (0..n)
            .map(|i| {
                let right = if i + 1 < n { (i + 1) as f64 * dr * (h(i + 1) - h(i)) / dr } else { 0.0 };
                let left = if i > 0 { i as f64 * dr * (h(i) - h(i - 1)) / dr } else { 0.0 };
                (right - left) / (self.center(i) * dr)
            })
            .collect();
        // r-weighted fluxes through the interior faces
        let mut fc = vec![0.0; n + 1];
        let mut fh = vec![0.0; n + 1];
        for i in 0..n - 1 {
            let rf = (i + 1) as f64 * dr;
            let hf = 0.5 * (h(i) + h(i + 1));
            let p = self.capillarity * ((lap[i + 1] - lap[i]) / dr - self.gravity * (h(i + 1) - h(i)) / dr);
            let s = -(c(i + 1) - c(i)) / dr;
            let vs = hf * hf / 2.0 * p + hf * s;
            let vb = hf * hf / 3.0 * p + hf / 2.0 * s;
            let up = if vs > 0.0 { c(i) } else { c(i + 1) };
            fc[i + 1] = rf * (up * vs - (c(i + 1) - c(i)) / (dr * self.peclet));
            fh[i + 1] = rf * hf * vb;
        }
        for i in 0..n {
            let v = self.center(i) * dr;
            out[2 * i] = -(fc[i + 1] - fc[i]) / v;
            out[2 * i + 1] = -(fh[i + 1] - fh[i]) / v;
        }
    }
}

impl Semidiscrete for RadialDrop {
    fn n_dofs(&self) -> usize {
        2 * self.n
    }

    fn new_matrix(&self) -> SparseMatrix {
        let m = self.n_dofs();
        let t: Vec<_> =
            (0..m).flat_map(|i| (i.saturating_sub(BAND)..(i + BAND + 1).min(m)).map(move |j| (i, j, 0.0))).collect();
        SparseMatrix::from_triplets(m, &t)
    }

    fn residual(&self, rates: &[f64], values: &[f64], r: &mut [f64]) -> Result<()> {
        self.rate(values, r);
        r.iter_mut().zip(rates).for_each(|(r, q)| *r = q - *r);
        Ok(())
    }

    fn residual_and_tangent(
        &self,
        rates: &[f64],
        values: &[f64],
        coeffs: TangentCoeffs,
        r: &mut [f64],
        k: &mut SparseMatrix,
    ) -> Result<()> {
        let m = self.n_dofs();
        self.residual(rates, values, r)?;
        let mut base = vec![0.0; m];
        self.rate(values, &mut base);
        k.clear();
        let colors = 2 * BAND + 1;
        let mut y = values.to_vec();
        let mut f = vec![0.0; m];
        for color in 0..colors {
            let cols: Vec<usize> = (color..m).step_by(colors).collect();
            let eps: Vec<f64> = cols.iter().map(|&j| 1e-7 * values[j].abs().max(1.0)).collect();
            for (&j, &e) in cols.iter().zip(&eps) {
                y[j] += e;
            }
            self.rate(&y, &mut f);
            for (&j, &e) in cols.iter().zip(&eps) {
                y[j] = values[j];
                for i in j.saturating_sub(BAND)..(j + BAND + 1).min(m) {
                    let (row_cols, _) = k.row(i);
                    let pos = k.row_ptr[i] + row_cols.binary_search(&j).expect("banded pattern");
                    k.values[pos] = -coeffs.stiffness * (f[i] - base[i]) / e;
                }
            }
        }
        for i in 0..m {
            let (row_cols, _) = k.row(i);
            let pos = k.row_ptr[i] + row_cols.binary_search(&i).expect("diagonal");
            k.values[pos] += coeffs.mass;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::{LinearSolver, SolverConfig};
    use crate::model::{Eos, ModelParams};
    use crate::timestepping::{alpha_parameters, Integrator, StepControls, StepMode};

    #[test]
    fn tangent_matches_directional_difference() {
        let s = RadialDrop::new(4.0, 40, 0.013, 20.846, 1e3);
        let y = s.initial(1.0, 4.0);
        let m = s.n_dofs();
        let rates = vec![0.1; m];
        let coeffs = TangentCoeffs { mass: 1.7, stiffness: 0.4 };
        let mut k = s.new_matrix();
        let mut r = vec![0.0; m];
        s.residual_and_tangent(&rates, &y, coeffs, &mut r, &mut k).unwrap();
        let d: Vec<f64> = (0..m).map(|i| ((i * 7 % 13) as f64 / 13.0 - 0.5) * 1e-6).collect();
        let mut kd = vec![0.0; m];
        k.mul_vec(&d, &mut kd);
        let shifted = |sgn: f64| {
            let q: Vec<f64> = rates.iter().zip(&d).map(|(a, b)| a + sgn * coeffs.mass * b).collect();
            let v: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a + sgn * coeffs.stiffness * b).collect();
            let mut out = vec![0.0; m];
            s.residual(&q, &v, &mut out).unwrap();
            out
        };
        let (p, n) = (shifted(1.0), shifted(-1.0));
        let err = (0..m).map(|i| (kd[i] - (p[i] - n[i]) / 2.0).abs()).fold(0.0, f64::max);
        let scale = kd.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(err < 1e-4 * scale, "{err:e} vs {scale:e}");
    }

    #[test]
    fn conserves_both_masses() {
        let s = RadialDrop::new(4.0, 80, 0.013, 20.846, 1e4);
        let y0 = s.initial(1.0, 4.0);
        let (c0, h0) = s.masses(&y0);
        let mut it = Integrator::new(
            &s,
            LinearSolver::new(SolverConfig::default()),
            alpha_parameters(0.5).unwrap(),
            StepControls::default(),
            StepMode::Fixed,
            y0,
            vec![0.0; s.n_dofs()],
            0.02,
        )
        .unwrap();
        while it.t < 0.5 {
            it.advance(0.5).unwrap();
        }
        let (c1, h1) = s.masses(&it.values);
        assert!(((c1 - c0) / c0).abs() < 1e-12 && ((h1 - h0) / h0).abs() < 1e-12);
        let (hi, lo) = s.extremes(&it.values);
        assert!(hi > 1.05 && lo < 0.95, "{hi} {lo}");
    }

    #[test]
    fn agrees_with_variable_order_bdf_solution() {
        // same 400-cell grid integrated by scipy's BDF at rtol 1e-7: max h and min h at t = 2.5, 20
        let expected = [(2.5, 1.2251, 0.5580), (20.0, 1.1519, 0.3853)];
        let p = ModelParams {
            capillarity: 0.013,
            gravity: 20.846,
            peclet: 1e5 / 3.0,
            eos: Eos::Linear,
            nitsche_scale: 5.0,
        };
        let trace = crate::verify::radial_reference(&p, 8.0, 400, 0.01, &[2.5, 20.0]).unwrap();
        for ((t, hi, lo), (te, hie, loe)) in trace.records.iter().zip(expected) {
            assert!((t - te).abs() < 1e-9);
            assert!((hi - hie).abs() < 1e-3 && (lo - loe).abs() < 1e-3, "t = {t}: {hi} {lo}");
        }
        assert!(trace.peak.1 < 1.25);
    }
}
