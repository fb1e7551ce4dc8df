//! Generalized-alpha predictor/multicorrector with an embedded backward-Euler error
//! estimate driving the step size.

use serde::{Deserialize, Serialize};

use crate::assembly::{Assembler, SparseMatrix, TangentCoeffs};
use crate::error::{Error, Result};
use crate::linsolve::{LinearSolveReport, LinearSolver};

/// A first-order system `R(dS/dt, S) = 0` with a consistent linearization.
pub trait Semidiscrete {
    fn n_dofs(&self) -> usize;
    fn new_matrix(&self) -> SparseMatrix;
    fn residual(&self, rates: &[f64], values: &[f64], r: &mut [f64]) -> Result<()>;
    fn residual_and_tangent(
        &self,
        rates: &[f64],
        values: &[f64],
        coeffs: TangentCoeffs,
        r: &mut [f64],
        k: &mut SparseMatrix,
    ) -> Result<()>;
}

impl Semidiscrete for Assembler {
    fn n_dofs(&self) -> usize {
        Assembler::n_dofs(self)
    }

    fn new_matrix(&self) -> SparseMatrix {
        Assembler::new_matrix(self)
    }

    fn residual(&self, rates: &[f64], values: &[f64], r: &mut [f64]) -> Result<()> {
        Assembler::residual(self, rates, values, r)
    }

    fn residual_and_tangent(
        &self,
        rates: &[f64],
        values: &[f64],
        coeffs: TangentCoeffs,
        r: &mut [f64],
        k: &mut SparseMatrix,
    ) -> Result<()> {
        Assembler::residual_and_tangent(self, rates, values, coeffs, r, k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaParams {
    pub rho_inf: f64,
    pub alpha_m: f64,
    pub alpha_f: f64,
    pub gamma: f64,
}

impl AlphaParams {
    /// The implicit Euler limit `alpha_m = alpha_f = gamma = 1`.
    pub fn backward_euler() -> Self {
        AlphaParams { rho_inf: 0.0, alpha_m: 1.0, alpha_f: 1.0, gamma: 1.0 }
    }
}

/// Second-order, unconditionally stable parameters for spectral radius `rho_inf` at infinity.
pub fn alpha_parameters(rho_inf: f64) -> Result<AlphaParams> {
    if !(0.0..=1.0).contains(&rho_inf) {
        return Err(Error::config(format!("rho_inf must lie in [0, 1], got {rho_inf}")));
    }
    let alpha_m = 0.5 * (3.0 - rho_inf) / (1.0 + rho_inf);
    let alpha_f = 1.0 / (1.0 + rho_inf);
    Ok(AlphaParams { rho_inf, alpha_m, alpha_f, gamma: 0.5 + alpha_m - alpha_f })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonControls {
    #[serde(default = "d_newton_iter")]
    pub max_iter: usize,
    #[serde(default = "d_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "d_abs_tol")]
    pub abs_tol: f64,
}

fn d_newton_iter() -> usize {
    8
}
fn d_rel_tol() -> f64 {
    1e-6
}
fn d_abs_tol() -> f64 {
    1e-10
}

impl Default for NewtonControls {
    fn default() -> Self {
        NewtonControls { max_iter: d_newton_iter(), rel_tol: d_rel_tol(), abs_tol: d_abs_tol() }
    }
}

/// Step-size controller settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepControls {
    #[serde(default = "d_safety")]
    pub safety: f64,
    #[serde(default = "d_factor_min")]
    pub factor_min: f64,
    #[serde(default = "d_factor_max")]
    pub factor_max: f64,
    #[serde(default = "d_tol")]
    pub tol_abs: f64,
    #[serde(default = "d_tol")]
    pub tol_rel: f64,
    /// Consecutive rejections tolerated before the run aborts.
    #[serde(default = "d_retries")]
    pub max_retries: usize,
    #[serde(default = "d_dt_min")]
    pub dt_min: f64,
    #[serde(default = "d_dt_max")]
    pub dt_max: f64,
    #[serde(default)]
    pub newton: NewtonControls,
}

fn d_safety() -> f64 {
    0.9
}
fn d_factor_min() -> f64 {
    0.1
}
fn d_factor_max() -> f64 {
    10.0
}
fn d_tol() -> f64 {
    1e-4
}
fn d_retries() -> usize {
    12
}
fn d_dt_min() -> f64 {
    1e-12
}
fn d_dt_max() -> f64 {
    f64::INFINITY
}

impl Default for StepControls {
    fn default() -> Self {
        StepControls {
            safety: d_safety(),
            factor_min: d_factor_min(),
            factor_max: d_factor_max(),
            tol_abs: d_tol(),
            tol_rel: d_tol(),
            max_retries: d_retries(),
            dt_min: d_dt_min(),
            dt_max: d_dt_max(),
            newton: NewtonControls::default(),
        }
    }
}

impl StepControls {
    pub fn validate(&self) -> Result<()> {
        let ok = self.safety > 0.0
            && self.safety < 1.0
            && self.factor_min > 0.0
            && self.factor_min < 1.0
            && self.factor_max > 1.0
            && self.tol_abs >= 0.0
            && self.tol_rel >= 0.0
            && self.tol_abs + self.tol_rel > 0.0
            && self.dt_min > 0.0
            && self.dt_max > self.dt_min
            && self.newton.max_iter > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(
                "step controls need 0 < safety < 1, 0 < factor_min < 1 < factor_max, \
                 positive tolerances and 0 < dt_min < dt_max",
            ))
        }
    }
}

/// Convergence record of one Newton solve.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NewtonStats {
    pub iterations: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub factorizations: usize,
    pub linear_iterations: usize,
}

/// Outcome of one accepted step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub accepted: bool,
    pub t: f64,
    pub dt: f64,
    pub dt_next: f64,
    pub error: f64,
    pub newton_iterations: usize,
    pub estimator_iterations: usize,
    pub rejections: usize,
    pub positivity_rejections: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves one step of `R(rate_{n+alpha_m}, S_{n+alpha_f}) = 0`.
///
/// Without `start`, the generalized-alpha predictor (`S = S_n`,
/// `rate = (gamma - 1) / gamma * rate_n`) is used; otherwise `start` is taken as the initial
/// iterate of `S_{n+1}` and its rate follows from the Newmark relation. `reference` replaces the
/// initial residual norm in the relative convergence test. At least one correction is applied
/// unless the starting residual already meets the absolute tolerance.
#[allow(clippy::too_many_arguments)]
pub fn solve_step<S: Semidiscrete + ?Sized>(
    system: &S,
    solver: &mut LinearSolver,
    alpha: &AlphaParams,
    newton: &NewtonControls,
    values_n: &[f64],
    rates_n: &[f64],
    dt: f64,
    start: Option<&[f64]>,
    reference: Option<f64>,
) -> Result<(Vec<f64>, Vec<f64>, NewtonStats)> {
    let n = system.n_dofs();
    let AlphaParams { alpha_m, alpha_f, gamma, .. } = *alpha;
    let (mut values, mut rates): (Vec<f64>, Vec<f64>) = match start {
        None => (values_n.to_vec(), rates_n.iter().map(|r| (gamma - 1.0) / gamma * r).collect()),
        Some(s) => {
            let rates = (0..n).map(|i| ((s[i] - values_n[i]) / dt - (1.0 - gamma) * rates_n[i]) / gamma).collect();
            (s.to_vec(), rates)
        }
    };
    let coeffs = TangentCoeffs { mass: alpha_m, stiffness: alpha_f * gamma * dt };
    let mut k = system.new_matrix();
    let mut r = vec![0.0; n];
    let mut sa = vec![0.0; n];
    let mut ra = vec![0.0; n];
    let mut stats = NewtonStats::default();
    let factorizations0 = solver.factorizations();
    for it in 0..=newton.max_iter {
        for i in 0..n {
            sa[i] = values_n[i] + alpha_f * (values[i] - values_n[i]);
            ra[i] = rates_n[i] + alpha_m * (rates[i] - rates_n[i]);
        }
        system.residual(&ra, &sa, &mut r)?;
        let rn = norm(&r);
        if !rn.is_finite() {
            return Err(Error::NewtonFailure { iterations: it, residual: rn });
        }
        if it == 0 {
            stats.initial_residual = rn;
        }
        stats.final_residual = rn;
        let target = (newton.rel_tol * reference.unwrap_or(stats.initial_residual)).max(newton.abs_tol);
        if rn <= target && (it > 0 || rn <= newton.abs_tol) {
            stats.iterations = it;
            stats.factorizations = solver.factorizations() - factorizations0;
            return Ok((values, rates, stats));
        }
        if it == newton.max_iter {
            break;
        }
        system.residual_and_tangent(&ra, &sa, coeffs, &mut r, &mut k)?;
        r.iter_mut().for_each(|v| *v = -*v);
        let (d, rep): (Vec<f64>, LinearSolveReport) = solver.solve(&k, &r)?;
        stats.linear_iterations += rep.iterations;
        for i in 0..n {
            rates[i] += d[i];
            values[i] += gamma * dt * d[i];
        }
    }
    Err(Error::NewtonFailure { iterations: newton.max_iter, residual: stats.final_residual })
}

/// One generalized-alpha step from `(S_n, rate_n)`.
pub fn step_generalized_alpha<S: Semidiscrete + ?Sized>(
    system: &S,
    solver: &mut LinearSolver,
    alpha: &AlphaParams,
    newton: &NewtonControls,
    values_n: &[f64],
    rates_n: &[f64],
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>, NewtonStats)> {
    solve_step(system, solver, alpha, newton, values_n, rates_n, dt, None, None)
}

/// One backward-Euler step, optionally warm-started from another solution of the same step.
#[allow(clippy::too_many_arguments)]
pub fn step_backward_euler<S: Semidiscrete + ?Sized>(
    system: &S,
    solver: &mut LinearSolver,
    newton: &NewtonControls,
    values_n: &[f64],
    rates_n: &[f64],
    dt: f64,
    start: Option<&[f64]>,
    reference: Option<f64>,
) -> Result<(Vec<f64>, NewtonStats)> {
    let be = AlphaParams::backward_euler();
    let (v, _, stats) = solve_step(system, solver, &be, newton, values_n, rates_n, dt, start, reference)?;
    Ok((v, stats))
}

/// Controller verdict on one step attempt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDecision {
    pub accept: bool,
    pub error: f64,
    pub factor: f64,
    pub dt_next: f64,
}

/// Scaled RMS difference between the two candidate solutions.
pub fn error_norm(ga: &[f64], be: &[f64], tol_abs: f64, tol_rel: f64) -> f64 {
    let n = ga.len().max(1);
    let s: f64 = ga
        .iter()
        .zip(be)
        .map(|(a, b)| {
            let tol = tol_abs + a.abs().max(b.abs()) * tol_rel;
            let q = (a - b).abs() / tol;
            q * q
        })
        .sum();
    (s / n as f64).sqrt()
}

/// Step-size factor for a given error estimate.
pub fn step_factor(error: f64, c: &StepControls) -> f64 {
    let raw = if error == 0.0 { f64::INFINITY } else { c.safety / error.sqrt() };
    c.factor_max.min(c.factor_min.max(raw))
}

/// Accept or reject from the error estimate `error`; a non-finite error always rejects with
/// the minimum factor.
pub fn decide(error: f64, dt: f64, c: &StepControls) -> StepDecision {
    let error = if error.is_nan() { f64::INFINITY } else { error };
    let factor = step_factor(error, c);
    StepDecision { accept: error <= 1.0, error, factor, dt_next: dt * factor }
}

pub fn adapt_step(ga: &[f64], be: &[f64], dt: f64, c: &StepControls) -> StepDecision {
    decide(error_norm(ga, be, c.tol_abs, c.tol_rel), dt, c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMode {
    Adaptive,
    Fixed,
}

/// Time integration loop for a semidiscrete system.
type Attempt = (Vec<f64>, Vec<f64>, NewtonStats, NewtonStats, f64);

/// Integrator state without the system borrow.
pub struct IntegratorState {
    solver: LinearSolver,
    estimator: LinearSolver,
    alpha: AlphaParams,
    controls: StepControls,
    mode: StepMode,
    pub t: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    pub rates: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

pub struct Integrator<'a, S: Semidiscrete + ?Sized> {
    system: &'a S,
    solver: LinearSolver,
    // separate factorization cache for the estimator, whose tangent has other coefficients
    estimator: LinearSolver,
    alpha: AlphaParams,
    controls: StepControls,
    mode: StepMode,
    pub t: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    pub rates: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

impl<'a, S: Semidiscrete + ?Sized> Integrator<'a, S> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        system: &'a S,
        solver: LinearSolver,
        alpha: AlphaParams,
        controls: StepControls,
        mode: StepMode,
        values: Vec<f64>,
        rates: Vec<f64>,
        dt: f64,
    ) -> Result<Self> {
        controls.validate()?;
        if !(dt > 0.0) {
            return Err(Error::config(format!("initial time step must be positive, got {dt}")));
        }
        assert_eq!(values.len(), system.n_dofs());
        assert_eq!(rates.len(), system.n_dofs());
        Ok(Integrator {
            system,
            estimator: LinearSolver::new(*solver.config()),
            solver,
            alpha,
            controls,
            mode,
            t: 0.0,
            dt,
            values,
            rates,
            accepted: 0,
            rejected: 0,
        })
    }

    pub fn solver(&self) -> &LinearSolver {
        &self.solver
    }

    /// Detaches the state from the borrowed system.
    pub fn suspend(self) -> IntegratorState {
        IntegratorState {
            solver: self.solver,
            estimator: self.estimator,
            alpha: self.alpha,
            controls: self.controls,
            mode: self.mode,
            t: self.t,
            dt: self.dt,
            values: self.values,
            rates: self.rates,
            accepted: self.accepted,
            rejected: self.rejected,
        }
    }

    /// Reattaches a suspended state to `system`, keeping the factorization caches.
    pub fn resume(system: &'a S, s: IntegratorState) -> Self {
        assert_eq!(s.values.len(), system.n_dofs());
        Integrator {
            system,
            solver: s.solver,
            estimator: s.estimator,
            alpha: s.alpha,
            controls: s.controls,
            mode: s.mode,
            t: s.t,
            dt: s.dt,
            values: s.values,
            rates: s.rates,
            accepted: s.accepted,
            rejected: s.rejected,
        }
    }

    /// Numeric factorizations computed so far by both schemes.
    pub fn factorizations(&self) -> usize {
        self.solver.factorizations() + self.estimator.factorizations()
    }

    /// Replaces the rates by the consistent ones, `M rate = -R(0, S)`.
    pub fn make_rates_consistent(&mut self) -> Result<()> {
        let n = self.system.n_dofs();
        let zero = vec![0.0; n];
        let mut r = vec![0.0; n];
        let mut k = self.system.new_matrix();
        let coeffs = TangentCoeffs { mass: 1.0, stiffness: 0.0 };
        self.system.residual_and_tangent(&zero, &self.values, coeffs, &mut r, &mut k)?;
        r.iter_mut().for_each(|v| *v = -*v);
        let (x, _) = self.solver.solve(&k, &r)?;
        self.solver.invalidate();
        self.rates = x;
        Ok(())
    }

    /// Advances by one accepted step without passing `t_stop`.
    pub fn advance(&mut self, t_stop: f64) -> Result<StepReport> {
        let remaining = t_stop - self.t;
        if !(remaining > 0.0) {
            return Err(Error::config(format!("cannot advance from t = {} to {t_stop}", self.t)));
        }
        match self.mode {
            StepMode::Fixed => self.advance_fixed(t_stop),
            StepMode::Adaptive => self.advance_adaptive(t_stop),
        }
    }

    fn clamp(&self, t_stop: f64, dt: f64) -> (f64, bool) {
        let remaining = t_stop - self.t;
        // avoid leaving a sliver smaller than a percent of the step
        if dt >= remaining * (1.0 - 1e-10) || remaining - dt < 0.01 * dt {
            (remaining, true)
        } else {
            (dt, false)
        }
    }

    fn advance_fixed(&mut self, t_stop: f64) -> Result<StepReport> {
        let (dt, _) = self.clamp(t_stop, self.dt);
        let (v, r, st) = step_generalized_alpha(
            self.system,
            &mut self.solver,
            &self.alpha,
            &self.controls.newton,
            &self.values,
            &self.rates,
            dt,
        )?;
        self.values = v;
        self.rates = r;
        self.t = if dt == t_stop - self.t { t_stop } else { self.t + dt };
        self.accepted += 1;
        Ok(StepReport {
            accepted: true,
            t: self.t,
            dt,
            dt_next: self.dt,
            error: f64::NAN,
            newton_iterations: st.iterations,
            estimator_iterations: 0,
            rejections: 0,
            positivity_rejections: 0,
        })
    }

    /// Generalized-alpha step plus estimator: `(values, rates, stats, estimator stats, error)`.
    fn attempt(&mut self, dt: f64) -> Result<Attempt> {
        let (ga, ga_rates, st) = step_generalized_alpha(
            self.system,
            &mut self.solver,
            &self.alpha,
            &self.controls.newton,
            &self.values,
            &self.rates,
            dt,
        )?;
        let (be, st_be) = step_backward_euler(
            self.system,
            &mut self.estimator,
            &self.controls.newton,
            &self.values,
            &self.rates,
            dt,
            Some(&ga),
            Some(st.initial_residual),
        )?;
        let e = error_norm(&ga, &be, self.controls.tol_abs, self.controls.tol_rel);
        Ok((ga, ga_rates, st, st_be, e))
    }

    fn advance_adaptive(&mut self, t_stop: f64) -> Result<StepReport> {
        let c = self.controls;
        let mut rejections = 0;
        let mut positivity = 0;
        loop {
            let proposed = self.dt.min(c.dt_max);
            let (dt, clamped) = self.clamp(t_stop, proposed);
            let outcome = self.attempt(dt);
            let (error, payload) = match outcome {
                Ok((v, r, st, st_be, e)) => (e, Some((v, r, st, st_be))),
                Err(err) if err.is_recoverable() => {
                    if matches!(err, Error::PositivityLoss { .. }) {
                        positivity += 1;
                    }
                    log::debug!("t = {:.6e}, dt = {dt:.3e}: {err}", self.t);
                    if matches!(err, Error::LinearSolver(_)) {
                        self.solver.invalidate();
                        self.estimator.invalidate();
                    }
                    (f64::INFINITY, None)
                }
                Err(err) => return Err(err),
            };
            let d = decide(error, dt, &c);
            if d.accept {
                let (v, r, st, st_be) = payload.expect("accepted step has a solution");
                self.values = v;
                self.rates = r;
                self.t = if clamped { t_stop } else { self.t + dt };
                self.accepted += 1;
                // a step shortened to hit t_stop does not shrink the running step size
                let mut next = if clamped && d.factor >= 1.0 { d.dt_next.max(proposed) } else { d.dt_next };
                // no growth right after a rejection
                if rejections > 0 {
                    next = next.min(dt);
                }
                self.dt = next.min(c.dt_max);
                return Ok(StepReport {
                    accepted: true,
                    t: self.t,
                    dt,
                    dt_next: self.dt,
                    error,
                    newton_iterations: st.iterations,
                    estimator_iterations: st_be.iterations,
                    rejections,
                    positivity_rejections: positivity,
                });
            }
            rejections += 1;
            self.rejected += 1;
            self.dt = d.dt_next;
            log::debug!(
                "rejected step at t = {:.6e}: dt = {dt:.3e}, e = {error:.3e}, next dt = {:.3e}",
                self.t,
                self.dt
            );
            if rejections >= c.max_retries || self.dt < c.dt_min {
                return Err(Error::StepControl { retries: rejections, time: self.t, dt: self.dt });
            }
        }
    }
}

/// Linear test system `M dy/dt + A y = 0` sharing one sparsity pattern.
#[derive(Clone, Debug)]
pub struct LinearOde {
    pub mass: SparseMatrix,
    pub stiffness: SparseMatrix,
}

impl LinearOde {
    /// Builds `M` and `A` from triplets; the union of both patterns is kept.
    pub fn new(n: usize, mass: &[(usize, usize, f64)], stiffness: &[(usize, usize, f64)]) -> Self {
        let zeros = |t: &[(usize, usize, f64)]| t.iter().map(|&(i, j, _)| (i, j, 0.0)).collect::<Vec<_>>();
        let mut m = mass.to_vec();
        m.extend(zeros(stiffness));
        let mut a = stiffness.to_vec();
        a.extend(zeros(mass));
        LinearOde { mass: SparseMatrix::from_triplets(n, &m), stiffness: SparseMatrix::from_triplets(n, &a) }
    }

    /// `dy/dt = -A y` with identity mass.
    pub fn explicit(n: usize, stiffness: &[(usize, usize, f64)]) -> Self {
        let id: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::new(n, &id, stiffness)
    }
}

impl Semidiscrete for LinearOde {
    fn n_dofs(&self) -> usize {
        self.mass.n
    }

    fn new_matrix(&self) -> SparseMatrix {
        let mut m = self.mass.clone();
        m.clear();
        m
    }

    fn residual(&self, rates: &[f64], values: &[f64], r: &mut [f64]) -> Result<()> {
        let mut t = vec![0.0; r.len()];
        self.mass.mul_vec(rates, r);
        self.stiffness.mul_vec(values, &mut t);
        r.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
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
        self.residual(rates, values, r)?;
        for (i, v) in k.values.iter_mut().enumerate() {
            *v = coeffs.mass * self.mass.values[i] + coeffs.stiffness * self.stiffness.values[i];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::SolverConfig;
    use approx::assert_abs_diff_eq;

    fn solver() -> LinearSolver {
        LinearSolver::new(SolverConfig::default())
    }

    #[test]
    fn alpha_parameter_values() {
        let a = alpha_parameters(0.5).unwrap();
        assert_abs_diff_eq!(a.alpha_m, 5.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.alpha_f, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.gamma, 2.0 / 3.0, epsilon = 1e-15);
        let a = alpha_parameters(1.0).unwrap();
        assert_eq!((a.alpha_m, a.alpha_f, a.gamma), (0.5, 0.5, 0.5));
        let a = alpha_parameters(0.0).unwrap();
        assert_eq!((a.alpha_m, a.alpha_f, a.gamma), (1.5, 1.0, 1.0));
        assert!(alpha_parameters(1.5).is_err());
        assert!(alpha_parameters(-0.1).is_err());
    }

    #[test]
    fn backward_euler_decay() {
        let ode = LinearOde::explicit(1, &[(0, 0, 1.0)]);
        let nc = NewtonControls::default();
        let (y, _) = step_backward_euler(&ode, &mut solver(), &nc, &[1.0], &[-1.0], 0.1, None, None).unwrap();
        assert_abs_diff_eq!(y[0], 1.0 / 1.1, epsilon = 1e-14);
    }

    #[test]
    fn backward_euler_matches_dense_oracle() {
        // [2 1; 0 3] with the closed-form solve of (I + dt A) y = y0
        let ode = LinearOde::explicit(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)]);
        let dt = 0.2;
        let y0 = [1.0, -2.0];
        let (a, b, d) = (1.0 + 2.0 * dt, dt, 1.0 + 3.0 * dt);
        let y1 = y0[1] / d;
        let x1 = (y0[0] - b * y1) / a;
        let nc = NewtonControls::default();
        let (y, _) = step_backward_euler(&ode, &mut solver(), &nc, &y0, &[0.0, 0.0], dt, None, None).unwrap();
        assert_abs_diff_eq!(y[0], x1, epsilon = 1e-12);
        assert_abs_diff_eq!(y[1], y1, epsilon = 1e-12);
    }

    #[test]
    fn alpha_with_euler_limit_is_backward_euler() {
        let ode = LinearOde::explicit(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)]);
        let nc = NewtonControls::default();
        let y0 = [0.3, 0.9];
        let (ga, _, _) =
            step_generalized_alpha(&ode, &mut solver(), &AlphaParams::backward_euler(), &nc, &y0, &[0.5, 0.5], 0.3)
                .unwrap();
        let (be, _) = step_backward_euler(&ode, &mut solver(), &nc, &y0, &[0.5, 0.5], 0.3, None, None).unwrap();
        assert_abs_diff_eq!(ga[0], be[0], epsilon = 1e-14);
        assert_abs_diff_eq!(ga[1], be[1], epsilon = 1e-14);
    }

    #[test]
    fn zero_physics_keeps_state() {
        let ode = LinearOde::explicit(3, &[(0, 0, 0.0), (1, 1, 0.0), (2, 2, 0.0)]);
        let a = alpha_parameters(0.5).unwrap();
        let y0 = [1.0, 2.0, 3.0];
        let (y, r, _) =
            step_generalized_alpha(&ode, &mut solver(), &a, &NewtonControls::default(), &y0, &[0.0; 3], 0.1).unwrap();
        assert_eq!(y, y0);
        assert_eq!(r, vec![0.0; 3]);
    }

    #[test]
    fn newmark_relation_holds_after_step() {
        let ode = LinearOde::explicit(2, &[(0, 0, 1.0), (1, 0, -0.5), (1, 1, 4.0)]);
        let a = alpha_parameters(0.5).unwrap();
        let (y0, r0, dt) = ([1.0, 0.5], [0.2, -0.3], 0.05);
        let (y, r, _) =
            step_generalized_alpha(&ode, &mut solver(), &a, &NewtonControls::default(), &y0, &r0, dt).unwrap();
        for i in 0..2 {
            let expect = y0[i] + dt * ((1.0 - a.gamma) * r0[i] + a.gamma * r[i]);
            assert_abs_diff_eq!(y[i], expect, epsilon = 1e-15);
        }
    }

    fn global_error(n_steps: usize) -> f64 {
        let lambda = -2.0;
        let ode = LinearOde::explicit(1, &[(0, 0, -lambda)]);
        let a = alpha_parameters(0.5).unwrap();
        let dt = 1.0 / n_steps as f64;
        let (mut y, mut r) = (vec![1.0], vec![lambda]);
        let mut s = solver();
        for _ in 0..n_steps {
            let (y1, r1, _) = step_generalized_alpha(&ode, &mut s, &a, &NewtonControls::default(), &y, &r, dt).unwrap();
            y = y1;
            r = r1;
        }
        (y[0] - lambda.exp()).abs()
    }

    #[test]
    fn global_error_is_second_order() {
        let ratio = global_error(40) / global_error(80);
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn stiff_system_stays_bounded() {
        let eig = [1e-2, 1.0, 1e3, 1e6];
        let t: Vec<_> = eig.iter().enumerate().map(|(i, &l)| (i, i, l)).collect();
        let ode = LinearOde::explicit(4, &t);
        let a = alpha_parameters(0.5).unwrap();
        for k in -4..=2 {
            let dt = 10f64.powi(k);
            let (mut y, mut r) = (vec![1.0; 4], eig.iter().map(|l| -l).collect::<Vec<_>>());
            let mut s = solver();
            for _ in 0..50 {
                let (y1, r1, _) =
                    step_generalized_alpha(&ode, &mut s, &a, &NewtonControls::default(), &y, &r, dt).unwrap();
                y = y1;
                r = r1;
            }
            assert!(y.iter().all(|v| v.abs() <= 1.0 + 1e-12), "dt = {dt}: {y:?}");
        }
    }

    #[test]
    fn controller_arithmetic() {
        let c = StepControls::default();
        let d = decide(0.81, 1.0, &c);
        assert!(d.accept);
        assert_abs_diff_eq!(d.factor, 1.0, epsilon = 1e-12);
        let d = decide(4.0, 1.0, &c);
        assert!(!d.accept);
        assert_abs_diff_eq!(d.factor, 0.45, epsilon = 1e-12);
        let d = decide(0.0, 2.0, &c);
        assert!(d.accept);
        assert_eq!(d.factor, 10.0);
        assert_eq!(d.dt_next, 20.0);
        let d = decide(1e-6, 1.0, &c);
        assert_eq!(d.factor, 10.0);
        let d = decide(f64::INFINITY, 1.0, &c);
        assert!(!d.accept);
        assert_eq!(d.factor, 0.1);
        let d = decide(1.0, 1.0, &c);
        assert!(d.accept);
    }

    #[test]
    fn error_norm_scaling() {
        let e = error_norm(&[1.0, 0.0], &[1.0 + 2e-4, 0.0], 1e-4, 1e-4);
        // tol = 1e-4 + (1 + 2e-4) * 1e-4 on the first entry, zero on the second
        let q: f64 = 2e-4 / (1e-4 + (1.0 + 2e-4) * 1e-4);
        assert_abs_diff_eq!(e, (q * q / 2.0).sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn adaptive_integration_tracks_exponential() {
        let ode = LinearOde::explicit(1, &[(0, 0, 1.0)]);
        let a = alpha_parameters(0.5).unwrap();
        let mut it = Integrator::new(
            &ode,
            solver(),
            a,
            StepControls::default(),
            StepMode::Adaptive,
            vec![1.0],
            vec![-1.0],
            1e-3,
        )
        .unwrap();
        let mut n = 0;
        while it.t < 2.0 {
            let rep = it.advance(2.0).unwrap();
            assert!(rep.error <= 1.0);
            assert!(rep.dt_next / rep.dt <= 10.0 + 1e-12);
            n += 1;
        }
        assert_eq!(it.t, 2.0);
        assert!(n > 5);
        assert!((it.values[0] - (-2.0f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn suspend_resume_matches_uninterrupted() {
        let ode = LinearOde::explicit(2, &[(0, 0, 1.0), (1, 1, 5.0)]);
        let a = alpha_parameters(0.5).unwrap();
        let make = || {
            Integrator::new(
                &ode,
                solver(),
                a,
                StepControls::default(),
                StepMode::Adaptive,
                vec![1.0, 1.0],
                vec![-1.0, -5.0],
                1e-3,
            )
            .unwrap()
        };
        let mut whole = make();
        while whole.t < 1.0 {
            whole.advance(1.0).unwrap();
        }
        let mut state = make().suspend();
        while state.t < 1.0 {
            let mut it = Integrator::resume(&ode, state);
            it.advance(1.0).unwrap();
            state = it.suspend();
        }
        assert_eq!(state.values, whole.values);
        assert_eq!(state.accepted, whole.accepted);
    }
}
