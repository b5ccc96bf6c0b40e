//! Nonlinear least squares for transmission spectra and for the long-time
//! tail of the two-photon correlation.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::correlations::CorrelationSeries;
use crate::error::{Error, Result};
use crate::jcmodel::DriveKind;
use crate::semiclassical::{SpectrumModel, SpectrumSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative step size below which iteration stops.
    pub step_tolerance: f64,
    /// Largest cosine between the residual and any Jacobian column at a
    /// converged point.
    pub gradient_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 500, step_tolerance: 1e-10, gradient_tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub parameters: Vec<f64>,
    /// Zero for parameters held fixed.
    pub standard_errors: Vec<f64>,
    /// ‖r‖₂ at the returned parameters.
    pub residual_norm: f64,
    /// Largest |cos| between the residual vector and a free Jacobian column.
    pub gradient_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// ‖r‖₂ after each accepted step, starting with the initial point.
    pub history: Vec<f64>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.parameters[i])
    }

    pub fn error(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.standard_errors[i])
    }
}

/// Residual ratio below which a fit counts as exact.
const EXACT_FIT: f64 = 1e-12;

/// Levenberg–Marquardt with a central-difference Jacobian and Marquardt
/// diagonal scaling. `free[j] == false` holds parameter j at its start value.
/// `typical[j]` sets the differencing scale for parameters that start near zero.
pub fn levenberg_marquardt<F>(
    residuals: F,
    names: &[&str],
    x0: &[f64],
    free: &[bool],
    typical: &[f64],
    options: LmOptions,
) -> Result<FitResult>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let p = x0.len();
    if names.len() != p || free.len() != p || typical.len() != p {
        return Err(Error::DimensionMismatch { expected: p, found: names.len().min(free.len()).min(typical.len()) });
    }
    let active: Vec<usize> = (0..p).filter(|&j| free[j]).collect();
    let mut x = x0.to_vec();
    let mut r = residuals(&x);
    let m = r.len();
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("residuals are not finite at the starting point".into()));
    }
    let mut cost = sum_sq(&r);
    let initial_norm = cost.sqrt();
    let mut history = vec![initial_norm];
    let mut lambda = 1e-3;
    let mut iterations = 0;

    let jacobian = |x: &[f64]| -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(m, active.len());
        for (col, &j) in active.iter().enumerate() {
            let h = 1e-6 * x[j].abs().max(typical[j].abs()).max(1e-300);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let (rp, rm) = (residuals(&xp), residuals(&xm));
            for i in 0..m {
                jac[(i, col)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        jac
    };

    let mut jac = jacobian(&x);
    while iterations < options.max_iterations && !active.is_empty() {
        if cost.sqrt() <= EXACT_FIT * initial_norm || gradient_cosine(&jac, &r) <= options.gradient_tolerance {
            break;
        }
        iterations += 1;
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * rv;
        let diag_floor = jtj.diagonal().max() * 1e-15;

        let mut accepted = false;
        let mut small_step = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..a.nrows() {
                a[(k, k)] += lambda * jtj[(k, k)].max(diag_floor);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = x.clone();
            for (col, &j) in active.iter().enumerate() {
                trial[j] += step[col];
            }
            let r_trial = residuals(&trial);
            let trial_cost = sum_sq(&r_trial);
            let x_norm: f64 = active.iter().map(|&j| x[j] * x[j]).sum::<f64>().sqrt();
            small_step = step.norm() <= options.step_tolerance * (x_norm + options.step_tolerance);
            if trial_cost.is_finite() && trial_cost < cost {
                x = trial;
                r = r_trial;
                cost = trial_cost;
                history.push(cost.sqrt());
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                break;
            }
            if small_step {
                break;
            }
            lambda *= 10.0;
        }
        if accepted {
            jac = jacobian(&x);
        }
        if !accepted || small_step {
            break;
        }
    }

    let gradient_norm = gradient_cosine(&jac, &r);
    let converged = active.is_empty()
        || cost.sqrt() <= EXACT_FIT * initial_norm
        || gradient_norm <= options.gradient_tolerance * 100.0;
    let errors = standard_errors(&jac, cost, m, &active, p)?;
    Ok(FitResult {
        names: names.iter().map(|s| s.to_string()).collect(),
        parameters: x,
        standard_errors: errors,
        residual_norm: cost.sqrt(),
        gradient_norm,
        converged,
        iterations,
        history,
    })
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn gradient_cosine(jac: &DMatrix<f64>, r: &[f64]) -> f64 {
    let rn = sum_sq(r).sqrt();
    if rn == 0.0 {
        return 0.0;
    }
    jac.column_iter()
        .map(|col| {
            let cn = col.norm();
            if cn == 0.0 {
                0.0
            } else {
                col.iter().zip(r).map(|(a, b)| a * b).sum::<f64>().abs() / (cn * rn)
            }
        })
        .fold(0.0, f64::max)
}

/// Gauss–Newton covariance `s² (JᵀJ)⁻¹` with `s² = ‖r‖² / (m − p)`.
fn standard_errors(jac: &DMatrix<f64>, cost: f64, m: usize, active: &[usize], p: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; p];
    if active.is_empty() {
        return Ok(out);
    }
    let jtj = jac.transpose() * jac;
    // column scaling keeps the inverse well defined across parameter units
    let d: Vec<f64> = (0..jtj.nrows()).map(|k| jtj[(k, k)].sqrt()).collect();
    if d.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::DegenerateFit);
    }
    let scaled = DMatrix::from_fn(jtj.nrows(), jtj.ncols(), |i, j| jtj[(i, j)] / (d[i] * d[j]));
    let inv = scaled.try_inverse().ok_or(Error::DegenerateFit)?;
    let dof = m.saturating_sub(active.len());
    let s2 = if dof > 0 { cost / dof as f64 } else { 0.0 };
    for (k, &j) in active.iter().enumerate() {
        let var = s2 * inv[(k, k)] / (d[k] * d[k]);
        if !var.is_finite() {
            return Err(Error::DegenerateFit);
        }
        out[j] = var.max(0.0).sqrt();
    }
    Ok(out)
}

/// Parameter names of a spectrum fit, in vector order.
pub const SPECTRUM_PARAMETERS: [&str; 5] = ["g", "delta_ac", "eta", "temperature_scale", "a_ec"];

/// Which spectrum parameters are varied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumFitMask {
    pub g: bool,
    pub delta_ac: bool,
    pub eta: bool,
    pub temperature_scale: bool,
    pub a_ec: bool,
}

impl SpectrumFitMask {
    pub fn all() -> Self {
        Self { g: true, delta_ac: true, eta: true, temperature_scale: true, a_ec: true }
    }

    fn as_array(&self) -> [bool; 5] {
        [self.g, self.delta_ac, self.eta, self.temperature_scale, self.a_ec]
    }
}

impl Default for SpectrumFitMask {
    fn default() -> Self {
        Self::all()
    }
}

fn spectrum_vector(m: &SpectrumModel) -> [f64; 5] {
    [m.g, m.delta_ac, m.eta, m.temperature_scale, m.a_ec]
}

/// Non-negative parameters enter through their magnitude.
fn spectrum_model(base: &SpectrumModel, x: &[f64]) -> SpectrumModel {
    SpectrumModel {
        g: x[0].abs(),
        delta_ac: x[1],
        eta: x[2].abs(),
        temperature_scale: x[3].abs(),
        a_ec: x[4].abs(),
        ..*base
    }
}

/// Fits `scale · composite(Δᵢ)` to the data with κ, γ and `scale` held at
/// their given values. The remnant amplitude is held at zero for atom drive.
pub fn fit_spectrum(
    data: &SpectrumSeries,
    drive: DriveKind,
    initial: &SpectrumModel,
    scale: f64,
    mask: SpectrumFitMask,
) -> Result<FitResult> {
    if data.detunings.len() != data.values.len() {
        return Err(Error::DimensionMismatch { expected: data.detunings.len(), found: data.values.len() });
    }
    if data.detunings.len() < 6 {
        return Err(Error::FitPrecondition(format!("need at least 6 data points, got {}", data.detunings.len())));
    }
    if !(scale > 0.0) || !(initial.g > 0.0) || !(initial.eta > 0.0) || !(initial.kappa > 0.0) || !(initial.gamma > 0.0)
    {
        return Err(Error::FitPrecondition("initial rates and scale must be positive".into()));
    }
    initial.validate()?;
    let mut base = SpectrumModel { drive, ..*initial };
    let mut free = mask.as_array();
    if drive == DriveKind::Atom {
        base.a_ec = 0.0;
        free[4] = false;
    }
    let typical =
        [base.g, base.g, base.eta, base.kappa, data.values.iter().fold(0.0, |a: f64, b| a.max(b.abs())) / scale];
    let run = |start: &SpectrumModel| {
        let residuals = |x: &[f64]| {
            let model = spectrum_model(start, x);
            data.detunings.iter().zip(&data.values).map(|(d, y)| scale * model.composite(*d) - y).collect()
        };
        levenberg_marquardt(
            residuals,
            &SPECTRUM_PARAMETERS,
            &spectrum_vector(start),
            &free,
            &typical,
            LmOptions::default(),
        )
    };
    let mut result = run(&base)?;
    if result.parameters[0].abs() < base.kappa {
        result = run(&SpectrumModel { g: 2.0 * base.g, ..base })?;
    }
    for j in [0, 2, 3, 4] {
        result.parameters[j] = result.parameters[j].abs();
    }
    Ok(result)
}

/// Parameters of `f(τ) = A_c e^{−τ/τ_c} sin(2π f_c τ) + A_i e^{−τ/τ_i} + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongTimeFit {
    pub a_c: f64,
    /// Seconds.
    pub tau_c: f64,
    /// Hz.
    pub f_c: f64,
    pub a_i: f64,
    /// Seconds.
    pub tau_i: f64,
    pub c: f64,
}

pub const LONGTIME_PARAMETERS: [&str; 6] = ["a_c", "tau_c", "f_c", "a_i", "tau_i", "c"];

impl LongTimeFit {
    fn to_vec(self) -> Vec<f64> {
        vec![self.a_c, self.tau_c, self.f_c, self.a_i, self.tau_i, self.c]
    }

    fn from_slice(x: &[f64]) -> Self {
        Self { a_c: x[0], tau_c: x[1].abs(), f_c: x[2].abs(), a_i: x[3], tau_i: x[4].abs(), c: x[5] }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_c > 0.0) || !(self.tau_i > 0.0) || !(self.f_c >= 0.0) {
            return Err(Error::InvalidParameter("need τ_c, τ_i > 0 and f_c ≥ 0".into()));
        }
        Ok(())
    }
}

pub fn eval_longtime_model(p: &LongTimeFit, tau: f64) -> f64 {
    p.a_c * (-tau / p.tau_c).exp() * (TAU * p.f_c * tau).sin() + p.a_i * (-tau / p.tau_i).exp() + p.c
}

/// Fits all six parameters of the long-time model. The oscillation frequency
/// is first located on a grid over ±30% of the initial guess, solving for the
/// linear amplitudes at each node.
pub fn fit_longtime(data: &CorrelationSeries, initial: &LongTimeFit) -> Result<(LongTimeFit, FitResult)> {
    initial.validate()?;
    let n = data.taus.len();
    if n != data.values.len() {
        return Err(Error::DimensionMismatch { expected: n, found: data.values.len() });
    }
    if n < 7 {
        return Err(Error::FitPrecondition(format!("need at least 7 samples, got {n}")));
    }
    if data.taus.iter().any(|t| *t < 0.0) {
        return Err(Error::FitPrecondition("delays must be non-negative".into()));
    }
    let span = data.taus.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b))
        - data.taus.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    if initial.f_c <= 0.0 || span * initial.f_c < 2.0 {
        return Err(Error::FitPrecondition(format!(
            "data span {span:.3e} s covers fewer than two periods of f_c = {:.3e} Hz",
            initial.f_c
        )));
    }

    let mut start = *initial;
    let mut best = f64::INFINITY;
    for k in 0..=120 {
        let f = initial.f_c * (0.7 + 0.6 * k as f64 / 120.0);
        if let Some((amps, cost)) = linear_amplitudes(data, initial.tau_c, f, initial.tau_i) {
            if cost < best {
                best = cost;
                start = LongTimeFit { a_c: amps[0], f_c: f, a_i: amps[1], c: amps[2], ..*initial };
            }
        }
    }

    let residuals = |x: &[f64]| {
        let p = LongTimeFit::from_slice(x);
        data.taus.iter().zip(&data.values).map(|(t, y)| eval_longtime_model(&p, *t) - y).collect()
    };
    let x0 = start.to_vec();
    let typical = [1.0, initial.tau_c, initial.f_c, 1.0, initial.tau_i, 1.0];
    let mut result =
        levenberg_marquardt(residuals, &LONGTIME_PARAMETERS, &x0, &[true; 6], &typical, LmOptions::default())?;
    let fit = LongTimeFit::from_slice(&result.parameters);
    result.parameters = fit.to_vec();
    Ok((fit, result))
}

/// Least-squares `(A_c, A_i, c)` with the nonlinear parameters fixed.
fn linear_amplitudes(data: &CorrelationSeries, tau_c: f64, f_c: f64, tau_i: f64) -> Option<([f64; 3], f64)> {
    let n = data.taus.len();
    let basis = DMatrix::from_fn(n, 3, |i, j| {
        let t = data.taus[i];
        match j {
            0 => (-t / tau_c).exp() * (TAU * f_c * t).sin(),
            1 => (-t / tau_i).exp(),
            _ => 1.0,
        }
    });
    let y = DVector::from_column_slice(&data.values);
    let coeffs = basis.clone().svd(true, true).solve(&y, 1e-12).ok()?;
    let cost = (basis * &coeffs - y).norm_squared();
    Some(([coeffs[0], coeffs[1], coeffs[2]], cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    #[test]
    fn linear_problem_is_exact() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let res = |p: &[f64]| xs.iter().zip(&ys).map(|(x, y)| p[0] * x + p[1] - y).collect();
        let fit = levenberg_marquardt(res, &["a", "b"], &[1.0, 1.0], &[true, true], &[1.0, 1.0], LmOptions::default())
            .unwrap();
        assert!(fit.converged);
        assert!((fit.parameters[0] - 3.0).abs() < 1e-9);
        assert!((fit.parameters[1] + 1.0).abs() < 1e-9);
        assert!(fit.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fixed_parameters_stay_put() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let res = |p: &[f64]| xs.iter().map(|x| p[0] * x + p[1] - (2.0 * x + 5.0)).collect();
        let fit = levenberg_marquardt(res, &["a", "b"], &[1.0, 4.0], &[true, false], &[1.0, 1.0], LmOptions::default())
            .unwrap();
        assert_eq!(fit.parameters[1], 4.0);
        assert_eq!(fit.standard_errors[1], 0.0);
        assert!(fit.standard_errors[0] > 0.0);
    }

    #[test]
    fn insensitive_parameter_is_degenerate() {
        let res = |p: &[f64]| vec![p[0] - 1.0, p[0] + 1.0, 2.0 * p[0]];
        let err = levenberg_marquardt(res, &["a", "b"], &[0.5, 0.5], &[true, true], &[1.0, 1.0], LmOptions::default());
        assert_eq!(err.unwrap_err(), Error::DegenerateFit);
    }

    #[test]
    fn longtime_model_limits() {
        let p = LongTimeFit { a_c: 0.1, tau_c: 2e-6, f_c: 395e3, a_i: 0.3, tau_i: 5e-7, c: 1.25 };
        assert!((eval_longtime_model(&p, 0.0) - 1.55).abs() < 1e-15);
        assert!((eval_longtime_model(&p, 1.0) - 1.25).abs() < 1e-15);
        let flat = LongTimeFit { a_c: 0.0, a_i: 0.0, ..p };
        assert_eq!(eval_longtime_model(&flat, 3.3e-7), 1.25);
    }

    #[test]
    fn short_record_is_rejected() {
        let p = LongTimeFit { a_c: 0.1, tau_c: 2e-6, f_c: 395e3, a_i: 0.3, tau_i: 5e-7, c: 1.25 };
        let taus: Vec<f64> = (0..100).map(|i| i as f64 * 2e-8).collect();
        let values = taus.iter().map(|t| eval_longtime_model(&p, *t)).collect();
        let data = CorrelationSeries { taus, values, order: 2 };
        assert!(matches!(fit_longtime(&data, &p), Err(Error::FitPrecondition(_))));
    }

    #[test]
    fn spectrum_preconditions() {
        let model = SpectrumModel {
            g: mhz(16.0),
            kappa: mhz(2.0),
            gamma: mhz(3.0),
            delta_ac: 0.0,
            eta: mhz(0.05),
            temperature_scale: 0.0,
            a_ec: 0.0,
            drive: DriveKind::Atom,
        };
        let data = SpectrumSeries { detunings: vec![0.0; 5], values: vec![0.0; 5] };
        assert!(matches!(
            fit_spectrum(&data, DriveKind::Atom, &model, 1.0, SpectrumFitMask::all()),
            Err(Error::FitPrecondition(_))
        ));
        let data = SpectrumSeries { detunings: vec![0.0; 8], values: vec![0.0; 8] };
        assert!(fit_spectrum(&data, DriveKind::Atom, &model, 0.0, SpectrumFitMask::all()).is_err());
    }
}
