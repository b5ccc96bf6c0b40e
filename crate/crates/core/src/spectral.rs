//! Modal decomposition of uniformly sampled signals.
//!
//! A signal `y[k] = Σ c_j z_jᵏ` is recovered with the rotational-invariance
//! (ESPRIT) method: the signal subspace of a Hankel matrix of the samples
//! is shift invariant, and the poles `z_j` are the eigenvalues of the shift.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are noise.
const RANK_TOLERANCE: f64 = 1e-10;
const MAX_MODES: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// Oscillation frequency ν in Hz (non-negative for conjugate pairs).
    pub frequency: f64,
    /// Decay rate in 1/s; negative for growth.
    pub decay_rate: f64,
    pub amplitude: f64,
    /// ℓ² norm of the mode over the sampled window.
    pub weight: f64,
}

/// Decomposes samples taken at spacing `dt` into damped complex exponentials.
pub fn decompose(values: &[f64], dt: f64) -> Result<Vec<Mode>> {
    let n = values.len();
    if n < 8 {
        return Err(Error::InvalidParameter("need at least 8 samples for a modal decomposition".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("sample spacing must be positive".into()));
    }
    let cols = n / 2;
    let rows = n - cols + 1;
    let hankel = DMatrix::from_fn(rows, cols, |i, j| values[i + j]);
    let svd = hankel.svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let s0 = svd.singular_values.max();
    if s0 == 0.0 {
        return Ok(Vec::new());
    }
    let rank =
        svd.singular_values.iter().filter(|s| **s > RANK_TOLERANCE * s0).count().clamp(1, MAX_MODES.min(cols - 1));
    let signal = u.columns(0, rank);
    let upper = signal.rows(0, rows - 1).into_owned();
    let lower = signal.rows(1, rows - 1).into_owned();
    let shift = upper.svd(true, true).solve(&lower, 1e-14).map_err(|e| Error::Numerical(e.to_string()))?;
    let poles: Vec<Complex64> = shift.complex_eigenvalues().iter().copied().collect();

    let vandermonde = DMatrix::from_fn(n, poles.len(), |k, j| poles[j].powu(k as u32));
    let y = DVector::from_iterator(n, values.iter().map(|v| Complex64::new(*v, 0.0)));
    let coeffs = vandermonde.svd(true, true).solve(&y, 1e-14).map_err(|e| Error::Numerical(e.to_string()))?;

    Ok(poles
        .iter()
        .zip(coeffs.iter())
        .map(|(z, c)| {
            let lambda = z.ln() / dt;
            let weight = c.norm() * (0..n).map(|k| z.norm().powi(2 * k as i32)).sum::<f64>().sqrt();
            Mode { frequency: lambda.im.abs() / TAU, decay_rate: -lambda.re, amplitude: c.norm(), weight }
        })
        .collect())
}

/// Frequency of the oscillatory mode with `ν ≥ min_frequency` carrying the
/// largest norm over the sampled window.
pub fn dominant_frequency(values: &[f64], dt: f64, min_frequency: f64) -> Result<f64> {
    decompose(values, dt)?
        .into_iter()
        .filter(|m| m.frequency >= min_frequency)
        .max_by(|a, b| a.weight.total_cmp(&b.weight))
        .map(|m| m.frequency)
        .ok_or_else(|| Error::Numerical("no oscillatory component found".into()))
}
