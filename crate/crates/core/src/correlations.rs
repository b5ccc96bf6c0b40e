//! Photon correlation functions of the cavity output from the quantum
//! regression theorem, and photon-number statistics of the steady state.
//!
//! All correlations are normal and time ordered and normalized by powers of
//! the steady-state mean photon number of the same simulation:
//!
//! ```text
//! g²(τ)      = tr(a†a e^{𝓛τ}(a ρ a†)) / ⟨n⟩²
//! g³(τ₁, τ₂) = tr(a†a e^{𝓛τ₂}[a e^{𝓛τ₁}(a ρ a†) a†]) / ⟨n⟩³
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, OperatorMatrix, Operators};
use crate::jcmodel::SystemParams;
use crate::lindblad::{liouvillian, steady_state, trace_product, DensityMatrix, Superoperator};

/// Below this the steady state is treated as the vacuum.
const MIN_MEAN_PHOTONS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    /// Delays in seconds.
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    pub order: u8,
}

impl CorrelationSeries {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// Samples with `start ≤ τ ≤ end`.
    pub fn window(&self, start: f64, end: f64) -> (Vec<f64>, Vec<f64>) {
        self.taus.iter().zip(&self.values).filter(|(t, _)| **t >= start && **t <= end).map(|(t, v)| (*t, *v)).unzip()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistribution {
    /// P(n) for n = 0..=N_max.
    pub probs: Vec<f64>,
    pub mean: f64,
}

impl PhotonDistribution {
    /// Builds a distribution from raw probabilities; the mean is Σ n P(n).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter("probabilities must be finite and non-negative".into()));
        }
        let mean = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        Ok(Self { probs, mean })
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }
}

/// A solved steady state together with the pieces every correlation needs.
#[derive(Debug, Clone)]
pub struct SteadyStateModel {
    params: SystemParams,
    ops: Operators,
    liouvillian: Superoperator,
    rho: DensityMatrix,
    mean: f64,
}

impl SteadyStateModel {
    pub fn solve(params: &SystemParams) -> Result<Self> {
        let liouvillian = liouvillian(params)?;
        let rho = steady_state(&liouvillian)?;
        let ops = Operators::new(params.dims)?;
        let mean = trace_product(ops.n.matrix(), rho.matrix()).re;
        Ok(Self { params: *params, ops, liouvillian, rho, mean })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn liouvillian(&self) -> &Superoperator {
        &self.liouvillian
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn operators(&self) -> &Operators {
        &self.ops
    }

    /// ⟨a†a⟩ in the steady state.
    pub fn mean_photons(&self) -> f64 {
        self.mean
    }

    pub fn photon_distribution(&self) -> PhotonDistribution {
        photon_distribution(&self.rho)
    }

    fn normalization(&self, order: i32) -> Result<f64> {
        if self.mean < MIN_MEAN_PHOTONS {
            return Err(Error::ZeroMeanPhotonNumber);
        }
        Ok(self.mean.powi(order))
    }

    /// `a X a†`.
    fn annihilate(&self, x: &CMatrix) -> CMatrix {
        self.ops.a.matrix() * x * self.ops.a_dag.matrix()
    }

    /// Row vector `vec(Oᵀ)` so that `tr(O X) = obs · vec(X)`.
    fn observable_row(op: &OperatorMatrix) -> Vec<Complex64> {
        op.matrix().transpose().as_slice().to_vec()
    }

    fn dot(row: &[Complex64], v: &[Complex64]) -> f64 {
        row.iter().zip(v).map(|(a, b)| a * b).sum::<Complex64>().re
    }

    /// Evaluates `tr(O e^{𝓛τ} X₀)` on a grid of delays (any sign; |τ| is
    /// used) and returns values in input order.
    fn conditional_expectation(&self, observable: &OperatorMatrix, x0: &CMatrix, taus: &[f64]) -> Result<Vec<f64>> {
        let (order, sorted) = sorted_magnitudes(taus)?;
        let row = Self::observable_row(observable);
        let mut sorted_values = vec![0.0; sorted.len()];
        self.liouvillian.evolve_on_grid(x0.as_slice().to_vec(), &sorted, |i, v| {
            sorted_values[i] = Self::dot(&row, v);
        })?;
        Ok(order.into_iter().map(|k| sorted_values[k]).collect())
    }

    /// g²(τ); negative delays use g²(−τ) = g²(τ).
    pub fn g2(&self, taus: &[f64]) -> Result<CorrelationSeries> {
        let norm = self.normalization(2)?;
        let x0 = self.annihilate(self.rho.matrix());
        let values = self.conditional_expectation(&self.ops.n, &x0, taus)?;
        Ok(CorrelationSeries { taus: taus.to_vec(), values: values.into_iter().map(|v| v / norm).collect(), order: 2 })
    }

    /// g³(τ₁, τ₂) for τ₁, τ₂ ≥ 0.
    pub fn g3(&self, tau1: f64, tau2: f64) -> Result<f64> {
        Ok(self.g3_map(&[tau1], &[tau2])?[0][0])
    }

    /// g³ on the Cartesian grid `tau1s × tau2s`, indexed `[i][j]`.
    ///
    /// The first leg is evolved forward in the Schrödinger picture and the
    /// photon-number observable is evolved with 𝓛ᵀ over the second leg, so
    /// the cost is one pass over each axis.
    pub fn g3_map(&self, tau1s: &[f64], tau2s: &[f64]) -> Result<Vec<Vec<f64>>> {
        let norm = self.normalization(3)?;
        check_non_negative(tau1s)?;
        check_non_negative(tau2s)?;
        let (order2, sorted2) = sorted_magnitudes(tau2s)?;
        let mut observables: Vec<Vec<Complex64>> = Vec::with_capacity(sorted2.len());
        self.liouvillian.evolve_observable_on_grid(&self.ops.n, &sorted2, |_, w| observables.push(w.to_vec()))?;

        let (order1, sorted1) = sorted_magnitudes(tau1s)?;
        let d = self.params.dims.total();
        let mut rows = vec![Vec::new(); sorted1.len()];
        let x0 = self.annihilate(self.rho.matrix());
        self.liouvillian.evolve_on_grid(x0.as_slice().to_vec(), &sorted1, |i, v| {
            let x = CMatrix::from_column_slice(d, d, v);
            let y = self.annihilate(&x);
            rows[i] = order2.iter().map(|&k| Self::dot(&observables[k], y.as_slice()) / norm).collect();
        })?;
        Ok(order1.into_iter().map(|k| rows[k].clone()).collect())
    }

    /// g³(0, τ). For τ ≥ 0 the photon pair is detected first; for τ < 0 the
    /// single photon comes first and the pair last, evaluated by stationarity
    /// as `tr(a†²a² e^{𝓛|τ|}(a ρ a†)) / ⟨n⟩³`.
    pub fn g3_zero_tau(&self, taus: &[f64]) -> Result<CorrelationSeries> {
        let norm = self.normalization(3)?;
        let (neg_idx, neg): (Vec<usize>, Vec<f64>) =
            taus.iter().enumerate().filter(|(_, t)| **t < 0.0).map(|(i, t)| (i, *t)).unzip();
        let (pos_idx, pos): (Vec<usize>, Vec<f64>) =
            taus.iter().enumerate().filter(|(_, t)| **t >= 0.0).map(|(i, t)| (i, *t)).unzip();

        let mut values = vec![0.0; taus.len()];
        if !pos.is_empty() {
            let pair = self.annihilate(&self.annihilate(self.rho.matrix()));
            let v = self.conditional_expectation(&self.ops.n, &pair, &pos)?;
            for (i, x) in pos_idx.into_iter().zip(v) {
                values[i] = x / norm;
            }
        }
        if !neg.is_empty() {
            let single = self.annihilate(self.rho.matrix());
            let a2 = self.ops.a.matrix() * self.ops.a.matrix();
            let pair_number = OperatorMatrix::new(self.params.dims, a2.adjoint() * &a2)?;
            let v = self.conditional_expectation(&pair_number, &single, &neg)?;
            for (i, x) in neg_idx.into_iter().zip(v) {
                values[i] = x / norm;
            }
        }
        Ok(CorrelationSeries { taus: taus.to_vec(), values, order: 3 })
    }

    /// g³(τ, τ) for τ ≥ 0.
    pub fn g3_diag(&self, taus: &[f64]) -> Result<CorrelationSeries> {
        let norm = self.normalization(3)?;
        check_non_negative(taus)?;
        let (order, sorted) = sorted_magnitudes(taus)?;
        let d = self.params.dims.total();

        let mut conditioned: Vec<Vec<Complex64>> = Vec::with_capacity(sorted.len());
        let x0 = self.annihilate(self.rho.matrix());
        self.liouvillian.evolve_on_grid(x0.as_slice().to_vec(), &sorted, |_, v| {
            let y = self.annihilate(&CMatrix::from_column_slice(d, d, v));
            conditioned.push(y.as_slice().to_vec());
        })?;
        let mut sorted_values = vec![0.0; sorted.len()];
        self.liouvillian.evolve_observable_on_grid(&self.ops.n, &sorted, |i, w| {
            sorted_values[i] = Self::dot(w, &conditioned[i]) / norm;
        })?;
        Ok(CorrelationSeries {
            taus: taus.to_vec(),
            values: order.into_iter().map(|k| sorted_values[k]).collect(),
            order: 3,
        })
    }

    /// Equal-time `⟨a†ᵏ aᵏ⟩ / ⟨n⟩ᵏ` evaluated directly on ρ.
    pub fn gk_zero(&self, k: u32) -> Result<f64> {
        let norm = self.normalization(k as i32)?;
        let a = self.ops.a.matrix();
        let mut ak = CMatrix::identity(a.nrows(), a.ncols());
        for _ in 0..k {
            ak = &ak * a;
        }
        Ok(trace_product(&(ak.adjoint() * &ak), self.rho.matrix()).re / norm)
    }
}

fn check_non_negative(taus: &[f64]) -> Result<()> {
    match taus.iter().find(|t| **t < 0.0 || t.is_nan()) {
        Some(&t) => Err(Error::NegativeTime(t)),
        None => Ok(()),
    }
}

/// For each input delay, its index into the returned sorted list of distinct
/// magnitudes.
fn sorted_magnitudes(taus: &[f64]) -> Result<(Vec<usize>, Vec<f64>)> {
    if taus.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("delays must be finite".into()));
    }
    let mut sorted: Vec<f64> = taus.iter().map(|t| t.abs()).collect();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let index =
        taus.iter().map(|t| sorted.binary_search_by(|x| x.total_cmp(&t.abs())).expect("magnitude present")).collect();
    Ok((index, sorted))
}

pub fn g2(params: &SystemParams, taus: &[f64]) -> Result<CorrelationSeries> {
    SteadyStateModel::solve(params)?.g2(taus)
}

pub fn g3(params: &SystemParams, tau1: f64, tau2: f64) -> Result<f64> {
    SteadyStateModel::solve(params)?.g3(tau1, tau2)
}

pub fn g3_zero_tau(params: &SystemParams, taus: &[f64]) -> Result<CorrelationSeries> {
    SteadyStateModel::solve(params)?.g3_zero_tau(taus)
}

pub fn g3_diag(params: &SystemParams, taus: &[f64]) -> Result<CorrelationSeries> {
    SteadyStateModel::solve(params)?.g3_diag(taus)
}

/// Cavity photon-number distribution of ρ with the atom traced out.
/// Roundoff-level negative populations are clamped to zero.
pub fn photon_distribution(rho: &DensityMatrix) -> PhotonDistribution {
    let dims = rho.dims();
    let m = rho.matrix();
    let probs: Vec<f64> = (0..dims.fock_dim())
        .map(|n| {
            let p: f64 = [crate::AtomState::Ground, crate::AtomState::Excited]
                .iter()
                .map(|&s| {
                    let i = dims.index(s, n);
                    m[(i, i)].re
                })
                .sum();
            p.max(0.0)
        })
        .collect();
    let mean = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    PhotonDistribution { probs, mean }
}

/// Falling factorial m!/(m−k)!.
fn falling_factorial(m: usize, k: usize) -> f64 {
    if m < k {
        return 0.0;
    }
    ((m - k + 1)..=m).map(|x| x as f64).product()
}

/// `g⁽ᵏ⁾ = Σ_m m!/(m−k)! P(m) / ⟨m⟩ᵏ`.
pub fn gk_from_distribution(dist: &PhotonDistribution, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("correlation order must be at least 1".into()));
    }
    if dist.mean < MIN_MEAN_PHOTONS {
        return Err(Error::ZeroMeanPhotonNumber);
    }
    let moment: f64 = dist.probs.iter().enumerate().map(|(m, p)| falling_factorial(m, k) * p).sum();
    Ok(moment / dist.mean.powi(k as i32))
}

/// Poisson distribution `𝒫(m) = μᵐ e^{−μ} / m!` for m = 0..=n_max, not
/// renormalized after truncation.
pub fn poisson_reference(mean: f64, n_max: usize) -> Result<PhotonDistribution> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::InvalidParameter(format!("Poisson mean must be non-negative, got {mean}")));
    }
    let mut probs = Vec::with_capacity(n_max + 1);
    let mut p = (-mean).exp();
    probs.push(p);
    for m in 1..=n_max {
        p *= mean / m as f64;
        probs.push(p);
    }
    Ok(PhotonDistribution { probs, mean })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowedAverage {
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation / √n).
    pub standard_error: f64,
    pub samples: usize,
}

/// Mean and standard error of the samples with `t_start ≤ τ ≤ t_end`.
pub fn windowed_average(series: &CorrelationSeries, t_start: f64, t_end: f64) -> Result<WindowedAverage> {
    let (_, values) = series.window(t_start, t_end);
    let n = values.len();
    if n == 0 {
        return Err(Error::EmptyWindow { start: t_start, end: t_end });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let standard_error = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(WindowedAverage { mean, standard_error, samples: n })
}

/// Delay grids.
pub mod grid {
    use crate::error::{Error, Result};

    /// `start, start + step, …` up to and including `stop` (within half a step).
    pub fn uniform(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) || !(stop >= start) {
            return Err(Error::InvalidParameter("uniform grid needs step > 0 and stop ≥ start".into()));
        }
        let n = ((stop - start) / step + 0.5).floor() as usize;
        Ok((0..=n).map(|i| start + i as f64 * step).collect())
    }

    /// `points` logarithmically spaced values from `start` to `stop` (both > 0).
    pub fn logarithmic(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
        if !(start > 0.0) || !(stop > start) || points < 2 {
            return Err(Error::InvalidParameter("log grid needs 0 < start < stop and ≥ 2 points".into()));
        }
        let (a, b) = (start.ln(), stop.ln());
        Ok((0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect())
    }

    /// 1 ns steps over [−500 ns, +500 ns].
    pub fn dynamics() -> Vec<f64> {
        (-500..=500).map(|i| i as f64 * 1e-9).collect()
    }

    /// 1 ns steps over [0, 500 ns] followed by a logarithmic tail to 4 μs.
    pub fn extended() -> Vec<f64> {
        let mut taus: Vec<f64> = (0..=500).map(|i| i as f64 * 1e-9).collect();
        let tail = logarithmic(500e-9, 4e-6, 64).expect("valid bounds");
        taus.extend(tail.into_iter().skip(1));
        taus
    }
}
