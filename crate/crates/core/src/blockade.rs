//! Certification of n-photon blockade from photon statistics.
//!
//! Ideal n-photon blockade means P(m) = 0 for m > n with P(n) ≠ 0. For a
//! weakly excited field this implies `g⁽ⁿ⁺¹⁾ < 1 − ⟨m⟩` and
//! `g⁽ⁿ⁾ ≥ 1 − ⟨m⟩²/2`, which are checked on the correlation values.

use serde::{Deserialize, Serialize};

use crate::correlations::{gk_from_distribution, poisson_reference, PhotonDistribution, SteadyStateModel};
use crate::error::{Error, Result};
use crate::jcmodel::SystemParams;

/// Populations at or below this count as zero.
pub const STRICT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrictCheck {
    pub pass: bool,
    /// For each photon number m: `P(m) ≤ tol` when m > n, `P(n) > tol` at n,
    /// always true below n.
    pub per_photon_number: Vec<bool>,
}

pub fn certify_strict(dist: &PhotonDistribution, n: usize) -> StrictCheck {
    let len = dist.probs.len().max(n + 1);
    let per_photon_number: Vec<bool> = (0..len)
        .map(|m| {
            let p = dist.get(m);
            match m.cmp(&n) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Equal => p > STRICT_TOLERANCE,
                std::cmp::Ordering::Greater => p <= STRICT_TOLERANCE,
            }
        })
        .collect();
    StrictCheck { pass: per_photon_number.iter().all(|b| *b), per_photon_number }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub pass: bool,
    /// `g⁽ⁿ⁺¹⁾ − (1 − ⟨m⟩)`; negative when the upper bound holds.
    pub upper_margin: f64,
    /// `g⁽ⁿ⁾ − (1 − ⟨m⟩²/2)`; non-negative when the lower bound holds.
    pub lower_margin: f64,
}

pub fn certify_inequalities(g_n: f64, g_np1: f64, mean: f64, _n: usize) -> InequalityCheck {
    let upper_margin = g_np1 - (1.0 - mean);
    let lower_margin = g_n - (1.0 - mean * mean / 2.0);
    InequalityCheck { pass: upper_margin < 0.0 && lower_margin >= 0.0, upper_margin, lower_margin }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockadeReport {
    pub n: usize,
    pub mean: f64,
    pub g_n: f64,
    pub g_np1: f64,
    pub strict_pass: bool,
    pub inequality_pass: bool,
    pub upper_margin: f64,
    pub lower_margin: f64,
    pub distribution_check: Vec<bool>,
    /// Violated validity conditions of the inequalities.
    pub warnings: Vec<String>,
}

/// Full report for order `n ≥ 1` from a photon-number distribution.
pub fn certify_distribution(dist: &PhotonDistribution, n: usize) -> Result<BlockadeReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("blockade order must be at least 1".into()));
    }
    let g_n = gk_from_distribution(dist, n)?;
    let g_np1 = gk_from_distribution(dist, n + 1)?;
    let strict = certify_strict(dist, n);
    let ineq = certify_inequalities(g_n, g_np1, dist.mean, n);
    Ok(BlockadeReport {
        n,
        mean: dist.mean,
        g_n,
        g_np1,
        strict_pass: strict.pass,
        inequality_pass: ineq.pass,
        upper_margin: ineq.upper_margin,
        lower_margin: ineq.lower_margin,
        distribution_check: strict.per_photon_number,
        warnings: validity_warnings(dist, n),
    })
}

fn validity_warnings(dist: &PhotonDistribution, n: usize) -> Vec<String> {
    let mut out = Vec::new();
    if dist.mean > 0.1 {
        out.push(format!("mean photon number {:.3e} is not small", dist.mean));
    }
    for m in 0..=n {
        let (p, q) = (dist.get(m), dist.get(m + 1));
        if q > 0.1 * p {
            out.push(format!("P({}) = {:.3e} is not small against P({m}) = {:.3e}", m + 1, q, p));
        }
    }
    if dist.probs.len() < n + 2 {
        out.push(format!("distribution truncated below photon number {}", n + 1));
    }
    out
}

/// `(P(n) − 𝒫(n)) / 𝒫(n)` against the Poisson distribution of the given
/// mean, for n up to the last index where 𝒫(n) > 1e−15.
pub fn relative_deviation(dist: &PhotonDistribution, mean: f64) -> Result<Vec<f64>> {
    if !(mean > 0.0) {
        return Err(Error::ZeroMeanPhotonNumber);
    }
    let reference = poisson_reference(mean, dist.probs.len().saturating_sub(1))?;
    let last = reference.probs.iter().rposition(|p| *p > 1e-15).map_or(0, |i| i + 1);
    Ok((0..last).map(|k| (dist.probs[k] - reference.probs[k]) / reference.probs[k]).collect())
}

/// Solves the steady state of `params` and certifies order `n`.
pub fn certify_from_params(params: &SystemParams, n: usize) -> Result<BlockadeReport> {
    let model = SteadyStateModel::solve(params)?;
    certify_distribution(&model.photon_distribution(), n)
}
