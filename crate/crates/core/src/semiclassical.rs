//! Weak-drive transmission spectra from the linearized equations of motion,
//! with thermal broadening of the atomic resonance and an empty-cavity
//! background.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jcmodel::DriveKind;

const QUADRATURE_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumModel {
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    /// ω_a − ω_c.
    pub delta_ac: f64,
    pub eta: f64,
    /// Mean of the one-sided exponential distribution of atomic light shifts.
    pub temperature_scale: f64,
    /// Amplitude of the empty-cavity Lorentzian.
    pub a_ec: f64,
    pub drive: DriveKind,
}

impl SpectrumModel {
    pub fn validate(&self) -> Result<()> {
        let values = [self.g, self.kappa, self.gamma, self.delta_ac, self.eta, self.temperature_scale, self.a_ec];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("spectrum parameters must be finite".into()));
        }
        for (name, v) in [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("temperature_scale", self.temperature_scale),
            ("A_ec", self.a_ec),
        ] {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Unaveraged ⟨a†a⟩ at probe detuning Δ_c with the atom at Δ_a.
    pub fn mean_photons(&self, delta_c: f64, delta_a: f64) -> f64 {
        match self.drive {
            DriveKind::Cavity => mean_photons_cavity_drive(self, delta_c, delta_a),
            DriveKind::Atom => mean_photons_atom_drive(self, delta_c, delta_a),
        }
    }

    /// Unaveraged ⟨a†a⟩ with Δ_a = Δ_c − Δ_ac.
    pub fn bare(&self, delta_c: f64) -> f64 {
        self.mean_photons(delta_c, delta_c - self.delta_ac)
    }

    /// ⟨a†a⟩ averaged over thermal light shifts δ, with Δ_a = Δ_c − Δ_ac − δ.
    pub fn thermal(&self, delta_c: f64) -> f64 {
        if self.temperature_scale == 0.0 {
            return self.bare(delta_c);
        }
        let (nodes, weights) = laguerre16();
        nodes
            .iter()
            .zip(weights)
            .map(|(x, w)| w * self.mean_photons(delta_c, delta_c - self.delta_ac - self.temperature_scale * x))
            .sum()
    }

    /// Thermal average plus the empty-cavity remnant for cavity drive.
    pub fn composite(&self, delta_c: f64) -> f64 {
        let remnant = match self.drive {
            DriveKind::Cavity => empty_cavity_remnant(delta_c, self.a_ec, self.kappa),
            DriveKind::Atom => 0.0,
        };
        self.thermal(delta_c) + remnant
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSeries {
    /// Probe detunings Δ_c in rad/s.
    pub detunings: Vec<f64>,
    /// Mean intracavity photon number.
    pub values: Vec<f64>,
}

fn denominator(model: &SpectrumModel, delta_c: f64, delta_a: f64) -> f64 {
    let da = Complex64::new(delta_a, model.gamma);
    let dc = Complex64::new(delta_c, model.kappa);
    (dc * da - model.g * model.g).norm_sqr()
}

/// `η² |Δ̃_a|² / |Δ̃_c Δ̃_a − g²|²` with Δ̃_a = Δ_a + iγ, Δ̃_c = Δ_c + iκ.
pub fn mean_photons_cavity_drive(model: &SpectrumModel, delta_c: f64, delta_a: f64) -> f64 {
    let da = Complex64::new(delta_a, model.gamma).norm_sqr();
    model.eta * model.eta * da / denominator(model, delta_c, delta_a)
}

/// `η² g² / |Δ̃_c Δ̃_a − g²|²`.
pub fn mean_photons_atom_drive(model: &SpectrumModel, delta_c: f64, delta_a: f64) -> f64 {
    model.eta * model.eta * model.g * model.g / denominator(model, delta_c, delta_a)
}

/// Lorentzian `A_ec / (1 + (Δ_c/κ)²)` of full width 2κ.
pub fn empty_cavity_remnant(delta_c: f64, a_ec: f64, kappa: f64) -> f64 {
    if a_ec == 0.0 {
        return 0.0;
    }
    a_ec / (1.0 + (delta_c / kappa).powi(2))
}

pub fn thermal_average_spectrum(model: &SpectrumModel, detunings: &[f64]) -> Result<SpectrumSeries> {
    model.validate()?;
    Ok(SpectrumSeries { detunings: detunings.to_vec(), values: detunings.iter().map(|d| model.thermal(*d)).collect() })
}

pub fn composite_spectrum(model: &SpectrumModel, detunings: &[f64]) -> Result<SpectrumSeries> {
    model.validate()?;
    Ok(SpectrumSeries {
        detunings: detunings.to_vec(),
        values: detunings.iter().map(|d| model.composite(*d)).collect(),
    })
}

fn laguerre16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_laguerre(QUADRATURE_NODES))
}

/// Nodes and weights of the n-point Gauss–Laguerre rule for ∫₀^∞ f(x) e⁻ˣ dx.
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..n {
        // asymptotic starting guesses, then Newton on Lₙ
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - nodes[i - 2])
            }
        };
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p, dp) = laguerre_with_derivative(n, z);
            deriv = dp;
            let step = p / dp;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, dp) = laguerre_with_derivative(n, z);
        deriv = if dp != 0.0 { dp } else { deriv };
        nodes.push(z);
        weights.push(1.0 / (z * deriv * deriv));
    }
    (nodes, weights)
}

/// `(Lₙ(x), Lₙ'(x))` by the three-term recurrence.
fn laguerre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = ((2.0 * jf - 1.0 - x) * p2 - (jf - 1.0) * p3) / jf;
    }
    let nf = n as f64;
    (p1, nf * (p1 - p2) / x)
}
