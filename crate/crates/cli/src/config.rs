//! Run configuration. Frequencies are ν/2π in MHz (`_mhz`), delays in ns
//! (`_ns`); everything is converted to rad/s and seconds on the way in.

use serde::Deserialize;

use cqed::units::mhz;
use cqed::{Drive, DriveKind, SpaceDims, SpectrumModel, SystemParams};

use crate::error::CliError;

/// Largest number of points a sweep may expand to.
pub const MAX_SWEEP_POINTS: usize = 10_000;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub task: Task,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveChoice {
    None,
    Atom,
    Cavity,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub g_mhz: f64,
    #[serde(default = "default_kappa")]
    pub kappa_mhz: f64,
    #[serde(default = "default_gamma")]
    pub gamma_mhz: f64,
    #[serde(default)]
    pub delta_c_mhz: f64,
    /// ω_a − ω_c.
    #[serde(default)]
    pub delta_ac_mhz: f64,
    #[serde(default = "default_drive")]
    pub drive: DriveChoice,
    #[serde(default)]
    pub eta_mhz: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_drive() -> DriveChoice {
    DriveChoice::None
}

fn default_kappa() -> f64 {
    2.0
}

fn default_gamma() -> f64 {
    3.0
}

fn default_n_max() -> usize {
    12
}

impl SystemConfig {
    pub fn drive(&self) -> Drive {
        match self.drive {
            DriveChoice::None => Drive::None,
            DriveChoice::Atom => Drive::Atom(mhz(self.eta_mhz)),
            DriveChoice::Cavity => Drive::Cavity(mhz(self.eta_mhz)),
        }
    }

    pub fn drive_kind(&self) -> Result<DriveKind, CliError> {
        match self.drive {
            DriveChoice::Atom => Ok(DriveKind::Atom),
            DriveChoice::Cavity => Ok(DriveKind::Cavity),
            DriveChoice::None => Err(CliError::config("this task needs drive = \"atom\" or \"cavity\"")),
        }
    }

    pub fn params(&self) -> Result<SystemParams, CliError> {
        let dims = SpaceDims::with_max_photons(self.n_max)?;
        Ok(SystemParams::with_cavity_detuning(
            mhz(self.g_mhz),
            mhz(self.kappa_mhz),
            mhz(self.gamma_mhz),
            mhz(self.delta_c_mhz),
            mhz(self.delta_ac_mhz),
            self.drive(),
            dims,
        )?)
    }

    pub fn spectrum_model(&self, temperature_scale_mhz: f64, a_ec: f64) -> Result<SpectrumModel, CliError> {
        let model = SpectrumModel {
            g: mhz(self.g_mhz),
            kappa: mhz(self.kappa_mhz),
            gamma: mhz(self.gamma_mhz),
            delta_ac: mhz(self.delta_ac_mhz),
            eta: mhz(self.eta_mhz),
            temperature_scale: mhz(temperature_scale_mhz),
            a_ec,
            drive: self.drive_kind()?,
        };
        model.validate()?;
        Ok(model)
    }

    /// Returns a copy with one named parameter replaced.
    pub fn with(&self, parameter: SweepParameter, value: f64) -> Self {
        let mut out = self.clone();
        match parameter {
            SweepParameter::GMhz => out.g_mhz = value,
            SweepParameter::KappaMhz => out.kappa_mhz = value,
            SweepParameter::GammaMhz => out.gamma_mhz = value,
            SweepParameter::DeltaCMhz => out.delta_c_mhz = value,
            SweepParameter::DeltaAcMhz => out.delta_ac_mhz = value,
            SweepParameter::EtaMhz => out.eta_mhz = value,
        }
        out
    }
}

/// Either an explicit list or an inclusive arithmetic range.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let values = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, step } => {
                if !(*step > 0.0) || !(stop >= start) {
                    return Err(CliError::config("range grids need step > 0 and stop >= start"));
                }
                let n = ((stop - start) / step + 0.5).floor();
                if n > 1e7 {
                    return Err(CliError::config("range grid is too large"));
                }
                (0..=n as usize).map(|i| start + i as f64 * step).collect()
            }
        };
        if values.is_empty() {
            return Err(CliError::config("grids must not be empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config("grid values must be finite"));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    Semiclassical,
    Quantum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    GMhz,
    KappaMhz,
    GammaMhz,
    DeltaCMhz,
    DeltaAcMhz,
    EtaMhz,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::GMhz => "g_mhz",
            SweepParameter::KappaMhz => "kappa_mhz",
            SweepParameter::GammaMhz => "gamma_mhz",
            SweepParameter::DeltaCMhz => "delta_c_mhz",
            SweepParameter::DeltaAcMhz => "delta_ac_mhz",
            SweepParameter::EtaMhz => "eta_mhz",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub values: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Full quantum steady-state ⟨a†a⟩.
    MeanPhotons,
    /// Weak-drive formula ⟨a†a⟩ without thermal averaging.
    SemiclassicalMeanPhotons,
    G2Zero,
    G3Zero,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::MeanPhotons => "mean_photons",
            Quantity::SemiclassicalMeanPhotons => "semiclassical_mean_photons",
            Quantity::G2Zero => "g2_zero",
            Quantity::G3Zero => "g3_zero",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParameter {
    G,
    DeltaAc,
    Eta,
    TemperatureScale,
    AEc,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongTimeGuess {
    pub a_c: f64,
    pub tau_c_ns: f64,
    pub f_c_mhz: f64,
    pub a_i: f64,
    pub tau_i_ns: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub start: f64,
    pub stop: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    Spectrum {
        detunings_mhz: Grid,
        #[serde(default = "default_method")]
        method: SpectrumMethod,
        #[serde(default)]
        temperature_scale_mhz: f64,
        #[serde(default)]
        a_ec: f64,
    },
    G2 {
        taus_ns: Grid,
    },
    G3map {
        tau1_ns: Grid,
        tau2_ns: Grid,
    },
    G3diag {
        taus_ns: Grid,
    },
    /// g³(0, τ) including negative delays.
    G3zero {
        taus_ns: Grid,
    },
    Distribution,
    Certify {
        #[serde(default = "default_order")]
        n: usize,
    },
    FitSpectrum {
        /// CSV or JSON file, relative to the config file.
        input: String,
        #[serde(default)]
        temperature_scale_mhz: f64,
        #[serde(default)]
        a_ec: f64,
        #[serde(default = "default_scale")]
        scale: f64,
        #[serde(default)]
        fixed: Vec<FitParameter>,
    },
    FitLongtime {
        input: String,
        initial: LongTimeGuess,
        #[serde(default)]
        window_ns: Option<Window>,
    },
    Sweep {
        axes: Vec<SweepAxis>,
        quantities: Vec<Quantity>,
    },
}

fn default_method() -> SpectrumMethod {
    SpectrumMethod::Semiclassical
}

fn default_order() -> usize {
    2
}

fn default_scale() -> f64 {
    1.0
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Spectrum { .. } => "spectrum",
            Task::G2 { .. } => "g2",
            Task::G3map { .. } => "g3map",
            Task::G3diag { .. } => "g3diag",
            Task::G3zero { .. } => "g3zero",
            Task::Distribution => "distribution",
            Task::Certify { .. } => "certify",
            Task::FitSpectrum { .. } => "fit-spectrum",
            Task::FitLongtime { .. } => "fit-longtime",
            Task::Sweep { .. } => "sweep",
        }
    }
}

impl RunConfig {
    pub fn parse(bytes: &[u8]) -> Result<Self, CliError> {
        let text = std::str::from_utf8(bytes).map_err(|e| CliError::config(format!("config is not UTF-8: {e}")))?;
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.system.params()?;
        if let Task::Sweep { axes, quantities } = &self.task {
            if axes.is_empty() || quantities.is_empty() {
                return Err(CliError::config("a sweep needs at least one axis and one quantity"));
            }
            let mut points = 1usize;
            for axis in axes {
                points = points.saturating_mul(axis.values.values()?.len());
            }
            if points > MAX_SWEEP_POINTS {
                return Err(CliError::config(format!(
                    "sweep expands to {points} points; the limit is {MAX_SWEEP_POINTS}"
                )));
            }
        }
        Ok(())
    }
}
