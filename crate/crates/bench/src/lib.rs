//! Shared parameter sets for the benchmarks.

use cqed::units::mhz;
use cqed::{Drive, DriveKind, SpaceDims, SystemParams};

/// Strongly coupled system driven near the upper single-excitation normal mode.
pub fn first_manifold(kind: DriveKind, n_max: usize) -> SystemParams {
    SystemParams::with_cavity_detuning(
        mhz(16.38),
        mhz(2.0),
        mhz(3.0),
        mhz(18.0),
        0.0,
        Drive::new(kind, mhz(0.55)),
        SpaceDims::with_max_photons(n_max).expect("valid truncation"),
    )
    .expect("valid parameters")
}
