//! Conversions between lab units (ν/2π in MHz, ns, μs) and the engine's
//! SI angular frequencies and seconds.

use std::f64::consts::TAU;

/// ν/2π in MHz → angular frequency in rad/s.
pub fn mhz(value: f64) -> f64 {
    value * TAU * 1e6
}

/// Angular frequency in rad/s → ν/2π in MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}

pub fn ns(value: f64) -> f64 {
    value * 1e-9
}

pub fn us(value: f64) -> f64 {
    value * 1e-6
}

pub fn to_ns(seconds: f64) -> f64 {
    seconds * 1e9
}
