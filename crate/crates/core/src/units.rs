//! Unit conversions and calendar conventions.
//!
//! Volumes are in decimal exabytes (1 EB = 10^18 bytes), time is a continuous
//! calendar year and a year is exactly 365 days. Every conversion factor used
//! by the derived metrics lives here.

use crate::error::{Error, Result};

/// Calendar year, fractional years allowed (e.g. `2015.2`).
pub type TimeYears = f64;

/// Volume in exabytes.
pub type VolumeEb = f64;

/// Reference year of the volume models: the year digital storage overtook analog.
pub const T0: TimeYears = 2002.0;

pub const BYTES_PER_EB: f64 = 1e18;
pub const BITS_PER_BYTE: f64 = 8.0;
pub const BITS_PER_EB: f64 = BITS_PER_BYTE * BYTES_PER_EB;
pub const EB_PER_ZB: f64 = 1e3;
pub const BYTES_PER_GB: f64 = 1e9;
pub const BITS_PER_KBIT: f64 = 1e3;
pub const SECONDS_PER_DAY: f64 = 24.0 * 3600.0;
pub const DAYS_PER_YEAR: f64 = 365.0;
pub const SECONDS_PER_YEAR: f64 = DAYS_PER_YEAR * SECONDS_PER_DAY;
pub const MINUTES_PER_MONTH: f64 = 30.0 * 24.0 * 60.0;
pub const SECONDS_PER_MINUTE: f64 = 60.0;
/// Decimal megabyte expressed in kilobits.
pub const KBIT_PER_MB: f64 = BITS_PER_BYTE * 1e3;

/// One bit expressed in exabytes.
pub const ONE_BIT_EB: VolumeEb = 1.0 / BITS_PER_EB;

pub fn eb_to_bits(v: VolumeEb) -> f64 {
    v * BITS_PER_EB
}

pub fn bits_to_eb(bits: f64) -> VolumeEb {
    bits / BITS_PER_EB
}

pub fn eb_to_zb(v: VolumeEb) -> f64 {
    v / EB_PER_ZB
}

/// Annual volume `v` (EB per year) shared by `n` persons, as a sustained
/// per-person rate in kbit/s.
pub fn annual_per_capita_rate_kbit_s(v: VolumeEb, n: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::Domain(format!(
            "population must be positive, got {n}"
        )));
    }
    Ok(BITS_PER_EB * (v / n) / BITS_PER_KBIT / SECONDS_PER_YEAR)
}
