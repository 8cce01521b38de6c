//! SI constants and lab-unit conversions. Everything inside the crate is SI.

use std::f64::consts::PI;

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
pub const SECONDS_PER_YEAR: f64 = 365.25 * 86_400.0;

/// TDC resolution.
pub const TICK_SECONDS: f64 = 4e-12;

/// 171Yb+ excited-state lifetime (P1/2).
pub const YB_P12_LIFETIME: f64 = 8.12e-9;
pub const YB171_MASS_AMU: f64 = 171.0;

pub fn amu(m: f64) -> f64 {
    m * ATOMIC_MASS_UNIT
}

pub fn mhz_to_angular(f: f64) -> f64 {
    2.0 * PI * f * 1e6
}

pub fn angular_to_mhz(w: f64) -> f64 {
    w / (2.0 * PI * 1e6)
}

pub fn mm(x: f64) -> f64 {
    x * 1e-3
}

pub fn ns(t: f64) -> f64 {
    t * 1e-9
}

pub fn joules_to_ev(e: f64) -> f64 {
    e / ELEMENTARY_CHARGE
}
