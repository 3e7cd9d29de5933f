// Thin re-exports so the rest of the crate reads like std float code.
pub(crate) use libm::{
    acos, asin, atan2, ceil, cos, exp, floor, round, sin, sqrt,
};

pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

pub(crate) const DEG: f64 = core::f64::consts::PI / 180.0;

/// Floating remainder with the sign of the divisor.
pub(crate) fn rem_euclid(x: f64, m: f64) -> f64 {
    let r = libm::fmod(x, m);
    if r < 0.0 {
        r + m
    } else {
        r
    }
}
