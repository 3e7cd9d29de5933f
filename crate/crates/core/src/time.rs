//! UTC instants with millisecond resolution.

use core::fmt;

use crate::math::round;

const MILLIS_PER_DAY: f64 = 86_400_000.0;
const UNIX_EPOCH_JULIAN_DAY: f64 = 2_440_587.5;

/// A UTC instant, stored as milliseconds since the Unix epoch.
///
/// Leap seconds are not represented; arithmetic is plain POSIX time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_unix_millis(millis: i64) -> Self {
        Timestamp(millis)
    }

    pub const fn from_unix_seconds(seconds: i64) -> Self {
        Timestamp(seconds * 1000)
    }

    pub const fn unix_millis(self) -> i64 {
        self.0
    }

    /// Signed number of seconds from `earlier` to `self`.
    pub fn seconds_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) as f64 / 1000.0
    }

    /// Shifts by a (possibly fractional or negative) number of seconds,
    /// rounded to the nearest millisecond.
    pub fn plus_seconds(self, seconds: f64) -> Timestamp {
        Timestamp(self.0 + round(seconds * 1000.0) as i64)
    }

    pub fn julian_day(self) -> f64 {
        self.0 as f64 / MILLIS_PER_DAY + UNIX_EPOCH_JULIAN_DAY
    }

    /// Linear interpolation weight of `self` inside `[a, b]`.
    pub(crate) fn fraction_between(self, a: Timestamp, b: Timestamp) -> f64 {
        if a == b {
            0.0
        } else {
            (self.0 - a.0) as f64 / (b.0 - a.0) as f64
        }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}
