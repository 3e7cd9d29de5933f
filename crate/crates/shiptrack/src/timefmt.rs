//! RFC 3339 conversion for core timestamps.

use chrono::{DateTime, SecondsFormat, Utc};
use shiptrack_core::Timestamp;

pub fn parse_rfc3339(s: &str) -> Option<Timestamp> {
    let t = DateTime::parse_from_rfc3339(s.trim()).ok()?;
    Some(Timestamp::from_unix_millis(t.timestamp_millis()))
}

/// UTC with a `Z` suffix; milliseconds only when nonzero.
pub fn format_rfc3339(t: Timestamp) -> String {
    match DateTime::<Utc>::from_timestamp_millis(t.unix_millis()) {
        Some(d) => d.to_rfc3339_opts(SecondsFormat::AutoSi, true),
        None => format!("{}", t.unix_millis()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = Timestamp::from_unix_seconds(1_560_747_600);
        assert_eq!(format_rfc3339(t), "2019-06-17T05:00:00Z");
        assert_eq!(parse_rfc3339("2019-06-17T05:00:00Z"), Some(t));
        assert_eq!(parse_rfc3339("2019-06-17T07:00:00+02:00"), Some(t));
        let ms = Timestamp::from_unix_millis(1_560_747_600_250);
        assert_eq!(parse_rfc3339(&format_rfc3339(ms)), Some(ms));
        assert_eq!(parse_rfc3339("yesterday"), None);
    }
}
