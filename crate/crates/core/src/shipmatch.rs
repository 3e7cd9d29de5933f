//! Matching a track's start to the nearest ship report.

use alloc::string::String;

use crate::geodesy::haversine_km;
use crate::time::Timestamp;

#[derive(Clone, Debug, PartialEq)]
pub struct ShipRecord {
    pub vessel_id: String,
    pub t: Timestamp,
    pub lat: f64,
    pub lon: f64,
    pub name: Option<String>,
    pub vessel_type: Option<String>,
    pub speed_knots: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShipMatch<'a> {
    pub record: &'a ShipRecord,
    pub distance_km: f64,
    pub time_offset_seconds: f64,
}

/// Nearest report by great-circle distance among those within
/// `max_minutes` of `t`; `None` when nothing qualifies or the nearest is
/// farther than `max_km`.
///
/// Ties go to the smaller `|dt|`, then the smaller vessel id, then the
/// earlier timestamp, so the result does not depend on record order.
pub fn nearest_ship<'a>(
    records: &'a [ShipRecord],
    lat: f64,
    lon: f64,
    t: Timestamp,
    max_km: f64,
    max_minutes: f64,
) -> Option<ShipMatch<'a>> {
    let mut best: Option<ShipMatch<'a>> = None;
    for r in records {
        let dt = r.t.seconds_since(t);
        if !(dt.abs() <= max_minutes * 60.0) {
            continue;
        }
        let cand = ShipMatch {
            record: r,
            distance_km: haversine_km(lat, lon, r.lat, r.lon),
            time_offset_seconds: dt,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                let key = |m: &ShipMatch| (m.distance_km, m.time_offset_seconds.abs());
                let (cd, ct) = key(&cand);
                let (bd, bt) = key(b);
                cd < bd
                    || (cd == bd
                        && (ct < bt
                            || (ct == bt
                                && (cand.record.vessel_id < b.record.vessel_id
                                    || (cand.record.vessel_id == b.record.vessel_id && cand.record.t < b.record.t)))))
            }
        };
        if better {
            best = Some(cand);
        }
    }
    best.filter(|m| m.distance_km <= max_km)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn rec(id: &str, secs: i64, lat: f64, lon: f64) -> ShipRecord {
        ShipRecord {
            vessel_id: id.to_string(),
            t: Timestamp::from_unix_seconds(secs),
            lat,
            lon,
            name: None,
            vessel_type: None,
            speed_knots: None,
        }
    }

    #[test]
    fn picks_closest_within_window() {
        let rs = vec![rec("a", 0, 1.0, 1.0), rec("b", 100, 0.1, 0.1), rec("c", 5000, 0.0, 0.0)];
        let m = nearest_ship(&rs, 0.0, 0.0, Timestamp::from_unix_seconds(0), 50.0, 60.0).unwrap();
        assert_eq!(m.record.vessel_id, "b");
        assert_eq!(m.time_offset_seconds, 100.0);
        assert!(nearest_ship(&rs, 0.0, 0.0, Timestamp::from_unix_seconds(20_000), 50.0, 60.0).is_none());
        assert!(nearest_ship(&rs, 0.0, 0.0, Timestamp::from_unix_seconds(0), 10.0, 60.0).is_none());
    }

    #[test]
    fn equal_distance_prefers_closer_time() {
        let rs = vec![rec("a", 1200, 0.0, 0.045), rec("b", 300, 0.045, 0.0)];
        let m = nearest_ship(&rs, 0.0, 0.0, Timestamp::from_unix_seconds(0), 50.0, 60.0).unwrap();
        assert_eq!(m.record.vessel_id, "b");
    }

    #[test]
    fn ties_are_order_independent() {
        let rs = vec![rec("z", 60, 0.5, 0.0), rec("y", -60, 0.5, 0.0), rec("x", 120, 0.5, 0.0)];
        let mut rev = rs.clone();
        rev.reverse();
        let a = nearest_ship(&rs, 0.0, 0.0, Timestamp::from_unix_seconds(0), 100.0, 10.0).unwrap();
        let b = nearest_ship(&rev, 0.0, 0.0, Timestamp::from_unix_seconds(0), 100.0, 10.0).unwrap();
        assert_eq!(a.record.vessel_id, "y");
        assert_eq!(a, b);
    }
}
