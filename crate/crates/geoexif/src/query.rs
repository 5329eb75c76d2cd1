//! Filter query strings: `lat`, `lng`, `radius` (km), repeatable `device`,
//! `from`, `to`, `slot`.

use std::collections::BTreeSet;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use geoexif_core::time::parse_exif_datetime;
use geoexif_core::{FilterSpec, GeoPoint, SlotHours, ZoneFilter};
use url::form_urlencoded;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad filter parameter {param}: {reason}")]
pub struct QueryError {
    pub param: String,
    pub reason: String,
}

fn bad(param: &str, reason: impl Into<String>) -> QueryError {
    QueryError { param: param.into(), reason: reason.into() }
}

pub fn pairs(query: &str) -> Vec<(String, String)> {
    form_urlencoded::parse(query.as_bytes()).into_owned().collect()
}

/// Single-valued parameter; repeating it is an error.
pub fn single<'a>(pairs: &'a [(String, String)], key: &str) -> Result<Option<&'a str>, QueryError> {
    let mut it = pairs.iter().filter(|(k, _)| k == key);
    let first = it.next().map(|(_, v)| v.as_str());
    if it.next().is_some() {
        return Err(bad(key, "given more than once"));
    }
    Ok(first)
}

fn number(pairs: &[(String, String)], key: &str) -> Result<Option<f64>, QueryError> {
    single(pairs, key)?
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad(key, format!("{v:?} is not a number"))))
        .transpose()
}

/// `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM:SS` or `YYYY-MM-DD HH:MM:SS`.
/// A bare date means the start of the day for `from` and its last second for `to`.
pub fn parse_bound(key: &str, v: &str, end_of_day: bool) -> Result<NaiveDateTime, QueryError> {
    let v = v.trim();
    if let Ok(d) = NaiveDate::parse_from_str(v, "%Y-%m-%d") {
        let t = if end_of_day { NaiveTime::from_hms_opt(23, 59, 59) } else { NaiveTime::from_hms_opt(0, 0, 0) };
        return Ok(d.and_time(t.expect("valid time")));
    }
    parse_exif_datetime(v).ok_or_else(|| bad(key, format!("{v:?} is not a date or date-time")))
}

pub fn parse_slot(v: &str) -> Result<SlotHours, QueryError> {
    let h = v.trim().trim_start_matches('h').parse::<u32>().map_err(|_| bad("slot", format!("{v:?} is not an integer")))?;
    SlotHours::new(h).map_err(|_| bad("slot", format!("{h} is not one of 1, 2, 3, 4, 5, 12, 24")))
}

pub fn parse_filter(query: &str) -> Result<FilterSpec, QueryError> {
    let p = pairs(query);
    let zone = match (number(&p, "lat")?, number(&p, "lng")?, number(&p, "radius")?) {
        (None, None, None) => None,
        (Some(lat), Some(lng), Some(r)) => {
            let center = GeoPoint::new(lat, lng).map_err(|e| bad("lat/lng", e.to_string()))?;
            Some(ZoneFilter::new(center, r).map_err(|e| bad("radius", e.to_string()))?)
        }
        _ => return Err(bad("lat/lng/radius", "zone needs all three")),
    };
    let devices: BTreeSet<String> = p.iter().filter(|(k, _)| k == "device").map(|(_, v)| v.clone()).collect();
    let from = single(&p, "from")?.map(|v| parse_bound("from", v, false)).transpose()?;
    let to = single(&p, "to")?.map(|v| parse_bound("to", v, true)).transpose()?;
    let slot = single(&p, "slot")?.map(parse_slot).transpose()?;
    FilterSpec::new(zone, (!devices.is_empty()).then_some(devices), from, to, slot)
        .map_err(|e| bad("from/to", e.to_string()))
}

/// Canonical query string for a filter; parsing it yields the same filter.
pub fn to_query(f: &FilterSpec) -> String {
    let mut s = form_urlencoded::Serializer::new(String::new());
    if let Some(z) = f.zone() {
        s.append_pair("lat", &z.center().latitude().to_string());
        s.append_pair("lng", &z.center().longitude().to_string());
        s.append_pair("radius", &z.radius_km().to_string());
    }
    for d in f.devices().into_iter().flatten() {
        s.append_pair("device", d);
    }
    if let Some(t) = f.date_from() {
        s.append_pair("from", &t.format("%Y-%m-%dT%H:%M:%S").to_string());
    }
    if let Some(t) = f.date_to() {
        s.append_pair("to", &t.format("%Y-%m-%dT%H:%M:%S").to_string());
    }
    if let Some(h) = f.slot() {
        s.append_pair("slot", &h.hours().to_string());
    }
    s.finish()
}
