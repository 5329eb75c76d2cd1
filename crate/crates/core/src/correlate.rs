//! Correlation over a whole run: geotag classification, same-coordinate
//! buckets, time-slot links between geotagged and non-geotagged images of
//! the same device, and device ranking.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use chrono::{NaiveDateTime, TimeDelta};

use crate::exif::{ExifRecord, GpsError};
use crate::geo::GeoPoint;

/// Link windows in hours, narrowest first.
pub const SLOT_HOURS: [u32; 7] = [1, 2, 3, 4, 5, 12, 24];

/// Number of marker colours; devices cycle through them by rank.
pub const PALETTE_SIZE: u32 = 10;

/// One of the fixed link windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "u32", into = "u32"))]
pub struct SlotHours(u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvalidSlot(pub u32);

impl fmt::Display for InvalidSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "time slot {} h is not one of 1, 2, 3, 4, 5, 12, 24", self.0)
    }
}

impl SlotHours {
    pub fn new(hours: u32) -> Result<Self, InvalidSlot> {
        if SLOT_HOURS.contains(&hours) {
            Ok(SlotHours(hours))
        } else {
            Err(InvalidSlot(hours))
        }
    }

    pub fn hours(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        SLOT_HOURS.iter().position(|&h| h == self.0).expect("validated slot")
    }

    pub fn all() -> impl Iterator<Item = SlotHours> {
        SLOT_HOURS.iter().map(|&h| SlotHours(h))
    }

    pub fn window(self) -> TimeDelta {
        TimeDelta::hours(i64::from(self.0))
    }
}

impl TryFrom<u32> for SlotHours {
    type Error = InvalidSlot;
    fn try_from(h: u32) -> Result<Self, InvalidSlot> {
        SlotHours::new(h)
    }
}

impl From<SlotHours> for u32 {
    fn from(s: SlotHours) -> u32 {
        s.0
    }
}

/// `|a - b| <= slot`, the link predicate.
pub fn within_slot(a: NaiveDateTime, b: NaiveDateTime, slot: SlotHours) -> bool {
    (a - b).abs() <= slot.window()
}

/// Non-geotagged link counts for each entry of [`SLOT_HOURS`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlotCounts(pub [u32; 7]);

impl SlotCounts {
    pub fn get(&self, slot: SlotHours) -> u32 {
        self.0[slot.index()]
    }

    pub fn is_monotone(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Geotagged(GeoPoint),
    /// `malformed` carries the reason when GPS tags exist but do not convert.
    NonGeotagged { malformed: Option<GpsError> },
}

impl Classification {
    pub fn position(&self) -> Option<GeoPoint> {
        match self {
            Classification::Geotagged(p) => Some(*p),
            Classification::NonGeotagged { .. } => None,
        }
    }
}

/// Geotagged iff latitude, longitude and both references are present and convert.
pub fn classify(exif: Option<&ExifRecord>) -> Classification {
    let Some(exif) = exif else {
        return Classification::NonGeotagged { malformed: None };
    };
    match exif.gps_ifd().and_then(|g| g.map(|g| g.position()).transpose()) {
        Ok(Some(p)) => Classification::Geotagged(p),
        Ok(None) => Classification::NonGeotagged { malformed: None },
        Err(e) => Classification::NonGeotagged { malformed: Some(e) },
    }
}

/// Position rounded to 6 decimals, as integer micro-degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BucketKey {
    pub lat_e6: i64,
    pub lng_e6: i64,
}

impl BucketKey {
    pub fn of(p: &GeoPoint) -> Self {
        BucketKey {
            lat_e6: libm::round(p.latitude() * 1e6) as i64,
            lng_e6: libm::round(p.longitude() * 1e6) as i64,
        }
    }
}

impl fmt::Display for BucketKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lat_e6, self.lng_e6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoordinateGroup {
    pub bucket: BucketKey,
    /// Bucket size minus one, the same for every member.
    pub multiples: u32,
    pub reference: bool,
}

/// Bucket positions and pick one reference per bucket (lowest path,
/// compared bytewise). Output is aligned with `items`.
pub fn group_same_coordinates<S: AsRef<str>>(items: &[(S, GeoPoint)]) -> Vec<CoordinateGroup> {
    let keys: Vec<BucketKey> = items.iter().map(|(_, p)| BucketKey::of(p)).collect();
    let mut buckets: BTreeMap<BucketKey, (u32, usize)> = BTreeMap::new();
    for (i, key) in keys.iter().enumerate() {
        let entry = buckets.entry(*key).or_insert((0, i));
        entry.0 += 1;
        if items[i].0.as_ref().as_bytes() < items[entry.1].0.as_ref().as_bytes() {
            entry.1 = i;
        }
    }
    keys.iter()
        .enumerate()
        .map(|(i, key)| {
            let (size, reference) = buckets[key];
            CoordinateGroup { bucket: *key, multiples: size - 1, reference: reference == i }
        })
        .collect()
}

/// One side of a link: the device and its capture time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkSubject<'a> {
    pub fake_id: &'a str,
    pub datetime: Option<NaiveDateTime>,
}

/// For every geotagged subject, count same-device non-geotagged subjects
/// within each slot. `None` marks a geotagged subject without a capture time.
pub fn compute_timeslot_links(
    geotagged: &[LinkSubject<'_>],
    non_geotagged: &[LinkSubject<'_>],
) -> Vec<Option<SlotCounts>> {
    let mut by_device: BTreeMap<&str, Vec<NaiveDateTime>> = BTreeMap::new();
    for n in non_geotagged {
        if let Some(t) = n.datetime {
            by_device.entry(n.fake_id).or_default().push(t);
        }
    }
    for times in by_device.values_mut() {
        times.sort_unstable();
    }
    geotagged
        .iter()
        .map(|g| {
            let t = g.datetime?;
            let mut counts = SlotCounts::default();
            if let Some(times) = by_device.get(g.fake_id) {
                for slot in SlotHours::all() {
                    let lo = t - slot.window();
                    let hi = t + slot.window();
                    let start = times.partition_point(|x| *x < lo);
                    let end = times.partition_point(|x| *x <= hi);
                    counts.0[slot.index()] = (end - start) as u32;
                }
            }
            Some(counts)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeviceRank {
    pub fake_id: String,
    /// 1-based rank by image count.
    pub ordre: u32,
    pub color: u32,
    pub nb_fake_id: u32,
}

/// Rank devices by image count (descending), ties by fake id ascending.
/// `fake_ids` holds one entry per image.
pub fn rank_devices<'a, I>(fake_ids: I) -> Vec<DeviceRank>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
    for id in fake_ids {
        *counts.entry(id).or_default() += 1;
    }
    let mut devices: Vec<(&str, u32)> = counts.into_iter().collect();
    devices.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    devices
        .into_iter()
        .enumerate()
        .map(|(i, (fake_id, n))| {
            let ordre = i as u32 + 1;
            DeviceRank { fake_id: String::from(fake_id), ordre, color: (ordre - 1) % PALETTE_SIZE, nb_fake_id: n }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use chrono::NaiveDate;

    fn t(h: u32, m: u32, s: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2013, 8, 11).unwrap().and_hms_opt(h, m, s).unwrap()
    }

    fn pt(lat: f64, lng: f64) -> GeoPoint {
        GeoPoint::new(lat, lng).unwrap()
    }

    #[test]
    fn slot_validation() {
        assert!(SlotHours::new(7).is_err());
        assert!(SlotHours::new(0).is_err());
        assert_eq!(SlotHours::new(12).unwrap().index(), 5);
    }

    #[test]
    fn six_at_one_position() {
        let items: Vec<(String, GeoPoint)> =
            (0..6).map(|i| (alloc::format!("img{}.jpg", 5 - i), pt(43.2, 5.8))).collect();
        let groups = group_same_coordinates(&items);
        assert!(groups.iter().all(|g| g.multiples == 5));
        let refs: Vec<usize> = groups.iter().enumerate().filter(|(_, g)| g.reference).map(|(i, _)| i).collect();
        assert_eq!(refs, vec![5]); // "img0.jpg"
    }

    #[test]
    fn unique_position_has_no_multiples() {
        let groups = group_same_coordinates(&[("a", pt(1.0, 1.0)), ("b", pt(1.0, 1.1))]);
        assert!(groups.iter().all(|g| g.multiples == 0 && g.reference));
    }

    #[test]
    fn eighth_decimal_difference_shares_bucket() {
        let groups = group_same_coordinates(&[("a", pt(43.2036401, 5.8229851)), ("b", pt(43.2036402, 5.8229852))]);
        assert_eq!(groups[0].bucket, groups[1].bucket);
        assert_eq!(groups[0].multiples, 1);
        assert_eq!(groups.iter().filter(|g| g.reference).count(), 1);
    }

    #[test]
    fn link_window_is_inclusive() {
        let g = [LinkSubject { fake_id: "A", datetime: Some(t(12, 0, 0)) }];
        let n = [
            LinkSubject { fake_id: "A", datetime: Some(t(13, 0, 0)) },
            LinkSubject { fake_id: "A", datetime: Some(t(13, 0, 1)) },
            LinkSubject { fake_id: "B", datetime: Some(t(12, 0, 0)) },
            LinkSubject { fake_id: "A", datetime: None },
        ];
        let c = compute_timeslot_links(&g, &n)[0].unwrap();
        assert_eq!(c.0, [1, 2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn geotagged_without_time() {
        let g = [LinkSubject { fake_id: "A", datetime: None }];
        assert_eq!(compute_timeslot_links(&g, &[]), vec![None]);
    }

    #[test]
    fn device_without_non_geotagged() {
        let g = [LinkSubject { fake_id: "A", datetime: Some(t(1, 0, 0)) }];
        assert_eq!(compute_timeslot_links(&g, &[]), vec![Some(SlotCounts::default())]);
    }

    #[test]
    fn ranking() {
        let ids = ["b", "a", "b", "a", "b", "a", "c", "b", "a", "b"];
        let r = rank_devices(ids.iter().copied());
        assert_eq!(r[0], DeviceRank { fake_id: "b".into(), ordre: 1, color: 0, nb_fake_id: 5 });
        assert_eq!(r[1].fake_id, "a");
        assert_eq!(r[1].ordre, 2);
        assert_eq!(r[2].nb_fake_id, 1);
        // ties by fake id
        let r = rank_devices(["z", "y"].iter().copied());
        assert_eq!(r[0].fake_id, "y");
        assert_eq!(rank_devices(core::iter::once("solo"))[0].ordre, 1);
    }

    #[test]
    fn colour_cycles() {
        let ids: Vec<String> = (0..12).map(|i| alloc::format!("d{i:02}")).collect();
        let r = rank_devices(ids.iter().map(String::as_str));
        assert_eq!(r[10].color, 0);
        assert_eq!(r[11].color, 1);
    }

    #[test]
    fn classify_without_exif() {
        assert_eq!(classify(None), Classification::NonGeotagged { malformed: None });
    }
}
