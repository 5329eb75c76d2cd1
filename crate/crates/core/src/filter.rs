//! Marker filters: zone, device, date range and time slot, combined with AND.

use alloc::collections::BTreeSet;
use alloc::string::String;
use core::fmt;

use chrono::NaiveDateTime;

use crate::correlate::{SlotCounts, SlotHours};
use crate::geo::{within_zone, GeoPoint, ZoneFilter};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterError {
    /// `date_from` later than `date_to`.
    InvertedDateRange,
}

impl fmt::Display for FilterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterError::InvertedDateRange => f.write_str("date_from is after date_to"),
        }
    }
}

/// What a filter looks at on one marker.
#[derive(Debug, Clone, Copy)]
pub struct MarkerView<'a> {
    pub fake_id: &'a str,
    pub position: GeoPoint,
    pub datetime: Option<NaiveDateTime>,
    pub links: &'a SlotCounts,
}

/// Absent clauses match everything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterSpec {
    zone: Option<ZoneFilter>,
    devices: Option<BTreeSet<String>>,
    date_from: Option<NaiveDateTime>,
    date_to: Option<NaiveDateTime>,
    slot: Option<SlotHours>,
}

impl FilterSpec {
    pub fn new(
        zone: Option<ZoneFilter>,
        devices: Option<BTreeSet<String>>,
        date_from: Option<NaiveDateTime>,
        date_to: Option<NaiveDateTime>,
        slot: Option<SlotHours>,
    ) -> Result<Self, FilterError> {
        if let (Some(a), Some(b)) = (date_from, date_to) {
            if a > b {
                return Err(FilterError::InvertedDateRange);
            }
        }
        Ok(FilterSpec { zone, devices, date_from, date_to, slot })
    }

    pub fn all() -> Self {
        FilterSpec::default()
    }

    pub fn with_zone(mut self, zone: ZoneFilter) -> Self {
        self.zone = Some(zone);
        self
    }

    pub fn with_device(mut self, fake_id: impl Into<String>) -> Self {
        self.devices.get_or_insert_with(BTreeSet::new).insert(fake_id.into());
        self
    }

    pub fn with_slot(mut self, slot: SlotHours) -> Self {
        self.slot = Some(slot);
        self
    }

    pub fn with_dates(self, from: Option<NaiveDateTime>, to: Option<NaiveDateTime>) -> Result<Self, FilterError> {
        FilterSpec::new(self.zone, self.devices, from, to, self.slot)
    }

    pub fn zone(&self) -> Option<&ZoneFilter> {
        self.zone.as_ref()
    }

    pub fn devices(&self) -> Option<&BTreeSet<String>> {
        self.devices.as_ref()
    }

    pub fn date_from(&self) -> Option<NaiveDateTime> {
        self.date_from
    }

    pub fn date_to(&self) -> Option<NaiveDateTime> {
        self.date_to
    }

    /// The active link window. As a clause it keeps markers with at least
    /// one linked non-geotagged image inside that window.
    pub fn slot(&self) -> Option<SlotHours> {
        self.slot
    }

    pub fn is_empty(&self) -> bool {
        self == &FilterSpec::default()
    }

    pub fn matches(&self, m: &MarkerView<'_>) -> bool {
        if let Some(zone) = &self.zone {
            if !within_zone(&m.position, zone) {
                return false;
            }
        }
        if let Some(devices) = &self.devices {
            if !devices.contains(m.fake_id) {
                return false;
            }
        }
        if self.date_from.is_some() || self.date_to.is_some() {
            let Some(t) = m.datetime else { return false };
            if self.date_from.is_some_and(|from| t < from) || self.date_to.is_some_and(|to| t > to) {
                return false;
            }
        }
        if let Some(slot) = self.slot {
            if m.links.get(slot) == 0 {
                return false;
            }
        }
        true
    }
}
