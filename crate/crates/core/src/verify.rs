//! Consistency checks on an image's own metadata.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use chrono::{NaiveDateTime, TimeDelta};

use crate::exif::ExifRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum FindingCode {
    TimestampMismatch,
    LowGpsAccuracy,
    NonGpsPositioning,
    AltitudeImplausible,
    MalformedMetadata,
    /// Geotagged image without a capture time; it cannot be linked.
    MissingTimestamp,
    /// Elevation service had no answer, altitude not checked.
    AltitudeUnchecked,
    ThumbnailUnavailable,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingCode::TimestampMismatch => "TIMESTAMP_MISMATCH",
            FindingCode::LowGpsAccuracy => "LOW_GPS_ACCURACY",
            FindingCode::NonGpsPositioning => "NON_GPS_POSITIONING",
            FindingCode::AltitudeImplausible => "ALTITUDE_IMPLAUSIBLE",
            FindingCode::MalformedMetadata => "MALFORMED_METADATA",
            FindingCode::MissingTimestamp => "MISSING_TIMESTAMP",
            FindingCode::AltitudeUnchecked => "ALTITUDE_UNCHECKED",
            FindingCode::ThumbnailUnavailable => "THUMBNAIL_UNAVAILABLE",
        }
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Severity {
    Info,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationFinding {
    pub code: FindingCode,
    pub severity: Severity,
    /// Includes the raw values that triggered the finding.
    pub detail: String,
}

impl VerificationFinding {
    pub fn info(code: FindingCode, detail: impl Into<String>) -> Self {
        VerificationFinding { code, severity: Severity::Info, detail: detail.into() }
    }

    pub fn warning(code: FindingCode, detail: impl Into<String>) -> Self {
        VerificationFinding { code, severity: Severity::Warning, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub dop_threshold: f64,
    pub altitude_tolerance_m: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { dop_threshold: 5.0, altitude_tolerance_m: 200.0 }
    }
}

/// Terrain elevation at the image position, as far as it is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elevation {
    /// Altitude checking is switched off.
    NotRequested,
    /// Requested but no provider answer.
    Unavailable,
    Known(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationInput {
    pub exif_datetime: Option<NaiveDateTime>,
    pub gps_datetime: Option<NaiveDateTime>,
    pub processing_method: Option<String>,
    pub dop: Option<f64>,
    pub altitude_m: Option<f64>,
    pub elevation: Elevation,
}

impl VerificationInput {
    pub fn from_exif(exif: &ExifRecord, elevation: Elevation) -> Self {
        VerificationInput {
            exif_datetime: exif.capture_datetime(),
            gps_datetime: exif.gps_datetime(),
            processing_method: exif.gps_processing_method(),
            dop: exif.gps_dop(),
            altitude_m: exif.gps_altitude(),
            elevation,
        }
    }
}

const NON_GPS_METHODS: [&str; 3] = ["CELLID", "WLAN", "MANUAL"];

/// Largest accepted gap between the camera clock and the GPS clock.
pub fn max_clock_gap() -> TimeDelta {
    TimeDelta::hours(24)
}

pub fn verify(input: &VerificationInput, config: &VerifyConfig) -> Vec<VerificationFinding> {
    let mut out = Vec::new();
    let method = input.processing_method.as_deref().map(str::trim);
    let method_upper = method.map(|m| m.to_ascii_uppercase());

    if let Some(m) = method_upper.as_deref() {
        if NON_GPS_METHODS.contains(&m) {
            out.push(VerificationFinding::info(
                FindingCode::NonGpsPositioning,
                format!("GPSProcessingMethod = {:?}", method.unwrap_or_default()),
            ));
        }
        if m == "GPS" {
            if let Some(dop) = input.dop.filter(|d| *d > config.dop_threshold) {
                out.push(VerificationFinding::warning(
                    FindingCode::LowGpsAccuracy,
                    format!("GPSDOP = {dop} exceeds threshold {}", config.dop_threshold),
                ));
            }
        }
    }

    if let (Some(local), Some(gps)) = (input.exif_datetime, input.gps_datetime) {
        let gap = (local - gps).abs();
        if gap > max_clock_gap() {
            out.push(VerificationFinding::warning(
                FindingCode::TimestampMismatch,
                format!(
                    "EXIF time {local} (device clock, zone unknown) vs GPS time {gps} UTC: {} h {} min apart, \
                     compared as raw wall-clock values",
                    gap.num_hours(),
                    gap.num_minutes() % 60
                ),
            ));
        }
    }

    if let Some(alt) = input.altitude_m {
        match input.elevation {
            Elevation::NotRequested => {}
            Elevation::Unavailable => out.push(VerificationFinding::info(
                FindingCode::AltitudeUnchecked,
                format!("GPSAltitude = {alt} m; no terrain elevation available"),
            )),
            Elevation::Known(ground) => {
                if (alt - ground).abs() > config.altitude_tolerance_m {
                    out.push(VerificationFinding::warning(
                        FindingCode::AltitudeImplausible,
                        format!(
                            "GPSAltitude = {alt} m, terrain elevation = {ground} m, tolerance {} m",
                            config.altitude_tolerance_m
                        ),
                    ));
                }
            }
        }
    }
    out
}
