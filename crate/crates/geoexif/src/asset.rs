//! One scanned image and everything derived from it before correlation.

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::NaiveDateTime;
use geoexif_core::exif::tag_name;
use geoexif_core::{DeviceFingerprint, ExifRecord, GeoPoint, ImageKind, VerificationFinding};

#[derive(Debug, Clone, PartialEq)]
pub struct ImageAsset {
    pub path: PathBuf,
    pub name: String,
    /// Lowercase hex SHA-256 of the file bytes.
    pub content_hash: String,
    pub kind: ImageKind,
    pub exif: Option<ExifRecord>,
    pub fingerprint: DeviceFingerprint,
    pub exif_datetime: Option<NaiveDateTime>,
    pub gps_datetime: Option<NaiveDateTime>,
    pub position: Option<GeoPoint>,
    pub altitude_m: Option<f64>,
    /// Workspace-relative path of the thumbnail.
    pub thumbnail: Option<String>,
    pub address: Option<String>,
    pub findings: Vec<VerificationFinding>,
}

impl ImageAsset {
    pub fn is_geotagged(&self) -> bool {
        self.position.is_some()
    }

    /// Lossy UTF-8 rendering of the path, used for ordering and storage.
    pub fn path_string(&self) -> String {
        self.path.to_string_lossy().into_owned()
    }

    pub fn metadata(&self) -> BTreeMap<String, String> {
        self.exif.as_ref().map(harvest_metadata).unwrap_or_default()
    }
}

/// Every parsed tag as `"<ifd>.<name>"` → display string. Unnamed tags use their hex id.
pub fn harvest_metadata(exif: &ExifRecord) -> BTreeMap<String, String> {
    exif.tags
        .iter()
        .map(|(k, v)| {
            let name = tag_name(k.ifd, k.tag).map_or_else(|| format!("0x{:04X}", k.tag), str::to_owned);
            (format!("{}.{}", k.ifd.as_str(), name), v.to_string())
        })
        .collect()
}
