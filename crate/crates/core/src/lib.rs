//! Pure building blocks for geotag forensics.
//!
//! Everything here works on byte slices and plain values: image type
//! detection, EXIF/TIFF parsing, DMS conversion and great-circle distance,
//! device fingerprints, same-coordinate grouping, time-slot links between
//! geotagged and non-geotagged images, metadata consistency checks and
//! marker filters. No IO happens in this crate; it builds without `std`.
#![no_std]

extern crate alloc;

pub mod correlate;
pub mod device;
pub mod exif;
pub mod filter;
pub mod geo;
pub mod kind;
pub mod time;
pub mod verify;

pub use correlate::{
    classify, compute_timeslot_links, group_same_coordinates, rank_devices, BucketKey, Classification,
    CoordinateGroup, DeviceRank, LinkSubject, SlotCounts, SlotHours, SLOT_HOURS,
};
pub use device::{build_fingerprint, DeviceFingerprint, DeviceIdentity, UNKNOWN_DEVICE};
pub use exif::{parse_exif, rational_to_decimal, ExifRecord, GpsIfd, Ifd, Rational, Value};
pub use filter::{FilterSpec, MarkerView};
pub use geo::{dms_to_decimal, great_circle_distance_km, within_zone, DmsCoordinate, GeoPoint, ZoneFilter};
pub use kind::{detect_image_kind, ImageKind};
pub use verify::{verify, FindingCode, Severity, VerificationFinding, VerifyConfig};
