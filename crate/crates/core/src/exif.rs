//! EXIF / TIFF metadata parsing from raw bytes.
//!
//! The parser walks IFD0, the Exif and GPS sub-IFDs, the interoperability
//! IFD and IFD1. Every tag is kept with its decoded value; tags of unknown
//! type are kept as opaque bytes. Structural problems (truncated
//! directories, offsets pointing outside the buffer, loops) are recorded as
//! [`ParseWarning`]s and never abort the parse. All reads are bounds-checked
//! against the input slice.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};

use crate::geo::{DmsCoordinate, GeoError, GeoPoint, Hemisphere};
use crate::kind::{detect_image_kind, ImageKind};
use crate::time::{parse_exif_date, parse_exif_datetime};

/// Tag identifiers used by the indexer.
pub mod tag {
    // IFD0
    pub const MAKE: u16 = 0x010F;
    pub const MODEL: u16 = 0x0110;
    pub const DATE_TIME: u16 = 0x0132;
    pub const EXIF_IFD_POINTER: u16 = 0x8769;
    pub const GPS_IFD_POINTER: u16 = 0x8825;
    // Exif IFD
    pub const DATE_TIME_ORIGINAL: u16 = 0x9003;
    pub const CREATE_DATE: u16 = 0x9004;
    pub const MAKER_NOTE: u16 = 0x927C;
    pub const INTEROP_POINTER: u16 = 0xA005;
    pub const OWNER_NAME: u16 = 0xA430;
    pub const SERIAL_NUMBER: u16 = 0xA431;
    pub const LENS_INFO: u16 = 0xA432;
    pub const LENS_MAKE: u16 = 0xA433;
    pub const LENS_MODEL: u16 = 0xA434;
    pub const LENS_SERIAL_NUMBER: u16 = 0xA435;
    // GPS IFD
    pub const GPS_VERSION_ID: u16 = 0x0000;
    pub const GPS_LATITUDE_REF: u16 = 0x0001;
    pub const GPS_LATITUDE: u16 = 0x0002;
    pub const GPS_LONGITUDE_REF: u16 = 0x0003;
    pub const GPS_LONGITUDE: u16 = 0x0004;
    pub const GPS_ALTITUDE_REF: u16 = 0x0005;
    pub const GPS_ALTITUDE: u16 = 0x0006;
    pub const GPS_TIME_STAMP: u16 = 0x0007;
    pub const GPS_DOP: u16 = 0x000B;
    pub const GPS_PROCESSING_METHOD: u16 = 0x001B;
    pub const GPS_DATE_STAMP: u16 = 0x001D;
}

/// Human name for the tags the tool knows about.
pub fn tag_name(ifd: Ifd, id: u16) -> Option<&'static str> {
    use tag::*;
    let name = match (ifd, id) {
        (Ifd::Gps, GPS_VERSION_ID) => "GPSVersionID",
        (Ifd::Gps, GPS_LATITUDE_REF) => "GPSLatitudeRef",
        (Ifd::Gps, GPS_LATITUDE) => "GPSLatitude",
        (Ifd::Gps, GPS_LONGITUDE_REF) => "GPSLongitudeRef",
        (Ifd::Gps, GPS_LONGITUDE) => "GPSLongitude",
        (Ifd::Gps, GPS_ALTITUDE_REF) => "GPSAltitudeRef",
        (Ifd::Gps, GPS_ALTITUDE) => "GPSAltitude",
        (Ifd::Gps, GPS_TIME_STAMP) => "GPSTimeStamp",
        (Ifd::Gps, GPS_DOP) => "GPSDOP",
        (Ifd::Gps, GPS_PROCESSING_METHOD) => "GPSProcessingMethod",
        (Ifd::Gps, GPS_DATE_STAMP) => "GPSDateStamp",
        (Ifd::Gps, _) => return None,
        (_, MAKE) => "Make",
        (_, MODEL) => "Model",
        (_, DATE_TIME) => "DateTime",
        (_, 0x0112) => "Orientation",
        (_, 0x0131) => "Software",
        (_, 0x013B) => "Artist",
        (_, 0x8298) => "Copyright",
        (_, DATE_TIME_ORIGINAL) => "DateTimeOriginal",
        (_, CREATE_DATE) => "CreateDate",
        (_, MAKER_NOTE) => "MakerNote",
        (_, OWNER_NAME) => "OwnerName",
        (_, SERIAL_NUMBER) => "SerialNumber",
        (_, LENS_INFO) => "LensInfo",
        (_, LENS_MAKE) => "LensMake",
        (_, LENS_MODEL) => "LensModel",
        (_, LENS_SERIAL_NUMBER) => "LensSerialNumber",
        _ => return None,
    };
    Some(name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum ByteOrder {
    BigEndian,
    LittleEndian,
}

/// Which directory a tag was read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Ifd {
    Primary,
    Exif,
    Gps,
    Interop,
    Thumbnail,
}

impl Ifd {
    pub fn as_str(self) -> &'static str {
        match self {
            Ifd::Primary => "IFD0",
            Ifd::Exif => "ExifIFD",
            Ifd::Gps => "GPS",
            Ifd::Interop => "InteropIFD",
            Ifd::Thumbnail => "IFD1",
        }
    }
}

/// Unsigned EXIF rational. A zero denominator is representable here and
/// rejected only on conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rational {
    pub numerator: u32,
    pub denominator: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MalformedRational {
    pub numerator: u32,
}

impl fmt::Display for MalformedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed rational {}/0", self.numerator)
    }
}

impl Rational {
    pub const fn new(numerator: u32, denominator: u32) -> Self {
        Rational { numerator, denominator }
    }

    pub fn to_f64(self) -> Result<f64, MalformedRational> {
        rational_to_decimal(self)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// `numerator / denominator` as a float; zero denominators are an error.
pub fn rational_to_decimal(r: Rational) -> Result<f64, MalformedRational> {
    if r.denominator == 0 {
        return Err(MalformedRational { numerator: r.numerator });
    }
    Ok(f64::from(r.numerator) / f64::from(r.denominator))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SRational {
    pub numerator: i32,
    pub denominator: i32,
}

/// A decoded tag value. Precision is kept as stored.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Value {
    Byte(Vec<u8>),
    Ascii(String),
    Short(Vec<u16>),
    Long(Vec<u32>),
    Rational(Vec<Rational>),
    SByte(Vec<i8>),
    Undefined(Vec<u8>),
    SShort(Vec<i16>),
    SLong(Vec<i32>),
    SRational(Vec<SRational>),
    Float(Vec<f32>),
    Double(Vec<f64>),
    /// Entry with a type code outside the TIFF set; only the 4-byte value field is kept.
    Opaque { type_code: u16, count: u32, raw: Vec<u8> },
}

impl Value {
    pub fn type_code(&self) -> u16 {
        match self {
            Value::Byte(_) => 1,
            Value::Ascii(_) => 2,
            Value::Short(_) => 3,
            Value::Long(_) => 4,
            Value::Rational(_) => 5,
            Value::SByte(_) => 6,
            Value::Undefined(_) => 7,
            Value::SShort(_) => 8,
            Value::SLong(_) => 9,
            Value::SRational(_) => 10,
            Value::Float(_) => 11,
            Value::Double(_) => 12,
            Value::Opaque { type_code, .. } => *type_code,
        }
    }

    pub fn as_ascii(&self) -> Option<&str> {
        match self {
            Value::Ascii(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_rationals(&self) -> Option<&[Rational]> {
        match self {
            Value::Rational(r) => Some(r),
            _ => None,
        }
    }

    /// First element as an unsigned integer, for BYTE/SHORT/LONG.
    pub fn first_uint(&self) -> Option<u32> {
        match self {
            Value::Byte(v) => v.first().map(|&b| u32::from(b)),
            Value::Short(v) => v.first().map(|&s| u32::from(s)),
            Value::Long(v) => v.first().copied(),
            _ => None,
        }
    }
}

fn join<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{it}")?;
    }
    Ok(())
}

impl fmt::Display for SRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

fn hex(f: &mut fmt::Formatter<'_>, bytes: &[u8]) -> fmt::Result {
    for b in bytes {
        write!(f, "{b:02x}")?;
    }
    Ok(())
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Byte(v) => join(f, v),
            Value::Ascii(s) => f.write_str(s),
            Value::Short(v) => join(f, v),
            Value::Long(v) => join(f, v),
            Value::Rational(v) => join(f, v),
            Value::SByte(v) => join(f, v),
            Value::Undefined(v) => hex(f, v),
            Value::SShort(v) => join(f, v),
            Value::SLong(v) => join(f, v),
            Value::SRational(v) => join(f, v),
            Value::Float(v) => join(f, v),
            Value::Double(v) => join(f, v),
            Value::Opaque { raw, .. } => hex(f, raw),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TagKey {
    pub ifd: Ifd,
    pub tag: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ParseWarning {
    BadTiffHeader,
    /// The APP1 segment claims more bytes than the file holds.
    TruncatedSegment { declared: usize, available: usize },
    BadDirectoryOffset { ifd: Ifd, offset: u32 },
    DirectoryLoop { ifd: Ifd, offset: u32 },
    TruncatedDirectory { ifd: Ifd, declared: u16, read: u16 },
    ValueOutOfBounds { ifd: Ifd, tag: u16, offset: u32, len: u64 },
    UnknownType { ifd: Ifd, tag: u16, type_code: u16 },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::BadTiffHeader => f.write_str("invalid TIFF header in EXIF segment"),
            ParseWarning::TruncatedSegment { declared, available } => {
                write!(f, "EXIF segment declares {declared} bytes, only {available} present")
            }
            ParseWarning::BadDirectoryOffset { ifd, offset } => {
                write!(f, "{} offset {offset} outside EXIF data", ifd.as_str())
            }
            ParseWarning::DirectoryLoop { ifd, offset } => {
                write!(f, "{} at offset {offset} already visited", ifd.as_str())
            }
            ParseWarning::TruncatedDirectory { ifd, declared, read } => {
                write!(f, "{} declares {declared} entries, only {read} readable", ifd.as_str())
            }
            ParseWarning::ValueOutOfBounds { ifd, tag, offset, len } => write!(
                f,
                "{} tag 0x{tag:04x}: value of {len} bytes at offset {offset} outside EXIF data",
                ifd.as_str()
            ),
            ParseWarning::UnknownType { ifd, tag, type_code } => {
                write!(f, "{} tag 0x{tag:04x}: unknown type {type_code}", ifd.as_str())
            }
        }
    }
}

/// All tags read from one file.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExifRecord {
    pub byte_order: ByteOrder,
    pub tags: BTreeMap<TagKey, Value>,
    pub warnings: Vec<ParseWarning>,
}

impl ExifRecord {
    pub fn new(byte_order: ByteOrder) -> Self {
        ExifRecord { byte_order, tags: BTreeMap::new(), warnings: Vec::new() }
    }

    pub fn get(&self, ifd: Ifd, tag: u16) -> Option<&Value> {
        self.tags.get(&TagKey { ifd, tag })
    }

    pub fn ascii(&self, ifd: Ifd, tag: u16) -> Option<&str> {
        self.get(ifd, tag).and_then(Value::as_ascii)
    }

    /// Look a tag up in IFD0 then the Exif IFD.
    pub fn find(&self, tag: u16) -> Option<&Value> {
        self.get(Ifd::Primary, tag).or_else(|| self.get(Ifd::Exif, tag))
    }

    pub fn has_gps(&self) -> bool {
        self.tags.keys().any(|k| k.ifd == Ifd::Gps)
    }

    /// Capture time, preferring DateTimeOriginal, then CreateDate, then DateTime.
    pub fn capture_datetime(&self) -> Option<NaiveDateTime> {
        [tag::DATE_TIME_ORIGINAL, tag::CREATE_DATE, tag::DATE_TIME]
            .iter()
            .find_map(|&t| self.find(t).and_then(Value::as_ascii).and_then(parse_exif_datetime))
    }

    pub fn gps_date_stamp(&self) -> Option<NaiveDate> {
        self.ascii(Ifd::Gps, tag::GPS_DATE_STAMP).and_then(parse_exif_date)
    }

    pub fn gps_time_stamp(&self) -> Option<NaiveTime> {
        let r = self.get(Ifd::Gps, tag::GPS_TIME_STAMP)?.as_rationals()?;
        if r.len() != 3 {
            return None;
        }
        let h = r[0].to_f64().ok()?;
        let m = r[1].to_f64().ok()?;
        let s = r[2].to_f64().ok()?;
        if !(0.0..24.0).contains(&h) || !(0.0..60.0).contains(&m) || !(0.0..61.0).contains(&s) {
            return None;
        }
        let whole = libm::floor(s);
        let nanos = libm::round((s - whole) * 1e9) as u32;
        NaiveTime::from_hms_nano_opt(h as u32, m as u32, whole as u32, nanos.min(999_999_999))
    }

    /// UTC timestamp combined from GPSDateStamp and GPSTimeStamp.
    pub fn gps_datetime(&self) -> Option<NaiveDateTime> {
        Some(NaiveDateTime::new(self.gps_date_stamp()?, self.gps_time_stamp()?))
    }

    /// GPSProcessingMethod with the 8-byte character code prefix removed.
    pub fn gps_processing_method(&self) -> Option<String> {
        let raw: &[u8] = match self.get(Ifd::Gps, tag::GPS_PROCESSING_METHOD)? {
            Value::Undefined(b) | Value::Byte(b) => b,
            Value::Ascii(s) => s.as_bytes(),
            _ => return None,
        };
        let body = if raw.len() >= 8
            && (raw.starts_with(b"ASCII\0\0\0")
                || raw.starts_with(b"UNICODE\0")
                || raw.starts_with(b"JIS\0\0\0\0\0")
                || raw.starts_with(&[0u8; 8]))
        {
            &raw[8..]
        } else {
            raw
        };
        let text: String = String::from_utf8_lossy(body).chars().filter(|c| *c != '\0').collect();
        let text = text.trim();
        if text.is_empty() {
            None
        } else {
            Some(String::from(text))
        }
    }

    pub fn gps_dop(&self) -> Option<f64> {
        let r = self.get(Ifd::Gps, tag::GPS_DOP)?.as_rationals()?;
        r.first()?.to_f64().ok()
    }

    /// Signed altitude in metres (GPSAltitudeRef 1 means below sea level).
    pub fn gps_altitude(&self) -> Option<f64> {
        let r = self.get(Ifd::Gps, tag::GPS_ALTITUDE)?.as_rationals()?;
        let v = r.first()?.to_f64().ok()?;
        let below = self
            .get(Ifd::Gps, tag::GPS_ALTITUDE_REF)
            .and_then(Value::first_uint)
            .map(|b| b == 1)
            .unwrap_or(false);
        Some(if below { -v } else { v })
    }

    /// The position-bearing part of the GPS directory, if latitude and
    /// longitude with their references are all present.
    pub fn gps_ifd(&self) -> Result<Option<GpsIfd>, GpsError> {
        let (Some(lat_ref), Some(lat), Some(lng_ref), Some(lng)) = (
            self.get(Ifd::Gps, tag::GPS_LATITUDE_REF),
            self.get(Ifd::Gps, tag::GPS_LATITUDE),
            self.get(Ifd::Gps, tag::GPS_LONGITUDE_REF),
            self.get(Ifd::Gps, tag::GPS_LONGITUDE),
        ) else {
            return Ok(None);
        };
        let latitude_ref = reference_char(lat_ref, true)?;
        let longitude_ref = reference_char(lng_ref, false)?;
        let altitude = self
            .get(Ifd::Gps, tag::GPS_ALTITUDE)
            .and_then(Value::as_rationals)
            .and_then(|r| r.first().copied())
            .map(|r| {
                let below = self
                    .get(Ifd::Gps, tag::GPS_ALTITUDE_REF)
                    .and_then(Value::first_uint)
                    .map(|b| b == 1)
                    .unwrap_or(false);
                (r, below)
            });
        Ok(Some(GpsIfd {
            latitude_ref,
            latitude: triplet(lat, tag::GPS_LATITUDE)?,
            longitude_ref,
            longitude: triplet(lng, tag::GPS_LONGITUDE)?,
            altitude,
            processing_method: self.gps_processing_method(),
            dop: self.gps_dop(),
            date_stamp: self.gps_date_stamp(),
            time_stamp: self.gps_time_stamp(),
        }))
    }
}

fn reference_char(v: &Value, latitude: bool) -> Result<char, GpsError> {
    let c = match v {
        Value::Ascii(s) => s.trim().chars().next(),
        Value::Byte(b) | Value::Undefined(b) => b.first().map(|&b| char::from(b)),
        _ => None,
    }
    .ok_or(GpsError::MissingReference)?;
    let ok = if latitude { matches!(c, 'N' | 'S') } else { matches!(c, 'E' | 'W') };
    if ok {
        Ok(c)
    } else {
        Err(GpsError::InvalidReference(c))
    }
}

fn triplet(v: &Value, tag: u16) -> Result<[Rational; 3], GpsError> {
    match v.as_rationals() {
        Some(&[d, m, s]) => Ok([d, m, s]),
        _ => Err(GpsError::NotATriplet { tag }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GpsError {
    MissingReference,
    InvalidReference(char),
    NotATriplet { tag: u16 },
    Rational(MalformedRational),
    Geo(GeoError),
}

impl fmt::Display for GpsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GpsError::MissingReference => f.write_str("GPS hemisphere reference is empty"),
            GpsError::InvalidReference(c) => write!(f, "GPS hemisphere reference {c:?} is invalid"),
            GpsError::NotATriplet { tag } => write!(f, "GPS tag 0x{tag:04x} is not three rationals"),
            GpsError::Rational(e) => write!(f, "GPS coordinate: {e}"),
            GpsError::Geo(e) => write!(f, "GPS coordinate: {e}"),
        }
    }
}

impl From<MalformedRational> for GpsError {
    fn from(e: MalformedRational) -> Self {
        GpsError::Rational(e)
    }
}

impl From<GeoError> for GpsError {
    fn from(e: GeoError) -> Self {
        GpsError::Geo(e)
    }
}

/// Typed view of the GPS sub-IFD.
#[derive(Debug, Clone, PartialEq)]
pub struct GpsIfd {
    pub latitude_ref: char,
    pub latitude: [Rational; 3],
    pub longitude_ref: char,
    pub longitude: [Rational; 3],
    /// Altitude and whether GPSAltitudeRef marks it below sea level.
    pub altitude: Option<(Rational, bool)>,
    pub processing_method: Option<String>,
    pub dop: Option<f64>,
    pub date_stamp: Option<NaiveDate>,
    pub time_stamp: Option<NaiveTime>,
}

impl GpsIfd {
    fn dms(parts: &[Rational; 3], reference: char) -> Result<DmsCoordinate, GpsError> {
        let [d, m, s] = *parts;
        Ok(DmsCoordinate::new(
            d.to_f64()?,
            m.to_f64()?,
            s.to_f64()?,
            Hemisphere::try_from(reference)?,
        )?)
    }

    pub fn latitude_dms(&self) -> Result<DmsCoordinate, GpsError> {
        Self::dms(&self.latitude, self.latitude_ref)
    }

    pub fn longitude_dms(&self) -> Result<DmsCoordinate, GpsError> {
        Self::dms(&self.longitude, self.longitude_ref)
    }

    pub fn position(&self) -> Result<GeoPoint, GpsError> {
        Ok(GeoPoint::from_dms(&self.latitude_dms()?, &self.longitude_dms()?)?)
    }
}

// ---------------------------------------------------------------------------
// parsing

/// Parse EXIF from a JPEG (APP1 "Exif\0\0") or a bare TIFF. Returns `None`
/// when the bytes carry no EXIF structure at all.
pub fn parse_exif(bytes: &[u8]) -> Option<ExifRecord> {
    match detect_image_kind(bytes) {
        ImageKind::Jpeg => {
            let (tiff, truncation) = find_jpeg_exif(bytes)?;
            let mut rec = parse_tiff(tiff);
            if let Some(w) = truncation {
                rec.warnings.insert(0, w);
            }
            Some(rec)
        }
        ImageKind::Tiff => Some(parse_tiff(bytes)),
        _ => None,
    }
}

const EXIF_HEADER: &[u8] = b"Exif\0\0";

fn find_jpeg_exif(bytes: &[u8]) -> Option<(&[u8], Option<ParseWarning>)> {
    let mut pos = 2;
    loop {
        if *bytes.get(pos)? != 0xFF {
            return None;
        }
        while bytes.get(pos) == Some(&0xFF) {
            pos += 1;
        }
        let marker = *bytes.get(pos)?;
        pos += 1;
        match marker {
            0xD9 | 0xDA => return None,
            0x01 | 0xD0..=0xD7 => continue,
            _ => {}
        }
        let hi = *bytes.get(pos)?;
        let lo = *bytes.get(pos + 1)?;
        let len = usize::from(u16::from_be_bytes([hi, lo]));
        if len < 2 {
            return None;
        }
        let start = pos + 2;
        let declared_end = pos + len;
        let end = declared_end.min(bytes.len());
        let payload = bytes.get(start..end)?;
        if marker == 0xE1 && payload.starts_with(EXIF_HEADER) {
            let warning = (declared_end > bytes.len()).then(|| ParseWarning::TruncatedSegment {
                declared: len - 2,
                available: payload.len(),
            });
            return Some((&payload[EXIF_HEADER.len()..], warning));
        }
        pos = declared_end;
    }
}

struct Reader<'a> {
    data: &'a [u8],
    order: ByteOrder,
}

impl<'a> Reader<'a> {
    fn bytes(&self, offset: usize, len: usize) -> Option<&'a [u8]> {
        self.data.get(offset..offset.checked_add(len)?)
    }

    fn u16_at(&self, offset: usize) -> Option<u16> {
        let b: [u8; 2] = self.bytes(offset, 2)?.try_into().ok()?;
        Some(self.u16_from(b))
    }

    fn u32_at(&self, offset: usize) -> Option<u32> {
        let b: [u8; 4] = self.bytes(offset, 4)?.try_into().ok()?;
        Some(self.u32_from(b))
    }

    fn u16_from(&self, b: [u8; 2]) -> u16 {
        match self.order {
            ByteOrder::BigEndian => u16::from_be_bytes(b),
            ByteOrder::LittleEndian => u16::from_le_bytes(b),
        }
    }

    fn u32_from(&self, b: [u8; 4]) -> u32 {
        match self.order {
            ByteOrder::BigEndian => u32::from_be_bytes(b),
            ByteOrder::LittleEndian => u32::from_le_bytes(b),
        }
    }

    fn u64_from(&self, b: [u8; 8]) -> u64 {
        match self.order {
            ByteOrder::BigEndian => u64::from_be_bytes(b),
            ByteOrder::LittleEndian => u64::from_le_bytes(b),
        }
    }

    fn decode(&self, type_code: u16, raw: &[u8]) -> Value {
        fn chunks<const N: usize, T>(raw: &[u8], f: impl Fn([u8; N]) -> T) -> Vec<T> {
            raw.chunks_exact(N).map(|c| f(c.try_into().expect("chunk size"))).collect()
        }
        match type_code {
            1 => Value::Byte(raw.to_vec()),
            2 => {
                let text = raw.split(|&b| b == 0).next().unwrap_or(&[]);
                Value::Ascii(String::from_utf8_lossy(text).into_owned())
            }
            3 => Value::Short(chunks(raw, |b| self.u16_from(b))),
            4 => Value::Long(chunks(raw, |b| self.u32_from(b))),
            5 => Value::Rational(chunks(raw, |b: [u8; 8]| Rational {
                numerator: self.u32_from([b[0], b[1], b[2], b[3]]),
                denominator: self.u32_from([b[4], b[5], b[6], b[7]]),
            })),
            6 => Value::SByte(raw.iter().map(|&b| b as i8).collect()),
            8 => Value::SShort(chunks(raw, |b| self.u16_from(b) as i16)),
            9 => Value::SLong(chunks(raw, |b| self.u32_from(b) as i32)),
            10 => Value::SRational(chunks(raw, |b: [u8; 8]| SRational {
                numerator: self.u32_from([b[0], b[1], b[2], b[3]]) as i32,
                denominator: self.u32_from([b[4], b[5], b[6], b[7]]) as i32,
            })),
            11 => Value::Float(chunks(raw, |b| f32::from_bits(self.u32_from(b)))),
            12 => Value::Double(chunks(raw, |b| f64::from_bits(self.u64_from(b)))),
            // 7 and anything the caller already mapped to UNDEFINED
            _ => Value::Undefined(raw.to_vec()),
        }
    }
}

fn type_size(type_code: u16) -> Option<u64> {
    match type_code {
        1 | 2 | 6 | 7 => Some(1),
        3 | 8 => Some(2),
        4 | 9 | 11 => Some(4),
        5 | 10 | 12 => Some(8),
        _ => None,
    }
}

/// Parse a TIFF structure starting at its byte-order mark.
pub fn parse_tiff(data: &[u8]) -> ExifRecord {
    let order = match data.get(..2) {
        Some(b"II") => ByteOrder::LittleEndian,
        Some(b"MM") => ByteOrder::BigEndian,
        _ => {
            let mut rec = ExifRecord::new(ByteOrder::BigEndian);
            rec.warnings.push(ParseWarning::BadTiffHeader);
            return rec;
        }
    };
    let reader = Reader { data, order };
    let mut rec = ExifRecord::new(order);
    let (Some(42), Some(ifd0)) = (reader.u16_at(2), reader.u32_at(4)) else {
        rec.warnings.push(ParseWarning::BadTiffHeader);
        return rec;
    };

    let mut visited = BTreeSet::new();
    let mut queue: Vec<(Ifd, u32)> = Vec::new();
    let next = read_ifd(&reader, Ifd::Primary, ifd0, &mut rec, &mut visited, &mut queue);
    if let Some(n) = next.filter(|&n| n != 0) {
        read_ifd(&reader, Ifd::Thumbnail, n, &mut rec, &mut visited, &mut queue);
    }
    let mut i = 0;
    while i < queue.len() {
        let (ifd, off) = queue[i];
        read_ifd(&reader, ifd, off, &mut rec, &mut visited, &mut queue);
        i += 1;
    }
    rec
}

/// Reads one directory. Sub-IFD pointers are pushed onto `queue`; the
/// offset of the next directory in the chain is returned.
fn read_ifd(
    r: &Reader<'_>,
    ifd: Ifd,
    offset: u32,
    rec: &mut ExifRecord,
    visited: &mut BTreeSet<u32>,
    queue: &mut Vec<(Ifd, u32)>,
) -> Option<u32> {
    if !visited.insert(offset) {
        rec.warnings.push(ParseWarning::DirectoryLoop { ifd, offset });
        return None;
    }
    let base = offset as usize;
    let Some(count) = r.u16_at(base) else {
        rec.warnings.push(ParseWarning::BadDirectoryOffset { ifd, offset });
        return None;
    };
    for i in 0..count {
        let entry_at = base + 2 + usize::from(i) * 12;
        let Some(entry) = r.bytes(entry_at, 12) else {
            rec.warnings.push(ParseWarning::TruncatedDirectory { ifd, declared: count, read: i });
            return None;
        };
        let tag_id = r.u16_from([entry[0], entry[1]]);
        let type_code = r.u16_from([entry[2], entry[3]]);
        let count = r.u32_from([entry[4], entry[5], entry[6], entry[7]]);
        let field = &entry[8..12];

        let sub = match (ifd, tag_id) {
            (Ifd::Primary, tag::EXIF_IFD_POINTER) => Some(Ifd::Exif),
            (Ifd::Primary, tag::GPS_IFD_POINTER) => Some(Ifd::Gps),
            (Ifd::Exif, tag::INTEROP_POINTER) => Some(Ifd::Interop),
            _ => None,
        };
        if let Some(sub) = sub {
            let target = if type_code == 3 {
                u32::from(r.u16_from([field[0], field[1]]))
            } else {
                r.u32_from([field[0], field[1], field[2], field[3]])
            };
            queue.push((sub, target));
            continue;
        }

        let key = TagKey { ifd, tag: tag_id };
        let Some(size) = type_size(type_code) else {
            rec.warnings.push(ParseWarning::UnknownType { ifd, tag: tag_id, type_code });
            rec.tags.insert(key, Value::Opaque { type_code, count, raw: field.to_vec() });
            continue;
        };
        let len = size * u64::from(count);
        let raw = if len <= 4 {
            &field[..len as usize]
        } else {
            let value_offset = r.u32_from([field[0], field[1], field[2], field[3]]);
            match usize::try_from(len).ok().and_then(|l| r.bytes(value_offset as usize, l)) {
                Some(raw) => raw,
                None => {
                    rec.warnings.push(ParseWarning::ValueOutOfBounds {
                        ifd,
                        tag: tag_id,
                        offset: value_offset,
                        len,
                    });
                    continue;
                }
            }
        };
        rec.tags.insert(key, r.decode(type_code, raw));
    }
    r.u32_at(base + 2 + usize::from(count) * 12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Big-endian TIFF whose IFD0 only points at a GPS directory holding the
    /// five entries dumped in the reference hex listing.
    fn reference_gps_tiff() -> Vec<u8> {
        let mut t = Vec::new();
        t.extend_from_slice(b"MM\0\x2A\0\0\0\x08");
        // IFD0 at 8: one entry, GPS pointer -> 26
        t.extend_from_slice(&[0, 1]);
        t.extend_from_slice(&[0x88, 0x25, 0, 4, 0, 0, 0, 1, 0, 0, 0, 26]);
        t.extend_from_slice(&[0, 0, 0, 0]);
        assert_eq!(t.len(), 26);
        // GPS IFD: 5 entries, values area follows at 26 + 2 + 60 + 4 = 92
        t.extend_from_slice(&[0, 5]);
        t.extend_from_slice(&[0, 0, 0, 1, 0, 0, 0, 4, 2, 2, 0, 0]);
        t.extend_from_slice(&[0, 1, 0, 2, 0, 0, 0, 2, b'N', 0, 0, 0]);
        t.extend_from_slice(&[0, 2, 0, 5, 0, 0, 0, 3, 0, 0, 0, 92]);
        t.extend_from_slice(&[0, 3, 0, 2, 0, 0, 0, 2, b'W', 0, 0, 0]);
        t.extend_from_slice(&[0, 4, 0, 5, 0, 0, 0, 3, 0, 0, 0, 116]);
        t.extend_from_slice(&[0, 0, 0, 0]);
        assert_eq!(t.len(), 92);
        t.extend_from_slice(&[0, 0, 0, 0x39, 0, 0, 0, 1, 0, 0, 0, 0x26, 0, 0, 0, 1]);
        t.extend_from_slice(&[0, 0, 0x16, 0x33, 0, 0, 0, 0x64]);
        t.extend_from_slice(&[0, 0, 0, 0x0a, 0, 0, 0, 1, 0, 0, 0, 0x18, 0, 0, 0, 1]);
        t.extend_from_slice(&[0, 0, 0x0a, 0x77, 0, 0, 0, 0x64]);
        t
    }

    fn wrap_jpeg(tiff: &[u8]) -> Vec<u8> {
        let mut j = vec![0xFF, 0xD8, 0xFF, 0xE1];
        let len = (tiff.len() + 2 + EXIF_HEADER.len()) as u16;
        j.extend_from_slice(&len.to_be_bytes());
        j.extend_from_slice(EXIF_HEADER);
        j.extend_from_slice(tiff);
        j.extend_from_slice(&[0xFF, 0xD9]);
        j
    }

    #[test]
    fn reference_gps_directory() {
        let rec = parse_exif(&wrap_jpeg(&reference_gps_tiff())).unwrap();
        assert!(rec.warnings.is_empty(), "{:?}", rec.warnings);
        assert_eq!(rec.byte_order, ByteOrder::BigEndian);
        assert!(rec.has_gps());
        assert_eq!(rec.tags.len(), 5);
        let gps = rec.gps_ifd().unwrap().unwrap();
        assert_eq!(gps.latitude_ref, 'N');
        assert_eq!(gps.latitude, [Rational::new(57, 1), Rational::new(38, 1), Rational::new(5683, 100)]);
        assert_eq!(gps.longitude_ref, 'W');
        assert_eq!(gps.longitude, [Rational::new(10, 1), Rational::new(24, 1), Rational::new(2679, 100)]);
        assert_eq!(rec.get(Ifd::Gps, tag::GPS_VERSION_ID), Some(&Value::Byte(vec![2, 2, 0, 0])));
        let p = gps.position().unwrap();
        assert!((p.latitude() - 57.649_119_444_4).abs() < 1e-9);
        assert!((p.longitude() + 10.40744).abs() < 5e-6);
    }

    #[test]
    fn bare_tiff_parses_too() {
        let rec = parse_exif(&reference_gps_tiff()).unwrap();
        assert_eq!(rec.tags.len(), 5);
    }

    #[test]
    fn rational_conversion() {
        assert_eq!(rational_to_decimal(Rational::new(5683, 100)), Ok(56.83));
        assert_eq!(rational_to_decimal(Rational::new(2679, 100)), Ok(26.79));
        assert_eq!(rational_to_decimal(Rational::new(0, 1)), Ok(0.0));
        assert_eq!(rational_to_decimal(Rational::new(3, 0)), Err(MalformedRational { numerator: 3 }));
    }

    #[test]
    fn jpeg_without_app1_is_absent() {
        let j = [0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x04, 0x4A, 0x46, 0xFF, 0xDA, 0, 2, 0xFF, 0xD9];
        assert_eq!(parse_exif(&j), None);
        assert_eq!(parse_exif(b"plain text"), None);
        assert_eq!(parse_exif(&[]), None);
    }

    #[test]
    fn non_exif_app1_skipped() {
        let mut j = vec![0xFF, 0xD8, 0xFF, 0xE1, 0, 8];
        j.extend_from_slice(b"http:\0");
        let exif = wrap_jpeg(&reference_gps_tiff());
        j.extend_from_slice(&exif[2..]);
        let rec = parse_exif(&j).unwrap();
        assert_eq!(rec.tags.len(), 5);
    }

    #[test]
    fn truncated_directory_keeps_complete_entries() {
        let mut t = Vec::new();
        t.extend_from_slice(b"II\x2A\0\x08\0\0\0");
        t.extend_from_slice(&10u16.to_le_bytes());
        for i in 0..10u16 {
            t.extend_from_slice(&(0x1000 + i).to_le_bytes());
            t.extend_from_slice(&3u16.to_le_bytes());
            t.extend_from_slice(&1u32.to_le_bytes());
            t.extend_from_slice(&[i as u8, 0, 0, 0]);
        }
        t.truncate(8 + 2 + 3 * 12 + 5);
        let rec = parse_tiff(&t);
        assert_eq!(rec.tags.len(), 3);
        assert_eq!(
            rec.warnings,
            vec![ParseWarning::TruncatedDirectory { ifd: Ifd::Primary, declared: 10, read: 3 }]
        );
        assert_eq!(rec.get(Ifd::Primary, 0x1002), Some(&Value::Short(vec![2])));
    }

    #[test]
    fn out_of_bounds_value_is_warning() {
        let mut t = reference_gps_tiff();
        // point GPSLatitude's value far away
        t[26 + 2 + 2 * 12 + 8..26 + 2 + 2 * 12 + 12].copy_from_slice(&[0, 0, 0xFF, 0]);
        let rec = parse_tiff(&t);
        assert!(rec.get(Ifd::Gps, tag::GPS_LATITUDE).is_none());
        assert!(matches!(rec.warnings[0], ParseWarning::ValueOutOfBounds { tag: 2, .. }));
        assert_eq!(rec.gps_ifd(), Ok(None));
    }

    #[test]
    fn directory_loop_detected() {
        let mut t = reference_gps_tiff();
        // GPS pointer back at IFD0
        t[8 + 2 + 11] = 8;
        let rec = parse_tiff(&t);
        assert!(rec.warnings.iter().any(|w| matches!(w, ParseWarning::DirectoryLoop { .. })));
    }

    #[test]
    fn bad_header() {
        let j = wrap_jpeg(b"XX\0\0");
        let rec = parse_exif(&j).unwrap();
        assert_eq!(rec.warnings, vec![ParseWarning::BadTiffHeader]);
        assert!(rec.tags.is_empty());
    }

    #[test]
    fn invalid_reference_char() {
        let mut t = reference_gps_tiff();
        t[26 + 2 + 12 + 8] = b'Q';
        assert_eq!(parse_tiff(&t).gps_ifd(), Err(GpsError::InvalidReference('Q')));
    }

    #[test]
    fn truncation_never_panics() {
        let j = wrap_jpeg(&reference_gps_tiff());
        for cut in 0..=j.len() {
            let _ = parse_exif(&j[..cut]);
        }
    }

    #[test]
    fn processing_method_prefix_stripped() {
        let mut rec = ExifRecord::new(ByteOrder::LittleEndian);
        rec.tags.insert(
            TagKey { ifd: Ifd::Gps, tag: tag::GPS_PROCESSING_METHOD },
            Value::Undefined(b"ASCII\0\0\0WLAN".to_vec()),
        );
        assert_eq!(rec.gps_processing_method().as_deref(), Some("WLAN"));
    }
}
