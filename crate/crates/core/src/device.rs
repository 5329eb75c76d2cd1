//! Device fingerprints ("fake ids") built from EXIF identity tags.
//!
//! Most cameras record only make and model. Anything else that identifies a
//! body or lens is appended so two devices of the same model can still be
//! told apart when they carry serial numbers or owner names.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::exif::{tag, ExifRecord, Value};

/// Identifier shared by every image that carries no identity tags.
pub const UNKNOWN_DEVICE: &str = "UNKNOWN-DEVICE";

const EXTRA_SEPARATOR: &str = " | ";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeviceFingerprint {
    pub make: String,
    pub model: String,
    pub optional_infos: String,
    pub fake_id: String,
}

/// Raw identity fields, in append order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeviceIdentity {
    pub make: Option<String>,
    pub model: Option<String>,
    pub serial_number: Option<String>,
    pub owner_name: Option<String>,
    pub lens_info: Option<String>,
    pub lens_make: Option<String>,
    pub lens_model: Option<String>,
    pub lens_serial_number: Option<String>,
}

impl DeviceIdentity {
    pub fn from_exif(exif: &ExifRecord) -> Self {
        let text = |t: u16| -> Option<String> {
            exif.find(t).map(|v| match v {
                Value::Ascii(s) => s.clone(),
                other => other.to_string(),
            })
        };
        DeviceIdentity {
            make: text(tag::MAKE),
            model: text(tag::MODEL),
            serial_number: text(tag::SERIAL_NUMBER),
            owner_name: text(tag::OWNER_NAME),
            lens_info: text(tag::LENS_INFO),
            lens_make: text(tag::LENS_MAKE),
            lens_model: text(tag::LENS_MODEL),
            lens_serial_number: text(tag::LENS_SERIAL_NUMBER),
        }
    }

    pub fn fingerprint(&self) -> DeviceFingerprint {
        let make = self.make.as_deref().map(str::trim).unwrap_or_default().to_string();
        let model = self.model.as_deref().map(str::trim).unwrap_or_default().to_string();
        let extras: Vec<&Option<String>> = alloc::vec![
            &self.serial_number,
            &self.owner_name,
            &self.lens_info,
            &self.lens_make,
            &self.lens_model,
            &self.lens_serial_number,
        ];
        let mut optional_infos = String::new();
        for extra in extras.into_iter().flatten() {
            optional_infos.push_str(EXTRA_SEPARATOR);
            optional_infos.push_str(extra);
        }
        let mut fake_id = String::with_capacity(make.len() + model.len() + optional_infos.len());
        fake_id.push_str(&make);
        fake_id.push_str(&model);
        fake_id.push_str(&optional_infos);
        if fake_id.is_empty() {
            fake_id.push_str(UNKNOWN_DEVICE);
        }
        DeviceFingerprint { make, model, optional_infos, fake_id }
    }
}

/// Fingerprint for one image. Pass `None` when the file had no EXIF.
pub fn build_fingerprint(exif: Option<&ExifRecord>) -> DeviceFingerprint {
    exif.map(DeviceIdentity::from_exif).unwrap_or_default().fingerprint()
}

impl DeviceFingerprint {
    /// "Make Model" for display, or the fake id when both are empty.
    pub fn label(&self) -> String {
        match (self.make.is_empty(), self.model.is_empty()) {
            (true, true) => self.fake_id.clone(),
            (false, true) => self.make.clone(),
            (true, false) => self.model.clone(),
            (false, false) => alloc::format!("{} {}", self.make, self.model),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exif::{ByteOrder, Ifd, TagKey};

    fn ident(make: &str, model: &str) -> DeviceIdentity {
        DeviceIdentity { make: Some(make.into()), model: Some(model.into()), ..Default::default() }
    }

    #[test]
    fn make_and_model_only() {
        assert_eq!(ident("SONY", "DSC-HX100V").fingerprint().fake_id, "SONYDSC-HX100V");
    }

    #[test]
    fn no_identity_tags() {
        let fp = build_fingerprint(None);
        assert_eq!(fp.fake_id, UNKNOWN_DEVICE);
        assert_eq!(build_fingerprint(Some(&ExifRecord::new(ByteOrder::BigEndian))).fake_id, UNKNOWN_DEVICE);
        // whitespace-only counts as nothing
        assert_eq!(ident("  ", "\t").fingerprint().fake_id, UNKNOWN_DEVICE);
    }

    #[test]
    fn serial_number_appended() {
        let mut id = ident("Canon", "EOS 5D");
        id.serial_number = Some("123".into());
        let fp = id.fingerprint();
        assert_eq!(fp.fake_id, "CanonEOS 5D | 123");
        assert_eq!(fp.optional_infos, " | 123");
    }

    #[test]
    fn fixed_extra_order() {
        let id = DeviceIdentity {
            make: Some("A".into()),
            lens_serial_number: Some("6".into()),
            lens_model: Some("5".into()),
            lens_make: Some("4".into()),
            lens_info: Some("3".into()),
            owner_name: Some("2".into()),
            serial_number: Some("1".into()),
            ..Default::default()
        };
        assert_eq!(id.fingerprint().fake_id, "A | 1 | 2 | 3 | 4 | 5 | 6");
    }

    #[test]
    fn make_without_model() {
        let id = DeviceIdentity { make: Some(" NIKON ".into()), ..Default::default() };
        assert_eq!(id.fingerprint().fake_id, "NIKON");
    }

    #[test]
    fn trimming_is_idempotent() {
        assert_eq!(ident("  SONY ", "DSC-HX100V\n").fingerprint(), ident("SONY", "DSC-HX100V").fingerprint());
    }

    #[test]
    fn from_exif_reads_both_directories() {
        let mut rec = ExifRecord::new(ByteOrder::LittleEndian);
        rec.tags.insert(TagKey { ifd: Ifd::Primary, tag: tag::MAKE }, Value::Ascii("SONY ".into()));
        rec.tags.insert(TagKey { ifd: Ifd::Primary, tag: tag::MODEL }, Value::Ascii("DSC-HX100V".into()));
        rec.tags.insert(TagKey { ifd: Ifd::Exif, tag: tag::SERIAL_NUMBER }, Value::Ascii("77".into()));
        assert_eq!(build_fingerprint(Some(&rec)).fake_id, "SONYDSC-HX100V | 77");
        assert_eq!(build_fingerprint(Some(&rec)).label(), "SONY DSC-HX100V");
    }
}
