//! Content-based image type detection.

/// Image type as seen from the leading bytes of a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum ImageKind {
    Jpeg,
    Tiff,
    /// A recognised image container that does not carry EXIF we parse (PNG, GIF).
    OtherImage,
    NotImage,
}

impl ImageKind {
    /// Kinds that the indexer builds assets for.
    pub fn carries_exif(self) -> bool {
        matches!(self, ImageKind::Jpeg | ImageKind::Tiff)
    }

    pub fn mime_type(self) -> &'static str {
        match self {
            ImageKind::Jpeg => "image/jpeg",
            ImageKind::Tiff => "image/tiff",
            ImageKind::OtherImage | ImageKind::NotImage => "application/octet-stream",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ImageKind::Jpeg => "JPEG",
            ImageKind::Tiff => "TIFF",
            ImageKind::OtherImage => "OTHER_IMAGE",
            ImageKind::NotImage => "NOT_IMAGE",
        }
    }
}

/// Number of leading bytes that [`detect_image_kind`] looks at.
pub const SIGNATURE_LEN: usize = 8;

const PNG: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

/// Classify a file from its first bytes. The file name never matters.
pub fn detect_image_kind(bytes: &[u8]) -> ImageKind {
    let head = &bytes[..bytes.len().min(SIGNATURE_LEN)];
    match head {
        [0xFF, 0xD8, 0xFF, ..] => ImageKind::Jpeg,
        [b'I', b'I', 0x2A, 0x00, ..] | [b'M', b'M', 0x00, 0x2A, ..] => ImageKind::Tiff,
        h if h.len() == PNG.len() && h == PNG => ImageKind::OtherImage,
        [b'G', b'I', b'F', b'8', b'7' | b'9', b'a', ..] => ImageKind::OtherImage,
        _ => ImageKind::NotImage,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jpeg_soi_followed_by_marker() {
        assert_eq!(detect_image_kind(&[0xFF, 0xD8, 0xFF, 0xE1, 0, 0]), ImageKind::Jpeg);
        // SOI alone is not enough
        assert_eq!(detect_image_kind(&[0xFF, 0xD8]), ImageKind::NotImage);
    }

    #[test]
    fn empty_and_short_inputs() {
        assert_eq!(detect_image_kind(&[]), ImageKind::NotImage);
        assert_eq!(detect_image_kind(&[0xFF]), ImageKind::NotImage);
        assert_eq!(detect_image_kind(b"II*"), ImageKind::NotImage);
    }

    #[test]
    fn tiff_both_byte_orders() {
        assert_eq!(detect_image_kind(b"II*\0\x08\0\0\0"), ImageKind::Tiff);
        assert_eq!(detect_image_kind(b"MM\0*\0\0\0\x08"), ImageKind::Tiff);
        assert_eq!(detect_image_kind(b"MM*\0"), ImageKind::NotImage);
    }

    #[test]
    fn other_images() {
        assert_eq!(detect_image_kind(&PNG), ImageKind::OtherImage);
        assert_eq!(detect_image_kind(b"GIF89a\x01\x00"), ImageKind::OtherImage);
        assert_eq!(detect_image_kind(b"hello world"), ImageKind::NotImage);
    }

    #[test]
    fn only_first_eight_bytes_matter() {
        let mut a = [0xFFu8, 0xD8, 0xFF, 0xE0, 1, 2, 3, 4, 9, 9, 9].to_vec();
        let k = detect_image_kind(&a);
        a[8..].fill(0);
        a.push(7);
        assert_eq!(detect_image_kind(&a), k);
    }
}
