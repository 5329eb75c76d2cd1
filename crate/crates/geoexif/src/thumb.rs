//! Scaled JPEG copies of evidence images, written under the workspace.

use std::io::Cursor;

use image::imageops::FilterType;
use image::ImageFormat;

pub const DEFAULT_MAX_PX: u32 = 256;

/// Longest side at most `max_px`, aspect preserved, never enlarged.
pub fn thumbnail_dims(width: u32, height: u32, max_px: u32) -> (u32, u32) {
    let longest = width.max(height);
    if longest <= max_px || longest == 0 {
        return (width, height);
    }
    let scale = f64::from(max_px) / f64::from(longest);
    let fit = |x: u32| ((f64::from(x) * scale).round() as u32).clamp(1, max_px);
    (fit(width), fit(height))
}

/// Decode `bytes` and re-encode a reduced copy as JPEG.
pub fn make_thumbnail(bytes: &[u8], max_px: u32) -> Result<(Vec<u8>, (u32, u32)), image::ImageError> {
    let img = image::load_from_memory(bytes)?;
    let (w, h) = thumbnail_dims(img.width(), img.height(), max_px);
    let small = if (w, h) == (img.width(), img.height()) { img } else { img.resize_exact(w, h, FilterType::Triangle) };
    let mut out = Cursor::new(Vec::new());
    small.to_rgb8().write_to(&mut out, ImageFormat::Jpeg)?;
    Ok((out.into_inner(), (w, h)))
}
