//! EXIF date/time string parsing.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};

fn digits(s: &[u8]) -> Option<u32> {
    if s.is_empty() || !s.iter().all(u8::is_ascii_digit) {
        return None;
    }
    Some(s.iter().fold(0u32, |acc, d| acc * 10 + u32::from(d - b'0')))
}

/// `YYYY:MM:DD`, also accepting `-` as separator.
pub fn parse_exif_date(s: &str) -> Option<NaiveDate> {
    let b = s.trim().as_bytes();
    if b.len() < 10 || !matches!(b[4], b':' | b'-') || b[7] != b[4] {
        return None;
    }
    NaiveDate::from_ymd_opt(digits(&b[0..4])? as i32, digits(&b[5..7])?, digits(&b[8..10])?)
}

fn parse_hms(b: &[u8]) -> Option<NaiveTime> {
    if b.len() < 8 || b[2] != b':' || b[5] != b':' {
        return None;
    }
    NaiveTime::from_hms_opt(digits(&b[0..2])?, digits(&b[3..5])?, digits(&b[6..8])?)
}

/// `YYYY:MM:DD HH:MM:SS` as written by cameras. Also accepts ISO-style
/// `YYYY-MM-DD HH:MM:SS` / `YYYY-MM-DDTHH:MM:SS`. Blank or zeroed values
/// (`0000:00:00 00:00:00`) yield `None`.
pub fn parse_exif_datetime(s: &str) -> Option<NaiveDateTime> {
    let t = s.trim().trim_end_matches('\0');
    let b = t.as_bytes();
    if b.len() < 19 || !matches!(b[10], b' ' | b'T') {
        return None;
    }
    let date = parse_exif_date(&t[..10])?;
    let time = parse_hms(&b[11..19])?;
    Some(NaiveDateTime::new(date, time))
}

/// Same as [`parse_exif_datetime`] but a date alone is taken as midnight.
pub fn parse_datetime_or_date(s: &str) -> Option<NaiveDateTime> {
    let t = s.trim();
    if t.len() == 10 {
        return parse_exif_date(t).map(|d| d.and_time(NaiveTime::MIN));
    }
    parse_exif_datetime(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn camera_format() {
        let dt = parse_exif_datetime("2013:08:11 16:03:41").unwrap();
        assert_eq!(dt, NaiveDate::from_ymd_opt(2013, 8, 11).unwrap().and_hms_opt(16, 3, 41).unwrap());
        assert_eq!(parse_exif_datetime("2013-08-11T16:03:41"), Some(dt));
        assert_eq!(parse_exif_datetime("2013:08:11 16:03:41\0"), Some(dt));
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(parse_exif_datetime("0000:00:00 00:00:00"), None);
        assert_eq!(parse_exif_datetime("    :  :     :  :  "), None);
        assert_eq!(parse_exif_datetime("2013:13:11 16:03:41"), None);
        assert_eq!(parse_exif_datetime("2013:08:11"), None);
        assert_eq!(parse_exif_date("2013:08-11"), None);
    }

    #[test]
    fn date_only() {
        assert_eq!(
            parse_datetime_or_date("2013-08-11"),
            NaiveDate::from_ymd_opt(2013, 8, 11).unwrap().and_hms_opt(0, 0, 0)
        );
    }
}
