//! Coordinate normalisation and great-circle geometry.
//!
//! Distances use the spherical law of cosines on a 6371 km sphere, the same
//! expression the zone query has always used, with the `acos` argument
//! clamped to `[-1, 1]`.

use core::fmt;

/// Mean earth radius used by every distance computation.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, PartialEq)]
pub enum GeoError {
    InvalidHemisphere(char),
    /// A hemisphere that does not belong to the requested axis (e.g. `E` for a latitude).
    WrongAxis(Hemisphere),
    NegativeComponent,
    NonFinite,
    LatitudeOutOfRange(f64),
    LongitudeOutOfRange(f64),
    NonPositiveRadius(f64),
}

impl fmt::Display for GeoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeoError::InvalidHemisphere(c) => write!(f, "invalid hemisphere reference {c:?}"),
            GeoError::WrongAxis(h) => write!(f, "hemisphere {} used on the wrong axis", h.as_char()),
            GeoError::NegativeComponent => f.write_str("degrees, minutes and seconds must be non-negative"),
            GeoError::NonFinite => f.write_str("coordinate is not a finite number"),
            GeoError::LatitudeOutOfRange(v) => write!(f, "latitude {v} outside [-90, 90]"),
            GeoError::LongitudeOutOfRange(v) => write!(f, "longitude {v} outside [-180, 180]"),
            GeoError::NonPositiveRadius(r) => write!(f, "zone radius must be > 0 km, got {r}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Hemisphere {
    N,
    S,
    E,
    W,
}

impl Hemisphere {
    pub fn as_char(self) -> char {
        match self {
            Hemisphere::N => 'N',
            Hemisphere::S => 'S',
            Hemisphere::E => 'E',
            Hemisphere::W => 'W',
        }
    }

    /// -1 for south and west, +1 otherwise.
    pub fn multiplier(self) -> f64 {
        match self {
            Hemisphere::S | Hemisphere::W => -1.0,
            Hemisphere::N | Hemisphere::E => 1.0,
        }
    }

    pub fn is_latitude(self) -> bool {
        matches!(self, Hemisphere::N | Hemisphere::S)
    }
}

impl TryFrom<char> for Hemisphere {
    type Error = GeoError;

    fn try_from(c: char) -> Result<Self, Self::Error> {
        match c {
            'N' => Ok(Hemisphere::N),
            'S' => Ok(Hemisphere::S),
            'E' => Ok(Hemisphere::E),
            'W' => Ok(Hemisphere::W),
            other => Err(GeoError::InvalidHemisphere(other)),
        }
    }
}

/// A degree/minute/second angle with its hemisphere reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmsCoordinate {
    pub degrees: f64,
    pub minutes: f64,
    pub seconds: f64,
    pub hemisphere: Hemisphere,
}

impl DmsCoordinate {
    pub fn new(degrees: f64, minutes: f64, seconds: f64, hemisphere: Hemisphere) -> Result<Self, GeoError> {
        if !(degrees.is_finite() && minutes.is_finite() && seconds.is_finite()) {
            return Err(GeoError::NonFinite);
        }
        if degrees < 0.0 || minutes < 0.0 || seconds < 0.0 {
            return Err(GeoError::NegativeComponent);
        }
        Ok(DmsCoordinate { degrees, minutes, seconds, hemisphere })
    }

    /// Like [`DmsCoordinate::new`] but takes the raw reference character.
    pub fn from_parts(degrees: f64, minutes: f64, seconds: f64, hemisphere: char) -> Result<Self, GeoError> {
        Self::new(degrees, minutes, seconds, Hemisphere::try_from(hemisphere)?)
    }

    /// Minutes and seconds both below 60. Non-canonical values still convert.
    pub fn is_canonical(&self) -> bool {
        self.minutes < 60.0 && self.seconds < 60.0
    }

    pub fn to_decimal(&self) -> f64 {
        dms_to_decimal(self)
    }
}

/// Signed decimal degrees: `m * (deg + min/60 + sec/3600)` with `m = -1` for S/W.
pub fn dms_to_decimal(c: &DmsCoordinate) -> f64 {
    c.hemisphere.multiplier() * (c.degrees + c.minutes / 60.0 + c.seconds / 3600.0)
}

/// A position in decimal degrees. Bounds are checked at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeoPoint {
    latitude: f64,
    longitude: f64,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self, GeoError> {
        if !(latitude.is_finite() && longitude.is_finite()) {
            return Err(GeoError::NonFinite);
        }
        if !(-90.0..=90.0).contains(&latitude) {
            return Err(GeoError::LatitudeOutOfRange(latitude));
        }
        if !(-180.0..=180.0).contains(&longitude) {
            return Err(GeoError::LongitudeOutOfRange(longitude));
        }
        Ok(GeoPoint { latitude, longitude })
    }

    /// Build from a latitude and a longitude in DMS form, checking each is on its axis.
    pub fn from_dms(latitude: &DmsCoordinate, longitude: &DmsCoordinate) -> Result<Self, GeoError> {
        if !latitude.hemisphere.is_latitude() {
            return Err(GeoError::WrongAxis(latitude.hemisphere));
        }
        if longitude.hemisphere.is_latitude() {
            return Err(GeoError::WrongAxis(longitude.hemisphere));
        }
        GeoPoint::new(latitude.to_decimal(), longitude.to_decimal())
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }

    /// The same point with both axes rounded to 6 decimal places.
    pub fn rounded6(&self) -> GeoPoint {
        GeoPoint {
            latitude: round_to(self.latitude, 1e6),
            longitude: round_to(self.longitude, 1e6),
        }
    }
}

fn round_to(v: f64, scale: f64) -> f64 {
    let r = libm::round(v * scale) / scale;
    // avoid "-0.000000" in rendered output
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Great-circle distance in km between two points.
///
/// `6371 * acos(cos φa cos φb cos(λb − λa) + sin φa sin φb)`, clamped. Identical
/// points short-circuit to exactly zero since rounding in `cos² + sin²` can
/// otherwise leave a residue of about 0.1 m.
pub fn great_circle_distance_km(a: &GeoPoint, b: &GeoPoint) -> f64 {
    if a == b {
        return 0.0;
    }
    let phi_a = a.latitude.to_radians();
    let phi_b = b.latitude.to_radians();
    let delta_lambda = b.longitude.to_radians() - a.longitude.to_radians();
    let cos_angle = libm::cos(phi_a) * libm::cos(phi_b) * libm::cos(delta_lambda)
        + libm::sin(phi_a) * libm::sin(phi_b);
    EARTH_RADIUS_KM * libm::acos(cos_angle.clamp(-1.0, 1.0))
}

/// Circular search zone.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZoneFilter {
    center: GeoPoint,
    radius_km: f64,
}

impl ZoneFilter {
    pub fn new(center: GeoPoint, radius_km: f64) -> Result<Self, GeoError> {
        if !radius_km.is_finite() {
            return Err(GeoError::NonFinite);
        }
        if radius_km <= 0.0 {
            return Err(GeoError::NonPositiveRadius(radius_km));
        }
        Ok(ZoneFilter { center, radius_km })
    }

    pub fn center(&self) -> GeoPoint {
        self.center
    }

    pub fn radius_km(&self) -> f64 {
        self.radius_km
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        within_zone(p, self)
    }
}

/// Strictly inside: `distance < radius`.
pub fn within_zone(p: &GeoPoint, zone: &ZoneFilter) -> bool {
    great_circle_distance_km(p, &zone.center) < zone.radius_km
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lat: f64, lng: f64) -> GeoPoint {
        GeoPoint::new(lat, lng).unwrap()
    }

    #[test]
    fn dms_reference_values() {
        let lat = DmsCoordinate::from_parts(57.0, 38.0, 56.83, 'N').unwrap();
        let lng = DmsCoordinate::from_parts(10.0, 24.0, 26.79, 'E').unwrap();
        // 57 + 38/60 + 56.83/3600 = 57.649119444...; five-decimal truncation gives 57.64911
        assert!((dms_to_decimal(&lat) - 57.649_119_444_4).abs() <= 1e-9);
        assert_eq!(libm::floor(dms_to_decimal(&lat) * 1e5) / 1e5, 57.64911);
        assert!((dms_to_decimal(&lng) - 10.40744).abs() <= 5e-6);
        let west = DmsCoordinate::from_parts(10.0, 24.0, 26.79, 'W').unwrap();
        assert!((dms_to_decimal(&west) + 10.40744).abs() <= 5e-6);
        let zero = DmsCoordinate::from_parts(0.0, 0.0, 0.0, 'S').unwrap();
        assert_eq!(dms_to_decimal(&zero), 0.0);
    }

    #[test]
    fn invalid_hemisphere_rejected() {
        assert_eq!(
            DmsCoordinate::from_parts(1.0, 2.0, 3.0, 'X'),
            Err(GeoError::InvalidHemisphere('X'))
        );
    }

    #[test]
    fn non_canonical_still_converts() {
        let c = DmsCoordinate::from_parts(10.0, 75.0, 0.0, 'N').unwrap();
        assert!(!c.is_canonical());
        assert!((c.to_decimal() - 11.25).abs() < 1e-12);
    }

    #[test]
    fn axis_checked() {
        let lat = DmsCoordinate::from_parts(1.0, 0.0, 0.0, 'E').unwrap();
        let lng = DmsCoordinate::from_parts(1.0, 0.0, 0.0, 'E').unwrap();
        assert_eq!(GeoPoint::from_dms(&lat, &lng), Err(GeoError::WrongAxis(Hemisphere::E)));
    }

    #[test]
    fn point_bounds() {
        assert!(GeoPoint::new(90.0, 180.0).is_ok());
        assert!(matches!(GeoPoint::new(90.5, 0.0), Err(GeoError::LatitudeOutOfRange(_))));
        assert!(matches!(GeoPoint::new(0.0, -180.1), Err(GeoError::LongitudeOutOfRange(_))));
        assert_eq!(GeoPoint::new(f64::NAN, 0.0), Err(GeoError::NonFinite));
    }

    #[test]
    fn zone_radius_positive() {
        assert!(ZoneFilter::new(pt(0.0, 0.0), 0.0).is_err());
        assert!(ZoneFilter::new(pt(0.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn identical_points_zero() {
        let p = pt(43.203640, 5.822985);
        assert!(great_circle_distance_km(&p, &p).abs() <= 1e-6);
    }

    #[test]
    fn antipodal() {
        let d = great_circle_distance_km(&pt(0.0, 0.0), &pt(0.0, 180.0));
        assert!((d - 20015.09).abs() <= 0.1, "{d}");
    }

    #[test]
    fn center_is_within_zone() {
        let c = pt(43.2, 5.8);
        assert!(within_zone(&c, &ZoneFilter::new(c, 1.0).unwrap()));
    }

    #[test]
    fn rounding_to_six_places() {
        let p = pt(43.20364012345, -5.8229851).rounded6();
        assert_eq!(p.latitude(), 43.203640);
        assert_eq!(p.longitude(), -5.822985);
        assert_eq!(pt(-0.0000001, 0.0).rounded6().latitude().to_bits(), 0.0f64.to_bits());
    }
}
