//! Synthetic evidence corpora with a manifest of expected scan results.
//!
//! A [`FixtureSpec`] lists hand-placed images plus an optional seeded random
//! population. [`generate`] writes the files under `out/corpus` and the
//! expectations to `out/manifest.json`. The manifest is computed here by brute
//! force, independently of the scanner.

pub mod writer;

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime, TimeDelta, Timelike};
use geoexif_core::exif::{tag, ByteOrder, Ifd, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use writer::{app1_segment, splice_app1, ExifWriter};

pub const CORPUS_DIR: &str = "corpus";
pub const MANIFEST_FILE: &str = "manifest.json";
const SLOTS: [i64; 7] = [1, 2, 3, 4, 5, 12, 24];
const PRESETS: [&str; 6] = ["fig6", "verify", "same-location", "small", "mixed500", "case-study"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Container {
    #[default]
    Jpeg,
    Tiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corruption {
    /// GPSLatitude seconds with a zero denominator.
    ZeroDenominator,
    /// Valid EXIF followed by an undecodable pixel stream.
    Pixels,
    /// IFD0 declares 10 entries but the APP1 payload only holds 3.
    TruncatedIfd,
    /// Plain JPEG without any APP1 segment.
    NoExif,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GpsSpec {
    pub lat: f64,
    pub lng: f64,
    #[serde(default)]
    pub altitude: Option<f64>,
    #[serde(default)]
    pub method: Option<String>,
    #[serde(default)]
    pub dop: Option<f64>,
    #[serde(default)]
    pub datetime: Option<NaiveDateTime>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImageSpec {
    /// Path relative to the corpus root, `/`-separated.
    pub file: String,
    #[serde(default)]
    pub make: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub serial: Option<String>,
    #[serde(default)]
    pub owner: Option<String>,
    #[serde(default)]
    pub lens_model: Option<String>,
    #[serde(default)]
    pub datetime: Option<NaiveDateTime>,
    #[serde(default)]
    pub gps: Option<GpsSpec>,
    #[serde(default)]
    pub big_endian: bool,
    #[serde(default)]
    pub container: Container,
    #[serde(default)]
    pub corruption: Option<Corruption>,
    #[serde(default)]
    pub size: Option<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomCorpus {
    pub count: usize,
    pub geotagged: usize,
    pub devices: usize,
    pub start: NaiveDateTime,
    pub span_hours: u32,
    #[serde(default)]
    pub shared_spots: usize,
    #[serde(default)]
    pub undated: usize,
    #[serde(default = "default_dir")]
    pub dir: String,
}

fn default_dir() -> String {
    "random".into()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FixtureSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub images: Vec<ImageSpec>,
    #[serde(default)]
    pub random: Option<RandomCorpus>,
    #[serde(default)]
    pub text_files: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestMarker {
    pub file: String,
    pub fake_id: String,
    pub lat: f64,
    pub lng: f64,
    pub datetime: Option<NaiveDateTime>,
    /// Counts for ±1, 2, 3, 4, 5, 12, 24 h; absent when the marker has no timestamp.
    pub slots: Option<[u32; 7]>,
    pub bucket_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files_scanned: u64,
    pub images_found: u64,
    pub geotagged_count: u64,
    pub devices: BTreeMap<String, u32>,
    pub markers: Vec<ManifestMarker>,
    pub non_geotagged: Vec<String>,
    /// Files sharing a rounded coordinate, one sorted list per bucket.
    pub buckets: Vec<Vec<String>>,
}

impl Manifest {
    pub fn load(path: &Path) -> io::Result<Manifest> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(io::Error::other)
    }

    pub fn marker(&self, file: &str) -> Option<&ManifestMarker> {
        self.markers.iter().find(|m| m.file == file)
    }
}

pub fn preset_names() -> &'static [&'static str] {
    &PRESETS
}

fn dt(y: i32, mo: u32, d: u32, h: u32, mi: u32, s: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(y, mo, d).unwrap().and_hms_opt(h, mi, s).unwrap()
}

fn device(file: &str, make: &str, model: &str) -> ImageSpec {
    ImageSpec { file: file.into(), make: Some(make.into()), model: Some(model.into()), ..Default::default() }
}

fn at(mut img: ImageSpec, when: NaiveDateTime) -> ImageSpec {
    img.datetime = Some(when);
    img
}

fn located(mut img: ImageSpec, lat: f64, lng: f64) -> ImageSpec {
    img.gps = Some(GpsSpec { lat, lng, ..Default::default() });
    img
}

impl FixtureSpec {
    /// Resolve a preset name or parse `spec` as a JSON document / JSON file path.
    pub fn resolve(spec: &str) -> io::Result<FixtureSpec> {
        if let Some(p) = Self::preset(spec) {
            return Ok(p);
        }
        let text = if spec.trim_start().starts_with('{') { spec.to_owned() } else { fs::read_to_string(spec)? };
        serde_json::from_str(&text).map_err(io::Error::other)
    }

    pub fn preset(name: &str) -> Option<FixtureSpec> {
        Some(match name {
            "fig6" => fig6(),
            "verify" => verify(),
            "same-location" => same_location(),
            "small" => FixtureSpec {
                seed: 20,
                random: Some(RandomCorpus {
                    count: 20,
                    geotagged: 12,
                    devices: 3,
                    start: dt(2015, 6, 1, 8, 0, 0),
                    span_hours: 36,
                    shared_spots: 1,
                    undated: 0,
                    dir: default_dir(),
                }),
                text_files: 5,
                ..Default::default()
            },
            "mixed500" => FixtureSpec {
                seed: 500,
                random: Some(RandomCorpus {
                    count: 500,
                    geotagged: 200,
                    devices: 8,
                    start: dt(2016, 3, 10, 0, 0, 0),
                    span_hours: 72,
                    shared_spots: 5,
                    undated: 10,
                    dir: default_dir(),
                }),
                text_files: 3,
                ..Default::default()
            },
            "case-study" => case_study(),
            _ => return None,
        })
    }
}

/// One SONY DSC-HX100V shooting session: 25 untagged frames around four geotagged ones,
/// plus a small second device.
fn fig6() -> FixtureSpec {
    let sony = |n: u32| device(&format!("DCIM/100MSDCF/DSC{n:05}.JPG"), "SONY", "DSC-HX100V");
    let day = |h, m, s| dt(2013, 8, 11, h, m, s);
    let mut times = Vec::new();
    times.extend((0..11).map(|i| day(15, 50, 0) + TimeDelta::minutes(2 * i)));
    times.extend([day(14, 5, 0), day(14, 6, 0), day(17, 30, 0), day(17, 31, 0)]);
    times.extend((0..10).map(|i| day(18, 30, 0) + TimeDelta::minutes(i)));
    let mut images: Vec<ImageSpec> = times.into_iter().enumerate().map(|(i, t)| at(sony(4462 + i as u32), t)).collect();
    let tagged = [
        (day(16, 3, 41), 43.203640, 5.822985),
        (day(16, 7, 17), 43.203777, 5.823039),
        (day(16, 8, 12), 43.203777, 5.823008),
        (day(16, 9, 1), 43.203838, 5.823083),
    ];
    for (i, (t, lat, lng)) in tagged.into_iter().enumerate() {
        images.push(located(at(sony(4487 + i as u32), t), lat, lng));
    }
    let canon = |n| device(&format!("DCIM/CANON/IMG_{n:04}.JPG"), "Canon", "Canon EOS 600D");
    images.push(located(at(canon(1), dt(2013, 8, 12, 10, 0, 0)), 48.856600, 2.352200));
    images.push(at(canon(2), dt(2013, 8, 12, 10, 30, 0)));
    images.push(at(canon(3), dt(2013, 8, 12, 20, 0, 0)));
    FixtureSpec { images, ..Default::default() }
}

fn verify() -> FixtureSpec {
    let when = dt(2014, 3, 1, 10, 0, 0);
    let gps = |lat, method: &str, dop, gps_time| GpsSpec {
        lat,
        lng: 7.25,
        altitude: Some(120.0),
        method: Some(method.into()),
        dop: Some(dop),
        datetime: Some(gps_time),
    };
    let cam = |file: &str, g: Option<GpsSpec>| {
        let mut img = at(device(file, "PENTAX", "K-5"), when);
        img.gps = g;
        img
    };
    let mut images = vec![
        cam("clean.jpg", Some(gps(43.70, "GPS", 1.0, when))),
        cam("clock_skew.jpg", Some(gps(43.71, "GPS", 1.0, when + TimeDelta::hours(25)))),
        cam("wlan.jpg", Some(gps(43.72, "WLAN", 1.0, when))),
        cam("low_dop.jpg", Some(gps(43.73, "GPS", 9.9, when))),
        cam("zero_den.jpg", Some(gps(43.74, "GPS", 1.0, when))),
        cam("corrupt_pixels.jpg", Some(gps(43.75, "GPS", 1.0, when))),
        cam("truncated_ifd.jpg", None),
        cam("no_exif.jpg", None),
        cam("scan.tif", Some(gps(43.76, "GPS", 1.0, when))),
    ];
    images[4].corruption = Some(Corruption::ZeroDenominator);
    images[5].corruption = Some(Corruption::Pixels);
    images[6].corruption = Some(Corruption::TruncatedIfd);
    images[7].corruption = Some(Corruption::NoExif);
    images[8].container = Container::Tiff;
    images[8].big_endian = true;
    FixtureSpec { images, text_files: 1, ..Default::default() }
}

fn same_location() -> FixtureSpec {
    let when = dt(2012, 7, 14, 12, 0, 0);
    let mut images: Vec<ImageSpec> = ["loc_a", "loc_b", "loc_c", "loc_d", "loc_e", "loc_f"]
        .iter()
        .enumerate()
        .map(|(i, n)| {
            // jitter below the 6th decimal still lands in one bucket
            let jitter = i as f64 * 1e-8;
            located(at(device(&format!("{n}.jpg"), "Apple", "iPhone 4S"), when + TimeDelta::minutes(i as i64)), 48.858370 + jitter, 2.294481 - jitter)
        })
        .collect();
    images.push(located(at(device("other_1.jpg", "Apple", "iPhone 4S"), when), 48.853000, 2.349900));
    images.push(located(at(device("other_2.jpg", "NIKON", "NIKON D300"), when), 48.860600, 2.337600));
    FixtureSpec { images, ..Default::default() }
}

/// A suspect's phone with geotagged shots in Los Angeles and an untagged shot of a car
/// half an hour later; unrelated devices elsewhere.
fn case_study() -> FixtureSpec {
    let phone = |f: &str| device(&format!("suspect/{f}"), "Apple", "iPhone 5");
    let day = |h, m| dt(2014, 2, 10, h, m, 0);
    let images = vec![
        located(at(phone("IMG_2000.JPG"), day(13, 0)), 34.052235, -118.243683),
        at(phone("IMG_2001.JPG"), day(13, 30)),
        located(at(phone("IMG_2002.JPG"), day(18, 0)), 34.101558, -118.340652),
        located(at(phone("IMG_1990.JPG"), dt(2014, 1, 20, 9, 0, 0)), 34.052000, -118.244000),
        at(phone("IMG_2003.JPG"), day(23, 45)),
        located(at(device("holiday/DSC_0001.JPG", "NIKON", "NIKON D300"), day(13, 10)), 40.712776, -74.005974),
        at(device("holiday/DSC_0002.JPG", "NIKON", "NIKON D300"), day(13, 20)),
        located(at(device("holiday/P1000.JPG", "Panasonic", "DMC-TZ7"), day(12, 0)), 34.050000, -118.250000),
    ];
    FixtureSpec { images, text_files: 2, ..Default::default() }
}

/// Relative path, fake id and capture time as the generator intends them to be read back.
struct Expected {
    file: String,
    image: bool,
    fake_id: String,
    datetime: Option<NaiveDateTime>,
    position: Option<(f64, f64)>,
}

fn expected_fake_id(img: &ImageSpec) -> String {
    if matches!(img.corruption, Some(Corruption::TruncatedIfd | Corruption::NoExif)) {
        return "UNKNOWN-DEVICE".into();
    }
    let t = |s: &Option<String>| s.as_deref().map(str::trim).unwrap_or("").to_owned();
    let mut id = t(&img.make) + &t(&img.model);
    for extra in [&img.serial, &img.owner, &img.lens_model] {
        if let Some(e) = extra.as_deref().map(str::trim).filter(|e| !e.is_empty()) {
            id.push_str(" | ");
            id.push_str(e);
        }
    }
    if id.is_empty() {
        "UNKNOWN-DEVICE".into()
    } else {
        id
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// (degrees, minutes, seconds × 10⁴) of |x|, already rounded to 6 decimals.
fn to_dms(x: f64) -> (u32, u32, u32) {
    let micro = (round6(x).abs() * 1e6).round() as u64;
    let deg = (micro / 1_000_000) as u32;
    let rem = (micro % 1_000_000) as f64 / 1e6;
    let mut min = (rem * 60.0).floor() as u32;
    let mut sec = ((rem * 60.0 - f64::from(min)) * 60.0 * 1e4).round() as u32;
    if sec >= 600_000 {
        sec -= 600_000;
        min += 1;
    }
    (deg, min, sec)
}

fn exif_for(img: &ImageSpec) -> ExifWriter {
    let order = if img.big_endian { ByteOrder::BigEndian } else { ByteOrder::LittleEndian };
    let mut w = ExifWriter::new(order);
    if let Some(m) = &img.make {
        w.ascii(Ifd::Primary, tag::MAKE, m);
    }
    if let Some(m) = &img.model {
        w.ascii(Ifd::Primary, tag::MODEL, m);
    }
    if let Some(t) = img.datetime {
        let s = t.format("%Y:%m:%d %H:%M:%S").to_string();
        w.ascii(Ifd::Primary, tag::DATE_TIME, &s);
        w.ascii(Ifd::Exif, tag::DATE_TIME_ORIGINAL, &s);
    }
    if let Some(s) = &img.serial {
        w.ascii(Ifd::Exif, tag::SERIAL_NUMBER, s);
    }
    if let Some(s) = &img.owner {
        w.ascii(Ifd::Exif, tag::OWNER_NAME, s);
    }
    if let Some(s) = &img.lens_model {
        w.ascii(Ifd::Exif, tag::LENS_MODEL, s);
    }
    if let Some(g) = &img.gps {
        w.set(Ifd::Gps, tag::GPS_VERSION_ID, Value::Byte(vec![2, 2, 0, 0]));
        let (d, m, s) = to_dms(g.lat);
        let lat_sec_den = if img.corruption == Some(Corruption::ZeroDenominator) { 0 } else { 10_000 };
        w.ascii(Ifd::Gps, tag::GPS_LATITUDE_REF, if g.lat < 0.0 { "S" } else { "N" })
            .rationals(Ifd::Gps, tag::GPS_LATITUDE, &[(d, 1), (m, 1), (s, lat_sec_den)]);
        let (d, m, s) = to_dms(g.lng);
        w.ascii(Ifd::Gps, tag::GPS_LONGITUDE_REF, if g.lng < 0.0 { "W" } else { "E" })
            .rationals(Ifd::Gps, tag::GPS_LONGITUDE, &[(d, 1), (m, 1), (s, 10_000)]);
        if let Some(a) = g.altitude {
            w.set(Ifd::Gps, tag::GPS_ALTITUDE_REF, Value::Byte(vec![u8::from(a < 0.0)]))
                .rationals(Ifd::Gps, tag::GPS_ALTITUDE, &[((a.abs() * 100.0).round() as u32, 100)]);
        }
        if let Some(m) = &g.method {
            let mut raw = b"ASCII\0\0\0".to_vec();
            raw.extend_from_slice(m.as_bytes());
            w.set(Ifd::Gps, tag::GPS_PROCESSING_METHOD, Value::Undefined(raw));
        }
        if let Some(dop) = g.dop {
            w.rationals(Ifd::Gps, tag::GPS_DOP, &[((dop * 100.0).round() as u32, 100)]);
        }
        if let Some(t) = g.datetime {
            w.ascii(Ifd::Gps, tag::GPS_DATE_STAMP, &t.format("%Y:%m:%d").to_string()).rationals(
                Ifd::Gps,
                tag::GPS_TIME_STAMP,
                &[(t.hour(), 1), (t.minute(), 1), (t.second(), 1)],
            );
        }
    }
    w
}

/// Baseline JPEG of a flat colour.
pub fn plain_jpeg(width: u32, height: u32, rgb: [u8; 3]) -> Vec<u8> {
    let pixels: Vec<u8> = (0..width * height).flat_map(|_| rgb).collect();
    let mut buf = Vec::new();
    image::codecs::jpeg::JpegEncoder::new_with_quality(&mut buf, 80)
        .encode(&pixels, width, height, image::ExtendedColorType::Rgb8)
        .expect("in-memory jpeg encoding");
    buf
}

fn truncated_ifd_tiff() -> Vec<u8> {
    let mut w = ExifWriter::new(ByteOrder::LittleEndian);
    for t in 0..10u16 {
        w.set(Ifd::Primary, 0x0100 + t, Value::Short(vec![t]));
    }
    let full = w.to_tiff();
    // header + count + 3 entries
    full[..8 + 2 + 3 * 12].to_vec()
}

/// Encode one image spec into file bytes.
pub fn render(img: &ImageSpec, rgb: [u8; 3]) -> Vec<u8> {
    let (w, h) = img.size.unwrap_or((16, 12));
    if img.container == Container::Tiff {
        return exif_for(img).to_tiff();
    }
    let jpeg = plain_jpeg(w, h, rgb);
    match img.corruption {
        Some(Corruption::NoExif) => jpeg,
        Some(Corruption::TruncatedIfd) => splice_app1(&jpeg, &app1_segment(&truncated_ifd_tiff())),
        Some(Corruption::Pixels) => {
            let mut out = vec![0xFF, 0xD8];
            out.extend(exif_for(img).to_app1());
            // frame header with an impossible length, then garbage
            out.extend_from_slice(&[0xFF, 0xC0, 0x00, 0x03, 0x08, 0xDE, 0xAD, 0xBE, 0xEF, 0xFF, 0xD9]);
            out
        }
        _ => splice_app1(&jpeg, &exif_for(img).to_app1()),
    }
}

fn random_images(spec: &RandomCorpus, rng: &mut ChaCha8Rng) -> Vec<ImageSpec> {
    const MAKES: [&str; 6] = ["Canon", "NIKON", "SONY", "Apple", "samsung", "FUJIFILM"];
    let devices: Vec<(Option<String>, Option<String>, Option<String>)> = (0..spec.devices.max(1))
        .map(|k| {
            if spec.devices > 2 && k == spec.devices - 1 {
                (None, None, None)
            } else {
                let serial = (k % 2 == 1).then(|| format!("SN{:06}", 1000 + k * 37));
                (Some(MAKES[k % MAKES.len()].to_owned()), Some(format!("Model {}", k + 1)), serial)
            }
        })
        .collect();
    let spots: Vec<(f64, f64)> = (0..spec.shared_spots)
        .map(|_| (round6(rng.random_range(43.0..43.5)), round6(rng.random_range(5.5..6.0))))
        .collect();

    let mut order: Vec<usize> = (0..spec.count).collect();
    order.shuffle(rng);
    let tagged: Vec<bool> = {
        let mut v = vec![false; spec.count];
        order.iter().take(spec.geotagged.min(spec.count)).for_each(|&i| v[i] = true);
        v
    };
    order.shuffle(rng);
    let undated: Vec<bool> = {
        let mut v = vec![false; spec.count];
        order.iter().take(spec.undated.min(spec.count)).for_each(|&i| v[i] = true);
        v
    };

    (0..spec.count)
        .map(|i| {
            let u: f64 = rng.random();
            let k = ((u * u) * devices.len() as f64) as usize;
            let (make, model, serial) = devices[k.min(devices.len() - 1)].clone();
            let secs = rng.random_range(0..i64::from(spec.span_hours) * 3600);
            let gps = tagged[i].then(|| {
                let (lat, lng) = if !spots.is_empty() && rng.random_bool(0.2) {
                    spots[rng.random_range(0..spots.len())]
                } else {
                    (round6(rng.random_range(43.0..43.5)), round6(rng.random_range(5.5..6.0)))
                };
                GpsSpec { lat, lng, ..Default::default() }
            });
            ImageSpec {
                file: format!("{}/d{}/IMG_{:05}.JPG", spec.dir, i % 4, i),
                make,
                model,
                serial,
                datetime: (!undated[i]).then(|| spec.start + TimeDelta::seconds(secs)),
                gps,
                big_endian: rng.random_bool(0.5),
                size: Some((8, 8)),
                ..Default::default()
            }
        })
        .collect()
}

fn expectation(img: &ImageSpec) -> Expected {
    let exif_lost = matches!(img.corruption, Some(Corruption::TruncatedIfd | Corruption::NoExif));
    let geotagged = !exif_lost && img.corruption != Some(Corruption::ZeroDenominator);
    Expected {
        file: img.file.clone(),
        image: true,
        fake_id: expected_fake_id(img),
        datetime: if exif_lost { None } else { img.datetime },
        position: img.gps.as_ref().filter(|_| geotagged).map(|g| (round6(g.lat), round6(g.lng))),
    }
}

fn build_manifest(expected: &[Expected]) -> Manifest {
    let images: Vec<&Expected> = expected.iter().filter(|e| e.image).collect();
    let mut devices = BTreeMap::new();
    for e in &images {
        *devices.entry(e.fake_id.clone()).or_insert(0u32) += 1;
    }
    let key = |p: (f64, f64)| ((p.0 * 1e6).round() as i64, (p.1 * 1e6).round() as i64);
    let mut buckets: BTreeMap<(i64, i64), Vec<String>> = BTreeMap::new();
    for e in &images {
        if let Some(p) = e.position {
            buckets.entry(key(p)).or_default().push(e.file.clone());
        }
    }
    let untagged: Vec<&&Expected> = images.iter().filter(|e| e.position.is_none()).collect();
    let mut markers: Vec<ManifestMarker> = images
        .iter()
        .filter_map(|e| {
            let p = e.position?;
            let slots = e.datetime.map(|t| {
                let mut counts = [0u32; 7];
                for (k, h) in SLOTS.iter().enumerate() {
                    for n in &untagged {
                        if n.fake_id != e.fake_id {
                            continue;
                        }
                        if let Some(u) = n.datetime {
                            if (u - t).num_seconds().abs() <= h * 3600 {
                                counts[k] += 1;
                            }
                        }
                    }
                }
                counts
            });
            Some(ManifestMarker {
                file: e.file.clone(),
                fake_id: e.fake_id.clone(),
                lat: p.0,
                lng: p.1,
                datetime: e.datetime,
                slots,
                bucket_size: buckets[&key(p)].len(),
            })
        })
        .collect();
    markers.sort_by(|a, b| a.file.cmp(&b.file));
    let mut buckets: Vec<Vec<String>> = buckets.into_values().map(|mut v| {
        v.sort();
        v
    }).collect();
    buckets.sort();
    let mut non_geotagged: Vec<String> = untagged.iter().map(|e| e.file.clone()).collect();
    non_geotagged.sort();
    Manifest {
        files_scanned: expected.len() as u64,
        images_found: images.len() as u64,
        geotagged_count: markers.len() as u64,
        devices,
        markers,
        non_geotagged,
        buckets,
    }
}

/// Write the corpus under `out/corpus` and the manifest to `out/manifest.json`.
pub fn generate(spec: &FixtureSpec, out: &Path) -> io::Result<Manifest> {
    let root = out.join(CORPUS_DIR);
    fs::create_dir_all(&root)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut images = spec.images.clone();
    if let Some(r) = &spec.random {
        images.extend(random_images(r, &mut rng));
    }
    let mut expected = Vec::new();
    for img in &images {
        let rgb = [rng.random(), rng.random(), rng.random()];
        write_file(&root, &img.file, &render(img, rgb))?;
        expected.push(expectation(img));
    }
    for i in 0..spec.text_files {
        let file = format!("notes/notes_{i}.txt");
        write_file(&root, &file, format!("case note {i}\n").as_bytes())?;
        expected.push(Expected { file, image: false, fake_id: String::new(), datetime: None, position: None });
    }
    let manifest = build_manifest(&expected);
    let json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    fs::write(out.join(MANIFEST_FILE), json)?;
    Ok(manifest)
}

fn write_file(root: &Path, rel: &str, bytes: &[u8]) -> io::Result<PathBuf> {
    let path = rel.split('/').fold(root.to_path_buf(), |p, c| p.join(c));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, bytes)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use geoexif_core::{build_fingerprint, classify, parse_exif, Classification};

    #[test]
    fn dms_encoding_round_trips_to_six_decimals() {
        for x in [43.203640, 5.822985, 0.0, 89.999999, 179.999_999_6, 34.052235, 118.243683] {
            let (d, m, s) = to_dms(x);
            let back = f64::from(d) + f64::from(m) / 60.0 + f64::from(s) / 1e4 / 3600.0;
            assert_eq!(round6(back), round6(x), "{x}");
            assert!(s < 600_000);
        }
    }

    #[test]
    fn rendered_images_read_back_as_specified() {
        for img in fig6().images.iter().chain(&verify().images) {
            let bytes = render(img, [10, 20, 30]);
            let exp = expectation(img);
            let rec = parse_exif(&bytes);
            assert_eq!(build_fingerprint(rec.as_ref()).fake_id, exp.fake_id, "{}", img.file);
            assert_eq!(rec.as_ref().and_then(|r| r.capture_datetime()), exp.datetime, "{}", img.file);
            let pos = match classify(rec.as_ref()) {
                Classification::Geotagged(p) => Some((round6(p.latitude()), round6(p.longitude()))),
                Classification::NonGeotagged { .. } => None,
            };
            assert_eq!(pos, exp.position, "{}", img.file);
        }
    }

    #[test]
    fn truncated_fixture_keeps_three_tags() {
        let img = ImageSpec { file: "t.jpg".into(), corruption: Some(Corruption::TruncatedIfd), ..Default::default() };
        let rec = parse_exif(&render(&img, [0, 0, 0])).unwrap();
        assert_eq!(rec.tags.len(), 3);
        assert_eq!(rec.warnings.len(), 1);
    }

    #[test]
    fn fig6_manifest_matches_published_counts() {
        let expected: Vec<Expected> = fig6().images.iter().map(expectation).collect();
        let m = build_manifest(&expected);
        assert_eq!(m.devices["SONYDSC-HX100V"], 29);
        let first = m.marker("DCIM/100MSDCF/DSC04487.JPG").unwrap();
        assert_eq!(first.slots, Some([11, 15, 25, 25, 25, 25, 25]));
        let second = m.marker("DCIM/100MSDCF/DSC04488.JPG").unwrap();
        assert_eq!(second.slots, Some([11, 13, 25, 25, 25, 25, 25]));
    }

    #[test]
    fn random_corpus_is_seeded() {
        let spec = FixtureSpec::preset("small").unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ma = generate(&spec, a.path()).unwrap();
        let mb = generate(&spec, b.path()).unwrap();
        assert_eq!(ma, mb);
        assert_eq!((ma.files_scanned, ma.images_found, ma.geotagged_count), (25, 20, 12));
    }

    #[test]
    fn presets_resolve() {
        for p in preset_names() {
            assert!(FixtureSpec::resolve(p).is_ok(), "{p}");
        }
        let json = r#"{"images":[{"file":"a.jpg","make":"X"}]}"#;
        assert_eq!(FixtureSpec::resolve(json).unwrap().images.len(), 1);
    }
}
