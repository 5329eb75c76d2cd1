//! Minimal TIFF/EXIF serializer for synthetic test corpora.

use std::collections::BTreeMap;

use geoexif_core::exif::{tag, ByteOrder, Ifd, Rational, Value};

/// Collects tags per directory and lays them out as a TIFF structure.
#[derive(Debug, Clone)]
pub struct ExifWriter {
    order: ByteOrder,
    dirs: BTreeMap<Ifd, BTreeMap<u16, Value>>,
}

impl ExifWriter {
    pub fn new(order: ByteOrder) -> Self {
        ExifWriter { order, dirs: BTreeMap::new() }
    }

    pub fn set(&mut self, ifd: Ifd, tag_id: u16, value: Value) -> &mut Self {
        self.dirs.entry(ifd).or_default().insert(tag_id, value);
        self
    }

    pub fn ascii(&mut self, ifd: Ifd, tag_id: u16, s: &str) -> &mut Self {
        self.set(ifd, tag_id, Value::Ascii(s.to_owned()))
    }

    pub fn rationals(&mut self, ifd: Ifd, tag_id: u16, r: &[(u32, u32)]) -> &mut Self {
        self.set(ifd, tag_id, Value::Rational(r.iter().map(|&(n, d)| Rational::new(n, d)).collect()))
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.values().all(BTreeMap::is_empty)
    }

    fn u16b(&self, v: u16) -> [u8; 2] {
        match self.order {
            ByteOrder::BigEndian => v.to_be_bytes(),
            ByteOrder::LittleEndian => v.to_le_bytes(),
        }
    }

    fn u32b(&self, v: u32) -> [u8; 4] {
        match self.order {
            ByteOrder::BigEndian => v.to_be_bytes(),
            ByteOrder::LittleEndian => v.to_le_bytes(),
        }
    }

    /// (type code, count, payload)
    fn encode(&self, v: &Value) -> (u16, u32, Vec<u8>) {
        let mut out = Vec::new();
        let count = match v {
            Value::Byte(b) | Value::Undefined(b) => {
                out.extend_from_slice(b);
                b.len()
            }
            Value::Ascii(s) => {
                out.extend_from_slice(s.as_bytes());
                out.push(0);
                s.len() + 1
            }
            Value::Short(x) => {
                x.iter().for_each(|&e| out.extend(self.u16b(e)));
                x.len()
            }
            Value::Long(x) => {
                x.iter().for_each(|&e| out.extend(self.u32b(e)));
                x.len()
            }
            Value::Rational(x) => {
                for r in x {
                    out.extend(self.u32b(r.numerator));
                    out.extend(self.u32b(r.denominator));
                }
                x.len()
            }
            Value::SByte(x) => {
                out.extend(x.iter().map(|&b| b as u8));
                x.len()
            }
            Value::SShort(x) => {
                x.iter().for_each(|&e| out.extend(self.u16b(e as u16)));
                x.len()
            }
            Value::SLong(x) => {
                x.iter().for_each(|&e| out.extend(self.u32b(e as u32)));
                x.len()
            }
            Value::SRational(x) => {
                for r in x {
                    out.extend(self.u32b(r.numerator as u32));
                    out.extend(self.u32b(r.denominator as u32));
                }
                x.len()
            }
            Value::Float(x) => {
                x.iter().for_each(|&e| out.extend(self.u32b(e.to_bits())));
                x.len()
            }
            Value::Double(x) => {
                for e in x {
                    let b = match self.order {
                        ByteOrder::BigEndian => e.to_bits().to_be_bytes(),
                        ByteOrder::LittleEndian => e.to_bits().to_le_bytes(),
                    };
                    out.extend(b);
                }
                x.len()
            }
            Value::Opaque { type_code, count, raw } => {
                let mut field = raw.clone();
                field.resize(4, 0);
                return (*type_code, *count, field);
            }
        };
        (v.type_code(), count as u32, out)
    }

    fn entries(&self, ifd: Ifd, pointers: &BTreeMap<u16, u32>) -> Vec<(u16, u16, u32, Vec<u8>)> {
        let mut all: BTreeMap<u16, (u16, u32, Vec<u8>)> = BTreeMap::new();
        if let Some(tags) = self.dirs.get(&ifd) {
            for (&t, v) in tags {
                all.insert(t, self.encode(v));
            }
        }
        for (&t, &off) in pointers {
            all.insert(t, (4, 1, self.u32b(off).to_vec()));
        }
        all.into_iter().map(|(t, (ty, n, data))| (t, ty, n, data)).collect()
    }

    fn block_len(entries: &[(u16, u16, u32, Vec<u8>)]) -> u32 {
        let values: usize = entries
            .iter()
            .filter(|e| e.3.len() > 4)
            .map(|e| e.3.len() + e.3.len() % 2)
            .sum();
        (2 + 12 * entries.len() + 4 + values) as u32
    }

    fn emit(&self, out: &mut Vec<u8>, entries: &[(u16, u16, u32, Vec<u8>)], next: u32) {
        let start = out.len() as u32;
        let mut value_at = start + 2 + 12 * entries.len() as u32 + 4;
        let mut values = Vec::new();
        out.extend(self.u16b(entries.len() as u16));
        for (t, ty, n, data) in entries {
            out.extend(self.u16b(*t));
            out.extend(self.u16b(*ty));
            out.extend(self.u32b(*n));
            if data.len() <= 4 {
                let mut field = data.clone();
                field.resize(4, 0);
                out.extend(field);
            } else {
                out.extend(self.u32b(value_at));
                values.extend_from_slice(data);
                if data.len() % 2 == 1 {
                    values.push(0);
                }
                value_at += (data.len() + data.len() % 2) as u32;
            }
        }
        out.extend(self.u32b(next));
        out.extend(values);
    }

    /// Full TIFF structure starting with the byte-order mark.
    pub fn to_tiff(&self) -> Vec<u8> {
        let has = |ifd| self.dirs.get(&ifd).is_some_and(|d| !d.is_empty());
        let with_interop = has(Ifd::Interop);
        let with_exif = has(Ifd::Exif) || with_interop;
        let with_gps = has(Ifd::Gps);
        let with_ifd1 = has(Ifd::Thumbnail);

        // sizes do not depend on pointer values, so lay out with placeholders first
        let mut ptr0 = BTreeMap::new();
        if with_exif {
            ptr0.insert(tag::EXIF_IFD_POINTER, 0);
        }
        if with_gps {
            ptr0.insert(tag::GPS_IFD_POINTER, 0);
        }
        let mut ptr_exif = BTreeMap::new();
        if with_interop {
            ptr_exif.insert(tag::INTEROP_POINTER, 0);
        }
        let none = BTreeMap::new();

        let ifd0_at = 8u32;
        let exif_at = ifd0_at + Self::block_len(&self.entries(Ifd::Primary, &ptr0));
        let exif_len = if with_exif { Self::block_len(&self.entries(Ifd::Exif, &ptr_exif)) } else { 0 };
        let gps_at = exif_at + exif_len;
        let gps_len = if with_gps { Self::block_len(&self.entries(Ifd::Gps, &none)) } else { 0 };
        let interop_at = gps_at + gps_len;
        let interop_len = if with_interop { Self::block_len(&self.entries(Ifd::Interop, &none)) } else { 0 };
        let ifd1_at = interop_at + interop_len;

        for v in ptr0.values_mut() {
            *v = 0;
        }
        if with_exif {
            ptr0.insert(tag::EXIF_IFD_POINTER, exif_at);
        }
        if with_gps {
            ptr0.insert(tag::GPS_IFD_POINTER, gps_at);
        }
        if with_interop {
            ptr_exif.insert(tag::INTEROP_POINTER, interop_at);
        }

        let mut out = Vec::new();
        match self.order {
            ByteOrder::BigEndian => out.extend_from_slice(b"MM"),
            ByteOrder::LittleEndian => out.extend_from_slice(b"II"),
        }
        out.extend(self.u16b(42));
        out.extend(self.u32b(ifd0_at));
        self.emit(&mut out, &self.entries(Ifd::Primary, &ptr0), if with_ifd1 { ifd1_at } else { 0 });
        if with_exif {
            self.emit(&mut out, &self.entries(Ifd::Exif, &ptr_exif), 0);
        }
        if with_gps {
            self.emit(&mut out, &self.entries(Ifd::Gps, &none), 0);
        }
        if with_interop {
            self.emit(&mut out, &self.entries(Ifd::Interop, &none), 0);
        }
        if with_ifd1 {
            self.emit(&mut out, &self.entries(Ifd::Thumbnail, &none), 0);
        }
        out
    }

    /// JPEG APP1 segment (marker, length, `Exif\0\0`, TIFF).
    pub fn to_app1(&self) -> Vec<u8> {
        app1_segment(&self.to_tiff())
    }
}

/// Wrap TIFF bytes into an APP1 segment whose length field matches `tiff`.
pub fn app1_segment(tiff: &[u8]) -> Vec<u8> {
    let len = (tiff.len() + 8) as u16;
    let mut seg = vec![0xFF, 0xE1];
    seg.extend(len.to_be_bytes());
    seg.extend_from_slice(b"Exif\0\0");
    seg.extend_from_slice(tiff);
    seg
}

/// Insert an APP1 segment right after the SOI marker of `jpeg`.
pub fn splice_app1(jpeg: &[u8], app1: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(jpeg.len() + app1.len());
    out.extend_from_slice(&jpeg[..2]);
    out.extend_from_slice(app1);
    out.extend_from_slice(&jpeg[2..]);
    out
}
