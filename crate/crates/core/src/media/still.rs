//! Still-image inspection: EXIF tags and JPEG quantisation analysis.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use exif::{In, Reader, Tag, Value};

use crate::text::GeoPoint;

/// All primary-IFD EXIF tags as strings. ASCII values are kept verbatim
/// (`"2022:05:04 19:58:37"`); other values use the library's display form.
/// Images without EXIF yield an empty map.
pub fn read_exif(bytes: &[u8]) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let parsed = match Reader::new().read_from_container(&mut std::io::Cursor::new(bytes)) {
        Ok(e) => e,
        Err(exif::Error::NotFound(_)) => return out,
        Err(e) => {
            tracing::warn!("unreadable EXIF block: {e}");
            return out;
        }
    };
    for field in parsed.fields().filter(|f| f.ifd_num == In::PRIMARY) {
        let value = match &field.value {
            Value::Ascii(parts) => parts
                .iter()
                .map(|p| String::from_utf8_lossy(p).trim_end_matches('\0').to_string())
                .collect::<Vec<_>>()
                .join(" "),
            _ => field.display_value().to_string(),
        };
        out.entry(field.tag.to_string()).or_insert(value);
    }
    out
}

fn dms(value: &Value) -> Option<f64> {
    match value {
        Value::Rational(r) if r.len() == 3 => {
            let parts: Vec<f64> = r.iter().map(|x| x.to_f64()).collect();
            parts
                .iter()
                .all(|p| p.is_finite())
                .then(|| parts[0] + parts[1] / 60.0 + parts[2] / 3600.0)
        }
        _ => None,
    }
}

/// GPS position from EXIF GPS tags, if complete and in range.
pub fn exif_gps(bytes: &[u8]) -> Option<GeoPoint> {
    let parsed = Reader::new()
        .read_from_container(&mut std::io::Cursor::new(bytes))
        .ok()?;
    let get = |tag| parsed.get_field(tag, In::PRIMARY);
    let mut lat = dms(&get(Tag::GPSLatitude)?.value)?;
    let mut lon = dms(&get(Tag::GPSLongitude)?.value)?;
    let reference = |tag| get(tag).map(|f| f.display_value().to_string().to_ascii_uppercase());
    if reference(Tag::GPSLatitudeRef).is_some_and(|r| r.starts_with('S')) {
        lat = -lat;
    }
    if reference(Tag::GPSLongitudeRef).is_some_and(|r| r.starts_with('W')) {
        lon = -lon;
    }
    GeoPoint::new(lat, lon)
}

/// Parses the EXIF `YYYY:MM:DD HH:MM:SS` form.
pub fn parse_exif_datetime(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s.trim(), "%Y:%m:%d %H:%M:%S").ok()
}

/// The IJG example luminance table, natural (row-major) order.
const STD_LUMINANCE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, 12, 12, 14, 19, 26, 58, 60, 55, 14, 13, 16, 24, 40, 57, 69, 56, 14, 17, 22, 29, 51,
    87, 80, 62, 18, 22, 37, 56, 68, 109, 103, 77, 24, 35, 55, 64, 81, 104, 113, 92, 49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Zigzag position -> natural position.
const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21,
    28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54,
    47, 55, 62, 63,
];

/// Luminance (id 0) quantisation table in natural order, read from the
/// DQT segments preceding the first scan.
pub fn luminance_table(jpeg: &[u8]) -> Option<[u16; 64]> {
    if jpeg.len() < 4 || jpeg[0] != 0xFF || jpeg[1] != 0xD8 {
        return None;
    }
    let mut pos = 2;
    while pos + 4 <= jpeg.len() {
        if jpeg[pos] != 0xFF {
            return None;
        }
        let marker = jpeg[pos + 1];
        if marker == 0xFF {
            pos += 1;
            continue;
        }
        if marker == 0xDA || marker == 0xD9 {
            return None;
        }
        let len = usize::from(u16::from_be_bytes([jpeg[pos + 2], jpeg[pos + 3]]));
        let end = pos + 2 + len;
        if len < 2 || end > jpeg.len() {
            return None;
        }
        if marker == 0xDB {
            let mut p = pos + 4;
            while p < end {
                let precision = jpeg[p] >> 4;
                let id = jpeg[p] & 0x0F;
                p += 1;
                let width = if precision == 0 { 1 } else { 2 };
                if p + 64 * width > end {
                    return None;
                }
                let mut table = [0u16; 64];
                for (k, &natural) in ZIGZAG.iter().enumerate() {
                    table[natural] = if width == 1 {
                        u16::from(jpeg[p + k])
                    } else {
                        u16::from_be_bytes([jpeg[p + 2 * k], jpeg[p + 2 * k + 1]])
                    };
                }
                if id == 0 {
                    return Some(table);
                }
                p += 64 * width;
            }
        }
        pos = end;
    }
    None
}

fn ijg_scaled(quality: u32) -> [u16; 64] {
    let scale = if quality < 50 {
        5000 / quality
    } else {
        200 - quality * 2
    };
    let mut out = [0u16; 64];
    for (o, &s) in out.iter_mut().zip(STD_LUMINANCE.iter()) {
        *o = ((u32::from(s) * scale + 50) / 100).clamp(1, 255) as u16;
    }
    out
}

/// Estimated encoder quality (1..=100) by nearest IJG-scaled luminance
/// table. Lowest quality wins ties.
pub fn estimate_jpeg_quality(jpeg: &[u8]) -> Option<u8> {
    let table = luminance_table(jpeg)?;
    (1..=100u32)
        .map(|q| {
            let dist: u32 = ijg_scaled(q)
                .iter()
                .zip(table.iter())
                .map(|(a, b)| u32::from(a.abs_diff(*b)))
                .sum();
            (dist, q)
        })
        .min()
        .map(|(_, q)| q as u8)
}
