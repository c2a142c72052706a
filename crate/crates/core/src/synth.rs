//! Synthetic media writers: Motion-JPEG MP4 files with known content and
//! JPEG files with hand-built EXIF. Used for fixtures, tests and benches.

use std::io::Cursor;

use chrono::{DateTime, Utc};
use image::codecs::jpeg::JpegEncoder;
use image::{Rgb, RgbImage};

const MP4_EPOCH_OFFSET: i64 = 2_082_844_800;
const TIMESCALE: u32 = 1000;

#[derive(Debug, Clone)]
pub struct SyntheticVideo {
    pub fps: f64,
    pub frames: Vec<RgbImage>,
    pub creation_time: Option<DateTime<Utc>>,
    pub quality: u8,
}

impl SyntheticVideo {
    pub fn from_fn(
        width: u32,
        height: u32,
        fps: f64,
        frame_count: usize,
        mut frame: impl FnMut(usize) -> RgbImage,
    ) -> Self {
        let frames = (0..frame_count)
            .map(|i| {
                let img = frame(i);
                assert_eq!(img.dimensions(), (width, height), "frame {i} has wrong size");
                img
            })
            .collect();
        Self {
            fps,
            frames,
            creation_time: None,
            quality: 90,
        }
    }

    pub fn constant(width: u32, height: u32, fps: f64, duration_s: f64, color: [u8; 3]) -> Self {
        let n = (duration_s * fps).round() as usize;
        Self::from_fn(width, height, fps, n, |_| {
            RgbImage::from_pixel(width, height, Rgb(color))
        })
    }

    /// Two distinct textured scenes with a hard cut at `cut_s`.
    pub fn scene_cut(width: u32, height: u32, fps: f64, duration_s: f64, cut_s: f64, seed: u64) -> Self {
        let n = (duration_s * fps).round() as usize;
        let cut = (cut_s * fps).round() as usize;
        Self::from_fn(width, height, fps, n, |i| {
            if i < cut {
                textured_scene(width, height, seed)
            } else {
                textured_scene(width, height, seed.wrapping_mul(31).wrapping_add(7))
            }
        })
    }

    pub fn with_creation_time(mut self, t: DateTime<Utc>) -> Self {
        self.creation_time = Some(t);
        self
    }

    pub fn duration_s(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }

    pub fn dimensions(&self) -> (u32, u32) {
        self.frames.first().map_or((0, 0), RgbImage::dimensions)
    }
}

/// Deterministic gradient-and-blocks scene parameterised by `seed`.
pub fn textured_scene(width: u32, height: u32, seed: u64) -> RgbImage {
    let mut state = seed ^ 0x9E37_79B9_7F4A_7C15;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let base = [(next() % 200) as u8, (next() % 200) as u8, (next() % 200) as u8];
    let blocks: Vec<(u32, u32, u32, u32, [u8; 3])> = (0..4)
        .map(|_| {
            let x = (next() % u64::from(width.max(1))) as u32;
            let y = (next() % u64::from(height.max(1))) as u32;
            let w = 1 + (next() % u64::from((width / 2).max(1))) as u32;
            let h = 1 + (next() % u64::from((height / 2).max(1))) as u32;
            let c = [(next() % 256) as u8, (next() % 256) as u8, (next() % 256) as u8];
            (x, y, w, h, c)
        })
        .collect();
    RgbImage::from_fn(width, height, |x, y| {
        for &(bx, by, bw, bh, c) in &blocks {
            if x >= bx && x < bx + bw && y >= by && y < by + bh {
                return Rgb(c);
            }
        }
        let shade = ((x * 55) / width.max(1) + (y * 55) / height.max(1)) as u8;
        Rgb([
            base[0].saturating_add(shade),
            base[1].saturating_add(shade / 2),
            base[2].saturating_add(shade / 3),
        ])
    })
}

pub fn encode_jpeg(img: &RgbImage, quality: u8) -> Result<Vec<u8>, image::ImageError> {
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(&mut out, quality).encode_image(img)?;
    Ok(out)
}

fn mp4_box(kind: &[u8; 4], body: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(body.len() + 8);
    out.extend_from_slice(&((body.len() + 8) as u32).to_be_bytes());
    out.extend_from_slice(kind);
    out.extend_from_slice(body);
    out
}

fn full_box(kind: &[u8; 4], version_flags: u32, body: &[u8]) -> Vec<u8> {
    let mut b = version_flags.to_be_bytes().to_vec();
    b.extend_from_slice(body);
    mp4_box(kind, &b)
}

const IDENTITY_MATRIX: [u32; 9] = [0x0001_0000, 0, 0, 0, 0x0001_0000, 0, 0, 0, 0x4000_0000];

/// Writes a single-track MP4 whose samples are baseline JPEG frames
/// (`jpeg` sample entry), one sample per chunk.
pub fn write_mp4(video: &SyntheticVideo) -> Result<Vec<u8>, image::ImageError> {
    let (width, height) = video.dimensions();
    let frames: Vec<Vec<u8>> = video
        .frames
        .iter()
        .map(|f| encode_jpeg(f, video.quality))
        .collect::<Result<_, _>>()?;
    let delta = (f64::from(TIMESCALE) / video.fps).round() as u32;
    let duration = delta * frames.len() as u32;
    let created = video
        .creation_time
        .map_or(0u32, |t| (t.timestamp() + MP4_EPOCH_OFFSET) as u32);

    let mut ftyp = b"isom".to_vec();
    ftyp.extend_from_slice(&512u32.to_be_bytes());
    ftyp.extend_from_slice(b"isomiso2mp41");
    let ftyp = mp4_box(b"ftyp", &ftyp);

    let mdat_payload: Vec<u8> = frames.concat();
    let mdat_start = ftyp.len() as u32 + 8;
    let mdat = mp4_box(b"mdat", &mdat_payload);

    let mut mvhd = Vec::new();
    for v in [created, created, TIMESCALE, duration, 0x0001_0000] {
        mvhd.extend_from_slice(&v.to_be_bytes());
    }
    mvhd.extend_from_slice(&0x0100u16.to_be_bytes());
    mvhd.extend_from_slice(&[0u8; 10]);
    for m in IDENTITY_MATRIX {
        mvhd.extend_from_slice(&m.to_be_bytes());
    }
    mvhd.extend_from_slice(&[0u8; 24]);
    mvhd.extend_from_slice(&2u32.to_be_bytes());
    let mvhd = full_box(b"mvhd", 0, &mvhd);

    let mut tkhd = Vec::new();
    for v in [created, created, 1, 0, duration] {
        tkhd.extend_from_slice(&v.to_be_bytes());
    }
    tkhd.extend_from_slice(&[0u8; 8]);
    tkhd.extend_from_slice(&[0u8; 8]);
    for m in IDENTITY_MATRIX {
        tkhd.extend_from_slice(&m.to_be_bytes());
    }
    tkhd.extend_from_slice(&(width << 16).to_be_bytes());
    tkhd.extend_from_slice(&(height << 16).to_be_bytes());
    let tkhd = full_box(b"tkhd", 0x0000_0003, &tkhd);

    let mut mdhd = Vec::new();
    for v in [created, created, TIMESCALE, duration] {
        mdhd.extend_from_slice(&v.to_be_bytes());
    }
    mdhd.extend_from_slice(&0x55C4u16.to_be_bytes());
    mdhd.extend_from_slice(&0u16.to_be_bytes());
    let mdhd = full_box(b"mdhd", 0, &mdhd);

    let mut hdlr = 0u32.to_be_bytes().to_vec();
    hdlr.extend_from_slice(b"vide");
    hdlr.extend_from_slice(&[0u8; 12]);
    hdlr.extend_from_slice(b"VideoHandler\0");
    let hdlr = full_box(b"hdlr", 0, &hdlr);

    let vmhd = full_box(b"vmhd", 1, &[0u8; 8]);
    let url_box = full_box(b"url ", 1, &[]);
    let mut dref = 1u32.to_be_bytes().to_vec();
    dref.extend_from_slice(&url_box);
    let dinf = mp4_box(b"dinf", &full_box(b"dref", 0, &dref));

    let mut entry = vec![0u8; 6];
    entry.extend_from_slice(&1u16.to_be_bytes());
    entry.extend_from_slice(&[0u8; 16]);
    entry.extend_from_slice(&(width as u16).to_be_bytes());
    entry.extend_from_slice(&(height as u16).to_be_bytes());
    entry.extend_from_slice(&0x0048_0000u32.to_be_bytes());
    entry.extend_from_slice(&0x0048_0000u32.to_be_bytes());
    entry.extend_from_slice(&0u32.to_be_bytes());
    entry.extend_from_slice(&1u16.to_be_bytes());
    let mut name = [0u8; 32];
    name[0] = 10;
    name[1..11].copy_from_slice(b"Photo-JPEG");
    entry.extend_from_slice(&name);
    entry.extend_from_slice(&24u16.to_be_bytes());
    entry.extend_from_slice(&(-1i16).to_be_bytes());
    let mut stsd = 1u32.to_be_bytes().to_vec();
    stsd.extend_from_slice(&mp4_box(b"jpeg", &entry));
    let stsd = full_box(b"stsd", 0, &stsd);

    let mut stts = 1u32.to_be_bytes().to_vec();
    stts.extend_from_slice(&(frames.len() as u32).to_be_bytes());
    stts.extend_from_slice(&delta.to_be_bytes());
    let stts = full_box(b"stts", 0, &stts);

    let mut stsc = 1u32.to_be_bytes().to_vec();
    for v in [1u32, 1, 1] {
        stsc.extend_from_slice(&v.to_be_bytes());
    }
    let stsc = full_box(b"stsc", 0, &stsc);

    let mut stsz = 0u32.to_be_bytes().to_vec();
    stsz.extend_from_slice(&(frames.len() as u32).to_be_bytes());
    for f in &frames {
        stsz.extend_from_slice(&(f.len() as u32).to_be_bytes());
    }
    let stsz = full_box(b"stsz", 0, &stsz);

    let mut stco = (frames.len() as u32).to_be_bytes().to_vec();
    let mut offset = mdat_start;
    for f in &frames {
        stco.extend_from_slice(&offset.to_be_bytes());
        offset += f.len() as u32;
    }
    let stco = full_box(b"stco", 0, &stco);

    let stbl = mp4_box(b"stbl", &[stsd, stts, stsc, stsz, stco].concat());
    let minf = mp4_box(b"minf", &[vmhd, dinf, stbl].concat());
    let mdia = mp4_box(b"mdia", &[mdhd, hdlr, minf].concat());
    let trak = mp4_box(b"trak", &[tkhd, mdia].concat());
    let moov = mp4_box(b"moov", &[mvhd, trak].concat());

    Ok([ftyp, mdat, moov].concat())
}

/// EXIF fields the synthetic JPEG writer knows how to emit.
#[derive(Debug, Clone, Default)]
pub struct ExifFields {
    pub make: Option<String>,
    pub model: Option<String>,
    /// `YYYY:MM:DD HH:MM:SS`
    pub date_time_original: Option<String>,
    pub gps: Option<(f64, f64)>,
}

struct IfdEntry {
    tag: u16,
    kind: u16,
    count: u32,
    data: Vec<u8>,
}

const ASCII: u16 = 2;
const LONG: u16 = 4;
const RATIONAL: u16 = 5;

fn ascii_entry(tag: u16, s: &str) -> IfdEntry {
    let mut data = s.as_bytes().to_vec();
    data.push(0);
    IfdEntry {
        tag,
        kind: ASCII,
        count: data.len() as u32,
        data,
    }
}

fn long_entry(tag: u16, v: u32) -> IfdEntry {
    IfdEntry {
        tag,
        kind: LONG,
        count: 1,
        data: v.to_be_bytes().to_vec(),
    }
}

fn dms_entry(tag: u16, value: f64) -> IfdEntry {
    let value = value.abs();
    let deg = value.floor();
    let minutes_f = (value - deg) * 60.0;
    let minutes = minutes_f.floor();
    let seconds = ((minutes_f - minutes) * 60.0 * 10_000.0).round() as u32;
    let mut data = Vec::new();
    for (num, den) in [(deg as u32, 1u32), (minutes as u32, 1), (seconds, 10_000)] {
        data.extend_from_slice(&num.to_be_bytes());
        data.extend_from_slice(&den.to_be_bytes());
    }
    IfdEntry {
        tag,
        kind: RATIONAL,
        count: 3,
        data,
    }
}

fn ifd_len(entries: &[IfdEntry]) -> usize {
    let table = 2 + 12 * entries.len() + 4;
    let extra: usize = entries
        .iter()
        .filter(|e| e.data.len() > 4)
        .map(|e| e.data.len() + e.data.len() % 2)
        .sum();
    table + extra
}

fn write_ifd(out: &mut Vec<u8>, entries: &mut [IfdEntry], start: usize) {
    entries.sort_by_key(|e| e.tag);
    let mut data_offset = start + 2 + 12 * entries.len() + 4;
    let mut data_area = Vec::new();
    out.extend_from_slice(&(entries.len() as u16).to_be_bytes());
    for e in entries.iter() {
        out.extend_from_slice(&e.tag.to_be_bytes());
        out.extend_from_slice(&e.kind.to_be_bytes());
        out.extend_from_slice(&e.count.to_be_bytes());
        if e.data.len() <= 4 {
            let mut inline = e.data.clone();
            inline.resize(4, 0);
            out.extend_from_slice(&inline);
        } else {
            out.extend_from_slice(&(data_offset as u32).to_be_bytes());
            data_area.extend_from_slice(&e.data);
            if e.data.len() % 2 == 1 {
                data_area.push(0);
            }
            data_offset += e.data.len() + e.data.len() % 2;
        }
    }
    out.extend_from_slice(&0u32.to_be_bytes());
    out.extend_from_slice(&data_area);
}

/// Big-endian TIFF structure holding IFD0, an Exif sub-IFD and a GPS IFD.
pub fn build_exif_tiff(fields: &ExifFields) -> Vec<u8> {
    let mut exif_ifd: Vec<IfdEntry> = Vec::new();
    if let Some(dt) = &fields.date_time_original {
        exif_ifd.push(ascii_entry(0x9003, dt));
    }
    let mut gps_ifd: Vec<IfdEntry> = Vec::new();
    if let Some((lat, lon)) = fields.gps {
        gps_ifd.push(ascii_entry(0x0001, if lat >= 0.0 { "N" } else { "S" }));
        gps_ifd.push(dms_entry(0x0002, lat));
        gps_ifd.push(ascii_entry(0x0003, if lon >= 0.0 { "E" } else { "W" }));
        gps_ifd.push(dms_entry(0x0004, lon));
    }
    let mut ifd0: Vec<IfdEntry> = Vec::new();
    if let Some(make) = &fields.make {
        ifd0.push(ascii_entry(0x010F, make));
    }
    if let Some(model) = &fields.model {
        ifd0.push(ascii_entry(0x0110, model));
    }
    // Pointer values are patched below; their size is fixed.
    if !exif_ifd.is_empty() {
        ifd0.push(long_entry(0x8769, 0));
    }
    if !gps_ifd.is_empty() {
        ifd0.push(long_entry(0x8825, 0));
    }
    let ifd0_start = 8;
    let exif_start = ifd0_start + ifd_len(&ifd0);
    let gps_start = exif_start + if exif_ifd.is_empty() { 0 } else { ifd_len(&exif_ifd) };
    for e in &mut ifd0 {
        match e.tag {
            0x8769 => e.data = (exif_start as u32).to_be_bytes().to_vec(),
            0x8825 => e.data = (gps_start as u32).to_be_bytes().to_vec(),
            _ => {}
        }
    }
    let mut out = b"MM\x00\x2A".to_vec();
    out.extend_from_slice(&(ifd0_start as u32).to_be_bytes());
    write_ifd(&mut out, &mut ifd0, ifd0_start);
    if !exif_ifd.is_empty() {
        write_ifd(&mut out, &mut exif_ifd, exif_start);
    }
    if !gps_ifd.is_empty() {
        write_ifd(&mut out, &mut gps_ifd, gps_start);
    }
    out
}

/// Encodes `img` as JPEG and inserts an APP1 Exif segment after the JFIF header.
pub fn jpeg_with_exif(img: &RgbImage, quality: u8, fields: &ExifFields) -> Result<Vec<u8>, image::ImageError> {
    let jpeg = encode_jpeg(img, quality)?;
    let tiff = build_exif_tiff(fields);
    let mut app1 = vec![0xFF, 0xE1];
    app1.extend_from_slice(&((tiff.len() + 8) as u16).to_be_bytes());
    app1.extend_from_slice(b"Exif\0\0");
    app1.extend_from_slice(&tiff);
    let mut insert_at = 2;
    if jpeg.len() > 6 && jpeg[2] == 0xFF && jpeg[3] == 0xE0 {
        insert_at = 4 + usize::from(u16::from_be_bytes([jpeg[4], jpeg[5]]));
    }
    let mut out = jpeg[..insert_at].to_vec();
    out.extend_from_slice(&app1);
    out.extend_from_slice(&jpeg[insert_at..]);
    Ok(out)
}

/// Plain JPEG with no metadata segments beyond JFIF.
pub fn plain_jpeg(img: &RgbImage, quality: u8) -> Result<Vec<u8>, image::ImageError> {
    encode_jpeg(img, quality)
}

/// PNG encoding, handy for reverse-search inputs in tests.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>, image::ImageError> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}
