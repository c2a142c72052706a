//! Minimal ISO base media (MP4) reader: enough of `moov` to locate video
//! samples and read technical metadata without decoding anything.

use std::fs::File;
use std::io::{BufReader, Read, Seek, SeekFrom};
use std::path::Path;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

/// Seconds between 1904-01-01 (MP4 epoch) and 1970-01-01.
const MP4_EPOCH_OFFSET: i64 = 2_082_844_800;

#[derive(Debug, thiserror::Error)]
pub enum ContainerError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an MP4 container: {0}")]
    NotMp4(String),
    #[error("malformed `{kind}` box: {reason}")]
    Malformed { kind: String, reason: String },
    #[error("no video track")]
    NoVideoTrack,
}

fn malformed(kind: &str, reason: impl Into<String>) -> ContainerError {
    ContainerError::Malformed {
        kind: kind.to_string(),
        reason: reason.into(),
    }
}

/// One coded video sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub offset: u64,
    pub size: u32,
    pub t_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mp4Info {
    pub major_brand: String,
    pub creation_time: Option<DateTime<Utc>>,
    pub modification_time: Option<DateTime<Utc>>,
    pub duration_s: f64,
    pub width: u32,
    pub height: u32,
    /// Sample entry four-character code, e.g. `avc1` or `jpeg`.
    pub codec: String,
    pub samples: Vec<Sample>,
}

/// Container-level facts surfaced in analyses and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechMetadata {
    pub resolution: Option<(u32, u32)>,
    pub duration_s: f64,
    pub codec: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub creation_time: Option<DateTime<Utc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modification_time: Option<DateTime<Utc>>,
    pub frame_count: usize,
}

impl Mp4Info {
    pub fn tech(&self) -> TechMetadata {
        TechMetadata {
            resolution: (self.width > 0 && self.height > 0).then_some((self.width, self.height)),
            duration_s: self.duration_s,
            codec: self.codec.clone(),
            creation_time: self.creation_time,
            modification_time: self.modification_time,
            frame_count: self.samples.len(),
        }
    }

    pub fn is_mjpeg(&self) -> bool {
        matches!(self.codec.as_str(), "jpeg" | "mjpa" | "mjpg" | "MJPG" | "AVDJ")
    }

    /// Mean frame rate derived from the sample table.
    pub fn frame_rate(&self) -> Option<f64> {
        (self.duration_s > 0.0 && !self.samples.is_empty()).then(|| self.samples.len() as f64 / self.duration_s)
    }
}

pub fn probe_file(path: &Path) -> Result<Mp4Info, ContainerError> {
    let mut reader = BufReader::new(File::open(path)?);
    probe(&mut reader)
}

/// Walks the top-level boxes, reading only `ftyp` and `moov` into memory.
pub fn probe<R: Read + Seek>(reader: &mut R) -> Result<Mp4Info, ContainerError> {
    let end = reader.seek(SeekFrom::End(0))?;
    reader.seek(SeekFrom::Start(0))?;
    let mut pos = 0u64;
    let mut brand: Option<String> = None;
    let mut moov: Option<Vec<u8>> = None;
    while pos + 8 <= end {
        reader.seek(SeekFrom::Start(pos))?;
        let mut header = [0u8; 8];
        reader.read_exact(&mut header)?;
        let mut size = u64::from(u32::from_be_bytes(header[0..4].try_into().unwrap()));
        let kind = fourcc(&header[4..8]);
        let mut header_len = 8u64;
        if size == 1 {
            let mut large = [0u8; 8];
            reader.read_exact(&mut large)?;
            size = u64::from_be_bytes(large);
            header_len = 16;
        } else if size == 0 {
            size = end - pos;
        }
        if size < header_len || pos + size > end {
            return Err(malformed(
                &kind,
                format!("box size {size} at offset {pos} exceeds file"),
            ));
        }
        if pos == 0 && kind != "ftyp" {
            return Err(ContainerError::NotMp4(format!("first box is `{kind}`")));
        }
        match kind.as_str() {
            "ftyp" => {
                let mut body = [0u8; 4];
                reader.read_exact(&mut body)?;
                brand = Some(fourcc(&body));
            }
            "moov" => {
                let mut body = vec![0u8; (size - header_len) as usize];
                reader.read_exact(&mut body)?;
                moov = Some(body);
            }
            _ => {}
        }
        pos += size;
    }
    let brand = brand.ok_or_else(|| ContainerError::NotMp4("missing ftyp".into()))?;
    let moov = moov.ok_or_else(|| malformed("moov", "missing"))?;
    parse_moov(&moov, brand)
}

fn fourcc(b: &[u8]) -> String {
    b.iter().map(|&c| c as char).collect()
}

struct BoxIter<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Iterator for BoxIter<'a> {
    type Item = Result<(String, &'a [u8]), ContainerError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos + 8 > self.data.len() {
            return None;
        }
        let d = &self.data[self.pos..];
        let mut size = u32::from_be_bytes(d[0..4].try_into().unwrap()) as usize;
        let kind = fourcc(&d[4..8]);
        let mut header = 8;
        if size == 1 {
            if d.len() < 16 {
                return Some(Err(malformed(&kind, "truncated large size")));
            }
            size = u64::from_be_bytes(d[8..16].try_into().unwrap()) as usize;
            header = 16;
        } else if size == 0 {
            size = d.len();
        }
        if size < header || size > d.len() {
            self.pos = self.data.len();
            return Some(Err(malformed(&kind, "child box exceeds parent")));
        }
        self.pos += size;
        Some(Ok((kind, &d[header..size])))
    }
}

fn children(data: &[u8]) -> BoxIter<'_> {
    BoxIter { data, pos: 0 }
}

fn find<'a>(data: &'a [u8], kind: &str) -> Result<Option<&'a [u8]>, ContainerError> {
    for child in children(data) {
        let (k, body) = child?;
        if k == kind {
            return Ok(Some(body));
        }
    }
    Ok(None)
}

struct Cursor<'a> {
    kind: &'static str,
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(kind: &'static str, data: &'a [u8]) -> Self {
        Self { kind, data, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ContainerError> {
        if self.pos + n > self.data.len() {
            return Err(malformed(self.kind, "truncated"));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ContainerError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, ContainerError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, ContainerError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, ContainerError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn skip(&mut self, n: usize) -> Result<(), ContainerError> {
        self.take(n).map(|_| ())
    }
}

fn mp4_time(secs: u64) -> Option<DateTime<Utc>> {
    if secs == 0 {
        return None;
    }
    Utc.timestamp_opt(secs as i64 - MP4_EPOCH_OFFSET, 0).single()
}

fn parse_moov(moov: &[u8], major_brand: String) -> Result<Mp4Info, ContainerError> {
    let mvhd = find(moov, "mvhd")?.ok_or_else(|| malformed("moov", "missing mvhd"))?;
    let mut c = Cursor::new("mvhd", mvhd);
    let version = c.u8()?;
    c.skip(3)?;
    let (created, modified, timescale, duration) = if version == 1 {
        (c.u64()?, c.u64()?, c.u32()?, c.u64()?)
    } else {
        (u64::from(c.u32()?), u64::from(c.u32()?), c.u32()?, u64::from(c.u32()?))
    };
    if timescale == 0 {
        return Err(malformed("mvhd", "zero timescale"));
    }
    let movie_duration = duration as f64 / f64::from(timescale);

    for child in children(moov) {
        let (kind, trak) = child?;
        if kind != "trak" {
            continue;
        }
        let Some(mdia) = find(trak, "mdia")? else {
            continue;
        };
        let Some(hdlr) = find(mdia, "hdlr")? else {
            continue;
        };
        if hdlr.len() < 12 || &hdlr[8..12] != b"vide" {
            continue;
        }
        let (width, height) = match find(trak, "tkhd")? {
            Some(tkhd) => parse_tkhd(tkhd)?,
            None => (0, 0),
        };
        let mdhd = find(mdia, "mdhd")?.ok_or_else(|| malformed("mdia", "missing mdhd"))?;
        let track_timescale = parse_mdhd_timescale(mdhd)?;
        let minf = find(mdia, "minf")?.ok_or_else(|| malformed("mdia", "missing minf"))?;
        let stbl = find(minf, "stbl")?.ok_or_else(|| malformed("minf", "missing stbl"))?;
        let (codec, entry_dims) = parse_stsd(find(stbl, "stsd")?.ok_or_else(|| malformed("stbl", "missing stsd"))?)?;
        let samples = parse_sample_table(stbl, track_timescale)?;
        let (width, height) = if width == 0 || height == 0 {
            entry_dims
        } else {
            (width, height)
        };
        let duration_s = if movie_duration > 0.0 {
            movie_duration
        } else {
            samples.last().map_or(0.0, |s| s.t_s)
        };
        return Ok(Mp4Info {
            major_brand,
            creation_time: mp4_time(created),
            modification_time: mp4_time(modified),
            duration_s,
            width,
            height,
            codec,
            samples,
        });
    }
    Err(ContainerError::NoVideoTrack)
}

fn parse_tkhd(tkhd: &[u8]) -> Result<(u32, u32), ContainerError> {
    let mut c = Cursor::new("tkhd", tkhd);
    let version = c.u8()?;
    c.skip(3)?;
    c.skip(if version == 1 {
        8 + 8 + 4 + 4 + 8
    } else {
        4 + 4 + 4 + 4 + 4
    })?;
    c.skip(8 + 2 + 2 + 2 + 2 + 36)?;
    let w = c.u32()? >> 16;
    let h = c.u32()? >> 16;
    Ok((w, h))
}

fn parse_mdhd_timescale(mdhd: &[u8]) -> Result<u32, ContainerError> {
    let mut c = Cursor::new("mdhd", mdhd);
    let version = c.u8()?;
    c.skip(3)?;
    c.skip(if version == 1 { 16 } else { 8 })?;
    let ts = c.u32()?;
    if ts == 0 {
        return Err(malformed("mdhd", "zero timescale"));
    }
    Ok(ts)
}

fn parse_stsd(stsd: &[u8]) -> Result<(String, (u32, u32)), ContainerError> {
    let mut c = Cursor::new("stsd", stsd);
    c.skip(4)?;
    if c.u32()? == 0 {
        return Err(malformed("stsd", "no sample entries"));
    }
    let _size = c.u32()?;
    let codec = fourcc(c.take(4)?);
    // VisualSampleEntry: reserved(6) dref(2) pre_defined/reserved(16) width(2) height(2)
    c.skip(6 + 2 + 16)?;
    let w = u32::from(c.u16()?);
    let h = u32::from(c.u16()?);
    Ok((codec, (w, h)))
}

fn parse_sample_table(stbl: &[u8], timescale: u32) -> Result<Vec<Sample>, ContainerError> {
    let stsz = find(stbl, "stsz")?.ok_or_else(|| malformed("stbl", "missing stsz"))?;
    let mut c = Cursor::new("stsz", stsz);
    c.skip(4)?;
    let uniform = c.u32()?;
    let count = c.u32()? as usize;
    let sizes: Vec<u32> = if uniform != 0 {
        vec![uniform; count]
    } else {
        (0..count).map(|_| c.u32()).collect::<Result<_, _>>()?
    };

    let chunk_offsets: Vec<u64> = if let Some(stco) = find(stbl, "stco")? {
        let mut c = Cursor::new("stco", stco);
        c.skip(4)?;
        let n = c.u32()? as usize;
        (0..n).map(|_| c.u32().map(u64::from)).collect::<Result<_, _>>()?
    } else if let Some(co64) = find(stbl, "co64")? {
        let mut c = Cursor::new("co64", co64);
        c.skip(4)?;
        let n = c.u32()? as usize;
        (0..n).map(|_| c.u64()).collect::<Result<_, _>>()?
    } else {
        return Err(malformed("stbl", "missing stco/co64"));
    };

    let stsc = find(stbl, "stsc")?.ok_or_else(|| malformed("stbl", "missing stsc"))?;
    let mut c = Cursor::new("stsc", stsc);
    c.skip(4)?;
    let n = c.u32()? as usize;
    let mut runs = Vec::with_capacity(n);
    for _ in 0..n {
        let first_chunk = c.u32()?;
        let per_chunk = c.u32()?;
        c.skip(4)?;
        runs.push((first_chunk, per_chunk));
    }

    let stts = find(stbl, "stts")?.ok_or_else(|| malformed("stbl", "missing stts"))?;
    let mut c = Cursor::new("stts", stts);
    c.skip(4)?;
    let n = c.u32()? as usize;
    let mut times = Vec::with_capacity(count);
    let mut ticks = 0u64;
    for _ in 0..n {
        let run = c.u32()?;
        let delta = c.u32()?;
        for _ in 0..run {
            times.push(ticks as f64 / f64::from(timescale));
            ticks += u64::from(delta);
        }
    }
    if times.len() < count {
        return Err(malformed("stts", "fewer timestamps than samples"));
    }

    let mut samples = Vec::with_capacity(count);
    let mut sample_idx = 0usize;
    for (chunk_idx, &chunk_offset) in chunk_offsets.iter().enumerate() {
        let chunk_no = chunk_idx as u32 + 1;
        let per_chunk = runs
            .iter()
            .rev()
            .find(|(first, _)| *first <= chunk_no)
            .map_or(0, |(_, n)| *n);
        let mut offset = chunk_offset;
        for _ in 0..per_chunk {
            if sample_idx >= count {
                break;
            }
            let size = sizes[sample_idx];
            samples.push(Sample {
                offset,
                size,
                t_s: times[sample_idx],
            });
            offset += u64::from(size);
            sample_idx += 1;
        }
    }
    if samples.len() != count {
        return Err(malformed("stsc", "chunk map does not cover every sample"));
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{write_mp4, SyntheticVideo};
    use chrono::NaiveDate;
    use std::io::Cursor as IoCursor;

    #[test]
    fn reads_back_synthetic_mp4() {
        let created = NaiveDate::from_ymd_opt(2022, 5, 4)
            .unwrap()
            .and_hms_opt(19, 58, 37)
            .unwrap()
            .and_utc();
        let video = SyntheticVideo::constant(32, 24, 10.0, 1.0, [10, 20, 30]).with_creation_time(created);
        let bytes = write_mp4(&video).unwrap();
        let info = probe(&mut IoCursor::new(&bytes)).unwrap();
        assert_eq!(info.codec, "jpeg");
        assert!(info.is_mjpeg());
        assert_eq!((info.width, info.height), (32, 24));
        assert_eq!(info.samples.len(), 10);
        assert!((info.duration_s - 1.0).abs() < 1e-9);
        assert!((info.samples[3].t_s - 0.3).abs() < 1e-9);
        assert_eq!(info.creation_time, Some(created));
        let first = &info.samples[0];
        let jpeg = &bytes[first.offset as usize..first.offset as usize + first.size as usize];
        assert_eq!(&jpeg[..2], &[0xFF, 0xD8]);
    }

    #[test]
    fn rejects_non_mp4() {
        let err = probe(&mut IoCursor::new(b"\x00\x00\x00\x08free".to_vec())).unwrap_err();
        assert!(matches!(err, ContainerError::NotMp4(_)));
    }

    #[test]
    fn rejects_truncated_box() {
        let mut bytes = write_mp4(&SyntheticVideo::constant(8, 8, 5.0, 1.0, [0, 0, 0])).unwrap();
        bytes.truncate(bytes.len() - 10);
        assert!(probe(&mut IoCursor::new(bytes)).is_err());
    }
}
