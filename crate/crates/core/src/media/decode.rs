//! Frame access for MP4 video.
//!
//! Motion-JPEG tracks are decoded in-process straight from the sample
//! table. Any other codec goes through an external decoder subprocess
//! (`ffmpeg` by default, overridable with `VERIFLOW_DECODER`) invoked as
//! `<decoder> -v error -nostdin -i <file> -f rawvideo -pix_fmt rgb24 -`.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use image::RgbImage;

use super::container::{probe, Mp4Info};

pub const DECODER_ENV: &str = "VERIFLOW_DECODER";
pub const DEFAULT_DECODER: &str = "ffmpeg";

#[derive(Debug, thiserror::Error)]
#[error("{detail}")]
pub struct DecodeError {
    pub detail: String,
}

fn fail(detail: impl Into<String>) -> DecodeError {
    DecodeError { detail: detail.into() }
}

enum FrameSource {
    Mjpeg { data: Vec<u8> },
    Raw { frames: Vec<RgbImage> },
}

/// A probed video with random access to its frames.
pub struct DecodedVideo {
    path: PathBuf,
    info: Mp4Info,
    times: Vec<f64>,
    source: FrameSource,
}

impl std::fmt::Debug for DecodedVideo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DecodedVideo")
            .field("path", &self.path)
            .field("codec", &self.info.codec)
            .field("frames", &self.times.len())
            .finish()
    }
}

impl DecodedVideo {
    pub fn open(path: &Path) -> Result<Self, DecodeError> {
        let data = std::fs::read(path).map_err(|e| fail(format!("cannot read {}: {e}", path.display())))?;
        let info = probe(&mut std::io::Cursor::new(&data)).map_err(|e| fail(format!("container: {e}")))?;
        if info.is_mjpeg() {
            let len = data.len() as u64;
            if let Some(bad) = info.samples.iter().find(|s| s.offset + u64::from(s.size) > len) {
                return Err(fail(format!("sample at offset {} runs past end of file", bad.offset)));
            }
            let times = info.samples.iter().map(|s| s.t_s).collect();
            return Ok(Self {
                path: path.to_path_buf(),
                info,
                times,
                source: FrameSource::Mjpeg { data },
            });
        }
        drop(data);
        let frames = run_external_decoder(path, &info)?;
        let fps = info.frame_rate().unwrap_or(0.0);
        let times = (0..frames.len())
            .map(|i| if fps > 0.0 { i as f64 / fps } else { 0.0 })
            .collect();
        Ok(Self {
            path: path.to_path_buf(),
            info,
            times,
            source: FrameSource::Raw { frames },
        })
    }

    pub fn info(&self) -> &Mp4Info {
        &self.info
    }

    pub fn frame_count(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Coded bytes of frame `i` when the track is Motion-JPEG.
    pub fn sample_bytes(&self, i: usize) -> Option<&[u8]> {
        match &self.source {
            FrameSource::Mjpeg { data } => {
                let s = self.info.samples.get(i)?;
                let start = s.offset as usize;
                Some(&data[start..start + s.size as usize])
            }
            FrameSource::Raw { .. } => None,
        }
    }

    pub fn frame(&self, i: usize) -> Result<RgbImage, DecodeError> {
        match &self.source {
            FrameSource::Mjpeg { .. } => {
                let bytes = self
                    .sample_bytes(i)
                    .ok_or_else(|| fail(format!("frame {i} out of range")))?;
                image::load_from_memory_with_format(bytes, image::ImageFormat::Jpeg)
                    .map(|img| img.to_rgb8())
                    .map_err(|e| fail(format!("frame {i} at {:.3}s: {e}", self.times[i])))
            }
            FrameSource::Raw { frames } => frames
                .get(i)
                .cloned()
                .ok_or_else(|| fail(format!("frame {i} out of range"))),
        }
    }
}

fn run_external_decoder(path: &Path, info: &Mp4Info) -> Result<Vec<RgbImage>, DecodeError> {
    let (w, h) = (info.width, info.height);
    if w == 0 || h == 0 {
        return Err(fail(format!("codec `{}` with unknown frame size", info.codec)));
    }
    let decoder = std::env::var(DECODER_ENV).unwrap_or_else(|_| DEFAULT_DECODER.to_string());
    let output = Command::new(&decoder)
        .args(["-v", "error", "-nostdin", "-i"])
        .arg(path)
        .args(["-f", "rawvideo", "-pix_fmt", "rgb24", "-"])
        .stdin(Stdio::null())
        .output()
        .map_err(|e| {
            fail(format!(
                "codec `{}` needs external decoder `{decoder}`: {e}",
                info.codec
            ))
        })?;
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        return Err(fail(format!(
            "`{decoder}` exited with {}: {}",
            output.status,
            stderr.trim()
        )));
    }
    let frame_len = (w as usize) * (h as usize) * 3;
    if output.stdout.len() % frame_len != 0 {
        return Err(fail(format!(
            "`{decoder}` produced {} bytes, not a multiple of the {w}x{h} frame size",
            output.stdout.len()
        )));
    }
    Ok(output
        .stdout
        .chunks_exact(frame_len)
        .map(|c| RgbImage::from_raw(w, h, c.to_vec()).expect("chunk has frame size"))
        .collect())
}
