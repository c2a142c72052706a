//! Keyframe selection by frame-difference peaks.

use std::path::{Path, PathBuf};

use image::imageops::FilterType;
use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use super::decode::DecodedVideo;
use super::MediaError;
use crate::exec::Executor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeyframeParams {
    pub max_frames: usize,
    pub min_gap_s: f64,
    pub downscale_px: u32,
}

impl Default for KeyframeParams {
    fn default() -> Self {
        Self {
            max_frames: 8,
            min_gap_s: 1.0,
            downscale_px: 64,
        }
    }
}

pub const KEYFRAME_JPEG_QUALITY: u8 = 90;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyFrame {
    pub asset_id: String,
    pub t_s: f64,
    pub score: f64,
    pub image_path: PathBuf,
    pub slug: String,
}

/// `<asset_id>_<MM>_<SS>_<t.2f>s`, with `t` rounded to centiseconds.
pub fn keyframe_slug(asset_id: &str, t_s: f64) -> String {
    let cs = (t_s.max(0.0) * 100.0).round() as u64;
    let secs = cs / 100;
    format!("{asset_id}_{:02}_{:02}_{}.{:02}s", secs / 60, secs % 60, secs, cs % 100)
}

/// Inverse of [`keyframe_slug`]. Asset ids may themselves contain `_`.
pub fn parse_slug(slug: &str) -> Option<(String, f64)> {
    let body = slug.strip_suffix('s')?;
    let mut parts = body.rsplitn(4, '_');
    let t_str = parts.next()?;
    let ss: u64 = parts.next()?.parse().ok()?;
    let mm: u64 = parts.next()?.parse().ok()?;
    let asset_id = parts.next()?;
    let (whole, frac) = t_str.split_once('.')?;
    if frac.len() != 2 || asset_id.is_empty() {
        return None;
    }
    let whole: u64 = whole.parse().ok()?;
    let frac: u64 = frac.parse().ok()?;
    if mm != whole / 60 || ss != whole % 60 {
        return None;
    }
    Some((asset_id.to_string(), (whole * 100 + frac) as f64 / 100.0))
}

pub fn downscale_gray(frame: &RgbImage, px: u32) -> GrayImage {
    let gray = image::imageops::grayscale(frame);
    image::imageops::resize(&gray, px, px, FilterType::Triangle)
}

/// Mean absolute difference to the previous frame, scaled to [0, 1].
/// Frame 0 scores 0.
pub fn frame_scores(frames: &[GrayImage]) -> Vec<f64> {
    let mut scores = vec![0.0; frames.len()];
    for i in 1..frames.len() {
        let (a, b) = (&frames[i - 1], &frames[i]);
        let n = a.as_raw().len().min(b.as_raw().len());
        if n == 0 {
            continue;
        }
        let total: u64 = a
            .as_raw()
            .iter()
            .zip(b.as_raw())
            .map(|(x, y)| u64::from(x.abs_diff(*y)))
            .sum();
        scores[i] = total as f64 / (n as f64 * 255.0);
    }
    scores
}

/// Indices of selected frames in time order.
///
/// Candidates are local maxima (strictly above the previous frame, at
/// least the next). Greedy suppression takes candidates by score, earlier
/// first on ties, skipping any within `min_gap_s` of one already taken.
/// Without any positive candidate the first frame is returned.
pub fn select_keyframes(times: &[f64], scores: &[f64], params: &KeyframeParams) -> Vec<usize> {
    if times.is_empty() || params.max_frames == 0 {
        return Vec::new();
    }
    let mut candidates: Vec<usize> = (1..scores.len())
        .filter(|&i| {
            let next = scores.get(i + 1).copied().unwrap_or(f64::NEG_INFINITY);
            scores[i] > 0.0 && scores[i] > scores[i - 1] && scores[i] >= next
        })
        .collect();
    candidates.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(times[a].total_cmp(&times[b])));
    let mut picked: Vec<usize> = Vec::new();
    for i in candidates {
        if picked.len() >= params.max_frames {
            break;
        }
        // Compare in centiseconds so the gap test agrees with the slug.
        let gap_ok = picked
            .iter()
            .all(|&p| ((times[i] - times[p]).abs() * 100.0).round() >= (params.min_gap_s * 100.0).round());
        if gap_ok {
            picked.push(i);
        }
    }
    if picked.is_empty() {
        picked.push(0);
    }
    picked.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    picked
}

/// Per-frame scores for a decoded video; frames are decoded and
/// downscaled on the executor.
pub fn score_video(video: &DecodedVideo, params: &KeyframeParams, exec: &Executor) -> Result<Vec<f64>, MediaError> {
    let indices: Vec<usize> = (0..video.frame_count()).collect();
    let px = params.downscale_px.max(1);
    let grays = exec
        .map(&indices, |&i| video.frame(i).map(|f| downscale_gray(&f, px)))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(frame_scores(&grays))
}

/// Selects keyframes of `video` and writes each as `<out_dir>/<slug>.jpg`.
pub fn extract_keyframes(
    asset_id: &str,
    video: &DecodedVideo,
    params: &KeyframeParams,
    out_dir: &Path,
    exec: &Executor,
) -> Result<Vec<KeyFrame>, MediaError> {
    if params.max_frames == 0 {
        return Err(MediaError::InvalidParams("max_frames must be at least 1".into()));
    }
    if video.frame_count() == 0 || video.info().duration_s <= 0.0 {
        return Err(MediaError::ZeroLengthVideo(asset_id.to_string()));
    }
    let scores = score_video(video, params, exec)?;
    let picked = select_keyframes(video.times(), &scores, params);
    std::fs::create_dir_all(out_dir)?;
    let mut out = Vec::with_capacity(picked.len());
    for i in picked {
        let t_s = video.times()[i];
        let slug = keyframe_slug(asset_id, t_s);
        let image_path = out_dir.join(format!("{slug}.jpg"));
        let frame = video.frame(i)?;
        let jpeg = crate::synth::encode_jpeg(&frame, KEYFRAME_JPEG_QUALITY)
            .map_err(|e| MediaError::decode(asset_id, format!("encoding keyframe: {e}")))?;
        std::fs::write(&image_path, jpeg)?;
        out.push(KeyFrame {
            asset_id: asset_id.to_string(),
            t_s,
            score: scores[i],
            image_path,
            slug,
        });
    }
    Ok(out)
}
