//! Stage 1: keyframes, frame descriptions, technical metadata and
//! related-article seeds for each media asset.

pub mod container;
pub mod decode;
pub mod keyframes;
pub mod overlay;
pub mod still;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::case::{MediaAsset, MediaKind};
use crate::exec::Executor;
use crate::gateway::{Gateway, GatewayError, SearchResult};

pub use container::TechMetadata;
pub use decode::DecodedVideo;
pub use keyframes::{extract_keyframes, keyframe_slug, parse_slug, KeyFrame, KeyframeParams};
pub use overlay::{classify_overlay, OverlayKind, OverlayText};

/// Instruction sent with every `describe_video` request.
pub const DESCRIBE_INSTRUCTION: &str = "Describe the video segment by segment. For each segment give start and end \
seconds, a description, visible objects, scene tags and any on-screen overlay text verbatim.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDescription {
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub text: String,
    #[serde(default)]
    pub objects: Vec<String>,
    #[serde(default)]
    pub scene_tags: Vec<String>,
    #[serde(default)]
    pub overlays: Vec<OverlayText>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoAnalysis {
    pub asset_id: String,
    pub descriptions: Vec<FrameDescription>,
    pub keyframes: Vec<KeyFrame>,
    pub tech: TechMetadata,
}

impl VideoAnalysis {
    pub fn overlays(&self) -> impl Iterator<Item = (&FrameDescription, &OverlayText)> {
        self.descriptions
            .iter()
            .flat_map(|d| d.overlays.iter().map(move |o| (d, o)))
    }

    /// Highest-scoring keyframe, earliest on ties.
    pub fn top_keyframe(&self) -> Option<&KeyFrame> {
        self.keyframes
            .iter()
            .min_by(|a, b| b.score.total_cmp(&a.score).then(a.t_s.total_cmp(&b.t_s)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageAnalysis {
    pub asset_id: String,
    pub related: Vec<SearchResult>,
    pub exif: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssetAnalysis {
    Video(VideoAnalysis),
    Image(ImageAnalysis),
}

impl AssetAnalysis {
    pub fn asset_id(&self) -> &str {
        match self {
            Self::Video(v) => &v.asset_id,
            Self::Image(i) => &i.asset_id,
        }
    }

    pub fn as_video(&self) -> Option<&VideoAnalysis> {
        match self {
            Self::Video(v) => Some(v),
            Self::Image(_) => None,
        }
    }

    pub fn as_image(&self) -> Option<&ImageAnalysis> {
        match self {
            Self::Image(i) => Some(i),
            Self::Video(_) => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MediaError {
    #[error("cannot decode {asset}: {detail}")]
    DecodeFailure { asset: String, detail: String },
    #[error("{0} has no frames")]
    ZeroLengthVideo(String),
    #[error("{asset} is not a {expected:?} asset")]
    WrongKind { asset: String, expected: MediaKind },
    #[error("invalid keyframe parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl MediaError {
    pub fn decode(asset: &str, detail: impl Into<String>) -> Self {
        Self::DecodeFailure {
            asset: asset.to_string(),
            detail: detail.into(),
        }
    }
}

impl From<decode::DecodeError> for MediaError {
    fn from(e: decode::DecodeError) -> Self {
        Self::DecodeFailure {
            asset: String::new(),
            detail: e.detail,
        }
    }
}

fn with_asset(asset: &str, e: MediaError) -> MediaError {
    match e {
        MediaError::DecodeFailure { asset: a, detail } if a.is_empty() => MediaError::DecodeFailure {
            asset: asset.to_string(),
            detail,
        },
        other => other,
    }
}

/// Keyframes (written under `keyframe_dir`), provider descriptions with
/// locally classified overlays, and container metadata.
pub fn analyze_video(
    video: &MediaAsset,
    gw: &Gateway,
    params: &KeyframeParams,
    keyframe_dir: &Path,
    exec: &Executor,
) -> Result<VideoAnalysis, MediaError> {
    if video.kind != MediaKind::Video {
        return Err(MediaError::WrongKind {
            asset: video.asset_id.clone(),
            expected: MediaKind::Video,
        });
    }
    let id = &video.asset_id;
    let decoded = DecodedVideo::open(&video.path).map_err(|e| MediaError::decode(id, e.detail))?;
    let keyframes = extract_keyframes(id, &decoded, params, keyframe_dir, exec).map_err(|e| with_asset(id, e))?;
    let mut descriptions = gw.describe_video(video, DESCRIBE_INSTRUCTION)?;
    for d in &mut descriptions {
        for o in &mut d.overlays {
            o.kind = classify_overlay(&o.text);
        }
    }
    Ok(VideoAnalysis {
        asset_id: id.clone(),
        descriptions,
        keyframes,
        tech: decoded.info().tech(),
    })
}

/// Reverse image search results and EXIF tags. The file is only read.
pub fn analyze_image(image: &MediaAsset, gw: &Gateway) -> Result<ImageAnalysis, MediaError> {
    if image.kind != MediaKind::Image {
        return Err(MediaError::WrongKind {
            asset: image.asset_id.clone(),
            expected: MediaKind::Image,
        });
    }
    let bytes = std::fs::read(&image.path)?;
    if !bytes.is_empty() {
        image::load_from_memory(&bytes).map_err(|e| MediaError::decode(&image.asset_id, e.to_string()))?;
    }
    let related = gw.reverse_image_search(&bytes, &image.asset_id)?;
    Ok(ImageAnalysis {
        asset_id: image.asset_id.clone(),
        related,
        exif: still::read_exif(&bytes),
    })
}

/// Analyses every asset; results are ordered by asset id. Videos decode
/// their frames on `exec`; assets themselves are processed in turn so a
/// single pool is never nested.
pub fn analyze_assets(
    assets: &[MediaAsset],
    gw: &Gateway,
    params: &KeyframeParams,
    keyframe_dir: &Path,
    exec: &Executor,
) -> Result<Vec<AssetAnalysis>, MediaError> {
    let mut sorted: Vec<&MediaAsset> = assets.iter().collect();
    sorted.sort_by(|a, b| a.asset_id.cmp(&b.asset_id));
    sorted
        .into_iter()
        .map(|a| match a.kind {
            MediaKind::Video => analyze_video(a, gw, params, keyframe_dir, exec).map(AssetAnalysis::Video),
            MediaKind::Image => analyze_image(a, gw).map(AssetAnalysis::Image),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Fixture, FixtureAdapter, Mode};
    use crate::synth::{jpeg_with_exif, plain_jpeg, textured_scene, write_mp4, ExifFields, SyntheticVideo};
    use std::sync::Arc;

    fn asset(path: &Path, kind: MediaKind, duration_s: Option<f64>) -> MediaAsset {
        MediaAsset {
            asset_id: path.file_name().unwrap().to_string_lossy().into_owned(),
            path: path.to_path_buf(),
            kind,
            container_format: path.extension().unwrap().to_string_lossy().into_owned(),
            duration_s,
            resolution: None,
        }
    }

    fn mock(fixtures: serde_json::Value) -> Gateway {
        let fixtures: Vec<Fixture> = serde_json::from_value(fixtures).unwrap();
        Gateway::new(Mode::Mock).with_adapter(Arc::new(FixtureAdapter::new(fixtures)))
    }

    #[test]
    fn video_analysis_classifies_overlays_and_finds_flash() {
        let dir = tempfile::tempdir().unwrap();
        let base = textured_scene(48, 32, 9);
        let flash = image::RgbImage::from_pixel(48, 32, image::Rgb([250, 250, 240]));
        let video = SyntheticVideo::from_fn(48, 32, 10.0, 50, |i| if i == 25 { flash.clone() } else { base.clone() });
        let path = dir.path().join("ID43-2.mp4");
        std::fs::write(&path, write_mp4(&video).unwrap()).unwrap();
        let gw = mock(serde_json::json!([{
            "provider": "multimodal_model",
            "operation": "describe_video",
            "match": {"asset_id": "ID43-2.mp4"},
            "response": {"descriptions": [
                {"t_start_s": 0.0, "t_end_s": 2.4, "text": "Night view of a bridge", "overlays": [{"text": "04/05/2022 19:58:37"}]},
                {"t_start_s": 2.4, "t_end_s": 5.0, "text": "Bright flash", "overlays": [{"text": "Naberezhna Zavodska"}]}
            ]}
        }]));
        let a = asset(&path, MediaKind::Video, Some(5.0));
        let out = dir.path().join("report");
        let va = analyze_video(&a, &gw, &KeyframeParams::default(), &out, &Executor::sequential()).unwrap();
        assert_eq!(va.top_keyframe().unwrap().slug, "ID43-2.mp4_00_02_2.50s");
        assert!(out.join("ID43-2.mp4_00_02_2.50s.jpg").is_file());
        let kinds: Vec<_> = va.overlays().map(|(_, o)| o.kind).collect();
        assert_eq!(kinds, vec![OverlayKind::Timestamp, OverlayKind::Location]);
        assert_eq!(va.tech.resolution, Some((48, 32)));
    }

    #[test]
    fn image_analysis_reads_exif_without_touching_file() {
        let dir = tempfile::tempdir().unwrap();
        let img = textured_scene(16, 16, 4);
        let fields = ExifFields {
            date_time_original: Some("2022:05:04 19:58:37".into()),
            ..Default::default()
        };
        let path = dir.path().join("p.jpg");
        std::fs::write(&path, jpeg_with_exif(&img, 90, &fields).unwrap()).unwrap();
        let before = crate::digest::sha256_hex(&std::fs::read(&path).unwrap());
        let gw = mock(serde_json::json!([{
            "provider": "reverse_image_search",
            "operation": "reverse_search",
            "match": {"label": "p.jpg"},
            "response": {"results": [
                {"url": "https://a.test/1", "retrieved_at": "2022-05-05T00:00:00Z"},
                {"url": "https://a.test/1", "retrieved_at": "2022-05-05T00:00:00Z"},
                {"url": "https://b.test/2", "retrieved_at": "2022-05-05T00:00:00Z"}
            ]}
        }]));
        let ia = analyze_image(&asset(&path, MediaKind::Image, None), &gw).unwrap();
        assert_eq!(ia.related.len(), 2);
        assert_eq!(ia.exif.get("DateTimeOriginal").unwrap(), "2022:05:04 19:58:37");
        assert_eq!(crate::digest::sha256_hex(&std::fs::read(&path).unwrap()), before);

        let plain = dir.path().join("q.jpg");
        std::fs::write(&plain, plain_jpeg(&img, 90).unwrap()).unwrap();
        let gw = mock(serde_json::json!([{
            "provider": "reverse_image_search", "operation": "reverse_search",
            "response": {"results": []}
        }]));
        assert!(analyze_image(&asset(&plain, MediaKind::Image, None), &gw)
            .unwrap()
            .exif
            .is_empty());
    }

    #[test]
    fn constant_video_yields_first_frame() {
        let dir = tempfile::tempdir().unwrap();
        let video = SyntheticVideo::constant(16, 16, 8.0, 2.0, [30, 60, 90]);
        let path = dir.path().join("c.mp4");
        std::fs::write(&path, write_mp4(&video).unwrap()).unwrap();
        let decoded = DecodedVideo::open(&path).unwrap();
        let kf = extract_keyframes(
            "c.mp4",
            &decoded,
            &KeyframeParams::default(),
            dir.path(),
            &Executor::sequential(),
        )
        .unwrap();
        assert_eq!(kf.len(), 1);
        assert_eq!(kf[0].t_s, 0.0);
        assert_eq!(kf[0].score, 0.0);
    }
}
