//! Per-asset forensic checks: decodability, overlay and container
//! timestamp consistency, duplicated frames and JPEG recompression.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::case::{MediaAsset, MediaKind};
use crate::exec::Executor;
use crate::media::keyframes::{score_video, KeyframeParams};
use crate::media::still::{estimate_jpeg_quality, read_exif};
use crate::media::{AssetAnalysis, DecodedVideo, OverlayKind};
use crate::text::extract_temporal_cues;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Authenticity {
    NoManipulationDetected,
    SuspectedManipulation,
    Inconclusive,
}

impl Authenticity {
    pub fn label(self) -> &'static str {
        match self {
            Self::NoManipulationDetected => "No manipulation detected",
            Self::SuspectedManipulation => "Manipulation suspected",
            Self::Inconclusive => "Inconclusive",
        }
    }

    /// Suspected manipulation dominates, then inconclusive.
    pub fn combine(items: impl IntoIterator<Item = Authenticity>) -> Authenticity {
        let all: Vec<Authenticity> = items.into_iter().collect();
        if all.contains(&Self::SuspectedManipulation) {
            Self::SuspectedManipulation
        } else if all.contains(&Self::Inconclusive) {
            Self::Inconclusive
        } else {
            Self::NoManipulationDetected
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForensicFindings {
    pub asset_id: String,
    pub authenticity: Authenticity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_type: Option<String>,
    pub artifacts: Vec<String>,
    pub methods: Vec<String>,
    /// One line per failed check.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

impl ForensicFindings {
    fn new(asset_id: &str) -> Self {
        Self {
            asset_id: asset_id.to_string(),
            authenticity: Authenticity::NoManipulationDetected,
            synthetic_type: None,
            artifacts: Vec::new(),
            methods: Vec::new(),
            failures: Vec::new(),
        }
    }

    fn inconclusive(mut self, why: String) -> Self {
        self.authenticity = Authenticity::Inconclusive;
        self.failures.push(why);
        self
    }

    fn fail(&mut self, why: String) {
        self.authenticity = Authenticity::SuspectedManipulation;
        self.failures.push(why);
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{}: {}", self.asset_id, self.authenticity.label());
        if !self.failures.is_empty() {
            s.push_str(&format!(" ({})", self.failures.join("; ")));
        }
        s
    }
}

/// Score below which a frame counts as a repeat of its predecessor.
const FROZEN_SCORE: f64 = 1e-6;
/// Score above which neighbouring frames count as motion.
const MOTION_SCORE: f64 = 0.01;
const HIGH_QUALITY: u8 = 95;

/// Indices of repeated frames whose neighbours both move.
pub fn frozen_frames(scores: &[f64]) -> Vec<usize> {
    (1..scores.len().saturating_sub(1))
        .filter(|&i| scores[i] < FROZEN_SCORE && scores[i - 1] > MOTION_SCORE && scores[i + 1] > MOTION_SCORE)
        .collect()
}

fn overlay_dates(analysis: Option<&AssetAnalysis>) -> BTreeSet<chrono::NaiveDate> {
    analysis
        .and_then(AssetAnalysis::as_video)
        .map(|v| {
            v.overlays()
                .filter(|(_, o)| o.kind == OverlayKind::Timestamp)
                .flat_map(|(_, o)| extract_temporal_cues(&o.text).dates)
                .collect()
        })
        .unwrap_or_default()
}

fn recompression(f: &mut ForensicFindings, jpeg: &[u8]) {
    f.methods.push("recompression analysis (JPEG quantisation)".into());
    match estimate_jpeg_quality(jpeg) {
        Some(q) if q < HIGH_QUALITY => f
            .artifacts
            .push(format!("minor compression artifacts (estimated JPEG quality {q})")),
        Some(q) => f.artifacts.push(format!("estimated JPEG quality {q}")),
        None => f.artifacts.push("no readable quantisation table".into()),
    }
}

fn check_video(asset: &MediaAsset, analysis: Option<&AssetAnalysis>) -> ForensicFindings {
    let mut f = ForensicFindings::new(&asset.asset_id);
    f.methods.push("container decode".into());
    let video = match DecodedVideo::open(&asset.path) {
        Ok(v) => v,
        Err(e) => return f.inconclusive(format!("undecodable: {}", e.detail)),
    };

    f.methods.push("overlay date consistency".into());
    let dates = overlay_dates(analysis);
    if dates.len() > 1 {
        let listed: Vec<String> = dates.iter().map(|d| d.format("%Y-%m-%d").to_string()).collect();
        f.fail(format!("overlay dates disagree across segments: {}", listed.join(", ")));
    }

    if let Some(created) = video.info().creation_time {
        f.methods.push("overlay/container timestamp comparison".into());
        let day = created.date_naive();
        if !dates.is_empty() && !dates.contains(&day) {
            f.fail(format!(
                "container creation date {} matches no overlay date",
                day.format("%Y-%m-%d")
            ));
        }
    }

    f.methods.push("duplicate-frame detection".into());
    match score_video(&video, &KeyframeParams::default(), &Executor::sequential()) {
        Ok(scores) => {
            let frozen = frozen_frames(&scores);
            if let Some(&i) = frozen.first() {
                let t = video.times().get(i).copied().unwrap_or_default();
                f.fail(format!(
                    "frozen frame during motion at {t:.2}s ({} in total)",
                    frozen.len()
                ));
            }
        }
        Err(e) => return f.inconclusive(format!("frame decode failed: {e}")),
    }

    if video.info().is_mjpeg() {
        if let Some(first) = video.sample_bytes(0) {
            recompression(&mut f, first);
        }
    } else {
        f.artifacts.push(format!(
            "lossy {} stream; recompression not assessed",
            video.info().codec
        ));
    }
    f
}

fn check_image(asset: &MediaAsset) -> ForensicFindings {
    let mut f = ForensicFindings::new(&asset.asset_id);
    f.methods.push("image decode".into());
    let bytes = match std::fs::read(&asset.path) {
        Ok(b) => b,
        Err(e) => return f.inconclusive(format!("unreadable: {e}")),
    };
    if let Err(e) = image::load_from_memory(&bytes) {
        return f.inconclusive(format!("undecodable: {e}"));
    }
    f.methods.push("EXIF metadata inspection".into());
    let exif = read_exif(&bytes);
    if exif.is_empty() {
        f.artifacts.push("no camera metadata".into());
    } else if let Some(sw) = exif.get("Software") {
        f.artifacts.push(format!("processed with {sw}"));
    }
    if image::guess_format(&bytes).ok() == Some(image::ImageFormat::Jpeg) {
        recompression(&mut f, &bytes);
    }
    f
}

/// Findings for one asset. Failure to decode gives `Inconclusive`; any
/// failed check gives `SuspectedManipulation`.
pub fn run_forensic_tool(asset: &MediaAsset, analysis: Option<&AssetAnalysis>) -> ForensicFindings {
    match asset.kind {
        MediaKind::Video => check_video(asset, analysis),
        MediaKind::Image => check_image(asset),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{FrameDescription, OverlayText, VideoAnalysis};
    use crate::synth::{textured_scene, write_mp4, SyntheticVideo};
    use chrono::{TimeZone, Utc};
    use std::path::Path;

    fn asset(dir: &Path, name: &str, bytes: &[u8], kind: MediaKind) -> MediaAsset {
        let path = dir.join(name);
        std::fs::write(&path, bytes).unwrap();
        MediaAsset {
            asset_id: name.into(),
            path,
            kind,
            container_format: "mp4".into(),
            duration_s: None,
            resolution: None,
        }
    }

    fn with_overlays(id: &str, texts: &[(&str, f64)]) -> AssetAnalysis {
        let descriptions = texts
            .iter()
            .map(|(t, s)| FrameDescription {
                t_start_s: *s,
                t_end_s: s + 1.0,
                text: "street".into(),
                objects: vec![],
                scene_tags: vec![],
                overlays: vec![OverlayText::classified(*t)],
            })
            .collect();
        AssetAnalysis::Video(VideoAnalysis {
            asset_id: id.into(),
            descriptions,
            keyframes: vec![],
            tech: crate::media::container::TechMetadata {
                resolution: None,
                duration_s: 2.0,
                codec: "jpeg".into(),
                creation_time: None,
                modification_time: None,
                frame_count: 0,
            },
        })
    }

    #[test]
    fn clean_video_passes() {
        let dir = tempfile::tempdir().unwrap();
        let v = SyntheticVideo::scene_cut(32, 24, 10.0, 2.0, 1.0, 3);
        let a = asset(dir.path(), "a.mp4", &write_mp4(&v).unwrap(), MediaKind::Video);
        let f = run_forensic_tool(&a, None);
        assert_eq!(f.authenticity, Authenticity::NoManipulationDetected, "{:?}", f.failures);
        assert!(f.artifacts.iter().any(|x| x.contains("compression")));
    }

    #[test]
    fn frozen_frame_is_suspected() {
        let dir = tempfile::tempdir().unwrap();
        let v = SyntheticVideo::from_fn(32, 24, 10.0, 20, |i| {
            let k = if i == 11 { 10 } else { i };
            textured_scene(32, 24, k as u64)
        });
        let a = asset(dir.path(), "f.mp4", &write_mp4(&v).unwrap(), MediaKind::Video);
        let f = run_forensic_tool(&a, None);
        assert_eq!(f.authenticity, Authenticity::SuspectedManipulation);
        assert!(f.failures[0].contains("1.10s"), "{:?}", f.failures);
    }

    #[test]
    fn overlay_dates_must_agree() {
        let dir = tempfile::tempdir().unwrap();
        let v = SyntheticVideo::constant(16, 16, 5.0, 2.0, [40, 40, 40])
            .with_creation_time(Utc.with_ymd_and_hms(2022, 5, 4, 19, 58, 37).unwrap());
        let a = asset(dir.path(), "o.mp4", &write_mp4(&v).unwrap(), MediaKind::Video);
        let split = with_overlays("o.mp4", &[("04/05/2022 19:58:37", 0.0), ("05/05/2022 10:00:00", 1.0)]);
        let f = run_forensic_tool(&a, Some(&split));
        assert_eq!(f.authenticity, Authenticity::SuspectedManipulation);
        assert!(f.failures[0].contains("2022-05-04, 2022-05-05"));

        let other_day = with_overlays("o.mp4", &[("06/05/2022 19:58:37", 0.0)]);
        let f = run_forensic_tool(&a, Some(&other_day));
        assert!(f.failures.iter().any(|x| x.contains("creation date")));

        let same = with_overlays("o.mp4", &[("04/05/2022 19:58:37", 0.0)]);
        assert_eq!(
            run_forensic_tool(&a, Some(&same)).authenticity,
            Authenticity::NoManipulationDetected
        );
    }

    #[test]
    fn undecodable_is_inconclusive() {
        let dir = tempfile::tempdir().unwrap();
        let a = asset(dir.path(), "bad.mp4", b"not a video", MediaKind::Video);
        assert_eq!(run_forensic_tool(&a, None).authenticity, Authenticity::Inconclusive);
        let i = asset(dir.path(), "bad.jpg", b"nope", MediaKind::Image);
        assert_eq!(run_forensic_tool(&i, None).authenticity, Authenticity::Inconclusive);
    }

    #[test]
    fn frozen_needs_motion_on_both_sides() {
        assert_eq!(frozen_frames(&[0.0, 0.2, 0.0, 0.3]), vec![2]);
        assert!(frozen_frames(&[0.0, 0.2, 0.2, 0.0, 0.0]).is_empty());
        assert!(frozen_frames(&[0.0, 0.0, 0.0]).is_empty());
    }

    #[test]
    fn combine_order() {
        use Authenticity::*;
        assert_eq!(
            Authenticity::combine([NoManipulationDetected, Inconclusive]),
            Inconclusive
        );
        assert_eq!(
            Authenticity::combine([Inconclusive, SuspectedManipulation]),
            SuspectedManipulation
        );
        assert_eq!(Authenticity::combine([]), NoManipulationDetected);
    }
}
