//! Case packages: loading a case directory, validating it, and describing
//! the media mix of a batch.
//!
//! A case directory holds media files (`.mp4` videos, `.jpg` images) and an
//! optional `context.yaml` manifest with top-level keys `captions`,
//! `descriptions`, `posts`, `articles`, `metadata` and `clues`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::media::container;

pub const MANIFEST_NAMES: [&str; 2] = ["context.yaml", "context.yml"];

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error("case directory {0} does not exist or is not a directory")]
    NotADirectory(PathBuf),
    #[error("no supported media file (mp4, jpg) in {0}")]
    MissingMedia(PathBuf),
    #[error("unsupported media format `{extension}` for {path}")]
    UnsupportedFormat { path: PathBuf, extension: String },
    #[error("malformed manifest {path}{}: {message}", location(*line, *column, field.as_deref()))]
    MalformedManifest {
        path: PathBuf,
        line: Option<usize>,
        column: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error("empty batch")]
    EmptyBatch,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(line: Option<usize>, column: Option<usize>, field: Option<&str>) -> String {
    let mut s = String::new();
    if let Some(l) = line {
        s.push_str(&format!(" at line {l}"));
        if let Some(c) = column {
            s.push_str(&format!(", column {c}"));
        }
    }
    if let Some(f) = field {
        s.push_str(&format!(" (field `{f}`)"));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MediaKind {
    Video,
    Image,
}

impl MediaKind {
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "mp4" => Some(Self::Video),
            "jpg" => Some(Self::Image),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaAsset {
    /// File name without directory, e.g. `ID43-2.mp4`.
    pub asset_id: String,
    pub path: PathBuf,
    pub kind: MediaKind,
    pub container_format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SocialPost {
    pub text: String,
    pub platform: String,
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContextualInfo {
    #[serde(default)]
    pub captions: Vec<String>,
    #[serde(default)]
    pub descriptions: Vec<String>,
    #[serde(default)]
    pub posts: Vec<SocialPost>,
    #[serde(default)]
    pub articles: Vec<String>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl ContextualInfo {
    pub fn is_empty(&self) -> bool {
        self.captions.is_empty()
            && self.descriptions.is_empty()
            && self.posts.is_empty()
            && self.articles.is_empty()
            && self.metadata.is_empty()
    }

    pub fn urls(&self) -> impl Iterator<Item = &str> {
        self.posts
            .iter()
            .map(|p| p.url.as_str())
            .chain(self.articles.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasePackage {
    pub case_id: String,
    pub assets: Vec<MediaAsset>,
    pub context: ContextualInfo,
    #[serde(default)]
    pub clues: Vec<String>,
}

impl CasePackage {
    pub fn asset(&self, asset_id: &str) -> Option<&MediaAsset> {
        self.assets.iter().find(|a| a.asset_id == asset_id)
    }

    pub fn has_video(&self) -> bool {
        self.assets.iter().any(|a| a.kind == MediaKind::Video)
    }

    pub fn has_image(&self) -> bool {
        self.assets.iter().any(|a| a.kind == MediaKind::Image)
    }
}

/// On-disk shape of `context.yaml`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    #[serde(default)]
    captions: Vec<String>,
    #[serde(default)]
    descriptions: Vec<String>,
    #[serde(default)]
    posts: Vec<SocialPost>,
    #[serde(default)]
    articles: Vec<String>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
    #[serde(default)]
    clues: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CaseError + '_ {
    move |source| CaseError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads a case directory. Every regular, non-hidden file other than the
/// manifest must be a supported media file.
pub fn load_case(dir: &Path) -> Result<CasePackage, CaseError> {
    if !dir.is_dir() {
        return Err(CaseError::NotADirectory(dir.to_path_buf()));
    }
    let case_id = dir
        .canonicalize()
        .map_err(io_err(dir))?
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();

    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_err(dir))?;
    entries.sort();

    let mut assets = Vec::new();
    let mut manifest_path = None;
    for path in entries {
        if !path.is_file() {
            continue;
        }
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        if name.starts_with('.') {
            continue;
        }
        if MANIFEST_NAMES.contains(&name.as_str()) {
            manifest_path = Some(path);
            continue;
        }
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().into_owned())
            .unwrap_or_default();
        let kind = MediaKind::from_extension(&ext).ok_or_else(|| CaseError::UnsupportedFormat {
            path: path.clone(),
            extension: ext.clone(),
        })?;
        assets.push(describe_asset(path, name, kind, ext.to_ascii_lowercase()));
    }
    if assets.is_empty() {
        return Err(CaseError::MissingMedia(dir.to_path_buf()));
    }

    let manifest = match manifest_path {
        Some(path) => parse_manifest(&path)?,
        None => Manifest::default(),
    };
    Ok(CasePackage {
        case_id,
        assets,
        context: ContextualInfo {
            captions: manifest.captions,
            descriptions: manifest.descriptions,
            posts: manifest.posts,
            articles: manifest.articles,
            metadata: manifest.metadata,
        },
        clues: manifest.clues,
    })
}

/// Reads container headers only; failures leave the optional fields empty
/// and surface later through [`validate_case`].
fn describe_asset(path: PathBuf, asset_id: String, kind: MediaKind, ext: String) -> MediaAsset {
    let (duration_s, resolution) = match kind {
        MediaKind::Video => match container::probe_file(&path) {
            Ok(info) => (
                Some(info.duration_s),
                (info.width > 0 && info.height > 0).then_some((info.width, info.height)),
            ),
            Err(e) => {
                tracing::warn!(asset = %asset_id, error = %e, "container probe failed");
                (None, None)
            }
        },
        MediaKind::Image => (None, image::image_dimensions(&path).ok()),
    };
    MediaAsset {
        asset_id,
        path,
        kind,
        container_format: ext,
        duration_s,
        resolution,
    }
}

fn parse_manifest(path: &Path) -> Result<Manifest, CaseError> {
    let raw = fs::read(path).map_err(io_err(path))?;
    let text = String::from_utf8(raw).map_err(|e| CaseError::MalformedManifest {
        path: path.to_path_buf(),
        line: None,
        column: None,
        field: None,
        message: format!("not valid UTF-8: {e}"),
    })?;
    if text.trim().is_empty() {
        return Ok(Manifest::default());
    }
    serde_yaml::from_str::<Manifest>(&text).map_err(|e| {
        let message = e.to_string();
        let field = message
            .split('`')
            .nth(1)
            .filter(|_| message.contains("field"))
            .map(str::to_string);
        CaseError::MalformedManifest {
            path: path.to_path_buf(),
            line: e.location().map(|l| l.line()),
            column: e.location().map(|l| l.column()),
            field,
            message,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Warning,
    Error,
}

/// Stable issue codes.
pub mod codes {
    pub const EMPTY_CASE_ID: &str = "EMPTY_CASE_ID";
    pub const NO_ASSETS: &str = "NO_ASSETS";
    pub const DUPLICATE_ASSET_ID: &str = "DUPLICATE_ASSET_ID";
    pub const VIDEO_NO_DURATION: &str = "VIDEO_NO_DURATION";
    pub const IMAGE_HAS_DURATION: &str = "IMAGE_HAS_DURATION";
    pub const BAD_DURATION: &str = "BAD_DURATION";
    pub const BAD_RESOLUTION: &str = "BAD_RESOLUTION";
    pub const UNREADABLE_ASSET: &str = "UNREADABLE_ASSET";
    pub const KIND_EXTENSION_MISMATCH: &str = "KIND_EXTENSION_MISMATCH";
    pub const BAD_URL: &str = "BAD_URL";
    pub const EMPTY_METADATA_KEY: &str = "EMPTY_METADATA_KEY";
    pub const DUPLICATE_CASE_ID: &str = "DUPLICATE_CASE_ID";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub code: String,
    pub subject: String,
    pub message: String,
}

impl ValidationIssue {
    fn new(severity: Severity, code: &str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity,
            code: code.to_string(),
            subject: subject.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} {} [{}]: {}",
            self.severity, self.code, self.subject, self.message
        )
    }
}

pub fn is_valid_url(s: &str) -> bool {
    url::Url::parse(s).is_ok()
}

/// Checks every type invariant plus file readability. Never fails; an empty
/// result means the case is well formed.
pub fn validate_case(case: &CasePackage) -> Vec<ValidationIssue> {
    use codes::*;
    let mut issues = Vec::new();
    if case.case_id.trim().is_empty() {
        issues.push(ValidationIssue::new(
            Severity::Error,
            EMPTY_CASE_ID,
            "case",
            "case_id is empty",
        ));
    }
    if case.assets.is_empty() {
        issues.push(ValidationIssue::new(
            Severity::Error,
            NO_ASSETS,
            &case.case_id,
            "case has no media",
        ));
    }
    let mut seen = BTreeSet::new();
    for asset in &case.assets {
        let id = asset.asset_id.as_str();
        if !seen.insert(id) {
            issues.push(ValidationIssue::new(
                Severity::Error,
                DUPLICATE_ASSET_ID,
                id,
                "asset_id repeated",
            ));
        }
        match (asset.kind, asset.duration_s) {
            (MediaKind::Video, None) => issues.push(ValidationIssue::new(
                Severity::Error,
                VIDEO_NO_DURATION,
                id,
                "video asset has no duration",
            )),
            (MediaKind::Video, Some(d)) if !(d.is_finite() && d >= 0.0) => issues.push(ValidationIssue::new(
                Severity::Error,
                BAD_DURATION,
                id,
                format!("duration {d} is not a non-negative number"),
            )),
            (MediaKind::Image, Some(_)) => issues.push(ValidationIssue::new(
                Severity::Error,
                IMAGE_HAS_DURATION,
                id,
                "image asset carries a duration",
            )),
            _ => {}
        }
        if let Some((w, h)) = asset.resolution {
            if w == 0 || h == 0 {
                issues.push(ValidationIssue::new(
                    Severity::Error,
                    BAD_RESOLUTION,
                    id,
                    format!("resolution {w}x{h} has a zero component"),
                ));
            }
        }
        if MediaKind::from_extension(&asset.container_format) != Some(asset.kind) {
            issues.push(ValidationIssue::new(
                Severity::Warning,
                KIND_EXTENSION_MISMATCH,
                id,
                format!(
                    "container `{}` does not match kind {:?}",
                    asset.container_format, asset.kind
                ),
            ));
        }
        if let Err(e) = fs::File::open(&asset.path) {
            issues.push(ValidationIssue::new(
                Severity::Error,
                UNREADABLE_ASSET,
                id,
                format!("{}: {e}", asset.path.display()),
            ));
        }
    }
    for url in case.context.urls() {
        if !is_valid_url(url) {
            issues.push(ValidationIssue::new(
                Severity::Warning,
                BAD_URL,
                url,
                "not a syntactically valid URL",
            ));
        }
    }
    for key in case.context.metadata.keys() {
        if key.trim().is_empty() {
            issues.push(ValidationIssue::new(
                Severity::Warning,
                EMPTY_METADATA_KEY,
                "metadata",
                "empty metadata key",
            ));
        }
    }
    issues
}

/// Batch-level checks: per-case issues plus case_id uniqueness.
pub fn validate_batch(cases: &[CasePackage]) -> Vec<ValidationIssue> {
    let mut issues: Vec<ValidationIssue> = cases.iter().flat_map(validate_case).collect();
    let mut seen = BTreeSet::new();
    for case in cases {
        if !seen.insert(case.case_id.as_str()) {
            issues.push(ValidationIssue::new(
                Severity::Error,
                codes::DUPLICATE_CASE_ID,
                &case.case_id,
                "case_id repeated within batch",
            ));
        }
    }
    issues
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixStats {
    pub cases: usize,
    pub video_cases: usize,
    pub image_only_cases: usize,
    pub video_fraction: f64,
    pub image_only_fraction: f64,
}

impl fmt::Display for MixStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cases={} video_fraction={:.4} image_only_fraction={:.4}",
            self.cases, self.video_fraction, self.image_only_fraction
        )
    }
}

/// Share of cases containing at least one video, and of image-only cases.
pub fn media_mix_stats(cases: &[CasePackage]) -> Result<MixStats, CaseError> {
    if cases.is_empty() {
        return Err(CaseError::EmptyBatch);
    }
    let video_cases = cases.iter().filter(|c| c.has_video()).count();
    let image_only_cases = cases.iter().filter(|c| c.has_image() && !c.has_video()).count();
    let n = cases.len() as f64;
    Ok(MixStats {
        cases: cases.len(),
        video_cases,
        image_only_cases,
        video_fraction: video_cases as f64 / n,
        image_only_fraction: image_only_cases as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{plain_jpeg, write_mp4, SyntheticVideo};
    use image::RgbImage;

    fn write_video(dir: &Path, name: &str) {
        let bytes = write_mp4(&SyntheticVideo::constant(16, 16, 5.0, 1.0, [1, 2, 3])).unwrap();
        fs::write(dir.join(name), bytes).unwrap();
    }

    fn write_image(dir: &Path, name: &str) {
        fs::write(dir.join(name), plain_jpeg(&RgbImage::new(8, 6), 90).unwrap()).unwrap();
    }

    fn case_dir(name: &str) -> (tempfile::TempDir, PathBuf) {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join(name);
        fs::create_dir(&dir).unwrap();
        (tmp, dir)
    }

    #[test]
    fn loads_three_videos() {
        let (_tmp, dir) = case_dir("ID43-3");
        for n in ["ID43-1.mp4", "ID43-2.mp4", "ID43-3.mp4"] {
            write_video(&dir, n);
        }
        let case = load_case(&dir).unwrap();
        assert_eq!(case.case_id, "ID43-3");
        assert_eq!(case.assets.len(), 3);
        assert!(case.assets.iter().all(|a| a.kind == MediaKind::Video));
        assert_eq!(case.assets[1].asset_id, "ID43-2.mp4");
        assert_eq!(case.assets[0].duration_s, Some(1.0));
        assert!(validate_case(&case).is_empty());
        assert_eq!(load_case(&dir).unwrap(), case);
    }

    #[test]
    fn single_image_no_manifest() {
        let (_tmp, dir) = case_dir("ID260");
        write_image(&dir, "photo.jpg");
        let case = load_case(&dir).unwrap();
        assert_eq!(case.assets.len(), 1);
        assert_eq!(case.assets[0].kind, MediaKind::Image);
        assert_eq!(case.assets[0].resolution, Some((8, 6)));
        assert!(case.context.is_empty());
        assert!(validate_case(&case).is_empty());
    }

    #[test]
    fn empty_dir_is_missing_media() {
        let (_tmp, dir) = case_dir("empty");
        assert!(matches!(load_case(&dir), Err(CaseError::MissingMedia(_))));
    }

    #[test]
    fn unknown_extension_is_reported() {
        let (_tmp, dir) = case_dir("c");
        write_image(&dir, "a.jpg");
        fs::write(dir.join("clip.avi"), b"x").unwrap();
        match load_case(&dir) {
            Err(CaseError::UnsupportedFormat { extension, .. }) => assert_eq!(extension, "avi"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn manifest_is_parsed() {
        let (_tmp, dir) = case_dir("c");
        write_image(&dir, "a.jpg");
        fs::write(
            dir.join("context.yaml"),
            "captions:\n  - Strike on a bridge in Dnipro\nposts:\n  - text: hello\n    platform: Twitter\n    url: https://twitter.com/x/status/1\n    timestamp: 2022-05-04T17:00:00Z\nmetadata:\n  event_type: strike\nclues:\n  - possibly reshared\n",
        )
        .unwrap();
        let case = load_case(&dir).unwrap();
        assert_eq!(case.context.captions, vec!["Strike on a bridge in Dnipro"]);
        assert_eq!(case.context.posts[0].platform, "Twitter");
        assert_eq!(case.context.metadata["event_type"], "strike");
        assert_eq!(case.clues, vec!["possibly reshared"]);
    }

    #[test]
    fn malformed_manifest_has_diagnostics() {
        let (_tmp, dir) = case_dir("c");
        write_image(&dir, "a.jpg");
        fs::write(dir.join("context.yaml"), "captions:\n  - ok\nbogus_key: 1\n").unwrap();
        match load_case(&dir) {
            Err(CaseError::MalformedManifest { line, field, .. }) => {
                assert_eq!(line, Some(3));
                assert_eq!(field.as_deref(), Some("bogus_key"));
            }
            other => panic!("unexpected {other:?}"),
        }
        fs::write(dir.join("context.yaml"), "captions: [unterminated\n").unwrap();
        assert!(matches!(
            load_case(&dir),
            Err(CaseError::MalformedManifest { line: Some(_), .. })
        ));
    }

    #[test]
    fn video_without_duration_is_an_error() {
        let (_tmp, dir) = case_dir("c");
        write_video(&dir, "v.mp4");
        let mut case = load_case(&dir).unwrap();
        case.assets[0].duration_s = None;
        let issues = validate_case(&case);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].code, codes::VIDEO_NO_DURATION);
        assert_eq!(issues[0].severity, Severity::Error);
    }

    #[test]
    fn bad_url_is_a_warning() {
        let (_tmp, dir) = case_dir("c");
        write_image(&dir, "a.jpg");
        let mut case = load_case(&dir).unwrap();
        case.context.articles.push("ht!tp:bad".into());
        // Oracle: the standard URL parser rejects the same string.
        assert!(url::Url::parse("ht!tp:bad").is_err());
        let issues = validate_case(&case);
        assert_eq!(issues.len(), 1);
        assert_eq!(
            (issues[0].severity, issues[0].code.as_str()),
            (Severity::Warning, codes::BAD_URL)
        );
    }

    #[test]
    fn duplicate_case_ids_in_batch() {
        let (_tmp, dir) = case_dir("same");
        write_image(&dir, "a.jpg");
        let case = load_case(&dir).unwrap();
        let issues = validate_batch(&[case.clone(), case]);
        assert!(issues.iter().any(|i| i.code == codes::DUPLICATE_CASE_ID));
    }

    fn synthetic_case(id: usize, video: bool, image: bool) -> CasePackage {
        let mut assets = Vec::new();
        if video {
            assets.push(MediaAsset {
                asset_id: format!("{id}.mp4"),
                path: PathBuf::from(format!("{id}.mp4")),
                kind: MediaKind::Video,
                container_format: "mp4".into(),
                duration_s: Some(1.0),
                resolution: None,
            });
        }
        if image {
            assets.push(MediaAsset {
                asset_id: format!("{id}.jpg"),
                path: PathBuf::from(format!("{id}.jpg")),
                kind: MediaKind::Image,
                container_format: "jpg".into(),
                duration_s: None,
                resolution: None,
            });
        }
        CasePackage {
            case_id: format!("C{id}"),
            assets,
            context: ContextualInfo::default(),
            clues: vec![],
        }
    }

    #[test]
    fn mix_stats_examples() {
        let batch: Vec<_> = (0..50).map(|i| synthetic_case(i, i < 36, i >= 36)).collect();
        let stats = media_mix_stats(&batch).unwrap();
        assert_eq!(stats.video_fraction, 0.72);
        assert_eq!(format!("{:.4}", stats.video_fraction), "0.7200");
        assert_eq!(stats.image_only_fraction, 0.28);

        let single = media_mix_stats(&[synthetic_case(0, false, true)]).unwrap();
        assert_eq!(single.video_fraction, 0.0);
        assert_eq!(
            media_mix_stats(&[synthetic_case(0, true, false)])
                .unwrap()
                .video_fraction,
            1.0
        );

        let ten: Vec<_> = (0..10).map(|i| synthetic_case(i, i < 7, i >= 7)).collect();
        assert_eq!(
            format!("{:.4}", media_mix_stats(&ten).unwrap().video_fraction),
            "0.7000"
        );
        assert!(matches!(media_mix_stats(&[]), Err(CaseError::EmptyBatch)));
    }

    #[test]
    fn mixed_case_counts_as_video() {
        let stats = media_mix_stats(&[synthetic_case(0, true, true), synthetic_case(1, false, true)]).unwrap();
        assert_eq!(stats.video_fraction, 0.5);
        assert_eq!(stats.image_only_fraction, 0.5);
        assert!(stats.video_fraction + stats.image_only_fraction <= 1.0);
    }
}
