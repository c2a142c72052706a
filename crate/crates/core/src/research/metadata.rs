//! Embedded metadata candidates: container creation time for videos, EXIF
//! date, GPS and device tags for images.

use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::case::{MediaAsset, MediaKind};
use crate::media::container::probe_file;
use crate::media::still::{exif_gps, parse_exif_datetime, read_exif};
use crate::media::{AssetAnalysis, MediaError, OverlayKind};
use crate::text::{extract_temporal_cues, GeoPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetadataKind {
    Timestamp,
    Gps,
    Device,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataCandidate {
    pub asset_id: String,
    pub kind: MetadataKind,
    /// Where the value was read from, e.g. `mvhd creation_time`.
    pub origin: String,
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<NaiveTime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoPoint>,
    /// Agreement with on-screen timestamp overlays; `None` without overlays.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay_match: Option<bool>,
}

impl MetadataCandidate {
    pub fn describe(&self) -> String {
        let mut s = format!(
            "{} {} of {}: {}",
            self.origin,
            kind_label(self.kind),
            self.asset_id,
            self.value
        );
        match self.overlay_match {
            Some(true) => s.push_str(", consistent with the on-screen timestamp"),
            Some(false) => s.push_str(", inconsistent with the on-screen timestamp"),
            None => {}
        }
        s
    }
}

fn kind_label(kind: MetadataKind) -> &'static str {
    match kind {
        MetadataKind::Timestamp => "timestamp",
        MetadataKind::Gps => "GPS position",
        MetadataKind::Device => "device",
    }
}

fn overlay_timestamps(analysis: Option<&AssetAnalysis>) -> Vec<(Option<NaiveDate>, Option<NaiveTime>)> {
    let Some(v) = analysis.and_then(AssetAnalysis::as_video) else {
        return Vec::new();
    };
    v.overlays()
        .filter(|(_, o)| o.kind == OverlayKind::Timestamp)
        .map(|(_, o)| {
            let cues = extract_temporal_cues(&o.text);
            (cues.dates.first().copied(), cues.times.first().copied())
        })
        .collect()
}

/// Same date, and the same minute when both carry a time.
fn agrees(date: NaiveDate, time: NaiveTime, overlay: &(Option<NaiveDate>, Option<NaiveTime>)) -> bool {
    let date_ok = overlay.0.is_none_or(|d| d == date);
    let time_ok = overlay
        .1
        .is_none_or(|t| t.format("%H:%M").to_string() == time.format("%H:%M").to_string());
    date_ok && time_ok && (overlay.0.is_some() || overlay.1.is_some())
}

fn video_candidates(
    asset: &MediaAsset,
    analysis: Option<&AssetAnalysis>,
) -> Result<Vec<MetadataCandidate>, MediaError> {
    let created = match analysis.and_then(AssetAnalysis::as_video) {
        Some(v) => v.tech.creation_time,
        None => {
            probe_file(&asset.path)
                .map_err(|e| MediaError::decode(&asset.asset_id, e.to_string()))?
                .creation_time
        }
    };
    let Some(created) = created else {
        return Ok(Vec::new());
    };
    let (date, time) = (created.date_naive(), created.time());
    let overlays = overlay_timestamps(analysis);
    let overlay_match = (!overlays.is_empty()).then(|| overlays.iter().any(|o| agrees(date, time, o)));
    Ok(vec![MetadataCandidate {
        asset_id: asset.asset_id.clone(),
        kind: MetadataKind::Timestamp,
        origin: "container".into(),
        value: created.format("%Y-%m-%d %H:%M:%S").to_string(),
        date: Some(date),
        time: Some(time),
        geo: None,
        overlay_match,
    }])
}

fn image_candidates(asset: &MediaAsset) -> Result<Vec<MetadataCandidate>, MediaError> {
    let bytes = std::fs::read(&asset.path)?;
    let exif = read_exif(&bytes);
    let mut out = Vec::new();
    let base = |kind, value: String| MetadataCandidate {
        asset_id: asset.asset_id.clone(),
        kind,
        origin: "EXIF".into(),
        value,
        date: None,
        time: None,
        geo: None,
        overlay_match: None,
    };
    let stamp = ["DateTimeOriginal", "DateTime"].iter().find_map(|t| exif.get(*t));
    if let Some(raw) = stamp {
        if let Some(dt) = parse_exif_datetime(raw) {
            let mut c = base(MetadataKind::Timestamp, raw.clone());
            c.date = Some(dt.date());
            c.time = Some(dt.time());
            out.push(c);
        }
    }
    if let Some(geo) = exif_gps(&bytes) {
        let mut c = base(MetadataKind::Gps, format!("{:.6}, {:.6}", geo.lat, geo.lon));
        c.geo = Some(geo);
        out.push(c);
    }
    let device: Vec<&str> = ["Make", "Model"]
        .iter()
        .filter_map(|t| exif.get(*t))
        .map(String::as_str)
        .collect();
    if !device.is_empty() {
        out.push(base(MetadataKind::Device, device.join(" ")));
    }
    Ok(out)
}

/// Metadata candidates for one asset; files without metadata give none.
pub fn run_metadata_tool(
    asset: &MediaAsset,
    analysis: Option<&AssetAnalysis>,
) -> Result<Vec<MetadataCandidate>, MediaError> {
    match asset.kind {
        MediaKind::Video => video_candidates(asset, analysis),
        MediaKind::Image => image_candidates(asset),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{jpeg_with_exif, plain_jpeg, textured_scene, write_mp4, ExifFields, SyntheticVideo};
    use chrono::{TimeZone, Utc};

    fn asset(dir: &std::path::Path, name: &str, bytes: &[u8], kind: MediaKind) -> MediaAsset {
        let path = dir.join(name);
        std::fs::write(&path, bytes).unwrap();
        MediaAsset {
            asset_id: name.into(),
            path,
            kind,
            container_format: "x".into(),
            duration_s: None,
            resolution: None,
        }
    }

    #[test]
    fn exif_fields_become_candidates() {
        let dir = tempfile::tempdir().unwrap();
        let fields = ExifFields {
            make: Some("Canon".into()),
            model: Some("EOS 5D".into()),
            date_time_original: Some("2022:05:04 19:58:37".into()),
            gps: Some((48.4647, 35.0462)),
        };
        let bytes = jpeg_with_exif(&textured_scene(32, 32, 1), 90, &fields).unwrap();
        let a = asset(dir.path(), "p.jpg", &bytes, MediaKind::Image);
        let c = run_metadata_tool(&a, None).unwrap();
        let kinds: Vec<MetadataKind> = c.iter().map(|x| x.kind).collect();
        assert_eq!(
            kinds,
            vec![MetadataKind::Timestamp, MetadataKind::Gps, MetadataKind::Device]
        );
        assert_eq!(c[0].value, "2022:05:04 19:58:37");
        assert_eq!(c[0].date, NaiveDate::from_ymd_opt(2022, 5, 4));
        assert!((c[1].geo.unwrap().lon - 35.0462).abs() < 1e-4);
        assert_eq!(c[2].value, "Canon EOS 5D");
    }

    #[test]
    fn stripped_image_has_no_candidates() {
        let dir = tempfile::tempdir().unwrap();
        let a = asset(
            dir.path(),
            "s.jpg",
            &plain_jpeg(&textured_scene(16, 16, 2), 80).unwrap(),
            MediaKind::Image,
        );
        assert!(run_metadata_tool(&a, None).unwrap().is_empty());
    }

    #[test]
    fn container_time_without_overlays() {
        let dir = tempfile::tempdir().unwrap();
        let v = SyntheticVideo::constant(16, 16, 5.0, 1.0, [9, 9, 9])
            .with_creation_time(Utc.with_ymd_and_hms(2022, 5, 4, 19, 58, 37).unwrap());
        let a = asset(dir.path(), "v.mp4", &write_mp4(&v).unwrap(), MediaKind::Video);
        let c = run_metadata_tool(&a, None).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].value, "2022-05-04 19:58:37");
        assert_eq!(c[0].overlay_match, None);
        let v = SyntheticVideo::constant(16, 16, 5.0, 1.0, [9, 9, 9]);
        let a = asset(dir.path(), "n.mp4", &write_mp4(&v).unwrap(), MediaKind::Video);
        assert!(run_metadata_tool(&a, None).unwrap().is_empty());
    }

    #[test]
    fn overlay_agreement() {
        let d = NaiveDate::from_ymd_opt(2022, 5, 4).unwrap();
        let t = NaiveTime::from_hms_opt(19, 58, 37).unwrap();
        assert!(agrees(d, t, &(Some(d), NaiveTime::from_hms_opt(19, 58, 0))));
        assert!(!agrees(d, t, &(NaiveDate::from_ymd_opt(2022, 5, 5), None)));
        assert!(!agrees(d, t, &(None, None)));
    }
}
