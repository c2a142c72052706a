//! Pattern rules for on-screen overlay text.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::text::{extract_temporal_cues, has_location};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum OverlayKind {
    Timestamp,
    Location,
    #[default]
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayText {
    pub text: String,
    #[serde(default)]
    pub kind: OverlayKind,
}

impl OverlayText {
    pub fn classified(text: impl Into<String>) -> Self {
        let text = text.into();
        let kind = classify_overlay(&text);
        Self { text, kind }
    }
}

fn mac_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    R.get_or_init(|| Regex::new(r"(?i)\b[0-9a-f]{2}(?:[:-][0-9a-f]{2}){5}\b").expect("static pattern"))
}

/// Date/time text is a timestamp, gazetteer or street-like text a
/// location. Hardware identifiers such as MAC addresses stay `Other`.
pub fn classify_overlay(text: &str) -> OverlayKind {
    if mac_re().is_match(text) {
        return OverlayKind::Other;
    }
    if !extract_temporal_cues(text).is_empty() {
        OverlayKind::Timestamp
    } else if has_location(text) {
        OverlayKind::Location
    } else {
        OverlayKind::Other
    }
}
