//! Stage 6: the five-section Markdown report and its structured twin.

mod markdown;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::case::{CasePackage, MediaKind};
use crate::evidence::{Evidence, EvidenceCategory, StoreExport, Verdict, VerdictStatus};
use crate::media::AssetAnalysis;
use crate::planner::{ClaimCategory, ToolKind, VerificationPlan};
use crate::research::forensic::{Authenticity, ForensicFindings};
use crate::text::GeoPoint;

pub use markdown::{parse_markdown_structure, to_markdown, MarkdownStructure, HEADINGS, SUBSECTIONS};

pub const REPORT_SCHEMA: u32 = 1;

/// A statement with the evidence ids backing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cited {
    pub text: String,
    pub evidence_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub status: VerdictStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<NaiveTime>,
    pub videos: usize,
    pub images: usize,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentClassification {
    pub content_category: String,
    pub event_type: String,
    /// Scene tags from the frame descriptions.
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub platforms: Vec<String>,
    #[serde(default)]
    pub involved_entities: Vec<String>,
    pub claims: Vec<ClaimLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimLine {
    pub claim_id: String,
    pub category: ClaimCategory,
    pub text: String,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FiveW {
    pub source_details: Vec<Cited>,
    #[serde(rename = "where")]
    pub where_: Vec<Cited>,
    pub when: Vec<Cited>,
    pub who: Vec<Cited>,
    pub why: Vec<Cited>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForensicSection {
    pub overall: Authenticity,
    pub assets: Vec<ForensicFindings>,
    pub cross_checks: Vec<Cited>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OtherFindings {
    pub related: Vec<Cited>,
    pub disputed: Vec<Cited>,
    pub gaps: Vec<String>,
    pub aborted_sections: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub report_schema: u32,
    pub case_id: String,
    pub summary: CaseSummary,
    pub classification: ContentClassification,
    pub verified: FiveW,
    /// Keyframe paths relative to the output directory.
    pub images: Vec<String>,
    pub forensics: ForensicSection,
    pub other: OtherFindings,
    pub verdict: Verdict,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("citation {0} does not resolve to any evidence item")]
    DanglingCitation(String),
    #[error("citation {0} in the verified section is not a verified fact")]
    UnverifiedCitation(String),
    #[error("malformed report: {0}")]
    Malformed(String),
}

/// Everything the report draws on.
pub struct ReportInputs<'a> {
    pub case: &'a CasePackage,
    pub plan: &'a VerificationPlan,
    pub store: &'a StoreExport,
    pub analyses: &'a [AssetAnalysis],
    pub forensics: &'a [ForensicFindings],
    pub aborted_sections: &'a [String],
}

/// Renders `d` as DD/MM/YYYY.
pub fn format_date(d: NaiveDate) -> String {
    d.format("%d/%m/%Y").to_string()
}

/// Renders a coordinate as `48.4647° N, 35.0462° E`.
pub fn format_geo(g: &GeoPoint) -> String {
    let ns = if g.lat >= 0.0 { 'N' } else { 'S' };
    let ew = if g.lon >= 0.0 { 'E' } else { 'W' };
    format!("{:.4}° {ns}, {:.4}° {ew}", g.lat.abs(), g.lon.abs())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Groups identical statements, keeping first-seen order and id order.
fn group(items: impl IntoIterator<Item = (String, String)>) -> Vec<Cited> {
    let mut out: Vec<Cited> = Vec::new();
    for (text, id) in items {
        let text = one_line(&text);
        if text.is_empty() {
            continue;
        }
        match out.iter_mut().find(|c| c.text == text) {
            Some(c) => {
                if !c.evidence_ids.contains(&id) {
                    c.evidence_ids.push(id);
                }
            }
            None => out.push(Cited {
                text,
                evidence_ids: vec![id],
            }),
        }
    }
    out
}

fn rank(a: &&Evidence, b: &&Evidence) -> std::cmp::Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(
            b.assessment
                .independent_corroborations
                .cmp(&a.assessment.independent_corroborations),
        )
        .then(a.evidence_id.cmp(&b.evidence_id))
}

fn five_w(verified: &[&Evidence]) -> FiveW {
    let with_ctx: Vec<(&Evidence, &crate::research::SourceContext)> = verified
        .iter()
        .filter_map(|e| e.context.as_ref().map(|c| (*e, c)))
        .collect();
    let source_details = group(with_ctx.iter().map(|(e, c)| {
        let mut text = one_line(&c.source_detail);
        if !text.contains(&e.source.url) {
            text = format!("{text} ({})", e.source.url);
        }
        (text, e.evidence_id.clone())
    }));
    let where_ = group(with_ctx.iter().filter_map(|(e, c)| {
        let w = c.where_.as_ref()?;
        let text = match (w.place_name.trim(), w.geo) {
            ("", Some(g)) => format_geo(&g),
            (p, Some(g)) => format!("{p} ({})", format_geo(&g)),
            (p, None) => p.to_string(),
        };
        Some((text, e.evidence_id.clone()))
    }));
    let when = group(with_ctx.iter().filter_map(|(e, c)| {
        let w = c.when.as_ref()?;
        let text = match (w.date, w.time) {
            (Some(d), Some(t)) => format!("{}, {}", format_date(d), t.format("%H:%M:%S")),
            (Some(d), None) => format_date(d),
            (None, Some(t)) => t.format("%H:%M:%S").to_string(),
            (None, None) => return None,
        };
        Some((text, e.evidence_id.clone()))
    }));
    let who = group(
        with_ctx
            .iter()
            .filter_map(|(e, c)| Some((c.who.clone()?, e.evidence_id.clone()))),
    );
    let why = group(
        with_ctx
            .iter()
            .filter_map(|(e, c)| Some((c.why.clone()?, e.evidence_id.clone()))),
    );
    FiveW {
        source_details,
        where_,
        when,
        who,
        why,
    }
}

fn summary(inputs: &ReportInputs, verified: &[&Evidence]) -> CaseSummary {
    let category_of = |e: &Evidence| {
        e.claim_ids
            .iter()
            .filter_map(|id| inputs.plan.claim(id))
            .map(|c| c.category)
            .collect::<BTreeSet<_>>()
    };
    let mut ranked: Vec<&Evidence> = verified.to_vec();
    ranked.sort_by(rank);
    let of = |cat: ClaimCategory| ranked.iter().copied().filter(move |e| category_of(e).contains(&cat));
    let geo_ev = of(ClaimCategory::Geographic).find(|e| e.geo().is_some());
    // The place named alongside the coordinates, when there is one.
    let place = geo_ev
        .into_iter()
        .chain(of(ClaimCategory::Geographic))
        .filter_map(|e| e.context.as_ref()?.where_.as_ref())
        .map(|w| w.place_name.trim().to_string())
        .find(|p| !p.is_empty());
    let date = of(ClaimCategory::Temporal).find_map(|e| e.date());
    let time = of(ClaimCategory::Temporal).find_map(|e| e.context.as_ref()?.when.as_ref()?.time);
    let count = |k| inputs.case.assets.iter().filter(|a| a.kind == k).count();
    CaseSummary {
        status: inputs.store.verdict.status,
        place,
        geo: geo_ev.and_then(Evidence::geo),
        date,
        time,
        videos: count(MediaKind::Video),
        images: count(MediaKind::Image),
        rationale: inputs.store.verdict.rationale.clone(),
    }
}

fn classification(inputs: &ReportInputs) -> ContentClassification {
    let meta = &inputs.case.context.metadata;
    let (videos, images) = (inputs.case.has_video(), inputs.case.has_image());
    let derived = match (videos, images) {
        (true, true) => "Mixed media",
        (true, false) => "Video",
        (false, true) => "Image",
        (false, false) => "Unknown",
    };
    let v = &inputs.store.verdict;
    let claims = inputs
        .plan
        .claims
        .iter()
        .map(|c| {
            let label = if v.verified_claims.contains(&c.claim_id) {
                "verified"
            } else if v.disputed_claims.contains(&c.claim_id) {
                "disputed"
            } else {
                "unverified"
            };
            ClaimLine {
                claim_id: c.claim_id.clone(),
                category: c.category,
                text: one_line(&c.text),
                label: label.into(),
            }
        })
        .collect();
    let tags: BTreeSet<String> = inputs
        .analyses
        .iter()
        .filter_map(AssetAnalysis::as_video)
        .flat_map(|v| &v.descriptions)
        .flat_map(|d| &d.scene_tags)
        .map(|t| one_line(t))
        .filter(|t| !t.is_empty())
        .collect();
    let platforms: BTreeSet<String> = inputs
        .case
        .context
        .posts
        .iter()
        .map(|p| one_line(&p.platform))
        .collect();
    let who = inputs
        .store
        .evidence
        .iter()
        .filter(|e| e.category == EvidenceCategory::VerifiedFact)
        .filter_map(|e| e.context.as_ref()?.who.clone());
    let entities: BTreeSet<String> = inputs
        .plan
        .claims
        .iter()
        .flat_map(|c| c.entities())
        .chain(who)
        .map(|e| one_line(&e))
        .filter(|e| !e.is_empty())
        .collect();
    ContentClassification {
        tags: tags.into_iter().collect(),
        platforms: platforms.into_iter().filter(|p| !p.is_empty()).collect(),
        involved_entities: entities.into_iter().collect(),
        content_category: meta
            .get("content_category")
            .map_or_else(|| derived.into(), |s| one_line(s)),
        event_type: meta
            .get("event_type")
            .map_or_else(|| "Unspecified".into(), |s| one_line(s)),
        claims,
    }
}

fn images(inputs: &ReportInputs, verified: &[&Evidence]) -> Vec<String> {
    let mut slugs: BTreeSet<String> = verified.iter().filter_map(|e| e.keyframe.clone()).collect();
    for a in inputs.analyses {
        if let Some(k) = a.as_video().and_then(|v| v.top_keyframe()) {
            slugs.insert(k.slug.clone());
        }
    }
    slugs.into_iter().map(|s| format!("report/{s}.jpg")).collect()
}

fn evidence_line(e: &Evidence) -> String {
    let who = if e.source.publisher.is_empty() {
        e.domain.clone()
    } else {
        e.source.publisher.clone()
    };
    format!(
        "{} ({}, {}, confidence {:.2})",
        one_line(&e.content),
        who,
        e.source.url,
        e.confidence
    )
}

fn other(inputs: &ReportInputs) -> OtherFindings {
    let store = inputs.store;
    let related = store
        .evidence
        .iter()
        .filter(|e| e.category == EvidenceCategory::RelatedInformation && e.tool != ToolKind::ForensicCheck)
        .map(|e| Cited {
            text: evidence_line(e),
            evidence_ids: vec![e.evidence_id.clone()],
        })
        .collect();
    let mut by_pair: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    for p in &store.conflicts {
        by_pair
            .entry((p.a.clone(), p.b.clone()))
            .or_default()
            .push(p.field.clone());
    }
    let disputed = by_pair
        .into_iter()
        .map(|((a, b), fields)| Cited {
            text: format!("Sources disagree on {}", fields.join(", ")),
            evidence_ids: vec![a, b],
        })
        .collect();
    let gaps = store
        .gaps
        .iter()
        .filter_map(|id| inputs.plan.claim(id))
        .map(|c| format!("{} ({:?}): {}", c.claim_id, c.category, one_line(&c.text)))
        .collect();
    OtherFindings {
        related,
        disputed,
        gaps,
        aborted_sections: inputs.aborted_sections.to_vec(),
    }
}

/// Assembles the report and checks that every citation resolves, and that
/// the verified section cites only verified facts.
pub fn build_report(inputs: &ReportInputs) -> Result<VerificationReport, ReportError> {
    let store = inputs.store;
    let verified: Vec<&Evidence> = store
        .evidence
        .iter()
        .filter(|e| e.category == EvidenceCategory::VerifiedFact)
        .collect();
    let cross_checks = store
        .evidence
        .iter()
        .filter(|e| e.tool == ToolKind::MetadataAnalysis)
        .map(|e| Cited {
            text: one_line(&e.content),
            evidence_ids: vec![e.evidence_id.clone()],
        })
        .fold(Vec::<Cited>::new(), |mut acc, c| {
            match acc.iter_mut().find(|x| x.text == c.text) {
                Some(x) => x.evidence_ids.extend(c.evidence_ids),
                None => acc.push(c),
            }
            acc
        });
    let mut assets = inputs.forensics.to_vec();
    assets.sort_by(|a, b| a.asset_id.cmp(&b.asset_id));
    let report = VerificationReport {
        report_schema: REPORT_SCHEMA,
        case_id: inputs.case.case_id.clone(),
        summary: summary(inputs, &verified),
        classification: classification(inputs),
        verified: five_w(&verified),
        images: images(inputs, &verified),
        forensics: ForensicSection {
            overall: Authenticity::combine(assets.iter().map(|f| f.authenticity)),
            assets,
            cross_checks,
        },
        other: other(inputs),
        verdict: store.verdict.clone(),
    };
    check_citations(&report, store)?;
    Ok(report)
}

impl FiveW {
    pub fn groups(&self) -> [&[Cited]; 5] {
        [&self.source_details, &self.where_, &self.when, &self.who, &self.why]
    }
}

impl VerificationReport {
    /// Every evidence id cited anywhere in the report.
    pub fn citations(&self) -> Vec<&str> {
        let verified = self.verified.groups().into_iter().flatten();
        let rest = self
            .forensics
            .cross_checks
            .iter()
            .chain(&self.other.related)
            .chain(&self.other.disputed);
        verified
            .chain(rest)
            .flat_map(|c| c.evidence_ids.iter().map(String::as_str))
            .collect()
    }

    /// The structured form written as `report.json`.
    pub fn to_structured(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

fn check_citations(report: &VerificationReport, store: &StoreExport) -> Result<(), ReportError> {
    for id in report.citations() {
        if store.get(id).is_none() {
            return Err(ReportError::DanglingCitation(id.to_string()));
        }
    }
    for c in report.verified.groups().into_iter().flatten() {
        for id in &c.evidence_ids {
            if store.get(id).map(|e| e.category) != Some(EvidenceCategory::VerifiedFact) {
                return Err(ReportError::UnverifiedCitation(id.clone()));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
