//! Stage 5: confidence scoring, conflict detection, categorisation and
//! the case verdict.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::gateway::SearchResult;
use crate::planner::{Claim, ToolKind};
use crate::research::context::SourceContext;
use crate::research::source::SourceAssessment;

pub const EVIDENCE_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stance {
    Supports,
    Contradicts,
    Related,
}

impl Stance {
    pub fn opposite(self) -> Option<Stance> {
        match self {
            Self::Supports => Some(Self::Contradicts),
            Self::Contradicts => Some(Self::Supports),
            Self::Related => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EvidenceCategory {
    VerifiedFact,
    RelatedInformation,
    DisputedClaim,
}

/// The asserted fact an evidence item contributes to its claim, in
/// canonical form: ISO dates, lowercase trimmed place names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fact {
    pub field: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub evidence_id: String,
    pub claim_ids: Vec<String>,
    pub stance: Stance,
    pub category: EvidenceCategory,
    pub content: String,
    pub source: SearchResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<SourceContext>,
    pub assessment: SourceAssessment,
    pub confidence: f64,
    pub step_id: String,
    pub coverage_gap: bool,
    pub section_id: String,
    pub tool: ToolKind,
    /// Registered domain of `source.url`; `local` for on-disk media.
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact: Option<Fact>,
    /// Keyframe slug when the evidence came from searching a keyframe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyframe: Option<String>,
}

impl Evidence {
    pub fn date(&self) -> Option<NaiveDate> {
        self.context.as_ref()?.when.as_ref()?.date
    }

    pub fn geo(&self) -> Option<crate::text::GeoPoint> {
        self.context.as_ref()?.where_.as_ref()?.geo
    }

    pub fn addresses(&self, claim_id: &str) -> bool {
        self.claim_ids.iter().any(|c| c == claim_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub w_r: f64,
    pub w_c: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self { w_r: 0.5, w_c: 0.5 }
    }
}

impl Weights {
    /// Scales both weights so they sum to one. `None` when they cannot.
    pub fn normalized(self) -> Option<Self> {
        let sum = self.w_r + self.w_c;
        (self.w_r >= 0.0 && self.w_c >= 0.0 && sum > 0.0 && sum.is_finite()).then(|| Self {
            w_r: self.w_r / sum,
            w_c: self.w_c / sum,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub tau_v: f64,
    pub refute_margin: f64,
    pub weights: Weights,
    pub conflict_radius_km: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tau_v: 0.7,
            refute_margin: 0.2,
            weights: Weights::default(),
            conflict_radius_km: 50.0,
        }
    }
}

/// `w_r * reliability + w_c * (s + 1) / (s + c + 2)`, clamped to [0, 1].
pub fn score_confidence(reliability: f64, s: usize, c: usize, weights: Weights) -> f64 {
    let consistency = (s as f64 + 1.0) / ((s + c) as f64 + 2.0);
    (weights.w_r * reliability + weights.w_c * consistency).clamp(0.0, 1.0)
}

/// Distinct domains asserting `ev`'s fact with its stance (including its
/// own) and distinct domains taking the opposite stance on the same claim
/// field.
pub fn fact_support(ev: &Evidence, corpus: &[Evidence]) -> (usize, usize) {
    let Some(fact) = &ev.fact else {
        return (0, 0);
    };
    let opposite = ev.stance.opposite();
    let mut same = BTreeSet::new();
    let mut against = BTreeSet::new();
    same.insert(ev.domain.as_str());
    for other in corpus {
        let Some(of) = &other.fact else { continue };
        if of.field != fact.field || !other.claim_ids.iter().any(|c| ev.addresses(c)) {
            continue;
        }
        if other.stance == ev.stance && of.value == fact.value {
            same.insert(other.domain.as_str());
        } else if Some(other.stance) == opposite {
            against.insert(other.domain.as_str());
        }
    }
    (same.len(), against.len())
}

/// Other registered domains asserting the same fact with the same stance.
pub fn independent_corroborations(ev: &Evidence, corpus: &[Evidence]) -> usize {
    fact_support(ev, corpus).0.saturating_sub(1)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConflictPair {
    pub a: String,
    pub b: String,
    pub field: String,
}

/// The conflicting field of a pair, if any, checked in the order
/// `when.date`, `where.geo`, `stance`.
pub fn conflict_field(a: &Evidence, b: &Evidence, radius_km: f64) -> Option<&'static str> {
    if !a.claim_ids.iter().any(|c| b.addresses(c)) {
        return None;
    }
    if let (Some(da), Some(db)) = (a.date(), b.date()) {
        if da != db {
            return Some("when.date");
        }
    }
    if let (Some(ga), Some(gb)) = (a.geo(), b.geo()) {
        if ga.distance_km(&gb) > radius_km {
            return Some("where.geo");
        }
    }
    if a.stance.opposite() == Some(b.stance) {
        return Some("stance");
    }
    None
}

/// All conflicting pairs, `a < b` by evidence id, sorted.
pub fn detect_conflicts(corpus: &[Evidence], radius_km: f64) -> Vec<ConflictPair> {
    let mut sorted: Vec<&Evidence> = corpus.iter().collect();
    sorted.sort_by(|x, y| x.evidence_id.cmp(&y.evidence_id));
    let mut out = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            if a.evidence_id == b.evidence_id {
                continue;
            }
            if let Some(field) = conflict_field(a, b, radius_km) {
                out.push(ConflictPair {
                    a: a.evidence_id.clone(),
                    b: b.evidence_id.clone(),
                    field: field.to_string(),
                });
            }
        }
    }
    out
}

/// Every detected conflict counts as unresolved.
pub fn categorize(ev: &Evidence, conflicts: &[ConflictPair], tau_v: f64) -> EvidenceCategory {
    if conflicts.iter().any(|p| p.a == ev.evidence_id || p.b == ev.evidence_id) {
        EvidenceCategory::DisputedClaim
    } else if ev.stance == Stance::Supports && ev.confidence >= tau_v && ev.assessment.independent_corroborations >= 1 {
        EvidenceCategory::VerifiedFact
    } else {
        EvidenceCategory::RelatedInformation
    }
}

/// Claims with no `VerifiedFact` evidence, in claim order.
pub fn identify_gaps(claims: &[Claim], corpus: &[Evidence]) -> Vec<String> {
    claims
        .iter()
        .filter(|c| {
            !corpus
                .iter()
                .any(|e| e.category == EvidenceCategory::VerifiedFact && e.addresses(&c.claim_id))
        })
        .map(|c| c.claim_id.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictStatus {
    Verified,
    PartiallyVerified,
    Inconclusive,
    Refuted,
}

impl VerdictStatus {
    pub fn label(self) -> &'static str {
        match self {
            Self::Verified => "Verified",
            Self::PartiallyVerified => "Partially Verified",
            Self::Inconclusive => "Inconclusive",
            Self::Refuted => "Refuted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub verified_claims: Vec<String>,
    pub unverified_claims: Vec<String>,
    pub disputed_claims: Vec<String>,
    pub rationale: String,
}

fn best(corpus: &[Evidence], claim_id: &str, stance: Stance) -> f64 {
    corpus
        .iter()
        .filter(|e| e.stance == stance && e.addresses(claim_id))
        .map(|e| e.confidence)
        .fold(0.0, f64::max)
}

/// Per-claim labels and the case status.
///
/// A claim is disputed when its best contradicting confidence exceeds its
/// best supporting confidence by at least `refute_margin`; otherwise
/// verified when a `VerifiedFact` supports it. `Verified` needs at least
/// one temporal or geographic claim.
pub fn derive_verdict(claims: &[Claim], corpus: &[Evidence], th: &Thresholds) -> Verdict {
    let mut verified = Vec::new();
    let mut unverified = Vec::new();
    let mut disputed = Vec::new();
    for c in claims {
        let id = &c.claim_id;
        let has_contra = corpus
            .iter()
            .any(|e| e.stance == Stance::Contradicts && e.addresses(id));
        let margin = best(corpus, id, Stance::Contradicts) - best(corpus, id, Stance::Supports);
        if has_contra && margin >= th.refute_margin - 1e-12 {
            disputed.push(id.clone());
        } else if corpus
            .iter()
            .any(|e| e.category == EvidenceCategory::VerifiedFact && e.stance == Stance::Supports && e.addresses(id))
        {
            verified.push(id.clone());
        } else {
            unverified.push(id.clone());
        }
    }
    let anchors: Vec<&Claim> = claims.iter().filter(|c| c.category.is_anchor()).collect();
    let status = if anchors.iter().any(|c| disputed.contains(&c.claim_id)) {
        VerdictStatus::Refuted
    } else if !anchors.is_empty() && anchors.iter().all(|c| verified.contains(&c.claim_id)) && disputed.is_empty() {
        VerdictStatus::Verified
    } else if !verified.is_empty() {
        VerdictStatus::PartiallyVerified
    } else {
        VerdictStatus::Inconclusive
    };
    let rationale = format!(
        "{} of {} claims verified ({} of {} temporal/geographic), {} disputed, {} unverified.",
        verified.len(),
        claims.len(),
        anchors.iter().filter(|c| verified.contains(&c.claim_id)).count(),
        anchors.len(),
        disputed.len(),
        unverified.len()
    );
    Verdict {
        status,
        verified_claims: verified,
        unverified_claims: unverified,
        disputed_claims: disputed,
        rationale,
    }
}

/// Recomputes corroborations, confidence and category for every item
/// against the whole corpus. The result is sorted by evidence id and does
/// not depend on input order.
pub fn finalize_corpus(mut corpus: Vec<Evidence>, th: &Thresholds) -> (Vec<Evidence>, Vec<ConflictPair>) {
    corpus.sort_by(|a, b| a.evidence_id.cmp(&b.evidence_id));
    let weights = th.weights.normalized().unwrap_or_default();
    let support: Vec<(usize, usize)> = corpus.iter().map(|e| fact_support(e, &corpus)).collect();
    for (e, (s, c)) in corpus.iter_mut().zip(support) {
        e.assessment.independent_corroborations = s.saturating_sub(1);
        let (s, c) = if e.fact.is_some() { (s, c) } else { (0, 0) };
        e.confidence = score_confidence(e.assessment.reliability, s, c, weights);
    }
    let conflicts = detect_conflicts(&corpus, th.conflict_radius_km);
    let categories: Vec<EvidenceCategory> = corpus.iter().map(|e| categorize(e, &conflicts, th.tau_v)).collect();
    for (e, cat) in corpus.iter_mut().zip(categories) {
        e.category = cat;
    }
    (corpus, conflicts)
}

/// Evidence collected from concurrently running sections.
#[derive(Debug, Default)]
pub struct EvidenceStore {
    items: Mutex<Vec<Evidence>>,
}

/// The finalized corpus with its conflicts, gaps and verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreExport {
    pub evidence_schema: u32,
    pub evidence: Vec<Evidence>,
    pub conflicts: Vec<ConflictPair>,
    pub gaps: Vec<String>,
    pub verdict: Verdict,
}

impl StoreExport {
    pub fn get(&self, evidence_id: &str) -> Option<&Evidence> {
        self.evidence
            .binary_search_by(|e| e.evidence_id.as_str().cmp(evidence_id))
            .ok()
            .map(|i| &self.evidence[i])
    }

    pub fn by_claim(&self) -> BTreeMap<&str, Vec<&Evidence>> {
        let mut out: BTreeMap<&str, Vec<&Evidence>> = BTreeMap::new();
        for e in &self.evidence {
            for c in &e.claim_ids {
                out.entry(c.as_str()).or_default().push(e);
            }
        }
        out
    }
}

impl EvidenceStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&self, evidence: impl IntoIterator<Item = Evidence>) {
        self.items.lock().expect("store lock").extend(evidence);
    }

    pub fn len(&self) -> usize {
        self.items.lock().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn finalize(self, claims: &[Claim], th: &Thresholds) -> StoreExport {
        let items = self.items.into_inner().expect("store lock");
        let (evidence, conflicts) = finalize_corpus(items, th);
        let gaps = identify_gaps(claims, &evidence);
        let verdict = derive_verdict(claims, &evidence, th);
        StoreExport {
            evidence_schema: EVIDENCE_SCHEMA,
            evidence,
            conflicts,
            gaps,
            verdict,
        }
    }
}
