//! Stage 2: claim extraction, categorisation and tool routing.

use std::collections::BTreeSet;

use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::case::CasePackage;
use crate::gateway::{ClaimDraft, ClaimSourceText, Gateway, GatewayError};
use crate::media::{AssetAnalysis, OverlayKind};
use crate::text::{self, GeoPoint};

pub const PLAN_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClaimCategory {
    Temporal,
    Geographic,
    Entity,
    Contextual,
}

impl ClaimCategory {
    pub const ALL: [ClaimCategory; 4] = [Self::Temporal, Self::Geographic, Self::Entity, Self::Contextual];

    /// Scheduling priority; lower runs first.
    pub fn priority(self) -> u32 {
        match self {
            Self::Temporal => 0,
            Self::Geographic => 1,
            Self::Entity => 2,
            Self::Contextual => 3,
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Self::Temporal => "temporal",
            Self::Geographic => "geographic",
            Self::Entity => "entity",
            Self::Contextual => "contextual",
        }
    }

    /// Temporal and geographic claims anchor the case verdict.
    pub fn is_anchor(self) -> bool {
        matches!(self, Self::Temporal | Self::Geographic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClaimSource {
    Caption,
    Post,
    Overlay,
    Description,
    Clue,
}

impl ClaimSource {
    fn parse(s: &str) -> Self {
        match s.to_ascii_lowercase().as_str() {
            "caption" | "captions" => Self::Caption,
            "post" | "posts" => Self::Post,
            "overlay" | "overlays" => Self::Overlay,
            "clue" | "clues" => Self::Clue,
            _ => Self::Description,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Caption => "caption",
            Self::Post => "post",
            Self::Overlay => "overlay",
            Self::Description => "description",
            Self::Clue => "clue",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ToolKind {
    KeywordSearch,
    ReverseImageSearch,
    MetadataAnalysis,
    FactCheckLookup,
    VerifiedNews5W,
    ForensicCheck,
}

impl ToolKind {
    pub const ALL: [ToolKind; 6] = [
        Self::KeywordSearch,
        Self::ReverseImageSearch,
        Self::MetadataAnalysis,
        Self::FactCheckLookup,
        Self::VerifiedNews5W,
        Self::ForensicCheck,
    ];

    /// Tools driven by a search query; the only ones re-run in later
    /// research iterations.
    pub fn uses_query(self) -> bool {
        matches!(self, Self::KeywordSearch | Self::VerifiedNews5W)
    }
}

/// Where a claim came from: item index within its source list and the
/// character range of the sentence inside that item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimSpan {
    pub item: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub claim_id: String,
    pub text: String,
    pub category: ClaimCategory,
    pub source: ClaimSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<ClaimSpan>,
    /// Asset the claim was read from (overlays and frame descriptions).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset_id: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suggested_tools: Vec<ToolKind>,
}

impl Claim {
    pub fn dates(&self) -> Vec<NaiveDate> {
        text::extract_temporal_cues(&self.text).dates
    }

    pub fn times(&self) -> Vec<NaiveTime> {
        text::extract_temporal_cues(&self.text).times
    }

    pub fn places(&self) -> Vec<String> {
        text::find_places(&self.text)
    }

    pub fn geo(&self) -> Option<GeoPoint> {
        text::parse_coordinates(&self.text)
    }

    pub fn entities(&self) -> Vec<String> {
        text::find_entities(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub claim_ids: Vec<String>,
    pub tool: ToolKind,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationPlan {
    pub case_id: String,
    pub claims: Vec<Claim>,
    pub tasks: Vec<Task>,
    pub inconsistencies: Vec<String>,
}

impl VerificationPlan {
    pub fn claim(&self, claim_id: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.claim_id == claim_id)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("no media analyses supplied for asset(s): {0}")]
    EmptyAnalyses(String),
    #[error("plan invariant violated: {0}")]
    PlanInvariantViolation(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Every category whose signal appears in the text, in priority order.
pub fn matched_categories(text: &str) -> Vec<ClaimCategory> {
    let mut out = Vec::new();
    if !text::extract_temporal_cues(text).is_empty() {
        out.push(ClaimCategory::Temporal);
    }
    if text::has_location(text) {
        out.push(ClaimCategory::Geographic);
    }
    if !text::find_entities(text).is_empty() {
        out.push(ClaimCategory::Entity);
    }
    out
}

/// Primary category: the first matched, `Contextual` when none match.
pub fn categorize(text: &str) -> ClaimCategory {
    matched_categories(text)
        .first()
        .copied()
        .unwrap_or(ClaimCategory::Contextual)
}

fn routing_table(category: ClaimCategory) -> Vec<ToolKind> {
    use ToolKind::*;
    match category {
        ClaimCategory::Temporal => vec![MetadataAnalysis, VerifiedNews5W, KeywordSearch],
        ClaimCategory::Geographic => vec![ReverseImageSearch, KeywordSearch, VerifiedNews5W],
        ClaimCategory::Entity => vec![KeywordSearch, FactCheckLookup, VerifiedNews5W],
        ClaimCategory::Contextual => vec![FactCheckLookup, KeywordSearch, ForensicCheck],
    }
}

/// Fixed category routing, extended (never reduced) by tools the model
/// suggested for this claim.
pub fn route_tools(claim: &Claim) -> Vec<ToolKind> {
    let mut tools = routing_table(claim.category);
    for t in &claim.suggested_tools {
        if !tools.contains(t) {
            tools.push(*t);
        }
    }
    tools
}

/// A sentence is claim-worthy when it carries some signal or enough
/// content words to be searchable.
fn is_assertion(sentence: &str) -> bool {
    !matched_categories(sentence).is_empty() || text::keywords(sentence).len() >= 3
}

struct Collector {
    claims: Vec<Claim>,
    seen: BTreeSet<String>,
}

impl Collector {
    fn push(
        &mut self,
        text: &str,
        source: ClaimSource,
        span: Option<ClaimSpan>,
        asset_id: Option<&str>,
        category: Option<ClaimCategory>,
        suggested: &[ToolKind],
    ) {
        let text = text.trim();
        let key = text::canonical(text);
        if key.is_empty() {
            return;
        }
        if !self.seen.insert(key.clone()) {
            if !suggested.is_empty() {
                if let Some(c) = self.claims.iter_mut().find(|c| text::canonical(&c.text) == key) {
                    for t in suggested {
                        if !c.suggested_tools.contains(t) {
                            c.suggested_tools.push(*t);
                        }
                    }
                }
            }
            return;
        }
        self.claims.push(Claim {
            claim_id: format!("C{:02}", self.claims.len() + 1),
            text: text.to_string(),
            category: category.unwrap_or_else(|| categorize(text)),
            source,
            span,
            asset_id: asset_id.map(str::to_string),
            suggested_tools: suggested.to_vec(),
        });
    }

    fn sentences_of(&mut self, item: usize, body: &str, source: ClaimSource, asset_id: Option<&str>) {
        let mut cursor = 0;
        for s in text::sentences(body) {
            let start = body[cursor..].find(&s).map_or(cursor, |p| cursor + p);
            let end = start + s.len();
            cursor = end.min(body.len());
            if is_assertion(&s) {
                let span = ClaimSpan {
                    item,
                    start: body[..start].chars().count(),
                    end: body[..end].chars().count(),
                };
                self.push(&s, source, Some(span), asset_id, None, &[]);
            }
        }
    }
}

/// Texts submitted to the model for claim extraction, in a fixed order.
pub fn claim_source_texts(case: &CasePackage, analyses: &[AssetAnalysis]) -> Vec<ClaimSourceText> {
    let mut out = Vec::new();
    let mut add = |source: ClaimSource, index: usize, text: &str| {
        out.push(ClaimSourceText {
            source: source.label().to_string(),
            index,
            text: text.to_string(),
        })
    };
    for (i, t) in case.context.captions.iter().enumerate() {
        add(ClaimSource::Caption, i, t);
    }
    for (i, p) in case.context.posts.iter().enumerate() {
        add(ClaimSource::Post, i, &p.text);
    }
    for (i, t) in case.context.descriptions.iter().enumerate() {
        add(ClaimSource::Description, i, t);
    }
    for (i, t) in case.clues.iter().enumerate() {
        add(ClaimSource::Clue, i, t);
    }
    let mut overlay_index = 0;
    for a in analyses.iter().filter_map(AssetAnalysis::as_video) {
        for (_, o) in a.overlays() {
            add(ClaimSource::Overlay, overlay_index, &o.text);
            overlay_index += 1;
        }
    }
    out
}

/// Pairs of claims that assert disjoint sets of calendar dates.
pub fn date_inconsistencies(claims: &[Claim]) -> Vec<String> {
    let dated: Vec<(&Claim, Vec<NaiveDate>)> = claims
        .iter()
        .map(|c| (c, c.dates()))
        .filter(|(_, d)| !d.is_empty())
        .collect();
    let mut out = Vec::new();
    for (i, (a, da)) in dated.iter().enumerate() {
        for (b, db) in &dated[i + 1..] {
            if da.iter().all(|d| !db.contains(d)) {
                out.push(format!(
                    "{} and {} assert different dates ({} vs {})",
                    a.claim_id, b.claim_id, da[0], db[0]
                ));
            }
        }
    }
    out
}

pub fn check_plan(plan: &VerificationPlan) -> Result<(), PlanError> {
    let violation = |m: String| Err(PlanError::PlanInvariantViolation(m));
    let mut ids = BTreeSet::new();
    for c in &plan.claims {
        if c.text.trim().is_empty() {
            return violation(format!("claim {} has empty text", c.claim_id));
        }
        if !ids.insert(c.claim_id.as_str()) {
            return violation(format!("duplicate claim id {}", c.claim_id));
        }
    }
    let mut task_ids = BTreeSet::new();
    let mut covered = BTreeSet::new();
    for t in &plan.tasks {
        if !task_ids.insert(t.task_id.as_str()) {
            return violation(format!("duplicate task id {}", t.task_id));
        }
        if t.claim_ids.is_empty() {
            return violation(format!("task {} references no claim", t.task_id));
        }
        for id in &t.claim_ids {
            if !ids.contains(id.as_str()) {
                return violation(format!("task {} references unknown claim {id}", t.task_id));
            }
            covered.insert(id.as_str());
        }
    }
    if let Some(missing) = ids.difference(&covered).next() {
        return violation(format!("claim {missing} is not covered by any task"));
    }
    Ok(())
}

/// One task per (claim, routed tool), in claim order.
pub fn assign_tasks(claims: &[Claim]) -> Vec<Task> {
    let mut tasks = Vec::new();
    for c in claims {
        let table = routing_table(c.category);
        for tool in route_tools(c) {
            let why = if table.contains(&tool) {
                format!("{:?} claim routed to {:?}", c.category, tool)
            } else {
                "suggested by the multimodal model".to_string()
            };
            tasks.push(Task {
                task_id: format!("T{:03}", tasks.len() + 1),
                claim_ids: vec![c.claim_id.clone()],
                tool,
                rationale: why,
            });
        }
    }
    tasks
}

/// Builds the plan from context text, overlays and frame descriptions,
/// merged with claims proposed by the model. Any provider failure aborts.
pub fn build_plan(case: &CasePackage, analyses: &[AssetAnalysis], gw: &Gateway) -> Result<VerificationPlan, PlanError> {
    let missing: Vec<&str> = case
        .assets
        .iter()
        .filter(|a| !analyses.iter().any(|x| x.asset_id() == a.asset_id))
        .map(|a| a.asset_id.as_str())
        .collect();
    if analyses.is_empty() || !missing.is_empty() {
        return Err(PlanError::EmptyAnalyses(missing.join(", ")));
    }
    let mut col = Collector {
        claims: Vec::new(),
        seen: BTreeSet::new(),
    };
    for (i, t) in case.context.captions.iter().enumerate() {
        col.sentences_of(i, t, ClaimSource::Caption, None);
    }
    for (i, p) in case.context.posts.iter().enumerate() {
        col.sentences_of(i, &p.text, ClaimSource::Post, None);
    }
    for (i, t) in case.context.descriptions.iter().enumerate() {
        col.sentences_of(i, t, ClaimSource::Description, None);
    }
    for (i, t) in case.clues.iter().enumerate() {
        col.sentences_of(i, t, ClaimSource::Clue, None);
    }
    let mut overlay_index = 0;
    for a in analyses.iter().filter_map(AssetAnalysis::as_video) {
        for (_, o) in a.overlays() {
            let category = match o.kind {
                OverlayKind::Timestamp => Some(ClaimCategory::Temporal),
                OverlayKind::Location => Some(ClaimCategory::Geographic),
                OverlayKind::Other => None,
            };
            if let Some(cat) = category {
                let span = ClaimSpan {
                    item: overlay_index,
                    start: 0,
                    end: o.text.chars().count(),
                };
                col.push(
                    &o.text,
                    ClaimSource::Overlay,
                    Some(span),
                    Some(&a.asset_id),
                    Some(cat),
                    &[],
                );
            }
            overlay_index += 1;
        }
    }
    for a in analyses.iter().filter_map(AssetAnalysis::as_video) {
        for (i, d) in a.descriptions.iter().enumerate() {
            col.sentences_of(i, &d.text, ClaimSource::Description, Some(&a.asset_id));
        }
    }
    let texts = claim_source_texts(case, analyses);
    let drafts: Vec<ClaimDraft> = gw.extract_claims(&case.case_id, &texts)?;
    for d in drafts {
        let source = ClaimSource::parse(&d.source);
        let span = d.index.map(|i| ClaimSpan {
            item: i,
            start: 0,
            end: d.text.chars().count(),
        });
        col.push(&d.text, source, span, None, None, &d.suggested_tools);
    }
    let claims = col.claims;
    let plan = VerificationPlan {
        case_id: case.case_id.clone(),
        tasks: assign_tasks(&claims),
        inconsistencies: date_inconsistencies(&claims),
        claims,
    };
    check_plan(&plan)?;
    Ok(plan)
}
