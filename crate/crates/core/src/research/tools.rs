//! The verification tools and their registry.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::case::CasePackage;
use crate::evidence::{Fact, Stance};
use crate::gateway::{FactCheckVerdict, Gateway, GatewayError, SearchResult};
use crate::media::{AssetAnalysis, MediaError};
use crate::planner::{Claim, ToolKind};
use crate::research::context::{
    extract_source_context, snippet_context, ContextError, PlaceContext, SourceContext, TimeContext,
};
use crate::research::forensic::ForensicFindings;
use crate::research::metadata::{run_metadata_tool, MetadataKind};
use crate::research::queries::{seed_text, SearchQuery};
use crate::research::source::{TrustTable, DEFAULT_HORIZON_DAYS};
use crate::research::stance::assess_stance;
use crate::text;

pub const SEARCH_TOP_K: usize = 5;
pub const NEWS_TOP_K: usize = 3;
const CONTENT_CHARS: usize = 280;

/// Everything a tool may read. Shared by all sections of a case.
pub struct ToolContext<'a> {
    pub case: &'a CasePackage,
    pub analyses: &'a [AssetAnalysis],
    pub forensics: &'a [ForensicFindings],
    pub gw: &'a Gateway,
    pub trust: &'a TrustTable,
    pub horizon_days: i64,
    pub radius_km: f64,
}

impl<'a> ToolContext<'a> {
    pub fn new(
        case: &'a CasePackage,
        analyses: &'a [AssetAnalysis],
        forensics: &'a [ForensicFindings],
        gw: &'a Gateway,
        trust: &'a TrustTable,
    ) -> Self {
        Self {
            case,
            analyses,
            forensics,
            gw,
            trust,
            horizon_days: DEFAULT_HORIZON_DAYS,
            radius_km: 50.0,
        }
    }

    pub fn analysis(&self, asset_id: &str) -> Option<&'a AssetAnalysis> {
        self.analyses.iter().find(|a| a.asset_id() == asset_id)
    }

    fn local_item(&self, asset_id: &str, publisher: &str, title: String) -> SearchResult {
        SearchResult {
            url: local_url(asset_id),
            title,
            snippet: String::new(),
            publisher: publisher.to_string(),
            published_at: None,
            retrieved_at: self.gw.clock().now(),
        }
    }
}

pub fn local_url(asset_id: &str) -> String {
    url::Url::parse("file:///")
        .and_then(|base| base.join(asset_id))
        .map_or_else(|_| format!("file:///{asset_id}"), |u| u.to_string())
}

/// One item a tool found for a claim, before it becomes evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub stance: Stance,
    pub fact: Option<Fact>,
    pub content: String,
    pub source: SearchResult,
    pub context: Option<SourceContext>,
    pub keyframe: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolOutput {
    pub candidates: Vec<Candidate>,
    pub notes: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Media(#[from] MediaError),
}

pub trait VerificationTool: Send + Sync {
    fn kind(&self) -> ToolKind;
    fn run(&self, ctx: &ToolContext, claim: &Claim, query: Option<&SearchQuery>) -> Result<ToolOutput, ToolError>;
}

#[derive(Clone, Default)]
pub struct ToolRegistry {
    tools: BTreeMap<ToolKind, Arc<dyn VerificationTool>>,
}

impl std::fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.tools.keys()).finish()
    }
}

impl ToolRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn standard() -> Self {
        Self::empty()
            .with(Arc::new(KeywordSearch))
            .with(Arc::new(ReverseImageSearch))
            .with(Arc::new(MetadataAnalysis))
            .with(Arc::new(FactCheckLookup))
            .with(Arc::new(VerifiedNews5W))
            .with(Arc::new(ForensicCheck))
    }

    pub fn with(mut self, tool: Arc<dyn VerificationTool>) -> Self {
        self.tools.insert(tool.kind(), tool);
        self
    }

    pub fn without(mut self, kind: ToolKind) -> Self {
        self.tools.remove(&kind);
        self
    }

    pub fn get(&self, kind: ToolKind) -> Option<&dyn VerificationTool> {
        self.tools.get(&kind).map(|t| t.as_ref())
    }

    pub fn kinds(&self) -> impl Iterator<Item = ToolKind> + '_ {
        self.tools.keys().copied()
    }
}

fn clip(s: &str) -> String {
    let s = s.trim();
    if s.chars().count() <= CONTENT_CHARS {
        s.to_string()
    } else {
        let cut: String = s.chars().take(CONTENT_CHARS).collect();
        format!("{}...", cut.trim_end())
    }
}

fn query_text(claim: &Claim, query: Option<&SearchQuery>) -> String {
    query.map_or_else(|| seed_text(claim), |q| q.text.clone())
}

fn from_result(ctx: &ToolContext, claim: &Claim, r: SearchResult, keyframe: Option<String>) -> Candidate {
    let context = snippet_context(&r);
    let body = format!("{} {}", r.title, r.snippet);
    let (stance, fact) = assess_stance(claim, context.as_ref(), &body, ctx.radius_km);
    let content = if r.snippet.is_empty() {
        clip(&r.title)
    } else {
        clip(&r.snippet)
    };
    Candidate {
        stance,
        fact,
        content,
        source: r,
        context,
        keyframe,
    }
}

pub struct KeywordSearch;

impl VerificationTool for KeywordSearch {
    fn kind(&self) -> ToolKind {
        ToolKind::KeywordSearch
    }

    fn run(&self, ctx: &ToolContext, claim: &Claim, query: Option<&SearchQuery>) -> Result<ToolOutput, ToolError> {
        let q = query_text(claim, query);
        let results = ctx.gw.web_search(&q)?;
        Ok(ToolOutput {
            candidates: results
                .into_iter()
                .take(SEARCH_TOP_K)
                .map(|r| from_result(ctx, claim, r, None))
                .collect(),
            notes: vec![format!("query: {q}")],
        })
    }
}

/// Searches the top keyframe of every video and every image.
pub struct ReverseImageSearch;

impl VerificationTool for ReverseImageSearch {
    fn kind(&self) -> ToolKind {
        ToolKind::ReverseImageSearch
    }

    fn run(&self, ctx: &ToolContext, claim: &Claim, _query: Option<&SearchQuery>) -> Result<ToolOutput, ToolError> {
        let mut targets: Vec<(std::path::PathBuf, String, Option<String>)> = Vec::new();
        for a in ctx.analyses {
            match a {
                AssetAnalysis::Video(v) => {
                    if let Some(k) = v.top_keyframe() {
                        targets.push((k.image_path.clone(), k.slug.clone(), Some(k.slug.clone())));
                    }
                }
                AssetAnalysis::Image(i) => {
                    if let Some(asset) = ctx.case.asset(&i.asset_id) {
                        targets.push((asset.path.clone(), i.asset_id.clone(), None));
                    }
                }
            }
        }
        let mut out = ToolOutput::default();
        if targets.is_empty() {
            out.notes.push("no keyframes or images to search".into());
            return Ok(out);
        }
        let mut first_err: Option<ToolError> = None;
        let mut succeeded = 0;
        for (path, label, keyframe) in targets {
            let result = std::fs::read(&path)
                .map_err(|e| ToolError::Media(MediaError::Io(e)))
                .and_then(|bytes| ctx.gw.reverse_image_search(&bytes, &label).map_err(ToolError::from));
            match result {
                Ok(results) => {
                    succeeded += 1;
                    out.candidates.extend(
                        results
                            .into_iter()
                            .take(SEARCH_TOP_K)
                            .map(|r| from_result(ctx, claim, r, keyframe.clone())),
                    );
                }
                Err(e) => {
                    out.notes.push(format!("{label}: {e}"));
                    first_err.get_or_insert(e);
                }
            }
        }
        match first_err {
            Some(e) if succeeded == 0 => Err(e),
            _ => Ok(out),
        }
    }
}

/// Container and EXIF metadata, cross-checked against overlays.
pub struct MetadataAnalysis;

impl VerificationTool for MetadataAnalysis {
    fn kind(&self) -> ToolKind {
        ToolKind::MetadataAnalysis
    }

    fn run(&self, ctx: &ToolContext, claim: &Claim, _query: Option<&SearchQuery>) -> Result<ToolOutput, ToolError> {
        let mut out = ToolOutput::default();
        let mut assets: Vec<_> = ctx.case.assets.iter().collect();
        assets.sort_by(|a, b| a.asset_id.cmp(&b.asset_id));
        for asset in assets {
            let found = run_metadata_tool(asset, ctx.analysis(&asset.asset_id))?;
            if found.is_empty() {
                out.notes.push(format!("{}: no embedded metadata", asset.asset_id));
            }
            for m in found {
                let description = m.describe();
                let item = ctx.local_item(&asset.asset_id, &format!("{} metadata", m.origin), description.clone());
                let context = SourceContext {
                    source_detail: description.clone(),
                    where_: m.geo.map(|g| PlaceContext {
                        place_name: String::new(),
                        geo: Some(g),
                    }),
                    when: (m.date.is_some() || m.time.is_some()).then(|| TimeContext {
                        date: m.date,
                        time: m.time,
                        cues: vec![m.value.clone()],
                    }),
                    who: (m.kind == MetadataKind::Device).then(|| m.value.clone()),
                    why: None,
                };
                let (stance, fact) = match m.kind {
                    MetadataKind::Device => (Stance::Related, None),
                    _ => assess_stance(claim, Some(&context), "", ctx.radius_km),
                };
                out.candidates.push(Candidate {
                    stance,
                    fact,
                    content: description,
                    source: item,
                    context: Some(context),
                    keyframe: None,
                });
            }
        }
        Ok(out)
    }
}

pub struct FactCheckLookup;

impl VerificationTool for FactCheckLookup {
    fn kind(&self) -> ToolKind {
        ToolKind::FactCheckLookup
    }

    fn run(&self, ctx: &ToolContext, claim: &Claim, _query: Option<&SearchQuery>) -> Result<ToolOutput, ToolError> {
        let entries = ctx.gw.fact_check_lookup(&claim.text)?;
        let mut out = ToolOutput::default();
        if entries.is_empty() {
            out.notes.push("no fact-check entries".into());
        }
        for e in entries {
            let stance = match e.verdict {
                FactCheckVerdict::True => Stance::Supports,
                FactCheckVerdict::False => Stance::Contradicts,
                FactCheckVerdict::Mixed | FactCheckVerdict::Unrated => Stance::Related,
            };
            let fact = (stance != Stance::Related).then(|| Fact {
                field: "what".into(),
                value: text::canonical(&claim.text),
            });
            let reviewed = if e.claim_reviewed.is_empty() {
                claim.text.clone()
            } else {
                e.claim_reviewed.clone()
            };
            let now = ctx.gw.clock().now();
            out.candidates.push(Candidate {
                stance,
                fact,
                content: format!("{} rated \"{}\" as {:?}", e.publisher, clip(&reviewed), e.verdict),
                source: SearchResult {
                    url: e.url.clone(),
                    title: format!("Fact check: {}", clip(&reviewed)),
                    snippet: String::new(),
                    publisher: e.publisher.clone(),
                    published_at: e.published_at,
                    retrieved_at: e.published_at.map_or(now, |p| p.max(now)),
                },
                context: None,
                keyframe: None,
            });
        }
        Ok(out)
    }
}

/// 5W extraction over the case's posts and articles and the top search
/// results for the query.
pub struct VerifiedNews5W;

impl VerifiedNews5W {
    fn items(
        ctx: &ToolContext,
        q: &str,
        out: &mut ToolOutput,
        errors: &mut Vec<ToolError>,
    ) -> Vec<(SearchResult, String)> {
        let mut items: Vec<(SearchResult, String)> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let now = ctx.gw.clock().now();
        for post in &ctx.case.context.posts {
            if seen.insert(post.url.clone()) {
                let item = SearchResult {
                    url: post.url.clone(),
                    title: String::new(),
                    snippet: post.text.clone(),
                    publisher: post.platform.clone(),
                    published_at: post.timestamp,
                    retrieved_at: post.timestamp.map_or(now, |p| p.max(now)),
                };
                items.push((item, post.text.clone()));
            }
        }
        let mut fetch = |url: &str, items: &mut Vec<(SearchResult, String)>| {
            if !seen.insert(url.to_string()) {
                return;
            }
            match ctx.gw.fetch_page(url) {
                Ok(page) => items.push((page.as_search_result(), page.body)),
                Err(e) => {
                    out.notes.push(format!("fetch {url}: {e}"));
                    errors.push(e.into());
                }
            }
        };
        for url in &ctx.case.context.articles {
            fetch(url, &mut items);
        }
        match ctx.gw.web_search(q) {
            Ok(results) => {
                for r in results.into_iter().take(NEWS_TOP_K) {
                    fetch(&r.url, &mut items);
                }
            }
            Err(e) => {
                out.notes.push(format!("search: {e}"));
                errors.push(e.into());
            }
        }
        items
    }
}

impl VerificationTool for VerifiedNews5W {
    fn kind(&self) -> ToolKind {
        ToolKind::VerifiedNews5W
    }

    fn run(&self, ctx: &ToolContext, claim: &Claim, query: Option<&SearchQuery>) -> Result<ToolOutput, ToolError> {
        let q = query_text(claim, query);
        let mut out = ToolOutput::default();
        let mut errors: Vec<ToolError> = Vec::new();
        let items = Self::items(ctx, &q, &mut out, &mut errors);
        let mut extracted = 0;
        for (item, body) in items {
            match extract_source_context(&item, &body, ctx.gw) {
                Ok(context) => {
                    extracted += 1;
                    let (stance, fact) = assess_stance(claim, Some(&context), &body, ctx.radius_km);
                    out.candidates.push(Candidate {
                        stance,
                        fact,
                        content: clip(&body),
                        source: item,
                        context: Some(context),
                        keyframe: None,
                    });
                }
                Err(ContextError::Unextractable { url }) => out.notes.push(format!("dropped {url}: no 5W context")),
                Err(ContextError::Gateway(e)) => {
                    out.notes.push(format!("extract {}: {e}", item.url));
                    errors.push(e.into());
                }
            }
        }
        if extracted == 0 && !errors.is_empty() {
            return Err(errors.remove(0));
        }
        Ok(out)
    }
}

/// Reports the precomputed per-asset forensic findings.
pub struct ForensicCheck;

impl VerificationTool for ForensicCheck {
    fn kind(&self) -> ToolKind {
        ToolKind::ForensicCheck
    }

    fn run(&self, ctx: &ToolContext, _claim: &Claim, _query: Option<&SearchQuery>) -> Result<ToolOutput, ToolError> {
        let candidates = ctx
            .forensics
            .iter()
            .map(|f| Candidate {
                stance: Stance::Related,
                fact: None,
                content: format!("Forensic analysis of {}", f.summary()),
                source: ctx.local_item(
                    &f.asset_id,
                    "forensic analysis",
                    format!("Forensic checks: {}", f.methods.join(", ")),
                ),
                context: None,
                keyframe: None,
            })
            .collect();
        Ok(ToolOutput {
            candidates,
            notes: Vec::new(),
        })
    }
}
