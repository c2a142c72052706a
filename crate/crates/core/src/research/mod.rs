//! Stage 4: iterative per-section research.

pub mod context;
pub mod forensic;
pub mod metadata;
pub mod provenance;
pub mod queries;
pub mod source;
pub mod stance;
pub mod tools;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::evidence::{fact_support, score_confidence, Evidence, EvidenceCategory, Stance, Weights};
use crate::planner::{route_tools, Claim, ToolKind, VerificationPlan};
use crate::sectioner::{section_prefix, Section};

pub use context::SourceContext;
pub use forensic::{run_forensic_tool, Authenticity, ForensicFindings};
pub use provenance::{check_dag, ProvenanceGraph, ProvenanceRecord, StepStatus, ROOT_STEP};
pub use queries::{generate_queries, QueryOrigin, SearchQuery};
pub use source::{analyze_source, registered_domain, SourceAssessment, TrustTable};
pub use tools::{Candidate, ToolContext, ToolOutput, ToolRegistry, VerificationTool};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResearchBudget {
    pub max_iterations: u32,
    pub max_tool_calls: usize,
    pub min_independent_sources: usize,
}

impl Default for ResearchBudget {
    fn default() -> Self {
        Self {
            max_iterations: 3,
            max_tool_calls: 24,
            min_independent_sources: 2,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ResearchError {
    #[error("section {section} needs tool {tool:?}, which is not registered")]
    ToolMissing { section: String, tool: ToolKind },
    #[error("section {section} lists unknown claim {claim}")]
    UnknownClaim { section: String, claim: String },
    #[error("invalid research budget: {0}")]
    InvalidBudget(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionOutcome {
    pub section_id: String,
    pub evidence: Vec<Evidence>,
    pub provenance: Vec<ProvenanceRecord>,
    pub queries: Vec<SearchQuery>,
    /// Claims short of `min_independent_sources` when research stopped.
    pub unsatisfied: Vec<String>,
    /// Every first-iteration tool call failed.
    pub aborted: bool,
    pub tool_calls: usize,
    pub iterations: u32,
}

impl ResearchBudget {
    pub fn validate(&self) -> Result<(), ResearchError> {
        if self.max_iterations == 0 {
            return Err(ResearchError::InvalidBudget("max_iterations must be at least 1".into()));
        }
        if self.max_tool_calls == 0 {
            return Err(ResearchError::InvalidBudget("max_tool_calls must be at least 1".into()));
        }
        Ok(())
    }
}

/// Distinct registered domains taking a position on the claim.
pub fn independent_sources(claim_id: &str, evidence: &[Evidence]) -> usize {
    evidence
        .iter()
        .filter(|e| e.stance != Stance::Related && e.addresses(claim_id))
        .map(|e| e.domain.as_str())
        .collect::<BTreeSet<_>>()
        .len()
}

fn digest_json(value: &impl Serialize) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("serializable"))
}

struct Run<'a, 'c> {
    section: &'a Section,
    prefix: String,
    ctx: &'a ToolContext<'c>,
    evidence: Vec<Evidence>,
    provenance: Vec<ProvenanceRecord>,
    seen: BTreeSet<(String, ToolKind, String, Option<String>)>,
    step: usize,
}

impl Run<'_, '_> {
    fn next_step(&mut self) -> String {
        self.step += 1;
        format!("{}/{:03}", self.prefix, self.step)
    }

    fn record(
        &mut self,
        step_id: String,
        tool: String,
        input: String,
        output: String,
        status: StepStatus,
        note: Option<String>,
    ) {
        self.provenance.push(ProvenanceRecord {
            step_id,
            tool,
            input_digest: input,
            output_digest: output,
            parents: vec![self.section.section_id.clone()],
            at: self.ctx.gw.clock().now(),
            status,
            note,
        });
    }

    fn call(&mut self, tools: &ToolRegistry, claim: &Claim, kind: ToolKind, query: Option<&SearchQuery>) -> bool {
        let step_id = self.next_step();
        let input = digest_json(&(&claim.claim_id, kind, query.map(|q| &q.text)));
        let tool = tools.get(kind).expect("checked before the loop");
        match tool.run(self.ctx, claim, query) {
            Ok(out) => {
                let note = (!out.notes.is_empty()).then(|| out.notes.join("; "));
                let output = digest_json(
                    &out.candidates
                        .iter()
                        .map(|c| (&c.source.url, c.stance, &c.fact, &c.content))
                        .collect::<Vec<_>>(),
                );
                for c in out.candidates {
                    self.admit(claim, kind, &step_id, c);
                }
                self.record(step_id, format!("{kind:?}"), input, output, StepStatus::Ok, note);
                true
            }
            Err(e) => {
                tracing::warn!(section = %self.section.section_id, tool = ?kind, "tool call failed: {e}");
                self.record(
                    step_id,
                    format!("{kind:?}"),
                    input,
                    String::new(),
                    StepStatus::Error,
                    Some(e.to_string()),
                );
                false
            }
        }
    }

    fn admit(&mut self, claim: &Claim, kind: ToolKind, step_id: &str, c: Candidate) {
        let key = (claim.claim_id.clone(), kind, c.source.url.clone(), c.keyframe.clone());
        if !self.seen.insert(key) {
            return;
        }
        let event_date = c.context.as_ref().and_then(|x| x.when.as_ref()).and_then(|w| w.date);
        let assessment = analyze_source(&c.source, event_date, self.ctx.trust, self.ctx.horizon_days);
        let id = format!("{}-E{:03}", self.prefix, self.evidence.len() + 1);
        self.evidence.push(Evidence {
            evidence_id: id,
            claim_ids: vec![claim.claim_id.clone()],
            stance: c.stance,
            category: EvidenceCategory::RelatedInformation,
            content: c.content,
            domain: registered_domain(&c.source.url),
            source: c.source,
            context: c.context,
            confidence: assessment.reliability,
            assessment,
            step_id: step_id.to_string(),
            coverage_gap: false,
            section_id: self.section.section_id.clone(),
            tool: kind,
            fact: c.fact,
            keyframe: c.keyframe,
        });
    }
}

/// Runs the section's routed tools for every claim, then re-queries the
/// query-driven tools for claims still short of independent sources until
/// the iteration or call budget runs out.
///
/// Provenance records hang off a record for the section itself, whose
/// parent is `parent_step`.
pub fn research_section(
    section: &Section,
    plan: &VerificationPlan,
    tools: &ToolRegistry,
    ctx: &ToolContext,
    budget: &ResearchBudget,
    parent_step: &str,
) -> Result<SectionOutcome, ResearchError> {
    budget.validate()?;
    let claims: Vec<&Claim> = section
        .claim_ids
        .iter()
        .map(|id| {
            plan.claim(id).ok_or_else(|| ResearchError::UnknownClaim {
                section: section.section_id.clone(),
                claim: id.clone(),
            })
        })
        .collect::<Result<_, _>>()?;
    for c in &claims {
        for tool in route_tools(c) {
            if tools.get(tool).is_none() {
                return Err(ResearchError::ToolMissing {
                    section: section.section_id.clone(),
                    tool,
                });
            }
        }
    }

    let mut run = Run {
        section,
        prefix: section_prefix(&section.section_id).to_string(),
        ctx,
        evidence: Vec::new(),
        provenance: vec![ProvenanceRecord {
            step_id: section.section_id.clone(),
            tool: "sectioner".into(),
            input_digest: digest_json(&section.claim_ids),
            output_digest: digest_json(section),
            parents: vec![parent_step.to_string()],
            at: ctx.gw.clock().now(),
            status: StepStatus::Ok,
            note: None,
        }],
        seen: BTreeSet::new(),
        step: 0,
    };
    let mut outcome = SectionOutcome {
        section_id: section.section_id.clone(),
        evidence: Vec::new(),
        provenance: Vec::new(),
        queries: Vec::new(),
        unsatisfied: Vec::new(),
        aborted: false,
        tool_calls: 0,
        iterations: 0,
    };
    if claims.is_empty() {
        let id = run.next_step();
        run.record(
            id,
            "research".into(),
            digest_json(&section.claim_ids),
            String::new(),
            StepStatus::Noop,
            Some("section has no claims".into()),
        );
        outcome.provenance = run.provenance;
        return Ok(outcome);
    }

    let k = budget.min_independent_sources;
    let mut issued: BTreeSet<(String, String)> = BTreeSet::new();
    'iterations: for iteration in 0..budget.max_iterations {
        let targets: Vec<&Claim> = claims
            .iter()
            .copied()
            .filter(|c| iteration == 0 || independent_sources(&c.claim_id, &run.evidence) < k)
            .collect();
        if targets.is_empty() {
            break;
        }
        let queries = generate_queries(&section.section_id, &targets, &run.evidence, iteration, &issued);
        let by_claim: BTreeMap<&str, &SearchQuery> = queries.iter().map(|q| (q.claim_id.as_str(), q)).collect();
        let mut calls: Vec<(&Claim, ToolKind)> = Vec::new();
        for c in &targets {
            for tool in route_tools(c) {
                let wanted = if iteration == 0 {
                    true
                } else {
                    tool.uses_query() && by_claim.contains_key(c.claim_id.as_str())
                };
                if wanted {
                    calls.push((c, tool));
                }
            }
        }
        if calls.is_empty() {
            break;
        }
        outcome.iterations = iteration + 1;
        for q in &queries {
            issued.insert((q.claim_id.clone(), q.text.clone()));
        }
        outcome.queries.extend(queries.iter().cloned());
        let mut succeeded = 0;
        let mut attempted = 0;
        for (claim, tool) in calls {
            if outcome.tool_calls >= budget.max_tool_calls {
                break 'iterations;
            }
            let query = if tool.uses_query() {
                by_claim.get(claim.claim_id.as_str()).copied()
            } else {
                None
            };
            outcome.tool_calls += 1;
            attempted += 1;
            if run.call(tools, claim, tool, query) {
                succeeded += 1;
            }
        }
        if iteration == 0 && attempted > 0 && succeeded == 0 {
            outcome.aborted = true;
            break;
        }
    }

    // Provisional scores; stage 5 recomputes them over the whole case.
    let provisional: Vec<(usize, usize)> = run.evidence.iter().map(|e| fact_support(e, &run.evidence)).collect();
    for (e, (s, c)) in run.evidence.iter_mut().zip(provisional) {
        e.assessment.independent_corroborations = s.saturating_sub(1);
        let (s, c) = if e.fact.is_some() { (s, c) } else { (0, 0) };
        e.confidence = score_confidence(e.assessment.reliability, s, c, Weights::default());
    }
    outcome.unsatisfied = claims
        .iter()
        .filter(|c| independent_sources(&c.claim_id, &run.evidence) < k)
        .map(|c| c.claim_id.clone())
        .collect();
    for e in &mut run.evidence {
        e.coverage_gap = e.claim_ids.iter().any(|c| outcome.unsatisfied.contains(c));
    }
    outcome.evidence = run.evidence;
    outcome.provenance = run.provenance;
    Ok(outcome)
}
