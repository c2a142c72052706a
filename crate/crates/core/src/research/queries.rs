//! Seed and refined search queries.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::evidence::Evidence;
use crate::planner::Claim;
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryOrigin {
    Seed,
    Refined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    pub text: String,
    pub section_id: String,
    pub claim_id: String,
    pub iteration: u32,
    pub origin: QueryOrigin,
}

const SEED_KEYWORDS: usize = 6;
const REFINE_BASE: usize = 4;

fn is_temporal_token(word: &str) -> bool {
    !text::extract_temporal_cues(word).is_empty() || word.chars().all(|c| !c.is_alphabetic())
}

fn contains_ci(haystack: &str, needle: &str) -> bool {
    haystack.to_lowercase().contains(&needle.to_lowercase())
}

/// Claim keywords without raw date or time tokens, then named entities not
/// already covered, then ISO dates.
pub fn seed_text(claim: &Claim) -> String {
    let mut parts: Vec<String> = text::keywords(&claim.text)
        .into_iter()
        .filter(|w| !is_temporal_token(w))
        .take(SEED_KEYWORDS)
        .collect();
    for e in claim.entities() {
        let joined = parts.join(" ");
        if !contains_ci(&joined, &e) {
            parts.push(e);
        }
    }
    for d in claim.dates() {
        parts.push(d.format("%Y-%m-%d").to_string());
    }
    if parts.is_empty() {
        text::canonical(&claim.text)
    } else {
        parts.join(" ")
    }
}

fn novel_terms(seed: &str, claim_id: &str, prior: &[Evidence]) -> Vec<String> {
    let mut items: Vec<&Evidence> = prior.iter().filter(|e| e.addresses(claim_id)).collect();
    items.sort_by(|a, b| a.evidence_id.cmp(&b.evidence_id));
    let mut out: Vec<String> = Vec::new();
    let mut push = |term: &str| {
        let term = term.trim();
        if term.is_empty() || contains_ci(seed, term) || out.iter().any(|t| t.eq_ignore_ascii_case(term)) {
            return;
        }
        out.push(term.to_string());
    };
    for e in items {
        if let Some(ctx) = &e.context {
            if let Some(w) = &ctx.where_ {
                w.place_name.split(", ").for_each(&mut push);
            }
            if let Some(who) = &ctx.who {
                push(who);
            }
        }
        for place in text::find_places(&e.content) {
            push(&place);
        }
    }
    out
}

/// Queries for `claims` in `iteration`. Iteration 0 issues one seed query
/// per claim; later iterations add one new term from prior evidence to the
/// head of the seed. A (claim id, text) pair in `issued` is never repeated.
pub fn generate_queries(
    section_id: &str,
    claims: &[&Claim],
    prior: &[Evidence],
    iteration: u32,
    issued: &BTreeSet<(String, String)>,
) -> Vec<SearchQuery> {
    let mut out: Vec<SearchQuery> = Vec::new();
    let mut taken = issued.clone();
    for claim in claims {
        let id = &claim.claim_id;
        let seed = seed_text(claim);
        let candidate = if iteration == 0 {
            Some((seed, QueryOrigin::Seed))
        } else {
            let base: Vec<&str> = seed.split_whitespace().take(REFINE_BASE).collect();
            let base = base.join(" ");
            novel_terms(&seed, &claim.claim_id, prior)
                .into_iter()
                .map(|t| format!("{base} {t}").trim().to_string())
                .find(|q| !taken.contains(&(id.clone(), q.clone())))
                .map(|q| (q, QueryOrigin::Refined))
        };
        if let Some((text, origin)) = candidate {
            if taken.insert((id.clone(), text.clone())) {
                out.push(SearchQuery {
                    text,
                    section_id: section_id.to_string(),
                    claim_id: claim.claim_id.clone(),
                    iteration,
                    origin,
                });
            }
        }
    }
    out
}
