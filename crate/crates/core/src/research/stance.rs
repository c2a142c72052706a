//! Stance of an item toward a claim, with the fact it asserts.

use std::collections::BTreeSet;

use crate::evidence::{Fact, Stance};
use crate::planner::{Claim, ClaimCategory};
use crate::research::context::SourceContext;
use crate::text;

pub const OVERLAP_THRESHOLD: f64 = 0.5;

fn keyword_set(s: &str) -> BTreeSet<String> {
    text::keywords(s).into_iter().map(|w| w.to_lowercase()).collect()
}

/// Fraction of the claim's keywords that appear in `other`.
pub fn keyword_overlap(claim: &str, other: &str) -> f64 {
    let k = keyword_set(claim);
    if k.is_empty() {
        return 0.0;
    }
    let o = keyword_set(other);
    k.intersection(&o).count() as f64 / k.len() as f64
}

fn fact(field: &str, value: impl Into<String>) -> Option<Fact> {
    Some(Fact {
        field: field.into(),
        value: value.into(),
    })
}

fn what(claim: &Claim, body: &str) -> (Stance, Option<Fact>) {
    if keyword_overlap(&claim.text, body) >= OVERLAP_THRESHOLD {
        (Stance::Supports, fact("what", text::canonical(&claim.text)))
    } else {
        (Stance::Related, None)
    }
}

fn temporal(claim: &Claim, ctx: Option<&SourceContext>) -> (Stance, Option<Fact>) {
    let Some(when) = ctx.and_then(|c| c.when.as_ref()) else {
        return (Stance::Related, None);
    };
    let dates = claim.dates();
    if let (Some(claimed), Some(found)) = (dates.first(), when.date) {
        let stance = if dates.contains(&found) {
            Stance::Supports
        } else {
            Stance::Contradicts
        };
        let value = if stance == Stance::Supports { found } else { *claimed };
        return (stance, fact("when.date", value.format("%Y-%m-%d").to_string()));
    }
    if dates.is_empty() {
        if let (Some(claimed), Some(found)) = (claim.times().first(), when.time) {
            if claimed.format("%H:%M").to_string() == found.format("%H:%M").to_string() {
                return (
                    Stance::Supports,
                    fact("when.time", claimed.format("%H:%M:%S").to_string()),
                );
            }
        }
    }
    (Stance::Related, None)
}

fn geographic(claim: &Claim, ctx: Option<&SourceContext>, body: &str, radius_km: f64) -> (Stance, Option<Fact>) {
    let places = claim.places();
    let lower = body.to_lowercase();
    if let Some(p) = places.iter().find(|p| lower.contains(&p.to_lowercase())) {
        return (Stance::Supports, fact("where", p.trim().to_lowercase()));
    }
    let found = ctx.and_then(|c| c.where_.as_ref()).and_then(|w| w.geo);
    if let (Some(claimed), Some(found)) = (claim.geo(), found) {
        let label = places
            .first()
            .map(|p| p.trim().to_lowercase())
            .unwrap_or_else(|| format!("{:.4},{:.4}", claimed.lat, claimed.lon));
        return if claimed.distance_km(&found) <= radius_km {
            (Stance::Supports, fact("where", label))
        } else {
            (Stance::Contradicts, fact("where", label))
        };
    }
    (Stance::Related, None)
}

fn entity(claim: &Claim, body: &str) -> (Stance, Option<Fact>) {
    let lower = body.to_lowercase();
    if let Some(e) = claim.entities().iter().find(|e| lower.contains(&e.to_lowercase())) {
        return (Stance::Supports, fact("who", e.trim().to_lowercase()));
    }
    what(claim, body)
}

/// Category-specific rules: dates for temporal claims, places or
/// coordinates for geographic ones, named entities for entity claims and
/// keyword overlap otherwise.
pub fn assess_stance(claim: &Claim, ctx: Option<&SourceContext>, body: &str, radius_km: f64) -> (Stance, Option<Fact>) {
    let mut full = body.to_string();
    if let Some(c) = ctx {
        full.push(' ');
        full.push_str(&c.text());
    }
    match claim.category {
        ClaimCategory::Temporal => temporal(claim, ctx),
        ClaimCategory::Geographic => geographic(claim, ctx, &full, radius_km),
        ClaimCategory::Entity => entity(claim, &full),
        ClaimCategory::Contextual => what(claim, &full),
    }
}
