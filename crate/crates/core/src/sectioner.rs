//! Stage 3: partition claims into one section per category.

use serde::{Deserialize, Serialize};

use crate::planner::{matched_categories, ClaimCategory, VerificationPlan};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossRef {
    pub claim_id: String,
    pub section_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub section_id: String,
    pub category: ClaimCategory,
    pub claim_ids: Vec<String>,
    pub priority: u32,
    pub cross_refs: Vec<CrossRef>,
}

pub fn section_id(category: ClaimCategory) -> String {
    format!("S{}-{}", category.priority(), category.slug())
}

/// Short prefix used for evidence and provenance ids (`S0`, `S1`, ...).
pub fn section_prefix(section_id: &str) -> &str {
    section_id.split('-').next().unwrap_or(section_id)
}

/// Each claim goes to the section of its planner category. Other
/// categories its text matches become cross references, when those
/// sections exist. Sections come out in priority order.
pub fn section_claims(plan: &VerificationPlan) -> Vec<Section> {
    let present: Vec<ClaimCategory> = ClaimCategory::ALL
        .into_iter()
        .filter(|cat| plan.claims.iter().any(|c| c.category == *cat))
        .collect();
    present
        .iter()
        .map(|&cat| {
            let mut claim_ids = Vec::new();
            let mut cross_refs = Vec::new();
            for c in plan.claims.iter().filter(|c| c.category == cat) {
                if claim_ids.contains(&c.claim_id) {
                    continue;
                }
                claim_ids.push(c.claim_id.clone());
                for other in matched_categories(&c.text) {
                    if other != cat && present.contains(&other) {
                        cross_refs.push(CrossRef {
                            claim_id: c.claim_id.clone(),
                            section_id: section_id(other),
                        });
                    }
                }
            }
            Section {
                section_id: section_id(cat),
                category: cat,
                claim_ids,
                priority: cat.priority(),
                cross_refs,
            }
        })
        .collect()
}
