//! Multi-stage multimedia verification pipeline.
//!
//! A case package (videos, images, contextual claims) flows through six
//! stages: media processing, planning, sectioning, iterative research,
//! evidence aggregation and report rendering. Every external service is
//! reached through [`gateway::Gateway`], whose record/replay cache makes
//! whole runs reproducible offline.

pub mod case;
pub mod digest;
pub mod evidence;
pub mod exec;
pub mod gateway;
pub mod media;
pub mod pipeline;
pub mod planner;
pub mod report;
pub mod research;
pub mod sectioner;
pub mod synth;
pub mod text;

pub use case::{load_case, media_mix_stats, validate_case, CasePackage, MediaAsset, MediaKind};
pub use evidence::{Evidence, EvidenceCategory, Stance, Verdict, VerdictStatus};
pub use gateway::{Gateway, Mode};
pub use pipeline::{run_batch, run_case, RunConfig};
pub use planner::{ClaimCategory, ToolKind, VerificationPlan};
pub use report::VerificationReport;
