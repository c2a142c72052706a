//! End-to-end orchestration: ingest, media, forensics, planning, sectioned
//! research, aggregation and report rendering for one case or a batch.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::case::{
    load_case, media_mix_stats, validate_batch, validate_case, CaseError, CasePackage, MixStats, Severity,
};
use crate::digest::{sha256_hex, sha256_parts};
use crate::evidence::{EvidenceStore, StoreExport, Thresholds, VerdictStatus};
use crate::exec::Executor;
use crate::gateway::{FixtureAdapter, Gateway, GatewayError, HttpAdapter, Mode, ProviderAdapter};
use crate::media::{analyze_assets, AssetAnalysis, KeyframeParams, MediaError};
use crate::planner::{build_plan, PlanError, VerificationPlan};
use crate::report::{build_report, to_markdown, ReportError, ReportInputs};
use crate::research::provenance::DagError;
use crate::research::source::{TrustTableError, DEFAULT_HORIZON_DAYS};
use crate::research::{
    check_dag, research_section, run_forensic_tool, ForensicFindings, ProvenanceGraph, ProvenanceRecord,
    ResearchBudget, ResearchError, StepStatus, ToolContext, ToolRegistry, ROOT_STEP,
};
use crate::sectioner::section_claims;

/// Process exit codes. Stable within a schema major version.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INGEST: i32 = 3;
    pub const PROVIDER: i32 = 4;
    pub const DECODE: i32 = 5;
    pub const PLAN: i32 = 6;
    pub const REPORT: i32 = 7;
    pub const BATCH_PARTIAL: i32 = 8;
}

/// Most workers a batch may use while recording against live providers.
pub const RECORD_WORKER_CAP: usize = 4;

/// Message and exit code of a case that failed before running.
type Failure = (String, i32);

pub const PLAN_FILE: &str = "plan.json";
pub const PROVENANCE_FILE: &str = "provenance.json";
pub const EVIDENCE_FILE: &str = "evidence.json";
pub const REPORT_MD_FILE: &str = "report.md";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const IMAGE_DIR: &str = "report";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error(transparent)]
    Ingest(#[from] CaseError),
    #[error("case {case_id} is invalid: {issues}")]
    InvalidCase { case_id: String, issues: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Research(#[from] ResearchError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("provenance check failed: {0}")]
    Provenance(#[from] DagError),
    #[error("evidence {evidence} cites unknown step {step}")]
    UnresolvedStep { evidence: String, step: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{failed} of {total} cases failed")]
    BatchPartial { failed: usize, total: usize },
}

impl PipelineError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        fn gateway(e: &GatewayError) -> i32 {
            match e {
                GatewayError::Misconfigured(_) => exit::CONFIG,
                GatewayError::Io(_) => exit::IO,
                _ => exit::PROVIDER,
            }
        }
        match self {
            Self::Config(_) | Self::Manifest { .. } => exit::CONFIG,
            Self::Ingest(CaseError::Io { .. }) => exit::IO,
            Self::Ingest(_) | Self::InvalidCase { .. } => exit::INGEST,
            Self::Gateway(e) => gateway(e),
            Self::Media(MediaError::Gateway(e)) => gateway(e),
            Self::Media(MediaError::Io(_)) => exit::IO,
            Self::Media(MediaError::InvalidParams(_)) => exit::CONFIG,
            Self::Media(_) => exit::DECODE,
            Self::Plan(PlanError::Gateway(e)) => gateway(e),
            Self::Plan(_) => exit::PLAN,
            Self::Research(ResearchError::UnknownClaim { .. }) => exit::PLAN,
            Self::Research(_) => exit::CONFIG,
            Self::Report(_) | Self::Provenance(_) | Self::UnresolvedStep { .. } => exit::REPORT,
            Self::Io { .. } => exit::IO,
            Self::BatchPartial { .. } => exit::BATCH_PARTIAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub out_dir: PathBuf,
    /// Holds `cache/` and, for mock runs, `mock.json`.
    pub fixture_root: Option<PathBuf>,
    pub trust_table: Option<PathBuf>,
    pub thresholds: Thresholds,
    pub budget: ResearchBudget,
    pub keyframes: KeyframeParams,
    /// 0 means one per logical core.
    pub workers: usize,
    pub horizon_days: i64,
    pub provider_timeout_s: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Replay,
            out_dir: PathBuf::from("out"),
            fixture_root: None,
            trust_table: None,
            thresholds: Thresholds::default(),
            budget: ResearchBudget::default(),
            keyframes: KeyframeParams::default(),
            workers: 0,
            horizon_days: DEFAULT_HORIZON_DAYS,
            provider_timeout_s: 30,
        }
    }
}

pub const MOCK_FILE: &str = "mock.json";
pub const CACHE_DIR: &str = "cache";

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let raw = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let de = serde_yaml::Deserializer::from_str(&raw);
        serde_path_to_error::deserialize(de)
            .map_err(|e| PipelineError::Config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))
    }

    /// Applies `VERIFLOW_*` overrides; `get` is usually `std::env::var`.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), PipelineError> {
        let bad = |key: &str, v: &str| PipelineError::Config(format!("{key}={v} is not valid"));
        if let Some(v) = get("VERIFLOW_MODE") {
            self.mode = v.parse().map_err(PipelineError::Config)?;
        }
        if let Some(v) = get("VERIFLOW_OUT") {
            self.out_dir = v.into();
        }
        if let Some(v) = get("VERIFLOW_FIXTURES") {
            self.fixture_root = Some(v.into());
        }
        if let Some(v) = get("VERIFLOW_TRUST_TABLE") {
            self.trust_table = Some(v.into());
        }
        if let Some(v) = get("VERIFLOW_WORKERS") {
            self.workers = v.parse().map_err(|_| bad("VERIFLOW_WORKERS", &v))?;
        }
        if let Some(v) = get("VERIFLOW_MAX_ITERATIONS") {
            self.budget.max_iterations = v.parse().map_err(|_| bad("VERIFLOW_MAX_ITERATIONS", &v))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        let t = &self.thresholds;
        if !(0.0..=1.0).contains(&t.tau_v) {
            return bad(format!("thresholds.tau_v must be in [0, 1], got {}", t.tau_v));
        }
        if !(0.0..=1.0).contains(&t.refute_margin) {
            return bad(format!(
                "thresholds.refute_margin must be in [0, 1], got {}",
                t.refute_margin
            ));
        }
        if t.weights.normalized().is_none() {
            return bad("thresholds.weights must be non-negative with a positive sum".into());
        }
        if !(t.conflict_radius_km.is_finite() && t.conflict_radius_km > 0.0) {
            return bad(format!(
                "thresholds.conflict_radius_km must be positive, got {}",
                t.conflict_radius_km
            ));
        }
        self.budget.validate()?;
        let k = &self.keyframes;
        if k.max_frames == 0 || k.downscale_px == 0 || !(k.min_gap_s.is_finite() && k.min_gap_s >= 0.0) {
            return bad("keyframes need max_frames >= 1, downscale_px >= 1 and min_gap_s >= 0".into());
        }
        if self.horizon_days < 0 {
            return bad("horizon_days must be non-negative".into());
        }
        if matches!(self.mode, Mode::Replay | Mode::Mock | Mode::Record) && self.fixture_root.is_none() {
            return bad(format!("{} mode requires fixture_root", self.mode));
        }
        Ok(())
    }

    /// Worker count after resolving 0 and applying the record-mode cap.
    pub fn effective_workers(&self) -> usize {
        let n = if self.workers == 0 {
            crate::exec::default_workers()
        } else {
            self.workers
        };
        if self.mode == Mode::Record {
            n.min(RECORD_WORKER_CAP)
        } else {
            n
        }
    }
}

/// Gateway for `cfg.mode`. Record uses HTTP endpoints from the environment
/// when any are set and the fixture root's `mock.json` otherwise.
pub fn build_gateway(cfg: &RunConfig) -> Result<Gateway, PipelineError> {
    let timeout = Duration::from_secs(cfg.provider_timeout_s.max(1));
    let mut gw = Gateway::new(cfg.mode);
    if let Some(root) = &cfg.fixture_root {
        gw = gw.with_cache(root.join(CACHE_DIR));
    }
    let mock = cfg
        .fixture_root
        .as_ref()
        .map(|r| r.join(MOCK_FILE))
        .filter(|p| p.is_file());
    let load_mock = |p: &Path| -> Result<Arc<dyn ProviderAdapter>, PipelineError> {
        Ok(Arc::new(
            FixtureAdapter::from_file(p).map_err(|e| PipelineError::Config(e.to_string()))?,
        ))
    };
    let http = HttpAdapter::from_env(timeout);
    let adapter: Option<Arc<dyn ProviderAdapter>> = match cfg.mode {
        Mode::Live if http.endpoints().is_empty() => {
            return Err(PipelineError::Config(
                "live mode requires provider endpoints (MULTIMODAL_MODEL_ENDPOINT, WEB_SEARCH_ENDPOINT, ...)".into(),
            ))
        }
        Mode::Live => Some(Arc::new(http)),
        Mode::Record if !http.endpoints().is_empty() => Some(Arc::new(http)),
        Mode::Record | Mode::Mock => mock.as_deref().map(load_mock).transpose()?,
        Mode::Replay => None,
    };
    if let Some(a) = adapter {
        gw = gw.with_adapter(a);
    }
    gw.check()?;
    Ok(gw)
}

/// One finished case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub case_id: String,
    pub out_dir: PathBuf,
    pub status: VerdictStatus,
    pub evidence: usize,
    pub aborted_sections: Vec<String>,
}

/// Per-case line of a batch run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchRow {
    pub case_dir: PathBuf,
    pub case_id: Option<String>,
    pub result: Result<VerdictStatus, String>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub rows: Vec<BatchRow>,
    pub stats: Option<MixStats>,
}

impl BatchSummary {
    pub fn ok(&self) -> usize {
        self.rows.iter().filter(|r| r.result.is_ok()).count()
    }

    pub fn failed(&self) -> usize {
        self.rows.len() - self.ok()
    }

    pub fn exit_code(&self) -> i32 {
        if self.failed() == 0 {
            exit::OK
        } else {
            exit::BATCH_PARTIAL
        }
    }
}

impl fmt::Display for BatchSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let id = r
                .case_id
                .as_deref()
                .map_or_else(|| r.case_dir.display().to_string(), str::to_string);
            match &r.result {
                Ok(status) => writeln!(f, "ok     {id}  {}", status.label())?,
                Err(e) => writeln!(f, "failed {id}  exit={}  {e}", r.exit_code)?,
            }
        }
        if let Some(s) = &self.stats {
            writeln!(f, "{s}")?;
        }
        write!(f, "ok={} failed={}", self.ok(), self.failed())
    }
}

/// Reads a batch manifest: one case directory per line, `#` comments and
/// blank lines ignored, relative entries resolved against the manifest.
pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let raw = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let dirs: Vec<PathBuf> = raw
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| base.join(l))
        .collect();
    if dirs.is_empty() {
        return Err(PipelineError::Manifest {
            path: path.to_path_buf(),
            message: "lists no case directories".into(),
        });
    }
    Ok(dirs)
}

fn digest_json(value: &impl Serialize) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("serializable"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), PipelineError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}

/// Analyses with keyframe paths relative to the output directory, so
/// digests do not depend on where the run writes.
fn portable(analyses: &[AssetAnalysis]) -> Vec<AssetAnalysis> {
    let mut out = analyses.to_vec();
    for a in &mut out {
        if let AssetAnalysis::Video(v) = a {
            for k in &mut v.keyframes {
                k.image_path = Path::new(IMAGE_DIR).join(format!("{}.jpg", k.slug));
            }
        }
    }
    out
}

/// A configured pipeline: gateway, trust table and tools shared by every
/// case it runs.
pub struct Pipeline {
    cfg: RunConfig,
    gw: Gateway,
    trust: crate::research::TrustTable,
    tools: ToolRegistry,
    exec: Executor,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let gw = build_gateway(&cfg)?;
        Self::with_gateway(cfg, gw)
    }

    /// Uses `gw` as given; `cfg.mode` and `cfg.fixture_root` are ignored.
    pub fn with_gateway(cfg: RunConfig, gw: Gateway) -> Result<Self, PipelineError> {
        let mut checked = cfg.clone();
        checked.fixture_root.get_or_insert_with(PathBuf::new);
        checked.validate()?;
        let trust = match &cfg.trust_table {
            Some(p) => crate::research::TrustTable::load(p)
                .map_err(|e: TrustTableError| PipelineError::Config(e.to_string()))?,
            None => crate::research::TrustTable::default(),
        };
        let exec = Executor::new(cfg.effective_workers());
        Ok(Self {
            cfg,
            gw,
            trust,
            tools: ToolRegistry::standard(),
            exec,
        })
    }

    pub fn with_tools(mut self, tools: ToolRegistry) -> Self {
        self.tools = tools;
        self
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gw
    }

    pub fn run_case(&self, case_dir: &Path, out_dir: &Path) -> Result<CaseOutcome, PipelineError> {
        let case = load_case(case_dir)?;
        self.run_loaded(&case, out_dir, &self.exec)
    }

    /// Runs every case in the manifest into `<out_dir>/<case_id>`. Cases run
    /// concurrently, each on a single thread; one failure does not stop the
    /// others.
    pub fn run_batch(&self, manifest: &Path) -> Result<BatchSummary, PipelineError> {
        let dirs = read_manifest(manifest)?;
        let loaded: Vec<Result<CasePackage, PipelineError>> =
            dirs.iter().map(|d| load_case(d).map_err(PipelineError::from)).collect();
        let cases: Vec<CasePackage> = loaded.iter().filter_map(|r| r.as_ref().ok().cloned()).collect();
        let stats = media_mix_stats(&cases).ok();
        let duplicates: BTreeSet<String> = validate_batch(&cases)
            .into_iter()
            .filter(|i| i.code == crate::case::codes::DUPLICATE_CASE_ID)
            .map(|i| i.subject)
            .collect();

        let jobs: Vec<(&PathBuf, Result<CasePackage, Failure>)> = dirs
            .iter()
            .zip(loaded)
            .map(|(d, r)| {
                let r = r
                    .and_then(|c| {
                        if duplicates.contains(&c.case_id) {
                            Err(PipelineError::InvalidCase {
                                case_id: c.case_id.clone(),
                                issues: "case id appears more than once in the batch".into(),
                            })
                        } else {
                            Ok(c)
                        }
                    })
                    .map_err(|e| (e.to_string(), e.exit_code()));
                (d, r)
            })
            .collect();
        let inner = Executor::sequential();
        let rows = self.exec.map(&jobs, |(dir, job)| {
            let (case_id, result) = match job {
                Ok(case) => {
                    let out = self.cfg.out_dir.join(&case.case_id);
                    let r = self.run_loaded(case, &out, &inner).map(|o| o.status);
                    (
                        Some(case.case_id.clone()),
                        r.map_err(|e| (e.to_string(), e.exit_code())),
                    )
                }
                Err(e) => (None, Err(e.clone())),
            };
            match result {
                Ok(status) => BatchRow {
                    case_dir: dir.to_path_buf(),
                    case_id,
                    result: Ok(status),
                    exit_code: exit::OK,
                },
                Err((message, code)) => {
                    tracing::error!(case = %dir.display(), "case failed: {message}");
                    BatchRow {
                        case_dir: dir.to_path_buf(),
                        case_id,
                        result: Err(message),
                        exit_code: code,
                    }
                }
            }
        });
        Ok(BatchSummary { rows, stats })
    }

    fn run_loaded(&self, case: &CasePackage, out: &Path, exec: &Executor) -> Result<CaseOutcome, PipelineError> {
        let issues = validate_case(case);
        for i in issues.iter().filter(|i| i.severity == Severity::Warning) {
            tracing::warn!(case = %case.case_id, "{i}");
        }
        let errors: Vec<String> = issues
            .iter()
            .filter(|i| i.severity == Severity::Error)
            .map(|i| i.to_string())
            .collect();
        if !errors.is_empty() {
            return Err(PipelineError::InvalidCase {
                case_id: case.case_id.clone(),
                issues: errors.join("; "),
            });
        }
        std::fs::create_dir_all(out).map_err(|e| PipelineError::io(out, e))?;
        let gw = &self.gw;
        let record = |step: &str, tool: &str, input: String, output: String, parents: Vec<String>| ProvenanceRecord {
            step_id: step.to_string(),
            tool: tool.to_string(),
            input_digest: input,
            output_digest: output,
            parents,
            at: gw.clock().now(),
            status: StepStatus::Ok,
            note: None,
        };

        // Stage 1: ingest.
        let mut assets = case.assets.clone();
        assets.sort_by(|a, b| a.asset_id.cmp(&b.asset_id));
        let mut asset_digests = Vec::with_capacity(assets.len());
        for a in &assets {
            let bytes = std::fs::read(&a.path).map_err(|e| PipelineError::io(&a.path, e))?;
            asset_digests.push(sha256_hex(&bytes));
        }
        let ids: Vec<&str> = assets.iter().map(|a| a.asset_id.as_str()).collect();
        let mut records = vec![record(
            ROOT_STEP,
            "load_case",
            sha256_parts(asset_digests.iter().map(|d| d.as_bytes())),
            digest_json(&(&case.case_id, &ids, &case.context)),
            vec![],
        )];

        // Stage 2: media, then per-asset forensics.
        let analyses = analyze_assets(&assets, gw, &self.cfg.keyframes, &out.join(IMAGE_DIR), exec)?;
        let portable = portable(&analyses);
        for (a, d) in portable.iter().zip(&asset_digests) {
            let tool = if a.as_video().is_some() {
                "analyze_video"
            } else {
                "analyze_image"
            };
            records.push(record(
                &format!("media:{}", a.asset_id()),
                tool,
                d.clone(),
                digest_json(a),
                vec![ROOT_STEP.into()],
            ));
        }
        let forensics: Vec<ForensicFindings> = exec.map(&assets, |a| {
            run_forensic_tool(a, analyses.iter().find(|x| x.asset_id() == a.asset_id))
        });
        for (f, d) in forensics.iter().zip(&asset_digests) {
            records.push(record(
                &format!("forensic:{}", f.asset_id),
                "forensic_check",
                d.clone(),
                digest_json(f),
                vec![format!("media:{}", f.asset_id)],
            ));
        }

        // Stage 3: plan.
        let plan: VerificationPlan = build_plan(case, &analyses, gw)?;
        let media_steps: Vec<String> = portable.iter().map(|a| format!("media:{}", a.asset_id())).collect();
        records.push(record(
            "plan",
            "build_plan",
            digest_json(&portable),
            digest_json(&plan),
            media_steps,
        ));
        write_json(&out.join(PLAN_FILE), &plan)?;

        // Stage 4: sectioned research.
        let sections = section_claims(&plan);
        let mut ctx = ToolContext::new(case, &analyses, &forensics, gw, &self.trust);
        ctx.horizon_days = self.cfg.horizon_days;
        ctx.radius_km = self.cfg.thresholds.conflict_radius_km;
        let ctx = ctx;
        let outcomes = exec
            .map(&sections, |s| {
                research_section(s, &plan, &self.tools, &ctx, &self.cfg.budget, "plan")
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;

        // Stage 5: aggregate.
        let store = EvidenceStore::new();
        let mut aborted = Vec::new();
        let mut aggregate_parents: Vec<String> = forensics.iter().map(|f| format!("forensic:{}", f.asset_id)).collect();
        let mut collected = Vec::new();
        for o in outcomes {
            if o.aborted {
                aborted.push(o.section_id.clone());
            }
            aggregate_parents.push(o.section_id.clone());
            collected.extend(o.evidence.iter().map(|e| e.evidence_id.clone()));
            store.append(o.evidence);
            records.extend(o.provenance);
        }
        if sections.is_empty() {
            aggregate_parents.push("plan".into());
        }
        let export: StoreExport = store.finalize(&plan.claims, &self.cfg.thresholds);
        records.push(record(
            "aggregate",
            "evidence_store",
            digest_json(&collected),
            digest_json(&export),
            aggregate_parents,
        ));

        // Stage 6: report.
        let report = build_report(&ReportInputs {
            case,
            plan: &plan,
            store: &export,
            analyses: &analyses,
            forensics: &forensics,
            aborted_sections: &aborted,
        })?;
        let markdown = to_markdown(&report);
        let structured = report.to_structured();
        records.push(record(
            "report",
            "report_gen",
            digest_json(&export),
            sha256_hex(markdown.as_bytes()),
            vec!["aggregate".into()],
        ));

        check_dag(&records, ROOT_STEP)?;
        let steps: BTreeSet<&str> = records.iter().map(|r| r.step_id.as_str()).collect();
        if let Some(e) = export.evidence.iter().find(|e| !steps.contains(e.step_id.as_str())) {
            return Err(PipelineError::UnresolvedStep {
                evidence: e.evidence_id.clone(),
                step: e.step_id.clone(),
            });
        }

        write_json(&out.join(PROVENANCE_FILE), &ProvenanceGraph::new(records))?;
        write_json(&out.join(EVIDENCE_FILE), &export)?;
        write_json(&out.join(REPORT_JSON_FILE), &structured)?;
        let md_path = out.join(REPORT_MD_FILE);
        std::fs::write(&md_path, &markdown).map_err(|e| PipelineError::io(&md_path, e))?;
        tracing::info!(case = %case.case_id, status = report.summary.status.label(), evidence = export.evidence.len(), "case complete");
        Ok(CaseOutcome {
            case_id: case.case_id.clone(),
            out_dir: out.to_path_buf(),
            status: report.summary.status,
            evidence: export.evidence.len(),
            aborted_sections: aborted,
        })
    }
}

/// Runs one case with `cfg`, writing into `cfg.out_dir`.
pub fn run_case(case_dir: &Path, cfg: &RunConfig) -> Result<CaseOutcome, PipelineError> {
    Pipeline::new(cfg.clone())?.run_case(case_dir, &cfg.out_dir)
}

/// Runs a batch manifest with `cfg`.
pub fn run_batch(manifest: &Path, cfg: &RunConfig) -> Result<BatchSummary, PipelineError> {
    Pipeline::new(cfg.clone())?.run_batch(manifest)
}
