use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use tracing_subscriber::EnvFilter;
use veriflow_core::gateway::Mode;
use veriflow_core::pipeline::{exit, Pipeline, PipelineError, RunConfig};

/// Verify a multimedia case package (or a batch of them) and write the
/// plan, evidence, provenance and report artifacts.
///
/// Settings come from the config file, then flags, then `VERIFLOW_*`
/// environment variables, each overriding the previous.
#[derive(Debug, Parser)]
#[command(name = "veriflow", version, group(ArgGroup::new("input").required(true).args(["case_dir", "manifest"])))]
struct Args {
    /// Case directory holding media files and an optional context.yaml.
    #[arg(long)]
    case_dir: Option<PathBuf>,
    /// Batch manifest: one case directory per line, `#` starts a comment.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// live, record, replay or mock.
    #[arg(long)]
    mode: Option<Mode>,
    /// Output directory (batch runs write one subdirectory per case).
    #[arg(long)]
    out: Option<PathBuf>,
    /// YAML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// YAML trust table with `default` and `domains`.
    #[arg(long)]
    trust_table: Option<PathBuf>,
    #[arg(long)]
    max_iterations: Option<u32>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    /// Fixture root with `cache/` and `mock.json`.
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

fn config(args: &Args) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(o) = &args.out {
        cfg.out_dir = o.clone();
    }
    if let Some(t) = &args.trust_table {
        cfg.trust_table = Some(t.clone());
    }
    if let Some(n) = args.max_iterations {
        cfg.budget.max_iterations = n;
    }
    if let Some(n) = args.workers {
        cfg.workers = n;
    }
    if let Some(f) = &args.fixtures {
        cfg.fixture_root = Some(f.clone());
    }
    cfg.apply_env(|k| std::env::var(k).ok())?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<i32, PipelineError> {
    let cfg = config(args)?;
    let pipeline = Pipeline::new(cfg)?;
    if let Some(dir) = &args.case_dir {
        let out = pipeline.config().out_dir.clone();
        let o = pipeline.run_case(dir, &out)?;
        println!(
            "{}: {} ({} evidence items) -> {}",
            o.case_id,
            o.status.label(),
            o.evidence,
            o.out_dir.display()
        );
        for s in &o.aborted_sections {
            eprintln!("warning: research for section {s} was aborted");
        }
        return Ok(exit::OK);
    }
    let manifest = args.manifest.as_ref().expect("clap enforces one input");
    let summary = pipeline.run_batch(manifest)?;
    println!("{summary}");
    Ok(summary.exit_code())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();
    let code = match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
