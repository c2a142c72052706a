use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use veriflow_core::exec::{default_workers, Executor};
use veriflow_core::gateway::Mode;
use veriflow_core::media::keyframes::score_video;
use veriflow_core::media::{DecodedVideo, KeyframeParams};
use veriflow_core::pipeline::{Pipeline, RunConfig};
use veriflow_core::synth::{write_mp4, SyntheticVideo};

fn worker_counts() -> [usize; 2] {
    [1, default_workers().max(4)]
}

fn keyframe_scoring(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.mp4");
    let video = SyntheticVideo::scene_cut(160, 120, 25.0, 8.0, 3.0, 9);
    std::fs::write(&path, write_mp4(&video).unwrap()).unwrap();
    let decoded = DecodedVideo::open(&path).unwrap();
    let params = KeyframeParams::default();
    let mut group = c.benchmark_group("score_video");
    for workers in worker_counts() {
        let exec = Executor::new(workers);
        group.bench_with_input(BenchmarkId::from_parameter(workers), &exec, |b, exec| {
            b.iter(|| score_video(&decoded, &params, exec).unwrap())
        });
    }
    group.finish();
}

fn golden_replay(c: &mut Criterion) {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/id43");
    let case = root.join("case/ID43-3");
    let mut group = c.benchmark_group("golden_replay");
    group.sample_size(10);
    for workers in worker_counts() {
        let out = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            mode: Mode::Replay,
            out_dir: out.path().to_path_buf(),
            fixture_root: Some(root.clone()),
            trust_table: Some(root.join("trust.yaml")),
            workers,
            ..RunConfig::default()
        };
        let pipeline = Pipeline::new(cfg).unwrap();
        group.bench_function(BenchmarkId::from_parameter(workers), |b| {
            b.iter(|| pipeline.run_case(&case, out.path()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, keyframe_scoring, golden_replay);
criterion_main!(benches);
