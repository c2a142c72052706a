//! Regenerates the bundled ID43-3 fixture: three synthetic night-time
//! videos of a bridge strike in Dnipro, authored provider responses
//! (`mock.json`), a trust table and the recorded replay cache.
//!
//! ```text
//! cargo run -p veriflow-core --example build_golden_fixture [-- <fixture-root>]
//! ```

use std::path::{Path, PathBuf};

use chrono::{TimeZone, Utc};
use image::{Rgb, RgbImage};
use serde_json::json;
use veriflow_core::gateway::Mode;
use veriflow_core::pipeline::{Pipeline, RunConfig, CACHE_DIR, MOCK_FILE};
use veriflow_core::synth::{textured_scene, write_mp4, SyntheticVideo};

const W: u32 = 64;
const H: u32 = 48;
const FPS: f64 = 10.0;
const FRAMES: usize = 50;

const POST_URL: &str = "https://twitter.com/cesarnews4/status/1521949838916521984";
const ARTICLE_URL: &str = "https://dnipro-news.test/2022/05/04/missile-strike-bridge";
const WIRE_URL: &str = "https://ua-wire.test/news/dnipro-bridge-strike";
const RESHARE_URL: &str = "https://www.youtube.com/watch?v=dnipro-bridge-0405";

fn dim(mut img: RgbImage, factor: u8) -> RgbImage {
    for p in img.pixels_mut() {
        for c in &mut p.0 {
            *c /= factor;
        }
    }
    img
}

/// Dark scene, a white flash starting at `flash_at`, then a smoke scene.
fn strike(seed: u64, flash_at: usize, flash_len: usize) -> SyntheticVideo {
    let night = dim(textured_scene(W, H, seed), 3);
    let smoke = dim(textured_scene(W, H, seed + 1), 2);
    SyntheticVideo::from_fn(W, H, FPS, FRAMES, |i| {
        if i < flash_at {
            night.clone()
        } else if i < flash_at + flash_len {
            RgbImage::from_pixel(W, H, Rgb([255, 250, 235]))
        } else {
            smoke.clone()
        }
    })
}

fn context_yaml() -> String {
    format!(
        r#"posts:
  - text: "Missile strike on the bridge at Naberezhna Zavodska, Dnipro on 04/05/2022."
    platform: Twitter
    url: "{POST_URL}"
    timestamp: "2022-05-04T20:05:00Z"
articles:
  - "{ARTICLE_URL}"
metadata:
  event_type: Missile strike
  content_category: Video
"#
    )
}

const TRUST_YAML: &str = "default: 0.5
domains:
  twitter.com: 0.7
  local: 0.8
  dnipro-news.test: 0.85
  ua-wire.test: 0.8
";

fn description(t0: f64, t1: f64, text: &str, overlays: &[&str]) -> serde_json::Value {
    json!({
        "t_start_s": t0,
        "t_end_s": t1,
        "text": text,
        "objects": ["bridge"],
        "scene_tags": ["night", "urban"],
        "overlays": overlays.iter().map(|o| json!({ "text": o })).collect::<Vec<_>>(),
    })
}

fn mock_fixtures() -> serde_json::Value {
    let place = "Naberezhna Zavodska, Dnipro";
    let stamp = "04/05/2022 19:58:37";
    let describe = |asset: &str, flash: f64, overlays: &[&str]| {
        json!({
            "provider": "multimodal_model",
            "operation": "describe_video",
            "match": { "asset_id": asset },
            "response": { "descriptions": [
                description(0.0, flash, "Wide shot.", overlays),
                description(flash, flash + 0.5, "Bright flash.", &[]),
                description(flash + 0.5, 5.0, "Rising smoke.", &[]),
            ]}
        })
    };
    let context = |url: &str, value: serde_json::Value| {
        json!({
            "provider": "multimodal_model",
            "operation": "extract_source_context",
            "match": { "url": url },
            "response": value,
        })
    };
    let page = |url: &str, title: &str, publisher: &str, body: &str| {
        json!({
            "provider": "web_search",
            "operation": "fetch",
            "match": { "url": url },
            "response": {
                "url": url,
                "title": title,
                "publisher": publisher,
                "body": body,
                "published_at": "2022-05-04T21:30:00Z",
            }
        })
    };
    json!({ "fixtures": [
        describe("ID43-1.mp4", 2.0, &[place]),
        describe("ID43-2.mp4", 2.5, &[stamp, place]),
        describe("ID43-3.mp4", 1.5, &[place]),
        {
            "provider": "multimodal_model",
            "operation": "extract_claims",
            "response": { "claims": [{
                "text": "Missile strike on the bridge at Naberezhna Zavodska, Dnipro on 04/05/2022.",
                "source": "post",
                "index": 0,
                "suggested_tools": ["ReverseImageSearch"],
            }]}
        },
        context(POST_URL, json!({
            "source_detail": "Twitter post by @cesarnews4, the earliest upload of the footage",
            "where": { "place_name": place },
            "when": { "date": "2022-05-04", "time": "19:58:37", "cues": [stamp] },
            "who": "Cesar News (@cesarnews4), eyewitness footage",
            "why": "Eyewitness report of a missile strike on a Dnipro bridge",
        })),
        context(ARTICLE_URL, json!({
            "source_detail": "Dnipro News report on the strike",
            "where": { "place_name": place, "geo": { "lat": 48.4647, "lon": 35.0462 } },
            "when": { "date": "2022-05-04", "cues": ["4 May 2022"] },
            "who": "Russian armed forces (missile launch); Dnipro emergency services",
            "why": "Strike on transport infrastructure crossing the Dnipro river",
        })),
        context(WIRE_URL, json!({
            "source_detail": "UA Wire report on the strike",
            "where": { "place_name": place, "geo": { "lat": 48.4652, "lon": 35.0457 } },
            "when": { "date": "2022-05-04", "cues": ["4 May"] },
            "who": "Russian armed forces",
            "why": "Attack on a road and tram bridge",
        })),
        page(ARTICLE_URL, "Missile hits bridge in Dnipro", "Dnipro News",
            "A missile struck the bridge on Naberezhna Zavodska in Dnipro on 4 May 2022 in the evening. \
             The impact point lies at 48.4647° N, 35.0462° E. Emergency services reported damage to the road deck."),
        page(WIRE_URL, "Dnipro bridge hit by missile", "UA Wire",
            "On 4 May 2022 a missile hit the bridge at Naberezhna Zavodska, Dnipro. Footage filmed from a nearby hotel \
             shows a fireball and rising smoke."),
        {
            "provider": "web_search",
            "operation": "search",
            "response": { "results": [
                {
                    "url": ARTICLE_URL,
                    "title": "Missile hits bridge in Dnipro",
                    "snippet": "A missile struck the bridge on Naberezhna Zavodska in Dnipro on 4 May 2022.",
                    "publisher": "Dnipro News",
                    "published_at": "2022-05-04T21:30:00Z",
                },
                {
                    "url": WIRE_URL,
                    "title": "Dnipro bridge hit by missile",
                    "snippet": "On 4 May 2022 a missile hit the bridge at Naberezhna Zavodska, Dnipro.",
                    "publisher": "UA Wire",
                    "published_at": "2022-05-04T21:30:00Z",
                },
            ]}
        },
        {
            "provider": "reverse_image_search",
            "operation": "reverse_search",
            "response": { "results": [{
                "url": RESHARE_URL,
                "title": "Missile strike on Dnipro bridge",
                "snippet": "Reupload of the video of the missile strike at Naberezhna Zavodska, Dnipro.",
                "publisher": "YouTube",
                "published_at": "2022-05-05T08:00:00Z",
            }]}
        },
        {
            "provider": "fact_check_db",
            "operation": "lookup",
            "response": { "entries": [] }
        },
    ]})
}

fn write(path: &Path, bytes: &[u8]) {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).expect("create fixture directory");
    }
    std::fs::write(path, bytes).unwrap_or_else(|e| panic!("write {}: {e}", path.display()));
}

fn main() {
    let root: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/id43"));
    let case = root.join("case/ID43-3");

    let created = Utc.with_ymd_and_hms(2022, 5, 4, 19, 58, 37).unwrap();
    let videos = [
        ("ID43-1.mp4", strike(11, 20, 3)),
        ("ID43-2.mp4", strike(23, 25, 3).with_creation_time(created)),
        ("ID43-3.mp4", strike(37, 15, 3)),
    ];
    for (name, video) in &videos {
        write(&case.join(name), &write_mp4(video).expect("encode video"));
    }
    write(&case.join("context.yaml"), context_yaml().as_bytes());
    write(&root.join("trust.yaml"), TRUST_YAML.as_bytes());
    let mock = serde_json::to_vec_pretty(&mock_fixtures()).expect("serializable");
    write(&root.join(MOCK_FILE), &mock);

    let cache = root.join(CACHE_DIR);
    if cache.exists() {
        std::fs::remove_dir_all(&cache).expect("clear old cache");
    }
    let out = tempfile::tempdir().expect("temp dir");
    let cfg = RunConfig {
        mode: Mode::Record,
        out_dir: out.path().to_path_buf(),
        fixture_root: Some(root.clone()),
        trust_table: Some(root.join("trust.yaml")),
        workers: 1,
        ..RunConfig::default()
    };
    let pipeline = Pipeline::new(cfg).expect("pipeline");
    let outcome = pipeline.run_case(&case, out.path()).expect("record run");
    println!(
        "recorded {} into {} (status {}, {} evidence items)",
        outcome.case_id,
        cache.display(),
        outcome.status.label(),
        outcome.evidence
    );
    if std::env::var_os("SHOW_REPORT").is_some() {
        print!("{}", std::fs::read_to_string(out.path().join("report.md")).unwrap());
    }
}
