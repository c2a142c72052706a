#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use veriflow_core::evidence::{Evidence, EvidenceCategory, Fact, Stance};
use veriflow_core::gateway::{Mode, SearchResult};
use veriflow_core::pipeline::{CaseOutcome, Pipeline, RunConfig, MOCK_FILE};
use veriflow_core::planner::ToolKind;
use veriflow_core::research::context::{PlaceContext, SourceContext, TimeContext};
use veriflow_core::research::SourceAssessment;
use veriflow_core::synth::{plain_jpeg, textured_scene, write_mp4, SyntheticVideo};
use veriflow_core::text::GeoPoint;

pub const POST_URL: &str = "https://twitter.com/cesarnews4/status/1521949838916521984";

pub fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/id43")
}

pub fn golden_case() -> PathBuf {
    fixture_root().join("case/ID43-3")
}

pub fn golden_config(out: &Path, workers: usize) -> RunConfig {
    RunConfig {
        mode: Mode::Replay,
        out_dir: out.to_path_buf(),
        fixture_root: Some(fixture_root()),
        trust_table: Some(fixture_root().join("trust.yaml")),
        workers,
        ..RunConfig::default()
    }
}

pub fn run_golden(out: &Path, workers: usize) -> CaseOutcome {
    Pipeline::new(golden_config(out, workers))
        .expect("golden pipeline")
        .run_case(&golden_case(), out)
        .expect("golden run")
}

/// Hash over every file's relative path and contents, in path order.
pub fn tree_hash(root: &Path) -> String {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut files = Vec::new();
    walk(root, root, &mut files);
    files.sort();
    let mut h = Sha256::new();
    for (rel, bytes) in files {
        h.update(rel.as_bytes());
        h.update([0]);
        h.update(Sha256::digest(&bytes));
    }
    hex::encode(h.finalize())
}

/// Checks `provenance.json` against `evidence.json` from first principles:
/// unique ids, known parents, no cycles, everything reachable from the
/// root, and every evidence step present.
pub fn check_provenance(out: &Path) -> Result<usize, String> {
    let prov: Value = serde_json::from_slice(&std::fs::read(out.join("provenance.json")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let evidence: Value = serde_json::from_slice(&std::fs::read(out.join("evidence.json")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let root = prov["root"].as_str().ok_or("no root")?.to_string();
    let mut parents: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for r in prov["records"].as_array().ok_or("no records")? {
        let id = r["step_id"].as_str().ok_or("record without id")?.to_string();
        let ps: Vec<String> = r["parents"]
            .as_array()
            .ok_or("record without parents")?
            .iter()
            .map(|p| p.as_str().unwrap_or_default().to_string())
            .collect();
        if parents.insert(id.clone(), ps).is_some() {
            return Err(format!("duplicate step {id}"));
        }
    }
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, ps) in &parents {
        for p in ps {
            if !parents.contains_key(p) {
                return Err(format!("{id} has unknown parent {p}"));
            }
            children.entry(p.as_str()).or_default().push(id.as_str());
        }
    }
    if parents.get(&root).is_none_or(|p| !p.is_empty()) {
        return Err(format!("root {root} missing or has parents"));
    }
    // Kahn's algorithm: a DAG drains completely.
    let mut indegree: BTreeMap<&str, usize> = parents.iter().map(|(k, v)| (k.as_str(), v.len())).collect();
    let mut queue: VecDeque<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
    let mut drained = 0;
    while let Some(n) = queue.pop_front() {
        drained += 1;
        for c in children.get(n).into_iter().flatten() {
            let d = indegree.get_mut(c).unwrap();
            *d -= 1;
            if *d == 0 {
                queue.push_back(c);
            }
        }
    }
    if drained != parents.len() {
        return Err("cycle in provenance".into());
    }
    let mut reached: BTreeSet<&str> = BTreeSet::from([root.as_str()]);
    let mut stack = vec![root.as_str()];
    while let Some(n) = stack.pop() {
        for c in children.get(n).into_iter().flatten() {
            if reached.insert(c) {
                stack.push(c);
            }
        }
    }
    if let Some(lost) = parents.keys().find(|k| !reached.contains(k.as_str())) {
        return Err(format!("{lost} unreachable from {root}"));
    }
    for e in evidence["evidence"].as_array().ok_or("no evidence list")? {
        let step = e["step_id"].as_str().unwrap_or_default();
        if !parents.contains_key(step) {
            return Err(format!("evidence {} cites unknown step {step}", e["evidence_id"]));
        }
    }
    Ok(parents.len())
}

/// Evidence ordered by id with everything else left as is.
pub fn normalized_evidence(out: &Path) -> Value {
    let mut v: Value = serde_json::from_slice(&std::fs::read(out.join("evidence.json")).unwrap()).unwrap();
    if let Some(items) = v["evidence"].as_array_mut() {
        items.sort_by(|a, b| a["evidence_id"].as_str().cmp(&b["evidence_id"].as_str()));
    }
    v
}

pub fn epoch() -> DateTime<Utc> {
    DateTime::<Utc>::UNIX_EPOCH
}

pub struct EvSpec<'a> {
    pub id: &'a str,
    pub claims: &'a [&'a str],
    pub domain: &'a str,
    pub stance: Stance,
    pub date: Option<NaiveDate>,
    pub geo: Option<GeoPoint>,
    pub reliability: f64,
}

pub fn evidence(s: EvSpec) -> Evidence {
    let url = format!("https://{}/{}", s.domain, s.id);
    let context = (s.date.is_some() || s.geo.is_some()).then(|| SourceContext {
        source_detail: format!("Report from {}", s.domain),
        where_: s.geo.map(|g| PlaceContext {
            place_name: String::new(),
            geo: Some(g),
        }),
        when: s.date.map(|d| TimeContext {
            date: Some(d),
            time: None,
            cues: vec![],
        }),
        who: None,
        why: None,
    });
    let fact = match (s.stance, s.date) {
        (Stance::Related, _) => None,
        (_, Some(d)) => Some(Fact {
            field: "when.date".into(),
            value: d.to_string(),
        }),
        _ => Some(Fact {
            field: "what".into(),
            value: "claim".into(),
        }),
    };
    Evidence {
        evidence_id: s.id.to_string(),
        claim_ids: s.claims.iter().map(|c| c.to_string()).collect(),
        stance: s.stance,
        category: EvidenceCategory::RelatedInformation,
        content: format!("Item {} from {}", s.id, s.domain),
        source: SearchResult {
            url: url.clone(),
            title: String::new(),
            snippet: String::new(),
            publisher: s.domain.to_string(),
            published_at: None,
            retrieved_at: epoch(),
        },
        context,
        assessment: SourceAssessment {
            url,
            reliability: s.reliability,
            temporal_consistency: true,
            independent_corroborations: 0,
        },
        confidence: s.reliability,
        step_id: "S0/001".into(),
        coverage_gap: false,
        section_id: "S0-temporal".into(),
        tool: ToolKind::KeywordSearch,
        domain: s.domain.to_string(),
        fact,
        keyframe: None,
    }
}

fn write(path: &Path, bytes: &[u8]) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, bytes).unwrap();
}

/// `videos` video-bearing and `images` image-only cases plus a mock file
/// answering every provider call. Returns (manifest, fixture root).
pub fn synthetic_batch(root: &Path, videos: usize, images: usize) -> (PathBuf, PathBuf) {
    let clip = write_mp4(&SyntheticVideo::scene_cut(16, 16, 10.0, 1.0, 0.5, 3)).unwrap();
    let photo = plain_jpeg(&textured_scene(16, 16, 5), 85).unwrap();
    let mut lines = vec!["# synthetic batch".to_string()];
    for i in 0..videos + images {
        let name = format!("case-{i:02}");
        let dir = root.join("cases").join(&name);
        if i < videos {
            write(&dir.join("clip.mp4"), &clip);
            if i % 3 == 0 {
                write(&dir.join("still.jpg"), &photo);
            }
        } else {
            write(&dir.join("photo.jpg"), &photo);
        }
        lines.push(format!("cases/{name}"));
    }
    let manifest = root.join("manifest.txt");
    write(&manifest, (lines.join("\n") + "\n").as_bytes());
    let fixtures = root.join("fixtures");
    let mock = json!({ "fixtures": [
        { "provider": "multimodal_model", "operation": "describe_video",
          "response": { "descriptions": [{ "t_start_s": 0.0, "t_end_s": 1.0, "text": "Empty street." }] } },
        { "provider": "multimodal_model", "operation": "extract_claims", "response": { "claims": [] } },
        { "provider": "reverse_image_search", "operation": "reverse_search", "response": { "results": [] } },
    ]});
    write(&fixtures.join(MOCK_FILE), &serde_json::to_vec_pretty(&mock).unwrap());
    (manifest, fixtures)
}

pub fn mock_config(out: &Path, fixtures: &Path, workers: usize) -> RunConfig {
    RunConfig {
        mode: Mode::Mock,
        out_dir: out.to_path_buf(),
        fixture_root: Some(fixtures.to_path_buf()),
        workers,
        ..RunConfig::default()
    }
}
