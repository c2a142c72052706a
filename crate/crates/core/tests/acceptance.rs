//! Acceptance criteria 1-10, one PASS/FAIL line each. Runs without the
//! libtest harness so every line prints under a plain `cargo test`.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use chrono::{NaiveDate, NaiveTime};
use common::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use veriflow_core::evidence::{detect_conflicts, score_confidence, ConflictPair, Evidence, Stance, Verdict, Weights};
use veriflow_core::exec::Executor;
use veriflow_core::media::{extract_keyframes, DecodedVideo, KeyframeParams};
use veriflow_core::pipeline::Pipeline;
use veriflow_core::planner::{Claim, ClaimCategory, ClaimSource, VerificationPlan};
use veriflow_core::report::{
    parse_markdown_structure, to_markdown, CaseSummary, Cited, ClaimLine, ContentClassification, FiveW,
    ForensicSection, OtherFindings, HEADINGS,
};
use veriflow_core::research::{Authenticity, ForensicFindings};
use veriflow_core::sectioner::section_claims;
use veriflow_core::synth::{write_mp4, SyntheticVideo};
use veriflow_core::text::GeoPoint;
use veriflow_core::{VerdictStatus, VerificationReport};

const GOLDEN_BUDGET: Duration = Duration::from_secs(10);
const KEYFRAME_BUDGET: Duration = Duration::from_secs(60);
const KEYFRAME_VIDEOS: usize = 20;
const KEYFRAME_MIN_HITS: usize = 19;
const KEYFRAME_TOLERANCE_FRAMES: i64 = 1;
const CONFIDENCE_SAMPLES: u32 = 1000;
const CONFIDENCE_EPS: f64 = 1e-9;
const CONFLICT_CORPORA: u32 = 200;
const CONFLICT_RADIUS_KM: f64 = 50.0;
const REPORT_SAMPLES: u32 = 100;
const PLAN_SAMPLES: u32 = 500;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn golden_report() -> Outcome {
    let out = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = run_golden(out.path(), 0);
    let took = start.elapsed();
    let md = std::fs::read_to_string(out.path().join("report.md")).unwrap();
    for needle in ["Verified", "48.4647° N, 35.0462° E", "04/05/2022", "19:58:37", POST_URL] {
        ensure(md.contains(needle), format!("report.md lacks {needle:?}"))?;
    }
    ensure(o.status == VerdictStatus::Verified, format!("status {:?}", o.status))?;
    check_provenance(out.path())?;
    ensure(took < GOLDEN_BUDGET, format!("took {took:.2?}"))?;
    Ok(format!("all substrings present, {took:.2?}"))
}

fn dataset_shape() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let (manifest, fixtures) = synthetic_batch(root.path(), 36, 14);
    let out = root.path().join("out");
    let summary = Pipeline::new(mock_config(&out, &fixtures, 0))
        .map_err(|e| e.to_string())?
        .run_batch(&manifest)
        .map_err(|e| e.to_string())?;
    ensure(summary.failed() == 0, format!("{} cases failed", summary.failed()))?;
    let stats = summary.stats.ok_or("no stats")?;
    ensure(stats.cases == 50, format!("{} cases", stats.cases))?;
    ensure(
        stats.video_fraction == 0.72,
        format!("video_fraction {}", stats.video_fraction),
    )?;
    ensure(
        summary.to_string().contains("video_fraction=0.7200"),
        "summary line lacks video_fraction=0.7200",
    )?;
    for row in &summary.rows {
        check_provenance(&out.join(row.case_id.as_deref().ok_or("case without id")?))?;
    }
    Ok("video_fraction=0.7200 over 50 cases".into())
}

fn keyframe_oracle() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let params = KeyframeParams {
        max_frames: 1,
        ..KeyframeParams::default()
    };
    let exec = Executor::new(0);
    let fps = 10.0;
    let start = Instant::now();
    let mut hits = 0;
    for k in 0..KEYFRAME_VIDEOS {
        let cut_frame = 5 + (k * 7) % 30;
        let video = SyntheticVideo::scene_cut(48, 36, fps, 4.0, cut_frame as f64 / fps, 100 + k as u64);
        let path = dir.path().join(format!("cut{k}.mp4"));
        std::fs::write(&path, write_mp4(&video).unwrap()).unwrap();
        let decoded = DecodedVideo::open(&path).map_err(|e| e.to_string())?;
        let frames =
            extract_keyframes("cut", &decoded, &params, &dir.path().join("kf"), &exec).map_err(|e| e.to_string())?;
        if let [only] = frames.as_slice() {
            let found = (only.t_s * fps).round() as i64;
            if (found - cut_frame as i64).abs() <= KEYFRAME_TOLERANCE_FRAMES {
                hits += 1;
            }
        }
    }
    let flat = SyntheticVideo::constant(48, 36, fps, 3.0, [90, 120, 60]);
    let path = dir.path().join("flat.mp4");
    std::fs::write(&path, write_mp4(&flat).unwrap()).unwrap();
    let decoded = DecodedVideo::open(&path).map_err(|e| e.to_string())?;
    let frames =
        extract_keyframes("flat", &decoded, &params, &dir.path().join("kf"), &exec).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(
        hits >= KEYFRAME_MIN_HITS,
        format!("{hits}/{KEYFRAME_VIDEOS} cuts localized"),
    )?;
    ensure(
        frames.len() == 1 && frames[0].t_s == 0.0,
        format!(
            "constant video gave {:?}",
            frames.iter().map(|f| f.t_s).collect::<Vec<_>>()
        ),
    )?;
    ensure(took < KEYFRAME_BUDGET, format!("took {took:.2?}"))?;
    Ok(format!(
        "{hits}/{KEYFRAME_VIDEOS} cuts within ±{KEYFRAME_TOLERANCE_FRAMES} frame, constant -> t=0, {took:.2?}"
    ))
}

fn confidence_properties() -> Outcome {
    let half = Weights { w_r: 0.5, w_c: 0.5 };
    for (r, s, c, want) in [(0.5, 0, 0, 0.50), (0.9, 3, 0, 0.85), (0.9, 0, 3, 0.55)] {
        let got = score_confidence(r, s, c, half);
        ensure(
            (got - want).abs() <= CONFIDENCE_EPS,
            format!("({r}, {s}, {c}) gave {got}, want {want}"),
        )?;
    }
    let strategy = (0.0f64..=1.0, 0usize..60, 0usize..60, 0.0f64..=1.0);
    runner(CONFIDENCE_SAMPLES)
        .run(&strategy, |(r, s, c, w_r)| {
            let w = Weights { w_r, w_c: 1.0 - w_r };
            let score = score_confidence(r, s, c, w);
            let expected = w_r * r + (1.0 - w_r) * (s as f64 + 1.0) / ((s + c) as f64 + 2.0);
            prop_assert!((0.0..=1.0).contains(&score));
            prop_assert!((score - expected).abs() <= CONFIDENCE_EPS);
            prop_assert!(score_confidence(r, s + 1, c, w) >= score);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{CONFIDENCE_SAMPLES} samples bounded and monotone in s; worked examples exact"
    ))
}

fn haversine_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let r = 6371.0;
    let (la1, la2) = (a.0.to_radians(), b.0.to_radians());
    let h = ((la2 - la1) / 2.0).sin().powi(2) + la1.cos() * la2.cos() * ((b.1 - a.1).to_radians() / 2.0).sin().powi(2);
    2.0 * r * h.sqrt().asin()
}

/// Every pair checked directly, no shared code with the store.
fn conflict_oracle(corpus: &[Evidence], radius_km: f64) -> Vec<ConflictPair> {
    let mut out = Vec::new();
    for a in corpus {
        for b in corpus {
            if a.evidence_id >= b.evidence_id || !a.claim_ids.iter().any(|c| b.claim_ids.contains(c)) {
                continue;
            }
            let date = |e: &Evidence| e.context.as_ref().and_then(|c| c.when.as_ref()).and_then(|w| w.date);
            let geo = |e: &Evidence| {
                e.context
                    .as_ref()
                    .and_then(|c| c.where_.as_ref())
                    .and_then(|w| w.geo)
                    .map(|g| (g.lat, g.lon))
            };
            let field = match (date(a), date(b), geo(a), geo(b)) {
                (Some(x), Some(y), _, _) if x != y => Some("when.date"),
                (_, _, Some(x), Some(y)) if haversine_km(x, y) > radius_km => Some("where.geo"),
                _ => match (a.stance, b.stance) {
                    (Stance::Supports, Stance::Contradicts) | (Stance::Contradicts, Stance::Supports) => Some("stance"),
                    _ => None,
                },
            };
            if let Some(f) = field {
                out.push(ConflictPair {
                    a: a.evidence_id.clone(),
                    b: b.evidence_id.clone(),
                    field: f.into(),
                });
            }
        }
    }
    out.sort();
    out
}

fn conflict_corpus() -> impl Strategy<Value = Vec<Evidence>> {
    // Points are either a few hundred metres apart or hundreds of km apart,
    // never near the radius.
    let points = [(48.4647, 35.0462), (48.4652, 35.0457), (50.4501, 30.5234)];
    let claim_sets: [&[&str]; 3] = [&["C01"], &["C02"], &["C01", "C02"]];
    let stances = [Stance::Supports, Stance::Contradicts, Stance::Related];
    let row = (0usize..3, 0usize..3, 0usize..3, 0usize..4, 0usize..3, 0.0f64..=1.0);
    proptest::collection::vec(row, 0..=20).prop_map(move |rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (cs, st, day, pt, dom, rel))| {
                let id = format!("S0-E{i:03}");
                evidence(EvSpec {
                    id: &id,
                    claims: claim_sets[cs],
                    domain: ["a.test", "b.test", "c.test"][dom],
                    stance: stances[st],
                    date: (day > 0).then(|| NaiveDate::from_ymd_opt(2022, 5, 3 + day as u32).unwrap()),
                    geo: points.get(pt).map(|&(lat, lon)| GeoPoint { lat, lon }),
                    reliability: rel,
                })
            })
            .collect()
    })
}

fn conflict_equivalence() -> Outcome {
    let pairs = std::cell::Cell::new(0);
    runner(CONFLICT_CORPORA)
        .run(&conflict_corpus(), |corpus| {
            let got = detect_conflicts(&corpus, CONFLICT_RADIUS_KM);
            let want = conflict_oracle(&corpus, CONFLICT_RADIUS_KM);
            prop_assert_eq!(&got, &want);
            pairs.set(pairs.get() + want.len());
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{CONFLICT_CORPORA} corpora match the pairwise oracle ({} conflicts)",
        pairs.get()
    ))
}

fn provenance_integrity() -> Outcome {
    let mut steps = 0;
    for workers in [1, 4] {
        let out = tempfile::tempdir().unwrap();
        run_golden(out.path(), workers);
        steps += check_provenance(out.path())?;
    }
    let root = tempfile::tempdir().unwrap();
    let (manifest, fixtures) = synthetic_batch(root.path(), 3, 2);
    let out = root.path().join("out");
    let summary = Pipeline::new(mock_config(&out, &fixtures, 2))
        .unwrap()
        .run_batch(&manifest)
        .unwrap();
    for row in &summary.rows {
        steps += check_provenance(&out.join(row.case_id.as_deref().ok_or("case without id")?))?;
    }
    Ok(format!(
        "7 runs, {steps} steps: acyclic, rooted at ingest, all evidence steps resolve"
    ))
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_golden(a.path(), 0);
    run_golden(b.path(), 0);
    let (ha, hb) = (tree_hash(a.path()), tree_hash(b.path()));
    ensure(ha == hb, format!("{ha} != {hb}"))?;
    Ok(format!("tree hash {}", &ha[..16]))
}

fn text() -> impl Strategy<Value = String> {
    "[A-Z][a-z0-9 ,.]{0,30}"
}

fn cited() -> impl Strategy<Value = Cited> {
    (text(), proptest::collection::vec("S[0-3]-E[0-9]{3}", 0..3))
        .prop_map(|(text, evidence_ids)| Cited { text, evidence_ids })
}

fn cited_list() -> impl Strategy<Value = Vec<Cited>> {
    proptest::collection::vec(cited(), 0..4)
}

fn status() -> impl Strategy<Value = VerdictStatus> {
    prop_oneof![
        Just(VerdictStatus::Verified),
        Just(VerdictStatus::PartiallyVerified),
        Just(VerdictStatus::Inconclusive),
        Just(VerdictStatus::Refuted),
    ]
}

fn authenticity() -> impl Strategy<Value = Authenticity> {
    prop_oneof![
        Just(Authenticity::NoManipulationDetected),
        Just(Authenticity::SuspectedManipulation),
        Just(Authenticity::Inconclusive),
    ]
}

fn category() -> impl Strategy<Value = ClaimCategory> {
    proptest::sample::select(ClaimCategory::ALL.to_vec())
}

fn summary() -> impl Strategy<Value = CaseSummary> {
    (
        status(),
        proptest::option::of(text()),
        proptest::option::of((-90.0f64..=90.0, -180.0f64..=180.0)),
        proptest::option::of((2000i32..2030, 1u32..=12, 1u32..=28)),
        proptest::option::of((0u32..24, 0u32..60, 0u32..60)),
        0usize..5,
        0usize..5,
        text(),
    )
        .prop_map(
            |(status, place, geo, date, time, videos, images, rationale)| CaseSummary {
                status,
                place,
                geo: geo.map(|(lat, lon)| GeoPoint { lat, lon }),
                date: date.and_then(|(y, m, d)| NaiveDate::from_ymd_opt(y, m, d)),
                time: time.and_then(|(h, m, s)| NaiveTime::from_hms_opt(h, m, s)),
                videos,
                images,
                rationale,
            },
        )
}

fn classification() -> impl Strategy<Value = ContentClassification> {
    let line = ("C[0-9]{2}", category(), text(), "(verified|unverified|disputed)").prop_map(
        |(claim_id, category, text, label)| ClaimLine {
            claim_id,
            category,
            text,
            label,
        },
    );
    let list = || proptest::collection::vec(text(), 0..3);
    (
        text(),
        text(),
        list(),
        list(),
        list(),
        proptest::collection::vec(line, 0..4),
    )
        .prop_map(
            |(content_category, event_type, tags, platforms, involved_entities, claims)| ContentClassification {
                content_category,
                event_type,
                tags,
                platforms,
                involved_entities,
                claims,
            },
        )
}

fn forensics() -> impl Strategy<Value = ForensicSection> {
    let asset = (
        "[A-Za-z0-9-]{1,8}\\.(mp4|jpg)",
        authenticity(),
        proptest::option::of(text()),
        proptest::collection::vec(text(), 0..3),
        proptest::collection::vec(text(), 0..3),
        proptest::collection::vec(text(), 0..2),
    )
        .prop_map(
            |(asset_id, authenticity, synthetic_type, artifacts, methods, failures)| ForensicFindings {
                asset_id,
                authenticity,
                synthetic_type,
                artifacts,
                methods,
                failures,
            },
        );
    (authenticity(), proptest::collection::vec(asset, 0..3), cited_list()).prop_map(
        |(overall, assets, cross_checks)| ForensicSection {
            overall,
            assets,
            cross_checks,
        },
    )
}

fn ids() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec("C[0-9]{2}", 0..3)
}

fn report() -> impl Strategy<Value = VerificationReport> {
    let five_w = (cited_list(), cited_list(), cited_list(), cited_list(), cited_list()).prop_map(
        |(source_details, where_, when, who, why)| FiveW {
            source_details,
            where_,
            when,
            who,
            why,
        },
    );
    let other = (
        cited_list(),
        cited_list(),
        ids(),
        proptest::collection::vec("S[0-3]-[a-z]{4,10}", 0..2),
    )
        .prop_map(|(related, disputed, gaps, aborted_sections)| OtherFindings {
            related,
            disputed,
            gaps,
            aborted_sections,
        });
    let verdict = (status(), ids(), ids(), ids(), text()).prop_map(
        |(status, verified_claims, unverified_claims, disputed_claims, rationale)| Verdict {
            status,
            verified_claims,
            unverified_claims,
            disputed_claims,
            rationale,
        },
    );
    (
        "[A-Za-z0-9-]{1,10}",
        summary(),
        classification(),
        five_w,
        proptest::collection::vec("report/[a-z0-9_.]{1,16}\\.jpg", 0..4),
        forensics(),
        other,
        verdict,
    )
        .prop_map(
            |(case_id, summary, classification, verified, images, forensics, other, verdict)| VerificationReport {
                report_schema: 1,
                case_id,
                summary,
                classification,
                verified,
                images,
                forensics,
                other,
                verdict,
            },
        )
}

fn report_round_trip() -> Outcome {
    runner(REPORT_SAMPLES)
        .run(&report(), |r| {
            let parsed = parse_markdown_structure(&to_markdown(&r));
            prop_assert!(parsed.is_ok(), "{:?}", parsed.err());
            let parsed = parsed.unwrap();
            prop_assert_eq!(parsed.headings, HEADINGS.map(String::from).to_vec());
            prop_assert_eq!(&parsed.images, &r.images);
            let back: VerificationReport = serde_json::from_value(r.to_structured()).unwrap();
            prop_assert_eq!(back, r);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{REPORT_SAMPLES} reports: five headings in order, structured form lossless"
    ))
}

fn concurrency_equivalence() -> Outcome {
    let one = tempfile::tempdir().unwrap();
    let four = tempfile::tempdir().unwrap();
    run_golden(one.path(), 1);
    run_golden(four.path(), 4);
    let (a, b) = (normalized_evidence(one.path()), normalized_evidence(four.path()));
    ensure(a == b, "evidence.json differs between 1 and 4 workers")?;
    Ok(format!(
        "{} evidence items identical",
        a["evidence"].as_array().map_or(0, Vec::len)
    ))
}

fn plan_strategy() -> impl Strategy<Value = VerificationPlan> {
    let phrases = [
        "Explosion seen",
        "on 04/05/2022",
        "at 19:58",
        "in Dnipro",
        "near the bridge",
        "police attended",
        "by the army",
        "crowd gathers",
        "protest footage",
    ];
    let claim = (category(), proptest::sample::subsequence(phrases.to_vec(), 1..4));
    proptest::collection::vec(claim, 0..30).prop_map(|rows| VerificationPlan {
        case_id: "P".into(),
        claims: rows
            .into_iter()
            .enumerate()
            .map(|(i, (category, words))| Claim {
                claim_id: format!("C{:02}", i + 1),
                text: words.join(" "),
                category,
                source: ClaimSource::Caption,
                span: None,
                asset_id: None,
                suggested_tools: vec![],
            })
            .collect(),
        tasks: vec![],
        inconsistencies: vec![],
    })
}

fn sectioning_partition() -> Outcome {
    runner(PLAN_SAMPLES)
        .run(&plan_strategy(), |plan| {
            let sections = section_claims(&plan);
            let mut seen = BTreeSet::new();
            for s in &sections {
                for id in &s.claim_ids {
                    prop_assert!(seen.insert(id.clone()), "{} in two sections", id);
                    prop_assert_eq!(plan.claim(id).map(|c| c.category), Some(s.category));
                }
                prop_assert!(!s.claim_ids.is_empty());
            }
            let all: BTreeSet<String> = plan.claims.iter().map(|c| c.claim_id.clone()).collect();
            prop_assert_eq!(seen, all);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("{PLAN_SAMPLES} plans partitioned exactly"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("golden replay report", golden_report),
        ("dataset shape", dataset_shape),
        ("keyframe oracle", keyframe_oracle),
        ("confidence properties", confidence_properties),
        ("conflict oracle", conflict_equivalence),
        ("provenance integrity", provenance_integrity),
        ("determinism", determinism),
        ("report round-trip", report_round_trip),
        ("concurrency equivalence", concurrency_equivalence),
        ("sectioning partition", sectioning_partition),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let n = n + 1;
        if filter
            .as_ref()
            .is_some_and(|f| !name.contains(f.as_str()) && *f != n.to_string())
        {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("criterion {n} ({name}): PASS {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
