use super::*;
use crate::case::{ContextualInfo, MediaAsset};
use crate::evidence::tests::ev;
use crate::evidence::{derive_verdict, finalize_corpus, identify_gaps, Stance, Thresholds, EVIDENCE_SCHEMA};
use crate::planner::{assign_tasks, Claim, ClaimSource};
use crate::research::context::{PlaceContext, SourceContext, TimeContext};
use proptest::prelude::*;

fn claim(id: &str, text: &str, category: ClaimCategory) -> Claim {
    Claim {
        claim_id: id.into(),
        text: text.into(),
        category,
        source: ClaimSource::Caption,
        span: None,
        asset_id: None,
        suggested_tools: vec![],
    }
}

fn plan() -> VerificationPlan {
    let claims = vec![
        claim("C01", "Filmed on 04/05/2022 at 19:58:37", ClaimCategory::Temporal),
        claim(
            "C02",
            "Explosion on Naberezhna Zavodska, Dnipro",
            ClaimCategory::Geographic,
        ),
    ];
    VerificationPlan {
        case_id: "ID43".into(),
        tasks: assign_tasks(&claims),
        claims,
        inconsistencies: vec![],
    }
}

fn case() -> CasePackage {
    let mut context = ContextualInfo::default();
    context.metadata.insert("event_type".into(), "Missile strike".into());
    CasePackage {
        case_id: "ID43".into(),
        assets: vec![MediaAsset {
            asset_id: "ID43-2.mp4".into(),
            path: "ID43-2.mp4".into(),
            kind: MediaKind::Video,
            container_format: "mp4".into(),
            duration_s: Some(5.0),
            resolution: Some((64, 48)),
        }],
        context,
        clues: vec![],
    }
}

fn dated(mut e: Evidence, time: Option<(u32, u32, u32)>) -> Evidence {
    e.context = Some(SourceContext {
        source_detail: format!("Post by {}", e.domain),
        when: Some(TimeContext {
            date: NaiveDate::from_ymd_opt(2022, 5, 4),
            time: time.and_then(|(h, m, s)| NaiveTime::from_hms_opt(h, m, s)),
            cues: vec![],
        }),
        who: Some("Cesar News".into()),
        ..Default::default()
    });
    e
}

fn placed(mut e: Evidence) -> Evidence {
    e.context = Some(SourceContext {
        source_detail: "Dnipro News article".into(),
        where_: Some(PlaceContext {
            place_name: "Naberezhna Zavodska, Dnipro".into(),
            geo: GeoPoint::new(48.4647, 35.0462),
        }),
        ..Default::default()
    });
    e
}

fn export(corpus: Vec<Evidence>, claims: &[Claim]) -> StoreExport {
    let th = Thresholds::default();
    let (evidence, conflicts) = finalize_corpus(corpus, &th);
    StoreExport {
        evidence_schema: EVIDENCE_SCHEMA,
        gaps: identify_gaps(claims, &evidence),
        verdict: derive_verdict(claims, &evidence, &th),
        evidence,
        conflicts,
    }
}

fn golden_like() -> (CasePackage, VerificationPlan, StoreExport) {
    let p = plan();
    let corpus = vec![
        dated(
            ev(
                "S0-E001",
                "C01",
                "twitter.com",
                Stance::Supports,
                Some(("when.date", "2022-05-04")),
                0.7,
            ),
            Some((19, 58, 37)),
        ),
        dated(
            ev(
                "S0-E002",
                "C01",
                "dnipro-news.test",
                Stance::Supports,
                Some(("when.date", "2022-05-04")),
                0.85,
            ),
            None,
        ),
        placed(ev(
            "S1-E001",
            "C02",
            "dnipro-news.test",
            Stance::Supports,
            Some(("where", "naberezhna zavodska")),
            0.85,
        )),
        placed(ev(
            "S1-E002",
            "C02",
            "ua-wire.test",
            Stance::Supports,
            Some(("where", "naberezhna zavodska")),
            0.8,
        )),
        ev("S1-E003", "C02", "other.test", Stance::Related, None, 0.5),
    ];
    let store = export(corpus, &p.claims);
    (case(), p, store)
}

fn build(case: &CasePackage, plan: &VerificationPlan, store: &StoreExport) -> VerificationReport {
    build_report(&ReportInputs {
        case,
        plan,
        store,
        analyses: &[],
        forensics: &[],
        aborted_sections: &[],
    })
    .unwrap()
}

#[test]
fn formats() {
    assert_eq!(format_date(NaiveDate::from_ymd_opt(2022, 5, 4).unwrap()), "04/05/2022");
    assert_eq!(
        format_geo(&GeoPoint::new(48.4647, 35.0462).unwrap()),
        "48.4647° N, 35.0462° E"
    );
    assert_eq!(
        format_geo(&GeoPoint::new(-33.8688, -70.1).unwrap()),
        "33.8688° S, 70.1000° W"
    );
}

#[test]
fn summary_takes_best_verified_facts() {
    let (c, p, store) = golden_like();
    let r = build(&c, &p, &store);
    assert_eq!(r.summary.status, VerdictStatus::Verified);
    assert_eq!(r.summary.date, NaiveDate::from_ymd_opt(2022, 5, 4));
    assert_eq!(r.summary.time, NaiveTime::from_hms_opt(19, 58, 37));
    assert_eq!(r.summary.place.as_deref(), Some("Naberezhna Zavodska, Dnipro"));
    assert!((r.summary.geo.unwrap().lat - 48.4647).abs() < 1e-9);
    assert_eq!(r.classification.event_type, "Missile strike");
    assert_eq!(r.classification.content_category, "Video");
}

#[test]
fn markdown_has_the_fixed_structure() {
    let (c, p, store) = golden_like();
    let r = build(&c, &p, &store);
    let md = to_markdown(&r);
    let st = parse_markdown_structure(&md).unwrap();
    assert_eq!(st.headings, HEADINGS);
    assert_eq!(st.subsections, SUBSECTIONS);
    assert!(md.contains("48.4647° N, 35.0462° E"));
    assert!(md.contains("04/05/2022, 19:58:37"));
    for id in &st.citations {
        assert!(store.get(id).is_some(), "{id}");
    }
    for id in &st.verified_citations {
        assert_eq!(store.get(id).unwrap().category, EvidenceCategory::VerifiedFact);
    }
    // Every verified fact with a context appears in Source Details with its URL.
    for e in store
        .evidence
        .iter()
        .filter(|e| e.category == EvidenceCategory::VerifiedFact)
    {
        let line = r
            .verified
            .source_details
            .iter()
            .find(|c| c.evidence_ids.contains(&e.evidence_id))
            .unwrap();
        assert!(line.text.contains(&e.source.url));
    }
    assert!(md.contains("[S1-E003]"));
}

#[test]
fn structured_form_omits_absent_fields() {
    let p = plan();
    let store = export(vec![], &p.claims);
    let r = build(&case(), &p, &store);
    assert_eq!(r.summary.status, VerdictStatus::Inconclusive);
    let json = r.to_structured();
    assert_eq!(json["report_schema"], 1);
    assert!(json["summary"].get("date").is_none());
    assert!(json["summary"].get("geo").is_none());
    let md = to_markdown(&r);
    parse_markdown_structure(&md).unwrap();
    assert!(md.contains("- None established."));
    assert!(md.contains("C01 (Temporal)"));
}

#[test]
fn images_follow_verified_section() {
    let (c, p, mut store) = golden_like();
    store.evidence[0].keyframe = Some("ID43-2.mp4_00_02_2.50s".into());
    let r = build(&c, &p, &store);
    assert_eq!(r.images, vec!["report/ID43-2.mp4_00_02_2.50s.jpg"]);
    let md = to_markdown(&r);
    let st = parse_markdown_structure(&md).unwrap();
    assert_eq!(st.images, r.images);
    let img = md.find("![Evidence Image]").unwrap();
    assert!(img > md.find("**Why? (Motivation or Intent):**").unwrap());
    assert!(img < md.find("# Forensic Analysis").unwrap());
}

#[test]
fn dangling_citations_are_rejected() {
    let (c, p, store) = golden_like();
    let mut r = build(&c, &p, &store);
    r.other.related.push(Cited {
        text: "x".into(),
        evidence_ids: vec!["S9-E999".into()],
    });
    assert!(matches!(
        check_citations(&r, &store),
        Err(ReportError::DanglingCitation(_))
    ));
    let mut r = build(&c, &p, &store);
    r.verified.who.push(Cited {
        text: "x".into(),
        evidence_ids: vec!["S1-E003".into()],
    });
    assert!(matches!(
        check_citations(&r, &store),
        Err(ReportError::UnverifiedCitation(_))
    ));
}

#[test]
fn strict_parser_rejects_deviations() {
    let (c, p, store) = golden_like();
    let md = to_markdown(&build(&c, &p, &store));
    assert!(parse_markdown_structure(&md.replace("# Forensic Analysis", "## Forensic Analysis")).is_err());
    assert!(parse_markdown_structure(&md.replace("# Case Summary", "# Summary")).is_err());
    assert!(parse_markdown_structure(&md.replace("**When? (Time):**", "**When:**")).is_err());
    assert!(parse_markdown_structure(&format!("{md}\n# Appendix\n")).is_err());
    let misplaced = md.replace(
        "# Forensic Analysis\n",
        "# Forensic Analysis\n\n![Evidence Image](report/x.jpg)\n",
    );
    assert!(parse_markdown_structure(&misplaced).is_err());
}

fn any_stance() -> impl Strategy<Value = Stance> {
    prop_oneof![Just(Stance::Supports), Just(Stance::Contradicts), Just(Stance::Related)]
}

proptest! {
    #[test]
    fn reports_always_parse_and_resolve(rows in proptest::collection::vec((0usize..2, 0usize..4, any_stance(), any::<bool>(), 0.0f64..=1.0), 0..12)) {
        let p = plan();
        let corpus: Vec<Evidence> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (c, d, s, ctx, r))| {
                let claim = ["C01", "C02"][c];
                let fact = (s != Stance::Related).then_some(("where", "x"));
                let e = ev(&format!("S{c}-E{:03}", i + 1), claim, &format!("d{d}.test"), s, fact, r);
                if ctx { if c == 0 { dated(e, None) } else { placed(e) } } else { e }
            })
            .collect();
        let store = export(corpus, &p.claims);
        let r = build(&case(), &p, &store);
        let st = parse_markdown_structure(&to_markdown(&r)).unwrap();
        for id in &st.citations {
            prop_assert!(store.get(id).is_some());
        }
        for id in &st.verified_citations {
            prop_assert_eq!(store.get(id).unwrap().category, EvidenceCategory::VerifiedFact);
        }
    }
}
