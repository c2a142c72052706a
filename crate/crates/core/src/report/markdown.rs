use std::fmt::Write;
use std::sync::OnceLock;

use regex::Regex;

use super::{format_date, format_geo, Cited, ReportError, VerificationReport};

pub const HEADINGS: [&str; 5] = [
    "Case Summary",
    "Content Classification",
    "Verified Evidence",
    "Forensic Analysis",
    "Other Evidence & Findings",
];

pub const SUBSECTIONS: [&str; 5] = [
    "Source Details:",
    "Where? (Location):",
    "When? (Time):",
    "Who? (Entities Involved):",
    "Why? (Motivation or Intent):",
];

const NONE_LINE: &str = "- None established.";

fn cite(c: &Cited) -> String {
    let ids: Vec<String> = c.evidence_ids.iter().map(|id| format!("[{id}]")).collect();
    format!("- {} {}", c.text, ids.join(""))
}

fn bullets(out: &mut String, items: &[Cited]) {
    if items.is_empty() {
        out.push_str(NONE_LINE);
        out.push('\n');
    }
    for c in items {
        out.push_str(&cite(c));
        out.push('\n');
    }
}

pub fn to_markdown(r: &VerificationReport) -> String {
    let mut out = String::new();
    let s = &r.summary;
    let _ = writeln!(out, "# {}\n", HEADINGS[0]);
    let _ = writeln!(out, "- **Case:** {}", r.case_id);
    let _ = writeln!(out, "- **Verification status:** {}", s.status.label());
    let location = match (&s.place, &s.geo) {
        (Some(p), Some(g)) => format!("{p} ({})", format_geo(g)),
        (Some(p), None) => p.clone(),
        (None, Some(g)) => format_geo(g),
        (None, None) => "Not established".into(),
    };
    let _ = writeln!(out, "- **Location:** {location}");
    let _ = writeln!(
        out,
        "- **Date:** {}",
        s.date.map_or("Not established".into(), format_date)
    );
    let _ = writeln!(
        out,
        "- **Time:** {}",
        s.time
            .map_or("Not established".into(), |t| t.format("%H:%M:%S").to_string())
    );
    let _ = writeln!(out, "- **Media:** {} video(s), {} image(s)", s.videos, s.images);
    let _ = writeln!(out, "- **Assessment:** {}\n", s.rationale);

    let c = &r.classification;
    let _ = writeln!(out, "# {}\n", HEADINGS[1]);
    let _ = writeln!(out, "- **Content category:** {}", c.content_category);
    let _ = writeln!(out, "- **Event type:** {}", c.event_type);
    for (label, items) in [
        ("Tags", &c.tags),
        ("Platforms", &c.platforms),
        ("Involved entities", &c.involved_entities),
    ] {
        let list = if items.is_empty() {
            "None".to_string()
        } else {
            items.join(", ")
        };
        let _ = writeln!(out, "- **{label}:** {list}");
    }
    for claim in &c.claims {
        let _ = writeln!(
            out,
            "- **{}** ({:?}, {}): {}",
            claim.claim_id, claim.category, claim.label, claim.text
        );
    }
    out.push('\n');

    let _ = writeln!(out, "# {}\n", HEADINGS[2]);
    for (label, items) in SUBSECTIONS.iter().zip(r.verified.groups()) {
        let _ = writeln!(out, "**{label}**\n");
        bullets(&mut out, items);
        out.push('\n');
    }
    for img in &r.images {
        let _ = writeln!(out, "![Evidence Image]({img})\n");
    }

    let f = &r.forensics;
    let _ = writeln!(out, "# {}\n", HEADINGS[3]);
    let _ = writeln!(out, "- **Overall:** {}", f.overall.label());
    for a in &f.assets {
        let _ = write!(
            out,
            "- **{}:** {}. Methods: {}",
            a.asset_id,
            a.authenticity.label(),
            a.methods.join(", ")
        );
        if !a.artifacts.is_empty() {
            let _ = write!(out, ". Artifacts: {}", a.artifacts.join(", "));
        }
        if !a.failures.is_empty() {
            let _ = write!(out, ". Failed checks: {}", a.failures.join("; "));
        }
        out.push('\n');
    }
    for c in &f.cross_checks {
        out.push_str(&cite(c));
        out.push('\n');
    }
    out.push('\n');

    let o = &r.other;
    let _ = writeln!(out, "# {}\n", HEADINGS[4]);
    let _ = writeln!(out, "**Related Information:**\n");
    bullets(&mut out, &o.related);
    let _ = writeln!(out, "\n**Disputed Claims:**\n");
    bullets(&mut out, &o.disputed);
    let _ = writeln!(out, "\n**Coverage Gaps:**\n");
    if o.gaps.is_empty() && o.aborted_sections.is_empty() {
        out.push_str("- None.\n");
    }
    for g in &o.gaps {
        let _ = writeln!(out, "- {g}");
    }
    for s in &o.aborted_sections {
        let _ = writeln!(out, "- Research for section {s} was aborted: every tool call failed.");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkdownStructure {
    pub headings: Vec<String>,
    pub subsections: Vec<String>,
    /// Citations in order of appearance, with duplicates.
    pub citations: Vec<String>,
    /// Citations inside the verified evidence section.
    pub verified_citations: Vec<String>,
    pub images: Vec<String>,
}

fn citation_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    R.get_or_init(|| Regex::new(r"\[(S\d+-E\d{3,})\]").expect("static pattern"))
}

fn image_re() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    R.get_or_init(|| Regex::new(r"^!\[Evidence Image\]\(([^)\s]+)\)$").expect("static pattern"))
}

/// Strict structural read: the five headings in order and nothing else at
/// any heading level, the five subsections in order inside the verified
/// section, and image lines only after the last subsection.
pub fn parse_markdown_structure(md: &str) -> Result<MarkdownStructure, ReportError> {
    let bad = |msg: String| ReportError::Malformed(msg);
    let mut st = MarkdownStructure {
        headings: Vec::new(),
        subsections: Vec::new(),
        citations: Vec::new(),
        verified_citations: Vec::new(),
        images: Vec::new(),
    };
    for (n, line) in md.lines().enumerate() {
        let n = n + 1;
        if line.starts_with('#') {
            let Some(title) = line.strip_prefix("# ") else {
                return Err(bad(format!("line {n}: unexpected heading level: {line}")));
            };
            let expected = HEADINGS
                .get(st.headings.len())
                .ok_or_else(|| bad(format!("line {n}: extra heading {title}")))?;
            if title != *expected {
                return Err(bad(format!("line {n}: expected heading '{expected}', found '{title}'")));
            }
            st.headings.push(title.to_string());
            continue;
        }
        let section = st.headings.len();
        if section == 0 && !line.trim().is_empty() {
            return Err(bad(format!("line {n}: content before the first heading")));
        }
        let in_verified = section == 3;
        if let Some(label) = line.strip_prefix("**").and_then(|l| l.strip_suffix("**")) {
            if SUBSECTIONS.contains(&label) {
                if !in_verified {
                    return Err(bad(format!(
                        "line {n}: subsection '{label}' outside the verified section"
                    )));
                }
                let expected = SUBSECTIONS[st.subsections.len().min(4)];
                if st.subsections.len() >= 5 || label != expected {
                    return Err(bad(format!(
                        "line {n}: expected subsection '{expected}', found '{label}'"
                    )));
                }
                if !st.images.is_empty() {
                    return Err(bad(format!("line {n}: subsection after evidence images")));
                }
                st.subsections.push(label.to_string());
                continue;
            }
        }
        if line.starts_with("![") {
            let caps = image_re()
                .captures(line)
                .ok_or_else(|| bad(format!("line {n}: malformed image line")))?;
            if !in_verified || st.subsections.len() != 5 {
                return Err(bad(format!("line {n}: image outside the end of the verified section")));
            }
            st.images.push(caps[1].to_string());
            continue;
        }
        for c in citation_re().captures_iter(line) {
            st.citations.push(c[1].to_string());
            if in_verified {
                st.verified_citations.push(c[1].to_string());
            }
        }
    }
    if st.headings.len() != HEADINGS.len() {
        return Err(bad(format!(
            "expected {} headings, found {}",
            HEADINGS.len(),
            st.headings.len()
        )));
    }
    if st.subsections.len() != SUBSECTIONS.len() {
        return Err(bad(format!(
            "expected {} subsections, found {}",
            SUBSECTIONS.len(),
            st.subsections.len()
        )));
    }
    Ok(st)
}
