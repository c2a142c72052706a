//! Provenance records and DAG checks.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub const PROVENANCE_SCHEMA: u32 = 1;
pub const ROOT_STEP: &str = "ingest";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepStatus {
    Ok,
    Error,
    Noop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub step_id: String,
    /// Tool name for research calls, stage name otherwise.
    pub tool: String,
    pub input_digest: String,
    pub output_digest: String,
    pub parents: Vec<String>,
    pub at: DateTime<Utc>,
    pub status: StepStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceGraph {
    pub provenance_schema: u32,
    pub root: String,
    pub records: Vec<ProvenanceRecord>,
    /// Step id to the steps that list it as a parent.
    pub children: BTreeMap<String, Vec<String>>,
}

impl ProvenanceGraph {
    pub fn new(records: Vec<ProvenanceRecord>) -> Self {
        let mut children: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for r in &records {
            children.entry(r.step_id.clone()).or_default();
            for p in &r.parents {
                children.entry(p.clone()).or_default().push(r.step_id.clone());
            }
        }
        Self {
            provenance_schema: PROVENANCE_SCHEMA,
            root: ROOT_STEP.to_string(),
            records,
            children,
        }
    }

    pub fn get(&self, step_id: &str) -> Option<&ProvenanceRecord> {
        self.records.iter().find(|r| r.step_id == step_id)
    }

    /// Step ids on one path from the root to `step_id`, root first.
    pub fn path_to_root(&self, step_id: &str) -> Option<Vec<String>> {
        let mut path = vec![step_id.to_string()];
        let mut seen = BTreeSet::new();
        let mut cur = self.get(step_id)?;
        while !cur.parents.is_empty() {
            if !seen.insert(cur.step_id.clone()) {
                return None;
            }
            cur = self.get(&cur.parents[0])?;
            path.push(cur.step_id.clone());
        }
        path.reverse();
        (path[0] == self.root).then_some(path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DagError {
    #[error("duplicate step id {0}")]
    Duplicate(String),
    #[error("step {step} names unknown parent {parent}")]
    DanglingParent { step: String, parent: String },
    #[error("root step {0} is missing or has parents")]
    BadRoot(String),
    #[error("cycle through {0}")]
    Cycle(String),
    #[error("step {0} is not reachable from the root")]
    Unreachable(String),
}

/// Unique ids, known parents, a single parentless root, no cycles.
pub fn check_dag(records: &[ProvenanceRecord], root: &str) -> Result<(), DagError> {
    let mut ids = BTreeSet::new();
    for r in records {
        if !ids.insert(r.step_id.as_str()) {
            return Err(DagError::Duplicate(r.step_id.clone()));
        }
    }
    for r in records {
        for p in &r.parents {
            if !ids.contains(p.as_str()) {
                return Err(DagError::DanglingParent {
                    step: r.step_id.clone(),
                    parent: p.clone(),
                });
            }
        }
        if r.parents.is_empty() && r.step_id != root {
            return Err(DagError::Unreachable(r.step_id.clone()));
        }
    }
    match records.iter().find(|r| r.step_id == root) {
        Some(r) if r.parents.is_empty() => {}
        _ => return Err(DagError::BadRoot(root.to_string())),
    }
    // Kahn's algorithm: every node must be emitted.
    let mut indegree: BTreeMap<&str, usize> = records.iter().map(|r| (r.step_id.as_str(), r.parents.len())).collect();
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for r in records {
        for p in &r.parents {
            children.entry(p.as_str()).or_default().push(r.step_id.as_str());
        }
    }
    let mut queue: VecDeque<&str> = VecDeque::from([root]);
    let mut emitted = 0;
    while let Some(n) = queue.pop_front() {
        emitted += 1;
        for c in children.get(n).into_iter().flatten() {
            let d = indegree.get_mut(c).expect("known id");
            *d -= 1;
            if *d == 0 {
                queue.push_back(c);
            }
        }
    }
    if emitted != records.len() {
        let stuck = indegree
            .iter()
            .find(|(_, d)| **d > 0)
            .map(|(k, _)| k.to_string())
            .unwrap_or_default();
        return Err(DagError::Cycle(stuck));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn rec(id: &str, parents: &[&str]) -> ProvenanceRecord {
        ProvenanceRecord {
            step_id: id.into(),
            tool: "t".into(),
            input_digest: String::new(),
            output_digest: String::new(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
            at: Utc.timestamp_opt(0, 0).unwrap(),
            status: StepStatus::Ok,
            note: None,
        }
    }

    #[test]
    fn accepts_a_dag_and_walks_to_root() {
        let rs = vec![
            rec("ingest", &[]),
            rec("plan", &["ingest"]),
            rec("S0-temporal", &["plan"]),
            rec("S0/001", &["S0-temporal"]),
        ];
        check_dag(&rs, ROOT_STEP).unwrap();
        let g = ProvenanceGraph::new(rs);
        assert_eq!(
            g.path_to_root("S0/001").unwrap(),
            vec!["ingest", "plan", "S0-temporal", "S0/001"]
        );
        assert_eq!(g.children["plan"], vec!["S0-temporal"]);
    }

    #[test]
    fn rejects_broken_graphs() {
        let dangling = vec![rec("ingest", &[]), rec("a", &["zzz"])];
        assert!(matches!(
            check_dag(&dangling, ROOT_STEP),
            Err(DagError::DanglingParent { .. })
        ));
        let cycle = vec![rec("ingest", &[]), rec("a", &["b"]), rec("b", &["a"])];
        assert!(matches!(check_dag(&cycle, ROOT_STEP), Err(DagError::Cycle(_))));
        let dup = vec![rec("ingest", &[]), rec("ingest", &[])];
        assert!(matches!(check_dag(&dup, ROOT_STEP), Err(DagError::Duplicate(_))));
        let orphan = vec![rec("ingest", &[]), rec("x", &[])];
        assert!(matches!(check_dag(&orphan, ROOT_STEP), Err(DagError::Unreachable(_))));
    }
}
