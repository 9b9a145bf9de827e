use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;

use super::{EquityGraph, SHARE_EPSILON};
use crate::iso::Iso2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    DuplicateFirm,
    UnknownCountry,
    DuplicateEdge,
    DanglingEndpoint,
    SelfLoop,
    InvalidShare,
    ShareOverflow,
}

impl ViolationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationKind::DuplicateFirm => "duplicate_firm",
            ViolationKind::UnknownCountry => "unknown_country",
            ViolationKind::DuplicateEdge => "duplicate_edge",
            ViolationKind::DanglingEndpoint => "dangling_endpoint",
            ViolationKind::SelfLoop => "self_loop",
            ViolationKind::InvalidShare => "invalid_share",
            ViolationKind::ShareOverflow => "share_overflow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Firm id the violation is attached to (the target for edge problems).
    pub firm: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn of_kind(&self, kind: ViolationKind) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.kind == kind)
    }

    pub fn counts(&self) -> BTreeMap<ViolationKind, usize> {
        let mut m = BTreeMap::new();
        for v in &self.violations {
            *m.entry(v.kind).or_insert(0) += 1;
        }
        m
    }
}

/// Checks structural and share-sum consistency of `graph`.
///
/// `known_countries`, when given, restricts firm countries to that set.
/// Incoming shares per target may exceed 100 by at most `tolerance`.
pub fn validate_graph(
    graph: &EquityGraph,
    tolerance: f64,
    known_countries: Option<&BTreeSet<Iso2>>,
) -> ValidationReport {
    let mut violations = Vec::new();

    let mut seen = HashSet::new();
    for f in graph.firms() {
        if f.id.is_empty() || !seen.insert(f.id.as_str()) {
            violations.push(Violation {
                kind: ViolationKind::DuplicateFirm,
                firm: f.id.clone(),
                detail: if f.id.is_empty() {
                    "empty firm id".into()
                } else {
                    "firm id listed more than once".into()
                },
            });
        }
        if let Some(known) = known_countries {
            if !known.contains(&f.country) {
                violations.push(Violation {
                    kind: ViolationKind::UnknownCountry,
                    firm: f.id.clone(),
                    detail: format!("country {} not in country table", f.country),
                });
            }
        }
    }

    let mut pairs = HashSet::new();
    let mut incoming: BTreeMap<&str, f64> = BTreeMap::new();
    for e in graph.edges() {
        if e.shareholder == e.target {
            violations.push(Violation {
                kind: ViolationKind::SelfLoop,
                firm: e.target.clone(),
                detail: format!("{} holds {}% of itself", e.target, e.share),
            });
            continue;
        }
        let mut dangling = false;
        for end in [&e.shareholder, &e.target] {
            if graph.firm(end).is_none() {
                dangling = true;
                violations.push(Violation {
                    kind: ViolationKind::DanglingEndpoint,
                    firm: end.clone(),
                    detail: format!("edge {} -> {} references unknown firm", e.shareholder, e.target),
                });
            }
        }
        if !(e.share > 0.0 && e.share <= 100.0 + SHARE_EPSILON) {
            violations.push(Violation {
                kind: ViolationKind::InvalidShare,
                firm: e.target.clone(),
                detail: format!("share {} outside (0, 100]", e.share),
            });
        }
        if !pairs.insert((e.shareholder.as_str(), e.target.as_str())) {
            violations.push(Violation {
                kind: ViolationKind::DuplicateEdge,
                firm: e.target.clone(),
                detail: format!("edge {} -> {} listed more than once", e.shareholder, e.target),
            });
        }
        if !dangling {
            *incoming.entry(e.target.as_str()).or_insert(0.0) += e.share;
        }
    }

    for (target, sum) in incoming {
        if sum > 100.0 + tolerance + SHARE_EPSILON {
            violations.push(Violation {
                kind: ViolationKind::ShareOverflow,
                firm: target.to_string(),
                detail: format!("incoming shares sum to {sum} > {}", 100.0 + tolerance),
            });
        }
    }

    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::super::testing::graph;
    use super::super::DEFAULT_SHARE_TOLERANCE;
    use super::*;

    #[test]
    fn flags_share_overflow() {
        let g = graph(
            &[("A", "US"), ("B", "US"), ("C", "US")],
            &[("A", "B", 60.0), ("C", "B", 45.0)],
        );
        let r = validate_graph(&g, DEFAULT_SHARE_TOLERANCE, None);
        let v: Vec<_> = r.of_kind(ViolationKind::ShareOverflow).collect();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].firm, "B");
        assert_eq!(r.violations.len(), 1);
    }

    #[test]
    fn tolerance_absorbs_small_excess() {
        let g = graph(
            &[("A", "US"), ("B", "US"), ("C", "US")],
            &[("A", "B", 60.0), ("C", "B", 40.4)],
        );
        assert!(validate_graph(&g, 0.5, None).is_empty());
        assert!(!validate_graph(&g, 0.3, None).is_empty());
    }

    #[test]
    fn empty_graph_is_clean() {
        let g = EquityGraph::default();
        assert!(validate_graph(&g, DEFAULT_SHARE_TOLERANCE, None).is_empty());
    }

    #[test]
    fn flags_self_loop() {
        let g = graph(&[("A", "US")], &[("A", "A", 60.0)]);
        let r = validate_graph(&g, DEFAULT_SHARE_TOLERANCE, None);
        assert_eq!(r.of_kind(ViolationKind::SelfLoop).count(), 1);
    }

    #[test]
    fn flags_duplicates_and_dangling() {
        let g = graph(
            &[("A", "US"), ("B", "US"), ("A", "FR")],
            &[("A", "B", 10.0), ("A", "B", 20.0), ("A", "Z", 70.0), ("B", "A", 0.0)],
        );
        let r = validate_graph(&g, DEFAULT_SHARE_TOLERANCE, None);
        let c = r.counts();
        assert_eq!(c[&ViolationKind::DuplicateFirm], 1);
        assert_eq!(c[&ViolationKind::DuplicateEdge], 1);
        assert_eq!(c[&ViolationKind::DanglingEndpoint], 1);
        assert_eq!(c[&ViolationKind::InvalidShare], 1);
    }

    #[test]
    fn unknown_country_against_table() {
        let g = graph(&[("A", "US"), ("B", "XX")], &[]);
        let known: BTreeSet<Iso2> = ["US".parse().unwrap()].into_iter().collect();
        let r = validate_graph(&g, DEFAULT_SHARE_TOLERANCE, Some(&known));
        assert_eq!(r.of_kind(ViolationKind::UnknownCountry).count(), 1);
    }
}
