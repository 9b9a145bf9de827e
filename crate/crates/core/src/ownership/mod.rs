//! Equity graphs and majority-rule control identification.
//!
//! A firm controls another when the shares it holds, together with the
//! shares held by firms it already controls, exceed 50%. Control therefore
//! spreads directly, transitively along vertical chains, and by
//! consolidating fragmented stakes. [`control_set`] computes the least fixed
//! point of that accretion and [`ultimate_parents`] groups every controlled
//! firm under the one uncontrolled firm at the top of its hierarchy.

mod control;
mod dot;
mod io;
mod validate;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::iso::Iso2;

pub use control::{control_set, ultimate_parents, IdentifyOptions};
pub use dot::{export_network_dot, parse_dot, DotGraph};
pub use io::{read_edges, read_firms, read_graph, write_networks};
pub use validate::{validate_graph, ValidationReport, Violation, ViolationKind};

/// Majority threshold in percentage points; control requires strictly more.
pub const MAJORITY: f64 = 50.0;

/// Absolute slack absorbing decimal parsing noise around the threshold.
pub const SHARE_EPSILON: f64 = 1e-9;

/// Default tolerance on the sum of incoming shares above 100.
pub const DEFAULT_SHARE_TOLERANCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Firm {
    pub id: String,
    pub country: Iso2,
    /// Two-digit NAICS sector, when known.
    pub sector: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityEdge {
    pub shareholder: String,
    pub target: String,
    /// Percentage of capital held, in (0, 100].
    pub share: f64,
}

/// Firms plus shareholding links. Construction never fails; problems with
/// the data are reported by [`validate_graph`].
#[derive(Debug, Clone, Default)]
pub struct EquityGraph {
    firms: Vec<Firm>,
    edges: Vec<EquityEdge>,
    index: HashMap<String, usize>,
    // Resolved adjacency; self-loops and dangling edges are skipped.
    out: Vec<Vec<(usize, f64)>>,
    inn: Vec<Vec<(usize, f64)>>,
}

impl EquityGraph {
    pub fn new(firms: Vec<Firm>, edges: Vec<EquityEdge>) -> Self {
        let mut index = HashMap::with_capacity(firms.len());
        for (i, f) in firms.iter().enumerate() {
            index.entry(f.id.clone()).or_insert(i);
        }
        let mut out = vec![Vec::new(); firms.len()];
        let mut inn = vec![Vec::new(); firms.len()];
        for e in &edges {
            if let (Some(&s), Some(&t)) = (index.get(&e.shareholder), index.get(&e.target)) {
                if s != t {
                    out[s].push((t, e.share));
                    inn[t].push((s, e.share));
                }
            }
        }
        EquityGraph {
            firms,
            edges,
            index,
            out,
            inn,
        }
    }

    pub fn firms(&self) -> &[Firm] {
        &self.firms
    }

    pub fn edges(&self) -> &[EquityEdge] {
        &self.edges
    }

    pub fn firm(&self, id: &str) -> Option<&Firm> {
        self.index.get(id).map(|&i| &self.firms[i])
    }

    pub fn country_of(&self, id: &str) -> Option<Iso2> {
        self.firm(id).map(|f| f.country)
    }

    pub(crate) fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub(crate) fn out_edges(&self, i: usize) -> &[(usize, f64)] {
        &self.out[i]
    }

    pub(crate) fn in_edges(&self, i: usize) -> &[(usize, f64)] {
        &self.inn[i]
    }

    pub fn len(&self) -> usize {
        self.firms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firms.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlType {
    /// The parent itself holds a majority.
    Direct,
    /// A single controlled subsidiary holds a majority.
    Transitive,
    /// Majority reached only by summing stakes of several group members.
    Consolidated,
}

impl ControlType {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControlType::Direct => "direct",
            ControlType::Transitive => "transitive",
            ControlType::Consolidated => "consolidated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlAssignment {
    pub subsidiary: String,
    pub parent: String,
    /// Immediate parent in the control hierarchy.
    pub controller: String,
    /// Hierarchical distance from the ultimate parent (1 = direct).
    pub level: u32,
    pub control_type: ControlType,
    /// Stake held by `controller` in `subsidiary`.
    pub share: f64,
}

/// One ultimate parent and the hierarchy of firms it controls.
///
/// Assignments are sorted by `(level, subsidiary)`; controller links form a
/// tree rooted at `parent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlNetwork {
    pub parent: String,
    pub assignments: Vec<ControlAssignment>,
    /// At least one subsidiary sits outside the parent's country.
    pub is_multinational: bool,
    /// At least one subsidiary is controlled indirectly (level >= 2).
    pub is_complex: bool,
}

impl ControlNetwork {
    /// Builds a network from its parent and assignments, deriving the
    /// multinational and complex flags from `graph`.
    pub fn new(parent: String, mut assignments: Vec<ControlAssignment>, graph: &EquityGraph) -> Self {
        assignments.sort_by(|a, b| (a.level, &a.subsidiary).cmp(&(b.level, &b.subsidiary)));
        let home = graph.country_of(&parent);
        let is_multinational = assignments
            .iter()
            .any(|a| graph.country_of(&a.subsidiary) != home);
        let is_complex = assignments.iter().any(|a| a.level >= 2);
        ControlNetwork {
            parent,
            assignments,
            is_multinational,
            is_complex,
        }
    }

    pub fn subsidiaries(&self) -> impl Iterator<Item = &str> {
        self.assignments.iter().map(|a| a.subsidiary.as_str())
    }
}
