use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;

use super::validate::{validate_graph, ViolationKind};
use super::{
    ControlAssignment, ControlNetwork, ControlType, EquityGraph, DEFAULT_SHARE_TOLERANCE, MAJORITY,
    SHARE_EPSILON,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct IdentifyOptions {
    /// Allowed excess of incoming shares above 100 per target.
    pub tolerance: f64,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        IdentifyOptions {
            tolerance: DEFAULT_SHARE_TOLERANCE,
        }
    }
}

fn is_majority(share: f64) -> bool {
    share > MAJORITY + SHARE_EPSILON
}

/// Control set of one candidate, grouped by accretion round.
///
/// Round `r` holds the firms whose consolidated stake (summed over the
/// candidate and rounds before `r`) first exceeds the majority threshold.
/// Rounds are a property of the fixed point, not of any processing order.
#[derive(Debug, Default)]
pub(crate) struct Accretion {
    pub rounds: Vec<Vec<usize>>,
}

impl Accretion {
    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.rounds.iter().flatten().copied()
    }
}

pub(crate) fn accrete(graph: &EquityGraph, candidate: usize) -> Accretion {
    let mut stake: HashMap<usize, f64> = HashMap::new();
    let mut members: HashSet<usize> = HashSet::new();
    let mut frontier = vec![candidate];
    let mut rounds = Vec::new();
    loop {
        let mut touched = Vec::new();
        for &f in &frontier {
            for &(t, share) in graph.out_edges(f) {
                if t == candidate || members.contains(&t) {
                    continue;
                }
                *stake.entry(t).or_insert(0.0) += share;
                touched.push(t);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let next: Vec<usize> = touched.into_iter().filter(|t| is_majority(stake[t])).collect();
        if next.is_empty() {
            break;
        }
        members.extend(next.iter().copied());
        frontier = next.clone();
        rounds.push(next);
    }
    Accretion { rounds }
}

/// Firms controlled by `candidate`: the least fixed point of adding every
/// firm in which the candidate and its controlled firms jointly hold more
/// than 50%.
pub fn control_set(graph: &EquityGraph, candidate: &str) -> Result<BTreeSet<String>> {
    let c = graph
        .index_of(candidate)
        .ok_or_else(|| Error::UnknownFirm(candidate.to_string()))?;
    Ok(accrete(graph, c)
        .members()
        .map(|i| graph.firms()[i].id.clone())
        .collect())
}

/// Identifies every ultimate parent and its control hierarchy.
///
/// A firm is an ultimate parent when it controls at least one firm and is
/// controlled by none. Firms reachable only through mutual-control cycles
/// with no uncontrolled head belong to no network.
pub fn ultimate_parents(graph: &EquityGraph, opts: &IdentifyOptions) -> Result<Vec<ControlNetwork>> {
    let report = validate_graph(graph, opts.tolerance, None);
    if let Some(v) = report.of_kind(ViolationKind::ShareOverflow).next() {
        return Err(Error::Data(format!("target firm {}: {}", v.firm, v.detail)));
    }
    if let Some(v) = report.violations.first() {
        return Err(Error::Data(format!("{} on firm {}: {}", v.kind.as_str(), v.firm, v.detail)));
    }

    let accretions: Vec<Accretion> = (0..graph.len())
        .into_par_iter()
        .map(|i| {
            if graph.out_edges(i).is_empty() {
                Accretion::default()
            } else {
                accrete(graph, i)
            }
        })
        .collect();

    let mut controlled = vec![false; graph.len()];
    for acc in &accretions {
        for m in acc.members() {
            controlled[m] = true;
        }
    }

    let mut owner: Vec<Option<usize>> = vec![None; graph.len()];
    let mut networks = Vec::new();
    for (p, acc) in accretions.iter().enumerate() {
        if acc.is_empty() || controlled[p] {
            continue;
        }
        for m in acc.members() {
            if let Some(q) = owner[m] {
                return Err(Error::Data(format!(
                    "firm {} is controlled by both {} and {}",
                    graph.firms()[m].id,
                    graph.firms()[q].id,
                    graph.firms()[p].id
                )));
            }
            owner[m] = Some(p);
        }
        networks.push(build_hierarchy(graph, p, acc));
    }
    networks.sort_by(|a, b| a.parent.cmp(&b.parent));
    Ok(networks)
}

/// Attaches every controlled firm to one controller that joined the group
/// in an earlier round. Direct majority by the parent gives level 1; else
/// the controller is the subsidiary with the largest stake (ties: lower
/// level, then smaller id).
fn build_hierarchy(graph: &EquityGraph, parent: usize, acc: &Accretion) -> ControlNetwork {
    let firms = graph.firms();
    // level of each placed group member; the parent sits at level 0
    let mut level: HashMap<usize, u32> = HashMap::new();
    level.insert(parent, 0);
    let mut assignments = Vec::new();

    for (r, round) in acc.rounds.iter().enumerate() {
        let mut placed = Vec::with_capacity(round.len());
        for &f in round {
            let (controller, share, control_type) = if r == 0 {
                let share: f64 = graph
                    .in_edges(f)
                    .iter()
                    .filter(|(s, _)| *s == parent)
                    .map(|(_, x)| x)
                    .sum();
                (parent, share, ControlType::Direct)
            } else {
                // sum duplicate links per shareholder before ranking
                let mut stakes: HashMap<usize, f64> = HashMap::new();
                for &(s, x) in graph.in_edges(f) {
                    if s != parent && level.contains_key(&s) {
                        *stakes.entry(s).or_insert(0.0) += x;
                    }
                }
                let (&best, &share) = stakes
                    .iter()
                    .min_by(|(a, xa), (b, xb)| {
                        xb.total_cmp(xa)
                            .then(level[a].cmp(&level[b]))
                            .then(firms[**a].id.cmp(&firms[**b].id))
                    })
                    .expect("consolidated firm has an in-group shareholder");
                let kind = if is_majority(share) {
                    ControlType::Transitive
                } else {
                    ControlType::Consolidated
                };
                (best, share, kind)
            };
            let lvl = level[&controller] + 1;
            placed.push((f, lvl));
            assignments.push(ControlAssignment {
                subsidiary: firms[f].id.clone(),
                parent: firms[parent].id.clone(),
                controller: firms[controller].id.clone(),
                level: lvl,
                control_type,
                share,
            });
        }
        // members of the same round cannot control each other
        level.extend(placed);
    }

    ControlNetwork::new(firms[parent].id.clone(), assignments, graph)
}

#[cfg(test)]
mod tests {
    use super::super::testing::graph;
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn abc(edges: &[(&str, &str, f64)]) -> EquityGraph {
        graph(&[("A", "US"), ("B", "IE"), ("C", "LU"), ("D", "DE")], edges)
    }

    #[test]
    fn direct_majority() {
        let g = abc(&[("A", "B", 60.0)]);
        assert_eq!(control_set(&g, "A").unwrap(), set(&["B"]));
    }

    #[test]
    fn transitive_chain() {
        let g = abc(&[("A", "B", 60.0), ("B", "C", 55.0)]);
        assert_eq!(control_set(&g, "A").unwrap(), set(&["B", "C"]));
    }

    #[test]
    fn consolidated_stakes() {
        let g = abc(&[("A", "B", 60.0), ("A", "C", 25.0), ("B", "C", 30.0)]);
        assert_eq!(control_set(&g, "A").unwrap(), set(&["B", "C"]));
    }

    #[test]
    fn exactly_fifty_is_not_control() {
        let g = abc(&[("A", "B", 50.0)]);
        assert!(control_set(&g, "A").unwrap().is_empty());
        let g = abc(&[("A", "B", 50.0 + 1e-12)]);
        assert!(control_set(&g, "A").unwrap().is_empty());
    }

    #[test]
    fn unknown_candidate() {
        let g = abc(&[]);
        assert!(matches!(control_set(&g, "Z"), Err(Error::UnknownFirm(_))));
    }

    #[test]
    fn chain_network_levels() {
        let g = abc(&[("A", "B", 60.0), ("B", "C", 55.0)]);
        let nets = ultimate_parents(&g, &IdentifyOptions::default()).unwrap();
        assert_eq!(nets.len(), 1);
        let n = &nets[0];
        assert_eq!(n.parent, "A");
        let b = &n.assignments[0];
        assert_eq!((b.subsidiary.as_str(), b.level, b.control_type), ("B", 1, ControlType::Direct));
        let c = &n.assignments[1];
        assert_eq!(
            (c.subsidiary.as_str(), c.controller.as_str(), c.level, c.control_type),
            ("C", "B", 2, ControlType::Transitive)
        );
        assert!(n.is_complex && n.is_multinational);
    }

    #[test]
    fn consolidated_network_levels() {
        let g = abc(&[("A", "B", 60.0), ("A", "C", 25.0), ("B", "C", 30.0)]);
        let n = &ultimate_parents(&g, &IdentifyOptions::default()).unwrap()[0];
        let c = n.assignments.iter().find(|a| a.subsidiary == "C").unwrap();
        assert_eq!(c.controller, "B");
        assert_eq!(c.level, 2);
        assert_eq!(c.control_type, ControlType::Consolidated);
    }

    #[test]
    fn consolidation_where_parent_has_largest_stake() {
        // parent 40% plus subsidiary 15%: attached below the subsidiary so that
        // level 1 stays reserved for direct majority links
        let g = abc(&[("A", "B", 60.0), ("A", "C", 40.0), ("B", "C", 15.0)]);
        let n = &ultimate_parents(&g, &IdentifyOptions::default()).unwrap()[0];
        let c = n.assignments.iter().find(|a| a.subsidiary == "C").unwrap();
        assert_eq!((c.controller.as_str(), c.level), ("B", 2));
    }

    #[test]
    fn disjoint_dyads() {
        let g = abc(&[("A", "B", 60.0), ("C", "D", 70.0)]);
        let nets = ultimate_parents(&g, &IdentifyOptions::default()).unwrap();
        assert_eq!(nets.len(), 2);
        assert_eq!(nets[0].parent, "A");
        assert_eq!(nets[1].parent, "C");
        assert!(!nets[0].is_complex);
    }

    #[test]
    fn ownership_cycle_does_not_block() {
        // B and C hold each other; A controls both through B
        let g = abc(&[("A", "B", 60.0), ("B", "C", 51.0), ("C", "B", 20.0)]);
        let nets = ultimate_parents(&g, &IdentifyOptions::default()).unwrap();
        assert_eq!(nets.len(), 1);
        assert_eq!(nets[0].assignments.len(), 2);
    }

    #[test]
    fn tie_breaks_by_id() {
        let g = graph(
            &[("P", "US"), ("X", "US"), ("Y", "US"), ("T", "US")],
            &[("P", "X", 90.0), ("P", "Y", 90.0), ("X", "T", 30.0), ("Y", "T", 30.0)],
        );
        let n = &ultimate_parents(&g, &IdentifyOptions::default()).unwrap()[0];
        let t = n.assignments.iter().find(|a| a.subsidiary == "T").unwrap();
        assert_eq!(t.controller, "X");
    }

    #[test]
    fn overflow_is_a_data_error() {
        let g = abc(&[("A", "B", 60.0), ("C", "B", 45.0)]);
        match ultimate_parents(&g, &IdentifyOptions::default()) {
            Err(Error::Data(msg)) => assert!(msg.contains("target firm B"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn standalone_firms_emit_no_network() {
        let g = abc(&[("A", "B", 30.0)]);
        assert!(ultimate_parents(&g, &IdentifyOptions::default()).unwrap().is_empty());
    }
}
