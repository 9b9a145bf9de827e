use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{enumerate_chains, Hierarchy};
use crate::error::{Error, Result};
use crate::iso::Iso2;
use crate::ownership::{ControlNetwork, EquityGraph};

/// Which control links a dyadic count table aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadMode {
    /// Every hierarchy link, keyed by (controller country, subsidiary country).
    DirectAll,
    /// Hierarchy links of complex networks only.
    DirectComplex,
    /// Every (parent, subsidiary) pair.
    ParentSubsidiary,
    /// Every (middleman, firm strictly below it) pair.
    MiddlemanFinal,
    /// One unit per chain at (parent country, final country).
    FinalAll,
}

impl DyadMode {
    pub const ALL: [DyadMode; 5] = [
        DyadMode::DirectAll,
        DyadMode::DirectComplex,
        DyadMode::ParentSubsidiary,
        DyadMode::MiddlemanFinal,
        DyadMode::FinalAll,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DyadMode::DirectAll => "direct_all",
            DyadMode::DirectComplex => "direct_complex",
            DyadMode::ParentSubsidiary => "parent_subsidiary",
            DyadMode::MiddlemanFinal => "middleman_final",
            DyadMode::FinalAll => "final_all",
        }
    }
}

impl FromStr for DyadMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DyadMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown count mode `{s}` (expected one of direct_all, direct_complex, parent_subsidiary, middleman_final, final_all)"
                ))
            })
    }
}

impl fmt::Display for DyadMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type DyadCountTable = BTreeMap<(Iso2, Iso2), u64>;

pub fn count_dyadic(networks: &[ControlNetwork], graph: &EquityGraph, mode: DyadMode) -> Result<DyadCountTable> {
    let country = |id: &str| graph.country_of(id).ok_or_else(|| Error::UnknownFirm(id.to_string()));
    let mut table = DyadCountTable::new();
    let mut bump = |a: Iso2, b: Iso2| *table.entry((a, b)).or_insert(0) += 1;

    for n in networks {
        match mode {
            DyadMode::DirectAll | DyadMode::DirectComplex => {
                if mode == DyadMode::DirectComplex && !n.is_complex {
                    continue;
                }
                for a in &n.assignments {
                    bump(country(&a.controller)?, country(&a.subsidiary)?);
                }
            }
            DyadMode::ParentSubsidiary => {
                let home = country(&n.parent)?;
                for a in &n.assignments {
                    bump(home, country(&a.subsidiary)?);
                }
            }
            DyadMode::MiddlemanFinal => {
                let h = Hierarchy::new(n)?;
                for a in &n.assignments {
                    let m = a.subsidiary.as_str();
                    if h.is_leaf(m) {
                        continue;
                    }
                    let cm = country(m)?;
                    let mut stack: Vec<&str> = h.children[m].clone();
                    while let Some(s) = stack.pop() {
                        bump(cm, country(s)?);
                        if let Some(kids) = h.children.get(s) {
                            stack.extend(kids.iter().copied());
                        }
                    }
                }
            }
            DyadMode::FinalAll => {
                for c in enumerate_chains(n, graph)? {
                    bump(c.parent_country(), c.final_country());
                }
            }
        }
    }
    Ok(table)
}

/// How a chain with several middlemen is reduced to (parent, middleman,
/// final) triads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribution {
    /// The final subsidiary's immediate controller.
    #[default]
    LastMiddleman,
    /// One unit for each distinct middleman country on the chain.
    AllMiddlemen,
}

impl FromStr for Attribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "last" | "last_middleman" => Ok(Attribution::LastMiddleman),
            "all" | "all_middlemen" => Ok(Attribution::AllMiddlemen),
            _ => Err(Error::Usage(format!("unknown attribution `{s}` (expected last or all)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriadCounts {
    pub i: Iso2,
    pub k: Iso2,
    pub j: Iso2,
    pub m_ikj: u64,
    pub m_ij: u64,
    pub share: f64,
}

/// Indirect chain counts per (parent, middleman, final) country triple and
/// their dyad totals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriadTable {
    pub cells: BTreeMap<(Iso2, Iso2, Iso2), u64>,
    pub dyads: BTreeMap<(Iso2, Iso2), u64>,
}

impl TriadTable {
    pub fn add(&mut self, i: Iso2, k: Iso2, j: Iso2, units: u64) {
        *self.cells.entry((i, k, j)).or_insert(0) += units;
        *self.dyads.entry((i, j)).or_insert(0) += units;
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Rows sorted by `(i, k, j)`.
    pub fn rows(&self) -> Vec<TriadCounts> {
        self.cells
            .iter()
            .map(|(&(i, k, j), &m_ikj)| {
                let m_ij = self.dyads[&(i, j)];
                TriadCounts {
                    i,
                    k,
                    j,
                    m_ikj,
                    m_ij,
                    share: m_ikj as f64 / m_ij as f64,
                }
            })
            .collect()
    }
}

pub fn count_triadic(networks: &[ControlNetwork], graph: &EquityGraph, attribution: Attribution) -> Result<TriadTable> {
    let mut t = TriadTable::default();
    for n in networks {
        if !n.is_complex {
            continue;
        }
        for c in enumerate_chains(n, graph)? {
            if c.n_middlemen() == 0 {
                continue;
            }
            let (i, j) = (c.parent_country(), c.final_country());
            match attribution {
                Attribution::LastMiddleman => {
                    let k = c.countries[c.countries.len() - 2];
                    t.add(i, k, j, 1);
                }
                Attribution::AllMiddlemen => {
                    let ks: BTreeSet<Iso2> = c.middleman_countries().iter().copied().collect();
                    for k in ks {
                        t.add(i, k, j, 1);
                    }
                }
            }
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::super::testing::network;
    use super::*;

    fn iso(s: &str) -> Iso2 {
        s.parse().unwrap()
    }

    #[test]
    fn chain_us_ie_lu() {
        let (g, n) = network(&[("A", "US"), ("B", "IE"), ("C", "LU")], &[("A", "B"), ("B", "C")]);
        let nets = [n];
        let ps = count_dyadic(&nets, &g, DyadMode::ParentSubsidiary).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[&(iso("US"), iso("IE"))], 1);
        assert_eq!(ps[&(iso("US"), iso("LU"))], 1);
        let mf = count_dyadic(&nets, &g, DyadMode::MiddlemanFinal).unwrap();
        assert_eq!(mf.len(), 1);
        assert_eq!(mf[&(iso("IE"), iso("LU"))], 1);
        let fa = count_dyadic(&nets, &g, DyadMode::FinalAll).unwrap();
        assert_eq!(fa[&(iso("US"), iso("LU"))], 1);
    }

    #[test]
    fn simple_network() {
        let (g, n) = network(&[("A", "US"), ("B", "DE")], &[("A", "B")]);
        let nets = [n];
        let d = count_dyadic(&nets, &g, DyadMode::DirectAll).unwrap();
        assert_eq!(d[&(iso("US"), iso("DE"))], 1);
        assert!(count_dyadic(&nets, &g, DyadMode::MiddlemanFinal).unwrap().is_empty());
        assert!(count_dyadic(&nets, &g, DyadMode::DirectComplex).unwrap().is_empty());
        assert!(count_triadic(&nets, &g, Attribution::LastMiddleman).unwrap().is_empty());
    }

    #[test]
    fn unknown_mode_is_usage_error() {
        assert!(matches!("everything".parse::<DyadMode>(), Err(Error::Usage(_))));
        assert_eq!("final_all".parse::<DyadMode>().unwrap(), DyadMode::FinalAll);
    }

    #[test]
    fn attribution_modes() {
        let (g, n) = network(
            &[("A", "US"), ("B", "IE"), ("C", "LU"), ("D", "DE")],
            &[("A", "B"), ("B", "C"), ("C", "D")],
        );
        let nets = [n];
        let last = count_triadic(&nets, &g, Attribution::LastMiddleman).unwrap();
        assert_eq!(last.cells.len(), 1);
        assert_eq!(last.cells[&(iso("US"), iso("LU"), iso("DE"))], 1);
        let all = count_triadic(&nets, &g, Attribution::AllMiddlemen).unwrap();
        assert_eq!(all.cells.len(), 2);
        assert_eq!(all.cells[&(iso("US"), iso("IE"), iso("DE"))], 1);
        assert_eq!(all.cells[&(iso("US"), iso("LU"), iso("DE"))], 1);
        assert_eq!(all.dyads[&(iso("US"), iso("DE"))], 2);
    }

    #[test]
    fn repeated_middleman_country_counts_once() {
        let (g, n) = network(
            &[("A", "US"), ("B", "NL"), ("C", "NL"), ("D", "DE")],
            &[("A", "B"), ("B", "C"), ("C", "D")],
        );
        let all = count_triadic(&[n], &g, Attribution::AllMiddlemen).unwrap();
        assert_eq!(all.cells[&(iso("US"), iso("NL"), iso("DE"))], 1);
    }

    #[test]
    fn shares_sum_to_one() {
        let (g, n) = network(
            &[("A", "US"), ("B", "IE"), ("C", "LU"), ("D", "DE"), ("E", "DE"), ("F", "DE")],
            &[("A", "B"), ("A", "C"), ("B", "D"), ("C", "E"), ("C", "F")],
        );
        let t = count_triadic(&[n], &g, Attribution::LastMiddleman).unwrap();
        let rows = t.rows();
        let s: f64 = rows.iter().map(|r| r.share).sum();
        assert!((s - 1.0).abs() < 1e-12);
        let lu = rows.iter().find(|r| r.k == iso("LU")).unwrap();
        assert_eq!((lu.m_ikj, lu.m_ij), (2, 3));
    }
}
