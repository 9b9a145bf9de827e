//! Parent-to-final ownership chains and the count tables built from them.

mod counts;
mod filter;
mod io;
mod summary;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::iso::Iso2;
use crate::ownership::{ControlNetwork, EquityGraph};

pub use counts::{count_dyadic, count_triadic, Attribution, DyadCountTable, DyadMode, TriadCounts, TriadTable};
pub use filter::{filter_networks, FilterOutcome, Role, SectorFilter, SectorSet};
pub use io::{write_chains, write_dyadic, write_table1, write_table2, write_triadic};
pub use summary::{summary_tables, ChainMatrix, CountryDistribution, CountryRow, Summary, MATRIX_COLS, MATRIX_ROWS};

/// Path from an ultimate parent down to one final subsidiary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OwnershipChain {
    /// Firm ids from parent to final subsidiary (at least two).
    pub firms: Vec<String>,
    pub countries: Vec<Iso2>,
}

impl OwnershipChain {
    pub fn parent(&self) -> &str {
        &self.firms[0]
    }

    pub fn final_firm(&self) -> &str {
        self.firms.last().unwrap()
    }

    pub fn parent_country(&self) -> Iso2 {
        self.countries[0]
    }

    pub fn final_country(&self) -> Iso2 {
        *self.countries.last().unwrap()
    }

    pub fn n_subsidiaries(&self) -> usize {
        self.firms.len() - 1
    }

    pub fn n_middlemen(&self) -> usize {
        self.firms.len() - 2
    }

    /// Interposed firms between parent and final subsidiary.
    pub fn middlemen(&self) -> &[String] {
        &self.firms[1..self.firms.len() - 1]
    }

    pub fn middleman_countries(&self) -> &[Iso2] {
        &self.countries[1..self.countries.len() - 1]
    }

    /// Distinct countries on the chain other than the parent's.
    pub fn foreign_countries_crossed(&self) -> usize {
        let home = self.countries[0];
        self.countries
            .iter()
            .filter(|c| **c != home)
            .collect::<BTreeSet<_>>()
            .len()
    }
}

/// Children lists of a control hierarchy, checked to be a tree rooted at the
/// parent.
pub(crate) struct Hierarchy<'a> {
    pub children: BTreeMap<&'a str, Vec<&'a str>>,
}

impl<'a> Hierarchy<'a> {
    pub fn new(network: &'a ControlNetwork) -> Result<Self> {
        let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for a in &network.assignments {
            if a.subsidiary == network.parent || !seen.insert(a.subsidiary.as_str()) {
                return Err(Error::Structural(format!(
                    "network {}: firm {} assigned more than once",
                    network.parent, a.subsidiary
                )));
            }
            children
                .entry(a.controller.as_str())
                .or_default()
                .push(a.subsidiary.as_str());
        }
        for kids in children.values_mut() {
            kids.sort_unstable();
        }
        // every subsidiary must hang below the parent; cycles leave some unreached
        let mut reached = 0usize;
        let mut stack = vec![network.parent.as_str()];
        while let Some(f) = stack.pop() {
            if let Some(kids) = children.get(f) {
                reached += kids.len();
                stack.extend(kids.iter().copied());
            }
            if reached > network.assignments.len() {
                break;
            }
        }
        if reached != network.assignments.len() {
            return Err(Error::Structural(format!(
                "network {}: hierarchy is not a tree rooted at the parent",
                network.parent
            )));
        }
        Ok(Hierarchy { children })
    }

    pub fn is_leaf(&self, firm: &str) -> bool {
        self.children.get(firm).is_none_or(|c| c.is_empty())
    }
}

/// One chain per leaf of the control hierarchy, in depth-first order with
/// children visited by id.
pub fn enumerate_chains(network: &ControlNetwork, graph: &EquityGraph) -> Result<Vec<OwnershipChain>> {
    let h = Hierarchy::new(network)?;
    let country = |id: &str| graph.country_of(id).ok_or_else(|| Error::UnknownFirm(id.to_string()));

    let mut chains = Vec::new();
    let mut path: Vec<&str> = Vec::new();
    let mut stack: Vec<(&str, usize)> = vec![(network.parent.as_str(), 0)];
    while let Some((firm, depth)) = stack.pop() {
        path.truncate(depth);
        path.push(firm);
        match h.children.get(firm) {
            Some(kids) if !kids.is_empty() => {
                for k in kids.iter().rev() {
                    stack.push((k, depth + 1));
                }
            }
            _ if depth > 0 => {
                let countries = path.iter().map(|f| country(f)).collect::<Result<Vec<_>>>()?;
                chains.push(OwnershipChain {
                    firms: path.iter().map(|s| s.to_string()).collect(),
                    countries,
                });
            }
            _ => {}
        }
    }
    Ok(chains)
}

/// Chains of every network, in network order.
pub fn enumerate_all(networks: &[ControlNetwork], graph: &EquityGraph) -> Result<Vec<OwnershipChain>> {
    let mut all = Vec::new();
    for n in networks {
        all.extend(enumerate_chains(n, graph)?);
    }
    Ok(all)
}
