use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::enumerate_chains;
use crate::error::{Error, Result};
use crate::ownership::{ControlNetwork, EquityGraph};

/// Position of a firm on a chain that a sector clause constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Parent,
    Middleman,
    Final,
}

/// Set of 2-digit NAICS codes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SectorSet(BTreeSet<u8>);

impl SectorSet {
    pub fn contains(&self, code: u8) -> bool {
        self.0.contains(&code)
    }

    pub fn manufacturing() -> Self {
        SectorSet((31..=33).collect())
    }

    /// Finance and insurance.
    pub fn finance() -> Self {
        SectorSet([52, 53].into())
    }

    /// Trade and services, finance excluded.
    pub fn services() -> Self {
        SectorSet((42..=92).filter(|c| !matches!(c, 52 | 53)).collect())
    }
}

impl FromStr for SectorSet {
    type Err = Error;

    /// Comma-separated group names (`manufacturing`, `services`, `finance`),
    /// codes (`52`) or inclusive ranges (`31-33`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = |part: &str| Error::Usage(format!("invalid sector group `{part}`"));
        let code = |t: &str| t.trim().parse::<u8>().ok().filter(|c| (10..=99).contains(c));
        let mut set = BTreeSet::new();
        for part in s.split(',').map(str::trim) {
            match part {
                "manufacturing" => set.extend(SectorSet::manufacturing().0),
                "services" => set.extend(SectorSet::services().0),
                "finance" => set.extend(SectorSet::finance().0),
                _ => {
                    if let Some((lo, hi)) = part.split_once('-') {
                        let (lo, hi) = code(lo).zip(code(hi)).ok_or_else(|| bad(part))?;
                        if lo > hi {
                            return Err(bad(part));
                        }
                        set.extend(lo..=hi);
                    } else {
                        set.insert(code(part).ok_or_else(|| bad(part))?);
                    }
                }
            }
        }
        Ok(SectorSet(set))
    }
}

/// Sector restrictions by chain role; unset roles are unconstrained.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SectorFilter {
    pub parent: Option<SectorSet>,
    pub middleman: Option<SectorSet>,
    pub final_sub: Option<SectorSet>,
}

impl FromStr for SectorFilter {
    type Err = Error;

    /// Clauses `role=groups` separated by `;`, where role is `parent`,
    /// `middleman`, `final` or `all`. Example: `parent=manufacturing;final=52,53`.
    fn from_str(s: &str) -> Result<Self> {
        let mut f = SectorFilter::default();
        for clause in s.split(';').map(str::trim).filter(|c| !c.is_empty()) {
            let (role, groups) = clause
                .split_once(['=', ':'])
                .ok_or_else(|| Error::Usage(format!("sector clause `{clause}` lacks `role=groups`")))?;
            let set: SectorSet = groups.parse()?;
            match role.trim() {
                "parent" => f.parent = Some(set),
                "middleman" => f.middleman = Some(set),
                "final" => f.final_sub = Some(set),
                "all" => {
                    f.parent = Some(set.clone());
                    f.middleman = Some(set.clone());
                    f.final_sub = Some(set);
                }
                other => return Err(Error::Usage(format!("unknown sector role `{other}`"))),
            }
        }
        Ok(f)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Parent => "parent",
            Role::Middleman => "middleman",
            Role::Final => "final",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub networks: Vec<ControlNetwork>,
    /// Firms a clause needed but that carry no sector code; they fail the
    /// clause.
    pub missing_sector: BTreeSet<String>,
}

impl SectorFilter {
    pub fn is_empty(&self) -> bool {
        self.parent.is_none() && self.middleman.is_none() && self.final_sub.is_none()
    }

    fn set(&self, role: Role) -> Option<&SectorSet> {
        match role {
            Role::Parent => self.parent.as_ref(),
            Role::Middleman => self.middleman.as_ref(),
            Role::Final => self.final_sub.as_ref(),
        }
    }
}

/// Keeps networks whose parent passes the parent clause, pruned to the
/// chains whose middlemen and final subsidiary pass theirs. Networks left
/// without chains are dropped.
pub fn filter_networks(networks: &[ControlNetwork], graph: &EquityGraph, filter: &SectorFilter) -> Result<FilterOutcome> {
    let mut out = FilterOutcome::default();
    let mut missing = BTreeSet::new();
    let mut passes = |id: &str, role: Role| -> Result<bool> {
        let Some(set) = filter.set(role) else { return Ok(true) };
        let firm = graph.firm(id).ok_or_else(|| Error::UnknownFirm(id.to_string()))?;
        match firm.sector {
            Some(code) => Ok(set.contains(code)),
            None => {
                missing.insert(id.to_string());
                Ok(false)
            }
        }
    };

    for n in networks {
        if filter.is_empty() {
            out.networks.push(n.clone());
            continue;
        }
        if !passes(&n.parent, Role::Parent)? {
            continue;
        }
        if filter.middleman.is_none() && filter.final_sub.is_none() {
            out.networks.push(n.clone());
            continue;
        }
        let mut keep = BTreeSet::new();
        for c in enumerate_chains(n, graph)? {
            let mut ok = passes(c.final_firm(), Role::Final)?;
            for m in c.middlemen() {
                ok = ok && passes(m, Role::Middleman)?;
            }
            if ok {
                keep.extend(c.firms[1..].iter().cloned());
            }
        }
        if keep.is_empty() {
            continue;
        }
        let assignments = n
            .assignments
            .iter()
            .filter(|a| keep.contains(&a.subsidiary))
            .cloned()
            .collect();
        out.networks.push(ControlNetwork::new(n.parent.clone(), assignments, graph));
    }
    out.missing_sector = missing;
    Ok(out)
}
