use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{enumerate_chains, Hierarchy};
use crate::error::{Error, Result};
use crate::iso::Iso2;
use crate::ownership::{ControlNetwork, EquityGraph};

/// Subsidiary-count rows: 1 through 6, then 7 or more pooled.
pub const MATRIX_ROWS: usize = 7;
/// Foreign-countries-crossed columns: domestic (0) through 6, then 7 or more.
pub const MATRIX_COLS: usize = 8;

/// Chains tabulated by length and by foreign countries crossed, split by
/// whether the owning network is simple or complex.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChainMatrix {
    pub simple: [[u64; MATRIX_COLS]; MATRIX_ROWS],
    pub complex: [[u64; MATRIX_COLS]; MATRIX_ROWS],
}

impl ChainMatrix {
    pub fn add(&mut self, complex: bool, n_subsidiaries: usize, crossed: usize) {
        let r = n_subsidiaries.clamp(1, MATRIX_ROWS) - 1;
        let c = crossed.min(MATRIX_COLS - 1);
        let m = if complex { &mut self.complex } else { &mut self.simple };
        m[r][c] += 1;
    }

    /// Count at `(n_subsidiaries, crossed)` across both network kinds, with
    /// pooling of the last row and column.
    pub fn cell(&self, n_subsidiaries: usize, crossed: usize) -> u64 {
        let r = n_subsidiaries.clamp(1, MATRIX_ROWS) - 1;
        let c = crossed.min(MATRIX_COLS - 1);
        self.simple[r][c] + self.complex[r][c]
    }

    pub fn row_totals(&self) -> [u64; MATRIX_ROWS] {
        std::array::from_fn(|r| (0..MATRIX_COLS).map(|c| self.simple[r][c] + self.complex[r][c]).sum())
    }

    pub fn col_totals(&self) -> [u64; MATRIX_COLS] {
        std::array::from_fn(|c| (0..MATRIX_ROWS).map(|r| self.simple[r][c] + self.complex[r][c]).sum())
    }

    pub fn total(&self) -> u64 {
        self.row_totals().iter().sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CountryRow {
    pub parents: u64,
    pub subsidiaries: u64,
    pub middlemen: u64,
}

/// Per-country counts of firms taking part in multinational networks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CountryDistribution {
    pub rows: BTreeMap<Iso2, CountryRow>,
}

impl CountryDistribution {
    pub fn totals(&self) -> CountryRow {
        let mut t = CountryRow::default();
        for r in self.rows.values() {
            t.parents += r.parents;
            t.subsidiaries += r.subsidiaries;
            t.middlemen += r.middlemen;
        }
        t
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub matrix: ChainMatrix,
    pub countries: CountryDistribution,
    pub n_networks: usize,
    pub n_chains: u64,
}

/// Chain matrix over all networks and the country distribution over the
/// multinational ones.
pub fn summary_tables(networks: &[ControlNetwork], graph: &EquityGraph) -> Result<Summary> {
    let country = |id: &str| graph.country_of(id).ok_or_else(|| Error::UnknownFirm(id.to_string()));
    let mut s = Summary {
        n_networks: networks.len(),
        ..Default::default()
    };
    for n in networks {
        for c in enumerate_chains(n, graph)? {
            s.matrix.add(n.is_complex, c.n_subsidiaries(), c.foreign_countries_crossed());
            s.n_chains += 1;
        }
        if !n.is_multinational {
            continue;
        }
        let rows = &mut s.countries.rows;
        rows.entry(country(&n.parent)?).or_default().parents += 1;
        let h = Hierarchy::new(n)?;
        let mut firms = BTreeSet::new();
        for a in &n.assignments {
            firms.insert(a.subsidiary.as_str());
        }
        for f in firms {
            let row = rows.entry(country(f)?).or_default();
            row.subsidiaries += 1;
            if !h.is_leaf(f) {
                row.middlemen += 1;
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::super::testing::network;
    use super::*;

    #[test]
    fn domestic_dyad() {
        let (g, n) = network(&[("A", "IT"), ("B", "IT")], &[("A", "B")]);
        let s = summary_tables(&[n], &g).unwrap();
        assert_eq!(s.matrix.cell(1, 0), 1);
        assert_eq!(s.matrix.simple[0][0], 1);
        assert_eq!(s.matrix.total(), 1);
        assert!(s.countries.rows.is_empty());
    }

    #[test]
    fn three_subsidiaries_two_foreign() {
        let (g, n) = network(
            &[("A", "US"), ("B", "US"), ("C", "IE"), ("D", "LU")],
            &[("A", "B"), ("B", "C"), ("C", "D")],
        );
        let s = summary_tables(&[n], &g).unwrap();
        assert_eq!(s.matrix.cell(3, 2), 1);
        assert_eq!(s.matrix.complex[2][2], 1);
        let us = &s.countries.rows[&"US".parse().unwrap()];
        assert_eq!((us.parents, us.subsidiaries, us.middlemen), (1, 1, 1));
        let lu = &s.countries.rows[&"LU".parse().unwrap()];
        assert_eq!((lu.parents, lu.subsidiaries, lu.middlemen), (0, 1, 0));
    }

    #[test]
    fn long_chains_pool() {
        let ids: Vec<String> = (0..10).map(|i| format!("F{i}")).collect();
        let countries = ["US", "AA", "AB", "AC", "AD", "AE", "AF", "AG", "AH", "AI"];
        let firms: Vec<(&str, &str)> = ids.iter().map(String::as_str).zip(countries).collect();
        let links: Vec<(&str, &str)> = ids.windows(2).map(|w| (w[0].as_str(), w[1].as_str())).collect();
        let (g, n) = network(&firms, &links);
        let s = summary_tables(&[n], &g).unwrap();
        assert_eq!(s.matrix.complex[MATRIX_ROWS - 1][MATRIX_COLS - 1], 1);
        assert_eq!(s.matrix.cell(9, 9), 1);
    }

    #[test]
    fn margins_match_total() {
        let (g, n) = network(
            &[("A", "US"), ("B", "DE"), ("C", "FR"), ("D", "US"), ("E", "IT")],
            &[("A", "B"), ("A", "C"), ("C", "D"), ("D", "E")],
        );
        let s = summary_tables(&[n], &g).unwrap();
        assert_eq!(s.n_chains, 2);
        assert_eq!(s.matrix.row_totals().iter().sum::<u64>(), 2);
        assert_eq!(s.matrix.col_totals().iter().sum::<u64>(), 2);
    }
}
