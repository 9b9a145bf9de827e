use std::collections::{BTreeMap, BTreeSet};

use super::{Control, DyadFrictions, FrictionTable};
use crate::chains::{DyadCountTable, TriadTable};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::iso::Iso2;

#[derive(Debug, Clone, Default)]
pub struct TriadDesignOptions {
    pub controls: Vec<Control>,
    /// Also add the parent-to-final controls `<control>_ij`.
    pub include_ij_controls: bool,
    /// Adds `wh_ij_x_wh_kj`.
    pub include_interaction: bool,
}

#[derive(Debug, Clone)]
pub struct TriadDesign {
    pub frame: Frame,
    /// Triads left out because a requested control is missing for one of
    /// their pairs.
    pub excluded: Vec<(Iso2, Iso2, Iso2)>,
}

/// Label of a country pair used for pair-level factors and clusters.
pub fn pair_key(i: Iso2, j: Iso2) -> String {
    format!("{i}|{j}")
}

fn resolve(
    table: &FrictionTable,
    pairs: impl IntoIterator<Item = (Iso2, Iso2)>,
) -> Result<BTreeMap<(Iso2, Iso2), DyadFrictions>> {
    let mut found = BTreeMap::new();
    let mut missing = BTreeSet::new();
    for (o, d) in pairs {
        if found.contains_key(&(o, d)) {
            continue;
        }
        match table.get(o, d) {
            Some(f) => {
                found.insert((o, d), f);
            }
            None => {
                missing.insert((o, d));
            }
        }
    }
    if missing.is_empty() {
        Ok(found)
    } else {
        let list: Vec<String> = missing.iter().map(|(o, d)| format!("{o}-{d}")).collect();
        Err(Error::Coverage(format!(
            "no friction data for {} pair(s): {}",
            list.len(),
            list.join(", ")
        )))
    }
}

/// Numeric columns filled row by row, in insertion order.
#[derive(Default)]
struct Columns {
    names: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl Columns {
    fn declare(&mut self, name: String) {
        self.names.push(name);
        self.values.push(Vec::new());
    }

    fn into_frame(self, frame: &mut Frame) -> Result<()> {
        for (n, v) in self.names.into_iter().zip(self.values) {
            frame.insert_numeric(n, v)?;
        }
        Ok(())
    }
}

/// Triangular design over every observed `(i, j)` dyad crossed with every
/// candidate middleman country, zero outcomes included, sorted by
/// `(i, k, j)`.
pub fn build_triad_design(
    triads: &TriadTable,
    table: &FrictionTable,
    candidates: &BTreeSet<Iso2>,
    opts: &TriadDesignOptions,
) -> Result<TriadDesign> {
    let mut cells: Vec<(Iso2, Iso2, Iso2, u64, u64)> = Vec::new();
    for (&(i, j), &m_ij) in &triads.dyads {
        for &k in candidates {
            let m_ikj = triads.cells.get(&(i, k, j)).copied().unwrap_or(0);
            cells.push((i, k, j, m_ikj, m_ij));
        }
    }
    for &(i, k, j) in triads.cells.keys() {
        if !candidates.contains(&k) {
            return Err(Error::Coverage(format!(
                "middleman country {k} of triad {i}-{k}-{j} is not among the candidate countries"
            )));
        }
    }
    cells.sort_by_key(|c| (c.0, c.1, c.2));

    let pairs = cells.iter().flat_map(|&(i, k, j, ..)| [(i, k), (k, j), (i, j)]);
    let fr = resolve(table, pairs)?;

    let sides: &[&str] = if opts.include_ij_controls { &["ik", "kj", "ij"] } else { &["ik", "kj"] };
    let mut cols = Columns::default();
    for name in ["m_ikj", "m_ij", "log_m_ij", "wh_ik", "wh_kj", "wh_ij"] {
        cols.declare(name.into());
    }
    for c in &opts.controls {
        for s in sides {
            cols.declare(format!("{}_{s}", c.name()));
        }
    }
    if opts.include_interaction {
        cols.declare("wh_ij_x_wh_kj".into());
    }

    let mut keys: [Vec<String>; 4] = Default::default();
    let mut excluded = Vec::new();
    let mut row = Vec::with_capacity(cols.names.len());
    'cells: for &(i, k, j, m_ikj, m_ij) in &cells {
        let (ik, kj, ij) = (&fr[&(i, k)], &fr[&(k, j)], &fr[&(i, j)]);
        row.clear();
        row.extend([m_ikj as f64, m_ij as f64, (m_ij as f64).ln(), ik.wh, kj.wh, ij.wh]);
        for c in &opts.controls {
            for d in [ik, kj, ij].iter().take(sides.len()) {
                match c.value(d) {
                    Some(v) => row.push(v),
                    None => {
                        excluded.push((i, k, j));
                        continue 'cells;
                    }
                }
            }
        }
        if opts.include_interaction {
            row.push(ij.wh * kj.wh);
        }
        for (dst, v) in cols.values.iter_mut().zip(&row) {
            dst.push(*v);
        }
        for (dst, v) in keys.iter_mut().zip([i.to_string(), k.to_string(), j.to_string(), pair_key(i, j)]) {
            dst.push(v);
        }
    }

    let mut frame = Frame::new();
    let [ki, kk, kj, kij] = keys;
    frame.insert_categorical("i", ki)?;
    frame.insert_categorical("k", kk)?;
    frame.insert_categorical("j", kj)?;
    frame.insert_categorical("ij", kij)?;
    cols.into_frame(&mut frame)?;
    Ok(TriadDesign { frame, excluded })
}

#[derive(Debug, Clone, Default)]
pub struct DyadDesignOptions {
    pub controls: Vec<Control>,
    /// Keep `i = j` pairs; they need internal distances.
    pub include_home: bool,
}

/// Bilateral design over all candidate pairs with outcome `count` (zero when
/// the pair has no links). Rows missing a requested control are dropped and
/// returned.
pub fn build_dyad_design(
    counts: &DyadCountTable,
    table: &FrictionTable,
    candidates: &BTreeSet<Iso2>,
    opts: &DyadDesignOptions,
) -> Result<(Frame, Vec<(Iso2, Iso2)>)> {
    let mut pairs = Vec::new();
    for &i in candidates {
        for &j in candidates {
            if i != j || opts.include_home {
                pairs.push((i, j));
            }
        }
    }
    for &(i, j) in counts.keys() {
        if !candidates.contains(&i) || !candidates.contains(&j) {
            return Err(Error::Coverage(format!("count dyad {i}-{j} outside the candidate countries")));
        }
    }
    let fr = resolve(table, pairs.iter().copied())?;

    let mut cols = Columns::default();
    cols.declare("count".into());
    cols.declare("wh_ij".into());
    for c in &opts.controls {
        cols.declare(format!("{}_ij", c.name()));
    }
    let mut keys: [Vec<String>; 3] = Default::default();
    let mut excluded = Vec::new();
    let mut row = Vec::new();
    'pairs: for &(i, j) in &pairs {
        let d = &fr[&(i, j)];
        row.clear();
        row.push(counts.get(&(i, j)).copied().unwrap_or(0) as f64);
        row.push(d.wh);
        for c in &opts.controls {
            match c.value(d) {
                Some(v) => row.push(v),
                None => {
                    excluded.push((i, j));
                    continue 'pairs;
                }
            }
        }
        for (dst, v) in cols.values.iter_mut().zip(&row) {
            dst.push(*v);
        }
        for (dst, v) in keys.iter_mut().zip([i.to_string(), j.to_string(), pair_key(i, j)]) {
            dst.push(v);
        }
    }
    let mut frame = Frame::new();
    let [ki, kj, kij] = keys;
    frame.insert_categorical("i", ki)?;
    frame.insert_categorical("j", kj)?;
    frame.insert_categorical("ij", kij)?;
    cols.into_frame(&mut frame)?;
    Ok((frame, excluded))
}
