use std::io::Write;

use super::{DyadCountTable, DyadMode, OwnershipChain, Summary, TriadTable, MATRIX_COLS, MATRIX_ROWS};
use crate::error::Result;
use crate::numfmt::fmt_sig;
use crate::tabular::CsvOut;

pub fn write_chains<W: Write>(writer: W, chains: &[OwnershipChain]) -> Result<W> {
    let mut out = CsvOut::new(writer, "chains.csv");
    out.row(["parent_id", "final_id", "path", "countries", "n_middlemen", "foreign_crossed"])?;
    for c in chains {
        let countries: Vec<&str> = c.countries.iter().map(|i| i.as_str()).collect();
        out.row([
            c.parent(),
            c.final_firm(),
            &c.firms.join("|"),
            &countries.join("|"),
            &c.n_middlemen().to_string(),
            &c.foreign_countries_crossed().to_string(),
        ])?;
    }
    out.finish()
}

/// Long table `mode,iso_i,iso_j,count` over the given modes.
pub fn write_dyadic<W: Write>(writer: W, tables: &[(DyadMode, DyadCountTable)]) -> Result<W> {
    let mut out = CsvOut::new(writer, "counts_dyadic.csv");
    out.row(["mode", "iso_i", "iso_j", "count"])?;
    for (mode, table) in tables {
        for ((i, j), n) in table {
            out.row([mode.as_str(), i.as_str(), j.as_str(), &n.to_string()])?;
        }
    }
    out.finish()
}

pub fn write_triadic<W: Write>(writer: W, table: &TriadTable) -> Result<W> {
    let mut out = CsvOut::new(writer, "counts_triadic.csv");
    out.row(["iso_i", "iso_k", "iso_j", "m_ikj", "m_ij", "share"])?;
    for r in table.rows() {
        out.row([
            r.i.as_str(),
            r.k.as_str(),
            r.j.as_str(),
            &r.m_ikj.to_string(),
            &r.m_ij.to_string(),
            &fmt_sig(r.share),
        ])?;
    }
    out.finish()
}

fn pct(n: u64, total: u64) -> String {
    if total == 0 {
        "0".into()
    } else {
        fmt_sig(100.0 * n as f64 / total as f64)
    }
}

fn pooled(x: usize, last: usize) -> String {
    if x == last {
        format!(">={x}")
    } else {
        x.to_string()
    }
}

/// Chain matrix in long form, one row per (structure, length, crossed) cell.
pub fn write_table2<W: Write>(writer: W, summary: &Summary) -> Result<W> {
    let mut out = CsvOut::new(writer, "table2.csv");
    out.row(["structure", "n_subsidiaries", "foreign_crossed", "chains", "pct"])?;
    let total = summary.matrix.total();
    for (label, m) in [("simple", &summary.matrix.simple), ("complex", &summary.matrix.complex)] {
        for (r, row) in m.iter().enumerate() {
            for (c, &n) in row.iter().enumerate() {
                out.row([
                    label,
                    &pooled(r + 1, MATRIX_ROWS),
                    &pooled(c, MATRIX_COLS - 1),
                    &n.to_string(),
                    &pct(n, total),
                ])?;
            }
        }
    }
    out.finish()
}

pub fn write_table1<W: Write>(writer: W, summary: &Summary) -> Result<W> {
    let mut out = CsvOut::new(writer, "table1.csv");
    out.row([
        "iso",
        "parents",
        "parents_pct",
        "subsidiaries",
        "subsidiaries_pct",
        "middlemen",
        "middlemen_pct",
    ])?;
    let t = summary.countries.totals();
    for (iso, r) in &summary.countries.rows {
        out.row([
            iso.as_str(),
            &r.parents.to_string(),
            &pct(r.parents, t.parents),
            &r.subsidiaries.to_string(),
            &pct(r.subsidiaries, t.subsidiaries),
            &r.middlemen.to_string(),
            &pct(r.middlemen, t.middlemen),
        ])?;
    }
    out.finish()
}
