use std::io::{Read, Write};
use std::path::Path;

use super::{ControlNetwork, EquityEdge, EquityGraph, Firm};
use crate::error::{Error, Result};
use crate::tabular::{open_csv, CsvOut, CsvTable};

/// Reads `firms.csv` (`firm_id,country,sector`).
pub fn read_firms<R: Read>(reader: R, name: &str) -> Result<Vec<Firm>> {
    let table = CsvTable::new(reader, name, &["firm_id", "country"])?;
    let mut firms = Vec::new();
    for row in table.rows() {
        let row = row?;
        let id = row.required("firm_id")?.to_string();
        let country = row
            .required("country")?
            .parse()
            .map_err(|e: Error| row.error(e.to_string()))?;
        let sector = match row.optional("sector") {
            None => None,
            Some(s) => Some(
                s.parse::<u8>()
                    .ok()
                    .filter(|v| (10..=99).contains(v))
                    .ok_or_else(|| row.error(format!("sector `{s}` is not a 2-digit code")))?,
            ),
        };
        firms.push(Firm { id, country, sector });
    }
    Ok(firms)
}

/// Reads `edges.csv` (`shareholder_id,target_id,share_pct`).
pub fn read_edges<R: Read>(reader: R, name: &str) -> Result<Vec<EquityEdge>> {
    let table = CsvTable::new(reader, name, &["shareholder_id", "target_id", "share_pct"])?;
    let mut edges = Vec::new();
    for row in table.rows() {
        let row = row?;
        edges.push(EquityEdge {
            shareholder: row.required("shareholder_id")?.to_string(),
            target: row.required("target_id")?.to_string(),
            share: row.number("share_pct")?,
        });
    }
    Ok(edges)
}

pub fn read_graph(firms: &Path, edges: &Path) -> Result<EquityGraph> {
    let f = read_firms(open_csv(firms)?, &firms.display().to_string())?;
    let e = read_edges(open_csv(edges)?, &edges.display().to_string())?;
    Ok(EquityGraph::new(f, e))
}

/// Writes `networks.csv`
/// (`parent_id,subsidiary_id,controller_id,level,control_type`).
pub fn write_networks<W: Write>(writer: W, networks: &[ControlNetwork]) -> Result<W> {
    let mut out = CsvOut::new(writer, "networks.csv");
    out.row(["parent_id", "subsidiary_id", "controller_id", "level", "control_type"])?;
    for n in networks {
        for a in &n.assignments {
            out.row([
                a.parent.as_str(),
                a.subsidiary.as_str(),
                a.controller.as_str(),
                &a.level.to_string(),
                a.control_type.as_str(),
            ])?;
        }
    }
    out.finish()
}
