use std::io::Read;

use super::{check_offset, CountryRecord, DyadRecord};
use crate::error::{Error, Result};
use crate::iso::Iso2;
use crate::tabular::{CsvRow, CsvTable};

fn iso(row: &CsvRow, col: &str) -> Result<Iso2> {
    row.required(col)?.parse().map_err(|e: Error| row.error(e.to_string()))
}

fn positive(row: &CsvRow, col: &str) -> Result<Option<f64>> {
    match row.opt_number(col)? {
        Some(x) if x <= 0.0 => Err(row.error(format!("`{col}` must be positive, got {x}"))),
        v => Ok(v),
    }
}

/// Reads `countries.csv` (`iso2,utc_offset[,profit_tax][,labour_cost]`).
pub fn read_countries<R: Read>(reader: R, name: &str) -> Result<Vec<CountryRecord>> {
    let table = CsvTable::new(reader, name, &["iso2", "utc_offset"])?;
    let mut out = Vec::new();
    for row in table.rows() {
        let row = row?;
        let utc_offset = row.number("utc_offset")?;
        check_offset(utc_offset).map_err(|e| row.error(e.to_string()))?;
        out.push(CountryRecord {
            iso2: iso(&row, "iso2")?,
            utc_offset,
            profit_tax: positive(&row, "profit_tax")?,
            labour_cost: positive(&row, "labour_cost")?,
        });
    }
    Ok(out)
}

fn indicator(row: &CsvRow, col: &str) -> Result<Option<f64>> {
    match row.opt_number(col)? {
        Some(x) if x != 0.0 && x != 1.0 => Err(row.error(format!("`{col}` must be 0 or 1, got {x}"))),
        v => Ok(v),
    }
}

/// Reads `dyads.csv`. `iso_o`, `iso_d` and `dist_km` are mandatory; the
/// indicator columns and `cli_index` may be absent or blank.
pub fn read_dyads<R: Read>(reader: R, name: &str) -> Result<Vec<DyadRecord>> {
    let table = CsvTable::new(reader, name, &["iso_o", "iso_d", "dist_km"])?;
    let mut out = Vec::new();
    for row in table.rows() {
        let row = row?;
        let cli_index = match row.opt_number("cli_index")? {
            Some(x) if !(0.0..=1.0).contains(&x) => {
                return Err(row.error(format!("`cli_index` must lie in [0, 1], got {x}")));
            }
            v => v,
        };
        out.push(DyadRecord {
            iso_o: iso(&row, "iso_o")?,
            iso_d: iso(&row, "iso_d")?,
            dist_km: row.number("dist_km")?,
            contig: indicator(&row, "contig")?,
            comlang: indicator(&row, "comlang")?,
            colony: indicator(&row, "colony")?,
            legal: indicator(&row, "legal")?,
            rta: indicator(&row, "rta")?,
            cli_index,
        });
    }
    Ok(out)
}
