use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde_json::{json, Map, Value};

use super::{CostTable, Normalization, PpmlFit};
use crate::error::{Error, Result};
use crate::iso::Iso2;
use crate::numfmt::{fmt_sig, round_sig};
use crate::tabular::{CsvOut, CsvTable};

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig(x))
    } else {
        Value::Null
    }
}

/// Coefficients, standard errors, covariance, fixed effects and
/// diagnostics of a fit, with numbers at 12 significant digits.
pub fn estimates_json(fit: &PpmlFit) -> Value {
    let coefficients: Vec<Value> = fit
        .names
        .iter()
        .zip(&fit.beta)
        .zip(&fit.se)
        .map(|((n, b), s)| json!({ "name": n, "estimate": num(*b), "se": num(*s), "z": num(b / s) }))
        .collect();
    let vcov: Vec<Value> = fit.vcov.iter().map(|r| Value::Array(r.iter().map(|v| num(*v)).collect())).collect();
    let mut fe = Map::new();
    for (factor, levels) in &fit.fe {
        let m: Map<String, Value> = levels.iter().map(|(l, v)| (l.clone(), num(*v))).collect();
        fe.insert(factor.clone(), Value::Object(m));
    }
    json!({
        "spec": fit.spec,
        "coefficients": coefficients,
        "vcov": vcov,
        "fixed_effects": fe,
        "diagnostics": {
            "deviance": num(fit.deviance),
            "deviance_trace": fit.deviance_trace.iter().map(|d| num(*d)).collect::<Vec<_>>(),
            "iterations": fit.n_iterations,
            "n_obs": fit.n_obs,
            "n_clusters": fit.n_clusters,
            "max_relative_score": num(fit.max_score),
            "dropped_regressors": fit.dropped_regressors,
            "warnings": fit.warnings,
        },
        "drop_report": fit.drop_report,
    })
}

/// Writes `cij.csv` (`iso_i,iso_j,c_hat,normalization`).
pub fn write_cij<W: Write>(writer: W, costs: &CostTable) -> Result<W> {
    let mut out = CsvOut::new(writer, "cij.csv");
    out.row(["iso_i", "iso_j", "c_hat", "normalization"])?;
    for ((i, j), c) in &costs.values {
        out.row([i.as_str(), j.as_str(), &fmt_sig(*c), costs.normalization.tag()])?;
    }
    out.finish()
}

/// Reads a `cij.csv` written by [`write_cij`]. The constant that was added
/// to the fixed effects is not stored and comes back as 0.
pub fn read_cij<R: Read>(reader: R, name: &str) -> Result<CostTable> {
    let table = CsvTable::new(reader, name, &["iso_i", "iso_j", "c_hat", "normalization"])?;
    let mut values = BTreeMap::new();
    let mut tag: Option<String> = None;
    for row in table.rows() {
        let row = row?;
        let pair: (Iso2, Iso2) = (
            row.required("iso_i")?.parse().map_err(|e: Error| row.error(e.to_string()))?,
            row.required("iso_j")?.parse().map_err(|e: Error| row.error(e.to_string()))?,
        );
        let c = row.number("c_hat")?;
        let t = row.required("normalization")?;
        match &tag {
            None => tag = Some(t.to_string()),
            Some(prev) if prev != t => return Err(row.error(format!("normalization `{t}` differs from `{prev}`"))),
            _ => {}
        }
        if values.insert(pair, c).is_some() {
            return Err(row.error(format!("pair {}-{} listed twice", pair.0, pair.1)));
        }
    }
    let normalization = match tag.as_deref() {
        Some("reference") => Normalization::Reference(values.iter().find(|(_, c)| **c == 0.0).map(|(k, _)| *k)),
        Some("shift") => Normalization::ShiftToPositive {
            floor: values.values().copied().fold(f64::INFINITY, f64::min),
        },
        Some(t) => return Err(Error::Data(format!("{name}: unknown normalization `{t}`"))),
        None => return Err(Error::Data(format!("{name}: no costs"))),
    };
    Ok(CostTable {
        values,
        normalization,
        constant: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{fit_ppml, Normalization, RegressionSpec};
    use super::*;
    use crate::frame::Frame;

    #[test]
    fn json_has_stable_sections() {
        let mut f = Frame::new();
        f.insert_numeric("y", vec![1.0, 2.0, 3.0]).unwrap();
        let v = estimates_json(&fit_ppml(&f, &RegressionSpec::new("y")).unwrap());
        assert_eq!(v["coefficients"][0]["name"], "(intercept)");
        assert_eq!(v["coefficients"][0]["estimate"], json!(0.69314718056));
        assert!(v["diagnostics"]["deviance"].is_number());
        assert_eq!(v["spec"]["outcome"], "y");
    }

    #[test]
    fn cij_csv() {
        let costs = CostTable {
            values: [(("US".parse().unwrap(), "DE".parse().unwrap()), 0.25)].into(),
            normalization: Normalization::default(),
            constant: 0.0,
        };
        let text = String::from_utf8(write_cij(Vec::new(), &costs).unwrap()).unwrap();
        assert_eq!(text, "iso_i,iso_j,c_hat,normalization\nUS,DE,0.25,shift\n");
    }

    #[test]
    fn cij_round_trip() {
        let mut values = BTreeMap::new();
        values.insert(("AA".parse().unwrap(), "BB".parse().unwrap()), 0.01);
        values.insert(("BB".parse().unwrap(), "AA".parse().unwrap()), 1.25);
        let t = CostTable {
            values,
            normalization: Normalization::default(),
            constant: 3.0,
        };
        let bytes = write_cij(Vec::new(), &t).unwrap();
        let back = read_cij(bytes.as_slice(), "cij.csv").unwrap();
        assert_eq!(back.values, t.values);
        assert_eq!(back.normalization, Normalization::ShiftToPositive { floor: 0.01 });
        let mixed = "iso_i,iso_j,c_hat,normalization\nAA,BB,0,reference\nBB,AA,1,shift\n";
        assert!(read_cij(mixed.as_bytes(), "cij.csv").is_err());
    }
}
