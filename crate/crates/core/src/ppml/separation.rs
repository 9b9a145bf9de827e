use std::collections::BTreeMap;

use serde::Serialize;

use super::RegressionSpec;
use crate::error::Result;
use crate::frame::Frame;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DroppedGroup {
    pub factor: String,
    pub level: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DropReport {
    pub groups: Vec<DroppedGroup>,
    pub rows_dropped: usize,
    pub rounds: usize,
}

/// Removes fixed-effect groups whose outcomes are all zero, repeating until
/// no such group is left. Returns the retained rows (indices into `frame`)
/// and the report.
pub fn drop_separated(frame: &Frame, spec: &RegressionSpec) -> Result<(Vec<usize>, DropReport)> {
    let y = frame.numeric(&spec.outcome)?;
    let keys: Vec<Vec<String>> = spec.factors.iter().map(|f| frame.keys(f)).collect::<Result<_>>()?;
    let mut keep = vec![true; frame.n_rows()];
    let mut report = DropReport::default();
    loop {
        let mut dropped_any = false;
        for (name, k) in spec.factors.iter().zip(&keys) {
            let mut groups: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
            for r in (0..y.len()).filter(|&r| keep[r]) {
                let e = groups.entry(k[r].as_str()).or_default();
                e.0 += y[r];
                e.1 += 1;
            }
            for (level, (total, rows)) in groups {
                if total <= 0.0 {
                    for r in 0..y.len() {
                        if keep[r] && k[r] == level {
                            keep[r] = false;
                        }
                    }
                    report.groups.push(DroppedGroup {
                        factor: name.clone(),
                        level: level.to_string(),
                        rows,
                    });
                    report.rows_dropped += rows;
                    dropped_any = true;
                }
            }
        }
        if !dropped_any {
            break;
        }
        report.rounds += 1;
    }
    Ok(((0..keep.len()).filter(|&r| keep[r]).collect(), report))
}
