use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{fit_ppml, PpmlFit, RegressionSpec};
use crate::chains::DyadCountTable;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::frictions::pair_key;
use crate::iso::Iso2;

pub const SQRT_COST_COLUMN: &str = "sqrt_c_hat";
pub const DEFAULT_COST_FLOOR: f64 = 0.01;

/// How the additive constant of the recovered costs is pinned down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// The given dyad (the first in sort order when `None`) is set to zero.
    Reference(Option<(Iso2, Iso2)>),
    /// Shifted so the smallest cost equals `floor`.
    ShiftToPositive { floor: f64 },
}

impl Normalization {
    pub fn tag(&self) -> &'static str {
        match self {
            Normalization::Reference(_) => "reference",
            Normalization::ShiftToPositive { .. } => "shift",
        }
    }
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization::ShiftToPositive {
            floor: DEFAULT_COST_FLOOR,
        }
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(Normalization::Reference(None)),
            "shift" | "shift-to-positive" => Ok(Normalization::default()),
            _ => Err(Error::Usage(format!("unknown normalization `{s}` (expected reference or shift)"))),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Recovered multilateral monitoring costs by (parent, final) country pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    pub values: BTreeMap<(Iso2, Iso2), f64>,
    pub normalization: Normalization,
    /// Constant added to the pair fixed effects.
    pub constant: f64,
}

fn parse_pair(level: &str) -> Result<(Iso2, Iso2)> {
    let bad = || Error::Spec(format!("pair level `{level}` is not of the form `II|JJ`"));
    let (i, j) = level.split_once('|').ok_or_else(bad)?;
    Ok((i.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?))
}

/// Costs from the pair fixed effects of a triangular fit. With the share
/// of middleman `k` equal to `exp(−δ_ik − δ_kj + C_ij)`, the pair effect
/// estimates `C_ij` up to a constant.
pub fn recover_cij(fit: &PpmlFit, factor: &str, normalization: Normalization) -> Result<CostTable> {
    let fe = fit
        .fe
        .get(factor)
        .ok_or_else(|| Error::Spec(format!("fit has no `{factor}` pair fixed effect")))?;
    let mut raw = BTreeMap::new();
    for (level, v) in fe {
        raw.insert(parse_pair(level)?, *v);
    }
    let Some(min) = raw.values().copied().reduce(f64::min) else {
        return Err(Error::Spec(format!("pair fixed effect `{factor}` has no levels")));
    };
    let constant = match normalization {
        Normalization::Reference(dyad) => {
            let key = dyad.unwrap_or_else(|| *raw.keys().next().unwrap());
            let v = raw.get(&key).ok_or_else(|| {
                Error::Spec(format!("reference dyad {}-{} has no estimated fixed effect", key.0, key.1))
            })?;
            -v
        }
        Normalization::ShiftToPositive { floor } => {
            if !(floor > 0.0) {
                return Err(Error::Spec(format!("cost floor must be positive, got {floor}")));
            }
            floor - min
        }
    };
    let normalization = match normalization {
        Normalization::Reference(None) => Normalization::Reference(raw.keys().next().copied()),
        n => n,
    };
    Ok(CostTable {
        values: raw.into_iter().map(|(k, v)| (k, v + constant)).collect(),
        normalization,
        constant,
    })
}

#[derive(Debug, Clone)]
pub struct BilateralFit {
    pub fit: PpmlFit,
    /// Minus the coefficient on the square-root cost; `None` when that
    /// regressor was dropped.
    pub theta: Option<f64>,
    pub theta_se: Option<f64>,
}

/// Second-step gravity `M_ij = exp(−θ √Ĉ_ij + γ_i + γ_j)` over the dyads of
/// the cost table, with standard errors clustered by dyad.
pub fn fit_bilateral(counts: &DyadCountTable, costs: &CostTable) -> Result<BilateralFit> {
    let negative: Vec<String> = costs
        .values
        .iter()
        .filter(|(_, &c)| c < 0.0)
        .map(|((i, j), c)| format!("{i}-{j} ({c})"))
        .collect();
    if !negative.is_empty() {
        return Err(Error::Normalization(format!(
            "negative recovered costs under `{}` normalization: {}; use the shift normalization",
            costs.normalization,
            negative.join(", ")
        )));
    }
    let uncovered: Vec<String> = counts
        .iter()
        .filter(|(k, &n)| n > 0 && !costs.values.contains_key(k))
        .map(|((i, j), _)| format!("{i}-{j}"))
        .collect();
    if !uncovered.is_empty() {
        return Err(Error::Coverage(format!(
            "no recovered cost for count dyads: {}",
            uncovered.join(", ")
        )));
    }
    let mut frame = Frame::new();
    let keys = costs.values.keys();
    frame.insert_categorical("i", keys.clone().map(|(i, _)| i.to_string()).collect())?;
    frame.insert_categorical("j", keys.clone().map(|(_, j)| j.to_string()).collect())?;
    frame.insert_categorical("ij", keys.clone().map(|&(i, j)| pair_key(i, j)).collect())?;
    frame.insert_numeric("count", keys.map(|k| counts.get(k).copied().unwrap_or(0) as f64).collect())?;
    frame.insert_numeric(SQRT_COST_COLUMN, costs.values.values().map(|c| c.sqrt()).collect())?;
    let spec = RegressionSpec::new("count")
        .regressors(&[SQRT_COST_COLUMN])
        .factors(&["i", "j"])
        .cluster("ij");
    let fit = fit_ppml(&frame, &spec)?;
    Ok(BilateralFit {
        theta: fit.coef(SQRT_COST_COLUMN).map(|b| -b),
        theta_se: fit.std_err(SQRT_COST_COLUMN),
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso(s: &str) -> Iso2 {
        s.parse().unwrap()
    }

    /// Two parent-final dyads sharing two middlemen, with exact expected
    /// counts proportional to softmax shares.
    #[test]
    fn two_cell_logit_recovers_cost_difference() {
        let delta = [[0.2, 1.1], [0.9, 0.3]]; // per dyad, per middleman: δ_ik + δ_kj
        let c_true: Vec<f64> = delta
            .iter()
            .map(|row| -row.iter().map(|d: &f64| (-d).exp()).sum::<f64>().ln())
            .collect();
        let mut y = Vec::new();
        let mut ij = Vec::new();
        let mut m = Vec::new();
        for (d, row) in delta.iter().enumerate() {
            for total in row {
                y.push(1000.0 * (-total + c_true[d]).exp());
                m.push(1000f64.ln());
                ij.push(if d == 0 { "AA|BB".to_string() } else { "AA|CC".to_string() });
            }
        }
        // the δ total enters with a free coefficient whose true value is −1
        let mut f = Frame::new();
        f.insert_numeric("y", y).unwrap();
        f.insert_numeric("x", delta.iter().flatten().copied().collect()).unwrap();
        f.insert_numeric("off", m).unwrap();
        f.insert_categorical("ij", ij).unwrap();
        let fit = fit_ppml(&f, &RegressionSpec::new("y").regressors(&["x"]).factors(&["ij"]).offset("off")).unwrap();
        assert!((fit.coef("x").unwrap() + 1.0).abs() < 1e-6);
        let c = recover_cij(&fit, "ij", Normalization::Reference(None)).unwrap();
        let got = c.values[&(iso("AA"), iso("CC"))] - c.values[&(iso("AA"), iso("BB"))];
        assert!((got - (c_true[1] - c_true[0])).abs() < 1e-6);
        assert_eq!(c.values[&(iso("AA"), iso("BB"))], 0.0);
        let s = recover_cij(&fit, "ij", Normalization::default()).unwrap();
        let min = s.values.values().copied().fold(f64::INFINITY, f64::min);
        assert!((min - DEFAULT_COST_FLOOR).abs() < 1e-15);
    }

    #[test]
    fn missing_pair_factor() {
        let mut f = Frame::new();
        f.insert_numeric("y", vec![1.0, 2.0]).unwrap();
        f.insert_categorical("g", vec!["a".into(), "b".into()]).unwrap();
        let fit = fit_ppml(&f, &RegressionSpec::new("y").factors(&["g"])).unwrap();
        assert!(matches!(recover_cij(&fit, "ij", Normalization::default()), Err(Error::Spec(_))));
    }

    fn table(values: &[((&str, &str), f64)]) -> CostTable {
        CostTable {
            values: values.iter().map(|&((i, j), c)| ((iso(i), iso(j)), c)).collect(),
            normalization: Normalization::Reference(None),
            constant: 0.0,
        }
    }

    #[test]
    fn negative_costs_rejected() {
        let t = table(&[(("AA", "BB"), 0.0), (("AA", "CC"), -0.4)]);
        let err = fit_bilateral(&DyadCountTable::new(), &t).unwrap_err();
        assert!(matches!(err, Error::Normalization(_)));
        assert!(err.to_string().contains("shift"));
    }

    #[test]
    fn uncovered_count_dyad() {
        let t = table(&[(("AA", "BB"), 0.5)]);
        let mut counts = DyadCountTable::new();
        counts.insert((iso("BB"), iso("AA")), 2);
        assert!(matches!(fit_bilateral(&counts, &t), Err(Error::Coverage(_))));
    }

    #[test]
    fn constant_cost_is_dropped() {
        let mut vals = Vec::new();
        let names = ["AA", "BB", "CC"];
        for i in names {
            for j in names {
                vals.push(((i, j), 0.7));
            }
        }
        let t = table(&vals);
        let mut counts = DyadCountTable::new();
        for (n, (i, j)) in vals.iter().map(|(k, _)| *k).enumerate() {
            counts.insert((iso(i), iso(j)), 1 + (n as u64 * 7) % 5);
        }
        let b = fit_bilateral(&counts, &t).unwrap();
        assert_eq!(b.theta, None);
        assert_eq!(b.fit.dropped_regressors, [SQRT_COST_COLUMN]);
    }
}
