use serde::Serialize;

use crate::error::{Error, Result};

fn totals(delta_ik: &[f64], delta_kj: &[f64]) -> Result<Vec<f64>> {
    if delta_ik.len() != delta_kj.len() {
        return Err(Error::Domain(format!(
            "delegation and monitoring costs cover {} and {} middleman countries",
            delta_ik.len(),
            delta_kj.len()
        )));
    }
    if delta_ik.is_empty() {
        return Err(Error::Domain("no candidate middleman country".into()));
    }
    let t: Vec<f64> = delta_ik.iter().zip(delta_kj).map(|(a, b)| a + b).collect();
    if t.iter().any(|x| x.is_nan() || *x == f64::NEG_INFINITY) {
        return Err(Error::Domain("middleman costs must be real or +inf".into()));
    }
    Ok(t)
}

/// `−ln Σ_ℓ exp(−t_ℓ)` computed around the smallest `t`.
fn inclusive_cost(t: &[f64]) -> f64 {
    let m = t.iter().copied().fold(f64::INFINITY, f64::min);
    if m == f64::INFINITY {
        return m;
    }
    m - t.iter().map(|x| (-(x - m)).exp()).sum::<f64>().ln()
}

/// Multilateral monitoring cost `C_ij = −ln Σ_ℓ exp(−(δ_iℓ + δ_ℓj))` over
/// the candidate middleman countries ℓ. Candidates at `+inf` drop out.
pub fn multilateral_cost(delta_ik: &[f64], delta_kj: &[f64]) -> Result<f64> {
    Ok(inclusive_cost(&totals(delta_ik, delta_kj)?))
}

/// Logit probabilities of each middleman country for a parent in `i`
/// monitoring a subsidiary in `j`.
pub fn middleman_choice_prob(delta_ik: &[f64], delta_kj: &[f64]) -> Result<Vec<f64>> {
    let t = totals(delta_ik, delta_kj)?;
    let m = t.iter().copied().fold(f64::INFINITY, f64::min);
    if m == f64::INFINITY {
        return Err(Error::Domain("every candidate middleman has infinite cost".into()));
    }
    let w: Vec<f64> = t.iter().map(|x| (-(x - m)).exp()).collect();
    let s: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / s).collect())
}

/// Auction parameters per origin country.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuctionConfig {
    /// Parents per country.
    pub m: Vec<u32>,
    /// Location of each country's Gumbel valuation shock.
    pub mu: Vec<f64>,
    pub sigma: f64,
    /// Value of a controlled subsidiary.
    pub b: f64,
}

impl AuctionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m.len() != self.mu.len() {
            return Err(Error::Parameter("m and mu cover different countries".into()));
        }
        if self.m.contains(&0) {
            return Err(Error::Parameter("every country needs at least one parent".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Parameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::Parameter(format!("b must be nonnegative, got {}", self.b)));
        }
        Ok(())
    }

    /// `2√b/σ`, the elasticity of the win probability to `√C`.
    pub fn theta(&self) -> f64 {
        2.0 * self.b.sqrt() / self.sigma
    }

    /// Log weight `ln m_i − 2√(b C)/σ + μ_i/σ` of origin `i`.
    pub fn log_weight(&self, i: usize, c: f64) -> f64 {
        f64::from(self.m[i]).ln() - 2.0 * (self.b * c).sqrt() / self.sigma + self.mu[i] / self.sigma
    }
}

/// Probability that the best parent of each origin country wins a target
/// in `j`, given the costs `C_nj` of every origin `n`.
pub fn auction_win_prob(c_col: &[f64], cfg: &AuctionConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if c_col.len() != cfg.m.len() {
        return Err(Error::Parameter(format!(
            "{} costs for {} origin countries",
            c_col.len(),
            cfg.m.len()
        )));
    }
    if let Some(c) = c_col.iter().find(|c| !(**c >= 0.0)) {
        return Err(Error::Convention(format!(
            "multilateral cost {c} is negative or undefined; shift costs to be nonnegative"
        )));
    }
    let lw: Vec<f64> = c_col.iter().enumerate().map(|(i, &c)| cfg.log_weight(i, c)).collect();
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|v| (v - top).exp()).collect();
    let s: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / s).collect())
}
