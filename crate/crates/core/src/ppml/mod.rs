//! Poisson pseudo-maximum likelihood with absorbed fixed effects.

mod cost;
mod fe;
mod inference;
mod io;
mod predict;
mod separation;

use std::collections::BTreeMap;

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::Frame;
use fe::Factors;

pub use cost::{fit_bilateral, recover_cij, BilateralFit, CostTable, Normalization, SQRT_COST_COLUMN};
pub use inference::{cluster_se, ClusteredCovariance};
pub use io::{estimates_json, read_cij, write_cij};
pub use predict::{predict, LevelPolicy};
pub use separation::{drop_separated, DropReport, DroppedGroup};

/// Name given to the constant column of models without fixed effects.
pub const INTERCEPT: &str = "(intercept)";

/// Column roles and numerical settings of one Poisson regression.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionSpec {
    pub outcome: String,
    pub regressors: Vec<String>,
    pub factors: Vec<String>,
    /// Enters the linear index with coefficient one.
    pub offset: Option<String>,
    /// Rows sharing a key form one cluster; without it every row is its own.
    pub cluster: Option<String>,
    /// Adds a constant when there are no fixed-effect factors.
    pub intercept: bool,
    /// Relative deviance change below which iterations stop.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub demean_tolerance: f64,
    pub max_demean_sweeps: usize,
    /// Starting means are `y + start_shift * mean(y)`.
    pub start_shift: f64,
}

impl RegressionSpec {
    pub fn new(outcome: &str) -> Self {
        RegressionSpec {
            outcome: outcome.to_string(),
            regressors: Vec::new(),
            factors: Vec::new(),
            offset: None,
            cluster: None,
            intercept: true,
            tolerance: 1e-9,
            max_iterations: 100,
            demean_tolerance: 1e-10,
            max_demean_sweeps: 10_000,
            start_shift: 0.5,
        }
    }

    pub fn regressors(mut self, cols: &[&str]) -> Self {
        self.regressors = cols.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn factors(mut self, cols: &[&str]) -> Self {
        self.factors = cols.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn offset(mut self, col: &str) -> Self {
        self.offset = Some(col.to_string());
        self
    }

    pub fn cluster(mut self, col: &str) -> Self {
        self.cluster = Some(col.to_string());
        self
    }

    pub fn intercept(mut self, on: bool) -> Self {
        self.intercept = on;
        self
    }
}

#[derive(Debug, Clone)]
pub struct PpmlFit {
    pub spec: RegressionSpec,
    /// Names of the estimated coefficients, in design order.
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub vcov: Vec<Vec<f64>>,
    /// Per factor, level name to value. Factors after the first have their
    /// first level at zero.
    pub fe: IndexMap<String, BTreeMap<String, f64>>,
    pub deviance: f64,
    /// Deviance after each iteration.
    pub deviance_trace: Vec<f64>,
    pub n_iterations: usize,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub drop_report: DropReport,
    /// Regressors removed as collinear with the fixed effects or with
    /// earlier regressors.
    pub dropped_regressors: Vec<String>,
    /// Largest score component relative to its scale; zero at the optimum.
    pub max_score: f64,
    /// Indices of the input rows used in estimation.
    pub rows: Vec<usize>,
    /// Fitted means on `rows`.
    pub fitted: Vec<f64>,
    pub warnings: Vec<String>,
}

impl PpmlFit {
    fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coef(&self, name: &str) -> Option<f64> {
        self.position(name).map(|i| self.beta[i])
    }

    pub fn std_err(&self, name: &str) -> Option<f64> {
        self.position(name).map(|i| self.se[i])
    }

    pub fn fe_value(&self, factor: &str, level: &str) -> Option<f64> {
        self.fe.get(factor)?.get(level).copied()
    }
}

/// Poisson deviance `2 Σ [y ln(y/μ) − (y − μ)]`.
pub fn deviance(y: &[f64], mu: &[f64]) -> f64 {
    2.0 * y
        .iter()
        .zip(mu)
        .map(|(&yi, &mi)| if yi > 0.0 { yi * (yi / mi).ln() - (yi - mi) } else { mi })
        .sum::<f64>()
}

fn finite_column<'a>(frame: &'a Frame, name: &str) -> Result<&'a [f64]> {
    let v = frame.numeric(name)?;
    if let Some(r) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::Spec(format!("column `{name}` has a non-finite value at row {r}")));
    }
    Ok(v)
}

/// Weighted least squares of `z` on the columns of `x`.
fn wls(x: &[Vec<f64>], z: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let p = x.len();
    if p == 0 {
        return Ok(Vec::new());
    }
    let mut a = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    for k in 0..p {
        for l in 0..=k {
            let s: f64 = x[k].iter().zip(&x[l]).zip(w).map(|((a, b), w)| a * b * w).sum();
            a[(k, l)] = s;
            a[(l, k)] = s;
        }
        b[k] = x[k].iter().zip(z).zip(w).map(|((a, b), w)| a * b * w).sum();
    }
    let chol = a.cholesky().ok_or_else(|| Error::Estimation {
        message: "weighted cross-product matrix is not positive definite".into(),
        trace: Vec::new(),
    })?;
    Ok(chol.solve(&b).iter().copied().collect())
}

/// Keeps the columns whose projected variation is not explained by the
/// fixed effects and the columns kept before them.
fn independent_columns(raw: &[Vec<f64>], demeaned: &[Vec<f64>], w: &[f64]) -> Result<Vec<usize>> {
    let mut kept: Vec<usize> = Vec::new();
    for (c, col) in demeaned.iter().enumerate() {
        let raw_ss: f64 = raw[c].iter().zip(w).map(|(x, w)| w * x * x).sum();
        let basis: Vec<Vec<f64>> = kept.iter().map(|&k| demeaned[k].clone()).collect();
        let coef = wls(&basis, col, w)?;
        let resid_ss: f64 = (0..col.len())
            .map(|i| {
                let fit: f64 = basis.iter().zip(&coef).map(|(b, c)| b[i] * c).sum();
                w[i] * (col[i] - fit).powi(2)
            })
            .sum();
        if raw_ss > 0.0 && resid_ss > 1e-9 * raw_ss {
            kept.push(c);
        }
    }
    Ok(kept)
}

/// Fits `E[y] = exp(offset + x'β + Σ fixed effects)` by iteratively
/// reweighted least squares, absorbing the factors by weighted alternating
/// projections at each step.
pub fn fit_ppml(frame: &Frame, spec: &RegressionSpec) -> Result<PpmlFit> {
    let y_all = finite_column(frame, &spec.outcome)?;
    if let Some(r) = y_all.iter().position(|&y| y < 0.0) {
        return Err(Error::Spec(format!("outcome `{}` is negative at row {r}", spec.outcome)));
    }
    for name in &spec.regressors {
        finite_column(frame, name)?;
    }
    if let Some(o) = &spec.offset {
        finite_column(frame, o)?;
    }
    for f in spec.factors.iter().chain(&spec.cluster) {
        frame.keys(f)?;
    }

    let (rows, drop_report) = drop_separated(frame, spec)?;
    let data = frame.select_rows(&rows);
    let n = data.n_rows();
    let y = data.numeric(&spec.outcome)?;
    let y_sum: f64 = y.iter().sum();
    if n == 0 || y_sum <= 0.0 {
        return Err(Error::EmptyModel(format!(
            "outcome `{}` has no positive values in the estimation sample",
            spec.outcome
        )));
    }
    let offset: Vec<f64> = match &spec.offset {
        Some(o) => data.numeric(o)?.to_vec(),
        None => vec![0.0; n],
    };
    let factors = Factors::new(&data, &spec.factors)?;
    let with_intercept = factors.is_empty() && spec.intercept;

    let mut names: Vec<String> = Vec::new();
    let mut raw: Vec<Vec<f64>> = Vec::new();
    if with_intercept {
        names.push(INTERCEPT.into());
        raw.push(vec![1.0; n]);
    }
    for r in &spec.regressors {
        names.push(r.clone());
        raw.push(data.numeric(r)?.to_vec());
    }
    if names.is_empty() && factors.is_empty() {
        return Err(Error::Spec("model has no regressors and no fixed effects".into()));
    }

    let y_mean = y_sum / n as f64;
    let mut mu: Vec<f64> = y.iter().map(|&v| v + spec.start_shift * y_mean).collect();
    let mut eta: Vec<f64> = mu.iter().map(|m| m.ln()).collect();

    let demean_all = |cols: &[Vec<f64>], w: &[f64], parts: &mut [Vec<f64>]| -> Result<Vec<Vec<f64>>> {
        cols.iter()
            .zip(parts.iter_mut())
            .map(|(c, p)| factors.demean(c, w, p, spec.demean_tolerance, spec.max_demean_sweeps))
            .collect()
    };

    let mut warnings = Vec::new();
    let mut x_parts: Vec<Vec<f64>> = vec![vec![0.0; n]; raw.len()];
    let x_start = demean_all(&raw, &mu, &mut x_parts)?;
    let kept = independent_columns(&raw, &x_start, &mu)?;
    let dropped_regressors: Vec<String> = (0..names.len())
        .filter(|c| !kept.contains(c))
        .map(|c| names[c].clone())
        .collect();
    for d in &dropped_regressors {
        warnings.push(format!("regressor `{d}` is collinear with the fixed effects or other regressors and was dropped"));
    }
    let names: Vec<String> = kept.iter().map(|&c| names[c].clone()).collect();
    let raw: Vec<Vec<f64>> = kept.iter().map(|&c| raw[c].clone()).collect();
    let mut x_parts: Vec<Vec<f64>> = kept.iter().map(|&c| x_parts[c].clone()).collect();
    let p = names.len();

    let mut z_part = vec![0.0; n];
    let mut beta = vec![0.0; p];
    let mut dev = deviance(y, &mu);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=spec.max_iterations {
        iterations = iter;
        let z: Vec<f64> = (0..n).map(|i| eta[i] - offset[i] + (y[i] - mu[i]) / mu[i]).collect();
        let z_t = factors.demean(&z, &mu, &mut z_part, spec.demean_tolerance, spec.max_demean_sweeps)?;
        let x_t = demean_all(&raw, &mu, &mut x_parts)?;
        let mut beta_new = wls(&x_t, &z_t, &mu)?;
        let mut eta_new: Vec<f64> = (0..n)
            .map(|i| {
                let fit: f64 = x_t.iter().zip(&beta_new).map(|(c, b)| c[i] * b).sum();
                offset[i] + z[i] - (z_t[i] - fit)
            })
            .collect();
        let mut mu_new: Vec<f64> = eta_new.iter().map(|e| e.exp()).collect();
        let mut dev_new = deviance(y, &mu_new);
        let mut halvings = 0;
        while iter > 1 && !(dev_new <= dev * (1.0 + 1e-12)) && halvings < 40 {
            for (e, old) in eta_new.iter_mut().zip(&eta) {
                *e = 0.5 * (*e + old);
            }
            for (b, old) in beta_new.iter_mut().zip(&beta) {
                *b = 0.5 * (*b + old);
            }
            mu_new = eta_new.iter().map(|e| e.exp()).collect();
            dev_new = deviance(y, &mu_new);
            halvings += 1;
        }
        if !dev_new.is_finite() {
            return Err(Error::Estimation {
                message: "deviance is not finite".into(),
                trace,
            });
        }
        let change = (dev_new - dev).abs() / (dev_new.abs() + 0.1);
        eta = eta_new;
        mu = mu_new;
        beta = beta_new;
        dev = dev_new;
        trace.push(dev);
        if change < spec.tolerance && iter > 1 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Estimation {
            message: format!("no convergence after {} iterations", spec.max_iterations),
            trace,
        });
    }

    // projected regressors at the final weights, for scores and inference
    let x_t = demean_all(&raw, &mu, &mut x_parts)?;
    let mut max_score = 0.0f64;
    for col in &x_t {
        let s: f64 = (0..n).map(|i| (y[i] - mu[i]) * col[i]).sum();
        let scale: f64 = (0..n).map(|i| (y[i] + mu[i]) * col[i].abs()).sum();
        if scale > 0.0 {
            max_score = max_score.max(s.abs() / scale);
        }
    }

    let mut fe = IndexMap::new();
    if !factors.is_empty() {
        let d: Vec<f64> = (0..n)
            .map(|i| eta[i] - offset[i] - (0..p).map(|k| raw[k][i] * beta[k]).sum::<f64>())
            .collect();
        let alpha = factors.recover(&d, 1e-14, 100_000);
        for ((name, levels), values) in factors.names.iter().zip(&factors.levels).zip(alpha) {
            fe.insert(name.clone(), levels.iter().cloned().zip(values).collect());
        }
    }

    let clusters = match &spec.cluster {
        Some(c) => data.keys(c)?,
        None => (0..n).map(|i| i.to_string()).collect(),
    };
    let cov = cluster_se(&x_t, y, &mu, &clusters)?;

    Ok(PpmlFit {
        spec: spec.clone(),
        names,
        beta,
        se: cov.se,
        vcov: cov.vcov,
        fe,
        deviance: dev,
        deviance_trace: trace,
        n_iterations: iterations,
        n_obs: n,
        n_clusters: cov.n_clusters,
        drop_report,
        dropped_regressors,
        max_score,
        rows,
        fitted: mu,
        warnings,
    })
}
