//! Simulate a world, count its chains and run the two-step estimation,
//! then compare the estimates with the parameters that generated the data.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use crate::chains::{count_dyadic, count_triadic, Attribution, DyadMode};
use crate::error::{Error, Result};
use crate::frictions::{build_dyad_table, build_triad_design, Control, TriadDesignOptions};
use crate::iso::Iso2;
use crate::numfmt::round_sig;
use crate::ownership::{ultimate_parents, IdentifyOptions};
use crate::ppml::{fit_bilateral, fit_ppml, recover_cij, BilateralFit, CostTable, Normalization, PpmlFit, RegressionSpec};
use crate::structural::SimOutput;

/// Count model `M_ikj` with offset `ln M_ij`, a dyad factor and dyad
/// clusters.
pub fn triangular_spec(regressors: &[&str]) -> RegressionSpec {
    RegressionSpec::new("m_ikj")
        .regressors(regressors)
        .factors(&["ij"])
        .offset("log_m_ij")
        .cluster("ij")
}

pub const RECOVERY_REGRESSORS: [&str; 4] = ["wh_ik", "wh_kj", "log_dist_ik", "log_dist_kj"];

#[derive(Debug, Clone, Copy, Default)]
pub struct RecoveryOptions {
    pub attribution: Attribution,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientCheck {
    pub name: String,
    pub truth: f64,
    pub estimate: f64,
    pub se: f64,
}

impl CoefficientCheck {
    pub fn z(&self) -> f64 {
        (self.estimate - self.truth) / self.se
    }

    pub fn within(&self, n_se: f64) -> bool {
        (self.estimate - self.truth).abs() <= n_se * self.se
    }
}

/// Fit of `C = intercept + slope · Ĉ` over the recovered dyads.
#[derive(Debug, Clone, PartialEq)]
pub struct CostAlignment {
    pub n_dyads: usize,
    pub corr: f64,
    pub slope: f64,
    pub intercept: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone)]
pub struct RecoveryReport {
    pub seed: u64,
    pub n_records: usize,
    pub n_networks: usize,
    pub n_triad_rows: usize,
    pub coefficients: Vec<CoefficientCheck>,
    pub alignment: CostAlignment,
    pub theta_true: f64,
    pub theta_hat: f64,
    pub theta_se: f64,
    /// Coefficient on `√Ĉ` in the second step.
    pub sqrt_cost_coef: f64,
    pub triangular: PpmlFit,
    pub costs: CostTable,
    pub bilateral: BilateralFit,
}

impl RecoveryReport {
    pub fn coefficient(&self, name: &str) -> Option<&CoefficientCheck> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn theta_ratio(&self) -> f64 {
        self.theta_hat / self.theta_true
    }

    pub fn to_json(&self) -> Value {
        let coefs: Vec<Value> = self
            .coefficients
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "truth": round_sig(c.truth),
                    "estimate": round_sig(c.estimate),
                    "se": round_sig(c.se),
                    "z": round_sig(c.z()),
                    "within_2se": c.within(2.0),
                })
            })
            .collect();
        let a = &self.alignment;
        json!({
            "seed": self.seed,
            "n_records": self.n_records,
            "n_networks": self.n_networks,
            "n_triad_rows": self.n_triad_rows,
            "triangular": {
                "coefficients": coefs,
                "n_obs": self.triangular.n_obs,
                "n_clusters": self.triangular.n_clusters,
                "n_iterations": self.triangular.n_iterations,
                "deviance": round_sig(self.triangular.deviance),
            },
            "cost_alignment": {
                "normalization": self.costs.normalization.tag(),
                "n_dyads": a.n_dyads,
                "corr": round_sig(a.corr),
                "slope": round_sig(a.slope),
                "intercept": round_sig(a.intercept),
                "rmse": round_sig(a.rmse),
            },
            "bilateral": {
                "theta_true": round_sig(self.theta_true),
                "theta_hat": round_sig(self.theta_hat),
                "theta_se": round_sig(self.theta_se),
                "theta_ratio": round_sig(self.theta_ratio()),
                "sqrt_c_hat_coef": round_sig(self.sqrt_cost_coef),
                "n_obs": self.bilateral.fit.n_obs,
            },
        })
    }
}

fn align(pairs: &[(f64, f64)]) -> CostAlignment {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pairs.iter().map(|&(x, y)| (y - intercept - slope * x).powi(2)).sum();
    CostAlignment {
        n_dyads: pairs.len(),
        corr: sxy / (sxx * syy).sqrt(),
        slope,
        intercept,
        rmse: (sse / n).sqrt(),
    }
}

pub fn recover(sim: &SimOutput, opts: &RecoveryOptions) -> Result<RecoveryReport> {
    let world = &sim.world;
    let graph = sim.equity_graph();
    let networks = ultimate_parents(&graph, &IdentifyOptions::default())?;
    let triads = count_triadic(&networks, &graph, opts.attribution)?;
    let bilateral_counts = count_dyadic(&networks, &graph, DyadMode::FinalAll)?;
    let table = build_dyad_table(&world.country_records(), &world.dyad_records(), world.config.workday)?;
    let candidates: BTreeSet<Iso2> = world.countries.iter().copied().collect();
    let design = build_triad_design(
        &triads,
        &table,
        &candidates,
        &TriadDesignOptions {
            controls: vec![Control::LogDist],
            ..Default::default()
        },
    )?;
    let triangular = fit_ppml(&design.frame, &triangular_spec(&RECOVERY_REGRESSORS))?;

    let t = &sim.truth;
    let truths = [t.beta_wh, t.rho_wh, t.beta_log_dist, t.rho_log_dist];
    let mut coefficients = Vec::new();
    for (name, truth) in RECOVERY_REGRESSORS.iter().zip(truths) {
        let (Some(estimate), Some(se)) = (triangular.coef(name), triangular.std_err(name)) else {
            return Err(Error::Estimation {
                message: format!("regressor {name} was dropped from the triangular fit"),
                trace: triangular.deviance_trace.clone(),
            });
        };
        coefficients.push(CoefficientCheck {
            name: name.to_string(),
            truth,
            estimate,
            se,
        });
    }

    let costs = recover_cij(&triangular, "ij", opts.normalization)?;
    let index = |iso: &Iso2| world.countries.iter().position(|c| c == iso).expect("simulated country");
    let pairs: Vec<(f64, f64)> = costs
        .values
        .iter()
        .map(|((i, j), &c_hat)| (c_hat, t.cost[index(i)][index(j)]))
        .collect();
    let alignment = align(&pairs);

    let bilateral = fit_bilateral(&bilateral_counts, &costs)?;
    let (Some(theta_hat), Some(theta_se)) = (bilateral.theta, bilateral.theta_se) else {
        return Err(Error::Estimation {
            message: "the square-root cost was dropped from the bilateral fit".into(),
            trace: bilateral.fit.deviance_trace.clone(),
        });
    };
    Ok(RecoveryReport {
        seed: world.config.seed,
        n_records: sim.records.len(),
        n_networks: networks.len(),
        n_triad_rows: design.frame.n_rows(),
        coefficients,
        alignment,
        theta_true: t.theta,
        theta_hat,
        theta_se,
        sqrt_cost_coef: -theta_hat,
        triangular,
        costs,
        bilateral,
    })
}
