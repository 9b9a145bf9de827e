use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gumbel};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::world::{generate_world, World, WorldConfig};
use crate::error::{Error, Result};
use crate::numfmt::{fmt_sig, round_sig};
use crate::ownership::{EquityEdge, EquityGraph, Firm};
use crate::tabular::CsvOut;

/// One auctioned target: the winning parent, its middleman country and the
/// destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRecord {
    pub parent_id: String,
    pub final_id: String,
    pub i: usize,
    pub k: usize,
    pub j: usize,
}

/// Parameters the estimation pipeline should recover.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    /// Coefficient on `wh_ik` in the triangular count model.
    pub beta_wh: f64,
    /// Coefficient on `wh_kj`.
    pub rho_wh: f64,
    pub beta_log_dist: f64,
    pub rho_log_dist: f64,
    pub theta: f64,
    pub cost: Vec<Vec<f64>>,
    pub s_j: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub world: World,
    pub records: Vec<SimRecord>,
    pub truth: Truth,
}

pub fn parent_id(world: &World, i: usize, n: u32) -> String {
    format!("P-{}-{:03}", world.countries[i], n)
}

fn simulate_destination(world: &World, j: usize) -> Result<Vec<SimRecord>> {
    let cfg = &world.config;
    let a = &world.auction;
    let k = world.countries.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(j as u64 + 1);
    let noise = Gumbel::new(0.0, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let penalty: Vec<f64> = (0..k).map(|i| 2.0 * (a.b * world.cost[i][j]).sqrt()).collect();
    let mut out = Vec::with_capacity(cfg.targets_per_destination as usize);
    for t in 0..cfg.targets_per_destination {
        // Best parent of country i: Gumbel(μ_i + σ ln m_i, σ).
        let mut winner = 0;
        let mut best = f64::NEG_INFINITY;
        for i in 0..k {
            let loc = a.mu[i] + a.sigma * f64::from(a.m[i]).ln();
            let v = loc + a.sigma * noise.sample(&mut rng) + a.b - penalty[i];
            if v > best {
                best = v;
                winner = i;
            }
        }
        let n = rng.random_range(0..a.m[winner]);
        let mut mid = 0;
        let mut low = f64::INFINITY;
        for l in 0..k {
            let v = world.delegation[winner][l] + world.monitoring[l][j] - noise.sample(&mut rng);
            if v < low {
                low = v;
                mid = l;
            }
        }
        out.push(SimRecord {
            parent_id: parent_id(world, winner, n),
            final_id: format!("F-{}-{:05}", world.countries[j], t),
            i: winner,
            k: mid,
            j,
        });
    }
    Ok(out)
}

/// Runs the auction and middleman choice for every target of every
/// destination. Destinations draw from separate streams of the seed, so the
/// result does not depend on the thread count.
pub fn simulate_world(config: &WorldConfig) -> Result<SimOutput> {
    let world = generate_world(config)?;
    let per_j: Vec<Vec<SimRecord>> = (0..world.countries.len())
        .into_par_iter()
        .map(|j| simulate_destination(&world, j))
        .collect::<Result<_>>()?;
    let truth = Truth {
        beta_wh: config.delegation_wh,
        rho_wh: config.monitoring_wh,
        beta_log_dist: -config.delegation_log_dist,
        rho_log_dist: -config.monitoring_log_dist,
        theta: world.auction.theta(),
        cost: world.cost.clone(),
        s_j: world.s_j(),
    };
    Ok(SimOutput {
        records: per_j.into_iter().flatten().collect(),
        world,
        truth,
    })
}

impl SimOutput {
    /// Parent → middleman → final subsidiary, every link 100%. A parent
    /// owns one middleman per middleman country it uses.
    pub fn equity_graph(&self) -> EquityGraph {
        let c = &self.world.countries;
        let mut firms = std::collections::BTreeMap::new();
        let mut edges = std::collections::BTreeSet::new();
        for r in &self.records {
            let mid = format!("M-{}-{}", &r.parent_id[2..], c[r.k]);
            firms.insert(r.parent_id.clone(), c[r.i]);
            firms.insert(mid.clone(), c[r.k]);
            firms.insert(r.final_id.clone(), c[r.j]);
            edges.insert((r.parent_id.clone(), mid.clone()));
            edges.insert((mid, r.final_id.clone()));
        }
        EquityGraph::new(
            firms
                .into_iter()
                .map(|(id, country)| Firm { id, country, sector: None })
                .collect(),
            edges
                .into_iter()
                .map(|(shareholder, target)| EquityEdge {
                    shareholder,
                    target,
                    share: 100.0,
                })
                .collect(),
        )
    }

    pub fn write_chains<W: Write>(&self, writer: W) -> Result<W> {
        let c = &self.world.countries;
        let mut out = CsvOut::new(writer, "sim_chains.csv");
        out.row(["parent_id", "iso_i", "iso_k", "iso_j"])?;
        for r in &self.records {
            out.row([r.parent_id.as_str(), c[r.i].as_str(), c[r.k].as_str(), c[r.j].as_str()])?;
        }
        out.finish()
    }

    pub fn truth_json(&self) -> Value {
        let c = &self.world.countries;
        let t = &self.truth;
        let mut cost = Vec::new();
        for (i, row) in t.cost.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                cost.push(json!({"iso_i": c[i].as_str(), "iso_j": c[j].as_str(), "c": round_sig(*v)}));
            }
        }
        let s_j: Vec<Value> = c
            .iter()
            .zip(&t.s_j)
            .map(|(iso, s)| json!({"iso_j": iso.as_str(), "s_j": round_sig(*s)}))
            .collect();
        json!({
            "config": serde_json::to_value(&self.world.config).unwrap_or(Value::Null),
            "beta": {"wh_ik": round_sig(t.beta_wh), "log_dist_ik": round_sig(t.beta_log_dist)},
            "rho": {"wh_kj": round_sig(t.rho_wh), "log_dist_kj": round_sig(t.rho_log_dist)},
            "theta": round_sig(t.theta),
            "n_records": self.records.len(),
            "n_floored_costs": self.world.n_floored,
            "cost": cost,
            "s_j": s_j,
        })
    }

    pub fn write_countries<W: Write>(&self, writer: W) -> Result<W> {
        let mut out = CsvOut::new(writer, "countries.csv");
        out.row(["iso2", "utc_offset", "profit_tax", "labour_cost"])?;
        for r in self.world.country_records() {
            out.row([r.iso2.as_str().to_string(), fmt_sig(r.utc_offset), String::new(), String::new()])?;
        }
        out.finish()
    }

    pub fn write_dyads<W: Write>(&self, writer: W) -> Result<W> {
        let mut out = CsvOut::new(writer, "dyads.csv");
        out.row(["iso_o", "iso_d", "dist_km", "contig", "comlang", "colony", "legal", "rta", "cli_index"])?;
        for d in self.world.dyad_records() {
            let mut row = vec![d.iso_o.as_str().to_string(), d.iso_d.as_str().to_string(), fmt_sig(d.dist_km)];
            row.extend(std::iter::repeat_n(String::new(), 6));
            out.row(row)?;
        }
        out.finish()
    }

    pub fn write_graph<F: Write, E: Write>(&self, firms: F, edges: E) -> Result<(F, E)> {
        let g = self.equity_graph();
        let mut f = CsvOut::new(firms, "firms.csv");
        f.row(["firm_id", "country", "sector"])?;
        for firm in g.firms() {
            f.row([firm.id.as_str(), firm.country.as_str(), ""])?;
        }
        let mut e = CsvOut::new(edges, "edges.csv");
        e.row(["shareholder_id", "target_id", "share_pct"])?;
        for edge in g.edges() {
            e.row([edge.shareholder.as_str(), edge.target.as_str(), &fmt_sig(edge.share)])?;
        }
        Ok((f.finish()?, e.finish()?))
    }
}
