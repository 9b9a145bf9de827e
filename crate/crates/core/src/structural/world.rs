use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::choice::{multilateral_cost, AuctionConfig};
use crate::error::{Error, Result};
use crate::frictions::{overlap_hours, CountryRecord, DyadRecord, MAX_UTC_OFFSET, MIN_UTC_OFFSET};
use crate::iso::Iso2;

const EARTH_RADIUS_KM: f64 = 6371.0;

/// Parameters of a synthetic world. Read from a flat TOML file; every key
/// is optional and falls back to the default shown by `WorldConfig::default`.
///
/// Delegation and monitoring costs are
/// `δ = max(0, const − wh_coef · wh + log_dist_coef · ln dist)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub n_countries: usize,
    pub seed: u64,
    pub targets_per_destination: u32,
    pub b: f64,
    pub sigma: f64,
    pub parents_min: u32,
    pub parents_max: u32,
    /// Standard deviation of the country valuation locations μ_i.
    pub mu_sd: f64,
    pub workday: f64,
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
    pub min_distance_km: f64,
    pub internal_distance_min_km: f64,
    pub internal_distance_max_km: f64,
    pub delegation_const: f64,
    pub delegation_wh: f64,
    pub delegation_log_dist: f64,
    pub monitoring_const: f64,
    pub monitoring_wh: f64,
    pub monitoring_log_dist: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            n_countries: 15,
            seed: 7,
            targets_per_destination: 2000,
            b: 1.0,
            sigma: 2.0,
            parents_min: 50,
            parents_max: 200,
            mu_sd: 0.5,
            workday: 10.0,
            lon_min: -170.0,
            lon_max: 170.0,
            lat_min: -45.0,
            lat_max: 60.0,
            min_distance_km: 100.0,
            internal_distance_min_km: 1.5,
            internal_distance_max_km: 1.8,
            delegation_const: 0.4,
            delegation_wh: 0.05,
            delegation_log_dist: 0.3,
            monitoring_const: 0.8,
            monitoring_wh: 0.10,
            monitoring_log_dist: 0.5,
        }
    }
}

impl WorldConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: WorldConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(1..=26 * 26).contains(&self.n_countries) {
            return bad("n_countries must lie in 1..=676");
        }
        if self.targets_per_destination == 0 {
            return bad("targets_per_destination must be positive");
        }
        if self.parents_min == 0 || self.parents_min > self.parents_max {
            return bad("need 1 <= parents_min <= parents_max");
        }
        if !(self.sigma > 0.0) || !(self.b >= 0.0) || !(self.mu_sd >= 0.0) {
            return bad("need sigma > 0, b >= 0, mu_sd >= 0");
        }
        if !(self.workday > 0.0 && self.workday <= 24.0) {
            return bad("workday must lie in (0, 24]");
        }
        if !(self.lon_min <= self.lon_max && self.lat_min <= self.lat_max)
            || self.lat_min < -90.0
            || self.lat_max > 90.0
        {
            return bad("invalid longitude or latitude range");
        }
        if !(self.internal_distance_min_km > 0.0 && self.internal_distance_min_km <= self.internal_distance_max_km) {
            return bad("need 0 < internal_distance_min_km <= internal_distance_max_km");
        }
        if !(self.min_distance_km > 0.0) {
            return bad("min_distance_km must be positive");
        }
        Ok(())
    }
}

/// Synthetic code for the `n`-th country: `AA`, `AB`, ...
pub fn synthetic_iso(n: usize) -> Iso2 {
    let s = format!("{}{}", (b'A' + (n / 26) as u8) as char, (b'A' + (n % 26) as u8) as char);
    s.parse().expect("two uppercase letters")
}

/// Geography, costs and auction parameters drawn from a `WorldConfig`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct World {
    pub config: WorldConfig,
    pub countries: Vec<Iso2>,
    pub utc_offset: Vec<f64>,
    /// Symmetric distances in km; the diagonal holds internal distances.
    pub dist_km: Vec<Vec<f64>>,
    pub wh: Vec<Vec<f64>>,
    /// δ_ik indexed `[i][k]`.
    pub delegation: Vec<Vec<f64>>,
    /// δ_kj indexed `[k][j]`.
    pub monitoring: Vec<Vec<f64>>,
    /// C_ij indexed `[i][j]`.
    pub cost: Vec<Vec<f64>>,
    pub auction: AuctionConfig,
    /// Cost cells where the `max(0, ·)` floor was active.
    pub n_floored: usize,
}

fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let h = ((p2 - p1) / 2.0).sin().powi(2) + p1.cos() * p2.cos() * ((lon2 - lon1).to_radians() / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().asin()
}

pub fn generate_world(config: &WorldConfig) -> Result<World> {
    config.validate()?;
    let k = config.n_countries;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lon: Vec<f64> = (0..k).map(|_| rng.random_range(config.lon_min..=config.lon_max)).collect();
    let lat: Vec<f64> = (0..k).map(|_| rng.random_range(config.lat_min..=config.lat_max)).collect();
    let utc_offset: Vec<f64> = lon
        .iter()
        .map(|l| ((l / 15.0 * 2.0).round() / 2.0).clamp(MIN_UTC_OFFSET, MAX_UTC_OFFSET))
        .collect();
    let mut dist_km = vec![vec![0.0; k]; k];
    for a in 0..k {
        dist_km[a][a] = rng.random_range(config.internal_distance_min_km..=config.internal_distance_max_km);
        for c in a + 1..k {
            let d = haversine(lat[a], lon[a], lat[c], lon[c]).max(config.min_distance_km);
            dist_km[a][c] = d;
            dist_km[c][a] = d;
        }
    }
    let mut wh = vec![vec![0.0; k]; k];
    for a in 0..k {
        for c in 0..k {
            wh[a][c] = overlap_hours(utc_offset[a], utc_offset[c], config.workday)?;
        }
    }
    let mut n_floored = 0;
    let mut delta = |c0: f64, c_wh: f64, c_ld: f64| -> Vec<Vec<f64>> {
        (0..k)
            .map(|a| {
                (0..k)
                    .map(|c| {
                        let v = c0 - c_wh * wh[a][c] + c_ld * dist_km[a][c].ln();
                        if v < 0.0 {
                            n_floored += 1;
                        }
                        v.max(0.0)
                    })
                    .collect()
            })
            .collect()
    };
    let delegation = delta(config.delegation_const, config.delegation_wh, config.delegation_log_dist);
    let monitoring = delta(config.monitoring_const, config.monitoring_wh, config.monitoring_log_dist);

    let mut cost = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let col: Vec<f64> = (0..k).map(|l| monitoring[l][j]).collect();
            let c = multilateral_cost(&delegation[i], &col)?;
            if !(c > 0.0) {
                return Err(Error::Config(format!(
                    "multilateral cost of {}-{} is {c}; raise the cost constants",
                    synthetic_iso(i),
                    synthetic_iso(j)
                )));
            }
            cost[i][j] = c;
        }
    }

    let m: Vec<u32> = (0..k).map(|_| rng.random_range(config.parents_min..=config.parents_max)).collect();
    let normal = Normal::new(0.0, config.mu_sd).map_err(|e| Error::Config(e.to_string()))?;
    let mu: Vec<f64> = (0..k).map(|_| normal.sample(&mut rng)).collect();

    Ok(World {
        config: config.clone(),
        countries: (0..k).map(synthetic_iso).collect(),
        utc_offset,
        dist_km,
        wh,
        delegation,
        monitoring,
        cost,
        auction: AuctionConfig {
            m,
            mu,
            sigma: config.sigma,
            b: config.b,
        },
        n_floored,
    })
}

impl World {
    pub fn country_records(&self) -> Vec<CountryRecord> {
        self.countries
            .iter()
            .zip(&self.utc_offset)
            .map(|(&iso2, &utc_offset)| CountryRecord {
                iso2,
                utc_offset,
                profit_tax: None,
                labour_cost: None,
            })
            .collect()
    }

    /// Every ordered pair, home pairs included.
    pub fn dyad_records(&self) -> Vec<DyadRecord> {
        let mut out = Vec::new();
        for (a, &o) in self.countries.iter().enumerate() {
            for (c, &d) in self.countries.iter().enumerate() {
                out.push(DyadRecord {
                    iso_o: o,
                    iso_d: d,
                    dist_km: self.dist_km[a][c],
                    contig: None,
                    comlang: None,
                    colony: None,
                    legal: None,
                    rta: None,
                    cli_index: None,
                });
            }
        }
        out
    }

    /// `S_j = Σ_n (m_n / Σ m) exp(−2√(b C_nj)/σ + μ_n/σ)`.
    pub fn s_j(&self) -> Vec<f64> {
        let k = self.countries.len();
        let total: f64 = self.auction.m.iter().map(|&m| f64::from(m)).sum();
        (0..k)
            .map(|j| {
                (0..k)
                    .map(|n| {
                        let a = &self.auction;
                        f64::from(a.m[n]) / total
                            * (-2.0 * (a.b * self.cost[n][j]).sqrt() / a.sigma + a.mu[n] / a.sigma).exp()
                    })
                    .sum()
            })
            .collect()
    }
}
