//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use chaingrav::frame::Frame;
use chaingrav::ownership::{EquityEdge, EquityGraph, Firm};
use chaingrav::ppml::RegressionSpec;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

pub fn poisson_deviance(y: &[f64], mu: &[f64]) -> f64 {
    2.0 * y
        .iter()
        .zip(mu)
        .map(|(&a, &m)| if a > 0.0 { a * (a / m).ln() - (a - m) } else { m })
        .sum::<f64>()
}

/// Poisson maximum likelihood by damped Newton steps on a dense design.
pub fn newton_poisson(x: &DMatrix<f64>, y: &[f64], offset: &[f64]) -> (Vec<f64>, f64) {
    let (n, p) = x.shape();
    let yv = DVector::from_column_slice(y);
    let off = DVector::from_column_slice(offset);
    let mut beta = DVector::zeros(p);
    let loglik = |b: &DVector<f64>| -> f64 {
        let eta = x * b + &off;
        (0..n).map(|i| y[i] * eta[i] - eta[i].exp()).sum()
    };
    let mut ll = loglik(&beta);
    for _ in 0..500 {
        let eta = x * &beta + &off;
        let mu = eta.map(f64::exp);
        let grad = x.transpose() * (&yv - &mu);
        let mut h = DMatrix::zeros(p, p);
        for i in 0..n {
            let xi = x.row(i).transpose();
            h += mu[i] * &xi * xi.transpose();
        }
        let step = h.cholesky().expect("information matrix").solve(&grad);
        let mut t = 1.0;
        let mut next = &beta + &step * t;
        let mut ll_next = loglik(&next);
        while ll_next < ll - 1e-12 * ll.abs() && t > 1e-10 {
            t *= 0.5;
            next = &beta + &step * t;
            ll_next = loglik(&next);
        }
        beta = next;
        ll = ll_next;
        if step.amax() * t < 1e-13 {
            break;
        }
    }
    let mu: Vec<f64> = (x * &beta + &off).iter().map(|e| e.exp()).collect();
    (beta.iter().copied().collect(), poisson_deviance(y, &mu))
}

/// A random Poisson regression with up to three factors, every factor level
/// carrying a positive outcome.
pub struct Instance {
    pub frame: Frame,
    pub spec: RegressionSpec,
    /// Regressors followed by dummies: all levels of the first factor (or
    /// a constant without factors), then all but the first level of the others.
    pub dummy_design: DMatrix<f64>,
    pub y: Vec<f64>,
    pub n_regressors: usize,
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_rows: usize, max_factors: usize) -> Instance {
    loop {
        let n = rng.random_range(30..=max_rows);
        let p = rng.random_range(1..=3);
        let nf = rng.random_range(0..=max_factors);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| normal.sample(rng)).collect()).collect();
        let levels: Vec<usize> = (0..nf).map(|_| rng.random_range(2..=6)).collect();
        let ids: Vec<Vec<usize>> = levels.iter().map(|&l| (0..n).map(|_| rng.random_range(0..l)).collect()).collect();
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-0.5..0.5)).collect();
        let alpha: Vec<Vec<f64>> = levels.iter().map(|&l| (0..l).map(|_| 0.5 * normal.sample(rng)).collect()).collect();
        let base = rng.random_range(0.0..1.5);
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let mut eta = base;
                for k in 0..p {
                    eta += beta[k] * xs[k][i];
                }
                for f in 0..nf {
                    eta += alpha[f][ids[f][i]];
                }
                Poisson::new(eta.exp()).unwrap().sample(rng)
            })
            .collect();
        // every level present with a positive total
        let ok = (0..nf).all(|f| {
            (0..levels[f]).all(|g| (0..n).filter(|&i| ids[f][i] == g).map(|i| y[i]).sum::<f64>() > 0.0)
        }) && y.iter().sum::<f64>() > 0.0;
        if !ok {
            continue;
        }
        let mut frame = Frame::new();
        frame.insert_numeric("y", y.clone()).unwrap();
        let names: Vec<String> = (0..p).map(|k| format!("x{k}")).collect();
        for (k, name) in names.iter().enumerate() {
            frame.insert_numeric(name.clone(), xs[k].clone()).unwrap();
        }
        let fnames: Vec<String> = (0..nf).map(|f| format!("f{f}")).collect();
        for (f, name) in fnames.iter().enumerate() {
            frame
                .insert_categorical(name.clone(), ids[f].iter().map(|g| format!("L{g}")).collect())
                .unwrap();
        }
        let mut cols: Vec<Vec<f64>> = xs.clone();
        if nf == 0 {
            cols.push(vec![1.0; n]);
        }
        for f in 0..nf {
            let used: BTreeSet<usize> = ids[f].iter().copied().collect();
            for (pos, &g) in used.iter().enumerate() {
                if f > 0 && pos == 0 {
                    continue;
                }
                cols.push(ids[f].iter().map(|&v| f64::from(v == g)).collect());
            }
        }
        let design = DMatrix::from_fn(n, cols.len(), |i, c| cols[c][i]);
        if design.rank(1e-9) < cols.len() {
            continue;
        }
        let spec = RegressionSpec {
            regressors: names,
            factors: fnames,
            ..RegressionSpec::new("y")
        };
        return Instance {
            frame,
            spec,
            dummy_design: design,
            y,
            n_regressors: p,
        };
    }
}

const COUNTRIES: [&str; 4] = ["US", "DE", "IE", "LU"];

/// Random graph whose incoming shares per target never exceed 100.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> EquityGraph {
    let firms = (0..n)
        .map(|i| Firm {
            id: format!("f{i:02}"),
            country: COUNTRIES[rng.random_range(0..COUNTRIES.len())].parse().unwrap(),
            sector: None,
        })
        .collect();
    let mut edges = Vec::new();
    for t in 0..n {
        let k = rng.random_range(0..4.min(n));
        let mut holders: Vec<usize> = (0..n).filter(|&s| s != t).collect();
        holders.shuffle(rng);
        let mut left = 100.0;
        for &s in holders.iter().take(k) {
            // coarse shares hit the 50 boundary now and then
            let share = (rng.random_range(1..=20) as f64 * 5.0).min(left);
            if share <= 0.0 {
                break;
            }
            left -= share;
            edges.push(EquityEdge {
                shareholder: format!("f{s:02}"),
                target: format!("f{t:02}"),
                share,
            });
        }
    }
    EquityGraph::new(firms, edges)
}

pub fn stake_of(graph: &EquityGraph, holders: &BTreeSet<String>, target: &str) -> f64 {
    graph
        .edges()
        .iter()
        .filter(|e| e.target == target && holders.contains(&e.shareholder))
        .map(|e| e.share)
        .sum()
}

/// Sequential accretion visiting firms in a given order, updating the set
/// as soon as a firm qualifies.
pub struct Accretion<'a> {
    ids: Vec<&'a str>,
    incoming: Vec<Vec<(usize, f64)>>,
}

impl<'a> Accretion<'a> {
    pub fn new(graph: &'a EquityGraph) -> Self {
        let ids: Vec<&str> = graph.firms().iter().map(|f| f.id.as_str()).collect();
        let index: std::collections::HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut incoming = vec![Vec::new(); ids.len()];
        for e in graph.edges() {
            incoming[index[e.target.as_str()]].push((index[e.shareholder.as_str()], e.share));
        }
        Accretion { ids, incoming }
    }

    pub fn position(&self, id: &str) -> usize {
        self.ids.iter().position(|x| *x == id).unwrap()
    }

    /// Firms controlled by `seed`, the seed itself excluded.
    pub fn run(&self, seed: &[usize], order: &[usize]) -> BTreeSet<String> {
        let mut inside = vec![false; self.ids.len()];
        for &s in seed {
            inside[s] = true;
        }
        loop {
            let mut changed = false;
            for &f in order {
                if inside[f] {
                    continue;
                }
                let stake: f64 = self.incoming[f].iter().filter(|(h, _)| inside[*h]).map(|(_, s)| s).sum();
                if stake > 50.0 + 1e-9 {
                    inside[f] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        (0..self.ids.len())
            .filter(|&f| inside[f] && !seed.contains(&f))
            .map(|f| self.ids[f].to_string())
            .collect()
    }
}

pub fn sequential_control(graph: &EquityGraph, seed: &BTreeSet<String>, order: &[String]) -> BTreeSet<String> {
    let acc = Accretion::new(graph);
    let seed: Vec<usize> = seed.iter().map(|s| acc.position(s)).collect();
    let order: Vec<usize> = order.iter().map(|f| acc.position(f)).collect();
    acc.run(&seed, &order)
}
