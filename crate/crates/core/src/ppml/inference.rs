use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredCovariance {
    pub vcov: Vec<Vec<f64>>,
    pub se: Vec<f64>,
    pub n_clusters: usize,
}

/// Cluster-robust sandwich `A⁻¹ B A⁻¹ · G/(G−1)` with `A = Σ μ x̃x̃'` and
/// `B = Σ_g s_g s_g'`, `s_g = Σ_{i∈g} (y − μ) x̃`. `x_t` holds the
/// regressors after projection on the fixed effects, one vector per column.
pub fn cluster_se(x_t: &[Vec<f64>], y: &[f64], mu: &[f64], clusters: &[String]) -> Result<ClusteredCovariance> {
    let p = x_t.len();
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for c in clusters {
        let next = ids.len();
        ids.entry(c.as_str()).or_insert(next);
    }
    let g = ids.len();
    if g < 2 {
        return Err(Error::Inference(format!(
            "clustered covariance needs at least two clusters, found {g}"
        )));
    }
    if p == 0 {
        return Ok(ClusteredCovariance {
            vcov: Vec::new(),
            se: Vec::new(),
            n_clusters: g,
        });
    }
    let mut a = DMatrix::<f64>::zeros(p, p);
    let mut scores = vec![DVector::<f64>::zeros(p); g];
    for i in 0..y.len() {
        let xi = DVector::from_iterator(p, x_t.iter().map(|c| c[i]));
        a.ger(mu[i], &xi, &xi, 1.0);
        scores[ids[clusters[i].as_str()]].axpy(y[i] - mu[i], &xi, 1.0);
    }
    let mut b = DMatrix::<f64>::zeros(p, p);
    for s in &scores {
        b.ger(1.0, s, s, 1.0);
    }
    let a_inv = a.try_inverse().ok_or_else(|| Error::Inference("information matrix is singular".into()))?;
    let v = &a_inv * b * &a_inv * (g as f64 / (g as f64 - 1.0));
    let vcov: Vec<Vec<f64>> = (0..p).map(|r| (0..p).map(|c| 0.5 * (v[(r, c)] + v[(c, r)])).collect()).collect();
    let se = (0..p).map(|k| vcov[k][k].max(0.0).sqrt()).collect();
    Ok(ClusteredCovariance { vcov, se, n_clusters: g })
}
