use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::frame::Frame;

/// Fixed-effect factors of a regression: per factor, the sorted level names
/// and each row's level index.
#[derive(Debug, Clone)]
pub(crate) struct Factors {
    pub names: Vec<String>,
    pub levels: Vec<Vec<String>>,
    pub ids: Vec<Vec<usize>>,
}

impl Factors {
    pub fn new(frame: &Frame, names: &[String]) -> Result<Self> {
        let mut levels = Vec::new();
        let mut ids = Vec::new();
        for name in names {
            let keys = frame.keys(name)?;
            let index: BTreeMap<&str, usize> = keys
                .iter()
                .map(String::as_str)
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .enumerate()
                .map(|(i, k)| (k, i))
                .collect();
            ids.push(keys.iter().map(|k| index[k.as_str()]).collect());
            levels.push(index.keys().map(|k| k.to_string()).collect());
        }
        Ok(Factors {
            names: names.to_vec(),
            levels,
            ids,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Residual of `x` after weighted projection on the span of the factor
    /// dummies, by alternating projections. `fe_part` holds the projection
    /// from an earlier call and serves as the starting point; it is updated
    /// in place.
    pub fn demean(&self, x: &[f64], w: &[f64], fe_part: &mut [f64], tol: f64, max_sweeps: usize) -> Result<Vec<f64>> {
        let mut r: Vec<f64> = x.iter().zip(fe_part.iter()).map(|(a, b)| a - b).collect();
        if self.is_empty() {
            return Ok(r);
        }
        let wsum: Vec<Vec<f64>> = self
            .ids
            .iter()
            .zip(&self.levels)
            .map(|(ids, lv)| {
                let mut s = vec![0.0; lv.len()];
                for (&g, &wi) in ids.iter().zip(w) {
                    s[g] += wi;
                }
                s
            })
            .collect();
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut converged = false;
        for sweep in 0..max_sweeps {
            let mut largest = 0.0f64;
            for ((ids, lv), ws) in self.ids.iter().zip(&self.levels).zip(&wsum) {
                let mut s = vec![0.0; lv.len()];
                for ((&g, &wi), &ri) in ids.iter().zip(w).zip(&r) {
                    s[g] += wi * ri;
                }
                for (sg, wg) in s.iter_mut().zip(ws) {
                    *sg = if *wg > 0.0 { *sg / wg } else { 0.0 };
                    largest = largest.max(sg.abs());
                }
                for (ri, &g) in r.iter_mut().zip(ids) {
                    *ri -= s[g];
                }
            }
            // one factor is exact after a single sweep
            if (self.names.len() == 1 && sweep == 0) || largest <= tol * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Estimation {
                message: format!("fixed-effect projection did not converge in {max_sweeps} sweeps"),
                trace: Vec::new(),
            });
        }
        for ((f, xi), ri) in fe_part.iter_mut().zip(x).zip(&r) {
            *f = xi - ri;
        }
        Ok(r)
    }

    /// Splits `d`, a vector lying in the span of the factor dummies, into
    /// per-factor level values. Factors after the first are normalized so
    /// their first level is zero.
    pub fn recover(&self, d: &[f64], tol: f64, max_sweeps: usize) -> Vec<Vec<f64>> {
        let mut alpha: Vec<Vec<f64>> = self.levels.iter().map(|l| vec![0.0; l.len()]).collect();
        let counts: Vec<Vec<f64>> = self
            .ids
            .iter()
            .zip(&self.levels)
            .map(|(ids, lv)| {
                let mut c = vec![0.0; lv.len()];
                for &g in ids {
                    c[g] += 1.0;
                }
                c
            })
            .collect();
        let mut r = d.to_vec();
        let scale = d.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for sweep in 0..max_sweeps {
            let mut largest = 0.0f64;
            for f in 0..self.names.len() {
                let mut s = vec![0.0; self.levels[f].len()];
                for (&g, &ri) in self.ids[f].iter().zip(&r) {
                    s[g] += ri;
                }
                for (sg, cg) in s.iter_mut().zip(&counts[f]) {
                    *sg /= cg;
                    largest = largest.max(sg.abs());
                }
                for (ri, &g) in r.iter_mut().zip(&self.ids[f]) {
                    *ri -= s[g];
                }
                for (a, sg) in alpha[f].iter_mut().zip(&s) {
                    *a += sg;
                }
            }
            if (self.names.len() == 1 && sweep == 0) || largest <= tol * scale {
                break;
            }
        }
        if let Some((first, rest)) = alpha.split_first_mut() {
            for a in rest {
                let base = a[0];
                for v in a.iter_mut() {
                    *v -= base;
                }
                for v in first.iter_mut() {
                    *v += base;
                }
            }
        }
        alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_way() -> (Frame, Factors) {
        let mut f = Frame::new();
        let a = ["x", "x", "y", "y", "z", "z"];
        let b = ["p", "q", "p", "q", "p", "q"];
        f.insert_categorical("a", a.iter().map(|s| s.to_string()).collect()).unwrap();
        f.insert_categorical("b", b.iter().map(|s| s.to_string()).collect()).unwrap();
        let fac = Factors::new(&f, &["a".into(), "b".into()]).unwrap();
        (f, fac)
    }

    #[test]
    fn demeaned_vector_is_orthogonal_to_dummies() {
        let (_, fac) = two_way();
        let x = [1.0, 4.0, 2.0, 8.0, -3.0, 0.5];
        let w = [1.0, 2.0, 0.5, 1.5, 3.0, 1.0];
        let mut fe = vec![0.0; 6];
        let r = fac.demean(&x, &w, &mut fe, 1e-13, 10_000).unwrap();
        for (ids, lv) in fac.ids.iter().zip(&fac.levels) {
            for g in 0..lv.len() {
                let s: f64 = (0..6).filter(|&i| ids[i] == g).map(|i| w[i] * r[i]).sum();
                assert!(s.abs() < 1e-10);
            }
        }
        // warm start from the converged projection changes nothing
        let again = fac.demean(&x, &w, &mut fe, 1e-13, 10_000).unwrap();
        for (a, b) in r.iter().zip(&again) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn recover_additive_effects() {
        let (_, fac) = two_way();
        let alpha_a = [1.0, -2.0, 0.5];
        let alpha_b = [0.0, 3.0];
        let d: Vec<f64> = (0..6).map(|i| alpha_a[fac.ids[0][i]] + alpha_b[fac.ids[1][i]]).collect();
        let got = fac.recover(&d, 1e-14, 100_000);
        for (g, w) in got[0].iter().zip(alpha_a) {
            assert!((g - w).abs() < 1e-10);
        }
        for (g, w) in got[1].iter().zip(alpha_b) {
            assert!((g - w).abs() < 1e-10);
        }
    }
}
