use super::{PpmlFit, INTERCEPT};
use crate::error::{Error, Result};
use crate::frame::Frame;

/// Treatment of fixed-effect levels absent from the fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LevelPolicy {
    /// Unseen levels are an error.
    #[default]
    Strict,
    /// Unseen levels, and factor columns missing from the rows, contribute 0.
    ReferenceZero,
}

/// Predicted means `exp(offset + x'β + Σ fixed effects)` for new rows.
pub fn predict(fit: &PpmlFit, rows: &Frame, policy: LevelPolicy) -> Result<Vec<f64>> {
    let n = rows.n_rows();
    let mut eta = match &fit.spec.offset {
        Some(o) => rows
            .numeric(o)
            .map_err(|e| Error::Prediction(e.to_string()))?
            .to_vec(),
        None => vec![0.0; n],
    };
    for (name, b) in fit.names.iter().zip(&fit.beta) {
        if name == INTERCEPT {
            eta.iter_mut().for_each(|e| *e += b);
            continue;
        }
        let x = rows.numeric(name).map_err(|e| Error::Prediction(e.to_string()))?;
        for (e, xi) in eta.iter_mut().zip(x) {
            *e += b * xi;
        }
    }
    for (factor, values) in &fit.fe {
        let keys = match rows.keys(factor) {
            Ok(k) => k,
            Err(_) if policy == LevelPolicy::ReferenceZero => continue,
            Err(e) => return Err(Error::Prediction(e.to_string())),
        };
        for (e, k) in eta.iter_mut().zip(&keys) {
            match values.get(k) {
                Some(v) => *e += v,
                None if policy == LevelPolicy::ReferenceZero => {}
                None => {
                    return Err(Error::Prediction(format!(
                        "level `{k}` of factor `{factor}` was not estimated"
                    )))
                }
            }
        }
    }
    Ok(eta.into_iter().map(f64::exp).collect())
}
