use serde::Serialize;

use crate::error::{Error, Result};

/// Inspection-game primitives: standalone value `a`, subsidiary value `b`,
/// wage `w`, effort cost `e` and monitoring cost `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameParams {
    pub a: f64,
    pub b: f64,
    pub w: f64,
    pub e: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    /// Probability the subsidiary works.
    pub x_star: f64,
    /// Probability the parent trusts.
    pub q_star: f64,
    pub w_star: f64,
    /// Parent's value of the subsidiary at the optimal wage.
    pub v: f64,
}

/// Expected payoffs against mixed strategies: the parent's under Trust and
/// Monitor when the subsidiary works with probability `x`, and the
/// subsidiary's under Work and Shirk when the parent trusts with
/// probability `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedPayoffs {
    pub trust: f64,
    pub monitor: f64,
    pub work: f64,
    pub shirk: f64,
}

pub fn expected_payoffs(p: &GameParams, x: f64, q: f64) -> ExpectedPayoffs {
    let GameParams { a, b, w, e, c } = *p;
    ExpectedPayoffs {
        trust: x * (a + b - w) + (1.0 - x) * (a - w),
        monitor: x * (a + b - w - c) + (1.0 - x) * (a - c),
        work: q * (w - e) + (1.0 - q) * (w - e),
        shirk: q * w,
    }
}

fn require(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Parameter(format!("violated {what}")))
    }
}

/// Mixed-strategy equilibrium with the wage chosen by the parent:
/// `w* = √(bc)`, `x* = 1 − c/w*`, `q* = 1 − e/w*`, `v = a + b − 2√(bc)`.
/// Costless monitoring (`c = 0`, hence `e = 0`) gives `x* = q* = 1`.
pub fn equilibrium(a: f64, b: f64, e: f64, c: f64) -> Result<Equilibrium> {
    require([a, b, e, c].iter().all(|v| v.is_finite()), "finite parameters")?;
    require(b >= e, "b >= e")?;
    require(e >= c, "e >= c")?;
    require(c >= 0.0, "c >= 0")?;
    let w = (b * c).sqrt();
    require(w >= e, "sqrt(b c) >= e")?;
    require(w <= b, "sqrt(b c) <= b")?;
    let (x_star, q_star) = if w > 0.0 { (1.0 - c / w, 1.0 - e / w) } else { (1.0, 1.0) };
    Ok(Equilibrium {
        x_star,
        q_star,
        w_star: w,
        v: a + b - 2.0 * w,
    })
}

/// Value `a + b − 2√(b C)` once the bilateral monitoring cost is replaced
/// by the multilateral one.
pub fn value_with_multilateral_cost(a: f64, b: f64, c_ij: f64) -> Result<f64> {
    if c_ij < 0.0 {
        return Err(Error::Convention(format!(
            "multilateral cost {c_ij} is negative; costs must be normalized to be nonnegative"
        )));
    }
    require(b >= 0.0, "b >= 0")?;
    Ok(a + b - 2.0 * (b * c_ij).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_case() {
        let eq = equilibrium(5.0, 4.0, 1.0, 1.0).unwrap();
        assert_eq!((eq.w_star, eq.x_star, eq.q_star, eq.v), (2.0, 0.5, 0.5, 5.0));
    }

    #[test]
    fn costless_monitoring() {
        let eq = equilibrium(1.0, 3.0, 0.0, 0.0).unwrap();
        assert_eq!((eq.v, eq.x_star), (4.0, 1.0));
    }

    #[test]
    fn ordering_violations_named() {
        let msg = equilibrium(0.0, 4.0, 0.5, 1.0).unwrap_err().to_string();
        assert!(msg.contains("e >= c"), "{msg}");
        let msg = equilibrium(0.0, 1.0, 0.9, 0.5).unwrap_err().to_string();
        assert!(msg.contains("sqrt(b c) >= e"), "{msg}");
        assert!(equilibrium(0.0, 1.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn indifference_at_equilibrium() {
        let eq = equilibrium(2.0, 9.0, 2.5, 1.0).unwrap();
        let p = GameParams { a: 2.0, b: 9.0, w: eq.w_star, e: 2.5, c: 1.0 };
        let pay = expected_payoffs(&p, eq.x_star, eq.q_star);
        assert!((pay.trust - pay.monitor).abs() < 1e-12);
        assert!((pay.work - pay.shirk).abs() < 1e-12);
        assert!((pay.trust - eq.v).abs() < 1e-12);
    }

    #[test]
    fn multilateral_value() {
        assert_eq!(value_with_multilateral_cost(1.0, 2.0, 0.0).unwrap(), 3.0);
        assert_eq!(value_with_multilateral_cost(0.0, 4.0, 1.0).unwrap(), 0.0);
        assert!(matches!(value_with_multilateral_cost(0.0, 4.0, -0.1), Err(Error::Convention(_))));
    }
}
