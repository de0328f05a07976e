//! Arithmetic on the extended real line.
//!
//! Log-likelihood ratios legitimately take the values `+inf` (the observation
//! rules out root value 1) and `-inf` (it rules out root value 0). The helpers
//! here make the conventions explicit: `ln 0 = -inf`, `e^{-inf} = 0`, and
//! `+inf + -inf` is an error rather than NaN.

use crate::error::{Error, Result};

/// `ln(e^a + e^b)` with `-inf` as the additive identity.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a == f64::INFINITY || b == f64::INFINITY {
        return f64::INFINITY;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Sum of two extended reals.
pub fn add(a: f64, b: f64) -> Result<f64> {
    let s = a + b;
    if s.is_nan() {
        return Err(Error::UndefinedLimit(format!("{a} + {b}")));
    }
    Ok(s)
}

/// `ln p` for a probability, with `ln 0 = -inf`.
pub fn ln_prob(p: f64) -> f64 {
    if p == 0.0 {
        f64::NEG_INFINITY
    } else {
        p.ln()
    }
}

/// Logistic function `1 / (1 + e^{-x})`, exact at the infinities.
pub fn logistic(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
