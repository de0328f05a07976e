//! Channel algebra for the binary broadcast chain.
//!
//! A [`BinaryChannel`] is the 2x2 row-stochastic transition matrix used to pass
//! a value from each node to each of its `k` children. Everything else in the
//! crate is expressed through the quantities derived here: the stationary
//! root law, the ratios `c0 = p01/p00` and `c1 = p11/p10`, the child
//! log-likelihood increment `g`, and the closed-form non-reconstruction
//! bounds together with their hard-core specialisations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ln_add_exp;

/// Tolerance on row sums when a full matrix is supplied.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Above this branching number powers like `(1+w)^k` are evaluated in log space.
const LOG_SPACE_K: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryChannel {
    p00: f64,
    p01: f64,
    p10: f64,
    p11: f64,
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "{name} = {p} is not a probability"
        )));
    }
    Ok(())
}

impl BinaryChannel {
    /// Builds the channel from its first column; rows are completed by
    /// stochasticity.
    pub fn new(p00: f64, p10: f64) -> Result<Self> {
        check_probability("p00", p00)?;
        check_probability("p10", p10)?;
        Self::checked(p00, 1.0 - p00, p10, 1.0 - p10)
    }

    /// Builds the channel from all four entries, validating row sums.
    pub fn from_matrix(p00: f64, p01: f64, p10: f64, p11: f64) -> Result<Self> {
        for (name, p) in [("p00", p00), ("p01", p01), ("p10", p10), ("p11", p11)] {
            check_probability(name, p)?;
        }
        for (row, sum) in [(0, p00 + p01), (1, p10 + p11)] {
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidParameter(format!(
                    "row {row} sums to {sum}, not 1"
                )));
            }
        }
        Self::checked(p00, p01, p10, p11)
    }

    /// A channel with `p01 = p10 = 0` has no stationary law and is rejected by
    /// the other constructors; this one accepts it for sampling from a fixed
    /// root. `pi0` and `pi1` are NaN for such channels.
    pub fn without_stationary_check(p00: f64, p10: f64) -> Result<Self> {
        check_probability("p00", p00)?;
        check_probability("p10", p10)?;
        Ok(Self { p00, p01: 1.0 - p00, p10, p11: 1.0 - p10 })
    }

    /// Symmetric channel flipping the value with probability `eps`.
    pub fn symmetric(eps: f64) -> Result<Self> {
        check_probability("eps", eps)?;
        Self::new(1.0 - eps, eps)
    }

    fn checked(p00: f64, p01: f64, p10: f64, p11: f64) -> Result<Self> {
        if p01 + p10 <= 0.0 {
            return Err(Error::DegenerateChannel(
                "p01 + p10 = 0, the stationary root law is undefined".into(),
            ));
        }
        Ok(Self { p00, p01, p10, p11 })
    }

    pub fn p00(&self) -> f64 {
        self.p00
    }
    pub fn p01(&self) -> f64 {
        self.p01
    }
    pub fn p10(&self) -> f64 {
        self.p10
    }
    pub fn p11(&self) -> f64 {
        self.p11
    }

    /// Transition probability from `from` to `to`.
    pub fn p(&self, from: u8, to: u8) -> f64 {
        match (from, to) {
            (0, 0) => self.p00,
            (0, _) => self.p01,
            (_, 0) => self.p10,
            _ => self.p11,
        }
    }

    /// Stationary probability of value 0.
    pub fn pi0(&self) -> f64 {
        self.p10 / (self.p01 + self.p10)
    }

    /// Stationary probability of value 1.
    pub fn pi1(&self) -> f64 {
        self.p01 / (self.p01 + self.p10)
    }

    /// `p01 / p00`, reported as `+inf` when `p00 = 0`.
    pub fn c0(&self) -> f64 {
        if self.p00 == 0.0 {
            f64::INFINITY
        } else {
            self.p01 / self.p00
        }
    }

    /// `p11 / p10`, reported as `+inf` when `p10 = 0`.
    pub fn c1(&self) -> f64 {
        if self.p10 == 0.0 {
            f64::INFINITY
        } else {
            self.p11 / self.p10
        }
    }

    /// Second eigenvalue `p00 - p10` of the transition matrix.
    pub fn eigenvalue(&self) -> f64 {
        self.p00 - self.p10
    }

    pub fn all_positive(&self) -> bool {
        self.p00 > 0.0 && self.p01 > 0.0 && self.p10 > 0.0 && self.p11 > 0.0
    }

    /// True when both first-column entries are positive, so that `c0`, `c1`
    /// and the constant `ln(p00/p10)` of the likelihood recursion are finite.
    pub fn has_finite_ratios(&self) -> bool {
        self.p00 > 0.0 && self.p10 > 0.0
    }

    pub fn is_symmetric(&self) -> bool {
        self.p00 == self.p11 && self.p01 == self.p10
    }

    pub fn is_hardcore(&self) -> bool {
        self.p11 == 0.0 && self.p10 == 1.0
    }

    /// Per-child constant `ln(p00/p10)` of the likelihood recursion.
    pub fn log_ratio_constant(&self) -> Result<f64> {
        self.require_finite_ratios()?;
        Ok((self.p00 / self.p10).ln())
    }

    pub(crate) fn require_finite_ratios(&self) -> Result<()> {
        if !self.has_finite_ratios() {
            return Err(Error::InvalidParameter(format!(
                "the likelihood recursion needs p00 > 0 and p10 > 0 (p00 = {}, p10 = {})",
                self.p00, self.p10
            )));
        }
        Ok(())
    }

    /// The child increment `g(x) = ln(1 + (c0 - c1)/(e^x + c1))`.
    ///
    /// Extended-real conventions: `g(+inf) = 0`, `g(-inf) = ln(c0/c1)` when
    /// `c1 > 0`; `g(-inf)` with `c1 = 0` is reported as undefined.
    pub fn log_increment(&self, x: f64) -> Result<f64> {
        self.require_finite_ratios()?;
        let (c0, c1) = (self.c0(), self.c1());
        if x.is_nan() {
            return Err(Error::InvalidParameter("x is NaN".into()));
        }
        if c0 == c1 || x == f64::INFINITY {
            return Ok(0.0);
        }
        if x == f64::NEG_INFINITY {
            if c1 == 0.0 {
                return Err(Error::UndefinedLimit(
                    "g(-inf) with c1 = 0 diverges".into(),
                ));
            }
            return Ok(if c0 == 0.0 {
                f64::NEG_INFINITY
            } else {
                (c0 / c1).ln()
            });
        }
        let ex = x.exp();
        if ex.is_finite() && ex > 1e-300 {
            Ok(((c0 - c1) / (ex + c1)).ln_1p())
        } else {
            let ln_c = |c: f64| if c == 0.0 { f64::NEG_INFINITY } else { c.ln() };
            Ok(ln_add_exp(x, ln_c(c0)) - ln_add_exp(x, ln_c(c1)))
        }
    }

    /// Full contribution `ln(p00/p10) + g(x)` of one child whose own
    /// log-likelihood ratio is `x`.
    pub fn child_term(&self, x: f64) -> Result<f64> {
        Ok(self.log_ratio_constant()? + self.log_increment(x)?)
    }
}

/// `make_channel(p00, p10)`: the channel with first column `(p00, p10)`.
pub fn make_channel(p00: f64, p10: f64) -> Result<BinaryChannel> {
    BinaryChannel::new(p00, p10)
}

/// Hard-core parametrisation of a channel with `p11 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardCoreParams {
    pub k: u32,
    pub w: f64,
    pub lambda: f64,
}

impl HardCoreParams {
    pub fn pi0(&self) -> f64 {
        (1.0 + self.w) / (1.0 + 2.0 * self.w)
    }

    pub fn pi1(&self) -> f64 {
        self.w / (1.0 + 2.0 * self.w)
    }
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    Ok(())
}

/// The hard-core channel `(1/(1+w), w/(1+w); 1, 0)` and its activity
/// `lambda = w (1+w)^k`.
pub fn hardcore_channel(w: f64, k: u32) -> Result<(BinaryChannel, HardCoreParams)> {
    check_k(k)?;
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidParameter(format!("w = {w} must be positive")));
    }
    let p00 = 1.0 / (1.0 + w);
    let channel = BinaryChannel::from_matrix(p00, 1.0 - p00, 1.0, 0.0)?;
    let lambda = lambda_of_w(w, k);
    Ok((channel, HardCoreParams { k, w, lambda }))
}

/// `ln(lambda) = ln w + k ln(1+w)`.
pub fn ln_lambda_of_w(w: f64, k: u32) -> f64 {
    w.ln() + k as f64 * w.ln_1p()
}

/// `lambda = w (1+w)^k`, in log space for large `k`.
pub fn lambda_of_w(w: f64, k: u32) -> f64 {
    if k > LOG_SPACE_K {
        ln_lambda_of_w(w, k).exp()
    } else {
        w * (1.0 + w).powi(k as i32)
    }
}

/// `ln(1 + lambda)` without overflow.
pub fn ln_one_plus_lambda(w: f64, k: u32) -> f64 {
    let ln_l = ln_lambda_of_w(w, k);
    if ln_l > 30.0 {
        ln_l + (-ln_l).exp().ln_1p()
    } else {
        ln_l.exp().ln_1p()
    }
}

/// Inverts `lambda = w (1+w)^k`.
///
/// Newton's method on `t = ln w` for `h(t) = t + k ln(1 + e^t) - ln(lambda)`,
/// which is increasing and convex, started to the right of the root so the
/// iterates decrease monotonically.
pub fn w_of_lambda(lambda: f64, k: u32) -> Result<f64> {
    check_k(k)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    let target = lambda.ln();
    let kf = k as f64;
    let h = |t: f64| t + kf * ln_add_exp(0.0, t) - target;
    let mut t = target;
    for _ in 0..200 {
        let sigma = crate::ext::logistic(t);
        let step = h(t) / (1.0 + kf * sigma);
        t -= step;
        if step.abs() <= 1e-15 * t.abs().max(1.0) {
            break;
        }
    }
    Ok(t.exp())
}

/// Left-hand side `(p10-p00)(p01-p11) / min{p00+p10, p01+p11}` of the
/// Mossel–Peres non-reconstruction condition (`<= 1/k`).
pub fn mossel_peres_lhs(c: &BinaryChannel) -> Result<f64> {
    let denom = (c.p00 + c.p10).min(c.p01 + c.p11);
    if denom <= 0.0 {
        return Err(Error::DegenerateChannel(
            "min{p00+p10, p01+p11} = 0".into(),
        ));
    }
    Ok((c.p10 - c.p00) * (c.p01 - c.p11) / denom)
}

/// Left-hand side `(sqrt(p00 p11) - sqrt(p01 p10))^2` of the improved
/// non-reconstruction condition (`<= 1/k`).
pub fn thm1_lhs(c: &BinaryChannel) -> f64 {
    let d = (c.p00 * c.p11).sqrt() - (c.p01 * c.p10).sqrt();
    d * d
}

/// Signed margin `lhs - 1/k`; non-positive means the bound certifies that
/// reconstruction is impossible.
pub fn impossibility_margin(lhs: f64, k: u32) -> f64 {
    lhs - 1.0 / k as f64
}

/// `k (1 - 2 eps)^2`; reconstruction for the symmetric channel is possible
/// exactly when this exceeds 1.
pub fn kesten_stigum_symmetric(eps: f64, k: u32) -> f64 {
    let d = 1.0 - 2.0 * eps;
    k as f64 * d * d
}

/// The flip probability at which `k (1 - 2 eps)^2 = 1`.
pub fn kesten_stigum_eps(k: u32) -> f64 {
    0.5 * (1.0 - 1.0 / (k as f64).sqrt())
}

/// Uniqueness threshold `k^k / (k-1)^(k+1)` of the hard-core model on the
/// `(k+1)`-regular tree.
pub fn kelly_threshold(k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "the Kelly threshold k^k/(k-1)^(k+1) needs k >= 2, got k = {k}"
        )));
    }
    let kf = k as f64;
    if k > LOG_SPACE_K {
        Ok((kf * kf.ln() - (kf + 1.0) * (kf - 1.0).ln()).exp())
    } else {
        Ok(kf.powi(k as i32) / (kf - 1.0).powi(k as i32 + 1))
    }
}

/// `f(x) = (p11 - p01) g(x)`, the function whose slope controls contraction
/// of the mean gap `E(L0 - L1)`.
pub fn f_eval(c: &BinaryChannel, x: f64) -> Result<f64> {
    let g = c.log_increment(x)?;
    let slope = c.p11 - c.p01;
    if slope == 0.0 {
        return Ok(0.0);
    }
    Ok(slope * g)
}

/// Closed-form maximiser and supremum of `f'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupFPrime {
    pub argmax: f64,
    pub value: f64,
}

/// `argmax = (ln(p01 p11) - ln(p00 p10)) / 2` and
/// `sup f' = (sqrt(p00 p11) - sqrt(p01 p10))^2`.
pub fn sup_fprime(c: &BinaryChannel) -> Result<SupFPrime> {
    if !c.all_positive() {
        return Err(Error::InvalidParameter(
            "sup f' in closed form needs all four entries positive; use the hard-core chord bound (rho) when p11 = 0".into(),
        ));
    }
    let argmax = 0.5 * ((c.p01 * c.p11).ln() - (c.p00 * c.p10).ln());
    Ok(SupFPrime {
        argmax,
        value: thm1_lhs(c),
    })
}

/// Hard-core contraction coefficient
/// `rho = (w/(1+w)) (ln(1+lambda)/ln(1+w) - 1)`; the mean gap contracts
/// whenever `rho < 1`.
pub fn rho(w: f64, k: u32) -> Result<f64> {
    check_k(k)?;
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidParameter(format!("w = {w} must be positive")));
    }
    Ok(w / (1.0 + w) * (ln_one_plus_lambda(w, k) / w.ln_1p() - 1.0))
}

/// The comparison curve `(ln k - ln ln k)/k` for the critical `w`.
pub fn bw_lower_w(k: u32) -> Result<f64> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "(ln k - ln ln k)/k is only used for k >= 3, got k = {k}"
        )));
    }
    let kf = k as f64;
    Ok((kf.ln() - kf.ln().ln()) / kf)
}
