use serde::{Deserialize, Serialize};

use super::family::FamilyKind;
use crate::chain::{
    bw_lower_w, hardcore_channel, impossibility_margin, kelly_threshold, kesten_stigum_eps,
    kesten_stigum_symmetric, lambda_of_w, mossel_peres_lhs, rho, thm1_lhs, w_of_lambda,
    BinaryChannel,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardcoreRow {
    pub lambda: f64,
    pub w: f64,
    pub mossel_peres_lhs: f64,
    pub mossel_peres_margin: f64,
    pub thm1_lhs: f64,
    pub thm1_margin: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardcoreBounds {
    /// `e - 1`, below which reconstruction is impossible for every `k`.
    pub e_minus_one: f64,
    pub kelly: f64,
    /// True when `e - 1` exceeds the uniqueness threshold.
    pub e_minus_one_exceeds_kelly: bool,
    /// `(ln k - ln ln k)/k` and its activity, for `k >= 3`.
    pub bw_lower_w: Option<f64>,
    pub bw_lower_lambda: Option<f64>,
    /// Activity at which the square-root bound with `p11 = 0` stops
    /// certifying impossibility, found numerically.
    pub thm1_crossover_lambda: f64,
    pub thm1_crossover_w: f64,
    /// Activity at which the contraction coefficient `rho` reaches 1.
    pub rho_one_lambda: Option<f64>,
    pub table: Vec<HardcoreRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricRow {
    pub eps: f64,
    pub kesten_stigum: f64,
    pub mossel_peres_lhs: f64,
    pub mossel_peres_margin: f64,
    pub thm1_lhs: f64,
    pub thm1_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricBounds {
    pub ks_eps: f64,
    pub table: Vec<SymmetricRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub k: u32,
    pub family: FamilyKind,
    pub hardcore: Option<HardcoreBounds>,
    pub symmetric: Option<SymmetricBounds>,
}

/// Root of an increasing function of `ln lambda` by bisection on
/// `[lo, hi]`, or `None` if there is no sign change.
fn solve_ln(lo: f64, hi: f64, f: impl Fn(f64) -> Result<f64>) -> Result<Option<f64>> {
    let (mut a, mut b) = (lo, hi);
    if f(a)? > 0.0 || f(b)? < 0.0 {
        return Ok(None);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m)? <= 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-14 * a.abs().max(1.0) {
            break;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

/// Activity where the `p11 = 0` square-root bound crosses `1/k`.
pub fn hardcore_thm1_crossover(k: u32) -> Result<f64> {
    let f = |ln_l: f64| -> Result<f64> {
        let (c, _) = hardcore_channel(w_of_lambda(ln_l.exp(), k)?, k)?;
        Ok(impossibility_margin(thm1_lhs(&c), k))
    };
    solve_ln(-30.0, 30.0, f)?
        .map(f64::exp)
        .ok_or_else(|| Error::InvalidParameter(format!("no crossover for k = {k}")))
}

/// Activity where `rho` reaches 1, if it does below `e^40`.
pub fn rho_one_lambda(k: u32) -> Result<Option<f64>> {
    let f = |ln_l: f64| -> Result<f64> { Ok(rho(w_of_lambda(ln_l.exp(), k)?, k)? - 1.0) };
    Ok(solve_ln(-30.0, 40.0, f)?.map(f64::exp))
}

fn hardcore_row(lambda: f64, k: u32) -> Result<HardcoreRow> {
    let w = w_of_lambda(lambda, k)?;
    let (c, _) = hardcore_channel(w, k)?;
    let mp = mossel_peres_lhs(&c)?;
    let t1 = thm1_lhs(&c);
    Ok(HardcoreRow {
        lambda,
        w,
        mossel_peres_lhs: mp,
        mossel_peres_margin: impossibility_margin(mp, k),
        thm1_lhs: t1,
        thm1_margin: impossibility_margin(t1, k),
        rho: rho(w, k)?,
    })
}

fn symmetric_row(eps: f64, k: u32) -> Result<SymmetricRow> {
    let c = BinaryChannel::symmetric(eps)?;
    let mp = mossel_peres_lhs(&c)?;
    let t1 = thm1_lhs(&c);
    Ok(SymmetricRow {
        eps,
        kesten_stigum: kesten_stigum_symmetric(eps, k),
        mossel_peres_lhs: mp,
        mossel_peres_margin: impossibility_margin(mp, k),
        thm1_lhs: t1,
        thm1_margin: impossibility_margin(t1, k),
    })
}

pub fn bounds_report(k: u32, family: FamilyKind) -> Result<BoundsReport> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    match family {
        FamilyKind::Hardcore => {
            let kelly = kelly_threshold(k)?;
            let e1 = std::f64::consts::E - 1.0;
            let bw = if k >= 3 { Some(bw_lower_w(k)?) } else { None };
            let crossover = hardcore_thm1_crossover(k)?;
            let mut lambdas: Vec<f64> = (-4..=6).map(|i| 2f64.powi(i)).collect();
            lambdas.extend([e1, kelly, crossover]);
            lambdas.sort_by(f64::total_cmp);
            lambdas.dedup();
            let table = lambdas.iter().map(|&l| hardcore_row(l, k)).collect::<Result<_>>()?;
            Ok(BoundsReport {
                k,
                family,
                hardcore: Some(HardcoreBounds {
                    e_minus_one: e1,
                    kelly,
                    e_minus_one_exceeds_kelly: e1 > kelly,
                    bw_lower_w: bw,
                    bw_lower_lambda: bw.map(|w| lambda_of_w(w, k)),
                    thm1_crossover_lambda: crossover,
                    thm1_crossover_w: w_of_lambda(crossover, k)?,
                    rho_one_lambda: rho_one_lambda(k)?,
                    table,
                }),
                symmetric: None,
            })
        }
        FamilyKind::Symmetric => {
            let table = (1..=10)
                .map(|i| symmetric_row(0.05 * i as f64, k))
                .collect::<Result<_>>()?;
            Ok(BoundsReport {
                k,
                family,
                hardcore: None,
                symmetric: Some(SymmetricBounds { ks_eps: kesten_stigum_eps(k), table }),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kelly_versus_e_minus_one() {
        let r = bounds_report(2, FamilyKind::Hardcore).unwrap();
        let h = r.hardcore.unwrap();
        assert_eq!(h.kelly, 4.0);
        assert!(!h.e_minus_one_exceeds_kelly);
        let h = bounds_report(10, FamilyKind::Hardcore).unwrap().hardcore.unwrap();
        assert!(h.e_minus_one_exceeds_kelly);
        assert!(bounds_report(1, FamilyKind::Hardcore).is_err());
    }

    #[test]
    fn crossover_is_kelly() {
        for k in 2..=6 {
            let x = hardcore_thm1_crossover(k).unwrap();
            let kelly = kelly_threshold(k).unwrap();
            assert!((x - kelly).abs() <= 1e-6 * kelly, "k = {k}: {x} vs {kelly}");
        }
    }

    #[test]
    fn rho_reaches_one_beyond_e_minus_one() {
        for k in 2..=8 {
            let l = rho_one_lambda(k).unwrap().unwrap();
            assert!(l > std::f64::consts::E - 1.0);
        }
    }

    #[test]
    fn symmetric_report() {
        let r = bounds_report(2, FamilyKind::Symmetric).unwrap();
        let s = r.symmetric.unwrap();
        assert!((s.ks_eps - 0.1464466094067262).abs() < 1e-15);
        assert_eq!(s.table.len(), 10);
    }
}
