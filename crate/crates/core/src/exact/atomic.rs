use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::{g17, parse_ext};

/// Weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(with = "crate::numfmt::ext_real")]
    pub value: f64,
    pub weight: f64,
}

/// A finite probability distribution on the extended real line.
///
/// Atoms are sorted by value with no duplicates and strictly positive
/// weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicDistribution {
    atoms: Vec<Atom>,
}

impl AtomicDistribution {
    /// Validates an already normalised atom list.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let mut total = 0.0;
        for (i, a) in atoms.iter().enumerate() {
            if a.value.is_nan() {
                return Err(Error::InvalidParameter("atom value is NaN".into()));
            }
            if !(a.weight > 0.0) || !a.weight.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "atom weight {} is not positive",
                    a.weight
                )));
            }
            if i > 0 && !(atoms[i - 1].value < a.value) {
                return Err(Error::InvalidParameter(
                    "atom values must be strictly increasing".into(),
                ));
            }
            total += a.weight;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { atoms })
    }

    /// Sorts, merges identical values, drops zero weights and normalises.
    pub fn from_weighted<I: IntoIterator<Item = (f64, f64)>>(items: I) -> Result<Self> {
        let mut atoms: Vec<Atom> = items
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|(value, weight)| Atom { value, weight })
            .collect();
        if atoms.iter().any(|a| a.value.is_nan()) {
            return Err(Error::InvalidParameter("atom value is NaN".into()));
        }
        atoms.sort_by(|a, b| a.value.total_cmp(&b.value));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.value == a.value => last.weight += a.weight,
                _ => merged.push(a),
            }
        }
        let total: f64 = merged.iter().map(|a| a.weight).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("no positive weight".into()));
        }
        for a in &mut merged {
            a.weight /= total;
        }
        Ok(Self { atoms: merged })
    }

    pub fn point_mass(value: f64) -> Self {
        Self {
            atoms: vec![Atom { value, weight: 1.0 }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Weight of the atom at exactly `value`.
    pub fn weight_at(&self, value: f64) -> f64 {
        self.atoms
            .binary_search_by(|a| a.value.total_cmp(&value))
            .map(|i| self.atoms[i].weight)
            .unwrap_or(0.0)
    }

    /// Mean on the extended reals; opposite infinities are an error.
    pub fn mean(&self) -> Result<f64> {
        let pos = self.atoms.iter().any(|a| a.value == f64::INFINITY);
        let neg = self.atoms.iter().any(|a| a.value == f64::NEG_INFINITY);
        match (pos, neg) {
            (true, true) => Err(Error::UndefinedLimit(
                "mean of a law with mass at both infinities".into(),
            )),
            (true, false) => Ok(f64::INFINITY),
            (false, true) => Ok(f64::NEG_INFINITY),
            _ => Ok(self.atoms.iter().map(|a| a.value * a.weight).sum()),
        }
    }

    /// Pushes the law forward through a monotone map.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::from_weighted(self.atoms.iter().map(|a| (f(a.value), a.weight)))
    }

    /// Two-column text: `value<TAB>weight` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for a in &self.atoms {
            s.push_str(&g17(a.value));
            s.push('\t');
            s.push_str(&g17(a.weight));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            let (Some(v), Some(w), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Parse(format!("line {}: expected two columns", n + 1)));
            };
            let value = parse_ext(v)
                .ok_or_else(|| Error::Parse(format!("line {}: bad value {v:?}", n + 1)))?;
            let weight = parse_ext(w)
                .ok_or_else(|| Error::Parse(format!("line {}: bad weight {w:?}", n + 1)))?;
            atoms.push(Atom { value, weight });
        }
        Self::new(atoms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_weighted_sorts_and_merges() {
        let d = AtomicDistribution::from_weighted([(2.0, 1.0), (-1.0, 2.0), (2.0, 1.0), (5.0, 0.0)])
            .unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.atoms()[0].value, -1.0);
        assert!((d.weight_at(2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn new_rejects_bad_input() {
        let a = |value, weight| Atom { value, weight };
        assert!(AtomicDistribution::new(vec![a(0.0, 0.5), a(0.0, 0.5)]).is_err());
        assert!(AtomicDistribution::new(vec![a(0.0, 0.5), a(1.0, 0.4)]).is_err());
        assert!(AtomicDistribution::new(vec![a(0.0, 0.0), a(1.0, 1.0)]).is_err());
        assert!(AtomicDistribution::new(vec![a(0.0, 0.5), a(f64::INFINITY, 0.5)]).is_ok());
    }

    #[test]
    fn text_round_trip_with_infinities() {
        let d = AtomicDistribution::from_weighted([
            (f64::NEG_INFINITY, 0.25),
            (0.1, 0.5),
            (f64::INFINITY, 0.25),
        ])
        .unwrap();
        let text = d.to_text();
        assert!(text.starts_with("-inf\t"));
        assert_eq!(AtomicDistribution::from_text(&text).unwrap(), d);
    }

    #[test]
    fn extended_mean() {
        let d = AtomicDistribution::from_weighted([(1.0, 0.5), (f64::INFINITY, 0.5)]).unwrap();
        assert_eq!(d.mean().unwrap(), f64::INFINITY);
        let d = AtomicDistribution::from_weighted([(-1.0, 0.5), (3.0, 0.5)]).unwrap();
        assert_eq!(d.mean().unwrap(), 1.0);
    }
}
