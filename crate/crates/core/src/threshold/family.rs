use serde::{Deserialize, Serialize};

use crate::chain::{hardcore_channel, w_of_lambda, BinaryChannel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Parameter is the flip probability `eps`; information grows as it falls.
    Symmetric,
    /// Parameter is the activity `lambda`; information grows with it.
    Hardcore,
}

/// A one-parameter family of channels on the `k`-ary tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelFamily {
    pub kind: FamilyKind,
    pub k: u32,
}

impl ChannelFamily {
    pub fn symmetric(k: u32) -> Self {
        Self { kind: FamilyKind::Symmetric, k }
    }

    pub fn hardcore(k: u32) -> Self {
        Self { kind: FamilyKind::Hardcore, k }
    }

    pub fn channel(&self, param: f64) -> Result<BinaryChannel> {
        match self.kind {
            FamilyKind::Symmetric => {
                if !(0.0..=0.5).contains(&param) {
                    return Err(Error::InvalidParameter(format!(
                        "eps = {param} is outside [0, 1/2]"
                    )));
                }
                BinaryChannel::symmetric(param)
            }
            FamilyKind::Hardcore => Ok(hardcore_channel(w_of_lambda(param, self.k)?, self.k)?.0),
        }
    }

    /// True when a larger parameter means a more informative channel.
    pub fn increasing_information(&self) -> bool {
        matches!(self.kind, FamilyKind::Hardcore)
    }

    /// Bisection coordinate: `eps` itself, or `ln lambda`.
    pub fn to_coord(&self, param: f64) -> f64 {
        match self.kind {
            FamilyKind::Symmetric => param,
            FamilyKind::Hardcore => param.ln(),
        }
    }

    pub fn from_coord(&self, x: f64) -> f64 {
        match self.kind {
            FamilyKind::Symmetric => x,
            FamilyKind::Hardcore => x.exp(),
        }
    }

    /// A bracket that contains the threshold for every `k >= 2`.
    ///
    /// For the hard-core family the upper end is where
    /// `k (w/(1+w))^2 = 3/2`, comfortably inside the reconstruction regime.
    pub fn default_bracket(&self) -> Result<(f64, f64)> {
        match self.kind {
            FamilyKind::Symmetric => Ok((0.01, 0.49)),
            FamilyKind::Hardcore => {
                let t = (1.5 / self.k as f64).sqrt().min(0.95);
                let w = t / (1.0 - t);
                Ok((0.5, crate::chain::lambda_of_w(w, self.k)))
            }
        }
    }
}
