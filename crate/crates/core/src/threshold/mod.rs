//! Finite-depth reconstruction decisions, threshold bisection and the
//! consolidated closed-form bounds.

mod bisect;
mod decide;
mod family;
mod report;

pub use bisect::{bisect_threshold, BisectConfig, ThresholdEstimate};
pub use decide::{
    curve_for_channel, decide_from_curve, decide_reconstruction, decision_window,
    diagnostic_curve, fit_geometric_rate, Curve, Decision, DecisionRule, Diagnostic, Engine,
    Verdict,
};
pub use family::{ChannelFamily, FamilyKind};
pub use report::{
    bounds_report, hardcore_thm1_crossover, rho_one_lambda, BoundsReport, HardcoreBounds,
    HardcoreRow, SymmetricBounds, SymmetricRow,
};
