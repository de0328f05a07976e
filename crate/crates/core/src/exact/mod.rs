//! Density evolution of the conditional likelihood-ratio laws on finitely
//! many atoms, together with the monotone coupling and diagnostics.

mod atomic;
mod coupling;
mod evolve;
mod lemma;
mod pair;

pub use atomic::{Atom, AtomicDistribution, WEIGHT_SUM_TOL};
pub use coupling::{build_coupling, Coupling, CouplingPair};
pub use evolve::{
    base_pair, evolve, evolve_to, PruningPolicy, QuantScheme, Quantizer, MAX_PRODUCTS,
};
pub use lemma::{verify_lemma, FiniteSpace, LemmaVerdict, LEMMA_TOL};
pub use pair::{
    a_minus_pi0, a_of_l, diagnostics, finite_depth_identity_check, l_of_a, mean_gap, ConditionalPair,
    Diagnostics, IdentityCheck, PairAtom, DOMINANCE_TOL,
};
