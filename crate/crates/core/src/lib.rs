//! Phase-cell models of quantum measurement.
//!
//! A micro-system with eigenstates `u_1..u_n` couples to a finite instrument
//! whose pointer positions are orthogonal subspaces ("phase cells") of the
//! instrument space. The `generic` module computes the resulting
//! correlation tensor `F[r, s; α]` and classifies instruments from it; the
//! `chain` module treats the finite Coleman-Hepp spin chain in closed form
//! for arbitrarily long chains, with dense simulations as cross-checks.

pub mod chain;
pub mod error;
pub mod experiment;
pub mod generic;
pub mod operator;
pub mod par;
pub mod random;
pub mod special;

pub use chain::{
    as_generic_model, brute_force_chain, critical_time, effective_polarization_minus, misclassification,
    perturbed_misclassification, rate_constant, travel_time_kernel, ChainParams, LocalPerturbation,
    MisclassificationPair, OrbitalSetup,
};
pub use error::{Error, Result};
pub use generic::{classify_instrument, CompositeModel, FTensor, Instrument, InstrumentVerdict, MicroSystem, PhaseCellSet, VerdictKind};
pub use operator::{DensityMatrix, HermitianOperator, Projector};
