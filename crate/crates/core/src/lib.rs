// SPDX-License-Identifier: Apache-2.0

//! Mutually unbiased measurements over finite fields.
//!
//! The crate builds Weyl operators and the `d + 1` rank-one measurement
//! families of a prime-power dimension, tests pairs of measurements for weak
//! and strong mutual unbiasedness, reconstructs states from outcome
//! probabilities (including composite dimensions via tensor products of
//! prime-power factors), and simulates finite-shot tomography.

pub mod cmat;
pub mod error;
pub mod format;
pub mod gf;
pub mod mub;
pub mod recon;
pub mod selftest;
pub mod tomo;
pub mod weyl;

/// Default absolute tolerance for exact identities.
pub const TOL: f64 = 1e-9;

pub use cmat::{CMatrix, DensityMatrix};
pub use error::{Error, Result};
pub use gf::{factorize, make_field, FieldElement, FieldSpec, PrimePowerFactorization};
pub use mub::{
    check_smub, check_wmub_det, check_wmub_norm, measurement_family, mub_suite, wmub_oracle, Label,
    MeasurementFamily, MubSuite, NormVerdict,
};
pub use recon::{
    reconstruct_composite, reconstruct_prime_power, reconstruct_weyl, CompositeSystem,
    MarginalPolicy, ProbabilityTable, System,
};
pub use tomo::{run_experiment, ShotConfig, TomographyReport};
pub use weyl::{weyl_w, ExtendedLabel, PhaseRule, WeylOperator};
