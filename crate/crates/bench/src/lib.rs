// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the criterion benches.

use mubkit_core::tomo::born_table;
use mubkit_core::{DensityMatrix, ProbabilityTable, Result, System};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// A reproducible random state of dimension `d`.
pub fn fixed_state(d: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    DensityMatrix::random(&mut rng, d)
}

/// The measurement layout for `d` together with the exact table of a random state.
pub fn exact_table(d: u64, seed: u64) -> Result<(System, ProbabilityTable)> {
    let system = System::for_dimension(d)?;
    let rho = fixed_state(d as usize, seed);
    let table = born_table(rho.matrix(), &system.families()?)?;
    Ok((system, table))
}
