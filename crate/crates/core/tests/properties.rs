// SPDX-License-Identifier: Apache-2.0

use mubkit_core::cmat::{kron, CMatrix};
use mubkit_core::format::LabelRepr;
use mubkit_core::recon::System;
use mubkit_core::tomo::{born_table, positivity_fix, sample_counts, trace_distance};
use mubkit_core::{DensityMatrix, FieldSpec, Label, MarginalPolicy, ProbabilityTable, ShotConfig};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field_and_indices() -> impl Strategy<Value = (u64, usize, usize, usize)> {
    prop::sample::select(vec![2u64, 3, 4, 5, 7, 8, 9, 16, 25, 27, 32, 49])
        .prop_flat_map(|q| (Just(q), 0..q as usize, 0..q as usize, 0..q as usize))
}

fn small_matrix(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n * n).prop_map(move |v| {
        CMatrix::from_vec(
            n,
            n,
            v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms((q, i, j, k) in field_and_indices()) {
        let f = FieldSpec::for_order(q).unwrap();
        let (x, y, z) = (f.from_index(i), f.from_index(j), f.from_index(k));
        prop_assert_eq!(f.sub(&f.add(&x, &y).unwrap(), &y).unwrap(), x.clone());
        prop_assert_eq!(f.mul(&x, &y).unwrap(), f.mul(&y, &x).unwrap());
        let lhs = f.mul(&x, &f.add(&y, &z).unwrap()).unwrap();
        let rhs = f.add(&f.mul(&x, &y).unwrap(), &f.mul(&x, &z).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        if !x.is_zero() {
            prop_assert_eq!(f.mul(&x, &f.inv(&x).unwrap()).unwrap(), f.one());
        }
        prop_assert_eq!(f.index_of(&x).unwrap(), i);
    }

    #[test]
    fn kron_mixed_product(a in small_matrix(2), b in small_matrix(3), c in small_matrix(2), e in small_matrix(3)) {
        let lhs = &kron(&a, &b) * &kron(&c, &e);
        let rhs = kron(&(&a * &c), &(&b * &e));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9);
    }

    #[test]
    fn repair_always_yields_a_state(h in small_matrix(3)) {
        let mut x = h.hermitian_part();
        let shift = (1.0 - x.trace().re) / 3.0;
        x.add_scaled(Complex64::new(shift, 0.0), &CMatrix::identity(3));
        let r = positivity_fix(&x).unwrap();
        prop_assert!(DensityMatrix::new(r.state.matrix().clone()).is_ok());
    }

    #[test]
    fn reconstruction_is_affine(seed in any::<u64>(), lambda in -1.0f64..2.0, d in prop::sample::select(vec![3u64, 4, 6])) {
        let system = System::for_dimension(d).unwrap();
        let fams = system.families().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r1, r2) = (DensityMatrix::random(&mut rng, d as usize), DensityMatrix::random(&mut rng, d as usize));
        let (t1, t2) = (born_table(r1.matrix(), &fams).unwrap(), born_table(r2.matrix(), &fams).unwrap());
        let mixed: ProbabilityTable = t1
            .iter()
            .map(|(l, p)| {
                let q = t2.get(l).unwrap();
                (l.clone(), p.iter().zip(q).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect())
            })
            .collect();
        let got = system.reconstruct(&mixed, MarginalPolicy::Strict).unwrap();
        let mut expected = r1.matrix().scale_real(lambda);
        expected.add_scaled(Complex64::new(1.0 - lambda, 0.0), r2.matrix());
        prop_assert!(got.max_abs_diff(&expected) < 1e-9);
    }

    #[test]
    fn sampled_counts_respect_support(
        raw in prop::collection::vec(prop::sample::select(vec![0.0f64, 0.5, 1.0, 3.0]), 2..8),
        shots in 1u64..2000,
        seed in any::<u64>(),
        setting in 0usize..100,
        trial in 0usize..100,
    ) {
        prop_assume!(raw.iter().sum::<f64>() > 0.0);
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let c = sample_counts(&probs, &ShotConfig::new(shots, seed, 1).unwrap(), setting, trial);
        prop_assert_eq!(c.iter().sum::<u64>(), shots);
        for (p, k) in probs.iter().zip(&c) {
            if *p == 0.0 {
                prop_assert_eq!(*k, 0);
            }
        }
    }

    #[test]
    fn labels_round_trip_through_json(d in prop::sample::select(vec![4u64, 5, 6, 10, 12])) {
        let system = System::for_dimension(d).unwrap();
        let fields = system.fields();
        for label in system.setting_labels() {
            let json = serde_json::to_string(&LabelRepr::from(&label)).unwrap();
            let back: LabelRepr = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back.resolve(&fields).unwrap(), label.clone());
        }
        prop_assert!(LabelRepr::from(&Label::Name("x".into())).resolve(&fields).is_ok());
    }
}

#[test]
fn pure_state_round_trip_through_every_layout() {
    for d in 2u64..=12 {
        let system = System::for_dimension(d).unwrap();
        let mut psi = vec![Complex64::new(0.0, 0.0); d as usize];
        psi[0] = Complex64::new(1.0, 0.0);
        psi[d as usize - 1] = Complex64::new(0.0, 1.0);
        let rho = DensityMatrix::pure(&psi).unwrap();
        let table = born_table(rho.matrix(), &system.families().unwrap()).unwrap();
        let est = system.reconstruct(&table, MarginalPolicy::Strict).unwrap();
        assert!(
            trace_distance(&est, rho.matrix()).unwrap() <= 1e-8,
            "d = {d}"
        );
    }
}
