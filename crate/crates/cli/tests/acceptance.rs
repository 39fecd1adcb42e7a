// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use mubkit_core::mub::{check_smub, check_wmub_det, overlap_l, wmub_oracle};
use mubkit_core::recon::{
    reconstruct_composite, reconstruct_prime_power, reconstruct_weyl, CompositeSystem,
};
use mubkit_core::selftest::{run_check, Check, SelftestOptions};
use mubkit_core::tomo::{born_table, run_experiment, run_sweep, trace_distance};
use mubkit_core::{
    CMatrix, DensityMatrix, FieldSpec, Label, MeasurementFamily, MubSuite, PhaseRule,
    ProbabilityTable, ShotConfig, System,
};

// Pinned tolerances.
const OVERLAP_TOL: f64 = 1e-9;
const ALGEBRA_TOL: f64 = 1e-9;
const GROUP_LAW_TOL: f64 = 1e-9;
const ROUND_TRIP_TOL: f64 = 1e-8;
const FORMULA_AGREEMENT_TOL: f64 = 1e-9;
const SMUB_L_TOL: f64 = 1e-9;
const SLOPE_RANGE: (f64, f64) = (-0.65, -0.35);
const MEAN_SIGMAS: f64 = 5.0;
const MEAN_ABS_TOL: f64 = 0.01;
const NEAR_DEGENERATE_ANGLE: f64 = 1e-4;

const PRIME_POWERS: [u64; 7] = [2, 3, 4, 5, 7, 8, 9];

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn overlap() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in PRIME_POWERS {
        let suite = MubSuite::for_dimension(d).unwrap();
        let fams = suite.families();
        for (i, m) in fams.iter().enumerate() {
            for (j, n) in fams.iter().enumerate() {
                if i != j {
                    worst = worst.max(check_smub(m, n).unwrap().max_deviation);
                }
            }
        }
    }
    outcome(
        worst <= OVERLAP_TOL,
        format!("max |Tr P Q - 1/d| = {worst:.2e}"),
    )
}

fn measurement_count() -> Outcome {
    let mut ok = true;
    for d in [2u64, 3, 4, 5, 7, 8, 9, 11, 13, 16, 25, 27] {
        ok &= MubSuite::for_dimension(d).unwrap().families().len() as u64 == d + 1;
    }
    let six = CompositeSystem::new(6).unwrap().settings().len();
    let twelve = CompositeSystem::new(12).unwrap().settings().len();
    ok &= six == 12 && twelve == 20;
    outcome(
        ok,
        format!("d+1 families for prime powers; d=6: {six} settings, d=12: {twelve}"),
    )
}

fn weyl_algebra() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut where_ = String::new();
    for d in [2u64, 3, 4, 5, 7, 8, 9] {
        for check in [
            Check::Characters,
            Check::WeylRelations,
            Check::Orthogonality,
        ] {
            let r = run_check(check, d, SelftestOptions::default())
                .unwrap()
                .unwrap();
            if r.deviation >= worst {
                worst = r.deviation;
                where_ = format!("{} at d={d}", check.name());
            }
        }
    }
    outcome(
        worst <= ALGEBRA_TOL,
        format!("exhaustive d<=5, sampled d=7,8,9; max deviation {worst:.2e} ({where_})"),
    )
}

fn group_law() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in [2u64, 4, 8] {
        let r = run_check(Check::GroupLaw, d, SelftestOptions::default())
            .unwrap()
            .unwrap();
        worst = worst.max(r.deviation);
    }
    let literal = SelftestOptions {
        phase_rule: PhaseRule::Literal,
        ..Default::default()
    };
    let guard = run_check(Check::GroupLaw, 2, literal).unwrap().unwrap();
    outcome(
        worst <= GROUP_LAW_TOL && !guard.passed,
        format!(
            "d=2,4,8 all (a,x,y): max deviation {worst:.2e}; uncorrected phase deviates by {:.1}",
            guard.deviation
        ),
    )
}

fn reconstruction() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let (mut worst_td, mut worst_gap): (f64, f64) = (0.0, 0.0);
    for d in PRIME_POWERS {
        let suite = MubSuite::for_dimension(d).unwrap();
        for _ in 0..100 {
            let rho = DensityMatrix::random(&mut rng, d as usize);
            let table = born_table(rho.matrix(), suite.families()).unwrap();
            let a = reconstruct_prime_power(&table, &suite).unwrap();
            let b = reconstruct_weyl(&table, &suite).unwrap();
            worst_td = worst_td.max(trace_distance(&a, rho.matrix()).unwrap());
            worst_gap = worst_gap.max(a.max_abs_diff(&b));
        }
    }
    outcome(
        worst_td <= ROUND_TRIP_TOL && worst_gap <= FORMULA_AGREEMENT_TOL,
        format!("700 states: max trace distance {worst_td:.2e}; Weyl form vs projector form {worst_gap:.2e}"),
    )
}

fn composite() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for (d, count) in [(6u64, 50), (12, 20)] {
        let sys = CompositeSystem::new(d).unwrap();
        let fams = sys.product_families().unwrap();
        for _ in 0..count {
            let rho = DensityMatrix::random(&mut rng, d as usize);
            let est =
                reconstruct_composite(&born_table(rho.matrix(), &fams).unwrap(), &sys).unwrap();
            worst = worst.max(trace_distance(&est, rho.matrix()).unwrap());
        }
    }
    let mut exact = true;
    for d in PRIME_POWERS {
        let sys = CompositeSystem::from_fields(vec![FieldSpec::for_order(d).unwrap()]).unwrap();
        let suite = sys.suite(0).clone();
        let rho = DensityMatrix::random(&mut rng, d as usize);
        let prime = born_table(rho.matrix(), suite.families()).unwrap();
        let single: ProbabilityTable = prime
            .iter()
            .map(|(l, p)| match l {
                Label::Single(a) => (Label::Product(vec![a.clone()]), p.to_vec()),
                other => (other.clone(), p.to_vec()),
            })
            .collect();
        exact &= reconstruct_composite(&single, &sys).unwrap()
            == reconstruct_prime_power(&prime, &suite).unwrap();
    }
    outcome(
        worst <= ROUND_TRIP_TOL && exact,
        format!("d=6 x50, d=12 x20: max trace distance {worst:.2e}; one-factor reduction bitwise equal: {exact}"),
    )
}

fn family(name: &str, u: &CMatrix) -> MeasurementFamily {
    MeasurementFamily::from_unitary(Label::Name(name.into()), u).unwrap()
}

/// `u` with columns `i` and `j` rotated by `theta` under a random phase.
fn givens(rng: &mut ChaCha20Rng, u: &CMatrix, theta: f64) -> CMatrix {
    let d = u.rows();
    let i = rng.random_range(0..d);
    let j = (i + rng.random_range(1..d)) % d;
    let phase = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    let mut g = CMatrix::identity(d);
    g[(i, i)] = Complex64::new(theta.cos(), 0.0);
    g[(j, j)] = Complex64::new(theta.cos(), 0.0);
    g[(i, j)] = -phase.conj() * theta.sin();
    g[(j, i)] = phase * theta.sin();
    u * &g
}

fn permuted_and_phased(rng: &mut ChaCha20Rng, u: &CMatrix) -> CMatrix {
    let d = u.rows();
    let mut order: Vec<usize> = (0..d).collect();
    for k in (1..d).rev() {
        order.swap(k, rng.random_range(0..=k));
    }
    let phases: Vec<Complex64> = (0..d)
        .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    CMatrix::from_fn(d, d, |r, c| u[(r, order[c])] * phases[c])
}

fn wmub_decision() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut agree = 0usize;
    let mut total = 0usize;
    let (mut weak, mut dependent) = (0usize, 0usize);
    let mut worst_l: f64 = 0.0;
    for d in [2usize, 3, 4] {
        let suite = MubSuite::for_dimension(d as u64).unwrap();
        for k in 0..100 {
            let u = CMatrix::random_unitary(&mut rng, d);
            let v = match k % 5 {
                0 | 1 => CMatrix::random_unitary(&mut rng, d),
                2 => givens(&mut rng, &u, NEAR_DEGENERATE_ANGLE),
                3 => permuted_and_phased(&mut rng, &u),
                _ => u.clone(),
            };
            let (m, n) = if k % 10 == 9 {
                // Pairs from the suite.
                let fams = suite.families();
                let a = rng.random_range(0..fams.len());
                let b = (a + rng.random_range(1..fams.len())) % fams.len();
                let l = overlap_l(&fams[a], &fams[b]).unwrap();
                worst_l = worst_l.max(l.max_abs());
                (fams[a].clone(), fams[b].clone())
            } else {
                (family("M", &u), family("N", &v))
            };
            let det = check_wmub_det(&m, &n).unwrap().is_wmub;
            let oracle = wmub_oracle(&m, &n).unwrap();
            total += 1;
            agree += usize::from(det == oracle);
            if oracle {
                weak += 1;
            } else {
                dependent += 1;
            }
        }
    }
    outcome(
        agree == total && worst_l <= SMUB_L_TOL,
        format!(
            "{agree}/{total} agree ({weak} weakly unbiased, {dependent} dependent); max |L| on suite pairs {worst_l:.2e}"
        ),
    )
}

fn tomography() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let shots = [100u64, 1_000, 10_000, 100_000];
    let mut slopes = Vec::new();
    for d in [2u64, 3] {
        let system = System::for_dimension(d).unwrap();
        let rho = DensityMatrix::random(&mut rng, d as usize);
        slopes.push(run_sweep(&rho, &system, &shots, 50, 100 + d).unwrap().slope);
    }
    let slopes_ok = slopes
        .iter()
        .all(|s| (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(s));

    let system = System::for_dimension(2).unwrap();
    let rho = DensityMatrix::new(CMatrix::from_real_diag(&[0.75, 0.25])).unwrap();
    let trials = 2000;
    let report =
        run_experiment(&rho, &system, &ShotConfig::new(100, 2024, trials).unwrap()).unwrap();
    let raws: Vec<&CMatrix> = report
        .trials
        .iter()
        .map(|t| t.raw_estimate.as_ref().unwrap())
        .collect();
    let mut mean_ok = true;
    let mut worst_dev: f64 = 0.0;
    let mut worst_sigmas: f64 = 0.0;
    for idx in 0..4 {
        let (i, j) = (idx / 2, idx % 2);
        for part in [0, 1] {
            let get = |m: &CMatrix| {
                if part == 0 {
                    m[(i, j)].re
                } else {
                    m[(i, j)].im
                }
            };
            let vals: Vec<f64> = raws.iter().map(|m| get(m)).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            let dev = (mean - get(rho.matrix())).abs();
            worst_dev = worst_dev.max(dev);
            if se > 0.0 {
                worst_sigmas = worst_sigmas.max(dev / se);
            }
            mean_ok &= dev <= MEAN_SIGMAS * se + f64::EPSILON && dev <= MEAN_ABS_TOL;
        }
    }
    outcome(
        slopes_ok && mean_ok,
        format!(
            "slopes d=2 {:.3}, d=3 {:.3}; mean of 2000 raw estimates off by {worst_dev:.2e} ({worst_sigmas:.2} sigma)",
            slopes[0], slopes[1]
        ),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_mubkit");
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    let rho = DensityMatrix::random(&mut ChaCha20Rng::seed_from_u64(9), 3);
    std::fs::write(&state, serde_json::to_string(&rho).unwrap()).unwrap();
    let run = |out: &Path| {
        Command::new(bin)
            .args([
                "tomo", "--d", "3", "--shots", "500", "--trials", "4", "--seed", "42", "--state",
            ])
            .arg(&state)
            .arg("--out")
            .arg(out)
            .output()
            .unwrap()
            .status
            .success()
    };
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let ran = run(&a) && run(&b);
    let identical = ran && std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();
    let selftest = Command::new(bin)
        .args(["selftest", "--max-d", "9"])
        .output()
        .unwrap()
        .status
        .code();
    outcome(
        identical && selftest == Some(0),
        format!("tomo reports byte-identical: {identical}; selftest --max-d 9 exit {selftest:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("SMUB overlap", overlap),
        ("measurement count", measurement_count),
        ("Weyl algebra", weyl_algebra),
        ("group law incl. characteristic 2", group_law),
        ("reconstruction round trip", reconstruction),
        ("composite round trip", composite),
        ("WMUB decision", wmub_decision),
        ("tomography statistics", tomography),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {}: {status} {name}: {} [{:.1}s]",
            k + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
