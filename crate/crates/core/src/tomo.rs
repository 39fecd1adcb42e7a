// SPDX-License-Identifier: Apache-2.0

//! Finite-shot tomography: Born probabilities, seeded multinomial sampling,
//! the plug-in estimator, positivity repair and error metrics.
//!
//! Sampling uses ChaCha20 (`rand_chacha` 0.9). Each (setting, trial) pair gets
//! its own stream, `(trial << 32) | setting_id`, under the user seed, so any
//! subset of draws can be reproduced in isolation and in any order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmat::{trace_of_product, CMatrix, DensityMatrix};
use crate::error::{Error, Result};
use crate::format::{LabelRepr, FORMAT_VERSION};
use crate::mub::{Label, MeasurementFamily};
use crate::recon::{MarginalPolicy, ProbabilityTable, System};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub shots_per_setting: u64,
    pub seed: u64,
    pub trials: usize,
}

impl ShotConfig {
    pub fn new(shots_per_setting: u64, seed: u64, trials: usize) -> Result<Self> {
        let c = Self {
            shots_per_setting,
            seed,
            trials,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_per_setting == 0 {
            return Err(Error::InvalidConfig(
                "shots_per_setting must be at least 1".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.trials > u32::MAX as usize {
            return Err(Error::InvalidConfig("too many trials".into()));
        }
        Ok(())
    }
}

/// `Tr(rho P_j)` for each projector, clipped to `[0, 1]`.
pub fn born_probs(rho: &CMatrix, family: &MeasurementFamily) -> Result<Vec<f64>> {
    if rho.rows() != family.dim() || rho.cols() != family.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} measured by a family of dimension {}",
            rho.rows(),
            family.dim()
        )));
    }
    family
        .projectors()
        .iter()
        .map(|p| Ok(trace_of_product(rho, p)?.re.clamp(0.0, 1.0)))
        .collect()
}

pub fn born_table(rho: &CMatrix, families: &[MeasurementFamily]) -> Result<ProbabilityTable> {
    families
        .iter()
        .map(|f| Ok((f.label().clone(), born_probs(rho, f)?)))
        .collect()
}

fn stream_rng(seed: u64, setting_id: usize, trial: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((trial as u64) << 32) | setting_id as u64);
    rng
}

/// Multinomial draw of `config.shots_per_setting` outcomes by inverse CDF,
/// reproducible from `(config.seed, setting_id, trial)`.
pub fn sample_counts(
    probs: &[f64],
    config: &ShotConfig,
    setting_id: usize,
    trial: usize,
) -> Vec<u64> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut total = 0.0;
    for &p in probs {
        total += p.max(0.0);
        cdf.push(total);
    }
    let mut counts = vec![0u64; probs.len()];
    if probs.is_empty() || total <= 0.0 {
        return counts;
    }
    let last = probs.len() - 1;
    let mut rng = stream_rng(config.seed, setting_id, trial);
    for _ in 0..config.shots_per_setting {
        let u = rng.random::<f64>() * total;
        let k = cdf.partition_point(|&c| c <= u).min(last);
        counts[k] += 1;
    }
    counts
}

/// Outcome counts keyed by setting, all with the same number of shots.
#[derive(Clone, Debug, PartialEq)]
pub struct CountTable {
    shots: u64,
    entries: BTreeMap<Label, Vec<u64>>,
}

impl CountTable {
    pub fn new(shots: u64) -> Self {
        Self {
            shots,
            entries: BTreeMap::new(),
        }
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn insert(&mut self, label: Label, counts: Vec<u64>) -> Result<()> {
        let sum: u64 = counts.iter().sum();
        if sum != self.shots {
            return Err(Error::InvalidTable(format!(
                "{label}: counts sum to {sum}, expected {}",
                self.shots
            )));
        }
        self.entries.insert(label, counts);
        Ok(())
    }

    pub fn get(&self, label: &Label) -> Option<&[u64]> {
        self.entries.get(label).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &[u64])> {
        self.entries.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn frequencies(&self) -> ProbabilityTable {
        let n = self.shots as f64;
        self.entries
            .iter()
            .map(|(l, c)| (l.clone(), c.iter().map(|&k| k as f64 / n).collect()))
            .collect()
    }
}

/// The raw plug-in estimate: frequencies substituted for probabilities.
/// Hermitian with unit trace, possibly indefinite.
pub fn estimate(counts: &CountTable, system: &System) -> Result<CMatrix> {
    system.reconstruct(&counts.frequencies(), MarginalPolicy::Average)
}

/// Direct injection: fractional "counts" (for example `probabilities * shots`)
/// divided by `shots` and reconstructed.
pub fn estimate_injected(
    counts: &ProbabilityTable,
    shots: f64,
    system: &System,
) -> Result<CMatrix> {
    if shots.is_nan() || shots <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "shots must be positive, got {shots}"
        )));
    }
    let freqs: ProbabilityTable = counts
        .iter()
        .map(|(l, c)| (l.clone(), c.iter().map(|&k| k / shots).collect()))
        .collect();
    system.reconstruct(&freqs, MarginalPolicy::Average)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Repaired {
    pub state: DensityMatrix,
    /// Every eigenvalue clamped to zero; `state` is `I/d`.
    pub degenerate: bool,
}

/// Symmetrize, clamp negative eigenvalues to zero and renormalize.
pub fn positivity_fix(raw: &CMatrix) -> Result<Repaired> {
    if !raw.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not square",
            raw.rows(),
            raw.cols()
        )));
    }
    let d = raw.rows();
    let eig = raw.hermitian_part().herm_eig()?;
    let clamped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total <= 0.0 {
        return Ok(Repaired {
            state: DensityMatrix::maximally_mixed(d),
            degenerate: true,
        });
    }
    let mat = eig.map(|l| l.max(0.0) / total).hermitian_part();
    Ok(Repaired {
        state: DensityMatrix::new(mat)?,
        degenerate: false,
    })
}

fn check_same_shape(rho: &CMatrix, sigma: &CMatrix) -> Result<()> {
    if rho.rows() != sigma.rows() || rho.cols() != sigma.cols() || !rho.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            rho.rows(),
            rho.cols(),
            sigma.rows(),
            sigma.cols()
        )));
    }
    Ok(())
}

/// `1/2 sum |eig(rho - sigma)|`.
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    check_same_shape(rho, sigma)?;
    let diff = (rho - sigma).hermitian_part();
    Ok(0.5 * diff.herm_eig()?.values.iter().map(|l| l.abs()).sum::<f64>())
}

/// `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`, clamped to `[0, 1]`.
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    check_same_shape(rho, sigma)?;
    let sqrt_rho = rho.hermitian_part().herm_eig()?.map(|l| l.max(0.0).sqrt());
    let inner = (&(&sqrt_rho * sigma) * &sqrt_rho).hermitian_part();
    let t: f64 = inner
        .herm_eig()?
        .values
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    Ok((t * t).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub trace_distance: f64,
    pub fidelity: f64,
    /// Frobenius norm of the difference.
    pub hs_error: f64,
}

pub fn metrics(truth: &CMatrix, est: &CMatrix) -> Result<Metrics> {
    Ok(Metrics {
        trace_distance: trace_distance(truth, est)?,
        fidelity: fidelity(truth, est)?,
        hs_error: (truth - est).frobenius_norm(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub label: LabelRepr,
    pub counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub counts: Vec<SettingCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_estimate: Option<CMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repaired_estimate: Option<DensityMatrix>,
    pub min_raw_eigenvalue: f64,
    pub degenerate: bool,
    pub metrics: Metrics,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median_trace_distance: f64,
    pub median_fidelity: f64,
    pub median_hs_error: f64,
    pub indefinite_trials: usize,
    pub degenerate_trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyReport {
    pub format_version: u32,
    pub config: ShotConfig,
    pub dim: usize,
    pub trials: Vec<TrialRecord>,
    pub summary: Summary,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Leave raw and repaired matrices out of the trial records.
    pub metrics_only: bool,
}

/// One full trial: sample every setting, estimate, repair, score.
fn run_trial(
    truth: &DensityMatrix,
    system: &System,
    families: &[MeasurementFamily],
    exact: &[Vec<f64>],
    config: &ShotConfig,
    trial: usize,
    options: RunOptions,
) -> Result<TrialRecord> {
    let mut counts = CountTable::new(config.shots_per_setting);
    let mut records = Vec::with_capacity(families.len());
    for (setting_id, (fam, probs)) in families.iter().zip(exact).enumerate() {
        let c = sample_counts(probs, config, setting_id, trial);
        records.push(SettingCounts {
            label: LabelRepr::from(fam.label()),
            counts: c.clone(),
        });
        counts.insert(fam.label().clone(), c)?;
    }
    let raw = estimate(&counts, system)?;
    let min_raw_eigenvalue = raw
        .hermitian_part()
        .herm_eig()?
        .values
        .last()
        .copied()
        .unwrap_or(0.0);
    let repaired = positivity_fix(&raw)?;
    let m = metrics(truth.matrix(), repaired.state.matrix())?;
    Ok(TrialRecord {
        trial,
        counts: records,
        raw_estimate: (!options.metrics_only).then_some(raw),
        repaired_estimate: (!options.metrics_only).then_some(repaired.state),
        min_raw_eigenvalue,
        degenerate: repaired.degenerate,
        metrics: m,
    })
}

/// Settings are measured with equal shots; trials run in parallel and are
/// reported in trial order.
pub fn run_experiment(
    truth: &DensityMatrix,
    system: &System,
    config: &ShotConfig,
) -> Result<TomographyReport> {
    run_experiment_with(truth, system, config, RunOptions::default())
}

pub fn run_experiment_with(
    truth: &DensityMatrix,
    system: &System,
    config: &ShotConfig,
    options: RunOptions,
) -> Result<TomographyReport> {
    config.validate()?;
    if truth.dim() != system.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for a system of dimension {}",
            truth.dim(),
            system.dim()
        )));
    }
    let families = system.families()?;
    if families.len() > u32::MAX as usize {
        return Err(Error::InvalidConfig("too many settings".into()));
    }
    let exact = families
        .iter()
        .map(|f| born_probs(truth.matrix(), f))
        .collect::<Result<Vec<_>>>()?;
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(truth, system, &families, &exact, config, t, options))
        .collect::<Result<Vec<_>>>()?;

    let pick =
        |f: fn(&Metrics) -> f64| median(&trials.iter().map(|t| f(&t.metrics)).collect::<Vec<_>>());
    let summary = Summary {
        median_trace_distance: pick(|m| m.trace_distance),
        median_fidelity: pick(|m| m.fidelity),
        median_hs_error: pick(|m| m.hs_error),
        indefinite_trials: trials.iter().filter(|t| t.min_raw_eigenvalue < 0.0).count(),
        degenerate_trials: trials.iter().filter(|t| t.degenerate).count(),
    };
    Ok(TomographyReport {
        format_version: FORMAT_VERSION,
        config: *config,
        dim: system.dim(),
        trials,
        summary,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub shots: u64,
    pub median_trace_distance: f64,
    pub median_fidelity: f64,
    pub median_hs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub format_version: u32,
    pub dim: usize,
    pub seed: u64,
    pub trials: usize,
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of `ln(median trace distance)` against `ln(shots)`.
    pub slope: f64,
}

/// Medians of the error metrics for each shot count, all under the same seed.
pub fn run_sweep(
    truth: &DensityMatrix,
    system: &System,
    shots: &[u64],
    trials: usize,
    seed: u64,
) -> Result<SweepReport> {
    let options = RunOptions { metrics_only: true };
    let points = shots
        .iter()
        .map(|&n| {
            let r =
                run_experiment_with(truth, system, &ShotConfig::new(n, seed, trials)?, options)?;
            Ok(SweepPoint {
                shots: n,
                median_trace_distance: r.summary.median_trace_distance,
                median_fidelity: r.summary.median_fidelity,
                median_hs_error: r.summary.median_hs_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| (p.shots as f64).ln()).collect();
    let ys: Vec<f64> = points
        .iter()
        .map(|p| p.median_trace_distance.ln())
        .collect();
    Ok(SweepReport {
        format_version: FORMAT_VERSION,
        dim: system.dim(),
        seed,
        trials,
        points,
        slope: regression_slope(&xs, &ys),
    })
}

/// Ordinary least-squares slope; NaN for fewer than two distinct abscissae.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}
