// SPDX-License-Identifier: Apache-2.0

//! The `mubkit` command line.
//!
//! Exit codes: 0 success, 1 a requested check failed, 2 usage or input error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mubkit_core::format::{check_version, ProbabilityFile, SuiteFile, SystemFile, FORMAT_VERSION};
use mubkit_core::mub::{check_smub, check_wmub_det, check_wmub_norm};
use mubkit_core::selftest::{run_selftest, Check, SelftestOptions};
use mubkit_core::tomo::{
    positivity_fix, run_experiment_with, run_sweep, trace_distance, RunOptions,
};
use mubkit_core::{CMatrix, DensityMatrix, MarginalPolicy, PhaseRule, ShotConfig, System};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mubkit",
    version,
    about = "Mutually unbiased measurements over finite fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyMode {
    Smub,
    Wmub,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the measurement families for dimension d.
    Gen {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check every pair of families in a suite file.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        mode: VerifyMode,
    },
    /// Reconstruct a state from a probability table.
    Reconstruct {
        #[arg(long)]
        probs: PathBuf,
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Known state to compare against.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Average slot marginals that differ across settings instead of rejecting the table.
        #[arg(long)]
        average_marginals: bool,
    },
    /// Simulate finite-shot tomography of a state.
    Tomo {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        d: u64,
        #[arg(long, required_unless_present = "sweep")]
        shots: Option<u64>,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated shot counts; writes per-shots medians instead of trial records.
        #[arg(long, value_delimiter = ',', conflicts_with = "shots")]
        sweep: Option<Vec<u64>>,
        /// Leave matrices out of the trial records.
        #[arg(long)]
        metrics_only: bool,
    },
    /// Run the invariant checks for every d up to max-d.
    Selftest {
        #[arg(long)]
        max_d: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the identity behind each check.
        #[arg(long, hide = true)]
        quote_check: bool,
        /// Use the uncorrected diagonal phase in characteristic 2.
        #[arg(long, hide = true)]
        literal_phase: bool,
    },
}

/// Parse and run, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

/// `Ok(false)` means a check failed.
pub fn execute(cmd: Command) -> anyhow::Result<bool> {
    match cmd {
        Command::Gen { d, out } => cmd_gen(d, &out),
        Command::Verify { input, mode } => cmd_verify(&input, mode),
        Command::Reconstruct {
            probs,
            system,
            out,
            reference,
            average_marginals,
        } => {
            let policy = if average_marginals {
                MarginalPolicy::Average
            } else {
                MarginalPolicy::Strict
            };
            cmd_reconstruct(&probs, &system, &out, reference.as_deref(), policy)
        }
        Command::Tomo {
            state,
            d,
            shots,
            trials,
            seed,
            out,
            sweep,
            metrics_only,
        } => cmd_tomo(
            &state,
            d,
            shots,
            trials,
            seed,
            &out,
            sweep.as_deref(),
            metrics_only,
        ),
        Command::Selftest {
            max_d,
            seed,
            quote_check,
            literal_phase,
        } => {
            let rule = if literal_phase {
                PhaseRule::Literal
            } else {
                PhaseRule::Corrected
            };
            cmd_selftest(max_d, seed, quote_check, rule)
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// A bare matrix, or an object with a `state` member.
pub fn read_state(path: &Path) -> anyhow::Result<DensityMatrix> {
    let mut v: serde_json::Value = read_json(path)?;
    if let Some(obj) = v.as_object_mut() {
        if let Some(version) = obj.get("format_version") {
            let version = version
                .as_u64()
                .context("format_version must be an integer")?;
            check_version(u32::try_from(version)?)?;
        }
        if let Some(state) = obj.remove("state") {
            v = state;
        }
    }
    DensityMatrix::deserialize(v).with_context(|| format!("invalid state in {}", path.display()))
}

pub fn cmd_gen(d: u64, out: &Path) -> anyhow::Result<bool> {
    let system = System::for_dimension(d)?;
    let file = SuiteFile::from_system(&system)?;
    write_json(out, &file)?;
    let kind = match system {
        System::PrimePower(_) => "families",
        System::Composite(_) => "product families",
    };
    println!(
        "d={d}: {} {kind} written to {}",
        file.families.len(),
        out.display()
    );
    Ok(true)
}

pub fn cmd_verify(input: &Path, mode: VerifyMode) -> anyhow::Result<bool> {
    let file: SuiteFile = read_json(input)?;
    let families = file.families()?;
    let want_smub = matches!(mode, VerifyMode::Smub | VerifyMode::All);
    let want_wmub = matches!(mode, VerifyMode::Wmub | VerifyMode::All);
    let mut all_ok = true;
    let mut pairs = 0usize;
    let mut worst_smub: f64 = 0.0;
    for (i, m) in families.iter().enumerate() {
        for n in &families[i + 1..] {
            pairs += 1;
            let mut line = format!("{} vs {}:", m.label(), n.label());
            if want_smub {
                let r = check_smub(m, n)?;
                worst_smub = worst_smub.max(r.max_deviation);
                all_ok &= r.is_smub;
                let verdict = if r.is_smub { "pass" } else { "FAIL" };
                write!(line, " smub {verdict} (max dev {:.3e})", r.max_deviation)?;
            }
            if want_wmub {
                let r = check_wmub_det(m, n)?;
                let norm = check_wmub_norm(m, n)?;
                all_ok &= r.is_wmub;
                let verdict = if r.is_wmub { "pass" } else { "FAIL" };
                write!(
                    line,
                    " wmub {verdict} (det {:.3e}, |L| {:.3e})",
                    r.det_value, norm.norm
                )?;
            }
            println!("{line}");
        }
    }
    if pairs == 0 {
        println!("no pairs to check");
    }
    if want_smub {
        println!("max smub deviation: {worst_smub:.3e}");
    }
    println!(
        "{pairs} pairs: {}",
        if all_ok { "all pass" } else { "FAILED" }
    );
    Ok(all_ok)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionFile {
    pub format_version: u32,
    pub d: usize,
    pub raw_estimate: CMatrix,
    pub repaired_estimate: DensityMatrix,
    pub degenerate: bool,
    pub trace: f64,
    pub min_eigenvalue: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_distance: Option<f64>,
}

pub fn cmd_reconstruct(
    probs: &Path,
    system: &Path,
    out: &Path,
    reference: Option<&Path>,
    policy: MarginalPolicy,
) -> anyhow::Result<bool> {
    let sys_file: SystemFile = read_json(system)?;
    check_version(sys_file.format_version)?;
    let sys = System::for_dimension(sys_file.d)?;
    let file: ProbabilityFile = read_json(probs)?;
    let table = file.to_table(&sys)?;
    let raw = sys.reconstruct(&table, policy)?;
    let eig = raw.hermitian_part().herm_eig()?;
    let min_eigenvalue = eig.values.last().copied().unwrap_or(0.0);
    let repaired = positivity_fix(&raw)?;
    let distance = match reference {
        Some(path) => {
            let rho = read_state(path)?;
            if rho.dim() != sys.dim() {
                bail!(
                    "reference state has dimension {}, system has {}",
                    rho.dim(),
                    sys.dim()
                );
            }
            Some(trace_distance(&raw, rho.matrix())?)
        }
        None => None,
    };
    let doc = ReconstructionFile {
        format_version: FORMAT_VERSION,
        d: sys.dim(),
        trace: raw.trace().re,
        raw_estimate: raw,
        repaired_estimate: repaired.state,
        degenerate: repaired.degenerate,
        min_eigenvalue,
        trace_distance: distance,
    };
    write_json(out, &doc)?;
    println!("trace: {:.12}", doc.trace);
    println!("min eigenvalue: {:.6e}", doc.min_eigenvalue);
    if let Some(t) = distance {
        println!("trace distance to reference: {t:.3e}");
    }
    if doc.degenerate {
        println!("estimate had no positive part; repaired state is I/d");
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_tomo(
    state: &Path,
    d: u64,
    shots: Option<u64>,
    trials: usize,
    seed: u64,
    out: &Path,
    sweep: Option<&[u64]>,
    metrics_only: bool,
) -> anyhow::Result<bool> {
    let rho = read_state(state)?;
    let system = System::for_dimension(d)?;
    if rho.dim() != system.dim() {
        bail!("state has dimension {}, but --d is {d}", rho.dim());
    }
    if let Some(list) = sweep {
        if list.is_empty() {
            bail!("--sweep needs at least one shot count");
        }
        let report = run_sweep(&rho, &system, list, trials, seed)?;
        write_json(out, &report)?;
        println!(
            "{:>10}  {:>14}  {:>10}  {:>10}",
            "shots", "trace_dist", "fidelity", "hs_error"
        );
        for p in &report.points {
            println!(
                "{:>10}  {:>14.6e}  {:>10.6}  {:>10.6e}",
                p.shots, p.median_trace_distance, p.median_fidelity, p.median_hs_error
            );
        }
        println!("log-log slope: {:.4}", report.slope);
        return Ok(true);
    }
    let shots = shots.context("--shots is required without --sweep")?;
    let config = ShotConfig::new(shots, seed, trials)?;
    let report = run_experiment_with(&rho, &system, &config, RunOptions { metrics_only })?;
    write_json(out, &report)?;
    let s = &report.summary;
    println!(
        "d={d} shots={shots} trials={trials}: median trace distance {:.6e}, fidelity {:.6}, hs error {:.6e}",
        s.median_trace_distance, s.median_fidelity, s.median_hs_error
    );
    if s.indefinite_trials > 0 {
        println!(
            "{} of {trials} raw estimates were indefinite",
            s.indefinite_trials
        );
    }
    Ok(true)
}

pub fn cmd_selftest(
    max_d: u64,
    seed: u64,
    quote_check: bool,
    phase_rule: PhaseRule,
) -> anyhow::Result<bool> {
    if max_d < 2 {
        bail!("--max-d must be at least 2");
    }
    let report = run_selftest(max_d, SelftestOptions { phase_rule, seed })?;
    let width = Check::ALL.iter().map(|c| c.name().len()).max().unwrap_or(0);
    let mut header = format!("{:width$}", "check");
    for d in &report.dims {
        write!(header, " {:>5}", format!("d={d}"))?;
    }
    println!("{header}");
    for (check, row) in &report.cells {
        let mut line = format!("{:width$}", check.name());
        for cell in row {
            let mark = match cell {
                None => "-",
                Some(r) if r.passed => "ok",
                Some(_) => "FAIL",
            };
            write!(line, " {mark:>5}")?;
        }
        println!("{line}");
    }
    if quote_check {
        println!();
        for check in Check::ALL {
            println!("{:width$}  {}", check.name(), check.identity());
        }
    }
    match report.first_failure() {
        None => {
            println!("all checks passed");
            Ok(true)
        }
        Some(r) => {
            println!(
                "FAILED {} at d={}: {} deviates by {:.3e} ({})",
                r.check.name(),
                r.d,
                r.check.identity(),
                r.deviation,
                r.worst
            );
            Ok(false)
        }
    }
}
