// SPDX-License-Identifier: Apache-2.0

//! Invariant battery run by `mubkit selftest`.
//!
//! Every check reports the largest deviation from its identity. Small
//! dimensions are checked exhaustively; above [`EXHAUSTIVE_MAX`] the pair and
//! quadruple checks use a seeded random subset of labels.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cmat::{hs_inner, trace_of_product, CMatrix, DensityMatrix};
use crate::error::Result;
use crate::gf::{factorize, FieldElement, FieldSpec};
use crate::mub::MubSuite;
use crate::recon::{
    reconstruct_composite, reconstruct_prime_power, reconstruct_weyl, CompositeSystem,
};
use crate::tomo::{born_table, trace_distance};
use crate::weyl::{
    clock_v, extended_labels, shift_u, weyl_w, weyl_w_with, ExtendedLabel, PhaseRule,
};

/// Largest dimension checked over every label combination.
pub const EXHAUSTIVE_MAX: usize = 5;

/// Group-law checks are exhaustive up to this dimension.
pub const GROUP_LAW_EXHAUSTIVE_MAX: usize = 16;

/// Random combinations drawn per check above the exhaustive limits.
pub const SAMPLES: usize = 400;

/// Random states per dimension in the reconstruction check.
pub const STATES: usize = 5;

/// Tolerance on exact identities.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Tolerance on round-trip trace distances.
pub const ROUND_TRIP_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Check {
    Characters,
    WeylRelations,
    Orthogonality,
    GroupLaw,
    Projectors,
    Unbiased,
    Count,
    Reconstruction,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::Characters,
        Check::WeylRelations,
        Check::Orthogonality,
        Check::GroupLaw,
        Check::Projectors,
        Check::Unbiased,
        Check::Count,
        Check::Reconstruction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Characters => "characters",
            Check::WeylRelations => "weyl-relations",
            Check::Orthogonality => "orthogonality",
            Check::GroupLaw => "group-law",
            Check::Projectors => "projectors",
            Check::Unbiased => "unbiased",
            Check::Count => "count",
            Check::Reconstruction => "reconstruction",
        }
    }

    /// The identity being checked, in plain notation.
    pub fn identity(self) -> &'static str {
        match self {
            Check::Characters => "<x,y> = <y,x>, <x+y,z> = <x,z><y,z>, sum_x <x,y> = d [y = 0]",
            Check::WeylRelations => "U_a U_b = U_(a+b), V_a V_b = V_(a+b), V_b U_a = <a,b> U_a V_b",
            Check::Orthogonality => {
                "Tr W(a,x)^* W(b,y) = d [a = b, x = y] on the d^2 basis elements"
            }
            Check::GroupLaw => "W(a,x) W(a,y) = W(a,x+y)",
            Check::Projectors => {
                "P(a,y) self-adjoint rank-one, P(a,y) P(a,z) = [y = z] P(a,y), sum_y P(a,y) = I"
            }
            Check::Unbiased => "Tr P(a,x) P(b,y) = 1/d for a != b",
            Check::Count => "d + 1 families for d = p^r; prod (d_i + 1) settings otherwise",
            Check::Reconstruction => {
                "rho = sum (p - 1/(d+1)) P; Weyl expansion; inclusion-exclusion over slots"
            }
        }
    }

    fn tolerance(self) -> f64 {
        match self {
            Check::Reconstruction => ROUND_TRIP_TOL,
            _ => IDENTITY_TOL,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SelftestOptions {
    pub phase_rule: PhaseRule,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub check: Check,
    pub d: u64,
    pub deviation: f64,
    pub passed: bool,
    /// Where the largest deviation occurred.
    pub worst: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelftestReport {
    pub dims: Vec<u64>,
    /// `cells[check][dim]`; `None` where the check does not apply.
    pub cells: Vec<(Check, Vec<Option<CheckResult>>)>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.first_failure().is_none()
    }

    /// In dimension order, then check order.
    pub fn first_failure(&self) -> Option<&CheckResult> {
        (0..self.dims.len())
            .flat_map(|k| {
                self.cells
                    .iter()
                    .filter_map(move |(_, row)| row[k].as_ref())
            })
            .find(|r| !r.passed)
    }
}

/// Running maximum with the location that produced it.
struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            at: String::new(),
        }
    }

    fn update(&mut self, value: f64, at: impl FnOnce() -> String) {
        // NaN counts as a failure.
        if value > self.value || value.is_nan() && !self.value.is_nan() {
            self.value = value;
            self.at = at();
        }
    }
}

/// All index tuples of the given length when small, else a random sample.
fn combos(rng: &mut ChaCha8Rng, n: usize, len: usize, exhaustive: bool) -> Vec<Vec<usize>> {
    if exhaustive {
        let total = n.pow(len as u32);
        (0..total)
            .map(|mut k| {
                let mut v = vec![0; len];
                for slot in v.iter_mut().rev() {
                    *slot = k % n;
                    k /= n;
                }
                v
            })
            .collect()
    } else {
        let idx: Vec<usize> = (0..n).collect();
        (0..SAMPLES)
            .map(|_| (0..len).map(|_| *idx.choose(rng).expect("n > 0")).collect())
            .collect()
    }
}

fn label_str(a: &ExtendedLabel) -> String {
    a.to_string()
}

fn check_characters(f: &FieldSpec, rng: &mut ChaCha8Rng) -> Result<Worst> {
    let els: Vec<FieldElement> = f.elements().collect();
    let d = els.len();
    let exhaustive = d <= EXHAUSTIVE_MAX;
    let mut w = Worst::new();
    for t in combos(rng, d, 3, exhaustive) {
        let (x, y, z) = (&els[t[0]], &els[t[1]], &els[t[2]]);
        let sym = (f.bichar(x, y)? - f.bichar(y, x)?).norm();
        w.update(sym, || format!("<{x},{y}> symmetry"));
        let add = (f.bichar(&f.add(x, y)?, z)? - f.bichar(x, z)? * f.bichar(y, z)?).norm();
        w.update(add, || format!("<{x}+{y},{z}>"));
    }
    for y in &els {
        let s: num_complex::Complex64 = els.iter().map(|x| f.bichar_unchecked(x, y)).sum();
        let expected = if y.is_zero() { d as f64 } else { 0.0 };
        w.update((s - expected).norm(), || format!("sum_x <x,{y}>"));
    }
    Ok(w)
}

fn check_weyl_relations(f: &FieldSpec, rng: &mut ChaCha8Rng) -> Result<Worst> {
    let els: Vec<FieldElement> = f.elements().collect();
    let us = els
        .iter()
        .map(|a| shift_u(f, a))
        .collect::<Result<Vec<_>>>()?;
    let vs = els
        .iter()
        .map(|a| clock_v(f, a))
        .collect::<Result<Vec<_>>>()?;
    let exhaustive = els.len() <= EXHAUSTIVE_MAX;
    let mut w = Worst::new();
    for t in combos(rng, els.len(), 2, exhaustive) {
        let (i, j) = (t[0], t[1]);
        let (a, b) = (&els[i], &els[j]);
        let k = f.index_of(&f.add(a, b)?)?;
        w.update((&us[i] * &us[j]).max_abs_diff(&us[k]), || {
            format!("U_{a} U_{b}")
        });
        w.update((&vs[i] * &vs[j]).max_abs_diff(&vs[k]), || {
            format!("V_{a} V_{b}")
        });
        let lhs = &vs[j] * &us[i];
        let rhs = (&us[i] * &vs[j]).scale(f.bichar(a, b)?);
        w.update(lhs.max_abs_diff(&rhs), || format!("V_{b} U_{a}"));
    }
    Ok(w)
}

fn basis_labels(f: &FieldSpec) -> Vec<(ExtendedLabel, FieldElement)> {
    let mut out = vec![(ExtendedLabel::Infinity, f.zero())];
    for a in extended_labels(f) {
        for x in f.elements().filter(|x| !x.is_zero()) {
            out.push((a.clone(), x));
        }
    }
    out
}

fn check_orthogonality(f: &FieldSpec, rng: &mut ChaCha8Rng) -> Result<Worst> {
    let labels = basis_labels(f);
    let ops = labels
        .iter()
        .map(|(a, x)| weyl_w(f, a, x).map(|w| w.mat))
        .collect::<Result<Vec<_>>>()?;
    let d = f.order() as f64;
    let exhaustive = f.order() <= EXHAUSTIVE_MAX;
    let mut w = Worst::new();
    for t in combos(rng, ops.len(), 2, exhaustive) {
        let (i, j) = (t[0], t[1]);
        let expected = if i == j { d } else { 0.0 };
        let dev = (hs_inner(&ops[i], &ops[j])? - expected).norm();
        w.update(dev, || {
            let (a, x) = &labels[i];
            let (b, y) = &labels[j];
            format!("W({},{x}) vs W({},{y})", label_str(a), label_str(b))
        });
    }
    Ok(w)
}

fn check_group_law(f: &FieldSpec, rule: PhaseRule, rng: &mut ChaCha8Rng) -> Result<Worst> {
    let labels = extended_labels(f);
    let els: Vec<FieldElement> = f.elements().collect();
    let exhaustive = f.order() <= GROUP_LAW_EXHAUSTIVE_MAX;
    let mut w = Worst::new();
    let mut run = |a: &ExtendedLabel, x: &FieldElement, y: &FieldElement| -> Result<()> {
        let lhs = &weyl_w_with(f, a, x, rule)?.mat * &weyl_w_with(f, a, y, rule)?.mat;
        let rhs = weyl_w_with(f, a, &f.add(x, y)?, rule)?.mat;
        w.update(lhs.max_abs_diff(&rhs), || {
            format!("a={}, x={x}, y={y}", label_str(a))
        });
        Ok(())
    };
    if exhaustive {
        for a in &labels {
            for x in &els {
                for y in &els {
                    run(a, x, y)?;
                }
            }
        }
    } else {
        for t in combos(rng, els.len(), 2, false) {
            let a = labels.choose(rng).expect("nonempty");
            run(a, &els[t[0]], &els[t[1]])?;
        }
    }
    Ok(w)
}

fn check_projectors(suite: &MubSuite) -> Result<Worst> {
    let d = suite.dim();
    let id = CMatrix::identity(d);
    let mut w = Worst::new();
    for fam in suite.families() {
        let label = fam.label().to_string();
        let ps = fam.projectors();
        let mut sum = CMatrix::zeros(d, d);
        for (y, p) in ps.iter().enumerate() {
            sum += p;
            w.update(p.hermitian_deviation(), || {
                format!("P({label},#{y}) self-adjoint")
            });
            w.update((p.trace() - 1.0).norm(), || {
                format!("P({label},#{y}) trace")
            });
            for (z, q) in ps.iter().enumerate() {
                let expected = if y == z {
                    p.clone()
                } else {
                    CMatrix::zeros(d, d)
                };
                w.update((p * q).max_abs_diff(&expected), || {
                    format!("P({label},#{y}) P({label},#{z})")
                });
            }
        }
        w.update(sum.max_abs_diff(&id), || format!("sum_y P({label},y)"));
    }
    Ok(w)
}

fn check_unbiased(suite: &MubSuite) -> Result<Worst> {
    let inv_d = 1.0 / suite.dim() as f64;
    let fams = suite.families();
    let mut w = Worst::new();
    for (i, m) in fams.iter().enumerate() {
        for n in &fams[i + 1..] {
            for (x, p) in m.projectors().iter().enumerate() {
                for (y, q) in n.projectors().iter().enumerate() {
                    let dev = (trace_of_product(p, q)? - inv_d).norm();
                    w.update(dev, || {
                        format!("P({},#{x}) vs P({},#{y})", m.label(), n.label())
                    });
                }
            }
        }
    }
    Ok(w)
}

fn check_reconstruction_prime(suite: &MubSuite, rng: &mut ChaCha8Rng) -> Result<Worst> {
    let mut w = Worst::new();
    for k in 0..STATES {
        let rho = DensityMatrix::random(rng, suite.dim());
        let table = born_table(rho.matrix(), suite.families())?;
        let a = reconstruct_prime_power(&table, suite)?;
        let b = reconstruct_weyl(&table, suite)?;
        w.update(trace_distance(&a, rho.matrix())?, || {
            format!("state #{k}, projector form")
        });
        w.update(a.max_abs_diff(&b), || {
            format!("state #{k}, Weyl form vs projector form")
        });
    }
    Ok(w)
}

fn check_reconstruction_composite(sys: &CompositeSystem, rng: &mut ChaCha8Rng) -> Result<Worst> {
    let families = sys.product_families()?;
    let mut w = Worst::new();
    for k in 0..STATES {
        let rho = DensityMatrix::random(rng, sys.dim());
        let est = reconstruct_composite(&born_table(rho.matrix(), &families)?, sys)?;
        w.update(trace_distance(&est, rho.matrix())?, || {
            format!("state #{k}")
        });
    }
    Ok(w)
}

/// One check at one dimension; `None` when it does not apply (the field
/// checks at composite `d`).
pub fn run_check(check: Check, d: u64, opts: SelftestOptions) -> Result<Option<CheckResult>> {
    let fact = factorize(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ d.rotate_left(17) ^ check as u64);
    let worst = if fact.is_prime_power() {
        let f = FieldSpec::for_order(d)?;
        match check {
            Check::Characters => check_characters(&f, &mut rng)?,
            Check::WeylRelations => check_weyl_relations(&f, &mut rng)?,
            Check::Orthogonality => check_orthogonality(&f, &mut rng)?,
            Check::GroupLaw => check_group_law(&f, opts.phase_rule, &mut rng)?,
            Check::Projectors => check_projectors(&MubSuite::for_dimension(d)?)?,
            Check::Unbiased => check_unbiased(&MubSuite::for_dimension(d)?)?,
            Check::Count => {
                let n = MubSuite::for_dimension(d)?.families().len() as f64;
                let mut w = Worst::new();
                w.update((n - (d + 1) as f64).abs(), || format!("{n} families"));
                w
            }
            Check::Reconstruction => {
                check_reconstruction_prime(&MubSuite::for_dimension(d)?, &mut rng)?
            }
        }
    } else {
        match check {
            Check::Count => {
                let sys = CompositeSystem::new(d)?;
                let expected: u64 = fact.prime_powers().iter().map(|q| q + 1).product();
                let n = sys.settings().len() as f64;
                let mut w = Worst::new();
                w.update((n - expected as f64).abs(), || format!("{n} settings"));
                w
            }
            Check::Reconstruction => {
                check_reconstruction_composite(&CompositeSystem::new(d)?, &mut rng)?
            }
            _ => return Ok(None),
        }
    };
    Ok(Some(CheckResult {
        check,
        d,
        deviation: worst.value,
        passed: worst.value <= check.tolerance(),
        worst: worst.at,
    }))
}

/// Every check at every `d` in `2..=max_d`.
pub fn run_selftest(max_d: u64, opts: SelftestOptions) -> Result<SelftestReport> {
    use rayon::prelude::*;
    let dims: Vec<u64> = (2..=max_d).collect();
    let cells = Check::ALL
        .iter()
        .map(|&check| {
            let row = dims
                .par_iter()
                .map(|&d| run_check(check, d, opts))
                .collect::<Result<Vec<_>>>()?;
            Ok((check, row))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SelftestReport { dims, cells })
}
