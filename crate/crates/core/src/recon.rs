// SPDX-License-Identifier: Apache-2.0

//! Exact state reconstruction from outcome probabilities.
//!
//! For `d = p^r` the state is recovered from the `d + 1` families as
//! `rho = sum_{a,z} (p_{a,z} - 1/(d+1)) P(a,z)`, or equivalently through the
//! Weyl expansion `rho = d^{-1} sum_{a,x,y} conj<x,y> p_{a,y} W(a,x) - I`.
//!
//! For composite `d = d_1 ... d_n` the Hilbert space is a tensor product of
//! prime-power factors, each measured with its own suite, and
//! `rho = sum_J (-1)^{n-|J|} S(J)` where `S(J)` sums marginal probabilities on
//! the slots in `J` against the corresponding ampliated product projectors.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::cmat::{kron, kron_all, CMatrix};
use crate::error::{Error, Result};
use crate::gf::{dimension_limit, factorize, FieldSpec, PrimePowerFactorization};
use crate::mub::{mub_suite, Label, MeasurementFamily, MubSuite};
use crate::weyl::{weyl_w, ExtendedLabel};

/// Largest tolerated spread of a slot marginal across ignored settings in
/// [`MarginalPolicy::Strict`].
pub const MARGINAL_TOL: f64 = 1e-6;

/// Outcome distributions keyed by measurement setting. Each list follows the
/// projector order of the corresponding family.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbabilityTable {
    entries: BTreeMap<Label, Vec<f64>>,
}

impl ProbabilityTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: Label, probs: Vec<f64>) -> Option<Vec<f64>> {
        self.entries.insert(label, probs)
    }

    pub fn get(&self, label: &Label) -> Option<&[f64]> {
        self.entries.get(label).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &[f64])> {
        self.entries.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every list is a probability distribution: entries `>= -1e-12`, sum `1 +- 1e-9`.
    ///
    /// Reconstruction itself does not require this (it is affine in the table).
    pub fn validate_distributions(&self) -> Result<()> {
        for (label, probs) in &self.entries {
            if let Some(&p) = probs.iter().find(|&&p| p.is_nan() || p < -1e-12) {
                return Err(Error::InvalidTable(format!(
                    "{label}: entry {p} is negative"
                )));
            }
            let s: f64 = probs.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidTable(format!(
                    "{label}: probabilities sum to {s}"
                )));
            }
        }
        Ok(())
    }

    /// Fetch every required setting, reporting all missing ones at once.
    fn require<'a>(&'a self, labels: &[Label], outcomes: usize) -> Result<Vec<&'a [f64]>> {
        let missing: Vec<String> = labels
            .iter()
            .filter(|l| !self.entries.contains_key(l))
            .map(|l| l.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingSettings(missing));
        }
        labels
            .iter()
            .map(|l| {
                let p = &self.entries[l];
                if p.len() != outcomes {
                    return Err(Error::LengthMismatch {
                        setting: l.to_string(),
                        expected: outcomes,
                        found: p.len(),
                    });
                }
                Ok(p.as_slice())
            })
            .collect()
    }
}

impl FromIterator<(Label, Vec<f64>)> for ProbabilityTable {
    fn from_iter<T: IntoIterator<Item = (Label, Vec<f64>)>>(iter: T) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `sum_{a,z} (p_{a,z} - 1/(d+1)) P(a,z)`.
///
/// Evaluated as `sum p P - I`, using `sum_{a,z} P(a,z) = (d+1) I`.
pub fn reconstruct_prime_power(probs: &ProbabilityTable, suite: &MubSuite) -> Result<CMatrix> {
    let d = suite.dim();
    let labels: Vec<Label> = suite.families().iter().map(|f| f.label().clone()).collect();
    let dists = probs.require(&labels, d)?;
    let mut acc = CMatrix::zeros(d, d);
    for (fam, dist) in suite.families().iter().zip(dists) {
        for (&p, proj) in dist.iter().zip(fam.projectors()) {
            acc.add_scaled(real(p), proj);
        }
    }
    acc.add_scaled(real(-1.0), &CMatrix::identity(d));
    Ok(acc)
}

/// Coefficients `c(a, x) = sum_y conj<x,y> p_{a,y}`, which equal `Tr rho W(a,x)^dagger`.
pub fn weyl_coefficients(
    probs: &ProbabilityTable,
    suite: &MubSuite,
) -> Result<Vec<(ExtendedLabel, Vec<Complex64>)>> {
    let f = suite.field();
    let labels: Vec<Label> = suite
        .families()
        .iter()
        .map(|fam| fam.label().clone())
        .collect();
    let dists = probs.require(&labels, suite.dim())?;
    Ok(suite
        .labels()
        .into_iter()
        .zip(dists)
        .map(|(a, dist)| {
            let coeffs = f
                .elements()
                .map(|x| {
                    f.elements()
                        .zip(dist)
                        .map(|(y, &p)| f.bichar_unchecked(&x, &y).conj() * p)
                        .sum()
                })
                .collect();
            (a, coeffs)
        })
        .collect())
}

/// `d^{-1} sum_{a,x,y} conj<x,y> p_{a,y} W(a,x) - I`.
pub fn reconstruct_weyl(probs: &ProbabilityTable, suite: &MubSuite) -> Result<CMatrix> {
    let f = suite.field();
    let d = suite.dim();
    let mut acc = CMatrix::zeros(d, d);
    for (a, coeffs) in weyl_coefficients(probs, suite)? {
        for (x, c) in f.elements().zip(coeffs) {
            acc.add_scaled(c, &weyl_w(f, &a, &x)?.mat);
        }
    }
    let mut out = acc.scale_real(1.0 / d as f64);
    out.add_scaled(real(-1.0), &CMatrix::identity(d));
    Ok(out)
}

/// Tensor product of prime-power factors, one suite per factor.
#[derive(Clone, Debug)]
pub struct CompositeSystem {
    suites: Vec<MubSuite>,
}

impl CompositeSystem {
    /// Split `d` into prime powers (ascending prime) and build each factor's suite.
    pub fn new(d: u64) -> Result<Self> {
        let fact = factorize(d)?;
        let limit = dimension_limit();
        if d > limit {
            return Err(Error::DimensionLimit { dim: d, limit });
        }
        Self::from_factorization(&fact)
    }

    pub fn from_factorization(fact: &PrimePowerFactorization) -> Result<Self> {
        let fields = fact
            .prime_powers()
            .into_iter()
            .map(FieldSpec::for_order)
            .collect::<Result<Vec<_>>>()?;
        Self::from_fields(fields)
    }

    /// Factors must have strictly ascending characteristic.
    pub fn from_fields(fields: Vec<FieldSpec>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::InvalidConfig(
                "composite system needs at least one factor".into(),
            ));
        }
        if fields
            .windows(2)
            .any(|w| w[0].characteristic() >= w[1].characteristic())
        {
            return Err(Error::InvalidConfig(
                "factors must be ordered by strictly ascending prime".into(),
            ));
        }
        let suites = fields.iter().map(mub_suite).collect::<Result<Vec<_>>>()?;
        Ok(Self { suites })
    }

    pub fn slots(&self) -> usize {
        self.suites.len()
    }

    /// Per-slot dimensions `d_i`.
    pub fn dims(&self) -> Vec<usize> {
        self.suites.iter().map(MubSuite::dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn suite(&self, slot: usize) -> &MubSuite {
        &self.suites[slot]
    }

    pub fn fields(&self) -> Vec<FieldSpec> {
        self.suites.iter().map(|s| s.field().clone()).collect()
    }

    /// Number of product settings `prod (d_i + 1)`.
    pub fn setting_count(&self) -> usize {
        self.dims().iter().map(|d| d + 1).product()
    }

    /// All setting tuples, slot 0 most significant.
    pub fn settings(&self) -> Vec<Vec<ExtendedLabel>> {
        let per_slot: Vec<Vec<ExtendedLabel>> = self.suites.iter().map(MubSuite::labels).collect();
        mixed_radix(&per_slot.iter().map(Vec::len).collect::<Vec<_>>())
            .into_iter()
            .map(|digits| {
                digits
                    .iter()
                    .enumerate()
                    .map(|(slot, &k)| per_slot[slot][k].clone())
                    .collect()
            })
            .collect()
    }

    pub fn setting_labels(&self) -> Vec<Label> {
        self.settings().into_iter().map(Label::Product).collect()
    }

    /// The product measurement for one setting tuple. Outcomes are tuples
    /// `(y_1, ..., y_n)`, slot 0 most significant.
    pub fn product_family(&self, setting: &[ExtendedLabel]) -> Result<MeasurementFamily> {
        let per_slot = self.slot_families(setting)?;
        let projectors = mixed_radix(&self.dims())
            .into_iter()
            .map(|ys| {
                kron_all(
                    ys.iter()
                        .enumerate()
                        .map(|(slot, &y)| &per_slot[slot].projectors()[y]),
                )
            })
            .collect();
        Ok(MeasurementFamily::new_unchecked(
            Label::Product(setting.to_vec()),
            projectors,
        ))
    }

    pub fn product_families(&self) -> Result<Vec<MeasurementFamily>> {
        self.settings()
            .iter()
            .map(|s| self.product_family(s))
            .collect()
    }

    fn slot_families(&self, setting: &[ExtendedLabel]) -> Result<Vec<&MeasurementFamily>> {
        if setting.len() != self.slots() {
            return Err(Error::InvalidLabel(format!(
                "setting has {} slots, system has {}",
                setting.len(),
                self.slots()
            )));
        }
        setting
            .iter()
            .zip(&self.suites)
            .map(|(a, suite)| {
                suite.family(a).ok_or_else(|| {
                    Error::InvalidLabel(format!("{a} is not a label of F_{}", suite.dim()))
                })
            })
            .collect()
    }
}

/// All digit tuples for the given radices, first digit most significant.
pub(crate) fn mixed_radix(radices: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = radices.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut digits = vec![0; radices.len()];
            for (slot, &r) in radices.iter().enumerate().rev() {
                digits[slot] = idx % r;
                idx /= r;
            }
            digits
        })
        .collect()
}

/// `I (x) ... (x) X (x) ... (x) I` with `X` in position `slot`.
pub fn ampliate(x: &CMatrix, slot: usize, dims: &[usize]) -> Result<CMatrix> {
    if slot >= dims.len() {
        return Err(Error::SlotOutOfRange {
            slot,
            slots: dims.len(),
        });
    }
    if x.rows() != dims[slot] || x.cols() != dims[slot] {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator in a slot of dimension {}",
            x.rows(),
            x.cols(),
            dims[slot]
        )));
    }
    let before: usize = dims[..slot].iter().product();
    let after: usize = dims[slot + 1..].iter().product();
    Ok(kron(
        &kron(&CMatrix::identity(before), x),
        &CMatrix::identity(after),
    ))
}

/// The orthogonal operator basis of products of ampliated Weyl operators:
/// the identity, then for each nonempty slot subset (bitmask order) every
/// choice of `W(a_i, x_i)` with `x_i != 0` on the active slots.
pub fn product_basis_f(sys: &CompositeSystem) -> Result<Vec<CMatrix>> {
    let n = sys.slots();
    // Per slot: the identity, and all nontrivial W(a, x).
    let mut per_slot: Vec<Vec<CMatrix>> = Vec::with_capacity(n);
    for slot in 0..n {
        let suite = sys.suite(slot);
        let f = suite.field();
        let mut ops = Vec::new();
        for a in suite.labels() {
            for x in f.elements().filter(|x| !x.is_zero()) {
                ops.push(weyl_w(f, &a, &x)?.mat);
            }
        }
        per_slot.push(ops);
    }
    let dims = sys.dims();
    let identities: Vec<CMatrix> = dims.iter().map(|&d| CMatrix::identity(d)).collect();
    let mut out = vec![CMatrix::identity(sys.dim())];
    for mask in 1usize..(1 << n) {
        let active: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let radices: Vec<usize> = active.iter().map(|&i| per_slot[i].len()).collect();
        for choice in mixed_radix(&radices) {
            let factors: Vec<&CMatrix> = (0..n)
                .map(|slot| match active.iter().position(|&s| s == slot) {
                    Some(k) => &per_slot[slot][choice[k]],
                    None => &identities[slot],
                })
                .collect();
            out.push(kron_all(factors));
        }
    }
    Ok(out)
}

/// How [`s_rho`] treats slot marginals that differ across the ignored settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MarginalPolicy {
    /// Average, but reject spreads above [`MARGINAL_TOL`].
    #[default]
    Strict,
    /// Average (sampled tables).
    Average,
}

/// `S(J)`: marginal probabilities of the outcomes on the slots in `J`, summed
/// against the ampliated product projectors, over all settings of those slots.
/// `S(empty) = I`.
pub fn s_rho(
    slots: &[usize],
    probs: &ProbabilityTable,
    sys: &CompositeSystem,
    policy: MarginalPolicy,
) -> Result<CMatrix> {
    let n = sys.slots();
    let d = sys.dim();
    if let Some(&slot) = slots.iter().find(|&&s| s >= n) {
        return Err(Error::SlotOutOfRange { slot, slots: n });
    }
    let mut active: Vec<usize> = slots.to_vec();
    active.sort_unstable();
    active.dedup();

    let labels = sys.setting_labels();
    let dists = probs.require(&labels, d)?;
    if active.is_empty() {
        return Ok(CMatrix::identity(d));
    }

    let dims = sys.dims();
    let label_radices: Vec<usize> = dims.iter().map(|d| d + 1).collect();
    let sub_label_radices: Vec<usize> = active.iter().map(|&i| label_radices[i]).collect();
    let sub_outcome_radices: Vec<usize> = active.iter().map(|&i| dims[i]).collect();
    let sub_settings: usize = sub_label_radices.iter().product();
    let sub_outcomes: usize = sub_outcome_radices.iter().product();

    let fold = |digits: &[usize], radices: &[usize]| {
        active
            .iter()
            .zip(radices)
            .fold(0usize, |acc, (&slot, &r)| acc * r + digits[slot])
    };

    // Marginal distribution of each full setting, grouped by its restriction.
    let outcome_digits = mixed_radix(&dims);
    let mut groups: Vec<Vec<Vec<f64>>> = vec![Vec::new(); sub_settings];
    for (setting_digits, dist) in mixed_radix(&label_radices).iter().zip(&dists) {
        let mut marg = vec![0.0; sub_outcomes];
        for (ys, &p) in outcome_digits.iter().zip(dist.iter()) {
            marg[fold(ys, &sub_outcome_radices)] += p;
        }
        groups[fold(setting_digits, &sub_label_radices)].push(marg);
    }

    let mut means = Vec::with_capacity(sub_settings);
    for (g, members) in groups.iter().enumerate() {
        let count = members.len() as f64;
        let mean: Vec<f64> = (0..sub_outcomes)
            .map(|k| members.iter().fold(0.0, |acc, m| acc + m[k]) / count)
            .collect();
        if policy == MarginalPolicy::Strict {
            let spread = members
                .iter()
                .flat_map(|m| m.iter().zip(&mean).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if spread > MARGINAL_TOL {
                return Err(Error::InconsistentTable(format!(
                    "marginal on slots {active:?} for restricted setting #{g} varies by {spread:.3e}"
                )));
            }
        }
        means.push(mean);
    }

    let slot_labels: Vec<Vec<ExtendedLabel>> = (0..n).map(|i| sys.suite(i).labels()).collect();
    let identities: Vec<CMatrix> = dims.iter().map(|&d| CMatrix::identity(d)).collect();
    let mut acc = CMatrix::zeros(d, d);
    for (g, a_digits) in mixed_radix(&sub_label_radices).iter().enumerate() {
        let fams: Vec<&MeasurementFamily> = active
            .iter()
            .zip(a_digits)
            .map(|(&slot, &k)| {
                sys.suite(slot)
                    .family(&slot_labels[slot][k])
                    .expect("suite has a family for every label")
            })
            .collect();
        for (o, y_digits) in mixed_radix(&sub_outcome_radices).iter().enumerate() {
            let factors: Vec<&CMatrix> = (0..n)
                .map(|slot| match active.iter().position(|&s| s == slot) {
                    Some(k) => &fams[k].projectors()[y_digits[k]],
                    None => &identities[slot],
                })
                .collect();
            acc.add_scaled(real(means[g][o]), &kron_all(factors));
        }
    }
    Ok(acc)
}

/// `sum_{J subset of slots} (-1)^{n-|J|} S(J)` with strict marginals.
pub fn reconstruct_composite(probs: &ProbabilityTable, sys: &CompositeSystem) -> Result<CMatrix> {
    reconstruct_composite_with(probs, sys, MarginalPolicy::Strict)
}

pub fn reconstruct_composite_with(
    probs: &ProbabilityTable,
    sys: &CompositeSystem,
    policy: MarginalPolicy,
) -> Result<CMatrix> {
    let n = sys.slots();
    let d = sys.dim();
    let mut acc = CMatrix::zeros(d, d);
    for mask in 0usize..(1 << n) {
        let slots: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sign = if (n - slots.len()).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        acc.add_scaled(real(sign), &s_rho(&slots, probs, sys, policy)?);
    }
    Ok(acc)
}

/// Either measurement layout, chosen from the dimension.
#[derive(Clone, Debug)]
pub enum System {
    PrimePower(MubSuite),
    Composite(CompositeSystem),
}

impl System {
    /// Prime powers get the `d + 1` suite; everything else the product layout.
    pub fn for_dimension(d: u64) -> Result<Self> {
        let fact = factorize(d)?;
        if fact.is_prime_power() {
            Ok(System::PrimePower(MubSuite::for_dimension(d)?))
        } else {
            Ok(System::Composite(CompositeSystem::new(d)?))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            System::PrimePower(s) => s.dim(),
            System::Composite(c) => c.dim(),
        }
    }

    /// Measurement families in setting order.
    pub fn families(&self) -> Result<Vec<MeasurementFamily>> {
        match self {
            System::PrimePower(s) => Ok(s.families().to_vec()),
            System::Composite(c) => c.product_families(),
        }
    }

    /// One field for a prime power, one per slot otherwise.
    pub fn fields(&self) -> Vec<FieldSpec> {
        match self {
            System::PrimePower(s) => vec![s.field().clone()],
            System::Composite(c) => c.fields(),
        }
    }

    pub fn setting_labels(&self) -> Vec<Label> {
        match self {
            System::PrimePower(s) => s.families().iter().map(|f| f.label().clone()).collect(),
            System::Composite(c) => c.setting_labels(),
        }
    }

    pub fn reconstruct(&self, probs: &ProbabilityTable, policy: MarginalPolicy) -> Result<CMatrix> {
        match self {
            System::PrimePower(s) => reconstruct_prime_power(probs, s),
            System::Composite(c) => reconstruct_composite_with(probs, c, policy),
        }
    }
}
