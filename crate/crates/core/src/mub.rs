// SPDX-License-Identifier: Apache-2.0

//! Elementary measurements, the `d + 1` projector families built from the
//! Weyl operators, and tests for weak and strong mutual unbiasedness.
//!
//! Two measurements `{P_i}` and `{Q_j}` are strongly unbiased when every
//! overlap `Tr P_i Q_j` equals `1/d`, and weakly unbiased when their abelian
//! algebras meet only in the scalars. The weak property is decided two ways:
//! a determinant of a Schur complement built from
//! `L = [Tr (P_i - P_0)(Q_j - Q_0)]`, and an independent rank computation on
//! the Gram matrix of the `2(d - 1)` differences.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cmat::{hs_inner, trace_of_product, CMatrix};
use crate::error::{Error, Result};
use crate::gf::{FieldElement, FieldSpec};
use crate::weyl::{extended_labels, weyl_w, ExtendedLabel};
use crate::TOL;

/// Tolerance on `|Tr P_i Q_j - 1/d|` for the strong test.
pub const SMUB_TOL: f64 = 1e-9;

/// Determinant threshold `tau_w` for the weak test.
pub const WMUB_DET_THRESHOLD: f64 = 1e-9;

/// Singular values of the Gram matrix above this count toward its rank.
pub const ORACLE_RANK_TOL: f64 = 1e-8;

/// Identifies a measurement setting.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// One family `M_a` of a prime-power suite.
    Single(ExtendedLabel),
    /// A product setting `(a_1, ..., a_n)` of a composite system.
    Product(Vec<ExtendedLabel>),
    /// A user-supplied measurement.
    Name(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Single(a) => write!(f, "{a}"),
            Label::Product(parts) => {
                write!(f, "(")?;
                for (i, a) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Label::Name(s) => write!(f, "{s}"),
        }
    }
}

/// `d` mutually orthogonal rank-one projectors summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementFamily {
    label: Label,
    projectors: Vec<CMatrix>,
}

impl MeasurementFamily {
    /// Validate and wrap a family. The error names the first violated property.
    pub fn new(label: Label, projectors: Vec<CMatrix>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidMeasurement(format!("{label}: {msg}")));
        let d = projectors.len();
        if d < 2 {
            return bad(format!("needs at least 2 projectors, found {d}"));
        }
        for (i, p) in projectors.iter().enumerate() {
            if p.rows() != d || p.cols() != d {
                return bad(format!(
                    "projector {i} is {}x{}, expected {d}x{d} (one projector per outcome)",
                    p.rows(),
                    p.cols()
                ));
            }
            let dev = p.hermitian_deviation();
            if dev > TOL {
                return bad(format!(
                    "projector {i} is not self-adjoint (deviation {dev:.3e})"
                ));
            }
            let dev = (p * p).max_abs_diff(p);
            if dev > TOL {
                return bad(format!(
                    "projector {i} is not idempotent (deviation {dev:.3e})"
                ));
            }
            let tr = p.trace();
            if (tr - 1.0).norm() > TOL {
                return bad(format!(
                    "projector {i} is not rank one (trace {:.6})",
                    tr.re
                ));
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                let dev = (&projectors[i] * &projectors[j]).max_abs();
                if dev > TOL {
                    return bad(format!(
                        "projectors {i} and {j} are not orthogonal (deviation {dev:.3e})"
                    ));
                }
            }
        }
        let mut sum = CMatrix::zeros(d, d);
        for p in &projectors {
            sum += p;
        }
        let dev = sum.max_abs_diff(&CMatrix::identity(d));
        if dev > TOL {
            return bad(format!(
                "projectors do not resolve the identity (deviation {dev:.3e})"
            ));
        }
        Ok(Self { label, projectors })
    }

    pub(crate) fn new_unchecked(label: Label, projectors: Vec<CMatrix>) -> Self {
        Self { label, projectors }
    }

    /// The family `{ U P_j U^dagger }` for an orthonormal basis given as the
    /// columns of a unitary.
    pub fn from_unitary(label: Label, u: &CMatrix) -> Result<Self> {
        let projectors = (0..u.cols())
            .map(|j| CMatrix::outer(&u.column(j)))
            .collect();
        Self::new(label, projectors)
    }

    pub fn label(&self) -> &Label {
        &self.label
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.projectors.len()
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }
}

/// `P(a, y) = d^{-1} sum_x conj<x, y> W(a, x)`.
pub fn projector_p(field: &FieldSpec, a: &ExtendedLabel, y: &FieldElement) -> Result<CMatrix> {
    field.check(y)?;
    let ws = field
        .elements()
        .map(|x| weyl_w(field, a, &x).map(|w| w.mat))
        .collect::<Result<Vec<_>>>()?;
    Ok(character_sum(field, &ws, y))
}

fn character_sum(field: &FieldSpec, ws: &[CMatrix], y: &FieldElement) -> CMatrix {
    let d = field.order();
    let mut acc = CMatrix::zeros(d, d);
    for (x, w) in field.elements().zip(ws) {
        acc.add_scaled(field.bichar_unchecked(&x, y).conj(), w);
    }
    acc.scale_real(1.0 / d as f64)
}

/// `M_a = {P(a, y) : y in F_d}`, outcomes in canonical element order.
pub fn measurement_family(field: &FieldSpec, a: &ExtendedLabel) -> Result<MeasurementFamily> {
    if let ExtendedLabel::Finite(a) = a {
        field.check(a)?;
    }
    let ws = field
        .elements()
        .map(|x| weyl_w(field, a, &x).map(|w| w.mat))
        .collect::<Result<Vec<_>>>()?;
    let projectors = field
        .elements()
        .map(|y| character_sum(field, &ws, &y))
        .collect();
    Ok(MeasurementFamily::new_unchecked(
        Label::Single(a.clone()),
        projectors,
    ))
}

/// The `d + 1` pairwise strongly unbiased measurements over a field.
#[derive(Clone, Debug)]
pub struct MubSuite {
    field: FieldSpec,
    families: Vec<MeasurementFamily>,
}

/// Build all `d + 1` families, ordered as [`extended_labels`].
pub fn mub_suite(field: &FieldSpec) -> Result<MubSuite> {
    let families = extended_labels(field)
        .par_iter()
        .map(|a| measurement_family(field, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(MubSuite {
        field: field.clone(),
        families,
    })
}

impl MubSuite {
    /// Suite for a prime-power dimension.
    pub fn for_dimension(d: u64) -> Result<Self> {
        mub_suite(&FieldSpec::for_order(d)?)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn families(&self) -> &[MeasurementFamily] {
        &self.families
    }

    pub fn dim(&self) -> usize {
        self.field.order()
    }

    pub fn family(&self, a: &ExtendedLabel) -> Option<&MeasurementFamily> {
        self.families
            .iter()
            .find(|f| matches!(f.label(), Label::Single(l) if l == a))
    }

    pub fn labels(&self) -> Vec<ExtendedLabel> {
        extended_labels(&self.field)
    }
}

fn same_dim(m: &MeasurementFamily, n: &MeasurementFamily) -> Result<usize> {
    if m.dim() != n.dim() {
        return Err(Error::DimensionMismatch(format!(
            "measurements of dimension {} and {}",
            m.dim(),
            n.dim()
        )));
    }
    Ok(m.dim())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmubReport {
    pub is_smub: bool,
    pub max_deviation: f64,
}

/// Strong test: `max |Tr P_i Q_j - 1/d| <= SMUB_TOL`.
pub fn check_smub(m: &MeasurementFamily, n: &MeasurementFamily) -> Result<SmubReport> {
    let d = same_dim(m, n)?;
    let target = 1.0 / d as f64;
    let mut max_deviation: f64 = 0.0;
    for p in m.projectors() {
        for q in n.projectors() {
            let t = trace_of_product(p, q)?;
            max_deviation = max_deviation.max((t - target).norm());
        }
    }
    Ok(SmubReport {
        is_smub: max_deviation <= SMUB_TOL,
        max_deviation,
    })
}

/// `L = [Tr (P_i - P_0)(Q_j - Q_0)]` for `i, j = 1..d-1`, as a real matrix.
pub fn overlap_l(m: &MeasurementFamily, n: &MeasurementFamily) -> Result<CMatrix> {
    let d = same_dim(m, n)?;
    let dp: Vec<CMatrix> = m.projectors()[1..]
        .iter()
        .map(|p| p - &m.projectors()[0])
        .collect();
    let dq: Vec<CMatrix> = n.projectors()[1..]
        .iter()
        .map(|q| q - &n.projectors()[0])
        .collect();
    let mut l = CMatrix::zeros(d - 1, d - 1);
    for (i, a) in dp.iter().enumerate() {
        for (j, b) in dq.iter().enumerate() {
            l[(i, j)] = Complex64::new(trace_of_product(a, b)?.re, 0.0);
        }
    }
    Ok(l)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WmubReport {
    pub is_wmub: bool,
    pub det_value: f64,
}

/// Weak test via `det(I + J + d^{-1} L J L^dagger - L L^dagger) > tau_w`.
///
/// The matrix is the Schur complement of a Gram matrix, so the determinant is
/// nonnegative up to round-off; values in `[0, tau_w]` are reported as not
/// weakly unbiased with the raw value attached.
pub fn check_wmub_det(m: &MeasurementFamily, n: &MeasurementFamily) -> Result<WmubReport> {
    let d = same_dim(m, n)?;
    let k = d - 1;
    let l = overlap_l(m, n)?;
    let lt = l.adjoint();
    let ones = CMatrix::from_fn(k, k, |_, _| Complex64::new(1.0, 0.0));
    let mut b = &CMatrix::identity(k) + &ones;
    b.add_scaled(Complex64::new(1.0 / d as f64, 0.0), &(&(&l * &ones) * &lt));
    b.add_scaled(Complex64::new(-1.0, 0.0), &(&l * &lt));
    let det_value = b.hermitian_part().det_real()?;
    Ok(WmubReport {
        is_wmub: det_value > WMUB_DET_THRESHOLD,
        det_value,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormVerdict {
    Smub,
    Wmub,
    /// `||L|| >= 1`: the sufficient condition does not apply.
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormReport {
    pub verdict: NormVerdict,
    pub norm: f64,
}

/// Sufficient test: `||L|| < 1` implies weakly unbiased, `L = 0` iff strongly.
pub fn check_wmub_norm(m: &MeasurementFamily, n: &MeasurementFamily) -> Result<NormReport> {
    let norm = overlap_l(m, n)?.op_norm();
    let verdict = if norm <= SMUB_TOL {
        NormVerdict::Smub
    } else if norm < 1.0 {
        NormVerdict::Wmub
    } else {
        NormVerdict::Inconclusive
    };
    Ok(NormReport { verdict, norm })
}

/// Weak unbiasedness decided from the definition: the `2(d - 1)` operators
/// `P_i - P_0`, `Q_j - Q_0` are linearly independent iff their Gram matrix
/// has full rank.
pub fn wmub_oracle(m: &MeasurementFamily, n: &MeasurementFamily) -> Result<bool> {
    same_dim(m, n)?;
    let diffs: Vec<CMatrix> = m.projectors()[1..]
        .iter()
        .map(|p| p - &m.projectors()[0])
        .chain(n.projectors()[1..].iter().map(|q| q - &n.projectors()[0]))
        .collect();
    let k = diffs.len();
    let mut gram = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = hs_inner(&diffs[i], &diffs[j])?;
        }
    }
    let rank = gram
        .singular_values()
        .iter()
        .filter(|&&s| s > ORACLE_RANK_TOL)
        .count();
    Ok(rank == k)
}
