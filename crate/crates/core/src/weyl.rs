// SPDX-License-Identifier: Apache-2.0

//! Weyl operators on `L^2(F_d)`.
//!
//! `U_a |x> = |a + x>` and `V_b |x> = <b, x> |x>`, with basis vectors `|x>`
//! ordered by the canonical element index. The labeled operators are
//! `W(a, x) = alpha(a, x) U_x V_{ax}` for `a` in the field and `W(inf, x) = V_x`;
//! the phase `alpha` makes `x -> W(a, x)` a representation of the additive group.
//!
//! In odd characteristic `alpha(a, x) = chi(a z)` with
//! `z = sum_{i<j} s_i s_j e_i e_j + sum_j s_j (s_j - 1)/2 e_j^2`. In characteristic
//! 2 the half-integer term is not defined mod 2, so each `e_j^2` contributes a
//! fourth root of unity `gamma_j(a) in {1, i}` with `gamma_j(a)^2 = chi(a e_j^2)`
//! instead. [`PhaseRule::Literal`] keeps the integer formula for every `p`; it
//! exists only to demonstrate that the group law then breaks for `p = 2`.

use std::fmt;

use num_complex::Complex64;

use crate::cmat::CMatrix;
use crate::error::Result;
use crate::gf::{FieldElement, FieldSpec};

/// A label in `F_d` extended by a point at infinity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtendedLabel {
    Finite(FieldElement),
    Infinity,
}

impl ExtendedLabel {
    pub fn is_infinity(&self) -> bool {
        matches!(self, ExtendedLabel::Infinity)
    }
}

impl From<FieldElement> for ExtendedLabel {
    fn from(x: FieldElement) -> Self {
        ExtendedLabel::Finite(x)
    }
}

impl fmt::Display for ExtendedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedLabel::Finite(x) => write!(f, "{x}"),
            ExtendedLabel::Infinity => write!(f, "inf"),
        }
    }
}

/// All `d + 1` labels: field elements in canonical order, then infinity.
pub fn extended_labels(field: &FieldSpec) -> Vec<ExtendedLabel> {
    field
        .elements()
        .map(ExtendedLabel::Finite)
        .chain(std::iter::once(ExtendedLabel::Infinity))
        .collect()
}

/// How `alpha(a, x)` treats the diagonal terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PhaseRule {
    /// Integer `s(s-1)/2` in odd characteristic, fourth roots of unity for `p = 2`.
    #[default]
    Corrected,
    /// Integer `s(s-1)/2` everywhere. Not a group law in characteristic 2.
    Literal,
}

/// A labeled operator `W(a, x)` with its matrix.
#[derive(Clone, Debug)]
pub struct WeylOperator {
    pub a: ExtendedLabel,
    pub x: FieldElement,
    pub mat: CMatrix,
}

/// The shift `U_a`.
pub fn shift_u(field: &FieldSpec, a: &FieldElement) -> Result<CMatrix> {
    field.check(a)?;
    let d = field.order();
    let mut m = CMatrix::zeros(d, d);
    for (col, x) in field.elements().enumerate() {
        let row = field.index_of(&field.add_unchecked(a, &x))?;
        m[(row, col)] = Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

/// The clock `V_b`, diagonal with entries `<b, x>`.
pub fn clock_v(field: &FieldSpec, b: &FieldElement) -> Result<CMatrix> {
    field.check(b)?;
    let diag: Vec<Complex64> = field
        .elements()
        .map(|x| field.bichar_unchecked(b, &x))
        .collect();
    Ok(CMatrix::from_diag(&diag))
}

/// The phase `alpha(a, x)` under the default rule.
pub fn alpha(field: &FieldSpec, a: &FieldElement, x: &FieldElement) -> Result<Complex64> {
    alpha_with(field, a, x, PhaseRule::Corrected)
}

pub fn alpha_with(
    field: &FieldSpec,
    a: &FieldElement,
    x: &FieldElement,
    rule: PhaseRule,
) -> Result<Complex64> {
    field.check(a)?;
    field.check(x)?;
    let p = field.characteristic();
    let r = field.degree();
    let s = x.coeffs();
    let prod = field.basis_products();
    // chi exponent of a * e_i * e_j, in Z/p.
    let ce =
        |i: usize, j: usize| u64::from(field.chi_exponent(&field.mul_unchecked(a, &prod[i][j])));

    if p == 2 && rule == PhaseRule::Corrected {
        // Exponent of i, mod 4.
        let mut e: u64 = 0;
        for j in 0..r {
            if s[j] == 1 && ce(j, j) == 1 {
                e += 1;
            }
            for i in 0..j {
                e += 2 * u64::from(s[i] * s[j]) * ce(i, j);
            }
        }
        const POWERS_OF_I: [Complex64; 4] = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        return Ok(POWERS_OF_I[(e % 4) as usize]);
    }

    let p64 = u64::from(p);
    let mut e: u64 = 0;
    for j in 0..r {
        let sj = u64::from(s[j]);
        // s(s-1)/2 is computed over the integers then reduced.
        let half = (sj * sj.saturating_sub(1) / 2) % p64;
        e += half * ce(j, j);
        for (i, &si) in s[..j].iter().enumerate() {
            e += (u64::from(si) * sj % p64) * ce(i, j);
        }
        e %= p64;
    }
    Ok(field.root_of_unity(e))
}

/// `W(a, x)` under the default phase rule.
pub fn weyl_w(field: &FieldSpec, a: &ExtendedLabel, x: &FieldElement) -> Result<WeylOperator> {
    weyl_w_with(field, a, x, PhaseRule::Corrected)
}

pub fn weyl_w_with(
    field: &FieldSpec,
    a: &ExtendedLabel,
    x: &FieldElement,
    rule: PhaseRule,
) -> Result<WeylOperator> {
    field.check(x)?;
    let mat = match a {
        ExtendedLabel::Infinity => clock_v(field, x)?,
        ExtendedLabel::Finite(a_el) => {
            let phase = alpha_with(field, a_el, x, rule)?;
            let ax = field.mul(a_el, x)?;
            // alpha U_x V_{ax} |y> = alpha <ax, y> |x + y>
            let d = field.order();
            let mut m = CMatrix::zeros(d, d);
            for (col, y) in field.elements().enumerate() {
                let row = field.index_of(&field.add_unchecked(x, &y))?;
                m[(row, col)] = phase * field.bichar_unchecked(&ax, &y);
            }
            m
        }
    };
    Ok(WeylOperator {
        a: a.clone(),
        x: x.clone(),
        mat,
    })
}

/// The `d^2` operators `{I} u {W(a, x) : a in F_d u {inf}, x != 0}`.
///
/// The identity comes first and is labeled `W(inf, 0)`.
pub fn error_basis(field: &FieldSpec) -> Result<Vec<WeylOperator>> {
    let mut out = vec![weyl_w(field, &ExtendedLabel::Infinity, &field.zero())?];
    for a in extended_labels(field) {
        for x in field.elements().filter(|x| !x.is_zero()) {
            out.push(weyl_w(field, &a, &x)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat::hs_inner;
    use crate::gf::make_field;
    use crate::TOL;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fields(max: usize) -> Vec<FieldSpec> {
        (2..=max as u64)
            .filter_map(|q| FieldSpec::for_order(q).ok())
            .collect()
    }

    #[test]
    fn shift_and_clock_examples() {
        let f2 = make_field(2, 1).unwrap();
        assert_eq!(shift_u(&f2, &f2.zero()).unwrap(), CMatrix::identity(2));
        assert_eq!(
            shift_u(&f2, &f2.one()).unwrap(),
            CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
        );
        assert_eq!(clock_v(&f2, &f2.zero()).unwrap(), CMatrix::identity(2));
        assert_eq!(
            clock_v(&f2, &f2.one()).unwrap(),
            CMatrix::from_real_diag(&[1.0, -1.0])
        );

        let f3 = make_field(3, 1).unwrap();
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let v1 = clock_v(&f3, &f3.one()).unwrap();
        assert!(v1.max_abs_diff(&CMatrix::from_diag(&[c(1.0, 0.0), w, w * w])) < TOL);
    }

    #[test]
    fn shift_adjoint_is_negative_shift() {
        for f in fields(9) {
            for a in f.elements() {
                let u = shift_u(&f, &a).unwrap();
                assert_eq!(u.adjoint(), shift_u(&f, &f.neg(&a).unwrap()).unwrap());
            }
        }
    }

    #[test]
    fn alpha_examples() {
        for f in fields(9) {
            for a in f.elements() {
                assert_eq!(alpha(&f, &a, &f.zero()).unwrap(), c(1.0, 0.0));
            }
        }
        let f3 = make_field(3, 1).unwrap();
        let two = f3.element(&[2]).unwrap();
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert!((alpha(&f3, &f3.one(), &two).unwrap() - w).norm() < TOL);
        let f2 = make_field(2, 1).unwrap();
        assert_eq!(alpha(&f2, &f2.one(), &f2.one()).unwrap(), c(0.0, 1.0));
        // The literal rule gives 1 here, which breaks W(1,1)^2 = I.
        assert_eq!(
            alpha_with(&f2, &f2.one(), &f2.one(), PhaseRule::Literal).unwrap(),
            c(1.0, 0.0)
        );
    }

    #[test]
    fn weyl_w_examples() {
        let f2 = make_field(2, 1).unwrap();
        let one = ExtendedLabel::Finite(f2.one());
        let w = weyl_w(&f2, &one, &f2.one()).unwrap();
        let y = CMatrix::from_vec(
            2,
            2,
            vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        )
        .unwrap();
        assert!(w.mat.max_abs_diff(&y) < TOL);
        assert!((&w.mat * &w.mat).max_abs_diff(&CMatrix::identity(2)) < TOL);

        for f in fields(9) {
            for a in extended_labels(&f) {
                let w0 = weyl_w(&f, &a, &f.zero()).unwrap();
                assert!(w0.mat.max_abs_diff(&CMatrix::identity(f.order())) < TOL);
            }
            for x in f.elements() {
                let w = weyl_w(&f, &ExtendedLabel::Infinity, &x).unwrap();
                assert_eq!(w.mat, clock_v(&f, &x).unwrap());
            }
        }
    }

    #[test]
    fn weyl_w_matches_matrix_product_definition() {
        for f in fields(9) {
            for a in f.elements() {
                for x in f.elements() {
                    let ax = f.mul(&a, &x).unwrap();
                    let expected = (&shift_u(&f, &x).unwrap() * &clock_v(&f, &ax).unwrap())
                        .scale(alpha(&f, &a, &x).unwrap());
                    let w = weyl_w(&f, &ExtendedLabel::Finite(a.clone()), &x).unwrap();
                    assert!(w.mat.max_abs_diff(&expected) < TOL);
                }
            }
        }
    }

    #[test]
    fn weyl_operators_are_unitary_and_traceless() {
        for f in fields(9) {
            let d = f.order();
            for a in extended_labels(&f) {
                for x in f.elements() {
                    let w = weyl_w(&f, &a, &x).unwrap();
                    let ww = &w.mat * &w.mat.adjoint();
                    assert!(ww.max_abs_diff(&CMatrix::identity(d)) < TOL);
                    if !x.is_zero() {
                        assert!(w.mat.trace().norm() < TOL);
                    }
                }
            }
        }
    }

    #[test]
    fn weyl_relations() {
        for f in fields(9) {
            for a in f.elements() {
                let ua = shift_u(&f, &a).unwrap();
                let va = clock_v(&f, &a).unwrap();
                for b in f.elements() {
                    let ub = shift_u(&f, &b).unwrap();
                    let vb = clock_v(&f, &b).unwrap();
                    let ab = f.add(&a, &b).unwrap();
                    assert!((&ua * &ub).max_abs_diff(&shift_u(&f, &ab).unwrap()) < TOL);
                    assert!((&va * &vb).max_abs_diff(&clock_v(&f, &ab).unwrap()) < TOL);
                    let lhs = &vb * &ua;
                    let rhs = (&ua * &vb).scale(f.bichar(&a, &b).unwrap());
                    assert!(lhs.max_abs_diff(&rhs) < TOL);
                }
            }
        }
    }

    #[test]
    fn group_law_all_supported_small_fields() {
        for f in fields(16) {
            for a in extended_labels(&f) {
                let ws: Vec<_> = f
                    .elements()
                    .map(|x| weyl_w(&f, &a, &x).unwrap().mat)
                    .collect();
                for (i, x) in f.elements().enumerate() {
                    for (j, y) in f.elements().enumerate() {
                        let k = f.index_of(&f.add(&x, &y).unwrap()).unwrap();
                        let dev = (&ws[i] * &ws[j]).max_abs_diff(&ws[k]);
                        assert!(dev <= TOL, "d={} a={a} x={x} y={y}: {dev}", f.order());
                    }
                }
            }
        }
    }

    #[test]
    fn literal_phase_breaks_group_law_in_characteristic_two() {
        let f2 = make_field(2, 1).unwrap();
        let a = ExtendedLabel::Finite(f2.one());
        let w = weyl_w_with(&f2, &a, &f2.one(), PhaseRule::Literal).unwrap();
        let sq = &w.mat * &w.mat;
        assert!(sq.max_abs_diff(&CMatrix::identity(2).scale_real(-1.0)) < TOL);
        // Odd characteristic is unaffected by the rule.
        let f9 = make_field(3, 2).unwrap();
        for a in f9.elements() {
            for x in f9.elements() {
                assert_eq!(
                    alpha_with(&f9, &a, &x, PhaseRule::Literal).unwrap(),
                    alpha(&f9, &a, &x).unwrap()
                );
            }
        }
    }

    #[test]
    fn error_basis_is_orthogonal() {
        for (q, expected) in [(2u64, 4usize), (3, 9), (4, 16), (5, 25), (8, 64)] {
            let f = FieldSpec::for_order(q).unwrap();
            let basis = error_basis(&f).unwrap();
            assert_eq!(basis.len(), expected);
            for (i, w) in basis.iter().enumerate() {
                if i > 0 {
                    assert!(w.mat.trace().norm() < TOL);
                }
                for (j, v) in basis.iter().enumerate() {
                    let g = hs_inner(&w.mat, &v.mat).unwrap();
                    let e = if i == j { q as f64 } else { 0.0 };
                    assert!((g - e).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn weyl_words_are_orthogonal() {
        for f in fields(5) {
            let d = f.order() as f64;
            let words: Vec<_> = f
                .elements()
                .flat_map(|a| f.elements().map(move |b| (a.clone(), b)))
                .map(|(a, b)| &shift_u(&f, &a).unwrap() * &clock_v(&f, &b).unwrap())
                .collect();
            for (i, x) in words.iter().enumerate() {
                for (j, y) in words.iter().enumerate() {
                    let e = if i == j { d } else { 0.0 };
                    assert!((hs_inner(x, y).unwrap() - e).norm() < TOL);
                }
            }
        }
    }

    #[test]
    fn mismatched_field_is_rejected() {
        let f4 = make_field(2, 2).unwrap();
        let f9 = make_field(3, 2).unwrap();
        assert!(shift_u(&f4, &f9.one()).is_err());
        assert!(weyl_w(&f4, &ExtendedLabel::Finite(f9.one()), &f4.one()).is_err());
    }
}
