// SPDX-License-Identifier: Apache-2.0

//! Arithmetic in the finite field `F_{p^r}`.
//!
//! Elements are stored as `r` coordinates over `Z/p` in the polynomial basis
//! `1, t, ..., t^{r-1}`, constant term first. The field is realized modulo the
//! lexicographically smallest monic irreducible polynomial of degree `r`
//! (coefficient tuples compared from the constant term up), so the same
//! `(p, r)` always yields the same tables.
//!
//! The additive character is `chi(x) = exp(2 pi i s_1 / p)` where `s_1` is the
//! constant-term coordinate, and the pairing `<x, y> = chi(x y)` is the
//! nondegenerate symmetric bicharacter used to build the Weyl operators.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Hilbert-space dimension accepted unless overridden by [`MAX_DIM_ENV`].
pub const DEFAULT_MAX_DIM: u64 = 4096;

/// Environment variable overriding [`DEFAULT_MAX_DIM`].
pub const MAX_DIM_ENV: &str = "MUBKIT_MAX_DIM";

/// The configured dimension limit.
pub fn dimension_limit() -> u64 {
    std::env::var(MAX_DIM_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .filter(|&v| v >= 2)
        .unwrap_or(DEFAULT_MAX_DIM)
}

/// Deterministic trial-division primality test.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut k = 3u64;
    while k.saturating_mul(k) <= n {
        if n.is_multiple_of(k) {
            return false;
        }
        k += 2;
    }
    true
}

/// Decomposition `d = p_1^{m_1} ... p_n^{m_n}` with `p_1 < ... < p_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimePowerFactorization {
    factors: Vec<(u64, u32)>,
}

impl PrimePowerFactorization {
    /// `(prime, exponent)` pairs in ascending prime order.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// The prime powers `d_i = p_i^{m_i}`.
    pub fn prime_powers(&self) -> Vec<u64> {
        self.factors.iter().map(|&(p, m)| p.pow(m)).collect()
    }

    pub fn dimension(&self) -> u64 {
        self.prime_powers().iter().product()
    }

    pub fn is_prime_power(&self) -> bool {
        self.factors.len() == 1
    }
}

/// Factor `d >= 2` into prime powers.
pub fn factorize(d: u64) -> Result<PrimePowerFactorization> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let mut factors = Vec::new();
    let mut rest = d;
    let mut p = 2u64;
    while p.saturating_mul(p) <= rest {
        if rest.is_multiple_of(p) {
            let mut m = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                m += 1;
            }
            factors.push((p, m));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        factors.push((rest, 1));
    }
    Ok(PrimePowerFactorization { factors })
}

/// Fingerprint of a realized field, carried by every element so that mixing
/// elements of different fields is caught.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldId(u64);

impl FieldId {
    fn of(p: u32, modulus: &[u32]) -> Self {
        // FNV-1a over (p, modulus); only needs to be deterministic.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for w in std::iter::once(p).chain(modulus.iter().copied()) {
            for b in w.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        FieldId(h)
    }
}

/// An element of `F_{p^r}` as `r` coordinates in `[0, p)`, constant term first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    field: FieldId,
    coeffs: Vec<u32>,
}

impl FieldElement {
    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn field_id(&self) -> FieldId {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

/// A realized finite field `F_{p^r}`.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    p: u32,
    r: usize,
    modulus: Vec<u32>,
    basis_products: Vec<Vec<FieldElement>>,
    roots: Vec<Complex64>,
    id: FieldId,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.r == other.r && self.modulus == other.modulus
    }
}

impl Eq for FieldSpec {}

/// Build `F_{p^r}` with the default modulus, subject to [`dimension_limit`].
pub fn make_field(p: u64, r: u32) -> Result<FieldSpec> {
    make_field_with_limit(p, r, dimension_limit())
}

/// Build `F_{p^r}` with an explicit dimension limit.
pub fn make_field_with_limit(p: u64, r: u32, limit: u64) -> Result<FieldSpec> {
    if !is_prime(p) {
        return Err(Error::InvalidPrime(p));
    }
    if r == 0 {
        return Err(Error::InvalidDimension(1));
    }
    let order = p.checked_pow(r).unwrap_or(u64::MAX);
    if order > limit {
        return Err(Error::DimensionLimit { dim: order, limit });
    }
    let p = p as u32;
    let modulus = smallest_irreducible(p, r as usize);
    Ok(FieldSpec::build(p, modulus))
}

impl FieldSpec {
    /// The field of order `q`, which must be a prime power.
    pub fn for_order(q: u64) -> Result<Self> {
        let fact = factorize(q)?;
        if !fact.is_prime_power() {
            return Err(Error::UnsupportedDimension(q));
        }
        let (p, m) = fact.factors()[0];
        make_field(p, m)
    }

    /// Realize a field from an explicit monic irreducible modulus (constant term first).
    pub fn from_modulus(p: u64, modulus: Vec<u32>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidPrime(p));
        }
        let p32 = p as u32;
        if modulus.len() < 2 {
            return Err(Error::InvalidModulus("degree must be at least 1".into()));
        }
        if modulus.iter().any(|&c| c >= p32) {
            return Err(Error::InvalidModulus(
                "coefficients must be reduced mod p".into(),
            ));
        }
        if *modulus.last().unwrap() != 1 {
            return Err(Error::InvalidModulus("modulus must be monic".into()));
        }
        if !is_irreducible(&modulus, p32) {
            return Err(Error::InvalidModulus(format!(
                "{modulus:?} is reducible over Z/{p}"
            )));
        }
        let r = modulus.len() - 1;
        let order = p.checked_pow(r as u32).unwrap_or(u64::MAX);
        let limit = dimension_limit();
        if order > limit {
            return Err(Error::DimensionLimit { dim: order, limit });
        }
        Ok(Self::build(p32, modulus))
    }

    fn build(p: u32, modulus: Vec<u32>) -> Self {
        let r = modulus.len() - 1;
        let id = FieldId::of(p, &modulus);
        let roots = (0..p)
            .map(|k| match (p, k) {
                (_, 0) => Complex64::new(1.0, 0.0),
                (2, 1) => Complex64::new(-1.0, 0.0),
                _ => Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / p as f64),
            })
            .collect();
        let mut field = FieldSpec {
            p,
            r,
            modulus,
            basis_products: Vec::new(),
            roots,
            id,
        };
        let basis: Vec<FieldElement> = (0..r).map(|i| field.basis(i)).collect();
        field.basis_products = basis
            .iter()
            .map(|ei| basis.iter().map(|ej| field.mul_unchecked(ei, ej)).collect())
            .collect();
        field
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.r
    }

    /// Number of elements `p^r`.
    pub fn order(&self) -> usize {
        (self.p as usize).pow(self.r as u32)
    }

    /// Modulus coefficients, constant term first.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn id(&self) -> FieldId {
        self.id
    }

    /// `basis_products()[i][j] = e_i * e_j`.
    pub fn basis_products(&self) -> &[Vec<FieldElement>] {
        &self.basis_products
    }

    pub fn zero(&self) -> FieldElement {
        self.raw(vec![0; self.r])
    }

    pub fn one(&self) -> FieldElement {
        let mut c = vec![0; self.r];
        c[0] = 1;
        self.raw(c)
    }

    /// The coordinate vector `e_i` (the monomial `t^i`).
    pub fn basis(&self, i: usize) -> FieldElement {
        let mut c = vec![0; self.r];
        c[i] = 1;
        self.raw(c)
    }

    fn raw(&self, coeffs: Vec<u32>) -> FieldElement {
        FieldElement {
            field: self.id,
            coeffs,
        }
    }

    /// Element from coordinates; entries must already lie in `[0, p)`.
    pub fn element(&self, coeffs: &[u32]) -> Result<FieldElement> {
        if coeffs.len() != self.r {
            return Err(Error::InvalidElement(format!(
                "expected {} coordinates, found {}",
                self.r,
                coeffs.len()
            )));
        }
        if let Some(&c) = coeffs.iter().find(|&&c| c >= self.p) {
            return Err(Error::InvalidElement(format!(
                "coordinate {c} not reduced mod {}",
                self.p
            )));
        }
        Ok(self.raw(coeffs.to_vec()))
    }

    /// Element with the given canonical index (lexicographic on coordinates,
    /// constant term most significant).
    pub fn from_index(&self, mut index: usize) -> FieldElement {
        debug_assert!(index < self.order());
        let p = self.p as usize;
        let mut coeffs = vec![0u32; self.r];
        for c in coeffs.iter_mut().rev() {
            *c = (index % p) as u32;
            index /= p;
        }
        self.raw(coeffs)
    }

    /// Canonical index of `x`, the inverse of [`FieldSpec::from_index`].
    pub fn index_of(&self, x: &FieldElement) -> Result<usize> {
        self.check(x)?;
        Ok(self.index_unchecked(x))
    }

    fn index_unchecked(&self, x: &FieldElement) -> usize {
        x.coeffs
            .iter()
            .fold(0usize, |acc, &c| acc * self.p as usize + c as usize)
    }

    /// All elements in canonical order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.order()).map(move |i| self.from_index(i))
    }

    /// Ensure `x` belongs to this field.
    pub fn check(&self, x: &FieldElement) -> Result<()> {
        if x.field != self.id || x.coeffs.len() != self.r {
            return Err(Error::FieldMismatch);
        }
        Ok(())
    }

    pub fn add(&self, x: &FieldElement, y: &FieldElement) -> Result<FieldElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.add_unchecked(x, y))
    }

    pub(crate) fn add_unchecked(&self, x: &FieldElement, y: &FieldElement) -> FieldElement {
        let coeffs = x
            .coeffs
            .iter()
            .zip(&y.coeffs)
            .map(|(&a, &b)| (a + b) % self.p)
            .collect();
        self.raw(coeffs)
    }

    pub fn neg(&self, x: &FieldElement) -> Result<FieldElement> {
        self.check(x)?;
        Ok(self.neg_unchecked(x))
    }

    pub(crate) fn neg_unchecked(&self, x: &FieldElement) -> FieldElement {
        let coeffs = x.coeffs.iter().map(|&a| (self.p - a) % self.p).collect();
        self.raw(coeffs)
    }

    pub fn sub(&self, x: &FieldElement, y: &FieldElement) -> Result<FieldElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.add_unchecked(x, &self.neg_unchecked(y)))
    }

    /// `k * x` for an integer `k`.
    pub fn scale(&self, x: &FieldElement, k: u64) -> Result<FieldElement> {
        self.check(x)?;
        Ok(self.scale_unchecked(x, k))
    }

    pub(crate) fn scale_unchecked(&self, x: &FieldElement, k: u64) -> FieldElement {
        let p = u64::from(self.p);
        let k = k % p;
        let coeffs = x
            .coeffs
            .iter()
            .map(|&a| ((u64::from(a) * k) % p) as u32)
            .collect();
        self.raw(coeffs)
    }

    pub fn mul(&self, x: &FieldElement, y: &FieldElement) -> Result<FieldElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.mul_unchecked(x, y))
    }

    pub(crate) fn mul_unchecked(&self, x: &FieldElement, y: &FieldElement) -> FieldElement {
        let p = u64::from(self.p);
        let r = self.r;
        let mut prod = vec![0u64; 2 * r - 1];
        for (i, &a) in x.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in y.coeffs.iter().enumerate() {
                prod[i + j] = (prod[i + j] + u64::from(a) * u64::from(b)) % p;
            }
        }
        // Reduce modulo the monic modulus, highest degree first.
        for k in (r..prod.len()).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            prod[k] = 0;
            for i in 0..r {
                let m = u64::from(self.modulus[i]);
                prod[k - r + i] = (prod[k - r + i] + (p - c) * m) % p;
            }
        }
        self.raw(prod[..r].iter().map(|&c| c as u32).collect())
    }

    pub fn pow(&self, x: &FieldElement, mut e: u64) -> Result<FieldElement> {
        self.check(x)?;
        let mut base = x.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_unchecked(&acc, &base);
            }
            base = self.mul_unchecked(&base, &base);
            e >>= 1;
        }
        Ok(acc)
    }

    /// Multiplicative inverse via `x^{q-2}`.
    pub fn inv(&self, x: &FieldElement) -> Result<FieldElement> {
        self.check(x)?;
        if x.is_zero() {
            return Err(Error::DivisionByZero);
        }
        self.pow(x, self.order() as u64 - 2)
    }

    /// Exponent `k` with `chi(x) = exp(2 pi i k / p)`; the constant-term coordinate.
    pub fn chi_exponent(&self, x: &FieldElement) -> u32 {
        x.coeffs[0]
    }

    /// The additive character `chi(x) = exp(2 pi i s_1 / p)`.
    pub fn chi(&self, x: &FieldElement) -> Result<Complex64> {
        self.check(x)?;
        Ok(self.roots[x.coeffs[0] as usize])
    }

    /// `exp(2 pi i k / p)`.
    pub fn root_of_unity(&self, k: u64) -> Complex64 {
        self.roots[(k % u64::from(self.p)) as usize]
    }

    /// The bicharacter `<x, y> = chi(x y)`.
    pub fn bichar(&self, x: &FieldElement, y: &FieldElement) -> Result<Complex64> {
        let xy = self.mul(x, y)?;
        Ok(self.roots[xy.coeffs[0] as usize])
    }

    pub(crate) fn bichar_unchecked(&self, x: &FieldElement, y: &FieldElement) -> Complex64 {
        self.roots[self.mul_unchecked(x, y).coeffs[0] as usize]
    }
}

#[derive(Serialize, Deserialize)]
struct FieldSpecRepr {
    p: u64,
    r: usize,
    modulus: Vec<u32>,
}

impl Serialize for FieldSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldSpecRepr {
            p: u64::from(self.p),
            r: self.r,
            modulus: self.modulus.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FieldSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FieldSpecRepr::deserialize(d)?;
        if repr.modulus.len() != repr.r + 1 {
            return Err(serde::de::Error::custom(format!(
                "modulus of degree {} does not match r = {}",
                repr.modulus.len().saturating_sub(1),
                repr.r
            )));
        }
        FieldSpec::from_modulus(repr.p, repr.modulus).map_err(serde::de::Error::custom)
    }
}

/// Remainder of `a` modulo the monic polynomial `m` over `Z/p`.
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let p = u64::from(p);
    let dm = m.len() - 1;
    let mut rem: Vec<u64> = a.iter().map(|&c| u64::from(c)).collect();
    if rem.len() <= dm {
        return rem.into_iter().map(|c| c as u32).collect();
    }
    for k in (dm..rem.len()).rev() {
        let c = rem[k] % p;
        if c == 0 {
            continue;
        }
        for i in 0..=dm {
            rem[k - dm + i] = (rem[k - dm + i] + (p - c) * u64::from(m[i])) % p;
        }
    }
    rem.truncate(dm);
    rem.into_iter().map(|c| c as u32).collect()
}

/// Monic polynomial of degree `deg` whose lower coefficients are the base-`p`
/// digits of `index`, constant term most significant.
fn monic_from_index(p: u32, deg: usize, mut index: u64) -> Vec<u32> {
    let mut coeffs = vec![0u32; deg + 1];
    coeffs[deg] = 1;
    for c in coeffs[..deg].iter_mut().rev() {
        *c = (index % u64::from(p)) as u32;
        index /= u64::from(p);
    }
    coeffs
}

/// Irreducibility over `Z/p` by trial division with every monic polynomial of
/// degree `1..=deg/2`.
pub fn is_irreducible(modulus: &[u32], p: u32) -> bool {
    let deg = modulus.len() - 1;
    for k in 1..=deg / 2 {
        let count = u64::from(p).pow(k as u32);
        for idx in 0..count {
            let divisor = monic_from_index(p, k, idx);
            if poly_rem(modulus, &divisor, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// Lexicographically smallest monic irreducible polynomial of degree `r`.
fn smallest_irreducible(p: u32, r: usize) -> Vec<u32> {
    let count = u64::from(p).pow(r as u32);
    (0..count)
        .map(|idx| monic_from_index(p, r, idx))
        .find(|m| is_irreducible(m, p))
        .expect("an irreducible polynomial exists in every degree")
}
