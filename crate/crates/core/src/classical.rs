//! Elliptic q-expansions of weight `k - 1`, level `D_F` and character
//! `chi_F`, the Hecke operator `T_p`, Eisenstein series and the counting
//! function `a_F`.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::arith::{self, q, Q};
use crate::class_base::{ClassPermutation, GammaTuple};
use crate::error::{Error, Result};
use crate::field::{FieldElement, QuadField};

/// Coefficients `a(0..=N)` of a q-expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QExpansion {
    field: QuadField,
    weight: i64,
    coeffs: Vec<FieldElement>,
}

impl QExpansion {
    pub fn new(field: &QuadField, weight: i64, coeffs: Vec<FieldElement>) -> Self {
        assert!(!coeffs.is_empty(), "a q-expansion stores at least a(0)");
        QExpansion { field: field.clone(), weight, coeffs }
    }

    pub fn zero(field: &QuadField, weight: i64, bound: u64) -> Self {
        QExpansion::new(field, weight, vec![field.zero(); bound as usize + 1])
    }

    pub fn from_fn(field: &QuadField, weight: i64, bound: u64, f: impl Fn(u64) -> FieldElement) -> Self {
        QExpansion::new(field, weight, (0..=bound).map(f).collect())
    }

    pub fn field(&self) -> &QuadField {
        &self.field
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn level(&self) -> i64 {
        self.field.abs_disc()
    }

    pub fn bound(&self) -> u64 {
        self.coeffs.len() as u64 - 1
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// `a(n)`; negative indices read as zero, indices past the bound are an
    /// error.
    pub fn coeff(&self, n: i64) -> Result<FieldElement> {
        if n < 0 {
            return Ok(self.field.zero());
        }
        self.coeffs.get(n as usize).cloned().ok_or(Error::Truncation {
            index: n.to_string(),
            bound: self.bound(),
        })
    }

    /// `a(m)` at a rational index; non-integers read as zero.
    pub fn coeff_q(&self, m: &Q) -> Result<FieldElement> {
        if !m.is_integer() || m.is_negative() {
            return Ok(self.field.zero());
        }
        let n = m.to_integer();
        match n.to_i64() {
            Some(n) => self.coeff(n),
            None => Err(Error::Truncation { index: n.to_string(), bound: self.bound() }),
        }
    }

    pub fn truncate(&self, bound: u64) -> Result<QExpansion> {
        if bound > self.bound() {
            return Err(Error::Truncation { index: bound.to_string(), bound: self.bound() });
        }
        Ok(QExpansion::new(&self.field, self.weight, self.coeffs[..=bound as usize].to_vec()))
    }

    pub fn scale(&self, c: &FieldElement) -> QExpansion {
        QExpansion::new(&self.field, self.weight, self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Sum of two expansions on their common range.
    pub fn add(&self, o: &QExpansion) -> QExpansion {
        let n = self.coeffs.len().min(o.coeffs.len());
        QExpansion::new(
            &self.field,
            self.weight,
            (0..n).map(|i| &self.coeffs[i] + &o.coeffs[i]).collect(),
        )
    }

    /// `a'(n) = a(np) + chi(p) p^(k-2) a(n/p)` for `n <= N/p`.
    pub fn hecke_tp(&self, p: u64) -> Result<QExpansion> {
        if !arith::is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let chi = self.field.chi(p as i64);
        if chi == 0 {
            return Err(Error::Mismatch(format!("p = {p} divides the level")));
        }
        let scal = q(chi as i64) * arith::qpow(&q(p as i64), self.weight - 1);
        let out_bound = self.bound() / p;
        let mut coeffs = Vec::with_capacity(out_bound as usize + 1);
        for n in 0..=out_bound {
            let mut v = self.coeff((n * p) as i64)?;
            if n % p == 0 {
                v = &v + &self.coeff((n / p) as i64)?.scale(&scal);
            }
            coeffs.push(v);
        }
        Ok(QExpansion::new(&self.field, self.weight, coeffs))
    }
}

/// The Eisenstein series with `a(n) = sum_{d | n} chi(d) d^(k-2)` for `n >= 1`
/// and `a(0) = 0`, of weight `k - 1` where `k` is the hermitian weight.
pub fn eisenstein(field: &QuadField, k: i64, bound: u64) -> Result<QExpansion> {
    // chi(-1) = -1 for imaginary quadratic fields, so k - 1 must be odd
    if (k - 1).rem_euclid(2) == 0 {
        return Err(Error::ParityMismatch { k });
    }
    let w = field.unit_count();
    if k % w as i64 != 0 {
        return Err(Error::WeightNotDivisible { k, w });
    }
    Ok(QExpansion::from_fn(field, k - 1, bound, |n| {
        if n == 0 {
            return field.zero();
        }
        let mut s = BigInt::zero();
        for d in arith::divisors(n) {
            let c = field.chi(d as i64);
            if c != 0 {
                s += BigInt::from(c) * num_traits::pow(BigInt::from(d), (k - 2) as usize);
            }
        }
        field.rational(Q::from_integer(s))
    }))
}

/// Representatives of `(i D_F^(-1/2) O) / O`, written as `beta / sqrt(-D_F)`
/// with `beta` running over `O / sqrt(-D_F) O`.
pub fn a_f_group(field: &QuadField) -> Vec<FieldElement> {
    let dabs = field.abs_disc();
    // sqrt(-D_F) = sqrt(d) or 2 sqrt(d)
    let root = if dabs == -field.d() { field.sqrt_d() } else { field.sqrt_d().scale(&q(2)) };
    let inv = root.inv();
    let mut reps: Vec<FieldElement> = Vec::new();
    let mut seen: Vec<(Q, Q)> = Vec::new();
    for u in 0..dabs {
        for v in 0..dabs {
            let beta = field.from_omega(q(u), q(v));
            let alpha = &beta * &inv;
            let (x, y) = field.to_omega(&alpha);
            let key = (x.clone() - x.floor(), y.clone() - y.floor());
            if !seen.contains(&key) {
                seen.push(key);
                reps.push(alpha);
            }
        }
    }
    reps
}

/// `a_F(r)` for every residue `r` modulo `D_F`.
pub fn a_f_table(field: &QuadField) -> Vec<u64> {
    let dabs = field.abs_disc();
    let mut counts = vec![0u64; dabs as usize];
    for alpha in a_f_group(field) {
        let v = alpha.norm() * q(dabs);
        assert!(v.is_integer(), "D_F N(alpha) is an integer");
        let v = v.to_integer().to_i64().expect("small");
        // D_F N(alpha) = -n (mod D_F)
        counts[(-v).rem_euclid(dabs) as usize] += 1;
    }
    counts
}

pub fn a_f(field: &QuadField, n: u64) -> u64 {
    a_f_table(field)[(n % field.abs_disc() as u64) as usize]
}

/// An ordered tuple of q-expansions indexed like the base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QTuple {
    pub entries: Vec<QExpansion>,
}

impl QTuple {
    pub fn new(entries: Vec<QExpansion>) -> Result<Self> {
        if let Some(first) = entries.first() {
            if entries.iter().any(|e| e.weight() != first.weight() || e.bound() != first.bound()) {
                return Err(Error::Mismatch("tuple entries differ in weight or bound".into()));
            }
        }
        Ok(QTuple { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn bound(&self) -> u64 {
        self.entries.first().map_or(0, |e| e.bound())
    }

    /// Entry `b` of the result is entry `sigma(b)` of `self`.
    pub fn pull_back(&self, sigma: &ClassPermutation) -> QTuple {
        QTuple { entries: sigma.pull_back(&self.entries) }
    }

    pub fn scale(&self, g: &GammaTuple) -> QTuple {
        QTuple {
            entries: self.entries.iter().zip(&g.values).map(|(e, c)| e.scale(c)).collect(),
        }
    }

    pub fn scale_all(&self, c: &FieldElement) -> QTuple {
        QTuple { entries: self.entries.iter().map(|e| e.scale(c)).collect() }
    }

    pub fn hecke_tp(&self, p: u64) -> Result<QTuple> {
        Ok(QTuple { entries: self.entries.iter().map(|e| e.hecke_tp(p)).collect::<Result<_>>()? })
    }

    pub fn truncate(&self, bound: u64) -> Result<QTuple> {
        Ok(QTuple { entries: self.entries.iter().map(|e| e.truncate(bound)).collect::<Result<_>>()? })
    }

    pub fn add(&self, o: &QTuple) -> QTuple {
        QTuple { entries: self.entries.iter().zip(&o.entries).map(|(a, b)| a.add(b)).collect() }
    }
}
