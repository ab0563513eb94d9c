//! Arithmetic in an imaginary quadratic field `Q(sqrt d)`, its ring of
//! integers, split prime ideals and principal ideal generators.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, q, Q};
use crate::error::{Error, Result};
use crate::forms;

/// An imaginary quadratic field with odd class number.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadField {
    d: i64,
    abs_disc: i64,
    units: u32,
    class_number: u64,
    omega_trace: i64,
    omega_norm: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
}

/// A prime ideal above a split rational prime `p`, identified by the residue
/// of `omega` modulo the ideal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimeSymbol {
    pub p: u64,
    pub root: u64,
}

impl fmt::Display for PrimeSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P({},{})", self.p, self.root)
    }
}

impl QuadField {
    pub fn new(d: i64) -> Result<Self> {
        let k = Self::new_any_class_number(d)?;
        if k.class_number % 2 == 0 {
            return Err(Error::EvenClassNumber { d, h: k.class_number });
        }
        Ok(k)
    }

    /// Same as [`QuadField::new`] without the odd class number restriction.
    pub fn new_any_class_number(d: i64) -> Result<Self> {
        if d >= 0 || !arith::is_squarefree(d.unsigned_abs()) {
            return Err(Error::InvalidDiscriminant(d));
        }
        let one_mod_four = d.rem_euclid(4) == 1;
        let abs_disc = if one_mod_four { -d } else { -4 * d };
        let units = match d {
            -1 => 4,
            -3 => 6,
            _ => 2,
        };
        let (omega_trace, omega_norm) = if one_mod_four { (1, (1 - d) / 4) } else { (0, -d) };
        Ok(QuadField {
            d,
            abs_disc,
            units,
            class_number: forms::class_number(-(abs_disc as i128)),
            omega_trace,
            omega_norm,
        })
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    /// The absolute value of the discriminant.
    pub fn abs_disc(&self) -> i64 {
        self.abs_disc
    }

    pub fn discriminant(&self) -> i64 {
        -self.abs_disc
    }

    pub fn unit_count(&self) -> u32 {
        self.units
    }

    pub fn class_number(&self) -> u64 {
        self.class_number
    }

    pub fn omega_trace(&self) -> i64 {
        self.omega_trace
    }

    pub fn omega_norm(&self) -> i64 {
        self.omega_norm
    }

    /// The quadratic character attached to the field.
    pub fn chi(&self, n: i64) -> i32 {
        arith::kronecker(self.discriminant(), n)
    }

    pub fn splitting(&self, p: u64) -> Result<Splitting> {
        if !arith::is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(match self.chi(p as i64) {
            1 => Splitting::Split,
            -1 => Splitting::Inert,
            _ => Splitting::Ramified,
        })
    }

    /// Residues of `omega` modulo the primes above `p`, i.e. roots of its
    /// minimal polynomial mod `p`, ascending.
    pub fn omega_roots(&self, p: u64) -> Vec<u64> {
        let t = self.omega_trace.rem_euclid(p as i64) as u64;
        let n = self.omega_norm.rem_euclid(p as i64) as u64;
        (0..p)
            .filter(|&r| ((r * r) % p + n + (p - (t * r) % p)) % p == 0)
            .collect()
    }

    /// The two prime ideals above a split prime, ascending by root.
    pub fn primes_above(&self, p: u64) -> Result<[PrimeSymbol; 2]> {
        if self.splitting(p)? != Splitting::Split {
            return Err(Error::NotSplit { p, d: self.d });
        }
        let r = self.omega_roots(p);
        Ok([PrimeSymbol { p, root: r[0] }, PrimeSymbol { p, root: r[1] }])
    }

    pub fn prime_symbol(&self, p: u64, root: u64) -> Result<PrimeSymbol> {
        let roots = self.primes_above(p)?;
        roots
            .into_iter()
            .find(|s| s.root == root % p)
            .ok_or_else(|| Error::BadPrimeSymbol(format!("({p}, {root})")))
    }

    /// The prime used for the first component of local pairs at `p`.
    pub fn canonical_prime(&self, p: u64) -> Result<PrimeSymbol> {
        Ok(self.primes_above(p)?[0])
    }

    pub fn conj_prime(&self, s: PrimeSymbol) -> PrimeSymbol {
        let t = self.omega_trace.rem_euclid(s.p as i64) as u64;
        PrimeSymbol { p: s.p, root: (t + s.p - s.root) % s.p }
    }

    pub fn elem(&self, x: Q, y: Q) -> FieldElement {
        FieldElement { d: self.d, x, y }
    }

    pub fn rational(&self, x: Q) -> FieldElement {
        self.elem(x, Q::zero())
    }

    pub fn int(&self, n: i64) -> FieldElement {
        self.rational(q(n))
    }

    pub fn zero(&self) -> FieldElement {
        self.int(0)
    }

    pub fn one(&self) -> FieldElement {
        self.int(1)
    }

    pub fn sqrt_d(&self) -> FieldElement {
        self.elem(Q::zero(), q(1))
    }

    pub fn omega(&self) -> FieldElement {
        self.from_omega(Q::zero(), q(1))
    }

    /// The element `u + v*omega`.
    pub fn from_omega(&self, u: Q, v: Q) -> FieldElement {
        if self.omega_trace == 0 {
            self.elem(u, v)
        } else {
            let half = arith::qf(1, 2);
            self.elem(u + &v * &half, v * half)
        }
    }

    /// Coordinates with respect to the basis `1, omega`.
    pub fn to_omega(&self, e: &FieldElement) -> (Q, Q) {
        if self.omega_trace == 0 {
            (e.x.clone(), e.y.clone())
        } else {
            (&e.x - &e.y, &e.y * q(2))
        }
    }

    pub fn is_integral(&self, e: &FieldElement) -> bool {
        let (u, v) = self.to_omega(e);
        u.is_integer() && v.is_integer()
    }

    /// Valuation of a nonzero element at a split prime.
    pub fn valuation(&self, s: PrimeSymbol, e: &FieldElement) -> Option<i64> {
        if e.is_zero() {
            return None;
        }
        let (u, v) = self.to_omega(e);
        let p = s.p;
        let shift = [&u, &v]
            .iter()
            .filter_map(|c| arith::vp(c, p))
            .map(|val| (-val).max(0))
            .max()
            .unwrap_or(0);
        let scaled = e.scale(&arith::qpow(&q(p as i64), shift));
        let nv = arith::vp(&scaled.norm(), p).expect("nonzero norm");
        let emb = LocalEmbedding::new(self, s, (nv + 1) as u32);
        let (r, m) = emb.embed(&scaled);
        debug_assert_eq!(m, 0);
        let val = arith::vp_int(&r, p).expect("valuation bounded by norm");
        Some(val - shift)
    }

    /// Prime ideal factorization of a nonzero element over split primes only.
    /// Returns `None` if a ramified or inert prime divides the norm.
    pub fn split_factorization(&self, e: &FieldElement) -> Option<IdealSymbol> {
        if e.is_zero() {
            return None;
        }
        // primes of the denominator and of the norm of the cleared element;
        // the norm alone misses pairs P^n conj(P)^(-n)
        let (u, v) = self.to_omega(e);
        let den = num_integer::Integer::lcm(u.denom(), v.denom());
        let cleared = e.scale(&Q::from_integer(den.clone()));
        let mut ps: Vec<u64> = Vec::new();
        for part in [cleared.norm().to_integer(), den] {
            let m = part.abs().to_u64()?;
            ps.extend(arith::factor(m).into_iter().map(|(p, _)| p));
        }
        ps.sort_unstable();
        ps.dedup();
        let mut out = IdealSymbol::one();
        for p in ps {
            if self.splitting(p).ok()? != Splitting::Split {
                return None;
            }
            for s in self.primes_above(p).ok()? {
                let v = self.valuation(s, e)?;
                out = out.mul(&IdealSymbol::prime(s, v));
            }
        }
        Some(out)
    }

    /// A generator of a principal fractional ideal supported on split primes,
    /// or `None` if the ideal is not principal. The search enumerates integral
    /// elements of the norm of an associated integral ideal; if that norm
    /// exceeds `bound` an error is returned.
    pub fn find_generator(&self, ideal: &IdealSymbol, bound: u64) -> Result<Option<FieldElement>> {
        let (num, den) = ideal.split();
        let integral = num.mul(&den.conj(self));
        let n = integral.norm();
        if n > Q::from_integer(BigInt::from(bound)) {
            return Err(Error::SearchExhausted { norm: n.to_string(), bound });
        }
        let n = n.to_integer().to_i128().expect("bounded norm");
        let den_norm = den.norm();
        for alpha in self.elements_of_norm(n) {
            let ok = integral
                .support_primes()
                .into_iter()
                .flat_map(|p| self.primes_above(p).expect("split"))
                .all(|s| self.valuation(s, &alpha) == Some(integral.exponent(s)));
            if ok {
                return Ok(Some(alpha.scale(&den_norm.recip())));
            }
        }
        Ok(None)
    }

    /// All `u + v*omega` in the ring of integers with norm `n`.
    pub fn elements_of_norm(&self, n: i128) -> Vec<FieldElement> {
        let mut out = Vec::new();
        if n <= 0 {
            if n == 0 {
                out.push(self.zero());
            }
            return out;
        }
        let t = self.omega_trace as i128;
        let dabs = self.abs_disc as i128;
        let vmax = arith::isqrt((4 * n / dabs) as u64) as i128;
        for v in -vmax..=vmax {
            let disc = 4 * n - dabs * v * v;
            if disc < 0 {
                continue;
            }
            let s = arith::isqrt(disc as u64) as i128;
            if s * s != disc {
                continue;
            }
            let mut us = vec![-t * v + s, -t * v - s];
            us.dedup();
            for twice_u in us {
                if twice_u % 2 == 0 {
                    let u = twice_u / 2;
                    out.push(self.from_omega(q(u as i64), q(v as i64)));
                }
            }
        }
        out
    }
}

impl fmt::Display for QuadField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q(sqrt({}))", self.d)
    }
}

/// An element `x + y*sqrt(d)` with rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    d: i64,
    pub x: Q,
    pub y: Q,
}

impl FieldElement {
    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.y.is_zero()
    }

    pub fn conj(&self) -> Self {
        FieldElement { d: self.d, x: self.x.clone(), y: -&self.y }
    }

    pub fn norm(&self) -> Q {
        &self.x * &self.x - &self.y * &self.y * q(self.d)
    }

    pub fn trace(&self) -> Q {
        &self.x * q(2)
    }

    pub fn scale(&self, c: &Q) -> Self {
        FieldElement { d: self.d, x: &self.x * c, y: &self.y * c }
    }

    pub fn inv(&self) -> Self {
        let n = self.norm();
        assert!(!n.is_zero(), "inverse of zero");
        self.conj().scale(&n.recip())
    }

    pub fn pow(&self, e: i64) -> Self {
        let mut base = if e < 0 { self.inv() } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = FieldElement { d: self.d, x: q(1), y: Q::zero() };
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.x.is_zero(), self.y.is_zero()) {
            (_, true) => write!(f, "{}", self.x),
            (true, false) => write!(f, "{}*sqrt({})", self.y, self.d),
            (false, false) => {
                let sign = if self.y.is_negative() { "-" } else { "+" };
                write!(f, "{} {} {}*sqrt({})", self.x, sign, self.y.abs(), self.d)
            }
        }
    }
}

impl Add for &FieldElement {
    type Output = FieldElement;
    fn add(self, o: &FieldElement) -> FieldElement {
        debug_assert_eq!(self.d, o.d);
        FieldElement { d: self.d, x: &self.x + &o.x, y: &self.y + &o.y }
    }
}

impl Sub for &FieldElement {
    type Output = FieldElement;
    fn sub(self, o: &FieldElement) -> FieldElement {
        debug_assert_eq!(self.d, o.d);
        FieldElement { d: self.d, x: &self.x - &o.x, y: &self.y - &o.y }
    }
}

impl Mul for &FieldElement {
    type Output = FieldElement;
    fn mul(self, o: &FieldElement) -> FieldElement {
        debug_assert_eq!(self.d, o.d);
        FieldElement {
            d: self.d,
            x: &self.x * &o.x + &self.y * &o.y * q(self.d),
            y: &self.x * &o.y + &self.y * &o.x,
        }
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement { d: self.d, x: -&self.x, y: -&self.y }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for FieldElement {
            type Output = FieldElement;
            fn $m(self, o: FieldElement) -> FieldElement {
                (&self).$m(&o)
            }
        }
        impl $tr<&FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, o: &FieldElement) -> FieldElement {
                (&self).$m(o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

/// A fractional ideal supported on split primes, as a map from prime to
/// exponent. Zero exponents are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IdealSymbol(BTreeMap<PrimeSymbol, i64>);

impl IdealSymbol {
    pub fn one() -> Self {
        IdealSymbol(BTreeMap::new())
    }

    pub fn prime(s: PrimeSymbol, e: i64) -> Self {
        let mut m = BTreeMap::new();
        if e != 0 {
            m.insert(s, e);
        }
        IdealSymbol(m)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, s: PrimeSymbol) -> i64 {
        self.0.get(&s).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PrimeSymbol, &i64)> {
        self.0.iter()
    }

    pub fn mul(&self, o: &IdealSymbol) -> Self {
        let mut m = self.0.clone();
        for (s, e) in &o.0 {
            let v = m.entry(*s).or_insert(0);
            *v += e;
            if *v == 0 {
                m.remove(s);
            }
        }
        IdealSymbol(m)
    }

    pub fn pow(&self, k: i64) -> Self {
        IdealSymbol(
            self.0
                .iter()
                .filter(|_| k != 0)
                .map(|(s, e)| (*s, e * k))
                .collect(),
        )
    }

    pub fn inv(&self) -> Self {
        self.pow(-1)
    }

    pub fn conj(&self, k: &QuadField) -> Self {
        IdealSymbol(self.0.iter().map(|(s, e)| (k.conj_prime(*s), *e)).collect())
    }

    /// Numerator and denominator as integral ideals.
    pub fn split(&self) -> (IdealSymbol, IdealSymbol) {
        let num = self.0.iter().filter(|(_, e)| **e > 0).map(|(s, e)| (*s, *e)).collect();
        let den = self.0.iter().filter(|(_, e)| **e < 0).map(|(s, e)| (*s, -e)).collect();
        (IdealSymbol(num), IdealSymbol(den))
    }

    pub fn norm(&self) -> Q {
        let mut n = q(1);
        for (s, e) in &self.0 {
            n *= arith::qpow(&q(s.p as i64), *e);
        }
        n
    }

    pub fn support_primes(&self) -> Vec<u64> {
        let mut ps: Vec<u64> = self.0.keys().map(|s| s.p).collect();
        ps.dedup();
        ps
    }
}

impl fmt::Display for IdealSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "(1)");
        }
        let parts: Vec<String> = self.0.iter().map(|(s, e)| format!("{s}^{e}")).collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// The completion map at a split prime, `omega` sent to a lift of its
/// residue, computed modulo `p^prec`.
#[derive(Clone, Debug)]
pub struct LocalEmbedding {
    pub prime: PrimeSymbol,
    pub prec: u32,
    pub modulus: BigInt,
    pub root: BigInt,
}

impl LocalEmbedding {
    pub fn new(k: &QuadField, s: PrimeSymbol, prec: u32) -> Self {
        let prec = prec.max(1);
        let modulus = arith::pow_big(s.p, prec);
        let root = hensel_root(k.omega_trace, k.omega_norm, s, &modulus, prec);
        LocalEmbedding { prime: s, prec, modulus, root }
    }

    /// Image of `e` as `(r, m)` with `e = r / p^m` modulo `p^(prec - m)`.
    pub fn embed(&self, e: &FieldElement) -> (BigInt, i64) {
        let p = self.prime.p;
        let d = e.d;
        // d = 1 mod 4 uses the half basis
        let half = d.rem_euclid(4) == 1;
        let (u, v) = if half { (&e.x - &e.y, &e.y * q(2)) } else { (e.x.clone(), e.y.clone()) };
        let shift = [&u, &v]
            .iter()
            .filter_map(|c| arith::vp(c, p))
            .map(|val| (-val).max(0))
            .max()
            .unwrap_or(0);
        let pm = arith::qpow(&q(p as i64), shift);
        let ru = arith::residue(&(u * &pm), &self.modulus).expect("p-integral");
        let rv = arith::residue(&(v * &pm), &self.modulus).expect("p-integral");
        ((ru + rv * &self.root).mod_floor(&self.modulus), shift)
    }

    /// Image as a rational number `r / p^m`.
    pub fn embed_q(&self, e: &FieldElement) -> Q {
        let (r, m) = self.embed(e);
        Q::new(r, arith::pow_big(self.prime.p, m as u32))
    }
}

fn hensel_root(t: i64, n: i64, s: PrimeSymbol, modulus: &BigInt, prec: u32) -> BigInt {
    let t = BigInt::from(t);
    let n = BigInt::from(n);
    let mut x = BigInt::from(s.root);
    // Newton iteration doubles the precision each step.
    let mut steps = 0;
    let mut reached = 1u32;
    while reached < prec {
        let f = &x * &x - &t * &x + &n;
        let df = BigInt::from(2) * &x - &t;
        let inv = arith::mod_inv(&df, modulus).expect("simple root at a split prime");
        x = (x - f * inv).mod_floor(modulus);
        reached *= 2;
        steps += 1;
        debug_assert!(steps < 64);
    }
    x.mod_floor(modulus)
}

pub fn is_one(e: &FieldElement) -> bool {
    e.y.is_zero() && e.x.is_one()
}
