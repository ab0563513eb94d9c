//! Hecke operators at a split prime on the hermitian side: coset tables,
//! the direct action through Fourier coefficients, the case formula for
//! `T` and the closed action on coefficient functions.

use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, q, Q};
use crate::class_base::Base;
use crate::classical;
use crate::error::{Error, Result};
use crate::field::{FieldElement, IdealSymbol, PrimeSymbol};
use crate::hermlat::{self, HermitianForm};
use crate::maass::{self, AdelicPoint, LocalPair, MaassSystem};
use crate::matrix::Mat2Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeckeOp {
    T,
    U,
    Delta,
}

impl fmt::Display for HeckeOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeckeOp::T => "T",
            HeckeOp::U => "U",
            HeckeOp::Delta => "Delta",
        })
    }
}

impl HeckeOp {
    pub fn expected_count(&self, p: u64) -> usize {
        let p = p as usize;
        match self {
            HeckeOp::T => p * p * p + p * p + p + 1,
            HeckeOp::U => p.pow(4) + p.pow(3) + 2 * p * p + p + 1,
            HeckeOp::Delta => 1,
        }
    }

    /// Degree of the classical operator that this one descends to.
    pub fn level_drop(&self) -> u32 {
        match self {
            HeckeOp::T => 1,
            HeckeOp::U => 2,
            HeckeOp::Delta => 0,
        }
    }
}

pub type R = Ratio<i64>;

/// A 4x4 rational matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat4(pub [[R; 4]; 4]);

impl Mat4 {
    pub fn zero() -> Self {
        Mat4([[R::zero(); 4]; 4])
    }

    pub fn identity() -> Self {
        Mat4::diag([R::one(); 4])
    }

    pub fn diag(d: [R; 4]) -> Self {
        let mut m = Mat4::zero();
        for i in 0..4 {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn from_rows(rows: [[R; 4]; 4]) -> Self {
        Mat4(rows)
    }

    pub fn j() -> Self {
        let mut m = Mat4::zero();
        for i in 0..2 {
            m.0[i][i + 2] = -R::one();
            m.0[i + 2][i] = R::one();
        }
        m
    }

    pub fn mul(&self, o: &Mat4) -> Mat4 {
        let mut m = Mat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = R::zero();
                for t in 0..4 {
                    s += self.0[i][t] * o.0[t][j];
                }
                m.0[i][j] = s;
            }
        }
        m
    }

    pub fn transpose(&self) -> Mat4 {
        let mut m = Mat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn scale(&self, c: R) -> Mat4 {
        let mut m = self.clone();
        m.0.iter_mut().flatten().for_each(|x| *x *= c);
        m
    }

    pub fn inv(&self) -> Option<Mat4> {
        let mut a = self.0;
        let mut b = Mat4::identity().0;
        for col in 0..4 {
            let piv = (col..4).find(|&r| !a[r][col].is_zero())?;
            a.swap(col, piv);
            b.swap(col, piv);
            let inv = a[col][col].recip();
            for j in 0..4 {
                a[col][j] *= inv;
                b[col][j] *= inv;
            }
            for r in 0..4 {
                if r != col && !a[r][col].is_zero() {
                    let f = a[r][col];
                    for j in 0..4 {
                        let (x, y) = (a[col][j], b[col][j]);
                        a[r][j] -= f * x;
                        b[r][j] -= f * y;
                    }
                }
            }
        }
        Some(Mat4(b))
    }

    /// The second component `-J (A^t)^(-1) J` of a pair with first component `A`.
    pub fn partner(&self) -> Mat4 {
        let j = Mat4::j();
        j.mul(&self.transpose().inv().expect("invertible")).mul(&j).scale(-R::one())
    }

    /// The 2x2 block at block position `(bi, bj)`.
    pub fn block(&self, bi: usize, bj: usize) -> Mat2Q {
        let e = |i: usize, j: usize| {
            let x = self.0[2 * bi + i][2 * bj + j];
            Q::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
        };
        Mat2Q::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    fn to_big(&self) -> Vec<Vec<BigRational>> {
        self.0
            .iter()
            .map(|r| r.iter().map(|x| Q::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))).collect())
            .collect()
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.0.iter().map(|r| r.iter().map(|x| format!("{}/{}", x.numer(), x.denom())).collect()).collect()
    }
}

/// Sorted p-adic valuations of the elementary divisors of a nonsingular
/// rational matrix.
pub fn invariant_profile(m: &Mat4, p: u64) -> Vec<i64> {
    let mut a = m.to_big();
    let n = a.len();
    let mut out = Vec::with_capacity(n);
    for step in 0..n {
        // pivot of minimal valuation in the remaining block
        let mut best: Option<(i64, usize, usize)> = None;
        for i in step..n {
            for j in step..n {
                if let Some(v) = arith::vp(&a[i][j], p) {
                    if best.map_or(true, |(bv, _, _)| v < bv) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let (v, pi, pj) = best.expect("nonsingular");
        a.swap(step, pi);
        for row in a.iter_mut() {
            row.swap(step, pj);
        }
        let piv = a[step][step].clone();
        for i in step + 1..n {
            if a[i][step].is_zero() {
                continue;
            }
            let f = &a[i][step] / &piv;
            for j in step..n {
                let x = &a[step][j] * &f;
                a[i][j] -= x;
            }
        }
        for j in step + 1..n {
            if a[step][j].is_zero() {
                continue;
            }
            let f = &a[step][j] / &piv;
            for i in step..n {
                let x = &a[i][step] * &f;
                a[i][j] -= x;
            }
        }
        out.push(v);
    }
    out.sort_unstable();
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetRep {
    pub a1: Mat4,
    pub a2: Mat4,
}

impl CosetRep {
    pub fn new(a1: Mat4, a2: Mat4) -> Self {
        CosetRep { a1, a2 }
    }

    /// Right multiplication by the group element with first component `g`.
    pub fn right_mul(&self, g: &Mat4) -> CosetRep {
        CosetRep::new(self.a1.mul(g), self.a2.mul(&g.partner()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetTable {
    pub op: HeckeOp,
    pub p: u64,
    pub reps: Vec<CosetRep>,
}

fn r(n: i64) -> R {
    R::from_integer(n)
}

fn rows(entries: [[i64; 4]; 4], den: [[i64; 4]; 4]) -> Mat4 {
    let mut m = Mat4::zero();
    for i in 0..4 {
        for j in 0..4 {
            m.0[i][j] = R::new(entries[i][j], den[i][j]);
        }
    }
    m
}

/// Representatives of `K_p g K_p` as pairs `(A1, A2)`.
pub fn coset_table(op: HeckeOp, p: u64) -> CosetTable {
    let pi = p as i64;
    let ip = R::new(1, pi);
    let res: Vec<i64> = (0..pi).collect();
    let mut reps = Vec::new();
    let one = [[1; 4]; 4];
    match op {
        HeckeOp::T => {
            for &a in &res {
                for &b in &res {
                    for &c in &res {
                        let a1 = rows(
                            [[1, a, b, c], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
                            [[pi, pi, pi, pi], [1; 4], [1; 4], [1; 4]],
                        );
                        let a2 = rows(
                            [[1, 0, b, 0], [0, 1, c, 0], [0, 0, pi, 0], [0, 0, -a, 1]],
                            one,
                        );
                        reps.push(CosetRep::new(a1, a2));
                    }
                }
            }
            for &d in &res {
                for &e in &res {
                    let a1 = rows(
                        [[1, 0, 0, 0], [0, 1, d, e], [0, 0, 1, 0], [0, 0, 0, 1]],
                        [[1; 4], [1, pi, pi, pi], [1; 4], [1; 4]],
                    );
                    let a2 = rows([[1, 0, 0, d], [0, 1, 0, e], [0, 0, 1, 0], [0, 0, 0, pi]], one);
                    reps.push(CosetRep::new(a1, a2));
                }
            }
            for &f in &res {
                let a1 = rows(
                    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, f], [0, 0, 0, 1]],
                    [[1; 4], [1; 4], [1, 1, pi, pi], [1; 4]],
                );
                let a2 = rows([[pi, 0, 0, 0], [-f, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], one);
                reps.push(CosetRep::new(a1, a2));
            }
            reps.push(CosetRep::new(
                Mat4::diag([r(1), r(1), r(1), ip]),
                Mat4::diag([r(1), r(pi), r(1), r(1)]),
            ));
        }
        HeckeOp::U => {
            for &b in &res {
                for &c in &res {
                    for &d in &res {
                        for &e in &res {
                            let a1 = rows(
                                [[1, 0, b, d], [0, 1, c, e], [0, 0, 1, 0], [0, 0, 0, 1]],
                                [[pi; 4], [pi; 4], [1; 4], [1; 4]],
                            );
                            let a2 = rows(
                                [[1, 0, b, c], [0, 1, d, e], [0, 0, pi, 0], [0, 0, 0, pi]],
                                one,
                            );
                            reps.push(CosetRep::new(a1, a2));
                        }
                    }
                }
            }
            for &a in &res {
                for &c in &res {
                    for &f in &res {
                        let a1 = rows(
                            [[1, 0, 0, 0], [-f, 1, c, 0], [0, 0, 1, 0], [0, 0, -a, 1]],
                            [[1; 4], [pi; 4], [1; 4], [1, 1, pi, pi]],
                        );
                        let a2 = rows(
                            [[1, a, 0, c], [0, pi, 0, 0], [0, 0, 1, f], [0, 0, 0, pi]],
                            one,
                        );
                        reps.push(CosetRep::new(a1, a2));
                    }
                }
            }
            for &e in &res {
                for &f in &res {
                    let a1 = rows(
                        [[1, 0, 0, 0], [-f, 1, 0, e], [0, 0, 1, 0], [0, 0, 0, 1]],
                        [[1; 4], [pi; 4], [1, 1, pi, 1], [1; 4]],
                    );
                    let a2 = rows([[pi, 0, 0, 0], [0, 1, 0, e], [0, 0, 1, f], [0, 0, 0, pi]], one);
                    reps.push(CosetRep::new(a1, a2));
                }
            }
            for &a in &res {
                for &b in &res {
                    let a1 = rows(
                        [[1, 0, b, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, -a, 1]],
                        [[pi; 4], [1; 4], [1; 4], [1, 1, pi, pi]],
                    );
                    let a2 = rows([[1, a, b, 0], [0, pi, 0, 0], [0, 0, pi, 0], [0, 0, 0, 1]], one);
                    reps.push(CosetRep::new(a1, a2));
                }
            }
            for &d in &res {
                let a1 = rows(
                    [[1, 0, 0, d], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
                    [[pi; 4], [1; 4], [1, 1, pi, 1], [1; 4]],
                );
                let a2 = rows([[pi, 0, 0, 0], [0, 1, d, 0], [0, 0, pi, 0], [0, 0, 0, 1]], one);
                reps.push(CosetRep::new(a1, a2));
            }
            reps.push(CosetRep::new(
                Mat4::diag([r(1), r(1), ip, ip]),
                Mat4::diag([r(pi), r(pi), r(1), r(1)]),
            ));
        }
        HeckeOp::Delta => {
            reps.push(CosetRep::new(Mat4::identity().scale(r(pi)), Mat4::identity().scale(ip)));
        }
    }
    CosetTable { op, p, reps }
}

/// The element defining the double coset.
pub fn defining_element(op: HeckeOp, p: u64) -> CosetRep {
    let pi = p as i64;
    let ip = R::new(1, pi);
    match op {
        HeckeOp::T => CosetRep::new(
            Mat4::diag([ip, r(1), r(1), r(1)]),
            Mat4::diag([r(1), r(1), r(pi), r(1)]),
        ),
        HeckeOp::U => CosetRep::new(
            Mat4::diag([ip, ip, r(1), r(1)]),
            Mat4::diag([r(1), r(1), r(pi), r(pi)]),
        ),
        HeckeOp::Delta => CosetRep::new(Mat4::identity().scale(r(pi)), Mat4::identity().scale(ip)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CosetDefect {
    Incompatible { index: usize },
    WrongDoubleCoset { index: usize, profile: Vec<i64>, expected: Vec<i64> },
    Duplicate { first: usize, second: usize },
    WrongCount { expected: usize, found: usize },
}

impl fmt::Display for CosetDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CosetDefect::Incompatible { index } => write!(f, "representative {index} violates A1 J A2^t = J"),
            CosetDefect::WrongDoubleCoset { index, profile, expected } => write!(
                f,
                "representative {index} has invariant factors {profile:?}, expected {expected:?}"
            ),
            CosetDefect::Duplicate { first, second } => {
                write!(f, "representatives {first} and {second} define the same coset")
            }
            CosetDefect::WrongCount { expected, found } => {
                write!(f, "{found} representatives, expected {expected}")
            }
        }
    }
}

/// Integer matrix `p^s * m`, where `p^s` clears every denominator of the
/// table.
fn scaled_int(m: &Mat4, s: u32, p: i64) -> [[i64; 4]; 4] {
    let ps = p.pow(s);
    let mut out = [[0i64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let x = m.0[i][j] * R::from_integer(ps);
            assert!(x.is_integer(), "scale too small");
            out[i][j] = x.to_integer();
        }
    }
    out
}

fn denominator_power(ms: &[&Mat4], p: u64) -> u32 {
    ms.iter()
        .flat_map(|m| m.0.iter().flatten())
        .map(|x| arith::vp_int(&BigInt::from(*x.denom()), p).unwrap_or(0))
        .max()
        .unwrap_or(0) as u32
}

pub fn validate_coset_table(t: &CosetTable) -> std::result::Result<(), CosetDefect> {
    let p = t.p;
    let pi = p as i64;
    let j = Mat4::j();
    for (index, rep) in t.reps.iter().enumerate() {
        if rep.a1.mul(&j).mul(&rep.a2.transpose()) != j {
            return Err(CosetDefect::Incompatible { index });
        }
    }
    let def = defining_element(t.op, p);
    let expected = [invariant_profile(&def.a1, p), invariant_profile(&def.a2, p)];
    for (index, rep) in t.reps.iter().enumerate() {
        for (m, e) in [&rep.a1, &rep.a2].into_iter().zip(&expected) {
            let profile = invariant_profile(m, p);
            if profile != *e {
                return Err(CosetDefect::WrongDoubleCoset { index, profile, expected: e.clone() });
            }
        }
    }
    // K_p alpha = K_p beta iff alpha beta^(-1) is in GL_4(Z_p); determinants
    // already agree up to units by the profile check.
    let invs: Vec<Mat4> = t.reps.iter().map(|r| r.a1.inv().expect("invertible")).collect();
    let s = denominator_power(&t.reps.iter().map(|r| &r.a1).collect::<Vec<_>>(), p);
    let u = denominator_power(&invs.iter().collect::<Vec<_>>(), p);
    let lhs: Vec<[[i64; 4]; 4]> = t.reps.iter().map(|r| scaled_int(&r.a1, s, pi)).collect();
    let rhs: Vec<[[i64; 4]; 4]> = invs.iter().map(|m| scaled_int(m, u, pi)).collect();
    let modulus = pi.pow(s + u);
    for a in 0..lhs.len() {
        for b in a + 1..lhs.len() {
            if product_divisible(&lhs[a], &rhs[b], modulus) {
                return Err(CosetDefect::Duplicate { first: a, second: b });
            }
        }
    }
    let expected = t.op.expected_count(p);
    if t.reps.len() != expected {
        return Err(CosetDefect::WrongCount { expected, found: t.reps.len() });
    }
    Ok(())
}

fn product_divisible(x: &[[i64; 4]; 4], y: &[[i64; 4]; 4], m: i64) -> bool {
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0i64;
            for t in 0..4 {
                s += x[i][t] * y[t][j];
            }
            if s % m != 0 {
                return false;
            }
        }
    }
    true
}

/// Local elements used in the Fourier coefficient formulas, as pairs at the
/// prime they are attached to.
pub mod words {
    use super::*;

    fn pair(m: Mat2Q) -> LocalPair {
        LocalPair::new(m, Mat2Q::identity())
    }

    pub fn alpha(p: u64, a: u64) -> LocalPair {
        let pi = p as i64;
        if a < p {
            pair(Mat2Q::ints(pi, -(a as i64), 0, 1))
        } else {
            pair(Mat2Q::ints(1, 0, 0, pi))
        }
    }

    pub fn beta(p: u64) -> LocalPair {
        let pi = p as i64;
        pair(Mat2Q::ints(pi, 0, 0, pi))
    }

    pub fn gamma(p: u64, a: u64) -> LocalPair {
        let pi = p as i64;
        if a < p {
            pair(Mat2Q::ints(1, 0, a as i64, pi))
        } else {
            pair(Mat2Q::ints(pi, 0, 0, 1))
        }
    }

    pub fn delta(p: u64) -> LocalPair {
        let pq = q(p as i64);
        LocalPair::new(Mat2Q::scalar(pq.recip()), Mat2Q::scalar(pq))
    }
}

fn coeff(m: &MaassSystem, h: &HermitianForm, b: usize, s: PrimeSymbol, w: &LocalPair) -> Result<FieldElement> {
    let point = AdelicPoint::base_entry(m.base(), b).right_mul(m.field(), s, w);
    maass::coeff_at(m, h, &point)
}

/// `p^2 sum_a c(h, b alpha_a) + sum_a c(h, b alpha_a^)`.
pub fn apply_t_direct(m: &MaassSystem, s: PrimeSymbol, h: &HermitianForm, b: usize) -> Result<FieldElement> {
    let p = s.p;
    let field = m.field();
    let mut lhs = field.zero();
    let mut rhs = field.zero();
    for a in 0..=p {
        let w = words::alpha(p, a);
        lhs = &lhs + &coeff(m, h, b, s, &w)?;
        rhs = &rhs + &coeff(m, h, b, s, &w.hat())?;
    }
    Ok(&lhs.scale(&q((p * p) as i64)) + &rhs)
}

/// `p^4 c(h, b beta) + c(h, b beta^) + p sum_{a,c} c(h, b gamma_a gamma_c^)`.
pub fn apply_u_direct(m: &MaassSystem, s: PrimeSymbol, h: &HermitianForm, b: usize) -> Result<FieldElement> {
    let p = s.p;
    let pq = q(p as i64);
    let beta = words::beta(p);
    let mut acc = coeff(m, h, b, s, &beta)?.scale(&arith::qpow(&pq, 4));
    acc = &acc + &coeff(m, h, b, s, &beta.hat())?;
    let mut mid = m.field().zero();
    for a in 0..=p {
        for c in 0..=p {
            let w = words::gamma(p, a).mul(&words::gamma(p, c).hat());
            mid = &mid + &coeff(m, h, b, s, &w)?;
        }
    }
    Ok(&acc + &mid.scale(&pq))
}

pub fn apply_delta_direct(m: &MaassSystem, s: PrimeSymbol, h: &HermitianForm, b: usize) -> Result<FieldElement> {
    coeff(m, h, b, s, &words::delta(s.p))
}

pub fn apply_direct(op: HeckeOp, m: &MaassSystem, s: PrimeSymbol, h: &HermitianForm, b: usize) -> Result<FieldElement> {
    match op {
        HeckeOp::T => apply_t_direct(m, s, h, b),
        HeckeOp::U => apply_u_direct(m, s, h, b),
        HeckeOp::Delta => apply_delta_direct(m, s, h, b),
    }
}

/// Ideal of the determinant of the local element that moves each base entry
/// to its target class.
pub fn op_ideal(op: HeckeOp, base: &Base, s: PrimeSymbol) -> IdealSymbol {
    match op {
        HeckeOp::T => IdealSymbol::prime(s, 1),
        HeckeOp::U => IdealSymbol::prime(s, 2),
        HeckeOp::Delta => {
            IdealSymbol::prime(s, -2).mul(&IdealSymbol::prime(base.field().conj_prime(s), 2))
        }
    }
}

/// The coefficient functions of `b * x`, where `x` is the local element of
/// `op`, expressed through the base: `c'(n) = gamma_b * alpha_{b'}(n)`.
struct Shifted<'a> {
    m: &'a MaassSystem,
    target: Vec<usize>,
    factor: Vec<FieldElement>,
}

impl<'a> Shifted<'a> {
    fn new(m: &'a MaassSystem, op: HeckeOp, s: PrimeSymbol) -> Result<Self> {
        let ideal = op_ideal(op, m.base(), s);
        let perm = m.base().shift(&ideal);
        let g = m.base().shift_factors(&ideal, m.k())?;
        Ok(Shifted { m, target: perm.map, factor: g.values })
    }

    fn at(&self, b: usize, n: &Q) -> FieldElement {
        let a = self.m.alpha_q(self.target[b], n);
        if a.is_zero() {
            a
        } else {
            &a * &self.factor[b]
        }
    }
}

/// New coefficient functions of `op` applied to `m`, by the closed formulas.
pub fn apply_closed(op: HeckeOp, m: &MaassSystem, s: PrimeSymbol) -> Result<MaassSystem> {
    let p = s.p;
    let pq = q(p as i64);
    let k = m.k();
    let field = m.field();
    let sh = Shifted::new(m, op, s)?;
    let table = classical::a_f_table(field);
    let n_in = m.support_bound();
    let bound = match op {
        HeckeOp::T => n_in * p,
        HeckeOp::U => n_in * p * p,
        HeckeOp::Delta => n_in,
    };
    let pk = arith::qpow(&pq, k);
    MaassSystem::from_fn(m.base(), k, bound, |b, n| {
        if !maass::is_achieved(&table, n) {
            return field.zero();
        }
        let d = q(n as i64);
        match op {
            HeckeOp::T => {
                let c1 = q((p * p * (p + 1)) as i64);
                let c2 = &pk * q(p as i64 + 1);
                &sh.at(b, &(&d * &pq)).scale(&c1) + &sh.at(b, &(&d / &pq)).scale(&c2)
            }
            HeckeOp::U => {
                let p4 = arith::qpow(&pq, 4);
                let mid = &pk * (&pq * &pq * &pq + &pq * &pq + &pq);
                let mut v = &sh.at(b, &(&d * &pq * &pq)).scale(&p4) + &sh.at(b, &d).scale(&mid);
                if n % p == 0 {
                    v = &v + &sh.at(b, &d).scale(&(&pk * &pq * &pq));
                }
                if n % (p * p) == 0 {
                    v = &v + &sh.at(b, &(&d / (&pq * &pq))).scale(&(&pk * &pk));
                }
                v
            }
            HeckeOp::Delta => sh.at(b, &d),
        }
    })
}

/// The case formula for `T` at a split prime, written through the sums
/// `sum_n A^(m) = sum_{d | p^n eps(h)} d^(k-1) c'(D p^m / d^2)`.
pub fn mess_case_eval(m: &MaassSystem, s: PrimeSymbol, h: &HermitianForm, b: usize) -> Result<FieldElement> {
    let field = m.field();
    if h.is_zero() {
        return Err(Error::ZeroForm);
    }
    if !h.is_psd() {
        return Err(Error::NotPositiveSemidefinite);
    }
    let p = s.p;
    let pq = q(p as i64);
    let k = m.k();
    let sh = Shifted::new(m, HeckeOp::T, s)?;
    let eps = hermlat::epsilon(field, h)?;
    let eps_q = Q::from_integer(eps.clone());
    let big_d = q(field.abs_disc()) * h.det();
    let d_prime = &big_d / (&eps_q * &eps_q);
    let p_divides = |x: &Q| x.is_integer() && (x.to_integer() % BigInt::from(p)).is_zero();
    let sum = |n: i64, mm: i64| -> FieldElement {
        let modulus = &eps_q * arith::qpow(&pq, n);
        if !modulus.is_integer() {
            return field.zero();
        }
        let e = modulus.to_integer().to_u64().expect("small content");
        let mut acc = field.zero();
        for d in arith::divisors(e) {
            let dq = q(d as i64);
            let arg = &big_d * arith::qpow(&pq, mm) / (&dq * &dq);
            let a = sh.at(b, &arg);
            if !a.is_zero() {
                acc = &acc + &a.scale(&arith::qpow(&dq, k - 1));
            }
        }
        acc
    };
    let pk = arith::qpow(&pq, k);
    let p2 = &pq * &pq;
    let p3 = &p2 * &pq;
    let head = sum(0, 1).scale(&p2);
    let tail = match (p_divides(&d_prime), p_divides(&eps_q)) {
        (false, false) => sum(0, 1).scale(&p3),
        (false, true) => &sum(-1, -1).scale(&(&pk * (&pq + q(1)))) + &sum(0, 1).scale(&p3),
        (true, divides_eps) => {
            let mut t = &sum(0, 1).scale(&(&p2 * (&pq - q(1)))) + &sum(1, 1).scale(&p2);
            t = &t + &sum(0, -1).scale(&pk);
            if divides_eps {
                t = &t + &sum(-1, -1).scale(&(&pk * &pq));
            }
            t
        }
    };
    Ok(&head + &tail)
}

/// Fourier coefficient of `op` applied to `m`, computed from the coset table:
/// each representative `(A1, A2)` contributes through `A1^(-1) = [[X, Y], [0, W]]`
/// the term `e_p(tr(N Y W^(-1))) c(h, b X)`, where `N` is the local image of
/// `b* h b`. Terms sharing the same `X` are grouped and the additive
/// character sum over each group is evaluated exactly.
pub fn apply_from_cosets(
    m: &MaassSystem,
    table: &CosetTable,
    s: PrimeSymbol,
    h: &HermitianForm,
    b: usize,
) -> Result<FieldElement> {
    let field = m.field();
    let p = table.p;
    if s.p != p {
        return Err(Error::Mismatch("coset table and prime differ".into()));
    }
    let base_pt = AdelicPoint::base_entry(m.base(), b);
    let mut groups: Vec<(LocalPair, Vec<Mat2Q>)> = Vec::new();
    for rep in &table.reps {
        let inv1 = rep.a1.inv().expect("invertible");
        let inv2 = rep.a2.inv().expect("invertible");
        for blk in [&inv1, &inv2] {
            if !blk.block(1, 0).entries().all(|x| x.is_zero()) {
                return Err(Error::Mismatch("representative is not block upper triangular".into()));
            }
        }
        // x acts on q through its two components; X1 from A1^(-1), X2 from A2^(-1)
        let x = LocalPair::new(inv1.block(0, 0), inv2.block(0, 0));
        let y = inv1.block(0, 1).mul(&inv1.block(1, 1).inv());
        match groups.iter_mut().find(|(g, _)| *g == x) {
            Some((_, ys)) => ys.push(y),
            None => groups.push((x, vec![y])),
        }
    }
    let base_local = base_pt.local().get(&p).cloned().unwrap_or_else(LocalPair::identity);
    let canonical = field.canonical_prime(p)?;
    let mut acc = field.zero();
    for (x, ys) in groups {
        // character values e_p(tr(N Y)); N is the local image of b* h b at s
        let base_here = if canonical == s { base_local.clone() } else { base_local.swap() };
        let weight = character_sum(field, h, s, &base_here, &ys)?;
        if weight.is_zero() {
            continue;
        }
        let point = base_pt.right_mul(field, s, &x);
        let c = maass::coeff_at(m, h, &point)?;
        acc = &acc + &c.scale(&weight);
    }
    Ok(acc)
}

/// `sum_Y e_p(tr(N Y))` where all values `tr(N Y)` are rationals whose
/// p-parts must either all be integral (full count) or be equidistributed over
/// a nontrivial subgroup of `p^(-r) Z / Z` (sum zero).
fn character_sum(
    field: &crate::field::QuadField,
    h: &HermitianForm,
    s: PrimeSymbol,
    base_local: &LocalPair,
    ys: &[Mat2Q],
) -> Result<Q> {
    let p = s.p;
    let emb = crate::field::LocalEmbedding::new(field, s, 24);
    let mm = hermlat::local_matrix(h, &emb);
    let nmat = base_local.second.transpose().mul(&mm).mul(&base_local.first);
    let mut residues: Vec<Q> = Vec::with_capacity(ys.len());
    for y in ys {
        let t = nmat.mul(y);
        let tr = &t.0[0][0] + &t.0[1][1];
        // p-adic fractional part of tr
        let frac = p_fractional_part(&tr, p);
        residues.push(frac);
    }
    if residues.iter().all(|x| x.is_zero()) {
        return Ok(q(residues.len() as i64));
    }
    // the multiset must be a union of cosets of a nontrivial subgroup
    let max_den = residues.iter().map(|x| x.denom().clone()).max().expect("nonempty");
    let counts = {
        let mut c: std::collections::BTreeMap<BigInt, usize> = Default::default();
        for x in &residues {
            let key = (x.numer() * (&max_den / x.denom())).rem_euclid(&max_den);
            *c.entry(key).or_default() += 1;
        }
        c
    };
    let den = max_den.to_u64().expect("small denominator");
    let first = counts.values().next().copied().unwrap_or(0);
    if counts.len() as u64 == den && counts.values().all(|&c| c == first) {
        return Ok(q(0));
    }
    Err(Error::DegenerateCharacterSum(format!("{} values over denominator {den}", residues.len())))
}

fn p_fractional_part(x: &Q, p: u64) -> Q {
    // x = u / (p^r m) with gcd(m, p) = 1: the p-part is (u m^(-1) mod p^r) / p^r
    let (r, m) = arith::split_p(x.denom(), p);
    if r == 0 {
        return q(0);
    }
    let pr = arith::pow_big(p, r as u32);
    let inv = arith::mod_inv(&m, &pr).expect("coprime");
    let num = (x.numer() * inv).rem_euclid(&pr);
    Q::new(num, pr)
}

trait RemEuclid {
    fn rem_euclid(&self, m: &BigInt) -> BigInt;
}

impl RemEuclid for BigInt {
    fn rem_euclid(&self, m: &BigInt) -> BigInt {
        let r = self % m;
        if r.is_negative() {
            r + m
        } else {
            r
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_sizes() {
        for p in [2u64, 3, 5] {
            assert_eq!(coset_table(HeckeOp::T, p).reps.len(), HeckeOp::T.expected_count(p));
            assert_eq!(coset_table(HeckeOp::U, p).reps.len(), HeckeOp::U.expected_count(p));
        }
        assert_eq!(HeckeOp::T.expected_count(2), 15);
        assert_eq!(HeckeOp::U.expected_count(2), 35);
    }

    #[test]
    fn profiles_of_defining_elements() {
        let t = defining_element(HeckeOp::T, 3);
        assert_eq!(invariant_profile(&t.a1, 3), vec![-1, 0, 0, 0]);
        assert_eq!(invariant_profile(&t.a2, 3), vec![0, 0, 0, 1]);
        let u = defining_element(HeckeOp::U, 3);
        assert_eq!(invariant_profile(&u.a1, 3), vec![-1, -1, 0, 0]);
    }

    #[test]
    fn partner_matches_defining_pairs() {
        for op in [HeckeOp::T, HeckeOp::U, HeckeOp::Delta] {
            let d = defining_element(op, 5);
            assert_eq!(d.a1.partner(), d.a2);
        }
    }
}
