//! Hermitian 2x2 forms, the dual lattice `T`, content, enumeration and
//! diagonalization modulo powers of a split prime.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{self, q, Q};
use crate::error::{Error, Result};
use crate::field::{FieldElement, LocalEmbedding, PrimeSymbol, QuadField, Splitting};
use crate::matrix::{Mat2F, Mat2Q};

/// The hermitian matrix `[[a, b], [conj(b), c]]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HermitianForm {
    pub a: Q,
    pub b: FieldElement,
    pub c: Q,
}

impl fmt::Display for HermitianForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.b.conj(), self.c)
    }
}

impl HermitianForm {
    pub fn new(a: Q, b: FieldElement, c: Q) -> Self {
        HermitianForm { a, b, c }
    }

    pub fn identity(k: &QuadField) -> Self {
        HermitianForm::new(q(1), k.zero(), q(1))
    }

    pub fn det(&self) -> Q {
        &self.a * &self.c - self.b.norm()
    }

    pub fn trace(&self) -> Q {
        &self.a + &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.c.is_zero() && self.b.is_zero()
    }

    pub fn is_psd(&self) -> bool {
        !self.a.is_negative() && !self.c.is_negative() && !self.det().is_negative()
    }

    pub fn scale(&self, m: &Q) -> Self {
        HermitianForm::new(&self.a * m, self.b.scale(m), &self.c * m)
    }

    pub fn sub(&self, o: &HermitianForm) -> Self {
        HermitianForm::new(&self.a - &o.a, &self.b - &o.b, &self.c - &o.c)
    }

    pub fn to_matrix(&self, k: &QuadField) -> Mat2F {
        Mat2F::new(
            k.rational(self.a.clone()),
            self.b.clone(),
            self.b.conj(),
            k.rational(self.c.clone()),
        )
    }

    pub fn from_matrix(m: &Mat2F) -> Result<Self> {
        let h = HermitianForm::new(m.get(0, 0).x.clone(), m.get(0, 1).clone(), m.get(1, 1).x.clone());
        if !m.get(0, 0).is_rational() || !m.get(1, 1).is_rational() || *m.get(1, 0) != m.get(0, 1).conj() {
            return Err(Error::Mismatch("matrix is not hermitian".into()));
        }
        Ok(h)
    }
}

/// Generators of the lattice `S(Z)` of integral hermitian matrices.
pub fn s_generators(k: &QuadField) -> [Mat2F; 4] {
    let (z, o) = (k.zero(), k.one());
    let w = k.omega();
    [
        Mat2F::new(o.clone(), z.clone(), z.clone(), z.clone()),
        Mat2F::new(z.clone(), z.clone(), z.clone(), o.clone()),
        Mat2F::new(z.clone(), o.clone(), o.clone(), z.clone()),
        Mat2F::new(z.clone(), w.clone(), w.conj(), z),
    ]
}

/// The four values `tr(s h)` for `s` running over the generators of `S(Z)`.
pub fn trace_pairings(k: &QuadField, h: &HermitianForm) -> [Q; 4] {
    let hm = h.to_matrix(k);
    s_generators(k).map(|s| {
        let t = s.mul(&hm).trace();
        debug_assert!(t.is_rational());
        t.x
    })
}

pub fn in_t(k: &QuadField, h: &HermitianForm) -> bool {
    trace_pairings(k, h).iter().all(|t| t.is_integer())
}

pub fn epsilon_p(k: &QuadField, h: &HermitianForm, p: u64) -> Result<i64> {
    if h.is_zero() {
        return Err(Error::ZeroForm);
    }
    let ts = trace_pairings(k, h);
    if !ts.iter().all(|t| t.is_integer()) {
        return Err(Error::NotInLattice);
    }
    Ok(ts.iter().filter_map(|t| arith::vp(t, p)).min().expect("nonzero form"))
}

pub fn epsilon(k: &QuadField, h: &HermitianForm) -> Result<BigInt> {
    if h.is_zero() {
        return Err(Error::ZeroForm);
    }
    let ts = trace_pairings(k, h);
    if !ts.iter().all(|t| t.is_integer()) {
        return Err(Error::NotInLattice);
    }
    Ok(ts.iter().fold(BigInt::zero(), |g, t| g.gcd(&t.to_integer())))
}

/// `u* h u`.
pub fn transform(k: &QuadField, h: &HermitianForm, u: &Mat2F) -> HermitianForm {
    let m = u.conj_transpose().mul(&h.to_matrix(k)).mul(u);
    HermitianForm::from_matrix(&m).expect("congruence preserves hermitian matrices")
}

/// Image of `h` in `M_2(Q_p)` at the prime `s`, as `[[a, phi(b)], [phi(conj b), c]]`.
pub fn local_matrix(h: &HermitianForm, emb: &LocalEmbedding) -> Mat2Q {
    Mat2Q::new(
        h.a.clone(),
        emb.embed_q(&h.b),
        emb.embed_q(&h.b.conj()),
        h.c.clone(),
    )
}

/// Content at `p` computed from the split local matrix instead of the trace
/// pairings; for `h` in `T` this equals [`epsilon_p`].
pub fn epsilon_p_local(k: &QuadField, h: &HermitianForm, s: PrimeSymbol) -> Result<i64> {
    if h.is_zero() {
        return Err(Error::ZeroForm);
    }
    let mut prec = 8u32;
    loop {
        let emb = LocalEmbedding::new(k, s, prec);
        let m = local_matrix(h, &emb);
        // entries agree with the true values modulo p^(prec - shift)
        let shift = emb.embed(&h.b).1;
        if let Some(v) = m.vmin(s.p) {
            if v < prec as i64 - shift {
                return Ok(v);
            }
        }
        prec *= 2;
    }
}

/// All `h` in `T` with `0 <= tr h <= trace_max`, in a fixed order. With
/// `require_psd` only positive semidefinite forms are returned; otherwise
/// the diagonal entries range over `[-trace_max, trace_max]` and `N(b)` is
/// bounded by `trace_max^2`.
pub fn enumerate_t(k: &QuadField, trace_max: i64, require_psd: bool) -> Vec<HermitianForm> {
    let dabs = k.abs_disc();
    let mut out = Vec::new();
    for tr in 0..=trace_max {
        let amin = if require_psd { 0 } else { tr - trace_max };
        let amax = if require_psd { tr } else { trace_max };
        for a in amin..=amax {
            let c = tr - a;
            if !require_psd && c.abs() > trace_max {
                continue;
            }
            let norm_bound = if require_psd { a * c } else { trace_max * trace_max };
            if norm_bound < 0 {
                continue;
            }
            for b in grid_elements(k, dabs, norm_bound) {
                let h = HermitianForm::new(q(a), b, q(c));
                if (!require_psd || h.is_psd()) && in_t(k, &h) {
                    out.push(h);
                }
            }
        }
    }
    out
}

/// Elements of the inverse different `O / sqrt(-D_F)` with norm at most
/// `bound`, ordered by their coordinates `(j, i)` in `(i + j omega) / dabs`.
fn grid_elements(k: &QuadField, dabs: i64, bound: i64) -> Vec<FieldElement> {
    // b = beta / root with N(beta) = (u + v t/2)^2 + v^2 dabs / 4 <= dabs * bound
    let root = if dabs == -k.d() { k.sqrt_d() } else { k.sqrt_d().scale(&q(2)) };
    let inv = root.inv();
    let m = (dabs * bound) as f64;
    let t = k.omega_trace() as f64;
    let vmax = (2.0 * (m / dabs as f64).sqrt()).floor() as i64 + 1;
    let lim = q(bound);
    let mut out = Vec::new();
    for v in -vmax..=vmax {
        let center = -(v as f64) * t / 2.0;
        let r = m.sqrt() + 1.0;
        for u in (center - r).floor() as i64..=(center + r).ceil() as i64 {
            let e = &k.from_omega(q(u), q(v)) * &inv;
            if e.norm() <= lim {
                out.push(e);
            }
        }
    }
    let den = q(dabs);
    out.sort_by_cached_key(|e| {
        let (x, y) = k.to_omega(e);
        ((y * &den).to_integer(), (x * &den).to_integer())
    });
    out
}

/// Output of [`diagonalize_mod`]: `u* h u = eps(h) diag(a, d)` modulo `p^n T`.
#[derive(Clone, Debug)]
pub struct Diagonalization {
    pub u: Mat2F,
    pub a: BigInt,
    pub d: BigInt,
}

pub fn diagonalize_mod(k: &QuadField, h: &HermitianForm, p: u64, n: u32) -> Result<Diagonalization> {
    if k.splitting(p)? != Splitting::Split {
        return Err(Error::NotSplit { p, d: k.d() });
    }
    let eps = epsilon(k, h)?;
    let prim = h.scale(&Q::from_integer(eps).recip());
    let s = k.canonical_prime(p)?;
    let emb = LocalEmbedding::new(k, s, n);
    let modulus = emb.modulus.clone();
    let m = local_matrix(&prim, &emb);
    let mut mm = [[BigInt::zero(), BigInt::zero()], [BigInt::zero(), BigInt::zero()]];
    for i in 0..2 {
        for j in 0..2 {
            mm[i][j] = arith::residue(&m.0[i][j], &modulus).expect("p-integral entries");
        }
    }
    let (a1, a2, diag) = eliminate(&mm, p, &modulus)?;
    let conj_emb = LocalEmbedding::new(k, k.conj_prime(s), n);
    let lifter = CrtLift { k, p, modulus: &modulus, r1: &emb.root, r2: &conj_emb.root };
    let u1 = lifter.lift_sl2(&a1, true)?;
    let u2 = lifter.lift_sl2(&a2, false)?;
    Ok(Diagonalization { u: u1.mul(&u2), a: diag.0, d: diag.1 })
}

type M2 = [[BigInt; 2]; 2];

fn m2_mul(x: &M2, y: &M2, m: &BigInt) -> M2 {
    let e = |i: usize, j: usize| (&x[i][0] * &y[0][j] + &x[i][1] * &y[1][j]).mod_floor(m);
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn m2(a: i64, b: i64, c: i64, d: i64) -> M2 {
    [[a.into(), b.into()], [c.into(), d.into()]]
}

fn m2_t(x: &M2) -> M2 {
    [[x[0][0].clone(), x[1][0].clone()], [x[0][1].clone(), x[1][1].clone()]]
}

fn is_unit(x: &BigInt, p: u64) -> bool {
    !(x % BigInt::from(p)).is_zero()
}

/// Find `A1, A2` in `SL_2(Z/p^n)` with `A2^t M A1` diagonal and unit
/// upper-left entry.
fn eliminate(mm: &M2, p: u64, modulus: &BigInt) -> Result<(M2, M2, (BigInt, BigInt))> {
    let mut left = m2(1, 0, 0, 1); // accumulates A2^t
    let mut right = m2(1, 0, 0, 1); // accumulates A1
    let mut cur = mm.clone();
    let (ui, uj) = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .find(|&(i, j)| is_unit(&cur[i][j], p))
        .ok_or_else(|| Error::Diagonalization("no unit entry in a primitive form".into()))?;
    if uj == 1 {
        let sw = m2(0, 1, -1, 0);
        cur = m2_mul(&cur, &sw, modulus);
        right = m2_mul(&right, &sw, modulus);
    }
    if ui == 1 {
        let sw = m2(0, -1, 1, 0);
        cur = m2_mul(&sw, &cur, modulus);
        left = m2_mul(&sw, &left, modulus);
    }
    let inv = arith::mod_inv(&cur[0][0], modulus).expect("unit pivot");
    let x = (-&cur[0][1] * &inv).mod_floor(modulus);
    let col = [[BigInt::one(), x], [BigInt::zero(), BigInt::one()]];
    cur = m2_mul(&cur, &col, modulus);
    right = m2_mul(&right, &col, modulus);
    let y = (-&cur[1][0] * &inv).mod_floor(modulus);
    let row = [[BigInt::one(), BigInt::zero()], [y, BigInt::one()]];
    cur = m2_mul(&row, &cur, modulus);
    left = m2_mul(&row, &left, modulus);
    debug_assert!(cur[0][1].is_zero() && cur[1][0].is_zero());
    let a = cur[0][0].clone();
    let d = cur[1][1].clone();
    Ok((right, m2_t(&left), (a, d)))
}

struct CrtLift<'a> {
    k: &'a QuadField,
    p: u64,
    modulus: &'a BigInt,
    r1: &'a BigInt,
    r2: &'a BigInt,
}

impl CrtLift<'_> {
    /// Integer `t` of the field with images `x` at the first prime and `y` at
    /// its conjugate, modulo `p^n`.
    fn lift(&self, x: &BigInt, y: &BigInt) -> FieldElement {
        let m = self.modulus;
        let diff = (self.r1 - self.r2).mod_floor(m);
        let inv = arith::mod_inv(&diff, m).expect("distinct roots at a split prime");
        let v = ((x - y) * inv).mod_floor(m);
        let u = (x - &v * self.r1).mod_floor(m);
        self.k.from_omega(Q::from_integer(u), Q::from_integer(v))
    }

    fn elementary(&self, upper: bool, x: &BigInt, first: bool) -> Mat2F {
        let z = BigInt::zero();
        let t = if first { self.lift(x, &z) } else { self.lift(&z, x) };
        let (o, zf) = (self.k.one(), self.k.zero());
        if upper {
            Mat2F::new(o.clone(), t, zf, o)
        } else {
            Mat2F::new(o.clone(), zf, t, o)
        }
    }

    /// Lift `a` in `SL_2(Z/p^n)` to `u` in `SL_2(O)` whose image is `a` at one
    /// prime above `p` and the identity at the other.
    fn lift_sl2(&self, a: &M2, first: bool) -> Result<Mat2F> {
        let m = self.modulus;
        let p = self.p;
        let mut word: Vec<(bool, BigInt)> = Vec::new();
        let mut a = a.clone();
        if !is_unit(&a[0][0], p) {
            // a = E12(1) * (E12(-1) a), and the new corner is a unit
            word.push((true, BigInt::one()));
            a = m2_mul(&m2(1, -1, 0, 1), &a, m);
        }
        let ainv = arith::mod_inv(&a[0][0], m)
            .ok_or_else(|| Error::Diagonalization("matrix is not in SL_2".into()))?;
        // a = E21(c/a) w(a) w(-1) E12(b/a), w(x) = E12(x) E21(-1/x) E12(x)
        word.push((false, (&a[1][0] * &ainv).mod_floor(m)));
        for x in [a[0][0].clone(), (-BigInt::one()).mod_floor(m)] {
            let xinv = arith::mod_inv(&x, m).expect("unit");
            word.push((true, x.clone()));
            word.push((false, (-xinv).mod_floor(m)));
            word.push((true, x));
        }
        word.push((true, (&a[0][1] * &ainv).mod_floor(m)));
        let mut u = Mat2F::identity(self.k);
        for (upper, x) in &word {
            u = u.mul(&self.elementary(*upper, x, first));
        }
        Ok(u)
    }
}

/// Independent check of a diagonalization: `u` is integral with determinant
/// one, `p` does not divide `a`, and `(u* h u - eps(h) diag(a, d)) / p^n` lies
/// in `T`.
pub fn check_diagonalization(
    k: &QuadField,
    h: &HermitianForm,
    p: u64,
    n: u32,
    result: &Diagonalization,
) -> bool {
    let u = &result.u;
    let integral = u.0.iter().flatten().all(|e| k.is_integral(e));
    if !integral || u.det() != k.one() {
        return false;
    }
    if (&result.a % BigInt::from(p)).is_zero() {
        return false;
    }
    let Ok(eps) = epsilon(k, h) else {
        return false;
    };
    let eps = Q::from_integer(eps);
    let target = HermitianForm::new(
        &eps * Q::from_integer(result.a.clone()),
        k.zero(),
        &eps * Q::from_integer(result.d.clone()),
    );
    let diff = transform(k, h, u).sub(&target);
    let scaled = diff.scale(&Q::from_integer(arith::pow_big(p, n)).recip());
    in_t(k, &scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::qf;

    #[test]
    fn trace_conditions_gaussian() {
        let k = QuadField::new(-1).unwrap();
        let i = k.sqrt_d();
        assert!(in_t(&k, &HermitianForm::identity(&k)));
        let h = HermitianForm::new(q(1), i.scale(&qf(1, 2)), q(1));
        assert!(in_t(&k, &h));
        let h = HermitianForm::new(q(1), k.rational(qf(1, 2)), q(1));
        assert_eq!(trace_pairings(&k, &h), [q(1), q(1), q(1), q(0)]);
        assert!(in_t(&k, &h));
        let h = HermitianForm::new(q(1), k.rational(qf(1, 4)), q(1));
        assert!(!in_t(&k, &h));
    }

    #[test]
    fn content_examples() {
        let k = QuadField::new(-1).unwrap();
        let id = HermitianForm::identity(&k);
        assert_eq!(epsilon(&k, &id).unwrap(), BigInt::one());
        assert_eq!(epsilon(&k, &id.scale(&q(2))).unwrap(), BigInt::from(2));
        let h = HermitianForm::new(q(2), k.sqrt_d().scale(&qf(1, 2)), q(2));
        assert_eq!(epsilon(&k, &h).unwrap(), BigInt::one());
        let zero = HermitianForm::new(q(0), k.zero(), q(0));
        assert!(matches!(epsilon(&k, &zero), Err(Error::ZeroForm)));
    }

    #[test]
    fn diagonal_transform() {
        let k = QuadField::new(-7).unwrap();
        let h = HermitianForm::new(q(2), k.omega().scale(&qf(1, 7)), q(3));
        let u = Mat2F::new(k.one(), k.zero(), k.zero(), k.int(5));
        let t = transform(&k, &h, &u);
        assert_eq!(t, HermitianForm::new(q(2), h.b.scale(&q(5)), q(75)));
    }

    #[test]
    fn identity_diagonalizes_trivially() {
        let k = QuadField::new(-1).unwrap();
        let r = diagonalize_mod(&k, &HermitianForm::identity(&k), 5, 1).unwrap();
        assert!(check_diagonalization(&k, &HermitianForm::identity(&k), 5, 1, &r));
        assert_eq!(r.a, BigInt::one());
        assert_eq!(r.d, BigInt::one());
    }
}
