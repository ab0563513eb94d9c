//! Maass coefficient systems, coefficient evaluation at adelic points and the
//! consistency test that recovers coefficient functions from a table.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{self, q, Q};
use crate::class_base::Base;
use crate::classical::{self, QExpansion};
use crate::error::{Error, Result};
use crate::field::{FieldElement, IdealSymbol, LocalEmbedding, PrimeSymbol, QuadField, Splitting};
use crate::hermlat::{self, HermitianForm};
use crate::matrix::Mat2Q;

const MAX_PRECISION: u32 = 1 << 12;

/// Coefficient functions `alpha_b : Z_{>=0} -> F`, one per base entry, each
/// supported on `0..=N`.
#[derive(Clone, Debug)]
pub struct MaassSystem {
    base: Base,
    k: i64,
    alphas: Vec<Vec<FieldElement>>,
}

impl MaassSystem {
    pub fn new(base: &Base, k: i64, alphas: Vec<Vec<FieldElement>>) -> Result<Self> {
        base.check_weight(k)?;
        if alphas.len() != base.len() {
            return Err(Error::Mismatch(format!(
                "{} coefficient functions for a base of size {}",
                alphas.len(),
                base.len()
            )));
        }
        let n = alphas.iter().map(|a| a.len()).max().unwrap_or(1).max(1);
        let field = base.field();
        let alphas = alphas
            .into_iter()
            .map(|mut a| {
                a.resize(n, field.zero());
                a
            })
            .collect();
        Ok(MaassSystem { base: base.clone(), k, alphas })
    }

    pub fn from_fn(
        base: &Base,
        k: i64,
        bound: u64,
        f: impl Fn(usize, u64) -> FieldElement,
    ) -> Result<Self> {
        let alphas = (0..base.len()).map(|b| (0..=bound).map(|n| f(b, n)).collect()).collect();
        Self::new(base, k, alphas)
    }

    pub fn zero(base: &Base, k: i64, bound: u64) -> Result<Self> {
        Self::from_fn(base, k, bound, |_, _| base.field().zero())
    }

    /// Seeded random data with small integer coordinates.
    pub fn random(base: &Base, k: i64, bound: u64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = base.field();
        let mut alphas = Vec::new();
        for _ in 0..base.len() {
            alphas.push(
                (0..=bound)
                    .map(|_| field.elem(q(rng.gen_range(-9..=9)), q(rng.gen_range(-9..=9))))
                    .collect(),
            );
        }
        Self::new(base, k, alphas)
    }

    /// `alpha_b(n) = a(n) / a_F(n)` where `a_F(n) != 0`, zero elsewhere, with the
    /// same expansion for every base entry.
    pub fn from_expansion(base: &Base, k: i64, e: &QExpansion) -> Result<Self> {
        Self::from_expansions(base, k, &vec![e.clone(); base.len()])
    }

    pub fn from_expansions(base: &Base, k: i64, es: &[QExpansion]) -> Result<Self> {
        if es.len() != base.len() {
            return Err(Error::Mismatch("one expansion per base entry is required".into()));
        }
        let table = classical::a_f_table(base.field());
        let dabs = base.field().abs_disc() as u64;
        let alphas = es
            .iter()
            .map(|e| {
                (0..=e.bound())
                    .map(|n| {
                        let c = table[(n % dabs) as usize];
                        if c == 0 {
                            base.field().zero()
                        } else {
                            e.coeffs()[n as usize].scale(&q(c as i64).recip())
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(base, k, alphas)
    }

    pub fn base(&self) -> &Base {
        &self.base
    }

    pub fn field(&self) -> &QuadField {
        self.base.field()
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn support_bound(&self) -> u64 {
        self.alphas[0].len() as u64 - 1
    }

    pub fn alphas(&self) -> &[Vec<FieldElement>] {
        &self.alphas
    }

    pub fn alpha(&self, b: usize, n: u64) -> FieldElement {
        self.alphas[b].get(n as usize).cloned().unwrap_or_else(|| self.field().zero())
    }

    /// `alpha_b(m)`, zero unless `m` is a nonnegative integer in the support.
    pub fn alpha_q(&self, b: usize, m: &Q) -> FieldElement {
        match arith::as_nonneg_int(m) {
            Some(n) => self.alpha(b, n),
            None => self.field().zero(),
        }
    }

    pub fn set_alpha(&mut self, b: usize, n: u64, v: FieldElement) {
        let zero = self.field().zero();
        let a = &mut self.alphas[b];
        if a.len() <= n as usize {
            a.resize(n as usize + 1, zero);
        }
        a[n as usize] = v;
        let len = self.alphas.iter().map(|a| a.len()).max().unwrap_or(1);
        let zero = self.field().zero();
        for a in &mut self.alphas {
            a.resize(len, zero.clone());
        }
    }

    pub fn scale(&self, c: &FieldElement) -> MaassSystem {
        MaassSystem {
            base: self.base.clone(),
            k: self.k,
            alphas: self.alphas.iter().map(|a| a.iter().map(|x| x * c).collect()).collect(),
        }
    }

    pub fn add(&self, o: &MaassSystem) -> MaassSystem {
        let n = self.support_bound().max(o.support_bound());
        let alphas = (0..self.base.len())
            .map(|b| (0..=n).map(|i| &self.alpha(b, i) + &o.alpha(b, i)).collect())
            .collect();
        MaassSystem { base: self.base.clone(), k: self.k, alphas }
    }

    /// Same Maass form expressed through another base: entry `b'` receives
    /// `conj(g)^(-k) alpha_b`, where `b` is the old entry of the same class and
    /// `g` generates `det(b') det(b)^(-1)`.
    pub fn transport(&self, new_base: &Base) -> Result<MaassSystem> {
        if new_base.field() != self.field() || new_base.len() != self.base.len() {
            return Err(Error::Mismatch("bases belong to different fields".into()));
        }
        let mut alphas = Vec::new();
        for j in 0..new_base.len() {
            let det = new_base.det(j);
            let i = self.base.index_of_class(&det);
            let g = self.base.generator(&det.mul(&self.base.det(i).inv()))?;
            let f = g.conj().pow(-self.k);
            alphas.push(self.alphas[i].iter().map(|x| x * &f).collect());
        }
        MaassSystem::new(new_base, self.k, alphas)
    }
}

impl PartialEq for MaassSystem {
    fn eq(&self, o: &Self) -> bool {
        let n = self.support_bound().max(o.support_bound());
        self.k == o.k
            && self.base.entries() == o.base.entries()
            && (0..self.base.len()).all(|b| (0..=n).all(|i| self.alpha(b, i) == o.alpha(b, i)))
    }
}

/// A pair of 2x2 matrices, the components of an element of `GL_2(F_p)` at a
/// split prime and at its conjugate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalPair {
    pub first: Mat2Q,
    pub second: Mat2Q,
}

impl LocalPair {
    pub fn new(first: Mat2Q, second: Mat2Q) -> Self {
        LocalPair { first, second }
    }

    pub fn identity() -> Self {
        LocalPair::new(Mat2Q::identity(), Mat2Q::identity())
    }

    pub fn mul(&self, o: &LocalPair) -> LocalPair {
        LocalPair::new(self.first.mul(&o.first), self.second.mul(&o.second))
    }

    /// `(conj(x)^t)^(-1)`; conjugation swaps the two components.
    pub fn hat(&self) -> LocalPair {
        LocalPair::new(self.second.transpose().inv(), self.first.transpose().inv())
    }

    pub fn swap(&self) -> LocalPair {
        LocalPair::new(self.second.clone(), self.first.clone())
    }

    pub fn is_identity(&self) -> bool {
        self.first.is_identity() && self.second.is_identity()
    }
}

/// A finite adele in `GL_2(A_F,f)` that is the identity outside finitely many
/// split primes. Components are stored at the canonical prime above `p` first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdelicPoint {
    local: BTreeMap<u64, LocalPair>,
}

impl AdelicPoint {
    pub fn identity() -> Self {
        AdelicPoint::default()
    }

    /// The base entry `b_i` as an adele.
    pub fn base_entry(base: &Base, i: usize) -> Self {
        match base.entries()[i] {
            crate::class_base::BaseEntry::Identity => AdelicPoint::identity(),
            crate::class_base::BaseEntry::Prime(s) => {
                AdelicPoint::identity().scalar(base.field(), s, base.exponent())
            }
        }
    }

    /// Right multiplication by the scalar adele that is `p^e` at `s` and
    /// `p^(-e)` at its conjugate.
    pub fn scalar(&self, k: &QuadField, s: PrimeSymbol, e: i64) -> Self {
        let pe = arith::qpow(&q(s.p as i64), e);
        let w = LocalPair::new(Mat2Q::scalar(pe.clone()), Mat2Q::scalar(pe.recip()));
        self.right_mul(k, s, &w)
    }

    /// Right multiplication by a local element given in coordinates at `s`.
    pub fn right_mul(&self, k: &QuadField, s: PrimeSymbol, w: &LocalPair) -> Self {
        let canonical = k.canonical_prime(s.p).expect("split prime");
        let w = if canonical == s { w.clone() } else { w.swap() };
        let mut local = self.local.clone();
        let cur = local.remove(&s.p).unwrap_or_else(LocalPair::identity);
        let next = cur.mul(&w);
        if !next.is_identity() {
            local.insert(s.p, next);
        }
        AdelicPoint { local }
    }

    pub fn local(&self) -> &BTreeMap<u64, LocalPair> {
        &self.local
    }

    /// The ideal generated by `det q`.
    pub fn det_ideal(&self, k: &QuadField) -> IdealSymbol {
        let mut out = IdealSymbol::one();
        for (&p, pair) in &self.local {
            let [s, sbar] = k.primes_above(p).expect("split prime");
            let v1 = arith::vp(&pair.first.det(), p).expect("invertible");
            let v2 = arith::vp(&pair.second.det(), p).expect("invertible");
            out = out.mul(&IdealSymbol::prime(s, v1)).mul(&IdealSymbol::prime(sbar, v2));
        }
        out
    }
}

fn check_form(k: &QuadField, h: &HermitianForm) -> Result<()> {
    if h.is_zero() {
        return Err(Error::ZeroForm);
    }
    if !hermlat::in_t(k, h) {
        return Err(Error::NotInLattice);
    }
    if !h.is_psd() {
        return Err(Error::NotPositiveSemidefinite);
    }
    Ok(())
}

fn divisor_sum(m: &MaassSystem, b: usize, content: &BigInt, big_d: &Q) -> FieldElement {
    let field = m.field();
    let mut acc = field.zero();
    let e = content.to_u64().expect("content fits in u64");
    for d in arith::divisors(e) {
        let dq = q(d as i64);
        let arg = big_d / (&dq * &dq);
        let a = m.alpha_q(b, &arg);
        if !a.is_zero() {
            acc = &acc + &a.scale(&arith::qpow(&dq, m.k - 1));
        }
    }
    acc
}

/// `sum_{d | eps(h)} d^(k-1) alpha_b(D_F det(h) / d^2)`.
pub fn krieg_coeff(m: &MaassSystem, b: usize, h: &HermitianForm) -> Result<FieldElement> {
    let k = m.field();
    check_form(k, h)?;
    let eps = hermlat::epsilon(k, h)?;
    let big_d = q(k.abs_disc()) * h.det();
    Ok(divisor_sum(m, b, &eps, &big_d))
}

/// Valuation of the content of `x2^t M x1` at `p`, where `M` is the image of
/// `h` at the canonical prime above `p`.
pub fn local_content(k: &QuadField, h: &HermitianForm, p: u64, pair: &LocalPair) -> Result<i64> {
    let s = k.canonical_prime(p)?;
    let vx = pair.first.vmin(p).unwrap_or(0) + pair.second.vmin(p).unwrap_or(0);
    let mut prec = 16u32;
    while prec <= MAX_PRECISION {
        let emb = LocalEmbedding::new(k, s, prec);
        let shift = emb.embed(&h.b).1.max(emb.embed(&h.b.conj()).1);
        let mm = hermlat::local_matrix(h, &emb);
        let n = pair.second.transpose().mul(&mm).mul(&pair.first);
        let guard = prec as i64 - shift + vx;
        if let Some(v) = n.vmin(p) {
            if v < guard {
                return Ok(v);
            }
        }
        prec *= 2;
    }
    Err(Error::Mismatch("local content did not stabilize".into()))
}

/// The normalized Fourier coefficient at `h` and the adelic point `q`.
pub fn coeff_at(m: &MaassSystem, h: &HermitianForm, point: &AdelicPoint) -> Result<FieldElement> {
    let k = m.field();
    check_form(k, h)?;
    let base = m.base();
    let det = point.det_ideal(k);
    let j = base.index_of_class(&det);
    let g = base.generator(&det.mul(&base.det(j).inv()))?;
    let factor = g.conj().pow(-m.k);

    let pairings = hermlat::trace_pairings(k, h);
    let content_h = pairings.iter().fold(BigInt::zero(), |acc, t| num_integer::Integer::gcd(&acc, &t.to_integer()));
    let mut content = BigInt::one();
    let mut scale = q(1);
    for (&p, pair) in point.local() {
        if k.splitting(p)? != Splitting::Split {
            return Err(Error::NotSplit { p, d: k.d() });
        }
        let ep = local_content(k, h, p, pair)?;
        if ep < 0 {
            return Ok(k.zero());
        }
        content *= arith::pow_big(p, ep as u32);
        let v = arith::vp(&pair.first.det(), p).unwrap() + arith::vp(&pair.second.det(), p).unwrap();
        scale *= arith::qpow(&q(p as i64), v);
    }
    for (ell, e) in arith::factor(content_h.to_u64().expect("small content")) {
        if !point.local().contains_key(&ell) {
            content *= arith::pow_big(ell, e);
        }
    }
    let big_d = q(k.abs_disc()) * h.det() * scale;
    Ok(&factor * &divisor_sum(m, j, &content, &big_d))
}

#[derive(Clone, Debug)]
pub enum MaassVerdict {
    Consistent {
        /// Recovered `alpha_b(D)` for every `D` reached by a form of content one.
        alphas: Vec<BTreeMap<u64, FieldElement>>,
        /// Entries that needed a value no content-one form determines.
        skipped: usize,
    },
    Inconsistent {
        h: HermitianForm,
        b: usize,
        expected: FieldElement,
        found: FieldElement,
    },
}

impl MaassVerdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, MaassVerdict::Consistent { .. })
    }
}

/// Decide whether a coefficient table `(h, b) -> value` is of Maass type.
pub fn is_maass_consistent(
    table: &[(HermitianForm, usize, FieldElement)],
    base: &Base,
    k: i64,
) -> Result<MaassVerdict> {
    let field = base.field();
    let dabs = q(field.abs_disc());
    let mut rec: Vec<BTreeMap<u64, FieldElement>> = vec![BTreeMap::new(); base.len()];
    let mut contents = Vec::with_capacity(table.len());
    for (h, b, v) in table {
        check_form(field, h)?;
        let eps = hermlat::epsilon(field, h)?;
        if eps.is_one() {
            let d = arith::as_nonneg_int(&(&dabs * h.det())).expect("D_F det h is an integer");
            match rec[*b].get(&d) {
                Some(prev) if prev != v => {
                    return Ok(MaassVerdict::Inconsistent {
                        h: h.clone(),
                        b: *b,
                        expected: prev.clone(),
                        found: v.clone(),
                    })
                }
                _ => {
                    rec[*b].insert(d, v.clone());
                }
            }
        }
        contents.push(eps);
    }
    let mut skipped = 0;
    'entries: for ((h, b, v), eps) in table.iter().zip(&contents) {
        let big_d = &dabs * h.det();
        let mut acc = field.zero();
        for d in arith::divisors(eps.to_u64().expect("small content")) {
            let dq = q(d as i64);
            let arg = &big_d / (&dq * &dq);
            let Some(n) = arith::as_nonneg_int(&arg) else { continue };
            match rec[*b].get(&n) {
                Some(a) => acc = &acc + &a.scale(&arith::qpow(&dq, k - 1)),
                None => {
                    skipped += 1;
                    continue 'entries;
                }
            }
        }
        if acc != *v {
            return Ok(MaassVerdict::Inconsistent { h: h.clone(), b: *b, expected: acc, found: v.clone() });
        }
    }
    Ok(MaassVerdict::Consistent { alphas: rec, skipped })
}

/// Whether `n` is `D_F det h` for some positive semidefinite `h` in `T` of
/// content one, given the table of `a_F`; this happens exactly when
/// `a_F(n) != 0`.
pub fn is_achieved(a_f_table: &[u64], n: u64) -> bool {
    a_f_table[(n % a_f_table.len() as u64) as usize] != 0
}
