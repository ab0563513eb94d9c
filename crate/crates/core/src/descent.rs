//! Descent of Maass systems to tuples of elliptic q-expansions and the
//! matching descent of Hecke operators.

use serde::Serialize;

use crate::arith::{self, q, Q};
use crate::class_base::{ClassPermutation, GammaTuple};
use crate::classical::{self, QExpansion, QTuple};
use crate::error::{Error, Result};
use crate::field::{PrimeSymbol, QuadField, Splitting};
use crate::hecke::{self, HeckeOp};
use crate::maass::MaassSystem;

/// `a~_b(n) = a_F(n) alpha_b(n)` for `1 <= n <= bound`, with `a~_b(0) = 0`.
pub fn descend(m: &MaassSystem, bound: u64) -> Result<QTuple> {
    if bound > m.support_bound() {
        return Err(Error::Truncation { index: bound.to_string(), bound: m.support_bound() });
    }
    let field = m.field();
    let table = classical::a_f_table(field);
    let dabs = field.abs_disc() as u64;
    let entries = (0..m.base().len())
        .map(|b| {
            QExpansion::from_fn(field, m.k() - 1, bound, |n| {
                let c = table[(n % dabs) as usize];
                if n == 0 || c == 0 {
                    field.zero()
                } else {
                    m.alpha(b, n).scale(&q(c as i64))
                }
            })
        })
        .collect();
    QTuple::new(entries)
}

/// `scalars ⊙ P(T_p) ∘ perm`: the tuple is first pulled back along `perm`,
/// then each entry is sent through the polynomial, then scaled entrywise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DescendedOperator {
    pub p: u64,
    pub scalars: GammaTuple,
    /// `(j, c)` stands for `c * T_p^j`.
    pub poly: Vec<(u32, Q)>,
    pub perm: ClassPermutation,
    pub note: Option<String>,
}

impl DescendedOperator {
    pub fn degree(&self) -> u32 {
        self.poly.iter().map(|(j, _)| *j).max().unwrap_or(0)
    }

    pub fn apply(&self, t: &QTuple) -> Result<QTuple> {
        if t.len() != self.scalars.values.len() {
            return Err(Error::Mismatch("tuple length differs from the base".into()));
        }
        let out_bound = t.bound() / self.p.pow(self.degree());
        let pulled = t.pull_back(&self.perm);
        let mut entries = Vec::with_capacity(t.len());
        for (e, c) in pulled.entries.iter().zip(&self.scalars.values) {
            // powers T_p^j e for j up to the degree
            let mut powers = vec![e.clone()];
            for _ in 0..self.degree() {
                let next = powers.last().expect("nonempty").hecke_tp(self.p)?;
                powers.push(next);
            }
            let mut acc = QExpansion::zero(e.field(), e.weight(), out_bound);
            for (j, coef) in &self.poly {
                let term = powers[*j as usize].truncate(out_bound)?;
                acc = acc.add(&term.scale(&e.field().rational(coef.clone())));
            }
            entries.push(acc.scale(c));
        }
        QTuple::new(entries)
    }
}

/// The descended split operator: `T -> gamma_1^(-k) p^2 (p+1) T_p ∘ sigma_1`,
/// `U -> gamma_2^(-k) p^4 (T_p^2 + p^(k-1) + p^(k-3)) ∘ sigma_2` and
/// `Delta -> p^(-2k) gamma_(-4)^(-k) ∘ sigma_(-4)`.
pub fn desc_op_split(op: HeckeOp, s: PrimeSymbol, k: i64, base: &crate::class_base::Base) -> Result<DescendedOperator> {
    let field = base.field();
    if field.splitting(s.p)? != Splitting::Split {
        return Err(Error::NotSplit { p: s.p, d: field.d() });
    }
    base.check_weight(k)?;
    let pq = q(s.p as i64);
    let (n, poly, extra) = match op {
        HeckeOp::T => (1, vec![(1, &pq * &pq * (&pq + q(1)))], q(1)),
        HeckeOp::U => {
            let p4 = arith::qpow(&pq, 4);
            let c0 = &p4 * (arith::qpow(&pq, k - 1) + arith::qpow(&pq, k - 3));
            (2, vec![(2, p4), (0, c0)], q(1))
        }
        HeckeOp::Delta => (-4, vec![(0, q(1))], arith::qpow(&pq, -2 * k)),
    };
    let mut scalars = base.gamma_tuple(s, n, k)?;
    for v in scalars.values.iter_mut() {
        *v = v.scale(&extra);
    }
    Ok(DescendedOperator { p: s.p, scalars, poly, perm: base.sigma(s, n), note: None })
}

/// The descended inert operators, acting diagonally:
/// `T -> p^(-k+4) (p^2+1) T_p^2 + p^4 + p^3 + p - 1` and
/// `U -> p^8 (T_p^4 + (p+3) p^(k-2) T_p^2 + p^(2k-4) (p^2+p+1))`.
pub fn desc_op_inert(op: HeckeOp, p: u64, k: i64, field: &QuadField, len: usize) -> Result<DescendedOperator> {
    if field.splitting(p)? != Splitting::Inert {
        return Err(Error::NotInert { p, d: field.d() });
    }
    let pq = q(p as i64);
    let poly = match op {
        HeckeOp::T => vec![
            (2, arith::qpow(&pq, 4 - k) * (&pq * &pq + q(1))),
            (0, arith::qpow(&pq, 4) + arith::qpow(&pq, 3) + &pq - q(1)),
        ],
        HeckeOp::U => {
            let p8 = arith::qpow(&pq, 8);
            vec![
                (4, p8.clone()),
                (2, &p8 * (&pq + q(3)) * arith::qpow(&pq, k - 2)),
                (0, &p8 * arith::qpow(&pq, 2 * k - 4) * (&pq * &pq + &pq + q(1))),
            ]
        }
        HeckeOp::Delta => return Err(Error::Mismatch("no inert descent for Delta".into())),
    };
    Ok(DescendedOperator {
        p,
        scalars: GammaTuple { values: vec![field.one(); len] },
        poly,
        perm: ClassPermutation::identity(len),
        note: Some("inert formula applied diagonally, without permutation or determinant factors".into()),
    })
}

/// `T_p`-eigenvalue of the Eisenstein series at `p`: `1 + chi_F(p) p^(k-2)`.
pub fn eisenstein_eigenvalue(field: &QuadField, p: u64, k: i64) -> Q {
    q(1) + q(field.chi(p as i64) as i64) * arith::qpow(&q(p as i64), k - 2)
}

/// Scalar by which a descended operator polynomial acts on a `T_p`-eigenform
/// with eigenvalue `lambda`.
pub fn poly_scalar(op: &DescendedOperator, lambda: &Q) -> Q {
    op.poly.iter().fold(q(0), |acc, (j, c)| acc + c * arith::qpow(lambda, *j as i64))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoefficientMismatch {
    pub n: u64,
    pub b: usize,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquivarianceReport {
    pub field: i64,
    pub k: i64,
    pub op: String,
    pub prime: String,
    pub checked_range: [u64; 2],
    pub mismatches: Vec<CoefficientMismatch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EquivarianceReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn compare(lhs: &QTuple, rhs: &QTuple, upto: u64) -> Result<Vec<CoefficientMismatch>> {
    let mut out = Vec::new();
    for b in 0..lhs.len() {
        for n in 1..=upto {
            let (x, y) = (lhs.entries[b].coeff(n as i64)?, rhs.entries[b].coeff(n as i64)?);
            if x != y {
                out.push(CoefficientMismatch { n, b, lhs: x.to_string(), rhs: y.to_string() });
            }
        }
    }
    Ok(out)
}

/// Compare `descend(op_closed(M))` with `desc_op(descend(M))` for
/// `1 <= n <= bound / p^degree`.
pub fn verify_equivariance(m: &MaassSystem, op: HeckeOp, s: PrimeSymbol, bound: u64) -> Result<EquivarianceReport> {
    let d = desc_op_split(op, s, m.k(), m.base())?;
    verify_equivariance_with(m, op, s, bound, &d)
}

/// As [`verify_equivariance`] with a caller-supplied descended operator.
pub fn verify_equivariance_with(
    m: &MaassSystem,
    op: HeckeOp,
    s: PrimeSymbol,
    bound: u64,
    d: &DescendedOperator,
) -> Result<EquivarianceReport> {
    let upto = bound / s.p.pow(d.degree());
    let lhs = descend(&hecke::apply_closed(op, m, s)?, upto)?;
    let rhs = d.apply(&descend(m, bound)?)?;
    Ok(EquivarianceReport {
        field: m.field().d(),
        k: m.k(),
        op: op.to_string(),
        prime: s.to_string(),
        checked_range: [1, upto],
        mismatches: compare(&lhs, &rhs, upto)?,
        note: d.note.clone(),
    })
}

/// Apply the inert operator coefficient-wise and compare with the scalar
/// predicted by the eigenvalue `lambda` of `T_p`.
pub fn verify_inert_eigen(t: &QTuple, op: HeckeOp, p: u64, lambda: &Q) -> Result<EquivarianceReport> {
    let first = t.entries.first().ok_or_else(|| Error::Mismatch("empty tuple".into()))?;
    let field = first.field().clone();
    let k = first.weight() + 1;
    let d = desc_op_inert(op, p, k, &field, t.len())?;
    let upto = t.bound() / p.pow(d.degree());
    let lhs = d.apply(t)?;
    let scalar = field.rational(poly_scalar(&d, lambda));
    let rhs = t.truncate(upto)?.scale_all(&scalar);
    Ok(EquivarianceReport {
        field: field.d(),
        k,
        op: op.to_string(),
        prime: p.to_string(),
        checked_range: [1, upto],
        mismatches: compare(&lhs, &rhs, upto)?,
        note: d.note,
    })
}

/// The Eisenstein tuple restricted to `a_F(n) != 0`, one copy per base entry.
pub fn eisenstein_tuple(field: &QuadField, k: i64, bound: u64, len: usize) -> Result<QTuple> {
    let e = project_to_support(&classical::eisenstein(field, k, bound)?);
    QTuple::new(vec![e; len])
}

/// Zero out the coefficients at `n` with `a_F(n) = 0`.
pub fn project_to_support(e: &QExpansion) -> QExpansion {
    let field = e.field();
    let table = classical::a_f_table(field);
    let dabs = field.abs_disc() as u64;
    QExpansion::from_fn(field, e.weight(), e.bound(), |n| {
        if table[(n % dabs) as usize] == 0 {
            field.zero()
        } else {
            e.coeffs()[n as usize].clone()
        }
    })
}

/// Smallest `n` with `a(n) != 0` but `a_F(n) = 0`, if any.
pub fn off_support_index(e: &QExpansion) -> Option<u64> {
    let table = classical::a_f_table(e.field());
    let dabs = e.field().abs_disc() as u64;
    (0..=e.bound()).find(|&n| table[(n % dabs) as usize] == 0 && !e.coeffs()[n as usize].is_zero())
}

/// Build the Maass system whose descent is the given tuple.
pub fn lift(base: &crate::class_base::Base, k: i64, t: &QTuple) -> Result<MaassSystem> {
    for e in &t.entries {
        if let Some(n) = off_support_index(e) {
            return Err(Error::OffSupport { n });
        }
    }
    MaassSystem::from_expansions(base, k, &t.entries)
}
