//! Small dense matrices: 2x2 over the field and 2x2 over the rationals.

use std::fmt;

use num_traits::{One, Zero};

use crate::arith::{self, q, Q};
use crate::field::{FieldElement, QuadField};

/// A 2x2 matrix over the quadratic field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat2F(pub [[FieldElement; 2]; 2]);

impl Mat2F {
    pub fn new(a: FieldElement, b: FieldElement, c: FieldElement, d: FieldElement) -> Self {
        Mat2F([[a, b], [c, d]])
    }

    pub fn identity(k: &QuadField) -> Self {
        Mat2F::new(k.one(), k.zero(), k.zero(), k.one())
    }

    pub fn scalar(e: &FieldElement, k: &QuadField) -> Self {
        Mat2F::new(e.clone(), k.zero(), k.zero(), e.clone())
    }

    pub fn get(&self, i: usize, j: usize) -> &FieldElement {
        &self.0[i][j]
    }

    pub fn mul(&self, o: &Mat2F) -> Mat2F {
        let e = |i: usize, j: usize| &(&self.0[i][0] * &o.0[0][j]) + &(&self.0[i][1] * &o.0[1][j]);
        Mat2F::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn conj_transpose(&self) -> Mat2F {
        let m = &self.0;
        Mat2F::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn det(&self) -> FieldElement {
        let m = &self.0;
        &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0])
    }

    pub fn trace(&self) -> FieldElement {
        &self.0[0][0] + &self.0[1][1]
    }
}

/// A 2x2 matrix over the rationals, used for local components at a split
/// prime.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2Q(pub [[Q; 2]; 2]);

impl fmt::Display for Mat2Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(f, "[[{}, {}], [{}, {}]]", m[0][0], m[0][1], m[1][0], m[1][1])
    }
}

impl Mat2Q {
    pub fn new(a: Q, b: Q, c: Q, d: Q) -> Self {
        Mat2Q([[a, b], [c, d]])
    }

    pub fn ints(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2Q::new(q(a), q(b), q(c), q(d))
    }

    pub fn identity() -> Self {
        Mat2Q::ints(1, 0, 0, 1)
    }

    pub fn scalar(x: Q) -> Self {
        Mat2Q::new(x.clone(), Q::zero(), Q::zero(), x)
    }

    pub fn mul(&self, o: &Mat2Q) -> Mat2Q {
        let e = |i: usize, j: usize| &self.0[i][0] * &o.0[0][j] + &self.0[i][1] * &o.0[1][j];
        Mat2Q::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn transpose(&self) -> Mat2Q {
        let m = &self.0;
        Mat2Q::new(m[0][0].clone(), m[1][0].clone(), m[0][1].clone(), m[1][1].clone())
    }

    pub fn det(&self) -> Q {
        let m = &self.0;
        &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0]
    }

    pub fn inv(&self) -> Mat2Q {
        let d = self.det();
        assert!(!d.is_zero(), "singular matrix");
        let m = &self.0;
        let r = d.recip();
        Mat2Q::new(&m[1][1] * &r, -&m[0][1] * &r, -&m[1][0] * &r, &m[0][0] * &r)
    }

    pub fn scale(&self, c: &Q) -> Mat2Q {
        let m = &self.0;
        Mat2Q::new(&m[0][0] * c, &m[0][1] * c, &m[1][0] * c, &m[1][1] * c)
    }

    pub fn is_identity(&self) -> bool {
        let m = &self.0;
        m[0][0].is_one() && m[1][1].is_one() && m[0][1].is_zero() && m[1][0].is_zero()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Q> {
        self.0.iter().flatten()
    }

    /// Smallest p-adic valuation of a nonzero entry.
    pub fn vmin(&self, p: u64) -> Option<i64> {
        self.entries().filter_map(|x| arith::vp(x, p)).min()
    }

    /// Whether the matrix lies in `GL_2(Z_p)`.
    pub fn is_p_unimodular(&self, p: u64) -> bool {
        self.vmin(p).map_or(false, |v| v >= 0) && arith::vp(&self.det(), p) == Some(0)
    }
}
