//! Positive definite binary quadratic forms: reduction, composition and
//! enumeration of reduced representatives for a negative discriminant.

use num_integer::Integer;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Form {
    pub a: i128,
    pub b: i128,
    pub c: i128,
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

impl Form {
    pub fn new(a: i128, b: i128, c: i128) -> Self {
        Form { a, b, c }
    }

    pub fn discriminant(&self) -> i128 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn identity(disc: i128) -> Self {
        let b = disc.rem_euclid(2);
        Form::new(1, b, (b * b - disc) / 4)
    }

    pub fn inverse(&self) -> Self {
        Form::new(self.a, -self.b, self.c).reduce()
    }

    pub fn is_primitive(&self) -> bool {
        self.a.gcd(&self.b).gcd(&self.c) == 1
    }

    pub fn is_reduced(&self) -> bool {
        let Form { a, b, c } = *self;
        b.abs() <= a && a <= c && !((b.abs() == a || a == c) && b < 0)
    }

    /// The unique reduced form properly equivalent to `self`.
    pub fn reduce(&self) -> Self {
        let disc = self.discriminant();
        let (mut a, mut b) = (self.a, self.b);
        let mut c;
        loop {
            // bring b into (-a, a]
            let two_a = 2 * a;
            let r = Integer::div_floor(&(a - b), &two_a);
            b += two_a * r;
            c = (b * b - disc) / (4 * a);
            if a > c {
                std::mem::swap(&mut a, &mut c);
                b = -b;
            } else {
                break;
            }
        }
        if a == c && b < 0 {
            b = -b;
        }
        Form { a, b, c }
    }

    /// Gauss composition of two primitive forms of the same discriminant.
    pub fn compose(&self, other: &Form) -> Form {
        let disc = self.discriminant();
        debug_assert_eq!(disc, other.discriminant());
        let (f1, f2) = if self.a > other.a {
            (other, self)
        } else {
            (self, other)
        };
        let (a1, b1) = (f1.a, f1.b);
        let (a2, b2, c2) = (f2.a, f2.b, f2.c);
        let s = (b1 + b2) / 2;
        let n = b2 - s;
        let (y1, d) = if a2 % a1 == 0 {
            (0, a1)
        } else {
            let e = a2.extended_gcd(&a1);
            (e.x, e.gcd)
        };
        let (x2, y2, d1) = if s % d == 0 {
            (0, -1, d)
        } else {
            let e = s.extended_gcd(&d);
            (e.x, -e.y, e.gcd)
        };
        let v1 = a1 / d1;
        let v2 = a2 / d1;
        let r = (y1 * y2 * n - x2 * c2).rem_euclid(v1);
        let b3 = b2 + 2 * v2 * r;
        let a3 = v1 * v2;
        let c3 = (b3 * b3 - disc) / (4 * a3);
        Form::new(a3, b3, c3).reduce()
    }

    pub fn pow(&self, e: i64) -> Form {
        let disc = self.discriminant();
        let mut base = if e < 0 { self.inverse() } else { self.reduce() };
        let mut e = e.unsigned_abs();
        let mut acc = Form::identity(disc);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }
}

/// All reduced primitive forms of discriminant `disc` (negative).
pub fn reduced_forms(disc: i128) -> Vec<Form> {
    assert!(disc < 0);
    let mut out = Vec::new();
    let mut a = 1i128;
    while 3 * a * a <= -disc {
        for b in -a + 1..=a {
            let num = b * b - disc;
            if num % (4 * a) != 0 {
                continue;
            }
            let f = Form::new(a, b, num / (4 * a));
            if f.is_reduced() && f.is_primitive() {
                out.push(f);
            }
        }
        a += 1;
    }
    out.sort();
    out
}

pub fn class_number(disc: i128) -> u64 {
    reduced_forms(disc).len() as u64
}
