//! The ideal class group, the ordered base of scalar class representatives,
//! class permutations and the determinant factor tuples attached to a split
//! prime.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith;
use crate::error::{Error, Result};
use crate::field::{FieldElement, IdealSymbol, PrimeSymbol, QuadField, Splitting};
use crate::forms::{self, Form};

pub const DEFAULT_SEARCH_BOUND: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealClassGroup {
    disc: i128,
    forms: Vec<Form>,
    identity: usize,
    table: Vec<Vec<usize>>,
}

impl IdealClassGroup {
    pub fn new(k: &QuadField) -> Self {
        let disc = k.discriminant() as i128;
        let forms = forms::reduced_forms(disc);
        let identity = forms
            .iter()
            .position(|f| *f == Form::identity(disc))
            .expect("identity form is reduced");
        let table = forms
            .iter()
            .map(|f| {
                forms
                    .iter()
                    .map(|g| {
                        let c = f.compose(g);
                        forms.iter().position(|x| *x == c).expect("closed")
                    })
                    .collect()
            })
            .collect();
        IdealClassGroup { disc, forms, identity, table }
    }

    pub fn order(&self) -> usize {
        self.forms.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn form(&self, i: usize) -> Form {
        self.forms[i]
    }

    pub fn compose(&self, i: usize, j: usize) -> usize {
        self.table[i][j]
    }

    pub fn inverse(&self, i: usize) -> usize {
        (0..self.order()).find(|&j| self.table[i][j] == self.identity).expect("group")
    }

    pub fn pow(&self, i: usize, e: i64) -> usize {
        let base = if e < 0 { self.inverse(i) } else { i };
        (0..e.unsigned_abs()).fold(self.identity, |acc, _| self.compose(acc, base))
    }

    fn index_of(&self, f: Form) -> usize {
        let f = f.reduce();
        self.forms.iter().position(|x| *x == f).expect("reduced form in table")
    }

    /// Class of a prime ideal `(p, omega - r)` through its norm form.
    pub fn prime_class(&self, k: &QuadField, s: PrimeSymbol) -> usize {
        let p = s.p as i128;
        let r = s.root as i128;
        let t = k.omega_trace() as i128;
        let n = k.omega_norm() as i128;
        let f = Form::new(p, t - 2 * r, (r * r - t * r + n) / p);
        debug_assert_eq!(f.discriminant(), self.disc);
        self.index_of(f)
    }

    pub fn class_of(&self, k: &QuadField, ideal: &IdealSymbol) -> usize {
        ideal.iter().fold(self.identity, |acc, (s, e)| {
            self.compose(acc, self.pow(self.prime_class(k, *s), *e))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaseEntry {
    Identity,
    Prime(PrimeSymbol),
}

impl fmt::Display for BaseEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseEntry::Identity => write!(f, "1"),
            BaseEntry::Prime(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BaseConfig {
    /// Power of the scalar adele used for each prime representative.
    pub exponent: i64,
    /// Smallest rational prime considered for representatives.
    pub min_prime: u64,
    pub include_identity: bool,
    pub prime_bound: u64,
    pub search_bound: u64,
}

impl Default for BaseConfig {
    fn default() -> Self {
        BaseConfig {
            exponent: 1,
            min_prime: 2,
            include_identity: true,
            prime_bound: 10_000,
            search_bound: DEFAULT_SEARCH_BOUND,
        }
    }
}

/// Ordered class representatives `b = alpha_P^e * I_2`, where `alpha_P` is the
/// scalar adele equal to `p` at `P` and `1/p` at its conjugate.
#[derive(Clone, Debug)]
pub struct Base {
    field: QuadField,
    group: IdealClassGroup,
    entries: Vec<BaseEntry>,
    classes: Vec<usize>,
    exponent: i64,
    search_bound: u64,
}

impl Base {
    pub fn build(k: &QuadField) -> Result<Self> {
        Self::with_config(k, &BaseConfig::default())
    }

    pub fn with_config(k: &QuadField, cfg: &BaseConfig) -> Result<Self> {
        let group = IdealClassGroup::new(k);
        let h = group.order();
        if h % 2 == 0 {
            return Err(Error::EvenClassNumber { d: k.d(), h: h as u64 });
        }
        let mut base = Base {
            field: k.clone(),
            group,
            entries: Vec::new(),
            classes: Vec::new(),
            exponent: cfg.exponent,
            search_bound: cfg.search_bound,
        };
        if cfg.include_identity {
            base.push(BaseEntry::Identity);
        }
        for p in arith::primes_from(cfg.min_prime) {
            if base.entries.len() == h {
                break;
            }
            if p > cfg.prime_bound {
                return Err(Error::Base(format!(
                    "no split prime below {} represents the remaining {} classes",
                    cfg.prime_bound,
                    h - base.entries.len()
                )));
            }
            if k.splitting(p)? != Splitting::Split {
                continue;
            }
            for s in k.primes_above(p)? {
                let c = base.group.class_of(k, &base.entry_det(BaseEntry::Prime(s)));
                if !base.classes.contains(&c) {
                    base.push(BaseEntry::Prime(s));
                }
            }
        }
        Ok(base)
    }

    /// A base from explicitly chosen entries; fails unless their classes
    /// are pairwise distinct and exhaust the class group.
    pub fn from_entries(k: &QuadField, entries: &[BaseEntry], exponent: i64) -> Result<Self> {
        let group = IdealClassGroup::new(k);
        let mut base = Base {
            field: k.clone(),
            group,
            entries: Vec::new(),
            classes: Vec::new(),
            exponent,
            search_bound: DEFAULT_SEARCH_BOUND,
        };
        for e in entries {
            let c = base.group.class_of(k, &base.entry_det(*e));
            if base.classes.contains(&c) {
                return Err(Error::Base(format!("entry {e} repeats a class")));
            }
            base.push(*e);
        }
        if base.entries.len() != base.group.order() {
            return Err(Error::Base("entries do not exhaust the class group".into()));
        }
        Ok(base)
    }

    fn push(&mut self, e: BaseEntry) {
        let c = self.group.class_of(&self.field, &self.entry_det(e));
        self.entries.push(e);
        self.classes.push(c);
    }

    pub fn field(&self) -> &QuadField {
        &self.field
    }

    pub fn group(&self) -> &IdealClassGroup {
        &self.group
    }

    pub fn entries(&self) -> &[BaseEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn search_bound(&self) -> u64 {
        self.search_bound
    }

    pub fn set_search_bound(&mut self, bound: u64) {
        self.search_bound = bound;
    }

    /// Ideal generated by the determinant of an entry.
    pub fn entry_det(&self, e: BaseEntry) -> IdealSymbol {
        match e {
            BaseEntry::Identity => IdealSymbol::one(),
            BaseEntry::Prime(s) => IdealSymbol::prime(s, 2 * self.exponent)
                .mul(&IdealSymbol::prime(self.field.conj_prime(s), -2 * self.exponent)),
        }
    }

    pub fn det(&self, i: usize) -> IdealSymbol {
        self.entry_det(self.entries[i])
    }

    pub fn class(&self, i: usize) -> usize {
        self.classes[i]
    }

    /// Index of the base entry in the class of `ideal`.
    pub fn index_of_class(&self, ideal: &IdealSymbol) -> usize {
        let c = self.group.class_of(&self.field, ideal);
        self.classes.iter().position(|x| *x == c).expect("base exhausts the class group")
    }

    /// The permutation `b -> b'` with `det(b) * ideal` in the class of `det(b')`.
    pub fn shift(&self, ideal: &IdealSymbol) -> ClassPermutation {
        let map = (0..self.len())
            .map(|i| self.index_of_class(&self.det(i).mul(ideal)))
            .collect();
        ClassPermutation { map }
    }

    pub fn sigma(&self, s: PrimeSymbol, n: i64) -> ClassPermutation {
        self.shift(&IdealSymbol::prime(s, n))
    }

    /// Per entry `b`, `conj(g)^(-k)` for a generator `g` of
    /// `det(b) * ideal * det(b')^(-1)` where `b'` is the shifted entry.
    pub fn shift_factors(&self, ideal: &IdealSymbol, k: i64) -> Result<GammaTuple> {
        let perm = self.shift(ideal);
        let values = (0..self.len())
            .map(|i| {
                let j = perm.apply(i);
                let principal = self.det(i).mul(ideal).mul(&self.det(j).inv());
                let g = self.generator(&principal)?;
                Ok(g.conj().pow(-k))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GammaTuple { values })
    }

    pub fn gamma_tuple(&self, s: PrimeSymbol, n: i64, k: i64) -> Result<GammaTuple> {
        self.check_weight(k)?;
        self.shift_factors(&IdealSymbol::prime(s, n), k)
    }

    pub fn check_weight(&self, k: i64) -> Result<()> {
        let w = self.field.unit_count();
        if k % w as i64 != 0 {
            return Err(Error::WeightNotDivisible { k, w });
        }
        Ok(())
    }

    /// A generator of an ideal known to be principal.
    pub fn generator(&self, ideal: &IdealSymbol) -> Result<FieldElement> {
        self.field
            .find_generator(ideal, self.search_bound)?
            .ok_or_else(|| Error::NotPrincipal(ideal.to_string()))
    }
}

/// A bijection of base indices: entry `i` is sent to `map[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassPermutation {
    pub map: Vec<usize>,
}

impl ClassPermutation {
    pub fn identity(n: usize) -> Self {
        ClassPermutation { map: (0..n).collect() }
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &ClassPermutation) -> ClassPermutation {
        ClassPermutation { map: other.map.iter().map(|&j| self.map[j]).collect() }
    }

    pub fn inverse(&self) -> ClassPermutation {
        let mut map = vec![0; self.map.len()];
        for (i, &j) in self.map.iter().enumerate() {
            map[j] = i;
        }
        ClassPermutation { map }
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Tuple whose entry `b` is `values[self(b)]`.
    pub fn pull_back<T: Clone>(&self, values: &[T]) -> Vec<T> {
        self.map.iter().map(|&j| values[j].clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaTuple {
    pub values: Vec<FieldElement>,
}

impl GammaTuple {
    pub fn mul(&self, o: &GammaTuple) -> GammaTuple {
        GammaTuple {
            values: self.values.iter().zip(&o.values).map(|(a, b)| a * b).collect(),
        }
    }
}
