//! JSON documents for q-expansions, Maass systems, coefficient tables and
//! coset tables. Rationals are written as `"num/den"`; a field element
//! `x + y sqrt(d)` is the pair `[x, y]`.

use serde::{Deserialize, Serialize};

use crate::arith::{format_q, parse_q};
use crate::class_base::Base;
use crate::classical::{QExpansion, QTuple};
use crate::error::{Error, Result};
use crate::field::{FieldElement, QuadField};
use crate::hecke::CosetTable;
use crate::hermlat::HermitianForm;
use crate::maass::MaassSystem;

pub fn element_pair(e: &FieldElement) -> [String; 2] {
    [format_q(&e.x), format_q(&e.y)]
}

pub fn parse_element(field: &QuadField, x: &str, y: &str) -> Result<FieldElement> {
    Ok(field.elem(parse_q(x)?, parse_q(y)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionDoc {
    pub weight: i64,
    pub level: i64,
    #[serde(rename = "N")]
    pub bound: u64,
    /// `[n, x, y]` for the nonzero coefficients.
    pub coeffs: Vec<(u64, String, String)>,
}

impl ExpansionDoc {
    pub fn from_expansion(e: &QExpansion) -> Self {
        let coeffs = e
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(n, c)| {
                let [x, y] = element_pair(c);
                (n as u64, x, y)
            })
            .collect();
        ExpansionDoc { weight: e.weight(), level: e.level(), bound: e.bound(), coeffs }
    }

    pub fn to_expansion(&self, field: &QuadField) -> Result<QExpansion> {
        if self.level != field.abs_disc() {
            return Err(Error::Mismatch(format!(
                "level {} does not match D_F = {}",
                self.level,
                field.abs_disc()
            )));
        }
        let mut coeffs = vec![field.zero(); self.bound as usize + 1];
        for (n, x, y) in &self.coeffs {
            let slot = coeffs.get_mut(*n as usize).ok_or(Error::Truncation {
                index: n.to_string(),
                bound: self.bound,
            })?;
            *slot = parse_element(field, x, y)?;
        }
        Ok(QExpansion::new(field, self.weight, coeffs))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleDoc {
    pub field: i64,
    pub entries: Vec<ExpansionDoc>,
}

impl TupleDoc {
    pub fn from_tuple(field: &QuadField, t: &QTuple) -> Self {
        TupleDoc { field: field.d(), entries: t.entries.iter().map(ExpansionDoc::from_expansion).collect() }
    }

    pub fn to_tuple(&self, field: &QuadField) -> Result<QTuple> {
        QTuple::new(self.entries.iter().map(|e| e.to_expansion(field)).collect::<Result<_>>()?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaassDoc {
    pub field: i64,
    pub k: i64,
    pub base: Vec<String>,
    #[serde(rename = "N")]
    pub bound: u64,
    /// Per base entry, `[n, x, y]` for the nonzero values of `alpha_b`.
    pub alphas: Vec<Vec<(u64, String, String)>>,
}

impl MaassDoc {
    pub fn from_system(m: &MaassSystem) -> Self {
        MaassDoc {
            field: m.field().d(),
            k: m.k(),
            base: m.base().entries().iter().map(|e| e.to_string()).collect(),
            bound: m.support_bound(),
            alphas: m
                .alphas()
                .iter()
                .map(|a| {
                    a.iter()
                        .enumerate()
                        .filter(|(_, c)| !c.is_zero())
                        .map(|(n, c)| {
                            let [x, y] = element_pair(c);
                            (n as u64, x, y)
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_system(&self, base: &Base) -> Result<MaassSystem> {
        let field = base.field();
        let names: Vec<String> = base.entries().iter().map(|e| e.to_string()).collect();
        if names != self.base || field.d() != self.field {
            return Err(Error::Mismatch("document was written for a different base".into()));
        }
        let mut alphas = vec![vec![field.zero(); self.bound as usize + 1]; base.len()];
        for (b, vals) in self.alphas.iter().enumerate() {
            for (n, x, y) in vals {
                let slot = alphas[b].get_mut(*n as usize).ok_or(Error::Truncation {
                    index: n.to_string(),
                    bound: self.bound,
                })?;
                *slot = parse_element(field, x, y)?;
            }
        }
        MaassSystem::new(base, self.k, alphas)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    /// `[a, b_x, b_y, c]` for `h = [[a, b], [conj(b), c]]`.
    pub h: [String; 4],
    pub b: usize,
    pub value: [String; 2],
}

impl CoefficientEntry {
    pub fn new(h: &HermitianForm, b: usize, v: &FieldElement) -> Self {
        CoefficientEntry {
            h: [format_q(&h.a), format_q(&h.b.x), format_q(&h.b.y), format_q(&h.c)],
            b,
            value: element_pair(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetRepDoc {
    pub a1: Vec<Vec<String>>,
    pub a2: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetTableDoc {
    pub op: String,
    pub p: u64,
    pub reps: Vec<CosetRepDoc>,
}

impl CosetTableDoc {
    pub fn from_table(t: &CosetTable) -> Self {
        CosetTableDoc {
            op: t.op.to_string(),
            p: t.p,
            reps: t
                .reps
                .iter()
                .map(|r| CosetRepDoc { a1: r.a1.to_strings(), a2: r.a2.to_strings() })
                .collect(),
        }
    }
}
