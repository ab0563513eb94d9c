use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("d = {0} must be a negative squarefree integer")]
    InvalidDiscriminant(i64),
    #[error("class number of Q(sqrt({d})) is {h}, which is even")]
    EvenClassNumber { d: i64, h: u64 },
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("prime {p} is not split in Q(sqrt({d}))")]
    NotSplit { p: u64, d: i64 },
    #[error("prime {p} is not inert in Q(sqrt({d}))")]
    NotInert { p: u64, d: i64 },
    #[error("{0} is not a residue root of the minimal polynomial of omega")]
    BadPrimeSymbol(String),
    #[error("generator search exhausted: norm {norm} exceeds bound {bound}")]
    SearchExhausted { norm: String, bound: u64 },
    #[error("ideal {0} is not principal")]
    NotPrincipal(String),
    #[error("coefficient index {index} is beyond the truncation bound {bound}")]
    Truncation { index: String, bound: u64 },
    #[error("weight {k} has the wrong parity for the character of the field")]
    ParityMismatch { k: i64 },
    #[error("weight {k} is not divisible by the number of units {w}")]
    WeightNotDivisible { k: i64, w: u32 },
    #[error("hermitian form is not positive semidefinite")]
    NotPositiveSemidefinite,
    #[error("hermitian form does not lie in the lattice T")]
    NotInLattice,
    #[error("the zero form has no content")]
    ZeroForm,
    #[error("base construction failed: {0}")]
    Base(String),
    #[error("character sum over a coset family is degenerate: {0}")]
    DegenerateCharacterSum(String),
    #[error("diagonalization failed: {0}")]
    Diagonalization(String),
    #[error("mismatched data: {0}")]
    Mismatch(String),
    #[error("coefficient a({n}) is nonzero although a_F({n}) = 0")]
    OffSupport { n: u64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
