//! Error type shared across the workbench.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("duplicate generator name `{0}`")]
    DuplicateGenerator(String),

    #[error("odd generator `{0}` raised to power {1}")]
    OddPower(String, i64),

    #[error("negative power {1} of non-invertible generator `{0}`")]
    NegativePower(String, i64),

    #[error("generator tables do not match")]
    TableMismatch,

    #[error("expected homogeneous element of degree {expected}, found {found}")]
    DegreeMismatch { expected: i64, found: String },

    #[error("classical master equation violated; residual: {residual}")]
    MasterEquationViolated { residual: String },

    #[error("superpotential p.d.e. violated; residual: {residual}")]
    SuperpotentialPdeViolated { residual: String },

    #[error("shift k = {k} has the wrong residue mod 4 for this construction")]
    WrongResidue { k: i64 },

    #[error("middle-degree dimension {0} is odd; pairing off coordinates needs it even")]
    OddMiddleDimension(usize),

    #[error("the base field has no square root of -1; declare field Q(i)")]
    FieldLacksI,

    #[error("Q(s,s) is nonzero; residual: {residual}")]
    QssNonzero { residual: String },

    #[error("{0} is not a unit of the coefficient ring (unit = scalar times a monomial in declared invertible generators)")]
    NotAUnit(String),

    #[error("pairing-coefficient matrix determinant {det} is not a unit; re-present the degree-0 ring")]
    BMatrixNotUnit { det: String },

    #[error("input data violates the primitive equations; residual: {residual}")]
    PrereqViolated { residual: String },

    #[error("normalization handles negative even shifts only; k = {0}")]
    OddK(i64),

    #[error("sequence is not closed under the total differential; residual: {residual}")]
    NotClosed { residual: String },

    #[error("no primitive exists within the given polynomial degree bound")]
    NoPrimitive,

    #[error("invalid classical point: {0}")]
    InvalidPoint(String),

    #[error("zero assigned to invertible generator `{0}`")]
    ZeroAtUnit(String),

    #[error("superpotential is nonlinear in a conjugate variable: {0}")]
    NonlinearInY(String),

    #[error("family `{family}` does not support k = {k}")]
    UnsupportedFamily { family: String, k: i64 },

    #[error("the hamiltonian must have zero constant term when k = -1")]
    PhiConstantTerm,

    #[error("k = -1 requires attesting that the hamiltonian vanishes on the reduced critical locus")]
    PhiNotAttested,

    #[error("invalid instance: {0}")]
    BadInstance(String),
}
