//! Crate-wide error type.

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A vector's norm fell below the degeneracy threshold, e.g. after
    /// fermionic antisymmetrisation annihilated the state.
    #[error("degenerate vector: norm {norm:.3e} is below threshold {threshold:.1e}")]
    DegenerateVector { norm: f64, threshold: f64 },

    /// A symmetrised absorption state has (numerically) zero trace, e.g. a
    /// fermion absorbed into a bath that already occupies its state.
    #[error("degenerate absorption: symmetrised state has trace {trace:.3e}")]
    DegenerateAbsorption { trace: f64 },

    /// Partial trace asked to discard every factor.
    #[error("nothing retained: partial trace must keep at least one factor")]
    NothingRetained,

    /// An orthonormality requirement failed; `side` identifies which family
    /// ("input", "image", "pointer", "post-state", ...) and `(i, j)` the
    /// offending pair.
    #[error("{side} vectors {i} and {j} are not orthonormal: inner product {inner}")]
    NotOrthonormal {
        side: &'static str,
        i: usize,
        j: usize,
        inner: Complex64,
    },

    /// An operator required to be Hermitian is not, within tolerance.
    #[error("observable must be Hermitian: max |A - A\u{2020}| entry is {residual:.3e}")]
    NotHermitian { residual: f64 },

    /// An operator required to be unitary is not, within tolerance.
    #[error("operator is not unitary: max |U\u{2020}U - I| entry is {residual:.3e}")]
    NotUnitary { residual: f64 },

    /// A vector required to be normalised is not, within tolerance.
    #[error("vector is not normalised: norm is {norm}")]
    NotNormalized { norm: f64 },

    /// Shape or factor-dimension bookkeeping mismatch.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    /// A construction would exceed the dense-representation size budget.
    #[error("size budget exceeded: construction requires dimension {required}, budget is {budget}")]
    SizeBudget { required: usize, budget: usize },

    /// A matrix fails the density-operator requirements.
    #[error("invalid density operator: {reason}")]
    InvalidDensity { reason: String },

    /// Gemenge composition received the wrong number of partner states.
    #[error("partner count mismatch: {components} components but {partners} partners")]
    PartnerCountMismatch { components: usize, partners: usize },

    /// A coarsening request does not partition the component indices.
    #[error("invalid partition: {reason}")]
    InvalidPartition { reason: String },

    /// A model-level validity requirement failed (regions, supports,
    /// eigenstructure, ...).
    #[error("invalid model: {reason}")]
    InvalidModel { reason: String },

    /// The input state has components outside the subspace spanned by the
    /// registered observable's eigenvectors.
    #[error("input outside registered span: residual norm {residual:.3e}")]
    OutsideRegisteredSpan { residual: f64 },
}
