use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is singular (smallest singular value {sigma_min:e})")]
    Singular { sigma_min: f64 },

    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("not an element of B: {0}")]
    NotBorel(String),

    #[error("eigensolver did not converge")]
    NoConvergence,

    #[error("degenerate alcove point: {0}")]
    DegenerateAlcove(String),

    /// A trajectory engine hit a collision mid-run. `partial` holds the
    /// samples computed before time `t`.
    #[error("degenerate alcove point at t = {t}: {reason}")]
    Collision {
        t: f64,
        reason: String,
        partial: Box<Trajectory>,
    },

    #[error("moment map constraint violated (residual {residual:e})")]
    ConstraintViolated { residual: f64 },

    #[error("integration unstable: energy drift {drift:e}")]
    StepUnstable { drift: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures caused by coinciding eigenangles.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::DegenerateAlcove(_) | Error::Collision { .. })
    }
}
