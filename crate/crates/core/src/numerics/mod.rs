//! Small deterministic dense-numerics kernel.

mod activation;
mod adam;
mod gradcheck;
mod lstsq;
mod matrix;
mod rng;

pub use activation::{
    center_unit_normalize, center_unit_normalize_with_norm, elu, elu_grad_scalar, elu_scalar,
    NORM_EPS,
};
pub use adam::{adam_step, AdamState};
pub use gradcheck::{finite_difference_check, GradCheck, DEFAULT_STEP};
pub use lstsq::lstsq;
pub use matrix::{dot, nested, Matrix};
pub use rng::{uniform_init, Rng};
