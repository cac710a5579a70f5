//! Uses of entropy message passing: HMM posterior entropy, the closed-form
//! EM M-step for linear log-gradients, and exact gradients for ascent.

pub mod hmm;
pub mod optimize;
pub mod parametric;

pub use hmm::{hmm_entropy, hmm_to_weighted_graph, HmmSpec};
pub use optimize::{
    em_linear_step, em_q_gradient, grad_ascent_step, gradient_ascent, gradient_at, Ascent, LinearStep,
};
pub use parametric::{
    GradientSet, LinearSet, LogQuadraticFamily, ParametricFamily, PolyTable, PolynomialFamily,
};
