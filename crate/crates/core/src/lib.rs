//! Entropy message passing: sum-product over the entropy semiring on
//! cycle-free factor graphs.
//!
//! One pass yields both the normaliser `Z = Σ_x ∏ f_m(x_m)` and the additive
//! expectation `H = Σ_x ∏ f_m(x_m) · Σ_m g_m(x_m)`, which covers posterior
//! entropies, EM M-steps and exact gradients of product models.

pub mod applications;
pub mod cli;
pub mod emp;
pub mod error;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod propagation;
pub mod random;
pub mod semiring;

pub use error::{Error, Result};
