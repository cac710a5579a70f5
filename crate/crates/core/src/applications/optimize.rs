//! EM and gradient-ascent quantities evaluated by entropy message passing.
//!
//! Every quantity here has the shape `Σ_x ∏_m f_m(x_m) · Σ_k g_k(x_k)`, i.e.
//! the `H` component of one EMP run with a suitable companion `g`.

use crate::emp::{compute_zh, Companion, WeightedGraph};
use crate::error::{Error, Result};
use crate::graph::FactorGraph;

use super::parametric::{GradientSet, LinearSet, ParametricFamily};

/// Outcome of the closed-form M-step.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearStep {
    pub theta_new: Vec<f64>,
    pub h_a: f64,
    pub h_b: f64,
    /// `H_a + H_b·θ*` where `Θ_new = θ*·Λ`; zero up to rounding.
    pub residual: f64,
}

/// `|H_b|` below this multiple of `|H_a|` makes the M-step degenerate.
pub const DEGENERATE_RATIO: f64 = 1e-12;

fn h_value(graph: &FactorGraph<f64>, companions: Vec<Companion>) -> Result<f64> {
    let w = WeightedGraph::new(graph.clone(), companions)?;
    Ok(compute_zh(&w, None, false)?.true_h())
}

fn defined(table: &[Vec<f64>]) -> Vec<Companion> {
    table
        .iter()
        .map(|row| row.iter().map(|&x| Some(x)).collect())
        .collect()
}

/// Closed-form M-step `Θ_new = −(H_a/H_b)·Λ` with
/// `H_a = Σ_x ∏ p_m(Θ_old) Σ_k u_k` and `H_b = Σ_x ∏ p_m(Θ_old) Σ_k v_k`.
pub fn em_linear_step(set: &LinearSet) -> Result<LinearStep> {
    let h_a = h_value(set.graph(), defined(set.u()))?;
    let h_b = h_value(set.graph(), defined(set.v()))?;
    if h_b.is_nan() || h_b.abs() <= 1e-300 || h_b.abs() < DEGENERATE_RATIO * h_a.abs() {
        return Err(Error::DegenerateMStep { h_a, h_b });
    }
    let coefficient = -(h_a / h_b);
    Ok(LinearStep {
        theta_new: set.lambda().iter().map(|l| coefficient * l).collect(),
        h_a,
        h_b,
        residual: h_a + h_b * coefficient,
    })
}

/// Companion `g = (∂p/∂Θ_j)/p` for component `j`; `0` where both vanish.
fn quotient(set: &GradientSet, j: usize) -> Result<Vec<Companion>> {
    set.graph()
        .factors()
        .iter()
        .enumerate()
        .map(|(m, f)| {
            f.values
                .iter()
                .zip(set.gradient(m, j))
                .enumerate()
                .map(|(index, (&p, &dp))| {
                    if p != 0.0 {
                        Ok(Some(dp / p))
                    } else if dp == 0.0 {
                        Ok(Some(0.0))
                    } else {
                        Err(Error::UndefinedQuotient {
                            factor: f.name.clone(),
                            index,
                            component: j,
                        })
                    }
                })
                .collect()
        })
        .collect()
}

/// `∇_Θ p(Θ)` at the point the set was evaluated at, one EMP run per
/// component.
pub fn gradient_at(set: &GradientSet) -> Result<Vec<f64>> {
    (0..set.dim())
        .map(|j| h_value(set.graph(), quotient(set, j)?))
        .collect()
}

/// `Θ + step·∇p(Θ)`.
pub fn grad_ascent_step<F: ParametricFamily + ?Sized>(family: &F, theta: &[f64], step: f64) -> Result<Vec<f64>> {
    let gradient = gradient_at(&family.at(theta)?)?;
    Ok(theta
        .iter()
        .zip(&gradient)
        .map(|(t, g)| t + step * g)
        .collect())
}

/// `∇_Θ Q(Θ, Θ_old)` at `Θ_i`: factors at `Θ_old`, log-gradients at `Θ_i`.
pub fn em_q_gradient(old: &FactorGraph<f64>, at_theta: &GradientSet) -> Result<Vec<f64>> {
    let tables: Vec<Vec<f64>> = old.factors().iter().map(|f| f.values.clone()).collect();
    // Same topology required; with_tables checks table lengths.
    at_theta.graph().with_tables(tables)?;
    (0..at_theta.dim())
        .map(|j| h_value(old, quotient(at_theta, j)?))
        .collect()
}

/// Iterates of a fixed-step gradient ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct Ascent {
    /// Starting point followed by every iterate.
    pub trajectory: Vec<Vec<f64>>,
    /// Gradient at the last point a step was taken from.
    pub gradient: Vec<f64>,
    pub converged: bool,
}

/// Repeats [`grad_ascent_step`] up to `max_iters` times, stopping early once
/// no component moves by more than `tol`.
pub fn gradient_ascent<F: ParametricFamily + ?Sized>(
    family: &F,
    theta0: &[f64],
    step: f64,
    max_iters: usize,
    tol: f64,
) -> Result<Ascent> {
    let mut theta = theta0.to_vec();
    let mut trajectory = vec![theta.clone()];
    let mut gradient = vec![0.0; family.dim()];
    let mut converged = false;
    for _ in 0..max_iters {
        gradient = gradient_at(&family.at(&theta)?)?;
        let next: Vec<f64> = theta
            .iter()
            .zip(&gradient)
            .map(|(t, g)| t + step * g)
            .collect();
        let change = next
            .iter()
            .zip(&theta)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        theta = next;
        trajectory.push(theta.clone());
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(Ascent {
        trajectory,
        gradient,
        converged,
    })
}
