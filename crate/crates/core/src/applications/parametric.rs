//! Parameter-dependent factor tables.
//!
//! A model `p(x, Θ) = ∏_m p_m(x_m, Θ)` is described either by tables frozen at
//! one parameter point ([`GradientSet`], [`LinearSet`]) or by a
//! [`ParametricFamily`] that can produce those tables at any `Θ`.

use crate::error::{Error, Result};
use crate::graph::FactorGraph;

fn check_tables(graph: &FactorGraph<f64>, tables: &[Vec<f64>], what: &str) -> Result<()> {
    if tables.len() != graph.num_factors() {
        return Err(Error::DimensionMismatch {
            expected: graph.num_factors(),
            found: tables.len(),
        });
    }
    for (f, t) in graph.factors().iter().zip(tables) {
        if f.values.len() != t.len() {
            return Err(Error::ScopeMismatch {
                factor: format!("{} ({what})", f.name),
                expected: f.values.len(),
                found: t.len(),
            });
        }
    }
    Ok(())
}

/// Factor values `p_m(·, Θ)` and their partial derivatives at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    graph: FactorGraph<f64>,
    dim: usize,
    /// `gradients[m][j][i] = ∂p_m/∂Θ_j` at table entry `i`.
    gradients: Vec<Vec<Vec<f64>>>,
}

impl GradientSet {
    pub fn new(graph: FactorGraph<f64>, dim: usize, gradients: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if gradients.len() != graph.num_factors() {
            return Err(Error::DimensionMismatch {
                expected: graph.num_factors(),
                found: gradients.len(),
            });
        }
        for per_factor in &gradients {
            if per_factor.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: per_factor.len(),
                });
            }
        }
        for j in 0..dim {
            let component: Vec<Vec<f64>> = gradients.iter().map(|g| g[j].clone()).collect();
            check_tables(&graph, &component, "gradient")?;
        }
        Ok(GradientSet {
            graph,
            dim,
            gradients,
        })
    }

    pub fn graph(&self) -> &FactorGraph<f64> {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `∂p_m/∂Θ_j` table of factor `m`.
    pub fn gradient(&self, m: usize, j: usize) -> &[f64] {
        &self.gradients[m][j]
    }
}

/// Factor values at `Θ_old` for a model whose log-gradients are linear in `Θ`:
///
/// ```text
/// ∇_Θ log p_k(x_k, Θ) = v_k(x_k)·Θ + u_k(x_k)·Λ
/// ```
///
/// so the stationarity condition of the M-step reads `H_b·Θ + H_a·Λ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSet {
    graph: FactorGraph<f64>,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    lambda: Vec<f64>,
}

impl LinearSet {
    pub fn new(
        graph: FactorGraph<f64>,
        u: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
        lambda: Vec<f64>,
    ) -> Result<Self> {
        check_tables(&graph, &u, "u")?;
        check_tables(&graph, &v, "v")?;
        if lambda.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        Ok(LinearSet {
            graph,
            u,
            v,
            lambda,
        })
    }

    pub fn graph(&self) -> &FactorGraph<f64> {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn u(&self) -> &[Vec<f64>] {
        &self.u
    }

    pub fn v(&self) -> &[Vec<f64>] {
        &self.v
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }
}

/// A model that can be evaluated at any parameter point.
pub trait ParametricFamily {
    fn dim(&self) -> usize;

    /// Factor values and gradients at `theta`.
    fn at(&self, theta: &[f64]) -> Result<GradientSet>;
}

fn check_theta(dim: usize, theta: &[f64]) -> Result<()> {
    if theta.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: theta.len(),
        });
    }
    Ok(())
}

/// Per-entry quadratic polynomial coefficients of one factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTable {
    pub constant: Vec<f64>,
    /// `linear[j][i]`: coefficient of `Θ_j` at entry `i`.
    pub linear: Vec<Vec<f64>>,
    /// `quadratic[j][i]`: coefficient of `Θ_j²` at entry `i`.
    pub quadratic: Vec<Vec<f64>>,
}

impl PolyTable {
    /// A table that does not depend on `Θ`.
    pub fn constant(values: Vec<f64>, dim: usize) -> Self {
        let len = values.len();
        PolyTable {
            constant: values,
            linear: vec![vec![0.0; len]; dim],
            quadratic: vec![vec![0.0; len]; dim],
        }
    }
}

/// Entries `p(Θ) = c + Σ_j (a_j·Θ_j + b_j·Θ_j²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFamily {
    structure: FactorGraph<f64>,
    dim: usize,
    tables: Vec<PolyTable>,
}

impl PolynomialFamily {
    /// `structure` supplies the topology; its own values are ignored.
    pub fn new(structure: FactorGraph<f64>, dim: usize, tables: Vec<PolyTable>) -> Result<Self> {
        let constants: Vec<Vec<f64>> = tables.iter().map(|t| t.constant.clone()).collect();
        check_tables(&structure, &constants, "constant")?;
        for t in &tables {
            if t.linear.len() != dim || t.quadratic.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: t.linear.len().min(t.quadratic.len()),
                });
            }
            if t
                .linear
                .iter()
                .chain(&t.quadratic)
                .any(|row| row.len() != t.constant.len())
            {
                return Err(Error::ScopeMismatch {
                    factor: "polynomial coefficients".into(),
                    expected: t.constant.len(),
                    found: t
                        .linear
                        .iter()
                        .chain(&t.quadratic)
                        .map(Vec::len)
                        .find(|&l| l != t.constant.len())
                        .unwrap_or(0),
                });
            }
        }
        Ok(PolynomialFamily {
            structure,
            dim,
            tables,
        })
    }

    pub fn tables(&self) -> &[PolyTable] {
        &self.tables
    }

    pub fn structure(&self) -> &FactorGraph<f64> {
        &self.structure
    }
}

impl ParametricFamily for PolynomialFamily {
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, theta: &[f64]) -> Result<GradientSet> {
        check_theta(self.dim, theta)?;
        let values: Vec<Vec<f64>> = self
            .tables
            .iter()
            .map(|t| {
                (0..t.constant.len())
                    .map(|i| {
                        t.constant[i]
                            + (0..self.dim)
                                .map(|j| t.linear[j][i] * theta[j] + t.quadratic[j][i] * theta[j] * theta[j])
                                .sum::<f64>()
                    })
                    .collect()
            })
            .collect();
        let gradients = self
            .tables
            .iter()
            .map(|t| {
                (0..self.dim)
                    .map(|j| {
                        (0..t.constant.len())
                            .map(|i| t.linear[j][i] + 2.0 * t.quadratic[j][i] * theta[j])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        GradientSet::new(self.structure.with_tables(values)?, self.dim, gradients)
    }
}

/// Entries `p(Θ) = base·exp(v·|Θ|²/2 + u·(Λ·Θ))`, whose log-gradient
/// `v·Θ + u·Λ` has the linear form handled by the closed-form M-step.
#[derive(Debug, Clone, PartialEq)]
pub struct LogQuadraticFamily {
    base: FactorGraph<f64>,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    lambda: Vec<f64>,
}

impl LogQuadraticFamily {
    pub fn new(base: FactorGraph<f64>, u: Vec<Vec<f64>>, v: Vec<Vec<f64>>, lambda: Vec<f64>) -> Result<Self> {
        // Reuse the shape checks of the frozen form.
        let checked = LinearSet::new(base, u, v, lambda)?;
        Ok(LogQuadraticFamily {
            base: checked.graph,
            u: checked.u,
            v: checked.v,
            lambda: checked.lambda,
        })
    }

    fn values_at(&self, theta: &[f64]) -> Result<FactorGraph<f64>> {
        check_theta(self.lambda.len(), theta)?;
        let sq: f64 = theta.iter().map(|t| t * t).sum();
        let proj: f64 = theta.iter().zip(&self.lambda).map(|(t, l)| t * l).sum();
        Ok(self.base.map_tables(|m, i, &b| {
            b * (self.v[m][i] * sq / 2.0 + self.u[m][i] * proj).exp()
        }))
    }

    /// Frozen linear-form tables at `theta_old`.
    pub fn linear_set_at(&self, theta_old: &[f64]) -> Result<LinearSet> {
        LinearSet::new(
            self.values_at(theta_old)?,
            self.u.clone(),
            self.v.clone(),
            self.lambda.clone(),
        )
    }
}

impl ParametricFamily for LogQuadraticFamily {
    fn dim(&self) -> usize {
        self.lambda.len()
    }

    fn at(&self, theta: &[f64]) -> Result<GradientSet> {
        let graph = self.values_at(theta)?;
        let gradients = graph
            .factors()
            .iter()
            .enumerate()
            .map(|(m, f)| {
                (0..self.lambda.len())
                    .map(|j| {
                        f.values
                            .iter()
                            .enumerate()
                            .map(|(i, &p)| p * (self.v[m][i] * theta[j] + self.u[m][i] * self.lambda[j]))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        GradientSet::new(graph, self.lambda.len(), gradients)
    }
}
