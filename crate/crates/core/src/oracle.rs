//! Brute-force reference values by enumerating every joint assignment.
//!
//! Nothing here touches the message-passing code; tables are indexed with a
//! locally written mixed-radix rule so the checks stay independent.

use crate::applications::ParametricFamily;
use crate::error::{Error, Result};
use crate::graph::{Factor, FactorGraph};

/// Maximum number of joint assignments the oracle will enumerate.
pub const MAX_ASSIGNMENTS: u128 = 1_000_000;

/// Odometer over all joint assignments, last variable fastest.
#[derive(Debug, Clone)]
pub struct AssignmentIterator {
    cards: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl AssignmentIterator {
    pub fn new(cards: Vec<usize>) -> Self {
        let done = cards.contains(&0);
        AssignmentIterator {
            current: vec![0; cards.len()],
            cards,
            done,
        }
    }
}

impl Iterator for AssignmentIterator {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        self.done = true;
        for (d, &c) in self.current.iter_mut().zip(&self.cards).rev() {
            *d += 1;
            if *d < c {
                self.done = false;
                break;
            }
            *d = 0;
        }
        Some(out)
    }
}

fn cards(g: &FactorGraph<f64>) -> Vec<usize> {
    g.variables().iter().map(|v| v.cardinality).collect()
}

fn guarded(g: &FactorGraph<f64>) -> Result<AssignmentIterator> {
    let c = cards(g);
    let total = c
        .iter()
        .try_fold(1u128, |acc, &k| acc.checked_mul(k as u128))
        .unwrap_or(u128::MAX);
    if total > MAX_ASSIGNMENTS {
        return Err(Error::TooLarge {
            assignments: total,
            limit: MAX_ASSIGNMENTS,
        });
    }
    Ok(AssignmentIterator::new(c))
}

fn entry(f: &Factor<f64>, cards: &[usize], x: &[usize]) -> usize {
    f.scope.iter().fold(0, |acc, &n| acc * cards[n] + x[n])
}

fn weight(g: &FactorGraph<f64>, cards: &[usize], x: &[usize]) -> f64 {
    g.factors()
        .iter()
        .map(|f| f.values[entry(f, cards, x)])
        .product()
}

/// `Σ_x ∏_m f_m(x_m)`.
pub fn enumerate_z(g: &FactorGraph<f64>) -> Result<f64> {
    let c = cards(g);
    Ok(guarded(g)?.map(|x| weight(g, &c, &x)).sum())
}

/// `Σ_x ∏_m f_m(x_m) · Σ_k g_k(x_k)`; assignments of zero weight contribute
/// nothing even where a companion is undefined.
pub fn enumerate_h(g: &FactorGraph<f64>, companions: &[Vec<Option<f64>>]) -> Result<f64> {
    let c = cards(g);
    let mut total = 0.0;
    for x in guarded(g)? {
        let w = weight(g, &c, &x);
        if w == 0.0 {
            continue;
        }
        let g_sum: f64 = g
            .factors()
            .iter()
            .zip(companions)
            .map(|(f, comp)| comp[entry(f, &c, &x)].unwrap_or(f64::NAN))
            .sum();
        total += w * g_sum;
    }
    Ok(total)
}

/// `Z_n(x_n)`: the sum of the factor product over all other variables.
pub fn enumerate_marginal(g: &FactorGraph<f64>, n: usize) -> Result<Vec<f64>> {
    let c = cards(g);
    let mut out = vec![0.0; c[n]];
    for x in guarded(g)? {
        out[x[n]] += weight(g, &c, &x);
    }
    Ok(out)
}

/// `−Σ_x P(x) log₂ P(x)` for `P(x) = ∏ f_m(x_m) / Z`.
pub fn enumerate_entropy(g: &FactorGraph<f64>) -> Result<f64> {
    let c = cards(g);
    let weights: Vec<f64> = guarded(g)?.map(|x| weight(g, &c, &x)).collect();
    let z: f64 = weights.iter().sum();
    if z.is_nan() || z <= 1e-300 {
        return Err(Error::ZeroEvidence {
            z_description: format!("{z:e}"),
        });
    }
    Ok(weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / z;
            -p * p.log2()
        })
        .sum())
}

/// Central differences `(p(Θ + h·e_j) − p(Θ − h·e_j)) / 2h` of the
/// enumerated `p(Θ) = Σ_x ∏ p_m(x_m, Θ)`.
pub fn fd_gradient<F: ParametricFamily + ?Sized>(family: &F, theta: &[f64], h: f64) -> Result<Vec<f64>> {
    (0..theta.len())
        .map(|j| {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[j] += h;
            minus[j] -= h;
            let zp = enumerate_z(family.at(&plus)?.graph())?;
            let zm = enumerate_z(family.at(&minus)?.graph())?;
            Ok((zp - zm) / (2.0 * h))
        })
        .collect()
}

/// `|a − b| / max(|a|, |b|)`, zero when both are zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let scale = a.abs().max(b.abs());
    let gap = (a - b).abs();
    if gap.is_nan() {
        f64::INFINITY
    } else {
        gap / scale
    }
}

/// Relative error with the denominator floored at 1, for quantities such as
/// entropies that are legitimately zero.
pub fn floored_relative_error(a: f64, b: f64) -> f64 {
    let gap = (a - b).abs();
    if gap.is_nan() {
        return f64::INFINITY;
    }
    gap / a.abs().max(b.abs()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::{PolyTable, PolynomialFamily};
    use crate::graph::Variable;
    use std::collections::HashSet;

    fn single(values: Vec<f64>) -> FactorGraph {
        FactorGraph::new(
            vec![Variable::new("x", values.len())],
            vec![Factor::new("f", vec![0], values)],
        )
        .unwrap()
    }

    fn binary_ones(n: usize) -> FactorGraph {
        FactorGraph::new(
            (0..n).map(|i| Variable::new(format!("x{i}"), 2)).collect(),
            (0..n).map(|i| Factor::new(format!("f{i}"), vec![i], vec![1.0, 1.0])).collect(),
        )
        .unwrap()
    }

    #[test]
    fn iterator_visits_each_assignment_once() {
        let cards = vec![2, 3, 1, 4];
        let seen: Vec<Vec<usize>> = AssignmentIterator::new(cards.clone()).collect();
        assert_eq!(seen.len(), 24);
        let distinct: HashSet<_> = seen.iter().cloned().collect();
        assert_eq!(distinct.len(), 24);
        assert_eq!(seen[1], vec![0, 0, 0, 1]);
        assert_eq!(AssignmentIterator::new(vec![]).count(), 1);
    }

    #[test]
    fn z_examples() {
        assert_eq!(enumerate_z(&single(vec![0.25, 0.75])).unwrap(), 1.0);
        assert_eq!(enumerate_z(&binary_ones(5)).unwrap(), 32.0);
    }

    #[test]
    fn h_examples() {
        let g = single(vec![0.5, 0.5]);
        assert_eq!(enumerate_h(&g, &[vec![Some(-1.0), Some(-1.0)]]).unwrap(), -1.0);
        assert_eq!(enumerate_h(&g, &[vec![Some(0.0), Some(0.0)]]).unwrap(), 0.0);
        let g = single(vec![0.0, 1.0]);
        assert_eq!(enumerate_h(&g, &[vec![None, Some(0.0)]]).unwrap(), 0.0);
    }

    #[test]
    fn marginal_examples() {
        assert_eq!(enumerate_marginal(&single(vec![0.3, 0.7]), 0).unwrap(), vec![0.3, 0.7]);
        let chain = FactorGraph::new(
            vec![Variable::new("x1", 2), Variable::new("x2", 2)],
            vec![
                Factor::new("A", vec![0], vec![0.5, 0.5]),
                Factor::new("B", vec![0, 1], vec![1.0, 0.0, 0.0, 1.0]),
            ],
        )
        .unwrap();
        let m = enumerate_marginal(&chain, 1).unwrap();
        assert_eq!(m, vec![0.5, 0.5]);
        assert_eq!(m.iter().sum::<f64>(), enumerate_z(&chain).unwrap());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(enumerate_entropy(&binary_ones(3)).unwrap(), 3.0);
        assert_eq!(enumerate_entropy(&single(vec![1.0, 0.0])).unwrap(), 0.0);
        assert_eq!(enumerate_entropy(&single(vec![0.0, 0.0])).unwrap_err().kind(), "ZeroEvidence");
    }

    #[test]
    fn size_guard() {
        let g = FactorGraph::new(
            (0..21).map(|i| Variable::new(format!("x{i}"), 2)).collect(),
            (0..21).map(|i| Factor::new(format!("f{i}"), vec![i], vec![1.0, 1.0])).collect(),
        )
        .unwrap();
        assert_eq!(enumerate_z(&g).unwrap_err().kind(), "TooLarge");
    }

    #[test]
    fn fd_examples() {
        // p(Θ) ≡ 1 from f = [Θ, 1 − Θ].
        let flat = PolynomialFamily::new(
            single(vec![0.0, 0.0]),
            1,
            vec![PolyTable {
                constant: vec![0.0, 1.0],
                linear: vec![vec![1.0, -1.0]],
                quadratic: vec![vec![0.0, 0.0]],
            }],
        )
        .unwrap();
        assert!(fd_gradient(&flat, &[0.3], 1e-5).unwrap()[0].abs() < 1e-10);
        let sq = PolynomialFamily::new(
            single(vec![0.0, 0.0]),
            1,
            vec![PolyTable {
                constant: vec![0.0, 1.0],
                linear: vec![vec![0.0, 0.0]],
                quadratic: vec![vec![1.0, 0.0]],
            }],
        )
        .unwrap();
        assert!((fd_gradient(&sq, &[2.0], 1e-5).unwrap()[0] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn relative_errors() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert_eq!(relative_error(2.0, 1.0), 0.5);
        assert_eq!(floored_relative_error(1e-12, 0.0), 1e-12);
        assert!(relative_error(f64::NAN, 1.0).is_infinite());
    }
}
