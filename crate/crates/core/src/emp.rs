//! Entropy message passing.
//!
//! Each factor `f_m` is paired with a companion table `g_m` over the same
//! scope and lifted entrywise to `(f_m, f_m·g_m)`. Sum-product over the
//! entropy semiring then yields, in one pass,
//!
//! ```text
//! Z = Σ_x ∏_m f_m(x_m)
//! H = Σ_x ∏_m f_m(x_m) · Σ_k g_k(x_k)
//! ```
//!
//! With `g_m = log₂ f_m` the posterior entropy of a partially observed model
//! is `−H/Z + log₂ Z` bits.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::graph::FactorGraph;
use crate::propagation::{run, RunOptions};
use crate::semiring::{lift, Entropy, EntropyWeight};

/// Companion table entries: `None` marks an undefined value (such as `log 0`)
/// and is only allowed where the paired factor value is zero.
pub type Companion = Vec<Option<f64>>;

/// A real factor graph with one companion table per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    graph: FactorGraph<f64>,
    companions: Vec<Companion>,
}

/// Smallest `Z` mantissa treated as nonzero evidence. Without rescaling the
/// mantissa is `Z` itself; with rescaling it is normalized, so only evidence
/// that is exactly zero (or lost to underflow inside one message) trips it.
pub const ZERO_EVIDENCE_THRESHOLD: f64 = 1e-300;

/// Largest negative entropy attributed to rounding and reported as zero.
pub const NEGATIVE_ENTROPY_CLAMP: f64 = 1e-9;

impl WeightedGraph {
    pub fn new(graph: FactorGraph<f64>, companions: Vec<Companion>) -> Result<Self> {
        if companions.len() != graph.num_factors() {
            return Err(Error::DimensionMismatch {
                expected: graph.num_factors(),
                found: companions.len(),
            });
        }
        for (f, g) in graph.factors().iter().zip(&companions) {
            if f.values.len() != g.len() {
                return Err(Error::CompanionMismatch {
                    factor: f.name.clone(),
                    expected: f.values.len(),
                    found: g.len(),
                });
            }
            if let Some(index) = f
                .values
                .iter()
                .zip(g)
                .position(|(&v, c)| v != 0.0 && !c.is_some_and(f64::is_finite))
            {
                return Err(Error::UndefinedCompanion {
                    factor: f.name.clone(),
                    index,
                });
            }
        }
        Ok(WeightedGraph { graph, companions })
    }

    /// Companions `g_m = log₂ f_m`, undefined where `f_m = 0`.
    pub fn with_log2(graph: FactorGraph<f64>) -> Result<Self> {
        graph.ensure_nonnegative()?;
        let companions = graph
            .factors()
            .iter()
            .map(|f| {
                f.values
                    .iter()
                    .map(|&v| (v > 0.0).then(|| v.log2()))
                    .collect()
            })
            .collect();
        WeightedGraph::new(graph, companions)
    }

    pub fn graph(&self) -> &FactorGraph<f64> {
        &self.graph
    }

    pub fn companions(&self) -> &[Companion] {
        &self.companions
    }

    pub fn into_parts(self) -> (FactorGraph<f64>, Vec<Companion>) {
        (self.graph, self.companions)
    }
}

/// `(Z, H)` and, for posterior-entropy runs, the entropy in bits.
///
/// `z` and `h` are mantissas: the true values are `z·e^log_scale` and
/// `h·e^log_scale`. Without rescaling `log_scale` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyResult {
    pub z: f64,
    pub h: f64,
    pub log_scale: f64,
    pub entropy_bits: Option<f64>,
}

impl EntropyResult {
    pub fn true_z(&self) -> f64 {
        self.z * self.log_scale.exp()
    }

    pub fn true_h(&self) -> f64 {
        self.h * self.log_scale.exp()
    }

    /// `log₂ Z` reconstructed from the mantissa and the log-scale.
    pub fn log2_z(&self) -> f64 {
        self.z.log2() + self.log_scale / LN_2
    }

    /// `H / Z`, unaffected by the common scale.
    pub fn h_over_z(&self) -> f64 {
        self.h / self.z
    }

    /// Entropy in nats, if computed.
    pub fn entropy_nats(&self) -> Option<f64> {
        self.entropy_bits.map(|b| b * LN_2)
    }
}

/// Lifts every `(f, g)` entry into the entropy semiring as `(f, f·g)`.
pub fn lift_graph(w: &WeightedGraph) -> FactorGraph<EntropyWeight> {
    w.graph
        .map_tables(|m, i, &f| lift(f, w.companions[m][i].unwrap_or(f64::NAN)))
}

/// Computes `(Z, H)` by entropy message passing rooted at `root` (default: the
/// first variable).
pub fn compute_zh(w: &WeightedGraph, root: Option<usize>, rescale: bool) -> Result<EntropyResult> {
    let lifted = lift_graph(w);
    zh_of_lifted(&lifted, root, rescale)
}

pub(crate) fn zh_of_lifted(
    lifted: &FactorGraph<EntropyWeight>,
    root: Option<usize>,
    rescale: bool,
) -> Result<EntropyResult> {
    let root = root.unwrap_or(0);
    let p = run(
        lifted,
        &Entropy,
        root,
        RunOptions {
            two_pass: false,
            rescale,
        },
    )?;
    let total = p.total(&Entropy);
    Ok(EntropyResult {
        z: total.weight.score,
        h: total.weight.aux,
        log_scale: total.log_scale,
        entropy_bits: None,
    })
}

/// Posterior entropy `H(X | Y = y) = −H/Z + log₂ Z` in bits.
///
/// The companions must be `log₂` of the factor values (as produced by
/// [`WeightedGraph::with_log2`]); this is not re-derived here.
pub fn posterior_entropy(
    w: &WeightedGraph,
    root: Option<usize>,
    rescale: bool,
) -> Result<EntropyResult> {
    w.graph.ensure_nonnegative()?;
    let mut result = compute_zh(w, root, rescale)?;
    let evidence = result.z > 0.0
        && result.z.is_finite()
        && result.z >= ZERO_EVIDENCE_THRESHOLD;
    if !evidence {
        return Err(Error::ZeroEvidence {
            z_description: format!("{:e}·e^{}", result.z, result.log_scale),
        });
    }
    let mut bits = -result.h_over_z() + result.log2_z();
    if (-NEGATIVE_ENTROPY_CLAMP..0.0).contains(&bits) {
        bits = 0.0;
    }
    result.entropy_bits = Some(bits);
    Ok(result)
}
