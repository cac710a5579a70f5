//! Commutative semirings used as message algebras.
//!
//! A commutative semiring `(K, ⊕, ⊗, 0̄, 1̄)` has associative, commutative `⊕`
//! and `⊗`, identities `0̄` and `1̄`, and `⊗` distributing over `⊕`. Message
//! passing only ever combines values with these four ingredients, so the
//! propagation engine is written once against [`Semiring`] and instantiated
//! with the concrete algebras below:
//!
//! | Semiring        | carrier | ⊕     | ⊗                                   | 0̄      | 1̄      |
//! |-----------------|---------|-------|-------------------------------------|--------|--------|
//! | [`SumProduct`]  | ℝ₊      | +     | ×                                   | 0      | 1      |
//! | [`MaxProduct`]  | ℝ₊      | max   | ×                                   | 0      | 1      |
//! | [`Boolean`]     | {0, 1}  | ∨     | ∧                                   | false  | true   |
//! | [`Entropy`]     | ℝ²      | (+,+) | (x₁x₂, x₁y₂ + x₂y₁)                 | (0, 0) | (1, 0) |

use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Identifies one of the built-in semirings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemiringKind {
    SumProduct,
    MaxProduct,
    Boolean,
    Entropy,
}

impl SemiringKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SemiringKind::SumProduct => "sum-product",
            SemiringKind::MaxProduct => "max-product",
            SemiringKind::Boolean => "boolean",
            SemiringKind::Entropy => "entropy",
        }
    }
}

impl fmt::Display for SemiringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SemiringKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum-product" => Ok(SemiringKind::SumProduct),
            "max-product" => Ok(SemiringKind::MaxProduct),
            "boolean" => Ok(SemiringKind::Boolean),
            "entropy" => Ok(SemiringKind::Entropy),
            other => Err(Error::Usage(format!("unknown semiring {other:?}"))),
        }
    }
}

/// A commutative semiring over a copyable carrier.
///
/// Implementors are zero-sized descriptors; elements are plain values of
/// [`Semiring::Elem`].
pub trait Semiring: Clone + Send + Sync {
    type Elem: Copy + PartialEq + fmt::Debug + Send + Sync;

    fn kind(&self) -> SemiringKind;

    /// Additive identity `0̄`.
    fn zero(&self) -> Self::Elem;

    /// Multiplicative identity `1̄`.
    fn one(&self) -> Self::Elem;

    fn add(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;

    fn mul(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;

    /// Largest componentwise deviation between two elements, relative to
    /// `max(|a|, |b|, 1)` per component. Zero means equal.
    fn deviation(&self, a: Self::Elem, b: Self::Elem) -> f64;

    /// Divides a message vector by a positive scalar chosen to keep its
    /// magnitude near one and returns the natural log of that scalar.
    ///
    /// Only meaningful when `⊕` and `⊗` are bilinear (or positively
    /// homogeneous) in a real scale; the default leaves the vector untouched.
    fn normalize(&self, _msg: &mut [Self::Elem]) -> f64 {
        0.0
    }

    /// Multiplies an element by `exp(log_factor)`; inverse of [`Semiring::normalize`].
    fn rescale(&self, a: Self::Elem, _log_factor: f64) -> Self::Elem {
        a
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let gap = (a - b).abs();
    if gap.is_nan() {
        return f64::INFINITY;
    }
    gap / a.abs().max(b.abs()).max(1.0)
}

fn normalize_by_max(msg: &mut [f64]) -> f64 {
    let peak = msg.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > 0.0 && peak.is_finite() {
        msg.iter_mut().for_each(|v| *v /= peak);
        peak.ln()
    } else {
        0.0
    }
}

/// Ordinary `(ℝ₊, +, ×, 0, 1)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SumProduct;

impl Semiring for SumProduct {
    type Elem = f64;

    fn kind(&self) -> SemiringKind {
        SemiringKind::SumProduct
    }
    fn zero(&self) -> f64 {
        0.0
    }
    fn one(&self) -> f64 {
        1.0
    }
    #[inline]
    fn add(&self, a: f64, b: f64) -> f64 {
        a + b
    }
    #[inline]
    fn mul(&self, a: f64, b: f64) -> f64 {
        a * b
    }
    fn deviation(&self, a: f64, b: f64) -> f64 {
        relative_gap(a, b)
    }
    fn normalize(&self, msg: &mut [f64]) -> f64 {
        normalize_by_max(msg)
    }
    fn rescale(&self, a: f64, log_factor: f64) -> f64 {
        a * log_factor.exp()
    }
}

/// `(ℝ₊, max, ×, 0, 1)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MaxProduct;

impl Semiring for MaxProduct {
    type Elem = f64;

    fn kind(&self) -> SemiringKind {
        SemiringKind::MaxProduct
    }
    fn zero(&self) -> f64 {
        0.0
    }
    fn one(&self) -> f64 {
        1.0
    }
    #[inline]
    fn add(&self, a: f64, b: f64) -> f64 {
        a.max(b)
    }
    #[inline]
    fn mul(&self, a: f64, b: f64) -> f64 {
        a * b
    }
    fn deviation(&self, a: f64, b: f64) -> f64 {
        relative_gap(a, b)
    }
    fn normalize(&self, msg: &mut [f64]) -> f64 {
        normalize_by_max(msg)
    }
    fn rescale(&self, a: f64, log_factor: f64) -> f64 {
        a * log_factor.exp()
    }
}

/// `({false, true}, ∨, ∧, false, true)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Boolean;

impl Semiring for Boolean {
    type Elem = bool;

    fn kind(&self) -> SemiringKind {
        SemiringKind::Boolean
    }
    fn zero(&self) -> bool {
        false
    }
    fn one(&self) -> bool {
        true
    }
    #[inline]
    fn add(&self, a: bool, b: bool) -> bool {
        a || b
    }
    #[inline]
    fn mul(&self, a: bool, b: bool) -> bool {
        a && b
    }
    fn deviation(&self, a: bool, b: bool) -> f64 {
        if a == b {
            0.0
        } else {
            1.0
        }
    }
}

/// Element of the entropy (expectation) semiring: a pair `(score, aux)`.
///
/// Under the lift `(f, f·g)`, the score accumulates products of factor values
/// and the aux slot accumulates those products weighted by sums of the
/// companion values `g`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EntropyWeight {
    pub score: f64,
    pub aux: f64,
}

impl EntropyWeight {
    pub const ZERO: EntropyWeight = EntropyWeight { score: 0.0, aux: 0.0 };
    pub const ONE: EntropyWeight = EntropyWeight { score: 1.0, aux: 0.0 };

    pub const fn new(score: f64, aux: f64) -> Self {
        EntropyWeight { score, aux }
    }
}

impl From<(f64, f64)> for EntropyWeight {
    fn from((score, aux): (f64, f64)) -> Self {
        EntropyWeight { score, aux }
    }
}

impl Add for EntropyWeight {
    type Output = EntropyWeight;

    #[inline]
    fn add(self, rhs: Self) -> Self {
        EntropyWeight {
            score: self.score + rhs.score,
            aux: self.aux + rhs.aux,
        }
    }
}

impl Mul for EntropyWeight {
    type Output = EntropyWeight;

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        EntropyWeight {
            score: self.score * rhs.score,
            aux: self.score * rhs.aux + rhs.score * self.aux,
        }
    }
}

/// The entropy semiring on `ℝ²`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Entropy;

impl Semiring for Entropy {
    type Elem = EntropyWeight;

    fn kind(&self) -> SemiringKind {
        SemiringKind::Entropy
    }
    fn zero(&self) -> EntropyWeight {
        EntropyWeight::ZERO
    }
    fn one(&self) -> EntropyWeight {
        EntropyWeight::ONE
    }
    #[inline]
    fn add(&self, a: EntropyWeight, b: EntropyWeight) -> EntropyWeight {
        a + b
    }
    #[inline]
    fn mul(&self, a: EntropyWeight, b: EntropyWeight) -> EntropyWeight {
        a * b
    }
    fn deviation(&self, a: EntropyWeight, b: EntropyWeight) -> f64 {
        relative_gap(a.score, b.score).max(relative_gap(a.aux, b.aux))
    }

    // Both components are scaled by the same divisor: ⊕ and ⊗ are bilinear in
    // a common real factor, so aux/score ratios survive normalization.
    fn normalize(&self, msg: &mut [EntropyWeight]) -> f64 {
        let peak = msg.iter().fold(0.0_f64, |m, w| m.max(w.score.abs()));
        if peak > 0.0 && peak.is_finite() {
            for w in msg.iter_mut() {
                w.score /= peak;
                w.aux /= peak;
            }
            peak.ln()
        } else {
            0.0
        }
    }

    fn rescale(&self, a: EntropyWeight, log_factor: f64) -> EntropyWeight {
        let c = log_factor.exp();
        EntropyWeight::new(a.score * c, a.aux * c)
    }
}

pub fn add<S: Semiring>(s: &S, a: S::Elem, b: S::Elem) -> S::Elem {
    s.add(a, b)
}

pub fn mul<S: Semiring>(s: &S, a: S::Elem, b: S::Elem) -> S::Elem {
    s.mul(a, b)
}

/// Left fold of `⊗` starting from `1̄`; the empty product is `1̄`.
pub fn nary_product<S: Semiring>(s: &S, items: &[S::Elem]) -> S::Elem {
    items.iter().fold(s.one(), |acc, &w| s.mul(acc, w))
}

/// Closed form of an n-ary entropy product:
/// `(∏ aₘ, Σₘ bₘ ∏_{j≠m} aⱼ)`.
///
/// Quadratic in the number of items; used as an independent check of
/// [`nary_product`].
pub fn entropy_product_closed_form(items: &[EntropyWeight]) -> EntropyWeight {
    let score = items.iter().map(|w| w.score).product();
    let aux = items
        .iter()
        .enumerate()
        .map(|(m, wm)| {
            let others: f64 = items
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != m)
                .map(|(_, wj)| wj.score)
                .product();
            wm.aux * others
        })
        .sum();
    EntropyWeight { score, aux }
}

/// Lifts a factor value and its companion into the entropy semiring as
/// `(f, f·g)`.
///
/// `f = 0` yields `(0, 0)` whatever `g` is, so `g` may be `NaN` or `-∞`
/// (the log of zero) there.
#[inline]
pub fn lift(f: f64, g: f64) -> EntropyWeight {
    if f == 0.0 {
        EntropyWeight::ZERO
    } else {
        EntropyWeight::new(f, f * g)
    }
}

/// One semiring law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    AddAssociative,
    AddCommutative,
    MulAssociative,
    MulCommutative,
    AddIdentity,
    MulIdentity,
    LeftDistributive,
    RightDistributive,
}

impl Axiom {
    pub const ALL: [Axiom; 8] = [
        Axiom::AddAssociative,
        Axiom::AddCommutative,
        Axiom::MulAssociative,
        Axiom::MulCommutative,
        Axiom::AddIdentity,
        Axiom::MulIdentity,
        Axiom::LeftDistributive,
        Axiom::RightDistributive,
    ];

    pub fn is_distributivity(&self) -> bool {
        matches!(self, Axiom::LeftDistributive | Axiom::RightDistributive)
    }
}

/// A law that failed on a particular triple of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub axiom: Axiom,
    /// Sample indices `(a, b, c)`; unary and binary laws use the leading ones.
    pub samples: [usize; 3],
    pub deviation: f64,
}

/// Result of [`verify_axioms`].
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub semiring: SemiringKind,
    pub triples_checked: usize,
    pub tolerance: f64,
    pub max_deviation: f64,
    /// First violations found, capped at [`AxiomReport::MAX_RECORDED`].
    pub violations: Vec<Violation>,
    /// Count of violating instances per law, in [`Axiom::ALL`] order.
    pub counts: [usize; 8],
}

impl AxiomReport {
    pub const MAX_RECORDED: usize = 32;

    pub fn passed(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    pub fn violated(&self) -> Vec<Axiom> {
        Axiom::ALL
            .iter()
            .zip(self.counts)
            .filter(|(_, c)| *c > 0)
            .map(|(a, _)| *a)
            .collect()
    }

    fn record(&mut self, axiom: Axiom, samples: [usize; 3], deviation: f64) {
        if deviation > self.max_deviation || deviation.is_nan() {
            self.max_deviation = deviation;
        }
        if deviation > self.tolerance || deviation.is_nan() {
            let slot = Axiom::ALL.iter().position(|a| *a == axiom).unwrap();
            self.counts[slot] += 1;
            if self.violations.len() < Self::MAX_RECORDED {
                self.violations.push(Violation {
                    axiom,
                    samples,
                    deviation,
                });
            }
        }
    }
}

/// Checks every semiring law on every ordered triple drawn from `samples`.
pub fn verify_axioms<S: Semiring>(s: &S, samples: &[S::Elem], tol: f64) -> AxiomReport {
    let n = samples.len();
    let mut triples = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                triples.push([i, j, k]);
            }
        }
    }
    verify_triples(s, samples, &triples, tol)
}

/// Checks every semiring law on the given triples of sample indices.
pub fn verify_triples<S: Semiring>(
    s: &S,
    samples: &[S::Elem],
    triples: &[[usize; 3]],
    tol: f64,
) -> AxiomReport {
    let mut report = AxiomReport {
        semiring: s.kind(),
        triples_checked: triples.len(),
        tolerance: tol,
        max_deviation: 0.0,
        violations: Vec::new(),
        counts: [0; 8],
    };
    for &idx in triples {
        let [a, b, c] = idx.map(|i| samples[i]);
        let laws = [
            (
                Axiom::AddAssociative,
                s.add(s.add(a, b), c),
                s.add(a, s.add(b, c)),
            ),
            (Axiom::AddCommutative, s.add(a, b), s.add(b, a)),
            (
                Axiom::MulAssociative,
                s.mul(s.mul(a, b), c),
                s.mul(a, s.mul(b, c)),
            ),
            (Axiom::MulCommutative, s.mul(a, b), s.mul(b, a)),
            (Axiom::AddIdentity, s.add(a, s.zero()), a),
            (Axiom::MulIdentity, s.mul(a, s.one()), a),
            (
                Axiom::RightDistributive,
                s.mul(s.add(a, b), c),
                s.add(s.mul(a, c), s.mul(b, c)),
            ),
            (
                Axiom::LeftDistributive,
                s.mul(c, s.add(a, b)),
                s.add(s.mul(c, a), s.mul(c, b)),
            ),
        ];
        for (axiom, lhs, rhs) in laws {
            report.record(axiom, idx, s.deviation(lhs, rhs));
        }
    }
    report
}
