//! Sum-product message passing over an arbitrary commutative semiring.
//!
//! Messages run along a [`Schedule`]: a variable sends the pointwise product of
//! the messages from its other factors, a factor sends the sum over its other
//! scope variables of its table times their incoming messages, and a root
//! marginal is the product of everything arriving at the root. On a forest
//! this is exact.
//!
//! With rescaling enabled every message vector is divided by its largest
//! magnitude and the log of that divisor is carried alongside it. Message logs
//! add up along the products, so a marginal's true value is
//! `values ⊗ exp(log_scale)`.

use crate::error::{Error, Result};
use crate::graph::{make_schedule, FactorGraph, Message, Schedule};
use crate::semiring::Semiring;

/// Messages indexed by directed edge, each with its log-scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageStore<W> {
    to_factor: Vec<Option<Vec<W>>>,
    to_variable: Vec<Option<Vec<W>>>,
    to_factor_log: Vec<f64>,
    to_variable_log: Vec<f64>,
    writes: usize,
}

impl<W: Copy> MessageStore<W> {
    pub fn new(num_edges: usize) -> Self {
        MessageStore {
            to_factor: vec![None; num_edges],
            to_variable: vec![None; num_edges],
            to_factor_log: vec![0.0; num_edges],
            to_variable_log: vec![0.0; num_edges],
            writes: 0,
        }
    }

    pub fn get(&self, msg: Message) -> Option<&[W]> {
        match msg {
            Message::ToFactor(e) => self.to_factor[e].as_deref(),
            Message::ToVariable(e) => self.to_variable[e].as_deref(),
        }
    }

    pub fn log_scale(&self, msg: Message) -> f64 {
        match msg {
            Message::ToFactor(e) => self.to_factor_log[e],
            Message::ToVariable(e) => self.to_variable_log[e],
        }
    }

    pub fn contains(&self, msg: Message) -> bool {
        self.get(msg).is_some()
    }

    /// Total number of messages written.
    pub fn writes(&self) -> usize {
        self.writes
    }

    pub fn insert(&mut self, msg: Message, values: Vec<W>, log_scale: f64) {
        let (slot, log) = match msg {
            Message::ToFactor(e) => (&mut self.to_factor[e], &mut self.to_factor_log[e]),
            Message::ToVariable(e) => (&mut self.to_variable[e], &mut self.to_variable_log[e]),
        };
        *slot = Some(values);
        *log = log_scale;
        self.writes += 1;
    }

    fn require(&self, msg: Message) -> Result<&[W]> {
        self.get(msg)
            .ok_or_else(|| Error::MissingDependency(format!("{msg:?}")))
    }
}

/// A marginal `Z_n(x_n)` over one variable's domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal<W> {
    pub variable: usize,
    pub values: Vec<W>,
    pub log_scale: f64,
}

/// A semiring element together with the log of a positive factor divided out
/// of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledWeight<W> {
    pub weight: W,
    pub log_scale: f64,
}

impl<W: Copy> ScaledWeight<W> {
    /// The element with the scale multiplied back in; may under- or overflow.
    pub fn value<S: Semiring<Elem = W>>(&self, s: &S) -> W {
        s.rescale(self.weight, self.log_scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Also send root-to-leaf messages and produce every variable's marginal.
    pub two_pass: bool,
    /// Normalize each message and track its log-scale.
    pub rescale: bool,
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct Propagation<W> {
    pub schedule: Schedule,
    pub messages: MessageStore<W>,
    marginals: Vec<Option<Marginal<W>>>,
}

impl<W: Copy> Propagation<W> {
    pub fn root_marginal(&self) -> &Marginal<W> {
        self.marginals[self.schedule.root()]
            .as_ref()
            .expect("root marginal is always computed")
    }

    /// Marginal of variable `n`; `None` for non-root variables of a one-pass run.
    pub fn marginal(&self, n: usize) -> Option<&Marginal<W>> {
        self.marginals.get(n).and_then(Option::as_ref)
    }

    pub fn marginals(&self) -> impl Iterator<Item = &Marginal<W>> {
        self.marginals.iter().flatten()
    }

    /// Total sum from the root marginal.
    pub fn total<S: Semiring<Elem = W>>(&self, s: &S) -> ScaledWeight<W> {
        total_sum(s, self.root_marginal())
    }
}

fn is_leaf_source<T>(g: &FactorGraph<T>, msg: Message) -> bool {
    let e = g.edge(msg.edge());
    match msg {
        Message::ToFactor(_) => g.variable_edges(e.variable).len() == 1,
        Message::ToVariable(_) => g.factor_edges(e.factor).len() == 1,
    }
}

/// Writes the messages sent by leaf nodes: `1̄` vectors from leaf variables
/// and the (unary) table from leaf factors. Only messages that appear in the
/// schedule are written.
pub fn init_leaf_messages<S: Semiring>(
    g: &FactorGraph<S::Elem>,
    s: &S,
    schedule: &Schedule,
    rescale: bool,
) -> MessageStore<S::Elem> {
    let mut store = MessageStore::new(g.edges().len());
    for &msg in schedule.iter() {
        if !is_leaf_source(g, msg) {
            continue;
        }
        let e = g.edge(msg.edge());
        let mut values = match msg {
            Message::ToFactor(_) => vec![s.one(); g.cardinality(e.variable)],
            Message::ToVariable(_) => g.factor(e.factor).values.clone(),
        };
        let log = if rescale { s.normalize(&mut values) } else { 0.0 };
        store.insert(msg, values, log);
    }
    store
}

/// Variable-to-factor message along `edge`: the pointwise product of the
/// messages the variable received from all its other factors.
pub fn variable_to_factor<S: Semiring>(
    store: &MessageStore<S::Elem>,
    g: &FactorGraph<S::Elem>,
    s: &S,
    edge: usize,
    rescale: bool,
) -> Result<(Vec<S::Elem>, f64)> {
    let n = g.edge(edge).variable;
    let mut out = vec![s.one(); g.cardinality(n)];
    let mut log = 0.0;
    for &other in g.variable_edges(n) {
        if other == edge {
            continue;
        }
        let incoming = store.require(Message::ToVariable(other))?;
        for (o, &r) in out.iter_mut().zip(incoming) {
            *o = s.mul(*o, r);
        }
        log += store.log_scale(Message::ToVariable(other));
    }
    if rescale {
        log += s.normalize(&mut out);
    }
    Ok((out, log))
}

/// Factor-to-variable message along `edge`: for each value of the target
/// variable, the semiring sum over the factor's other scope variables of the
/// table entry times their incoming messages.
///
/// Joint assignments are visited in mixed-radix table order and products are
/// folded left starting from the table entry.
pub fn factor_to_variable<S: Semiring>(
    store: &MessageStore<S::Elem>,
    g: &FactorGraph<S::Elem>,
    s: &S,
    edge: usize,
    rescale: bool,
) -> Result<(Vec<S::Elem>, f64)> {
    let target = g.edge(edge);
    let m = target.factor;
    let cards = g.scope_cardinalities(m);
    let mut incoming: Vec<&[S::Elem]> = Vec::with_capacity(cards.len());
    let mut log = 0.0;
    for &other in g.factor_edges(m) {
        if other == edge {
            incoming.push(&[]);
            continue;
        }
        incoming.push(store.require(Message::ToFactor(other))?);
        log += store.log_scale(Message::ToFactor(other));
    }

    let mut out = vec![s.zero(); cards[target.position]];
    let mut digits = vec![0usize; cards.len()];
    for &entry in &g.factor(m).values {
        let mut term = entry;
        for (p, q) in incoming.iter().enumerate() {
            if p != target.position {
                term = s.mul(term, q[digits[p]]);
            }
        }
        let slot = &mut out[digits[target.position]];
        *slot = s.add(*slot, term);

        for (d, &card) in digits.iter_mut().zip(&cards).rev() {
            *d += 1;
            if *d < card {
                break;
            }
            *d = 0;
        }
    }
    if rescale {
        log += s.normalize(&mut out);
    }
    Ok((out, log))
}

fn local_marginal<S: Semiring>(
    store: &MessageStore<S::Elem>,
    g: &FactorGraph<S::Elem>,
    s: &S,
    n: usize,
) -> Result<Marginal<S::Elem>> {
    let mut values = vec![s.one(); g.cardinality(n)];
    let mut log_scale = 0.0;
    for &e in g.variable_edges(n) {
        let r = store.require(Message::ToVariable(e))?;
        for (v, &x) in values.iter_mut().zip(r) {
            *v = s.mul(*v, x);
        }
        log_scale += store.log_scale(Message::ToVariable(e));
    }
    Ok(Marginal {
        variable: n,
        values,
        log_scale,
    })
}

/// Runs message passing rooted at variable `root`.
///
/// For a forest, each marginal also carries the total sums of the other
/// components, so it is the marginal of the full product.
pub fn run<S: Semiring>(
    g: &FactorGraph<S::Elem>,
    s: &S,
    root: usize,
    opts: RunOptions,
) -> Result<Propagation<S::Elem>> {
    let schedule = make_schedule(g, root, opts.two_pass)?;
    let mut store = init_leaf_messages(g, s, &schedule, opts.rescale);
    for &msg in schedule.iter() {
        if store.contains(msg) {
            continue;
        }
        let (values, log) = match msg {
            Message::ToFactor(e) => variable_to_factor(&store, g, s, e, opts.rescale)?,
            Message::ToVariable(e) => factor_to_variable(&store, g, s, e, opts.rescale)?,
        };
        store.insert(msg, values, log);
    }

    let totals = schedule
        .roots
        .iter()
        .map(|&r| local_marginal(&store, g, s, r).map(|m| total_sum(s, &m)))
        .collect::<Result<Vec<_>>>()?;

    let wanted: Vec<usize> = if opts.two_pass {
        (0..g.num_variables()).collect()
    } else {
        vec![root]
    };
    let mut marginals = vec![None; g.num_variables()];
    for n in wanted {
        let mut marginal = local_marginal(&store, g, s, n)?;
        let own = g.component_of(n);
        for &r in &schedule.roots {
            let c = g.component_of(r);
            if c == own {
                continue;
            }
            let other = totals[schedule.roots.iter().position(|&x| x == r).unwrap()];
            for v in marginal.values.iter_mut() {
                *v = s.mul(*v, other.weight);
            }
            marginal.log_scale += other.log_scale;
        }
        marginals[n] = Some(marginal);
    }

    Ok(Propagation {
        schedule,
        messages: store,
        marginals,
    })
}

/// `⊕` over a marginal's values, keeping its log-scale separate.
pub fn total_sum<S: Semiring>(s: &S, marginal: &Marginal<S::Elem>) -> ScaledWeight<S::Elem> {
    ScaledWeight {
        weight: marginal
            .values
            .iter()
            .fold(s.zero(), |acc, &v| s.add(acc, v)),
        log_scale: marginal.log_scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Factor, Variable};
    use crate::semiring::{Boolean, Entropy, EntropyWeight, MaxProduct, SumProduct};

    fn unary(values: Vec<f64>) -> FactorGraph {
        FactorGraph::new(
            vec![Variable::new("x", values.len())],
            vec![Factor::new("f", vec![0], values)],
        )
        .unwrap()
    }

    fn pair_graph(table: Vec<f64>) -> FactorGraph {
        FactorGraph::new(
            vec![Variable::new("x1", 2), Variable::new("x2", 2)],
            vec![Factor::new("f", vec![0, 1], table)],
        )
        .unwrap()
    }

    #[test]
    fn leaf_initialization() {
        let g = unary(vec![0.3, 0.7]);
        let sched = make_schedule(&g, 0, false).unwrap();
        let store = init_leaf_messages(&g, &SumProduct, &sched, false);
        assert_eq!(store.get(Message::ToVariable(0)).unwrap(), &[0.3, 0.7]);

        let g = FactorGraph::new(
            vec![Variable::new("a", 3), Variable::new("b", 2)],
            vec![Factor::new("f", vec![0, 1], vec![1.0; 6])],
        )
        .unwrap();
        let sched = make_schedule(&g, 1, false).unwrap();
        let store = init_leaf_messages(&g, &SumProduct, &sched, false);
        assert_eq!(store.get(Message::ToFactor(0)).unwrap(), &[1.0, 1.0, 1.0]);

        let h = unary(vec![0.5, 0.5]).map_tables(|_, _, &f| crate::semiring::lift(f, -1.0));
        let sched = make_schedule(&h, 0, false).unwrap();
        let store = init_leaf_messages(&h, &Entropy, &sched, false);
        let half = EntropyWeight::new(0.5, -0.5);
        assert_eq!(store.get(Message::ToVariable(0)).unwrap(), &[half, half]);
    }

    #[test]
    fn variable_messages() {
        // x with factors f0, f1, f2; send to f2.
        let g = FactorGraph::new(
            vec![Variable::new("x", 2)],
            vec![
                Factor::new("f0", vec![0], vec![2.0, 3.0]),
                Factor::new("f1", vec![0], vec![4.0, 5.0]),
                Factor::new("f2", vec![0], vec![1.0, 1.0]),
            ],
        )
        .unwrap();
        let mut store = MessageStore::new(3);
        assert!(matches!(
            variable_to_factor(&store, &g, &SumProduct, 2, false),
            Err(Error::MissingDependency(_))
        ));
        store.insert(Message::ToVariable(0), vec![2.0, 3.0], 0.0);
        store.insert(Message::ToVariable(1), vec![4.0, 5.0], 0.0);
        let (q, _) = variable_to_factor(&store, &g, &SumProduct, 2, false).unwrap();
        assert_eq!(q, vec![8.0, 15.0]);

        let single = unary(vec![1.0, 1.0]);
        let (q, _) = variable_to_factor(&MessageStore::new(1), &single, &SumProduct, 0, false).unwrap();
        assert_eq!(q, vec![1.0, 1.0]);

        let eg = FactorGraph::new(
            vec![Variable::new("x", 1)],
            vec![
                Factor::new("a", vec![0], vec![EntropyWeight::new(1.0, 1.0)]),
                Factor::new("b", vec![0], vec![EntropyWeight::new(2.0, 0.0)]),
                Factor::new("c", vec![0], vec![EntropyWeight::ONE]),
            ],
        )
        .unwrap();
        let mut es = MessageStore::new(3);
        es.insert(Message::ToVariable(0), vec![EntropyWeight::new(1.0, 1.0)], 0.0);
        es.insert(Message::ToVariable(1), vec![EntropyWeight::new(2.0, 0.0)], 0.0);
        let (q, _) = variable_to_factor(&es, &eg, &Entropy, 2, false).unwrap();
        assert_eq!(q, vec![EntropyWeight::new(2.0, 2.0)]);
    }

    #[test]
    fn factor_messages() {
        let g = pair_graph(vec![1.0, 2.0, 3.0, 4.0]);
        let mut store = MessageStore::new(2);
        assert!(factor_to_variable(&store, &g, &SumProduct, 0, false).is_err());
        store.insert(Message::ToFactor(1), vec![1.0, 1.0], 0.0);
        let (r, _) = factor_to_variable(&store, &g, &SumProduct, 0, false).unwrap();
        assert_eq!(r, vec![3.0, 7.0]);

        let b = g.map_tables(|_, i, _| i != 0);
        let mut bs = MessageStore::new(2);
        bs.insert(Message::ToFactor(1), vec![true, true], 0.0);
        let (r, _) = factor_to_variable(&bs, &b, &Boolean, 0, false).unwrap();
        assert_eq!(r, vec![true, true]);

        let u = unary(vec![0.1, 0.9]);
        let (r, _) = factor_to_variable(&MessageStore::new(1), &u, &SumProduct, 0, false).unwrap();
        assert_eq!(r, vec![0.1, 0.9]);
    }

    #[test]
    fn run_examples() {
        let g = unary(vec![0.25, 0.75]);
        let p = run(&g, &SumProduct, 0, RunOptions::default()).unwrap();
        assert_eq!(p.root_marginal().values, vec![0.25, 0.75]);
        assert_eq!(p.total(&SumProduct).value(&SumProduct), 1.0);

        let chain = FactorGraph::new(
            vec![Variable::new("x1", 2), Variable::new("x2", 2)],
            vec![
                Factor::new("A", vec![0], vec![0.5, 0.5]),
                Factor::new("B", vec![0, 1], vec![1.0, 0.0, 0.0, 1.0]),
            ],
        )
        .unwrap();
        let p = run(&chain, &SumProduct, 1, RunOptions::default()).unwrap();
        assert_eq!(p.root_marginal().values, vec![0.5, 0.5]);

        let sample_tree = crate::graph::tests::sample_tree();
        let p = run(&sample_tree, &SumProduct, 2, RunOptions::default()).unwrap();
        assert_eq!(p.root_marginal().values, vec![16.0, 16.0]);
        assert_eq!(p.total(&SumProduct).weight, 32.0);
    }

    #[test]
    fn total_sum_examples() {
        let m = Marginal {
            variable: 0,
            values: vec![0.25, 0.75],
            log_scale: 0.0,
        };
        assert_eq!(total_sum(&SumProduct, &m).weight, 1.0);
        let m = Marginal {
            variable: 0,
            values: vec![0.2, 0.7],
            log_scale: 0.0,
        };
        assert_eq!(total_sum(&MaxProduct, &m).weight, 0.7);
        let half = EntropyWeight::new(0.5, -0.5);
        let m = Marginal {
            variable: 0,
            values: vec![half, half],
            log_scale: 0.0,
        };
        assert_eq!(total_sum(&Entropy, &m).weight, EntropyWeight::new(1.0, -1.0));
    }

    #[test]
    fn two_pass_writes_every_message_once() {
        let g = crate::graph::tests::sample_tree();
        let p = run(
            &g,
            &SumProduct,
            0,
            RunOptions {
                two_pass: true,
                rescale: false,
            },
        )
        .unwrap();
        assert_eq!(p.messages.writes(), 2 * g.edges().len());
        assert_eq!(p.marginals().count(), 5);
        for m in p.marginals() {
            assert_eq!(m.values.iter().sum::<f64>(), 32.0);
        }
    }

    #[test]
    fn forest_marginals_include_other_components() {
        let g = FactorGraph::new(
            vec![Variable::new("a", 2), Variable::new("b", 2)],
            vec![
                Factor::new("fa", vec![0], vec![1.0, 2.0]),
                Factor::new("fb", vec![1], vec![3.0, 4.0]),
            ],
        )
        .unwrap();
        for rescale in [false, true] {
            let p = run(
                &g,
                &SumProduct,
                0,
                RunOptions {
                    two_pass: true,
                    rescale,
                },
            )
            .unwrap();
            let t = p.total(&SumProduct).value(&SumProduct);
            assert!((t - 21.0).abs() < 1e-12);
            let mb = p.marginal(1).unwrap();
            let vb: Vec<f64> = mb
                .values
                .iter()
                .map(|&v| SumProduct.rescale(v, mb.log_scale))
                .collect();
            assert!((vb[0] - 9.0).abs() < 1e-12 && (vb[1] - 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rescaling_survives_underflow() {
        // 400 variables, each contributing a factor 1e-3: Z = 1e-1200 underflows f64.
        let n = 400;
        let vars = (0..n).map(|i| Variable::new(format!("x{i}"), 2)).collect();
        let mut factors = vec![Factor::new("u", vec![0], vec![0.5e-3, 0.5e-3])];
        for i in 1..n {
            factors.push(Factor::new(
                format!("p{i}"),
                vec![i - 1, i],
                vec![0.5e-3, 0.5e-3, 0.5e-3, 0.5e-3],
            ));
        }
        let g = FactorGraph::new(vars, factors).unwrap();
        let plain = run(&g, &SumProduct, 0, RunOptions::default()).unwrap();
        assert_eq!(plain.total(&SumProduct).weight, 0.0);
        let scaled = run(
            &g,
            &SumProduct,
            0,
            RunOptions {
                two_pass: false,
                rescale: true,
            },
        )
        .unwrap();
        let t = scaled.total(&SumProduct);
        let log_z = t.weight.ln() + t.log_scale;
        let expected = n as f64 * 1e-3f64.ln();
        assert!((log_z - expected).abs() <= 1e-9 * expected.abs());
    }
}
