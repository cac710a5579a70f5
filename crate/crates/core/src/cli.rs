//! Command-line front end. Every command prints one JSON document on stdout.
//!
//! Exit codes: 0 on success, 1 for malformed input or usage errors, 2 for
//! errors raised while evaluating a well-formed model.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::applications::{
    em_linear_step, gradient_ascent, gradient_at, hmm_to_weighted_graph, HmmSpec, ParametricFamily,
};
use crate::emp::{compute_zh, posterior_entropy, Companion, WeightedGraph};
use crate::error::{Error, Result};
use crate::graph::FactorGraph;
use crate::io::{parse_graph, parse_hmm, Model, ParametricSpec};
use crate::oracle;
use crate::propagation::{run, RunOptions};
use crate::random::{random_companions, random_hmm, random_tables, random_tree, TreeConfig};
use crate::semiring::{Boolean, MaxProduct, Semiring, SemiringKind, SumProduct};

/// Largest relative error `check` accepts.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// HMM inputs longer than this are rescaled even without `--rescale`.
pub const AUTO_RESCALE_LENGTH: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "entropy-mp", version, about = "Exact inference and entropy on cycle-free factor graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Base {
    #[value(name = "2")]
    Two,
    #[value(name = "e")]
    E,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a graph document for structural errors.
    Validate { graph: PathBuf },
    /// Total sum of the factor product.
    Partition {
        graph: PathBuf,
        #[arg(long, default_value = "sum-product")]
        semiring: SemiringKind,
        #[arg(long)]
        root: Option<String>,
        #[arg(long)]
        rescale: bool,
    },
    /// Per-variable marginals.
    Marginal {
        graph: PathBuf,
        #[arg(long, required_unless_present = "all", conflicts_with = "all")]
        var: Option<String>,
        #[arg(long)]
        all: bool,
        #[arg(long, default_value = "sum-product")]
        semiring: SemiringKind,
    },
    /// Entropy of the normalized factor product, from a graph with "g" tables
    /// or from an HMM and its observations.
    Entropy {
        #[arg(required_unless_present = "hmm", conflicts_with = "hmm")]
        graph: Option<PathBuf>,
        #[arg(long)]
        hmm: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "2")]
        base: Base,
        #[arg(long)]
        rescale: bool,
        #[arg(long)]
        root: Option<String>,
        /// Use g = log2 f instead of the document's "g" tables.
        #[arg(long)]
        derive_g: bool,
    },
    /// Closed-form M-step for a model with a "u"/"v" parametric block.
    EmStep { graph: PathBuf },
    /// Exact gradient of the total sum and gradient-ascent steps.
    Grad {
        graph: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        theta: Vec<f64>,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        step: f64,
        #[arg(long, default_value_t = 1)]
        iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Compare message passing against brute-force enumeration.
    Check {
        #[arg(conflicts_with = "hmm")]
        graph: Option<PathBuf>,
        #[arg(long)]
        hmm: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
}

/// Result of one command invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn success(v: Value) -> Self {
        Outcome {
            code: 0,
            stdout: v.to_string(),
            stderr: String::new(),
        }
    }

    fn failure(e: &Error) -> Self {
        Outcome {
            code: exit_code(e),
            stdout: json!({ "error": error_json(e) }).to_string(),
            stderr: format!("error: {e}"),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_runtime() {
        2
    } else {
        1
    }
}

fn error_json(e: &Error) -> Value {
    let mut obj = Map::new();
    obj.insert("kind".into(), e.kind().into());
    obj.insert("detail".into(), e.root().to_string().into());
    if let Some(p) = e.path() {
        obj.insert("path".into(), p.into());
    }
    Value::Object(obj)
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_command<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Outcome {
                    code: 0,
                    stdout: e.to_string(),
                    stderr: String::new(),
                };
            }
            let err = Error::Usage(e.kind().to_string());
            let mut out = Outcome::failure(&err);
            out.stderr = e.to_string();
            return out;
        }
    };
    let result = match cli.command {
        Command::Validate { graph } => return validate(graph),
        Command::Partition {
            graph,
            semiring,
            root,
            rescale,
        } => partition(graph, semiring, root, rescale),
        Command::Marginal {
            graph,
            var,
            all: _,
            semiring,
        } => marginal(graph, var, semiring),
        Command::Entropy {
            graph,
            hmm,
            base,
            rescale,
            root,
            derive_g,
        } => entropy(graph, hmm, base, rescale, root, derive_g),
        Command::EmStep { graph } => em_step(graph),
        Command::Grad {
            graph,
            theta,
            step,
            iters,
            tol,
        } => grad(graph, theta, step, iters, tol),
        Command::Check { graph, hmm, seeds } => return check(graph, hmm, seeds),
    };
    match result {
        Ok(v) => Outcome::success(v),
        Err(e) => Outcome::failure(&e),
    }
}

fn validate(path: PathBuf) -> Outcome {
    match parse_graph(&path) {
        Ok(_) => Outcome::success(json!({ "valid": true, "errors": [] })),
        Err(e) => {
            let detail = error_json(&e);
            Outcome {
                code: exit_code(&e),
                stdout: json!({ "valid": false, "errors": [detail.clone()], "error": detail }).to_string(),
                stderr: format!("error: {e}"),
            }
        }
    }
}

fn root_index(g: &FactorGraph<f64>, root: Option<&str>) -> Result<usize> {
    match root {
        Some(name) => g.variable_index(name),
        None => Ok(0),
    }
}

fn real_semiring(kind: SemiringKind) -> Result<()> {
    match kind {
        SemiringKind::Entropy => Err(Error::Usage(
            "the entropy semiring needs \"g\" tables; use the entropy command".into(),
        )),
        _ => Ok(()),
    }
}

fn partition(path: PathBuf, kind: SemiringKind, root: Option<String>, rescale: bool) -> Result<Value> {
    real_semiring(kind)?;
    let model = parse_graph(&path)?;
    let g = &model.graph;
    let root = root_index(g, root.as_deref())?;
    let opts = RunOptions {
        two_pass: false,
        rescale,
    };
    let (z, log_scale) = match kind {
        SemiringKind::Boolean => {
            let b = g.map_tables(|_, _, &v| v != 0.0);
            let t = run(&b, &Boolean, root, opts)?.total(&Boolean);
            (if t.weight { 1.0 } else { 0.0 }, 0.0)
        }
        SemiringKind::MaxProduct => {
            let t = run(g, &MaxProduct, root, opts)?.total(&MaxProduct);
            (t.weight, t.log_scale)
        }
        _ => {
            let t = run(g, &SumProduct, root, opts)?.total(&SumProduct);
            (t.weight, t.log_scale)
        }
    };
    Ok(json!({ "Z": z, "log_scale": log_scale }))
}

fn marginals_with<S: Semiring>(
    g: &FactorGraph<S::Elem>,
    s: &S,
    names: &FactorGraph<f64>,
    var: Option<usize>,
    to_f64: impl Fn(S::Elem) -> f64,
) -> Result<Value> {
    let root = var.unwrap_or(0);
    let p = run(
        g,
        s,
        root,
        RunOptions {
            two_pass: var.is_none(),
            rescale: false,
        },
    )?;
    let mut out = Map::new();
    for m in p.marginals() {
        if var.is_some_and(|v| v != m.variable) {
            continue;
        }
        let values: Vec<f64> = m.values.iter().map(|&w| to_f64(s.rescale(w, m.log_scale))).collect();
        out.insert(names.variable(m.variable).name.clone(), json!(values));
    }
    Ok(json!({ "marginals": out }))
}

fn marginal(path: PathBuf, var: Option<String>, kind: SemiringKind) -> Result<Value> {
    real_semiring(kind)?;
    let model = parse_graph(&path)?;
    let g = &model.graph;
    let var = var.map(|name| g.variable_index(&name)).transpose()?;
    match kind {
        SemiringKind::Boolean => {
            let b = g.map_tables(|_, _, &v| v != 0.0);
            marginals_with(&b, &Boolean, g, var, |x| if x { 1.0 } else { 0.0 })
        }
        SemiringKind::MaxProduct => marginals_with(g, &MaxProduct, g, var, |x| x),
        _ => marginals_with(g, &SumProduct, g, var, |x| x),
    }
}

fn entropy(
    graph: Option<PathBuf>,
    hmm: Option<PathBuf>,
    base: Base,
    rescale: bool,
    root: Option<String>,
    derive_g: bool,
) -> Result<Value> {
    let (weighted, rescale) = match (graph, hmm) {
        (_, Some(path)) => {
            let h = parse_hmm(&path)?;
            let long = h.len() > AUTO_RESCALE_LENGTH;
            (hmm_to_weighted_graph(&h)?, rescale || long)
        }
        (Some(path), None) => {
            let model = parse_graph(&path)?;
            let w = if derive_g {
                WeightedGraph::with_log2(model.graph)?
            } else {
                model.weighted().map_err(|_| {
                    Error::NotEvaluable("graph has no \"g\" tables; pass --derive-g to use g = log2 f".into())
                })?
            };
            (w, rescale)
        }
        (None, None) => return Err(Error::Usage("a graph or --hmm file is required".into())),
    };
    let root = root_index(weighted.graph(), root.as_deref())?;
    let r = posterior_entropy(&weighted, Some(root), rescale)?;
    let (value, base_name) = match base {
        Base::Two => (r.entropy_bits, "2"),
        Base::E => (r.entropy_nats(), "e"),
    };
    Ok(json!({
        "Z": r.z,
        "H": r.h,
        "entropy": value,
        "base": base_name,
        "log_scale": r.log_scale,
    }))
}

fn em_step(path: PathBuf) -> Result<Value> {
    let model = parse_graph(&path)?;
    let Some(ParametricSpec::Linear(set)) = &model.parametric else {
        return Err(Error::NotEvaluable(
            "em-step needs a parametric block with \"u\"/\"v\" tables and \"lambda\"".into(),
        ));
    };
    let step = em_linear_step(set)?;
    Ok(json!({
        "H_a": step.h_a,
        "H_b": step.h_b,
        "theta_new": step.theta_new,
        "residual": step.residual,
    }))
}

fn check_dim(dim: usize, theta: &[f64]) -> Result<()> {
    if theta.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: theta.len(),
        });
    }
    Ok(())
}

fn advance(theta: &[f64], gradient: &[f64], step: f64) -> Vec<f64> {
    theta.iter().zip(gradient).map(|(t, g)| t + step * g).collect()
}

fn grad(path: PathBuf, theta: Vec<f64>, step: f64, iters: usize, tol: f64) -> Result<Value> {
    let model = parse_graph(&path)?;
    match &model.parametric {
        Some(ParametricSpec::Gradient(set)) => {
            check_dim(set.dim(), &theta)?;
            if iters > 1 {
                return Err(Error::NotEvaluable(
                    "\"grad\" tables are fixed at one point; use a \"poly\" block for --iters > 1".into(),
                ));
            }
            let gradient = gradient_at(set)?;
            let next = advance(&theta, &gradient, step);
            Ok(json!({ "gradient": gradient, "theta_next": next }))
        }
        Some(ParametricSpec::Polynomial(family)) => {
            check_dim(family.dim(), &theta)?;
            let gradient = gradient_at(&family.at(&theta)?)?;
            let next = advance(&theta, &gradient, step);
            let mut out = json!({ "gradient": gradient, "theta_next": next });
            if iters > 1 {
                let ascent = gradient_ascent(family, &theta, step, iters, tol)?;
                out["trajectory"] = json!(ascent.trajectory);
                out["converged"] = json!(ascent.converged);
            }
            Ok(out)
        }
        _ => Err(Error::NotEvaluable(
            "grad needs a parametric block with \"grad\" or \"poly\" tables".into(),
        )),
    }
}

fn base_seed() -> Result<u64> {
    match std::env::var("FG_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("FG_SEED must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(0),
    }
}

/// Largest relative disagreement between message passing and enumeration on
/// one weighted graph: `Z`, `H`, every marginal and the entropy.
pub fn compare_with_oracle(w: &WeightedGraph) -> Result<f64> {
    let g = w.graph();
    let mut worst: f64 = 0.0;

    let zh = compute_zh(w, None, false)?;
    worst = worst.max(oracle::relative_error(zh.true_z(), oracle::enumerate_z(g)?));
    // H can cancel when g changes sign, so its error is measured against
    // the same sum taken over |g|.
    let h_exact = oracle::enumerate_h(g, w.companions())?;
    let abs_companions: Vec<Companion> = w
        .companions()
        .iter()
        .map(|c| c.iter().map(|x| x.map(f64::abs)).collect())
        .collect();
    let h_scale = oracle::enumerate_h(g, &abs_companions)?;
    let h_gap = (zh.true_h() - h_exact).abs();
    if h_gap > 0.0 {
        worst = worst.max(if h_gap.is_nan() { f64::INFINITY } else { h_gap / h_scale });
    }

    let p = run(
        g,
        &SumProduct,
        0,
        RunOptions {
            two_pass: true,
            rescale: false,
        },
    )?;
    for n in 0..g.num_variables() {
        let exact = oracle::enumerate_marginal(g, n)?;
        let m = p.marginal(n).ok_or_else(|| Error::MissingDependency(format!("marginal {n}")))?;
        for (a, b) in m.values.iter().zip(&exact) {
            worst = worst.max(oracle::relative_error(*a, *b));
        }
    }

    let logged = WeightedGraph::with_log2(g.clone())?;
    let bits = posterior_entropy(&logged, None, false)?.entropy_bits.unwrap_or(f64::NAN);
    worst = worst.max(oracle::floored_relative_error(bits, oracle::enumerate_entropy(g)?));
    Ok(worst)
}

fn hmm_error(h: &HmmSpec) -> Result<f64> {
    let w = hmm_to_weighted_graph(h)?;
    compare_with_oracle(&w)
}

fn check_cases(graph: Option<PathBuf>, hmm: Option<PathBuf>, seeds: u64) -> Result<(f64, u64)> {
    let base = base_seed()?;
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut note = |e: f64| {
        worst = worst.max(if e.is_nan() { f64::INFINITY } else { e });
        cases += 1;
    };
    match (graph, hmm) {
        (_, Some(path)) => {
            let h = parse_hmm(&path)?;
            note(hmm_error(&h)?);
            for k in 0..seeds {
                let mut rng = ChaCha8Rng::seed_from_u64(base.wrapping_add(k));
                let mut r = random_hmm(&mut rng, h.num_states(), h.alphabet_size(), h.len());
                r.observations = h.observations.clone();
                note(hmm_error(&r)?);
            }
        }
        (Some(path), None) => {
            let model: Model = parse_graph(&path)?;
            let w = match model.companions {
                Some(c) => WeightedGraph::new(model.graph.clone(), c)?,
                None => WeightedGraph::with_log2(model.graph.clone())?,
            };
            note(compare_with_oracle(&w)?);
            for k in 0..seeds {
                let mut rng = ChaCha8Rng::seed_from_u64(base.wrapping_add(k));
                let g = random_tables(&mut rng, &model.graph, 0.05, 1.0);
                let c = random_companions(&mut rng, &g, 0.1, 2.0);
                note(compare_with_oracle(&WeightedGraph::new(g, c)?)?);
            }
        }
        (None, None) => {
            let cfg = TreeConfig::default();
            for k in 0..seeds {
                let mut rng = ChaCha8Rng::seed_from_u64(base.wrapping_add(k));
                let g = random_tree(&mut rng, &cfg);
                let c = random_companions(&mut rng, &g, 0.1, 2.0);
                note(compare_with_oracle(&WeightedGraph::new(g, c)?)?);
            }
        }
    }
    Ok((worst, cases))
}

fn check(graph: Option<PathBuf>, hmm: Option<PathBuf>, seeds: u64) -> Outcome {
    match check_cases(graph, hmm, seeds) {
        Ok((worst, cases)) => {
            let pass = worst <= CHECK_TOLERANCE;
            Outcome {
                code: if pass { 0 } else { 1 },
                stdout: json!({ "max_rel_err": worst, "pass": pass, "cases": cases }).to_string(),
                stderr: if pass {
                    String::new()
                } else {
                    format!("check failed: max relative error {worst:e} exceeds {CHECK_TOLERANCE:e}")
                },
            }
        }
        Err(e) => Outcome::failure(&e),
    }
}
