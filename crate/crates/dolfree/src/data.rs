//! LIBSVM-format datasets and their conversion into per-node loss streams.
//!
//! The text format is one example per line: a label followed by
//! whitespace-separated `index:value` pairs with 1-based indices in any
//! order; an index appearing twice on a line is an error. Internally indices
//! are 0-based. Two task shapes are built from a dataset:
//! two distinct labels give hinge losses with an L2 regularizer over an
//! l1 ball; more give softmax losses over a trace-norm ball on a
//! `features x classes` matrix variable.

use crate::geometry::DecisionSet;
use crate::losses::{LossInstance, MaterializedStream, SparseVec};
use crate::rng;
use rand::seq::SliceRandom;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: cannot parse label from {token:?}")]
    BadLabel { line: usize, token: String },
    #[error("line {line}: cannot parse feature from {token:?}")]
    BadFeature { line: usize, token: String },
    #[error("line {line}: feature indices are 1-based, found 0")]
    ZeroIndex { line: usize },
    #[error("line {line}: feature index {index} appears twice")]
    DuplicateIndex { line: usize, index: u32 },
    #[error("dataset is empty")]
    Empty,
    #[error("need at least {needed} usable examples, have {got}")]
    TooFewExamples { needed: usize, got: usize },
    #[error("task needs {needed} distinct labels, dataset has {got}")]
    LabelArity { needed: String, got: usize },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub examples: Vec<SparseVec>,
    pub labels: Vec<f64>,
    /// Feature count: one past the largest index seen.
    pub features: usize,
    /// Sorted distinct labels.
    pub classes: Vec<f64>,
}

impl Dataset {
    pub fn parse_libsvm<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut examples = Vec::new();
        let mut labels = Vec::new();
        let mut features = 0usize;
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut tokens = body.split_whitespace();
            let label_tok = tokens.next().expect("non-empty line has a first token");
            let label: f64 = label_tok
                .parse()
                .map_err(|_| DataError::BadLabel { line: lineno, token: label_tok.into() })?;
            let mut pairs: Vec<(u32, f64)> = Vec::new();
            for tok in tokens {
                let (idx_s, val_s) = tok
                    .split_once(':')
                    .ok_or_else(|| DataError::BadFeature { line: lineno, token: tok.into() })?;
                let idx: u32 = idx_s
                    .parse()
                    .map_err(|_| DataError::BadFeature { line: lineno, token: tok.into() })?;
                let val: f64 = val_s
                    .parse()
                    .map_err(|_| DataError::BadFeature { line: lineno, token: tok.into() })?;
                if idx == 0 {
                    return Err(DataError::ZeroIndex { line: lineno });
                }
                let internal = idx - 1;
                if pairs.iter().any(|&(seen, _)| seen == internal) {
                    return Err(DataError::DuplicateIndex { line: lineno, index: idx });
                }
                features = features.max(internal as usize + 1);
                pairs.push((internal, val));
            }
            examples.push(Arc::from(pairs));
            labels.push(label);
        }
        if examples.is_empty() {
            return Err(DataError::Empty);
        }
        let mut classes = labels.clone();
        classes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        classes.dedup();
        Ok(Self { examples, labels, features, classes })
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self, DataError> {
        Self::parse_libsvm(std::fs::File::open(path)?)
    }

    /// Inverse of the parser, with 1-based indices restored. Values print in
    /// Rust's shortest-round-trip form, so parse(write(d)) == d.
    pub fn write_libsvm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (ex, label) in self.examples.iter().zip(&self.labels) {
            write!(w, "{label}")?;
            for &(i, v) in ex.iter() {
                write!(w, " {}:{v}", i + 1)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Knobs of the two dataset task shapes.
#[derive(Clone, Copy, Debug)]
pub struct DataTaskConfig {
    /// Trace-norm ball radius for multiclass tasks.
    pub tau_trace: f64,
    /// l1 ball radius for binary tasks.
    pub tau_l1: f64,
    /// Hinge regularization weight; the loss is 2*lambda strongly convex.
    pub lambda: f64,
}

impl Default for DataTaskConfig {
    fn default() -> Self {
        Self { tau_trace: 50.0, tau_l1: 10.0, lambda: 0.1 }
    }
}

#[derive(Clone, Debug)]
pub enum TaskKind {
    /// Hinge + L2 over the l1 ball.
    BinaryL1 { dim: usize, tau: f64, lambda: f64 },
    /// Softmax over the trace-norm ball on `features x classes` matrices.
    MulticlassTrace { features: usize, classes: usize, tau: f64 },
}

impl TaskKind {
    /// Shared starting point: the l1 boundary point tau/dim * (1, ..., 1) for
    /// binary tasks, the zero matrix for multiclass.
    pub fn full_info_init(&self) -> Vec<f64> {
        match self {
            TaskKind::BinaryL1 { dim, tau, .. } => vec![tau / *dim as f64; *dim],
            TaskKind::MulticlassTrace { features, classes, .. } => vec![0.0; features * classes],
        }
    }

    /// Starting point feasible for the delta-shrunk set: scaled toward the
    /// origin for binary tasks ((1 - delta sqrt(dim) / tau) / dim per
    /// coordinate), unchanged (zero) for multiclass.
    pub fn bandit_init(&self, delta: f64) -> Vec<f64> {
        match self {
            TaskKind::BinaryL1 { dim, tau, .. } => {
                let d = *dim as f64;
                vec![(1.0 - delta * d.sqrt() / tau) / d; *dim]
            }
            TaskKind::MulticlassTrace { features, classes, .. } => vec![0.0; features * classes],
        }
    }
}

/// A dataset carved into per-node streams plus the matching geometry.
pub struct TaskStreams {
    pub stream: MaterializedStream,
    pub set: DecisionSet,
    pub task: TaskKind,
    /// Strong-convexity modulus of each loss (0 for multiclass).
    pub alpha: f64,
}

impl TaskStreams {
    pub fn full_info_init(&self) -> Vec<f64> {
        self.task.full_info_init()
    }

    pub fn bandit_init(&self, delta: f64) -> Vec<f64> {
        self.task.bandit_init(delta)
    }
}

/// Deterministic subsampling and ordering applied before partitioning.
#[derive(Clone, Copy, Debug)]
pub struct SelectOptions {
    /// Keep every `stride`-th example first (1 keeps everything).
    pub stride: usize,
    /// Shuffle with this seed; `None` keeps file order.
    pub shuffle_seed: Option<u64>,
    /// Truncate to this many examples after the shuffle.
    pub max_examples: Option<usize>,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self { stride: 1, shuffle_seed: None, max_examples: None }
    }
}

/// Splits the selected examples into `nodes` equal contiguous parts of
/// `floor(count / nodes)` examples (the leftover is dropped) and has each
/// node cycle through its own part `nodes` times, so every run lasts
/// `nodes * floor(count / nodes)` rounds.
pub fn build_task(
    dataset: &Dataset,
    nodes: usize,
    cfg: &DataTaskConfig,
    select: &SelectOptions,
) -> Result<TaskStreams, DataError> {
    if nodes == 0 {
        return Err(DataError::BadConfig("need at least one node".into()));
    }
    if select.stride == 0 {
        return Err(DataError::BadConfig("stride must be >= 1".into()));
    }
    if !(cfg.tau_trace > 0.0 && cfg.tau_l1 > 0.0 && cfg.lambda >= 0.0) {
        return Err(DataError::BadConfig("radii must be positive, lambda nonnegative".into()));
    }

    let mut order: Vec<usize> = (0..dataset.len()).step_by(select.stride).collect();
    if let Some(seed) = select.shuffle_seed {
        let mut r = rng::keyed(rng::tag::SHUFFLE, seed, 0, 0);
        order.shuffle(&mut r);
    }
    if let Some(cap) = select.max_examples {
        order.truncate(cap);
    }
    let per_node = order.len() / nodes;
    if per_node == 0 {
        return Err(DataError::TooFewExamples { needed: nodes, got: order.len() });
    }

    let binary = dataset.classes.len() == 2;
    if dataset.classes.len() < 2 {
        return Err(DataError::LabelArity { needed: "at least 2".into(), got: dataset.classes.len() });
    }

    let make = |idx: usize| -> LossInstance {
        let example = dataset.examples[idx].clone();
        if binary {
            // Smaller label maps to -1, larger to +1.
            let label = if dataset.labels[idx] == dataset.classes[0] { -1.0 } else { 1.0 };
            LossInstance::HingeL2 { example, label, lambda: cfg.lambda, dim: dataset.features }
        } else {
            let label = dataset
                .classes
                .binary_search_by(|c| c.partial_cmp(&dataset.labels[idx]).unwrap())
                .expect("every label appears in the class list");
            LossInstance::MulticlassLogistic {
                example,
                label,
                classes: dataset.classes.len(),
                features: dataset.features,
            }
        }
    };

    let horizon = nodes * per_node;
    let per_node_streams: Vec<Vec<LossInstance>> = (0..nodes)
        .map(|i| {
            let part = &order[i * per_node..(i + 1) * per_node];
            (0..horizon).map(|t| make(part[t % per_node])).collect()
        })
        .collect();

    let (set, task, alpha) = if binary {
        let dim = dataset.features;
        let set = DecisionSet::l1_ball(cfg.tau_l1, dim)
            .map_err(|e| DataError::BadConfig(e.to_string()))?;
        (set, TaskKind::BinaryL1 { dim, tau: cfg.tau_l1, lambda: cfg.lambda }, 2.0 * cfg.lambda)
    } else {
        let classes = dataset.classes.len();
        let set = DecisionSet::trace_norm_ball(cfg.tau_trace, dataset.features, classes)
            .map_err(|e| DataError::BadConfig(e.to_string()))?;
        (
            set,
            TaskKind::MulticlassTrace { features: dataset.features, classes, tau: cfg.tau_trace },
            0.0,
        )
    };

    Ok(TaskStreams { stream: MaterializedStream::new(per_node_streams), set, task, alpha })
}

/// Deterministic sparse binary dataset for demos and self-contained tests:
/// `features`-dimensional examples with ~11% active coordinates valued 1,
/// labeled by a fixed sparse linear rule with 5% label noise. The shape
/// mimics common adult-census-style binary benchmarks.
pub fn synthetic_binary_dataset(count: usize, features: usize, seed: u64) -> Dataset {
    use rand::Rng;
    assert!(count >= 2 && features >= 8);
    let mut rule_rng = rng::keyed(rng::tag::STREAM, seed, u64::MAX, 0);
    let rule: Vec<f64> = (0..features)
        .map(|_| if rule_rng.random::<f64>() < 0.25 {
            rule_rng.random_range(-1.0f64..1.0)
        } else {
            0.0
        })
        .collect();
    let mut examples = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let mut r = rng::keyed(rng::tag::STREAM, seed, u64::MAX, 1 + i as u64);
        let mut pairs: Vec<(u32, f64)> = Vec::new();
        let mut score = 0.0;
        for j in 0..features {
            if r.random::<f64>() < 0.11 {
                pairs.push((j as u32, 1.0));
                score += rule[j];
            }
        }
        let noisy = r.random::<f64>() < 0.05;
        let mut label = if score >= 0.0 { 1.0 } else { -1.0 };
        if noisy {
            label = -label;
        }
        examples.push(Arc::from(pairs));
        labels.push(label);
    }
    // Tiny counts can draw one label only; flip the last example so the
    // binary task always has both classes.
    if labels.iter().all(|&l| l > 0.0) || labels.iter().all(|&l| l < 0.0) {
        let last = labels.last_mut().unwrap();
        *last = -*last;
    }
    Dataset { examples, labels, features, classes: vec![-1.0, 1.0] }
}
