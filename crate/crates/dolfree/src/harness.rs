//! End-to-end run orchestration behind the command-line interface: stream
//! and geometry assembly, preset resolution, learner execution, and CSV
//! output.
//!
//! Every run is a pure function of its spec. CSV files echo the resolved
//! configuration in `# key=value` header lines and print floats in Rust's
//! shortest-round-trip form, so identical specs produce byte-identical files.

use crate::adversary::{ConvexAdversary, StronglyConvexAdversary, SyntheticConvexStream, SyntheticScStream};
use crate::data::{build_task, DataTaskConfig, Dataset, SelectOptions, TaskKind};
use crate::geometry::{DecisionSet, GeometryError};
use crate::learners::{
    make_preset, run_dbbcg, run_dbocg, run_docg, BlockParams, LearnerError, PresetInputs,
    PresetKind, RunOptions, RunTrace,
};
use crate::losses::{estimate_lipschitz, estimate_value_bound, LossInstance, LossStream};
use crate::metrics::{offline_comparator, regret_report, RegretReport};
use crate::network::{MixingMatrix, Topology};
use std::io::Write;
use std::path::PathBuf;

/// Circumradius of the cube used by the synthetic streams.
pub const SYNTHETIC_RADIUS: f64 = 2.0;

/// Frank-Wolfe budget for offline comparators.
pub const COMPARATOR_BUDGET: usize = 2000;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical check failed: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// 1 for configuration and io problems, 2 for numerical flags.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

fn from_learner(e: LearnerError) -> HarnessError {
    match e {
        LearnerError::Geometry(GeometryError::PowerIterationStalled { .. }) => {
            HarnessError::Numerical(e.to_string())
        }
        other => HarnessError::Config(other.to_string()),
    }
}

fn from_geometry(e: GeometryError) -> HarnessError {
    match e {
        GeometryError::PowerIterationStalled { .. } => HarnessError::Numerical(e.to_string()),
        other => HarnessError::Config(other.to_string()),
    }
}

/// Applies `DOLFREE_THREADS` to the global worker pool; later calls are
/// no-ops, as are invalid values.
pub fn configure_threads() {
    if let Ok(v) = std::env::var("DOLFREE_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LearnerChoice {
    DOcg,
    DBocg,
    DBbcg,
}

impl LearnerChoice {
    fn name(self) -> &'static str {
        match self {
            Self::DOcg => "docg",
            Self::DBocg => "dbocg",
            Self::DBbcg => "dbbcg",
        }
    }
}

#[derive(Clone, Debug)]
pub enum StreamChoice {
    SyntheticConvex,
    SyntheticStronglyConvex,
    Dataset(PathBuf),
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub stream: StreamChoice,
    pub topology: Topology,
    pub nodes: usize,
    pub learner: LearnerChoice,
    pub preset: Option<PresetKind>,
    pub c_tune: f64,
    pub delta_c: f64,
    pub gamma: f64,
    pub seed: u64,
    /// Required for synthetic streams; datasets derive their own horizon.
    pub horizon: Option<usize>,
    /// Synthetic streams only.
    pub dim: usize,
    pub g: f64,
    pub alpha: f64,
    /// Dataset order handling.
    pub shuffle: bool,
    pub max_examples: Option<usize>,
    pub stride: usize,
    /// Output destinations; `out = None` writes the round trace to stdout.
    pub out: Option<PathBuf>,
    pub avg_loss_out: Option<PathBuf>,
    pub regret_out: Option<PathBuf>,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            stream: StreamChoice::SyntheticConvex,
            topology: Topology::Complete,
            nodes: 9,
            learner: LearnerChoice::DBocg,
            preset: Some(PresetKind::ConvexFull),
            c_tune: 1.0,
            delta_c: 1.0,
            gamma: 0.1,
            seed: 0,
            horizon: Some(1024),
            dim: 16,
            g: 1.0,
            alpha: 1.0,
            shuffle: true,
            max_examples: None,
            stride: 1,
            out: None,
            avg_loss_out: None,
            regret_out: None,
        }
    }
}

/// Everything a finished run hands to writers and tests.
pub struct RunArtifacts {
    pub trace: RunTrace,
    pub regret: Option<RegretReport>,
    pub echo: Vec<(String, String)>,
    pub set: DecisionSet,
    pub sigma2: f64,
}

enum BuiltStream {
    Convex(SyntheticConvexStream),
    Sc(SyntheticScStream),
    Data(crate::losses::MaterializedStream),
}

impl BuiltStream {
    fn as_dyn(&self) -> &dyn SwitchStream {
        match self {
            Self::Convex(s) => s,
            Self::Sc(s) => s,
            Self::Data(s) => s,
        }
    }
}

/// Object-safe alias so the harness can hold any stream uniformly.
trait SwitchStream: LossStream {}
impl<T: LossStream> SwitchStream for T {}

impl LossStream for &dyn SwitchStream {
    fn rounds(&self) -> usize {
        (**self).rounds()
    }

    fn nodes(&self) -> usize {
        (**self).nodes()
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn loss(&self, t: usize, node: usize) -> LossInstance {
        (**self).loss(t, node)
    }
}

struct Problem {
    stream: BuiltStream,
    set: DecisionSet,
    x_init: Vec<f64>,
    /// Strong-convexity modulus of the stream's losses.
    alpha: f64,
    lipschitz: f64,
    value_bound: f64,
    horizon: usize,
    task_label: String,
    task: Option<TaskKind>,
}

fn build_problem(spec: &RunSpec) -> Result<Problem, HarnessError> {
    if spec.nodes == 0 {
        return Err(HarnessError::Config("need at least one node".into()));
    }
    match &spec.stream {
        StreamChoice::SyntheticConvex | StreamChoice::SyntheticStronglyConvex => {
            let horizon = spec
                .horizon
                .ok_or_else(|| HarnessError::Config("synthetic streams need a horizon".into()))?;
            if horizon == 0 {
                return Err(HarnessError::Config("horizon must be positive".into()));
            }
            if spec.dim == 0 || !(spec.g > 0.0) {
                return Err(HarnessError::Config("dim and g must be positive".into()));
            }
            let halfwidth = SYNTHETIC_RADIUS / (spec.dim as f64).sqrt();
            let set = DecisionSet::hypercube(halfwidth, spec.dim).map_err(from_geometry)?;
            let x_init = set.origin();
            let r = SYNTHETIC_RADIUS;
            let sc = matches!(spec.stream, StreamChoice::SyntheticStronglyConvex);
            if sc && !(spec.alpha > 0.0) {
                return Err(HarnessError::Config(
                    "the strongly convex stream needs alpha > 0".into(),
                ));
            }
            let (stream, alpha, lipschitz, value_bound, task_label) = if sc {
                (
                    BuiltStream::Sc(SyntheticScStream {
                        nodes: spec.nodes,
                        dim: spec.dim,
                        horizon,
                        g: spec.g,
                        alpha: spec.alpha,
                        seed: spec.seed,
                    }),
                    spec.alpha,
                    spec.g + spec.alpha * r,
                    spec.g * r + 0.5 * spec.alpha * r * r,
                    "synthetic-sc".to_string(),
                )
            } else {
                (
                    BuiltStream::Convex(SyntheticConvexStream {
                        nodes: spec.nodes,
                        dim: spec.dim,
                        horizon,
                        g: spec.g,
                        seed: spec.seed,
                    }),
                    0.0,
                    spec.g,
                    spec.g * r,
                    "synthetic-convex".to_string(),
                )
            };
            Ok(Problem {
                stream,
                set,
                x_init,
                alpha,
                lipschitz,
                value_bound,
                horizon,
                task_label,
                task: None,
            })
        }
        StreamChoice::Dataset(path) => {
            if spec.horizon.is_some() {
                return Err(HarnessError::Config(
                    "datasets derive their horizon; use --max-examples to trim".into(),
                ));
            }
            let dataset =
                Dataset::from_path(path).map_err(|e| HarnessError::Config(e.to_string()))?;
            let select = SelectOptions {
                stride: spec.stride,
                shuffle_seed: spec.shuffle.then_some(spec.seed),
                max_examples: spec.max_examples,
            };
            let task = build_task(&dataset, spec.nodes, &DataTaskConfig::default(), &select)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let horizon = task.stream.rounds();
            // Constants come from a strided sample of instances probed at
            // random members; deterministic in the run seed.
            let sample = sample_losses(&task.stream, 256);
            let lipschitz = estimate_lipschitz(&sample, &task.set, 32, spec.seed);
            let value_bound = estimate_value_bound(&sample, &task.set, 32, spec.seed);
            let task_label = match &task.task {
                TaskKind::BinaryL1 { .. } => "binary-l1".to_string(),
                TaskKind::MulticlassTrace { .. } => "multiclass-trace".to_string(),
            };
            Ok(Problem {
                x_init: task.full_info_init(),
                alpha: task.alpha,
                set: task.set,
                stream: BuiltStream::Data(task.stream),
                lipschitz,
                value_bound,
                horizon,
                task_label,
                task: Some(task.task),
            })
        }
    }
}

fn sample_losses<S: LossStream>(stream: &S, cap: usize) -> Vec<LossInstance> {
    let total = stream.rounds() * stream.nodes();
    let step = (total / cap).max(1);
    let mut out = Vec::new();
    let mut flat = 0;
    while flat < total && out.len() < cap {
        out.push(stream.loss(flat / stream.nodes(), flat % stream.nodes()));
        flat += step;
    }
    out
}

fn resolve_mixing(spec: &RunSpec) -> Result<MixingMatrix, HarnessError> {
    if spec.nodes == 1 {
        return Ok(MixingMatrix::single());
    }
    MixingMatrix::from_topology(spec.topology, spec.nodes)
        .map_err(|e| HarnessError::Config(e.to_string()))
}

fn topology_name(t: Topology) -> &'static str {
    match t {
        Topology::Complete => "complete",
        Topology::Cycle => "cycle",
        Topology::Grid => "grid",
    }
}

fn preset_name(p: PresetKind) -> &'static str {
    match p {
        PresetKind::ConvexFull => "convex-full",
        PresetKind::StronglyConvexFull => "strongly-convex-full",
        PresetKind::ConvexBandit => "convex-bandit",
        PresetKind::StronglyConvexBandit => "strongly-convex-bandit",
        PresetKind::HighProbBandit => "high-prob-bandit",
    }
}

/// Runs one spec end to end without touching the filesystem.
pub fn execute_run(spec: &RunSpec) -> Result<RunArtifacts, HarnessError> {
    configure_threads();
    let problem = build_problem(spec)?;
    let mixing = resolve_mixing(spec)?;
    if mixing.n() != spec.nodes {
        return Err(HarnessError::Config("node count mismatch".into()));
    }

    // Resolve the learner parameterization and enforce learner/preset
    // pairing: the baseline takes none, the block learners need a matching
    // full-information or bandit preset.
    let mut echo: Vec<(String, String)> = vec![
        ("learner".into(), spec.learner.name().into()),
        ("task".into(), problem.task_label.clone()),
        ("topology".into(), topology_name(spec.topology).into()),
        ("nodes".into(), spec.nodes.to_string()),
        ("horizon".into(), problem.horizon.to_string()),
        ("dim".into(), problem.set.dim().to_string()),
        ("sigma2".into(), mixing.sigma2().to_string()),
        ("lazy_mixing".into(), mixing.lazy_applied().to_string()),
        ("seed".into(), spec.seed.to_string()),
        ("c_tune".into(), spec.c_tune.to_string()),
    ];

    let opts = RunOptions { record_avg_loss: spec.avg_loss_out.is_some() };
    let stream_ref = problem.stream.as_dyn();

    let trace = match spec.learner {
        LearnerChoice::DOcg => {
            if spec.preset.is_some() {
                return Err(HarnessError::Config(
                    "the per-round baseline takes no preset; drop --preset".into(),
                ));
            }
            let eta = spec.c_tune * (problem.horizon as f64).powf(-0.75);
            echo.push(("eta".into(), eta.to_string()));
            run_docg(&problem.set, &mixing, eta, &problem.x_init, &stream_ref, &opts)
                .map_err(from_learner)?
        }
        LearnerChoice::DBocg | LearnerChoice::DBbcg => {
            let preset = spec.preset.ok_or_else(|| {
                HarnessError::Config("block learners need --preset".into())
            })?;
            let bandit_learner = spec.learner == LearnerChoice::DBbcg;
            if preset.is_bandit() != bandit_learner {
                return Err(HarnessError::Config(format!(
                    "preset {} does not fit learner {}",
                    preset_name(preset),
                    spec.learner.name()
                )));
            }
            let inputs = PresetInputs {
                horizon: problem.horizon,
                nodes: spec.nodes,
                dim: problem.set.dim(),
                sigma2: mixing.sigma2(),
                lipschitz: problem.lipschitz,
                value_bound: problem.value_bound,
                circumradius: problem.set.circumradius(),
                inradius: problem.set.inradius(),
                alpha: problem.alpha,
                gamma: spec.gamma,
                c_tune: spec.c_tune,
                delta_c: spec.delta_c,
            };
            let resolved =
                make_preset(preset, &inputs).map_err(|e| HarnessError::Config(e.to_string()))?;
            let BlockParams { k_block, l_iters, h, alpha } = resolved.params;
            echo.push(("preset".into(), preset_name(preset).into()));
            echo.push(("k_block".into(), k_block.to_string()));
            echo.push(("l_iters".into(), l_iters.to_string()));
            echo.push(("h".into(), h.to_string()));
            echo.push(("alpha".into(), alpha.to_string()));
            if bandit_learner {
                let delta = resolved.delta.expect("bandit presets carry a radius");
                echo.push(("delta".into(), delta.to_string()));
                let x_init = match &problem.task {
                    Some(task_kind) => task_kind.bandit_init(delta),
                    None => problem.x_init.clone(),
                };
                run_dbbcg(
                    &problem.set,
                    &mixing,
                    resolved.params,
                    delta,
                    &x_init,
                    spec.seed,
                    &stream_ref,
                    &opts,
                )
                .map_err(from_learner)?
            } else {
                run_dbocg(&problem.set, &mixing, resolved.params, &problem.x_init, &stream_ref, &opts)
                    .map_err(from_learner)?
            }
        }
    };

    let regret = if spec.regret_out.is_some() {
        let gap_tol = 1e-3 * problem.lipschitz * problem.set.circumradius();
        let report = regret_report(&trace, &stream_ref, &problem.set, COMPARATOR_BUDGET, gap_tol)
            .map_err(from_geometry)?;
        Some(report)
    } else {
        None
    };

    Ok(RunArtifacts { trace, regret, echo, set: problem.set, sigma2: mixing.sigma2() })
}

fn write_echo<W: Write>(w: &mut W, echo: &[(String, String)]) -> std::io::Result<()> {
    for (k, v) in echo {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

/// `round,node,inst_loss,cum_comm,cum_lmo` rows, round 1-based, node 0-based.
pub fn write_trace_csv<W: Write>(
    w: &mut W,
    trace: &RunTrace,
    echo: &[(String, String)],
) -> std::io::Result<()> {
    write_echo(w, echo)?;
    writeln!(w, "round,node,inst_loss,cum_comm,cum_lmo")?;
    for t in 0..trace.rounds {
        for i in 0..trace.nodes {
            writeln!(
                w,
                "{},{},{},{},{}",
                t + 1,
                i,
                trace.inst_loss[t * trace.nodes + i],
                trace.cum_comm[t],
                trace.cum_lmo[t]
            )?;
        }
    }
    Ok(())
}

/// `t,node,avg_loss` rows at the recorded sample points.
pub fn write_avg_loss_csv<W: Write>(
    w: &mut W,
    trace: &RunTrace,
    echo: &[(String, String)],
) -> std::io::Result<()> {
    write_echo(w, echo)?;
    writeln!(w, "t,node,avg_loss")?;
    if let Some(al) = &trace.avg_loss {
        for (t, row) in al.at_rounds.iter().zip(&al.values) {
            for (i, v) in row.iter().enumerate() {
                writeln!(w, "{t},{i},{v}")?;
            }
        }
    }
    Ok(())
}

/// `node,regret,regret_unperturbed,fw_gap` rows; full-information runs repeat
/// the charged regret in the unperturbed column.
pub fn write_regret_csv<W: Write>(
    w: &mut W,
    report: &RegretReport,
    echo: &[(String, String)],
) -> std::io::Result<()> {
    write_echo(w, echo)?;
    writeln!(w, "node,regret,regret_unperturbed,fw_gap")?;
    for (i, r) in report.per_node.iter().enumerate() {
        let unper = report
            .per_node_unperturbed
            .as_ref()
            .map(|u| u[i])
            .unwrap_or(*r);
        writeln!(w, "{i},{r},{unper},{}", report.comparator.fw_gap)?;
    }
    Ok(())
}

fn open_out(path: &PathBuf) -> Result<std::io::BufWriter<std::fs::File>, HarnessError> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Computes a run and writes every requested file. Returns true when a
/// numerical flag fired (comparator gap over tolerance); callers should exit
/// with code 2 in that case even though the files were written.
pub fn run_command(spec: &RunSpec) -> Result<bool, HarnessError> {
    let art = execute_run(spec)?;
    match &spec.out {
        Some(p) => write_trace_csv(&mut open_out(p)?, &art.trace, &art.echo)?,
        None => {
            let stdout = std::io::stdout();
            write_trace_csv(&mut stdout.lock(), &art.trace, &art.echo)?;
        }
    }
    if let Some(p) = &spec.avg_loss_out {
        write_avg_loss_csv(&mut open_out(p)?, &art.trace, &art.echo)?;
    }
    if let Some(p) = &spec.regret_out {
        let report = art.regret.as_ref().expect("regret requested implies computed");
        write_regret_csv(&mut open_out(p)?, report, &art.echo)?;
    }
    Ok(art.regret.as_ref().is_some_and(|r| r.comparator.gap_flagged))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Convex,
    StronglyConvex,
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub nodes: usize,
    pub dim: usize,
    pub horizon: usize,
    pub budgets: Vec<usize>,
    pub seeds: usize,
    pub base_seed: u64,
    pub g: f64,
    pub alpha: f64,
    pub big_r: f64,
    pub out: Option<PathBuf>,
}

pub struct SweepRow {
    pub budget: usize,
    pub seed: u64,
    pub regret: f64,
    pub bound: f64,
}

/// Regret of the stand-still (origin) strategy against each lower-bound
/// stream, per budget and seed, next to the theoretical floor. The origin's
/// losses all vanish, so its regret is minus the comparator total.
pub fn execute_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, HarnessError> {
    if spec.seeds == 0 || spec.budgets.is_empty() {
        return Err(HarnessError::Config("need at least one seed and one budget".into()));
    }
    let mut rows = Vec::with_capacity(spec.seeds * spec.budgets.len());
    for &budget in &spec.budgets {
        for s in 0..spec.seeds {
            let seed = spec.base_seed + s as u64;
            let (bound, total) = match spec.kind {
                SweepKind::Convex => {
                    let adv = ConvexAdversary::new(
                        spec.nodes, spec.dim, spec.g, spec.big_r, spec.horizon, budget, seed,
                    )
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                    let comp =
                        offline_comparator(&adv, &adv.set(), COMPARATOR_BUDGET, f64::INFINITY)
                            .map_err(from_geometry)?;
                    (adv.regret_lower_bound(), comp.total_loss)
                }
                SweepKind::StronglyConvex => {
                    let adv = StronglyConvexAdversary::new(
                        spec.nodes, spec.dim, spec.alpha, spec.big_r, spec.horizon, budget, seed,
                    )
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                    let comp =
                        offline_comparator(&adv, &adv.set(), COMPARATOR_BUDGET, f64::INFINITY)
                            .map_err(from_geometry)?;
                    (adv.regret_lower_bound(), comp.total_loss)
                }
            };
            rows.push(SweepRow { budget, seed, regret: -total, bound });
        }
    }
    if let Some(p) = &spec.out {
        let mut w = open_out(p)?;
        writeln!(w, "budget,seed,regret,bound")?;
        for r in &rows {
            writeln!(w, "{},{},{},{}", r.budget, r.seed, r.regret, r.bound)?;
        }
    }
    Ok(rows)
}

/// Builds the mixing matrix for a topology and prints its key facts.
pub fn inspect_mixing(topology: Topology, nodes: usize) -> Result<MixingMatrix, HarnessError> {
    if nodes == 1 {
        return Ok(MixingMatrix::single());
    }
    MixingMatrix::from_topology(topology, nodes).map_err(|e| HarnessError::Config(e.to_string()))
}

/// Quick deterministic end-to-end checks; returns one line per check.
pub fn selftest() -> Result<Vec<String>, HarnessError> {
    configure_threads();
    let mut lines = Vec::new();
    let mut check = |name: &str, ok: bool| -> Result<(), HarnessError> {
        if ok {
            lines.push(format!("ok {name}"));
            Ok(())
        } else {
            Err(HarnessError::Numerical(format!("selftest failed: {name}")))
        }
    };

    let m = MixingMatrix::from_topology(Topology::Complete, 9)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    check("complete topology contraction factor", (m.sigma2() - 0.125).abs() < 1e-10)?;

    let spec = RunSpec {
        horizon: Some(64),
        dim: 4,
        nodes: 4,
        preset: Some(PresetKind::ConvexFull),
        ..RunSpec::default()
    };
    let art = execute_run(&spec)?;
    check("block learner communication count", *art.trace.cum_comm.last().unwrap() == 8)?;
    let again = execute_run(&spec)?;
    check("deterministic repeat", again.trace.inst_loss == art.trace.inst_loss)?;

    let bspec = RunSpec {
        learner: LearnerChoice::DBbcg,
        preset: Some(PresetKind::ConvexBandit),
        delta_c: 0.5,
        ..spec.clone()
    };
    let bart = execute_run(&bspec)?;
    check("bandit run completes", bart.trace.rounds == 64)?;

    let dspec = RunSpec { learner: LearnerChoice::DOcg, preset: None, ..spec };
    let dart = execute_run(&dspec)?;
    check("per-round baseline gossips every round", *dart.trace.cum_comm.last().unwrap() == 64)?;
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_run_produces_full_trace() {
        let spec = RunSpec { horizon: Some(100), dim: 4, nodes: 3, ..RunSpec::default() };
        let art = execute_run(&spec).unwrap();
        // floor(sqrt(100)) = 10 -> 10 full blocks.
        assert_eq!(art.trace.rounds, 100);
        assert_eq!(*art.trace.cum_comm.last().unwrap(), 10);
        assert_eq!(*art.trace.cum_lmo.last().unwrap(), 100);
        assert_eq!(art.trace.inst_loss.len(), 300);
        assert!(art.trace.inst_loss.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn learner_preset_pairing_is_enforced() {
        let base = RunSpec { horizon: Some(64), dim: 4, nodes: 2, ..RunSpec::default() };
        let bad = RunSpec {
            learner: LearnerChoice::DBbcg,
            preset: Some(PresetKind::ConvexFull),
            ..base.clone()
        };
        assert!(matches!(execute_run(&bad), Err(HarnessError::Config(_))));
        let bad = RunSpec {
            learner: LearnerChoice::DBocg,
            preset: Some(PresetKind::ConvexBandit),
            ..base.clone()
        };
        assert!(matches!(execute_run(&bad), Err(HarnessError::Config(_))));
        let bad =
            RunSpec { learner: LearnerChoice::DOcg, preset: Some(PresetKind::ConvexFull), ..base.clone() };
        assert!(matches!(execute_run(&bad), Err(HarnessError::Config(_))));
        let bad = RunSpec { learner: LearnerChoice::DBocg, preset: None, ..base };
        assert!(matches!(execute_run(&bad), Err(HarnessError::Config(_))));
    }

    #[test]
    fn trace_csv_has_header_echo_and_schema() {
        let spec = RunSpec { horizon: Some(16), dim: 3, nodes: 2, ..RunSpec::default() };
        let art = execute_run(&spec).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &art.trace, &art.echo).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# learner=dbocg\n"));
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, "round,node,inst_loss,cum_comm,cum_lmo");
        let rows = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 1 + 16 * 2);
    }

    #[test]
    fn selftest_passes() {
        let lines = selftest().unwrap();
        assert_eq!(lines.len(), 5);
        assert!(lines.iter().all(|l| l.starts_with("ok ")));
    }

    #[test]
    fn sweep_rows_cover_the_grid() {
        let spec = SweepSpec {
            kind: SweepKind::Convex,
            nodes: 3,
            dim: 4,
            horizon: 128,
            budgets: vec![0, 3],
            seeds: 2,
            base_seed: 7,
            g: 1.0,
            alpha: 1.0,
            big_r: 1.0,
            out: None,
        };
        let rows = execute_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.regret >= 0.0 && r.bound > 0.0));
        // Single interval: the zero player's regret is exactly (n-1) R G T.
        let c0 = &rows[0];
        assert!((c0.regret - 2.0 * 128.0).abs() < 1e-9, "{}", c0.regret);
    }
}
