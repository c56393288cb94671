//! Command-line front end for the simulation harness.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use dolfree::harness::{
    self, HarnessError, LearnerChoice, RunSpec, StreamChoice, SweepKind, SweepSpec,
};
use dolfree::learners::PresetKind;
use dolfree::network::Topology;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dolfree",
    about = "Projection-free distributed online learning over gossip networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one learner over one stream and write CSV traces.
    Run(RunArgs),
    /// Evaluate the lower-bound streams across communication budgets.
    SweepComm(SweepArgs),
    /// Print the mixing matrix facts for a topology.
    InspectMixing(InspectArgs),
    /// Quick deterministic end-to-end checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Complete,
    Cycle,
    Grid,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Complete => Topology::Complete,
            TopologyArg::Cycle => Topology::Cycle,
            TopologyArg::Grid => Topology::Grid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnerArg {
    Docg,
    Dbocg,
    Dbbcg,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    ConvexFull,
    StronglyConvexFull,
    ConvexBandit,
    StronglyConvexBandit,
    HighProbBandit,
}

impl From<PresetArg> for PresetKind {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::ConvexFull => PresetKind::ConvexFull,
            PresetArg::StronglyConvexFull => PresetKind::StronglyConvexFull,
            PresetArg::ConvexBandit => PresetKind::ConvexBandit,
            PresetArg::StronglyConvexBandit => PresetKind::StronglyConvexBandit,
            PresetArg::HighProbBandit => PresetKind::HighProbBandit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SyntheticArg {
    Convex,
    Sc,
}

#[derive(Args)]
struct RunArgs {
    /// LIBSVM-format dataset file (conflicts with --synthetic).
    #[arg(long, conflicts_with = "synthetic")]
    dataset: Option<PathBuf>,
    /// Built-in stream: i.i.d. linear losses or the biased strongly convex
    /// variant.
    #[arg(long, value_enum)]
    synthetic: Option<SyntheticArg>,
    #[arg(long, value_enum, default_value = "complete")]
    topology: TopologyArg,
    #[arg(long, default_value_t = 9)]
    nodes: usize,
    #[arg(long, value_enum, default_value = "dbocg")]
    learner: LearnerArg,
    /// Parameter schedule for the block learners (never valid with docg).
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Multiplier on the regularization weight h (or on eta for docg).
    #[arg(long, default_value_t = 1.0)]
    c_tune: f64,
    /// Multiplier on the bandit exploration radius.
    #[arg(long, default_value_t = 1.0)]
    delta_c: f64,
    /// Failure probability for the high-probability preset.
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Horizon for synthetic streams (datasets derive their own).
    #[arg(long = "T")]
    horizon: Option<usize>,
    /// Ambient dimension for synthetic streams.
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Gradient-norm scale of the synthetic losses.
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    /// Strong-convexity modulus of the synthetic sc stream.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Keep dataset file order instead of the seeded shuffle.
    #[arg(long)]
    no_shuffle: bool,
    /// Cap the number of dataset examples after shuffling.
    #[arg(long)]
    max_examples: Option<usize>,
    /// Keep every k-th dataset example before shuffling.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Round-trace CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also record the running network-average loss to this CSV.
    #[arg(long)]
    avg_loss_out: Option<PathBuf>,
    /// Also compute regret against the best fixed point and write this CSV.
    #[arg(long)]
    regret_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "convex")]
    kind: SweepKindArg,
    #[arg(long, default_value_t = 4)]
    nodes: usize,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long = "T", default_value_t = 2048)]
    horizon: usize,
    /// Comma-separated communication budgets.
    #[arg(long, value_delimiter = ',', default_value = "0,3,15")]
    budgets: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Circumradius of the cube the adversary plays over.
    #[arg(long, default_value_t = 1.0)]
    big_r: f64,
    /// CSV destination (stdout summary when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKindArg {
    Convex,
    StronglyConvex,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long, value_enum)]
    topology: TopologyArg,
    #[arg(long)]
    nodes: usize,
}

fn run_cmd(args: RunArgs) -> Result<bool, HarnessError> {
    let stream = match (args.dataset, args.synthetic) {
        (Some(path), None) => StreamChoice::Dataset(path),
        (None, Some(SyntheticArg::Convex)) => StreamChoice::SyntheticConvex,
        (None, Some(SyntheticArg::Sc)) => StreamChoice::SyntheticStronglyConvex,
        (None, None) => {
            return Err(HarnessError::Config(
                "pick a stream: --dataset PATH or --synthetic {convex|sc}".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    let spec = RunSpec {
        stream,
        topology: args.topology.into(),
        nodes: args.nodes,
        learner: match args.learner {
            LearnerArg::Docg => LearnerChoice::DOcg,
            LearnerArg::Dbocg => LearnerChoice::DBocg,
            LearnerArg::Dbbcg => LearnerChoice::DBbcg,
        },
        preset: args.preset.map(Into::into),
        c_tune: args.c_tune,
        delta_c: args.delta_c,
        gamma: args.gamma,
        seed: args.seed,
        horizon: args.horizon,
        dim: args.dim,
        g: args.g,
        alpha: args.alpha,
        shuffle: !args.no_shuffle,
        max_examples: args.max_examples,
        stride: args.stride,
        out: args.out,
        avg_loss_out: args.avg_loss_out,
        regret_out: args.regret_out,
    };
    harness::run_command(&spec)
}

fn sweep_cmd(args: SweepArgs) -> Result<(), HarnessError> {
    let spec = SweepSpec {
        kind: match args.kind {
            SweepKindArg::Convex => SweepKind::Convex,
            SweepKindArg::StronglyConvex => SweepKind::StronglyConvex,
        },
        nodes: args.nodes,
        dim: args.dim,
        horizon: args.horizon,
        budgets: args.budgets,
        seeds: args.seeds,
        base_seed: args.seed,
        g: args.g,
        alpha: args.alpha,
        big_r: args.big_r,
        out: args.out,
    };
    let rows = harness::execute_sweep(&spec)?;
    for &budget in &spec.budgets {
        let sub: Vec<&harness::SweepRow> = rows.iter().filter(|r| r.budget == budget).collect();
        let mean = sub.iter().map(|r| r.regret).sum::<f64>() / sub.len() as f64;
        println!("budget={budget} mean_regret={mean} bound={}", sub[0].bound);
    }
    Ok(())
}

fn inspect_cmd(args: InspectArgs) -> Result<(), HarnessError> {
    let m = harness::inspect_mixing(args.topology.into(), args.nodes)?;
    println!("# nodes={}", m.n());
    println!("# sigma2={}", m.sigma2());
    println!("# lazy_applied={}", m.lazy_applied());
    println!("i,j,weight");
    for i in 0..m.n() {
        for j in 0..m.n() {
            println!("{i},{j},{}", m.weight(i, j));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successes; anything else is a
            // configuration error and must exit 1, not clap's default 2.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.cmd {
        Cmd::Run(args) => run_cmd(args).map(|flagged| {
            if flagged {
                eprintln!("warning: comparator duality gap exceeded tolerance");
            }
            flagged
        }),
        Cmd::SweepComm(args) => sweep_cmd(args).map(|_| false),
        Cmd::InspectMixing(args) => inspect_cmd(args).map(|_| false),
        Cmd::Selftest => harness::selftest().map(|lines| {
            for l in lines {
                println!("{l}");
            }
            false
        }),
    };
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
