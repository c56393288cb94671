//! Distributed online learners that touch the feasible set only through
//! linear minimization.
//!
//! Three engines share one communication pattern: each node keeps a gossip
//! accumulator z_i that is mixed with its neighbors' and then fed the node's
//! newest (estimated) gradient information.
//!
//! * [`DBocg`]: full-information block learner. A decision is held fixed for
//!   a block of `k_block` rounds while gradients accumulate; at the block
//!   boundary a fixed budget of `l_iters` conditional-gradient steps updates
//!   the decision against the quadratic surrogate, and one gossip exchange
//!   runs. Communication and LMO cost therefore scale with `rounds / k_block`
//!   instead of with rounds.
//! * [`DBbcg`]: the bandit variant. Plays are perturbed from the block
//!   decision by a radius-`delta` sphere sample, feedback is the played
//!   value alone, and the block gradient is the sum of one-point estimates.
//!   All iterates live in the shrunk set, which keeps every perturbed play
//!   inside the original set.
//! * [`DOcg`]: the classical baseline that gossips and calls the LMO every
//!   round, used for communication-cost comparisons.

use crate::bandit;
use crate::cg::{cg_minimize, Surrogate};
use crate::geometry::{DecisionSet, GeometryError};
use crate::losses::{LossInstance, LossStream};
use crate::network::MixingMatrix;
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum LearnerError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("initial point is not inside the working set")]
    InfeasibleInit,
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Block-learner knobs. `alpha` is the strong-convexity modulus the learner
/// exploits; pass 0 for merely convex losses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockParams {
    pub k_block: usize,
    pub l_iters: usize,
    pub h: f64,
    pub alpha: f64,
}

impl BlockParams {
    fn validate(&self) -> Result<(), LearnerError> {
        if self.k_block == 0 || self.l_iters == 0 {
            return Err(LearnerError::BadConfig("block length and LMO budget must be >= 1".into()));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(LearnerError::BadConfig(format!("h must be positive, got {}", self.h)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(LearnerError::BadConfig(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// State shared by both block learners: per-node decision, gossip
/// accumulator, and the in-progress block gradient.
struct BlockCore {
    set: DecisionSet,
    mixing: MixingMatrix,
    params: BlockParams,
    x_in: Vec<f64>,
    x: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    g_hat: Vec<Vec<f64>>,
    block: usize,
    round_in_block: usize,
    cum_comm: u64,
    cum_lmo: u64,
}

impl BlockCore {
    fn new(
        set: DecisionSet,
        mixing: MixingMatrix,
        params: BlockParams,
        x_init: &[f64],
    ) -> Result<Self, LearnerError> {
        params.validate()?;
        if x_init.len() != set.dim() {
            return Err(LearnerError::Shape(format!(
                "initial point has {} entries, set expects {}",
                x_init.len(),
                set.dim()
            )));
        }
        if !set.contains(x_init, 1e-9) {
            return Err(LearnerError::InfeasibleInit);
        }
        let n = mixing.n();
        let dim = set.dim();
        Ok(Self {
            set,
            mixing,
            params,
            x_in: x_init.to_vec(),
            x: vec![x_init.to_vec(); n],
            z: vec![vec![0.0; dim]; n],
            g_hat: vec![vec![0.0; dim]; n],
            block: 1,
            round_in_block: 0,
            cum_comm: 0,
            cum_lmo: 0,
        })
    }

    fn n(&self) -> usize {
        self.mixing.n()
    }

    /// Ends the round; at a block boundary runs the decision update and one
    /// gossip exchange. Returns whether the block closed.
    fn advance_round(&mut self) -> Result<bool, GeometryError> {
        self.round_in_block += 1;
        if self.round_in_block < self.params.k_block {
            return Ok(false);
        }
        self.end_block()?;
        Ok(true)
    }

    fn end_block(&mut self) -> Result<(), GeometryError> {
        let k = self.params.k_block as f64;
        // The quadratic term grows with the number of completed blocks.
        let quad = (self.block - 1) as f64 * self.params.alpha * k;
        let h = self.params.h;

        // Decision update first: the surrogate reads this block's z, before
        // the gossip exchange below replaces it.
        let new_x: Result<Vec<Vec<f64>>, GeometryError> = (0..self.n())
            .into_par_iter()
            .map(|i| {
                let f = Surrogate::new(&self.z[i], quad, h, &self.x_in);
                cg_minimize(&self.set, &f, &self.x[i], self.params.l_iters)
            })
            .collect();
        let new_x = new_x?;

        let mixed = self.mixing.mix(&self.z);
        let ak = self.params.alpha * k;
        for i in 0..self.n() {
            let zi = &mut self.z[i];
            zi.copy_from_slice(&mixed[i]);
            for ((zk, gk), xk) in zi.iter_mut().zip(&self.g_hat[i]).zip(&self.x[i]) {
                *zk += gk - ak * xk;
            }
            self.g_hat[i].iter_mut().for_each(|g| *g = 0.0);
        }
        self.x = new_x;
        self.block += 1;
        self.round_in_block = 0;
        self.cum_comm += 1;
        self.cum_lmo += self.params.l_iters as u64;
        Ok(())
    }
}

/// Full-information block learner.
pub struct DBocg {
    core: BlockCore,
}

impl DBocg {
    pub fn new(
        set: DecisionSet,
        mixing: MixingMatrix,
        params: BlockParams,
        x_init: &[f64],
    ) -> Result<Self, LearnerError> {
        Ok(Self { core: BlockCore::new(set, mixing, params, x_init)? })
    }

    /// Current per-node decisions; the play for every round of the open block.
    pub fn decisions(&self) -> &[Vec<f64>] {
        &self.core.x
    }

    /// Per-node gossip accumulators (exposed for consensus diagnostics).
    pub fn z_states(&self) -> &[Vec<f64>] {
        &self.core.z
    }

    /// Feeds one round of losses (one per node) and returns whether a block
    /// boundary was crossed.
    pub fn observe_round(&mut self, losses: &[LossInstance]) -> Result<bool, LearnerError> {
        let core = &mut self.core;
        if losses.len() != core.n() {
            return Err(LearnerError::Shape(format!(
                "{} losses for {} nodes",
                losses.len(),
                core.n()
            )));
        }
        for (i, loss) in losses.iter().enumerate() {
            if loss.dim() != core.set.dim() {
                return Err(LearnerError::Shape(format!(
                    "loss dimension {} does not match set dimension {}",
                    loss.dim(),
                    core.set.dim()
                )));
            }
            loss.add_gradient(&core.x[i], &mut core.g_hat[i]);
        }
        Ok(core.advance_round()?)
    }

    pub fn cum_comm(&self) -> u64 {
        self.core.cum_comm
    }

    pub fn cum_lmo(&self) -> u64 {
        self.core.cum_lmo
    }

    /// 1-based index of the block currently accumulating.
    pub fn block_index(&self) -> usize {
        self.core.block
    }

    pub fn params(&self) -> &BlockParams {
        &self.core.params
    }
}

/// Bandit block learner over the shrunk set.
pub struct DBbcg {
    core: BlockCore,
    original_set: DecisionSet,
    delta: f64,
    seed: u64,
    /// Global 1-based round index; keys the perturbation draw.
    t: u64,
    pending_u: Option<Vec<Vec<f64>>>,
}

impl DBbcg {
    /// `set` is the original feasible set; iterates live in its `delta`-shrunk
    /// copy, so `x_init` must be feasible for the shrunk set.
    pub fn new(
        set: DecisionSet,
        mixing: MixingMatrix,
        params: BlockParams,
        delta: f64,
        x_init: &[f64],
        seed: u64,
    ) -> Result<Self, LearnerError> {
        let shrunk = set.shrink(delta)?;
        let core = BlockCore::new(shrunk, mixing, params, x_init)?;
        Ok(Self { core, original_set: set, delta, seed, t: 1, pending_u: None })
    }

    pub fn decisions(&self) -> &[Vec<f64>] {
        &self.core.x
    }

    pub fn z_states(&self) -> &[Vec<f64>] {
        &self.core.z
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn shrunk_set(&self) -> &DecisionSet {
        &self.core.set
    }

    /// Perturbed plays for the current round: x_i + delta * u_i with u_i a
    /// fresh unit vector keyed by (seed, node, round). Every play is feasible
    /// for the original set. Call exactly once per round, then feed the
    /// observed values back through [`Self::observe_values`].
    pub fn round_plays(&mut self) -> Vec<Vec<f64>> {
        assert!(self.pending_u.is_none(), "round_plays called twice without observe_values");
        let dim = self.core.set.dim();
        let us: Vec<Vec<f64>> =
            (0..self.core.n()).map(|i| bandit::sphere_point(dim, self.seed, i as u64, self.t)).collect();
        let plays: Vec<Vec<f64>> = self
            .core
            .x
            .iter()
            .zip(&us)
            .map(|(x, u)| x.iter().zip(u).map(|(xk, uk)| xk + self.delta * uk).collect())
            .collect();
        self.pending_u = Some(us);
        plays
    }

    /// Feeds back the loss values observed at this round's perturbed plays
    /// and returns whether a block boundary was crossed.
    pub fn observe_values(&mut self, values: &[f64]) -> Result<bool, LearnerError> {
        let us = self
            .pending_u
            .take()
            .expect("observe_values called without a preceding round_plays");
        if values.len() != self.core.n() {
            return Err(LearnerError::Shape(format!(
                "{} values for {} nodes",
                values.len(),
                self.core.n()
            )));
        }
        for (i, (&v, u)) in values.iter().zip(&us).enumerate() {
            bandit::add_one_point_estimate(v, self.delta, u, &mut self.core.g_hat[i]);
        }
        self.t += 1;
        Ok(self.core.advance_round()?)
    }

    pub fn cum_comm(&self) -> u64 {
        self.core.cum_comm
    }

    pub fn cum_lmo(&self) -> u64 {
        self.core.cum_lmo
    }

    pub fn block_index(&self) -> usize {
        self.core.block
    }

    pub fn original_set(&self) -> &DecisionSet {
        &self.original_set
    }
}

/// Per-round gossip baseline: one LMO call and one exchange every round.
pub struct DOcg {
    set: DecisionSet,
    mixing: MixingMatrix,
    eta: f64,
    anchor: Vec<f64>,
    x: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    /// 1-based round index; sets the step size 1/sqrt(t).
    t: u64,
    cum_comm: u64,
    cum_lmo: u64,
}

impl DOcg {
    pub fn new(
        set: DecisionSet,
        mixing: MixingMatrix,
        eta: f64,
        x_init: &[f64],
    ) -> Result<Self, LearnerError> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(LearnerError::BadConfig(format!("eta must be positive, got {eta}")));
        }
        if x_init.len() != set.dim() {
            return Err(LearnerError::Shape(format!(
                "initial point has {} entries, set expects {}",
                x_init.len(),
                set.dim()
            )));
        }
        if !set.contains(x_init, 1e-9) {
            return Err(LearnerError::InfeasibleInit);
        }
        let n = mixing.n();
        let dim = set.dim();
        Ok(Self {
            set,
            mixing,
            eta,
            anchor: x_init.to_vec(),
            x: vec![x_init.to_vec(); n],
            z: vec![vec![0.0; dim]; n],
            t: 1,
            cum_comm: 0,
            cum_lmo: 0,
        })
    }

    pub fn decisions(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn z_states(&self) -> &[Vec<f64>] {
        &self.z
    }

    pub fn observe_round(&mut self, losses: &[LossInstance]) -> Result<(), LearnerError> {
        let n = self.mixing.n();
        if losses.len() != n {
            return Err(LearnerError::Shape(format!("{} losses for {n} nodes", losses.len())));
        }
        let dim = self.set.dim();
        let mut grads = vec![vec![0.0; dim]; n];
        for (i, loss) in losses.iter().enumerate() {
            if loss.dim() != dim {
                return Err(LearnerError::Shape(format!(
                    "loss dimension {} does not match set dimension {dim}",
                    loss.dim()
                )));
            }
            loss.add_gradient(&self.x[i], &mut grads[i]);
        }

        // One LMO step per node on F(x) = eta <z, x> + ||x - anchor||^2,
        // with step size 1/sqrt(t) along the segment toward the vertex.
        let s = 1.0 / (self.t as f64).sqrt();
        let mut dir = vec![0.0; dim];
        for i in 0..n {
            for k in 0..dim {
                dir[k] = self.eta * self.z[i][k] + 2.0 * (self.x[i][k] - self.anchor[k]);
            }
            let v = self.set.lmo(&dir)?;
            let xi = &mut self.x[i];
            for k in 0..dim {
                xi[k] += s * (v[k] - xi[k]);
            }
        }

        let mixed = self.mixing.mix(&self.z);
        for i in 0..n {
            let zi = &mut self.z[i];
            zi.copy_from_slice(&mixed[i]);
            for (zk, gk) in zi.iter_mut().zip(&grads[i]) {
                *zk += gk;
            }
        }
        self.t += 1;
        self.cum_comm += 1;
        self.cum_lmo += 1;
        Ok(())
    }

    pub fn cum_comm(&self) -> u64 {
        self.cum_comm
    }

    pub fn cum_lmo(&self) -> u64 {
        self.cum_lmo
    }
}

/// Named parameter schedules: each sets the block length, LMO budget, and
/// regularization weight from the horizon and problem constants, matching the
/// scalings the regret guarantees require.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetKind {
    ConvexFull,
    StronglyConvexFull,
    ConvexBandit,
    StronglyConvexBandit,
    HighProbBandit,
}

impl PresetKind {
    pub fn is_bandit(self) -> bool {
        matches!(self, Self::ConvexBandit | Self::StronglyConvexBandit | Self::HighProbBandit)
    }
}

/// Problem constants feeding a preset. `c_tune` rescales the regularization
/// weight h and `delta_c` rescales the exploration radius; both default to 1.
#[derive(Clone, Copy, Debug)]
pub struct PresetInputs {
    pub horizon: usize,
    pub nodes: usize,
    pub dim: usize,
    pub sigma2: f64,
    /// Gradient-norm bound G.
    pub lipschitz: f64,
    /// Loss-value bound M (bandit presets only).
    pub value_bound: f64,
    pub circumradius: f64,
    pub inradius: f64,
    /// Strong-convexity modulus (strongly convex presets only).
    pub alpha: f64,
    /// Failure probability budget (high-probability preset only).
    pub gamma: f64,
    pub c_tune: f64,
    pub delta_c: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct PresetOutput {
    pub params: BlockParams,
    /// Exploration radius; set for bandit presets only.
    pub delta: Option<f64>,
}

pub fn make_preset(kind: PresetKind, inp: &PresetInputs) -> Result<PresetOutput, LearnerError> {
    if inp.horizon < 4 {
        return Err(LearnerError::BadConfig("horizon must be at least 4".into()));
    }
    if !(0.0..1.0).contains(&inp.sigma2) {
        return Err(LearnerError::BadConfig(format!(
            "sigma2 must lie in [0, 1), got {}",
            inp.sigma2
        )));
    }
    if !(inp.c_tune > 0.0) || !(inp.delta_c > 0.0) {
        return Err(LearnerError::BadConfig("c_tune and delta_c must be positive".into()));
    }
    if !(inp.circumradius > 0.0) {
        return Err(LearnerError::BadConfig("circumradius must be positive".into()));
    }
    let t = inp.horizon as f64;
    let n = inp.nodes as f64;
    let d = inp.dim as f64;
    let gap = (1.0 - inp.sigma2).sqrt();

    let sqrt_block = ((t.sqrt().floor() as usize).max(1), (t.sqrt().floor() as usize).max(1));
    let sc_block = {
        let k = (t.powf(2.0 / 3.0) / t.ln().powf(2.0 / 3.0)).floor() as usize;
        (k.max(1), k.max(1))
    };

    let need_alpha = || -> Result<f64, LearnerError> {
        if inp.alpha > 0.0 {
            Ok(inp.alpha)
        } else {
            Err(LearnerError::BadConfig("strongly convex preset needs alpha > 0".into()))
        }
    };
    let need_g = || -> Result<f64, LearnerError> {
        if inp.lipschitz > 0.0 {
            Ok(inp.lipschitz)
        } else {
            Err(LearnerError::BadConfig("preset needs a positive gradient bound".into()))
        }
    };
    let need_m = || -> Result<f64, LearnerError> {
        if inp.value_bound > 0.0 {
            Ok(inp.value_bound)
        } else {
            Err(LearnerError::BadConfig("bandit preset needs a positive value bound".into()))
        }
    };

    let (k_block, l_iters, h, alpha, delta) = match kind {
        PresetKind::ConvexFull => {
            let (k, l) = sqrt_block;
            let g = need_g()?;
            let h = inp.c_tune * n.powf(0.25) * t.powf(0.75) * g / (gap * inp.circumradius);
            (k, l, h, 0.0, None)
        }
        PresetKind::StronglyConvexFull => {
            let (k, l) = sc_block;
            let a = need_alpha()?;
            let h = inp.c_tune * a * k as f64;
            (k, l, h, a, None)
        }
        PresetKind::ConvexBandit => {
            let (k, l) = sqrt_block;
            let m = need_m()?;
            let delta = inp.delta_c * t.powf(-0.25);
            let h = inp.c_tune * n.powf(0.25) * d * m * t.powf(0.75) / (gap * inp.circumradius);
            (k, l, h, 0.0, Some(delta))
        }
        PresetKind::StronglyConvexBandit => {
            let (k, l) = sc_block;
            let a = need_alpha()?;
            let delta = inp.delta_c * t.powf(-1.0 / 3.0) * t.ln().powf(1.0 / 3.0);
            let h = inp.c_tune * a * k as f64;
            (k, l, h, a, Some(delta))
        }
        PresetKind::HighProbBandit => {
            if !(inp.gamma > 0.0 && inp.gamma < 0.5) {
                return Err(LearnerError::BadConfig(format!(
                    "gamma must lie in (0, 0.5), got {}",
                    inp.gamma
                )));
            }
            let (k, l) = sqrt_block;
            let m = need_m()?;
            let xi = 1.0 + (8.0 * (n * t.sqrt() / inp.gamma).ln()).sqrt();
            let delta = inp.delta_c * t.powf(-0.25);
            let h =
                inp.c_tune * n.powf(0.25) * xi * d * m * t.powf(0.75) / (gap * inp.circumradius);
            (k, l, h, 0.0, Some(delta))
        }
    };

    if let Some(dl) = delta {
        if !(dl > 0.0 && dl < inp.inradius) {
            return Err(LearnerError::BadConfig(format!(
                "exploration radius {dl} must lie in (0, inradius {}); adjust delta_c",
                inp.inradius
            )));
        }
    }
    Ok(PresetOutput { params: BlockParams { k_block, l_iters, h, alpha }, delta })
}

/// Everything a finished run exposes to metrics and CSV writers. Loss rows
/// are indexed `[round * nodes + node]` with 0-based rounds.
pub struct RunTrace {
    pub nodes: usize,
    pub rounds: usize,
    pub dim: usize,
    pub k_block: usize,
    /// Loss actually charged each round (at the perturbed play for bandits).
    pub inst_loss: Vec<f64>,
    /// Bandit runs also record the loss at the unperturbed block decision.
    pub base_loss: Option<Vec<f64>>,
    /// Gossip exchanges completed by the end of each round (same at every node).
    pub cum_comm: Vec<u64>,
    /// LMO calls per node completed by the end of each round.
    pub cum_lmo: Vec<u64>,
    pub avg_loss: Option<AvgLossTrace>,
    pub final_decisions: Vec<Vec<f64>>,
    /// Per-node totals of `inst_loss`.
    pub total_loss: Vec<f64>,
    pub total_base_loss: Option<Vec<f64>>,
    /// Whole-network loss charged at node i's plays: sum over rounds t and
    /// nodes j of node j's round-t loss evaluated at node i's play. Regret is
    /// defined against this total, not against `total_loss`.
    pub total_network_loss: Vec<f64>,
    /// Bandit runs: the same total at the unperturbed block decisions.
    pub total_network_base_loss: Option<Vec<f64>>,
}

/// Running network-average loss, sampled whenever a gossip exchange happens
/// (and at the final round): entry (t, node i) is the average over all rounds
/// q <= t and nodes j of node j's loss at node i's play.
pub struct AvgLossTrace {
    /// 1-based sampled rounds, increasing.
    pub at_rounds: Vec<usize>,
    /// One row per sampled round, `nodes` entries each.
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Sample the running network-average loss at every gossip exchange.
    pub record_avg_loss: bool,
}

struct TraceBuilder {
    nodes: usize,
    dim: usize,
    k_block: usize,
    inst_loss: Vec<f64>,
    base_loss: Option<Vec<f64>>,
    cum_comm: Vec<u64>,
    cum_lmo: Vec<u64>,
    network_loss: Vec<f64>,
    network_base_loss: Option<Vec<f64>>,
    al_acc: Option<Vec<f64>>,
    al_rounds: Vec<usize>,
    al_values: Vec<Vec<f64>>,
}

impl TraceBuilder {
    fn new(nodes: usize, rounds: usize, dim: usize, k_block: usize, opts: &RunOptions, bandit: bool) -> Self {
        Self {
            nodes,
            dim,
            k_block,
            inst_loss: Vec::with_capacity(rounds * nodes),
            base_loss: bandit.then(|| Vec::with_capacity(rounds * nodes)),
            cum_comm: Vec::with_capacity(rounds),
            cum_lmo: Vec::with_capacity(rounds),
            network_loss: vec![0.0; nodes],
            network_base_loss: bandit.then(|| vec![0.0; nodes]),
            al_acc: opts.record_avg_loss.then(|| vec![0.0; nodes]),
            al_rounds: Vec::new(),
            al_values: Vec::new(),
        }
    }

    /// Charges the whole round: `plays` are the decisions losses are paid at
    /// (nodes^2 evaluations feed both the network-loss totals and the
    /// average-loss accumulator).
    fn accumulate_network(&mut self, losses: &[LossInstance], plays: &[Vec<f64>]) {
        for (i, play) in plays.iter().enumerate() {
            let cross: f64 = losses.iter().map(|l| l.value(play)).sum();
            self.network_loss[i] += cross;
            if let Some(acc) = &mut self.al_acc {
                acc[i] += cross;
            }
        }
    }

    /// Bandit runs: the same totals at the unperturbed block decisions.
    fn accumulate_network_base(&mut self, losses: &[LossInstance], decisions: &[Vec<f64>]) {
        let acc = self.network_base_loss.as_mut().expect("bandit trace");
        for (i, dec) in decisions.iter().enumerate() {
            acc[i] += losses.iter().map(|l| l.value(dec)).sum::<f64>();
        }
    }

    fn finish_round(&mut self, t: usize, rounds: usize, comm: u64, lmo: u64, comm_before: u64) {
        self.cum_comm.push(comm);
        self.cum_lmo.push(lmo);
        if let Some(acc) = &self.al_acc {
            if comm > comm_before || t == rounds {
                let scale = 1.0 / (t as f64 * self.nodes as f64);
                self.al_rounds.push(t);
                self.al_values.push(acc.iter().map(|a| a * scale).collect());
            }
        }
    }

    fn build(self, rounds: usize, final_decisions: Vec<Vec<f64>>) -> RunTrace {
        let nodes = self.nodes;
        let mut total_loss = vec![0.0; nodes];
        for (idx, v) in self.inst_loss.iter().enumerate() {
            total_loss[idx % nodes] += v;
        }
        let total_base_loss = self.base_loss.as_ref().map(|b| {
            let mut tot = vec![0.0; nodes];
            for (idx, v) in b.iter().enumerate() {
                tot[idx % nodes] += v;
            }
            tot
        });
        let avg_loss = self
            .al_acc
            .is_some()
            .then(|| AvgLossTrace { at_rounds: self.al_rounds, values: self.al_values });
        RunTrace {
            nodes,
            rounds,
            dim: self.dim,
            k_block: self.k_block,
            inst_loss: self.inst_loss,
            base_loss: self.base_loss,
            cum_comm: self.cum_comm,
            cum_lmo: self.cum_lmo,
            avg_loss,
            final_decisions,
            total_loss,
            total_base_loss,
            total_network_loss: self.network_loss,
            total_network_base_loss: self.network_base_loss,
        }
    }
}

fn check_stream<S: LossStream>(
    stream: &S,
    mixing: &MixingMatrix,
    dim: usize,
) -> Result<(usize, usize), LearnerError> {
    let (rounds, nodes) = (stream.rounds(), stream.nodes());
    if rounds == 0 {
        return Err(LearnerError::BadConfig("stream has no rounds".into()));
    }
    if nodes != mixing.n() {
        return Err(LearnerError::Shape(format!(
            "stream has {nodes} nodes, mixing matrix has {}",
            mixing.n()
        )));
    }
    if stream.dim() != dim {
        return Err(LearnerError::Shape(format!(
            "stream dimension {} does not match set dimension {dim}",
            stream.dim()
        )));
    }
    Ok((rounds, nodes))
}

/// Runs the full-information block learner over the whole stream.
pub fn run_dbocg<S: LossStream>(
    set: &DecisionSet,
    mixing: &MixingMatrix,
    params: BlockParams,
    x_init: &[f64],
    stream: &S,
    opts: &RunOptions,
) -> Result<RunTrace, LearnerError> {
    let (rounds, nodes) = check_stream(stream, mixing, set.dim())?;
    let mut engine = DBocg::new(set.clone(), mixing.clone(), params, x_init)?;
    let mut tb = TraceBuilder::new(nodes, rounds, set.dim(), params.k_block, opts, false);
    let mut losses: Vec<LossInstance> = Vec::with_capacity(nodes);
    for t in 1..=rounds {
        losses.clear();
        losses.extend((0..nodes).map(|i| stream.loss(t - 1, i)));
        for (i, loss) in losses.iter().enumerate() {
            tb.inst_loss.push(loss.value(&engine.decisions()[i]));
        }
        tb.accumulate_network(&losses, engine.decisions());
        let comm_before = engine.cum_comm();
        engine.observe_round(&losses)?;
        tb.finish_round(t, rounds, engine.cum_comm(), engine.cum_lmo(), comm_before);
    }
    Ok(tb.build(rounds, engine.decisions().to_vec()))
}

/// Runs the bandit block learner; the learner itself only ever sees loss
/// values at the perturbed plays it announces (block decisions enter the
/// trace for reporting only).
pub fn run_dbbcg<S: LossStream>(
    set: &DecisionSet,
    mixing: &MixingMatrix,
    params: BlockParams,
    delta: f64,
    x_init: &[f64],
    seed: u64,
    stream: &S,
    opts: &RunOptions,
) -> Result<RunTrace, LearnerError> {
    let (rounds, nodes) = check_stream(stream, mixing, set.dim())?;
    let mut engine = DBbcg::new(set.clone(), mixing.clone(), params, delta, x_init, seed)?;
    let mut tb = TraceBuilder::new(nodes, rounds, set.dim(), params.k_block, opts, true);
    let mut losses: Vec<LossInstance> = Vec::with_capacity(nodes);
    let mut values = vec![0.0; nodes];
    for t in 1..=rounds {
        losses.clear();
        losses.extend((0..nodes).map(|i| stream.loss(t - 1, i)));
        let plays = engine.round_plays();
        for (i, loss) in losses.iter().enumerate() {
            debug_assert!(engine.original_set().contains(&plays[i], 1e-9));
            values[i] = loss.value(&plays[i]);
            tb.inst_loss.push(values[i]);
            tb.base_loss.as_mut().unwrap().push(loss.value(&engine.decisions()[i]));
        }
        tb.accumulate_network(&losses, &plays);
        tb.accumulate_network_base(&losses, engine.decisions());
        let comm_before = engine.cum_comm();
        engine.observe_values(&values)?;
        tb.finish_round(t, rounds, engine.cum_comm(), engine.cum_lmo(), comm_before);
    }
    Ok(tb.build(rounds, engine.decisions().to_vec()))
}

/// Runs the per-round gossip baseline.
pub fn run_docg<S: LossStream>(
    set: &DecisionSet,
    mixing: &MixingMatrix,
    eta: f64,
    x_init: &[f64],
    stream: &S,
    opts: &RunOptions,
) -> Result<RunTrace, LearnerError> {
    let (rounds, nodes) = check_stream(stream, mixing, set.dim())?;
    let mut engine = DOcg::new(set.clone(), mixing.clone(), eta, x_init)?;
    let mut tb = TraceBuilder::new(nodes, rounds, set.dim(), 1, opts, false);
    let mut losses: Vec<LossInstance> = Vec::with_capacity(nodes);
    for t in 1..=rounds {
        losses.clear();
        losses.extend((0..nodes).map(|i| stream.loss(t - 1, i)));
        for (i, loss) in losses.iter().enumerate() {
            tb.inst_loss.push(loss.value(&engine.decisions()[i]));
        }
        tb.accumulate_network(&losses, engine.decisions());
        let comm_before = engine.cum_comm();
        engine.observe_round(&losses)?;
        tb.finish_round(t, rounds, engine.cum_comm(), engine.cum_lmo(), comm_before);
    }
    Ok(tb.build(rounds, engine.decisions().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::MaterializedStream;
    use crate::network::{MixingMatrix, Topology};
    use std::sync::Arc;

    fn linear(w: &[f64]) -> LossInstance {
        LossInstance::Linear { w: Arc::from(w.to_vec()) }
    }

    fn cube_setup(n: usize) -> (DecisionSet, MixingMatrix) {
        let set = DecisionSet::hypercube(1.0, 2).unwrap();
        let mixing = if n == 1 {
            MixingMatrix::single()
        } else {
            MixingMatrix::from_topology(Topology::Complete, n).unwrap()
        };
        (set, mixing)
    }

    #[test]
    fn constructors_reject_bad_configs() {
        let (set, mixing) = cube_setup(2);
        let good = BlockParams { k_block: 2, l_iters: 2, h: 1.0, alpha: 0.0 };
        assert!(matches!(
            DBocg::new(set.clone(), mixing.clone(), BlockParams { k_block: 0, ..good }, &[0.0, 0.0]),
            Err(LearnerError::BadConfig(_))
        ));
        assert!(matches!(
            DBocg::new(set.clone(), mixing.clone(), BlockParams { h: 0.0, ..good }, &[0.0, 0.0]),
            Err(LearnerError::BadConfig(_))
        ));
        assert!(matches!(
            DBocg::new(set.clone(), mixing.clone(), good, &[2.0, 0.0]),
            Err(LearnerError::InfeasibleInit)
        ));
        assert!(matches!(
            DBocg::new(set.clone(), mixing.clone(), good, &[0.0]),
            Err(LearnerError::Shape(_))
        ));
        assert!(matches!(
            DOcg::new(set, mixing, 0.0, &[0.0, 0.0]),
            Err(LearnerError::BadConfig(_))
        ));
    }

    #[test]
    fn counters_follow_block_boundaries() {
        let (set, mixing) = cube_setup(2);
        let params = BlockParams { k_block: 2, l_iters: 3, h: 1.0, alpha: 0.0 };
        let mut engine = DBocg::new(set, mixing, params, &[0.0, 0.0]).unwrap();
        let losses = vec![linear(&[1.0, 0.0]), linear(&[0.0, 1.0])];
        let mut boundaries = Vec::new();
        for _ in 0..5 {
            boundaries.push(engine.observe_round(&losses).unwrap());
        }
        assert_eq!(boundaries, vec![false, true, false, true, false]);
        assert_eq!(engine.cum_comm(), 2);
        assert_eq!(engine.cum_lmo(), 6);
        assert_eq!(engine.block_index(), 3);
    }

    #[test]
    fn decision_is_constant_within_a_block() {
        let (set, mixing) = cube_setup(2);
        let params = BlockParams { k_block: 3, l_iters: 2, h: 0.5, alpha: 0.0 };
        let mut engine = DBocg::new(set, mixing, params, &[0.5, -0.5]).unwrap();
        let losses = vec![linear(&[1.0, 2.0]), linear(&[-1.0, 1.0])];
        let before = engine.decisions().to_vec();
        engine.observe_round(&losses).unwrap();
        engine.observe_round(&losses).unwrap();
        assert_eq!(engine.decisions(), &before[..]);
        // The first block's surrogate has z = 0 (round-1 gradients only
        // enter z for block 2), so its minimizer is the start point and
        // the decision cannot move until the second block closes.
        engine.observe_round(&losses).unwrap();
        assert_eq!(engine.decisions(), &before[..]);
        engine.observe_round(&losses).unwrap();
        engine.observe_round(&losses).unwrap();
        assert_eq!(engine.decisions(), &before[..]);
        engine.observe_round(&losses).unwrap();
        assert_ne!(engine.decisions(), &before[..]);
    }

    #[test]
    fn docg_first_step_jumps_to_vertex() {
        // At t = 1 the step size is 1 and z = 0, so the LMO direction is
        // 2(x - anchor) = 0, which resolves through the canonical zero-
        // direction rule to e0 and, by the cube's sign convention (zero
        // coordinates count as positive), to the vertex (-1, -1).
        let (set, mixing) = cube_setup(1);
        let mut engine = DOcg::new(set, mixing, 0.1, &[0.0, 0.0]).unwrap();
        engine.observe_round(&[linear(&[3.0, 4.0])]).unwrap();
        assert_eq!(engine.decisions()[0], vec![-1.0, -1.0]);
        assert_eq!(engine.cum_comm(), 1);
        assert_eq!(engine.cum_lmo(), 1);
        // z now holds the gradient (3, 4).
        assert_eq!(engine.z_states()[0], vec![3.0, 4.0]);
    }

    #[test]
    fn bandit_plays_stay_inside_original_set() {
        let set = DecisionSet::l1_ball(10.0, 4).unwrap();
        let mixing = MixingMatrix::from_topology(Topology::Cycle, 3).unwrap();
        let params = BlockParams { k_block: 2, l_iters: 2, h: 5.0, alpha: 0.0 };
        let x0 = vec![0.5; 4]; // well inside the shrunk l1 ball of radius 8
        let mut engine = DBbcg::new(set, mixing, params, 1.0, &x0, 99).unwrap();
        for _ in 0..8 {
            let plays = engine.round_plays();
            for (i, p) in plays.iter().enumerate() {
                assert!(engine.original_set().contains(p, 1e-12), "node {i} left the set: {p:?}");
                assert!(
                    engine.shrunk_set().contains(&engine.decisions()[i], 1e-9),
                    "decision left the shrunk set"
                );
            }
            let values: Vec<f64> = plays.iter().map(|p| p.iter().sum::<f64>()).collect();
            engine.observe_values(&values).unwrap();
        }
        assert_eq!(engine.cum_comm(), 4);
    }

    #[test]
    fn preset_block_sizes_match_worked_examples() {
        let base = PresetInputs {
            horizon: 10_000,
            nodes: 9,
            dim: 4,
            sigma2: 0.125,
            lipschitz: 1.0,
            value_bound: 1.0,
            circumradius: 2.0,
            inradius: 1.0,
            alpha: 0.2,
            gamma: 0.1,
            c_tune: 1.0,
            delta_c: 0.1,
        };
        let cf = make_preset(PresetKind::ConvexFull, &base).unwrap();
        assert_eq!((cf.params.k_block, cf.params.l_iters), (100, 100));
        assert!(cf.delta.is_none());
        assert_eq!(cf.params.alpha, 0.0);

        let sc = make_preset(PresetKind::StronglyConvexFull, &base).unwrap();
        assert_eq!(sc.params.k_block, 105);
        assert!((sc.params.h - 0.2 * 105.0).abs() < 1e-12);

        let hp = make_preset(PresetKind::HighProbBandit, &base).unwrap();
        // 1 + sqrt(8 ln(9 * 100 / 0.1)) = 9.5347...
        let cf_h = make_preset(PresetKind::ConvexBandit, &base).unwrap().params.h;
        let xi = hp.params.h / cf_h;
        assert!((xi - 9.5347).abs() < 1e-3, "xi came out as {xi}");
    }

    #[test]
    fn preset_rejects_out_of_range_inputs() {
        let mut inp = PresetInputs {
            horizon: 10_000,
            nodes: 9,
            dim: 4,
            sigma2: 0.125,
            lipschitz: 1.0,
            value_bound: 1.0,
            circumradius: 2.0,
            inradius: 1.0,
            alpha: 0.0,
            gamma: 0.1,
            c_tune: 1.0,
            delta_c: 0.1,
        };
        assert!(make_preset(PresetKind::StronglyConvexFull, &inp).is_err());
        inp.alpha = 1.0;
        inp.sigma2 = 1.0;
        assert!(make_preset(PresetKind::ConvexFull, &inp).is_err());
        inp.sigma2 = 0.5;
        inp.horizon = 3;
        assert!(make_preset(PresetKind::ConvexFull, &inp).is_err());
        inp.horizon = 10_000;
        inp.delta_c = 100.0; // exploration radius larger than the inradius
        assert!(make_preset(PresetKind::ConvexBandit, &inp).is_err());
        inp.delta_c = 0.1;
        inp.gamma = 0.7;
        assert!(make_preset(PresetKind::HighProbBandit, &inp).is_err());
    }

    #[test]
    fn driver_counts_partial_final_block() {
        let (set, mixing) = cube_setup(2);
        let params = BlockParams { k_block: 4, l_iters: 2, h: 1.0, alpha: 0.0 };
        let per_node: Vec<Vec<LossInstance>> = (0..2)
            .map(|_| (0..10).map(|_| linear(&[1.0, -1.0])).collect())
            .collect();
        let stream = MaterializedStream::new(per_node);
        let trace =
            run_dbocg(&set, &mixing, params, &[0.0, 0.0], &stream, &RunOptions::default()).unwrap();
        assert_eq!(trace.rounds, 10);
        // Blocks close after rounds 4 and 8; rounds 9 and 10 stay in an
        // unfinished block.
        assert_eq!(trace.cum_comm, vec![0, 0, 0, 1, 1, 1, 1, 2, 2, 2]);
        assert_eq!(trace.cum_lmo.last(), Some(&4));
        assert_eq!(trace.inst_loss.len(), 20);
        let by_hand: f64 = trace.inst_loss.iter().sum();
        assert!((trace.total_loss.iter().sum::<f64>() - by_hand).abs() < 1e-12);
    }
}
