//! Adversarial and synthetic loss streams.
//!
//! The two lower-bound adversaries pin the price of limited communication:
//! one node sees only zero losses while the others share a piecewise-constant
//! loss whose sign pattern is redrawn after each of the `budget` allowed
//! exchanges, so no learner can beat an expected-regret floor that shrinks
//! only like 1/sqrt(budget + 1). The synthetic streams are the well-behaved
//! counterparts used by convergence checks and the CLI.

use crate::geometry::DecisionSet;
use crate::losses::{LossInstance, LossStream};
use crate::rng;
use rand::Rng;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum AdversaryError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

/// Partition of `horizon` rounds into `budget + 1` intervals with uniformly
/// random distinct interior cut points. Random placement keeps the expected
/// squared interval lengths proportional across budgets, which equal spacing
/// does not.
#[derive(Clone, Debug)]
pub struct CommSchedule {
    /// 0-based first round of each interval; starts[0] == 0.
    starts: Vec<usize>,
    horizon: usize,
}

impl CommSchedule {
    pub fn random_uniform(horizon: usize, budget: usize, seed: u64) -> Result<Self, AdversaryError> {
        if horizon == 0 {
            return Err(AdversaryError::BadConfig("horizon must be positive".into()));
        }
        if budget + 1 > horizon {
            return Err(AdversaryError::BadConfig(format!(
                "budget {budget} needs at least {} rounds, horizon is {horizon}",
                budget + 1
            )));
        }
        let mut r = rng::keyed(rng::tag::SCHEDULE, seed, budget as u64, 0);
        let mut cuts = std::collections::BTreeSet::new();
        while cuts.len() < budget {
            cuts.insert(r.random_range(1..horizon));
        }
        let mut starts = Vec::with_capacity(budget + 1);
        starts.push(0);
        starts.extend(cuts);
        Ok(Self { starts, horizon })
    }

    pub fn intervals(&self) -> usize {
        self.starts.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Interval index of a 0-based round.
    pub fn interval_of(&self, t: usize) -> usize {
        debug_assert!(t < self.horizon);
        self.starts.partition_point(|&s| s <= t) - 1
    }

    pub fn lengths(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.starts.len());
        for i in 0..self.starts.len() {
            let end = self.starts.get(i + 1).copied().unwrap_or(self.horizon);
            out.push(end - self.starts[i]);
        }
        out
    }
}

fn interval_signs(
    intervals: usize,
    dim: usize,
    magnitude: f64,
    seed: u64,
) -> Vec<Arc<[f64]>> {
    (0..intervals)
        .map(|k| {
            let mut r = rng::keyed(rng::tag::ADVERSARY, seed, k as u64, 0);
            let w: Vec<f64> = (0..dim)
                .map(|_| if r.random::<bool>() { magnitude } else { -magnitude })
                .collect();
            Arc::from(w)
        })
        .collect()
}

/// Lower-bound stream with linear losses. Node 0 always sees the zero loss;
/// every other node sees the same `+/- g/sqrt(dim)` coordinate pattern,
/// redrawn at each schedule cut. Runs over the cube of circumradius `big_r`.
pub struct ConvexAdversary {
    nodes: usize,
    dim: usize,
    g: f64,
    big_r: f64,
    schedule: CommSchedule,
    signs: Vec<Arc<[f64]>>,
    zero: Arc<[f64]>,
}

impl ConvexAdversary {
    pub fn new(
        nodes: usize,
        dim: usize,
        g: f64,
        big_r: f64,
        horizon: usize,
        budget: usize,
        seed: u64,
    ) -> Result<Self, AdversaryError> {
        if nodes < 2 {
            return Err(AdversaryError::BadConfig("need at least 2 nodes".into()));
        }
        if dim == 0 || !(g > 0.0) || !(big_r > 0.0) {
            return Err(AdversaryError::BadConfig("dim, g, and big_r must be positive".into()));
        }
        let schedule = CommSchedule::random_uniform(horizon, budget, seed)?;
        let signs = interval_signs(schedule.intervals(), dim, g / (dim as f64).sqrt(), seed);
        Ok(Self { nodes, dim, g, big_r, schedule, signs, zero: Arc::from(vec![0.0; dim]) })
    }

    /// Cube of circumradius `big_r` the bound is stated over.
    pub fn set(&self) -> DecisionSet {
        DecisionSet::hypercube(self.big_r / (self.dim as f64).sqrt(), self.dim).unwrap()
    }

    pub fn schedule(&self) -> &CommSchedule {
        &self.schedule
    }

    /// Expected-regret floor (n-1) R G T / sqrt(2 (budget + 1)) that any
    /// learner restricted to the schedule's exchanges must pay.
    pub fn regret_lower_bound(&self) -> f64 {
        let t = self.schedule.horizon() as f64;
        let c1 = self.schedule.intervals() as f64;
        (self.nodes as f64 - 1.0) * self.big_r * self.g * t / (2.0 * c1).sqrt()
    }
}

impl LossStream for ConvexAdversary {
    fn rounds(&self) -> usize {
        self.schedule.horizon()
    }

    fn nodes(&self) -> usize {
        self.nodes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, t: usize, node: usize) -> LossInstance {
        let w = if node == 0 {
            self.zero.clone()
        } else {
            self.signs[self.schedule.interval_of(t)].clone()
        };
        LossInstance::Linear { w }
    }
}

/// Strongly convex lower-bound stream: every loss carries the same quadratic
/// (alpha/2)||x||^2, node 0 nothing more, the others a shared linear part
/// with `+/- alpha big_r / sqrt(dim)` coordinates redrawn per interval. The
/// total-loss minimizer stays strictly inside the cube, so the floor is not
/// an artifact of the boundary.
pub struct StronglyConvexAdversary {
    nodes: usize,
    dim: usize,
    alpha: f64,
    big_r: f64,
    schedule: CommSchedule,
    signs: Vec<Arc<[f64]>>,
    zero: Arc<[f64]>,
}

impl StronglyConvexAdversary {
    pub fn new(
        nodes: usize,
        dim: usize,
        alpha: f64,
        big_r: f64,
        horizon: usize,
        budget: usize,
        seed: u64,
    ) -> Result<Self, AdversaryError> {
        if nodes < 2 {
            return Err(AdversaryError::BadConfig("need at least 2 nodes".into()));
        }
        if dim == 0 || !(alpha > 0.0) || !(big_r > 0.0) {
            return Err(AdversaryError::BadConfig("dim, alpha, and big_r must be positive".into()));
        }
        let schedule = CommSchedule::random_uniform(horizon, budget, seed)?;
        let magnitude = alpha * big_r / (dim as f64).sqrt();
        let signs = interval_signs(schedule.intervals(), dim, magnitude, seed);
        Ok(Self { nodes, dim, alpha, big_r, schedule, signs, zero: Arc::from(vec![0.0; dim]) })
    }

    pub fn set(&self) -> DecisionSet {
        DecisionSet::hypercube(self.big_r / (self.dim as f64).sqrt(), self.dim).unwrap()
    }

    pub fn schedule(&self) -> &CommSchedule {
        &self.schedule
    }

    /// Expected-regret floor alpha (n-1)^2 R^2 T / (2 n (budget + 1)).
    pub fn regret_lower_bound(&self) -> f64 {
        let t = self.schedule.horizon() as f64;
        let n = self.nodes as f64;
        let c1 = self.schedule.intervals() as f64;
        self.alpha * (n - 1.0) * (n - 1.0) * self.big_r * self.big_r * t / (2.0 * n * c1)
    }
}

impl LossStream for StronglyConvexAdversary {
    fn rounds(&self) -> usize {
        self.schedule.horizon()
    }

    fn nodes(&self) -> usize {
        self.nodes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, t: usize, node: usize) -> LossInstance {
        let w = if node == 0 {
            self.zero.clone()
        } else {
            self.signs[self.schedule.interval_of(t)].clone()
        };
        LossInstance::LinearPlusQuad { w, alpha: self.alpha }
    }
}

/// I.i.d. sign-pattern linear losses, independent across rounds and nodes:
/// the generic convex test stream.
pub struct SyntheticConvexStream {
    pub nodes: usize,
    pub dim: usize,
    pub horizon: usize,
    pub g: f64,
    pub seed: u64,
}

impl LossStream for SyntheticConvexStream {
    fn rounds(&self) -> usize {
        self.horizon
    }

    fn nodes(&self) -> usize {
        self.nodes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, t: usize, node: usize) -> LossInstance {
        let mut r = rng::keyed(rng::tag::STREAM, self.seed, node as u64, t as u64);
        let m = self.g / (self.dim as f64).sqrt();
        let w: Vec<f64> =
            (0..self.dim).map(|_| if r.random::<bool>() { m } else { -m }).collect();
        LossInstance::Linear { w: Arc::from(w) }
    }
}

/// Strongly convex test stream: (alpha/2)||x||^2 plus a linear part whose
/// coordinate signs are biased toward an alternating +,-,+,- pattern, so the
/// cumulative minimizer is a definite interior point rather than the origin.
/// Regret comparisons on this stream measure tracking, not noise.
pub struct SyntheticScStream {
    pub nodes: usize,
    pub dim: usize,
    pub horizon: usize,
    pub g: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl SyntheticScStream {
    /// P(coordinate j is +1) for the biased draw.
    fn p_plus(j: usize) -> f64 {
        if j % 2 == 0 {
            0.75
        } else {
            0.25
        }
    }
}

impl LossStream for SyntheticScStream {
    fn rounds(&self) -> usize {
        self.horizon
    }

    fn nodes(&self) -> usize {
        self.nodes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, t: usize, node: usize) -> LossInstance {
        let mut r = rng::keyed(rng::tag::STREAM, self.seed, node as u64, t as u64);
        let m = self.g / (self.dim as f64).sqrt();
        let w: Vec<f64> = (0..self.dim)
            .map(|j| if r.random::<f64>() < Self::p_plus(j) { m } else { -m })
            .collect();
        LossInstance::LinearPlusQuad { w: Arc::from(w), alpha: self.alpha }
    }
}

/// Play sequence of the one-step-lookback baseline for one node: each round
/// it calls the LMO on the gradient of its previous round's loss at its
/// previous play (first play: the set's origin). Against a piecewise-constant
/// adversary this strategy is wrong only on the first round of each interval.
pub fn greedy_local_plays<S: LossStream>(
    stream: &S,
    set: &DecisionSet,
    node: usize,
) -> Result<Vec<Vec<f64>>, crate::geometry::GeometryError> {
    let mut plays = Vec::with_capacity(stream.rounds());
    let mut current = set.origin();
    for t in 0..stream.rounds() {
        plays.push(current.clone());
        let grad = stream.loss(t, node).gradient(&current);
        current = set.lmo(&grad)?;
    }
    Ok(plays)
}
