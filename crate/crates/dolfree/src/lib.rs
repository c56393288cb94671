//! Projection-free distributed online convex optimization over gossip networks.
//!
//! A network of nodes faces a stream of convex losses; each node may only talk
//! to its graph neighbors through a doubly-stochastic mixing step. The learners
//! here avoid projections entirely: every update is built from linear
//! minimization oracles (LMOs) over the feasible set.
//!
//! - [`learners::DBocg`] groups rounds into blocks, gossips once per block, and
//!   computes the next block's decision with a short conditional-gradient run
//!   on a quadratic surrogate.
//! - [`learners::DBbcg`] is its bandit variant: it only observes loss values,
//!   plays randomly perturbed points, and feeds one-point gradient estimates
//!   into the same block machinery over a shrunk feasible set.
//! - [`learners::DOcg`] is the per-round baseline that gossips every round.
//!
//! [`adversary`] generates the loss sequences that force any learner on a
//! limited communication schedule to pay a matching regret floor, [`metrics`]
//! scores runs against an offline Frank-Wolfe comparator, and [`harness`]
//! wires everything into a reproducible simulation CLI.

pub mod adversary;
pub mod bandit;
pub mod cg;
pub mod data;
pub mod geometry;
pub mod harness;
pub mod learners;
pub mod losses;
pub mod metrics;
pub mod network;
pub mod rng;

pub(crate) mod vecops;
