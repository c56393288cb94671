//! Per-round loss functions exposed to learners through value and gradient
//! (or value-only, for bandit feedback).
//!
//! Sparse examples are reference-counted index/value pairs with 0-based
//! indices, so a dataset shared across nodes and repeats costs one allocation
//! per example.

use crate::geometry::DecisionSet;
use crate::rng;
use crate::vecops::{dot, norm, norm_sq};
use std::sync::Arc;

/// Sorted-by-construction (index, value) pairs, 0-based.
pub type SparseVec = Arc<[(u32, f64)]>;

pub fn sparse_dot(e: &[(u32, f64)], x: &[f64]) -> f64 {
    e.iter().map(|&(i, v)| v * x[i as usize]).sum()
}

pub fn sparse_axpy(scale: f64, e: &[(u32, f64)], out: &mut [f64]) {
    for &(i, v) in e {
        out[i as usize] += scale * v;
    }
}

#[derive(Clone, Debug)]
pub enum LossInstance {
    /// Softmax cross-entropy on scores s = X^T e for a row-major
    /// `features x classes` decision matrix: log-sum-exp(s) - s_label.
    MulticlassLogistic { example: SparseVec, label: usize, classes: usize, features: usize },
    /// max(0, 1 - label * <e, x>) + lambda * ||x||^2 with label in {-1, +1};
    /// strongly convex with modulus 2 * lambda.
    HingeL2 { example: SparseVec, label: f64, lambda: f64, dim: usize },
    /// <w, x>.
    Linear { w: Arc<[f64]> },
    /// <w, x> + (alpha / 2) * ||x||^2.
    LinearPlusQuad { w: Arc<[f64]>, alpha: f64 },
}

impl LossInstance {
    pub fn dim(&self) -> usize {
        match self {
            Self::MulticlassLogistic { classes, features, .. } => features * classes,
            Self::HingeL2 { dim, .. } => *dim,
            Self::Linear { w } => w.len(),
            Self::LinearPlusQuad { w, .. } => w.len(),
        }
    }

    /// Strong convexity modulus (0 for the merely convex cases).
    pub fn alpha(&self) -> f64 {
        match self {
            Self::HingeL2 { lambda, .. } => 2.0 * lambda,
            Self::LinearPlusQuad { alpha, .. } => *alpha,
            _ => 0.0,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            Self::MulticlassLogistic { example, label, classes, .. } => {
                let scores = class_scores(example, x, *classes);
                log_sum_exp(&scores) - scores[*label]
            }
            Self::HingeL2 { example, label, lambda, .. } => {
                let margin = 1.0 - label * sparse_dot(example, x);
                margin.max(0.0) + lambda * norm_sq(x)
            }
            Self::Linear { w } => dot(w, x),
            Self::LinearPlusQuad { w, alpha } => dot(w, x) + 0.5 * alpha * norm_sq(x),
        }
    }

    /// Adds a (sub)gradient at x into `out`; accumulation is what the block
    /// learners need when summing a block's gradients in place.
    pub fn add_gradient(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        match self {
            Self::MulticlassLogistic { example, label, classes, .. } => {
                let mut p = class_scores(example, x, *classes);
                softmax_in_place(&mut p);
                p[*label] -= 1.0;
                // d/dX[f, l] = e_f * (p_l - [l == label]); touch only the
                // example's active feature rows.
                for &(f, v) in example.iter() {
                    let row = f as usize * classes;
                    for (l, pl) in p.iter().enumerate() {
                        out[row + l] += v * pl;
                    }
                }
            }
            Self::HingeL2 { example, label, lambda, .. } => {
                // The hinge kink at margin 0 takes the flat branch's
                // subgradient, so only a strictly positive margin contributes.
                if 1.0 - label * sparse_dot(example, x) > 0.0 {
                    sparse_axpy(-label, example, out);
                }
                let two_l = 2.0 * lambda;
                for (o, xi) in out.iter_mut().zip(x) {
                    *o += two_l * xi;
                }
            }
            Self::Linear { w } => {
                for (o, wi) in out.iter_mut().zip(w.iter()) {
                    *o += wi;
                }
            }
            Self::LinearPlusQuad { w, alpha } => {
                for ((o, wi), xi) in out.iter_mut().zip(w.iter()).zip(x) {
                    *o += wi + alpha * xi;
                }
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.add_gradient(x, &mut out);
        out
    }
}

fn class_scores(example: &[(u32, f64)], x: &[f64], classes: usize) -> Vec<f64> {
    let mut s = vec![0.0; classes];
    for &(f, v) in example {
        let row = f as usize * classes;
        for (l, sl) in s.iter_mut().enumerate() {
            *sl += v * x[row + l];
        }
    }
    s
}

fn log_sum_exp(s: &[f64]) -> f64 {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax_in_place(s: &mut [f64]) {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in s.iter_mut() {
        *v = (*v - m).exp();
        total += *v;
    }
    for v in s.iter_mut() {
        *v /= total;
    }
}

/// A full loss assignment: one instance per (round, node) cell. Rounds and
/// nodes are 0-based here; the CSV layer is where 1-based round numbering
/// appears. Implementations must be pure so a second pass (regret oracles,
/// comparator construction) sees identical losses.
pub trait LossStream: Sync {
    fn rounds(&self) -> usize;
    fn nodes(&self) -> usize;
    fn dim(&self) -> usize;
    fn loss(&self, t: usize, node: usize) -> LossInstance;
}

/// Stream backed by pre-built instances, indexed `[node][round]`.
pub struct MaterializedStream {
    per_node: Vec<Vec<LossInstance>>,
    dim: usize,
}

impl MaterializedStream {
    pub fn new(per_node: Vec<Vec<LossInstance>>) -> Self {
        assert!(!per_node.is_empty() && !per_node[0].is_empty(), "need at least one loss");
        let rounds = per_node[0].len();
        let dim = per_node[0][0].dim();
        for node in &per_node {
            assert_eq!(node.len(), rounds, "nodes must share a horizon");
            for l in node {
                assert_eq!(l.dim(), dim, "losses must share a dimension");
            }
        }
        Self { per_node, dim }
    }
}

impl LossStream for MaterializedStream {
    fn rounds(&self) -> usize {
        self.per_node[0].len()
    }

    fn nodes(&self) -> usize {
        self.per_node.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, t: usize, node: usize) -> LossInstance {
        self.per_node[node][t].clone()
    }
}

/// Empirical gradient-norm bound: the max over random set members and the
/// given losses, padded by 20%. Deterministic in `seed`.
pub fn estimate_lipschitz(
    losses: &[LossInstance],
    set: &DecisionSet,
    points: usize,
    seed: u64,
) -> f64 {
    let mut r = rng::keyed(rng::tag::MEMBER, seed, 0, 0);
    let mut best = 0.0f64;
    let mut grad = vec![0.0; set.dim()];
    for _ in 0..points {
        let x = set.random_member(&mut r);
        for loss in losses {
            grad.iter_mut().for_each(|g| *g = 0.0);
            loss.add_gradient(&x, &mut grad);
            best = best.max(norm(&grad));
        }
    }
    best * 1.2
}

/// Empirical bound on |f| over the set, padded by 20%. Deterministic in `seed`.
pub fn estimate_value_bound(
    losses: &[LossInstance],
    set: &DecisionSet,
    points: usize,
    seed: u64,
) -> f64 {
    let mut r = rng::keyed(rng::tag::MEMBER, seed, 0, 1);
    let mut best = 0.0f64;
    for _ in 0..points {
        let x = set.random_member(&mut r);
        for loss in losses {
            best = best.max(loss.value(&x).abs());
        }
    }
    best * 1.2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(pairs: &[(u32, f64)]) -> SparseVec {
        pairs.to_vec().into()
    }

    #[test]
    fn hinge_value_and_gradient_hand_case() {
        let loss = LossInstance::HingeL2 {
            example: sv(&[(0, 1.0), (2, 2.0)]),
            label: 1.0,
            lambda: 0.1,
            dim: 3,
        };
        let x = [0.5, 0.0, 0.0];
        // margin = 1 - 0.5 = 0.5; value = 0.5 + 0.1 * 0.25.
        assert!((loss.value(&x) - 0.525).abs() < 1e-15);
        let g = loss.gradient(&x);
        assert!((g[0] - (-1.0 + 0.1)).abs() < 1e-15);
        assert!(g[1].abs() < 1e-15);
        assert!((g[2] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn hinge_flat_branch_keeps_only_regularizer() {
        let loss =
            LossInstance::HingeL2 { example: sv(&[(0, 1.0)]), label: 1.0, lambda: 0.1, dim: 2 };
        let x = [2.0, 1.0]; // margin = -1 < 0
        assert!((loss.value(&x) - 0.5).abs() < 1e-15);
        let g = loss.gradient(&x);
        assert!((g[0] - 0.4).abs() < 1e-15 && (g[1] - 0.2).abs() < 1e-15);
        // Exactly at the kink the flat branch wins.
        let at_kink = [1.0, 0.0];
        let gk = loss.gradient(&at_kink);
        assert!((gk[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn multiclass_value_at_zero_is_log_class_count() {
        for classes in [2usize, 5, 20] {
            let loss = LossInstance::MulticlassLogistic {
                example: sv(&[(0, 1.0), (3, -2.0)]),
                label: 1,
                classes,
                features: 4,
            };
            let x = vec![0.0; 4 * classes];
            assert!((loss.value(&x) - (classes as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let cases = vec![
            LossInstance::MulticlassLogistic {
                example: sv(&[(0, 0.7), (2, -1.3)]),
                label: 2,
                classes: 3,
                features: 3,
            },
            LossInstance::HingeL2 {
                example: sv(&[(1, 1.5)]),
                label: -1.0,
                lambda: 0.1,
                dim: 9,
            },
            LossInstance::LinearPlusQuad { w: vec![0.3; 9].into(), alpha: 0.7 },
        ];
        for loss in cases {
            let d = loss.dim();
            let x: Vec<f64> = (0..d).map(|i| 0.05 * (i as f64) - 0.2).collect();
            let g = loss.gradient(&x);
            let eps = 1e-6;
            for i in 0..d {
                let mut hi = x.clone();
                let mut lo = x.clone();
                hi[i] += eps;
                lo[i] -= eps;
                let fd = (loss.value(&hi) - loss.value(&lo)) / (2.0 * eps);
                assert!((g[i] - fd).abs() < 1e-5, "coord {i}: {} vs {}", g[i], fd);
            }
        }
    }

    #[test]
    fn strong_convexity_moduli() {
        let hinge =
            LossInstance::HingeL2 { example: sv(&[(0, 1.0)]), label: 1.0, lambda: 0.1, dim: 2 };
        assert_eq!(hinge.alpha(), 0.2);
        let lin = LossInstance::Linear { w: vec![1.0, 2.0].into() };
        assert_eq!(lin.alpha(), 0.0);
        let quad = LossInstance::LinearPlusQuad { w: vec![0.0; 2].into(), alpha: 1.5 };
        assert_eq!(quad.alpha(), 1.5);
    }

    #[test]
    fn empirical_caps_dominate_samples() {
        let set = DecisionSet::hypercube(1.0, 4).unwrap();
        let losses = vec![LossInstance::LinearPlusQuad { w: vec![1.0; 4].into(), alpha: 2.0 }];
        let g = estimate_lipschitz(&losses, &set, 64, 7);
        let m = estimate_value_bound(&losses, &set, 64, 7);
        // ||grad|| <= ||w|| + 2 ||x|| <= 2 + 4 = 6; |f| <= 2 + 4 = 6.
        assert!(g <= 6.0 * 1.2 + 1e-12 && g >= 2.0);
        assert!(m <= 6.0 * 1.2 + 1e-12 && m >= 1.0);
        // Deterministic in the seed.
        assert_eq!(g, estimate_lipschitz(&losses, &set, 64, 7));
    }
}
