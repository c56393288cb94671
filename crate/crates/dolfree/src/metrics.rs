//! Regret against the best fixed decision in hindsight.
//!
//! The comparator is shared by all nodes: the minimizer of the summed loss of
//! the whole network over the whole horizon. For streams built purely from
//! linear and linear-plus-quadratic instances the aggregate objective is one
//! quadratic, solved exactly; anything else falls back to budgeted
//! Frank-Wolfe, whose final duality gap is reported so callers can tell how
//! trustworthy the baseline is.

use crate::cg::{cg_minimize, Surrogate};
use crate::geometry::{DecisionSet, GeometryError};
use crate::learners::RunTrace;
use crate::losses::{LossInstance, LossStream};
use crate::vecops::{dot, norm_sq};

#[derive(Clone, Debug)]
pub struct ComparatorResult {
    pub point: Vec<f64>,
    /// Summed loss of `point` over every (round, node) cell.
    pub total_loss: f64,
    /// Final Frank-Wolfe duality gap; 0 when the solution is closed-form.
    pub fw_gap: f64,
    /// True when the gap exceeded the caller's tolerance, meaning the
    /// comparator (and any regret built on it) is suspect.
    pub gap_flagged: bool,
}

/// Best fixed point in hindsight for the summed stream loss. `budget` caps
/// Frank-Wolfe iterations on the paths that need them; `gap_tol` is the
/// flagging threshold on the final duality gap.
pub fn offline_comparator<S: LossStream>(
    stream: &S,
    set: &DecisionSet,
    budget: usize,
    gap_tol: f64,
) -> Result<ComparatorResult, GeometryError> {
    if let Some((w_sum, alpha_sum)) = try_aggregate(stream) {
        return aggregate_comparator(set, w_sum, alpha_sum, budget, gap_tol);
    }
    generic_comparator(stream, set, budget, gap_tol)
}

/// Folds the stream into (sum of linear parts, sum of quadratic moduli) when
/// every instance is linear or linear-plus-quadratic.
fn try_aggregate<S: LossStream>(stream: &S) -> Option<(Vec<f64>, f64)> {
    let mut w_sum = vec![0.0; stream.dim()];
    let mut alpha_sum = 0.0;
    for t in 0..stream.rounds() {
        for i in 0..stream.nodes() {
            match stream.loss(t, i) {
                LossInstance::Linear { w } => {
                    for (acc, v) in w_sum.iter_mut().zip(w.iter()) {
                        *acc += v;
                    }
                }
                LossInstance::LinearPlusQuad { w, alpha } => {
                    for (acc, v) in w_sum.iter_mut().zip(w.iter()) {
                        *acc += v;
                    }
                    alpha_sum += alpha;
                }
                _ => return None,
            }
        }
    }
    Some((w_sum, alpha_sum))
}

fn aggregate_comparator(
    set: &DecisionSet,
    w_sum: Vec<f64>,
    alpha_sum: f64,
    budget: usize,
    gap_tol: f64,
) -> Result<ComparatorResult, GeometryError> {
    let aggregate_value =
        |x: &[f64]| -> f64 { dot(&w_sum, x) + 0.5 * alpha_sum * norm_sq(x) };
    if alpha_sum == 0.0 {
        // Pure linear objective: one LMO call is the exact answer.
        let point = set.lmo(&w_sum)?;
        let total_loss = aggregate_value(&point);
        return Ok(ComparatorResult { point, total_loss, fw_gap: 0.0, gap_flagged: false });
    }
    let unconstrained: Vec<f64> = w_sum.iter().map(|v| -v / alpha_sum).collect();
    if set.contains(&unconstrained, 1e-9) {
        let total_loss = aggregate_value(&unconstrained);
        return Ok(ComparatorResult {
            point: unconstrained,
            total_loss,
            fw_gap: 0.0,
            gap_flagged: false,
        });
    }
    // Boundary solution: Frank-Wolfe with exact line search converges
    // linearly here because the objective is a strongly convex quadratic.
    let anchor = vec![0.0; w_sum.len()];
    let f = Surrogate::new(&w_sum, alpha_sum, 0.0, &anchor);
    let point = cg_minimize(set, &f, &set.origin(), budget)?;
    let grad = f.gradient(&point);
    let v = set.lmo(&grad)?;
    let fw_gap = dot(&grad, &point) - dot(&grad, &v);
    Ok(ComparatorResult {
        point: point.clone(),
        total_loss: aggregate_value(&point),
        fw_gap,
        gap_flagged: fw_gap > gap_tol,
    })
}

fn generic_comparator<S: LossStream>(
    stream: &S,
    set: &DecisionSet,
    budget: usize,
    gap_tol: f64,
) -> Result<ComparatorResult, GeometryError> {
    let dim = stream.dim();
    let total_value = |x: &[f64]| -> f64 {
        let mut s = 0.0;
        for t in 0..stream.rounds() {
            for i in 0..stream.nodes() {
                s += stream.loss(t, i).value(x);
            }
        }
        s
    };
    let total_gradient = |x: &[f64], out: &mut Vec<f64>| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in 0..stream.rounds() {
            for i in 0..stream.nodes() {
                stream.loss(t, i).add_gradient(x, out);
            }
        }
    };

    let mut c = set.origin();
    let mut grad = vec![0.0; dim];
    for _ in 0..budget {
        total_gradient(&c, &mut grad);
        let v = set.lmo(&grad)?;
        let gap = dot(&grad, &c) - dot(&grad, &v);
        if gap <= 1e-13 * (1.0 + gap_tol) {
            break;
        }
        let s = golden_section(|s| {
            let probe: Vec<f64> =
                c.iter().zip(&v).map(|(ck, vk)| ck + s * (vk - ck)).collect();
            total_value(&probe)
        });
        for (ck, vk) in c.iter_mut().zip(&v) {
            *ck += s * (*vk - *ck);
        }
    }
    // Report the gap at the final iterate.
    total_gradient(&c, &mut grad);
    let v = set.lmo(&grad)?;
    let gap = dot(&grad, &c) - dot(&grad, &v);
    Ok(ComparatorResult {
        point: c.clone(),
        total_loss: total_value(&c),
        fw_gap: gap,
        gap_flagged: gap > gap_tol,
    })
}

/// Minimizes a unimodal function on [0, 1] to ~1e-12 bracket width.
fn golden_section<F: Fn(f64) -> f64>(f: F) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

#[derive(Clone, Debug)]
pub struct RegretReport {
    pub comparator: ComparatorResult,
    /// Whole-network loss charged at node i's plays minus the comparator's
    /// whole-network total: every node is measured against the same shared
    /// objective, not just its own loss stream.
    pub per_node: Vec<f64>,
    /// Bandit runs: same but charged at the unperturbed block decisions.
    pub per_node_unperturbed: Option<Vec<f64>>,
    /// Worst entry of `per_node`.
    pub worst_node: f64,
}

/// Regret of a finished run against the shared best-in-hindsight point.
pub fn regret_report<S: LossStream>(
    trace: &RunTrace,
    stream: &S,
    set: &DecisionSet,
    budget: usize,
    gap_tol: f64,
) -> Result<RegretReport, GeometryError> {
    assert_eq!(trace.rounds, stream.rounds(), "trace and stream horizons differ");
    assert_eq!(trace.nodes, stream.nodes(), "trace and stream node counts differ");
    let comparator = offline_comparator(stream, set, budget, gap_tol)?;
    let per_node: Vec<f64> =
        trace.total_network_loss.iter().map(|l| l - comparator.total_loss).collect();
    let per_node_unperturbed = trace
        .total_network_base_loss
        .as_ref()
        .map(|tot| tot.iter().map(|l| l - comparator.total_loss).collect());
    let worst_node = per_node.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RegretReport { comparator, per_node, per_node_unperturbed, worst_node })
}

/// (round, max over nodes) rows of the recorded network-average loss.
pub fn worst_node_avg_loss(trace: &RunTrace) -> Option<Vec<(usize, f64)>> {
    trace.avg_loss.as_ref().map(|al| {
        al.at_rounds
            .iter()
            .zip(&al.values)
            .map(|(&t, row)| (t, row.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
            .collect()
    })
}
