//! Gossip topologies and their symmetric doubly stochastic mixing matrices.
//!
//! Weights follow the max-degree rule: P_ij = 1 / max(|N_i|, |N_j|) for each
//! edge (i, j), with the diagonal absorbing the remaining mass. When the
//! second-largest singular value of the result reaches 1 (disconnected or
//! periodic cases like even cycles), the lazy variant (P + I) / 2 is
//! substituted automatically and flagged.

use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Complete,
    Cycle,
    /// Near-square grid: rows x cols with rows = floor(sqrt(n)) and the node
    /// count must factor exactly.
    Grid,
}

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("topology needs at least one node")]
    Empty,
    #[error("grid topology needs n = rows * cols with rows = floor(sqrt(n)); {n} does not factor")]
    GridShape { n: usize },
    #[error("mixing matrix must be symmetric; max asymmetry {0:.3e}")]
    Asymmetric(f64),
    #[error("row {row} sums to {sum}, not 1")]
    NotStochastic { row: usize, sum: f64 },
    #[error("matrix has a negative weight at ({i}, {j}): {v}")]
    NegativeWeight { i: usize, j: usize, v: f64 },
}

#[derive(Clone, Debug)]
pub struct MixingMatrix {
    n: usize,
    /// Row-major n x n weights.
    p: Vec<f64>,
    sigma2: f64,
    lazy_applied: bool,
}

impl MixingMatrix {
    /// Trivial 1x1 matrix for single-node runs.
    pub fn single() -> Self {
        Self { n: 1, p: vec![1.0], sigma2: 0.0, lazy_applied: false }
    }

    pub fn from_topology(topology: Topology, n: usize) -> Result<Self, NetworkError> {
        if n == 0 {
            return Err(NetworkError::Empty);
        }
        if n == 1 {
            return Ok(Self::single());
        }
        let neighbors = build_neighbors(topology, n)?;
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            let mut off_diag = 0.0;
            for &j in &neighbors[i] {
                let w = 1.0 / neighbors[i].len().max(neighbors[j].len()) as f64;
                p[i * n + j] = w;
                off_diag += w;
            }
            p[i * n + i] = 1.0 - off_diag;
        }
        let mut sigma2 = second_largest_singular(&p, n);
        let mut lazy_applied = false;
        if sigma2 >= 1.0 - 1e-9 {
            for i in 0..n {
                for j in 0..n {
                    let v = p[i * n + j] * 0.5;
                    p[i * n + j] = if i == j { v + 0.5 } else { v };
                }
            }
            sigma2 = second_largest_singular(&p, n);
            lazy_applied = true;
        }
        let m = Self { n, p, sigma2, lazy_applied };
        m.validate()?;
        Ok(m)
    }

    /// Accepts an arbitrary symmetric doubly stochastic matrix (row-major).
    pub fn from_weights(p: Vec<f64>, n: usize) -> Result<Self, NetworkError> {
        assert_eq!(p.len(), n * n, "weight buffer must be n*n");
        if n == 0 {
            return Err(NetworkError::Empty);
        }
        let sigma2 = if n == 1 { 0.0 } else { second_largest_singular(&p, n) };
        let m = Self { n, p, sigma2, lazy_applied: false };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), NetworkError> {
        let n = self.n;
        let mut max_asym = 0.0f64;
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let v = self.p[i * n + j];
                if v < -1e-12 {
                    return Err(NetworkError::NegativeWeight { i, j, v });
                }
                max_asym = max_asym.max((v - self.p[j * n + i]).abs());
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(NetworkError::NotStochastic { row: i, sum });
            }
        }
        if max_asym > 1e-9 {
            return Err(NetworkError::Asymmetric(max_asym));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    /// Second-largest singular value; the contraction factor toward consensus.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn lazy_applied(&self) -> bool {
        self.lazy_applied
    }

    /// One synchronous gossip step: out_i = sum_j P_ij states_j. The summation
    /// order over j is fixed, so results are bit-reproducible.
    pub fn mix(&self, states: &[Vec<f64>]) -> Vec<Vec<f64>> {
        assert_eq!(states.len(), self.n, "one state vector per node");
        let dim = states[0].len();
        let mut out = vec![vec![0.0; dim]; self.n];
        for i in 0..self.n {
            let row = &self.p[i * self.n..(i + 1) * self.n];
            let oi = &mut out[i];
            for (j, s) in states.iter().enumerate() {
                debug_assert_eq!(s.len(), dim);
                let w = row[j];
                if w == 0.0 {
                    continue;
                }
                for k in 0..dim {
                    oi[k] += w * s[k];
                }
            }
        }
        out
    }
}

fn build_neighbors(topology: Topology, n: usize) -> Result<Vec<Vec<usize>>, NetworkError> {
    let mut nb = vec![Vec::new(); n];
    match topology {
        Topology::Complete => {
            for i in 0..n {
                nb[i] = (0..n).filter(|&j| j != i).collect();
            }
        }
        Topology::Cycle => {
            if n == 2 {
                nb[0] = vec![1];
                nb[1] = vec![0];
            } else {
                for i in 0..n {
                    nb[i] = vec![(i + n - 1) % n, (i + 1) % n];
                }
            }
        }
        Topology::Grid => {
            let rows = (n as f64).sqrt().floor() as usize;
            if rows == 0 || n % rows != 0 {
                return Err(NetworkError::GridShape { n });
            }
            let cols = n / rows;
            let idx = |r: usize, c: usize| r * cols + c;
            for r in 0..rows {
                for c in 0..cols {
                    let mut v = Vec::new();
                    if r > 0 {
                        v.push(idx(r - 1, c));
                    }
                    if r + 1 < rows {
                        v.push(idx(r + 1, c));
                    }
                    if c > 0 {
                        v.push(idx(r, c - 1));
                    }
                    if c + 1 < cols {
                        v.push(idx(r, c + 1));
                    }
                    nb[idx(r, c)] = v;
                }
            }
        }
    }
    Ok(nb)
}

/// For a symmetric P this is the second-largest |eigenvalue|.
fn second_largest_singular(p: &[f64], n: usize) -> f64 {
    let m = DMatrix::from_row_slice(n, n, p);
    let eig = SymmetricEigen::new(m);
    let mut mags: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    mags[1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_nine_nodes() {
        let m = MixingMatrix::from_topology(Topology::Complete, 9).unwrap();
        assert!((m.sigma2() - 0.125).abs() < 1e-10, "{}", m.sigma2());
        assert!(!m.lazy_applied());
        assert!((m.weight(0, 1) - 0.125).abs() < 1e-15);
        assert!((m.weight(3, 3) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn odd_cycle_needs_no_laziness() {
        let m = MixingMatrix::from_topology(Topology::Cycle, 3).unwrap();
        assert!((m.sigma2() - 0.5).abs() < 1e-10);
        assert!(!m.lazy_applied());
    }

    #[test]
    fn even_cycle_goes_lazy() {
        // The 4-cycle's plain max-degree matrix has eigenvalue -1.
        let m = MixingMatrix::from_topology(Topology::Cycle, 4).unwrap();
        assert!(m.lazy_applied());
        assert!((m.sigma2() - 0.5).abs() < 1e-10, "{}", m.sigma2());
        assert!((m.weight(0, 0) - 0.5).abs() < 1e-15);
        assert!((m.weight(0, 1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_grid_is_the_four_cycle() {
        let g = MixingMatrix::from_topology(Topology::Grid, 4).unwrap();
        let c = MixingMatrix::from_topology(Topology::Cycle, 4).unwrap();
        assert!(g.lazy_applied());
        assert!((g.sigma2() - c.sigma2()).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_prime_counts() {
        assert!(matches!(
            MixingMatrix::from_topology(Topology::Grid, 7),
            Err(NetworkError::GridShape { n: 7 })
        ));
    }

    #[test]
    fn single_node_mixes_trivially() {
        let m = MixingMatrix::single();
        assert_eq!(m.sigma2(), 0.0);
        let out = m.mix(&[vec![2.0, -3.0]]);
        assert_eq!(out, vec![vec![2.0, -3.0]]);
    }

    #[test]
    fn mix_preserves_mean_and_contracts() {
        let m = MixingMatrix::from_topology(Topology::Cycle, 5).unwrap();
        let states: Vec<Vec<f64>> =
            (0..5).map(|i| vec![i as f64, (i * i) as f64 - 3.0]).collect();
        let mean: Vec<f64> = (0..2)
            .map(|k| states.iter().map(|s| s[k]).sum::<f64>() / 5.0)
            .collect();
        let disp = |xs: &[Vec<f64>]| -> f64 {
            xs.iter()
                .map(|s| s.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .sum()
        };
        let mixed = m.mix(&states);
        let mixed_mean: Vec<f64> =
            (0..2).map(|k| mixed.iter().map(|s| s[k]).sum::<f64>() / 5.0).collect();
        for k in 0..2 {
            assert!((mixed_mean[k] - mean[k]).abs() < 1e-12);
        }
        assert!(disp(&mixed) <= m.sigma2().powi(2) * disp(&states) + 1e-12);
    }

    #[test]
    fn from_weights_rejects_bad_matrices() {
        assert!(matches!(
            MixingMatrix::from_weights(vec![0.5, 0.5, 0.4, 0.6], 2),
            Err(NetworkError::Asymmetric(_))
        ));
        assert!(matches!(
            MixingMatrix::from_weights(vec![0.5, 0.4, 0.4, 0.5], 2),
            Err(NetworkError::NotStochastic { .. })
        ));
    }
}
