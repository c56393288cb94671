//! Mixing-matrix contracts across the whole topology grid: stochasticity,
//! symmetry, support, and the dispersion contraction that drives consensus.

use dolfree::network::{MixingMatrix, Topology};
use dolfree::rng;
use rand::Rng;
use rand_distr::StandardNormal;

const TOPOLOGIES: [Topology; 3] = [Topology::Complete, Topology::Cycle, Topology::Grid];
const SIZES: [usize; 3] = [4, 9, 16];

#[test]
fn rows_columns_and_symmetry_within_1e12() {
    for topology in TOPOLOGIES {
        for n in SIZES {
            let m = MixingMatrix::from_topology(topology, n).unwrap();
            for i in 0..n {
                let row: f64 = (0..n).map(|j| m.weight(i, j)).sum();
                let col: f64 = (0..n).map(|j| m.weight(j, i)).sum();
                assert!((row - 1.0).abs() <= 1e-12, "{topology:?} n={n} row {i}: {row}");
                assert!((col - 1.0).abs() <= 1e-12, "{topology:?} n={n} col {i}: {col}");
                for j in 0..n {
                    assert!(m.weight(i, j) >= 0.0);
                    assert_eq!(m.weight(i, j), m.weight(j, i));
                }
            }
        }
    }
}

#[test]
fn contraction_factor_is_strictly_below_one() {
    for topology in TOPOLOGIES {
        for n in SIZES {
            let m = MixingMatrix::from_topology(topology, n).unwrap();
            assert!(m.sigma2() < 1.0 - 1e-9, "{topology:?} n={n}: sigma2={}", m.sigma2());
            assert!(m.sigma2() >= 0.0);
        }
    }
}

fn dispersion(states: &[Vec<f64>]) -> f64 {
    let n = states.len();
    let dim = states[0].len();
    let mut mean = vec![0.0; dim];
    for s in states {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v / n as f64;
        }
    }
    states
        .iter()
        .map(|s| s.iter().zip(&mean).map(|(v, m)| (v - m) * (v - m)).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

#[test]
fn mixing_preserves_the_mean_and_contracts_dispersion() {
    for topology in TOPOLOGIES {
        for n in SIZES {
            let m = MixingMatrix::from_topology(topology, n).unwrap();
            let mut r = rng::keyed(rng::tag::MEMBER, 31, n as u64, topology as u64);
            let dim = 5;
            let mut states: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
                .collect();
            let mut sums = vec![0.0; dim];
            for s in &states {
                for (acc, v) in sums.iter_mut().zip(s) {
                    *acc += v;
                }
            }
            for _ in 0..50 {
                let before = dispersion(&states);
                states = m.mix(&states);
                let after = dispersion(&states);
                assert!(
                    after <= m.sigma2() * before + 1e-12,
                    "{topology:?} n={n}: {after} > sigma2 * {before}"
                );
                let mut new_sums = vec![0.0; dim];
                for s in &states {
                    for (acc, v) in new_sums.iter_mut().zip(s) {
                        *acc += v;
                    }
                }
                for (a, b) in sums.iter().zip(&new_sums) {
                    assert!((a - b).abs() <= 1e-9, "column sum drifted: {a} vs {b}");
                }
            }
        }
    }
}
