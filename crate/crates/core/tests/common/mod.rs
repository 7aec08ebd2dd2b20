#![allow(dead_code)]

use depfdr::graph::DependencyGraph;
use depfdr::PValues;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Beta, Distribution};

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn fig2() -> DependencyGraph {
    DependencyGraph::from_edges(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (2, 4)]).unwrap()
}

pub fn fig4_p() -> PValues {
    PValues::new(vec![0.02, 0.02, 0.01, 0.02, 0.04]).unwrap()
}

pub fn erdos_renyi(m: usize, density: f64, rng: &mut ChaCha12Rng) -> DependencyGraph {
    let mut edges = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if rng.random::<f64>() < density {
                edges.push((i, j));
            }
        }
    }
    DependencyGraph::from_edges(m, &edges).unwrap()
}

/// Each coordinate is Uniform or Beta(0.1, 1) with equal probability.
pub fn mixture_p(m: usize, rng: &mut ChaCha12Rng) -> PValues {
    let beta = Beta::new(0.1, 1.0).unwrap();
    let v = (0..m)
        .map(|_| {
            if rng.random::<bool>() {
                beta.sample(rng)
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    PValues::new(v).unwrap()
}

/// Graphs drawn from ER densities {.1, .3, .6}, equal blocks and bands.
pub fn random_graph(m: usize, rng: &mut ChaCha12Rng) -> DependencyGraph {
    match rng.random_range(0..5) {
        0 => erdos_renyi(m, 0.1, rng),
        1 => erdos_renyi(m, 0.3, rng),
        2 => erdos_renyi(m, 0.6, rng),
        3 => {
            let divisors: Vec<usize> = (1..=m).filter(|b| m.is_multiple_of(*b)).collect();
            let b = divisors[rng.random_range(0..divisors.len())];
            DependencyGraph::blocks(m, b).unwrap()
        }
        _ => DependencyGraph::banded(m, 2 * rng.random_range(0..3usize) + 1).unwrap(),
    }
}

/// Alpha from a small grid so that instances hit interesting BH counts.
pub fn random_alpha(rng: &mut ChaCha12Rng) -> f64 {
    [0.05, 0.1, 0.2, 0.3, 0.5][rng.random_range(0..5)]
}
