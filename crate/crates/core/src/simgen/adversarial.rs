//! Global-null p-values that push BH's FDR towards its worst case under a
//! clique cover.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::{rep_rng, Draw, Scenario};
use crate::bounds::CliqueCover;
use crate::error::{Error, Result};
use crate::graph::DependencyGraph;
use crate::pvalues::{harmonic, PValues};

/// Each cover block `B_k` (size `b`) draws a count `s` with
/// `P(s) = (alpha b / m) / s` for `s >= 1` and the remaining mass at 0,
/// then a uniform subset of size `s` whose p-values are uniform on
/// `[alpha (s-1) / m, alpha s / m]`; the rest are uniform on `[alpha b / m, 1]`.
#[derive(Debug, Clone)]
pub struct AdversarialScenario {
    cover: CliqueCover,
    alpha: f64,
    graph: DependencyGraph,
    /// Cumulative probabilities of `s = 0, 1, ..., b` per block.
    cdf: Vec<Vec<f64>>,
}

impl AdversarialScenario {
    pub fn new(cover: CliqueCover, alpha: f64) -> Result<Self> {
        let m = cover.m();
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        let mut cdf = Vec::with_capacity(cover.blocks().len());
        for b in cover.blocks() {
            let x = alpha * b.len() as f64 / m as f64;
            let p0 = 1.0 - x * harmonic(b.len());
            if p0 < -1e-12 {
                return Err(Error::param(format!(
                    "alpha {alpha} leaves negative mass at zero for the block starting at node {}",
                    b[0] + 1
                )));
            }
            let mut acc = p0.max(0.0);
            let mut c = vec![acc];
            for s in 1..=b.len() {
                acc += x / s as f64;
                c.push(acc);
            }
            cdf.push(c);
        }
        let mut edges = Vec::new();
        for b in cover.blocks() {
            for (x, &i) in b.iter().enumerate() {
                for &j in &b[x + 1..] {
                    edges.push((i, j));
                }
            }
        }
        let graph = DependencyGraph::from_edges(m, &edges)?;
        Ok(AdversarialScenario {
            cover,
            alpha,
            graph,
            cdf,
        })
    }

    pub fn cover(&self) -> &CliqueCover {
        &self.cover
    }

    /// Probability that block `k` draws count `s`.
    pub fn count_probability(&self, k: usize, s: usize) -> f64 {
        let c = &self.cdf[k];
        if s == 0 {
            c[0]
        } else {
            c[s] - c[s - 1]
        }
    }

    /// Samples p-values together with the per-block counts.
    pub fn sample_with_counts(&self, rng: &mut ChaCha12Rng) -> (PValues, Vec<usize>) {
        let m = self.cover.m();
        let mf = m as f64;
        let mut p = vec![0.0; m];
        let mut counts = Vec::with_capacity(self.cdf.len());
        for (b, cdf) in self.cover.blocks().iter().zip(&self.cdf) {
            let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
            let s = cdf.partition_point(|&c| c <= u).min(b.len());
            let chosen = index::sample(rng, b.len(), s);
            let mut inside = vec![false; b.len()];
            for x in chosen.iter() {
                inside[x] = true;
            }
            for (x, &i) in b.iter().enumerate() {
                let (lo, hi) = if inside[x] {
                    (self.alpha * (s - 1) as f64 / mf, self.alpha * s as f64 / mf)
                } else {
                    (self.alpha * b.len() as f64 / mf, 1.0)
                };
                p[i] = (lo + (hi - lo) * rng.random::<f64>()).clamp(0.0, 1.0);
            }
            counts.push(s);
        }
        (PValues::from_vec_unchecked(p), counts)
    }
}

impl Scenario for AdversarialScenario {
    fn m(&self) -> usize {
        self.cover.m()
    }

    fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    fn draw(&self, rng: &mut ChaCha12Rng) -> Result<Draw> {
        let (p, _) = self.sample_with_counts(rng);
        Ok(Draw {
            p,
            nonnull: Vec::new(),
        })
    }
}

/// One global-null draw from the adversarial sampler.
pub fn gen_block_adversarial(cover: &CliqueCover, alpha: f64, seed: u64) -> Result<PValues> {
    let sc = AdversarialScenario::new(cover.clone(), alpha)?;
    Ok(sc.sample_with_counts(&mut rep_rng(seed, 0)).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_masses() {
        let sc = AdversarialScenario::new(CliqueCover::equal_blocks(9, 3).unwrap(), 0.5).unwrap();
        let x = 0.5 * 3.0 / 9.0;
        assert!((sc.count_probability(0, 0) - (1.0 - x * 11.0 / 6.0)).abs() < 1e-15);
        assert!((sc.count_probability(0, 2) - x / 2.0).abs() < 1e-15);
        assert!(AdversarialScenario::new(CliqueCover::equal_blocks(3, 3).unwrap(), 0.9).is_err());
    }

    #[test]
    fn graph_follows_cover() {
        let cover = CliqueCover::new(3, vec![vec![0], vec![1, 2]], None).unwrap();
        let sc = AdversarialScenario::new(cover, 0.5).unwrap();
        assert_eq!(sc.graph().edges().collect::<Vec<_>>(), vec![(1, 2)]);
    }
}
