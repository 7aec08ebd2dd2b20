//! Clustered placement of non-null hypotheses.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::rep_rng;

/// Cluster centres arrive as a Poisson number (mean `eta0 = (1 - pi0) m /
/// lambda0`) of uniform positions in `0..m`; each centre has a
/// Poisson(`lambda0`) number of daughters displaced by a discrete Gaussian
/// of scale `tau`, truncated at `ceil(12 tau)`. Daughters outside `0..m` are
/// dropped and duplicates merged.
pub fn place_clustered_nonnulls(
    m: usize,
    pi0: f64,
    lambda0: f64,
    tau: f64,
    seed: u64,
) -> Vec<usize> {
    place_clustered_with(m, pi0, lambda0, tau, &mut rep_rng(seed, 0))
}

fn poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> usize {
    if rate <= 0.0 {
        return 0;
    }
    let d = Poisson::new(rate).expect("positive finite rate");
    d.sample(rng) as usize
}

pub(crate) fn place_clustered_with<R: Rng + ?Sized>(
    m: usize,
    pi0: f64,
    lambda0: f64,
    tau: f64,
    rng: &mut R,
) -> Vec<usize> {
    let eta0 = (1.0 - pi0) * m as f64 / lambda0;
    let centres = poisson(eta0, rng);
    let reach = (12.0 * tau).ceil() as i64;
    let weights: Vec<f64> = (-reach..=reach)
        .map(|d| (-(d * d) as f64 / (2.0 * tau * tau)).exp())
        .collect();
    let offsets = WeightedIndex::new(&weights).expect("offset weights");
    let mut out = Vec::new();
    for _ in 0..centres {
        let c = rng.random_range(0..m) as i64;
        for _ in 0..poisson(lambda0, rng) {
            let pos = c + offsets.sample(rng) as i64 - reach;
            if (0..m as i64).contains(&pos) {
                out.push(pos as usize);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}
