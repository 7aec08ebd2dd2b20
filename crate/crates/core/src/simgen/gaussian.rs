//! Gaussian test statistics with block or banded covariance.

use rand::seq::index;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;

use super::cluster::place_clustered_with;
use super::stats::{one_sided_p, two_sided_p};
use super::{rep_rng, Draw, Scenario};
use crate::error::{Error, Result};
use crate::graph::DependencyGraph;
use crate::procedures::bh;
use crate::pvalues::PValues;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dependence {
    /// Equicorrelated consecutive blocks of `size`.
    Block { size: usize, rho: f64 },
    /// `Sigma_ij = rho^|i-j|` for `|i - j| <= (bandwidth - 1) / 2`, else 0.
    Banded { bandwidth: usize, rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    /// `floor((1 - pi0) m)` non-nulls chosen uniformly.
    Uniform { pi0: f64 },
    /// Non-nulls from a Poisson cluster process.
    Clustered { pi0: f64, lambda0: f64, tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal {
    Fixed(f64),
    /// Exponential with the given mean.
    RandomExp(f64),
}

impl Signal {
    pub fn mu_star(&self) -> f64 {
        match *self {
            Signal::Fixed(m) | Signal::RandomExp(m) => m,
        }
    }

    pub fn with_mu_star(&self, mu: f64) -> Signal {
        match self {
            Signal::Fixed(_) => Signal::Fixed(mu),
            Signal::RandomExp(_) => Signal::RandomExp(mu),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Two,
    /// Upper tail.
    One,
}

/// Plain description of a Gaussian scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    pub m: usize,
    pub dependence: Dependence,
    pub placement: Placement,
    pub signal: Signal,
    pub side: Side,
}

/// A validated Gaussian scenario with its dependency graph and covariance
/// factor prepared.
#[derive(Debug, Clone)]
pub struct GaussianScenario {
    spec: GaussianSpec,
    graph: DependencyGraph,
    /// Banded lower Cholesky factor, row `i` holding columns `i - w ..= i`.
    chol: Option<(usize, Vec<f64>)>,
}

/// Random parts of one replication that do not depend on the signal size.
pub(crate) struct BaseDraw {
    pub nonnull: Vec<usize>,
    /// Signal multipliers aligned with `nonnull`.
    pub shape: Vec<f64>,
    pub noise: Vec<f64>,
}

impl GaussianScenario {
    pub fn new(spec: GaussianSpec) -> Result<Self> {
        let m = spec.m;
        if m == 0 {
            return Err(Error::param("m must be positive"));
        }
        let pi0 = match spec.placement {
            Placement::Uniform { pi0 } => pi0,
            Placement::Clustered { pi0, lambda0, tau } => {
                if lambda0.is_nan() || tau.is_nan() || lambda0 <= 0.0 || tau <= 0.0 {
                    return Err(Error::param("lambda0 and tau must be positive"));
                }
                pi0
            }
        };
        if !(0.0..=1.0).contains(&pi0) {
            return Err(Error::param(format!("pi0 must lie in [0, 1], got {pi0}")));
        }
        if spec.signal.mu_star().is_nan() || spec.signal.mu_star() < 0.0 {
            return Err(Error::param("signal strength must be non-negative"));
        }
        let (graph, chol) = match spec.dependence {
            Dependence::Block { size, rho } => {
                if size == 0 || !m.is_multiple_of(size) {
                    return Err(Error::param(format!(
                        "block size {size} must divide m = {m}"
                    )));
                }
                let lower = if size > 1 {
                    -1.0 / (size as f64 - 1.0)
                } else {
                    -1.0
                };
                if !(rho > lower && rho <= 1.0) {
                    return Err(Error::param(format!(
                        "rho = {rho} gives a singular or invalid block covariance for block size {size}"
                    )));
                }
                (DependencyGraph::blocks(m, size)?, None)
            }
            Dependence::Banded { bandwidth, rho } => {
                let g = DependencyGraph::banded(m, bandwidth)?;
                let w = (bandwidth - 1) / 2;
                if rho.is_nan() || rho.abs() > 1.0 {
                    return Err(Error::param(format!("rho must lie in [-1, 1], got {rho}")));
                }
                (g, Some((w, banded_cholesky(m, w, rho)?)))
            }
        };
        Ok(GaussianScenario { spec, graph, chol })
    }

    pub fn spec(&self) -> &GaussianSpec {
        &self.spec
    }

    pub fn with_mu_star(&self, mu: f64) -> GaussianScenario {
        let mut s = self.clone();
        s.spec.signal = self.spec.signal.with_mu_star(mu);
        s
    }

    pub(crate) fn base_draw(&self, rng: &mut ChaCha12Rng) -> BaseDraw {
        let m = self.spec.m;
        let nonnull = match self.spec.placement {
            Placement::Uniform { pi0 } => {
                let k = ((1.0 - pi0) * m as f64 + 1e-9).floor() as usize;
                let mut v = index::sample(rng, m, k.min(m)).into_vec();
                v.sort_unstable();
                v
            }
            Placement::Clustered { pi0, lambda0, tau } => {
                place_clustered_with(m, pi0, lambda0, tau, rng)
            }
        };
        let shape = match self.spec.signal {
            Signal::Fixed(_) => vec![1.0; nonnull.len()],
            Signal::RandomExp(_) => nonnull.iter().map(|_| Exp1.sample(rng)).collect(),
        };
        let noise = self.noise(rng);
        BaseDraw {
            nonnull,
            shape,
            noise,
        }
    }

    fn noise(&self, rng: &mut ChaCha12Rng) -> Vec<f64> {
        let m = self.spec.m;
        let mut eps: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        match self.spec.dependence {
            Dependence::Block { size, rho } => {
                if rho >= 0.0 {
                    let (a, c) = (rho.sqrt(), (1.0 - rho).sqrt());
                    for block in eps.chunks_mut(size) {
                        let z: f64 = StandardNormal.sample(rng);
                        for x in block {
                            *x = a * z + c * *x;
                        }
                    }
                } else {
                    // Eigen-decomposition of the equicorrelation matrix:
                    // 1 - rho on the contrasts, 1 + (b - 1) rho on the mean.
                    let a = (1.0 - rho).sqrt();
                    let c = (1.0 + (size as f64 - 1.0) * rho).sqrt();
                    for block in eps.chunks_mut(size) {
                        let mean = block.iter().sum::<f64>() / size as f64;
                        for x in block {
                            *x = a * (*x - mean) + c * mean;
                        }
                    }
                }
                eps
            }
            Dependence::Banded { .. } => {
                let (w, l) = self.chol.as_ref().expect("banded factor");
                let stride = w + 1;
                (0..m)
                    .map(|i| {
                        let lo = i.saturating_sub(*w);
                        (lo..=i).map(|j| l[i * stride + (j + w - i)] * eps[j]).sum()
                    })
                    .collect()
            }
        }
    }

    pub(crate) fn finish(&self, base: &BaseDraw, mu_star: f64) -> PValues {
        let mut x = base.noise.clone();
        for (&i, &s) in base.nonnull.iter().zip(&base.shape) {
            x[i] += mu_star * s;
        }
        let p = match self.spec.side {
            Side::Two => x.iter().map(|&v| two_sided_p(v)).collect(),
            Side::One => x.iter().map(|&v| one_sided_p(v)).collect(),
        };
        PValues::from_vec_unchecked(p)
    }
}

impl Scenario for GaussianScenario {
    fn m(&self) -> usize {
        self.spec.m
    }

    fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    fn draw(&self, rng: &mut ChaCha12Rng) -> Result<Draw> {
        let base = self.base_draw(rng);
        let p = self.finish(&base, self.spec.signal.mu_star());
        Ok(Draw {
            p,
            nonnull: base.nonnull,
        })
    }
}

/// Banded Cholesky of `Sigma_ij = rho^|i-j|` (`|i-j| <= w`). Row `i` of the
/// result holds `L[i][i-w..=i]`, zero-padded at the top.
fn banded_cholesky(m: usize, w: usize, rho: f64) -> Result<Vec<f64>> {
    let stride = w + 1;
    let mut l = vec![0.0f64; m * stride];
    let at = |i: usize, j: usize| i * stride + (j + w - i);
    for i in 0..m {
        let lo = i.saturating_sub(w);
        for j in lo..=i {
            let klo = lo.max(j.saturating_sub(w));
            let mut s = 0.0;
            for k in klo..j {
                s += l[at(i, k)] * l[at(j, k)];
            }
            let sigma = rho.powi((i - j) as i32);
            if i == j {
                let d = 1.0 - s;
                if d.is_nan() || d <= 1e-12 {
                    return Err(Error::param(format!(
                        "banded covariance with rho = {rho} and half-width {w} is not positive definite"
                    )));
                }
                l[at(i, i)] = d.sqrt();
            } else {
                l[at(i, j)] = (sigma - s) / l[at(j, j)];
            }
        }
    }
    Ok(l)
}

/// One draw from a block scenario: p-values, non-nulls and the graph.
pub fn gen_block_gaussian(
    spec: &GaussianSpec,
    seed: u64,
) -> Result<(PValues, Vec<usize>, DependencyGraph)> {
    if !matches!(spec.dependence, Dependence::Block { .. }) {
        return Err(Error::param("expected block dependence"));
    }
    gen_gaussian(spec, seed)
}

/// One draw from a banded scenario.
pub fn gen_banded_gaussian(
    spec: &GaussianSpec,
    seed: u64,
) -> Result<(PValues, Vec<usize>, DependencyGraph)> {
    if !matches!(spec.dependence, Dependence::Banded { .. }) {
        return Err(Error::param("expected banded dependence"));
    }
    gen_gaussian(spec, seed)
}

fn gen_gaussian(spec: &GaussianSpec, seed: u64) -> Result<(PValues, Vec<usize>, DependencyGraph)> {
    let sc = GaussianScenario::new(*spec)?;
    let d = sc.draw(&mut rep_rng(seed, 0))?;
    Ok((d.p, d.nonnull, sc.graph))
}

/// Global-null one-sided p-values from negatively equicorrelated blocks.
pub fn negative_gaussian_scenario(m: usize, b: usize, rho: f64) -> Result<GaussianScenario> {
    if b < 2 {
        return Err(Error::param("block size must be at least 2"));
    }
    if !(rho < 0.0 && rho > -1.0 / (b as f64 - 1.0)) {
        return Err(Error::param(format!(
            "rho must lie in (-1/(b-1), 0) = ({}, 0), got {rho}",
            -1.0 / (b as f64 - 1.0)
        )));
    }
    GaussianScenario::new(GaussianSpec {
        m,
        dependence: Dependence::Block { size: b, rho },
        placement: Placement::Uniform { pi0: 1.0 },
        signal: Signal::Fixed(0.0),
        side: Side::One,
    })
}

pub fn gen_negative_gaussian(
    m: usize,
    b: usize,
    rho: f64,
    seed: u64,
) -> Result<(PValues, DependencyGraph)> {
    let sc = negative_gaussian_scenario(m, b, rho)?;
    let d = sc.draw(&mut rep_rng(seed, 0))?;
    Ok((d.p, sc.graph))
}

/// Replications used when tuning the signal strength.
pub const TUNING_REPS: usize = 200;
/// Accepted distance between achieved and target power.
pub const TUNING_TOL: f64 = 0.01;

/// Mean fraction of non-nulls rejected by BH at signal size `mu`, over a
/// fixed set of base draws.
fn bh_power(sc: &GaussianScenario, bases: &[BaseDraw], alpha: f64, mu: f64) -> f64 {
    let vals: Vec<f64> = bases
        .par_iter()
        .filter(|b| !b.nonnull.is_empty())
        .map(|b| {
            let r = bh(&sc.finish(b, mu), alpha);
            b.nonnull.iter().filter(|&&i| r.contains(i)).count() as f64 / b.nonnull.len() as f64
        })
        .collect();
    if vals.is_empty() {
        0.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Bisection on `mu* in [0, 20]` so that BH's average power matches
/// `tarpow` within 0.01, using 200 fixed replications.
pub fn tune_mu_star(spec: &GaussianSpec, tarpow: f64, alpha: f64, seed: u64) -> Result<f64> {
    if !(tarpow > 0.0 && tarpow < 1.0) {
        return Err(Error::param(format!(
            "target power must lie in (0, 1), got {tarpow}"
        )));
    }
    let sc = GaussianScenario::new(*spec)?;
    let bases: Vec<BaseDraw> = (0..TUNING_REPS)
        .into_par_iter()
        .map(|rep| sc.base_draw(&mut rep_rng(seed, rep as u64)))
        .collect();
    if bases.iter().all(|b| b.nonnull.is_empty()) {
        return Err(Error::param(
            "scenario has no non-null hypotheses to tune against",
        ));
    }
    let (mut lo, mut hi) = (0.0f64, 20.0f64);
    let top = bh_power(&sc, &bases, alpha, hi);
    if top < tarpow - TUNING_TOL {
        return Err(Error::param(format!(
            "target power {tarpow} is unreachable: BH power at mu* = 20 is {top:.4}"
        )));
    }
    if bh_power(&sc, &bases, alpha, lo) > tarpow + TUNING_TOL {
        return Ok(lo);
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..60 {
        mid = 0.5 * (lo + hi);
        let pw = bh_power(&sc, &bases, alpha, mid);
        if (pw - tarpow).abs() <= TUNING_TOL {
            break;
        }
        if pw < tarpow {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Estimated BH power at the scenario's own signal size.
pub fn estimate_bh_power(sc: &GaussianScenario, alpha: f64, reps: usize, seed: u64) -> f64 {
    let bases: Vec<BaseDraw> = (0..reps)
        .into_par_iter()
        .map(|rep| sc.base_draw(&mut rep_rng(seed, rep as u64)))
        .collect();
    bh_power(sc, &bases, alpha, sc.spec.signal.mu_star())
}
