//! Brute-force ground truth and property checkers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::DependencyGraph;
use crate::pvalues::{Level, PValues, RejectionSet};
use crate::simgen::{rep_rng, Scenario};

/// Largest problem the brute-force routines accept by default.
pub const DEFAULT_BRUTE_GUARD: usize = 20;

fn check_small(p: &PValues, g: &DependencyGraph, guard: usize) -> Result<()> {
    if g.m() != p.len() {
        return Err(Error::LengthMismatch {
            expected: g.m(),
            got: p.len(),
        });
    }
    if p.len() > guard {
        return Err(Error::GuardExceeded {
            component: 0,
            size: p.len(),
            limit: guard,
        });
    }
    Ok(())
}

/// Calls `f` on every non-empty independent set of `g`, as a bitmask,
/// together with its size and largest p-value.
fn for_each_independent(p: &[f64], g: &DependencyGraph, mut f: impl FnMut(u64, usize, f64)) {
    let m = p.len();
    let adj: Vec<u64> = (0..m)
        .map(|i| g.neighbors(i).fold(0u64, |acc, j| acc | (1 << j)))
        .collect();
    #[allow(clippy::too_many_arguments)]
    fn go(
        i: usize,
        m: usize,
        adj: &[u64],
        p: &[f64],
        set: u64,
        blocked: u64,
        size: usize,
        max: f64,
        f: &mut dyn FnMut(u64, usize, f64),
    ) {
        if i == m {
            if size > 0 {
                f(set, size, max);
            }
            return;
        }
        go(i + 1, m, adj, p, set, blocked, size, max, f);
        if blocked & (1 << i) == 0 {
            go(
                i + 1,
                m,
                adj,
                p,
                set | (1 << i),
                blocked | adj[i],
                size + 1,
                max.max(p[i]),
                f,
            );
        }
    }
    go(0, m, &adj, p, 0, 0, 0, 0.0, &mut f);
}

/// Every certificate set: an independent `C` with `p_j <= alpha |C| / m`
/// for all `j` in `C`. Sets are sorted; the list is sorted.
pub fn certificate_sets(p: &PValues, alpha: f64, g: &DependencyGraph) -> Result<Vec<Vec<usize>>> {
    check_small(p, g, DEFAULT_BRUTE_GUARD)?;
    let level = Level::new(alpha, p.len());
    let mut out = Vec::new();
    for_each_independent(p, g, |set, size, max| {
        if max <= level.threshold(size) {
            out.push(
                (0..p.len())
                    .filter(|&j| set & (1 << j) != 0)
                    .collect::<Vec<_>>(),
            );
        }
    });
    out.sort();
    Ok(out)
}

fn brute_indbh_raw(p: &[f64], alpha: f64, g: &DependencyGraph) -> RejectionSet {
    let level = Level::new(alpha, p.len());
    let mut union = 0u64;
    for_each_independent(p, g, |set, size, max| {
        if max <= level.threshold(size) {
            union |= set;
        }
    });
    RejectionSet::from_sorted((0..p.len()).filter(|&j| union & (1 << j) != 0).collect())
}

/// IndBH by enumerating certificate sets. Limited to 20 hypotheses.
pub fn brute_force_indbh(p: &PValues, alpha: f64, g: &DependencyGraph) -> Result<RejectionSet> {
    check_small(p, g, DEFAULT_BRUTE_GUARD)?;
    Ok(brute_indbh_raw(p, alpha, g))
}

/// IndBH^(k) by the literal recursion on top of [`brute_force_indbh`].
pub fn brute_force_indbh_k(
    p: &PValues,
    alpha: f64,
    g: &DependencyGraph,
    k: usize,
) -> Result<RejectionSet> {
    check_small(p, g, DEFAULT_BRUTE_GUARD)?;
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    fn rec(p: &[f64], alpha: f64, g: &DependencyGraph, k: usize) -> RejectionSet {
        if k == 1 {
            return brute_indbh_raw(p, alpha, g);
        }
        let level = Level::new(alpha, p.len());
        let mut out = Vec::new();
        for i in 0..p.len() {
            let mut q = p.to_vec();
            for j in g.neighbors(i) {
                q[j] = 1.0;
            }
            let inner = rec(&q, alpha, g, k - 1);
            let c = inner.len() + usize::from(!inner.contains(i));
            if p[i] <= level.threshold(c) {
                out.push(i);
            }
        }
        RejectionSet::from_sorted(out)
    }
    Ok(rec(p, alpha, g, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    SelfConsistency,
    Monotonicity,
    NeighborBlindness,
}

/// One failed check: the input, the comparison input when there is one,
/// and the offending hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub p: Vec<f64>,
    pub p_prime: Option<Vec<f64>>,
    pub witness: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub property: Property,
    pub instances: usize,
    pub violations: Vec<Violation>,
}

impl PropertyReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every rejected `p_i` is at most `alpha |R| / m`.
pub fn check_self_consistency<F>(proc: F, alpha: f64, instances: &[PValues]) -> PropertyReport
where
    F: Fn(&PValues) -> RejectionSet,
{
    let mut violations = Vec::new();
    for p in instances {
        let r = proc(p);
        let t = Level::new(alpha, p.len()).threshold(r.len());
        let bad = r.iter().find(|&i| p[i] > t);
        if let Some(i) = bad {
            violations.push(Violation {
                p: p.to_vec(),
                p_prime: None,
                witness: i,
            });
        }
    }
    PropertyReport {
        property: Property::SelfConsistency,
        instances: instances.len(),
        violations,
    }
}

/// Shrinking p-values never loses a rejection. Each instance is compared
/// against an independent uniform shrink and against `p / 2`.
pub fn check_monotonicity<F>(proc: F, instances: &[PValues], seed: u64) -> PropertyReport
where
    F: Fn(&PValues) -> RejectionSet,
{
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    for p in instances {
        let r = proc(p);
        let shrunk: Vec<f64> = p.iter().map(|&v| v * rng.random::<f64>()).collect();
        let halved: Vec<f64> = p.iter().map(|&v| v / 2.0).collect();
        for q in [shrunk, halved] {
            let q = PValues::from_vec_unchecked(q);
            let rq = proc(&q);
            if let Some(i) = r.iter().find(|&i| !rq.contains(i)) {
                violations.push(Violation {
                    p: p.to_vec(),
                    p_prime: Some(q.into_vec()),
                    witness: i,
                });
                break;
            }
        }
    }
    PropertyReport {
        property: Property::Monotonicity,
        instances: instances.len(),
        violations,
    }
}

/// `i` is rejected iff it is rejected after masking its neighbours.
pub fn check_neighbor_blindness<F>(
    proc: F,
    g: &DependencyGraph,
    instances: &[PValues],
) -> PropertyReport
where
    F: Fn(&PValues) -> RejectionSet,
{
    let mut violations = Vec::new();
    for p in instances {
        let r = proc(p);
        for i in 0..p.len() {
            if g.degree(i) == 0 {
                continue;
            }
            let q = p.masked(g.neighbors(i));
            if r.contains(i) != proc(&q).contains(i) {
                violations.push(Violation {
                    p: p.to_vec(),
                    p_prime: Some(q.into_vec()),
                    witness: i,
                });
                break;
            }
        }
    }
    PropertyReport {
        property: Property::NeighborBlindness,
        instances: instances.len(),
        violations,
    }
}

/// Monte Carlo FDR estimate with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub fdr: f64,
    pub se: f64,
    pub mean_rejections: f64,
    /// Mean fraction of non-nulls rejected, over replications with at least
    /// one non-null; `None` when there were none.
    pub power: Option<f64>,
    pub reps: usize,
}

/// False discovery proportion; zero when nothing is rejected.
pub fn fdp(rejected: &RejectionSet, nonnull: &[usize]) -> f64 {
    if rejected.is_empty() {
        return 0.0;
    }
    let false_rej = rejected
        .iter()
        .filter(|i| nonnull.binary_search(i).is_err())
        .count();
    false_rej as f64 / rejected.len() as f64
}

/// Estimates the FDR of `proc` under `scenario`. Replication `r` draws from
/// the stream `(seed, r)`, so results do not depend on scheduling.
pub fn mc_fdr<F, S>(proc: F, scenario: &S, reps: usize, seed: u64) -> Result<McEstimate>
where
    F: Fn(&PValues, &DependencyGraph) -> Result<RejectionSet> + Sync,
    S: Scenario + ?Sized,
{
    if reps == 0 {
        return Err(Error::param("reps must be at least 1"));
    }
    let rows = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(seed, rep as u64);
            let d = scenario.draw(&mut rng)?;
            let r = proc(&d.p, scenario.graph())?;
            let power = (!d.nonnull.is_empty()).then(|| {
                r.iter()
                    .filter(|i| d.nonnull.binary_search(i).is_ok())
                    .count() as f64
                    / d.nonnull.len() as f64
            });
            Ok((fdp(&r, &d.nonnull), r.len(), power))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = reps as f64;
    let fdr = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let var = if reps > 1 {
        rows.iter().map(|r| (r.0 - fdr).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let powers: Vec<f64> = rows.iter().filter_map(|r| r.2).collect();
    Ok(McEstimate {
        fdr,
        se: (var / n).sqrt(),
        mean_rejections: rows.iter().map(|r| r.1 as f64).sum::<f64>() / n,
        power: (!powers.is_empty()).then(|| powers.iter().sum::<f64>() / powers.len() as f64),
        reps,
    })
}
