//! Reference implementations of the multiple-testing procedures.
//!
//! These follow the defining formulas literally and are meant for small
//! problems and as ground truth. [`ProcedureSpec::run`] dispatches the
//! graph-aware IndBH family to the fast engine instead.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::engine::{self, EngineConfig};
use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, NodeSet};
use crate::pvalues::{harmonic, Level, PValues, RejectionSet, NO_RANK};

/// Step-up cutoff `r* = max{r : #{i : v_i <= alpha r / m} >= r}` over the
/// first `level.m` ranks. Values above every threshold (including `inf`) never count.
pub(crate) fn step_up_cutoff(values: &[f64], level: Level) -> usize {
    let cap = level.m;
    let mut counts = vec![0usize; cap + 1];
    for &v in values {
        let r = level.rank(v, cap);
        if r != NO_RANK {
            counts[r as usize] += 1;
        }
    }
    let mut best = 0;
    let mut cum = 0;
    for (r, c) in counts.iter().enumerate().skip(1) {
        cum += c;
        if cum >= r {
            best = r;
        }
    }
    best
}

pub(crate) fn step_up(values: &[f64], level: Level) -> RejectionSet {
    let r = step_up_cutoff(values, level);
    if r == 0 {
        return RejectionSet::empty();
    }
    let t = level.threshold(r);
    RejectionSet::from_sorted((0..values.len()).filter(|&i| values[i] <= t).collect())
}

/// Benjamini–Hochberg at level `alpha`.
pub fn bh(p: &PValues, alpha: f64) -> RejectionSet {
    step_up(p, Level::new(alpha, p.len()))
}

/// Step-down BH: the largest `r` such that every order statistic up to `r`
/// clears its threshold.
pub fn step_down_bh(p: &PValues, alpha: f64) -> RejectionSet {
    let level = Level::new(alpha, p.len());
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = sorted
        .iter()
        .enumerate()
        .take_while(|&(k, &v)| v <= level.threshold(k + 1))
        .count();
    if r == 0 {
        return RejectionSet::empty();
    }
    let t = level.threshold(r);
    RejectionSet::from_sorted((0..p.len()).filter(|&i| p[i] <= t).collect())
}

pub fn bonferroni(p: &PValues, alpha: f64) -> RejectionSet {
    let t = Level::new(alpha, p.len()).threshold(1);
    RejectionSet::from_sorted((0..p.len()).filter(|&i| p[i] <= t).collect())
}

/// BH at the Benjamini–Yekutieli level `alpha / H_m`.
pub fn by(p: &PValues, alpha: f64) -> RejectionSet {
    bh(p, alpha / harmonic(p.len()))
}

/// BH at level `sqrt(2 alpha)` on `min(1, 2 sqrt(p_i))`. Requires `alpha <= 1/2`.
pub fn ebh_comparator(p: &PValues, alpha: f64) -> Result<RejectionSet> {
    if alpha > 0.5 {
        return Err(Error::param(format!(
            "e-value comparator needs alpha <= 0.5, got {alpha}"
        )));
    }
    let q: Vec<f64> = p.iter().map(|&v| (2.0 * v.sqrt()).min(1.0)).collect();
    Ok(step_up(&q, Level::new((2.0 * alpha).sqrt(), p.len())))
}

fn check_len(g: &DependencyGraph, p: &PValues) -> Result<()> {
    if g.m() != p.len() {
        return Err(Error::LengthMismatch {
            expected: g.m(),
            got: p.len(),
        });
    }
    Ok(())
}

/// BH with each local threshold computed after masking the neighbours.
/// Does not control the FDR; kept as a negative control.
pub fn naive_adjusted_bh(p: &PValues, alpha: f64, g: &DependencyGraph) -> Result<RejectionSet> {
    check_len(g, p)?;
    let m = p.len();
    let level = Level::new(alpha, m);
    let mut q = p.to_vec();
    let mut out = Vec::new();
    for i in 0..m {
        for j in g.neighbors(i) {
            q[j] = 1.0;
        }
        q[i] = 0.0;
        let c = step_up_cutoff(&q, level);
        if c > 0 && p[i] <= level.threshold(c) {
            out.push(i);
        }
        q[i] = p[i];
        for j in g.neighbors(i) {
            q[j] = p[j];
        }
    }
    Ok(RejectionSet::from_sorted(out))
}

/// Literal evaluation of the gap-chasing recursion
/// `R^(k+1)(q) = {i : q_i <= alpha |{i} ∪ R^(k)(1^{N_i°} q)| / m}`,
/// memoised on `(k, mask)`.
struct GapChase<'a> {
    p: &'a [f64],
    g: &'a DependencyGraph,
    level: Level,
    /// Maximal independent sets; level one is the union of BH over them.
    sets: Vec<Vec<usize>>,
    memo: HashMap<(usize, NodeSet), RejectionSet>,
}

impl<'a> GapChase<'a> {
    fn new(p: &'a [f64], alpha: f64, g: &'a DependencyGraph, sets: Vec<Vec<usize>>) -> Self {
        GapChase {
            p,
            g,
            level: Level::new(alpha, p.len()),
            sets,
            memo: HashMap::new(),
        }
    }

    fn q(&self, mask: &NodeSet) -> Vec<f64> {
        (0..self.p.len())
            .map(|j| if mask.contains(j) { 1.0 } else { self.p[j] })
            .collect()
    }

    fn base_set(&self, mask: &NodeSet) -> RejectionSet {
        let q = self.q(mask);
        let mut acc = RejectionSet::empty();
        let mut buf = vec![1.0; q.len()];
        for s in &self.sets {
            buf.iter_mut().for_each(|v| *v = 1.0);
            for &j in s {
                buf[j] = q[j];
            }
            acc = acc.union(&step_up(&buf, self.level));
        }
        acc
    }

    fn eval(&mut self, k: usize, mask: &NodeSet) -> RejectionSet {
        if let Some(r) = self.memo.get(&(k, mask.clone())) {
            return r.clone();
        }
        let out = if k <= 1 {
            self.base_set(mask)
        } else {
            let mut rej = Vec::new();
            for i in 0..self.p.len() {
                let mut m2 = mask.clone();
                for j in self.g.neighbors(i) {
                    m2.insert(j);
                }
                let inner = self.eval(k - 1, &m2);
                let c = inner.len() + usize::from(!inner.contains(i));
                let qi = if mask.contains(i) { 1.0 } else { self.p[i] };
                if qi <= self.level.threshold(c) {
                    rej.push(i);
                }
            }
            RejectionSet::from_sorted(rej)
        };
        self.memo.insert((k, mask.clone()), out.clone());
        out
    }
}

/// IndBH as the union of BH over all maximal independent sets.
pub fn indbh_reference(p: &PValues, alpha: f64, g: &DependencyGraph) -> Result<RejectionSet> {
    indbh_k_reference(p, alpha, g, 1)
}

/// IndBH^(k) by literal recursion; `k = 1` is IndBH.
pub fn indbh_k_reference(
    p: &PValues,
    alpha: f64,
    g: &DependencyGraph,
    k: usize,
) -> Result<RejectionSet> {
    indbh_k_reference_guarded(p, alpha, g, k, crate::graph::DEFAULT_GUARD)
}

pub fn indbh_k_reference_guarded(
    p: &PValues,
    alpha: f64,
    g: &DependencyGraph,
    k: usize,
    guard: usize,
) -> Result<RejectionSet> {
    check_len(g, p)?;
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    let sets = g.try_maximal_independent_sets(guard, crate::graph::DEFAULT_MAX_SETS)?;
    let mut gc = GapChase::new(p, alpha, g, sets);
    Ok(gc.eval(k, &NodeSet::new(p.len())))
}

/// Iterates the gap-chasing map from BH to its fixed point.
///
/// The iterates are tracked on every mask reachable from `p` by masking
/// open neighbourhoods, and iteration stops only when none of them changes.
/// Agreement of two iterates at `p` alone is not enough: the masked inputs
/// may still shrink, and stopping there can break neighbour-blindness.
pub fn su_fixed_point(p: &PValues, alpha: f64, g: &DependencyGraph) -> Result<RejectionSet> {
    check_len(g, p)?;
    let m = p.len();
    let level = Level::new(alpha, m);
    let open: Vec<NodeSet> = (0..m)
        .map(|i| NodeSet::from_iter_with_capacity(m, g.neighbors(i)))
        .collect();
    let mut masks = vec![NodeSet::new(m)];
    let mut index: HashMap<NodeSet, usize> = HashMap::from([(NodeSet::new(m), 0)]);
    // child[s][i] is the index of masks[s] ∪ N_i°.
    let mut child: Vec<Vec<usize>> = Vec::new();
    let mut s = 0;
    while s < masks.len() {
        let mut row = Vec::with_capacity(m);
        for nb in &open {
            let mut t = masks[s].clone();
            t.union_with(nb);
            let next = masks.len();
            let id = *index.entry(t.clone()).or_insert(next);
            if id == next {
                masks.push(t);
            }
            row.push(id);
        }
        child.push(row);
        s += 1;
    }
    let q = |mask: &NodeSet, j: usize| if mask.contains(j) { 1.0 } else { p[j] };
    let mut cur: Vec<RejectionSet> = masks
        .iter()
        .map(|mask| step_up(&(0..m).map(|j| q(mask, j)).collect::<Vec<_>>(), level))
        .collect();
    loop {
        let next: Vec<RejectionSet> = masks
            .iter()
            .zip(&child)
            .map(|(mask, row)| {
                let rej = (0..m)
                    .filter(|&i| {
                        let inner = &cur[row[i]];
                        let c = inner.len() + usize::from(!inner.contains(i));
                        q(mask, i) <= level.threshold(c)
                    })
                    .collect();
                RejectionSet::from_sorted(rej)
            })
            .collect();
        if next == cur {
            return Ok(cur.swap_remove(0));
        }
        cur = next;
    }
}

/// Randomised pruning of one round of gap chasing on top of `inner`.
/// `u` holds external uniforms, one per hypothesis.
pub fn randomized_prune(
    p: &PValues,
    alpha: f64,
    g: &DependencyGraph,
    inner: &Procedure,
    u: &[f64],
    config: &EngineConfig,
) -> Result<RejectionSet> {
    check_len(g, p)?;
    if u.len() != p.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            got: u.len(),
        });
    }
    let m = p.len();
    let level = Level::new(alpha, m);
    let spec = ProcedureSpec::new(inner.clone(), alpha)?;
    let mut u_tilde = vec![f64::INFINITY; m];
    for i in 0..m {
        let q = p.masked(g.neighbors(i));
        let r = spec.run(&q, Some(g), config)?;
        let c = r.len() + usize::from(!r.contains(i));
        if p[i] <= level.threshold(c) {
            u_tilde[i] = u[i] * c as f64 / m as f64;
        }
    }
    Ok(step_up(&u_tilde, Level::new(1.0, m)))
}

/// [`randomized_prune`] with uniforms drawn from a seeded generator.
pub fn randomized_prune_seeded(
    p: &PValues,
    alpha: f64,
    g: &DependencyGraph,
    inner: &Procedure,
    seed: u64,
    config: &EngineConfig,
) -> Result<RejectionSet> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..p.len()).map(|_| rng.random::<f64>()).collect();
    randomized_prune(p, alpha, g, inner, &u, config)
}

/// The procedures known to the library.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Procedure {
    Bh,
    StepDownBh,
    Bonferroni,
    By,
    Ebh,
    Naive,
    IndBh,
    /// IndBH^(k) with `k >= 2`.
    IndBhK(usize),
    Su,
    RandPruned {
        inner: Box<Procedure>,
        seed: u64,
    },
}

impl Procedure {
    pub fn needs_graph(&self) -> bool {
        !matches!(
            self,
            Procedure::Bh
                | Procedure::StepDownBh
                | Procedure::Bonferroni
                | Procedure::By
                | Procedure::Ebh
        )
    }
}

impl FromStr for Procedure {
    type Err = Error;

    /// Parses the CLI names `bh, sdbh, bonf, by, ebh, naive, indbh, indbh2,
    /// indbh3, indbhk=K, su, randprune`. `randprune` wraps BH with seed 0.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Ok(match s.as_str() {
            "bh" => Procedure::Bh,
            "sdbh" => Procedure::StepDownBh,
            "bonf" => Procedure::Bonferroni,
            "by" => Procedure::By,
            "ebh" => Procedure::Ebh,
            "naive" => Procedure::Naive,
            "indbh" | "indbh1" => Procedure::IndBh,
            "su" => Procedure::Su,
            "randprune" => Procedure::RandPruned {
                inner: Box::new(Procedure::Bh),
                seed: 0,
            },
            other => {
                let k = other
                    .strip_prefix("indbhk=")
                    .or_else(|| other.strip_prefix("indbh"))
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| Error::param(format!("unknown method '{s}'")))?;
                match k {
                    0 => return Err(Error::param("k must be at least 1")),
                    1 => Procedure::IndBh,
                    k => Procedure::IndBhK(k),
                }
            }
        })
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Procedure::Bh => f.write_str("bh"),
            Procedure::StepDownBh => f.write_str("sdbh"),
            Procedure::Bonferroni => f.write_str("bonf"),
            Procedure::By => f.write_str("by"),
            Procedure::Ebh => f.write_str("ebh"),
            Procedure::Naive => f.write_str("naive"),
            Procedure::IndBh => f.write_str("indbh"),
            Procedure::IndBhK(k) => write!(f, "indbh{k}"),
            Procedure::Su => f.write_str("su"),
            Procedure::RandPruned { inner, .. } => write!(f, "randprune({inner})"),
        }
    }
}

/// A procedure together with its level.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureSpec {
    pub kind: Procedure,
    pub alpha: f64,
}

impl ProcedureSpec {
    pub fn new(kind: Procedure, alpha: f64) -> Result<Self> {
        Level::validate(alpha)?;
        if let Procedure::IndBhK(k) = kind {
            if k < 2 {
                return Err(Error::param("IndBhK needs k >= 2"));
            }
        }
        Ok(ProcedureSpec { kind, alpha })
    }

    /// Runs the procedure. Graph-aware kinds require `graph`; the IndBH
    /// family uses the fast engine.
    pub fn run(
        &self,
        p: &PValues,
        graph: Option<&DependencyGraph>,
        config: &EngineConfig,
    ) -> Result<RejectionSet> {
        let alpha = self.alpha;
        let need =
            || graph.ok_or_else(|| Error::param(format!("method {} needs a graph", self.kind)));
        match &self.kind {
            Procedure::Bh => Ok(bh(p, alpha)),
            Procedure::StepDownBh => Ok(step_down_bh(p, alpha)),
            Procedure::Bonferroni => Ok(bonferroni(p, alpha)),
            Procedure::By => Ok(by(p, alpha)),
            Procedure::Ebh => ebh_comparator(p, alpha),
            Procedure::Naive => naive_adjusted_bh(p, alpha, need()?),
            Procedure::IndBh => engine::indbh_fast_with(p, alpha, need()?, config),
            Procedure::IndBhK(k) => engine::indbh_k_fast_with(p, alpha, need()?, *k, config),
            Procedure::Su => su_fixed_point(p, alpha, need()?),
            Procedure::RandPruned { inner, seed } => {
                randomized_prune_seeded(p, alpha, need()?, inner, *seed, config)
            }
        }
    }
}
