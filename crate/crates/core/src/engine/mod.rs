//! Fast exact IndBH and IndBH^(k).
//!
//! The pipeline restricts the problem to the BH rejection set, splits the
//! reduced graph into components, caches per-component independence numbers
//! as a function of the rejection count, classifies most hypotheses with
//! cheap bounds and resolves the rest exactly. Higher levels first accept
//! everything found by the previous level or by the clique-relaxed subset,
//! drop hypotheses that cannot clear `1 + |previous level|`, and recurse on
//! the remainder with memoisation.
//!
//! Results are identical to [`crate::procedures::indbh_k_reference`].

mod star;
mod table;

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use table::{beta_scan, Aggregates, Ranks, Structure};
pub use table::{Column, IndNumTable};

use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, NodeSet, DEFAULT_GUARD, DEFAULT_MAX_SETS};
use crate::procedures::{step_up, step_up_cutoff};
use crate::pvalues::{Level, PValues, RejectionSet, NO_RANK};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    /// Largest non-clique component for which independent sets are enumerated.
    pub guard: usize,
    /// Cap on the number of maximal independent sets per component.
    pub max_sets: usize,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            guard: DEFAULT_GUARD,
            max_sets: DEFAULT_MAX_SETS,
            threads: None,
        }
    }
}

/// Work counters from one engine run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EngineStats {
    /// Evaluations of the level-one procedure on some mask.
    pub base_calls: usize,
    /// Hypotheses resolved by an exact local threshold.
    pub exact_thresholds: usize,
    /// Hypotheses at level two or above resolved by recursing on a mask.
    pub recursive_calls: usize,
    pub memo_hits: usize,
}

/// The problem restricted to `Q(r_bar)`, by default the BH rejection set.
///
/// Thresholds keep the original `alpha` and `m`, so that `alpha * r / m`
/// is evaluated exactly as on the full problem; `alpha_adj` is the
/// equivalent level for a stand-alone problem on `kept`.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    /// Original ids of the kept hypotheses, increasing.
    pub kept: Vec<usize>,
    pub sub_p: Vec<f64>,
    pub sub_graph: DependencyGraph,
    pub level: Level,
    pub alpha_adj: f64,
    ranks: Vec<u32>,
}

impl ReducedProblem {
    pub fn n(&self) -> usize {
        self.kept.len()
    }

    /// Rank of reduced node `j`: the least `r <= n` with `p_j <= alpha r / m`.
    pub fn rank(&self, j: usize) -> u32 {
        self.ranks[j]
    }

    pub fn to_original(&self, reduced: &RejectionSet) -> RejectionSet {
        RejectionSet::from_sorted(reduced.iter().map(|j| self.kept[j]).collect())
    }

    pub fn to_reduced(&self, original: usize) -> Option<usize> {
        self.kept.binary_search(&original).ok()
    }

    /// Whether a masked p-value of one still clears the top threshold, in
    /// which case every kept hypothesis is rejected at every level.
    fn saturated(&self) -> bool {
        self.n() > 0 && 1.0 <= self.level.threshold(self.n())
    }
}

fn validate(p: &PValues, alpha: f64, g: &DependencyGraph) -> Result<()> {
    Level::validate(alpha)?;
    if g.m() != p.len() {
        return Err(Error::LengthMismatch {
            expected: g.m(),
            got: p.len(),
        });
    }
    Ok(())
}

/// Restricts to the BH rejection set.
pub fn reduce_to_bh(p: &PValues, alpha: f64, g: &DependencyGraph) -> Result<ReducedProblem> {
    validate(p, alpha, g)?;
    let r = step_up_cutoff(p, Level::new(alpha, p.len()));
    reduce_with_bound(p, alpha, g, r)
}

/// Restricts to `Q(r_bar) = {i : p_i <= alpha r_bar / m}`; `r_bar` must be
/// at least the BH rejection count.
pub fn reduce_with_bound(
    p: &PValues,
    alpha: f64,
    g: &DependencyGraph,
    r_bar: usize,
) -> Result<ReducedProblem> {
    validate(p, alpha, g)?;
    let m = p.len();
    let level = Level::new(alpha, m);
    if r_bar < step_up_cutoff(p, level) {
        return Err(Error::param("r_bar is below the BH rejection count"));
    }
    let kept: Vec<usize> = if r_bar == 0 {
        Vec::new()
    } else {
        let t = level.threshold(r_bar.min(m));
        (0..m).filter(|&i| p[i] <= t).collect()
    };
    let (sub_graph, _) = g.induced_subgraph(&kept)?;
    let n = kept.len();
    let sub_p: Vec<f64> = kept.iter().map(|&i| p[i]).collect();
    let ranks = sub_p.iter().map(|&v| level.rank(v, n)).collect();
    Ok(ReducedProblem {
        alpha_adj: alpha * n as f64 / m as f64,
        kept,
        sub_p,
        sub_graph,
        level,
        ranks,
    })
}

fn mask_set(rp: &ReducedProblem, masked: &[usize]) -> NodeSet {
    NodeSet::from_iter_with_capacity(rp.n(), masked.iter().copied())
}

/// Builds the unmasked table for a reduced problem.
pub fn precompute_table(rp: &ReducedProblem, cfg: &EngineConfig) -> Result<IndNumTable> {
    let st = Arc::new(Structure::build(rp, cfg)?);
    Ok(table_for(rp, st))
}

fn table_for(rp: &ReducedProblem, st: Arc<Structure>) -> IndNumTable {
    let empty = NodeSet::new(rp.n());
    let ranks = Ranks {
        base: &rp.ranks,
        mask: &empty,
    };
    let columns = (0..st.comps.len())
        .into_par_iter()
        .map(|k| Arc::new(Column::compute(&st, k, ranks)))
        .collect();
    IndNumTable::new(st, columns)
}

/// The table for `rp` with the reduced nodes in `masked` set to one. Only
/// components touching the mask are recomputed; other columns are shared.
pub fn update_table(t: &IndNumTable, rp: &ReducedProblem, masked: &[usize]) -> IndNumTable {
    let mask = mask_set(rp, masked);
    update_with(t, &rp.ranks, &mask)
}

fn update_with(t: &IndNumTable, base: &[u32], mask: &NodeSet) -> IndNumTable {
    let st = &t.structure;
    let mut touched = vec![false; st.comps.len()];
    for j in mask.iter() {
        touched[st.comps.component_of[j]] = true;
    }
    let ranks = Ranks { base, mask };
    let columns = t
        .columns
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if touched[k] {
                Arc::new(Column::compute(st, k, ranks))
            } else {
                Arc::clone(c)
            }
        })
        .collect();
    IndNumTable::new(Arc::clone(&t.structure), columns)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Reject,
    NoReject,
    Undecided,
}

/// Bounds on the rejection count used by the cheap checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckBounds {
    pub beta_plus: usize,
    pub beta_minus: usize,
    /// Per component of the reduced graph.
    pub beta_minus_i: Vec<usize>,
}

/// Classifies every reduced node for IndBH on the masked vector. `t` must
/// be the table for the same mask.
pub fn cheap_checks(
    t: &IndNumTable,
    rp: &ReducedProblem,
    masked: &[usize],
) -> (CheckBounds, Vec<Verdict>) {
    let mask = mask_set(rp, masked);
    let ranks = Ranks {
        base: &rp.ranks,
        mask: &mask,
    };
    let agg = Aggregates::new(t);
    let bp = agg.beta_plus();
    let bm = agg.beta_minus();
    let bmi: Vec<usize> = t.columns.iter().map(|c| agg.beta_minus_for(c)).collect();
    let verdicts = (0..rp.n())
        .map(|j| {
            let r = ranks.get(j);
            if r == NO_RANK {
                return Verdict::NoReject;
            }
            let r = r as usize;
            if r <= bm || r <= bmi[t.structure.comps.component_of[j]] {
                Verdict::Reject
            } else if r > bp {
                Verdict::NoReject
            } else {
                Verdict::Undecided
            }
        })
        .collect();
    (
        CheckBounds {
            beta_plus: bp,
            beta_minus: bm,
            beta_minus_i: bmi,
        },
        verdicts,
    )
}

/// The exact local rejection count `beta_i` for reduced node `i` on the
/// masked vector: `i` is rejected iff its rank is at most this value.
pub fn beta_exact(rp: &ReducedProblem, t: &IndNumTable, masked: &[usize], i: usize) -> usize {
    let mask = mask_set(rp, masked);
    let ranks = Ranks {
        base: &rp.ranks,
        mask: &mask,
    };
    let agg = Aggregates::new(t);
    beta_scan(&t.structure, t, &agg, ranks, i, 1)
}

type MemoKey = (usize, Vec<u32>);

struct Solver<'a> {
    rp: &'a ReducedProblem,
    st: Arc<Structure>,
    table: IndNumTable,
    memo: Mutex<HashMap<MemoKey, Arc<Vec<u32>>>>,
    base_calls: AtomicUsize,
    exact: AtomicUsize,
    recursive: AtomicUsize,
    hits: AtomicUsize,
}

impl<'a> Solver<'a> {
    fn new(rp: &'a ReducedProblem, cfg: &EngineConfig) -> Result<Self> {
        let st = Arc::new(Structure::build(rp, cfg)?);
        // Clique-only problems are answered by the relaxed path alone.
        let table = if st.all_cliques {
            IndNumTable::new(st, Vec::new())
        } else {
            table_for(rp, st)
        };
        Ok(Solver {
            rp,
            st: Arc::clone(&table.structure),
            table,
            memo: Mutex::new(HashMap::new()),
            base_calls: AtomicUsize::new(0),
            exact: AtomicUsize::new(0),
            recursive: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        })
    }

    fn stats(&self) -> EngineStats {
        EngineStats {
            base_calls: self.base_calls.load(Ordering::Relaxed),
            exact_thresholds: self.exact.load(Ordering::Relaxed),
            recursive_calls: self.recursive.load(Ordering::Relaxed),
            memo_hits: self.hits.load(Ordering::Relaxed),
        }
    }

    /// IndBH^(l) on the reduced problem with `mask` (sorted reduced ids).
    fn level_set(&self, l: usize, mask: &[u32]) -> Arc<Vec<u32>> {
        let key = (l, mask.to_vec());
        if let Some(v) = self.memo.lock().expect("memo lock").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Arc::clone(v);
        }
        let out = Arc::new(self.compute(l, mask));
        self.memo
            .lock()
            .expect("memo lock")
            .entry(key)
            .or_insert_with(|| Arc::clone(&out));
        out
    }

    fn compute(&self, l: usize, mask: &[u32]) -> Vec<u32> {
        let n = self.rp.n();
        let maskset = NodeSet::from_iter_with_capacity(n, mask.iter().map(|&j| j as usize));
        let ranks = Ranks {
            base: &self.rp.ranks,
            mask: &maskset,
        };
        if self.st.all_cliques {
            return star::Star::new(&self.st, ranks, l).rejections(&self.st, l, ranks);
        }
        if l == 1 {
            return self.base(ranks, &maskset);
        }
        let prev = self.level_set(l - 1, mask);
        let relaxed = star::Star::new(&self.st, ranks, l).rejections(&self.st, l, ranks);
        let mut accepted = NodeSet::from_iter_with_capacity(n, prev.iter().map(|&j| j as usize));
        for &j in &relaxed {
            accepted.insert(j as usize);
        }
        let cap = 1 + prev.len();
        let undecided: Vec<usize> = (0..n)
            .filter(|&j| {
                !accepted.contains(j) && (ranks.get(j) as usize) <= cap && ranks.get(j) != NO_RANK
            })
            .collect();
        let extra: Vec<usize> = undecided
            .par_iter()
            .filter_map(|&i| {
                self.recursive.fetch_add(1, Ordering::Relaxed);
                let mut m2: Vec<u32> = mask.to_vec();
                m2.push(i as u32);
                m2.extend(self.rp.sub_graph.neighbors(i).map(|j| j as u32));
                m2.sort_unstable();
                m2.dedup();
                let inner = self.level_set(l - 1, &m2);
                (ranks.get(i) as usize <= 1 + inner.len()).then_some(i)
            })
            .collect();
        for i in extra {
            accepted.insert(i);
        }
        accepted.iter().map(|j| j as u32).collect()
    }

    /// IndBH on the masked vector via the table, cheap checks and exact
    /// local thresholds.
    fn base(&self, ranks: Ranks<'_>, mask: &NodeSet) -> Vec<u32> {
        self.base_calls.fetch_add(1, Ordering::Relaxed);
        let st = &self.st;
        let t = update_with(&self.table, &self.rp.ranks, mask);
        let agg = Aggregates::new(&t);
        let bp = agg.beta_plus();
        let bm = agg.beta_minus();
        let mut out = Vec::new();
        let mut pending: Vec<Vec<usize>> = vec![Vec::new(); st.comps.len()];
        for j in 0..st.n {
            let r = ranks.get(j);
            if r == NO_RANK || r as usize > bp {
                continue;
            }
            if r as usize <= bm {
                out.push(j);
            } else {
                pending[st.comps.component_of[j]].push(j);
            }
        }
        let undecided: Vec<usize> = pending
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_empty())
            .flat_map(|(k, v)| {
                let bmi = agg.beta_minus_for(&t.columns[k]);
                v.iter()
                    .filter(|&&j| {
                        if ranks.get(j) as usize <= bmi {
                            out.push(j);
                            false
                        } else {
                            true
                        }
                    })
                    .copied()
                    .collect::<Vec<_>>()
            })
            .collect();
        let exact: Vec<usize> = undecided
            .par_iter()
            .filter_map(|&i| {
                self.exact.fetch_add(1, Ordering::Relaxed);
                let r = ranks.get(i) as usize;
                (beta_scan(st, &t, &agg, ranks, i, r) >= r).then_some(i)
            })
            .collect();
        out.extend(exact);
        out.sort_unstable();
        out.into_iter().map(|j| j as u32).collect()
    }
}

fn with_pool<T: Send>(cfg: &EngineConfig, f: impl FnOnce() -> T + Send) -> Result<T> {
    match cfg.threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::param(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// IndBH^(k) on a reduced problem; the result is in reduced ids.
pub fn solve_reduced(
    rp: &ReducedProblem,
    k: usize,
    cfg: &EngineConfig,
) -> Result<(RejectionSet, EngineStats)> {
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    if rp.n() == 0 {
        return Ok((RejectionSet::empty(), EngineStats::default()));
    }
    if rp.saturated() {
        return Ok((
            RejectionSet::from_sorted((0..rp.n()).collect()),
            EngineStats::default(),
        ));
    }
    with_pool(cfg, || {
        let solver = Solver::new(rp, cfg)?;
        let set = solver.level_set(k, &[]);
        Ok((
            RejectionSet::from_sorted(set.iter().map(|&j| j as usize).collect()),
            solver.stats(),
        ))
    })?
}

pub fn indbh_fast(p: &PValues, alpha: f64, g: &DependencyGraph) -> Result<RejectionSet> {
    indbh_k_fast_with(p, alpha, g, 1, &EngineConfig::default())
}

pub fn indbh_fast_with(
    p: &PValues,
    alpha: f64,
    g: &DependencyGraph,
    cfg: &EngineConfig,
) -> Result<RejectionSet> {
    indbh_k_fast_with(p, alpha, g, 1, cfg)
}

pub fn indbh_k_fast(
    p: &PValues,
    alpha: f64,
    g: &DependencyGraph,
    k: usize,
) -> Result<RejectionSet> {
    indbh_k_fast_with(p, alpha, g, k, &EngineConfig::default())
}

pub fn indbh_k_fast_with(
    p: &PValues,
    alpha: f64,
    g: &DependencyGraph,
    k: usize,
    cfg: &EngineConfig,
) -> Result<RejectionSet> {
    indbh_k_fast_stats(p, alpha, g, k, cfg).map(|(r, _)| r)
}

/// As [`indbh_k_fast_with`], also returning work counters.
pub fn indbh_k_fast_stats(
    p: &PValues,
    alpha: f64,
    g: &DependencyGraph,
    k: usize,
    cfg: &EngineConfig,
) -> Result<(RejectionSet, EngineStats)> {
    let rp = reduce_to_bh(p, alpha, g)?;
    let (set, stats) = solve_reduced(&rp, k, cfg)?;
    Ok((rp.to_original(&set), stats))
}

/// IndBH for a graph made of disjoint cliques: only the smallest p-value of
/// each block matters, so the answer is a single thresholding step.
pub fn clique_shortcut(p: &PValues, alpha: f64, blocks: &[Vec<usize>]) -> Result<RejectionSet> {
    Level::validate(alpha)?;
    let m = p.len();
    let mut seen = vec![false; m];
    let mut keep = vec![1.0; m];
    for b in blocks {
        let mut best: Option<usize> = None;
        for &i in b {
            if i >= m {
                return Err(Error::NodeOutOfRange { node: i, m });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::param(format!(
                    "node {} appears in more than one block",
                    i + 1
                )));
            }
            if best.is_none_or(|j| p[i] < p[j]) {
                best = Some(i);
            }
        }
        match best {
            Some(j) => keep[j] = p[j],
            None => return Err(Error::param("blocks must be non-empty")),
        }
    }
    if let Some(i) = seen.iter().position(|&s| !s) {
        return Err(Error::param(format!(
            "node {} is not covered by any block",
            i + 1
        )));
    }
    let level = Level::new(alpha, m);
    let r = step_up(&keep, level).len();
    if r == 0 {
        return Ok(RejectionSet::empty());
    }
    let t = level.threshold(r);
    Ok(RejectionSet::from_sorted(
        (0..m).filter(|&i| p[i] <= t).collect(),
    ))
}
