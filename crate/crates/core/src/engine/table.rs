//! Per-component independence-number columns and the bounds derived from them.

use std::sync::Arc;

use rayon::prelude::*;

use super::{EngineConfig, ReducedProblem};
use crate::error::{Error, Result};
use crate::graph::{mis, ComponentIndex, NodeSet};
use crate::pvalues::NO_RANK;

/// Component structure of a reduced problem, shared by every table derived
/// from it.
#[derive(Debug)]
pub(crate) struct Structure {
    pub n: usize,
    pub comps: ComponentIndex,
    pub clique: Vec<bool>,
    /// Maximal independent sets per component in reduced ids; empty for
    /// cliques, whose sets are the singletons.
    pub mis: Vec<Vec<Vec<u32>>>,
    pub all_cliques: bool,
}

impl Structure {
    pub fn build(rp: &ReducedProblem, cfg: &EngineConfig) -> Result<Structure> {
        let g = &rp.sub_graph;
        let comps = g.connected_components();
        let clique: Vec<bool> = comps
            .components
            .iter()
            .map(|c| c.iter().all(|&v| g.degree(v) + 1 == c.len()))
            .collect();
        for (c, &is_clique) in comps.components.iter().zip(&clique) {
            if !is_clique && c.len() > cfg.guard {
                return Err(Error::GuardExceeded {
                    component: rp.kept[c[0]],
                    size: c.len(),
                    limit: cfg.guard,
                });
            }
        }
        let mis = comps
            .components
            .par_iter()
            .zip(clique.par_iter())
            .map(|(c, &is_clique)| {
                if is_clique {
                    return Ok(Vec::new());
                }
                let (sub, map) = g.induced_subgraph(c).expect("component ids in range");
                let sets = mis::enumerate(&sub.closed_bitsets(), cfg.max_sets).ok_or(
                    Error::TooManySets {
                        component: rp.kept[c[0]],
                        limit: cfg.max_sets,
                    },
                )?;
                Ok(sets
                    .into_iter()
                    .map(|s| s.into_iter().map(|v| map[v] as u32).collect())
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let all_cliques = clique.iter().all(|&c| c);
        Ok(Structure {
            n: rp.n(),
            comps,
            clique,
            mis,
            all_cliques,
        })
    }
}

/// Masked ranks: the reduced problem's ranks with a set of nodes forced to
/// p = 1, which never clears a threshold in range.
#[derive(Clone, Copy)]
pub(crate) struct Ranks<'a> {
    pub base: &'a [u32],
    pub mask: &'a NodeSet,
}

impl Ranks<'_> {
    #[inline]
    pub fn get(&self, j: usize) -> u32 {
        if self.mask.contains(j) {
            NO_RANK
        } else {
            self.base[j]
        }
    }
}

/// One component's column `r -> V[k][r]`, stored as the step positions:
/// `V[k][r] = #{v : steps[v] <= r}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    steps: Vec<u32>,
}

impl Column {
    #[inline]
    pub fn value(&self, r: usize) -> usize {
        self.steps.partition_point(|&s| s as usize <= r)
    }

    pub fn steps(&self) -> &[u32] {
        &self.steps
    }

    pub(crate) fn compute(st: &Structure, k: usize, ranks: Ranks<'_>) -> Column {
        let members = &st.comps.components[k];
        if st.clique[k] {
            let min = members
                .iter()
                .map(|&j| ranks.get(j))
                .min()
                .unwrap_or(NO_RANK);
            let steps = if min == NO_RANK {
                Vec::new()
            } else {
                vec![min]
            };
            return Column { steps };
        }
        Column {
            steps: lowest_order_stats(st.mis[k].iter().map(|s| s.as_slice()), ranks, None),
        }
    }
}

/// For each `v`, the smallest `v`-th order statistic of finite ranks over the
/// given sets, optionally skipping one node.
pub(crate) fn lowest_order_stats<'s>(
    sets: impl Iterator<Item = &'s [u32]>,
    ranks: Ranks<'_>,
    skip: Option<u32>,
) -> Vec<u32> {
    let mut best: Vec<u32> = Vec::new();
    let mut buf: Vec<u32> = Vec::new();
    for s in sets {
        buf.clear();
        buf.extend(
            s.iter()
                .filter(|&&j| Some(j) != skip)
                .map(|&j| ranks.get(j as usize))
                .filter(|&r| r != NO_RANK),
        );
        buf.sort_unstable();
        for (v, &r) in buf.iter().enumerate() {
            if v < best.len() {
                best[v] = best[v].min(r);
            } else {
                best.push(r);
            }
        }
    }
    best
}

/// Cached independence numbers `V[k][r]` of each component restricted to
/// `Q(r)`, for a reduced problem and a mask.
#[derive(Debug, Clone)]
pub struct IndNumTable {
    pub(crate) structure: Arc<Structure>,
    pub(crate) columns: Vec<Arc<Column>>,
    r_bar: usize,
}

impl IndNumTable {
    pub(crate) fn new(structure: Arc<Structure>, columns: Vec<Arc<Column>>) -> Self {
        let mut t = IndNumTable {
            structure,
            columns,
            r_bar: 0,
        };
        let sums = Aggregates::new(&t);
        t.r_bar = (1..=t.structure.n)
            .rev()
            .find(|&r| sums.s[r] >= r)
            .unwrap_or(0);
        t
    }

    /// `max{r <= n : sum_k V[k][r] >= r}`; no masked table can reject more.
    pub fn r_bar(&self) -> usize {
        self.r_bar
    }

    pub fn component_count(&self) -> usize {
        self.columns.len()
    }

    pub fn components(&self) -> &ComponentIndex {
        &self.structure.comps
    }

    pub fn is_clique(&self, k: usize) -> bool {
        self.structure.clique[k]
    }

    /// Maximal independent sets of component `k` in reduced ids.
    pub fn component_sets(&self, k: usize) -> Vec<Vec<usize>> {
        if self.structure.clique[k] {
            self.structure.comps.components[k]
                .iter()
                .map(|&j| vec![j])
                .collect()
        } else {
            self.structure.mis[k]
                .iter()
                .map(|s| s.iter().map(|&j| j as usize).collect())
                .collect()
        }
    }

    pub fn value(&self, k: usize, r: usize) -> usize {
        self.columns[k].value(r)
    }

    /// `V[k][1..=n]`.
    pub fn column_values(&self, k: usize) -> Vec<usize> {
        (1..=self.structure.n).map(|r| self.value(k, r)).collect()
    }

    pub fn column(&self, k: usize) -> &Arc<Column> {
        &self.columns[k]
    }

    /// Whether column `k` is the same allocation in both tables.
    pub fn shares_column(&self, other: &IndNumTable, k: usize) -> bool {
        Arc::ptr_eq(&self.columns[k], &other.columns[k])
    }
}

/// Prefix aggregates over a table: `s[r] = sum_k V[k][r]` and
/// `mx[r] = max_k V[k][r]` for `r = 0..=n`.
pub(crate) struct Aggregates {
    pub s: Vec<usize>,
    pub mx: Vec<usize>,
}

impl Aggregates {
    pub fn new(t: &IndNumTable) -> Self {
        let n = t.structure.n;
        let mut hist = vec![0usize; n + 1];
        let mut best = vec![0usize; n + 1];
        for c in &t.columns {
            for (v, &r) in c.steps.iter().enumerate() {
                let r = r as usize;
                hist[r] += 1;
                best[r] = best[r].max(v + 1);
            }
        }
        let mut s = vec![0usize; n + 1];
        let mut mx = vec![0usize; n + 1];
        for r in 1..=n {
            s[r] = s[r - 1] + hist[r];
            mx[r] = mx[r - 1].max(best[r]);
        }
        Aggregates { s, mx }
    }

    pub fn beta_plus(&self) -> usize {
        (1..self.s.len())
            .rev()
            .find(|&r| self.s[r] >= r)
            .unwrap_or(0)
    }

    pub fn beta_minus(&self) -> usize {
        (1..self.s.len())
            .rev()
            .find(|&r| self.s[r] + 1 >= r + self.mx[r])
            .unwrap_or(0)
    }

    /// `max{r : S(r) - V_k(r) + 1 >= r}` for one column.
    pub fn beta_minus_for(&self, col: &Column) -> usize {
        (1..self.s.len())
            .rev()
            .find(|&r| self.s[r] + 1 >= r + col.value(r))
            .unwrap_or(0)
    }
}

/// Exact `beta_i = max{r : 1 + IndNum_{-i}(r) + S(r) - V_k(r) >= r}` where
/// `k` is the component of `i`, scanning `r` downward from `n` and stopping
/// at `floor` (returns `floor - 1` when no `r >= floor` qualifies).
pub(crate) fn beta_scan(
    st: &Structure,
    t: &IndNumTable,
    agg: &Aggregates,
    ranks: Ranks<'_>,
    i: usize,
    floor: usize,
) -> usize {
    let k = st.comps.component_of[i];
    let bp = if st.clique[k] {
        Vec::new()
    } else {
        let me = i as u32;
        lowest_order_stats(
            st.mis[k]
                .iter()
                .filter(|s| s.contains(&me))
                .map(|s| s.as_slice()),
            ranks,
            Some(me),
        )
    };
    let col = &t.columns[k];
    let floor = floor.max(1);
    for r in (floor..=st.n).rev() {
        let within = bp.partition_point(|&s| s as usize <= r);
        if 1 + within + agg.s[r] >= r + col.value(r) {
            return r;
        }
    }
    floor - 1
}
