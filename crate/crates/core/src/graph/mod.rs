//! Dependency graphs and the exact graph routines the procedures rely on.
//!
//! Nodes are 0-based. Self-edges are implicit: `neighbors(i)` yields the
//! punctured neighbourhood and never `i` itself.

mod bitset;
pub(crate) mod mis;

pub use bitset::NodeSet;

use crate::error::{Error, Result};
use crate::pvalues::{Level, PValues};

/// Default per-component node limit for exact independent-set enumeration.
pub const DEFAULT_GUARD: usize = 64;
/// Default cap on the number of maximal independent sets per enumeration.
pub const DEFAULT_MAX_SETS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Repr {
    /// Sorted neighbour lists without self-loops.
    Lists(Vec<Vec<usize>>),
    /// Consecutive cliques of the given size (the last one may be shorter).
    Blocks(usize),
    /// `i ~ j` iff `0 < |i - j| <= reach`.
    Banded(usize),
}

/// Undirected graph on `0..m` encoding known independence between p-values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    m: usize,
    repr: Repr,
}

/// The structural family a graph was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    General,
    Blocks { size: usize },
    Banded { reach: usize },
}

impl DependencyGraph {
    /// Builds a graph from 0-based edges. Repeated pairs and self-pairs are
    /// accepted and dropped.
    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); m];
        for &(a, b) in edges {
            for node in [a, b] {
                if node >= m {
                    return Err(Error::NodeOutOfRange { node, m });
                }
            }
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        Ok(DependencyGraph {
            m,
            repr: Repr::Lists(adj),
        })
    }

    pub fn empty(m: usize) -> Self {
        DependencyGraph {
            m,
            repr: Repr::Blocks(1),
        }
    }

    pub fn complete(m: usize) -> Self {
        DependencyGraph {
            m,
            repr: Repr::Blocks(m.max(1)),
        }
    }

    /// Consecutive cliques `{0..b}, {b..2b}, ...`.
    pub fn blocks(m: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::param("block size must be positive"));
        }
        Ok(DependencyGraph {
            m,
            repr: Repr::Blocks(size.min(m.max(1))),
        })
    }

    /// Banded graph with `i ~ j` iff `|i - j| <= floor((bandwidth - 1) / 2)`.
    pub fn banded(m: usize, bandwidth: usize) -> Result<Self> {
        if bandwidth == 0 {
            return Err(Error::param("bandwidth must be positive"));
        }
        Ok(DependencyGraph {
            m,
            repr: Repr::Banded((bandwidth - 1) / 2),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> GraphKind {
        match self.repr {
            Repr::Lists(_) => GraphKind::General,
            Repr::Blocks(size) => GraphKind::Blocks { size },
            Repr::Banded(reach) => GraphKind::Banded { reach },
        }
    }

    /// The block partition when the graph was built as consecutive cliques.
    pub fn block_partition(&self) -> Option<Vec<Vec<usize>>> {
        match self.repr {
            Repr::Blocks(b) => Some(
                (0..self.m)
                    .step_by(b)
                    .map(|s| (s..(s + b).min(self.m)).collect())
                    .collect(),
            ),
            _ => None,
        }
    }

    /// The punctured neighbourhood of `i`, in increasing order.
    pub fn neighbors(&self, i: usize) -> Neighbors<'_> {
        match &self.repr {
            Repr::Lists(adj) => Neighbors::List(adj[i].iter()),
            Repr::Blocks(b) => {
                let start = i / b * b;
                Neighbors::Range {
                    cur: start,
                    end: (start + b).min(self.m),
                    skip: i,
                }
            }
            Repr::Banded(w) => Neighbors::Range {
                cur: i.saturating_sub(*w),
                end: (i + w + 1).min(self.m),
                skip: i,
            },
        }
    }

    pub fn degree(&self, i: usize) -> usize {
        match &self.repr {
            Repr::Lists(adj) => adj[i].len(),
            _ => self.neighbors(i).count(),
        }
    }

    pub fn max_degree(&self) -> usize {
        match self.repr {
            Repr::Blocks(b) => b.min(self.m).saturating_sub(1),
            _ => (0..self.m).map(|i| self.degree(i)).max().unwrap_or(0),
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j || i >= self.m || j >= self.m {
            return false;
        }
        match &self.repr {
            Repr::Lists(adj) => adj[i].binary_search(&j).is_ok(),
            Repr::Blocks(b) => i / b == j / b,
            Repr::Banded(w) => i.abs_diff(j) <= *w,
        }
    }

    pub fn edge_count(&self) -> usize {
        (0..self.m).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    /// All edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.m).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    /// Closed neighbourhood `N_i`, sorted.
    pub fn closed_neighborhood(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.neighbors(i).collect();
        let pos = v.partition_point(|&j| j < i);
        v.insert(pos, i);
        v
    }

    /// Whether the whole graph is a single clique.
    pub fn is_clique(&self) -> bool {
        (0..self.m).all(|i| self.degree(i) + 1 == self.m)
    }

    pub fn connected_components(&self) -> ComponentIndex {
        let mut component_of = vec![usize::MAX; self.m];
        let mut components = Vec::new();
        let mut stack = Vec::new();
        for s in 0..self.m {
            if component_of[s] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = vec![s];
            component_of[s] = id;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for u in self.neighbors(v) {
                    if component_of[u] == usize::MAX {
                        component_of[u] = id;
                        members.push(u);
                        stack.push(u);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        ComponentIndex {
            component_of,
            components,
        }
    }

    /// The subgraph induced by `nodes` together with the map from new ids to
    /// old ids (increasing, so relative order is preserved).
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<(DependencyGraph, Vec<usize>)> {
        let mut keep = nodes.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if let Some(&node) = keep.iter().find(|&&v| v >= self.m) {
            return Err(Error::NodeOutOfRange { node, m: self.m });
        }
        let adj = keep
            .iter()
            .map(|&v| {
                self.neighbors(v)
                    .filter_map(|u| keep.binary_search(&u).ok())
                    .collect()
            })
            .collect();
        Ok((
            DependencyGraph {
                m: keep.len(),
                repr: Repr::Lists(adj),
            },
            keep,
        ))
    }

    pub(crate) fn closed_bitsets(&self) -> Vec<NodeSet> {
        (0..self.m)
            .map(|i| {
                let mut s = NodeSet::from_iter_with_capacity(self.m, self.neighbors(i));
                s.insert(i);
                s
            })
            .collect()
    }

    /// All maximal independent sets, each sorted, in lexicographic order.
    /// The 0-node graph has the single set `{}`. No size guard is applied.
    pub fn maximal_independent_sets(&self) -> Vec<Vec<usize>> {
        mis::enumerate(&self.closed_bitsets(), usize::MAX).expect("unbounded enumeration")
    }

    /// As [`maximal_independent_sets`](Self::maximal_independent_sets), but
    /// refuses components larger than `guard` nodes and outputs larger than
    /// `max_sets` sets.
    pub fn try_maximal_independent_sets(
        &self,
        guard: usize,
        max_sets: usize,
    ) -> Result<Vec<Vec<usize>>> {
        let comps = self.connected_components();
        for c in &comps.components {
            if c.len() > guard {
                return Err(Error::GuardExceeded {
                    component: c[0],
                    size: c.len(),
                    limit: guard,
                });
            }
        }
        mis::enumerate(&self.closed_bitsets(), max_sets).ok_or(Error::TooManySets {
            component: 0,
            limit: max_sets,
        })
    }

    /// Size of a largest independent set; 0 for the 0-node graph.
    pub fn independence_number(&self) -> usize {
        let comps = self.connected_components();
        comps
            .components
            .iter()
            .map(|c| {
                if c.len() == 1 {
                    return 1;
                }
                let (sub, _) = self.induced_subgraph(c).expect("component nodes in range");
                let nb = sub.closed_bitsets();
                mis::independence_number(&nb, &NodeSet::full(sub.m))
            })
            .sum()
    }
}

/// Iterator over a punctured neighbourhood.
pub enum Neighbors<'a> {
    List(std::slice::Iter<'a, usize>),
    Range { cur: usize, end: usize, skip: usize },
}

impl Iterator for Neighbors<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        match self {
            Neighbors::List(it) => it.next().copied(),
            Neighbors::Range { cur, end, skip } => {
                if *cur == *skip {
                    *cur += 1;
                }
                if *cur < *end {
                    *cur += 1;
                    Some(*cur - 1)
                } else {
                    None
                }
            }
        }
    }
}

/// Connected components, ordered by smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentIndex {
    pub component_of: Vec<usize>,
    pub components: Vec<Vec<usize>>,
}

impl ComponentIndex {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// `{i} ∪ S` where `S` is a largest independent set of the graph induced by
/// `Q_{-i}(r) = {j ∉ N_i : p_j <= alpha r / m}`. Among largest sets the
/// lexicographically smallest is chosen. The result is sorted.
pub fn largest_ind_containing(
    g: &DependencyGraph,
    p: &PValues,
    alpha: f64,
    i: usize,
    r: usize,
) -> Result<Vec<usize>> {
    let m = g.m();
    if p.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: p.len(),
        });
    }
    if i >= m {
        return Err(Error::NodeOutOfRange { node: i, m });
    }
    let level = Level::new(alpha, m);
    let t = level.threshold(r);
    let q: Vec<usize> = (0..m)
        .filter(|&j| j != i && !g.has_edge(i, j) && p[j] <= t)
        .collect();
    let (sub, map) = g.induced_subgraph(&q)?;
    let sets = sub.maximal_independent_sets();
    let best_len = sets.iter().map(Vec::len).max().unwrap_or(0);
    // `sets` is sorted lexicographically and `map` is increasing, so the
    // first set of maximal size is the smallest in original ids as well.
    let best = sets
        .into_iter()
        .find(|s| s.len() == best_len)
        .unwrap_or_default();
    let mut out: Vec<usize> = best.into_iter().map(|v| map[v]).collect();
    out.push(i);
    out.sort_unstable();
    Ok(out)
}
