//! Worst-case FDR bounds for BH under a dependency graph, and the
//! graph-corrected BH level for equal blocks.

use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, GraphKind};
use crate::pvalues::harmonic;

/// A partition of `0..m` into cliques of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueCover {
    m: usize,
    blocks: Vec<Vec<usize>>,
}

impl CliqueCover {
    /// Validates that `blocks` partition `0..m` and, when a graph is given,
    /// that every block is a clique of it.
    pub fn new(m: usize, blocks: Vec<Vec<usize>>, g: Option<&DependencyGraph>) -> Result<Self> {
        let mut seen = vec![false; m];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::param("cover blocks must be non-empty"));
            }
            for &i in b {
                if i >= m {
                    return Err(Error::NodeOutOfRange { node: i, m });
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::param(format!(
                        "node {} appears in two cover blocks",
                        i + 1
                    )));
                }
            }
            if let Some(g) = g {
                for (x, &i) in b.iter().enumerate() {
                    if let Some(&j) = b[x + 1..].iter().find(|&&j| !g.has_edge(i, j)) {
                        return Err(Error::param(format!(
                            "cover block containing {} and {} is not a clique",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::param(format!("node {} is not covered", i + 1)));
        }
        Ok(CliqueCover { m, blocks })
    }

    pub fn singletons(m: usize) -> Self {
        CliqueCover {
            m,
            blocks: (0..m).map(|i| vec![i]).collect(),
        }
    }

    /// Consecutive blocks of size `b` (the last may be shorter).
    pub fn equal_blocks(m: usize, b: usize) -> Result<Self> {
        if b == 0 {
            return Err(Error::param("block size must be positive"));
        }
        Ok(CliqueCover {
            m,
            blocks: (0..m)
                .step_by(b)
                .map(|s| (s..(s + b).min(m)).collect())
                .collect(),
        })
    }

    /// The natural cover of a structured graph, or a greedy one otherwise.
    pub fn for_graph(g: &DependencyGraph) -> Self {
        if let Some(blocks) = g.block_partition() {
            return CliqueCover { m: g.m(), blocks };
        }
        let m = g.m();
        let mut used = vec![false; m];
        let mut blocks = Vec::new();
        for i in 0..m {
            if used[i] {
                continue;
            }
            used[i] = true;
            let mut b = vec![i];
            for j in g.neighbors(i) {
                if !used[j] && b.iter().all(|&x| g.has_edge(x, j)) {
                    used[j] = true;
                    b.push(j);
                }
            }
            blocks.push(b);
        }
        CliqueCover { m, blocks }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
}

/// `alpha / m * sum_i L_i` with `L_i = n - (n - 1) m^{-1/(n-1)}` for
/// `n = |N_i|`, and `L_i = 1` for isolated nodes.
pub fn fdr_upper_bound(g: &DependencyGraph, alpha: f64) -> f64 {
    let m = g.m();
    if m == 0 {
        return 0.0;
    }
    let mf = m as f64;
    let term = |n: usize| -> f64 {
        if n <= 1 {
            1.0
        } else {
            let k = (n - 1) as f64;
            n as f64 - k * mf.powf(-1.0 / k)
        }
    };
    let total: f64 = match g.kind() {
        GraphKind::Blocks { size } => {
            let full = m / size;
            let rest = m % size;
            full as f64 * size as f64 * term(size) + rest as f64 * term(rest)
        }
        _ => (0..m).map(|i| term(g.degree(i) + 1)).sum(),
    };
    alpha * (total / mf)
}

/// `1 - prod_k (1 - (alpha b_k / m) H_{b_k})` for a clique cover. Every
/// factor must be positive.
pub fn fdr_lower_bound(cover: &CliqueCover, alpha: f64) -> Result<f64> {
    let m = cover.m as f64;
    let mut log_prod = 0.0;
    for b in &cover.blocks {
        let x = alpha * b.len() as f64 / m * harmonic(b.len());
        if x >= 1.0 {
            return Err(Error::param(format!(
                "alpha {alpha} is too large for the cover block starting at node {}",
                b[0] + 1
            )));
        }
        log_prod += (-x).ln_1p();
    }
    Ok(-log_prod.exp_m1())
}

/// The largest level `a` with `1 - (1 - (a b / m) H_b)^{m / b} <= alpha`,
/// in closed form `m (1 - (1 - alpha)^{b/m}) / (b H_b)`.
pub fn bygraph_level(m: usize, b: usize, alpha: f64) -> Result<f64> {
    if b == 0 || b > m {
        return Err(Error::param(format!(
            "block size must be in 1..={m}, got {b}"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let (mf, bf) = (m as f64, b as f64);
    let one_minus = -((bf / mf) * (-alpha).ln_1p()).exp_m1();
    Ok(mf * one_minus / (bf * harmonic(b)))
}

/// Summary of the bounds for one graph and level.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub alpha: f64,
    pub m: usize,
    pub edges: usize,
    pub max_degree: usize,
    /// `None` when alpha is too large for the cover.
    pub lower: Option<f64>,
    pub upper: f64,
    pub by_level: f64,
    /// Present when the cover has equal blocks.
    pub bygraph_level: Option<f64>,
}

pub fn bound_summary(g: &DependencyGraph, alpha: f64, cover: &CliqueCover) -> Result<BoundResult> {
    if cover.m != g.m() {
        return Err(Error::LengthMismatch {
            expected: g.m(),
            got: cover.m,
        });
    }
    let b0 = cover.blocks.first().map_or(0, Vec::len);
    let equal = b0 > 0 && cover.blocks.iter().all(|b| b.len() == b0);
    Ok(BoundResult {
        alpha,
        m: g.m(),
        edges: g.edge_count(),
        max_degree: g.max_degree(),
        lower: fdr_lower_bound(cover, alpha).ok(),
        upper: fdr_upper_bound(g, alpha),
        by_level: alpha / harmonic(g.m()),
        bygraph_level: if equal {
            bygraph_level(g.m(), b0, alpha).ok()
        } else {
            None
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_examples() {
        assert_eq!(fdr_upper_bound(&DependencyGraph::empty(10), 0.1), 0.1);
        assert_eq!(
            fdr_upper_bound(&DependencyGraph::complete(2), 0.1),
            1.5 * 0.1
        );
        let v = fdr_upper_bound(&DependencyGraph::complete(100), 1.0);
        assert!((v - (100.0 - 99.0 * 100f64.powf(-1.0 / 99.0))).abs() < 1e-12);
        let as_lists = DependencyGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let as_blocks = DependencyGraph::blocks(4, 2).unwrap();
        assert_eq!(
            fdr_upper_bound(&as_lists, 0.2),
            fdr_upper_bound(&as_blocks, 0.2)
        );
    }

    #[test]
    fn lower_examples() {
        let c = CliqueCover::equal_blocks(9, 3).unwrap();
        let v = fdr_lower_bound(&c, 0.5).unwrap();
        assert!((v - (1.0 - (25.0f64 / 36.0).powi(3))).abs() < 1e-14);
        let whole = CliqueCover::equal_blocks(5, 5).unwrap();
        assert!((fdr_lower_bound(&whole, 0.1).unwrap() - 0.1 * harmonic(5)).abs() < 1e-15);
        let s = CliqueCover::singletons(7);
        assert!(
            (fdr_lower_bound(&s, 0.2).unwrap() - (1.0 - (1.0 - 0.2f64 / 7.0).powi(7))).abs()
                < 1e-15
        );
        assert!(fdr_lower_bound(&whole, 0.9).is_err());
    }

    #[test]
    fn bygraph_examples() {
        assert!((bygraph_level(20, 20, 0.1).unwrap() - 0.1 / harmonic(20)).abs() < 1e-15);
        let a = bygraph_level(1000, 1, 0.05).unwrap();
        assert!((a - 1000.0 * (1.0 - 0.95f64.powf(0.001))).abs() < 1e-12);
        assert!(bygraph_level(10, 0, 0.1).is_err());
        assert!(bygraph_level(10, 11, 0.1).is_err());
    }

    #[test]
    fn cover_validation() {
        let g = DependencyGraph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(CliqueCover::new(3, vec![vec![0, 1], vec![2]], Some(&g)).is_ok());
        assert!(CliqueCover::new(3, vec![vec![0, 2], vec![1]], Some(&g)).is_err());
        assert!(CliqueCover::new(3, vec![vec![0, 1]], None).is_err());
        let cov = CliqueCover::for_graph(&g);
        assert_eq!(cov.blocks(), &[vec![0, 1], vec![2]]);
    }
}
