//! IndBH^(l) on the relaxed graph in which every component of the reduced
//! graph is completed to a clique. Its rejections are a subset of the exact
//! ones and it is exact when the components already are cliques.
//!
//! With cliques, masking a neighbourhood masks a whole component, so the
//! recursion only depends on the set `Y` of masked components. `theta_l(Y, k)`
//! is the rank cutoff for component `k` and `T_l(Y)` the rejection count:
//!
//! - `theta_1(Y, k) = r*(Y)`, the BH count on the component minima outside `Y`;
//! - `theta_l(Y, k) = max(theta_{l-1}(Y, k), 1 + T_{l-1}(Y ∪ {k}))`.

use super::table::{Ranks, Structure};
use crate::pvalues::NO_RANK;

pub(crate) struct Star {
    n: usize,
    /// Sorted finite ranks per component.
    cr: Vec<Vec<u32>>,
    /// Component minima (`NO_RANK` when none is finite).
    mu: Vec<u32>,
    /// `g[r]`: number of finite ranks `<= r`.
    g: Vec<usize>,
    /// `last[t][x] = max{r <= x : c(r) - r >= t}` or -1.
    last: Vec<Vec<i64>>,
}

impl Star {
    pub fn new(st: &Structure, ranks: Ranks<'_>, depth: usize) -> Star {
        let n = st.n;
        let cr: Vec<Vec<u32>> = st
            .comps
            .components
            .iter()
            .map(|c| {
                let mut v: Vec<u32> = c
                    .iter()
                    .map(|&j| ranks.get(j))
                    .filter(|&r| r != NO_RANK)
                    .collect();
                v.sort_unstable();
                v
            })
            .collect();
        let mu: Vec<u32> = cr
            .iter()
            .map(|v| v.first().copied().unwrap_or(NO_RANK))
            .collect();
        let mut hist = vec![0usize; n + 1];
        let mut chist = vec![0usize; n + 1];
        for v in &cr {
            for &r in v {
                hist[r as usize] += 1;
            }
            if let Some(&r) = v.first() {
                chist[r as usize] += 1;
            }
        }
        let mut g = vec![0usize; n + 1];
        let mut f = vec![0i64; n + 1];
        let mut c = 0usize;
        for r in 1..=n {
            g[r] = g[r - 1] + hist[r];
            c += chist[r];
            f[r] = c as i64 - r as i64;
        }
        let last = (0..depth.max(1))
            .map(|t| {
                let mut cur = -1i64;
                (0..=n)
                    .map(|x| {
                        if f[x] >= t as i64 {
                            cur = x as i64;
                        }
                        cur
                    })
                    .collect()
            })
            .collect();
        Star { n, cr, mu, g, last }
    }

    fn cnt(&self, k: usize, theta: usize) -> usize {
        self.cr[k].partition_point(|&r| r as usize <= theta)
    }

    /// `max{r : #{k ∉ Y : mu_k <= r} >= r}`.
    fn r_star(&self, y: &[usize]) -> usize {
        let mut cuts: Vec<usize> = y
            .iter()
            .map(|&k| self.mu[k])
            .filter(|&r| r != NO_RANK)
            .map(|r| r as usize)
            .collect();
        cuts.sort_unstable();
        // On [cuts[j-1], cuts[j]) exactly j removed minima are <= r.
        for j in (0..=cuts.len()).rev() {
            let lo = if j == 0 { 0 } else { cuts[j - 1] };
            let hi = if j == cuts.len() { self.n } else { cuts[j] - 1 };
            if lo > hi {
                continue;
            }
            let x = self.last[j][hi];
            if x >= lo as i64 {
                return x as usize;
            }
        }
        0
    }

    /// `T_l(Y)`.
    fn count(&self, l: usize, y: &mut Vec<usize>) -> usize {
        if l == 1 {
            let r = self.r_star(y);
            return self.g[r] - y.iter().map(|&k| self.cnt(k, r)).sum::<usize>();
        }
        let theta = self.thresholds(l, y);
        (0..self.cr.len())
            .filter(|k| !y.contains(k))
            .map(|k| self.cnt(k, theta[k]))
            .sum()
    }

    /// `theta_l(Y, .)`, up to values that change no count.
    fn thresholds(&self, l: usize, y: &mut Vec<usize>) -> Vec<usize> {
        let kbar = self.cr.len();
        if l == 1 {
            return vec![self.r_star(y); kbar];
        }
        let mut theta = self.thresholds(l - 1, y);
        let prev: usize = (0..kbar)
            .filter(|k| !y.contains(k))
            .map(|k| self.cnt(k, theta[k]))
            .sum();
        #[allow(clippy::needless_range_loop)]
        for k in 0..kbar {
            if y.contains(&k) {
                continue;
            }
            // Masking more can only shrink the count, so only ranks in
            // (theta, 1 + T_{l-1}(Y)] can still be picked up.
            let next = self.cnt(k, theta[k]);
            match self.cr[k].get(next) {
                Some(&r) if r as usize <= 1 + prev => {}
                _ => continue,
            }
            y.push(k);
            let t = self.count(l - 1, y);
            y.pop();
            theta[k] = theta[k].max(1 + t);
        }
        theta
    }

    /// Reduced ids rejected by the relaxed IndBH^(l), sorted.
    pub fn rejections(&self, st: &Structure, l: usize, ranks: Ranks<'_>) -> Vec<u32> {
        let theta = self.thresholds(l, &mut Vec::new());
        let mut out: Vec<u32> = (0..st.n)
            .filter(|&j| {
                let r = ranks.get(j);
                r != NO_RANK && r as usize <= theta[st.comps.component_of[j]]
            })
            .map(|j| j as u32)
            .collect();
        out.sort_unstable();
        out
    }
}
