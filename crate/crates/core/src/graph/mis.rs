//! Exact independent-set routines on small graphs given as closed
//! neighbourhood bitsets (`nbhd[v]` contains `v` and its neighbours).

use super::NodeSet;

/// Enumerates all maximal independent sets (Bron–Kerbosch on the complement,
/// with pivoting). Returns `None` once more than `max_sets` sets are found.
/// Each set is sorted; the list is sorted lexicographically.
pub(crate) fn enumerate(nbhd: &[NodeSet], max_sets: usize) -> Option<Vec<Vec<usize>>> {
    let n = nbhd.len();
    let mut out = Vec::new();
    let mut r = Vec::new();
    let ok = bk(
        nbhd,
        &mut r,
        NodeSet::full(n),
        NodeSet::new(n),
        &mut out,
        max_sets,
    );
    if !ok {
        return None;
    }
    for s in &mut out {
        s.sort_unstable();
    }
    out.sort();
    Some(out)
}

fn bk(
    nbhd: &[NodeSet],
    r: &mut Vec<usize>,
    mut p: NodeSet,
    mut x: NodeSet,
    out: &mut Vec<Vec<usize>>,
    max_sets: usize,
) -> bool {
    if p.is_empty() {
        if x.is_empty() {
            if out.len() >= max_sets {
                return false;
            }
            out.push(r.clone());
        }
        return true;
    }
    // Pivot minimising the number of branches |P ∩ N[u]|.
    let mut best = usize::MAX;
    let mut pivot = 0;
    for u in p.iter().chain(x.iter()) {
        let c = p.intersection_len(&nbhd[u]);
        if c < best {
            best = c;
            pivot = u;
            if c == 0 {
                break;
            }
        }
    }
    let mut cand = p.clone();
    cand.intersect_with(&nbhd[pivot]);
    for v in cand.iter() {
        let mut p2 = p.clone();
        p2.difference_with(&nbhd[v]);
        let mut x2 = x.clone();
        x2.difference_with(&nbhd[v]);
        r.push(v);
        let ok = bk(nbhd, r, p2, x2, out, max_sets);
        r.pop();
        if !ok {
            return false;
        }
        p.remove(v);
        x.insert(v);
    }
    true
}

/// Size of the largest independent set within the candidate set `p`.
pub(crate) fn independence_number(nbhd: &[NodeSet], p: &NodeSet) -> usize {
    if p.is_empty() {
        return 0;
    }
    // Some maximum independent set meets N[v] for any v; branch on the
    // vertex with the fewest candidates in its closed neighbourhood.
    let mut best_v = 0;
    let mut best_deg = usize::MAX;
    for v in p.iter() {
        let d = p.intersection_len(&nbhd[v]);
        if d < best_deg {
            best_deg = d;
            best_v = v;
            if d <= 2 {
                break;
            }
        }
    }
    let mut cand = p.clone();
    cand.intersect_with(&nbhd[best_v]);
    let mut best = 0;
    for w in cand.iter() {
        let mut rest = p.clone();
        rest.difference_with(&nbhd[w]);
        if rest.len() < best {
            continue;
        }
        best = best.max(1 + independence_number(nbhd, &rest));
    }
    best
}
