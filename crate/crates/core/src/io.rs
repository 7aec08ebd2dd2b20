//! Text formats: p-value files and graph descriptions. Ids in files are
//! 1-based; everything returned here is 0-based.

use crate::error::{Error, Result};
use crate::graph::DependencyGraph;
use crate::pvalues::PValues;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// One value per line, or `id<TAB>value` with ids forming `1..=m` in any
/// order. Blank lines and `#` comments are ignored.
pub fn parse_pvalues(text: &str) -> Result<PValues> {
    let mut with_ids: Vec<(usize, usize, f64)> = Vec::new();
    let mut plain: Vec<f64> = Vec::new();
    for (line, l) in content_lines(text) {
        let fields: Vec<&str> = l.split_whitespace().collect();
        let bad = |msg: String| Error::Parse { line, message: msg };
        let (id, raw) = match fields.as_slice() {
            [v] => (None, *v),
            [id, v] => {
                let id: usize = id.parse().map_err(|_| bad(format!("invalid id '{id}'")))?;
                (Some(id), *v)
            }
            _ => {
                return Err(bad(format!(
                    "expected a value or 'id<TAB>value', got '{l}'"
                )))
            }
        };
        let v: f64 = raw
            .parse()
            .map_err(|_| bad(format!("'{raw}' is not a number")))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(bad(format!("p-value {v} is outside [0, 1]")));
        }
        match id {
            Some(id) => with_ids.push((line, id, v)),
            None => plain.push(v),
        }
        if !with_ids.is_empty() && !plain.is_empty() {
            return Err(bad("mixes lines with and without ids".into()));
        }
    }
    if !with_ids.is_empty() {
        let m = with_ids.len();
        let mut out = vec![f64::NAN; m];
        for (line, id, v) in with_ids {
            if id == 0 || id > m {
                return Err(Error::Parse {
                    line,
                    message: format!("id {id} is outside 1..={m}"),
                });
            }
            if !out[id - 1].is_nan() {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate id {id}"),
                });
            }
            out[id - 1] = v;
        }
        plain = out;
    }
    if plain.is_empty() {
        return Err(Error::param("p-value file contains no values"));
    }
    PValues::new(plain)
}

/// A graph file: either `i<TAB>j` edge lines, or a single structured line
/// `block <size>`, `banded <bandwidth>`, `empty` or `complete`.
pub fn parse_graph(text: &str, m: usize) -> Result<DependencyGraph> {
    let mut edges = Vec::new();
    let mut structured: Option<DependencyGraph> = None;
    for (line, l) in content_lines(text) {
        let fields: Vec<&str> = l.split_whitespace().collect();
        let bad = |msg: String| Error::Parse { line, message: msg };
        let num = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| bad(format!("'{s}' is not a positive integer")))
        };
        let spec = match fields.as_slice() {
            ["block", b] => Some(DependencyGraph::blocks(m, num(b)?)?),
            ["banded", b] => Some(DependencyGraph::banded(m, num(b)?)?),
            ["empty"] => Some(DependencyGraph::empty(m)),
            ["complete"] => Some(DependencyGraph::complete(m)),
            [a, b] => {
                let (a, b) = (num(a)?, num(b)?);
                for id in [a, b] {
                    if id == 0 || id > m {
                        return Err(bad(format!("node {id} is outside 1..={m}")));
                    }
                }
                edges.push((a - 1, b - 1));
                None
            }
            _ => return Err(bad(format!("cannot parse graph line '{l}'"))),
        };
        if let Some(g) = spec {
            if structured.is_some() || !edges.is_empty() {
                return Err(bad("a structured graph line must be the only entry".into()));
            }
            structured = Some(g);
        } else if structured.is_some() {
            return Err(bad("a structured graph line must be the only entry".into()));
        }
    }
    match structured {
        Some(g) => Ok(g),
        None => DependencyGraph::from_edges(m, &edges),
    }
}

/// Writes a graph as 1-based tab-separated edges.
pub fn format_edges(g: &DependencyGraph) -> String {
    g.edges()
        .map(|(a, b)| format!("{}\t{}\n", a + 1, b + 1))
        .collect()
}

/// Parses a cover file: one block per line, 1-based ids separated by
/// whitespace or commas.
pub fn parse_blocks(text: &str, m: usize) -> Result<Vec<Vec<usize>>> {
    content_lines(text)
        .map(|(line, l)| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| match s.parse::<usize>() {
                    Ok(id) if id >= 1 && id <= m => Ok(id - 1),
                    _ => Err(Error::Parse {
                        line,
                        message: format!("invalid node id '{s}'"),
                    }),
                })
                .collect()
        })
        .collect()
}
