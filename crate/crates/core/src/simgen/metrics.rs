//! Per-method summaries of simulation runs.

use std::io::{self, Write};

use crate::oracle::fdp;
use crate::pvalues::RejectionSet;

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Sorted non-null indices.
    pub nonnull: Vec<usize>,
    pub bh: RejectionSet,
    /// One rejection set per method, in a fixed method order.
    pub methods: Vec<RejectionSet>,
}

/// Mean with Monte Carlo standard error; `se` is `None` below two samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: Option<f64>,
    pub n: usize,
}

impl Estimate {
    fn of(values: &[f64]) -> Option<Estimate> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = (n > 1).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Some(Estimate { mean, se, n })
    }
}

/// FDR, and the ratios to BH of true rejections and of all rejections.
/// Each ratio averages only over replications where its BH denominator is
/// non-empty and is `None` when there are none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub fdr: Estimate,
    pub tp_ratio: Option<Estimate>,
    pub rej_ratio: Option<Estimate>,
    pub reps: usize,
}

pub fn compute_metrics(runs: &[RunRecord]) -> Vec<MetricSet> {
    let methods = runs.first().map_or(0, |r| r.methods.len());
    (0..methods)
        .map(|k| {
            let mut fdps = Vec::with_capacity(runs.len());
            let mut tp = Vec::new();
            let mut rej = Vec::new();
            for run in runs {
                let r = &run.methods[k];
                fdps.push(fdp(r, &run.nonnull));
                let is_h1 = |i: &usize| run.nonnull.binary_search(i).is_ok();
                let bh_tp = run.bh.iter().filter(is_h1).count();
                if bh_tp > 0 {
                    tp.push(r.iter().filter(is_h1).count() as f64 / bh_tp as f64);
                }
                if !run.bh.is_empty() {
                    rej.push(r.len() as f64 / run.bh.len() as f64);
                }
            }
            MetricSet {
                fdr: Estimate::of(&fdps).unwrap_or(Estimate {
                    mean: f64::NAN,
                    se: None,
                    n: 0,
                }),
                tp_ratio: Estimate::of(&tp),
                rej_ratio: Estimate::of(&rej),
                reps: runs.len(),
            }
        })
        .collect()
}

/// Writes `method,m,metric,estimate,se,reps` rows; undefined values are `NA`.
pub fn write_metrics_csv<W: Write>(
    out: &mut W,
    names: &[String],
    m: usize,
    sets: &[MetricSet],
) -> io::Result<()> {
    writeln!(out, "method,m,metric,estimate,se,reps")?;
    for (name, s) in names.iter().zip(sets) {
        let rows = [
            ("fdr", Some(s.fdr)),
            ("tp_ratio", s.tp_ratio),
            ("rej_ratio", s.rej_ratio),
        ];
        for (metric, e) in rows {
            match e {
                Some(e) => {
                    let se = e.se.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
                    writeln!(out, "{name},{m},{metric},{:.6},{se},{}", e.mean, e.n)?;
                }
                None => writeln!(out, "{name},{m},{metric},NA,NA,0")?,
            }
        }
    }
    Ok(())
}
