//! Randomised cross-checks of the fast engine.

use std::io::{self, Write};

use anyhow::bail;
use clap::Args;
use depfdr::engine;
use depfdr::graph::DependencyGraph;
use depfdr::oracle::{
    brute_force_indbh, check_monotonicity, check_neighbor_blindness, check_self_consistency,
    DEFAULT_BRUTE_GUARD,
};
use depfdr::procedures::{bh, indbh_k_reference, Procedure, ProcedureSpec};
use depfdr::simgen::{RunRecord, Scenario};
use depfdr::{PValues, RejectionSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Beta, Distribution};

use crate::{redraw, InputError};

#[derive(Args)]
pub struct OracleCheckArgs {
    /// Largest number of hypotheses per instance.
    #[arg(long, default_value_t = 10)]
    max_m: usize,
    /// Comma-separated edge probabilities, used in turn.
    #[arg(long, default_value = "0.1,0.3,0.6")]
    densities: String,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Corrupts the fast engine's output to exercise failure reporting.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

struct Instance {
    g: DependencyGraph,
    p: PValues,
}

impl Instance {
    fn witness(&self, alpha: f64) -> String {
        let edges: Vec<String> = self
            .g
            .edges()
            .map(|(a, b)| format!("{}-{}", a + 1, b + 1))
            .collect();
        let p: Vec<String> = self.p.iter().map(|v| v.to_string()).collect();
        format!(
            "m={} alpha={alpha} p=[{}] edges=[{}]",
            self.p.len(),
            p.join(","),
            edges.join(",")
        )
    }
}

fn instance(rng: &mut ChaCha12Rng, max_m: usize, density: f64) -> Instance {
    let m = rng.random_range(1..=max_m);
    let mut edges = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if rng.random::<f64>() < density {
                edges.push((i, j));
            }
        }
    }
    let beta = Beta::new(0.1, 1.0).expect("valid shape");
    let p = (0..m)
        .map(|_| {
            if rng.random::<bool>() {
                beta.sample(rng)
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    Instance {
        g: DependencyGraph::from_edges(m, &edges).expect("edges in range"),
        p: PValues::new(p).expect("values in [0, 1]"),
    }
}

struct Check {
    name: String,
    failures: usize,
    witness: Option<String>,
}

impl Check {
    fn new(name: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            failures: 0,
            witness: None,
        }
    }

    fn record(&mut self, ok: bool, inst: &Instance, alpha: f64) {
        if !ok {
            self.failures += 1;
            self.witness.get_or_insert_with(|| inst.witness(alpha));
        }
    }
}

pub fn run(a: &OracleCheckArgs) -> anyhow::Result<u8> {
    if a.trials == 0 {
        bail!(InputError("--trials must be at least 1".into()));
    }
    if a.max_m == 0 || a.max_m > DEFAULT_BRUTE_GUARD {
        bail!(InputError(format!(
            "--max-m must be in 1..={DEFAULT_BRUTE_GUARD}"
        )));
    }
    let densities = a
        .densities
        .split(',')
        .map(|s| match s.trim().parse::<f64>() {
            Ok(d) if (0.0..=1.0).contains(&d) => Ok(d),
            _ => Err(InputError(format!("invalid density '{s}'"))),
        })
        .collect::<Result<Vec<f64>, _>>()?;
    depfdr::Level::validate(a.alpha)?;
    let alpha = a.alpha;
    let fault = a.inject_fault;
    let fast = |p: &PValues, g: &DependencyGraph, k: usize| -> RejectionSet {
        let r = engine::indbh_k_fast(p, alpha, g, k).expect("instances are below the guard");
        if fault && r.len() >= 2 {
            RejectionSet::from_indices(r.iter().take(r.len() - 1).collect())
        } else {
            r
        }
    };

    let mut checks = vec![Check::new("indbh fast = reference = brute force")];
    for k in [2, 3] {
        checks.push(Check::new(format!("indbh{k} fast = reference")));
    }
    for name in ["indbh", "indbh2", "indbh3"] {
        checks.push(Check::new(format!("{name} self-consistency")));
        checks.push(Check::new(format!("{name} monotonicity")));
        checks.push(Check::new(format!("{name} neighbour-blindness")));
    }
    checks.push(Check::new("indbh <= indbh2 <= indbh3 <= bh"));

    let mut rng = ChaCha12Rng::seed_from_u64(a.seed);
    for t in 0..a.trials {
        let inst = instance(&mut rng, a.max_m, densities[t % densities.len()]);
        let (p, g) = (&inst.p, &inst.g);
        let r1 = fast(p, g, 1);
        let reference = indbh_k_reference(p, alpha, g, 1)?;
        let ok = r1 == reference && reference == brute_force_indbh(p, alpha, g)?;
        checks[0].record(ok, &inst, alpha);
        let mut chain = vec![r1];
        for (n, k) in [2, 3].into_iter().enumerate() {
            let r = fast(p, g, k);
            checks[1 + n].record(r == indbh_k_reference(p, alpha, g, k)?, &inst, alpha);
            chain.push(r);
        }
        for k in 1..=3 {
            let f = |q: &PValues| fast(q, g, k);
            let one = std::slice::from_ref(p);
            let base = 3 + 3 * (k - 1);
            checks[base].record(check_self_consistency(f, alpha, one).holds(), &inst, alpha);
            checks[base + 1].record(check_monotonicity(f, one, t as u64).holds(), &inst, alpha);
            checks[base + 2].record(check_neighbor_blindness(f, g, one).holds(), &inst, alpha);
        }
        chain.push(bh(p, alpha));
        let nested = chain.windows(2).all(|w| w[0].is_subset(&w[1]));
        checks
            .last_mut()
            .expect("non-empty")
            .record(nested, &inst, alpha);
    }

    let mut out = io::stdout().lock();
    let mut failed = 0;
    for c in &checks {
        let status = if c.failures == 0 { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{status}\t{}/{}\t{}",
            a.trials - c.failures,
            a.trials,
            c.name
        )?;
        if let Some(w) = &c.witness {
            writeln!(out, "\twitness: {w}")?;
            failed += 1;
        }
    }
    Ok(if failed == 0 { 0 } else { 1 })
}

/// Recomputes each IndBH-family result of a simulation with the reference
/// recursion and returns the number of replications that disagree.
pub fn check_runs<S: Scenario + ?Sized>(
    sc: &S,
    methods: &[ProcedureSpec],
    runs: &[RunRecord],
    seed: u64,
) -> anyhow::Result<usize> {
    if sc.m() > DEFAULT_BRUTE_GUARD {
        bail!(InputError(format!(
            "--oracle-check needs m <= {DEFAULT_BRUTE_GUARD}, the scenario has m = {}",
            sc.m()
        )));
    }
    let mut bad = 0;
    for (rep, run) in runs.iter().enumerate() {
        let p = redraw(sc, seed, rep)?;
        let mut ok = true;
        for (spec, got) in methods.iter().zip(&run.methods) {
            let k = match spec.kind {
                Procedure::IndBh => 1,
                Procedure::IndBhK(k) => k,
                _ => continue,
            };
            ok &= *got == indbh_k_reference(&p, spec.alpha, sc.graph(), k)?;
        }
        bad += usize::from(!ok);
    }
    Ok(bad)
}
