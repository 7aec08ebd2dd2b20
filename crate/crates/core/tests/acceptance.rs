//! End-to-end acceptance suite. Runs as a plain binary so that every
//! criterion prints one PASS/FAIL line regardless of the outcome.

mod common;

use std::time::{Duration, Instant};

use common::{fig2, fig4_p, mixture_p, random_alpha, random_graph, rng};
use depfdr::bounds::{bygraph_level, fdr_upper_bound, CliqueCover};
use depfdr::engine::{self, EngineConfig};
use depfdr::graph::DependencyGraph;
use depfdr::oracle::{
    self, brute_force_indbh, check_monotonicity, check_neighbor_blindness, check_self_consistency,
};
use depfdr::procedures::{
    self, bh, bonferroni, indbh_k_reference, indbh_reference, su_fixed_point, Procedure,
    ProcedureSpec,
};
use depfdr::simgen::stats::ks_uniform;
use depfdr::simgen::{
    compute_metrics, gen_block_gaussian, rep_rng, run_simulation, tune_mu_star,
    AdversarialScenario, Dependence, GaussianScenario, GaussianSpec, Placement, Scenario, Side,
    Signal,
};
use depfdr::{harmonic, PValues, RejectionSet};
use rand::Rng;

type Criterion = (&'static str, fn() -> Outcome);
type Check<'a> = Box<dyn Fn(&PValues) -> RejectionSet + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn set(v: &[usize]) -> RejectionSet {
    RejectionSet::from_indices(v.to_vec())
}

fn golden_examples() -> Outcome {
    let g = fig2();
    let p = fig4_p();
    // Warm the thread pool so that the measurement covers only the procedures.
    let _ = engine::indbh_fast(&p, 0.05, &g);
    let start = Instant::now();
    let r_bh = bh(&p, 0.05);
    let r1 = engine::indbh_fast(&p, 0.05, &g).unwrap();
    let r2 = engine::indbh_k_fast(&p, 0.05, &g, 2).unwrap();
    let elapsed = start.elapsed();
    let ok =
        r_bh == set(&[0, 1, 2, 3, 4]) && r1 == set(&[0, 1, 2, 3]) && r2 == set(&[0, 1, 2, 3, 4]);
    outcome(
        ok && elapsed < Duration::from_millis(1),
        format!(
            "bh={r_bh} indbh={r1} indbh2={r2}, {:.3} ms",
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

struct Instance {
    g: DependencyGraph,
    p: PValues,
    alpha: f64,
}

fn instances(n: usize, max_m: usize, seed: u64) -> Vec<Instance> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let m = r.random_range(1..=max_m);
            Instance {
                g: random_graph(m, &mut r),
                p: mixture_p(m, &mut r),
                alpha: random_alpha(&mut r),
            }
        })
        .collect()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0;
    let mut first = None;
    let cases = instances(1200, 12, 11);
    for (n, c) in cases.iter().enumerate() {
        let fast = engine::indbh_fast(&c.p, c.alpha, &c.g).unwrap();
        let reference = indbh_reference(&c.p, c.alpha, &c.g).unwrap();
        let brute = brute_force_indbh(&c.p, c.alpha, &c.g).unwrap();
        let mut ok = fast == reference && reference == brute;
        for k in [2, 3] {
            ok &= engine::indbh_k_fast(&c.p, c.alpha, &c.g, k).unwrap()
                == indbh_k_reference(&c.p, c.alpha, &c.g, k).unwrap();
        }
        if !ok {
            mismatches += 1;
            first.get_or_insert(n);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(120),
        format!(
            "{} instances, {mismatches} mismatches{}, {:.1} s",
            cases.len(),
            first.map_or(String::new(), |n| format!(" (first #{n})")),
            elapsed.as_secs_f64()
        ),
    )
}

fn adaptivity_properties() -> Outcome {
    let cases = instances(500, 8, 23);
    let mut violations = [0usize; 4];
    let names = ["indbh", "indbh2", "indbh3", "su"];
    let mut naive_p1 = 0;
    let mut bh_p3 = 0;
    for (n, c) in cases.iter().enumerate() {
        let (g, alpha) = (&c.g, c.alpha);
        let one = std::slice::from_ref(&c.p);
        let procs: [Check; 4] = [
            Box::new(|q| engine::indbh_fast(q, alpha, g).unwrap()),
            Box::new(|q| engine::indbh_k_fast(q, alpha, g, 2).unwrap()),
            Box::new(|q| engine::indbh_k_fast(q, alpha, g, 3).unwrap()),
            Box::new(|q| su_fixed_point(q, alpha, g).unwrap()),
        ];
        for (v, f) in violations.iter_mut().zip(&procs) {
            *v += check_self_consistency(f, alpha, one).violations.len();
            *v += check_monotonicity(f, one, n as u64).violations.len();
            *v += check_neighbor_blindness(f, g, one).violations.len();
        }
        let naive = |q: &PValues| procedures::naive_adjusted_bh(q, alpha, g).unwrap();
        naive_p1 += check_self_consistency(naive, alpha, one).violations.len();
        if g.edge_count() > 0 {
            bh_p3 += check_neighbor_blindness(|q: &PValues| bh(q, alpha), g, one)
                .violations
                .len();
        }
    }
    // Naive failures need large alpha and clustered p-values, which the
    // mixed instances above rarely produce; search a targeted family too.
    let mut r = rng(29);
    let mut searched = 0;
    while naive_p1 == 0 && searched < 20_000 {
        let m = r.random_range(2..=8);
        let g = common::erdos_renyi(m, 0.5, &mut r);
        let p = PValues::new((0..m).map(|_| r.random::<f64>()).collect()).unwrap();
        let naive = |q: &PValues| procedures::naive_adjusted_bh(q, 0.5, &g).unwrap();
        naive_p1 += check_self_consistency(naive, 0.5, std::slice::from_ref(&p))
            .violations
            .len();
        searched += 1;
    }
    let clean = violations.iter().all(|&v| v == 0);
    let counts: Vec<String> = names
        .iter()
        .zip(violations)
        .map(|(n, v)| format!("{n}={v}"))
        .collect();
    outcome(
        clean && naive_p1 > 0 && bh_p3 > 0,
        format!(
            "{} instances, violations {}; naive P1 violations {naive_p1} (+{searched} targeted draws), BH P3 violations {bh_p3}",
            cases.len(),
            counts.join(" ")
        ),
    )
}

fn chain_inclusions() -> Outcome {
    let cases = instances(1000, 12, 37);
    let mut broken = 0;
    for c in &cases {
        let chain = [
            engine::indbh_fast(&c.p, c.alpha, &c.g).unwrap(),
            engine::indbh_k_fast(&c.p, c.alpha, &c.g, 2).unwrap(),
            engine::indbh_k_fast(&c.p, c.alpha, &c.g, 3).unwrap(),
            su_fixed_point(&c.p, c.alpha, &c.g).unwrap(),
            bh(&c.p, c.alpha),
        ];
        if chain.windows(2).any(|w| !w[0].is_subset(&w[1])) {
            broken += 1;
        }
    }
    let mut r = rng(41);
    let mut degenerate = 0;
    for _ in 0..300 {
        let m = r.random_range(1..=40);
        let p = mixture_p(m, &mut r);
        let alpha = random_alpha(&mut r);
        if engine::indbh_fast(&p, alpha, &DependencyGraph::empty(m)).unwrap() != bh(&p, alpha) {
            degenerate += 1;
        }
        if engine::indbh_fast(&p, alpha, &DependencyGraph::complete(m)).unwrap()
            != bonferroni(&p, alpha)
        {
            degenerate += 1;
        }
    }
    outcome(
        broken == 0 && degenerate == 0,
        format!(
            "{} chains, {broken} broken; 600 degeneration checks, {degenerate} failed",
            cases.len()
        ),
    )
}

fn clique_shortcut() -> Outcome {
    let mut r = rng(53);
    let mut mismatches = 0;
    for _ in 0..200 {
        let b = r.random_range(2..=4usize);
        let m = b * r.random_range(1..=12 / b);
        let g = DependencyGraph::blocks(m, b).unwrap();
        let p = mixture_p(m, &mut r);
        let alpha = random_alpha(&mut r);
        let blocks = g.block_partition().unwrap();
        if engine::clique_shortcut(&p, alpha, &blocks).unwrap()
            != brute_force_indbh(&p, alpha, &g).unwrap()
        {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("200 block instances, {mismatches} mismatches"),
    )
}

fn reduction_equivalence() -> Outcome {
    let mut cases = instances(200, 12, 67);
    // A quarter of the instances are pushed to an empty BH set.
    for c in cases.iter_mut().step_by(4) {
        c.p = PValues::new(c.p.iter().map(|&v| 0.9 + 0.1 * v).collect()).unwrap();
    }
    let cfg = EngineConfig::default();
    let mut mismatches = 0;
    let mut empty_bh = 0;
    for c in &cases {
        let rp = engine::reduce_to_bh(&c.p, c.alpha, &c.g).unwrap();
        empty_bh += usize::from(rp.n() == 0);
        for k in 1..=3 {
            let full = indbh_k_reference(&c.p, c.alpha, &c.g, k).unwrap();
            let (reduced, _) = engine::solve_reduced(&rp, k, &cfg).unwrap();
            if rp.to_original(&reduced) != full {
                mismatches += 1;
            }
        }
    }
    outcome(
        mismatches == 0 && empty_bh > 0,
        format!("200 instances ({empty_bh} with empty BH set), k = 1..3, {mismatches} mismatches"),
    )
}

fn naive_inflation() -> Outcome {
    let start = Instant::now();
    let alpha = 0.5;
    let cover = CliqueCover::new(3, vec![vec![0], vec![1, 2]], None).unwrap();
    let sc = AdversarialScenario::new(cover, alpha).unwrap();
    let naive = oracle::mc_fdr(
        |p, g| procedures::naive_adjusted_bh(p, alpha, g),
        &sc,
        100_000,
        7,
    )
    .unwrap();
    let ind = oracle::mc_fdr(|p, g| engine::indbh_fast(p, alpha, g), &sc, 100_000, 7).unwrap();
    let target =
        alpha * (1.0 + 2.0 * alpha * alpha * (1.0 - alpha) / (3.0 * (3.0 - 2.0 * alpha).powi(2)));
    let elapsed = start.elapsed();
    outcome(
        (naive.fdr - target).abs() <= 0.006
            && ind.fdr <= alpha + 3.0 * ind.se
            && elapsed < Duration::from_secs(60),
        format!(
            "naive FDR {:.5} (target {target:.5}, se {:.5}); indbh FDR {:.5} (se {:.5}); {:.1} s",
            naive.fdr,
            naive.se,
            ind.fdr,
            ind.se,
            elapsed.as_secs_f64()
        ),
    )
}

fn global_null_inflation() -> Outcome {
    let alpha = 0.5;
    let sc = AdversarialScenario::new(CliqueCover::equal_blocks(9, 3).unwrap(), alpha).unwrap();
    let reps = 10_000;
    let b = oracle::mc_fdr(|p, _| Ok(bh(p, alpha)), &sc, reps, 13).unwrap();
    let i1 = oracle::mc_fdr(|p, g| engine::indbh_fast(p, alpha, g), &sc, reps, 13).unwrap();
    let i3 = oracle::mc_fdr(|p, g| engine::indbh_k_fast(p, alpha, g, 3), &sc, reps, 13).unwrap();
    let bound = 1.0 - (25.0f64 / 36.0).powi(3);
    outcome(
        b.fdr >= 0.665 - 3.0 * b.se
            && i1.fdr <= alpha + 3.0 * i1.se
            && i3.fdr <= alpha + 3.0 * i3.se,
        format!(
            "bh {:.4} (bound {bound:.4}, se {:.4}); indbh {:.4}; indbh3 {:.4}",
            b.fdr, b.se, i1.fdr, i3.fdr
        ),
    )
}

fn sampler_uniformity() -> Outcome {
    let draws = 100_000;
    let scenarios = [
        AdversarialScenario::new(
            CliqueCover::new(3, vec![vec![0], vec![1, 2]], None).unwrap(),
            0.5,
        )
        .unwrap(),
        AdversarialScenario::new(CliqueCover::equal_blocks(9, 3).unwrap(), 0.5).unwrap(),
        AdversarialScenario::new(CliqueCover::equal_blocks(12, 4).unwrap(), 0.1).unwrap(),
    ];
    let mut min_p = f64::INFINITY;
    let mut coords = 0;
    for (s, sc) in scenarios.iter().enumerate() {
        let m = sc.m();
        let mut cols = vec![Vec::with_capacity(draws); m];
        for rep in 0..draws {
            let d = sc.draw(&mut rep_rng(100 + s as u64, rep as u64)).unwrap();
            for (c, &v) in cols.iter_mut().zip(d.p.iter()) {
                c.push(v);
            }
        }
        for c in &cols {
            min_p = min_p.min(ks_uniform(c).1);
            coords += 1;
        }
    }
    outcome(
        min_p > 1e-3,
        format!("{coords} coordinates, smallest KS p-value {min_p:.4}"),
    )
}

fn power_trend() -> Outcome {
    let start = Instant::now();
    let alpha = 0.1;
    let methods = [
        ProcedureSpec::new(Procedure::IndBhK(3), alpha).unwrap(),
        ProcedureSpec::new(Procedure::By, alpha).unwrap(),
    ];
    let cfg = EngineConfig::default();
    let mut rows = Vec::new();
    for m in [500, 10_000] {
        let spec = GaussianSpec {
            m,
            dependence: Dependence::Block {
                size: 100,
                rho: 0.5,
            },
            placement: Placement::Uniform { pi0: 0.9 },
            signal: Signal::RandomExp(1.0),
            side: Side::Two,
        };
        let mu = tune_mu_star(&spec, 0.6, alpha, 3).unwrap();
        let sc = GaussianScenario::new(GaussianSpec {
            signal: Signal::RandomExp(mu),
            ..spec
        })
        .unwrap();
        let runs = run_simulation(&sc, &methods, alpha, 200, 5, &cfg).unwrap();
        let metrics = compute_metrics(&runs);
        let tp = metrics[0].tp_ratio.map_or(f64::NAN, |e| e.mean);
        let rej3 = metrics[0].rej_ratio.map_or(f64::NAN, |e| e.mean);
        let rej_by = metrics[1].rej_ratio.map_or(f64::NAN, |e| e.mean);
        rows.push((m, mu, tp, rej3, rej_by));
    }
    let (small, large) = (rows[0], rows[1]);
    let elapsed = start.elapsed();
    outcome(
        large.2 > small.2 && large.2 > 0.9 && large.4 < large.3 && elapsed < Duration::from_secs(1800),
        format!(
            "m=500: mu* {:.3}, indbh3 tp {:.4}; m=10000: mu* {:.3}, indbh3 tp {:.4}, rej indbh3 {:.4} vs by {:.4}; {:.1} s",
            small.1,
            small.2,
            large.1,
            large.2,
            large.3,
            large.4,
            elapsed.as_secs_f64()
        ),
    )
}

fn performance() -> Outcome {
    let spec = GaussianSpec {
        m: 1_000_000,
        dependence: Dependence::Block {
            size: 100,
            rho: 0.5,
        },
        placement: Placement::Uniform { pi0: 0.99 },
        signal: Signal::Fixed(3.0),
        side: Side::Two,
    };
    let (p, _, g) = gen_block_gaussian(&spec, 17).unwrap();
    let alpha = 0.1;
    let single = EngineConfig {
        threads: Some(1),
        ..EngineConfig::default()
    };
    let eight = EngineConfig {
        threads: Some(8),
        ..EngineConfig::default()
    };
    let t0 = Instant::now();
    let r1 = engine::indbh_fast_with(&p, alpha, &g, &single).unwrap();
    let t1 = t0.elapsed();
    let t0 = Instant::now();
    let r3 = engine::indbh_k_fast_with(&p, alpha, &g, 3, &single).unwrap();
    let t3 = t0.elapsed();
    let same = engine::indbh_fast_with(&p, alpha, &g, &eight).unwrap() == r1
        && engine::indbh_k_fast_with(&p, alpha, &g, 3, &eight).unwrap() == r3;
    outcome(
        t1 <= Duration::from_secs(10) && t3 <= Duration::from_secs(60) && same,
        format!(
            "|bh| {}, |indbh| {} in {:.2} s, |indbh3| {} in {:.2} s, threads 1 vs 8 identical: {same}",
            bh(&p, alpha).len(),
            r1.len(),
            t1.as_secs_f64(),
            r3.len(),
            t3.as_secs_f64()
        ),
    )
}

/// Largest `a` with `1 - (1 - a b H_b / m)^{m/b} <= alpha`, by bisection.
fn bygraph_bisect(m: usize, b: usize, alpha: f64) -> f64 {
    let (mf, bf) = (m as f64, b as f64);
    let h = harmonic(b);
    let fdr = |a: f64| 1.0 - (1.0 - a * bf * h / mf).powf(mf / bf);
    let (mut lo, mut hi) = (0.0, mf / (bf * h));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fdr(mid) <= alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn bounds_module() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for (m, b) in [(10, 2), (100, 10), (1000, 100), (60, 3), (10_000, 100)] {
        for alpha in [0.01, 0.05, 0.1, 0.2, 0.3, 0.5] {
            let d = (bygraph_level(m, b, alpha).unwrap() - bygraph_bisect(m, b, alpha)).abs();
            worst = worst.max(d);
            points += 1;
        }
    }
    let alpha = 0.1;
    let upper = fdr_upper_bound(&DependencyGraph::complete(2), alpha);
    outcome(
        worst <= 1e-10 && upper == 1.5 * alpha,
        format!(
            "{points} grid points, max difference {worst:.2e}; complete m=2 upper bound {upper}"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("golden worked examples", golden_examples),
        ("oracle equivalence", oracle_equivalence),
        ("adaptivity properties", adaptivity_properties),
        ("chain inclusions and degenerations", chain_inclusions),
        ("clique shortcut", clique_shortcut),
        ("reduction equivalence", reduction_equivalence),
        ("naive procedure FDR inflation", naive_inflation),
        ("global-null BH inflation", global_null_inflation),
        ("adversarial sampler uniformity", sampler_uniformity),
        ("power trend", power_trend),
        ("performance and thread determinism", performance),
        ("bounds", bounds_module),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let id = (n + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!(
            "criterion {id:>2} {status} {name} [{:.1} s]: {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
