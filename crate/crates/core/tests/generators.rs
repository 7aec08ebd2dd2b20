use depfdr::bounds::CliqueCover;
use depfdr::engine::EngineConfig;
use depfdr::procedures::{Procedure, ProcedureSpec};
use depfdr::simgen::stats::ks_uniform;
use depfdr::simgen::{
    compute_metrics, estimate_bh_power, gen_banded_gaussian, gen_block_gaussian,
    negative_gaussian_scenario, parse_scenario, place_clustered_nonnulls, rep_rng, run_simulation,
    tune_mu_star, write_metrics_csv, AdversarialScenario, Dependence, GaussianScenario,
    GaussianSpec, Placement, Scenario, Side, Signal,
};
use statrs::distribution::{ContinuousCDF, Normal};

fn null_spec(m: usize, dependence: Dependence, side: Side) -> GaussianSpec {
    GaussianSpec {
        m,
        dependence,
        placement: Placement::Uniform { pi0: 1.0 },
        signal: Signal::Fixed(0.0),
        side,
    }
}

/// Upper-tail scores recovered from one-sided p-values.
fn scores(sc: &GaussianScenario, reps: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = Normal::standard();
    (0..reps)
        .map(|r| {
            let d = sc.draw(&mut rep_rng(seed, r as u64)).unwrap();
            d.p.iter().map(|&p| n.inverse_cdf(1.0 - p)).collect()
        })
        .collect()
}

fn corr(x: &[Vec<f64>], a: usize, b: usize) -> f64 {
    let n = x.len() as f64;
    let (ma, mb) = (
        x.iter().map(|r| r[a]).sum::<f64>() / n,
        x.iter().map(|r| r[b]).sum::<f64>() / n,
    );
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for r in x {
        let (da, db) = (r[a] - ma, r[b] - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    sab / (saa * sbb).sqrt()
}

#[test]
fn generators_are_reproducible() {
    let spec = GaussianSpec {
        m: 300,
        dependence: Dependence::Block { size: 30, rho: 0.5 },
        placement: Placement::Uniform { pi0: 0.9 },
        signal: Signal::RandomExp(2.0),
        side: Side::Two,
    };
    let a = gen_block_gaussian(&spec, 4).unwrap();
    assert_eq!(a, gen_block_gaussian(&spec, 4).unwrap());
    assert_ne!(a.0, gen_block_gaussian(&spec, 5).unwrap().0);
    assert_eq!(a.1.len(), 30);
    let banded = GaussianSpec {
        dependence: Dependence::Banded {
            bandwidth: 11,
            rho: 0.5,
        },
        ..spec
    };
    assert_eq!(
        gen_banded_gaussian(&banded, 4).unwrap(),
        gen_banded_gaussian(&banded, 4).unwrap()
    );
}

#[test]
fn block_correlation_matches() {
    let sc = GaussianScenario::new(null_spec(
        6,
        Dependence::Block { size: 3, rho: 0.5 },
        Side::One,
    ))
    .unwrap();
    let x = scores(&sc, 100_000, 1);
    assert!((corr(&x, 0, 1) - 0.5).abs() < 0.02, "{}", corr(&x, 0, 1));
    assert!((corr(&x, 3, 5) - 0.5).abs() < 0.02);
    assert!(corr(&x, 0, 3).abs() < 0.02);
}

#[test]
fn banded_correlation_matches() {
    let sc = GaussianScenario::new(null_spec(
        12,
        Dependence::Banded {
            bandwidth: 5,
            rho: 0.5,
        },
        Side::One,
    ))
    .unwrap();
    let x = scores(&sc, 100_000, 2);
    assert!((corr(&x, 4, 5) - 0.5).abs() < 0.02);
    assert!((corr(&x, 4, 6) - 0.25).abs() < 0.02);
    assert!(corr(&x, 4, 9).abs() < 0.02);
}

#[test]
fn negative_blocks() {
    let sc = negative_gaussian_scenario(6, 3, -0.354).unwrap();
    let x = scores(&sc, 100_000, 3);
    assert!((corr(&x, 0, 2) + 0.354).abs() < 0.02);
    assert!(negative_gaussian_scenario(6, 3, -0.6).is_err());
}

#[test]
fn null_p_values_are_uniform() {
    for (seed, dep) in [
        Dependence::Block { size: 10, rho: 0.5 },
        Dependence::Banded {
            bandwidth: 7,
            rho: 0.5,
        },
        Dependence::Block { size: 1, rho: 0.0 },
    ]
    .into_iter()
    .enumerate()
    {
        for side in [Side::Two, Side::One] {
            let sc = GaussianScenario::new(null_spec(20, dep, side)).unwrap();
            for coord in [0, 7, 19] {
                let col: Vec<f64> = (0..20_000)
                    .map(|r| sc.draw(&mut rep_rng(seed as u64, r)).unwrap().p[coord])
                    .collect();
                let (_, pval) = ks_uniform(&col);
                assert!(pval > 1e-3, "{dep:?} {side:?} coordinate {coord}: {pval}");
            }
        }
    }
}

#[test]
fn adversarial_counts_follow_their_masses() {
    let sc = AdversarialScenario::new(CliqueCover::equal_blocks(9, 3).unwrap(), 0.5).unwrap();
    let draws = 100_000;
    let mut hist = [[0usize; 4]; 3];
    for r in 0..draws {
        let (_, counts) = sc.sample_with_counts(&mut rep_rng(8, r as u64));
        for (h, &s) in hist.iter_mut().zip(&counts) {
            h[s] += 1;
        }
    }
    for (k, h) in hist.iter().enumerate() {
        let total: f64 = (0..=3).map(|s| sc.count_probability(k, s)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (s, &c) in h.iter().enumerate() {
            let q = sc.count_probability(k, s);
            let se = (q * (1.0 - q) / draws as f64).sqrt();
            assert!(
                (c as f64 / draws as f64 - q).abs() < 4.0 * se + 1e-12,
                "block {k} count {s}"
            );
        }
    }
}

#[test]
fn clustered_placement_hits_the_expected_count() {
    let (m, pi0) = (100_000, 0.99);
    let runs = 40;
    let mean = (0..runs)
        .map(|s| place_clustered_nonnulls(m, pi0, 5.0, 50.0, s).len() as f64)
        .sum::<f64>()
        / runs as f64;
    let target = (1.0 - pi0) * m as f64;
    assert!((mean / target - 1.0).abs() < 0.05, "{mean}");
}

#[test]
fn tuned_signal_reaches_target_power() {
    let spec = GaussianSpec {
        m: 10_000,
        dependence: Dependence::Block {
            size: 100,
            rho: 0.5,
        },
        placement: Placement::Uniform { pi0: 0.9 },
        signal: Signal::Fixed(1.0),
        side: Side::Two,
    };
    let mu = tune_mu_star(&spec, 0.6, 0.1, 21).unwrap();
    let sc = GaussianScenario::new(GaussianSpec {
        signal: Signal::Fixed(mu),
        ..spec
    })
    .unwrap();
    let power = estimate_bh_power(&sc, 0.1, 200, 99);
    assert!((0.57..=0.63).contains(&power), "mu* {mu}, power {power}");
}

#[test]
fn simulation_is_deterministic_and_reports_na_for_single_reps() {
    let cfg = parse_scenario("scenario = block_adversarial\nm = 9\nblock_size = 3\nalpha = 0.5\n")
        .unwrap();
    let sc = cfg.build(0).unwrap();
    let methods = vec![
        ProcedureSpec::new(Procedure::Bh, 0.5).unwrap(),
        ProcedureSpec::new(Procedure::IndBh, 0.5).unwrap(),
    ];
    let engine = EngineConfig::default();
    let a = run_simulation(&sc, &methods, 0.5, 50, 3, &engine).unwrap();
    let b = run_simulation(
        &sc,
        &methods,
        0.5,
        50,
        3,
        &EngineConfig {
            threads: Some(1),
            ..engine.clone()
        },
    )
    .unwrap();
    assert_eq!(a, b);

    let one = run_simulation(&sc, &methods, 0.5, 1, 3, &engine).unwrap();
    let mut out = Vec::new();
    let names = vec!["bh".to_string(), "indbh".to_string()];
    write_metrics_csv(&mut out, &names, 9, &compute_metrics(&one)).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("method,m,metric,estimate,se,reps\n"));
    assert!(
        text.lines()
            .filter(|l| l.contains(",fdr,"))
            .all(|l| l.ends_with(",NA,1")),
        "{text}"
    );
}
