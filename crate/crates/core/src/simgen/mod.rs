//! Synthetic p-value generators, simulation runs and their summaries.

mod adversarial;
mod cluster;
mod config;
mod gaussian;
mod metrics;
pub mod stats;

pub use adversarial::{gen_block_adversarial, AdversarialScenario};
pub use cluster::place_clustered_nonnulls;
pub use config::{parse_scenario, ScenarioConfig, ScenarioKind};
pub use gaussian::{
    estimate_bh_power, gen_banded_gaussian, gen_block_gaussian, gen_negative_gaussian,
    negative_gaussian_scenario, tune_mu_star, Dependence, GaussianScenario, GaussianSpec,
    Placement, Side, Signal, TUNING_REPS, TUNING_TOL,
};
pub use metrics::{compute_metrics, write_metrics_csv, Estimate, MetricSet, RunRecord};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::engine::EngineConfig;
use crate::error::Result;
use crate::graph::DependencyGraph;
use crate::procedures::{bh, ProcedureSpec};
use crate::pvalues::PValues;

/// One replication's p-values and sorted non-null indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub p: PValues,
    pub nonnull: Vec<usize>,
}

/// A distribution of p-vectors with a fixed dependency graph.
pub trait Scenario: Sync {
    fn m(&self) -> usize;
    fn graph(&self) -> &DependencyGraph;
    fn draw(&self, rng: &mut ChaCha12Rng) -> Result<Draw>;
}

/// The generator for replication `rep` under `seed`: a dedicated stream
/// of one seeded ChaCha generator.
pub fn rep_rng(seed: u64, rep: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

#[derive(Debug, Clone)]
pub enum SimScenario {
    Gaussian(GaussianScenario),
    BlockAdversarial(AdversarialScenario),
    NegativeGaussian(GaussianScenario),
}

impl SimScenario {
    fn inner(&self) -> &dyn Scenario {
        match self {
            SimScenario::Gaussian(s) | SimScenario::NegativeGaussian(s) => s,
            SimScenario::BlockAdversarial(s) => s,
        }
    }
}

impl Scenario for SimScenario {
    fn m(&self) -> usize {
        self.inner().m()
    }

    fn graph(&self) -> &DependencyGraph {
        self.inner().graph()
    }

    fn draw(&self, rng: &mut ChaCha12Rng) -> Result<Draw> {
        self.inner().draw(rng)
    }
}

/// Runs every method on `reps` replications, alongside BH at `alpha`. Replication `r` uses
/// [`rep_rng`]`(seed, r)`; the output is in replication order.
pub fn run_simulation<S: Scenario + ?Sized>(
    scenario: &S,
    methods: &[ProcedureSpec],
    alpha: f64,
    reps: usize,
    seed: u64,
    cfg: &EngineConfig,
) -> Result<Vec<RunRecord>> {
    let g = scenario.graph();
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let d = scenario.draw(&mut rep_rng(seed, rep as u64))?;
            let methods = methods
                .iter()
                .map(|s| s.run(&d.p, Some(g), cfg))
                .collect::<Result<Vec<_>>>()?;
            Ok(RunRecord {
                bh: bh(&d.p, alpha),
                nonnull: d.nonnull,
                methods,
            })
        })
        .collect()
}
