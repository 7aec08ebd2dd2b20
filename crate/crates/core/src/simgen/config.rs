//! Flat `key = value` scenario files.
//!
//! ```text
//! # block scenario with scattered signals
//! scenario = gaussian        # gaussian | block_adversarial | negative_gaussian
//! m = 2500
//! dependence = block         # block | banded
//! block_size = 100
//! rho = 0.5
//! placement = uniform        # uniform | clustered
//! pi0 = 0.9
//! signal = random_exp        # fixed | random_exp
//! tarpow = 0.6               # used when mu_star is absent
//! alpha = 0.1
//! ```
//!
//! Other keys: `bandwidth`, `lambda0`, `tau`, `mu_star`, `side` (`two` |
//! `one`). The adversarial scenario uses `m`, `block_size` and `alpha`; the
//! negative Gaussian one uses `m`, `block_size` and `rho`.

use std::collections::BTreeMap;

use super::gaussian::{
    negative_gaussian_scenario, tune_mu_star, Dependence, GaussianScenario, GaussianSpec,
    Placement, Side, Signal,
};
use super::{AdversarialScenario, SimScenario};
use crate::bounds::CliqueCover;
use crate::error::{Error, Result};

const KEYS: &[&str] = &[
    "scenario",
    "m",
    "dependence",
    "block_size",
    "bandwidth",
    "rho",
    "placement",
    "pi0",
    "lambda0",
    "tau",
    "signal",
    "mu_star",
    "tarpow",
    "side",
    "alpha",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    Gaussian {
        spec: GaussianSpec,
        /// Target BH power when the signal size is to be tuned.
        tarpow: Option<f64>,
    },
    BlockAdversarial {
        m: usize,
        block_size: usize,
    },
    NegativeGaussian {
        m: usize,
        block_size: usize,
        rho: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub alpha: f64,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn str(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.map.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::Parse {
                line: *line,
                message: format!("invalid value '{v}' for {key}"),
            }),
        }
    }

    fn req<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.num(key)?
            .ok_or_else(|| Error::param(format!("scenario is missing '{key}'")))
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: n + 1,
            message: format!("expected key = value, got '{line}'"),
        })?;
        let (k, v) = (k.trim().to_ascii_lowercase(), v.trim().to_string());
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::Parse {
                line: n + 1,
                message: format!("unknown key '{k}'"),
            });
        }
        if map.insert(k.clone(), (n + 1, v)).is_some() {
            return Err(Error::Parse {
                line: n + 1,
                message: format!("duplicate key '{k}'"),
            });
        }
    }
    let e = Entries { map };
    let alpha: f64 = e.num("alpha")?.unwrap_or(0.1);
    let m: usize = e.req("m")?;
    let kind = match e.str("scenario").unwrap_or("gaussian") {
        "gaussian" => {
            let rho: f64 = e.num("rho")?.unwrap_or(0.0);
            let dependence = match e.str("dependence").unwrap_or("block") {
                "block" => Dependence::Block {
                    size: e.num("block_size")?.unwrap_or(1),
                    rho,
                },
                "banded" => Dependence::Banded {
                    bandwidth: e.num("bandwidth")?.unwrap_or(1),
                    rho,
                },
                other => return Err(Error::param(format!("unknown dependence '{other}'"))),
            };
            let pi0: f64 = e.num("pi0")?.unwrap_or(1.0);
            let placement = match e.str("placement").unwrap_or("uniform") {
                "uniform" => Placement::Uniform { pi0 },
                "clustered" => Placement::Clustered {
                    pi0,
                    lambda0: e.req("lambda0")?,
                    tau: e.req("tau")?,
                },
                other => return Err(Error::param(format!("unknown placement '{other}'"))),
            };
            let mu: Option<f64> = e.num("mu_star")?;
            let tarpow: Option<f64> = e.num("tarpow")?;
            if mu.is_none() && tarpow.is_none() && pi0 < 1.0 {
                return Err(Error::param("scenario needs mu_star or tarpow"));
            }
            let mu_val = mu.unwrap_or(0.0);
            let signal = match e.str("signal").unwrap_or("fixed") {
                "fixed" => Signal::Fixed(mu_val),
                "random_exp" => Signal::RandomExp(mu_val),
                other => return Err(Error::param(format!("unknown signal '{other}'"))),
            };
            let side = match e.str("side").unwrap_or("two") {
                "two" => Side::Two,
                "one" => Side::One,
                other => return Err(Error::param(format!("unknown side '{other}'"))),
            };
            ScenarioKind::Gaussian {
                spec: GaussianSpec {
                    m,
                    dependence,
                    placement,
                    signal,
                    side,
                },
                tarpow: if mu.is_some() { None } else { tarpow },
            }
        }
        "block_adversarial" => ScenarioKind::BlockAdversarial {
            m,
            block_size: e.req("block_size")?,
        },
        "negative_gaussian" => ScenarioKind::NegativeGaussian {
            m,
            block_size: e.req("block_size")?,
            rho: e.req("rho")?,
        },
        other => return Err(Error::param(format!("unknown scenario '{other}'"))),
    };
    Ok(ScenarioConfig { kind, alpha })
}

impl ScenarioConfig {
    pub fn m(&self) -> usize {
        match &self.kind {
            ScenarioKind::Gaussian { spec, .. } => spec.m,
            ScenarioKind::BlockAdversarial { m, .. } | ScenarioKind::NegativeGaussian { m, .. } => {
                *m
            }
        }
    }

    /// Builds the scenario, tuning the signal size first when requested.
    pub fn build(&self, seed: u64) -> Result<SimScenario> {
        Ok(match &self.kind {
            ScenarioKind::Gaussian { spec, tarpow } => {
                let mut spec = *spec;
                if let Some(t) = tarpow {
                    let mu = tune_mu_star(&spec, *t, self.alpha, seed)?;
                    spec.signal = spec.signal.with_mu_star(mu);
                }
                SimScenario::Gaussian(GaussianScenario::new(spec)?)
            }
            ScenarioKind::BlockAdversarial { m, block_size } => {
                if *block_size == 0 || m % block_size != 0 {
                    return Err(Error::param(format!(
                        "block size {block_size} must divide m = {m}"
                    )));
                }
                let cover = CliqueCover::equal_blocks(*m, *block_size)?;
                SimScenario::BlockAdversarial(AdversarialScenario::new(cover, self.alpha)?)
            }
            ScenarioKind::NegativeGaussian { m, block_size, rho } => {
                SimScenario::NegativeGaussian(negative_gaussian_scenario(*m, *block_size, *rho)?)
            }
        })
    }
}
