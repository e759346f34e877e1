//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{coinflip_reduce, CoinflipModel, Horizon};
use crate::intervention::{InterventionSpec, Remap};
use crate::template::TemplateSpec;
use crate::tmgraph::{TMParams, ThresholdDistribution};
use crate::{Error, Result};

fn default_name() -> String {
    "experiment".into()
}
fn default_count() -> u32 {
    10
}
fn default_epsilon() -> f64 {
    crate::intervention::DEFAULT_EPSILON
}
fn default_stop() -> f64 {
    0.9
}
fn default_lambda() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub graph: GraphConfig,
    pub thresholds: ThresholdSpec,
    #[serde(default)]
    pub sweep: Sweep,
    /// Independent graphs per sweep point.
    #[serde(default = "default_count")]
    pub graphs: u32,
    /// Runs (thresholds and seeds resampled) per graph.
    #[serde(default = "default_count")]
    pub trials: u32,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_stop")]
    pub stop_fraction: f64,
    /// Seed counts are `factor * Φ` for each factor; defaults to `1 ± ε`.
    #[serde(default)]
    pub seed_factors: Vec<f64>,
    #[serde(default)]
    pub intervention: Option<InterventionConfig>,
    /// Horizon used for `Φ` in dichotomy and analytic runs.
    #[serde(default)]
    pub horizon: Horizon,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Graph family. Give either `p`/`q` or the expected near/far degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub template: TemplateSpec,
    pub n: u64,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub near_degree: Option<f64>,
    #[serde(default)]
    pub far_degree: Option<f64>,
}

impl GraphConfig {
    pub fn params(&self) -> Result<TMParams> {
        let template = self.template.build()?;
        match (self.p, self.q, self.near_degree, self.far_degree) {
            (Some(p), q, None, None) => TMParams::new(template, self.n, p, q.unwrap_or(0.0)),
            (None, None, Some(near), far) => {
                TMParams::from_degrees(template, self.n, near, far.unwrap_or(0.0))
            }
            _ => Err(Error::param(
                "graph",
                "give either p (and q) or near_degree (and far_degree)",
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdSpec {
    Uniform {
        r: u32,
    },
    /// `zeta[i]` is the probability of threshold `i + 1`.
    Explicit {
        zeta: ThresholdDistribution,
    },
    /// Susceptible after `s` contacts, coin `z` per further contact, forced at `cap`.
    Coinflip {
        s: u32,
        z: f64,
        cap: u32,
    },
}

/// What varies across sweep points.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    #[default]
    None,
    /// Two-threshold mixture: `high` with each listed probability, else `low`.
    Mix {
        low: u32,
        high: u32,
        fractions: Vec<f64>,
    },
    /// Coin probability of a coinflip threshold spec.
    Z { values: Vec<f64> },
    /// Intervention strength.
    Alpha { values: Vec<f64> },
    /// Absolute seed counts, replacing the `factor * Φ` levels.
    Seeds { values: Vec<u64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Threshold 2 becomes 3 w.p. `α`, else 4.
    BolsterA,
    /// Threshold 2 becomes 3 w.p. `(1 + α)/2`, else 5.
    BolsterB,
    /// Every threshold `r` rises geometrically with `z' = α`, capped at `cap`.
    Delay,
    /// `alpha_p = α`, `alpha_q = q_ratio * α`.
    Diminish,
    Sequester,
    /// Fixed `remap` table; no alpha axis.
    Bolster,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionConfig {
    pub strategy: Strategy,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Baseline seed count (should be super-critical so the trigger is reached).
    pub seeds: u64,
    /// Also compute the `|I(τ)|` at which the prediction flips.
    #[serde(default)]
    pub boundary: bool,
    /// Diminish / Sequester: `alpha_q / alpha_p` (default 1).
    #[serde(default)]
    pub q_ratio: Option<f64>,
    /// Delay: largest threshold.
    #[serde(default)]
    pub cap: Option<u32>,
    /// Bolster: explicit remap table.
    #[serde(default)]
    pub remap: Option<Vec<Remap>>,
    #[serde(default)]
    pub save_vertices: bool,
    #[serde(default)]
    pub allow_weakening: bool,
}

impl InterventionConfig {
    pub fn uses_alpha(&self) -> bool {
        self.strategy != Strategy::Bolster
    }

    fn check_fields(&self) -> Result<()> {
        let s = self.strategy;
        let stray = |field: &str| {
            Err(Error::param(
                "intervention",
                format!("`{field}` does not apply to {s:?}"),
            ))
        };
        if self.q_ratio.is_some() && !matches!(s, Strategy::Diminish | Strategy::Sequester) {
            return stray("q_ratio");
        }
        if self.cap.is_some() != (s == Strategy::Delay) {
            return if s == Strategy::Delay {
                Err(Error::param("cap", "Delay needs `cap`"))
            } else {
                stray("cap")
            };
        }
        if self.remap.is_some() != (s == Strategy::Bolster) {
            return if s == Strategy::Bolster {
                Err(Error::param("remap", "Bolster needs `remap`"))
            } else {
                stray("remap")
            };
        }
        if (self.save_vertices || self.allow_weakening) && s != Strategy::Bolster {
            return stray("save_vertices/allow_weakening");
        }
        Ok(())
    }

    pub fn spec(&self, alpha: f64) -> Result<InterventionSpec> {
        self.check_fields()?;
        let ratio = self.q_ratio.unwrap_or(1.0);
        let spec = match self.strategy {
            Strategy::BolsterA => InterventionSpec::bolster_a(alpha, self.lambda)?,
            Strategy::BolsterB => InterventionSpec::bolster_b(alpha, self.lambda)?,
            Strategy::Delay => InterventionSpec::delay(alpha, self.cap.unwrap_or(0), self.lambda),
            Strategy::Diminish => InterventionSpec::diminish(alpha, ratio * alpha, self.lambda),
            Strategy::Sequester => InterventionSpec::sequester(alpha, ratio * alpha, self.lambda),
            Strategy::Bolster => InterventionSpec {
                variant: crate::intervention::Variant::Bolster {
                    remap: self.remap.clone().unwrap_or_default(),
                    save_vertices: self.save_vertices,
                    allow_weakening: self.allow_weakening,
                },
                lambda: self.lambda,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// One concrete sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    /// Value on the sweep axis (NaN when there is no axis).
    pub value: f64,
    pub thresholds: ThresholdSpec,
    pub alpha: Option<f64>,
    pub seeds: Option<u64>,
}

impl ThresholdSpec {
    /// Law of thresholds, coinflip models reduced to their equivalent.
    pub fn distribution(&self) -> Result<ThresholdDistribution> {
        match self {
            ThresholdSpec::Uniform { r } => ThresholdDistribution::point_mass(*r),
            ThresholdSpec::Explicit { zeta } => Ok(zeta.clone()),
            ThresholdSpec::Coinflip { s, z, cap } => {
                coinflip_reduce(&CoinflipModel::uniform(*s, *z, *cap))
            }
        }
    }

    pub fn coinflip(&self) -> Option<CoinflipModel> {
        match self {
            ThresholdSpec::Coinflip { s, z, cap } => Some(CoinflipModel::uniform(*s, *z, *cap)),
            _ => None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::param("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::param("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.params()?;
        if self.graphs == 0 || self.trials == 0 {
            return Err(Error::param(
                "trials",
                "graphs and trials must be at least 1",
            ));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::param(
                "epsilon",
                format!("{} is outside [0, 1)", self.epsilon),
            ));
        }
        if !(self.stop_fraction > 0.0 && self.stop_fraction <= 1.0) {
            return Err(Error::param(
                "stop_fraction",
                format!("{} is outside (0, 1]", self.stop_fraction),
            ));
        }
        if self.seed_factors.iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::param("seed_factors", "factors must be non-negative"));
        }
        let empty = match &self.sweep {
            Sweep::None => false,
            Sweep::Mix { fractions, .. } => fractions.is_empty(),
            Sweep::Z { values } | Sweep::Alpha { values } => values.is_empty(),
            Sweep::Seeds { values } => values.is_empty(),
        };
        if empty {
            return Err(Error::param("sweep", "grid is empty"));
        }
        if matches!(self.sweep, Sweep::Z { .. }) && self.thresholds.coinflip().is_none() {
            return Err(Error::param("sweep", "a z sweep needs coinflip thresholds"));
        }
        if matches!(self.sweep, Sweep::Alpha { .. }) && self.intervention.is_none() {
            return Err(Error::param(
                "sweep",
                "an alpha sweep needs an intervention",
            ));
        }
        for point in self.points()? {
            point.thresholds.distribution()?;
            if let (Some(alpha), Some(iv)) = (point.alpha, &self.intervention) {
                iv.spec(alpha)?;
            }
        }
        if let Some(iv) = &self.intervention {
            iv.check_fields()?;
            if iv.uses_alpha() != matches!(self.sweep, Sweep::Alpha { .. }) {
                return Err(Error::param(
                    "sweep",
                    format!(
                        "{:?} needs an alpha sweep exactly when it has an alpha",
                        iv.strategy
                    ),
                ));
            }
            if self.thresholds.coinflip().is_some() {
                return Err(Error::param(
                    "thresholds",
                    "interventions run on threshold dynamics",
                ));
            }
            if iv.seeds > self.graph.n {
                return Err(Error::TooManySeeds {
                    seeds: iv.seeds,
                    n: self.graph.n,
                });
            }
            if iv.lambda >= self.stop_fraction {
                return Err(Error::param(
                    "lambda",
                    "trigger must lie below the stop fraction",
                ));
            }
        }
        Ok(())
    }

    /// Seed-count multipliers of `Φ`.
    pub fn factors(&self) -> Vec<f64> {
        if self.seed_factors.is_empty() {
            vec![1.0 - self.epsilon, 1.0 + self.epsilon]
        } else {
            self.seed_factors.clone()
        }
    }

    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let base = |index, value| SweepPoint {
            index,
            value,
            thresholds: self.thresholds.clone(),
            alpha: None,
            seeds: None,
        };
        Ok(match &self.sweep {
            Sweep::None => vec![base(0, f64::NAN)],
            Sweep::Mix {
                low,
                high,
                fractions,
            } => fractions
                .iter()
                .enumerate()
                .map(|(i, &f)| {
                    Ok(SweepPoint {
                        thresholds: ThresholdSpec::Explicit {
                            zeta: ThresholdDistribution::two_point(*low, *high, f)?,
                        },
                        ..base(i, f)
                    })
                })
                .collect::<Result<_>>()?,
            Sweep::Z { values } => {
                let ThresholdSpec::Coinflip { s, cap, .. } = self.thresholds else {
                    return Err(Error::param("sweep", "a z sweep needs coinflip thresholds"));
                };
                values
                    .iter()
                    .enumerate()
                    .map(|(i, &z)| SweepPoint {
                        thresholds: ThresholdSpec::Coinflip { s, z, cap },
                        ..base(i, z)
                    })
                    .collect()
            }
            Sweep::Alpha { values } => values
                .iter()
                .enumerate()
                .map(|(i, &a)| SweepPoint {
                    alpha: Some(a),
                    ..base(i, a)
                })
                .collect(),
            Sweep::Seeds { values } => values
                .iter()
                .enumerate()
                .map(|(i, &s)| SweepPoint {
                    seeds: Some(s),
                    ..base(i, s as f64)
                })
                .collect(),
        })
    }

    /// SHA-256 over the canonical (key-sorted) JSON form of the config.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
