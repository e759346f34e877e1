//! Browser bindings. Every entry point takes and returns a JSON string so the
//! page can stay plain JavaScript.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use tmperc::analytic::{AnalyticModel, AssumptionReport, Horizon};
use tmperc::engine::{run_standard, EngineConfig, SpreadOutcome};
use tmperc::intervention::{
    predict, run_with_intervention, surrogate, InterventionSpec, Prediction,
};
use tmperc::rng::{purpose, substream};
use tmperc::template::TemplateSpec;
use tmperc::tmgraph::{
    assign_thresholds, sample_graph, select_seeds, TMParams, ThresholdDistribution,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelInput {
    pub template: TemplateSpec,
    pub n: u64,
    pub near_degree: f64,
    #[serde(default)]
    pub far_degree: f64,
    /// `ζ_r` at index `r - 1`.
    pub zeta: Vec<f64>,
    #[serde(default)]
    pub horizon: Horizon,
}

impl ModelInput {
    fn build(&self) -> Result<(TMParams, ThresholdDistribution), String> {
        let template = self.template.build().map_err(|e| e.to_string())?;
        let params = TMParams::from_degrees(template, self.n, self.near_degree, self.far_degree)
            .map_err(|e| e.to_string())?;
        let dist =
            ThresholdDistribution::from_weights(self.zeta.clone()).map_err(|e| e.to_string())?;
        Ok((params, dist))
    }
}

#[derive(Serialize)]
pub struct CurveOutput {
    pub phi: u64,
    pub t_star: u64,
    pub t_max: u64,
    pub f_min: f64,
    pub f_curve: Vec<f64>,
    pub a_curve: Vec<f64>,
    pub p: f64,
    pub q: f64,
    pub assumptions: AssumptionReport,
}

pub fn critical_curve_impl(input: &ModelInput) -> Result<CurveOutput, String> {
    let (params, dist) = input.build()?;
    let (p, q) = (params.p, params.q);
    let model =
        AnalyticModel::with_horizon(params, dist, input.horizon).map_err(|e| e.to_string())?;
    let result = model.critical_seed();
    Ok(CurveOutput {
        phi: result.phi,
        t_star: result.t_star,
        t_max: result.t_max,
        f_min: result.f_min,
        f_curve: result.f_curve,
        a_curve: (1..=model.t_max()).map(|t| model.a(t)).collect(),
        p,
        q,
        assumptions: result.assumptions,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateInput {
    #[serde(flatten)]
    pub model: ModelInput,
    pub seeds: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Serialize)]
pub struct SimulateOutput {
    pub totals: Vec<u64>,
    pub outcome: SpreadOutcome,
    pub final_fraction: f64,
}

pub fn simulate_impl(input: &SimulateInput) -> Result<SimulateOutput, String> {
    let (params, dist) = input.model.build()?;
    let n = params.n;
    let g = sample_graph(&params, &mut substream(input.seed, &[purpose::GRAPH]))
        .map_err(|e| e.to_string())?;
    let thresholds =
        assign_thresholds(&dist, n, &mut substream(input.seed, &[purpose::THRESHOLDS]));
    let seeds = select_seeds(
        input.seeds,
        n,
        &mut substream(input.seed, &[purpose::SEEDS]),
    )
    .map_err(|e| e.to_string())?;
    let trace = run_standard(&g, &thresholds, &seeds, &EngineConfig::default())
        .map_err(|e| e.to_string())?;
    Ok(SimulateOutput {
        totals: trace.totals(),
        outcome: trace.outcome,
        final_fraction: trace.final_fraction(),
    })
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    BolsterA,
    BolsterB,
    Diminish,
    Sequester,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictInput {
    #[serde(flatten)]
    pub model: ModelInput,
    pub seeds: u64,
    #[serde(default)]
    pub seed: u64,
    pub strategy: Strategy,
    pub alpha: f64,
    /// `α_q / α_p` for edge-deleting strategies.
    #[serde(default = "one")]
    pub q_ratio: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn one() -> f64 {
    1.0
}

fn default_lambda() -> f64 {
    0.1
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Serialize)]
pub struct PredictOutput {
    pub triggered: bool,
    pub tau: Option<u64>,
    pub infected_tau: Option<u64>,
    pub phi_j: Option<f64>,
    pub critical_j: Option<u64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub prediction: Option<Prediction>,
    pub outcome: SpreadOutcome,
    pub totals: Vec<u64>,
    pub final_fraction: f64,
}

pub fn predict_intervention_impl(input: &PredictInput) -> Result<PredictOutput, String> {
    let (params, dist) = input.model.build()?;
    let n = params.n;
    let spec = match input.strategy {
        Strategy::BolsterA => {
            InterventionSpec::bolster_a(input.alpha, input.lambda).map_err(|e| e.to_string())?
        }
        Strategy::BolsterB => {
            InterventionSpec::bolster_b(input.alpha, input.lambda).map_err(|e| e.to_string())?
        }
        Strategy::Diminish => {
            InterventionSpec::diminish(input.alpha, input.q_ratio * input.alpha, input.lambda)
        }
        Strategy::Sequester => {
            InterventionSpec::sequester(input.alpha, input.q_ratio * input.alpha, input.lambda)
        }
    };
    let g = sample_graph(&params, &mut substream(input.seed, &[purpose::GRAPH]))
        .map_err(|e| e.to_string())?;
    let thresholds =
        assign_thresholds(&dist, n, &mut substream(input.seed, &[purpose::THRESHOLDS]));
    let seeds = select_seeds(
        input.seeds,
        n,
        &mut substream(input.seed, &[purpose::SEEDS]),
    )
    .map_err(|e| e.to_string())?;
    let run = run_with_intervention(
        &g,
        &thresholds,
        &seeds,
        &EngineConfig::default(),
        &spec,
        &mut substream(input.seed, &[purpose::INTERVENTION]),
    )
    .map_err(|e| e.to_string())?;
    let verdict = match &run.observed {
        Some(state) => {
            let j = surrogate(state, &spec, &params).map_err(|e| e.to_string())?;
            Some(predict(&j, input.epsilon).map_err(|e| e.to_string())?)
        }
        None => None,
    };
    Ok(PredictOutput {
        triggered: run.triggered(),
        tau: run.observed.as_ref().map(|s| s.tau),
        infected_tau: run.observed.as_ref().map(|s| s.infected),
        phi_j: verdict.as_ref().map(|v| v.phi_j),
        critical_j: verdict.as_ref().map(|v| v.critical),
        lower: verdict.as_ref().map(|v| v.lower),
        upper: verdict.as_ref().map(|v| v.upper),
        prediction: verdict.map(|v| v.outcome),
        outcome: run.trace.outcome,
        totals: run.trace.totals(),
        final_fraction: run.trace.final_fraction(),
    })
}

fn call<I: for<'de> Deserialize<'de>, O: Serialize>(
    json: &str,
    f: impl FnOnce(&I) -> Result<O, String>,
) -> Result<String, JsError> {
    let input: I = serde_json::from_str(json).map_err(|e| JsError::new(&e.to_string()))?;
    let output = f(&input).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&output).map_err(|e| JsError::new(&e.to_string()))
}

/// `Φ`, `t*` and the curves `f(Φ, t)` and `A(t)` over the horizon.
#[wasm_bindgen]
pub fn critical_curve(json: &str) -> Result<String, JsError> {
    call(json, critical_curve_impl)
}

/// One standard run; returns the infected total after each generation.
#[wasm_bindgen]
pub fn simulate(json: &str) -> Result<String, JsError> {
    call(json, simulate_impl)
}

/// Run to the trigger, predict the intervention's outcome, then finish the run.
#[wasm_bindgen]
pub fn predict_intervention(json: &str) -> Result<String, JsError> {
    call(json, predict_intervention_impl)
}
