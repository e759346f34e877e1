//! Dichotomy and intervention sweeps.
//!
//! Every run draws from its own substream, keyed by graph, trial, sweep point
//! and purpose, so results do not depend on scheduling. The graph of index `g`
//! is shared by all sweep points.

use rayon::prelude::*;

use super::config::{ExperimentConfig, SweepPoint};
use super::emit::{Cell, Kind, Table};
use crate::analytic::{AnalyticModel, AssumptionReport, CriticalResult};
use crate::engine::{simulate, CoinflipState, Dynamics, EngineConfig, Mode, SpreadOutcome};
use crate::intervention::{
    boundary_infected, predict, run_with_intervention, surrogate, Prediction, VerdictFlag,
};
use crate::rng::{derive_seed, purpose, substream};
use crate::tmgraph::{assign_thresholds, sample_graph, select_seeds, SampledGraph, TMParams};
use crate::{Error, Result};

/// Final fraction below which a run counts as contained.
pub const CONTAINED_FRACTION: f64 = 0.1;

/// Analytic prediction for one sweep point.
#[derive(Clone, Debug)]
pub struct PointAnalysis {
    pub point: SweepPoint,
    pub result: std::result::Result<CriticalResult, String>,
}

fn failed_assumptions(report: &AssumptionReport) -> String {
    let mut failed = Vec::new();
    if !report.beta_ok {
        failed.push("beta");
    }
    if !report.low_threshold_ok {
        failed.push("low_threshold");
    }
    if !report.sparse_ok {
        failed.push("sparse");
    }
    if !report.q_le_p {
        failed.push("q_le_p");
    }
    if !report.p_le_half {
        failed.push("p_le_half");
    }
    if report.horizon_capped {
        failed.push("horizon_capped");
    }
    failed.join(";")
}

fn flag_names(flags: &[VerdictFlag]) -> String {
    flags
        .iter()
        .map(|f| match f {
            VerdictFlag::TooLate { .. } => "too_late",
            VerdictFlag::LowThresholdViolated { .. } => "low_threshold_violated",
            VerdictFlag::WeakeningAllowed => "weakening_allowed",
            VerdictFlag::ClusterHeterogeneity { .. } => "cluster_heterogeneity",
            VerdictFlag::DecayViolated { .. } => "decay_violated",
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// Compute `Φ` and `t*` for every sweep point.
pub fn analyze(config: &ExperimentConfig) -> Result<Vec<PointAnalysis>> {
    let params = config.graph.params()?;
    config
        .points()?
        .into_iter()
        .map(|point| {
            let dist = point.thresholds.distribution()?;
            let result = AnalyticModel::with_horizon(params.clone(), dist, config.horizon)
                .map(|m| m.critical_seed())
                .map_err(|e| e.to_string());
            Ok(PointAnalysis { point, result })
        })
        .collect()
}

pub fn analysis_table(analysis: &[PointAnalysis]) -> Table {
    let mut table = Table::new(
        "analytic",
        &[
            ("point", Kind::Int),
            ("value", Kind::Float),
            ("phi", Kind::Int),
            ("t_star", Kind::Int),
            ("t_max", Kind::Int),
            ("f_min", Kind::Float),
            ("beta", Kind::Float),
            ("within_theory", Kind::Bool),
            ("failed_assumptions", Kind::Text),
            ("error", Kind::Text),
        ],
    );
    for a in analysis {
        let row = match &a.result {
            Ok(r) => vec![
                a.point.index.into(),
                a.point.value.into(),
                r.phi.into(),
                r.t_star.into(),
                r.t_max.into(),
                r.f_min.into(),
                r.assumptions.beta.into(),
                r.assumptions.within_theory().into(),
                failed_assumptions(&r.assumptions).into(),
                "".into(),
            ],
            Err(e) => {
                let mut row = vec![a.point.index.into(), a.point.value.into()];
                row.extend(std::iter::repeat_n(Cell::Null, 6));
                row.extend(["".into(), e.as_str().into()]);
                row
            }
        };
        table.push(row);
    }
    table
}

fn graph_for(config: &ExperimentConfig, params: &TMParams, g: u32) -> Result<SampledGraph> {
    sample_graph(
        params,
        &mut substream(config.master_seed, &[g as u64, purpose::GRAPH]),
    )
}

fn engine_config(config: &ExperimentConfig, mode: Mode) -> EngineConfig {
    EngineConfig {
        stop_fraction: config.stop_fraction,
        ..EngineConfig::with_mode(mode)
    }
}

#[derive(Clone, Debug)]
struct DichotomyRun {
    point: usize,
    value: f64,
    level: usize,
    factor: f64,
    seeds: u64,
    graph: u32,
    trial: u32,
    phi: u64,
    final_fraction: f64,
    end_generation: u64,
    outcome: SpreadOutcome,
    run_seed: u64,
}

#[derive(Clone, Debug)]
pub struct DichotomyOutput {
    pub analysis: Vec<PointAnalysis>,
    pub runs: Table,
    pub summary: Table,
}

/// Seed-count levels `(factor, count)` for a point.
fn levels(config: &ExperimentConfig, point: &SweepPoint, phi: u64) -> Vec<(f64, u64)> {
    match point.seeds {
        Some(s) => vec![(f64::NAN, s.min(config.graph.n))],
        None => config
            .factors()
            .into_iter()
            .map(|f| (f, ((f * phi as f64).round() as u64).min(config.graph.n)))
            .collect(),
    }
}

/// Simulate each sweep point at seed counts `factor * Φ`.
pub fn run_dichotomy(config: &ExperimentConfig) -> Result<DichotomyOutput> {
    if config.intervention.is_some() {
        return Err(Error::param(
            "intervention",
            "dichotomy sweeps take no intervention",
        ));
    }
    let params = config.graph.params()?;
    let analysis = analyze(config)?;
    let runs: Vec<DichotomyRun> = (0..config.graphs)
        .into_par_iter()
        .map(|g| -> Result<Vec<DichotomyRun>> {
            let graph = graph_for(config, &params, g)?;
            let tasks: Vec<(u32, &PointAnalysis)> = (0..config.trials)
                .flat_map(|t| {
                    analysis
                        .iter()
                        .filter(|a| a.result.is_ok())
                        .map(move |a| (t, a))
                })
                .collect();
            let rows = tasks
                .into_par_iter()
                .map(|(t, a)| dichotomy_task(config, &graph, g, t, a))
                .collect::<Result<Vec<_>>>()?;
            Ok(rows.into_iter().flatten().collect())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut runs = runs;
    runs.sort_by_key(|r| (r.point, r.level, r.graph, r.trial));
    Ok(DichotomyOutput {
        runs: dichotomy_runs_table(config, &runs),
        summary: dichotomy_summary(config, &analysis, &runs),
        analysis,
    })
}

fn dichotomy_task(
    config: &ExperimentConfig,
    graph: &SampledGraph,
    g: u32,
    t: u32,
    analysis: &PointAnalysis,
) -> Result<Vec<DichotomyRun>> {
    let point = &analysis.point;
    let phi = analysis.result.as_ref().map(|r| r.phi).unwrap_or(0);
    let n = graph.n();
    let base = [g as u64, t as u64, point.index as u64];
    let path = |extra: &[u64]| [&base[..], extra].concat();
    let mut threshold_rng = substream(config.master_seed, &path(&[purpose::THRESHOLDS]));
    let coinflip = point.thresholds.coinflip();
    let (thresholds, coin_state) = match &coinflip {
        Some(model) => (
            None,
            Some(CoinflipState::sample(model, n, &mut threshold_rng)?),
        ),
        None => {
            let dist = point.thresholds.distribution()?;
            (
                Some(assign_thresholds(&dist, n as u64, &mut threshold_rng)),
                None,
            )
        }
    };
    let (dynamics, mode) = match (&thresholds, &coin_state) {
        (Some(th), _) => (Dynamics::Thresholds(th), Mode::Standard),
        (_, Some(cs)) => (Dynamics::Coinflip(cs), Mode::Coinflip),
        _ => unreachable!("one of the two is set"),
    };
    let engine = engine_config(config, mode);
    levels(config, point, phi)
        .into_iter()
        .enumerate()
        .map(|(level, (factor, count))| {
            let seeds = select_seeds(
                count,
                n as u64,
                &mut substream(config.master_seed, &path(&[level as u64, purpose::SEEDS])),
            )?;
            let mut rng = substream(
                config.master_seed,
                &path(&[level as u64, purpose::DYNAMICS]),
            );
            let trace = simulate(graph, dynamics, &seeds, &engine, &mut rng)?;
            Ok(DichotomyRun {
                point: point.index,
                value: point.value,
                level,
                factor,
                seeds: count,
                graph: g,
                trial: t,
                phi,
                final_fraction: trace.final_fraction(),
                end_generation: trace.end_generation,
                outcome: trace.outcome,
                run_seed: derive_seed(config.master_seed, &path(&[level as u64])),
            })
        })
        .collect()
}

fn outcome_name(outcome: SpreadOutcome) -> &'static str {
    match outcome {
        SpreadOutcome::Spread => "spread",
        SpreadOutcome::Halted => "halted",
    }
}

fn dichotomy_runs_table(config: &ExperimentConfig, runs: &[DichotomyRun]) -> Table {
    let mut table = Table::new(
        "dichotomy_runs",
        &[
            ("point", Kind::Int),
            ("value", Kind::Float),
            ("level", Kind::Int),
            ("factor", Kind::Float),
            ("seeds", Kind::Int),
            ("graph", Kind::Int),
            ("trial", Kind::Int),
            ("graph_seed", Kind::Text),
            ("run_seed", Kind::Text),
            ("phi", Kind::Int),
            ("lower", Kind::Float),
            ("upper", Kind::Float),
            ("final_fraction", Kind::Float),
            ("end_generation", Kind::Int),
            ("outcome", Kind::Text),
        ],
    );
    for r in runs {
        table.push(vec![
            r.point.into(),
            r.value.into(),
            r.level.into(),
            r.factor.into(),
            r.seeds.into(),
            r.graph.into(),
            r.trial.into(),
            format!(
                "{:016x}",
                derive_seed(config.master_seed, &[r.graph as u64, purpose::GRAPH])
            )
            .into(),
            format!("{:016x}", r.run_seed).into(),
            r.phi.into(),
            ((1.0 - config.epsilon) * r.phi as f64).into(),
            ((1.0 + config.epsilon) * r.phi as f64).into(),
            r.final_fraction.into(),
            r.end_generation.into(),
            outcome_name(r.outcome).into(),
        ]);
    }
    table
}

fn dichotomy_summary(
    config: &ExperimentConfig,
    analysis: &[PointAnalysis],
    runs: &[DichotomyRun],
) -> Table {
    let mut table = Table::new(
        "dichotomy_summary",
        &[
            ("point", Kind::Int),
            ("value", Kind::Float),
            ("level", Kind::Int),
            ("factor", Kind::Float),
            ("seeds", Kind::Int),
            ("phi", Kind::Int),
            ("t_star", Kind::Int),
            ("within_theory", Kind::Bool),
            ("failed_assumptions", Kind::Text),
            ("runs", Kind::Int),
            ("spread_fraction", Kind::Float),
            ("contained_fraction", Kind::Float),
            ("error", Kind::Text),
        ],
    );
    for a in analysis {
        let result = match &a.result {
            Ok(r) => r,
            Err(e) => {
                let mut row = vec![a.point.index.into(), a.point.value.into()];
                row.extend(std::iter::repeat_n(Cell::Null, 10));
                row.push(e.as_str().into());
                table.push(row);
                continue;
            }
        };
        for (level, (factor, seeds)) in levels(config, &a.point, result.phi).into_iter().enumerate()
        {
            let group: Vec<&DichotomyRun> = runs
                .iter()
                .filter(|r| r.point == a.point.index && r.level == level)
                .collect();
            let total = group.len() as f64;
            let spread = group
                .iter()
                .filter(|r| r.outcome == SpreadOutcome::Spread)
                .count() as f64;
            let contained = group
                .iter()
                .filter(|r| r.final_fraction < CONTAINED_FRACTION)
                .count() as f64;
            table.push(vec![
                a.point.index.into(),
                a.point.value.into(),
                level.into(),
                factor.into(),
                seeds.into(),
                result.phi.into(),
                result.t_star.into(),
                result.assumptions.within_theory().into(),
                failed_assumptions(&result.assumptions).into(),
                group.len().into(),
                (spread / total).into(),
                (contained / total).into(),
                "".into(),
            ]);
        }
    }
    table
}

/// One intervention run with its prediction.
#[derive(Clone, Debug)]
pub struct InterventionRow {
    pub point: usize,
    pub alpha: f64,
    pub graph: u32,
    pub trial: u32,
    pub seeds: u64,
    pub run_seed: u64,
    pub tau: Option<u64>,
    pub infected_tau: Option<u64>,
    pub delta: Option<u64>,
    pub phi_j: Option<f64>,
    pub critical_j: Option<u64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub t_star_j: Option<u64>,
    pub prediction: Option<Prediction>,
    pub outcome: SpreadOutcome,
    pub final_fraction: f64,
    pub flags: String,
    pub boundary: Option<u64>,
    pub error: String,
}

impl InterventionRow {
    /// `None` for untriggered runs and predictions inside the band.
    pub fn agrees(&self) -> Option<bool> {
        self.prediction.and_then(|p| p.agrees_with(self.outcome))
    }
}

#[derive(Clone, Debug)]
pub struct InterventionOutput {
    pub rows: Vec<InterventionRow>,
    pub runs: Table,
    pub summary: Table,
}

/// Run each baseline to the trigger, predict, intervene and finish the run.
pub fn run_intervention(config: &ExperimentConfig) -> Result<InterventionOutput> {
    if config.intervention.is_none() {
        return Err(Error::param(
            "intervention",
            "an intervention sweep needs an [intervention] section",
        ));
    };
    config.validate()?;
    let params = config.graph.params()?;
    let points = config.points()?;
    let mut rows: Vec<InterventionRow> = (0..config.graphs)
        .into_par_iter()
        .map(|g| -> Result<Vec<InterventionRow>> {
            let graph = graph_for(config, &params, g)?;
            let tasks: Vec<(u32, &SweepPoint)> = (0..config.trials)
                .flat_map(|t| points.iter().map(move |p| (t, p)))
                .collect();
            tasks
                .into_par_iter()
                .map(|(t, point)| intervention_task(config, &params, &graph, g, t, point))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by_key(|r| (r.point, r.graph, r.trial));
    Ok(InterventionOutput {
        runs: intervention_runs_table(config, &rows),
        summary: intervention_summary(&points, &rows),
        rows,
    })
}

fn intervention_task(
    config: &ExperimentConfig,
    params: &TMParams,
    graph: &SampledGraph,
    g: u32,
    t: u32,
    point: &SweepPoint,
) -> Result<InterventionRow> {
    let iv = config.intervention.as_ref().expect("checked by caller");
    let alpha = point.alpha.unwrap_or(f64::NAN);
    let spec = iv.spec(if alpha.is_nan() { 0.0 } else { alpha })?;
    let n = graph.n() as u64;
    // Baseline randomness ignores the sweep point, so every alpha sees the
    // same pre-trigger trajectory.
    let dist = point.thresholds.distribution()?;
    let thresholds = assign_thresholds(
        &dist,
        n,
        &mut substream(
            config.master_seed,
            &[g as u64, t as u64, purpose::THRESHOLDS],
        ),
    );
    let count = point.seeds.unwrap_or(iv.seeds);
    let seeds = select_seeds(
        count,
        n,
        &mut substream(config.master_seed, &[g as u64, t as u64, purpose::SEEDS]),
    )?;
    let path = [
        g as u64,
        t as u64,
        point.index as u64,
        purpose::INTERVENTION,
    ];
    let mut rng = substream(config.master_seed, &path);
    let engine = engine_config(config, Mode::Standard);
    let run = run_with_intervention(graph, &thresholds, &seeds, &engine, &spec, &mut rng)?;
    let mut row = InterventionRow {
        point: point.index,
        alpha,
        graph: g,
        trial: t,
        seeds: count,
        run_seed: derive_seed(config.master_seed, &path),
        tau: None,
        infected_tau: None,
        delta: None,
        phi_j: None,
        critical_j: None,
        lower: None,
        upper: None,
        t_star_j: None,
        prediction: None,
        outcome: run.trace.outcome,
        final_fraction: run.trace.final_fraction(),
        flags: String::new(),
        boundary: None,
        error: String::new(),
    };
    let Some(observed) = &run.observed else {
        return Ok(row);
    };
    row.tau = Some(observed.tau);
    row.infected_tau = Some(observed.infected);
    row.delta = Some(observed.delta());
    let verdict = surrogate(observed, &spec, params).and_then(|s| predict(&s, config.epsilon));
    match verdict {
        Ok(v) => {
            row.phi_j = Some(v.phi_j);
            row.critical_j = Some(v.critical);
            row.lower = Some(v.lower);
            row.upper = Some(v.upper);
            row.t_star_j = Some(v.t_star);
            row.prediction = Some(v.outcome);
            row.flags = flag_names(&v.flags);
        }
        Err(e) => row.error = e.to_string(),
    }
    if iv.boundary && row.error.is_empty() {
        match boundary_infected(observed, &spec, params) {
            Ok(b) => row.boundary = b,
            Err(e) => row.error = e.to_string(),
        }
    }
    Ok(row)
}

fn prediction_name(p: Prediction) -> &'static str {
    match p {
        Prediction::Halt => "halt",
        Prediction::Spread => "spread",
        Prediction::Uncertain => "uncertain",
    }
}

fn intervention_runs_table(config: &ExperimentConfig, rows: &[InterventionRow]) -> Table {
    let mut table = Table::new(
        "intervention_runs",
        &[
            ("point", Kind::Int),
            ("alpha", Kind::Float),
            ("graph", Kind::Int),
            ("trial", Kind::Int),
            ("graph_seed", Kind::Text),
            ("run_seed", Kind::Text),
            ("seeds", Kind::Int),
            ("triggered", Kind::Bool),
            ("tau", Kind::Int),
            ("infected_tau", Kind::Int),
            ("delta", Kind::Int),
            ("phi_j", Kind::Float),
            ("critical_j", Kind::Int),
            ("lower", Kind::Float),
            ("upper", Kind::Float),
            ("t_star_j", Kind::Int),
            ("prediction", Kind::Text),
            ("outcome", Kind::Text),
            ("final_fraction", Kind::Float),
            ("agree", Kind::Bool),
            ("boundary_infected", Kind::Int),
            ("flags", Kind::Text),
            ("error", Kind::Text),
        ],
    );
    for r in rows {
        table.push(vec![
            r.point.into(),
            r.alpha.into(),
            r.graph.into(),
            r.trial.into(),
            format!(
                "{:016x}",
                derive_seed(config.master_seed, &[r.graph as u64, purpose::GRAPH])
            )
            .into(),
            format!("{:016x}", r.run_seed).into(),
            r.seeds.into(),
            r.tau.is_some().into(),
            r.tau.into(),
            r.infected_tau.into(),
            r.delta.into(),
            r.phi_j.into(),
            r.critical_j.into(),
            r.lower.into(),
            r.upper.into(),
            r.t_star_j.into(),
            r.prediction.map(prediction_name).into(),
            outcome_name(r.outcome).into(),
            r.final_fraction.into(),
            r.agrees().into(),
            r.boundary.into(),
            r.flags.as_str().into(),
            r.error.as_str().into(),
        ]);
    }
    table
}

fn intervention_summary(points: &[SweepPoint], rows: &[InterventionRow]) -> Table {
    let mut table = Table::new(
        "intervention_summary",
        &[
            ("point", Kind::Int),
            ("alpha", Kind::Float),
            ("runs", Kind::Int),
            ("triggered", Kind::Int),
            ("decided", Kind::Int),
            ("agreed", Kind::Int),
            ("agreement", Kind::Float),
            ("halted_fraction", Kind::Float),
        ],
    );
    for point in points {
        let group: Vec<&InterventionRow> = rows.iter().filter(|r| r.point == point.index).collect();
        let triggered: Vec<_> = group.iter().filter(|r| r.tau.is_some()).collect();
        let decided = triggered.iter().filter(|r| r.agrees().is_some()).count();
        let agreed = triggered
            .iter()
            .filter(|r| r.agrees() == Some(true))
            .count();
        let halted = triggered
            .iter()
            .filter(|r| r.outcome == SpreadOutcome::Halted)
            .count();
        table.push(vec![
            point.index.into(),
            point.alpha.into(),
            group.len().into(),
            triggered.len().into(),
            decided.into(),
            agreed.into(),
            Cell::from((decided > 0).then(|| agreed as f64 / decided as f64)),
            Cell::from((!triggered.is_empty()).then(|| halted as f64 / triggered.len() as f64)),
        ]);
    }
    table
}
