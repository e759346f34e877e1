//! Percolation dynamics on a sampled graph.
//!
//! Standard mode runs synchronous generations: generation `t + 1` infects every
//! healthy vertex with at least `r(u)` neighbours in `I(t)`. Per-vertex counters
//! of infected neighbours are updated only from the vertices infected in the
//! previous generation, so a full run costs `O(n + m)`.

use std::borrow::Cow;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::CoinflipModel;
use crate::tmgraph::{SampledGraph, ThresholdAssignment};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Standard,
    Coinflip,
    Halting3,
    Cheating3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub mode: Mode,
    /// Infected fraction at which the graph counts as infected and the run stops.
    pub stop_fraction: f64,
    pub max_generations: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            mode: Mode::Standard,
            stop_fraction: 0.9,
            max_generations: 1_000_000,
        }
    }
}

impl EngineConfig {
    pub fn with_mode(mode: Mode) -> Self {
        EngineConfig {
            mode,
            ..Self::default()
        }
    }

    /// Run until the process stops on its own.
    pub fn to_fixpoint(mut self) -> Self {
        self.stop_fraction = 1.0;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.stop_fraction > 0.0 && self.stop_fraction <= 1.0) {
            return Err(Error::param(
                "stop_fraction",
                format!("{} is outside (0, 1]", self.stop_fraction),
            ));
        }
        Ok(())
    }

    fn stop_count(&self, n: usize) -> f64 {
        self.stop_fraction * n as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadOutcome {
    Spread,
    Halted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u64,
    pub total: u64,
    pub new: u64,
    pub per_cluster: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercolationTrace {
    pub n: u64,
    pub records: Vec<GenerationRecord>,
    pub outcome: SpreadOutcome,
    pub end_generation: u64,
    /// Healthy vertices promoted without meeting their threshold (cheating mode).
    #[serde(default)]
    pub cheated: u64,
}

impl PercolationTrace {
    pub fn final_total(&self) -> u64 {
        self.records.last().map_or(0, |r| r.total)
    }

    pub fn final_fraction(&self) -> f64 {
        self.final_total() as f64 / self.n as f64
    }

    /// `|I(t)|` for every recorded generation.
    pub fn totals(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.total).collect()
    }

    pub fn to_record(&self, config_hash: &str, seeds: &[usize]) -> TraceRecord {
        TraceRecord {
            config_hash: config_hash.to_string(),
            seeds: seeds.to_vec(),
            totals: self.totals(),
            new: self.records.iter().map(|r| r.new).collect(),
            outcome: self.outcome,
            end_generation: self.end_generation,
        }
    }
}

/// One-line JSON form of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub config_hash: String,
    pub seeds: Vec<usize>,
    pub totals: Vec<u64>,
    pub new: Vec<u64>,
    pub outcome: SpreadOutcome,
    pub end_generation: u64,
}

const HEALTHY: u32 = u32::MAX;

/// A standard-mode run that can be driven one generation at a time and
/// modified between generations (thresholds, edges).
#[derive(Clone, Debug)]
pub struct StandardProcess<'g> {
    graph: Cow<'g, SampledGraph>,
    thresholds: Vec<u32>,
    config: EngineConfig,
    /// Generation at which each vertex was infected, `HEALTHY` if never.
    infected_at: Vec<u32>,
    counts: Vec<u32>,
    frontier: Vec<usize>,
    absorbed: bool,
    touched: Vec<usize>,
    touched_flag: Vec<bool>,
    full_scan: bool,
    per_cluster: Vec<u64>,
    total: u64,
    generation: u64,
    records: Vec<GenerationRecord>,
}

impl<'g> StandardProcess<'g> {
    pub fn new(
        graph: &'g SampledGraph,
        thresholds: &ThresholdAssignment,
        seeds: &[usize],
        config: &EngineConfig,
    ) -> Result<Self> {
        config.validate()?;
        let n = graph.n();
        if thresholds.len() != n {
            return Err(Error::param(
                "thresholds",
                format!("{} thresholds for {n} vertices", thresholds.len()),
            ));
        }
        if let Some(&bad) = seeds.iter().find(|&&s| s >= n) {
            return Err(Error::param("seeds", format!("seed {bad} is not a vertex")));
        }
        let mut process = StandardProcess {
            graph: Cow::Borrowed(graph),
            thresholds: thresholds.0.clone(),
            config: config.clone(),
            infected_at: vec![HEALTHY; n],
            counts: vec![0; n],
            frontier: Vec::new(),
            absorbed: false,
            touched: Vec::new(),
            touched_flag: vec![false; n],
            full_scan: false,
            per_cluster: vec![0; graph.k()],
            total: 0,
            generation: 0,
            records: Vec::new(),
        };
        let mut seeds = seeds.to_vec();
        seeds.sort_unstable();
        seeds.dedup();
        process.commit(seeds);
        Ok(process)
    }

    pub fn graph(&self) -> &SampledGraph {
        &self.graph
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// `|I(t)|` for the current generation.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// `|I(t - 1)|`, zero at generation 0.
    pub fn previous_total(&self) -> u64 {
        match self.records.len() {
            0 | 1 => 0,
            len => self.records[len - 2].total,
        }
    }

    pub fn per_cluster(&self) -> &[u64] {
        &self.per_cluster
    }

    pub fn previous_per_cluster(&self) -> Vec<u64> {
        match self.records.len() {
            0 | 1 => vec![0; self.per_cluster.len()],
            len => self.records[len - 2].per_cluster.clone(),
        }
    }

    pub fn is_infected(&self, u: usize) -> bool {
        self.infected_at[u] != HEALTHY
    }

    pub fn infected(&self) -> Vec<bool> {
        self.infected_at.iter().map(|&g| g != HEALTHY).collect()
    }

    pub fn thresholds(&self) -> &[u32] {
        &self.thresholds
    }

    /// Number of infected neighbours of `u` in `I(t)`.
    pub fn infected_neighbors(&mut self, u: usize) -> u32 {
        self.absorb_frontier();
        self.counts[u]
    }

    /// Vertices newly infected in the current generation.
    pub fn frontier(&self) -> &[usize] {
        &self.frontier
    }

    fn absorb_frontier(&mut self) {
        if self.absorbed {
            return;
        }
        let graph: &SampledGraph = &self.graph;
        for &u in &self.frontier {
            for &v in graph.neighbors(u) {
                let v = v as usize;
                if self.infected_at[v] == HEALTHY {
                    self.counts[v] += 1;
                    if !self.touched_flag[v] {
                        self.touched_flag[v] = true;
                        self.touched.push(v);
                    }
                }
            }
        }
        self.absorbed = true;
    }

    /// Healthy vertices that the next generation would infect, sorted.
    pub fn pending(&mut self) -> Vec<usize> {
        self.absorb_frontier();
        let qualifies =
            |v: usize| self.infected_at[v] == HEALTHY && self.counts[v] >= self.thresholds[v];
        let mut next: Vec<usize> = if self.full_scan {
            (0..self.infected_at.len())
                .filter(|&v| qualifies(v))
                .collect()
        } else {
            self.touched
                .iter()
                .copied()
                .filter(|&v| qualifies(v))
                .collect()
        };
        next.sort_unstable();
        next
    }

    fn commit(&mut self, newly: Vec<usize>) {
        let generation = if self.records.is_empty() {
            0
        } else {
            self.generation + 1
        };
        for &v in &newly {
            debug_assert_eq!(self.infected_at[v], HEALTHY);
            self.infected_at[v] = generation as u32;
            self.per_cluster[self.graph.cluster(v)] += 1;
        }
        self.total += newly.len() as u64;
        for &v in &self.touched {
            self.touched_flag[v] = false;
        }
        self.touched.clear();
        self.full_scan = false;
        self.absorbed = false;
        self.generation = generation;
        self.records.push(GenerationRecord {
            generation,
            total: self.total,
            new: newly.len() as u64,
            per_cluster: self.per_cluster.clone(),
        });
        self.frontier = newly;
    }

    /// Advance one generation; returns the number of new infections.
    pub fn step(&mut self) -> Result<u64> {
        if self.generation >= self.config.max_generations {
            return Err(Error::GenerationCap(self.config.max_generations));
        }
        let next = self.pending();
        let count = next.len() as u64;
        self.commit(next);
        Ok(count)
    }

    pub fn reached_stop(&self) -> bool {
        self.total as f64 >= self.config.stop_count(self.infected_at.len())
    }

    /// Whether the last generation added nobody (the process is stuck).
    pub fn stalled(&self) -> bool {
        self.records.len() > 1 && self.frontier.is_empty()
    }

    /// Run until the stop fraction is reached or a generation adds nobody.
    pub fn run(&mut self) -> Result<SpreadOutcome> {
        loop {
            if self.reached_stop() {
                return Ok(SpreadOutcome::Spread);
            }
            if self.frontier.is_empty() {
                return Ok(SpreadOutcome::Halted);
            }
            self.step()?;
        }
    }

    /// Replace thresholds of healthy vertices. Takes effect from the next
    /// generation.
    pub fn reassign_healthy_thresholds(
        &mut self,
        mut new_threshold: impl FnMut(usize, u32) -> u32,
    ) {
        for v in 0..self.thresholds.len() {
            if self.infected_at[v] == HEALTHY {
                self.thresholds[v] = new_threshold(v, self.thresholds[v]);
            }
        }
        self.full_scan = true;
    }

    /// Swap in a modified graph (same vertex set) and recount infected
    /// neighbours from scratch.
    pub fn replace_graph(&mut self, graph: SampledGraph) {
        assert_eq!(
            graph.n(),
            self.infected_at.len(),
            "vertex set must not change"
        );
        self.graph = Cow::Owned(graph);
        let current = self.generation as u32;
        self.counts.iter_mut().for_each(|c| *c = 0);
        // Rebuild counts w.r.t. I(t - 1) and re-absorb the frontier on the new graph.
        let graph: &SampledGraph = &self.graph;
        for u in 0..self.infected_at.len() {
            let at = self.infected_at[u];
            if at != HEALTHY && at < current {
                for &v in graph.neighbors(u) {
                    if self.infected_at[v as usize] == HEALTHY {
                        self.counts[v as usize] += 1;
                    }
                }
            }
        }
        for &v in &self.touched {
            self.touched_flag[v] = false;
        }
        self.touched.clear();
        self.absorbed = false;
        self.full_scan = true;
    }

    pub fn trace(&self, outcome: SpreadOutcome) -> PercolationTrace {
        PercolationTrace {
            n: self.infected_at.len() as u64,
            records: self.records.clone(),
            outcome,
            end_generation: self.generation,
            cheated: 0,
        }
    }
}

/// Standard synchronous bootstrap percolation.
pub fn run_standard(
    g: &SampledGraph,
    thresholds: &ThresholdAssignment,
    seeds: &[usize],
    config: &EngineConfig,
) -> Result<PercolationTrace> {
    let mut process = StandardProcess::new(g, thresholds, seeds, config)?;
    let outcome = process.run()?;
    Ok(process.trace(outcome))
}

/// Per-vertex coinflip parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoinflipState {
    pub s: Vec<u32>,
    pub z: Vec<f64>,
    pub cap: u32,
}

impl CoinflipState {
    pub fn uniform(n: usize, s: u32, z: f64, cap: u32) -> Self {
        CoinflipState {
            s: vec![s; n],
            z: vec![z; n],
            cap,
        }
    }

    /// Assign each vertex a class of `model` at random.
    pub fn sample<R: Rng + ?Sized>(model: &CoinflipModel, n: usize, rng: &mut R) -> Result<Self> {
        model.validate()?;
        let weights: Vec<f64> = model.classes.iter().map(|c| c.weight).collect();
        let index = rand::distr::weighted::WeightedIndex::new(&weights)
            .map_err(|e| Error::param("weight", e.to_string()))?;
        let mut state = CoinflipState {
            s: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
            cap: model.cap,
        };
        for _ in 0..n {
            let class = &model.classes[rand::distr::Distribution::sample(&index, rng)];
            state.s.push(class.s);
            state.z.push(class.z);
        }
        Ok(state)
    }
}

/// Coinflip dynamics. A healthy vertex becomes susceptible after `s(u)` infected
/// neighbours; every further newly infected neighbour flips a `z(u)` coin, and
/// the `cap`-th infected neighbour infects unconditionally. Coins are flipped
/// in ascending id order of the newly infected vertices.
pub fn run_coinflip<R: Rng + ?Sized>(
    g: &SampledGraph,
    state: &CoinflipState,
    seeds: &[usize],
    config: &EngineConfig,
    rng: &mut R,
) -> Result<PercolationTrace> {
    config.validate()?;
    let n = g.n();
    if state.s.len() != n || state.z.len() != n {
        return Err(Error::param(
            "coinflip",
            "state size does not match the graph",
        ));
    }
    let mut infected = vec![false; n];
    let mut counts = vec![0u32; n];
    let mut per_cluster = vec![0u64; g.k()];
    let mut frontier: Vec<usize> = seeds.to_vec();
    frontier.sort_unstable();
    frontier.dedup();
    for &v in &frontier {
        infected[v] = true;
        per_cluster[g.cluster(v)] += 1;
    }
    let mut total = frontier.len() as u64;
    let mut records = vec![GenerationRecord {
        generation: 0,
        total,
        new: total,
        per_cluster: per_cluster.clone(),
    }];
    let mut generation = 0u64;
    let stop = config.stop_count(n);
    let outcome = loop {
        if total as f64 >= stop {
            break SpreadOutcome::Spread;
        }
        if frontier.is_empty() {
            break SpreadOutcome::Halted;
        }
        if generation >= config.max_generations {
            return Err(Error::GenerationCap(config.max_generations));
        }
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in g.neighbors(u) {
                let v = v as usize;
                if infected[v] {
                    continue;
                }
                counts[v] += 1;
                let seen = counts[v];
                let fires = if seen >= state.cap {
                    true
                } else if seen > state.s[v] {
                    rng.random_bool(state.z[v].clamp(0.0, 1.0))
                } else {
                    false
                };
                if fires {
                    infected[v] = true;
                    next.push(v);
                }
            }
        }
        next.sort_unstable();
        generation += 1;
        for &v in &next {
            per_cluster[g.cluster(v)] += 1;
        }
        total += next.len() as u64;
        records.push(GenerationRecord {
            generation,
            total,
            new: next.len() as u64,
            per_cluster: per_cluster.clone(),
        });
        frontier = next;
    };
    Ok(PercolationTrace {
        n: n as u64,
        records,
        outcome,
        end_generation: generation,
        cheated: 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    Healthy,
    Latent,
    Contagious,
    Cheated,
}

/// Halting three-stage percolation: each timestep one latent vertex per
/// cluster becomes contagious; stops as soon as any cluster runs out of latents.
pub fn run_halting3<R: Rng + ?Sized>(
    g: &SampledGraph,
    thresholds: &ThresholdAssignment,
    seeds: &[usize],
    config: &EngineConfig,
    rng: &mut R,
) -> Result<PercolationTrace> {
    run_three_stage(g, thresholds, seeds, config, false, rng)
}

/// Cheating three-stage percolation: a latent-empty cluster promotes a healthy
/// vertex instead; stops once every cluster is latent-empty.
pub fn run_cheating3<R: Rng + ?Sized>(
    g: &SampledGraph,
    thresholds: &ThresholdAssignment,
    seeds: &[usize],
    config: &EngineConfig,
    rng: &mut R,
) -> Result<PercolationTrace> {
    run_three_stage(g, thresholds, seeds, config, true, rng)
}

fn run_three_stage<R: Rng + ?Sized>(
    g: &SampledGraph,
    thresholds: &ThresholdAssignment,
    seeds: &[usize],
    config: &EngineConfig,
    cheating: bool,
    rng: &mut R,
) -> Result<PercolationTrace> {
    config.validate()?;
    let n = g.n();
    let k = g.k();
    if thresholds.len() != n {
        return Err(Error::param("thresholds", "size does not match the graph"));
    }
    // Promotion order: a uniformly random rank per vertex. Taking the
    // lowest-ranked latent is a uniform choice among the current latents.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut rank = vec![0usize; n];
    for (position, &v) in order.iter().enumerate() {
        rank[v] = position;
    }
    let mut healthy_queue: Vec<Vec<usize>> = vec![Vec::new(); k];
    for &v in &order {
        healthy_queue[g.cluster(v)].push(v);
    }
    let mut healthy_cursor = vec![0usize; k];

    let mut stage = vec![Stage::Healthy; n];
    let mut contagious_neighbors = vec![0u32; n];
    let mut latent: Vec<BinaryHeap<Reverse<(usize, usize)>>> = vec![BinaryHeap::new(); k];
    let mut per_cluster = vec![0u64; k];
    let mut total = 0u64;
    for &v in seeds {
        if stage[v] == Stage::Healthy {
            stage[v] = Stage::Latent;
            latent[g.cluster(v)].push(Reverse((rank[v], v)));
            per_cluster[g.cluster(v)] += 1;
            total += 1;
        }
    }
    let mut records = vec![GenerationRecord {
        generation: 0,
        total,
        new: total,
        per_cluster: per_cluster.clone(),
    }];
    let mut cheated = 0u64;
    let mut timestep = 0u64;
    let stop = config.stop_count(n);
    let outcome = loop {
        if total as f64 >= stop {
            break SpreadOutcome::Spread;
        }
        let exhausted = latent.iter().filter(|heap| heap.is_empty()).count();
        let finished = if cheating {
            exhausted == k
        } else {
            exhausted > 0
        };
        if finished {
            break SpreadOutcome::Halted;
        }
        if timestep >= config.max_generations {
            return Err(Error::GenerationCap(config.max_generations));
        }
        timestep += 1;
        let mut promoted = Vec::with_capacity(k);
        for c in 0..k {
            if let Some(Reverse((_, v))) = latent[c].pop() {
                stage[v] = Stage::Contagious;
                promoted.push(v);
            } else if cheating {
                let queue = &healthy_queue[c];
                while healthy_cursor[c] < queue.len()
                    && stage[queue[healthy_cursor[c]]] != Stage::Healthy
                {
                    healthy_cursor[c] += 1;
                }
                if let Some(&v) = queue.get(healthy_cursor[c]) {
                    stage[v] = Stage::Cheated;
                    cheated += 1;
                    promoted.push(v);
                }
            }
        }
        let mut new = 0u64;
        for &w in &promoted {
            for &v in g.neighbors(w) {
                let v = v as usize;
                if stage[v] == Stage::Healthy {
                    contagious_neighbors[v] += 1;
                    if contagious_neighbors[v] >= thresholds.get(v) {
                        stage[v] = Stage::Latent;
                        let c = g.cluster(v);
                        latent[c].push(Reverse((rank[v], v)));
                        per_cluster[c] += 1;
                        new += 1;
                    }
                }
            }
        }
        total += new;
        records.push(GenerationRecord {
            generation: timestep,
            total,
            new,
            per_cluster: per_cluster.clone(),
        });
    };
    Ok(PercolationTrace {
        n: n as u64,
        records,
        outcome,
        end_generation: timestep,
        cheated,
    })
}

/// What drives the vertices: fixed thresholds or coinflip state.
#[derive(Clone, Copy, Debug)]
pub enum Dynamics<'a> {
    Thresholds(&'a ThresholdAssignment),
    Coinflip(&'a CoinflipState),
}

/// Run whichever mode `config` selects.
pub fn simulate<R: Rng + ?Sized>(
    g: &SampledGraph,
    dynamics: Dynamics<'_>,
    seeds: &[usize],
    config: &EngineConfig,
    rng: &mut R,
) -> Result<PercolationTrace> {
    match (config.mode, dynamics) {
        (Mode::Standard, Dynamics::Thresholds(t)) => run_standard(g, t, seeds, config),
        (Mode::Halting3, Dynamics::Thresholds(t)) => run_halting3(g, t, seeds, config, rng),
        (Mode::Cheating3, Dynamics::Thresholds(t)) => run_cheating3(g, t, seeds, config, rng),
        (Mode::Coinflip, Dynamics::Coinflip(state)) => run_coinflip(g, state, seeds, config, rng),
        (mode, _) => Err(Error::param(
            "mode",
            format!("{mode:?} does not match the supplied dynamics"),
        )),
    }
}
