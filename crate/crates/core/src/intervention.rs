//! Mid-percolation interventions.
//!
//! At the intervention generation `τ` the infected counts `|I(τ)|`,
//! `|I(τ-1)|` and the threshold histogram of healthy vertices are observed.
//! From those, the law of how many infected neighbours a healthy vertex already
//! has (its residual state) is reconstructed, the healthy vertices are
//! repackaged as a smaller TM graph `J` whose thresholds are the residual
//! thresholds, and the dichotomy for `J` predicts whether the intervention
//! stops the spread.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{AnalyticModel, AssumptionReport, Horizon};
use crate::binomial::{binom_row, binom_row_truncated};
use crate::engine::{EngineConfig, PercolationTrace, SpreadOutcome, StandardProcess};
use crate::tmgraph::{SampledGraph, TMParams, ThresholdAssignment, ThresholdDistribution};
use crate::{Error, Result};

/// Binomial terms below this are dropped (and the row renormalised).
const TRUNCATION: f64 = 1e-16;
/// Per-cluster residual laws differing from the average by more than this
/// (total variation) are flagged.
const HETEROGENEITY_TOLERANCE: f64 = 0.05;

pub const DEFAULT_EPSILON: f64 = 0.1;

/// Replacement law for vertices that currently have threshold `from`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Remap {
    pub from: u32,
    pub to: ThresholdDistribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Variant {
    /// Raise thresholds of healthy vertices. Thresholds without a remap entry
    /// are left alone.
    Bolster {
        remap: Vec<Remap>,
        /// Reassign before generation `τ + 1` infects, so vertices about to be
        /// infected can be saved.
        #[serde(default)]
        save_vertices: bool,
        /// Permit replacement thresholds anywhere in `[2, r'_m]`.
        #[serde(default)]
        allow_weakening: bool,
    },
    /// Geometric threshold increase: the new threshold is `r + j` with
    /// probability `(1 - z)^j z`, capped at `cap`.
    Delay { z: f64, cap: u32 },
    /// Delete every near edge w.p. `1 - alpha_p` and far edge w.p. `1 - alpha_q`.
    Diminish { alpha_p: f64, alpha_q: f64 },
    /// As Diminish, but only edges with an infected endpoint are at risk.
    Sequester { alpha_p: f64, alpha_q: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionSpec {
    pub variant: Variant,
    /// Trigger fraction: intervene at the first `τ` with `|I(τ + 1)| > λ n`.
    pub lambda: f64,
}

impl InterventionSpec {
    /// Threshold 2 becomes 3 with probability `alpha`, otherwise 4.
    pub fn bolster_a(alpha: f64, lambda: f64) -> Result<Self> {
        Ok(Self::bolster(
            vec![Remap {
                from: 2,
                to: ThresholdDistribution::two_point(3, 4, 1.0 - alpha)?,
            }],
            lambda,
        ))
    }

    /// Threshold 2 becomes 3 with probability `(1 + alpha) / 2`, otherwise 5.
    pub fn bolster_b(alpha: f64, lambda: f64) -> Result<Self> {
        Ok(Self::bolster(
            vec![Remap {
                from: 2,
                to: ThresholdDistribution::two_point(3, 5, (1.0 - alpha) / 2.0)?,
            }],
            lambda,
        ))
    }

    pub fn bolster(remap: Vec<Remap>, lambda: f64) -> Self {
        InterventionSpec {
            variant: Variant::Bolster {
                remap,
                save_vertices: false,
                allow_weakening: false,
            },
            lambda,
        }
    }

    pub fn delay(z: f64, cap: u32, lambda: f64) -> Self {
        InterventionSpec {
            variant: Variant::Delay { z, cap },
            lambda,
        }
    }

    pub fn diminish(alpha_p: f64, alpha_q: f64, lambda: f64) -> Self {
        InterventionSpec {
            variant: Variant::Diminish { alpha_p, alpha_q },
            lambda,
        }
    }

    pub fn sequester(alpha_p: f64, alpha_q: f64, lambda: f64) -> Self {
        InterventionSpec {
            variant: Variant::Sequester { alpha_p, alpha_q },
            lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::param(
                "lambda",
                format!("{} is outside (0, 1)", self.lambda),
            ));
        }
        match &self.variant {
            Variant::Bolster {
                remap,
                allow_weakening,
                ..
            } => {
                for entry in remap {
                    let floor = if *allow_weakening {
                        2.min(entry.from)
                    } else {
                        entry.from
                    };
                    if entry.to.min_support() < floor {
                        return Err(Error::InvalidDistribution(format!(
                            "replacement for threshold {} puts mass on {}",
                            entry.from,
                            entry.to.min_support()
                        )));
                    }
                }
                let mut froms: Vec<u32> = remap.iter().map(|e| e.from).collect();
                froms.sort_unstable();
                if froms.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::param("remap", "threshold listed twice"));
                }
            }
            Variant::Delay { z, cap } => {
                if !(0.0..=1.0).contains(z) || *cap == 0 {
                    return Err(Error::param("z", format!("delay z = {z}, cap = {cap}")));
                }
            }
            Variant::Diminish { alpha_p, alpha_q } | Variant::Sequester { alpha_p, alpha_q } => {
                for (name, a) in [("alpha_p", alpha_p), ("alpha_q", alpha_q)] {
                    if !(0.0..=1.0).contains(a) {
                        return Err(Error::param(name, format!("{a} is not a probability")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Replacement law `ζ'(r)` for a threshold-changing variant; `None` for
    /// edge deletion.
    pub fn new_threshold_law(&self, r: u32) -> Option<ThresholdDistribution> {
        match &self.variant {
            Variant::Bolster { remap, .. } => Some(
                remap
                    .iter()
                    .find(|e| e.from == r)
                    .map(|e| e.to.clone())
                    .unwrap_or_else(|| {
                        ThresholdDistribution::point_mass(r.max(1)).expect("r >= 1")
                    }),
            ),
            Variant::Delay { z, cap } => Some(delay_law(r.max(1), *z, *cap)),
            _ => None,
        }
    }

    fn saves_vertices(&self) -> bool {
        matches!(
            self.variant,
            Variant::Bolster {
                save_vertices: true,
                ..
            }
        )
    }

    fn weakening_allowed(&self) -> bool {
        matches!(
            self.variant,
            Variant::Bolster {
                allow_weakening: true,
                ..
            }
        )
    }
}

/// `ζ'_j(r) = (1 - z)^{j-r} z` for `r <= j < cap`, remaining mass on `cap`.
pub fn delay_law(r: u32, z: f64, cap: u32) -> ThresholdDistribution {
    if cap <= r || z >= 1.0 {
        return ThresholdDistribution::point_mass(r).expect("r >= 1");
    }
    let mut weights = vec![0.0; cap as usize];
    let mut survive = 1.0;
    for j in r..cap {
        weights[j as usize - 1] = survive * z;
        survive *= 1.0 - z;
    }
    weights[cap as usize - 1] = survive;
    ThresholdDistribution::from_weights(weights).expect("geometric weights are valid")
}

/// Counts available at the intervention point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservedState {
    pub tau: u64,
    pub n: u64,
    /// `|I(τ)|`.
    pub infected: u64,
    /// `|I(τ - 1)|`.
    pub infected_prev: u64,
    pub per_cluster: Vec<u64>,
    pub per_cluster_prev: Vec<u64>,
    /// `|H(r)|` at index `r - 1`.
    pub healthy_by_threshold: Vec<u64>,
}

impl ObservedState {
    /// Single-cluster state.
    pub fn er(n: u64, infected: u64, infected_prev: u64, healthy_by_threshold: Vec<u64>) -> Self {
        ObservedState {
            tau: 0,
            n,
            infected,
            infected_prev,
            per_cluster: vec![infected],
            per_cluster_prev: vec![infected_prev],
            healthy_by_threshold,
        }
    }

    /// Snapshot a live run at its current generation.
    pub fn from_process(process: &StandardProcess<'_>) -> Self {
        let thresholds = process.thresholds();
        let r_max = thresholds.iter().copied().max().unwrap_or(1).max(1) as usize;
        let mut healthy_by_threshold = vec![0u64; r_max];
        for (u, &r) in thresholds.iter().enumerate() {
            if !process.is_infected(u) && r >= 1 {
                healthy_by_threshold[r as usize - 1] += 1;
            }
        }
        ObservedState {
            tau: process.generation(),
            n: process.graph().n() as u64,
            infected: process.total(),
            infected_prev: process.previous_total(),
            per_cluster: process.per_cluster().to_vec(),
            per_cluster_prev: process.previous_per_cluster(),
            healthy_by_threshold,
        }
    }

    pub fn healthy(&self) -> u64 {
        self.n - self.infected
    }

    /// `|I(τ)| - |I(τ - 1)|`.
    pub fn delta(&self) -> u64 {
        self.infected - self.infected_prev
    }

    pub fn validate(&self, params: &TMParams) -> Result<()> {
        let fail = |msg: String| Err(Error::InconsistentState(msg));
        if self.n != params.n {
            return fail(format!("state has n = {}, graph has {}", self.n, params.n));
        }
        if self.infected_prev > self.infected {
            return fail(format!(
                "|I(τ-1)| = {} exceeds |I(τ)| = {}",
                self.infected_prev, self.infected
            ));
        }
        if self.infected >= self.n {
            return fail("no healthy vertices remain".into());
        }
        if self.per_cluster.len() != params.k() || self.per_cluster_prev.len() != params.k() {
            return fail("per-cluster counts do not match the template".into());
        }
        if self.per_cluster.iter().sum::<u64>() != self.infected
            || self.per_cluster_prev.iter().sum::<u64>() != self.infected_prev
        {
            return fail("per-cluster counts do not add up".into());
        }
        if self
            .per_cluster
            .iter()
            .zip(&self.per_cluster_prev)
            .any(|(now, prev)| prev > now)
        {
            return fail("a cluster lost infected vertices".into());
        }
        let healthy: u64 = self.healthy_by_threshold.iter().sum();
        if healthy + self.infected != self.n {
            return fail(format!(
                "Σ|H(r)| + |I(τ)| = {} ≠ n = {}",
                healthy + self.infected,
                self.n
            ));
        }
        Ok(())
    }

    /// Whether `|I(τ)| >= k / (3ϕ)`, past the point where the residual law is
    /// guaranteed to decay geometrically.
    pub fn too_late(&self, params: &TMParams) -> bool {
        let phi = params.phi();
        phi > 0.0 && self.infected as f64 >= params.k() as f64 / (3.0 * phi)
    }

    fn near_far(&self, params: &TMParams, cluster: usize, counts: &[u64]) -> (u64, u64) {
        let near: u64 = params
            .template
            .neighbors(cluster)
            .iter()
            .map(|&i| counts[i])
            .sum();
        let total: u64 = counts.iter().sum();
        (near, total - near)
    }

    /// `(p I_near(τ) + q I_far(τ)) / (1 - max(p, q))`, maximised over clusters.
    /// Below 2/3 the residual law provably decays by a factor 2/3 per step.
    pub fn decay_rate(&self, params: &TMParams) -> f64 {
        let denom = 1.0 - params.p.max(params.q);
        (0..params.k())
            .map(|c| {
                let (near, far) = self.near_far(params, c, &self.per_cluster);
                (params.p * near as f64 + params.q * far as f64) / denom
            })
            .fold(0.0, f64::max)
    }

    /// The same state with `|I(τ)|` rescaled to `infected`, keeping the
    /// `|I(τ-1)| / |I(τ)|` ratio, the cluster shares and the threshold mix of
    /// healthy vertices.
    pub fn rescaled(&self, infected: u64) -> ObservedState {
        let infected = infected.min(self.n - 1);
        let ratio = if self.infected == 0 {
            0.0
        } else {
            self.infected_prev as f64 / self.infected as f64
        };
        let infected_prev = ((infected as f64 * ratio).round() as u64).min(infected);
        let shares = |counts: &[u64]| -> Vec<f64> {
            let total: u64 = counts.iter().sum();
            if total == 0 {
                vec![1.0; counts.len()]
            } else {
                counts.iter().map(|&c| c as f64).collect()
            }
        };
        let per_cluster = apportion(infected, &shares(&self.per_cluster));
        // Previous counts must stay below the current ones cluster by cluster.
        let mut per_cluster_prev = apportion(infected_prev, &shares(&self.per_cluster_prev));
        let mut excess = 0;
        for (prev, now) in per_cluster_prev.iter_mut().zip(&per_cluster) {
            if *prev > *now {
                excess += *prev - *now;
                *prev = *now;
            }
        }
        for (prev, now) in per_cluster_prev.iter_mut().zip(&per_cluster) {
            let room = (*now - *prev).min(excess);
            *prev += room;
            excess -= room;
        }
        let healthy_by_threshold = apportion(
            self.n - infected,
            &self
                .healthy_by_threshold
                .iter()
                .map(|&h| h as f64)
                .collect::<Vec<_>>(),
        );
        ObservedState {
            tau: self.tau,
            n: self.n,
            infected,
            infected_prev,
            per_cluster,
            per_cluster_prev,
            healthy_by_threshold,
        }
    }
}

/// Split `total` into integers proportional to `weights` (largest remainder).
fn apportion(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() {
        return Vec::new();
    }
    if !(sum > 0.0) {
        let mut out = vec![0; weights.len()];
        out[0] = total;
        return out;
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut out: Vec<u64> = exact.iter().map(|x| x.floor() as u64).collect();
    let mut left = total - out.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

/// Joint law of `(b, c)`: infected near and far neighbours in `I(τ)` of a
/// healthy vertex with threshold `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualLaw {
    pub r: u32,
    /// `joint[b][c]`.
    pub joint: Vec<Vec<f64>>,
}

impl ResidualLaw {
    /// `Pr[H_a]` for `a = 0..`.
    pub fn marginal(&self) -> Vec<f64> {
        let width = self.joint.first().map_or(0, Vec::len);
        let mut out = vec![0.0; (self.joint.len() + width).saturating_sub(1).max(1)];
        for (b, row) in self.joint.iter().enumerate() {
            for (c, &mass) in row.iter().enumerate() {
                out[b + c] += mass;
            }
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.joint.iter().flatten().sum()
    }

    /// `Pr[a >= r]`: vertices that become infected in the next generation.
    pub fn mass_at_least(&self, r: u32) -> f64 {
        self.marginal().iter().skip(r as usize).sum()
    }

    fn dims(&self) -> (usize, usize) {
        (self.joint.len(), self.joint.first().map_or(0, Vec::len))
    }

    fn get(&self, b: usize, c: usize) -> f64 {
        self.joint
            .get(b)
            .and_then(|row| row.get(c))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn tv_distance(&self, other: &ResidualLaw) -> f64 {
        let (b1, c1) = self.dims();
        let (b2, c2) = other.dims();
        let mut sum = 0.0;
        for b in 0..b1.max(b2) {
            for c in 0..c1.max(c2) {
                sum += (self.get(b, c) - other.get(b, c)).abs();
            }
        }
        sum / 2.0
    }

    /// Keep each counted edge independently with probability `alpha_p` (near)
    /// or `alpha_q` (far).
    pub fn thinned(&self, alpha_p: f64, alpha_q: f64) -> ResidualLaw {
        let (nb, nc) = self.dims();
        let mut joint = vec![vec![0.0; nc]; nb];
        let near_rows: Vec<Vec<f64>> = (0..nb)
            .map(|d| binom_row(d as u64, alpha_p, d + 1))
            .collect();
        let far_rows: Vec<Vec<f64>> = (0..nc)
            .map(|e| binom_row(e as u64, alpha_q, e + 1))
            .collect();
        for (d, row) in self.joint.iter().enumerate() {
            for (e, &mass) in row.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for (b, &kb) in near_rows[d].iter().enumerate() {
                    for (c, &kc) in far_rows[e].iter().enumerate() {
                        joint[b][c] += mass * kb * kc;
                    }
                }
            }
        }
        ResidualLaw { r: self.r, joint }
    }

    /// Largest `a` with positive mass where `Pr[H_{a+1}] >= (2/3) Pr[H_a]`.
    pub fn decay_violations(&self) -> Vec<usize> {
        let m = self.marginal();
        let mut bad = Vec::new();
        for a in 0..m.len().saturating_sub(1) {
            let (cur, next) = (m[a], m[a + 1]);
            if cur < 1e-250 {
                if next > 1e-250 {
                    bad.push(a);
                }
                continue;
            }
            if next >= 2.0 / 3.0 * cur {
                bad.push(a);
            }
        }
        bad
    }
}

fn truncated_row(x: u64, lambda: f64) -> Vec<f64> {
    let mut row = binom_row_truncated(x, lambda, TRUNCATION);
    while row.len() > 1 && row.last().is_some_and(|&v| v < TRUNCATION) {
        row.pop();
    }
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= sum);
    row
}

/// Residual law from raw counts: `near_prev`/`far_prev` infected near/far
/// vertices at `τ - 1`, plus `near_delta`/`far_delta` infected at `τ`.
pub fn residual_from_counts(
    r: u32,
    p: f64,
    q: f64,
    (near_prev, far_prev): (u64, u64),
    (near_delta, far_delta): (u64, u64),
) -> Result<ResidualLaw> {
    if r == 0 {
        return Err(Error::param("r", "threshold must be at least 1"));
    }
    let r_us = r as usize;
    // Prior: u was still healthy after τ - 1, so it saw at most r - 1 infected.
    let b_prior = binom_row(near_prev, p, r_us);
    let c_prior = binom_row(far_prev, q, r_us);
    let mut prior = vec![vec![0.0; c_prior.len()]; b_prior.len()];
    let mut norm = 0.0;
    for (d, &bd) in b_prior.iter().enumerate() {
        for (e, &ce) in c_prior.iter().enumerate() {
            if d + e < r_us {
                prior[d][e] = bd * ce;
                norm += bd * ce;
            }
        }
    }
    if !(norm > 0.0) {
        return Err(Error::InconsistentState(format!(
            "a threshold-{r} vertex cannot stay healthy next to {near_prev} near and {far_prev} far infected vertices"
        )));
    }
    let b_new = truncated_row(near_delta, p);
    let c_new = truncated_row(far_delta, q);
    let mut joint =
        vec![vec![0.0; prior[0].len() + c_new.len() - 1]; prior.len() + b_new.len() - 1];
    for (d, row) in prior.iter().enumerate() {
        for (e, &w) in row.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let w = w / norm;
            for (i, &bi) in b_new.iter().enumerate() {
                for (j, &cj) in c_new.iter().enumerate() {
                    joint[d + i][e + j] += w * bi * cj;
                }
            }
        }
    }
    Ok(ResidualLaw { r, joint })
}

/// Residual law of a healthy threshold-`r` vertex in an Erdős–Rényi graph.
pub fn residual_er(observed: &ObservedState, r: u32, params: &TMParams) -> Result<ResidualLaw> {
    if params.k() != 1 {
        return Err(Error::param(
            "template",
            "residual_er needs a single-cluster graph",
        ));
    }
    residual_tm(observed, r, params, 0)
}

/// Residual law of a healthy threshold-`r` vertex in `cluster`.
pub fn residual_tm(
    observed: &ObservedState,
    r: u32,
    params: &TMParams,
    cluster: usize,
) -> Result<ResidualLaw> {
    observed.validate(params)?;
    let (near_prev, far_prev) = observed.near_far(params, cluster, &observed.per_cluster_prev);
    let (near_now, far_now) = observed.near_far(params, cluster, &observed.per_cluster);
    residual_from_counts(
        r,
        params.p,
        params.q,
        (near_prev, far_prev),
        (near_now - near_prev, far_now - far_prev),
    )
}

/// Residual laws for every threshold present among healthy vertices,
/// averaged over clusters by healthy-vertex share.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualProfile {
    /// Index `r - 1`; `None` where `|H(r)| = 0`.
    pub laws: Vec<Option<ResidualLaw>>,
    /// `|H(r)| / |H|` at index `r - 1`.
    pub weights: Vec<f64>,
    /// Largest total-variation distance between a cluster's law and the average.
    pub heterogeneity: f64,
}

impl ResidualProfile {
    pub fn observe(observed: &ObservedState, params: &TMParams) -> Result<Self> {
        observed.validate(params)?;
        let healthy = observed.healthy() as f64;
        let eta = params.eta();
        let cluster_weights: Vec<f64> = observed
            .per_cluster
            .iter()
            .map(|&i| ((eta - i as f64) / healthy).max(0.0))
            .collect();
        let mut laws = Vec::with_capacity(observed.healthy_by_threshold.len());
        let mut heterogeneity: f64 = 0.0;
        for (index, &count) in observed.healthy_by_threshold.iter().enumerate() {
            if count == 0 {
                laws.push(None);
                continue;
            }
            let r = index as u32 + 1;
            // Clusters with identical neighbourhood counts share a law.
            let mut cache: HashMap<[u64; 4], ResidualLaw> = HashMap::new();
            let mut per_cluster = Vec::with_capacity(params.k());
            for c in 0..params.k() {
                let (np, fp) = observed.near_far(params, c, &observed.per_cluster_prev);
                let (nn, fnow) = observed.near_far(params, c, &observed.per_cluster);
                let key = [np, fp, nn - np, fnow - fp];
                if !cache.contains_key(&key) {
                    let law = residual_from_counts(
                        r,
                        params.p,
                        params.q,
                        (np, fp),
                        (nn - np, fnow - fp),
                    )?;
                    cache.insert(key, law);
                }
                per_cluster.push(key);
            }
            let average = if cache.len() == 1 {
                cache.values().next().cloned().expect("one entry")
            } else {
                let nb = cache.values().map(|l| l.dims().0).max().unwrap_or(1);
                let nc = cache.values().map(|l| l.dims().1).max().unwrap_or(1);
                let mut joint = vec![vec![0.0; nc]; nb];
                let total_weight: f64 = cluster_weights.iter().sum();
                for (c, key) in per_cluster.iter().enumerate() {
                    let w = cluster_weights[c] / total_weight;
                    for (b, row) in cache[key].joint.iter().enumerate() {
                        for (cc, &mass) in row.iter().enumerate() {
                            joint[b][cc] += w * mass;
                        }
                    }
                }
                ResidualLaw { r, joint }
            };
            for law in cache.values() {
                heterogeneity = heterogeneity.max(law.tv_distance(&average));
            }
            laws.push(Some(average));
        }
        let weights = observed
            .healthy_by_threshold
            .iter()
            .map(|&h| h as f64 / healthy)
            .collect();
        Ok(ResidualProfile {
            laws,
            weights,
            heterogeneity,
        })
    }

    pub fn thinned(&self, alpha_p: f64, alpha_q: f64) -> ResidualProfile {
        ResidualProfile {
            laws: self
                .laws
                .iter()
                .map(|l| l.as_ref().map(|l| l.thinned(alpha_p, alpha_q)))
                .collect(),
            weights: self.weights.clone(),
            heterogeneity: self.heterogeneity,
        }
    }

    /// `(r, a)` pairs where the geometric decay fails.
    pub fn decay_violations(&self) -> Vec<(u32, usize)> {
        self.laws
            .iter()
            .flatten()
            .flat_map(|law| law.decay_violations().into_iter().map(move |a| (law.r, a)))
            .collect()
    }

    fn present(&self) -> impl Iterator<Item = (u32, f64, &ResidualLaw)> {
        self.laws
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.as_ref().map(|l| (i as u32 + 1, self.weights[i], l)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flag", rename_all = "snake_case")]
pub enum VerdictFlag {
    /// `|I(τ)| >= k / (3ϕ)`: the intervention came too late for the guarantees.
    TooLate {
        infected: u64,
        limit: f64,
    },
    /// `j_1 >= (2/3) j_2` for the surrogate threshold law.
    LowThresholdViolated {
        j1: f64,
        j2: f64,
    },
    /// Replacement thresholds below the current ones were allowed.
    WeakeningAllowed,
    ClusterHeterogeneity {
        tv: f64,
    },
    /// Residual law did not decay geometrically at some `(r, a)`.
    DecayViolated {
        count: usize,
    },
}

/// Parameters of the surrogate graph `J` on the healthy vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub params: TMParams,
    /// `j_s` at index `s - 1`.
    pub j: Vec<f64>,
    /// `φ_J`, the expected number of healthy vertices that act as seeds in `J`.
    pub phi: f64,
    pub healthy: u64,
    pub flags: Vec<VerdictFlag>,
}

impl SurrogateSpec {
    pub fn j(&self, s: u32) -> f64 {
        if s == 0 {
            return 0.0;
        }
        self.j.get(s as usize - 1).copied().unwrap_or(0.0)
    }

    /// `φ_J / |H| + Σ_s j_s`; one by construction.
    pub fn mass(&self) -> f64 {
        self.phi / self.healthy as f64 + self.j.iter().sum::<f64>()
    }
}

fn add_at(j: &mut Vec<f64>, s: usize, mass: f64) {
    if j.len() < s {
        j.resize(s, 0.0);
    }
    j[s - 1] += mass;
}

fn finish(
    j: Vec<f64>,
    observed: &ObservedState,
    params: &TMParams,
    j_params: TMParams,
    mut flags: Vec<VerdictFlag>,
    check_low_threshold: bool,
) -> SurrogateSpec {
    let healthy = observed.healthy();
    let mut j = j;
    while j.len() > 1 && j.last() == Some(&0.0) {
        j.pop();
    }
    let phi = healthy as f64 * (1.0 - j.iter().sum::<f64>()).max(0.0);
    if observed.too_late(params) {
        flags.insert(
            0,
            VerdictFlag::TooLate {
                infected: observed.infected,
                limit: params.k() as f64 / (3.0 * params.phi()),
            },
        );
    }
    if check_low_threshold {
        let (j1, j2) = (
            j.first().copied().unwrap_or(0.0),
            j.get(1).copied().unwrap_or(0.0),
        );
        if j1 > 0.0 && j1 >= 2.0 / 3.0 * j2 {
            flags.push(VerdictFlag::LowThresholdViolated { j1, j2 });
        }
    }
    SurrogateSpec {
        params: j_params,
        j,
        phi,
        healthy,
        flags,
    }
}

fn profile_flags(
    profile: &ResidualProfile,
    observed: &ObservedState,
    params: &TMParams,
) -> Vec<VerdictFlag> {
    let mut flags = Vec::new();
    if profile.heterogeneity > HETEROGENEITY_TOLERANCE {
        flags.push(VerdictFlag::ClusterHeterogeneity {
            tv: profile.heterogeneity,
        });
    }
    if !observed.too_late(params) {
        let count = profile.decay_violations().len();
        if count > 0 {
            flags.push(VerdictFlag::DecayViolated { count });
        }
    }
    flags
}

fn surrogate_params(params: &TMParams, healthy: u64, p: f64, q: f64) -> Result<TMParams> {
    TMParams::new(params.template.clone(), healthy, p, q)
}

/// Surrogate for Bolster (and Delay): a healthy vertex with `a` infected
/// neighbours and new threshold `r'` becomes a `J` vertex of threshold `r' - a`.
pub fn surrogate_bolster(
    observed: &ObservedState,
    spec: &InterventionSpec,
    params: &TMParams,
) -> Result<SurrogateSpec> {
    spec.validate()?;
    if spec.new_threshold_law(2).is_none() {
        return Err(Error::param(
            "variant",
            "surrogate_bolster needs Bolster or Delay",
        ));
    }
    let profile = ResidualProfile::observe(observed, params)?;
    let save = spec.saves_vertices();
    let mut j = Vec::new();
    for (r, weight, law) in profile.present() {
        let new_law = spec.new_threshold_law(r).expect("threshold variant");
        for (a, &mass) in law.marginal().iter().enumerate() {
            if mass == 0.0 || (!save && a >= r as usize) {
                continue;
            }
            for (index, &z) in new_law.as_slice().iter().enumerate() {
                let r_new = index + 1;
                if z > 0.0 && r_new > a {
                    add_at(&mut j, r_new - a, weight * mass * z);
                }
            }
        }
    }
    let mut flags = profile_flags(&profile, observed, params);
    let weakening = spec.weakening_allowed();
    if weakening {
        flags.push(VerdictFlag::WeakeningAllowed);
    }
    let j_params = surrogate_params(params, observed.healthy(), params.p, params.q)?;
    Ok(finish(j, observed, params, j_params, flags, true))
}

fn deletion_j(profile: &ResidualProfile) -> Vec<f64> {
    let mut j = Vec::new();
    for (r, weight, law) in profile.present() {
        for (a, &mass) in law.marginal().iter().enumerate().take(r as usize) {
            if mass > 0.0 {
                add_at(&mut j, r as usize - a, weight * mass);
            }
        }
    }
    j
}

/// Surrogate for Diminish: thin the residual law, residual threshold `r - a`,
/// and `J` inherits the thinned edge probabilities.
pub fn surrogate_diminish(
    observed: &ObservedState,
    alpha_p: f64,
    alpha_q: f64,
    params: &TMParams,
) -> Result<SurrogateSpec> {
    InterventionSpec::diminish(alpha_p, alpha_q, 0.5).validate()?;
    let profile = ResidualProfile::observe(observed, params)?;
    let flags = profile_flags(&profile, observed, params);
    let j = deletion_j(&profile.thinned(alpha_p, alpha_q));
    let j_params = surrogate_params(
        params,
        observed.healthy(),
        alpha_p * params.p,
        alpha_q * params.q,
    )?;
    Ok(finish(j, observed, params, j_params, flags, false))
}

/// Surrogate for Sequester: same residual thresholds as Diminish, but edges
/// among healthy vertices survive so `J` keeps `(p, q)`.
pub fn surrogate_sequester(
    observed: &ObservedState,
    alpha_p: f64,
    alpha_q: f64,
    params: &TMParams,
) -> Result<SurrogateSpec> {
    let mut spec = surrogate_diminish(observed, alpha_p, alpha_q, params)?;
    spec.params = surrogate_params(params, observed.healthy(), params.p, params.q)?;
    Ok(spec)
}

pub fn surrogate(
    observed: &ObservedState,
    spec: &InterventionSpec,
    params: &TMParams,
) -> Result<SurrogateSpec> {
    match spec.variant {
        Variant::Bolster { .. } | Variant::Delay { .. } => {
            surrogate_bolster(observed, spec, params)
        }
        Variant::Diminish { alpha_p, alpha_q } => {
            surrogate_diminish(observed, alpha_p, alpha_q, params)
        }
        Variant::Sequester { alpha_p, alpha_q } => {
            surrogate_sequester(observed, alpha_p, alpha_q, params)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Halt,
    Spread,
    Uncertain,
}

impl Prediction {
    /// Whether a simulated outcome agrees; `None` inside the uncertainty band.
    pub fn agrees_with(self, outcome: SpreadOutcome) -> Option<bool> {
        match self {
            Prediction::Halt => Some(outcome == SpreadOutcome::Halted),
            Prediction::Spread => Some(outcome == SpreadOutcome::Spread),
            Prediction::Uncertain => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// `φ_J`.
    pub phi_j: f64,
    /// `Φ_J`, the critical seed count of `J`.
    pub critical: u64,
    pub lower: f64,
    pub upper: f64,
    pub epsilon: f64,
    pub outcome: Prediction,
    pub t_star: u64,
    pub horizon: Horizon,
    pub flags: Vec<VerdictFlag>,
    pub assumptions: Option<AssumptionReport>,
}

/// Compare `φ_J` with the critical seed count of `J`.
///
/// `J` is small and its threshold law is dominated by the raised thresholds,
/// so its `f` often keeps falling up to `1/(3ϕ)`. The self-sustaining horizon
/// is used by default; it agrees with the theory horizon whenever `t*` lies
/// strictly inside it.
pub fn predict(surrogate: &SurrogateSpec, epsilon: f64) -> Result<Verdict> {
    predict_with(surrogate, epsilon, Horizon::SelfSustaining)
}

pub fn predict_with(surrogate: &SurrogateSpec, epsilon: f64, horizon: Horizon) -> Result<Verdict> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::param(
            "epsilon",
            format!("{epsilon} is outside [0, 1)"),
        ));
    }
    let residual_mass: f64 = surrogate.j.iter().sum();
    let (critical, t_star, assumptions) = if residual_mass <= 1e-15 {
        // Every healthy vertex is already doomed.
        (0, 0, None)
    } else {
        let dist = ThresholdDistribution::from_weights(surrogate.j.clone())?;
        let model = AnalyticModel::with_horizon(surrogate.params.clone(), dist, horizon)?;
        let result = model.critical_seed();
        (result.phi, result.t_star, Some(result.assumptions))
    };
    let lower = (1.0 - epsilon) * critical as f64;
    let upper = (1.0 + epsilon) * critical as f64;
    let phi = surrogate.phi;
    let outcome = if phi < lower {
        Prediction::Halt
    } else if phi > upper {
        Prediction::Spread
    } else {
        Prediction::Uncertain
    };
    Ok(Verdict {
        phi_j: phi,
        critical,
        lower,
        upper,
        epsilon,
        outcome,
        t_star,
        horizon,
        flags: surrogate.flags.clone(),
        assumptions,
    })
}

/// `|I(τ)|` at which `φ_J = Φ_J` for this intervention, holding the rest of
/// the observed state's shape fixed. `None` if no crossing is found.
pub fn boundary_infected(
    observed: &ObservedState,
    spec: &InterventionSpec,
    params: &TMParams,
) -> Result<Option<u64>> {
    let margin = |infected: u64| -> Result<f64> {
        let state = observed.rescaled(infected);
        let verdict = predict(&surrogate(&state, spec, params)?, 0.0)?;
        Ok(verdict.phi_j - verdict.critical as f64)
    };
    // The margin need not be monotone far from the observed state, so scan a
    // geometric grid for the first crossing and bisect inside it.
    let top = (observed.n / 2).max(2);
    let mut lo = 1u64;
    if margin(lo)? >= 0.0 {
        return Ok(Some(lo));
    }
    let mut hi = None;
    let mut x = 1.0f64;
    while (x as u64) < top {
        x = (x * 1.15).max(x + 1.0);
        let candidate = (x as u64).min(top);
        if margin(candidate)? >= 0.0 {
            hi = Some(candidate);
            break;
        }
        lo = candidate;
    }
    let Some(mut hi) = hi else {
        return Ok(None);
    };
    while hi > lo + 1 {
        let mid = lo + (hi - lo) / 2;
        if margin(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// A run that was (possibly) interrupted by an intervention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterventionRun {
    /// `None` when the trigger was never reached.
    pub observed: Option<ObservedState>,
    pub trace: PercolationTrace,
}

impl InterventionRun {
    pub fn triggered(&self) -> bool {
        self.observed.is_some()
    }
}

/// Run standard percolation until the trigger `|I(τ + 1)| > λ n`, apply the
/// intervention, and continue to the end. Randomness is only drawn for the
/// intervention itself (threshold reassignment or edge deletion).
pub fn run_with_intervention<R: Rng + ?Sized>(
    g: &SampledGraph,
    thresholds: &ThresholdAssignment,
    seeds: &[usize],
    config: &EngineConfig,
    spec: &InterventionSpec,
    rng: &mut R,
) -> Result<InterventionRun> {
    spec.validate()?;
    let mut process = StandardProcess::new(g, thresholds, seeds, config)?;
    let trigger = spec.lambda * g.n() as f64;
    if process.total() as f64 > trigger {
        return Err(Error::param(
            "seeds",
            "seed set already exceeds the trigger fraction",
        ));
    }
    loop {
        let pending = process.pending().len() as u64;
        if pending == 0 {
            return Ok(InterventionRun {
                observed: None,
                trace: process.trace(SpreadOutcome::Halted),
            });
        }
        if (process.total() + pending) as f64 > trigger {
            break;
        }
        process.step()?;
        if process.reached_stop() {
            return Ok(InterventionRun {
                observed: None,
                trace: process.trace(SpreadOutcome::Spread),
            });
        }
    }
    let observed = ObservedState::from_process(&process);
    match spec.variant {
        Variant::Bolster { .. } | Variant::Delay { .. } => {
            let r_max = process.thresholds().iter().copied().max().unwrap_or(1);
            let laws: Vec<ThresholdDistribution> = (1..=r_max)
                .map(|r| spec.new_threshold_law(r).expect("threshold variant"))
                .collect();
            let mut reassign = |process: &mut StandardProcess<'_>| {
                process.reassign_healthy_thresholds(|_, r| laws[r.max(1) as usize - 1].sample(rng));
            };
            if spec.saves_vertices() {
                reassign(&mut process);
                process.step()?;
            } else {
                process.step()?;
                reassign(&mut process);
            }
        }
        Variant::Diminish { alpha_p, alpha_q } | Variant::Sequester { alpha_p, alpha_q } => {
            let sequester = matches!(spec.variant, Variant::Sequester { .. });
            let infected = process.infected();
            let graph = process.graph();
            let thinned = graph.retain_edges(|u, v| {
                if sequester && !infected[u as usize] && !infected[v as usize] {
                    return true;
                }
                let alpha = if graph.is_near(u as usize, v as usize) {
                    alpha_p
                } else {
                    alpha_q
                };
                rng.random_bool(alpha)
            });
            process.replace_graph(thinned);
        }
    }
    let outcome = process.run()?;
    Ok(InterventionRun {
        observed: Some(observed),
        trace: process.trace(outcome),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_standard;
    use crate::rng::substream;
    use crate::template::TemplateGraph;
    use crate::tmgraph::{assign_thresholds, sample_graph, select_seeds};
    use approx::assert_relative_eq;

    fn er(n: u64, p: f64) -> TMParams {
        TMParams::new(TemplateGraph::single(), n, p, 0.0).unwrap()
    }

    fn binom(x: u64, p: f64, i: u64) -> f64 {
        crate::binomial::binom_pmf(x, p, i)
    }

    #[test]
    fn empty_prior_is_plain_binomial() {
        let params = er(1000, 0.01);
        let obs = ObservedState::er(1000, 40, 0, vec![0, 960]);
        let law = residual_er(&obs, 2, &params).unwrap();
        let m = law.marginal();
        for a in 0..6 {
            assert_relative_eq!(m[a], binom(40, 0.01, a as u64), max_relative = 1e-12);
        }
    }

    #[test]
    fn no_new_infections_is_conditional_binomial() {
        let params = er(1000, 0.02);
        let obs = ObservedState::er(1000, 30, 30, vec![0, 970]);
        let m = residual_er(&obs, 2, &params).unwrap().marginal();
        let (b0, b1) = (binom(30, 0.02, 0), binom(30, 0.02, 1));
        assert_relative_eq!(m[0], b0 / (b0 + b1), epsilon = 1e-14);
        assert_relative_eq!(m[1], b1 / (b0 + b1), epsilon = 1e-14);
        assert!(m.iter().skip(2).all(|&x| x == 0.0));
    }

    #[test]
    fn planted_one_cluster_matches_er() {
        let obs = ObservedState::er(500, 50, 20, vec![0, 450]);
        let a = residual_er(&obs, 3, &er(500, 0.01)).unwrap();
        let params = TMParams::new(TemplateGraph::planted(1).unwrap(), 500, 0.01, 0.3).unwrap();
        let b = residual_tm(&obs, 3, &params, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn symmetric_clusters_share_a_law() {
        let params = TMParams::new(TemplateGraph::ring(5, 1).unwrap(), 500, 0.02, 0.004).unwrap();
        let obs = ObservedState {
            tau: 3,
            n: 500,
            infected: 50,
            infected_prev: 25,
            per_cluster: vec![10; 5],
            per_cluster_prev: vec![5; 5],
            healthy_by_threshold: vec![0, 450],
        };
        let first = residual_tm(&obs, 2, &params, 0).unwrap();
        for c in 1..5 {
            assert_eq!(residual_tm(&obs, 2, &params, c).unwrap(), first);
        }
        let profile = ResidualProfile::observe(&obs, &params).unwrap();
        assert!(profile.heterogeneity < 1e-15);
    }

    #[test]
    fn thinning_extremes() {
        let law = residual_from_counts(3, 0.05, 0.02, (20, 30), (10, 15)).unwrap();
        let same = law.thinned(1.0, 1.0);
        assert!(law.tv_distance(&same) < 1e-15);
        let gone = law.thinned(0.0, 0.0);
        assert_relative_eq!(gone.joint[0][0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn thinning_one_atom() {
        // All mass at (2, 1): thinning is Bin(2, .5) x Bin(1, .25).
        let law = ResidualLaw {
            r: 4,
            joint: vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]],
        };
        let t = law.thinned(0.5, 0.25);
        assert_relative_eq!(t.joint[1][0], 0.5 * 0.75, epsilon = 1e-15);
        assert_relative_eq!(t.joint[2][1], 0.25 * 0.25, epsilon = 1e-15);
        assert_relative_eq!(t.total(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bolster_point_mass_expands() {
        let params = er(10_000, 7e-4);
        let obs = ObservedState::er(10_000, 400, 250, vec![0, 9600]);
        let spec = InterventionSpec::bolster(
            vec![Remap {
                from: 2,
                to: ThresholdDistribution::point_mass(3).unwrap(),
            }],
            0.1,
        );
        let law = residual_er(&obs, 2, &params).unwrap();
        let m = law.marginal();
        let s = surrogate_bolster(&obs, &spec, &params).unwrap();
        assert_relative_eq!(s.j(3), m[0], epsilon = 1e-14);
        assert_relative_eq!(s.j(2), m[1], epsilon = 1e-14);
        assert_eq!(s.j(1), 0.0);
        assert_relative_eq!(s.phi, 9600.0 * law.mass_at_least(2), max_relative = 1e-9);
        assert_relative_eq!(s.mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn delay_is_geometric_bolster() {
        let params = er(10_000, 7e-4);
        let obs = ObservedState::er(10_000, 300, 200, vec![0, 5000, 4700]);
        let delay = surrogate(&obs, &InterventionSpec::delay(0.4, 8, 0.1), &params).unwrap();
        let remap = (2..=3)
            .map(|r| Remap {
                from: r,
                to: delay_law(r, 0.4, 8),
            })
            .collect();
        let bolster = surrogate(&obs, &InterventionSpec::bolster(remap, 0.1), &params).unwrap();
        assert_eq!(delay, bolster);
        let law = delay_law(2, 0.4, 5);
        assert_relative_eq!(law.zeta(2), 0.4);
        assert_relative_eq!(law.zeta(3), 0.24);
        assert_relative_eq!(law.zeta(5), 0.6f64.powi(3), epsilon = 1e-15);
    }

    #[test]
    fn bolster_low_threshold_condition() {
        let params = er(10_000, 7e-4);
        // k / (3ϕ) is about 476.
        for &(now, prev) in &[(100, 50), (300, 200), (450, 250), (470, 100)] {
            let obs = ObservedState::er(10_000, now, prev, vec![0, 10_000 - now]);
            for alpha in [0.0, 0.3, 0.7, 1.0] {
                for spec in [
                    InterventionSpec::bolster_a(alpha, 0.1).unwrap(),
                    InterventionSpec::bolster_b(alpha, 0.1).unwrap(),
                ] {
                    let s = surrogate(&obs, &spec, &params).unwrap();
                    assert!(s.j(1) == 0.0 || s.j(1) < 2.0 / 3.0 * s.j(2));
                    assert!(s.flags.is_empty(), "{:?}", s.flags);
                }
            }
        }
    }

    #[test]
    fn diminish_identity_and_zero() {
        let params = er(10_000, 15e-4);
        let obs = ObservedState::er(10_000, 180, 100, vec![0, 0, 9820]);
        let s = surrogate_diminish(&obs, 1.0, 1.0, &params).unwrap();
        let m = residual_er(&obs, 3, &params).unwrap().marginal();
        assert_relative_eq!(s.j(3), m[0], epsilon = 1e-14);
        assert_relative_eq!(s.j(2), m[1], epsilon = 1e-14);
        assert_relative_eq!(s.j(1), m[2], epsilon = 1e-14);
        assert_eq!(s.params.p, params.p);

        let zero = surrogate_diminish(&obs, 0.0, 0.0, &params).unwrap();
        assert_relative_eq!(zero.j(3), 1.0, epsilon = 1e-12);
        assert!(zero.phi.abs() < 1e-6);
        assert_eq!(zero.params.p, 0.0);
        assert_eq!(predict(&zero, 0.1).unwrap().outcome, Prediction::Halt);

        let seq = surrogate_sequester(&obs, 0.0, 0.0, &params).unwrap();
        assert_eq!(seq.j, zero.j);
        assert_eq!(seq.params.p, params.p);
    }

    #[test]
    fn sequester_keeps_edge_probabilities() {
        let params = TMParams::new(
            TemplateGraph::ring(10, 1).unwrap(),
            3000,
            9.0 / 3000.0,
            6.0 / 3000.0,
        )
        .unwrap();
        let obs = ObservedState {
            tau: 4,
            n: 3000,
            infected: 100,
            infected_prev: 60,
            per_cluster: vec![10; 10],
            per_cluster_prev: vec![6; 10],
            healthy_by_threshold: vec![0, 0, 2900],
        };
        for alpha in [0.2, 0.5, 0.9] {
            let d = surrogate_diminish(&obs, alpha, 2.0 / 3.0 * alpha, &params).unwrap();
            let s = surrogate_sequester(&obs, alpha, 2.0 / 3.0 * alpha, &params).unwrap();
            assert!(s.params.p >= d.params.p && s.params.q >= d.params.q);
            assert_eq!(s.j, d.j);
            assert_relative_eq!(d.mass(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn thinned_surrogate_matches_monte_carlo() {
        // Healthy vertices with r in {2, 3}; m = 12 earlier infected, Δ = 6 new.
        let p = 0.15;
        let (m, delta) = (12u64, 6u64);
        let params = er(200, p);
        let obs = ObservedState::er(200, m + delta, m, vec![0, 91, 91]);
        let alpha = 0.5;
        let s = surrogate_diminish(&obs, alpha, alpha, &params).unwrap();
        let mut rng = substream(99, &[]);
        let mut counts = [0u64; 4];
        let samples = 1_000_000;
        for i in 0..samples {
            let r = if i % 2 == 0 { 2 } else { 3 };
            let prior = loop {
                let d = (0..m).filter(|_| rng.random_bool(p)).count() as u32;
                if d < r {
                    break d;
                }
            };
            let a = prior + (0..delta).filter(|_| rng.random_bool(p)).count() as u32;
            let kept = (0..a).filter(|_| rng.random_bool(alpha)).count() as u32;
            if kept < r {
                counts[(r - kept) as usize] += 1;
            } else {
                counts[0] += 1;
            }
        }
        for sres in 1..=3 {
            let mc = counts[sres] as f64 / samples as f64;
            assert!(
                (mc - s.j(sres as u32)).abs() < 2e-3,
                "s={sres}: {mc} vs {}",
                s.j(sres as u32)
            );
        }
    }

    #[test]
    fn verdict_band() {
        let params = er(10_000, 7e-4);
        let obs = ObservedState::er(10_000, 700, 450, vec![0, 9300]);
        let noop = InterventionSpec::bolster(vec![], 0.1);
        let v = predict(&surrogate(&obs, &noop, &params).unwrap(), 0.1).unwrap();
        assert_eq!(v.outcome, Prediction::Spread);
        assert!(v.phi_j > v.upper);
        let strong = InterventionSpec::bolster_a(0.0, 0.1).unwrap();
        let v = predict(&surrogate(&obs, &strong, &params).unwrap(), 0.1).unwrap();
        assert_eq!(v.outcome, Prediction::Halt);
        assert!(v
            .flags
            .iter()
            .any(|f| matches!(f, VerdictFlag::TooLate { .. })));
    }

    #[test]
    fn rescaled_state_is_consistent() {
        let params =
            TMParams::new(TemplateGraph::ring(10, 1).unwrap(), 3000, 0.003, 0.001).unwrap();
        let obs = ObservedState {
            tau: 4,
            n: 3000,
            infected: 130,
            infected_prev: 70,
            per_cluster: vec![20, 15, 13, 12, 10, 10, 12, 13, 15, 10],
            per_cluster_prev: vec![10, 8, 7, 7, 5, 5, 7, 7, 8, 6],
            healthy_by_threshold: vec![0, 1435, 1435],
        };
        for x in [1, 17, 130, 500, 1499] {
            let s = obs.rescaled(x);
            s.validate(&params).unwrap();
            assert_eq!(s.infected, x);
        }
    }

    #[test]
    fn boundary_moves_with_alpha() {
        let params = er(10_000, 7e-4);
        let obs = ObservedState::er(10_000, 500, 320, vec![0, 9500]);
        let strong = boundary_infected(
            &obs,
            &InterventionSpec::bolster_a(0.2, 0.1).unwrap(),
            &params,
        )
        .unwrap()
        .unwrap();
        let weak = boundary_infected(
            &obs,
            &InterventionSpec::bolster_a(0.8, 0.1).unwrap(),
            &params,
        )
        .unwrap()
        .unwrap();
        assert!(strong > weak, "{strong} vs {weak}");
    }

    fn sampled(seed: u64, n: u64, p: f64) -> (SampledGraph, ThresholdAssignment, Vec<usize>) {
        let params = er(n, p);
        let g = sample_graph(&params, &mut substream(seed, &[1])).unwrap();
        let thresholds = ThresholdAssignment::uniform(n, 2);
        let seeds = select_seeds(n / 10, n, &mut substream(seed, &[3])).unwrap();
        (g, thresholds, seeds)
    }

    #[test]
    fn full_retention_changes_nothing() {
        let (g, thresholds, seeds) = sampled(11, 2000, 0.004);
        let config = EngineConfig::default();
        let base = run_standard(&g, &thresholds, &seeds, &config).unwrap();
        for spec in [
            InterventionSpec::diminish(1.0, 1.0, 0.3),
            InterventionSpec::sequester(1.0, 1.0, 0.3),
        ] {
            let run = run_with_intervention(
                &g,
                &thresholds,
                &seeds,
                &config,
                &spec,
                &mut substream(11, &[5]),
            )
            .unwrap();
            assert!(run.triggered());
            assert_eq!(run.trace, base);
        }
    }

    #[test]
    fn impossible_thresholds_stop_spread() {
        let (g, thresholds, seeds) = sampled(12, 2000, 0.004);
        let config = EngineConfig::default();
        let spec = InterventionSpec::bolster(
            vec![Remap {
                from: 2,
                to: ThresholdDistribution::point_mass(2000).unwrap(),
            }],
            0.3,
        );
        let run = run_with_intervention(
            &g,
            &thresholds,
            &seeds,
            &config,
            &spec,
            &mut substream(12, &[5]),
        )
        .unwrap();
        let obs = run.observed.expect("baseline spreads");
        assert_eq!(run.trace.outcome, SpreadOutcome::Halted);
        // Generation τ + 1 still happens; nothing after it.
        assert_eq!(run.trace.end_generation, obs.tau + 2);
        assert_eq!(run.trace.records.last().unwrap().new, 0);
    }

    #[test]
    fn observed_state_from_run_is_valid() {
        let params = er(2000, 0.004);
        let (g, _, seeds) = sampled(13, 2000, 0.004);
        let thresholds = assign_thresholds(
            &ThresholdDistribution::two_point(2, 3, 0.3).unwrap(),
            2000,
            &mut substream(13, &[2]),
        );
        let run = run_with_intervention(
            &g,
            &thresholds,
            &seeds,
            &EngineConfig::default(),
            &InterventionSpec::diminish(0.5, 0.5, 0.25),
            &mut substream(13, &[5]),
        )
        .unwrap();
        let obs = run.observed.unwrap();
        obs.validate(&params).unwrap();
        assert!(obs.infected as f64 <= 0.25 * 2000.0);
    }

    #[test]
    fn spec_parsing() {
        let spec: InterventionSpec = serde_json::from_str(
            r#"{"lambda":0.1,"variant":{"kind":"diminish","alpha_p":0.5,"alpha_q":0.25}}"#,
        )
        .unwrap();
        assert_eq!(spec, InterventionSpec::diminish(0.5, 0.25, 0.1));
        let bad: std::result::Result<InterventionSpec, _> =
            serde_json::from_str(r#"{"lambda":0.1,"variant":{"kind":"diminish","alpha":0.5}}"#);
        assert!(bad.is_err());
        assert!(InterventionSpec::diminish(1.5, 0.5, 0.1)
            .validate()
            .is_err());
        let weakening = InterventionSpec::bolster(
            vec![Remap {
                from: 3,
                to: ThresholdDistribution::point_mass(2).unwrap(),
            }],
            0.1,
        );
        assert!(weakening.validate().is_err());
    }
}
