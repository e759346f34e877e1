//! Critical seed size and bottleneck generation.
//!
//! With `t` infected vertices per cluster, a threshold-`r` vertex is activated
//! with probability `π_r(t) = Pr[Bin(k_p t, p) + Bin(k_q t, q) >= r]`. Mixing over
//! the threshold law gives `A(t)`, and the deficiency
//! `f(φ, t) = (n - φ) A(t) - k t + φ` decides whether `φ` seeds can push the
//! process past generation `t`. The critical seed size `Φ` is the least `φ`
//! with `f(φ, t) >= 0` on the whole horizon `1 <= t <= 1/(3ϕ)`.

use serde::{Deserialize, Serialize};

use crate::binomial::NeighborCountLaw;
use crate::tmgraph::{TMParams, ThresholdDistribution};
use crate::{Error, Result};

pub use crate::binomial::binom_log_pmf;

/// Law of the infected-neighbour count after `t` infected vertices per cluster.
pub fn neighbor_count_law(t: u64, params: &TMParams) -> NeighborCountLaw {
    NeighborCountLaw::new(
        params.k_p() as u64 * t,
        params.p,
        params.k_q() as u64 * t,
        params.q,
    )
}

/// `π_r(t)`.
pub fn pi_r(t: u64, r: u32, params: &TMParams) -> f64 {
    if r == 0 {
        return 1.0;
    }
    neighbor_count_law(t, params).tail(r as usize)
}

/// `A(t) = Σ_r ζ_r π_r(t)`.
pub fn a_of_t(t: u64, dist: &ThresholdDistribution, params: &TMParams) -> f64 {
    let law = neighbor_count_law(t, params);
    (1..=dist.r_max())
        .filter(|&r| dist.zeta(r) > 0.0)
        .map(|r| dist.zeta(r) * law.tail(r as usize))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Which hypotheses of the dichotomy theorem hold for a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// Largest `β` with `ζ_1 η ϕ <= 1 - β`; non-positive means violated.
    pub beta: f64,
    pub beta_ok: bool,
    /// `ζ_1 < 2 ζ_2 / 3` (or `ζ_1 = 0`).
    pub low_threshold_ok: bool,
    /// `η ϕ <= sqrt(β η)`, the finite-size reading of `η ϕ = o(sqrt(β η))`.
    pub sparse_ok: bool,
    pub q_le_p: bool,
    pub p_le_half: bool,
    /// True when the horizon was capped at `n / k` because `1/(3ϕ)` exceeds it.
    pub horizon_capped: bool,
}

impl AssumptionReport {
    pub fn within_theory(&self) -> bool {
        self.beta_ok && self.low_threshold_ok && self.sparse_ok && self.q_le_p && self.p_le_half
    }
}

/// Range of `t` over which `f(φ, t) >= 0` is demanded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// `t <= 1/(3ϕ)`, capped at `n / k`.
    #[default]
    Theory,
    /// The theory horizon, extended until the process sustains itself without
    /// seeds (`n A(t) >= k t`) or `n / k` is reached. At finite `n` the minimum
    /// of `f` can sit on the theory horizon, in which case reaching `1/(3ϕ)`
    /// does not yet mean the spread is self-sustaining.
    SelfSustaining,
}

/// Precomputed `A(t)` table for one `(params, dist)` pair.
#[derive(Clone, Debug)]
pub struct AnalyticModel {
    params: TMParams,
    dist: ThresholdDistribution,
    t_max: u64,
    horizon_capped: bool,
    a_table: Vec<f64>,
}

impl AnalyticModel {
    /// Precompute `A(t)` for `t = 0..=t_max`, where `t_max = ⌊1/(3ϕ)⌋` capped at
    /// `⌊n/k⌋` (beyond which every vertex is infected anyway).
    pub fn new(params: TMParams, dist: ThresholdDistribution) -> Result<Self> {
        Self::with_horizon(params, dist, Horizon::Theory)
    }

    pub fn with_horizon(
        params: TMParams,
        dist: ThresholdDistribution,
        kind: Horizon,
    ) -> Result<Self> {
        let phi = params.phi();
        let cap = params.n / params.k() as u64;
        let horizon = if phi > 0.0 {
            1.0 / (3.0 * phi)
        } else {
            f64::INFINITY
        };
        let (t_max, horizon_capped) = if horizon >= cap as f64 {
            (cap, horizon > cap as f64)
        } else {
            // Guard against 1/(3ϕ) landing a hair below an integer.
            ((horizon * (1.0 + 1e-12)).floor() as u64, false)
        };
        if t_max < 1 {
            return Err(Error::EmptyHorizon { horizon });
        }
        let mut a_table: Vec<f64> = (0..=t_max).map(|t| a_of_t(t, &dist, &params)).collect();
        let mut t_max = t_max;
        if kind == Horizon::SelfSustaining {
            let (n, k) = (params.n as f64, params.k() as f64);
            while t_max < cap {
                let t = t_max + 1;
                let a = a_of_t(t, &dist, &params);
                if n * a >= k * t as f64 {
                    break;
                }
                a_table.push(a);
                t_max = t;
            }
        }
        Ok(AnalyticModel {
            params,
            dist,
            t_max,
            horizon_capped,
            a_table,
        })
    }

    pub fn params(&self) -> &TMParams {
        &self.params
    }

    pub fn dist(&self) -> &ThresholdDistribution {
        &self.dist
    }

    pub fn t_max(&self) -> u64 {
        self.t_max
    }

    /// Cached `A(t)`.
    pub fn a(&self, t: u64) -> f64 {
        self.a_table[t as usize]
    }

    pub fn a_table(&self) -> &[f64] {
        &self.a_table
    }

    /// `f(φ, t) = (n - φ) A(t) - k t + φ`.
    pub fn f(&self, phi_seeds: f64, t: u64) -> f64 {
        let n = self.params.n as f64;
        (n - phi_seeds) * self.a(t) - (self.params.k() as u64 * t) as f64 + phi_seeds
    }

    /// Smallest `t` in `1..=t_max` minimising `f(φ, ·)`, with the minimum.
    pub fn t_star(&self, phi_seeds: f64) -> (u64, f64) {
        let mut best = (1, self.f(phi_seeds, 1));
        for t in 2..=self.t_max {
            let value = self.f(phi_seeds, t);
            if value < best.1 {
                best = (t, value);
            }
        }
        best
    }

    pub fn assumptions(&self) -> AssumptionReport {
        let eta = self.params.eta();
        let degree = self.params.expected_degree();
        let beta = 1.0 - self.dist.zeta(1) * degree;
        AssumptionReport {
            beta,
            beta_ok: beta > 0.0,
            low_threshold_ok: self.dist.low_threshold_condition(),
            sparse_ok: beta > 0.0 && degree <= (beta * eta).sqrt(),
            q_le_p: self.params.q <= self.params.p,
            p_le_half: self.params.p <= 0.5 && self.params.q <= 0.5,
            horizon_capped: self.horizon_capped,
        }
    }

    /// `Φ`: least integer `φ` in `[0, n]` with `f(φ, t) >= 0` for every `t` on
    /// the horizon, found by bisection on the monotone predicate.
    pub fn critical_seed(&self) -> CriticalResult {
        let feasible = |phi: u64| self.t_star(phi as f64).1 >= 0.0;
        let (mut lo, mut hi) = (0u64, self.params.n);
        if feasible(0) {
            hi = 0;
        }
        // Invariant: feasible(hi), and !feasible(lo) unless hi == 0.
        while hi > lo + 1 {
            let mid = lo + (hi - lo) / 2;
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let phi = hi;
        let (t_star, f_min) = self.t_star(phi as f64);
        CriticalResult {
            phi,
            t_star,
            f_min,
            t_max: self.t_max,
            f_curve: (1..=self.t_max).map(|t| self.f(phi as f64, t)).collect(),
            assumptions: self.assumptions(),
        }
    }

    /// Second differences of `A` on the horizon.
    pub fn check_convexity(&self) -> ConvexityReport {
        const TOL: f64 = 1e-10;
        let assumptions = self.assumptions();
        let hypothesis = assumptions.low_threshold_ok && assumptions.p_le_half;
        let mut min_second_difference = f64::INFINITY;
        let mut violations = Vec::new();
        for t in 1..self.t_max {
            let d2 = self.a(t + 1) - 2.0 * self.a(t) + self.a(t - 1);
            min_second_difference = min_second_difference.min(d2);
            if d2 < -TOL {
                violations.push(t);
            }
        }
        ConvexityReport {
            hypothesis_holds: hypothesis,
            convex: hypothesis.then_some(violations.is_empty()),
            min_second_difference,
            violations,
        }
    }

    /// `β n / (2 k (ϕ η)^2)`, a lower bound on `t*` when `ζ_1 η ϕ <= 1 - β`.
    pub fn t_star_lower_bound(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::param("beta", format!("{beta} is outside (0, 1]")));
        }
        let degree = self.params.expected_degree();
        if self.dist.zeta(1) * degree > 1.0 - beta {
            return Err(Error::param(
                "beta",
                format!(
                    "zeta_1 * degree = {} exceeds 1 - beta",
                    self.dist.zeta(1) * degree
                ),
            ));
        }
        Ok(beta * self.params.n as f64 / (2.0 * self.params.k() as f64 * degree * degree))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalResult {
    pub phi: u64,
    pub t_star: u64,
    pub f_min: f64,
    pub t_max: u64,
    /// `f(Φ, t)` for `t = 1..=t_max`.
    pub f_curve: Vec<f64>,
    pub assumptions: AssumptionReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub hypothesis_holds: bool,
    /// `None` when the hypothesis fails and convexity is not claimed.
    pub convex: Option<bool>,
    pub min_second_difference: f64,
    pub violations: Vec<u64>,
}

/// Outcome of checking the `π_r` growth bounds at one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthBoundReport {
    pub preconditions_ok: bool,
    pub upper_holds: bool,
    /// Whether `3 x (1 - p) > 4`, i.e. the second bound applies.
    pub lower_applicable: bool,
    pub lower_holds: bool,
}

/// Check `π_r(xt) <= 3 (4x / (3(1-p)))^r π_r(t)` and, when `3x(1-p) > 4`,
/// `π_r(t) <= 4 (4 / (3x(1-p)))^r π_r(xt)`. Requires `t >= 4r`, `x >= 1`,
/// `ϕ x t <= 1/3` and `x t` integral; violations are reported, not asserted.
pub fn check_growth_bounds(params: &TMParams, r: u32, t: u64, x: f64) -> GrowthBoundReport {
    let xt = x * t as f64;
    let xt_int = xt.round();
    let preconditions_ok = t >= 4 * r as u64
        && x >= 1.0
        && params.phi() * xt <= 1.0 / 3.0
        && (xt - xt_int).abs() <= 1e-9 * xt.max(1.0)
        && params.q <= params.p;
    let p = params.p;
    let pi_t = pi_r(t, r, params);
    let pi_xt = pi_r(xt_int as u64, r, params);
    let rf = r as i32;
    let slack = 1.0 + 1e-12;
    let upper_holds = pi_xt <= 3.0 * (4.0 * x / (3.0 * (1.0 - p))).powi(rf) * pi_t * slack;
    let lower_applicable = 3.0 * x * (1.0 - p) > 4.0;
    let lower_holds =
        !lower_applicable || pi_t <= 4.0 * (4.0 / (3.0 * x * (1.0 - p))).powi(rf) * pi_xt * slack;
    GrowthBoundReport {
        preconditions_ok,
        upper_holds,
        lower_applicable,
        lower_holds,
    }
}

/// One susceptibility class of the coinflip model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoinflipClass {
    /// Infected contacts needed before coins are flipped.
    pub s: u32,
    /// Per-contact infection probability once susceptible.
    pub z: f64,
    /// Fraction of vertices in this class.
    pub weight: f64,
}

/// Coinflip dynamics: susceptible after `s` infected contacts, then infected
/// with probability `z` per new contact, and unconditionally at `cap` contacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoinflipModel {
    pub classes: Vec<CoinflipClass>,
    pub cap: u32,
}

impl CoinflipModel {
    pub fn uniform(s: u32, z: f64, cap: u32) -> Self {
        CoinflipModel {
            classes: vec![CoinflipClass { s, z, weight: 1.0 }],
            cap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::param("classes", "no susceptibility classes"));
        }
        let total: f64 = self.classes.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 || self.classes.iter().any(|c| c.weight < 0.0) {
            return Err(Error::param(
                "weight",
                format!("class weights sum to {total}"),
            ));
        }
        for class in &self.classes {
            if !(class.z > 0.0 && class.z <= 1.0) {
                return Err(Error::param("z", format!("{} is outside (0, 1]", class.z)));
            }
            if self.cap <= class.s {
                return Err(Error::param(
                    "cap",
                    format!("cap {} must exceed susceptibility {}", self.cap, class.s),
                ));
            }
        }
        Ok(())
    }
}

/// Preflip the coins: a class `(s, z)` vertex has threshold `s + j` with
/// probability `(1-z)^(j-1) z` for `1 <= j < cap - s`, and threshold `cap` with
/// the remaining `(1-z)^(cap-s-1)`.
pub fn coinflip_reduce(cf: &CoinflipModel) -> Result<ThresholdDistribution> {
    cf.validate()?;
    let mut zeta = vec![0.0; cf.cap as usize];
    for class in &cf.classes {
        let span = cf.cap - class.s;
        let mut survive = 1.0;
        for j in 1..span {
            zeta[(class.s + j) as usize - 1] += class.weight * survive * class.z;
            survive *= 1.0 - class.z;
        }
        zeta[cf.cap as usize - 1] += class.weight * survive;
    }
    ThresholdDistribution::from_weights(zeta)
}

/// Asymptotic critical seed count for uniform threshold `r` on `G(n, p)`:
/// `(1 - 1/r) ((r-1)! / (n p^r))^(1/(r-1))`.
pub fn janson_critical(n: u64, p: f64, r: u32) -> f64 {
    assert!(r >= 2, "defined for r >= 2");
    let fact: f64 = (1..r).map(f64::from).product();
    let rf = r as f64;
    (1.0 - 1.0 / rf) * (fact / (n as f64 * p.powi(r as i32))).powf(1.0 / (rf - 1.0))
}
