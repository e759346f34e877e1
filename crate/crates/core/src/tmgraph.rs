//! Templated multisection graphs: parameters, sparse sampling, threshold
//! assignment and seed selection.
//!
//! Vertices are `0..n` and vertex `u` lives in cluster `u / η` with `η = n / k`.

use std::io::{self, BufRead, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::template::TemplateGraph;
use crate::{Error, Result};

/// Parameters of the graph family `TM(F, n, k_p, k_q, p, q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TMParams {
    pub template: TemplateGraph,
    pub n: u64,
    pub p: f64,
    pub q: f64,
}

impl TMParams {
    pub fn new(template: TemplateGraph, n: u64, p: f64, q: f64) -> Result<Self> {
        template.validate()?;
        for (name, value) in [("p", p), ("q", q)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::param(name, format!("{value} is not a probability")));
            }
        }
        if n == 0 {
            return Err(Error::param("n", "graph needs at least one vertex"));
        }
        Ok(TMParams { template, n, p, q })
    }

    /// Derive `p` and `q` from expected near/far degrees:
    /// `p = d_near / (k_p η)`, `q = d_far / (k_q η)`.
    pub fn from_degrees(
        template: TemplateGraph,
        n: u64,
        near_degree: f64,
        far_degree: f64,
    ) -> Result<Self> {
        let eta = n as f64 / template.k() as f64;
        let p = near_degree / (template.k_p() as f64 * eta);
        let q = if template.k_q() == 0 {
            if far_degree != 0.0 {
                return Err(Error::param("far_degree", "template has no far clusters"));
            }
            0.0
        } else {
            far_degree / (template.k_q() as f64 * eta)
        };
        Self::new(template, n, p, q)
    }

    pub fn k(&self) -> usize {
        self.template.k()
    }

    pub fn k_p(&self) -> usize {
        self.template.k_p()
    }

    pub fn k_q(&self) -> usize {
        self.template.k_q()
    }

    /// Cluster size `η = n / k` (real-valued; surrogate graphs need not split evenly).
    pub fn eta(&self) -> f64 {
        self.n as f64 / self.k() as f64
    }

    /// `ϕ = p k_p + q k_q`.
    pub fn phi(&self) -> f64 {
        self.p * self.k_p() as f64 + self.q * self.k_q() as f64
    }

    pub fn expected_degree(&self) -> f64 {
        self.eta() * self.phi()
    }

    /// Integral cluster size; errors if `k` does not divide `n`.
    pub fn cluster_size(&self) -> Result<u64> {
        let k = self.k() as u64;
        if self.n % k != 0 {
            return Err(Error::UnevenClusters {
                n: self.n,
                k: self.k(),
            });
        }
        Ok(self.n / k)
    }
}

/// Per-vertex threshold law `ζ_1..ζ_{r_max}`. Serialized as the plain vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThresholdDistribution {
    zeta: Vec<f64>,
}

impl ThresholdDistribution {
    /// `zeta[i]` is the probability of threshold `i + 1`.
    pub fn new(zeta: Vec<f64>) -> Result<Self> {
        if zeta.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(bad) = zeta.iter().find(|z| !z.is_finite() || **z < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "entry {bad} is not a probability"
            )));
        }
        let total: f64 = zeta.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "mass sums to {total}, not 1"
            )));
        }
        Ok(ThresholdDistribution { zeta })
    }

    /// Normalise arbitrary non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "cannot normalise weights {weights:?}"
            )));
        }
        let mut zeta: Vec<f64> = weights.iter().map(|w| w / total).collect();
        // Absorb rounding so the sum check passes exactly.
        let drift: f64 = 1.0 - zeta.iter().sum::<f64>();
        if let Some(max) = zeta.iter_mut().max_by(|a, b| a.total_cmp(b)) {
            *max += drift;
        }
        Self::new(zeta)
    }

    pub fn point_mass(r: u32) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidDistribution(
                "threshold must be at least 1".into(),
            ));
        }
        let mut zeta = vec![0.0; r as usize];
        zeta[r as usize - 1] = 1.0;
        Self::new(zeta)
    }

    /// Two-point mixture: `hi` with probability `frac_hi`, otherwise `lo`.
    pub fn two_point(lo: u32, hi: u32, frac_hi: f64) -> Result<Self> {
        if lo == 0 || hi == 0 || !(0.0..=1.0).contains(&frac_hi) {
            return Err(Error::InvalidDistribution(format!(
                "two_point({lo}, {hi}, {frac_hi})"
            )));
        }
        let mut zeta = vec![0.0; lo.max(hi) as usize];
        zeta[lo as usize - 1] += 1.0 - frac_hi;
        zeta[hi as usize - 1] += frac_hi;
        Self::new(zeta)
    }

    pub fn r_max(&self) -> u32 {
        self.zeta.len() as u32
    }

    /// `ζ_r`, zero outside the support.
    pub fn zeta(&self, r: u32) -> f64 {
        if r == 0 {
            return 0.0;
        }
        self.zeta.get(r as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.zeta
    }

    /// Smallest threshold carrying mass.
    pub fn min_support(&self) -> u32 {
        self.zeta
            .iter()
            .position(|&z| z > 0.0)
            .map_or(0, |i| i as u32 + 1)
    }

    /// The few-early-adopters condition `ζ_1 < 2ζ_2/3` (vacuous when `ζ_1 = 0`).
    pub fn low_threshold_condition(&self) -> bool {
        let z1 = self.zeta(1);
        z1 == 0.0 || z1 < 2.0 * self.zeta(2) / 3.0
    }

    pub fn mean(&self) -> f64 {
        self.zeta
            .iter()
            .enumerate()
            .map(|(i, z)| (i + 1) as f64 * z)
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        // Support is validated non-empty with positive mass.
        let index = WeightedIndex::new(&self.zeta).expect("validated distribution");
        index.sample(rng) as u32 + 1
    }
}

impl TryFrom<Vec<f64>> for ThresholdDistribution {
    type Error = Error;

    fn try_from(zeta: Vec<f64>) -> Result<Self> {
        Self::new(zeta)
    }
}

impl From<ThresholdDistribution> for Vec<f64> {
    fn from(dist: ThresholdDistribution) -> Self {
        dist.zeta
    }
}

/// Threshold `r(u)` of every vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdAssignment(pub Vec<u32>);

impl ThresholdAssignment {
    pub fn uniform(n: u64, r: u32) -> Self {
        ThresholdAssignment(vec![r; n as usize])
    }

    pub fn get(&self, u: usize) -> u32 {
        self.0[u]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Draw i.i.d. thresholds from `dist`.
pub fn assign_thresholds<R: Rng + ?Sized>(
    dist: &ThresholdDistribution,
    n: u64,
    rng: &mut R,
) -> ThresholdAssignment {
    let index = WeightedIndex::new(dist.as_slice()).expect("validated distribution");
    ThresholdAssignment((0..n).map(|_| index.sample(rng) as u32 + 1).collect())
}

/// Uniform `count`-subset of `0..n`, sorted.
pub fn select_seeds<R: Rng + ?Sized>(count: u64, n: u64, rng: &mut R) -> Result<Vec<usize>> {
    if count > n {
        return Err(Error::TooManySeeds { seeds: count, n });
    }
    let mut seeds = rand::seq::index::sample(rng, n as usize, count as usize).into_vec();
    seeds.sort_unstable();
    Ok(seeds)
}

/// A sampled graph in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledGraph {
    params: TMParams,
    cluster_size: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl SampledGraph {
    /// Build from an undirected edge list (each edge once, either orientation).
    pub fn from_edges(params: TMParams, edges: &[(u32, u32)]) -> Result<Self> {
        let cluster_size = params.cluster_size()? as usize;
        let n = params.n as usize;
        let mut degree = vec![0usize; n + 1];
        for &(u, v) in edges {
            if u == v || u as usize >= n || v as usize >= n {
                return Err(Error::param("edges", format!("invalid edge ({u}, {v})")));
            }
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for u in 0..n {
            offsets[u + 1] = offsets[u] + degree[u];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[n]];
        for &(u, v) in edges {
            targets[fill[u as usize]] = v;
            fill[u as usize] += 1;
            targets[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        for u in 0..n {
            let list = &mut targets[offsets[u]..offsets[u + 1]];
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::param(
                    "edges",
                    format!("duplicate edge at vertex {u}"),
                ));
            }
        }
        Ok(SampledGraph {
            params,
            cluster_size,
            offsets,
            targets,
        })
    }

    pub fn params(&self) -> &TMParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n as usize
    }

    pub fn k(&self) -> usize {
        self.params.k()
    }

    pub fn cluster_size(&self) -> usize {
        self.cluster_size
    }

    /// `χ(u)`.
    pub fn cluster(&self, u: usize) -> usize {
        u / self.cluster_size
    }

    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn is_near(&self, u: usize, v: usize) -> bool {
        self.params
            .template
            .is_near(self.cluster(u), self.cluster(v))
    }

    /// Each undirected edge once, as `(min, max)`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| (v as usize) > u)
                .map(move |&v| (u as u32, v))
        })
    }

    /// Keep only the edges for which `keep` returns true. `keep` sees every
    /// undirected edge exactly once, in [`SampledGraph::edges`] order.
    pub fn retain_edges(&self, mut keep: impl FnMut(u32, u32) -> bool) -> SampledGraph {
        let kept: Vec<(u32, u32)> = self.edges().filter(|&(u, v)| keep(u, v)).collect();
        SampledGraph::from_edges(self.params.clone(), &kept).expect("subgraph of a valid graph")
    }

    /// Write the edge list with a header line carrying `n k p q seed`.
    pub fn write_edge_list<W: Write>(&self, seed: u64, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "# n={} k={} p={:.16e} q={:.16e} seed={}",
            self.params.n,
            self.k(),
            self.params.p,
            self.params.q,
            seed
        )?;
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }
}

/// Parse the header and edges written by [`SampledGraph::write_edge_list`].
pub fn read_edge_list<R: BufRead>(input: R) -> io::Result<(EdgeListHeader, Vec<(u32, u32)>)> {
    let invalid = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut lines = input.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| invalid("missing header".into()))??;
    let mut header = EdgeListHeader::default();
    for field in header_line.trim_start_matches('#').split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| invalid(format!("bad header field {field}")))?;
        let bad = |_| invalid(format!("bad value for {key}: {value}"));
        match key {
            "n" => {
                header.n = value
                    .parse()
                    .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
            }
            "k" => {
                header.k = value
                    .parse()
                    .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
            }
            "p" => {
                header.p = value
                    .parse()
                    .map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?
            }
            "q" => {
                header.q = value
                    .parse()
                    .map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?
            }
            "seed" => {
                header.seed = value
                    .parse()
                    .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
            }
            _ => return Err(invalid(format!("unknown header key {key}"))),
        }
    }
    let mut edges = Vec::new();
    for line in lines {
        let line = line?;
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(invalid(format!("bad edge line: {line}")));
        };
        let parse = |s: &str| s.parse::<u32>().map_err(|e| invalid(e.to_string()));
        edges.push((parse(a)?, parse(b)?));
    }
    Ok((header, edges))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdgeListHeader {
    pub n: u64,
    pub k: usize,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
}

/// Number of trials skipped before the next success of a Bernoulli(`prob`)
/// sequence.
fn geometric_skip<R: Rng + ?Sized>(rng: &mut R, log_fail: f64) -> u64 {
    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let skip = (u.ln() / log_fail).floor();
    if skip >= u64::MAX as f64 {
        u64::MAX
    } else {
        skip as u64
    }
}

/// Visit the indices in `0..pairs` selected independently with probability `prob`.
fn sample_block<R: Rng + ?Sized>(rng: &mut R, pairs: u64, prob: f64, mut visit: impl FnMut(u64)) {
    if prob <= 0.0 || pairs == 0 {
        return;
    }
    if prob >= 1.0 {
        (0..pairs).for_each(visit);
        return;
    }
    let log_fail = (-prob).ln_1p();
    let mut index: u64 = 0;
    loop {
        let skip = geometric_skip(rng, log_fail);
        index = match index.checked_add(skip) {
            Some(i) if i < pairs => i,
            _ => break,
        };
        visit(index);
        index += 1;
    }
}

/// Sample a graph from the family: each unordered pair is an edge independently
/// with probability `p` (near clusters) or `q` (far clusters). Edges are drawn by
/// geometric skipping per cluster-pair block.
pub fn sample_graph<R: Rng + ?Sized>(params: &TMParams, rng: &mut R) -> Result<SampledGraph> {
    let eta = params.cluster_size()?;
    let k = params.k();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for i in 0..k {
        for j in i..k {
            let prob = if params.template.is_near(i, j) {
                params.p
            } else {
                params.q
            };
            let base_i = i as u64 * eta;
            let base_j = j as u64 * eta;
            if i == j {
                // Lower triangle of the block, row-major: index -> (row, col) with col < row.
                let pairs = eta * eta.saturating_sub(1) / 2;
                let mut row: u64 = 1;
                let mut row_start: u64 = 0;
                sample_block(rng, pairs, prob, |index| {
                    while index >= row_start + row {
                        row_start += row;
                        row += 1;
                    }
                    let col = index - row_start;
                    edges.push(((base_i + col) as u32, (base_i + row) as u32));
                });
            } else {
                sample_block(rng, eta * eta, prob, |index| {
                    edges.push(((base_i + index / eta) as u32, (base_j + index % eta) as u32));
                });
            }
        }
    }
    SampledGraph::from_edges(params.clone(), &edges)
}

/// Count members of `set` near / far from `u` by cluster relation.
pub fn near_far_counts(g: &SampledGraph, u: usize, set: &[usize]) -> (usize, usize) {
    let cu = g.cluster(u);
    set.iter().fold((0, 0), |(near, far), &v| {
        if g.params().template.is_near(cu, g.cluster(v)) {
            (near + 1, far)
        } else {
            (near, far + 1)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn er(n: u64, p: f64) -> TMParams {
        TMParams::new(TemplateGraph::single(), n, p, 0.0).unwrap()
    }

    fn assert_simple(g: &SampledGraph) {
        for u in 0..g.n() {
            let list = g.neighbors(u);
            assert!(list.windows(2).all(|w| w[0] < w[1]));
            for &v in list {
                assert_ne!(v as usize, u);
                assert!(g.neighbors(v as usize).binary_search(&(u as u32)).is_ok());
            }
        }
    }

    #[test]
    fn complete_and_empty() {
        let g = sample_graph(&er(4, 1.0), &mut substream(1, &[])).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert!((0..4).all(|u| g.degree(u) == 3));
        let g = sample_graph(&er(50, 0.0), &mut substream(1, &[])).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn complete_multi_cluster() {
        let params = TMParams::new(TemplateGraph::ring(5, 1).unwrap(), 15, 1.0, 1.0).unwrap();
        let g = sample_graph(&params, &mut substream(2, &[])).unwrap();
        assert_eq!(g.edge_count(), 15 * 14 / 2);
        assert_simple(&g);
        let params = TMParams::new(TemplateGraph::ring(5, 1).unwrap(), 15, 1.0, 0.0).unwrap();
        let g = sample_graph(&params, &mut substream(2, &[])).unwrap();
        // Each vertex sees all of its three near clusters minus itself.
        assert!((0..15).all(|u| g.degree(u) == 8));
        for (u, v) in g.edges() {
            assert!(g.is_near(u as usize, v as usize));
        }
    }

    #[test]
    fn uneven_clusters_rejected() {
        let params = TMParams::new(TemplateGraph::ring(3, 1).unwrap(), 10, 0.1, 0.1).unwrap();
        assert!(matches!(
            sample_graph(&params, &mut substream(0, &[])),
            Err(Error::UnevenClusters { .. })
        ));
    }

    #[test]
    fn mean_degree_er() {
        let n = 10_000;
        let g = sample_graph(&er(n, 10.0 / n as f64), &mut substream(3, &[])).unwrap();
        assert_simple(&g);
        let mean = 2.0 * g.edge_count() as f64 / n as f64;
        // Edge count is Bin(n(n-1)/2, p); its sd in mean-degree units is ~ sqrt(2*10/n).
        let sigma = (2.0 * 10.0 / n as f64).sqrt();
        assert!((mean - 10.0).abs() < 3.0 * sigma, "mean degree {mean}");
    }

    #[test]
    fn near_pair_edges_concentrate() {
        let params =
            TMParams::from_degrees(TemplateGraph::ring(10, 1).unwrap(), 2000, 5.0, 5.0).unwrap();
        let eta = 200u64;
        let near_pairs = (10 * eta * (eta - 1) / 2 + 10 * eta * eta) as f64;
        let far_pairs = (2000u64 * 1999 / 2) as f64 - near_pairs;
        for trial in 0..5 {
            let g = sample_graph(&params, &mut substream(4, &[trial])).unwrap();
            let near = g
                .edges()
                .filter(|&(u, v)| g.is_near(u as usize, v as usize))
                .count() as f64;
            let far = g.edge_count() as f64 - near;
            let sd_near = (near_pairs * params.p * (1.0 - params.p)).sqrt();
            let sd_far = (far_pairs * params.q * (1.0 - params.q)).sqrt();
            assert!((near - near_pairs * params.p).abs() < 4.0 * sd_near);
            assert!((far - far_pairs * params.q).abs() < 4.0 * sd_far);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let params = TMParams::from_degrees(TemplateGraph::cube3(), 800, 6.0, 4.0).unwrap();
        let a = sample_graph(&params, &mut substream(9, &[1])).unwrap();
        let b = sample_graph(&params, &mut substream(9, &[1])).unwrap();
        assert_eq!(a, b);
        let c = sample_graph(&params, &mut substream(9, &[2])).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degree_shorthand() {
        let params =
            TMParams::from_degrees(TemplateGraph::ring(20, 1).unwrap(), 10_000, 5.0, 5.0).unwrap();
        assert!((params.p - 100.0 / 30_000.0).abs() < 1e-18);
        assert!((params.q - 100.0 / 170_000.0).abs() < 1e-18);
        assert!((params.expected_degree() - 10.0).abs() < 1e-12);
        assert!(TMParams::from_degrees(TemplateGraph::single(), 100, 5.0, 1.0).is_err());
    }

    #[test]
    fn threshold_draws() {
        let mut rng = substream(5, &[]);
        let all_two = assign_thresholds(
            &ThresholdDistribution::point_mass(2).unwrap(),
            500,
            &mut rng,
        );
        assert!(all_two.0.iter().all(|&r| r == 2));
        let all_one = assign_thresholds(
            &ThresholdDistribution::point_mass(1).unwrap(),
            500,
            &mut rng,
        );
        assert!(all_one.0.iter().all(|&r| r == 1));
        let mix = assign_thresholds(
            &ThresholdDistribution::two_point(2, 3, 0.5).unwrap(),
            10_000,
            &mut rng,
        );
        let threes = mix.0.iter().filter(|&&r| r == 3).count() as f64;
        assert!((threes - 5000.0).abs() < 3.0 * 50.0, "threes = {threes}");
    }

    #[test]
    fn distribution_validation() {
        assert!(ThresholdDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(ThresholdDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(ThresholdDistribution::new(vec![]).is_err());
        let d = ThresholdDistribution::new(vec![0.1, 0.2, 0.7]).unwrap();
        assert!(d.low_threshold_condition());
        let d = ThresholdDistribution::new(vec![0.9, 0.1]).unwrap();
        assert!(!d.low_threshold_condition());
        assert!(ThresholdDistribution::point_mass(3)
            .unwrap()
            .low_threshold_condition());
        let w = ThresholdDistribution::from_weights(vec![0.0, 1.0, 2.0]).unwrap();
        assert!((w.zeta(3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn seeds() {
        let mut rng = substream(6, &[]);
        assert!(select_seeds(0, 10, &mut rng).unwrap().is_empty());
        assert_eq!(
            select_seeds(10, 10, &mut rng).unwrap(),
            (0..10).collect::<Vec<_>>()
        );
        assert!(select_seeds(11, 10, &mut rng).is_err());
        let a = select_seeds(7, 100, &mut substream(6, &[1])).unwrap();
        let b = select_seeds(7, 100, &mut substream(6, &[1])).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 7);
    }

    #[test]
    fn near_far() {
        let params = TMParams::new(TemplateGraph::ring(10, 1).unwrap(), 20, 0.0, 0.0).unwrap();
        let g = sample_graph(&params, &mut substream(0, &[])).unwrap();
        assert_eq!(near_far_counts(&g, 0, &[]), (0, 0));
        let one_per_cluster: Vec<usize> = (0..10).map(|c| 2 * c).collect();
        assert_eq!(near_far_counts(&g, 1, &one_per_cluster), (3, 7));
        let er_graph = sample_graph(&er(10, 0.5), &mut substream(0, &[])).unwrap();
        assert_eq!(near_far_counts(&er_graph, 0, &[1, 2, 3]).1, 0);
    }

    #[test]
    fn edge_list_round_trip() {
        let params =
            TMParams::from_degrees(TemplateGraph::ring(5, 1).unwrap(), 100, 3.0, 2.0).unwrap();
        let g = sample_graph(&params, &mut substream(11, &[])).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(11, &mut buf).unwrap();
        let (header, edges) = read_edge_list(io::Cursor::new(buf)).unwrap();
        assert_eq!((header.n, header.k, header.seed), (100, 5, 11));
        assert_eq!(header.p, params.p);
        let rebuilt = SampledGraph::from_edges(params, &edges).unwrap();
        assert_eq!(rebuilt, g);
    }

    #[test]
    fn retain_all_is_identity() {
        let g = sample_graph(&er(200, 0.05), &mut substream(12, &[])).unwrap();
        assert_eq!(g.retain_edges(|_, _| true), g);
        assert_eq!(g.retain_edges(|_, _| false).edge_count(), 0);
    }
}
