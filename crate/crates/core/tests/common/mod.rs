//! Independent oracles shared by the integration tests. None of these call
//! into the library's numerics.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use tmperc::template::TemplateGraph;
use tmperc::tmgraph::SampledGraph;

fn choose(n: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn pow(x: &BigRational, e: u64) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

/// Exact `Pr[Bin(trials, p) = i]` for `i = 0..=trials`.
pub fn binomial_exact(trials: u64, p: f64) -> Vec<BigRational> {
    let p = rational(p);
    let q = BigRational::one() - &p;
    (0..=trials)
        .map(|i| BigRational::from_integer(choose(trials, i)) * pow(&p, i) * pow(&q, trials - i))
        .collect()
}

/// Exact law of `Bin(near, p) + Bin(far, q)`.
pub fn count_law_exact(near: u64, p: f64, far: u64, q: f64) -> Vec<BigRational> {
    let a = binomial_exact(near, p);
    let b = binomial_exact(far, q);
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `Pr[Bin(near, p) + Bin(far, q) >= r]`, computed exactly then rounded.
pub fn tail_exact(near: u64, p: f64, far: u64, q: f64, r: u32) -> f64 {
    let law = count_law_exact(near, p, far, q);
    let below: BigRational = law
        .iter()
        .take(r as usize)
        .fold(BigRational::zero(), |acc, x| acc + x);
    (BigRational::one() - below)
        .to_f64()
        .expect("representable")
}

/// Final infected set by asynchronous single-vertex updates in random order.
/// The monotone rule has a unique least fixpoint containing the seeds, so the
/// order must not matter.
pub fn fixpoint_async<R: Rng>(
    g: &SampledGraph,
    thresholds: &[u32],
    seeds: &[usize],
    rng: &mut R,
) -> Vec<bool> {
    let n = g.n();
    let mut infected = vec![false; n];
    for &s in seeds {
        infected[s] = true;
    }
    let mut order: Vec<usize> = (0..n).collect();
    loop {
        order.shuffle(rng);
        let mut changed = false;
        for &u in &order {
            if !infected[u]
                && g.neighbors(u)
                    .iter()
                    .filter(|&&v| infected[v as usize])
                    .count() as u32
                    >= thresholds[u]
            {
                infected[u] = true;
                changed = true;
            }
        }
        if !changed {
            return infected;
        }
    }
}

/// Exact conditional law of `(b, c)`, the near and far infected neighbours
/// of a healthy vertex in `cluster` with threshold `r`, given that it had
/// fewer than `r` infected neighbours one generation earlier. `prev[i]` and
/// `now[i]` are infected counts of cluster `i`. Enumerates every subset of
/// edges to the infected vertices.
pub fn residual_enumerated(
    template: &TemplateGraph,
    cluster: usize,
    p: f64,
    q: f64,
    r: u32,
    prev: &[u64],
    now: &[u64],
) -> Vec<Vec<f64>> {
    // (edge probability, near?, infected before?)
    let mut vertices = Vec::new();
    for (i, (&before, &after)) in prev.iter().zip(now).enumerate() {
        let near = template.neighbors(cluster).contains(&i);
        let prob = if near { p } else { q };
        vertices.extend(std::iter::repeat_n((prob, near, true), before as usize));
        vertices.extend(std::iter::repeat_n(
            (prob, near, false),
            (after - before) as usize,
        ));
    }
    assert!(vertices.len() <= 20, "enumeration too large");
    let near_total = vertices.iter().filter(|v| v.1).count();
    let far_total = vertices.len() - near_total;
    let mut joint = vec![vec![0.0; far_total + 1]; near_total + 1];
    let mut norm = 0.0;
    for mask in 0u32..(1 << vertices.len()) {
        let mut weight = 1.0;
        let (mut old, mut b, mut c) = (0u32, 0, 0);
        for (i, &(prob, near, before)) in vertices.iter().enumerate() {
            if mask & (1 << i) != 0 {
                weight *= prob;
                old += before as u32;
                if near {
                    b += 1
                } else {
                    c += 1
                }
            } else {
                weight *= 1.0 - prob;
            }
        }
        if old < r {
            joint[b][c] += weight;
            norm += weight;
        }
    }
    for row in &mut joint {
        row.iter_mut().for_each(|x| *x /= norm);
    }
    joint
}

/// Total variation between two joint tables of possibly different shapes.
pub fn tv(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let rows = a.len().max(b.len());
    let mut sum = 0.0;
    for i in 0..rows {
        let width = a
            .get(i)
            .map_or(0, Vec::len)
            .max(b.get(i).map_or(0, Vec::len));
        for j in 0..width {
            let x = a.get(i).and_then(|row| row.get(j)).copied().unwrap_or(0.0);
            let y = b.get(i).and_then(|row| row.get(j)).copied().unwrap_or(0.0);
            sum += (x - y).abs();
        }
    }
    sum / 2.0
}

/// Every template family at small sizes.
pub fn small_templates() -> Vec<TemplateGraph> {
    vec![
        TemplateGraph::single(),
        TemplateGraph::ring(3, 1).unwrap(),
        TemplateGraph::ring(4, 1).unwrap(),
        TemplateGraph::ring(5, 2).unwrap(),
        TemplateGraph::ring(6, 1).unwrap(),
        TemplateGraph::planted(2).unwrap(),
        TemplateGraph::planted(3).unwrap(),
        TemplateGraph::planted(4).unwrap(),
        TemplateGraph::cube3(),
        TemplateGraph::from_neighbor_lists(vec![vec![0, 1], vec![0, 1], vec![2, 3], vec![2, 3]])
            .unwrap(),
    ]
}
