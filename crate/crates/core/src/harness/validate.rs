//! Quick self-checks run by `tmperc validate`: the engine against a naive
//! fixpoint, and the residual formula against brute-force enumeration.

use rand::Rng;

use super::emit::{Kind, Table};
use crate::engine::{run_standard, EngineConfig};
use crate::intervention::residual_from_counts;
use crate::rng::substream;
use crate::template::TemplateGraph;
use crate::tmgraph::{sample_graph, select_seeds, SampledGraph, TMParams, ThresholdAssignment};
use crate::Result;

/// Smallest infected set containing `seeds` that is closed under the threshold rule.
pub fn fixpoint_oracle(g: &SampledGraph, thresholds: &[u32], seeds: &[usize]) -> Vec<bool> {
    let mut infected = vec![false; g.n()];
    for &s in seeds {
        infected[s] = true;
    }
    loop {
        let mut changed = false;
        for u in 0..g.n() {
            if infected[u] {
                continue;
            }
            let count = g
                .neighbors(u)
                .iter()
                .filter(|&&v| infected[v as usize])
                .count() as u32;
            if count >= thresholds[u] {
                infected[u] = true;
                changed = true;
            }
        }
        if !changed {
            return infected;
        }
    }
}

/// Exact `Pr[b near, c far infected neighbours now | fewer than r before]` by
/// summing over every subset of potential edges.
pub fn residual_by_enumeration(
    r: u32,
    p: f64,
    q: f64,
    prev: (u64, u64),
    delta: (u64, u64),
) -> Vec<Vec<f64>> {
    // Potential neighbours: (is_near, infected_before).
    let mut slots = Vec::new();
    slots.extend(std::iter::repeat_n((true, true), prev.0 as usize));
    slots.extend(std::iter::repeat_n((false, true), prev.1 as usize));
    slots.extend(std::iter::repeat_n((true, false), delta.0 as usize));
    slots.extend(std::iter::repeat_n((false, false), delta.1 as usize));
    let near_total = (prev.0 + delta.0) as usize;
    let far_total = (prev.1 + delta.1) as usize;
    let mut joint = vec![vec![0.0; far_total + 1]; near_total + 1];
    let mut norm = 0.0;
    for mask in 0u64..(1 << slots.len()) {
        let mut weight = 1.0;
        let (mut before, mut b, mut c) = (0, 0, 0);
        for (i, &(near, old)) in slots.iter().enumerate() {
            let prob = if near { p } else { q };
            if mask >> i & 1 == 1 {
                weight *= prob;
                if old {
                    before += 1;
                }
                if near {
                    b += 1;
                } else {
                    c += 1;
                }
            } else {
                weight *= 1.0 - prob;
            }
        }
        if before < r {
            joint[b][c] += weight;
            norm += weight;
        }
    }
    for row in &mut joint {
        for v in row {
            *v /= norm;
        }
    }
    joint
}

fn tv(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let rows = a.len().max(b.len());
    let mut sum = 0.0;
    for i in 0..rows {
        let cols = a
            .get(i)
            .map_or(0, Vec::len)
            .max(b.get(i).map_or(0, Vec::len));
        for j in 0..cols {
            let x = a.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0);
            let y = b.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0);
            sum += (x - y).abs();
        }
    }
    sum / 2.0
}

fn random_template<R: Rng>(rng: &mut R) -> TemplateGraph {
    match rng.random_range(0..4) {
        0 => TemplateGraph::single(),
        1 => TemplateGraph::ring(3, 1).expect("valid ring"),
        2 => TemplateGraph::planted(2).expect("valid planted"),
        _ => TemplateGraph::planted(3).expect("valid planted"),
    }
}

/// Compare the engine with [`fixpoint_oracle`] on random small instances;
/// returns the number of mismatches.
pub fn check_fixpoint(instances: usize, seed: u64) -> Result<usize> {
    let mut mismatches = 0;
    for i in 0..instances {
        let mut rng = substream(seed, &[i as u64]);
        let template = random_template(&mut rng);
        let k = template.k() as u64;
        let n = k * rng.random_range(1..=12 / k);
        let p = rng.random_range(0.0..1.0);
        let q = rng.random_range(0.0..1.0);
        let params = TMParams::new(template, n, p, q)?;
        let g = sample_graph(&params, &mut rng)?;
        let thresholds: Vec<u32> = (0..n).map(|_| rng.random_range(1..=4)).collect();
        let seeds = select_seeds(rng.random_range(0..=n), n, &mut rng)?;
        let trace = run_standard(
            &g,
            &ThresholdAssignment(thresholds.clone()),
            &seeds,
            &EngineConfig::default().to_fixpoint(),
        )?;
        let expected = fixpoint_oracle(&g, &thresholds, &seeds)
            .iter()
            .filter(|&&x| x)
            .count() as u64;
        if trace.final_total() != expected {
            mismatches += 1;
        }
    }
    Ok(mismatches)
}

/// Largest total-variation gap between the residual formula and enumeration.
pub fn check_residual(instances: usize, seed: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = substream(seed, &[i as u64]);
        let r = rng.random_range(1..=4);
        let p = rng.random_range(0.01..0.9);
        let q = rng.random_range(0.0..0.9);
        let prev = (rng.random_range(0..=4), rng.random_range(0..=3));
        let delta = (rng.random_range(0..=4), rng.random_range(0..=3));
        let law = residual_from_counts(r, p, q, prev, delta)?;
        worst = worst.max(tv(
            &law.joint,
            &residual_by_enumeration(r, p, q, prev, delta),
        ));
    }
    Ok(worst)
}

pub fn report(instances: usize, seed: u64) -> Result<Table> {
    let mut table = Table::new(
        "validate",
        &[
            ("check", Kind::Text),
            ("instances", Kind::Int),
            ("statistic", Kind::Float),
            ("pass", Kind::Bool),
        ],
    );
    let mismatches = check_fixpoint(instances, seed)?;
    table.push(vec![
        "engine_vs_fixpoint_mismatches".into(),
        instances.into(),
        (mismatches as f64).into(),
        (mismatches == 0).into(),
    ]);
    let worst = check_residual(instances, seed)?;
    table.push(vec![
        "residual_max_tv".into(),
        instances.into(),
        worst.into(),
        (worst < 1e-10).into(),
    ]);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_checks_pass() {
        assert_eq!(check_fixpoint(200, 3).unwrap(), 0);
        assert!(check_residual(100, 3).unwrap() < 1e-10);
    }

    #[test]
    fn enumeration_without_history_is_binomial() {
        let joint = residual_by_enumeration(2, 0.3, 0.0, (0, 0), (3, 0));
        let expected = [0.343, 0.441, 0.189, 0.027];
        for (b, e) in expected.iter().enumerate() {
            assert!((joint[b][0] - e).abs() < 1e-12);
        }
    }
}
