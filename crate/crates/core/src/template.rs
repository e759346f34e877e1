//! Template graphs: the cluster-level topology that decides which vertex pairs
//! are "near" (edge probability `p`) and which are "far" (probability `q`).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Error, Result};

/// A regular, symmetric neighbourhood structure on `k` clusters where every
/// cluster is its own neighbour.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateGraph {
    neighbors: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TemplateViolation {
    #[error("template has no clusters")]
    Empty,
    #[error("cluster {cluster} lists neighbour {neighbor} outside 0..{k}")]
    OutOfRange {
        cluster: usize,
        neighbor: usize,
        k: usize,
    },
    #[error("asymmetric: {j} is a neighbour of {i} but not the reverse")]
    Symmetry { i: usize, j: usize },
    #[error("irregular: cluster {cluster} has {found} neighbours, cluster 0 has {expected}")]
    Regularity {
        cluster: usize,
        expected: usize,
        found: usize,
    },
    #[error("cluster {0} is not listed as its own neighbour")]
    SelfMembership(usize),
}

impl TemplateGraph {
    /// Wrap neighbour lists without checking any invariant. Lists are sorted
    /// and deduplicated.
    pub fn new_unchecked(mut neighbors: Vec<Vec<usize>>) -> Self {
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        TemplateGraph { neighbors }
    }

    /// Build from explicit neighbour lists. Invalid input is rejected, never
    /// repaired.
    pub fn from_neighbor_lists(neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let template = Self::new_unchecked(neighbors);
        template.validate()?;
        Ok(template)
    }

    /// One cluster; the Erdős–Rényi case.
    pub fn single() -> Self {
        TemplateGraph {
            neighbors: vec![vec![0]],
        }
    }

    /// Ring of `k` clusters, each near the `reach` closest clusters on either side.
    pub fn ring(k: usize, reach: usize) -> Result<Self> {
        if k < 2 * reach + 1 {
            return Err(Error::param(
                "k",
                format!(
                    "ring with reach {reach} needs at least {} clusters, got {k}",
                    2 * reach + 1
                ),
            ));
        }
        let neighbors = (0..k)
            .map(|i| {
                (0..=2 * reach)
                    .map(|offset| (i + k + offset - reach) % k)
                    .collect()
            })
            .collect();
        Ok(Self::new_unchecked(neighbors))
    }

    /// Eight clusters on the corners of a 3-cube; neighbours differ in one bit.
    pub fn cube3() -> Self {
        let neighbors = (0..8usize)
            .map(|i| {
                let mut list = vec![i];
                list.extend((0..3).map(|bit| i ^ (1 << bit)));
                list
            })
            .collect();
        Self::new_unchecked(neighbors)
    }

    /// Planted multisection: every cluster is near only itself.
    pub fn planted(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param(
                "k",
                "planted template needs at least one cluster",
            ));
        }
        Ok(Self::new_unchecked((0..k).map(|i| vec![i]).collect()))
    }

    pub fn k(&self) -> usize {
        self.neighbors.len()
    }

    /// Size of every neighbourhood (own cluster included).
    pub fn k_p(&self) -> usize {
        self.neighbors.first().map_or(0, Vec::len)
    }

    pub fn k_q(&self) -> usize {
        self.k() - self.k_p()
    }

    pub fn neighbors(&self, cluster: usize) -> &[usize] {
        &self.neighbors[cluster]
    }

    pub fn is_near(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Check symmetry, regularity and self-membership, in that order.
    pub fn validate(&self) -> Result<(), TemplateViolation> {
        let k = self.k();
        if k == 0 {
            return Err(TemplateViolation::Empty);
        }
        for (cluster, list) in self.neighbors.iter().enumerate() {
            if let Some(&neighbor) = list.iter().find(|&&j| j >= k) {
                return Err(TemplateViolation::OutOfRange {
                    cluster,
                    neighbor,
                    k,
                });
            }
        }
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list {
                if !self.is_near(j, i) {
                    return Err(TemplateViolation::Symmetry { i, j });
                }
            }
        }
        let expected = self.neighbors[0].len();
        for (cluster, list) in self.neighbors.iter().enumerate() {
            if list.len() != expected {
                return Err(TemplateViolation::Regularity {
                    cluster,
                    expected,
                    found: list.len(),
                });
            }
        }
        for i in 0..k {
            if !self.is_near(i, i) {
                return Err(TemplateViolation::SelfMembership(i));
            }
        }
        Ok(())
    }

    /// Apply a cluster relabelling; `map[i]` is the new label of cluster `i`.
    pub fn relabel(&self, map: &[usize]) -> Self {
        let mut neighbors = vec![Vec::new(); self.k()];
        for (i, list) in self.neighbors.iter().enumerate() {
            neighbors[map[i]] = list.iter().map(|&j| map[j]).collect();
        }
        Self::new_unchecked(neighbors)
    }
}

/// Template description as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TemplateSpec {
    Single,
    Ring { k: usize, reach: usize },
    Cube3,
    Planted { k: usize },
    Explicit { neighbors: Vec<Vec<usize>> },
}

impl TemplateSpec {
    pub fn build(&self) -> Result<TemplateGraph> {
        match self {
            TemplateSpec::Single => Ok(TemplateGraph::single()),
            TemplateSpec::Ring { k, reach } => TemplateGraph::ring(*k, *reach),
            TemplateSpec::Cube3 => Ok(TemplateGraph::cube3()),
            TemplateSpec::Planted { k } => TemplateGraph::planted(*k),
            TemplateSpec::Explicit { neighbors } => {
                TemplateGraph::from_neighbor_lists(neighbors.clone())
            }
        }
    }
}

impl fmt::Display for TemplateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateSpec::Single => write!(f, "single"),
            TemplateSpec::Ring { k, reach } => write!(f, "ring(k={k},reach={reach})"),
            TemplateSpec::Cube3 => write!(f, "cube3"),
            TemplateSpec::Planted { k } => write!(f, "planted(k={k})"),
            TemplateSpec::Explicit { neighbors } => write!(f, "explicit(k={})", neighbors.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_cluster() {
        let t = TemplateGraph::single();
        assert_eq!((t.k(), t.k_p(), t.k_q()), (1, 1, 0));
        assert!(t.validate().is_ok());
        assert!(t.is_near(0, 0));
    }

    #[test]
    fn ring_sizes() {
        let t = TemplateGraph::ring(10, 1).unwrap();
        assert_eq!(t.k_p(), 3);
        let t = TemplateGraph::ring(20, 1).unwrap();
        assert_eq!((t.k_p(), t.k_q()), (3, 17));
        let t = TemplateGraph::ring(3, 1).unwrap();
        assert_eq!(t.neighbors(0), &[0, 1, 2]);
        assert!(TemplateGraph::ring(2, 1).is_err());
        assert!(TemplateGraph::ring(4, 2).is_err());
    }

    #[test]
    fn cube() {
        let t = TemplateGraph::cube3();
        assert_eq!((t.k(), t.k_p()), (8, 4));
        assert_eq!(t.neighbors(0), &[0, 1, 2, 4]);
        assert!(t.validate().is_ok());
    }

    #[test]
    fn planted() {
        let t = TemplateGraph::planted(5).unwrap();
        assert_eq!((t.k_p(), t.k_q()), (1, 4));
        assert!(t.validate().is_ok());
        assert_eq!(TemplateGraph::planted(1).unwrap(), TemplateGraph::single());
    }

    #[test]
    fn validate_reports_first_violation() {
        let asym = TemplateGraph::new_unchecked(vec![vec![0, 1], vec![1]]);
        assert_eq!(
            asym.validate(),
            Err(TemplateViolation::Symmetry { i: 0, j: 1 })
        );
        let irregular = TemplateGraph::new_unchecked(vec![vec![0, 1], vec![0, 1, 2], vec![1, 2]]);
        assert!(matches!(
            irregular.validate(),
            Err(TemplateViolation::Regularity {
                cluster: 1,
                expected: 2,
                found: 3
            })
        ));
        let no_self = TemplateGraph::new_unchecked(vec![vec![1], vec![0]]);
        assert_eq!(
            no_self.validate(),
            Err(TemplateViolation::SelfMembership(0))
        );
        let out = TemplateGraph::new_unchecked(vec![vec![0, 3]]);
        assert!(matches!(
            out.validate(),
            Err(TemplateViolation::OutOfRange { .. })
        ));
        assert_eq!(
            TemplateGraph::new_unchecked(vec![]).validate(),
            Err(TemplateViolation::Empty)
        );
    }

    #[test]
    fn explicit_lists_are_validated_not_repaired() {
        assert!(TemplateGraph::from_neighbor_lists(vec![vec![0, 1], vec![1]]).is_err());
        let ok = TemplateGraph::from_neighbor_lists(vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(ok.k_p(), 2);
    }

    #[test]
    fn spec_builds() {
        let spec: TemplateSpec =
            serde_json::from_str(r#"{"kind":"ring","k":10,"reach":1}"#).unwrap();
        assert_eq!(spec.build().unwrap().k_p(), 3);
        let bad: std::result::Result<TemplateSpec, _> =
            serde_json::from_str(r#"{"kind":"ring","k":10,"reach":1,"extra":2}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn cube_bit_permutations_preserve_adjacency() {
        let t = TemplateGraph::cube3();
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for perm in perms {
            let map: Vec<usize> = (0..8)
                .map(|i| (0..3).fold(0, |acc, b| acc | (((i >> b) & 1) << perm[b])))
                .collect();
            assert_eq!(t.relabel(&map), t);
        }
    }

    proptest! {
        #[test]
        fn ring_is_valid_and_rotation_invariant(reach in 0usize..5, extra in 0usize..12, shift in 0usize..30) {
            let k = 2 * reach + 1 + extra;
            let t = TemplateGraph::ring(k, reach).unwrap();
            prop_assert!(t.validate().is_ok());
            prop_assert_eq!(t.k_p(), 2 * reach + 1);
            let map: Vec<usize> = (0..k).map(|i| (i + shift) % k).collect();
            prop_assert_eq!(t.relabel(&map), t);
        }

        #[test]
        fn planted_is_valid(k in 1usize..40) {
            prop_assert!(TemplateGraph::planted(k).unwrap().validate().is_ok());
        }
    }
}
