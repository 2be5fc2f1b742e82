use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Graph, Partition};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationMode {
    /// Pick one random vertex per cluster and delete up to `del_num` of its
    /// intra-cluster edges (all of them if it has fewer).
    PerClusterVertex { del_num: usize },
    /// Delete `total` edges chosen uniformly at random.
    GlobalRandom { total: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PerturbationSpec {
    pub mode: PerturbationMode,
    /// Optional cap `c` on intra-cluster deletions per cluster.
    pub cluster_cap: Option<usize>,
    pub seed: u64,
}

/// Result of [`delete_edges`]: the perturbed graph (same vertex set and
/// degree bound) and the removed edges as `(u, v)` with `u < v`.
#[derive(Clone, Debug)]
pub struct Perturbed {
    pub graph: Graph,
    pub deleted: Vec<(usize, usize)>,
}

impl Perturbed {
    /// Number of deleted edges with both endpoints in each cluster.
    pub fn deleted_per_cluster(&self, partition: &Partition) -> Vec<usize> {
        let mut counts = vec![0; partition.k()];
        for &(u, v) in &self.deleted {
            if partition.label(u) == partition.label(v) {
                counts[partition.label(u)] += 1;
            }
        }
        counts
    }
}

/// Deletes edges according to `spec`. Deletion counts clamp to what exists.
pub fn delete_edges(graph: &Graph, partition: &Partition, spec: &PerturbationSpec) -> Result<Perturbed> {
    if partition.n() != graph.n() {
        return Err(Error::InvalidParameter(format!(
            "partition covers {} vertices, graph has {}",
            partition.n(),
            graph.n()
        )));
    }
    let cap = spec.cluster_cap.unwrap_or(usize::MAX);
    let mut rng = rng::stream(spec.seed, "perturb", &[]);
    let mut deleted: Vec<(usize, usize)> = Vec::new();

    match spec.mode {
        PerturbationMode::PerClusterVertex { del_num } => {
            for members in partition.clusters() {
                if members.is_empty() {
                    continue;
                }
                let x = members[rng.gen_range(0..members.len())];
                let mut intra: Vec<usize> = graph
                    .neighbors(x)
                    .iter()
                    .map(|&y| y as usize)
                    .filter(|&y| partition.label(y) == partition.label(x))
                    .collect();
                intra.shuffle(&mut rng);
                let count = del_num.min(intra.len()).min(cap);
                deleted.extend(intra[..count].iter().map(|&y| (x.min(y), x.max(y))));
            }
        }
        PerturbationMode::GlobalRandom { total } => {
            let mut edges: Vec<(usize, usize)> = graph.edges().collect();
            edges.shuffle(&mut rng);
            let mut per_cluster = vec![0usize; partition.k()];
            for (u, v) in edges {
                if deleted.len() == total {
                    break;
                }
                if partition.label(u) == partition.label(v) {
                    let c = &mut per_cluster[partition.label(u)];
                    if *c >= cap {
                        continue;
                    }
                    *c += 1;
                }
                deleted.push((u, v));
            }
        }
    }

    let removed: HashSet<(usize, usize)> = deleted.iter().copied().collect();
    let kept = graph.edges().filter(|e| !removed.contains(e));
    let perturbed = Graph::from_edges(graph.n(), kept, Some(graph.d()))?;
    deleted.sort_unstable();
    Ok(Perturbed {
        graph: perturbed,
        deleted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> (Graph, Partition) {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)], None).unwrap();
        (g, Partition::from_sizes(&[3, 3]).unwrap())
    }

    fn spec(mode: PerturbationMode) -> PerturbationSpec {
        PerturbationSpec {
            mode,
            cluster_cap: None,
            seed: 3,
        }
    }

    #[test]
    fn zero_deletions_is_identity() {
        let (g, p) = two_triangles();
        let out = delete_edges(&g, &p, &spec(PerturbationMode::PerClusterVertex { del_num: 0 })).unwrap();
        assert_eq!(out.graph, g);
        assert!(out.deleted.is_empty());
    }

    #[test]
    fn global_delete_everything() {
        let (g, p) = two_triangles();
        let out = delete_edges(&g, &p, &spec(PerturbationMode::GlobalRandom { total: 6 })).unwrap();
        assert_eq!(out.graph.edge_count(), 0);
        assert_eq!(out.graph.n(), 6);
        assert_eq!(out.graph.d(), 2);
    }

    #[test]
    fn one_edge_per_triangle() {
        let (g, p) = two_triangles();
        let out = delete_edges(&g, &p, &spec(PerturbationMode::PerClusterVertex { del_num: 1 })).unwrap();
        assert_eq!(out.graph.edge_count(), 4);
        assert_eq!(out.deleted_per_cluster(&p), vec![1, 1]);
        out.graph.check_invariants().unwrap();
    }

    #[test]
    fn deletion_clamps_to_degree_and_cap() {
        let (g, p) = two_triangles();
        let out = delete_edges(&g, &p, &spec(PerturbationMode::PerClusterVertex { del_num: 10 })).unwrap();
        assert_eq!(out.deleted_per_cluster(&p), vec![2, 2]);
        let capped = PerturbationSpec {
            cluster_cap: Some(1),
            ..spec(PerturbationMode::GlobalRandom { total: 6 })
        };
        let out = delete_edges(&g, &p, &capped).unwrap();
        assert_eq!(out.deleted_per_cluster(&p), vec![1, 1]);
    }
}
