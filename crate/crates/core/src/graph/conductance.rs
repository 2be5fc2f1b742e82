use super::Graph;
use crate::error::{Error, Result};

/// Largest set for which inner conductance is computed by enumeration.
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 20;

fn distinct_members(graph: &Graph, set: &[usize]) -> Result<Vec<usize>> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut members = set.to_vec();
    members.sort_unstable();
    members.dedup();
    if let Some(&x) = members.iter().find(|&&x| x >= graph.n()) {
        return Err(Error::InvalidParameter(format!("vertex {x} not in graph")));
    }
    Ok(members)
}

/// `|E(C, V \ C)| / (d |C|)`.
pub fn outer_conductance(graph: &Graph, set: &[usize]) -> Result<f64> {
    let members = distinct_members(graph, set)?;
    if graph.d() == 0 {
        return Ok(0.0);
    }
    let mut inside = vec![false; graph.n()];
    for &x in &members {
        inside[x] = true;
    }
    let cut: usize = members
        .iter()
        .map(|&x| graph.neighbors(x).iter().filter(|&&y| !inside[y as usize]).count())
        .sum();
    Ok(cut as f64 / (graph.d() * members.len()) as f64)
}

/// Minimum of `|E(S, C \ S)| / (d |S|)` over all `S ⊆ C` with
/// `0 < |S| <= |C| / 2`, by enumeration; 1 for a singleton.
pub fn inner_conductance_exact(graph: &Graph, set: &[usize], cap: usize) -> Result<f64> {
    let members = distinct_members(graph, set)?;
    let m = members.len();
    if m > cap || m > 30 {
        return Err(Error::SubsetTooLarge { size: m, cap });
    }
    if m == 1 {
        return Ok(1.0);
    }
    if graph.d() == 0 {
        return Ok(0.0);
    }
    let local: std::collections::HashMap<usize, usize> =
        members.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let adj: Vec<u32> = members
        .iter()
        .map(|&x| {
            graph
                .neighbors(x)
                .iter()
                .filter_map(|&y| local.get(&(y as usize)))
                .fold(0u32, |mask, &j| mask | (1 << j))
        })
        .collect();

    let d = graph.d() as f64;
    let half = m / 2;
    let mut best = f64::INFINITY;
    for subset in 1u32..(1u32 << m) {
        let size = subset.count_ones() as usize;
        if size > half {
            continue;
        }
        let mut cut = 0u32;
        let mut rest = subset;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            cut += (adj[v] & !subset).count_ones();
            rest &= rest - 1;
        }
        best = best.min(cut as f64 / (d * size as f64));
    }
    Ok(best)
}

/// Conductance of the whole graph, `min_{0 < |C| <= n/2} φ_out(C, V)`.
pub fn graph_conductance_exact(graph: &Graph, cap: usize) -> Result<f64> {
    let all: Vec<usize> = (0..graph.n()).collect();
    inner_conductance_exact(graph, &all, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::complete;

    fn two_triangles() -> Graph {
        Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)], None).unwrap()
    }

    #[test]
    fn outer_conductance_cases() {
        let g = two_triangles();
        let all: Vec<usize> = (0..6).collect();
        assert_eq!(outer_conductance(&g, &all).unwrap(), 0.0);
        assert_eq!(outer_conductance(&g, &[0, 1, 2]).unwrap(), 0.0);
        let k4 = complete(4);
        assert_eq!(outer_conductance(&k4, &[0]).unwrap(), 1.0);
        assert!(matches!(outer_conductance(&k4, &[]), Err(Error::EmptySet)));
    }

    #[test]
    fn inner_conductance_cases() {
        let k4 = complete(4);
        assert_eq!(inner_conductance_exact(&k4, &[2], 20).unwrap(), 1.0);
        let v = inner_conductance_exact(&k4, &[0, 1, 2, 3], 20).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        let path = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)], None).unwrap();
        assert_eq!(path.d(), 2);
        let v = inner_conductance_exact(&path, &[0, 1, 2, 3], 20).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn inner_conductance_respects_cap() {
        let g = complete(22);
        let all: Vec<usize> = (0..22).collect();
        assert!(matches!(
            inner_conductance_exact(&g, &all, DEFAULT_BRUTE_FORCE_CAP),
            Err(Error::SubsetTooLarge { size: 22, cap: 20 })
        ));
    }

    #[test]
    fn disconnected_graph_has_zero_conductance() {
        assert_eq!(graph_conductance_exact(&two_triangles(), 20).unwrap(), 0.0);
    }
}
