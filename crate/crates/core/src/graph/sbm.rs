use rand::Rng;

use super::{Graph, Partition};
use crate::error::{Error, Result};
use crate::rng;

/// Parameters of a stochastic block model draw.
#[derive(Clone, Debug, PartialEq)]
pub struct SbmSpec {
    pub n: usize,
    pub k: usize,
    /// Intra-cluster edge probability.
    pub p: f64,
    /// Inter-cluster edge probability.
    pub q: f64,
    /// Cluster sizes; `None` means [`equal_sizes`].
    pub sizes: Option<Vec<usize>>,
    pub seed: u64,
}

impl SbmSpec {
    pub fn new(n: usize, k: usize, p: f64, q: f64, seed: u64) -> Self {
        Self {
            n,
            k,
            p,
            q,
            sizes: None,
            seed,
        }
    }
}

/// `n / k` per cluster, with the remainder spread over the first clusters.
pub fn equal_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
}

/// Samples an SBM graph. Clusters occupy contiguous id ranges; the degree
/// bound of the result is its maximum observed degree.
pub fn generate_sbm(spec: &SbmSpec) -> Result<(Graph, Partition)> {
    let SbmSpec { n, k, p, q, .. } = *spec;
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("SBM needs n >= 1 and k >= 1".into()));
    }
    if !(0.0..=1.0).contains(&q) || !(0.0..=1.0).contains(&p) || q > p {
        return Err(Error::InvalidParameter(format!("SBM needs 0 <= q <= p <= 1, got p={p}, q={q}")));
    }
    let sizes = match &spec.sizes {
        Some(s) => {
            if s.len() != k || s.iter().sum::<usize>() != n {
                return Err(Error::InvalidParameter(format!(
                    "cluster sizes {s:?} must have {k} entries summing to {n}"
                )));
            }
            s.clone()
        }
        None => equal_sizes(n, k),
    };
    let truth = Partition::from_sizes(&sizes)?;
    let labels = truth.labels();

    let mut rng = rng::stream(spec.seed, "sbm", &[]);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let prob = if labels[u] == labels[v] { p } else { q };
            // gen::<f64>() is in [0, 1), so p = 1 always links and p = 0 never does.
            if rng.gen::<f64>() < prob {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::from_edges(n, edges, None)?;
    Ok((graph, truth))
}
