//! Lazy random walks and the empirical distributions they induce.
//!
//! A walk of length `t` from `x` applies `t` lazy steps of the
//! [`RegularView`]. Running `R` walks and recording where they end gives the
//! empirical distribution `m̂_x`, stored sparsely since its support has at
//! most `R` vertices.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{AccessCounter, RegularView, Tally};
use crate::rng;
use crate::stats::lower_median;

/// Endpoint frequencies of `walks` lazy walks of length `length` from `origin`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    origin: usize,
    walks: usize,
    length: usize,
    // sorted by vertex; fractions are multiples of 1/walks
    support: Vec<(u32, f64)>,
}

impl EmpiricalDistribution {
    /// Rebuilds a distribution from stored parts, checking the invariants.
    pub fn from_parts(origin: usize, walks: usize, length: usize, support: Vec<(u32, f64)>) -> Result<Self> {
        if walks == 0 {
            return Err(Error::Format("distribution with zero walks".into()));
        }
        if support.len() > walks {
            return Err(Error::Format("support larger than walk count".into()));
        }
        if support.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Format("distribution support not sorted".into()));
        }
        let total: f64 = support.iter().map(|&(_, f)| f).sum();
        if support.iter().any(|&(_, f)| !(f > 0.0 && f <= 1.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Format("distribution fractions invalid".into()));
        }
        Ok(Self {
            origin,
            walks,
            length,
            support,
        })
    }

    fn from_endpoints(origin: usize, length: usize, mut endpoints: Vec<u32>) -> Self {
        let walks = endpoints.len();
        endpoints.sort_unstable();
        let mut support: Vec<(u32, f64)> = Vec::new();
        let mut i = 0;
        while i < endpoints.len() {
            let v = endpoints[i];
            let run = endpoints[i..].iter().take_while(|&&e| e == v).count();
            support.push((v, run as f64 / walks as f64));
            i += run;
        }
        Self {
            origin,
            walks,
            length,
            support,
        }
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn walks(&self) -> usize {
        self.walks
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// Sorted `(vertex, fraction)` pairs with nonzero fraction.
    pub fn support(&self) -> &[(u32, f64)] {
        &self.support
    }

    pub fn get(&self, y: usize) -> f64 {
        self.support
            .binary_search_by_key(&(y as u32), |&(v, _)| v)
            .map_or(0.0, |i| self.support[i].1)
    }

    pub fn total(&self) -> f64 {
        self.support.iter().map(|&(_, f)| f).sum()
    }

    /// Inner product of two sparse distributions.
    pub fn dot(&self, other: &Self) -> f64 {
        let (a, b) = (&self.support, &other.support);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Euclidean distance between two sparse distributions.
    pub fn l2_distance(&self, other: &Self) -> f64 {
        let (a, b) = (&self.support, &other.support);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() || j < b.len() {
            let diff = match (a.get(i), b.get(j)) {
                (Some(&(va, fa)), Some(&(vb, fb))) if va == vb => {
                    i += 1;
                    j += 1;
                    fa - fb
                }
                (Some(&(va, fa)), Some(&(vb, _))) if va < vb => {
                    i += 1;
                    fa
                }
                (Some(&(va, fa)), None) => {
                    let _ = va;
                    i += 1;
                    fa
                }
                (_, Some(&(_, fb))) => {
                    j += 1;
                    fb
                }
                (None, None) => unreachable!(),
            };
            acc += diff * diff;
        }
        acc.sqrt()
    }
}

pub(crate) fn walk_endpoints<R: Rng>(
    view: &RegularView<'_>,
    tally: &mut Tally<'_>,
    r: usize,
    t: usize,
    x: usize,
    rng: &mut R,
) -> Vec<u32> {
    (0..r)
        .map(|_| {
            tally.start_walk();
            let mut at = x;
            for _ in 0..t {
                at = view.step(at, rng.gen::<f64>(), tally);
            }
            at as u32
        })
        .collect()
}

/// Runs `r` independent lazy walks of length `t` from `x` and returns the
/// endpoint distribution. Every neighbor read is charged to `counter`.
pub fn run_random_walks<R: Rng>(
    view: &RegularView<'_>,
    counter: &AccessCounter,
    r: usize,
    t: usize,
    x: usize,
    rng: &mut R,
) -> EmpiricalDistribution {
    assert!(r >= 1, "at least one walk is required");
    let mut tally = counter.tally();
    let endpoints = walk_endpoints(view, &mut tally, r, t, x, rng);
    EmpiricalDistribution::from_endpoints(x, t, endpoints)
}

/// Columns `m̂_x` for a multiset of sample vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionMatrix {
    sample_ids: Vec<usize>,
    columns: Vec<EmpiricalDistribution>,
}

impl DistributionMatrix {
    pub fn from_columns(columns: Vec<EmpiricalDistribution>) -> Self {
        Self {
            sample_ids: columns.iter().map(EmpiricalDistribution::origin).collect(),
            columns,
        }
    }

    pub fn sample_ids(&self) -> &[usize] {
        &self.sample_ids
    }

    pub fn columns(&self) -> &[EmpiricalDistribution] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Row-major index for computing `Q̂ᵀ m` in time proportional to the
    /// support of `m`.
    pub fn row_index(&self) -> RowIndex {
        let mut rows: HashMap<u32, Vec<(u32, f64)>> = HashMap::new();
        for (j, col) in self.columns.iter().enumerate() {
            for &(v, f) in col.support() {
                rows.entry(v).or_default().push((j as u32, f));
            }
        }
        RowIndex {
            columns: self.columns.len(),
            rows,
        }
    }
}

/// Sparse row view of a [`DistributionMatrix`].
#[derive(Clone, Debug)]
pub struct RowIndex {
    columns: usize,
    rows: HashMap<u32, Vec<(u32, f64)>>,
}

impl RowIndex {
    /// `Q̂ᵀ m`: entry `j` is the inner product of column `j` with `m`.
    pub fn transpose_times(&self, m: &EmpiricalDistribution) -> Vec<f64> {
        let mut out = vec![0.0; self.columns];
        for &(v, f) in m.support() {
            if let Some(row) = self.rows.get(&v) {
                for &(j, q) in row {
                    out[j as usize] += q * f;
                }
            }
        }
        out
    }
}

/// One empirical column per entry of `samples`, each from its own substream
/// `child_seed(seed, column)`. Repeated sample ids give independent columns.
pub fn estimate_transition_matrix(
    view: &RegularView<'_>,
    counter: &AccessCounter,
    samples: &[usize],
    r: usize,
    t: usize,
    seed: u64,
) -> DistributionMatrix {
    assert!(!samples.is_empty(), "sample multiset must be nonempty");
    let columns = samples
        .par_iter()
        .enumerate()
        .map(|(j, &x)| {
            let mut rng = rng::seeded(rng::child_seed(seed, j as u64));
            run_random_walks(view, counter, r, t, x, &mut rng)
        })
        .collect();
    DistributionMatrix::from_columns(columns)
}

/// Symmetric estimate of the collision-probability Gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GramEstimate {
    matrix: DMatrix<f64>,
}

impl GramEstimate {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// `½(P̂ᵀQ̂ + Q̂ᵀP̂)` for two independent estimates of the same columns.
pub fn symmetrized_gram(p: &DistributionMatrix, q: &DistributionMatrix) -> DMatrix<f64> {
    let s = p.len();
    assert_eq!(s, q.len());
    let upper: Vec<Vec<f64>> = (0..s)
        .into_par_iter()
        .map(|a| {
            (a..s)
                .map(|b| {
                    0.5 * (p.columns[a].dot(&q.columns[b]) + q.columns[a].dot(&p.columns[b]))
                })
                .collect()
        })
        .collect();
    let mut m = DMatrix::zeros(s, s);
    for (a, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            m[(a, a + off)] = v;
            m[(a + off, a)] = v;
        }
    }
    m
}

/// Entrywise lower median over `reps` independent symmetrized Gram
/// estimates. Rep `i` draws `Q̂` from `child_seed(child_seed(seed, i), 0)`
/// and `P̂` from `child_seed(child_seed(seed, i), 1)`.
pub fn estimate_collision_probabilities(
    view: &RegularView<'_>,
    counter: &AccessCounter,
    samples: &[usize],
    r: usize,
    t: usize,
    reps: usize,
    seed: u64,
) -> GramEstimate {
    assert!(reps >= 1, "at least one repetition is required");
    let grams: Vec<DMatrix<f64>> = (0..reps)
        .map(|i| {
            let rep_seed = rng::child_seed(seed, i as u64);
            let q = estimate_transition_matrix(view, counter, samples, r, t, rng::child_seed(rep_seed, 0));
            let p = estimate_transition_matrix(view, counter, samples, r, t, rng::child_seed(rep_seed, 1));
            symmetrized_gram(&p, &q)
        })
        .collect();
    let s = samples.len();
    let mut scratch = vec![0.0; reps];
    let matrix = DMatrix::from_fn(s, s, |a, b| {
        for (slot, g) in scratch.iter_mut().zip(&grams) {
            *slot = g[(a, b)];
        }
        lower_median(&mut scratch)
    });
    GramEstimate { matrix }
}
