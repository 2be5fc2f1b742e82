//! The clustering oracle: sample `S`, link sample pairs whose approximate
//! spectral dot product reaches `θ`, name clusters by the connected
//! components, and answer membership queries against them.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use petgraph::unionfind::UnionFind;
use rand::Rng;
use rayon::prelude::*;

use crate::codec::{check_magic, expect_eof, get_f64, get_len, get_u64, put_f64, put_magic, put_u64, put_usize};
use crate::dot_oracle::{initialize_oracle, query_vector, read_sketch, save_sketch, OracleParams, SketchD};
use crate::error::{Error, Result};
use crate::graph::{AccessCounter, RegularView};
use crate::rng;

/// `0.96(1 − 4√ε/φ)·γk/n − (√k/n)(ε/φ²)^{1/6} − ξ/n`.
pub fn threshold_theta(n: usize, k: usize, gamma: f64, eps: f64, phi: f64, xi: f64) -> Result<f64> {
    let nf = n as f64;
    let kf = k as f64;
    let theta = 0.96 * (1.0 - 4.0 * eps.sqrt() / phi) * gamma * kf / nf
        - (kf.sqrt() / nf) * (eps / (phi * phi)).powf(1.0 / 6.0)
        - xi / nf;
    if theta > 0.0 {
        Ok(theta)
    } else {
        Err(Error::NonpositiveTheta(theta))
    }
}

/// Where the similarity threshold comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    /// A value read off the density-gap tuning (or supplied by hand).
    Fixed(f64),
    /// [`threshold_theta`] evaluated on the oracle parameters.
    Analytic,
}

impl Threshold {
    pub fn resolve(self, n: usize, p: &OracleParams) -> Result<f64> {
        match self {
            Threshold::Fixed(theta) if theta > 0.0 => Ok(theta),
            Threshold::Fixed(theta) => Err(Error::NonpositiveTheta(theta)),
            Threshold::Analytic => threshold_theta(n, p.k, p.gamma, p.eps, p.phi, p.xi),
        }
    }
}

/// Membership rule used by [`search_index`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SearchRule {
    /// `x` belongs to `S_i` iff its value against every `u ∈ S_i` is at least `θ`.
    All,
    /// Extension: it suffices that a fraction `ρ` of `S_i` (by multiplicity)
    /// clears `θ`.
    Fraction(f64),
}

/// The clustering sample with cached query vectors and all pairwise values.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSimilarity {
    /// Distinct sample vertices, ascending.
    nodes: Vec<usize>,
    multiplicity: Vec<usize>,
    alphas: Vec<Vec<f64>>,
    psi_alphas: Vec<Vec<f64>>,
    pairwise: DMatrix<f64>,
}

impl SampleSimilarity {
    /// Draws `S` (size `params.s`, with replacement) and evaluates every pair.
    pub fn sample(view: &RegularView<'_>, counter: &AccessCounter, sketch: &SketchD) -> Self {
        let p = sketch.params();
        let mut rng = rng::stream(p.master_seed, "cluster-samples", &[]);
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for _ in 0..p.s {
            *counts.entry(rng.gen_range(0..view.n())).or_default() += 1;
        }
        let (nodes, multiplicity) = counts.into_iter().unzip();
        Self::for_vertices(view, counter, sketch, nodes, multiplicity)
    }

    /// Builds the similarity data for an explicit vertex list.
    pub fn for_vertices(
        view: &RegularView<'_>,
        counter: &AccessCounter,
        sketch: &SketchD,
        nodes: Vec<usize>,
        multiplicity: Vec<usize>,
    ) -> Self {
        assert_eq!(nodes.len(), multiplicity.len());
        let alphas: Vec<Vec<f64>> = nodes
            .par_iter()
            .map(|&u| query_vector(view, counter, u, sketch))
            .collect();
        Self::from_alphas(sketch, nodes, multiplicity, alphas)
    }

    fn from_alphas(sketch: &SketchD, nodes: Vec<usize>, multiplicity: Vec<usize>, alphas: Vec<Vec<f64>>) -> Self {
        let psi_alphas: Vec<Vec<f64>> = alphas.iter().map(|a| sketch.psi_times(a)).collect();
        let m = nodes.len();
        let mut pairwise = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in a..m {
                let v = dot(&psi_alphas[a], &alphas[b]);
                pairwise[(a, b)] = v;
                pairwise[(b, a)] = v;
            }
        }
        Self {
            nodes,
            multiplicity,
            alphas,
            psi_alphas,
            pairwise,
        }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn multiplicity(&self) -> &[usize] {
        &self.multiplicity
    }

    pub fn alphas(&self) -> &[Vec<f64>] {
        &self.alphas
    }

    /// Approximate dot products between distinct sample vertices.
    pub fn pairwise(&self) -> &DMatrix<f64> {
        &self.pairwise
    }

    /// Component label of each node in `H_θ`, numbered by first appearance.
    pub fn components_at(&self, theta: f64) -> (usize, Vec<usize>) {
        let m = self.nodes.len();
        let mut uf = UnionFind::<usize>::new(m);
        for a in 0..m {
            for b in a + 1..m {
                if self.pairwise[(a, b)] >= theta {
                    uf.union(a, b);
                }
            }
        }
        let mut names: BTreeMap<usize, usize> = BTreeMap::new();
        let labels = (0..m)
            .map(|a| {
                let next = names.len();
                *names.entry(uf.find(a)).or_insert(next)
            })
            .collect();
        (names.len(), labels)
    }

    /// Values of `x` against every node, in node order.
    fn values_against(&self, alpha_x: &[f64]) -> Vec<f64> {
        self.psi_alphas.iter().map(|pa| dot(pa, alpha_x)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Result of [`search_index`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Index(usize),
    Outlier,
}

/// A successfully constructed oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleState {
    sketch: SketchD,
    similarity: SampleSimilarity,
    theta: f64,
    labels: Vec<usize>,
    rule: SearchRule,
}

impl OracleState {
    /// Labels the similarity graph at `theta`; fails unless it has exactly
    /// `k` components.
    pub fn from_parts(sketch: SketchD, similarity: SampleSimilarity, theta: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::NonpositiveTheta(theta));
        }
        let k = sketch.params().k;
        let (components, labels) = similarity.components_at(theta);
        if components != k {
            return Err(Error::ConstructFailed {
                components,
                expected: k,
            });
        }
        Ok(Self {
            sketch,
            similarity,
            theta,
            labels,
            rule: SearchRule::All,
        })
    }

    pub fn with_rule(mut self, rule: SearchRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn sketch(&self) -> &SketchD {
        &self.sketch
    }

    pub fn similarity(&self) -> &SampleSimilarity {
        &self.similarity
    }

    pub fn k(&self) -> usize {
        self.sketch.params().k
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn rule(&self) -> SearchRule {
        self.rule
    }

    /// Distinct sample vertices.
    pub fn sample(&self) -> &[usize] {
        &self.similarity.nodes
    }

    /// Component index of each distinct sample vertex.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Sample vertices of each component.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (&u, &l) in self.similarity.nodes.iter().zip(&self.labels) {
            out[l].push(u);
        }
        out
    }

    /// Whether `(a, b)` (node positions) is an edge of `H`.
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.similarity.pairwise[(a, b)] >= self.theta
    }

    /// Applies the search rule to precomputed values of `x` against every
    /// node.
    pub fn classify_values(&self, values: &[f64]) -> SearchOutcome {
        let k = self.k();
        let mut total = vec![0usize; k];
        let mut above = vec![0usize; k];
        for ((&v, &l), &mult) in values.iter().zip(&self.labels).zip(&self.similarity.multiplicity) {
            total[l] += mult;
            if v >= self.theta {
                above[l] += mult;
            }
        }
        let qualifies = |i: usize| match self.rule {
            SearchRule::All => above[i] == total[i],
            SearchRule::Fraction(rho) => above[i] as f64 >= rho * total[i] as f64,
        };
        let mut hits = (0..k).filter(|&i| qualifies(i));
        match (hits.next(), hits.next()) {
            (Some(i), None) => SearchOutcome::Index(i),
            _ => SearchOutcome::Outlier,
        }
    }
}

/// Builds the sketch, samples `S`, and labels the similarity graph.
pub fn construct_oracle(
    view: &RegularView<'_>,
    counter: &AccessCounter,
    params: &OracleParams,
    threshold: Threshold,
) -> Result<OracleState> {
    let theta = threshold.resolve(view.n(), params)?;
    let sketch = initialize_oracle(view, counter, params)?;
    let similarity = SampleSimilarity::sample(view, counter, &sketch);
    OracleState::from_parts(sketch, similarity, theta)
}

/// Approximate dot products of `x` against every distinct sample vertex.
pub fn sample_values(view: &RegularView<'_>, counter: &AccessCounter, state: &OracleState, x: usize) -> Vec<f64> {
    let alpha = query_vector(view, counter, x, &state.sketch);
    state.similarity.values_against(&alpha)
}

/// The unique component every one of whose sample vertices clears `θ`
/// against `x`, or `Outlier`.
pub fn search_index(view: &RegularView<'_>, counter: &AccessCounter, state: &OracleState, x: usize) -> SearchOutcome {
    state.classify_values(&sample_values(view, counter, state, x))
}

/// Component index of `x`; outliers get a uniform index drawn from the
/// stream `(master_seed, "outlier", x)`.
pub fn which_cluster(view: &RegularView<'_>, counter: &AccessCounter, state: &OracleState, x: usize) -> usize {
    match search_index(view, counter, state, x) {
        SearchOutcome::Index(i) => i,
        SearchOutcome::Outlier => outlier_index(state, x),
    }
}

pub(crate) fn outlier_index(state: &OracleState, x: usize) -> usize {
    let mut rng = rng::stream(state.sketch.params().master_seed, "outlier", &[x as u64]);
    rng.gen_range(0..state.k())
}

const STATE_MAGIC: &[u8; 8] = b"SCOSTATE";
const STATE_VERSION: u32 = 1;

/// Writes the sketch to `sketch_out` and the clustering sidecar to
/// `sidecar_out`.
pub fn save_state<W1: Write, W2: Write>(state: &OracleState, sketch_out: W1, mut sidecar_out: W2) -> Result<()> {
    save_sketch(&state.sketch, sketch_out)?;
    let out = &mut sidecar_out;
    put_magic(out, STATE_MAGIC, STATE_VERSION)?;
    put_usize(out, state.sketch.n())?;
    put_usize(out, state.sketch.d())?;
    put_u64(out, state.sketch.params().master_seed)?;
    put_usize(out, state.k())?;
    put_f64(out, state.theta)?;
    match state.rule {
        SearchRule::All => {
            put_u64(out, 0)?;
            put_f64(out, 1.0)?;
        }
        SearchRule::Fraction(rho) => {
            put_u64(out, 1)?;
            put_f64(out, rho)?;
        }
    }
    let sim = &state.similarity;
    put_usize(out, sim.nodes.len())?;
    for i in 0..sim.nodes.len() {
        put_usize(out, sim.nodes[i])?;
        put_usize(out, sim.multiplicity[i])?;
        put_usize(out, state.labels[i])?;
    }
    for alpha in &sim.alphas {
        for &v in alpha {
            put_f64(out, v)?;
        }
    }
    for v in sim.pairwise.iter() {
        put_f64(out, *v)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a state written by [`save_state`] and validates it against the
/// graph.
pub fn load_state<R1: Read, R2: Read>(mut sketch_in: R1, mut sidecar_in: R2, view: &RegularView<'_>) -> Result<OracleState> {
    let sketch = read_sketch(&mut sketch_in)?;
    expect_eof(&mut sketch_in)?;
    crate::dot_oracle::check_sketch_graph(&sketch, view)?;

    let input = &mut sidecar_in;
    check_magic(input, STATE_MAGIC, STATE_VERSION)?;
    let n = get_len(input, usize::MAX)?;
    let d = get_len(input, usize::MAX)?;
    let seed = get_u64(input)?;
    let k = get_len(input, usize::MAX)?;
    if n != sketch.n() || d != sketch.d() || seed != sketch.params().master_seed || k != sketch.params().k {
        return Err(Error::FingerprintMismatch("state sidecar does not match its sketch".into()));
    }
    let theta = get_f64(input)?;
    let rule = match get_u64(input)? {
        0 => {
            get_f64(input)?;
            SearchRule::All
        }
        1 => SearchRule::Fraction(get_f64(input)?),
        other => return Err(Error::Format(format!("unknown search rule {other}"))),
    };
    let m = get_len(input, sketch.params().s)?;
    let mut nodes = Vec::with_capacity(m);
    let mut multiplicity = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        nodes.push(get_len(input, n.saturating_sub(1))?);
        multiplicity.push(get_len(input, sketch.params().s)?);
        labels.push(get_len(input, k.saturating_sub(1))?);
    }
    let s_oracle = sketch.params().s_oracle;
    let mut alphas = Vec::with_capacity(m);
    for _ in 0..m {
        alphas.push((0..s_oracle).map(|_| get_f64(input)).collect::<Result<Vec<_>>>()?);
    }
    let mut pairwise = DMatrix::zeros(m, m);
    for v in pairwise.iter_mut() {
        *v = get_f64(input)?;
    }
    expect_eof(input)?;

    let similarity = SampleSimilarity::from_alphas(&sketch, nodes, multiplicity, alphas);
    if similarity.pairwise != pairwise {
        return Err(Error::Format("stored pairwise values disagree with stored query vectors".into()));
    }
    let state = OracleState::from_parts(sketch, similarity, theta)?.with_rule(rule);
    if state.labels != labels {
        return Err(Error::Format("stored labels disagree with the similarity graph".into()));
    }
    Ok(state)
}
