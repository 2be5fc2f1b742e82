//! Experiment harnesses: misclassification error, density-gap tuning, the
//! ℓ2-distance baseline, robustness under edge deletion, edge-access
//! accounting and timing.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use itertools::Itertools;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::cluster_oracle::{construct_oracle, which_cluster, OracleState, SampleSimilarity, Threshold};
use crate::dot_oracle::{initialize_oracle, query_vector, OracleParams, SketchD};
use crate::error::{Error, Result};
use crate::graph::{delete_edges, AccessCounter, Graph, Partition, PerturbationMode, PerturbationSpec, RegularView};
use crate::rng;
use crate::stats::{lower_median, mean, quantile_sorted, sample_std, sorted};
use crate::walks::{run_random_walks, EmpiricalDistribution};

/// Largest `k` for which the best permutation is found by enumeration.
pub const EXHAUSTIVE_K: usize = 8;

/// Best-permutation agreement between a predicted labeling and the truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Misclassification {
    pub error: f64,
    /// `permutation[i]` is the predicted label matched to true cluster `i`.
    pub permutation: Vec<usize>,
    /// `confusion[a][b]`: vertices predicted `a` whose true cluster is `b`.
    pub confusion: Vec<Vec<usize>>,
}

fn confusion_matrix(predicted: &[usize], truth: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    if predicted.len() != truth.len() {
        return Err(Error::InvalidParameter("labelings have different lengths".into()));
    }
    let mut confusion = vec![vec![0usize; k]; k];
    for (&a, &b) in predicted.iter().zip(truth) {
        if a >= k || b >= k {
            return Err(Error::LabelOutOfRange { label: a.max(b), k });
        }
        confusion[a][b] += 1;
    }
    Ok(confusion)
}

fn exhaustive_best(confusion: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let k = confusion.len();
    (0..k)
        .permutations(k)
        .map(|perm| ((0..k).map(|i| confusion[perm[i]][i]).sum::<usize>(), perm))
        .max_by_key(|(score, _)| *score)
        .expect("at least one permutation")
}

fn matching_best(confusion: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let k = confusion.len();
    // rows: true clusters, columns: predicted labels
    let weights = Matrix::from_fn(k, k, |(i, a)| confusion[a][i] as i64);
    let (score, assignment) = kuhn_munkres(&weights);
    (score as usize, assignment)
}

/// `1 − (1/n)·max_π Σ_i |U_{π(i)} ∩ C_i|`, by enumeration for
/// `k ≤ 8` and by maximum-weight matching beyond.
pub fn misclassification_error(predicted: &[usize], truth: &[usize], k: usize) -> Result<Misclassification> {
    let confusion = confusion_matrix(predicted, truth, k)?;
    let (score, permutation) = if k <= EXHAUSTIVE_K {
        exhaustive_best(&confusion)
    } else {
        matching_best(&confusion)
    };
    let n = predicted.len().max(1);
    Ok(Misclassification {
        error: 1.0 - score as f64 / n as f64,
        permutation,
        confusion,
    })
}

/// Same quantity computed by matching regardless of `k`.
pub fn misclassification_error_by_matching(predicted: &[usize], truth: &[usize], k: usize) -> Result<f64> {
    let confusion = confusion_matrix(predicted, truth, k)?;
    let (score, _) = matching_best(&confusion);
    Ok(1.0 - score as f64 / predicted.len().max(1) as f64)
}

/// Distinct edges read so far as a fraction of all edges.
pub fn edge_access_fraction(counter: &AccessCounter) -> f64 {
    match counter.edge_count() {
        0 => 0.0,
        m => counter.distinct_edges() as f64 / m as f64,
    }
}

/// Answers `which_cluster` for every vertex, in parallel.
pub fn query_all(view: &RegularView<'_>, counter: &AccessCounter, state: &OracleState) -> Vec<usize> {
    (0..view.n())
        .into_par_iter()
        .map(|x| which_cluster(view, counter, state, x))
        .collect()
}

/// Flat report of one evaluation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub error: f64,
    pub permutation: Vec<usize>,
    pub confusion: Vec<Vec<usize>>,
    pub edge_access_fraction: f64,
    pub construct_seconds: Option<f64>,
    pub query_seconds: Option<f64>,
    pub seed: u64,
    /// Additional `(key, value)` metadata such as the parameters.
    pub meta: Vec<(String, String)>,
}

impl EvalReport {
    pub fn from_misclassification(m: Misclassification, seed: u64) -> Self {
        Self {
            error: m.error,
            permutation: m.permutation,
            confusion: m.confusion,
            seed,
            ..Default::default()
        }
    }

    pub fn with_params(mut self, p: &OracleParams) -> Self {
        self.meta.extend(params_key_values(p));
        self
    }

    /// `key=value` lines followed by the confusion matrix as CSV.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "error={}", self.error);
        let _ = writeln!(out, "permutation={}", self.permutation.iter().join(","));
        let _ = writeln!(out, "edge_access_fraction={}", self.edge_access_fraction);
        if let Some(s) = self.construct_seconds {
            let _ = writeln!(out, "construct_seconds={s}");
        }
        if let Some(s) = self.query_seconds {
            let _ = writeln!(out, "query_seconds={s}");
        }
        let _ = writeln!(out, "seed={}", self.seed);
        for (k, v) in &self.meta {
            let _ = writeln!(out, "{k}={v}");
        }
        out.push_str(&self.confusion_csv());
        out
    }

    pub fn confusion_csv(&self) -> String {
        let k = self.confusion.len();
        let mut out = String::from("predicted");
        for b in 0..k {
            let _ = write!(out, ",true_{b}");
        }
        out.push('\n');
        for (a, row) in self.confusion.iter().enumerate() {
            let _ = writeln!(out, "{a},{}", row.iter().join(","));
        }
        out
    }
}

pub fn params_key_values(p: &OracleParams) -> Vec<(String, String)> {
    vec![
        ("k".into(), p.k.to_string()),
        ("phi".into(), p.phi.to_string()),
        ("eps".into(), p.eps.to_string()),
        ("gamma".into(), p.gamma.to_string()),
        ("delta".into(), p.delta.to_string()),
        ("xi".into(), p.xi.to_string()),
        ("t".into(), p.t.to_string()),
        ("s".into(), p.s.to_string()),
        ("s_oracle".into(), p.s_oracle.to_string()),
        ("r_init".into(), p.r_init.to_string()),
        ("r_query".into(), p.r_query.to_string()),
        ("reps".into(), p.reps.to_string()),
        ("master_seed".into(), p.master_seed.to_string()),
    ]
}

/// One candidate setting of the sampling parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridEntry {
    pub t: usize,
    pub s_oracle: usize,
    pub r_init: usize,
    pub r_query: usize,
    pub reps: usize,
}

impl GridEntry {
    pub fn apply(&self, base: &OracleParams) -> OracleParams {
        OracleParams {
            t: self.t,
            s_oracle: self.s_oracle,
            r_init: self.r_init,
            r_query: self.r_query,
            reps: self.reps,
            ..base.clone()
        }
    }
}

/// Histogram bin with counts of both samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub intra: usize,
    pub inter: usize,
}

pub const HISTOGRAM_BINS: usize = 100;

/// Shared range histogram of two samples.
pub fn histogram(intra: &[f64], inter: &[f64], bins: usize) -> Vec<HistogramBin> {
    let all = intra.iter().chain(inter);
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || bins == 0 {
        return Vec::new();
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            lo: lo + b as f64 * width,
            hi: lo + (b + 1) as f64 * width,
            intra: 0,
            inter: 0,
        })
        .collect();
    let bin_of = |v: f64| (((v - lo) / width) as usize).min(bins - 1);
    for &v in intra {
        out[bin_of(v)].intra += 1;
    }
    for &v in inter {
        out[bin_of(v)].inter += 1;
    }
    out
}

/// Separation between a sample expected to be high and one expected to be
/// low: `(q05(high) − q95(low)) / median(high)`, with the midpoint of the
/// two quantiles as the threshold.
pub fn gap_statistic(high: &[f64], low: &[f64]) -> Option<(f64, f64)> {
    if high.is_empty() || low.is_empty() {
        return None;
    }
    let h = sorted(high);
    let l = sorted(low);
    let upper = quantile_sorted(&h, 0.05);
    let lower = quantile_sorted(&l, 0.95);
    let med = lower_median(&mut h.clone());
    let score = if med.abs() > 0.0 { (upper - lower) / med.abs() } else { upper - lower };
    Some((score, 0.5 * (upper + lower)))
}

/// Vertex pairs drawn uniformly among same-cluster and different-cluster
/// pairs of `truth`, `m` of each.
pub fn sample_pairs(truth: &Partition, m: usize, seed: u64) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let clusters = truth.clusters();
    let n = truth.n();
    let mut rng = rng::stream(seed, "tune-pairs", &[]);
    let mut intra = Vec::with_capacity(m);
    let mut inter = Vec::with_capacity(m);
    let has_intra = clusters.iter().any(|c| c.len() >= 2);
    let has_inter = clusters.iter().filter(|c| !c.is_empty()).count() >= 2;
    while has_intra && intra.len() < m {
        let x = rng.gen_range(0..n);
        let members = &clusters[truth.label(x)];
        let y = *members.choose(&mut rng).expect("nonempty");
        if y != x {
            intra.push((x, y));
        }
    }
    while has_inter && inter.len() < m {
        let x = rng.gen_range(0..n);
        let y = rng.gen_range(0..n);
        if truth.label(x) != truth.label(y) {
            inter.push((x, y));
        }
    }
    (intra, inter)
}

/// Density scan of one grid entry.
#[derive(Clone, Debug, PartialEq)]
pub struct EntryScan {
    pub entry: GridEntry,
    pub intra: Vec<f64>,
    pub inter: Vec<f64>,
    pub gap: Option<f64>,
    pub theta: Option<f64>,
    pub histogram: Vec<HistogramBin>,
    /// Why the entry produced no values (for example a degenerate spectrum).
    pub failure: Option<String>,
    pub probes: u64,
}

/// Result of [`density_gap_tune`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityScan {
    pub entries: Vec<EntryScan>,
    pub chosen: usize,
    pub theta: f64,
}

impl DensityScan {
    pub fn chosen_entry(&self) -> &EntryScan {
        &self.entries[self.chosen]
    }
}

/// Options shared by the tuning procedures.
#[derive(Clone, Debug, PartialEq)]
pub struct TuneOptions {
    /// Pairs per side (default 200).
    pub pairs: usize,
    pub seed: u64,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self { pairs: 200, seed: 0 }
    }
}

fn distinct_vertices(pairs: &[(usize, usize)]) -> Vec<usize> {
    let mut v: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Approximate dot products for the given pairs under `sketch`.
pub fn pair_values(view: &RegularView<'_>, counter: &AccessCounter, sketch: &SketchD, pairs: &[(usize, usize)]) -> Vec<f64> {
    let vertices = distinct_vertices(pairs);
    let alphas: Vec<Vec<f64>> = vertices
        .par_iter()
        .map(|&x| query_vector(view, counter, x, sketch))
        .collect();
    let pos = |x: usize| vertices.binary_search(&x).expect("vertex sampled");
    pairs
        .iter()
        .map(|&(x, y)| sketch.dot(&alphas[pos(x)], &alphas[pos(y)]))
        .collect()
}

/// Builds a sketch per grid entry, measures intra- and inter-cluster values
/// on sampled pairs, and picks the entry with the largest gap statistic.
pub fn density_gap_tune(
    view: &RegularView<'_>,
    truth: &Partition,
    base: &OracleParams,
    grid: &[GridEntry],
    options: &TuneOptions,
) -> Result<DensityScan> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty tuning grid".into()));
    }
    let (intra_pairs, inter_pairs) = sample_pairs(truth, options.pairs, options.seed);
    let mut entries = Vec::with_capacity(grid.len());
    for (i, entry) in grid.iter().enumerate() {
        let mut params = entry.apply(base);
        params.master_seed = rng::derive_seed(options.seed, "tune-entry", &[i as u64]);
        let counter = AccessCounter::new(view.graph());
        let scan = match initialize_oracle(view, &counter, &params) {
            Ok(sketch) => {
                let intra = pair_values(view, &counter, &sketch, &intra_pairs);
                let inter = pair_values(view, &counter, &sketch, &inter_pairs);
                let stat = gap_statistic(&intra, &inter);
                EntryScan {
                    entry: *entry,
                    histogram: histogram(&intra, &inter, HISTOGRAM_BINS),
                    gap: stat.map(|s| s.0),
                    theta: stat.map(|s| s.1),
                    intra,
                    inter,
                    failure: None,
                    probes: counter.probes(),
                }
            }
            Err(e) => EntryScan {
                entry: *entry,
                intra: Vec::new(),
                inter: Vec::new(),
                gap: None,
                theta: None,
                histogram: Vec::new(),
                failure: Some(e.to_string()),
                probes: counter.probes(),
            },
        };
        entries.push(scan);
    }
    let chosen = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.gap.is_some_and(|g| g > 0.0) && e.theta.is_some_and(|t| t > 0.0))
        .max_by(|a, b| a.1.gap.unwrap().total_cmp(&b.1.gap.unwrap()))
        .map(|(i, _)| i)
        .ok_or(Error::NoPositiveGap)?;
    let theta = entries[chosen].theta.expect("chosen entry has a threshold");
    Ok(DensityScan { entries, chosen, theta })
}

/// Builds the oracle for each candidate `s`, classifies `probes` random
/// vertices, and returns the candidate with the most correct answers (under
/// the best label permutation) together with all counts. Failed
/// constructions score zero.
pub fn tune_sample_size(
    view: &RegularView<'_>,
    truth: &Partition,
    base: &OracleParams,
    theta: f64,
    candidates: &[usize],
    probes: usize,
    seed: u64,
) -> Result<(usize, Vec<(usize, usize)>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no sample sizes to try".into()));
    }
    let mut rng = rng::stream(seed, "tune-s-probes", &[]);
    let vertices: Vec<usize> = (0..probes).map(|_| rng.gen_range(0..view.n())).collect();
    let truth_labels: Vec<usize> = vertices.iter().map(|&x| truth.label(x)).collect();
    let mut counts = Vec::with_capacity(candidates.len());
    for &s in candidates {
        let params = OracleParams { s, ..base.clone() };
        let counter = AccessCounter::new(view.graph());
        let correct = match construct_oracle(view, &counter, &params, Threshold::Fixed(theta)) {
            Ok(state) => {
                let predicted: Vec<usize> = vertices
                    .par_iter()
                    .map(|&x| which_cluster(view, &counter, &state, x))
                    .collect();
                let m = misclassification_error(&predicted, &truth_labels, truth.k())?;
                ((1.0 - m.error) * probes as f64).round() as usize
            }
            Err(_) => 0,
        };
        counts.push((s, correct));
    }
    let best = counts.iter().max_by_key(|&&(s, c)| (c, std::cmp::Reverse(s))).expect("nonempty").0;
    Ok((best, counts))
}

/// Result of one oracle build plus a full query sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub error: f64,
    /// Construction attempts used (1 when the first succeeded).
    pub attempts: usize,
    /// True when every attempt failed; `error` is then that of putting all
    /// vertices in one cluster.
    pub failed: bool,
    pub edge_access_fraction: f64,
    pub predicted: Option<Vec<usize>>,
}

/// Seed of construction attempt `a` for a trial seeded with `seed`.
pub fn attempt_seed(seed: u64, attempt: usize) -> u64 {
    if attempt == 0 {
        seed
    } else {
        rng::derive_seed(seed, "attempt", &[attempt as u64])
    }
}

/// Builds the oracle (retrying construction failures up to `attempts`
/// times with fresh seeds), queries every vertex, and scores the result.
pub fn run_trial(
    graph: &Graph,
    truth: &Partition,
    params: &OracleParams,
    threshold: Threshold,
    attempts: usize,
) -> Result<TrialOutcome> {
    let view = RegularView::new(graph);
    let counter = AccessCounter::new(graph);
    for a in 0..attempts.max(1) {
        let p = OracleParams {
            master_seed: attempt_seed(params.master_seed, a),
            ..params.clone()
        };
        match construct_oracle(&view, &counter, &p, threshold) {
            Ok(state) => {
                let predicted = query_all(&view, &counter, &state);
                let m = misclassification_error(&predicted, truth.labels(), truth.k())?;
                return Ok(TrialOutcome {
                    error: m.error,
                    attempts: a + 1,
                    failed: false,
                    edge_access_fraction: edge_access_fraction(&counter),
                    predicted: Some(predicted),
                });
            }
            Err(Error::ConstructFailed { .. } | Error::DegenerateSpectrum { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(TrialOutcome {
        error: single_cluster_error(truth),
        attempts: attempts.max(1),
        failed: true,
        edge_access_fraction: edge_access_fraction(&counter),
        predicted: None,
    })
}

/// Error of the labeling that puts every vertex in one cluster.
pub fn single_cluster_error(truth: &Partition) -> f64 {
    let largest = truth.sizes().into_iter().max().unwrap_or(0);
    1.0 - largest as f64 / truth.n().max(1) as f64
}

/// Summary of repeated trials.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialSummary {
    pub errors: Vec<f64>,
    pub failures: usize,
    pub mean: f64,
    pub std: f64,
}

impl TrialSummary {
    pub fn from_errors(errors: Vec<f64>, failures: usize) -> Self {
        Self {
            mean: mean(&errors),
            std: sample_std(&errors),
            errors,
            failures,
        }
    }
}

/// Per trial: delete edges around one random vertex per cluster, rebuild
/// the oracle on the perturbed graph, and score a full query sweep.
pub fn robustness_experiment(
    graph: &Graph,
    truth: &Partition,
    del_num: usize,
    trials: usize,
    params: &OracleParams,
    threshold: Threshold,
    attempts: usize,
) -> Result<TrialSummary> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut errors = Vec::with_capacity(trials);
    let mut failures = 0;
    for trial in 0..trials {
        let spec = PerturbationSpec {
            mode: PerturbationMode::PerClusterVertex { del_num },
            cluster_cap: None,
            seed: rng::derive_seed(params.master_seed, "robust-perturb", &[trial as u64]),
        };
        let perturbed = delete_edges(graph, truth, &spec)?;
        let p = OracleParams {
            master_seed: rng::derive_seed(params.master_seed, "robust-oracle", &[trial as u64]),
            ..params.clone()
        };
        let outcome = run_trial(&perturbed.graph, truth, &p, threshold, attempts)?;
        failures += usize::from(outcome.failed);
        errors.push(outcome.error);
    }
    Ok(TrialSummary::from_errors(errors, failures))
}

/// Wall-clock cost of building the oracle and of single queries.
#[derive(Clone, Debug, PartialEq)]
pub struct Timing {
    pub construct: Duration,
    /// Mean over `query_count` timed queries; `None` when no query was run.
    pub mean_query: Option<Duration>,
}

/// Times construction, then one untimed warmup query and `query_count`
/// timed queries at random vertices.
pub fn timing_run(graph: &Graph, params: &OracleParams, threshold: Threshold, query_count: usize) -> Result<Timing> {
    let view = RegularView::new(graph);
    let counter = AccessCounter::new(graph);
    let start = Instant::now();
    let state = construct_oracle(&view, &counter, params, threshold)?;
    let construct = start.elapsed();
    if query_count == 0 {
        return Ok(Timing {
            construct,
            mean_query: None,
        });
    }
    let mut rng = rng::stream(params.master_seed, "timing-queries", &[]);
    let warm = rng.gen_range(0..graph.n());
    which_cluster(&view, &counter, &state, warm);
    let vertices: Vec<usize> = (0..query_count).map(|_| rng.gen_range(0..graph.n())).collect();
    let start = Instant::now();
    for &x in &vertices {
        std::hint::black_box(which_cluster(&view, &counter, &state, x));
    }
    Ok(Timing {
        construct,
        mean_query: Some(start.elapsed() / query_count as u32),
    })
}

/// Edge-access fraction after preprocessing and after each cumulative
/// query count in `checkpoints` (ascending).
pub fn access_profile(
    graph: &Graph,
    params: &OracleParams,
    threshold: Threshold,
    checkpoints: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let view = RegularView::new(graph);
    let counter = AccessCounter::new(graph);
    let state = construct_oracle(&view, &counter, params, threshold)?;
    let mut out = vec![(0, edge_access_fraction(&counter))];
    let mut rng = rng::stream(params.master_seed, "access-queries", &[]);
    let mut done = 0;
    for &target in checkpoints {
        if target < done {
            return Err(Error::InvalidParameter("checkpoints must be ascending".into()));
        }
        let batch: Vec<usize> = (done..target).map(|_| rng.gen_range(0..graph.n())).collect();
        batch.par_iter().for_each(|&x| {
            which_cluster(&view, &counter, &state, x);
        });
        done = target;
        if target > 0 {
            out.push((target, edge_access_fraction(&counter)));
        }
    }
    Ok(out)
}

/// Parameters of the ℓ2-distance baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineParams {
    pub k: usize,
    pub t: usize,
    /// Walks per vertex.
    pub r: usize,
    /// Sample size.
    pub s: usize,
    /// Link two sample vertices when their walk distributions are within
    /// this ℓ2 distance.
    pub threshold: f64,
    pub seed: u64,
}

/// The ℓ2-distance oracle: same sample-and-link scaffold, distances instead
/// of spectral dot products.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineOracle {
    params: BaselineParams,
    nodes: Vec<usize>,
    distributions: Vec<EmpiricalDistribution>,
    labels: Vec<usize>,
}

fn baseline_distribution(view: &RegularView<'_>, counter: &AccessCounter, p: &BaselineParams, x: usize) -> EmpiricalDistribution {
    let mut rng = rng::stream(p.seed, "baseline-walks", &[x as u64]);
    run_random_walks(view, counter, p.r, p.t, x, &mut rng)
}

impl BaselineOracle {
    pub fn construct(view: &RegularView<'_>, counter: &AccessCounter, params: &BaselineParams) -> Result<Self> {
        if params.t == 0 || params.r == 0 || params.s == 0 || params.k < 2 {
            return Err(Error::InvalidParameter("baseline needs t, r, s >= 1 and k >= 2".into()));
        }
        let mut rng = rng::stream(params.seed, "baseline-samples", &[]);
        let mut nodes: Vec<usize> = (0..params.s).map(|_| rng.gen_range(0..view.n())).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let distributions: Vec<EmpiricalDistribution> = nodes
            .par_iter()
            .map(|&u| baseline_distribution(view, counter, params, u))
            .collect();
        let m = nodes.len();
        let mut uf = UnionFind::<usize>::new(m);
        for a in 0..m {
            for b in a + 1..m {
                if distributions[a].l2_distance(&distributions[b]) <= params.threshold {
                    uf.union(a, b);
                }
            }
        }
        let mut names = std::collections::BTreeMap::new();
        let labels: Vec<usize> = (0..m)
            .map(|a| {
                let next = names.len();
                *names.entry(uf.find(a)).or_insert(next)
            })
            .collect();
        if names.len() != params.k {
            return Err(Error::ConstructFailed {
                components: names.len(),
                expected: params.k,
            });
        }
        Ok(Self {
            params: params.clone(),
            nodes,
            distributions,
            labels,
        })
    }

    pub fn sample(&self) -> &[usize] {
        &self.nodes
    }

    /// Component of the sample vertex nearest to `x`.
    pub fn query(&self, view: &RegularView<'_>, counter: &AccessCounter, x: usize) -> usize {
        let m = baseline_distribution(view, counter, &self.params, x);
        let nearest = self
            .distributions
            .iter()
            .map(|d| d.l2_distance(&m))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty sample")
            .0;
        self.labels[nearest]
    }

    pub fn query_all(&self, view: &RegularView<'_>, counter: &AccessCounter) -> Vec<usize> {
        (0..view.n()).into_par_iter().map(|x| self.query(view, counter, x)).collect()
    }
}

/// Labels every vertex with the baseline, or fails like the main oracle
/// when the sample graph has the wrong number of components.
pub fn baseline_l2_cluster(view: &RegularView<'_>, counter: &AccessCounter, params: &BaselineParams) -> Result<Vec<usize>> {
    let oracle = BaselineOracle::construct(view, counter, params)?;
    Ok(oracle.query_all(view, counter))
}

/// Picks the baseline distance threshold by the density-gap rule applied to
/// ℓ2 distances (intra distances should be small, inter large).
pub fn tune_baseline_threshold(
    view: &RegularView<'_>,
    truth: &Partition,
    params: &BaselineParams,
    options: &TuneOptions,
) -> Result<(f64, f64)> {
    let (intra_pairs, inter_pairs) = sample_pairs(truth, options.pairs, options.seed);
    let counter = AccessCounter::new(view.graph());
    let probe = BaselineParams {
        seed: rng::derive_seed(options.seed, "baseline-tune", &[]),
        ..params.clone()
    };
    let vertices = distinct_vertices(&[intra_pairs.clone(), inter_pairs.clone()].concat());
    let dists: Vec<EmpiricalDistribution> = vertices
        .par_iter()
        .map(|&x| baseline_distribution(view, &counter, &probe, x))
        .collect();
    let pos = |x: usize| vertices.binary_search(&x).expect("sampled");
    let measure = |pairs: &[(usize, usize)]| -> Vec<f64> {
        pairs.iter().map(|&(x, y)| dists[pos(x)].l2_distance(&dists[pos(y)])).collect()
    };
    let intra = measure(&intra_pairs);
    let inter = measure(&inter_pairs);
    let (score, threshold) = gap_statistic(&inter, &intra).ok_or(Error::NoPositiveGap)?;
    Ok((score, threshold))
}

/// Builds the baseline with retries and scores a full query sweep.
pub fn run_baseline_trial(graph: &Graph, truth: &Partition, params: &BaselineParams, attempts: usize) -> Result<TrialOutcome> {
    let view = RegularView::new(graph);
    let counter = AccessCounter::new(graph);
    for a in 0..attempts.max(1) {
        let p = BaselineParams {
            seed: attempt_seed(params.seed, a),
            ..params.clone()
        };
        match baseline_l2_cluster(&view, &counter, &p) {
            Ok(predicted) => {
                let m = misclassification_error(&predicted, truth.labels(), truth.k())?;
                return Ok(TrialOutcome {
                    error: m.error,
                    attempts: a + 1,
                    failed: false,
                    edge_access_fraction: edge_access_fraction(&counter),
                    predicted: Some(predicted),
                });
            }
            Err(Error::ConstructFailed { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(TrialOutcome {
        error: single_cluster_error(truth),
        attempts: attempts.max(1),
        failed: true,
        edge_access_fraction: edge_access_fraction(&counter),
        predicted: None,
    })
}

/// Pairwise values of an explicit vertex list under a sketch, used by the
/// audit and the θ sweep.
pub fn similarity_for(view: &RegularView<'_>, sketch: &SketchD, vertices: Vec<usize>) -> SampleSimilarity {
    let counter = AccessCounter::new(view.graph());
    let mult = vec![1; vertices.len()];
    SampleSimilarity::for_vertices(view, &counter, sketch, vertices, mult)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dot_oracle::{default_params, ParamOverrides};
    use crate::graph::{generate_sbm, SbmSpec};

    fn cliques(count: usize, size: usize) -> Graph {
        let edges = (0..count).flat_map(|b| {
            (0..size).flat_map(move |u| (u + 1..size).map(move |v| (b * size + u, b * size + v)))
        });
        Graph::from_edges(count * size, edges, None).unwrap()
    }

    #[test]
    fn misclassification_cases() {
        let truth = vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 2];
        assert_eq!(misclassification_error(&truth, &truth, 3).unwrap().error, 0.0);
        let relabeled: Vec<usize> = truth.iter().map(|&l| [2, 0, 1][l]).collect();
        let m = misclassification_error(&relabeled, &truth, 3).unwrap();
        assert_eq!(m.error, 0.0);
        assert_eq!(m.permutation, vec![2, 0, 1]);
        let mut flipped = truth.clone();
        flipped[0] = 1;
        assert!((misclassification_error(&flipped, &truth, 3).unwrap().error - 0.1).abs() < 1e-15);
        assert!(matches!(misclassification_error(&[3], &[0], 3), Err(Error::LabelOutOfRange { .. })));
    }

    #[test]
    fn confusion_rows_are_predicted_counts() {
        let truth = vec![0, 1, 1, 2, 2, 2];
        let predicted = vec![1, 1, 0, 2, 2, 0];
        let m = misclassification_error(&predicted, &truth, 3).unwrap();
        for (a, row) in m.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), predicted.iter().filter(|&&p| p == a).count());
        }
        let report = EvalReport::from_misclassification(m, 4);
        let text = report.render();
        assert!(text.contains("seed=4"));
        assert!(text.contains("predicted,true_0,true_1,true_2"));
    }

    #[test]
    fn matching_handles_large_k() {
        let k = 10;
        let truth: Vec<usize> = (0..50).map(|i| i % k).collect();
        let predicted: Vec<usize> = truth.iter().map(|&l| (l + 3) % k).collect();
        assert_eq!(misclassification_error(&predicted, &truth, k).unwrap().error, 0.0);
    }

    #[test]
    fn gap_statistic_and_histogram() {
        let high = vec![1.0, 1.1, 0.9, 1.0];
        let low = vec![0.0, 0.1, -0.1, 0.05];
        let (score, theta) = gap_statistic(&high, &low).unwrap();
        assert!(score > 0.0);
        assert!(theta > 0.05 && theta < 0.9);
        let h = histogram(&high, &low, 10);
        assert_eq!(h.len(), 10);
        assert_eq!(h.iter().map(|b| b.intra).sum::<usize>(), 4);
        assert_eq!(h.iter().map(|b| b.inter).sum::<usize>(), 4);
    }

    #[test]
    fn sampled_pairs_respect_truth() {
        let truth = Partition::from_sizes(&[5, 5, 5]).unwrap();
        let (intra, inter) = sample_pairs(&truth, 50, 1);
        assert_eq!((intra.len(), inter.len()), (50, 50));
        assert!(intra.iter().all(|&(x, y)| x != y && truth.label(x) == truth.label(y)));
        assert!(inter.iter().all(|&(x, y)| truth.label(x) != truth.label(y)));
    }

    #[test]
    fn fresh_counter_reads_nothing() {
        let g = cliques(2, 4);
        assert_eq!(edge_access_fraction(&AccessCounter::new(&g)), 0.0);
    }

    #[test]
    fn tuning_on_disconnected_cliques() {
        let g = cliques(2, 10);
        let view = RegularView::new(&g);
        let truth = Partition::from_sizes(&[10, 10]).unwrap();
        let base = default_params(20, 2, 0.5, 0.0, 1.0, &ParamOverrides::default()).unwrap();
        let grid = [
            GridEntry {
                t: 8,
                s_oracle: 20,
                r_init: 1000,
                r_query: 1000,
                reps: 3,
            },
            GridEntry {
                t: 1,
                s_oracle: 2,
                r_init: 1,
                r_query: 1,
                reps: 1,
            },
        ];
        let scan = density_gap_tune(&view, &truth, &base, &grid, &TuneOptions { pairs: 40, seed: 3 }).unwrap();
        assert_eq!(scan.chosen, 0);
        assert!(scan.theta > 0.0 && scan.theta < 0.1);
        let chosen = scan.chosen_entry();
        assert!(chosen.inter.iter().all(|v| v.abs() < 1e-3));
        assert_eq!(chosen.histogram.len(), HISTOGRAM_BINS);

        let degenerate = [grid[1]];
        assert!(density_gap_tune(&view, &truth, &base, &degenerate, &TuneOptions { pairs: 40, seed: 3 }).is_err());
    }

    #[test]
    fn trial_on_disconnected_cliques_is_exact() {
        let g = cliques(2, 10);
        let truth = Partition::from_sizes(&[10, 10]).unwrap();
        let over = ParamOverrides {
            t: Some(8),
            s: Some(12),
            s_oracle: Some(20),
            r_init: Some(2000),
            r_query: Some(2000),
            reps: Some(3),
            master_seed: Some(1),
            ..Default::default()
        };
        let p = default_params(20, 2, 0.5, 0.0, 1.0, &over).unwrap();
        let outcome = run_trial(&g, &truth, &p, Threshold::Fixed(0.05), 3).unwrap();
        assert!(!outcome.failed);
        assert_eq!(outcome.error, 0.0);

        let baseline = BaselineParams {
            k: 2,
            t: 8,
            r: 2000,
            s: 12,
            threshold: 0.2,
            seed: 1,
        };
        let b = run_baseline_trial(&g, &truth, &baseline, 3).unwrap();
        assert_eq!(b.error, 0.0);

        let failing = run_trial(&g, &truth, &p, Threshold::Fixed(100.0), 2).unwrap();
        assert!(failing.failed);
        assert_eq!(failing.error, 0.5);
    }

    #[test]
    fn robustness_with_no_deletions_matches_plain_trial() {
        let (g, truth) = generate_sbm(&SbmSpec::new(60, 2, 0.6, 0.02, 5)).unwrap();
        let over = ParamOverrides {
            t: Some(6),
            s: Some(12),
            s_oracle: Some(30),
            r_init: Some(500),
            r_query: Some(500),
            reps: Some(3),
            master_seed: Some(2),
            ..Default::default()
        };
        let p = default_params(60, 2, 0.5, 0.0, 1.0, &over).unwrap();
        let summary = robustness_experiment(&g, &truth, 0, 1, &p, Threshold::Fixed(0.01), 2).unwrap();
        let plain = OracleParams {
            master_seed: rng::derive_seed(2, "robust-oracle", &[0]),
            ..p.clone()
        };
        let direct = run_trial(&g, &truth, &plain, Threshold::Fixed(0.01), 2).unwrap();
        assert_eq!(summary.errors, vec![direct.error]);
    }

    #[test]
    fn timing_and_access_profile() {
        let g = cliques(2, 10);
        let over = ParamOverrides {
            t: Some(4),
            s: Some(10),
            s_oracle: Some(20),
            r_init: Some(200),
            r_query: Some(200),
            reps: Some(2),
            master_seed: Some(3),
            ..Default::default()
        };
        let p = default_params(20, 2, 0.5, 0.0, 1.0, &over).unwrap();
        let t0 = timing_run(&g, &p, Threshold::Fixed(0.05), 0).unwrap();
        assert!(t0.mean_query.is_none());
        assert!(t0.construct > Duration::ZERO);
        let profile = access_profile(&g, &p, Threshold::Fixed(0.05), &[5, 10, 20]).unwrap();
        assert_eq!(profile.len(), 4);
        assert!(profile.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}
