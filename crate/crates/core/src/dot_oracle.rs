//! Approximate spectral dot products from random-walk statistics.
//!
//! Preprocessing draws a sample multiset `I_S`, stores `reps` independent
//! estimates `Q̂_i` of the walk distributions of the samples, and inverts the
//! top-`k` part of the collision-probability Gram matrix into `Ψ`. A query
//! for `x` runs fresh walks from `x`, projects them onto each `Q̂_i`, takes
//! the entrywise median `α_x`, and returns `α_xᵀ Ψ α_y`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::codec::{
    check_magic, expect_eof, get_f64, get_len, get_u64, put_f64, put_magic, put_u64, put_usize,
};
use crate::error::{Error, Result};
use crate::graph::{AccessCounter, RegularView};
use crate::rng;
use crate::stats::entrywise_lower_median;
use crate::walks::{
    estimate_collision_probabilities, estimate_transition_matrix, run_random_walks,
    DistributionMatrix, EmpiricalDistribution, RowIndex,
};

/// Cap applied to the asymptotic sampling formulas.
pub const FORMULA_CAP: usize = 1_000_000;

/// Largest `s_oracle` accepted by [`initialize_oracle`]; the Gram matrix is
/// dense and eigendecomposed.
pub const MAX_SKETCH_SAMPLES: usize = 4096;

/// Relative floor below which an eigenvalue of `(n/s)·G` counts as zero.
pub const SPECTRUM_FLOOR: f64 = 1e-12;

/// All tunable quantities of the dot-product and clustering oracles.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleParams {
    pub k: usize,
    pub phi: f64,
    pub eps: f64,
    pub gamma: f64,
    pub delta: f64,
    pub xi: f64,
    /// Walk length.
    pub t: usize,
    /// Size of the clustering sample `S`.
    pub s: usize,
    /// Size of the sketch sample multiset `I_S`.
    pub s_oracle: usize,
    pub r_init: usize,
    pub r_query: usize,
    /// Median repetitions.
    pub reps: usize,
    pub master_seed: u64,
}

/// Values that replace the formula defaults in [`default_params`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamOverrides {
    pub delta: Option<f64>,
    pub xi: Option<f64>,
    pub t: Option<usize>,
    pub s: Option<usize>,
    pub s_oracle: Option<usize>,
    pub r_init: Option<usize>,
    pub r_query: Option<usize>,
    pub reps: Option<usize>,
    pub master_seed: Option<u64>,
}

/// `⌈20 ln n / φ²⌉`, taking `ln n` directly so very large `n` can be
/// evaluated.
pub fn walk_length(ln_n: f64, phi: f64) -> usize {
    (20.0 * ln_n / (phi * phi)).ceil() as usize
}

/// `⌈10 k ln k / γ⌉`, with `ln k` replaced by 1 when it is smaller (only
/// `k = 2`), so the sample is never below `10k / γ`.
pub fn cluster_sample_size(k: usize, gamma: f64) -> usize {
    let lnk = (k as f64).ln().max(1.0);
    (10.0 * k as f64 * lnk / gamma).ceil() as usize
}

fn capped(v: f64) -> usize {
    if v.is_finite() && v < FORMULA_CAP as f64 {
        (v.ceil() as usize).max(1)
    } else {
        FORMULA_CAP
    }
}

/// Concrete parameters from the asymptotic expressions, every `O(·)`
/// constant set to 1 and sampling counts capped at [`FORMULA_CAP`].
/// Overrides are applied verbatim.
pub fn default_params(
    n: usize,
    k: usize,
    phi: f64,
    eps: f64,
    gamma: f64,
    overrides: &ParamOverrides,
) -> Result<OracleParams> {
    if n < 2 || k < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2 and k >= 2, got n={n}, k={k}")));
    }
    let nf = n as f64;
    let kf = k as f64;
    let ratio = eps / (phi * phi);
    let delta = overrides.delta.unwrap_or(0.5);
    let xi = overrides.xi.unwrap_or(gamma.sqrt() / 1000.0);
    let xi2 = xi * xi;
    let reps = overrides.reps.unwrap_or_else(|| nf.log2().ceil() as usize);
    let params = OracleParams {
        k,
        phi,
        eps,
        gamma,
        delta,
        xi,
        t: overrides.t.unwrap_or_else(|| walk_length(nf.ln(), phi)),
        s: overrides.s.unwrap_or_else(|| cluster_sample_size(k, gamma)),
        s_oracle: overrides
            .s_oracle
            .unwrap_or_else(|| capped(nf.powf(480.0 * ratio) * nf.ln() * kf.powi(8) / xi2)),
        r_init: overrides
            .r_init
            .unwrap_or_else(|| capped(nf.powf(1.0 - delta + 980.0 * ratio) * kf.powi(17) / xi2)),
        r_query: overrides
            .r_query
            .unwrap_or_else(|| capped(nf.powf(delta + 500.0 * ratio) * kf.powi(9) / xi2)),
        reps: reps.max(1),
        master_seed: overrides.master_seed.unwrap_or(0),
    };
    params.validate(n)?;
    Ok(params)
}

impl OracleParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return bad("phi must lie in (0, 1]");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad("eps must be nonnegative");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        let nf = n as f64;
        if !(self.xi > nf.powi(-5) && self.xi < 1.0) {
            return bad("xi must lie in (1/n^5, 1)");
        }
        let counts = [
            ("t", self.t),
            ("s", self.s),
            ("s_oracle", self.s_oracle),
            ("r_init", self.r_init),
            ("r_query", self.r_query),
            ("reps", self.reps),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidParameter(format!("{name} must be at least 1")));
        }
        Ok(())
    }
}

/// The preprocessed dot-product structure `{Ψ, Q̂_1, …, Q̂_reps}`.
#[derive(Clone, Debug)]
pub struct SketchD {
    n: usize,
    d: usize,
    params: OracleParams,
    sample_ids: Vec<usize>,
    psi: DMatrix<f64>,
    q_mats: Vec<DistributionMatrix>,
    row_indices: Vec<RowIndex>,
}

impl PartialEq for SketchD {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.d == other.d
            && self.params == other.params
            && self.sample_ids == other.sample_ids
            && self.psi == other.psi
            && self.q_mats == other.q_mats
    }
}

impl SketchD {
    fn assemble(
        n: usize,
        d: usize,
        params: OracleParams,
        sample_ids: Vec<usize>,
        psi: DMatrix<f64>,
        q_mats: Vec<DistributionMatrix>,
    ) -> Self {
        let row_indices = q_mats.iter().map(DistributionMatrix::row_index).collect();
        Self {
            n,
            d,
            params,
            sample_ids,
            psi,
            q_mats,
            row_indices,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn params(&self) -> &OracleParams {
        &self.params
    }

    /// The sample multiset `I_S`.
    pub fn sample_ids(&self) -> &[usize] {
        &self.sample_ids
    }

    pub fn psi(&self) -> &DMatrix<f64> {
        &self.psi
    }

    pub fn q_mats(&self) -> &[DistributionMatrix] {
        &self.q_mats
    }

    /// `α_xᵀ Ψ α_y` for precomputed query vectors.
    pub fn dot(&self, alpha_x: &[f64], alpha_y: &[f64]) -> f64 {
        let ax = nalgebra::DVectorView::from_slice(alpha_x, alpha_x.len());
        let ay = nalgebra::DVectorView::from_slice(alpha_y, alpha_y.len());
        ax.dot(&(&self.psi * ay))
    }

    /// `Ψ α`, so that repeated products against `α` cost one dot each.
    pub fn psi_times(&self, alpha: &[f64]) -> Vec<f64> {
        let a = nalgebra::DVectorView::from_slice(alpha, alpha.len());
        (&self.psi * a).as_slice().to_vec()
    }

    fn check_graph(&self, view: &RegularView<'_>) -> Result<()> {
        if view.n() != self.n || view.d() != self.d {
            return Err(Error::FingerprintMismatch(format!(
                "sketch built for n={}, d={}; graph has n={}, d={}",
                self.n,
                self.d,
                view.n(),
                view.d()
            )));
        }
        Ok(())
    }
}

/// Builds `Ψ` from a Gram estimate: eigendecompose `(n/s)·G`, keep the top
/// `k` eigenpairs, and return `(n/s)·W_k Σ_k⁻² W_kᵀ` together with the kept
/// eigenvalues in decreasing order.
pub fn psi_from_gram(gram: &DMatrix<f64>, n: usize, k: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let s = gram.nrows();
    if k > s {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds s_oracle = {s}")));
    }
    let scale = n as f64 / s as f64;
    let scaled = (gram + gram.transpose()) * (0.5 * scale);
    let eig = SymmetricEigen::new(scaled);
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let floor = SPECTRUM_FLOOR * top.abs();
    let kept: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    if let Some(&bad) = kept.iter().find(|&&v| !(v > floor)) {
        return Err(Error::DegenerateSpectrum { eigenvalue: bad, floor });
    }
    let mut psi = DMatrix::zeros(s, s);
    for (&i, &lambda) in order[..k].iter().zip(&kept) {
        let w = eig.eigenvectors.column(i);
        psi += (w * w.transpose()) * (scale / (lambda * lambda));
    }
    psi = (&psi + psi.transpose()) * 0.5;
    Ok((psi, kept))
}

/// Runs the preprocessing walks and returns the sketch.
pub fn initialize_oracle(
    view: &RegularView<'_>,
    counter: &AccessCounter,
    params: &OracleParams,
) -> Result<SketchD> {
    let n = view.n();
    params.validate(n)?;
    if params.s_oracle > MAX_SKETCH_SAMPLES {
        return Err(Error::OverCap {
            n: params.s_oracle,
            cap: MAX_SKETCH_SAMPLES,
        });
    }
    let seed = params.master_seed;
    let mut sample_rng = rng::stream(seed, "oracle-samples", &[]);
    let sample_ids: Vec<usize> = (0..params.s_oracle).map(|_| sample_rng.gen_range(0..n)).collect();

    let q_mats: Vec<DistributionMatrix> = (0..params.reps)
        .map(|i| {
            let col_seed = rng::derive_seed(seed, "oracle-q", &[i as u64]);
            estimate_transition_matrix(view, counter, &sample_ids, params.r_init, params.t, col_seed)
        })
        .collect();
    let gram = estimate_collision_probabilities(
        view,
        counter,
        &sample_ids,
        params.r_init,
        params.t,
        params.reps,
        rng::derive_seed(seed, "oracle-gram", &[]),
    );
    let (psi, _) = psi_from_gram(gram.matrix(), n, params.k)?;
    Ok(SketchD::assemble(n, view.d(), params.clone(), sample_ids, psi, q_mats))
}

/// `α_x`: entrywise lower median over reps of `Q̂_iᵀ m̂_x^i`, where walk
/// batch `i` draws from the stream `(master_seed, "query", x, i)`.
pub fn query_vector(
    view: &RegularView<'_>,
    counter: &AccessCounter,
    x: usize,
    sketch: &SketchD,
) -> Vec<f64> {
    let p = &sketch.params;
    let projections: Vec<Vec<f64>> = sketch
        .row_indices
        .iter()
        .enumerate()
        .map(|(i, rows)| {
            let mut rng = rng::stream(p.master_seed, "query", &[x as u64, i as u64]);
            let m = run_random_walks(view, counter, p.r_query, p.t, x, &mut rng);
            rows.transpose_times(&m)
        })
        .collect();
    entrywise_lower_median(&projections)
}

/// Approximate `⟨f_x, f_y⟩`.
pub fn spectral_dot_product(
    view: &RegularView<'_>,
    counter: &AccessCounter,
    x: usize,
    y: usize,
    sketch: &SketchD,
) -> f64 {
    let ax = query_vector(view, counter, x, sketch);
    let ay = query_vector(view, counter, y, sketch);
    sketch.dot(&ax, &ay)
}

/// Checks that `sketch` was built for a graph with the same `(n, d)`.
pub fn check_sketch_graph(sketch: &SketchD, view: &RegularView<'_>) -> Result<()> {
    sketch.check_graph(view)
}

const SKETCH_MAGIC: &[u8; 8] = b"SCOSKTCH";
const SKETCH_VERSION: u32 = 1;
const LEN_LIMIT: usize = 1 << 32;

pub(crate) fn write_params<W: Write>(out: &mut W, p: &OracleParams) -> Result<()> {
    put_usize(out, p.k)?;
    for v in [p.phi, p.eps, p.gamma, p.delta, p.xi] {
        put_f64(out, v)?;
    }
    for v in [p.t, p.s, p.s_oracle, p.r_init, p.r_query, p.reps] {
        put_usize(out, v)?;
    }
    put_u64(out, p.master_seed)
}

pub(crate) fn read_params<R: Read>(input: &mut R) -> Result<OracleParams> {
    let k = get_len(input, LEN_LIMIT)?;
    let mut f = [0.0; 5];
    for v in f.iter_mut() {
        *v = get_f64(input)?;
    }
    let mut c = [0usize; 6];
    for v in c.iter_mut() {
        *v = get_len(input, LEN_LIMIT)?;
    }
    Ok(OracleParams {
        k,
        phi: f[0],
        eps: f[1],
        gamma: f[2],
        delta: f[3],
        xi: f[4],
        t: c[0],
        s: c[1],
        s_oracle: c[2],
        r_init: c[3],
        r_query: c[4],
        reps: c[5],
        master_seed: get_u64(input)?,
    })
}

/// Writes the sketch in its versioned binary format.
pub fn save_sketch<W: Write>(sketch: &SketchD, mut out: W) -> Result<()> {
    let out = &mut out;
    put_magic(out, SKETCH_MAGIC, SKETCH_VERSION)?;
    put_usize(out, sketch.n)?;
    put_usize(out, sketch.d)?;
    put_usize(out, sketch.params.k)?;
    put_usize(out, sketch.params.s_oracle)?;
    put_usize(out, sketch.params.reps)?;
    write_params(out, &sketch.params)?;
    for &x in &sketch.sample_ids {
        put_usize(out, x)?;
    }
    let s = sketch.psi.nrows();
    for r in 0..s {
        for c in 0..s {
            put_f64(out, sketch.psi[(r, c)])?;
        }
    }
    for q in &sketch.q_mats {
        put_usize(out, q.len())?;
        for col in q.columns() {
            put_usize(out, col.origin())?;
            put_usize(out, col.walks())?;
            put_usize(out, col.length())?;
            put_usize(out, col.support().len())?;
            for &(v, f) in col.support() {
                put_u64(out, u64::from(v))?;
                put_f64(out, f)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a sketch and validates it against the graph it will be queried on.
pub fn load_sketch<R: Read>(mut input: R, view: &RegularView<'_>) -> Result<SketchD> {
    let sketch = read_sketch(&mut input)?;
    expect_eof(&mut input)?;
    sketch.check_graph(view)?;
    Ok(sketch)
}

pub(crate) fn read_sketch<R: Read>(input: &mut R) -> Result<SketchD> {
    check_magic(input, SKETCH_MAGIC, SKETCH_VERSION)?;
    let n = get_len(input, LEN_LIMIT)?;
    let d = get_len(input, LEN_LIMIT)?;
    let k = get_len(input, LEN_LIMIT)?;
    let s = get_len(input, MAX_SKETCH_SAMPLES)?;
    let reps = get_len(input, 1 << 16)?;
    let params = read_params(input)?;
    if params.k != k || params.s_oracle != s || params.reps != reps {
        return Err(Error::Format("header disagrees with stored parameters".into()));
    }
    let sample_ids = (0..s)
        .map(|_| {
            let x = get_len(input, LEN_LIMIT)?;
            if x >= n {
                return Err(Error::Format(format!("sample vertex {x} out of range")));
            }
            Ok(x)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut psi = DMatrix::zeros(s, s);
    for r in 0..s {
        for c in 0..s {
            psi[(r, c)] = get_f64(input)?;
        }
    }
    let mut q_mats = Vec::with_capacity(reps);
    for _ in 0..reps {
        let cols = get_len(input, MAX_SKETCH_SAMPLES)?;
        if cols != s {
            return Err(Error::Format(format!("Q matrix has {cols} columns, expected {s}")));
        }
        let mut columns = Vec::with_capacity(cols);
        for _ in 0..cols {
            let origin = get_len(input, LEN_LIMIT)?;
            let walks = get_len(input, LEN_LIMIT)?;
            let length = get_len(input, LEN_LIMIT)?;
            let support_len = get_len(input, walks)?;
            let mut support = Vec::with_capacity(support_len);
            for _ in 0..support_len {
                let v = get_len(input, n.saturating_sub(1))?;
                support.push((v as u32, get_f64(input)?));
            }
            columns.push(EmpiricalDistribution::from_parts(origin, walks, length, support)?);
        }
        q_mats.push(DistributionMatrix::from_columns(columns));
    }
    Ok(SketchD::assemble(n, d, params, sample_ids, psi, q_mats))
}
