//! Dense spectral reference used to check the sublinear oracle on small
//! graphs: exact embeddings, cluster centers, good/bad vertices, and the
//! inequalities the analysis relies on.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{inner_conductance_exact, outer_conductance, Graph, Partition, RegularView, DEFAULT_BRUTE_FORCE_CAP};
use crate::rng;

/// Largest vertex count for which a dense eigensolve is attempted.
pub const DENSE_CAP: usize = 2000;

/// Slack allowed when comparing computed quantities to exact bounds.
const TOL: f64 = 1e-10;

/// `L = I − A_reg/d = (D − A)/d` of the regular view; spectrum in `[0, 2]`.
pub fn normalized_laplacian(view: &RegularView<'_>) -> DMatrix<f64> {
    let g = view.graph();
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    if g.d() == 0 {
        return l;
    }
    let inv_d = 1.0 / g.d() as f64;
    for x in 0..n {
        l[(x, x)] = g.degree(x) as f64 * inv_d;
        for &y in g.neighbors(x) {
            l[(x, y as usize)] = -inv_d;
        }
    }
    l
}

/// `I − M` for the lazy walk `M`; equals half of [`normalized_laplacian`].
pub fn lazy_laplacian(view: &RegularView<'_>) -> DMatrix<f64> {
    normalized_laplacian(view) * 0.5
}

fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Ascending eigenvalues of a dense symmetric matrix.
pub fn eigenvalues_ascending(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Bottom-`k` eigenvectors of the normalized Laplacian; row `x` is `f_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    n: usize,
    k: usize,
    u: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    ambiguous: bool,
}

impl EmbeddingMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The `n × k` matrix `U_k`.
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// Full ascending spectrum of the normalized Laplacian.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Spectrum of the lazy-walk Laplacian `I − M` (half the above).
    pub fn lazy_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|v| v * 0.5).collect()
    }

    /// True when `λ_k` and `λ_{k+1}` coincide within `1e−9`, so the
    /// embedding subspace is not determined by the spectrum.
    pub fn is_ambiguous(&self) -> bool {
        self.ambiguous
    }

    pub fn row(&self, x: usize) -> DVector<f64> {
        self.u.row(x).transpose()
    }

    pub fn norm_sq(&self, x: usize) -> f64 {
        self.u.row(x).norm_squared()
    }

    /// `max |U_kᵀU_k − I|` entrywise.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.u.transpose() * &self.u;
        (gram - DMatrix::identity(self.k, self.k)).amax()
    }

    /// `Σ_x ‖f_x‖²`, which equals `k`.
    pub fn trace(&self) -> f64 {
        self.u.norm_squared()
    }
}

/// Dense eigensolve of the normalized Laplacian of `view`.
///
/// Each eigenvector is signed so its first coordinate with magnitude above
/// `1e−12` is positive.
pub fn exact_embeddings(view: &RegularView<'_>, k: usize) -> Result<EmbeddingMatrix> {
    let n = view.n();
    if n > DENSE_CAP {
        return Err(Error::OverCap { n, cap: DENSE_CAP });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let (eigenvalues, vectors) = sorted_eigen(normalized_laplacian(view));
    let mut u = vectors.columns(0, k).into_owned();
    for mut col in u.column_iter_mut() {
        if let Some(first) = col.iter().copied().find(|v| v.abs() > 1e-12) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
    let ambiguous = k < n && (eigenvalues[k] - eigenvalues[k - 1]).abs() <= 1e-9;
    Ok(EmbeddingMatrix {
        n,
        k,
        u,
        eigenvalues,
        ambiguous,
    })
}

/// `⟨f_x, f_y⟩`.
pub fn exact_dot(emb: &EmbeddingMatrix, x: usize, y: usize) -> f64 {
    emb.u.row(x).dot(&emb.u.row(y))
}

/// Cluster centers `μ_i` and cluster sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterSet {
    pub centers: Vec<DVector<f64>>,
    pub sizes: Vec<usize>,
}

pub fn cluster_centers(emb: &EmbeddingMatrix, partition: &Partition) -> Result<CenterSet> {
    if partition.n() != emb.n {
        return Err(Error::InvalidParameter("partition does not cover the embedding".into()));
    }
    partition.require_nonempty()?;
    let sizes = partition.sizes();
    let mut centers = vec![DVector::zeros(emb.k); partition.k()];
    for x in 0..emb.n {
        centers[partition.label(x)] += emb.row(x);
    }
    for (c, &size) in centers.iter_mut().zip(&sizes) {
        *c /= size as f64;
    }
    Ok(CenterSet { centers, sizes })
}

/// `2√k · (ε/φ²)^{1/3}`, the choice of `α` and `β` under which the
/// pairwise dot-product bounds hold.
pub fn default_alpha(k: usize, eps: f64, phi: f64) -> f64 {
    2.0 * (k as f64).sqrt() * (eps / (phi * phi)).cbrt()
}

/// Used for `α` and `β` when [`default_alpha`] falls outside `(0, 1)`.
pub const FALLBACK_ALPHA: f64 = 0.5;

/// [`default_alpha`] when it lies in `(0, 1)`, else [`FALLBACK_ALPHA`].
///
/// At small `n` the measured `ε/φ²` is far from the asymptotic regime and
/// the formula exceeds 1, which would make every vertex bad.
pub fn audit_alpha(k: usize, eps: f64, phi: f64) -> f64 {
    let a = default_alpha(k, eps, phi);
    if a > 0.0 && a < 1.0 {
        a
    } else {
        FALLBACK_ALPHA
    }
}

/// Good/bad classification of every vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct GoodBadReport {
    pub alpha: f64,
    pub beta: f64,
    /// `‖f_x‖² ≤ (1/α)(k/n)`.
    pub small_norm: Vec<bool>,
    /// `‖f_x − μ_x‖² ≤ 4kε/(βφ²n)`.
    pub near_center: Vec<bool>,
    /// `⟨f_x, μ_x⟩ ≥ 0.96‖μ_x‖²`.
    pub aligned: Vec<bool>,
    pub good: Vec<bool>,
    pub bad: Vec<usize>,
    /// `|B| / n`.
    pub kappa: f64,
}

impl GoodBadReport {
    pub fn good_count(&self) -> usize {
        self.good.iter().filter(|&&g| g).count()
    }
}

pub fn classify_good_bad(
    emb: &EmbeddingMatrix,
    centers: &CenterSet,
    partition: &Partition,
    alpha: f64,
    beta: f64,
    eps: f64,
    phi: f64,
) -> GoodBadReport {
    let n = emb.n;
    let nf = n as f64;
    let kf = emb.k as f64;
    let scale = kf / nf;
    let norm_bound = scale / alpha;
    let center_bound = 4.0 * kf * eps / (beta * phi * phi * nf);
    let mut small_norm = Vec::with_capacity(n);
    let mut near_center = Vec::with_capacity(n);
    let mut aligned = Vec::with_capacity(n);
    for x in 0..n {
        let f = emb.row(x);
        let mu = &centers.centers[partition.label(x)];
        small_norm.push(f.norm_squared() <= norm_bound + TOL * scale);
        near_center.push((&f - mu).norm_squared() <= center_bound + TOL * scale);
        aligned.push(f.dot(mu) >= 0.96 * mu.norm_squared() - TOL * scale);
    }
    let good: Vec<bool> = (0..n).map(|x| small_norm[x] && near_center[x] && aligned[x]).collect();
    let bad: Vec<usize> = (0..n).filter(|&x| !good[x]).collect();
    let kappa = bad.len() as f64 / nf;
    GoodBadReport {
        alpha,
        beta,
        small_norm,
        near_center,
        aligned,
        good,
        bad,
        kappa,
    }
}

/// One audited inequality: how many instances were checked and the
/// smallest `bound − value` (oriented so that nonnegative means it holds).
#[derive(Clone, Debug, PartialEq)]
pub struct AuditEntry {
    pub name: &'static str,
    pub checked: usize,
    pub worst_slack: f64,
    pub pass: bool,
}

impl AuditEntry {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            worst_slack: f64::INFINITY,
            pass: true,
        }
    }

    fn record(&mut self, slack: f64, scale: f64) {
        self.checked += 1;
        self.worst_slack = self.worst_slack.min(slack);
        if slack < -TOL * scale {
            self.pass = false;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaAudit {
    pub entries: Vec<AuditEntry>,
    pub ambiguous: bool,
}

impl LemmaAudit {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, name: &str) -> Option<&AuditEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Number of random unit directions probed by the directional spread check,
/// in addition to the worst direction.
pub const AUDIT_DIRECTIONS: usize = 20;

/// Evaluates the embedding inequalities on an instance with clustering
/// parameters `(ε, φ)`; pairwise bounds are checked over good vertices.
pub fn check_lemma_bounds(
    emb: &EmbeddingMatrix,
    centers: &CenterSet,
    partition: &Partition,
    report: &GoodBadReport,
    eps: f64,
    phi: f64,
    seed: u64,
) -> LemmaAudit {
    let n = emb.n;
    let k = emb.k;
    let nf = n as f64;
    let kf = k as f64;
    let ratio = eps / (phi * phi);
    let root = eps.sqrt() / phi;
    let unit = kf / nf;

    let deviations: Vec<DVector<f64>> = (0..n)
        .map(|x| emb.row(x) - &centers.centers[partition.label(x)])
        .collect();

    let mut total = AuditEntry::new("total_spread");
    let spread: f64 = deviations.iter().map(|d| d.norm_squared()).sum();
    total.record(4.0 * kf * ratio - spread, kf);

    let mut directional = AuditEntry::new("directional_spread");
    let scatter = deviations
        .iter()
        .fold(DMatrix::zeros(k, k), |acc, d| acc + d * d.transpose());
    let worst = SymmetricEigen::new(scatter.clone()).eigenvalues.max();
    directional.record(4.0 * ratio - worst, 1.0);
    let mut rng = rng::stream(seed, "audit-directions", &[]);
    for _ in 0..AUDIT_DIRECTIONS {
        let mut a = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        a /= a.norm();
        let value = (a.transpose() * &scatter * &a)[(0, 0)];
        directional.record(4.0 * ratio - value, 1.0);
    }

    let mut norm = AuditEntry::new("center_norm");
    let mut ortho = AuditEntry::new("center_orthogonality");
    for i in 0..partition.k() {
        let ci = centers.sizes[i] as f64;
        let deviation = (centers.centers[i].norm_squared() - 1.0 / ci).abs();
        norm.record(4.0 * root / ci - deviation, 1.0 / ci);
        for j in i + 1..partition.k() {
            let cj = centers.sizes[j] as f64;
            let value = centers.centers[i].dot(&centers.centers[j]).abs();
            ortho.record(8.0 * root / (ci * cj).sqrt() - value, 1.0 / (ci * cj).sqrt());
        }
    }

    let mut intra = AuditEntry::new("intra_dot_lower");
    let mut inter = AuditEntry::new("inter_dot_upper");
    let good: Vec<usize> = (0..n).filter(|&x| report.good[x]).collect();
    let cross = (kf.sqrt() / nf) * ratio.powf(1.0 / 6.0);
    let inter_bound = |ci: f64, cj: f64| {
        cross
            + (2f64.sqrt() * kf.powf(0.25) / nf.sqrt()) * ratio.cbrt() * ((1.0 + 4.0 * root) / cj).sqrt()
            + 8.0 * root / (ci * cj).sqrt()
    };
    for (a, &x) in good.iter().enumerate() {
        let fx = emb.u.row(x);
        let i = partition.label(x);
        for &y in &good[a + 1..] {
            let value = fx.dot(&emb.u.row(y));
            let j = partition.label(y);
            let ci = centers.sizes[i] as f64;
            if i == j {
                let bound = 0.96 * (1.0 - 4.0 * root) / ci - cross;
                intra.record(value - bound, unit);
            } else {
                let cj = centers.sizes[j] as f64;
                let bound = inter_bound(ci, cj).min(inter_bound(cj, ci));
                inter.record(bound - value, unit);
            }
        }
    }

    LemmaAudit {
        entries: vec![total, directional, norm, ortho, intra, inter],
        ambiguous: emb.ambiguous,
    }
}

/// How the inner conductance used in an audit was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhiSource {
    /// Exhaustive enumeration (every cluster within the brute-force cap).
    Exact,
    /// Cheeger lower bound `λ₂/2` for at least one cluster; conservative.
    CheegerLower,
}

/// Measured clustering parameters of a ground-truth partition.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringMeasure {
    /// Largest outer conductance over the clusters.
    pub eps: f64,
    /// Smallest inner conductance (or its lower bound) over the clusters.
    pub phi: f64,
    pub source: PhiSource,
    pub per_cluster_phi: Vec<f64>,
}

/// `λ₂` of the normalized Laplacian of the cluster induced on `members`,
/// keeping the parent's degree bound (outgoing edges become self-loops).
pub fn cluster_lambda2(graph: &Graph, members: &[usize]) -> Result<f64> {
    if members.len() > DENSE_CAP {
        return Err(Error::OverCap {
            n: members.len(),
            cap: DENSE_CAP,
        });
    }
    if members.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let sub = graph.induced_subgraph(members);
    let values = eigenvalues_ascending(normalized_laplacian(&RegularView::new(&sub)));
    Ok(values[1])
}

pub fn measure_clustering(graph: &Graph, partition: &Partition) -> Result<ClusteringMeasure> {
    partition.require_nonempty()?;
    let clusters = partition.clusters();
    let mut eps: f64 = 0.0;
    let mut per_cluster_phi = Vec::with_capacity(clusters.len());
    let mut source = PhiSource::Exact;
    for members in &clusters {
        eps = eps.max(outer_conductance(graph, members)?);
        let phi = if members.len() <= DEFAULT_BRUTE_FORCE_CAP {
            inner_conductance_exact(&graph.induced_subgraph(members), &(0..members.len()).collect::<Vec<_>>(), DEFAULT_BRUTE_FORCE_CAP)?
        } else {
            source = PhiSource::CheegerLower;
            cluster_lambda2(graph, members)? / 2.0
        };
        per_cluster_phi.push(phi);
    }
    let phi = per_cluster_phi.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ClusteringMeasure {
        eps,
        phi,
        source,
        per_cluster_phi,
    })
}

/// Spectral comparison of one cluster before and after edge deletion.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterPerturbation {
    pub size: usize,
    pub deleted: usize,
    /// `λ₂` of the lazy Laplacian of the cluster, before and after.
    pub lazy_lambda2_before: f64,
    pub lazy_lambda2_after: f64,
    /// `(√10 / 2d)·c`.
    pub weyl_bound: f64,
    pub weyl_pass: bool,
    /// Brute-force inner conductance after deletion and the Cheeger lower
    /// bound `λ₂/2` from the normalized Laplacian, when the cluster is small
    /// enough to enumerate.
    pub cheeger: Option<(f64, f64)>,
}

impl ClusterPerturbation {
    pub fn delta(&self) -> f64 {
        (self.lazy_lambda2_after - self.lazy_lambda2_before).abs()
    }

    pub fn cheeger_pass(&self) -> bool {
        self.cheeger.is_none_or(|(phi, lower)| phi + TOL >= lower)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbAudit {
    pub clusters: Vec<ClusterPerturbation>,
}

impl PerturbAudit {
    pub fn all_pass(&self) -> bool {
        self.clusters.iter().all(|c| c.weyl_pass && c.cheeger_pass())
    }
}

/// Checks the eigenvalue perturbation bound and the Cheeger lower bound on
/// every cluster. `deleted_per_cluster[i]` is the number of intra-cluster
/// edges removed from cluster `i`.
pub fn check_perturbation_bounds(
    before: &RegularView<'_>,
    after: &RegularView<'_>,
    partition: &Partition,
    deleted_per_cluster: &[usize],
) -> Result<PerturbAudit> {
    if before.n() != after.n() || before.d() != after.d() {
        return Err(Error::InvalidParameter("perturbed graph must keep n and d".into()));
    }
    if deleted_per_cluster.len() != partition.k() {
        return Err(Error::InvalidParameter("one deletion count per cluster expected".into()));
    }
    let d = before.d().max(1) as f64;
    let mut clusters = Vec::with_capacity(partition.k());
    for (members, &c) in partition.clusters().iter().zip(deleted_per_cluster) {
        let lb = cluster_lambda2(before.graph(), members)?;
        let la = cluster_lambda2(after.graph(), members)?;
        let weyl_bound = 10f64.sqrt() / (2.0 * d) * c as f64;
        let (lazy_before, lazy_after) = if members.len() < 2 { (0.0, 0.0) } else { (lb / 2.0, la / 2.0) };
        let weyl_pass = (lazy_after - lazy_before).abs() <= weyl_bound + TOL;
        let cheeger = if members.len() >= 2 && members.len() <= DEFAULT_BRUTE_FORCE_CAP {
            let sub = after.graph().induced_subgraph(members);
            let all: Vec<usize> = (0..members.len()).collect();
            Some((inner_conductance_exact(&sub, &all, DEFAULT_BRUTE_FORCE_CAP)?, la / 2.0))
        } else {
            None
        };
        clusters.push(ClusterPerturbation {
            size: members.len(),
            deleted: c,
            lazy_lambda2_before: lazy_before,
            lazy_lambda2_after: lazy_after,
            weyl_bound,
            weyl_pass,
            cheeger,
        });
    }
    Ok(PerturbAudit { clusters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{delete_edges, generate_sbm, PerturbationMode, PerturbationSpec, SbmSpec};

    fn cliques(count: usize, size: usize) -> Graph {
        let edges = (0..count).flat_map(|b| {
            (0..size).flat_map(move |u| (u + 1..size).map(move |v| (b * size + u, b * size + v)))
        });
        Graph::from_edges(count * size, edges, None).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)), None).unwrap()
    }

    #[test]
    fn two_k4_embeddings() {
        let g = cliques(2, 4);
        let emb = exact_embeddings(&RegularView::new(&g), 2).unwrap();
        assert!(emb.orthonormality_error() < 1e-9);
        assert!((emb.trace() - 2.0).abs() < 1e-9);
        for x in 0..8 {
            for y in 0..8 {
                let expected = if x / 4 == y / 4 { 0.25 } else { 0.0 };
                assert!((exact_dot(&emb, x, y) - expected).abs() < 1e-12);
            }
        }
        assert!(!emb.is_ambiguous());
    }

    #[test]
    fn cycle_spectrum() {
        let g = cycle(6);
        let emb = exact_embeddings(&RegularView::new(&g), 2).unwrap();
        let lazy = emb.lazy_eigenvalues();
        assert!(lazy[0].abs() < 1e-12);
        let expected = (1.0 - (2.0 * std::f64::consts::PI / 6.0).cos()) / 2.0;
        assert!((expected - 0.25).abs() < 1e-15);
        assert!((lazy[1] - 0.25).abs() < 1e-12);
        // λ₂ = λ₃ for a cycle, so k = 2 is spectrally ambiguous.
        assert!(emb.is_ambiguous());
        assert!(emb.eigenvalues().iter().all(|&v| (-1e-12..=2.0 + 1e-12).contains(&v)));
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let g = cycle(9);
        let view = RegularView::new(&g);
        let a = exact_embeddings(&view, 3).unwrap();
        let b = exact_embeddings(&view, 3).unwrap();
        assert_eq!(a, b);
        for col in a.u().column_iter() {
            let first = col.iter().find(|v| v.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn rejects_over_cap() {
        let g = Graph::from_edges(DENSE_CAP + 1, [(0, 1)], None).unwrap();
        assert!(matches!(exact_embeddings(&RegularView::new(&g), 2), Err(Error::OverCap { .. })));
    }

    #[test]
    fn centers_and_good_vertices_on_disconnected_cliques() {
        let g = cliques(2, 5);
        let p = Partition::from_sizes(&[5, 5]).unwrap();
        let emb = exact_embeddings(&RegularView::new(&g), 2).unwrap();
        let centers = cluster_centers(&emb, &p).unwrap();
        for c in &centers.centers {
            assert!((c.norm_squared() - 0.2).abs() < 1e-12);
        }
        let m = measure_clustering(&g, &p).unwrap();
        assert_eq!(m.eps, 0.0);
        assert_eq!(m.source, PhiSource::Exact);
        let report = classify_good_bad(&emb, &centers, &p, 0.5, 0.5, m.eps, m.phi);
        assert!(report.bad.is_empty());
        let audit = check_lemma_bounds(&emb, &centers, &p, &report, m.eps, m.phi, 1);
        assert!(audit.all_pass(), "{audit:?}");
        assert_eq!(audit.entry("intra_dot_lower").unwrap().checked, 20);
        assert_eq!(audit.entry("inter_dot_upper").unwrap().checked, 25);
    }

    #[test]
    fn mean_deviation_is_zero_and_vanishing_alpha_keeps_all_norms() {
        let (g, p) = generate_sbm(&SbmSpec::new(60, 3, 0.5, 0.05, 4)).unwrap();
        let emb = exact_embeddings(&RegularView::new(&g), 3).unwrap();
        let centers = cluster_centers(&emb, &p).unwrap();
        for (i, members) in p.clusters().iter().enumerate() {
            let sum = members.iter().fold(DVector::zeros(3), |acc, &x| acc + emb.row(x) - &centers.centers[i]);
            assert!(sum.amax() < 1e-12);
        }
        let report = classify_good_bad(&emb, &centers, &p, 1e-300, 0.5, 0.1, 0.5);
        assert!(report.small_norm.iter().all(|&b| b));
    }

    #[test]
    fn singleton_center_is_its_embedding() {
        let g = cliques(1, 4);
        let p = Partition::new(2, vec![0, 0, 0, 1]).unwrap();
        let emb = exact_embeddings(&RegularView::new(&g), 2).unwrap();
        let centers = cluster_centers(&emb, &p).unwrap();
        assert!((&centers.centers[1] - emb.row(3)).amax() < 1e-15);
        let empty = Partition::new(3, vec![0, 0, 1, 1]).unwrap();
        assert!(matches!(cluster_centers(&emb, &empty), Err(Error::EmptyCluster(2))));
    }

    #[test]
    fn perturbation_bounds_on_two_k20() {
        let g = cliques(2, 20);
        let p = Partition::from_sizes(&[20, 20]).unwrap();
        let none = check_perturbation_bounds(&RegularView::new(&g), &RegularView::new(&g), &p, &[0, 0]).unwrap();
        assert!(none.clusters.iter().all(|c| c.delta() == 0.0));

        let spec = PerturbationSpec {
            mode: PerturbationMode::PerClusterVertex { del_num: 1 },
            cluster_cap: None,
            seed: 2,
        };
        let out = delete_edges(&g, &p, &spec).unwrap();
        let audit = check_perturbation_bounds(
            &RegularView::new(&g),
            &RegularView::new(&out.graph),
            &p,
            &out.deleted_per_cluster(&p),
        )
        .unwrap();
        for c in &audit.clusters {
            assert_eq!(c.deleted, 1);
            assert!((c.weyl_bound - 10f64.sqrt() / 38.0).abs() < 1e-15);
            assert!(c.delta() > 0.0);
        }
        assert!(audit.all_pass(), "{audit:?}");
    }

    #[test]
    fn audit_alpha_stays_in_unit_interval() {
        let small = audit_alpha(2, 1e-6, 0.5);
        assert!((small - default_alpha(2, 1e-6, 0.5)).abs() < 1e-15);
        assert!(small > 0.0 && small < 1.0);
        assert_eq!(audit_alpha(3, 0.03, 0.1), FALLBACK_ALPHA);
        assert_eq!(audit_alpha(3, 0.0, 0.5), FALLBACK_ALPHA);
    }
}
