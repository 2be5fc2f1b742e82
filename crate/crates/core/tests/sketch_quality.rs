//! The sampled dot-product oracle against exact spectral embeddings.

use cluster_oracle::dot_oracle::{default_params, initialize_oracle, query_vector, ParamOverrides};
use cluster_oracle::exact_oracle::{exact_dot, exact_embeddings};
use cluster_oracle::graph::{generate_sbm, AccessCounter, RegularView, SbmSpec};
use cluster_oracle::rng;
use rand::Rng;

fn fraction_within(spec: SbmSpec, overrides: ParamOverrides, tol_scale: f64, pairs: usize) -> (f64, f64) {
    let (g, _) = generate_sbm(&spec).unwrap();
    let n = g.n();
    let k = spec.k;
    let view = RegularView::new(&g);
    let counter = AccessCounter::new(&g);
    let params = default_params(n, k, 0.5, 0.01, 1.0, &overrides).unwrap();
    let sketch = initialize_oracle(&view, &counter, &params).unwrap();
    let emb = exact_embeddings(&view, k).unwrap();
    let alphas: Vec<Vec<f64>> = (0..n).map(|x| query_vector(&view, &counter, x, &sketch)).collect();

    let tol = tol_scale * k as f64 / n as f64;
    let mut rng = rng::stream(spec.seed, "quality-pairs", &[]);
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let x = rng.gen_range(0..n);
        let y = rng.gen_range(0..n);
        let diff = (sketch.dot(&alphas[x], &alphas[y]) - exact_dot(&emb, x, y)).abs();
        worst = worst.max(diff);
        if diff <= tol {
            hits += 1;
        }
    }
    (hits as f64 / pairs as f64, worst / tol)
}

/// Ten times the preset `s_oracle` and `r_query`. The Ψ scaling assumes each
/// cluster receives its share of sketch vertices, so the error is dominated
/// by `s_oracle`; `r_init` matters much less.
fn heavy(t: usize) -> ParamOverrides {
    ParamOverrides {
        t: Some(t),
        s_oracle: Some(600),
        r_init: Some(2_000),
        r_query: Some(10_000),
        reps: Some(5),
        master_seed: Some(17),
        ..Default::default()
    }
}

#[test]
fn separated_clusters_within_tolerance() {
    let spec = SbmSpec::new(150, 3, 0.5, 0.0, 4);
    let (frac, worst) = fraction_within(spec, heavy(20), 0.2, 1000);
    assert!(frac >= 0.99, "fraction {frac}, worst/tol {worst}");
}

#[test]
fn weakly_linked_clusters_within_tolerance() {
    let spec = SbmSpec::new(200, 2, 0.5, 0.002, 8);
    let (frac, worst) = fraction_within(spec, heavy(12), 0.2, 1000);
    assert!(frac >= 0.99, "fraction {frac}, worst/tol {worst}");
}
