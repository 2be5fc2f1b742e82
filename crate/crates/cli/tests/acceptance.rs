//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.
//!
//! Criteria 4, 6 and 7 share one tuning run, so everything lives in a
//! single test function and runs in order.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use cluster_oracle::cluster_oracle::Threshold;
use cluster_oracle::dot_oracle::{default_params, initialize_oracle, query_vector, OracleParams, ParamOverrides};
use cluster_oracle::eval::{
    access_profile, density_gap_tune, robustness_experiment, run_baseline_trial, run_trial, tune_baseline_threshold,
    BaselineParams, GridEntry, TuneOptions,
};
use cluster_oracle::exact_oracle::{
    audit_alpha, check_lemma_bounds, check_perturbation_bounds, classify_good_bad, cluster_centers, cluster_lambda2,
    eigenvalues_ascending, exact_dot, exact_embeddings, measure_clustering, normalized_laplacian,
};
use cluster_oracle::graph::{
    delete_edges, generate_sbm, inner_conductance_exact, AccessCounter, Graph, Partition, PerturbationMode,
    PerturbationSpec, RegularView, SbmSpec, DEFAULT_BRUTE_FORCE_CAP,
};
use cluster_oracle::rng;
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

/// Writes straight to stdout so the report shows even when output is captured.
fn say(line: String) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
}

fn record(results: &mut Vec<bool>, id: usize, start: Instant, v: Verdict) {
    let status = if v.pass { "PASS" } else { "FAIL" };
    say(format!(
        "criterion {id}: {status} ({:.1}s) {}",
        start.elapsed().as_secs_f64(),
        v.detail
    ));
    results.push(v.pass);
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn disjoint_cliques(sizes: &[usize]) -> (Graph, Partition) {
    let mut edges = Vec::new();
    let mut offset = 0;
    for &s in sizes {
        for u in 0..s {
            for v in u + 1..s {
                edges.push((offset + u, offset + v));
            }
        }
        offset += s;
    }
    let g = Graph::from_edges(offset, edges, None).unwrap();
    (g, Partition::from_sizes(sizes).unwrap())
}

/// Cycle split into `k` contiguous arcs.
fn cycle(n: usize, k: usize) -> (Graph, Partition) {
    let g = Graph::from_edges(n, (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))), None).unwrap();
    let labels = (0..n).map(|i| i * k / n).collect();
    (g, Partition::new(k, labels).unwrap())
}

fn exact_invariants() -> Verdict {
    let mut instances: Vec<(String, Graph, Partition)> = Vec::new();
    let mut rng = rng::stream(1, "acceptance-cliques", &[]);
    for i in 0..6 {
        let k = 2 + i % 3;
        let sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(4..=8)).collect();
        let (g, p) = disjoint_cliques(&sizes);
        instances.push((format!("cliques{sizes:?}"), g, p));
    }
    for n in [6, 8, 10, 12, 16, 20] {
        let (g, p) = cycle(n, 2);
        instances.push((format!("cycle{n}"), g, p));
    }
    for (i, (n, k)) in [(24, 2), (36, 3), (60, 2), (100, 2), (150, 3), (200, 2), (250, 3), (300, 3)]
        .into_iter()
        .enumerate()
    {
        let (g, p) = generate_sbm(&SbmSpec::new(n, k, 0.3, 0.01, 100 + i as u64)).unwrap();
        instances.push((format!("sbm{n}/{k}"), g, p));
    }

    let mut failures = Vec::new();
    let mut worst_orth: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    let mut sandwiches = 0;
    for (name, g, p) in &instances {
        let view = RegularView::new(g);
        let emb = exact_embeddings(&view, p.k()).unwrap();
        worst_orth = worst_orth.max(emb.orthonormality_error());
        worst_trace = worst_trace.max((emb.trace() - p.k() as f64).abs());
        let spectrum = eigenvalues_ascending(normalized_laplacian(&view));
        if spectrum.iter().any(|&l| !(-1e-9..=2.0 + 1e-9).contains(&l)) {
            failures.push(format!("{name}: eigenvalue outside [0,2]"));
        }
        for members in p.clusters() {
            if members.len() < 2 || members.len() > 12 {
                continue;
            }
            let lambda2 = cluster_lambda2(g, &members).unwrap();
            let sub = g.induced_subgraph(&members);
            let all: Vec<usize> = (0..members.len()).collect();
            let phi = inner_conductance_exact(&sub, &all, DEFAULT_BRUTE_FORCE_CAP).unwrap();
            sandwiches += 1;
            if !(lambda2 / 2.0 <= phi + 1e-12 && phi <= (2.0 * lambda2).sqrt() + 1e-12) {
                failures.push(format!("{name}: Cheeger λ₂={lambda2} φ={phi}"));
            }
        }
    }
    if worst_orth > 1e-9 {
        failures.push(format!("orthonormality error {worst_orth:e}"));
    }
    if worst_trace > 1e-9 {
        failures.push(format!("trace error {worst_trace:e}"));
    }
    Verdict {
        pass: failures.is_empty(),
        detail: format!(
            "instances={} orth_err={worst_orth:.2e} trace_err={worst_trace:.2e} cheeger_checks={sandwiches} {}",
            instances.len(),
            failures.join("; ")
        ),
    }
}

fn lemma_audit() -> Verdict {
    let mut failures = Vec::new();
    let mut min_slack = f64::INFINITY;
    let mut pairs = 0;
    let mut good = 0;
    for seed in 0..10 {
        let (g, truth) = generate_sbm(&SbmSpec::new(300, 3, 0.2, 0.005, 500 + seed)).unwrap();
        let view = RegularView::new(&g);
        let m = measure_clustering(&g, &truth).unwrap();
        let emb = exact_embeddings(&view, 3).unwrap();
        let centers = cluster_centers(&emb, &truth).unwrap();
        let alpha = audit_alpha(3, m.eps, m.phi);
        let report = classify_good_bad(&emb, &centers, &truth, alpha, alpha, m.eps, m.phi);
        good += report.good_count();
        let audit = check_lemma_bounds(&emb, &centers, &truth, &report, m.eps, m.phi, seed);
        for e in &audit.entries {
            if e.checked == 0 {
                failures.push(format!("seed {seed}: {} checked nothing", e.name));
            }
            min_slack = min_slack.min(e.worst_slack);
            if e.name.ends_with("dot_lower") || e.name.ends_with("dot_upper") {
                pairs += e.checked;
            }
            if !e.pass || e.worst_slack < 0.0 {
                failures.push(format!("seed {seed}: {} slack {:e}", e.name, e.worst_slack));
            }
        }
    }
    Verdict {
        pass: failures.is_empty(),
        detail: format!(
            "instances=10 good_vertices={good} pair_checks={pairs} min_slack={min_slack:.3e} {}",
            failures.join("; ")
        ),
    }
}

fn dot_fidelity() -> Verdict {
    let (g, truth) = disjoint_cliques(&[20, 20]);
    let view = RegularView::new(&g);
    let counter = AccessCounter::new(&g);
    let overrides = ParamOverrides {
        t: Some(5),
        s_oracle: Some(200),
        r_init: Some(100_000),
        r_query: Some(100_000),
        reps: Some(7),
        master_seed: Some(3),
        ..Default::default()
    };
    let params = default_params(40, 2, 0.5, 0.0, 1.0, &overrides).unwrap();
    let sketch = initialize_oracle(&view, &counter, &params).unwrap();
    let emb = exact_embeddings(&view, 2).unwrap();
    let alphas: Vec<Vec<f64>> = (0..40).map(|x| query_vector(&view, &counter, x, &sketch)).collect();
    let tol = 0.2 / 20.0;
    let mut rng = rng::stream(3, "acceptance-pairs", &[]);
    let mut within = 0;
    let mut worst: f64 = 0.0;
    let mut exact_ok = true;
    for _ in 0..100 {
        let x = rng.gen_range(0..40);
        let y = loop {
            let y = rng.gen_range(0..40);
            if y != x {
                break y;
            }
        };
        let exact = exact_dot(&emb, x, y);
        let expected = if truth.label(x) == truth.label(y) { 1.0 / 20.0 } else { 0.0 };
        exact_ok &= (exact - expected).abs() < 1e-9;
        let err = (sketch.dot(&alphas[x], &alphas[y]) - exact).abs();
        worst = worst.max(err);
        within += usize::from(err <= tol);
    }
    Verdict {
        pass: within >= 99 && exact_ok,
        detail: format!("within={within}/100 worst_err={worst:.2e} tol={tol:e} exact_values_ok={exact_ok}"),
    }
}

const N_TABLE: usize = 3000;
const Q_TABLE: f64 = 0.002;

struct Tuned {
    params: OracleParams,
    theta: f64,
}

fn table_params(seed: u64) -> OracleParams {
    let overrides = ParamOverrides {
        master_seed: Some(seed),
        ..Default::default()
    };
    default_params(N_TABLE, 3, 0.5, 0.0, 1.0, &overrides).unwrap()
}

fn tune_table() -> Tuned {
    let (g, truth) = generate_sbm(&SbmSpec::new(N_TABLE, 3, 0.03, Q_TABLE, 1000)).unwrap();
    let view = RegularView::new(&g);
    let grid: Vec<GridEntry> = [12, 20, 30]
        .into_iter()
        .map(|t| GridEntry {
            t,
            s_oracle: 60,
            r_init: 1000,
            r_query: 1000,
            reps: 5,
        })
        .collect();
    let base = table_params(1000);
    let scan = density_gap_tune(&view, &truth, &base, &grid, &TuneOptions { pairs: 200, seed: 1000 }).unwrap();
    let entry = scan.chosen_entry();
    say(format!(
        "  tuning: chose t={} gap={:.3} theta={:.3e}",
        entry.entry.t,
        entry.gap.unwrap(),
        scan.theta
    ));
    Tuned {
        params: entry.entry.apply(&base),
        theta: scan.theta,
    }
}

fn mean_error(tuned: &Tuned, p: f64, seeds: std::ops::RangeInclusive<u64>) -> (f64, Vec<f64>) {
    let errors: Vec<f64> = seeds
        .map(|seed| {
            let (g, truth) = generate_sbm(&SbmSpec::new(N_TABLE, 3, p, Q_TABLE, seed)).unwrap();
            let params = OracleParams {
                master_seed: seed,
                ..tuned.params.clone()
            };
            run_trial(&g, &truth, &params, Threshold::Fixed(tuned.theta), 3).unwrap().error
        })
        .collect();
    (mean(&errors), errors)
}

fn table_reproduction(tuned: &Tuned) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [0.03, 0.04, 0.05, 0.06, 0.07] {
        let (m, _) = mean_error(tuned, p, 1..=5);
        let limit = if p < 0.035 { 0.05 } else { 0.005 };
        pass &= m <= limit;
        parts.push(format!("p={p}: {m:.4} (<= {limit})"));
    }
    Verdict {
        pass,
        detail: parts.join(", "),
    }
}

fn sublinearity() -> Verdict {
    let n = 6000;
    let overrides = ParamOverrides {
        t: Some(8),
        s_oracle: Some(30),
        r_init: Some(200),
        r_query: Some(200),
        reps: Some(3),
        master_seed: Some(2000),
        ..Default::default()
    };
    let base = default_params(n, 3, 0.5, 0.0, 1.0, &overrides).unwrap();
    let (tune_g, tune_truth) = generate_sbm(&SbmSpec::new(n, 3, 0.2, Q_TABLE, 2000)).unwrap();
    let grid = [GridEntry {
        t: 8,
        s_oracle: 30,
        r_init: 200,
        r_query: 200,
        reps: 3,
    }];
    let scan = density_gap_tune(
        &RegularView::new(&tune_g),
        &tune_truth,
        &base,
        &grid,
        &TuneOptions { pairs: 200, seed: 2000 },
    )
    .unwrap();
    drop(tune_g);

    let (g, _) = generate_sbm(&SbmSpec::new(n, 3, 0.2, Q_TABLE, 2001)).unwrap();
    let params = OracleParams {
        master_seed: 2001,
        ..base
    };
    let profile = access_profile(&g, &params, Threshold::Fixed(scan.theta), &[50, 100, 200, 400, 800]).unwrap();
    let pre = profile[0].1;
    let monotone = profile.windows(2).all(|w| w[1].1 >= w[0].1);
    let listing: Vec<String> = profile.iter().map(|(q, f)| format!("{q}:{f:.3}")).collect();
    Verdict {
        pass: pre <= 0.35 && monotone,
        detail: format!(
            "edges={} preprocessing={pre:.4} (<= 0.35) monotone={monotone} profile=[{}]",
            g.edge_count(),
            listing.join(" ")
        ),
    }
}

fn robustness(tuned: &Tuned) -> Verdict {
    let (g, truth) = generate_sbm(&SbmSpec::new(N_TABLE, 3, 0.05, Q_TABLE, 11)).unwrap();
    let params = OracleParams {
        master_seed: 11,
        ..tuned.params.clone()
    };
    let summary = robustness_experiment(&g, &truth, 50, 5, &params, Threshold::Fixed(tuned.theta), 3).unwrap();
    let oracle_ok = summary.mean <= 0.01;

    let (k20, parts) = disjoint_cliques(&[20, 20]);
    let before = RegularView::new(&k20);
    let mut weyl_ok = true;
    let mut worst_ratio: f64 = 0.0;
    let modes = [
        PerturbationMode::PerClusterVertex { del_num: 5 },
        PerturbationMode::PerClusterVertex { del_num: 19 },
        PerturbationMode::GlobalRandom { total: 30 },
        PerturbationMode::GlobalRandom { total: 120 },
    ];
    for (i, mode) in modes.into_iter().enumerate() {
        let spec = PerturbationSpec {
            mode,
            cluster_cap: None,
            seed: 40 + i as u64,
        };
        let perturbed = delete_edges(&k20, &parts, &spec).unwrap();
        let after = RegularView::new(&perturbed.graph);
        let audit = check_perturbation_bounds(&before, &after, &parts, &perturbed.deleted_per_cluster(&parts)).unwrap();
        for c in &audit.clusters {
            weyl_ok &= c.weyl_pass;
            if c.weyl_bound > 0.0 {
                worst_ratio = worst_ratio.max(c.delta() / c.weyl_bound);
            }
        }
    }
    Verdict {
        pass: oracle_ok && weyl_ok,
        detail: format!(
            "delnum=50 mean_error={:.5} std={:.5} failures={} (<= 0.01); weyl_pass={weyl_ok} max|Δλ₂|/bound={worst_ratio:.3}",
            summary.mean, summary.std, summary.failures
        ),
    }
}

fn baseline_contrast(tuned: &Tuned) -> Verdict {
    let (tune_g, tune_truth) = generate_sbm(&SbmSpec::new(N_TABLE, 3, 0.03, Q_TABLE, 1000)).unwrap();
    let mut base = BaselineParams {
        k: 3,
        t: tuned.params.t,
        r: tuned.params.r_query * tuned.params.reps,
        s: tuned.params.s,
        threshold: 0.0,
        seed: 1000,
    };
    let (_, threshold) = tune_baseline_threshold(
        &RegularView::new(&tune_g),
        &tune_truth,
        &base,
        &TuneOptions { pairs: 200, seed: 1000 },
    )
    .unwrap_or((f64::NAN, f64::NAN));
    base.threshold = threshold;
    drop(tune_g);

    let p = 0.025;
    let (ours, _) = mean_error(tuned, p, 1..=5);
    let theirs: Vec<f64> = (1..=5)
        .map(|seed| {
            let (g, truth) = generate_sbm(&SbmSpec::new(N_TABLE, 3, p, Q_TABLE, seed)).unwrap();
            let params = BaselineParams { seed, ..base.clone() };
            run_baseline_trial(&g, &truth, &params, 3).unwrap().error
        })
        .collect();
    let theirs = mean(&theirs);
    Verdict {
        pass: theirs - ours >= 0.3,
        detail: format!("p={p}: ours={ours:.4} baseline={theirs:.4} (threshold {threshold:.3e}); margin >= 0.3"),
    }
}

fn cli(args: &[&str], threads: usize) {
    let status = Command::new(env!("CARGO_BIN_EXE_cluster-oracle"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "cluster-oracle {args:?} failed");
}

fn determinism(dir: &Path) -> Verdict {
    let path = |name: &str| dir.join(name).display().to_string();
    let graph = path("g.txt");
    cli(
        &["gen-sbm", "--n", "300", "--k", "3", "--p", "0.2", "--q", "0.005", "--seed", "7", "--out", &graph],
        1,
    );
    let preprocess = |out: &str, threads| {
        cli(
            &[
                "preprocess", "--graph", &graph, "--k", "3", "--theta", "0.004", "--t", "10", "--s-oracle", "40",
                "--r-init", "500", "--r-query", "500", "--reps", "3", "--seed", "7", "--out", out,
            ],
            threads,
        )
    };
    let oracle = path("oracle.bin");
    preprocess(&oracle, 4);
    let oracle_serial = path("oracle1.bin");
    preprocess(&oracle_serial, 1);

    let labels = [path("a.txt"), path("b.txt"), path("c.txt"), path("d.txt")];
    cli(&["query-all", "--graph", &graph, "--oracle", &oracle, "--out-labels", &labels[0]], 4);
    cli(&["query-all", "--graph", &graph, "--oracle", &oracle, "--out-labels", &labels[1]], 4);
    cli(&["query-all", "--graph", &graph, "--oracle", &oracle, "--out-labels", &labels[2]], 1);
    cli(&["query-all", "--graph", &graph, "--oracle", &oracle_serial, "--out-labels", &labels[3]], 1);

    let read = |p: &str| std::fs::read(p).unwrap();
    let repeat = read(&labels[0]) == read(&labels[1]);
    let serial_query = read(&labels[0]) == read(&labels[2]);
    let serial_build = read(&oracle) == read(&oracle_serial)
        && read(&format!("{oracle}.state")) == read(&format!("{oracle_serial}.state"))
        && read(&labels[0]) == read(&labels[3]);
    Verdict {
        pass: repeat && serial_query && serial_build,
        detail: format!("repeat_identical={repeat} serial_query_identical={serial_query} serial_build_identical={serial_build}"),
    }
}

#[test]
fn acceptance() {
    let mut results = Vec::new();

    let t = Instant::now();
    record(&mut results, 1, t, exact_invariants());
    let t = Instant::now();
    record(&mut results, 2, t, lemma_audit());
    let t = Instant::now();
    record(&mut results, 3, t, dot_fidelity());

    let t = Instant::now();
    let tuned = tune_table();
    record(&mut results, 4, t, table_reproduction(&tuned));
    let t = Instant::now();
    record(&mut results, 5, t, sublinearity());
    let t = Instant::now();
    record(&mut results, 6, t, robustness(&tuned));
    let t = Instant::now();
    record(&mut results, 7, t, baseline_contrast(&tuned));

    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    record(&mut results, 8, t, determinism(dir.path()));

    let passed = results.iter().filter(|&&p| p).count();
    say(format!("acceptance: {passed}/{} criteria passed", results.len()));
    assert_eq!(passed, results.len(), "some acceptance criteria failed");
}
