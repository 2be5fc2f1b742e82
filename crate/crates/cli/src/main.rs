//! `cluster-oracle`: generate graphs, build and query the clustering oracle,
//! and run the evaluation experiments.
//!
//! Exit status: 0 on success, 1 when the algorithm fails on valid input
//! (for example the similarity graph has the wrong number of components),
//! 2 on usage errors and unreadable inputs. Set `RAYON_NUM_THREADS` to
//! control parallelism; results do not depend on it.

mod config;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use cluster_oracle::cluster_oracle::{construct_oracle, load_state, save_state, which_cluster, OracleState, Threshold};
use cluster_oracle::dot_oracle::{default_params, OracleParams, ParamOverrides};
use cluster_oracle::eval::{
    access_profile, density_gap_tune, edge_access_fraction, misclassification_error, params_key_values, query_all,
    robustness_experiment, tune_sample_size, EvalReport, TuneOptions,
};
use cluster_oracle::exact_oracle::{
    audit_alpha, check_lemma_bounds, check_perturbation_bounds, classify_good_bad, cluster_centers, exact_embeddings,
    measure_clustering, PhiSource,
};
use cluster_oracle::graph::{
    delete_edges, generate_sbm, read_graph, read_partition, write_graph, write_partition, AccessCounter, Graph,
    Partition, PerturbationMode, PerturbationSpec, RegularView, SbmSpec,
};
use cluster_oracle::Error;

use config::{default_grid, read_grid, tuned_preset, TuningFile};

#[derive(Parser, Debug)]
#[command(name = "cluster-oracle", version, about = "Sublinear spectral clustering oracle")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a stochastic block model graph and its ground-truth labels.
    GenSbm(GenSbmArgs),
    /// Choose sampling parameters and θ from labeled data.
    Tune(TuneArgs),
    /// Build the oracle and save it.
    Preprocess(PreprocessArgs),
    /// Answer cluster queries for individual vertices.
    Query(QueryArgs),
    /// Label every vertex.
    QueryAll(QueryAllArgs),
    /// Label every vertex and score against ground truth.
    Evaluate(EvaluateArgs),
    /// Rebuild the oracle on graphs with deleted edges and report errors.
    Robustness(RobustnessArgs),
    /// Check the spectral embedding inequalities on a labeled graph.
    Audit(AuditArgs),
    /// Report the fraction of edges touched by preprocessing and queries.
    BenchAccess(BenchAccessArgs),
}

#[derive(Args, Debug)]
struct GenSbmArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Label file; defaults to `<out>.truth`.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

/// Clustering parameters and sampling overrides shared by the commands
/// that build an oracle.
#[derive(Args, Debug, Clone)]
struct OracleArgs {
    /// Number of clusters (defaults to the label count when a truth file is
    /// given).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    phi: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    /// Walk length.
    #[arg(long)]
    t: Option<usize>,
    /// Number of sampled vertices in the similarity graph.
    #[arg(long)]
    s: Option<usize>,
    /// Number of sketch vertices.
    #[arg(long)]
    s_oracle: Option<usize>,
    #[arg(long)]
    r_init: Option<usize>,
    #[arg(long)]
    r_query: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the asymptotic formulas for unset sampling counts instead of
    /// the tuned preset.
    #[arg(long)]
    formula_params: bool,
}

/// Where θ comes from.
#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct ThetaArgs {
    #[arg(long)]
    theta: Option<f64>,
    /// Tuning file written by `tune`; also supplies sampling parameters.
    #[arg(long)]
    tuning: Option<PathBuf>,
    /// Use the closed-form threshold.
    #[arg(long)]
    analytic_theta: bool,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Lines of `t s_oracle r_init r_query reps`; a built-in grid otherwise.
    #[arg(long)]
    grid_file: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Pairs sampled per class (intra and inter).
    #[arg(long, default_value_t = 200)]
    pairs: usize,
    /// Comma-separated candidates for `s`; tuned after θ when given.
    #[arg(long, value_delimiter = ',')]
    s_candidates: Vec<usize>,
    #[arg(long, default_value_t = 300)]
    probes: usize,
    #[command(flatten)]
    oracle: OracleArgs,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Sketch file; the clustering sidecar goes to `<out>.state`.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    oracle: OracleArgs,
    #[command(flatten)]
    theta: ThetaArgs,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    oracle: PathBuf,
    #[arg(long, required = true)]
    vertex: Vec<usize>,
}

#[derive(Args, Debug)]
struct QueryAllArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    oracle: PathBuf,
    #[arg(long)]
    out_labels: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    oracle: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RobustnessArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Edges deleted around one random vertex per cluster.
    #[arg(long)]
    delnum: usize,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Construction retries per trial.
    #[arg(long, default_value_t = 3)]
    attempts: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    oracle: OracleArgs,
    #[command(flatten)]
    theta: ThetaArgs,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Overrides the measured outer conductance.
    #[arg(long)]
    eps: Option<f64>,
    /// Overrides the measured inner conductance.
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Also delete this many edges around one vertex per cluster and check
    /// the eigenvalue perturbation bound.
    #[arg(long)]
    delnum: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct BenchAccessArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Total number of queries.
    #[arg(long)]
    queries: usize,
    /// Number of evenly spaced checkpoints up to `--queries`.
    #[arg(long, default_value_t = 4)]
    steps: usize,
    #[command(flatten)]
    oracle: OracleArgs,
    #[command(flatten)]
    theta: ThetaArgs,
}

/// Failure that should exit with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            if e.kind() == std::io::ErrorKind::NotFound {
                return 2;
            }
        }
        match cause.downcast_ref::<Error>() {
            Some(Error::InvalidParameter(_)) => return 2,
            Some(Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => return 2,
            _ => {}
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let json = cli.json;
    let value = match cli.command {
        Command::GenSbm(a) => gen_sbm(a)?,
        Command::Tune(a) => tune(a)?,
        Command::Preprocess(a) => preprocess(a)?,
        Command::Query(a) => query(a)?,
        Command::QueryAll(a) => query_all_cmd(a)?,
        Command::Evaluate(a) => evaluate(a)?,
        Command::Robustness(a) => robustness(a)?,
        Command::Audit(a) => audit(a)?,
        Command::BenchAccess(a) => bench_access(a)?,
    };
    emit(&value, json)
}

/// Prints `value` as JSON, or as `key=value` lines for flat objects.
fn emit(value: &Value, json: bool) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if json {
        serde_json::to_writer_pretty(&mut out, value)?;
        writeln!(out)?;
        return Ok(());
    }
    if let Some(text) = value.get("text").and_then(Value::as_str) {
        out.write_all(text.as_bytes())?;
        return Ok(());
    }
    if let Value::Object(map) = value {
        for (k, v) in map {
            match v {
                Value::String(s) => writeln!(out, "{k}={s}")?,
                other => writeln!(out, "{k}={other}")?,
            }
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn load_graph(path: &Path) -> Result<Graph> {
    read_graph(open(path)?).with_context(|| format!("reading graph {}", path.display()))
}

fn load_truth(path: &Path, k: Option<usize>, graph: &Graph) -> Result<Partition> {
    let truth = read_partition(open(path)?, k).with_context(|| format!("reading labels {}", path.display()))?;
    if truth.n() != graph.n() {
        bail!(UsageError(format!(
            "label file has {} entries, graph has {} vertices",
            truth.n(),
            graph.n()
        )));
    }
    truth.require_nonempty()?;
    Ok(truth)
}

fn sidecar_path(oracle: &Path) -> PathBuf {
    let mut s = oracle.as_os_str().to_owned();
    s.push(".state");
    PathBuf::from(s)
}

fn merge(base: ParamOverrides, top: ParamOverrides) -> ParamOverrides {
    ParamOverrides {
        delta: top.delta.or(base.delta),
        xi: top.xi.or(base.xi),
        t: top.t.or(base.t),
        s: top.s.or(base.s),
        s_oracle: top.s_oracle.or(base.s_oracle),
        r_init: top.r_init.or(base.r_init),
        r_query: top.r_query.or(base.r_query),
        reps: top.reps.or(base.reps),
        master_seed: top.master_seed.or(base.master_seed),
    }
}

impl OracleArgs {
    fn overrides(&self) -> ParamOverrides {
        ParamOverrides {
            delta: self.delta,
            xi: self.xi,
            t: self.t,
            s: self.s,
            s_oracle: self.s_oracle,
            r_init: self.r_init,
            r_query: self.r_query,
            reps: self.reps,
            master_seed: Some(self.seed),
        }
    }

    fn k_or(&self, fallback: Option<usize>) -> Result<usize> {
        self.k
            .or(fallback)
            .ok_or_else(|| UsageError("--k is required".into()).into())
    }

    /// Parameters with precedence: flags, then the tuning file, then the
    /// preset (or the formulas with `--formula-params`).
    fn params(&self, n: usize, k: usize, tuning: Option<&TuningFile>) -> Result<OracleParams> {
        let mut layered = if self.formula_params {
            ParamOverrides::default()
        } else {
            tuned_preset()
        };
        if let Some(tf) = tuning {
            layered = merge(layered, tf.overrides());
        }
        layered = merge(layered, self.overrides());
        Ok(default_params(n, k, self.phi, self.eps, self.gamma, &layered)?)
    }
}

impl ThetaArgs {
    fn resolve(&self) -> Result<(Threshold, Option<TuningFile>)> {
        if let Some(path) = &self.tuning {
            let tf = TuningFile::read(path)?;
            let theta = self.theta.unwrap_or(tf.theta);
            return Ok((Threshold::Fixed(theta), Some(tf)));
        }
        match self.theta {
            Some(theta) => Ok((Threshold::Fixed(theta), None)),
            None => Ok((Threshold::Analytic, None)),
        }
    }
}

fn threshold_value(threshold: Threshold, n: usize, params: &OracleParams) -> Result<f64> {
    Ok(threshold.resolve(n, params)?)
}

fn params_json(p: &OracleParams) -> Value {
    Value::Object(
        params_key_values(p)
            .into_iter()
            .map(|(k, v)| (k, Value::String(v)))
            .collect(),
    )
}

fn gen_sbm(a: GenSbmArgs) -> Result<Value> {
    let spec = SbmSpec::new(a.n, a.k, a.p, a.q, a.seed);
    let (graph, truth) = generate_sbm(&spec)?;
    write_graph(&graph, create(&a.out)?)?;
    let truth_out = a.truth_out.unwrap_or_else(|| {
        let mut s = a.out.as_os_str().to_owned();
        s.push(".truth");
        PathBuf::from(s)
    });
    write_partition(&truth, create(&truth_out)?)?;
    Ok(json!({
        "n": graph.n(),
        "d": graph.d(),
        "edges": graph.edge_count(),
        "seed": a.seed,
        "graph": a.out.display().to_string(),
        "truth": truth_out.display().to_string(),
    }))
}

fn tune(a: TuneArgs) -> Result<Value> {
    let graph = load_graph(&a.graph)?;
    let truth = load_truth(&a.truth, a.oracle.k, &graph)?;
    let k = a.oracle.k_or(Some(truth.k()))?;
    let grid = match &a.grid_file {
        Some(path) => read_grid(path).map_err(|e| UsageError(format!("{e:#}")))?,
        None => default_grid(),
    };
    let base = a.oracle.params(graph.n(), k, None)?;
    let view = RegularView::new(&graph);
    let options = TuneOptions {
        pairs: a.pairs,
        seed: a.oracle.seed,
    };
    let scan = density_gap_tune(&view, &truth, &base, &grid, &options)?;
    let chosen = scan.chosen_entry();
    let mut s = None;
    let mut s_counts = Vec::new();
    if !a.s_candidates.is_empty() {
        let params = chosen.entry.apply(&base);
        let (best, counts) =
            tune_sample_size(&view, &truth, &params, scan.theta, &a.s_candidates, a.probes, a.oracle.seed)?;
        s = Some(best);
        s_counts = counts;
    }
    let tf = TuningFile {
        entry: chosen.entry,
        theta: scan.theta,
        gap: chosen.gap.expect("chosen entry has a gap"),
        s,
        seed: a.oracle.seed,
    };
    fs::write(&a.out, tf.render()).with_context(|| format!("writing {}", a.out.display()))?;

    let hist_path = {
        let mut p = a.out.as_os_str().to_owned();
        p.push(".hist");
        PathBuf::from(p)
    };
    let mut hist = create(&hist_path)?;
    writeln!(hist, "# seed={} t={} theta={}", tf.seed, tf.entry.t, tf.theta)?;
    writeln!(hist, "lo hi intra inter")?;
    for bin in &chosen.histogram {
        writeln!(hist, "{} {} {} {}", bin.lo, bin.hi, bin.intra, bin.inter)?;
    }
    hist.flush()?;

    let entries: Vec<Value> = scan
        .entries
        .iter()
        .map(|e| {
            json!({
                "t": e.entry.t,
                "s_oracle": e.entry.s_oracle,
                "r_init": e.entry.r_init,
                "r_query": e.entry.r_query,
                "reps": e.entry.reps,
                "gap": e.gap,
                "theta": e.theta,
                "failure": e.failure,
            })
        })
        .collect();
    let mut text = String::new();
    for (i, e) in scan.entries.iter().enumerate() {
        let mark = if i == scan.chosen { '*' } else { ' ' };
        let gap = e.gap.map_or("-".into(), |g| format!("{g:.4}"));
        let theta = e.theta.map_or("-".into(), |t| format!("{t:.4e}"));
        text.push_str(&format!(
            "{mark} t={} s_oracle={} r_init={} r_query={} reps={} gap={gap} theta={theta}",
            e.entry.t, e.entry.s_oracle, e.entry.r_init, e.entry.r_query, e.entry.reps
        ));
        if let Some(f) = &e.failure {
            text.push_str(&format!(" failure=\"{f}\""));
        }
        text.push('\n');
    }
    for (cand, correct) in &s_counts {
        text.push_str(&format!("s={cand} correct={correct}/{}\n", a.probes));
    }
    text.push_str(&tf.render());
    Ok(json!({
        "text": text,
        "chosen": scan.chosen,
        "theta": tf.theta,
        "gap": tf.gap,
        "s": tf.s,
        "seed": tf.seed,
        "entries": entries,
        "s_counts": s_counts,
    }))
}

fn preprocess(a: PreprocessArgs) -> Result<Value> {
    let graph = load_graph(&a.graph)?;
    let (threshold, tuning) = a.theta.resolve()?;
    let k = a.oracle.k_or(None)?;
    let params = a.oracle.params(graph.n(), k, tuning.as_ref())?;
    let view = RegularView::new(&graph);
    let counter = AccessCounter::new(&graph);
    let start = Instant::now();
    let state = construct_oracle(&view, &counter, &params, threshold)?;
    let seconds = start.elapsed().as_secs_f64();
    let sidecar = sidecar_path(&a.out);
    let mut sketch_w = create(&a.out)?;
    let mut sidecar_w = create(&sidecar)?;
    save_state(&state, &mut sketch_w, &mut sidecar_w)?;
    sketch_w.flush()?;
    sidecar_w.flush()?;
    Ok(json!({
        "theta": state.theta(),
        "sample_size": state.sample().len(),
        "edge_access_fraction": edge_access_fraction(&counter),
        "construct_seconds": seconds,
        "seed": params.master_seed,
        "sketch": a.out.display().to_string(),
        "state": sidecar.display().to_string(),
        "params": params_json(&params),
    }))
}

fn load_oracle(oracle: &Path, view: &RegularView<'_>) -> Result<OracleState> {
    let sidecar = sidecar_path(oracle);
    load_state(open(oracle)?, open(&sidecar)?, view).with_context(|| format!("loading oracle {}", oracle.display()))
}

fn query(a: QueryArgs) -> Result<Value> {
    let graph = load_graph(&a.graph)?;
    let view = RegularView::new(&graph);
    let state = load_oracle(&a.oracle, &view)?;
    if let Some(&x) = a.vertex.iter().find(|&&x| x >= graph.n()) {
        bail!(UsageError(format!("vertex {x} out of range for n = {}", graph.n())));
    }
    let counter = AccessCounter::new(&graph);
    let answers: Vec<(usize, usize)> = a
        .vertex
        .iter()
        .map(|&x| (x, which_cluster(&view, &counter, &state, x)))
        .collect();
    let text: String = answers.iter().map(|(x, c)| format!("{x} {c}\n")).collect();
    Ok(json!({
        "text": text,
        "answers": answers.iter().map(|&(x, c)| json!({"vertex": x, "cluster": c})).collect::<Vec<_>>(),
        "edge_access_fraction": edge_access_fraction(&counter),
    }))
}

fn query_all_cmd(a: QueryAllArgs) -> Result<Value> {
    let graph = load_graph(&a.graph)?;
    let view = RegularView::new(&graph);
    let state = load_oracle(&a.oracle, &view)?;
    let counter = AccessCounter::new(&graph);
    let labels = query_all(&view, &counter, &state);
    let partition = Partition::new(state.k(), labels)?;
    write_partition(&partition, create(&a.out_labels)?)?;
    Ok(json!({
        "labels": a.out_labels.display().to_string(),
        "sizes": partition.sizes(),
        "edge_access_fraction": edge_access_fraction(&counter),
        "seed": state.sketch().params().master_seed,
    }))
}

fn evaluate(a: EvaluateArgs) -> Result<Value> {
    let graph = load_graph(&a.graph)?;
    let view = RegularView::new(&graph);
    let state = load_oracle(&a.oracle, &view)?;
    let truth = load_truth(&a.truth, None, &graph)?;
    if truth.k() != state.k() {
        bail!(UsageError(format!(
            "label file has {} clusters, oracle has {}",
            truth.k(),
            state.k()
        )));
    }
    let counter = AccessCounter::new(&graph);
    let start = Instant::now();
    let predicted = query_all(&view, &counter, &state);
    let seconds = start.elapsed().as_secs_f64();
    let m = misclassification_error(&predicted, truth.labels(), truth.k())?;
    let params = state.sketch().params();
    let mut report = EvalReport::from_misclassification(m, params.master_seed).with_params(params);
    report.edge_access_fraction = edge_access_fraction(&counter);
    report.query_seconds = Some(seconds);
    report.meta.push(("theta".into(), state.theta().to_string()));
    let rendered = report.render();
    fs::write(&a.out, &rendered).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(json!({
        "text": rendered,
        "error": report.error,
        "permutation": report.permutation,
        "confusion": report.confusion,
        "edge_access_fraction": report.edge_access_fraction,
        "query_seconds": seconds,
        "theta": state.theta(),
        "seed": report.seed,
        "params": params_json(params),
    }))
}

fn robustness(a: RobustnessArgs) -> Result<Value> {
    let graph = load_graph(&a.graph)?;
    let truth = load_truth(&a.truth, a.oracle.k, &graph)?;
    let k = a.oracle.k_or(Some(truth.k()))?;
    let (threshold, tuning) = a.theta.resolve()?;
    let params = a.oracle.params(graph.n(), k, tuning.as_ref())?;
    let theta = threshold_value(threshold, graph.n(), &params)?;
    let summary = robustness_experiment(&graph, &truth, a.delnum, a.trials, &params, threshold, a.attempts)?;
    let mut text = format!(
        "delnum={}\ntrials={}\nmean_error={}\nstd_error={}\nfailures={}\nerrors={}\ntheta={theta}\n",
        a.delnum,
        a.trials,
        summary.mean,
        summary.std,
        summary.failures,
        summary.errors.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
    );
    for (key, value) in params_key_values(&params) {
        text.push_str(&format!("{key}={value}\n"));
    }
    if let Some(out) = &a.out {
        fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(json!({
        "text": text,
        "delnum": a.delnum,
        "trials": a.trials,
        "mean_error": summary.mean,
        "std_error": summary.std,
        "failures": summary.failures,
        "errors": summary.errors,
        "theta": theta,
        "params": params_json(&params),
    }))
}

fn audit(a: AuditArgs) -> Result<Value> {
    let graph = load_graph(&a.graph)?;
    let truth = load_truth(&a.truth, None, &graph)?;
    let view = RegularView::new(&graph);
    let measured = measure_clustering(&graph, &truth)?;
    let eps = a.eps.unwrap_or(measured.eps);
    let phi = a.phi.unwrap_or(measured.phi);
    let k = truth.k();
    let alpha = a.alpha.unwrap_or_else(|| audit_alpha(k, eps, phi));
    let beta = a.beta.unwrap_or(alpha);
    let emb = exact_embeddings(&view, k)?;
    let centers = cluster_centers(&emb, &truth)?;
    let report = classify_good_bad(&emb, &centers, &truth, alpha, beta, eps, phi);
    let lemmas = check_lemma_bounds(&emb, &centers, &truth, &report, eps, phi, a.seed);

    let source = match measured.source {
        PhiSource::Exact => "exact",
        PhiSource::CheegerLower => "cheeger_lower",
    };
    let mut text = format!(
        "eps={eps}\nphi={phi}\nphi_source={source}\nalpha={alpha}\nbeta={beta}\ngood={}\nbad={}\nambiguous={}\nseed={}\n",
        report.good_count(),
        report.bad.len(),
        lemmas.ambiguous,
        a.seed
    );
    let mut rows = Vec::new();
    for e in &lemmas.entries {
        let verdict = if e.pass { "pass" } else { "fail" };
        text.push_str(&format!("{} checked={} worst_slack={:e} {verdict}\n", e.name, e.checked, e.worst_slack));
        rows.push(json!({"name": e.name, "checked": e.checked, "worst_slack": e.worst_slack, "pass": e.pass}));
    }
    let mut all_pass = lemmas.all_pass();
    let mut perturb_rows = Vec::new();
    if let Some(del_num) = a.delnum {
        let spec = PerturbationSpec {
            mode: PerturbationMode::PerClusterVertex { del_num },
            cluster_cap: None,
            seed: a.seed,
        };
        let perturbed = delete_edges(&graph, &truth, &spec)?;
        let after = RegularView::new(&perturbed.graph);
        let audit = check_perturbation_bounds(&view, &after, &truth, &perturbed.deleted_per_cluster(&truth))?;
        for (i, c) in audit.clusters.iter().enumerate() {
            let verdict = if c.weyl_pass && c.cheeger_pass() { "pass" } else { "fail" };
            text.push_str(&format!(
                "perturbation cluster={i} deleted={} delta={:e} bound={:e} {verdict}\n",
                c.deleted,
                c.delta(),
                c.weyl_bound
            ));
            perturb_rows.push(json!({
                "cluster": i,
                "deleted": c.deleted,
                "delta": c.delta(),
                "weyl_bound": c.weyl_bound,
                "weyl_pass": c.weyl_pass,
                "cheeger_pass": c.cheeger_pass(),
            }));
        }
        all_pass &= audit.all_pass();
    }
    text.push_str(&format!("all_pass={all_pass}\n"));
    Ok(json!({
        "text": text,
        "eps": eps,
        "phi": phi,
        "phi_source": source,
        "alpha": alpha,
        "beta": beta,
        "good": report.good_count(),
        "bad": report.bad.len(),
        "ambiguous": lemmas.ambiguous,
        "entries": rows,
        "perturbation": perturb_rows,
        "all_pass": all_pass,
        "seed": a.seed,
    }))
}

fn bench_access(a: BenchAccessArgs) -> Result<Value> {
    let graph = load_graph(&a.graph)?;
    let (threshold, tuning) = a.theta.resolve()?;
    let k = a.oracle.k_or(None)?;
    let params = a.oracle.params(graph.n(), k, tuning.as_ref())?;
    let steps = a.steps.max(1);
    let mut checkpoints: Vec<usize> = (1..=steps).map(|i| a.queries * i / steps).collect();
    checkpoints.dedup();
    let profile = access_profile(&graph, &params, threshold, &checkpoints)?;
    let mut text = String::from("queries edge_access_fraction\n");
    for (q, f) in &profile {
        text.push_str(&format!("{q} {f}\n"));
    }
    text.push_str(&format!("seed={}\n", params.master_seed));
    Ok(json!({
        "text": text,
        "profile": profile.iter().map(|&(q, f)| json!({"queries": q, "edge_access_fraction": f})).collect::<Vec<_>>(),
        "edges": graph.edge_count(),
        "params": params_json(&params),
    }))
}
