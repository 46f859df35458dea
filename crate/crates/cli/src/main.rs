use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use triplead::channels::GraphData;
use triplead::curvature::mixed_curvature_table;
use triplead::distill::{load_models, orchestrate};
use triplead::eval::{
    build_report, curvature_histogram, edge_records, read_scores_csv, report_from_records, write_edges_csv,
    write_histogram_csv, write_scores_csv, AnomalyReport, ChannelScores,
};
use triplead::graph::synthetic::{two_community, TwoCommunityConfig};
use triplead::graph::{inject_anomalies, load_graph, save_graph};
use triplead::verify::{gradcheck_suite, GRADCHECK_EPS, GRADCHECK_TOL};
use triplead::{Config, Graph};

#[derive(Parser)]
#[command(name = "triplead", version, about = "Triple-channel graph anomaly detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inject clique, attribute and mixed anomalies into a graph
    Inject(InjectArgs),
    /// Run the four training phases and write checkpoints
    Train(TrainArgs),
    /// Score every node with a trained run
    Score(ScoreArgs),
    /// Compute metrics from a scores CSV
    Eval(EvalArgs),
    /// Curvature per edge and its histogram by edge class
    CurvatureStats(CurvatureArgs),
    /// Check every analytic gradient against finite differences
    Gradcheck(GradcheckArgs),
    /// Train and score every cell of the configured grid
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list, one `i j` pair per line
    #[arg(long)]
    edges: PathBuf,
    /// Attribute matrix as header-less CSV
    #[arg(long)]
    attrs: PathBuf,
    /// Label codes, one per line (0 normal, 1 attribute, 2 structural, 3 mixed)
    #[arg(long)]
    labels: Option<PathBuf>,
}

impl GraphArgs {
    fn load(&self) -> Result<Graph> {
        load_graph(&self.edges, &self.attrs, self.labels.as_deref())
            .with_context(|| format!("loading graph from {}", self.edges.display()))
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration; defaults apply to missing keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => Config::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct InjectArgs {
    #[command(flatten)]
    graph: Option<GraphArgs>,
    /// Generate the two-community benchmark graph instead of reading one
    #[arg(long, conflicts_with_all = ["edges", "attrs", "labels"])]
    synthetic: bool,
    #[arg(long, default_value_t = 500)]
    nodes: usize,
    #[arg(long, default_value_t = 16)]
    features: usize,
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    cliques: Option<usize>,
    #[arg(long)]
    clique_size: Option<usize>,
    #[arg(long)]
    attr_anomalies: Option<usize>,
    #[arg(long)]
    pool: Option<usize>,
    #[arg(long)]
    mixed: Option<usize>,
    /// Directory receiving edges.txt, attrs.csv and labels.txt
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Train all channels jointly on the summed loss
    #[arg(long)]
    unified: bool,
    /// Run directory for checkpoints and the manifest
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Run directory written by `train`
    #[arg(long)]
    run: PathBuf,
    /// Scores CSV
    #[arg(long)]
    out: PathBuf,
    /// Also write the full report JSON
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Scores CSV with labels
    #[arg(long)]
    scores: PathBuf,
    /// Report JSON; printed to stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurvatureArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Attribute weight of the mixed distribution
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Receives edges.csv, histogram.csv and histogram.json
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Print the results as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Cells trained concurrently
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Receives one `cell-NNN` directory per grid cell and sweep.json
    #[arg(long)]
    out_dir: PathBuf,
}

fn inject(a: &InjectArgs) -> Result<()> {
    let cfg = a.cfg.load()?;
    let mut ic = cfg.inject.clone();
    if a.cfg.seed.is_some() {
        ic.seed = cfg.seed;
    }
    for (slot, v) in [
        (&mut ic.clique_count, a.cliques),
        (&mut ic.clique_size, a.clique_size),
        (&mut ic.attr_anom_count, a.attr_anomalies),
        (&mut ic.candidate_pool, a.pool),
        (&mut ic.mixed_count, a.mixed),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    let base: Graph = match (&a.graph, a.synthetic) {
        (_, true) => two_community(&TwoCommunityConfig {
            n: a.nodes,
            d: a.features,
            seed: ic.seed,
            ..TwoCommunityConfig::default()
        })?,
        (Some(g), false) => g.load()?,
        (None, false) => bail!("either --synthetic or --edges/--attrs is required"),
    };
    let g = inject_anomalies(&base, &ic)?;
    fs::create_dir_all(&a.out_dir)?;
    save_graph(
        &g,
        a.out_dir.join("edges.txt"),
        a.out_dir.join("attrs.csv"),
        Some(&a.out_dir.join("labels.txt")),
    )?;
    println!(
        "wrote {} nodes, {} edges, {} anomalies to {}",
        g.n(),
        g.num_edges(),
        g.anomaly_flags().map_or(0, |f| f.iter().filter(|&&x| x).count()),
        a.out_dir.display()
    );
    Ok(())
}

fn train(a: &TrainArgs) -> Result<()> {
    let mut cfg = a.cfg.load()?;
    cfg.train.unified |= a.unified;
    let data = GraphData::new(a.graph.load()?, cfg.mix.delta)?;
    let (_, man) = orchestrate(&data, &cfg, Some(&a.out_dir))?;
    for p in &man.phases {
        let last = p.losses.last().map_or(f64::NAN, |l| l.total);
        println!("phase {} ({}): {} epochs, final loss {last:.6}", p.phase, p.channel.name(), p.losses.len());
    }
    println!("run written to {}", a.out_dir.display());
    Ok(())
}

fn score_run(graph: Graph, run: &Path) -> Result<AnomalyReport> {
    let (models, man) = load_models::<f64>(run).with_context(|| format!("loading run {}", run.display()))?;
    if graph.num_features() != man.num_features {
        bail!("graph has {} features but the run was trained on {}", graph.num_features(), man.num_features);
    }
    let labels = graph.labels().map(<[_]>::to_vec);
    let data = GraphData::new(graph, man.config.mix.delta)?;
    let scores = ChannelScores::compute(&models, &data)?;
    Ok(build_report(&scores, labels.as_deref(), &man.config)?)
}

fn score(a: &ScoreArgs) -> Result<()> {
    let report = score_run(a.graph.load()?, &a.run)?;
    write_scores_csv(&report.records, &a.out)?;
    if let Some(p) = &a.report {
        report.save_json(p)?;
    }
    if let Some(auc) = report.headline_auc() {
        println!("auc_roc {auc:.4}");
    }
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let report = report_from_records(read_scores_csv(&a.scores)?)?;
    match &a.out {
        Some(p) => {
            report.save_json(p)?;
            let m = report.metrics.expect("labeled report has metrics");
            println!("auc_roc {:.4} auc_pr {:.4} macro_f1 {:.4}", m.auc_roc, m.auc_pr, m.macro_f1);
        }
        None => print!("{}", report.to_json()?),
    }
    Ok(())
}

fn curvature_stats(a: &CurvatureArgs) -> Result<()> {
    let g = a.graph.load()?;
    let labels = g.labels().context("curvature-stats needs --labels")?.to_vec();
    let table = mixed_curvature_table(&g, a.delta)?;
    let edges = edge_records(&table, &labels)?;
    let hist = curvature_histogram(&edges, a.bins)?;
    fs::create_dir_all(&a.out_dir)?;
    write_edges_csv(&edges, a.out_dir.join("edges.csv"))?;
    write_histogram_csv(&hist, a.out_dir.join("histogram.csv"))?;
    fs::write(a.out_dir.join("histogram.json"), serde_json::to_string_pretty(&hist)? + "\n")?;
    let fmt = |m: Option<f64>| m.map_or("-".to_string(), |v| format!("{v:.4}"));
    println!(
        "mean normalized curvature: nn {} ({} edges), na {} ({} edges), aa {} ({} edges)",
        fmt(hist.nn.mean),
        hist.nn.count,
        fmt(hist.na.mean),
        hist.na.count,
        fmt(hist.aa.mean),
        hist.aa.count
    );
    Ok(())
}

fn gradcheck(a: &GradcheckArgs) -> Result<bool> {
    let cases = gradcheck_suite()?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&cases)?);
    } else {
        println!("eps {GRADCHECK_EPS:e}, tolerance {GRADCHECK_TOL:e}");
        for c in &cases {
            let status = if c.passed { "ok" } else { "FAIL" };
            println!("{status:4} {:16} max rel error {:.3e} over {} entries", c.name, c.max_rel_error, c.entries_checked);
        }
    }
    Ok(cases.iter().all(|c| c.passed))
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let cfg = a.cfg.load()?;
    let cells = cfg.expand_sweep()?;
    let graph = a.graph.load()?;
    fs::create_dir_all(&a.out_dir)?;
    println!("{} cells", cells.len());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs.max(1)).build()?;
    let results: Vec<Result<serde_json::Value>> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(k, cell)| {
                let dir = a.out_dir.join(format!("cell-{k:03}"));
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("config.toml"), cell.to_toml_string()?)?;
                let data = GraphData::new(graph.clone(), cell.mix.delta)?;
                orchestrate(&data, cell, Some(&dir))?;
                let report = score_run(graph.clone(), &dir)?;
                write_scores_csv(&report.records, dir.join("scores.csv"))?;
                report.save_json(dir.join("report.json"))?;
                Ok(serde_json::json!({
                    "cell": k,
                    "seed": cell.seed,
                    "config_hash": cell.hash(),
                    "auc_roc": report.headline_auc(),
                }))
            })
            .collect()
    });
    let mut summary = Vec::with_capacity(results.len());
    for (k, r) in results.into_iter().enumerate() {
        summary.push(r.with_context(|| format!("sweep cell {k}"))?);
    }
    fs::write(a.out_dir.join("sweep.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Inject(a) => inject(a)?,
        Command::Train(a) => train(a)?,
        Command::Score(a) => score(a)?,
        Command::Eval(a) => eval(a)?,
        Command::CurvatureStats(a) => curvature_stats(a)?,
        Command::Gradcheck(a) => return gradcheck(a),
        Command::Sweep(a) => sweep(a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
