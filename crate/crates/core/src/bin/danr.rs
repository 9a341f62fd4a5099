use anyhow::{anyhow, bail, Result};
use clap::{Parser, Subcommand};
use danr::graph::{gen_synthetic, load_graph, save_graph, save_temporal_graph};
use danr::harness::{
    critical_lambdas, emit_plots, gen_drifting_clusters, noise_summary, peak, read_records, read_regression_csv, run_classification_experiment,
    run_noise_sweep, run_regression_experiment, run_scalability, run_temporal_sweep, summarize_curves, temporal_table,
    write_curves_csv, write_records, write_scale_csv, write_temporal_table, EvalRecord, ExperimentConfig,
    LossChoice, Method, PlotKind,
};
use danr::objectives::NodeObjective;
use danr::solver::{solve, Mode};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "danr", version, about = "Discrepancy-aware network regularization experiments")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// danr, nl, local or global.
    #[arg(long, global = true)]
    mode: Option<Mode>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Exit with status 2 when any solve stops before converging.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic network (or a drifting snapshot sequence) to files.
    Gen {
        #[arg(long)]
        temporal: bool,
    },
    /// Solve once on a graph file and write the JSON report.
    Solve {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Classification sweep over the penalty grids.
    Sweep,
    /// Classification sweeps at several fractions of inter-community edges.
    Noise {
        /// Comma-separated levels in [0, 1].
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
    },
    /// Streaming temporal experiment on drifting clusters.
    Temporal,
    /// Runtime at growing graph sizes with a fixed mean degree.
    Scale {
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Regression on a CSV file of locations, features and targets.
    Regress {
        #[arg(long)]
        data: PathBuf,
    },
    /// Render a chart from a records CSV.
    Plot {
        #[arg(long)]
        records: PathBuf,
        /// accuracy_vs_lambda, accuracy_vs_mu, accuracy_vs_noise or mse_vs_snapshot.
        #[arg(long)]
        kind: PlotKind,
    },
}

enum Outcome {
    Done,
    NotConverged(usize),
}

fn method_of(mode: Mode) -> Method {
    match mode {
        Mode::Danr => Method::Danr,
        Mode::NetworkLasso => Method::NetworkLasso,
        Mode::Local => Method::Local,
        Mode::Global => Method::Global,
    }
}

fn unconverged(records: &[EvalRecord]) -> Outcome {
    let n = records.iter().filter(|r| r.error.is_none() && !r.converged).count();
    if n == 0 { Outcome::Done } else { Outcome::NotConverged(n) }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.sweep.seeds = vec![seed];
        cfg.classification.generator.seed = seed;
        cfg.temporal.drift.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.solve.solver.mode = mode;
        cfg.classification.methods = vec![method_of(mode)];
        cfg.regression.methods = vec![method_of(mode)];
        cfg.scale.modes = vec![mode];
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| anyhow!("creating {}: {e}", cli.out.display()))?;
    let out = cli.out.as_path();

    match &cli.command {
        Command::Gen { temporal: false } => {
            let net = gen_synthetic(&cfg.classification.generator)?;
            save_graph(&net.graph, &out.join("graph.json"))?;
            save_graph(&net.graph.with_payloads(net.test_payloads.clone())?, &out.join("test.json"))?;
            println!("{} nodes, {} edges -> {}", net.graph.node_count(), net.graph.edge_count(), out.display());
        }
        Command::Gen { temporal: true } => {
            let seq = gen_drifting_clusters(&cfg.temporal.drift)?;
            save_temporal_graph(&seq.tgraph, &out.join("temporal"))?;
            println!("{} snapshots of {} nodes -> {}", seq.tgraph.snapshot_count(), seq.tgraph.node_count(), out.display());
        }
        Command::Solve { graph } => {
            let graph = load_graph(graph)?;
            let sc = &cfg.solve;
            let objectives = graph
                .payloads()
                .iter()
                .map(|p| {
                    if p.is_empty() {
                        Ok(NodeObjective::zero())
                    } else {
                        match sc.loss {
                            LossChoice::Svm => NodeObjective::svm(p.clone(), sc.c, sc.bias),
                            LossChoice::Ridge => NodeObjective::ridge(p.clone(), sc.c, sc.bias),
                        }
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            let report = solve(&graph, &objectives, &sc.solver)?;
            report.write_json(&out.join("report.json"))?;
            report.write_trace_csv(&out.join("trace.csv"))?;
            println!(
                "{} iterations, converged: {}, objective {:.6}",
                report.iterations,
                report.converged,
                report.final_objective()
            );
            if !report.converged {
                return Ok(Outcome::NotConverged(1));
            }
        }
        Command::Sweep => {
            let records = run_classification_experiment(&cfg.sweep, &cfg.classification)?;
            write_records(&out.join("records.csv"), &records)?;
            let curves = summarize_curves(&records);
            write_curves_csv(&out.join("curves.csv"), &curves)?;
            for m in &cfg.classification.methods {
                if let Some(p) = peak(&curves, *m, None) {
                    println!("{:14} peak accuracy {:.4} at lambda {:.4}", m.name(), p.mean, p.lambda);
                }
            }
            for (seed, lambda) in critical_lambdas(&records, None) {
                match lambda {
                    Some(l) => println!("seed {seed}: network lasso collapses to one cluster at lambda {l:.4}"),
                    None => println!("seed {seed}: network lasso never collapses on this grid"),
                }
            }
            for kind in [PlotKind::AccuracyVsLambda, PlotKind::AccuracyVsMu] {
                if let Err(e) = emit_plots(&records, kind, out) {
                    log::warn!("{e}");
                }
            }
            return Ok(unconverged(&records));
        }
        Command::Noise { levels } => {
            let levels = levels.clone().unwrap_or_else(|| cfg.noise.levels.clone());
            let records = run_noise_sweep(&cfg.sweep, &cfg.classification, &levels)?;
            write_records(&out.join("noise_records.csv"), &records)?;
            let summary = noise_summary(&records);
            write_curves_csv(&out.join("noise_summary.csv"), &summary)?;
            for s in &summary {
                println!("{:14} noise {:.2}: {:.4}", s.method, s.noise.unwrap_or(0.0), s.mean);
            }
            emit_plots(&records, PlotKind::AccuracyVsNoise, out)?;
            return Ok(unconverged(&records));
        }
        Command::Temporal => {
            let records = run_temporal_sweep(&cfg.temporal, &cfg.sweep.seeds)?;
            write_records(&out.join("temporal_records.csv"), &records)?;
            let table = temporal_table(&records, cfg.temporal.drift.snapshots);
            write_temporal_table(&out.join("temporal_table.csv"), &table)?;
            for (method, row) in &table {
                let cells: Vec<String> = row.iter().map(|v| v.map_or("N/A".into(), |x| format!("{x:.4}"))).collect();
                println!("{method:8} {}", cells.join("  "));
            }
            emit_plots(&records, PlotKind::MseVsSnapshot, out)?;
            return Ok(unconverged(&records));
        }
        Command::Scale { sizes } => {
            let sizes = sizes.clone().unwrap_or_else(|| cfg.scale.sizes.clone());
            let seed = cfg.sweep.seeds.first().copied().unwrap_or(0);
            let rows = run_scalability(&sizes, &cfg.scale, seed)?;
            write_scale_csv(&out.join("scale.csv"), &rows)?;
            for r in &rows {
                println!("{:14} n={:6} edges={:7} {:.3}s", r.mode.name(), r.nodes, r.edges, r.runtime_secs);
            }
            let n = rows.iter().filter(|r| !r.converged).count();
            if n > 0 {
                return Ok(Outcome::NotConverged(n));
            }
        }
        Command::Regress { data } => {
            let rc = &cfg.regression;
            if rc.feature_columns.is_empty() {
                bail!("regression.feature_columns is empty");
            }
            let table = read_regression_csv(data, &rc.coord_columns, &rc.feature_columns, &rc.target_column)?;
            let mut records = Vec::new();
            for &seed in &cfg.sweep.seeds {
                records.extend(run_regression_experiment(&table, rc, &cfg.sweep, seed)?);
            }
            write_records(&out.join("regression_records.csv"), &records)?;
            for m in &rc.methods {
                let best = records
                    .iter()
                    .filter(|r| r.method == m.name() && r.error.is_none())
                    .map(|r| r.value)
                    .fold(f64::INFINITY, f64::min);
                println!("{:14} best test mse {best:.4}", m.name());
            }
            return Ok(unconverged(&records));
        }
        Command::Plot { records, kind } => {
            let records = read_records(records)?;
            let files = emit_plots(&records, *kind, out)?;
            println!("{}", files.svg.display());
        }
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged(n)) => {
            eprintln!("warning: {n} solve(s) hit the iteration cap before converging");
            if cli.strict { ExitCode::from(2) } else { ExitCode::SUCCESS }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
