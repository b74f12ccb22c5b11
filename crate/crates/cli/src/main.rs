use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use antnet::harness::{
    report_flow_overlay, run_experiment, verify_theorem, write_overlay_csv, ExperimentConfig, SUMMARY_FILE,
};
use antnet::oracle::{exact_le_distribution, excursion_le_distribution, rational_weights, OracleOptions};
use antnet::sp_graph::{flatten, parse_sp, FlatGraph};
use antnet::theory::{
    classify_case, integrate_flow, phase_grid, zeros, FlowOptions, FlowOutcome, Point2, TheoryParams,
};
use antnet::urns::{g_urn_run, stable_fixed_points};

#[derive(Parser)]
#[command(name = "antnet", version, about = "Multi-nest ants process on triangle-series-parallel graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment and write snapshots, final states and summary.csv.
    Simulate(ConfigArgs),
    /// Compare the final states of a finished experiment with the predicted limits.
    Verify(ConfigArgs),
    /// Pair empirical checkpoints with the flow started from the same point.
    Overlay {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output CSV (default: <output_dir>/overlay.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zeros, phase grid, sample flows and limits for one parameter set.
    Theory {
        #[command(flatten)]
        params: ParamArgs,
        /// Directory for zeros.csv, phase.csv, flows.csv and limits.json.
        #[arg(long, default_value = "antnet-theory")]
        out_dir: PathBuf,
        /// Phase grid resolution per axis.
        #[arg(long, default_value_t = 20)]
        grid: usize,
    },
    /// Integrate the flow from one start point; CSV `t,w1,w3` on stdout.
    Flow {
        #[command(flatten)]
        params: ParamArgs,
        /// Start point `w1,w3`.
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.5])]
        start: Vec<f64>,
        #[arg(long, default_value_t = FlowOptions::default().dt)]
        dt: f64,
        #[arg(long, default_value_t = FlowOptions::default().t_max)]
        t_max: f64,
        #[arg(long, default_value_t = FlowOptions::default().tol)]
        tol: f64,
        #[arg(long, default_value_t = FlowOptions::default().record_every)]
        record_every: usize,
    },
    /// Exact law of the loop-erased walk on a small graph, as JSON.
    Oracle(OracleArgs),
    /// Simulate the urn with G(x) = intercept + slope * x; CSV `n,Xhat` on stdout.
    Urn {
        #[arg(long)]
        intercept: f64,
        #[arg(long)]
        slope: f64,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Normalization offset c in X / (n + c).
        #[arg(long, default_value_t = 0.0)]
        offset: f64,
        /// Print every k-th step (the last step is always printed).
        #[arg(long, default_value_t = 1)]
        every: u64,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (JSON).
    #[arg(short, long)]
    config: PathBuf,
    /// Replace the configured seeds (repeatable).
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n_steps: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    support_floor: Option<f64>,
    #[arg(long)]
    dump_weights: bool,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_file(&self.config)?;
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(n) = self.n_steps {
            cfg.n_steps = n;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(t) = self.tolerance {
            cfg.tolerance = t;
        }
        if let Some(f) = self.support_floor {
            cfg.support_floor = f;
        }
        cfg.dump_weights |= self.dump_weights;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    alpha: f64,
    /// Component lengths `l1,l2,l3`.
    #[arg(long, value_delimiter = ',', required = true)]
    lengths: Vec<f64>,
}

impl ParamArgs {
    fn params(&self) -> Result<TheoryParams> {
        let l: [f64; 3] = self.lengths.clone().try_into().map_err(|_| anyhow::anyhow!("expected three lengths"))?;
        Ok(TheoryParams::new(self.alpha, l)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMode {
    Exact,
    Excursion,
}

#[derive(Args)]
struct OracleArgs {
    /// Graph JSON file `{vertices, edges, source, sink}`.
    #[arg(long, conflicts_with = "expr", required_unless_present = "expr")]
    graph: Option<PathBuf>,
    /// SP expression, flattened with its own source and sink.
    #[arg(long)]
    expr: Option<String>,
    /// Positive integer edge weights (default: all ones).
    #[arg(long, value_delimiter = ',')]
    weights: Vec<u64>,
    /// Start vertex (default: source).
    #[arg(long)]
    from: Option<usize>,
    /// Absorbing vertex (default: sink).
    #[arg(long)]
    to: Option<usize>,
    #[arg(long, value_enum, default_value = "exact")]
    mode: OracleMode,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate(args) => simulate(&args.load()?),
        Command::Verify(args) => verify(&args.load()?),
        Command::Overlay { config, out } => overlay(&config.load()?, out),
        Command::Theory { params, out_dir, grid } => theory(&params.params()?, &out_dir, grid),
        Command::Flow { params, start, dt, t_max, tol, record_every } => {
            if start.len() != 2 {
                bail!("--start expects two values w1,w3");
            }
            let opts = FlowOptions { dt, t_max, tol, record_every };
            flow(&params.params()?, Point2::new(start[0], start[1]), &opts)
        }
        Command::Oracle(args) => oracle(&args),
        Command::Urn { intercept, slope, steps, seed, offset, every } => {
            urn(intercept, slope, steps, seed, offset, every)
        }
    }
}

fn simulate(cfg: &ExperimentConfig) -> Result<ExitCode> {
    let reps = run_experiment(cfg)?;
    for rep in &reps {
        let s = &rep.final_state;
        let n = s.n as f64;
        println!(
            "seed {}: n = {}, Nhat = ({:.4}, {:.4}, {:.4})",
            rep.seed,
            s.n,
            s.counts[0] as f64 / n,
            s.counts[1] as f64 / n,
            s.counts[2] as f64 / n
        );
    }
    println!("wrote {}", cfg.output_dir.join(SUMMARY_FILE).display());
    Ok(ExitCode::SUCCESS)
}

fn verify(cfg: &ExperimentConfig) -> Result<ExitCode> {
    let report = verify_theorem(cfg)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    eprintln!(
        "{}: case {:?}, median Nhat ({:.4}, {:.4}, {:.4}) vs ({:.4}, {:.4}, {:.4})",
        if report.pass { "PASS" } else { "FAIL" },
        report.theory.case,
        report.median_nhat[0],
        report.median_nhat[1],
        report.median_nhat[2],
        report.theory.limits[0],
        report.theory.limits[1],
        report.theory.limits[2],
    );
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn overlay(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<ExitCode> {
    let report = report_flow_overlay(cfg)?;
    let path = out.unwrap_or_else(|| cfg.output_dir.join("overlay.csv"));
    write_overlay_csv(&path, &report)?;
    for (seed, limit) in &report.flow_limits {
        match limit {
            Some(p) => println!("seed {seed}: flow limit ({:.6}, {:.6})", p.w1, p.w3),
            None => println!("seed {seed}: flow did not converge"),
        }
    }
    let t = report.theory_limit;
    println!("theory limit ({:.6}, {:.6}); wrote {}", t.w1, t.w3, path.display());
    Ok(ExitCode::SUCCESS)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn theory(params: &TheoryParams, dir: &Path, grid: usize) -> Result<ExitCode> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let mut w = create(&dir.join("zeros.csv"))?;
    writeln!(w, "kind,w1,w3,denominator")?;
    for z in zeros(params) {
        let d = antnet::theory::field_denominator(z.point, params);
        writeln!(w, "{:?},{},{},{}", z.kind, z.point.w1, z.point.w3, d)?;
    }
    w.flush()?;

    let mut w = create(&dir.join("phase.csv"))?;
    writeln!(w, "w1,w3,F1,F3")?;
    for [a, b, c, d] in phase_grid(params, grid) {
        writeln!(w, "{a},{b},{c},{d}")?;
    }
    w.flush()?;

    let mut w = create(&dir.join("flows.csv"))?;
    writeln!(w, "start,t,w1,w3")?;
    let mut start_id = 0;
    for i in 1..=5 {
        for j in 1..=5 {
            let start = Point2::new(i as f64 / 6.0, j as f64 / 6.0);
            let res = integrate_flow(start, params, &FlowOptions::default())?;
            for (t, p) in &res.trajectory {
                writeln!(w, "{start_id},{t},{},{}", p.w1, p.w3)?;
            }
            start_id += 1;
        }
    }
    w.flush()?;

    let limits = classify_case(params);
    let summary = json!({
        "alpha": params.alpha,
        "lengths": params.lengths,
        "case": format!("{:?}", limits.case),
        "limits": limits.limits,
        "beta": limits.beta,
        "active": limits.active,
        "swapped": limits.swapped,
    });
    let text = serde_json::to_string_pretty(&summary)?;
    fs::write(dir.join("limits.json"), format!("{text}\n"))?;
    println!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn flow(params: &TheoryParams, start: Point2, opts: &FlowOptions) -> Result<ExitCode> {
    let res = integrate_flow(start, params, opts)?;
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "t,w1,w3")?;
    for (t, p) in &res.trajectory {
        writeln!(out, "{t},{},{}", p.w1, p.w3)?;
    }
    out.flush()?;
    match res.outcome {
        FlowOutcome::Converged { zero, time } => {
            eprintln!("converged to {:?} ({}, {}) at t = {time}", zero.kind, zero.point.w1, zero.point.w3)
        }
        FlowOutcome::NoConvergence { last } => eprintln!("no convergence; last point ({}, {})", last.w1, last.w3),
    }
    Ok(ExitCode::SUCCESS)
}

fn oracle(args: &OracleArgs) -> Result<ExitCode> {
    let graph = match (&args.graph, &args.expr) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            FlatGraph::from_json(&text)?
        }
        (None, Some(expr)) => flatten(&parse_sp(expr)?),
        (None, None) => bail!("either --graph or --expr is required"),
    };
    let weights = if args.weights.is_empty() { vec![1; graph.num_edges()] } else { args.weights.clone() };
    if weights.len() != graph.num_edges() {
        bail!("{} weights given for {} edges", weights.len(), graph.num_edges());
    }
    let w = rational_weights(&weights);
    let (s, t) = (args.from.unwrap_or(graph.source()), args.to.unwrap_or(graph.sink()));
    let opts = OracleOptions::default();
    let law = match args.mode {
        OracleMode::Exact => exact_le_distribution(&graph, &w, s, t, &opts)?,
        OracleMode::Excursion => excursion_le_distribution(&graph, &w, s, t, &opts)?,
    };
    let rows: Vec<_> = law.to_rows().into_iter().map(|(path, prob)| json!({ "path": path, "prob": prob })).collect();
    println!("{}", serde_json::to_string_pretty(&rows)?);
    Ok(ExitCode::SUCCESS)
}

fn urn(intercept: f64, slope: f64, steps: u64, seed: u64, offset: f64, every: u64) -> Result<ExitCode> {
    let g = move |x: f64| intercept + slope * x;
    let traj = g_urn_run(g, steps, seed, offset)?;
    let every = every.max(1);
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "n,Xhat")?;
    for (n, x) in traj.iter().enumerate() {
        if (n as u64).is_multiple_of(every) || n + 1 == traj.len() {
            writeln!(out, "{n},{x}")?;
        }
    }
    out.flush()?;
    let fp = stable_fixed_points(g, 1e-9);
    eprintln!("stable fixed points {:?}, unstable {:?}", fp.stable, fp.unstable);
    Ok(ExitCode::SUCCESS)
}
