use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netcascade::cascade::{load_traces, run_experiments, save_traces, ActivationFunction};
use netcascade::evaluation::{
    accuracy, derive_seed, format_summary_csv, format_sweep_csv, run_sweep, summarize, GraphSource, InferenceContext,
    SweepSpec, DEFAULT_STEP_CAP, DEFAULT_SURROGATE_CASCADES, DEFAULT_SURROGATE_GRAPHS,
};
use netcascade::graph::{
    format_edge_list, generate_random_graph, in_degree_distribution, load_edge_list, parse_degree_distribution,
    DegreeDistribution, DirectedGraph,
};
use netcascade::inference::{bootstrap_degree_distribution, Method};
use netcascade::Error;

#[derive(Parser)]
#[command(name = "netcascade", version, about = "Simulate cascades on directed networks and infer the edges back")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: standard output).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a uniform random directed graph and write its edge list.
    Generate {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        edges: usize,
    },
    /// Run cascades on a network and write the activation times.
    Simulate {
        /// Edge-list path, `dataset:<name>` or `random:N,E`.
        #[arg(long)]
        graph: String,
        /// Activation function, e.g. `threshold:0.04,0.6,0.4` or `affine:linear`.
        #[arg(long)]
        model: String,
        #[arg(long)]
        cascades: usize,
        #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
        step_cap: u32,
    },
    /// Score every ordered pair from a trace file and pick the top edges.
    Infer(InferArgs),
    /// Accuracy of a predicted edge list against the true one.
    Eval {
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Run a parameter sweep described by a config file and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Override a config entry, `key=value`; may be repeated.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Write one row per swept value with per-method means instead of
        /// one row per trial.
        #[arg(long)]
        summary: bool,
    },
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    method: Method,
    /// Activation function the cascades were generated with.
    #[arg(long)]
    model: Option<String>,
    /// Number of edges to predict (default: the edge count of --graph).
    #[arg(long)]
    edges: Option<usize>,
    /// True network; needed for `--gamma-from truth` or a default --edges.
    #[arg(long)]
    graph: Option<String>,
    /// In-degree distribution: `truth`, `bootstrap` or `file:<path>`.
    #[arg(long)]
    gamma_from: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SURROGATE_CASCADES)]
    surrogate_cascades: usize,
    #[arg(long, default_value_t = DEFAULT_SURROGATE_GRAPHS)]
    surrogate_graphs: usize,
    /// Cascades used by the heuristic and by the bootstrap (default: all).
    #[arg(long)]
    heuristic_cascades: Option<usize>,
    /// Last time bucket of the surrogate table (default: longest cascade).
    #[arg(long)]
    t_limit: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    step_cap: u32,
    /// Where to write the predicted edge list (default: standard output).
    #[arg(long)]
    predicted: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_threads(cli.common.threads)?;
    let common = &cli.common;
    match cli.command {
        Command::Generate { nodes, edges } => {
            let g = generate_random_graph(nodes, edges, common.seed)?;
            emit(common.output.as_deref(), &format_edge_list(&g))?;
            let mean = if nodes == 0 { 0.0 } else { edges as f64 / nodes as f64 };
            report(common.output.is_some(), &format!("nodes={nodes} edges={edges} mean_in_degree={mean}"));
        }
        Command::Simulate { graph, model, cascades, step_cap } => {
            let g: GraphSource = graph.parse()?;
            let g = g.load(common.seed)?;
            let f: ActivationFunction = model.parse()?;
            if cascades == 0 {
                return Err(Error::Validation("--cascades must be positive".into()));
            }
            // Stream 1 keeps the cascades independent of a random graph drawn from the same seed.
            let traces = run_experiments(&g, &f, cascades, derive_seed(common.seed, 1), step_cap);
            match &common.output {
                Some(path) => save_traces(&traces, path)?,
                None => emit(None, &netcascade::cascade::format_traces(&traces))?,
            }
            report(
                common.output.is_some(),
                &format!("cascades={cascades} longest={} censored={}", traces.t_max(), traces.n_censored()),
            );
        }
        Command::Infer(args) => infer(common, args)?,
        Command::Eval { predicted, truth } => {
            let predicted = load_edge_list(&predicted)?;
            let truth = load_edge_list(&truth)?;
            if predicted.n_nodes() != truth.n_nodes() {
                return Err(Error::Validation(format!(
                    "predicted list has {} nodes but the truth has {}",
                    predicted.n_nodes(),
                    truth.n_nodes()
                )));
            }
            let acc = accuracy(&predicted.edges(), &truth.edges())?;
            emit(common.output.as_deref(), &format!("accuracy={acc}\n"))?;
        }
        Command::Sweep { config, overrides, summary } => {
            let mut text = std::fs::read_to_string(&config).map_err(|e| io_error(&config, e))?;
            for kv in &overrides {
                if !kv.contains('=') {
                    return Err(Error::Validation(format!("--set expects key=value, got {kv:?}")));
                }
                text.push('\n');
                text.push_str(kv);
            }
            let spec = SweepSpec::parse(&text)?;
            let rows = run_sweep(&spec)?;
            let csv = if summary {
                format_summary_csv(spec.swept_parameter, &summarize(&rows))
            } else {
                format_sweep_csv(&rows)
            };
            emit(common.output.as_deref(), &csv)?;
        }
    }
    Ok(())
}

fn infer(common: &Common, args: InferArgs) -> Result<(), Error> {
    let traces = load_traces(&args.traces)?;
    let truth = args
        .graph
        .as_deref()
        .map(|g| g.parse::<GraphSource>().and_then(|g| g.load(common.seed)))
        .transpose()?;
    if let Some(g) = &truth {
        if g.n_nodes() != traces.n_nodes() {
            return Err(Error::Validation(format!(
                "--graph has {} nodes but the traces have {}",
                g.n_nodes(),
                traces.n_nodes()
            )));
        }
    }
    let n_edges = match (args.edges, &truth) {
        (Some(e), _) => e,
        (None, Some(g)) => g.n_edges(),
        (None, None) => return Err(Error::Validation("--edges is required when --graph is not given".into())),
    };

    let likelihood = args.method != Method::Heuristic;
    let model: Option<ActivationFunction> = match (&args.model, likelihood) {
        (Some(m), _) => Some(m.parse()?),
        (None, true) => {
            return Err(Error::Validation(format!("--method {} needs --model", args.method)));
        }
        (None, false) => None,
    };
    let gamma = if likelihood {
        let source = args
            .gamma_from
            .as_deref()
            .ok_or_else(|| Error::Validation(format!("--method {} needs --gamma-from", args.method)))?;
        Some(load_gamma(source, truth.as_ref(), &traces, n_edges, args.heuristic_cascades)?)
    } else {
        None
    };

    let placeholder = ActivationFunction::constant(0.0)?;
    let ctx = InferenceContext {
        traces: &traces,
        model: model.as_ref().unwrap_or(&placeholder),
        n_edges,
        gamma: gamma.as_ref(),
        seed: common.seed,
        step_cap: args.step_cap,
        surrogate_cascades: args.surrogate_cascades,
        surrogate_graphs: args.surrogate_graphs,
        heuristic_cascades: args.heuristic_cascades,
        t_limit: args.t_limit,
    };
    let dump = ctx.scores(args.method)?;
    let edges = dump.select(n_edges);
    let predicted = DirectedGraph::from_edges(traces.n_nodes(), edges)?;

    match &common.output {
        Some(path) => dump.save(path)?,
        None if args.predicted.is_none() => {
            return Err(Error::Validation(
                "give --output for the score matrix or --predicted for the edge list (or both)".into(),
            ))
        }
        None => {}
    }
    emit(args.predicted.as_deref(), &format_edge_list(&predicted))?;
    Ok(())
}

fn load_gamma(
    source: &str,
    truth: Option<&DirectedGraph>,
    traces: &netcascade::cascade::CascadeTraceSet,
    n_edges: usize,
    heuristic_cascades: Option<usize>,
) -> Result<DegreeDistribution, Error> {
    match source {
        "truth" => truth
            .map(in_degree_distribution)
            .ok_or_else(|| Error::Validation("--gamma-from truth needs --graph".into())),
        "bootstrap" => Ok(bootstrap_degree_distribution(
            &traces.truncated(heuristic_cascades.unwrap_or(usize::MAX)),
            n_edges,
        )),
        other => match other.strip_prefix("file:") {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| io_error(Path::new(path), e))?;
                parse_degree_distribution(&text)
            }
            None => Err(Error::Validation(format!(
                "--gamma-from must be truth, bootstrap or file:<path>, got {other:?}"
            ))),
        },
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_error(p, e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

/// Human summary: stdout when the payload went to a file, stderr otherwise.
fn report(payload_in_file: bool, line: &str) {
    if payload_in_file {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> Result<(), Error> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(format!("cannot start thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> Result<(), Error> {
    match threads {
        Some(0) => Err(Error::Validation("--threads must be positive".into())),
        _ => Ok(()),
    }
}
