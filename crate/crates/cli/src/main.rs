//! `bar`: generate random networks, simulate trajectories, fit parameters,
//! inspect the exact chain, score graph recovery, and sweep experiment
//! grids.
//!
//! Exit codes: 0 on success, 1 on a command-line usage error, 2 when a
//! precondition fails or a run aborts.

mod experiment;

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use barkit::{
    build_chain, build_design, closed_form_estimate, closed_form_estimate_generic,
    count_transitions, entropy_rate, generate_graph, infer_edges, ml_estimate,
    ml_estimate_generic, param_errors, score, simulate, true_edges, GraphSpec,
    InitialDistribution, OptimizerOptions, ParamsFile, SpaceConfig, State, Trajectory,
};

use experiment::{run_experiment, Estimator, Variant};

#[derive(Parser)]
#[command(name = "bar", version, about = "Bernoulli autoregressive network toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random parameter set and write it as JSON.
    Generate(GenerateArgs),
    /// Sample a trajectory from a parameter file.
    Simulate(SimulateArgs),
    /// Fit parameters to a trajectory.
    Estimate(EstimateArgs),
    /// Dump the exact transition matrix, stationary law, and entropy rate.
    Exact(ExactArgs),
    /// Score an estimated parameter file against the ground truth.
    Score(ScoreArgs),
    /// Run an (estimator x T x seed) sweep described by a JSON config.
    Experiment(ExperimentArgs),
}

/// Parameter-space bounds shared by several subcommands.
#[derive(Args)]
struct SpaceFlags {
    /// Noise-weight floor.
    #[arg(long, default_value_t = 0.2)]
    b_min: f64,
    /// Lower spontaneous firing rate.
    #[arg(long, default_value_t = 0.2)]
    rho_min: f64,
    /// Upper spontaneous firing rate.
    #[arg(long, default_value_t = 0.8)]
    rho_max: f64,
}

impl SpaceFlags {
    fn config(&self, p: usize) -> barkit::Result<SpaceConfig> {
        SpaceConfig::new(p, self.b_min, self.rho_min, self.rho_max)
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of nodes.
    #[arg(long)]
    p: usize,
    /// Largest in-degree.
    #[arg(long)]
    d_max: usize,
    /// Smallest edge weight.
    #[arg(long, default_value_t = 0.1)]
    a_min: f64,
    /// Split edges into excitatory and inhibitory at random.
    #[arg(long)]
    signed: bool,
    #[command(flatten)]
    space: SpaceFlags,
    /// Generation seed.
    #[arg(long)]
    seed: u64,
    /// Output parameter JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Initial {
    /// Uniform over all states.
    Uniform,
    /// Point mass on the all-zeros state.
    Zeros,
}

#[derive(Args)]
struct SimulateArgs {
    /// Parameter JSON file.
    #[arg(long)]
    params: PathBuf,
    /// Number of transitions to sample.
    #[arg(long)]
    steps: usize,
    /// Simulation seed.
    #[arg(long)]
    seed: u64,
    /// Law of the first state.
    #[arg(long, value_enum, default_value_t = Initial::Uniform)]
    initial: Initial,
    /// Write the compact binary format instead of text.
    #[arg(long)]
    binary: bool,
    /// Output trajectory path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Trajectory file, text or binary.
    #[arg(long)]
    trajectory: PathBuf,
    /// Estimator to run.
    #[arg(long, value_enum)]
    method: Estimator,
    /// Model variant to fit.
    #[arg(long, value_enum, default_value_t = Variant::Positive)]
    variant: Variant,
    #[command(flatten)]
    space: SpaceFlags,
    /// Replace the per-node noise offsets by their average
    /// (closed form on the positive variant only).
    #[arg(long)]
    shared_noise: bool,
    /// Iteration cap per node of the gradient ascent.
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Convergence tolerance of the gradient ascent.
    #[arg(long, default_value_t = 1e-8)]
    grad_tol: f64,
    /// Output estimate JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExactArgs {
    /// Parameter JSON file.
    #[arg(long)]
    params: PathBuf,
    /// Write the transition matrix here as `state_u,state_v,prob` rows.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Write the stationary distribution here as `state,pi` rows.
    #[arg(long)]
    stationary: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Ground-truth parameter JSON file.
    #[arg(long)]
    truth: PathBuf,
    /// Estimated parameter JSON file.
    #[arg(long)]
    estimate: PathBuf,
    /// Smallest detectable edge weight.
    #[arg(long, default_value_t = 0.1)]
    a_min: f64,
    /// Detection threshold as a fraction of `a_min`.
    #[arg(long, default_value_t = 0.5)]
    c_thresh: f64,
    /// Report JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config JSON file.
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if let Command::Estimate(args) = &cli.command {
        if args.shared_noise && args.variant == Variant::Generic {
            eprintln!("error: --shared-noise applies only to the positive variant");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Exact(args) => cmd_exact(args),
        Command::Score(args) => cmd_score(args),
        Command::Experiment(args) => run_experiment(&args.config),
    }
}

fn load_params(path: &PathBuf) -> anyhow::Result<(barkit::ModelParams, SpaceConfig)> {
    ParamsFile::load(path)
        .and_then(|file| file.into_params())
        .with_context(|| format!("loading parameters from {}", path.display()))
}

fn cmd_generate(args: GenerateArgs) -> anyhow::Result<()> {
    let config = args.space.config(args.p)?;
    let spec = GraphSpec::new(args.p, args.d_max, args.a_min, args.signed)?;
    let params = generate_graph(&spec, &config, args.seed)?;
    ParamsFile::from_params(&params, &config).save(&args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let (params, _) = load_params(&args.params)?;
    let initial = match args.initial {
        Initial::Uniform => InitialDistribution::Uniform,
        Initial::Zeros => InitialDistribution::PointMass(State::ZEROS),
    };
    let traj = simulate(&params.rule(), args.steps, &initial, args.seed);
    if args.binary {
        traj.save_binary(&args.out)?;
    } else {
        traj.save_text(&args.out)?;
    }
    println!("wrote {} ({} transitions)", args.out.display(), traj.t());
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> anyhow::Result<()> {
    let traj = Trajectory::load(&args.trajectory)
        .with_context(|| format!("loading trajectory from {}", args.trajectory.display()))?;
    let counts = count_transitions(&traj)?;
    let config = args.space.config(traj.p())?;
    let opts = OptimizerOptions {
        max_iters: args.max_iters,
        grad_tolerance: args.grad_tol,
        ..OptimizerOptions::default()
    };
    let result = match (args.method, args.variant) {
        (Estimator::Ml, Variant::Positive) => ml_estimate(&counts, &config, &opts)?,
        (Estimator::Ml, Variant::Generic) => ml_estimate_generic(&counts, &config, &opts)?,
        (Estimator::ClosedForm, Variant::Positive) => {
            closed_form_estimate(&counts, &build_design(&counts), &config, args.shared_noise)?
        }
        (Estimator::ClosedForm, Variant::Generic) => {
            closed_form_estimate_generic(&counts, &build_design(&counts), &config)?
        }
    };
    result.save(&config, &args.out)?;
    println!(
        "wrote {} (converged={}, iterations={}, log_likelihood={})",
        args.out.display(),
        result.converged,
        result.iterations,
        result.likelihood.total
    );
    Ok(())
}

fn cmd_exact(args: ExactArgs) -> anyhow::Result<()> {
    let (params, _) = load_params(&args.params)?;
    let chain = build_chain(&params.rule())?;
    if let Some(path) = &args.matrix {
        chain.write_matrix_csv(BufWriter::new(File::create(path)?))?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &args.stationary {
        chain.write_stationary_csv(BufWriter::new(File::create(path)?))?;
        println!("wrote {}", path.display());
    }
    println!(
        "p={} states={} entropy_rate_nats={}",
        chain.p(),
        1usize << chain.p(),
        entropy_rate(&chain)
    );
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> anyhow::Result<()> {
    let (truth, _) = load_params(&args.truth)?;
    let (estimate, _) = load_params(&args.estimate)?;
    let inferred = infer_edges(&estimate, args.a_min, args.c_thresh)?;
    let report = score(&true_edges(&truth), &inferred)?;
    let errors = param_errors(&truth, &estimate)?;
    let value = serde_json::json!({
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "true_positives": report.true_positives,
        "false_positives": report.false_positives,
        "false_negatives": report.false_negatives,
        "param_errors": {
            "max_abs_a": errors.max_abs_a,
            "frob_a": errors.frob_a,
            "err_b": errors.err_b,
            "err_rho": errors.err_rho,
        },
    });
    let text = serde_json::to_string_pretty(&value)? + "\n";
    match &args.out {
        Some(path) => {
            std::fs::write(path, text)?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
