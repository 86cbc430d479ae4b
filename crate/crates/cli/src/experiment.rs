//! Experiment sweeps: run every (estimator, T, seed) cell of a grid,
//! write one CSV row per cell, and summarize F1 per (estimator, T).
//!
//! Cells run on a work pool; rows are emitted in (estimator, T, seed)
//! order regardless of completion order. All cell seeds derive from the
//! master seed, and the data seeds are shared across estimators so both
//! see the same trajectory. Per-cell failures land in the `error` column
//! and the run continues.

use std::fmt;
use std::fs::{self, File};
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use barkit::rng::derive_seed;
use barkit::{
    build_design, closed_form_estimate, closed_form_estimate_generic, count_transitions,
    generate_graph, infer_edges, ml_estimate, ml_estimate_generic, param_errors, score, simulate,
    true_edges, GraphSpec, InitialDistribution, ModelParams, OptimizerOptions, SpaceConfig,
    TransitionCounts,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Positive,
    Generic,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Positive => "positive",
            Variant::Generic => "generic",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Ml,
    ClosedForm,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Ml => "ml",
            Estimator::ClosedForm => "closed-form",
        })
    }
}

fn default_a_min() -> f64 {
    0.1
}
fn default_b_min() -> f64 {
    0.2
}
fn default_rho_min() -> f64 {
    0.2
}
fn default_rho_max() -> f64 {
    0.8
}
fn default_c_thresh() -> f64 {
    0.5
}

/// JSON description of a sweep. Omitted bound fields fall back to the
/// toolkit defaults, which are echoed into every output header.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub variant: Variant,
    pub p: usize,
    pub d_max: usize,
    #[serde(default = "default_a_min")]
    pub a_min: f64,
    #[serde(default = "default_b_min")]
    pub b_min: f64,
    #[serde(default = "default_rho_min")]
    pub rho_min: f64,
    #[serde(default = "default_rho_max")]
    pub rho_max: f64,
    pub t_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub estimators: Vec<Estimator>,
    #[serde(default = "default_c_thresh")]
    pub c_thresh: f64,
    pub output_dir: std::path::PathBuf,
    pub master_seed: u64,
}

impl ExperimentConfig {
    fn validate(&self) -> anyhow::Result<()> {
        if self.t_grid.is_empty() {
            bail!("t_grid must not be empty");
        }
        if self.seeds.is_empty() {
            bail!("seeds must not be empty");
        }
        if self.estimators.is_empty() {
            bail!("estimators must not be empty");
        }
        Ok(())
    }

    fn provenance(&self) -> String {
        format!(
            "# variant={}\n# p={}\n# d_max={}\n# a_min={}\n# b_min={}\n# rho_min={}\n\
             # rho_max={}\n# c_thresh={}\n# master_seed={}\n# initial=uniform\n",
            self.variant,
            self.p,
            self.d_max,
            self.a_min,
            self.b_min,
            self.rho_min,
            self.rho_max,
            self.c_thresh,
            self.master_seed
        )
    }
}

#[derive(Clone)]
struct Scored {
    f1: f64,
    precision: f64,
    recall: f64,
    max_abs_err_a: f64,
    frob_err_a: f64,
    err_b: f64,
    err_rho: f64,
    converged: bool,
}

#[derive(Clone)]
struct Row {
    estimator: Estimator,
    t: usize,
    seed: u64,
    outcome: Result<Scored, String>,
    runtime_ms: u128,
}

pub fn run_experiment(path: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading experiment config {}", path.display()))?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing experiment config {}", path.display()))?;
    config.validate()?;
    let space = SpaceConfig::new(config.p, config.b_min, config.rho_min, config.rho_max)?;
    let spec = GraphSpec::new(
        config.p,
        config.d_max,
        config.a_min,
        config.variant == Variant::Generic,
    )?;
    spec.check_against(&space)?;

    let data_cells: Vec<(usize, usize)> = (0..config.t_grid.len())
        .flat_map(|ti| (0..config.seeds.len()).map(move |si| (ti, si)))
        .collect();
    let computed: Vec<Vec<Row>> = data_cells
        .par_iter()
        .map(|&(ti, si)| run_data_cell(&config, &space, &spec, ti, si))
        .collect();

    let mut rows = Vec::with_capacity(computed.len() * config.estimators.len());
    for ei in 0..config.estimators.len() {
        for ti in 0..config.t_grid.len() {
            for si in 0..config.seeds.len() {
                rows.push(computed[ti * config.seeds.len() + si][ei].clone());
            }
        }
    }

    fs::create_dir_all(&config.output_dir).with_context(|| {
        format!("creating output directory {}", config.output_dir.display())
    })?;
    let results_path = config.output_dir.join("results.csv");
    write_results(&config, &rows, &results_path)?;
    println!("wrote {}", results_path.display());
    let summary_path = config.output_dir.join("summary.csv");
    let plot_path = config.output_dir.join("summary.dat");
    write_summary(&config, &rows, &summary_path, &plot_path)?;
    println!("wrote {}", summary_path.display());
    println!("wrote {}", plot_path.display());
    Ok(())
}

/// Generates, simulates, and runs every estimator for one (T, seed) pair.
/// The returned rows are aligned with the config's estimator list.
fn run_data_cell(
    config: &ExperimentConfig,
    space: &SpaceConfig,
    spec: &GraphSpec,
    ti: usize,
    si: usize,
) -> Vec<Row> {
    let t = config.t_grid[ti];
    let seed = config.seeds[si];
    let graph_seed = derive_seed(config.master_seed, &[seed]);
    let sim_seed = derive_seed(config.master_seed, &[seed, t as u64]);
    let data: barkit::Result<(ModelParams, TransitionCounts)> = (|| {
        let truth = generate_graph(spec, space, graph_seed)?;
        let traj = simulate(&truth.rule(), t, &InitialDistribution::Uniform, sim_seed);
        let counts = count_transitions(&traj)?;
        Ok((truth, counts))
    })();
    config
        .estimators
        .iter()
        .map(|&estimator| {
            let start = Instant::now();
            let outcome = match &data {
                Err(err) => Err(err.to_string()),
                Ok((truth, counts)) => run_estimator(config, space, estimator, truth, counts)
                    .map_err(|err| err.to_string()),
            };
            Row { estimator, t, seed, outcome, runtime_ms: start.elapsed().as_millis() }
        })
        .collect()
}

fn run_estimator(
    config: &ExperimentConfig,
    space: &SpaceConfig,
    estimator: Estimator,
    truth: &ModelParams,
    counts: &TransitionCounts,
) -> barkit::Result<Scored> {
    let opts = OptimizerOptions::default();
    let result = match (estimator, config.variant) {
        (Estimator::Ml, Variant::Positive) => ml_estimate(counts, space, &opts)?,
        (Estimator::Ml, Variant::Generic) => ml_estimate_generic(counts, space, &opts)?,
        (Estimator::ClosedForm, Variant::Positive) => {
            closed_form_estimate(counts, &build_design(counts), space, false)?
        }
        (Estimator::ClosedForm, Variant::Generic) => {
            closed_form_estimate_generic(counts, &build_design(counts), space)?
        }
    };
    let inferred = infer_edges(&result.params, config.a_min, config.c_thresh)?;
    let report = score(&true_edges(truth), &inferred)?;
    let errors = param_errors(truth, &result.params)?;
    Ok(Scored {
        f1: report.f1,
        precision: report.precision,
        recall: report.recall,
        max_abs_err_a: errors.max_abs_a,
        frob_err_a: errors.frob_a,
        err_b: errors.err_b,
        err_rho: errors.err_rho,
        converged: result.converged,
    })
}

fn write_results(
    config: &ExperimentConfig,
    rows: &[Row],
    path: &Path,
) -> anyhow::Result<()> {
    let mut file = File::create(path)?;
    file.write_all(config.provenance().as_bytes())?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record([
        "variant",
        "estimator",
        "p",
        "d_max",
        "T",
        "seed",
        "f1",
        "precision",
        "recall",
        "max_abs_err_A",
        "frob_err_A",
        "err_b",
        "err_rho",
        "converged",
        "runtime_ms",
        "error",
    ])?;
    for row in rows {
        let mut record = vec![
            config.variant.to_string(),
            row.estimator.to_string(),
            config.p.to_string(),
            config.d_max.to_string(),
            row.t.to_string(),
            row.seed.to_string(),
        ];
        match &row.outcome {
            Ok(scored) => {
                record.extend([
                    scored.f1.to_string(),
                    scored.precision.to_string(),
                    scored.recall.to_string(),
                    scored.max_abs_err_a.to_string(),
                    scored.frob_err_a.to_string(),
                    scored.err_b.to_string(),
                    scored.err_rho.to_string(),
                    scored.converged.to_string(),
                    row.runtime_ms.to_string(),
                    String::new(),
                ]);
            }
            Err(message) => {
                record.extend(std::iter::repeat(String::new()).take(8));
                record.push(row.runtime_ms.to_string());
                record.push(message.clone());
            }
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Mean and sample standard deviation; NaN mean marks an empty group.
fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn write_summary(
    config: &ExperimentConfig,
    rows: &[Row],
    summary_path: &Path,
    plot_path: &Path,
) -> anyhow::Result<()> {
    let grouped: Vec<Vec<Vec<f64>>> = config
        .estimators
        .iter()
        .enumerate()
        .map(|(ei, _)| {
            config
                .t_grid
                .iter()
                .map(|&t| {
                    rows.iter()
                        .filter(|row| {
                            row.estimator == config.estimators[ei] && row.t == t
                        })
                        .filter_map(|row| row.outcome.as_ref().ok().map(|s| s.f1))
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut file = File::create(summary_path)?;
    file.write_all(config.provenance().as_bytes())?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(["estimator", "T", "scored_cells", "mean_f1", "std_f1"])?;
    for (ei, estimator) in config.estimators.iter().enumerate() {
        for (ti, &t) in config.t_grid.iter().enumerate() {
            let (mean, std) = mean_std(&grouped[ei][ti]);
            writer.write_record([
                estimator.to_string(),
                t.to_string(),
                grouped[ei][ti].len().to_string(),
                mean.to_string(),
                std.to_string(),
            ])?;
        }
    }
    writer.flush()?;

    let mut plot = File::create(plot_path)?;
    plot.write_all(config.provenance().as_bytes())?;
    let names: Vec<String> = config
        .estimators
        .iter()
        .flat_map(|e| [format!("{e}_mean_f1"), format!("{e}_std_f1")])
        .collect();
    writeln!(plot, "# T {}", names.join(" "))?;
    for (ti, &t) in config.t_grid.iter().enumerate() {
        let mut line = t.to_string();
        for ei in 0..config.estimators.len() {
            let (mean, std) = mean_std(&grouped[ei][ti]);
            line.push_str(&format!(" {mean} {std}"));
        }
        writeln!(plot, "{line}")?;
    }
    Ok(())
}
