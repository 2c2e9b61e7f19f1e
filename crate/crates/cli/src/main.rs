use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brickbo::assembler::{count_combinations, CountConvention};
use brickbo::dataset::{self, GroupBParams, ShapeInstance};
use brickbo::explicit::{self, Method, Objective};
use brickbo::export;
use brickbo::{
    assemble, AssemblyConfig, AssemblyStatus, BoConfig, Error, Primitive, RollbackMode,
    StabilityConfig, TargetShape,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const EXIT_USAGE: u8 = 1;
const EXIT_SATURATED: u8 = 2;
const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(
    name = "brickbo",
    version,
    about = "Sequential brick assembly by multi-objective Bayesian optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble bricks toward a target shape; writes trace.json, final.obj and final.vox.
    Assemble(Box<AssembleArgs>),
    /// Explicit-function benchmark (height, width, depth, studs) over several methods and seeds.
    Benchmark(BenchmarkArgs),
    /// Generate, validate, augment, convert and summarize shape datasets (JSON lines).
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Count two- or three-brick combinations by brute force.
    Count(CountArgs),
    /// Turn a brick list into a target shape file.
    Voxelize(VoxelizeArgs),
}

/// Every assembly option. A `--config` JSON file uses the same names as the
/// long flags (kebab-case); flags given on the command line win.
#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct AssembleArgs {
    /// JSON config file with any of the options below.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Target shape file: {"extents": [m1, m2, m3], "cells": [[i, j, k], ...]}.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bricks to add (T).
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bricks removed per rollback.
    #[arg(long)]
    rollback_window: Option<usize>,
    /// Rollback threshold; 0 disables rollback in shortfall mode.
    #[arg(long)]
    rollback_threshold: Option<f64>,
    #[arg(long, value_enum)]
    rollback_mode: Option<ModeArg>,
    /// Visits after which a step stops rolling back.
    #[arg(long)]
    max_repeats: Option<usize>,
    /// Starting bricks as JSON, e.g. '[[0,0,0,0]]'.
    #[arg(long, value_parser = parse_bricks)]
    initial: Option<Vec<Primitive>>,
    /// Uniformly sampled candidates per step (v).
    #[arg(long)]
    initial_random: Option<usize>,
    /// Observed candidates per step (q).
    #[arg(long)]
    candidates: Option<usize>,
    /// Placements scored per acquisition maximization.
    #[arg(long)]
    acquisition_samples: Option<usize>,
    /// Seconds per acquisition maximization instead of a fixed sample count.
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    /// Range of the occupiability weight, "lo,hi".
    #[arg(long, value_parser = parse_range)]
    lambda_o: Option<(f64, f64)>,
    /// Range of the stability weight, "lo,hi".
    #[arg(long, value_parser = parse_range)]
    lambda_s: Option<(f64, f64)>,
    /// Hyperparameter restarts of the surrogate fit.
    #[arg(long)]
    restarts: Option<usize>,
    /// Lateral center-of-mass shift in studs.
    #[arg(long)]
    perturbation: Option<f64>,
    #[arg(long)]
    w_margin: Option<f64>,
    #[arg(long)]
    w_disconnect: Option<f64>,
    /// Layer height of the OBJ export, in studs.
    #[arg(long)]
    layer_height: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Shortfall,
    Literal,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected \"lo,hi\", got {s:?}"))?;
    let f = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((f(lo)?, f(hi)?))
}

fn parse_bricks(s: &str) -> Result<Vec<Primitive>, String> {
    serde_json::from_str(s).map_err(|e| format!("expected a JSON list of [a1, a2, z, d]: {e}"))
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, default_value = "all")]
    objective: String,
    /// Comma-separated subset of bo, random, greedy, oracle.
    #[arg(long, default_value = "bo,random,greedy,oracle")]
    methods: String,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// Number of seeds.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// First seed; runs use seed, seed + 1, ...
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long)]
    initial_random: Option<usize>,
    #[arg(long)]
    acquisition_samples: Option<usize>,
    /// Output directory for benchmark.csv and summary.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Write the built-in instances of a class group.
    Generate {
        #[arg(long, value_parser = ["a", "b", "c", "all"])]
        group: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate one parametric group-B instance, e.g. '{"class": "wall", "width": 12, "layers": 3}'.
    Shape {
        #[arg(long)]
        params: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every sequence; lists each invalid line with brick index and reason.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Random valid reorderings of every instance.
    Augment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-class instance count, mean and std of brick counts (CSV).
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite bricks given by center coordinates [x1, x2, z, d] into anchor form.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    n: usize,
    /// Also print the parallel / perpendicular split (n = 2).
    #[arg(long)]
    split: bool,
    #[arg(long, value_enum, default_value = "anchored-sets")]
    convention: ConventionArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    AnchoredSets,
    Sequences,
}

#[derive(Args)]
struct VoxelizeArgs {
    /// JSON list of bricks, or a single dataset line {"class": ..., "bricks": [...]}.
    #[arg(long)]
    input: PathBuf,
    /// Grid extents "m1,m2,m3"; defaults to the tight box of the bricks.
    #[arg(long)]
    extents: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Saturated(String),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    if jobs < 1 {
        return Err(Failure::Usage("--jobs must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn merged_assemble_args(flags: AssembleArgs) -> Result<AssembleArgs, Failure> {
    let Some(path) = &flags.config else {
        return Ok(flags);
    };
    let mut base: serde_json::Value = serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let overrides = serde_json::to_value(&flags).expect("flags serialize");
    let (Some(obj), serde_json::Value::Object(over)) = (base.as_object_mut(), overrides) else {
        return Err(Failure::Usage(format!(
            "{}: expected a JSON object",
            path.display()
        )));
    };
    for (k, v) in over {
        if !v.is_null() {
            obj.insert(k, v);
        }
    }
    serde_json::from_value(base).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cmd_assemble(flags: AssembleArgs) -> Result<(), Failure> {
    let a = merged_assemble_args(flags)?;
    let target_path = a
        .target
        .clone()
        .ok_or_else(|| Failure::Usage("--target is required".into()))?;
    let out = a
        .out
        .clone()
        .ok_or_else(|| Failure::Usage("--out is required".into()))?;

    let defaults = AssemblyConfig::default();
    let cfg = AssemblyConfig {
        steps: a.steps.unwrap_or(defaults.steps),
        rollback_window: a.rollback_window.unwrap_or(defaults.rollback_window),
        rollback_threshold: a.rollback_threshold.unwrap_or(defaults.rollback_threshold),
        rollback_mode: match a.rollback_mode {
            Some(ModeArg::Literal) => RollbackMode::Literal,
            Some(ModeArg::Shortfall) => RollbackMode::Shortfall,
            None => defaults.rollback_mode,
        },
        max_repeats: a.max_repeats.unwrap_or(defaults.max_repeats),
        initial: a.initial.clone().unwrap_or(defaults.initial),
    };
    let d = BoConfig::default();
    let bo = BoConfig {
        initial_random: a.initial_random.unwrap_or(d.initial_random),
        candidates: a.candidates.unwrap_or(d.candidates),
        acquisition_samples: a.acquisition_samples.unwrap_or(d.acquisition_samples),
        time_budget: a.time_budget.or(d.time_budget),
        gamma0: a.gamma0.unwrap_or(d.gamma0),
        gamma1: a.gamma1.unwrap_or(d.gamma1),
        lambda_o: a.lambda_o.unwrap_or(d.lambda_o),
        lambda_s: a.lambda_s.unwrap_or(d.lambda_s),
        seed: a.seed.unwrap_or(d.seed),
        fit: brickbo::gp::FitConfig {
            restarts: a.restarts.unwrap_or(d.fit.restarts),
            ..d.fit
        },
    };
    let s = StabilityConfig::default();
    let stability = StabilityConfig {
        perturbation: a.perturbation.unwrap_or(s.perturbation),
        w_margin: a.w_margin.unwrap_or(s.w_margin),
        w_disconnect: a.w_disconnect.unwrap_or(s.w_disconnect),
    };
    let layer_height = a.layer_height.unwrap_or(export::DEFAULT_LAYER_HEIGHT);
    cfg.validate()?;
    bo.validate()?;
    stability.validate()?;
    if !(layer_height.is_finite() && layer_height > 0.0) {
        return Err(Failure::Usage(format!(
            "layer height must be positive, got {layer_height}"
        )));
    }

    let target = TargetShape::load(&target_path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", target_path.display())))?;
    let trace = assemble(&target, &cfg, &bo, &stability)?;

    fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    write(&out.join("trace.json"), &(trace.to_json() + "\n"))?;
    write(
        &out.join("final.obj"),
        &export::to_obj(&trace.final_bricks, layer_height)?,
    )?;
    write(
        &out.join("final.vox"),
        &export::to_voxels(&trace.final_bricks, target.extents())?,
    )?;

    let covered = brickbo::occupiability::coverage(
        &brickbo::Combination::from_bricks(trace.final_bricks.iter().copied())?,
        &target,
    );
    eprintln!(
        "{} bricks, {} rollbacks, target coverage {:.3}",
        trace.final_bricks.len(),
        trace.rollbacks(),
        covered
    );
    match trace.status {
        AssemblyStatus::Complete => Ok(()),
        AssemblyStatus::Saturated => Err(Failure::Saturated(format!(
            "no feasible placement left after {} bricks; partial results written",
            trace.final_bricks.len()
        ))),
    }
}

fn parse_list<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(Failure::from))
        .collect()
}

fn cmd_benchmark(a: BenchmarkArgs) -> Result<(), Failure> {
    let objectives = if a.objective == "all" {
        Objective::ALL.to_vec()
    } else {
        parse_list(&a.objective)?
    };
    let methods: Vec<Method> = parse_list(&a.methods)?;
    if a.steps < 1 || a.seeds < 1 {
        return Err(Failure::Usage("--steps and --seeds must be >= 1".into()));
    }
    let d = BoConfig::default();
    let bo = BoConfig {
        candidates: a.candidates.unwrap_or(d.candidates),
        initial_random: a.initial_random.unwrap_or(d.initial_random),
        acquisition_samples: a.acquisition_samples.unwrap_or(d.acquisition_samples),
        ..d
    };
    bo.validate()?;
    let seeds: Vec<u64> = (a.seed..a.seed + a.seeds).collect();
    let pool = thread_pool(a.jobs)?;
    let rows =
        explicit::benchmark_with(&objectives, &methods, a.steps, &seeds, &bo, |jobs, work| {
            pool.install(|| jobs.par_iter().map(work).collect())
        })?;
    fs::create_dir_all(&a.out).map_err(|e| io_err(&a.out, e))?;
    write(&a.out.join("benchmark.csv"), &explicit::rows_to_csv(&rows))?;
    let summary = explicit::summarize(&rows);
    write(
        &a.out.join("summary.csv"),
        &explicit::summary_to_csv(&summary),
    )?;
    for s in summary.iter().filter(|s| s.step == a.steps) {
        eprintln!(
            "{:>6} {:>7}: {:.2} ± {:.2}",
            s.method.name(),
            s.objective.name(),
            s.mean,
            s.halfwidth
        );
    }
    Ok(())
}

fn read_instances(path: &Path) -> Result<Vec<ShapeInstance>, Failure> {
    dataset::read_jsonl(&read(path)?)
        .into_iter()
        .map(|(line, r)| r.map_err(|e| Failure::Usage(format!("{}:{line}: {e}", path.display()))))
        .collect()
}

fn cmd_dataset(cmd: DatasetCommand) -> Result<(), Failure> {
    match cmd {
        DatasetCommand::Generate { group, out } => {
            let g = if group == "all" {
                '*'
            } else {
                group.chars().next().unwrap_or('?')
            };
            let instances = dataset::generate_collection(g)?;
            emit(out.as_deref(), &dataset::write_jsonl(&instances))
        }
        DatasetCommand::Shape { params, out } => {
            let p: GroupBParams = serde_json::from_str(&params)
                .map_err(|e| Failure::Usage(format!("--params: {e}")))?;
            let inst = dataset::generate_group_b(&p)?;
            emit(out.as_deref(), &(inst.to_json_line() + "\n"))
        }
        DatasetCommand::Validate { input, jobs } => {
            let text = read(&input)?;
            let lines = dataset::read_jsonl(&text);
            let pool = thread_pool(jobs)?;
            let reports: Vec<Option<String>> = pool.install(|| {
                lines
                    .par_iter()
                    .map(|(line, parsed)| match parsed {
                        Err(e) => Some(format!("line {line}: {e}")),
                        Ok(inst) => dataset::validate_sequence(&inst.sequence)
                            .err()
                            .map(|v| format!("line {line}: {v}")),
                    })
                    .collect()
            });
            let bad: Vec<String> = reports.into_iter().flatten().collect();
            for r in &bad {
                println!("{r}");
            }
            if bad.is_empty() {
                println!("{} instances valid", lines.len());
                Ok(())
            } else {
                Err(Failure::Invalid(format!(
                    "{} of {} instances invalid",
                    bad.len(),
                    lines.len()
                )))
            }
        }
        DatasetCommand::Augment {
            input,
            count,
            seed,
            out,
        } => {
            let instances = read_instances(&input)?;
            let mut text = String::new();
            for (i, inst) in instances.iter().enumerate() {
                if let Err(v) = dataset::validate_sequence(&inst.sequence) {
                    return Err(Failure::Invalid(format!("instance {}: {v}", i + 1)));
                }
                for order in dataset::augment(inst, seed.wrapping_add(i as u64), count) {
                    let aug = ShapeInstance {
                        class_label: inst.class_label,
                        sequence: order,
                    };
                    text.push_str(&aug.to_json_line());
                    text.push('\n');
                }
            }
            emit(out.as_deref(), &text)
        }
        DatasetCommand::Stats { input, out } => {
            let instances = read_instances(&input)?;
            emit(
                out.as_deref(),
                &dataset::stats_to_csv(&dataset::stats(&instances)),
            )
        }
        DatasetCommand::Convert { input, out } => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct CenterLine {
                class: dataset::ShapeClass,
                bricks: Vec<(f64, f64, f64, i64)>,
            }
            let text = read(&input)?;
            let mut lines = String::new();
            for (i, line) in text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
            {
                let at = |e: String| Failure::Usage(format!("{}:{}: {e}", input.display(), i + 1));
                let c: CenterLine = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
                let sequence = c
                    .bricks
                    .iter()
                    .map(|&(x1, x2, z, d)| Primitive::from_center(x1, x2, z, d))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| at(e.to_string()))?;
                lines.push_str(
                    &ShapeInstance {
                        class_label: c.class,
                        sequence,
                    }
                    .to_json_line(),
                );
                lines.push('\n');
            }
            emit(out.as_deref(), &lines)
        }
    }
}

fn cmd_count(a: CountArgs) -> Result<(), Failure> {
    let convention = match a.convention {
        ConventionArg::AnchoredSets => CountConvention::AnchoredSets,
        ConventionArg::Sequences => CountConvention::Sequences,
    };
    let c = count_combinations(a.n, convention)?;
    println!("{}", c.total);
    if a.split {
        match (c.parallel, c.perpendicular) {
            (Some(par), Some(perp)) => println!("parallel {par}\nperpendicular {perp}"),
            _ => return Err(Failure::Usage("--split is only defined for n = 2".into())),
        }
    }
    let note = match convention {
        CountConvention::AnchoredSets => {
            "distinct brick sets containing the origin brick, every brick on layer >= 0"
        }
        CountConvention::Sequences => "ordered growth sequences from the origin brick",
    };
    eprintln!("convention: {note}");
    if a.n == 3 {
        eprintln!("published three-brick count: 3566 (its convention is not stated)");
    }
    Ok(())
}

fn cmd_voxelize(a: VoxelizeArgs) -> Result<(), Failure> {
    let text = read(&a.input)?;
    let bricks: Vec<Primitive> = match serde_json::from_str::<Vec<Primitive>>(&text) {
        Ok(b) => b,
        Err(_) => {
            ShapeInstance::from_json_line(text.trim())
                .map_err(|e| Failure::Usage(format!("{}: {e}", a.input.display())))?
                .sequence
        }
    };
    let extents = match &a.extents {
        None => None,
        Some(s) => {
            let v: Vec<i32> = s
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|e| Failure::Usage(format!("--extents {s:?}: {e}")))
                })
                .collect::<Result<_, _>>()?;
            let ext: [i32; 3] = v
                .try_into()
                .map_err(|_| Failure::Usage(format!("--extents needs 3 values, got {s:?}")))?;
            Some(ext)
        }
    };
    let target = TargetShape::from_bricks(&bricks, extents)?;
    target.save(&a.out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Assemble(a) => cmd_assemble(*a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Dataset(c) => cmd_dataset(c),
        Command::Count(a) => cmd_count(a),
        Command::Voxelize(a) => cmd_voxelize(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Saturated(m)) => {
            eprintln!("saturated: {m}");
            ExitCode::from(EXIT_SATURATED)
        }
        Err(Failure::Invalid(m)) => {
            eprintln!("invalid: {m}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
