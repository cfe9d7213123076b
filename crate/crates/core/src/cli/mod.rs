//! Command-line interface: dataset generation, training, evaluation,
//! ablations and checkpoint inspection.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags, malformed
//! configuration, missing or unreadable files), 1 for runtime failures.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalOptions, EvalReport, EvalSet};
use crate::instances::{InstanceSet, ProblemKind};
use crate::policy::Checkpoint;
use crate::trainer::{
    desk_eval_count, run_training, EvalConfig, OptimizerKind, RegularizationMode, TrainConfig, TrainOptions,
};

#[derive(Debug, Parser)]
#[command(name = "clroute", version, about = "Continual learning across sizes for neural TSP/CVRP solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate evaluation instance sets (one JSONL file per size).
    GenerateData(GenerateArgs),
    /// Train a policy with the ascending-size curriculum.
    Train(TrainArgs),
    /// Evaluate a checkpoint on instance sets.
    Evaluate(EvaluateArgs),
    /// Run the replay / regularization toggle matrix.
    Ablate(AblateArgs),
    /// Print checkpoint metadata.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    Tsp,
    Cvrp,
}

impl From<Problem> for ProblemKind {
    fn from(p: Problem) -> Self {
        match p {
            Problem::Tsp => ProblemKind::Tsp,
            Problem::Cvrp => ProblemKind::Cvrp,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Regularization {
    None,
    Inter,
    Intra,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Opt {
    Sgd,
    Adam,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub problem: Problem,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// Instances per size (default: 1000 up to 20, 200 up to 50, 64 above).
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 1234)]
    pub seed: u64,
    /// Output directory (default: <out-root>/data).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "CLROUTE_OUT", default_value = "runs")]
    pub out_root: PathBuf,
}

#[derive(Debug, Args, Clone, Default)]
pub struct TrainOverrides {
    #[arg(long, value_enum)]
    pub problem: Option<Problem>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub steps_per_epoch: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub n_starts: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Enable or disable experience replay (true/false).
    #[arg(long)]
    pub replay: Option<bool>,
    #[arg(long, value_enum)]
    pub regularization: Option<Regularization>,
    #[arg(long)]
    pub intra_interval: Option<usize>,
    #[arg(long, value_enum)]
    pub optimizer: Option<Opt>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub warmup_epochs: Option<usize>,
    /// Evaluation sizes after training (default: the training sizes).
    #[arg(long, value_delimiter = ',')]
    pub eval_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub eval_count: Option<usize>,
    #[arg(long)]
    pub eval_n_starts: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunFlags {
    /// TOML configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run directory (must not exist yet).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "CLROUTE_OUT", default_value = "runs")]
    pub out_root: PathBuf,
    /// Omit elapsed times from logs and manifests.
    #[arg(long)]
    pub no_timestamps: bool,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Suppress per-epoch progress on stderr.
    #[arg(long)]
    pub quiet: bool,
    #[command(flatten)]
    pub overrides: TrainOverrides,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunFlags,
    /// Continue from a checkpoint of a run with the same configuration.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Evaluation sets produced by generate-data instead of fresh ones.
    #[arg(long)]
    pub eval_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Directory with `<problem>_<size>.jsonl` sets; missing sizes are generated.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 1234)]
    pub seed: u64,
    #[arg(long)]
    pub n_starts: Option<usize>,
    /// Use the eight unit-square symmetries.
    #[arg(long)]
    pub aug: bool,
    /// Reuse the evaluation settings and sets of a training run.
    #[arg(long, conflicts_with_all = ["sizes", "data", "count", "n_starts", "aug"])]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Also write report.csv and report.jsonl here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub run: RunFlags,
    /// Toggles to vary: any of er, inter, intra. The all-off baseline is
    /// always included.
    #[arg(long, value_delimiter = ',', default_value = "er,inter,intra")]
    pub grid: Vec<String>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub json: bool,
}

/// Errors caused by the invocation rather than the computation.
fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::Io { .. } | Error::Parse { .. } | Error::Checkpoint(_) | Error::Json(_)
    )
}

pub fn exit_code(e: &Error) -> i32 {
    if is_usage(e) {
        2
    } else {
        1
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string();
            let msg: Vec<&str> = msg.lines().map(str::trim).filter(|l| !l.is_empty() && *l != "|").collect();
            eprintln!("error: {}", msg.join(" "));
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenerateData(a) => generate_data(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Ablate(a) => ablate(a),
        Command::Inspect(a) => inspect(a),
    }
}

pub fn dataset_file_name(kind: ProblemKind, size: usize) -> String {
    format!("{kind}_{size}.jsonl")
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn fresh_dir(path: &Path) -> Result<()> {
    if path.exists() && fs::read_dir(path).map_err(|e| Error::io(path, e))?.next().is_some() {
        return Err(Error::Config(format!(
            "output directory {} already exists and is not empty",
            path.display()
        )));
    }
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn generate_data(a: GenerateArgs) -> Result<()> {
    let kind: ProblemKind = a.problem.into();
    let out = a.out.unwrap_or_else(|| a.out_root.join("data"));
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let mut files = Vec::new();
    for &n in &a.sizes {
        let count = a.count.unwrap_or_else(|| desk_eval_count(n));
        let set = InstanceSet::generate(kind, n, count, a.seed)?;
        let name = dataset_file_name(kind, n);
        set.save(&out.join(&name))?;
        files.push(json!({ "file": name, "size": n, "count": count, "sha256": set.hash()? }));
        println!("{}", out.join(&name).display());
    }
    write_json(
        &out.join("data_manifest.json"),
        &json!({ "problem": kind, "seed": a.seed, "files": files }),
    )
}

/// Defaults, then the config file, then flags.
pub fn effective_config(
    file: Option<&Path>,
    seed: Option<u64>,
    o: &TrainOverrides,
) -> Result<TrainConfig> {
    let mut cfg = match file {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str::<TrainConfig>(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(p) = o.problem {
        cfg.problem = p.into();
    }
    if let Some(s) = &o.sizes {
        cfg.schedule.sizes.clone_from(s);
    }
    if let Some(e) = o.epochs {
        cfg.schedule.epochs = e;
    }
    if let Some(t) = o.steps_per_epoch {
        cfg.schedule.steps_per_epoch = t;
    }
    if let Some(b) = o.batch_size {
        cfg.schedule.batch_size = b;
    }
    if let Some(s) = o.n_starts {
        cfg.n_starts = s;
    }
    if let Some(x) = o.alpha {
        cfg.alpha = x;
    }
    if let Some(r) = o.replay {
        cfg.replay = r;
    }
    if let Some(r) = o.regularization {
        cfg.regularization = match r {
            Regularization::None => RegularizationMode::None,
            Regularization::Inter => RegularizationMode::Inter,
            Regularization::Intra => RegularizationMode::Intra,
        };
        if cfg.regularization != RegularizationMode::Intra && o.intra_interval.is_none() {
            cfg.intra_interval = None;
        }
    }
    if let Some(i) = o.intra_interval {
        cfg.intra_interval = Some(i);
    }
    if let Some(k) = o.optimizer {
        cfg.optimizer.kind = match k {
            Opt::Sgd => OptimizerKind::Sgd,
            Opt::Adam => OptimizerKind::Adam,
        };
    }
    if let Some(lr) = o.lr {
        cfg.optimizer.learning_rate = lr;
    }
    if let Some(w) = o.warmup_epochs {
        cfg.warmup_epochs = Some(w);
    }
    if o.eval_sizes.is_some() || o.eval_count.is_some() || o.eval_n_starts.is_some() {
        let ev = cfg.eval.get_or_insert_with(EvalConfig::default);
        if let Some(s) = &o.eval_sizes {
            ev.sizes.clone_from(s);
        }
        if let Some(c) = o.eval_count {
            ev.count = Some(c);
        }
        if let Some(n) = o.eval_n_starts {
            ev.n_starts = Some(n);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_sets(dir: &Path, kind: ProblemKind, sizes: &[usize]) -> Result<Vec<InstanceSet>> {
    sizes
        .iter()
        .map(|&n| InstanceSet::load(&dir.join(dataset_file_name(kind, n))))
        .collect()
}

/// Record of a training run, written next to its artifacts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: TrainConfig,
    pub checkpoints: Vec<String>,
    pub eval_data: Option<String>,
    pub eval_sets: Vec<serde_json::Value>,
    pub eval_n_starts: Option<usize>,
    pub eval_augment: bool,
    pub cross_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

struct RunSpec<'a> {
    cfg: TrainConfig,
    out: PathBuf,
    flags: &'a RunFlags,
    resume: Option<Checkpoint>,
    eval_data: Option<PathBuf>,
}

fn execute_run(spec: RunSpec<'_>, command: &str) -> Result<(RunManifest, Option<EvalReport>)> {
    let RunSpec {
        cfg,
        out,
        flags,
        resume,
        eval_data,
    } = spec;
    fresh_dir(&out)?;
    let hash = cfg.hash()?;
    fs::write(out.join("config.toml"), cfg.to_toml_string()?).map_err(|e| Error::io(out.join("config.toml"), e))?;

    let mut eval_sets = Vec::new();
    let mut data_dir = None;
    if let Some(ev) = &cfg.eval {
        let sizes = if ev.sizes.is_empty() { cfg.schedule.sizes.clone() } else { ev.sizes.clone() };
        let sets = match &eval_data {
            Some(dir) => load_sets(dir, cfg.problem, &sizes)?,
            None => ev.instance_sets(cfg.problem, &cfg.schedule)?,
        };
        let dir = out.join("eval_data");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for s in sets {
            s.save(&dir.join(dataset_file_name(s.kind, s.size)))?;
            eval_sets.push(EvalSet::new(s, flags.workers)?);
        }
        data_dir = Some(dir);
    }

    let t0 = std::time::Instant::now();
    let outcome = run_training(
        &cfg,
        &TrainOptions {
            out_dir: Some(out.clone()),
            timestamps: !flags.no_timestamps,
            workers: flags.workers,
            resume,
            initial_exemplar: None,
            eval_sets: eval_sets.clone(),
            progress: !flags.quiet,
        },
    )?;
    let ev = cfg.eval.clone().unwrap_or_default();
    let manifest = RunManifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config_hash: hash,
        checkpoints: outcome
            .checkpoint_paths
            .iter()
            .map(|p| p.strip_prefix(&out).unwrap_or(p).display().to_string())
            .collect(),
        eval_data: data_dir.map(|d| d.strip_prefix(&out).unwrap_or(&d).display().to_string()),
        eval_sets: eval_sets
            .iter()
            .map(|s| json!({ "size": s.size(), "count": s.set.instances.len(), "sha256": s.hash }))
            .collect(),
        eval_n_starts: ev.n_starts,
        eval_augment: ev.augment,
        cross_size: outcome.report.as_ref().map(|r| r.cross_size),
        wall_time_s: (!flags.no_timestamps).then(|| t0.elapsed().as_secs_f64()),
        config: cfg,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok((manifest, outcome.report))
}

fn default_run_dir(root: &Path, label: &str, cfg: &TrainConfig) -> Result<PathBuf> {
    Ok(root.join(format!("{label}-{}-seed{}-{}", cfg.problem, cfg.seed, &cfg.hash()?[..8])))
}

fn train(a: TrainArgs) -> Result<()> {
    let f = &a.run;
    let cfg = effective_config(f.config.as_deref(), f.seed, &f.overrides)?;
    let out = match &f.out {
        Some(o) => o.clone(),
        None => default_run_dir(&f.out_root, "train", &cfg)?,
    };
    let resume = a.resume.as_deref().map(Checkpoint::load).transpose()?;
    let (manifest, report) = execute_run(
        RunSpec {
            cfg,
            out: out.clone(),
            flags: f,
            resume,
            eval_data: a.eval_data,
        },
        "train",
    )?;
    if let Some(r) = report {
        print!("{}", r.to_table());
    }
    println!("run directory: {}", out.display());
    println!("config hash: {}", manifest.config_hash);
    Ok(())
}

fn print_report(r: &EvalReport, format: Format) -> Result<()> {
    match format {
        Format::Table => print!("{}", r.to_table()),
        Format::Csv => print!("{}", r.to_csv()),
        Format::Jsonl => print!("{}", r.to_jsonl()?),
    }
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let params = ck.params()?;
    let kind = params.config().kind;
    let (sets, opts) = if let Some(m) = &a.manifest {
        let text = fs::read_to_string(m).map_err(|e| Error::io(m, e))?;
        let manifest: RunManifest = serde_json::from_str(&text)?;
        let run_dir = m.parent().unwrap_or(Path::new("."));
        let data = manifest
            .eval_data
            .as_ref()
            .ok_or_else(|| Error::Config("the run has no evaluation sets".into()))?;
        let sizes: Vec<usize> = manifest
            .eval_sets
            .iter()
            .filter_map(|v| v["size"].as_u64().map(|s| s as usize))
            .collect();
        let sets = load_sets(&run_dir.join(data), kind, &sizes)?;
        let opts = EvalOptions {
            n_starts: manifest.eval_n_starts,
            augment: manifest.eval_augment,
            workers: a.workers,
        };
        (sets, opts)
    } else {
        let sizes = a
            .sizes
            .clone()
            .ok_or_else(|| Error::Config("--sizes or --manifest is required".into()))?;
        let mut sets = Vec::new();
        for &n in &sizes {
            let file = a.data.as_ref().map(|d| d.join(dataset_file_name(kind, n)));
            let set = match file {
                Some(f) if f.exists() => InstanceSet::load(&f)?,
                _ => InstanceSet::generate(kind, n, a.count.unwrap_or_else(|| desk_eval_count(n)), a.seed)?,
            };
            sets.push(set);
        }
        let opts = EvalOptions {
            n_starts: a.n_starts,
            augment: a.aug,
            workers: a.workers,
        };
        (sets, opts)
    };
    let eval_sets = sets
        .into_iter()
        .map(|s| EvalSet::new(s, a.workers))
        .collect::<Result<Vec<_>>>()?;
    let label = format!("{}@epoch{}", ck.config_hash.get(..8).unwrap_or("policy"), ck.epoch);
    let report = evaluate(&params, &eval_sets, &opts, label, Some(a.checkpoint.display().to_string()))?;
    print_report(&report, a.format)?;
    if let Some(out) = &a.out {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        fs::write(out.join("report.csv"), report.to_csv()).map_err(|e| Error::io(out.join("report.csv"), e))?;
        fs::write(out.join("report.jsonl"), report.to_jsonl()?)
            .map_err(|e| Error::io(out.join("report.jsonl"), e))?;
    }
    Ok(())
}

/// Variants of the toggle matrix: `(label, replay, regularization)`.
pub fn ablation_variants(grid: &[String]) -> Result<Vec<(String, bool, RegularizationMode)>> {
    let mut er = false;
    let mut regs = vec![RegularizationMode::None];
    for g in grid.iter().map(|g| g.trim()).filter(|g| !g.is_empty()) {
        match g {
            "er" => er = true,
            "inter" => regs.push(RegularizationMode::Inter),
            "intra" => regs.push(RegularizationMode::Intra),
            other => return Err(Error::Config(format!("unknown ablation toggle {other:?}"))),
        }
    }
    let mut out = Vec::new();
    for replay in if er { vec![false, true] } else { vec![false] } {
        for &reg in &regs {
            let mut label = String::new();
            if replay {
                label.push_str("er");
            }
            match reg {
                RegularizationMode::None => {}
                RegularizationMode::Inter => label.push_str(if replay { "+inter" } else { "inter" }),
                RegularizationMode::Intra => label.push_str(if replay { "+intra" } else { "intra" }),
            }
            if label.is_empty() {
                label.push_str("baseline");
            }
            out.push((label, replay, reg));
        }
    }
    Ok(out)
}

fn ablate(a: AblateArgs) -> Result<()> {
    let f = &a.run;
    let base = effective_config(f.config.as_deref(), f.seed, &f.overrides)?;
    let variants = ablation_variants(&a.grid)?;
    let root = match &f.out {
        Some(o) => o.clone(),
        None => default_run_dir(&f.out_root, "ablate", &base)?,
    };
    fresh_dir(&root)?;
    let intra_default = base.intra_interval.unwrap_or_else(|| (base.schedule.task_interval() / 2).max(1));
    let mut rows = Vec::new();
    let mut csv = String::from("variant,replay,regularization,config_hash,cross_size\n");
    for (label, replay, reg) in variants {
        let mut cfg = base.clone();
        cfg.replay = replay;
        cfg.regularization = reg;
        cfg.intra_interval = (reg == RegularizationMode::Intra).then_some(intra_default);
        if reg == RegularizationMode::None {
            cfg.alpha = 0.0;
            cfg.warmup_epochs = None;
        }
        cfg.validate()?;
        if !f.quiet {
            eprintln!("== {label}");
        }
        let (manifest, _) = execute_run(
            RunSpec {
                cfg,
                out: root.join(&label),
                flags: f,
                resume: None,
                eval_data: None,
            },
            "ablate",
        )?;
        let cross = manifest.cross_size.map(|c| format!("{c:.6}")).unwrap_or_default();
        csv.push_str(&format!(
            "{label},{replay},{},{},{cross}\n",
            serde_json::to_value(reg)?.as_str().unwrap_or(""),
            manifest.config_hash
        ));
        rows.push(json!({ "variant": label, "config_hash": manifest.config_hash, "cross_size": manifest.cross_size }));
    }
    fs::write(root.join("ablation.csv"), &csv).map_err(|e| Error::io(root.join("ablation.csv"), e))?;
    write_json(&root.join("ablation.json"), &rows)?;
    print!("{csv}");
    Ok(())
}

fn inspect(a: InspectArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let summary = json!({
        "version": ck.version,
        "policy": ck.policy,
        "parameters": ck.weights.len(),
        "epoch": ck.epoch,
        "task_index": ck.task_index,
        "seed": ck.seed,
        "config_hash": ck.config_hash,
        "rng": ck.rng,
        "optimizer": ck.optimizer.as_ref().map(|o| json!({ "kind": o.kind, "step": o.step })),
        "exemplar_taken_at_epoch": ck.exemplar.as_ref().map(|e| e.taken_at_epoch),
    });
    if a.json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!("checkpoint   {}", a.checkpoint.display());
        println!("version      {}", ck.version);
        println!(
            "policy       {} d={} heads={} layers={} ff={} clip={}",
            ck.policy.kind,
            ck.policy.embed_dim,
            ck.policy.n_heads,
            ck.policy.n_encoder_layers,
            ck.policy.feedforward_dim,
            ck.policy.logit_clip
        );
        println!("parameters   {}", ck.weights.len());
        println!("epoch        {} (task {})", ck.epoch, ck.task_index);
        println!("seed         {}", ck.seed);
        println!("config hash  {}", ck.config_hash);
        if let Some(o) = &ck.optimizer {
            println!("optimizer    {} after {} steps", o.kind, o.step);
        }
        match &ck.exemplar {
            Some(e) => println!("exemplar     taken after epoch {}", e.taken_at_epoch),
            None => println!("exemplar     none"),
        }
    }
    Ok(())
}
