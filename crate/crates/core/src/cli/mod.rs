//! Command-line front end. The binary only forwards its arguments to
//! [`main_with_args`] and exits with the returned code.

mod config;
mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::envs::{EnvKind, EnvSpec};
use crate::error::{Error, Result};
use crate::experts::{read_demos, record_demonstrations, write_demos, Trajectory};
use crate::io::write_atomic;
use crate::metrics::{cached_baselines, evaluate_policy, performance};
use crate::models::{load_policy, save_policy};
use crate::trainer::{ablate, ablation_means, run_with_progress, RunConfig};
pub use config::{load_config_table, resolve_config, ConfigOverrides};
pub use report::{read_run_report, summarize_reports, ReportSummary, RunReportFile, RUN_REPORT_VERSION};

#[derive(Debug, Parser)]
#[command(name = "ifolab", version, about = "Imitation from observation experiments")]
pub struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// TOML file with run settings; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Record expert demonstrations.
    GenDemos {
        #[arg(long)]
        env: EnvKind,
        /// Number of goal-reaching episodes.
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Output file (default: <out>/demos-<env>-<seed>.tsv).
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Train a policy from demonstrations.
    Train(TrainArgs),
    /// Evaluate a policy checkpoint.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Defaults to the checkpoint's environment.
        #[arg(long)]
        env: Option<EnvKind>,
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
    /// Run every feature combination.
    Ablate(TrainArgs),
    /// Summarize run reports.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub env: Option<EnvKind>,
    /// Demonstration file; recorded from the expert when absent.
    #[arg(long)]
    pub demos: Option<PathBuf>,
    /// Improvement cycles.
    #[arg(long)]
    pub alpha: Option<usize>,
    /// Seeds to run; defaults to the global seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Enable attention, sampling and exploration.
    #[arg(long)]
    pub all_features: bool,
    #[arg(long, conflicts_with = "all_features")]
    pub no_attention: bool,
    #[arg(long, conflicts_with = "all_features")]
    pub no_sampling: bool,
    #[arg(long, conflicts_with = "all_features")]
    pub no_exploration: bool,
    #[arg(long)]
    pub rollouts: Option<usize>,
    #[arg(long)]
    pub pre_size: Option<usize>,
    #[arg(long)]
    pub eval_episodes: Option<usize>,
    #[arg(long)]
    pub demo_episodes: Option<usize>,
}

impl TrainArgs {
    fn overrides(&self) -> ConfigOverrides {
        let off = |flag: bool| if flag { Some(false) } else { None };
        let on = |v: Option<bool>| if self.all_features { Some(true) } else { v };
        ConfigOverrides {
            env: self.env,
            alpha: self.alpha,
            rollouts: self.rollouts,
            pre_size: self.pre_size,
            eval_episodes: self.eval_episodes,
            demo_episodes: self.demo_episodes,
            attention: on(off(self.no_attention)),
            sampling: on(off(self.no_sampling)),
            exploration: on(off(self.no_exploration)),
            seed: None,
        }
    }
}

struct Ctx {
    out: PathBuf,
    quiet: bool,
    seed: u64,
    config: Option<PathBuf>,
}

impl Ctx {
    fn progress(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn resolve(&self, args: &TrainArgs) -> Result<RunConfig> {
        let file = self.config.as_deref().map(load_config_table).transpose()?;
        let mut overrides = args.overrides();
        overrides.seed = Some(self.seed);
        resolve_config(file, &overrides)
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        out: cli.out,
        quiet: cli.quiet,
        seed: cli.seed,
        config: cli.config,
    };
    match cli.command {
        Command::GenDemos { env, n, file } => cmd_gen_demos(&ctx, env, n, file),
        Command::Train(args) => cmd_train(&ctx, &args),
        Command::Evaluate { checkpoint, env, n } => cmd_evaluate(&ctx, &checkpoint, env, n),
        Command::Ablate(args) => cmd_ablate(&ctx, &args),
        Command::Report { files } => cmd_report(&ctx, &files),
    }
}

fn cmd_gen_demos(ctx: &Ctx, env: EnvKind, n: usize, file: Option<PathBuf>) -> Result<()> {
    if n == 0 {
        return Err(Error::Usage("--n must be at least 1".into()));
    }
    let spec = EnvSpec::new(env);
    let demos = record_demonstrations(&spec, n, ctx.seed)?;
    let path = file.unwrap_or_else(|| ctx.out.join(format!("demos-{env}-{}.tsv", ctx.seed)));
    write_demos(&path, &demos, spec.shape)?;
    ctx.progress(format!("wrote {} demonstrations to {}", demos.len(), path.display()));
    Ok(())
}

fn load_or_record_demos(ctx: &Ctx, config: &RunConfig, path: Option<&Path>) -> Result<Vec<Trajectory>> {
    let spec = config.spec();
    match path {
        Some(path) => {
            let (demos, shape) = read_demos(path)?;
            if demos.is_empty() {
                return Err(Error::Input(format!("{} holds no demonstrations", path.display())));
            }
            if shape != Some(spec.shape) || demos.iter().any(|d| d.kind != spec.kind) {
                return Err(Error::Input(format!(
                    "{} holds {} demonstrations with shape {}, but {} needs shape {}",
                    path.display(),
                    demos[0].kind,
                    shape.map_or("?".to_string(), |s| s.to_string()),
                    spec.kind,
                    spec.shape
                )));
            }
            Ok(demos)
        }
        None => {
            ctx.progress(format!("recording {} expert demonstrations", config.demo_episodes));
            record_demonstrations(&spec, config.demo_episodes, config.demo_seed)
        }
    }
}

fn seeds_of(ctx: &Ctx, args: &TrainArgs) -> Vec<u64> {
    if args.seeds.is_empty() {
        vec![ctx.seed]
    } else {
        args.seeds.clone()
    }
}

fn cmd_train(ctx: &Ctx, args: &TrainArgs) -> Result<()> {
    let base = ctx.resolve(args)?;
    base.validate()?;
    let demos = load_or_record_demos(ctx, &base, args.demos.as_deref())?;
    let spec = base.spec();
    let baselines = cached_baselines(&ctx.out, &spec, base.eval_episodes, base.eval_seed)?;
    for seed in seeds_of(ctx, args) {
        let config = RunConfig { seed, ..base.clone() };
        let label = config.features.label();
        let start = Instant::now();
        let outcome = run_with_progress(&config, &demos, Some(&baselines), |r| {
            ctx.progress(format!(
                "[{label} seed {seed}] cycle {}/{}: success {:.2}, non-MAP {:.3}, eval AER {:.3}",
                r.cycle, config.alpha, r.success_rate, r.non_map_fraction, r.eval_aer
            ))
        })?;
        let stem = format!("{}-{}-seed{seed}", label.to_lowercase(), config.env);
        let report = RunReportFile::new(
            &config,
            args.demos.as_deref(),
            &baselines,
            outcome.reports.clone(),
            start.elapsed().as_secs_f64(),
        );
        let path = ctx.out.join(format!("run-{stem}.jsonl"));
        write_atomic(&path, report.to_jsonl()?.as_bytes())?;
        save_policy(&ctx.out.join(format!("policy-{stem}.txt")), &outcome.policy)?;
        let last = outcome.final_report();
        println!(
            "{label} {} seed {seed}: AER {:.3} P {:.3} ({})",
            config.env,
            last.eval_aer,
            last.eval_performance.unwrap_or(f64::NAN),
            path.display()
        );
    }
    Ok(())
}

fn cmd_evaluate(ctx: &Ctx, checkpoint: &Path, env: Option<EnvKind>, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Usage("--n must be at least 1".into()));
    }
    let policy = load_policy(checkpoint)?;
    let kind = env.unwrap_or(policy.env);
    if kind != policy.env {
        return Err(Error::Input(format!(
            "checkpoint is for {} but --env is {kind}",
            policy.env
        )));
    }
    let spec = EnvSpec::new(kind);
    let summary = evaluate_policy(&policy.params, &spec, policy.mode, n, ctx.seed)?;
    let baselines = cached_baselines(&ctx.out, &spec, n, ctx.seed)?;
    let p = performance(summary.aer, &baselines)?;
    println!("{kind} AER {:.3} P {:.3}", summary.aer, p);
    let record = serde_json::json!({
        "checkpoint": checkpoint.display().to_string(),
        "env": kind.to_string(),
        "mode": policy.mode.name(),
        "episodes": n,
        "seed": ctx.seed,
        "aer": summary.aer,
        "performance": p,
        "success_rate": summary.success_rate,
        "baselines": baselines,
    });
    let name = checkpoint.file_stem().map_or("policy".into(), |s| s.to_string_lossy().into_owned());
    let path = ctx.out.join(format!("eval-{name}-{kind}-{n}-{}.json", ctx.seed));
    write_atomic(&path, format!("{record}\n").as_bytes())
}

fn cmd_ablate(ctx: &Ctx, args: &TrainArgs) -> Result<()> {
    if args.all_features || args.no_attention || args.no_sampling || args.no_exploration {
        return Err(Error::Usage("ablate runs every feature combination; drop the feature flags".into()));
    }
    let base = ctx.resolve(args)?;
    base.validate()?;
    let demos = load_or_record_demos(ctx, &base, args.demos.as_deref())?;
    let spec = base.spec();
    let baselines = cached_baselines(&ctx.out, &spec, base.eval_episodes, base.eval_seed)?;
    let seeds = seeds_of(ctx, args);
    let rows = ablate(&base, &demos, &seeds, &baselines, |r| {
        ctx.progress(format!("{} seed {}: P {:.3} AER {:.3}", r.combination, r.seed, r.performance, r.aer))
    })?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Input(e.to_string());
    w.write_record(["combination", "seed", "P", "AER"]).map_err(csv_err)?;
    for r in &rows {
        w.write_record([
            r.combination.clone(),
            r.seed.to_string(),
            format!("{:?}", r.performance),
            format!("{:?}", r.aer),
        ])
        .map_err(csv_err)?;
    }
    let means = ablation_means(&rows);
    for (label, p, a) in &means {
        w.write_record([label.clone(), "mean".into(), format!("{p:?}"), format!("{a:?}")])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    let path = ctx.out.join(format!("ablate-{}.csv", base.env));
    write_atomic(&path, &bytes)?;
    println!("{:<24} {:>8} {:>8}", "combination", "P", "AER");
    for (label, p, a) in &means {
        println!("{label:<24} {p:>8.3} {a:>8.3}");
    }
    ctx.progress(format!("wrote {}", path.display()));
    Ok(())
}

fn cmd_report(ctx: &Ctx, files: &[PathBuf]) -> Result<()> {
    let reports = files.iter().map(|f| read_run_report(f)).collect::<Result<Vec<_>>>()?;
    let summary = summarize_reports(&reports)?;
    print!("{}", summary.table);
    write_atomic(&ctx.out.join("report.csv"), summary.table_csv.as_bytes())?;
    write_atomic(&ctx.out.join("series.csv"), summary.series_csv.as_bytes())?;
    ctx.progress(format!("wrote report.csv and series.csv to {}", ctx.out.display()));
    Ok(())
}

