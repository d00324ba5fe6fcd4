//! The improvement-cycle driver: IDM training, expert labeling, behavioral
//! cloning, policy rollouts and resampling, with the three feature switches.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{Env, EnvKind, EnvSpec, StateShape};
use crate::error::{Error, Result};
use crate::experts::{make_pairs, Trajectory};
use crate::metrics::{evaluate_policy, performance, BaselinePair};
use crate::models::{
    label_pairs, rollout, train_idm, train_policy, EpisodeRecord, Mode, Model, ModelSpec, NetConfig, PolicyCheckpoint,
    Source, TrainConfig, Transition,
};
use crate::rng::{derive_rng, derive_seed};
use crate::sampler::{build_training_set, PostSelection, SamplingReport};

/// The three switchable components. All off is plain BCO(α).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Features {
    pub attention: bool,
    pub sampling: bool,
    pub exploration: bool,
}

impl Features {
    pub const BCO: Features = Features::new(false, false, false);
    pub const IUPE: Features = Features::new(true, true, true);

    /// Ablation rows in reporting order.
    pub const ABLATION: [Features; 8] = [
        Features::new(false, false, false),
        Features::new(true, false, false),
        Features::new(false, true, false),
        Features::new(false, false, true),
        Features::new(true, true, false),
        Features::new(true, false, true),
        Features::new(false, true, true),
        Features::new(true, true, true),
    ];

    pub const fn new(attention: bool, sampling: bool, exploration: bool) -> Self {
        Features {
            attention,
            sampling,
            exploration,
        }
    }

    pub fn label(self) -> &'static str {
        match (self.attention, self.sampling, self.exploration) {
            (false, false, false) => "BCO",
            (true, false, false) => "Attention",
            (false, true, false) => "Sampling",
            (false, false, true) => "Exploration",
            (true, true, false) => "Attention+Sampling",
            (true, false, true) => "Attention+Exploration",
            (false, true, true) => "Sampling+Exploration",
            (true, true, true) => "IUPE",
        }
    }

    pub fn from_label(label: &str) -> Option<Features> {
        Features::ABLATION.into_iter().find(|f| f.label() == label)
    }
}

impl Default for Features {
    fn default() -> Self {
        Features::IUPE
    }
}

/// Action selection when evaluating the policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Same as the training rollouts: sampled with exploration, MAP without.
    #[default]
    Policy,
    Map,
    Explore,
}

impl EvalMode {
    pub fn resolve(self, features: Features) -> Mode {
        match self {
            EvalMode::Policy => Mode::from_flag(features.exploration),
            EvalMode::Map => Mode::Map,
            EvalMode::Explore => Mode::Explore,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub env: EnvKind,
    /// Improvement cycles α.
    pub alpha: usize,
    /// Policy rollouts |E| per cycle.
    pub rollouts: usize,
    /// Random-policy transitions in the pre-demonstration set.
    pub pre_size: usize,
    /// Size of the resampled IDM training set; `None` means `pre_size`.
    pub budget: Option<usize>,
    pub net: NetConfig,
    pub idm: TrainConfig,
    pub pm: TrainConfig,
    pub features: Features,
    pub seed: u64,
    /// Continue training the previous cycle's networks instead of rebuilding.
    pub warm_start: bool,
    /// Keep rollouts of all cycles for sampling instead of the current one.
    pub accumulate_post: bool,
    pub post_selection: PostSelection,
    /// Evaluation episodes per cycle.
    pub eval_episodes: usize,
    /// Seed of the evaluation episodes, shared by every run and baseline.
    pub eval_seed: u64,
    pub eval_mode: EvalMode,
    /// Expert episodes recorded when no demonstration file is given.
    pub demo_episodes: usize,
    pub demo_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::for_env(EnvKind::CartPole)
    }
}

impl RunConfig {
    /// Desk-scale defaults for `env`.
    pub fn for_env(env: EnvKind) -> Self {
        let maze = matches!(env, EnvKind::Maze(_));
        RunConfig {
            env,
            alpha: 20,
            rollouts: if maze { 64 } else { 32 },
            pre_size: if maze { 10_000 } else { 5_000 },
            budget: None,
            net: NetConfig::default(),
            idm: TrainConfig::default(),
            pm: TrainConfig::default(),
            features: Features::IUPE,
            seed: 0,
            warm_start: true,
            accumulate_post: false,
            post_selection: PostSelection::Proportional,
            eval_episodes: 100,
            eval_seed: 1_000_003,
            eval_mode: EvalMode::Policy,
            demo_episodes: if maze { 100 } else { 20 },
            demo_seed: 7,
        }
    }

    pub fn spec(&self) -> EnvSpec {
        EnvSpec::new(self.env)
    }

    pub fn budget(&self) -> usize {
        self.budget.unwrap_or(self.pre_size)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.alpha >= 1, "alpha must be at least 1"),
            (self.rollouts >= 1, "rollouts must be at least 1"),
            (self.pre_size >= 1, "pre_size must be at least 1"),
            (self.budget() >= 1, "budget must be at least 1"),
            (self.eval_episodes >= 1, "eval_episodes must be at least 1"),
            (self.demo_episodes >= 1, "demo_episodes must be at least 1"),
            (self.idm.batch_size >= 1 && self.pm.batch_size >= 1, "batch_size must be at least 1"),
            (self.idm.lr > 0.0 && self.pm.lr > 0.0, "learning rates must be positive"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config((*msg).into())),
            None => Ok(()),
        }
    }

    fn model_spec(&self, train: TrainConfig) -> ModelSpec {
        let spec = self.spec();
        ModelSpec {
            shape: spec.shape,
            actions: spec.action_count,
            net: NetConfig {
                attention: self.features.attention,
                ..self.net
            },
            train,
        }
    }
}

/// Diagnostics of one improvement cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub cycle: usize,
    pub idm_train_size: usize,
    pub idm_loss: f64,
    pub idm_accuracy: f64,
    pub pm_loss: f64,
    pub pm_accuracy: f64,
    /// `Σv_e / |E|` over this cycle's rollouts.
    pub success_rate: f64,
    /// Fraction of rollout steps whose action was not the MAP action.
    pub non_map_fraction: f64,
    pub rollout_steps: usize,
    pub mean_rollout_reward: f64,
    pub eval_aer: f64,
    pub eval_success_rate: f64,
    pub eval_performance: Option<f64>,
    /// Present when the sampling feature assembled the next IDM set.
    pub sampling: Option<SamplingReport>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub reports: Vec<IterationReport>,
    pub policy: PolicyCheckpoint,
    pub idm: Model,
}

impl RunOutcome {
    pub fn final_report(&self) -> &IterationReport {
        self.reports.last().expect("at least one cycle")
    }
}

/// Random-policy transitions, episode by episode, truncated to `size`.
pub fn generate_pre_demos(spec: &EnvSpec, size: usize, seed: u64) -> Result<Vec<Transition>> {
    if size == 0 {
        return Err(Error::Config("pre-demonstration size must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(size);
    let mut rng = derive_rng(seed, "pre-actions", 0);
    let mut episode = 0;
    while out.len() < size {
        let mut env = Env::reset(spec, derive_seed(seed, "pre-episode", episode))?;
        episode += 1;
        let mut state = env.observe();
        while !env.is_done() && out.len() < size {
            let action = rng.gen_range(0..spec.action_count);
            let next = env.step(action)?.state;
            out.push(Transition {
                state: std::mem::replace(&mut state, next.clone()),
                action,
                next,
                source: Source::Pre,
            });
        }
    }
    Ok(out)
}

fn check_demos(spec: &EnvSpec, demos: &[Trajectory]) -> Result<()> {
    if demos.is_empty() {
        return Err(Error::Input("no demonstrations".into()));
    }
    for (i, d) in demos.iter().enumerate() {
        let fits = match spec.shape {
            StateShape::Vector(_) => d.kind == spec.kind,
            StateShape::Grid { .. } => matches!(d.kind, EnvKind::Maze(_)) && d.kind == spec.kind,
        };
        if !fits || d.states.iter().any(|s| s.len() != spec.shape.len()) {
            return Err(Error::Input(format!(
                "demonstration {} is for {} with {} values per state, expected {} with shape {}",
                i + 1,
                d.kind,
                d.states[0].len(),
                spec.kind,
                spec.shape
            )));
        }
    }
    Ok(())
}

/// Runs α improvement cycles on `demos`. When `baselines` are given each
/// cycle's evaluation also reports Performance.
pub fn run(config: &RunConfig, demos: &[Trajectory], baselines: Option<&BaselinePair>) -> Result<RunOutcome> {
    run_with_progress(config, demos, baselines, |_| {})
}

/// [`run`], calling `progress` after every cycle.
pub fn run_with_progress(
    config: &RunConfig,
    demos: &[Trajectory],
    baselines: Option<&BaselinePair>,
    mut progress: impl FnMut(&IterationReport),
) -> Result<RunOutcome> {
    config.validate()?;
    let spec = config.spec();
    check_demos(&spec, demos)?;
    let pairs = make_pairs(demos)?;
    let seed = config.seed;
    let pre = generate_pre_demos(&spec, config.pre_size, derive_seed(seed, "pre", 0))?;
    let idm_spec = config.model_spec(config.idm);
    let pm_spec = config.model_spec(config.pm);
    let label_mode = Mode::from_flag(config.features.exploration);
    let eval_mode = config.eval_mode.resolve(config.features);

    let mut train_set = pre.clone();
    let mut idm: Option<Model> = None;
    let mut pm: Option<Model> = None;
    let mut history: Vec<EpisodeRecord> = Vec::new();
    let mut reports = Vec::with_capacity(config.alpha);

    for cycle in 0..config.alpha {
        let size = train_set.len();
        let mut step = || -> Result<IterationReport> {
            let warm_idm = if config.warm_start { idm.take() } else { None };
            let (idm_model, idm_stats) =
                train_idm(&train_set, &idm_spec, warm_idm, &mut derive_rng(seed, "idm", cycle as u64))?;
            let labels = label_pairs(
                &idm_model.params,
                spec.shape,
                &pairs,
                label_mode,
                &mut derive_rng(seed, "label", cycle as u64),
            )?;
            let warm_pm = if config.warm_start { pm.take() } else { None };
            let (pm_model, pm_stats) =
                train_policy(&pairs, &labels, &pm_spec, warm_pm, &mut derive_rng(seed, "pm", cycle as u64))?;

            let records = (0..config.rollouts)
                .map(|e| {
                    let s = derive_seed(seed, "rollout", (cycle * config.rollouts + e) as u64);
                    rollout(&pm_model.params, &spec, label_mode, s, spec.step_cap)
                })
                .collect::<Result<Vec<_>>>()?;
            let wins = records.iter().filter(|r| r.goal).count();
            let steps: usize = records.iter().map(EpisodeRecord::len).sum();
            let off_map: usize = records.iter().map(EpisodeRecord::non_map_count).sum();
            let mean_reward = records.iter().map(|r| r.reward).sum::<f64>() / records.len() as f64;

            let eval = evaluate_policy(
                &pm_model.params,
                &spec,
                eval_mode,
                config.eval_episodes,
                config.eval_seed,
            )?;
            let eval_performance = baselines.map(|b| performance(eval.aer, b)).transpose()?;

            if config.accumulate_post {
                history.extend(records);
            } else {
                history = records;
            }
            let sampling = if config.features.sampling {
                let (set, report) = build_training_set(
                    &pre,
                    &history,
                    config.budget(),
                    spec.action_count,
                    config.post_selection,
                    &mut derive_rng(seed, "sampling", cycle as u64),
                )?;
                train_set = set;
                Some(report)
            } else {
                train_set = history.iter().flat_map(|r| r.transitions.iter().cloned()).collect();
                None
            };

            let report = IterationReport {
                cycle: cycle + 1,
                idm_train_size: size,
                idm_loss: idm_stats.loss,
                idm_accuracy: idm_stats.accuracy,
                pm_loss: pm_stats.loss,
                pm_accuracy: pm_stats.accuracy,
                success_rate: wins as f64 / config.rollouts as f64,
                non_map_fraction: if steps == 0 { 0.0 } else { off_map as f64 / steps as f64 },
                rollout_steps: steps,
                mean_rollout_reward: mean_reward,
                eval_aer: eval.aer,
                eval_success_rate: eval.success_rate,
                eval_performance,
                sampling,
            };
            idm = Some(idm_model);
            pm = Some(pm_model);
            Ok(report)
        };
        let report = step().map_err(|e| e.in_cycle(cycle + 1))?;
        progress(&report);
        reports.push(report);
    }

    Ok(RunOutcome {
        reports,
        policy: PolicyCheckpoint {
            env: config.env,
            mode: eval_mode,
            params: pm.expect("alpha >= 1").params,
        },
        idm: idm.expect("alpha >= 1"),
    })
}

/// One ablation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub combination: String,
    pub seed: u64,
    pub performance: f64,
    pub aer: f64,
}

/// Runs every feature combination for every seed, in reporting order per seed.
pub fn ablate(
    base: &RunConfig,
    demos: &[Trajectory],
    seeds: &[u64],
    baselines: &BaselinePair,
    mut progress: impl FnMut(&AblationRow),
) -> Result<Vec<AblationRow>> {
    if seeds.is_empty() {
        return Err(Error::Usage("ablation needs at least one seed".into()));
    }
    let mut rows = Vec::with_capacity(8 * seeds.len());
    for &seed in seeds {
        for features in Features::ABLATION {
            let config = RunConfig {
                features,
                seed,
                ..base.clone()
            };
            let outcome = run(&config, demos, Some(baselines))?;
            let last = outcome.final_report();
            let row = AblationRow {
                combination: features.label().to_string(),
                seed,
                performance: last.eval_performance.expect("baselines given"),
                aer: last.eval_aer,
            };
            progress(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Per-combination means over seeds, in reporting order.
pub fn ablation_means(rows: &[AblationRow]) -> Vec<(String, f64, f64)> {
    Features::ABLATION
        .iter()
        .filter_map(|f| {
            let cell: Vec<&AblationRow> = rows.iter().filter(|r| r.combination == f.label()).collect();
            if cell.is_empty() {
                return None;
            }
            let n = cell.len() as f64;
            Some((
                f.label().to_string(),
                cell.iter().map(|r| r.performance).sum::<f64>() / n,
                cell.iter().map(|r| r.aer).sum::<f64>() / n,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::record_demonstrations;

    #[test]
    fn labels_cover_all_combinations_once() {
        let labels: Vec<&str> = Features::ABLATION.iter().map(|f| f.label()).collect();
        assert_eq!(
            labels,
            [
                "BCO",
                "Attention",
                "Sampling",
                "Exploration",
                "Attention+Sampling",
                "Attention+Exploration",
                "Sampling+Exploration",
                "IUPE"
            ]
        );
        for f in Features::ABLATION {
            assert_eq!(Features::from_label(f.label()), Some(f));
        }
    }

    #[test]
    fn pre_demos_have_requested_size() {
        let spec = EnvSpec::new(EnvKind::CartPole);
        let pre = generate_pre_demos(&spec, 1000, 4).unwrap();
        assert_eq!(pre.len(), 1000);
        assert!(pre.iter().all(|t| t.source == Source::Pre));
        assert_eq!(pre, generate_pre_demos(&spec, 1000, 4).unwrap());
    }

    fn tiny(env: EnvKind, features: Features) -> RunConfig {
        RunConfig {
            alpha: 2,
            rollouts: 3,
            pre_size: 300,
            net: NetConfig {
                hidden: 8,
                ..NetConfig::default()
            },
            idm: TrainConfig {
                epochs: 2,
                ..TrainConfig::default()
            },
            pm: TrainConfig {
                epochs: 2,
                ..TrainConfig::default()
            },
            eval_episodes: 3,
            features,
            ..RunConfig::for_env(env)
        }
    }

    #[test]
    fn bco_baseline_runs_to_completion() {
        let spec = EnvSpec::new(EnvKind::MountainCar);
        let demos = record_demonstrations(&spec, 2, 1).unwrap();
        let out = run(&tiny(EnvKind::MountainCar, Features::BCO), &demos, None).unwrap();
        assert_eq!(out.reports.len(), 2);
        assert!(out.reports.iter().all(|r| r.sampling.is_none() && r.non_map_fraction == 0.0));
        // second cycle trains on the first cycle's rollouts only
        assert_eq!(out.reports[0].idm_train_size, 300);
        assert_eq!(out.reports[1].idm_train_size, out.reports[0].rollout_steps);
    }

    #[test]
    fn identical_configs_reproduce() {
        let spec = EnvSpec::new(EnvKind::Maze(3));
        let demos = record_demonstrations(&spec, 3, 2).unwrap();
        let cfg = tiny(EnvKind::Maze(3), Features::IUPE);
        let a = run(&cfg, &demos, None).unwrap();
        let b = run(&cfg, &demos, None).unwrap();
        assert_eq!(a.reports, b.reports);
        assert_eq!(a.policy, b.policy);
        for r in &a.reports {
            let s = r.sampling.as_ref().unwrap();
            assert_eq!(s.success_count as f64 / s.episode_count as f64, r.success_rate);
        }
    }

    #[test]
    fn mismatched_demos_are_rejected() {
        let demos = record_demonstrations(&EnvSpec::new(EnvKind::CartPole), 1, 0).unwrap();
        let err = run(&tiny(EnvKind::Acrobot, Features::IUPE), &demos, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
