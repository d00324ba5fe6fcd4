//! Average episodic reward (AER), Performance, and the random/expert
//! baselines Performance is scaled against.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{Env, EnvKind, EnvSpec};
use crate::error::{Error, Result};
use crate::experts::expert_episode;
use crate::io::write_atomic;
use crate::models::{rollout, Mode};
use crate::nn::ParamSet;
use crate::rng::{derive_rng, derive_seed};

pub const BASELINE_VERSION: u32 = 1;

/// Mean of per-episode total rewards.
pub fn aer(episode_rewards: &[f64]) -> Result<f64> {
    if episode_rewards.is_empty() {
        return Err(Error::Input("AER needs at least one episode".into()));
    }
    Ok(episode_rewards.iter().sum::<f64>() / episode_rewards.len() as f64)
}

/// Random-policy and expert AER for one environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselinePair {
    pub env: EnvKind,
    pub random: f64,
    pub expert: f64,
    pub episodes: usize,
    pub seed: u64,
}

impl BaselinePair {
    pub fn new(env: EnvKind, random: f64, expert: f64, episodes: usize, seed: u64) -> Result<Self> {
        let pair = BaselinePair {
            env,
            random,
            expert,
            episodes,
            seed,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.random.is_finite() || !self.expert.is_finite() || self.random == self.expert {
            return Err(Error::Config(format!(
                "degenerate baselines for {}: random {} and expert {}",
                self.env, self.random, self.expert
            )));
        }
        Ok(())
    }
}

/// `(aer - random) / (expert - random)`: 0 at the random policy, 1 at the expert.
pub fn performance(policy_aer: f64, baselines: &BaselinePair) -> Result<f64> {
    baselines.validate()?;
    Ok((policy_aer - baselines.random) / (baselines.expert - baselines.random))
}

/// Seed of evaluation episode `index`. Random, expert and learned policies
/// all see the same starts, and for mazes the same layouts.
pub fn eval_episode_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, "eval", index as u64)
}

/// One episode of the uniform random policy; returns (reward, goal).
pub fn random_episode(spec: &EnvSpec, seed: u64) -> Result<(f64, bool)> {
    let mut env = Env::reset(spec, seed)?;
    let mut rng = derive_rng(seed, "random-policy", 0);
    let mut reward = 0.0;
    while !env.is_done() {
        reward += env.step(rng.gen_range(0..spec.action_count))?.reward;
    }
    Ok((reward, env.goal_reached()))
}

pub fn compute_baselines(spec: &EnvSpec, n: usize, seed: u64) -> Result<BaselinePair> {
    if n == 0 {
        return Err(Error::Usage("baseline episode count must be at least 1".into()));
    }
    let mut random = Vec::with_capacity(n);
    let mut expert = Vec::with_capacity(n);
    for i in 0..n {
        let s = eval_episode_seed(seed, i);
        random.push(random_episode(spec, s)?.0);
        expert.push(expert_episode(spec, s)?.1);
    }
    BaselinePair::new(spec.kind, aer(&random)?, aer(&expert)?, n, seed)
}

#[derive(Serialize, Deserialize)]
struct BaselineFile {
    version: u32,
    #[serde(flatten)]
    pair: BaselinePair,
}

/// File name of the cached baselines for `(kind, n, seed)`.
pub fn baseline_cache_name(kind: EnvKind, n: usize, seed: u64) -> String {
    format!("baselines-{kind}-{n}-{seed}.json")
}

/// Reads cached baselines from `dir`, computing and storing them on a miss.
pub fn cached_baselines(dir: &Path, spec: &EnvSpec, n: usize, seed: u64) -> Result<BaselinePair> {
    let path = dir.join(baseline_cache_name(spec.kind, n, seed));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(file) = serde_json::from_str::<BaselineFile>(&text) {
            let p = file.pair;
            if file.version == BASELINE_VERSION && p.env == spec.kind && p.episodes == n && p.seed == seed {
                p.validate()?;
                return Ok(p);
            }
        }
    }
    let pair = compute_baselines(spec, n, seed)?;
    let file = BaselineFile {
        version: BASELINE_VERSION,
        pair,
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::Input(e.to_string()))?;
    write_atomic(&path, text.as_bytes())?;
    Ok(pair)
}

/// Result of running a policy over the evaluation episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub aer: f64,
    pub success_rate: f64,
}

pub fn evaluate_policy(pm: &ParamSet, spec: &EnvSpec, mode: Mode, n: usize, seed: u64) -> Result<EvalSummary> {
    if n == 0 {
        return Err(Error::Usage("evaluation needs at least one episode".into()));
    }
    let mut rewards = Vec::with_capacity(n);
    let mut wins = 0;
    for i in 0..n {
        let rec = rollout(pm, spec, mode, eval_episode_seed(seed, i), spec.step_cap)?;
        rewards.push(rec.reward);
        wins += usize::from(rec.goal);
    }
    Ok(EvalSummary {
        episodes: n,
        aer: aer(&rewards)?,
        success_rate: wins as f64 / n as f64,
    })
}
