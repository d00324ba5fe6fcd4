//! Goal-aware assembly of the inverse dynamics training set.
//!
//! The success action distribution averages the per-episode action
//! frequencies `P(A|e)` over goal-reaching episodes only and renormalizes.
//! With win rate `w = Σv_e / |E|` and budget `B`, `⌊w·B⌋` transitions are
//! drawn from successful episodes with per-action weight `P(a)`, and the
//! remaining `B - ⌊w·B⌋` are drawn from the pre-demonstrations with weight
//! `1 - P(a)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{EpisodeRecord, Transition};
use crate::nn::{sample_weighted, ActionDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PostSelection {
    /// Draw `⌊w·B⌋` successful transitions with per-action weights `P(a)`.
    #[default]
    Proportional,
    /// Keep every transition of every successful episode.
    TakeAll,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub success_count: usize,
    pub episode_count: usize,
    pub win_rate: f64,
    /// Renormalized success action distribution (absent on fallback).
    pub distribution: Option<Vec<f64>>,
    /// `Σ v_e P(A|e) / |E|` without renormalization.
    pub unnormalized_distribution: Vec<f64>,
    pub post_counts: Vec<usize>,
    pub pre_counts: Vec<usize>,
    pub total: usize,
    /// No successful episode: the training set is the pre-demonstrations.
    pub fallback: bool,
    /// Actions whose weight had no transitions to draw from and was spread
    /// over the remaining actions.
    pub redistributed: Vec<usize>,
}

impl SamplingReport {
    pub fn post_total(&self) -> usize {
        self.post_counts.iter().sum()
    }

    pub fn pre_total(&self) -> usize {
        self.pre_counts.iter().sum()
    }
}

fn successful(records: &[EpisodeRecord]) -> impl Iterator<Item = &EpisodeRecord> {
    records.iter().filter(|r| r.goal && !r.transitions.is_empty())
}

/// `Σ_e v_e P(A|e) / |E|`, with mass equal to the win rate.
pub fn unnormalized_success_distribution(records: &[EpisodeRecord], actions: usize) -> Vec<f64> {
    let mut acc = vec![0.0; actions];
    for r in successful(records) {
        acc.iter_mut()
            .zip(r.action_frequencies(actions))
            .for_each(|(a, f)| *a += f);
    }
    let n = records.len().max(1) as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Action distribution of successful episodes: the mean of their `P(A|e)`.
pub fn success_action_distribution(records: &[EpisodeRecord], actions: usize) -> Result<ActionDistribution> {
    let wins = successful(records).count();
    if wins == 0 {
        return Err(Error::NoSuccess {
            episodes: records.len(),
        });
    }
    let mut acc = vec![0.0; actions];
    for r in successful(records) {
        acc.iter_mut()
            .zip(r.action_frequencies(actions))
            .for_each(|(a, f)| *a += f);
    }
    let total: f64 = acc.iter().sum();
    acc.iter_mut().for_each(|a| *a /= total);
    ActionDistribution::new(acc)
}

fn group_by_action(pool: &[&Transition], actions: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); actions];
    for (i, t) in pool.iter().enumerate() {
        groups[t.action].push(i);
    }
    groups
}

/// Draws `count` transitions with replacement from `pool`: first an action
/// with probability ∝ `weights` (restricted to actions present in the pool),
/// then a transition of that action uniformly.
fn draw_by_action(
    pool: &[&Transition],
    weights: &[f64],
    count: usize,
    rng: &mut impl Rng,
    redistributed: &mut Vec<usize>,
    out: &mut Vec<Transition>,
) -> Result<Vec<usize>> {
    let actions = weights.len();
    let mut counts = vec![0; actions];
    if count == 0 {
        return Ok(counts);
    }
    if pool.is_empty() {
        return Err(Error::Input("cannot sample from an empty transition pool".into()));
    }
    let groups = group_by_action(pool, actions);
    let mut w: Vec<f64> = weights.to_vec();
    for (a, g) in groups.iter().enumerate() {
        if g.is_empty() && w[a] > 0.0 {
            w[a] = 0.0;
            if !redistributed.contains(&a) {
                redistributed.push(a);
            }
        }
    }
    if w.iter().sum::<f64>() <= 0.0 {
        // every weighted action is missing: fall back to the pool's own mix
        for (a, g) in groups.iter().enumerate() {
            w[a] = g.len() as f64;
        }
    }
    for _ in 0..count {
        let a = sample_weighted(&w, rng)?;
        let g = &groups[a];
        let pick = g[rng.gen_range(0..g.len())];
        out.push(pool[pick].clone());
        counts[a] += 1;
    }
    Ok(counts)
}

/// Builds the next inverse dynamics training set from the pre-demonstrations
/// and the current cycle's rollouts.
pub fn build_training_set(
    pre: &[Transition],
    records: &[EpisodeRecord],
    budget: usize,
    actions: usize,
    selection: PostSelection,
    rng: &mut impl Rng,
) -> Result<(Vec<Transition>, SamplingReport)> {
    if pre.is_empty() {
        return Err(Error::Input("pre-demonstration set is empty".into()));
    }
    if budget == 0 {
        return Err(Error::Input("sampling budget must be at least 1".into()));
    }
    let success_count = successful(records).count();
    let episode_count = records.len();
    let unnormalized = unnormalized_success_distribution(records, actions);

    if success_count == 0 {
        let mut pre_counts = vec![0; actions];
        pre.iter().for_each(|t| pre_counts[t.action] += 1);
        let report = SamplingReport {
            success_count,
            episode_count,
            win_rate: 0.0,
            distribution: None,
            unnormalized_distribution: unnormalized,
            post_counts: vec![0; actions],
            pre_counts,
            total: pre.len(),
            fallback: true,
            redistributed: Vec::new(),
        };
        return Ok((pre.to_vec(), report));
    }

    let dist = success_action_distribution(records, actions)?;
    let win_rate = success_count as f64 / episode_count as f64;
    let post_target = (win_rate * budget as f64).floor() as usize;
    let pre_target = budget - post_target;

    let post_pool: Vec<&Transition> = successful(records).flat_map(|r| r.transitions.iter()).collect();
    let pre_pool: Vec<&Transition> = pre.iter().collect();
    let mut out = Vec::with_capacity(budget);
    let mut redistributed = Vec::new();

    let post_counts = match selection {
        PostSelection::Proportional => {
            draw_by_action(&post_pool, dist.probs(), post_target, rng, &mut redistributed, &mut out)?
        }
        PostSelection::TakeAll => {
            let mut counts = vec![0; actions];
            for t in &post_pool {
                counts[t.action] += 1;
                out.push((*t).clone());
            }
            counts
        }
    };
    let complement: Vec<f64> = dist.probs().iter().map(|p| 1.0 - p).collect();
    let pre_counts = draw_by_action(&pre_pool, &complement, pre_target, rng, &mut redistributed, &mut out)?;

    let report = SamplingReport {
        success_count,
        episode_count,
        win_rate,
        distribution: Some(dist.probs().to_vec()),
        unnormalized_distribution: unnormalized,
        post_counts,
        pre_counts,
        total: out.len(),
        fallback: false,
        redistributed,
    };
    Ok((out, report))
}
