//! Inverse dynamics model (IDM) and policy model (PM): supervised training,
//! labeling of expert state pairs, and policy rollouts.

mod arch;
mod policy_file;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{goal_reached, Env, EnvSpec, State, StateShape};
use crate::error::{Error, Result};
use crate::experts::StatePairSet;
use crate::nn::{
    adam_step, cross_entropy_with_accuracy, sample_categorical, softmax, AdamConfig, AdamState, Matrix, ParamSet,
};
use crate::rng::derive_rng;
pub use arch::{build_network, fit_normalizer, NetConfig};
pub use policy_file::{load_policy, policy_from_str, policy_to_string, save_policy, uniform_policy, PolicyCheckpoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Pre,
    Post,
}

/// `(s_t, a_t, s_{t+1})` with provenance. Carries no reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: State,
    pub action: usize,
    pub next: State,
    pub source: Source,
}

/// How an action is picked from a model's softmax output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Sample from the softmax distribution.
    Explore,
    /// Highest-probability action, lowest index on ties.
    Map,
}

impl Mode {
    pub fn from_flag(explore: bool) -> Self {
        if explore {
            Mode::Explore
        } else {
            Mode::Map
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Explore => "explore",
            Mode::Map => "map",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explore" => Ok(Mode::Explore),
            "map" => Ok(Mode::Map),
            _ => Err(Error::Usage(format!("unknown mode `{s}` (expected explore or map)"))),
        }
    }
}

/// One policy episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub transitions: Vec<Transition>,
    /// Goal flag `v_e`.
    pub goal: bool,
    pub reward: f64,
    /// Per step: whether the executed action differed from the MAP action.
    pub non_map: Vec<bool>,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn non_map_count(&self) -> usize {
        self.non_map.iter().filter(|b| **b).count()
    }

    /// Goal predicate recomputed from the stored transitions.
    pub fn recompute_goal(&self, spec: &EnvSpec) -> bool {
        self.transitions
            .last()
            .is_some_and(|t| goal_reached(spec, self.transitions.len(), &t.next))
    }

    /// Empirical action frequencies `P(A|e)`.
    pub fn action_frequencies(&self, actions: usize) -> Vec<f64> {
        let mut freq = vec![0.0; actions];
        for t in &self.transitions {
            freq[t.action] += 1.0;
        }
        let n = self.transitions.len().max(1) as f64;
        freq.iter_mut().for_each(|f| *f /= n);
        freq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 64,
            lr: 1e-3,
        }
    }
}

/// Parameters plus optimizer state, so warm starts continue the same run.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ParamSet,
    pub adam: AdamState,
}

impl Model {
    pub fn new(params: ParamSet) -> Self {
        let adam = AdamState::new(&params);
        Model { params, adam }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainStats {
    /// Mean minibatch loss over the last epoch.
    pub loss: f64,
    /// Mean minibatch accuracy over the last epoch.
    pub accuracy: f64,
}

/// Minibatch Adam on cross-entropy.
pub fn fit(model: &mut Model, inputs: &Matrix, targets: &[usize], cfg: &TrainConfig, rng: &mut impl Rng) -> Result<TrainStats> {
    if targets.is_empty() {
        return Err(Error::Input("empty training set".into()));
    }
    let adam = AdamConfig::with_lr(cfg.lr);
    let cols = inputs.cols();
    let mut order: Vec<usize> = (0..targets.len()).collect();
    let mut stats = TrainStats::default();
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        let (mut loss_sum, mut acc_sum, mut batches) = (0.0, 0.0, 0.0);
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let mut data = Vec::with_capacity(chunk.len() * cols);
            for &i in chunk {
                data.extend_from_slice(inputs.row(i));
            }
            let x = Matrix::from_vec(chunk.len(), cols, data);
            let t: Vec<usize> = chunk.iter().map(|&i| targets[i]).collect();
            let (loss, acc, grads) = cross_entropy_with_accuracy(&model.params, &x, &t)?;
            adam_step(&mut model.params, &grads, &mut model.adam, &adam);
            loss_sum += loss;
            acc_sum += acc;
            batches += 1.0;
        }
        stats = TrainStats {
            loss: loss_sum / batches,
            accuracy: acc_sum / batches,
        };
    }
    Ok(stats)
}

/// Fused `(s_t, s_{t+1})` inputs, one row per pair.
pub fn idm_inputs<'a>(shape: StateShape, pairs: impl ExactSizeIterator<Item = (&'a State, &'a State)>) -> Matrix {
    let rows = pairs.len();
    let mut data = Vec::with_capacity(rows * 2 * shape.len());
    for (a, b) in pairs {
        shape.fuse_into(a, b, &mut data);
    }
    Matrix::from_vec(rows, 2 * shape.len(), data)
}

fn state_inputs<'a>(shape: StateShape, states: impl ExactSizeIterator<Item = &'a State>) -> Matrix {
    let rows = states.len();
    let mut data = Vec::with_capacity(rows * shape.len());
    for s in states {
        data.extend_from_slice(s);
    }
    Matrix::from_vec(rows, shape.len(), data)
}

/// What a model is trained on: input shape, action count, sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub shape: StateShape,
    pub actions: usize,
    pub net: NetConfig,
    pub train: TrainConfig,
}

fn check_shape(shape: StateShape, state: &State) -> Result<()> {
    if state.len() != shape.len() {
        return Err(Error::Config(format!(
            "state has {} values but shape {shape} needs {}",
            state.len(),
            shape.len()
        )));
    }
    Ok(())
}

/// Trains the inverse dynamics model on labeled transitions; `warm` continues
/// an earlier model, otherwise a fresh network is built.
pub fn train_idm(
    dataset: &[Transition],
    spec: &ModelSpec,
    warm: Option<Model>,
    rng: &mut impl Rng,
) -> Result<(Model, TrainStats)> {
    if dataset.is_empty() {
        return Err(Error::Input("inverse dynamics dataset is empty".into()));
    }
    for t in dataset {
        check_shape(spec.shape, &t.state)?;
        check_shape(spec.shape, &t.next)?;
        if t.action >= spec.actions {
            return Err(Error::Input(format!("action {} out of range", t.action)));
        }
    }
    let x = idm_inputs(spec.shape, dataset.iter().map(|t| (&t.state, &t.next)));
    let targets: Vec<usize> = dataset.iter().map(|t| t.action).collect();
    let mut model = match warm {
        Some(m) => m,
        None => Model::new(build_network(spec.shape.fused(), spec.actions, &spec.net, &x, rng)?),
    };
    let stats = fit(&mut model, &x, &targets, &spec.train, rng)?;
    Ok((model, stats))
}

/// Picks an action per row of logits; returns actions and non-MAP flags.
pub fn choose_actions(logits: &Matrix, mode: Mode, rng: &mut impl Rng) -> Result<Vec<(usize, bool)>> {
    (0..logits.rows())
        .map(|r| {
            let dist = softmax(logits.row(r));
            let best = dist.argmax();
            let a = match mode {
                Mode::Map => best,
                Mode::Explore => sample_categorical(&dist, rng)?,
            };
            Ok((a, a != best))
        })
        .collect()
}

/// Predicts the action behind each expert pair.
pub fn label_pairs(idm: &ParamSet, shape: StateShape, pairs: &StatePairSet, mode: Mode, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if pairs.is_empty() {
        return Err(Error::Input("no state pairs to label".into()));
    }
    for (a, b) in &pairs.pairs {
        check_shape(shape, a)?;
        check_shape(shape, b)?;
    }
    let x = idm_inputs(shape, pairs.pairs.iter().map(|(a, b)| (a, b)));
    let logits = idm.forward(&x)?;
    Ok(choose_actions(&logits, mode, rng)?.into_iter().map(|(a, _)| a).collect())
}

/// Behavioral cloning of `labels` from the first state of each pair.
pub fn train_policy(
    pairs: &StatePairSet,
    labels: &[usize],
    spec: &ModelSpec,
    warm: Option<Model>,
    rng: &mut impl Rng,
) -> Result<(Model, TrainStats)> {
    if labels.len() != pairs.len() {
        return Err(Error::Input(format!("{} labels for {} pairs", labels.len(), pairs.len())));
    }
    if pairs.is_empty() {
        return Err(Error::Input("no state pairs to clone".into()));
    }
    if let Some(bad) = labels.iter().find(|a| **a >= spec.actions) {
        return Err(Error::Input(format!("label {bad} out of range")));
    }
    for (s, _) in &pairs.pairs {
        check_shape(spec.shape, s)?;
    }
    let x = state_inputs(spec.shape, pairs.pairs.iter().map(|(s, _)| s));
    let mut model = match warm {
        Some(m) => m,
        None => Model::new(build_network(spec.shape, spec.actions, &spec.net, &x, rng)?),
    };
    let stats = fit(&mut model, &x, labels, &spec.train, rng)?;
    Ok((model, stats))
}

/// Runs the policy on a fresh episode of `spec` from `seed`.
pub fn rollout(pm: &ParamSet, spec: &EnvSpec, mode: Mode, seed: u64, max_steps: usize) -> Result<EpisodeRecord> {
    let env = Env::reset(spec, seed)?;
    rollout_env(pm, env, mode, seed, max_steps)
}

/// Runs the policy from an already reset environment.
pub fn rollout_env(pm: &ParamSet, mut env: Env, mode: Mode, seed: u64, max_steps: usize) -> Result<EpisodeRecord> {
    let spec = *env.spec();
    if pm.input_dim() != spec.shape.len() || pm.output_dim() != spec.action_count {
        return Err(Error::Config(format!(
            "policy maps {} inputs to {} actions but {} has {} inputs and {} actions",
            pm.input_dim(),
            pm.output_dim(),
            spec.kind,
            spec.shape.len(),
            spec.action_count
        )));
    }
    let mut rng = derive_rng(seed, "policy", 0);
    let mut state = env.observe();
    let mut transitions = Vec::new();
    let mut non_map = Vec::new();
    let mut reward = 0.0;
    while !env.is_done() && transitions.len() < max_steps {
        let logits = pm.forward(&Matrix::from_vec(1, state.len(), state.0.clone()))?;
        let (action, off_map) = choose_actions(&logits, mode, &mut rng)?[0];
        let out = env.step(action)?;
        reward += out.reward;
        non_map.push(off_map);
        transitions.push(Transition {
            state: std::mem::replace(&mut state, out.state.clone()),
            action,
            next: out.state,
            source: Source::Post,
        });
    }
    Ok(EpisodeRecord {
        goal: env.goal_reached(),
        transitions,
        reward,
        non_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvKind;
    use crate::nn::{Activation, Layer};
    use crate::rng::rng_from_seed;

    fn constant_policy(inputs: usize, logits: Vec<f64>) -> ParamSet {
        ParamSet::new(vec![Layer::Dense {
            weight: Matrix::zeros(logits.len(), inputs),
            bias: logits,
            activation: Activation::Identity,
            tokens: 1,
        }])
        .unwrap()
    }

    fn pair_set(n: usize) -> StatePairSet {
        StatePairSet {
            pairs: (0..n)
                .map(|i| (State(vec![i as f64, 0.0]), State(vec![i as f64, 1.0])))
                .collect(),
        }
    }

    #[test]
    fn confident_logits_label_action_zero() {
        let idm = constant_policy(4, vec![10.0, -10.0]);
        let pairs = pair_set(500);
        let shape = StateShape::Vector(2);
        let mut rng = rng_from_seed(1);
        let map = label_pairs(&idm, shape, &pairs, Mode::Map, &mut rng).unwrap();
        assert!(map.iter().all(|a| *a == 0));
        let explore = label_pairs(&idm, shape, &pairs, Mode::Explore, &mut rng).unwrap();
        assert!(explore.iter().all(|a| *a == 0));
    }

    #[test]
    fn uniform_logits_explore_evenly() {
        let idm = constant_policy(4, vec![0.0, 0.0]);
        let pairs = pair_set(100_000);
        let labels = label_pairs(&idm, StateShape::Vector(2), &pairs, Mode::Explore, &mut rng_from_seed(3)).unwrap();
        let ones = labels.iter().filter(|a| **a == 1).count() as f64 / 1e5;
        assert!((ones - 0.5).abs() < 0.01, "{ones}");
    }

    #[test]
    fn map_labels_ignore_rng() {
        let mut rng = rng_from_seed(0);
        let spec = ModelSpec {
            shape: StateShape::Vector(2),
            actions: 3,
            net: NetConfig::default(),
            train: TrainConfig::default(),
        };
        let idm = build_network(spec.shape.fused(), 3, &spec.net, &Matrix::from_rows(&[vec![0.0, 1.0, 2.0, 3.0]]), &mut rng).unwrap();
        let pairs = pair_set(50);
        let a = label_pairs(&idm, spec.shape, &pairs, Mode::Map, &mut rng_from_seed(1)).unwrap();
        let b = label_pairs(&idm, spec.shape, &pairs, Mode::Map, &mut rng_from_seed(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn label_shape_mismatch_is_config_error() {
        let idm = constant_policy(4, vec![0.0, 0.0]);
        let err = label_pairs(&idm, StateShape::Vector(3), &pair_set(2), Mode::Map, &mut rng_from_seed(0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn empty_idm_dataset_rejected() {
        let spec = ModelSpec {
            shape: StateShape::Vector(2),
            actions: 2,
            net: NetConfig::default(),
            train: TrainConfig::default(),
        };
        assert!(matches!(train_idm(&[], &spec, None, &mut rng_from_seed(0)), Err(Error::Input(_))));
    }

    #[test]
    fn single_sample_is_memorized() {
        let spec = ModelSpec {
            shape: StateShape::Vector(2),
            actions: 3,
            net: NetConfig::default(),
            train: TrainConfig {
                epochs: 1500,
                lr: 1e-2,
                ..TrainConfig::default()
            },
        };
        let data = vec![Transition {
            state: State(vec![0.3, -0.2]),
            action: 2,
            next: State(vec![0.5, 0.1]),
            source: Source::Pre,
        }];
        let (model, stats) = train_idm(&data, &spec, None, &mut rng_from_seed(4)).unwrap();
        assert!(stats.loss < 0.01, "{stats:?}");
        let x = idm_inputs(spec.shape, data.iter().map(|t| (&t.state, &t.next)));
        let p = softmax(model.params.forward(&x).unwrap().row(0));
        assert!(-p.probs()[2].ln() < 0.01);
    }

    #[test]
    fn label_count_mismatch_rejected() {
        let spec = ModelSpec {
            shape: StateShape::Vector(2),
            actions: 2,
            net: NetConfig::default(),
            train: TrainConfig::default(),
        };
        let err = train_policy(&pair_set(3), &[0, 1], &spec, None, &mut rng_from_seed(0)).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn always_right_cannot_climb_the_hill() {
        let spec = EnvSpec::new(EnvKind::MountainCar);
        let pm = constant_policy(2, vec![-5.0, -5.0, 5.0]);
        for seed in 0..10 {
            let rec = rollout(&pm, &spec, Mode::Map, seed, spec.step_cap).unwrap();
            assert!(!rec.goal);
            assert_eq!(rec.reward, -200.0);
        }
    }

    #[test]
    fn map_rollouts_are_reproducible_and_on_map() {
        let spec = EnvSpec::new(EnvKind::Maze(4));
        let pm = constant_policy(48, vec![0.1, 0.4, 0.3, 0.2]);
        let a = rollout(&pm, &spec, Mode::Map, 5, spec.step_cap).unwrap();
        let b = rollout(&pm, &spec, Mode::Map, 5, spec.step_cap).unwrap();
        assert_eq!(a, b);
        assert!(a.non_map.iter().all(|f| !f));
        assert_eq!(a.goal, a.recompute_goal(&spec));
    }

    #[test]
    fn explore_rollout_goal_flag_matches_transitions() {
        let spec = EnvSpec::new(EnvKind::Maze(3));
        let pm = constant_policy(27, vec![0.0; 4]);
        for seed in 0..30 {
            let rec = rollout(&pm, &spec, Mode::Explore, seed, spec.step_cap).unwrap();
            assert_eq!(rec.goal, rec.recompute_goal(&spec));
            assert_eq!(rec.non_map.len(), rec.len());
        }
    }
}
