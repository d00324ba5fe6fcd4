//! Policy checkpoints: the environment, the execution mode and the network.
//!
//! ```text
//! ifolab-policy 1
//! env cartpole
//! mode explore
//! ifolab-params 1
//! ...
//! ```

use std::path::Path;

use super::Mode;
use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::nn::checkpoint::{params_to_string, read_params, Lines};
use crate::nn::ParamSet;

pub const POLICY_MAGIC: &str = "ifolab-policy";

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCheckpoint {
    pub env: EnvKind,
    pub mode: Mode,
    pub params: ParamSet,
}

pub fn policy_to_string(policy: &PolicyCheckpoint) -> String {
    format!(
        "{POLICY_MAGIC} 1\nenv {}\nmode {}\n{}",
        policy.env,
        policy.mode.name(),
        params_to_string(&policy.params)
    )
}

pub fn policy_from_str(text: &str) -> Result<PolicyCheckpoint> {
    let mut lines = Lines::new(text);
    if lines.next_line()?.trim() != format!("{POLICY_MAGIC} 1") {
        return Err(lines.error(format!("expected `{POLICY_MAGIC} 1` header")));
    }
    let mut field = |key: &str| -> Result<String> {
        let line = lines.next_line()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(|v| v.trim().to_string())
            .ok_or_else(|| lines.error(format!("expected `{key} <value>`")))
    };
    let env_name = field("env")?;
    let mode_name = field("mode")?;
    let line = lines.line();
    let env = env_name.parse().map_err(|e: Error| Error::Parse {
        line: line - 1,
        detail: e.to_string(),
    })?;
    let mode = mode_name.parse().map_err(|e: Error| Error::Parse {
        line,
        detail: e.to_string(),
    })?;
    let params = read_params(&mut lines)?;
    Ok(PolicyCheckpoint { env, mode, params })
}

/// Zero network sampled in explore mode: every action equally likely.
pub fn uniform_policy(env: EnvKind) -> PolicyCheckpoint {
    let spec = crate::envs::EnvSpec::new(env);
    let (inputs, actions) = (spec.shape.len(), spec.action_count);
    PolicyCheckpoint {
        env,
        mode: Mode::Explore,
        params: ParamSet {
            layers: vec![crate::nn::Layer::Dense {
                weight: crate::nn::Matrix::zeros(actions, inputs),
                bias: vec![0.0; actions],
                activation: crate::nn::Activation::Identity,
                tokens: 1,
            }],
        },
    }
}

pub fn save_policy(path: &Path, policy: &PolicyCheckpoint) -> Result<()> {
    crate::io::write_atomic(path, policy_to_string(policy).as_bytes())
}

pub fn load_policy(path: &Path) -> Result<PolicyCheckpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    policy_from_str(&text)
}
