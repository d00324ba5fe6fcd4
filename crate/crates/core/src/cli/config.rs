//! Run settings: built-in defaults for the environment, then the TOML file,
//! then command-line flags.

use std::path::Path;

use toml::{Table, Value};

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::trainer::RunConfig;

/// Values given on the command line; `None` leaves the lower layers in place.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub env: Option<EnvKind>,
    pub alpha: Option<usize>,
    pub rollouts: Option<usize>,
    pub pre_size: Option<usize>,
    pub eval_episodes: Option<usize>,
    pub demo_episodes: Option<usize>,
    pub attention: Option<bool>,
    pub sampling: Option<bool>,
    pub exploration: Option<bool>,
    pub seed: Option<u64>,
}

pub fn load_config_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.parse::<Table>()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn merge(base: &mut Table, top: Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn to_table(config: &RunConfig) -> Result<Table> {
    match Value::try_from(config).map_err(|e| Error::Config(e.to_string()))? {
        Value::Table(t) => Ok(t),
        _ => Err(Error::Config("run settings must be a table".into())),
    }
}

/// Layers defaults, `file` and `flags` into one validated configuration.
pub fn resolve_config(file: Option<Table>, flags: &ConfigOverrides) -> Result<RunConfig> {
    let file = file.unwrap_or_default();
    let env = match (flags.env, file.get("env")) {
        (Some(env), _) => env,
        (None, Some(Value::String(name))) => name.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
        (None, Some(other)) => return Err(Error::Config(format!("env must be a string, got {other}"))),
        (None, None) => return Err(Error::Usage("no environment given (use --env or set env in the config file)".into())),
    };
    let mut table = to_table(&RunConfig::for_env(env))?;
    merge(&mut table, file);
    let mut config: RunConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    config.env = env;
    if let Some(v) = flags.alpha {
        config.alpha = v;
    }
    if let Some(v) = flags.rollouts {
        config.rollouts = v;
    }
    if let Some(v) = flags.pre_size {
        config.pre_size = v;
    }
    if let Some(v) = flags.eval_episodes {
        config.eval_episodes = v;
    }
    if let Some(v) = flags.demo_episodes {
        config.demo_episodes = v;
    }
    if let Some(v) = flags.attention {
        config.features.attention = v;
    }
    if let Some(v) = flags.sampling {
        config.features.sampling = v;
    }
    if let Some(v) = flags.exploration {
        config.features.exploration = v;
    }
    if let Some(v) = flags.seed {
        config.seed = v;
    }
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_is_flags_then_file_then_defaults() {
        let file: Table = "env = \"maze5\"\nalpha = 7\nrollouts = 9\n[idm]\nepochs = 3\n".parse().unwrap();
        let flags = ConfigOverrides {
            alpha: Some(4),
            sampling: Some(false),
            ..ConfigOverrides::default()
        };
        let c = resolve_config(Some(file), &flags).unwrap();
        assert_eq!(c.env, EnvKind::Maze(5));
        assert_eq!(c.alpha, 4);
        assert_eq!(c.rollouts, 9);
        assert_eq!(c.idm.epochs, 3);
        assert_eq!(c.idm.batch_size, RunConfig::for_env(EnvKind::Maze(5)).idm.batch_size);
        assert_eq!(c.pre_size, 10_000);
        assert!(!c.features.sampling && c.features.attention);
    }

    #[test]
    fn missing_env_and_bad_values() {
        assert!(matches!(resolve_config(None, &ConfigOverrides::default()), Err(Error::Usage(_))));
        let bad: Table = "env = \"cartpole\"\nalpha = \"many\"\n".parse().unwrap();
        assert!(matches!(resolve_config(Some(bad), &ConfigOverrides::default()), Err(Error::Config(_))));
        let zero: Table = "env = \"cartpole\"\nalpha = 0\n".parse().unwrap();
        assert!(matches!(resolve_config(Some(zero), &ConfigOverrides::default()), Err(Error::Config(_))));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = RunConfig::for_env(EnvKind::Acrobot);
        let text = toml::to_string(&c).unwrap();
        let back = resolve_config(Some(text.parse().unwrap()), &ConfigOverrides::default()).unwrap();
        assert_eq!(back, c);
    }
}
