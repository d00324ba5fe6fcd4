//! Demonstration files.
//!
//! ```text
//! ifolab-demos 1
//! <kind>\t<shape>\t<steps>\t<reward or ->\t<s_0>\t<s_1>...
//! ```
//!
//! One trajectory per line. Each `<s_t>` field holds the flattened state as
//! space-separated decimals written in shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;

use super::Trajectory;
use crate::envs::{EnvKind, State, StateShape};
use crate::error::{Error, Result};
use crate::nn::checkpoint::parse_values;

pub const DEMO_MAGIC: &str = "ifolab-demos";
pub const DEMO_VERSION: u32 = 1;

pub fn demos_to_string(demos: &[Trajectory], shape: StateShape) -> String {
    let mut out = format!("{DEMO_MAGIC} {DEMO_VERSION}\n");
    for t in demos {
        write!(out, "{}\t{}\t{}\t", t.kind, shape, t.states.len()).unwrap();
        match t.reward {
            Some(r) => write!(out, "{r:?}").unwrap(),
            None => out.push('-'),
        }
        for s in &t.states {
            out.push('\t');
            for (i, v) in s.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{v:?}").unwrap();
            }
        }
        out.push('\n');
    }
    out
}

/// Parses a demonstration file; returns the trajectories and their common shape.
pub fn demos_from_str(text: &str) -> Result<(Vec<Trajectory>, Option<StateShape>)> {
    let mut lines = text.lines().enumerate();
    let err = |line: usize, detail: String| Error::Parse { line, detail };
    let header = lines.next().map(|(_, l)| l).unwrap_or("");
    let mut head = header.split_whitespace();
    if head.next() != Some(DEMO_MAGIC) {
        return Err(err(1, format!("expected `{DEMO_MAGIC}` header")));
    }
    match head.next().and_then(|v| v.parse::<u32>().ok()) {
        Some(DEMO_VERSION) => {}
        other => return Err(err(1, format!("unsupported demo file version {other:?}"))),
    }

    let mut demos = Vec::new();
    let mut common: Option<StateShape> = None;
    for (record, (idx, line)) in lines.enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec = |detail: String| err(line_no, format!("record {record}: {detail}"));
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 4 {
            return Err(rec("expected kind, shape, steps and reward fields".into()));
        }
        let kind: EnvKind = fields[0].parse().map_err(|e: Error| rec(e.to_string()))?;
        let shape: StateShape = fields[1].parse().map_err(rec)?;
        let steps: usize = fields[2]
            .parse()
            .map_err(|_| rec(format!("invalid step count `{}`", fields[2])))?;
        let reward = match fields[3] {
            "-" => None,
            r => Some(r.parse::<f64>().map_err(|_| rec(format!("invalid reward `{r}`")))?),
        };
        let values = &fields[4..];
        if values.len() != steps {
            return Err(rec(format!("expected {steps} states, found {}", values.len())));
        }
        let mut states = Vec::with_capacity(steps);
        for (t, field) in values.iter().enumerate() {
            let v = parse_values(field).map_err(|d| rec(format!("state {t}: {d}")))?;
            if v.len() != shape.len() {
                return Err(rec(format!(
                    "state {t} has {} values, expected {} for shape {shape}",
                    v.len(),
                    shape.len()
                )));
            }
            states.push(State(v));
        }
        match common {
            Some(s) if s != shape => return Err(rec(format!("shape {shape} differs from earlier {s}"))),
            _ => common = Some(shape),
        }
        demos.push(Trajectory::new(kind, states, reward).map_err(|e| rec(e.to_string()))?);
    }
    Ok((demos, common))
}

pub fn write_demos(path: &Path, demos: &[Trajectory], shape: StateShape) -> Result<()> {
    crate::io::write_atomic(path, demos_to_string(demos, shape).as_bytes())
}

pub fn read_demos(path: &Path) -> Result<(Vec<Trajectory>, Option<StateShape>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    demos_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{EnvKind, EnvSpec};
    use crate::experts::record_demonstrations;

    #[test]
    fn write_then_read_is_identical() {
        let spec = EnvSpec::new(EnvKind::Maze(3));
        let demos = record_demonstrations(&spec, 5, 2).unwrap();
        let text = demos_to_string(&demos, spec.shape);
        let (back, shape) = demos_from_str(&text).unwrap();
        assert_eq!(back, demos);
        assert_eq!(shape, Some(spec.shape));
    }

    #[test]
    fn empty_list_is_valid() {
        let text = demos_to_string(&[], StateShape::Vector(4));
        assert_eq!(text.lines().count(), 1);
        let (back, shape) = demos_from_str(&text).unwrap();
        assert!(back.is_empty());
        assert!(shape.is_none());
    }

    #[test]
    fn truncated_state_names_record() {
        let spec = EnvSpec::new(EnvKind::CartPole);
        let demos = record_demonstrations(&spec, 2, 0).unwrap();
        let text = demos_to_string(&demos, spec.shape);
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let last = lines[2].rfind(' ').unwrap();
        lines[2].truncate(last);
        let err = demos_from_str(&lines.join("\n")).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{msg}");
        assert!(msg.contains("record 1"), "{msg}");
    }

    #[test]
    fn records_carry_no_action_field() {
        let spec = EnvSpec::new(EnvKind::Maze(3));
        let demos = record_demonstrations(&spec, 1, 0).unwrap();
        let text = demos_to_string(&demos, spec.shape);
        let fields: Vec<&str> = text.lines().nth(1).unwrap().split('\t').collect();
        // kind, shape, steps, reward, then exactly one field per state
        assert_eq!(fields.len(), 4 + demos[0].len());
        assert!(fields[4..].iter().all(|f| f.split(' ').count() == spec.shape.len()));
    }
}
