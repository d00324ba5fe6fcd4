//! Run report files (JSON lines) and their aggregation into comparison
//! tables and per-cycle series.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::BaselinePair;
use crate::trainer::{IterationReport, RunConfig};

pub const RUN_REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Line {
    Header {
        version: u32,
        label: String,
        config: RunConfig,
        demos: Option<String>,
        baselines: BaselinePair,
    },
    Cycle(IterationReport),
    Final {
        aer: f64,
        performance: Option<f64>,
        success_rate: f64,
        wall_clock_seconds: f64,
    },
}

/// Everything needed to reproduce and summarize one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReportFile {
    pub version: u32,
    /// Feature combination, `BCO` for the baseline.
    pub label: String,
    pub config: RunConfig,
    pub demos: Option<String>,
    pub baselines: BaselinePair,
    pub cycles: Vec<IterationReport>,
    pub wall_clock_seconds: f64,
}

impl RunReportFile {
    pub fn new(
        config: &RunConfig,
        demos: Option<&Path>,
        baselines: &BaselinePair,
        cycles: Vec<IterationReport>,
        wall_clock_seconds: f64,
    ) -> Self {
        RunReportFile {
            version: RUN_REPORT_VERSION,
            label: config.features.label().to_string(),
            config: config.clone(),
            demos: demos.map(|p| p.display().to_string()),
            baselines: *baselines,
            cycles,
            wall_clock_seconds,
        }
    }

    pub fn final_cycle(&self) -> Result<&IterationReport> {
        self.cycles
            .last()
            .ok_or_else(|| Error::Input("run report has no cycles".into()))
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let last = self.final_cycle()?;
        let mut lines = vec![Line::Header {
            version: self.version,
            label: self.label.clone(),
            config: self.config.clone(),
            demos: self.demos.clone(),
            baselines: self.baselines,
        }];
        lines.extend(self.cycles.iter().cloned().map(Line::Cycle));
        lines.push(Line::Final {
            aer: last.eval_aer,
            performance: last.eval_performance,
            success_rate: last.eval_success_rate,
            wall_clock_seconds: self.wall_clock_seconds,
        });
        let mut out = String::new();
        for line in &lines {
            out.push_str(&serde_json::to_string(line).map_err(|e| Error::Input(e.to_string()))?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut header = None;
        let mut cycles = Vec::new();
        let mut wall = None;
        for (i, raw) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let line: Line = serde_json::from_str(raw).map_err(|e| Error::Parse {
                line: i + 1,
                detail: e.to_string(),
            })?;
            match line {
                Line::Header {
                    version,
                    label,
                    config,
                    demos,
                    baselines,
                } => {
                    if version != RUN_REPORT_VERSION {
                        return Err(Error::Parse {
                            line: i + 1,
                            detail: format!("unsupported report version {version}"),
                        });
                    }
                    header = Some((label, config, demos, baselines));
                }
                Line::Cycle(r) => cycles.push(r),
                Line::Final {
                    wall_clock_seconds, ..
                } => wall = Some(wall_clock_seconds),
            }
        }
        let (label, config, demos, baselines) = header.ok_or_else(|| Error::Parse {
            line: 1,
            detail: "missing header record".into(),
        })?;
        Ok(RunReportFile {
            version: RUN_REPORT_VERSION,
            label,
            config,
            demos,
            baselines,
            cycles,
            wall_clock_seconds: wall.unwrap_or(0.0),
        })
    }
}

pub fn read_run_report(path: &Path) -> Result<RunReportFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunReportFile::from_jsonl(&text).map_err(|e| match e {
        Error::Parse { line, detail } => Error::Parse {
            line,
            detail: format!("{}: {detail}", path.display()),
        },
        other => other,
    })
}

/// Aggregated output of the `report` command.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    /// Human-readable table: one row per (method, environment).
    pub table: String,
    /// `method,env,runs,P,AER`.
    pub table_csv: String,
    /// `method,env,seed,cycle,non_map_fraction,success_rate`.
    pub series_csv: String,
}

fn csv_text(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|e| Error::Input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
}

pub fn summarize_reports(reports: &[RunReportFile]) -> Result<ReportSummary> {
    if reports.is_empty() {
        return Err(Error::Usage("no run reports given".into()));
    }
    // groups keep first-seen order
    let mut groups: Vec<((String, String), Vec<&RunReportFile>)> = Vec::new();
    for r in reports {
        let key = (r.label.clone(), r.config.env.to_string());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut table = format!("{:<24} {:<12} {:>4} {:>8} {:>10}\n", "method", "env", "runs", "P", "AER");
    let mut rows = vec![vec!["method".into(), "env".into(), "runs".into(), "P".into(), "AER".into()]];
    for ((label, env), runs) in &groups {
        let n = runs.len() as f64;
        let mut p_sum = 0.0;
        let mut aer_sum = 0.0;
        for r in runs {
            let last = r.final_cycle()?;
            p_sum += last.eval_performance.unwrap_or(f64::NAN);
            aer_sum += last.eval_aer;
        }
        let (p, aer) = (p_sum / n, aer_sum / n);
        let _ = writeln!(table, "{label:<24} {env:<12} {:>4} {p:>8.3} {aer:>10.3}", runs.len());
        rows.push(vec![label.clone(), env.clone(), runs.len().to_string(), format!("{p:?}"), format!("{aer:?}")]);
    }
    let mut series = vec![vec![
        "method".into(),
        "env".into(),
        "seed".into(),
        "cycle".into(),
        "non_map_fraction".into(),
        "success_rate".into(),
    ]];
    for r in reports {
        for c in &r.cycles {
            series.push(vec![
                r.label.clone(),
                r.config.env.to_string(),
                r.config.seed.to_string(),
                c.cycle.to_string(),
                format!("{:?}", c.non_map_fraction),
                format!("{:?}", c.success_rate),
            ]);
        }
    }
    Ok(ReportSummary {
        table,
        table_csv: csv_text(rows)?,
        series_csv: csv_text(series)?,
    })
}
