//! End-to-end analysis of one source file and the resulting report.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::config::AnalysisConfig;
use crate::constraints::Ground;
use crate::pos::SourcePos;
use crate::solver::{analyze_path, summarize, Budget, PathVerdict, ProgramVerdict};
use crate::surface::{lower, parse_source, LowerError, ParseError};
use crate::symexec::{execute, ExecError, ExecOptions, Execution, OnlineClass, PathResult, PathStatus};

pub const EXIT_NO_ERROR: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// Paths produced by symbolic execution, before the offline check.
#[derive(Debug)]
pub struct Explored {
    pub file: String,
    pub execution: Execution,
    pub elapsed: Duration,
}

pub fn explore(text: &str, file: &str, cfg: &AnalysisConfig) -> Result<Explored, AnalysisError> {
    let start = Instant::now();
    let program = parse_source(text, file)?;
    let ir = lower(&program, &cfg.cli_args)?;
    let opts = ExecOptions {
        path_cap: cfg.path_cap,
        merge: cfg.merge,
        datasets: cfg.dataset_overrides.clone(),
    };
    let execution = execute(&ir, &opts)?;
    Ok(Explored {
        file: file.to_owned(),
        execution,
        elapsed: start.elapsed(),
    })
}

/// Offline verdict of one path. Paths on which evaluation stopped are
/// dontknow without consulting the solver.
pub fn solve_path(p: &PathResult, budget: &Budget) -> (PathVerdict, Duration) {
    let start = Instant::now();
    let v = match &p.state.status {
        PathStatus::DontKnow { reason, pos } => PathVerdict::DontKnow {
            reason: format!("{pos}: {reason}"),
        },
        _ => analyze_path(&p.state.constraints, budget),
    };
    (v, start.elapsed())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub paths: usize,
    pub valid: usize,
    pub invalid: usize,
    pub unreachable: usize,
    pub dontknow: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OnlineSummary {
    pub potential_success: usize,
    pub potential_unreachable: usize,
    pub immediate_fail: usize,
    pub dontknow: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub op_name: Option<String>,
    pub source_pos: SourcePos,
    pub constraint_text: String,
    pub gen_index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelValue {
    Bool(bool),
    Int(i64),
    Shape(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PathEntry {
    pub path_id: usize,
    pub online: String,
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<Violation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<BTreeMap<String, ModelValue>>,
    pub hard_constraints: usize,
    pub soft_constraints: usize,
}

/// Wall-clock measurements; the only part of a report that varies between
/// runs on the same input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Timings {
    pub symexec_us: u64,
    pub solve_us: u64,
    pub path_us: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub file: String,
    pub program_verdict: String,
    pub exit_code: i32,
    pub summary: Summary,
    pub online: OnlineSummary,
    pub merges: usize,
    pub dropped_paths: usize,
    /// Invalid path ids ordered by first-violation generation.
    pub invalid_paths: Vec<usize>,
    pub paths: Vec<PathEntry>,
    pub timings: Timings,
}

fn us(d: Duration) -> u64 {
    d.as_micros().try_into().unwrap_or(u64::MAX)
}

fn online_name(c: OnlineClass) -> &'static str {
    match c {
        OnlineClass::PotentialSuccess => "potential-success",
        OnlineClass::PotentialUnreachable => "potential-unreachable",
        OnlineClass::ImmediateFail => "immediate-fail",
        OnlineClass::DontKnow => "dontknow",
    }
}

pub fn exit_code(v: &ProgramVerdict) -> i32 {
    match v {
        ProgramVerdict::NoError => EXIT_NO_ERROR,
        ProgramVerdict::Error { .. } => EXIT_INVALID,
        ProgramVerdict::Inconclusive { .. } => EXIT_INCONCLUSIVE,
    }
}

pub fn build_report(explored: &Explored, verdicts: &[(PathVerdict, Duration)]) -> Report {
    let paths = &explored.execution.paths;
    assert_eq!(paths.len(), verdicts.len());
    let only: Vec<PathVerdict> = verdicts.iter().map(|(v, _)| v.clone()).collect();
    let program = summarize(&only);
    let mut summary = Summary {
        paths: paths.len(),
        valid: 0,
        invalid: 0,
        unreachable: 0,
        dontknow: 0,
    };
    let mut online = OnlineSummary {
        potential_success: 0,
        potential_unreachable: 0,
        immediate_fail: 0,
        dontknow: 0,
    };
    let mut entries = Vec::new();
    for (p, (v, _)) in paths.iter().zip(verdicts) {
        let class = p.online_class();
        match class {
            OnlineClass::PotentialSuccess => online.potential_success += 1,
            OnlineClass::PotentialUnreachable => online.potential_unreachable += 1,
            OnlineClass::ImmediateFail => online.immediate_fail += 1,
            OnlineClass::DontKnow => online.dontknow += 1,
        }
        let mut entry = PathEntry {
            path_id: p.id,
            online: online_name(class).into(),
            verdict: v.name().into(),
            reason: None,
            first_violation: None,
            counterexample: None,
            hard_constraints: p.state.constraints.hard().count(),
            soft_constraints: p.state.constraints.soft().count(),
        };
        match v {
            PathVerdict::Valid => summary.valid += 1,
            PathVerdict::Unreachable => summary.unreachable += 1,
            PathVerdict::DontKnow { reason } => {
                summary.dontknow += 1;
                entry.reason = Some(reason.clone());
            }
            PathVerdict::Invalid { model, first_violation: c } => {
                summary.invalid += 1;
                entry.first_violation = Some(Violation {
                    op_name: c.op.as_deref().map(str::to_owned),
                    source_pos: c.origin.clone(),
                    constraint_text: c.pred.to_string(),
                    gen_index: c.gen,
                });
                entry.counterexample = Some(
                    model
                        .iter()
                        .map(|(s, g)| {
                            let v = match g {
                                Ground::Int(n) => ModelValue::Int(*n),
                                Ground::Bool(b) => ModelValue::Bool(*b),
                                Ground::Tuple(d) => ModelValue::Shape(d.clone()),
                            };
                            (s.name(), v)
                        })
                        .collect(),
                );
            }
        }
        entries.push(entry);
    }
    let invalid_paths = match &program {
        ProgramVerdict::Error { invalid, .. } => invalid.iter().map(|i| paths[*i].id).collect(),
        _ => Vec::new(),
    };
    let path_us: Vec<u64> = verdicts.iter().map(|(_, d)| us(*d)).collect();
    Report {
        file: explored.file.clone(),
        program_verdict: program.name().into(),
        exit_code: exit_code(&program),
        summary,
        online,
        merges: explored.execution.merges,
        dropped_paths: explored.execution.dropped,
        invalid_paths,
        paths: entries,
        timings: Timings {
            symexec_us: us(explored.elapsed),
            solve_us: path_us.iter().sum(),
            path_us,
        },
    }
}

/// Parses, executes and checks every path sequentially.
pub fn analyze_source(text: &str, file: &str, cfg: &AnalysisConfig) -> Result<Report, AnalysisError> {
    let explored = explore(text, file, cfg)?;
    let budget = cfg.solver_budget.budget();
    let verdicts: Vec<_> = explored.execution.paths.iter().map(|p| solve_path(p, &budget)).collect();
    Ok(build_report(&explored, &verdicts))
}

impl Report {
    /// JSON with the timings block removed, for run-to-run comparison.
    pub fn to_json_without_timings(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timings");
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Online classification first, then the offline verdict of each path.
    pub fn render_human(&self) -> String {
        let mut out = String::new();
        let o = &self.online;
        writeln!(out, "{}", self.file).unwrap();
        writeln!(
            out,
            "online check: {} path(s): {} potential success, {} potential unreachable, {} immediate fail, {} dontknow",
            self.summary.paths, o.potential_success, o.potential_unreachable, o.immediate_fail, o.dontknow
        )
        .unwrap();
        if self.merges > 0 {
            writeln!(out, "  {} branch merge(s)", self.merges).unwrap();
        }
        writeln!(out, "offline check:").unwrap();
        let mut order: Vec<&PathEntry> = self
            .invalid_paths
            .iter()
            .filter_map(|id| self.paths.iter().find(|p| p.path_id == *id))
            .collect();
        order.extend(self.paths.iter().filter(|p| p.verdict == "dontknow"));
        if order.is_empty() {
            let s = &self.summary;
            writeln!(out, "  {} valid, {} unreachable", s.valid, s.unreachable).unwrap();
        }
        for p in order {
            writeln!(out, "  path {} ({}): {}", p.path_id, p.online, p.verdict).unwrap();
            if let Some(v) = &p.first_violation {
                let op = v.op_name.as_deref().map(|o| format!(" in {o}")).unwrap_or_default();
                writeln!(out, "    first violation at {}{op}: {}", v.source_pos, v.constraint_text).unwrap();
            }
            if let Some(m) = &p.counterexample {
                if !m.is_empty() {
                    let parts: Vec<String> = m
                        .iter()
                        .map(|(k, v)| match v {
                            ModelValue::Int(n) => format!("{k}={n}"),
                            ModelValue::Bool(b) => format!("{k}={b}"),
                            ModelValue::Shape(d) => format!("{k}={d:?}"),
                        })
                        .collect();
                    writeln!(out, "    counterexample: {}", parts.join(", ")).unwrap();
                }
            }
            if let Some(r) = &p.reason {
                writeln!(out, "    reason: {r}").unwrap();
            }
        }
        let s = &self.summary;
        writeln!(
            out,
            "result: {} ({} invalid, {} dontknow, {} valid, {} unreachable)",
            self.program_verdict, s.invalid, s.dontknow, s.valid, s.unreachable
        )
        .unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(src: &str) -> Report {
        analyze_source(src, "t.tsl", &AnalysisConfig::default()).unwrap()
    }

    #[test]
    fn clean_program_exits_zero() {
        let r = run("a = randn(3, 4)\nb = mm(a, randn(4, 2))\n");
        assert_eq!(r.exit_code, EXIT_NO_ERROR);
        assert_eq!(r.summary.valid, 1);
    }

    #[test]
    fn mismatch_reports_site() {
        let r = run("a = randn(3, 4)\nb = mm(a, randn(5, 2))\n");
        assert_eq!(r.exit_code, EXIT_INVALID);
        let v = r.paths[0].first_violation.as_ref().unwrap();
        assert_eq!(v.op_name.as_deref(), Some("mm"));
        assert_eq!(v.source_pos.line, 2);
        assert!(r.render_human().contains("immediate fail"));
    }

    #[test]
    fn unknown_operation_is_inconclusive() {
        let r = run("a = frob(1)\n");
        assert_eq!(r.exit_code, EXIT_INCONCLUSIVE);
        assert!(r.paths[0].reason.as_deref().unwrap().contains("frob"));
    }

    #[test]
    fn counts_sum_and_json_round_trips() {
        let r = run("for x, y in dataset(\"mnist\", batch_size=64):\n    z = linear(x.view(64, -1), 784, 10)\n");
        let s = &r.summary;
        assert_eq!(s.valid + s.invalid + s.unreachable + s.dontknow, s.paths);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(!r.to_json_without_timings().contains("timings"));
    }

    #[test]
    fn exit_codes_cover_all_mixes() {
        let c = |gen| crate::constraints::Constraint::soft(crate::constraints::BoolExpr::Const(false), gen, SourcePos::synthetic());
        let inv = PathVerdict::Invalid {
            model: Default::default(),
            first_violation: c(0),
        };
        let dk = PathVerdict::DontKnow { reason: String::new() };
        let cases = [
            (vec![PathVerdict::Valid, PathVerdict::Unreachable], 0),
            (vec![PathVerdict::Valid, inv.clone()], 1),
            (vec![inv, dk.clone()], 1),
            (vec![dk, PathVerdict::Valid], 2),
        ];
        for (vs, code) in cases {
            assert_eq!(exit_code(&summarize(&vs)), code);
        }
    }
}
