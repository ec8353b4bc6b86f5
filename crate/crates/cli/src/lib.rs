//! Command-line orchestration: configuration merging, parallel offline
//! checking, SMT-LIB export and corpus runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use tslcheck_core::config::{load_config, AnalysisConfig, Backend, ConfigError};
use tslcheck_core::report::{build_report, explore, solve_path, AnalysisError, Report};
use tslcheck_core::solver::{emit_smtlib, PathVerdict};
use tslcheck_core::surface::ArgValue;

pub use tslcheck_core::report::{EXIT_FAILURE, EXIT_INCONCLUSIVE, EXIT_INVALID, EXIT_NO_ERROR};

/// Stack size for the analysis and solver threads; evaluation recurses over
/// the program structure.
pub const STACK_SIZE: usize = 256 << 20;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

/// Parses `name=value`; integers and `true`/`false` are typed, anything else
/// is a string.
pub fn parse_arg(s: &str) -> Result<(String, ArgValue), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))?;
    if k.is_empty() {
        return Err(format!("empty argument name in '{s}'"));
    }
    let v = match v {
        "true" | "True" => ArgValue::Bool(true),
        "false" | "False" => ArgValue::Bool(false),
        _ => v.parse().map(ArgValue::Int).unwrap_or_else(|_| ArgValue::Str(v.to_owned())),
    };
    Ok((k.to_owned(), v))
}

/// Configuration for a source file: `--config` if given, else a sibling
/// `<stem>.json`, else defaults.
pub fn config_for(source: &Path, explicit: Option<&Path>) -> Result<AnalysisConfig, RunError> {
    if let Some(p) = explicit {
        return Ok(load_config(p)?);
    }
    let sibling = source.with_extension("json");
    if sibling.is_file() {
        return Ok(load_config(&sibling)?);
    }
    Ok(AnalysisConfig::default())
}

fn smt2_name(source: &Path, path_id: usize) -> String {
    let stem = source.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
    format!("{stem}.path{path_id}.smt2")
}

/// Runs the full pipeline on one file with `jobs` solver threads.
pub fn analyze_file(source: &Path, cfg: &AnalysisConfig, jobs: usize) -> Result<Report, RunError> {
    cfg.validate()?;
    let text = fs::read_to_string(source).map_err(|e| RunError::Read {
        path: source.to_owned(),
        source: e,
    })?;
    let display = source.to_string_lossy().replace('\\', "/");
    let explored = explore(&text, &display, cfg)?;
    let paths = &explored.execution.paths;

    let mut exported: Vec<Result<PathBuf, String>> = Vec::new();
    if let Some(dir) = &cfg.emit_smt2 {
        fs::create_dir_all(dir).map_err(|e| RunError::Write {
            path: dir.clone(),
            source: e,
        })?;
        for p in paths {
            match emit_smtlib(&p.state.constraints) {
                Ok(script) => {
                    let out = dir.join(smt2_name(source, p.id));
                    fs::write(&out, script).map_err(|e| RunError::Write {
                        path: out.clone(),
                        source: e,
                    })?;
                    exported.push(Ok(out));
                }
                Err(e) => exported.push(Err(e.to_string())),
            }
        }
    } else if cfg.backend == Backend::SmtlibExport {
        return Err(RunError::Usage("the smtlib-export backend needs an output directory (--emit-smt2)".into()));
    }

    let verdicts: Vec<(PathVerdict, Duration)> = match cfg.backend {
        Backend::SmtlibExport => exported
            .iter()
            .map(|r| {
                let reason = match r {
                    Ok(p) => format!("delegated to external solver: {}", p.display()),
                    Err(e) => format!("not exported: {e}"),
                };
                (PathVerdict::DontKnow { reason }, Duration::ZERO)
            })
            .collect(),
        Backend::Internal => {
            let budget = cfg.solver_budget.budget();
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .stack_size(STACK_SIZE)
                .build()
                .map_err(|e| RunError::Usage(e.to_string()))?;
            pool.install(|| paths.par_iter().map(|p| solve_path(p, &budget)).collect())
        }
    };
    Ok(build_report(&explored, &verdicts))
}

/// Runs `f` on a thread with a large stack.
pub fn with_big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .stack_size(STACK_SIZE)
        .spawn(f)
        .expect("spawn analysis thread")
        .join()
        .unwrap_or_else(|e| std::panic::resume_unwind(e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusCase {
    pub path: PathBuf,
    pub expected_exit: i32,
    pub expected_invalid: usize,
}

/// Reads a manifest: one `path expected-exit expected-invalid-count` line
/// per case, paths relative to the manifest; `#` starts a comment.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<CorpusCase>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let [path, exit, invalid] = f[..] else {
            return Err(format!("manifest line {}: expected 3 fields, found {}", i + 1, f.len()));
        };
        let num = |s: &str| s.parse::<usize>().map_err(|_| format!("manifest line {}: '{s}' is not a count", i + 1));
        out.push(CorpusCase {
            path: base.join(path),
            expected_exit: num(exit)? as i32,
            expected_invalid: num(invalid)?,
        });
    }
    Ok(out)
}

#[derive(Debug)]
pub struct CaseOutcome {
    pub case: CorpusCase,
    pub exit: i32,
    pub invalid: usize,
    pub report: Option<Report>,
    pub error: Option<String>,
}

impl CaseOutcome {
    pub fn passed(&self) -> bool {
        self.exit == self.case.expected_exit && self.invalid == self.case.expected_invalid
    }
}

pub fn run_case(case: &CorpusCase, jobs: usize) -> CaseOutcome {
    let result = config_for(&case.path, None).and_then(|cfg| analyze_file(&case.path, &cfg, jobs));
    match result {
        Ok(r) => CaseOutcome {
            exit: r.exit_code,
            invalid: r.summary.invalid,
            report: Some(r),
            error: None,
            case: case.clone(),
        },
        Err(e) => CaseOutcome {
            exit: EXIT_FAILURE,
            invalid: 0,
            report: None,
            error: Some(e.to_string()),
            case: case.clone(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn args_are_typed() {
        assert_eq!(parse_arg("epochs=1").unwrap(), ("epochs".into(), ArgValue::Int(1)));
        assert_eq!(parse_arg("x=-3").unwrap().1, ArgValue::Int(-3));
        assert_eq!(parse_arg("flag=true").unwrap().1, ArgValue::Bool(true));
        assert_eq!(parse_arg("name=a=b").unwrap().1, ArgValue::Str("a=b".into()));
        assert!(parse_arg("novalue").is_err());
        assert!(parse_arg("=1").is_err());
    }

    #[test]
    fn manifest_lines() {
        let m = parse_manifest("# header\na.tsl 0 0\n\nsub/b.tsl 1 2  # note\n", Path::new("/c")).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[1].path, Path::new("/c/sub/b.tsl"));
        assert_eq!((m[1].expected_exit, m[1].expected_invalid), (1, 2));
        assert!(parse_manifest("a.tsl 0\n", Path::new(".")).is_err());
        assert!(parse_manifest("a.tsl x 0\n", Path::new(".")).is_err());
    }
}
