use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tslcheck::{analyze_file, config_for, parse_arg, parse_manifest, run_case, with_big_stack, RunError, EXIT_FAILURE};
use tslcheck_core::config::{Backend, Format};
use tslcheck_core::shapeops::catalog_markdown;
use tslcheck_core::surface::ArgValue;

#[derive(Parser)]
#[command(name = "tslcheck", version, about = "Static tensor shape checker for .tsl kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Internal,
    SmtlibExport,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Human,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one source file.
    Analyze {
        /// Source file; defaults to the configuration's `entry`.
        file: Option<PathBuf>,
        /// Command-line constant visible as `args.NAME` (repeatable).
        #[arg(long = "arg", value_name = "NAME=VALUE", value_parser = parse_arg)]
        args: Vec<(String, ArgValue)>,
        /// JSON configuration file. Without it, `<file stem>.json` next to
        /// the source is used when present.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Per-path solver time budget.
        #[arg(long)]
        timeout_ms: Option<u64>,
        /// Per-path limit on enumerated candidate assignments.
        #[arg(long)]
        max_tuples: Option<u64>,
        /// Maximum number of live paths; the overflow is reported as dontknow
        #[arg(long)]
        path_cap: Option<usize>,
        /// Offline checker; smtlib-export writes the scripts and marks every path dontknow
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        /// Report format [default: human]
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Write one SMT-LIB2 script per path into this directory.
        #[arg(long, value_name = "DIR")]
        emit_smt2: Option<PathBuf>,
        /// Solver threads.
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        /// Keep both arms of every branch instead of merging equal ones.
        #[arg(long)]
        no_merge: bool,
    },
    /// Run every case of a corpus manifest and compare with the expected
    /// verdicts.
    Corpus {
        #[arg(default_value = "corpus/manifest")]
        manifest: PathBuf,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Print the operation catalog as a markdown table.
    Catalog,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn fail(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("tslcheck: {e}");
    ExitCode::from(EXIT_FAILURE as u8)
}

fn corpus(manifest: &Path, jobs: usize) -> ExitCode {
    let text = match std::fs::read_to_string(manifest) {
        Ok(t) => t,
        Err(e) => return fail(format!("{}: {e}", manifest.display())),
    };
    let base = manifest.parent().unwrap_or(Path::new("."));
    let cases = match parse_manifest(&text, base) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let mut failed = 0;
    for case in &cases {
        let o = run_case(case, jobs);
        let tag = if o.passed() { "PASS" } else { "FAIL" };
        failed += usize::from(!o.passed());
        println!(
            "{tag} {} exit={} (expected {}) invalid={} (expected {})",
            case.path.display(),
            o.exit,
            case.expected_exit,
            o.invalid,
            case.expected_invalid
        );
        if let Some(e) = o.error {
            println!("     {e}");
        }
    }
    println!("{} of {} cases passed", cases.len() - failed, cases.len());
    ExitCode::from(u8::from(failed > 0))
}

fn run(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Catalog => {
            print!("{}", catalog_markdown());
            ExitCode::SUCCESS
        }
        Command::Corpus { manifest, jobs } => corpus(&manifest, jobs),
        Command::Analyze {
            file,
            args,
            config,
            timeout_ms,
            max_tuples,
            path_cap,
            backend,
            format,
            emit_smt2,
            jobs,
            no_merge,
        } => {
            let result = (|| -> Result<_, RunError> {
                let mut cfg = match (&file, &config) {
                    (Some(f), c) => config_for(f, c.as_deref())?,
                    (None, Some(c)) => tslcheck_core::config::load_config(c)?,
                    (None, None) => return Err(RunError::Usage("no input file given".into())),
                };
                let source = file.or_else(|| cfg.entry.clone()).ok_or_else(|| RunError::Usage("no input file given".into()))?;
                cfg.cli_args.extend(args);
                if let Some(t) = timeout_ms {
                    cfg.solver_budget.timeout_ms = t;
                }
                if let Some(t) = max_tuples {
                    cfg.solver_budget.max_tuples = t;
                }
                if let Some(c) = path_cap {
                    cfg.path_cap = c;
                }
                if let Some(b) = backend {
                    cfg.backend = match b {
                        BackendArg::Internal => Backend::Internal,
                        BackendArg::SmtlibExport => Backend::SmtlibExport,
                    };
                }
                if let Some(f) = format {
                    cfg.format = match f {
                        FormatArg::Human => Format::Human,
                        FormatArg::Json => Format::Json,
                    };
                }
                if emit_smt2.is_some() {
                    cfg.emit_smt2 = emit_smt2;
                }
                cfg.merge &= !no_merge;
                let report = analyze_file(&source, &cfg, jobs)?;
                Ok((report, cfg.format))
            })();
            match result {
                Ok((report, fmt)) => {
                    match fmt {
                        Format::Json => println!("{}", report.to_json()),
                        Format::Human => print!("{}", report.render_human()),
                    }
                    ExitCode::from(report.exit_code as u8)
                }
                Err(e) => fail(e),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    with_big_stack(move || run(cli))
}
