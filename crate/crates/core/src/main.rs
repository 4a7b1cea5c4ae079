use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use judgeforge::diffeval::{render_report, rows_from_csv, ReportFormat};
use judgeforge::exchange::{export_archive, import_archive, ArchiveFormat, RemoteClient, SubmissionFilter};
use judgeforge::fixtures::{self, FixtureManifest, MANIFEST_FILE};
use judgeforge::forge::write_suite;
use judgeforge::llm::{CostLedger, Mode, PriceTable};
use judgeforge::pipeline::{self, PipelineError, EXIT_CODES};
use judgeforge::workspace::{ConfigError, Workspace, CONFIG_FILE, ORIGINAL_SUITE};

fn exit_code_help() -> String {
    let mut s = String::from("Exit codes:\n");
    for (code, what) in EXIT_CODES {
        s.push_str(&format!("  {code:>2}  {what}\n"));
    }
    s
}

#[derive(Parser)]
#[command(name = "judgeforge", version, about = "Forge contest test suites from LLM-written testlib bundles and measure them by re-judging", after_help = exit_code_help())]
struct Cli {
    /// Workspace config. Defaults to the nearest judgeforge.json above the
    /// current directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Forbid all network access. LLM calls replay from the transcript cache.
    #[arg(long, global = true)]
    replay: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prompt the model for a generator bundle, or build a suite from one.
    #[command(subcommand)]
    Forge(ForgeCmd),
    /// Judge a problem's solutions.
    #[command(subcommand)]
    Judge(JudgeCmd),
    /// Differential reports.
    #[command(subcommand)]
    Diff(DiffCmd),
    /// Export or import test archives.
    #[command(subcommand)]
    Suite(SuiteCmd),
    /// Talk to the remote judge.
    #[command(subcommand)]
    Remote(RemoteCmd),
    /// LLM spending.
    #[command(subcommand)]
    Cost(CostCmd),
    /// The committed fixture corpus.
    #[command(subcommand)]
    Fixtures(FixturesCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Args)]
struct OutputArg {
    #[arg(long, value_enum, default_value = "text")]
    format: Output,
}

#[derive(Subcommand)]
enum ForgeCmd {
    /// Render the prompt, call the model and store the parsed bundle.
    Prompt {
        #[arg(long)]
        problem: String,
        /// live, record or replay. Defaults to replay under --replay,
        /// record otherwise.
        #[arg(long)]
        mode: Option<Mode>,
        /// Print the rendered prompt and stop.
        #[arg(long)]
        show: bool,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Generate, validate and solve the bundle's tests.
    Build {
        #[arg(long)]
        problem: String,
        #[command(flatten)]
        out: OutputArg,
    },
}

#[derive(Subcommand)]
enum JudgeCmd {
    /// Judge every non-reference solution on the named suites.
    Run {
        #[arg(long)]
        problem: String,
        /// Suite labels. Defaults to `original` and `ai`.
        #[arg(long = "suite")]
        suites: Vec<String>,
        #[command(flatten)]
        out: OutputArg,
    },
}

#[derive(Subcommand)]
enum DiffCmd {
    /// Table of before/after counts, bucket distribution and verdict
    /// histogram.
    Report {
        /// Problems to include. Defaults to every problem with results.
        #[arg(long = "problem")]
        problems: Vec<String>,
        /// Read rows from a CSV file instead of judging results.
        #[arg(long)]
        rows: Option<PathBuf>,
        #[arg(long, default_value = "ai")]
        ai_suite: String,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
    },
}

#[derive(Subcommand)]
enum SuiteCmd {
    Export {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value = "ai")]
        suite: String,
        #[arg(long, default_value = "flat_zip")]
        layout: ArchiveFormat,
        #[arg(long)]
        dest: PathBuf,
        #[command(flatten)]
        out: OutputArg,
    },
    Import {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        src: PathBuf,
        /// Auto-detected when omitted.
        #[arg(long)]
        layout: Option<ArchiveFormat>,
        #[arg(long)]
        label: String,
        #[command(flatten)]
        out: OutputArg,
    },
}

#[derive(Subcommand)]
enum RemoteCmd {
    /// Fetch the statement and accepted submissions.
    Pull {
        #[arg(long)]
        problem: String,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Upload a suite as a flat zip and check the remote's manifest.
    Push {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value = "ai")]
        suite: String,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Ask the remote to re-evaluate submissions.
    Rejudge {
        #[arg(long)]
        problem: String,
        #[arg(long = "submission", required = true)]
        submissions: Vec<String>,
        #[command(flatten)]
        out: OutputArg,
    },
}

#[derive(Subcommand)]
enum CostCmd {
    /// Ledger entries and total.
    Show {
        /// Re-price the ledger with another table.
        #[arg(long)]
        prices: Option<PathBuf>,
        /// Ledger file. Defaults to the workspace ledger.
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArg,
    },
}

#[derive(Subcommand)]
enum FixturesCmd {
    /// Re-derive every annotation in the fixture manifest.
    Verify {
        #[arg(long = "problem")]
        problems: Vec<String>,
        #[command(flatten)]
        out: OutputArg,
    },
}

fn emit(format: Output, value: serde_json::Value, text: impl FnOnce() -> String) {
    match format {
        Output::Json => println!("{}", serde_json::to_string_pretty(&value).expect("json")),
        Output::Text => print!("{}", text()),
    }
}

fn load_workspace(cli: &Cli) -> Result<Workspace, PipelineError> {
    let path = match &cli.config {
        Some(p) => p.clone(),
        None => {
            let cwd = std::env::current_dir().map_err(|e| PipelineError::Io(e.to_string()))?;
            Workspace::discover(&cwd).ok_or_else(|| ConfigError::MissingPath(cwd.join(CONFIG_FILE)))?
        }
    };
    Ok(Workspace::load(&path)?)
}

fn remote_client(cli: &Cli, ws: &Workspace) -> Result<RemoteClient, PipelineError> {
    if cli.replay {
        return Err(PipelineError::NetworkForbidden);
    }
    let endpoint = ws.config.remote.clone().ok_or_else(|| ConfigError::Invalid("no `remote` section in the workspace config".into()))?;
    Ok(RemoteClient::from_env(endpoint)?)
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let ws = load_workspace(cli)?;
    match &cli.command {
        Command::Forge(ForgeCmd::Prompt { problem, mode, show, out }) => {
            if *show {
                print!("{}", pipeline::render_for(&ws, problem)?);
                return Ok(());
            }
            let mode = match (mode, cli.replay) {
                (Some(Mode::Replay) | None, true) => Mode::Replay,
                (Some(_), true) => return Err(PipelineError::NetworkForbidden),
                (Some(m), false) => *m,
                (None, false) => Mode::Record,
            };
            let r = pipeline::forge_prompt(&ws, problem, mode)?;
            emit(
                out.format,
                json!({
                    "problem": problem,
                    "exchange": r.exchange.key(),
                    "bundle_dir": r.bundle_dir,
                    "param_rows": r.bundle.param_rows.len(),
                    "findings": r.findings,
                    "cost_usd": r.cost_usd,
                }),
                || {
                    let mut s = format!(
                        "bundle for {problem}: {} param rows -> {}\ncost: ${}\n",
                        r.bundle.param_rows.len(),
                        r.bundle_dir.display(),
                        r.cost_usd
                    );
                    for f in &r.findings {
                        s.push_str(&format!("lint {:?} line {:?}: {}\n", f.category, f.line, f.message));
                    }
                    s
                },
            );
        }
        Command::Forge(ForgeCmd::Build { problem, out }) => {
            let forge = ws.forge(ws.sandbox()?)?;
            let (report, dir) = pipeline::forge_build(&ws, &forge, problem)?;
            emit(out.format, json!({ "suite_dir": dir, "report": report }), || {
                format!(
                    "{} cases written to {} (determinism checked: {})\n",
                    report.per_case.len(),
                    dir.display(),
                    report.determinism_checked
                )
            });
        }
        Command::Judge(JudgeCmd::Run { problem, suites, out }) => {
            let labels = if suites.is_empty() { vec![ORIGINAL_SUITE.to_string(), "ai".to_string()] } else { suites.clone() };
            let judge = ws.judge(ws.sandbox()?)?;
            let mut all = serde_json::Map::new();
            let mut text = String::new();
            for label in &labels {
                let results = pipeline::judge_suite(&ws, &judge, problem, label)?;
                for r in &results {
                    let verdict = if r.compile_failed {
                        "CE".to_string()
                    } else {
                        r.first_failure().map_or("AC".to_string(), |t| format!("{} on test {}", t.verdict, t.index))
                    };
                    text.push_str(&format!("{problem} {label} {}: {verdict}\n", r.submission_id));
                }
                all.insert(label.clone(), serde_json::to_value(&results).expect("json"));
            }
            emit(out.format, serde_json::Value::Object(all), || text);
        }
        Command::Diff(DiffCmd::Report { problems, rows, ai_suite, format }) => {
            let report = match rows {
                Some(csv) => {
                    let text = std::fs::read_to_string(csv).map_err(|e| pipeline::io_error(csv, e))?;
                    pipeline::report_of(rows_from_csv(&text)?, None)
                }
                None => {
                    let ids = if problems.is_empty() {
                        ws.problem_ids()?.into_iter().filter(|id| pipeline::results_path(&ws, id, ai_suite).is_file()).collect()
                    } else {
                        problems.clone()
                    };
                    pipeline::differential_report(&ws, &ids, ai_suite)?
                }
            };
            print!("{}", render_report(&report, *format));
        }
        Command::Suite(SuiteCmd::Export { problem, suite, layout, dest, out }) => {
            let s = ws.load_suite(problem, suite)?;
            let manifest = export_archive(&s, *layout, dest)?;
            emit(out.format, serde_json::to_value(&manifest).expect("json"), || {
                format!("{} files written to {}\n", manifest.entries.len(), dest.display())
            });
        }
        Command::Suite(SuiteCmd::Import { problem, src, layout, label, out }) => {
            let suite = import_archive(src, *layout, label)?;
            let dir = write_suite(&ws.work_dir(problem), &suite, None).map_err(|e| PipelineError::Io(e.to_string()))?;
            emit(out.format, json!({ "suite_dir": dir, "cases": suite.len() }), || {
                format!("{} cases imported into {}\n", suite.len(), dir.display())
            });
        }
        Command::Remote(cmd) => run_remote(cli, &ws, cmd)?,
        Command::Cost(CostCmd::Show { prices, ledger, out }) => {
            let path = ledger.clone().unwrap_or_else(|| ws.ledger_path());
            let mut book = CostLedger::load(&path).map_err(|e| pipeline::io_error(&path, e))?;
            if let Some(p) = prices {
                book = book.repriced(&PriceTable::from_file(p)?)?;
            }
            let total = book.total();
            emit(out.format, json!({ "entries": book.entries, "total_usd": total }), || {
                let mut s = String::new();
                for e in &book.entries {
                    let est = if e.estimated { " (estimated)" } else { "" };
                    s.push_str(&format!(
                        "{} {} in={} out={}{est} ${}\n",
                        &e.exchange[..e.exchange.len().min(12)],
                        e.model_id,
                        e.input_tokens,
                        e.output_tokens,
                        e.cost_usd
                    ));
                }
                s.push_str(&format!("total ${total}\n"));
                s
            });
        }
        Command::Fixtures(FixturesCmd::Verify { problems, out }) => {
            let manifest = FixtureManifest::load(&ws.config.problems_root.join(MANIFEST_FILE))?;
            let only = (!problems.is_empty()).then_some(problems.as_slice());
            let report = fixtures::verify(&ws, &manifest, only)?;
            emit(
                out.format,
                json!({
                    "rows": report.problems.iter().map(|p| &p.row).collect::<Vec<_>>(),
                    "histogram": report.histogram,
                    "violations": report.violations,
                }),
                || {
                    let mut s = String::new();
                    for p in &report.problems {
                        let r = &p.row;
                        s.push_str(&format!("{}: {}/{}/{}/{}/{}\n", p.id, r.before, r.after, r.both, r.only_original, r.only_ai));
                    }
                    s.push_str(&format!("histogram: {:?}\n", report.histogram));
                    for v in &report.violations {
                        s.push_str(&format!("VIOLATION {v}\n"));
                    }
                    s
                },
            );
            report.into_result()?;
        }
    }
    Ok(())
}

fn run_remote(cli: &Cli, ws: &Workspace, cmd: &RemoteCmd) -> Result<(), PipelineError> {
    let client = remote_client(cli, ws)?;
    let endpoint = client.endpoint().clone();
    match cmd {
        RemoteCmd::Pull { problem, out } => {
            let id = endpoint.remote_id(problem)?;
            let remote = client.fetch_problem(id)?;
            let subs = client.fetch_submissions(id, SubmissionFilter::Accepted)?;
            let dir = ws.work_dir(problem).join("remote");
            std::fs::create_dir_all(&dir).map_err(|e| pipeline::io_error(&dir, e))?;
            write_json(&dir.join("problem.json"), &remote)?;
            write_json(&dir.join("accepted.json"), &subs)?;
            emit(out.format, json!({ "problem": remote, "accepted": subs.len() }), || {
                format!("{}: {} accepted submissions saved to {}\n", remote.slug, subs.len(), dir.display())
            });
        }
        RemoteCmd::Push { problem, suite, out } => {
            let id = endpoint.remote_id(problem)?;
            let s = ws.load_suite(problem, suite)?;
            let zip = ws.work_dir(problem).join("archives").join(format!("{suite}.zip"));
            let local = export_archive(&s, ArchiveFormat::FlatZip, &zip)?;
            let ack = client.upload_tests(id, &zip)?;
            if !ack.manifest.same_files(&local) {
                return Err(PipelineError::Io(format!("remote manifest for {problem} differs from the uploaded archive")));
            }
            emit(out.format, serde_json::to_value(&ack).expect("json"), || {
                format!("uploaded {} files for {problem}; manifest hashes match\n", ack.manifest.entries.len())
            });
        }
        RemoteCmd::Rejudge { problem, submissions, out } => {
            let id = endpoint.remote_id(problem)?;
            let job = client.request_rejudge(id, submissions)?;
            emit(out.format, serde_json::to_value(&job).expect("json"), || format!("{} {}\n", job.job_id, job.status));
        }
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).expect("json") + "\n";
    std::fs::write(path, text).map_err(|e| pipeline::io_error(path, e))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
