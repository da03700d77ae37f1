//! The `aiq` command line.
//!
//! Failures are reported on stderr as one JSON object
//! (`{"error":{"code":...,"message":...}}`) with a nonzero exit code:
//! 2 for usage errors, 1 for everything else.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use aiq_core::{
    classify_machine, BankDocument, IntelligenceScale, MachineEvent, MachineSnapshot, QuestionBank,
    Session, SubjectKind, Verdict, World,
};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::clock::{Clock, SystemClock};
use crate::config::{HarnessConfig, DATA_DIR_ENV};
use crate::golden;
use crate::registry::BuildContext;
use crate::report::{self, Format};
use crate::runner::{run_session, LiveSession};
use crate::service::{self, AppState};
use crate::store::SessionStore;
use crate::subjects::{ProctorAnswer, ProctorChannel};

#[derive(Debug, Parser)]
#[command(
    name = "aiq",
    version,
    about = "Intelligence-quotient test harness for AI systems"
)]
struct Cli {
    /// Harness config file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Data directory; overrides the config file.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Question bank commands.
    #[command(subcommand)]
    Bank(BankCommand),
    /// Test paper commands.
    #[command(subcommand)]
    Paper(PaperCommand),
    /// Subject registry commands.
    #[command(subcommand)]
    Subject(SubjectCommand),
    /// Session commands.
    #[command(subcommand)]
    Session(SessionCommand),
    /// Reports.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Standard intelligent machine tools.
    #[command(subcommand)]
    Machine(MachineCommand),
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        listen: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum BankCommand {
    /// Check a bank file against the scale.
    Validate { path: PathBuf },
}

#[derive(Debug, Subcommand)]
enum PaperCommand {
    /// Draw a stratified test paper.
    Sample {
        #[arg(long)]
        seed: u64,
        /// Bank file; the configured bank when omitted.
        #[arg(long)]
        bank: Option<PathBuf>,
        /// Write the paper here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum SubjectCommand {
    List {
        #[arg(long, default_value = "table")]
        format: Format,
    },
}

#[derive(Debug, Subcommand)]
enum SessionCommand {
    /// Administer a paper to a registered subject.
    Run(RunArgs),
    /// Record a manual verdict.
    Grade {
        session: String,
        question: String,
        verdict: VerdictArg,
        #[arg(long, default_value = "cli")]
        grader: String,
        #[arg(long)]
        allow_regrade: bool,
    },
    /// Print a stored session as JSON.
    Show { session: String },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    subject: String,
    /// Paper id as printed by `paper sample` (`<scale>-seed<N>`).
    #[arg(long, conflicts_with = "seed")]
    paper: Option<String>,
    /// Seed for this subject only, overriding the cohort's.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "default")]
    cohort: String,
    #[arg(long)]
    session_id: Option<String>,
    #[arg(long)]
    timeout_ms: Option<u64>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum VerdictArg {
    Correct,
    Incorrect,
}

#[derive(Debug, Subcommand)]
enum ReportCommand {
    Leaderboard {
        #[arg(long, required_unless_present = "golden", conflicts_with = "golden")]
        cohort: Option<String>,
        /// Recompute a published table (CSV) instead of a stored cohort.
        #[arg(long)]
        golden: Option<PathBuf>,
        #[arg(long, default_value_t = golden::DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, default_value = "table")]
        format: Format,
    },
}

#[derive(Debug, Subcommand)]
enum MachineCommand {
    /// Classify a machine from a trace file.
    Classify { path: PathBuf },
}

/// Input of `machine classify`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceDocument {
    pub initial: MachineSnapshot,
    #[serde(rename = "final")]
    pub final_state: MachineSnapshot,
    pub trace: Vec<MachineEvent>,
}

struct Failure {
    exit: i32,
    code: &'static str,
    message: String,
    details: Option<Value>,
}

impl Failure {
    fn new(code: &'static str, message: impl ToString) -> Self {
        Failure {
            exit: 1,
            code,
            message: message.to_string(),
            details: None,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))
}

fn write_out(out: &mut dyn Write, text: &str) -> CmdResult {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::new("io", e))
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let msg = e.render().to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            let _ = writeln!(
                err,
                "{}",
                json!({ "error": { "code": "usage", "message": first } })
            );
            return 2;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(f) => {
            let mut body = json!({ "error": { "code": f.code, "message": f.message } });
            if let Some(d) = f.details {
                body["error"]["details"] = d;
            }
            let _ = writeln!(err, "{body}");
            f.exit
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CmdResult {
    let config = HarnessConfig::load(cli.config.as_deref(), cli.data_dir.clone())
        .map_err(|e| Failure::new("config", e))?;
    let scale = IntelligenceScale::default_scale();
    match cli.command {
        Command::Bank(BankCommand::Validate { path }) => bank_validate(&path, &scale, out),
        Command::Paper(PaperCommand::Sample {
            seed,
            bank,
            out: file,
        }) => {
            let bank = match bank {
                Some(p) => load_bank_file(&p, &scale)?,
                None => config
                    .load_bank(&scale)
                    .map_err(|e| Failure::new("invalid_bank", e))?,
            };
            let paper = bank
                .sample_paper(&scale, seed)
                .map_err(|e| Failure::new("invalid_bank", e))?;
            let text = serde_json::to_string_pretty(&paper).expect("papers serialize") + "\n";
            match file {
                Some(p) => std::fs::write(&p, text).map_err(|e| Failure::new("io", e)),
                None => write_out(out, &text),
            }
        }
        Command::Subject(SubjectCommand::List { format }) => subject_list(&config, format, out),
        Command::Session(cmd) => session_command(&config, &scale, cmd, out),
        Command::Report(ReportCommand::Leaderboard {
            cohort,
            golden: golden_path,
            tolerance,
            format,
        }) => {
            if let Some(path) = golden_path {
                let rows = golden::parse(&read_file(&path)?)
                    .map_err(|e| Failure::new("invalid_table", e))?;
                let cmp =
                    golden::compare(&rows, tolerance).map_err(|e| Failure::new("stats", e))?;
                return write_out(out, &report::render_golden(&cmp, format));
            }
            let cohort = cohort.unwrap_or_default();
            let store = open_store(&config)?;
            let sessions = store.load_all().map_err(|e| Failure::new("store", e))?;
            if !sessions.iter().any(|s| s.cohort == cohort) {
                return Err(Failure::new(
                    "not_found",
                    format!("unknown cohort {cohort}"),
                ));
            }
            let registry = config.load_registry().ok();
            let rep = report::cohort_report(&cohort, &sessions, &scale, registry.as_ref())
                .map_err(|e| Failure::new("stats", e))?;
            write_out(out, &report::render_cohort(&rep, format))
        }
        Command::Machine(MachineCommand::Classify { path }) => {
            let doc: TraceDocument = serde_json::from_str(&read_file(&path)?)
                .map_err(|e| Failure::new("invalid_trace", e))?;
            let t = classify_machine(&doc.trace, &doc.initial, &doc.final_state);
            write_out(
                out,
                &format!(
                    "{}\n",
                    json!({ "system_type": t.to_string(), "number": t.number() })
                ),
            )
        }
        Command::Serve { listen } => serve(config, listen),
    }
}

fn load_bank_file(path: &Path, scale: &IntelligenceScale) -> Result<QuestionBank, Failure> {
    let doc: BankDocument =
        serde_json::from_str(&read_file(path)?).map_err(|e| Failure::new("invalid_bank", e))?;
    QuestionBank::load(doc, scale).map_err(|e| {
        let issues: Vec<String> = e.issues.iter().map(ToString::to_string).collect();
        Failure {
            details: Some(json!({ "issues": issues })),
            ..Failure::new("invalid_bank", &e)
        }
    })
}

fn bank_validate(path: &Path, scale: &IntelligenceScale, out: &mut dyn Write) -> CmdResult {
    let bank = load_bank_file(path, scale)?;
    let counts = bank.counts(scale);
    let min = counts.iter().map(|c| c.1).min().unwrap_or(0);
    let max = counts.iter().map(|c| c.1).max().unwrap_or(0);
    let per = if min == max {
        min.to_string()
    } else {
        format!("{min}-{max}")
    };
    write_out(
        out,
        &format!(
            "conforming={} ({per}/subtest)\nquestions={}\n",
            bank.is_conforming(),
            bank.len()
        ),
    )
}

fn subject_list(config: &HarnessConfig, format: Format, out: &mut dyn Write) -> CmdResult {
    let registry = config
        .load_registry()
        .map_err(|e| Failure::new("registry", e))?;
    let descriptors: Vec<_> = registry.descriptors().collect();
    if format == Format::Json {
        return write_out(
            out,
            &(serde_json::to_string_pretty(&descriptors).expect("descriptors serialize") + "\n"),
        );
    }
    let mut text = String::new();
    let join = |set: &std::collections::BTreeSet<aiq_core::Modality>| {
        set.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(",")
    };
    for d in descriptors {
        let kind = serde_json::to_value(d.kind).expect("kinds serialize");
        let sep = if format == Format::Csv { "," } else { "\t" };
        text.push_str(
            &[
                d.subject_id.as_str(),
                kind.as_str().unwrap_or_default(),
                &join(&d.input_modalities).replace(',', "+"),
                &join(&d.output_modalities).replace(',', "+"),
                d.display_name.as_str(),
            ]
            .join(sep),
        );
        text.push('\n');
    }
    write_out(out, &text)
}

fn open_store(config: &HarnessConfig) -> Result<SessionStore, Failure> {
    SessionStore::open(config.sessions_dir()).map_err(|e| Failure::new("store", e))
}

/// Seed encoded in a paper id of the form `<scale>-seed<N>`.
fn seed_from_paper_id(paper_id: &str, scale: &IntelligenceScale) -> Option<u64> {
    paper_id
        .strip_prefix(scale.id.as_str())?
        .strip_prefix("-seed")?
        .parse()
        .ok()
}

fn session_command(
    config: &HarnessConfig,
    scale: &IntelligenceScale,
    cmd: SessionCommand,
    out: &mut dyn Write,
) -> CmdResult {
    let store = open_store(config)?;
    match cmd {
        SessionCommand::Run(args) => {
            let bank = config
                .load_bank(scale)
                .map_err(|e| Failure::new("invalid_bank", e))?;
            let registry = config
                .load_registry()
                .map_err(|e| Failure::new("registry", e))?;
            let entry = registry.get(&args.subject).ok_or_else(|| {
                Failure::new("not_found", format!("unknown subject {}", args.subject))
            })?;
            let override_seed = match &args.paper {
                Some(p) => Some(seed_from_paper_id(p, scale).ok_or_else(|| {
                    Failure::new("invalid_paper", format!("unrecognized paper id {p}"))
                })?),
                None => args.seed,
            };
            let seed = config.seed_policy.seed_for(&args.cohort, override_seed);
            let paper = bank
                .sample_paper(scale, seed)
                .map_err(|e| Failure::new("invalid_bank", e))?;

            let clock: Arc<dyn Clock> = Arc::new(SystemClock::new());
            let proctor = (entry.descriptor.kind == SubjectKind::Human)
                .then(|| ProctorChannel::new(clock.clone()));
            let ctx = BuildContext {
                clock: clock.clone(),
                world: Arc::new(Mutex::new(World::new())),
                proctor: proctor.clone(),
            };
            let handle = registry
                .build(&args.subject, &ctx)
                .map_err(|e| Failure::new("registry", e))?;
            let now = clock.now_ms();
            let session_id = args
                .session_id
                .unwrap_or_else(|| format!("{}-{}-{now}", args.cohort, args.subject));
            let live = LiveSession::start(
                &store,
                &session_id,
                &args.subject,
                &args.cohort,
                &paper,
                &bank,
                now,
            )
            .map_err(|e| Failure::new("session", e))?;
            if let Some(channel) = &proctor {
                spawn_terminal_proctor(channel.clone());
            }
            let timeout = args
                .timeout_ms
                .map_or(config.timeout(), std::time::Duration::from_millis);
            let session = run_session(&live, &handle, &bank, timeout, &*clock);
            if let Some(channel) = proctor {
                channel.close();
            }
            let session = session.map_err(|e| Failure::new("session", e))?;
            write_out(out, &(summary_json(&session) + "\n"))
        }
        SessionCommand::Grade {
            session,
            question,
            verdict,
            grader,
            allow_regrade,
        } => {
            let verdict = match verdict {
                VerdictArg::Correct => Verdict::Correct,
                VerdictArg::Incorrect => Verdict::Incorrect,
            };
            let (s, log) = store
                .open_session(&session)
                .map_err(|e| Failure::new("store", e))?;
            let live = LiveSession::new(s, log);
            let now = SystemClock::new().now_ms();
            live.commit(|s| s.submit_manual_grade(&question, verdict, grader, allow_regrade, now))
                .map_err(|e| Failure::new("grade", e))?;
            write_out(out, &(summary_json(&live.snapshot()) + "\n"))
        }
        SessionCommand::Show { session } => {
            let s = store.load(&session).map_err(|e| Failure::new("store", e))?;
            write_out(
                out,
                &(serde_json::to_string_pretty(&s).expect("sessions serialize") + "\n"),
            )
        }
    }
}

fn summary_json(s: &Session) -> String {
    serde_json::to_string(&service::SessionSummary::from(s)).expect("summaries serialize")
}

/// Relays questions of a human session through the terminal. An empty line
/// or `!skip` marks the question as one the subject cannot be asked.
fn spawn_terminal_proctor(channel: ProctorChannel) {
    std::thread::spawn(move || {
        let stdin = std::io::stdin();
        let mut last = None;
        while !channel.is_closed() {
            let Some(prompt) = channel.current() else {
                std::thread::sleep(std::time::Duration::from_millis(50));
                continue;
            };
            if last.as_ref() == Some(&prompt.question_id) {
                std::thread::sleep(std::time::Duration::from_millis(50));
                continue;
            }
            last = Some(prompt.question_id.clone());
            eprintln!(
                "[{}] ({}) {}",
                prompt.question_id,
                prompt.prompt_modality.as_str(),
                prompt.prompt
            );
            for a in &prompt.attachments {
                eprintln!("  attachment: {a}");
            }
            let mut line = String::new();
            if stdin.lock().read_line(&mut line).unwrap_or(0) == 0 {
                channel.close();
                return;
            }
            let line = line.trim();
            let answer = if line.is_empty() || line == "!skip" {
                ProctorAnswer::CannotBeAsked
            } else {
                ProctorAnswer::Text(line.to_string())
            };
            if let Err(e) = channel.submit(&prompt.question_id, answer) {
                eprintln!("  not recorded: {e}");
            }
        }
    });
}

fn serve(mut config: HarnessConfig, listen: Option<String>) -> CmdResult {
    if let Some(addr) = listen {
        config.listen = addr;
    }
    std::fs::create_dir_all(&config.data_dir).map_err(|e| Failure::new("io", e))?;
    config
        .check_paths()
        .map_err(|e| Failure::new("config", e))?;
    let addr = config.listen.clone();
    let app = Arc::new(
        AppState::new(config, Arc::new(SystemClock::new()))
            .map_err(|e| Failure::new("config", e))?,
    );
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::new("io", e))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Failure::new("io", format!("{addr}: {e}")))?;
        log::info!("listening on {addr}");
        service::serve(app, listener)
            .await
            .map_err(|e| Failure::new("io", e))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_ids_carry_their_seed() {
        let scale = IntelligenceScale::default_scale();
        assert_eq!(seed_from_paper_id("ai-iq-15-seed42", &scale), Some(42));
        assert_eq!(seed_from_paper_id("other-seed42", &scale), None);
        assert_eq!(seed_from_paper_id("ai-iq-15-seedx", &scale), None);
    }

    #[test]
    fn unknown_subcommand_is_a_json_usage_error() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["aiq", "frobnicate"], &mut out, &mut err), 2);
        let v: Value = serde_json::from_slice(&err).unwrap();
        assert_eq!(v["error"]["code"], "usage");
    }
}
