//! Command-line front end.
//!
//! Exit codes: 0 success, 1 conformance or validation failure, 2 constraint
//! violation or inapplicable change, 3 IO, parse or usage error, 4 rolled-back
//! migration.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::engine::{EngineError, MigrationReport};
use crate::helloworld::{self, Artifact, TaskError};
use crate::history::{Change, History, HistoryError};
use crate::json;
use crate::metamodel::Metamodel;
use crate::model::Repository;
use crate::operations::{self, Argument, Arguments, OperationError, ParamKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Nonconforming = 1,
    Constraint = 2,
    Io = 3,
    RolledBack = 4,
}

impl From<Exit> for ExitCode {
    fn from(exit: Exit) -> Self {
        ExitCode::from(exit as u8)
    }
}

#[derive(Debug, Parser)]
#[command(name = "coevo", version, about = "Metamodel evolution with coupled model migration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a metamodel and optionally a model against it.
    Validate {
        #[arg(long)]
        metamodel: String,
        #[arg(long)]
        model: Option<String>,
    },
    /// Start a history file for a metamodel.
    CreateHistory {
        #[arg(long)]
        metamodel: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Record a coupled operation in the open release of a history file.
    Apply {
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        op: Option<String>,
        /// Operation argument `name=value`; list values are comma separated.
        #[arg(long = "arg", value_name = "NAME=VALUE")]
        args: Vec<String>,
        /// Close the open release afterwards.
        #[arg(long)]
        release: bool,
    },
    /// Migrate a model between two releases of a history.
    Migrate {
        #[arg(long)]
        history: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
        #[arg(long)]
        out: PathBuf,
        /// Hook parameter `name=value`.
        #[arg(long = "arg", value_name = "NAME=VALUE")]
        args: Vec<String>,
    },
    /// Run one of the graph tasks.
    Task {
        #[arg(long)]
        task: String,
        /// Input model; an empty repository when omitted.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Task parameter `name=value`.
        #[arg(long = "arg", value_name = "NAME=VALUE")]
        args: Vec<String>,
    },
    /// List the reusable coupled operations.
    ListOps,
}

/// A failed command: its exit status and the lines for standard error.
#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub lines: Vec<String>,
}

impl Failure {
    fn new(exit: Exit, line: impl Display) -> Self {
        Failure {
            exit,
            lines: vec![line.to_string()],
        }
    }

    fn lines<T: Display>(exit: Exit, items: impl IntoIterator<Item = T>) -> Self {
        Failure {
            exit,
            lines: items.into_iter().map(|i| i.to_string()).collect(),
        }
    }
}

type Outcome = Result<String, Failure>;

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Exit::Io.into() } else { Exit::Success.into() };
        }
    };
    match run(cli.command) {
        Ok(stdout) => {
            print!("{stdout}");
            Exit::Success.into()
        }
        Err(failure) => {
            let mut stderr = std::io::stderr().lock();
            for line in &failure.lines {
                let _ = writeln!(stderr, "{line}");
            }
            failure.exit.into()
        }
    }
}

/// Executes a command; returns the text for standard output.
pub fn run(command: Command) -> Outcome {
    match command {
        Command::Validate { metamodel, model } => validate(&metamodel, model.as_deref()),
        Command::CreateHistory { metamodel, out } => create_history(&metamodel, &out),
        Command::Apply {
            history,
            op,
            args,
            release,
        } => apply(&history, op.as_deref(), &args, release),
        Command::Migrate {
            history,
            model,
            from,
            to,
            out,
            args,
        } => migrate(&history, &model, from, to, &out, &args),
        Command::Task { task, model, out, args } => run_task(&task, model.as_deref(), &out, &args),
        Command::ListOps => Ok(list_ops()),
    }
}

pub fn fixtures_dir() -> PathBuf {
    std::env::var_os("COEVO_FIXTURES")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
}

/// An existing path as given, otherwise `<fixtures>/<name>.<kind>.json`.
fn resolve(name: &str, kind: &str) -> PathBuf {
    let given = PathBuf::from(name);
    if given.exists() {
        return given;
    }
    let fixture = fixtures_dir().join(format!("{name}.{kind}.json"));
    if fixture.exists() {
        fixture
    } else {
        given
    }
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(Exit::Io, format!("cannot read {}: {e}", path.display())))?;
    json::from_str(&text).map_err(|e| Failure::new(Exit::Io, format!("cannot parse {}: {e}", path.display())))
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut file = tempfile::NamedTempFile::new_in(dir)?;
    file.write_all(contents.as_bytes())?;
    file.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn write_out(path: &Path, contents: &str) -> Result<(), Failure> {
    write_atomic(path, contents).map_err(|e| Failure::new(Exit::Io, format!("cannot write {}: {e}", path.display())))
}

fn parse_pairs(args: &[String]) -> Result<BTreeMap<String, String>, Failure> {
    args.iter()
        .map(|a| match a.split_once('=') {
            Some((k, v)) if !k.is_empty() => Ok((k.to_owned(), v.to_owned())),
            _ => Err(Failure::new(Exit::Io, format!("argument `{a}` is not of the form name=value"))),
        })
        .collect()
}

fn validate(metamodel: &str, model: Option<&str>) -> Outcome {
    let mm: Metamodel = load(&resolve(metamodel, "metamodel"))?;
    let violations = mm.validate();
    if !violations.is_empty() {
        return Err(Failure::lines(Exit::Nonconforming, violations));
    }
    if let Some(model) = model {
        let repo: Repository = load(&resolve(model, "model"))?;
        let violations = repo.check_conformance(&mm);
        if !violations.is_empty() {
            return Err(Failure::lines(Exit::Nonconforming, violations));
        }
    }
    Ok(String::new())
}

fn create_history(metamodel: &str, out: &Path) -> Outcome {
    let mm: Metamodel = load(&resolve(metamodel, "metamodel"))?;
    let history = History::create(&mm).map_err(|e| history_failure(&e))?;
    write_out(out, &json::to_canonical(&history))?;
    Ok(String::new())
}

fn history_failure(e: &HistoryError) -> Failure {
    match e {
        HistoryError::InvalidMetamodel(v) => Failure::lines(Exit::Nonconforming, v),
        HistoryError::InapplicableChange(c) if !c.violations().is_empty() => {
            Failure::lines(Exit::Constraint, c.violations())
        }
        HistoryError::InapplicableChange(_)
        | HistoryError::ClosedRelease(_)
        | HistoryError::SpanClosed(_)
        | HistoryError::SpanNonContiguous { .. } => Failure::new(Exit::Constraint, e),
        HistoryError::NoSuchRelease { .. } | HistoryError::Corrupt { .. } => Failure::new(Exit::Io, e),
    }
}

/// Converts `name=value` pairs to operation arguments using the signature:
/// list parameters split on commas, flags parse as booleans.
fn operation_arguments(op: &str, args: &[String]) -> Result<Arguments, Failure> {
    let signature = operations::lookup(op)
        .map_err(|e| Failure::new(Exit::Constraint, e))?
        .signature();
    let mut out = Arguments::new();
    for (name, value) in parse_pairs(args)? {
        let kind = signature.parameters.iter().find(|p| p.name == name).map(|p| p.kind);
        let argument = match kind {
            Some(ParamKind::ElementList) => Argument::List(
                value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_owned)
                    .collect(),
            ),
            Some(ParamKind::Flag) => match value.as_str() {
                "true" => Argument::Flag(true),
                "false" => Argument::Flag(false),
                _ => return Err(Failure::new(Exit::Constraint, format!("`{name}` expects true or false"))),
            },
            _ => Argument::Text(value),
        };
        out.insert(name, argument);
    }
    Ok(out)
}

fn apply(path: &Path, op: Option<&str>, args: &[String], release: bool) -> Outcome {
    let mut history: History = load(path)?;
    let mut stdout = String::new();
    if let Some(op) = op {
        let arguments = operation_arguments(op, args)?;
        let head = history.head_metamodel().map_err(|e| history_failure(&e))?;
        match operations::check_applicability(op, &arguments, &head) {
            Ok(v) if v.is_empty() => {}
            Ok(v) => return Err(Failure::lines(Exit::Constraint, v)),
            Err(OperationError::Violations(v)) => return Err(Failure::lines(Exit::Constraint, v)),
            Err(e) => return Err(Failure::new(Exit::Constraint, e)),
        }
        history
            .record(Change::operation(op, arguments))
            .map_err(|e| history_failure(&e))?;
        stdout.push_str(&format!("recorded {op} in release {}\n", history.last_index()));
    } else if !args.is_empty() {
        return Err(Failure::new(Exit::Io, "--arg needs --op"));
    }
    if release {
        let closed = history.release_head().map_err(|e| history_failure(&e))?;
        stdout.push_str(&format!("released {closed}\n"));
    }
    write_out(path, &json::to_canonical(&history))?;
    Ok(stdout)
}

fn engine_failure(e: EngineError) -> Failure {
    match e {
        EngineError::NonconformingInput { violations, .. } => Failure::lines(Exit::Nonconforming, violations),
        other => Failure::new(Exit::Io, other),
    }
}

fn rolled_back(report: &MigrationReport) -> Failure {
    let mut lines = Vec::new();
    for step in &report.steps {
        lines.extend(step.violations.iter().cloned());
        lines.extend(step.failure.iter().map(|f| format!("FAILURE {}: {f}", step.change_ref)));
    }
    lines.push(json::to_canonical(report).trim_end().to_owned());
    Failure { exit: Exit::RolledBack, lines }
}

fn migrate(history: &str, model: &str, from: usize, to: usize, out: &Path, args: &[String]) -> Outcome {
    if from > to {
        return Err(Failure::new(Exit::Io, format!("--from {from} is after --to {to}")));
    }
    let history: History = load(&resolve(history, "history"))?;
    let mut repo: Repository = load(&resolve(model, "model"))?;
    let mut engine = helloworld::standard_engine();
    for (k, v) in parse_pairs(args)? {
        engine.set_param(&k, &v);
    }
    let report = engine.migrate(&mut repo, &history, from, to).map_err(engine_failure)?;
    if report.rolled_back() {
        return Err(rolled_back(&report));
    }
    write_out(out, &json::to_canonical(&repo))?;
    Ok(json::to_canonical(&report))
}

fn run_task(name: &str, model: Option<&str>, out: &Path, args: &[String]) -> Outcome {
    let Some(spec) = helloworld::task(name) else {
        let mut lines = vec![format!("unknown task `{name}`; available tasks:")];
        lines.extend(helloworld::TASKS.iter().map(|t| format!("  {}", t.name)));
        return Err(Failure { exit: Exit::Io, lines });
    };
    let repo = match model {
        Some(model) => load(&resolve(model, "model"))?,
        None => Repository::new(&spec.history().metamodel, 0),
    };
    let params = parse_pairs(args)?;
    let run = helloworld::run_task(spec, repo, &params).map_err(|e| match e {
        TaskError::Engine(e) => engine_failure(e),
        TaskError::RolledBack(report) => rolled_back(&report),
        other => Failure::new(Exit::Io, other),
    })?;
    let contents = match &run.artifact {
        Artifact::Model(repo) => json::to_canonical(repo),
        Artifact::Text(text) => text.clone(),
    };
    write_out(out, &contents)?;
    Ok(json::to_canonical(&run.report))
}

fn list_ops() -> String {
    operations::registry()
        .iter()
        .map(|op| format!("{}\n", op.signature()))
        .collect()
}
