//! The `proleg` command line.
//!
//! Exit codes: 0 when a query succeeds, a case passes or lint is clean;
//! 1 when a query fails, a case mismatches or lint findings reach the
//! `--fail-on` threshold; 2 for usage, I/O, parse and engine errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::ast::{FactBase, Program};
use crate::convert::convert_source;
use crate::engine::{solve, stratify, EngineConfig, Outcome};
use crate::gdpr::{case_paths, load_case, run_case, CaseFile, CaseRun};
use crate::lint::{findings_to_json, lint, LintConfig, Severity};
use crate::parser::{parse_atom, parse_facts, parse_program, serialize, ErrorList};
use crate::trace::{render_dot, render_json_document, render_text, TraceNode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "proleg", version, about = "Evaluate, check, lint and convert PROLEG rule programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Prove a query against a ruleset and a fact file; prints `o` or `x`.
    Run {
        rules: PathBuf,
        facts: PathBuf,
        #[arg(long)]
        query: String,
        #[command(flatten)]
        output: TraceOutput,
        #[command(flatten)]
        limits: Limits,
    },
    /// Parse a ruleset and report its size and strata.
    Check { rules: PathBuf },
    /// Report suspicious rule structure.
    Lint {
        rules: PathBuf,
        /// JSON lint configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value = "error")]
        fail_on: Severity,
    },
    /// Translate a Prolog-subset program into PROLEG.
    Convert { prolog: PathBuf, out: PathBuf },
    /// Execute case files.
    Case {
        #[command(subcommand)]
        action: CaseAction,
    },
}

#[derive(Subcommand, Debug)]
pub enum CaseAction {
    /// Run one case file, or every `*.case.json` in a directory with `--all`.
    Run {
        #[arg(required_unless_present = "all", conflicts_with = "all")]
        case: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        all: Option<PathBuf>,
        #[command(flatten)]
        output: TraceOutput,
        #[command(flatten)]
        limits: Limits,
    },
}

#[derive(Args, Debug, Default)]
pub struct TraceOutput {
    /// Write the trace as JSON.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Write the trace as Graphviz DOT.
    #[arg(long, value_name = "PATH")]
    dot: Option<PathBuf>,
    /// Print the trace tree.
    #[arg(long)]
    text: bool,
}

#[derive(Args, Debug)]
pub struct Limits {
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, env = "PROLEG_MAX_STEPS")]
    max_steps: Option<usize>,
    /// Disable the ancestor loop check (loops then hit the depth limit).
    #[arg(long)]
    no_loop_check: bool,
}

impl Limits {
    fn config(&self) -> EngineConfig {
        let mut cfg = EngineConfig::default();
        if let Some(d) = self.max_depth {
            cfg.max_depth = d;
        }
        if let Some(s) = self.max_steps {
            cfg.max_steps = s;
        }
        cfg.loop_check = !self.no_loop_check;
        cfg
    }
}

/// Error already formatted for the user; always exit 2.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return if code == 0 { EXIT_OK } else { EXIT_ERROR };
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {}", msg.trim_end());
            EXIT_ERROR
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Run { rules, facts, query, output, limits } => cmd_run(&rules, &facts, &query, &output, &limits, out),
        Command::Check { rules } => cmd_check(&rules, out),
        Command::Lint { rules, config, json, fail_on } => cmd_lint(&rules, config.as_deref(), json, fail_on, out),
        Command::Convert { prolog, out: target } => cmd_convert(&prolog, &target, out),
        Command::Case { action: CaseAction::Run { case, all, output, limits } } => match (case, all) {
            (_, Some(dir)) => cmd_case_all(&dir, &limits, out),
            (Some(case), None) => cmd_case(&case, &output, &limits, out),
            (None, None) => unreachable!("clap requires a case or --all"),
        },
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    parse_program(&read(path)?).map_err(|errs| Failure(format!("{}:\n{}", path.display(), ErrorList(&errs))))
}

fn load_facts(path: &Path) -> Result<FactBase, Failure> {
    parse_facts(&read(path)?).map_err(|errs| Failure(format!("{}:\n{}", path.display(), ErrorList(&errs))))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
}

fn emit_trace(trace: &TraceNode, output: &TraceOutput, out: &mut dyn Write) -> Result<(), Failure> {
    if let Some(path) = &output.trace {
        write_file(path, &render_json_document(trace))?;
    }
    if let Some(path) = &output.dot {
        write_file(path, &render_dot(trace))?;
    }
    if output.text {
        write!(out, "{}", render_text(trace))?;
    }
    Ok(())
}

fn outcome_code(outcome: Outcome) -> i32 {
    if outcome.is_success() {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn cmd_run(
    rules: &Path,
    facts: &Path,
    query: &str,
    output: &TraceOutput,
    limits: &Limits,
    out: &mut dyn Write,
) -> CmdResult {
    let program = load_program(rules)?;
    let facts = load_facts(facts)?;
    let goal = parse_atom(query).map_err(|errs| Failure(format!("query:\n{}", ErrorList(&errs))))?;
    let (outcome, trace) = solve(&program, &facts, &goal, &limits.config())?;
    writeln!(out, "{outcome}")?;
    emit_trace(&trace, output, out)?;
    Ok(outcome_code(outcome))
}

fn cmd_check(rules: &Path, out: &mut dyn Write) -> CmdResult {
    let program = load_program(rules)?;
    let strata = stratify(&program)?;
    writeln!(out, "rules: {}", program.rules.len())?;
    writeln!(out, "exceptions: {}", program.exceptions.len())?;
    writeln!(out, "predicates: {}", program.predicates().len())?;
    writeln!(out, "strata: {}", strata.strata.len())?;
    for (level, layer) in strata.strata.iter().enumerate() {
        let names: Vec<String> = layer.iter().map(ToString::to_string).collect();
        writeln!(out, "  {level}: {}", names.join(", "))?;
    }
    for id in program.non_range_restricted() {
        writeln!(out, "warning: rule {id} is not range-restricted")?;
    }
    Ok(EXIT_OK)
}

fn cmd_lint(rules: &Path, config: Option<&Path>, json: bool, fail_on: Severity, out: &mut dyn Write) -> CmdResult {
    let program = load_program(rules)?;
    let cfg = match config {
        Some(path) => LintConfig::from_json(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))?,
        None => LintConfig::default(),
    };
    let findings = lint(&program, &cfg);
    if json {
        writeln!(out, "{}", findings_to_json(&findings))?;
    } else {
        for f in &findings {
            writeln!(out, "{f}")?;
            if !f.related.is_empty() {
                writeln!(out, "  related: {}", f.related.join(", "))?;
            }
        }
        writeln!(out, "{} finding(s)", findings.len())?;
    }
    Ok(if findings.iter().any(|f| f.severity >= fail_on) { EXIT_FAIL } else { EXIT_OK })
}

fn cmd_convert(prolog: &Path, target: &Path, out: &mut dyn Write) -> CmdResult {
    let (program, report) = convert_source(&read(prolog)?).map_err(|e| Failure(format!("{}:\n{e}", prolog.display())))?;
    write_file(target, &serialize(&program))?;
    write!(out, "{report}")?;
    Ok(EXIT_OK)
}

fn cmd_case(path: &Path, output: &TraceOutput, limits: &Limits, out: &mut dyn Write) -> CmdResult {
    let case = load_case(path)?;
    let run = run_case(&case, &limits.config())?;
    write_case_line(&case, &run, out)?;
    for f in &run.missing_fragments {
        writeln!(out, "  missing fragment: {f}")?;
    }
    emit_trace(&run.trace, output, out)?;
    Ok(if run.passed { EXIT_OK } else { EXIT_FAIL })
}

fn write_case_line(case: &CaseFile, run: &CaseRun, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{} {}: expected {}, actual {}",
        if run.passed { "PASS" } else { "FAIL" },
        case.id,
        case.expected,
        run.actual
    )
}

fn cmd_case_all(dir: &Path, limits: &Limits, out: &mut dyn Write) -> CmdResult {
    let paths = case_paths(dir).map_err(|e| Failure(format!("cannot list {}: {e}", dir.display())))?;
    let cfg = limits.config();
    let results: Vec<Result<(CaseFile, CaseRun), Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = paths
            .iter()
            .map(|p| {
                scope.spawn(move || -> Result<(CaseFile, CaseRun), Failure> {
                    let case = load_case(p)?;
                    let run = run_case(&case, &cfg)?;
                    Ok((case, run))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p))).collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    rows.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    let passed = rows.iter().filter(|(_, run)| run.passed).count();
    for (case, run) in &rows {
        write_case_line(case, run, out)?;
    }
    writeln!(out, "{passed}/{} passed", rows.len())?;
    Ok(if passed == rows.len() { EXIT_OK } else { EXIT_FAIL })
}
