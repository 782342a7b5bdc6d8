//! Command-line front end. `run` is the whole program minus process setup,
//! so tests can drive it with in-memory streams.
//!
//! Exit codes: 0 success, 1 violations or diagnostics, 2 access denied,
//! 3 state bound exceeded, 64 usage, 65 invalid input, 66 missing file,
//! 74 I/O failure.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::checker::{self, CheckError, CheckOptions, CheckReport};
use crate::corpus;
use crate::dsl::{self, compile, parse_expr, parse_policy, pretty_print, validate, PolicyMachine};
use crate::engine::access::{context_from_machine, decide_access, overlay_owner, Verdict};
use crate::engine::simulate::Simulation;
use crate::engine::{apply_event, initial_state, Binding, Machine, SystemState, Value};
use crate::model::{AccessContext, DataId, Right, UserId};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_DENY: i32 = 2;
pub const EXIT_BOUND: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Parser)]
#[command(
    name = "dynrbac",
    version,
    about = "State-dependent RBAC policy engine and bounded verifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a machine and print it in canonical form.
    Parse { file: String },
    /// Type-check a machine and its refinement links.
    Validate {
        file: String,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Check initialisation, invariant preservation, and optionally deadlock freedom.
    Check {
        file: String,
        /// States satisfying this predicate may have no enabled event.
        #[arg(long, value_name = "PRED")]
        deadlock_final: Option<String>,
        #[command(flatten)]
        explore: Explore,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Check that <refined> refines <abstract>.
    Refine {
        #[arg(value_name = "ABSTRACT")]
        abs: String,
        #[arg(value_name = "REFINED")]
        conc: String,
        #[command(flatten)]
        explore: Explore,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Random or interactive walk through the machine.
    Simulate {
        file: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Choose each transition from a numbered menu on stdin.
        #[arg(long)]
        interactive: bool,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Answer an access query in the state reached by an event sequence.
    Decide {
        file: String,
        /// Access context file; derived from the machine's constants when omitted.
        #[arg(long)]
        context: Option<String>,
        /// `;`-separated events, each followed by its parameter values in order.
        #[arg(long, default_value = "")]
        state_after: String,
        #[arg(long)]
        user: String,
        #[arg(long)]
        right: String,
        #[arg(long)]
        object: String,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Embedded fixtures.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Debug, Subcommand)]
enum CorpusAction {
    /// Write every fixture into a directory.
    Export { dir: PathBuf },
    /// List fixtures and their expectations.
    List,
}

#[derive(Debug, Args)]
struct Bounds {
    /// Rewrite REPORTS to {r1, ..., rN}.
    #[arg(long, value_name = "N")]
    reports: Option<usize>,
    /// Rewrite the user population to N reporters, one controller, one administrator.
    #[arg(long, value_name = "N")]
    users: Option<usize>,
}

#[derive(Debug, Args)]
struct Explore {
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = checker::DEFAULT_MAX_STATES)]
    max_states: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Records,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: file not found")]
    NotFound { path: String },
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::NotFound { .. } => EXIT_NO_INPUT,
            CliError::Io(_) => EXIT_IO,
            CliError::Input(_) => EXIT_DATA,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

fn input(e: impl ToString) -> CliError {
    CliError::Input(e.to_string())
}

/// Runs one invocation; `argv[0]` is the program name.
pub fn run(argv: &[String], stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let mut io = Io { stdin, stdout, stderr };
    match dispatch(cli.command, &mut io) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {e}");
            e.code()
        }
    }
}

struct Io<'a> {
    stdin: &'a mut dyn BufRead,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

/// A machine source: an embedded fixture or a file on disk.
struct Source {
    text: String,
    label: String,
    dir: Option<PathBuf>,
}

fn read_source(arg: &str) -> Result<Source, CliError> {
    if let Some(name) = arg.strip_prefix("corpus:") {
        let f = corpus::lookup(name).ok_or_else(|| CliError::NotFound { path: arg.to_string() })?;
        return Ok(Source {
            text: f.text.to_string(),
            label: arg.to_string(),
            dir: None,
        });
    }
    let path = Path::new(arg);
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => CliError::NotFound { path: arg.to_string() },
        _ => CliError::Io(e),
    })?;
    Ok(Source {
        text,
        label: arg.to_string(),
        dir: Some(path.parent().map(Path::to_path_buf).unwrap_or_default()),
    })
}

fn parse_source(src: &Source) -> Result<PolicyMachine, CliError> {
    parse_policy(&src.text).map_err(|e| input(format!("{}: {e}", src.label)))
}

fn apply_bounds(m: &mut PolicyMachine, b: &Bounds) -> Result<(), CliError> {
    if let Some(n) = b.reports {
        if n == 0 {
            return Err(CliError::Usage("--reports must be at least 1".into()));
        }
        if !corpus::with_reports(m, n) {
            return Err(input(format!("machine `{}` declares no REPORTS set", m.name)));
        }
    }
    if let Some(n) = b.users {
        if n == 0 {
            return Err(CliError::Usage("--users must be at least 1".into()));
        }
        corpus::with_users(m, n).map_err(input)?;
    }
    Ok(())
}

/// The machine named in `m.refines`, looked up next to its source.
fn find_abstract(m: &PolicyMachine, src: &Source, b: &Bounds) -> Result<Option<PolicyMachine>, CliError> {
    let Some(name) = &m.refines else {
        return Ok(None);
    };
    if name == &m.name {
        return Ok(Some(m.clone()));
    }
    let candidates = [name.clone(), name.to_lowercase()];
    let text = match &src.dir {
        None => candidates
            .iter()
            .find_map(|c| corpus::lookup(c))
            .map(|f| f.text.to_string()),
        Some(dir) => candidates
            .iter()
            .map(|c| dir.join(format!("{c}.pol")))
            .find(|p| p.is_file())
            .map(fs::read_to_string)
            .transpose()?,
    };
    let Some(text) = text else {
        return Ok(None);
    };
    let mut abs = parse_policy(&text).map_err(|e| input(format!("abstract machine `{name}`: {e}")))?;
    // The population rewrite only applies where the set exists.
    if let Some(n) = b.reports {
        corpus::with_reports(&mut abs, n);
    }
    if b.users.is_some() && abs.set("USERS").is_some() {
        apply_bounds(
            &mut abs,
            &Bounds {
                reports: None,
                users: b.users,
            },
        )?;
    }
    Ok(Some(abs))
}

fn compile_or_report(m: &PolicyMachine, io: &mut Io) -> Result<Machine, CliError> {
    compile(m).map_err(|diags| {
        for d in &diags {
            let _ = writeln!(io.stderr, "{d}");
        }
        input(format!("machine `{}` has {} diagnostic(s)", m.name, diags.len()))
    })
}

fn load(arg: &str, bounds: &Bounds, io: &mut Io) -> Result<(PolicyMachine, Machine, Source), CliError> {
    let src = read_source(arg)?;
    let mut pm = parse_source(&src)?;
    apply_bounds(&mut pm, bounds)?;
    let m = compile_or_report(&pm, io)?;
    Ok((pm, m, src))
}

fn dispatch(cmd: Command, io: &mut Io) -> Result<i32, CliError> {
    match cmd {
        Command::Parse { file } => {
            let src = read_source(&file)?;
            let pm = parse_source(&src)?;
            write!(io.stdout, "{}", pretty_print(&pm))?;
            Ok(EXIT_OK)
        }
        Command::Validate { file, bounds } => {
            let src = read_source(&file)?;
            let mut pm = parse_source(&src)?;
            apply_bounds(&mut pm, &bounds)?;
            let abs = find_abstract(&pm, &src, &bounds)?;
            let diags = validate(&pm, abs.as_ref());
            for d in &diags {
                writeln!(io.stderr, "{d}")?;
            }
            if diags.is_empty() {
                writeln!(io.stdout, "{}: ok", pm.name)?;
                Ok(EXIT_OK)
            } else {
                writeln!(io.stdout, "{}: {} diagnostic(s)", pm.name, diags.len())?;
                Ok(EXIT_VIOLATIONS)
            }
        }
        Command::Check {
            file,
            deadlock_final,
            explore,
            bounds,
        } => {
            let (_, m, _) = load(&file, &bounds, io)?;
            let final_pred = deadlock_final
                .as_deref()
                .map(parse_expr)
                .transpose()
                .map_err(|e: dsl::ParseError| input(format!("--deadlock-final: {e}")))?;
            let opts = options(&explore)?;
            let result = checker::check(&m, final_pred.as_ref(), opts);
            emit(result, &m, explore.format, io)
        }
        Command::Refine {
            abs,
            conc,
            explore,
            bounds,
        } => {
            let (_, am, _) = load(&abs, &bounds, io)?;
            let (_, cm, _) = load(&conc, &bounds, io)?;
            let opts = options(&explore)?;
            let result = checker::check_refinement(&am, &cm, opts);
            emit(result, &cm, explore.format, io)
        }
        Command::Simulate {
            file,
            seed,
            steps,
            interactive,
            bounds,
        } => {
            let (_, m, _) = load(&file, &bounds, io)?;
            simulate(&m, seed, steps, interactive, io)
        }
        Command::Decide {
            file,
            context,
            state_after,
            user,
            right,
            object,
            bounds,
        } => {
            let (_, m, _) = load(&file, &bounds, io)?;
            let right: Right = right.parse().map_err(input)?;
            let state = run_events(&m, &state_after)?;
            let ctx = match context {
                None => context_from_machine(&m, &state).map_err(input)?,
                Some(arg) => {
                    let src = read_source(&arg)?;
                    let mut ctx = AccessContext::parse(&src.text).map_err(|e| input(format!("{arg}: {e}")))?;
                    overlay_owner(&mut ctx, &m, &state);
                    ctx
                }
            };
            let d = decide_access(&m, &state, &ctx, &UserId::new(user), right, &DataId::new(object)).map_err(input)?;
            writeln!(io.stdout, "{}", d.verdict)?;
            writeln!(io.stdout, "justification: {}", d.justification)?;
            if let Some(n) = &d.note {
                writeln!(io.stdout, "note: {n}")?;
            }
            Ok(match d.verdict {
                Verdict::Allow => EXIT_OK,
                Verdict::Deny => EXIT_DENY,
            })
        }
        Command::Corpus { action } => match action {
            CorpusAction::Export { dir } => {
                for p in corpus::export(&dir)? {
                    writeln!(io.stdout, "{}", p.display())?;
                }
                Ok(EXIT_OK)
            }
            CorpusAction::List => {
                for f in corpus::corpus_manifest() {
                    let counts: Vec<String> = f
                        .reachable
                        .iter()
                        .map(|(n, c)| format!("{n} report(s): {c} states"))
                        .collect();
                    writeln!(io.stdout, "{:<14} {:?} {}", f.path, f.outcome, counts.join(", "))?;
                }
                Ok(EXIT_OK)
            }
        },
    }
}

fn options(e: &Explore) -> Result<CheckOptions, CliError> {
    if e.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    Ok(CheckOptions {
        max_states: e.max_states,
        workers: e.workers,
    })
}

fn write_report(r: &CheckReport, m: &Machine, format: Format, io: &mut Io) -> io::Result<()> {
    match format {
        Format::Text => write!(io.stdout, "{}", r.to_text(m))?,
        Format::Records => write!(io.stdout, "{}", r.to_records_text())?,
    }
    writeln!(io.stderr, "elapsed: {:.3}s", r.elapsed.as_secs_f64())
}

fn emit(result: Result<CheckReport, CheckError>, m: &Machine, format: Format, io: &mut Io) -> Result<i32, CliError> {
    match result {
        Ok(r) => {
            write_report(&r, m, format, io)?;
            Ok(if r.all_discharged() { EXIT_OK } else { EXIT_VIOLATIONS })
        }
        Err(CheckError::BoundExceeded { cap, partial }) => {
            write_report(&partial, m, format, io)?;
            writeln!(io.stderr, "error: exploration stopped at the bound of {cap} states")?;
            Ok(EXIT_BOUND)
        }
        Err(e) => Err(input(e)),
    }
}

/// Replays `Event a b; Event c` from the initial state. Arguments bind to
/// the event's parameters in declaration order; values after `::` supply
/// the choices of nondeterministic actions.
fn run_events(m: &Machine, script: &str) -> Result<SystemState, CliError> {
    let mut s = initial_state(m).map_err(input)?;
    for item in script.split(';').map(str::trim).filter(|x| !x.is_empty()) {
        let (call, picks) = match item.split_once("::") {
            Some((c, p)) => (c, p.split_whitespace().map(Value::elem).collect()),
            None => (item, Vec::new()),
        };
        let mut words = call.split_whitespace();
        let name = words.next().unwrap_or_default();
        let ev = m
            .events
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| input(format!("unknown event `{name}`")))?;
        let args: Vec<&str> = words.collect();
        if args.len() != ev.params.len() {
            return Err(input(format!(
                "`{name}` takes {} argument(s), got {}",
                ev.params.len(),
                args.len()
            )));
        }
        let binding = Binding(
            ev.params
                .iter()
                .zip(args)
                .map(|(p, a)| (p.name.clone(), Value::elem(a)))
                .collect(),
        );
        s = apply_event(m, &s, name, &binding, &picks).map_err(|e| input(format!("`{item}`: {e}")))?;
    }
    Ok(s)
}

fn simulate(m: &Machine, seed: u64, steps: usize, interactive: bool, io: &mut Io) -> Result<i32, CliError> {
    let mut sim = Simulation::new(m, seed).map_err(input)?;
    writeln!(io.stdout, "init => {}", sim.state().render(m))?;
    let mut taken = 0;
    while taken < steps {
        let options = sim.options().map_err(input)?;
        if options.is_empty() {
            writeln!(io.stdout, "no event enabled after {taken} step(s)")?;
            break;
        }
        let step = if interactive {
            for (i, (step, _)) in options.iter().enumerate() {
                writeln!(io.stdout, "  [{i}] {}", step.describe(m))?;
            }
            write!(io.stdout, "choose 0-{} (q quits)> ", options.len() - 1)?;
            io.stdout.flush()?;
            let mut line = String::new();
            if io.stdin.read_line(&mut line)? == 0 || line.trim() == "q" {
                writeln!(io.stdout)?;
                break;
            }
            match line.trim().parse::<usize>() {
                Ok(i) if i < options.len() => sim.take(i).map_err(input)?,
                _ => {
                    writeln!(io.stdout, "no option `{}`", line.trim())?;
                    continue;
                }
            }
        } else {
            sim.step().map_err(input)?
        };
        if let Some(step) = step {
            writeln!(io.stdout, "{}", step.line(m))?;
        }
        taken += 1;
    }
    if interactive {
        writeln!(io.stdout, "final => {}", sim.state().render(m))?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let argv: Vec<String> = std::iter::once("dynrbac")
            .chain(args.iter().copied())
            .map(String::from)
            .collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(&argv, &mut io::empty(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, err) = call(&["check", "corpus:rms_abs", "--frobnicate"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--frobnicate"));
    }

    #[test]
    fn help_goes_to_stdout() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("decide"));
    }

    #[test]
    fn event_script_arity_is_checked() {
        let (code, _, err) = call(&[
            "decide",
            "corpus:rms_ref2",
            "--state-after",
            "CreateReport u1",
            "--user",
            "u1",
            "--right",
            "R",
            "--object",
            "r1",
        ]);
        assert_eq!(code, EXIT_DATA);
        assert!(err.contains("takes 2 argument(s)"), "{err}");
    }
}
