use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use iscore_core::dsl::{parse_any, to_json_string};
use iscore_core::edition::{compile, EditionResult};
use iscore_core::encode::{encode_score, QScore};
use iscore_core::engine::{parse_script, Engine, ScriptEntry, AUTO};
use iscore_core::model::{validate_score, Score, Tick};

use crate::session::{Session, SessionConfig};

/// Exit status of a failed command.
#[derive(Debug)]
pub enum Failure {
    /// Parse, schema, validation or edition errors.
    Invalid(String),
    Io(String),
    Engine(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Io(_) => 2,
            Failure::Engine(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Io(m) | Failure::Engine(m) => m,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "iscore", version, about = "Interactive scores with conditional branching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a score and print its diagnostics.
    Validate { file: PathBuf },
    /// Compute nominal durations, date sets and rigidity warnings.
    Compile {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: OutputFormat,
        /// Also write the compiled score as JSON.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Execute a score and print its trace as JSON lines.
    Run {
        file: PathBuf,
        /// JSON array of {tick, event} inputs.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        max_ticks: Tick,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// How choice points resolve: auto or interactive.
        #[arg(long, default_value = AUTO)]
        policy: String,
    },
    /// Translate a q-score (objects plus Allen relations) into a score.
    Encode {
        file: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Perform a score live over WebSocket at ws://<host>:<port>/ws.
    Serve {
        file: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        tick_ms: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = AUTO)]
        policy: String,
        #[arg(long)]
        max_ticks: Option<Tick>,
        /// Write the applied inputs as a `run` script when the session ends.
        #[arg(long)]
        dump_script: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// Parses and validates; warnings are printed to stderr.
pub fn load(path: &Path) -> Result<Score, Failure> {
    let src = read(path)?;
    let s = parse_any(&path.display().to_string(), &src).map_err(|e| Failure::Invalid(e.to_string()))?;
    let diags = validate_score(&s);
    let errors: Vec<String> = diags.iter().filter(|d| d.is_error()).map(|d| d.to_string()).collect();
    for d in diags.iter().filter(|d| !d.is_error()) {
        eprintln!("{d}");
    }
    if !errors.is_empty() {
        return Err(Failure::Invalid(errors.join("\n")));
    }
    Ok(s)
}

fn load_compiled(path: &Path) -> Result<(Score, EditionResult), Failure> {
    compile(&load(path)?).map_err(|e| Failure::Invalid(e.to_string()))
}

pub fn edition_table(r: &EditionResult) -> String {
    let mut out = String::from("dates\n");
    for (p, d) in &r.dates {
        out.push_str(&format!("  {p}: {d}\n"));
    }
    out.push_str("nominal durations\n");
    for (owner, t) in &r.nominal_durations {
        out.push_str(&format!("  {owner}: {t}\n"));
    }
    out.push_str("warnings\n");
    if r.warnings.is_empty() {
        out.push_str("  none\n");
    }
    for w in &r.warnings {
        out.push_str(&format!(
            "  {}: {} (choice at {})\n",
            w.to,
            serde_json::to_value(w.reason).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            w.witness
        ));
    }
    out
}

pub fn execute(cli: Cli) -> Result<(), Failure> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let io = |e: std::io::Error| Failure::Io(e.to_string());
    match cli.command {
        Command::Validate { file } => {
            let src = read(&file)?;
            let s = parse_any(&file.display().to_string(), &src).map_err(|e| Failure::Invalid(e.to_string()))?;
            let diags = validate_score(&s);
            for d in &diags {
                writeln!(out, "{d}").map_err(io)?;
            }
            let errors = diags.iter().filter(|d| d.is_error()).count();
            if errors > 0 {
                return Err(Failure::Invalid(format!("{errors} error(s)")));
            }
            writeln!(out, "ok").map_err(io)?;
        }
        Command::Compile { file, format, emit } => {
            let (s, r) = load_compiled(&file)?;
            match format {
                OutputFormat::Table => write!(out, "{}", edition_table(&r)).map_err(io)?,
                OutputFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&r).expect("serializes")).map_err(io)?,
            }
            if let Some(path) = emit {
                write(&path, &to_json_string(&s))?;
            }
        }
        Command::Run { file, script, max_ticks, seed, policy } => {
            let (s, _) = load_compiled(&file)?;
            let script: Vec<ScriptEntry> = match script {
                Some(p) => parse_script(&read(&p)?).map_err(|e| Failure::Invalid(e.to_string()))?,
                None => Vec::new(),
            };
            let outcome = Engine::default()
                .run(&s, &script, max_ticks, seed, &policy)
                .map_err(|e| Failure::Engine(e.to_string()))?;
            iscore_core::engine::write_jsonl(&mut out, &outcome.trace).map_err(io)?;
            log::info!("stopped at tick {} ({:?})", outcome.last_tick, outcome.reason);
        }
        Command::Encode { file, out: dest } => {
            let q: QScore = serde_json::from_str(&read(&file)?)
                .map_err(|e| Failure::Invalid(format!("{}: {e}", file.display())))?;
            let s = encode_score(&q).map_err(|errs| {
                Failure::Invalid(errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))
            })?;
            let text = to_json_string(&s);
            match dest {
                Some(p) => write(&p, &text)?,
                None => out.write_all(text.as_bytes()).map_err(io)?,
            }
        }
        Command::Serve { file, port, host, tick_ms, seed, policy, max_ticks, dump_script } => {
            let (s, _) = load_compiled(&file)?;
            let cfg = SessionConfig { tick_ms, seed, choice_policy: policy, max_ticks };
            let session = Session::new(&s, &cfg).map_err(|e| Failure::Engine(e.to_string()))?;
            let rt = tokio::runtime::Runtime::new().map_err(io)?;
            let session = rt.block_on(async {
                let served = crate::ws::serve(SocketAddr::new(host, port), session, tick_ms).await.map_err(io)?;
                eprintln!("serving {} on ws://{}/ws; send {{\"type\":\"start\"}} to begin", file.display(), served.addr);
                served.session.await.map_err(|e| Failure::Engine(e.to_string()))
            })?;
            if let Some(p) = dump_script {
                write(&p, &(serde_json::to_string_pretty(session.script()).expect("serializes") + "\n"))?;
            }
            if session.ended() == Some("error") {
                return Err(Failure::Engine("the session stopped on an engine error".into()));
            }
        }
    }
    Ok(())
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ISCORE_LOG", "warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message());
            ExitCode::from(f.code())
        }
    }
}
