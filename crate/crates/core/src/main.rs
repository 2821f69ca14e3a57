use std::io::{self, BufRead, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use presume::dialog::{DialogError, DialogSession, Outcome, Prompt, PromptKind, Step};
use presume::engine::{Engine, EngineError, EngineOptions};
use presume::knowledge::{default_registry, emulator, load_static_kb, KnowledgeError, RelationRegistry};
use presume::parser::parse_command_str;
use presume::prover::{ProofStatus, ProverError, RelationPolicy, SearchConfig, Strategy, TemplateColor, UNBOUNDED};
use presume::service::{parse_terminal_reply, run_eval_files, AppState, EvalError};

#[derive(Parser)]
#[command(
    name = "presume",
    version,
    about = "Multi-hop commonsense reasoning for if-then-because commands"
)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Prove one command and print the chains found.
    Prove {
        /// The command, as "If <state> then <action> because <goal>".
        #[arg(long)]
        command: String,
        /// Logic template: blue, orange or green.
        #[arg(long, value_parser = parse_color)]
        template: TemplateColor,
        /// Print the proofs as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Run an interactive session on the terminal.
    Dialog {
        /// The command, as "If <state> then <action> because <goal>".
        #[arg(long)]
        command: String,
        /// Logic template: blue, orange or green.
        #[arg(long, value_parser = parse_color)]
        template: TemplateColor,
        /// Write the exchanges as JSON lines.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Write the final outcome as JSON.
        #[arg(long)]
        outcome: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Run scripted sessions over a dataset and report proved/tried.
    Eval {
        /// Tab-separated `template<TAB>command` lines.
        #[arg(long)]
        dataset: PathBuf,
        /// One JSON line of scripted replies per dataset line.
        #[arg(long)]
        scripts: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Serve the session API over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Serve a static tuple file over the generation protocol.
    Emulate {
        /// Static tuple file to serve.
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 8090)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Relation registry (TOML); the built-in one when omitted.
        #[arg(long)]
        relations: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Uni,
    Bi,
}

#[derive(Args)]
struct EngineArgs {
    /// Static tuple file or generation server URL.
    #[arg(long)]
    kb: Option<String>,
    /// Token embeddings, one `token v1 ... vd` line each.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Template definitions (TOML); the built-in ones when omitted.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Relation registry (TOML); the built-in one when omitted.
    #[arg(long)]
    relations: Option<PathBuf>,
    /// Learned-rule journal; rules stay in memory when omitted.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Search strategy.
    #[arg(long, value_enum, default_value = "bi")]
    strategy: StrategyArg,
    /// Hop budget.
    #[arg(long, default_value_t = 3)]
    hops: usize,
    /// Branches kept per search level (`inf` for no limit).
    #[arg(long, default_value = "5", value_parser = parse_width)]
    beam: usize,
    /// Objects requested per knowledge query (`inf` for no limit).
    #[arg(long, default_value = "10", value_parser = parse_width)]
    kb_beam: usize,
    /// Closeness threshold.
    #[arg(long, default_value_t = 0.8)]
    tau: f64,
    /// Closeness a learned rule needs on both clauses to be used.
    #[arg(long, default_value_t = 0.95)]
    consult_tau: f64,
    /// Let both search sides use every non-negation relation.
    #[arg(long)]
    any_relation: bool,
}

impl EngineArgs {
    fn options(&self) -> EngineOptions {
        let defaults = EngineOptions::default();
        EngineOptions {
            kb: self.kb.clone().unwrap_or(defaults.kb),
            embeddings: self.embeddings.clone().unwrap_or(defaults.embeddings),
            templates: self.templates.clone(),
            relations: self.relations.clone(),
            rules: self.rules.clone(),
            search: SearchConfig {
                strategy: match self.strategy {
                    StrategyArg::Uni => Strategy::Unidirectional,
                    StrategyArg::Bi => Strategy::Bidirectional,
                },
                max_hops: self.hops,
                search_beam: self.beam,
                kb_beam: self.kb_beam,
                tau: self.tau,
                consult_tau: self.consult_tau,
                relation_policy: if self.any_relation {
                    RelationPolicy::AnyRelation
                } else {
                    RelationPolicy::Directional
                },
            },
        }
    }

    fn open(&self) -> Result<Engine, Failure> {
        Engine::open(&self.options()).map_err(Failure::from)
    }
}

fn parse_color(s: &str) -> Result<TemplateColor, String> {
    s.parse().map_err(|e: ProverError| e.to_string())
}

fn parse_width(s: &str) -> Result<usize, String> {
    match s {
        "inf" | "unbounded" => Ok(UNBOUNDED),
        _ => s.parse().map_err(|e| format!("`{s}`: {e}")),
    }
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }

    fn runtime(message: impl ToString) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        if e.is_backend_unavailable() {
            return Self {
                code: 3,
                message: e.to_string(),
            };
        }
        match e {
            EngineError::Kb(presume::kbase::KbError::StorageFailure(_)) => Self::runtime(e),
            _ => Self::config(e),
        }
    }
}

impl From<DialogError> for Failure {
    fn from(e: DialogError) -> Self {
        match e {
            DialogError::Prover(p) => EngineError::Prover(p).into(),
            other => Self::runtime(other),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Session {
                source: DialogError::Prover(ProverError::Knowledge(KnowledgeError::BackendUnavailable { .. })),
                ..
            } => Self {
                code: 3,
                message: e.to_string(),
            },
            EvalError::Session { .. } => Self::runtime(e),
            _ => Self::config(e),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Prove {
            command,
            template,
            json,
            engine,
        } => prove(&engine, &command, template, json),
        Cmd::Dialog {
            command,
            template,
            transcript,
            outcome,
            engine,
        } => dialog(&engine, &command, template, transcript, outcome),
        Cmd::Eval {
            dataset,
            scripts,
            json,
            engine,
        } => {
            let engine = engine.open()?;
            let report = run_eval_files(&engine, &dataset, &scripts)?;
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{report}");
            }
            Ok(())
        }
        Cmd::Serve { port, host, engine } => {
            let engine = Arc::new(engine.open()?);
            runtime()?
                .block_on(presume::service::serve(
                    AppState::new(engine),
                    SocketAddr::new(host, port),
                ))
                .map_err(Failure::runtime)
        }
        Cmd::Emulate {
            store,
            port,
            host,
            relations,
        } => {
            let registry = match relations {
                Some(p) => RelationRegistry::load(p).map_err(Failure::config)?,
                None => default_registry(),
            };
            let store = load_static_kb(&store, registry).map_err(Failure::config)?;
            let app = emulator::router(Arc::new(store));
            runtime()?
                .block_on(async move {
                    let listener = tokio::net::TcpListener::bind(SocketAddr::new(host, port)).await?;
                    eprintln!("generation emulator on http://{}", listener.local_addr()?);
                    axum::serve(listener, app)
                        .with_graceful_shutdown(async {
                            let _ = tokio::signal::ctrl_c().await;
                        })
                        .await
                })
                .map_err(Failure::runtime)
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(Failure::runtime)
}

fn prove(args: &EngineArgs, text: &str, color: TemplateColor, json: bool) -> Result<(), Failure> {
    let command = parse_command_str(text).map_err(Failure::config)?;
    let engine = args.open()?;
    let proofs = engine.prove(&command, color)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&proofs).map_err(Failure::runtime)?);
        return Ok(());
    }
    let template = engine.templates().get(color).map_err(Failure::config)?;
    println!("template: {color}");
    if let Some(neg) = &proofs.negation {
        println!("negated goal: {neg}");
    }
    for (spec, chains) in template.implications.iter().zip(&proofs.chains) {
        println!("{spec}: {} chain(s)", chains.len());
        for chain in chains.iter().take(presume::prover::TOP_K) {
            println!("  [{:.4}] {}", chain.score, chain.text());
        }
    }
    let status = match proofs.status() {
        ProofStatus::Proved => "proved".to_owned(),
        ProofStatus::HalfProofOnly(i) => format!("half proof only (implication {} proved)", i + 1),
        ProofStatus::Unproved => "unproved".to_owned(),
    };
    println!("status: {status}");
    for (i, proof) in proofs.proofs.iter().enumerate() {
        println!(
            "{}. [{:.4}] {} && {}",
            i + 1,
            proof.combined_score,
            proof.first.text(),
            proof.second.text()
        );
    }
    Ok(())
}

fn show(prompt: &Prompt) {
    println!("{}", prompt.text);
    if let PromptKind::MultipleChoice { options } = &prompt.kind {
        for (i, option) in options.iter().enumerate() {
            println!("  {}. {option}", i + 1);
        }
        println!("Please provide number and explanation");
    }
}

fn dialog(
    args: &EngineArgs,
    text: &str,
    color: TemplateColor,
    transcript: Option<PathBuf>,
    outcome_path: Option<PathBuf>,
) -> Result<(), Failure> {
    let command = parse_command_str(text).map_err(Failure::config)?;
    let engine = args.open()?;
    let (mut session, mut prompt) = DialogSession::start(&engine, command, color)?;
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let outcome: Outcome = loop {
        show(&prompt);
        print!("> ");
        io::stdout().flush().map_err(Failure::runtime)?;
        let Some(line) = lines.next() else {
            return Err(Failure::runtime("input ended before the session closed"));
        };
        let line = line.map_err(Failure::runtime)?;
        let reply = match parse_terminal_reply(&prompt.kind, &line) {
            Ok(r) => r,
            Err(e) => {
                println!("{e}");
                continue;
            }
        };
        match session.step(&engine, reply) {
            Ok(Step::Prompt(next)) => prompt = next,
            Ok(Step::Outcome(outcome)) => break outcome,
            Err(e @ (DialogError::ReplyKindMismatch { .. } | DialogError::ChoiceOutOfRange { .. })) => println!("{e}"),
            Err(e) => return Err(e.into()),
        }
    };
    match &outcome {
        Outcome::Proved { proof, validated_by } => {
            println!(
                "proved (option {validated_by}): {} && {}",
                proof.first.text(),
                proof.second.text()
            )
        }
        Outcome::ProvedAfterContribution { proof, rules_added } => println!(
            "proved with {} new rule(s): {} && {}",
            rules_added.len(),
            proof.first.text(),
            proof.second.text()
        ),
        Outcome::Failed { reason } => println!("not proved: {reason:?}"),
    }
    if let Some(path) = transcript {
        std::fs::write(&path, session.transcript_jsonl()).map_err(Failure::runtime)?;
    }
    if let Some(path) = outcome_path {
        let json = serde_json::to_string(&outcome).map_err(Failure::runtime)?;
        std::fs::write(&path, json + "\n").map_err(Failure::runtime)?;
    }
    Ok(())
}
