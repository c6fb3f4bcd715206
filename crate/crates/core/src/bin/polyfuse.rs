use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use futures::StreamExt;

use polyfuse::app::{App, AppError, CiteRef, QueryEvent, QueryInput};
use polyfuse::client::{ClientError, RemoteClient, RemoteEvents};
use polyfuse::config::AppConfig;
use polyfuse::document::{DocOp, OpKind};
use polyfuse::domain::{encode_fusion_document, DocumentId, FusionDocument, ModelId, SessionId, TurnId};
use polyfuse::store::{FeedbackInput, FeedbackKind};

#[derive(Parser)]
#[command(name = "polyfuse", about = "Query several language models at once and fuse their answers")]
struct Cli {
    /// Application config file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Event log directory; overrides the config's store_dir.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Talk to a running server instead of a local store.
    #[arg(long, global = true)]
    remote: Option<String>,
    /// Machine-readable output, byte-identical to the HTTP response bodies.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        listen: Option<String>,
    },
    /// Create a session and print its id.
    Session,
    /// Ask a question; auto-runs the planned models.
    Query {
        prompt: String,
        /// Session to continue; a new one is created when omitted.
        #[arg(long)]
        session: Option<String>,
        /// Model to put at the front of the plan (repeatable).
        #[arg(long = "pin")]
        pins: Vec<String>,
        /// Prior result to use as context: MODEL or TURN:MODEL (repeatable).
        #[arg(long = "cite")]
        cite: Vec<String>,
    },
    /// Run a planned model that was not auto-run.
    Run { turn: String, model: String },
    /// Generate a fresh answer from a model for a turn.
    Regenerate { turn: String, model: String },
    /// Fuse the results of a turn.
    Fuse {
        turn: String,
        /// Model to include (repeatable); all complete results when omitted.
        #[arg(long = "model")]
        models: Vec<String>,
    },
    /// Apply an operation to a fused document.
    Doc {
        document: String,
        op: OpArg,
        unit: String,
        /// Direction for switch (next|prev) or text for edit.
        payload: Option<String>,
    },
    /// Print the visible text of a fused document.
    Export { document: String },
    /// Rate or comment on a model's answer.
    Feedback {
        turn: String,
        model: String,
        kind: KindArg,
        text: Option<String>,
    },
    /// Print a session's turns.
    History { session: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum OpArg {
    Switch,
    Hide,
    Show,
    Edit,
    ClearEdit,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Like,
    Dislike,
    Comment,
}

/// Error with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<AppError> for Failure {
    fn from(e: AppError) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

enum Backend {
    Local(Arc<App>),
    Remote(RemoteClient),
}

fn model(s: &str) -> Result<ModelId, Failure> {
    ModelId::new(s).map_err(|e| Failure::usage(e.to_string()))
}

fn cite_ref(s: &str) -> Result<CiteRef, Failure> {
    Ok(match s.split_once(':') {
        Some((turn, m)) => CiteRef { turn: Some(TurnId::from(turn)), model: model(m)? },
        None => CiteRef { turn: None, model: model(s)? },
    })
}

/// `println!` that tolerates a closed stdout, as when piped into `head`.
macro_rules! out {
    ($($arg:tt)*) => {{
        let mut line = format!($($arg)*);
        line.push('\n');
        write_stdout(line.as_bytes());
    }};
}

fn write_stdout(bytes: &[u8]) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(bytes);
    let _ = out.flush();
}

fn print_document(doc: &FusionDocument, json: bool) {
    if json {
        write_stdout(&encode_fusion_document(doc));
        return;
    }
    out!("recommendation: {:?}", doc.recommendation);
    out!("{}", doc.reason);
    for block in &doc.blocks {
        out!("\n## {}", block.name);
        for unit in &block.units {
            let hidden = if unit.is_visible() { "" } else { " [hidden]" };
            let marker = if unit.is_consensus() { "" } else { " *" };
            for (i, v) in unit.variants.iter().enumerate() {
                let sources: Vec<&str> = v.sources.iter().map(ModelId::as_str).collect();
                let active = if i == unit.active_variant { ">" } else { " " };
                out!("{active} {}{marker}{hidden} ({}) {}", unit.id, sources.join(", "), v.content);
            }
            if let Some(edit) = &unit.edited {
                out!("  {} edited: {edit}", unit.id);
            }
        }
    }
}

async fn print_events<S>(mut events: S, json: bool) -> Result<(), Failure>
where
    S: futures::Stream<Item = Result<QueryEvent, Failure>> + Unpin,
{
    while let Some(ev) = events.next().await {
        let ev = ev?;
        if json {
            out!("{}", serde_json::to_string(&ev).expect("event json"));
            continue;
        }
        match ev {
            QueryEvent::TaskLabel { turn, label, confidence, engine } => {
                out!("turn {turn}: {label} (confidence {confidence:.2}, {engine:?})")
            }
            QueryEvent::DispatchPlan { plan, .. } => {
                for (i, m) in plan.models.iter().enumerate() {
                    let auto = if i < plan.auto_run_count { "auto" } else { "manual" };
                    out!("  {}. {m} [{auto}] {}", i + 1, plan.reasons.get(m).map_or("", String::as_str));
                }
            }
            QueryEvent::Chunk { .. } => {}
            QueryEvent::Result { result } => {
                out!("\n--- {} ({:?}, {} ms) ---", result.model, result.status, result.latency_ms);
                match &result.error {
                    Some(e) => out!("error: {e}"),
                    None => out!("{}", result.content),
                }
            }
            QueryEvent::Done { .. } => {}
        }
    }
    Ok(())
}

fn local_events(events: polyfuse::app::EventStream) -> futures::stream::BoxStream<'static, Result<QueryEvent, Failure>> {
    events.map(Ok).boxed()
}

fn remote_events(events: RemoteEvents) -> futures::stream::BoxStream<'static, Result<QueryEvent, Failure>> {
    events.map(|e| e.map_err(Failure::from)).boxed()
}

async fn execute(cli: Cli) -> Result<(), Failure> {
    let mut config = match &cli.config {
        Some(path) => AppConfig::load(path).map_err(|e| Failure::usage(e.to_string()))?,
        None => AppConfig::default(),
    };
    if let Some(dir) = &cli.store {
        config.store_dir = Some(dir.clone());
    }

    if let Command::Serve { listen } = &cli.command {
        if cli.remote.is_some() {
            return Err(Failure::usage("serve cannot be combined with --remote"));
        }
        let app = Arc::new(App::from_config(&config)?);
        let addr = listen.clone().unwrap_or_else(|| config.listen.clone());
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Failure { code: 1, message: format!("binding {addr}: {e}") })?;
        tracing::info!("listening on {addr}");
        eprintln!("listening on {addr}");
        return polyfuse::service::serve(app, listener)
            .await
            .map_err(|e| Failure { code: 1, message: e.to_string() });
    }

    let backend = match &cli.remote {
        Some(url) => Backend::Remote(RemoteClient::new(url.clone())),
        None => Backend::Local(Arc::new(App::from_config(&config)?)),
    };
    let json = cli.json;

    match cli.command {
        Command::Serve { .. } => unreachable!("handled above"),
        Command::Session => {
            let id = match &backend {
                Backend::Local(app) => app.create_session()?,
                Backend::Remote(c) => c.create_session().await?,
            };
            out!("{id}");
        }
        Command::Query { prompt, session, pins, cite } => {
            let input = QueryInput {
                prompt,
                pins: pins.iter().map(|p| model(p)).collect::<Result<_, _>>()?,
                cite: cite.iter().map(|c| cite_ref(c)).collect::<Result<_, _>>()?,
            };
            let events = match &backend {
                Backend::Local(app) => {
                    let session = match session {
                        Some(s) => SessionId(s),
                        None => app.create_session()?,
                    };
                    local_events(app.submit_query(&session, input).await?.1)
                }
                Backend::Remote(c) => {
                    let session = match session {
                        Some(s) => SessionId(s),
                        None => c.create_session().await?,
                    };
                    remote_events(c.query(&session, &input).await?.1)
                }
            };
            print_events(events, json).await?;
        }
        Command::Run { turn, model: m } => {
            let (turn, m) = (TurnId(turn), model(&m)?);
            let events = match &backend {
                Backend::Local(app) => local_events(app.manual_trigger(&turn, &m)?),
                Backend::Remote(c) => remote_events(c.run(&turn, &m).await?),
            };
            print_events(events, json).await?;
        }
        Command::Regenerate { turn, model: m } => {
            let (turn, m) = (TurnId(turn), model(&m)?);
            let events = match &backend {
                Backend::Local(app) => local_events(app.regenerate(&turn, &m)?),
                Backend::Remote(c) => remote_events(c.regenerate(&turn, &m).await?),
            };
            print_events(events, json).await?;
        }
        Command::Fuse { turn, models } => {
            let models: Vec<ModelId> = models.iter().map(|m| model(m)).collect::<Result<_, _>>()?;
            let turn = TurnId(turn);
            let (id, doc) = match &backend {
                Backend::Local(app) => {
                    let (id, outcome) = app.fuse(&turn, &models).await?;
                    (id, outcome.document)
                }
                Backend::Remote(c) => c.fuse(&turn, &models).await?,
            };
            eprintln!("document {id}");
            print_document(&doc, json);
        }
        Command::Doc { document, op, unit, payload } => {
            let op = DocOp {
                op: match op {
                    OpArg::Switch => OpKind::Switch,
                    OpArg::Hide => OpKind::Hide,
                    OpArg::Show => OpKind::Show,
                    OpArg::Edit => OpKind::Edit,
                    OpArg::ClearEdit => OpKind::ClearEdit,
                },
                unit,
                payload,
            };
            let id = DocumentId(document);
            let doc = match &backend {
                Backend::Local(app) => app.apply_op(&id, op)?,
                Backend::Remote(c) => c.apply_op(&id, &op).await?,
            };
            print_document(&doc, json);
        }
        Command::Export { document } => {
            let id = DocumentId(document);
            let text = match &backend {
                Backend::Local(app) => app.export(&id)?,
                Backend::Remote(c) => c.export(&id).await?,
            };
            if json {
                write_stdout(text.as_bytes());
            } else {
                out!("{text}");
            }
        }
        Command::Feedback { turn, model: m, kind, text } => {
            let input = FeedbackInput {
                model: model(&m)?,
                kind: match kind {
                    KindArg::Like => FeedbackKind::Like,
                    KindArg::Dislike => FeedbackKind::Dislike,
                    KindArg::Comment => FeedbackKind::Comment,
                },
                text,
            };
            let turn = TurnId(turn);
            match &backend {
                Backend::Local(app) => {
                    app.feedback(&turn, input)?;
                }
                Backend::Remote(c) => c.feedback(&turn, &input).await?,
            }
        }
        Command::History { session } => {
            let session = SessionId(session);
            let entries = match &backend {
                Backend::Local(app) => app.history(&session)?,
                Backend::Remote(c) => c.history(&session).await?,
            };
            if json {
                write_stdout(&serde_json::to_vec(&entries).expect("history json"));
            } else {
                for e in entries {
                    let done: Vec<&str> = e.turn.results.keys().map(ModelId::as_str).collect();
                    out!("{} [{}] {} -> {}", e.turn.id, e.turn.label, e.turn.prompt, done.join(", "));
                    for d in e.fusion {
                        out!("  document {} ({:?})", d.id, d.document.recommendation);
                    }
                }
            }
        }
    }
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match execute(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
