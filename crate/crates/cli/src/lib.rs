//! The `lodweaver` command line: pipeline stages, the API server and a
//! fixture SPARQL endpoint for offline runs.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation errors, 3 runtime
//! failure.

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use lodweaver::api::{bind_addr, router, ServerState};
use lodweaver::config::{parse_portal_config, Severity};
use lodweaver::fixture::{fixture_router, CannedFetcher, FixtureData};
use lodweaver::index::{load_indexes, save_indexes};
use lodweaver::ingest::{load_snapshot, save_snapshot, CachingFetcher, HttpFetcher};
use lodweaver::reconcile::{ReconcileOptions, DEFAULT_EXPANSION_DEPTH};
use lodweaver::{
    build_indexes, ingest, load_portal_config, reconcile, validate_config, FetchOptions, PortalConfig,
    ReconciledStore, ResultsFetcher,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const CORS_ENV: &str = "LODWEAVER_CORS_ORIGINS";
pub const DEFAULT_FIXTURE_ADDR: &str = "127.0.0.1:7878";

#[derive(Debug, Parser)]
#[command(name = "lodweaver", version, about = "Aggregate, reconcile and serve linked open data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Sources {
    /// Cache SPARQL responses in DIR and answer repeated queries from it
    #[arg(long, value_name = "DIR")]
    cache: Option<PathBuf>,
    /// Answer SPARQL queries from a fixture data directory instead of the network
    #[arg(long, value_name = "DIR")]
    offline_fixtures: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a configuration directory (exit 2 when it has errors)
    Validate {
        /// Directory holding datasets.json, categories.json, indexes.json, highlights.json and insights.json
        #[arg(long, value_name = "DIR")]
        config: PathBuf,
    },
    /// Run every extraction query and write an ingestion snapshot
    Ingest {
        /// Configuration directory
        #[arg(long, value_name = "DIR")]
        config: PathBuf,
        /// Snapshot file to write
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[command(flatten)]
        sources: Sources,
    },
    /// Reconcile a snapshot into merged entities, named graphs and a linkset
    Reconcile {
        /// Configuration directory
        #[arg(long, value_name = "DIR")]
        config: PathBuf,
        /// Snapshot written by `ingest`
        #[arg(long, value_name = "FILE")]
        snapshot: PathBuf,
        /// Store directory to write
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Equivalence lookups beyond the ingested IRIs (0 to 3)
        #[arg(long, value_name = "N", default_value_t = DEFAULT_EXPANSION_DEPTH)]
        expansion_depth: u32,
        #[command(flatten)]
        sources: Sources,
    },
    /// Build the autocomplete indexes of a store
    Index {
        /// Store directory written by `reconcile`
        #[arg(long, value_name = "DIR")]
        store: PathBuf,
        /// Index directory to write
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Serve the JSON API; SIGHUP reloads config, store and indexes
    Serve {
        /// Configuration directory
        #[arg(long, value_name = "DIR")]
        config: PathBuf,
        /// Store directory written by `reconcile`
        #[arg(long, value_name = "DIR")]
        store: PathBuf,
        /// Index directory written by `index`
        #[arg(long, value_name = "DIR")]
        index: PathBuf,
        /// Bind address (default: LODWEAVER_ADDR, then 127.0.0.1:8080)
        #[arg(long, value_name = "HOST:PORT")]
        addr: Option<String>,
        /// Browser origin allowed by CORS; repeatable, `*` allows any
        #[arg(long = "cors-origin", value_name = "ORIGIN", env = CORS_ENV, value_delimiter = ',')]
        cors_origins: Vec<String>,
        #[command(flatten)]
        sources: Sources,
    },
    /// Write the linkset of a store as N-Triples
    ExportLinkset {
        /// Store directory written by `reconcile`
        #[arg(long, value_name = "DIR")]
        store: PathBuf,
        /// N-Triples file to write
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Serve canned SPARQL results from a fixture data directory
    FixtureEndpoint {
        /// Directory with one subdirectory of canned results per source
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        /// Bind address
        #[arg(long, value_name = "HOST:PORT", default_value = DEFAULT_FIXTURE_ADDR)]
        addr: String,
    },
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: Option<String>,
}

impl Failure {
    fn usage(m: impl ToString) -> Self {
        Failure { code: EXIT_USAGE, message: Some(m.to_string()) }
    }

    fn invalid(m: impl ToString) -> Self {
        Failure { code: EXIT_INVALID, message: Some(m.to_string()) }
    }

    fn runtime(m: impl ToString) -> Self {
        Failure { code: EXIT_RUNTIME, message: Some(m.to_string()) }
    }
}

type CmdResult = Result<(), Failure>;

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let result = match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Ingest { config, out, sources } => run_ingest(&config, &out, &sources),
        Command::Reconcile { config, snapshot, out, expansion_depth, sources } => {
            run_reconcile(&config, &snapshot, &out, expansion_depth, &sources)
        }
        Command::Index { store, out } => run_index(&store, &out),
        Command::Serve { config, store, index, addr, cors_origins, sources } => {
            serve(&config, &store, &index, addr.as_deref(), &cors_origins, &sources)
        }
        Command::ExportLinkset { store, out } => export_linkset(&store, &out),
        Command::FixtureEndpoint { data, addr } => fixture_endpoint(&data, &addr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            if let Some(m) = f.message {
                eprintln!("lodweaver: {m}");
            }
            f.code
        }
    }
}

fn validate(dir: &Path) -> CmdResult {
    let cfg = parse_portal_config(dir).map_err(Failure::invalid)?;
    let report = validate_config(&cfg);
    for f in &report.findings {
        match f.severity {
            Severity::Error => eprintln!("error: {}: {}", f.file, f.message),
            Severity::Warning => println!("warning: {}: {}", f.file, f.message),
        }
    }
    if report.has_errors() {
        return Err(Failure { code: EXIT_INVALID, message: None });
    }
    println!("{}: ok", dir.display());
    Ok(())
}

fn load_config(dir: &Path) -> Result<PortalConfig, Failure> {
    load_portal_config(dir).map_err(Failure::invalid)
}

fn fetch_options() -> FetchOptions {
    FetchOptions::default().with_env_overrides()
}

fn fetcher(cfg: &PortalConfig, sources: &Sources) -> Result<Arc<dyn ResultsFetcher>, Failure> {
    let base: Arc<dyn ResultsFetcher> = match &sources.offline_fixtures {
        Some(dir) => Arc::new(CannedFetcher::load(dir).map_err(Failure::runtime)?),
        None => {
            let mut http = HttpFetcher::new();
            for d in &cfg.datasets {
                if let Some(token) = d.metadata.get("bearer_token").and_then(|t| t.as_str()) {
                    http = http.with_bearer_token(d.endpoint.clone(), token);
                }
            }
            Arc::new(http)
        }
    };
    Ok(match &sources.cache {
        Some(dir) => Arc::new(
            CachingFetcher::new(base, dir).map_err(|e| Failure::runtime(format!("cache {}: {e}", dir.display())))?,
        ),
        None => base,
    })
}

fn run_ingest(config: &Path, out: &Path, sources: &Sources) -> CmdResult {
    let cfg = load_config(config)?;
    let fetcher = fetcher(&cfg, sources)?;
    let snapshot = ingest(&cfg, &fetch_options(), fetcher.as_ref()).map_err(Failure::runtime)?;
    save_snapshot(&snapshot, out).map_err(Failure::runtime)?;
    let failed = snapshot.failed_pairs().count();
    println!(
        "{} records from {} dataset/category pairs ({failed} failed) written to {}",
        snapshot.records.len(),
        snapshot.source_stats.len(),
        out.display()
    );
    Ok(())
}

fn run_reconcile(config: &Path, snapshot: &Path, out: &Path, depth: u32, sources: &Sources) -> CmdResult {
    let cfg = load_config(config)?;
    let snapshot = load_snapshot(snapshot).map_err(Failure::runtime)?;
    let fetcher = fetcher(&cfg, sources)?;
    let opts = ReconcileOptions { expansion_depth: depth };
    let store = reconcile(&snapshot, &cfg, &fetch_options(), fetcher.as_ref(), opts).map_err(Failure::runtime)?;
    store.save(out).map_err(Failure::runtime)?;
    let s = &store.stats;
    println!(
        "{} IRIs, {} equivalence statements, {} entities ({} merged), {} linkset statements written to {}",
        s.extracted_iris,
        s.equivalence_statements,
        s.clusters,
        s.merged_clusters,
        s.linkset_size,
        out.display()
    );
    for c in &s.conflicts {
        log::warn!("{} merges {} members from {}/{}", c.minted, c.members.len(), c.dataset_id, c.category_id);
    }
    Ok(())
}

fn run_index(store: &Path, out: &Path) -> CmdResult {
    let store = ReconciledStore::load(store).map_err(Failure::runtime)?;
    let indexes = build_indexes(store.entities.values(), store.category_ids(), 1);
    save_indexes(&indexes, out).map_err(Failure::runtime)?;
    for (category, idx) in &indexes {
        println!("{category}: {} entries, {} keys", idx.len(), idx.key_count());
    }
    Ok(())
}

fn export_linkset(store: &Path, out: &Path) -> CmdResult {
    let store = ReconciledStore::load(store).map_err(Failure::runtime)?;
    std::fs::write(out, store.linkset.to_ntriples()).map_err(|e| Failure::runtime(format!("{}: {e}", out.display())))?;
    println!("{} statements written to {}", store.linkset.len(), out.display());
    Ok(())
}

fn install_from_disk(state: &ServerState, config: &Path, store: &Path, index: &Path) -> Result<u64, Failure> {
    let cfg = load_config(config)?;
    let store = ReconciledStore::load(store).map_err(Failure::runtime)?;
    let (_, indexes) = load_indexes(index).map_err(Failure::runtime)?;
    state.install_prebuilt(cfg, store, indexes).map_err(Failure::runtime)
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(Failure::runtime)
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

async fn listen(addr: SocketAddr) -> Result<tokio::net::TcpListener, Failure> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Failure::runtime(format!("cannot bind {addr}: {e}")))?;
    let local = listener.local_addr().map_err(Failure::runtime)?;
    println!("listening on http://{local}");
    Ok(listener)
}

fn serve(
    config: &Path,
    store: &Path,
    index: &Path,
    addr: Option<&str>,
    cors_origins: &[String],
    sources: &Sources,
) -> CmdResult {
    let addr = bind_addr(addr).map_err(Failure::usage)?;
    let cfg = load_config(config)?;
    // built outside the runtime: the blocking HTTP client must not be created
    // or dropped on an async worker
    let fetcher = fetcher(&cfg, sources)?;
    let state = ServerState::new(fetcher.clone(), fetch_options());
    let generation = install_from_disk(&state, config, store, index)?;
    log::info!("serving generation {generation}");

    let rt = runtime()?;
    let result = rt.block_on(async {
        let listener = listen(addr).await?;
        #[cfg(unix)]
        {
            let (state, config, store, index) =
                (state.clone(), config.to_path_buf(), store.to_path_buf(), index.to_path_buf());
            let mut hangup = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::hangup())
                .map_err(Failure::runtime)?;
            tokio::spawn(async move {
                while hangup.recv().await.is_some() {
                    let (state, config, store, index) = (state.clone(), config.clone(), store.clone(), index.clone());
                    let reloaded =
                        tokio::task::spawn_blocking(move || install_from_disk(&state, &config, &store, &index)).await;
                    match reloaded {
                        Ok(Ok(g)) => log::info!("reloaded; serving generation {g}"),
                        Ok(Err(f)) => log::error!("reload failed, keeping the current generation: {:?}", f.message),
                        Err(e) => log::error!("reload failed: {e}"),
                    }
                }
            });
        }
        axum::serve(listener, router(state.clone(), cors_origins))
            .with_graceful_shutdown(shutdown_signal())
            .await
            .map_err(Failure::runtime)
    });
    drop(rt);
    drop(state);
    drop(fetcher);
    result
}

fn fixture_endpoint(data: &Path, addr: &str) -> CmdResult {
    let addr: SocketAddr = addr
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("invalid address {addr:?}")))?;
    let data = FixtureData::load(data).map_err(|e| Failure::runtime(format!("{}: {e}", data.display())))?;
    let rt = runtime()?;
    rt.block_on(async {
        let listener = listen(addr).await?;
        axum::serve(listener, fixture_router(Arc::new(data)))
            .with_graceful_shutdown(shutdown_signal())
            .await
            .map_err(Failure::runtime)
    })
}
