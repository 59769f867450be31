//! `btw`: serve a page as panels, replay scripts, inspect layouts.

use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use btw_core::config::ServerConfig;
use btw_core::layout::{parse_layout, serialize_layout, LayoutDocument, LayoutStore};
use btw_core::replay::{parse_script, run_script};
use btw_server::{stdout_output, Server, ServerError};

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_ASSERTION: u8 = 3;
const LATENCY_BUDGET_MS: f64 = 5.0;

/// Environment variables read as the lowest-precedence settings, with the
/// config key each one sets.
const ENV_KEYS: &[(&str, &str, bool)] = &[
    ("BTW_URL", "url", false),
    ("BTW_BRIDGE", "bridge", false),
    ("BTW_DEVTOOLS_ENDPOINT", "devtools_endpoint", false),
    ("BTW_PORT", "port", true),
    ("BTW_LAYOUT_DIR", "layout_dir", false),
    ("BTW_LAYOUT", "layout", false),
    ("BTW_TOKEN", "token", false),
    ("BTW_MAX_FPS", "max_fps", true),
];

#[derive(Parser)]
#[command(name = "btw", version, about = "Break a webpage into independently placed panels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Open a page and serve its panels to workspace clients.
    Serve(ServeArgs),
    /// Run a .btwscript against the mock browser and print the report.
    Replay(ReplayArgs),
    /// Inspect layout documents.
    #[command(subcommand)]
    Layout(LayoutCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum BridgeArg {
    Mock,
    Devtools,
}

#[derive(Args)]
struct ServeArgs {
    /// Page to open.
    #[arg(long)]
    url: Option<String>,
    #[arg(long, value_enum)]
    bridge: Option<BridgeArg>,
    /// Browser debugging endpoint, http://host:port or a page's ws:// URL.
    #[arg(long)]
    devtools_endpoint: Option<String>,
    /// Port to listen on; 0 picks a free one. Defaults to 7420.
    #[arg(long)]
    port: Option<u16>,
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    /// Directory of .btwlayout files added to the built-in presets.
    #[arg(long)]
    layout_dir: Option<PathBuf>,
    /// Layout name; by default the layout is matched from the URL.
    #[arg(long)]
    layout: Option<String>,
    /// Token clients must send in their hello.
    #[arg(long)]
    token: Option<String>,
    #[arg(long)]
    max_fps: Option<u32>,
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    script: PathBuf,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    layout_dir: Option<PathBuf>,
    #[arg(long)]
    layout: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LayoutCommand {
    /// Check layout files, or every known layout when none are given.
    Validate {
        files: Vec<PathBuf>,
        #[arg(long)]
        layout_dir: Option<PathBuf>,
    },
    /// Print a layout, by name or file, in canonical form.
    Show {
        layout: String,
        #[arg(long)]
        layout_dir: Option<PathBuf>,
    },
    /// List known layout names.
    List {
        #[arg(long)]
        layout_dir: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

impl From<ServerError> for Failure {
    fn from(e: ServerError) -> Self {
        match e {
            ServerError::Config(m) => Failure::usage(m),
            e => Failure::runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .init();
    let serving = matches!(cli.command, Command::Serve(_));
    let r = match cli.command {
        Command::Serve(a) => serve(a),
        Command::Replay(a) => replay(a),
        Command::Layout(c) => layout(c),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if serving {
                println!("ERROR {}", f.message);
            }
            eprintln!("btw: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn merge(base: &mut Map<String, Value>, top: Map<String, Value>) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Object(b)), Value::Object(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn env_layer() -> Result<Map<String, Value>, Failure> {
    let mut m = Map::new();
    for &(var, key, numeric) in ENV_KEYS {
        let Ok(v) = std::env::var(var) else { continue };
        let v = if numeric {
            Value::from(v.parse::<u64>().map_err(|_| Failure::usage(format!("{var}: {v:?} is not a number")))?)
        } else {
            Value::from(v)
        };
        m.insert(key.into(), v);
    }
    Ok(m)
}

/// Defaults, then `BTW_*` variables, then the config file, then flags.
fn layered_config(config: Option<&Path>, flags: Map<String, Value>) -> Result<ServerConfig, Failure> {
    let mut merged = env_layer()?;
    let path = config.map(Path::to_path_buf).or_else(|| std::env::var_os("BTW_CONFIG").map(PathBuf::from));
    if let Some(path) = path {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
        match serde_json::from_str(&text) {
            Ok(Value::Object(file)) => merge(&mut merged, file),
            Ok(_) => return Err(Failure::runtime(format!("{}: expected a JSON object", path.display()))),
            Err(e) => return Err(Failure::runtime(format!("{}: {e}", path.display()))),
        }
    }
    merge(&mut merged, flags);
    ServerConfig::from_json(&Value::Object(merged).to_string()).map_err(|e| Failure::usage(format!("config: {e}")))
}

fn flag(m: &mut Map<String, Value>, key: &str, v: Option<impl Into<Value>>) {
    if let Some(v) = v {
        m.insert(key.into(), v.into());
    }
}

fn path_value(p: Option<PathBuf>) -> Option<String> {
    p.map(|p| p.to_string_lossy().into_owned())
}

fn serve(a: ServeArgs) -> Result<u8, Failure> {
    let mut flags = Map::new();
    flag(&mut flags, "url", a.url);
    flag(
        &mut flags,
        "bridge",
        a.bridge.map(|b| match b {
            BridgeArg::Mock => "mock",
            BridgeArg::Devtools => "devtools",
        }),
    );
    flag(&mut flags, "devtools_endpoint", a.devtools_endpoint);
    flag(&mut flags, "port", a.port);
    flag(&mut flags, "layout_dir", path_value(a.layout_dir));
    flag(&mut flags, "layout", a.layout);
    flag(&mut flags, "token", a.token);
    flag(&mut flags, "max_fps", a.max_fps);
    let cfg = layered_config(a.config.as_deref(), flags)?;

    let server = Server::open(&cfg, stdout_output())?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::runtime(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.bind, cfg.port()))
            .await
            .map_err(|e| Failure::runtime(format!("cannot listen on {}:{}: {e}", a.bind, cfg.port())))?;
        server.run(listener, shutdown_signal()).await.map_err(Failure::from)
    })?;
    Ok(0)
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

fn replay(a: ReplayArgs) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(&a.script)
        .map_err(|e| Failure::runtime(format!("{}: {e}", a.script.display())))?;
    let script = parse_script(&text).map_err(|e| Failure::runtime(format!("{}: {e}", a.script.display())))?;
    let mut flags = Map::new();
    flag(&mut flags, "layout_dir", path_value(a.layout_dir));
    flag(&mut flags, "layout", a.layout);
    let cfg = layered_config(a.config.as_deref(), flags)?;
    let run = run_script(&script, &cfg).map_err(|e| Failure::runtime(e.to_string()))?;
    let json = run.report.to_json();
    print!("{json}");
    if let Some(out) = &a.out {
        std::fs::write(out, &json).map_err(|e| Failure::runtime(format!("{}: {e}", out.display())))?;
    }
    let r = &run.report;
    eprintln!("replay: {} passed, {} failed, sync {}", r.passed, r.failed, if r.sync { "ok" } else { "broken" });
    let wall = btw_core::replay::LatencyStats::from_samples(&run.wall_latency_ms);
    if wall.count > 0 && wall.median >= LATENCY_BUDGET_MS {
        eprintln!(
            "warning: median input latency {:.3} ms exceeds the {LATENCY_BUDGET_MS} ms budget",
            wall.median
        );
    }
    Ok(if r.success() { 0 } else { EXIT_ASSERTION })
}

fn store(dir: Option<&Path>) -> Result<LayoutStore, Failure> {
    let mut s = LayoutStore::with_builtins();
    if let Some(dir) = dir {
        s.load_dir(dir).map_err(|e| Failure::runtime(e.to_string()))?;
    }
    Ok(s)
}

fn read_layout(path: &Path) -> Result<LayoutDocument, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    parse_layout(&text).map_err(|e| e.to_string())
}

fn layout(c: LayoutCommand) -> Result<u8, Failure> {
    match c {
        LayoutCommand::List { layout_dir } => {
            for name in store(layout_dir.as_deref())?.names() {
                println!("{name}");
            }
            Ok(0)
        }
        LayoutCommand::Show { layout, layout_dir } => {
            let path = Path::new(&layout);
            let doc = if path.is_file() {
                read_layout(path).map_err(|e| Failure::runtime(format!("{layout}: {e}")))?
            } else {
                store(layout_dir.as_deref())?
                    .get(&layout)
                    .cloned()
                    .ok_or_else(|| Failure::runtime(format!("no layout named {layout:?}")))?
            };
            print!("{}", serialize_layout(&doc));
            Ok(0)
        }
        LayoutCommand::Validate { files, layout_dir } => {
            if files.is_empty() {
                let s = store(layout_dir.as_deref())?;
                for doc in s.iter() {
                    println!("ok {} ({} panels)", doc.name, doc.panels.len());
                }
                return Ok(0);
            }
            let mut bad = 0;
            for f in &files {
                match read_layout(f) {
                    Ok(doc) => println!("ok {} ({} panels)", doc.name, doc.panels.len()),
                    Err(e) => {
                        bad += 1;
                        println!("invalid {}: {e}", f.display());
                    }
                }
            }
            Ok(if bad == 0 { 0 } else { EXIT_RUNTIME })
        }
    }
}
