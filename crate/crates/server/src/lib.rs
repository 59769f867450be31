//! WebSocket front end for a [`Session`].
//!
//! One session per server. A capture thread pulls frames from the bridge and
//! fans them out through the session's per-client outboxes; each connection
//! task flushes its outbox whenever the session wakes it and feeds incoming
//! messages into the session.
//!
//! Machine-readable progress goes to the [`Output`] sink as single lines:
//! `LISTENING <port>`, `SESSION ...` and `ERROR ...`.

use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::Notify;
use tokio::task::JoinSet;
use tokio_tungstenite::tungstenite::{self, Message as WsMessage};
use tokio_tungstenite::WebSocketStream;

use btw_core::bridge::{BridgeError, BrowserBridge, DevtoolsBridge, MockBridge};
use btw_core::config::{BridgeKind, ServerConfig};
use btw_core::layout::{LayoutStore, LoadError};
use btw_core::protocol::{decode_message, encode_message, ErrorCode, ErrorMsg, Frame, Message};
use btw_core::session::{ClientId, Session, SessionError};

const BRIDGE_RETRY: Duration = Duration::from_millis(500);

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Layouts(#[from] LoadError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Receives one machine-readable line per call.
pub type Output = Arc<dyn Fn(&str) + Send + Sync>;

/// Writes lines to stdout, flushing each.
pub fn stdout_output() -> Output {
    Arc::new(|line| {
        use std::io::Write;
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
    })
}

pub fn default_url(kind: BridgeKind) -> &'static str {
    match kind {
        BridgeKind::Mock => "mock://grid",
        BridgeKind::Devtools => "about:blank",
    }
}

pub fn open_bridge(cfg: &ServerConfig) -> Result<Arc<dyn BrowserBridge>, ServerError> {
    match cfg.bridge {
        BridgeKind::Mock => Ok(Arc::new(
            MockBridge::with_clock(Arc::new(btw_core::clock::SystemClock::new()))
                .viewport(cfg.mock.viewport_w, cfg.mock.viewport_h)
                .device_scale(cfg.mock.device_scale),
        )),
        BridgeKind::Devtools => {
            let endpoint = cfg
                .devtools_endpoint
                .as_deref()
                .ok_or_else(|| ServerError::Config("the devtools bridge needs a devtools endpoint".into()))?;
            Ok(Arc::new(DevtoolsBridge::connect(endpoint)?))
        }
    }
}

/// Built-in presets plus every layout in the configured directory.
pub fn layout_store(cfg: &ServerConfig) -> Result<LayoutStore, ServerError> {
    let mut store = LayoutStore::with_builtins();
    if let Some(dir) = &cfg.layout_dir {
        store.load_dir(dir)?;
    }
    Ok(store)
}

fn lock(s: &Mutex<Session>) -> MutexGuard<'_, Session> {
    s.lock().unwrap_or_else(|e| e.into_inner())
}

pub struct Server {
    session: Arc<Mutex<Session>>,
    max_fps: u32,
    out: Output,
}

impl Server {
    /// Connects the configured bridge and opens the session. Blocks while the
    /// page loads.
    pub fn open(cfg: &ServerConfig, out: Output) -> Result<Self, ServerError> {
        let bridge = open_bridge(cfg)?;
        Self::with_bridge(cfg, bridge, out)
    }

    pub fn with_bridge(cfg: &ServerConfig, bridge: Arc<dyn BrowserBridge>, out: Output) -> Result<Self, ServerError> {
        cfg.validate().map_err(ServerError::Config)?;
        let store = layout_store(cfg)?;
        let url = cfg.url.clone().unwrap_or_else(|| default_url(cfg.bridge).into());
        let session = Session::open(bridge, &url, &store, cfg.layout.as_deref(), cfg.session.clone())?;
        out(&format!(
            "SESSION open layout={} panels={} url={}",
            session.layout().name,
            session.layout().len(),
            session.handle().url
        ));
        Ok(Self {
            session: Arc::new(Mutex::new(session)),
            max_fps: cfg.session.max_fps,
            out,
        })
    }

    pub fn session(&self) -> &Arc<Mutex<Session>> {
        &self.session
    }

    /// Serves clients until `shutdown` resolves, then stops capture.
    pub async fn run(self, listener: TcpListener, shutdown: impl Future<Output = ()>) -> Result<(), ServerError> {
        let addr = listener.local_addr()?;
        lock(&self.session).start_capture()?;
        let stop = Arc::new(AtomicBool::new(false));
        let capture = {
            let (session, stop, out, fps) = (self.session.clone(), stop.clone(), self.out.clone(), self.max_fps);
            std::thread::Builder::new()
                .name("capture".into())
                .spawn(move || capture_loop(&session, &stop, &out, fps))?
        };
        (self.out)(&format!("LISTENING {}", addr.port()));
        tracing::info!(%addr, "listening");

        let mut conns = JoinSet::new();
        tokio::pin!(shutdown);
        loop {
            tokio::select! {
                _ = &mut shutdown => break,
                accepted = listener.accept() => match accepted {
                    Ok((stream, peer)) => {
                        conns.spawn(connection(stream, peer, self.session.clone(), self.out.clone()));
                    }
                    Err(e) => tracing::warn!(error = %e, "accept failed"),
                },
                Some(_) = conns.join_next(), if !conns.is_empty() => {}
            }
        }
        conns.shutdown().await;
        stop.store(true, Ordering::Relaxed);
        let _ = tokio::task::spawn_blocking(move || capture.join()).await;
        let session = self.session.clone();
        tokio::task::spawn_blocking(move || lock(&session).stop_capture())
            .await
            .map_err(|e| ServerError::Io(std::io::Error::other(e)))??;
        Ok(())
    }
}

fn capture_loop(session: &Mutex<Session>, stop: &AtomicBool, out: &Output, max_fps: u32) {
    let interval = Duration::from_secs_f64(1.0 / f64::from(max_fps.max(1)));
    let mut next = Instant::now();
    let mut failing = false;
    while !stop.load(Ordering::Relaxed) {
        let (bridge, handle) = {
            let s = lock(session);
            (s.bridge().clone(), s.handle().clone())
        };
        match bridge.next_frame(&handle) {
            Ok(f) => {
                lock(session).ingest_frame(&f);
                failing = false;
            }
            Err(e) => {
                if !failing {
                    out(&format!("ERROR bridge-error {e}"));
                }
                failing = true;
                std::thread::sleep(BRIDGE_RETRY);
            }
        }
        next += interval;
        let now = Instant::now();
        match next.checked_duration_since(now) {
            Some(d) => std::thread::sleep(d),
            None => next = now,
        }
    }
}

async fn connection(stream: TcpStream, peer: SocketAddr, session: Arc<Mutex<Session>>, out: Output) {
    let mut ws = match tokio_tungstenite::accept_async(stream).await {
        Ok(ws) => ws,
        Err(e) => {
            tracing::debug!(%peer, error = %e, "websocket handshake failed");
            return;
        }
    };
    let wake = Arc::new(Notify::new());
    let client = {
        let wake = wake.clone();
        lock(&session).connect(Some(Arc::new(move || wake.notify_one())))
    };
    out(&format!("SESSION connect client={client} peer={peer}"));
    if let Err(e) = serve_client(&mut ws, &session, client, &wake, &out).await {
        tracing::debug!(client, error = %e, "connection ended");
    }
    lock(&session).disconnect(client);
    out(&format!("SESSION disconnect client={client}"));
}

async fn serve_client(
    ws: &mut WebSocketStream<TcpStream>,
    session: &Arc<Mutex<Session>>,
    client: ClientId,
    wake: &Notify,
    out: &Output,
) -> Result<(), tungstenite::Error> {
    loop {
        tokio::select! {
            _ = wake.notified() => flush(ws, session, client).await?,
            msg = ws.next() => {
                let frame = match msg {
                    None | Some(Ok(WsMessage::Close(_))) => return Ok(()),
                    Some(Err(e)) => return Err(e),
                    Some(Ok(WsMessage::Text(t))) => Frame::Text(t.as_str().to_string()),
                    Some(Ok(WsMessage::Binary(b))) => Frame::Binary(b.to_vec()),
                    Some(Ok(_)) => continue,
                };
                let fatal = receive(frame, session, client, out).await;
                flush(ws, session, client).await?;
                if fatal {
                    ws.close(None).await?;
                    return Ok(());
                }
            }
        }
    }
}

/// Feeds one client frame into the session. Returns true when the
/// connection must be closed.
async fn receive(frame: Frame, session: &Arc<Mutex<Session>>, client: ClientId, out: &Output) -> bool {
    let msg = match decode_message(&frame) {
        Ok(m) => m,
        Err(e) => {
            let err = ErrorMsg::new(ErrorCode::BadMessage, e.to_string());
            out(&format!("ERROR client={client} {} {}", err.code.as_str(), err.detail));
            lock(session).send_error(client, err);
            return false;
        }
    };
    let is_hello = matches!(msg, Message::Hello(_));
    let s = session.clone();
    let result = tokio::task::spawn_blocking(move || {
        let mut s = lock(&s);
        let r = s.handle_message(client, msg);
        (r, s.client_name(client).map(str::to_string))
    })
    .await;
    match result {
        Ok((Ok(()), name)) => {
            if is_hello {
                out(&format!("SESSION hello client={client} name={}", name.unwrap_or_default()));
            }
            false
        }
        Ok((Err(e), _)) => {
            out(&format!("ERROR client={client} {} {}", e.code.as_str(), e.detail));
            matches!(e.code, ErrorCode::VersionMismatch | ErrorCode::Unauthorized)
        }
        Err(e) => {
            tracing::error!(client, error = %e, "message handler panicked");
            true
        }
    }
}

async fn flush(
    ws: &mut WebSocketStream<TcpStream>,
    session: &Mutex<Session>,
    client: ClientId,
) -> Result<(), tungstenite::Error> {
    let msgs = lock(session).drain(client);
    if msgs.is_empty() {
        return Ok(());
    }
    for m in &msgs {
        let ws_msg = match encode_message(m) {
            Frame::Text(t) => WsMessage::text(t),
            Frame::Binary(b) => WsMessage::binary(b),
        };
        ws.feed(ws_msg).await?;
    }
    ws.flush().await
}
