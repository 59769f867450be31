//! [`BrowserBridge`] over a browser's remote-debugging protocol.
//!
//! The endpoint is either the browser's HTTP discovery address
//! (`http://127.0.0.1:9222`, the first page target is attached) or a page's
//! `ws://` debugger URL. One page per bridge; frames come from the page
//! screencast and are decoded to RGBA before they leave the adapter.

use std::collections::VecDeque;
use std::net::TcpStream;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use base64::Engine;
use serde_json::{json, Value};
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message as WsMessage, WebSocket};

use super::{
    BridgeError, BridgeResult, BrowserBridge, KeyAction, KeyDescriptor, Modifiers, MouseButton, PageHandle, PointerKind, Seq,
    SourceFrame,
};
use crate::bitmap::Bitmap;
use crate::clock::{Clock, SystemClock};
use crate::geometry::viewport_contains;
use super::InjectPoint;
use crate::{RegionRect, ViewportMetrics, ViewportPoint};

const PAGE_ID: u64 = 1;
const CALL_TIMEOUT: Duration = Duration::from_secs(10);
const LOAD_TIMEOUT: Duration = Duration::from_secs(30);
const FIRST_FRAME_TIMEOUT: Duration = Duration::from_secs(5);
const POLL: Duration = Duration::from_millis(20);

type Socket = WebSocket<MaybeTlsStream<TcpStream>>;

struct Inner {
    ws: Socket,
    next_id: u64,
    events: VecDeque<Value>,
    url: Option<String>,
    capturing: bool,
    interval: Duration,
    last_frame_at: Option<Instant>,
    last: Option<(Bitmap, ViewportMetrics)>,
    seq: Seq,
}

pub struct DevtoolsBridge {
    inner: Mutex<Inner>,
    clock: Box<dyn Clock>,
}

fn protocol(e: impl std::fmt::Display) -> BridgeError {
    BridgeError::Protocol(e.to_string())
}

/// Finds the websocket URL of the first page target behind an HTTP
/// discovery endpoint, opening a blank page if there is none.
fn discover(endpoint: &str) -> BridgeResult<String> {
    let base = endpoint.trim_end_matches('/');
    let list: Value = serde_json::from_str(
        &ureq::get(&format!("{base}/json/list"))
            .call()
            .map_err(protocol)?
            .body_mut()
            .read_to_string()
            .map_err(protocol)?,
    )
    .map_err(|e| BridgeError::Decode(e.to_string()))?;
    let page = list
        .as_array()
        .and_then(|a| a.iter().find(|t| t["type"] == "page" && t["webSocketDebuggerUrl"].is_string()))
        .cloned();
    let page = match page {
        Some(p) => p,
        None => serde_json::from_str(
            &ureq::put(&format!("{base}/json/new?about:blank"))
                .send_empty()
                .map_err(protocol)?
                .body_mut()
                .read_to_string()
                .map_err(protocol)?,
        )
        .map_err(|e| BridgeError::Decode(e.to_string()))?,
    };
    page["webSocketDebuggerUrl"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| protocol("no page target with a debugger URL"))
}

impl DevtoolsBridge {
    pub fn connect(endpoint: &str) -> BridgeResult<Self> {
        let ws_url = if endpoint.starts_with("ws://") || endpoint.starts_with("wss://") {
            endpoint.to_string()
        } else if endpoint.starts_with("http://") || endpoint.starts_with("https://") {
            discover(endpoint)?
        } else {
            return Err(protocol(format!("unsupported devtools endpoint {endpoint:?}")));
        };
        let (ws, _) = tungstenite::connect(ws_url.as_str()).map_err(protocol)?;
        if let MaybeTlsStream::Plain(s) = ws.get_ref() {
            s.set_read_timeout(Some(POLL))?;
        }
        let bridge = Self {
            inner: Mutex::new(Inner {
                ws,
                next_id: 1,
                events: VecDeque::new(),
                url: None,
                capturing: false,
                interval: Duration::from_millis(1000 / u64::from(super::DEFAULT_MAX_FPS)),
                last_frame_at: None,
                last: None,
                seq: 0,
            }),
            clock: Box::new(SystemClock::new()),
        };
        {
            let mut inner = bridge.lock();
            inner.call("Page.enable", json!({}))?;
            inner.call("Runtime.enable", json!({}))?;
        }
        Ok(bridge)
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn checked(&self, h: &PageHandle) -> BridgeResult<MutexGuard<'_, Inner>> {
        let inner = self.lock();
        if h.id != PAGE_ID || inner.url.is_none() {
            return Err(BridgeError::InvalidHandle(h.id));
        }
        Ok(inner)
    }
}

impl Inner {
    /// Reads one message if any arrives within the socket poll interval.
    fn read_one(&mut self) -> BridgeResult<Option<Value>> {
        match self.ws.read() {
            Ok(WsMessage::Text(t)) => serde_json::from_str(t.as_str())
                .map(Some)
                .map_err(|e| BridgeError::Decode(e.to_string())),
            Ok(_) => Ok(None),
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) =>
            {
                Ok(None)
            }
            Err(e) => Err(protocol(e)),
        }
    }

    fn call(&mut self, method: &str, params: Value) -> BridgeResult<Value> {
        let id = self.next_id;
        self.next_id += 1;
        let req = json!({"id": id, "method": method, "params": params});
        self.ws.send(WsMessage::text(req.to_string())).map_err(protocol)?;
        let deadline = Instant::now() + CALL_TIMEOUT;
        while Instant::now() < deadline {
            let Some(msg) = self.read_one()? else { continue };
            if msg["id"].as_u64() == Some(id) {
                if let Some(err) = msg.get("error") {
                    return Err(protocol(format!("{method}: {}", err["message"].as_str().unwrap_or("error"))));
                }
                return Ok(msg["result"].clone());
            }
            if msg.get("method").is_some() {
                self.events.push_back(msg);
            }
        }
        Err(protocol(format!("{method}: no reply within {CALL_TIMEOUT:?}")))
    }

    /// Removes and returns the first queued or arriving event named `method`.
    fn wait_event(&mut self, method: &str, timeout: Duration) -> BridgeResult<Option<Value>> {
        let deadline = Instant::now() + timeout;
        loop {
            if let Some(i) = self.events.iter().position(|e| e["method"] == method) {
                return Ok(self.events.remove(i));
            }
            if Instant::now() >= deadline {
                return Ok(None);
            }
            if let Some(msg) = self.read_one()? {
                if msg.get("method").is_some() {
                    self.events.push_back(msg);
                }
            }
        }
    }

    fn evaluate(&mut self, expr: &str) -> BridgeResult<Value> {
        let r = self.call("Runtime.evaluate", json!({"expression": expr, "returnByValue": true}))?;
        if let Some(ex) = r.get("exceptionDetails") {
            return Err(protocol(format!(
                "script error: {}",
                ex["exception"]["description"].as_str().or(ex["text"].as_str()).unwrap_or("exception")
            )));
        }
        Ok(r["result"]["value"].clone())
    }

    fn metrics(&mut self) -> BridgeResult<ViewportMetrics> {
        let v = self.evaluate(
            "[window.scrollX, window.scrollY, window.innerWidth, window.innerHeight, window.devicePixelRatio, \
             document.documentElement.scrollWidth, document.documentElement.scrollHeight]",
        )?;
        let n: Vec<f64> = v
            .as_array()
            .map(|a| a.iter().filter_map(Value::as_f64).collect())
            .filter(|a: &Vec<f64>| a.len() == 7)
            .ok_or_else(|| BridgeError::Decode(format!("unexpected metrics {v}")))?;
        let m = ViewportMetrics::unscrolled(n[2], n[3], n[4], n[5].max(n[2]), n[6].max(n[3]));
        m.validate().map_err(|e| BridgeError::Decode(e.to_string()))?;
        Ok(m.with_scroll(n[0], n[1]))
    }

    fn ack_latest_frame(&mut self, timeout: Duration) -> BridgeResult<Option<Value>> {
        let mut latest = None;
        let mut wait = timeout;
        while let Some(ev) = self.wait_event("Page.screencastFrame", wait)? {
            let sid = ev["params"]["sessionId"].clone();
            self.call("Page.screencastFrameAck", json!({"sessionId": sid}))?;
            latest = Some(ev);
            wait = Duration::ZERO;
        }
        Ok(latest)
    }

    fn decode_frame(&mut self, ev: &Value) -> BridgeResult<(Bitmap, ViewportMetrics)> {
        let p = &ev["params"];
        let data = base64::engine::general_purpose::STANDARD
            .decode(p["data"].as_str().unwrap_or_default())
            .map_err(|e| BridgeError::Decode(e.to_string()))?;
        let img = image::load_from_memory(&data)
            .map_err(|e| BridgeError::Decode(e.to_string()))?
            .into_rgba8();
        let (w, h) = img.dimensions();
        let bitmap = Bitmap::from_raw(w, h, img.into_raw()).map_err(|e| BridgeError::Decode(e.to_string()))?;
        let md = &p["metadata"];
        let dev_w = md["deviceWidth"].as_f64().filter(|v| *v > 0.0).unwrap_or(w as f64);
        let dev_h = md["deviceHeight"].as_f64().filter(|v| *v > 0.0).unwrap_or(h as f64);
        let doc = self.metrics()?;
        let scale = w as f64 / dev_w;
        let m = ViewportMetrics::unscrolled(dev_w, dev_h, scale, doc.document_w.max(dev_w), doc.document_h.max(dev_h))
            .with_scroll(
                md["scrollOffsetX"].as_f64().unwrap_or(doc.scroll_x),
                md["scrollOffsetY"].as_f64().unwrap_or(doc.scroll_y),
            );
        Ok((bitmap, m))
    }
}

fn button_name(b: MouseButton) -> &'static str {
    match b {
        MouseButton::None => "none",
        MouseButton::Left => "left",
        MouseButton::Middle => "middle",
        MouseButton::Right => "right",
    }
}

fn buttons_mask(b: MouseButton) -> u8 {
    match b {
        MouseButton::None => 0,
        MouseButton::Left => 1,
        MouseButton::Right => 2,
        MouseButton::Middle => 4,
    }
}

fn check_in_viewport(m: &ViewportMetrics, at: InjectPoint) -> BridgeResult<()> {
    let p = ViewportPoint {
        x: at.x as f64,
        y: at.y as f64,
    };
    if viewport_contains(p, m) {
        Ok(())
    } else {
        Err(BridgeError::OutOfViewport { x: at.x, y: at.y })
    }
}

impl BrowserBridge for DevtoolsBridge {
    fn navigate(&self, url: &str) -> BridgeResult<PageHandle> {
        url::Url::parse(url).map_err(|e| BridgeError::Navigation {
            url: url.into(),
            reason: e.to_string(),
        })?;
        let mut inner = self.lock();
        inner.events.retain(|e| e["method"] != "Page.loadEventFired");
        let r = inner.call("Page.navigate", json!({"url": url}))?;
        if let Some(err) = r["errorText"].as_str().filter(|s| !s.is_empty()) {
            return Err(BridgeError::Navigation {
                url: url.into(),
                reason: err.into(),
            });
        }
        if inner.wait_event("Page.loadEventFired", LOAD_TIMEOUT)?.is_none() {
            tracing::warn!(url, "page did not finish loading, continuing");
        }
        inner.url = Some(url.into());
        Ok(PageHandle {
            id: PAGE_ID,
            url: url.into(),
        })
    }

    fn navigate_in(&self, h: &PageHandle, url: &str) -> BridgeResult<PageHandle> {
        drop(self.checked(h)?);
        self.navigate(url)
    }

    fn start_capture(&self, h: &PageHandle, max_fps: u32) -> BridgeResult<()> {
        let mut inner = self.checked(h)?;
        if inner.capturing {
            return Err(BridgeError::Conflict("capture already active".into()));
        }
        inner.call("Page.startScreencast", json!({"format": "png", "everyNthFrame": 1}))?;
        inner.capturing = true;
        inner.interval = Duration::from_millis(1000 / u64::from(max_fps.max(1)));
        inner.last_frame_at = None;
        Ok(())
    }

    fn stop_capture(&self, h: &PageHandle) -> BridgeResult<()> {
        let mut inner = self.checked(h)?;
        if inner.capturing {
            inner.call("Page.stopScreencast", json!({}))?;
            inner.capturing = false;
        }
        Ok(())
    }

    /// Blocks until the next frame is due. When the page has not painted
    /// since the previous frame, the previous pixels are delivered again
    /// under a new seq.
    fn next_frame(&self, h: &PageHandle) -> BridgeResult<SourceFrame> {
        let mut inner = self.checked(h)?;
        if !inner.capturing {
            return Err(BridgeError::NotCapturing);
        }
        if let Some(t) = inner.last_frame_at {
            let due = t + inner.interval;
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        let wait = if inner.last.is_some() { inner.interval.max(POLL) } else { FIRST_FRAME_TIMEOUT };
        if let Some(ev) = inner.ack_latest_frame(wait)? {
            let decoded = inner.decode_frame(&ev)?;
            inner.last = Some(decoded);
        }
        let (bitmap, metrics) = inner
            .last
            .clone()
            .ok_or_else(|| protocol("no screencast frame received"))?;
        inner.seq = inner.seq.checked_add(1).ok_or_else(|| protocol("sequence exhausted"))?;
        inner.last_frame_at = Some(Instant::now());
        Ok(SourceFrame {
            seq: inner.seq,
            bitmap,
            metrics,
            timestamp_ms: self.clock.now_ms(),
        })
    }

    fn resolve_selector(&self, h: &PageHandle, selector: &str) -> BridgeResult<RegionRect> {
        let mut inner = self.checked(h)?;
        let lit = serde_json::to_string(selector).expect("strings serialize");
        let v = inner.evaluate(&format!(
            "(() => {{ const e = document.querySelector({lit}); if (!e) return null; \
             const r = e.getBoundingClientRect(); \
             return [r.left + window.scrollX, r.top + window.scrollY, r.width, r.height]; }})()"
        ))?;
        let n: Vec<f64> = match v.as_array() {
            Some(a) => a.iter().filter_map(Value::as_f64).collect(),
            None => return Err(BridgeError::NotFound(selector.into())),
        };
        let r = match n[..] {
            [x, y, w, h] => RegionRect::new(x, y, w, h),
            _ => return Err(BridgeError::Decode(format!("unexpected rect {v}"))),
        };
        if r.is_valid() {
            Ok(r)
        } else {
            Err(BridgeError::NotFound(selector.into()))
        }
    }

    fn inject_pointer(
        &self,
        h: &PageHandle,
        kind: PointerKind,
        at: InjectPoint,
        button: MouseButton,
        modifiers: Modifiers,
    ) -> BridgeResult<()> {
        let mut inner = self.checked(h)?;
        let m = inner.metrics()?;
        check_in_viewport(&m, at)?;
        let (ty, clicks, held) = match kind {
            PointerKind::Down => ("mousePressed", 1, buttons_mask(button)),
            PointerKind::Move => ("mouseMoved", 0, buttons_mask(button)),
            PointerKind::Up => ("mouseReleased", 1, 0),
        };
        inner.call(
            "Input.dispatchMouseEvent",
            json!({
                "type": ty, "x": at.x, "y": at.y, "button": button_name(button),
                "buttons": held, "clickCount": clicks, "modifiers": modifiers.0,
            }),
        )?;
        Ok(())
    }

    fn inject_key(&self, h: &PageHandle, key: &KeyDescriptor) -> BridgeResult<()> {
        let mut inner = self.checked(h)?;
        let mut ev = json!({"key": key.key, "modifiers": key.modifiers.0});
        if let Some(code) = &key.code {
            ev["code"] = json!(code);
        }
        let down = |mut ev: Value| {
            match &key.text {
                Some(t) => {
                    ev["type"] = json!("keyDown");
                    ev["text"] = json!(t);
                }
                None => ev["type"] = json!("rawKeyDown"),
            }
            ev
        };
        let up = |mut ev: Value| {
            ev["type"] = json!("keyUp");
            ev
        };
        match key.action {
            KeyAction::Down => {
                inner.call("Input.dispatchKeyEvent", down(ev))?;
            }
            KeyAction::Up => {
                inner.call("Input.dispatchKeyEvent", up(ev))?;
            }
            KeyAction::Press => {
                inner.call("Input.dispatchKeyEvent", down(ev.clone()))?;
                inner.call("Input.dispatchKeyEvent", up(ev))?;
            }
        }
        Ok(())
    }

    fn inject_wheel(&self, h: &PageHandle, at: InjectPoint, delta_x: f64, delta_y: f64) -> BridgeResult<()> {
        let mut inner = self.checked(h)?;
        let m = inner.metrics()?;
        check_in_viewport(&m, at)?;
        inner.call(
            "Input.dispatchMouseEvent",
            json!({"type": "mouseWheel", "x": at.x, "y": at.y, "deltaX": delta_x, "deltaY": delta_y}),
        )?;
        Ok(())
    }

    fn scroll_to(&self, h: &PageHandle, x: f64, y: f64) -> BridgeResult<ViewportMetrics> {
        let mut inner = self.checked(h)?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(protocol("scroll target is not finite"));
        }
        inner.evaluate(&format!("window.scrollTo({x}, {y})"))?;
        inner.metrics()
    }

    fn query_metrics(&self, h: &PageHandle) -> BridgeResult<ViewportMetrics> {
        self.checked(h)?.metrics()
    }

    fn close(&self, h: &PageHandle) -> BridgeResult<()> {
        let mut inner = self.checked(h)?;
        if inner.capturing {
            let _ = inner.call("Page.stopScreencast", json!({}));
            inner.capturing = false;
        }
        inner.url = None;
        inner.last = None;
        Ok(())
    }
}
