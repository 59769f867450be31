//! One mirrored page and the workspace clients attached to it.
//!
//! The session is transport-agnostic: the server feeds it decoded
//! [`Message`]s and drains each client's outbox. Control messages queue in
//! order; panel frames use one slot per panel where a newer frame replaces an
//! undelivered older one.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::bridge::{BridgeError, BrowserBridge, InjectPoint, PageHandle, SourceFrame};
use crate::config::SessionConfig;
use crate::decomposer::{decompose_frame, resolve_layout, DecomposeCache, PanelFrame, ResolveError, ResolvedLayout};
use crate::geometry::{doc_to_viewport, panel_local_to_doc, viewport_contains};
use crate::layout::{fallback_layout, Anchoring, LayoutDocument, LayoutStore};
use crate::policy::{apply_transform, arrange_initial_poses, InputMode, PanelPolicyState};
use crate::protocol::{
    AnnouncedPanel, ErrorCode, ErrorMsg, Hello, InputAction, InputEventMsg, LayoutAnnounce, Message, PanelFrameMsg,
    PanelStateMsg, PanelTransformMsg, PROTOCOL_VERSION,
};
use crate::{PagePoint, PolicyConfig, ViewportMetrics, ViewportPoint};

pub type ClientId = u64;

/// Called whenever a client's outbox gains something to send.
pub type Notify = Arc<dyn Fn() + Send + Sync>;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown layout {0:?}")]
    UnknownLayout(String),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
}

/// What an input event turned into on the page.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionOutcome {
    /// Viewport point handed to the page; `None` for key events.
    pub at: Option<InjectPoint>,
    /// Metrics after an automatic scroll, if one was needed.
    pub scrolled: Option<ViewportMetrics>,
}

fn bridge_error(e: BridgeError) -> ErrorMsg {
    match e {
        BridgeError::OutOfViewport { x, y } => ErrorMsg::new(ErrorCode::OutOfViewport, format!("({x}, {y}) is outside the viewport")),
        e => ErrorMsg::new(ErrorCode::BridgeError, e.to_string()),
    }
}

fn round_point(p: ViewportPoint) -> Option<InjectPoint> {
    let x = p.x.round();
    let y = p.y.round();
    let fits = |v: f64| v >= i32::MIN as f64 && v <= i32::MAX as f64;
    (fits(x) && fits(y)).then_some(InjectPoint { x: x as i32, y: y as i32 })
}

fn rounded_visible(p: ViewportPoint, m: &ViewportMetrics) -> Option<InjectPoint> {
    round_point(p).filter(|r| {
        viewport_contains(
            ViewportPoint {
                x: r.x as f64,
                y: r.y as f64,
            },
            m,
        )
    })
}

/// Maps a panel-local event onto the page and injects it.
///
/// Pointer and wheel positions go panel-local → document → viewport and are
/// rounded half away from zero. A document-anchored point outside the
/// viewport is scrolled to the viewport center first when `auto_scroll` is
/// set. Key events go to whatever has focus.
pub fn handle_input<B: BrowserBridge + ?Sized>(
    e: &InputEventMsg,
    rl: &ResolvedLayout,
    bridge: &B,
    h: &PageHandle,
    auto_scroll: bool,
) -> Result<InjectionOutcome, ErrorMsg> {
    let panel = rl
        .panel(&e.panel_id)
        .ok_or_else(|| ErrorMsg::new(ErrorCode::UnknownPanel, format!("no panel {:?}", e.panel_id)))?;
    let Some(unit) = e.action.location() else {
        let InputAction::Key { key } = &e.action else { unreachable!() };
        bridge.inject_key(h, key).map_err(bridge_error)?;
        return Ok(InjectionOutcome { at: None, scrolled: None });
    };
    let local = panel_local_to_doc(unit, &panel.rect).map_err(|err| ErrorMsg::new(ErrorCode::InvalidInput, err.to_string()))?;

    let mut scrolled = None;
    let at = match panel.anchoring {
        Anchoring::Viewport => {
            let m = bridge.query_metrics(h).map_err(bridge_error)?;
            rounded_visible(ViewportPoint { x: local.x, y: local.y }, &m)
        }
        Anchoring::Document => {
            let m = bridge.query_metrics(h).map_err(bridge_error)?;
            match rounded_visible(doc_to_viewport(local, &m).point, &m) {
                Some(p) => Some(p),
                None if auto_scroll => {
                    let m = scroll_into_view(bridge, h, local, &m).map_err(bridge_error)?;
                    scrolled = Some(m);
                    rounded_visible(doc_to_viewport(local, &m).point, &m)
                }
                None => None,
            }
        }
    };
    let at = at.ok_or_else(|| {
        ErrorMsg::new(
            ErrorCode::OutOfViewport,
            format!("({}, {}) on panel {:?} is not in the viewport", unit.u, unit.v, e.panel_id),
        )
    })?;
    match &e.action {
        InputAction::Pointer {
            phase,
            button,
            modifiers,
            ..
        } => bridge.inject_pointer(h, *phase, at, *button, *modifiers),
        InputAction::Wheel { delta_x, delta_y, .. } => bridge.inject_wheel(h, at, *delta_x, *delta_y),
        InputAction::Key { .. } => unreachable!(),
    }
    .map_err(bridge_error)?;
    Ok(InjectionOutcome { at: Some(at), scrolled })
}

/// Scrolls so that `p` lands at the viewport center, as far as the document
/// allows.
fn scroll_into_view<B: BrowserBridge + ?Sized>(
    bridge: &B,
    h: &PageHandle,
    p: PagePoint,
    m: &ViewportMetrics,
) -> Result<ViewportMetrics, BridgeError> {
    let (sx, sy) = m.clamp_scroll(p.x - m.viewport_w / 2.0, p.y - m.viewport_h / 2.0);
    bridge.scroll_to(h, sx, sy)
}

/// Initial pose, snap state and input mode for every panel of a layout.
pub fn initial_states(rl: &ResolvedLayout, viewport_h: f64, cfg: &PolicyConfig) -> Vec<PanelPolicyState<f64>> {
    let hints: Vec<_> = rl
        .panels
        .iter()
        .map(|p| (p.placement_hint, p.rect.h.min(viewport_h) / p.rect.w))
        .collect();
    arrange_initial_poses(&hints, cfg)
        .iter()
        .zip(&rl.panels)
        .map(|(pose, p)| apply_transform(pose, InputMode::default(), p.interaction_hint, cfg))
        .collect()
}

#[derive(Default)]
struct Outbox {
    control: VecDeque<Message>,
    /// Latest undelivered frame per panel hash.
    frames: BTreeMap<u32, PanelFrameMsg>,
    /// Highest source_seq delivered per panel hash.
    delivered: BTreeMap<u32, u32>,
}

impl Outbox {
    fn offer_frame(&mut self, f: &PanelFrameMsg) -> bool {
        if self.delivered.get(&f.panel_hash).is_some_and(|&s| s > f.source_seq) {
            return false;
        }
        if self.frames.get(&f.panel_hash).is_some_and(|q| q.source_seq > f.source_seq) {
            return false;
        }
        self.frames.insert(f.panel_hash, f.clone());
        true
    }
}

struct Client {
    name: Option<String>,
    last_seq: Option<u64>,
    outbox: Outbox,
    notify: Option<Notify>,
}

impl Client {
    fn ready(&self) -> bool {
        self.name.is_some()
    }

    fn wake(&self) {
        if let Some(n) = &self.notify {
            n();
        }
    }
}

pub struct Session {
    bridge: Arc<dyn BrowserBridge>,
    handle: PageHandle,
    doc: LayoutDocument,
    layout: ResolvedLayout,
    states: Vec<PanelPolicyState<f64>>,
    cache: DecomposeCache,
    /// Last frame emitted per panel, for clients that join late.
    latest: BTreeMap<u32, PanelFrameMsg>,
    cfg: SessionConfig,
    clients: BTreeMap<ClientId, Client>,
    next_client: ClientId,
}

impl Session {
    /// Opens `url` and picks its layout: `layout` by name if given, else the
    /// best site-pattern match, else a single panel covering the viewport.
    pub fn open(
        bridge: Arc<dyn BrowserBridge>,
        url: &str,
        store: &LayoutStore,
        layout: Option<&str>,
        cfg: SessionConfig,
    ) -> Result<Self, SessionError> {
        let doc = match layout {
            Some(name) => Some(store.get(name).cloned().ok_or_else(|| SessionError::UnknownLayout(name.into()))?),
            None => store.match_url(url).cloned(),
        };
        let handle = bridge.navigate(url)?;
        let doc = match doc {
            Some(d) => d,
            None => fallback_layout(&bridge.query_metrics(&handle)?),
        };
        Self::with_layout(bridge, handle, doc, cfg)
    }

    pub fn with_layout(
        bridge: Arc<dyn BrowserBridge>,
        handle: PageHandle,
        doc: LayoutDocument,
        cfg: SessionConfig,
    ) -> Result<Self, SessionError> {
        let layout = resolve_layout(&doc, bridge.as_ref(), &handle)?;
        let m = bridge.query_metrics(&handle)?;
        let states = initial_states(&layout, m.viewport_h, &cfg.policy);
        Ok(Self {
            bridge,
            handle,
            doc,
            layout,
            states,
            cache: DecomposeCache::new(),
            latest: BTreeMap::new(),
            cfg,
            clients: BTreeMap::new(),
            next_client: 1,
        })
    }

    pub fn bridge(&self) -> &Arc<dyn BrowserBridge> {
        &self.bridge
    }

    pub fn handle(&self) -> &PageHandle {
        &self.handle
    }

    pub fn layout(&self) -> &ResolvedLayout {
        &self.layout
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn panel_state(&self, panel_id: &str) -> Option<PanelStateMsg> {
        let i = self.layout.panels.iter().position(|p| p.id == panel_id)?;
        Some(self.state_msg(i))
    }

    fn state_msg(&self, i: usize) -> PanelStateMsg {
        let s = &self.states[i];
        PanelStateMsg {
            panel_id: self.layout.panels[i].id.clone(),
            pose: s.pose,
            anchored: s.anchored,
            input_mode: s.input_mode,
        }
    }

    pub fn announcement(&self) -> LayoutAnnounce {
        LayoutAnnounce {
            layout: self.layout.name.clone(),
            url: self.handle.url.clone(),
            panels: self
                .layout
                .panels
                .iter()
                .zip(&self.states)
                .map(|(p, s)| AnnouncedPanel {
                    id: p.id.clone(),
                    hash: p.hash,
                    display_name: p.display_name.clone(),
                    role: p.role,
                    anchoring: p.anchoring,
                    rect: p.rect,
                    placement_hint: p.placement_hint,
                    interaction_hint: p.interaction_hint,
                    pose: s.pose,
                    anchored: s.anchored,
                    input_mode: s.input_mode,
                })
                .collect(),
        }
    }

    pub fn start_capture(&self) -> Result<(), BridgeError> {
        self.bridge.start_capture(&self.handle, self.cfg.max_fps)
    }

    pub fn stop_capture(&self) -> Result<(), BridgeError> {
        self.bridge.stop_capture(&self.handle)
    }

    /// Re-resolves selectors against the current page and re-announces the
    /// layout. Panel poses are kept for panels that still exist.
    pub fn refresh_layout(&mut self) -> Result<(), SessionError> {
        let layout = resolve_layout(&self.doc, self.bridge.as_ref(), &self.handle)?;
        let m = self.bridge.query_metrics(&self.handle)?;
        let mut states = initial_states(&layout, m.viewport_h, &self.cfg.policy);
        for (p, s) in layout.panels.iter().zip(states.iter_mut()) {
            if let Some(i) = self.layout.panels.iter().position(|q| q.id == p.id) {
                *s = self.states[i];
            }
        }
        self.layout = layout;
        self.states = states;
        self.cache.clear();
        self.latest.clear();
        let announce = Message::LayoutAnnounce(self.announcement());
        for c in self.clients.values_mut().filter(|c| c.ready()) {
            c.outbox.frames.clear();
            c.outbox.delivered.clear();
            c.outbox.control.push_back(announce.clone());
            c.wake();
        }
        Ok(())
    }

    pub fn connect(&mut self, notify: Option<Notify>) -> ClientId {
        let id = self.next_client;
        self.next_client += 1;
        self.clients.insert(
            id,
            Client {
                name: None,
                last_seq: None,
                outbox: Outbox::default(),
                notify,
            },
        );
        id
    }

    pub fn disconnect(&mut self, client: ClientId) {
        self.clients.remove(&client);
    }

    pub fn client_name(&self, client: ClientId) -> Option<&str> {
        self.clients.get(&client)?.name.as_deref()
    }

    pub fn client_count(&self) -> usize {
        self.clients.len()
    }

    /// Handles one message from `client`. An `Err` has already been queued to
    /// that client; `Err` with code `version-mismatch` or `unauthorized` means
    /// the connection should be closed.
    pub fn handle_message(&mut self, client: ClientId, m: Message) -> Result<(), ErrorMsg> {
        let r = self.dispatch(client, m);
        if let Err(e) = &r {
            self.send(client, Message::Error(e.clone()));
        }
        r
    }

    fn dispatch(&mut self, client: ClientId, m: Message) -> Result<(), ErrorMsg> {
        let ready = self
            .clients
            .get(&client)
            .ok_or_else(|| ErrorMsg::new(ErrorCode::BadMessage, "unknown client"))?
            .ready();
        match m {
            Message::Hello(h) => self.hello(client, h),
            _ if !ready => Err(ErrorMsg::new(ErrorCode::BadMessage, "expected hello")),
            Message::InputEvent(e) => {
                self.check_seq(client, e.client_seq)?;
                self.input(&e).map(|_| ())
            }
            Message::PanelTransform(t) => {
                self.check_seq(client, t.client_seq)?;
                self.handle_panel_transform(&t).map(|_| ())
            }
            other => Err(ErrorMsg::new(
                ErrorCode::BadMessage,
                format!("{} is not accepted from clients", other.kind()),
            )),
        }
    }

    fn hello(&mut self, client: ClientId, h: Hello) -> Result<(), ErrorMsg> {
        if h.protocol_version != PROTOCOL_VERSION {
            return Err(ErrorMsg::new(
                ErrorCode::VersionMismatch,
                format!("server speaks protocol {PROTOCOL_VERSION}, client sent {}", h.protocol_version),
            ));
        }
        if let Some(want) = &self.cfg.token {
            if h.token.as_deref() != Some(want.as_str()) {
                return Err(ErrorMsg::new(ErrorCode::Unauthorized, "bad or missing token"));
            }
        }
        let announce = Message::LayoutAnnounce(self.announcement());
        let c = self.clients.get_mut(&client).expect("checked by dispatch");
        if c.ready() {
            return Err(ErrorMsg::new(ErrorCode::BadMessage, "duplicate hello"));
        }
        c.name = Some(h.client_name);
        c.outbox.control.push_back(announce);
        for f in self.latest.values() {
            c.outbox.offer_frame(f);
        }
        c.wake();
        Ok(())
    }

    fn check_seq(&mut self, client: ClientId, seq: u64) -> Result<(), ErrorMsg> {
        let c = self.clients.get_mut(&client).expect("checked by dispatch");
        if let Some(last) = c.last_seq {
            if seq <= last {
                return Err(ErrorMsg::new(
                    ErrorCode::OutOfOrder,
                    format!("client_seq {seq} does not follow {last}"),
                ));
            }
        }
        c.last_seq = Some(seq);
        Ok(())
    }

    /// Maps and injects one input event. See [`handle_input`].
    pub fn input(&mut self, e: &InputEventMsg) -> Result<InjectionOutcome, ErrorMsg> {
        handle_input(e, &self.layout, self.bridge.as_ref(), &self.handle, self.cfg.auto_scroll)
    }

    /// Stores a client-moved pose after snapping and input-mode selection, and
    /// broadcasts the result to every client.
    pub fn handle_panel_transform(&mut self, t: &PanelTransformMsg) -> Result<PanelStateMsg, ErrorMsg> {
        let i = self
            .layout
            .panels
            .iter()
            .position(|p| p.id == t.panel_id)
            .ok_or_else(|| ErrorMsg::new(ErrorCode::UnknownPanel, format!("no panel {:?}", t.panel_id)))?;
        t.pose
            .validate()
            .map_err(|e| ErrorMsg::new(ErrorCode::InvalidInput, e.to_string()))?;
        let prev = self.states[i].input_mode;
        self.states[i] = apply_transform(&t.pose, prev, self.layout.panels[i].interaction_hint, &self.cfg.policy);
        let msg = self.state_msg(i);
        self.broadcast(Message::PanelState(msg.clone()));
        Ok(msg)
    }

    /// Decomposes one captured frame and queues the changed panels to every
    /// client. Returns the panel frames in layout order.
    pub fn ingest_frame(&mut self, f: &SourceFrame) -> Vec<PanelFrame> {
        let frames = decompose_frame(f, &self.layout, &mut self.cache);
        self.broadcast_panel_frames(&frames);
        frames
    }

    /// Captures the next frame from the bridge and ingests it.
    pub fn pump_frame(&mut self) -> Result<Vec<PanelFrame>, BridgeError> {
        let f = self.bridge.next_frame(&self.handle)?;
        Ok(self.ingest_frame(&f))
    }

    pub fn broadcast_panel_frames(&mut self, frames: &[PanelFrame]) {
        if frames.is_empty() {
            return;
        }
        let mut msgs = Vec::with_capacity(frames.len());
        for f in frames {
            match PanelFrameMsg::from_panel_frame(f, self.cfg.frame_format) {
                Ok(m) => msgs.push(m),
                Err(e) => {
                    tracing::warn!(panel = %f.panel_id, error = %e, "dropping panel frame");
                    self.cache.invalidate(&f.panel_id);
                }
            }
        }
        for m in &msgs {
            self.latest.insert(m.panel_hash, m.clone());
        }
        for c in self.clients.values_mut().filter(|c| c.ready()) {
            let mut any = false;
            for m in &msgs {
                any |= c.outbox.offer_frame(m);
            }
            if any {
                c.wake();
            }
        }
    }

    fn broadcast(&mut self, m: Message) {
        for c in self.clients.values_mut().filter(|c| c.ready()) {
            c.outbox.control.push_back(m.clone());
            c.wake();
        }
    }

    fn send(&mut self, client: ClientId, m: Message) {
        if let Some(c) = self.clients.get_mut(&client) {
            c.outbox.control.push_back(m);
            c.wake();
        }
    }

    /// Takes everything queued for `client`: control messages first, then
    /// the pending panel frames in panel-hash order.
    pub fn drain(&mut self, client: ClientId) -> Vec<Message> {
        let Some(c) = self.clients.get_mut(&client) else {
            return Vec::new();
        };
        let mut out: Vec<Message> = c.outbox.control.drain(..).collect();
        for (hash, f) in std::mem::take(&mut c.outbox.frames) {
            c.outbox.delivered.insert(hash, f.source_seq);
            out.push(Message::PanelFrame(f));
        }
        out
    }

    /// Queues an error for `client`, e.g. for a frame that failed to decode.
    pub fn send_error(&mut self, client: ClientId, e: ErrorMsg) {
        self.send(client, Message::Error(e));
    }

    pub fn has_pending(&self, client: ClientId) -> bool {
        self.clients
            .get(&client)
            .is_some_and(|c| !c.outbox.control.is_empty() || !c.outbox.frames.is_empty())
    }
}
