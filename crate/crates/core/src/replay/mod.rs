//! Scripted sessions against the mock browser on a virtual clock.
//!
//! A script's steps and the capture cadence are merged on one timeline.
//! Steps scheduled at the same millisecond as a frame run before it. One
//! in-process client is attached and drained after every step and frame, so
//! the report sees exactly what a prompt client would receive.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bridge::{BridgeError, MockBridge, Seq};
use crate::clock::{Clock, VirtualClock};
use crate::config::ServerConfig;
use crate::layout::{LayoutStore, LoadError};
use crate::protocol::{ErrorCode, Hello, InputEventMsg, Message, PanelTransformMsg, PROTOCOL_VERSION};
use crate::session::{ClientId, Session, SessionError};

mod report;
mod script;

pub use report::{assert_sync, AssertionResult, Batch, LatencyStats, ReplayReport, SyncTrace};
pub use script::{parse_script, Expectation, ReplayScript, ScriptError, ScriptInput, ScriptTransform, Step, StepAction, SCRIPT_EXTENSION};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("script: {0}")]
    Script(#[from] ScriptError),
    #[error("layouts: {0}")]
    Layouts(#[from] LoadError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("bridge: {0}")]
    Bridge(#[from] BridgeError),
    #[error("client rejected: {0}")]
    Handshake(String),
}

/// A finished run: the deterministic report plus wall-clock measurements
/// that are kept out of it.
#[derive(Debug, Clone)]
pub struct ReplayRun {
    pub report: ReplayReport,
    pub trace: SyncTrace,
    /// Input receipt to injection per successful input, wall clock.
    pub wall_latency_ms: Vec<f64>,
}

struct Runner {
    clock: VirtualClock,
    mock: Arc<MockBridge>,
    session: Session,
    client: ClientId,
    ids: BTreeMap<u32, String>,
    trace: SyncTrace,
    frames: u64,
    next_seq: u64,
    last_error: Option<ErrorCode>,
    log_cursor: usize,
    virtual_latency: Vec<f64>,
    wall_latency: Vec<f64>,
}

impl Runner {
    fn capture(&mut self, count: u32) -> Result<(), ReplayError> {
        for _ in 0..count {
            let f = self.session.bridge().next_frame(self.session.handle())?;
            let out = self.session.ingest_frame(&f);
            self.frames += 1;
            self.trace.batches.push(Batch {
                frame_seq: f.seq,
                panels: out.iter().map(|p| (p.panel_id.clone(), p.source_seq)).collect(),
            });
            self.drain();
        }
        Ok(())
    }

    fn drain(&mut self) {
        for m in self.session.drain(self.client) {
            if let Message::PanelFrame(f) = m {
                let id = self.ids.get(&f.panel_hash).cloned().unwrap_or_else(|| format!("#{:08x}", f.panel_hash));
                self.trace.deliveries.push((id, f.source_seq));
            }
        }
    }

    fn seq(&mut self, explicit: Option<u64>) -> u64 {
        let s = explicit.unwrap_or(self.next_seq);
        self.next_seq = self.next_seq.max(s) + 1;
        s
    }

    fn send(&mut self, m: Message) {
        let receipt = self.clock.now_ms();
        let wall = Instant::now();
        let is_input = matches!(m, Message::InputEvent(_));
        let r = self.session.handle_message(self.client, m);
        if is_input && r.is_ok() {
            self.wall_latency.push(wall.elapsed().as_secs_f64() * 1000.0);
            self.virtual_latency.push((self.clock.now_ms() - receipt) as f64);
        }
        self.last_error = r.err().map(|e| e.code);
    }

    fn check(&mut self, e: &Expectation) -> Result<(), String> {
        match e {
            Expectation::Injected(want) => {
                let log = self
                    .mock
                    .injected_events(self.session.handle())
                    .map_err(|e| e.to_string())?;
                let got: Vec<_> = log[self.log_cursor..].iter().map(|e| e.action.clone()).collect();
                self.log_cursor = log.len();
                if &got == want {
                    Ok(())
                } else {
                    Err(format!(
                        "expected {}, got {}",
                        serde_json::to_string(want).unwrap(),
                        serde_json::to_string(&got).unwrap()
                    ))
                }
            }
            Expectation::PanelState {
                panel_id,
                input_mode,
                anchored,
            } => {
                let s = self
                    .session
                    .panel_state(panel_id)
                    .ok_or_else(|| format!("no panel {panel_id:?}"))?;
                let mut problems = Vec::new();
                if input_mode.is_some_and(|m| m != s.input_mode) {
                    problems.push(format!("input_mode is {:?}", s.input_mode));
                }
                if anchored.is_some_and(|a| a != s.anchored) {
                    problems.push(format!("anchored is {}", s.anchored));
                }
                if problems.is_empty() {
                    Ok(())
                } else {
                    Err(problems.join(", "))
                }
            }
            Expectation::Sync => assert_sync(&self.trace),
            Expectation::Error { code } => {
                if *code == self.last_error {
                    Ok(())
                } else {
                    Err(format!("last outcome was {:?}", self.last_error.map(ErrorCode::as_str)))
                }
            }
            Expectation::Scroll { x, y } => {
                let m = self
                    .session
                    .bridge()
                    .query_metrics(self.session.handle())
                    .map_err(|e| e.to_string())?;
                if (m.scroll_x, m.scroll_y) == (*x, *y) {
                    Ok(())
                } else {
                    Err(format!("scroll is ({}, {})", m.scroll_x, m.scroll_y))
                }
            }
        }
    }
}

/// Runs `script` against a fresh mock page.
///
/// Assertion failures are recorded in the report and the run continues;
/// setup or bridge failures abort with an error.
pub fn run_script(script: &ReplayScript, cfg: &ServerConfig) -> Result<ReplayRun, ReplayError> {
    script.validate()?;
    let clock = VirtualClock::new(0);
    let mock = Arc::new(
        MockBridge::with_clock(Arc::new(clock.clone()))
            .viewport(cfg.mock.viewport_w, cfg.mock.viewport_h)
            .device_scale(cfg.mock.device_scale),
    );
    let mut store = LayoutStore::with_builtins();
    if let Some(dir) = &cfg.layout_dir {
        store.load_dir(dir)?;
    }
    let layout = script.layout.as_deref().or(cfg.layout.as_deref());
    let mut session = Session::open(mock.clone(), &script.url, &store, layout, cfg.session.clone())?;
    session.start_capture()?;
    let client = session.connect(None);
    let hello = Message::Hello(Hello {
        client_name: "replay".into(),
        protocol_version: PROTOCOL_VERSION,
        token: cfg.session.token.clone(),
    });
    session
        .handle_message(client, hello)
        .map_err(|e| ReplayError::Handshake(e.detail))?;
    session.drain(client);

    let ids = session.layout().panels.iter().map(|p| (p.hash, p.id.clone())).collect();
    let mut r = Runner {
        clock,
        mock,
        session,
        client,
        ids,
        trace: SyncTrace::default(),
        frames: 0,
        next_seq: 1,
        last_error: None,
        log_cursor: 0,
        virtual_latency: Vec::new(),
        wall_latency: Vec::new(),
    };

    let fps = u64::from(script.fps.unwrap_or(cfg.session.max_fps).max(1));
    let duration = script
        .duration_ms
        .unwrap_or_else(|| script.steps.last().map_or(0, |s| s.at_ms));
    let mut tick: u64 = 0;
    let frame_time = |k: u64| k * 1000 / fps;
    let mut assertions = Vec::new();

    for (i, step) in script.steps.iter().enumerate() {
        while frame_time(tick) < step.at_ms && frame_time(tick) <= duration {
            r.clock.advance_to(frame_time(tick));
            r.capture(1)?;
            tick += 1;
        }
        r.clock.advance_to(step.at_ms);
        match &step.action {
            StepAction::Input(inp) => {
                let client_seq = r.seq(inp.client_seq);
                r.send(Message::InputEvent(InputEventMsg {
                    panel_id: inp.panel_id.clone(),
                    client_seq,
                    action: inp.action.clone(),
                }));
            }
            StepAction::Transform(t) => {
                let client_seq = r.seq(t.client_seq);
                r.send(Message::PanelTransform(PanelTransformMsg {
                    panel_id: t.panel_id.clone(),
                    pose: t.pose,
                    client_seq,
                }));
            }
            StepAction::Scroll { x, y } => {
                r.session.bridge().scroll_to(r.session.handle(), *x, *y)?;
            }
            StepAction::Capture { count } => r.capture(*count)?,
            StepAction::Expect(e) => {
                let outcome = r.check(e);
                assertions.push(AssertionResult {
                    step: i,
                    at_ms: step.at_ms,
                    kind: e.kind().into(),
                    passed: outcome.is_ok(),
                    detail: outcome.err().unwrap_or_default(),
                });
            }
        }
        r.drain();
    }
    while frame_time(tick) <= duration {
        r.clock.advance_to(frame_time(tick));
        r.capture(1)?;
        tick += 1;
    }

    let log = r.mock.injected_events(r.session.handle())?;
    let digest = Sha256::digest(serde_json::to_vec(&log).expect("log serializes"));
    let mut frame_trace: BTreeMap<String, Vec<Seq>> = BTreeMap::new();
    for (id, s) in &r.trace.deliveries {
        frame_trace.entry(id.clone()).or_default().push(*s);
    }
    let sync = assert_sync(&r.trace);
    let failed = assertions.iter().filter(|a| !a.passed).count();
    let report = ReplayReport {
        layout: r.session.layout().name.clone(),
        url: script.url.clone(),
        duration_ms: duration,
        steps: script.steps.len(),
        frames_captured: r.frames,
        passed: assertions.len() - failed,
        failed,
        assertions,
        injected_events: log.len(),
        injection_digest: digest.iter().map(|b| format!("{b:02x}")).collect(),
        frame_trace,
        sync: sync.is_ok(),
        sync_detail: sync.err(),
        latency_ms: LatencyStats::from_samples(&r.virtual_latency),
    };
    Ok(ReplayRun {
        report,
        trace: r.trace,
        wall_latency_ms: r.wall_latency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> ReplayReport {
        run_script(&parse_script(text).unwrap(), &ServerConfig::default()).unwrap().report
    }

    #[test]
    fn empty_script_has_no_assertions() {
        let r = run("{}");
        assert_eq!((r.assertions.len(), r.failed), (0, 0));
        assert!(r.sync);
        assert_eq!(r.frames_captured, 1);
    }

    #[test]
    fn center_click_on_player() {
        // #movie_player is (24, 80, 853, 480): center (450.5, 320) rounds to 451
        let r = run(r#"{
            "layout": "youtube",
            "steps": [
                {"at_ms": 10, "input": {"panel_id": "player", "kind": "pointer", "phase": "down", "at": {"u": 0.5, "v": 0.5}, "button": "left"}},
                {"at_ms": 10, "expect": {"injected": [{"kind": "pointer", "phase": "down", "at": {"x": 451, "y": 320}, "button": "left", "modifiers": 0}]}},
                {"at_ms": 10, "expect": {"error": {"code": null}}}
            ]
        }"#);
        assert!(r.success(), "{}", r.to_json());
        assert_eq!(r.injected_events, 1);
    }

    #[test]
    fn moving_far_switches_to_ray() {
        let r = run(r#"{
            "layout": "youtube",
            "steps": [
                {"at_ms": 0, "transform": {"panel_id": "controls", "pose": {"position": [0, 0.45, -0.9], "orientation": [0, 0, 0, 1], "size": [0.5, 0.1]}}},
                {"at_ms": 0, "expect": {"panel-state": {"panel_id": "controls", "input_mode": "ray", "anchored": false}}},
                {"at_ms": 5, "transform": {"panel_id": "controls", "pose": {"position": [0, 0.02, -0.3], "orientation": [0, 0, 0, 1], "size": [0.5, 0.1]}}},
                {"at_ms": 5, "expect": {"panel-state": {"panel_id": "controls", "input_mode": "touch", "anchored": true}}}
            ]
        }"#);
        assert!(r.success(), "{}", r.to_json());
    }

    #[test]
    fn failed_expectations_are_recorded() {
        let r = run(r#"{
            "layout": "youtube",
            "steps": [
                {"at_ms": 0, "input": {"panel_id": "nope", "kind": "pointer", "phase": "down", "at": {"u": 0.5, "v": 0.5}}},
                {"at_ms": 0, "expect": {"error": {"code": "unknown-panel"}}},
                {"at_ms": 0, "expect": {"scroll": {"x": 0, "y": 1}}}
            ]
        }"#);
        assert_eq!((r.passed, r.failed), (1, 1));
        assert!(r.assertions[1].detail.contains("scroll is (0, 0)"));
    }

    #[test]
    fn reports_are_byte_identical() {
        let s = r#"{
            "layout": "youtube", "duration_ms": 2000,
            "steps": [
                {"at_ms": 100, "scroll": {"x": 0, "y": 300}},
                {"at_ms": 500, "input": {"panel_id": "comments", "kind": "pointer", "phase": "down", "at": {"u": 0.2, "v": 0.9}}},
                {"at_ms": 900, "input": {"panel_id": "comments", "kind": "wheel", "at": {"u": 0.5, "v": 0.5}, "delta_x": 0, "delta_y": 120}},
                {"at_ms": 1500, "expect": "sync"}
            ]
        }"#;
        let a = run(s).to_json();
        assert_eq!(a, run(s).to_json());
        assert!(run(s).success());
    }
}
