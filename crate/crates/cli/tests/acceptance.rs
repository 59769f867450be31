//! Acceptance suite. Prints one `PASS`, `FAIL` or `WARN` line per criterion
//! and exits non-zero if any criterion fails. `WARN` is reserved for the soft
//! latency budget.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

use btw_core::bitmap::Bitmap;
use btw_core::bridge::{
    BrowserBridge, InjectPoint, InjectedAction, KeyAction, KeyDescriptor, MockBridge, Modifiers, MouseButton, PageHandle,
    PointerKind,
};
use btw_core::config::{ServerConfig, SessionConfig};
use btw_core::decomposer::{crop_bitmap, decompose_frame, resolve_layout, DecomposeCache, RegionSource};
use btw_core::layout::{
    builtin_presets, Anchoring, Distance, InteractionHint, LayoutDocument, LayoutStore, PanelSpec, PlacementHint, Region,
    Role, Zone,
};
use btw_core::policy::{input_mode, InputMode};
use btw_core::protocol::{
    decode_binary, decode_message, decode_text, encode_message, encode_png, ErrorCode, ErrorMsg, Frame, FrameFormat,
    Hello, InputAction, InputEventMsg, Message, PanelFrameMsg, PanelStateMsg, PanelTransformMsg,
};
use btw_core::replay::{run_script, Expectation, ReplayRun, ReplayScript, ScriptInput, Step, StepAction};
use btw_core::session::{handle_input, Session};
use btw_core::{FrameRect, PanelPose, PanelSize, PolicyConfig, Quat, RegionRect, UnitPoint, Vec3};

type Criterion = (&'static str, fn() -> Verdict);

enum Verdict {
    Pass(String),
    Fail(String),
    Warn(String),
}

use Verdict::{Fail, Pass, Warn};

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn within_budget(ok: bool, detail: String, started: Instant, budget: Duration) -> Verdict {
    let took = started.elapsed();
    if took >= budget {
        return Fail(format!("{detail}; took {took:.2?}, budget {budget:?}"));
    }
    check(ok, detail)
}

// ---------------------------------------------------------------- crop

fn naive_crop(src: &Bitmap, r: FrameRect) -> Vec<u8> {
    let mut out = Vec::with_capacity(r.w as usize * r.h as usize * 4);
    for y in r.y..r.y + r.h {
        for x in r.x..r.x + r.w {
            out.extend_from_slice(&src.pixel(x, y));
        }
    }
    out
}

fn crop_bit_exactness() -> Verdict {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xC0FFEE);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let (w, h) = (rng.random_range(1..=256u32), rng.random_range(1..=256u32));
        let mut data = vec![0u8; (w * h * 4) as usize];
        rng.fill(&mut data[..]);
        let src = Bitmap::from_raw(w, h, data).unwrap();
        let (x, y) = (rng.random_range(0..w), rng.random_range(0..h));
        let r = FrameRect::new(x, y, rng.random_range(1..=w - x), rng.random_range(1..=h - y));
        let got = crop_bitmap(&src, r).unwrap();
        if (got.width(), got.height()) != (r.w, r.h) || got.as_bytes() != naive_crop(&src, r).as_slice() {
            mismatches += 1;
        }
    }
    within_budget(
        mismatches == 0,
        format!("1000 cases, {mismatches} mismatches"),
        started,
        Duration::from_secs(10),
    )
}

// ---------------------------------------------------------------- input round trip

fn round_half_away(v: f64) -> i64 {
    let m = (v.abs() + 0.5).floor() as i64;
    if v < 0.0 {
        -m
    } else {
        m
    }
}

fn quarter(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    let steps = ((hi - lo) * 4.0) as u32;
    lo + f64::from(rng.random_range(0..=steps)) / 4.0
}

fn one_panel(rect: RegionRect) -> LayoutDocument {
    LayoutDocument {
        name: "probe".into(),
        site_pattern: "*".into(),
        panels: vec![PanelSpec {
            id: "p".into(),
            display_name: "Probe".into(),
            role: Role::PrimaryContent,
            region: Region::Rect(rect),
            anchoring: Anchoring::Document,
            placement_hint: PlacementHint::new(Zone::MidairCenter, Distance::Mid),
            interaction_hint: InteractionHint::Auto,
        }],
    }
}

fn input_round_trip() -> Verdict {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x1A9E7);
    let mut bad = Vec::new();
    let mut scrolled = 0;
    for case in 0..500 {
        let scale = [1.0, 1.25, 1.5, 2.0][rng.random_range(0..4)];
        let mock = MockBridge::new().device_scale(scale);
        let h = mock.navigate("mock://grid").unwrap();
        let m0 = mock.query_metrics(&h).unwrap();
        let (doc_w, doc_h, vw, vh) = (m0.document_w, m0.document_h, m0.viewport_w, m0.viewport_h);
        let sx = quarter(&mut rng, 0.0, doc_w - vw);
        let sy = quarter(&mut rng, 0.0, doc_h - vh);
        mock.scroll_to(&h, sx, sy).unwrap();
        let x = quarter(&mut rng, 0.0, doc_w - 1.0);
        let y = quarter(&mut rng, 0.0, doc_h - 1.0);
        let rect = RegionRect::new(x, y, quarter(&mut rng, 1.0, doc_w - x), quarter(&mut rng, 1.0, doc_h - y));
        let rl = resolve_layout(&one_panel(rect), &mock, &h).unwrap();
        let (u, v) = (f64::from(rng.random_range(0..=64u32)) / 64.0, f64::from(rng.random_range(0..=64u32)) / 64.0);
        let auto = rng.random_bool(0.5);

        let (dx, dy) = (rect.x + u * rect.w, rect.y + v * rect.h);
        let (rx, ry) = (round_half_away(dx - sx), round_half_away(dy - sy));
        let visible = (0..=vw as i64).contains(&rx) && (0..=vh as i64).contains(&ry);
        let down = |x: i64, y: i64| InjectedAction::Pointer {
            phase: PointerKind::Down,
            at: InjectPoint { x: x as i32, y: y as i32 },
            button: MouseButton::Left,
            modifiers: Modifiers::default(),
        };
        let expected: Option<Vec<InjectedAction>> = if visible {
            Some(vec![down(rx, ry)])
        } else if auto {
            let nsx = (dx - vw / 2.0).clamp(0.0, doc_w - vw);
            let nsy = (dy - vh / 2.0).clamp(0.0, doc_h - vh);
            Some(vec![
                InjectedAction::ScrollTo { x: nsx, y: nsy },
                down(round_half_away(dx - nsx), round_half_away(dy - nsy)),
            ])
        } else {
            None
        };

        let before = mock.injected_events(&h).unwrap().len();
        let e = InputEventMsg {
            panel_id: "p".into(),
            client_seq: case,
            action: InputAction::Pointer {
                phase: PointerKind::Down,
                at: UnitPoint::new(u, v).unwrap(),
                button: MouseButton::Left,
                modifiers: Modifiers::default(),
            },
        };
        let r = handle_input(&e, &rl, &mock, &h, auto);
        let logged: Vec<InjectedAction> =
            mock.injected_events(&h).unwrap()[before..].iter().map(|e| e.action.clone()).collect();
        let ok = match &expected {
            Some(want) => r.is_ok() && &logged == want,
            None => matches!(&r, Err(e) if e.code == ErrorCode::OutOfViewport) && logged.is_empty(),
        };
        if expected.as_ref().is_some_and(|w| w.len() == 2) {
            scrolled += 1;
        }
        if !ok && bad.len() < 3 {
            bad.push(format!("case {case}: expected {expected:?}, logged {logged:?}, result {r:?}"));
        }
    }
    within_budget(
        bad.is_empty(),
        format!("500 cases ({scrolled} auto-scrolled){}", if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }),
        started,
        Duration::from_secs(10),
    )
}

// ---------------------------------------------------------------- 60 s replay

const PANELS: [&str; 4] = ["player", "controls", "comments", "recommendations"];

fn pointer(panel: &str, phase: PointerKind, u: f64, v: f64) -> StepAction {
    StepAction::Input(ScriptInput {
        panel_id: panel.into(),
        client_seq: None,
        action: InputAction::Pointer {
            phase,
            at: UnitPoint::new(u, v).unwrap(),
            button: MouseButton::Left,
            modifiers: Modifiers::default(),
        },
    })
}

/// Clicks, drags, wheel turns and page scrolls interleaved over a minute.
fn minute_script() -> ReplayScript {
    let mut rng = StdRng::seed_from_u64(60);
    let mut steps = Vec::new();
    let mut at_ms = 0;
    loop {
        at_ms += rng.random_range(40..400);
        if at_ms > 59_800 {
            break;
        }
        let panel = PANELS[rng.random_range(0..PANELS.len())];
        let (u, v) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        match rng.random_range(0..10) {
            0..=4 => {
                steps.push(Step { at_ms, action: pointer(panel, PointerKind::Down, u, v) });
                steps.push(Step {
                    at_ms,
                    action: StepAction::Expect(Expectation::Error { code: None }),
                });
                steps.push(Step { at_ms: at_ms + 30, action: pointer(panel, PointerKind::Move, u, v * 0.9) });
                steps.push(Step { at_ms: at_ms + 60, action: pointer(panel, PointerKind::Up, u, v * 0.9) });
                at_ms += 60;
            }
            5 | 6 => steps.push(Step {
                at_ms,
                action: StepAction::Scroll {
                    x: 0.0,
                    y: f64::from(rng.random_range(0..=22u32)) * 100.0,
                },
            }),
            7 => steps.push(Step {
                at_ms,
                action: StepAction::Input(ScriptInput {
                    panel_id: panel.into(),
                    client_seq: None,
                    action: InputAction::Wheel {
                        at: UnitPoint::new(u, v).unwrap(),
                        delta_x: 0.0,
                        delta_y: f64::from(rng.random_range(-3..=3i32)) * 120.0,
                    },
                }),
            }),
            _ => steps.push(Step {
                at_ms,
                action: StepAction::Expect(Expectation::Sync),
            }),
        }
    }
    steps.push(Step {
        at_ms: 60_000,
        action: StepAction::Expect(Expectation::Sync),
    });
    ReplayScript {
        layout: Some("youtube".into()),
        url: "https://www.youtube.com/watch?v=mock".into(),
        fps: Some(15),
        duration_ms: Some(60_000),
        steps,
    }
}

fn minute_runs() -> &'static [Result<ReplayRun, String>] {
    static RUNS: OnceLock<Vec<Result<ReplayRun, String>>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let script = minute_script();
        let cfg = ServerConfig::default();
        std::thread::scope(|s| {
            let runs: Vec<_> = (0..3)
                .map(|_| s.spawn(|| run_script(&script, &cfg).map_err(|e| e.to_string())))
                .collect();
            runs.into_iter().map(|r| r.join().expect("replay thread panicked")).collect()
        })
    })
}

fn synchronization() -> Verdict {
    let run = match &minute_runs()[0] {
        Ok(r) => r,
        Err(e) => return Fail(format!("replay failed: {e}")),
    };
    let r = &run.report;
    let mixed = run
        .trace
        .batches
        .iter()
        .filter(|b| b.panels.iter().any(|(_, s)| *s != b.frame_seq))
        .count();
    let regressions: usize = r
        .frame_trace
        .values()
        .map(|seqs| seqs.windows(2).filter(|w| w[1] < w[0]).count())
        .sum();
    let sync_asserts = r.assertions.iter().filter(|a| a.kind == "sync").count();
    check(
        r.sync && mixed == 0 && regressions == 0 && r.success(),
        format!(
            "{} ms, {} frames, {} batches, {} injected events, {} sync assertions, {}/{} assertions passed, {mixed} mixed batches, {regressions} regressions",
            r.duration_ms,
            r.frames_captured,
            run.trace.batches.len(),
            r.injected_events,
            sync_asserts,
            r.passed,
            r.assertions.len()
        ),
    )
}

fn determinism() -> Verdict {
    let runs = minute_runs();
    let reports: Result<Vec<String>, &String> = runs.iter().map(|r| r.as_ref().map(|r| r.report.to_json())).collect();
    match reports {
        Err(e) => Fail(format!("replay failed: {e}")),
        Ok(reports) => {
            let same = reports.iter().all(|r| r == &reports[0]);
            check(same, format!("3 runs, {} report bytes each, identical: {same}", reports[0].len()))
        }
    }
}

fn latency_budget() -> Verdict {
    let run = match &minute_runs()[0] {
        Ok(r) => r,
        Err(e) => return Fail(format!("replay failed: {e}")),
    };
    let s = btw_core::replay::LatencyStats::from_samples(&run.wall_latency_ms);
    let detail = format!("median {:.4} ms, max {:.4} ms over {} inputs", s.median, s.max, s.count);
    if s.count > 0 && s.median < 5.0 {
        Pass(detail)
    } else {
        Warn(format!("{detail}; target is < 5 ms"))
    }
}

// ---------------------------------------------------------------- scroll compensation

fn scroll_compensation() -> Verdict {
    let youtube = builtin_presets().into_iter().find(|d| d.name == "youtube").unwrap();
    let mut details = Vec::new();
    let mut ok = true;
    for scale in [1.0, 1.5, 2.0] {
        let mock = MockBridge::new().device_scale(scale);
        let h = mock.navigate("mock://grid").unwrap();
        let rl = resolve_layout(&youtube, &mock, &h).unwrap();
        mock.start_capture(&h, 15).unwrap();
        let comments = |h: &PageHandle| {
            let f = mock.next_frame(h).unwrap();
            decompose_frame(&f, &rl, &mut DecomposeCache::new())
                .into_iter()
                .find(|p| p.panel_id == "comments")
                .unwrap()
        };
        let a = comments(&h);
        mock.scroll_to(&h, 0.0, 200.0).unwrap();
        let b = comments(&h);
        let shift = (200.0 * scale) as u32;
        let (Some(ab), Some(bb)) = (&a.bitmap, &b.bitmap) else {
            ok = false;
            details.push(format!("scale {scale}: comments off-viewport"));
            continue;
        };
        let origin_ok = b.crop.x == a.crop.x && a.crop.y.checked_sub(b.crop.y) == Some(shift);
        let rows = a.crop.h.min(b.crop.h);
        let same = (0..rows).all(|y| ab.row(y) == bb.row(y));
        ok &= origin_ok && same && rows > 0;
        details.push(format!(
            "scale {scale}: y {} -> {} (shift {}), {rows} overlapping rows identical: {same}",
            a.crop.y,
            b.crop.y,
            i64::from(a.crop.y) - i64::from(b.crop.y)
        ));
    }
    check(ok, details.join("; "))
}

// ---------------------------------------------------------------- hysteresis

fn hysteresis() -> Verdict {
    let cfg = PolicyConfig::default();
    let sweep: Vec<f64> = (0..=120).chain((0..120).rev()).map(|cm| f64::from(cm) / 100.0).collect();
    let mut mode = input_mode(sweep[0], InputMode::Touch, &cfg);
    let mut transitions = Vec::new();
    for &d in &sweep[1..] {
        let next = input_mode(d, mode, &cfg);
        if next != mode {
            transitions.push(format!("{mode:?}->{next:?} at {d:.2} m"));
        }
        mode = next;
    }
    check(
        transitions.len() == 2,
        format!("d_touch {} m, d_ray {} m: {} transitions ({})", cfg.d_touch, cfg.d_ray, transitions.len(), transitions.join(", ")),
    )
}

// ---------------------------------------------------------------- codec

const ALPHABET: &[char] = &['a', 'Z', '0', ' ', '"', '\\', '/', '\n', '\u{0}', '\u{1f}', 'é', '✓', '😀', '{', '}'];

fn string(rng: &mut StdRng) -> String {
    (0..rng.random_range(0..12)).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
}

fn float(rng: &mut StdRng) -> f64 {
    match rng.random_range(0..4) {
        0 => 0.0,
        1 => f64::from(rng.random_range(-1000..1000i32)) / 8.0,
        _ => rng.random_range(-1e6..1e6),
    }
}

fn pose(rng: &mut StdRng) -> PanelPose {
    let q = loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 0.1 {
            break Quat::from(q.map(|c| c / n));
        }
    };
    PanelPose {
        position: Vec3::lit(float(rng), float(rng), float(rng)),
        orientation: q,
        size: PanelSize {
            w: rng.random_range(0.01..3.0),
            h: rng.random_range(0.01..3.0),
        },
    }
}

fn unit(rng: &mut StdRng) -> UnitPoint {
    UnitPoint::new(rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0)).unwrap()
}

fn modifiers(rng: &mut StdRng) -> Modifiers {
    Modifiers(rng.random_range(0..16))
}

fn button(rng: &mut StdRng) -> MouseButton {
    [MouseButton::None, MouseButton::Left, MouseButton::Middle, MouseButton::Right][rng.random_range(0..4)]
}

fn input_action(rng: &mut StdRng) -> InputAction {
    match rng.random_range(0..3) {
        0 => InputAction::Pointer {
            phase: [PointerKind::Down, PointerKind::Move, PointerKind::Up][rng.random_range(0..3)],
            at: unit(rng),
            button: button(rng),
            modifiers: modifiers(rng),
        },
        1 => InputAction::Wheel {
            at: unit(rng),
            delta_x: float(rng),
            delta_y: float(rng),
        },
        _ => InputAction::Key {
            key: KeyDescriptor {
                key: string(rng),
                code: rng.random_bool(0.5).then(|| string(rng)),
                text: rng.random_bool(0.5).then(|| string(rng)),
                action: [KeyAction::Down, KeyAction::Up, KeyAction::Press][rng.random_range(0..3)],
                modifiers: modifiers(rng),
            },
        },
    }
}

fn panel_frame(rng: &mut StdRng) -> PanelFrameMsg {
    let (panel_hash, source_seq) = (rng.random(), rng.random());
    if rng.random_range(0..5) == 0 {
        return PanelFrameMsg {
            panel_hash,
            source_seq,
            x: 0,
            y: 0,
            w: 0,
            h: 0,
            format: FrameFormat::Raw,
            payload: Vec::new(),
        };
    }
    let (w, h) = (rng.random_range(1..=24u16), rng.random_range(1..=24u16));
    let mut pixels = vec![0u8; usize::from(w) * usize::from(h) * 4];
    rng.fill(&mut pixels[..]);
    let png = rng.random_bool(0.5);
    let payload = if png {
        encode_png(&Bitmap::from_raw(u32::from(w), u32::from(h), pixels).unwrap()).unwrap()
    } else {
        pixels
    };
    PanelFrameMsg {
        panel_hash,
        source_seq,
        x: rng.random(),
        y: rng.random(),
        w,
        h,
        format: if png { FrameFormat::Png } else { FrameFormat::Raw },
        payload,
    }
}

const CODES: [ErrorCode; 8] = [
    ErrorCode::UnknownPanel,
    ErrorCode::OutOfViewport,
    ErrorCode::InvalidInput,
    ErrorCode::VersionMismatch,
    ErrorCode::Unauthorized,
    ErrorCode::OutOfOrder,
    ErrorCode::BadMessage,
    ErrorCode::BridgeError,
];

fn message(rng: &mut StdRng, announcements: &[Message]) -> Message {
    match rng.random_range(0..7) {
        0 => Message::Hello(Hello {
            client_name: string(rng),
            protocol_version: rng.random(),
            token: rng.random_bool(0.5).then(|| string(rng)),
        }),
        1 => announcements[rng.random_range(0..announcements.len())].clone(),
        2 => Message::PanelFrame(panel_frame(rng)),
        3 => Message::InputEvent(InputEventMsg {
            panel_id: string(rng),
            client_seq: rng.random(),
            action: input_action(rng),
        }),
        4 => Message::PanelTransform(PanelTransformMsg {
            panel_id: string(rng),
            pose: pose(rng),
            client_seq: rng.random(),
        }),
        5 => Message::PanelState(PanelStateMsg {
            panel_id: string(rng),
            pose: pose(rng),
            anchored: rng.random_bool(0.5),
            input_mode: if rng.random_bool(0.5) { InputMode::Touch } else { InputMode::Ray },
        }),
        _ => Message::Error(ErrorMsg::new(CODES[rng.random_range(0..CODES.len())], string(rng))),
    }
}

fn frame_bytes(f: Frame) -> (bool, Vec<u8>) {
    match f {
        Frame::Text(t) => (true, t.into_bytes()),
        Frame::Binary(b) => (false, b),
    }
}

fn mutate(rng: &mut StdRng, mut b: Vec<u8>) -> Vec<u8> {
    for _ in 0..rng.random_range(1..=4) {
        match rng.random_range(0..5) {
            0 if !b.is_empty() => {
                let i = rng.random_range(0..b.len());
                b[i] = rng.random();
            }
            1 if !b.is_empty() => {
                let i = rng.random_range(0..b.len());
                b[i] ^= 1 << rng.random_range(0..8);
            }
            2 => {
                let i = rng.random_range(0..=b.len());
                b.insert(i, rng.random());
            }
            3 if !b.is_empty() => {
                b.remove(rng.random_range(0..b.len()));
            }
            _ => {
                let n = rng.random_range(0..=b.len());
                b.truncate(n);
            }
        }
    }
    b
}

fn announcements() -> Vec<Message> {
    builtin_presets()
        .into_iter()
        .map(|doc| {
            let mock = Arc::new(MockBridge::new());
            let h = mock.navigate("mock://grid").unwrap();
            let s = Session::with_layout(mock, h, doc, SessionConfig::default()).unwrap();
            Message::LayoutAnnounce(s.announcement())
        })
        .collect()
}

fn codec_robustness() -> Verdict {
    let mut rng = StdRng::seed_from_u64(0xF022);
    let announcements = announcements();

    let mut round_trip_failures = 0;
    let mut valid: Vec<(bool, Vec<u8>)> = Vec::new();
    let mut kinds = std::collections::BTreeSet::new();
    for _ in 0..10_000 {
        let m = message(&mut rng, &announcements);
        kinds.insert(m.kind());
        let f = encode_message(&m);
        if decode_message(&f).as_ref() != Ok(&m) {
            round_trip_failures += 1;
        }
        valid.push(frame_bytes(f));
    }

    let mut crashes = 0;
    let mut bad_offsets = 0;
    for i in 0..100_000 {
        let bytes = match i % 3 {
            0 => {
                let mut b = vec![0u8; rng.random_range(0..96)];
                rng.fill(&mut b[..]);
                if rng.random_bool(0.3) && !b.is_empty() {
                    b[0] = b'{';
                }
                b
            }
            _ => {
                let (_, b) = valid[rng.random_range(0..valid.len())].clone();
                mutate(&mut rng, b)
            }
        };
        let r = catch_unwind(AssertUnwindSafe(|| {
            let t = decode_text(&bytes);
            let b = decode_binary(&bytes);
            let m = String::from_utf8(bytes.clone()).ok().map(|s| decode_message(&Frame::Text(s)));
            [Some(t), Some(b), m]
                .into_iter()
                .flatten()
                .filter_map(Result::err)
                .all(|e| e.offset <= bytes.len())
        }));
        match r {
            Ok(true) => {}
            Ok(false) => bad_offsets += 1,
            Err(_) => crashes += 1,
        }
    }
    check(
        crashes == 0 && bad_offsets == 0 && round_trip_failures == 0,
        format!(
            "100000 fuzzed inputs: {crashes} crashes, {bad_offsets} out-of-range error offsets; 10000 generated messages over {} kinds: {round_trip_failures} round-trip failures",
            kinds.len()
        ),
    )
}

// ---------------------------------------------------------------- presets

fn presets() -> Verdict {
    let mut details = Vec::new();
    let mut ok = true;
    let store = LayoutStore::with_builtins();
    for doc in builtin_presets() {
        let valid = doc.validate().is_ok();
        let mock = MockBridge::new();
        let h = mock.navigate("mock://grid").unwrap();
        let resolved = match resolve_layout(&doc, &mock, &h) {
            Ok(rl) => rl.panels.iter().filter(|p| p.source == RegionSource::Selector).count(),
            Err(_) => 0,
        };
        let matched = store.get(&doc.name).is_some();
        ok &= valid && matched && resolved == doc.panels.len();
        details.push(format!("{}: valid {valid}, {resolved}/{} selectors resolved", doc.name, doc.panels.len()));
    }
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_btw"))
        .args(["layout", "validate"])
        .output()
        .expect("run btw");
    ok &= out.status.code() == Some(0) && details.len() == 3;
    details.push(format!("`btw layout validate` exit {:?}", out.status.code()));
    check(ok, details.join("; "))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("crop bit-exactness", crop_bit_exactness),
        ("input round-trip", input_round_trip),
        ("synchronization invariant", synchronization),
        ("scroll compensation", scroll_compensation),
        ("hysteresis", hysteresis),
        ("codec robustness", codec_robustness),
        ("presets", presets),
        ("determinism", determinism),
        ("soft latency budget", latency_budget),
    ];
    let (mut passed, mut warned, mut failed) = (0, 0, 0);
    for (name, f) in criteria {
        let started = Instant::now();
        let v = catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        let took = started.elapsed().as_secs_f64();
        let (tag, detail) = match v {
            Pass(d) => {
                passed += 1;
                ("PASS", d)
            }
            Warn(d) => {
                warned += 1;
                ("WARN", d)
            }
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {name}: {detail} ({took:.2}s)");
    }
    println!("acceptance: {passed} passed, {warned} warned, {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
