//! Deterministic in-process page.
//!
//! Every device pixel is a pure function of its document position, the frame
//! sequence number and the number of input events received so far, so crops,
//! scrolls and injections all leave pixel-verifiable traces.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};

use url::Url;

use super::{
    BridgeError, BridgeResult, BrowserBridge, InjectPoint, InjectedAction, InjectedEvent,
    KeyDescriptor, Modifiers, MouseButton, PageHandle, PointerKind, Seq, SourceFrame,
};
use crate::bitmap::Bitmap;
use crate::clock::{Clock, VirtualClock};
use crate::geometry::{crop_rect_in_frame, crop_viewport_rect_in_frame};
use crate::{RegionRect, ViewportMetrics, ViewportPoint};

pub const DEFAULT_VIEWPORT: (f64, f64) = (1280.0, 800.0);

/// How an element moves with scrolling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Positioning {
    /// Scrolls with the document; `rect` is in document space.
    Static,
    /// `position: fixed`; `rect` is in viewport space.
    Fixed,
}

/// What an element draws over the base pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Paint {
    /// Base document pattern; the element is only a selector target.
    None,
    /// Content changes with every frame (a playing video).
    Live,
    /// Content reflects how many input events the page has received.
    Counter,
    /// Viewport-relative pattern, for fixed bars.
    Chrome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MockElement {
    pub selector: String,
    pub rect: RegionRect,
    pub positioning: Positioning,
    pub paint: Paint,
}

impl MockElement {
    fn new(selector: &str, x: f64, y: f64, w: f64, h: f64, paint: Paint) -> Self {
        Self {
            selector: selector.to_string(),
            rect: RegionRect::new(x, y, w, h),
            positioning: Positioning::Static,
            paint,
        }
    }

    fn fixed(selector: &str, x: f64, y: f64, w: f64, h: f64) -> Self {
        Self {
            positioning: Positioning::Fixed,
            ..Self::new(selector, x, y, w, h, Paint::Chrome)
        }
    }

    fn has_area(&self) -> bool {
        self.rect.w > 0.0 && self.rect.h > 0.0
    }
}

/// Synthetic document: a size plus elements in paint order.
#[derive(Debug, Clone, PartialEq)]
pub struct MockPageModel {
    pub name: String,
    pub document_w: f64,
    pub document_h: f64,
    pub elements: Vec<MockElement>,
}

impl MockPageModel {
    /// `mock://grid`: a 2000×3000 document carrying anchors for every
    /// built-in layout preset.
    pub fn grid() -> Self {
        use Paint::*;
        let e = MockElement::new;
        Self {
            name: "grid".into(),
            document_w: 2000.0,
            document_h: 3000.0,
            elements: vec![
                e("#header", 0.0, 0.0, 2000.0, 120.0, None),
                e("#content", 0.0, 120.0, 2000.0, 2880.0, None),
                e("#hidden", 0.0, 0.0, 0.0, 0.0, None),
                // map page
                e("#pane", 0.0, 0.0, 408.0, 800.0, None),
                e("#scene", 408.0, 0.0, 872.0, 800.0, None),
                e("#omnibox-container", 8.0, 8.0, 392.0, 48.0, None),
                // slide editor
                e("#docs-toolbar-wrapper", 0.0, 64.0, 1280.0, 56.0, None),
                e("#filmstrip", 0.0, 120.0, 248.0, 680.0, None),
                e("#workspace-container", 248.0, 120.0, 1032.0, 680.0, None),
                // video page
                e("#movie_player", 24.0, 80.0, 853.0, 480.0, Live),
                e(".ytp-chrome-bottom", 36.0, 512.0, 829.0, 48.0, None),
                e("#comments", 24.0, 700.0, 853.0, 1800.0, None),
                e("#secondary", 900.0, 80.0, 360.0, 2400.0, None),
                e("#counter", 1700.0, 130.0, 200.0, 60.0, Counter),
            ],
        }
    }

    /// `mock://app`: a long article under a fixed top bar.
    pub fn app() -> Self {
        Self {
            name: "app".into(),
            document_w: 1280.0,
            document_h: 4000.0,
            elements: vec![
                MockElement::new("#article", 0.0, 64.0, 1280.0, 3936.0, Paint::None),
                MockElement::new("#counter", 1000.0, 100.0, 200.0, 60.0, Paint::Counter),
                MockElement::fixed("#topbar", 0.0, 0.0, 1280.0, 64.0),
            ],
        }
    }

    /// Picks the model served for `url`. Plain web URLs get the grid page.
    pub fn for_url(url: &str) -> BridgeResult<Self> {
        let parsed = Url::parse(url).map_err(|e| BridgeError::Navigation {
            url: url.to_string(),
            reason: e.to_string(),
        })?;
        match parsed.scheme() {
            "mock" => match parsed.host_str() {
                Some("grid") => Ok(Self::grid()),
                Some("app") => Ok(Self::app()),
                other => Err(BridgeError::Navigation {
                    url: url.to_string(),
                    reason: format!("no mock page named {other:?}"),
                }),
            },
            "http" | "https" => Ok(Self::grid()),
            scheme => Err(BridgeError::Navigation {
                url: url.to_string(),
                reason: format!("unsupported scheme {scheme:?}"),
            }),
        }
    }

    pub fn element(&self, selector: &str) -> Option<&MockElement> {
        self.elements.iter().find(|e| e.selector == selector)
    }
}

/// Base pattern at document device pixel `(x, y)`.
pub fn base_pixel(x: u32, y: u32) -> [u8; 4] {
    [x as u8, y as u8, ((x >> 8) as u8) ^ ((y >> 8) as u8).wrapping_mul(37), 255]
}

pub fn live_pixel(x: u32, y: u32, seq: Seq) -> [u8; 4] {
    [
        x.wrapping_add(seq.wrapping_mul(3)) as u8,
        y.wrapping_add(seq.wrapping_mul(5)) as u8,
        0x80 ^ (seq >> 8) as u8,
        255,
    ]
}

pub fn counter_pixel(count: u64) -> [u8; 4] {
    [0xC0, count as u8, (count >> 8) as u8, 255]
}

pub fn chrome_pixel(vx: u32, vy: u32) -> [u8; 4] {
    [0x20, vx as u8, vy as u8, 255]
}

struct MockPage {
    model: MockPageModel,
    url: String,
    metrics: ViewportMetrics,
    seq: Seq,
    capturing: bool,
    input_count: u64,
    focus: Option<String>,
    log: Vec<InjectedEvent>,
}

impl MockPage {
    fn record(&mut self, action: InjectedAction) {
        if !matches!(action, InjectedAction::ScrollTo { .. }) {
            self.input_count += 1;
        }
        let index = self.log.len() as u64;
        self.log.push(InjectedEvent { index, action });
    }

    fn check_in_viewport(&self, at: InjectPoint) -> BridgeResult<()> {
        let p = ViewportPoint {
            x: at.x as f64,
            y: at.y as f64,
        };
        if crate::geometry::viewport_contains(p, &self.metrics) {
            Ok(())
        } else {
            Err(BridgeError::OutOfViewport { x: at.x, y: at.y })
        }
    }

    /// Topmost element under a viewport point.
    fn hit_test(&self, at: InjectPoint) -> Option<String> {
        let (vx, vy) = (at.x as f64, at.y as f64);
        self.model
            .elements
            .iter()
            .rev()
            .filter(|e| e.has_area())
            .find(|e| {
                let (x, y) = match e.positioning {
                    Positioning::Fixed => (vx, vy),
                    Positioning::Static => (vx + self.metrics.scroll_x, vy + self.metrics.scroll_y),
                };
                x >= e.rect.x && x < e.rect.right() && y >= e.rect.y && y < e.rect.bottom()
            })
            .map(|e| e.selector.clone())
    }

    fn render(&self) -> Bitmap {
        let m = &self.metrics;
        let (fw, fh) = m.frame_size();
        let ox = (m.scroll_x * m.device_scale).floor() as u32;
        let oy = (m.scroll_y * m.device_scale).floor() as u32;
        let mut bmp = Bitmap::new(fw, fh);
        for j in 0..fh {
            let row = bmp.row_mut(j);
            for (i, px) in row.chunks_exact_mut(4).enumerate() {
                px.copy_from_slice(&base_pixel(ox + i as u32, oy + j));
            }
        }
        for el in self.model.elements.iter().filter(|e| e.paint != Paint::None) {
            let crop = match el.positioning {
                Positioning::Static => crop_rect_in_frame(&el.rect, m),
                Positioning::Fixed => crop_viewport_rect_in_frame(&el.rect, m),
            };
            let Some(c) = crop else { continue };
            for j in c.y..c.y + c.h {
                for i in c.x..c.x + c.w {
                    let px = match el.paint {
                        Paint::Live => live_pixel(ox + i, oy + j, self.seq),
                        Paint::Counter => counter_pixel(self.input_count),
                        Paint::Chrome => chrome_pixel(i, j),
                        Paint::None => unreachable!(),
                    };
                    bmp.put_pixel(i, j, px);
                }
            }
        }
        bmp
    }
}

struct MockState {
    next_id: u64,
    pages: HashMap<u64, MockPage>,
}

/// In-process deterministic [`BrowserBridge`].
pub struct MockBridge {
    state: Mutex<MockState>,
    clock: Arc<dyn Clock>,
    viewport: (f64, f64),
    device_scale: f64,
}

impl MockBridge {
    /// Viewport 1280×800 at device scale 1, timestamps from a virtual clock
    /// frozen at zero.
    pub fn new() -> Self {
        Self::with_clock(Arc::new(VirtualClock::new(0)))
    }

    pub fn with_clock(clock: Arc<dyn Clock>) -> Self {
        Self {
            state: Mutex::new(MockState {
                next_id: 1,
                pages: HashMap::new(),
            }),
            clock,
            viewport: DEFAULT_VIEWPORT,
            device_scale: 1.0,
        }
    }

    pub fn device_scale(mut self, scale: f64) -> Self {
        assert!(scale > 0.0 && scale.is_finite(), "device scale must be positive");
        self.device_scale = scale;
        self
    }

    pub fn viewport(mut self, w: f64, h: f64) -> Self {
        assert!(w > 0.0 && h > 0.0, "viewport must be non-empty");
        self.viewport = (w, h);
        self
    }

    /// Every event the page has received, in arrival order.
    pub fn injected_events(&self, h: &PageHandle) -> BridgeResult<Vec<InjectedEvent>> {
        Ok(self.page(&mut self.lock(), h)?.log.clone())
    }

    pub fn focus(&self, h: &PageHandle) -> BridgeResult<Option<String>> {
        Ok(self.page(&mut self.lock(), h)?.focus.clone())
    }

    fn lock(&self) -> MutexGuard<'_, MockState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn page<'s>(&self, st: &'s mut MockState, h: &PageHandle) -> BridgeResult<&'s mut MockPage> {
        st.pages.get_mut(&h.id).ok_or(BridgeError::InvalidHandle(h.id))
    }

    fn fresh_metrics(&self, model: &MockPageModel) -> ViewportMetrics {
        ViewportMetrics::unscrolled(
            self.viewport.0,
            self.viewport.1,
            self.device_scale,
            model.document_w.max(self.viewport.0),
            model.document_h.max(self.viewport.1),
        )
    }
}

impl Default for MockBridge {
    fn default() -> Self {
        Self::new()
    }
}

impl BrowserBridge for MockBridge {
    fn navigate(&self, url: &str) -> BridgeResult<PageHandle> {
        let model = MockPageModel::for_url(url)?;
        let metrics = self.fresh_metrics(&model);
        let mut st = self.lock();
        let id = st.next_id;
        st.next_id += 1;
        st.pages.insert(
            id,
            MockPage {
                model,
                url: url.to_string(),
                metrics,
                seq: 0,
                capturing: false,
                input_count: 0,
                focus: None,
                log: Vec::new(),
            },
        );
        Ok(PageHandle {
            id,
            url: url.to_string(),
        })
    }

    fn navigate_in(&self, h: &PageHandle, url: &str) -> BridgeResult<PageHandle> {
        let model = MockPageModel::for_url(url)?;
        let metrics = self.fresh_metrics(&model);
        let mut st = self.lock();
        let page = self.page(&mut st, h)?;
        page.model = model;
        page.metrics = metrics;
        page.url = url.to_string();
        page.focus = None;
        Ok(PageHandle {
            id: h.id,
            url: url.to_string(),
        })
    }

    fn start_capture(&self, h: &PageHandle, _max_fps: u32) -> BridgeResult<()> {
        let mut st = self.lock();
        let page = self.page(&mut st, h)?;
        if page.capturing {
            return Err(BridgeError::Conflict(format!("capture already active on page {}", h.id)));
        }
        page.capturing = true;
        Ok(())
    }

    fn stop_capture(&self, h: &PageHandle) -> BridgeResult<()> {
        let mut st = self.lock();
        self.page(&mut st, h)?.capturing = false;
        Ok(())
    }

    fn next_frame(&self, h: &PageHandle) -> BridgeResult<SourceFrame> {
        let mut st = self.lock();
        let page = self.page(&mut st, h)?;
        if !page.capturing {
            return Err(BridgeError::NotCapturing);
        }
        page.seq = page.seq.checked_add(1).ok_or_else(|| BridgeError::Protocol("sequence exhausted".into()))?;
        Ok(SourceFrame {
            seq: page.seq,
            bitmap: page.render(),
            metrics: page.metrics,
            timestamp_ms: self.clock.now_ms(),
        })
    }

    fn resolve_selector(&self, h: &PageHandle, selector: &str) -> BridgeResult<RegionRect> {
        let mut st = self.lock();
        let page = self.page(&mut st, h)?;
        let el = page
            .model
            .element(selector)
            .filter(|e| e.has_area())
            .ok_or_else(|| BridgeError::NotFound(selector.to_string()))?;
        Ok(match el.positioning {
            Positioning::Static => el.rect,
            Positioning::Fixed => el.rect.translate(page.metrics.scroll_x, page.metrics.scroll_y),
        })
    }

    fn inject_pointer(
        &self,
        h: &PageHandle,
        kind: PointerKind,
        at: InjectPoint,
        button: MouseButton,
        modifiers: Modifiers,
    ) -> BridgeResult<()> {
        let mut st = self.lock();
        let page = self.page(&mut st, h)?;
        page.check_in_viewport(at)?;
        if kind == PointerKind::Down {
            page.focus = page.hit_test(at);
        }
        page.record(InjectedAction::Pointer {
            phase: kind,
            at,
            button,
            modifiers,
        });
        Ok(())
    }

    fn inject_key(&self, h: &PageHandle, key: &KeyDescriptor) -> BridgeResult<()> {
        let mut st = self.lock();
        let page = self.page(&mut st, h)?;
        let focus = page.focus.clone();
        page.record(InjectedAction::Key {
            key: key.clone(),
            focus,
        });
        Ok(())
    }

    fn inject_wheel(&self, h: &PageHandle, at: InjectPoint, delta_x: f64, delta_y: f64) -> BridgeResult<()> {
        let mut st = self.lock();
        let page = self.page(&mut st, h)?;
        page.check_in_viewport(at)?;
        page.record(InjectedAction::Wheel { at, delta_x, delta_y });
        let m = page.metrics;
        page.metrics = m.with_scroll(m.scroll_x + delta_x, m.scroll_y + delta_y);
        Ok(())
    }

    fn scroll_to(&self, h: &PageHandle, x: f64, y: f64) -> BridgeResult<ViewportMetrics> {
        let mut st = self.lock();
        let page = self.page(&mut st, h)?;
        page.metrics = page.metrics.with_scroll(x, y);
        let m = page.metrics;
        page.record(InjectedAction::ScrollTo {
            x: m.scroll_x,
            y: m.scroll_y,
        });
        Ok(m)
    }

    fn query_metrics(&self, h: &PageHandle) -> BridgeResult<ViewportMetrics> {
        let mut st = self.lock();
        Ok(self.page(&mut st, h)?.metrics)
    }

    fn close(&self, h: &PageHandle) -> BridgeResult<()> {
        self.lock()
            .pages
            .remove(&h.id)
            .map(|_| ())
            .ok_or(BridgeError::InvalidHandle(h.id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::{capture_stream, KeyAction};
    use proptest::prelude::*;

    fn pt(x: i32, y: i32) -> InjectPoint {
        InjectPoint { x, y }
    }

    #[test]
    fn grid_page_dimensions() {
        let b = MockBridge::new();
        let h = b.navigate("mock://grid").unwrap();
        let m = b.query_metrics(&h).unwrap();
        assert_eq!((m.document_w, m.document_h), (2000.0, 3000.0));
        assert_eq!((m.viewport_w, m.viewport_h), (1280.0, 800.0));
    }

    #[test]
    fn malformed_url_fails() {
        let b = MockBridge::new();
        assert!(matches!(b.navigate("ht!tp::"), Err(BridgeError::Navigation { .. })));
        assert!(matches!(b.navigate("mock://nowhere"), Err(BridgeError::Navigation { .. })));
    }

    #[test]
    fn renavigate_keeps_handle_and_sequence() {
        let b = MockBridge::new();
        let h = b.navigate("mock://grid").unwrap();
        b.start_capture(&h, 15).unwrap();
        assert_eq!(b.next_frame(&h).unwrap().seq, 1);
        let h2 = b.navigate_in(&h, "mock://app").unwrap();
        assert_eq!(h2.id, h.id);
        assert_eq!(h2.url, "mock://app");
        assert_eq!(b.next_frame(&h2).unwrap().seq, 2);
    }

    #[test]
    fn selectors() {
        let b = MockBridge::new();
        let h = b.navigate("mock://grid").unwrap();
        assert_eq!(b.resolve_selector(&h, "#header").unwrap(), RegionRect::new(0.0, 0.0, 2000.0, 120.0));
        assert!(matches!(b.resolve_selector(&h, "#nope"), Err(BridgeError::NotFound(_))));
        assert!(matches!(b.resolve_selector(&h, "#hidden"), Err(BridgeError::NotFound(_))));
    }

    #[test]
    fn fixed_elements_resolve_in_document_space() {
        let b = MockBridge::new();
        let h = b.navigate("mock://app").unwrap();
        b.scroll_to(&h, 0.0, 300.0).unwrap();
        assert_eq!(b.resolve_selector(&h, "#topbar").unwrap(), RegionRect::new(0.0, 300.0, 1280.0, 64.0));
    }

    #[test]
    fn capture_conflict() {
        let b = MockBridge::new();
        let h = b.navigate("mock://grid").unwrap();
        b.start_capture(&h, 15).unwrap();
        assert!(matches!(b.start_capture(&h, 15), Err(BridgeError::Conflict(_))));
    }

    #[test]
    fn frame_size_follows_device_scale() {
        let b = MockBridge::new().device_scale(1.5);
        let h = b.navigate("mock://grid").unwrap();
        b.start_capture(&h, 15).unwrap();
        let f = b.next_frame(&h).unwrap();
        assert_eq!((f.bitmap.width(), f.bitmap.height()), (1920, 1200));
    }

    #[test]
    fn stream_is_strictly_increasing() {
        let b = MockBridge::new();
        let h = b.navigate("mock://grid").unwrap();
        let seqs: Vec<_> = capture_stream(&b, &h, 15)
            .unwrap()
            .take(5)
            .map(|f| f.unwrap().seq)
            .collect();
        assert_eq!(seqs, vec![1, 2, 3, 4, 5]);
        // dropping the stream stops capture
        assert!(matches!(b.next_frame(&h), Err(BridgeError::NotCapturing)));
    }

    #[test]
    fn injections_change_pixels_and_are_logged() {
        let b = MockBridge::new();
        let h = b.navigate("mock://grid").unwrap();
        b.start_capture(&h, 15).unwrap();
        let before = b.next_frame(&h).unwrap();
        b.inject_pointer(&h, PointerKind::Down, pt(300, 350), MouseButton::Left, Modifiers::default())
            .unwrap();
        let key = KeyDescriptor {
            key: "a".into(),
            code: None,
            text: Some("a".into()),
            action: KeyAction::Press,
            modifiers: Modifiers::default(),
        };
        b.inject_key(&h, &key).unwrap();
        let after = b.next_frame(&h).unwrap();
        // the counter element sits at document (1700, 130) which is off-screen at scroll 0
        let m = b.scroll_to(&h, 720.0, 0.0).unwrap();
        assert_eq!(m.scroll_x, 720.0);
        let scrolled = b.next_frame(&h).unwrap();
        assert_eq!(scrolled.bitmap.pixel(1000, 150), counter_pixel(2));
        assert_ne!(before.bitmap, after.bitmap); // live player changed

        let log = b.injected_events(&h).unwrap();
        assert_eq!(log.len(), 3);
        assert_eq!(log.iter().map(|e| e.index).collect::<Vec<_>>(), vec![0, 1, 2]);
        match &log[1].action {
            InjectedAction::Key { focus, .. } => assert_eq!(focus.as_deref(), Some("#movie_player")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_viewport_injection_rejected() {
        let b = MockBridge::new();
        let h = b.navigate("mock://grid").unwrap();
        let r = b.inject_pointer(&h, PointerKind::Down, pt(10, 801), MouseButton::Left, Modifiers::default());
        assert!(matches!(r, Err(BridgeError::OutOfViewport { x: 10, y: 801 })));
        assert!(b.inject_wheel(&h, pt(-1, 0), 0.0, 10.0).is_err());
        assert!(b.injected_events(&h).unwrap().is_empty());
    }

    #[test]
    fn wheel_scrolls() {
        let b = MockBridge::new();
        let h = b.navigate("mock://grid").unwrap();
        b.inject_wheel(&h, pt(10, 10), 0.0, 5000.0).unwrap();
        assert_eq!(b.query_metrics(&h).unwrap().scroll_y, 2200.0);
    }

    #[test]
    fn base_pattern_tracks_scroll() {
        let b = MockBridge::new().device_scale(2.0);
        let h = b.navigate("mock://app").unwrap();
        b.start_capture(&h, 15).unwrap();
        b.scroll_to(&h, 0.0, 100.5).unwrap();
        let f = b.next_frame(&h).unwrap();
        // below the fixed bar, pixels are the document pattern offset by 201 device px
        assert_eq!(f.bitmap.pixel(10, 500), base_pixel(10, 701));
        assert_eq!(f.bitmap.pixel(10, 5), chrome_pixel(10, 5));
    }

    #[test]
    fn closed_handle_is_invalid() {
        let b = MockBridge::new();
        let h = b.navigate("mock://grid").unwrap();
        b.close(&h).unwrap();
        assert!(matches!(b.query_metrics(&h), Err(BridgeError::InvalidHandle(_))));
    }

    fn run_sequence(ops: &[(u8, f64, f64)]) -> Vec<SourceFrame> {
        let b = MockBridge::new().viewport(160.0, 100.0);
        let h = b.navigate("mock://grid").unwrap();
        b.start_capture(&h, 15).unwrap();
        let mut frames = Vec::new();
        for &(op, a, c) in ops {
            match op % 3 {
                0 => {
                    let _ = b.scroll_to(&h, a, c);
                }
                1 => {
                    let _ = b.inject_pointer(
                        &h,
                        PointerKind::Down,
                        pt((a as i32).rem_euclid(160), (c as i32).rem_euclid(100)),
                        MouseButton::Left,
                        Modifiers::default(),
                    );
                }
                _ => frames.push(b.next_frame(&h).unwrap()),
            }
        }
        frames
    }

    proptest! {
        #[test]
        fn scroll_clamps_to_document(x in -5000.0f64..5000.0, y in -5000.0f64..5000.0) {
            let b = MockBridge::new();
            let h = b.navigate("mock://grid").unwrap();
            b.scroll_to(&h, x, y).unwrap();
            let m = b.query_metrics(&h).unwrap();
            prop_assert_eq!(m.scroll_x, x.clamp(0.0, 720.0));
            prop_assert_eq!(m.scroll_y, y.clamp(0.0, 2200.0));
            prop_assert!(m.validate().is_ok());
        }

        #[test]
        fn identical_operations_identical_frames(ops in prop::collection::vec((0u8..3, 0.0f64..3000.0, 0.0f64..3000.0), 1..20)) {
            let a = run_sequence(&ops);
            let b = run_sequence(&ops);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn injection_indices_follow_call_order(points in prop::collection::vec((0i32..1280, 0i32..800, any::<bool>()), 1..40)) {
            let b = MockBridge::new();
            let h = b.navigate("mock://grid").unwrap();
            for (x, y, wheel) in &points {
                if *wheel {
                    b.inject_wheel(&h, pt(*x, *y), 0.0, 1.0).unwrap();
                } else {
                    b.inject_pointer(&h, PointerKind::Move, pt(*x, *y), MouseButton::None, Modifiers::default()).unwrap();
                }
            }
            let log = b.injected_events(&h).unwrap();
            prop_assert_eq!(log.len(), points.len());
            for (i, (ev, (x, y, _))) in log.iter().zip(&points).enumerate() {
                prop_assert_eq!(ev.index, i as u64);
                let at = match &ev.action {
                    InjectedAction::Pointer { at, .. } | InjectedAction::Wheel { at, .. } => *at,
                    _ => unreachable!(),
                };
                prop_assert_eq!(at, pt(*x, *y));
            }
        }
    }
}
