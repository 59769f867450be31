//! Port over a live browser page.
//!
//! [`MockBridge`] is an in-process deterministic page used by tests and the
//! replay harness; [`DevtoolsBridge`] drives a real browser over its
//! remote-debugging protocol.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitmap::Bitmap;
use crate::{RegionRect, ViewportMetrics};

pub mod devtools;
pub mod mock;

pub use devtools::DevtoolsBridge;
pub use mock::{MockBridge, MockElement, MockPageModel, Paint, Positioning};

/// Capture sequence number.
pub type Seq = u32;

pub const DEFAULT_MAX_FPS: u32 = 15;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PageHandle {
    pub id: u64,
    pub url: String,
}

/// One captured frame. `metrics` describe the page exactly as it was when
/// `bitmap` was rendered.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceFrame {
    pub seq: Seq,
    pub bitmap: Bitmap,
    pub metrics: ViewportMetrics,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointerKind {
    Down,
    Move,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MouseButton {
    #[default]
    None,
    Left,
    Middle,
    Right,
}

/// Modifier bitmask: alt = 1, ctrl = 2, meta = 4, shift = 8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Modifiers(pub u8);

impl Modifiers {
    pub const ALT: Modifiers = Modifiers(1);
    pub const CTRL: Modifiers = Modifiers(2);
    pub const META: Modifiers = Modifiers(4);
    pub const SHIFT: Modifiers = Modifiers(8);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyAction {
    Down,
    Up,
    /// Down, character input, then up.
    Press,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeyDescriptor {
    pub key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub action: KeyAction,
    #[serde(default)]
    pub modifiers: Modifiers,
}

/// Integer viewport coordinates (CSS px) handed to the page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InjectPoint {
    pub x: i32,
    pub y: i32,
}

/// Something the mock page received, in arrival order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InjectedAction {
    Pointer {
        phase: PointerKind,
        at: InjectPoint,
        button: MouseButton,
        modifiers: Modifiers,
    },
    Wheel {
        at: InjectPoint,
        delta_x: f64,
        delta_y: f64,
    },
    Key {
        key: KeyDescriptor,
        focus: Option<String>,
    },
    ScrollTo {
        x: f64,
        y: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectedEvent {
    pub index: u64,
    #[serde(flatten)]
    pub action: InjectedAction,
}

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("navigation failed for {url}: {reason}")]
    Navigation { url: String, reason: String },
    #[error("no element matches selector {0:?}")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("point ({x}, {y}) lies outside the viewport")]
    OutOfViewport { x: i32, y: i32 },
    #[error("unknown or closed page handle {0}")]
    InvalidHandle(u64),
    #[error("capture is not active")]
    NotCapturing,
    #[error("browser protocol error: {0}")]
    Protocol(String),
    #[error("frame decode error: {0}")]
    Decode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type BridgeResult<T> = Result<T, BridgeError>;

/// Operations the server needs from a browser page.
///
/// Methods take `&self`; implementations synchronize internally so capture
/// and injection can proceed from different threads. Calls from one thread
/// reach the page in call order.
pub trait BrowserBridge: Send + Sync {
    /// Opens a new page.
    fn navigate(&self, url: &str) -> BridgeResult<PageHandle>;

    /// Navigates an existing page; the handle id and frame sequence carry on.
    fn navigate_in(&self, h: &PageHandle, url: &str) -> BridgeResult<PageHandle>;

    fn start_capture(&self, h: &PageHandle, max_fps: u32) -> BridgeResult<()>;

    fn stop_capture(&self, h: &PageHandle) -> BridgeResult<()>;

    /// Blocks until the next frame of an active capture is available.
    fn next_frame(&self, h: &PageHandle) -> BridgeResult<SourceFrame>;

    /// Document-space bounding box of the first element matching `selector`.
    fn resolve_selector(&self, h: &PageHandle, selector: &str) -> BridgeResult<RegionRect>;

    fn inject_pointer(
        &self,
        h: &PageHandle,
        kind: PointerKind,
        at: InjectPoint,
        button: MouseButton,
        modifiers: Modifiers,
    ) -> BridgeResult<()>;

    fn inject_key(&self, h: &PageHandle, key: &KeyDescriptor) -> BridgeResult<()>;

    fn inject_wheel(&self, h: &PageHandle, at: InjectPoint, delta_x: f64, delta_y: f64) -> BridgeResult<()>;

    /// Scrolls to the requested offset, clamped to the document.
    fn scroll_to(&self, h: &PageHandle, x: f64, y: f64) -> BridgeResult<ViewportMetrics>;

    fn query_metrics(&self, h: &PageHandle) -> BridgeResult<ViewportMetrics>;

    fn close(&self, h: &PageHandle) -> BridgeResult<()>;
}

/// Starts a capture and yields its frames in sequence order.
pub fn capture_stream<'a, B: BrowserBridge + ?Sized>(
    bridge: &'a B,
    h: &PageHandle,
    max_fps: u32,
) -> BridgeResult<CaptureStream<'a, B>> {
    bridge.start_capture(h, max_fps)?;
    Ok(CaptureStream {
        bridge,
        handle: h.clone(),
    })
}

pub struct CaptureStream<'a, B: BrowserBridge + ?Sized> {
    bridge: &'a B,
    handle: PageHandle,
}

impl<B: BrowserBridge + ?Sized> Iterator for CaptureStream<'_, B> {
    type Item = BridgeResult<SourceFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.bridge.next_frame(&self.handle) {
            Err(BridgeError::NotCapturing) => None,
            other => Some(other),
        }
    }
}

impl<B: BrowserBridge + ?Sized> Drop for CaptureStream<'_, B> {
    fn drop(&mut self) {
        let _ = self.bridge.stop_capture(&self.handle);
    }
}
