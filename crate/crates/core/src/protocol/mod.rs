//! Wire protocol between the server and workspace clients.
//!
//! Control messages travel as JSON text frames tagged by `"type"`. Panel
//! frames travel as binary frames: a 24-byte little-endian header followed by
//! the pixel payload.
//!
//! ```text
//! offset  size  field
//!      0     4  panel id hash (FNV-1a 32 of the panel id)
//!      4     4  source_seq
//!      8     2  x
//!     10     2  y
//!     12     2  w
//!     14     2  h
//!     16     1  format (0 raw RGBA, 1 PNG)
//!     17     7  reserved, zero
//! ```
//!
//! An off-viewport panel is announced with `w = h = 0` and no payload.

use serde::{Deserialize, Serialize};

use crate::bridge::{KeyDescriptor, Modifiers, MouseButton, PointerKind, Seq};
use crate::layout::{Anchoring, InteractionHint, PlacementHint, Role};
use crate::policy::InputMode;
use crate::{PanelPose, RegionRect, UnitPoint};

mod codec;
mod frame;

pub use codec::{decode_binary, decode_message, decode_text, encode_message, DecodeError, Frame, HEADER_LEN};
pub use frame::{decode_png, encode_png, FrameError};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hello {
    pub client_name: String,
    pub protocol_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

/// One panel as announced to clients, with its initial placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnouncedPanel {
    pub id: String,
    /// Value carried in the binary frame header for this panel.
    pub hash: u32,
    pub display_name: String,
    pub role: Role,
    pub anchoring: Anchoring,
    pub rect: RegionRect,
    pub placement_hint: PlacementHint,
    pub interaction_hint: InteractionHint,
    pub pose: PanelPose,
    pub anchored: bool,
    pub input_mode: InputMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutAnnounce {
    pub layout: String,
    pub url: String,
    pub panels: Vec<AnnouncedPanel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameFormat {
    #[default]
    Raw,
    Png,
}

impl FrameFormat {
    pub fn code(self) -> u8 {
        match self {
            FrameFormat::Raw => 0,
            FrameFormat::Png => 1,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(FrameFormat::Raw),
            1 => Some(FrameFormat::Png),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelFrameMsg {
    pub panel_hash: u32,
    pub source_seq: Seq,
    pub x: u16,
    pub y: u16,
    pub w: u16,
    pub h: u16,
    pub format: FrameFormat,
    pub payload: Vec<u8>,
}

impl PanelFrameMsg {
    pub fn is_off_viewport(&self) -> bool {
        self.w == 0 && self.h == 0
    }
}

/// What a client did on a panel. Pointer and wheel positions are
/// panel-local.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InputAction {
    Pointer {
        phase: PointerKind,
        at: UnitPoint,
        #[serde(default)]
        button: MouseButton,
        #[serde(default)]
        modifiers: Modifiers,
    },
    Wheel {
        at: UnitPoint,
        delta_x: f64,
        delta_y: f64,
    },
    Key {
        key: KeyDescriptor,
    },
}

impl InputAction {
    pub fn location(&self) -> Option<UnitPoint> {
        match self {
            InputAction::Pointer { at, .. } | InputAction::Wheel { at, .. } => Some(*at),
            InputAction::Key { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputEventMsg {
    pub panel_id: String,
    pub client_seq: u64,
    pub action: InputAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelTransformMsg {
    pub panel_id: String,
    pub pose: PanelPose,
    pub client_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelStateMsg {
    pub panel_id: String,
    pub pose: PanelPose,
    pub anchored: bool,
    pub input_mode: InputMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    UnknownPanel,
    OutOfViewport,
    InvalidInput,
    VersionMismatch,
    Unauthorized,
    OutOfOrder,
    BadMessage,
    BridgeError,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::UnknownPanel => "unknown-panel",
            ErrorCode::OutOfViewport => "out-of-viewport",
            ErrorCode::InvalidInput => "invalid-input",
            ErrorCode::VersionMismatch => "version-mismatch",
            ErrorCode::Unauthorized => "unauthorized",
            ErrorCode::OutOfOrder => "out-of-order",
            ErrorCode::BadMessage => "bad-message",
            ErrorCode::BridgeError => "bridge-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorMsg {
    pub code: ErrorCode,
    pub detail: String,
}

impl ErrorMsg {
    pub fn new(code: ErrorCode, detail: impl Into<String>) -> Self {
        Self {
            code,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Message {
    Hello(Hello),
    LayoutAnnounce(LayoutAnnounce),
    #[serde(skip)]
    PanelFrame(PanelFrameMsg),
    InputEvent(InputEventMsg),
    PanelTransform(PanelTransformMsg),
    PanelState(PanelStateMsg),
    Error(ErrorMsg),
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello(_) => "hello",
            Message::LayoutAnnounce(_) => "layout-announce",
            Message::PanelFrame(_) => "panel-frame",
            Message::InputEvent(_) => "input-event",
            Message::PanelTransform(_) => "panel-transform",
            Message::PanelState(_) => "panel-state",
            Message::Error(_) => "error",
        }
    }
}

impl From<ErrorMsg> for Message {
    fn from(e: ErrorMsg) -> Self {
        Message::Error(e)
    }
}

impl From<PanelStateMsg> for Message {
    fn from(s: PanelStateMsg) -> Self {
        Message::PanelState(s)
    }
}

impl From<PanelFrameMsg> for Message {
    fn from(f: PanelFrameMsg) -> Self {
        Message::PanelFrame(f)
    }
}
