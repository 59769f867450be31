use thiserror::Error;

use super::{FrameFormat, InputAction, Message, PanelFrameMsg};

pub const HEADER_LEN: usize = 24;

/// A transport frame: text for control messages, binary for panel frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    Text(String),
    Binary(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("decode error at byte {offset}: {message}")]
pub struct DecodeError {
    pub offset: usize,
    pub message: String,
}

impl DecodeError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        Self {
            offset,
            message: message.into(),
        }
    }
}

pub fn encode_message(m: &Message) -> Frame {
    match m {
        Message::PanelFrame(f) => Frame::Binary(encode_panel_frame(f)),
        other => Frame::Text(serde_json::to_string(other).expect("control messages always serialize")),
    }
}

pub fn decode_message(f: &Frame) -> Result<Message, DecodeError> {
    match f {
        Frame::Text(s) => decode_text(s.as_bytes()),
        Frame::Binary(b) => decode_binary(b),
    }
}

fn encode_panel_frame(f: &PanelFrameMsg) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + f.payload.len());
    out.extend_from_slice(&f.panel_hash.to_le_bytes());
    out.extend_from_slice(&f.source_seq.to_le_bytes());
    for v in [f.x, f.y, f.w, f.h] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(f.format.code());
    out.extend_from_slice(&[0; 7]);
    out.extend_from_slice(&f.payload);
    out
}

/// Decodes a binary panel frame.
pub fn decode_binary(b: &[u8]) -> Result<Message, DecodeError> {
    if b.len() < HEADER_LEN {
        return Err(DecodeError::new(b.len(), format!("truncated header: {} of {HEADER_LEN} bytes", b.len())));
    }
    let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
    let u16_at = |i: usize| u16::from_le_bytes(b[i..i + 2].try_into().unwrap());
    let format = FrameFormat::from_code(b[16]).ok_or_else(|| DecodeError::new(16, format!("unknown frame format {}", b[16])))?;
    if let Some(i) = b[17..HEADER_LEN].iter().position(|&x| x != 0) {
        return Err(DecodeError::new(17 + i, "reserved header byte is not zero"));
    }
    let msg = PanelFrameMsg {
        panel_hash: u32_at(0),
        source_seq: u32_at(4),
        x: u16_at(8),
        y: u16_at(10),
        w: u16_at(12),
        h: u16_at(14),
        format,
        payload: b[HEADER_LEN..].to_vec(),
    };
    if (msg.w == 0) != (msg.h == 0) {
        return Err(DecodeError::new(12, "zero width or height without the other"));
    }
    if msg.is_off_viewport() {
        if !msg.payload.is_empty() {
            return Err(DecodeError::new(HEADER_LEN, "off-viewport frame carries a payload"));
        }
    } else {
        match format {
            FrameFormat::Raw => {
                let want = msg.w as usize * msg.h as usize * 4;
                if msg.payload.len() != want {
                    return Err(DecodeError::new(
                        HEADER_LEN + msg.payload.len().min(want),
                        format!("raw payload is {} bytes, expected {want}", msg.payload.len()),
                    ));
                }
            }
            FrameFormat::Png => {
                if msg.payload.is_empty() {
                    return Err(DecodeError::new(HEADER_LEN, "empty PNG payload"));
                }
            }
        }
    }
    Ok(Message::PanelFrame(msg))
}

/// Decodes a text control message.
pub fn decode_text(b: &[u8]) -> Result<Message, DecodeError> {
    let text = std::str::from_utf8(b).map_err(|e| DecodeError::new(e.valid_up_to(), "invalid UTF-8"))?;
    let m: Message = serde_json::from_str(text).map_err(|e| DecodeError::new(json_offset(text, &e), e.to_string()))?;
    validate(&m).map_err(|msg| DecodeError::new(0, msg))?;
    Ok(m)
}

/// Byte offset of a serde_json error position. Errors found after the
/// tagged message was buffered carry no position and map to 0.
fn json_offset(text: &str, e: &serde_json::Error) -> usize {
    if e.line() == 0 {
        return 0;
    }
    let line_start: usize = text.split_inclusive('\n').take(e.line() - 1).map(str::len).sum();
    (line_start + e.column().saturating_sub(1)).min(text.len())
}

fn validate(m: &Message) -> Result<(), String> {
    match m {
        Message::InputEvent(e) => match &e.action {
            InputAction::Pointer { at, .. } => at.validate().map_err(|e| e.to_string()),
            InputAction::Wheel { at, delta_x, delta_y } => {
                at.validate().map_err(|e| e.to_string())?;
                if delta_x.is_finite() && delta_y.is_finite() {
                    Ok(())
                } else {
                    Err("wheel delta is not finite".into())
                }
            }
            InputAction::Key { .. } => Ok(()),
        },
        Message::PanelTransform(t) => t.pose.validate().map_err(|e| e.to_string()),
        Message::PanelState(s) => s.pose.validate().map_err(|e| e.to_string()),
        Message::LayoutAnnounce(a) => a.panels.iter().try_for_each(|p| p.pose.validate().map_err(|e| e.to_string())),
        _ => Ok(()),
    }
}
