use std::io::Cursor;

use image::{ImageFormat, RgbaImage};
use thiserror::Error;

use super::{FrameFormat, PanelFrameMsg};
use crate::bitmap::Bitmap;
use crate::decomposer::PanelFrame;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("crop {0}x{1} at ({2}, {3}) does not fit the 16-bit frame header")]
    TooLarge(u32, u32, u32, u32),
    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
    #[error("decoded image is {got:?}, header says {want:?}")]
    SizeMismatch { got: (u32, u32), want: (u32, u32) },
}

pub fn encode_png(b: &Bitmap) -> Result<Vec<u8>, FrameError> {
    let img = RgbaImage::from_raw(b.width(), b.height(), b.as_bytes().to_vec()).expect("bitmap is RGBA8");
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn decode_png(bytes: &[u8]) -> Result<Bitmap, FrameError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.into_rgba8();
    let (w, h) = img.dimensions();
    Ok(Bitmap::from_raw(w, h, img.into_raw()).expect("rgba8 buffer"))
}

impl PanelFrameMsg {
    pub fn from_panel_frame(f: &PanelFrame, format: FrameFormat) -> Result<Self, FrameError> {
        let narrow = |v: u32| u16::try_from(v).ok();
        let c = f.crop;
        let (Some(x), Some(y), Some(w), Some(h)) = (narrow(c.x), narrow(c.y), narrow(c.w), narrow(c.h)) else {
            return Err(FrameError::TooLarge(c.w, c.h, c.x, c.y));
        };
        let payload = match (&f.bitmap, format) {
            (None, _) => Vec::new(),
            (Some(b), FrameFormat::Raw) => b.as_bytes().to_vec(),
            (Some(b), FrameFormat::Png) => encode_png(b)?,
        };
        let (x, y, w, h) = if f.off_viewport { (0, 0, 0, 0) } else { (x, y, w, h) };
        Ok(Self {
            panel_hash: f.panel_hash,
            source_seq: f.source_seq,
            x,
            y,
            w,
            h,
            format,
            payload,
        })
    }

    /// The panel's pixels, or `None` for an off-viewport frame.
    pub fn to_bitmap(&self) -> Result<Option<Bitmap>, FrameError> {
        if self.is_off_viewport() {
            return Ok(None);
        }
        let want = (self.w as u32, self.h as u32);
        let b = match self.format {
            FrameFormat::Raw => Bitmap::from_raw(want.0, want.1, self.payload.clone()).map_err(|_| FrameError::SizeMismatch {
                got: (0, 0),
                want,
            })?,
            FrameFormat::Png => decode_png(&self.payload)?,
        };
        if (b.width(), b.height()) != want {
            return Err(FrameError::SizeMismatch {
                got: (b.width(), b.height()),
                want,
            });
        }
        Ok(Some(b))
    }
}
