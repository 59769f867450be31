//! Coordinate spaces and the pure transforms between them.
//!
//! Four spaces are in play:
//!
//! * **document**: CSS pixels, origin at the top-left of the whole page.
//! * **viewport**: CSS pixels, origin at the top-left of the visible area;
//!   document minus the scroll offset.
//! * **frame**: integer device pixels of a captured bitmap; viewport times
//!   the device scale.
//! * **panel-local**: normalized `[0, 1]²` coordinates on a panel surface.
//!
//! Everything here is stateless and generic over [`Scalar`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// A point in document space (CSS px).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PagePoint<T> {
    pub x: T,
    pub y: T,
}

/// A point in viewport space (CSS px).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ViewportPoint<T> {
    pub x: T,
    pub y: T,
}

/// An axis-aligned rectangle in document (or, for viewport-anchored panels,
/// viewport) space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionRect<T> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

impl<T: Scalar> RegionRect<T> {
    pub fn new(x: T, y: T, w: T, h: T) -> Self {
        Self { x, y, w, h }
    }

    /// Active regions need finite coordinates and a strictly positive area.
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite())
        {
            return Err(GeometryError::InvalidInput(format!(
                "region coordinates must be finite: {self:?}"
            )));
        }
        if self.w <= T::zero() || self.h <= T::zero() {
            return Err(GeometryError::InvalidInput(format!(
                "region must have positive width and height: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn right(&self) -> T {
        self.x + self.w
    }

    pub fn bottom(&self) -> T {
        self.y + self.h
    }

    pub fn center(&self) -> PagePoint<T> {
        let half = T::lit(0.5);
        PagePoint {
            x: self.x + self.w * half,
            y: self.y + self.h * half,
        }
    }

    pub fn translate(&self, dx: T, dy: T) -> Self {
        Self {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }

    pub fn cast<U: Scalar>(&self) -> RegionRect<U> {
        RegionRect {
            x: U::lit(self.x.to_f64_lossy()),
            y: U::lit(self.y.to_f64_lossy()),
            w: U::lit(self.w.to_f64_lossy()),
            h: U::lit(self.h.to_f64_lossy()),
        }
    }
}

/// Panel-local normalized coordinates; `(0, 0)` is the panel's top-left.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UnitPoint<T> {
    pub u: T,
    pub v: T,
}

impl<T: Scalar> UnitPoint<T> {
    pub fn new(u: T, v: T) -> Result<Self, GeometryError> {
        let p = Self { u, v };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let in_unit = |c: T| c >= T::zero() && c <= T::one();
        if in_unit(self.u) && in_unit(self.v) {
            Ok(())
        } else {
            Err(GeometryError::InvalidInput(format!(
                "unit point outside [0,1]²: ({}, {})",
                self.u, self.v
            )))
        }
    }
}

/// Scroll state and sizes of a live page, captured together with a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewportMetrics<T> {
    pub scroll_x: T,
    pub scroll_y: T,
    pub viewport_w: T,
    pub viewport_h: T,
    pub device_scale: T,
    pub document_w: T,
    pub document_h: T,
}

impl<T: Scalar> ViewportMetrics<T> {
    /// Metrics at scroll `(0, 0)`.
    pub fn unscrolled(viewport_w: T, viewport_h: T, device_scale: T, document_w: T, document_h: T) -> Self {
        Self {
            scroll_x: T::zero(),
            scroll_y: T::zero(),
            viewport_w,
            viewport_h,
            device_scale,
            document_w,
            document_h,
        }
    }

    pub fn max_scroll_x(&self) -> T {
        (self.document_w - self.viewport_w).max(T::zero())
    }

    pub fn max_scroll_y(&self) -> T {
        (self.document_h - self.viewport_h).max(T::zero())
    }

    /// Clamps a requested scroll offset into `[0, document - viewport]`.
    pub fn clamp_scroll(&self, x: T, y: T) -> (T, T) {
        let fix = |v: T, max: T| if v.is_nan() { T::zero() } else { v.max(T::zero()).min(max) };
        (fix(x, self.max_scroll_x()), fix(y, self.max_scroll_y()))
    }

    pub fn with_scroll(&self, x: T, y: T) -> Self {
        let (scroll_x, scroll_y) = self.clamp_scroll(x, y);
        Self {
            scroll_x,
            scroll_y,
            ..*self
        }
    }

    /// Size in device pixels of a frame captured with these metrics.
    pub fn frame_size(&self) -> (u32, u32) {
        (
            to_pixel(self.viewport_w * self.device_scale),
            to_pixel(self.viewport_h * self.device_scale),
        )
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let all = [
            self.scroll_x,
            self.scroll_y,
            self.viewport_w,
            self.viewport_h,
            self.device_scale,
            self.document_w,
            self.document_h,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidInput("metrics must be finite".into()));
        }
        if self.device_scale <= T::zero() {
            return Err(GeometryError::InvalidInput("device scale must be positive".into()));
        }
        if self.viewport_w <= T::zero() || self.viewport_h <= T::zero() {
            return Err(GeometryError::InvalidInput("viewport must be non-empty".into()));
        }
        let (cx, cy) = self.clamp_scroll(self.scroll_x, self.scroll_y);
        if cx != self.scroll_x || cy != self.scroll_y {
            return Err(GeometryError::InvalidInput(format!(
                "scroll ({}, {}) outside document bounds",
                self.scroll_x, self.scroll_y
            )));
        }
        Ok(())
    }
}

/// Integer device-pixel rectangle inside a captured frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FrameRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl FrameRect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn right(&self) -> u64 {
        self.x as u64 + self.w as u64
    }

    pub fn bottom(&self) -> u64 {
        self.y as u64 + self.h as u64
    }

    pub fn fits_within(&self, width: u32, height: u32) -> bool {
        self.right() <= width as u64 && self.bottom() <= height as u64
    }
}

/// Where a document point lands in the viewport.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewportMapping<T> {
    pub point: ViewportPoint<T>,
    pub visible: bool,
}

/// Maps a panel-local point onto the region it mirrors.
pub fn panel_local_to_doc<T: Scalar>(
    p: UnitPoint<T>,
    r: &RegionRect<T>,
) -> Result<PagePoint<T>, GeometryError> {
    p.validate()?;
    r.validate()?;
    Ok(PagePoint {
        x: r.x + p.u * r.w,
        y: r.y + p.v * r.h,
    })
}

/// Inverse of [`panel_local_to_doc`]; the result is not clamped.
pub fn doc_to_panel_local<T: Scalar>(p: PagePoint<T>, r: &RegionRect<T>) -> UnitPoint<T> {
    UnitPoint {
        u: (p.x - r.x) / r.w,
        v: (p.y - r.y) / r.h,
    }
}

/// Subtracts the scroll offset; `visible` is true iff the point lies within
/// the closed viewport rectangle.
pub fn doc_to_viewport<T: Scalar>(p: PagePoint<T>, m: &ViewportMetrics<T>) -> ViewportMapping<T> {
    let point = ViewportPoint {
        x: p.x - m.scroll_x,
        y: p.y - m.scroll_y,
    };
    ViewportMapping {
        point,
        visible: viewport_contains(point, m),
    }
}

pub fn viewport_contains<T: Scalar>(p: ViewportPoint<T>, m: &ViewportMetrics<T>) -> bool {
    p.x >= T::zero() && p.y >= T::zero() && p.x <= m.viewport_w && p.y <= m.viewport_h
}

/// Device-pixel crop of a document-space region in a frame captured with `m`,
/// or `None` when nothing of the region is on screen.
pub fn crop_rect_in_frame<T: Scalar>(r: &RegionRect<T>, m: &ViewportMetrics<T>) -> Option<FrameRect> {
    crop_viewport_rect_in_frame(&r.translate(-m.scroll_x, -m.scroll_y), m)
}

/// Like [`crop_rect_in_frame`] for a rect already in viewport space.
///
/// The origin is rounded down and the far edge up, so partially covered
/// device pixels are kept.
pub fn crop_viewport_rect_in_frame<T: Scalar>(
    r: &RegionRect<T>,
    m: &ViewportMetrics<T>,
) -> Option<FrameRect> {
    if !r.is_valid() {
        return None;
    }
    let s = m.device_scale;
    let (fw, fh) = m.frame_size();
    let (fw, fh) = (T::from_u32(fw)?, T::from_u32(fh)?);

    let x0 = (r.x * s).floor_snapped().max(T::zero());
    let y0 = (r.y * s).floor_snapped().max(T::zero());
    let x1 = (r.right() * s).ceil_snapped().min(fw);
    let y1 = (r.bottom() * s).ceil_snapped().min(fh);
    if x1 <= x0 || y1 <= y0 {
        return None;
    }
    let x = x0.to_u32()?;
    let y = y0.to_u32()?;
    Some(FrameRect {
        x,
        y,
        w: x1.to_u32()? - x,
        h: y1.to_u32()? - y,
    })
}

fn to_pixel<T: Scalar>(v: T) -> u32 {
    v.round().max(T::zero()).to_u32().unwrap_or(u32::MAX)
}
