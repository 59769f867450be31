//! Cuts captured frames into per-panel crops.
//!
//! Document-anchored regions follow the page as it scrolls; viewport-anchored
//! ones stay put. Panels whose cropped pixels did not change since their last
//! emission are left out of the batch.

use std::collections::HashMap;

use thiserror::Error;
use xxhash_rust::xxh3::Xxh3;

use crate::bitmap::{Bitmap, BYTES_PER_PIXEL};
use crate::bridge::{BridgeError, BrowserBridge, PageHandle, Seq, SourceFrame};
use crate::geometry::{crop_rect_in_frame, crop_viewport_rect_in_frame};
use crate::layout::{
    panel_hash, Anchoring, InteractionHint, LayoutDocument, LayoutError, PlacementHint, Region, Role,
};
use crate::{FrameRect, RegionRect};

/// How a panel's rect was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionSource {
    Selector,
    /// The selector matched nothing; the layout's fallback rect was used.
    Fallback,
    Rect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedPanel {
    pub id: String,
    /// Wire identifier, see [`panel_hash`].
    pub hash: u32,
    pub display_name: String,
    pub role: Role,
    /// Document space for document-anchored panels, viewport space otherwise.
    pub rect: RegionRect,
    pub anchoring: Anchoring,
    pub placement_hint: PlacementHint,
    pub interaction_hint: InteractionHint,
    pub source: RegionSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedLayout {
    pub name: String,
    pub panels: Vec<ResolvedPanel>,
}

impl ResolvedLayout {
    pub fn panel(&self, id: &str) -> Option<&ResolvedPanel> {
        self.panels.iter().find(|p| p.id == id)
    }

    pub fn panel_by_hash(&self, hash: u32) -> Option<&ResolvedPanel> {
        self.panels.iter().find(|p| p.hash == hash)
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("invalid layout: {0}")]
    Invalid(#[from] LayoutError),
    #[error("panel {panel_id:?}: {source}")]
    Unresolvable {
        panel_id: String,
        #[source]
        source: BridgeError,
    },
    #[error(transparent)]
    Bridge(BridgeError),
}

/// Resolves every panel region of `doc` against the live page.
///
/// Rect regions are passed through without touching the bridge. Selector
/// regions use the first match, or the fallback rect when nothing matches.
pub fn resolve_layout<B: BrowserBridge + ?Sized>(
    doc: &LayoutDocument,
    bridge: &B,
    h: &PageHandle,
) -> Result<ResolvedLayout, ResolveError> {
    doc.validate()?;
    let mut scroll: Option<(f64, f64)> = None;
    let mut panels = Vec::with_capacity(doc.panels.len());
    for spec in &doc.panels {
        let (rect, source) = match &spec.region {
            Region::Rect(r) => (*r, RegionSource::Rect),
            Region::Selector { selector, fallback } => {
                let found = match bridge.resolve_selector(h, selector) {
                    Ok(r) => Some(r),
                    Err(BridgeError::NotFound(_)) => None,
                    Err(e) => {
                        return Err(ResolveError::Unresolvable {
                            panel_id: spec.id.clone(),
                            source: e,
                        })
                    }
                };
                match (found, fallback) {
                    (Some(r), _) if r.is_valid() => {
                        let r = match spec.anchoring {
                            Anchoring::Document => r,
                            Anchoring::Viewport => {
                                let (sx, sy) = match scroll {
                                    Some(s) => s,
                                    None => {
                                        let m = bridge.query_metrics(h).map_err(ResolveError::Bridge)?;
                                        *scroll.insert((m.scroll_x, m.scroll_y))
                                    }
                                };
                                r.translate(-sx, -sy)
                            }
                        };
                        (r, RegionSource::Selector)
                    }
                    (_, Some(fb)) => (*fb, RegionSource::Fallback),
                    _ => {
                        return Err(ResolveError::Unresolvable {
                            panel_id: spec.id.clone(),
                            source: BridgeError::NotFound(selector.clone()),
                        })
                    }
                }
            }
        };
        panels.push(ResolvedPanel {
            id: spec.id.clone(),
            hash: panel_hash(&spec.id),
            display_name: spec.display_name.clone(),
            role: spec.role,
            rect,
            anchoring: spec.anchoring,
            placement_hint: spec.placement_hint,
            interaction_hint: spec.interaction_hint,
            source,
        });
    }
    Ok(ResolvedLayout {
        name: doc.name.clone(),
        panels,
    })
}

/// One panel's share of a source frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelFrame {
    pub panel_id: String,
    pub panel_hash: u32,
    pub source_seq: Seq,
    /// Crop within the source frame; all zero when off-viewport.
    pub crop: FrameRect,
    /// `None` iff `off_viewport`.
    pub bitmap: Option<Bitmap>,
    pub off_viewport: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Emitted {
    Content(u64),
    OffViewport,
}

/// Per-session memory of what each panel last showed.
#[derive(Debug, Clone, Default)]
pub struct DecomposeCache {
    last: HashMap<String, Emitted>,
}

impl DecomposeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.last.clear();
    }

    /// Content hash of the panel's last emitted crop, if it had one.
    pub fn last_hash(&self, panel_id: &str) -> Option<u64> {
        match self.last.get(panel_id) {
            Some(Emitted::Content(h)) => Some(*h),
            _ => None,
        }
    }

    /// Forget a panel so its next crop is emitted unconditionally.
    pub fn invalidate(&mut self, panel_id: &str) {
        self.last.remove(panel_id);
    }
}

/// Crops `f` for every panel of `rl`, skipping panels whose content is
/// unchanged since they were last emitted. All returned frames carry
/// `f.seq`.
pub fn decompose_frame(f: &SourceFrame, rl: &ResolvedLayout, cache: &mut DecomposeCache) -> Vec<PanelFrame> {
    let mut out = Vec::new();
    for p in &rl.panels {
        let crop = match p.anchoring {
            Anchoring::Document => crop_rect_in_frame(&p.rect, &f.metrics),
            Anchoring::Viewport => crop_viewport_rect_in_frame(&p.rect, &f.metrics),
        }
        .filter(|c| c.fits_within(f.bitmap.width(), f.bitmap.height()));

        let (state, frame) = match crop {
            None => (
                Emitted::OffViewport,
                PanelFrame {
                    panel_id: p.id.clone(),
                    panel_hash: p.hash,
                    source_seq: f.seq,
                    crop: FrameRect::default(),
                    bitmap: None,
                    off_viewport: true,
                },
            ),
            Some(c) => {
                let h = content_hash(&f.bitmap, c);
                if cache.last.get(&p.id) == Some(&Emitted::Content(h)) {
                    continue;
                }
                let bitmap = crop_bitmap(&f.bitmap, c).expect("crop was clipped to frame bounds");
                (
                    Emitted::Content(h),
                    PanelFrame {
                        panel_id: p.id.clone(),
                        panel_hash: p.hash,
                        source_seq: f.seq,
                        crop: c,
                        bitmap: Some(bitmap),
                        off_viewport: false,
                    },
                )
            }
        };
        if cache.last.get(&p.id) == Some(&state) {
            continue;
        }
        cache.last.insert(p.id.clone(), state);
        out.push(frame);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("crop {rect:?} exceeds {width}x{height} bitmap")]
pub struct CropError {
    pub rect: FrameRect,
    pub width: u32,
    pub height: u32,
}

/// Copies `rect` out of `src`. The rect must already be clipped to `src`.
pub fn crop_bitmap(src: &Bitmap, rect: FrameRect) -> Result<Bitmap, CropError> {
    if !rect.fits_within(src.width(), src.height()) {
        return Err(CropError {
            rect,
            width: src.width(),
            height: src.height(),
        });
    }
    let row_bytes = rect.w as usize * BYTES_PER_PIXEL;
    let x0 = rect.x as usize * BYTES_PER_PIXEL;
    let mut data = Vec::with_capacity(row_bytes * rect.h as usize);
    for y in rect.y..rect.y + rect.h {
        data.extend_from_slice(&src.row(y)[x0..x0 + row_bytes]);
    }
    Ok(Bitmap::from_raw(rect.w, rect.h, data).expect("row copy yields exact size"))
}

/// Hash of the crop's dimensions and pixels, computed without copying.
pub fn content_hash(src: &Bitmap, rect: FrameRect) -> u64 {
    let mut h = Xxh3::new();
    h.update(&rect.w.to_le_bytes());
    h.update(&rect.h.to_le_bytes());
    let row_bytes = rect.w as usize * BYTES_PER_PIXEL;
    let x0 = rect.x as usize * BYTES_PER_PIXEL;
    for y in rect.y..rect.y + rect.h {
        h.update(&src.row(y)[x0..x0 + row_bytes]);
    }
    h.digest()
}
