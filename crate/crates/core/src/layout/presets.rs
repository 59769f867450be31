use super::{
    parse_layout, Anchoring, Distance, InteractionHint, LayoutDocument, PanelSpec, PlacementHint, Region, Role, Zone,
};
use crate::{RegionRect, ViewportMetrics};

const MAPS: &str = include_str!("../../presets/maps.btwlayout");
const SLIDES: &str = include_str!("../../presets/slides.btwlayout");
const YOUTUBE: &str = include_str!("../../presets/youtube.btwlayout");

pub const FALLBACK_PANEL_ID: &str = "page";

/// The built-in layouts for maps, slides and video pages.
pub fn builtin_presets() -> Vec<LayoutDocument> {
    [MAPS, SLIDES, YOUTUBE]
        .iter()
        .map(|text| parse_layout(text).expect("built-in layout must be valid"))
        .collect()
}

/// Single panel showing the whole viewport, for pages no layout matches.
pub fn fallback_layout(metrics: &ViewportMetrics) -> LayoutDocument {
    LayoutDocument {
        name: "single-window".into(),
        site_pattern: "*".into(),
        panels: vec![PanelSpec {
            id: FALLBACK_PANEL_ID.into(),
            display_name: "Page".into(),
            role: Role::PrimaryContent,
            region: Region::Rect(RegionRect::new(0.0, 0.0, metrics.viewport_w, metrics.viewport_h)),
            anchoring: Anchoring::Viewport,
            placement_hint: PlacementHint::new(Zone::MidairCenter, Distance::Mid),
            interaction_hint: InteractionHint::Auto,
        }],
    }
}
