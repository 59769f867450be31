//! Layout documents: which regions of a page become panels, what role each
//! plays and where it should initially go.
//!
//! Documents are stored as UTF-8 JSON with the `.btwlayout` extension.
//! Validation errors carry the path of the offending field, e.g.
//! `panels[1].id`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::RegionRect;

mod presets;
mod store;

pub use presets::{builtin_presets, fallback_layout, FALLBACK_PANEL_ID};
pub use store::{literal_len, match_layout, LayoutStore, LoadError, LAYOUT_EXTENSION};

/// Functional role of a panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    PrimaryContent,
    Control,
    Context,
    Peripheral,
}

/// Spatial zone a panel starts in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Zone {
    Surface,
    MidairCenter,
    MidairSide,
    Peripheral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distance {
    Near,
    Mid,
    Far,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementHint {
    pub zone: Zone,
    pub distance: Distance,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl PlacementHint {
    pub fn new(zone: Zone, distance: Distance) -> Self {
        Self {
            zone,
            distance,
            scale: 1.0,
        }
    }
}

/// Whether a region follows the document as it scrolls or stays put in the
/// viewport (fixed bars).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Anchoring {
    #[default]
    Document,
    Viewport,
}

/// Preferred input technique. `auto` lets reachability decide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionHint {
    Touch,
    Ray,
    #[default]
    Auto,
}

/// Where a panel's pixels come from: a selector (with an optional rect used
/// when the selector matches nothing) or a fixed rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionRepr", into = "RegionRepr")]
pub enum Region {
    Selector {
        selector: String,
        fallback: Option<RegionRect>,
    },
    Rect(RegionRect),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    selector: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rect: Option<RegionRect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fallback: Option<RegionRect>,
}

impl TryFrom<RegionRepr> for Region {
    type Error = String;

    fn try_from(r: RegionRepr) -> Result<Self, String> {
        match (r.selector, r.rect, r.fallback) {
            (Some(_), Some(_), _) => Err("region must have exactly one of `selector` or `rect`, found both".into()),
            (None, None, _) => Err("region must have exactly one of `selector` or `rect`, found neither".into()),
            (None, Some(_), Some(_)) => Err("`fallback` is only allowed with `selector`".into()),
            (Some(selector), None, fallback) => Ok(Region::Selector { selector, fallback }),
            (None, Some(rect), None) => Ok(Region::Rect(rect)),
        }
    }
}

impl From<Region> for RegionRepr {
    fn from(r: Region) -> Self {
        match r {
            Region::Selector { selector, fallback } => RegionRepr {
                selector: Some(selector),
                rect: None,
                fallback,
            },
            Region::Rect(rect) => RegionRepr {
                selector: None,
                rect: Some(rect),
                fallback: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelSpec {
    pub id: String,
    pub display_name: String,
    pub role: Role,
    pub region: Region,
    #[serde(default)]
    pub anchoring: Anchoring,
    pub placement_hint: PlacementHint,
    #[serde(default)]
    pub interaction_hint: InteractionHint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutDocument {
    pub name: String,
    pub site_pattern: String,
    pub panels: Vec<PanelSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl LayoutError {
    fn invalid(path: impl Into<String>, message: impl fmt::Display) -> Self {
        LayoutError::Invalid {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Field path of a validation error; empty for syntax errors.
    pub fn path(&self) -> &str {
        match self {
            LayoutError::Invalid { path, .. } => path,
            LayoutError::Syntax { .. } => "",
        }
    }
}

impl LayoutDocument {
    pub fn validate(&self) -> Result<(), LayoutError> {
        if self.name.trim().is_empty() {
            return Err(LayoutError::invalid("name", "must not be empty"));
        }
        store::compile_pattern(&self.site_pattern).map_err(|e| LayoutError::invalid("site_pattern", e))?;
        if self.panels.is_empty() {
            return Err(LayoutError::invalid("panels", "at least one panel is required"));
        }
        let mut seen = HashSet::new();
        let mut hashes = HashSet::new();
        for (i, p) in self.panels.iter().enumerate() {
            let at = |field: &str| format!("panels[{i}].{field}");
            if p.id.is_empty() {
                return Err(LayoutError::invalid(at("id"), "must not be empty"));
            }
            if !seen.insert(p.id.as_str()) {
                return Err(LayoutError::invalid(at("id"), format!("duplicate panel id {:?}", p.id)));
            }
            if !hashes.insert(panel_hash(&p.id)) {
                return Err(LayoutError::invalid(at("id"), format!("panel id {:?} collides with another id's wire hash", p.id)));
            }
            match &p.region {
                Region::Selector { selector, fallback } => {
                    if selector.trim().is_empty() {
                        return Err(LayoutError::invalid(at("region.selector"), "must not be empty"));
                    }
                    if let Some(r) = fallback {
                        r.validate().map_err(|e| LayoutError::invalid(at("region.fallback"), e))?;
                    }
                }
                Region::Rect(r) => r.validate().map_err(|e| LayoutError::invalid(at("region.rect"), e))?,
            }
            let s = p.placement_hint.scale;
            if !(s.is_finite() && s > 0.0) {
                return Err(LayoutError::invalid(at("placement_hint.scale"), format!("must be positive, got {s}")));
            }
        }
        Ok(())
    }

    pub fn panel(&self, id: &str) -> Option<&PanelSpec> {
        self.panels.iter().find(|p| p.id == id)
    }
}

/// Parses and validates a layout document.
pub fn parse_layout(text: &str) -> Result<LayoutDocument, LayoutError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: LayoutDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() && path != "." {
            LayoutError::invalid(path, strip_position(&inner))
        } else {
            LayoutError::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: strip_position(&inner),
            }
        }
    })?;
    doc.validate()?;
    Ok(doc)
}

/// Canonical text form: pretty JSON with a trailing newline.
pub fn serialize_layout(doc: &LayoutDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("layout documents always serialize");
    s.push('\n');
    s
}

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}

/// 32-bit FNV-1a of a panel id; identifies the panel in binary frame headers.
pub fn panel_hash(id: &str) -> u32 {
    const OFFSET: u32 = 0x811c_9dc5;
    const PRIME: u32 = 0x0100_0193;
    id.bytes().fold(OFFSET, |h, b| (h ^ b as u32).wrapping_mul(PRIME))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r##"{
        "name": "mini",
        "site_pattern": "https://example.com/*",
        "panels": [
            {
                "id": "main",
                "display_name": "Main",
                "role": "primary-content",
                "region": { "selector": "#main" },
                "placement_hint": { "zone": "midair-center", "distance": "mid" }
            }
        ]
    }"##;

    fn with_panels(panels: &str) -> String {
        format!(r#"{{"name":"t","site_pattern":"*","panels":[{panels}]}}"#)
    }

    fn panel(id: &str, extra: &str) -> String {
        format!(
            r#"{{"id":"{id}","display_name":"x","role":"control","region":{{"rect":{{"x":0,"y":0,"w":10,"h":10}}}},"placement_hint":{{"zone":"surface","distance":"near"}}{extra}}}"#
        )
    }

    #[test]
    fn minimal_document_round_trips() {
        let doc = parse_layout(MINIMAL).unwrap();
        assert_eq!(doc.panels[0].anchoring, Anchoring::Document);
        assert_eq!(doc.panels[0].interaction_hint, InteractionHint::Auto);
        assert_eq!(doc.panels[0].placement_hint.scale, 1.0);
        let text = serialize_layout(&doc);
        assert_eq!(parse_layout(&text).unwrap(), doc);
        assert_eq!(serialize_layout(&parse_layout(&text).unwrap()), text);
    }

    #[test]
    fn duplicate_ids_reported_at_second_panel() {
        let text = with_panels(&format!("{},{}", panel("a", ""), panel("a", "")));
        let err = parse_layout(&text).unwrap_err();
        assert_eq!(err.path(), "panels[1].id");
    }

    #[test]
    fn unknown_zone_rejected_with_path() {
        let text = MINIMAL.replace("midair-center", "ceiling");
        let err = parse_layout(&text).unwrap_err();
        assert_eq!(err.path(), "panels[0].placement_hint.zone");
    }

    #[test]
    fn unknown_role_rejected() {
        let err = parse_layout(&MINIMAL.replace("primary-content", "decoration")).unwrap_err();
        assert_eq!(err.path(), "panels[0].role");
    }

    #[test]
    fn region_needs_exactly_one_source() {
        let both = MINIMAL.replace(r##"{ "selector": "#main" }"##, r##"{ "selector": "#main", "rect": {"x":0,"y":0,"w":1,"h":1} }"##);
        assert_eq!(parse_layout(&both).unwrap_err().path(), "panels[0].region");
        let neither = MINIMAL.replace(r##"{ "selector": "#main" }"##, "{}");
        assert_eq!(parse_layout(&neither).unwrap_err().path(), "panels[0].region");
    }

    #[test]
    fn degenerate_rect_rejected() {
        let text = with_panels(&panel("a", "").replace(r#""w":10"#, r#""w":0"#));
        assert_eq!(parse_layout(&text).unwrap_err().path(), "panels[0].region.rect");
    }

    #[test]
    fn non_positive_scale_rejected() {
        let text = MINIMAL.replace(r#""distance": "mid""#, r#""distance": "mid", "scale": 0"#);
        assert_eq!(parse_layout(&text).unwrap_err().path(), "panels[0].placement_hint.scale");
    }

    #[test]
    fn empty_panel_list_rejected() {
        assert_eq!(parse_layout(&with_panels("")).unwrap_err().path(), "panels");
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_layout("{\n  \"name\": ").unwrap_err() {
            LayoutError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn panel_hash_is_fnv1a() {
        assert_eq!(panel_hash(""), 0x811c_9dc5);
        assert_eq!(panel_hash("a"), 0xe40c_292c);
        assert_eq!(panel_hash("foobar"), 0xbf9c_f968);
    }

    fn arb_rect() -> impl Strategy<Value = RegionRect> {
        (-1e4f64..1e4, -1e4f64..1e4, 0.5f64..5e3, 0.5f64..5e3).prop_map(|(x, y, w, h)| RegionRect::new(x, y, w, h))
    }

    fn arb_panel(i: usize) -> impl Strategy<Value = PanelSpec> {
        let region = prop_oneof![
            ("[#.a-z_-]{1,16}", prop::option::of(arb_rect())).prop_map(|(selector, fallback)| Region::Selector { selector, fallback }),
            arb_rect().prop_map(Region::Rect),
        ];
        (
            "[a-z]{1,6}",
            "\\PC{0,12}",
            prop_oneof![Just(Role::PrimaryContent), Just(Role::Control), Just(Role::Context), Just(Role::Peripheral)],
            region,
            prop_oneof![Just(Anchoring::Document), Just(Anchoring::Viewport)],
            prop_oneof![Just(Zone::Surface), Just(Zone::MidairCenter), Just(Zone::MidairSide), Just(Zone::Peripheral)],
            prop_oneof![Just(Distance::Near), Just(Distance::Mid), Just(Distance::Far)],
            0.01f64..10.0,
            prop_oneof![Just(InteractionHint::Touch), Just(InteractionHint::Ray), Just(InteractionHint::Auto)],
        )
            .prop_map(move |(id, display_name, role, region, anchoring, zone, distance, scale, interaction_hint)| PanelSpec {
                id: format!("{id}-{i}"),
                display_name,
                role,
                region,
                anchoring,
                placement_hint: PlacementHint { zone, distance, scale },
                interaction_hint,
            })
    }

    fn arb_document() -> impl Strategy<Value = LayoutDocument> {
        (1usize..6)
            .prop_flat_map(|n| {
                let panels: Vec<_> = (0..n).map(arb_panel).collect();
                ("[a-z][a-z0-9-]{0,10}", "https://[a-z]{1,8}\\.com/[a-z*]{0,6}", panels)
            })
            .prop_map(|(name, site_pattern, panels)| LayoutDocument { name, site_pattern, panels })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(doc in arb_document()) {
            prop_assume!(doc.validate().is_ok());
            let text = serialize_layout(&doc);
            prop_assert_eq!(parse_layout(&text).unwrap(), doc);
        }
    }
}
