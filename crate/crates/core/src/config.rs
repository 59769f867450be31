//! Server and session settings, as read from a JSON config file.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bridge::DEFAULT_MAX_FPS;
use crate::protocol::FrameFormat;
use crate::PolicyConfig;

pub const DEFAULT_PORT: u16 = 7420;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BridgeKind {
    #[default]
    Mock,
    Devtools,
}

/// Mock page geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockOptions {
    pub viewport_w: f64,
    pub viewport_h: f64,
    pub device_scale: f64,
}

impl Default for MockOptions {
    fn default() -> Self {
        let (w, h) = crate::bridge::mock::DEFAULT_VIEWPORT;
        Self {
            viewport_w: w,
            viewport_h: h,
            device_scale: 1.0,
        }
    }
}

/// What a session needs beyond its bridge and layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub max_fps: u32,
    /// Scroll the page to reach input aimed at content outside the viewport.
    pub auto_scroll: bool,
    pub frame_format: FrameFormat,
    /// Shared secret clients must present in their hello.
    pub token: Option<String>,
    pub policy: PolicyConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            max_fps: DEFAULT_MAX_FPS,
            auto_scroll: true,
            frame_format: FrameFormat::Png,
            token: None,
            policy: PolicyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub url: Option<String>,
    pub bridge: BridgeKind,
    pub devtools_endpoint: Option<String>,
    pub port: Option<u16>,
    pub layout_dir: Option<PathBuf>,
    pub layout: Option<String>,
    pub mock: MockOptions,
    #[serde(flatten)]
    pub session: SessionConfig,
}

impl ServerConfig {
    pub fn port(&self) -> u16 {
        self.port.unwrap_or(DEFAULT_PORT)
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| format!("{}: {}", e.path(), e.inner()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.session.max_fps == 0 {
            return Err("max_fps: must be positive".into());
        }
        let m = &self.mock;
        if !(m.viewport_w > 0.0 && m.viewport_h > 0.0 && m.device_scale > 0.0 && m.device_scale.is_finite()) {
            return Err("mock: viewport and device_scale must be positive".into());
        }
        self.session.policy.validate().map_err(|e| format!("policy: {e}"))
    }
}
