use serde::{Deserialize, Serialize};

use crate::bridge::InjectedAction;
use crate::policy::InputMode;
use crate::protocol::{ErrorCode, InputAction};
use crate::PanelPose;

pub const SCRIPT_EXTENSION: &str = "btwscript";

/// A timed sequence of client actions and expectations, stored as JSON with
/// the `.btwscript` extension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayScript {
    /// Layout name; when absent the layout is matched from `url`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<String>,
    #[serde(default = "default_url")]
    pub url: String,
    /// Capture rate on the virtual clock; defaults to the config's max_fps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps: Option<u32>,
    /// Frames are captured until this time; defaults to the last step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
    #[serde(default)]
    pub steps: Vec<Step>,
}

fn default_url() -> String {
    "mock://grid".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub at_ms: u64,
    #[serde(flatten)]
    pub action: StepAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepAction {
    Input(ScriptInput),
    Transform(ScriptTransform),
    Scroll { x: f64, y: f64 },
    /// Capture `count` frames right away, outside the regular cadence.
    Capture {
        #[serde(default = "one")]
        count: u32,
    },
    Expect(Expectation),
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptInput {
    pub panel_id: String,
    /// Assigned automatically when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_seq: Option<u64>,
    #[serde(flatten)]
    pub action: InputAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptTransform {
    pub panel_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_seq: Option<u64>,
    pub pose: PanelPose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    /// The page received exactly these events since the previous `injected`
    /// expectation (or the start).
    Injected(Vec<InjectedAction>),
    PanelState {
        panel_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        input_mode: Option<InputMode>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anchored: Option<bool>,
    },
    /// The frame trace so far satisfies the synchronization invariant.
    Sync,
    /// The previous input or transform step failed with `code`, or succeeded
    /// when `code` is null.
    Error { code: Option<ErrorCode> },
    Scroll { x: f64, y: f64 },
}

impl Expectation {
    pub fn kind(&self) -> &'static str {
        match self {
            Expectation::Injected(_) => "injected",
            Expectation::PanelState { .. } => "panel-state",
            Expectation::Sync => "sync",
            Expectation::Error { .. } => "error",
            Expectation::Scroll { .. } => "scroll",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ScriptError {
    pub path: String,
    pub message: String,
}

pub fn parse_script(text: &str) -> Result<ReplayScript, ScriptError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let s: ReplayScript = serde_path_to_error::deserialize(de).map_err(|e| ScriptError {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    s.validate()?;
    Ok(s)
}

impl ReplayScript {
    pub fn validate(&self) -> Result<(), ScriptError> {
        if self.fps == Some(0) {
            return Err(ScriptError {
                path: "fps".into(),
                message: "must be positive".into(),
            });
        }
        for (i, w) in self.steps.windows(2).enumerate() {
            if w[1].at_ms < w[0].at_ms {
                return Err(ScriptError {
                    path: format!("steps[{}].at_ms", i + 1),
                    message: format!("{} is before the previous step at {}", w[1].at_ms, w[0].at_ms),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scripts serialize");
        s.push('\n');
        s
    }
}
