use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bridge::Seq;

/// Panels emitted by one decompose call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    /// Seq of the source frame that was decomposed.
    pub frame_seq: Seq,
    /// `(panel_id, source_seq)` per emitted panel frame.
    pub panels: Vec<(String, Seq)>,
}

/// What the pipeline produced and what a client received.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SyncTrace {
    pub batches: Vec<Batch>,
    /// `(panel_id, source_seq)` in client arrival order.
    pub deliveries: Vec<(String, Seq)>,
}

/// Passes iff every batch carries a single source_seq and each panel's
/// delivered seqs never decrease.
pub fn assert_sync(trace: &SyncTrace) -> Result<(), String> {
    for (i, b) in trace.batches.iter().enumerate() {
        if let Some((id, s)) = b.panels.iter().find(|(_, s)| *s != b.frame_seq) {
            return Err(format!(
                "batch {i} from frame {} has panel {id:?} at seq {s}",
                b.frame_seq
            ));
        }
    }
    let mut last: BTreeMap<&str, Seq> = BTreeMap::new();
    for (i, (id, s)) in trace.deliveries.iter().enumerate() {
        if let Some(prev) = last.insert(id, *s) {
            if *s < prev {
                return Err(format!("delivery {i}: panel {id:?} went from seq {prev} back to {s}"));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionResult {
    pub step: usize,
    pub at_ms: u64,
    pub kind: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

/// Min / median / max in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl LatencyStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut v = samples.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        Self {
            count: n,
            min: v[0],
            median,
            max: v[n - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub layout: String,
    pub url: String,
    pub duration_ms: u64,
    pub steps: usize,
    pub frames_captured: u64,
    pub assertions: Vec<AssertionResult>,
    pub passed: usize,
    pub failed: usize,
    pub injected_events: usize,
    /// SHA-256 of the injection log's JSON encoding.
    pub injection_digest: String,
    /// Delivered source_seq per panel, in arrival order.
    pub frame_trace: BTreeMap<String, Vec<Seq>>,
    pub sync: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sync_detail: Option<String>,
    /// Input receipt to injection, on the virtual clock.
    pub latency_ms: LatencyStats,
}

impl ReplayReport {
    pub fn success(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}
