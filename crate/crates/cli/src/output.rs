//! Run manifests and CSV rendering.
//!
//! `manifest.json` (sweep) and `validation.json` (validate) share one
//! schema:
//!
//! ```text
//! {
//!   "tool": "effq",
//!   "version": "<crate version>",
//!   "command": "sweep" | "validate",
//!   "seed": <u64>,
//!   "sweep": <SweepConfig> | null,
//!   "validation_config": <ValidationConfig> | null,
//!   "rows": [ { "snr_db", "n_rx", "status", "bits_required", "point" } ],
//!   "reports": [ <FitReport> ],
//!   "pass": <bool> | null
//! }
//! ```
//!
//! `status` is `ok`, `infeasible` (no bit count reaches the target gap) or
//! `over-capacity` (the codebook would exceed the size limit); `point` is
//! present only for `ok` rows. Timing is deliberately absent so the file is
//! a pure function of config and seed. Passing a manifest back through
//! `--config` reruns the same experiment.

use std::fmt::Write as _;

use effq_core::sim::GridPoint;
use effq_core::validation::ValidationConfig;
use effq_core::FitReport;
use serde::{Deserialize, Serialize};

use crate::config::SweepConfig;

pub const CSV_HEADER: &str =
    "snr_db,n_rx,bits,rate_fb_mean,rate_fb_ci,rate_zf_mean,rate_zf_ci,gap,dropped";

pub const SCALING_HEADER: &str =
    "m,n_rx,snr_db,rate_gap,bits_unrounded,bits_ceil,savings_exact,savings_approx";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    Infeasible,
    OverCapacity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub n_rx: usize,
    pub status: RowStatus,
    /// Integer bits the rule asked for; absent when infeasible.
    pub bits_required: Option<i64>,
    pub point: Option<GridPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub sweep: Option<SweepConfig>,
    pub validation_config: Option<ValidationConfig>,
    pub rows: Vec<SweepRow>,
    pub reports: Vec<FitReport>,
    pub pass: Option<bool>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            tool: "effq".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            sweep: None,
            validation_config: None,
            rows: Vec::new(),
            reports: Vec::new(),
            pass: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// The fields of a manifest needed to rerun it.
#[derive(Debug, Deserialize)]
pub struct ManifestInput {
    pub command: String,
    pub seed: u64,
    pub sweep: Option<SweepConfig>,
    pub validation_config: Option<ValidationConfig>,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = match (&r.point, r.status) {
            (Some(p), _) => writeln!(
                out,
                "{},{},{},{:.6},{},{:.6},{},{:.6},{}",
                r.snr_db,
                r.n_rx,
                p.bits,
                p.rate_fb_mean,
                opt(p.rate_fb_ci),
                p.rate_zf_mean,
                opt(p.rate_zf_ci),
                p.gap,
                p.dropped
            ),
            (None, status) => {
                let tag = match status {
                    RowStatus::OverCapacity => "over-capacity",
                    _ => "infeasible",
                };
                writeln!(out, "{},{},{tag},,,,,,", r.snr_db, r.n_rx)
            }
        };
    }
    out
}

/// One line of the scaling table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub m: usize,
    pub n: usize,
    pub snr_db: f64,
    pub rate_gap: f64,
    /// `None` when the target gap is unreachable.
    pub bits_unrounded: Option<f64>,
    pub bits_ceil: Option<i64>,
    pub savings_exact: Option<f64>,
    pub savings_approx: Option<f64>,
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from(SCALING_HEADER);
    out.push('\n');
    for r in rows {
        let unrounded = r
            .bits_unrounded
            .map(|b| format!("{b:.6}"))
            .unwrap_or_else(|| "infeasible".into());
        let ceil = r.bits_ceil.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{unrounded},{ceil},{},{}",
            r.m,
            r.n,
            r.snr_db,
            r.rate_gap,
            opt(r.savings_exact),
            opt(r.savings_approx)
        );
    }
    out
}
