//! The JSON report envelope every command emits. Field order is fixed by
//! the struct definitions and map keys are sorted, so a report is a pure
//! function of (input bytes, flags, seed).

use std::collections::BTreeMap;

use serde::Serialize;
use ssp_core::unseen::{DiscretePosterior, McPath, Provenance};
use ssp_core::SampleSummary;

pub const SCHEMA_VERSION: &str = "1";

/// Round to 12 significant decimal digits; reports are decimal-stable
/// across platforms at that precision.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float reparses")
}

fn sig12_vec(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| sig12(x)).collect()
}

/// FNV-1a over the canonical fingerprint encoding, as a stable digest of
/// the input data.
pub fn fingerprint_hash(summary: &SampleSummary) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for (&r, &m) in summary.fingerprint() {
        for byte in format!("{r}:{m};").bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{hash:016x}")
}

#[derive(Serialize)]
pub struct InputsDigest {
    pub n: u64,
    pub k: u64,
    pub fingerprint_hash: String,
}

impl InputsDigest {
    pub fn of(summary: &SampleSummary) -> InputsDigest {
        InputsDigest { n: summary.n(), k: summary.k(), fingerprint_hash: fingerprint_hash(summary) }
    }
}

#[derive(Serialize)]
pub struct ParamsBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_method: Option<String>,
}

#[derive(Serialize)]
pub struct CredibleInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

#[derive(Serialize)]
pub struct PosteriorBlock {
    pub support_max: u64,
    pub log_pmf: Vec<f64>,
    pub mean: f64,
    pub provenance: String,
}

impl PosteriorBlock {
    pub fn of(post: &DiscretePosterior) -> PosteriorBlock {
        let provenance = match post.provenance() {
            Provenance::Exact => "exact",
            Provenance::MonteCarlo(McPath::Compound) => "monte-carlo:compound",
            Provenance::MonteCarlo(McPath::ForwardUrn) => "monte-carlo:forward-urn",
            Provenance::Approximation => "approximation",
        };
        PosteriorBlock {
            support_max: post.support_max(),
            log_pmf: sig12_vec(post.log_pmf()),
            mean: sig12(post.mean()),
            provenance: provenance.to_string(),
        }
    }
}

#[derive(Serialize)]
pub struct ReportEnvelope {
    pub schema_version: String,
    pub command: String,
    pub inputs: InputsDigest,
    pub params: ParamsBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<CredibleInterval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posterior: Option<PosteriorBlock>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ReportEnvelope {
    pub fn new(command: &str, summary: &SampleSummary) -> ReportEnvelope {
        ReportEnvelope {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            inputs: InputsDigest::of(summary),
            params: ParamsBlock { alpha: None, theta: None, fit_method: None },
            estimate: None,
            ci: None,
            posterior: None,
            diagnostics: BTreeMap::new(),
            seed: None,
        }
    }

    pub fn set_estimate(&mut self, value: f64) {
        self.estimate = Some(sig12(value));
    }

    pub fn set_ci(&mut self, lo: f64, hi: f64, level: f64) {
        self.ci = Some(CredibleInterval { lo: sig12(lo), hi: sig12(hi), level: sig12(level) });
    }

    pub fn set_params(&mut self, alpha: f64, theta: f64, fit_method: Option<&str>) {
        self.params.alpha = Some(sig12(alpha));
        self.params.theta = Some(sig12(theta));
        self.params.fit_method = fit_method.map(str::to_string);
    }

    pub fn diag_num(&mut self, key: &str, value: f64) {
        self.diagnostics.insert(key.to_string(), serde_json::json!(sig12(value)));
    }

    pub fn diag(&mut self, key: &str, value: serde_json::Value) {
        self.diagnostics.insert(key.to_string(), value);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serializes")
    }
}
