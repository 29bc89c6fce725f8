//! Dataset linting: checks that catch the ways a benchmark quietly goes wrong.

mod black;
mod camera_split;
mod folds;
mod forensics;
mod uniform;

pub use black::{detect_unsubtracted_black, BLACK_PERCENTILE, DEFAULT_BLACK_THRESHOLD};
pub use camera_split::{
    camera_split_analysis, fit_line_tls, CameraLine, CameraSplitReport, LineFit, TWO_LINE_FACTOR, TWO_LINE_RULE,
};
pub use folds::{
    audit_folds, fold_camera_findings, make_folds, stratified_folds, FoldAudit, FoldComposition, FoldSpec, ShuffleMode,
    DEFAULT_CENTROID_THRESHOLD,
};
pub use forensics::{
    attribute_pipeline, estimates_identity, pipeline_forensics, Attribution, IDENTITY_ANGLE, IDENTITY_FRACTION,
};
pub use uniform::{uniform_illumination_check, LabeledRegion, UniformityReport, DEFAULT_UNIFORM_THRESHOLD};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// The fixed registry of checks a finding can come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckId {
    UnsubtractedBlack,
    PipelineIdentity,
    PipelineAttribution,
    CameraSplit,
    FoldCamera,
    FoldCentroid,
    UniformIllumination,
}

impl CheckId {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::UnsubtractedBlack => "unsubtracted-black",
            CheckId::PipelineIdentity => "pipeline-identity",
            CheckId::PipelineAttribution => "pipeline-attribution",
            CheckId::CameraSplit => "camera-split",
            CheckId::FoldCamera => "fold-camera",
            CheckId::FoldCentroid => "fold-centroid",
            CheckId::UniformIllumination => "uniform-illumination",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warn,
    Fail,
}

impl std::str::FromStr for Severity {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "info" => Ok(Severity::Info),
            "warn" => Ok(Severity::Warn),
            "fail" => Ok(Severity::Fail),
            other => Err(crate::Error::InvalidArgument(format!("unknown severity {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub check_id: CheckId,
    pub severity: Severity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_id: Option<String>,
    pub message: String,
    #[serde(default)]
    pub evidence: BTreeMap<String, serde_json::Value>,
}

impl Finding {
    pub fn new(check_id: CheckId, severity: Severity, message: impl Into<String>) -> Self {
        Self {
            check_id,
            severity,
            image_id: None,
            message: message.into(),
            evidence: BTreeMap::new(),
        }
    }

    pub fn for_image(mut self, image_id: impl Into<String>) -> Self {
        self.image_id = Some(image_id.into());
        self
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.evidence.insert(key.to_string(), v);
        self
    }
}

/// Findings in deterministic `(check_id, image_id)` order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HygieneReport {
    pub findings: Vec<Finding>,
}

impl HygieneReport {
    pub fn new(mut findings: Vec<Finding>) -> Self {
        // Stable: findings of one check on one image keep their emission order.
        findings.sort_by(|a, b| (a.check_id, &a.image_id).cmp(&(b.check_id, &b.image_id)));
        Self { findings }
    }

    pub fn worst(&self) -> Option<Severity> {
        self.findings.iter().map(|f| f.severity).max()
    }

    /// True when any finding is at least as severe as `fail_on`.
    pub fn fails(&self, fail_on: Severity) -> bool {
        self.worst().is_some_and(|w| w >= fail_on)
    }

    pub fn count(&self, severity: Severity) -> usize {
        self.findings.iter().filter(|f| f.severity == severity).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_order_and_threshold() {
        let r = HygieneReport::new(vec![
            Finding::new(CheckId::FoldCamera, Severity::Warn, "b").for_image("2"),
            Finding::new(CheckId::UnsubtractedBlack, Severity::Info, "a").for_image("9"),
            Finding::new(CheckId::UnsubtractedBlack, Severity::Warn, "a").for_image("1"),
        ]);
        let order: Vec<_> = r.findings.iter().map(|f| f.image_id.clone().unwrap()).collect();
        assert_eq!(order, ["1", "9", "2"]);
        assert!(r.fails(Severity::Warn));
        assert!(!r.fails(Severity::Fail));
        assert_eq!(r.count(Severity::Warn), 2);
    }

    #[test]
    fn check_ids_serialize_kebab() {
        let f = Finding::new(CheckId::PipelineIdentity, Severity::Fail, "x").with("n", 3);
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["check_id"], "pipeline-identity");
        assert_eq!(v["severity"], "fail");
        assert_eq!(v["evidence"]["n"], 3);
        for id in [CheckId::CameraSplit, CheckId::UniformIllumination] {
            assert_eq!(serde_json::to_value(id).unwrap(), id.as_str());
        }
    }
}
