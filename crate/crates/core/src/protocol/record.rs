use chrono::{DateTime, Utc};
use uuid::Uuid;

use super::fields::{
    read_adaptive_params, read_application, read_case, read_criteria, read_load,
    write_adaptive_params, write_application, write_case, write_criteria, write_load,
};
use super::result::{read_result_element, write_result_element, ResultEnvelope};
use super::xml::{self, Group, Unknown, XmlWriter};
use super::{Decoded, ProtocolError, TFPS_NS};
use crate::model::{
    AdaptiveParams, ApplicationIdentity, LoadProfile, PerformanceCriteria, RunMode, TestCase,
};

/// A stored task: the request echo plus the result envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResultRecord {
    pub task_id: Uuid,
    pub mode: RunMode,
    pub submitted_at: DateTime<Utc>,
    /// Set once the task reaches a terminal status.
    pub finished_at: Option<DateTime<Utc>>,
    pub identity: ApplicationIdentity,
    pub case: TestCase,
    pub criteria: PerformanceCriteria,
    pub profile: LoadProfile,
    pub adaptive: Option<AdaptiveParams>,
    pub result: ResultEnvelope,
}

impl TestResultRecord {
    pub fn detail_url(&self) -> &str {
        &self.result.detail_url
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.result.task_id != self.task_id {
            return Err("record and result task ids differ".into());
        }
        if self.finished_at.is_some() != self.result.status.is_terminal() {
            return Err("finishedAt must be present iff the status is terminal".into());
        }
        self.identity.validate().map_err(|e| e.to_string())?;
        self.case.validate().map_err(|e| e.to_string())?;
        self.criteria.validate().map_err(|e| e.to_string())?;
        self.profile.validate().map_err(|e| e.to_string())?;
        if let Some(a) = &self.adaptive {
            a.validate().map_err(|e| e.to_string())?;
        }
        self.result.validate()
    }
}

pub fn encode_record(r: &TestResultRecord) -> Result<String, ProtocolError> {
    r.validate().map_err(ProtocolError::InvalidEnvelope)?;
    let mut w = XmlWriter::new("m");
    w.start_with("TFPRecord", &[("xmlns:m", TFPS_NS)]);
    w.text("taskId", &r.task_id.hyphenated().to_string());
    w.text("mode", r.mode.as_str());
    w.time("submittedAt", &r.submitted_at);
    if let Some(t) = &r.finished_at {
        w.time("finishedAt", t);
    }
    write_application(&mut w, &r.identity);
    write_case(&mut w, &r.case);
    write_criteria(&mut w, &r.criteria);
    write_load(&mut w, "profile", &r.profile);
    if let Some(a) = &r.adaptive {
        write_adaptive_params(&mut w, a);
    }
    write_result_element(&mut w, &r.result, false);
    w.end("TFPRecord");
    Ok(w.finish())
}

const RECORD: [&str; 10] = [
    "taskId",
    "mode",
    "submittedAt",
    "finishedAt",
    "application",
    "case",
    "criteria",
    "profile",
    "adaptive",
    "TFPServiceResult",
];

pub fn decode_record(xml_text: &str) -> Result<Decoded<TestResultRecord>, ProtocolError> {
    let doc = xml::parse_document(xml_text)?;
    let mut warnings = Vec::new();
    let root = xml::expect_root(&doc, TFPS_NS, "TFPRecord")?;
    let g = Group::collect(root, TFPS_NS, &RECORD, Unknown::Warn, &mut warnings)?;
    g.require(&[
        "taskId",
        "mode",
        "submittedAt",
        "application",
        "case",
        "criteria",
        "profile",
        "TFPServiceResult",
    ])?;
    let mode = g
        .trimmed("mode")?
        .parse::<RunMode>()
        .map_err(|e| ProtocolError::field("mode", e))?;
    let record = TestResultRecord {
        task_id: g.uuid("taskId")?,
        mode,
        submitted_at: g.time("submittedAt")?,
        finished_at: g.opt("finishedAt").map(|_| g.time("finishedAt")).transpose()?,
        identity: read_application(g.one("application"), TFPS_NS, &mut warnings)?,
        case: read_case(g.one("case"), TFPS_NS, &mut warnings)?,
        criteria: read_criteria(g.one("criteria"), TFPS_NS, &mut warnings)?,
        profile: read_load(g.one("profile"), TFPS_NS, &mut warnings)?,
        adaptive: g
            .opt("adaptive")
            .map(|n| read_adaptive_params(n, TFPS_NS, &mut warnings))
            .transpose()?,
        result: read_result_element(g.one("TFPServiceResult"), &mut warnings)?,
    };
    record
        .validate()
        .map_err(|detail| ProtocolError::schema(["TFPRecord"], detail))?;
    Ok(Decoded {
        value: record,
        warnings,
    })
}
