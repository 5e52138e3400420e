use roxmltree::Node;
use uuid::Uuid;

use super::fields::{
    read_outcome_body, read_summary, read_verdict, write_outcome_body, write_summary,
    write_verdict,
};
use super::request::{soap_payload, write_soap_close, write_soap_open};
use super::xml::{self, Group, Unknown, XmlWriter};
use super::{Decoded, ProtocolError, TFPS_NS};
use crate::model::{AdaptiveOutcome, MeasurementSummary, RunStatus, TestVerdict};

/// What the service tells the client about a task.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultEnvelope {
    pub task_id: Uuid,
    pub status: RunStatus,
    pub detail_url: String,
    pub verdict: Option<TestVerdict>,
    pub summary: Option<MeasurementSummary>,
    /// Adaptive search results of a master run.
    pub adaptive: Option<AdaptiveOutcome>,
    /// Failure reason of a FAILED task.
    pub error: Option<String>,
}

impl ResultEnvelope {
    pub fn pending(task_id: Uuid, detail_url: String) -> Self {
        ResultEnvelope {
            task_id,
            status: RunStatus::Pending,
            detail_url,
            verdict: None,
            summary: None,
            adaptive: None,
            error: None,
        }
    }

    pub fn failed(task_id: Uuid, detail_url: String, error: impl Into<String>) -> Self {
        ResultEnvelope {
            status: RunStatus::Failed,
            error: Some(error.into()),
            ..ResultEnvelope::pending(task_id, detail_url)
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.detail_url.ends_with(&self.task_id.hyphenated().to_string()) {
            return Err("detailUrl must end with the task id".into());
        }
        let has_result = self.verdict.is_some() || self.summary.is_some();
        match self.status {
            RunStatus::Done if self.verdict.is_none() || self.summary.is_none() => {
                return Err("DONE result needs verdict and summary".into())
            }
            RunStatus::Pending | RunStatus::Failed if has_result => {
                return Err(format!(
                    "{} result must not carry verdict or summary",
                    self.status.as_str()
                ))
            }
            _ => {}
        }
        if self.adaptive.is_some() && self.status != RunStatus::Done {
            return Err("adaptive outcome only allowed on DONE results".into());
        }
        if self.error.is_some() && self.status != RunStatus::Failed {
            return Err("error only allowed on FAILED results".into());
        }
        if let Some(v) = &self.verdict {
            v.validate().map_err(|e| e.to_string())?;
        }
        if let Some(s) = &self.summary {
            s.validate().map_err(|e| e.to_string())?;
        }
        if let Some(a) = &self.adaptive {
            a.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

pub(crate) fn write_result_element(w: &mut XmlWriter, r: &ResultEnvelope, xmlns: bool) {
    if xmlns {
        w.start_with("TFPServiceResult", &[("xmlns:m", TFPS_NS)]);
    } else {
        w.start("TFPServiceResult");
    }
    w.text("taskId", &r.task_id.hyphenated().to_string());
    w.text("status", r.status.as_str());
    w.text("detailUrl", &r.detail_url);
    if let Some(v) = &r.verdict {
        write_verdict(w, v);
    }
    if let Some(s) = &r.summary {
        write_summary(w, "summary", s);
    }
    if let Some(a) = &r.adaptive {
        w.start("adaptive");
        write_outcome_body(w, a);
        w.end("adaptive");
    }
    if let Some(e) = &r.error {
        w.text("error", e);
    }
    w.end("TFPServiceResult");
}

const RESULT: [&str; 7] = [
    "taskId",
    "status",
    "detailUrl",
    "verdict",
    "summary",
    "adaptive",
    "error",
];

pub(crate) fn read_result_element(
    node: Node<'_, '_>,
    warnings: &mut Vec<String>,
) -> Result<ResultEnvelope, ProtocolError> {
    let g = Group::collect(node, TFPS_NS, &RESULT, Unknown::Warn, warnings)?;
    g.require(&["taskId", "status", "detailUrl"])?;
    let status: RunStatus = g
        .trimmed("status")?
        .parse()
        .map_err(|e: String| ProtocolError::field("status", e))?;
    let r = ResultEnvelope {
        task_id: g.uuid("taskId")?,
        status,
        detail_url: g.trimmed("detailUrl")?,
        verdict: g
            .opt("verdict")
            .map(|n| read_verdict(n, TFPS_NS, warnings))
            .transpose()?,
        summary: g
            .opt("summary")
            .map(|n| read_summary(n, TFPS_NS, warnings))
            .transpose()?,
        adaptive: g
            .opt("adaptive")
            .map(|n| read_outcome_body(n, TFPS_NS, warnings))
            .transpose()?,
        error: g.opt("error").map(xml::leaf_text).transpose()?,
    };
    r.validate()
        .map_err(|detail| ProtocolError::schema(["status"], detail))?;
    Ok(r)
}

pub fn encode_result(r: &ResultEnvelope) -> Result<String, ProtocolError> {
    r.validate().map_err(ProtocolError::InvalidEnvelope)?;
    let mut w = XmlWriter::new("m");
    write_soap_open(&mut w);
    write_result_element(&mut w, r, true);
    write_soap_close(&mut w);
    Ok(w.finish())
}

pub fn decode_result(xml_text: &str) -> Result<Decoded<ResultEnvelope>, ProtocolError> {
    let doc = xml::parse_document(xml_text)?;
    let mut warnings = Vec::new();
    let node = soap_payload(&doc, "TFPServiceResult", &mut warnings)?;
    let value = read_result_element(node, &mut warnings)?;
    Ok(Decoded { value, warnings })
}
