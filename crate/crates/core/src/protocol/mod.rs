//! XML wire formats.
//!
//! Three document families travel over HTTP:
//!
//! * the SOAP 1.2 request envelope (`m:TFPService`) and result envelope
//!   (`m:TFPServiceResult`) between client and service,
//! * the run-center documents (`tfp:instructionSet`, `tfp:measurement`,
//!   `tfp:outcome`, `tfp:status`) between service and run center,
//! * the stored result record (`m:TFPRecord`), one file per task.
//!
//! Encoders are deterministic and emit compact XML. Decoders are strict about
//! namespaces, element names, cardinality and order, ignore whitespace-only text
//! between elements, and report unknown elements inside the payload as warnings.

mod fault;
mod fields;
mod record;
mod request;
mod result;
mod runcenter;
pub(crate) mod xml;

pub use fault::{decode_fault, encode_fault, Fault};
pub use record::{decode_record, encode_record, TestResultRecord};
pub use request::{decode_request, encode_request, TestEnvelope};
pub use result::{decode_result, encode_result, ResultEnvelope};
pub use runcenter::{
    decode_instructions, decode_run_report, decode_status, encode_instructions,
    encode_measurement, encode_outcome, encode_status, InstructionSet, RunReport, StatusDocument,
};

pub const SOAP_NS: &str = "http://www.w3.org/2003/05/soap-envelope";
pub const TFPS_NS: &str = "urn:tfpaas:tfps:v1";
pub const RUNCENTER_NS: &str = "urn:tfpaas:runcenter:v1";

pub const SOAP_CONTENT_TYPE: &str = "application/soap+xml; charset=utf-8";
pub const XML_CONTENT_TYPE: &str = "application/xml";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("E_MALFORMED_XML: {0}")]
    MalformedXml(String),
    #[error("E_SCHEMA: {detail} [{}]", offenders.join(", "))]
    Schema { offenders: Vec<String>, detail: String },
    #[error("E_FIELD: invalid {field}: {reason}")]
    Field { field: String, reason: String },
    #[error("E_INVALID_ENVELOPE: {0}")]
    InvalidEnvelope(String),
}

impl ProtocolError {
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::MalformedXml(_) => "E_MALFORMED_XML",
            ProtocolError::Schema { .. } => "E_SCHEMA",
            ProtocolError::Field { .. } => "E_FIELD",
            ProtocolError::InvalidEnvelope(_) => "E_INVALID_ENVELOPE",
        }
    }

    pub(crate) fn schema<'s>(
        offenders: impl IntoIterator<Item = &'s str>,
        detail: impl Into<String>,
    ) -> Self {
        ProtocolError::Schema {
            offenders: offenders.into_iter().map(str::to_string).collect(),
            detail: detail.into(),
        }
    }

    pub(crate) fn field(field: &str, reason: impl Into<String>) -> Self {
        ProtocolError::Field {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn from_model(e: crate::model::ModelError) -> Self {
        ProtocolError::field(e.field(), e.to_string())
    }
}

/// A decoded value plus the warnings produced while decoding it.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded<T> {
    pub value: T,
    pub warnings: Vec<String>,
}
