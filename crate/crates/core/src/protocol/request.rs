use super::fields::{
    read_adaptive_params, read_application, read_case, read_criteria, read_load,
    write_adaptive_params, write_application, write_case, write_criteria, write_load,
};
use super::xml::{self, Group, Unknown, XmlWriter};
use super::{Decoded, ProtocolError, SOAP_NS, TFPS_NS};
use crate::model::{
    AdaptiveParams, ApplicationIdentity, LoadProfile, PerformanceCriteria, RunMode, TestCase,
};

/// The unit of submission: who is testing, what to call, and what to expect.
#[derive(Debug, Clone, PartialEq)]
pub struct TestEnvelope {
    pub application: ApplicationIdentity,
    pub case: TestCase,
    pub criteria: PerformanceCriteria,
    pub load: Option<LoadProfile>,
    pub mode: RunMode,
    /// Only meaningful for master runs.
    pub adaptive: Option<AdaptiveParams>,
}

impl TestEnvelope {
    pub fn critical(
        application: ApplicationIdentity,
        case: TestCase,
        criteria: PerformanceCriteria,
    ) -> Self {
        TestEnvelope {
            application,
            case,
            criteria,
            load: None,
            mode: RunMode::Critical,
            adaptive: None,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let invalid = |e: crate::model::ModelError| ProtocolError::InvalidEnvelope(e.to_string());
        self.application.validate().map_err(invalid)?;
        self.case.validate().map_err(invalid)?;
        self.criteria.validate().map_err(invalid)?;
        if let Some(load) = &self.load {
            load.validate().map_err(invalid)?;
        }
        if let Some(adaptive) = &self.adaptive {
            if self.mode != RunMode::Master {
                return Err(ProtocolError::InvalidEnvelope(
                    "adaptive parameters are only allowed in master mode".into(),
                ));
            }
            adaptive.validate().map_err(invalid)?;
        }
        Ok(())
    }
}

pub(crate) fn write_soap_open(w: &mut XmlWriter) {
    w.raw(&format!(
        "<soap:Envelope xmlns:soap=\"{SOAP_NS}\"><soap:Header></soap:Header><soap:Body>"
    ));
}

pub(crate) fn write_soap_close(w: &mut XmlWriter) {
    w.raw("</soap:Body></soap:Envelope>");
}

/// Unwraps the SOAP envelope and returns the single body payload element.
pub(crate) fn soap_payload<'a, 'input>(
    doc: &'a roxmltree::Document<'input>,
    payload: &'static str,
    warnings: &mut Vec<String>,
) -> Result<roxmltree::Node<'a, 'input>, ProtocolError> {
    let root = xml::expect_root(doc, SOAP_NS, "Envelope")?;
    let env = Group::collect(root, SOAP_NS, &["Header", "Body"], Unknown::Reject, warnings)?;
    env.require(&["Body"])?;
    if let Some(header) = env.opt("Header") {
        Group::collect(header, SOAP_NS, &[], Unknown::Reject, warnings)?;
    }
    let body = Group::collect(env.one("Body"), TFPS_NS, &[payload], Unknown::Reject, warnings)?;
    body.require(&[payload])?;
    Ok(body.one(payload))
}

/// Encodes a request as a SOAP 1.2 envelope with an `m:TFPService` body.
pub fn encode_request(env: &TestEnvelope) -> Result<String, ProtocolError> {
    env.validate()?;
    let mut w = XmlWriter::new("m");
    write_soap_open(&mut w);
    w.start_with("TFPService", &[("xmlns:m", TFPS_NS)]);
    write_application(&mut w, &env.application);
    write_case(&mut w, &env.case);
    write_criteria(&mut w, &env.criteria);
    if let Some(load) = &env.load {
        write_load(&mut w, "load", load);
    }
    if env.mode == RunMode::Master {
        w.text("mode", RunMode::Master.as_str());
    }
    if let Some(adaptive) = &env.adaptive {
        write_adaptive_params(&mut w, adaptive);
    }
    w.end("TFPService");
    write_soap_close(&mut w);
    Ok(w.finish())
}

const SERVICE: [&str; 6] = ["application", "case", "criteria", "load", "mode", "adaptive"];

pub fn decode_request(xml_text: &str) -> Result<Decoded<TestEnvelope>, ProtocolError> {
    let doc = xml::parse_document(xml_text)?;
    let mut warnings = Vec::new();
    let svc = soap_payload(&doc, "TFPService", &mut warnings)?;
    let g = Group::collect(svc, TFPS_NS, &SERVICE, Unknown::Warn, &mut warnings)?;
    g.require(&["application", "case", "criteria"])?;
    let application = read_application(g.one("application"), TFPS_NS, &mut warnings)?;
    let case = read_case(g.one("case"), TFPS_NS, &mut warnings)?;
    let criteria = read_criteria(g.one("criteria"), TFPS_NS, &mut warnings)?;
    let load = g
        .opt("load")
        .map(|n| read_load(n, TFPS_NS, &mut warnings))
        .transpose()?;
    let mode = match g.opt("mode") {
        Some(_) => g
            .trimmed("mode")?
            .parse::<RunMode>()
            .map_err(|e| ProtocolError::field("mode", e))?,
        None => RunMode::Critical,
    };
    let adaptive = g
        .opt("adaptive")
        .map(|n| read_adaptive_params(n, TFPS_NS, &mut warnings))
        .transpose()?;
    let env = TestEnvelope {
        application,
        case,
        criteria,
        load,
        mode,
        adaptive,
    };
    env.validate()
        .map_err(|e| ProtocolError::field("adaptive", e.to_string()))?;
    Ok(Decoded {
        value: env,
        warnings,
    })
}
