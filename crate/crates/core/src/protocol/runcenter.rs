//! Documents exchanged between the service and the run center over stateless
//! HTTP: an action document in, a measurement or outcome document back.

use uuid::Uuid;

use super::fields::{
    read_adaptive_params, read_application, read_case, read_criteria, read_load,
    read_outcome_body, write_adaptive_params, write_application, write_case, write_criteria,
    write_load, write_outcome_body,
};
use super::xml::{self, parse_decimal, Group, Unknown, XmlWriter};
use super::{Decoded, ProtocolError, RUNCENTER_NS};
use crate::model::{
    AdaptiveOutcome, AdaptiveParams, ApplicationIdentity, LoadProfile, Measurement,
    PerformanceCriteria, RunMode, TestCase,
};

pub const ACTION_EXECUTE: &str = "EXECUTE";
pub const ACTION_STATUS: &str = "STATUS";

/// Executable form of an envelope. Carries adaptive parameters iff it is a
/// master run.
#[derive(Debug, Clone, PartialEq)]
pub struct InstructionSet {
    pub task_id: Uuid,
    pub identity: ApplicationIdentity,
    pub case: TestCase,
    pub criteria: PerformanceCriteria,
    pub profile: LoadProfile,
    pub adaptive: Option<AdaptiveParams>,
}

impl InstructionSet {
    pub fn mode(&self) -> RunMode {
        if self.adaptive.is_some() {
            RunMode::Master
        } else {
            RunMode::Critical
        }
    }

    pub fn validate(&self) -> Result<(), crate::model::ModelError> {
        self.identity.validate()?;
        self.case.validate()?;
        self.criteria.validate()?;
        self.profile.validate()?;
        if let Some(a) = &self.adaptive {
            a.validate()?;
        }
        Ok(())
    }
}

/// Reply of `POST /execute`.
#[derive(Debug, Clone, PartialEq)]
pub enum RunReport {
    Measurement(Measurement),
    Outcome(AdaptiveOutcome),
}

fn ns_attrs(action: &'static str) -> [(&'static str, &'static str); 2] {
    [("xmlns:tfp", RUNCENTER_NS), ("action", action)]
}

pub fn encode_instructions(i: &InstructionSet) -> Result<String, ProtocolError> {
    i.validate()
        .map_err(|e| ProtocolError::InvalidEnvelope(e.to_string()))?;
    let mut w = XmlWriter::new("tfp");
    w.start_with("instructionSet", &ns_attrs(ACTION_EXECUTE));
    w.text("taskId", &i.task_id.hyphenated().to_string());
    write_application(&mut w, &i.identity);
    write_case(&mut w, &i.case);
    write_criteria(&mut w, &i.criteria);
    write_load(&mut w, "profile", &i.profile);
    if let Some(a) = &i.adaptive {
        write_adaptive_params(&mut w, a);
    }
    w.end("instructionSet");
    Ok(w.finish())
}

fn check_action(node: roxmltree::Node<'_, '_>, expected: &str) -> Result<(), ProtocolError> {
    match node.attribute("action") {
        Some(a) if a == expected => Ok(()),
        Some(other) => Err(ProtocolError::field(
            "action",
            format!("expected {expected}, got {other:?}"),
        )),
        None => Err(ProtocolError::field("action", "missing action attribute")),
    }
}

const INSTRUCTIONS: [&str; 6] = [
    "taskId",
    "application",
    "case",
    "criteria",
    "profile",
    "adaptive",
];

pub fn decode_instructions(xml_text: &str) -> Result<Decoded<InstructionSet>, ProtocolError> {
    let doc = xml::parse_document(xml_text)?;
    let mut warnings = Vec::new();
    let root = xml::expect_root(&doc, RUNCENTER_NS, "instructionSet")?;
    check_action(root, ACTION_EXECUTE)?;
    let g = Group::collect(root, RUNCENTER_NS, &INSTRUCTIONS, Unknown::Warn, &mut warnings)?;
    g.require(&INSTRUCTIONS[..5])?;
    let value = InstructionSet {
        task_id: g.uuid("taskId")?,
        identity: read_application(g.one("application"), RUNCENTER_NS, &mut warnings)?,
        case: read_case(g.one("case"), RUNCENTER_NS, &mut warnings)?,
        criteria: read_criteria(g.one("criteria"), RUNCENTER_NS, &mut warnings)?,
        profile: read_load(g.one("profile"), RUNCENTER_NS, &mut warnings)?,
        adaptive: g
            .opt("adaptive")
            .map(|n| read_adaptive_params(n, RUNCENTER_NS, &mut warnings))
            .transpose()?,
    };
    Ok(Decoded { value, warnings })
}

pub fn encode_measurement(m: &Measurement) -> Result<String, ProtocolError> {
    m.validate()
        .map_err(|e| ProtocolError::InvalidEnvelope(e.to_string()))?;
    let mut w = XmlWriter::new("tfp");
    w.start_with("measurement", &[("xmlns:tfp", RUNCENTER_NS)]);
    w.time("startedAt", &m.started_at);
    w.num("wallTime", m.wall_time_s);
    w.int("bytesReceived", m.bytes_received);
    w.int("httpErrors", m.http_error_count);
    w.int("transportErrors", m.transport_error_count);
    let latencies: Vec<String> = m.latencies_ms.iter().map(f64::to_string).collect();
    w.text("latencies", &latencies.join(" "));
    w.end("measurement");
    Ok(w.finish())
}

pub fn encode_outcome(o: &AdaptiveOutcome) -> Result<String, ProtocolError> {
    o.validate()
        .map_err(|e| ProtocolError::InvalidEnvelope(e.to_string()))?;
    let mut w = XmlWriter::new("tfp");
    w.start_with("outcome", &[("xmlns:tfp", RUNCENTER_NS)]);
    write_outcome_body(&mut w, o);
    w.end("outcome");
    Ok(w.finish())
}

const MEASUREMENT: [&str; 6] = [
    "startedAt",
    "wallTime",
    "bytesReceived",
    "httpErrors",
    "transportErrors",
    "latencies",
];

/// Decodes either a `tfp:measurement` or a `tfp:outcome` document.
pub fn decode_run_report(xml_text: &str) -> Result<Decoded<RunReport>, ProtocolError> {
    let doc = xml::parse_document(xml_text)?;
    let mut warnings = Vec::new();
    let root = doc.root_element();
    if xml::is_element(&root, RUNCENTER_NS, "outcome") {
        let outcome = read_outcome_body(root, RUNCENTER_NS, &mut warnings)?;
        return Ok(Decoded {
            value: RunReport::Outcome(outcome),
            warnings,
        });
    }
    let root = xml::expect_root(&doc, RUNCENTER_NS, "measurement")?;
    let g = Group::collect(root, RUNCENTER_NS, &MEASUREMENT, Unknown::Warn, &mut warnings)?;
    g.require(&MEASUREMENT)?;
    let latencies_ms = g
        .text("latencies")?
        .split_whitespace()
        .map(|t| parse_decimal("latencies", t))
        .collect::<Result<Vec<_>, _>>()?;
    let m = Measurement {
        latencies_ms,
        bytes_received: g.uint("bytesReceived")?,
        wall_time_s: g.decimal("wallTime")?,
        http_error_count: g.uint("httpErrors")?,
        transport_error_count: g.uint("transportErrors")?,
        started_at: g.time("startedAt")?,
    };
    m.validate().map_err(ProtocolError::from_model)?;
    Ok(Decoded {
        value: RunReport::Measurement(m),
        warnings,
    })
}

/// Liveness reply of `GET /status`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatusDocument {
    pub busy: bool,
}

pub fn encode_status(s: &StatusDocument) -> String {
    let mut w = XmlWriter::new("tfp");
    w.start_with("status", &ns_attrs(ACTION_STATUS));
    w.text("state", "ready");
    w.flag("busy", s.busy);
    w.end("status");
    w.finish()
}

pub fn decode_status(xml_text: &str) -> Result<StatusDocument, ProtocolError> {
    let doc = xml::parse_document(xml_text)?;
    let root = xml::expect_root(&doc, RUNCENTER_NS, "status")?;
    check_action(root, ACTION_STATUS)?;
    let mut warnings = Vec::new();
    let g = Group::collect(root, RUNCENTER_NS, &["state", "busy"], Unknown::Warn, &mut warnings)?;
    g.require(&["state", "busy"])?;
    Ok(StatusDocument {
        busy: g.flag("busy")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Utc;

    fn instructions() -> InstructionSet {
        InstructionSet {
            task_id: Uuid::new_v4(),
            identity: ApplicationIdentity::generate("bob").unwrap(),
            case: TestCase::get("http://127.0.0.1:9/x"),
            criteria: PerformanceCriteria::new(100.0, 1.0, 8.0).unwrap(),
            profile: LoadProfile::default(),
            adaptive: None,
        }
    }

    #[test]
    fn unknown_action_names_action() {
        let xml = encode_instructions(&instructions())
            .unwrap()
            .replace("action=\"EXECUTE\"", "action=\"DESTROY\"");
        match decode_instructions(&xml).unwrap_err() {
            ProtocolError::Field { field, .. } => assert_eq!(field, "action"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn measurement_round_trip() {
        let m = Measurement {
            latencies_ms: vec![20.5, 21.25, 0.0, 1234.000001],
            bytes_received: 4096,
            wall_time_s: 0.125,
            http_error_count: 1,
            transport_error_count: 2,
            started_at: Utc::now(),
        };
        match decode_run_report(&encode_measurement(&m).unwrap()).unwrap().value {
            RunReport::Measurement(back) => assert_eq!(back, m),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_latency_list_is_allowed() {
        let m = Measurement {
            latencies_ms: vec![],
            bytes_received: 0,
            wall_time_s: 1.0,
            http_error_count: 0,
            transport_error_count: 5,
            started_at: Utc::now(),
        };
        let back = decode_run_report(&encode_measurement(&m).unwrap()).unwrap();
        assert_eq!(back.value, RunReport::Measurement(m));
    }

    #[test]
    fn status_round_trip() {
        let s = StatusDocument { busy: true };
        assert_eq!(decode_status(&encode_status(&s)).unwrap(), s);
    }

    #[test]
    fn master_mode_follows_adaptive_block() {
        let mut i = instructions();
        assert_eq!(i.mode(), RunMode::Critical);
        i.adaptive = Some(AdaptiveParams::default());
        assert_eq!(i.mode(), RunMode::Master);
        let back = decode_instructions(&encode_instructions(&i).unwrap()).unwrap();
        assert_eq!(back.value, i);
    }
}
