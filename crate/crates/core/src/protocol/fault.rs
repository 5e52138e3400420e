//! SOAP 1.2 faults, used for rejected submissions.

use super::request::{write_soap_close, write_soap_open};
use super::xml::{self, Group, Unknown, XmlWriter};
use super::{ProtocolError, SOAP_NS};

/// `sender` faults blame the request, receiver faults the service.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fault {
    pub sender: bool,
    pub reason: String,
}

impl Fault {
    pub fn sender(reason: impl Into<String>) -> Self {
        Fault {
            sender: true,
            reason: reason.into(),
        }
    }

    pub fn receiver(reason: impl Into<String>) -> Self {
        Fault {
            sender: false,
            reason: reason.into(),
        }
    }

    /// Leading `E_...` token of the reason, if any.
    pub fn code(&self) -> Option<&str> {
        let token = self.reason.split(':').next()?;
        token.starts_with("E_").then_some(token)
    }
}

pub fn encode_fault(f: &Fault) -> String {
    let mut w = XmlWriter::new("soap");
    write_soap_open(&mut w);
    w.start("Fault");
    w.start("Code");
    w.text("Value", if f.sender { "soap:Sender" } else { "soap:Receiver" });
    w.end("Code");
    w.start("Reason");
    w.raw("<soap:Text xml:lang=\"en\">");
    let mut escaped = String::new();
    xml::escape_into(&mut escaped, &f.reason, false);
    w.raw(&escaped);
    w.raw("</soap:Text>");
    w.end("Reason");
    w.end("Fault");
    write_soap_close(&mut w);
    w.finish()
}

pub fn decode_fault(xml_text: &str) -> Result<Fault, ProtocolError> {
    let doc = xml::parse_document(xml_text)?;
    let mut warnings = Vec::new();
    let root = xml::expect_root(&doc, SOAP_NS, "Envelope")?;
    let env = Group::collect(root, SOAP_NS, &["Header", "Body"], Unknown::Reject, &mut warnings)?;
    env.require(&["Body"])?;
    let body = Group::collect(env.one("Body"), SOAP_NS, &["Fault"], Unknown::Reject, &mut warnings)?;
    body.require(&["Fault"])?;
    let fault = Group::collect(body.one("Fault"), SOAP_NS, &["Code", "Reason"], Unknown::Warn, &mut warnings)?;
    fault.require(&["Code", "Reason"])?;
    let code = Group::collect(fault.one("Code"), SOAP_NS, &["Value"], Unknown::Warn, &mut warnings)?;
    code.require(&["Value"])?;
    let sender = match code.trimmed("Value")?.as_str() {
        "soap:Sender" => true,
        "soap:Receiver" => false,
        other => return Err(ProtocolError::field("Value", format!("unknown fault code {other:?}"))),
    };
    let reason = Group::collect(fault.one("Reason"), SOAP_NS, &["Text"], Unknown::Warn, &mut warnings)?;
    reason.require_repeating(&["Text"], &["Text"])?;
    Ok(Fault {
        sender,
        reason: xml::leaf_text(reason.all("Text")[0])?,
    })
}
