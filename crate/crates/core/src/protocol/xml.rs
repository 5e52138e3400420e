//! Compact XML writing and strict, namespace-aware reading helpers.

use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use roxmltree::{Document, Node};
use uuid::Uuid;

use super::ProtocolError;

pub(crate) const DECLARATION: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";

/// Appends elements without indentation; `prefix` qualifies every element
/// written through [`XmlWriter::start`] and friends.
pub(crate) struct XmlWriter {
    out: String,
    prefix: &'static str,
}

impl XmlWriter {
    pub(crate) fn new(prefix: &'static str) -> Self {
        XmlWriter {
            out: String::from(DECLARATION),
            prefix,
        }
    }

    pub(crate) fn raw(&mut self, s: &str) {
        self.out.push_str(s);
    }

    pub(crate) fn start(&mut self, local: &str) {
        self.out.push('<');
        self.push_name(local);
        self.out.push('>');
    }

    /// Opening tag with attributes, e.g. namespace declarations.
    pub(crate) fn start_with(&mut self, local: &str, attrs: &[(&str, &str)]) {
        self.out.push('<');
        self.push_name(local);
        for (k, v) in attrs {
            self.out.push(' ');
            self.out.push_str(k);
            self.out.push_str("=\"");
            escape_into(&mut self.out, v, true);
            self.out.push('"');
        }
        self.out.push('>');
    }

    pub(crate) fn end(&mut self, local: &str) {
        self.out.push_str("</");
        self.push_name(local);
        self.out.push('>');
    }

    pub(crate) fn text(&mut self, local: &str, text: &str) {
        self.start(local);
        escape_into(&mut self.out, text, false);
        self.end(local);
    }

    /// Plain decimal: `Display` for floats never uses exponent notation and
    /// prints the shortest representation that round-trips.
    pub(crate) fn num(&mut self, local: &str, v: f64) {
        self.text(local, &v.to_string());
    }

    pub(crate) fn int(&mut self, local: &str, v: impl ToString) {
        self.text(local, &v.to_string());
    }

    pub(crate) fn flag(&mut self, local: &str, v: bool) {
        self.text(local, if v { "true" } else { "false" });
    }

    pub(crate) fn time(&mut self, local: &str, t: &DateTime<Utc>) {
        self.text(local, &t.to_rfc3339_opts(SecondsFormat::Nanos, true));
    }

    pub(crate) fn finish(mut self) -> String {
        self.out.push('\n');
        self.out
    }

    fn push_name(&mut self, local: &str) {
        self.out.push_str(self.prefix);
        self.out.push(':');
        self.out.push_str(local);
    }
}

pub(crate) fn escape_into(out: &mut String, s: &str, attr: bool) {
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' if attr => out.push_str("&quot;"),
            // Parsers normalize CR and attribute whitespace; references survive.
            '\r' => out.push_str("&#13;"),
            '\n' if attr => out.push_str("&#10;"),
            '\t' if attr => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
}

pub(crate) fn parse_document(xml: &str) -> Result<Document<'_>, ProtocolError> {
    Document::parse(xml).map_err(|e| ProtocolError::MalformedXml(e.to_string()))
}

pub(crate) fn is_element(node: &Node<'_, '_>, ns: &str, local: &str) -> bool {
    node.is_element() && node.tag_name().namespace() == Some(ns) && node.tag_name().name() == local
}

/// Checks a document's root element, naming it in the schema error otherwise.
pub(crate) fn expect_root<'a, 'input>(
    doc: &'a Document<'input>,
    ns: &str,
    local: &str,
) -> Result<Node<'a, 'input>, ProtocolError> {
    let root = doc.root_element();
    if is_element(&root, ns, local) {
        Ok(root)
    } else {
        Err(ProtocolError::schema(
            [local],
            format!(
                "root element must be {local} in namespace {ns}, found {}",
                root.tag_name().name()
            ),
        ))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Unknown {
    Warn,
    Reject,
}

/// Known element children of one container, in schema order.
pub(crate) struct Group<'a, 'input> {
    container: String,
    slots: Vec<(&'static str, Vec<Node<'a, 'input>>)>,
}

impl<'a, 'input> Group<'a, 'input> {
    /// Collects the children of `node` that belong to `known` (in namespace
    /// `ns`). Known children must appear in the order of `known`. Non-blank
    /// text directly inside the container is a schema error.
    pub(crate) fn collect(
        node: Node<'a, 'input>,
        ns: &str,
        known: &[&'static str],
        unknown: Unknown,
        warnings: &mut Vec<String>,
    ) -> Result<Self, ProtocolError> {
        let container = node.tag_name().name().to_string();
        let mut slots: Vec<(&'static str, Vec<Node<'a, 'input>>)> =
            known.iter().map(|k| (*k, Vec::new())).collect();
        let mut last = 0usize;
        for child in node.children() {
            if child.is_text() {
                if child.text().is_some_and(|t| !t.trim().is_empty()) {
                    return Err(ProtocolError::schema(
                        [container.as_str()],
                        format!("unexpected text inside <{container}>"),
                    ));
                }
                continue;
            }
            if !child.is_element() {
                continue;
            }
            let name = child.tag_name().name();
            let slot = (child.tag_name().namespace() == Some(ns))
                .then(|| known.iter().position(|k| *k == name))
                .flatten();
            match slot {
                Some(idx) => {
                    if idx < last {
                        return Err(ProtocolError::schema(
                            [name],
                            format!("<{name}> is out of order inside <{container}>"),
                        ));
                    }
                    last = idx;
                    slots[idx].1.push(child);
                }
                None if unknown == Unknown::Warn => warnings.push(format!(
                    "ignored unknown element <{}> inside <{container}>",
                    qualified(&child)
                )),
                None => {
                    return Err(ProtocolError::schema(
                        [name],
                        format!("unexpected element <{}> inside <{container}>", qualified(&child)),
                    ))
                }
            }
        }
        Ok(Group { container, slots })
    }

    fn slot(&self, name: &str) -> &[Node<'a, 'input>] {
        self.slots
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| v.as_slice())
            .unwrap_or_else(|| panic!("{name} is not a known element of this group"))
    }

    /// Every name must occur exactly once; all offenders are reported together.
    pub(crate) fn require(&self, names: &[&'static str]) -> Result<(), ProtocolError> {
        self.require_repeating(names, &[])
    }

    /// Like [`Group::require`], but elements named in `repeating` may occur
    /// any number of times.
    pub(crate) fn require_repeating(
        &self,
        names: &[&'static str],
        repeating: &[&str],
    ) -> Result<(), ProtocolError> {
        let missing: Vec<&str> = names
            .iter()
            .copied()
            .filter(|n| self.slot(n).is_empty())
            .collect();
        let duplicated: Vec<&str> = self
            .slots
            .iter()
            .filter(|(k, v)| v.len() > 1 && !repeating.contains(k))
            .map(|(k, _)| *k)
            .collect();
        if missing.is_empty() && duplicated.is_empty() {
            return Ok(());
        }
        let mut detail = Vec::new();
        if !missing.is_empty() {
            detail.push(format!("missing required element(s) in <{}>", self.container));
        }
        if !duplicated.is_empty() {
            detail.push(format!("duplicated element(s) in <{}>", self.container));
        }
        Err(ProtocolError::schema(
            missing.into_iter().chain(duplicated),
            detail.join("; "),
        ))
    }

    pub(crate) fn one(&self, name: &'static str) -> Node<'a, 'input> {
        self.slot(name)[0]
    }

    pub(crate) fn opt(&self, name: &'static str) -> Option<Node<'a, 'input>> {
        self.slot(name).first().copied()
    }

    pub(crate) fn all(&self, name: &'static str) -> &[Node<'a, 'input>] {
        self.slot(name)
    }

    pub(crate) fn text(&self, name: &'static str) -> Result<String, ProtocolError> {
        leaf_text(self.one(name))
    }

    pub(crate) fn trimmed(&self, name: &'static str) -> Result<String, ProtocolError> {
        Ok(self.text(name)?.trim().to_string())
    }

    pub(crate) fn decimal(&self, name: &'static str) -> Result<f64, ProtocolError> {
        parse_decimal(name, &self.text(name)?)
    }

    pub(crate) fn uint<T: FromStr>(&self, name: &'static str) -> Result<T, ProtocolError> {
        parse_uint(name, &self.text(name)?)
    }

    pub(crate) fn flag(&self, name: &'static str) -> Result<bool, ProtocolError> {
        match self.text(name)?.trim() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(ProtocolError::field(name, format!("expected true or false, got {other:?}"))),
        }
    }

    pub(crate) fn uuid(&self, name: &'static str) -> Result<Uuid, ProtocolError> {
        parse_uuid(name, &self.text(name)?)
    }

    pub(crate) fn time(&self, name: &'static str) -> Result<DateTime<Utc>, ProtocolError> {
        let text = self.text(name)?;
        DateTime::parse_from_rfc3339(text.trim())
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| ProtocolError::field(name, e.to_string()))
    }
}

fn qualified(node: &Node<'_, '_>) -> String {
    match node.tag_name().namespace() {
        Some(ns) => format!("{{{ns}}}{}", node.tag_name().name()),
        None => node.tag_name().name().to_string(),
    }
}

/// Text content of a leaf element, verbatim. Element children are a schema error.
pub(crate) fn leaf_text(node: Node<'_, '_>) -> Result<String, ProtocolError> {
    if let Some(child) = node.children().find(|c| c.is_element()) {
        let name = node.tag_name().name();
        return Err(ProtocolError::schema(
            [name],
            format!("<{name}> must not contain element <{}>", child.tag_name().name()),
        ));
    }
    Ok(node
        .children()
        .filter(|c| c.is_text())
        .filter_map(|c| c.text())
        .collect())
}

/// Accepts `[+-]digits[.digits]` or `[+-].digits`; no exponent, no inf/nan.
pub(crate) fn parse_decimal(field: &str, text: &str) -> Result<f64, ProtocolError> {
    let t = text.trim();
    let body = t.strip_prefix(['+', '-']).unwrap_or(t);
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits_ok = int.bytes().all(|b| b.is_ascii_digit())
        && frac.bytes().all(|b| b.is_ascii_digit())
        && !(int.is_empty() && frac.is_empty());
    if !digits_ok {
        return Err(ProtocolError::field(field, format!("{t:?} is not a decimal number")));
    }
    t.parse::<f64>()
        .map_err(|e| ProtocolError::field(field, e.to_string()))
}

pub(crate) fn parse_uint<T: FromStr>(field: &str, text: &str) -> Result<T, ProtocolError> {
    let t = text.trim();
    if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ProtocolError::field(field, format!("{t:?} is not a non-negative integer")));
    }
    t.parse::<T>()
        .map_err(|_| ProtocolError::field(field, format!("{t:?} is out of range")))
}

/// Only the canonical lowercase hyphenated form is accepted.
pub(crate) fn parse_uuid(field: &str, text: &str) -> Result<Uuid, ProtocolError> {
    let t = text.trim();
    match Uuid::parse_str(t) {
        Ok(u) if u.hyphenated().to_string() == t => Ok(u),
        Ok(_) => Err(ProtocolError::field(field, "UUID must be lowercase hyphenated")),
        Err(e) => Err(ProtocolError::field(field, e.to_string())),
    }
}
