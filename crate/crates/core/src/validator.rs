//! Test-script validation.
//!
//! Scripts are XML documents rooted at `tfp:testScript` in namespace
//! `urn:tfpaas:script:v1`. Child elements may be unqualified or in the script
//! namespace. All problems are collected (no fail-fast) and reported as
//! [`Diagnostic`]s under rules V1 to V8:
//!
//! | rule | severity | checks |
//! |------|----------|--------|
//! | V1 | error | well-formed XML |
//! | V2 | error | root element, exactly one `case` and one `criteria` |
//! | V3 | error | `url` is an absolute http/https URL |
//! | V4 | error | `method` is GET or POST (case-insensitive) |
//! | V5 | error | `message` present iff POST |
//! | V6 | error | `response`, `tps`, `bps` present, numeric, > 0 |
//! | V7 | error | `load` / `adaptive` parameters in range |
//! | V8 | warning | unknown elements, URL scheme auto-prefix |

use std::fmt;

use roxmltree::{Document, Node};

use crate::model::{AdaptiveParams, LoadProfile, Method, PerformanceCriteria, TestCase};
use crate::protocol::xml::{parse_decimal, parse_uint};

pub const SCRIPT_NS: &str = "urn:tfpaas:script:v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
    V7,
    V8,
}

impl RuleId {
    pub const ALL: [RuleId; 8] = [
        RuleId::V1,
        RuleId::V2,
        RuleId::V3,
        RuleId::V4,
        RuleId::V5,
        RuleId::V6,
        RuleId::V7,
        RuleId::V8,
    ];

    pub fn severity(self) -> Severity {
        match self {
            RuleId::V8 => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub rule: RuleId,
    /// `element@line`, or `line N` when no element applies.
    pub locator: Option<String>,
    pub message: String,
}

impl Diagnostic {
    pub fn severity(&self) -> Severity {
        self.rule.severity()
    }

    pub fn is_error(&self) -> bool {
        self.severity() == Severity::Error
    }
}

/// `SEVERITY Vn <locator>: message`
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.severity(), self.rule)?;
        if let Some(loc) = &self.locator {
            write!(f, " {loc}")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// On-disk test script. Identity is injected by the client at submission.
#[derive(Debug, Clone, PartialEq)]
pub struct TestScript {
    pub case: TestCase,
    pub criteria: PerformanceCriteria,
    pub load: Option<LoadProfile>,
    pub adaptive: Option<AdaptiveParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedScript {
    pub script: TestScript,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("E_INVALID_SCRIPT: {} error(s)", errors(.0))]
pub struct InvalidScript(pub Vec<Diagnostic>);

fn errors(diags: &[Diagnostic]) -> usize {
    diags.iter().filter(|d| d.is_error()).count()
}

/// Validates script text. An empty result means the script is valid.
pub fn validate_script(text: &str) -> Vec<Diagnostic> {
    analyze(text).1
}

/// Parses a script, failing with every diagnostic when any rule errors.
pub fn parse_script(text: &str) -> Result<ParsedScript, InvalidScript> {
    match analyze(text) {
        (Some(script), diags) if !diags.iter().any(Diagnostic::is_error) => Ok(ParsedScript {
            script,
            warnings: diags,
        }),
        (_, diags) => Err(InvalidScript(diags)),
    }
}

struct Checker<'d, 'input> {
    doc: &'d Document<'input>,
    diags: Vec<Diagnostic>,
}

impl<'d, 'input> Checker<'d, 'input> {
    fn report(&mut self, rule: RuleId, node: Option<Node<'_, '_>>, message: impl Into<String>) {
        let locator = node.map(|n| {
            let line = self.doc.text_pos_at(n.range().start).row;
            format!("{}@{line}", n.tag_name().name())
        });
        self.diags.push(Diagnostic {
            rule,
            locator,
            message: message.into(),
        });
    }

    /// Splits element children into the known names (in order of `known`) and
    /// reports everything else as V8.
    fn children<'a>(
        &mut self,
        node: Node<'a, 'input>,
        known: &[&str],
    ) -> Vec<Vec<Node<'a, 'input>>> {
        let mut slots = vec![Vec::new(); known.len()];
        for child in node.children() {
            if child.is_text() {
                if child.text().is_some_and(|t| !t.trim().is_empty()) {
                    self.report(
                        RuleId::V8,
                        Some(node),
                        format!("text inside <{}> ignored", node.tag_name().name()),
                    );
                }
                continue;
            }
            if !child.is_element() {
                continue;
            }
            let ns_ok = matches!(child.tag_name().namespace(), None | Some(SCRIPT_NS));
            match known.iter().position(|k| *k == child.tag_name().name()) {
                Some(i) if ns_ok => slots[i].push(child),
                _ => self.report(
                    RuleId::V8,
                    Some(child),
                    format!(
                        "unknown element <{}> inside <{}> ignored",
                        child.tag_name().name(),
                        node.tag_name().name()
                    ),
                ),
            }
        }
        slots
    }

    /// Exactly one occurrence, or a diagnostic under `rule`.
    fn single<'a>(
        &mut self,
        rule: RuleId,
        parent: Node<'a, 'input>,
        name: &str,
        found: &[Node<'a, 'input>],
    ) -> Option<Node<'a, 'input>> {
        match found {
            [one] => Some(*one),
            [] => {
                self.report(rule, Some(parent), format!("missing <{name}>"));
                None
            }
            [_, dup, ..] => {
                self.report(rule, Some(*dup), format!("<{name}> must appear exactly once"));
                None
            }
        }
    }
}

fn text_of(node: Node<'_, '_>) -> String {
    node.children()
        .filter(|c| c.is_text())
        .filter_map(|c| c.text())
        .collect()
}

fn analyze(text: &str) -> (Option<TestScript>, Vec<Diagnostic>) {
    let doc = match Document::parse(text) {
        Ok(doc) => doc,
        Err(e) => {
            let line = e.pos().row;
            return (
                None,
                vec![Diagnostic {
                    rule: RuleId::V1,
                    locator: Some(format!("line {line}")),
                    message: format!("not well-formed XML: {e}"),
                }],
            );
        }
    };
    let mut ck = Checker {
        doc: &doc,
        diags: Vec::new(),
    };
    let root = doc.root_element();
    if root.tag_name().name() != "testScript" || root.tag_name().namespace() != Some(SCRIPT_NS) {
        ck.report(
            RuleId::V2,
            Some(root),
            format!("root element must be tfp:testScript in namespace {SCRIPT_NS}"),
        );
        return (None, ck.diags);
    }
    let top = ck.children(root, &["case", "criteria", "load", "adaptive"]);
    let case_node = ck.single(RuleId::V2, root, "case", &top[0]);
    let criteria_node = ck.single(RuleId::V2, root, "criteria", &top[1]);

    let case = case_node.and_then(|n| check_case(&mut ck, n));
    let criteria = criteria_node.and_then(|n| check_criteria(&mut ck, n));

    let load = match top[2].as_slice() {
        [] => Some(None),
        [one] => check_load(&mut ck, *one).map(Some),
        [_, dup, ..] => {
            ck.report(RuleId::V7, Some(*dup), "<load> may appear at most once");
            None
        }
    };
    let adaptive = match top[3].as_slice() {
        [] => Some(None),
        [one] => check_adaptive(&mut ck, *one).map(Some),
        [_, dup, ..] => {
            ck.report(RuleId::V7, Some(*dup), "<adaptive> may appear at most once");
            None
        }
    };

    let script = match (case, criteria, load, adaptive) {
        (Some(case), Some(criteria), Some(load), Some(adaptive)) => Some(TestScript {
            case,
            criteria,
            load,
            adaptive,
        }),
        _ => None,
    };
    (script, ck.diags)
}

fn check_case<'i>(ck: &mut Checker<'_, 'i>, node: Node<'_, 'i>) -> Option<TestCase> {
    let slots = ck.children(node, &["url", "method", "message"]);
    let url = ck.single(RuleId::V3, node, "url", &slots[0]).and_then(|n| {
        let raw = text_of(n);
        match TestCase::normalize_url(&raw) {
            Ok(norm) => {
                if norm.prefixed {
                    ck.report(
                        RuleId::V8,
                        Some(n),
                        format!("url {:?} has no scheme; using {:?}", raw.trim(), norm.url),
                    );
                }
                Some(norm.url)
            }
            Err(e) => {
                ck.report(RuleId::V3, Some(n), e.to_string());
                None
            }
        }
    });
    let method = ck
        .single(RuleId::V4, node, "method", &slots[1])
        .and_then(|n| match text_of(n).parse::<Method>() {
            Ok(m) => Some(m),
            Err(e) => {
                ck.report(RuleId::V4, Some(n), e);
                None
            }
        });
    let message = match slots[2].as_slice() {
        [] => Some(None),
        [one] => Some(Some((*one, text_of(*one)))),
        [_, dup, ..] => {
            ck.report(RuleId::V5, Some(*dup), "<message> may appear at most once");
            None
        }
    };
    let (method, message) = (method?, message?);
    match (method, &message) {
        (Method::Get, Some((n, _))) => {
            ck.report(RuleId::V5, Some(*n), "GET requests must not carry a <message>");
            return None;
        }
        (Method::Post, None) => {
            ck.report(RuleId::V5, Some(node), "POST requests need a <message>");
            return None;
        }
        _ => {}
    }
    Some(TestCase {
        url: url?,
        method,
        message: message.map(|(_, text)| text),
    })
}

fn check_criteria<'i>(ck: &mut Checker<'_, 'i>, node: Node<'_, 'i>) -> Option<PerformanceCriteria> {
    let names = ["response", "tps", "bps"];
    let slots = ck.children(node, &names);
    let mut values = [0.0; 3];
    let mut ok = true;
    for (i, name) in names.iter().enumerate() {
        let Some(n) = ck.single(RuleId::V6, node, name, &slots[i]) else {
            ok = false;
            continue;
        };
        match parse_decimal(name, &text_of(n)) {
            Ok(v) if v > 0.0 => values[i] = v,
            Ok(v) => {
                ck.report(RuleId::V6, Some(n), format!("{name} must be > 0, got {v}"));
                ok = false;
            }
            Err(_) => {
                ck.report(
                    RuleId::V6,
                    Some(n),
                    format!("{name} must be a decimal number, got {:?}", text_of(n).trim()),
                );
                ok = false;
            }
        }
    }
    ok.then_some(PerformanceCriteria {
        response_ms: values[0],
        tps: values[1],
        bps: values[2],
    })
}

fn uint_child<'i>(
    ck: &mut Checker<'_, 'i>,
    parent: Node<'_, 'i>,
    name: &str,
    found: &[Node<'_, 'i>],
) -> Option<u32> {
    let n = ck.single(RuleId::V7, parent, name, found)?;
    match parse_uint::<u32>(name, &text_of(n)) {
        Ok(v) => Some(v),
        Err(e) => {
            ck.report(RuleId::V7, Some(n), e.to_string());
            None
        }
    }
}

fn check_load<'i>(ck: &mut Checker<'_, 'i>, node: Node<'_, 'i>) -> Option<LoadProfile> {
    let slots = ck.children(node, &["requests", "concurrency"]);
    let requests = uint_child(ck, node, "requests", &slots[0]);
    let concurrency = uint_child(ck, node, "concurrency", &slots[1]);
    let profile = LoadProfile {
        requests: requests?,
        concurrency: concurrency?,
    };
    if let Err(e) = profile.validate() {
        ck.report(RuleId::V7, Some(node), e.to_string());
        return None;
    }
    Some(profile)
}

/// Every child is optional and falls back to the default.
fn check_adaptive<'i>(ck: &mut Checker<'_, 'i>, node: Node<'_, 'i>) -> Option<AdaptiveParams> {
    let names = [
        "startConcurrency",
        "growthFactor",
        "maxIterations",
        "requestsPerIteration",
    ];
    let slots = ck.children(node, &names);
    let mut params = AdaptiveParams::default();
    let mut ok = true;
    for (i, name) in names.iter().enumerate() {
        if slots[i].is_empty() {
            continue;
        }
        if name == &"growthFactor" {
            let Some(n) = ck.single(RuleId::V7, node, name, &slots[i]) else {
                ok = false;
                continue;
            };
            match parse_decimal(name, &text_of(n)) {
                Ok(v) => params.growth_factor = v,
                Err(e) => {
                    ck.report(RuleId::V7, Some(n), e.to_string());
                    ok = false;
                }
            }
            continue;
        }
        match uint_child(ck, node, name, &slots[i]) {
            Some(v) => match i {
                0 => params.start_concurrency = v,
                2 => params.max_iterations = v,
                _ => params.requests_per_iteration = v,
            },
            None => ok = false,
        }
    }
    if !ok {
        return None;
    }
    if let Err(e) = params.validate() {
        ck.report(RuleId::V7, Some(node), e.to_string());
        return None;
    }
    Some(params)
}

/// Renders a script in the on-disk format; `parse_script` reads it back.
pub fn render_script(script: &TestScript) -> String {
    use crate::protocol::xml::escape_into;
    let esc = |s: &str| {
        let mut out = String::new();
        escape_into(&mut out, s, false);
        out
    };
    let mut out = String::from(crate::protocol::xml::DECLARATION);
    out.push_str(&format!("<tfp:testScript xmlns:tfp=\"{SCRIPT_NS}\">\n"));
    out.push_str("  <case>\n");
    out.push_str(&format!("    <url>{}</url>\n", esc(&script.case.url)));
    out.push_str(&format!("    <method>{}</method>\n", script.case.method));
    if let Some(msg) = &script.case.message {
        out.push_str(&format!("    <message>{}</message>\n", esc(msg)));
    }
    out.push_str("  </case>\n  <criteria>\n");
    let c = &script.criteria;
    out.push_str(&format!("    <response>{}</response>\n", c.response_ms));
    out.push_str(&format!("    <tps>{}</tps>\n", c.tps));
    out.push_str(&format!("    <bps>{}</bps>\n", c.bps));
    out.push_str("  </criteria>\n");
    if let Some(load) = &script.load {
        out.push_str(&format!(
            "  <load>\n    <requests>{}</requests>\n    <concurrency>{}</concurrency>\n  </load>\n",
            load.requests, load.concurrency
        ));
    }
    if let Some(a) = &script.adaptive {
        out.push_str(&format!(
            "  <adaptive>\n    <startConcurrency>{}</startConcurrency>\n    <growthFactor>{}</growthFactor>\n    <maxIterations>{}</maxIterations>\n    <requestsPerIteration>{}</requestsPerIteration>\n  </adaptive>\n",
            a.start_concurrency, a.growth_factor, a.max_iterations, a.requests_per_iteration
        ));
    }
    out.push_str("</tfp:testScript>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<tfp:testScript xmlns:tfp="urn:tfpaas:script:v1">
  <case>
    <url>http://localhost:8080/svc</url>
    <method>GET</method>
  </case>
  <criteria>
    <response>100</response>
    <tps>1</tps>
    <bps>8</bps>
  </criteria>
</tfp:testScript>
"#;

    fn rules(diags: &[Diagnostic]) -> Vec<RuleId> {
        diags.iter().map(|d| d.rule).collect()
    }

    fn error_rules(text: &str) -> Vec<RuleId> {
        rules(
            &validate_script(text)
                .into_iter()
                .filter(Diagnostic::is_error)
                .collect::<Vec<_>>(),
        )
    }

    /// One minimal mutation of the valid script per error rule.
    fn mutations() -> Vec<(RuleId, String)> {
        vec![
            (RuleId::V1, VALID.replace("</case>", "</cas>")),
            (
                RuleId::V2,
                VALID.replace("<criteria>", "<!--").replace("</criteria>", "-->"),
            ),
            (
                RuleId::V3,
                VALID.replace("http://localhost:8080/svc", "ftp://localhost/svc"),
            ),
            (RuleId::V4, VALID.replace("<method>GET", "<method>PUT")),
            (
                RuleId::V5,
                VALID.replace("</method>", "</method>\n    <message>hi</message>"),
            ),
            (RuleId::V6, VALID.replace("<response>100", "<response>0")),
            (
                RuleId::V7,
                VALID.replace(
                    "</criteria>",
                    "</criteria>\n  <load><requests>5</requests><concurrency>6</concurrency></load>",
                ),
            ),
        ]
    }

    #[test]
    fn valid_script_has_no_diagnostics() {
        assert_eq!(validate_script(VALID), vec![]);
        let parsed = parse_script(VALID).unwrap();
        assert_eq!(parsed.script.case.method, Method::Get);
        assert_eq!(parsed.script.criteria.response_ms, 100.0);
    }

    #[test]
    fn each_rule_has_an_isolating_mutation() {
        for (rule, text) in mutations() {
            assert_eq!(error_rules(&text), vec![rule], "mutation for {rule}");
            let err = parse_script(&text).unwrap_err();
            assert_eq!(errors(&err.0), 1);
        }
    }

    #[test]
    fn response_zero_names_response() {
        let diags = validate_script(&VALID.replace("<response>100", "<response>0"));
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("response"));
        assert_eq!(diags[0].locator.as_deref(), Some("response@8"));
        assert_eq!(
            diags[0].to_string(),
            "ERROR V6 response@8: response must be > 0, got 0"
        );
    }

    #[test]
    fn scheme_prefix_is_a_warning() {
        let text = VALID.replace("http://localhost:8080/svc", "www.example.com/TFP/");
        let parsed = parse_script(&text).unwrap();
        assert_eq!(parsed.script.case.url, "http://www.example.com/TFP/");
        assert_eq!(rules(&parsed.warnings), vec![RuleId::V8]);
    }

    #[test]
    fn lowercase_method_is_canonicalized() {
        let parsed = parse_script(&VALID.replace("<method>GET", "<method>post").replace(
            "</method>",
            "</method><message>{}</message>",
        ))
        .unwrap();
        assert_eq!(parsed.script.case.method, Method::Post);
        assert_eq!(parsed.script.case.message.as_deref(), Some("{}"));
    }

    #[test]
    fn v5_error_is_the_only_diagnostic() {
        let text = VALID.replace("</method>", "</method>\n    <message>hi</message>");
        let err = parse_script(&text).unwrap_err();
        assert_eq!(rules(&err.0), vec![RuleId::V5]);
    }

    #[test]
    fn problems_are_collected_exhaustively() {
        let text = VALID
            .replace("<response>100", "<response>-1")
            .replace("<tps>1", "<tps>x")
            .replace("<method>GET", "<method>DELETE")
            .replace("</criteria>", "</criteria><extra/>");
        assert_eq!(
            rules(&validate_script(&text)),
            vec![RuleId::V8, RuleId::V4, RuleId::V6, RuleId::V6]
        );
    }

    #[test]
    fn render_then_parse() {
        let mut script = parse_script(VALID).unwrap().script;
        script.load = Some(LoadProfile::new(40, 4).unwrap());
        script.adaptive = Some(AdaptiveParams {
            growth_factor: 1.5,
            ..AdaptiveParams::default()
        });
        script.case = TestCase::post("https://a.example/x?y=1&z=2", "<q>&</q>");
        let back = parse_script(&render_script(&script)).unwrap();
        assert_eq!(back.script, script);
        assert!(back.warnings.is_empty());
    }

    #[test]
    fn wrong_root_stops_early() {
        let text = VALID.replace("tfp:testScript", "tfp:script");
        assert_eq!(rules(&validate_script(&text)), vec![RuleId::V2]);
    }

    #[test]
    fn malformed_reports_line() {
        let diags = validate_script("<a>\n<b>\n</a>");
        assert_eq!(rules(&diags), vec![RuleId::V1]);
        assert!(diags[0].locator.as_deref().unwrap().starts_with("line "));
    }
}
