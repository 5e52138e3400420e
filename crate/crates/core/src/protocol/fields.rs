//! Element groups shared by several documents. Writers use the writer's
//! prefix; readers take the namespace the group lives in.

use roxmltree::Node;

use super::xml::{Group, Unknown, XmlWriter};
use super::ProtocolError;
use crate::model::{
    AdaptiveOutcome, AdaptiveParams, ApplicationIdentity, CriterionKind, CriterionResult, Decision,
    LoadProfile, MeasurementSummary, Method, PerformanceCriteria, TestCase, TestVerdict,
    TraceRecord,
};

type Warnings = Vec<String>;

pub(crate) fn write_application(w: &mut XmlWriter, id: &ApplicationIdentity) {
    w.start("application");
    w.text("appId", &id.app_id.hyphenated().to_string());
    w.text("userName", &id.user_name);
    w.end("application");
}

pub(crate) fn read_application(
    node: Node<'_, '_>,
    ns: &str,
    warnings: &mut Warnings,
) -> Result<ApplicationIdentity, ProtocolError> {
    let g = Group::collect(node, ns, &["appId", "userName"], Unknown::Warn, warnings)?;
    g.require(&["appId", "userName"])?;
    let id = ApplicationIdentity {
        app_id: g.uuid("appId")?,
        user_name: g.trimmed("userName")?,
    };
    id.validate().map_err(ProtocolError::from_model)?;
    Ok(id)
}

pub(crate) fn write_case(w: &mut XmlWriter, case: &TestCase) {
    w.start("case");
    w.text("url", &case.url);
    w.text("method", case.method.as_str());
    if let Some(msg) = &case.message {
        w.text("message", msg);
    }
    w.end("case");
}

/// URLs without a scheme are prefixed with `http://` and reported as a warning.
pub(crate) fn read_case(
    node: Node<'_, '_>,
    ns: &str,
    warnings: &mut Warnings,
) -> Result<TestCase, ProtocolError> {
    let g = Group::collect(node, ns, &["url", "method", "message"], Unknown::Warn, warnings)?;
    g.require(&["url", "method"])?;
    let raw_url = g.trimmed("url")?;
    let normalized = TestCase::normalize_url(&raw_url).map_err(ProtocolError::from_model)?;
    if normalized.prefixed {
        warnings.push(format!(
            "url {raw_url:?} has no scheme; normalized to {:?}",
            normalized.url
        ));
    }
    let method = match g.trimmed("method")?.as_str() {
        "GET" => Method::Get,
        "POST" => Method::Post,
        other => {
            return Err(ProtocolError::field(
                "method",
                format!("expected GET or POST, got {other:?}"),
            ))
        }
    };
    let message = g.opt("message").map(super::xml::leaf_text).transpose()?;
    let case = TestCase {
        url: normalized.url,
        method,
        message,
    };
    case.validate().map_err(ProtocolError::from_model)?;
    Ok(case)
}

pub(crate) fn write_criteria(w: &mut XmlWriter, c: &PerformanceCriteria) {
    w.start("criteria");
    w.num("response", c.response_ms);
    w.num("tps", c.tps);
    w.num("bps", c.bps);
    w.end("criteria");
}

pub(crate) fn read_criteria(
    node: Node<'_, '_>,
    ns: &str,
    warnings: &mut Warnings,
) -> Result<PerformanceCriteria, ProtocolError> {
    let names = ["response", "tps", "bps"];
    let g = Group::collect(node, ns, &names, Unknown::Warn, warnings)?;
    g.require(&names)?;
    let c = PerformanceCriteria {
        response_ms: g.decimal("response")?,
        tps: g.decimal("tps")?,
        bps: g.decimal("bps")?,
    };
    c.validate().map_err(ProtocolError::from_model)?;
    Ok(c)
}

pub(crate) fn write_load(w: &mut XmlWriter, element: &str, p: &LoadProfile) {
    w.start(element);
    w.int("requests", p.requests);
    w.int("concurrency", p.concurrency);
    w.end(element);
}

pub(crate) fn read_load(
    node: Node<'_, '_>,
    ns: &str,
    warnings: &mut Warnings,
) -> Result<LoadProfile, ProtocolError> {
    let names = ["requests", "concurrency"];
    let g = Group::collect(node, ns, &names, Unknown::Warn, warnings)?;
    g.require(&names)?;
    let p = LoadProfile {
        requests: g.uint("requests")?,
        concurrency: g.uint("concurrency")?,
    };
    p.validate().map_err(ProtocolError::from_model)?;
    Ok(p)
}

const ADAPTIVE_PARAMS: [&str; 4] = [
    "startConcurrency",
    "growthFactor",
    "maxIterations",
    "requestsPerIteration",
];

pub(crate) fn write_adaptive_params(w: &mut XmlWriter, a: &AdaptiveParams) {
    w.start("adaptive");
    w.int("startConcurrency", a.start_concurrency);
    w.num("growthFactor", a.growth_factor);
    w.int("maxIterations", a.max_iterations);
    w.int("requestsPerIteration", a.requests_per_iteration);
    w.end("adaptive");
}

pub(crate) fn read_adaptive_params(
    node: Node<'_, '_>,
    ns: &str,
    warnings: &mut Warnings,
) -> Result<AdaptiveParams, ProtocolError> {
    let g = Group::collect(node, ns, &ADAPTIVE_PARAMS, Unknown::Warn, warnings)?;
    g.require(&ADAPTIVE_PARAMS)?;
    let a = AdaptiveParams {
        start_concurrency: g.uint("startConcurrency")?,
        growth_factor: g.decimal("growthFactor")?,
        max_iterations: g.uint("maxIterations")?,
        requests_per_iteration: g.uint("requestsPerIteration")?,
    };
    a.validate().map_err(ProtocolError::from_model)?;
    Ok(a)
}

const SUMMARY: [&str; 7] = ["mean", "p50", "p95", "tps", "bps", "completed", "errored"];

pub(crate) fn write_summary(w: &mut XmlWriter, element: &str, s: &MeasurementSummary) {
    w.start(element);
    w.num("mean", s.mean_ms);
    w.num("p50", s.p50_ms);
    w.num("p95", s.p95_ms);
    w.num("tps", s.observed_tps);
    w.num("bps", s.observed_bps);
    w.int("completed", s.completed);
    w.int("errored", s.errored);
    w.end(element);
}

pub(crate) fn read_summary(
    node: Node<'_, '_>,
    ns: &str,
    warnings: &mut Warnings,
) -> Result<MeasurementSummary, ProtocolError> {
    let g = Group::collect(node, ns, &SUMMARY, Unknown::Warn, warnings)?;
    g.require(&SUMMARY)?;
    let s = MeasurementSummary {
        mean_ms: g.decimal("mean")?,
        p50_ms: g.decimal("p50")?,
        p95_ms: g.decimal("p95")?,
        observed_tps: g.decimal("tps")?,
        observed_bps: g.decimal("bps")?,
        completed: g.uint("completed")?,
        errored: g.uint("errored")?,
    };
    s.validate().map_err(ProtocolError::from_model)?;
    Ok(s)
}

pub(crate) fn write_verdict(w: &mut XmlWriter, v: &TestVerdict) {
    w.start("verdict");
    for kind in CriterionKind::ALL {
        let c = v.get(kind);
        w.start("criterion");
        w.text("name", kind.name());
        w.num("expected", c.expected);
        w.num("observed", c.observed);
        w.flag("pass", c.pass);
        w.end("criterion");
    }
    w.flag("overall", v.overall);
    w.end("verdict");
}

pub(crate) fn read_verdict(
    node: Node<'_, '_>,
    ns: &str,
    warnings: &mut Warnings,
) -> Result<TestVerdict, ProtocolError> {
    let g = Group::collect(node, ns, &["criterion", "overall"], Unknown::Warn, warnings)?;
    g.require_repeating(&["overall"], &["criterion"])?;
    let criteria = g.all("criterion");
    if criteria.len() != CriterionKind::ALL.len() {
        return Err(ProtocolError::schema(
            ["criterion"],
            format!("verdict needs exactly 3 criterion elements, found {}", criteria.len()),
        ));
    }
    let mut results = Vec::with_capacity(3);
    for (node, kind) in criteria.iter().zip(CriterionKind::ALL) {
        let names = ["name", "expected", "observed", "pass"];
        let c = Group::collect(*node, ns, &names, Unknown::Warn, warnings)?;
        c.require(&names)?;
        let name = c.trimmed("name")?;
        if name != kind.name() {
            return Err(ProtocolError::field(
                "name",
                format!("expected criterion {:?}, found {name:?}", kind.name()),
            ));
        }
        results.push(CriterionResult {
            expected: c.decimal("expected")?,
            observed: c.decimal("observed")?,
            pass: c.flag("pass")?,
        });
    }
    let v = TestVerdict {
        response: results[0],
        tps: results[1],
        bps: results[2],
        overall: g.flag("overall")?,
    };
    v.validate().map_err(ProtocolError::from_model)?;
    Ok(v)
}

pub(crate) fn write_outcome_body(w: &mut XmlWriter, o: &AdaptiveOutcome) {
    w.int("maxSustainable", o.max_sustainable_concurrency);
    w.flag("complete", o.complete);
    if let Some(s) = &o.final_summary {
        write_summary(w, "finalSummary", s);
    }
    w.start("traces");
    for t in &o.traces {
        w.start("trace");
        w.int("iteration", t.iteration);
        w.int("concurrency", t.concurrency);
        w.text("decision", t.decision.as_str());
        write_summary(w, "summary", &t.summary);
        w.end("trace");
    }
    w.end("traces");
}

const OUTCOME: [&str; 4] = ["maxSustainable", "complete", "finalSummary", "traces"];

pub(crate) fn read_outcome_body(
    node: Node<'_, '_>,
    ns: &str,
    warnings: &mut Warnings,
) -> Result<AdaptiveOutcome, ProtocolError> {
    let g = Group::collect(node, ns, &OUTCOME, Unknown::Warn, warnings)?;
    g.require(&["maxSustainable", "complete", "traces"])?;
    let final_summary = g
        .opt("finalSummary")
        .map(|n| read_summary(n, ns, warnings))
        .transpose()?;
    let traces_group = Group::collect(g.one("traces"), ns, &["trace"], Unknown::Warn, warnings)?;
    let mut traces = Vec::new();
    for node in traces_group.all("trace") {
        let names = ["iteration", "concurrency", "decision", "summary"];
        let t = Group::collect(*node, ns, &names, Unknown::Warn, warnings)?;
        t.require(&names)?;
        let decision: Decision = t
            .trimmed("decision")?
            .parse()
            .map_err(|e: String| ProtocolError::field("decision", e))?;
        traces.push(TraceRecord {
            iteration: t.uint("iteration")?,
            concurrency: t.uint("concurrency")?,
            summary: read_summary(t.one("summary"), ns, warnings)?,
            decision,
        });
    }
    let outcome = AdaptiveOutcome {
        traces,
        max_sustainable_concurrency: g.uint("maxSustainable")?,
        final_summary,
        complete: g.flag("complete")?,
    };
    outcome.validate().map_err(ProtocolError::from_model)?;
    Ok(outcome)
}
