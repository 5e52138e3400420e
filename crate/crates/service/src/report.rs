//! Self-contained HTML detail page of a stored task.

use std::fmt::Write;

use tfpaas_core::model::{CriterionKind, MeasurementSummary};
use tfpaas_core::protocol::TestResultRecord;

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '&' => out.push_str("&amp;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn unit(kind: CriterionKind) -> &'static str {
    match kind {
        CriterionKind::Response => "ms (mean, at most)",
        CriterionKind::Tps => "requests/s (at least)",
        CriterionKind::Bps => "bits/s (at least)",
    }
}

fn pass_cell(pass: bool) -> &'static str {
    if pass {
        "<td class=\"pass\">PASS</td>"
    } else {
        "<td class=\"fail\">FAIL</td>"
    }
}

fn summary_rows(out: &mut String, s: &MeasurementSummary) {
    let rows = [
        ("mean", format!("{:.3} ms", s.mean_ms)),
        ("p50", format!("{:.3} ms", s.p50_ms)),
        ("p95", format!("{:.3} ms", s.p95_ms)),
        ("throughput", format!("{:.3} requests/s", s.observed_tps)),
        ("bandwidth", format!("{:.1} bits/s", s.observed_bps)),
        ("completed", s.completed.to_string()),
        ("errored", s.errored.to_string()),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "<tr><th>{k}</th><td>{v}</td></tr>");
    }
}

pub fn render_report(r: &TestResultRecord) -> String {
    let id = r.task_id.hyphenated().to_string();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<!DOCTYPE html>\n<html lang=\"en\"><head><meta charset=\"utf-8\"><title>Task {id}</title>\n\
         <style>body{{font-family:sans-serif;margin:2em}}table{{border-collapse:collapse;margin-bottom:1.5em}}\
         td,th{{border:1px solid #bbb;padding:4px 8px;text-align:left}}.pass{{color:#060}}.fail{{color:#a00}}</style>\n\
         </head><body>"
    );
    let _ = writeln!(out, "<h1>Task {id}</h1>");
    let _ = writeln!(
        out,
        "<p>Status: <strong id=\"status\">{}</strong></p>",
        r.result.status.as_str()
    );

    let _ = writeln!(out, "<h2>Request</h2><table>");
    let mut echo = vec![
        ("mode", r.mode.as_str().to_string()),
        ("user", r.identity.user_name.clone()),
        ("application", r.identity.app_id.hyphenated().to_string()),
        ("url", r.case.url.clone()),
        ("method", r.case.method.as_str().to_string()),
        ("requests", r.profile.requests.to_string()),
        ("concurrency", r.profile.concurrency.to_string()),
        ("submitted", r.submitted_at.to_rfc3339()),
    ];
    if let Some(msg) = &r.case.message {
        echo.push(("message", msg.clone()));
    }
    if let Some(t) = &r.finished_at {
        echo.push(("finished", t.to_rfc3339()));
    }
    if let Some(a) = &r.adaptive {
        echo.push((
            "adaptive",
            format!(
                "start {}, growth {}, at most {} iterations, {} requests per iteration",
                a.start_concurrency, a.growth_factor, a.max_iterations, a.requests_per_iteration
            ),
        ));
    }
    for (k, v) in echo {
        let _ = writeln!(out, "<tr><th>{k}</th><td>{}</td></tr>", esc(&v));
    }
    let _ = writeln!(out, "</table>");

    if let Some(err) = &r.result.error {
        let _ = writeln!(out, "<h2>Error</h2><pre class=\"error\">{}</pre>", esc(err));
    }

    if let Some(v) = &r.result.verdict {
        let _ = writeln!(
            out,
            "<h2>Criteria</h2><table><tr><th>criterion</th><th>expected</th><th>observed</th><th>unit</th><th>result</th></tr>"
        );
        for kind in CriterionKind::ALL {
            let c = v.get(kind);
            let _ = writeln!(
                out,
                "<tr class=\"criterion\"><td>{}</td><td>{}</td><td>{:.3}</td><td>{}</td>{}</tr>",
                kind.name(),
                c.expected,
                c.observed,
                unit(kind),
                pass_cell(c.pass)
            );
        }
        let _ = writeln!(
            out,
            "</table><p>Overall: <strong id=\"overall\">{}</strong></p>",
            if v.overall { "PASS" } else { "FAIL" }
        );
    }

    if let Some(s) = &r.result.summary {
        let _ = writeln!(out, "<h2>Measurements</h2><table>");
        summary_rows(&mut out, s);
        let _ = writeln!(out, "</table>");
    }

    if let Some(o) = &r.result.adaptive {
        let _ = writeln!(
            out,
            "<h2>Adaptive search</h2><p>Highest sustainable concurrency: <strong id=\"max-sustainable\">{}</strong>{}</p>",
            o.max_sustainable_concurrency,
            if o.complete {
                ""
            } else {
                " (iteration budget exhausted before convergence)"
            }
        );
        let _ = writeln!(
            out,
            "<table><tr><th>iteration</th><th>concurrency</th><th>p50 ms</th><th>p95 ms</th><th>tps</th><th>decision</th></tr>"
        );
        for t in &o.traces {
            let _ = writeln!(
                out,
                "<tr class=\"trace\"><td>{}</td><td>{}</td><td>{:.3}</td><td>{:.3}</td><td>{:.3}</td><td>{}</td></tr>",
                t.iteration,
                t.concurrency,
                t.summary.p50_ms,
                t.summary.p95_ms,
                t.summary.observed_tps,
                t.decision.as_str()
            );
        }
        let _ = writeln!(out, "</table>");
    }

    let _ = writeln!(
        out,
        "<p><a href=\"{}.xml\">XML result</a></p></body></html>",
        esc(&id)
    );
    out
}
