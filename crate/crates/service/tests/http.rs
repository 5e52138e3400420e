use std::sync::Arc;
use std::time::{Duration, Instant};

use tfpaas_core::model::{
    AdaptiveParams, ApplicationIdentity, LoadProfile, PerformanceCriteria, RunMode, RunStatus,
    TestCase,
};
use tfpaas_core::protocol::{decode_fault, decode_result, encode_request, ResultEnvelope, TestEnvelope};
use tfpaas_runcenter::server::router as runcenter_router;
use tfpaas_runcenter::RunCenter;
use tfpaas_service::{parse_to_instructions, router, Dispatcher, Service, ServiceConfig};
use tfpaas_testkit::{MockTarget, TargetBehavior};
use uuid::Uuid;

struct Running {
    base: String,
    svc: Arc<Service>,
    _dir: Option<tempfile::TempDir>,
}

async fn start_in(dir: &std::path::Path, dispatcher: Dispatcher) -> Running {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let (svc, _) = Service::open(ServiceConfig::new(dir, base.clone()), dispatcher).unwrap();
    let svc = Arc::new(svc);
    let app = router(svc.clone());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    Running {
        base,
        svc,
        _dir: None,
    }
}

async fn start() -> Running {
    let dir = tempfile::tempdir().unwrap();
    let mut r = start_in(dir.path(), Dispatcher::embedded()).await;
    r._dir = Some(dir);
    r
}

fn client() -> reqwest::Client {
    reqwest::Client::builder().no_proxy().build().unwrap()
}

fn envelope(url: String, response_ms: f64) -> TestEnvelope {
    let mut env = TestEnvelope::critical(
        ApplicationIdentity::generate("svc-test").unwrap(),
        TestCase::get(url),
        PerformanceCriteria {
            response_ms,
            tps: 1.0,
            bps: 8.0,
        },
    );
    env.load = Some(LoadProfile {
        requests: 20,
        concurrency: 4,
    });
    env
}

async fn post(base: &str, body: String) -> (u16, String) {
    let resp = client().post(format!("{base}/tfps")).body(body).send().await.unwrap();
    (resp.status().as_u16(), resp.text().await.unwrap())
}

async fn get(url: &str) -> (u16, String) {
    let resp = client().get(url).send().await.unwrap();
    (resp.status().as_u16(), resp.text().await.unwrap())
}

async fn wait_terminal(detail_url: &str) -> ResultEnvelope {
    let deadline = Instant::now() + Duration::from_secs(30);
    loop {
        let (code, body) = get(&format!("{detail_url}.xml")).await;
        assert_eq!(code, 200);
        let r = decode_result(&body).unwrap().value;
        if r.status != RunStatus::Pending || Instant::now() > deadline {
            return r;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
}

#[test]
fn instructions_copy_envelope() {
    let mut env = envelope("http://www.example.com/TFP/".into(), 3.0);
    env.load = None;
    let id = Uuid::new_v4();
    let i = parse_to_instructions(&env, id);
    assert_eq!(i.task_id, id);
    assert_eq!(i.identity, env.application);
    assert_eq!(i.case, env.case);
    assert_eq!(i.criteria, env.criteria);
    assert_eq!(i.profile, LoadProfile { requests: 100, concurrency: 10 });
    assert_eq!(i.adaptive, None);
    env.mode = RunMode::Master;
    assert_eq!(parse_to_instructions(&env, id).adaptive, Some(AdaptiveParams::default()));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn critical_run_is_synchronous() {
    let target = MockTarget::spawn(TargetBehavior::fixed(20));
    let s = start().await;
    let (code, body) = post(&s.base, encode_request(&envelope(target.url("svc"), 100.0)).unwrap()).await;
    assert_eq!(code, 200, "{body}");
    let r = decode_result(&body).unwrap().value;
    assert_eq!(r.status, RunStatus::Done);
    assert!(r.verdict.unwrap().overall);
    assert_eq!(r.detail_url, format!("{}/results/{}", s.base, r.task_id));
    let (code, html) = get(&r.detail_url).await;
    assert_eq!(code, 200);
    assert_eq!(html.matches("<tr class=\"criterion\">").count(), 3);
    assert_eq!(html.matches("<tr class=\"trace\">").count(), 0);
    let (code, xml) = get(&format!("{}.xml", r.detail_url)).await;
    assert_eq!(code, 200);
    assert_eq!(decode_result(&xml).unwrap().value.task_id, r.task_id);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn tight_response_criterion_fails_only_response() {
    let target = MockTarget::spawn(TargetBehavior::fixed(20));
    let s = start().await;
    let (code, body) = post(&s.base, encode_request(&envelope(target.url("svc"), 5.0)).unwrap()).await;
    assert_eq!(code, 200);
    let v = decode_result(&body).unwrap().value.verdict.unwrap();
    assert!(!v.response.pass && v.tps.pass && v.bps.pass && !v.overall);
}

#[tokio::test]
async fn not_xml_is_400_fault() {
    let s = start().await;
    let (code, body) = post(&s.base, "not xml".into()).await;
    assert_eq!(code, 400);
    let f = decode_fault(&body).unwrap();
    assert!(f.sender);
    assert_eq!(f.code(), Some("E_MALFORMED_XML"));
    assert!(s.svc.store().task_ids().is_empty());
}

#[tokio::test]
async fn schema_and_field_errors_are_400() {
    let s = start().await;
    let good = encode_request(&envelope("http://127.0.0.1:9/x".into(), 100.0)).unwrap();
    let bad_field = good.replace("<m:response>100</m:response>", "<m:response>-1</m:response>");
    let (code, body) = post(&s.base, bad_field).await;
    assert_eq!(code, 400);
    assert_eq!(decode_fault(&body).unwrap().code(), Some("E_FIELD"));
    let start = good.find("<m:case>").unwrap();
    let end = good.find("</m:case>").unwrap() + "</m:case>".len();
    let no_case = format!("{}{}", &good[..start], &good[end..]);
    let (code, body) = post(&s.base, no_case).await;
    assert_eq!(code, 400);
    assert_eq!(decode_fault(&body).unwrap().code(), Some("E_SCHEMA"));
}

#[tokio::test]
async fn oversized_body_is_413() {
    let s = start().await;
    let (code, _) = post(&s.base, "x".repeat(2 * 1024 * 1024)).await;
    assert_eq!(code, 413);
}

#[tokio::test]
async fn unknown_result_is_404() {
    let s = start().await;
    for path in [format!("{}", Uuid::new_v4()), format!("{}.xml", Uuid::new_v4()), "nope".into()] {
        let (code, _) = get(&format!("{}/results/{path}", s.base)).await;
        assert_eq!(code, 404, "{path}");
    }
}

#[tokio::test]
async fn dispatch_failure_is_502_and_stored() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let s = start().await;
    let (code, body) = post(
        &s.base,
        encode_request(&envelope(format!("http://127.0.0.1:{port}/"), 100.0)).unwrap(),
    )
    .await;
    assert_eq!(code, 502);
    let r = decode_result(&body).unwrap().value;
    assert_eq!(r.status, RunStatus::Failed);
    assert!(r.error.unwrap().starts_with("E_TARGET_UNRESOLVABLE"));
    assert_eq!(s.svc.store().status(r.task_id), Some(RunStatus::Failed));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn master_run_goes_pending_then_done() {
    let target = MockTarget::spawn(TargetBehavior::fixed(5));
    let s = start().await;
    let mut env = envelope(target.url("m"), 1000.0);
    env.mode = RunMode::Master;
    env.adaptive = Some(AdaptiveParams {
        start_concurrency: 1,
        growth_factor: 2.0,
        max_iterations: 7,
        requests_per_iteration: 5,
    });
    let (code, body) = post(&s.base, encode_request(&env).unwrap()).await;
    assert_eq!(code, 202);
    let pending = decode_result(&body).unwrap().value;
    assert_eq!(pending.status, RunStatus::Pending);
    let done = wait_terminal(&pending.detail_url).await;
    assert_eq!(done.status, RunStatus::Done);
    let outcome = done.adaptive.unwrap();
    assert_eq!(outcome.traces.len(), 7);
    let (_, html) = get(&pending.detail_url).await;
    assert_eq!(html.matches("<tr class=\"trace\">").count(), 7);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 8)]
async fn concurrent_submissions_get_distinct_ids() {
    let target = MockTarget::spawn(TargetBehavior::fixed(2));
    let dir = tempfile::tempdir().unwrap();
    let s = start_in(dir.path(), Dispatcher::embedded()).await;
    let mut env = envelope(target.url("h"), 1000.0);
    env.load = Some(LoadProfile { requests: 5, concurrency: 5 });
    let body = encode_request(&env).unwrap();
    let mut handles = Vec::new();
    for _ in 0..20 {
        let (base, body) = (s.base.clone(), body.clone());
        handles.push(tokio::spawn(async move { post(&base, body).await }));
    }
    let mut ids = std::collections::HashSet::new();
    for h in handles {
        let (code, body) = h.await.unwrap();
        assert_eq!(code, 200);
        ids.insert(decode_result(&body).unwrap().value.task_id);
    }
    assert_eq!(ids.len(), 20);
    let (reopened, scan) = Service::open(
        ServiceConfig::new(dir.path(), s.base.clone()),
        Dispatcher::embedded(),
    )
    .unwrap();
    assert_eq!(scan.loaded, 20);
    assert!(scan.skipped.is_empty());
    for id in ids {
        assert_eq!(reopened.store().fetch_result(id).unwrap().result.status, RunStatus::Done);
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn remote_run_center() {
    let target = MockTarget::spawn(TargetBehavior::fixed(5));
    let rc = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let rc_url = format!("http://{}", rc.local_addr().unwrap());
    let app = runcenter_router(Arc::new(RunCenter::default()), Duration::from_secs(60));
    tokio::spawn(async move { axum::serve(rc, app).await.unwrap() });

    let dir = tempfile::tempdir().unwrap();
    let s = start_in(dir.path(), Dispatcher::remote(rc_url)).await;
    let (code, body) = post(&s.base, encode_request(&envelope(target.url("r"), 1000.0)).unwrap()).await;
    assert_eq!(code, 200, "{body}");
    let r = decode_result(&body).unwrap().value;
    assert_eq!(r.summary.unwrap().completed, 20);
    assert_eq!(target.requests(), 20);
}

#[tokio::test]
async fn remote_run_center_down_is_502() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dir = tempfile::tempdir().unwrap();
    let s = start_in(dir.path(), Dispatcher::remote(format!("http://127.0.0.1:{port}"))).await;
    let (code, body) = post(&s.base, encode_request(&envelope("http://127.0.0.1:9/".into(), 1.0)).unwrap()).await;
    assert_eq!(code, 502);
    assert!(decode_result(&body).unwrap().value.error.unwrap().starts_with("E_DISPATCH"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn restart_closes_orphaned_pending_tasks() {
    let target = MockTarget::spawn(TargetBehavior::fixed(200));
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let s = start_in(dir.path(), Dispatcher::embedded()).await;
        let mut env = envelope(target.url("slow"), 1000.0);
        env.mode = RunMode::Master;
        let (code, body) = post(&s.base, encode_request(&env).unwrap()).await;
        assert_eq!(code, 202);
        decode_result(&body).unwrap().value.task_id
    };
    // A second process over the same directory sees the task mid-run.
    let (svc, _) = Service::open(
        ServiceConfig::new(dir.path(), "http://elsewhere"),
        Dispatcher::embedded(),
    )
    .unwrap();
    let r = svc.store().fetch_result(id).unwrap();
    assert_eq!(r.result.status, RunStatus::Failed);
    assert!(r.result.error.unwrap().starts_with("E_INTERRUPTED"));
}
