use std::sync::Arc;
use std::time::Duration;

use tfpaas_core::model::{
    evaluate, summarize, AdaptiveParams, ApplicationIdentity, LoadProfile, PerformanceCriteria,
    TestCase,
};
use tfpaas_core::protocol::{
    decode_run_report, decode_status, encode_instructions, InstructionSet, RunReport,
};
use tfpaas_runcenter::server::router;
use tfpaas_runcenter::{LoadGenerator, RunCenter};
use tfpaas_testkit::{MockTarget, TargetBehavior};
use uuid::Uuid;

async fn serve(timeout: Duration) -> (String, Arc<RunCenter>) {
    let center = Arc::new(RunCenter::new(LoadGenerator::default()));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(center.clone(), timeout);
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}"), center)
}

fn instructions(url: String, requests: u32, concurrency: u32) -> InstructionSet {
    InstructionSet {
        task_id: Uuid::new_v4(),
        identity: ApplicationIdentity::generate("rc").unwrap(),
        case: TestCase::get(url),
        criteria: PerformanceCriteria {
            response_ms: 1000.0,
            tps: 1.0,
            bps: 8.0,
        },
        profile: LoadProfile {
            requests,
            concurrency,
        },
        adaptive: None,
    }
}

fn client() -> reqwest::Client {
    reqwest::Client::builder().no_proxy().build().unwrap()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn execute_round_trip() {
    let target = MockTarget::spawn(TargetBehavior::fixed(5));
    let (base, _) = serve(Duration::from_secs(60)).await;
    let i = instructions(target.url("svc"), 20, 4);
    let resp = client()
        .post(format!("{base}/execute"))
        .body(encode_instructions(&i).unwrap())
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 200);
    match decode_run_report(&resp.text().await.unwrap()).unwrap().value {
        RunReport::Measurement(m) => assert_eq!(m.latencies_ms.len(), 20),
        other => panic!("unexpected {other:?}"),
    }
}

#[tokio::test]
async fn malformed_body_is_400() {
    let (base, _) = serve(Duration::from_secs(60)).await;
    let resp = client()
        .post(format!("{base}/execute"))
        .body("<not-closed")
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 400);
    assert!(resp.text().await.unwrap().starts_with("E_MALFORMED_XML"));
}

#[tokio::test]
async fn status_reports_idle() {
    let (base, _) = serve(Duration::from_secs(60)).await;
    let body = client()
        .get(format!("{base}/status"))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert!(!decode_status(&body).unwrap().busy);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn slow_run_is_504() {
    let target = MockTarget::spawn(TargetBehavior::fixed(300));
    let (base, _) = serve(Duration::from_millis(100)).await;
    let resp = client()
        .post(format!("{base}/execute"))
        .body(encode_instructions(&instructions(target.url("s"), 4, 1)).unwrap())
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 504);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn unreachable_target_is_422() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let (base, _) = serve(Duration::from_secs(60)).await;
    let resp = client()
        .post(format!("{base}/execute"))
        .body(encode_instructions(&instructions(format!("http://127.0.0.1:{port}/"), 3, 1)).unwrap())
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 422);
    assert!(resp.text().await.unwrap().starts_with("E_TARGET_UNRESOLVABLE"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn master_over_http_grows_until_budget() {
    let target = MockTarget::spawn(TargetBehavior::fixed(5));
    let (base, _) = serve(Duration::from_secs(60)).await;
    let mut i = instructions(target.url("m"), 10, 1);
    i.adaptive = Some(AdaptiveParams {
        start_concurrency: 1,
        growth_factor: 2.0,
        max_iterations: 4,
        requests_per_iteration: 8,
    });
    let resp = client()
        .post(format!("{base}/execute"))
        .body(encode_instructions(&i).unwrap())
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 200);
    match decode_run_report(&resp.text().await.unwrap()).unwrap().value {
        RunReport::Outcome(o) => {
            let levels: Vec<u32> = o.traces.iter().map(|t| t.concurrency).collect();
            assert_eq!(levels, vec![1, 2, 4, 8]);
            assert!(!o.complete);
            assert_eq!(o.max_sustainable_concurrency, 8);
        }
        other => panic!("unexpected {other:?}"),
    }
    // 8 + 8 + 8 + 8 requests.
    assert_eq!(target.requests(), 32);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn embedded_and_http_dispatch_agree() {
    let target = MockTarget::spawn(TargetBehavior::fixed(10));
    let (base, _) = serve(Duration::from_secs(60)).await;
    let i = instructions(target.url("same"), 20, 2);
    let embedded = RunCenter::new(LoadGenerator::default()).run(&i).await.unwrap();
    let body = client()
        .post(format!("{base}/execute"))
        .body(encode_instructions(&i).unwrap())
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    let remote = decode_run_report(&body).unwrap().value;
    // Observed values jitter between runs; the judgement must not.
    let verdict = |r: RunReport| match r {
        RunReport::Measurement(m) => {
            let v = evaluate(&summarize(&m).unwrap(), &i.criteria);
            (v.response.pass, v.tps.pass, v.bps.pass, v.overall)
        }
        other => panic!("unexpected {other:?}"),
    };
    assert_eq!(verdict(embedded), verdict(remote));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn runs_are_serialized() {
    let target = MockTarget::spawn(TargetBehavior::fixed(20));
    let center = Arc::new(RunCenter::new(LoadGenerator::default()));
    let a = instructions(target.url("a"), 10, 5);
    let b = instructions(target.url("b"), 10, 5);
    let (ra, rb) = tokio::join!(center.run(&a), center.run(&b));
    ra.unwrap();
    rb.unwrap();
    // Two sets of 5 workers never overlap.
    assert!(target.max_in_flight() <= 5);
}
