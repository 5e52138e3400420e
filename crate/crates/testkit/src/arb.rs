//! Proptest strategies producing valid model and protocol values.

use chrono::{DateTime, TimeZone, Utc};
use proptest::collection::vec;
use proptest::option;
use proptest::prelude::*;
use tfpaas_core::model::{
    evaluate, summarize, AdaptiveOutcome, AdaptiveParams, ApplicationIdentity, Decision,
    LoadProfile, Measurement, MeasurementSummary, Method, PerformanceCriteria, RunMode, RunStatus,
    TestCase, TraceRecord,
};
use tfpaas_core::protocol::{InstructionSet, ResultEnvelope, TestEnvelope};
use uuid::Uuid;

pub fn uuid_v4() -> impl Strategy<Value = Uuid> {
    any::<u128>().prop_map(|bits| uuid::Builder::from_random_bytes(bits.to_le_bytes()).into_uuid())
}

pub fn identity() -> impl Strategy<Value = ApplicationIdentity> {
    (uuid_v4(), "[A-Za-z][A-Za-z0-9 ._<>&'\"-]{0,30}[A-Za-z0-9]").prop_map(|(app_id, name)| {
        ApplicationIdentity {
            app_id,
            user_name: name,
        }
    })
}

/// Positive decimals, including awkward binary fractions.
pub fn positive() -> impl Strategy<Value = f64> {
    prop_oneof![
        (1u32..100_000).prop_map(f64::from),
        (1e-6f64..1e9),
        (1u32..1000).prop_map(|n| f64::from(n) / 3.0),
    ]
}

pub fn non_negative() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), positive()]
}

pub fn url() -> impl Strategy<Value = String> {
    (
        prop_oneof![Just("http"), Just("https")],
        prop_oneof![
            "[a-z]{1,10}(\\.[a-z]{2,5}){0,2}".prop_map(String::from),
            Just("127.0.0.1".to_string())
        ],
        option::of(1u16..65535),
        "(/[A-Za-z0-9_.-]{1,8}){0,3}",
        option::of("[a-z]{1,5}=[A-Za-z0-9]{0,5}(&[a-z]{1,5}=[0-9]{1,3}){0,2}"),
    )
        .prop_map(|(scheme, host, port, path, query)| {
            let mut s = format!("{scheme}://{host}");
            if let Some(p) = port {
                s.push_str(&format!(":{p}"));
            }
            s.push_str(&path);
            if let Some(q) = query {
                s.push('?');
                s.push_str(&q);
            }
            s
        })
}

pub fn case() -> impl Strategy<Value = TestCase> {
    (url(), option::of("[ -~\n\t]{0,40}")).prop_map(|(url, message)| TestCase {
        url,
        method: if message.is_some() {
            Method::Post
        } else {
            Method::Get
        },
        message,
    })
}

pub fn criteria() -> impl Strategy<Value = PerformanceCriteria> {
    (positive(), positive(), positive()).prop_map(|(response_ms, tps, bps)| PerformanceCriteria {
        response_ms,
        tps,
        bps,
    })
}

pub fn load() -> impl Strategy<Value = LoadProfile> {
    (1u32..10_000)
        .prop_flat_map(|requests| (Just(requests), 1..=requests.min(500)))
        .prop_map(|(requests, concurrency)| LoadProfile {
            requests,
            concurrency,
        })
}

pub fn adaptive() -> impl Strategy<Value = AdaptiveParams> {
    (1u32..64, 1.01f64..8.0, 1u32..50, 1u32..1000).prop_map(|(s, g, m, r)| AdaptiveParams {
        start_concurrency: s,
        growth_factor: g,
        max_iterations: m,
        requests_per_iteration: r,
    })
}

pub fn envelope() -> impl Strategy<Value = TestEnvelope> {
    (
        identity(),
        case(),
        criteria(),
        option::of(load()),
        option::of(adaptive()),
        any::<bool>(),
    )
        .prop_map(|(application, case, criteria, load, adaptive, master)| {
            let mode = if master || adaptive.is_some() {
                RunMode::Master
            } else {
                RunMode::Critical
            };
            TestEnvelope {
                application,
                case,
                criteria,
                load,
                mode,
                adaptive,
            }
        })
}

pub fn timestamp() -> impl Strategy<Value = DateTime<Utc>> {
    (0i64..4_000_000_000, 0u32..1_000_000_000)
        .prop_map(|(s, ns)| Utc.timestamp_opt(s, ns).single().expect("valid timestamp"))
}

pub fn measurement() -> impl Strategy<Value = Measurement> {
    (
        vec(non_negative(), 1..40),
        0u64..1 << 40,
        positive(),
        0u64..20,
        timestamp(),
    )
        .prop_flat_map(|(latencies, bytes, wall, transport, started)| {
            let n = latencies.len() as u64;
            (0..=n).prop_map(move |http_errors| Measurement {
                latencies_ms: latencies.clone(),
                bytes_received: bytes,
                wall_time_s: wall,
                http_error_count: http_errors,
                transport_error_count: transport,
                started_at: started,
            })
        })
}

pub fn summary() -> impl Strategy<Value = MeasurementSummary> {
    measurement().prop_map(|m| summarize(&m).expect("non-empty measurement"))
}

pub fn outcome() -> impl Strategy<Value = AdaptiveOutcome> {
    (
        vec((1u32..1000, summary(), 0u8..3), 0..8),
        0u32..1000,
        summary(),
        any::<bool>(),
    )
        .prop_map(|(traces, max, final_summary, complete)| AdaptiveOutcome {
            traces: traces
                .into_iter()
                .enumerate()
                .map(|(i, (c, s, d))| TraceRecord {
                    iteration: i as u32 + 1,
                    concurrency: c,
                    summary: s,
                    decision: [Decision::Grow, Decision::Bisect, Decision::Stop][d as usize],
                })
                .collect(),
            max_sustainable_concurrency: max,
            final_summary: (max > 0).then_some(final_summary),
            complete,
        })
}

pub fn result_envelope() -> impl Strategy<Value = ResultEnvelope> {
    (
        uuid_v4(),
        url(),
        0u8..3,
        criteria(),
        summary(),
        option::of(outcome()),
        "[ -~]{1,40}",
    )
        .prop_map(|(task_id, base, status, criteria, summary, adaptive, error)| {
            let detail_url = format!("{}/results/{}", base.split('?').next().unwrap_or(&base), task_id);
            match status {
                0 => ResultEnvelope::pending(task_id, detail_url),
                1 => ResultEnvelope::failed(task_id, detail_url, error),
                _ => ResultEnvelope {
                    status: RunStatus::Done,
                    verdict: Some(evaluate(&summary, &criteria)),
                    summary: Some(summary),
                    adaptive,
                    ..ResultEnvelope::pending(task_id, detail_url)
                },
            }
        })
}

pub fn instruction_set() -> impl Strategy<Value = InstructionSet> {
    (
        uuid_v4(),
        identity(),
        case(),
        criteria(),
        load(),
        option::of(adaptive()),
    )
        .prop_map(|(task_id, identity, case, criteria, profile, adaptive)| InstructionSet {
            task_id,
            identity,
            case,
            criteria,
            profile,
            adaptive,
        })
}
