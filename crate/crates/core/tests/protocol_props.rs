use proptest::prelude::*;
use proptest::strategy::ValueTree;
use tfpaas_core::protocol::{
    decode_instructions, decode_record, decode_request, decode_result, decode_run_report,
    encode_instructions, encode_measurement, encode_outcome, encode_record, encode_request,
    encode_result, RunReport, TestResultRecord,
};
use tfpaas_core::model::RunMode;
use tfpaas_testkit::arb;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn request_round_trip(env in arb::envelope()) {
        let xml = encode_request(&env).unwrap();
        let back = decode_request(&xml).unwrap();
        prop_assert!(back.warnings.is_empty(), "{:?}", back.warnings);
        prop_assert_eq!(&back.value, &env);
        prop_assert_eq!(encode_request(&back.value).unwrap(), xml);
    }

    #[test]
    fn result_round_trip(r in arb::result_envelope()) {
        let xml = encode_result(&r).unwrap();
        let back = decode_result(&xml).unwrap();
        prop_assert_eq!(&back.value, &r);
        prop_assert_eq!(encode_result(&back.value).unwrap(), xml);
    }

    #[test]
    fn instruction_round_trip(i in arb::instruction_set()) {
        let xml = encode_instructions(&i).unwrap();
        let back = decode_instructions(&xml).unwrap();
        prop_assert_eq!(&back.value, &i);
        prop_assert_eq!(encode_instructions(&back.value).unwrap(), xml);
    }

    #[test]
    fn run_report_round_trip(m in arb::measurement(), o in arb::outcome()) {
        let back = decode_run_report(&encode_measurement(&m).unwrap()).unwrap().value;
        prop_assert_eq!(back, RunReport::Measurement(m));
        let back = decode_run_report(&encode_outcome(&o).unwrap()).unwrap().value;
        prop_assert_eq!(back, RunReport::Outcome(o));
    }

    #[test]
    fn record_round_trip(
        i in arb::instruction_set(),
        r in arb::result_envelope(),
        submitted in arb::timestamp(),
        finished in arb::timestamp(),
    ) {
        let record = TestResultRecord {
            task_id: r.task_id,
            mode: i.mode(),
            submitted_at: submitted,
            finished_at: r.status.is_terminal().then_some(finished),
            identity: i.identity,
            case: i.case,
            criteria: i.criteria,
            profile: i.profile,
            adaptive: i.adaptive,
            result: r,
        };
        let back = decode_record(&encode_record(&record).unwrap()).unwrap().value;
        prop_assert_eq!(back, record);
    }

    #[test]
    fn truncation_never_panics(env in arb::envelope(), cut in 0usize..2000) {
        let xml = encode_request(&env).unwrap();
        let cut = cut.min(xml.len());
        if xml.is_char_boundary(cut) && cut < xml.len() {
            prop_assert!(decode_request(&xml[..cut]).is_err());
        }
    }
}

#[test]
fn master_marker_only_for_master_mode() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..50 {
        let env = arb::envelope().new_tree(&mut runner).unwrap().current();
        let xml = encode_request(&env).unwrap();
        assert_eq!(
            xml.contains("<m:mode>master</m:mode>"),
            env.mode == RunMode::Master
        );
    }
}
