use pgrid::suite::{shipped_suite, shipped_suites, validate_suite, Layout, SuiteError};
use pgrid::{parse_case, ExperimentSuite};

#[test]
fn shipped_suites_validate() {
    let reports: Vec<_> = shipped_suites()
        .unwrap()
        .iter()
        .map(|s| validate_suite(s).unwrap())
        .collect();
    let shape: Vec<_> = reports.iter().map(|r| (r.devices, r.sg, r.cd, r.qd, r.state_dim)).collect();
    assert_eq!(
        shape,
        vec![(3, 1, 1, 1, 7), (22, 6, 8, 8, 50), (24, 6, 9, 9, 54), (26, 6, 10, 10, 58)]
    );
}

#[test]
fn sweeps_cover_the_studied_load_range() {
    let s = shipped_suite("case3").unwrap();
    assert_eq!(s.sweep(), vec![0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5]);
    let s = shipped_suite("case39_22").unwrap();
    assert_eq!(s.sweep().last(), Some(&2.0));
    assert_eq!(s.fault_buses().len(), 3);
}

#[test]
fn unknown_suite_is_reported() {
    assert!(matches!(shipped_suite("case118"), Err(SuiteError::UnknownSuite(_))));
}

fn with_case_edit(edit: impl Fn(&mut serde_json::Value)) -> ExperimentSuite {
    let base = shipped_suite("case3").unwrap();
    let mut json: serde_json::Value = serde_json::from_str(pgrid::suite::CASE3_JSON).unwrap();
    edit(&mut json);
    let case = parse_case(serde_json::to_string(&json).unwrap().as_bytes()).unwrap();
    ExperimentSuite { case, ..base }
}

#[test]
fn altered_generator_constants_are_flagged() {
    let suite = with_case_edit(|j| j["devices"][0]["params"]["m"] = 0.2.into());
    match validate_suite(&suite) {
        Err(SuiteError::Mismatch(list)) => assert!(list.iter().any(|m| m.contains("SG constants"))),
        other => panic!("{:?}", other),
    }
}

#[test]
fn wrong_layout_is_flagged() {
    let mut suite = shipped_suite("case3").unwrap();
    suite.layout = Layout::Ieee39 { devices: 22 };
    assert!(matches!(validate_suite(&suite), Err(SuiteError::Mismatch(_))));
}

#[test]
fn device_on_missing_bus_is_flagged() {
    let mut suite = shipped_suite("case3").unwrap();
    suite.case.devices[2].bus = 99;
    match validate_suite(&suite) {
        Err(SuiteError::Mismatch(list)) => {
            assert!(list.iter().any(|m| m.contains("nonexistent bus 99")));
            assert!(list.iter().any(|m| m.contains("bus 2 carries 0 devices")));
        }
        other => panic!("{:?}", other),
    }
}
