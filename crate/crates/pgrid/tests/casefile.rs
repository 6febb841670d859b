use pgrid::casefile::hash_bytes;
use pgrid::suite::CASE3_JSON;
use pgrid::{load_case, parse_case, CaseError};
use serde_json::Value;

fn edited(edit: impl Fn(&mut Value)) -> Result<pgrid::Case, CaseError> {
    let mut json: Value = serde_json::from_str(CASE3_JSON).unwrap();
    edit(&mut json);
    parse_case(serde_json::to_string(&json).unwrap().as_bytes())
}

#[test]
fn shipped_file_matches_embedded_copy() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../cases/case3.json");
    let case = load_case(path).unwrap();
    assert_eq!(case.hash, hash_bytes(CASE3_JSON.as_bytes()));
    assert_eq!(case.hash.len(), 64);
    assert_eq!(case.network.len(), 3);
    assert_eq!(case.devices.len(), 3);
    assert_eq!(case.faults, vec![1, 2]);
}

#[test]
fn scaling_keeps_the_source_hash() {
    let case = parse_case(CASE3_JSON.as_bytes()).unwrap();
    let scaled = case.with_scale(2.0).unwrap();
    assert_eq!(scaled.hash, case.hash);
    assert_eq!(scaled.network.scale, 2.0);
}

#[test]
fn unknown_fields_are_rejected() {
    assert!(matches!(edited(|j| j["colour"] = "red".into()), Err(CaseError::Parse(_))));
}

#[test]
fn negative_resistance_needs_a_reduced_case() {
    assert!(matches!(edited(|j| j["lines"][0]["r"] = (-0.01).into()), Err(CaseError::Invalid(_))));
    let ok = edited(|j| {
        j["lines"][0]["r"] = (-0.01).into();
        j["reduced"] = true.into();
    });
    assert!(ok.is_ok());
}

#[test]
fn duplicate_lines_are_rejected() {
    let r = edited(|j| {
        let line = j["lines"][0].clone();
        j["lines"].as_array_mut().unwrap().push(line);
    });
    assert!(matches!(r, Err(CaseError::Invalid(_))));
}

#[test]
fn bus_without_device_is_rejected() {
    let case = edited(|j| {
        j["devices"].as_array_mut().unwrap().pop();
    })
    .unwrap();
    let r = pgrid_core::PowerSystem::assemble(&case.network, &case.devices, &[1.0; 3], 0.05);
    assert!(matches!(r, Err(pgrid_core::Error::Validation(_))), "{:?}", r);
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(load_case("/nonexistent/case.json"), Err(CaseError::Io(_))));
}
