use mmlda_web::ops::{encode_licking, nmi_of_joint, DemoState};
use serde_json::Value;

#[test]
fn nmi_explorer_normalizes_and_reports() {
    let v: Value = serde_json::from_str(&nmi_of_joint("[[4,1],[1,4]]").unwrap()).unwrap();
    assert!((v["nmi"].as_f64().unwrap() - 0.2781).abs() < 1e-3);
    assert_eq!(v["first_marginal"], serde_json::json!([0.5, 0.5]));
    let v: Value = serde_json::from_str(&nmi_of_joint("[[1,0],[0,1]]").unwrap()).unwrap();
    assert!((v["nmi"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(nmi_of_joint("[[0,0]]").is_err());
    assert!(nmi_of_joint("[[1,-1]]").is_err());
    assert!(nmi_of_joint("nope").is_err());
}

#[test]
fn licking_encoder_matches_the_day_procedure() {
    let out = encode_licking("0.1, 0.2, 0.3, 0.4, 0.5, 0.6").unwrap();
    let rows: Vec<[u32; 2]> = serde_json::from_str(&out).unwrap();
    let licks: Vec<u32> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(licks, vec![0, 586, 1171, 1757, 2342, 2928]);
    assert!(rows.iter().all(|r| r[0] + r[1] == 2928));
    assert!(encode_licking("1,1,1,1,1,1").is_err());
    assert!(encode_licking("1,2,3").is_err());
    assert!(encode_licking("1,2,x,4,5,6").is_err());
}

#[test]
fn demo_trains_and_sweeps() {
    let demo = DemoState::train("ncm", 5, 5, 2, 1).unwrap();
    let r = demo.rand_index().unwrap();
    assert!((0.0..=1.0).contains(&r));
    let points: Vec<Value> = serde_json::from_str(&demo.extrapolation(20, 1).unwrap()).unwrap();
    assert_eq!(points.len(), 42);
    assert_eq!(points[0]["sweep"], "self");
    assert!(DemoState::train("xyz", 5, 5, 2, 1).is_err());
    assert!(DemoState::train("ECM", 1, 5, 2, 1).is_err());
}
