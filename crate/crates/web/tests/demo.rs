//! The demo entry points on the native target.

use occlutrack_web::{epsilon_surface_json, peak_demo_json, CrossingRun};
use serde_json::Value;

fn parse(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn peak_demo_is_seeded_and_consistent() {
    let a = parse(&peak_demo_json(3, 17, 5, 4, 0.05).unwrap());
    assert_eq!(a, parse(&peak_demo_json(3, 17, 5, 4, 0.05).unwrap()));
    assert_eq!(a["values"].as_array().unwrap().len(), 17 * 17);
    let peaks = a["peaks"].as_array().unwrap();
    assert!(!peaks.is_empty() && peaks.len() <= 5);
    assert_eq!(a["distances"].as_array().unwrap().len(), peaks.len() - 1);
    // The first peak is the map maximum.
    let max = a["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .fold(f64::MIN, f64::max);
    assert_eq!(peaks[0][2].as_f64().unwrap(), max);
    assert!(peak_demo_json(3, 0, 5, 4, 0.05).is_err());
}

#[test]
fn surface_hits_one_at_the_reference_point() {
    let s = parse(&epsilon_surface_json(0.8, 0.85, 11.0, 12).unwrap());
    assert_eq!(s["epsilon"].as_array().unwrap().len(), 144);
    assert!(epsilon_surface_json(1.5, 0.85, 11.0, 12).is_err());
    let s = parse(&epsilon_surface_json(0.8, 0.85, 5.5, 2).unwrap());
    let e: Vec<f64> = s["epsilon"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    // Corners: (s, dis) = (0,0), (0,5.5), (1,0), (1,5.5).
    assert!((e[1] - 0.2).abs() < 1e-12 && (e[2] - 0.8 / 0.95).abs() < 1e-12);
}

#[test]
fn crossing_with_and_without_the_judge() {
    let on = CrossingRun::build(100, true).unwrap();
    let off = CrossingRun::build(100, false).unwrap();
    assert_eq!((on.width(), on.height(), on.frame_count()), (256, 192, 60));
    assert_eq!(on.frame(0).len(), 256 * 192);
    assert!(on.frame(60).is_empty());
    let (a, b) = (parse(&on.summary()), parse(&off.summary()));
    assert!(a["predicting_frames"].as_u64().unwrap() > 0);
    assert_eq!(b["predicting_frames"], 0);
    assert!(
        a["post_occlusion_success"].as_f64().unwrap()
            > b["post_occlusion_success"].as_f64().unwrap()
    );
}
