use std::f64::consts::{E, PI};

use shrinkerlab::flow::*;

#[test]
fn ellipse_entropy_never_increases() {
    let trace = run_flow(&CurveState::ellipse(2.0, 1.0, 128).unwrap(), 0.8, &FlowConfig::default()).unwrap();
    let values = trace.entropy_values();
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            assert!(values[j] <= values[i] + 2e-3, "t{i} -> t{j}: {} -> {}", values[i], values[j]);
        }
    }
    assert!(values[0] > values[values.len() - 1]);
    assert!(trace.lengths.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn tilted_ellipse_matches_planar_flow() {
    let cfg = FlowConfig { checkpoints: 4, ..FlowConfig::default() };
    let planar = CurveState::ellipse(2.0, 1.0, 96).unwrap();
    let a = run_flow(&planar, 0.5, &cfg).unwrap();
    let b = run_flow(&planar.tilted(0.7).unwrap(), 0.5, &cfg).unwrap();
    for (x, y) in a.entropy_values().iter().zip(b.entropy_values()) {
        assert!((x - y).abs() < 1e-3, "{x} vs {y}");
    }
    for (x, y) in a.lengths.iter().zip(&b.lengths) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn shrinking_circle_is_self_similar() {
    let r0 = 2f64.sqrt();
    let trace = run_flow(&CurveState::circle(r0, 128, &[0.0, 0.0]).unwrap(), 0.9, &FlowConfig::default()).unwrap();
    let target = (2.0 * PI / E).sqrt();
    for (t, (v, len)) in trace.times.iter().zip(trace.entropy_values().iter().zip(&trace.lengths)) {
        assert!((v - target).abs() < 2e-3, "t = {t}: {v}");
        let radius = len / (2.0 * PI);
        assert!((radius - (r0 * r0 - 2.0 * t).sqrt()).abs() < 1e-3, "t = {t}: {radius}");
    }
}

#[test]
fn rounded_square_rounds_off() {
    let sq = CurveState::rounded_square(1.5, 0.3, 160).unwrap();
    let trace = run_flow(&sq, 0.5, &FlowConfig { checkpoints: 5, ..FlowConfig::default() }).unwrap();
    assert!(trace.worst_increase() <= 2e-3, "{:?}", trace.entropy_values());
    assert!(trace.lengths.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn collapse_is_reported() {
    let c = CurveState::circle(0.1, 64, &[0.0, 0.0]).unwrap();
    let err = flow_until(&c, 0.01, &FlowConfig::default()).unwrap_err();
    assert!(matches!(err, shrinkerlab::Error::Collapse(_)), "{err}");
}
