use std::f64::consts::PI;

use shrinkerlab::manifold::*;

fn area(name: &str, params: &[f64], res: &[usize]) -> f64 {
    let chart = catalog_make(name, params).unwrap();
    build_samples(&chart, res, DerivativeMode::Analytic).unwrap().total_area()
}

#[test]
fn sphere_area_converges() {
    let coarse = area("sphere", &[2.0, 1.0], &[32, 64]);
    let fine = area("sphere", &[2.0, 1.0], &[64, 128]);
    assert!((coarse - fine).abs() < 1e-6);
    assert!((coarse - 4.0 * PI).abs() < 1e-5 && (fine - 4.0 * PI).abs() < 1e-5);
}

#[test]
fn veronese_counts_each_point_once() {
    // the minimal projective plane in the unit 4-sphere has curvature 1/3
    let unit = area("veronese", &[1.0], &[64, 128]);
    assert!((unit - 6.0 * PI).abs() < 1e-6, "{unit}");
}

#[test]
fn position_splits_into_tangent_and_normal_parts() {
    for name in CATALOG_NAMES {
        let params: Vec<f64> = match *name {
            "plane_patch" => vec![2.0, 5.0, 3.0],
            "sphere" => vec![2.0, 2.0],
            "cylinder" => vec![2f64.sqrt(), 5.0],
            "clifford_torus" | "veronese" => vec![2.0],
            "loxodrome" => vec![0.7],
            "ellipse" => vec![2.0, 1.0],
            _ => continue,
        };
        let chart = catalog_make(name, &params).unwrap();
        let s = build_samples(&chart, &coarser_res(&chart), DerivativeMode::Analytic).unwrap();
        for i in (0..s.len()).step_by(7) {
            let x = s.position(i).to_vec();
            let normal = s.normal_part(i, &x);
            let n2: f64 = normal.iter().map(|v| v * v).sum();
            let x2: f64 = x.iter().map(|v| v * v).sum();
            let tangent: Vec<f64> = x.iter().zip(&normal).map(|(a, b)| a - b).collect();
            let t2: f64 = tangent.iter().map(|v| v * v).sum();
            assert!((n2 + t2 - x2).abs() <= 1e-10 * x2.max(1.0), "{name} node {i}");
        }
    }
}

fn coarser_res(chart: &ChartSpec) -> Vec<usize> {
    default_resolution(chart).iter().map(|r| (r / 2).max(8)).collect()
}

#[test]
fn shrinker_residuals_vanish_at_second_order() {
    let shrinkers: [(&str, Vec<f64>, Vec<f64>); 5] = [
        ("sphere", vec![1.0, 2f64.sqrt()], vec![0.9]),
        ("sphere", vec![2.0, 2.0], vec![1.1, 0.4]),
        ("cylinder", vec![2f64.sqrt(), 3.0], vec![0.8, 0.5]),
        ("veronese", vec![2.0], vec![1.2, 2.5]),
        ("clifford_torus", vec![2.0], vec![0.7, 2.1]),
    ];
    for (name, params, u) in shrinkers {
        let chart = catalog_make(name, &params).unwrap();
        let analytic = build_samples(&chart, &default_resolution(&chart), DerivativeMode::Analytic).unwrap();
        assert!(shrinker_residual(&analytic).unwrap() < 1e-9, "{name}");
        // on these shrinkers x⊥ is x itself, except along the cylinder axis
        let mut normal = chart.point(0, &u);
        if name == "cylinder" {
            normal[2] = 0.0;
        }
        let residual = |h: f64| {
            let hv = mean_curvature_at(&chart, &u, h).unwrap();
            hv.iter().zip(&normal).map(|(a, b)| (a + 0.5 * b).powi(2)).sum::<f64>().sqrt()
        };
        let (coarse, fine) = (residual(4e-2), residual(2e-2));
        assert!(fine < 1e-9 || coarse / fine > 3.5, "{name}: {coarse} -> {fine}");
    }
}

#[test]
fn unknown_entries_are_rejected() {
    assert!(matches!(parse_catalog("torus:1"), Err(shrinkerlab::Error::UnknownCatalog(_))));
    assert!(parse_catalog("sphere:3,1").is_err());
}
