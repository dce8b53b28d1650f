use proptest::prelude::*;
use shrinkerlab::heatlab::*;
use shrinkerlab::weights::weight_eval;

fn line(nodes: usize, h: f64) -> GridSpec {
    GridSpec::with_spacing(1, nodes, h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn heat_flow_conserves_mass(
        t0 in 0.2f64..2.0,
        shift in -3.0f64..3.0,
        second in 0.0f64..0.8,
        t in 0.05f64..4.0,
    ) {
        let spec = line(2048, 0.05);
        let u0 = GridDensity::gaussian_mixture(spec, &[(1.0 - second, t0, vec![shift]), (second, 0.5 * t0, vec![-shift])]).unwrap();
        let u = heat_at(&u0, t).unwrap();
        prop_assert!((u.mass() - 1.0).abs() <= 1e-6, "{}", u.mass());
    }

    #[test]
    fn members_of_the_class_obey_pointwise_bounds(m in 1usize..6, rho in 1.0f64..3.0) {
        let u = density_from_weight(line(4096, 0.1), m, rho, DEFAULT_TAIL_TOL).unwrap();
        let tau = estimate_virtual_time(&u).unwrap().tau;
        prop_assert!(tau >= 0.98 * rho);
        prop_assert!(check_peak_bound(&u, rho) <= 1e-6);
        prop_assert!(check_gradient_bound(&u, rho) <= 1.0 + 1e-3);
    }
}

#[test]
fn two_dimensional_heat_conserves_mass() {
    let spec = GridSpec::new(2, 24.0, 321).unwrap();
    let u0 = GridDensity::gaussian_mixture(spec, &[(0.6, 0.4, vec![1.0, 0.0]), (0.4, 0.8, vec![-1.0, 0.5])]).unwrap();
    for t in [0.3, 1.0] {
        assert!((heat_at(&u0, t).unwrap().mass() - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn grid_hessian_converges_at_second_order() {
    // min of (log W²_1)'' is −1 at the origin
    let errs: Vec<f64> = [801, 1601, 3201]
        .iter()
        .map(|&nodes| {
            let spec = GridSpec::new(1, 20.0, nodes).unwrap();
            let u = GridDensity::from_fn(spec, |x| weight_eval(2.0, 1.0, &[0.0], x)).unwrap();
            (estimate_virtual_time(&u).unwrap().min_eigenvalue + 1.0).abs()
        })
        .collect();
    assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
}

#[test]
fn harnack_holds_for_mixtures() {
    let spec = line(4096, 0.02);
    let u0 = GridDensity::gaussian_mixture(spec, &[(0.5, 0.1, vec![-2.0]), (0.5, 0.1, vec![2.0])]).unwrap();
    for t in [0.25, 1.0, 4.0] {
        assert!(check_harnack(&u0, t).unwrap() >= -1e-3, "t = {t}");
    }
}

#[test]
fn mean_value_inequality_for_weights() {
    let u = density_from_weight(line(4096, 0.1), 1, 1.0, DEFAULT_TAIL_TOL).unwrap();
    let samples: Vec<Vec<f64>> = (-4..=4).map(|k| vec![k as f64 * 0.75]).collect();
    let report = check_meanvalue_bound(&u, 1.0, &samples).unwrap();
    assert!(report.margin >= 0.0, "{report:?}");
    assert!(report.peak_margin >= 0.0, "{report:?}");
}

#[test]
fn moment_matched_gaussian_is_exact_for_gaussians() {
    let spec = line(4096, 0.05);
    let u = GridDensity::gaussian(spec, 1.5, &[0.7]).unwrap();
    let (mean, s) = moment_match(&u);
    assert!((mean[0] - 0.7).abs() < 1e-9);
    assert!((s - 1.5).abs() < 1e-9);
    let d = gaussian_distance(&u, 1.5, 0.0, &mean).unwrap();
    assert!(d.l1 < 1e-8 && d.scaled_sup < 1e-8, "{d:?}");
}
