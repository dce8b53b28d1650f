use shrinkerlab::acceptance::{run_criterion, CRITERIA};

fn check(id: usize) {
    let report = run_criterion(id);
    println!("{report}");
    assert!(report.passed, "{report}");
}

#[test]
fn criterion_01_sphere_entropies() {
    check(1);
}

#[test]
fn criterion_02_veronese() {
    check(2);
}

#[test]
fn criterion_03_loxodromes() {
    check(3);
}

#[test]
fn criterion_04_iterate_identity() {
    check(4);
}

#[test]
fn criterion_05_constants() {
    check(5);
}

#[test]
fn criterion_06_weight_chain() {
    check(6);
}

#[test]
fn criterion_07_hessian() {
    check(7);
}

#[test]
fn criterion_08_harnack_growth() {
    check(8);
}

#[test]
fn criterion_09_long_time() {
    check(9);
}

#[test]
fn criterion_10_flow_monotonicity() {
    check(10);
}

#[test]
fn criterion_11_inequality_chain() {
    check(11);
}

#[test]
fn criterion_12_lattice() {
    check(12);
}

#[test]
fn criterion_13_area_ratios() {
    check(13);
}

#[test]
fn ids_cover_every_criterion() {
    assert_eq!(CRITERIA, 13);
    assert!(!run_criterion(0).passed);
}
