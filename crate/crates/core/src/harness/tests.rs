use super::*;
use crate::geometry::DirectionGrid;
use crate::ring::{solve_ring, RingField};

fn small() -> Harness {
    Harness::new(PLaplaceParams::new(2.0, 32, 24).unwrap())
}

#[test]
fn symmetry_periods() {
    let g = DirectionGrid::new(144).unwrap();
    let ell = sample_support(&BodySpec::ellipse(2.0, 1.0), g).unwrap();
    assert!((symmetry_period(&ell) - PI).abs() < 1e-15);
    let sq = sample_support(&BodySpec::rounded_square(), g).unwrap();
    assert!((symmetry_period(&sq) - PI / 2.0).abs() < 1e-15);
    let tri = sample_support(&BodySpec::regular_ngon(3, 1.0).translated(0.2, -0.1), g).unwrap();
    assert!((symmetry_period(&tri) - TAU / 3.0).abs() < 1e-15);
}

#[test]
fn two_rotations_of_a_square_have_eightfold_symmetry() {
    let g = DirectionGrid::new(256).unwrap();
    let sq = sample_support(&BodySpec::rounded_square(), g).unwrap();
    let m2 = sample_support(&hadwiger_mean(&BodySpec::rounded_square(), 2, PI / 2.0), g).unwrap();
    assert!((mean_width(&m2) - mean_width(&sq)).abs() < 1e-12);
    let r = m2.rotated_steps(256 / 8);
    assert!(hausdorff_distance(&r, &m2).unwrap() < 1e-12);
    assert!(hausdorff_distance(&sq.rotated_steps(256 / 8), &sq).unwrap() > 1e-2);
}

#[test]
fn homothety_detection() {
    let g = DirectionGrid::new(64).unwrap();
    let d1 = SupportFunction::constant(g, 1.0);
    let d2 = sample_support(&BodySpec::disk(2.0).translated(1.0, 0.5), g).unwrap();
    let e = sample_support(&BodySpec::ellipse(2.0, 1.0), g).unwrap();
    let e3 = sample_support(&BodySpec::ellipse(2.0, 1.0).scaled(3.0), g).unwrap();
    assert!(homothetic(&d1, &d2, 1e-9).unwrap());
    assert!(homothetic(&e, &e3, 1e-9).unwrap());
    assert!(!homothetic(&d1, &e, 1e-9).unwrap());
}

#[test]
fn homothetic_disks_give_equality_in_bm() {
    let h = small();
    let r = bm_check(&h, &BodySpec::disk(1.0), &BodySpec::disk(2.0), 0.5, 2.0).unwrap();
    assert!(r.pass, "{r:?}");
    let m = r.quantity("margin").unwrap();
    assert!(m.abs() <= r.tolerances["margin_tol"].as_f64().unwrap(), "{m}");
    assert_eq!(r.quantities["equality_matches_homothety"], serde_json::json!(true));
    let e = std::f64::consts::E;
    assert!((r.quantity("harmonic_mean").unwrap() - 2.0 * e / 3.0).abs() < 2e-3 * e);
    // The cache holds Λ(disk(1)) after the first call.
    let again = h.lambda(&BodySpec::disk(1.0), 2.0).unwrap();
    assert_eq!(again.lambda, r.quantity("lambda_0").unwrap());
}

#[test]
fn monotonicity_of_radial_ring() {
    let pr = PLaplaceParams::new(2.0, 32, 32).unwrap();
    let sol = solve_ring(
        &SupportFunction::constant(pr.grid, 2.0),
        &SupportFunction::constant(pr.grid, 1.0),
        &pr,
    )
    .unwrap();
    let r = gradient_monotonicity_check(&sol, None).unwrap();
    assert!(r.pass && r.quantity("min_forward_difference").unwrap() > 0.0, "{r:?}");

    // Levels 1 − t²/2 have gradient 1/t, decreasing inward.
    let m = 16;
    let l = 16;
    let g = DirectionGrid::new(m).unwrap();
    let mut values = Vec::new();
    for k in 0..=l {
        let t = k as f64 / l as f64;
        values.extend(std::iter::repeat(2.0 - 0.5 * t * t).take(m));
    }
    let fake = RingSolution {
        params: PLaplaceParams::new(2.0, m, l).unwrap(),
        field: RingField::new(g, l, values).unwrap(),
        residual_norm: 0.0,
        newton_iterations: 0,
    };
    assert!(!gradient_monotonicity_check(&fake, None).unwrap().pass);
}

#[test]
fn exploratory_probe_always_passes() {
    let h = small();
    let r = flucher_rumpf_probe(&h, &BodySpec::disk(1.0), 2.0).unwrap();
    assert!(r.pass && r.margins.is_empty());
    assert!((r.quantity("ratio").unwrap() - 1.0).abs() < 5e-3);
}

#[test]
fn suite_names_and_config() {
    for s in Suite::EACH {
        assert_eq!(s.name().parse::<Suite>().unwrap(), s);
    }
    assert!("nope".parse::<Suite>().is_err());
    let c = SuiteConfig::from_json(r#"{"M": 64, "L": 32, "lambdas": [0.5], "pairs": [{"omega0": {"disk": {"R": 1}}, "omega1": {"ellipse": {"a": 2, "b": 1}}}]}"#).unwrap();
    assert_eq!(c.params().unwrap().grid.len(), 64);
    assert_eq!(c.pairs().len(), 1);
    assert_eq!(c.rings().len(), 3);
    assert!(SuiteConfig::from_json(r#"{"bogus": 1}"#).is_err());
}

#[test]
fn errors_become_failed_reports() {
    let cfg = SuiteConfig {
        m: Some(32),
        l: Some(24),
        interior_cases: Some(vec![suite::InclusionCase {
            body0: BodySpec::disk(1.0),
            body1: BodySpec::disk(1.0),
            tau0: 1.0,
            tau1: 1.0,
            lambda: 0.5,
        }]),
        ..Default::default()
    };
    let reports = run_suite(Suite::InteriorInclusion, &cfg, 1).unwrap();
    assert_eq!(reports.len(), 1);
    assert!(!reports[0].pass);
    assert_eq!(reports[0].quantities["error_kind"], serde_json::json!("InfeasibleTau"));
}
