use std::f64::consts::PI;
use std::sync::OnceLock;

use bernoulli_lab::geometry::{
    hausdorff_distance, inradius_outradius, mean_width, minkowski_combine, project_to_convex, sample_support,
    steiner_point, BodySpec, DirectionGrid, TOL_CONVEX,
};
use bernoulli_lab::minkowski::{combine_solutions, gradient_harmonic_mean_error, tau_harmonic_mean};
use bernoulli_lab::ring::{solve_ring, PLaplaceParams, RingSolution};
use proptest::prelude::*;

const M: usize = 128;

fn grid() -> DirectionGrid {
    DirectionGrid::new(M).unwrap()
}

fn body() -> impl Strategy<Value = BodySpec> {
    let leaf = prop_oneof![
        (0.2f64..3.0).prop_map(BodySpec::disk),
        (0.3f64..3.0, 0.3f64..3.0).prop_map(|(a, b)| BodySpec::ellipse(a, b)),
        (3usize..9, 0.5f64..2.0).prop_map(|(n, r)| BodySpec::regular_ngon(n, r)),
    ];
    (leaf, 0.0f64..(2.0 * PI), -1.0f64..1.0, -1.0f64..1.0)
        .prop_map(|(b, phi, x, y)| b.rotated(phi).translated(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampling_is_minkowski_linear(b0 in body(), b1 in body(), lam in 0.0f64..1.0) {
        let combo = BodySpec::combo(vec![(1.0 - lam, b0.clone()), (lam, b1.clone())]);
        let direct = sample_support(&combo, grid()).unwrap();
        let h0 = sample_support(&b0, grid()).unwrap();
        let h1 = sample_support(&b1, grid()).unwrap();
        let summed = minkowski_combine(&[1.0 - lam, lam], &[&h0, &h1]).unwrap();
        prop_assert!(hausdorff_distance(&direct, &summed).unwrap() < 1e-12);
        let w = (1.0 - lam) * mean_width(&h0) + lam * mean_width(&h1);
        prop_assert!((mean_width(&direct) - w).abs() < 1e-12 * (1.0 + w));
    }

    #[test]
    fn steiner_point_follows_translations(b in body(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let h = sample_support(&b, grid()).unwrap();
        let moved = sample_support(&b.clone().translated(x, y), grid()).unwrap();
        let (s0, s1) = (steiner_point(&h), steiner_point(&moved));
        prop_assert!((s1.x - s0.x - x).abs() < 1e-12 && (s1.y - s0.y - y).abs() < 1e-12);
        prop_assert!((mean_width(&moved) - mean_width(&h)).abs() < 1e-12);
    }

    #[test]
    fn sampled_bodies_are_convex_and_projection_is_idempotent(b in body()) {
        let h = sample_support(&b, grid()).unwrap();
        prop_assert!(h.is_discretely_convex(TOL_CONVEX));
        let once = project_to_convex(grid(), h.values()).unwrap();
        let twice = project_to_convex(grid(), once.values()).unwrap();
        let scale = h.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!(hausdorff_distance(&once, &twice).unwrap() <= 1e-9 * scale.max(1.0));
    }

    #[test]
    fn hausdorff_distance_is_a_metric_on_samples(b0 in body(), b1 in body(), b2 in body()) {
        let (h0, h1, h2) = (
            sample_support(&b0, grid()).unwrap(),
            sample_support(&b1, grid()).unwrap(),
            sample_support(&b2, grid()).unwrap(),
        );
        let d = |a, b| hausdorff_distance(a, b).unwrap();
        prop_assert_eq!(d(&h0, &h0), 0.0);
        prop_assert_eq!(d(&h0, &h1), d(&h1, &h0));
        prop_assert!(d(&h0, &h2) <= d(&h0, &h1) + d(&h1, &h2) + 1e-12);
    }

    #[test]
    fn grid_rotation_matches_rotated_spec(b in body(), steps in 0usize..M) {
        let h = sample_support(&b, grid()).unwrap();
        let phi = 2.0 * PI * steps as f64 / M as f64;
        let rotated = sample_support(&b.clone().rotated(phi), grid()).unwrap();
        prop_assert!(hausdorff_distance(&h.rotated_steps(steps), &rotated).unwrap() < 1e-9);
    }

    #[test]
    fn ellipse_radii(a in 0.5f64..3.0, b in 0.5f64..3.0) {
        let h = sample_support(&BodySpec::ellipse(a, b), grid()).unwrap();
        let r = inradius_outradius(&h).unwrap();
        prop_assert!(r.r_in <= r.r_out);
        prop_assert!((r.r_in - a.min(b)).abs() < 1e-3 * a.max(b));
        prop_assert!((r.r_out - a.max(b)).abs() < 1e-3 * a.max(b));
    }

    #[test]
    fn harmonic_mean_lies_between_its_arguments(t0 in 0.01f64..100.0, t1 in 0.01f64..100.0, lam in 0.0f64..=1.0) {
        let hm = tau_harmonic_mean(t0, t1, lam).unwrap();
        prop_assert!(hm >= t0.min(t1) * (1.0 - 1e-14) && hm <= t0.max(t1) * (1.0 + 1e-14));
        let swapped = tau_harmonic_mean(t1, t0, 1.0 - lam).unwrap();
        prop_assert!((hm - swapped).abs() <= 1e-13 * hm);
    }
}

fn rings() -> &'static (RingSolution, RingSolution) {
    static RINGS: OnceLock<(RingSolution, RingSolution)> = OnceLock::new();
    RINGS.get_or_init(|| {
        let params = PLaplaceParams::new(2.0, 64, 32).unwrap();
        let solve = |outer: BodySpec, inner: BodySpec| {
            solve_ring(
                &sample_support(&outer, params.grid).unwrap(),
                &sample_support(&inner, params.grid).unwrap(),
                &params,
            )
            .unwrap()
        };
        (
            solve(BodySpec::disk(1.0), BodySpec::disk(0.4)),
            solve(BodySpec::ellipse(1.5, 1.0), BodySpec::ellipse(0.6, 0.3).rotated(0.7)),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ring_combinations_keep_the_ring_invariants(lam in 0.0f64..=1.0) {
        let (a, b) = rings();
        let combo = combine_solutions(&[1.0 - lam, lam], &[a, b]).unwrap();
        prop_assert!(combo.is_strictly_decreasing());
        prop_assert!(combo.slices_convex(TOL_CONVEX));
        prop_assert!(gradient_harmonic_mean_error(&[1.0 - lam, lam], &[a, b]).unwrap() < 1e-10);
    }
}
