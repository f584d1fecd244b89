//! Radial configurations checked against an RK4 integration of the radial
//! p-Laplace equation `(p − 1) u'' + u'/r = 0`, written as the system
//! `u' = v`, `v' = −v / ((p − 1) r)`.

use bernoulli_lab::exterior::{solve_exterior_with, ExteriorOptions};
use bernoulli_lab::geometry::SupportFunction;
use bernoulli_lab::interior::{solve_interior, InteriorOutcome};
use bernoulli_lab::ring::{solve_ring, PLaplaceParams, Side};

const STEPS: usize = 4000;

/// `(u, v)` at `r1`, starting from `(u0, v0)` at `r0`.
fn rk4(p: f64, r0: f64, r1: f64, u0: f64, v0: f64) -> (f64, f64) {
    let f = |r: f64, v: f64| -v / ((p - 1.0) * r);
    let h = (r1 - r0) / STEPS as f64;
    let (mut u, mut v) = (u0, v0);
    for i in 0..STEPS {
        let r = r0 + i as f64 * h;
        let (k1u, k1v) = (v, f(r, v));
        let (k2u, k2v) = (v + 0.5 * h * k1v, f(r + 0.5 * h, v + 0.5 * h * k1v));
        let (k3u, k3v) = (v + 0.5 * h * k2v, f(r + 0.5 * h, v + 0.5 * h * k2v));
        let (k4u, k4v) = (v + h * k3v, f(r + h, v + h * k3v));
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    (u, v)
}

/// Capacitary potential of the annulus `r_in < r < r_out`: returns the
/// inner slope `s` with `u(r_in) = 1`, `u'(r_in) = −s`, `u(r_out) = 0`.
fn shoot(p: f64, r_in: f64, r_out: f64) -> f64 {
    // The system is linear in v, so one trial slope fixes the answer; the
    // secant step below still runs through the integrator twice.
    let miss = |s: f64| rk4(p, r_in, r_out, 1.0, -s).0;
    let (a, b) = (0.5, 2.0);
    let (fa, fb) = (miss(a), miss(b));
    b - fb * (b - a) / (fb - fa)
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let fhi = f(hi);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) * fhi > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Radius of the level `{u = t}`.
fn level_radius(p: f64, r_in: f64, r_out: f64, s: f64, t: f64) -> f64 {
    bisect(r_in, r_out, |r| rk4(p, r_in, r, 1.0, -s).0 - t)
}

fn max_dev(values: &[f64], target: f64) -> f64 {
    values.iter().map(|v| (v - target).abs()).fold(0.0, f64::max)
}

#[test]
fn ring_levels_match_the_shooting_solution() {
    let (r_in, r_out) = (0.4, 1.0);
    for p in [1.5, 2.0, 3.0] {
        let params = PLaplaceParams::new(p, 64, 64).unwrap();
        let sol = solve_ring(
            &SupportFunction::constant(params.grid, r_out),
            &SupportFunction::constant(params.grid, r_in),
            &params,
        )
        .unwrap();
        let s = shoot(p, r_in, r_out);
        let mut worst = 0.0f64;
        for k in (4..64).step_by(4) {
            let rho = level_radius(p, r_in, r_out, s, sol.field.t(k));
            worst = worst.max(max_dev(sol.field.level_values(k), rho));
        }
        assert!(worst < 2e-4, "p = {p}: level radius error {worst:e}");

        let g_in = sol.boundary_gradient(Side::Inner);
        let g_out = sol.boundary_gradient(Side::Outer);
        let v_out = rk4(p, r_in, r_out, 1.0, -s).1;
        assert!(max_dev(&g_in, s) / s < 5e-3, "p = {p}: inner gradient");
        assert!(max_dev(&g_out, -v_out) / -v_out < 5e-3, "p = {p}: outer gradient");
    }
}

#[test]
fn exterior_disk_radius_matches_shooting() {
    let p = 3.0;
    let tau = 0.8;
    // Outer radius R with |u'(R)| = τ for the potential on 1 < r < R.
    let grad_at = |big_r: f64| {
        let s = shoot(p, 1.0, big_r);
        -rk4(p, 1.0, big_r, 1.0, -s).1
    };
    let big_r = bisect(1.05, 10.0, |r| grad_at(r) - tau);

    let params = PLaplaceParams::new(p, 64, 48).unwrap();
    let sol = solve_exterior_with(
        &SupportFunction::constant(params.grid, 1.0),
        tau,
        &params,
        &ExteriorOptions::default(),
    )
    .unwrap();
    let dev = max_dev(sol.h_omega.values(), big_r);
    assert!(dev < 2e-3 * big_r, "R = {big_r}, deviation {dev:e}");
}

#[test]
fn interior_disk_keeps_the_larger_root() {
    let p = 2.0;
    let tau = 4.0;
    // |u'(ρ)| as a function of the inner radius on ρ < r < 1; it is convex
    // with a single minimum, and the maximal solution is the larger root.
    let grad_at = |rho: f64| shoot(p, rho, 1.0);
    let rho_min = bisect(0.05, 0.95, |r| grad_at(r + 1e-6) - grad_at(r));
    let rho = bisect(rho_min, 0.99, |r| grad_at(r) - tau);
    assert!((rho - 0.6996).abs() < 1e-3);

    let params = PLaplaceParams::new(p, 64, 48).unwrap();
    let out = solve_interior(&SupportFunction::constant(params.grid, 1.0), tau, &params, 1e-6).unwrap();
    let InteriorOutcome::Solved(sol) = out else {
        panic!("disk at τ = 4 must be solvable");
    };
    let dev = max_dev(sol.h_k.values(), rho);
    assert!(dev < 3e-3, "ρ = {rho}, deviation {dev:e}");
}
