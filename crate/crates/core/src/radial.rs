//! Closed forms for concentric disks in the plane.
//!
//! On the annulus `r < |x| < R` the p-harmonic function with `u = 1` on
//! `|x| = r` and `u = 0` on `|x| = R` is `u = (ρ^α − R^α)/(r^α − R^α)` with
//! `α = (p − 2)/(p − 1)`, and `u = ln(R/ρ)/ln(R/r)` when `p = 2`.

fn alpha(p: f64) -> f64 {
    (p - 2.0) / (p - 1.0)
}

fn is_log_case(p: f64) -> bool {
    alpha(p).abs() < 1e-12
}

/// Radius of the level set `{u = t}` of the annulus potential.
pub fn level_radius(r: f64, big_r: f64, p: f64, t: f64) -> f64 {
    if is_log_case(p) {
        return big_r * (r / big_r).powf(t);
    }
    let a = alpha(p);
    ((1.0 - t) * big_r.powf(a) + t * r.powf(a)).powf(1.0 / a)
}

/// `|Du|` at radius `rho` of the annulus potential.
pub fn gradient_at(r: f64, big_r: f64, p: f64, rho: f64) -> f64 {
    if is_log_case(p) {
        return 1.0 / (rho * (big_r / r).ln());
    }
    let a = alpha(p);
    (a * rho.powf(a - 1.0) / (r.powf(a) - big_r.powf(a))).abs()
}

/// Outer radius `R > r` at which the annulus potential has `|Du| = tau` on
/// `|x| = R` (the exterior Bernoulli problem for a disk).
pub fn exterior_radius(r: f64, p: f64, tau: f64) -> f64 {
    // The outer gradient decreases strictly from +∞ to 0 as R runs over (r, ∞).
    let g = |big_r: f64| gradient_at(r, big_r, p, big_r);
    let mut lo = r * (1.0 + 1e-12);
    let mut hi = 2.0 * r;
    while g(hi) > tau {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if g(mid) > tau {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    (lo * hi).sqrt()
}

/// `|Du|` on the inner circle `|x| = ρ` for the disk of radius `R`.
pub fn interior_gradient(big_r: f64, p: f64, rho: f64) -> f64 {
    gradient_at(rho, big_r, p, rho)
}
