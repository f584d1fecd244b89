use serde::{Deserialize, Serialize};

use super::{Point, SupportFunction};
use crate::error::{Error, Result};

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const MAX_SECTIONS: usize = 200;

/// Inscribed and circumscribed radii with their centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Radii {
    pub r_in: f64,
    pub r_out: f64,
    pub c_in: Point,
    pub c_out: Point,
}

/// Minimize a convex function of one variable on `[lo, hi]`.
fn golden_min(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..MAX_SECTIONS {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Minimize the convex function `f` over the square `[-box, box]²` by
/// nested golden-section searches.
fn minimize_2d(half: f64, tol: f64, f: impl Fn(Point) -> f64) -> (Point, f64) {
    let inner = |x: f64| golden_min(-half, half, tol, |y| f(Point::new(x, y)));
    let (x, _) = golden_min(-half, half, tol, |x| inner(x).1);
    let (y, v) = inner(x);
    (Point::new(x, y), v)
}

/// Discrete Chebyshev centers of a sampled body.
///
/// `r_in = max_c min_j (h_j − ⟨c, θ_j⟩)` and
/// `R_out = min_c max_j (h_j − ⟨c, θ_j⟩)`. Both objectives are convex in `c`,
/// so a nested golden-section search over a box containing the body finds the
/// optimum to `1e-12` relative accuracy.
pub fn inradius_outradius(h: &SupportFunction) -> Result<Radii> {
    let grid = h.grid();
    let dirs: Vec<Point> = (0..grid.len()).map(|j| grid.direction(j)).collect();
    let vals = h.values();
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let half = 1.1 * scale.max(f64::MIN_POSITIVE);
    let tol = 1e-12 * half;

    let shifted = |c: Point| dirs.iter().zip(vals).map(move |(d, v)| v - c.dot(*d));
    let (c_out, r_out) = minimize_2d(half, tol, |c| shifted(c).fold(f64::NEG_INFINITY, f64::max));
    let (c_in, neg_r_in) = minimize_2d(half, tol, |c| -shifted(c).fold(f64::INFINITY, f64::min));
    let r_in = -neg_r_in;

    if !(r_in.is_finite() && r_out.is_finite()) || r_in > r_out + 1e-9 * scale {
        return Err(Error::OptimizationNonConvergence {
            iterate: c_in,
            width: r_out - r_in,
        });
    }
    if r_in <= 0.0 {
        return Err(Error::DegenerateBody(format!(
            "body has no interior (inradius {r_in:e})"
        )));
    }
    Ok(Radii {
        r_in,
        r_out,
        c_in,
        c_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_support, BodySpec, DirectionGrid};

    fn radii(spec: BodySpec, m: usize) -> Radii {
        let h = sample_support(&spec, DirectionGrid::new(m).unwrap()).unwrap();
        inradius_outradius(&h).unwrap()
    }

    #[test]
    fn disk_radii_coincide() {
        let r = radii(BodySpec::disk(2.0), 256);
        assert!((r.r_in - 2.0).abs() < 1e-10);
        assert!((r.r_out - 2.0).abs() < 1e-10);
        assert!(r.c_in.norm() < 1e-9 && r.c_out.norm() < 1e-9);
    }

    #[test]
    fn ellipse_radii_are_semi_axes() {
        let r = radii(BodySpec::ellipse(2.0, 1.0), 256);
        assert!((r.r_in - 1.0).abs() < 1e-10);
        assert!((r.r_out - 2.0).abs() < 1e-10);
    }

    #[test]
    fn translated_disk_centers_follow() {
        let r = radii(BodySpec::disk(1.0).translated(0.3, -0.2), 128);
        assert!((r.c_in.x - 0.3).abs() < 1e-9 && (r.c_in.y + 0.2).abs() < 1e-9);
        assert!((r.c_out.x - 0.3).abs() < 1e-9 && (r.c_out.y + 0.2).abs() < 1e-9);
        assert!((r.r_in - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rounded_square_inradius() {
        // Edge normals at π/4 + kπ/2 lie on the grid for M divisible by 8,
        // so the sampled inradius is the apothem plus the rounding radius.
        let r = radii(BodySpec::rounded_square(), 256);
        assert!((r.r_in - (0.5f64.sqrt() + 0.05)).abs() < 1e-10);
        assert!((r.r_out - 1.05).abs() < 1e-10);
    }
}
