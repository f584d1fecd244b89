use super::{DirectionGrid, Point, SupportFunction};
use crate::error::{Error, Result};

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
pub(crate) fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - a.y * b.x
        })
        .sum::<f64>()
}

/// Support function of the convex hull of a point set, sampled on `grid`.
pub(crate) fn support_of_points(points: &[Point], grid: DirectionGrid) -> Vec<f64> {
    (0..grid.len())
        .map(|j| {
            let n = grid.direction(j);
            points.iter().map(|p| p.dot(n)).fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Replace raw samples by the support function of the convex hull of their
/// reconstructed boundary points `x_j = h_j θ_j + h'_j θ_j^⊥`.
///
/// Sampled support functions of convex bodies with positive curvature are
/// returned unchanged; oscillating or dented samples are replaced by their
/// convex envelope.
pub fn project_to_convex(grid: DirectionGrid, raw: &[f64]) -> Result<SupportFunction> {
    let h = SupportFunction::new(grid, raw.to_vec())?;
    let points: Vec<Point> = (0..grid.len()).map(|j| h.boundary_point(j)).collect();
    let hull = convex_hull(&points);
    let scale = raw.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    if hull.len() < 3 || polygon_area(&hull) <= 1e-12 * scale * scale {
        return Err(Error::DegenerateBody(
            "reconstructed boundary collapses to a segment or a point".into(),
        ));
    }
    SupportFunction::new(grid, support_of_points(&hull, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{hausdorff_distance, sample_support, BodySpec, TOL_CONVEX};

    fn grid() -> DirectionGrid {
        DirectionGrid::new(128).unwrap()
    }

    #[test]
    fn disk_is_a_fixed_point() {
        let h = vec![1.0; 128];
        let p = project_to_convex(grid(), &h).unwrap();
        assert!(p.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn smooth_convex_bodies_are_unchanged() {
        for spec in [BodySpec::ellipse(2.0, 1.0), BodySpec::ellipse(1.0, 3.0).rotated(0.4)] {
            let h = sample_support(&spec, grid()).unwrap();
            let p = project_to_convex(grid(), h.values()).unwrap();
            assert!(hausdorff_distance(&h, &p).unwrap() < 1e-12);
        }
    }

    #[test]
    fn unrounded_square_is_resampled_to_itself() {
        // Support of the square with vertices (±1, 0), (0, ±1).
        let g = grid();
        let h: Vec<f64> = g
            .angles()
            .map(|t| t.cos().abs().max(t.sin().abs()))
            .collect();
        let p = project_to_convex(g, &h).unwrap();
        let max_dev = h
            .iter()
            .zip(p.values())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        // Centered differences reconstruct points on the flat edges only to
        // second order, so the resampled hull is exact up to O(Δθ²).
        assert!(max_dev < 0.25 * g.spacing().powi(2), "deviation {max_dev}");
        assert!(p.is_discretely_convex(TOL_CONVEX));
    }

    #[test]
    fn oscillation_is_replaced_by_envelope() {
        let g = grid();
        let raw: Vec<f64> = (0..128)
            .map(|j| 1.0 + 0.3 * if j % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        // Hull oracle: centered differences vanish, so the points are
        // 1.3·θ_j (even j) and 0.7·θ_j (odd j); the hull is the regular
        // 64-gon through the even points.
        let even: Vec<Point> = (0..128)
            .step_by(2)
            .map(|j| {
                let n = g.direction(j);
                Point::new(1.3 * n.x, 1.3 * n.y)
            })
            .collect();
        let oracle = support_of_points(&even, g);
        let p = project_to_convex(g, &raw).unwrap();
        for (a, b) in p.values().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(p.is_discretely_convex(TOL_CONVEX));
        assert!(p.max_value() - p.min_value() < 1.3 * (1.0 - (g.spacing()).cos()) + 1e-12);
    }

    #[test]
    fn degenerate_point_is_rejected() {
        let g = grid();
        let h = vec![0.0; 128];
        assert!(matches!(
            project_to_convex(g, &h),
            Err(Error::DegenerateBody(_))
        ));
    }
}
