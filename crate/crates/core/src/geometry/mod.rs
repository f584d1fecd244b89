//! Planar convex bodies represented by their support function sampled on a
//! uniform grid of unit directions.
//!
//! A body `K` is stored as `h_j = h_K(θ_j)` with `θ_j = 2πj/M`. Minkowski
//! combinations act linearly on the samples, and everything the solvers need
//! (radius of curvature, boundary points, mean width, Steiner point) is read
//! off the samples with periodic finite differences.

mod body;
mod chebyshev;
mod hull;

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use body::{sample_support, BodySpec};
pub use chebyshev::{inradius_outradius, Radii};
pub use hull::project_to_convex;

/// Default number of sampled directions.
pub const DEFAULT_DIRECTIONS: usize = 256;

/// Relative tolerance of the discrete convexity test.
pub const TOL_CONVEX: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Uniform grid `θ_j = 2πj/M` on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DirectionGrid {
    m: usize,
}

impl DirectionGrid {
    /// `m` must be even (antipodal directions on-grid) and at least 16.
    pub fn new(m: usize) -> Result<Self> {
        if m < 16 {
            return Err(invalid(format!("direction count {m} is below 16")));
        }
        if m % 2 != 0 {
            return Err(invalid(format!("direction count {m} must be even")));
        }
        Ok(DirectionGrid { m })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.m as f64
    }

    pub fn angle(&self, j: usize) -> f64 {
        self.spacing() * j as f64
    }

    /// Unit normal `θ_j`.
    pub fn direction(&self, j: usize) -> Point {
        let a = self.angle(j);
        Point::new(a.cos(), a.sin())
    }

    /// Unit tangent `θ_j^⊥`, the normal rotated by +π/2.
    pub fn tangent(&self, j: usize) -> Point {
        let a = self.angle(j);
        Point::new(-a.sin(), a.cos())
    }

    pub fn angles(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(move |j| self.angle(j))
    }

    pub(crate) fn next(&self, j: usize) -> usize {
        (j + 1) % self.m
    }

    pub(crate) fn prev(&self, j: usize) -> usize {
        (j + self.m - 1) % self.m
    }
}

impl Default for DirectionGrid {
    fn default() -> Self {
        DirectionGrid {
            m: DEFAULT_DIRECTIONS,
        }
    }
}

/// Sampled support function of a planar convex body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportFunction {
    grid: DirectionGrid,
    values: Vec<f64>,
}

impl SupportFunction {
    pub fn new(grid: DirectionGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "{} support values for a grid of {} directions",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite support value at direction {j}")));
        }
        Ok(SupportFunction { grid, values })
    }

    pub fn constant(grid: DirectionGrid, value: f64) -> Self {
        SupportFunction {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn grid(&self) -> DirectionGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_value(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Centered periodic difference `h'(θ_j)`.
    pub fn derivative(&self, j: usize) -> f64 {
        let g = self.grid;
        (self.values[g.next(j)] - self.values[g.prev(j)]) / (2.0 * g.spacing())
    }

    /// Discrete radius of curvature `h + h''` at `θ_j`.
    pub fn curvature_radius(&self, j: usize) -> f64 {
        let g = self.grid;
        let d = g.spacing();
        let v = &self.values;
        v[j] + (v[g.next(j)] - 2.0 * v[j] + v[g.prev(j)]) / (d * d)
    }

    /// Boundary point with outer normal `θ_j`: `h θ + h' θ^⊥`.
    pub fn boundary_point(&self, j: usize) -> Point {
        let n = self.grid.direction(j);
        let t = self.grid.tangent(j);
        let h = self.values[j];
        let dh = self.derivative(j);
        Point::new(h * n.x + dh * t.x, h * n.y + dh * t.y)
    }

    /// Smallest discrete radius of curvature and the direction where it occurs.
    pub fn min_curvature_radius(&self) -> (f64, usize) {
        (0..self.len())
            .map(|j| (self.curvature_radius(j), j))
            .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
    }

    /// `h + h'' ≥ −tol` at every direction, with `tol` relative to the body size.
    pub fn is_discretely_convex(&self, tol: f64) -> bool {
        let scale = self.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        self.min_curvature_radius().0 >= -tol * scale
    }

    pub fn scaled(&self, alpha: f64) -> SupportFunction {
        SupportFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Support function of `K + v`.
    pub fn translated(&self, v: Point) -> SupportFunction {
        let values = (0..self.len())
            .map(|j| self.values[j] + v.dot(self.grid.direction(j)))
            .collect();
        SupportFunction {
            grid: self.grid,
            values,
        }
    }

    /// Rotation by `steps` grid spacings (exact on the grid).
    pub fn rotated_steps(&self, steps: usize) -> SupportFunction {
        let m = self.len();
        let values = (0..m)
            .map(|j| self.values[(j + m - steps % m) % m])
            .collect();
        SupportFunction {
            grid: self.grid,
            values,
        }
    }

    /// Translate so the Steiner point sits at the origin. Returns the body and
    /// the Steiner point that was removed.
    pub fn normalized(&self) -> (SupportFunction, Point) {
        let s = steiner_point(self);
        (self.translated(Point::new(-s.x, -s.y)), s)
    }

    /// Enclosed area `½∮ h (h + h'') dθ`, summed with the discrete radius of
    /// curvature (equivalently `½∮(h² − h'²) dθ` with one-sided differences).
    pub fn area(&self) -> f64 {
        let d = self.grid.spacing();
        0.5 * d
            * (0..self.len())
                .map(|j| self.values[j] * self.curvature_radius(j))
                .sum::<f64>()
    }

    /// Minimum over directions of the width `h(θ) + h(θ + π)`.
    pub fn min_width(&self) -> f64 {
        let m = self.len();
        (0..m / 2)
            .map(|j| self.values[j] + self.values[j + m / 2])
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check_same_grid(&self, other: &SupportFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// CSV with header `theta,h`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,h")?;
        for (j, h) in self.values.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", self.grid.angle(j), h)?;
        }
        Ok(())
    }
}

/// Pointwise weighted sum of support functions on one grid.
pub fn minkowski_combine(weights: &[f64], bodies: &[&SupportFunction]) -> Result<SupportFunction> {
    if weights.len() != bodies.len() || bodies.is_empty() {
        return Err(invalid("need one weight per body and at least one body"));
    }
    check_weights(weights)?;
    let first = bodies[0];
    for b in &bodies[1..] {
        first.check_same_grid(b)?;
    }
    let mut values = vec![0.0; first.len()];
    for (w, b) in weights.iter().zip(bodies) {
        for (acc, v) in values.iter_mut().zip(b.values()) {
            *acc += w * v;
        }
    }
    Ok(SupportFunction {
        grid: first.grid,
        values,
    })
}

pub(crate) fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(invalid("Minkowski weights must be nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("Minkowski weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Mean width `b = (1/π)∮h dθ` (rectangle rule, exact for trigonometric
/// polynomials of degree below `M`).
pub fn mean_width(h: &SupportFunction) -> f64 {
    h.values.iter().sum::<f64>() * h.grid.spacing() / PI
}

/// Steiner point `s = (1/π)∮θ h(θ) dθ`.
pub fn steiner_point(h: &SupportFunction) -> Point {
    let d = h.grid.spacing();
    let (mut x, mut y) = (0.0, 0.0);
    for (j, v) in h.values.iter().enumerate() {
        let n = h.grid.direction(j);
        x += n.x * v;
        y += n.y * v;
    }
    Point::new(x * d / PI, y * d / PI)
}

/// `sup_j |h1_j − h2_j|`, the Hausdorff distance of the two bodies up to grid
/// resolution.
pub fn hausdorff_distance(h1: &SupportFunction, h2: &SupportFunction) -> Result<f64> {
    h1.check_same_grid(h2)?;
    Ok(h1
        .values
        .iter()
        .zip(&h2.values)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs())))
}
