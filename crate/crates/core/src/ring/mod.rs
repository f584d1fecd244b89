//! Dirichlet problem for the p-Laplacian in a convex ring, solved for the
//! support functions of the level curves.
//!
//! A quasi-concave potential `u` with `u = 0` on `∂Ω` and `u = 1` on `∂K` is
//! encoded by `h(θ, t)`, the support function of the superlevel set
//! `{u ≥ t}` in direction `θ`. On the grid `t_k = k/L` this is the matrix
//! `H[j, k]`, with `H[·, 0] = h_Ω` and `H[·, L] = h_K`.

mod newton;
mod stencil;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{steiner_point, DirectionGrid, Point, SupportFunction};

pub(crate) use newton::Closure;
use stencil::{inner_slope, outer_slope, Local};

pub const DEFAULT_LEVELS: usize = 64;
pub const DEFAULT_NEWTON_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_NEWTON: usize = 50;
pub const MIN_EXPONENT: f64 = 1.1;
pub const MIN_LEVELS: usize = 16;

/// Discretization and Newton controls for a ring solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PLaplaceParams {
    pub p: f64,
    pub grid: DirectionGrid,
    /// Number of t-intervals `L`; levels are `t_k = k/L`, `k = 0..=L`.
    pub levels: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Initial Newton step factor, halved on rejection.
    pub damping: f64,
}

impl Default for PLaplaceParams {
    fn default() -> Self {
        PLaplaceParams {
            p: 2.0,
            grid: DirectionGrid::default(),
            levels: DEFAULT_LEVELS,
            newton_tol: DEFAULT_NEWTON_TOL,
            max_newton: DEFAULT_MAX_NEWTON,
            damping: 1.0,
        }
    }
}

impl PLaplaceParams {
    pub fn new(p: f64, directions: usize, levels: usize) -> Result<Self> {
        let params = PLaplaceParams {
            p,
            grid: DirectionGrid::new(directions)?,
            levels,
            ..Default::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_exponent(self, p: f64) -> Self {
        PLaplaceParams { p, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= MIN_EXPONENT) || !self.p.is_finite() {
            return Err(invalid(format!(
                "exponent p = {} must be finite and at least {MIN_EXPONENT}",
                self.p
            )));
        }
        DirectionGrid::new(self.grid.len())?;
        if self.levels < MIN_LEVELS {
            return Err(invalid(format!(
                "level count {} is below {MIN_LEVELS}",
                self.levels
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(invalid("newton_tol must be positive"));
        }
        if self.max_newton == 0 {
            return Err(invalid("max_newton must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid("damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Matrix of level-set support values `H[j, k]`, stored level by level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingField {
    grid: DirectionGrid,
    levels: usize,
    values: Vec<f64>,
}

impl RingField {
    /// `values[k·M + j] = h(θ_j, t_k)` for `k = 0..=levels`.
    pub fn new(grid: DirectionGrid, levels: usize, values: Vec<f64>) -> Result<Self> {
        if levels < 2 {
            return Err(invalid("a ring field needs at least two t-intervals"));
        }
        if values.len() != grid.len() * (levels + 1) {
            return Err(invalid(format!(
                "expected {} values, got {}",
                grid.len() * (levels + 1),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("ring field contains non-finite values"));
        }
        Ok(RingField {
            grid,
            levels,
            values,
        })
    }

    /// Levelwise Minkowski interpolation `(1 − t) h_outer + t h_inner`.
    pub fn interpolate(outer: &SupportFunction, inner: &SupportFunction, levels: usize) -> Result<Self> {
        outer.check_same_grid(inner)?;
        let grid = outer.grid();
        let values = (0..=levels)
            .flat_map(|k| {
                let t = k as f64 / levels as f64;
                outer
                    .values()
                    .iter()
                    .zip(inner.values())
                    .map(move |(o, i)| (1.0 - t) * o + t * i)
            })
            .collect();
        RingField::new(grid, levels, values)
    }

    /// Levels `(1 − w(t)) h_outer + w(t) h_inner`, with `w` following the
    /// radial level radii of the annulus between the mean radii of the two
    /// bodies. Exact for concentric disks and a close start otherwise.
    pub fn profile(outer: &SupportFunction, inner: &SupportFunction, p: f64, levels: usize) -> Result<Self> {
        outer.check_same_grid(inner)?;
        let big_r = outer.mean_value();
        let r = inner.mean_value().min(0.999 * big_r);
        if !(r > 0.0) {
            return RingField::interpolate(outer, inner, levels);
        }
        let m = outer.len();
        let mut values = Vec::with_capacity(m * (levels + 1));
        for k in 0..=levels {
            let t = k as f64 / levels as f64;
            let w = (big_r - crate::radial::level_radius(r, big_r, p, t)) / (big_r - r);
            values.extend((0..m).map(|j| (1.0 - w) * outer.values()[j] + w * inner.values()[j]));
        }
        RingField::new(outer.grid(), levels, values)
    }

    pub fn grid(&self) -> DirectionGrid {
        self.grid
    }

    /// Number of t-intervals `L`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.levels as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 / self.levels as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[k * self.grid.len() + j]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        let m = self.grid.len();
        self.values[k * m + j] = v;
    }

    pub fn level_values(&self, k: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[k * m..(k + 1) * m]
    }

    pub(crate) fn level_values_mut(&mut self, k: usize) -> &mut [f64] {
        let m = self.grid.len();
        &mut self.values[k * m..(k + 1) * m]
    }

    /// Support function of the superlevel set at `t_k`.
    pub fn level(&self, k: usize) -> SupportFunction {
        SupportFunction::new(self.grid, self.level_values(k).to_vec())
            .expect("level slices are finite")
    }

    pub fn outer(&self) -> SupportFunction {
        self.level(0)
    }

    pub fn inner(&self) -> SupportFunction {
        self.level(self.levels)
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Largest `|H[j, k+1] − H[j, k]| / Δt`.
    pub fn max_abs_slope(&self) -> f64 {
        let m = self.grid.len();
        let mut s = 0.0f64;
        for k in 0..self.levels {
            for j in 0..m {
                s = s.max((self.values[(k + 1) * m + j] - self.values[k * m + j]).abs());
            }
        }
        s / self.dt()
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        let m = self.grid.len();
        (0..self.levels).all(|k| (0..m).all(|j| self.values[(k + 1) * m + j] < self.values[k * m + j]))
    }

    /// Every level slice passes the discrete convexity test.
    pub fn slices_convex(&self, tol: f64) -> bool {
        (0..=self.levels).all(|k| self.level(k).is_discretely_convex(tol))
    }

    /// Rotate every slice by `steps` grid directions.
    pub fn rotated_steps(&self, steps: usize) -> RingField {
        let mut out = self.clone();
        for k in 0..=self.levels {
            let rot = self.level(k).rotated_steps(steps);
            out.level_values_mut(k).copy_from_slice(rot.values());
        }
        out
    }

    /// Translate every superlevel set by `v`.
    pub fn translated(&self, v: Point) -> RingField {
        let mut out = self.clone();
        let shift: Vec<f64> = (0..self.grid.len()).map(|j| v.dot(self.grid.direction(j))).collect();
        for k in 0..=self.levels {
            for (h, s) in out.level_values_mut(k).iter_mut().zip(&shift) {
                *h += s;
            }
        }
        out
    }

    /// Discrete gradients `|Du| = −1/h_t` at the level midpoints
    /// `t_{k+½}`, indexed `[k·M + j]` for `k = 0..L`.
    pub fn midpoint_gradients(&self) -> Vec<f64> {
        let m = self.grid.len();
        let dt = self.dt();
        (0..self.levels)
            .flat_map(|k| (0..m).map(move |j| (j, k)))
            .map(|(j, k)| -dt / (self.get(j, k + 1) - self.get(j, k)))
            .collect()
    }

    /// `|Du|` on `∂Ω` (`Side::Outer`) or `∂K` (`Side::Inner`) from
    /// one-sided second-order differences.
    pub fn boundary_gradient(&self, side: Side) -> Vec<f64> {
        (0..self.grid.len())
            .map(|j| {
                let s = match side {
                    Side::Outer => outer_slope(self, j),
                    Side::Inner => inner_slope(self, j),
                };
                -1.0 / s
            })
            .collect()
    }

    /// Point of the level curve `t_k` with outer normal `θ_j`.
    pub fn boundary_point(&self, j: usize, k: usize) -> Point {
        let dq = self.grid.spacing();
        let h = self.get(j, k);
        let hq = (self.get(self.grid.next(j), k) - self.get(self.grid.prev(j), k)) / (2.0 * dq);
        let n = self.grid.direction(j);
        let tau = self.grid.tangent(j);
        Point::new(h * n.x + hq * tau.x, h * n.y + hq * tau.y)
    }

    /// CSV with columns `theta,t,h`, one row per grid node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,t,h")?;
        for k in 0..=self.levels {
            for j in 0..self.grid.len() {
                writeln!(w, "{:.16e},{:.16e},{:.16e}", self.grid.angle(j), self.t(k), self.get(j, k))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Outer,
    Inner,
}

/// Converged ring solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingSolution {
    pub params: PLaplaceParams,
    pub field: RingField,
    pub residual_norm: f64,
    pub newton_iterations: usize,
}

impl RingSolution {
    pub fn boundary_gradient(&self, side: Side) -> Vec<f64> {
        self.field.boundary_gradient(side)
    }

    pub fn boundary_point(&self, j: usize, k: usize) -> Point {
        self.field.boundary_point(j, k)
    }

    pub fn outer(&self) -> SupportFunction {
        self.field.outer()
    }

    pub fn inner(&self) -> SupportFunction {
        self.field.inner()
    }

    /// CSV with columns `theta,grad_outer,grad_inner`.
    pub fn write_gradient_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let go = self.boundary_gradient(Side::Outer);
        let gi = self.boundary_gradient(Side::Inner);
        writeln!(w, "theta,grad_outer,grad_inner")?;
        for j in 0..go.len() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", self.field.grid.angle(j), go[j], gi[j])?;
        }
        Ok(())
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "residual_norm": self.residual_norm,
            "newton_iterations": self.newton_iterations,
            "p": self.params.p,
            "M": self.params.grid.len(),
            "L": self.params.levels,
            "newton_tol": self.params.newton_tol,
        })
    }
}

fn check_grid(params: &PLaplaceParams, h: &SupportFunction) -> Result<()> {
    if h.grid() != params.grid {
        return Err(Error::GridMismatch {
            left: params.grid.len(),
            right: h.len(),
        });
    }
    Ok(())
}

/// Solve `Δ_p u = 0` in `Ω ∖ K̄` with `u = 0` on `∂Ω` and `u = 1` on `∂K`.
///
/// Both bodies are translated together so that the Steiner point of `Ω` is
/// at the origin; the returned field is translated back.
pub fn solve_ring(
    h_outer: &SupportFunction,
    h_inner: &SupportFunction,
    params: &PLaplaceParams,
) -> Result<RingSolution> {
    params.validate()?;
    check_grid(params, h_outer)?;
    check_grid(params, h_inner)?;
    if let Some(j) = (0..h_outer.len()).find(|&j| h_inner.values()[j] >= h_outer.values()[j]) {
        return Err(invalid(format!(
            "inner body is not strictly inside the outer one (direction {j})"
        )));
    }
    let s = steiner_point(h_outer);
    let back = Point::new(-s.x, -s.y);
    let field = RingField::profile(&h_outer.translated(back), &h_inner.translated(back), params.p, params.levels)?;
    let sol = solve_ring_from(field, params)?;
    Ok(RingSolution {
        field: sol.field.translated(s),
        ..sol
    })
}

/// Dirichlet solve warm-started from `initial`, whose first and last levels
/// are the boundary data. No recentring is applied.
pub fn solve_ring_from(initial: RingField, params: &PLaplaceParams) -> Result<RingSolution> {
    params.validate()?;
    if initial.grid() != params.grid || initial.levels() != params.levels {
        return Err(invalid("initial field does not match the parameter grid"));
    }
    let out = newton::solve(initial, Closure::Dirichlet, 0.0, params)?;
    finish(out.field, out.residual, out.iterations, params)
}

/// Newton solve with a free boundary level; returns the solution and the
/// final slope parameter `σ`.
pub(crate) fn solve_free(
    initial: RingField,
    closure: Closure,
    sigma0: f64,
    params: &PLaplaceParams,
) -> Result<(RingSolution, f64)> {
    let out = newton::solve(initial, closure, sigma0, params)?;
    let sigma = out.sigma;
    Ok((finish(out.field, out.residual, out.iterations, params)?, sigma))
}

fn finish(field: RingField, residual: f64, iterations: usize, params: &PLaplaceParams) -> Result<RingSolution> {
    let grid = field.grid();
    for (side, slope) in [(Side::Outer, outer_slope as fn(&RingField, usize) -> f64), (Side::Inner, inner_slope)] {
        if let Some(j) = (0..grid.len()).find(|&j| !(slope(&field, j) < 0.0)) {
            return Err(Error::GridTooCoarse(format!(
                "non-negative {side:?} boundary slope at direction {j}; refine L"
            )));
        }
    }
    Ok(RingSolution {
        params: *params,
        field,
        residual_norm: residual,
        newton_iterations: iterations,
    })
}

/// Free-function form of [`RingSolution::boundary_gradient`].
pub fn boundary_gradient(sol: &RingSolution, side: Side) -> Vec<f64> {
    sol.boundary_gradient(side)
}

/// Free-function form of [`RingSolution::boundary_point`].
pub fn boundary_point(sol: &RingSolution, j: usize, k: usize) -> Point {
    sol.boundary_point(j, k)
}

/// Sign of the p-Laplacian expression at every interior node of a ring field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignMap {
    pub grid: DirectionGrid,
    pub levels: usize,
    /// Residual `F` at `(j, k)`, `k = 1..L−1`, indexed `[(k−1)·M + j]`.
    pub values: Vec<f64>,
    /// `+1`, `0` or `−1` with the band `|F| ≤ sign_tol` mapped to `0`.
    pub signs: Vec<i8>,
    pub sign_tol: f64,
    /// Largest term magnitude of `F` over the nodes.
    pub scale: f64,
}

impl SignMap {
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// `Δ_p u ≥ 0` everywhere within the band.
    pub fn is_nonnegative(&self) -> bool {
        self.signs.iter().all(|&s| s >= 0)
    }

    pub fn is_zero(&self) -> bool {
        self.signs.iter().all(|&s| s == 0)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.signs.iter().all(|&s| s > 0)
    }

    pub fn is_strictly_negative(&self) -> bool {
        self.signs.iter().all(|&s| s < 0)
    }
}

/// Relative width of the sign band: `sign_tol = SIGN_TOL_REL · scale`.
pub const SIGN_TOL_REL: f64 = 1e-6;

/// Evaluate the sign of the p-Laplacian expression of an arbitrary ring
/// field with the default band `1e−6 ·` (largest term magnitude).
pub fn plaplacian_sign(field: &RingField, p: f64) -> Result<SignMap> {
    plaplacian_sign_with_tol(field, p, None)
}

/// As [`plaplacian_sign`], with an explicit absolute band when given.
pub fn plaplacian_sign_with_tol(field: &RingField, p: f64, sign_tol: Option<f64>) -> Result<SignMap> {
    let m = field.grid().len();
    let l = field.levels();
    let mut values = Vec::with_capacity(m * (l - 1));
    let mut scale = 0.0f64;
    for k in 1..l {
        for j in 0..m {
            let local = Local::at(field, j, k);
            if !(local.radius() > 0.0) {
                return Err(Error::ConvexityLoss {
                    radius: local.radius(),
                    direction: j,
                    level: k,
                });
            }
            scale = scale.max(local.term_scale(p));
            values.push(local.residual(p));
        }
    }
    let tol = sign_tol.unwrap_or(SIGN_TOL_REL * scale);
    let signs = values
        .iter()
        .map(|&v| if v > tol { 1 } else if v < -tol { -1 } else { 0 })
        .collect();
    Ok(SignMap {
        grid: field.grid(),
        levels: l,
        values,
        signs,
        sign_tol: tol,
        scale,
    })
}
