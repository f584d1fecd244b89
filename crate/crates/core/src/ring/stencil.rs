//! Finite-difference evaluation of the support-coordinate p-Laplacian.
//!
//! At an interior node `(j, k)` the cleared-denominator residual is
//!
//! ```text
//! F = (p − 1) h_tt (h + h_θθ) − h_t² − (p − 1) h_tθ²
//! ```
//!
//! with centered differences in both variables and periodic wrap in θ.

use super::RingField;

/// Centered differences of `h` at one interior node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Local {
    pub h: f64,
    pub ht: f64,
    pub htt: f64,
    pub hqq: f64,
    pub htq: f64,
}

impl Local {
    pub fn at(field: &RingField, j: usize, k: usize) -> Local {
        let g = field.grid();
        let (jp, jm) = (g.next(j), g.prev(j));
        let dt = field.dt();
        let dq = g.spacing();
        let c = field.get(j, k);
        let up = field.get(j, k + 1);
        let dn = field.get(j, k - 1);
        Local {
            h: c,
            ht: (up - dn) / (2.0 * dt),
            htt: (up - 2.0 * c + dn) / (dt * dt),
            hqq: (field.get(jp, k) - 2.0 * c + field.get(jm, k)) / (dq * dq),
            htq: (field.get(jp, k + 1) - field.get(jm, k + 1) - field.get(jp, k - 1)
                + field.get(jm, k - 1))
                / (4.0 * dt * dq),
        }
    }

    pub fn radius(&self) -> f64 {
        self.h + self.hqq
    }

    pub fn residual(&self, p: f64) -> f64 {
        (p - 1.0) * self.htt * self.radius() - self.ht * self.ht - (p - 1.0) * self.htq * self.htq
    }

    /// Largest magnitude among the three terms of the residual.
    pub fn term_scale(&self, p: f64) -> f64 {
        ((p - 1.0) * self.htt * self.radius())
            .abs()
            .max(self.ht * self.ht)
            .max((p - 1.0) * self.htq * self.htq)
    }

    /// Partial derivatives of `F` with respect to the nine stencil values,
    /// as `(dj, dk, value)` with `dj, dk ∈ {−1, 0, 1}`.
    pub fn jacobian(&self, p: f64, dt: f64, dq: f64) -> [(i8, i8, f64); 9] {
        let q = p - 1.0;
        let r = self.radius();
        let a = self.htt;
        let cross = -2.0 * q * self.htq / (4.0 * dt * dq);
        [
            (0, 0, q * (-2.0 * r / (dt * dt) + a * (1.0 - 2.0 / (dq * dq)))),
            (0, 1, q * r / (dt * dt) - self.ht / dt),
            (0, -1, q * r / (dt * dt) + self.ht / dt),
            (1, 0, q * a / (dq * dq)),
            (-1, 0, q * a / (dq * dq)),
            (1, 1, cross),
            (-1, -1, cross),
            (1, -1, -cross),
            (-1, 1, -cross),
        ]
    }
}

/// One-sided second-order `h_t` at the outer level `t = 0`.
pub(crate) fn outer_slope(field: &RingField, j: usize) -> f64 {
    (-3.0 * field.get(j, 0) + 4.0 * field.get(j, 1) - field.get(j, 2)) / (2.0 * field.dt())
}

/// One-sided second-order `h_t` at the inner level `t = 1`.
pub(crate) fn inner_slope(field: &RingField, j: usize) -> f64 {
    let l = field.levels();
    (3.0 * field.get(j, l) - 4.0 * field.get(j, l - 1) + field.get(j, l - 2)) / (2.0 * field.dt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DirectionGrid;

    fn field(p_of: impl Fn(f64, f64) -> f64, m: usize, l: usize) -> RingField {
        let g = DirectionGrid::new(m).unwrap();
        let values = (0..=l)
            .flat_map(|k| {
                let t = k as f64 / l as f64;
                (0..m).map(move |j| (j, t))
            })
            .map(|(j, t)| p_of(g.angle(j), t))
            .collect();
        RingField::new(g, l, values).unwrap()
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (m, l, p) = (32, 16, 2.7);
        let base = field(|q, t| (2.0 - t) * (1.0 + 0.2 * q.cos()) - 0.1 * t * t * (2.0 * q).sin(), m, l);
        let (j, k) = (5, 7);
        let local = Local::at(&base, j, k);
        let f0 = local.residual(p);
        let g = base.grid();
        for (dj, dk, val) in local.jacobian(p, base.dt(), g.spacing()) {
            let jj = (j as i64 + dj as i64).rem_euclid(m as i64) as usize;
            let kk = (k as i64 + dk as i64) as usize;
            let eps = 1e-6;
            let mut pert = base.clone();
            pert.set(jj, kk, base.get(jj, kk) + eps);
            let fd = (Local::at(&pert, j, k).residual(p) - f0) / eps;
            assert!((fd - val).abs() < 1e-4 * (1.0 + val.abs()), "({dj},{dk}): {fd} vs {val}");
        }
    }

    #[test]
    fn one_sided_slopes_are_exact_on_quadratics() {
        let f = field(|q, t| 3.0 - t + 0.5 * t * t + 0.01 * q.sin(), 16, 16);
        for j in 0..16 {
            assert!((outer_slope(&f, j) + 1.0).abs() < 1e-12);
            assert!((inner_slope(&f, j) - 0.0).abs() < 1e-12);
        }
    }
}
