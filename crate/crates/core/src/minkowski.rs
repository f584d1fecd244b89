//! Levelwise Minkowski combination of ring solutions.

use serde_json::json;

use crate::error::{invalid, Error, Result};
use crate::geometry::check_weights;
use crate::report::{CheckReport, Rule};
use crate::ring::{plaplacian_sign, plaplacian_sign_with_tol, RingField, RingSolution, SignMap, SIGN_TOL_REL};

pub const DEFAULT_HM_TOL: f64 = 1e-10;

/// Weighted harmonic mean `((1−λ)/τ0 + λ/τ1)^{−1}`.
pub fn tau_harmonic_mean(tau0: f64, tau1: f64, lambda: f64) -> Result<f64> {
    if !(tau0 > 0.0 && tau1 > 0.0) {
        return Err(invalid(format!("gradients ({tau0}, {tau1}) must be positive")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid(format!("lambda {lambda} must lie in [0, 1]")));
    }
    Ok(1.0 / ((1.0 - lambda) / tau0 + lambda / tau1))
}

/// `H_λ[j, k] = Σ_i λ_i H_i[j, k]` on a shared grid.
pub fn combine_fields(weights: &[f64], fields: &[&RingField]) -> Result<RingField> {
    if weights.len() != fields.len() || fields.is_empty() {
        return Err(invalid("need one weight per field"));
    }
    check_weights(weights)?;
    let first = fields[0];
    for f in &fields[1..] {
        if f.grid() != first.grid() {
            return Err(Error::GridMismatch {
                left: first.grid().len(),
                right: f.grid().len(),
            });
        }
        if f.levels() != first.levels() {
            return Err(invalid(format!(
                "level counts differ ({} vs {})",
                first.levels(),
                f.levels()
            )));
        }
    }
    let n = first.values().len();
    let values = (0..n)
        .map(|i| weights.iter().zip(fields).map(|(w, f)| w * f.values()[i]).sum())
        .collect();
    RingField::new(first.grid(), first.levels(), values)
}

/// Levelwise combination of converged solutions sharing grid and exponent.
pub fn combine_solutions(weights: &[f64], sols: &[&RingSolution]) -> Result<RingField> {
    if let Some(first) = sols.first() {
        if let Some(s) = sols.iter().find(|s| s.params.p != first.params.p) {
            return Err(invalid(format!(
                "exponents differ ({} vs {})",
                first.params.p, s.params.p
            )));
        }
    }
    let fields: Vec<&RingField> = sols.iter().map(|s| &s.field).collect();
    combine_fields(weights, &fields)
}

/// `h_t` at every node: centered inside, one-sided second order at the ends.
fn slopes(f: &RingField) -> Vec<f64> {
    let m = f.grid().len();
    let l = f.levels();
    let dt = f.dt();
    let mut out = Vec::with_capacity(m * (l + 1));
    for k in 0..=l {
        for j in 0..m {
            let s = if k == 0 {
                (-3.0 * f.get(j, 0) + 4.0 * f.get(j, 1) - f.get(j, 2)) / (2.0 * dt)
            } else if k == l {
                (3.0 * f.get(j, l) - 4.0 * f.get(j, l - 1) + f.get(j, l - 2)) / (2.0 * dt)
            } else {
                (f.get(j, k + 1) - f.get(j, k - 1)) / (2.0 * dt)
            };
            out.push(s);
        }
    }
    out
}

/// Largest relative deviation between `|Du_λ| = −1/∂_t H_λ` and the weighted
/// harmonic mean of the `|Du_i|` at matched `(θ_j, t_k)`.
pub fn gradient_harmonic_mean_error(weights: &[f64], sols: &[&RingSolution]) -> Result<f64> {
    let combo = combine_solutions(weights, sols)?;
    let sc = slopes(&combo);
    let si: Vec<Vec<f64>> = sols.iter().map(|s| slopes(&s.field)).collect();
    let mut err = 0.0f64;
    for (node, s) in sc.iter().enumerate() {
        let g = -1.0 / s;
        let inv: f64 = weights.iter().zip(&si).map(|(w, v)| w * (-v[node])).sum();
        let hm = 1.0 / inv;
        err = err.max((g - hm).abs() / hm.abs());
    }
    Ok(err)
}

pub fn gradient_harmonic_mean_check(sols: &[&RingSolution], weights: &[f64], hm_tol: f64) -> Result<CheckReport> {
    let err = gradient_harmonic_mean_error(weights, sols)?;
    Ok(CheckReport::builder("gradient_harmonic_mean", json!({"weights": weights, "inputs": sols.len()}))
        .quantity("max_relative_error", err)
        .tolerance("hm_tol", hm_tol)
        .margin("identity", err, hm_tol, Rule::NearZero)
        .finish())
}

/// Sign map of the combination with the band `1e−6 ·` the largest term
/// magnitude found in the inputs.
pub fn combination_sign(weights: &[f64], sols: &[&RingSolution]) -> Result<SignMap> {
    let combo = combine_solutions(weights, sols)?;
    let mut scale = 0.0f64;
    for s in sols {
        scale = scale.max(plaplacian_sign(&s.field, s.params.p)?.scale);
    }
    plaplacian_sign_with_tol(&combo, sols[0].params.p, Some(SIGN_TOL_REL * scale))
}

/// Subsolution certificate of a combination: `Δ_p u_λ ≥ −sign_tol` at every
/// interior node, and the harmonic-mean gradient identity.
pub fn subsolution_certificate(weights: &[f64], sols: &[&RingSolution], hm_tol: f64) -> Result<CheckReport> {
    let signs = combination_sign(weights, sols)?;
    let err = gradient_harmonic_mean_error(weights, sols)?;
    Ok(CheckReport::builder("subsolution_certificate", json!({"weights": weights, "inputs": sols.len()}))
        .quantity("min_residual", signs.min_value())
        .quantity("max_relative_gradient_error", err)
        .tolerance("sign_tol", signs.sign_tol)
        .tolerance("hm_tol", hm_tol)
        .margin("min_plaplacian", signs.min_value(), signs.sign_tol, Rule::NonNegative)
        .margin("harmonic_mean_identity", err, hm_tol, Rule::NearZero)
        .finish())
}
