//! Exterior Bernoulli problem: given `K`, `τ` and `p`, find `Ω ⊃ K̄` whose
//! capacitary potential has `|Du| = τ` on `∂Ω`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{invalid, Error, Result};
use crate::geometry::{
    inradius_outradius, minkowski_combine, project_to_convex, sample_support, BodySpec, Point, SupportFunction,
};
use crate::minkowski::tau_harmonic_mean;
use crate::radial;
use crate::report::{CheckReport, Rule};
use crate::ring::{self, Closure, PLaplaceParams, RingField, RingSolution, Side};
use crate::trial::{fp_residual, reshape_field, smooth, StepControl};

pub const DEFAULT_FP_TOL: f64 = 1e-6;
pub const DEFAULT_INCL_TOL_REL: f64 = 1e-4;

/// Controls of the exterior trial iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExteriorOptions {
    pub fp_tol: f64,
    pub step: f64,
    pub step_floor: f64,
    pub max_iterations: usize,
    /// Iterations without a new best residual before giving up.
    pub patience: usize,
    /// Strength of the angular low-pass applied to the gradient mismatch.
    pub smoothing: f64,
    /// Residual below which a Newton solve on the free boundary is attempted.
    pub polish_below: f64,
}

impl Default for ExteriorOptions {
    fn default() -> Self {
        ExteriorOptions {
            fp_tol: DEFAULT_FP_TOL,
            step: 0.5,
            step_floor: 1e-3,
            max_iterations: 300,
            patience: 15,
            smoothing: 1.0,
            polish_below: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExteriorSolution {
    pub h_k: SupportFunction,
    pub h_omega: SupportFunction,
    pub ring: RingSolution,
    pub tau: f64,
    pub achieved_gradient: Vec<f64>,
    /// `max_j | |Du|(θ_j, 0) − τ | / τ`.
    pub fp_residual: f64,
    pub trial_iterations: usize,
    pub residual_history: Vec<f64>,
}

impl ExteriorSolution {
    pub fn summary(&self) -> serde_json::Value {
        json!({
            "tau": self.tau,
            "fp_residual": self.fp_residual,
            "trial_iterations": self.trial_iterations,
            "mean_width_omega": crate::geometry::mean_width(&self.h_omega),
            "min_h_omega": self.h_omega.min_value(),
            "max_h_omega": self.h_omega.max_value(),
            "ring": self.ring.summary(),
        })
    }

    /// CSV with columns `theta,h_omega,h_k,grad`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,h_omega,h_k,grad")?;
        let g = self.h_omega.grid();
        for j in 0..g.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                g.angle(j),
                self.h_omega.values()[j],
                self.h_k.values()[j],
                self.achieved_gradient[j]
            )?;
        }
        Ok(())
    }
}

/// One plain multiplicative trial step
/// `project_to_convex(h_Ω + step · h_Ω · (g/τ − 1))`.
///
/// Directions where the achieved gradient exceeds `τ` move outward.
pub fn trial_update(h_omega: &SupportFunction, gradient: &[f64], tau: f64, step: f64) -> Result<SupportFunction> {
    if !(step > 0.0) {
        return Err(invalid(format!("trial step {step} must be positive")));
    }
    if !(tau > 0.0) {
        return Err(invalid(format!("tau {tau} must be positive")));
    }
    if gradient.len() != h_omega.len() {
        return Err(Error::GridMismatch {
            left: h_omega.len(),
            right: gradient.len(),
        });
    }
    if gradient.iter().any(|g| !(*g > 0.0)) {
        return Err(invalid("trial gradients must be positive"));
    }
    let raw: Vec<f64> = h_omega
        .values()
        .iter()
        .zip(gradient)
        .map(|(h, g)| h + step * h * (g / tau - 1.0))
        .collect();
    project_to_convex(h_omega.grid(), &raw)
}

/// Field whose level sets are outer parallel bodies `K + (ρ(t) − r)B`, with
/// `ρ(t)` the level radius of the annulus potential between radii `r`, `R`.
fn parallel_field(h_k: &SupportFunction, r: f64, big_r: f64, p: f64, levels: usize) -> Result<RingField> {
    let m = h_k.len();
    let mut values = Vec::with_capacity(m * (levels + 1));
    for k in 0..=levels {
        let off = radial::level_radius(r, big_r, p, k as f64 / levels as f64) - r;
        values.extend(h_k.values().iter().map(|h| h + off));
    }
    RingField::new(h_k.grid(), levels, values)
}

/// Solve the exterior problem with default trial controls and the given
/// fixed-point tolerance.
pub fn solve_exterior(h_k: &SupportFunction, tau: f64, params: &PLaplaceParams, fp_tol: f64) -> Result<ExteriorSolution> {
    solve_exterior_with(
        h_k,
        tau,
        params,
        &ExteriorOptions {
            fp_tol,
            ..Default::default()
        },
    )
}

pub fn solve_exterior_with(
    h_k: &SupportFunction,
    tau: f64,
    params: &PLaplaceParams,
    opts: &ExteriorOptions,
) -> Result<ExteriorSolution> {
    params.validate()?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid(format!("tau {tau} must be positive")));
    }
    if h_k.grid() != params.grid {
        return Err(Error::GridMismatch {
            left: params.grid.len(),
            right: h_k.len(),
        });
    }
    let (k0, shift) = h_k.normalized();
    let radii = inradius_outradius(&k0)?;
    let big_r = radial::exterior_radius(radii.r_in, params.p, tau);
    let mut field = parallel_field(&k0, radii.r_in, big_r, params.p, params.levels)?;

    let mut ctrl = StepControl::new(opts.step, opts.step_floor);
    let mut history = Vec::new();
    let mut polish_below = opts.polish_below;

    for it in 0..opts.max_iterations {
        let sol = ring::solve_ring_from(field.clone(), params)?;
        let g = sol.boundary_gradient(Side::Outer);
        let fp = fp_residual(&g, tau);
        history.push(fp);
        ctrl.record(fp, false);

        if fp <= opts.fp_tol {
            return Ok(finish(h_k, sol, g, tau, fp, it + 1, history, shift));
        }
        if fp <= polish_below {
            match ring::solve_free(sol.field.clone(), Closure::OuterFlux { sigma: 1.0 / tau }, 0.0, params) {
                Ok((polished, _)) => {
                    let g = polished.boundary_gradient(Side::Outer);
                    let fp_p = fp_residual(&g, tau);
                    if fp_p <= opts.fp_tol {
                        history.push(fp_p);
                        return Ok(finish(h_k, polished, g, tau, fp_p, it + 1, history, shift));
                    }
                }
                Err(_) => {}
            }
            polish_below *= 0.1;
        }
        if ctrl.since_best >= opts.patience {
            return Err(Error::TrialDivergence {
                iterations: it + 1,
                residual: ctrl.best,
            });
        }

        let h_omega = sol.outer();
        let mismatch: Vec<f64> = g.iter().map(|gj| gj / tau - 1.0).collect();
        let mismatch = smooth(&mismatch, opts.smoothing);
        let mut step = ctrl.step;
        let next = loop {
            let raw: Vec<f64> = (0..h_omega.len())
                .map(|j| {
                    let width = h_omega.values()[j] - k0.values()[j];
                    let d = (step * width * mismatch[j]).clamp(-0.9 * width, 0.5 * h_omega.values()[j].abs());
                    h_omega.values()[j] + d
                })
                .collect();
            let cand = project_to_convex(h_omega.grid(), &raw)?;
            let inside = cand
                .values()
                .iter()
                .zip(k0.values())
                .zip(h_omega.values())
                .all(|((c, k), o)| c - k > 0.02 * (o - k));
            if inside {
                break cand;
            }
            step *= 0.5;
            if step < opts.step_floor {
                return Err(Error::TrialDivergence {
                    iterations: it + 1,
                    residual: ctrl.best,
                });
            }
        };
        field = reshape_field(&sol.field, Side::Outer, next.values());
        if !field.is_strictly_decreasing() {
            field = RingField::interpolate(&next, &k0, params.levels)?;
        }
    }
    Err(Error::TrialDivergence {
        iterations: opts.max_iterations,
        residual: ctrl.best,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    h_k: &SupportFunction,
    sol: RingSolution,
    gradient: Vec<f64>,
    tau: f64,
    fp: f64,
    iterations: usize,
    history: Vec<f64>,
    shift: Point,
) -> ExteriorSolution {
    let ring = RingSolution {
        field: sol.field.translated(shift),
        ..sol
    };
    ExteriorSolution {
        h_k: h_k.clone(),
        h_omega: ring.outer(),
        ring,
        tau,
        achieved_gradient: gradient,
        fp_residual: fp,
        trial_iterations: iterations,
        residual_history: history,
    }
}

/// Check `(1−λ)Ω_{τ0}(K0) + λΩ_{τ1}(K1) ⊆ Ω_{τλ}((1−λ)K0 + λK1)` with `τλ`
/// the weighted harmonic mean of `τ0` and `τ1`.
///
/// The margin is `min_j (h_{Ω_λ} − (1−λ)h_{Ω_0} − λh_{Ω_1})`; the check
/// passes when it is at least `−incl_tol`, with `incl_tol = 1e−4 ·` the
/// largest support value of the two data bodies unless given.
#[allow(clippy::too_many_arguments)]
pub fn exterior_inclusion_check(
    k0: &BodySpec,
    k1: &BodySpec,
    tau0: f64,
    tau1: f64,
    lambda: f64,
    params: &PLaplaceParams,
    opts: &ExteriorOptions,
    incl_tol: Option<f64>,
) -> Result<CheckReport> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid(format!("lambda {lambda} must lie in [0, 1]")));
    }
    let builder = CheckReport::builder(
        "exterior_inclusion",
        json!({"K0": k0, "K1": k1, "tau0": tau0, "tau1": tau1, "lambda": lambda, "p": params.p,
               "M": params.grid.len(), "L": params.levels}),
    );
    let hk0 = sample_support(k0, params.grid)?;
    let hk1 = sample_support(k1, params.grid)?;
    let hkl = minkowski_combine(&[1.0 - lambda, lambda], &[&hk0, &hk1])?;
    let tau_l = tau_harmonic_mean(tau0, tau1, lambda)?;
    let s0 = solve_exterior_with(&hk0, tau0, params, opts)?;
    let s1 = solve_exterior_with(&hk1, tau1, params, opts)?;
    let sl = solve_exterior_with(&hkl, tau_l, params, opts)?;
    let combo = minkowski_combine(&[1.0 - lambda, lambda], &[&s0.h_omega, &s1.h_omega])?;
    let margin = (0..combo.len())
        .map(|j| sl.h_omega.values()[j] - combo.values()[j])
        .fold(f64::INFINITY, f64::min);
    let scale = hk0.max_value().max(hk1.max_value());
    let tol = incl_tol.unwrap_or(DEFAULT_INCL_TOL_REL * scale);
    Ok(builder
        .quantity("tau_lambda", tau_l)
        .quantity("fp_residual_0", s0.fp_residual)
        .quantity("fp_residual_1", s1.fp_residual)
        .quantity("fp_residual_lambda", sl.fp_residual)
        .quantity("mean_width_omega_lambda", crate::geometry::mean_width(&sl.h_omega))
        .tolerance("incl_tol", tol)
        .tolerance("fp_tol", opts.fp_tol)
        .margin("inclusion", margin, tol, Rule::NonNegative)
        .finish())
}
