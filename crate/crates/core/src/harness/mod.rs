//! Numerical verification of the inequalities satisfied by `Λ`, by the
//! exterior and interior free boundaries, and by ring solutions.
//!
//! Every check returns a [`CheckReport`]. Tolerances are derived from the
//! solver tolerances held by the [`Harness`] and recorded in the report.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex};

use serde_json::json;

use crate::error::{invalid, Error, Result};
use crate::exterior::{self, ExteriorOptions};
use crate::geometry::{
    hausdorff_distance, mean_width, minkowski_combine, sample_support, steiner_point, BodySpec, SupportFunction,
};
use crate::interior::{
    self, bernoulli_constant, is_subsolution, lambda_ball, solve_interior_with, uniqueness_probe,
    BernoulliConstantResult, InteriorOptions, InteriorOutcome, InteriorSolution, LambdaOptions,
};
use crate::minkowski::{combine_solutions, subsolution_certificate, tau_harmonic_mean, DEFAULT_HM_TOL};
use crate::report::{CheckReport, Rule};
use crate::ring::{PLaplaceParams, RingSolution};

mod suite;

pub use suite::{run_suite, BodyPair, InclusionCase, RingCase, Scaling, Suite, SuiteConfig};

pub const DEFAULT_MONO_TOL_REL: f64 = 1e-6;
/// Hadwiger means: tolerance on drift of the mean width.
pub const MEAN_WIDTH_TOL: f64 = 1e-8;

type Slot = Arc<Mutex<Option<Arc<BernoulliConstantResult>>>>;

/// Solver settings shared by a batch of checks, with a cache of computed
/// Bernoulli constants keyed by body and exponent.
pub struct Harness {
    pub params: PLaplaceParams,
    pub lambda_opts: LambdaOptions,
    pub interior_opts: InteriorOptions,
    pub exterior_opts: ExteriorOptions,
    cache: Mutex<HashMap<String, Slot>>,
}

impl Harness {
    pub fn new(params: PLaplaceParams) -> Self {
        Harness {
            params,
            lambda_opts: LambdaOptions::default(),
            interior_opts: InteriorOptions::default(),
            exterior_opts: ExteriorOptions::default(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_tolerances(mut self, fp_tol: f64, bisect_tol: f64) -> Self {
        self.lambda_opts.bisect_tol = bisect_tol;
        self.interior_opts.fp_tol = fp_tol;
        self.exterior_opts.fp_tol = fp_tol;
        self
    }

    pub fn params_for(&self, p: f64) -> PLaplaceParams {
        self.params.with_exponent(p)
    }

    /// Uncertainty attached to a computed `Λ`.
    pub fn lambda_tol(&self, lambda: f64) -> f64 {
        self.lambda_opts.bisect_tol * lambda
    }

    /// `Λ(body)` for exponent `p`, computed once per harness.
    pub fn lambda(&self, body: &BodySpec, p: f64) -> Result<Arc<BernoulliConstantResult>> {
        let key = format!("{}|{p:e}", serde_json::to_string(body)?);
        let slot = {
            let mut map = self.cache.lock().expect("cache lock");
            map.entry(key).or_default().clone()
        };
        let mut guard = slot.lock().expect("slot lock");
        if let Some(r) = guard.as_ref() {
            return Ok(r.clone());
        }
        let params = self.params_for(p);
        let h = sample_support(body, params.grid)?;
        let r = Arc::new(bernoulli_constant(&h, &params, &self.lambda_opts)?);
        *guard = Some(r.clone());
        Ok(r)
    }

    pub fn interior(&self, body: &BodySpec, tau: f64, p: f64) -> Result<InteriorOutcome> {
        let params = self.params_for(p);
        let h = sample_support(body, params.grid)?;
        solve_interior_with(&h, tau, &params, &self.interior_opts)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid(format!("lambda {lambda} must lie in [0, 1]")));
    }
    Ok(())
}

fn combo(b0: &BodySpec, b1: &BodySpec, lambda: f64) -> BodySpec {
    BodySpec::combo(vec![(1.0 - lambda, b0.clone()), (lambda, b1.clone())])
}

/// `true` when the two bodies agree up to dilation and translation within
/// `rel_tol` of their size.
pub fn homothetic(h0: &SupportFunction, h1: &SupportFunction, rel_tol: f64) -> Result<bool> {
    let (n0, _) = h0.normalized();
    let (n1, _) = h1.normalized();
    let s = n1.mean_value() / n0.mean_value();
    let d = hausdorff_distance(&n0.scaled(s), &n1)?;
    Ok(d <= rel_tol * n1.mean_value())
}

/// Brunn-Minkowski inequality for `Λ`:
/// `Λ(Ω_λ) ≤ ((1−λ)/Λ(Ω0) + λ/Λ(Ω1))^{−1}`.
pub fn bm_check(h: &Harness, omega0: &BodySpec, omega1: &BodySpec, lambda: f64, p: f64) -> Result<CheckReport> {
    check_lambda(lambda)?;
    let params = h.params_for(p);
    let b = CheckReport::builder(
        "bm",
        json!({"omega0": omega0, "omega1": omega1, "lambda": lambda, "p": p,
               "M": params.grid.len(), "L": params.levels}),
    );
    let l0 = h.lambda(omega0, p)?;
    let l1 = h.lambda(omega1, p)?;
    let body_l = combo(omega0, omega1, lambda);
    let ll = h.lambda(&body_l, p)?;
    let rhs = tau_harmonic_mean(l0.lambda, l1.lambda, lambda)?;
    let margin = rhs - ll.lambda;
    let tol = 2.0 * h.lambda_tol(rhs);
    let hom = homothetic(&sample_support(omega0, params.grid)?, &sample_support(omega1, params.grid)?, 1e-9)?;
    let equality = margin.abs() <= tol;
    Ok(b.quantity("lambda_0", l0.lambda)
        .quantity("lambda_1", l1.lambda)
        .quantity("lambda_combination", ll.lambda)
        .quantity("harmonic_mean", rhs)
        .quantity("margin", margin)
        .quantity("margin_over_tol", margin / tol)
        .quantity("homothetic_inputs", hom)
        .quantity("equality_within_tol", equality)
        .quantity("equality_matches_homothety", equality == hom)
        .tolerance("bisect_tol", h.lambda_opts.bisect_tol)
        .tolerance("margin_tol", tol)
        .margin("bm", margin, tol, Rule::NonNegative)
        .finish())
}

/// Urysohn-type bound `Λ(Ω) ≥ Λ(B_{b/2})`, `b` the mean width.
///
/// The ball constant is computed on the same grid, so discretization error
/// largely cancels in the margin; the closed-form value is reported too.
pub fn urysohn_check(h: &Harness, omega: &BodySpec, p: f64) -> Result<CheckReport> {
    let params = h.params_for(p);
    let b = CheckReport::builder("urysohn", json!({"omega": omega, "p": p, "M": params.grid.len(), "L": params.levels}));
    let hs = sample_support(omega, params.grid)?;
    let width = mean_width(&hs);
    let l = h.lambda(omega, p)?;
    let ball = h.lambda(&BodySpec::disk(0.5 * width), p)?;
    let closed = lambda_ball(0.5 * width, p, 2);
    let margin = l.lambda - ball.lambda;
    let tol = 2.0 * h.lambda_tol(ball.lambda);
    Ok(b.quantity("mean_width", width)
        .quantity("lambda", l.lambda)
        .quantity("lambda_ball_discrete", ball.lambda)
        .quantity("lambda_ball_closed_form", closed)
        .quantity("margin", margin)
        .quantity("margin_closed_form", l.lambda - closed)
        .quantity("margin_over_tol", margin / tol)
        .tolerance("margin_tol", tol)
        .margin("urysohn", margin, tol, Rule::NonNegative)
        .finish())
}

/// Smallest rotation period `2π/s`, `s ≤ 12`, leaving the sampled body
/// unchanged up to `1e−9` of its size.
pub fn symmetry_period(hs: &SupportFunction) -> f64 {
    let m = hs.len();
    let (n, _) = hs.normalized();
    let tol = 1e-9 * n.max_value();
    for s in (2..=12).rev() {
        if m % s == 0 {
            let r = n.rotated_steps(m / s);
            if hausdorff_distance(&r, &n).map(|d| d <= tol).unwrap_or(false) {
                return TAU / s as f64;
            }
        }
    }
    TAU
}

/// `Ω_n = (1/n) Σ_{k=1..n} ρ_{kP/n} Ω` with `P` the rotation period.
pub fn hadwiger_mean(omega: &BodySpec, n: usize, period: f64) -> BodySpec {
    let w = 1.0 / n as f64;
    BodySpec::combo(
        (1..=n)
            .map(|k| (w, omega.clone().rotated(period * k as f64 / n as f64)))
            .collect(),
    )
}

/// Rotation means of `Ω`: mean width conserved, `Λ(Ω_n)` nonincreasing and
/// Hausdorff distance to `B_{b/2}` (centred at the Steiner point) strictly
/// decreasing.
///
/// `period = None` picks the symmetry period of `Ω`; with a period equal to
/// a symmetry of `Ω` the means would repeat.
pub fn hadwiger_sequence(h: &Harness, omega: &BodySpec, p: f64, n_max: usize, period: Option<f64>) -> Result<CheckReport> {
    if n_max < 2 {
        return Err(invalid(format!("n_max = {n_max} must be at least 2")));
    }
    let params = h.params_for(p);
    let hs = sample_support(omega, params.grid)?;
    let period = period.unwrap_or_else(|| symmetry_period(&hs));
    let builder = CheckReport::builder(
        "hadwiger",
        json!({"omega": omega, "p": p, "n_max": n_max, "period": period,
               "M": params.grid.len(), "L": params.levels}),
    );
    let width = mean_width(&hs);
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let body = hadwiger_mean(omega, n, period);
        let hn = sample_support(&body, params.grid)?;
        let s = steiner_point(&hn);
        let ball = SupportFunction::constant(params.grid, 0.5 * mean_width(&hn)).translated(s);
        let l = h.lambda(&body, p)?;
        rows.push((n, mean_width(&hn), l.lambda, hausdorff_distance(&hn, &ball)?));
    }
    let drift = rows.iter().map(|r| (r.1 - width).abs()).fold(0.0, f64::max);
    let rise = rows.windows(2).map(|w| w[1].2 - w[0].2).fold(f64::NEG_INFINITY, f64::max);
    let rise_tol = 2.0 * h.lambda_tol(rows[0].2);
    let floor = 1e-12 * hs.max_value();
    let decrease = rows
        .windows(2)
        .filter(|w| w[0].3 > floor)
        .map(|w| w[0].3 - w[1].3)
        .fold(f64::INFINITY, f64::min);
    let mut b = builder
        .quantity("mean_width", width)
        .quantity("max_mean_width_drift", drift)
        .quantity("max_lambda_increase", rise)
        .tolerance("mean_width_tol", MEAN_WIDTH_TOL)
        .tolerance("lambda_tol", rise_tol)
        .margin("mean_width_constant", drift, MEAN_WIDTH_TOL, Rule::NearZero)
        .margin("lambda_nonincreasing", -rise, rise_tol, Rule::NonNegative);
    b = if decrease.is_finite() {
        b.quantity("min_distance_decrease", decrease)
            .margin("distance_decreasing", decrease, 0.0, Rule::StrictlyPositive)
    } else {
        b.note("every mean is already a ball; distances vanish")
    };
    for (n, w, l, d) in rows {
        b = b.row(json!({"n": n, "mean_width": w, "lambda": l, "hausdorff_to_ball": d}));
    }
    Ok(b.finish())
}

/// `Λ(αΩ) = Λ(Ω)/α`.
pub fn homogeneity_check(h: &Harness, omega: &BodySpec, alpha: f64, p: f64) -> Result<CheckReport> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha {alpha} must be positive")));
    }
    let params = h.params_for(p);
    let b = CheckReport::builder(
        "homogeneity",
        json!({"omega": omega, "alpha": alpha, "p": p, "M": params.grid.len(), "L": params.levels}),
    );
    let l = h.lambda(omega, p)?;
    let ls = h.lambda(&omega.clone().scaled(alpha), p)?;
    let err = (alpha * ls.lambda - l.lambda).abs() / l.lambda;
    let tol = 2.0 * h.lambda_opts.bisect_tol;
    Ok(b.quantity("lambda", l.lambda)
        .quantity("lambda_scaled", ls.lambda)
        .quantity("relative_error", err)
        .tolerance("rel_tol", tol)
        .margin("homogeneity", err, tol, Rule::NearZero)
        .finish())
}

fn maximal_set(h: &Harness, body: &BodySpec, tau: f64, p: f64) -> Result<InteriorSolution> {
    let l = h.lambda(body, p)?;
    if tau < l.bracket.0 {
        return Err(Error::InfeasibleTau { tau, lambda: l.lambda });
    }
    match h.interior(body, tau, p)? {
        InteriorOutcome::Solved(s) => Ok(*s),
        InteriorOutcome::Infeasible(_) => Err(Error::InfeasibleTau { tau, lambda: l.lambda }),
    }
}

/// `(1−λ) K̃(Ω0,τ0) + λ K̃(Ω1,τ1) ⊆ K̃(Ω_λ,τ_λ)` as a support-function margin.
pub fn largest_set_inclusion_check(
    h: &Harness,
    omega0: &BodySpec,
    omega1: &BodySpec,
    tau0: f64,
    tau1: f64,
    lambda: f64,
    p: f64,
) -> Result<CheckReport> {
    check_lambda(lambda)?;
    let params = h.params_for(p);
    let b = CheckReport::builder(
        "interior_inclusion",
        json!({"omega0": omega0, "omega1": omega1, "tau0": tau0, "tau1": tau1, "lambda": lambda, "p": p,
               "M": params.grid.len(), "L": params.levels}),
    );
    let tau_l = tau_harmonic_mean(tau0, tau1, lambda)?;
    let s0 = maximal_set(h, omega0, tau0, p)?;
    let s1 = maximal_set(h, omega1, tau1, p)?;
    let sl = maximal_set(h, &combo(omega0, omega1, lambda), tau_l, p)?;
    let mix = minkowski_combine(&[1.0 - lambda, lambda], &[&s0.h_k, &s1.h_k])?;
    let margin = (0..mix.len())
        .map(|j| sl.h_k.values()[j] - mix.values()[j])
        .fold(f64::INFINITY, f64::min);
    let scale = s0.h_omega.max_value().max(s1.h_omega.max_value());
    let tol = exterior::DEFAULT_INCL_TOL_REL * scale;
    Ok(b.quantity("tau_lambda", tau_l)
        .quantity("margin", margin)
        .quantity("fp_residual_0", s0.fp_residual)
        .quantity("fp_residual_1", s1.fp_residual)
        .quantity("fp_residual_lambda", sl.fp_residual)
        .tolerance("incl_tol", tol)
        .tolerance("fp_tol", h.interior_opts.fp_tol)
        .margin("inclusion", margin, tol, Rule::NonNegative)
        .finish())
}

/// `(1−λ) Ω_{τ0}(K0) + λ Ω_{τ1}(K1) ⊆ Ω_{τλ}(K_λ)`.
pub fn exterior_inclusion_check(
    h: &Harness,
    k0: &BodySpec,
    k1: &BodySpec,
    tau0: f64,
    tau1: f64,
    lambda: f64,
    p: f64,
) -> Result<CheckReport> {
    exterior::exterior_inclusion_check(k0, k1, tau0, tau1, lambda, &h.params_for(p), &h.exterior_opts, None)
}

pub fn uniqueness_check(h: &Harness, omega: &BodySpec, p: f64) -> Result<CheckReport> {
    let params = h.params_for(p);
    let hs = sample_support(omega, params.grid)?;
    let l = h.lambda(omega, p)?;
    let mut r = uniqueness_probe(&hs, &params, &l, &h.interior_opts, None)?;
    if let serde_json::Value::Object(m) = &mut r.inputs {
        m.insert("omega".into(), serde_json::to_value(omega)?);
    }
    Ok(r)
}

/// Midpoint gradients `−Δt/(H[k+1] − H[k])` increase with `t` along every
/// direction.
pub fn gradient_monotonicity_check(sol: &RingSolution, mono_tol: Option<f64>) -> Result<CheckReport> {
    let f = &sol.field;
    let m = f.grid().len();
    let g = f.midpoint_gradients();
    let scale = g.iter().copied().fold(0.0, f64::max);
    let tol = mono_tol.unwrap_or(DEFAULT_MONO_TOL_REL * scale);
    let mut worst = f64::INFINITY;
    let mut at = (0, 0);
    for k in 0..f.levels() - 1 {
        for j in 0..m {
            let d = g[(k + 1) * m + j] - g[k * m + j];
            if d < worst {
                worst = d;
                at = (j, k);
            }
        }
    }
    Ok(CheckReport::builder(
        "monotonicity",
        json!({"p": sol.params.p, "M": m, "L": f.levels(), "mean_width_outer": mean_width(&sol.outer()),
               "mean_width_inner": mean_width(&sol.inner())}),
    )
    .quantity("min_forward_difference", worst)
    .quantity("at_direction", at.0)
    .quantity("at_level", at.1)
    .quantity("gradient_scale", scale)
    .tolerance("mono_tol", tol)
    .margin("monotone", worst, tol, Rule::NonNegative)
    .finish())
}

/// Certificate for a pair of ring solutions combined with weights
/// `(1−λ, λ)`: sign of `Δ_p u_λ`, the harmonic-mean identity and, for
/// interior solutions, membership of the combination in the subsolution
/// class at `τ_λ`.
pub fn subsolution_check(
    s0: &RingSolution,
    s1: &RingSolution,
    lambda: f64,
    taus: Option<(f64, f64)>,
    label: &str,
) -> Result<CheckReport> {
    check_lambda(lambda)?;
    let w = [1.0 - lambda, lambda];
    let cert = subsolution_certificate(&w, &[s0, s1], DEFAULT_HM_TOL)?;
    let mut b = CheckReport::builder(
        "subsolution",
        json!({"pair": label, "lambda": lambda, "p": s0.params.p, "M": s0.params.grid.len(), "L": s0.params.levels}),
    );
    for (k, v) in &cert.quantities {
        b = b.quantity(k, v.clone());
    }
    for (k, v) in &cert.tolerances {
        b = b.tolerance(k, v.as_f64().unwrap_or(f64::NAN));
    }
    for mg in &cert.margins {
        b = b.margin(&mg.name, mg.value, mg.tolerance, mg.rule);
    }
    if let Some((t0, t1)) = taus {
        let tau_l = tau_harmonic_mean(t0, t1, lambda)?;
        let combined = combine_solutions(&w, &[s0, s1])?;
        let sub = is_subsolution(&combined, tau_l, s0.params.p, interior::DEFAULT_GRAD_TOL)?;
        b = b
            .quantity("tau_lambda", tau_l)
            .quantity("max_inner_gradient", sub.max_inner_gradient)
            .quantity("is_subsolution", sub.is_subsolution)
            .tolerance("grad_tol", sub.grad_tol)
            .margin(
                "inner_gradient_bound",
                tau_l * (1.0 + sub.grad_tol) - sub.max_inner_gradient,
                0.0,
                Rule::NonNegative,
            );
    }
    Ok(b.finish())
}

/// Volume-normalized comparison `Λ(Ω)` against the ball of equal area.
/// Exploratory: the report carries data only and always passes.
pub fn flucher_rumpf_probe(h: &Harness, omega: &BodySpec, p: f64) -> Result<CheckReport> {
    let params = h.params_for(p);
    let hs = sample_support(omega, params.grid)?;
    let area = hs.area();
    let radius = (area / PI).sqrt();
    let l = h.lambda(omega, p)?;
    let ball = lambda_ball(radius, p, 2);
    Ok(CheckReport::builder("flucher_rumpf", json!({"omega": omega, "p": p, "M": params.grid.len(), "L": params.levels}))
        .quantity("area", area)
        .quantity("equal_area_radius", radius)
        .quantity("lambda", l.lambda)
        .quantity("lambda_equal_area_ball", ball)
        .quantity("ratio", l.lambda / ball)
        .note("exploratory data without pass/fail semantics")
        .finish())
}

/// Failed report standing in for a check whose solver raised an error.
pub fn error_report(name: &str, inputs: serde_json::Value, err: &Error) -> CheckReport {
    CheckReport::builder(name, inputs)
        .quantity("error_kind", err.kind())
        .note(err.to_string())
        .margin("completed", -1.0, 0.0, Rule::NonNegative)
        .finish()
}

#[cfg(test)]
mod tests;
