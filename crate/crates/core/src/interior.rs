//! Interior Bernoulli problem and the Bernoulli constant `Λ(Ω)`.
//!
//! For `τ ≥ Λ(Ω)` the interior problem has a largest solution set `K̃`; for
//! `τ < Λ(Ω)` it has none. Solutions with `|Du| = τ` on `∂K` form a curve
//! parametrized by the size of `K`, and `Λ(Ω)` is the minimum of `τ` along
//! that curve.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{invalid, Error, Result};
use crate::geometry::{inradius_outradius, mean_width, project_to_convex, SupportFunction};
use crate::radial;
use crate::report::{CheckReport, Rule};
use crate::ring::{self, plaplacian_sign, Closure, PLaplaceParams, RingField, RingSolution, Side};
use crate::trial::{fp_residual, reshape_field, smooth, StepControl};

pub const DEFAULT_BISECT_TOL: f64 = 1e-4;
pub const DEFAULT_UNIQ_TOL_REL: f64 = 1e-3;
pub const DEFAULT_GRAD_TOL: f64 = 1e-5;

/// `Λ(B_R)` in dimension `N`: `((N−1)/(p−1))^{(N−1)/(N−p)}/R` for `N ≠ p`,
/// `e/R` for `N = p`.
pub fn lambda_ball(radius: f64, p: f64, n: u32) -> f64 {
    let nf = n as f64;
    if (nf - p).abs() < 1e-12 {
        return E / radius;
    }
    ((nf - 1.0) / (p - 1.0)).powf((nf - 1.0) / (nf - p)) / radius
}

/// A-priori bounds on `Λ(Ω)` in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBounds {
    pub lo: f64,
    pub hi: f64,
    pub r_in: f64,
    pub r_out: f64,
    /// `2 / w_min`, with `w_min` the minimal width.
    pub min_width_bound: f64,
}

/// `B_{r_in} ⊆ Ω ⊆ B_{R_out}` gives `Λ(B_{R_out}) ≤ Λ(Ω) ≤ Λ(B_{r_in})`; the
/// lower end is raised to `1/R` when the minimal width is `2R` and that is
/// larger.
pub fn lambda_bounds(h_omega: &SupportFunction, p: f64) -> Result<LambdaBounds> {
    if !(p > 1.0) {
        return Err(invalid(format!("exponent {p} must exceed 1")));
    }
    let radii = inradius_outradius(h_omega)?;
    let w = h_omega.min_width();
    if !(w > 0.0) {
        return Err(Error::DegenerateBody(format!("minimal width {w:e}")));
    }
    let min_width_bound = 2.0 / w;
    let lo = lambda_ball(radii.r_out, p, 2).max(min_width_bound);
    let hi = lambda_ball(radii.r_in, p, 2);
    Ok(LambdaBounds {
        lo,
        hi,
        r_in: radii.r_in,
        r_out: radii.r_out,
        min_width_bound,
    })
}

pub fn lambda_bracket(h_omega: &SupportFunction, p: f64) -> Result<(f64, f64)> {
    lambda_bounds(h_omega, p).map(|b| (b.lo, b.hi))
}

/// Initial inner body of the shrinking iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteriorInit {
    /// `project_to_convex(h_Ω − δ₀)`, `δ₀ = 0.05 · r_in(Ω)`.
    InnerParallel,
    /// `0.9 · Ω` about its Steiner point.
    Scaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorOptions {
    pub fp_tol: f64,
    pub step: f64,
    pub step_floor: f64,
    pub max_iterations: usize,
    pub patience: usize,
    pub smoothing: f64,
    pub polish_below: f64,
    /// Infeasibility is declared once `r_in(K) < r_min_rel · r_in(Ω)`.
    pub r_min_rel: f64,
    pub delta0_rel: f64,
    pub scaled_init: f64,
    pub init: InteriorInit,
}

impl Default for InteriorOptions {
    fn default() -> Self {
        InteriorOptions {
            fp_tol: 1e-6,
            step: 0.5,
            step_floor: 1e-3,
            max_iterations: 400,
            patience: 15,
            smoothing: 1.0,
            polish_below: 0.3,
            r_min_rel: 0.02,
            delta0_rel: 0.05,
            scaled_init: 0.9,
            init: InteriorInit::InnerParallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorSolution {
    pub h_omega: SupportFunction,
    /// The computed largest set `K̃`.
    pub h_k: SupportFunction,
    pub ring: RingSolution,
    pub tau: f64,
    pub achieved_gradient: Vec<f64>,
    pub fp_residual: f64,
    pub trial_iterations: usize,
    /// Every accepted iterate was pointwise inside the previous one.
    pub monotone_shrink: bool,
    pub residual_history: Vec<f64>,
}

impl InteriorSolution {
    pub fn summary(&self) -> serde_json::Value {
        json!({
            "tau": self.tau,
            "fp_residual": self.fp_residual,
            "trial_iterations": self.trial_iterations,
            "monotone_shrink": self.monotone_shrink,
            "mean_width_k": mean_width(&self.h_k),
            "min_h_k": self.h_k.min_value(),
            "max_h_k": self.h_k.max_value(),
            "ring": self.ring.summary(),
        })
    }

    /// CSV with columns `theta,h_k,h_omega,grad`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,h_k,h_omega,grad")?;
        let g = self.h_k.grid();
        for j in 0..g.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                g.angle(j),
                self.h_k.values()[j],
                self.h_omega.values()[j],
                self.achieved_gradient[j]
            )?;
        }
        Ok(())
    }
}

/// Diagnostics of a run in which the inner body degenerated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Infeasible {
    pub tau: f64,
    pub iterations: usize,
    pub final_inradius: f64,
    pub threshold: f64,
    pub min_gradient_seen: f64,
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteriorOutcome {
    Solved(Box<InteriorSolution>),
    Infeasible(Infeasible),
}

impl InteriorOutcome {
    pub fn solution(&self) -> Option<&InteriorSolution> {
        match self {
            InteriorOutcome::Solved(s) => Some(s),
            InteriorOutcome::Infeasible(_) => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, InteriorOutcome::Infeasible(_))
    }
}

fn check_grid(params: &PLaplaceParams, h: &SupportFunction) -> Result<()> {
    params.validate()?;
    if h.grid() != params.grid {
        return Err(Error::GridMismatch {
            left: params.grid.len(),
            right: h.len(),
        });
    }
    Ok(())
}

/// Solve the interior problem by the shrinking trial iteration with default
/// controls and the given fixed-point tolerance.
pub fn solve_interior(h_omega: &SupportFunction, tau: f64, params: &PLaplaceParams, fp_tol: f64) -> Result<InteriorOutcome> {
    solve_interior_with(
        h_omega,
        tau,
        params,
        &InteriorOptions {
            fp_tol,
            ..Default::default()
        },
    )
}

pub fn solve_interior_with(
    h_omega: &SupportFunction,
    tau: f64,
    params: &PLaplaceParams,
    opts: &InteriorOptions,
) -> Result<InteriorOutcome> {
    check_grid(params, h_omega)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid(format!("tau {tau} must be positive")));
    }
    let (omega, shift) = h_omega.normalized();
    let r_in_omega = inradius_outradius(&omega)?.r_in;
    let threshold = opts.r_min_rel * r_in_omega;
    let mut k = match opts.init {
        InteriorInit::InnerParallel => {
            let delta0 = opts.delta0_rel * r_in_omega;
            let raw: Vec<f64> = omega.values().iter().map(|h| h - delta0).collect();
            project_to_convex(omega.grid(), &raw)?
        }
        InteriorInit::Scaled => omega.scaled(opts.scaled_init),
    };
    let mut field = RingField::profile(&omega, &k, params.p, params.levels)?;
    let mut ctrl = StepControl::new(opts.step, opts.step_floor);
    let mut history = Vec::new();
    let mut polish_below = opts.polish_below;
    let mut monotone_shrink = true;
    let mut min_gradient_seen = f64::INFINITY;

    let infeasible = |it: usize, r: f64, g: f64, history: &Vec<f64>| {
        InteriorOutcome::Infeasible(Infeasible {
            tau,
            iterations: it,
            final_inradius: r,
            threshold,
            min_gradient_seen: g,
            residual_history: history.clone(),
        })
    };

    for it in 0..opts.max_iterations {
        let sol = ring::solve_ring_from(field.clone(), params)?;
        let g = sol.boundary_gradient(Side::Inner);
        let fp = fp_residual(&g, tau);
        let g_min = g.iter().copied().fold(f64::INFINITY, f64::min);
        min_gradient_seen = min_gradient_seen.min(g_min);
        history.push(fp);
        ctrl.record(fp, g_min > tau);

        let done = |sol: RingSolution, g: Vec<f64>, fp: f64, history: Vec<f64>, monotone_shrink: bool| {
            let ring = RingSolution {
                field: sol.field.translated(shift),
                ..sol
            };
            InteriorOutcome::Solved(Box::new(InteriorSolution {
                h_omega: h_omega.clone(),
                h_k: ring.inner(),
                ring,
                tau,
                achieved_gradient: g,
                fp_residual: fp,
                trial_iterations: it + 1,
                monotone_shrink,
                residual_history: history,
            }))
        };

        if fp <= opts.fp_tol {
            return Ok(done(sol, g, fp, history, monotone_shrink));
        }
        if fp <= polish_below {
            if let Ok((polished, _)) =
                ring::solve_free(sol.field.clone(), Closure::InnerFlux { sigma: 1.0 / tau }, 0.0, params)
            {
                let gp = polished.boundary_gradient(Side::Inner);
                let fpp = fp_residual(&gp, tau);
                let below = polished.inner().values().iter().zip(k.values()).all(|(a, b)| *a <= b + 1e-9);
                if fpp <= opts.fp_tol && polished.inner().is_discretely_convex(crate::geometry::TOL_CONVEX) {
                    let mut history = history;
                    history.push(fpp);
                    return Ok(done(polished, gp, fpp, history, monotone_shrink && below));
                }
            }
            polish_below *= 0.1;
        }
        if ctrl.since_best >= opts.patience {
            return Err(Error::TrialDivergence {
                iterations: it + 1,
                residual: ctrl.best,
            });
        }

        let mismatch: Vec<f64> = g.iter().map(|gj| gj / tau - 1.0).collect();
        let mismatch = smooth(&mismatch, opts.smoothing);
        let size = k.mean_value();
        let mut step = ctrl.step;
        let next = loop {
            let raw: Vec<f64> = (0..k.len())
                .map(|j| {
                    let width = omega.values()[j] - k.values()[j];
                    let d = (step * width * mismatch[j]).clamp(-0.9 * width, 0.5 * size);
                    k.values()[j] - d
                })
                .collect();
            let cand = match project_to_convex(k.grid(), &raw) {
                Ok(c) => c,
                Err(Error::DegenerateBody(_)) => return Ok(infeasible(it + 1, 0.0, min_gradient_seen, &history)),
                Err(e) => return Err(e),
            };
            let inside = cand
                .values()
                .iter()
                .zip(k.values())
                .zip(omega.values())
                .all(|((c, kv), o)| o - c > 0.02 * (o - kv));
            // Keep at least a quarter of the curvature radius at every node so
            // that the inner boundary cannot flatten within a single update.
            let rounded = (0..k.len()).all(|j| cand.curvature_radius(j) >= 0.25 * k.curvature_radius(j));
            if inside && (rounded || step < 2.0 * opts.step_floor) {
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
        monotone_shrink &= next.values().iter().zip(k.values()).all(|(a, b)| *a <= b + 1e-12);
        let r_next = match inradius_outradius(&next) {
            Ok(r) => r.r_in,
            Err(_) => 0.0,
        };
        if r_next < threshold {
            return Ok(infeasible(it + 1, r_next, min_gradient_seen, &history));
        }
        field = reshape_field(&sol.field, Side::Inner, next.values());
        if !field.is_strictly_decreasing() {
            field = RingField::profile(&omega, &next, params.p, params.levels)?;
        }
        k = next;
    }
    Err(Error::TrialDivergence {
        iterations: opts.max_iterations,
        residual: ctrl.best,
    })
}

/// Discrete membership test for the subsolution class at gradient `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsolutionReport {
    pub is_subsolution: bool,
    pub min_plaplacian: f64,
    pub sign_tol: f64,
    pub max_inner_gradient: f64,
    pub tau: f64,
    pub grad_tol: f64,
}

/// `Δ_p u ≥ −sign_tol` at all interior nodes and
/// `|Du| ≤ τ (1 + grad_tol)` on the inner level.
pub fn is_subsolution(field: &RingField, tau: f64, p: f64, grad_tol: f64) -> Result<SubsolutionReport> {
    let signs = plaplacian_sign(field, p)?;
    let g = field.boundary_gradient(Side::Inner);
    let gmax = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ok = signs.is_nonnegative() && gmax <= tau * (1.0 + grad_tol) && g.iter().all(|v| *v > 0.0);
    Ok(SubsolutionReport {
        is_subsolution: ok,
        min_plaplacian: signs.min_value(),
        sign_tol: signs.sign_tol,
        max_inner_gradient: gmax,
        tau,
        grad_tol,
    })
}

/// One sample of the solution curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityEntry {
    /// Mean support value of the inner body, `b(K)/2`.
    pub size: f64,
    /// Gradient `τ` of the constant-gradient solution with that inner size.
    pub tau: f64,
    /// A discrete solution exists at this `τ`.
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliConstantResult {
    pub lambda: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub log: Vec<FeasibilityEntry>,
    pub bisect_tol: f64,
    /// Inner size realizing the smallest sampled `τ`.
    pub critical_size: f64,
    pub a_priori: LambdaBounds,
    /// Inner body of the sample realizing `bracket.1`.
    pub critical_set: SupportFunction,
}

impl BernoulliConstantResult {
    pub fn summary(&self) -> serde_json::Value {
        json!({
            "lambda": self.lambda,
            "bracket": [self.bracket.0, self.bracket.1],
            "iterations": self.iterations,
            "bisect_tol": self.bisect_tol,
            "critical_size": self.critical_size,
            "a_priori_bracket": [self.a_priori.lo, self.a_priori.hi],
            "log": self.log,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaOptions {
    pub bisect_tol: f64,
    /// Cap on solution-curve evaluations.
    pub max_evaluations: usize,
    /// Golden-section search continues until the size bracket is below
    /// `min_bracket` times the size of `Ω`, so that the parabola vertex is
    /// fitted on nearby samples.
    pub min_bracket: f64,
}

impl Default for LambdaOptions {
    fn default() -> Self {
        LambdaOptions {
            bisect_tol: DEFAULT_BISECT_TOL,
            max_evaluations: 30,
            min_bracket: 0.02,
        }
    }
}

/// Point of the solution curve: inner body with prescribed mean size and
/// constant inner gradient.
struct Branch<'a> {
    omega: &'a SupportFunction,
    params: &'a PLaplaceParams,
    last: Option<(f64, RingField, f64)>,
    log: Vec<FeasibilityEntry>,
    sets: Vec<(f64, SupportFunction)>,
}

impl Branch<'_> {
    fn eval(&mut self, size: f64) -> Result<f64> {
        let start = match &self.last {
            Some((c_prev, field, sigma)) => {
                let s = size / c_prev;
                let inner: Vec<f64> = field.level_values(field.levels()).iter().map(|h| s * h).collect();
                let f = reshape_field(field, Side::Inner, &inner);
                f.is_strictly_decreasing().then_some((f, *sigma))
            }
            None => None,
        };
        let cold = || -> Result<(RingField, f64)> {
            let k = self.omega.scaled(size / self.omega.mean_value());
            let f = RingField::profile(self.omega, &k, self.params.p, self.params.levels)?;
            let g = radial::interior_gradient(self.omega.mean_value(), self.params.p, size);
            Ok((f, 1.0 / g))
        };
        let attempt = |(f, s): (RingField, f64)| ring::solve_free(f, Closure::InnerMean { mean: size }, s, self.params);
        let result = match start {
            Some(warm) => attempt(warm).or_else(|_| attempt(cold()?)),
            None => attempt(cold()?),
        };
        let (sol, sigma) = result?;
        let tau = 1.0 / sigma;
        self.log.push(FeasibilityEntry {
            size,
            tau,
            feasible: true,
        });
        self.sets.push((size, sol.inner()));
        self.last = Some((size, sol.field, sigma));
        Ok(tau)
    }
}

/// Vertex value of the parabola through three points.
fn parabola_min(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    let d1 = (b.1 - a.1) / (b.0 - a.0);
    let d2 = (c.1 - b.1) / (c.0 - b.0);
    let curv = (d2 - d1) / (c.0 - a.0);
    if !(curv > 0.0) {
        return b.1;
    }
    // Newton form p(x) = a.1 + d1 (x − a.0) + curv (x − a.0)(x − b.0).
    let x = 0.5 * (a.0 + b.0) - d1 / (2.0 * curv);
    a.1 + d1 * (x - a.0) + curv * (x - a.0) * (x - b.0)
}

/// `Λ(Ω)` as the minimum of `τ` along the curve of constant-gradient
/// solutions, parametrized by the mean size `c` of the inner body.
///
/// A coarse downward march in `c` brackets the minimum, golden-section
/// search refines it. `bracket.1` is the smallest `τ` at which a discrete
/// solution was computed, `bracket.0` the vertex of the parabola through the
/// three best samples, and `lambda` their midpoint.
pub fn bernoulli_constant(h_omega: &SupportFunction, params: &PLaplaceParams, opts: &LambdaOptions) -> Result<BernoulliConstantResult> {
    check_grid(params, h_omega)?;
    let (omega, shift) = h_omega.normalized();
    let a_priori = lambda_bounds(&omega, params.p)?;
    let c_omega = omega.mean_value();
    let mut br = Branch {
        omega: &omega,
        params,
        last: None,
        log: Vec::new(),
        sets: Vec::new(),
    };

    // Coarse march: c = 0.9, 0.8, ... times the size of Ω until τ rises.
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut f = 0.9;
    let bracket = loop {
        let c = f * c_omega;
        let tau = br.eval(c)?;
        pts.push((c, tau));
        let n = pts.len();
        if n >= 3 && pts[n - 1].1 > pts[n - 2].1 {
            break (pts[n - 1], pts[n - 2], pts[n - 3]);
        }
        if n >= 2 && pts[n - 1].1 > pts[n - 2].1 {
            // Minimum above 0.9 c_Ω: only possible for very thin data.
            return Err(Error::BracketInversion(format!(
                "τ increases from the first sample on (c = {:.4e} → {:.4e})",
                pts[0].0, pts[1].0
            )));
        }
        f = if f > 0.15 { f - 0.1 } else { 0.5 * f };
        if f < 1e-3 || br.log.len() >= opts.max_evaluations {
            return Err(Error::BracketInversion("τ did not attain a minimum along the solution curve".into()));
        }
    };
    // Golden section on (a, c) with interior point b, a < b < c in size.
    let (mut a, mut b, mut c) = bracket;
    let golden = 0.381_966_011_250_105_1;
    let evaluate = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
        let hi = b.1;
        let lo = parabola_min(a, b, c).min(hi);
        (lo, hi)
    };
    let (mut lo, mut hi) = evaluate(a, b, c);
    while (hi - lo > opts.bisect_tol * hi || c.0 - a.0 > opts.min_bracket * c_omega) && br.log.len() < opts.max_evaluations {
        let x = if (b.0 - a.0) > (c.0 - b.0) {
            b.0 - golden * (b.0 - a.0)
        } else {
            b.0 + golden * (c.0 - b.0)
        };
        let t = br.eval(x)?;
        if t > a.1.max(c.1) {
            return Err(Error::BracketInversion(format!(
                "sample τ({x:.6e}) = {t:.6e} exceeds both bracket ends {:.6e}, {:.6e}",
                a.1, c.1
            )));
        }
        let p = (x, t);
        if x < b.0 {
            if t < b.1 {
                c = b;
                b = p;
            } else {
                a = p;
            }
        } else if t < b.1 {
            a = b;
            b = p;
        } else {
            c = p;
        }
        (lo, hi) = evaluate(a, b, c);
    }
    let critical = br
        .sets
        .iter()
        .find(|(s, _)| *s == b.0)
        .map(|(_, k)| k.translated(shift))
        .expect("best sample is logged");
    Ok(BernoulliConstantResult {
        lambda: 0.5 * (lo + hi),
        bracket: (lo, hi),
        iterations: br.log.len(),
        log: br.log,
        bisect_tol: opts.bisect_tol,
        critical_size: b.0,
        a_priori,
        critical_set: critical,
    })
}

/// Uniqueness at `τ = Λ(Ω)`: run the shrinking iteration from the inner
/// parallel body and from `0.9 · Ω` and compare the resulting sets.
///
/// The iteration runs at `bracket.1`, the smallest gradient for which a
/// discrete solution exists.
pub fn uniqueness_probe(
    h_omega: &SupportFunction,
    params: &PLaplaceParams,
    lambda: &BernoulliConstantResult,
    opts: &InteriorOptions,
    uniq_tol: Option<f64>,
) -> Result<CheckReport> {
    let tau = lambda.bracket.1;
    let builder = CheckReport::builder(
        "uniqueness",
        json!({"p": params.p, "M": params.grid.len(), "L": params.levels, "tau": tau}),
    );
    let mut sets = Vec::new();
    for init in [InteriorInit::InnerParallel, InteriorInit::Scaled] {
        let o = InteriorOptions { init, ..*opts };
        match solve_interior_with(h_omega, tau, params, &o)? {
            InteriorOutcome::Solved(s) => sets.push(s),
            InteriorOutcome::Infeasible(inf) => {
                return Err(Error::InfeasibleTau {
                    tau: inf.tau,
                    lambda: lambda.lambda,
                })
            }
        }
    }
    let d = crate::geometry::hausdorff_distance(&sets[0].h_k, &sets[1].h_k)?;
    let tol = uniq_tol.unwrap_or(DEFAULT_UNIQ_TOL_REL * h_omega.max_value());
    let crit = crate::geometry::hausdorff_distance(&sets[0].h_k, &lambda.critical_set)?;
    Ok(builder
        .quantity("lambda", lambda.lambda)
        .quantity("hausdorff_between_runs", d)
        .quantity("hausdorff_to_critical_sample", crit)
        .quantity("mean_width_k_parallel_init", mean_width(&sets[0].h_k))
        .quantity("mean_width_k_scaled_init", mean_width(&sets[1].h_k))
        .quantity("fp_residual_parallel_init", sets[0].fp_residual)
        .quantity("fp_residual_scaled_init", sets[1].fp_residual)
        .tolerance("uniq_tol", tol)
        .tolerance("fp_tol", opts.fp_tol)
        .margin("distance", d, tol, Rule::NearZero)
        .finish())
}
