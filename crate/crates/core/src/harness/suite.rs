//! Named verification suites and their JSON configuration.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::*;
use crate::exterior::solve_exterior_with;
use crate::ring::{solve_ring, DEFAULT_LEVELS, DEFAULT_NEWTON_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Bm,
    Urysohn,
    Hadwiger,
    Homogeneity,
    ExteriorInclusion,
    InteriorInclusion,
    Uniqueness,
    Monotonicity,
    Subsolution,
    FlucherRumpf,
    All,
}

impl Suite {
    pub const EACH: [Suite; 10] = [
        Suite::Bm,
        Suite::Urysohn,
        Suite::Hadwiger,
        Suite::Homogeneity,
        Suite::ExteriorInclusion,
        Suite::InteriorInclusion,
        Suite::Uniqueness,
        Suite::Monotonicity,
        Suite::Subsolution,
        Suite::FlucherRumpf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Bm => "bm",
            Suite::Urysohn => "urysohn",
            Suite::Hadwiger => "hadwiger",
            Suite::Homogeneity => "homogeneity",
            Suite::ExteriorInclusion => "exterior-inclusion",
            Suite::InteriorInclusion => "interior-inclusion",
            Suite::Uniqueness => "uniqueness",
            Suite::Monotonicity => "monotonicity",
            Suite::Subsolution => "subsolution",
            Suite::FlucherRumpf => "flucher-rumpf",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::EACH.iter().map(|x| x.name()).collect();
                invalid(format!("unknown suite '{s}' (expected one of {}, all)", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyPair {
    pub omega0: BodySpec,
    pub omega1: BodySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub body: BodySpec,
    pub alpha: f64,
}

/// Data of an inclusion check; `body0`, `body1` are the fixed bodies (`K`
/// for the exterior problem, `Ω` for the interior one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionCase {
    pub body0: BodySpec,
    pub body1: BodySpec,
    pub tau0: f64,
    pub tau1: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingCase {
    pub outer: BodySpec,
    pub inner: BodySpec,
}

/// Configuration of a suite run. Every field is optional; missing fields
/// fall back to the built-in named configuration of the suite.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub newton_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fp_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bisect_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<BodyPair>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bodies: Option<Vec<BodySpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scalings: Option<Vec<Scaling>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exterior_cases: Option<Vec<InclusionCase>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interior_cases: Option<Vec<InclusionCase>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rings: Option<Vec<RingCase>>,
}

fn disk1() -> BodySpec {
    BodySpec::disk(1.0)
}

fn ellipse() -> BodySpec {
    BodySpec::ellipse(2.0, 1.0)
}

fn case(body0: BodySpec, body1: BodySpec, tau0: f64, tau1: f64, lambda: f64) -> InclusionCase {
    InclusionCase {
        body0,
        body1,
        tau0,
        tau1,
        lambda,
    }
}

impl SuiteConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn params(&self) -> Result<PLaplaceParams> {
        let mut p = PLaplaceParams::new(
            2.0,
            self.m.unwrap_or(crate::geometry::DEFAULT_DIRECTIONS),
            self.l.unwrap_or(DEFAULT_LEVELS),
        )?;
        p.newton_tol = self.newton_tol.unwrap_or(DEFAULT_NEWTON_TOL);
        p.validate()?;
        Ok(p)
    }

    pub fn harness(&self) -> Result<Harness> {
        let h = Harness::new(self.params()?);
        let fp = self.fp_tol.unwrap_or(h.interior_opts.fp_tol);
        let bt = self.bisect_tol.unwrap_or(h.lambda_opts.bisect_tol);
        Ok(h.with_tolerances(fp, bt))
    }

    pub fn exponents(&self, suite: Suite) -> Vec<f64> {
        self.exponents.clone().unwrap_or_else(|| match suite {
            Suite::Uniqueness => vec![2.0, 3.0],
            _ => vec![2.0],
        })
    }

    pub fn pairs(&self) -> Vec<BodyPair> {
        self.pairs.clone().unwrap_or_else(|| {
            [
                (disk1(), ellipse()),
                (ellipse(), BodySpec::rounded_square()),
                (disk1(), BodySpec::disk(2.0)),
            ]
            .into_iter()
            .map(|(omega0, omega1)| BodyPair { omega0, omega1 })
            .collect()
        })
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.lambdas.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.75])
    }

    pub fn bodies(&self, suite: Suite) -> Vec<BodySpec> {
        self.bodies.clone().unwrap_or_else(|| match suite {
            Suite::Hadwiger => vec![ellipse()],
            Suite::Uniqueness => vec![disk1(), ellipse()],
            Suite::Urysohn => vec![disk1(), BodySpec::disk(2.0), ellipse(), BodySpec::rounded_square()],
            _ => vec![disk1(), ellipse(), BodySpec::rounded_square()],
        })
    }

    pub fn scalings(&self) -> Vec<Scaling> {
        self.scalings.clone().unwrap_or_else(|| {
            [(disk1(), 2.0), (ellipse(), 3.0), (disk1(), 1.0)]
                .into_iter()
                .map(|(body, alpha)| Scaling { body, alpha })
                .collect()
        })
    }

    pub fn exterior_cases(&self) -> Vec<InclusionCase> {
        self.exterior_cases.clone().unwrap_or_else(|| {
            let t = 1.0 / (2.0 * 2f64.ln());
            vec![
                case(disk1(), disk1(), t, t, 0.5),
                case(disk1(), BodySpec::disk(2.0), t, 0.5 * t, 0.5),
                case(disk1(), ellipse(), 1.0, 1.0, 0.5),
            ]
        })
    }

    pub fn interior_cases(&self) -> Vec<InclusionCase> {
        self.interior_cases.clone().unwrap_or_else(|| {
            vec![
                case(disk1(), disk1(), 4.0, 4.0, 0.5),
                case(disk1(), BodySpec::disk(2.0), 4.0, 2.0, 0.5),
                case(disk1(), ellipse(), 4.0, 4.0, 0.5),
            ]
        })
    }

    pub fn rings(&self) -> Vec<RingCase> {
        self.rings.clone().unwrap_or_else(|| {
            [
                (disk1(), BodySpec::disk(0.5)),
                (ellipse(), BodySpec::ellipse(0.8, 0.3).rotated(0.5)),
                (BodySpec::rounded_square(), BodySpec::disk(0.3)),
            ]
            .into_iter()
            .map(|(outer, inner)| RingCase { outer, inner })
            .collect()
        })
    }
}

type Task = Box<dyn Fn() -> Vec<CheckReport> + Send + Sync>;

fn guarded(name: &'static str, inputs: serde_json::Value, f: impl Fn() -> Result<CheckReport>) -> CheckReport {
    f().unwrap_or_else(|e| error_report(name, inputs, &e))
}

/// Converged ring solutions of the monotonicity and subsolution corpus,
/// labelled, with the interior gradient when the ring is an interior
/// solution.
fn corpus(h: &Harness, cfg: &SuiteConfig, p: f64) -> Vec<Result<(String, RingSolution, Option<f64>)>> {
    let params = h.params_for(p);
    let mut out = Vec::new();
    for r in cfg.rings() {
        let label = format!("ring {}", serde_json::to_string(&r).unwrap_or_default());
        out.push((|| {
            let outer = sample_support(&r.outer, params.grid)?;
            let inner = sample_support(&r.inner, params.grid)?;
            Ok((label, solve_ring(&outer, &inner, &params)?, None))
        })());
    }
    let mut seen = BTreeMap::new();
    for c in cfg.exterior_cases() {
        for (body, tau) in [(c.body0.clone(), c.tau0), (c.body1.clone(), c.tau1)] {
            let label = format!("exterior {} tau={tau:e}", serde_json::to_string(&body).unwrap_or_default());
            if seen.insert(label.clone(), ()).is_some() {
                continue;
            }
            out.push((|| {
                let k = sample_support(&body, params.grid)?;
                Ok((label, solve_exterior_with(&k, tau, &params, &h.exterior_opts)?.ring, None))
            })());
        }
    }
    for c in cfg.interior_cases() {
        for (body, tau) in [(c.body0.clone(), c.tau0), (c.body1.clone(), c.tau1)] {
            let label = format!("interior {} tau={tau:e}", serde_json::to_string(&body).unwrap_or_default());
            if seen.insert(label.clone(), ()).is_some() {
                continue;
            }
            out.push(maximal_set(h, &body, tau, p).map(|s| (label, s.ring, Some(tau))));
        }
    }
    out
}

fn tasks(h: &Arc<Harness>, cfg: &SuiteConfig, suite: Suite) -> Vec<Task> {
    let mut out: Vec<Task> = Vec::new();
    match suite {
        Suite::All => {
            for s in Suite::EACH {
                out.extend(tasks(h, cfg, s));
            }
        }
        Suite::Bm => {
            for p in cfg.exponents(suite) {
                for pair in cfg.pairs() {
                    for lam in cfg.lambdas() {
                        let (h, pair) = (h.clone(), pair.clone());
                        out.push(Box::new(move || {
                            vec![guarded("bm", json!({"pair": pair, "lambda": lam, "p": p}), || {
                                bm_check(&h, &pair.omega0, &pair.omega1, lam, p)
                            })]
                        }));
                    }
                }
            }
        }
        Suite::Urysohn | Suite::FlucherRumpf | Suite::Uniqueness | Suite::Hadwiger => {
            let n_max = cfg.n_max.unwrap_or(8);
            let period = cfg.period;
            for p in cfg.exponents(suite) {
                for body in cfg.bodies(suite) {
                    let h = h.clone();
                    out.push(Box::new(move || {
                        let inputs = json!({"omega": body, "p": p});
                        vec![match suite {
                            Suite::Urysohn => guarded("urysohn", inputs, || urysohn_check(&h, &body, p)),
                            Suite::FlucherRumpf => guarded("flucher_rumpf", inputs, || flucher_rumpf_probe(&h, &body, p)),
                            Suite::Uniqueness => guarded("uniqueness", inputs, || uniqueness_check(&h, &body, p)),
                            _ => guarded("hadwiger", inputs, || hadwiger_sequence(&h, &body, p, n_max, period)),
                        }]
                    }));
                }
            }
        }
        Suite::Homogeneity => {
            for p in cfg.exponents(suite) {
                for s in cfg.scalings() {
                    let h = h.clone();
                    out.push(Box::new(move || {
                        vec![guarded("homogeneity", json!({"scaling": s, "p": p}), || {
                            homogeneity_check(&h, &s.body, s.alpha, p)
                        })]
                    }));
                }
            }
        }
        Suite::ExteriorInclusion | Suite::InteriorInclusion => {
            let cases = if suite == Suite::ExteriorInclusion {
                cfg.exterior_cases()
            } else {
                cfg.interior_cases()
            };
            for p in cfg.exponents(suite) {
                for c in cases.clone() {
                    let h = h.clone();
                    out.push(Box::new(move || {
                        let inputs = json!({"case": c, "p": p});
                        vec![if suite == Suite::ExteriorInclusion {
                            guarded("exterior_inclusion", inputs, || {
                                exterior_inclusion_check(&h, &c.body0, &c.body1, c.tau0, c.tau1, c.lambda, p)
                            })
                        } else {
                            guarded("interior_inclusion", inputs, || {
                                largest_set_inclusion_check(&h, &c.body0, &c.body1, c.tau0, c.tau1, c.lambda, p)
                            })
                        }]
                    }));
                }
            }
        }
        Suite::Monotonicity | Suite::Subsolution => {
            for p in cfg.exponents(suite) {
                let (h, cfg) = (h.clone(), cfg.clone());
                out.push(Box::new(move || {
                    let sols = corpus(&h, &cfg, p);
                    let mut reports = Vec::new();
                    let mut ok = Vec::new();
                    for s in sols {
                        match s {
                            Ok(x) => ok.push(x),
                            Err(e) => reports.push(error_report(suite.name(), json!({"p": p}), &e)),
                        }
                    }
                    if suite == Suite::Monotonicity {
                        for (label, sol, _) in &ok {
                            reports.push(guarded("monotonicity", json!({"solution": label}), || {
                                let mut r = gradient_monotonicity_check(sol, None)?;
                                if let serde_json::Value::Object(m) = &mut r.inputs {
                                    m.insert("solution".into(), json!(label));
                                }
                                Ok(r)
                            }));
                        }
                    } else {
                        for (i, a) in ok.iter().enumerate() {
                            for b in &ok[i + 1..] {
                                // Combine rings of the same kind only.
                                let kind = |l: &str| l.split(' ').next().unwrap_or("").to_string();
                                if kind(&a.0) != kind(&b.0) {
                                    continue;
                                }
                                let taus = a.2.zip(b.2);
                                for lam in cfg.lambdas() {
                                    let label = format!("{} + {}", a.0, b.0);
                                    reports.push(guarded("subsolution", json!({"pair": label, "lambda": lam}), || {
                                        subsolution_check(&a.1, &b.1, lam, taus, &label)
                                    }));
                                }
                            }
                        }
                    }
                    reports
                }));
            }
        }
    }
    out
}

/// Run a named suite. Checks run on `jobs` worker threads (`0` uses the
/// rayon default); the report order is that of the configuration.
/// Solver failures become failed reports instead of aborting the batch.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig, jobs: usize) -> Result<Vec<CheckReport>> {
    let h = Arc::new(cfg.harness()?);
    let work = tasks(&h, cfg, suite);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(|| work.par_iter().map(|t| t()).collect::<Vec<_>>().concat()))
}
