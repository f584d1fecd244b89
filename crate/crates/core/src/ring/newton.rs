use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Pair, SparseColMat, SymbolicSparseColMat};
use rayon::prelude::*;

use super::stencil::{inner_slope, outer_slope, Local};
use super::{PLaplaceParams, RingField};
use crate::error::{Error, Result};

/// Which boundary rows are unknown and how they are closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Closure {
    /// Both boundary levels prescribed.
    Dirichlet,
    /// Outer level free with `h_t(·, 0) = −sigma`, i.e. `|Du| = 1/sigma` there.
    OuterFlux { sigma: f64 },
    /// Inner level free with `h_t(·, 1) = −sigma`.
    InnerFlux { sigma: f64 },
    /// Inner level free with constant but unknown slope `−sigma` and a
    /// prescribed mean support value.
    InnerMean { mean: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub field: RingField,
    pub sigma: f64,
    pub residual: f64,
    pub iterations: usize,
}

const MIN_DAMPING: f64 = 1e-6;
const FRACTION_TO_BOUNDARY: f64 = 0.1;

struct Layout {
    m: usize,
    l: usize,
    k0: usize,
    k1: usize,
    closure: Closure,
}

impl Layout {
    fn new(m: usize, l: usize, closure: Closure) -> Self {
        let (k0, k1) = match closure {
            Closure::Dirichlet => (1, l - 1),
            Closure::OuterFlux { .. } => (0, l - 1),
            Closure::InnerFlux { .. } | Closure::InnerMean { .. } => (1, l),
        };
        Layout {
            m,
            l,
            k0,
            k1,
            closure,
        }
    }

    fn free_sigma(&self) -> bool {
        matches!(self.closure, Closure::InnerMean { .. })
    }

    fn nodes(&self) -> usize {
        (self.k1 - self.k0 + 1) * self.m
    }

    fn len(&self) -> usize {
        self.nodes() + usize::from(self.free_sigma())
    }

    fn col(&self, j: usize, k: usize) -> Option<usize> {
        (self.k0..=self.k1)
            .contains(&k)
            .then(|| (k - self.k0) * self.m + j)
    }

    fn node(&self, row: usize) -> (usize, usize) {
        (row % self.m, self.k0 + row / self.m)
    }

    fn wrap(&self, j: usize, dj: i8) -> usize {
        (j as i64 + dj as i64).rem_euclid(self.m as i64) as usize
    }
}

/// Residual scaling factors frozen at one iterate.
#[derive(Debug, Clone, Copy)]
struct Scales {
    pde: f64,
    flux: f64,
    mean: f64,
}

struct System<'a> {
    layout: Layout,
    params: &'a PLaplaceParams,
    delta_curv: f64,
}

impl System<'_> {
    fn row_residual(&self, field: &RingField, sigma: f64, row: usize) -> f64 {
        let lay = &self.layout;
        if row == lay.nodes() {
            let mean = match lay.closure {
                Closure::InnerMean { mean } => mean,
                _ => unreachable!(),
            };
            return field.level_values(lay.l).iter().sum::<f64>() / lay.m as f64 - mean;
        }
        let (j, k) = lay.node(row);
        if k == 0 {
            outer_slope(field, j) + sigma
        } else if k == lay.l {
            inner_slope(field, j) + sigma
        } else {
            Local::at(field, j, k).residual(self.params.p)
        }
    }

    fn residual(&self, field: &RingField, sigma: f64) -> Vec<f64> {
        (0..self.layout.len())
            .into_par_iter()
            .map(|row| self.row_residual(field, sigma, row))
            .collect()
    }

    fn scales(&self, field: &RingField) -> Scales {
        let slope = field.max_abs_slope();
        Scales {
            pde: 1.0 / slope.powi(2).max(1.0),
            flux: 1.0 / slope.max(1.0),
            mean: 1.0 / field.max_abs_value().max(1.0),
        }
    }

    fn row_scale(&self, s: Scales, row: usize) -> f64 {
        if row == self.layout.nodes() {
            return s.mean;
        }
        let (_, k) = self.layout.node(row);
        if k == 0 || k == self.layout.l {
            s.flux
        } else {
            s.pde
        }
    }

    /// `(max-norm, squared 2-norm)` of the scaled residual.
    fn norms(&self, r: &[f64], s: Scales) -> (f64, f64) {
        r.iter().enumerate().fold((0.0f64, 0.0f64), |(mx, sq), (row, v)| {
            let w = (v * self.row_scale(s, row)).abs();
            (mx.max(w), sq + w * w)
        })
    }

    /// Columns and values of one Jacobian row; the column order depends only
    /// on the layout, so the sparsity pattern is fixed.
    fn row_entries(&self, field: &RingField, row: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let lay = &self.layout;
        if row == lay.nodes() {
            let w = 1.0 / lay.m as f64;
            out.extend((0..lay.m).map(|j| (lay.col(j, lay.l).unwrap(), w)));
            return;
        }
        let (j, k) = lay.node(row);
        let dt = field.dt();
        let push = |out: &mut Vec<(usize, f64)>, kk: usize, v: f64| {
            if let Some(c) = lay.col(j, kk) {
                out.push((c, v));
            }
        };
        if k == 0 {
            push(out, 0, -3.0 / (2.0 * dt));
            push(out, 1, 4.0 / (2.0 * dt));
            push(out, 2, -1.0 / (2.0 * dt));
        } else if k == lay.l {
            push(out, lay.l, 3.0 / (2.0 * dt));
            push(out, lay.l - 1, -4.0 / (2.0 * dt));
            push(out, lay.l - 2, 1.0 / (2.0 * dt));
            if lay.free_sigma() {
                out.push((lay.nodes(), 1.0));
            }
        } else {
            let local = Local::at(field, j, k);
            for (dj, dk, v) in local.jacobian(self.params.p, dt, field.grid().spacing()) {
                let kk = (k as i64 + dk as i64) as usize;
                if let Some(c) = lay.col(lay.wrap(j, dj), kk) {
                    out.push((c, v));
                }
            }
        }
    }

    fn jacobian_rows(&self, field: &RingField) -> Vec<Vec<(usize, f64)>> {
        (0..self.layout.len())
            .into_par_iter()
            .map_init(Vec::new, |buf, row| {
                self.row_entries(field, row, buf);
                buf.clone()
            })
            .collect()
    }

    fn apply(&self, field: &RingField, sigma: f64, dx: &[f64], alpha: f64) -> (RingField, f64) {
        let mut next = field.clone();
        for row in 0..self.layout.nodes() {
            let (j, k) = self.layout.node(row);
            next.set(j, k, field.get(j, k) + alpha * dx[row]);
        }
        let sigma = if self.layout.free_sigma() {
            sigma + alpha * dx[self.layout.nodes()]
        } else {
            sigma
        };
        (next, sigma)
    }

    /// `None` if admissible, otherwise the violated condition.
    /// Admissibility of `field`; with `from` given, a step may also not cut
    /// any curvature radius on a free level below a tenth of its value in
    /// `from`, which keeps iterates away from the convexity boundary.
    fn inadmissible(&self, field: &RingField, sigma: f64, from: Option<&RingField>) -> Option<Error> {
        if self.layout.free_sigma() && !(sigma > 0.0) {
            return Some(Error::NewtonDivergence {
                iterations: 0,
                residual: f64::INFINITY,
            });
        }
        let lay = &self.layout;
        for k in lay.k0..=lay.k1 {
            let slice = field.level(k);
            let (r, j) = slice.min_curvature_radius();
            if !(r >= self.delta_curv) {
                return Some(Error::ConvexityLoss {
                    radius: r,
                    direction: j,
                    level: k,
                });
            }
            if let Some(prev) = from {
                let before = prev.level(k);
                if let Some(j) = (0..slice.len())
                    .find(|&j| slice.curvature_radius(j) < FRACTION_TO_BOUNDARY * before.curvature_radius(j))
                {
                    return Some(Error::ConvexityLoss {
                        radius: slice.curvature_radius(j),
                        direction: j,
                        level: k,
                    });
                }
            }
        }
        if !field.is_strictly_decreasing() {
            return Some(Error::GridTooCoarse(
                "support values are not strictly decreasing in t".into(),
            ));
        }
        None
    }
}

/// Damped Newton iteration for the ring equations under `closure`, starting
/// from `field` (and `sigma0` when the slope is an unknown).
const DILATION_START: f64 = 0.5;
const DILATION_FACTOR: f64 = 0.6;
const DILATION_STEPS: usize = 60;

/// Newton solve; if the iterates lose convexity and level 0 is prescribed,
/// retry by continuation from the outer data dilated by a disk.
pub(crate) fn solve(
    field: RingField,
    closure: Closure,
    sigma0: f64,
    params: &PLaplaceParams,
) -> Result<Outcome> {
    match solve_direct(field.clone(), closure, sigma0, params) {
        Err(err @ Error::ConvexityLoss { .. }) if !matches!(closure, Closure::OuterFlux { .. }) => {
            dilation_continuation(field, closure, sigma0, params).map_err(|_| err)
        }
        other => other,
    }
}

/// Adds `rho (1 − t_k)` to every level, which dilates the outer data by a
/// disk of radius `rho` and leaves the inner level unchanged.
fn dilate(field: &RingField, rho: f64) -> RingField {
    let m = field.grid().len();
    let l = field.levels();
    let mut v = field.values().to_vec();
    for k in 0..=l {
        let w = rho * (1.0 - field.t(k));
        for x in &mut v[k * m..(k + 1) * m] {
            *x += w;
        }
    }
    RingField::new(field.grid(), l, v).expect("dilation keeps the field finite")
}

fn dilation_continuation(field: RingField, closure: Closure, sigma0: f64, params: &PLaplaceParams) -> Result<Outcome> {
    let outer = field.level_values(0);
    let mut rho = DILATION_START * outer.iter().sum::<f64>() / outer.len() as f64;
    let floor = 1e-3 * rho;
    let start = RingField::profile(&dilate(&field, rho).outer(), &field.inner(), params.p, field.levels())?;
    let mut current = solve_direct(start, closure, sigma0, params)?;
    let mut total = current.iterations;
    let mut factor = DILATION_FACTOR;
    for _ in 0..DILATION_STEPS {
        let next = if rho * factor < floor { 0.0 } else { rho * factor };
        let start = dilate(&current.field, next - rho);
        match solve_direct(start, closure, current.sigma, params) {
            Ok(out) => {
                total += out.iterations;
                current = out;
                rho = next;
                if rho == 0.0 {
                    current.iterations = total;
                    return Ok(current);
                }
                factor = (factor * factor).max(DILATION_FACTOR);
            }
            Err(e) => {
                factor = factor.sqrt();
                if factor > 0.995 {
                    return Err(e);
                }
            }
        }
    }
    Err(Error::ConvexityLoss {
        radius: f64::NAN,
        direction: 0,
        level: 0,
    })
}

fn solve_direct(
    field: RingField,
    closure: Closure,
    sigma0: f64,
    params: &PLaplaceParams,
) -> Result<Outcome> {
    let m = field.grid().len();
    let l = field.levels();
    let layout = Layout::new(m, l, closure);
    let delta_curv = 1e-6 * field.max_abs_value();
    let sys = System {
        layout,
        params,
        delta_curv,
    };
    let n = sys.layout.len();
    let sigma0 = match closure {
        Closure::OuterFlux { sigma } | Closure::InnerFlux { sigma } => sigma,
        _ => sigma0,
    };

    if let Some(err) = sys.inadmissible(&field, sigma0, None) {
        return Err(err);
    }

    let mut field = field;
    let mut sigma = sigma0;
    let mut scales = sys.scales(&field);
    let mut r = sys.residual(&field, sigma);
    let (mut norm, mut merit) = sys.norms(&r, scales);

    let mut symbolic: Option<(SymbolicSparseColMat<usize>, faer::sparse::Argsort<usize>, SymbolicLu<usize>)> =
        None;

    for it in 0..params.max_newton {
        if norm <= params.newton_tol {
            return Ok(Outcome {
                field,
                sigma,
                residual: norm,
                iterations: it,
            });
        }
        let rows = sys.jacobian_rows(&field);
        if symbolic.is_none() {
            let idx: Vec<Pair<usize, usize>> = rows
                .iter()
                .enumerate()
                .flat_map(|(i, row)| row.iter().map(move |&(c, _)| Pair::new(i, c)))
                .collect();
            let (sym, argsort) = SymbolicSparseColMat::try_new_from_indices(n, n, &idx)
                .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
            let lu = SymbolicLu::try_new(sym.as_ref())
                .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
            symbolic = Some((sym, argsort, lu));
        }
        let (sym, argsort, sym_lu) = symbolic.as_ref().unwrap();
        let vals: Vec<f64> = rows.iter().flat_map(|row| row.iter().map(|&(_, v)| v)).collect();
        let jac = SparseColMat::new_from_argsort(sym.clone(), argsort, &vals)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let lu = Lu::try_new_with_symbolic(sym_lu.clone(), jac.as_ref())
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let rhs = Col::<f64>::from_fn(n, |i| -r[i]);
        let step = lu.solve(&rhs);
        let dx: Vec<f64> = (0..n).map(|i| step[i]).collect();
        if dx.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("singular Jacobian".into()));
        }

        let mut alpha = params.damping;
        let mut last_violation;
        loop {
            let (cand, cand_sigma) = sys.apply(&field, sigma, &dx, alpha);
            last_violation = sys.inadmissible(&cand, cand_sigma, Some(&field));
            if last_violation.is_none() {
                let cr = sys.residual(&cand, cand_sigma);
                let (_, cand_merit) = sys.norms(&cr, scales);
                if cand_merit < merit {
                    field = cand;
                    sigma = cand_sigma;
                    r = cr;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < MIN_DAMPING {
                return Err(match last_violation {
                    Some(e @ Error::ConvexityLoss { .. }) => e,
                    _ => Error::NewtonDivergence {
                        iterations: it + 1,
                        residual: norm,
                    },
                });
            }
        }
        scales = sys.scales(&field);
        (norm, merit) = sys.norms(&r, scales);
    }
    if norm <= params.newton_tol {
        return Ok(Outcome {
            field,
            sigma,
            residual: norm,
            iterations: params.max_newton,
        });
    }
    Err(Error::NewtonDivergence {
        iterations: params.max_newton,
        residual: norm,
    })
}
