//! Feasibility restoration: Levenberg–Marquardt on `min ‖c(x)‖²`.

use std::fmt;

use crate::driver::SolverConfig;
use crate::filter::Filter;
use crate::kernels::{factorize_jacobian, kkt_quantities, normal_step, normal_step_condition};
use crate::problem::{central_step, EvalCounters, EvaluatedPoint, Matrix, ProblemDef, Request, Vector};

/// Why restoration was entered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RestorationTrigger {
    /// The normal step violated its bound for this `σ`; the restored point
    /// must satisfy the bound.
    NormalStep { sigma: f64 },
    /// Backtracking fell below `α_min`.
    LineSearch,
    /// The Jacobian at the current point is rank deficient.
    RankDeficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestorationStatus {
    Restored,
    InfeasibleStationary,
    BudgetExhausted,
}

impl fmt::Display for RestorationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RestorationStatus::Restored => "restored",
            RestorationStatus::InfeasibleStationary => "infeasible-stationary",
            RestorationStatus::BudgetExhausted => "budget-exhausted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepKind {
    /// Minimum-norm Gauss–Newton step.
    GaussNewton,
    /// Levenberg–Marquardt step with the given damping.
    Damped(f64),
    /// Step along a direction of negative curvature of `½‖c‖²`.
    Curvature,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepKind::GaussNewton => f.write_str("gauss-newton"),
            StepKind::Damped(nu) => write!(f, "damped({nu:e})"),
            StepKind::Curvature => f.write_str("curvature"),
        }
    }
}

/// One accepted inner step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestorationStep {
    pub iteration: usize,
    pub h: f64,
    pub kind: StepKind,
}

#[derive(Debug, Clone)]
pub struct RestorationResult {
    pub status: RestorationStatus,
    /// Last inner iterate (the restored point on success).
    pub x_new: Vector,
    /// Full evaluation at `x_new`, present when restored.
    pub point: Option<EvaluatedPoint>,
    pub inner_iterations: usize,
    pub h_final: f64,
    pub diagnostic: Option<String>,
    pub trace: Vec<RestorationStep>,
}

/// Decrease `h` from `x_start` until the point is acceptable to `filter`
/// with the margins holding against every entry.
///
/// `known` may carry `(c, A)` already evaluated at `x_start`. The objective
/// and its gradient are evaluated only for candidates that pass the
/// infeasibility tests.
pub fn restore(
    problem: &ProblemDef,
    x_start: &Vector,
    known: Option<(Vector, Matrix)>,
    filter: &Filter,
    counters: &mut EvalCounters,
    cfg: &SolverConfig,
    trigger: RestorationTrigger,
) -> RestorationResult {
    let mut x = x_start.clone();
    let mut trace = Vec::new();
    let finish = |status, x: Vector, point, iters, h, diagnostic: Option<String>, trace| RestorationResult {
        status,
        x_new: x,
        point,
        inner_iterations: iters,
        h_final: h,
        diagnostic,
        trace,
    };

    let (mut c, mut a) = match known {
        Some(pair) => pair,
        None => match problem.evaluate(&x, Request::C | Request::A, counters) {
            Ok(ev) => (ev.c.expect("requested"), ev.a.expect("requested")),
            Err(e) => {
                return finish(
                    RestorationStatus::BudgetExhausted,
                    x,
                    None,
                    0,
                    f64::NAN,
                    Some(format!("evaluation failed at start: {e}")),
                    trace,
                )
            }
        },
    };
    let mut damping = None::<f64>;
    let mut iter = 0;
    let mut slow = false;
    loop {
        let h = c.norm();
        if let Some(point) = candidate(problem, &x, &c, &a, filter, counters, cfg, trigger) {
            return finish(RestorationStatus::Restored, x, Some(point), iter, h, None, trace);
        }
        if iter >= cfg.restoration_max_iter {
            return finish(
                RestorationStatus::BudgetExhausted,
                x,
                None,
                iter,
                h,
                Some(format!("inner iteration budget {} reached", cfg.restoration_max_iter)),
                trace,
            );
        }
        let grad = a.tr_mul(&c);
        let stationary = h > cfg.epsilon && grad.norm() <= 1e-10 * (1.0 + h);
        let mut step = None;
        if stationary || slow {
            step = curvature_step(problem, &x, h, counters).map(|(xn, cn)| (xn, cn, StepKind::Curvature));
            if step.is_none() && stationary {
                return finish(
                    RestorationStatus::InfeasibleStationary,
                    x,
                    None,
                    iter,
                    h,
                    Some(format!("‖Aᵀc‖ = {:e} with h = {:e}", grad.norm(), h)),
                    trace,
                );
            }
        }
        if step.is_none() {
            step = inner_step(problem, &x, &c, &a, &grad, &mut damping, counters);
        }
        let Some((x_next, c_next, kind)) = step else {
            return finish(
                RestorationStatus::BudgetExhausted,
                x,
                None,
                iter,
                h,
                Some("no damping level decreases h".to_owned()),
                trace,
            );
        };
        let a_next = match problem.evaluate(&x_next, Request::A, counters) {
            Ok(ev) => ev.a.expect("requested"),
            Err(e) => {
                return finish(
                    RestorationStatus::BudgetExhausted,
                    x,
                    None,
                    iter,
                    h,
                    Some(format!("Jacobian evaluation failed: {e}")),
                    trace,
                )
            }
        };
        iter += 1;
        x = x_next;
        c = c_next;
        a = a_next;
        let h_next = c.norm();
        slow = h_next > 0.9 * h;
        trace.push(RestorationStep {
            iteration: iter,
            h: h_next,
            kind,
        });
    }
}

/// Returns the full evaluation at `x` if it can end restoration.
#[allow(clippy::too_many_arguments)]
fn candidate(
    problem: &ProblemDef,
    x: &Vector,
    c: &Vector,
    a: &Matrix,
    filter: &Filter,
    counters: &mut EvalCounters,
    cfg: &SolverConfig,
    trigger: RestorationTrigger,
) -> Option<EvaluatedPoint> {
    let h = c.norm();
    if h >= filter.h_max() {
        return None;
    }
    let h_margin_ok = filter.entries().iter().all(|e| h <= (1.0 - filter.gamma_h()) * e.h);
    // Corners can only be passed through ℓ once h is already small.
    if !h_margin_ok && h > cfg.epsilon {
        return None;
    }
    let fac = factorize_jacobian(a, cfg.rank_tol).ok()?;
    if let RestorationTrigger::NormalStep { sigma } = trigger {
        let n = normal_step(&fac, c);
        if !normal_step_condition(&n, sigma, cfg.beta1, cfg.beta2, cfg.beta3) {
            return None;
        }
    }
    let ev = problem.evaluate(x, Request::F | Request::G, counters).ok()?;
    let (f, g) = (ev.f.expect("requested"), ev.g.expect("requested"));
    let l = kkt_quantities(f, &g, c, &fac).lagrangian_value;
    if filter.in_region(h, l) {
        return None;
    }
    Some(EvaluatedPoint {
        x: x.clone(),
        f,
        c: c.clone(),
        g,
        a: a.clone(),
    })
}

/// One decrease step on `‖c‖`: first the minimum-norm Gauss–Newton step,
/// then Levenberg–Marquardt with increasing damping.
fn inner_step(
    problem: &ProblemDef,
    x: &Vector,
    c: &Vector,
    a: &Matrix,
    grad: &Vector,
    damping: &mut Option<f64>,
    counters: &mut EvalCounters,
) -> Option<(Vector, Vector, StepKind)> {
    let h = c.norm();
    let try_step = |p: Vector, counters: &mut EvalCounters| -> Option<(Vector, Vector)> {
        let x_trial = x + p;
        let ev = problem.evaluate(&x_trial, Request::C, counters).ok()?;
        let c_trial = ev.c.expect("requested");
        (c_trial.norm() < h).then_some((x_trial, c_trial))
    };

    if let Ok(p) = a.clone().svd(true, true).solve(&(-c), 1e-12 * a.norm().max(f64::MIN_POSITIVE)) {
        if p.iter().all(|v| v.is_finite()) {
            if let Some((xt, ct)) = try_step(p, counters) {
                return Some((xt, ct, StepKind::GaussNewton));
            }
        }
    }

    let ata = a.tr_mul(a);
    let n = ata.nrows();
    let mut nu = damping.unwrap_or_else(|| 1e-3 * ata.norm().max(1e-12));
    for _ in 0..60 {
        let system = &ata + Matrix::identity(n, n) * nu;
        if let Some(chol) = system.cholesky() {
            let p = chol.solve(&(-grad));
            if let Some((xt, ct)) = try_step(p, counters) {
                *damping = Some(nu / 3.0);
                return Some((xt, ct, StepKind::Damped(nu)));
            }
        }
        nu *= 2.0;
    }
    *damping = Some(nu);
    None
}

/// Central-difference Hessian of `½‖c‖²`, i.e. the Jacobian of `Aᵀc`.
fn residual_hessian(problem: &ProblemDef, x: &Vector, counters: &mut EvalCounters) -> Option<Matrix> {
    let n = x.len();
    let mut b = Matrix::zeros(n, n);
    let mut probe = x.clone();
    for i in 0..n {
        let step = central_step(x[i]);
        let mut side = |delta: f64, counters: &mut EvalCounters| -> Option<Vector> {
            probe[i] = x[i] + delta;
            let ev = problem.evaluate(&probe, Request::C | Request::A, counters).ok()?;
            Some(ev.a.expect("requested").tr_mul(ev.c.as_ref().expect("requested")))
        };
        let plus = side(step, counters)?;
        let minus = side(-step, counters)?;
        probe[i] = x[i];
        b.set_column(i, &((plus - minus) / (2.0 * step)));
    }
    Some((&b + b.transpose()) * 0.5)
}

/// Escape a saddle of `½‖c‖²` along its most negative curvature direction.
fn curvature_step(problem: &ProblemDef, x: &Vector, h: f64, counters: &mut EvalCounters) -> Option<(Vector, Vector)> {
    let b = residual_hessian(problem, x, counters)?;
    let eig = b.try_symmetric_eigen(f64::EPSILON, 10_000)?;
    let (imin, &lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    if !(lmin < -1e-8 * eig.eigenvalues.amax().max(1.0)) {
        return None;
    }
    let v = eig.eigenvectors.column(imin).into_owned();
    let mut tau = (h / lmin.abs().sqrt()).min(10.0 * (1.0 + x.norm()));
    for _ in 0..40 {
        for sign in [1.0, -1.0] {
            let x_trial = x + &v * (sign * tau);
            if let Ok(ev) = problem.evaluate(&x_trial, Request::C, counters) {
                let c_trial = ev.c.expect("requested");
                if c_trial.norm() < h {
                    return Some((x_trial, c_trial));
                }
            }
        }
        tau *= 0.5;
    }
    None
}
