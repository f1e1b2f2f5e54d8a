//! The main solver loop, its configuration and the run report.

use std::fmt;
use std::time::Instant;

use serde_json::{json, Value};
use thiserror::Error;

use crate::cubic_subproblem::{cauchy_decrease_bound, solve_reduced_arc, spectral_norm_sym, TangentialModel};
use crate::filter::{Filter, FilterEntry, FilterError};
use crate::kernels::{
    directional_multiplier_derivative, factorize_jacobian, kkt_quantities, normal_step, normal_step_condition,
    JacobianFactorization, KktQuantities,
};
use crate::line_search::{backtracking_search, OutcomeKind, RejectedTrial, SearchContext};
use crate::problem::{
    fd_lagrangian_hessian, lagrangian_gradient, EvalCounters, EvalError, EvaluatedPoint, Matrix, ProblemDef, Vector,
};
use crate::restoration::{restore, RestorationStatus, RestorationStep, RestorationTrigger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HessianStrategy {
    #[default]
    Exact,
    Fd,
    Bfgs,
}

impl fmt::Display for HessianStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HessianStrategy::Exact => "exact",
            HessianStrategy::Fd => "fd",
            HessianStrategy::Bfgs => "bfgs",
        })
    }
}

impl std::str::FromStr for HessianStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(HessianStrategy::Exact),
            "fd" => Ok(HessianStrategy::Fd),
            "bfgs" => Ok(HessianStrategy::Bfgs),
            other => Err(format!("unknown Hessian strategy '{other}' (expected exact, fd or bfgs)")),
        }
    }
}

/// Every tunable constant of the method.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub gamma_h: f64,
    pub kappa_h: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub varsigma: f64,
    pub phi: f64,
    pub omega: f64,
    pub tau: f64,
    pub gamma_l: f64,
    pub mu: f64,
    pub mu_alpha: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub sigma0: f64,
    pub sigma_min: f64,
    /// `h_max = h_max_factor · max(1, h(x₀))`.
    pub h_max_factor: f64,
    pub max_iter: usize,
    pub restoration_max_iter: usize,
    /// Relative singular-value threshold for rank decisions on `A`.
    pub rank_tol: f64,
    pub hessian_strategy: HessianStrategy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            beta1: 0.1,
            beta2: 100.0,
            beta3: 0.01,
            gamma_h: 1e-5,
            kappa_h: 1e-4,
            eta1: 0.01,
            eta2: 0.9,
            varsigma: 2.01,
            phi: 2.01,
            omega: 1.0,
            tau: 1.0,
            gamma_l: 1e-5,
            mu: 1e-4,
            mu_alpha: 1.0,
            omega1: 0.5,
            omega2: 0.5,
            gamma1: 2.0,
            gamma2: 5.0,
            sigma0: 1.0,
            sigma_min: 1e-8,
            h_max_factor: 1e4,
            max_iter: 500,
            restoration_max_iter: 100,
            rank_tol: 1e-10,
            hessian_strategy: HessianStrategy::Exact,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("parameter {name}={value} violates {rule}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        rule: &'static str,
    },
    #[error("exact Hessian requested but problem '{0}' does not supply one")]
    MissingHessian(String),
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let open01 = |v: f64| v > 0.0 && v < 1.0;
        let checks: [(&'static str, f64, bool, &'static str); 20] = [
            ("epsilon", self.epsilon, self.epsilon > 0.0, "epsilon > 0"),
            ("gamma1", self.gamma1, self.gamma1 > 1.0, "1 < gamma1"),
            ("gamma2", self.gamma2, self.gamma2 >= self.gamma1, "gamma1 <= gamma2"),
            ("eta1", self.eta1, self.eta1 > 0.0, "0 < eta1"),
            ("eta2", self.eta2, self.eta1 < self.eta2 && self.eta2 < 1.0, "eta1 < eta2 < 1"),
            ("beta1", self.beta1, self.beta1 > 0.0 && self.beta1 <= 1.0, "beta1 in (0, 1]"),
            ("beta2", self.beta2, self.beta2 > 0.0, "beta2 > 0"),
            ("beta3", self.beta3, open01(self.beta3), "beta3 in (0, 1)"),
            ("varsigma", self.varsigma, self.varsigma > 2.0, "varsigma > 2"),
            ("phi", self.phi, self.phi > 2.0, "phi > 2"),
            ("omega", self.omega, self.omega >= 1.0, "omega >= 1"),
            ("tau", self.tau, self.tau >= 1.0, "tau >= 1"),
            ("gamma_h", self.gamma_h, open01(self.gamma_h), "gamma_h in (0, 1)"),
            ("gamma_l", self.gamma_l, open01(self.gamma_l), "gamma_l in (0, 1)"),
            ("mu", self.mu, open01(self.mu), "mu in (0, 1)"),
            ("mu_alpha", self.mu_alpha, self.mu_alpha > 0.0 && self.mu_alpha <= 1.0, "mu_alpha in (0, 1]"),
            ("omega1", self.omega1, self.omega1 > 0.0 && self.omega1 <= self.omega2, "0 < omega1 <= omega2"),
            ("omega2", self.omega2, self.omega2 < 1.0, "omega2 < 1"),
            ("sigma_min", self.sigma_min, self.sigma_min > 0.0 && self.sigma_min <= self.sigma0, "0 < sigma_min <= sigma0"),
            ("kappa_h", self.kappa_h, self.kappa_h > 0.0, "kappa_h > 0"),
        ];
        for (name, value, ok, rule) in checks {
            if !ok || !value.is_finite() {
                return Err(ConfigError::OutOfRange { name, value, rule });
            }
        }
        if !(self.h_max_factor > 1.0) {
            return Err(ConfigError::OutOfRange {
                name: "h_max_factor",
                value: self.h_max_factor,
                rule: "h_max_factor > 1",
            });
        }
        Ok(())
    }
}

/// `ρ = (ℓ_new − ℓ_old) / m(α)` for `m(α) < 0`.
pub fn rho_ratio(l_new: f64, l_old: f64, m_alpha: f64) -> f64 {
    debug_assert!(m_alpha < 0.0, "rho_ratio needs a negative model value");
    (l_new - l_old) / m_alpha
}

/// Regularization update. `None` stands for `m(α) ≥ 0`.
pub fn update_sigma(rho: Option<f64>, sigma: f64, cfg: &SolverConfig) -> f64 {
    match rho {
        Some(r) if r >= cfg.eta2 => (sigma / 2.0).max(cfg.sigma_min),
        Some(r) if r >= cfg.eta1 => cfg.gamma1 * sigma,
        _ => cfg.gamma2 * sigma,
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("evaluation failed at the start point: {0}")]
    StartPoint(EvalError),
    #[error("Hessian evaluation failed at iteration {k}: {source}")]
    Hessian { k: usize, source: HessianError },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HessianError {
    #[error("exact Lagrangian Hessian requested but not supplied")]
    Missing,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Source of `H_k` and the quasi-Newton memory it needs.
#[derive(Debug, Clone)]
pub struct HessianState {
    strategy: HessianStrategy,
    approx: Option<Matrix>,
    previous: Option<(Vector, Vector, Matrix)>,
}

impl HessianState {
    pub fn new(strategy: HessianStrategy) -> Self {
        Self {
            strategy,
            approx: None,
            previous: None,
        }
    }

    pub fn strategy(&self) -> HessianStrategy {
        self.strategy
    }

    /// Lagrangian Hessian (or approximation) at `point` for multipliers `lambda`.
    pub fn lagrangian_hessian(
        &mut self,
        problem: &ProblemDef,
        point: &EvaluatedPoint,
        lambda: &Vector,
        counters: &mut EvalCounters,
    ) -> Result<Matrix, HessianError> {
        match self.strategy {
            HessianStrategy::Exact => match problem.exact_lagrangian_hessian(&point.x, lambda, counters) {
                Some(h) => Ok(h.map(|m| (&m + m.transpose()) * 0.5)?),
                None => Err(HessianError::Missing),
            },
            HessianStrategy::Fd => Ok(fd_lagrangian_hessian(problem, &point.x, lambda, counters)?),
            HessianStrategy::Bfgs => Ok(self.bfgs_update(point, lambda)),
        }
    }

    fn bfgs_update(&mut self, point: &EvaluatedPoint, lambda: &Vector) -> Matrix {
        let n = point.x.len();
        let mut b = self.approx.take().unwrap_or_else(|| Matrix::identity(n, n));
        if let Some((x_prev, g_prev, a_prev)) = &self.previous {
            let s = &point.x - x_prev;
            let y = lagrangian_gradient(&point.g, &point.a, lambda) - lagrangian_gradient(g_prev, a_prev, lambda);
            let bs = &b * &s;
            let sbs = s.dot(&bs);
            if s.norm() > 0.0 && sbs > f64::MIN_POSITIVE {
                let sy = s.dot(&y);
                let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
                let r = &y * theta + &bs * (1.0 - theta);
                let sr = s.dot(&r);
                if sr > 0.0 {
                    b += &r * r.transpose() / sr - &bs * bs.transpose() / sbs;
                    b = (&b + b.transpose()) * 0.5;
                }
            }
        }
        self.previous = Some((point.x.clone(), point.g.clone(), point.a.clone()));
        self.approx = Some(b.clone());
        b
    }
}

/// Quantities of one main-loop iterate.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub k: usize,
    pub x: Vector,
    pub f: f64,
    pub h: f64,
    pub l: f64,
    pub g: Vector,
    pub c: Vector,
    pub fac: JacobianFactorization,
    pub lambda: Vector,
    pub hessian: Matrix,
    pub sigma: f64,
    pub pg: Vector,
    pub res: f64,
}

impl IterateState {
    fn new(k: usize, point: &EvaluatedPoint, fac: JacobianFactorization, kkt: KktQuantities, hessian: Matrix, sigma: f64) -> Self {
        Self {
            k,
            x: point.x.clone(),
            f: point.f,
            h: kkt.h,
            l: kkt.lagrangian_value,
            g: point.g.clone(),
            c: point.c.clone(),
            fac,
            lambda: kkt.lambda,
            hessian,
            sigma,
            pg: kkt.pg,
            res: kkt.res,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    RestorationFailed,
    RankDeficientUnrecoverable,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max-iter",
            SolveStatus::RestorationFailed => "restoration-failed",
            SolveStatus::RankDeficientUnrecoverable => "rank-deficient-unrecoverable",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepType {
    F,
    H,
    Restoration,
}

impl fmt::Display for StepType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepType::F => "f",
            StepType::H => "h",
            StepType::Restoration => "restoration",
        })
    }
}

/// One main-loop iteration, described at `x_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRecord {
    pub k: usize,
    pub h: f64,
    pub l: f64,
    pub sigma: f64,
    /// Accepted step size; zero for restoration.
    pub alpha: f64,
    pub step_type: StepType,
    pub res: f64,
}

/// Step-computation data recorded on iterations that computed a full step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCheck {
    pub k: usize,
    /// `f(x_k) − m^t(t_k)`, evaluated with the full gradient.
    pub model_decrease: f64,
    pub pg_norm: f64,
    pub hessian_norm: f64,
    pub sigma: f64,
    pub t_norm: f64,
    pub reduced_min_eigenvalue: Option<f64>,
    /// `‖A_k d_k + c(x_k)‖`.
    pub linearized_residual: f64,
    pub c_norm: f64,
}

impl StepCheck {
    pub fn cauchy_bound(&self) -> f64 {
        cauchy_decrease_bound(self.pg_norm, self.hessian_norm, self.sigma)
    }

    pub fn cauchy_holds(&self, slack: f64) -> bool {
        self.model_decrease >= self.cauchy_bound() - slack
    }

    /// `None` when the reduced Hessian is not known to be PSD.
    pub fn step_bound_holds(&self, slack: f64) -> Option<bool> {
        let psd = self.reduced_min_eigenvalue.is_some_and(|e| e >= 0.0);
        psd.then(|| self.t_norm <= 3f64.sqrt() * (self.pg_norm / self.sigma).sqrt() + slack)
    }

    pub fn linearized_holds(&self, rel: f64) -> bool {
        self.linearized_residual <= rel * (1.0 + self.c_norm)
    }
}

/// Snapshot taken when an h-type step was accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterReplay {
    pub k: usize,
    pub trial: FilterEntry,
    pub current: FilterEntry,
    /// Filter corners before `current` was added.
    pub entries: Vec<FilterEntry>,
}

impl FilterReplay {
    /// Margins of the trial against the current iterate and every stored corner.
    pub fn margins_hold(&self, gamma_h: f64, gamma_l: f64) -> bool {
        std::iter::once(&self.current)
            .chain(self.entries.iter())
            .all(|e| self.trial.h <= (1.0 - gamma_h) * e.h || self.trial.l <= e.l - gamma_l * e.h)
    }
}

#[derive(Debug, Clone)]
pub struct RestorationRecord {
    pub k: usize,
    pub trigger: RestorationTrigger,
    pub status: RestorationStatus,
    pub inner_iterations: usize,
    pub h_final: f64,
    pub trace: Vec<RestorationStep>,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub problem: String,
    pub n: usize,
    pub m: usize,
    pub status: SolveStatus,
    pub x_final: Vector,
    pub res: f64,
    pub nit: usize,
    pub nf: usize,
    pub nc: usize,
    pub ng: usize,
    pub nj: usize,
    pub nh: usize,
    pub hessian_strategy: HessianStrategy,
    pub fd_gradient: bool,
    pub fd_jacobian: bool,
    pub history: Vec<HistoryRecord>,
    pub checks: Vec<StepCheck>,
    pub replays: Vec<FilterReplay>,
    pub trial_logs: Vec<(usize, Vec<RejectedTrial>)>,
    pub restorations: Vec<RestorationRecord>,
    pub diagnostics: Vec<String>,
    pub filter: Filter,
    pub wall_time: f64,
}

impl SolverReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn summary_line(&self) -> String {
        format!("{} {} nit={} res={:.3e}", self.problem, self.status, self.nit, self.res)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "problem": self.problem,
            "n": self.n,
            "m": self.m,
            "status": self.status.as_str(),
            "x_final": self.x_final.iter().collect::<Vec<_>>(),
            "res": self.res,
            "nit": self.nit,
            "nf": self.nf,
            "nc": self.nc,
            "ng": self.ng,
            "nj": self.nj,
            "nh": self.nh,
            "hessian": self.hessian_strategy.to_string(),
            "fd_gradient": self.fd_gradient,
            "fd_jacobian": self.fd_jacobian,
            "wall_time": self.wall_time,
            "filter": self.filter.entries().iter().map(|e| json!([e.h, e.l])).collect::<Vec<_>>(),
            "history": self.history.iter().map(|r| json!({
                "k": r.k,
                "h": r.h,
                "l": r.l,
                "sigma": r.sigma,
                "alpha": r.alpha,
                "step": r.step_type.to_string(),
                "res": r.res,
            })).collect::<Vec<_>>(),
            "diagnostics": self.diagnostics,
        })
    }

    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        push("problem", self.problem.clone());
        push("n", self.n.to_string());
        push("m", self.m.to_string());
        push("status", self.status.to_string());
        push("res", format!("{:e}", self.res));
        push("nit", self.nit.to_string());
        push("nf", self.nf.to_string());
        push("nc", self.nc.to_string());
        push("ng", self.ng.to_string());
        push("nj", self.nj.to_string());
        push("nh", self.nh.to_string());
        push("hessian", self.hessian_strategy.to_string());
        push("fd_gradient", self.fd_gradient.to_string());
        push("fd_jacobian", self.fd_jacobian.to_string());
        push("filter_size", self.filter.len().to_string());
        push("wall_time", format!("{:.4}", self.wall_time));
        for (i, v) in self.x_final.iter().enumerate() {
            push(&format!("x[{i}]"), format!("{v:e}"));
        }
        for r in &self.history {
            push(
                &format!("iter[{}]", r.k),
                format!(
                    "h={:e} l={:e} sigma={:e} alpha={:e} step={} res={:e}",
                    r.h, r.l, r.sigma, r.alpha, r.step_type, r.res
                ),
            );
        }
        for d in &self.diagnostics {
            push("diagnostic", d.clone());
        }
        out
    }
}

struct Run<'a> {
    problem: &'a ProblemDef,
    cfg: &'a SolverConfig,
    counters: EvalCounters,
    filter: Filter,
    history: Vec<HistoryRecord>,
    checks: Vec<StepCheck>,
    replays: Vec<FilterReplay>,
    trial_logs: Vec<(usize, Vec<RejectedTrial>)>,
    restorations: Vec<RestorationRecord>,
    diagnostics: Vec<String>,
}

enum Restored {
    Point(EvaluatedPoint),
    Failed(SolveStatus),
}

impl Run<'_> {
    fn restore_from(&mut self, k: usize, point: &EvaluatedPoint, trigger: RestorationTrigger) -> Restored {
        let r = restore(
            self.problem,
            &point.x,
            Some((point.c.clone(), point.a.clone())),
            &self.filter,
            &mut self.counters,
            self.cfg,
            trigger,
        );
        self.restorations.push(RestorationRecord {
            k,
            trigger,
            status: r.status,
            inner_iterations: r.inner_iterations,
            h_final: r.h_final,
            trace: r.trace,
        });
        if let Some(d) = r.diagnostic {
            self.diagnostics.push(format!("k={k} restoration {}: {d}", r.status));
        }
        match (r.status, r.point) {
            (RestorationStatus::Restored, Some(p)) => Restored::Point(p),
            _ if trigger == RestorationTrigger::RankDeficient => Restored::Failed(SolveStatus::RankDeficientUnrecoverable),
            _ => Restored::Failed(SolveStatus::RestorationFailed),
        }
    }
}

/// Run the filter line-search cubic-regularization method from `problem.x0()`.
pub fn solve(problem: &ProblemDef, config: &SolverConfig) -> Result<SolverReport, SolveError> {
    let started = Instant::now();
    config.validate()?;
    if config.hessian_strategy == HessianStrategy::Exact && !problem.has_lagrangian_hessian() {
        return Err(ConfigError::MissingHessian(problem.name().to_owned()).into());
    }
    let cfg = config;
    let mut counters = EvalCounters::default();
    let mut point = problem
        .evaluate_point(problem.x0().clone(), &mut counters)
        .map_err(SolveError::StartPoint)?;
    let h0 = point.c.norm();
    let filter = Filter::new(cfg.h_max_factor * h0.max(1.0), cfg.gamma_h, cfg.gamma_l)?;
    let mut run = Run {
        problem,
        cfg,
        counters,
        filter,
        history: Vec::new(),
        checks: Vec::new(),
        replays: Vec::new(),
        trial_logs: Vec::new(),
        restorations: Vec::new(),
        diagnostics: Vec::new(),
    };
    let mut hessians = HessianState::new(cfg.hessian_strategy);
    let mut sigma = cfg.sigma0;
    let mut k = 0;
    let mut tiny_steps = 0;
    let mut last_res = f64::INFINITY;

    let status = loop {
        let fac = match factorize_jacobian(&point.a, cfg.rank_tol) {
            Ok(fac) => fac,
            Err(e) => {
                run.diagnostics.push(format!("k={k} {e}"));
                if k >= cfg.max_iter {
                    break SolveStatus::MaxIter;
                }
                run.history.push(HistoryRecord {
                    k,
                    h: point.c.norm(),
                    l: f64::NAN,
                    sigma,
                    alpha: 0.0,
                    step_type: StepType::Restoration,
                    res: f64::NAN,
                });
                match run.restore_from(k, &point, RestorationTrigger::RankDeficient) {
                    Restored::Point(p) => {
                        point = p;
                        k += 1;
                        continue;
                    }
                    Restored::Failed(_) => break SolveStatus::RankDeficientUnrecoverable,
                }
            }
        };
        let kkt = kkt_quantities(point.f, &point.g, &point.c, &fac);
        last_res = kkt.res;
        if kkt.res <= cfg.epsilon {
            break SolveStatus::Converged;
        }
        if k >= cfg.max_iter {
            break SolveStatus::MaxIter;
        }
        let hessian = hessians
            .lagrangian_hessian(problem, &point, &kkt.lambda, &mut run.counters)
            .map_err(|source| SolveError::Hessian { k, source })?;
        let state = IterateState::new(k, &point, fac, kkt, hessian, sigma);
        let mut record = HistoryRecord {
            k,
            h: state.h,
            l: state.l,
            sigma,
            alpha: 0.0,
            step_type: StepType::Restoration,
            res: state.res,
        };

        let n = normal_step(&state.fac, &state.c);
        if !normal_step_condition(&n, sigma, cfg.beta1, cfg.beta2, cfg.beta3) {
            run.history.push(record);
            match run.restore_from(k, &point, RestorationTrigger::NormalStep { sigma }) {
                Restored::Point(p) => {
                    point = p;
                    k += 1;
                    continue;
                }
                Restored::Failed(s) => break s,
            }
        }

        let model = TangentialModel {
            f0: state.f,
            pg: &state.pg,
            hessian: &state.hessian,
            sigma,
            fac: &state.fac,
        };
        let sub = solve_reduced_arc(&model, None);
        let t = sub.t;
        let d = &n + &t;
        let t_norm = t.norm();
        run.checks.push(StepCheck {
            k,
            model_decrease: -(state.g.dot(&t) + 0.5 * t.dot(&(&state.hessian * &t)) + sigma / 3.0 * t_norm.powi(3)),
            pg_norm: state.pg.norm(),
            hessian_norm: spectral_norm_sym(&state.hessian),
            sigma,
            t_norm,
            reduced_min_eigenvalue: sub.reduced_min_eigenvalue,
            linearized_residual: (&point.a * &d + &state.c).norm(),
            c_norm: state.h,
        });

        let dlam_d = if d.norm() > 0.0 {
            match directional_multiplier_derivative(problem, &state.x, &d, &state.lambda, &mut run.counters, cfg.rank_tol)
            {
                Ok(v) => v,
                Err(e) => {
                    run.diagnostics.push(format!("k={k} multiplier derivative unavailable: {e}"));
                    Vector::zeros(problem.m())
                }
            }
        } else {
            Vector::zeros(problem.m())
        };

        let ctx = SearchContext {
            x: &state.x,
            g: &state.g,
            t: &t,
            d: &d,
            hessian: &state.hessian,
            sigma,
            c: &state.c,
            h: state.h,
            l: state.l,
            dlam_d: &dlam_d,
            f0: state.f,
        };
        let outcome = backtracking_search(&ctx, &run.filter, problem, &mut run.counters, cfg);
        if !outcome.trial_log.is_empty() {
            run.trial_logs.push((k, outcome.trial_log.clone()));
        }
        let current = FilterEntry { h: state.h, l: state.l };

        let accepted = match outcome.kind {
            OutcomeKind::Restoration => {
                run.history.push(record);
                run.filter.add(current.h, current.l);
                match run.restore_from(k, &point, RestorationTrigger::LineSearch) {
                    Restored::Point(p) => {
                        point = p;
                        k += 1;
                        tiny_steps = 0;
                        continue;
                    }
                    Restored::Failed(s) => break s,
                }
            }
            _ => outcome.accepted.expect("accepted outcome carries its point"),
        };

        let trial = FilterEntry {
            h: accepted.kkt.h,
            l: accepted.kkt.lagrangian_value,
        };
        record.alpha = outcome.alpha;
        if outcome.kind == OutcomeKind::AcceptedH {
            record.step_type = StepType::H;
            run.replays.push(FilterReplay {
                k,
                trial,
                current,
                entries: run.filter.entries().to_vec(),
            });
            run.filter.add(current.h, current.l);
        } else {
            record.step_type = StepType::F;
        }
        run.history.push(record);

        let m_alpha = accepted.m_alpha;
        let rho = (m_alpha < 0.0).then(|| rho_ratio(trial.l, state.l, m_alpha));
        sigma = update_sigma(rho, sigma, cfg);

        let step_norm = outcome.alpha * d.norm();
        if step_norm <= 1e-15 * (1.0 + state.x.norm()) {
            tiny_steps += 1;
        } else {
            tiny_steps = 0;
        }
        point = accepted.point;
        k += 1;
        if tiny_steps >= 2 {
            run.diagnostics.push(format!("k={k} stagnation: two consecutive negligible steps"));
            if let Ok(fac) = factorize_jacobian(&point.a, cfg.rank_tol) {
                last_res = kkt_quantities(point.f, &point.g, &point.c, &fac).res;
            }
            break SolveStatus::MaxIter;
        }
    };

    let counters = run.counters;
    Ok(SolverReport {
        problem: problem.name().to_owned(),
        n: problem.n(),
        m: problem.m(),
        status,
        x_final: point.x,
        res: last_res,
        nit: k,
        nf: counters.nf,
        nc: counters.nc,
        ng: counters.ng,
        nj: counters.nj,
        nh: counters.nh,
        hessian_strategy: cfg.hessian_strategy,
        fd_gradient: !problem.has_gradient(),
        fd_jacobian: !problem.has_jacobian(),
        history: run.history,
        checks: run.checks,
        replays: run.replays,
        trial_logs: run.trial_logs,
        restorations: run.restorations,
        diagnostics: run.diagnostics,
        filter: run.filter,
        wall_time: started.elapsed().as_secs_f64(),
    })
}
