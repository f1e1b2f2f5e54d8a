//! Backtracking filter line search along `d = n + t`.

use std::fmt;

use crate::driver::SolverConfig;
use crate::filter::{Filter, FilterEntry};
use crate::kernels::{factorize_jacobian, kkt_quantities, JacobianFactorization, KktQuantities};
use crate::problem::{EvalCounters, EvaluatedPoint, Matrix, ProblemDef, Vector};

/// Backtracking gives up below this step size even when `α_min` is zero.
pub const ALPHA_FLOOR: f64 = 1e-20;

/// Per-iteration data needed by the acceptance tests.
#[derive(Debug, Clone, Copy)]
pub struct SearchContext<'a> {
    pub x: &'a Vector,
    pub g: &'a Vector,
    pub t: &'a Vector,
    pub d: &'a Vector,
    pub hessian: &'a Matrix,
    pub sigma: f64,
    pub c: &'a Vector,
    /// `h(x_k)`.
    pub h: f64,
    /// `ℓ(x_k)`.
    pub l: f64,
    /// Directional multiplier derivative `∇λ_kᵀd_k`.
    pub dlam_d: &'a Vector,
    pub f0: f64,
}

impl SearchContext<'_> {
    /// `δ = −gᵀt + (∇λᵀd)ᵀc`.
    pub fn delta(&self) -> f64 {
        -self.g.dot(self.t) + self.dlam_d.dot(self.c)
    }
}

/// `m(α) = α gᵀt + ½α² tᵀHt + ⅓α³σ‖t‖³ − α (∇λᵀd)ᵀc`.
pub fn model_m(alpha: f64, ctx: &SearchContext<'_>) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let gt = ctx.g.dot(ctx.t);
    let tht = ctx.t.dot(&(ctx.hessian * ctx.t));
    let tn = ctx.t.norm();
    let lc = ctx.dlam_d.dot(ctx.c);
    alpha * gt + 0.5 * alpha * alpha * tht + alpha.powi(3) * ctx.sigma * tn * tn * tn / 3.0 - alpha * lc
}

/// `m(α) < 0` and `(−m)^ω (α√σ)^{ω−1} > κ_h h^ς`.
pub fn switching_holds(m_alpha: f64, alpha: f64, sigma: f64, h: f64, cfg: &SolverConfig) -> bool {
    if !(m_alpha < 0.0) {
        return false;
    }
    let lhs = (-m_alpha).powf(cfg.omega) * (alpha * sigma.sqrt()).powf(cfg.omega - 1.0);
    lhs > cfg.kappa_h * h.powf(cfg.varsigma)
}

/// Armijo-type test on the Lagrangian: `ℓ_trial ≤ ℓ_current + μ m(α)`.
pub fn sufficient_decrease_holds(l_trial: f64, l_current: f64, m_alpha: f64, mu: f64) -> bool {
    l_trial <= l_current + mu * m_alpha
}

/// Smallest step size tried before switching to feasibility restoration.
pub fn compute_alpha_min(ctx: &SearchContext<'_>, cfg: &SolverConfig) -> f64 {
    let delta = ctx.delta();
    if delta > 0.0 {
        let by_l = cfg.gamma_l * ctx.h / delta;
        let by_switch = cfg.kappa_h * ctx.h.powf(cfg.phi) * ctx.sigma.powf(1.0 - cfg.tau) / delta.powf(cfg.tau);
        cfg.mu_alpha * cfg.gamma_h.min(by_l).min(by_switch)
    } else {
        cfg.mu_alpha * cfg.gamma_h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// Trial pair lies in the filter region.
    Filter,
    /// Switching held but sufficient decrease failed.
    Armijo,
    /// Neither switching nor the margins against the current iterate held.
    Margins,
    /// Trial evaluation failed (non-finite values or singular Jacobian).
    EvalFail,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::Filter => "F-REJECT-FILTER",
            RejectReason::Armijo => "F-REJECT-ARMIJO",
            RejectReason::Margins => "H-REJECT",
            RejectReason::EvalFail => "EVAL-FAIL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectedTrial {
    pub alpha: f64,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    AcceptedF,
    AcceptedH,
    Restoration,
}

/// An accepted trial point with its first-order data already computed.
#[derive(Debug, Clone)]
pub struct AcceptedPoint {
    pub point: EvaluatedPoint,
    pub fac: JacobianFactorization,
    pub kkt: KktQuantities,
    pub m_alpha: f64,
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub kind: OutcomeKind,
    /// Accepted step size, or the last (rejected) value for restoration.
    pub alpha: f64,
    pub alpha_min: f64,
    pub trials: usize,
    pub trial_log: Vec<RejectedTrial>,
    pub accepted: Option<AcceptedPoint>,
}

/// Backtracking from `α = 1`, halving on each rejection.
pub fn backtracking_search(
    ctx: &SearchContext<'_>,
    filter: &Filter,
    problem: &ProblemDef,
    counters: &mut EvalCounters,
    cfg: &SolverConfig,
) -> LineSearchOutcome {
    let alpha_min = compute_alpha_min(ctx, cfg);
    let shrink = 0.5 * (cfg.omega1 + cfg.omega2);
    let current = FilterEntry { h: ctx.h, l: ctx.l };
    let mut alpha = 1.0;
    let mut trials = 0;
    let mut trial_log = Vec::new();
    loop {
        if alpha < alpha_min || alpha < ALPHA_FLOOR {
            return LineSearchOutcome {
                kind: OutcomeKind::Restoration,
                alpha,
                alpha_min,
                trials,
                trial_log,
                accepted: None,
            };
        }
        trials += 1;
        let x_trial = ctx.x + ctx.d * alpha;
        let evaluated = problem
            .evaluate_point(x_trial, counters)
            .ok()
            .and_then(|p| factorize_jacobian(&p.a, cfg.rank_tol).ok().map(|fac| (p, fac)));
        let Some((point, fac)) = evaluated else {
            trial_log.push(RejectedTrial { alpha, reason: RejectReason::EvalFail });
            alpha *= shrink;
            continue;
        };
        let kkt = kkt_quantities(point.f, &point.g, &point.c, &fac);
        let (h_t, l_t) = (kkt.h, kkt.lagrangian_value);
        let m_alpha = model_m(alpha, ctx);

        let verdict = if !l_t.is_finite() || filter.in_region(h_t, l_t) {
            Err(RejectReason::Filter)
        } else if switching_holds(m_alpha, alpha, ctx.sigma, ctx.h, cfg) {
            if sufficient_decrease_holds(l_t, ctx.l, m_alpha, cfg.mu) {
                Ok(OutcomeKind::AcceptedF)
            } else {
                Err(RejectReason::Armijo)
            }
        } else if filter.improves_on(h_t, l_t, current) {
            Ok(OutcomeKind::AcceptedH)
        } else {
            Err(RejectReason::Margins)
        };

        match verdict {
            Ok(kind) => {
                return LineSearchOutcome {
                    kind,
                    alpha,
                    alpha_min,
                    trials,
                    trial_log,
                    accepted: Some(AcceptedPoint { point, fac, kkt, m_alpha }),
                };
            }
            Err(reason) => {
                trial_log.push(RejectedTrial { alpha, reason });
                alpha *= shrink;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn ctx_from<'a>(
        g: &'a Vector,
        t: &'a Vector,
        h: &'a Matrix,
        c: &'a Vector,
        dlam: &'a Vector,
        sigma: f64,
        hval: f64,
    ) -> SearchContext<'a> {
        SearchContext {
            x: g,
            g,
            t,
            d: t,
            hessian: h,
            sigma,
            c,
            h: hval,
            l: 0.0,
            dlam_d: dlam,
            f0: 0.0,
        }
    }

    #[test]
    fn model_examples() {
        let g = dvector![1.0];
        let t = dvector![-1.0];
        let h = dmatrix![0.0];
        let c0 = dvector![0.0];
        let dl0 = dvector![0.0];
        let ctx = ctx_from(&g, &t, &h, &c0, &dl0, 1.0, 0.0);
        assert_eq!(model_m(0.0, &ctx), 0.0);
        assert!((model_m(1.0, &ctx) + 2.0 / 3.0).abs() < 1e-15);
        let c = dvector![0.2];
        let dl = dvector![0.5];
        let ctx = ctx_from(&g, &t, &h, &c, &dl, 1.0, 0.2);
        assert!((model_m(1.0, &ctx) - (-2.0 / 3.0 - 0.1)).abs() < 1e-15);
        assert!((model_m(1.0, &ctx) + 0.7667).abs() < 1e-4);
    }

    #[test]
    fn switching_examples() {
        let cfg = SolverConfig::default();
        let threshold = 1e-4 * 0.1f64.powf(2.01);
        assert!((threshold - 9.77e-7).abs() < 1e-9);
        assert!(switching_holds(-2.0 / 3.0, 1.0, 1.0, 0.1, &cfg));
        assert!(!switching_holds(0.1, 1.0, 1.0, 0.0, &cfg));
        assert!(switching_holds(-1e-9, 0.3, 5.0, 0.0, &cfg));
    }

    #[test]
    fn sufficient_decrease_examples() {
        let bound: f64 = 1.0 - 1e-4 * 2.0 / 3.0;
        assert!((bound - (1.0 - 6.667e-5)).abs() < 1e-8);
        assert!(sufficient_decrease_holds(bound, 1.0, -2.0 / 3.0, 1e-4));
        assert!(!sufficient_decrease_holds(bound + 1e-12, 1.0, -2.0 / 3.0, 1e-4));
        assert!(!sufficient_decrease_holds(1.0, 1.0, -1.0, 0.5));
        assert!(sufficient_decrease_holds(1.0, 1.0, 0.0, 0.5));
    }

    #[test]
    fn alpha_min_examples() {
        let cfg = SolverConfig::default();
        let h = dmatrix![0.0];
        let c = dvector![1.0];
        let dl = dvector![0.0];
        // δ = −gᵀt = −(1)(1) < 0
        let g = dvector![1.0];
        let t = dvector![1.0];
        let ctx = ctx_from(&g, &t, &h, &c, &dl, 1.0, 0.1);
        assert_eq!(compute_alpha_min(&ctx, &cfg), 1e-5);
        // δ = 2
        let t = dvector![-2.0];
        let ctx = ctx_from(&g, &t, &h, &c, &dl, 1.0, 0.1);
        let expected = 1e-4 * 0.1f64.powf(2.01) / 2.0;
        assert!((expected - 4.886e-7).abs() < 1e-9);
        assert!((compute_alpha_min(&ctx, &cfg) - expected).abs() < 1e-18);
        let ctx = ctx_from(&g, &t, &h, &c, &dl, 1.0, 0.0);
        assert_eq!(compute_alpha_min(&ctx, &cfg), 0.0);
    }
}
