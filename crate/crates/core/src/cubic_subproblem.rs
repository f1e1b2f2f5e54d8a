//! Cubic-regularized tangential subproblem.
//!
//! In an orthonormal null-space basis `Z` the tangential problem reduces to
//!
//! ```text
//! min_w  g_rᵀw + ½ wᵀH_r w + (σ/3)‖w‖³,   g_r = Zᵀ(Pg),  H_r = ZᵀHZ,
//! ```
//!
//! whose global minimizer satisfies `(H_r + νI)w = −g_r`, `ν = σ‖w‖` and
//! `H_r + νI ⪰ 0`. The scalar `ν` is found on the eigenbasis of `H_r` by a
//! safeguarded Newton iteration on `ψ(ν) = ‖w(ν)‖ − ν/σ`; the hard case is
//! completed along the leftmost eigenvector.

use std::cmp::Ordering;

use crate::kernels::JacobianFactorization;
use crate::problem::{Matrix, Vector};

/// Inputs of the tangential model `m(t) = f0 + gᵀt + ½tᵀHt + (σ/3)‖t‖³`
/// restricted to the null space of the current Jacobian.
#[derive(Debug, Clone, Copy)]
pub struct TangentialModel<'a> {
    pub f0: f64,
    pub pg: &'a Vector,
    pub hessian: &'a Matrix,
    pub sigma: f64,
    pub fac: &'a JacobianFactorization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubproblemStatus {
    CauchyOnly,
    SecularConverged,
    HardCase,
}

#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub t: Vector,
    pub model_value: f64,
    pub decrease: f64,
    pub cauchy_decrease: f64,
    pub status: SubproblemStatus,
    /// Secular multiplier `ν` (zero for Cauchy-only solutions).
    pub multiplier: f64,
    /// Smallest eigenvalue of the reduced Hessian; `None` when the null
    /// space is trivial or the eigendecomposition failed.
    pub reduced_min_eigenvalue: Option<f64>,
}

/// Solution of the reduced problem in null-space coordinates.
#[derive(Debug, Clone)]
pub struct ReducedSolution {
    pub w: Vector,
    pub nu: f64,
    pub status: SubproblemStatus,
    pub min_eigenvalue: f64,
}

/// `f0 + gᵀt + ½tᵀHt + (σ/3)‖t‖³`.
pub fn tangential_model_value(t: &Vector, f0: f64, g: &Vector, h: &Matrix, sigma: f64) -> f64 {
    f0 - model_decrease(t, g, h, sigma)
}

fn model_decrease(t: &Vector, g: &Vector, h: &Matrix, sigma: f64) -> f64 {
    let tn = t.norm();
    -(g.dot(t) + 0.5 * t.dot(&(h * t)) + sigma / 3.0 * tn * tn * tn)
}

/// Lower bound on the Cauchy decrease:
/// `(‖Pg‖/(6√2))·min{‖Pg‖/(1+‖H‖), ½√(‖Pg‖/σ)}`.
pub fn cauchy_decrease_bound(pg_norm: f64, h_norm: f64, sigma: f64) -> f64 {
    pg_norm / (6.0 * std::f64::consts::SQRT_2)
        * (pg_norm / (1.0 + h_norm)).min(0.5 * (pg_norm / sigma).sqrt())
}

/// Step-length bound `√3·√(‖Pg‖/σ)` valid when the reduced Hessian is PSD.
pub fn tangential_step_bound(pg_norm: f64, sigma: f64) -> f64 {
    3f64.sqrt() * (pg_norm / sigma).sqrt()
}

/// Spectral norm of a symmetric matrix.
pub fn spectral_norm_sym(h: &Matrix) -> f64 {
    if h.is_empty() {
        return 0.0;
    }
    h.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// Exact minimizer of the model along `−Pg`: `t_c = −β* Pg`.
///
/// `φ(β) = −β‖pg‖² + ½β²(pgᵀH pg) + (σ/3)β³‖pg‖³` has the unique positive
/// stationary point of `φ′`, which is its global minimizer over `β ≥ 0`.
pub fn cauchy_step(model: &TangentialModel<'_>) -> (Vector, f64) {
    let pg = model.pg;
    let a = pg.norm_squared();
    if a == 0.0 {
        return (Vector::zeros(pg.len()), 0.0);
    }
    let b = pg.dot(&(model.hessian * pg));
    let s = a * a.sqrt();
    let qc = model.sigma * s;
    let disc = (b * b + 4.0 * qc * a).sqrt();
    let beta = if b >= 0.0 {
        2.0 * a / (b + disc)
    } else {
        (disc - b) / (2.0 * qc)
    };
    let phi = -beta * a + 0.5 * beta * beta * b + qc / 3.0 * beta * beta * beta;
    (pg * (-beta), -phi)
}

/// Default secular tolerance `1e-10·(1 + ‖g_r‖)`.
pub fn default_tolerance(g_r: &Vector) -> f64 {
    1e-10 * (1.0 + g_r.norm())
}

/// Global minimizer of `g_rᵀw + ½wᵀH_r w + (σ/3)‖w‖³`.
///
/// Returns `None` when the eigendecomposition fails to converge.
pub fn solve_reduced(h_r: &Matrix, g_r: &Vector, sigma: f64, tol: f64) -> Option<ReducedSolution> {
    let k = g_r.len();
    if k == 0 {
        return Some(ReducedSolution {
            w: Vector::zeros(0),
            nu: 0.0,
            status: SubproblemStatus::CauchyOnly,
            min_eigenvalue: 0.0,
        });
    }
    let sym = (h_r + h_r.transpose()) * 0.5;
    let eig = sym.clone().try_symmetric_eigen(f64::EPSILON, 10_000)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(Ordering::Equal)
    });
    let lam: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let q = Matrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
    let gh = q.tr_mul(g_r);
    let gnorm = g_r.norm();
    let lam_min = lam[0];
    let scale = lam.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let degenerate: Vec<bool> = lam.iter().map(|&l| l - lam_min <= 1e-12 * scale).collect();
    let nu_lo = (-lam_min).max(0.0);

    let coeffs = |nu: f64, skip_degenerate: bool| -> Vector {
        Vector::from_fn(k, |i, _| {
            if gh[i] == 0.0 || (skip_degenerate && degenerate[i]) {
                0.0
            } else {
                -gh[i] / (lam[i] + nu)
            }
        })
    };

    // hard case: no gradient weight on the leftmost eigenspace and the
    // remaining components are too short at the shifted pole
    if lam_min < 0.0 {
        let g_deg = gh
            .iter()
            .zip(&degenerate)
            .filter(|(_, &d)| d)
            .map(|(v, _)| v * v)
            .sum::<f64>()
            .sqrt();
        if g_deg <= 1e-10 * gnorm.max(f64::MIN_POSITIVE) || gnorm == 0.0 {
            let base = coeffs(nu_lo, true);
            let target = nu_lo / sigma;
            let base_norm = base.norm();
            if base_norm <= target {
                let tau = (target * target - base_norm * base_norm).max(0.0).sqrt();
                let mut u = q.column(0).clone_owned();
                if let Some(first) = u.iter().find(|v| v.abs() > 1e-14) {
                    if *first < 0.0 {
                        u = -u;
                    }
                }
                let base_w = &q * &base;
                let plus = &base_w + &u * tau;
                let minus = &base_w - &u * tau;
                let vp = -model_decrease(&plus, g_r, &sym, sigma);
                let vm = -model_decrease(&minus, g_r, &sym, sigma);
                let w = if vm < vp - 1e-15 * (1.0 + vp.abs()) { minus } else { plus };
                return Some(ReducedSolution {
                    w,
                    nu: nu_lo,
                    status: SubproblemStatus::HardCase,
                    min_eigenvalue: lam_min,
                });
            }
        }
    }

    if gnorm == 0.0 {
        return Some(ReducedSolution {
            w: Vector::zeros(k),
            nu: 0.0,
            status: SubproblemStatus::SecularConverged,
            min_eigenvalue: lam_min,
        });
    }

    // ψ(ν) = ‖w(ν)‖ − ν/σ is convex and decreasing on (ν_lo, ∞)
    let psi = |nu: f64| -> (f64, f64) {
        let mut sq = 0.0;
        let mut dsq = 0.0;
        for i in 0..k {
            if gh[i] == 0.0 {
                continue;
            }
            let den = lam[i] + nu;
            let wi = gh[i] / den;
            sq += wi * wi;
            dsq += wi * wi / den;
        }
        let norm = sq.sqrt();
        let dnorm = if norm > 0.0 { -dsq / norm } else { 0.0 };
        (norm - nu / sigma, dnorm - 1.0 / sigma)
    };
    let mut lo = nu_lo;
    let mut hi = 0.5 * (-lam_min + (lam_min * lam_min + 4.0 * sigma * gnorm).sqrt());
    hi = hi.max(lo);
    let mut nu = if lam_min + lo > 0.0 { lo } else { 0.5 * (lo + hi) };
    for _ in 0..500 {
        let (val, der) = psi(nu);
        if !val.is_finite() {
            lo = nu;
            nu = 0.5 * (lo + hi);
            continue;
        }
        if (val * sigma).abs() <= 0.1 * tol * (1.0 + nu) {
            break;
        }
        if val > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let newton = nu - val / der;
        nu = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let w = &q * coeffs(nu, false);
    Some(ReducedSolution {
        w,
        nu,
        status: SubproblemStatus::SecularConverged,
        min_eigenvalue: lam_min,
    })
}

/// Tangential step `t = Z w` from the global reduced solve, never worse
/// than the Cauchy step.
pub fn solve_reduced_arc(model: &TangentialModel<'_>, tol: Option<f64>) -> SubproblemSolution {
    let n = model.pg.len();
    let fac = model.fac;
    if fac.nullity() == 0 {
        return SubproblemSolution {
            t: Vector::zeros(n),
            model_value: model.f0,
            decrease: 0.0,
            cauchy_decrease: 0.0,
            status: SubproblemStatus::CauchyOnly,
            multiplier: 0.0,
            reduced_min_eigenvalue: None,
        };
    }
    let (t_c, cauchy_decrease) = cauchy_step(model);
    let z = fac.null_basis();
    let h_r = z.tr_mul(&(model.hessian * z));
    let g_r = z.tr_mul(model.pg);
    let tol = tol.unwrap_or_else(|| default_tolerance(&g_r));

    let cauchy = |min_eig: Option<f64>| SubproblemSolution {
        model_value: model.f0 - cauchy_decrease,
        t: t_c.clone(),
        decrease: cauchy_decrease,
        cauchy_decrease,
        status: SubproblemStatus::CauchyOnly,
        multiplier: 0.0,
        reduced_min_eigenvalue: min_eig,
    };

    let Some(red) = solve_reduced(&h_r, &g_r, model.sigma, tol) else {
        return cauchy(None);
    };
    let t = z * &red.w;
    let decrease = model_decrease(&t, model.pg, model.hessian, model.sigma);
    if !(decrease >= cauchy_decrease) {
        return cauchy(Some(red.min_eigenvalue));
    }
    SubproblemSolution {
        t,
        model_value: model.f0 - decrease,
        decrease,
        cauchy_decrease,
        status: red.status,
        multiplier: red.nu,
        reduced_min_eigenvalue: Some(red.min_eigenvalue),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::factorize_jacobian;
    use nalgebra::{dmatrix, dvector};

    fn reduced_value(h: &Matrix, g: &Vector, sigma: f64, w: &Vector) -> f64 {
        let wn = w.norm();
        g.dot(w) + 0.5 * w.dot(&(h * w)) + sigma / 3.0 * wn.powi(3)
    }

    #[test]
    fn model_value_examples() {
        let g = dvector![1.0, 0.0];
        let h = Matrix::zeros(2, 2);
        assert_eq!(tangential_model_value(&dvector![0.0, 0.0], 1.5, &g, &h, 1.0), 1.5);
        let v = tangential_model_value(&dvector![-1.0, 0.0], 1.0, &g, &h, 1.0);
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        let t = dvector![0.3, -0.2] * 0.0;
        assert_eq!(tangential_model_value(&t, 2.0, &g, &Matrix::identity(2, 2), 4.0), 2.0);
    }

    #[test]
    fn cauchy_step_unit_gradient() {
        // A = [0 0 1] leaves the first two coordinates free
        let fac = factorize_jacobian(&dmatrix![0.0, 0.0, 1.0], 1e-10).unwrap();
        let pg = dvector![1.0, 0.0, 0.0];
        let h = Matrix::zeros(3, 3);
        let model = TangentialModel { f0: 0.0, pg: &pg, hessian: &h, sigma: 1.0, fac: &fac };
        let (t, dec) = cauchy_step(&model);
        assert!((t - dvector![-1.0, 0.0, 0.0]).norm() < 1e-15);
        assert!((dec - 2.0 / 3.0).abs() < 1e-15);
        let bound = cauchy_decrease_bound(1.0, 0.0, 1.0);
        assert!((bound - 0.5 / (6.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!(bound <= dec);
    }

    #[test]
    fn cauchy_step_zero_gradient() {
        let fac = factorize_jacobian(&dmatrix![0.0, 1.0], 1e-10).unwrap();
        let pg = dvector![0.0, 0.0];
        let h = Matrix::identity(2, 2);
        let model = TangentialModel { f0: 0.0, pg: &pg, hessian: &h, sigma: 1.0, fac: &fac };
        let (t, dec) = cauchy_step(&model);
        assert_eq!(t.norm(), 0.0);
        assert_eq!(dec, 0.0);
    }

    #[test]
    fn cauchy_step_quadratic_formula() {
        let fac = factorize_jacobian(&dmatrix![0.0, 0.0, 1.0], 1e-10).unwrap();
        let pg = dvector![2.0, 0.0, 0.0];
        let h = Matrix::identity(3, 3);
        let model = TangentialModel { f0: 0.0, pg: &pg, hessian: &h, sigma: 1.5, fac: &fac };
        let (t, _) = cauchy_step(&model);
        // φ′(β) = −4 + 4β + 12β² = 0
        let beta = (-4.0 + 208f64.sqrt()) / 24.0;
        assert!((beta - 0.43426).abs() < 1e-5);
        assert!((t[0] + 2.0 * beta).abs() < 1e-14);
        assert!((t[0] + 0.8685).abs() < 1e-4);
    }

    #[test]
    fn one_dimensional_secular_root() {
        let sol = solve_reduced(&dmatrix![2.0], &dvector![-4.0], 3.0, 1e-12).unwrap();
        // 3w² + 2w − 4 = 0, w > 0
        let w = (-2.0 + (4.0f64 + 48.0).sqrt()) / 6.0;
        assert!((w - 0.86852).abs() < 1e-5);
        assert!((sol.w[0] - w).abs() < 1e-10);
        assert!((sol.nu - 3.0 * w).abs() < 1e-9);
        assert!((sol.nu - 2.6056).abs() < 1e-4);
        let resid = (2.0 + sol.nu) * sol.w[0] - 4.0;
        assert!(resid.abs() <= 1e-8);
        assert_eq!(sol.status, SubproblemStatus::SecularConverged);
    }

    #[test]
    fn zero_gradient_convex() {
        let sol = solve_reduced(&dmatrix![1.0, 0.0; 0.0, 0.0], &dvector![0.0, 0.0], 2.0, 1e-12).unwrap();
        assert_eq!(sol.w.norm(), 0.0);
        assert_eq!(sol.nu, 0.0);
    }

    #[test]
    fn hard_case_fixture() {
        let h = dmatrix![-1.0, 0.0; 0.0, 1.0];
        let g = dvector![0.0, 1.0];
        let sol = solve_reduced(&h, &g, 1.0, 1e-12).unwrap();
        assert_eq!(sol.status, SubproblemStatus::HardCase);
        assert!((sol.nu - 1.0).abs() < 1e-12);
        assert!((sol.w.norm() - 1.0).abs() < 1e-8);
        assert!((sol.w[0] - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((sol.w[1] + 0.5).abs() < 1e-12);
        // the interior secular root (√5 − 1)/2 lies below −λ_min
        let interior = (5f64.sqrt() - 1.0) / 2.0;
        assert!(interior < 1.0);
        // grid oracle on the model
        let mut best = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..=400 {
                let w = dvector![-2.0 + 4.0 * i as f64 / 400.0, -2.0 + 4.0 * j as f64 / 400.0];
                best = best.min(reduced_value(&h, &g, 1.0, &w));
            }
        }
        assert!(reduced_value(&h, &g, 1.0, &sol.w) <= best + 1e-12);
    }

    #[test]
    fn negative_curvature_with_gradient_weight() {
        let h = dmatrix![-2.0, 0.5; 0.5, 1.0];
        let g = dvector![0.3, -0.1];
        let sol = solve_reduced(&h, &g, 0.7, 1e-12).unwrap();
        let resid = (&h + Matrix::identity(2, 2) * sol.nu) * &sol.w + &g;
        assert!(resid.norm() <= 1e-10);
        assert!((sol.nu - 0.7 * sol.w.norm()).abs() <= 1e-10 * (1.0 + sol.nu));
        assert!(sol.nu >= -sol.min_eigenvalue - 1e-12);
    }

    #[test]
    fn square_jacobian_gives_zero_step() {
        let fac = factorize_jacobian(&Matrix::identity(2, 2), 1e-10).unwrap();
        let pg = dvector![0.0, 0.0];
        let h = Matrix::identity(2, 2);
        let model = TangentialModel { f0: 3.0, pg: &pg, hessian: &h, sigma: 1.0, fac: &fac };
        let sol = solve_reduced_arc(&model, None);
        assert_eq!(sol.status, SubproblemStatus::CauchyOnly);
        assert_eq!(sol.t.norm(), 0.0);
        assert_eq!(sol.decrease, 0.0);
    }

    #[test]
    fn full_space_step_dominates_cauchy() {
        let a = dmatrix![1.0, 1.0, 1.0];
        let fac = factorize_jacobian(&a, 1e-10).unwrap();
        let g = dvector![1.0, -2.0, 0.5];
        let pg = crate::kernels::project(&fac, &g);
        let h = dmatrix![2.0, 0.1, 0.0; 0.1, -1.0, 0.3; 0.0, 0.3, 0.5];
        let model = TangentialModel { f0: 1.0, pg: &pg, hessian: &h, sigma: 2.0, fac: &fac };
        let sol = solve_reduced_arc(&model, None);
        assert!(sol.decrease >= sol.cauchy_decrease);
        assert!((&a * &sol.t).norm() <= 1e-12 * (1.0 + sol.t.norm()));
        assert!(sol.model_value <= model.f0);
        let direct = tangential_model_value(&sol.t, 1.0, &pg, &h, 2.0);
        assert!((direct - sol.model_value).abs() < 1e-14);
    }
}
