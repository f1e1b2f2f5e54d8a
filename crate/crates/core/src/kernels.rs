//! Dense kernels built on one orthogonal factorization of `Aᵀ` per iterate:
//! null-space projection, projected multipliers, the minimum-norm normal
//! step and the first-order residual.

use nalgebra::DVector;
use thiserror::Error;

use crate::problem::{EvalCounters, EvalError, Matrix, ProblemDef, Request, Vector};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum KernelError {
    #[error("jacobian is rank deficient (smallest singular value {sigma_min:e}, norm {norm:e})")]
    RankDeficient { sigma_min: f64, norm: f64 },
    #[error("jacobian has shape {rows}x{cols}; need 1 <= rows <= cols")]
    Shape { rows: usize, cols: usize },
    #[error("zero direction")]
    ZeroDirection,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Thin and complementary orthonormal bases from `Aᵀ = [Y Z] [R; 0]`.
#[derive(Debug, Clone)]
pub struct JacobianFactorization {
    y: Matrix,
    z: Matrix,
    r: Matrix,
    sigma_min: f64,
    norm: f64,
}

impl JacobianFactorization {
    /// Orthonormal basis of the row space of `A` (n×m).
    pub fn range_basis(&self) -> &Matrix {
        &self.y
    }

    /// Orthonormal basis of the null space of `A` (n×(n−m)).
    pub fn null_basis(&self) -> &Matrix {
        &self.z
    }

    /// Upper-triangular factor with `AAᵀ = RᵀR`.
    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    /// Spectral norm of `A`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn m(&self) -> usize {
        self.y.ncols()
    }

    /// Dimension of the null space.
    pub fn nullity(&self) -> usize {
        self.z.ncols()
    }
}

/// Householder QR of `Aᵀ` with the full orthogonal factor accumulated.
pub fn factorize_jacobian(a: &Matrix, rank_tol: f64) -> Result<JacobianFactorization, KernelError> {
    let (m, n) = a.shape();
    if m == 0 || m > n {
        return Err(KernelError::Shape { rows: m, cols: n });
    }
    let mut work = a.transpose();
    let mut q = Matrix::identity(n, n);
    for k in 0..m {
        let x = work.view((k, k), (n - k, 1)).column(0).clone_owned();
        let xnorm = x.norm();
        if xnorm == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.norm();
        if vnorm == 0.0 {
            continue;
        }
        v /= vnorm;

        let mut block = work.view_mut((k, k), (n - k, m - k));
        let vt_block = v.tr_mul(&block);
        block -= (&v * vt_block) * 2.0;

        let mut qcols = q.view_mut((0, k), (n, n - k));
        let qv = &qcols * &v;
        qcols -= (qv * v.transpose()) * 2.0;
    }
    let r = work.view((0, 0), (m, m)).upper_triangle();
    let sv = r.clone().singular_values();
    let norm = sv.max();
    let sigma_min = sv.min();
    if norm == 0.0 || sigma_min < rank_tol * norm {
        return Err(KernelError::RankDeficient { sigma_min, norm });
    }
    Ok(JacobianFactorization {
        y: q.columns(0, m).clone_owned(),
        z: q.columns(m, n - m).clone_owned(),
        r,
        sigma_min,
        norm,
    })
}

/// `P v = Z Zᵀ v`, the orthogonal projection onto the null space of `A`.
pub fn project(fac: &JacobianFactorization, v: &Vector) -> Vector {
    if fac.nullity() == 0 {
        return Vector::zeros(v.len());
    }
    &fac.z * fac.z.tr_mul(v)
}

/// Least-squares multipliers `λ = (AAᵀ)⁻¹A g = R⁻¹ Yᵀ g`.
pub fn multipliers(fac: &JacobianFactorization, g: &Vector) -> Vector {
    fac.r
        .solve_upper_triangular(&fac.y.tr_mul(g))
        .expect("nonsingular triangular factor")
}

/// Minimum-norm solution of `A n + c = 0`, i.e. `n = −Aᵀ(AAᵀ)⁻¹c = −Y R⁻ᵀ c`.
pub fn normal_step(fac: &JacobianFactorization, c: &Vector) -> Vector {
    let s = fac
        .r
        .tr_solve_upper_triangular(c)
        .expect("nonsingular triangular factor");
    -(&fac.y * s)
}

/// Right-hand side of the normal-step bound:
/// `β₁·min{1, β₂/(√σ)^β₃}/√σ`.
pub fn normal_step_bound(sigma: f64, beta1: f64, beta2: f64, beta3: f64) -> f64 {
    let root = sigma.sqrt();
    beta1 * (beta2 / root.powf(beta3)).min(1.0) / root
}

pub fn normal_step_condition(n: &Vector, sigma: f64, beta1: f64, beta2: f64, beta3: f64) -> bool {
    n.norm() <= normal_step_bound(sigma, beta1, beta2, beta3)
}

/// First-order quantities at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct KktQuantities {
    pub lambda: Vector,
    pub pg: Vector,
    pub pg_norm: f64,
    /// Constraint violation `‖c‖`.
    pub h: f64,
    /// `max(‖Pg‖, ‖c‖)`.
    pub res: f64,
    /// `ℓ = f − λᵀc`.
    pub lagrangian_value: f64,
}

pub fn kkt_quantities(f: f64, g: &Vector, c: &Vector, fac: &JacobianFactorization) -> KktQuantities {
    let lambda = multipliers(fac, g);
    let pg = project(fac, g);
    let pg_norm = pg.norm();
    let h = c.norm();
    KktQuantities {
        lagrangian_value: f - lambda.dot(c),
        lambda,
        pg,
        pg_norm,
        h,
        res: pg_norm.max(h),
    }
}

/// One-sided difference of the multiplier function along `d`:
/// `(λ(x + h_d d) − λ(x)) / h_d` with `h_d = √ε (1 + ‖x‖) / ‖d‖`.
///
/// Costs one gradient and one Jacobian evaluation at the probe point.
pub fn directional_multiplier_derivative(
    problem: &ProblemDef,
    x: &Vector,
    d: &Vector,
    lambda_x: &Vector,
    counters: &mut EvalCounters,
    rank_tol: f64,
) -> Result<DVector<f64>, KernelError> {
    let dnorm = d.norm();
    if dnorm == 0.0 {
        return Err(KernelError::ZeroDirection);
    }
    let step = f64::EPSILON.sqrt() * (1.0 + x.norm()) / dnorm;
    let probe = x + d * step;
    let ev = problem.evaluate(&probe, Request::G | Request::A, counters)?;
    let fac = factorize_jacobian(ev.a.as_ref().expect("requested"), rank_tol)?;
    let lambda_probe = multipliers(&fac, ev.g.as_ref().expect("requested"));
    Ok((lambda_probe - lambda_x) / step)
}
