//! Equality-constrained NLP definition, counted evaluation and
//! finite-difference fallbacks.
//!
//! A problem is `min f(x) s.t. c(x) = 0` with `x ∈ Rⁿ` and `c: Rⁿ → Rᵐ`,
//! `1 ≤ m ≤ n`. The Jacobian `A(x)` stores constraint gradients as rows.
//! When supplied, the Lagrangian Hessian map receives `(x, λ)` and must
//! return `∇²f(x) − Σ λᵢ ∇²cᵢ(x)`, matching the Lagrangian `ℓ = f − λᵀc`.

use std::fmt;
use std::ops::BitOr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

type ScalarMap = dyn Fn(&Vector) -> f64 + Send + Sync;
type VectorMap = dyn Fn(&Vector) -> Vector + Send + Sync;
type MatrixMap = dyn Fn(&Vector) -> Matrix + Send + Sync;
type HessianMap = dyn Fn(&Vector, &Vector) -> Matrix + Send + Sync;

/// Relative step used by every central-difference formula in the crate.
pub(crate) fn central_step(xi: f64) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + xi.abs())
}

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("invalid dimensions n={n}, m={m}: need 1 <= m <= n")]
    InvalidDimensions { n: usize, m: usize },
}

/// Which member of an evaluation failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Member {
    Objective,
    Constraints,
    Gradient,
    Jacobian,
    Hessian,
}

impl fmt::Display for Member {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Member::Objective => "objective",
            Member::Constraints => "constraints",
            Member::Gradient => "gradient",
            Member::Jacobian => "jacobian",
            Member::Hessian => "hessian",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("non-finite {0} value")]
    NonFinite(Member),
    #[error("{member} has shape {got:?}, expected {expected:?}")]
    Shape {
        member: Member,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("point has length {got}, expected {expected}")]
    PointLength { expected: usize, got: usize },
    #[error("no analytic gradient or jacobian to check")]
    NothingToCheck,
}

/// An equality-constrained nonlinear program.
///
/// Immutable after construction; cloning shares the underlying maps, so a
/// single definition can be handed to several concurrent solves.
#[derive(Clone)]
pub struct ProblemDef {
    name: String,
    n: usize,
    m: usize,
    x0: Vector,
    objective: Arc<ScalarMap>,
    gradient: Option<Arc<VectorMap>>,
    constraints: Arc<VectorMap>,
    jacobian: Option<Arc<MatrixMap>>,
    lagrangian_hessian: Option<Arc<HessianMap>>,
}

impl fmt::Debug for ProblemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDef")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("x0", &self.x0.as_slice())
            .field("gradient", &self.gradient.is_some())
            .field("jacobian", &self.jacobian.is_some())
            .field("lagrangian_hessian", &self.lagrangian_hessian.is_some())
            .finish()
    }
}

impl ProblemDef {
    pub fn new<F, C>(
        name: impl Into<String>,
        x0: Vector,
        m: usize,
        objective: F,
        constraints: C,
    ) -> Result<Self, ProblemError>
    where
        F: Fn(&Vector) -> f64 + Send + Sync + 'static,
        C: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        let n = x0.len();
        if m == 0 || m > n {
            return Err(ProblemError::InvalidDimensions { n, m });
        }
        Ok(Self {
            name: name.into(),
            n,
            m,
            x0,
            objective: Arc::new(objective),
            gradient: None,
            constraints: Arc::new(constraints),
            jacobian: None,
            lagrangian_hessian: None,
        })
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&Vector) -> Matrix + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    /// Attach `(x, λ) ↦ ∇²f(x) − Σ λᵢ∇²cᵢ(x)`.
    pub fn with_lagrangian_hessian<H>(mut self, hessian: H) -> Self
    where
        H: Fn(&Vector, &Vector) -> Matrix + Send + Sync + 'static,
    {
        self.lagrangian_hessian = Some(Arc::new(hessian));
        self
    }

    pub fn with_x0(mut self, x0: Vector) -> Result<Self, ProblemError> {
        if x0.len() != self.n {
            return Err(ProblemError::InvalidDimensions { n: x0.len(), m: self.m });
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn has_lagrangian_hessian(&self) -> bool {
        self.lagrangian_hessian.is_some()
    }

    /// Counted evaluation of the requested members at `x`.
    ///
    /// Missing analytic derivatives are replaced by central differences; the
    /// objective/constraint calls those differences consume are counted too.
    pub fn evaluate(
        &self,
        x: &Vector,
        request: Request,
        counters: &mut EvalCounters,
    ) -> Result<Evaluation, EvalError> {
        self.check_point(x)?;
        let mut out = Evaluation::default();
        if request.f {
            out.f = Some(self.eval_f(x, counters)?);
        }
        if request.c {
            out.c = Some(self.eval_c(x, counters)?);
        }
        if request.g {
            counters.ng += 1;
            let g = match &self.gradient {
                Some(grad) => grad(x),
                None => self.fd_gradient(x, counters)?,
            };
            check_shape(Member::Gradient, (self.n, 1), (g.len(), 1))?;
            check_finite(Member::Gradient, g.iter())?;
            out.g = Some(g);
        }
        if request.a {
            counters.nj += 1;
            let a = match &self.jacobian {
                Some(jac) => jac(x),
                None => self.fd_jacobian(x, counters)?,
            };
            check_shape(Member::Jacobian, (self.m, self.n), a.shape())?;
            check_finite(Member::Jacobian, a.iter())?;
            out.a = Some(a);
        }
        Ok(out)
    }

    /// Evaluate `f`, `c`, `g` and `A` together.
    pub fn evaluate_point(&self, x: Vector, counters: &mut EvalCounters) -> Result<EvaluatedPoint, EvalError> {
        let ev = self.evaluate(&x, Request::ALL, counters)?;
        Ok(EvaluatedPoint {
            f: ev.f.expect("requested"),
            c: ev.c.expect("requested"),
            g: ev.g.expect("requested"),
            a: ev.a.expect("requested"),
            x,
        })
    }

    /// User-supplied exact Lagrangian Hessian, if any. Counts one `nh`.
    pub fn exact_lagrangian_hessian(
        &self,
        x: &Vector,
        lambda: &Vector,
        counters: &mut EvalCounters,
    ) -> Option<Result<Matrix, EvalError>> {
        let hess = self.lagrangian_hessian.as_ref()?;
        counters.nh += 1;
        let h = hess(x, lambda);
        Some(
            check_shape(Member::Hessian, (self.n, self.n), h.shape())
                .and_then(|_| check_finite(Member::Hessian, h.iter()))
                .map(|_| h),
        )
    }

    fn check_point(&self, x: &Vector) -> Result<(), EvalError> {
        if x.len() != self.n {
            return Err(EvalError::PointLength {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn eval_f(&self, x: &Vector, counters: &mut EvalCounters) -> Result<f64, EvalError> {
        counters.nf += 1;
        let f = (self.objective)(x);
        if !f.is_finite() {
            return Err(EvalError::NonFinite(Member::Objective));
        }
        Ok(f)
    }

    fn eval_c(&self, x: &Vector, counters: &mut EvalCounters) -> Result<Vector, EvalError> {
        counters.nc += 1;
        let c = (self.constraints)(x);
        check_shape(Member::Constraints, (self.m, 1), (c.len(), 1))?;
        check_finite(Member::Constraints, c.iter())?;
        Ok(c)
    }

    fn fd_gradient(&self, x: &Vector, counters: &mut EvalCounters) -> Result<Vector, EvalError> {
        let mut g = Vector::zeros(self.n);
        let mut probe = x.clone();
        for i in 0..self.n {
            let h = central_step(x[i]);
            probe[i] = x[i] + h;
            let fp = self.eval_f(&probe, counters)?;
            probe[i] = x[i] - h;
            let fm = self.eval_f(&probe, counters)?;
            probe[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        Ok(g)
    }

    fn fd_jacobian(&self, x: &Vector, counters: &mut EvalCounters) -> Result<Matrix, EvalError> {
        let mut a = Matrix::zeros(self.m, self.n);
        let mut probe = x.clone();
        for j in 0..self.n {
            let h = central_step(x[j]);
            probe[j] = x[j] + h;
            let cp = self.eval_c(&probe, counters)?;
            probe[j] = x[j] - h;
            let cm = self.eval_c(&probe, counters)?;
            probe[j] = x[j];
            a.set_column(j, &((cp - cm) / (2.0 * h)));
        }
        Ok(a)
    }
}

fn check_shape(
    member: Member,
    expected: (usize, usize),
    got: (usize, usize),
) -> Result<(), EvalError> {
    if expected != got {
        return Err(EvalError::Shape {
            member,
            expected,
            got,
        });
    }
    Ok(())
}

fn check_finite<'a>(member: Member, mut it: impl Iterator<Item = &'a f64>) -> Result<(), EvalError> {
    if it.all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(EvalError::NonFinite(member))
    }
}

/// Evaluation counters for one solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounters {
    pub nf: usize,
    pub nc: usize,
    pub ng: usize,
    pub nj: usize,
    pub nh: usize,
}

/// Set of members to compute in [`ProblemDef::evaluate`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Request {
    pub f: bool,
    pub c: bool,
    pub g: bool,
    pub a: bool,
}

impl Request {
    pub const F: Request = Request { f: true, c: false, g: false, a: false };
    pub const C: Request = Request { f: false, c: true, g: false, a: false };
    pub const G: Request = Request { f: false, c: false, g: true, a: false };
    pub const A: Request = Request { f: false, c: false, g: false, a: true };
    pub const ALL: Request = Request { f: true, c: true, g: true, a: true };

    pub fn is_empty(&self) -> bool {
        !(self.f || self.c || self.g || self.a)
    }
}

impl BitOr for Request {
    type Output = Request;

    fn bitor(self, rhs: Request) -> Request {
        Request {
            f: self.f || rhs.f,
            c: self.c || rhs.c,
            g: self.g || rhs.g,
            a: self.a || rhs.a,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evaluation {
    pub f: Option<f64>,
    pub c: Option<Vector>,
    pub g: Option<Vector>,
    pub a: Option<Matrix>,
}

/// A point with its objective, constraints, gradient and Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedPoint {
    pub x: Vector,
    pub f: f64,
    pub c: Vector,
    pub g: Vector,
    pub a: Matrix,
}

/// Worst per-entry relative error of analytic derivatives against central
/// differences. Relative error is `|analytic − fd| / max(1, |fd|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeReport {
    pub gradient_error: Option<f64>,
    pub jacobian_error: Option<f64>,
    pub passed: bool,
}

pub fn check_derivatives(
    problem: &ProblemDef,
    x: &Vector,
    tol: f64,
) -> Result<DerivativeReport, EvalError> {
    if !problem.has_gradient() && !problem.has_jacobian() {
        return Err(EvalError::NothingToCheck);
    }
    let mut counters = EvalCounters::default();
    let analytic = problem.evaluate(x, Request::G | Request::A, &mut counters)?;
    let rel = |a: f64, fd: f64| (a - fd).abs() / fd.abs().max(1.0);

    let gradient_error = if problem.has_gradient() {
        let g = analytic.g.as_ref().expect("requested");
        let fd = problem.fd_gradient(x, &mut counters)?;
        Some(g.iter().zip(fd.iter()).map(|(&a, &b)| rel(a, b)).fold(0.0, f64::max))
    } else {
        None
    };
    let jacobian_error = if problem.has_jacobian() {
        let a = analytic.a.as_ref().expect("requested");
        let fd = problem.fd_jacobian(x, &mut counters)?;
        Some(a.iter().zip(fd.iter()).map(|(&a, &b)| rel(a, b)).fold(0.0, f64::max))
    } else {
        None
    };
    let passed = gradient_error.is_none_or(|e| e <= tol) && jacobian_error.is_none_or(|e| e <= tol);
    Ok(DerivativeReport {
        gradient_error,
        jacobian_error,
        passed,
    })
}

/// `∇ₓL(x, λ) = g(x) − A(x)ᵀλ` with `λ` held fixed.
pub fn lagrangian_gradient(g: &Vector, a: &Matrix, lambda: &Vector) -> Vector {
    g - a.tr_mul(lambda)
}

/// Symmetrized central-difference Hessian of `f − λᵀc` with `λ` frozen.
pub fn fd_lagrangian_hessian(
    problem: &ProblemDef,
    x: &Vector,
    lambda: &Vector,
    counters: &mut EvalCounters,
) -> Result<Matrix, EvalError> {
    let n = problem.n();
    let mut hess = Matrix::zeros(n, n);
    let mut probe = x.clone();
    let grad_l = |p: &Vector, counters: &mut EvalCounters| -> Result<Vector, EvalError> {
        let ev = problem.evaluate(p, Request::G | Request::A, counters)?;
        Ok(lagrangian_gradient(
            ev.g.as_ref().expect("requested"),
            ev.a.as_ref().expect("requested"),
            lambda,
        ))
    };
    for j in 0..n {
        let h = central_step(x[j]);
        probe[j] = x[j] + h;
        let gp = grad_l(&probe, counters)?;
        probe[j] = x[j] - h;
        let gm = grad_l(&probe, counters)?;
        probe[j] = x[j];
        hess.set_column(j, &((gp - gm) / (2.0 * h)));
    }
    Ok((&hess + hess.transpose()) * 0.5)
}
