//! Zeroth-order derivative estimators built from Gaussian random directions.
//!
//! With `r ~ N(0, I)` and difference length `l`:
//!
//! - gradient: `F(x, r, l) = (f(x + l r) - f(x - l r)) / (2 l) * r`, two
//!   evaluations, unbiased for the gradient of the Gaussian smoothing
//!   `f_l(x) = E f(x + l r)`;
//! - Hessian: `H(x, r, l) = (f(x + l r) + f(x - l r) - 2 f(x)) / (2 l^2) * (r r^T - I)`,
//!   three evaluations, unbiased for the Hessian of `f_l`, with second moment
//!   growing like `d^4`;
//! - Hessian-vector: `H_v(x, r, l) = (F(x + l v, r, l) - F(x - l v, r, l)) / (2 l)`,
//!   four evaluations sharing one `r`, second moment growing like `d`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Basis;
use crate::oracle::Objective;

pub const GRAD_EVALS: u64 = 2;
pub const HESSIAN_EVALS: u64 = 3;
pub const HESS_VEC_EVALS: u64 = 4;

/// Tolerance on `| ||v|| - 1 |` for the Hessian-vector direction.
pub const UNIT_TOL: f64 = 1e-8;

/// Seeded stream of standard-normal vectors.
///
/// The generator is ChaCha8 keyed by `seed_from_u64(seed)`; normals come
/// from `rand_distr::StandardNormal` (ziggurat). The same seed always yields
/// the same sequence.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn standard_normal(&mut self, d: usize) -> DVector<f64> {
        DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut self.rng)))
    }

    pub fn normal_scalar(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// A Gaussian vector normalized to unit length.
    pub fn unit_vector(&mut self, d: usize) -> DVector<f64> {
        loop {
            let v = self.standard_normal(d);
            let n = v.norm();
            if n > 1e-12 {
                return v / n;
            }
        }
    }
}

/// One draw of the Hessian estimator, kept in factored form
/// `coef * (r r^T - I)`.
#[derive(Clone, Debug)]
pub struct HessianSample {
    pub coef: f64,
    pub direction: DVector<f64>,
}

impl HessianSample {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.direction.len();
        (&self.direction * self.direction.transpose() - DMatrix::identity(d, d)) * self.coef
    }

    /// `coef * (r (r^T v) - v)` without forming the matrix.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let rv = self.direction.dot(v);
        (&self.direction * rv - v) * self.coef
    }

    /// `r r^T - I` has eigenvalue `|r|^2 - 1` once and `-1` with
    /// multiplicity `d - 1`.
    pub fn spectral_norm(&self) -> f64 {
        let top = (self.direction.norm_squared() - 1.0).abs();
        let rest = if self.direction.len() > 1 { 1.0 } else { 0.0 };
        self.coef.abs() * top.max(rest)
    }
}

fn check_length(l: f64) -> Result<()> {
    if l > 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("difference length must be positive, got {l}")))
    }
}

fn check_dims(obj: &Objective, vectors: &[&DVector<f64>]) -> Result<()> {
    for v in vectors {
        if v.len() != obj.dim() {
            return Err(Error::DimensionMismatch {
                expected: obj.dim(),
                got: v.len(),
            });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("non-finite input vector"));
        }
    }
    Ok(())
}

/// Two-point quotient `(f(x + l r) - f(x - l r)) / (2 l)`.
fn two_point_quotient(obj: &mut Objective, x: &DVector<f64>, r: &DVector<f64>, l: f64) -> Result<f64> {
    let plus = obj.eval(&(x + r * l))?;
    let minus = obj.eval(&(x - r * l))?;
    Ok((plus - minus) / (2.0 * l))
}

/// Two-point gradient estimate `F(x, r, l)`.
pub fn grad_estimate(
    obj: &mut Objective,
    x: &DVector<f64>,
    r: &DVector<f64>,
    l: f64,
) -> Result<DVector<f64>> {
    check_length(l)?;
    check_dims(obj, &[x, r])?;
    Ok(r * two_point_quotient(obj, x, r, l)?)
}

/// Hessian estimate `H(x, r, l)` in factored form.
pub fn hessian_estimate(
    obj: &mut Objective,
    x: &DVector<f64>,
    r: &DVector<f64>,
    l: f64,
) -> Result<HessianSample> {
    check_length(l)?;
    check_dims(obj, &[x, r])?;
    let plus = obj.eval(&(x + r * l))?;
    let minus = obj.eval(&(x - r * l))?;
    let center = obj.eval(x)?;
    Ok(HessianSample {
        coef: (plus + minus - 2.0 * center) / (2.0 * l * l),
        direction: r.clone(),
    })
}

/// Hessian-vector estimate `H_v(x, r, l)` along the unit vector `v`.
pub fn hess_vec_estimate(
    obj: &mut Objective,
    x: &DVector<f64>,
    v: &DVector<f64>,
    r: &DVector<f64>,
    l: f64,
) -> Result<DVector<f64>> {
    check_length(l)?;
    check_dims(obj, &[x, v, r])?;
    let norm = v.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::invalid(format!("direction must be a unit vector, |v| = {norm}")));
    }
    let up = two_point_quotient(obj, &(x + v * l), r, l)?;
    let down = two_point_quotient(obj, &(x - v * l), r, l)?;
    Ok(r * ((up - down) / (2.0 * l)))
}

/// Mean of `m` independent Hessian-vector estimates.
pub fn mean_hess_vec(
    obj: &mut Objective,
    x: &DVector<f64>,
    v: &DVector<f64>,
    l: f64,
    m: usize,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    if m == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    let mut acc = DVector::zeros(x.len());
    for _ in 0..m {
        let r = rng.standard_normal(x.len());
        acc += hess_vec_estimate(obj, x, v, &r, l)?;
    }
    Ok(acc / m as f64)
}

/// Batch residual `(I - v v^T) mean(H_v)` over `m` fresh directions; `4 m`
/// evaluations.
pub fn batch_residual(
    obj: &mut Objective,
    x: &DVector<f64>,
    v: &DVector<f64>,
    l: f64,
    m: usize,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    deflated_batch_residual(obj, x, v, &Basis::empty(x.len()), l, m, rng)
}

/// Batch residual with the already-found directions also projected out:
/// `(I - v v^T - sum_i u_i u_i^T) mean(H_v)`.
pub fn deflated_batch_residual(
    obj: &mut Objective,
    x: &DVector<f64>,
    v: &DVector<f64>,
    deflate: &Basis,
    l: f64,
    m: usize,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    let mean = mean_hess_vec(obj, x, v, l, m, rng)?;
    let mut out = deflate.project_out(&mean);
    let coef = v.dot(&mean);
    out.axpy(-coef, v, 1.0);
    Ok(out)
}
