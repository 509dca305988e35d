use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::{grad_estimate, hess_vec_estimate, hessian_estimate, RngStream};
use crate::oracle::{Objective, Quadratic};

/// Monte-Carlo mean of one estimator component against its target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentCheck {
    pub estimator: String,
    pub component: String,
    pub mean: f64,
    pub expected: f64,
    pub std_err: f64,
}

impl ComponentCheck {
    /// `(mean - expected) / std_err`; zero when both the error and the
    /// spread vanish.
    pub fn z_score(&self) -> f64 {
        let diff = self.mean - self.expected;
        if self.std_err == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / self.std_err
        }
    }
}

struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    n: usize,
}

impl Moments {
    fn new(len: usize) -> Self {
        Moments {
            sum: vec![0.0; len],
            sum_sq: vec![0.0; len],
            n: 0,
        }
    }

    fn push(&mut self, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self.sum[i] += v;
            self.sum_sq[i] += v * v;
        }
        self.n += 1;
    }

    fn finish(&self, name: &str, labels: &[String], expected: &[f64]) -> Vec<ComponentCheck> {
        let n = self.n as f64;
        (0..self.sum.len())
            .map(|i| {
                let mean = self.sum[i] / n;
                let var = ((self.sum_sq[i] - n * mean * mean) / (n - 1.0)).max(0.0);
                ComponentCheck {
                    estimator: name.into(),
                    component: labels[i].clone(),
                    mean,
                    expected: expected[i],
                    std_err: (var / n).sqrt(),
                }
            })
            .collect()
    }
}

/// Sample means of the gradient, Hessian and Hessian-vector estimators on
/// `f = x^T A x / 2` against `A x`, `A` and `A v`.
pub fn unbiasedness_check(
    a: &DMatrix<f64>,
    x: &DVector<f64>,
    v: &DVector<f64>,
    l: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<ComponentCheck>> {
    let d = x.len();
    let mut obj = Objective::new(Quadratic::new(a.clone())?);
    let mut rng = RngStream::new(seed);
    let mut grad = Moments::new(d);
    let mut hess = Moments::new(d * d);
    let mut hv = Moments::new(d);
    for _ in 0..samples {
        let r = rng.standard_normal(d);
        grad.push(grad_estimate(&mut obj, x, &r, l)?.as_slice());
        let r = rng.standard_normal(d);
        hess.push(hessian_estimate(&mut obj, x, &r, l)?.to_dense().as_slice());
        let r = rng.standard_normal(d);
        hv.push(hess_vec_estimate(&mut obj, x, v, &r, l)?.as_slice());
    }
    let vec_labels: Vec<String> = (0..d).map(|i| format!("[{i}]")).collect();
    let mat_labels: Vec<String> = (0..d * d).map(|i| format!("[{},{}]", i % d, i / d)).collect();
    let mut out = grad.finish("gradient", &vec_labels, (a * x).as_slice());
    out.extend(hess.finish("hessian", &mat_labels, a.as_slice()));
    out.extend(hv.finish("hessian_vector", &vec_labels, (a * v).as_slice()));
    Ok(out)
}
