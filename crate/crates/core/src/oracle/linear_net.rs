use nalgebra::{DMatrix, DMatrixView, DVector};

use super::{hessian_from_gradient, Landscape};
use crate::error::{Error, Result};
use crate::estimators::RngStream;
use crate::linalg::sorted_symmetric_eigen;

/// Data and architecture of a fully-connected linear network
/// `W_H ... W_1 X` trained with the squared Frobenius loss.
#[derive(Clone, Debug)]
pub struct LinearNetSpec {
    /// Layer widths `d_0, ..., d_H`.
    pub widths: Vec<usize>,
    /// Inputs, `d_0 x N`.
    pub inputs: DMatrix<f64>,
    /// Targets, `d_H x N`.
    pub targets: DMatrix<f64>,
    /// 1-based indices into the eigenvalues of `Σ_YX Σ_XX^{-1} Σ_XY`,
    /// sorted in decreasing order, selecting which directions the saddle
    /// construction keeps.
    pub index_set: Vec<usize>,
    /// Multiplier on the loss.
    pub loss_scale: f64,
}

impl LinearNetSpec {
    /// Draws inputs and targets i.i.d. from the standard normal distribution.
    pub fn sampled(
        widths: Vec<usize>,
        samples: usize,
        seed: u64,
        index_set: Vec<usize>,
        loss_scale: f64,
    ) -> Result<Self> {
        if widths.len() < 3 {
            return Err(Error::invalid("linear net needs depth >= 2"));
        }
        let mut rng = RngStream::new(seed);
        let d0 = widths[0];
        let dh = *widths.last().unwrap();
        let inputs = DMatrix::from_iterator(d0, samples, rng.standard_normal(d0 * samples).iter().copied());
        let targets =
            DMatrix::from_iterator(dh, samples, rng.standard_normal(dh * samples).iter().copied());
        let spec = LinearNetSpec {
            widths,
            inputs,
            targets,
            index_set,
            loss_scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    /// Total number of weights `sum_h d_h d_{h-1}`.
    pub fn parameter_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1]).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.widths.len() < 3 || self.widths.contains(&0) {
            return Err(Error::invalid("linear net needs depth >= 2 and positive widths"));
        }
        let n = self.inputs.ncols();
        if self.inputs.nrows() != self.widths[0]
            || self.targets.nrows() != *self.widths.last().unwrap()
            || self.targets.ncols() != n
            || n == 0
        {
            return Err(Error::invalid("data shapes do not match the layer widths"));
        }
        if !(self.loss_scale > 0.0 && self.loss_scale.is_finite()) {
            return Err(Error::invalid("loss scale must be positive"));
        }
        Ok(())
    }

    /// Splits a flat parameter vector into per-layer views. Layers are
    /// stored in order `W_1, ..., W_H`, each column-major.
    pub fn layers<'a>(&self, w: &'a [f64]) -> Vec<DMatrixView<'a, f64>> {
        let mut offset = 0;
        self.widths
            .windows(2)
            .map(|pair| {
                let (cols, rows) = (pair[0], pair[1]);
                let view = DMatrixView::from_slice(&w[offset..offset + rows * cols], rows, cols);
                offset += rows * cols;
                view
            })
            .collect()
    }

    /// Closed-form critical point `W*`:
    /// `W_1 = [U_S^T Σ_YX Σ_XX^{-1}; 0]`, `W_h = I` for `2 <= h <= H-1`,
    /// `W_H = [U_S, 0]`.
    pub fn construct_saddle(&self) -> Result<DVector<f64>> {
        self.validate()?;
        let d0 = self.widths[0];
        let h = self.depth();
        if self.widths[1..h].iter().any(|w| *w != d0) {
            return Err(Error::invalid(
                "closed-form saddle needs every hidden width equal to the input width",
            ));
        }
        let sxx = &self.inputs * self.inputs.transpose();
        let syx = &self.targets * self.inputs.transpose();
        let sxx_inv = sxx
            .clone()
            .cholesky()
            .ok_or_else(|| Error::invalid("input covariance is singular"))?
            .inverse();
        let rmin = self.widths.iter().copied().min().unwrap();
        let mut seen = vec![false; rmin + 1];
        for &i in &self.index_set {
            if i == 0 || i > rmin || seen[i] {
                return Err(Error::invalid(format!(
                    "index set entry {i} outside 1..={rmin} or repeated"
                )));
            }
            seen[i] = true;
        }
        let sigma = &syx * &sxx_inv * syx.transpose();
        let (vals, vecs) = sorted_symmetric_eigen(&((sigma.clone() + sigma.transpose()) * 0.5));
        let dy = vals.len();
        // Eigenvalues sorted descending: position i (1-based) is column dy - i.
        let us: Vec<DVector<f64>> = self
            .index_set
            .iter()
            .map(|&i| vecs.column(dy - i).into_owned())
            .collect();
        let s = us.len();
        let proj = &syx * &sxx_inv;

        let mut w1 = DMatrix::zeros(self.widths[1], d0);
        for (row, u) in us.iter().enumerate() {
            let r = u.transpose() * &proj;
            w1.set_row(row, &r);
        }
        let mut wh = DMatrix::zeros(dy, self.widths[h - 1]);
        for (col, u) in us.iter().enumerate().take(s) {
            wh.set_column(col, u);
        }
        let mut flat = Vec::with_capacity(self.parameter_count());
        flat.extend_from_slice(w1.as_slice());
        for _ in 2..h {
            flat.extend_from_slice(DMatrix::<f64>::identity(d0, d0).as_slice());
        }
        flat.extend_from_slice(wh.as_slice());
        Ok(DVector::from_vec(flat))
    }
}

/// Loss landscape `f(W) = scale * ||W_H ... W_1 X - Y||_F^2` over the flat
/// parameter vector.
#[derive(Clone, Debug)]
pub struct LinearNet {
    spec: LinearNetSpec,
    saddle: Option<DVector<f64>>,
    scratch: Vec<DMatrix<f64>>,
}

impl LinearNet {
    pub fn new(spec: LinearNetSpec) -> Result<Self> {
        spec.validate()?;
        let saddle = spec.construct_saddle().ok();
        let n = spec.inputs.ncols();
        let scratch = spec.widths[1..].iter().map(|&w| DMatrix::zeros(w, n)).collect();
        Ok(LinearNet {
            spec,
            saddle,
            scratch,
        })
    }

    pub fn spec(&self) -> &LinearNetSpec {
        &self.spec
    }

    fn forward(&self, w: &[f64]) -> Vec<DMatrix<f64>> {
        let mut acts = vec![self.spec.inputs.clone()];
        for layer in self.spec.layers(w) {
            let next = layer * acts.last().unwrap();
            acts.push(next);
        }
        acts
    }
}

impl Landscape for LinearNet {
    fn name(&self) -> &str {
        "linear_net"
    }

    fn dim(&self) -> usize {
        self.spec.parameter_count()
    }

    fn value(&mut self, w: &[f64]) -> Result<f64> {
        let layers = self.spec.layers(w);
        for (h, layer) in layers.iter().enumerate() {
            let (done, rest) = self.scratch.split_at_mut(h);
            let src = if h == 0 { &self.spec.inputs } else { &done[h - 1] };
            rest[0].gemm(1.0, layer, src, 0.0);
        }
        let out = self.scratch.last().unwrap();
        let loss = out
            .iter()
            .zip(self.spec.targets.iter())
            .map(|(p, y)| (p - y) * (p - y))
            .sum::<f64>();
        Ok(self.spec.loss_scale * loss)
    }

    fn gradient(&self, w: &[f64]) -> Option<DVector<f64>> {
        let acts = self.forward(w);
        let layers = self.spec.layers(w);
        let mut back = (acts.last().unwrap() - &self.spec.targets) * (2.0 * self.spec.loss_scale);
        let mut grads: Vec<DMatrix<f64>> = Vec::with_capacity(layers.len());
        for h in (0..layers.len()).rev() {
            grads.push(&back * acts[h].transpose());
            back = layers[h].transpose() * back;
        }
        grads.reverse();
        let flat: Vec<f64> = grads.iter().flat_map(|g| g.iter().copied()).collect();
        Some(DVector::from_vec(flat))
    }

    /// Central differences of the analytic gradient.
    fn hessian(&self, w: &[f64]) -> Option<DMatrix<f64>> {
        Some(hessian_from_gradient(w, 1e-5, |p| self.gradient(p).unwrap()))
    }

    fn known_saddle(&self) -> Option<DVector<f64>> {
        self.saddle.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(index_set: Vec<usize>) -> LinearNetSpec {
        LinearNetSpec::sampled(vec![3, 3, 3, 2], 12, 7, index_set, 1.0).unwrap()
    }

    #[test]
    fn parameter_count_sums_layer_sizes() {
        let spec = LinearNetSpec::sampled(vec![10, 10, 10, 10, 10, 4], 100, 0, vec![1, 2], 1.0).unwrap();
        assert_eq!(spec.parameter_count(), 440);
    }

    #[test]
    fn constructed_point_is_critical() {
        for s in [vec![], vec![1], vec![2], vec![1, 2]] {
            let net = LinearNet::new(small_spec(s.clone())).unwrap();
            let w = net.known_saddle().unwrap();
            let g = net.gradient(w.as_slice()).unwrap();
            let scale = net.spec.targets.norm_squared();
            assert!(g.norm() <= 1e-10 * scale, "S={s:?}: |g| = {:e}", g.norm());
        }
    }

    #[test]
    fn zero_targets_vanish_at_zero_first_layer() {
        let mut spec = small_spec(vec![]);
        spec.targets.fill(0.0);
        let mut net = LinearNet::new(spec).unwrap();
        let w = net.spec.construct_saddle().unwrap();
        assert_eq!(net.value(w.as_slice()).unwrap(), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut net = LinearNet::new(small_spec(vec![1])).unwrap();
        let mut rng = RngStream::new(3);
        let w = rng.standard_normal(net.dim()) * 0.5;
        super::super::testing::check_gradient(&mut net, w.as_slice(), 1e-6, 1e-7);
    }

    #[test]
    fn flattening_is_layer_major_column_major() {
        let spec = small_spec(vec![]);
        let w: Vec<f64> = (0..spec.parameter_count()).map(|i| i as f64).collect();
        let layers = spec.layers(&w);
        assert_eq!(layers[0][(1, 0)], 1.0);
        assert_eq!(layers[0][(0, 1)], 3.0);
        assert_eq!(layers[1][(0, 0)], 9.0);
        assert_eq!(layers[2].shape(), (2, 3));
    }

    #[test]
    fn singular_inputs_are_rejected() {
        let mut spec = small_spec(vec![1]);
        spec.inputs.row_mut(0).fill(0.0);
        assert!(spec.construct_saddle().is_err());
    }
}
