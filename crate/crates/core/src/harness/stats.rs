use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{hess_vec_estimate, hessian_estimate, RngStream};
use crate::oracle::Objective;
use crate::saddlesearch::RunRecord;

/// Plateau detection: the trace counts as settled once it comes within this
/// factor of its minimum.
pub const PLATEAU_FACTOR: f64 = 3.0;

/// Fewest points accepted by [`fit_linear_rate`].
pub const MIN_RATE_POINTS: usize = 20;

/// Mean over replicas of each replica's minimum `dist_sq`.
pub fn plateau_stat(records: &[RunRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::invalid("no records"));
    }
    let mut sum = 0.0;
    for (i, rec) in records.iter().enumerate() {
        if rec.rows.iter().any(|r| r.dist_sq.is_none()) {
            return Err(Error::MissingReference(format!(
                "{} (replica {i} has no reference saddle)",
                rec.metadata.benchmark
            )));
        }
        sum += rec
            .min_dist_sq()
            .ok_or_else(|| Error::invalid(format!("replica {i} has no finite dist_sq")))?;
    }
    Ok(sum / records.len() as f64)
}

/// Ordinary least squares `y = intercept + slope * x`; returns
/// `(slope, intercept, rms residual)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("least squares needs at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("abscissae are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Ok((slope, intercept, (rss / n).sqrt()))
}

/// Least-squares slope of `log plateau` against `log l`.
pub fn fit_decay_order(ladder: &[(f64, f64)]) -> Result<f64> {
    if ladder.len() < 3 {
        return Err(Error::invalid("decay fit needs at least three ladder points"));
    }
    if ladder.iter().any(|(l, p)| !(*l > 0.0) || !(*p > 0.0)) {
        return Err(Error::invalid("ladder lengths and plateaus must be positive"));
    }
    let xs: Vec<f64> = ladder.iter().map(|(l, _)| l.ln()).collect();
    let ys: Vec<f64> = ladder.iter().map(|(_, p)| p.ln()).collect();
    Ok(least_squares(&xs, &ys)?.0)
}

/// Rung-by-rung orders `log2(plateau[r-1] / plateau[r])` for a halving ladder.
pub fn step_orders(plateaus: &[f64]) -> Vec<Option<f64>> {
    (0..plateaus.len())
        .map(|r| (r > 0).then(|| (plateaus[r - 1] / plateaus[r]).log2()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub l: f64,
    pub alpha: f64,
    pub plateau: f64,
    pub order: Option<f64>,
}

/// Plateau errors on an `(l, α)` grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    /// Builds the table from `(l, α, plateau)` triples; orders are filled in
    /// per `α` column with `l` sorted descending.
    pub fn from_plateaus(entries: &[(f64, f64, f64)]) -> Self {
        let mut alphas: Vec<f64> = entries.iter().map(|e| e.1).collect();
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        let mut rows = Vec::new();
        for alpha in alphas {
            let mut col: Vec<(f64, f64)> = entries
                .iter()
                .filter(|e| e.1 == alpha)
                .map(|e| (e.0, e.2))
                .collect();
            col.sort_by(|a, b| b.0.total_cmp(&a.0));
            let orders = step_orders(&col.iter().map(|c| c.1).collect::<Vec<_>>());
            for ((l, plateau), order) in col.into_iter().zip(orders) {
                rows.push(SummaryRow { l, alpha, plateau, order });
            }
        }
        SummaryTable { rows }
    }

    pub fn column(&self, alpha: f64) -> Vec<&SummaryRow> {
        self.rows.iter().filter(|r| r.alpha == alpha).collect()
    }

    /// Fitted decay order per `α`.
    pub fn decay_orders(&self) -> Vec<(f64, Result<f64>)> {
        let mut alphas: Vec<f64> = self.rows.iter().map(|r| r.alpha).collect();
        alphas.dedup();
        alphas
            .into_iter()
            .map(|a| {
                let ladder: Vec<(f64, f64)> = self.column(a).iter().map(|r| (r.l, r.plateau)).collect();
                (a, fit_decay_order(&ladder))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRate {
    /// Slope of `ln dist_sq` per iteration over the fitted window.
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the fit in log space.
    pub residual: f64,
    /// Mean `dist_sq` over the plateau tail.
    pub plateau: f64,
    /// First iteration of the plateau.
    pub plateau_start: usize,
    pub points: usize,
}

/// Fits `ln dist_sq ~ n` on the rows from `skip` up to the plateau.
///
/// The plateau starts at the first row within [`PLATEAU_FACTOR`] of the trace
/// minimum.
pub fn fit_linear_rate(record: &RunRecord, skip: usize) -> Result<LinearRate> {
    let series: Vec<(usize, f64)> = record
        .rows
        .iter()
        .map(|r| {
            r.dist_sq
                .map(|d| (r.n, d))
                .ok_or_else(|| Error::MissingReference(record.metadata.benchmark.clone()))
        })
        .collect::<Result<_>>()?;
    rate_from_series(&series, skip)
}

pub fn rate_from_series(series: &[(usize, f64)], skip: usize) -> Result<LinearRate> {
    let min = series
        .iter()
        .map(|s| s.1)
        .filter(|v| v.is_finite())
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::invalid("empty trace"))?;
    if !(min > 0.0) {
        return Err(Error::invalid("trace reaches zero error; no plateau to fit"));
    }
    let knee = series
        .iter()
        .position(|s| s.1 <= PLATEAU_FACTOR * min)
        .unwrap_or(series.len());
    let tail = &series[knee..];
    let plateau = tail.iter().map(|s| s.1).sum::<f64>() / tail.len() as f64;
    let window: Vec<&(usize, f64)> = series[..knee].iter().filter(|s| s.0 >= skip).collect();
    if window.len() < MIN_RATE_POINTS {
        return Err(Error::invalid(format!(
            "pre-plateau window has {} points, need {MIN_RATE_POINTS}",
            window.len()
        )));
    }
    let xs: Vec<f64> = window.iter().map(|s| s.0 as f64).collect();
    let ys: Vec<f64> = window.iter().map(|s| s.1.ln()).collect();
    let (slope, intercept, residual) = least_squares(&xs, &ys)?;
    Ok(LinearRate {
        slope,
        intercept,
        residual,
        plateau,
        plateau_start: series[knee.min(series.len() - 1)].0,
        points: window.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub d: usize,
    /// Sample standard deviation of the entries of `H v`.
    pub hessian_std: f64,
    /// Sample standard deviation of the entries of `H_v`.
    pub hess_vec_std: f64,
    /// Mean of `|H|_F^2`.
    pub hessian_second_moment: f64,
    /// Mean of `|H v|^2`.
    pub hessian_vec_second_moment: f64,
    /// Mean of `|H_v|^2`.
    pub hess_vec_second_moment: f64,
}

fn sample_std(sum: f64, sum_sq: f64, count: usize) -> f64 {
    let n = count as f64;
    let mean = sum / n;
    ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0).sqrt()
}

/// Spread of the Hessian and Hessian-vector estimators across dimensions.
///
/// `make(d)` supplies the objective and evaluation point for dimension `d`;
/// one unit vector `v` is drawn per dimension.
pub fn variance_study(
    mut make: impl FnMut(usize) -> Result<(Objective, DVector<f64>)>,
    dims: &[usize],
    samples: usize,
    l: f64,
    rng: &mut RngStream,
) -> Result<Vec<VarianceRow>> {
    if samples < 100 {
        return Err(Error::invalid("variance study needs at least 100 samples"));
    }
    let mut out = Vec::with_capacity(dims.len());
    for &d in dims {
        let (mut obj, x) = make(d)?;
        let v = rng.unit_vector(d);
        let (mut h_sum, mut h_sq, mut hv_sum, mut hv_sq) = (0.0, 0.0, 0.0, 0.0);
        let (mut h_frob, mut h_vec_norm) = (0.0, 0.0);
        for _ in 0..samples {
            let r = rng.standard_normal(d);
            let h = hessian_estimate(&mut obj, &x, &r, l)?;
            let hv = h.apply(&v);
            h_sum += hv.sum();
            h_sq += hv.norm_squared();
            h_vec_norm += hv.norm_squared();
            let r2 = h.direction.norm_squared();
            h_frob += h.coef * h.coef * (r2 * r2 - 2.0 * r2 + d as f64);

            let r = rng.standard_normal(d);
            let e = hess_vec_estimate(&mut obj, &x, &v, &r, l)?;
            hv_sum += e.sum();
            hv_sq += e.norm_squared();
        }
        let entries = samples * d;
        out.push(VarianceRow {
            d,
            hessian_std: sample_std(h_sum, h_sq, entries),
            hess_vec_std: sample_std(hv_sum, hv_sq, entries),
            hessian_second_moment: h_frob / samples as f64,
            hessian_vec_second_moment: h_vec_norm / samples as f64,
            hess_vec_second_moment: hv_sq / samples as f64,
        });
    }
    Ok(out)
}
