//! Seeded statistical properties of the inner eigenvector search.

use nalgebra::DVector;
use zosaddle::eigensearch::{AlphaScaling, BatchRule};
use zosaddle::oracle::Quadratic;
use zosaddle::{
    eigen_search, subspace_distance, Basis, EigenSearchConfig, Objective, RngStream, StepSchedule,
    Stopping,
};

fn quadratic() -> Objective {
    Objective::new(Quadratic::diagonal(&[-2.0, 1.0, 3.0]).unwrap())
}

fn e(i: usize) -> DVector<f64> {
    DVector::from_fn(3, |j, _| if i == j { 1.0 } else { 0.0 })
}

fn residual_cfg(k: usize, cap: usize, alpha: f64, tolerance: f64, m: usize) -> EigenSearchConfig {
    EigenSearchConfig {
        stopping: Stopping::ResidualBatch {
            tolerance,
            batch: BatchRule::Fixed { m },
        },
        ..EigenSearchConfig::fixed(k, cap, alpha, 1e-4)
    }
}

#[test]
fn negated_start_gives_the_same_projector() {
    let x = DVector::zeros(3);
    let cfg = EigenSearchConfig::fixed(2, 200, 0.05, 1e-3);
    for seed in 0..10 {
        let mut rng = RngStream::new(100 + seed);
        let v0 = Basis::orthonormalize(3, vec![rng.standard_normal(3), rng.standard_normal(3)]).unwrap();
        let (a, _) = eigen_search(&mut quadratic(), &x, &v0, &cfg, &mut RngStream::new(seed)).unwrap();
        let (b, _) =
            eigen_search(&mut quadratic(), &x, &v0.negated(), &cfg, &mut RngStream::new(seed)).unwrap();
        assert!(subspace_distance(&a, &b).unwrap() < 1e-10, "seed {seed}");
    }
}

#[test]
fn rayleigh_quotient_decreases_on_average() {
    let x = DVector::zeros(3);
    let a = Quadratic::diagonal(&[-2.0, 1.0, 3.0]).unwrap().matrix().clone();
    let cfg = EigenSearchConfig {
        alpha_v: StepSchedule::PowerLaw {
            gamma: 0.1,
            m: 10.0,
            p: 1.0,
        },
        ..EigenSearchConfig::fixed(1, 2000, 0.0, 1e-3)
    };
    let (mut before, mut after) = (0.0, 0.0);
    for seed in 0..100 {
        let mut rng = RngStream::new(seed);
        let v0 = Basis::orthonormalize(3, vec![rng.standard_normal(3)]).unwrap();
        let v = v0.column(0);
        before += v.dot(&(&a * v));
        let (w, _) = eigen_search(&mut quadratic(), &x, &v0, &cfg, &mut rng).unwrap();
        let w = w.column(0);
        after += w.dot(&(&a * w));
    }
    assert!(after < before, "mean Rayleigh quotient {} -> {}", before / 100.0, after / 100.0);
}

#[test]
fn residual_stopping_fires_from_random_starts() {
    let x = DVector::zeros(3);
    let cfg = residual_cfg(1, 50_000, 0.05, 0.2, 1000);
    for seed in 0..5 {
        let (v, diag) = eigen_search(&mut quadratic(), &x, &Basis::empty(3), &cfg, &mut RngStream::new(seed)).unwrap();
        assert!(diag.converged[0], "seed {seed}: {:?}", diag.residual_norms);
        assert!(diag.iterations[0] < 50_000);
        assert!(v.column(0)[0].abs() > 0.9);
    }
}

#[test]
fn warm_start_fires_within_ten_iterations() {
    let x = DVector::zeros(3);
    let cfg = residual_cfg(1, 10, 2e-4, 0.05, 10_000);
    let v0 = Basis::orthonormalize(3, vec![e(0)]).unwrap();
    let seeds = 20;
    let fired = (0..seeds)
        .filter(|&seed| {
            let (_, diag) = eigen_search(&mut quadratic(), &x, &v0, &cfg, &mut RngStream::new(seed)).unwrap();
            diag.converged[0]
        })
        .count();
    assert!(fired * 10 >= seeds as usize * 9, "{fired}/{seeds}");
}

#[test]
fn residual_stopping_charges_its_batches() {
    let x = DVector::zeros(3);
    let m = 50;
    let cfg = residual_cfg(2, 7, 0.05, 1e-9, m);
    let mut obj = quadratic();
    let (_, diag) = eigen_search(&mut obj, &x, &Basis::empty(3), &cfg, &mut RngStream::new(1)).unwrap();
    let steps: usize = diag.iterations.iter().sum();
    assert_eq!(steps, 14);
    assert_eq!(diag.evals, (4 * steps + 4 * m * steps) as u64);
    assert_eq!(obj.eval_count(), diag.evals);
}

#[test]
fn inverse_dim_scaling_divides_the_step() {
    let x = DVector::zeros(3);
    let v0 = Basis::orthonormalize(3, vec![DVector::from_column_slice(&[1.0, 1.0, 1.0])]).unwrap();
    let scaled = EigenSearchConfig {
        alpha_scaling: AlphaScaling::InverseDim,
        ..EigenSearchConfig::fixed(1, 5, 0.3, 1e-3)
    };
    let plain = EigenSearchConfig::fixed(1, 5, 0.1, 1e-3);
    let (a, _) = eigen_search(&mut quadratic(), &x, &v0, &scaled, &mut RngStream::new(4)).unwrap();
    let (b, _) = eigen_search(&mut quadratic(), &x, &v0, &plain, &mut RngStream::new(4)).unwrap();
    assert!((a.column(0) - b.column(0)).amax() < 1e-12);
}
