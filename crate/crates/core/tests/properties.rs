use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use zosaddle::harness::{
    fit_decay_order, plateau_stat, read_trace_csv, step_orders, write_trace_csv, ExperimentConfig,
};
use zosaddle::oracle::{BenchmarkSpec, MullerBrown, MullerBrownParams, Quadratic};
use zosaddle::saddlesearch::{RunMetadata, Termination, TraceRow};
use zosaddle::{
    batch_residual, eigen_search, grad_estimate, hess_vec_estimate, hessian_estimate,
    saddle_search, subspace_distance, Basis, EigenSearchConfig, Landscape, Objective, RngStream,
    RunRecord, SaddleConfig,
};

fn basis(d: usize, k: usize, seed: u64) -> Basis {
    let mut rng = RngStream::new(seed);
    Basis::orthonormalize(d, (0..k).map(|_| rng.standard_normal(d)).collect()).unwrap()
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (2usize..9).prop_flat_map(|d| (Just(d), 1..d))
}

fn diag_quadratic(diag: &[f64]) -> Objective {
    Objective::new(Quadratic::diagonal(diag).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_is_orthogonal_symmetric_involution((d, k) in dims(), seed in any::<u64>()) {
        let v = basis(d, k, seed);
        let p = v.projector();
        let refl = DMatrix::identity(d, d) - p * 2.0;
        prop_assert!((&refl - refl.transpose()).amax() < 1e-12);
        prop_assert!((&refl * &refl - DMatrix::identity(d, d)).amax() < 1e-12);
        let g = RngStream::new(seed ^ 1).standard_normal(d);
        let back = v.reflect(&v.reflect(&g));
        prop_assert!((back - &g).amax() <= 1e-12 * (1.0 + g.amax()));
    }

    #[test]
    fn eigen_search_output_is_orthonormal(
        (d, k) in dims(),
        seed in any::<u64>(),
        tilt in 1e-9f64..1e-3,
        steps in 0usize..30,
    ) {
        // Nearly parallel starting columns.
        let mut rng = RngStream::new(seed);
        let base = rng.unit_vector(d);
        let cols: Vec<DVector<f64>> = (0..k).map(|_| &base + rng.standard_normal(d) * tilt).collect();
        let v0 = Basis::orthonormalize(d, cols).unwrap();
        let diag: Vec<f64> = (0..d).map(|i| i as f64 - 1.5).collect();
        let mut obj = diag_quadratic(&diag);
        let cfg = EigenSearchConfig::fixed(k, steps, 0.05, 1e-3);
        let (v, _) = eigen_search(&mut obj, &DVector::zeros(d), &v0, &cfg, &mut rng).unwrap();
        prop_assert!(v.orthonormality_error() < 1e-8);
    }

    #[test]
    fn subspace_distance_ignores_signs((d, k) in dims(), seed in any::<u64>()) {
        let v = basis(d, k, seed);
        let w = basis(d, k, seed.wrapping_add(1));
        prop_assert!(subspace_distance(&v, &v.negated()).unwrap() < 1e-12);
        let a = subspace_distance(&v, &w).unwrap();
        let b = subspace_distance(&w.negated(), &v).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
    }

    #[test]
    fn estimators_charge_exact_evaluations(d in 1usize..12, m in 1usize..20, seed in any::<u64>()) {
        let diag: Vec<f64> = (0..d).map(|i| 1.0 + i as f64).collect();
        let mut obj = diag_quadratic(&diag);
        let mut rng = RngStream::new(seed);
        let x = rng.standard_normal(d);
        let v = rng.unit_vector(d);
        let charged = |obj: &mut Objective, f: &mut dyn FnMut(&mut Objective)| {
            let before = obj.eval_count();
            f(obj);
            obj.eval_count() - before
        };
        let r = rng.standard_normal(d);
        prop_assert_eq!(charged(&mut obj, &mut |o| { grad_estimate(o, &x, &r, 1e-3).unwrap(); }), 2);
        prop_assert_eq!(charged(&mut obj, &mut |o| { hessian_estimate(o, &x, &r, 1e-3).unwrap(); }), 3);
        prop_assert_eq!(charged(&mut obj, &mut |o| { hess_vec_estimate(o, &x, &v, &r, 1e-3).unwrap(); }), 4);
        let mut inner = RngStream::new(seed ^ 7);
        let used = charged(&mut obj, &mut |o| { batch_residual(o, &x, &v, 1e-3, m, &mut inner).unwrap(); });
        prop_assert_eq!(used, 4 * m as u64);
    }

    #[test]
    fn saddle_search_accounting_per_row(
        k in 1usize..3,
        n_x in 0usize..25,
        n_v in 0usize..6,
        stride in 1usize..5,
        seed in any::<u64>(),
    ) {
        let mut obj = diag_quadratic(&[-1.0, -0.5, 1.0, 2.0]);
        let mut cfg = SaddleConfig::constant(k, n_x, 0.05, 1e-3, n_v, 0.05);
        cfg.record_every = stride;
        let x0 = DVector::from_element(4, 0.1);
        let rec = saddle_search(&mut obj, &x0, &Basis::empty(4), &cfg, &mut RngStream::new(seed)).unwrap();
        prop_assert!(rec.termination.is_success());
        prop_assert_eq!(rec.last().unwrap().n, n_x);
        for row in &rec.rows {
            prop_assert_eq!(row.cumulative_evals, row.n as u64 * (2 + 4 * k as u64 * n_v as u64));
            prop_assert_eq!(row.cumulative_evals, cfg.fixed_evals(row.n));
        }
    }

    #[test]
    fn identical_seed_identical_rows(seed in any::<u64>()) {
        let cfg = SaddleConfig::constant(1, 15, 1e-4, 1e-3, 5, 2e-4);
        let run = || {
            let mut obj = Objective::new(MullerBrown::new(MullerBrownParams::default()));
            saddle_search(&mut obj, &DVector::from_column_slice(&[0.0, 1.0]), &Basis::empty(2), &cfg, &mut RngStream::new(seed)).unwrap()
        };
        prop_assert_eq!(run().rows, run().rows);
    }

    #[test]
    fn plateau_is_permutation_invariant(
        mins in proptest::collection::vec(1e-14f64..1.0, 1..12),
        shuffle in any::<u64>(),
    ) {
        let rec = |m: f64| RunRecord {
            rows: vec![TraceRow { n: 0, x: vec![], dist_sq: Some(m), grad_norm_sq: None, cumulative_evals: 0 }],
            termination: Termination::Completed,
            metadata: RunMetadata::default(),
        };
        let records: Vec<RunRecord> = mins.iter().map(|m| rec(*m)).collect();
        let mut permuted = records.clone();
        let mut state = shuffle;
        for i in (1..permuted.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            permuted.swap(i, (state >> 33) as usize % (i + 1));
        }
        let a = plateau_stat(&records).unwrap();
        let b = plateau_stat(&permuted).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn pure_power_ladders_recover_their_order(order in 1.0f64..6.0, c in 1e-3f64..1e3) {
        let ladder: Vec<(f64, f64)> = (8..13).map(|e| {
            let l = 2f64.powi(-e);
            (l, c * l.powf(order))
        }).collect();
        prop_assert!((fit_decay_order(&ladder).unwrap() - order).abs() < 1e-9);
        for o in step_orders(&ladder.iter().map(|p| p.1).collect::<Vec<_>>()).into_iter().flatten() {
            prop_assert!((o - order).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trips_bits(values in proptest::collection::vec(proptest::num::f64::NORMAL, 3..30)) {
        let rows: Vec<TraceRow> = values.chunks(3).enumerate().map(|(n, c)| TraceRow {
            n,
            x: vec![c[0], *c.get(1).unwrap_or(&0.0)],
            dist_sq: c.get(2).copied(),
            grad_norm_sq: if n % 2 == 0 { None } else { Some(c[0].abs()) },
            cumulative_evals: 6 * n as u64,
        }).collect();
        let rec = RunRecord { rows, termination: Termination::Completed, metadata: RunMetadata::default() };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trace_csv(&rec, 2, &path).unwrap();
        prop_assert_eq!(read_trace_csv(&path).unwrap(), rec.rows);
    }

    #[test]
    fn muller_brown_gradient_matches_central_differences(x in -1.5f64..1.0, y in -0.5f64..2.0) {
        let mut mb = MullerBrown::new(MullerBrownParams::default());
        let g = mb.gradient(&[x, y]).unwrap();
        let h = 1e-5;
        for i in 0..2 {
            let mut p = [x, y];
            let mut m = [x, y];
            p[i] += h;
            m[i] -= h;
            let fd = (mb.value(&p).unwrap() - mb.value(&m).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-5 * (1.0 + g[i].abs()), "{} vs {}", fd, g[i]);
        }
    }

    #[test]
    fn replica_seeds_follow_the_base(base in 0u64..1_000_000, replicas in 1usize..50) {
        let cfg = ExperimentConfig {
            benchmark: BenchmarkSpec::SumOfSines { d: 2 },
            x0: vec![0.0, 0.0].into(),
            v0: None,
            search: SaddleConfig::constant(1, 1, 0.1, 1e-3, 1, 0.1),
            replicas,
            seed_base: base,
            output: None,
        };
        let seeds = cfg.seeds();
        prop_assert_eq!(seeds.len(), replicas);
        for (i, s) in seeds.iter().enumerate() {
            prop_assert_eq!(*s, base + i as u64);
        }
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
