use homlab::experiments::*;
use homlab::fields::*;
use homlab::solver::SolverOptions;
use homlab::*;
use nalgebra::{DMatrix, DVector};

fn short() -> PotentialModel {
    PotentialModel::ShortRange(ShortRangeModel {
        q_bar: 1.0,
        m: 2.0,
        bump_radius: 1.0,
        amplitude: None,
    })
}

fn config(model: PotentialModel, n_realizations: usize, exec: Execution) -> SweepConfig {
    let grid = Grid::dirichlet(2, 63).unwrap();
    SweepConfig {
        grid,
        coefficients: TorusField::pattern(Pattern::SinLayered, 2, 32).unwrap(),
        cell_n: 32,
        eps_list: vec![0.5, 0.25, 0.125],
        n_realizations,
        test_functions: vec![
            GridFunction::constant(grid, 1.0),
            GridFunction::from_fn(grid, |x| x[0] * x[1]),
        ],
        source: GridFunction::constant(grid, 1.0),
        model,
        s_diag: 0.25,
        base_seed: 17,
        neumann_terms: true,
        common_random_numbers: false,
        solver: SolverOptions::default(),
        execution: exec,
    }
}

#[test]
fn deterministic_potential_has_no_fluctuations() {
    let cfg = config(PotentialModel::Constant { q_bar: 1.0, m: 2.0 }, 50, Execution::Parallel);
    let r = run_sweep(&cfg).unwrap();
    assert!(r.failures.is_empty());
    for l in &r.levels {
        assert_eq!(l.n_realizations, 50);
        assert_eq!(l.energy.mean, 0.0);
        assert!(l.pairings.iter().flatten().all(|p| *p == 0.0));
        assert_eq!(l.w_norm.unwrap().mean, 0.0);
        assert_eq!(l.hs_diag.unwrap().mean, 0.0);
    }
    let w = weak_pairing_stats(&r, 0).unwrap();
    assert!(w.levels.iter().all(|l| l.variance == 0.0));
    let t = tightness_diagnostic(&r, 0.25).unwrap();
    assert!(t.levels.iter().all(|l| l.value.mean == 0.0));
}

#[test]
fn config_validation() {
    let mut cfg = config(short(), 50, Execution::Sequential);
    cfg.n_realizations = 49;
    assert!(cfg.validate().is_err());
    let mut cfg = config(short(), 50, Execution::Sequential);
    cfg.eps_list = vec![0.5, 0.25, 0.125, 0.0625];
    let msg = cfg.validate().unwrap_err().to_string();
    assert!(msg.contains("need 8"), "{msg}");
    let mut cfg = config(short(), 50, Execution::Sequential);
    cfg.eps_list = vec![0.25, 0.5];
    assert!(cfg.validate().is_err());
}

#[test]
fn replay_is_bitwise_and_execution_independent() {
    let a = run_sweep(&config(short(), 50, Execution::Parallel)).unwrap();
    let b = run_sweep(&config(short(), 50, Execution::Parallel)).unwrap();
    let c = run_sweep(&config(short(), 50, Execution::Sequential)).unwrap();
    let ja = serde_json::to_string(&a).unwrap();
    assert_eq!(ja, serde_json::to_string(&b).unwrap());
    assert_eq!(ja, serde_json::to_string(&c).unwrap());
}

#[test]
fn leave_one_out_correction_is_order_one_over_n() {
    for n in [50usize, 100] {
        let r = run_sweep(&config(short(), n, Execution::Parallel)).unwrap();
        for l in &r.levels {
            let rel = l.energy.mean / l.energy_plain.mean - 1.0;
            let expected = 1.0 / (n as f64 - 1.0);
            assert!((rel - expected).abs() < 1e-9, "n = {n}: {rel}");
        }
    }
}

#[test]
fn records_are_consistent() {
    let r = run_sweep(&config(short(), 60, Execution::Parallel)).unwrap();
    let eps = r.eps_list();
    assert_eq!(eps, vec![0.5, 0.25, 0.125]);
    for l in &r.levels {
        assert_eq!(l.realizations.len(), 60);
        assert!(l.realizations.iter().all(|x| x.fluctuation_norm >= 0.0));
        // s = 0 diagnostic is the scaled squared leading-term norm
        let scale = l.eps.powi(-2);
        let direct: f64 = l.realizations.iter().map(|x| scale * x.w_norm.unwrap().powi(2)).sum::<f64>() / 60.0;
        assert!((l.l2_diag.unwrap().mean - direct).abs() < 1e-12 * direct);
        // hierarchy of the Neumann terms
        let (w, s, rem) = (l.w_norm.unwrap().mean, l.second_term.unwrap().mean, l.remainder.unwrap().mean);
        assert!(w > s && s > rem, "{w} {s} {rem}");
    }
    let t = tightness_diagnostic(&r, 0.0).unwrap();
    assert_eq!(t.levels.len(), 3);
    assert!(tightness_diagnostic(&r, 0.3).is_err());
    let seeds: std::collections::BTreeSet<u64> =
        r.levels.iter().flat_map(|l| l.realizations.iter().map(|x| x.seed)).collect();
    assert_eq!(seeds.len(), 180);
}

#[test]
fn common_random_numbers_share_seeds() {
    let mut cfg = config(short(), 50, Execution::Parallel);
    cfg.common_random_numbers = true;
    let r = run_sweep(&cfg).unwrap();
    let first: Vec<u64> = r.levels[0].realizations.iter().map(|x| x.seed).collect();
    assert!(r.levels.iter().all(|l| l.realizations.iter().map(|x| x.seed).collect::<Vec<_>>() == first));
}

fn decomposition_setup() -> (Grid, DirichletOperator, GridFunction) {
    let grid = Grid::dirichlet(2, 31).unwrap();
    let a = TorusField::pattern(Pattern::SinLayered, 2, 32).unwrap();
    let base = assemble_oscillatory(&a, 0.25, &GridFunction::constant(grid, 1.0), &grid).unwrap();
    (grid, base, GridFunction::constant(grid, 1.0))
}

#[test]
fn neumann_terms_vanish_without_noise() {
    let (grid, base, f) = decomposition_setup();
    let field = FieldRealization {
        q: GridFunction::constant(grid, 1.0),
        q_bar: 1.0,
        eps: 0.25,
        seed: 0,
        clipped: 0,
    };
    let d = neumann_decomposition(&base, &f, &field, &SolverOptions::default()).unwrap();
    assert_eq!(d.w_norm, 0.0);
    assert_eq!(d.second_norm, 0.0);
    assert_eq!(d.remainder_norm, 0.0);
}

#[test]
fn constant_shift_matches_dense_resolvent() {
    let (grid, base, f) = decomposition_setup();
    let c = 0.4;
    let field = FieldRealization {
        q: GridFunction::constant(grid, 1.0 + c),
        q_bar: 1.0,
        eps: 0.25,
        seed: 0,
        clipped: 0,
    };
    let d = neumann_decomposition(&base, &f, &field, &SolverOptions::with_tol(1e-12)).unwrap();
    let len = grid.len();
    let mut dense = DMatrix::zeros(len, len);
    let mut e = vec![0.0; len];
    let mut out = vec![0.0; len];
    for j in 0..len {
        e[j] = 1.0;
        base.apply(&e, &mut out);
        dense.set_column(j, &DVector::from_vec(out.clone()));
        e[j] = 0.0;
    }
    let lu = dense.lu();
    let v = lu.solve(&DVector::from_vec(f.values.clone())).unwrap();
    let w = lu.solve(&(-c * &v)).unwrap();
    let got = d.w.unwrap();
    let err = got.values.iter().zip(w.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-9 * w.amax(), "{err}");
    let s = lu.solve(&(-c * &w)).unwrap();
    let got = d.second.unwrap();
    let err = got.values.iter().zip(s.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8 * s.amax());
    assert!(d.identity_error < 1e-8);
}

#[test]
fn random_realization_satisfies_identity() {
    let (grid, base, f) = decomposition_setup();
    let field = sample_short_range(&short(), &grid, 0.25, 3).unwrap();
    let d = neumann_decomposition(&base, &f, &field, &SolverOptions::default()).unwrap();
    assert!(d.identity_error <= 100.0 * 1e-10);
    assert!(d.w_norm > d.second_norm && d.second_norm > d.remainder_norm);
}

#[test]
fn synthetic_noisy_power_law() {
    use rand::Rng;
    let mut rng = rng_from_seed(4);
    let eps: Vec<f64> = (3..8).map(|k| 0.5f64.powi(k)).collect();
    let vals: Vec<f64> = eps.iter().map(|e| 2.0 * e.powf(1.5) * (1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0))).collect();
    let fit = fit_scaling(&eps, &vals).unwrap();
    assert!((1.35..=1.65).contains(&fit.slope));
    assert!(fit.slope_se >= 0.0 && (0.0..=1.0).contains(&fit.r2));
    let exact = fit_scaling(&eps, &eps).unwrap();
    assert!((exact.slope - 1.0).abs() < 1e-12 && exact.slope_se < 1e-12 && (exact.r2 - 1.0).abs() < 1e-12);
    assert!(fit_scaling(&[0.5], &[0.5]).is_err());
}
