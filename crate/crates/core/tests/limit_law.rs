use homlab::fields::rng_from_seed;
use homlab::limit_law::*;
use homlab::stats;
use homlab::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

const A_BAR: [f64; 4] = [1.5, 0.0, 0.0, 2.0];

fn setup(n: usize) -> (Grid, GridFunction, Vec<GridFunction>) {
    let grid = Grid::dirichlet(2, n).unwrap();
    let op = homogenized_operator(&A_BAR, 1.0, &grid).unwrap();
    let u = solve_dirichlet(&op, &GridFunction::constant(grid, 1.0), 1e-12).unwrap();
    let phis = vec![
        GridFunction::constant(grid, 1.0),
        GridFunction::from_fn(grid, |x| (-8.0 * ((x[0] - 0.3).powi(2) + (x[1] - 0.3).powi(2))).exp()),
        GridFunction::from_fn(grid, |x| x[0] + x[1] * x[1]),
    ];
    (grid, u, phis)
}

#[test]
fn white_full_field_moments() {
    let (grid, u, phis) = setup(31);
    let spec = LimitLawSpec::new(LimitKind::White { sigma: 0.5 }, &A_BAR, 1.0, u).unwrap();
    let samples = sample_white_limit(&spec, 400, 3, Execution::Parallel).unwrap();
    let centre = grid.ravel(&[15, 15]);
    let at: Vec<f64> = samples.iter().map(|x| x.values[centre]).collect();
    assert!(stats::mean(&at).abs() < 3.0 * stats::standard_error(&at));
    let quad = covariance_quadrature(&spec, &phis[1], &phis[1]).unwrap();
    let pair: Vec<f64> = samples.iter().map(|x| x.inner(&phis[1])).collect();
    let v = stats::variance(&pair);
    let se = stats::jackknife_se(&pair, stats::variance);
    assert!((v - quad).abs() < 3.0 * se, "{v} vs {quad} (se {se})");
}

#[test]
fn zero_solution_gives_zero_limit() {
    let (grid, _, _) = setup(15);
    let zero = GridFunction::zeros(grid);
    let white = LimitLawSpec::new(LimitKind::White { sigma: 1.0 }, &A_BAR, 1.0, zero.clone()).unwrap();
    for x in sample_white_limit(&white, 3, 1, Execution::Sequential).unwrap() {
        assert!(x.values.iter().all(|v| *v == 0.0));
    }
    let long = LimitLawSpec::new(LimitKind::LongRange { kappa: 1.0, alpha: 1.0 }, &A_BAR, 1.0, zero).unwrap();
    for x in sample_longrange_limit(&long, 3, 1, Execution::Sequential).unwrap() {
        assert!(x.values.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn long_range_full_field_covariance() {
    let (_, u, phis) = setup(31);
    let spec = LimitLawSpec::new(LimitKind::LongRange { kappa: 0.4, alpha: 1.0 }, &A_BAR, 1.0, u).unwrap();
    let samples = sample_longrange_limit(&spec, 400, 5, Execution::Parallel).unwrap();
    let quad = covariance_matrix(&spec, &phis).unwrap();
    let proj: Vec<Vec<f64>> = phis.iter().map(|p| samples.iter().map(|x| x.inner(p)).collect()).collect();
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = (&proj[i], &proj[j]);
            let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
            let c = stats::covariance(a, b);
            let se = stats::jackknife_se(&prod, stats::mean);
            assert!((c - quad[i * 3 + j]).abs() < 3.0 * se, "({i},{j}) {c} vs {}", quad[i * 3 + j]);
        }
    }
}

#[test]
fn projection_sampler_matches_quadrature() {
    let (_, u, phis) = setup(63);
    for kind in [LimitKind::White { sigma: 0.5 }, LimitKind::LongRange { kappa: 0.4, alpha: 1.0 }] {
        let spec = LimitLawSpec::new(kind, &A_BAR, 1.0, u.clone()).unwrap();
        let s = sample_projections(&spec, &phis, 4000, 9, 2, Execution::Parallel).unwrap();
        assert_eq!(s.count, 4000);
        let emp = s.covariance();
        let quad = covariance_matrix(&spec, &phis).unwrap();
        for (e, q) in emp.iter().zip(&quad) {
            assert!((e / q - 1.0).abs() < 0.1, "{kind:?}: {e} vs {q}");
        }
    }
}

/// Double sum over all node pairs with the cell-averaged diagonal.
fn direct_long_range(g1: &GridFunction, g2: &GridFunction, kappa: f64, alpha: f64) -> f64 {
    let grid = g1.grid;
    let h = grid.h();
    let k0 = cell_average_kernel(2, alpha).unwrap() * h.powf(-alpha);
    let mut acc = 0.0;
    for i in 0..grid.len() {
        let p = grid.point(i);
        for j in 0..grid.len() {
            let q = grid.point(j);
            let k = if i == j { k0 } else { ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).powf(-alpha / 2.0) };
            acc += g1.values[i] * g2.values[j] * k;
        }
    }
    kappa * acc * h.powi(4)
}

#[test]
fn fft_quadrature_matches_direct_double_sum() {
    let (grid, _, _) = setup(15);
    let g1 = GridFunction::from_fn(grid, |x| x[0] * (1.0 - x[1]));
    let g2 = GridFunction::from_fn(grid, |x| 1.0 + x[0] * x[1]);
    for alpha in [0.5, 1.0, 1.5] {
        let kind = LimitKind::LongRange { kappa: 0.7, alpha };
        let fast = weight_covariance(kind, &g1, &g2).unwrap();
        let slow = direct_long_range(&g1, &g2, 0.7, alpha);
        assert!((fast - slow).abs() < 1e-10 * slow.abs());
    }
}

#[test]
fn constant_weight_against_monte_carlo_integral() {
    // ∬_{[0,1]²×[0,1]²} |y − z|^{−1} by 10⁶ Monte Carlo pairs
    let mut rng = rng_from_seed(21);
    let n = 1_000_000;
    let vals: Vec<f64> = (0..n)
        .map(|_| {
            let (a, b, c, d): (f64, f64, f64, f64) = (rng.random(), rng.random(), rng.random(), rng.random());
            1.0 / ((a - c).powi(2) + (b - d).powi(2)).sqrt()
        })
        .collect();
    let mc = stats::mean(&vals);
    let grid = Grid::dirichlet(2, 127).unwrap();
    let one = GridFunction::constant(grid, 1.0);
    let quad = weight_covariance(LimitKind::LongRange { kappa: 1.0, alpha: 1.0 }, &one, &one).unwrap();
    // the interior grid misses a boundary strip of width h/2
    assert!((quad / mc - 1.0).abs() < 0.03, "{quad} vs {mc}");
}

#[test]
fn covariance_matrix_is_symmetric_psd() {
    let (_, u, phis) = setup(31);
    for kind in [LimitKind::White { sigma: 0.3 }, LimitKind::LongRange { kappa: 1.0, alpha: 1.2 }] {
        let spec = LimitLawSpec::new(kind, &A_BAR, 1.0, u.clone()).unwrap();
        let c = covariance_matrix(&spec, &phis).unwrap();
        let trace = c[0] + c[4] + c[8];
        let ev = homlab::corrector::symmetric_eigenvalues(&c, 3);
        assert!(ev.iter().all(|e| *e >= -1e-12 * trace));
        assert!(c[1] == c[3] && c[2] == c[6] && c[5] == c[7]);
    }
}

#[test]
fn variance_grows_with_alpha_on_the_unit_square() {
    // all distances in the unit square are below √2, where |x|^{−α} is
    // increasing in α for |x| < 1
    let (_, u, phis) = setup(31);
    let var = |alpha: f64| {
        let spec = LimitLawSpec::new(LimitKind::LongRange { kappa: 1.0, alpha }, &A_BAR, 1.0, u.clone()).unwrap();
        covariance_quadrature(&spec, &phis[0], &phis[0]).unwrap()
    };
    assert!(var(1.5) > var(0.5));
}

#[test]
fn long_range_rejects_alpha_at_dimension() {
    let (grid, u, _) = setup(15);
    assert!(LimitLawSpec::new(LimitKind::LongRange { kappa: 1.0, alpha: 2.0 }, &A_BAR, 1.0, u).is_err());
    let g = GridFunction::constant(grid, 1.0);
    assert!(weight_covariance(LimitKind::LongRange { kappa: 1.0, alpha: 2.5 }, &g, &g).is_err());
}

fn normal_sample(n: usize, sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let d = Normal::new(0.0, sd).unwrap();
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

#[test]
fn comparison_self_consistency_and_power() {
    let (_, u, phis) = setup(31);
    let spec = LimitLawSpec::new(LimitKind::White { sigma: 0.5 }, &A_BAR, 1.0, u).unwrap();
    let a = sample_projections(&spec, &phis, 1000, 100, 1, Execution::Parallel).unwrap();
    let b = sample_projections(&spec, &phis, 1000, 200, 1, Execution::Parallel).unwrap();
    let report = compare_distributions(&a, &b).unwrap();
    assert!(report.rows.iter().all(|r| r.ks_p_value > 0.05), "{report:?}");
    let x = ProjectionSample::new(vec![normal_sample(400, 1.0, 1)], LawTag::EmpiricalEps).unwrap();
    let y = ProjectionSample::new(vec![normal_sample(400, 2.0, 2)], LawTag::Limit).unwrap();
    let report = compare_distributions(&x, &y).unwrap();
    assert!(report.rows[0].ks_p_value < 1e-6);
    assert!(!report.all_pass());
}

#[test]
fn comparison_flags_degenerate_and_small_inputs() {
    let flat = ProjectionSample::new(vec![vec![0.0; 300]], LawTag::EmpiricalEps).unwrap();
    let y = ProjectionSample::new(vec![normal_sample(300, 1.0, 3)], LawTag::Limit).unwrap();
    let report = compare_distributions(&flat, &y).unwrap();
    assert!(report.rows[0].degenerate && !report.rows[0].pass);
    let small = ProjectionSample::new(vec![normal_sample(100, 1.0, 4)], LawTag::EmpiricalEps).unwrap();
    assert!(compare_distributions(&small, &y).is_err());
    assert!(ProjectionSample::new(vec![vec![f64::NAN; 300]], LawTag::Limit).is_err());
}

#[test]
fn reference_variances_use_chi_square_interval() {
    let x = ProjectionSample::new(vec![normal_sample(400, 1.0, 5)], LawTag::EmpiricalEps).unwrap();
    let y = ProjectionSample::new(vec![normal_sample(4000, 1.0, 6)], LawTag::Limit).unwrap();
    let r = compare_with_reference(&x, &y, Some(&[1.0])).unwrap();
    assert!(r.against_reference);
    let row = &r.rows[0];
    assert!(row.variance_ratio_ci.0 < row.variance_ratio && row.variance_ratio < row.variance_ratio_ci.1);
    assert!(row.pass, "{row:?}");
}
