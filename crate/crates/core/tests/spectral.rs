use kahler_flow::spectral::{
    build_grid, evaluate, integrate_round, laplace_round, round_mean, solve_poisson_round, SpectralGrid, SymField,
};
use proptest::prelude::*;

fn band_limited(grid: &SpectralGrid<f64>, coeffs: &[f64]) -> SymField<f64> {
    let mut c = vec![0.0; grid.n_nodes()];
    for (l, a) in coeffs.iter().enumerate().take(grid.n_nodes()) {
        c[l] = a / (1 + l * l) as f64;
    }
    SymField::from_coeffs(grid, c).unwrap()
}

/// Second-order conservative stencil for the Laplace-Beltrami operator in theta.
fn fd_laplace_beltrami(f: impl Fn(f64) -> f64, theta: f64, h: f64) -> f64 {
    let (fm, f0, fp) = (f((theta - h).cos()), f(theta.cos()), f((theta + h).cos()));
    let (sm, sp) = ((theta - 0.5 * h).sin(), (theta + 0.5 * h).sin());
    (sp * (fp - f0) - sm * (f0 - fm)) / (h * h * theta.sin())
}

fn fd_error(f: &SymField<f64>, lf: &SymField<f64>, h: f64) -> f64 {
    let mut worst = 0.0f64;
    let mut theta = 0.5;
    while theta <= std::f64::consts::PI - 0.5 {
        let fd = fd_laplace_beltrami(|x| evaluate(f, x), theta, h);
        // laplace_round is half the Laplace-Beltrami operator
        worst = worst.max((fd - 2.0 * evaluate(lf, theta.cos())).abs());
        theta += 0.05;
    }
    worst
}

#[test]
fn spectral_laplacian_matches_finite_differences_at_second_order() {
    let g: SpectralGrid<f64> = build_grid(32).unwrap();
    let cases: [&[f64]; 3] = [
        &[0.0, 0.4, -0.7, 0.3, 0.9, -0.2, 0.5],
        &[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0],
        &[0.2, 0.0, 0.0, 0.8, 0.0, 0.0, -0.6, 0.0, 0.0, 0.3],
    ];
    for coeffs in cases {
        let f = band_limited(&g, coeffs);
        let lf = laplace_round(&g, &f).unwrap();
        let (e1, e2) = (fd_error(&f, &lf, 0.02), fd_error(&f, &lf, 0.01));
        let order = (e1 / e2).log2();
        assert!(order >= 1.8, "observed order {order} ({e1:e} -> {e2:e})");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grid_contract(n in 8usize..96) {
        let g: SpectralGrid<f64> = build_grid(n).unwrap();
        prop_assert_eq!(g.max_degree(), n - 1);
        prop_assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(g.nodes().iter().all(|x| x.abs() < 1.0));
        prop_assert!(g.weights().iter().all(|w| *w > 0.0));
        let s: f64 = g.weights().iter().sum();
        prop_assert!((s - 2.0).abs() <= 2e-12 * 2.0);
        for k in [0, 1, n - 1, 2 * n - 2, 2 * n - 1] {
            let q = g.quadrature(&g.nodes().iter().map(|x| x.powi(k as i32)).collect::<Vec<_>>());
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            prop_assert!((q - exact).abs() <= 1e-12 * exact.abs().max(1.0), "degree {} on {} nodes", k, n);
        }
    }

    #[test]
    fn transforms_round_trip(coeffs in proptest::collection::vec(-1.0f64..1.0, 40)) {
        let g: SpectralGrid<f64> = build_grid(40).unwrap();
        let back = g.forward(&g.inverse(&coeffs));
        for (a, b) in back.iter().zip(&coeffs) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn poisson_inverts_laplacian(coeffs in proptest::collection::vec(-1.0f64..1.0, 1..48)) {
        let g: SpectralGrid<f64> = build_grid(48).unwrap();
        let f = band_limited(&g, &coeffs);
        let f = f.shift(-round_mean(&g, &f).unwrap());
        let back = solve_poisson_round(&g, &laplace_round(&g, &f).unwrap()).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn laplacian_output_has_zero_mean(coeffs in proptest::collection::vec(-1.0f64..1.0, 1..32)) {
        let g: SpectralGrid<f64> = build_grid(32).unwrap();
        let lf = laplace_round(&g, &band_limited(&g, &coeffs)).unwrap();
        prop_assert!(integrate_round(&g, &lf).unwrap().abs() <= 1e-13);
    }

    #[test]
    fn integration_is_linear(a in -3.0f64..3.0, c1 in proptest::collection::vec(-1.0f64..1.0, 16), c2 in proptest::collection::vec(-1.0f64..1.0, 16)) {
        let g: SpectralGrid<f64> = build_grid(16).unwrap();
        let (f, h) = (band_limited(&g, &c1), band_limited(&g, &c2));
        let lhs = integrate_round(&g, &f.axpby(a, &h, 1.0)).unwrap();
        let rhs = a * integrate_round(&g, &f).unwrap() + integrate_round(&g, &h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}
