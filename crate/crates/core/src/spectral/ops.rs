use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::field::SymField;
use super::grid::SpectralGrid;

/// `integral over S^2 of f dA` on the unit round sphere: `2 pi sum_j w_j f(x_j)`.
pub fn integrate_round<T: Scalar>(grid: &SpectralGrid<T>, f: &SymField<T>) -> Result<T> {
    grid.check_len(f.len())?;
    Ok(T::TAU() * grid.quadrature(f.values()))
}

/// Integral of a raw nodal product `f * g` against the round area.
pub fn integrate_product<T: Scalar>(grid: &SpectralGrid<T>, f: &[T], g: &[T]) -> T {
    let s: T = grid.weights().iter().zip(f.iter().zip(g)).map(|(&w, (&a, &b))| w * a * b).sum();
    T::TAU() * s
}

/// Round-area mean; equals the degree-0 Legendre coefficient.
pub fn round_mean<T: Scalar>(grid: &SpectralGrid<T>, f: &SymField<T>) -> Result<T> {
    Ok(integrate_round(grid, f)? / (T::lit(4.0) * T::PI()))
}

/// Eigenvalue of the complex Laplacian on the degree-`l` Legendre mode: `-l(l+1)/2`.
pub fn laplace_eigenvalue<T: Scalar>(l: usize) -> T {
    -T::from_usize_lossy(l * (l + 1)) / T::lit(2.0)
}

/// Complex Laplacian against the round form, `(1/2) d/dx((1 - x^2) df/dx)`.
pub fn laplace_round<T: Scalar>(grid: &SpectralGrid<T>, f: &SymField<T>) -> Result<SymField<T>> {
    grid.check_len(f.len())?;
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(l, &c)| c * laplace_eigenvalue::<T>(l))
        .collect();
    SymField::from_coeffs(grid, coeffs)
}

/// Inverts [`laplace_round`] in the gauge of zero round mean.
///
/// The right-hand side must itself have zero round mean (within `1e-9`).
pub fn solve_poisson_round<T: Scalar>(grid: &SpectralGrid<T>, g: &SymField<T>) -> Result<SymField<T>> {
    grid.check_len(g.len())?;
    let mean = g.coeffs()[0];
    if mean.abs() > T::tol(1e-9, 1e4) {
        return Err(Error::Unsolvable { mean: mean.as_f64() });
    }
    let mut coeffs = vec![T::zero(); grid.n_nodes()];
    for (l, c) in g.coeffs().iter().enumerate().skip(1) {
        coeffs[l] = *c / laplace_eigenvalue::<T>(l);
    }
    SymField::from_coeffs(grid, coeffs)
}

/// Dirichlet energy `integral |grad u|^2 dA` for the round metric.
///
/// Computed modally: `sum_l l(l+1) c_l^2 * 4 pi / (2l + 1)`.
pub fn dirichlet_energy<T: Scalar>(f: &SymField<T>) -> T {
    let four_pi = T::lit(4.0) * T::PI();
    f.coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(l, &c)| T::from_usize_lossy(l * (l + 1)) * c * c * four_pi / T::from_usize_lossy(2 * l + 1))
        .sum()
}

/// First-eigenspace moment `integral f x dA` (only `P_1` contributes).
pub fn first_moment<T: Scalar>(f: &SymField<T>) -> T {
    f.coeffs()[1] * T::lit(4.0) * T::PI() / T::lit(3.0)
}

/// Evaluates the Legendre series of `f` at any `x` in `[-1, 1]`.
pub fn evaluate<T: Scalar>(f: &SymField<T>, x: T) -> T {
    evaluate_coeffs(f.coeffs(), x)
}

pub fn evaluate_coeffs<T: Scalar>(coeffs: &[T], x: T) -> T {
    let mut p_prev = T::one();
    let mut acc = coeffs[0];
    if coeffs.len() == 1 {
        return acc;
    }
    let mut p = x;
    acc += coeffs[1] * x;
    for (l, &c) in coeffs.iter().enumerate().skip(2) {
        let k = T::from_usize_lossy(l - 1);
        let next = ((k + k + T::one()) * x * p - k * p_prev) / (k + T::one());
        p_prev = p;
        p = next;
        acc += c * p;
    }
    acc
}

/// Extrema of the interpolant over the whole sphere, poles included.
///
/// Dense sampling locates the candidate, golden-section search refines it.
pub fn extrema<T: Scalar>(grid: &SpectralGrid<T>, f: &SymField<T>) -> (T, T) {
    let coeffs = f.coeffs();
    let m = 4 * grid.n_nodes();
    let samples: Vec<T> = (0..=m)
        .map(|i| -(T::PI() * T::from_usize_lossy(i) / T::from_usize_lossy(m)).cos())
        .collect();
    let vals: Vec<T> = samples.iter().map(|&x| evaluate_coeffs(coeffs, x)).collect();
    let lo = refine(&samples, &vals, coeffs, T::one());
    let hi = refine(&samples, &vals, coeffs, -T::one());
    (lo.min(f.min_value()), hi.max(f.max_value()))
}

/// Minimum of `sign * f` near the best sample.
fn refine<T: Scalar>(samples: &[T], vals: &[T], coeffs: &[T], sign: T) -> T {
    let (best, best_val) = vals
        .iter()
        .enumerate()
        .map(|(i, &v)| (i, sign * v))
        .fold((0, T::infinity()), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let mut a = samples[best.saturating_sub(1)];
    let mut b = samples[(best + 1).min(samples.len() - 1)];
    let g = T::lit(0.618_033_988_749_894_9);
    let h = |x: T| sign * evaluate_coeffs(coeffs, x);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = h(c);
    let mut fd = h(d);
    for _ in 0..200 {
        if (b - a).abs() <= T::epsilon() * T::lit(4.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = h(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = h(d);
        }
    }
    best_val.min(fc).min(fd).min(h(a)).min(h(b)) * sign
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::build_grid;
    use std::f64::consts::PI;

    fn grid(n: usize) -> SpectralGrid<f64> {
        build_grid(n).unwrap()
    }

    #[test]
    fn integrate_constants_and_monomials() {
        let g = grid(32);
        let one = SymField::constant(&g, 1.0);
        assert!((integrate_round(&g, &one).unwrap() - 4.0 * PI).abs() < 1e-12);
        let x = SymField::from_fn(&g, |x| x);
        assert!(integrate_round(&g, &x).unwrap().abs() < 1e-13);
        let x2 = SymField::from_fn(&g, |x| x * x);
        assert!((integrate_round(&g, &x2).unwrap() - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn laplace_examples() {
        let g = grid(32);
        let x = SymField::legendre(&g, 1, 1.0).unwrap();
        let lx = laplace_round(&g, &x).unwrap();
        for (a, b) in lx.values().iter().zip(x.values()) {
            assert!((a + b).abs() < 1e-12);
        }
        let c = SymField::constant(&g, 3.5);
        assert!(laplace_round(&g, &c).unwrap().sup_norm() < 1e-12);
        let p2 = SymField::legendre(&g, 2, 1.0).unwrap();
        let lp2 = laplace_round(&g, &p2).unwrap();
        for (a, b) in lp2.values().iter().zip(p2.values()) {
            assert!((a + 3.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_examples() {
        let g = grid(32);
        let rhs = SymField::legendre(&g, 1, -1.0).unwrap();
        let f = solve_poisson_round(&g, &rhs).unwrap();
        for (&x, &v) in g.nodes().iter().zip(f.values()) {
            assert!((v - x).abs() < 1e-12);
        }
        let zero = SymField::zeros(&g);
        assert_eq!(solve_poisson_round(&g, &zero).unwrap().sup_norm(), 0.0);
        let rhs = SymField::legendre(&g, 2, -3.0).unwrap();
        let f = solve_poisson_round(&g, &rhs).unwrap();
        let p2 = SymField::legendre(&g, 2, 1.0).unwrap();
        assert!(f.sub(&p2).sup_norm() < 1e-12);
    }

    #[test]
    fn poisson_rejects_nonzero_mean() {
        let g = grid(16);
        let rhs = SymField::constant(&g, 1e-3);
        assert!(matches!(solve_poisson_round(&g, &rhs), Err(Error::Unsolvable { .. })));
    }

    #[test]
    fn size_mismatch_reported() {
        let g8 = grid(8);
        let g9 = grid(9);
        let f = SymField::zeros(&g9);
        assert!(matches!(integrate_round(&g8, &f), Err(Error::SizeMismatch { .. })));
        assert!(matches!(laplace_round(&g8, &f), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn eigenfunction_property_up_to_half_degree() {
        let g = grid(64);
        for l in 0..=g.max_degree() / 2 {
            let p = SymField::legendre(&g, l, 1.0).unwrap();
            let lp = laplace_round(&g, &p).unwrap();
            let resid = lp.axpby(1.0, &p, (l * (l + 1)) as f64 / 2.0).sup_norm();
            assert!(resid <= 1e-9 * p.sup_norm(), "l={l}: {resid}");
        }
    }

    #[test]
    fn dirichlet_energy_matches_quadrature() {
        // |grad u|^2 = (1 - x^2) u'(x)^2 for u(x) = 0.3 x + 0.1 x^3.
        let g = grid(24);
        let u = SymField::from_fn(&g, |x| 0.3 * x + 0.1 * x.powi(3));
        let grad2 = SymField::from_fn(&g, |x| (1.0 - x * x) * (0.3 + 0.3 * x * x).powi(2));
        let expect = integrate_round(&g, &grad2).unwrap();
        assert!((dirichlet_energy(&u) - expect).abs() < 1e-12);
    }

    #[test]
    fn evaluate_matches_nodal_values() {
        let g = grid(20);
        let f = SymField::from_fn(&g, |x| (1.0 + x).ln_1p() * x);
        for (&x, &v) in g.nodes().iter().zip(f.values()) {
            assert!((evaluate(&f, x) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn extrema_find_pole_and_interior_values() {
        let g = grid(32);
        let p2 = SymField::legendre(&g, 2, 1.0).unwrap();
        let (lo, hi) = extrema(&g, &p2);
        assert!((lo + 0.5).abs() < 1e-14, "{lo}");
        assert!((hi - 1.0).abs() < 1e-14, "{hi}");
        let f = SymField::from_fn(&g, |x| -(x - 0.3).powi(2));
        let (_, hi) = extrema(&g, &f);
        assert!(hi.abs() < 1e-14);
    }
}
