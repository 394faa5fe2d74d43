//! Gauss-Legendre collocation for S1-symmetric fields on the unit sphere.
//!
//! The chart is `x = cos(theta)`. No node sits on a pole, and the complex
//! Laplacian `(i dd-bar f) / omega_0` (half the Laplace-Beltrami operator)
//! is diagonal in the Legendre basis with eigenvalue `-l(l+1)/2`.

mod field;
mod grid;
mod ops;

pub use field::SymField;
pub use grid::{build_grid, legendre_values, SpectralGrid, MIN_NODES};
pub use ops::{
    dirichlet_energy, evaluate, evaluate_coeffs, extrema, first_moment, integrate_product,
    integrate_round, laplace_eigenvalue, laplace_round, round_mean, solve_poisson_round,
};
