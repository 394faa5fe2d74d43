use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest grid `build_grid` accepts.
pub const MIN_NODES: usize = 8;

const MAX_NEWTON: usize = 100;

/// Gauss-Legendre collocation data on `x = cos(theta)` for S1-symmetric
/// fields on the unit round sphere.
///
/// Matrices are dense and row-major. The nodal and modal representations
/// have the same size, so degree `L = n_nodes - 1` is the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid<T> {
    n_nodes: usize,
    nodes: Vec<T>,
    weights: Vec<T>,
    /// `forward[l * n + j] = (2l + 1) / 2 * w_j * P_l(x_j)`
    forward: Vec<T>,
    /// `inverse[j * n + l] = P_l(x_j)`
    inverse: Vec<T>,
    /// Nodal matrix of `d/dx((1 - x^2) d/dx)`.
    legendre_op: Vec<T>,
}

/// Values `P_0(x) ..= P_max(x)` by the three-term recurrence.
pub fn legendre_values<T: Scalar>(x: T, max_degree: usize) -> Vec<T> {
    let mut p = Vec::with_capacity(max_degree + 1);
    p.push(T::one());
    if max_degree >= 1 {
        p.push(x);
    }
    for l in 1..max_degree {
        let lf = T::from_usize_lossy(l);
        let next = ((lf + lf + T::one()) * x * p[l] - lf * p[l - 1]) / (lf + T::one());
        p.push(next);
    }
    p
}

/// `(P_n(x), P_n'(x))`, valid for `|x| < 1`.
fn legendre_and_derivative<T: Scalar>(x: T, n: usize) -> (T, T) {
    let mut p_prev = T::one();
    let mut p = x;
    for l in 1..n {
        let lf = T::from_usize_lossy(l);
        let next = ((lf + lf + T::one()) * x * p - lf * p_prev) / (lf + T::one());
        p_prev = p;
        p = next;
    }
    let nf = T::from_usize_lossy(n);
    let dp = nf * (x * p - p_prev) / (x * x - T::one());
    (p, dp)
}

fn gauss_legendre<T: Scalar>(n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let half = (n + 1) / 2;
    let nf = T::from_usize_lossy(n);
    let two = T::lit(2.0);
    let stop = T::epsilon() * T::lit(4.0);
    for i in 0..half {
        // Tricomi-style initial guess, descending from near x = 1.
        let k = T::from_usize_lossy(i) + T::lit(0.75);
        let mut x = (T::PI() * k / (nf + T::lit(0.5))).cos();
        let mut converged = false;
        let mut last_step = T::infinity();
        for _ in 0..MAX_NEWTON {
            let (p, dp) = legendre_and_derivative(x, n);
            let step = p / dp;
            x -= step;
            if step.abs() <= stop {
                converged = true;
                break;
            }
            // Single precision can stall one ulp away from the root.
            if step.abs() >= last_step && step.abs() <= T::epsilon().sqrt() {
                converged = true;
                break;
            }
            last_step = step.abs();
        }
        if !converged {
            return Err(Error::NodeSolverDiverged { index: i, iters: MAX_NEWTON });
        }
        let (_, dp) = legendre_and_derivative(x, n);
        let w = two / ((T::one() - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    Ok((nodes, weights))
}

impl<T: Scalar> SpectralGrid<T> {
    /// Builds nodes, weights and the transform matrices for `n_nodes` points.
    pub fn new(n_nodes: usize) -> Result<Self> {
        if n_nodes < MIN_NODES {
            return Err(Error::GridTooSmall { min: MIN_NODES, got: n_nodes });
        }
        Self::new_unchecked(n_nodes)
    }

    /// Same as [`SpectralGrid::new`] without the minimum-size check. Small grids
    /// are only useful for demonstrating loss of quadrature exactness.
    pub fn new_unchecked(n_nodes: usize) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::GridTooSmall { min: 1, got: 0 });
        }
        let n = n_nodes;
        let (nodes, weights) = gauss_legendre::<T>(n)?;
        let mut forward = vec![T::zero(); n * n];
        let mut inverse = vec![T::zero(); n * n];
        for (j, (&x, &w)) in nodes.iter().zip(&weights).enumerate() {
            let p = legendre_values(x, n - 1);
            for (l, &pl) in p.iter().enumerate() {
                inverse[j * n + l] = pl;
                let norm = (T::from_usize_lossy(2 * l + 1)) / T::lit(2.0);
                forward[l * n + j] = norm * w * pl;
            }
        }
        let mut legendre_op = vec![T::zero(); n * n];
        for j in 0..n {
            for k in 0..n {
                let mut acc = T::zero();
                for l in 1..n {
                    let eig = T::from_usize_lossy(l * (l + 1));
                    acc -= inverse[j * n + l] * eig * forward[l * n + k];
                }
                legendre_op[j * n + k] = acc;
            }
        }
        Ok(Self { n_nodes, nodes, weights, forward, inverse, legendre_op })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn max_degree(&self) -> usize {
        self.n_nodes - 1
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Nodal matrix of `d/dx((1 - x^2) d/dx)`, row-major.
    pub fn legendre_operator(&self) -> &[T] {
        &self.legendre_op
    }

    /// Nodal values to Legendre coefficients.
    pub fn forward(&self, values: &[T]) -> Vec<T> {
        debug_assert_eq!(values.len(), self.n_nodes);
        matvec(&self.forward, values, self.n_nodes)
    }

    /// Legendre coefficients to nodal values.
    pub fn inverse(&self, coeffs: &[T]) -> Vec<T> {
        debug_assert_eq!(coeffs.len(), self.n_nodes);
        matvec(&self.inverse, coeffs, self.n_nodes)
    }

    /// Applies the nodal Legendre operator matrix.
    pub fn apply_legendre_operator(&self, values: &[T]) -> Vec<T> {
        matvec(&self.legendre_op, values, self.n_nodes)
    }

    /// Gauss quadrature `sum_j w_j f(x_j)` over `[-1, 1]`.
    pub fn quadrature(&self, values: &[T]) -> T {
        self.weights.iter().zip(values).map(|(&w, &v)| w * v).sum()
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n_nodes {
            Ok(())
        } else {
            Err(Error::SizeMismatch { expected: self.n_nodes, got: len })
        }
    }
}

fn matvec<T: Scalar>(m: &[T], v: &[T], n: usize) -> Vec<T> {
    m.chunks_exact(n)
        .map(|row| row.iter().zip(v).map(|(&a, &b)| a * b).sum())
        .collect()
}

/// Builds a grid with `n_nodes` Gauss-Legendre points (at least [`MIN_NODES`]).
pub fn build_grid<T: Scalar>(n_nodes: usize) -> Result<SpectralGrid<T>> {
    SpectralGrid::new(n_nodes)
}
