use crate::error::Result;
use crate::scalar::Scalar;

use super::grid::SpectralGrid;

/// An S1-symmetric scalar field on the sphere, held both at the collocation
/// nodes and as Legendre coefficients of degree `0..=L`.
///
/// The two representations are kept consistent by construction: every
/// constructor derives one from the other through the grid transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct SymField<T> {
    values: Vec<T>,
    coeffs: Vec<T>,
}

impl<T: Scalar> SymField<T> {
    pub fn from_values(grid: &SpectralGrid<T>, values: Vec<T>) -> Result<Self> {
        grid.check_len(values.len())?;
        let coeffs = grid.forward(&values);
        Ok(Self { values, coeffs })
    }

    pub fn from_coeffs(grid: &SpectralGrid<T>, coeffs: Vec<T>) -> Result<Self> {
        grid.check_len(coeffs.len())?;
        let values = grid.inverse(&coeffs);
        Ok(Self { values, coeffs })
    }

    /// Samples `f(x)` at the nodes.
    pub fn from_fn(grid: &SpectralGrid<T>, f: impl Fn(T) -> T) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::from_values(grid, values).expect("sized from grid")
    }

    pub fn zeros(grid: &SpectralGrid<T>) -> Self {
        let n = grid.n_nodes();
        Self { values: vec![T::zero(); n], coeffs: vec![T::zero(); n] }
    }

    pub fn constant(grid: &SpectralGrid<T>, c: T) -> Self {
        let n = grid.n_nodes();
        let mut coeffs = vec![T::zero(); n];
        coeffs[0] = c;
        Self { values: vec![c; n], coeffs }
    }

    /// `sum_i a_i P_{l_i}(x)`. Degrees above `L` are an error.
    pub fn from_modes(grid: &SpectralGrid<T>, modes: &[(usize, T)]) -> Result<Self> {
        let mut coeffs = vec![T::zero(); grid.n_nodes()];
        for &(l, a) in modes {
            if l > grid.max_degree() {
                return Err(crate::Error::SizeMismatch { expected: grid.n_nodes(), got: l + 1 });
            }
            coeffs[l] += a;
        }
        Self::from_coeffs(grid, coeffs)
    }

    pub fn legendre(grid: &SpectralGrid<T>, degree: usize, amplitude: T) -> Result<Self> {
        Self::from_modes(grid, &[(degree, amplitude)])
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Re-derives the coefficients from the nodal values. Used to pin a field
    /// to a canonical bit pattern (the one a snapshot round trip reproduces).
    pub fn canonical(&self, grid: &SpectralGrid<T>) -> Self {
        Self::from_values(grid, self.values.clone()).expect("same grid")
    }

    /// Pointwise map evaluated at the nodes.
    pub fn map(&self, grid: &SpectralGrid<T>, f: impl Fn(T) -> T) -> Self {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Self::from_values(grid, values).expect("same grid")
    }

    /// Pointwise binary map evaluated at the nodes.
    pub fn zip_map(&self, grid: &SpectralGrid<T>, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::from_values(grid, values).expect("same grid")
    }

    /// Linear combination `a * self + b * other`, done modally so no aliasing enters.
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(&u, &v)| a * u + b * v).collect();
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&u, &v)| a * u + b * v).collect();
        Self { values, coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpby(T::one(), other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpby(T::one(), other, -T::one())
    }

    pub fn scale(&self, a: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| a * v).collect(),
            coeffs: self.coeffs.iter().map(|&v| a * v).collect(),
        }
    }

    pub fn shift(&self, c: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v += c);
        out.coeffs[0] += c;
        out
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Index and value of the smallest nodal value.
    pub fn argmin(&self) -> (usize, T) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, T::infinity()), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::build_grid;
    use proptest::prelude::*;

    #[test]
    fn legendre_mode_values() {
        let g = build_grid::<f64>(16).unwrap();
        let f = SymField::legendre(&g, 2, 1.0).unwrap();
        for (&x, &v) in g.nodes().iter().zip(f.values()) {
            assert!((v - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn degree_above_truncation_rejected() {
        let g = build_grid::<f64>(8).unwrap();
        assert!(SymField::legendre(&g, 8, 1.0).is_err());
    }

    #[test]
    fn wrong_length_rejected() {
        let g = build_grid::<f64>(8).unwrap();
        assert!(SymField::from_values(&g, vec![0.0; 9]).is_err());
    }

    proptest! {
        #[test]
        fn values_and_coeffs_agree(coeffs in proptest::collection::vec(-1.0f64..1.0, 24)) {
            let g = build_grid::<f64>(24).unwrap();
            let f = SymField::from_coeffs(&g, coeffs.clone()).unwrap();
            let back = SymField::from_values(&g, f.values().to_vec()).unwrap();
            for (a, b) in back.coeffs().iter().zip(&coeffs) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
