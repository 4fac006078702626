//! Small dense complex linear algebra on fixed-size square matrices.
//!
//! Everything the model needs lives in dimension 3 (operators) or 9
//! (superoperators), so matrices are stack arrays indexed `[row][col]`.

mod eigen;
mod expm;
mod lu;
mod ode;
mod svd;

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::{cr, Real, C};

pub use eigen::{eigen_decomposition, eigenvalues, hermitian_eigen, EigenDecomposition, HermitianEigen};
pub use expm::expm;
pub use lu::Lu;
pub use ode::{integrate_dopri5, OdeOptions, OdeStats};
pub use svd::singular_values;

/// Column vector of length `N`.
pub type Vector<T, const N: usize> = [C<T>; N];

/// Dense `N`×`N` complex matrix.
#[derive(Clone, Copy, PartialEq)]
pub struct SquareMatrix<T: Real, const N: usize> {
    data: [[C<T>; N]; N],
}

impl<T: Real, const N: usize> std::fmt::Debug for SquareMatrix<T, N> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "SquareMatrix<{N}>[")?;
        for row in &self.data {
            write!(f, "  ")?;
            for z in row {
                write!(f, "({:+.6e}{:+.6e}i) ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Real, const N: usize> Default for SquareMatrix<T, N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<T: Real, const N: usize> SquareMatrix<T, N> {
    pub const DIM: usize = N;

    pub fn zeros() -> Self {
        Self { data: [[C::zero(); N]; N] }
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.data[i][i] = C::one();
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.data[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(data: [[C<T>; N]; N]) -> Self {
        Self { data }
    }

    pub fn from_real_diagonal(diag: [T; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.data[i][i] = cr(diag[i]);
        }
        m
    }

    /// Matrix unit `|i⟩⟨j|`.
    pub fn unit(i: usize, j: usize) -> Self {
        let mut m = Self::zeros();
        m.data[i][j] = C::one();
        m
    }

    pub fn rows(&self) -> &[[C<T>; N]; N] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vector<T, N> {
        std::array::from_fn(|i| self.data[i][j])
    }

    pub fn set_column(&mut self, j: usize, v: &Vector<T, N>) {
        for i in 0..N {
            self.data[i][j] = v[i];
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.data[j][i].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.data[j][i])
    }

    pub fn trace(&self) -> C<T> {
        (0..N).map(|i| self.data[i][i]).fold(C::zero(), |a, b| a + b)
    }

    pub fn diagonal(&self) -> Vector<T, N> {
        std::array::from_fn(|i| self.data[i][i])
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self::from_fn(|i, j| self.data[i][j] * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self::from_fn(|i, j| self.data[i][j] * s)
    }

    pub fn mul_vec(&self, v: &Vector<T, N>) -> Vector<T, N> {
        std::array::from_fn(|i| {
            let mut acc = C::zero();
            for j in 0..N {
                acc += self.data[i][j] * v[j];
            }
            acc
        })
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        *self * *other + *other * *self
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().flatten().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> T {
        (0..N).map(|j| (0..N).map(|i| self.data[i][j].norm()).sum::<T>()).fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().flatten().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        (*self - *other).max_abs()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        (0..N).all(|i| (0..N).all(|j| (self.data[i][j] - self.data[j][i].conj()).norm() <= tol))
    }

    /// Mask of entries that are not exactly zero.
    pub fn nonzero_pattern(&self) -> [[bool; N]; N] {
        std::array::from_fn(|i| std::array::from_fn(|j| !self.data[i][j].is_zero()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Converts precision entrywise.
    pub fn cast<U: Real>(&self) -> SquareMatrix<U, N> {
        SquareMatrix::from_fn(|i, j| {
            let z = self.data[i][j];
            Complex::new(U::lit(z.re.to_f64_lossy()), U::lit(z.im.to_f64_lossy()))
        })
    }
}

impl<T: Real, const N: usize> Index<(usize, usize)> for SquareMatrix<T, N> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i][j]
    }
}

impl<T: Real, const N: usize> IndexMut<(usize, usize)> for SquareMatrix<T, N> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i][j]
    }
}

impl<T: Real, const N: usize> Add for SquareMatrix<T, N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.data[i][j] + rhs.data[i][j])
    }
}

impl<T: Real, const N: usize> AddAssign for SquareMatrix<T, N> {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..N {
            for j in 0..N {
                self.data[i][j] += rhs.data[i][j];
            }
        }
    }
}

impl<T: Real, const N: usize> Sub for SquareMatrix<T, N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.data[i][j] - rhs.data[i][j])
    }
}

impl<T: Real, const N: usize> SubAssign for SquareMatrix<T, N> {
    fn sub_assign(&mut self, rhs: Self) {
        for i in 0..N {
            for j in 0..N {
                self.data[i][j] -= rhs.data[i][j];
            }
        }
    }
}

impl<T: Real, const N: usize> Neg for SquareMatrix<T, N> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::from_fn(|i, j| -self.data[i][j])
    }
}

impl<T: Real, const N: usize> Mul for SquareMatrix<T, N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.data[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..N {
                    out.data[i][j] += a * rhs.data[k][j];
                }
            }
        }
        out
    }
}

pub fn vec_norm_sqr<T: Real, const N: usize>(v: &Vector<T, N>) -> T {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn vec_scale<T: Real, const N: usize>(v: &Vector<T, N>, s: C<T>) -> Vector<T, N> {
    std::array::from_fn(|i| v[i] * s)
}

pub fn vec_max_abs<T: Real, const N: usize>(v: &Vector<T, N>) -> T {
    v.iter().map(|z| z.norm()).fold(T::zero(), T::max)
}

/// Outer product `|u⟩⟨v|`.
pub fn outer<T: Real, const N: usize>(u: &Vector<T, N>, v: &Vector<T, N>) -> SquareMatrix<T, N> {
    SquareMatrix::from_fn(|i, j| u[i] * v[j].conj())
}

#[cfg(test)]
mod tests {
    use super::*;

    type M3 = SquareMatrix<f64, 3>;

    #[test]
    fn identity_is_neutral() {
        let a = M3::from_fn(|i, j| C::new(i as f64 + 1.0, j as f64 - 0.5));
        assert_eq!(a * M3::identity(), a);
        assert_eq!(M3::identity() * a, a);
    }

    #[test]
    fn adjoint_of_product() {
        let a = M3::from_fn(|i, j| C::new((i * 3 + j) as f64, 1.0 - j as f64));
        let b = M3::from_fn(|i, j| C::new(j as f64 * 0.3, i as f64));
        assert!((a * b).adjoint().max_abs_diff(&(b.adjoint() * a.adjoint())) < 1e-12);
    }

    #[test]
    fn trace_of_commutator_vanishes() {
        let a = M3::from_fn(|i, j| C::new((i + 2 * j) as f64, (i as f64).sin()));
        let b = M3::from_fn(|i, j| C::new((j as f64).cos(), (i * j) as f64));
        assert!(a.commutator(&b).trace().norm() < 1e-12);
    }
}
