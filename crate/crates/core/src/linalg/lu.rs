use num_traits::Zero;

use super::{SquareMatrix, Vector};
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// LU factorisation with partial pivoting, `P·A = L·U`.
#[derive(Debug, Clone)]
pub struct Lu<T: Real, const N: usize> {
    factors: SquareMatrix<T, N>,
    perm: [usize; N],
}

impl<T: Real, const N: usize> Lu<T, N> {
    /// Fails with [`Error::Singular`] if a pivot is exactly zero or not finite.
    pub fn factor(a: &SquareMatrix<T, N>) -> Result<Self> {
        let mut m = *a;
        let mut perm: [usize; N] = std::array::from_fn(|i| i);
        for k in 0..N {
            let (p, pivot_abs) =
                (k..N).map(|i| (i, m[(i, k)].norm())).fold((k, T::zero()), |best, cand| if cand.1 > best.1 { cand } else { best });
            if pivot_abs.is_zero() || !pivot_abs.is_finite() {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..N {
                    let tmp = m[(k, j)];
                    m[(k, j)] = m[(p, j)];
                    m[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = m[(k, k)];
            for i in (k + 1)..N {
                let factor = m[(i, k)] / pivot;
                m[(i, k)] = factor;
                if factor.is_zero() {
                    continue;
                }
                for j in (k + 1)..N {
                    let u = m[(k, j)];
                    m[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Self { factors: m, perm })
    }

    pub fn solve(&self, b: &Vector<T, N>) -> Vector<T, N> {
        let m = &self.factors;
        let mut x: Vector<T, N> = std::array::from_fn(|i| b[self.perm[i]]);
        for i in 0..N {
            let mut acc = x[i];
            for j in 0..i {
                acc -= m[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..N).rev() {
            let mut acc = x[i];
            for j in (i + 1)..N {
                acc -= m[(i, j)] * x[j];
            }
            x[i] = acc / m[(i, i)];
        }
        x
    }

    pub fn solve_matrix(&self, b: &SquareMatrix<T, N>) -> SquareMatrix<T, N> {
        let mut out = SquareMatrix::zeros();
        for j in 0..N {
            out.set_column(j, &self.solve(&b.column(j)));
        }
        out
    }

    /// Smallest |pivot| over largest |pivot|; a cheap conditioning indicator.
    pub fn pivot_ratio(&self) -> T {
        let pivots = (0..N).map(|i| self.factors[(i, i)].norm());
        let (lo, hi) = pivots.fold((T::infinity(), T::zero()), |(lo, hi), p| (lo.min(p), hi.max(p)));
        if hi.is_zero() {
            T::zero()
        } else {
            lo / hi
        }
    }

    pub fn determinant(&self) -> C<T> {
        let mut det = C::new(T::one(), T::zero());
        for i in 0..N {
            det *= self.factors[(i, i)];
        }
        let mut seen = [false; N];
        let mut sign_flips = 0usize;
        for start in 0..N {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.perm[k];
                len += 1;
            }
            sign_flips += len - 1;
        }
        if sign_flips % 2 == 1 {
            -det
        } else {
            det
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M3 = SquareMatrix<f64, 3>;

    #[test]
    fn solves_permuted_system() {
        let a = M3::from_fn(|i, j| {
            let v = [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]];
            C::new(v[i][j], if i == j { 0.5 } else { 0.0 })
        });
        let x_true = [C::new(1.0, -1.0), C::new(0.5, 2.0), C::new(-3.0, 0.25)];
        let b = a.mul_vec(&x_true);
        let x = Lu::factor(&a).unwrap().solve(&b);
        for i in 0..3 {
            assert!((x[i] - x_true[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let v = [[2.0, -1.0, 0.5], [0.0, 3.0, 1.0], [4.0, 1.0, -2.0]];
        let a = M3::from_fn(|i, j| C::new(v[i][j], 0.0));
        let expected = 2.0 * (3.0 * -2.0 - 1.0 * 1.0) - (-1.0) * (0.0 * -2.0 - 1.0 * 4.0) + 0.5 * (0.0 * 1.0 - 3.0 * 4.0);
        let det = Lu::factor(&a).unwrap().determinant();
        assert!((det.re - expected).abs() < 1e-12 && det.im.abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = M3::from_fn(|i, _| C::new(i as f64, 0.0));
        assert_eq!(Lu::factor(&a).unwrap_err(), Error::Singular);
    }
}
