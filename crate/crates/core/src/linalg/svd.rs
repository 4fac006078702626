use super::SquareMatrix;
use crate::scalar::{Real, C};

/// Singular values in descending order, by one-sided (Hestenes) Jacobi
/// rotations on the columns.
pub fn singular_values<T: Real, const N: usize>(a: &SquareMatrix<T, N>) -> [T; N] {
    let mut cols: [[C<T>; N]; N] = std::array::from_fn(|j| a.column(j));
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..N {
            for q in (p + 1)..N {
                let alpha: T = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: T = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C<T> = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Remove the phase so the 2×2 Gram block is real symmetric.
                let phase = gamma / g;
                let two = T::lit(2.0);
                let zeta = (beta - alpha) / (two * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                for i in 0..N {
                    let xp = cols[p][i];
                    let xq = cols[q][i] * phase.conj();
                    cols[p][i] = xp * cs - xq * sn;
                    cols[q][i] = xp * sn + xq * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: [T; N] = std::array::from_fn(|j| cols[j].iter().map(|z| z.norm_sqr()).sum::<T>().sqrt());
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}
