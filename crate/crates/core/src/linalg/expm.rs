//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13 (Higham 2005 selection rule).

use super::{Lu, SquareMatrix};
use crate::error::Result;
use crate::scalar::Real;

const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.539398330063230e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068e0)];
const THETA_13: f64 = 5.371920351148152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] = [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn low_degree<T: Real, const N: usize>(a: &SquareMatrix<T, N>, b: &[f64]) -> (SquareMatrix<T, N>, SquareMatrix<T, N>) {
    let id = SquareMatrix::<T, N>::identity();
    let a2 = *a * *a;
    let mut power = id;
    let mut u = SquareMatrix::zeros();
    let mut v = SquareMatrix::zeros();
    for k in 0..b.len() / 2 {
        v += power.scale_real(T::lit(b[2 * k]));
        u += power.scale_real(T::lit(b[2 * k + 1]));
        power = power * a2;
    }
    (*a * u, v)
}

fn degree_13<T: Real, const N: usize>(a: &SquareMatrix<T, N>) -> (SquareMatrix<T, N>, SquareMatrix<T, N>) {
    let b = |k: usize| T::lit(PADE_13[k]);
    let id = SquareMatrix::<T, N>::identity();
    let a2 = *a * *a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let inner_u = a6 * (a6.scale_real(b(13)) + a4.scale_real(b(11)) + a2.scale_real(b(9)))
        + a6.scale_real(b(7))
        + a4.scale_real(b(5))
        + a2.scale_real(b(3))
        + id.scale_real(b(1));
    let u = *a * inner_u;
    let v = a6 * (a6.scale_real(b(12)) + a4.scale_real(b(10)) + a2.scale_real(b(8)))
        + a6.scale_real(b(6))
        + a4.scale_real(b(4))
        + a2.scale_real(b(2))
        + id.scale_real(b(0));
    (u, v)
}

/// `exp(A)` for a dense complex matrix.
pub fn expm<T: Real, const N: usize>(a: &SquareMatrix<T, N>) -> Result<SquareMatrix<T, N>> {
    let norm = a.norm_one().to_f64_lossy();
    if norm == 0.0 {
        return Ok(SquareMatrix::identity());
    }
    for (degree, theta) in THETA {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            let (u, v) = low_degree(a, coeffs);
            return pade_quotient(&u, &v);
        }
    }
    let squarings = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a.scale_real(T::lit(2f64.powi(-squarings)));
    let (u, v) = degree_13(&scaled);
    let mut r = pade_quotient(&u, &v)?;
    for _ in 0..squarings {
        r = r * r;
    }
    Ok(r)
}

fn pade_quotient<T: Real, const N: usize>(u: &SquareMatrix<T, N>, v: &SquareMatrix<T, N>) -> Result<SquareMatrix<T, N>> {
    let lu = Lu::factor(&(*v - *u))?;
    Ok(lu.solve_matrix(&(*v + *u)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C;

    type M3 = SquareMatrix<f64, 3>;

    #[test]
    fn diagonal_matrix_exponentiates_entrywise() {
        for scale in [1e-4, 0.3, 2.0, 40.0, 700.0] {
            let d = [C::new(-scale, 0.1), C::new(0.0, scale), C::new(-0.5 * scale, -scale)];
            let mut a = M3::zeros();
            for i in 0..3 {
                a[(i, i)] = d[i];
            }
            let e = expm(&a).unwrap();
            for i in 0..3 {
                let want = d[i].exp();
                assert!((e[(i, i)] - want).norm() <= 1e-12 * want.norm().max(1.0), "scale {scale}");
            }
        }
    }

    #[test]
    fn nilpotent_block_gives_truncated_series() {
        let mut a = M3::zeros();
        a[(0, 1)] = C::new(2.0, 0.0);
        a[(1, 2)] = C::new(0.0, 3.0);
        let e = expm(&a).unwrap();
        // exp(A) = I + A + A²/2 exactly.
        let want = M3::identity() + a + (a * a).scale_real(0.5);
        assert!(e.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn rotation_generator_gives_rotation() {
        let theta = 17.3_f64;
        let mut a = M3::zeros();
        a[(0, 1)] = C::new(-theta, 0.0);
        a[(1, 0)] = C::new(theta, 0.0);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re - theta.cos()).abs() < 1e-13);
        assert!((e[(1, 0)].re - theta.sin()).abs() < 1e-13);
        assert!((e[(2, 2)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exponent_sum_of_commuting_matrices() {
        let a = M3::from_fn(|i, j| C::new(if i == j { -0.2 * i as f64 } else { 0.0 }, 0.0));
        let b = a.scale_real(2.5);
        let lhs = expm(&(a + b)).unwrap();
        let rhs = expm(&a).unwrap() * expm(&b).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-14);
    }
}
