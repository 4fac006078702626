use num_traits::{One, Zero};

use super::{Lu, SquareMatrix, Vector};
use crate::error::{Error, Result};
use crate::scalar::{cr, Real, C};

/// Unitary similarity `A = Q·T·Qᴴ` with `T` upper triangular.
struct Schur<T: Real, const N: usize> {
    q: SquareMatrix<T, N>,
    t: SquareMatrix<T, N>,
}

/// Rotation `[[c, s], [-s̄, c]]` (c real) mapping `(x, y)` to `(r, 0)`.
#[derive(Clone, Copy)]
struct Givens<T: Real> {
    c: T,
    s: C<T>,
}

impl<T: Real> Givens<T> {
    fn zeroing(x: C<T>, y: C<T>) -> Self {
        let ax = x.norm();
        let ay = y.norm();
        if ay.is_zero() {
            return Self { c: T::one(), s: C::zero() };
        }
        if ax.is_zero() {
            return Self { c: T::zero(), s: y.conj() / ay };
        }
        let nrm = ax.hypot(ay);
        Self { c: ax / nrm, s: (x / ax) * y.conj() / nrm }
    }

    /// Left action on rows `k`, `k+1`, columns `from..N`.
    fn apply_rows<const N: usize>(&self, m: &mut SquareMatrix<T, N>, k: usize, from: usize) {
        for j in from..N {
            let a = m[(k, j)];
            let b = m[(k + 1, j)];
            m[(k, j)] = a * self.c + self.s * b;
            m[(k + 1, j)] = -self.s.conj() * a + b * self.c;
        }
    }

    /// Right action by the adjoint on columns `k`, `k+1`, rows `0..to`.
    fn apply_cols_adjoint<const N: usize>(&self, m: &mut SquareMatrix<T, N>, k: usize, to: usize) {
        for i in 0..to {
            let a = m[(i, k)];
            let b = m[(i, k + 1)];
            m[(i, k)] = a * self.c + self.s.conj() * b;
            m[(i, k + 1)] = -self.s * a + b * self.c;
        }
    }
}

fn hessenberg<T: Real, const N: usize>(a: &SquareMatrix<T, N>) -> (SquareMatrix<T, N>, SquareMatrix<T, N>) {
    let mut h = *a;
    let mut q = SquareMatrix::<T, N>::identity();
    if N < 3 {
        return (h, q);
    }
    for k in 0..N - 2 {
        let mut v = [C::<T>::zero(); N];
        let mut alpha_sq = T::zero();
        for i in (k + 1)..N {
            v[i] = h[(i, k)];
            alpha_sq += v[i].norm_sqr();
        }
        let alpha = alpha_sq.sqrt();
        if alpha.is_zero() {
            continue;
        }
        let x0 = v[k + 1];
        let phase = if x0.norm().is_zero() { C::one() } else { x0 / x0.norm() };
        v[k + 1] = x0 + phase * alpha;
        let vnorm_sq: T = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sq.is_zero() {
            continue;
        }
        let two = T::lit(2.0);
        // h ← (I - 2vvᴴ/|v|²) h
        for j in 0..N {
            let mut dot = C::zero();
            for i in (k + 1)..N {
                dot += v[i].conj() * h[(i, j)];
            }
            let f = dot * two / vnorm_sq;
            for i in (k + 1)..N {
                h[(i, j)] -= v[i] * f;
            }
        }
        // h ← h (I - 2vvᴴ/|v|²), q likewise
        for m in [&mut h, &mut q] {
            for i in 0..N {
                let mut dot = C::zero();
                for j in (k + 1)..N {
                    dot += m[(i, j)] * v[j];
                }
                let f = dot * two / vnorm_sq;
                for j in (k + 1)..N {
                    m[(i, j)] -= f * v[j].conj();
                }
            }
        }
        for i in (k + 2)..N {
            h[(i, k)] = C::zero();
        }
    }
    (h, q)
}

fn schur<T: Real, const N: usize>(a: &SquareMatrix<T, N>) -> Result<Schur<T, N>> {
    let (mut h, mut q) = hessenberg(a);
    if N < 2 {
        return Ok(Schur { q, t: h });
    }
    let eps = T::epsilon();
    let scale = a.max_abs().max(T::min_positive_value());
    let mut hi = N - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let diag = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if sub <= eps * diag || sub <= eps * eps * scale {
                h[(l, l - 1)] = C::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 100 * N {
            return Err(Error::EigenNotConverged);
        }
        let mu = if iter.is_multiple_of(11) {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + cr(h[(hi, hi - 1)].norm() * T::lit(0.75))
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let half = T::lit(0.5);
            let m = (a - d) * half;
            let disc = (m * m + b * c).sqrt();
            let mu1 = d - b * c / (m + disc);
            let mu2 = d - b * c / (m - disc);
            let pick = |z: C<T>| if z.re.is_finite() && z.im.is_finite() { Some(z) } else { None };
            match (pick(mu1), pick(mu2)) {
                (Some(x), Some(y)) => {
                    if (x - d).norm() <= (y - d).norm() {
                        x
                    } else {
                        y
                    }
                }
                (Some(x), None) | (None, Some(x)) => x,
                (None, None) => d,
            }
        };
        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        let mut rotations = Vec::with_capacity(hi - l);
        for k in l..hi {
            let g = Givens::zeroing(h[(k, k)], h[(k + 1, k)]);
            g.apply_rows(&mut h, k, k);
            h[(k + 1, k)] = C::zero();
            rotations.push(g);
        }
        for (offset, g) in rotations.iter().enumerate() {
            let k = l + offset;
            g.apply_cols_adjoint(&mut h, k, (k + 2).min(hi + 1));
            g.apply_cols_adjoint(&mut q, k, N);
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    for i in 0..N {
        for j in 0..i {
            h[(i, j)] = C::zero();
        }
    }
    Ok(Schur { q, t: h })
}

/// Eigenvalues of a general complex matrix (unordered).
pub fn eigenvalues<T: Real, const N: usize>(a: &SquareMatrix<T, N>) -> Result<Vector<T, N>> {
    Ok(schur(a)?.t.diagonal())
}

/// Right eigenvectors (columns of `vectors`, unit 2-norm) with their eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<T: Real, const N: usize> {
    pub values: Vector<T, N>,
    pub vectors: SquareMatrix<T, N>,
}

impl<T: Real, const N: usize> EigenDecomposition<T, N> {
    /// Coordinates of `x` in the eigenbasis.
    pub fn coordinates(&self, x: &Vector<T, N>) -> Result<Vector<T, N>> {
        Ok(Lu::factor(&self.vectors)?.solve(x))
    }
}

/// Full eigendecomposition via Schur form and triangular back substitution.
/// Defective matrices yield nearly parallel eigenvectors; callers that need a
/// basis should check the conditioning of `vectors`.
pub fn eigen_decomposition<T: Real, const N: usize>(a: &SquareMatrix<T, N>) -> Result<EigenDecomposition<T, N>> {
    let Schur { q, t } = schur(a)?;
    let small = T::epsilon() * t.max_abs().max(T::min_positive_value());
    let mut x_all = SquareMatrix::<T, N>::zeros();
    for k in 0..N {
        let lambda = t[(k, k)];
        let mut x = [C::<T>::zero(); N];
        x[k] = C::one();
        for i in (0..k).rev() {
            let mut acc = C::<T>::zero();
            for j in (i + 1)..=k {
                acc += t[(i, j)] * x[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < small {
                denom = cr(small);
            }
            x[i] = -acc / denom;
        }
        x_all.set_column(k, &x);
    }
    let mut vectors = q * x_all;
    for k in 0..N {
        let col = vectors.column(k);
        let nrm = col.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if nrm > T::zero() {
            let scaled: Vector<T, N> = std::array::from_fn(|i| col[i] / nrm);
            vectors.set_column(k, &scaled);
        }
    }
    Ok(EigenDecomposition { values: t.diagonal(), vectors })
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real, const N: usize> {
    pub values: [T; N],
    pub vectors: SquareMatrix<T, N>,
}

/// Cyclic complex Jacobi method.
pub fn hermitian_eigen<T: Real, const N: usize>(a: &SquareMatrix<T, N>) -> HermitianEigen<T, N> {
    // Symmetrise so round-off asymmetry in the input does not bias the result.
    let half = T::lit(0.5);
    let mut m = SquareMatrix::<T, N>::from_fn(|i, j| (a[(i, j)] + a[(j, i)].conj()) * half);
    let mut v = SquareMatrix::<T, N>::identity();
    let eps = T::epsilon();
    for _sweep in 0..64 {
        let off: T = (0..N).flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].norm_sqr()).sum();
        if off.sqrt() <= eps * m.frobenius_norm() || off.is_zero() {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = m[(p, q)];
                let g = apq.norm();
                if g.is_zero() {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let phase = apq / g;
                let two = T::lit(2.0);
                let zeta = (aqq - app) / (two * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                // J = diag(1, e^{-iφ}) · [[c, s], [-s, c]] makes the block real, then diagonal.
                let jpp = cr(cs);
                let jpq = cr(sn);
                let jqp = phase.conj() * (-sn);
                let jqq = phase.conj() * cs;
                for i in 0..N {
                    let (a_ip, a_iq) = (m[(i, p)], m[(i, q)]);
                    m[(i, p)] = a_ip * jpp + a_iq * jqp;
                    m[(i, q)] = a_ip * jpq + a_iq * jqq;
                    let (v_ip, v_iq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = v_ip * jpp + v_iq * jqp;
                    v[(i, q)] = v_ip * jpq + v_iq * jqq;
                }
                for j in 0..N {
                    let (a_pj, a_qj) = (m[(p, j)], m[(q, j)]);
                    m[(p, j)] = jpp.conj() * a_pj + jqp.conj() * a_qj;
                    m[(q, j)] = jpq.conj() * a_pj + jqq.conj() * a_qj;
                }
                m[(p, q)] = C::zero();
                m[(q, p)] = C::zero();
            }
        }
    }
    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = std::array::from_fn(|k| m[(order[k], order[k])].re);
    let vectors = SquareMatrix::from_fn(|i, k| v[(i, order[k])]);
    HermitianEigen { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M3 = SquareMatrix<f64, 3>;
    type M9 = SquareMatrix<f64, 9>;

    fn pseudo_random<const N: usize>(seed: u64) -> SquareMatrix<f64, N> {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        SquareMatrix::from_fn(|_, _| C::new(next(), next()))
    }

    #[test]
    fn eigenpairs_satisfy_definition() {
        for seed in 1..20 {
            let a: M9 = pseudo_random(seed);
            let ed = eigen_decomposition(&a).unwrap();
            for k in 0..9 {
                let v = ed.vectors.column(k);
                let av = a.mul_vec(&v);
                let res: f64 = (0..9).map(|i| (av[i] - v[i] * ed.values[k]).norm_sqr()).sum::<f64>().sqrt();
                assert!(res < 1e-12, "seed {seed} k {k} residual {res}");
            }
        }
    }

    #[test]
    fn eigenvalues_sum_to_trace_and_multiply_to_determinant() {
        let a: M3 = pseudo_random(42);
        let ev = eigenvalues(&a).unwrap();
        let sum: C<f64> = ev.iter().copied().sum();
        let prod = ev.iter().fold(C::new(1.0, 0.0), |p, z| p * z);
        assert!((sum - a.trace()).norm() < 1e-13);
        assert!((prod - Lu::factor(&a).unwrap().determinant()).norm() < 1e-13);
    }

    #[test]
    fn triangular_input_keeps_its_diagonal() {
        let mut a = M3::zeros();
        a[(0, 0)] = C::new(1.0, 0.0);
        a[(1, 1)] = C::new(0.0, 2.0);
        a[(2, 2)] = C::new(-3.0, 0.0);
        a[(0, 2)] = C::new(5.0, 5.0);
        let mut ev: Vec<_> = eigenvalues(&a).unwrap().to_vec();
        ev.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((ev[0] - C::new(-3.0, 0.0)).norm() < 1e-14);
        assert!((ev[1] - C::new(0.0, 2.0)).norm() < 1e-14);
        assert!((ev[2] - C::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn hermitian_eigen_reconstructs_matrix() {
        let r: M3 = pseudo_random(7);
        let h = r + r.adjoint();
        let he = hermitian_eigen(&h);
        let d = SquareMatrix::from_real_diagonal(he.values);
        let back = he.vectors * d * he.vectors.adjoint();
        assert!(back.max_abs_diff(&h) < 1e-13);
        assert!((he.vectors.adjoint() * he.vectors).max_abs_diff(&M3::identity()) < 1e-13);
        assert!(he.values[0] <= he.values[1] && he.values[1] <= he.values[2]);
    }
}
