//! Liouvillian assembly, time propagation and steady states.
//!
//! Superoperators act on column-stacked 3×3 matrices, `vec(X)[3j + i] =
//! X[i][j]`. Every construction goes through the action on matrix units, so
//! the convention stays internal.

use crate::error::{Error, Result};
use crate::linalg::{
    eigenvalues as dense_eigenvalues, expm, hermitian_eigen, integrate_dopri5, singular_values, Lu, OdeOptions, SquareMatrix, Vector,
};
use crate::model::{phonon_rates, qpc_amplitudes, Operator, OperatorSet};
use crate::params::ModelParams;
use crate::scalar::{cr, Real, C};
use crate::units::hbar;

/// 9×9 matrix acting on vectorised operators.
pub type Superoperator<T = f64> = SquareMatrix<T, 9>;

/// Relative singular-value threshold below which the kernel counts as
/// more than one-dimensional.
pub const KERNEL_THRESHOLD: f64 = 1e-10;

#[inline]
pub fn vec_index(i: usize, j: usize) -> usize {
    3 * j + i
}

pub fn vectorize<T: Real>(x: &Operator<T>) -> Vector<T, 9> {
    std::array::from_fn(|k| x[(k % 3, k / 3)])
}

pub fn unvectorize<T: Real>(v: &Vector<T, 9>) -> Operator<T> {
    Operator::from_fn(|i, j| v[vec_index(i, j)])
}

fn tolerance<T: Real>(f64_tol: f64) -> T {
    T::lit(f64_tol).max(T::lit(100.0) * T::epsilon())
}

/// Normalised, positive semidefinite Hermitian 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix<T: Real = f64>(Operator<T>);

impl<T: Real> DensityMatrix<T> {
    /// Checks Hermiticity and unit trace to 1e-12 and eigenvalues to −1e-10.
    pub fn new(m: Operator<T>) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidArgument("density matrix has non-finite entries".into()));
        }
        if !m.is_hermitian(tolerance(1e-12)) {
            return Err(Error::InvalidArgument("density matrix is not Hermitian".into()));
        }
        let tr = m.trace();
        if (tr - C::new(T::one(), T::zero())).norm() > tolerance(1e-12) {
            return Err(Error::InvalidArgument(format!("density matrix has trace {tr}")));
        }
        let min = hermitian_eigen(&m).values[0];
        if min < -tolerance::<T>(1e-10) {
            return Err(Error::InvalidArgument(format!("density matrix has negative eigenvalue {min}")));
        }
        Ok(Self(m))
    }

    /// Wraps without checks; used for propagated states, whose invariants
    /// hold only up to the propagation error.
    pub fn from_matrix_unchecked(m: Operator<T>) -> Self {
        Self(m)
    }

    /// Projector onto basis state `k`.
    pub fn basis_state(k: usize) -> Self {
        Self(Operator::unit(k, k))
    }

    pub fn from_populations(p: [T; 3]) -> Result<Self> {
        Self::new(Operator::from_real_diagonal(p))
    }

    pub fn matrix(&self) -> &Operator<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Operator<T> {
        self.0
    }

    pub fn populations(&self) -> [T; 3] {
        std::array::from_fn(|i| self.0[(i, i)].re)
    }

    pub fn trace(&self) -> C<T> {
        self.0.trace()
    }

    pub fn min_eigenvalue(&self) -> T {
        hermitian_eigen(&self.0).values[0]
    }
}

/// Liouvillian `L` with `ρ̇ = L[ρ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator<T: Real = f64> {
    matrix: Superoperator<T>,
}

/// Lindblad action on a single matrix. `anticommutator_sign` is `−1` for
/// the physical generator.
fn lindblad_action<T: Real>(h: &Operator<T>, jumps: &[Operator<T>], x: &Operator<T>, anticommutator_sign: T) -> Operator<T> {
    let minus_i_over_hbar = C::new(T::zero(), -T::one() / hbar::<T>());
    let mut out = h.commutator(x).scale(minus_i_over_hbar);
    let half = anticommutator_sign / T::lit(2.0);
    for l in jumps {
        let ld = l.adjoint();
        out += *l * *x * ld;
        out += (ld * *l).anticommutator(x).scale_real(half);
    }
    out
}

impl<T: Real> Generator<T> {
    pub fn from_matrix(matrix: Superoperator<T>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &Superoperator<T> {
        &self.matrix
    }

    pub fn apply(&self, x: &Operator<T>) -> Operator<T> {
        unvectorize(&self.matrix.mul_vec(&vectorize(x)))
    }

    /// Builds `L` from a Hamiltonian and an arbitrary list of jump operators.
    pub fn from_parts(h: &Operator<T>, jumps: &[Operator<T>]) -> Result<Self> {
        Self::assemble(h, jumps, -T::one())
    }

    fn assemble(h: &Operator<T>, jumps: &[Operator<T>], sign: T) -> Result<Self> {
        if !h.is_hermitian(tolerance::<T>(1e-12) * h.max_abs().max(T::one())) {
            return Err(Error::InvalidArgument("Hamiltonian is not Hermitian".into()));
        }
        let mut matrix = Superoperator::zeros();
        for j in 0..3 {
            for i in 0..3 {
                let image = lindblad_action(h, jumps, &Operator::unit(i, j), sign);
                matrix.set_column(vec_index(i, j), &vectorize(&image));
            }
        }
        Ok(Self { matrix })
    }
}

pub fn build_generator<T: Real>(h: &Operator<T>, ops: &OperatorSet<T>) -> Result<Generator<T>> {
    let jumps: Vec<_> = ops.jump_operators().copied().collect();
    Generator::from_parts(h, &jumps)
}

/// Generator with the anticommutator sign flipped. Not a valid Lindblad
/// generator; used only to check that validation detects the mutation.
#[doc(hidden)]
pub fn build_generator_sign_flipped<T: Real>(h: &Operator<T>, ops: &OperatorSet<T>) -> Result<Generator<T>> {
    let jumps: Vec<_> = ops.jump_operators().copied().collect();
    Generator::assemble(h, &jumps, T::one())
}

/// Convenience: operators and generator for one parameter set.
pub fn generator_for<T: Real>(p: &ModelParams<T>) -> Result<(OperatorSet<T>, Generator<T>)> {
    let ops = OperatorSet::build(p)?;
    let l = build_generator(&ops.hamiltonian, &ops)?;
    Ok((ops, l))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EvolveMethod<T: Real = f64> {
    /// Dense exponential, Padé degree up to 13 with scaling and squaring.
    #[default]
    Expm,
    /// Dormand–Prince 5(4) with the given options.
    Ode(OdeOptions<T>),
}

pub fn evolve<T: Real>(l: &Generator<T>, rho0: &DensityMatrix<T>, t: T) -> Result<DensityMatrix<T>> {
    evolve_with(l, rho0, t, EvolveMethod::Expm)
}

/// `exp(L t)[ρ0]`.
pub fn evolve_with<T: Real>(l: &Generator<T>, rho0: &DensityMatrix<T>, t: T, method: EvolveMethod<T>) -> Result<DensityMatrix<T>> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("evolution time must be non-negative, got {t}")));
    }
    if t.is_zero() {
        return Ok(*rho0);
    }
    let y0 = vectorize(rho0.matrix());
    let y = match method {
        EvolveMethod::Expm => block_expm(&l.matrix.scale_real(t))?.mul_vec(&y0),
        EvolveMethod::Ode(opts) => integrate_dopri5(|_, y| l.matrix.mul_vec(y), T::zero(), &y0, t, &opts)?.0,
    };
    Ok(DensityMatrix(unvectorize(&y)))
}

/// Index sets of the connected components of the sparsity graph of `a`.
/// Each set spans a subspace invariant under `a`.
pub fn invariant_blocks<T: Real, const N: usize>(a: &SquareMatrix<T, N>) -> Vec<Vec<usize>> {
    let mut label: [usize; N] = std::array::from_fn(|k| k);
    fn root<const N: usize>(label: &mut [usize; N], mut k: usize) -> usize {
        while label[k] != k {
            label[k] = label[label[k]];
            k = label[k];
        }
        k
    }
    let nz = a.nonzero_pattern();
    for i in 0..N {
        for j in 0..N {
            if nz[i][j] {
                let (ri, rj) = (root(&mut label, i), root(&mut label, j));
                label[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = [usize::MAX; N];
    for k in 0..N {
        let r = root(&mut label, k);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(k);
    }
    blocks
}

/// Matrix exponential taken block by block over the invariant subspaces.
///
/// A single scaling-and-squaring pass picks its scaling from the fastest
/// (coherence) block and loses about `ε·‖A‖` accuracy in the slow
/// population block; separate passes keep each block at its own scale.
pub fn block_expm<T: Real, const N: usize>(a: &SquareMatrix<T, N>) -> Result<SquareMatrix<T, N>> {
    let mut out = SquareMatrix::zeros();
    for block in invariant_blocks(a) {
        if let [k] = block[..] {
            out[(k, k)] = a[(k, k)].exp();
            continue;
        }
        let mut sub = SquareMatrix::<T, N>::zeros();
        for &i in &block {
            for &j in &block {
                sub[(i, j)] = a[(i, j)];
            }
        }
        let e = expm(&sub)?;
        for &i in &block {
            for &j in &block {
                out[(i, j)] = e[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Unit-trace kernel element of `L`.
///
/// Fails with [`Error::DegenerateSteadyState`] when the second-smallest
/// singular value is below `1e-10` of the largest.
pub fn steady_state_numeric<T: Real>(l: &Generator<T>) -> Result<DensityMatrix<T>> {
    let sv = singular_values(&l.matrix);
    let (largest, second, smallest) = (sv[0], sv[7], sv[8]);
    if !(second > T::lit(KERNEL_THRESHOLD) * largest) {
        return Err(Error::DegenerateSteadyState {
            smallest: smallest.to_f64_lossy(),
            second: second.to_f64_lossy(),
            largest: largest.to_f64_lossy(),
        });
    }
    // Row 0 is a linear combination of the diagonal rows (trace preservation),
    // so it can be traded for the normalisation constraint.
    let mut a = l.matrix;
    for k in 0..9 {
        a[(0, k)] = C::new(T::zero(), T::zero());
    }
    for i in 0..3 {
        a[(0, vec_index(i, i))] = cr(T::one());
    }
    let lu = Lu::factor(&a)?;
    let mut rhs = [C::new(T::zero(), T::zero()); 9];
    rhs[0] = cr(T::one());
    let mut x = lu.solve(&rhs);
    // One step of iterative refinement.
    let ax = a.mul_vec(&x);
    let r: Vector<T, 9> = std::array::from_fn(|k| rhs[k] - ax[k]);
    let dx = lu.solve(&r);
    for k in 0..9 {
        x[k] += dx[k];
    }
    let m = unvectorize(&x);
    let herm = (m + m.adjoint()).scale_real(T::lit(0.5));
    Ok(DensityMatrix(herm))
}

/// Closed-form populations of the diagonal steady state.
pub fn steady_state_weights<T: Real>(p: &ModelParams<T>) -> Result<[T; 3]> {
    let amp = qpc_amplitudes(p)?;
    let r = phonon_rates(p)?;
    let (ap2, am2, a02) = (amp.plus * amp.plus, amp.minus * amp.minus, amp.zero * amp.zero);
    Ok([(ap2 + r.gamma_02) * (a02 + r.gamma_21), (a02 + r.gamma_12) * (am2 + r.gamma_20), (am2 + r.gamma_20) * (a02 + r.gamma_21)])
}

/// Diagonal steady state from detailed balance along `s0 ↔ s2 ↔ s1`.
pub fn steady_state_analytic<T: Real>(p: &ModelParams<T>) -> Result<DensityMatrix<T>> {
    p.validate()?;
    let w = steady_state_weights(p)?;
    let norm = w[0] + w[1] + w[2];
    if !(norm > T::zero()) {
        return Err(Error::InvalidArgument("all steady-state weights vanish; the stationary state is not unique".into()));
    }
    Ok(DensityMatrix(Operator::from_real_diagonal([w[0] / norm, w[1] / norm, w[2] / norm])))
}

pub fn eigenvalues<T: Real>(l: &Generator<T>) -> Result<Vector<T, 9>> {
    dense_eigenvalues(&l.matrix)
}

/// `−Re λ` of the slowest decaying non-stationary mode.
pub fn spectral_gap<T: Real>(l: &Generator<T>) -> Result<T> {
    let ev = eigenvalues(l)?;
    let mut re: Vec<T> = ev.iter().map(|z| z.re).collect();
    re.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let gap = -re[1];
    // Eigenvalue error of the QR iteration is of order ε‖L‖.
    let floor = T::lit(1e3) * T::epsilon() * l.matrix.norm_one();
    if !(gap > floor) {
        return Err(Error::NoSpectralGap);
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::OdeOptions;
    use crate::model::{S0, S1, S2};
    use crate::params::{default_params, GapConvention};
    use crate::units::HBAR_MEV_NS;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Op = Operator<f64>;

    fn defaults() -> ModelParams<f64> {
        default_params()
    }

    fn random_matrix(rng: &mut impl Rng) -> Op {
        Op::from_fn(|_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_state(rng: &mut impl Rng) -> DensityMatrix<f64> {
        let a = random_matrix(rng);
        let m = a * a.adjoint();
        let tr = m.trace().re;
        DensityMatrix::new(m.scale_real(1.0 / tr)).unwrap()
    }

    #[test]
    fn vectorisation_is_column_stacking() {
        let x = Op::from_fn(|i, j| C::new((10 * i + j) as f64, 0.0));
        let v = vectorize(&x);
        assert_eq!(v[1].re, 10.0);
        assert_eq!(v[3].re, 1.0);
        assert_eq!(unvectorize(&v), x);
    }

    #[test]
    fn block_expm_matches_dense_on_coupled_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = Superoperator::from_fn(|i, j| {
            if (i + j) % 3 == 0 {
                C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            } else {
                C::new(0.0, 0.0)
            }
        });
        assert!(invariant_blocks(&a).len() > 1);
        assert!(block_expm(&a).unwrap().max_abs_diff(&expm(&a).unwrap()) < 1e-13);
    }

    #[test]
    fn generator_blocks_separate_populations() {
        let (_, l) = generator_for(&defaults()).unwrap();
        let blocks = invariant_blocks(l.matrix());
        assert!(blocks.contains(&vec![0, 4, 8]));
    }

    #[test]
    fn closed_evolution_spectrum() {
        let e = [-0.1, 1.0, 1.1];
        let h = Op::from_real_diagonal(e);
        let l = Generator::from_parts(&h, &[]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let k = vec_index(i, j);
                let want = C::new(0.0, -(e[i] - e[j]) / HBAR_MEV_NS);
                assert!((l.matrix()[(k, k)] - want).norm() <= 1e-13 * want.norm());
            }
        }
        let ev = eigenvalues(&l).unwrap();
        let zeros = ev.iter().filter(|z| z.norm() < 1e-12).count();
        assert_eq!(zeros, 3);
        for z in ev {
            assert!((0..3).any(|i| (0..3).any(|j| (z - C::new(0.0, -(e[i] - e[j]) / HBAR_MEV_NS)).norm() < 1e-9)));
        }
    }

    #[test]
    fn non_hermitian_hamiltonian_is_rejected() {
        let mut h = Op::from_real_diagonal([0.0, 1.0, 2.0]);
        h[(0, 1)] = C::new(0.3, 0.0);
        assert!(matches!(Generator::from_parts(&h, &[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn identity_part_of_jump_cancels() {
        let h = Op::from_real_diagonal([0.0, 1.0, 2.0]);
        let mut c = Op::zeros();
        c[(1, 2)] = C::new(0.7, 0.0);
        c[(2, 1)] = C::new(0.7, 0.0);
        let shifted = c + Op::identity().scale_real(3.5);
        let a = Generator::from_parts(&h, &[c]).unwrap();
        let b = Generator::from_parts(&h, &[shifted]).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
    }

    #[test]
    fn trace_is_preserved_for_random_inputs() {
        let (_, l) = generator_for(&defaults()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scale = l.matrix().max_abs();
        for _ in 0..100 {
            let x = random_matrix(&mut rng);
            assert!(l.apply(&x).trace().norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn hermiticity_is_preserved() {
        let (_, l) = generator_for(&defaults().with_temperature(10.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x = random_matrix(&mut rng);
            let lhs = l.apply(&x.adjoint());
            let rhs = l.apply(&x).adjoint();
            assert!(lhs.max_abs_diff(&rhs) < 1e-9);
        }
    }

    #[test]
    fn analytic_state_is_in_the_kernel() {
        for (alpha, temp) in [(1.0, 0.0), (3.0, 0.0), (1.0, 15.0), (0.2, 40.0)] {
            let p = defaults().with_alpha(alpha).with_temperature(temp);
            let (_, l) = generator_for(&p).unwrap();
            let rho = steady_state_analytic(&p).unwrap();
            let res = l.apply(rho.matrix()).max_abs();
            assert!(res <= 1e-12 * l.matrix().max_abs(), "alpha={alpha} T={temp} residual {res}");
        }
    }

    #[test]
    fn analytic_examples() {
        // Without phonons the weights reduce to (A+², A−², A−²) up to A0² factors.
        let p = defaults().without_phonons();
        let amp = qpc_amplitudes(&p).unwrap();
        let (ap2, am2) = (amp.plus.powi(2), amp.minus.powi(2));
        let pop = steady_state_analytic(&p).unwrap().populations();
        let p0 = ap2 / (ap2 + 2.0 * am2);
        assert!((pop[S0] - p0).abs() < 1e-14);
        assert!((pop[S1] - pop[S2]).abs() < 1e-14);
        assert!((p0 - 0.633).abs() < 1e-3);
        let pop3 = steady_state_analytic(&p.with_alpha(3.0)).unwrap().populations();
        assert!((pop3[S0] - pop[S0]).abs() < 1e-14);

        let pop = steady_state_analytic(&defaults().with_alpha(3.0)).unwrap().populations();
        assert!((pop[S0] - 0.914).abs() < 1e-3, "{pop:?}");
        assert!((pop[S1] - 0.043).abs() < 1e-3);
        assert!((pop[S2] - 0.043).abs() < 1e-3);
    }

    #[test]
    fn numeric_matches_analytic_at_defaults() {
        for alpha in [0.05, 1.0, 3.0, 8.0] {
            for temp in [0.0, 7.5, 40.0] {
                for gap in [GapConvention::Spectral, GapConvention::Qpc] {
                    let p = defaults().with_alpha(alpha).with_temperature(temp).with_gap_convention(gap);
                    let (_, l) = generator_for(&p).unwrap();
                    let num = steady_state_numeric(&l).unwrap();
                    let ana = steady_state_analytic(&p).unwrap();
                    let diff = num.matrix().max_abs_diff(ana.matrix());
                    assert!(diff < 1e-10, "alpha={alpha} T={temp}: {diff}");
                    let res = l.apply(num.matrix()).max_abs();
                    assert!(res <= 1e-12 * l.matrix().frobenius_norm());
                }
            }
        }
    }

    #[test]
    fn numeric_state_is_diagonal() {
        let (_, l) = generator_for(&defaults()).unwrap();
        let rho = steady_state_numeric(&l).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(rho.matrix()[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn kernel_degenerates_without_qpc_mixing() {
        let p = ModelParams { tunneling_conditional: 0.0, ..defaults() };
        let (_, l) = generator_for(&p).unwrap();
        assert!(l.apply(&Op::unit(S0, S0)).max_abs() == 0.0);
        match steady_state_numeric(&l) {
            Err(Error::DegenerateSteadyState { second, largest, .. }) => assert!(second < 1e-10 * largest),
            other => panic!("expected degenerate kernel, got {other:?}"),
        }
        assert!(steady_state_analytic(&p).is_err());
    }

    #[test]
    fn evolve_identities() {
        let p = defaults().with_temperature(5.0);
        let (_, l) = generator_for(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho0 = random_state(&mut rng);
        assert_eq!(evolve(&l, &rho0, 0.0).unwrap(), rho0);
        assert!(evolve(&l, &rho0, -1.0).is_err());
        let ss = steady_state_analytic(&p).unwrap();
        for t in [0.1, 10.0, 1e3, 1e5] {
            let out = evolve(&l, &ss, t).unwrap();
            assert!(out.matrix().max_abs_diff(ss.matrix()) < 1e-10, "t={t}");
        }
    }

    #[test]
    fn long_time_evolution_relaxes_to_analytic_state() {
        let p = defaults().with_alpha(3.0);
        let (_, l) = generator_for(&p).unwrap();
        let mut rho = DensityMatrix::basis_state(S1);
        let target = steady_state_analytic(&p).unwrap();
        let mut steps = 0;
        while rho.matrix().max_abs_diff(target.matrix()) > 1e-10 {
            rho = evolve(&l, &rho, 1e4).unwrap();
            steps += 1;
            assert!(steps < 100, "no convergence");
        }
        let pop = rho.populations();
        assert!((pop[S0] - 0.914).abs() < 1e-3 && (pop[S1] - 0.043).abs() < 1e-3 && (pop[S2] - 0.043).abs() < 1e-3);
    }

    #[test]
    fn spectrum_is_dissipative_with_gap() {
        let (_, l) = generator_for(&defaults().with_alpha(3.0)).unwrap();
        let ev = eigenvalues(&l).unwrap();
        assert!(ev.iter().all(|z| z.re <= 1e-10));
        assert!(ev.iter().any(|z| z.norm() < 1e-9));
        let gap = spectral_gap(&l).unwrap();
        assert!((gap - 5.9e-4).abs() < 0.1e-4, "gap {gap}");
    }

    #[test]
    fn mutated_generator_breaks_trace_preservation() {
        let ops = OperatorSet::build(&defaults()).unwrap();
        let bad = build_generator_sign_flipped(&ops.hamiltonian, &ops).unwrap();
        let ss = steady_state_analytic(&defaults()).unwrap();
        assert!(bad.apply(ss.matrix()).trace().norm() > 1e-3);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(Op::identity()).is_err());
        assert!(DensityMatrix::from_populations([1.2, -0.2, 0.0]).is_err());
        assert!(DensityMatrix::from_populations([0.5, 0.25, 0.25]).is_ok());
        let mut m = Op::unit(0, 0);
        m[(0, 1)] = C::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    fn random_params() -> impl Strategy<Value = ModelParams<f64>> {
        (0.1f64..10.0, 0.0f64..50.0, any::<bool>()).prop_map(|(alpha, temp, qpc)| {
            let gap = if qpc { GapConvention::Qpc } else { GapConvention::Spectral };
            defaults().with_alpha(alpha).with_temperature(temp).with_gap_convention(gap)
        })
    }

    fn ode() -> EvolveMethod<f64> {
        EvolveMethod::Ode(OdeOptions { rel_tol: 1e-11, abs_tol: 1e-14, ..OdeOptions::default() })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn numeric_and_analytic_agree(p in random_params()) {
            let (_, l) = generator_for(&p).unwrap();
            let num = steady_state_numeric(&l).unwrap();
            let ana = steady_state_analytic(&p).unwrap();
            prop_assert!(num.matrix().max_abs_diff(ana.matrix()) < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn evolution_keeps_state_physical(p in random_params(), seed in any::<u64>(), t in 0.0f64..1e3) {
            let (_, l) = generator_for(&p).unwrap();
            let rho0 = random_state(&mut ChaCha8Rng::seed_from_u64(seed));
            let rho = evolve(&l, &rho0, t).unwrap();
            prop_assert!((rho.trace() - C::new(1.0, 0.0)).norm() < 1e-10);
            prop_assert!(rho.matrix().is_hermitian(1e-10));
            prop_assert!(rho.min_eigenvalue() >= -1e-8);
        }

        #[test]
        fn semigroup_property(p in random_params(), seed in any::<u64>(), t1 in 0.0f64..500.0, t2 in 0.0f64..500.0) {
            let (_, l) = generator_for(&p).unwrap();
            let rho0 = random_state(&mut ChaCha8Rng::seed_from_u64(seed));
            let direct = evolve(&l, &rho0, t1 + t2).unwrap();
            let stepped = evolve(&l, &evolve(&l, &rho0, t1).unwrap(), t2).unwrap();
            prop_assert!(direct.matrix().max_abs_diff(stepped.matrix()) < 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn expm_and_ode_agree(p in random_params(), seed in any::<u64>(), t in 0.0f64..2.0) {
            let (_, l) = generator_for(&p).unwrap();
            let rho0 = random_state(&mut ChaCha8Rng::seed_from_u64(seed));
            let a = evolve_with(&l, &rho0, t, EvolveMethod::Expm).unwrap();
            let b = evolve_with(&l, &rho0, t, ode()).unwrap();
            prop_assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-8);
        }
    }
}
