//! Detector current, current correlations and the zero-frequency Fano
//! factor of the counted QPC process.
//!
//! With `𝒥ρ = Σ C_i ρ C_i†` over the counted channels and stationary `ρ∞`:
//!
//! * mean rate `R = Tr 𝒥ρ∞`,
//! * regular correlation `g(τ) = Tr 𝒥 e^{Lτ} 𝒥ρ∞ − R²`,
//! * `S(0) = 2R + 4∫₀^∞ g`, `F = S(0)/2R`.
//!
//! Charges are in units of `e`, so currents are electrons per ns.

use serde::Serialize;

use crate::engine::{
    block_expm, generator_for, steady_state_numeric, unvectorize, vec_index, vectorize, DensityMatrix, Generator, Superoperator,
};
use crate::error::{Error, Result};
use crate::linalg::{eigen_decomposition, Lu, Vector};
use crate::model::{Operator, OperatorSet};
use crate::params::{effective_couplings, ModelParams};
use crate::quadrature::integrate;
use crate::scalar::{cr, Real, C};
use crate::units::hbar;

/// Default relative tolerance of the quadrature path.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-8;
/// Auto `τ_max` in units of the inverse spectral gap.
pub const TAU_MAX_GAPS: f64 = 40.0;
const MAX_PANELS: usize = 4_000_000;

/// `ρ ↦ Σ C_i ρ C_i†` over the counted channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpMap<T: Real = f64> {
    matrix: Superoperator<T>,
    /// Row functional `v ↦ Tr 𝒥[v]` on vectorised operators.
    trace_row: Vector<T, 9>,
}

impl<T: Real> JumpMap<T> {
    pub fn from_operators(counted: &[Operator<T>]) -> Self {
        let mut matrix = Superoperator::zeros();
        for j in 0..3 {
            for i in 0..3 {
                let x = Operator::unit(i, j);
                let mut image = Operator::zeros();
                for c in counted {
                    image += *c * x * c.adjoint();
                }
                matrix.set_column(vec_index(i, j), &vectorize(&image));
            }
        }
        let trace_row =
            std::array::from_fn(|k| (0..3).map(|i| matrix[(vec_index(i, i), k)]).fold(C::new(T::zero(), T::zero()), |a, b| a + b));
        Self { matrix, trace_row }
    }

    pub fn matrix(&self) -> &Superoperator<T> {
        &self.matrix
    }

    pub fn apply(&self, x: &Operator<T>) -> Operator<T> {
        unvectorize(&self.matrix.mul_vec(&vectorize(x)))
    }

    /// `Some(s)` when `𝒥 = s·I` exactly.
    pub fn scalar(&self) -> Option<T> {
        let s = self.matrix[(0, 0)];
        let scalar = (0..9).all(|i| (0..9).all(|j| self.matrix[(i, j)] == if i == j { s } else { C::new(T::zero(), T::zero()) }));
        (scalar && s.im.is_zero()).then_some(s.re)
    }

    /// `Tr 𝒥[v]` for a vectorised operator.
    pub fn trace_of_image(&self, v: &Vector<T, 9>) -> C<T> {
        self.trace_row.iter().zip(v).fold(C::new(T::zero(), T::zero()), |acc, (w, x)| acc + *w * *x)
    }
}

pub fn jump_map<T: Real>(ops: &OperatorSet<T>) -> JumpMap<T> {
    JumpMap::from_operators(&ops.counted)
}

/// Counted jump rate `Tr 𝒥[ρ]` in electrons per ns.
pub fn mean_current<T: Real>(rho: &DensityMatrix<T>, jm: &JumpMap<T>) -> T {
    jm.trace_of_image(&vectorize(rho.matrix())).re
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMethod {
    Resolvent,
    Quadrature,
    Trajectory,
    /// Closed form for the triplet configuration.
    Triplet,
}

impl NoiseMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseMethod::Resolvent => "resolvent",
            NoiseMethod::Quadrature => "quadrature",
            NoiseMethod::Trajectory => "trajectory",
            NoiseMethod::Triplet => "triplet",
        }
    }
}

/// Zero-frequency noise summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseResult<T: Real = f64> {
    /// Mean current `R` in electrons per ns.
    pub current: T,
    /// Weight `R` of the `δ(τ)` self-correlation term.
    pub shot_part: T,
    /// `∫₀^∞ g(τ) dτ`.
    pub correction: T,
    /// `S(0) = 2R + 4·correction`.
    pub s0: T,
    pub fano: T,
    pub method: NoiseMethod,
}

impl<T: Real> NoiseResult<T> {
    pub fn from_correction(current: T, correction: T, method: NoiseMethod) -> Self {
        let two = T::lit(2.0);
        Self {
            current,
            shot_part: current,
            correction,
            s0: two * current + two * two * correction,
            fano: T::one() + two * correction / current,
            method,
        }
    }

    /// Exactly Poissonian result, `F = 1`.
    pub fn poissonian(current: T, method: NoiseMethod) -> Self {
        Self { current, shot_part: current, correction: T::zero(), s0: T::lit(2.0) * current, fano: T::one(), method }
    }

    /// Largest relative mismatch among `F = S0/2R = 1 + 2·correction/R`.
    pub fn consistency_error(&self) -> T {
        let two = T::lit(2.0);
        let a = self.s0 / (two * self.current);
        let b = T::one() + two * self.correction / self.current;
        ((a - self.fano).abs()).max((b - self.fano).abs()) / self.fano.abs()
    }
}

/// Triplet current: the occupation-insensitive QPC rate, Poissonian.
pub fn triplet_current_and_fano<T: Real>(p: &ModelParams<T>) -> Result<NoiseResult<T>> {
    p.validate()?;
    let (t_eff, nu_eff) = effective_couplings(p)?;
    let amp = t_eff + nu_eff;
    Ok(NoiseResult::poissonian(p.bias / hbar::<T>() * amp * amp, NoiseMethod::Triplet))
}

/// Regular part of the current correlation at `τ ≥ 0`, for stationary `rho`.
///
/// Evaluated as `Tr 𝒥 e^{Lτ}(𝒥ρ − Rρ)`, which equals the defining
/// expression when `ρ` is stationary and avoids cancelling against `R²`.
pub fn correlation_regular<T: Real>(tau: T, l: &Generator<T>, jm: &JumpMap<T>, rho: &DensityMatrix<T>) -> Result<T> {
    if !(tau >= T::zero()) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("correlation lag must be non-negative, got {tau}")));
    }
    // 𝒥 = s·I gives s²·Tr e^{Lτ}ρ − s² = 0 by trace preservation.
    if jm.scalar().is_some() {
        return Ok(T::zero());
    }
    let u = fluctuation(jm, rho);
    let propagated = block_expm(&l.matrix().scale_real(tau))?.mul_vec(&u);
    Ok(jm.trace_of_image(&propagated).re)
}

/// Vectorised `𝒥ρ − Rρ`; traceless.
fn fluctuation<T: Real>(jm: &JumpMap<T>, rho: &DensityMatrix<T>) -> Vector<T, 9> {
    let r = mean_current(rho, jm);
    let v = vectorize(rho.matrix());
    let jv = jm.matrix().mul_vec(&v);
    std::array::from_fn(|k| jv[k] - v[k] * r)
}

/// `true` when `ν_eff = 0`: every counted operator is then proportional to
/// the identity and the counted process is Poissonian for any state.
pub fn is_poissonian<T: Real>(p: &ModelParams<T>) -> Result<bool> {
    Ok(effective_couplings(p)?.1.is_zero())
}

fn poissonian_result<T: Real>(p: &ModelParams<T>, method: NoiseMethod) -> Result<NoiseResult<T>> {
    let (t_eff, _) = effective_couplings(p)?;
    Ok(NoiseResult::poissonian(p.bias / hbar::<T>() * t_eff * t_eff, method))
}

/// Resolvent solve for an arbitrary generator and jump map.
pub fn fano_from_parts<T: Real>(l: &Generator<T>, jm: &JumpMap<T>) -> Result<(NoiseResult<T>, DensityMatrix<T>)> {
    let rho = steady_state_numeric(l)?;
    let r = mean_current(&rho, jm);
    let u = fluctuation(jm, &rho);
    // L restricted to traceless operators is invertible; replacing the
    // redundant first row by the trace functional pins Tr Y = 0.
    let mut a = *l.matrix();
    for k in 0..9 {
        a[(0, k)] = C::new(T::zero(), T::zero());
    }
    for i in 0..3 {
        a[(0, vec_index(i, i))] = cr(T::one());
    }
    let mut rhs: Vector<T, 9> = std::array::from_fn(|k| -u[k]);
    rhs[0] = C::new(T::zero(), T::zero());
    let lu = Lu::factor(&a)?;
    let mut y = lu.solve(&rhs);
    let ay = a.mul_vec(&y);
    let resid: Vector<T, 9> = std::array::from_fn(|k| rhs[k] - ay[k]);
    let dy = lu.solve(&resid);
    for k in 0..9 {
        y[k] += dy[k];
    }
    let correction = jm.trace_of_image(&y).re;
    Ok((NoiseResult::from_correction(r, correction, NoiseMethod::Resolvent), rho))
}

/// Fano factor by the resolvent (linear solve) path.
pub fn fano_resolvent<T: Real>(p: &ModelParams<T>) -> Result<NoiseResult<T>> {
    p.validate()?;
    if is_poissonian(p)? {
        return poissonian_result(p, NoiseMethod::Resolvent);
    }
    let (ops, l) = generator_for(p)?;
    Ok(fano_from_parts(&l, &jump_map(&ops))?.0)
}

/// Reference value with both phonon couplings switched off.
pub fn fano_nophonon<T: Real>(p: &ModelParams<T>) -> Result<NoiseResult<T>> {
    fano_resolvent(&p.without_phonons())
}

/// `g(τ) = Re Σ_k a_k e^{λ_k τ}` over the non-stationary Liouvillian modes.
#[derive(Debug, Clone)]
pub struct SpectralCorrelation<T: Real = f64> {
    pub rates: Vec<C<T>>,
    pub amplitudes: Vec<C<T>>,
    /// Smallest `−Re λ` among the non-stationary modes.
    pub gap: T,
}

impl<T: Real> SpectralCorrelation<T> {
    pub fn new(l: &Generator<T>, jm: &JumpMap<T>, rho: &DensityMatrix<T>) -> Result<Self> {
        let ed = eigen_decomposition(l.matrix())?;
        let coords = ed.coordinates(&fluctuation(jm, rho))?;
        let stationary = (0..9)
            .min_by(|&a, &b| ed.values[a].norm().partial_cmp(&ed.values[b].norm()).unwrap_or(std::cmp::Ordering::Equal))
            .expect("nine eigenvalues");
        let mut rates = Vec::with_capacity(8);
        let mut amplitudes = Vec::with_capacity(8);
        for k in (0..9).filter(|&k| k != stationary) {
            rates.push(ed.values[k]);
            amplitudes.push(coords[k] * jm.trace_of_image(&ed.vectors.column(k)));
        }
        let gap = rates.iter().map(|z| -z.re).fold(T::infinity(), T::min);
        if !(gap > T::zero()) {
            return Err(Error::NoSpectralGap);
        }
        // Modes whose weight is at rounding level only cost evaluations.
        let scale = amplitudes.iter().map(|a| a.norm()).fold(T::zero(), T::max);
        let (rates, amplitudes) = rates.into_iter().zip(amplitudes).filter(|(_, a)| a.norm() > T::lit(1e-20) * scale).unzip();
        Ok(Self { rates, amplitudes, gap })
    }

    pub fn eval(&self, tau: T) -> T {
        self.rates.iter().zip(&self.amplitudes).map(|(l, a)| (*a * (*l * tau).exp()).re).sum()
    }

    /// `∫_{τ0}^∞ g`.
    pub fn tail(&self, tau0: T) -> T {
        self.rates.iter().zip(&self.amplitudes).map(|(l, a)| (-*a * (*l * tau0).exp() / *l).re).sum()
    }

    /// Fastest oscillation and slowest decay among modes with non-negligible weight.
    fn oscillation(&self) -> Option<(T, T)> {
        let scale = self.amplitudes.iter().map(|a| a.norm()).fold(T::zero(), T::max);
        let mut out: Option<(T, T)> = None;
        for (l, a) in self.rates.iter().zip(&self.amplitudes) {
            if a.norm() <= T::lit(1e-12) * scale || l.im.abs() <= T::lit(1e-9) * l.norm() {
                continue;
            }
            let (w, d) = (l.im.abs(), -l.re);
            out = Some(match out {
                None => (w, d),
                Some((w0, d0)) => (w0.max(w), d0.min(d)),
            });
        }
        out
    }

    /// Panel boundaries: one per oscillation period while oscillating modes
    /// are alive, then uniform panels to `tau_max`.
    fn breakpoints(&self, tau_max: T) -> Vec<T> {
        let mut bp = vec![T::zero()];
        let mut start = T::zero();
        if let Some((omega, decay)) = self.oscillation() {
            let tau_osc = (T::lit(TAU_MAX_GAPS) / decay).min(tau_max);
            let period = T::TAU() / omega;
            let n = (tau_osc / period).ceil().to_f64_lossy().min(1e6) as usize;
            let width = tau_osc / T::lit(n.max(1) as f64);
            for k in 1..=n.max(1) {
                bp.push(width * T::lit(k as f64));
            }
            start = tau_osc;
        }
        let n = 64;
        let width = (tau_max - start) / T::lit(n as f64);
        if width > T::zero() {
            for k in 1..=n {
                bp.push(start + width * T::lit(k as f64));
            }
        }
        bp
    }
}

/// Fano factor by adaptive quadrature of `g(τ)` on `[0, τ_max]` plus the
/// spectral tail beyond. `tau_max = None` selects `40/Δgap`.
pub fn fano_quadrature<T: Real>(p: &ModelParams<T>, tau_max: Option<T>, rel_tol: T) -> Result<NoiseResult<T>> {
    p.validate()?;
    if let Some(t) = tau_max {
        if !(t > T::zero()) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("tau_max must be positive, got {t}")));
        }
    }
    if is_poissonian(p)? {
        return poissonian_result(p, NoiseMethod::Quadrature);
    }
    let (ops, l) = generator_for(p)?;
    let jm = jump_map(&ops);
    let rho = steady_state_numeric(&l)?;
    let r = mean_current(&rho, &jm);
    let spec = SpectralCorrelation::new(&l, &jm, &rho)?;
    let tau_max = tau_max.unwrap_or(T::lit(TAU_MAX_GAPS) / spec.gap);
    let quad = integrate(|t| spec.eval(t), &spec.breakpoints(tau_max), rel_tol, MAX_PANELS)?;
    let correction = quad.value + spec.tail(tau_max);
    Ok(NoiseResult::from_correction(r, correction, NoiseMethod::Quadrature))
}
