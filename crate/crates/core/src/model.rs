//! Singlet-sector eigenstructure of the double dot and the Lindblad
//! operators of its two environments (QPC and phonons).
//!
//! The ordered basis is `(s0, s1, s2)` with energies `(−J, U, U + J)`.
//! Only the eigenbasis is ever materialised; the two-electron basis behind
//! it enters through the mixing angle alone.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::params::{effective_couplings, GapConvention, ModelParams};
use crate::scalar::{cr, Real};
use crate::units::{hbar, k_b};

pub const S0: usize = 0;
pub const S1: usize = 1;
pub const S2: usize = 2;

/// Operator on the three-dimensional singlet sector.
pub type Operator<T = f64> = SquareMatrix<T, 3>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenStructure<T: Real = f64> {
    /// Mixing angle `atan(4Δ/U)`.
    pub theta: T,
    /// `sin(θ/2)/√2`, weight of the doubly occupied pair in `s0`.
    pub xi: T,
    /// `cos(θ/2)/√2`.
    pub xi_prime: T,
    /// Inter-dot tunnelling amplitude reconstructed from `U` and `J`.
    pub delta: T,
    /// `[−J, U, U + J]`.
    pub energies: [T; 3],
}

/// Inverts `J = (√(U² + 16Δ²) − U)/2` for `Δ`.
pub fn delta_from_splitting<T: Real>(u: T, j: T) -> T {
    (j * (u + j)).sqrt() / T::lit(2.0)
}

/// Singlet–triplet splitting for given charging energy and tunnelling.
pub fn splitting_from_delta<T: Real>(u: T, delta: T) -> T {
    ((u * u + T::lit(16.0) * delta * delta).sqrt() - u) / T::lit(2.0)
}

impl<T: Real> EigenStructure<T> {
    /// Builds the structure from `U` and `Δ`, with `J` derived.
    pub fn from_delta(u: T, delta: T) -> Self {
        let j = splitting_from_delta(u, delta);
        Self::assemble(u, j, delta)
    }

    fn assemble(u: T, j: T, delta: T) -> Self {
        let theta = (T::lit(4.0) * delta).atan2(u);
        let half = theta / T::lit(2.0);
        let inv_sqrt2 = T::FRAC_1_SQRT_2();
        Self { theta, xi: inv_sqrt2 * half.sin(), xi_prime: inv_sqrt2 * half.cos(), delta, energies: [-j, u, u + j] }
    }

    pub fn sin_half(&self) -> T {
        (self.theta / T::lit(2.0)).sin()
    }

    pub fn cos_half(&self) -> T {
        (self.theta / T::lit(2.0)).cos()
    }
}

pub fn eigenstructure<T: Real>(p: &ModelParams<T>) -> EigenStructure<T> {
    let u = p.charging_energy;
    let j = p.exchange_splitting;
    EigenStructure::assemble(u, j, delta_from_splitting(u, j))
}

/// Bose–Einstein occupation `1/(exp(E/k_B T) − 1)`, continuously extended to
/// zero at `T = 0`.
pub fn bose_occupation<T: Real>(energy: T, temperature: T) -> Result<T> {
    if !(energy > T::zero()) || !energy.is_finite() {
        return Err(Error::InvalidArgument(format!("Bose occupation needs a positive energy, got {energy}")));
    }
    if temperature < T::zero() || !temperature.is_finite() {
        return Err(Error::InvalidArgument(format!("temperature must be non-negative, got {temperature}")));
    }
    if temperature.is_zero() {
        return Ok(T::zero());
    }
    Ok(T::one() / (energy / (k_b::<T>() * temperature)).exp_m1())
}

/// Phonon transition rates. `gamma_ij` is the rate of `j → i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhononRates<T: Real = f64> {
    /// `s2 → s0` (emission).
    pub gamma_02: T,
    /// `s0 → s2` (absorption).
    pub gamma_20: T,
    /// `s2 → s1` (emission).
    pub gamma_12: T,
    /// `s1 → s2` (absorption).
    pub gamma_21: T,
    /// Gap of the `s0 ↔ s2` pair in meV.
    pub omega_a: T,
    /// Gap of the `s1 ↔ s2` pair in meV.
    pub omega_b: T,
}

fn rate_pair<T: Real>(spontaneous: T, gap: T, temperature: T) -> Result<(T, T)> {
    if spontaneous.is_zero() || temperature.is_zero() {
        return Ok((spontaneous, T::zero()));
    }
    let n = bose_occupation(gap, temperature)?;
    Ok((spontaneous * (n + T::one()), spontaneous * n))
}

/// Detailed-balance rates: downward `γ0·(n + 1)`, upward `γ0·n`.
pub fn phonon_rates<T: Real>(p: &ModelParams<T>) -> Result<PhononRates<T>> {
    let u = p.charging_energy;
    let j = p.exchange_splitting;
    let omega_a = match p.gap_convention {
        GapConvention::Spectral => u + j + j,
        GapConvention::Qpc => u + j,
    };
    let omega_b = j;
    let (gamma_02, gamma_20) = rate_pair(p.gamma_a0, omega_a, p.temperature)?;
    let (gamma_12, gamma_21) = rate_pair(p.gamma_b0, omega_b, p.temperature)?;
    Ok(PhononRates { gamma_02, gamma_20, gamma_12, gamma_21, omega_a, omega_b })
}

fn check_high_bias<T: Real>(p: &ModelParams<T>) -> Result<()> {
    if !(p.bias > p.high_bias_threshold()) {
        return Err(Error::HighBiasViolation { v: p.bias.to_f64_lossy(), threshold: p.high_bias_threshold().to_f64_lossy() });
    }
    Ok(())
}

/// Scalar coefficients of the QPC jump operators, in `√(1/ns)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QpcAmplitudes<T: Real = f64> {
    /// `ν√((V + U + J)/ħ)·sin(θ/2)`, the `s2 → s0` coefficient.
    pub plus: T,
    /// `ν√((V − U − J)/ħ)·sin(θ/2)`, the `s0 → s2` coefficient.
    pub minus: T,
    /// `ν√(V/ħ)·cos(θ/2)`, the `s1 ↔ s2` coefficient.
    pub zero: T,
}

pub fn qpc_amplitudes<T: Real>(p: &ModelParams<T>) -> Result<QpcAmplitudes<T>> {
    check_high_bias(p)?;
    let (_, nu) = effective_couplings(p)?;
    let es = eigenstructure(p);
    let h = hbar::<T>();
    let threshold = p.high_bias_threshold();
    Ok(QpcAmplitudes {
        plus: nu * ((p.bias + threshold) / h).sqrt() * es.sin_half(),
        minus: nu * ((p.bias - threshold) / h).sqrt() * es.sin_half(),
        zero: nu * (p.bias / h).sqrt() * es.cos_half(),
    })
}

/// `[C1, C2, C3]`: `C1 ∝ |s2⟩⟨s0|`, `C2 ∝ |s0⟩⟨s2|`,
/// `C3 = √(V/ħ)[(T + ν)·I + ν·cos(θ/2)(|s1⟩⟨s2| + |s2⟩⟨s1|)]`.
pub fn build_qpc_operators<T: Real>(p: &ModelParams<T>) -> Result<[Operator<T>; 3]> {
    let amp = qpc_amplitudes(p)?;
    let (t_eff, nu_eff) = effective_couplings(p)?;
    let mut c1 = Operator::zeros();
    c1[(S2, S0)] = cr(amp.minus);
    let mut c2 = Operator::zeros();
    c2[(S0, S2)] = cr(amp.plus);
    let diag = (p.bias / hbar::<T>()).sqrt() * (t_eff + nu_eff);
    let mut c3 = Operator::zeros();
    for i in 0..3 {
        c3[(i, i)] = cr(diag);
    }
    c3[(S1, S2)] = cr(amp.zero);
    c3[(S2, S1)] = cr(amp.zero);
    Ok([c1, c2, c3])
}

/// `[B_20, B_02, B_21, B_12]` with `B_ij = √γ_ij |s_i⟩⟨s_j|`.
pub fn build_phonon_operators<T: Real>(r: &PhononRates<T>) -> [Operator<T>; 4] {
    let single = |i: usize, j: usize, rate: T| {
        let mut m = Operator::zeros();
        m[(i, j)] = cr(rate.sqrt());
        m
    };
    [single(S2, S0, r.gamma_20), single(S0, S2, r.gamma_02), single(S2, S1, r.gamma_21), single(S1, S2, r.gamma_12)]
}

/// Hamiltonian in the eigenbasis, `diag(−J, U, U + J)` in meV.
pub fn hamiltonian<T: Real>(p: &ModelParams<T>) -> Operator<T> {
    Operator::from_real_diagonal(eigenstructure(p).energies)
}

/// Hamiltonian plus all seven jump operators.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet<T: Real = f64> {
    pub hamiltonian: Operator<T>,
    /// QPC channels `[C1, C2, C3]`; every jump transfers one electron.
    pub counted: [Operator<T>; 3],
    /// Phonon channels `[B_20, B_02, B_21, B_12]`; never counted.
    pub uncounted: [Operator<T>; 4],
}

pub const COUNTED_NAMES: [&str; 3] = ["C1", "C2", "C3"];
pub const UNCOUNTED_NAMES: [&str; 4] = ["B_20", "B_02", "B_21", "B_12"];

impl<T: Real> OperatorSet<T> {
    pub fn build(p: &ModelParams<T>) -> Result<Self> {
        p.validate()?;
        Ok(Self { hamiltonian: hamiltonian(p), counted: build_qpc_operators(p)?, uncounted: build_phonon_operators(&phonon_rates(p)?) })
    }

    /// All jump operators, counted first.
    pub fn jump_operators(&self) -> impl Iterator<Item = &Operator<T>> {
        self.counted.iter().chain(self.uncounted.iter())
    }

    pub fn named(&self) -> Vec<(&'static str, &Operator<T>)> {
        COUNTED_NAMES.iter().copied().zip(self.counted.iter()).chain(UNCOUNTED_NAMES.iter().copied().zip(self.uncounted.iter())).collect()
    }
}
