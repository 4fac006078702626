//! Fixed unit system: energies in meV, times in ns, temperatures in K,
//! charges in units of the elementary charge (currents are counting rates).

use crate::scalar::Real;

/// Reduced Planck constant in meV·ns.
pub const HBAR_MEV_NS: f64 = 6.582119569e-4;

/// Boltzmann constant in meV/K.
pub const KB_MEV_PER_K: f64 = 8.617333262e-2;

/// Elementary charge. Currents are reported in electrons per ns.
pub const ELEMENTARY_CHARGE: f64 = 1.0;

#[inline]
pub fn hbar<T: Real>() -> T {
    T::lit(HBAR_MEV_NS)
}

#[inline]
pub fn k_b<T: Real>() -> T {
    T::lit(KB_MEV_PER_K)
}

#[inline]
pub fn charge<T: Real>() -> T {
    T::lit(ELEMENTARY_CHARGE)
}
