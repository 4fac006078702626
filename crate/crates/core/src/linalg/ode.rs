//! Adaptive Dormand–Prince 5(4) integrator for linear and nonlinear systems
//! `y' = f(t, y)` over complex state vectors.

use super::{vec_max_abs, Vector};
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub initial_step: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(1e-10), abs_tol: T::lit(1e-13), initial_step: None, max_steps: 5_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<T: Real, const N: usize>(y: &Vector<T, N>, terms: &[(f64, &Vector<T, N>)], h: T) -> Vector<T, N> {
    std::array::from_fn(|i| {
        let mut acc = C::new(T::zero(), T::zero());
        for (w, k) in terms {
            acc += k[i] * T::lit(*w);
        }
        y[i] + acc * h
    })
}

/// Integrates from `t0` to `t1` (`t1 >= t0`) and returns the final state.
pub fn integrate_dopri5<T: Real, const N: usize>(
    f: impl Fn(T, &Vector<T, N>) -> Vector<T, N>,
    t0: T,
    y0: &Vector<T, N>,
    t1: T,
    opts: &OdeOptions<T>,
) -> Result<(Vector<T, N>, OdeStats)> {
    if t1 < t0 {
        return Err(Error::InvalidArgument("integration interval must be forward in time".into()));
    }
    let mut stats = OdeStats::default();
    let mut t = t0;
    let mut y = *y0;
    if t1 == t0 {
        return Ok((y, stats));
    }
    let span = t1 - t0;
    let mut h = opts.initial_step.unwrap_or_else(|| {
        let k = f(t0, y0);
        let scale = vec_max_abs(y0).max(opts.abs_tol);
        let rate = vec_max_abs(&k);
        if rate > T::zero() {
            (T::lit(0.01) * scale / rate).min(span)
        } else {
            span
        }
    });
    let mut k1 = f(t, &y);
    while t < t1 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Integration(format!("step budget of {} exhausted at t = {}", opts.max_steps, t)));
        }
        if t + h > t1 {
            h = t1 - t;
        }
        let k2 = f(t + h * T::lit(1.0 / 5.0), &axpy(&y, &[(A21, &k1)], h));
        let k3 = f(t + h * T::lit(3.0 / 10.0), &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(t + h * T::lit(4.0 / 5.0), &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(t + h * T::lit(8.0 / 9.0), &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
        let k6 = f(t + h, &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
        let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(t + h, &y_new);
        let zero = [C::new(T::zero(), T::zero()); N];
        let err_vec = axpy(&zero, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)], h);
        let mut err_sq = T::zero();
        for i in 0..N {
            let sc = opts.abs_tol + opts.rel_tol * y[i].norm().max(y_new[i].norm());
            err_sq += (err_vec[i].norm() / sc).powi(2);
        }
        let err = (err_sq / T::lit(N as f64)).sqrt();
        if !err.is_finite() {
            return Err(Error::Integration(format!("non-finite error estimate at t = {t}")));
        }
        let factor = if err.is_zero() { T::lit(5.0) } else { (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0)) };
        if err <= T::one() {
            t += h;
            y = y_new;
            k1 = k7;
            stats.accepted += 1;
        } else {
            stats.rejected += 1;
        }
        h *= factor;
        if h <= T::epsilon() * t.abs().max(span) {
            return Err(Error::Integration(format!("step size underflow at t = {t}")));
        }
    }
    Ok((y, stats))
}
