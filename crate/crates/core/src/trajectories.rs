//! Monte-Carlo wave-function unravelling with counting of QPC jumps.
//!
//! Between jumps the unnormalised state follows `ψ̇ = Kψ` with
//! `K = −iH/ħ − ½ Σ_k L_k†L_k` over all seven channels. The waiting time is
//! obtained by inverting the survival probability `‖ψ(t)‖² = U` for a uniform
//! `U`, using the exact propagator `e^{Kt}` and a safeguarded Newton iteration
//! on `ln‖ψ(t)‖²`. The channel is then drawn with weights `‖L_k ψ‖²`.
//!
//! Each trajectory owns a ChaCha8 stream selected by its index, so results do
//! not depend on scheduling.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{generator_for, spectral_gap, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{eigen_decomposition, expm, hermitian_eigen, outer, vec_norm_sqr, Lu, Vector};
use crate::model::{Operator, OperatorSet};
use crate::noise::JumpMap;
use crate::params::ModelParams;
use crate::scalar::{Real, C};
use crate::units::hbar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryConfig<T: Real = f64> {
    pub n_trajectories: usize,
    /// Counting window in ns.
    pub t_window: T,
    /// Windows recorded per trajectory after the burn-in.
    pub n_windows: usize,
    pub seed: u64,
    /// Relative accuracy of the survival-probability inversion.
    pub norm_tolerance: T,
}

impl<T: Real> Default for TrajectoryConfig<T> {
    fn default() -> Self {
        Self { n_trajectories: 8, t_window: T::lit(100.0), n_windows: 100, seed: 0, norm_tolerance: T::lit(1e-10) }
    }
}

impl<T: Real> TrajectoryConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories == 0 {
            return Err(Error::TrajectoryConfig("n_trajectories must be at least 1".into()));
        }
        if !(self.t_window > T::zero()) || !self.t_window.is_finite() {
            return Err(Error::TrajectoryConfig(format!("t_window must be positive, got {}", self.t_window)));
        }
        if self.n_windows == 0 {
            return Err(Error::TrajectoryConfig("n_windows must be at least 1".into()));
        }
        if !(self.norm_tolerance > T::zero() && self.norm_tolerance < T::lit(0.1)) {
            return Err(Error::TrajectoryConfig(format!("norm_tolerance must lie in (0, 0.1), got {}", self.norm_tolerance)));
        }
        Ok(())
    }
}

/// Counting statistics of all windows of all trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRecord<T: Real = f64> {
    /// Trajectory-major: `counts[traj * n_windows + window]`.
    pub counts: Vec<u32>,
    pub n_trajectories: usize,
    pub n_windows: usize,
    pub t_window: T,
    /// Burn-in discarded before the first window, in ns.
    pub burn_in: T,
    pub mean: T,
    pub variance: T,
    pub fano_estimate: T,
    /// Standard error of `fano_estimate` from batch means over trajectories.
    pub std_error: T,
    /// Standard error of `mean`, same method.
    pub mean_std_error: T,
    /// All jumps including phonon channels and burn-in.
    pub total_jumps: u64,
}

impl<T: Real> CountRecord<T> {
    /// `mean / t_window`, electrons per ns.
    pub fn rate(&self) -> T {
        self.mean / self.t_window
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "trajectory_index,window_index,count")?;
        for (k, c) in self.counts.iter().enumerate() {
            writeln!(w, "{},{},{}", k / self.n_windows, k % self.n_windows, c)?;
        }
        Ok(())
    }
}

/// Exact no-jump propagator `e^{Kt}`.
#[derive(Debug, Clone)]
enum Drift<T: Real> {
    Spectral {
        values: Vector<T, 3>,
        vectors: Operator<T>,
        inverse: Operator<T>,
    },
    /// Fallback for a defective or badly conditioned `K`.
    Dense {
        k: Operator<T>,
    },
}

impl<T: Real> Drift<T> {
    fn new(k: Operator<T>) -> Result<Self> {
        if let Ok(ed) = eigen_decomposition(&k) {
            if let Ok(lu) = Lu::factor(&ed.vectors) {
                let inverse = lu.solve_matrix(&Operator::identity());
                let cond = ed.vectors.norm_one() * inverse.norm_one();
                let d = Operator::from_fn(|i, j| if i == j { ed.values[i] } else { C::new(T::zero(), T::zero()) });
                let resid = (k * ed.vectors - ed.vectors * d).max_abs();
                if cond < T::lit(1e6) && resid <= T::lit(1e-12) * k.max_abs().max(T::min_positive_value()) {
                    return Ok(Drift::Spectral { values: ed.values, vectors: ed.vectors, inverse });
                }
            }
        }
        Ok(Drift::Dense { k })
    }

    fn coordinates(&self, psi: &Vector<T, 3>) -> Vector<T, 3> {
        match self {
            Drift::Spectral { inverse, .. } => inverse.mul_vec(psi),
            Drift::Dense { .. } => *psi,
        }
    }

    fn state(&self, coords: &Vector<T, 3>, t: T) -> Result<Vector<T, 3>> {
        match self {
            Drift::Spectral { values, vectors, .. } => {
                let scaled: Vector<T, 3> = std::array::from_fn(|i| coords[i] * (values[i] * t).exp());
                Ok(vectors.mul_vec(&scaled))
            }
            Drift::Dense { k } => Ok(expm(&k.scale_real(t))?.mul_vec(coords)),
        }
    }
}

const N_COUNTED: usize = 3;

/// Everything a trajectory needs, shared read-only between threads.
#[derive(Debug, Clone)]
struct Unravelling<T: Real> {
    /// Counted channels first.
    jumps: [Operator<T>; 7],
    /// `Σ_k L_k†L_k`; `⟨ψ|G|ψ⟩` is the total jump rate.
    rate_operator: Operator<T>,
    drift: Drift<T>,
}

impl<T: Real> Unravelling<T> {
    fn new(ops: &OperatorSet<T>) -> Result<Self> {
        let jumps: [Operator<T>; 7] = std::array::from_fn(|k| if k < 3 { ops.counted[k] } else { ops.uncounted[k - 3] });
        let mut g = Operator::zeros();
        for l in &jumps {
            g += l.adjoint() * *l;
        }
        let k = ops.hamiltonian.scale(C::new(T::zero(), -T::one() / hbar::<T>())) - g.scale_real(T::lit(0.5));
        Ok(Self { jumps, rate_operator: g, drift: Drift::new(k)? })
    }

    fn rate(&self, psi: &Vector<T, 3>) -> T {
        let gpsi = self.rate_operator.mul_vec(psi);
        psi.iter().zip(&gpsi).fold(T::zero(), |acc, (a, b)| acc + (a.conj() * *b).re)
    }
}

/// Outcome of one waiting-time draw.
enum NextJump<T: Real> {
    /// Jump at `dt` after the current time with pre-jump state `psi`.
    At { dt: T, psi: Vector<T, 3> },
    /// No jump before the horizon; `psi` is the unnormalised state there.
    Beyond { psi: Vector<T, 3> },
}

/// Solves `‖e^{Kt}ψ0‖² = u` for `t ∈ (0, horizon]`, with `ψ0` normalised.
fn next_jump<T: Real>(un: &Unravelling<T>, psi0: &Vector<T, 3>, u: T, horizon: T, tol: T) -> Result<NextJump<T>> {
    let coords = un.drift.coordinates(psi0);
    let target = u.ln();
    let eval = |t: T| -> Result<(T, T, Vector<T, 3>)> {
        let psi = un.drift.state(&coords, t)?;
        let n = vec_norm_sqr(&psi);
        Ok((n.ln(), un.rate(&psi) / n, psi))
    };
    // ln‖ψ‖² decreases monotonically from 0 with slope −(hazard). The
    // horizon is only evaluated once an iterate reaches it.
    let (mut lo, mut hi) = (T::zero(), horizon);
    let mut bracketed = false;
    let mut last_step = horizon;
    let rate0 = un.rate(psi0);
    let mut t = if rate0 > T::zero() { -target / rate0 } else { horizon };
    for _ in 0..200 {
        if t >= horizon && !bracketed {
            let (log_end, _, psi_end) = eval(horizon)?;
            if !(log_end < target) {
                return Ok(NextJump::Beyond { psi: psi_end });
            }
            bracketed = true;
            t = (lo + hi) / T::lit(2.0);
        }
        let (log_n, hazard, psi) = eval(t)?;
        let f = log_n - target;
        if f.abs() <= tol {
            return Ok(NextJump::At { dt: t, psi });
        }
        if f > T::zero() {
            lo = t;
        } else {
            hi = t;
            bracketed = true;
        }
        let newton = if hazard > T::zero() { t + f / hazard } else { T::infinity() };
        // Bisect whenever Newton leaves the bracket or its steps stop halving.
        let stalled = bracketed && (newton - t).abs() * T::lit(2.0) > last_step;
        let next = if newton > lo && newton < hi && !stalled {
            newton
        } else if !bracketed {
            horizon
        } else {
            (lo + hi) / T::lit(2.0)
        };
        last_step = (next - t).abs();
        t = next;
        if bracketed && hi - lo <= T::epsilon() * hi {
            return Ok(NextJump::At { dt: t, psi });
        }
    }
    Err(Error::Trajectory("waiting-time inversion did not converge".into()))
}

/// Applies a randomly selected jump. Returns the channel index and the
/// normalised post-jump state.
fn apply_jump<T: Real>(un: &Unravelling<T>, psi: &Vector<T, 3>, draw: T) -> Result<(usize, Vector<T, 3>)> {
    let images: [Vector<T, 3>; 7] = std::array::from_fn(|k| un.jumps[k].mul_vec(psi));
    let weights: [T; 7] = std::array::from_fn(|k| vec_norm_sqr(&images[k]));
    let total: T = weights.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::Trajectory("zero total jump rate at a sampled jump time".into()));
    }
    let mut threshold = draw * total;
    let mut channel = weights.iter().rposition(|w| *w > T::zero()).expect("positive total");
    for (k, w) in weights.iter().enumerate() {
        if threshold < *w {
            channel = k;
            break;
        }
        threshold -= *w;
    }
    let scale = C::new(T::one() / weights[channel].sqrt(), T::zero());
    Ok((channel, images[channel].map(|z| z * scale)))
}

fn uniform_open<T: Real>(rng: &mut ChaCha8Rng) -> T {
    // (0, 1]: the logarithm stays finite.
    T::lit(1.0 - rng.random::<f64>())
}

fn normalise<T: Real>(psi: &Vector<T, 3>) -> Vector<T, 3> {
    let s = C::new(T::one() / vec_norm_sqr(psi).sqrt(), T::zero());
    psi.map(|z| z * s)
}

fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

struct TrajectoryCounts {
    counts: Vec<u32>,
    jumps: u64,
}

fn count_trajectory<T: Real>(un: &Unravelling<T>, cfg: &TrajectoryConfig<T>, burn_in: T, index: usize) -> Result<TrajectoryCounts> {
    let mut rng = trajectory_rng(cfg.seed, index);
    let mut counts = vec![0u32; cfg.n_windows];
    let end = burn_in + cfg.t_window * T::lit(cfg.n_windows as f64);
    let mut psi: Vector<T, 3> = std::array::from_fn(|i| if i == 0 { C::new(T::one(), T::zero()) } else { C::new(T::zero(), T::zero()) });
    let mut t = T::zero();
    let mut jumps = 0u64;
    while t < end {
        let u = uniform_open::<T>(&mut rng);
        match next_jump(un, &psi, u, end - t, cfg.norm_tolerance)? {
            NextJump::Beyond { .. } => break,
            NextJump::At { dt, psi: pre } => {
                t += dt;
                let (channel, post) = apply_jump(un, &pre, T::lit(rng.random::<f64>()))?;
                psi = post;
                jumps += 1;
                if channel < N_COUNTED && t >= burn_in && t < end {
                    let w = ((t - burn_in) / cfg.t_window).floor().to_f64_lossy() as usize;
                    let slot = &mut counts[w.min(cfg.n_windows - 1)];
                    *slot = slot
                        .checked_add(1)
                        .ok_or_else(|| Error::TrajectoryConfig("window count overflowed u32; use a smaller t_window".into()))?;
                }
            }
        }
    }
    Ok(TrajectoryCounts { counts, jumps })
}

fn mean_and_variance<T: Real>(xs: impl Iterator<Item = T> + Clone) -> (T, T, usize) {
    let n = xs.clone().count();
    let mean = xs.clone().sum::<T>() / T::lit(n as f64);
    let var = if n > 1 { xs.map(|x| (x - mean) * (x - mean)).sum::<T>() / T::lit((n - 1) as f64) } else { T::zero() };
    (mean, var, n)
}

/// Counts QPC jumps per window in steady state.
///
/// Trajectories start in `s0` and discard `10/Δgap` of burn-in (none when
/// the Liouvillian has no gap or the counted operators are all multiples of
/// the identity).
pub fn run_trajectories<T: Real>(p: &ModelParams<T>, cfg: &TrajectoryConfig<T>) -> Result<CountRecord<T>> {
    p.validate()?;
    cfg.validate()?;
    let (ops, l) = generator_for(p)?;
    // Scalar counted operators make the count process state independent.
    let state_independent = JumpMap::from_operators(&ops.counted).scalar().is_some();
    let burn_in = match spectral_gap(&l) {
        _ if state_independent => T::zero(),
        Ok(gap) => T::lit(10.0) / gap,
        Err(Error::NoSpectralGap) => T::zero(),
        Err(e) => return Err(e),
    };
    let un = Unravelling::new(&ops)?;
    let per: Vec<TrajectoryCounts> =
        (0..cfg.n_trajectories).into_par_iter().map(|k| count_trajectory(&un, cfg, burn_in, k)).collect::<Result<_>>()?;

    let all = per.iter().flat_map(|tc| tc.counts.iter().map(|&c| T::lit(c as f64)));
    let (mean, variance, n) = mean_and_variance(all);
    let fano_estimate = if mean > T::zero() { variance / mean } else { T::nan() };
    let (std_error, mean_std_error) = if cfg.n_trajectories > 1 {
        let batch = |f: &dyn Fn(&TrajectoryCounts) -> T| {
            let (_, v, m) = mean_and_variance(per.iter().map(f));
            (v / T::lit(m as f64)).sqrt()
        };
        let fano_of = |tc: &TrajectoryCounts| {
            let (m, v, _) = mean_and_variance(tc.counts.iter().map(|&c| T::lit(c as f64)));
            v / m
        };
        let mean_of = |tc: &TrajectoryCounts| mean_and_variance(tc.counts.iter().map(|&c| T::lit(c as f64))).0;
        (batch(&fano_of), batch(&mean_of))
    } else {
        // Independent-window approximation.
        let dof = T::lit((n.max(2) - 1) as f64);
        (fano_estimate * (T::lit(2.0) / dof).sqrt(), (variance / T::lit(n as f64)).sqrt())
    };
    Ok(CountRecord {
        counts: per.iter().flat_map(|tc| tc.counts.iter().copied()).collect(),
        n_trajectories: cfg.n_trajectories,
        n_windows: cfg.n_windows,
        t_window: cfg.t_window,
        burn_in,
        mean,
        variance,
        fano_estimate,
        std_error,
        mean_std_error,
        total_jumps: per.iter().map(|tc| tc.jumps).sum(),
    })
}

/// Trajectory-averaged state with per-entry standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleState<T: Real = f64> {
    pub rho: DensityMatrix<T>,
    /// Standard error of each entry (real and imaginary parts combined in quadrature).
    pub std_error: [[T; 3]; 3],
}

fn evolve_pure<T: Real>(un: &Unravelling<T>, psi0: &Vector<T, 3>, t_end: T, tol: T, rng: &mut ChaCha8Rng) -> Result<Vector<T, 3>> {
    let mut psi = *psi0;
    let mut t = T::zero();
    while t < t_end {
        let u = uniform_open::<T>(rng);
        match next_jump(un, &psi, u, t_end - t, tol)? {
            NextJump::Beyond { psi: end } => return Ok(normalise(&end)),
            NextJump::At { dt, psi: pre } => {
                t += dt;
                psi = apply_jump(un, &pre, T::lit(rng.random::<f64>()))?.1;
            }
        }
    }
    Ok(psi)
}

/// Average of `|ψ(t)⟩⟨ψ(t)|` over trajectories started from the eigenvectors
/// of `rho0`, each group weighted by its eigenvalue. `cfg.n_trajectories`
/// trajectories run per non-zero eigenvalue; `t_window` and `n_windows` are
/// unused.
pub fn ensemble_average_state<T: Real>(
    p: &ModelParams<T>,
    cfg: &TrajectoryConfig<T>,
    rho0: &DensityMatrix<T>,
    t: T,
) -> Result<EnsembleState<T>> {
    p.validate()?;
    cfg.validate()?;
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be non-negative, got {t}")));
    }
    let ops = OperatorSet::build(p)?;
    let un = Unravelling::new(&ops)?;
    let eig = hermitian_eigen(rho0.matrix());
    let mut rho = Operator::zeros();
    let mut var = [[T::zero(); 3]; 3];
    let n = cfg.n_trajectories;
    for (component, &weight) in eig.values.iter().enumerate() {
        if !(weight > T::epsilon()) {
            continue;
        }
        let psi0 = eig.vectors.column(component);
        let states: Vec<Operator<T>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = trajectory_rng(cfg.seed, component * n + k);
                let psi = evolve_pure(&un, &psi0, t, cfg.norm_tolerance, &mut rng)?;
                Ok(outer(&psi, &psi))
            })
            .collect::<Result<_>>()?;
        let inv_n = T::one() / T::lit(n as f64);
        let mean = states.iter().fold(Operator::zeros(), |acc, s| acc + *s).scale_real(inv_n);
        rho += mean.scale_real(weight);
        if n > 1 {
            for i in 0..3 {
                for j in 0..3 {
                    let ss: T = states.iter().map(|s| (s[(i, j)] - mean[(i, j)]).norm_sqr()).sum();
                    var[i][j] += weight * weight * ss / T::lit(((n - 1) * n) as f64);
                }
            }
        }
    }
    Ok(EnsembleState { rho: DensityMatrix::from_matrix_unchecked(rho), std_error: var.map(|row| row.map(|v| v.sqrt())) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::default_params;

    fn defaults() -> ModelParams<f64> {
        default_params()
    }

    #[test]
    fn drift_matches_dense_exponential() {
        for p in [defaults(), defaults().with_alpha(3.0).with_temperature(15.0), ModelParams { tunneling_conditional: 0.0, ..defaults() }] {
            let ops = OperatorSet::build(&p).unwrap();
            let un = Unravelling::new(&ops).unwrap();
            assert!(matches!(un.drift, Drift::Spectral { .. }));
            let kmat = ops.hamiltonian.scale(C::new(0.0, -1.0 / crate::units::HBAR_MEV_NS)) - un.rate_operator.scale_real(0.5);
            let psi0 = normalise(&[C::new(0.3, 0.1), C::new(-0.5, 0.2), C::new(0.7, 0.0)]);
            for t in [0.0, 0.01, 0.7, 5.0] {
                let a = un.drift.state(&un.drift.coordinates(&psi0), t).unwrap();
                let b = expm(&kmat.scale_real(t)).unwrap().mul_vec(&psi0);
                let d = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                assert!(d < 1e-10, "t={t}: {d}");
            }
        }
    }

    #[test]
    fn waiting_time_inverts_survival() {
        let ops = OperatorSet::build(&defaults()).unwrap();
        let un = Unravelling::new(&ops).unwrap();
        let psi0 = normalise(&[C::new(0.3, 0.0), C::new(0.5, 0.2), C::new(0.7, 0.0)]);
        for u in [0.9, 0.5, 1e-3] {
            match next_jump(&un, &psi0, u, 1e3, 1e-12).unwrap() {
                NextJump::At { psi, dt } => {
                    assert!((vec_norm_sqr(&psi).ln() - f64::ln(u)).abs() <= 1e-12, "u={u}");
                    assert!(dt > 0.0);
                }
                NextJump::Beyond { .. } => panic!("jump expected"),
            }
        }
        assert!(matches!(next_jump(&un, &psi0, 1e-300, 1e-3, 1e-12).unwrap(), NextJump::Beyond { .. }));
    }

    #[test]
    fn config_validation() {
        let ok = TrajectoryConfig::<f64>::default();
        assert!(ok.validate().is_ok());
        assert!(TrajectoryConfig { n_trajectories: 0, ..ok }.validate().is_err());
        assert!(TrajectoryConfig { t_window: 0.0, ..ok }.validate().is_err());
        assert!(TrajectoryConfig { n_windows: 0, ..ok }.validate().is_err());
        assert!(TrajectoryConfig { norm_tolerance: 0.5, ..ok }.validate().is_err());
    }

    #[test]
    fn same_seed_same_counts() {
        let p = defaults().with_alpha(3.0);
        let cfg = TrajectoryConfig { n_trajectories: 3, t_window: 20.0, n_windows: 30, seed: 42, norm_tolerance: 1e-10 };
        let a = run_trajectories(&p, &cfg).unwrap();
        let b = run_trajectories(&p, &cfg).unwrap();
        assert_eq!(a, b);
        let c = run_trajectories(&p, &TrajectoryConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn thread_count_does_not_change_counts() {
        let p = defaults();
        let cfg = TrajectoryConfig { n_trajectories: 4, t_window: 5.0, n_windows: 20, seed: 7, norm_tolerance: 1e-10 };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_trajectories(&p, &cfg).unwrap());
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| run_trajectories(&p, &cfg).unwrap());
        assert_eq!(one, three);
    }

    #[test]
    fn csv_dump_layout() {
        let p = ModelParams { tunneling_conditional: 0.0, ..defaults() }.without_phonons();
        let cfg = TrajectoryConfig { n_trajectories: 2, t_window: 0.1, n_windows: 3, seed: 1, norm_tolerance: 1e-10 };
        let rec = run_trajectories(&p, &cfg).unwrap();
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trajectory_index,window_index,count");
        assert_eq!(lines.len(), 7);
        assert!(lines[4].starts_with("1,0,"));
    }

    #[test]
    fn ensemble_state_at_time_zero_is_exact() {
        let rho0 = DensityMatrix::new(Operator::from_fn(|i, j| {
            let m = [[0.5, 0.1, 0.0], [0.1, 0.3, 0.05], [0.0, 0.05, 0.2]];
            C::new(m[i][j], 0.0)
        }))
        .unwrap();
        let cfg = TrajectoryConfig { n_trajectories: 5, ..TrajectoryConfig::default() };
        let out = ensemble_average_state(&defaults(), &cfg, &rho0, 0.0).unwrap();
        assert!(out.rho.matrix().max_abs_diff(rho0.matrix()) < 1e-14);
    }
}
