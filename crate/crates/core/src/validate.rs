//! Cross-checks between independent evaluation paths: analytic vs numeric
//! steady state, resolvent vs quadrature noise, trajectories vs resolvent.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{build_generator, eigenvalues, spectral_gap, steady_state_analytic, steady_state_numeric, vec_index, Generator};
use crate::error::Result;
use crate::model::{Operator, OperatorSet};
use crate::noise::{fano_quadrature, fano_resolvent, DEFAULT_QUADRATURE_TOL};
use crate::params::{default_params, GapConvention, ModelParams};
use crate::trajectories::{run_trajectories, TrajectoryConfig};

/// Assembles a generator from a Hamiltonian and operator set. Swappable so
/// tests can confirm that a broken generator is caught.
pub type GeneratorBuilder = fn(&Operator<f64>, &OperatorSet<f64>) -> Result<Generator<f64>>;

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    /// Smaller parameter samples and shorter trajectory runs.
    pub quick: bool,
    pub seed: u64,
    pub builder: GeneratorBuilder,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { quick: false, seed: 0, builder: build_generator }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation in the check's own units.
    pub metric: f64,
    pub threshold: f64,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub quick: bool,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<28} {:<6} {:>12} {:>12} {:>8}  detail", "check", "result", "metric", "threshold", "time/s").unwrap();
        for c in &self.checks {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            writeln!(out, "{:<28} {:<6} {:>12.3e} {:>12.3e} {:>8.2}  {}", c.name, verdict, c.metric, c.threshold, c.seconds, c.detail)
                .unwrap();
        }
        out
    }
}

/// Random parameter set: α ∈ [0.1, 10], T ∈ [0, 50] K, J/U ∈ [0.02, 0.3],
/// V/(U+J) ∈ [1.2, 4], either gap convention.
pub fn random_params(rng: &mut impl Rng) -> ModelParams<f64> {
    let mut p = default_params::<f64>();
    p.alpha = rng.random_range(0.1..=10.0);
    p.temperature = rng.random_range(0.0..=50.0);
    p.exchange_splitting = p.charging_energy * rng.random_range(0.02..=0.3);
    p.bias = (p.charging_energy + p.exchange_splitting) * rng.random_range(1.2..=4.0);
    p.gap_convention = if rng.random_bool(0.5) { GapConvention::Qpc } else { GapConvention::Spectral };
    p
}

fn timed(name: &'static str, threshold: f64, f: impl FnOnce() -> std::result::Result<(f64, String), String>) -> CheckResult {
    let start = Instant::now();
    let outcome = f();
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((metric, detail)) => CheckResult { name, passed: metric <= threshold, metric, threshold, detail, seconds },
        Err(detail) => CheckResult { name, passed: false, metric: f64::INFINITY, threshold, detail, seconds },
    }
}

/// Largest `|Σ_i L[(i,i), k]|` relative to `max|L|`: zero for a
/// trace-preserving generator.
pub fn trace_defect(l: &Generator<f64>) -> f64 {
    let m = l.matrix();
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    (0..9).map(|k| (0..3).map(|i| m[(vec_index(i, i), k)]).sum::<crate::scalar::C<f64>>().norm()).fold(0.0, f64::max) / scale
}

fn steady_state_check(opts: &ValidateOptions, samples: usize) -> CheckResult {
    timed("steady_state", 1e-10, || {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let (mut worst, mut worst_trace) = (0.0f64, 0.0f64);
        for _ in 0..samples {
            let p = random_params(&mut rng);
            let ops = OperatorSet::build(&p).map_err(|e| e.to_string())?;
            let l = (opts.builder)(&ops.hamiltonian, &ops).map_err(|e| e.to_string())?;
            worst_trace = worst_trace.max(trace_defect(&l));
            let analytic = steady_state_analytic(&p).map_err(|e| e.to_string())?;
            let numeric = steady_state_numeric(&l).map_err(|e| format!("numeric steady state: {e}"))?;
            worst = worst.max(analytic.matrix().max_abs_diff(numeric.matrix()));
        }
        if worst_trace > 1e-12 {
            return Err(format!("generator is not trace preserving: defect {worst_trace:.3e}"));
        }
        Ok((worst, format!("{samples} random sets, trace defect {worst_trace:.1e}")))
    })
}

fn spectrum_check(opts: &ValidateOptions, samples: usize) -> CheckResult {
    timed("generator_spectrum", 1e-10, || {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..samples {
            let p = random_params(&mut rng);
            let ops = OperatorSet::build(&p).map_err(|e| e.to_string())?;
            let l = (opts.builder)(&ops.hamiltonian, &ops).map_err(|e| e.to_string())?;
            let ev = eigenvalues(&l).map_err(|e| e.to_string())?;
            worst = ev.iter().map(|z| z.re).fold(worst, f64::max);
        }
        Ok((worst.max(0.0), format!("{samples} random sets, max Re λ = {worst:.2e}")))
    })
}

fn fano_grid(quick: bool) -> Vec<ModelParams<f64>> {
    let (alphas, temps): (&[f64], &[f64]) =
        if quick { (&[0.5, 3.0], &[0.0, 15.0]) } else { (&[0.1, 0.5, 1.0, 3.0, 8.0], &[0.0, 5.0, 15.0, 25.0, 40.0]) };
    alphas.iter().flat_map(|&a| temps.iter().map(move |&t| default_params().with_alpha(a).with_temperature(t))).collect()
}

fn resolvent_quadrature_check(quick: bool) -> CheckResult {
    timed("resolvent_vs_quadrature", 1e-6, || {
        let grid = fano_grid(quick);
        let mut worst = 0.0f64;
        for p in &grid {
            let r = fano_resolvent(p).map_err(|e| e.to_string())?;
            let q = fano_quadrature(p, None, DEFAULT_QUADRATURE_TOL).map_err(|e| e.to_string())?;
            worst = worst.max(((r.fano - q.fano) / r.fano).abs());
        }
        Ok((worst, format!("{} grid points, relative Fano difference", grid.len())))
    })
}

fn poisson_check() -> CheckResult {
    timed("poissonian_limit", 1e-12, || {
        let mut worst = 0.0f64;
        for t in [0.0, 15.0] {
            let mut p = default_params::<f64>().with_temperature(t);
            p.tunneling_conditional = 0.0;
            worst = worst.max((fano_resolvent(&p).map_err(|e| e.to_string())?.fano - 1.0).abs());
            worst = worst.max((fano_quadrature(&p, None, DEFAULT_QUADRATURE_TOL).map_err(|e| e.to_string())?.fano - 1.0).abs());
        }
        Ok((worst, "nu0 = 0, |F - 1|".into()))
    })
}

/// Trajectory Fano factor in units of its standard error from the
/// resolvent value, with windows of one relaxation time.
pub fn trajectory_deviation(p: &ModelParams<f64>, n_trajectories: usize, n_windows: usize, seed: u64) -> Result<(f64, String)> {
    let reference = fano_resolvent(p)?.fano;
    let (_, l) = crate::engine::generator_for(p)?;
    let gap = spectral_gap(&l)?;
    let cfg = TrajectoryConfig { n_trajectories, t_window: 1.0 / gap, n_windows, seed, ..Default::default() };
    let rec = run_trajectories(p, &cfg)?;
    let sigmas = (rec.fano_estimate - reference).abs() / rec.std_error;
    let detail = format!(
        "alpha={} T={}: F_traj = {:.5} ± {:.5}, F_res = {:.6}, {} windows",
        p.alpha,
        p.temperature,
        rec.fano_estimate,
        rec.std_error,
        reference,
        n_trajectories * n_windows
    );
    Ok((sigmas, detail))
}

fn trajectory_check(opts: &ValidateOptions) -> CheckResult {
    let (n_traj, n_win) = if opts.quick { (8, 250) } else { (8, 2500) };
    timed("trajectories_vs_resolvent", 3.0, || {
        let mut worst = 0.0f64;
        let mut details = Vec::new();
        for (alpha, temp) in [(1.0, 15.0), (3.0, 0.0)] {
            let p = default_params::<f64>().with_alpha(alpha).with_temperature(temp);
            let (s, d) = trajectory_deviation(&p, n_traj, n_win, opts.seed).map_err(|e| e.to_string())?;
            worst = worst.max(s);
            details.push(d);
        }
        Ok((worst, details.join("; ")))
    })
}

/// Runs every check. `quick` keeps the total well under a minute.
pub fn run_validation(opts: &ValidateOptions) -> ValidationReport {
    let samples = if opts.quick { 50 } else { 200 };
    let checks = vec![
        steady_state_check(opts, samples),
        spectrum_check(opts, samples / 2),
        poisson_check(),
        resolvent_quadrature_check(opts.quick),
        trajectory_check(opts),
    ];
    ValidationReport { quick: opts.quick, seed: opts.seed, passed: checks.iter().all(|c| c.passed), checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::build_generator_sign_flipped;

    #[test]
    fn sign_flip_is_caught_by_steady_state_check() {
        let opts = ValidateOptions { builder: build_generator_sign_flipped, ..Default::default() };
        let c = steady_state_check(&opts, 5);
        assert!(!c.passed, "{c:?}");
        let good = steady_state_check(&ValidateOptions::default(), 5);
        assert!(good.passed, "{good:?}");
    }

    #[test]
    fn random_params_respect_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let p = random_params(&mut rng);
            assert!(p.validate().is_ok());
            let ratio = p.bias / (p.charging_energy + p.exchange_splitting);
            assert!((1.2..=4.0).contains(&ratio));
        }
    }

    #[test]
    fn table_lists_every_check() {
        let report = ValidationReport {
            quick: true,
            seed: 0,
            passed: false,
            checks: vec![
                CheckResult { name: "a", passed: true, metric: 0.0, threshold: 1.0, detail: String::new(), seconds: 0.0 },
                CheckResult { name: "b", passed: false, metric: 2.0, threshold: 1.0, detail: "x".into(), seconds: 0.0 },
            ],
        };
        let t = report.table();
        assert_eq!(t.lines().count(), 3);
        assert!(t.contains("FAIL"));
    }
}
