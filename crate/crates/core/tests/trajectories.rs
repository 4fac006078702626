use dqd_core::engine::{evolve, generator_for, spectral_gap};
use dqd_core::{default_params, ensemble_average_state, fano_resolvent, run_trajectories, DensityMatrix, ModelParams, TrajectoryConfig, C};

// Weak unconditional tunnelling makes the conditional part of the noise
// (and hence F − 1) large: F ≈ 1.36 here.
fn strong_noise() -> ModelParams {
    let mut p = default_params::<f64>().with_temperature(15.0);
    p.tunneling = 0.003;
    p
}

fn relaxation_time(p: &ModelParams) -> f64 {
    1.0 / spectral_gap(&generator_for(p).unwrap().1).unwrap()
}

#[test]
fn window_fano_converges_to_resolvent_value() {
    let p = strong_noise();
    let reference = fano_resolvent(&p).unwrap().fano;
    let tau = relaxation_time(&p);
    let mut estimates = Vec::new();
    for (k, multiple) in [1.0, 3.0, 10.0, 30.0].into_iter().enumerate() {
        let cfg =
            TrajectoryConfig { n_trajectories: 8, t_window: multiple * tau, n_windows: 500, seed: 40 + k as u64, ..Default::default() };
        let rec = run_trajectories(&p, &cfg).unwrap();
        estimates.push((multiple, rec.fano_estimate, rec.std_error));
    }
    let (_, f, se) = *estimates.last().unwrap();
    assert!((f - reference).abs() <= 3.0 * se, "F({:?}) vs resolvent {reference}", estimates);
}

#[test]
fn counting_rate_matches_mean_current() {
    let p = default_params::<f64>().with_alpha(2.0).with_temperature(10.0);
    let r = fano_resolvent(&p).unwrap().current;
    let cfg = TrajectoryConfig { n_trajectories: 8, t_window: relaxation_time(&p), n_windows: 200, seed: 11, ..Default::default() };
    let rec = run_trajectories(&p, &cfg).unwrap();
    let se = rec.mean_std_error / rec.t_window;
    assert!((rec.rate() - r).abs() <= 4.0 * se, "rate {} ± {se} vs {r}", rec.rate());
}

#[test]
fn unconditional_detector_counts_are_poissonian() {
    let mut p = default_params::<f64>().with_temperature(15.0);
    p.tunneling_conditional = 0.0;
    let cfg = TrajectoryConfig { n_trajectories: 4, t_window: 2.0, n_windows: 2500, seed: 5, ..Default::default() };
    let rec = run_trajectories(&p, &cfg).unwrap();
    assert_eq!(rec.burn_in, 0.0);
    assert!((rec.fano_estimate - 1.0).abs() <= 3.0 * rec.std_error, "F = {} ± {}", rec.fano_estimate, rec.std_error);
    let r = fano_resolvent(&p).unwrap().current;
    assert!((rec.rate() - r).abs() <= 4.0 * rec.mean_std_error / rec.t_window);
}

#[test]
fn ensemble_average_reproduces_master_equation() {
    let mut p = default_params::<f64>().with_temperature(15.0);
    p.tunneling = 0.01;
    let (_, l) = generator_for(&p).unwrap();
    let t = 5.0 * relaxation_time(&p);
    let mut m = DensityMatrix::from_populations([0.2, 0.3, 0.5]).unwrap().into_matrix();
    m[(1, 2)] = C::new(0.1, -0.2);
    m[(2, 1)] = C::new(0.1, 0.2);
    let rho0 = DensityMatrix::new(m).unwrap();
    let exact = evolve(&l, &rho0, t).unwrap();
    let cfg = TrajectoryConfig { n_trajectories: 10_000, seed: 3, ..Default::default() };
    let ens = ensemble_average_state(&p, &cfg, &rho0, t).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let (got, want) = (ens.rho.matrix()[(i, j)], exact.matrix()[(i, j)]);
            let se = ens.std_error[i][j].max(1e-12);
            assert!((got - want).norm() <= 5.0 * se, "({i},{j}): {got} vs {want} ± {se}");
        }
    }
}
