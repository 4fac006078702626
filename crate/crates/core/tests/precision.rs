use dqd_core::{default_params, fano_resolvent, generator_for, steady_state_analytic, steady_state_numeric, ModelParamsF32};

#[test]
fn single_precision_smoke() {
    let p: ModelParamsF32 = default_params::<f32>().with_alpha(3.0).with_temperature(15.0);
    let (_, l) = generator_for(&p).unwrap();
    let numeric = steady_state_numeric(&l).unwrap();
    let analytic = steady_state_analytic(&p).unwrap();
    assert!(analytic.matrix().max_abs_diff(numeric.matrix()) < 1e-4);
    let f32_fano = fano_resolvent(&p).unwrap().fano;
    let f64_fano = fano_resolvent(&default_params::<f64>().with_alpha(3.0).with_temperature(15.0)).unwrap().fano;
    assert!(f32_fano.is_finite());
    assert!((f32_fano as f64 - f64_fano).abs() < 1e-2, "{f32_fano} vs {f64_fano}");
}
