use tslab::linear::time_derivative;
use tslab::rng::{random_trig_polynomial, rng_for};
use tslab::sim::*;
use tslab::{SpectralField, TorusGrid};

fn small() -> PicardConfig {
    PicardConfig { n: 8, horizon: 3.0, ..PicardConfig::default() }
}

/// A smooth, band-limited trajectory (a, u)(t) on the time grid.
fn trajectory(g: TorusGrid, amp: f64, times: &[f64]) -> (Vec<SpectralField>, Vec<SpectralField>) {
    let a1 = random_trig_polynomial(g, 1, 1, 0.0, true, &mut rng_for(4, 0));
    let a2 = random_trig_polynomial(g, 1, 1, 0.0, true, &mut rng_for(4, 1));
    let u1 = random_trig_polynomial(g, 3, 1, 0.0, true, &mut rng_for(4, 2));
    let u2 = random_trig_polynomial(g, 3, 1, 0.0, true, &mut rng_for(4, 3));
    let mix = |x: &SpectralField, y: &SpectralField, t: f64| {
        let mut f = x.scale(amp * t.cos());
        f.axpy(amp * (2.0 * t).sin(), y).unwrap();
        f
    };
    (times.iter().map(|&t| mix(&a1, &a2, t)).collect(), times.iter().map(|&t| mix(&u1, &u2, t)).collect())
}

#[test]
fn zero_data_is_a_fixed_point() {
    let cfg = small();
    let g = TorusGrid::new(3, 8).unwrap();
    let run = picard_iterate(&SpectralField::zeros(g, 1), &SpectralField::zeros(g, 3), &cfg).unwrap();
    assert!(run.converged && !run.diverged);
    assert_eq!(run.scale, 0.0);
    assert!(run.state.a.iter().chain(&run.state.u).all(|f| f.energy_sum() == 0.0));
}

#[test]
fn forcings_vanish_on_zero_and_scale_quadratically() {
    let cfg = small();
    let times = cfg.times();
    let g = TorusGrid::new(3, 8).unwrap();
    let zero_a = vec![SpectralField::zeros(g, 1); times.len()];
    let zero_u = vec![SpectralField::zeros(g, 3); times.len()];
    let f = lagrangian_forcings(&zero_a, &zero_u, cfg.dt).unwrap();
    assert!(f.h.iter().chain(&f.g).all(|x| x.energy_sum() == 0.0));

    let size = |f: &Forcings| f.h.iter().chain(&f.g).map(|x| x.lp_norm(2.0).unwrap()).fold(0.0, f64::max);
    let (a, u) = trajectory(g, 1e-3, &times);
    let (a2, u2) = trajectory(g, 2e-3, &times);
    let ratio = size(&lagrangian_forcings(&a2, &u2, cfg.dt).unwrap()) / size(&lagrangian_forcings(&a, &u, cfg.dt).unwrap());
    assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
}

#[test]
fn forcings_turn_linear_residual_into_lagrangian_residual() {
    // a_t + div u − h and u_t − Δu + ∇Ka − g equal the residuals of the
    // Lagrangian equations for every trajectory
    let cfg = small();
    let times = cfg.times();
    let g = TorusGrid::new(3, 8).unwrap();
    let (a, u) = trajectory(g, 0.005, &times);
    let f = lagrangian_forcings(&a, &u, cfg.dt).unwrap();
    let lagr = lagrangian_residual(&a, &u, cfg.dt).unwrap();
    for n in (0..times.len()).step_by(7) {
        let ra = time_derivative(&a, cfg.dt, n).unwrap().add(&u[n].divergence().unwrap()).unwrap().sub(&f.h[n]).unwrap();
        let mut ru = time_derivative(&u, cfg.dt, n).unwrap().sub(&u[n].laplacian()).unwrap();
        ru = ru.add(&a[n].poisson_inverse().gradient().unwrap()).unwrap().sub(&f.g[n]).unwrap();
        let (na, nu) = (ra.lp_norm(2.0).unwrap(), ru.lp_norm(2.0).unwrap());
        assert!(na > 1e-4 && nu > 1e-4);
        assert!((na - lagr[n].0).abs() < 1e-9 * na, "{na} vs {}", lagr[n].0);
        assert!((nu - lagr[n].1).abs() < 1e-9 * nu, "{nu} vs {}", lagr[n].1);
    }
}

#[test]
fn small_data_contracts_to_a_lagrangian_solution() {
    let cfg = small();
    let (a0, u0) = picard_data(&cfg).unwrap();
    let run = picard_iterate(&a0, &u0, &cfg).unwrap();
    assert!(run.converged && !run.diverged, "{:?}", run.steps);
    assert!(run.steps.len() <= 5);
    assert!(run.max_contraction(5).unwrap() < 0.5);
    let res = lagrangian_residual(&run.state.a, &run.state.u, cfg.dt).unwrap();
    let worst = res.iter().map(|r| r.0.max(r.1)).fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}

fn first_delta(eps: f64) -> f64 {
    let cfg = PicardConfig { epsilon: eps, max_iterates: 1, ..small() };
    let (a0, u0) = picard_data(&cfg).unwrap();
    picard_iterate(&a0, &u0, &cfg).unwrap().steps[0].delta
}

#[test]
fn first_correction_is_quadratic_in_data() {
    let ratio = (first_delta(2e-3) / 2e-3) / (first_delta(1e-3) / 1e-3);
    assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
}

#[test]
fn picard_config_validation() {
    assert!(PicardConfig::default().validate().is_ok());
    assert!(PicardConfig::from_toml_str("horizon = 5.0\nn = 8\n").is_ok());
    assert!(PicardConfig::from_toml_str("compare_every = 0.07").is_err());
    assert!(PicardConfig::from_toml_str("horizon = 0.1").is_err());
    assert!(PicardConfig::from_toml_str("max_iterates = 0").is_err());
}
