mod common;

use common::{mode_oracle, uniform_times, SmoothSignal};
use num_complex::Complex64;
use proptest::prelude::*;
use tslab::linear::*;
use tslab::rng::{random_trig_polynomial, rng_for};
use tslab::{SpectralField, TorusGrid};

const Z: Complex64 = Complex64::new(0.0, 0.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn resonant_double_root() {
    let (lp, lm, br) = characteristic_roots(&[1, 1, 0], 1.0).unwrap();
    assert_eq!(br, Branch::Resonant);
    assert_eq!(lp, c(-1.0));
    assert_eq!(lm, c(-1.0));
}

#[test]
fn complex_roots_on_unit_circle() {
    let (lp, lm, br) = characteristic_roots(&[1, 0, 0], 1.0).unwrap();
    assert_eq!(br, Branch::Generic);
    let s = 3f64.sqrt() / 2.0;
    assert!((lp - Complex64::new(-0.5, s)).norm() < 1e-15);
    assert!((lm - Complex64::new(-0.5, -s)).norm() < 1e-15);
    for l in [lp, lm] {
        assert!((l.norm() - 1.0).abs() < 1e-15);
        assert!((l * l + l + 1.0).norm() < 1e-14);
    }
}

#[test]
fn real_roots_and_vieta() {
    let (lp, lm, _) = characteristic_roots(&[3, 0, 0], 1.0).unwrap();
    let want_m = (-9.0 - 77f64.sqrt()) / 2.0;
    let want_p = (-9.0 + 77f64.sqrt()) / 2.0;
    assert!((lp.re - want_p).abs() < 1e-12 && (lm.re - want_m).abs() < 1e-12);
    assert!((lp.re + 0.112518).abs() < 1e-6 && (lm.re + 8.887482).abs() < 1e-6);
    assert!((lp * lm - 1.0).norm() < 1e-12);
    assert!((lp + lm + 9.0).norm() < 1e-12);
}

#[test]
fn zero_mode_is_rejected() {
    assert!(matches!(characteristic_roots(&[0, 0, 0], 1.0), Err(tslab::Error::ZeroMode)));
}

#[test]
fn spectrum_examples() {
    let t8 = spectrum_report(1.0, 8, 3).unwrap();
    assert_eq!(t8.argmin_k2, 192.0);
    assert!((t8.min_re_lambda_plus * 192.0 - 1.0).abs() < 0.1);
    let t16 = spectrum_report(1.0, 16, 3).unwrap();
    assert!(t16.min_re_lambda_plus <= 0.5 * t8.min_re_lambda_plus);
    assert!(t8.min_separation > 0.0);
    assert!((t8.min_separation - t16.min_separation).abs() < 1e-12);
    // the smallest generic separation is at |k|² = 3: √5/3
    assert!((t8.min_separation - 5f64.sqrt() / 3.0).abs() < 1e-12);
    assert!(t8.asymptotic_deviation.unwrap() < 0.05);
    assert!(t8.max_vieta_residual < 1e-12);
    assert!(spectrum_report(1.0, 0, 3).is_err());
    let mut csv = Vec::new();
    t8.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "k1,k2,k3,k_sq,re_lambda_plus,im_lambda_plus,re_lambda_minus,im_lambda_minus,branch");
    assert_eq!(text.lines().count(), 17usize.pow(3));
}

#[test]
fn separation_at_unit_mode() {
    let (lp, lm, _) = characteristic_roots(&[1, 0, 0], 1.0).unwrap();
    assert!(((lp - lm).norm() - 3f64.sqrt()).abs() < 1e-14);
}

#[test]
fn homogeneous_examples() {
    let times = uniform_times(20.0, 2000);
    let ms = ModeSolution::new(&[1, 1, 0], 1.0).unwrap();
    assert!(solve_homogeneous_mode(&ms, Z, Z, &times).iter().all(|d| *d == Z));
    let d = solve_homogeneous_mode(&ms, c(1.0), Z, &times);
    for (t, v) in times.iter().zip(&d) {
        assert!((v.re - t * (-t).exp()).abs() < 1e-15);
    }
    let (imax, vmax) = d.iter().enumerate().map(|(i, v)| (i, v.re)).fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    assert_eq!(times[imax], 1.0);
    assert!((vmax - (-1.0f64).exp()).abs() < 1e-15);
}

#[test]
fn homogeneous_matches_rk4() {
    let times = uniform_times(20.0, 400);
    let ms = ModeSolution::new(&[3, 0, 0], 1.0).unwrap();
    let d = solve_homogeneous_mode(&ms, c(1.0), Z, &times);
    let oracle = mode_oracle(9.0, Z, c(1.0), |_| Z, &times, 1e-13);
    let err = d.iter().zip(&oracle).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-9, "err = {err}");
}

#[test]
fn coefficients_solve_the_initial_system() {
    for k in [[1, 0, 0], [3, 0, 0], [1, 1, 0]] {
        let a0 = Complex64::new(0.3, -0.7);
        let ms = ModeSolution::new(&k, 1.0).unwrap().with_data(a0, Z);
        match ms.branch {
            Branch::Generic => {
                assert!((ms.a_k + ms.b_k).norm() < 1e-15);
                assert!((ms.lambda_plus * ms.a_k + ms.lambda_minus * ms.b_k - a0).norm() < 1e-14);
                assert!((ms.a_k - a0 / (ms.lambda_plus - ms.lambda_minus)).norm() < 1e-15);
            }
            Branch::Resonant => {
                assert_eq!(ms.a_k, Z);
                assert_eq!(ms.b_k, a0);
            }
        }
    }
}

#[test]
fn near_resonance_is_continuous() {
    // ν chosen so ν²|k|⁴ − 4 is just outside the resonance band
    let nu = (4.0f64 + 1e-7).sqrt() / 2.0;
    let times = uniform_times(5.0, 50);
    let near = solve_homogeneous_mode(&ModeSolution::new(&[1, 1, 0], nu).unwrap(), c(1.0), Z, &times);
    for (t, v) in times.iter().zip(&near) {
        assert!((v.re - t * (-t).exp()).abs() < 1e-6 && v.im.abs() < 1e-12);
    }
}

#[test]
fn zero_forcing_reduces_to_homogeneous() {
    let times = uniform_times(10.0, 1000);
    for k in [[1, 0, 0], [1, 1, 0], [2, 2, 1]] {
        let ms = ModeSolution::new(&k, 1.0).unwrap().with_data(Complex64::new(0.4, 0.1), Z);
        let forced = solve_forced_mode(&ms, &vec![Z; times.len()], &times).unwrap();
        let homo = solve_homogeneous_mode(&ms, ms.dt0, Z, &times);
        let err = forced.d.iter().zip(&homo).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-13, "{k:?}: {err}");
    }
}

#[test]
fn constant_forcing_steady_state() {
    let times = uniform_times(60.0, 6000);
    let cst = Complex64::new(0.25, -0.5);
    for k in [[1, 0, 0], [1, 1, 0], [2, 0, 0]] {
        let ms = ModeSolution::new(&k, 1.0).unwrap();
        let tr = solve_forced_mode(&ms, &vec![cst; times.len()], &times).unwrap();
        assert!((tr.d.last().unwrap() + cst).norm() < 1e-6, "{k:?}");
    }
}

#[test]
fn forced_mode_converges_to_rk4_under_refinement() {
    let sig = SmoothSignal::random(11, 0, 4, 1.0);
    let outputs = uniform_times(20.0, 200);
    let ms = ModeSolution::new(&[2, 0, 0], 1.0).unwrap().with_data(Complex64::new(0.2, 0.3), Z);
    let oracle = mode_oracle(4.0, Z, ms.dt0, |t| -sig.at(t), &outputs, 1e-13);
    let mut errs = Vec::new();
    for steps in [5000usize, 20000, 80000] {
        let times = uniform_times(20.0, steps);
        let h: Vec<Complex64> = times.iter().map(|&t| sig.at(t)).collect();
        let tr = solve_forced_mode(&ms, &h, &times).unwrap();
        let stride = steps / 200;
        let err = (0..=200).map(|i| (tr.d[i * stride] - oracle[i]).norm()).fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[2] < 1e-8, "{errs:?}");
    assert!(errs[0] / errs[1] > 10.0, "{errs:?}");
}

#[test]
fn time_grid_errors() {
    let ms = ModeSolution::new(&[1, 0, 0], 1.0).unwrap();
    assert!(solve_forced_mode(&ms, &[Z; 3], &[0.0, 1.0]).is_err());
    assert!(solve_forced_mode(&ms, &[Z; 3], &[0.0, 1.0, 3.0]).is_err());
}

fn g3() -> TorusGrid {
    TorusGrid::new(3, 16).unwrap()
}

#[test]
fn heat_lift_single_mode() {
    let times = uniform_times(2.0, 40);
    let u0 = SpectralField::from_fn(g3(), 3, |x| vec![x[0].cos(), 0.0, 0.0]);
    let lift = heat_lift(&u0, None, 1.0, &times).unwrap();
    for (t, u) in times.iter().zip(&lift) {
        assert!(u.max_coeff_diff(&u0.scale((-t).exp())).unwrap() < 1e-15);
    }
    let zero = heat_lift(&SpectralField::zeros(g3(), 3), None, 1.0, &times).unwrap();
    assert!(zero.iter().all(|u| u.energy_sum() == 0.0));
}

#[test]
fn heat_lift_residual() {
    let grid = g3();
    let times = uniform_times(1.0, 400);
    let u0 = random_trig_polynomial(grid, 3, 2, 1.0, false, &mut rng_for(5, 0)).scale(1e-3);
    let sig = SmoothSignal::random(5, 1, 3, 2.0);
    let shape = random_trig_polynomial(grid, 3, 2, 1.0, false, &mut rng_for(5, 2)).scale(1e-3);
    let g: Vec<SpectralField> = times.iter().map(|&t| shape.scale(sig.at(t).re)).collect();
    let lift = heat_lift(&u0, Some(&g), 1.0, &times).unwrap();
    let dt = times[1];
    for n in (0..times.len()).step_by(20) {
        let ut = tslab::linear::system::time_derivative(&lift, dt, n).unwrap();
        let r = ut.sub(&lift[n].laplacian()).unwrap().sub(&g[n]).unwrap();
        assert!(r.lp_norm(2.0).unwrap() < 1e-7, "n = {n}: {}", r.lp_norm(2.0).unwrap());
    }
}

#[test]
fn trivial_system_stays_zero() {
    let grid = g3();
    let times = uniform_times(1.0, 10);
    let sol = solve_linear_system(&SpectralField::zeros(grid, 1), &SpectralField::zeros(grid, 3), None, None, 1.0, &times).unwrap();
    assert!(sol.a.iter().chain(&sol.u).all(|f| f.energy_sum() == 0.0));
    assert!(sol.modes.is_empty());
}

#[test]
fn single_mode_system() {
    let grid = g3();
    let times = uniform_times(4.0, 400);
    let a0 = SpectralField::scalar_from_fn(grid, |x| x[0].cos());
    let sol = solve_linear_system(&a0, &SpectralField::zeros(grid, 3), None, None, 1.0, &times).unwrap();
    let ms = ModeSolution::new(&[1, 0, 0], 1.0).unwrap();
    let want = solve_homogeneous_mode(&ms, c(0.5), Z, &times);
    for (n, d) in sol.d.iter().enumerate() {
        assert!((d.coeff(&[1, 0, 0], 0) - want[n]).norm() < 1e-14);
        assert_eq!(d.coeff(&[0, 0, 0], 0), Z);
    }
    let res = sol.residuals(None, None).unwrap();
    let worst = res.iter().map(|r| r.0.max(r.1)).fold(0.0, f64::max);
    assert!(worst < 1e-7, "{worst}");
}

pub fn random_problem(seed: u64, amp: f64, steps: usize, t_end: f64) -> (SpectralField, SpectralField, Vec<SpectralField>, Vec<SpectralField>, Vec<f64>) {
    let grid = g3();
    let times = uniform_times(t_end, steps);
    let a0 = random_trig_polynomial(grid, 1, 2, 1.0, false, &mut rng_for(seed, 0)).scale(amp);
    let u0 = random_trig_polynomial(grid, 3, 2, 1.0, false, &mut rng_for(seed, 1)).scale(amp);
    let hs = random_trig_polynomial(grid, 1, 1, 1.0, false, &mut rng_for(seed, 2)).scale(amp);
    let gs = random_trig_polynomial(grid, 3, 1, 1.0, false, &mut rng_for(seed, 3)).scale(amp);
    let sh = SmoothSignal::random(seed, 4, 3, 1.0);
    let sg = SmoothSignal::random(seed, 5, 3, 1.0);
    let h = times.iter().map(|&t| hs.scale(sh.at(t).re)).collect();
    let g = times.iter().map(|&t| gs.scale(sg.at(t).re)).collect();
    (a0, u0, h, g, times)
}

#[test]
fn random_system_residuals() {
    let (a0, u0, h, g, times) = random_problem(21, 1e-3, 400, 1.0);
    let sol = solve_linear_system(&a0, &u0, Some(&h), Some(&g), 1.0, &times).unwrap();
    let res = sol.residuals(Some(&h), Some(&g)).unwrap();
    let worst = res.iter().map(|r| r.0.max(r.1)).fold(0.0, f64::max);
    assert!(worst < 1e-7, "{worst}");
}

#[test]
fn unforced_energy_decays_and_mean_is_kept() {
    let grid = g3();
    let times = uniform_times(10.0, 200);
    let a0 = random_trig_polynomial(grid, 1, 3, 1.0, false, &mut rng_for(8, 0));
    let u0 = random_trig_polynomial(grid, 3, 3, 1.0, false, &mut rng_for(8, 1));
    let sol = solve_linear_system(&a0, &u0, None, None, 1.0, &times).unwrap();
    let e = sol.energy();
    for w in e.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-14));
    }
    for (a, u) in sol.a.iter().zip(&sol.u) {
        assert!((a.mean_scalar() - a0.mean_scalar()).abs() < 1e-15);
        for (m, m0) in u.mean().iter().zip(u0.mean()) {
            assert!((m - m0).abs() < 1e-15);
        }
    }
}

#[test]
fn mean_velocity_follows_forcing_mean() {
    let grid = g3();
    let times = uniform_times(2.0, 200);
    let g: Vec<SpectralField> = times.iter().map(|&t| SpectralField::from_fn(grid, 3, move |_| vec![t, 0.0, 0.0])).collect();
    let sol = solve_linear_system(&SpectralField::zeros(grid, 1), &SpectralField::zeros(grid, 3), None, Some(&g), 1.0, &times).unwrap();
    for (t, u) in times.iter().zip(&sol.u) {
        assert!((u.mean()[0] - t * t / 2.0).abs() < 1e-13);
    }
}

#[test]
fn solution_csv_header() {
    let grid = TorusGrid::new(3, 8).unwrap();
    let times = uniform_times(1.0, 4);
    let a0 = SpectralField::scalar_from_fn(grid, |x| x[0].cos());
    let sol = solve_linear_system(&a0, &SpectralField::zeros(grid, 3), None, None, 1.0, &times).unwrap();
    let mut buf = Vec::new();
    sol.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,a_l2,u_l2,d_l2,energy\n"));
    assert_eq!(text.lines().count(), 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roots_are_stable_and_satisfy_vieta(k1 in -12i64..12, k2 in -12i64..12, k3 in -12i64..12, nu in 0.05f64..4.0) {
        prop_assume!(k1 != 0 || k2 != 0 || k3 != 0);
        let (lp, lm, br) = characteristic_roots(&[k1, k2, k3], nu).unwrap();
        prop_assert!(lp.re < 0.0 && lm.re < 0.0);
        let b = nu * (k1 * k1 + k2 * k2 + k3 * k3) as f64;
        if br == Branch::Generic {
            prop_assert!((lp * lm - 1.0).norm() < 1e-12);
            prop_assert!((lp + lm + b).norm() < 1e-12 * b.max(1.0));
            for l in [lp, lm] {
                prop_assert!((l * l + b * l + 1.0).norm() < 1e-12 * (1.0 + b * l.norm()));
            }
        }
    }
}

#[test]
fn representable_shells() {
    let r: Vec<i64> = tslab::linear::representable_k2(16).iter().map(|x| x.0).collect();
    assert_eq!(r, vec![1, 2, 3, 4, 5, 6, 8, 9, 10, 11, 12, 13, 14, 16]);
}

#[test]
fn linear_verify_small() {
    use tslab::linear::{linear_verify, LinearVerifyConfig};
    let cfg = LinearVerifyConfig { k2_max: 9, t_end: 5.0, steps: 20_000, n: 8, ..LinearVerifyConfig::default() };
    let rep = linear_verify(&cfg, 1).unwrap();
    assert_eq!(rep.modes.len(), 8);
    assert!(rep.modes.iter().any(|m| m.branch == Branch::Resonant));
    assert!(rep.passed, "{} {}", rep.max_mode_error, rep.max_residual);
}
