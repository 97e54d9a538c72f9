use proptest::prelude::*;
use rydberg_pilot::analysis::{
    compare_with_candidates, correction_scaling, deviation_at, fit_conic, fit_conic_points, log_log_slope, ProbeSpec,
    ScalingTemplate,
};
use rydberg_pilot::dynamics::{integrate_trajectory, BohmState, Trajectory, VelocityMode};
use rydberg_pilot::wavepacket::PacketParams;
use rydberg_pilot::{Error, OrbitParams, RadialProfile};
use std::f64::consts::PI;

fn setup(n0: f64, l0: f64, delta: f64) -> (PacketParams, RadialProfile) {
    let orbit = OrbitParams::new(n0, l0).unwrap();
    (PacketParams::new(orbit, delta, l0.powi(3), 3).unwrap(), RadialProfile::new(orbit).unwrap())
}

fn bohm(n0: f64, l0: f64, delta: f64, periods: f64) -> Trajectory {
    let (params, profile) = setup(n0, l0, delta);
    let start = BohmState::default_start(&profile).unwrap();
    let period = params.orbit().kepler_period();
    integrate_trajectory(start, periods * period, 1e-9, VelocityMode::TwoBranch, &params, &profile, period / 400.0)
        .unwrap()
}

fn ellipse(p: f64, e: f64, phi_p: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let phi: Vec<f64> = (0..n).map(|i| -1.0 + 7.0 * i as f64 / n as f64).collect();
    let r = phi.iter().map(|f| p / (1.0 + e * (f - phi_p).cos())).collect();
    (r, phi)
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

proptest! {
    #[test]
    fn exact_ellipse_is_recovered(p in 10.0f64..1e4, e in 0.01f64..0.9, phi_p in -3.0f64..3.0) {
        let (r, phi) = ellipse(p, e, phi_p, 300);
        let fit = fit_conic_points(&r, &phi).unwrap();
        prop_assert!(((fit.p_fit - p) / p).abs() < 1e-10, "p {} vs {p}", fit.p_fit);
        prop_assert!((fit.e_fit - e).abs() < 1e-10, "e {} vs {e}", fit.e_fit);
        prop_assert!(angle_diff(fit.phi_p_fit, phi_p) < 1e-10);
        let (r2, phi2) = ellipse(fit.p_fit, fit.e_fit, fit.phi_p_fit, 300);
        let refit = fit_conic_points(&r2, &phi2).unwrap();
        prop_assert!((refit.e_fit - fit.e_fit).abs() < 1e-10);
        prop_assert!(((refit.p_fit - fit.p_fit) / fit.p_fit).abs() < 1e-10);
        prop_assert!(fit.rms_residual >= 0.0);
    }
}

#[test]
fn fit_is_rotation_invariant() {
    let traj = bohm(50.5, 50.0, 0.99, 1.0);
    let r: Vec<f64> = traj.samples.iter().map(|s| s.state.r).collect();
    let phi: Vec<f64> = traj.samples.iter().map(|s| s.state.phi).collect();
    let base = fit_conic_points(&r, &phi).unwrap();
    for shift in [0.3, -1.7, 2.9] {
        let rotated: Vec<f64> = phi.iter().map(|f| f + shift).collect();
        let fit = fit_conic_points(&r, &rotated).unwrap();
        assert!((fit.e_fit - base.e_fit).abs() < 1e-10);
        assert!(((fit.p_fit - base.p_fit) / base.p_fit).abs() < 1e-10);
        assert!((fit.rms_residual - base.rms_residual).abs() < 1e-10);
        assert!(angle_diff(fit.phi_p_fit, base.phi_p_fit + shift) < 1e-10);
    }
}

#[test]
fn circular_fit_and_short_arc() {
    let traj = bohm(50.0, 50.0, 1.0, 1.0);
    assert!(fit_conic(&traj).unwrap().e_fit < 1e-8);
    let short = bohm(50.5, 50.0, 0.99, 0.5);
    assert!(matches!(fit_conic(&short), Err(Error::InsufficientArc(_))));
}

#[test]
fn bohm_orbit_is_an_ellipse_near_the_l0_candidate() {
    let traj = bohm(50.5, 50.0, 0.99, 3.0);
    let fit = fit_conic(&traj).unwrap();
    assert!(fit.rms_residual / fit.p_fit < 1e-2);
    let cmp = compare_with_candidates(&fit, &traj.params).unwrap();
    println!("e_fit {} p_fit {} nearest {} {:?}", fit.e_fit, fit.p_fit, cmp.nearest, cmp.candidates);
    let nearest = cmp.candidates.iter().find(|c| c.label == cmp.nearest).unwrap();
    assert!(nearest.e_rel_diff < 1e-2);
    assert_eq!(cmp.nearest, "l0");
}

#[test]
fn scaling_report_orders_and_reproducibility() {
    let template = ScalingTemplate::default();
    let probes = ProbeSpec::default();
    let l0s = [10.0, 20.0, 50.0, 100.0];
    let a = correction_scaling(&l0s, &template, &probes).unwrap();
    let b = correction_scaling(&l0s, &template, &probes).unwrap();
    assert_eq!(a, b);
    assert!(a.delta_theta.iter().all(|&d| d == 0.0));
    for w in a.delta_r.windows(2).chain(a.delta_phi.windows(2)) {
        assert!(w[0] >= 0.0 && w[1] <= w[0], "{w:?}");
    }
    let (sr, sp) = (a.slope_r.unwrap(), a.slope_phi.unwrap());
    println!("slope_r {} +- {}, slope_phi {} +- {}", sr.slope, sr.stderr, sp.slope, sp.stderr);
    assert!(sr.slope <= -6.0 && sp.slope <= -4.0);
    assert!(sr.stderr.is_finite() && sp.stderr.is_finite());
}

#[test]
fn refining_difference_steps_leaves_deviations_stable() {
    for l0 in [10.0, 50.0] {
        let params = ScalingTemplate::default().params(l0).unwrap();
        let profile = RadialProfile::new(*params.orbit()).unwrap();
        let points = ProbeSpec::default().points(&profile).unwrap();
        let max_at = |scale: f64| {
            let devs: Vec<_> = points.iter().map(|p| deviation_at(p, &params, &profile, scale).unwrap()).collect();
            let m = |f: fn(&rydberg_pilot::analysis::Deviation) -> f64| devs.iter().map(f).fold(0.0, f64::max);
            (m(|d| d.dr), m(|d| d.dphi), m(|d| d.dr_numerical), m(|d| d.dphi_numerical))
        };
        let (coarse, fine) = (max_at(1.0), max_at(0.5));
        assert_eq!((coarse.0, coarse.1), (fine.0, fine.1));
        assert!((coarse.2 - fine.2).abs() < 1e-2 * coarse.2, "l0 {l0}: {coarse:?} vs {fine:?}");
        assert!((coarse.3 - fine.3).abs() < 1e-2 * coarse.3, "l0 {l0}: {coarse:?} vs {fine:?}");
    }
}

#[test]
fn scaling_argument_errors() {
    let template = ScalingTemplate::default();
    let probes = ProbeSpec::default();
    assert!(correction_scaling(&[10.0, 20.0, 50.0], &template, &probes).is_err());
    assert!(correction_scaling(&[10.0, 12.0, 14.0, 16.0], &template, &probes).is_err());
    let edge = ProbeSpec { radial_fractions: vec![0.0], ..ProbeSpec::default() };
    assert!(matches!(correction_scaling(&[10.0, 20.0, 50.0, 100.0], &template, &edge), Err(Error::OutOfDomain { .. })));
}

#[test]
fn log_log_slope_of_a_power_law() {
    let x = [1.0, 2.0, 4.0, 8.0];
    let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-5.0)).collect();
    let s = log_log_slope(&x, &y).unwrap();
    assert!((s.slope + 5.0).abs() < 1e-12 && s.stderr < 1e-12);
    assert!(log_log_slope(&x[..2], &y[..2]).is_none());
}
