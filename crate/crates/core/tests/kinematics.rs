use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rydberg_pilot::kinematics::{energy, radial_momentum, turning_points, OrbitParams, RadialProfile};
use std::f64::consts::PI;

const SETS: [(f64, f64); 4] = [(10.0, 9.0), (50.0, 49.0), (100.0, 99.0), (50.5, 50.0)];

fn profile(n0: f64, l0: f64) -> RadialProfile {
    RadialProfile::new(OrbitParams::new(n0, l0).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Kepler-anomaly closed forms for an orbit of energy `e_n` and angular momentum `l`,
/// evaluated in complex arithmetic so the energy derivative can be taken by complex step.
struct KeplerForms {
    e_n: Complex64,
    l: f64,
}

impl KeplerForms {
    fn eccentric_anomaly(&self, r: f64) -> Complex64 {
        let a = -0.5 / self.e_n;
        let e = (1.0 + 2.0 * self.e_n * self.l * self.l).sqrt();
        let x = (a - r) / (a * e);
        // library acos goes through a logarithm and drops the 1e-30 imaginary
        // part; the first-order expansion is exact for the complex step
        Complex64::new(x.re.acos(), -x.im / (1.0 - x.re * x.re).sqrt())
    }

    fn time(&self, r: f64) -> Complex64 {
        let n = (-2.0 * self.e_n).powf(-0.5);
        let e = (1.0 + 2.0 * self.e_n * self.l * self.l).sqrt();
        let u = self.eccentric_anomaly(r);
        n * n * n * (u - e * u.sin())
    }
}

fn t0_closed(n0: f64, l0: f64, r: f64) -> f64 {
    let forms = KeplerForms { e_n: Complex64::new(-0.5 / (n0 * n0), 0.0), l: l0 };
    forms.time(r).re
}

fn f0_complex_step(n0: f64, l0: f64, r: f64) -> f64 {
    let e_n = -0.5 / (n0 * n0);
    let h = 1e-30 * e_n.abs();
    let forms = KeplerForms { e_n: Complex64::new(e_n, h), l: l0 };
    forms.time(r).im / h
}

fn anomalies(n0: f64, l0: f64, r: f64) -> (f64, f64, f64) {
    let q = l0 / n0;
    let e = ((1.0 - q) * (1.0 + q)).sqrt();
    let a = n0 * n0;
    let u = ((a - r) / (a * e)).clamp(-1.0, 1.0).acos();
    let nu = 2.0 * (((1.0 + e) / (1.0 - e)).sqrt() * (0.5 * u).tan()).atan();
    (u, e, nu)
}

#[test]
fn half_cycle_action_and_apsidal_identities() {
    for (n0, l0) in SETS {
        let p = profile(n0, l0);
        let (_, rp) = p.turning_points();
        assert!(rel(p.radial_action(rp).unwrap(), PI * (n0 - l0)) < 1e-8, "S0 for {n0},{l0}");
        assert!((p.phi0(rp).unwrap() - PI).abs() < 1e-8, "phi0 for {n0},{l0}");
        assert!(rel(p.t0(rp).unwrap(), PI * n0.powi(3)) < 1e-8, "t0 for {n0},{l0}");
        let h = p.half_cycle().unwrap();
        assert!(rel(h.action, PI * (n0 - l0)) < 1e-10);
        assert!(rel(h.f0, 3.0 * PI * n0.powi(5)) < 1e-8, "{} vs {}", h.f0, 3.0 * PI * n0.powi(5));
    }
}

#[test]
fn tables_match_closed_forms_at_interior_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (n0, l0) in SETS {
        let p = profile(n0, l0);
        let (lo, hi) = p.clamped_domain();
        for _ in 0..100 {
            let r = rng.random_range(lo..hi);
            let (u, e, nu) = anomalies(n0, l0, r);
            let t_ref = n0.powi(3) * (u - e * u.sin());
            let s_ref = n0 * (u + e * u.sin()) - l0 * nu;
            assert!((p.t0(r).unwrap() - t_ref).abs() < 1e-9 * PI * n0.powi(3));
            assert!((p.phi0(r).unwrap() - nu).abs() < 1e-9 * PI);
            assert!((p.radial_action(r).unwrap() - s_ref).abs() < 1e-9 * PI * (n0 - l0).max(1.0));
        }
    }
}

#[test]
fn tables_match_direct_quadrature_off_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = profile(10.0, 9.0);
    let (lo, hi) = p.clamped_domain();
    let budget = p.err_budget();
    for _ in 0..100 {
        let r = rng.random_range(lo..hi);
        for (table, direct) in [
            (p.radial_action(r).unwrap(), p.radial_action_direct(r).unwrap()),
            (p.phi0(r).unwrap(), p.phi0_direct(r).unwrap()),
            (p.t0(r).unwrap(), p.t0_direct(r).unwrap()),
        ] {
            assert!((table - direct).abs() <= budget * direct.abs().max(1e-3), "{table} vs {direct}");
        }
    }
}

#[test]
fn f0_table_matches_complex_step_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (n0, l0) in SETS {
        let p = profile(n0, l0);
        let (lo, hi) = p.clamped_domain();
        for _ in 0..100 {
            let r = rng.random_range(lo..hi);
            let oracle = f0_complex_step(n0, l0, r);
            let table = p.f0(r).unwrap();
            let scale = oracle.abs().max(n0.powi(5));
            assert!((table - oracle).abs() < 1e-8 * scale, "r={r}: {table} vs {oracle}");
        }
    }
}

#[test]
fn f0_finite_difference_at_r100() {
    let p = profile(10.0, 9.0);
    let direct = p.f0_direct(100.0).unwrap();
    // three-point stencil on the closed-form t0 at an unrelated step
    let e0 = energy(10.0).unwrap();
    let h = 3.7e-6 * e0.abs();
    let t_at = |e: f64| t0_closed((-0.5 / e).sqrt(), 9.0, 100.0);
    let stencil = (t_at(e0 + h) - t_at(e0 - h)) / (2.0 * h);
    assert!(rel(direct, stencil) < 1e-4, "{direct} vs {stencil}");
    assert!(rel(p.f0(100.0).unwrap(), stencil) < 1e-4);
}

#[test]
fn f0_sign_and_monotonicity() {
    let p = profile(10.0, 9.0);
    let (lo, hi) = p.clamped_domain();
    assert!(p.f0(lo * 1.001).unwrap() > 0.0);
    assert!(p.f0(hi * 0.999).unwrap() < 0.0);
    // df0/dr = -1/p0^3
    let mut prev = f64::INFINITY;
    for i in 1..1000 {
        let r = lo + (hi - lo) * i as f64 / 1000.0;
        let f = p.f0(r).unwrap();
        assert!(f < prev);
        prev = f;
    }
}

#[test]
fn f0_is_continuous_at_interior_radii() {
    let p = profile(10.0, 9.0);
    for r in [70.0, 100.0, 130.0] {
        let f = p.f0(r).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..8 {
            let d = 10f64.powi(-k);
            let jump = (p.f0(r + d).unwrap() - f).abs();
            assert!(jump < last);
            last = jump;
        }
        assert!(last < 1e-6 * f.abs().max(1.0));
    }
}

#[test]
fn primitives_are_strictly_increasing() {
    for (n0, l0) in SETS {
        let p = profile(n0, l0);
        let (lo, hi) = p.clamped_domain();
        let mut prev = (-1.0, -1.0, -1.0);
        for i in 0..=1000 {
            let r = lo + (hi - lo) * i as f64 / 1000.0;
            let cur = (p.radial_action(r).unwrap(), p.phi0(r).unwrap(), p.t0(r).unwrap());
            if i > 0 {
                assert!(cur.0 > prev.0 && cur.1 > prev.1 && cur.2 > prev.2, "at r = {r}");
            }
            prev = cur;
        }
    }
}

#[test]
fn action_derivative_is_radial_momentum() {
    let p = profile(10.0, 9.0);
    for r in [60.0, 80.0, 100.0, 120.0, 140.0] {
        let h = 1e-3;
        let d = (p.radial_action(r + h).unwrap() - p.radial_action(r - h).unwrap()) / (2.0 * h);
        let p0 = p.radial_momentum(r).unwrap();
        assert!(rel(d, p0) < 1e-7, "{d} vs {p0}");
    }
}

#[test]
fn momentum_vanishes_at_turning_points() {
    let params = OrbitParams::new(10.0, 9.0).unwrap();
    let (rm, rp) = turning_points(&params);
    assert!(radial_momentum(rm, &params).unwrap() < 1e-12);
    assert!(radial_momentum(rp, &params).unwrap() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn radial_action_identity_holds(n0 in 5.0f64..120.0, ratio in 0.3f64..0.995) {
        let p = profile(n0, ratio * n0);
        let (_, rp) = p.turning_points();
        prop_assert!(rel(p.radial_action(rp).unwrap(), PI * (n0 - ratio * n0)) < 1e-8);
        prop_assert!((p.phi0(rp).unwrap() - PI).abs() < 1e-8);
        prop_assert!(rel(p.t0(rp).unwrap(), PI * n0.powi(3)) < 1e-8);
    }

    #[test]
    fn turning_points_bracket_and_zero_momentum(n0 in 1.0f64..200.0, ratio in 0.05f64..1.0) {
        let params = OrbitParams::new(n0, ratio * n0).unwrap();
        let (rm, rp) = turning_points(&params);
        prop_assert!(rm <= rp);
        prop_assert!(rm > 0.0);
        prop_assert_eq!(radial_momentum(rm, &params).unwrap(), 0.0);
        prop_assert_eq!(radial_momentum(rp, &params).unwrap(), 0.0);
        let mid = 0.5 * (rm + rp);
        let raw = 2.0 * params.energy() - (ratio * n0).powi(2) / (mid * mid) + 2.0 / mid;
        prop_assert!((radial_momentum(mid, &params).unwrap() - raw.sqrt()).abs() < 1e-12 * raw.sqrt().max(1e-3));
    }
}
