//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Plain `main`, so the lines are printed without `--nocapture`.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rydberg_pilot::analysis::{
    compare_with_candidates, correction_scaling, deviation_at, fit_conic, hj_residual_scan, packet_center, HjOptions,
    ProbeSpec, ScalingTemplate,
};
use rydberg_pilot::dynamics::{integrate_trajectory, BohmState, Termination, VelocityMode};
use rydberg_pilot::wavepacket::{envelope_ratio, phase, wavefunction, FieldPoint, PacketParams};
use rydberg_pilot::{OrbitParams, RadialProfile, Result};
use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::Instant;

const SETS: [(f64, f64); 4] = [(10.0, 9.0), (50.0, 49.0), (100.0, 99.0), (50.5, 50.0)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn radial_action() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (n0, l0) in SETS {
        let p = RadialProfile::new(OrbitParams::new(n0, l0)?)?;
        worst = worst.max(rel(p.radial_action(p.turning_points().1)?, PI * (n0 - l0)));
    }
    Ok(Outcome { pass: worst < 1e-8, detail: format!("max rel error {worst:.3e} (tol 1e-8)") })
}

fn apsidal() -> Result<Outcome> {
    let (mut dphi, mut dt): (f64, f64) = (0.0, 0.0);
    for (n0, l0) in SETS {
        let p = RadialProfile::new(OrbitParams::new(n0, l0)?)?;
        let rp = p.turning_points().1;
        dphi = dphi.max((p.phi0(rp)? - PI).abs());
        dt = dt.max(rel(p.t0(rp)?, PI * n0.powi(3)));
    }
    Ok(Outcome {
        pass: dphi < 1e-8 && dt < 1e-8,
        detail: format!("phi0(r+) - pi {dphi:.3e}, t0(r+) rel {dt:.3e} (tol 1e-8)"),
    })
}

fn leading_orders() -> Result<Outcome> {
    let params = ScalingTemplate::default().params(50.0)?;
    let profile = RadialProfile::new(*params.orbit())?;
    let (mut dr, mut dth, mut dph): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for p in ProbeSpec::default().points(&profile)? {
        let d = deviation_at(&p, &params, &profile, 1.0)?;
        dr = dr.max(d.dr);
        dth = dth.max(d.dtheta);
        dph = dph.max(d.dphi);
    }
    Ok(Outcome {
        pass: dth < 1e-10 && dph < 1e-4 && dr < 1e-5,
        detail: format!("max |dS/dtheta| {dth:.3e}, |dS/dphi - delta l0| {dph:.3e}, |dS/dr - p0| {dr:.3e}"),
    })
}

fn scaling() -> Result<Outcome> {
    let report = correction_scaling(&[10.0, 20.0, 50.0, 100.0], &ScalingTemplate::default(), &ProbeSpec::default())?;
    let (sr, sp) = match (report.slope_r, report.slope_phi) {
        (Some(r), Some(p)) => (r, p),
        _ => return Ok(Outcome { pass: false, detail: "slopes not available".into() }),
    };
    Ok(Outcome {
        pass: sp.slope <= -4.0 && sr.slope <= -6.0,
        detail: format!(
            "slope_phi {:.4} +- {:.1e} (<= -4), slope_r {:.4} +- {:.1e} (<= -6)",
            sp.slope, sp.stderr, sr.slope, sr.stderr
        ),
    })
}

fn trajectory(n0: f64, l0: f64, delta: f64, periods: f64) -> Result<rydberg_pilot::dynamics::Trajectory> {
    let orbit = OrbitParams::new(n0, l0)?;
    let params = PacketParams::new(orbit, delta, l0.powi(3), 3)?;
    let profile = RadialProfile::new(orbit)?;
    let start = BohmState::default_start(&profile)?;
    let period = orbit.kepler_period();
    integrate_trajectory(start, periods * period, 1e-9, VelocityMode::TwoBranch, &params, &profile, period / 400.0)
}

fn ellipse() -> Result<Outcome> {
    let traj = trajectory(50.5, 50.0, 0.99, 3.0)?;
    let fit = fit_conic(&traj)?;
    let cmp = compare_with_candidates(&fit, &traj.params)?;
    let nearest = cmp.candidates.iter().find(|c| c.label == cmp.nearest).expect("nearest is a candidate");
    let planarity = traj.samples.iter().map(|s| (s.state.theta - FRAC_PI_2).abs()).fold(0.0, f64::max);
    let ratio = fit.rms_residual / fit.p_fit;
    Ok(Outcome {
        pass: traj.termination == Termination::Completed && ratio < 1e-2 && nearest.e_rel_diff < 1e-2 && planarity < 1e-9,
        detail: format!(
            "rms/p {ratio:.3e}, e_fit {:.6} vs {} candidate {:.6} (rel {:.3e}), planarity {planarity:.1e}",
            fit.e_fit, cmp.nearest, nearest.orbit.e, nearest.e_rel_diff
        ),
    })
}

fn circular() -> Result<Outcome> {
    let traj = trajectory(50.0, 50.0, 1.0, 1.0)?;
    let spread = traj.samples.iter().map(|s| rel(s.state.r, 2500.0)).fold(0.0, f64::max);
    let e_fit = fit_conic(&traj)?.e_fit;
    Ok(Outcome {
        pass: spread < 1e-6 && e_fit < 1e-8,
        detail: format!("max |r - n0^2|/n0^2 {spread:.3e}, e_fit {e_fit:.3e}"),
    })
}

fn phase_polar() -> Result<Outcome> {
    let orbit = OrbitParams::new(50.5, 50.0)?;
    let params = PacketParams::new(orbit, 0.95, 50f64.powi(3), 3)?;
    let profile = RadialProfile::new(orbit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (lo, hi) = profile.clamped_domain();
    let (mut worst, mut checked, mut drawn) = (0.0f64, 0, 0);
    while drawn < 100 {
        let r = rng.random_range(lo..hi);
        let p = FieldPoint::new(
            r,
            FRAC_PI_2 + rng.random_range(-0.3..0.3),
            profile.phi0(r)? + rng.random_range(-PI..PI),
            rng.random_range(0.0..orbit.kepler_period()),
        );
        match envelope_ratio(&p, &params, &profile) {
            Ok(ratio) if ratio > 1e-6 => {}
            _ => continue,
        }
        drawn += 1;
        let d = (phase(&p, &params, &profile)? - wavefunction(&p, &params, &profile)?.psi.arg()).rem_euclid(2.0 * PI);
        worst = worst.max(d.min(2.0 * PI - d));
        checked += 1;
    }
    Ok(Outcome { pass: worst < 1e-6, detail: format!("{checked} points, worst mismatch {worst:.3e} rad") })
}

fn hj_trend() -> Result<Outcome> {
    let template = ScalingTemplate::default();
    let mut values = Vec::new();
    for l0 in [20.0, 50.0, 100.0] {
        let params = template.params(l0)?;
        let profile = RadialProfile::new(*params.orbit())?;
        let center = packet_center(&profile)?;
        values.push(hj_residual_scan(&[center], &params, &profile, HjOptions::default()).remove(0).result?.normalized);
    }
    let pass = values.windows(2).all(|w| w[1].abs() < w[0].abs());
    Ok(Outcome { pass, detail: format!("normalized residual at l0 = 20, 50, 100: {values:.5?}") })
}

fn determinism() -> Result<Outcome> {
    let dir = tempfile::tempdir().map_err(|e| rydberg_pilot::Error::Io(e.to_string()))?;
    let config = r#"{ "n0": 20.2, "l0": 20, "delta": 0.97 }"#;
    let mut bad = Vec::new();
    for sub in common::SUBCOMMANDS {
        if !common::determinism(dir.path(), sub, config).1 {
            bad.push(sub);
        }
    }
    Ok(Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            "4 subcommands x (2 runs, 1 and 5 threads) byte-identical".into()
        } else {
            format!("differing outputs: {bad:?}")
        },
    })
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 9] = [
        ("radial action identity", radial_action),
        ("apsidal identities", apsidal),
        ("guidance leading orders", leading_orders),
        ("scaling exponents", scaling),
        ("ellipse correspondence", ellipse),
        ("circular degeneracy", circular),
        ("phase/polar consistency", phase_polar),
        ("HJ residual trend", hj_trend),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f().unwrap_or_else(|e| Outcome { pass: false, detail: format!("error: {e}") });
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {}: {verdict} {name}: {} [{:.2} s]",
            i + 1,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!outcome.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
