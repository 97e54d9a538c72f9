//! Classical Kepler reference orbits.

use crate::error::{Error, Result};
use crate::wavepacket::PacketParams;
use serde::Serialize;
use std::f64::consts::PI;

const KEPLER_TOL: f64 = 1e-13;
const KEPLER_MAX_ITER: usize = 100;

/// Bound Kepler conic `r(phi) = p / (1 + e cos(phi - phi_p))` with `GM = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeplerOrbit {
    pub energy: f64,
    pub l: f64,
    pub e: f64,
    pub p_latus: f64,
    pub phi_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeplerSample {
    pub t: f64,
    pub r: f64,
    /// Unwrapped azimuth.
    pub phi: f64,
    pub v_r: f64,
    pub v_phi: f64,
}

pub fn kepler_orbit(energy: f64, l: f64, phi_p: f64) -> Result<KeplerOrbit> {
    if !(energy < 0.0) {
        return Err(Error::Domain(format!("E = {energy} is not a bound energy")));
    }
    if !(l > 0.0) {
        return Err(Error::Domain(format!("L = {l} must be positive")));
    }
    let e2 = 1.0 + 2.0 * energy * l * l;
    if e2 < -1e-15 {
        return Err(Error::Domain(format!("1 + 2 E L^2 = {e2} < 0: no real orbit")));
    }
    Ok(KeplerOrbit { energy, l, e: e2.max(0.0).sqrt(), p_latus: l * l, phi_p })
}

impl KeplerOrbit {
    pub fn semi_major_axis(&self) -> f64 {
        -0.5 / self.energy
    }

    /// `2 pi (-2E)^(-3/2)`
    pub fn period(&self) -> f64 {
        2.0 * PI * (-2.0 * self.energy).powf(-1.5)
    }

    pub fn perihelion(&self) -> f64 {
        self.p_latus / (1.0 + self.e)
    }

    pub fn aphelion(&self) -> f64 {
        self.p_latus / (1.0 - self.e)
    }

    pub fn radius_at(&self, phi: f64) -> f64 {
        self.p_latus / (1.0 + self.e * (phi - self.phi_p).cos())
    }
}

/// The two candidate ellipses for a packet: angular momentum `l0` (the value
/// inside `p0`) and `delta l0` (the azimuthal guidance momentum).
pub fn reference_candidates(params: &PacketParams, phi_p: f64) -> Result<[(&'static str, KeplerOrbit); 2]> {
    let orbit = params.orbit();
    Ok([
        ("l0", kepler_orbit(orbit.energy(), orbit.l0(), phi_p)?),
        ("delta_l0", kepler_orbit(orbit.energy(), params.azimuthal_momentum(), phi_p)?),
    ])
}

/// Eccentric anomaly for mean anomaly `m` in `[-pi, pi]` by Newton's method
/// kept inside the bracket `[m - e, m + e]` (bisection fallback).
fn solve_kepler(m: f64, e: f64) -> Result<f64> {
    if e == 0.0 {
        return Ok(m);
    }
    let (mut lo, mut hi) = (m - e, m + e);
    let mut u = if e < 0.8 { m } else { m.signum() * PI };
    u = u.clamp(lo, hi);
    for _ in 0..KEPLER_MAX_ITER {
        let f = u - e * u.sin() - m;
        if f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let df = 1.0 - e * u.cos();
        let mut next = u - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= KEPLER_TOL {
            return Ok(next);
        }
        u = next;
    }
    Err(Error::KeplerIteration { mean_anomaly: m, eccentricity: e })
}

/// Positions at the requested times, with `t = 0` at perihelion passage.
pub fn propagate_kepler(orbit: &KeplerOrbit, t_samples: &[f64]) -> Result<Vec<KeplerSample>> {
    if t_samples.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("t_samples must be sorted".into()));
    }
    let a = orbit.semi_major_axis();
    let e = orbit.e;
    let mean_motion = 2.0 * PI / orbit.period();
    let stretch = ((1.0 + e) / (1.0 - e)).sqrt();
    t_samples
        .iter()
        .map(|&t| {
            let m_total = mean_motion * t;
            let turns = (m_total / (2.0 * PI)).round();
            let m = m_total - 2.0 * PI * turns;
            let u = solve_kepler(m, e)?;
            let r = a * (1.0 - e * u.cos());
            let nu = 2.0 * (stretch * (0.5 * u).tan()).atan();
            let nu = if nu.is_finite() { nu } else { u };
            let phi = orbit.phi_p + nu + 2.0 * PI * turns;
            Ok(KeplerSample {
                t,
                r,
                phi,
                v_r: e * nu.sin() / orbit.l,
                v_phi: orbit.l / r,
            })
        })
        .collect()
}
