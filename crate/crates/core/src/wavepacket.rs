//! The WKB Coulomb coherent state, its quantum phase and quantum potential.
//!
//! Conventions: `alpha0 = a - i b` with `a = 1/(2 sigma^2)` and
//! `b = 3t/l0^4 + 2 f0(r)`, `D = a^2 + b^2`, and
//! `A = delta (phi - phi0) - (t - t0)/l0^3`.
//!
//! # The `lambda^2 / (4 gamma)` term
//!
//! With `gamma = 2 pi^2 b delta^2 / D` and `lambda = pi delta A / D`,
//!
//! ```text
//! lambda^2 / (4 gamma) = pi^2 delta^2 A^2 / D^2 * D / (8 pi^2 b delta^2)
//!                      = A^2 / (8 b D).
//! ```
//!
//! The quotient is therefore not removable: for `A != 0` it diverges like
//! `A^2 / (8 a^2 b)` as `b -> 0`, and only the product `A^2 / (8 b D)` with
//! `A = 0` has a finite (zero) limit. The phase correction is coded as
//! `A^2 G(b)` with
//!
//! ```text
//! G(b)  = 1/(8 b D) - b/(2 D)
//! G'(b) = -(a^2 + 3 b^2)/(8 b^2 D^2) - (a^2 - b^2)/(2 D^2)
//! ```
//!
//! At `b = 0` the phase is returned only when `A = 0` (correction term 0);
//! otherwise a singular-configuration error is raised.
//!
//! All evaluators accept a half-cycle index `k` selecting the reflected
//! radial continuation (see [`RadialProfile::anchors`]); `k = 0` is the
//! printed single-branch packet.

use crate::error::{Error, Result};
use crate::kinematics::{Anchors, OrbitParams, RadialProfile};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Terms beyond the winding window must be this small relative to the largest.
pub const TRUNCATION_THRESHOLD: f64 = 1e-15;
/// Relative amplitude below which `Q = -lap R / (2R)` is not evaluated.
pub const AMPLITUDE_THRESHOLD: f64 = 1e-12;

/// Coherent-state parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketParams {
    orbit: OrbitParams,
    delta: f64,
    sigma2: f64,
    winding_truncation: u32,
}

impl PacketParams {
    pub fn new(orbit: OrbitParams, delta: f64, sigma2: f64, winding_truncation: u32) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1]")));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Domain(format!("sigma2 = {sigma2} must be positive")));
        }
        Ok(Self { orbit, delta, sigma2, winding_truncation })
    }

    /// `delta = 0.95`, `sigma^2 = l0^3`, `M = 3`.
    pub fn with_defaults(orbit: OrbitParams) -> Self {
        Self { orbit, delta: 0.95, sigma2: orbit.l0().powi(3), winding_truncation: 3 }
    }

    pub fn orbit(&self) -> &OrbitParams {
        &self.orbit
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn winding_truncation(&self) -> u32 {
        self.winding_truncation
    }

    /// `a = 1/(2 sigma^2)`
    pub fn a(&self) -> f64 {
        0.5 / self.sigma2
    }

    /// Azimuthal momentum `delta l0`.
    pub fn azimuthal_momentum(&self) -> f64 {
        self.delta * self.orbit.l0()
    }

    /// Whether the winding terms at `|mu| = M + 1` are negligible for every
    /// azimuth. Only the `phi`-Gaussian `exp(-x^2 l0 (1 - delta^2)/2)` is used,
    /// so `delta = 1` never qualifies.
    pub fn truncation_sufficient(&self) -> bool {
        let c1 = 0.5 * self.orbit.l0() * (1.0 - self.delta * self.delta);
        // worst azimuth sits half a turn from the packet
        let x = 2.0 * PI * (self.winding_truncation as f64 + 1.0) - PI;
        -c1 * x * x < TRUNCATION_THRESHOLD.ln()
    }
}

/// A spacetime point; `phi` is unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub t: f64,
}

impl FieldPoint {
    pub fn new(r: f64, theta: f64, phi: f64, t: f64) -> Self {
        Self { r, theta, phi, t }
    }

    fn check(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < PI) {
            return Err(Error::InvalidArgument(format!("theta = {} outside (0, pi)", self.theta)));
        }
        if !(self.r.is_finite() && self.phi.is_finite() && self.t.is_finite()) {
            return Err(Error::InvalidArgument("non-finite field point".into()));
        }
        Ok(())
    }
}

/// Auxiliary quantities of the phase at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseTerms {
    pub a_coord: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
}

impl PhaseTerms {
    /// Builds the terms from the coordinates and the radial anchors.
    pub fn assemble(params: &PacketParams, phi: f64, t: f64, phi0: f64, t0: f64, a: f64, b: f64) -> Self {
        let delta = params.delta;
        let l0 = params.orbit.l0();
        let a_coord = delta * (phi - phi0) - (t - t0) / l0.powi(3);
        let d = a * a + b * b;
        Self {
            a_coord,
            gamma: 2.0 * PI * PI * b * delta * delta / d,
            lambda: PI * delta * a_coord / d,
            a,
            b,
        }
    }
}

/// Gradient of the phase, with the corrections to the classical values
/// kept separately so they do not suffer cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGradient {
    pub d_r: f64,
    pub d_theta: f64,
    pub d_phi: f64,
    pub d_t: f64,
    /// `dS/dr - branch * p0`
    pub corr_r: f64,
    /// `dS/dphi - delta l0`
    pub corr_phi: f64,
}

/// `|psi|` and `arg psi` with diagnostic flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveValue {
    pub psi: Complex64,
    /// `ln |psi|`; finite even where `|psi|` underflows.
    pub log_modulus: f64,
    /// Winding terms at the window edge exceed the truncation threshold.
    pub truncated: bool,
    /// The radius is outside the clamped WKB domain; `psi` is zero.
    pub outside_domain: bool,
}

fn g_coefficient(a: f64, b: f64) -> f64 {
    let d = a * a + b * b;
    1.0 / (8.0 * b * d) - b / (2.0 * d)
}

fn g_derivative(a: f64, b: f64) -> f64 {
    let d = a * a + b * b;
    let d2 = d * d;
    -(a * a + 3.0 * b * b) / (8.0 * b * b * d2) - (a * a - b * b) / (2.0 * d2)
}

fn check_profile(params: &PacketParams, profile: &RadialProfile) -> Result<()> {
    if profile.params() != params.orbit() {
        return Err(Error::InvalidArgument("radial profile was built for a different orbit".into()));
    }
    Ok(())
}

fn anchors_at(p: &FieldPoint, params: &PacketParams, profile: &RadialProfile, k: u32) -> Result<Anchors> {
    p.check()?;
    check_profile(params, profile)?;
    profile.anchors(p.r, k)
}

fn terms_from(p: &FieldPoint, params: &PacketParams, an: &Anchors) -> PhaseTerms {
    let l0 = params.orbit.l0();
    let b = 3.0 * p.t / l0.powi(4) + 2.0 * an.f0;
    PhaseTerms::assemble(params, p.phi, p.t, an.phi0, an.t0, params.a(), b)
}

/// `(1/2) atan(b/a) + A^2 G(b)`.
fn correction(terms: &PhaseTerms) -> Result<f64> {
    let (a, b, big_a) = (terms.a, terms.b, terms.a_coord);
    let quad = if big_a == 0.0 {
        0.0
    } else if b == 0.0 {
        return Err(Error::SingularConfiguration { a_coord: big_a });
    } else {
        big_a * big_a * g_coefficient(a, b)
    };
    Ok(0.5 * (b / a).atan() + quad)
}

pub fn phase_terms(p: &FieldPoint, params: &PacketParams, profile: &RadialProfile) -> Result<PhaseTerms> {
    phase_terms_on_branch(p, params, profile, 0)
}

pub fn phase_terms_on_branch(
    p: &FieldPoint,
    params: &PacketParams,
    profile: &RadialProfile,
    k: u32,
) -> Result<PhaseTerms> {
    let an = anchors_at(p, params, profile, k)?;
    Ok(terms_from(p, params, &an))
}

/// `S = S0 + delta l0 phi + (1/2) atan(b/a) + lambda^2/(4 gamma) - A^2 b / (2 D)`.
pub fn phase(p: &FieldPoint, params: &PacketParams, profile: &RadialProfile) -> Result<f64> {
    phase_on_branch(p, params, profile, 0)
}

pub fn phase_on_branch(p: &FieldPoint, params: &PacketParams, profile: &RadialProfile, k: u32) -> Result<f64> {
    let an = anchors_at(p, params, profile, k)?;
    let terms = terms_from(p, params, &an);
    Ok(an.s0 + params.azimuthal_momentum() * p.phi + correction(&terms)?)
}

/// Phase minus its large classical part `S0 + delta l0 phi`; the piece whose
/// gradient carries the deviations from the classical guidance field.
pub fn phase_correction_on_branch(
    p: &FieldPoint,
    params: &PacketParams,
    profile: &RadialProfile,
    k: u32,
) -> Result<f64> {
    let an = anchors_at(p, params, profile, k)?;
    correction(&terms_from(p, params, &an))
}

/// Analytic gradient of the phase by the chain rule through
/// `S0' = p0`, `phi0' = l0/(r^2 p0)`, `t0' = 1/p0`, `f0' = -1/p0^3`.
pub fn phase_gradient_on_branch(
    p: &FieldPoint,
    params: &PacketParams,
    profile: &RadialProfile,
    k: u32,
) -> Result<PhaseGradient> {
    let an = anchors_at(p, params, profile, k)?;
    let terms = terms_from(p, params, &an);
    let l0 = params.orbit.l0();
    let delta = params.delta;
    let (a, b, big_a) = (terms.a, terms.b, terms.a_coord);
    let d = a * a + b * b;

    let a_r = -delta * an.dphi0 + an.dt0 / l0.powi(3);
    let a_phi = delta;
    let a_t = -1.0 / l0.powi(3);
    let b_r = 2.0 * an.df0;
    let b_t = 3.0 / l0.powi(4);

    let (g, gp) = if big_a == 0.0 {
        (0.0, 0.0)
    } else if b == 0.0 {
        return Err(Error::SingularConfiguration { a_coord: big_a });
    } else {
        (g_coefficient(a, b), g_derivative(a, b))
    };
    let atan_rate = 0.5 * a / d;
    let corr = |a_x: f64, b_x: f64| atan_rate * b_x + 2.0 * big_a * a_x * g + big_a * big_a * gp * b_x;

    let corr_r = corr(a_r, b_r);
    let corr_phi = corr(a_phi, 0.0);
    Ok(PhaseGradient {
        d_r: an.ds0 + corr_r,
        d_theta: 0.0,
        d_phi: params.azimuthal_momentum() + corr_phi,
        d_t: corr(a_t, b_t),
        corr_r,
        corr_phi,
    })
}

pub fn phase_gradient(p: &FieldPoint, params: &PacketParams, profile: &RadialProfile) -> Result<PhaseGradient> {
    phase_gradient_on_branch(p, params, profile, 0)
}

struct Envelope {
    c1: f64,
    c2: f64,
    tau: f64,
}

impl Envelope {
    fn new(p: &FieldPoint, params: &PacketParams, an: &Anchors, b: f64) -> Self {
        let l0 = params.orbit.l0();
        let a = params.a();
        Self {
            c1: 0.5 * l0 * (1.0 - params.delta * params.delta),
            c2: a / (2.0 * (a * a + b * b)),
            tau: (p.t - an.t0) / l0.powi(3),
        }
    }

    /// Largest azimuthal log-envelope over all `phi` at fixed `(r, t)`.
    fn log_max(&self, delta: f64) -> f64 {
        let denom = self.c1 + self.c2 * delta * delta;
        if denom > 0.0 {
            -self.c1 * self.c2 * self.tau * self.tau / denom
        } else {
            0.0
        }
    }

    fn log_at(&self, x: f64, delta: f64) -> f64 {
        let z = delta * x - self.tau;
        -self.c1 * x * x - self.c2 * z * z
    }
}

fn winding_window(phi: f64, phi0: f64, m: u32) -> std::ops::RangeInclusive<i64> {
    let center = ((phi0 - phi) / (2.0 * PI)).round() as i64;
    let m = m as i64;
    (center - m)..=(center + m)
}

/// The packet on the printed (outgoing) branch.
pub fn wavefunction(p: &FieldPoint, params: &PacketParams, profile: &RadialProfile) -> Result<WaveValue> {
    wavefunction_on_branch(p, params, profile, 0)
}

pub fn wavefunction_on_branch(
    p: &FieldPoint,
    params: &PacketParams,
    profile: &RadialProfile,
    k: u32,
) -> Result<WaveValue> {
    p.check()?;
    check_profile(params, profile)?;
    let an = match profile.anchors(p.r, k) {
        Ok(an) if an.p0 > 0.0 => an,
        Ok(_) | Err(Error::OutOfDomain { .. }) => {
            return Ok(WaveValue {
                psi: Complex64::new(0.0, 0.0),
                log_modulus: f64::NEG_INFINITY,
                truncated: false,
                outside_domain: true,
            })
        }
        Err(e) => return Err(e),
    };
    let orbit = params.orbit;
    let delta = params.delta;
    let dl = params.azimuthal_momentum();
    let omega0 = 1.0 / orbit.n0().powi(3);
    let terms = terms_from(p, params, &an);
    let alpha0 = Complex64::new(terms.a, -terms.b);

    let log_radial = 0.5 * (2.0 * omega0 / (PI * an.p0)).ln();
    let dtheta = p.theta - FRAC_PI_2;
    let log_theta = 0.25 * (dl / PI).ln() - dtheta * dtheta * dl / 2.0;
    let log_prefactor = -0.5 * (2.0 * PI * alpha0).ln();

    let env = Envelope::new(p, params, &an, terms.b);
    let window = winding_window(p.phi, an.phi0, params.winding_truncation);
    let (lo_mu, hi_mu) = (*window.start(), *window.end());
    let logs: Vec<Complex64> = window
        .map(|mu| {
            let shifted = p.phi + 2.0 * PI * mu as f64;
            let x = shifted - an.phi0;
            let z = delta * x - env.tau;
            Complex64::new(0.0, dl * shifted) - env.c1 * x * x - z * z / (2.0 * alpha0)
        })
        .collect();
    let peak = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let sum: Complex64 = logs.iter().map(|l| (l - peak).exp()).sum();
    let cut = TRUNCATION_THRESHOLD.ln();
    let edge = |mu: i64| logs[(mu - lo_mu) as usize].re - peak;
    let truncated = edge(lo_mu) > cut || edge(hi_mu) > cut;

    let log_modulus = log_radial + log_theta + log_prefactor.re + peak + sum.norm().ln();
    let arg = an.s0 + log_prefactor.im + sum.arg();
    Ok(WaveValue { psi: Complex64::from_polar(log_modulus.exp(), arg), log_modulus, truncated, outside_domain: false })
}

/// `|psi(p)|` relative to its maximum over `(theta, phi)` at the same `(r, t)`.
pub fn envelope_ratio(p: &FieldPoint, params: &PacketParams, profile: &RadialProfile) -> Result<f64> {
    envelope_ratio_on_branch(p, params, profile, 0)
}

pub fn envelope_ratio_on_branch(
    p: &FieldPoint,
    params: &PacketParams,
    profile: &RadialProfile,
    k: u32,
) -> Result<f64> {
    let an = anchors_at(p, params, profile, k)?;
    let terms = terms_from(p, params, &an);
    let env = Envelope::new(p, params, &an, terms.b);
    let delta = params.delta;
    let best = winding_window(p.phi, an.phi0, params.winding_truncation)
        .map(|mu| env.log_at(p.phi + 2.0 * PI * mu as f64 - an.phi0, delta))
        .fold(f64::NEG_INFINITY, f64::max);
    let dtheta = p.theta - FRAC_PI_2;
    let log_theta = -dtheta * dtheta * params.azimuthal_momentum() / 2.0;
    Ok((log_theta + best - env.log_max(delta)).exp())
}

/// `Q = -(1/2) lap R / R` by a central-difference spherical Laplacian.
pub fn quantum_potential(p: &FieldPoint, params: &PacketParams, profile: &RadialProfile) -> Result<f64> {
    quantum_potential_on_branch(p, params, profile, 0, 1.0)
}

/// Q with all finite-difference steps multiplied by `step_scale`.
///
/// Steps: `h_r = min(1e-3 * 2 pi / p0, 0.05 * distance to the clamp)`,
/// `h_theta = h_phi = 1e-3`. The stencil works with ratios `R(x +- h)/R(x)`
/// computed from `ln |psi|`, so it never underflows.
pub fn quantum_potential_on_branch(
    p: &FieldPoint,
    params: &PacketParams,
    profile: &RadialProfile,
    k: u32,
    step_scale: f64,
) -> Result<f64> {
    let ratio = envelope_ratio_on_branch(p, params, profile, k)?;
    if !(ratio >= AMPLITUDE_THRESHOLD) {
        return Err(Error::AmplitudeUnderflow { ratio, threshold: AMPLITUDE_THRESHOLD });
    }
    let (lo, hi) = profile.clamped_domain();
    let p0 = profile.radial_momentum(p.r)?;
    let h_r = step_scale * (1e-3 * 2.0 * PI / p0).min(0.05 * (p.r - lo).min(hi - p.r));
    let h_a = step_scale * 1e-3;
    if !(h_r > 0.0) {
        return Err(Error::OutOfDomain { r: p.r, lo, hi });
    }
    let log_r = |q: FieldPoint| -> Result<f64> {
        let w = wavefunction_on_branch(&q, params, profile, k)?;
        if w.outside_domain {
            return Err(Error::OutOfDomain { r: q.r, lo, hi });
        }
        Ok(w.log_modulus)
    };
    let center = log_r(*p)?;
    let pair = |dr: f64, dth: f64, dph: f64| -> Result<(f64, f64)> {
        let plus = FieldPoint { r: p.r + dr, theta: p.theta + dth, phi: p.phi + dph, t: p.t };
        let minus = FieldPoint { r: p.r - dr, theta: p.theta - dth, phi: p.phi - dph, t: p.t };
        Ok(((log_r(plus)? - center).exp(), (log_r(minus)? - center).exp()))
    };
    let (rp, rm) = pair(h_r, 0.0, 0.0)?;
    let (tp, tm) = pair(0.0, h_a, 0.0)?;
    let (fp, fm) = pair(0.0, 0.0, h_a)?;
    let r = p.r;
    let (sin_t, cos_t) = p.theta.sin_cos();
    let radial = (rp - 2.0 + rm) / (h_r * h_r) + (2.0 / r) * (rp - rm) / (2.0 * h_r);
    let polar = ((tp - 2.0 + tm) / (h_a * h_a) + cos_t / sin_t * (tp - tm) / (2.0 * h_a)) / (r * r);
    let azimuthal = (fp - 2.0 + fm) / (h_a * h_a) / (r * r * sin_t * sin_t);
    Ok(-0.5 * (radial + polar + azimuthal))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n0: f64, l0: f64, delta: f64) -> (PacketParams, RadialProfile) {
        let orbit = OrbitParams::new(n0, l0).unwrap();
        let params = PacketParams::new(orbit, delta, l0.powi(3), 3).unwrap();
        (params, RadialProfile::new(orbit).unwrap())
    }

    #[test]
    fn rejects_bad_parameters() {
        let orbit = OrbitParams::new(10.0, 9.0).unwrap();
        assert!(PacketParams::new(orbit, 0.0, 1.0, 3).is_err());
        assert!(PacketParams::new(orbit, 1.1, 1.0, 3).is_err());
        assert!(PacketParams::new(orbit, 0.9, -1.0, 3).is_err());
        let d = PacketParams::with_defaults(orbit);
        assert_eq!((d.delta(), d.sigma2(), d.winding_truncation()), (0.95, 729.0, 3));
    }

    #[test]
    fn truncation_check() {
        let orbit = OrbitParams::new(50.5, 50.0).unwrap();
        assert!(PacketParams::new(orbit, 0.95, 1.0, 3).unwrap().truncation_sufficient());
        assert!(!PacketParams::new(orbit, 1.0, 1.0, 3).unwrap().truncation_sufficient());
        assert!(!PacketParams::new(orbit, 0.999, 1.0, 0).unwrap().truncation_sufficient());
    }

    #[test]
    fn packet_center_has_zero_a_and_lambda() {
        let (params, profile) = setup(10.0, 9.0, 0.95);
        let r = 100.0;
        let p = FieldPoint::new(r, FRAC_PI_2, profile.phi0(r).unwrap(), profile.t0(r).unwrap());
        let terms = phase_terms(&p, &params, &profile).unwrap();
        assert_eq!(terms.a_coord, 0.0);
        assert_eq!(terms.lambda, 0.0);
        let s = phase(&p, &params, &profile).unwrap();
        let expected = profile.radial_action(r).unwrap() + 0.95 * 9.0 * p.phi + 0.5 * (terms.b / terms.a).atan();
        assert!((s - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn b_at_time_zero_is_twice_f0() {
        let (params, profile) = setup(10.0, 9.0, 0.95);
        for r in [60.0, 100.0, 140.0] {
            let p = FieldPoint::new(r, FRAC_PI_2, 0.3, 0.0);
            let terms = phase_terms(&p, &params, &profile).unwrap();
            assert_eq!(terms.b, 2.0 * profile.f0(r).unwrap());
        }
    }

    #[test]
    fn singular_configuration_is_reported() {
        let terms = PhaseTerms { a_coord: 0.5, gamma: 0.0, lambda: 1.0, a: 1e-3, b: 0.0 };
        assert!(matches!(correction(&terms), Err(Error::SingularConfiguration { .. })));
        let terms = PhaseTerms { a_coord: 0.0, gamma: 0.0, lambda: 0.0, a: 1e-3, b: 0.0 };
        assert_eq!(correction(&terms).unwrap(), 0.0);
    }

    #[test]
    fn g_matches_printed_terms() {
        let (a, b, big_a, delta) = (0.3, -1.7, 0.8, 0.9);
        let d = a * a + b * b;
        let gamma = 2.0 * PI * PI * b * delta * delta / d;
        let lambda = PI * delta * big_a / d;
        let printed = lambda * lambda / (4.0 * gamma) - big_a * big_a * b / (2.0 * d);
        assert!((big_a * big_a * g_coefficient(a, b) - printed).abs() < 1e-14);
        let h = 1e-6;
        let fd = (g_coefficient(a, b + h) - g_coefficient(a, b - h)) / (2.0 * h);
        assert!((g_derivative(a, b) - fd).abs() < 1e-7 * fd.abs());
    }

    #[test]
    fn theta_factor_is_a_gaussian() {
        let (params, profile) = setup(10.0, 9.0, 0.95);
        let r = 100.0;
        let phi = profile.phi0(r).unwrap();
        let t = profile.t0(r).unwrap();
        let w = (2.0 / params.azimuthal_momentum()).sqrt();
        let c = wavefunction(&FieldPoint::new(r, FRAC_PI_2, phi, t), &params, &profile).unwrap();
        let up = wavefunction(&FieldPoint::new(r, FRAC_PI_2 + w, phi, t), &params, &profile).unwrap();
        let dn = wavefunction(&FieldPoint::new(r, FRAC_PI_2 - w, phi, t), &params, &profile).unwrap();
        assert!((up.psi.norm() / c.psi.norm() - (-1f64).exp()).abs() < 1e-12);
        assert_eq!(up.psi.norm(), dn.psi.norm());
    }

    #[test]
    fn outside_domain_is_flagged() {
        let (params, profile) = setup(10.0, 9.0, 0.95);
        let w = wavefunction(&FieldPoint::new(200.0, FRAC_PI_2, 0.0, 0.0), &params, &profile).unwrap();
        assert!(w.outside_domain);
        assert_eq!(w.psi.norm(), 0.0);
    }
}
