//! Conic fits, guidance-correction scaling and Hamilton-Jacobi residuals.

use crate::classical::{reference_candidates, KeplerOrbit};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::kinematics::{OrbitParams, RadialProfile};
use crate::wavepacket::{
    phase_gradient_on_branch, phase_on_branch, phase_terms_on_branch, quantum_potential_on_branch, FieldPoint,
    PacketParams,
};
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

const FIT_MAX_ITER: usize = 200;
const FIT_STEP_TOL: f64 = 1e-12;
const PLANE_TOL: f64 = 1e-6;
/// Slack on the one-radial-period requirement; a run whose end time falls
/// inside a turning bridge stops at the event, slightly short of the request.
const ARC_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConicFit {
    pub e_fit: f64,
    pub p_fit: f64,
    /// In `(-pi, pi]`.
    pub phi_p_fit: f64,
    pub rms_residual: f64,
    pub n_samples: usize,
    pub iterations: usize,
}

fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

fn conic_residuals(r: &[f64], phi: &[f64], x: &Vector3<f64>) -> Vec<f64> {
    r.iter().zip(phi).map(|(&r, &ph)| x[0] / r - 1.0 - x[1] * (ph - x[2]).cos()).collect()
}

fn cost(res: &[f64]) -> f64 {
    res.iter().map(|v| v * v).sum()
}

/// Least-squares fit of `p/r = 1 + e cos(phi - phi_p)` to planar samples.
pub fn fit_conic_points(r: &[f64], phi: &[f64]) -> Result<ConicFit> {
    if r.len() != phi.len() {
        return Err(Error::InvalidArgument("r and phi lengths differ".into()));
    }
    if r.len() < 4 {
        return Err(Error::InsufficientArc(format!("{} samples, need at least 4", r.len())));
    }
    if r.iter().any(|&v| !(v > 0.0 && v.is_finite())) || phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite with r > 0".into()));
    }
    let (i_min, r_min) = r.iter().copied().enumerate().fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let r_max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut x = Vector3::new(
        2.0 * r_min * r_max / (r_min + r_max),
        (r_max - r_min) / (r_max + r_min),
        phi[i_min],
    );
    let mut res = conic_residuals(r, phi, &x);
    let mut c = cost(&res);
    let mut lambda = 1e-3;
    for iter in 1..=FIT_MAX_ITER {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for ((&ri, &pi), &e) in r.iter().zip(phi).zip(&res) {
            let (s, co) = (pi - x[2]).sin_cos();
            let j = Vector3::new(1.0 / ri, -co, -x[1] * s);
            jtj += j * j.transpose();
            jtr += j * e;
        }
        let scale = Vector3::new(x[0].abs().max(1e-300), 1.0, 1.0);
        loop {
            let mut damped = jtj;
            for k in 0..3 {
                // diagonal floor keeps phi_p solvable when e -> 0
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-30 / (scale[k] * scale[k]));
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                if lambda > 1e30 {
                    return Err(Error::FitNonConvergence { iterations: iter });
                }
                continue;
            };
            let mut trial = x + step;
            if trial[1] < 0.0 {
                trial[1] = -trial[1];
                trial[2] += PI;
            }
            let size = (step[0] / scale[0]).abs() + step[1].abs() + (x[1] * step[2]).abs();
            let trial_res = conic_residuals(r, phi, &trial);
            let trial_cost = cost(&trial_res);
            if trial_cost <= c {
                x = trial;
                res = trial_res;
                c = trial_cost;
                lambda = (lambda * 0.1).max(1e-12);
                if size < FIT_STEP_TOL {
                    return Ok(finish(x, &res, iter));
                }
                break;
            }
            if size < FIT_STEP_TOL {
                // already at the minimum to working precision
                return Ok(finish(x, &res, iter));
            }
            lambda *= 10.0;
        }
    }
    Err(Error::FitNonConvergence { iterations: FIT_MAX_ITER })
}

fn finish(x: Vector3<f64>, res: &[f64], iterations: usize) -> ConicFit {
    let rms = (cost(res) / res.len() as f64).sqrt();
    ConicFit {
        e_fit: x[1],
        p_fit: x[0],
        phi_p_fit: if x[1] == 0.0 { 0.0 } else { wrap_angle(x[2]) },
        rms_residual: rms,
        n_samples: res.len(),
        iterations,
    }
}

/// Conic fit of an equatorial trajectory covering at least one radial period.
pub fn fit_conic(traj: &Trajectory) -> Result<ConicFit> {
    let period = traj.params.orbit().kepler_period();
    if traj.duration() < period * (1.0 - ARC_SLACK) {
        return Err(Error::InsufficientArc(format!(
            "trajectory spans {} but one radial period is {}",
            traj.duration(),
            period
        )));
    }
    if let Some(s) = traj.samples.iter().find(|s| (s.state.theta - FRAC_PI_2).abs() > PLANE_TOL) {
        return Err(Error::InvalidArgument(format!("sample at t = {} leaves the equatorial plane", s.state.t)));
    }
    let r: Vec<f64> = traj.samples.iter().map(|s| s.state.r).collect();
    let phi: Vec<f64> = traj.samples.iter().map(|s| s.state.phi).collect();
    fit_conic_points(&r, &phi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateDistance {
    /// `"l0"` or `"delta_l0"`.
    pub label: &'static str,
    pub orbit: KeplerOrbit,
    pub e_abs_diff: f64,
    /// Relative to the candidate's eccentricity; infinite for a circular candidate.
    pub e_rel_diff: f64,
    pub p_rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConicComparison {
    pub fit: ConicFit,
    pub candidates: Vec<CandidateDistance>,
    /// Label of the candidate with the smaller eccentricity distance.
    pub nearest: &'static str,
}

/// Distances from a fit to both reference ellipses (`L = l0`, `L = delta l0`).
pub fn compare_with_candidates(fit: &ConicFit, params: &PacketParams) -> Result<ConicComparison> {
    let candidates: Vec<CandidateDistance> = reference_candidates(params, fit.phi_p_fit)?
        .into_iter()
        .map(|(label, orbit)| {
            let e_abs_diff = (fit.e_fit - orbit.e).abs();
            CandidateDistance {
                label,
                orbit,
                e_abs_diff,
                e_rel_diff: if orbit.e > 0.0 { e_abs_diff / orbit.e } else { f64::INFINITY },
                p_rel_diff: (fit.p_fit - orbit.p_latus).abs() / orbit.p_latus,
            }
        })
        .collect();
    let nearest = if candidates[1].e_abs_diff < candidates[0].e_abs_diff { candidates[1].label } else { candidates[0].label };
    Ok(ConicComparison { fit: *fit, candidates, nearest })
}

/// Packet family used across a scaling sweep: `n0 = n0_over_l0 * l0`,
/// `sigma2 = l0^sigma2_exponent`, fixed `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingTemplate {
    pub n0_over_l0: f64,
    pub delta: f64,
    pub sigma2_exponent: f64,
    pub winding_truncation: u32,
}

impl Default for ScalingTemplate {
    fn default() -> Self {
        Self { n0_over_l0: 1.01, delta: 0.95, sigma2_exponent: 3.0, winding_truncation: 3 }
    }
}

impl ScalingTemplate {
    pub fn params(&self, l0: f64) -> Result<PacketParams> {
        let orbit = OrbitParams::new(self.n0_over_l0 * l0, l0)?;
        PacketParams::new(orbit, self.delta, l0.powf(self.sigma2_exponent), self.winding_truncation)
    }
}

/// Probe points: `r = r- + f (r+ - r-)` for each radial fraction `f`,
/// `phi = phi0(r) + offset`, `t = t0(r)`, outgoing branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSpec {
    pub radial_fractions: Vec<f64>,
    pub phase_offsets: Vec<f64>,
    pub theta: f64,
    /// Multiplier on the finite-difference steps of the numerical route.
    pub step_scale: f64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            radial_fractions: vec![0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95],
            phase_offsets: vec![-0.5, -0.1, 0.1, 0.5],
            theta: FRAC_PI_2,
            step_scale: 1.0,
        }
    }
}

impl ProbeSpec {
    pub fn points(&self, profile: &RadialProfile) -> Result<Vec<FieldPoint>> {
        let (rm, rp) = profile.turning_points();
        let (lo, hi) = profile.clamped_domain();
        let mut out = Vec::with_capacity(self.radial_fractions.len() * self.phase_offsets.len());
        for &f in &self.radial_fractions {
            let r = rm + f * (rp - rm);
            if !(r > lo && r < hi) {
                return Err(Error::OutOfDomain { r, lo, hi });
            }
            let (phi0, t0) = (profile.phi0(r)?, profile.t0(r)?);
            for &off in &self.phase_offsets {
                out.push(FieldPoint::new(r, self.theta, phi0 + off, t0));
            }
        }
        Ok(out)
    }
}

/// Absolute deviations of the phase gradient from the classical guidance
/// field `(p0, 0, delta l0)` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub r: f64,
    pub theta: f64,
    pub dr: f64,
    pub dtheta: f64,
    pub dphi: f64,
    pub dr_numerical: f64,
    pub dphi_numerical: f64,
}

/// The smooth part of the phase correction: `(1/2) atan(b/a)` minus its
/// constant `sign(b) pi/4`, plus `A^2 G(b)`.
fn smooth_correction(p: &FieldPoint, params: &PacketParams, profile: &RadialProfile) -> Result<f64> {
    let t = phase_terms_on_branch(p, params, profile, 0)?;
    if t.b == 0.0 {
        return Err(Error::SingularConfiguration { a_coord: t.a_coord });
    }
    let d = t.a * t.a + t.b * t.b;
    let g = 1.0 / (8.0 * t.b * d) - t.b / (2.0 * d);
    Ok(-0.5 * (t.a / t.b).atan() + t.a_coord * t.a_coord * g)
}

fn richardson(f: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    let d1 = (f(h)? - f(-h)?) / (2.0 * h);
    let d2 = (f(0.5 * h)? - f(-0.5 * h)?) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}

pub fn deviation_at(p: &FieldPoint, params: &PacketParams, profile: &RadialProfile, step_scale: f64) -> Result<Deviation> {
    let g = phase_gradient_on_branch(p, params, profile, 0)?;
    let (lo, hi) = profile.clamped_domain();
    let (rm, rp) = profile.turning_points();
    let h_r = step_scale * (1e-4 * (rp - rm)).min(0.05 * (p.r - lo).min(hi - p.r));
    let h_a = step_scale * 1e-3;
    let at = |dr: f64, dph: f64| smooth_correction(&FieldPoint::new(p.r + dr, p.theta, p.phi + dph, p.t), params, profile);
    let dr_num = richardson(|d| at(d, 0.0), h_r)?;
    let dphi_num = richardson(|d| at(0.0, d), h_a)?;
    let full = |dth: f64| phase_on_branch(&FieldPoint::new(p.r, p.theta + dth, p.phi, p.t), params, profile, 0);
    let dtheta = richardson(full, h_a)?;
    Ok(Deviation {
        r: p.r,
        theta: p.theta,
        dr: g.corr_r.abs(),
        dtheta: dtheta.abs().max(g.d_theta.abs()),
        dphi: g.corr_phi.abs(),
        dr_numerical: dr_num.abs(),
        dphi_numerical: dphi_num.abs(),
    })
}

/// Least-squares line through `(ln l0, ln deviation)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
}

pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(_, &y)| y > 0.0).map(|(&x, &y)| (x.ln(), y.ln())).collect();
    let n = pts.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Some(SlopeFit { slope, stderr: (sse / (nf - 2.0) / sxx).sqrt(), intercept })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub l0: f64,
    pub n0: f64,
    pub delta_r: f64,
    pub delta_theta: f64,
    pub delta_phi: f64,
    pub delta_r_numerical: f64,
    pub delta_phi_numerical: f64,
    /// Largest relative disagreement between the analytic and numerical routes.
    pub cross_check: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub l0_values: Vec<f64>,
    pub delta_r: Vec<f64>,
    pub delta_phi: Vec<f64>,
    pub delta_theta: Vec<f64>,
    pub slope_r: Option<SlopeFit>,
    pub slope_phi: Option<SlopeFit>,
    pub rows: Vec<ScalingRow>,
    pub template: ScalingTemplate,
    pub probes: ProbeSpec,
}

/// Relative tolerance between the analytic deviations and the numerical ones.
pub const SCALING_CROSS_CHECK_TOL: f64 = 1e-3;

fn scaling_row(l0: f64, template: &ScalingTemplate, probes: &ProbeSpec) -> Result<ScalingRow> {
    let params = template.params(l0)?;
    let profile = RadialProfile::new(*params.orbit())?;
    let points = probes.points(&profile)?;
    let devs = points
        .par_iter()
        .map(|p| deviation_at(p, &params, &profile, probes.step_scale))
        .collect::<Result<Vec<_>>>()?;
    let max = |f: fn(&Deviation) -> f64| devs.iter().map(f).fold(0.0, f64::max);
    let mut cross_check: f64 = 0.0;
    for d in &devs {
        for (a, n, name) in [(d.dr, d.dr_numerical, "dS/dr"), (d.dphi, d.dphi_numerical, "dS/dphi")] {
            let rel = (a - n).abs() / a.max(n).max(f64::MIN_POSITIVE);
            if rel > SCALING_CROSS_CHECK_TOL {
                return Err(Error::CrossCheck { component: name, analytic: a, numerical: n });
            }
            cross_check = cross_check.max(rel);
        }
    }
    Ok(ScalingRow {
        l0,
        n0: params.orbit().n0(),
        delta_r: max(|d| d.dr),
        delta_theta: max(|d| d.dtheta),
        delta_phi: max(|d| d.dphi),
        delta_r_numerical: max(|d| d.dr_numerical),
        delta_phi_numerical: max(|d| d.dphi_numerical),
        cross_check,
    })
}

/// Max deviations from the classical guidance field over the probe set for
/// each `l0`, with log-log slopes.
pub fn correction_scaling(l0_list: &[f64], template: &ScalingTemplate, probes: &ProbeSpec) -> Result<ScalingReport> {
    if l0_list.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 l0 values, got {}", l0_list.len())));
    }
    if l0_list.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidArgument("l0 values must be positive".into()));
    }
    let lo = l0_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = l0_list.iter().copied().fold(0.0, f64::max);
    if hi < 5.0 * lo {
        return Err(Error::InvalidArgument(format!("l0 values span {lo}..{hi}, need a factor 5")));
    }
    let rows = l0_list.iter().map(|&l0| scaling_row(l0, template, probes)).collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&ScalingRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let delta_r = col(|r| r.delta_r);
    let delta_phi = col(|r| r.delta_phi);
    Ok(ScalingReport {
        l0_values: l0_list.to_vec(),
        slope_r: log_log_slope(l0_list, &delta_r),
        slope_phi: log_log_slope(l0_list, &delta_phi),
        delta_theta: col(|r| r.delta_theta),
        delta_r,
        delta_phi,
        rows,
        template: *template,
        probes: probes.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HjOptions {
    /// Drop Q and use only the classical phase `S0 + delta l0 phi - E t`.
    pub classical_only: bool,
    pub half_cycle: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HjTerms {
    /// `d(S - E t)/dt`
    pub dt_phase: f64,
    pub kinetic: f64,
    pub q: f64,
    pub residual: f64,
    /// `residual / |E|`
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HjRow {
    pub point: FieldPoint,
    pub result: Result<HjTerms>,
}

fn hj_terms(p: &FieldPoint, params: &PacketParams, profile: &RadialProfile, opts: HjOptions) -> Result<HjTerms> {
    let e = params.orbit().energy();
    let k = opts.half_cycle;
    let an = profile.anchors(p.r, k)?;
    let sin_t = p.theta.sin();
    let (dt_phase, kinetic, q) = if opts.classical_only {
        let v_phi = params.azimuthal_momentum() / (p.r * sin_t);
        (-e, 0.5 * (an.ds0 * an.ds0 + v_phi * v_phi), 0.0)
    } else {
        let g = phase_gradient_on_branch(p, params, profile, k)?;
        let h_t = 1e-3 * params.orbit().l0().powi(3);
        let at = |dt: f64| phase_on_branch(&FieldPoint::new(p.r, p.theta, p.phi, p.t + dt), params, profile, k);
        let s_t = richardson(at, h_t)?;
        let v_phi = g.d_phi / (p.r * sin_t);
        let v_theta = g.d_theta / p.r;
        let kinetic = 0.5 * (g.d_r * g.d_r + v_theta * v_theta + v_phi * v_phi);
        (s_t - e, kinetic, quantum_potential_on_branch(p, params, profile, k, 1.0)?)
    };
    let residual = dt_phase + kinetic + q - 1.0 / p.r;
    Ok(HjTerms { dt_phase, kinetic, q, residual, normalized: residual / e.abs() })
}

/// Residual of the modified Hamilton-Jacobi equation for `S - E t` at each
/// point; failures are reported per point.
pub fn hj_residual_scan(
    points: &[FieldPoint],
    params: &PacketParams,
    profile: &RadialProfile,
    opts: HjOptions,
) -> Vec<HjRow> {
    points
        .par_iter()
        .map(|p| HjRow { point: *p, result: hj_terms(p, params, profile, opts) })
        .collect()
}

/// Packet centre at `r = n0^2` on the outgoing branch.
pub fn packet_center(profile: &RadialProfile) -> Result<FieldPoint> {
    let r = profile.params().n0().powi(2);
    Ok(FieldPoint::new(r, FRAC_PI_2, profile.phi0(r)?, profile.t0(r)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap() {
        assert_eq!(wrap_angle(0.5), 0.5);
        assert!((wrap_angle(3.0 * PI + 0.25) - (-PI + 0.25)).abs() < 1e-14);
        assert_eq!(wrap_angle(PI), PI);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [10.0, 20.0, 50.0, 100.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-5.0)).collect();
        let s = log_log_slope(&x, &y).unwrap();
        assert!((s.slope + 5.0).abs() < 1e-12);
        assert!(s.stderr < 1e-10);
        assert!(log_log_slope(&x, &[0.0; 4]).is_none());
    }

    #[test]
    fn fit_recovers_exact_ellipse() {
        let (p, e, php) = (123.0, 0.3, 0.7);
        let phi: Vec<f64> = (0..200).map(|i| 2.0 * PI * i as f64 / 200.0).collect();
        let r: Vec<f64> = phi.iter().map(|f| p / (1.0 + e * (f - php).cos())).collect();
        let fit = fit_conic_points(&r, &phi).unwrap();
        assert!((fit.p_fit - p).abs() < 1e-10 * p);
        assert!((fit.e_fit - e).abs() < 1e-10);
        assert!((fit.phi_p_fit - php).abs() < 1e-10);
        assert!(fit.rms_residual < 1e-13);
    }
}
