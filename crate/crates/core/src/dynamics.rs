//! Guidance velocity field and trajectory integration.
//!
//! Velocities follow `v = grad S` on the half-cycle continuation selected by
//! the state. The trajectory ODE is integrated in a Sundman pseudo-time `s`
//! with `dt/ds = 1 / (1 + |v| / v_ref)`: on the surfaces `b = 0` the phase
//! correction `A^2 / (8 b D)` makes `|v|` unbounded, while the orbit itself
//! passes through with a finite time integral, so the regularised system
//! steps across them with bounded derivatives.
//!
//! Turning points. The field is only used inside the guarded domain
//! (`p0 >= p_min`). When the radius reaches a guard boundary the state is
//! carried across the excluded sliver by the classical excursion to the
//! turning point and back (time `dt`, azimuth `delta * dphi0`), and the
//! half-cycle index advances, which flips the radial branch.

use crate::error::{Error, Result};
use crate::kinematics::RadialProfile;
use crate::ode::{DenseStep, Dopri5};
use crate::wavepacket::{phase_gradient_on_branch, phase_on_branch, FieldPoint, PacketParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Relative agreement required between analytic and finite-difference gradients.
pub const CROSS_CHECK_TOL: f64 = 1e-6;
/// Relative gap to a guard boundary at which a turning event is taken.
const EVENT_GAP: f64 = 1e-10;
/// Fraction of the predicted distance to the boundary allowed per step.
const APPROACH_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VelocityMode {
    #[serde(rename = "raw")]
    RawSingleBranch,
    #[serde(rename = "two_branch")]
    TwoBranch,
}

impl VelocityMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            VelocityMode::RawSingleBranch => "raw",
            VelocityMode::TwoBranch => "two_branch",
        }
    }
}

impl std::str::FromStr for VelocityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" | "raw_single_branch" => Ok(VelocityMode::RawSingleBranch),
            "two_branch" => Ok(VelocityMode::TwoBranch),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}` (raw | two_branch)"))),
        }
    }
}

/// Configuration of the electron. `half_cycle` counts turning events since
/// the perihelion-side start; the radial branch is `(-1)^half_cycle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BohmState {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    #[serde(default)]
    pub half_cycle: u32,
}

impl BohmState {
    pub fn branch(&self) -> i32 {
        if self.half_cycle % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn point(&self) -> FieldPoint {
        FieldPoint::new(self.r, self.theta, self.phi, self.t)
    }

    /// Default start: inner guard radius, on the packet centre, equatorial.
    pub fn default_start(profile: &RadialProfile) -> Result<Self> {
        let (r, _) = profile.guarded_domain();
        if profile.is_circular() {
            return Ok(Self { t: 0.0, r, theta: FRAC_PI_2, phi: 0.0, half_cycle: 0 });
        }
        Ok(Self { t: profile.t0(r)?, r, theta: FRAC_PI_2, phi: profile.phi0(r)?, half_cycle: 0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocitySample {
    pub v_r: f64,
    pub v_theta: f64,
    pub v_phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    WkbGuard,
    StepFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub state: BohmState,
    pub velocity: VelocitySample,
    /// Sample taken at a turning event (just before or after the bridge).
    pub event: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStats {
    /// Net azimuthal advance in turns.
    pub windings: f64,
    /// Number of turning events (apsidal passages).
    pub apsidal_crossings: u32,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Accumulated local error estimates of `(t, r, theta, phi)`.
    pub error_estimate: [f64; 4],
    pub max_step: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: PacketParams,
    pub mode: VelocityMode,
    pub samples: Vec<TrajectorySample>,
    pub termination: Termination,
    /// Error behind a non-completed termination.
    pub error: Option<Error>,
    pub stats: TrajectoryStats,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&BohmState> {
        self.samples.last().map(|s| &s.state)
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.state.t - a.state.t,
            _ => 0.0,
        }
    }
}

fn half_cycle_for(s: &BohmState, mode: VelocityMode) -> Result<u32> {
    match mode {
        VelocityMode::TwoBranch => Ok(s.half_cycle),
        VelocityMode::RawSingleBranch if s.half_cycle == 0 => Ok(0),
        VelocityMode::RawSingleBranch => {
            Err(Error::InvalidArgument("raw single-branch mode only carries the outgoing branch".into()))
        }
    }
}

fn circular_velocity(s: &BohmState, params: &PacketParams) -> VelocitySample {
    // |f0| -> infinity limit: every correction to the classical field vanishes
    VelocitySample { v_r: 0.0, v_theta: 0.0, v_phi: params.azimuthal_momentum() / (s.r * s.theta.sin()) }
}

fn guard_check(s: &BohmState, profile: &RadialProfile) -> Result<()> {
    let (rm, rp) = profile.turning_points();
    if !(s.r >= rm && s.r <= rp) {
        return Err(Error::OutOfDomain { r: s.r, lo: rm, hi: rp });
    }
    let (lo, hi) = profile.guarded_domain();
    if s.r < lo || s.r > hi {
        return Err(Error::WkbGuard { r: s.r, p0: profile.radial_momentum(s.r)?, p_min: profile.p_min() });
    }
    Ok(())
}

/// Analytic guidance velocity (no cross-check); used inside the integrator.
pub fn velocity_analytic(
    s: &BohmState,
    params: &PacketParams,
    profile: &RadialProfile,
    mode: VelocityMode,
) -> Result<VelocitySample> {
    let k = half_cycle_for(s, mode)?;
    if !(s.theta > 0.0 && s.theta < PI) {
        return Err(Error::InvalidArgument(format!("theta = {} outside (0, pi)", s.theta)));
    }
    if profile.is_circular() {
        let (r0, _) = profile.turning_points();
        if s.r != r0 {
            return Err(Error::OutOfDomain { r: s.r, lo: r0, hi: r0 });
        }
        return Ok(circular_velocity(s, params));
    }
    guard_check(s, profile)?;
    let g = phase_gradient_on_branch(&s.point(), params, profile, k)?;
    Ok(VelocitySample { v_r: g.d_r, v_theta: g.d_theta / s.r, v_phi: g.d_phi / (s.r * s.theta.sin()) })
}

/// Finite-difference gradient `(dS/dr, dS/dtheta, dS/dphi)` of the phase,
/// Richardson-extrapolated from steps `h` and `h/2`.
pub fn phase_gradient_numerical(
    s: &BohmState,
    params: &PacketParams,
    profile: &RadialProfile,
    k: u32,
    step_scale: f64,
) -> Result<[f64; 3]> {
    let (lo, hi) = profile.clamped_domain();
    let (rm, rp) = profile.turning_points();
    let h_r = step_scale * (1e-4 * (rp - rm)).min(0.05 * (s.r - lo).min(hi - s.r));
    let h_a = step_scale * 1e-3;
    let phase_at = |dr: f64, dth: f64, dph: f64| {
        phase_on_branch(&FieldPoint::new(s.r + dr, s.theta + dth, s.phi + dph, s.t), params, profile, k)
    };
    let richardson = |f: &dyn Fn(f64) -> Result<f64>, h: f64| -> Result<f64> {
        let d1 = (f(h)? - f(-h)?) / (2.0 * h);
        let d2 = (f(0.5 * h)? - f(-0.5 * h)?) / h;
        Ok((4.0 * d2 - d1) / 3.0)
    };
    Ok([
        richardson(&|d| phase_at(d, 0.0, 0.0), h_r)?,
        richardson(&|d| phase_at(0.0, d, 0.0), h_a)?,
        richardson(&|d| phase_at(0.0, 0.0, d), h_a)?,
    ])
}

/// Guidance velocity `(dS/dr, (1/r) dS/dtheta, (1/(r sin theta)) dS/dphi)`,
/// cross-checked against Richardson finite differences of the phase.
pub fn velocity(
    s: &BohmState,
    params: &PacketParams,
    profile: &RadialProfile,
    mode: VelocityMode,
) -> Result<VelocitySample> {
    let v = velocity_analytic(s, params, profile, mode)?;
    if profile.is_circular() {
        return Ok(v);
    }
    let k = half_cycle_for(s, mode)?;
    let num = phase_gradient_numerical(s, params, profile, k, 1.0)?;
    let analytic = [v.v_r, v.v_theta * s.r, v.v_phi * s.r * s.theta.sin()];
    let scales = [analytic[0].abs().max(profile.p0_max()), 1.0, analytic[2].abs().max(1.0)];
    for (i, name) in ["dS/dr", "dS/dtheta", "dS/dphi"].into_iter().enumerate() {
        if (analytic[i] - num[i]).abs() > CROSS_CHECK_TOL * scales[i] {
            return Err(Error::CrossCheck { component: name, analytic: analytic[i], numerical: num[i] });
        }
    }
    Ok(v)
}

/// Integrates a guidance trajectory for `duration` atomic time units, sampling
/// every `sample_interval` plus at every turning event.
///
/// Samples falling inside a turning bridge are skipped; if the end time falls
/// inside one, the trajectory ends at the event.
pub fn integrate_trajectory(
    initial: BohmState,
    duration: f64,
    tol: f64,
    mode: VelocityMode,
    params: &PacketParams,
    profile: &RadialProfile,
    sample_interval: f64,
) -> Result<Trajectory> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidArgument(format!("duration = {duration} must be positive")));
    }
    if !(1e-12..=1e-3).contains(&tol) {
        return Err(Error::InvalidArgument(format!("tol = {tol} outside [1e-12, 1e-3]")));
    }
    if !(sample_interval > 0.0) {
        return Err(Error::InvalidArgument(format!("sample interval {sample_interval} must be positive")));
    }
    let max_step = params.orbit().kepler_period() / 200.0;
    let interval = sample_interval.min(max_step);
    let v0 = velocity_analytic(&initial, params, profile, mode)?;

    let mut run = Run {
        params,
        profile,
        mode,
        tol,
        max_step,
        interval,
        t_end: initial.t + duration,
        next_sample: initial.t + interval,
        samples: vec![TrajectorySample { state: initial, velocity: v0, event: false }],
        accepted: 0,
        rejected: 0,
        error_sum: [0.0; 4],
        events: 0,
    };
    let (termination, error) = match run.drive(initial) {
        Ok(t) => (t, None),
        Err(e) => {
            let kind = match e {
                Error::WkbGuard { .. } => Termination::WkbGuard,
                _ => Termination::StepFailure,
            };
            (kind, Some(e))
        }
    };
    let last = run.samples.last().map(|s| s.state.phi).unwrap_or(initial.phi);
    let stats = TrajectoryStats {
        windings: (last - initial.phi) / (2.0 * PI),
        apsidal_crossings: run.events,
        accepted_steps: run.accepted,
        rejected_steps: run.rejected,
        error_estimate: run.error_sum,
        max_step,
    };
    Ok(Trajectory { params: *params, mode, samples: run.samples, termination, error, stats })
}

struct Run<'a> {
    params: &'a PacketParams,
    profile: &'a RadialProfile,
    mode: VelocityMode,
    tol: f64,
    max_step: f64,
    interval: f64,
    t_end: f64,
    next_sample: f64,
    samples: Vec<TrajectorySample>,
    accepted: usize,
    rejected: usize,
    error_sum: [f64; 4],
    events: u32,
}

impl Run<'_> {
    fn state_of(y: &[f64; 4], k: u32) -> BohmState {
        BohmState { t: y[0], r: y[1], theta: y[2], phi: y[3], half_cycle: k }
    }

    fn push(&mut self, state: BohmState, event: bool) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if state.t <= last.state.t {
                return Ok(());
            }
        }
        let velocity = velocity_analytic(&state, self.params, self.profile, self.mode)?;
        self.samples.push(TrajectorySample { state, velocity, event });
        Ok(())
    }

    /// Emits the uniform samples covered by one dense step.
    fn sample_step(&mut self, step: &DenseStep<4>, k: u32) -> Result<()> {
        let t_hi = step.y1[0].min(self.t_end);
        while self.next_sample <= t_hi {
            let target = self.next_sample;
            let y = invert_time(step, target);
            self.push(Self::state_of(&y, k), false)?;
            self.next_sample += self.interval;
        }
        if step.y1[0] >= self.t_end {
            let y = invert_time(step, self.t_end);
            self.push(Self::state_of(&y, k), false)?;
        }
        Ok(())
    }

    fn drive(&mut self, initial: BohmState) -> Result<Termination> {
        if self.profile.is_circular() {
            return self.drive_circular(initial);
        }
        let (g_lo, g_hi) = self.profile.guarded_domain();
        let v_ref = 100.0 * self.params.orbit().l0() / g_lo;
        let mut y = [initial.t, initial.r, initial.theta, initial.phi];
        let mut k = initial.half_cycle;
        let (params, profile, mode) = (self.params, self.profile, self.mode);
        loop {
            let system = |_s: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
                let state = Self::state_of(y, k);
                let v = velocity_analytic(&state, params, profile, mode)?;
                let speed = (v.v_r * v.v_r + v.v_theta * v.v_theta + v.v_phi * v.v_phi).sqrt();
                let w = 1.0 / (1.0 + speed / v_ref);
                let (r, sin_t) = (y[1], y[2].sin());
                Ok([w, w * v.v_r, w * v.v_theta / r, w * v.v_phi / (r * sin_t)])
            };
            let mut ode = Dopri5::new(&system, 0.0, y, self.tol, self.tol, self.max_step)?;
            let base_error = self.error_sum;
            let outward = k % 2 == 0;
            let target = if outward { g_hi } else { g_lo };
            let reached = loop {
                let gap = (target - ode.y[1]).abs();
                if gap <= EVENT_GAP * target {
                    break true;
                }
                let rate = ode.derivative()[1];
                let heading_in = if outward { rate > 0.0 } else { rate < 0.0 };
                let cap = if heading_in { APPROACH_FRACTION * gap / rate.abs() } else { f64::INFINITY };
                let before = (ode.accepted, ode.rejected);
                let step = ode.step(&system, cap);
                self.accepted += ode.accepted - before.0;
                self.rejected += ode.rejected - before.1;
                let step = step?;
                for i in 0..4 {
                    self.error_sum[i] = base_error[i] + ode.error_sum[i];
                }
                self.sample_step(&step, k)?;
                if step.y1[0] >= self.t_end {
                    break false;
                }
            };
            y = ode.y;
            if !reached {
                return Ok(Termination::Completed);
            }
            // snap onto the guard boundary and take the turning event
            y[1] = target;
            let before = Self::state_of(&y, k);
            if self.mode == VelocityMode::RawSingleBranch {
                self.push(before, true)?;
                let p0 = self.profile.radial_momentum(target)?;
                return Err(Error::WkbGuard { r: target, p0, p_min: self.profile.p_min() });
            }
            self.push(before, true)?;
            let (dt, dphi0) = self.profile.turning_excursion(target, outward)?;
            y[0] += dt;
            y[3] += self.params.delta() * dphi0;
            k += 1;
            self.events += 1;
            if y[0] > self.t_end {
                return Ok(Termination::Completed);
            }
            while self.next_sample <= y[0] {
                self.next_sample += self.interval;
            }
            self.push(Self::state_of(&y, k), true)?;
        }
    }

    fn drive_circular(&mut self, initial: BohmState) -> Result<Termination> {
        let (params, profile, mode) = (self.params, self.profile, self.mode);
        let system = |_t: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
            let state = Self::state_of(y, 0);
            let v = velocity_analytic(&state, params, profile, mode)?;
            Ok([1.0, v.v_r, v.v_theta / y[1], v.v_phi / (y[1] * y[2].sin())])
        };
        let y = [initial.t, initial.r, initial.theta, initial.phi];
        let mut ode = Dopri5::new(&system, 0.0, y, self.tol, self.tol, self.max_step)?;
        loop {
            let step = ode.step(&system, f64::INFINITY)?;
            self.sample_step(&step, 0)?;
            if step.y1[0] >= self.t_end {
                break;
            }
        }
        self.accepted = ode.accepted;
        self.rejected = ode.rejected;
        self.error_sum = ode.error_sum;
        Ok(Termination::Completed)
    }
}

/// State on a dense step at which the time component equals `target`.
fn invert_time(step: &DenseStep<4>, target: f64) -> [f64; 4] {
    let (mut a, mut b) = (step.t0, step.t1);
    let mut y = step.eval(b);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        y = step.eval(m);
        if y[0] < target {
            a = m;
        } else {
            b = m;
        }
    }
    y[0] = target;
    y
}

/// Rectilinear grid in `(r, theta, phi)`, evaluated in row-major order
/// (`r` slowest, `phi` fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl GridSpec {
    pub fn points(&self, t: f64) -> Vec<FieldPoint> {
        let mut out = Vec::with_capacity(self.r.len() * self.theta.len() * self.phi.len());
        for &r in &self.r {
            for &theta in &self.theta {
                for &phi in &self.phi {
                    out.push(FieldPoint::new(r, theta, phi, t));
                }
            }
        }
        out
    }
}

/// One grid row; per-point failures are reported in-band.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub point: FieldPoint,
    pub velocity: std::result::Result<VelocitySample, Error>,
}

/// Velocity field on a grid at time `t` on half-cycle `k` (two-branch
/// continuation). Parallel over points; output order is the grid order.
pub fn velocity_field_grid(
    spec: &GridSpec,
    t: f64,
    half_cycle: u32,
    params: &PacketParams,
    profile: &RadialProfile,
) -> Vec<GridRow> {
    spec.points(t)
        .into_par_iter()
        .map(|point| {
            let state = BohmState { t, r: point.r, theta: point.theta, phi: point.phi, half_cycle };
            GridRow { point, velocity: velocity(&state, params, profile, VelocityMode::TwoBranch) }
        })
        .collect()
}
