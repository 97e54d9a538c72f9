//! The four batch commands. Each reads a validated [`RunConfig`] and writes
//! its files into one output directory; the returned paths are in write order.
//!
//! | command             | files                                        |
//! |---------------------|----------------------------------------------|
//! | `simulate`          | `trajectory.csv`, `summary.json`             |
//! | `scaling-study`     | `scaling.csv`, `scaling.json`                |
//! | `field-dump`        | `field.csv`, `field_summary.json`            |
//! | `compare-classical` | `classical.csv`, `conic_fit.json`            |
//!
//! Timing is never written to these files (they must be byte-stable); the
//! binary reports it on stderr.

use crate::analysis::{
    compare_with_candidates, correction_scaling, fit_conic, hj_residual_scan, packet_center, ConicComparison,
    HjOptions, ScalingReport,
};
use crate::classical::{propagate_kepler, reference_candidates};
use crate::config::RunConfig;
use crate::dynamics::{
    integrate_trajectory, velocity, BohmState, GridSpec, Termination, Trajectory, TrajectoryStats, VelocityMode,
};
use crate::error::{Error, Result};
use crate::kinematics::RadialProfile;
use crate::output::{paper_claims, to_json, write_file, Cell, CsvTable, PaperClaims};
use crate::wavepacket::{phase_on_branch, quantum_potential_on_branch, wavefunction_on_branch, PacketParams};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    ScalingStudy,
    FieldDump,
    CompareClassical,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::ScalingStudy => "scaling-study",
            Command::FieldDump => "field-dump",
            Command::CompareClassical => "compare-classical",
        }
    }

    pub fn run(&self, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
        match self {
            Command::Simulate => run_simulate(cfg, out),
            Command::ScalingStudy => run_scaling(cfg, out),
            Command::FieldDump => run_field_dump(cfg, out),
            Command::CompareClassical => run_compare_classical(cfg, out),
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Command::Simulate, Command::ScalingStudy, Command::FieldDump, Command::CompareClassical]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown command `{s}`")))
    }
}

#[derive(Serialize)]
struct ErrorInfo {
    kind: &'static str,
    message: String,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        Self { kind: e.kind(), message: e.to_string() }
    }
}

struct Setup {
    params: PacketParams,
    profile: RadialProfile,
}

fn setup(cfg: &RunConfig) -> Result<Setup> {
    let params = cfg.packet()?;
    let profile = RadialProfile::new(*params.orbit())?;
    Ok(Setup { params, profile })
}

fn trajectory_for(cfg: &RunConfig, s: &Setup) -> Result<Trajectory> {
    let initial = match cfg.simulate.initial {
        Some(state) => state,
        None => BohmState::default_start(&s.profile)?,
    };
    let duration = cfg.simulate.duration_periods * s.params.orbit().kepler_period();
    integrate_trajectory(
        initial,
        duration,
        cfg.simulate.tol,
        cfg.simulate.mode,
        &s.params,
        &s.profile,
        cfg.sample_interval()?,
    )
}

/// A step failure is a module error; reaching the guard in raw mode is the
/// expected end of that diagnostic run.
fn check_termination(traj: &Trajectory) -> Result<()> {
    match (&traj.termination, &traj.error) {
        (Termination::StepFailure, Some(e)) => Err(e.clone()),
        (Termination::StepFailure, None) => Err(Error::StepFailure { t: f64::NAN, h: f64::NAN }),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct Diagnostics {
    /// `max |theta - pi/2|`
    planarity: f64,
    /// `max |r sin(theta) v_phi - delta l0|`
    angular_momentum_deviation: f64,
    /// `max |r - r_start| / r_start`
    radius_spread: f64,
    duration: f64,
}

fn diagnostics(traj: &Trajectory) -> Diagnostics {
    let dl = traj.params.azimuthal_momentum();
    let r_start = traj.samples.first().map_or(f64::NAN, |s| s.state.r);
    let mut d = Diagnostics { planarity: 0.0, angular_momentum_deviation: 0.0, radius_spread: 0.0, duration: traj.duration() };
    for s in &traj.samples {
        let st = &s.state;
        d.planarity = d.planarity.max((st.theta - FRAC_PI_2).abs());
        d.angular_momentum_deviation = d.angular_momentum_deviation.max((st.r * st.theta.sin() * s.velocity.v_phi - dl).abs());
        d.radius_spread = d.radius_spread.max((st.r - r_start).abs() / r_start);
    }
    d
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    mode: VelocityMode,
    termination: Termination,
    termination_error: Option<ErrorInfo>,
    n_samples: usize,
    initial_state: Option<BohmState>,
    final_state: Option<BohmState>,
    stats: &'a TrajectoryStats,
    diagnostics: Diagnostics,
    conic: Option<ConicComparison>,
    conic_error: Option<ErrorInfo>,
    paper_claims: PaperClaims,
}

fn trajectory_csv(traj: &Trajectory, s: &Setup, with_q: bool) -> String {
    let extras: Vec<(Option<f64>, Option<f64>)> = traj
        .samples
        .par_iter()
        .map(|smp| {
            let k = smp.state.half_cycle;
            let p = smp.state.point();
            let phase = phase_on_branch(&p, &s.params, &s.profile, k).ok();
            let q = if with_q { quantum_potential_on_branch(&p, &s.params, &s.profile, k, 1.0).ok() } else { None };
            (phase, q)
        })
        .collect();
    let mut csv = CsvTable::new(&[
        "t", "r", "theta", "phi", "x", "y", "z", "v_r", "v_theta", "v_phi", "branch", "S", "Q_optional",
    ]);
    for (smp, (phase, q)) in traj.samples.iter().zip(extras) {
        let st = &smp.state;
        let (st_sin, st_cos) = st.theta.sin_cos();
        let v = &smp.velocity;
        csv.row(vec![
            st.t.into(),
            st.r.into(),
            st.theta.into(),
            st.phi.into(),
            (st.r * st_sin * st.phi.cos()).into(),
            (st.r * st_sin * st.phi.sin()).into(),
            (st.r * st_cos).into(),
            v.v_r.into(),
            v.v_theta.into(),
            v.v_phi.into(),
            Cell::Int(st.branch() as i64),
            phase.into(),
            q.into(),
        ]);
    }
    csv.into_string()
}

pub fn run_simulate(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let s = setup(cfg)?;
    let traj = trajectory_for(cfg, &s)?;
    let mut files = Vec::new();
    if cfg.output.csv {
        files.push(write_file(out, "trajectory.csv", &trajectory_csv(&traj, &s, cfg.simulate.quantum_potential))?);
    }
    if cfg.output.json {
        let (conic, conic_error) = match fit_conic(&traj).and_then(|f| compare_with_candidates(&f, &s.params)) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(ErrorInfo::from(&e))),
        };
        let summary = SimulateSummary {
            command: Command::Simulate.name(),
            config: cfg,
            mode: traj.mode,
            termination: traj.termination,
            termination_error: traj.error.as_ref().map(ErrorInfo::from),
            n_samples: traj.samples.len(),
            initial_state: traj.samples.first().map(|x| x.state),
            final_state: traj.final_state().copied(),
            stats: &traj.stats,
            diagnostics: diagnostics(&traj),
            conic,
            conic_error,
            paper_claims: paper_claims(),
        };
        files.push(write_file(out, "summary.json", &to_json(&summary))?);
    }
    check_termination(&traj)?;
    Ok(files)
}

#[derive(Serialize)]
struct HjCenter {
    l0: f64,
    residual: Option<f64>,
    normalized: Option<f64>,
    q: Option<f64>,
    error: Option<ErrorInfo>,
}

#[derive(Serialize)]
struct ScalingSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    report: &'a ScalingReport,
    hj_packet_center: Vec<HjCenter>,
    paper_claims: PaperClaims,
}

fn hj_center(l0: f64, cfg: &RunConfig) -> HjCenter {
    let terms = (|| {
        let params = cfg.scaling.template.params(l0)?;
        let profile = RadialProfile::new(*params.orbit())?;
        let center = packet_center(&profile)?;
        hj_residual_scan(&[center], &params, &profile, HjOptions::default()).remove(0).result
    })();
    match terms {
        Ok(t) => HjCenter { l0, residual: Some(t.residual), normalized: Some(t.normalized), q: Some(t.q), error: None },
        Err(e) => HjCenter { l0, residual: None, normalized: None, q: None, error: Some(ErrorInfo::from(&e)) },
    }
}

pub fn run_scaling(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let sc = &cfg.scaling;
    let report = correction_scaling(&sc.l0_list, &sc.template, &sc.probes)?;
    let hj: Vec<HjCenter> = sc.l0_list.iter().map(|&l0| hj_center(l0, cfg)).collect();
    let mut files = Vec::new();
    if cfg.output.csv {
        let mut csv = CsvTable::new(&[
            "l0",
            "n0",
            "delta_r",
            "delta_theta",
            "delta_phi",
            "delta_r_numerical",
            "delta_phi_numerical",
            "cross_check",
            "hj_normalized",
        ]);
        for (row, h) in report.rows.iter().zip(&hj) {
            csv.row(vec![
                row.l0.into(),
                row.n0.into(),
                row.delta_r.into(),
                row.delta_theta.into(),
                row.delta_phi.into(),
                row.delta_r_numerical.into(),
                row.delta_phi_numerical.into(),
                row.cross_check.into(),
                h.normalized.into(),
            ]);
        }
        files.push(write_file(out, "scaling.csv", &csv.into_string())?);
    }
    if cfg.output.json {
        let summary = ScalingSummary {
            command: Command::ScalingStudy.name(),
            config: cfg,
            report: &report,
            hj_packet_center: hj,
            paper_claims: paper_claims(),
        };
        files.push(write_file(out, "scaling.json", &to_json(&summary))?);
    }
    Ok(files)
}

fn default_grid(s: &Setup) -> Result<(GridSpec, f64)> {
    let n0 = s.params.orbit().n0();
    let theta = vec![FRAC_PI_2 - 0.05, FRAC_PI_2, FRAC_PI_2 + 0.05];
    if s.profile.is_circular() {
        let phi = (0..9).map(|i| -0.5 + 0.125 * i as f64).collect();
        return Ok((GridSpec { r: vec![n0 * n0], theta, phi }, 0.0));
    }
    let (lo, hi) = s.profile.guarded_domain();
    let r = (1..=9).map(|i| lo + (hi - lo) * i as f64 / 10.0).collect();
    let center = n0 * n0;
    let phi0 = s.profile.phi0(center)?;
    let phi = (0..9).map(|i| phi0 - 0.5 + 0.125 * i as f64).collect();
    Ok((GridSpec { r, theta, phi }, s.profile.t0(center)?))
}

struct FieldRow {
    modulus: Option<f64>,
    phase: Option<f64>,
    q: Option<f64>,
    v: [Option<f64>; 3],
    status: &'static str,
}

#[derive(Serialize)]
struct FieldSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    t: f64,
    half_cycle: u32,
    grid: &'a GridSpec,
    n_points: usize,
    n_ok: usize,
    paper_claims: PaperClaims,
}

pub fn run_field_dump(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let s = setup(cfg)?;
    let (default, t_default) = default_grid(&s)?;
    let grid = cfg.field_dump.grid.clone().unwrap_or(default);
    let t = cfg.field_dump.t.unwrap_or(t_default);
    let k = cfg.field_dump.half_cycle;
    let points = grid.points(t);
    let rows: Vec<FieldRow> = points
        .par_iter()
        .map(|p| {
            let mut status = None;
            let mut keep = |r: Result<f64>| match r {
                Ok(v) => Some(v),
                Err(e) => {
                    status.get_or_insert(e.kind());
                    None
                }
            };
            let modulus = keep(wavefunction_on_branch(p, &s.params, &s.profile, k).map(|w| w.log_modulus.exp()));
            let phase = keep(phase_on_branch(p, &s.params, &s.profile, k));
            let q = keep(quantum_potential_on_branch(p, &s.params, &s.profile, k, 1.0));
            let state = BohmState { t: p.t, r: p.r, theta: p.theta, phi: p.phi, half_cycle: k };
            let v = match velocity(&state, &s.params, &s.profile, VelocityMode::TwoBranch) {
                Ok(v) => [Some(v.v_r), Some(v.v_theta), Some(v.v_phi)],
                Err(e) => {
                    status.get_or_insert(e.kind());
                    [None; 3]
                }
            };
            FieldRow { modulus, phase, q, v, status: status.unwrap_or("ok") }
        })
        .collect();
    let mut files = Vec::new();
    if cfg.output.csv {
        let mut csv = CsvTable::new(&["r", "theta", "phi", "R", "S", "Q", "v_r", "v_theta", "v_phi", "status"]);
        for (p, row) in points.iter().zip(&rows) {
            csv.row(vec![
                p.r.into(),
                p.theta.into(),
                p.phi.into(),
                row.modulus.into(),
                row.phase.into(),
                row.q.into(),
                row.v[0].into(),
                row.v[1].into(),
                row.v[2].into(),
                Cell::Text(row.status),
            ]);
        }
        files.push(write_file(out, "field.csv", &csv.into_string())?);
    }
    if cfg.output.json {
        let summary = FieldSummary {
            command: Command::FieldDump.name(),
            config: cfg,
            t,
            half_cycle: k,
            grid: &grid,
            n_points: rows.len(),
            n_ok: rows.iter().filter(|r| r.status == "ok").count(),
            paper_claims: paper_claims(),
        };
        files.push(write_file(out, "field_summary.json", &to_json(&summary))?);
    }
    Ok(files)
}

#[derive(Serialize)]
struct CompareSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    termination: Termination,
    n_samples: usize,
    comparison: ConicComparison,
    paper_claims: PaperClaims,
}

pub fn run_compare_classical(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let s = setup(cfg)?;
    let traj = trajectory_for(cfg, &s)?;
    check_termination(&traj)?;
    let comparison = compare_with_candidates(&fit_conic(&traj)?, &s.params)?;
    let mut files = Vec::new();
    if cfg.output.csv {
        // classical references share the Bohmian time origin (perihelion at t = 0)
        let times: Vec<f64> = traj.samples.iter().map(|x| x.state.t).collect();
        let [(_, ref_l0), (_, ref_dl0)] = reference_candidates(&s.params, 0.0)?;
        let k_l0 = propagate_kepler(&ref_l0, &times)?;
        let k_dl0 = propagate_kepler(&ref_dl0, &times)?;
        let mut csv = CsvTable::new(&["t", "r", "phi", "r_l0", "phi_l0", "r_delta_l0", "phi_delta_l0"]);
        for ((smp, a), b) in traj.samples.iter().zip(&k_l0).zip(&k_dl0) {
            csv.row(vec![smp.state.t.into(), smp.state.r.into(), smp.state.phi.into(), a.r.into(), a.phi.into(), b.r.into(), b.phi.into()]);
        }
        files.push(write_file(out, "classical.csv", &csv.into_string())?);
    }
    if cfg.output.json {
        let summary = CompareSummary {
            command: Command::CompareClassical.name(),
            config: cfg,
            termination: traj.termination,
            n_samples: traj.samples.len(),
            comparison,
            paper_claims: paper_claims(),
        };
        files.push(write_file(out, "conic_fit.json", &to_json(&summary))?);
    }
    Ok(files)
}
