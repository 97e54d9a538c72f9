//! Run configuration: a single JSON document.
//!
//! ```json
//! { "n0": 50.5, "l0": 50 }
//! ```
//!
//! is a complete config; everything else has a default. Validation errors
//! name the field and, when the field appears in the source text, its line.

use crate::analysis::{ProbeSpec, ScalingTemplate};
use crate::dynamics::{BohmState, GridSpec, VelocityMode};
use crate::error::{Error, Result};
use crate::kinematics::OrbitParams;
use crate::wavepacket::PacketParams;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n0: f64,
    pub l0: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Defaults to `l0^3`.
    #[serde(default)]
    pub sigma2: Option<f64>,
    #[serde(default = "default_winding")]
    pub winding_truncation: u32,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub scaling: ScalingConfig,
    #[serde(default)]
    pub field_dump: FieldDumpConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_delta() -> f64 {
    0.95
}

fn default_winding() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// Defaults to [`BohmState::default_start`].
    pub initial: Option<BohmState>,
    /// In Kepler periods.
    pub duration_periods: f64,
    pub tol: f64,
    pub mode: VelocityMode,
    /// Fill the trajectory CSV's `Q` column.
    pub quantum_potential: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { initial: None, duration_periods: 1.0, tol: 1e-9, mode: VelocityMode::TwoBranch, quantum_potential: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub l0_list: Vec<f64>,
    pub template: ScalingTemplate,
    pub probes: ProbeSpec,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self { l0_list: vec![10.0, 20.0, 50.0, 100.0], template: ScalingTemplate::default(), probes: ProbeSpec::default() }
    }
}

/// Field-dump grid. Without an explicit `grid` the default is 9 radii
/// spread over the guarded domain, `theta` in `{pi/2 - 0.05, pi/2, pi/2 + 0.05}`
/// and 9 azimuths within 0.5 rad of `phi0(n0^2)`, at `t = t0(n0^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct FieldDumpConfig {
    pub t: Option<f64>,
    pub half_cycle: u32,
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Overridden by `--out`.
    pub directory: String,
    /// Trajectory sampling interval in atomic time; defaults to `T_K / 400`.
    pub sample_interval: Option<f64>,
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: "out".into(), sample_interval: None, csv: true, json: true }
    }
}

impl RunConfig {
    pub fn orbit(&self) -> Result<OrbitParams> {
        OrbitParams::new(self.n0, self.l0)
    }

    pub fn packet(&self) -> Result<PacketParams> {
        let sigma2 = self.sigma2.unwrap_or(self.l0.powi(3));
        PacketParams::new(self.orbit()?, self.delta, sigma2, self.winding_truncation)
    }

    pub fn sample_interval(&self) -> Result<f64> {
        Ok(self.output.sample_interval.unwrap_or(self.orbit()?.kepler_period() / 400.0))
    }

    /// Checks every invariant, filling `sigma2` if absent. `source` is the
    /// original text, used only to attach line numbers.
    pub fn validate(&mut self, source: Option<&str>) -> Result<()> {
        let fail = |path: &[&str], message: String| Error::ConfigValidation {
            field: path.join("."),
            line: source.and_then(|s| key_line(s, path)),
            message,
        };
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.n0) {
            return Err(fail(&["n0"], format!("n0 = {} must be positive", self.n0)));
        }
        if !positive(self.l0) {
            return Err(fail(&["l0"], format!("l0 = {} must be positive", self.l0)));
        }
        if self.l0 > self.n0 {
            return Err(fail(&["l0"], format!("requires l0 ≤ n0 (l0 = {}, n0 = {})", self.l0, self.n0)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(fail(&["delta"], format!("delta = {} must lie in (0, 1]", self.delta)));
        }
        let sigma2 = self.sigma2.unwrap_or(self.l0.powi(3));
        if !positive(sigma2) {
            return Err(fail(&["sigma2"], format!("sigma2 = {sigma2} must be positive")));
        }
        self.sigma2 = Some(sigma2);
        self.packet().map_err(|e| fail(&["n0"], e.to_string()))?;

        let sim = &self.simulate;
        if !positive(sim.duration_periods) {
            return Err(fail(&["simulate", "duration_periods"], "must be positive".into()));
        }
        if !(1e-12..=1e-3).contains(&sim.tol) {
            return Err(fail(&["simulate", "tol"], format!("tol = {} outside [1e-12, 1e-3]", sim.tol)));
        }
        if let Some(s) = &sim.initial {
            if !(s.theta > 0.0 && s.theta < PI) {
                return Err(fail(&["simulate", "initial", "theta"], format!("theta = {} outside (0, pi)", s.theta)));
            }
            if !(positive(s.r) && s.t.is_finite() && s.phi.is_finite()) {
                return Err(fail(&["simulate", "initial"], "needs finite t, phi and r > 0".into()));
            }
        }

        let sc = &self.scaling;
        if sc.l0_list.len() < 4 {
            return Err(fail(&["scaling", "l0_list"], format!("needs at least 4 values, got {}", sc.l0_list.len())));
        }
        if sc.l0_list.iter().any(|&l| !positive(l)) {
            return Err(fail(&["scaling", "l0_list"], "values must be positive".into()));
        }
        let lo = sc.l0_list.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = sc.l0_list.iter().copied().fold(0.0, f64::max);
        if hi < 5.0 * lo {
            return Err(fail(&["scaling", "l0_list"], format!("values must span a factor 5 ({lo}..{hi})")));
        }
        let tpl = &sc.template;
        if !(tpl.n0_over_l0 >= 1.0 && tpl.n0_over_l0.is_finite()) {
            return Err(fail(&["scaling", "template", "n0_over_l0"], "requires l0 ≤ n0 (ratio ≥ 1)".into()));
        }
        if !(tpl.delta > 0.0 && tpl.delta <= 1.0) {
            return Err(fail(&["scaling", "template", "delta"], "must lie in (0, 1]".into()));
        }
        if !tpl.sigma2_exponent.is_finite() {
            return Err(fail(&["scaling", "template", "sigma2_exponent"], "must be finite".into()));
        }
        let pr = &sc.probes;
        if pr.radial_fractions.is_empty() || pr.radial_fractions.iter().any(|&f| !(f > 0.0 && f < 1.0)) {
            return Err(fail(&["scaling", "probes", "radial_fractions"], "values must lie in (0, 1)".into()));
        }
        if pr.phase_offsets.is_empty() || pr.phase_offsets.iter().any(|v| !v.is_finite()) {
            return Err(fail(&["scaling", "probes", "phase_offsets"], "needs finite values".into()));
        }
        if !(pr.theta > 0.0 && pr.theta < PI) {
            return Err(fail(&["scaling", "probes", "theta"], "must lie in (0, pi)".into()));
        }
        if !positive(pr.step_scale) {
            return Err(fail(&["scaling", "probes", "step_scale"], "must be positive".into()));
        }

        let fd = &self.field_dump;
        if let Some(t) = fd.t {
            if !t.is_finite() {
                return Err(fail(&["field_dump", "t"], "must be finite".into()));
            }
        }
        if let Some(g) = &fd.grid {
            if g.r.is_empty() || g.theta.is_empty() || g.phi.is_empty() {
                return Err(fail(&["field_dump", "grid"], "every axis needs at least one value".into()));
            }
            if g.theta.iter().any(|&t| !(t > 0.0 && t < PI)) {
                return Err(fail(&["field_dump", "grid", "theta"], "values must lie in (0, pi)".into()));
            }
            if g.r.iter().chain(&g.phi).any(|v| !v.is_finite()) {
                return Err(fail(&["field_dump", "grid"], "values must be finite".into()));
            }
        }

        if let Some(dt) = self.output.sample_interval {
            if !positive(dt) {
                return Err(fail(&["output", "sample_interval"], "must be positive".into()));
            }
        }
        if self.output.directory.is_empty() {
            return Err(fail(&["output", "directory"], "must not be empty".into()));
        }
        Ok(())
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg: RunConfig = serde_json::from_str(text)
        .map_err(|e| Error::ConfigParse { line: e.line(), column: e.column(), message: e.to_string() })?;
    cfg.validate(Some(text))?;
    Ok(cfg)
}

pub fn serialize_config(cfg: &RunConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serialization cannot fail")
}

/// 1-based line of the key at `path`, matching each component only at its
/// own nesting depth inside the previous component's value.
fn key_line(text: &str, path: &[&str]) -> Option<usize> {
    let bytes = text.as_bytes();
    let (mut depth, mut level, mut i) = (0usize, 0usize, 0usize);
    while i < bytes.len() {
        match bytes[i] {
            b'{' | b'[' => depth += 1,
            b'}' | b']' => {
                if level > 0 && depth <= level {
                    return None;
                }
                depth = depth.saturating_sub(1);
            }
            b'"' => {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j] != b'"' {
                    j += if bytes[j] == b'\\' { 2 } else { 1 };
                }
                let is_key = text.get(j + 1..).is_some_and(|rest| rest.trim_start().starts_with(':'));
                if is_key && depth == level + 1 && text.get(i + 1..j) == Some(path[level]) {
                    level += 1;
                    if level == path.len() {
                        return Some(text[..i].matches('\n').count() + 1);
                    }
                }
                i = j;
            }
            _ => {}
        }
        i += 1;
    }
    None
}
