//! Classical Coulomb radial kinematics in atomic units (hbar = m = e = 1).
//!
//! Everything the wavepacket phase needs from the classical problem lives
//! here: the radial momentum `p0(r)`, the turning radii, the radial action
//! `S0(r)` and its parameter derivatives `phi0 = -dS0/dl0`, `t0 = dS0/dE`
//! and `f0 = d^2 S0/dE^2`.
//!
//! Integrals between the turning points use the substitution
//! `r = c - h cos u` with `c = (r+ + r-)/2`, `h = (r+ - r-)/2`. Because
//! `(r - r-)(r+ - r) = h^2 sin^2 u` the inverse-square-root endpoint
//! behaviour of `1/p0` cancels against `dr/du = h sin u`, and every
//! integrand below is analytic on `[0, pi]`.
//!
//! All three primitives are anchored to zero at the inner turning point.

use crate::error::{Error, Result};
use crate::interp::HermiteTable;
use crate::quadrature;
use std::f64::consts::PI;

/// Relative distance kept from each turning point.
pub const CLAMP_EPS: f64 = 1e-6;
/// Number of memoization nodes (uniform in the substitution variable `u`).
pub const GRID_POINTS: usize = 2048;
/// Relative error allowed between table lookups and direct quadrature.
pub const ERR_BUDGET: f64 = 1e-9;
/// Guard threshold as a fraction of the maximal radial momentum.
pub const GUARD_FRACTION: f64 = 1e-3;
/// Relative target of the direct quadratures (tighter than the 1e-10 the
/// tables need, the integrands are analytic so this costs nothing).
const QUAD_TOL: f64 = 1e-13;
/// Absolute slack before a negative radicand of `p0^2` is an error.
const RADICAND_SLACK: f64 = 1e-12;
/// Relative step of the energy finite difference behind `f0`.
const F0_REL_STEP: f64 = 1e-5;
/// Allowed disagreement between the central difference and its Richardson value.
const F0_RICHARDSON_TOL: f64 = 1e-4;

/// Bound-state energy `E_n = -1/(2 n^2)` in hartree.
pub fn energy(n0: f64) -> Result<f64> {
    if !(n0 >= 1.0) || !n0.is_finite() {
        return Err(Error::Domain(format!("principal quantum number n0 = {n0} must be >= 1")));
    }
    Ok(-0.5 / (n0 * n0))
}

/// Orbit labels `(n0, l0)` of the coherent state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitParams {
    n0: f64,
    l0: f64,
    energy: f64,
}

impl OrbitParams {
    pub fn new(n0: f64, l0: f64) -> Result<Self> {
        let energy = energy(n0)?;
        if !(l0 > 0.0) || !l0.is_finite() {
            return Err(Error::Domain(format!("angular momentum l0 = {l0} must be > 0")));
        }
        if l0 > n0 {
            return Err(Error::Domain(format!("l0 = {l0} violates l0 <= n0 (n0 = {n0})")));
        }
        Ok(Self { n0, l0, energy })
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// `sqrt(1 + 2 E l0^2)`, evaluated as `sqrt((1 - l0/n0)(1 + l0/n0))`
    /// so that `l0 = n0` gives exactly zero.
    pub fn eccentricity(&self) -> f64 {
        let q = self.l0 / self.n0;
        ((1.0 - q) * (1.0 + q)).max(0.0).sqrt()
    }

    /// Kepler period `2 pi n0^3`.
    pub fn kepler_period(&self) -> f64 {
        2.0 * PI * self.n0.powi(3)
    }

    pub fn is_circular(&self) -> bool {
        self.l0 == self.n0
    }
}

/// Turning radii `r_pm = n0^2 (1 pm e)`.
pub fn turning_points(params: &OrbitParams) -> (f64, f64) {
    let a = params.n0 * params.n0;
    let e = params.eccentricity();
    (a * (1.0 - e), a * (1.0 + e))
}

/// Mean radial momentum `sqrt(2E - l0^2/r^2 + 2/r)` on its non-negative branch.
///
/// The radicand is evaluated in factored form `2|E| (r - r-)(r+ - r) / r^2`,
/// which is exact at the turning points.
pub fn radial_momentum(r: f64, params: &OrbitParams) -> Result<f64> {
    let (rm, rp) = turning_points(params);
    let radicand = -2.0 * params.energy * (r - rm) * (rp - r) / (r * r);
    if !(radicand >= -RADICAND_SLACK) {
        return Err(Error::OutOfDomain { r, lo: rm, hi: rp });
    }
    Ok(radicand.max(0.0).sqrt())
}

/// Geometry of one Coulomb orbit `(E, l)`; also used for the energy-shifted
/// orbits behind the `f0` finite difference.
#[derive(Debug, Clone, Copy)]
struct Geometry {
    energy: f64,
    l0: f64,
    ecc: f64,
    r_minus: f64,
    r_plus: f64,
    center: f64,
    half_width: f64,
    /// `sqrt(2|E|)`
    k: f64,
}

impl Geometry {
    fn from_orbit(params: &OrbitParams) -> Self {
        let (r_minus, r_plus) = turning_points(params);
        Self::build(params.energy, params.l0, params.eccentricity(), r_minus, r_plus)
    }

    fn from_energy(energy: f64, l0: f64) -> Result<Self> {
        let e2 = 1.0 + 2.0 * energy * l0 * l0;
        if !(energy < 0.0) || !(e2 >= 0.0) {
            return Err(Error::Domain(format!("no bound orbit for E = {energy}, l = {l0}")));
        }
        let a = -0.5 / energy;
        let e = e2.sqrt();
        Ok(Self::build(energy, l0, e, a * (1.0 - e), a * (1.0 + e)))
    }

    fn build(energy: f64, l0: f64, ecc: f64, r_minus: f64, r_plus: f64) -> Self {
        Self {
            energy,
            l0,
            ecc,
            r_minus,
            r_plus,
            center: 0.5 * (r_minus + r_plus),
            half_width: 0.5 * (r_plus - r_minus),
            k: (-2.0 * energy).sqrt(),
        }
    }

    fn radius(&self, u: f64) -> f64 {
        self.center - self.half_width * u.cos()
    }

    /// Inverse of `radius`, using the half-angle forms that stay accurate
    /// next to either turning point.
    fn u_of(&self, r: f64) -> f64 {
        if r <= self.center {
            let s = ((r - self.r_minus) / (2.0 * self.half_width)).clamp(0.0, 1.0);
            2.0 * s.sqrt().asin()
        } else {
            let s = ((self.r_plus - r) / (2.0 * self.half_width)).clamp(0.0, 1.0);
            PI - 2.0 * s.sqrt().asin()
        }
    }

    fn contains(&self, r: f64) -> bool {
        r >= self.r_minus && r <= self.r_plus
    }

    fn p0_at(&self, u: f64) -> f64 {
        self.k * self.half_width * u.sin() / self.radius(u)
    }

    // Transformed integrands d/du of S0, phi0, t0.
    fn ds0_du(&self, u: f64) -> f64 {
        let s = u.sin();
        self.k * self.half_width * self.half_width * s * s / self.radius(u)
    }

    fn dphi0_du(&self, u: f64) -> f64 {
        self.l0 / (self.k * self.radius(u))
    }

    fn dt0_du(&self, u: f64) -> f64 {
        self.radius(u) / self.k
    }

    /// `(dc/dE, dh/dE)` of the substitution centre and half-width.
    fn energy_rates(&self) -> (f64, f64) {
        let e0 = self.energy;
        let dc = 0.5 / (e0 * e0);
        let c = self.center;
        (dc, dc * self.ecc + c * self.l0 * self.l0 / self.ecc)
    }

    /// `d/dE [r(u; E) / k(E)]` at fixed `u`; analytic and bounded on `[0, pi]`.
    fn dt0_du_energy_rate(&self, u: f64) -> f64 {
        let (dc, dh) = self.energy_rates();
        let k = self.k;
        (dc - dh * u.cos()) / k + self.radius(u) / (k * k * k)
    }

    /// Moving-endpoint part of `f0` multiplied by `sin u`:
    /// `(dt0/du) (dh/dE cos u - dc/dE) / h`, together with its `u`-derivative.
    fn f0_endpoint_sin(&self, u: f64) -> (f64, f64) {
        let (dc, dh) = self.energy_rates();
        let (s, c) = u.sin_cos();
        let h = self.half_width;
        let w = dh * c - dc;
        let value = self.dt0_du(u) * w / h;
        let slope = (h * s / self.k) * w / h - self.dt0_du(u) * dh * s / h;
        (value, slope)
    }

    fn f0_bulk_between(&self, u0: f64, u1: f64) -> Result<f64> {
        // the two terms of (c' - h' cos u)/k cancel near u = 0
        let (dc, _) = self.energy_rates();
        let floor = QUAD_TOL * (dc / self.k) * (u1 - u0).abs();
        quadrature::integrate_abs(|u| self.dt0_du_energy_rate(u), u0, u1, QUAD_TOL, floor)
    }

    fn s0_between(&self, u0: f64, u1: f64) -> Result<f64> {
        quadrature::integrate(|u| self.ds0_du(u), u0, u1, QUAD_TOL)
    }

    fn phi0_between(&self, u0: f64, u1: f64) -> Result<f64> {
        quadrature::integrate(|u| self.dphi0_du(u), u0, u1, QUAD_TOL)
    }

    fn t0_between(&self, u0: f64, u1: f64) -> Result<f64> {
        quadrature::integrate(|u| self.dt0_du(u), u0, u1, QUAD_TOL)
    }
}

/// Values of `S0, phi0, t0` and of `dt0/dE` accumulated over one full
/// perihelion-to-aphelion sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfCycle {
    pub action: f64,
    pub phi0: f64,
    pub t0: f64,
    /// Energy derivative of the half radial period.
    pub f0: f64,
}

/// Phase anchors and their radial derivatives on half-cycle `k` of the
/// continued radial motion (`k` even: outgoing, `k` odd: incoming).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchors {
    pub p0: f64,
    pub s0: f64,
    pub phi0: f64,
    pub t0: f64,
    pub f0: f64,
    pub ds0: f64,
    pub dphi0: f64,
    pub dt0: f64,
    pub df0: f64,
}

#[derive(Debug, Clone)]
struct Tables {
    geometry: Geometry,
    u_lo: f64,
    u_hi: f64,
    guard_lo: f64,
    guard_hi: f64,
    p0_max: f64,
    action: HermiteTable,
    phi0: HermiteTable,
    t0: HermiteTable,
    /// `f0(u) sin u`, which is analytic across the table.
    f0_sin: HermiteTable,
    half: HalfCycle,
}

#[derive(Debug, Clone)]
enum Shape {
    /// `l0 = n0`: the radial domain collapses to `r = n0^2`.
    Circular,
    Eccentric(Box<Tables>),
}

/// Memoized radial evaluators for one orbit. Immutable after construction.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    params: OrbitParams,
    r_minus: f64,
    r_plus: f64,
    shape: Shape,
}

impl RadialProfile {
    pub fn new(params: OrbitParams) -> Result<Self> {
        let (r_minus, r_plus) = turning_points(&params);
        if params.is_circular() {
            return Ok(Self { params, r_minus, r_plus, shape: Shape::Circular });
        }
        let g = Geometry::from_orbit(&params);
        let s_lo = CLAMP_EPS * r_minus / (2.0 * g.half_width);
        let s_hi = CLAMP_EPS * r_plus / (2.0 * g.half_width);
        if s_lo >= 1.0 || s_hi >= 1.0 {
            return Err(Error::Domain(format!(
                "orbit (n0 = {}, l0 = {}) is too close to circular for the clamped WKB domain",
                params.n0, params.l0
            )));
        }
        let u_lo = 2.0 * s_lo.sqrt().asin();
        let u_hi = PI - 2.0 * s_hi.sqrt().asin();
        if u_lo >= u_hi {
            return Err(Error::Domain("empty clamped radial domain".into()));
        }

        let (u_peak, p0_max) = maximize_p0(&g);
        let p_min = GUARD_FRACTION * p0_max;
        let ug_lo = bisect(|u| g.p0_at(u) - p_min, 0.0, u_peak);
        let ug_hi = bisect(|u| p_min - g.p0_at(u), u_peak, PI);
        let guard_lo = g.radius(u_lo.max(ug_lo));
        let guard_hi = g.radius(u_hi.min(ug_hi));

        let n = GRID_POINTS;
        let du = (u_hi - u_lo) / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| u_lo + du * i as f64).collect();

        let mut action = Vec::with_capacity(n);
        let mut phi0 = Vec::with_capacity(n);
        let mut t0 = Vec::with_capacity(n);
        let mut sa = g.s0_between(0.0, u_lo)?;
        let mut sp = g.phi0_between(0.0, u_lo)?;
        let mut st = g.t0_between(0.0, u_lo)?;
        for (i, &u) in nodes.iter().enumerate() {
            if i > 0 {
                let u_prev = nodes[i - 1];
                sa += g.s0_between(u_prev, u)?;
                sp += g.phi0_between(u_prev, u)?;
                st += g.t0_between(u_prev, u)?;
            }
            action.push(sa);
            phi0.push(sp);
            t0.push(st);
        }

        // f0 = d t0 / dE at fixed r. Writing t0 = int_0^{u(r;E)} r(u;E)/k(E) du,
        // the derivative splits into a bounded bulk integral and the endpoint
        // term (dt0/du) du/dE, where du/dE = (h' cos u - c') / (h sin u) at
        // fixed r. Multiplying by sin u leaves a function analytic on [0, pi].
        let mut f0_sin = Vec::with_capacity(n);
        let mut f0_sin_slope = Vec::with_capacity(n);
        let mut bulk = g.f0_bulk_between(0.0, u_lo)?;
        for (i, &u) in nodes.iter().enumerate() {
            if i > 0 {
                bulk += g.f0_bulk_between(nodes[i - 1], u)?;
            }
            let (s, c) = u.sin_cos();
            let (end, end_slope) = g.f0_endpoint_sin(u);
            f0_sin.push(bulk * s + end);
            f0_sin_slope.push(bulk * c + g.dt0_du_energy_rate(u) * s + end_slope);
        }

        let half = HalfCycle {
            action: g.s0_between(0.0, PI)?,
            phi0: g.phi0_between(0.0, PI)?,
            t0: g.t0_between(0.0, PI)?,
            // r+ moves with E but sits at the fixed u = pi: no endpoint term
            f0: g.f0_bulk_between(0.0, PI)?,
        };

        let slopes = |f: &dyn Fn(f64) -> f64| nodes.iter().map(|&u| f(u)).collect::<Vec<_>>();
        let tables = Tables {
            geometry: g,
            u_lo,
            u_hi,
            guard_lo,
            guard_hi,
            p0_max,
            action: HermiteTable::new(u_lo, du, action, slopes(&|u| g.ds0_du(u))),
            phi0: HermiteTable::new(u_lo, du, phi0, slopes(&|u| g.dphi0_du(u))),
            t0: HermiteTable::new(u_lo, du, t0, slopes(&|u| g.dt0_du(u))),
            f0_sin: HermiteTable::new(u_lo, du, f0_sin, f0_sin_slope),
            half,
        };
        Ok(Self { params, r_minus, r_plus, shape: Shape::Eccentric(Box::new(tables)) })
    }

    pub fn params(&self) -> &OrbitParams {
        &self.params
    }

    pub fn turning_points(&self) -> (f64, f64) {
        (self.r_minus, self.r_plus)
    }

    pub fn is_circular(&self) -> bool {
        matches!(self.shape, Shape::Circular)
    }

    pub fn err_budget(&self) -> f64 {
        ERR_BUDGET
    }

    fn tables(&self) -> Result<&Tables> {
        match &self.shape {
            Shape::Eccentric(t) => Ok(t),
            Shape::Circular => Err(Error::Domain(
                "circular orbit: radial phase functions are degenerate (f0 unbounded)".into(),
            )),
        }
    }

    /// `[r-(1+eps), r+(1-eps)]`, the stored domain of the tables.
    pub fn clamped_domain(&self) -> (f64, f64) {
        match &self.shape {
            Shape::Circular => (self.r_minus, self.r_plus),
            Shape::Eccentric(t) => (t.geometry.radius(t.u_lo), t.geometry.radius(t.u_hi)),
        }
    }

    /// Clamped domain further restricted to `p0 >= p_min`.
    pub fn guarded_domain(&self) -> (f64, f64) {
        match &self.shape {
            Shape::Circular => (self.r_minus, self.r_plus),
            Shape::Eccentric(t) => (t.guard_lo, t.guard_hi),
        }
    }

    /// Largest radial momentum over the orbit (zero for a circle).
    pub fn p0_max(&self) -> f64 {
        match &self.shape {
            Shape::Circular => 0.0,
            Shape::Eccentric(t) => t.p0_max,
        }
    }

    pub fn p_min(&self) -> f64 {
        GUARD_FRACTION * self.p0_max()
    }

    pub fn half_cycle(&self) -> Result<HalfCycle> {
        Ok(self.tables()?.half)
    }

    /// Radii of the memoization nodes.
    pub fn grid_radii(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Circular => vec![self.r_minus],
            Shape::Eccentric(t) => {
                (0..t.action.len()).map(|i| t.geometry.radius(t.action.node(i))).collect()
            }
        }
    }

    pub fn radial_momentum(&self, r: f64) -> Result<f64> {
        radial_momentum(r, &self.params)
    }

    fn check_closed(&self, r: f64) -> Result<()> {
        if r >= self.r_minus && r <= self.r_plus {
            Ok(())
        } else {
            Err(Error::OutOfDomain { r, lo: self.r_minus, hi: self.r_plus })
        }
    }

    fn check_clamped(&self, r: f64) -> Result<()> {
        let (lo, hi) = self.clamped_domain();
        if r >= lo && r <= hi {
            Ok(())
        } else {
            Err(Error::OutOfDomain { r, lo, hi })
        }
    }

    /// Table lookup when `r` lies in the clamped domain, `None` otherwise.
    fn lookup(&self, r: f64, pick: fn(&Tables) -> &HermiteTable) -> Result<Option<f64>> {
        let t = self.tables()?;
        if self.check_clamped(r).is_err() {
            return Ok(None);
        }
        let u = t.geometry.u_of(r).clamp(t.u_lo, t.u_hi);
        Ok(Some(pick(t).eval(u).0))
    }

    /// `S0(r) = int_{r-}^{r} p0 dr'`.
    pub fn radial_action(&self, r: f64) -> Result<f64> {
        self.check_closed(r)?;
        if self.is_circular() {
            return Ok(0.0);
        }
        match self.lookup(r, |t| &t.action)? {
            Some(v) => Ok(v),
            None => self.radial_action_direct(r),
        }
    }

    /// `phi0(r) = -dS0/dl0 = int_{r-}^{r} l0 / (r'^2 p0) dr'`.
    pub fn phi0(&self, r: f64) -> Result<f64> {
        self.check_closed(r)?;
        if self.is_circular() {
            return Ok(0.0);
        }
        match self.lookup(r, |t| &t.phi0)? {
            Some(v) => Ok(v),
            None => self.phi0_direct(r),
        }
    }

    /// `t0(r) = dS0/dE = int_{r-}^{r} dr' / p0`.
    pub fn t0(&self, r: f64) -> Result<f64> {
        self.check_closed(r)?;
        if self.is_circular() {
            return Ok(0.0);
        }
        match self.lookup(r, |t| &t.t0)? {
            Some(v) => Ok(v),
            None => self.t0_direct(r),
        }
    }

    /// `f0(r) = d t0 / dE` at fixed `r`, from the memoized table. Only defined
    /// on the clamped domain (it diverges at both turning points).
    pub fn f0(&self, r: f64) -> Result<f64> {
        let t = self.tables()?;
        self.check_clamped(r)?;
        let u = t.geometry.u_of(r).clamp(t.u_lo, t.u_hi);
        Ok(t.f0_sin.eval(u).0 / u.sin())
    }

    pub fn radial_action_direct(&self, r: f64) -> Result<f64> {
        self.check_closed(r)?;
        let g = &self.tables()?.geometry;
        g.s0_between(0.0, g.u_of(r))
    }

    pub fn phi0_direct(&self, r: f64) -> Result<f64> {
        self.check_closed(r)?;
        let g = &self.tables()?.geometry;
        g.phi0_between(0.0, g.u_of(r))
    }

    pub fn t0_direct(&self, r: f64) -> Result<f64> {
        self.check_closed(r)?;
        let g = &self.tables()?.geometry;
        g.t0_between(0.0, g.u_of(r))
    }

    /// `f0` by a central finite difference of `t0(r; E)` in the energy with
    /// the moving lower limit `r-(E)` honoured (no table). Next to the
    /// turning points the step is limited by the distance to `r-(E)`, and
    /// the Richardson check reports loss of significance where the
    /// difference cannot resolve the `1/sin u` growth.
    pub fn f0_direct(&self, r: f64) -> Result<f64> {
        let t = self.tables()?;
        self.check_clamped(r)?;
        f0_by_energy_difference(&self.params, &t.geometry, r)
    }

    /// Anchors for half-cycle `k` at radius `r` (clamped domain).
    ///
    /// Reflecting at the turning points continues each primitive as
    /// `F_k(r) = k F(r+) + F(r)` (k even) or `(k+1) F(r+) - F(r)` (k odd);
    /// radial derivatives pick up the branch sign `(-1)^k`.
    pub fn anchors(&self, r: f64, k: u32) -> Result<Anchors> {
        let t = self.tables()?;
        self.check_clamped(r)?;
        let g = &t.geometry;
        let u = g.u_of(r).clamp(t.u_lo, t.u_hi);
        let p0 = self.radial_momentum(r)?;
        let s0 = t.action.eval(u).0;
        let phi0 = t.phi0.eval(u).0;
        let t0 = t.t0.eval(u).0;
        let f0 = t.f0_sin.eval(u).0 / u.sin();

        let kf = k as f64;
        let even = k % 2 == 0;
        let sign = if even { 1.0 } else { -1.0 };
        let cont = |base: f64, half: f64| if even { kf * half + base } else { (kf + 1.0) * half - base };
        let h = &t.half;
        Ok(Anchors {
            p0,
            s0: cont(s0, h.action),
            phi0: cont(phi0, h.phi0),
            t0: cont(t0, h.t0),
            f0: cont(f0, h.f0),
            ds0: sign * p0,
            dphi0: sign * self.params.l0 / (r * r * p0),
            dt0: sign / p0,
            df0: -sign / (p0 * p0 * p0),
        })
    }

    /// Time and unscaled azimuthal sweep `(dt, dphi0)` of the excursion from
    /// `r` to the nearer turning point and back.
    pub fn turning_excursion(&self, r: f64, outer: bool) -> Result<(f64, f64)> {
        let g = &self.tables()?.geometry;
        let u = g.u_of(r);
        if outer {
            Ok((2.0 * g.t0_between(u, PI)?, 2.0 * g.phi0_between(u, PI)?))
        } else {
            Ok((2.0 * g.t0_between(0.0, u)?, 2.0 * g.phi0_between(0.0, u)?))
        }
    }
}

/// Largest `p0(u)` by golden-section search; returns `(u_peak, p0_max)`.
fn maximize_p0(g: &Geometry) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, PI);
    while (b - a) > 1e-12 {
        let c = b - inv_phi * (b - a);
        let d = a + inv_phi * (b - a);
        if g.p0_at(c) > g.p0_at(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let u = 0.5 * (a + b);
    (u, g.p0_at(u))
}

/// Root of an increasing function on `[a, b]` (assumes `f(a) <= 0 <= f(b)`).
fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Two-sided energy derivative of `t0(r; E)` with the energy-dependent lower
/// limit `r-(E)` honoured, Richardson-checked against the half step.
fn f0_by_energy_difference(params: &OrbitParams, g: &Geometry, r: f64) -> Result<f64> {
    let e0 = params.energy;
    let l0 = params.l0;
    let ecc = params.eccentricity();
    // d r_pm / dE for r_pm = -(1 pm e) / (2E), de/dE = l0^2 / e
    let de = l0 * l0 / ecc;
    let drm = (1.0 - ecc) / (2.0 * e0 * e0) + de / (2.0 * e0);
    let drp = (1.0 + ecc) / (2.0 * e0 * e0) - de / (2.0 * e0);
    let room = ((r - g.r_minus) / drm.abs()).min((g.r_plus - r) / drp.abs());
    let step = (e0.abs() * F0_REL_STEP).max(1e-12).min(0.25 * room);
    if !(step > 0.0) {
        return Err(Error::OutOfDomain { r, lo: g.r_minus, hi: g.r_plus });
    }
    let t_at = |energy: f64| -> Result<f64> {
        let gs = Geometry::from_energy(energy, l0)?;
        if !gs.contains(r) {
            return Err(Error::OutOfDomain { r, lo: gs.r_minus, hi: gs.r_plus });
        }
        gs.t0_between(0.0, gs.u_of(r))
    };
    let central = |h: f64| -> Result<f64> { Ok((t_at(e0 + h)? - t_at(e0 - h)?) / (2.0 * h)) };
    let coarse = central(step)?;
    let fine = central(0.5 * step)?;
    let refined = (4.0 * fine - coarse) / 3.0;
    let scale = refined.abs().max(params.n0.powi(5));
    if (coarse - refined).abs() > F0_RICHARDSON_TOL * scale {
        return Err(Error::LossOfSignificance { quantity: "f0", coarse, refined });
    }
    Ok(refined)
}
