//! Dormand–Prince 5(4) with a PI step-size controller and dense output.
//!
//! The stepper is driven one accepted step at a time so callers can cap the
//! step (event approach) and restart after discontinuities.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    /// Fourth-order interpolant on `[t0, t1]`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s1 = 1.0 - s;
        let c = &self.cont;
        std::array::from_fn(|i| c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i]))))
    }
}

/// Right-hand side `y' = f(t, y)`. An error inside a trial step counts as a
/// rejection (the step is shrunk); a persistent error is returned.
pub trait System<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;
}

impl<const N: usize, F: Fn(f64, &[f64; N]) -> Result<[f64; N]>> System<N> for F {
    fn rhs(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]> {
        self(t, y)
    }
}

#[derive(Debug, Clone)]
pub struct Dopri5<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    k1: [f64; N],
    h: f64,
    rtol: f64,
    atol: f64,
    max_step: f64,
    err_old: f64,
    pub accepted: usize,
    pub rejected: usize,
    /// Sum over accepted steps of the absolute local error estimate, per component.
    pub error_sum: [f64; N],
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

impl<const N: usize> Dopri5<N> {
    pub fn new<S: System<N>>(sys: &S, t: f64, y: [f64; N], rtol: f64, atol: f64, max_step: f64) -> Result<Self> {
        let k1 = sys.rhs(t, &y)?;
        let mut s = Self {
            t,
            y,
            k1,
            h: 0.0,
            rtol,
            atol,
            max_step,
            err_old: 1e-4,
            accepted: 0,
            rejected: 0,
            error_sum: [0.0; N],
        };
        s.h = s.initial_step(sys)?;
        Ok(s)
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.atol + self.rtol * a.abs().max(b.abs())
    }

    fn norm(&self, v: &[f64; N], y: &[f64; N]) -> f64 {
        let sum: f64 = (0..N).map(|i| (v[i] / self.scale(y[i], y[i])).powi(2)).sum();
        (sum / N as f64).sqrt()
    }

    // Hairer–Wanner starting step heuristic.
    fn initial_step<S: System<N>>(&self, sys: &S) -> Result<f64> {
        let d0 = self.norm(&self.y, &self.y);
        let d1 = self.norm(&self.k1, &self.y);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(self.max_step);
        let y1 = axpy(&self.y, h0, &[(1.0, &self.k1)]);
        let d2 = match sys.rhs(self.t + h0, &y1) {
            Ok(k2) => {
                let diff: [f64; N] = std::array::from_fn(|i| k2[i] - self.k1[i]);
                self.norm(&diff, &self.y) / h0
            }
            Err(_) => return Ok(h0 * 1e-2),
        };
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(self.max_step))
    }

    /// Advances by one accepted step no longer than `h_cap`.
    pub fn step<S: System<N>>(&mut self, sys: &S, h_cap: f64) -> Result<DenseStep<N>> {
        let mut last_error: Option<Error> = None;
        loop {
            let h = self.h.min(self.max_step).min(h_cap);
            if !(h > f64::EPSILON * self.t.abs().max(1.0) * 4.0) {
                return Err(last_error.unwrap_or(Error::StepFailure { t: self.t, h }));
            }
            match self.try_step(sys, h) {
                Ok(Some(step)) => return Ok(step),
                Ok(None) => {}
                Err(e) => {
                    self.rejected += 1;
                    self.h = 0.5 * h;
                    last_error = Some(e);
                }
            }
        }
    }

    fn try_step<S: System<N>>(&mut self, sys: &S, h: f64) -> Result<Option<DenseStep<N>>> {
        let (t, y, k1) = (self.t, self.y, self.k1);
        let k2 = sys.rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
        let k3 = sys.rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = sys.rhs(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = sys.rhs(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = sys.rhs(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = sys.rhs(t + h, &y1)?;
        let err: [f64; N] = std::array::from_fn(|i| {
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        let err_norm = {
            let sum: f64 = (0..N).map(|i| (err[i] / self.scale(y[i], y1[i])).powi(2)).sum();
            (sum / N as f64).sqrt()
        };
        if !err_norm.is_finite() {
            self.rejected += 1;
            self.h = 0.25 * h;
            return Ok(None);
        }
        let fac11 = err_norm.powf(ALPHA);
        if err_norm <= 1.0 {
            let fac = (fac11 / self.err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            self.err_old = err_norm.max(1e-4);
            self.h = h / fac;
            self.accepted += 1;
            for i in 0..N {
                self.error_sum[i] += err[i].abs();
            }
            let ydiff: [f64; N] = std::array::from_fn(|i| y1[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let cont = [
                y,
                ydiff,
                bspl,
                std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
                std::array::from_fn(|i| {
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                }),
            ];
            let step = DenseStep { t0: t, t1: t + h, y0: y, y1, cont };
            self.t = t + h;
            self.y = y1;
            self.k1 = k7;
            Ok(Some(step))
        } else {
            self.rejected += 1;
            self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
            Ok(None)
        }
    }

    /// Current derivative (first stage of the next step).
    pub fn derivative(&self) -> &[f64; N] {
        &self.k1
    }
}
