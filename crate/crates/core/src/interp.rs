//! Cubic Hermite tables on a uniform abscissa grid.

/// Values and exact first derivatives sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteTable {
    /// `values[i]` and `slopes[i]` are the function and derivative at `x0 + i*dx`.
    pub fn new(x0: f64, dx: f64, values: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert!(values.len() >= 2 && values.len() == slopes.len());
        assert!(dx > 0.0);
        Self { x0, dx, values, slopes }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.dx * (self.values.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x0 + self.dx * i as f64
    }

    /// Interpolated value and derivative. Arguments slightly outside the grid
    /// are extrapolated from the end cells.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.values.len();
        let pos = (x - self.x0) / self.dx;
        let i = (pos.floor().max(0.0) as usize).min(n - 2);
        let s = pos - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.dx, self.slopes[i + 1] * self.dx);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let value = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        let deriv = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / self.dx;
        (value, deriv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |x: f64| 2.0 * x * x * x - x + 0.5;
        let df = |x: f64| 6.0 * x * x - 1.0;
        let xs: Vec<f64> = (0..11).map(|i| -1.0 + 0.2 * i as f64).collect();
        let t = HermiteTable::new(
            -1.0,
            0.2,
            xs.iter().map(|&x| f(x)).collect(),
            xs.iter().map(|&x| df(x)).collect(),
        );
        for k in 0..97 {
            let x = -1.0 + 2.0 * k as f64 / 96.0;
            let (v, d) = t.eval(x);
            assert!((v - f(x)).abs() < 1e-13);
            assert!((d - df(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn nodes_are_hit() {
        let t = HermiteTable::new(0.0, 0.5, vec![1.0, 4.0, 9.0], vec![0.0, 0.0, 0.0]);
        assert_eq!(t.eval(0.5).0, 4.0);
        assert_eq!(t.eval(1.0).0, 9.0);
        assert_eq!(t.x_max(), 1.0);
    }
}
