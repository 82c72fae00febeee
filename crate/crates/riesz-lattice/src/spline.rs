//! Natural cubic spline on a uniform grid, used to tabulate the slow
//! theta-quotient integrals once and evaluate them cheaply afterwards.

/// Natural cubic spline through (x_i, y_i) with uniformly spaced x_i.
#[derive(Debug, Clone)]
pub struct UniformCubicSpline {
    x0: f64,
    h: f64,
    ys: Vec<f64>,
    /// second derivatives at the knots
    m2: Vec<f64>,
}

impl UniformCubicSpline {
    pub fn new(x0: f64, h: f64, ys: Vec<f64>) -> Self {
        let n = ys.len();
        assert!(n >= 3 && h > 0.0);
        // natural boundary: m2[0] = m2[n-1] = 0; Thomas algorithm for the
        // tridiagonal system h/6 * (m2[i-1] + 4 m2[i] + m2[i+1]) = d2 y
        let mut m2 = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            diag[i] = 4.0;
            rhs[i] = 6.0 * (ys[i + 1] - 2.0 * ys[i] + ys[i - 1]) / (h * h);
        }
        for i in 2..n - 1 {
            let w = 1.0 / diag[i - 1];
            diag[i] -= w;
            rhs[i] -= w * rhs[i - 1];
        }
        for i in (1..n - 1).rev() {
            m2[i] = (rhs[i] - m2[i + 1]) / diag[i];
        }
        UniformCubicSpline { x0, h, ys, m2 }
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.ys.len() - 1) as f64
    }

    /// Evaluate at `x`, which must lie within the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.ys.len();
        let pos = (x - self.x0) / self.h;
        let i = (pos.floor() as usize).min(n - 2);
        let a = self.x0 + self.h * i as f64;
        let t = (x - a) / self.h;
        let s = 1.0 - t;
        // standard cubic-spline segment form with second derivatives m2
        s * self.ys[i]
            + t * self.ys[i + 1]
            + self.h * self.h / 6.0
                * ((s * s * s - s) * self.m2[i] + (t * t * t - t) * self.m2[i + 1])
    }
}
