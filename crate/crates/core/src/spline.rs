/// Natural cubic spline through `(x_i, y_i)`, used for tabulated densities.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    /// `x` must be strictly increasing with at least two points.
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Option<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || x.windows(2).any(|w| !(w[0] < w[1])) {
            return None;
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal system for interior second derivatives (Thomas algorithm)
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let h0 = x[i + 1] - x[i];
                let w = h0 / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            let mut sol = vec![0.0; k];
            sol[k - 1] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
            }
            m[1..n - 1].copy_from_slice(&sol);
        }
        Some(Self { x, y, m })
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            i => (i - 1).min(self.x.len() - 2),
        }
    }

    /// Value and first derivative; linear extrapolation outside the table.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let i = self.segment(t);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let slope = |s: f64| {
            let a = x1 - s;
            let b = s - x0;
            -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) + (y1 - y0) / h - (m1 - m0) * h / 6.0
        };
        if t < x0 || t > x1 {
            let edge = if t < x0 { x0 } else { x1 };
            let (ye, de) = (if t < x0 { y0 } else { y1 }, slope(edge));
            return (ye + de * (t - edge), de);
        }
        let a = x1 - t;
        let b = t - x0;
        let value = m0 * a.powi(3) / (6.0 * h)
            + m1 * b.powi(3) / (6.0 * h)
            + (y0 / h - m0 * h / 6.0) * a
            + (y1 / h - m1 * h / 6.0) * b;
        (value, slope(t))
    }
}
