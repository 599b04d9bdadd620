//! Adaptive Simpson quadrature and a natural cubic spline, the two
//! numerical primitives behind the `δ` and `Λ` line integrals.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Result of an adaptive integration: value plus the accumulated
/// Richardson error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: Complex64,
    pub error: f64,
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson rule for a complex-valued integrand on `[a, b]` with
/// absolute tolerance `tol`.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        });
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut err = 0.0;
    let mut failed = false;
    let value = simpson_step(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol,
        MAX_DEPTH,
        &mut err,
        &mut failed,
    );
    if failed {
        return Err(Error::Quadrature { estimate: err });
    }
    Ok(Integral { value, error: err })
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
    err: &mut f64,
    failed: &mut bool,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.norm() <= 15.0 * tol || (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
        *err += delta.norm() / 15.0;
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *err += delta.norm() / 15.0;
        *failed = true;
        return left + right + delta / 15.0;
    }
    simpson_step(
        f,
        a,
        m,
        fa,
        flm,
        fm,
        left,
        0.5 * tol,
        depth - 1,
        err,
        failed,
    ) + simpson_step(
        f,
        m,
        b,
        fm,
        frm,
        fb,
        right,
        0.5 * tol,
        depth - 1,
        err,
        failed,
    )
}

/// Integrates over consecutive panels `[breaks[i], breaks[i+1]]`, splitting
/// the tolerance evenly. Break points let the caller align panels with
/// spline knots or with the peak of a near-singular integrand.
pub fn adaptive_simpson_panels(
    f: &dyn Fn(f64) -> Complex64,
    breaks: &[f64],
    tol: f64,
) -> Result<Integral> {
    let panels = breaks.len().saturating_sub(1).max(1);
    let mut total = Integral {
        value: Complex64::new(0.0, 0.0),
        error: 0.0,
    };
    for w in breaks.windows(2) {
        let part = adaptive_simpson(f, w[0], w[1], tol / panels as f64)?;
        total.value += part.value;
        total.error += part.error;
    }
    Ok(total)
}

/// Natural cubic spline through `(x_i, y_i)`, `x` strictly increasing.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidInput(
                "spline needs at least two matching knots".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "spline knots must be strictly increasing".into(),
            ));
        }
        // Second derivatives from the tridiagonal system with natural ends.
        let mut m = vec![0.0; n];
        if n > 2 {
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            let mut upper = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            // Thomas algorithm on rows 1..n-1 (sub-diagonal entry is h0).
            for i in 2..n - 1 {
                let h0 = x[i] - x[i - 1];
                let w = h0 / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[n - 2] = rhs[n - 2] / diag[n - 2];
            for i in (1..n - 2).rev() {
                m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Evaluates inside the knot range; outside it returns `None`.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let n = self.x.len();
        if !(t >= self.x[0] && t <= self.x[n - 1]) {
            return None;
        }
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return Some(self.y[i]),
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        Some(
            a * self.y[i]
                + b * self.y[i + 1]
                + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_gaussian() {
        let f = |x: f64| Complex64::new((-x * x).exp(), 0.0);
        let r = adaptive_simpson(&f, -10.0, 10.0, 1e-12).unwrap();
        assert!((r.value.re - std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn simpson_handles_peaked_complex_integrand() {
        // ∫_{-5}^{5} 1/(x - iε) dx = log((5 - iε)/(-5 - iε)) = iπ - 2i atan(ε/5)... check closed form.
        let eps = 1e-3;
        let z = Complex64::new(0.0, eps);
        let f = |x: f64| 1.0 / (Complex64::new(x, 0.0) - z);
        let r = adaptive_simpson_panels(&f, &[-5.0, 0.0, 5.0], 1e-10).unwrap();
        let exact = (Complex64::new(5.0, 0.0) - z).ln() - (Complex64::new(-5.0, 0.0) - z).ln();
        assert!((r.value - exact).norm() < 1e-9, "{} vs {}", r.value, exact);
    }

    #[test]
    fn spline_reproduces_cubic_interior_and_knots() {
        let x: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        let s = CubicSpline::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(s.eval(*xi).unwrap(), *yi);
        }
        // Interior accuracy for a smooth function, O(h^4).
        for k in 0..100 {
            let t = -1.5 + 0.03 * k as f64;
            assert!((s.eval(t).unwrap() - t.sin()).abs() < 1e-5);
        }
        assert!(s.eval(5.0).is_none());
    }
}
