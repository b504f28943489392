//! Internal numerical helpers: adaptive panel quadrature and monotone
//! cubic interpolation.

use crate::quadrature::gauss_legendre;
use std::sync::OnceLock;

fn gl15() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(15))
}

pub(crate) fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

fn gl_panel(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Adaptive Gauss-Legendre integration over `[knots[0], knots[last]]` with
/// panel boundaries seeded at the interior knots. Each panel is accepted
/// when halving changes its value by less than `rel_tol` relatively or
/// `abs_floor` absolutely.
pub(crate) fn integrate_seeded(
    mut f: impl FnMut(f64) -> f64,
    knots: &[f64],
    rel_tol: f64,
    abs_floor_scale: f64,
) -> f64 {
    debug_assert!(knots.windows(2).all(|w| w[1] >= w[0]));
    let rule = gl15();
    let mut stack: Vec<(f64, f64, f64, u32)> = Vec::new();
    let mut scale = abs_floor_scale;
    for win in knots.windows(2) {
        if win[1] > win[0] {
            let v = gl_panel(&mut f, win[0], win[1], rule);
            scale += v.abs();
            stack.push((win[0], win[1], v, 0));
        }
    }
    let mut total = 0.0;
    while let Some((a, b, coarse, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let left = gl_panel(&mut f, a, m, rule);
        let right = gl_panel(&mut f, m, b, rule);
        let fine = left + right;
        let err = (fine - coarse).abs();
        if err <= rel_tol * fine.abs() + 1e-16 * scale || depth >= 40 || m <= a || m >= b {
            total += fine;
        } else {
            stack.push((a, m, left, depth + 1));
            stack.push((m, b, right, depth + 1));
        }
    }
    total
}

/// Composite fixed-width Gauss-Legendre panels of `f` on `[lo, hi]`,
/// returning the value and a conservative error estimate obtained from a
/// half-width re-evaluation.
pub(crate) fn integrate_panels(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    panel_width: f64,
) -> (f64, f64) {
    if hi <= lo {
        return (0.0, 0.0);
    }
    let rule = gl16();
    let n = ((hi - lo) / panel_width).ceil().max(1.0) as usize;
    let step = (hi - lo) / n as f64;
    let mut coarse = 0.0;
    let mut fine = 0.0;
    for i in 0..n {
        let a = lo + i as f64 * step;
        let b = a + step;
        let m = 0.5 * (a + b);
        coarse += gl_panel(&mut f, a, b, rule);
        fine += gl_panel(&mut f, a, m, rule) + gl_panel(&mut f, m, b, rule);
    }
    (fine, (fine - coarse).abs())
}

/// Monotone cubic interpolant (Fritsch-Carlson), used for tabulated
/// smooth curves such as mutual information versus log-SNR.
#[derive(Debug, Clone)]
pub(crate) struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let mut delta = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            delta.push((y[i + 1] - y[i]) / (x[i + 1] - x[i]));
        }
        let mut slope = vec![0.0; n];
        slope[0] = delta[0];
        slope[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                slope[i] = 0.0;
            } else {
                // weighted harmonic mean keeps the interpolant monotone
                let w1 = 2.0 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
                let w2 = (x[i + 1] - x[i]) + 2.0 * (x[i] - x[i - 1]);
                slope[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        // clamp endpoint slopes (Fritsch-Carlson condition)
        for (i, d) in delta.iter().enumerate() {
            if *d == 0.0 {
                slope[i] = 0.0;
                slope[i + 1] = 0.0;
            } else {
                for s in [i, i + 1] {
                    let r = slope[s] / d;
                    if r > 3.0 {
                        slope[s] = 3.0 * d;
                    } else if r < 0.0 {
                        slope[s] = 0.0;
                    }
                }
            }
        }
        MonotoneCubic { x, y, slope }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    pub fn eval(&self, xq: f64) -> f64 {
        let n = self.x.len();
        if xq <= self.x[0] {
            return self.y[0];
        }
        if xq >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = match self.x.binary_search_by(|v| v.total_cmp(&xq)) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let t = (xq - self.x[i]) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + m0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + m1 * (t3 - t2)
    }
}

/// `ln(sum(exp(v)))` with max subtraction.
pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mx = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + values.map(|v| (v - mx).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn seeded_integration_of_gaussian() {
        let v = integrate_seeded(
            |x: f64| (-x * x).exp(),
            &[-10.0, -1.0, 0.0, 2.0, 10.0],
            1e-13,
            0.0,
        );
        assert_abs_diff_eq!(v, std::f64::consts::PI.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn panel_integration_error_estimate() {
        let (v, e) = integrate_panels(|x: f64| x.exp(), 0.0, 1.0, 0.25);
        assert_abs_diff_eq!(v, std::f64::consts::E - 1.0, epsilon = 1e-13);
        assert!(e < 1e-12);
    }

    #[test]
    fn monotone_cubic_respects_monotonicity() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.4).collect();
        let y: Vec<f64> = x.iter().map(|&v| (1.0 + v).ln()).collect();
        let interp = MonotoneCubic::new(x.clone(), y.clone());
        let mut prev = f64::NEG_INFINITY;
        for i in 0..400 {
            let q = 7.6 * i as f64 / 399.0;
            let v = interp.eval(q);
            assert!(v >= prev - 1e-12);
            prev = v;
            assert_abs_diff_eq!(v, (1.0 + q).ln(), epsilon = 2e-4);
        }
        // exact at the knots
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(interp.eval(*xi), *yi);
        }
    }

    #[test]
    fn lse_matches_direct_sum() {
        let vals = [0.1f64, -3.0, 2.5];
        let direct: f64 = vals.iter().map(|v: &f64| v.exp()).sum();
        assert_abs_diff_eq!(log_sum_exp(vals.iter().copied()), direct.ln(), epsilon = 1e-14);
    }
}
