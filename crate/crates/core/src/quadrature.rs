//! Gaussian quadrature rules (Gauss-Laguerre and Gauss-Hermite).
//!
//! Nodes and weights are obtained with the Golub-Welsch method: the
//! recurrence coefficients of the orthogonal polynomial family form a
//! symmetric tridiagonal Jacobi matrix whose eigenvalues are the nodes and
//! whose first eigenvector components give the weights. This is numerically
//! stable up to the maximum supported order of 200.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Largest supported rule order.
pub const MAX_ORDER: usize = 200;

/// Weight function selector for a [`QuadratureRule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadratureKind {
    /// Weight `e^{-t}` on `[0, inf)`.
    Laguerre,
    /// Weight `e^{-t^2}` on `(-inf, inf)`.
    Hermite,
}

/// Nodes and weights of a Gaussian quadrature rule.
///
/// `sum_i weights[i] * f(nodes[i])` approximates the weighted integral of
/// `f`, exactly for polynomials of degree `2 * order - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub kind: QuadratureKind,
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Eigen-decomposes a symmetric tridiagonal Jacobi matrix and returns the
/// sorted `(nodes, weights)` pair, with weights scaled by the zeroth moment
/// `mu0` of the weight function. Nodes are polished with two Newton steps
/// on the orthonormal polynomial so that high moments stay exact to ~1e-12
/// relative; the eigensolve alone leaves ~1e-10 node error at high orders.
pub(crate) fn golub_welsch(diag: &[f64], offdiag: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    if n == 1 {
        return (vec![diag[0]], vec![mu0]);
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for (i, &d) in diag.iter().enumerate() {
        jac[(i, i)] = d;
    }
    for (i, &e) in offdiag.iter().enumerate() {
        jac[(i, i + 1)] = e;
        jac[(i + 1, i)] = e;
    }
    let eig = jac.symmetric_eigen();
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_unstable_by(f64::total_cmp);
    let mut weights = Vec::with_capacity(n);
    for node in &mut nodes {
        for _ in 0..2 {
            let (correction, _) = orthonormal_eval(diag, offdiag, mu0, *node);
            *node -= correction;
        }
        let (_, ln_w) = orthonormal_eval(diag, offdiag, mu0, *node);
        weights.push(ln_w.exp());
    }
    (nodes, weights)
}

/// Evaluates the orthonormal polynomial family of the Jacobi recurrence at
/// `x`, returning the Newton correction `p_n(x) / p_n'(x)` and the log of
/// the Gaussian weight `ln(1 / sum_{k<n} p_k(x)^2)` (Christoffel function).
/// A running rescale keeps high orders inside f64 range.
fn orthonormal_eval(diag: &[f64], offdiag: &[f64], mu0: f64, x: f64) -> (f64, f64) {
    let n = diag.len();
    let mut p_prev = 0.0f64;
    let mut dp_prev = 0.0f64;
    let mut p = 1.0 / mu0.sqrt();
    let mut dp = 0.0f64;
    let mut sum = p * p;
    let mut ln_scale = 0.0f64;
    for k in 0..n {
        let sb_next = if k < n - 1 { offdiag[k] } else { 1.0 };
        let sb_prev = if k > 0 { offdiag[k - 1] } else { 0.0 };
        let p_next = ((x - diag[k]) * p - sb_prev * p_prev) / sb_next;
        let dp_next = ((x - diag[k]) * dp + p - sb_prev * dp_prev) / sb_next;
        p_prev = p;
        dp_prev = dp;
        p = p_next;
        dp = dp_next;
        if k + 1 <= n - 1 {
            sum += p * p;
        }
        let mag = p.abs().max(dp.abs());
        if mag > 1e100 {
            let inv = 1.0 / mag;
            p_prev *= inv;
            dp_prev *= inv;
            p *= inv;
            dp *= inv;
            sum *= inv * inv;
            ln_scale += mag.ln();
        }
    }
    let newton = if dp == 0.0 { 0.0 } else { p / dp };
    (newton, -2.0 * ln_scale - sum.ln())
}

fn check_order(order: usize) -> Result<()> {
    if order < 1 || order > MAX_ORDER {
        return Err(Error::argument(format!(
            "quadrature order must be in 1..={MAX_ORDER}, got {order}"
        )));
    }
    Ok(())
}

/// Gauss-Laguerre rule of the given order for `int_0^inf e^{-t} f(t) dt`.
///
/// Recurrence for the weight `e^{-t}`: `a_k = 2k + 1`, `b_k = k^2`, zeroth
/// moment 1.
pub fn gauss_laguerre(order: usize) -> Result<QuadratureRule> {
    check_order(order)?;
    let diag: Vec<f64> = (0..order).map(|k| 2.0 * k as f64 + 1.0).collect();
    let offdiag: Vec<f64> = (1..order).map(|k| k as f64).collect();
    let (nodes, weights) = golub_welsch(&diag, &offdiag, 1.0);
    Ok(QuadratureRule {
        kind: QuadratureKind::Laguerre,
        order,
        nodes,
        weights,
    })
}

/// Gauss-Hermite rule of the given order for `int e^{-t^2} f(t) dt`.
///
/// Recurrence: `a_k = 0`, `b_k = k / 2`, zeroth moment `sqrt(pi)`.
/// Nodes are symmetrized about zero after the eigensolve so that the
/// pairing is exact in floating point.
pub fn gauss_hermite(order: usize) -> Result<QuadratureRule> {
    check_order(order)?;
    let diag = vec![0.0; order];
    let offdiag: Vec<f64> = (1..order).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let (mut nodes, mut weights) = golub_welsch(&diag, &offdiag, std::f64::consts::PI.sqrt());
    let n = order;
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule {
        kind: QuadratureKind::Hermite,
        order,
        nodes,
        weights,
    })
}

/// Gauss-Legendre rule on `[-1, 1]`, used internally by the adaptive
/// integrators. Recurrence: `a_k = 0`, `b_k = k^2 / (4k^2 - 1)`, moment 2.
pub(crate) fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let diag = vec![0.0; order];
    let offdiag: Vec<f64> = (1..order)
        .map(|k| {
            let k2 = (k * k) as f64;
            (k2 / (4.0 * k2 - 1.0)).sqrt()
        })
        .collect();
    let (mut nodes, weights) = golub_welsch(&diag, &offdiag, 2.0);
    for i in 0..order / 2 {
        let j = order - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

type RuleCache = Mutex<HashMap<(QuadratureKind, usize), Arc<QuadratureRule>>>;

fn cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached variant of [`gauss_laguerre`] / [`gauss_hermite`]; rules are
/// immutable once constructed so repeated callers see bit-identical values.
pub fn cached_rule(kind: QuadratureKind, order: usize) -> Result<Arc<QuadratureRule>> {
    check_order(order)?;
    let mut map = cache().lock().expect("quadrature cache poisoned");
    if let Some(rule) = map.get(&(kind, order)) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(match kind {
        QuadratureKind::Laguerre => gauss_laguerre(order)?,
        QuadratureKind::Hermite => gauss_hermite(order)?,
    });
    map.insert((kind, order), rule.clone());
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Independent eigenvalue oracle for a symmetric 2x2 matrix.
    fn eig2(a: f64, b: f64, c: f64) -> (f64, f64) {
        let mid = 0.5 * (a + c);
        let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        (mid - r, mid + r)
    }

    #[test]
    fn laguerre_order_1() {
        let rule = gauss_laguerre(1).unwrap();
        assert_abs_diff_eq!(rule.nodes[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.weights[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn laguerre_order_2_matches_jacobi_eigenvalues() {
        // Jacobi matrix [[1, 1], [1, 3]] for the Laguerre recurrence.
        let (lo, hi) = eig2(1.0, 1.0, 3.0);
        let rule = gauss_laguerre(2).unwrap();
        assert_abs_diff_eq!(rule.nodes[0], lo, epsilon = 1e-13);
        assert_abs_diff_eq!(rule.nodes[1], hi, epsilon = 1e-13);
        // closed form 2 -+ sqrt(2)
        assert_abs_diff_eq!(rule.nodes[0], 2.0 - 2.0f64.sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(rule.nodes[1], 2.0 + 2.0f64.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn hermite_order_1_and_2() {
        let rule = gauss_hermite(1).unwrap();
        assert_eq!(rule.nodes[0], 0.0);
        assert_abs_diff_eq!(rule.weights[0], std::f64::consts::PI.sqrt(), epsilon = 1e-14);

        // Jacobi matrix [[0, sqrt(1/2)], [sqrt(1/2), 0]].
        let (lo, hi) = eig2(0.0, 0.5f64.sqrt(), 0.0);
        let rule = gauss_hermite(2).unwrap();
        assert_abs_diff_eq!(rule.nodes[0], lo, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.nodes[1], hi, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.nodes[0], -(0.5f64.sqrt()), epsilon = 1e-14);
        let half_pi = 0.5 * std::f64::consts::PI.sqrt();
        assert_abs_diff_eq!(rule.weights[0], half_pi, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.weights[1], half_pi, epsilon = 1e-14);
    }

    #[test]
    fn laguerre_first_moment_is_one() {
        // int t e^{-t} dt = 1 at every order
        for order in [1, 2, 5, 17, 64, 128, 200] {
            let rule = gauss_laguerre(order).unwrap();
            let m1: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(t, w)| w * t)
                .sum();
            assert_abs_diff_eq!(m1, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn weight_sums() {
        for order in [1, 3, 10, 50, 200] {
            let lag = gauss_laguerre(order).unwrap();
            assert_abs_diff_eq!(lag.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            let her = gauss_hermite(order).unwrap();
            assert_abs_diff_eq!(
                her.weights.iter().sum::<f64>(),
                std::f64::consts::PI.sqrt(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn hermite_second_moment() {
        // int t^2 e^{-t^2} dt = sqrt(pi)/2
        let rule = gauss_hermite(20).unwrap();
        let m2: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(t, w)| w * t * t)
            .sum();
        assert_abs_diff_eq!(m2, 0.5 * std::f64::consts::PI.sqrt(), epsilon = 1e-12);
    }

    /// log-sum-exp of w_i * t_i^k, safe for moments that overflow f64.
    fn log_moment(rule: &QuadratureRule, k: u32) -> f64 {
        let terms: Vec<f64> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .filter(|(t, w)| **t > 0.0 && **w > 0.0)
            .map(|(t, w)| w.ln() + k as f64 * t.ln())
            .collect();
        let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        mx + terms.iter().map(|v| (v - mx).exp()).sum::<f64>().ln()
    }

    #[test]
    fn laguerre_polynomial_exactness() {
        // int t^k e^{-t} dt = k! for k <= 2N-1, relative 1e-10.
        for order in [1usize, 2, 5, 10, 20] {
            let rule = gauss_laguerre(order).unwrap();
            let mut log_fact = 0.0;
            let mut moment = rule.weights.iter().sum::<f64>();
            assert_abs_diff_eq!(moment, 1.0, epsilon = 1e-10);
            for k in 1..=(2 * order - 1) {
                log_fact += (k as f64).ln();
                moment = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(t, w)| w * t.powi(k as i32))
                    .sum();
                let rel = (moment.ln() - log_fact).abs();
                assert!(rel < 1e-10, "order {order} k {k}: rel log err {rel:e}");
            }
        }
        // high order via log arithmetic, k <= N-1 within 1e-9
        let rule = gauss_laguerre(64).unwrap();
        let mut log_fact = 0.0;
        for k in 1..64u32 {
            log_fact += (k as f64).ln();
            let rel = (log_moment(&rule, k) - log_fact).abs();
            assert!(rel < 1e-9, "order 64 k {k}: rel log err {rel:e}");
        }
    }

    #[test]
    fn hermite_even_moment_exactness() {
        // int t^{2k} e^{-t^2} dt = Gamma(k + 1/2), k <= N-1 within 1e-9.
        use statrs::function::gamma::ln_gamma;
        for order in [8usize, 32, 64] {
            let rule = gauss_hermite(order).unwrap();
            for k in 0..order.min(((2 * order - 1) / 2) + 1) {
                let target = ln_gamma(k as f64 + 0.5);
                let moment: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(t, w)| w * t.powi(2 * k as i32))
                    .sum();
                if moment.is_finite() && moment > 0.0 {
                    let rel = (moment.ln() - target).abs();
                    assert!(rel < 1e-9, "order {order} k {k}: rel log err {rel:e}");
                }
            }
        }
    }

    #[test]
    fn nodes_strictly_increasing_and_positive() {
        for order in [2, 7, 30, 100, 200] {
            let lag = gauss_laguerre(order).unwrap();
            assert!(lag.nodes[0] > 0.0);
            assert!(lag.nodes.windows(2).all(|w| w[1] > w[0]));
            assert!(lag.weights.iter().all(|&w| w > 0.0));
            let her = gauss_hermite(order).unwrap();
            assert!(her.nodes.windows(2).all(|w| w[1] > w[0]));
            // symmetric about zero
            for i in 0..order / 2 {
                assert_eq!(her.nodes[i], -her.nodes[order - 1 - i]);
                assert_eq!(her.weights[i], her.weights[order - 1 - i]);
            }
        }
    }

    #[test]
    fn deterministic_regeneration() {
        let a = gauss_laguerre(75).unwrap();
        let b = gauss_laguerre(75).unwrap();
        assert_eq!(a, b);
        let c = cached_rule(QuadratureKind::Laguerre, 75).unwrap();
        assert_eq!(*c, a);
    }

    #[test]
    fn order_out_of_range() {
        assert!(gauss_laguerre(0).is_err());
        assert!(gauss_laguerre(201).is_err());
        assert!(gauss_hermite(0).is_err());
        assert!(gauss_hermite(999).is_err());
    }

    #[test]
    fn legendre_internal_rule() {
        let (x, w) = gauss_legendre(5);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(x[2], 0.0, epsilon = 1e-15);
        // int_{-1}^{1} t^4 dt = 2/5
        let m4: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(4)).sum();
        assert_abs_diff_eq!(m4, 0.4, epsilon = 1e-13);
    }
}
