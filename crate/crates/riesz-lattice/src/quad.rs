//! Adaptive Gauss-Legendre quadrature for smooth 1-D integrands.
//!
//! The fixed-order rules with non-trivial weights (generalized Gauss-Laguerre,
//! Gauss-Hermite) come from the `gauss_quad` crate; this module only owns the
//! panel-bisection driver used for integrands on a finite interval.

use crate::error::{Error, Result};
use crate::real::Scalar;
use once_cell::sync::Lazy;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n {
        // Tricomi initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_eval(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_eval(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// P_n(x) and P_n'(x) via the three-term recurrence.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

static GL15: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| legendre_rule(15));
static GL31: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| legendre_rule(31));

fn panel<R: Scalar>(f: &mut impl FnMut(R) -> R, a: R, b: R, rule: &(Vec<f64>, Vec<f64>)) -> R {
    let half = R::from_f64c(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let mut acc = R::zero();
    for (x, w) in rule.0.iter().zip(rule.1.iter()) {
        acc += R::from_f64c(*w) * f(c + h * R::from_f64c(*x));
    }
    acc * h
}

/// Integrate `f` over `[a, b]` by Gauss-Legendre panels with bisection
/// refinement until the 15- vs 31-point discrepancy of every panel is below
/// its share of `eps` (absolute).
pub fn adaptive_gl<R: Scalar>(
    mut f: impl FnMut(R) -> R,
    a: R,
    b: R,
    eps: R,
) -> Result<R> {
    const MAX_DEPTH: usize = 48;
    fn rec<R: Scalar>(
        f: &mut impl FnMut(R) -> R,
        a: R,
        b: R,
        eps: R,
        depth: usize,
    ) -> Result<R> {
        let coarse = panel(f, a, b, &GL15);
        let fine = panel(f, a, b, &GL31);
        if (coarse - fine).abs() <= eps || depth >= MAX_DEPTH {
            if depth >= MAX_DEPTH && (coarse - fine).abs() > eps * R::from_f64c(16.0) {
                return Err(Error::QuadratureNonconvergence(format!(
                    "panel [{:?}, {:?}] residual {:?} above budget at depth {}",
                    a,
                    b,
                    (coarse - fine).abs(),
                    depth
                )));
            }
            return Ok(fine);
        }
        let mid = (a + b) * R::from_f64c(0.5);
        let half_eps = eps * R::from_f64c(0.5);
        Ok(rec(f, a, mid, half_eps, depth + 1)? + rec(f, mid, b, half_eps, depth + 1)?)
    }
    rec(&mut f, a, b, eps, 0)
}
