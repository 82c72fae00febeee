//! The multiplier U(m) of the probabilistic discrete Riesz kernel,
//! evaluated by three mutually independent routes:
//!
//!   1. `u_value`: the parity-reduced single integral
//!      U(m) = -(1/Gamma((d+2)/2)) int_0^inf t^{d/2} e^{-t}
//!             q_0(|m|^2/4t)^{e(m)} q_1(|m|^2/4t)^{d-e(m)} dt,
//!      with q_j tabulated by spline (plus a Gauss-Laguerre cross-check);
//!   2. `u_value_direct` / `u_continuous`: the (d+1)-dimensional integral
//!      U(m) = -(1/(pi^{d/2} Gamma((d+2)/2))) int_0^inf int_{R^d}
//!             s^{d/2} e^{-s-|z|^2} / H(z|m|/(2 sqrt s) + m/2, |m|^2/4s) dz ds,
//!      whose inner integral factorizes into d one-dimensional Gauss-Hermite
//!      integrals because H is a product of theta factors;
//!   3. a Monte-Carlo estimate (module `mc`).
//!
//! U depends on m only through (|m|^2, e(m)) where e(m) counts even
//! coordinates; results are memoized on that key.

use crate::error::{Error, Result};
use crate::quad::adaptive_gl;
use crate::spline::UniformCubicSpline;
use crate::theta::{q_function, theta, Parity, SeriesTolerance, TimeParam, TorusCoordinate};
use gauss_quad::{GaussHermite, GaussLaguerre};
use once_cell::sync::Lazy;
use rayon::prelude::*;
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::RwLock;

/// Default absolute accuracy target for U values.
pub const DEFAULT_U_EPS: f64 = 1e-8;

/// Gamma(n2 / 2) for positive half-integer or integer argument.
pub fn gamma_half(n2: u32) -> f64 {
    assert!(n2 >= 1);
    if n2 % 2 == 0 {
        let mut v = 1.0;
        for k in 2..n2 / 2 {
            v *= k as f64;
        }
        v
    } else {
        let mut v = std::f64::consts::PI.sqrt();
        let mut half = 0.5;
        for _ in 0..n2 / 2 {
            v *= half;
            half += 1.0;
        }
        v
    }
}

/// Number of even coordinates of m (zero counts as even).
pub fn even_count(m: &[i64]) -> usize {
    m.iter().filter(|&&c| c % 2 == 0).count()
}

/// Equivalence-class key of U: squared norm and even-coordinate count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UCacheKey {
    pub r2: i64,
    pub e: usize,
}

impl UCacheKey {
    pub fn from_point(m: &[i64]) -> Result<Self> {
        let r2: i64 = m.iter().map(|&c| c * c).sum();
        if r2 == 0 {
            return Err(Error::OriginArgument);
        }
        Ok(UCacheKey {
            r2,
            e: even_count(m),
        })
    }
}

// ---------------------------------------------------------------------------
// spline tabulation of ln q_0, ln q_1
// ---------------------------------------------------------------------------

/// Knot range for the q-spline in t. The lower end is dictated by f64 range
/// (q_1(t) ~ e^{1/(8t)}); the integration cap below guarantees arguments never
/// drop under it. Beyond T_Q_MAX both q_j equal 1 to ~1e-17 (the deviation is
/// O(e^{-pi^2 t})).
const T_Q_MIN: f64 = 2.5e-4;
const T_Q_MAX: f64 = 5.0;
const Q_KNOTS: usize = 2500;

struct QSpline {
    ln_q0: UniformCubicSpline,
    ln_q1: UniformCubicSpline,
}

static Q_SPLINE: Lazy<QSpline> = Lazy::new(|| {
    let u0 = T_Q_MIN.ln();
    let u1 = T_Q_MAX.ln();
    let h = (u1 - u0) / (Q_KNOTS - 1) as f64;
    let tol = SeriesTolerance {
        eps: 1e-12,
        max_terms: 128,
    };
    let vals: Vec<(f64, f64)> = (0..Q_KNOTS)
        .into_par_iter()
        .map(|i| {
            let t = TimeParam::new((u0 + h * i as f64).exp()).unwrap();
            let q0 = q_function(Parity::Even, t, &tol).expect("q0 tabulation");
            let q1 = q_function(Parity::Odd, t, &tol).expect("q1 tabulation");
            (q0.ln(), q1.ln())
        })
        .collect();
    QSpline {
        ln_q0: UniformCubicSpline::new(u0, h, vals.iter().map(|v| v.0).collect()),
        ln_q1: UniformCubicSpline::new(u0, h, vals.iter().map(|v| v.1).collect()),
    }
});

/// ln q_j(t) from the spline table.
fn ln_q(j: Parity, t: f64) -> Result<f64> {
    if t >= T_Q_MAX {
        return Ok(0.0);
    }
    if t < T_Q_MIN {
        return Err(Error::InvalidParameter(format!(
            "q-spline argument {t} below table range"
        )));
    }
    let sp = &*Q_SPLINE;
    Ok(match j {
        Parity::Even => sp.ln_q0.eval(t.ln()),
        Parity::Odd => sp.ln_q1.eval(t.ln()),
    })
}

// ---------------------------------------------------------------------------
// parity-reduced integral
// ---------------------------------------------------------------------------

/// Net exponential decay rate of the parity-reduced integrand,
/// 1 - (d - e)/(2 r2); always >= 1/2 since r2 >= d - e.
fn decay_rate(key: UCacheKey, d: usize) -> f64 {
    1.0 - (d - key.e) as f64 / (2.0 * key.r2 as f64)
}

/// Upper integration cut-off: the integrand is below e^{-130} * poly past it.
fn t_cap(lambda: f64) -> f64 {
    130.0 / lambda
}

fn u_integrand(key: UCacheKey, d: usize, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let s = key.r2 as f64 / (4.0 * t);
    let g0 = ln_q(Parity::Even, s).expect("q-spline range");
    let g1 = ln_q(Parity::Odd, s).expect("q-spline range");
    let ln_f =
        0.5 * d as f64 * t.ln() - t + key.e as f64 * g0 + (d - key.e) as f64 * g1;
    ln_f.exp()
}

static U_CACHE: Lazy<RwLock<HashMap<(usize, i64, usize, u64), f64>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

/// U on the key class `key` in dimension `d`, absolute error target `eps`.
/// Memoized; the result is strictly negative.
pub fn u_value(key: UCacheKey, d: usize, eps: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    if key.r2 < 1 || key.e > d {
        return Err(Error::InvalidParameter(format!("bad U key {key:?}")));
    }
    let ck = (d, key.r2, key.e, eps.to_bits());
    if let Some(&v) = U_CACHE.read().unwrap().get(&ck) {
        return Ok(v);
    }
    let gamma = gamma_half(d as u32 + 2);
    let lambda = decay_rate(key, d);
    let cap = t_cap(lambda);
    let integral = adaptive_gl(
        |t: f64| u_integrand(key, d, t),
        0.0,
        cap,
        eps * gamma,
    )?;
    let u = -integral / gamma;
    if !u.is_finite() || u >= 0.0 {
        return Err(Error::NonFinite(format!("u_value({key:?}, d={d}) = {u}")));
    }
    U_CACHE.write().unwrap().insert(ck, u);
    Ok(u)
}

/// Same integral by a 64-node generalized Gauss-Laguerre rule with weight
/// u^{d/2} e^{-u}; independent of the adaptive panel driver.
///
/// The raw integrand carries a residual exponential factor e^{(1-lambda)t}
/// from the odd q_1 powers, which a Laguerre rule cannot follow when lambda
/// is close to 1/2. Substituting t = u/lambda folds that factor into the
/// weight and leaves a subexponential remainder.
pub fn u_value_laguerre(key: UCacheKey, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    let rule = GaussLaguerre::new(64, d as f64 / 2.0)
        .map_err(|e| Error::QuadratureNonconvergence(e.to_string()))?;
    let gamma = gamma_half(d as u32 + 2);
    let lambda = decay_rate(key, d);
    let integral = rule.integrate(|u| {
        let t = u / lambda;
        let s = key.r2 as f64 / (4.0 * t);
        if s < T_Q_MIN {
            // past the integration cap; the true integrand is below e^{-130}
            return 0.0;
        }
        let g0 = ln_q(Parity::Even, s).expect("q-spline range");
        let g1 = ln_q(Parity::Odd, s).expect("q-spline range");
        (key.e as f64 * g0 + (d - key.e) as f64 * g1 - (1.0 - lambda) * t).exp()
    }) * lambda.powf(-(d as f64) / 2.0 - 1.0);
    Ok(-integral / gamma)
}

// ---------------------------------------------------------------------------
// direct (d+1)-dimensional integral
// ---------------------------------------------------------------------------

static GH_RULE: Lazy<Vec<(f64, f64)>> = Lazy::new(|| {
    GaussHermite::new(128)
        .expect("Gauss-Hermite rule")
        .into_node_weight_pairs()
});

/// Decay rate of the direct integrand for a real argument x:
/// 1 - sum_i 2 dist(x_i/2, Z)^2 / |x|^2, always >= 1/2.
fn decay_rate_continuous(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|&v| v * v).sum();
    let s: f64 = x
        .iter()
        .map(|&v| {
            let h = v / 2.0;
            let d = (h - h.round()).abs();
            2.0 * d * d
        })
        .sum();
    1.0 - s / r2
}

/// U(x) for real x != 0, from the direct double integral. The inner
/// d-dimensional integral factorizes into per-coordinate Gauss-Hermite sums
/// since H is a product of theta factors. This is the only route available
/// off-lattice: the parity reduction needs integer coordinates.
pub fn u_continuous(x: &[f64], eps: f64) -> Result<f64> {
    let d = x.len();
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    let r2: f64 = x.iter().map(|&v| v * v).sum();
    if r2 == 0.0 {
        return Err(Error::OriginArgument);
    }
    let r = r2.sqrt();
    let theta_tol = SeriesTolerance {
        eps: 1e-14,
        max_terms: 128,
    };
    let lambda = decay_rate_continuous(x);
    let cap = t_cap(lambda);
    let inner = |s: f64| -> f64 {
        let t = TimeParam::new(r2 / (4.0 * s)).unwrap();
        let scale = r / (2.0 * s.sqrt());
        let mut prod = 1.0;
        for &xi in x {
            let mut acc = 0.0;
            for &(z, w) in GH_RULE.iter() {
                let th = theta(TorusCoordinate::new(scale * z + xi / 2.0), t, &theta_tol)
                    .expect("theta in direct integral");
                acc += w / th;
            }
            prod *= acc;
        }
        prod
    };
    let norm = std::f64::consts::PI.powi(d as i32 / 2)
        * if d % 2 == 1 {
            std::f64::consts::PI.sqrt()
        } else {
            1.0
        }
        * gamma_half(d as u32 + 2);
    let integral = adaptive_gl(
        |s: f64| {
            if s <= 0.0 {
                0.0
            } else {
                s.powf(d as f64 / 2.0) * (-s).exp() * inner(s)
            }
        },
        0.0,
        cap,
        eps * norm,
    )?;
    let u = -integral / norm;
    if !u.is_finite() {
        return Err(Error::NonFinite(format!("u_continuous({x:?})")));
    }
    Ok(u)
}

/// Direct-integral U at a lattice point; independent oracle for `u_value`.
pub fn u_value_direct(m: &[i64], eps: f64) -> Result<f64> {
    let x: Vec<f64> = m.iter().map(|&c| c as f64).collect();
    u_continuous(&x, eps)
}

// ---------------------------------------------------------------------------
// persistent cache
// ---------------------------------------------------------------------------

/// Write the in-memory U cache as line-delimited text:
/// `d r2 e eps_bits_hex u`.
pub fn save_u_cache(path: &std::path::Path) -> Result<usize> {
    let cache = U_CACHE.read().unwrap();
    let mut entries: Vec<_> = cache.iter().collect();
    entries.sort_by_key(|(k, _)| **k);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for ((d, r2, e, eps_bits), u) in entries {
        writeln!(f, "{d} {r2} {e} {eps_bits:016x} {u:.17e}")?;
    }
    Ok(cache.len())
}

/// Merge a cache file produced by `save_u_cache` into the in-memory cache.
pub fn load_u_cache(path: &std::path::Path) -> Result<usize> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut n = 0;
    let mut cache = U_CACHE.write().unwrap();
    for line in f.lines() {
        let line = line?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(Error::Parse(format!("bad cache line: {line}")));
        }
        let d: usize = parts[0].parse().map_err(|_| Error::Parse(line.clone()))?;
        let r2: i64 = parts[1].parse().map_err(|_| Error::Parse(line.clone()))?;
        let e: usize = parts[2].parse().map_err(|_| Error::Parse(line.clone()))?;
        let eps_bits = u64::from_str_radix(parts[3], 16).map_err(|_| Error::Parse(line.clone()))?;
        let u: f64 = parts[4].parse().map_err(|_| Error::Parse(line.clone()))?;
        cache.insert((d, r2, e, eps_bits), u);
        n += 1;
    }
    Ok(n)
}

/// Drop every memoized U value (test isolation).
pub fn clear_u_cache() {
    U_CACHE.write().unwrap().clear();
}
