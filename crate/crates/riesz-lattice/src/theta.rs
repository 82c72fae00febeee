//! Jacobi theta function, periodic heat kernel and related 1-D integrals.
//!
//! theta(x, t) = sum_n exp(-2 t pi^2 n^2 + 2 pi i n x) is evaluated through one
//! of its two series: the Fourier cosine series (fast for large t) or the dual
//! Gaussian sum obtained from Poisson summation (fast for small t). The
//! periodic heat kernel on the torus factorizes as H_t(x) = prod_k theta(x_k, t).

use crate::error::{Error, Result};
use crate::quad::adaptive_gl;
use crate::real::Scalar;

/// Diffusion time, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeParam<R>(R);

impl<R: Scalar> TimeParam<R> {
    pub fn new(t: R) -> Result<Self> {
        if t > R::zero() && t.is_finite() {
            Ok(TimeParam(t))
        } else {
            Err(Error::NonpositiveTime(t.to_f64().unwrap_or(f64::NAN)))
        }
    }

    pub fn get(self) -> R {
        self.0
    }
}

/// Torus coordinate, canonically reduced to [-1/2, 1/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusCoordinate<R>(R);

impl<R: Scalar> TorusCoordinate<R> {
    pub fn new(x: R) -> Self {
        let mut r = x - x.round();
        let half = R::from_f64c(0.5);
        if r >= half {
            r = r - R::one();
        } else if r < -half {
            r = r + R::one();
        }
        TorusCoordinate(r)
    }

    pub fn get(self) -> R {
        self.0
    }
}

/// Absolute truncation target for the theta series.
#[derive(Debug, Clone, Copy)]
pub struct SeriesTolerance<R> {
    pub eps: R,
    pub max_terms: usize,
}

impl<R: Scalar> Default for SeriesTolerance<R> {
    fn default() -> Self {
        SeriesTolerance {
            eps: R::from_f64c(1e-14),
            max_terms: 64,
        }
    }
}

/// Representation switch point: the Fourier exponent 2 pi^2 n^2 t and the
/// Gaussian exponent n^2 / (2t) coincide at t = 1/(2 pi).
pub fn t_switch<R: Scalar>() -> R {
    (R::PI() + R::PI()).recip()
}

/// theta(x, t) via the Fourier cosine series 1 + 2 sum_{n>=1} e^{-2 pi^2 n^2 t} cos(2 pi n x).
pub fn theta_series_fourier<R: Scalar>(
    x: TorusCoordinate<R>,
    t: TimeParam<R>,
    tol: &SeriesTolerance<R>,
) -> Result<R> {
    let (x, t) = (x.get(), t.get());
    let two = R::from_f64c(2.0);
    let two_pi = R::PI() * two;
    let a = two * R::PI() * R::PI() * t;
    let quarter_eps = tol.eps * R::from_f64c(0.25);
    let mut sum = R::one();
    for n in 1..=tol.max_terms {
        let nf = R::from_usize(n).unwrap();
        sum += two * (-a * nf * nf).exp() * (two_pi * nf * x).cos();
        // geometric tail bound for the remaining terms
        let np = nf + R::one();
        let next = two * (-a * np * np).exp();
        let ratio = (-a * (two * np + R::one())).exp();
        let tail = next / (R::one() - ratio);
        if tail <= quarter_eps {
            return Ok(sum);
        }
    }
    Err(Error::SeriesTruncation {
        max_terms: tol.max_terms,
        best: f64::NAN,
    })
}

/// theta(x, t) via the Gaussian (Poisson-dual) sum
/// (2 pi t)^{-1/2} sum_n exp(-(x - n)^2 / (2t)).
pub fn theta_series_gaussian<R: Scalar>(
    x: TorusCoordinate<R>,
    t: TimeParam<R>,
    tol: &SeriesTolerance<R>,
) -> Result<R> {
    let (x, t) = (x.get(), t.get());
    let two = R::from_f64c(2.0);
    let half = R::from_f64c(0.5);
    let pref = (two * R::PI() * t).sqrt().recip();
    let inv2t = (two * t).recip();
    let quarter_eps = tol.eps * R::from_f64c(0.25);
    let mut sum = (-x * x * inv2t).exp();
    for n in 1..=tol.max_terms {
        let nf = R::from_usize(n).unwrap();
        sum += (-(x - nf) * (x - nf) * inv2t).exp() + (-(x + nf) * (x + nf) * inv2t).exp();
        // |x| <= 1/2, so every term with index beyond n is at most
        // exp(-(n + 1/2)^2 / (2t)); the tail is geometric with that head.
        let head = two * (-(nf + half) * (nf + half) * inv2t).exp();
        let ratio = (-(two * nf + two) * inv2t).exp();
        let tail = pref * head / (R::one() - ratio);
        if tail <= quarter_eps {
            return Ok(pref * sum);
        }
    }
    Err(Error::SeriesTruncation {
        max_terms: tol.max_terms,
        best: f64::NAN,
    })
}

/// theta(x, t), picking the faster-converging representation.
pub fn theta<R: Scalar>(
    x: TorusCoordinate<R>,
    t: TimeParam<R>,
    tol: &SeriesTolerance<R>,
) -> Result<R> {
    if t.get() >= t_switch::<R>() {
        theta_series_fourier(x, t, tol)
    } else {
        theta_series_gaussian(x, t, tol)
    }
}

/// d theta / dx. Odd in x; vanishes at x = 0 and x = 1/2.
pub fn theta_dz<R: Scalar>(
    x: TorusCoordinate<R>,
    t: TimeParam<R>,
    tol: &SeriesTolerance<R>,
) -> Result<R> {
    let two = R::from_f64c(2.0);
    let half = R::from_f64c(0.5);
    let quarter_eps = tol.eps * R::from_f64c(0.25);
    let (xv, tv) = (x.get(), t.get());
    if tv >= t_switch::<R>() {
        // -4 pi sum_{n>=1} n e^{-2 pi^2 n^2 t} sin(2 pi n x)
        let two_pi = R::PI() * two;
        let a = two * R::PI() * R::PI() * tv;
        let four_pi = two_pi * two;
        let mut sum = R::zero();
        for n in 1..=tol.max_terms {
            let nf = R::from_usize(n).unwrap();
            sum += four_pi * nf * (-a * nf * nf).exp() * (two_pi * nf * xv).sin();
            let np = nf + R::one();
            let next = four_pi * np * (-a * np * np).exp();
            let ratio = (-a * (two * np + R::one())).exp() * two;
            let tail = next / (R::one() - ratio.min(half));
            if tail <= quarter_eps {
                return Ok(-sum);
            }
        }
    } else {
        // derivative of the Gaussian sum
        let pref = (two * R::PI() * tv).sqrt().recip();
        let inv2t = (two * tv).recip();
        let inv_t = tv.recip();
        let mut sum = -xv * inv_t * (-xv * xv * inv2t).exp();
        for n in 1..=tol.max_terms {
            let nf = R::from_usize(n).unwrap();
            let (dm, dp) = (xv - nf, xv + nf);
            sum += -dm * inv_t * (-dm * dm * inv2t).exp() - dp * inv_t * (-dp * dp * inv2t).exp();
            let edge = nf + half;
            let head = two * edge * inv_t * (-edge * edge * inv2t).exp();
            let ratio = (-(two * nf + two) * inv2t).exp() * two;
            let tail = pref * head / (R::one() - ratio.min(half));
            if tail <= quarter_eps {
                return Ok(pref * sum);
            }
        }
    }
    Err(Error::SeriesTruncation {
        max_terms: tol.max_terms,
        best: f64::NAN,
    })
}

/// Gaussian heat kernel P_t(x) = (2 pi t)^{-d/2} exp(-|x|^2 / (2t)).
pub fn gaussian_heat<R: Scalar>(x: &[R], t: TimeParam<R>) -> R {
    let t = t.get();
    let d = x.len();
    let two_pi_t = (R::PI() + R::PI()) * t;
    let norm2: R = x.iter().map(|&v| v * v).sum();
    two_pi_t.powi(-(d as i32)).sqrt() * (-norm2 / (t + t)).exp()
}

/// Periodic heat kernel H_t(x) = prod_k theta(x_k, t).
pub fn periodic_heat<R: Scalar>(x: &[R], t: TimeParam<R>, tol: &SeriesTolerance<R>) -> Result<R> {
    let mut prod = R::one();
    for &xi in x {
        prod = prod * theta(TorusCoordinate::new(xi), t, tol)?;
    }
    Ok(prod)
}

/// log H_t(x); avoids under/overflow of the product for extreme t.
pub fn periodic_heat_ln<R: Scalar>(
    x: &[R],
    t: TimeParam<R>,
    tol: &SeriesTolerance<R>,
) -> Result<R> {
    let mut acc = R::zero();
    for &xi in x {
        acc += theta(TorusCoordinate::new(xi), t, tol)?.ln();
    }
    Ok(acc)
}

/// Parity index for the q-integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn shift<R: Scalar>(self) -> R {
        match self {
            Parity::Even => R::zero(),
            Parity::Odd => R::from_f64c(0.5),
        }
    }
}

/// q_j(t) = int_{-1/2}^{1/2} theta(x, t/2) / theta(x + j/2, t) dx for j = 0, 1.
///
/// The integrand is normalized by its value at x = 0 (its maximum for small t)
/// before the adaptive pass, so the achieved accuracy is
/// max(tol.eps, ~1e-13 relative) even where q_1 is exponentially large.
pub fn q_function<R: Scalar>(j: Parity, t: TimeParam<R>, tol: &SeriesTolerance<R>) -> Result<R> {
    let tv = t.get();
    let half_t = TimeParam::new(tv * R::from_f64c(0.5))?;
    let shift: R = j.shift();
    let series_tol = SeriesTolerance {
        eps: R::from_f64c(1e-15),
        max_terms: tol.max_terms.max(64),
    };
    let ratio = |x: R| -> R {
        let num = theta(TorusCoordinate::new(x), half_t, &series_tol).unwrap_or(R::nan());
        let den = theta(TorusCoordinate::new(x + shift), t, &series_tol).unwrap_or(R::nan());
        num / den
    };
    let scale = ratio(R::zero());
    if !scale.is_finite() || scale <= R::zero() {
        return Err(Error::NonFinite(format!(
            "q integrand scale at t={:?}",
            tv
        )));
    }
    let eps_n = (tol.eps / scale).max(R::from_f64c(1e-13));
    let half = R::from_f64c(0.5);
    let v = adaptive_gl(|x| ratio(x) / scale, -half, half, eps_n)?;
    let q = v * scale;
    if q.is_finite() && q > R::zero() {
        Ok(q)
    } else {
        Err(Error::NonFinite(format!("q_{:?}({:?})", j, tv)))
    }
}

/// Boundary kernel Psi(x) = lim_{t->0} P_t(x) / H_t(x): 1 inside the Voronoi
/// cell of the origin, 1/k on a k-fold tie for the nearest lattice point, and
/// 0 when the origin is not among the nearest lattice points.
pub fn voronoi_psi<R: Scalar>(x: &[R]) -> R {
    let d = x.len();
    let origin_d2: R = x.iter().map(|&v| v * v).sum();
    // a distance minimizer has every coordinate in {floor(x_i), floor(x_i)+1}
    let mut min_d2 = origin_d2;
    let n_candidates = 1usize << d;
    let mut dists = Vec::with_capacity(n_candidates);
    for mask in 0..n_candidates {
        let mut d2 = R::zero();
        for (i, &xi) in x.iter().enumerate() {
            let base = xi.floor();
            let ni = if mask & (1 << i) != 0 { base + R::one() } else { base };
            d2 += (xi - ni) * (xi - ni);
        }
        if d2 < min_d2 {
            min_d2 = d2;
        }
        dists.push(d2);
    }
    let tie_tol = R::from_f64c(1e-12) * (R::one().max(min_d2));
    if origin_d2 > min_d2 + tie_tol {
        return R::zero();
    }
    // count distinct minimizing lattice points (the origin may coincide with
    // one of the 2^d candidates; lattice points are distinct per mask unless
    // some x_i is an exact integer, which collapses floor/floor+1 pairs)
    let mut minimizers: Vec<Vec<i64>> = Vec::new();
    for (mask, &d2) in dists.iter().enumerate() {
        if d2 <= min_d2 + tie_tol {
            let pt: Vec<i64> = x
                .iter()
                .enumerate()
                .map(|(i, &xi)| {
                    let base = xi.floor().to_f64().unwrap() as i64;
                    if mask & (1 << i) != 0 {
                        base + 1
                    } else {
                        base
                    }
                })
                .collect();
            if !minimizers.contains(&pt) {
                minimizers.push(pt);
            }
        }
    }
    let origin_is_min = minimizers.iter().any(|p| p.iter().all(|&c| c == 0))
        || origin_d2 <= min_d2 + tie_tol;
    if !origin_is_min {
        return R::zero();
    }
    // the origin is a minimizer; if it is not among the candidates (possible
    // only through the tie tolerance), count it in
    if !minimizers.iter().any(|p| p.iter().all(|&c| c == 0)) {
        minimizers.push(vec![0; d]);
    }
    R::from_usize(minimizers.len()).unwrap().recip()
}
