//! Monte-Carlo oracle for U(m) through the inverse-Gamma representation
//! U(m) = -E[ 1/H_S(B_S/sqrt(2) + m/2) ] with S ~ InverseGamma((d+2)/2,
//! |m|^2/4) and B_S a centered Gaussian vector of per-coordinate variance S.
//!
//! Sampling is split over a fixed number of substreams seeded from
//! (seed, worker index), and the reduction is Kahan-compensated in worker
//! order, so results are bit-identical across runs and thread counts.

use crate::error::{Error, Result};
use crate::theta::{periodic_heat_ln, SeriesTolerance, TimeParam};
use crate::ufunc::UCacheKey;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

/// Monte-Carlo estimate of U(m) with its standard error.
#[derive(Debug, Clone, Serialize)]
pub struct MCReport {
    pub mean: f64,
    /// sample standard deviation / sqrt(n)
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
    pub d: usize,
    pub r2: i64,
    pub e: usize,
}

/// Draw 1/G with G ~ Gamma(shape alpha, rate beta); the result follows the
/// InverseGamma(alpha, beta) law with density proportional to
/// e^{-beta/t} / t^{alpha+1}.
pub fn sample_inverse_gamma<R: Rng>(alpha: f64, beta: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inverse-gamma parameters alpha = {alpha}, beta = {beta}"
        )));
    }
    // rand_distr parametrizes Gamma by shape and scale = 1/rate
    let gamma = Gamma::new(alpha, 1.0 / beta)
        .map_err(|e| Error::InvalidParameter(format!("gamma sampler: {e}")))?;
    let g: f64 = gamma.sample(rng);
    Ok(1.0 / g)
}

/// Fixed substream count; independent of the rayon thread pool so that the
/// reduction order (worker 0, 1, ...) never changes.
const WORKERS: u64 = 64;

fn worker_rng(seed: u64, worker: u64) -> ChaCha12Rng {
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&seed.to_le_bytes());
    s[8..16].copy_from_slice(&worker.to_le_bytes());
    s[16..24].copy_from_slice(&0x52494553u64.to_le_bytes());
    ChaCha12Rng::from_seed(s)
}

fn kahan_add(sum: &mut f64, comp: &mut f64, x: f64) {
    let y = x - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

/// Monte-Carlo estimate of U(m) from n samples. Deterministic given
/// (m, d, n, seed) regardless of thread count.
pub fn u_monte_carlo(m: &[i64], n: u64, seed: u64) -> Result<MCReport> {
    let d = m.len();
    let key = UCacheKey::from_point(m)?;
    if n < 1_000 {
        return Err(Error::InvalidParameter(format!("n = {n} < 1000")));
    }
    let alpha = (d as f64 + 2.0) / 2.0;
    let beta = key.r2 as f64 / 4.0;
    let tol = SeriesTolerance::default();
    let half: Vec<f64> = m.iter().map(|&c| c as f64 / 2.0).collect();
    let base = n / WORKERS;
    let extra = n % WORKERS;
    // per-worker Kahan sums of the integrand and its square
    let partials: Vec<Result<(f64, f64)>> = (0..WORKERS)
        .into_par_iter()
        .map(|w| {
            let mut rng = worker_rng(seed, w);
            let count = base + if w < extra { 1 } else { 0 };
            let mut sum = 0.0f64;
            let mut sum_c = 0.0f64;
            let mut sq = 0.0f64;
            let mut sq_c = 0.0f64;
            let mut x = vec![0.0f64; d];
            for _ in 0..count {
                let s = sample_inverse_gamma(alpha, beta, &mut rng)?;
                let sd = (s / 2.0).sqrt(); // B_S / sqrt(2) per coordinate
                for i in 0..d {
                    let z: f64 = rng.sample(StandardNormal);
                    x[i] = sd * z + half[i];
                }
                let ln_h = periodic_heat_ln(&x, TimeParam::new(s)?, &tol)?;
                let v = -(-ln_h).exp();
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("mc integrand at t = {s}")));
                }
                kahan_add(&mut sum, &mut sum_c, v);
                kahan_add(&mut sq, &mut sq_c, v * v);
            }
            Ok((sum, sq))
        })
        .collect();
    let mut sum = 0.0f64;
    let mut sum_c = 0.0f64;
    let mut sq = 0.0f64;
    let mut sq_c = 0.0f64;
    for p in partials {
        let (a, b) = p?;
        kahan_add(&mut sum, &mut sum_c, a);
        kahan_add(&mut sq, &mut sq_c, b);
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(MCReport {
        mean,
        stderr: (var / nf).sqrt(),
        n,
        seed,
        d,
        r2: key.r2,
        e: key.e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ufunc::{u_value, DEFAULT_U_EPS};

    #[test]
    fn inverse_gamma_moment() {
        // E[InvGamma(3, 2)] = beta/(alpha-1) = 1
        let mut rng = worker_rng(42, 0);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let s = sample_inverse_gamma(3.0, 2.0, &mut rng).unwrap();
            assert!(s > 0.0);
            sum += s;
            sq += s * s;
        }
        let mean = sum / n as f64;
        let var = (sq / n as f64 - mean * mean).max(0.0);
        let stderr = (var / n as f64).sqrt();
        assert!(
            (mean - 1.0).abs() < 3.0 * stderr.max(1e-4),
            "mean {mean}, stderr {stderr}"
        );
    }

    #[test]
    fn inverse_gamma_rejects_bad_parameters() {
        let mut rng = worker_rng(1, 0);
        assert!(sample_inverse_gamma(0.0, 1.0, &mut rng).is_err());
        assert!(sample_inverse_gamma(1.0, -1.0, &mut rng).is_err());
    }

    #[test]
    fn fixed_seed_identical_stream() {
        let a: Vec<f64> = {
            let mut rng = worker_rng(9, 3);
            (0..100)
                .map(|_| sample_inverse_gamma(2.0, 0.25, &mut rng).unwrap())
                .collect()
        };
        let b: Vec<f64> = {
            let mut rng = worker_rng(9, 3);
            (0..100)
                .map(|_| sample_inverse_gamma(2.0, 0.25, &mut rng).unwrap())
                .collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn report_deterministic() {
        let a = u_monte_carlo(&[1, 0], 20_000, 5).unwrap();
        let b = u_monte_carlo(&[1, 0], 20_000, 5).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn mean_is_negative() {
        for m in [vec![1i64, 0], vec![1, 1], vec![2, 1], vec![1, 1, 1]] {
            let rep = u_monte_carlo(&m, 10_000, 17).unwrap();
            assert!(rep.mean < 0.0, "m = {m:?}: {}", rep.mean);
        }
    }

    #[test]
    fn agrees_with_quadrature() {
        let rep = u_monte_carlo(&[1, 0], 1_000_000, 31).unwrap();
        assert!(rep.stderr <= 2e-3, "stderr {}", rep.stderr);
        let key = UCacheKey::from_point(&[1, 0]).unwrap();
        let u = u_value(key, 2, DEFAULT_U_EPS).unwrap();
        assert!(
            (rep.mean - u).abs() <= 3.0 * rep.stderr,
            "mc {} vs quadrature {u}, stderr {}",
            rep.mean,
            rep.stderr
        );
    }

    #[test]
    fn symmetric_under_negation() {
        let a = u_monte_carlo(&[2, 1], 100_000, 23).unwrap();
        let b = u_monte_carlo(&[-2, -1], 100_000, 29).unwrap();
        let tol = 3.0 * (a.stderr.hypot(b.stderr));
        assert!((a.mean - b.mean).abs() <= tol, "{} vs {}", a.mean, b.mean);
    }

    #[test]
    fn stderr_clt_scaling() {
        let small = u_monte_carlo(&[1, 0], 50_000, 77).unwrap();
        let big = u_monte_carlo(&[1, 0], 200_000, 77).unwrap();
        let ratio = small.stderr / big.stderr;
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
    }
}
