//! Operator-norm reference constants and an l^p -> l^p lower-bound search.
//!
//! The constants are the classical comparison values: the Burkholder constant
//! p* - 1, Choi-constant bounds max{1, (p*-1)/2} <= gamma(p) <= p*/2 with the
//! large-p asymptotic expansion of gamma(p), and the conformal-martingale
//! bound sqrt(2p(p-1)). The search lower-bounds ||T||_{p->p} for a tabulated
//! convolution kernel by nonlinear power iteration on a finite box; every
//! reported value is an achieved ratio ||Tf||_p / ||f||_p on an explicit f,
//! hence a true lower bound for the full operator.

use crate::error::{Error, Result};
use crate::kernels::{build_table, KernelSpec, KernelTable};
use crate::lattice::{apply_kernel, LatticeFunction};
use crate::multiplier::{adjoint_table, crop, multiplier_eval, sup_norm};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// p* - 1 = max(p - 1, 1/(p - 1)): 1/(p-1) for 1 < p <= 2, p-1 for p >= 2.
pub fn burkholder_constant(p: f64) -> Result<f64> {
    check_p(p)?;
    if p <= 2.0 {
        Ok(1.0 / (p - 1.0))
    } else {
        Ok(p - 1.0)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "exponent p = {p} outside (1, inf)"
        )));
    }
    Ok(())
}

/// Smallest exponent at which the large-p asymptotic for gamma(p) is served;
/// below this it can violate the rigorous bounds.
pub const CHOI_P_MIN: f64 = 6.0;

/// Second-order coefficient alpha_2 in the large-p expansion of gamma(p):
/// with L = log((1 + e^{-2})/2),
/// alpha_2 = L^2 + L/2 - 2 (e^{-2}/(1 + e^{-2}))^2, approximately 0.009.
pub fn choi_alpha2() -> f64 {
    let e2 = (-2.0f64).exp();
    let l = ((1.0 + e2) / 2.0).ln();
    l * l + 0.5 * l - 2.0 * (e2 / (1.0 + e2)).powi(2)
}

/// Large-p asymptotic gamma(p) ~ p/2 + (1/2) log((1+e^{-2})/2) + alpha_2/p.
/// Requires p >= CHOI_P_MIN.
pub fn choi_gamma_asymptotic(p: f64) -> Result<f64> {
    check_p(p)?;
    if p < CHOI_P_MIN {
        return Err(Error::InvalidParameter(format!(
            "asymptotic gamma(p) requires p >= {CHOI_P_MIN}, got {p}"
        )));
    }
    let e2 = (-2.0f64).exp();
    let l = ((1.0 + e2) / 2.0).ln();
    Ok(p / 2.0 + 0.5 * l + choi_alpha2() / p)
}

/// Rigorous two-sided bounds max{1, (p*-1)/2} <= gamma(p) <= p*/2.
pub fn choi_bounds(p: f64) -> Result<(f64, f64)> {
    let pm1 = burkholder_constant(p)?;
    Ok(((pm1 / 2.0).max(1.0), (pm1 + 1.0) / 2.0))
}

/// Conformal-martingale bound sqrt(2p(p-1)) for the Beurling-Ahlfors
/// operator, valid for p >= 2.
pub fn conformal_bound(p: f64) -> Result<f64> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "conformal bound requires 2 <= p < inf, got {p}"
        )));
    }
    Ok((2.0 * p * (p - 1.0)).sqrt())
}

/// Result of one l^p lower-bound search. `value` is the best achieved ratio
/// ||Tf||_p / ||f||_p over all restarts, always a valid lower bound.
#[derive(Debug, Clone, Serialize)]
pub struct NormEstimate {
    pub spec: KernelSpec,
    pub p: f64,
    pub box_half: i64,
    pub radius: i64,
    pub value: f64,
    pub iterations: usize,
    pub seed: u64,
    pub converged: bool,
}

/// |z|^e sign(z) with sign(0) = 0.
fn signed_power(z: Complex64, e: f64) -> Complex64 {
    let a = z.norm();
    if a == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z / a * a.powf(e)
    }
}

fn map_values(f: &LatticeFunction, e: f64) -> LatticeFunction {
    LatticeFunction::from_fn(f.half_widths().to_vec(), |n| signed_power(f.get(n), e)).unwrap()
}

fn normalized(f: &LatticeFunction, p: f64) -> Result<Option<LatticeFunction>> {
    let n = f.lp_norm(p)?;
    if !(n > 0.0) || !n.is_finite() {
        return Ok(None);
    }
    Ok(Some(LatticeFunction::from_fn(
        f.half_widths().to_vec(),
        |m| f.get(m) / n,
    )?))
}

/// Achieved ratio ||Tf||_p / ||f||_p for a feasible (finitely supported) f.
pub fn evaluate_ratio(table: &KernelTable, f: &LatticeFunction, p: f64) -> Result<f64> {
    check_p(p)?;
    let denom = f.lp_norm(p)?;
    if !(denom > 0.0) {
        return Err(Error::InvalidParameter("zero witness".into()));
    }
    let tf = apply_kernel(table, f)?;
    let num = tf.lp_norm(p)?;
    if !num.is_finite() {
        return Err(Error::NonFinite("witness ratio".into()));
    }
    Ok(num / denom)
}

/// One ascent run from a fixed start: iterate the dual-ratio fixed-point map
/// f <- Phi_{p'}( T* ( |Tf|^{p-1} sign(Tf) ) ), Phi_{p'}(u) = |u|^{1/(p-1)}
/// sign(u), normalized in l^p on the box (at p = 2 this is plain power
/// iteration with T* T). Returns (best ratio, best witness, iterations used,
/// converged flag).
fn ascend(
    table: &KernelTable,
    adj: &KernelTable,
    half: &[i64],
    p: f64,
    iters: usize,
    start: &LatticeFunction,
) -> Result<(f64, LatticeFunction, usize, bool)> {
    let mut f = match normalized(start, p)? {
        Some(f) => f,
        None => return Ok((0.0, start.clone(), 0, true)),
    };
    let mut best = 0.0f64;
    let mut best_f = f.clone();
    let mut prev = -1.0f64;
    let mut used = 0usize;
    let mut converged = false;
    for it in 1..=iters {
        used = it;
        let tf = apply_kernel(table, &f)?;
        let ratio = tf.lp_norm(p)?; // f has unit l^p norm
        if !ratio.is_finite() {
            return Err(Error::NonFinite("ascent ratio".into()));
        }
        if ratio > best {
            best = ratio;
            best_f = f.clone();
        }
        if prev >= 0.0 && (ratio - prev).abs() < 1e-8 * ratio.max(1.0) {
            converged = true;
            break;
        }
        prev = ratio;
        let g = map_values(&tf, p - 1.0);
        let back = crop(&apply_kernel(adj, &g)?, half);
        let next = map_values(&back, 1.0 / (p - 1.0));
        match normalized(&next, p)? {
            Some(nf) => f = nf,
            None => {
                converged = true;
                break;
            }
        }
    }
    Ok((best, best_f, used, converged))
}

fn random_start(half: Vec<i64>, seed: u64) -> LatticeFunction {
    LatticeFunction::from_fn(half, |n| {
        let mut h = seed ^ 0x9e3779b97f4a7c15;
        for &c in n {
            h = h
                .wrapping_mul(6364136223846793005)
                .wrapping_add(c as u64 ^ 0x5851f42d4c957f2d);
        }
        let re = (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        let im = ((h.wrapping_mul(0x2545f4914f6cdd1d)) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        Complex64::new(re, im)
    })
    .unwrap()
}

fn plane_wave_start(table: &KernelTable, half: Vec<i64>) -> Result<LatticeFunction> {
    let grid = multiplier_eval(table, 64)?;
    let sn = sup_norm(&grid, table, 2);
    let xi = sn.argmax;
    LatticeFunction::from_fn(half, |n| {
        let phase: f64 = n
            .iter()
            .zip(xi.iter())
            .map(|(&ni, &x)| ni as f64 * x)
            .sum();
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase)
    })
}

/// Lower-bound ||T||_{p->p} for the tabulated kernel by ascent on the box
/// [-box_half, box_half]^d. Three restarts (seeded random, delta at the
/// origin, argmax-multiplier plane wave) run in parallel and the best
/// achieved ratio wins. Deterministic given (spec, p, box, R, iters, seed).
/// Returns the estimate together with the witness f (unit l^p norm).
pub fn lp_lower_bound(
    spec: KernelSpec,
    p: f64,
    box_half: i64,
    r: i64,
    iters: usize,
    seed: u64,
    eps: f64,
) -> Result<(NormEstimate, LatticeFunction)> {
    check_p(p)?;
    if box_half < 1 || iters < 1 {
        return Err(Error::InvalidParameter(
            "box_half and iters must be >= 1".into(),
        ));
    }
    let table = build_table(spec, r, eps)?;
    lp_lower_bound_with_table(&table, p, box_half, iters, seed)
}

/// Same search against an already-built (possibly hand-modified) table.
pub fn lp_lower_bound_with_table(
    table: &KernelTable,
    p: f64,
    box_half: i64,
    iters: usize,
    seed: u64,
) -> Result<(NormEstimate, LatticeFunction)> {
    check_p(p)?;
    let spec = table.spec;
    let half = vec![box_half; spec.d];
    let adj = adjoint_table(table);
    let starts: Vec<LatticeFunction> = vec![
        random_start(half.clone(), seed),
        LatticeFunction::delta(half.clone())?,
        plane_wave_start(table, half.clone())?,
    ];
    let runs: Vec<(f64, LatticeFunction, usize, bool)> = starts
        .par_iter()
        .map(|s| ascend(table, &adj, &half, p, iters, s))
        .collect::<Result<Vec<_>>>()?;
    let best = runs
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("nonempty restart set");
    let (value, witness, iterations, converged) = best;
    Ok((
        NormEstimate {
            spec,
            p,
            box_half,
            radius: table.radius,
            value,
            iterations,
            seed,
            converged,
        },
        witness,
    ))
}
