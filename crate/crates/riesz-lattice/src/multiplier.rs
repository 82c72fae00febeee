//! Truncated torus Fourier multipliers of kernel tables,
//! m_R(xi) = sum_{0<|m|<=R} kernel(m) e^{-2 pi i m . xi}, xi in [-1/2, 1/2)^d,
//! their sup-norms, and an l^2 operator-norm cross-check by power iteration
//! on a finite section.

use crate::error::{Error, Result};
use crate::fft::fftn;
use crate::kernels::{build_table, KernelSpec, KernelTable};
use crate::lattice::{apply_kernel, LatticeFunction};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// Multiplier values over the uniform grid xi = k/N per axis (k = 0..N,
/// canonically shifted to [-1/2, 1/2)).
#[derive(Debug, Clone)]
pub struct MultiplierGrid {
    pub d: usize,
    pub resolution: usize,
    pub radius: i64,
    /// true when the generating table carries a finite l^1 tail bound
    pub tail_flag: bool,
    values: Vec<Complex64>,
}

impl MultiplierGrid {
    fn index(&self, k: &[usize]) -> usize {
        let mut idx = 0;
        for &ki in k {
            idx = idx * self.resolution + ki;
        }
        idx
    }

    /// Grid value at integer index k (each coordinate in 0..resolution).
    pub fn at_index(&self, k: &[usize]) -> Complex64 {
        self.values[self.index(k)]
    }

    /// Frequency coordinate of index k, reduced to [-1/2, 1/2).
    pub fn xi_of_index(&self, k: &[usize]) -> Vec<f64> {
        k.iter()
            .map(|&ki| {
                let x = ki as f64 / self.resolution as f64;
                if x >= 0.5 {
                    x - 1.0
                } else {
                    x
                }
            })
            .collect()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// All indices in storage order.
    fn indices(&self) -> Vec<Vec<usize>> {
        let total = self.values.len();
        let mut out = Vec::with_capacity(total);
        let mut cur = vec![0usize; self.d];
        for _ in 0..total {
            out.push(cur.clone());
            for i in (0..self.d).rev() {
                cur[i] += 1;
                if cur[i] < self.resolution {
                    break;
                }
                cur[i] = 0;
            }
        }
        out
    }

    /// CSV export: xi1..xid, re, im, abs.
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.d).map(|i| format!("xi{i}")).collect();
        writeln!(w, "{},re,im,abs", header.join(","))?;
        for k in self.indices() {
            let xi = self.xi_of_index(&k);
            let v = self.at_index(&k);
            let coords: Vec<String> = xi.iter().map(|x| format!("{x:.10}")).collect();
            writeln!(
                w,
                "{},{:.17e},{:.17e},{:.17e}",
                coords.join(","),
                v.re,
                v.im,
                v.norm()
            )?;
        }
        Ok(())
    }
}

/// Evaluate the truncated multiplier on the N^d grid by folding the table
/// into the grid modulo N and taking a forward FFT; exact for the truncated
/// sum at grid frequencies regardless of N vs R.
pub fn multiplier_eval(table: &KernelTable, resolution: usize) -> Result<MultiplierGrid> {
    if resolution < 8 {
        return Err(Error::InvalidParameter(format!(
            "resolution {resolution} < 8"
        )));
    }
    let d = table.spec.d;
    let n = resolution;
    let total = n.pow(d as u32);
    let mut grid = vec![Complex64::new(0.0, 0.0); total];
    for (m, v) in table.entries() {
        let mut idx = 0usize;
        for &c in &m {
            let l = n as i64;
            idx = idx * n + (((c % l) + l) % l) as usize;
        }
        grid[idx] += v;
    }
    fftn(&mut grid, &vec![n; d], false);
    Ok(MultiplierGrid {
        d,
        resolution,
        radius: table.radius,
        tail_flag: table.tail_bound.is_finite(),
        values: grid,
    })
}

/// Direct (non-FFT) evaluation of the truncated multiplier at an arbitrary
/// frequency. Chunked parallel partial sums are combined in fixed order, so
/// the result does not depend on the thread count.
pub fn direct_multiplier(table: &KernelTable, xi: &[f64]) -> Complex64 {
    let entries = table.entries();
    let partials: Vec<Complex64> = entries
        .par_chunks(8192)
        .map(|chunk| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, v) in chunk {
                let phase: f64 = m
                    .iter()
                    .zip(xi.iter())
                    .map(|(&mi, &x)| mi as f64 * x)
                    .sum::<f64>()
                    * (-2.0 * std::f64::consts::PI);
                acc += v * Complex64::new(phase.cos(), phase.sin());
            }
            acc
        })
        .collect();
    partials.into_iter().sum()
}

/// Result of a sup-norm search.
#[derive(Debug, Clone, Serialize)]
pub struct SupNorm {
    pub grid_max: f64,
    pub refined: f64,
    pub argmax: Vec<f64>,
    pub radius: i64,
    pub resolution: usize,
}

/// Grid maximum of |m_R| followed by `refine` rounds of per-coordinate
/// golden-section refinement around the argmax, using direct phase sums
/// (no grid interpolation).
pub fn sup_norm(grid: &MultiplierGrid, table: &KernelTable, refine: usize) -> SupNorm {
    let mut best_idx = 0usize;
    let mut best = 0.0f64;
    for (i, v) in grid.values().iter().enumerate() {
        let a = v.norm();
        if a > best {
            best = a;
            best_idx = i;
        }
    }
    // decode storage index
    let mut k = vec![0usize; grid.d];
    let mut rem = best_idx;
    for i in (0..grid.d).rev() {
        k[i] = rem % grid.resolution;
        rem /= grid.resolution;
    }
    let mut xi = grid.xi_of_index(&k);
    let grid_max = best;
    let mut refined = best;
    let h0 = 1.0 / grid.resolution as f64;
    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
    for round in 0..refine {
        let h = h0 / (2.0f64.powi(round as i32));
        for axis in 0..grid.d {
            let f = |t: f64| -> f64 {
                let mut p = xi.clone();
                p[axis] = t;
                direct_multiplier(table, &p).norm()
            };
            let (mut a, mut b) = (xi[axis] - h, xi[axis] + h);
            let mut c = b - gr * (b - a);
            let mut dpt = a + gr * (b - a);
            let (mut fc, mut fd) = (f(c), f(dpt));
            for _ in 0..40 {
                if fc > fd {
                    b = dpt;
                    dpt = c;
                    fd = fc;
                    c = b - gr * (b - a);
                    fc = f(c);
                } else {
                    a = c;
                    c = dpt;
                    fc = fd;
                    dpt = a + gr * (b - a);
                    fd = f(dpt);
                }
            }
            let t = 0.5 * (a + b);
            let ft = f(t);
            if ft > refined {
                refined = ft;
                xi[axis] = t;
            }
        }
    }
    SupNorm {
        grid_max,
        refined,
        argmax: xi,
        radius: grid.radius,
        resolution: grid.resolution,
    }
}

/// Adjoint table: values conj(kernel(-m)).
pub fn adjoint_table(table: &KernelTable) -> KernelTable {
    let mut t = table.clone();
    let entries = table.entries();
    for (m, v) in entries {
        let neg: Vec<i64> = m.iter().map(|&c| -c).collect();
        t.set_value(&neg, v.conj());
    }
    t
}

/// Crop to the centered box with the given half-widths.
pub fn crop(f: &LatticeFunction, half: &[i64]) -> LatticeFunction {
    LatticeFunction::from_fn(half.to_vec(), |n| f.get(n)).unwrap()
}

/// Power iteration for the l^2 norm of the finite section P_B T P_B:
/// iterates f <- P T* P T f and returns sqrt of the dominant eigenvalue of
/// (P T P)* (P T P). Dominated by the full multiplier sup-norm.
pub fn l2_norm_power_iteration(
    spec: KernelSpec,
    r: i64,
    box_half: i64,
    iters: usize,
    seed: u64,
    eps: f64,
) -> Result<f64> {
    if iters < 1 {
        return Err(Error::InvalidParameter("iters < 1".into()));
    }
    let table = build_table(spec, r, eps)?;
    let adj = adjoint_table(&table);
    let half = vec![box_half; spec.d];
    // deterministic pseudo-random start keyed by coordinates and seed
    let mut f = LatticeFunction::from_fn(half.clone(), |n| {
        let mut h = seed ^ 0x5851f42d4c957f2d;
        for &c in n {
            h = h
                .wrapping_mul(6364136223846793005)
                .wrapping_add(c as u64 ^ 0x9e3779b97f4a7c15);
        }
        let re = (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        let im = ((h.wrapping_mul(0x2545f4914f6cdd1d)) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        Complex64::new(re, im)
    })?;
    let mut lambda = 0.0f64;
    for _ in 0..iters {
        let norm = f.lp_norm(2.0)?;
        if norm == 0.0 {
            return Ok(0.0);
        }
        let scaled = LatticeFunction::from_fn(half.clone(), |n| f.get(n) / norm)?;
        let tf = crop(&apply_kernel(&table, &scaled)?, &half);
        let ttf = crop(&apply_kernel(&adj, &tf)?, &half);
        // Rayleigh quotient <T*T f, f> = ||P T f||^2 for unit f
        lambda = ttf.inner(&scaled).re;
        f = ttf;
    }
    Ok(lambda.max(0.0).sqrt())
}
