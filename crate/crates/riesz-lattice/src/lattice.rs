//! Finitely supported lattice functions, kernel application (direct and FFT
//! convolution paths), and the dilation approximation of the continuous
//! second-order Riesz transform.

use crate::error::{Error, Result};
use crate::fft::{fftn, good_fft_size};
use crate::kernels::{riesz_constant, KernelSpec, KernelTable};
use crate::quad::adaptive_gl;
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::{BufRead, Read, Write};

/// Dense complex-valued function on a centered box of Z^d; identically zero
/// outside the box, so l^p norms over the array equal sums over Z^d.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    half: Vec<i64>,
    values: Vec<Complex64>,
}

impl LatticeFunction {
    pub fn zeros(half: Vec<i64>) -> Result<Self> {
        if half.len() < 2 {
            return Err(Error::DimensionTooSmall(half.len()));
        }
        if half.iter().any(|&h| h < 0) {
            return Err(Error::InvalidParameter("negative box half-width".into()));
        }
        let len: usize = half.iter().map(|&h| (2 * h + 1) as usize).product();
        Ok(LatticeFunction {
            half,
            values: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    /// Kronecker delta at the origin on the given box.
    pub fn delta(half: Vec<i64>) -> Result<Self> {
        let mut f = Self::zeros(half)?;
        let origin = vec![0; f.dim()];
        f.set(&origin, Complex64::new(1.0, 0.0))?;
        Ok(f)
    }

    /// Fill from a closure over the box points.
    pub fn from_fn(half: Vec<i64>, g: impl Fn(&[i64]) -> Complex64) -> Result<Self> {
        let mut f = Self::zeros(half)?;
        for (i, n) in f.points().into_iter().enumerate() {
            f.values[i] = g(&n);
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.half.len()
    }

    pub fn half_widths(&self) -> &[i64] {
        &self.half
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn index(&self, n: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for (&c, &h) in n.iter().zip(self.half.iter()) {
            if c < -h || c > h {
                return None;
            }
            idx = idx * (2 * h + 1) as usize + (c + h) as usize;
        }
        Some(idx)
    }

    /// Value at n; zero outside the box.
    pub fn get(&self, n: &[i64]) -> Complex64 {
        match self.index(n) {
            Some(i) => self.values[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, n: &[i64], v: Complex64) -> Result<()> {
        match self.index(n) {
            Some(i) => {
                self.values[i] = v;
                Ok(())
            }
            None => Err(Error::InvalidParameter(format!(
                "point {n:?} outside box {:?}",
                self.half
            ))),
        }
    }

    /// All box points in lexicographic (storage) order.
    pub fn points(&self) -> Vec<Vec<i64>> {
        let d = self.dim();
        let mut out = Vec::with_capacity(self.values.len());
        let mut cur: Vec<i64> = self.half.iter().map(|&h| -h).collect();
        for _ in 0..self.values.len() {
            out.push(cur.clone());
            for i in (0..d).rev() {
                if cur[i] < self.half[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = -self.half[i];
            }
        }
        out
    }

    /// l^p norm, p in (1, inf); also accepts p = 2 fast path.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p = {p} outside (1, inf)")));
        }
        if (p - 2.0).abs() < 1e-15 {
            return Ok(self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt());
        }
        Ok(self
            .values
            .iter()
            .map(|v| v.norm().powf(p))
            .sum::<f64>()
            .powf(1.0 / p))
    }

    /// Hermitian inner product sum f(n) conj(g(n)).
    pub fn inner(&self, other: &LatticeFunction) -> Complex64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, n) in small.points().into_iter().enumerate() {
            let a = if std::ptr::eq(small, self) {
                small.values[i]
            } else {
                self.get(&n)
            };
            let b = if std::ptr::eq(large, other) {
                other.get(&n)
            } else {
                other.values[i]
            };
            acc += a * b.conj();
        }
        acc
    }

    /// CSV export: columns n1..nd, re, im over the whole box.
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dim()).map(|i| format!("n{i}")).collect();
        writeln!(w, "{},re,im", header.join(","))?;
        for (i, n) in self.points().into_iter().enumerate() {
            let coords: Vec<String> = n.iter().map(|c| c.to_string()).collect();
            let v = self.values[i];
            writeln!(w, "{},{:.17e},{:.17e}", coords.join(","), v.re, v.im)?;
        }
        Ok(())
    }

    /// Parse the CSV format written by `to_csv`; the box is the bounding box
    /// of the listed points.
    pub fn from_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty csv".into()))??;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 4 || cols[cols.len() - 2] != "re" || cols[cols.len() - 1] != "im" {
            return Err(Error::Parse(format!("bad csv header: {header}")));
        }
        let d = cols.len() - 2;
        let mut rows: Vec<(Vec<i64>, Complex64)> = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != d + 2 {
                return Err(Error::Parse(format!("bad csv row: {line}")));
            }
            let mut n = Vec::with_capacity(d);
            for p in &parts[..d] {
                n.push(p.trim().parse::<i64>().map_err(|_| Error::Parse(line.clone()))?);
            }
            let re: f64 = parts[d].trim().parse().map_err(|_| Error::Parse(line.clone()))?;
            let im: f64 = parts[d + 1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(line.clone()))?;
            rows.push((n, Complex64::new(re, im)));
        }
        let half: Vec<i64> = (0..d)
            .map(|i| rows.iter().map(|(n, _)| n[i].abs()).max().unwrap_or(0))
            .collect();
        let mut f = Self::zeros(half)?;
        for (n, v) in rows {
            f.set(&n, v)?;
        }
        Ok(f)
    }

    /// Dense binary export: magic "RLF1", u8 dim, dim x i64 half-widths (LE),
    /// then re/im f64 pairs (LE) in storage order.
    pub fn to_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"RLF1")?;
        w.write_all(&[self.dim() as u8])?;
        for &h in &self.half {
            w.write_all(&h.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn from_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"RLF1" {
            return Err(Error::Parse("bad binary magic".into()));
        }
        let mut db = [0u8; 1];
        r.read_exact(&mut db)?;
        let d = db[0] as usize;
        let mut half = Vec::with_capacity(d);
        let mut b8 = [0u8; 8];
        for _ in 0..d {
            r.read_exact(&mut b8)?;
            half.push(i64::from_le_bytes(b8));
        }
        let mut f = Self::zeros(half)?;
        for i in 0..f.values.len() {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let im = f64::from_le_bytes(b8);
            f.values[i] = Complex64::new(re, im);
        }
        Ok(f)
    }
}

fn table_entries_nonzero(table: &KernelTable) -> Vec<(Vec<i64>, Complex64)> {
    table
        .entries()
        .into_iter()
        .filter(|(_, v)| v.norm_sqr() != 0.0)
        .collect()
}

/// Discrete convolution sum_m kernel(m) f(n - m) by direct summation; the
/// output box is the input box enlarged by the table radius.
pub fn apply_kernel_direct(table: &KernelTable, f: &LatticeFunction) -> Result<LatticeFunction> {
    if table.spec.d != f.dim() {
        return Err(Error::DimensionMismatch(table.spec.d, f.dim()));
    }
    let half: Vec<i64> = f.half.iter().map(|&h| h + table.radius).collect();
    let mut out = LatticeFunction::zeros(half)?;
    let entries = table_entries_nonzero(table);
    let pts = out.points();
    let vals: Vec<Complex64> = pts
        .par_iter()
        .map(|n| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut shifted = n.clone();
            for (m, v) in &entries {
                for i in 0..n.len() {
                    shifted[i] = n[i] - m[i];
                }
                acc += v * f.get(&shifted);
            }
            acc
        })
        .collect();
    out.values = vals;
    Ok(out)
}

/// Same convolution through zero-padded FFTs; the pad covers the full linear
/// convolution support, so there is no wrap-around.
pub fn apply_kernel_fft(table: &KernelTable, f: &LatticeFunction) -> Result<LatticeFunction> {
    if table.spec.d != f.dim() {
        return Err(Error::DimensionMismatch(table.spec.d, f.dim()));
    }
    let half: Vec<i64> = f.half.iter().map(|&h| h + table.radius).collect();
    let dims: Vec<usize> = half.iter().map(|&h| good_fft_size((2 * h + 1) as usize)).collect();
    let total: usize = dims.iter().product();
    let wrap_index = |n: &[i64]| -> usize {
        let mut idx = 0usize;
        for (i, &c) in n.iter().enumerate() {
            let l = dims[i] as i64;
            idx = idx * dims[i] as usize + (((c % l) + l) % l) as usize;
        }
        idx
    };
    let mut ker = vec![Complex64::new(0.0, 0.0); total];
    for (m, v) in table_entries_nonzero(table) {
        ker[wrap_index(&m)] = v;
    }
    let mut fv = vec![Complex64::new(0.0, 0.0); total];
    for (i, n) in f.points().into_iter().enumerate() {
        fv[wrap_index(&n)] = f.values[i];
    }
    fftn(&mut ker, &dims, false);
    fftn(&mut fv, &dims, false);
    for i in 0..total {
        fv[i] *= ker[i];
    }
    fftn(&mut fv, &dims, true);
    let mut out = LatticeFunction::zeros(half)?;
    let pts = out.points();
    for (i, n) in pts.into_iter().enumerate() {
        out.values[i] = fv[wrap_index(&n)];
    }
    Ok(out)
}

/// Convolve with automatic path selection: direct summation when the operand
/// sizes are small, FFT otherwise. Both paths agree to ~1e-10 relative.
pub fn apply_kernel(table: &KernelTable, f: &LatticeFunction) -> Result<LatticeFunction> {
    let out_len: usize = f
        .half
        .iter()
        .map(|&h| (2 * (h + table.radius) + 1) as usize)
        .product();
    let nnz = table_entries_nonzero(table).len();
    if out_len.saturating_mul(nnz) <= 20_000_000 {
        apply_kernel_direct(table, f)
    } else {
        apply_kernel_fft(table, f)
    }
}

/// Build the (possibly composite) kernel table for `spec` at radius `r` and
/// apply it. Composites combine pointwise before convolution, which equals
/// the linear combination of individual applications.
pub fn apply_composite(
    spec: KernelSpec,
    r: i64,
    eps: f64,
    f: &LatticeFunction,
) -> Result<LatticeFunction> {
    let table = crate::kernels::build_table(spec, r, eps)?;
    apply_kernel(&table, f)
}

// ---------------------------------------------------------------------------
// smooth samplers and the dilation experiment
// ---------------------------------------------------------------------------

/// Closed-form smooth test function on R^d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothKind {
    /// exp(-|x|^2 / (2 sigma^2))
    Gaussian { sigma: f64 },
    /// x_axis * exp(-|x|^2 / (2 sigma^2)), axis 1-based
    GaussianMonomial { sigma: f64, axis: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothSampler {
    pub dim: usize,
    pub kind: SmoothKind,
}

impl SmoothSampler {
    pub fn new(dim: usize, kind: SmoothKind) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        let sigma = match kind {
            SmoothKind::Gaussian { sigma } => sigma,
            SmoothKind::GaussianMonomial { sigma, axis } => {
                if axis < 1 || axis > dim {
                    return Err(Error::InvalidParameter(format!("axis {axis} for dim {dim}")));
                }
                sigma
            }
        };
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma = {sigma}")));
        }
        Ok(SmoothSampler { dim, kind })
    }

    pub fn sigma(&self) -> f64 {
        match self.kind {
            SmoothKind::Gaussian { sigma } => sigma,
            SmoothKind::GaussianMonomial { sigma, .. } => sigma,
        }
    }

    /// Radius beyond which values drop below 1e-300.
    pub fn support_radius(&self) -> f64 {
        // exp(-r^2/(2 sigma^2)) < 1e-300 for r > sigma sqrt(600 ln 10)
        self.sigma() * (600.0 * std::f64::consts::LN_10).sqrt() + 1.0
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let r2: f64 = x.iter().map(|&v| v * v).sum();
        match self.kind {
            SmoothKind::Gaussian { sigma } => (-r2 / (2.0 * sigma * sigma)).exp(),
            SmoothKind::GaussianMonomial { sigma, axis } => {
                x[axis - 1] * (-r2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

/// Dilated discrete operator sum_m kernel(m) F(x - eps m), truncated at the
/// table radius; the caller must size the table so that eps * R covers the
/// numerical support of F around x. Serial summation in storage order keeps
/// the result byte-deterministic.
pub fn dilated_apply(
    table: &KernelTable,
    sampler: &SmoothSampler,
    eps: f64,
    x: &[f64],
) -> Result<f64> {
    if sampler.dim != table.spec.d || x.len() != sampler.dim {
        return Err(Error::DimensionMismatch(sampler.dim, table.spec.d));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps}")));
    }
    let mut acc = 0.0;
    let mut y = vec![0.0; x.len()];
    for (m, v) in table.entries() {
        for i in 0..x.len() {
            y[i] = x[i] - eps * m[i] as f64;
        }
        acc += v.re * sampler.eval(&y);
    }
    Ok(acc)
}

/// Classical second-order Riesz transform R^{(jk)} F(x) for a Gaussian F,
/// evaluated on the Fourier side. With F(x) = e^{-|x|^2/(2 sigma^2)} and
/// a = sqrt(2) x / sigma,
///   R F(x) = -pi^{-d/2} int e^{-|u|^2} (u_j u_k/|u|^2) cos(a . u) du.
/// Writing 1/|u|^2 = int_0^inf e^{-beta |u|^2} dbeta makes every u-integral
/// a closed-form product of one-dimensional Gaussian moments; after the
/// substitution w = 1/(1 + beta) a single smooth integral over [0, 1]
/// remains:
///   j != k: R F(x) = (a_j a_k / 4) int_0^1 w^{d/2} e^{-|a|^2 w/4} dw
///   j == k: R F(x) = -int_0^1 w^{d/2} e^{-|a|^2 w/4} (1/(2w) - a_j^2/4) dw.
/// Summing the diagonal reproduces sum_j R^{(jj)} F = -F exactly.
pub fn classical_riesz_oracle(
    j: usize,
    k: usize,
    sampler: &SmoothSampler,
    x: &[f64],
) -> Result<f64> {
    let d = sampler.dim;
    if x.len() != d {
        return Err(Error::DimensionMismatch(x.len(), d));
    }
    if j < 1 || j > d || k < 1 || k > d {
        return Err(Error::InvalidIndices { j, k, d });
    }
    let sigma = match sampler.kind {
        SmoothKind::Gaussian { sigma } => sigma,
        _ => {
            return Err(Error::InvalidParameter(
                "oracle supports the Gaussian sampler only".into(),
            ))
        }
    };
    let a: Vec<f64> = x.iter().map(|&v| std::f64::consts::SQRT_2 * v / sigma).collect();
    let a2: f64 = a.iter().map(|&v| v * v).sum();
    let dh = d as f64 / 2.0;
    if j != k {
        let v = adaptive_gl(|w: f64| w.powf(dh) * (-a2 * w / 4.0).exp(), 0.0, 1.0, 1e-12)?;
        Ok(a[j - 1] * a[k - 1] / 4.0 * v)
    } else {
        let aj2 = a[j - 1] * a[j - 1];
        let v = adaptive_gl(
            |w: f64| {
                if w <= 0.0 {
                    0.0
                } else {
                    w.powf(dh) * (-a2 * w / 4.0).exp() * (0.5 / w - aj2 / 4.0)
                }
            },
            0.0,
            1.0,
            1e-12,
        )?;
        Ok(-v)
    }
}

/// Independent physical-space oracle for d = 2, j != k: principal-value
/// integral of the continuous kernel c_2 y_1 y_2 / |y|^4 against F in polar
/// coordinates. The angular average vanishes to second order at r = 0, so
/// the radial integrand (1/r) x angular integral is smooth.
pub fn polar_pv_oracle(sampler: &SmoothSampler, x: &[f64]) -> Result<f64> {
    if sampler.dim != 2 || x.len() != 2 {
        return Err(Error::NotPlanar(sampler.dim));
    }
    let n_phi = 256;
    let c2 = riesz_constant(2)?;
    let r_max = sampler.support_radius() + x.iter().map(|&v| v * v).sum::<f64>().sqrt();
    let g = |r: f64| -> f64 {
        let mut s = 0.0;
        for i in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / n_phi as f64;
            let (c, sn) = (phi.cos(), phi.sin());
            s += c * sn * sampler.eval(&[x[0] - r * c, x[1] - r * sn]);
        }
        s * 2.0 * std::f64::consts::PI / n_phi as f64 / r
    };
    let v = adaptive_gl(g, 0.0, r_max, 1e-11)?;
    Ok(c2 * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_table, Combination, Family};

    fn spec12() -> KernelSpec {
        KernelSpec::new(Family::ClassicalDiscrete, 2, 1, 2, Combination::Single).unwrap()
    }

    /// Deterministic pseudo-random fill keyed by coordinates and seed.
    fn random_f_coords(half: Vec<i64>, seed: u64) -> LatticeFunction {
        LatticeFunction::from_fn(half, |n| {
            let mut h = seed;
            for &c in n {
                h = h
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(c as u64 ^ 0x9e3779b97f4a7c15);
            }
            let v = (h >> 11) as f64 / (1u64 << 53) as f64;
            Complex64::new(2.0 * v - 1.0, 0.0)
        })
        .unwrap()
    }

    #[test]
    fn zero_table_gives_zero() {
        // the (1,2) classical table at R = 1 is identically zero
        let table = build_table(spec12(), 1, 1e-8).unwrap();
        let f = random_f_coords(vec![4, 4], 7);
        let out = apply_kernel(&table, &f).unwrap();
        assert!(out.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn delta_returns_table() {
        let table = build_table(spec12(), 3, 1e-8).unwrap();
        let f = LatticeFunction::delta(vec![2, 2]).unwrap();
        let out = apply_kernel_direct(&table, &f).unwrap();
        for (m, v) in table.entries() {
            assert_eq!(out.get(&m), v, "m={m:?}");
        }
    }

    #[test]
    fn direct_and_fft_paths_agree() {
        let spec = KernelSpec::new(Family::Probabilistic, 2, 1, 2, Combination::Single).unwrap();
        let table = build_table(spec, 16, 1e-8).unwrap();
        let f = random_f_coords(vec![16, 16], 42);
        let a = apply_kernel_direct(&table, &f).unwrap();
        let b = apply_kernel_fft(&table, &f).unwrap();
        let scale = a.lp_norm(2.0).unwrap().max(1.0);
        let mut max_diff: f64 = 0.0;
        for (i, v) in a.values.iter().enumerate() {
            max_diff = max_diff.max((v - b.values[i]).norm());
        }
        assert!(max_diff / scale <= 1e-10, "max diff {max_diff}");
    }

    #[test]
    fn translation_equivariance() {
        let table = build_table(spec12(), 3, 1e-8).unwrap();
        let g = random_f_coords(vec![3, 3], 5);
        // embed g and its shift by s in a common larger box
        let s = [2i64, -1];
        let f1 = LatticeFunction::from_fn(vec![8, 8], |n| g.get(n)).unwrap();
        let f2 = LatticeFunction::from_fn(vec![8, 8], |n| g.get(&[n[0] - s[0], n[1] - s[1]]))
            .unwrap();
        let o1 = apply_kernel_direct(&table, &f1).unwrap();
        let o2 = apply_kernel_direct(&table, &f2).unwrap();
        for n in o1.points() {
            let shifted = [n[0] + s[0], n[1] + s[1]];
            if shifted[0].abs() <= 11 && shifted[1].abs() <= 11 {
                assert_eq!(o1.get(&n), o2.get(&shifted), "n={n:?}");
            }
        }
    }

    #[test]
    fn adjoint_symmetry_at_p2() {
        let spec = KernelSpec::new(Family::Probabilistic, 2, 1, 2, Combination::Single).unwrap();
        let table = build_table(spec, 6, 1e-8).unwrap();
        let f = random_f_coords(vec![6, 6], 11);
        let g = random_f_coords(vec![6, 6], 23);
        let tf = apply_kernel_direct(&table, &f).unwrap();
        let tg = apply_kernel_direct(&table, &g).unwrap();
        let lhs = tf.inner(&g);
        let rhs = f.inner(&tg);
        assert!((lhs - rhs).norm() < 1e-10, "lhs={lhs} rhs={rhs}");
    }

    #[test]
    fn composite_linearity() {
        let f = random_f_coords(vec![5, 5], 3);
        let spec_dd =
            KernelSpec::new(Family::ClassicalDiscrete, 2, 1, 2, Combination::DiagDiff).unwrap();
        let combined = apply_composite(spec_dd, 4, 1e-8, &f).unwrap();
        let s11 = KernelSpec::new(Family::ClassicalDiscrete, 2, 1, 1, Combination::Single).unwrap();
        let s22 = KernelSpec::new(Family::ClassicalDiscrete, 2, 2, 2, Combination::Single).unwrap();
        let a = apply_composite(s11, 4, 1e-8, &f).unwrap();
        let b = apply_composite(s22, 4, 1e-8, &f).unwrap();
        for (i, n) in combined.points().into_iter().enumerate() {
            let expect = a.get(&n) - b.get(&n);
            assert!((combined.values[i] - expect).norm() < 1e-12, "n={n:?}");
        }
        // 2*(1,2) equals twice the single application
        let spec_tw =
            KernelSpec::new(Family::ClassicalDiscrete, 2, 1, 2, Combination::Twice).unwrap();
        let twice = apply_composite(spec_tw, 4, 1e-8, &f).unwrap();
        let single = apply_composite(spec12(), 4, 1e-8, &f).unwrap();
        for (i, n) in twice.points().into_iter().enumerate() {
            assert!((twice.values[i] - 2.0 * single.get(&n)).norm() < 1e-12);
        }
    }

    #[test]
    fn trace_identity_on_delta() {
        // (R^{(11)} + R^{(22)})_dis applied to delta gives c_2 / |m|^2
        let f = LatticeFunction::delta(vec![1, 1]).unwrap();
        let s11 = KernelSpec::new(Family::ClassicalDiscrete, 2, 1, 1, Combination::Single).unwrap();
        let s22 = KernelSpec::new(Family::ClassicalDiscrete, 2, 2, 2, Combination::Single).unwrap();
        let a = apply_composite(s11, 4, 1e-8, &f).unwrap();
        let b = apply_composite(s22, 4, 1e-8, &f).unwrap();
        let c2 = riesz_constant(2).unwrap();
        for n in a.points() {
            let r2 = (n[0] * n[0] + n[1] * n[1]) as f64;
            if r2 > 0.0 && r2 <= 16.0 {
                let got = (a.get(&n) + b.get(&n)).re;
                assert!((got - c2 / r2).abs() < 1e-14, "n={n:?} got={got}");
            }
        }
    }

    #[test]
    fn ba_real_imag_decomposition() {
        let f = random_f_coords(vec![4, 4], 9);
        let ba = KernelSpec::new(Family::BaDiscrete, 2, 1, 2, Combination::Single).unwrap();
        let out = apply_composite(ba, 4, 1e-8, &f).unwrap();
        let sdd =
            KernelSpec::new(Family::ClassicalDiscrete, 2, 2, 1, Combination::DiagDiff).unwrap();
        let re_part = apply_composite(sdd, 4, 1e-8, &f).unwrap();
        let s21 = KernelSpec::new(Family::ClassicalDiscrete, 2, 2, 1, Combination::Twice).unwrap();
        let im_part = apply_composite(s21, 4, 1e-8, &f).unwrap();
        for (i, n) in out.points().into_iter().enumerate() {
            let v = out.values[i];
            assert!((v.re - re_part.get(&n).re).abs() < 1e-12, "n={n:?}");
            assert!((v.im - im_part.get(&n).re).abs() < 1e-12, "n={n:?}");
        }
    }

    #[test]
    fn lp_norms_and_io_round_trip() {
        let f = random_f_coords(vec![3, 3], 1);
        assert!(f.lp_norm(1.0).is_err());
        let n2 = f.lp_norm(2.0).unwrap();
        assert!(n2 > 0.0);
        let mut csv = Vec::new();
        f.to_csv(&mut csv).unwrap();
        let g = LatticeFunction::from_csv(std::io::BufReader::new(csv.as_slice())).unwrap();
        for n in f.points() {
            assert!((f.get(&n) - g.get(&n)).norm() < 1e-16);
        }
        let mut bin = Vec::new();
        f.to_binary(&mut bin).unwrap();
        let h = LatticeFunction::from_binary(bin.as_slice()).unwrap();
        assert_eq!(f, h);
    }

    #[test]
    fn dilated_apply_symmetry_zero() {
        // odd kernel against radial Gaussian at x = 0 cancels exactly
        let table = build_table(spec12(), 40, 1e-8).unwrap();
        let f = SmoothSampler::new(2, SmoothKind::Gaussian { sigma: 0.4 }).unwrap();
        let v = dilated_apply(&table, &f, 0.25, &[0.0, 0.0]).unwrap();
        assert!(v.abs() < 1e-10, "got {v}");
    }

    #[test]
    fn oracle_symmetries() {
        let f = SmoothSampler::new(2, SmoothKind::Gaussian { sigma: 0.4 }).unwrap();
        let v = classical_riesz_oracle(1, 2, &f, &[0.0, 0.0]).unwrap();
        assert!(v.abs() < 1e-12, "R12 F(0) = {v}");
        // multipliers sum to -1: R11 F + R22 F = -F
        for x in [[0.0, 0.0], [0.3, 0.1], [-0.5, 0.7]] {
            let a = classical_riesz_oracle(1, 1, &f, &x).unwrap();
            let b = classical_riesz_oracle(2, 2, &f, &x).unwrap();
            assert!((a + b + f.eval(&x)).abs() < 1e-8, "x={x:?}: {}", a + b);
        }
    }

    #[test]
    fn oracles_agree() {
        let f = SmoothSampler::new(2, SmoothKind::Gaussian { sigma: 0.4 }).unwrap();
        let x = [0.3, 0.1];
        let a = classical_riesz_oracle(1, 2, &f, &x).unwrap();
        let b = polar_pv_oracle(&f, &x).unwrap();
        assert!((a - b).abs() < 1e-6, "fourier={a} polar={b}");
    }

    #[test]
    fn dilation_error_decreases() {
        let f = SmoothSampler::new(2, SmoothKind::Gaussian { sigma: 0.4 }).unwrap();
        let x = [0.3, 0.1];
        let exact = classical_riesz_oracle(1, 2, &f, &x).unwrap();
        let mut prev = f64::INFINITY;
        for &eps in &[0.25, 0.125] {
            let r = ((f.support_radius() + 1.0) / eps).ceil() as i64;
            let table = build_table(spec12(), r, 1e-8).unwrap();
            let v = dilated_apply(&table, &f, eps, &x).unwrap();
            let err = (v - exact).abs();
            assert!(err < prev, "eps={eps}: err={err} prev={prev}");
            prev = err;
        }
    }
}
