//! Pointwise kernel formulas and certified truncated kernel tables.
//!
//! Families:
//!   - classical discrete:   K_dis^{(jk)}(m) = c_d m_j m_k / |m|^{d+2}
//!   - probabilistic:        K^{(jk)}(m)     = U(m) K_dis^{(jk)}(m)
//!   - l^1 corrector:        J^{(jk)}(m)     = K_dis^{(jk)}(m) (U(m) + 1)
//!   - continuous CZ:        Kc^{(jk)}(x)    = U(x) c_d x_j x_k/|x|^{d+2} for
//!                           |x| >= 1 and -c_d x_j x_k/|x|^{d+2} for |x| < 1
//! plus the planar Beurling-Ahlfors combinations of the same three discrete
//! families. Indices j, k are 1-based.

use crate::error::{Error, Result};
use crate::ufunc::{gamma_half, u_continuous, u_value, UCacheKey};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashSet;
use std::io::Write;

/// Point of Z^d, d >= 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn new(m: Vec<i64>) -> Result<Self> {
        if m.len() < 2 {
            return Err(Error::DimensionTooSmall(m.len()));
        }
        Ok(LatticePoint(m))
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm2(&self) -> i64 {
        self.0.iter().map(|&c| c * c).sum()
    }
}

/// c_d = pi^{-d/2} Gamma((d+2)/2).
pub fn riesz_constant(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    Ok(std::f64::consts::PI.powf(-(d as f64) / 2.0) * gamma_half(d as u32 + 2))
}

fn check_indices(j: usize, k: usize, d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    if j < 1 || j > d || k < 1 || k > d {
        return Err(Error::InvalidIndices { j, k, d });
    }
    Ok(())
}

/// Classical discrete kernel c_d m_j m_k / |m|^{d+2}; zero at the origin.
pub fn k_dis(j: usize, k: usize, m: &[i64]) -> Result<f64> {
    let d = m.len();
    check_indices(j, k, d)?;
    let r2: i64 = m.iter().map(|&c| c * c).sum();
    if r2 == 0 {
        return Ok(0.0);
    }
    let num = (m[j - 1] * m[k - 1]) as f64;
    Ok(riesz_constant(d)? * num / (r2 as f64).powf((d as f64 + 2.0) / 2.0))
}

/// Probabilistic kernel U(m) K_dis^{(jk)}(m); zero at the origin.
pub fn k_prob(j: usize, k: usize, m: &[i64], eps: f64) -> Result<f64> {
    let kd = k_dis(j, k, m)?;
    if kd == 0.0 {
        return Ok(0.0);
    }
    Ok(u_value(UCacheKey::from_point(m)?, m.len(), eps)? * kd)
}

/// l^1 corrector kernel K_dis^{(jk)}(m) (U(m) + 1); zero at the origin.
pub fn j_kernel(j: usize, k: usize, m: &[i64], eps: f64) -> Result<f64> {
    let kd = k_dis(j, k, m)?;
    if kd == 0.0 {
        return Ok(0.0);
    }
    Ok(kd * (u_value(UCacheKey::from_point(m)?, m.len(), eps)? + 1.0))
}

/// Surface area of the unit sphere S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
fn sphere_area(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half(d as u32)
}

/// Iterate all points of the box [-r, r]^d in lexicographic order.
pub fn box_points(d: usize, r: i64) -> Vec<Vec<i64>> {
    let side = (2 * r + 1) as usize;
    let total = side.pow(d as u32);
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![-r; d];
    for _ in 0..total {
        out.push(cur.clone());
        for i in (0..d).rev() {
            if cur[i] < r {
                cur[i] += 1;
                break;
            }
            cur[i] = -r;
        }
    }
    out
}

/// Partial l^1 norm of J^{(jk)} over 0 < |m| <= R together with a heuristic
/// tail bound. The tail uses the empirical envelope
/// env = sup_{R/2 < |m| <= R} |U(m)+1| |m| extrapolated with the 1/|m| decay
/// law: tail = env * c_d * area(S^{d-1}) / R. Not rigorous; the decay law has
/// no explicit constants.
pub fn j_l1_norm(j: usize, k: usize, d: usize, r: i64, eps: f64) -> Result<(f64, f64)> {
    check_indices(j, k, d)?;
    if r < 1 {
        return Err(Error::InvalidParameter(format!("radius {r} < 1")));
    }
    let pts = box_points(d, r);
    let r2max = r * r;
    let half_r2 = r2max / 4;
    let terms: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|m| -> Result<(f64, f64)> {
            let n2: i64 = m.iter().map(|&c| c * c).sum();
            if n2 == 0 || n2 > r2max {
                return Ok((0.0, 0.0));
            }
            let u = u_value(UCacheKey::from_point(m)?, d, eps)?;
            let jv = k_dis(j, k, m)? * (u + 1.0);
            let env = if n2 > half_r2 {
                (u + 1.0).abs() * (n2 as f64).sqrt()
            } else {
                0.0
            };
            Ok((jv.abs(), env))
        })
        .collect::<Result<_>>()?;
    let partial: f64 = terms.iter().map(|t| t.0).sum();
    let env = terms.iter().map(|t| t.1).fold(0.0, f64::max);
    let tail = env * riesz_constant(d)? * sphere_area(d) / r as f64;
    Ok((partial, tail))
}

/// Continuous Calderon-Zygmund kernel; `x` must be nonzero.
pub fn k_continuous(j: usize, k: usize, x: &[f64], eps: f64) -> Result<f64> {
    let d = x.len();
    check_indices(j, k, d)?;
    let r2: f64 = x.iter().map(|&v| v * v).sum();
    if r2 == 0.0 {
        return Err(Error::OriginArgument);
    }
    let base = riesz_constant(d)? * x[j - 1] * x[k - 1] / r2.powf((d as f64 + 2.0) / 2.0);
    if r2 < 1.0 {
        Ok(-base)
    } else {
        Ok(u_continuous(x, eps)? * base)
    }
}

/// Planar Beurling-Ahlfors kernel variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaVariant {
    Discrete,
    Probabilistic,
    Corrector,
}

/// Beurling-Ahlfors kernels on Z^2; `m` must be nonzero of dimension 2.
///
/// discrete:      -1 / (pi (m_1 + i m_2)^2)
/// probabilistic: (K^{(22)} - K^{(11)})(m) + 2i K^{(21)}(m)
/// corrector:     (1/pi) ((m_2 + i m_1)^2 / |m|^4) (U(m) + 1)
pub fn ba_kernel(variant: BaVariant, m: &[i64], eps: f64) -> Result<Complex64> {
    if m.len() != 2 {
        return Err(Error::NotPlanar(m.len()));
    }
    let (m1, m2) = (m[0] as f64, m[1] as f64);
    let r2 = m1 * m1 + m2 * m2;
    if r2 == 0.0 {
        return Err(Error::OriginArgument);
    }
    let pi = std::f64::consts::PI;
    // (m_2 + i m_1)^2 / |m|^4 = -1 / (m_1 + i m_2)^2
    let base = Complex64::new(m2, m1).powu(2) / (r2 * r2);
    match variant {
        BaVariant::Discrete => Ok(base / pi),
        BaVariant::Probabilistic => {
            let u = u_value(UCacheKey::from_point(m)?, 2, eps)?;
            Ok(base * u / pi)
        }
        BaVariant::Corrector => {
            let u = u_value(UCacheKey::from_point(m)?, 2, eps)?;
            Ok(base * (u + 1.0) / pi)
        }
    }
}

/// Kernel family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Family {
    ClassicalDiscrete,
    Probabilistic,
    CorrectorJ,
    ContinuousCZ,
    BaDiscrete,
    BaProbabilistic,
    BaCorrector,
}

impl Family {
    pub fn is_ba(self) -> bool {
        matches!(
            self,
            Family::BaDiscrete | Family::BaProbabilistic | Family::BaCorrector
        )
    }

    /// Whether the family is absolutely summable over Z^d (so a truncated
    /// table can carry a finite tail bound).
    pub fn is_summable(self) -> bool {
        matches!(self, Family::CorrectorJ | Family::BaCorrector)
    }
}

/// Pointwise linear combination applied to a single-pair family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Combination {
    /// kernel^{(jk)}
    Single,
    /// 2 kernel^{(jk)}
    Twice,
    /// kernel^{(jj)} - kernel^{(kk)}
    DiagDiff,
}

/// Full description of one kernel to tabulate or evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct KernelSpec {
    pub family: Family,
    pub d: usize,
    pub j: usize,
    pub k: usize,
    pub combination: Combination,
}

impl KernelSpec {
    pub fn new(
        family: Family,
        d: usize,
        j: usize,
        k: usize,
        combination: Combination,
    ) -> Result<Self> {
        check_indices(j, k, d)?;
        if family.is_ba() {
            if d != 2 {
                return Err(Error::NotPlanar(d));
            }
            if combination != Combination::Single {
                return Err(Error::InvalidParameter(
                    "Beurling-Ahlfors families admit no combination".into(),
                ));
            }
        }
        Ok(KernelSpec {
            family,
            d,
            j,
            k,
            combination,
        })
    }

    fn eval_pair(&self, j: usize, k: usize, m: &[i64], eps: f64) -> Result<f64> {
        match self.family {
            Family::ClassicalDiscrete => k_dis(j, k, m),
            Family::Probabilistic => k_prob(j, k, m, eps),
            Family::CorrectorJ => j_kernel(j, k, m, eps),
            Family::ContinuousCZ => {
                let x: Vec<f64> = m.iter().map(|&c| c as f64).collect();
                k_continuous(j, k, &x, eps)
            }
            _ => unreachable!("BA handled in eval"),
        }
    }

    /// Kernel value at a lattice point (0 at the origin for discrete
    /// families; the continuous family is undefined there).
    pub fn eval(&self, m: &[i64], eps: f64) -> Result<Complex64> {
        if m.len() != self.d {
            return Err(Error::DimensionMismatch(m.len(), self.d));
        }
        let origin = m.iter().all(|&c| c == 0);
        match self.family {
            Family::BaDiscrete | Family::BaProbabilistic | Family::BaCorrector => {
                if origin {
                    return Err(Error::OriginArgument);
                }
                let variant = match self.family {
                    Family::BaDiscrete => BaVariant::Discrete,
                    Family::BaProbabilistic => BaVariant::Probabilistic,
                    _ => BaVariant::Corrector,
                };
                ba_kernel(variant, m, eps)
            }
            Family::ContinuousCZ if origin => Err(Error::OriginArgument),
            _ => {
                if origin {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let v = match self.combination {
                    Combination::Single => self.eval_pair(self.j, self.k, m, eps)?,
                    Combination::Twice => 2.0 * self.eval_pair(self.j, self.k, m, eps)?,
                    Combination::DiagDiff => {
                        self.eval_pair(self.j, self.j, m, eps)?
                            - self.eval_pair(self.k, self.k, m, eps)?
                    }
                };
                Ok(Complex64::new(v, 0.0))
            }
        }
    }
}

/// Dense truncated kernel table over {m : 0 < |m| <= R}, stored on the box
/// [-R, R]^d with zeros outside the ball and at the origin.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub spec: KernelSpec,
    pub radius: i64,
    values: Vec<Complex64>,
    /// Heuristic bound on the l^1 tail sum_{|m|>R} |kernel(m)| for summable
    /// families; infinity otherwise. Not rigorous (extrapolated 1/|m| law).
    pub tail_bound: f64,
}

impl KernelTable {
    fn side(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    fn index(&self, m: &[i64]) -> Option<usize> {
        let side = self.side();
        let mut idx = 0usize;
        for &c in m {
            if c < -self.radius || c > self.radius {
                return None;
            }
            idx = idx * side + (c + self.radius) as usize;
        }
        Some(idx)
    }

    /// Overwrite one stored value (used for derived tables, e.g. adjoints).
    pub fn set_value(&mut self, m: &[i64], v: Complex64) {
        if let Some(i) = self.index(m) {
            self.values[i] = v;
        }
    }

    /// Table value; zero outside the stored ball.
    pub fn get(&self, m: &[i64]) -> Complex64 {
        assert_eq!(m.len(), self.spec.d);
        match self.index(m) {
            Some(i) => self.values[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// All points of the ball 0 < |m| <= R with their values, in the
    /// lexicographic box order. The origin is included only when a nonzero
    /// value has been injected there (delta-kernel self-tests).
    pub fn entries(&self) -> Vec<(Vec<i64>, Complex64)> {
        let r2 = self.radius * self.radius;
        box_points(self.spec.d, self.radius)
            .into_iter()
            .filter_map(|m| {
                let n2: i64 = m.iter().map(|&c| c * c).sum();
                if n2 > r2 {
                    return None;
                }
                let v = self.get(&m);
                if n2 == 0 && v.norm_sqr() == 0.0 {
                    return None;
                }
                Some((m, v))
            })
            .collect()
    }

    /// CSV export with columns m1..md, re, im.
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.spec.d).map(|i| format!("m{i}")).collect();
        writeln!(w, "{},re,im", header.join(","))?;
        for (m, v) in self.entries() {
            let coords: Vec<String> = m.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{},{:.17e},{:.17e}", coords.join(","), v.re, v.im)?;
        }
        Ok(())
    }
}

/// Build the dense table for `spec` up to radius `r`. The fill is
/// data-parallel over lattice points and deterministic at fixed tolerance:
/// every value is a pure function of its point, so thread count cannot
/// change results.
pub fn build_table(spec: KernelSpec, r: i64, eps: f64) -> Result<KernelTable> {
    if r < 1 {
        return Err(Error::InvalidParameter(format!("radius {r} < 1")));
    }
    let d = spec.d;
    let pts = box_points(d, r);
    let r2max = r * r;
    // warm the U cache in parallel over distinct key classes first
    if matches!(
        spec.family,
        Family::Probabilistic | Family::CorrectorJ | Family::BaProbabilistic | Family::BaCorrector
    ) {
        let keys: HashSet<UCacheKey> = pts
            .iter()
            .filter(|m| {
                let n2: i64 = m.iter().map(|&c| c * c).sum();
                n2 > 0 && n2 <= r2max
            })
            .map(|m| UCacheKey::from_point(m).unwrap())
            .collect();
        let keys: Vec<_> = keys.into_iter().collect();
        keys.par_iter()
            .map(|&key| u_value(key, d, eps).map(|_| ()))
            .collect::<Result<Vec<()>>>()?;
    }
    let values: Vec<Complex64> = pts
        .par_iter()
        .map(|m| {
            let n2: i64 = m.iter().map(|&c| c * c).sum();
            if n2 == 0 || n2 > r2max {
                Ok(Complex64::new(0.0, 0.0))
            } else {
                spec.eval(m, eps)
            }
        })
        .collect::<Result<_>>()?;
    // envelope of |U+1| |m| over the outer half-shell for the tail heuristic
    let tail_bound = if spec.family.is_summable() {
        let env = pts
            .par_iter()
            .map(|m| {
                let n2: i64 = m.iter().map(|&c| c * c).sum();
                if n2 > r2max / 4 && n2 <= r2max {
                    let u = u_value(UCacheKey::from_point(m).unwrap(), d, eps).unwrap();
                    (u + 1.0).abs() * (n2 as f64).sqrt()
                } else {
                    0.0
                }
            })
            .reduce(|| 0.0, f64::max);
        match spec.family {
            Family::CorrectorJ => {
                let scale = match spec.combination {
                    Combination::Single => 1.0,
                    Combination::Twice | Combination::DiagDiff => 2.0,
                };
                scale * env * riesz_constant(d)? * sphere_area(d) / r as f64
            }
            Family::BaCorrector => env * sphere_area(2) / (std::f64::consts::PI * r as f64),
            _ => unreachable!(),
        }
    } else {
        f64::INFINITY
    };
    Ok(KernelTable {
        spec,
        radius: r,
        values,
        tail_bound,
    })
}
