//! Minimal d-dimensional FFT on dense row-major arrays, built on rustfft.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Smallest length >= n whose prime factors are all in {2, 3, 5}.
pub fn good_fft_size(n: usize) -> usize {
    let mut l = n.max(1);
    loop {
        let mut m = l;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return l;
        }
        l += 1;
    }
}

/// In-place forward (or inverse) FFT over every axis of a row-major array
/// with shape `dims`. The inverse applies the 1/N normalization.
pub fn fftn(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    let total: usize = dims.iter().product();
    assert_eq!(data.len(), total);
    let mut planner = FftPlanner::new();
    // process axes from last (contiguous) to first
    let mut stride = 1usize;
    for &len in dims.iter().rev() {
        let fft = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        let block = stride * len;
        for base in (0..total).step_by(block) {
            for off in 0..stride {
                for i in 0..len {
                    line[i] = data[base + off + i * stride];
                }
                fft.process(&mut line);
                for i in 0..len {
                    data[base + off + i * stride] = line[i];
                }
            }
        }
        stride *= len;
    }
    if inverse {
        let scale = 1.0 / total as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn good_sizes() {
        assert_eq!(good_fft_size(1), 1);
        assert_eq!(good_fft_size(7), 8);
        assert_eq!(good_fft_size(17), 18);
        assert_eq!(good_fft_size(121), 125);
    }

    #[test]
    fn round_trip_2d() {
        let dims = [6usize, 10];
        let mut data: Vec<Complex64> = (0..60)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let orig = data.clone();
        fftn(&mut data, &dims, false);
        fftn(&mut data, &dims, true);
        for (a, b) in data.iter().zip(orig.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_dft_2d() {
        let dims = [4usize, 5];
        let mut data: Vec<Complex64> = (0..20)
            .map(|i| Complex64::new(i as f64, (i * i % 7) as f64))
            .collect();
        let orig = data.clone();
        fftn(&mut data, &dims, false);
        for k0 in 0..4 {
            for k1 in 0..5 {
                let mut acc = Complex64::new(0.0, 0.0);
                for n0 in 0..4 {
                    for n1 in 0..5 {
                        let ph = -2.0
                            * std::f64::consts::PI
                            * (k0 as f64 * n0 as f64 / 4.0 + k1 as f64 * n1 as f64 / 5.0);
                        acc += orig[n0 * 5 + n1] * Complex64::new(ph.cos(), ph.sin());
                    }
                }
                assert!((data[k0 * 5 + k1] - acc).norm() < 1e-10);
            }
        }
    }
}
