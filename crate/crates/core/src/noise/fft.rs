use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place multidimensional FFT over a row-major array of the given shape.
/// The inverse is unnormalized; callers divide by the total size.
pub(crate) fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total);
    let mut planner = FftPlanner::new();
    let mut stride = 1;
    for ax in (0..shape.len()).rev() {
        let n = shape[ax];
        if n > 1 {
            let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let block = n * stride;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[base + i * stride];
                    }
                    fft.process(&mut line);
                    for (i, v) in line.iter().enumerate() {
                        data[base + i * stride] = *v;
                    }
                }
            }
        }
        stride *= n;
    }
}

/// Signed integer wavenumber of FFT bin `k` out of `n`.
pub fn wavenumber(k: usize, n: usize) -> f64 {
    if k <= n / 2 { k as f64 } else { k as f64 - n as f64 }
}

/// Multi-index of a flat row-major position.
pub(crate) fn unravel(mut flat: usize, shape: &[usize], out: &mut [usize]) {
    for ax in (0..shape.len()).rev() {
        out[ax] = flat % shape[ax];
        flat /= shape[ax];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let shape = [4, 8];
        let orig: Vec<Complex64> = (0..32).map(|i| Complex64::new((i as f64 * 0.7).sin(), 0.0)).collect();
        let mut d = orig.clone();
        fft_nd(&mut d, &shape, false);
        fft_nd(&mut d, &shape, true);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a / 32.0 - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_lands_in_one_bin() {
        let shape = [8, 8];
        let mut d: Vec<Complex64> = (0..64)
            .map(|i| {
                let (a, b) = (i / 8, i % 8);
                let ph = 2.0 * std::f64::consts::PI * (a as f64 * 1.0 + b as f64 * 3.0) / 8.0;
                Complex64::new(ph.cos(), ph.sin())
            })
            .collect();
        fft_nd(&mut d, &shape, false);
        let hot: Vec<usize> = (0..64).filter(|&i| d[i].norm() > 1e-9).collect();
        assert_eq!(hot, vec![8 + 3]);
        assert_eq!(wavenumber(5, 8), -3.0);
        let mut ix = [0; 2];
        unravel(11, &shape, &mut ix);
        assert_eq!(ix, [1, 3]);
    }
}
