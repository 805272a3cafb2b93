use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

/// Unnormalized forward DFT in place: `X_k = sum_j x_j e^{-2 pi i jk / N}`.
pub fn fft_forward(buf: &mut [C64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

/// Unnormalized inverse DFT in place: `X_k = sum_j x_j e^{+2 pi i jk / N}`.
/// Divide by `N` to invert [`fft_forward`].
pub fn fft_inverse(buf: &mut [C64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(buf.len()).process(buf);
}

/// Signed FFT frequency index for bin `j` of an `n`-point transform:
/// `0, 1, ..., n/2-1, -n/2, ..., -1` (even `n`).
#[inline]
pub fn freq_index(j: usize, n: usize) -> i64 {
    if j <= (n - 1) / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Smallest power of two `>= n`.
pub fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let orig: Vec<C64> =
            (0..16).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut buf = orig.clone();
        fft_forward(&mut buf);
        fft_inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / 16.0 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn frequency_layout() {
        assert_eq!(freq_index(0, 8), 0);
        assert_eq!(freq_index(3, 8), 3);
        assert_eq!(freq_index(4, 8), -4);
        assert_eq!(freq_index(7, 8), -1);
    }
}
