/// Largest oscillator level any constructor accepts; far above this the
/// states stop fitting the default window anyway and the recurrence loses
/// relative accuracy in the tails.
pub const MAX_LEVEL: u32 = 60;

/// All normalized Hermite functions `h_0..=h_n` at `x`.
///
/// `h_n(x) = (2^n n! sqrt(pi))^{-1/2} H_n(x) e^{-x^2/2}`, generated by the
/// stable three-term recurrence on the normalized functions themselves (no
/// raw Hermite polynomials, so no overflow up to [`MAX_LEVEL`]).
pub fn hermite_functions(n: u32, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(n as usize + 1);
    let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    h.push(h0);
    if n == 0 {
        return h;
    }
    h.push(std::f64::consts::SQRT_2 * x * h0);
    for k in 2..=n as usize {
        let kf = k as f64;
        let next = x * (2.0 / kf).sqrt() * h[k - 1] - ((kf - 1.0) / kf).sqrt() * h[k - 2];
        h.push(next);
    }
    h
}

/// Single normalized Hermite function `h_n(x)`.
pub fn hermite_function(n: u32, x: f64) -> f64 {
    *hermite_functions(n, x).last().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_level_value() {
        // pi^{-1/4} at the origin
        assert!((hermite_function(0, 0.0) - 0.7511255444649425).abs() < 1e-15);
    }

    #[test]
    fn first_level_is_odd() {
        assert_eq!(hermite_function(1, 0.0), 0.0);
        let v = hermite_function(1, 0.7);
        assert!((hermite_function(1, -0.7) + v).abs() < 1e-15);
    }

    #[test]
    fn explicit_low_orders() {
        // h_2(x) = (2x^2 - 1) / sqrt(2) * pi^{-1/4} e^{-x^2/2}
        let x = 1.3_f64;
        let gauss = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
        let expect = (2.0 * x * x - 1.0) / std::f64::consts::SQRT_2 * gauss;
        assert!((hermite_function(2, x) - expect).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_under_quadrature() {
        // trapezoid over a window that contains the support of low levels
        let n = 2001;
        let (a, b) = (-12.0, 12.0);
        let h = (b - a) / (n - 1) as f64;
        for (i, j) in [(0, 0), (3, 3), (7, 7), (2, 5), (0, 4)] {
            let mut acc = 0.0;
            for s in 0..n {
                let x = a + s as f64 * h;
                let w = if s == 0 || s == n - 1 { 0.5 } else { 1.0 };
                let hx = hermite_functions(7, x);
                acc += w * hx[i] * hx[j];
            }
            acc *= h;
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((acc - expect).abs() < 1e-12, "({i},{j}) -> {acc}");
        }
    }

    #[test]
    fn high_order_stays_bounded() {
        // normalized functions are bounded by ~0.816 for all n
        for n in [20, 40, 60] {
            let vals = hermite_functions(n, 1.234);
            assert!(vals.iter().all(|v| v.abs() < 1.0));
        }
    }
}
