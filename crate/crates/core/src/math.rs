//! Scalar helpers routed through `libm` so the crate works without `std`
//! and produces identical bits on every host.

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

pub(crate) fn max(a: f64, b: f64) -> f64 {
    libm::fmax(a, b)
}

/// Integer power by binary exponentiation.
pub(crate) fn powi(x: f64, k: usize) -> f64 {
    let mut base = x;
    let mut e = k;
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// ln(1 + e^x) without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + ln_1p(exp(-x))
    } else {
        ln_1p(exp(x))
    }
}

/// ln(1 + e^a + e^b) without overflow.
pub(crate) fn log_sum_1ab(a: f64, b: f64) -> f64 {
    let m = max(0.0, max(a, b));
    m + ln(exp(-m) + exp(a - m) + exp(b - m))
}

/// Compensated accumulator for the exact-oracle sums.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powi_matches_std() {
        for &x in &[0.3_f64, 1.0, 2.5, 17.25] {
            for k in 0..12usize {
                let got = powi(x, k);
                let want = x.powi(k as i32);
                assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn softplus_stable_at_extremes() {
        assert!((softplus(0.0) - (2.0_f64).ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-700.0) > 0.0);
        assert!(softplus(-700.0) < 1e-300);
    }

    #[test]
    fn kahan_sums_many_small_terms() {
        let mut k = KahanSum::new();
        for _ in 0..1_000_000 {
            k.add(0.1);
        }
        assert!((k.value() - 100_000.0).abs() < 1e-9);
    }
}
