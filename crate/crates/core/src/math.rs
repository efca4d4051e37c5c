//! Scalar helpers over `libm` so results do not depend on the host libm.

pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub fn round(x: f64) -> f64 {
    libm::round(x)
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    ln(p / (1.0 - p))
}

/// `log(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(exp(-x))
    } else {
        libm::log1p(exp(x))
    }
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + ln(xs.into_iter().map(|x| exp(x - m)).sum())
}

/// Nearest integer to `f * total`, halves rounded up.
pub fn round_count(f: f64, total: usize) -> usize {
    libm::floor(f * total as f64 + 0.5) as usize
}

/// Table of `base^k` for `k = 0..=len`, built by repeated multiplication.
pub fn power_table(base: f64, len: usize) -> alloc::vec::Vec<f64> {
    let mut out = alloc::vec::Vec::with_capacity(len + 1);
    let mut acc = 1.0;
    for _ in 0..=len {
        out.push(acc);
        acc *= base;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_halves_up() {
        assert_eq!(round_count(0.35, 45), 16);
        assert_eq!(round_count(0.5, 5), 3);
        assert_eq!(round_count(0.1, 45), 5);
        assert_eq!(round_count(0.6, 45), 27);
    }

    #[test]
    fn logistic_is_stable() {
        assert!((logistic(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(logistic(-800.0), 0.0);
        assert_eq!(logistic(800.0), 1.0);
        assert!((logit(logistic(1.3)) - 1.3).abs() < 1e-12);
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-9);
    }
}
