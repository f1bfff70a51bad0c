//! Self-contained numeric kernels: log-factorials, compensated summation,
//! a modified Bessel I0, a principal-branch Lambert W, certified Poisson
//! tail bounds and adaptive Gauss-Legendre quadrature.

mod bessel;
mod lambert;
mod quadrature;
mod tail;

pub use bessel::bessel_i0;
pub use lambert::lambert_w0;
pub use quadrature::{integrate, integrate_with_breakpoints, QuadratureError};
pub use tail::{poisson_weighted_tail, TailBoundError};

/// Largest event total (sum of the four detector counts) accepted anywhere.
pub const MAX_TOTAL: u32 = 64;

// Two extra slots so tail bounds may index one past the deepest cutoff.
const LOG_FACTORIAL_LEN: usize = MAX_TOTAL as usize * 2 + 2;

fn log_factorial_table() -> &'static [f64; LOG_FACTORIAL_LEN] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[f64; LOG_FACTORIAL_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0_f64; LOG_FACTORIAL_LEN];
        let mut acc = 0.0;
        for (n, slot) in t.iter_mut().enumerate().skip(1) {
            acc += (n as f64).ln();
            *slot = acc;
        }
        t
    })
}

/// ln(n!) for n up to twice [`MAX_TOTAL`].
///
/// Panics if `n` exceeds the table; event constructors enforce the bound.
pub fn log_factorial(n: u32) -> f64 {
    log_factorial_table()[n as usize]
}

/// ln C(n, k), zero when k > n by convention of an empty product.
pub fn log_binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    log_factorial(n) - log_factorial(k) - log_factorial(n - k)
}

/// Heaviside step with the H(0) = 1/2 convention.
///
/// The boundary has measure zero in every integral where H appears, but a
/// fixed convention keeps the response functions total.
pub fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Neumaier-compensated accumulator for long sums of small terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_factorial_matches_direct_products() {
        assert_eq!(log_factorial(0), 0.0);
        assert_eq!(log_factorial(1), 0.0);
        assert!((log_factorial(5) - 120.0_f64.ln()).abs() < 1e-13);
        // 20! = 2432902008176640000
        assert!((log_factorial(20) - 2432902008176640000.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_binomial_small_values() {
        assert!((log_binomial(6, 2) - 15.0_f64.ln()).abs() < 1e-13);
        assert_eq!(log_binomial(3, 5), f64::NEG_INFINITY);
    }

    #[test]
    fn heaviside_convention() {
        assert_eq!(heaviside(3.2), 1.0);
        assert_eq!(heaviside(-0.1), 0.0);
        assert_eq!(heaviside(0.0), 0.5);
    }

    #[test]
    fn compensated_sum_beats_naive_on_spread_magnitudes() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..10_000_000 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1e-9)).abs() < 1e-15);
    }
}
