use super::log_factorial;

/// Certified upper bound on the weighted Poisson-envelope tail
///
///   sum_{T > cutoff}  e^(-nu) nu^(T-1) T^power / T!
///
/// Every per-total event-probability sum in the model is dominated by a term
/// of this family (power 2 for raw probabilities, power 4 for the
/// intensity-weighted sums), so this one bound certifies all truncations.
///
/// The bound is the first omitted term times the geometric closure of the
/// term ratio q = nu (T+1)^(power-1) / T^power evaluated at T = cutoff + 1;
/// the ratio is decreasing in T, so the closure is valid whenever q < 1.
pub fn poisson_weighted_tail(nu: f64, cutoff: u32, power: u32) -> Result<f64, TailBoundError> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(TailBoundError::InvalidRate(nu));
    }
    let t1 = cutoff as f64 + 1.0;
    let ratio = nu * (t1 + 1.0).powi(power as i32 - 1) / t1.powi(power as i32);
    if ratio >= 1.0 {
        return Err(TailBoundError::RatioNotContracting { cutoff, ratio });
    }
    let log_first = -nu + (t1 - 1.0) * nu.ln() + power as f64 * t1.ln() - log_factorial(cutoff + 1);
    Ok(log_first.exp() / (1.0 - ratio))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TailBoundError {
    #[error("Poisson envelope rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("cutoff {cutoff} too small to certify the tail (term ratio {ratio:.3} >= 1)")]
    RatioNotContracting { cutoff: u32, ratio: f64 },
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct high-cutoff partial sum of the tail, for checking that the
    /// certified bound really is an upper bound and is reasonably tight.
    fn tail_by_summation(nu: f64, cutoff: u32, power: u32) -> f64 {
        (cutoff + 1..cutoff + 200)
            .map(|t| {
                let tf = t as f64;
                let log_fact: f64 = (2..=t).map(|i| (i as f64).ln()).sum();
                (-nu + (tf - 1.0) * nu.ln() + power as f64 * tf.ln() - log_fact).exp()
            })
            .sum()
    }

    #[test]
    fn bound_dominates_true_tail() {
        for &nu in &[0.2, 0.6, 1.0, 1.72] {
            for &cutoff in &[6u32, 10, 20, 30] {
                for &power in &[2u32, 4] {
                    let bound = poisson_weighted_tail(nu, cutoff, power).unwrap();
                    let actual = tail_by_summation(nu, cutoff, power);
                    assert!(bound >= actual, "nu={nu} cutoff={cutoff} power={power}");
                    // Not absurdly loose either.
                    assert!(bound <= 10.0 * actual + 1e-300);
                }
            }
        }
    }

    #[test]
    fn tail_shrinks_with_cutoff() {
        let a = poisson_weighted_tail(0.5, 10, 2).unwrap();
        let b = poisson_weighted_tail(0.5, 20, 2).unwrap();
        assert!(b < a * 1e-6);
    }

    #[test]
    fn uncertifiable_when_ratio_too_large() {
        assert!(matches!(
            poisson_weighted_tail(0.5, 0, 2),
            Err(TailBoundError::RatioNotContracting { .. })
        ));
    }
}
