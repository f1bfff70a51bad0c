//! Exact quantum photodetection statistics of the TWC interferometer:
//! closed-form event probabilities, visibilities, truncated distributions
//! with certified tails, intensity correlations and an independent
//! amplitude-expansion oracle.

mod oracle;

pub use oracle::{amplitude_oracle, AmplitudeOracle};

use serde::Serialize;
use std::collections::BTreeMap;

use crate::numerics::{poisson_weighted_tail, CompensatedSum, TailBoundError, MAX_TOTAL};
use crate::types::{events_up_to, Event, OscillatorStrength, Settings};

/// ln of the envelope coefficient A(alpha, n):
/// exp(-2 alpha^2) (alpha^2/2)^total / (k! l! r! s! 2 alpha^2).
fn log_a_coefficient(alpha: OscillatorStrength, n: Event) -> f64 {
    let a2 = alpha.alpha_sq();
    let total = n.total() as f64;
    -2.0 * a2 + total * (a2 / 2.0).ln()
        - (2.0 * a2).ln()
        - crate::numerics::log_factorial(n.k)
        - crate::numerics::log_factorial(n.l)
        - crate::numerics::log_factorial(n.r)
        - crate::numerics::log_factorial(n.s)
}

fn a_coefficient(alpha: OscillatorStrength, n: Event) -> f64 {
    log_a_coefficient(alpha, n).exp()
}

/// Probability of registering the event `n` at the given settings.
pub fn event_probability(alpha: OscillatorStrength, settings: Settings, n: Event) -> f64 {
    let dk = n.k as f64 - n.l as f64;
    let dr = n.r as f64 - n.s as f64;
    let bracket = dk * dk + dr * dr + 2.0 * dk * dr * settings.theta12().sin();
    if bracket == 0.0 {
        return 0.0;
    }
    a_coefficient(alpha, n) * bracket
}

/// Interference visibility of an event with at least one unbalanced side:
/// 2(k-l)(r-s) / ((k-l)^2 + (r-s)^2).
pub fn visibility(n: Event) -> Result<f64, QuantumError> {
    if n.alice_balanced() && n.bob_balanced() {
        return Err(QuantumError::UndefinedVisibility(n));
    }
    let dk = n.k as f64 - n.l as f64;
    let dr = n.r as f64 - n.s as f64;
    Ok(2.0 * dk * dr / (dk * dk + dr * dr))
}

/// The theta-independent interference amplitude
/// B(alpha, n) = A(alpha, n) ((k-l)^2 + (r-s)^2).
pub fn b_coefficient(alpha: OscillatorStrength, n: Event) -> f64 {
    let dk = n.k as f64 - n.l as f64;
    let dr = n.r as f64 - n.s as f64;
    let bracket = dk * dk + dr * dr;
    if bracket == 0.0 {
        return 0.0;
    }
    a_coefficient(alpha, n) * bracket
}

/// Truncated event distribution with a certified bound on the omitted mass.
#[derive(Debug, Clone, Serialize)]
pub struct DistributionTable {
    entries: BTreeMap<Event, f64>,
    cutoff: u32,
    tail_bound: f64,
    alpha_sq: f64,
    theta12: f64,
}

impl DistributionTable {
    pub fn entries(&self) -> &BTreeMap<Event, f64> {
        &self.entries
    }

    pub fn probability(&self, n: &Event) -> Option<f64> {
        self.entries.get(n).copied()
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    /// Certified upper bound on the total probability of all omitted events.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha_sq
    }

    pub fn theta12(&self) -> f64 {
        self.theta12
    }

    pub fn sum(&self) -> f64 {
        self.entries.values().copied().collect::<CompensatedSum>().value()
    }
}

/// Enumerate all events with total at most `cutoff` and certify the tail.
pub fn distribution(
    alpha: OscillatorStrength,
    settings: Settings,
    cutoff: u32,
) -> Result<DistributionTable, QuantumError> {
    let tail_bound = distribution_tail_bound(alpha, cutoff)?;
    let entries: BTreeMap<Event, f64> = events_up_to(cutoff)
        .map(|n| (n, event_probability(alpha, settings, n)))
        .collect();

    let table = DistributionTable {
        entries,
        cutoff,
        tail_bound,
        alpha_sq: alpha.alpha_sq(),
        theta12: settings.theta12(),
    };
    let sum = table.sum();
    if sum > 1.0 + 1e-9 || sum + tail_bound < 1.0 - 1e-9 {
        return Err(QuantumError::NormalizationFailure { sum, tail_bound });
    }
    Ok(table)
}

/// As [`distribution`], additionally rejecting any cutoff whose certified
/// tail exceeds `max_tail`. The error carries the achievable bound.
pub fn distribution_with_max_tail(
    alpha: OscillatorStrength,
    settings: Settings,
    cutoff: u32,
    max_tail: f64,
) -> Result<DistributionTable, QuantumError> {
    let achievable = distribution_tail_bound(alpha, cutoff)?;
    if achievable > max_tail {
        return Err(QuantumError::TailAboveTolerance {
            cutoff,
            requested: max_tail,
            achievable,
        });
    }
    distribution(alpha, settings, cutoff)
}

/// Certified bound on the probability mass above `cutoff`.
///
/// Each closed-form probability is at most A(alpha, n) total^2, and the
/// per-total sum of A is the Poisson envelope with rate 2 alpha^2, so the
/// weighted Poisson tail dominates the omitted mass.
pub fn distribution_tail_bound(
    alpha: OscillatorStrength,
    cutoff: u32,
) -> Result<f64, QuantumError> {
    if cutoff < 1 {
        // No event below total 1 carries probability; p(0,0,0,0) = 0.
        return Err(QuantumError::CutoffTooSmall { cutoff });
    }
    if cutoff > MAX_TOTAL {
        return Err(QuantumError::CutoffTooLarge {
            cutoff,
            max: MAX_TOTAL,
        });
    }
    poisson_weighted_tail(2.0 * alpha.alpha_sq(), cutoff, 2)
        .map_err(|source| QuantumError::TailNotCertifiable { cutoff, source })
}

/// Intensity correlation estimate with explicit truncation intervals for
/// numerator and denominator.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Correlation {
    /// Ratio of the truncated sums.
    pub value: f64,
    /// Lower edge of the interval containing the untruncated ratio.
    pub lower: f64,
    /// Upper edge of the interval containing the untruncated ratio.
    pub upper: f64,
    /// Truncated numerator sum(p (k-l)(r-s)) and its certified error.
    pub numerator: f64,
    pub numerator_error: f64,
    /// Truncated denominator sum(p (k+l)(r+s)) and its certified error.
    pub denominator: f64,
    pub denominator_error: f64,
}

/// The intensity correlation E(theta1, theta2) over the truncated event
/// space, with the tail of numerator and denominator tracked separately.
pub fn correlation(
    alpha: OscillatorStrength,
    settings: Settings,
    cutoff: u32,
) -> Result<Correlation, QuantumError> {
    CorrelationKernel::new(alpha, cutoff)?.evaluate(settings.theta12())
}

/// Precomputed moments of the truncated distribution.
///
/// Both correlation sums are affine in sin(theta12):
/// numerator = n0 + n1 sin, denominator = d0 + d1 sin (n0 and d1 vanish by
/// the swap parity of the closed form). One pass over the event space then
/// prices E at any settings in constant time, which is what the CHSH
/// optimiser wants.
#[derive(Debug, Clone, Copy)]
pub struct CorrelationKernel {
    n0: f64,
    n1: f64,
    d0: f64,
    d1: f64,
    numerator_tail: f64,
    denominator_tail: f64,
}

impl CorrelationKernel {
    pub fn new(alpha: OscillatorStrength, cutoff: u32) -> Result<Self, QuantumError> {
        if cutoff < 1 {
            return Err(QuantumError::CutoffTooSmall { cutoff });
        }
        if cutoff > MAX_TOTAL {
            return Err(QuantumError::CutoffTooLarge {
                cutoff,
                max: MAX_TOTAL,
            });
        }
        // |(k-l)(r-s)| and (k+l)(r+s) are both at most total^2 / 4.
        let weighted_tail = poisson_weighted_tail(2.0 * alpha.alpha_sq(), cutoff, 4)
            .map_err(|source| QuantumError::TailNotCertifiable { cutoff, source })?
            / 4.0;

        let mut n0 = CompensatedSum::new();
        let mut n1 = CompensatedSum::new();
        let mut d0 = CompensatedSum::new();
        let mut d1 = CompensatedSum::new();
        for n in events_up_to(cutoff) {
            let a = a_coefficient(alpha, n);
            let dk = n.k as f64 - n.l as f64;
            let dr = n.r as f64 - n.s as f64;
            let base = dk * dk + dr * dr;
            let cross = 2.0 * dk * dr;
            let diff_weight = dk * dr;
            let sum_weight = (n.k + n.l) as f64 * (n.r + n.s) as f64;
            n0.add(a * base * diff_weight);
            n1.add(a * cross * diff_weight);
            d0.add(a * base * sum_weight);
            d1.add(a * cross * sum_weight);
        }
        Ok(Self {
            n0: n0.value(),
            n1: n1.value(),
            d0: d0.value(),
            d1: d1.value(),
            numerator_tail: weighted_tail,
            denominator_tail: weighted_tail,
        })
    }

    pub fn evaluate(&self, theta12: f64) -> Result<Correlation, QuantumError> {
        let sin = theta12.sin();
        let numerator = self.n0 + self.n1 * sin;
        let denominator = self.d0 + self.d1 * sin;
        if denominator <= 0.0 {
            return Err(QuantumError::DegenerateDenominator { denominator });
        }
        let value = numerator / denominator;

        // The denominator terms are all nonnegative, so the untruncated
        // denominator lies in [den, den + tail]; the numerator terms are
        // signed, so it lies in [num - tail, num + tail].
        let num_lo = numerator - self.numerator_tail;
        let num_hi = numerator + self.numerator_tail;
        let den_hi = denominator + self.denominator_tail;
        let candidates = [
            num_lo / denominator,
            num_lo / den_hi,
            num_hi / denominator,
            num_hi / den_hi,
        ];
        let lower = candidates.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        Ok(Correlation {
            value,
            lower,
            upper,
            numerator,
            numerator_error: self.numerator_tail,
            denominator,
            denominator_error: self.denominator_tail,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantumError {
    #[error("visibility is undefined for the doubly balanced event {0}")]
    UndefinedVisibility(Event),
    #[error("cutoff {cutoff} cannot certify any probability mass (no event below total 1 is reachable)")]
    CutoffTooSmall { cutoff: u32 },
    #[error("cutoff {cutoff} exceeds the supported maximum {max}")]
    CutoffTooLarge { cutoff: u32, max: u32 },
    #[error("cannot certify the truncation tail at cutoff {cutoff}: {source}")]
    TailNotCertifiable {
        cutoff: u32,
        #[source]
        source: TailBoundError,
    },
    #[error("certified tail {achievable:e} at cutoff {cutoff} exceeds the requested bound {requested:e}")]
    TailAboveTolerance {
        cutoff: u32,
        requested: f64,
        achievable: f64,
    },
    #[error("correlation denominator degenerate (truncated sum = {denominator})")]
    DegenerateDenominator { denominator: f64 },
    #[error("truncated distribution violates normalisation: sum = {sum}, tail bound = {tail_bound}")]
    NormalizationFailure { sum: f64, tail_bound: f64 },
    #[error("amplitude oracle built for totals up to {available}, event total {requested} requested")]
    OracleCutoffExceeded { requested: u32, available: u32 },
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn alpha_sq(a2: f64) -> OscillatorStrength {
        OscillatorStrength::from_alpha_sq(a2).unwrap()
    }

    fn settings(theta1: f64, theta2: f64) -> Settings {
        Settings::new(theta1, theta2).unwrap()
    }

    fn ev(k: u32, l: u32, r: u32, s: u32) -> Event {
        Event::new(k, l, r, s).unwrap()
    }

    #[test]
    fn vacuum_event_has_zero_probability() {
        for theta in [0.0, 0.4, 2.9] {
            let p = event_probability(alpha_sq(0.25), settings(theta, 0.0), ev(0, 0, 0, 0));
            assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn single_photon_probability_matches_closed_form() {
        // exp(-1/2)/4, frozen from a 50-digit evaluation.
        let p = event_probability(alpha_sq(0.25), settings(0.8, 0.8), ev(1, 0, 0, 0));
        assert!((p - 0.15163266492815836).abs() < 1e-15);
    }

    #[test]
    fn quarter_phase_doubles_the_coincidence_probability() {
        let a = alpha_sq(0.25);
        let n = ev(1, 0, 1, 0);
        let p0 = event_probability(a, settings(0.0, 0.0), n);
        let p2 = event_probability(a, settings(FRAC_PI_2, 0.0), n);
        assert!((p2 - 2.0 * p0).abs() < 1e-15);
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility(ev(1, 0, 1, 0)).unwrap(), 1.0);
        assert!((visibility(ev(2, 0, 1, 0)).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(visibility(ev(0, 1, 1, 0)).unwrap(), -1.0);
        assert!(matches!(
            visibility(ev(2, 2, 0, 0)),
            Err(QuantumError::UndefinedVisibility(_))
        ));
    }

    #[test]
    fn visibility_extremal_iff_equal_imbalance() {
        for n in events_up_to(6) {
            let Ok(v) = visibility(n) else { continue };
            assert!(v.abs() <= 1.0 + 1e-15);
            let dk = (n.k as i64 - n.l as i64).abs();
            let dr = (n.r as i64 - n.s as i64).abs();
            if dk == dr {
                assert!((v.abs() - 1.0).abs() < 1e-15, "event {n}");
            } else {
                assert!(v.abs() < 1.0, "event {n}");
            }
        }
    }

    #[test]
    fn b_coefficient_examples() {
        let a = alpha_sq(0.25);
        assert_eq!(b_coefficient(a, ev(0, 0, 0, 0)), 0.0);
        assert!((b_coefficient(a, ev(1, 0, 0, 0)) - 0.15163266492815836).abs() < 1e-15);
        // B depends on the squared differences only.
        let b1 = b_coefficient(a, ev(1, 0, 1, 0));
        let b2 = b_coefficient(a, ev(0, 1, 1, 0));
        assert_eq!(b1, b2);
    }

    #[test]
    fn probability_factors_through_b_and_visibility() {
        let a = alpha_sq(0.4);
        for n in events_up_to(5) {
            if n.alice_balanced() || n.bob_balanced() {
                continue;
            }
            for theta12 in [-1.2, 0.0, 0.7, 2.8] {
                let s = settings(theta12, 0.0);
                let p = event_probability(a, s, n);
                let factored =
                    b_coefficient(a, n) * (1.0 + visibility(n).unwrap() * theta12.sin());
                assert!((p - factored).abs() < 1e-15, "event {n}");
            }
        }
    }

    #[test]
    fn balanced_side_probabilities_ignore_the_phase() {
        let a = alpha_sq(0.5);
        for n in events_up_to(5) {
            if !n.is_balanced_class() {
                continue;
            }
            let reference = event_probability(a, settings(0.0, 0.0), n);
            for theta12 in [0.3, 1.1, 2.2, 4.0, 5.9] {
                let p = event_probability(a, settings(theta12, 0.0), n);
                assert_eq!(p, reference, "event {n} at theta12 = {theta12}");
            }
        }
    }

    #[test]
    fn swap_of_alice_detectors_flips_the_phase() {
        let a = alpha_sq(0.35);
        for n in events_up_to(5) {
            let swapped = ev(n.l, n.k, n.r, n.s);
            for theta12 in [0.4, 1.9, -0.8] {
                let p = event_probability(a, settings(theta12, 0.0), n);
                let q = event_probability(a, settings(-theta12, 0.0), swapped);
                assert!((p - q).abs() < 1e-16, "event {n}");
            }
        }
    }

    #[test]
    fn distribution_normalises_with_certified_tail() {
        let table = distribution(alpha_sq(0.25), settings(0.0, 0.0), 20).unwrap();
        let sum = table.sum();
        assert!(sum <= 1.0 + 1e-15);
        assert!(sum >= 1.0 - 1e-12);
        assert!(sum + table.tail_bound() >= 1.0 - 1e-15);
        assert!(table.entries().len() == 10_626);
    }

    #[test]
    fn distribution_rejects_cutoff_zero() {
        assert!(matches!(
            distribution(alpha_sq(0.25), settings(0.0, 0.0), 0),
            Err(QuantumError::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn distribution_max_tail_error_carries_achievable_bound() {
        let err = distribution_with_max_tail(alpha_sq(0.25), settings(0.0, 0.0), 4, 1e-30)
            .unwrap_err();
        match err {
            QuantumError::TailAboveTolerance {
                achievable,
                requested,
                ..
            } => {
                assert!(achievable > requested);
                assert!(achievable < 1e-2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn opposite_phases_give_identical_tables() {
        let a = alpha_sq(0.25);
        let t0 = distribution(a, settings(0.0, 0.0), 8).unwrap();
        let tpi = distribution(a, settings(PI, 0.0), 8).unwrap();
        for (n, p) in t0.entries() {
            let q = tpi.probability(n).unwrap();
            assert!((p - q).abs() < 1e-15, "event {n}");
        }
    }

    #[test]
    fn correlation_vanishes_at_zero_phase_difference() {
        let c = correlation(alpha_sq(0.3), settings(1.3, 1.3), 20).unwrap();
        assert!(c.value.abs() < 1e-14);
    }

    #[test]
    fn correlation_regression_anchor() {
        // Frozen from an independent 50-digit brute-force summation at
        // cutoff 30: E(pi/2) at alpha^2 = 0.1.
        let c = correlation(alpha_sq(0.1), settings(FRAC_PI_2, 0.0), 30).unwrap();
        assert!((c.value - 0.909090909090909).abs() < 1e-12);
        assert!(c.value > 1.0 / 2.0_f64.sqrt());
        assert!(c.lower <= c.value && c.value <= c.upper);
        assert!(c.upper - c.lower < 1e-12);
    }

    #[test]
    fn correlation_phase_shift_antisymmetries() {
        let a = alpha_sq(0.3);
        let e = correlation(a, settings(0.9, 0.2), 16).unwrap().value;
        let shifted = correlation(a, settings(0.9, 0.2 + PI), 16).unwrap().value;
        let swapped = correlation(a, settings(0.2, 0.9), 16).unwrap().value;
        assert!((e + shifted).abs() < 1e-13);
        assert!((e + swapped).abs() < 1e-13);
    }

    #[test]
    fn normalization_over_parameter_grid() {
        for &a2 in &[0.1, 0.3, 0.5, 0.8] {
            let a = alpha_sq(a2);
            for &theta12 in &[0.0, PI / 4.0, FRAC_PI_2] {
                let table = distribution(a, settings(theta12, 0.0), 30).unwrap();
                assert!(
                    table.sum() >= 1.0 - 1e-10,
                    "alpha_sq = {a2}, theta12 = {theta12}"
                );
            }
        }
    }
}
