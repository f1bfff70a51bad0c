//! Brute-force amplitude oracle.
//!
//! Expands the initial state (two coherent beams plus the split single
//! photon) over the four output modes by distributing every creation
//! operator explicitly, accumulates the complex amplitude of each Fock
//! event and squares at the end. No use of the closed-form probability:
//! this is the independent route the closed form is tested against.
//!
//! The middle factor contributes exactly one photon, so the amplitude of an
//! event with total T is a finite sum over coherent orders j + k = T - 1;
//! there is no truncation error for any event inside the table.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use super::QuantumError;
use crate::numerics::{log_binomial, log_factorial, MAX_TOTAL};
use crate::types::{Event, OscillatorStrength, Settings};

/// Amplitude table over all events with total at most `max_total`.
#[derive(Debug, Clone)]
pub struct AmplitudeOracle {
    amplitudes: BTreeMap<Event, Complex64>,
    max_total: u32,
}

impl AmplitudeOracle {
    pub fn new(
        alpha: OscillatorStrength,
        settings: Settings,
        max_total: u32,
    ) -> Result<Self, QuantumError> {
        if max_total > MAX_TOTAL {
            return Err(QuantumError::CutoffTooLarge {
                cutoff: max_total,
                max: MAX_TOTAL,
            });
        }
        let a2 = alpha.alpha_sq();
        let log_alpha = alpha.alpha().ln();
        let theta1 = settings.theta1();
        let theta2 = settings.theta2();

        let mut amplitudes: BTreeMap<Event, Complex64> = BTreeMap::new();
        let coherent_budget = max_total.saturating_sub(1);
        for j in 0..=coherent_budget {
            for k in 0..=coherent_budget - j {
                // Common factor of every term at coherent orders (j, k).
                let log_mag_jk = -a2 - ((j + k) as f64 / 2.0 + 1.0) * LN_2
                    + (j + k) as f64 * log_alpha
                    - log_factorial(j)
                    - log_factorial(k);
                let phase_jk = j as f64 * theta1 + k as f64 * theta2;
                for p in 0..=j {
                    for q in 0..=k {
                        let log_mag = log_mag_jk + log_binomial(j, p) + log_binomial(k, q);
                        let phase = phase_jk + (p + q) as f64 * FRAC_PI_2;
                        // The single-photon factor distributes over the four
                        // output modes with coefficients (-1, i, i, 1).
                        for (mode, extra_phase) in
                            [(0u8, PI), (1, FRAC_PI_2), (2, FRAC_PI_2), (3, 0.0)]
                        {
                            let event = Event {
                                k: j - p + u32::from(mode == 0),
                                l: p + u32::from(mode == 1),
                                r: k - q + u32::from(mode == 2),
                                s: q + u32::from(mode == 3),
                            };
                            let log_norm = 0.5
                                * (log_factorial(event.k)
                                    + log_factorial(event.l)
                                    + log_factorial(event.r)
                                    + log_factorial(event.s));
                            let contribution = Complex64::from_polar(
                                (log_mag + log_norm).exp(),
                                phase + extra_phase,
                            );
                            *amplitudes.entry(event).or_default() += contribution;
                        }
                    }
                }
            }
        }
        Ok(Self {
            amplitudes,
            max_total,
        })
    }

    pub fn max_total(&self) -> u32 {
        self.max_total
    }

    /// |<event|Psi>|^2; exact for any event inside the table.
    pub fn probability(&self, n: Event) -> Result<f64, QuantumError> {
        if n.total() > self.max_total {
            return Err(QuantumError::OracleCutoffExceeded {
                requested: n.total(),
                available: self.max_total,
            });
        }
        Ok(self
            .amplitudes
            .get(&n)
            .map(|a| a.norm_sqr())
            .unwrap_or(0.0))
    }
}

/// One-shot oracle evaluation for a single event.
pub fn amplitude_oracle(
    alpha: OscillatorStrength,
    settings: Settings,
    n: Event,
) -> Result<f64, QuantumError> {
    AmplitudeOracle::new(alpha, settings, n.total())?.probability(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::event_probability;
    use crate::types::events_up_to;

    fn alpha_sq(a2: f64) -> OscillatorStrength {
        OscillatorStrength::from_alpha_sq(a2).unwrap()
    }

    fn settings(t1: f64, t2: f64) -> Settings {
        Settings::new(t1, t2).unwrap()
    }

    #[test]
    fn vacuum_amplitude_vanishes() {
        let p = amplitude_oracle(
            alpha_sq(0.3),
            settings(0.2, 1.1),
            Event::new(0, 0, 0, 0).unwrap(),
        )
        .unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn single_photon_event_matches_closed_form() {
        let p = amplitude_oracle(
            alpha_sq(0.25),
            settings(0.3, 0.7),
            Event::new(1, 0, 0, 0).unwrap(),
        )
        .unwrap();
        assert!((p - 0.15163266492815836).abs() < 1e-10);
    }

    #[test]
    fn mixed_event_frozen_value() {
        // Pr(2,1,1,0) at alpha^2 = 0.3, theta = (0.5, 0.1), frozen from a
        // 50-digit independent evaluation.
        let p = amplitude_oracle(
            alpha_sq(0.3),
            settings(0.5, 0.1),
            Event::new(2, 1, 1, 0).unwrap(),
        )
        .unwrap();
        assert!((p - 6.4338380465185733e-4).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_closed_form_on_small_totals() {
        let a = alpha_sq(0.3);
        let s = settings(0.9, 0.25);
        let oracle = AmplitudeOracle::new(a, s, 5).unwrap();
        for n in events_up_to(5) {
            let direct = event_probability(a, s, n);
            let brute = oracle.probability(n).unwrap();
            assert!((direct - brute).abs() < 1e-12, "event {n}");
        }
    }

    #[test]
    fn global_phase_shift_leaves_probabilities_unchanged() {
        let a = alpha_sq(0.4);
        let base = AmplitudeOracle::new(a, settings(0.3, 1.0), 4).unwrap();
        let shifted = AmplitudeOracle::new(a, settings(0.3 + 0.77, 1.0 + 0.77), 4).unwrap();
        for n in events_up_to(4) {
            let p = base.probability(n).unwrap();
            let q = shifted.probability(n).unwrap();
            assert!((p - q).abs() < 1e-13, "event {n}");
        }
    }

    #[test]
    fn rejects_events_beyond_the_table() {
        let oracle = AmplitudeOracle::new(alpha_sq(0.3), settings(0.0, 0.0), 3).unwrap();
        assert!(matches!(
            oracle.probability(Event::new(2, 2, 0, 0).unwrap()),
            Err(QuantumError::OracleCutoffExceeded { .. })
        ));
    }
}
