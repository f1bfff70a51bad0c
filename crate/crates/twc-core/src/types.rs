//! Domain types shared across the crate: detection events, local oscillator
//! settings and the oscillator strength.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::numerics::MAX_TOTAL;

/// A joint detection record: `k`, `l` photons at Alice's two detectors and
/// `r`, `s` at Bob's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Event {
    pub k: u32,
    pub l: u32,
    pub r: u32,
    pub s: u32,
}

impl Event {
    /// Build an event, rejecting totals beyond the supported range.
    pub fn new(k: u32, l: u32, r: u32, s: u32) -> Result<Self, TypeError> {
        let total = k as u64 + l as u64 + r as u64 + s as u64;
        if total > MAX_TOTAL as u64 {
            return Err(TypeError::EventTotalTooLarge {
                total,
                max: MAX_TOTAL,
            });
        }
        Ok(Self { k, l, r, s })
    }

    pub fn total(&self) -> u32 {
        self.k + self.l + self.r + self.s
    }

    /// Alice's detectors saw equal counts.
    pub fn alice_balanced(&self) -> bool {
        self.k == self.l
    }

    /// Bob's detectors saw equal counts.
    pub fn bob_balanced(&self) -> bool {
        self.r == self.s
    }

    /// Member of the theta-independent class (a balanced side).
    pub fn is_balanced_class(&self) -> bool {
        self.alice_balanced() || self.bob_balanced()
    }

    /// Member of the strictly descending index class (k > l and r > s).
    pub fn is_descending_index(&self) -> bool {
        self.k > self.l && self.r > self.s
    }

    /// One party registered vacuum on both detectors.
    pub fn is_one_side_vacuum(&self) -> bool {
        (self.k == 0 && self.l == 0) || (self.r == 0 && self.s == 0)
    }

    /// Canonical descending-index representative under the two local swaps.
    pub fn sorted_index(&self) -> Event {
        Event {
            k: self.k.max(self.l),
            l: self.k.min(self.l),
            r: self.r.max(self.s),
            s: self.r.min(self.s),
        }
    }

    pub fn alice_pair(&self) -> (u32, u32) {
        (self.k, self.l)
    }

    pub fn bob_pair(&self) -> (u32, u32) {
        (self.r, self.s)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.k, self.l, self.r, self.s)
    }
}

/// All events with `total() == total`, in lexicographic (k, l, r, s) order.
pub fn events_with_total(total: u32) -> impl Iterator<Item = Event> {
    (0..=total).flat_map(move |k| {
        (0..=total - k).flat_map(move |l| {
            (0..=total - k - l).map(move |r| Event {
                k,
                l,
                r,
                s: total - k - l - r,
            })
        })
    })
}

/// All events with total at most `cutoff`, grouped by ascending total.
pub fn events_up_to(cutoff: u32) -> impl Iterator<Item = Event> {
    (0..=cutoff).flat_map(events_with_total)
}

/// The pair of local oscillator phases, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    theta1: f64,
    theta2: f64,
}

impl Settings {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self, TypeError> {
        if !theta1.is_finite() || !theta2.is_finite() {
            return Err(TypeError::NonFiniteAngle { theta1, theta2 });
        }
        Ok(Self { theta1, theta2 })
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    /// The phase difference theta1 - theta2; every probability depends on
    /// the settings only through this.
    pub fn theta12(&self) -> f64 {
        self.theta1 - self.theta2
    }

    /// Canonical reduction of both angles to [0, 2pi). Available but never
    /// applied implicitly.
    pub fn reduced(&self) -> Self {
        Self {
            theta1: self.theta1.rem_euclid(std::f64::consts::TAU),
            theta2: self.theta2.rem_euclid(std::f64::consts::TAU),
        }
    }
}

/// Common amplitude of the two local oscillators.
///
/// Constructed strictly positive: the closed-form event probabilities carry
/// an explicit 1/(2 alpha^2), so alpha = 0 is rejected at the boundary
/// instead of being patched by limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct OscillatorStrength {
    alpha: f64,
}

impl OscillatorStrength {
    pub fn new(alpha: f64) -> Result<Self, TypeError> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(TypeError::InvalidOscillatorStrength(alpha));
        }
        Ok(Self { alpha })
    }

    pub fn from_alpha_sq(alpha_sq: f64) -> Result<Self, TypeError> {
        if !alpha_sq.is_finite() || alpha_sq <= 0.0 {
            return Err(TypeError::InvalidOscillatorStrength(alpha_sq));
        }
        Ok(Self {
            alpha: alpha_sq.sqrt(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha * self.alpha
    }
}

impl TryFrom<f64> for OscillatorStrength {
    type Error = TypeError;

    fn try_from(alpha: f64) -> Result<Self, Self::Error> {
        Self::new(alpha)
    }
}

impl From<OscillatorStrength> for f64 {
    fn from(v: OscillatorStrength) -> f64 {
        v.alpha
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TypeError {
    #[error("event total {total} exceeds the supported maximum {max}")]
    EventTotalTooLarge { total: u64, max: u32 },
    #[error("oscillator settings must be finite, got theta1 = {theta1}, theta2 = {theta2}")]
    NonFiniteAngle { theta1: f64, theta2: f64 },
    #[error("oscillator strength must be finite and positive, got {0}")]
    InvalidOscillatorStrength(f64),
}
