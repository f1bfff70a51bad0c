//! High-level verifications and scans: CHSH evaluation and optimisation,
//! the violation-window scan, the normalisation audit and the validity
//! threshold computed by two independent routes.

mod audit;

pub use audit::{normalization_audit, AuditLine, AuditReport};

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::lhv::{self, LhvError};
use crate::quantum::{self, CorrelationKernel, QuantumError};
use crate::types::{events_up_to, Event, OscillatorStrength, Settings};

/// The four phase settings of a CHSH run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub theta1: f64,
    pub theta1_prime: f64,
    pub theta2: f64,
    pub theta2_prime: f64,
}

impl ChshSettings {
    pub fn new(
        theta1: f64,
        theta1_prime: f64,
        theta2: f64,
        theta2_prime: f64,
    ) -> Result<Self, AnalysisError> {
        let all = [theta1, theta1_prime, theta2, theta2_prime];
        if all.iter().any(|t| !t.is_finite()) {
            return Err(AnalysisError::InvalidInput {
                reason: format!("CHSH settings must be finite, got {all:?}"),
            });
        }
        Ok(Self {
            theta1,
            theta1_prime,
            theta2,
            theta2_prime,
        })
    }
}

/// The signed combination E(t1,t2) + E(t1',t2) + E(t1,t2') - E(t1',t2').
pub fn chsh_value(
    alpha: OscillatorStrength,
    s: ChshSettings,
    cutoff: u32,
) -> Result<f64, AnalysisError> {
    let kernel = CorrelationKernel::new(alpha, cutoff)?;
    let e = |t1: f64, t2: f64| -> Result<f64, QuantumError> {
        Ok(kernel.evaluate(t1 - t2)?.value)
    };
    Ok(e(s.theta1, s.theta2)? + e(s.theta1_prime, s.theta2)? + e(s.theta1, s.theta2_prime)?
        - e(s.theta1_prime, s.theta2_prime)?)
}

/// Maximise |CHSH| over settings.
///
/// The correlation depends on the settings only through phase differences,
/// so with a = t1 - t2, b = t1' - t2, c = t1 - t2' the combination is
/// E(a) + E(b) + E(c) - E(b + c - a): a coarse grid over (a, b) with c = b,
/// then cyclic coordinate refinement over all three differences.
pub fn optimize_chsh(
    alpha: OscillatorStrength,
    cutoff: u32,
) -> Result<(ChshSettings, f64), AnalysisError> {
    let kernel = CorrelationKernel::new(alpha, cutoff)?;
    let combo = |a: f64, b: f64, c: f64| -> f64 {
        let e = |d: f64| kernel.evaluate(d).map(|x| x.value).unwrap_or(f64::NAN);
        e(a) + e(b) + e(c) - e(b + c - a)
    };

    let grid = 64;
    let mut best = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64); // |S|, a, b, c
    for i in 0..grid {
        let a = TAU * i as f64 / grid as f64;
        for j in 0..grid {
            let b = TAU * j as f64 / grid as f64;
            let s = combo(a, b, b);
            if s.abs() > best.0 {
                best = (s.abs(), a, b, b);
            }
        }
    }

    let (_, mut a, mut b, mut c) = best;
    let mut step = TAU / grid as f64;
    while step > 1e-9 {
        let mut improved = false;
        for var in 0..3 {
            for dir in [-1.0, 1.0] {
                let (ta, tb, tc) = match var {
                    0 => (a + dir * step, b, c),
                    1 => (a, b + dir * step, c),
                    _ => (a, b, c + dir * step),
                };
                if combo(ta, tb, tc).abs() > combo(a, b, c).abs() {
                    a = ta;
                    b = tb;
                    c = tc;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }

    // Reconstruct explicit settings with theta2 anchored at zero.
    let settings = ChshSettings {
        theta1: a,
        theta1_prime: b,
        theta2: 0.0,
        theta2_prime: a - c,
    };
    let value = chsh_value(alpha, settings, cutoff)?;
    Ok((settings, value))
}

/// One row of the violation-window scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub alpha_sq: f64,
    /// Signed CHSH value at the optimised settings.
    pub chsh_value: f64,
    /// |CHSH| > 2 at the optimised settings.
    pub violation: bool,
    /// Interference amplitude: E at theta12 = pi/2.
    pub visibility: f64,
    /// Max |model - quantum| probability deviation at this strength, when
    /// the model is constructible.
    pub lhv_max_error: Option<f64>,
    pub model_valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub cutoff: u32,
    pub rows: Vec<ScanRow>,
}

// Scan-internal verification depth: the model comparison per grid point is
// a diagnostic, not the full acceptance run.
const SCAN_MODEL_CUTOFF: u32 = 12;
const SCAN_VERIFY_TOTAL: u32 = 4;

fn scan_row(alpha_sq: f64, cutoff: u32) -> Result<ScanRow, AnalysisError> {
    let alpha = OscillatorStrength::from_alpha_sq(alpha_sq).map_err(|e| {
        AnalysisError::InvalidInput {
            reason: e.to_string(),
        }
    })?;
    let (_, value) = optimize_chsh(alpha, cutoff)?;
    let visibility = CorrelationKernel::new(alpha, cutoff)?
        .evaluate(PI / 2.0)?
        .value;
    let (lhv_max_error, model_valid) = match lhv::build_full_model(alpha, SCAN_MODEL_CUTOFF) {
        Ok(model) => {
            let st = Settings::new(PI / 4.0, 0.0).expect("finite");
            let mut max_err = 0.0_f64;
            for n in events_up_to(SCAN_VERIFY_TOTAL) {
                let p = quantum::event_probability(alpha, st, n);
                let q = lhv::lhv_event_probability(&model, st, n)?;
                max_err = max_err.max((p - q).abs());
            }
            (Some(max_err), true)
        }
        Err(LhvError::ModelInvalid { .. }) => (None, false),
        Err(other) => return Err(other.into()),
    };
    Ok(ScanRow {
        alpha_sq,
        chsh_value: value,
        violation: value.abs() > 2.0,
        visibility,
        lhv_max_error,
        model_valid,
    })
}

/// Optimise CHSH across a grid of oscillator strengths and flag where the
/// classical bound is crossed. `threads = 0` uses the rayon default pool.
pub fn violation_window(
    cutoff: u32,
    alpha_sq_grid: &[f64],
    threads: usize,
) -> Result<ScanResult, AnalysisError> {
    if alpha_sq_grid.is_empty() {
        return Err(AnalysisError::InvalidInput {
            reason: "empty scan grid".into(),
        });
    }
    if alpha_sq_grid
        .iter()
        .any(|&a| !a.is_finite() || a <= 0.0 || a > 1.0)
    {
        return Err(AnalysisError::InvalidInput {
            reason: "scan grid must lie within (0, 1]".into(),
        });
    }
    let mut grid: Vec<f64> = alpha_sq_grid.to_vec();
    grid.sort_by(f64::total_cmp);

    let run = || -> Result<Vec<ScanRow>, AnalysisError> {
        use rayon::prelude::*;
        grid.par_iter().map(|&a2| scan_row(a2, cutoff)).collect()
    };
    let rows = if threads == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| AnalysisError::InvalidInput {
                reason: format!("cannot build worker pool: {e}"),
            })?
            .install(run)?
    };
    Ok(ScanResult { cutoff, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    /// Lambert-W expression W((2e + e pi)/(pi - 2)) - 1.
    ClosedForm,
    /// Bracketing bisection on the strict consistency bound for |k-l| = 1.
    RootFind,
}

/// The model-validity threshold in alpha^2, by either route.
pub fn threshold_alpha_sq(method: ThresholdMethod) -> f64 {
    match method {
        ThresholdMethod::ClosedForm => lhv::validity_threshold_alpha_sq(),
        ThresholdMethod::RootFind => {
            // g(x) = (pi - 2)(-e^x) + pi + 2 - (pi - 2) x e^x, decreasing on
            // the bracket; g(0.5) > 0 > g(1.0).
            let g = |x: f64| (PI - 2.0) * (-x.exp()) + PI + 2.0 - (PI - 2.0) * x * x.exp();
            let (mut lo, mut hi) = (0.5_f64, 1.0_f64);
            debug_assert!(g(lo) > 0.0 && g(hi) < 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-14 {
                    break;
                }
            }
            0.5 * (lo + hi)
        }
    }
}

/// Where the consistency terms turn negative, per detector imbalance.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaPositivityRow {
    pub kl_difference: u32,
    /// First grid strength where the strict (certified) bound is negative.
    pub strict_crossing: Option<f64>,
    /// First grid strength where the exact Bessel-form term is negative.
    pub exact_crossing: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaPositivityMap {
    pub rows: Vec<DeltaPositivityRow>,
}

/// Scan the consistency terms of the critical vacuum-class events
/// (d, 0, 0, 0) over a strength grid.
pub fn delta_positivity_map(
    alpha_sq_grid: &[f64],
    kl_differences: &[u32],
) -> Result<DeltaPositivityMap, AnalysisError> {
    if kl_differences.iter().any(|&d| d == 0) {
        return Err(AnalysisError::InvalidInput {
            reason: "detector imbalances must be at least 1".into(),
        });
    }
    if alpha_sq_grid.iter().any(|&a| !a.is_finite() || a <= 0.0) {
        return Err(AnalysisError::InvalidInput {
            reason: "strength grid must be positive and finite".into(),
        });
    }
    let mut grid: Vec<f64> = alpha_sq_grid.to_vec();
    grid.sort_by(f64::total_cmp);

    let mut rows = Vec::with_capacity(kl_differences.len());
    for &d in kl_differences {
        let n0 = Event::new(d, 0, 0, 0).map_err(|e| AnalysisError::InvalidInput {
            reason: e.to_string(),
        })?;
        let mut strict_crossing = None;
        let mut exact_crossing = None;
        for &a2 in &grid {
            let alpha = OscillatorStrength::from_alpha_sq(a2).expect("validated above");
            if strict_crossing.is_none() && lhv::delta_lower_bound(alpha, n0)? < 0.0 {
                strict_crossing = Some(a2);
            }
            if exact_crossing.is_none() && lhv::delta(alpha, n0)? < 0.0 {
                exact_crossing = Some(a2);
            }
        }
        rows.push(DeltaPositivityRow {
            kl_difference: d,
            strict_crossing,
            exact_crossing,
        });
    }
    Ok(DeltaPositivityMap { rows })
}

/// Bessel I0 by its integral representation (1/pi) int_0^pi e^(x cos t) dt,
/// the cross-check route for the series implementation.
pub fn bessel_i0_by_quadrature(x: f64, tol: f64) -> Result<f64, AnalysisError> {
    let value = crate::numerics::integrate(|t| (x * t.cos()).exp(), 0.0, PI, tol)
        .map_err(|e| AnalysisError::InvalidInput {
            reason: e.to_string(),
        })?;
    Ok(value / PI)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("invalid analysis input: {reason}")]
    InvalidInput { reason: String },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Lhv(#[from] LhvError),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha_sq(a2: f64) -> OscillatorStrength {
        OscillatorStrength::from_alpha_sq(a2).unwrap()
    }

    #[test]
    fn degenerate_settings_respect_the_classical_bound() {
        let s = ChshSettings::new(0.7, 0.7, 0.2, 0.2).unwrap();
        let value = chsh_value(alpha_sq(0.3), s, 20).unwrap();
        assert!(value.abs() <= 2.0 + 1e-12);
    }

    #[test]
    fn maximising_pattern_violates_at_small_strength() {
        // theta differences (a, b, c) = (3 pi/4, pi/4, pi/4) maximise the
        // sin kernel.
        let s = ChshSettings::new(3.0 * PI / 4.0, PI / 4.0, 0.0, PI / 2.0).unwrap();
        let value = chsh_value(alpha_sq(0.2), s, 30).unwrap();
        assert!(value > 2.0);
        // Frozen from the independent brute-force evaluation: 2 sqrt 2 / 1.2.
        assert!((value - 2.3570226039551584).abs() < 1e-9);
    }

    #[test]
    fn optimizer_matches_the_analytic_pattern() {
        let (settings, value) = optimize_chsh(alpha_sq(0.2), 30).unwrap();
        assert!((value.abs() - 2.3570226039551584).abs() < 1e-6);
        let direct = chsh_value(alpha_sq(0.2), settings, 30).unwrap();
        assert!((direct - value).abs() < 1e-12);
    }

    #[test]
    fn no_violation_past_the_window() {
        let (_, value) = optimize_chsh(alpha_sq(0.6), 30).unwrap();
        assert!(value.abs() <= 2.0);
    }

    #[test]
    fn threshold_methods_agree() {
        let closed = threshold_alpha_sq(ThresholdMethod::ClosedForm);
        let root = threshold_alpha_sq(ThresholdMethod::RootFind);
        assert!((closed - root).abs() < 1e-9);
        assert!((0.86..=0.88).contains(&closed));
    }

    #[test]
    fn strict_bound_brackets_the_root() {
        let g = |x: f64| (PI - 2.0) * (-x.exp()) + PI + 2.0 - (PI - 2.0) * x * x.exp();
        assert!(g(0.5) > 0.0);
        assert!(g(1.0) < 0.0);
    }

    #[test]
    fn scan_brackets_the_violation_boundary() {
        let grid: Vec<f64> = (0..8).map(|i| 0.38 + 0.01 * i as f64).collect();
        let result = violation_window(30, &grid, 0).unwrap();
        let flags: Vec<bool> = result.rows.iter().map(|r| r.violation).collect();
        // Monotone true...true false...false with the switch between
        // 0.41 and 0.42.
        let first_false = flags.iter().position(|f| !f).unwrap();
        assert!(flags[..first_false].iter().all(|&f| f));
        assert!(flags[first_false..].iter().all(|&f| !f));
        let boundary = result.rows[first_false].alpha_sq;
        assert!(boundary > 0.41 && boundary < 0.43);
        for row in &result.rows {
            assert!(row.model_valid);
            assert!(row.lhv_max_error.unwrap() < 1e-9);
        }
    }

    #[test]
    fn scan_rejects_grid_outside_unit_interval() {
        assert!(violation_window(20, &[0.5, 1.5], 0).is_err());
        assert!(violation_window(20, &[], 0).is_err());
    }

    #[test]
    fn positivity_map_orders_crossings_by_imbalance() {
        let grid: Vec<f64> = (1..=40).map(|i| 0.70 + 0.0075 * i as f64).collect();
        let map = delta_positivity_map(&grid, &[1, 2]).unwrap();
        let one = &map.rows[0];
        let strict = one.strict_crossing.unwrap();
        assert!((strict - threshold_alpha_sq(ThresholdMethod::ClosedForm)).abs() <= 0.0075 + 1e-12);
        let exact = one.exact_crossing.unwrap();
        assert!(exact >= strict);
        // |k - l| = 2 stays positive across this grid entirely.
        assert!(map.rows[1].strict_crossing.is_none());
        assert!(map.rows[1].exact_crossing.is_none());
    }

    #[test]
    fn bessel_series_matches_integral_representation() {
        for &x in &[0.1, 0.3, 0.87, 1.0, 2.0] {
            let series = crate::numerics::bessel_i0(x);
            let integral = bessel_i0_by_quadrature(x, 1e-13).unwrap();
            assert!((series - integral).abs() < 1e-12, "x = {x}");
        }
    }
}
