//! The local-hidden-variable model: per-submodel response functions,
//! joint outcome probabilities (closed form and quadrature), submodel
//! weights, the vacuum-class consistency terms and the assembled full model
//! with exact sampling.

mod model;
mod sample;

pub use model::{
    build_full_model, lhv_event_probability, validity_threshold_alpha_sq, FullModel, Submodel,
    SubmodelKind,
};
pub use sample::{sample_event, sample_hidden, HiddenState, ModelSampler};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::numerics::{
    bessel_i0, heaviside, integrate_with_breakpoints, log_factorial, QuadratureError,
    TailBoundError, MAX_TOTAL,
};
use crate::quantum;
use crate::types::{Event, OscillatorStrength, Settings};

/// Flat probability each Larsson-like submodel assigns to each of its four
/// single-vacuum outcomes: 1/4 - 1/(2 pi).
pub const FLAT_VACUUM_PROBABILITY: f64 = 0.25 - 1.0 / (2.0 * PI);

/// The pair of counts one party registers at its two detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LocalOutcome {
    pub first: u32,
    pub second: u32,
}

impl LocalOutcome {
    pub fn new(first: u32, second: u32) -> Self {
        Self { first, second }
    }

    pub fn vacuum() -> Self {
        Self {
            first: 0,
            second: 0,
        }
    }

    pub fn is_vacuum(&self) -> bool {
        self.first == 0 && self.second == 0
    }
}

impl fmt::Display for LocalOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.first, self.second)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Alice => write!(f, "Alice"),
            Party::Bob => write!(f, "Bob"),
        }
    }
}

/// How an outcome relates to a party's index pair (a, b), a > b:
/// the pair itself, the swapped pair, or vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
enum OutcomeClass {
    /// sign(c - d): +1 for the index order, -1 for the swapped order.
    Signed(f64),
    Vacuum,
}

fn classify_outcome(
    index: Event,
    party: Party,
    outcome: LocalOutcome,
) -> Result<OutcomeClass, LhvError> {
    let (a, b) = match party {
        Party::Alice => index.alice_pair(),
        Party::Bob => index.bob_pair(),
    };
    if outcome.is_vacuum() {
        Ok(OutcomeClass::Vacuum)
    } else if (outcome.first, outcome.second) == (a, b) {
        Ok(OutcomeClass::Signed(1.0))
    } else if (outcome.first, outcome.second) == (b, a) {
        Ok(OutcomeClass::Signed(-1.0))
    } else {
        Err(LhvError::OutcomeNotAllowed {
            index,
            party,
            outcome,
        })
    }
}

/// The visibility of a submodel index, guaranteed in (0, 1].
fn index_visibility(index: Event) -> Result<f64, LhvError> {
    if !index.is_descending_index() {
        return Err(LhvError::IndexNotDescending(index));
    }
    Ok(quantum::visibility(index).expect("descending index has defined visibility"))
}

fn r_signed(vis: f64, sign: f64, oriented_sin: f64) -> f64 {
    (1.0 - vis) / PI + vis * oriented_sin.abs() * heaviside(sign * oriented_sin)
}

fn r_vacuum(vis: f64, oriented_sin: f64) -> f64 {
    1.0 - 2.0 * (1.0 - vis) / PI - vis * oriented_sin.abs()
}

fn q_signed(sign: f64, cosine: f64) -> f64 {
    heaviside(sign * cosine)
}

/// Alice's local response in the interference branch: the probability of
/// registering `outcome` from {(k,l), (l,k), (0,0)} given her phase and the
/// hidden angle.
pub fn response_r(
    index: Event,
    outcome: LocalOutcome,
    theta: f64,
    lambda: f64,
) -> Result<f64, LhvError> {
    let vis = index_visibility(index)?;
    let oriented = (theta - lambda).sin();
    match classify_outcome(index, Party::Alice, outcome)? {
        OutcomeClass::Signed(sign) => Ok(r_signed(vis, sign, oriented)),
        OutcomeClass::Vacuum => Ok(r_vacuum(vis, oriented)),
    }
}

/// Bob's deterministic response in the interference branch: the probability
/// (0, 1/2 on the boundary, or 1) of registering `outcome` from
/// {(r,s), (s,r)}. There is no vacuum row.
pub fn response_q(
    index: Event,
    outcome: LocalOutcome,
    theta: f64,
    lambda: f64,
) -> Result<f64, LhvError> {
    index_visibility(index)?;
    match classify_outcome(index, Party::Bob, outcome)? {
        OutcomeClass::Signed(sign) => Ok(q_signed(sign, (theta - lambda).cos())),
        OutcomeClass::Vacuum => Err(LhvError::VacuumHasNoDeterministicBranch { index }),
    }
}

/// Closed-form joint probability of a submodel outcome pair.
///
/// The four doubly-nonvacuum outcomes carry the interference value
/// (1 + V sign((c-d)(c'-d')) sin(theta12)) / (2 pi); the four single-vacuum
/// outcomes are flat at 1/4 - 1/(2 pi); the double-vacuum pair never occurs.
pub fn joint_probability_closed(
    index: Event,
    outcome_a: LocalOutcome,
    outcome_b: LocalOutcome,
    settings: Settings,
) -> Result<f64, LhvError> {
    let vis = index_visibility(index)?;
    let class_a = classify_outcome(index, Party::Alice, outcome_a)?;
    let class_b = classify_outcome(index, Party::Bob, outcome_b)?;
    Ok(match (class_a, class_b) {
        (OutcomeClass::Signed(sa), OutcomeClass::Signed(sb)) => {
            (1.0 + vis * sa * sb * settings.theta12().sin()) / (2.0 * PI)
        }
        (OutcomeClass::Vacuum, OutcomeClass::Vacuum) => 0.0,
        _ => FLAT_VACUUM_PROBABILITY,
    })
}

/// Kink and jump locations of the branch integrands, for the quadrature
/// splitter: sin(theta - lambda) folds at lambda = theta (mod pi) and
/// cos(theta - lambda) switches at lambda = theta + pi/2 (mod pi).
fn trig_breakpoints(thetas: [f64; 2]) -> Vec<f64> {
    let mut out = Vec::with_capacity(4);
    for theta in thetas {
        let base = theta.rem_euclid(PI);
        out.push(base);
        out.push(base + PI);
    }
    out
}

/// Joint probability by direct integration of the hidden-variable average
/// (1/4pi) sum_x  integral dlambda P_A P_B.
///
/// In the x = 0 branch Alice responds with R oriented along
/// sin(theta1 - lambda) and Bob with Q on cos(theta2 - lambda). In the
/// x = 1 branch the function forms swap and Bob's R is oriented along
/// sin(lambda - theta2); this is the orientation for which each branch
/// integrates to the closed form for all settings.
pub fn joint_probability_quadrature(
    index: Event,
    outcome_a: LocalOutcome,
    outcome_b: LocalOutcome,
    settings: Settings,
) -> Result<f64, LhvError> {
    let vis = index_visibility(index)?;
    let class_a = classify_outcome(index, Party::Alice, outcome_a)?;
    let class_b = classify_outcome(index, Party::Bob, outcome_b)?;
    let theta1 = settings.theta1();
    let theta2 = settings.theta2();
    let tau = 2.0 * PI;
    const BRANCH_TOL: f64 = 1e-11;

    // x = 0: Alice uses R, Bob uses Q. Bob cannot output vacuum here.
    let branch0 = if class_b == OutcomeClass::Vacuum {
        0.0
    } else {
        let f = |lambda: f64| {
            let oriented = (theta1 - lambda).sin();
            let pa = match class_a {
                OutcomeClass::Signed(sa) => r_signed(vis, sa, oriented),
                OutcomeClass::Vacuum => r_vacuum(vis, oriented),
            };
            let pb = match class_b {
                OutcomeClass::Signed(sb) => q_signed(sb, (theta2 - lambda).cos()),
                OutcomeClass::Vacuum => unreachable!(),
            };
            pa * pb
        };
        let cuts = trig_breakpoints([theta1, theta2 + PI / 2.0]);
        integrate_with_breakpoints(f, 0.0, tau, &cuts, BRANCH_TOL)?
    };

    // x = 1: Alice uses Q, Bob uses R. Alice cannot output vacuum here.
    let branch1 = if class_a == OutcomeClass::Vacuum {
        0.0
    } else {
        let f = |lambda: f64| {
            let pa = match class_a {
                OutcomeClass::Signed(sa) => q_signed(sa, (theta1 - lambda).cos()),
                OutcomeClass::Vacuum => unreachable!(),
            };
            let oriented = (lambda - theta2).sin();
            let pb = match class_b {
                OutcomeClass::Signed(sb) => r_signed(vis, sb, oriented),
                OutcomeClass::Vacuum => r_vacuum(vis, oriented),
            };
            pa * pb
        };
        let cuts = trig_breakpoints([theta1 + PI / 2.0, theta2]);
        integrate_with_breakpoints(f, 0.0, tau, &cuts, BRANCH_TOL)?
    };

    Ok((branch0 + branch1) / (4.0 * PI))
}

/// Mixing weight of the Larsson-like submodel indexed by a descending
/// event: 2 pi B(alpha, n).
pub fn larsson_weight(alpha: OscillatorStrength, index: Event) -> Result<f64, LhvError> {
    if !index.is_descending_index() {
        return Err(LhvError::IndexNotDescending(index));
    }
    Ok(2.0 * PI * quantum::b_coefficient(alpha, index))
}

/// Which side of a vacuum-class event carries the unbalanced pair.
fn vacuum_form(n0: Event) -> Result<(u32, u32), LhvError> {
    let alice_vacuum = n0.k == 0 && n0.l == 0;
    let bob_vacuum = n0.r == 0 && n0.s == 0;
    if bob_vacuum && n0.k != n0.l {
        Ok((n0.k, n0.l))
    } else if alice_vacuum && n0.r != n0.s {
        Ok((n0.r, n0.s))
    } else {
        Err(LhvError::NotAVacuumClassIndex(n0))
    }
}

fn delta_prefactor(alpha: OscillatorStrength, a: u32, b: u32) -> f64 {
    let a2 = alpha.alpha_sq();
    (-2.0 * a2 - ((a + b) as f64 + 3.0) * std::f64::consts::LN_2
        + ((a + b) as f64 - 1.0) * a2.ln()
        - log_factorial(a)
        - log_factorial(b))
    .exp()
}

/// Consistency term of a vacuum-class event: the quantum probability minus
/// the mass fed to it by the whole Larsson family, via the exact closed
/// form (infinite detector sum resummed into a Bessel I0).
pub fn delta(alpha: OscillatorStrength, n0: Event) -> Result<f64, LhvError> {
    let (a, b) = vacuum_form(n0)?;
    let a2 = alpha.alpha_sq();
    let d2 = (a as f64 - b as f64).powi(2);
    let bracket = -(PI - 2.0) * a2.exp() * (a2 + d2)
        + (PI - 2.0) * bessel_i0(a2) * d2
        + 4.0 * d2;
    Ok(delta_prefactor(alpha, a, b) * bracket)
}

/// Strict lower bound on [`delta`] obtained by replacing I0 with 1.
///
/// This is the certified-validity criterion: it is independent of the pair
/// totals, crosses zero for |k-l| = 1 exactly at
/// [`validity_threshold_alpha_sq`], and bounds the exact term from below,
/// so a model gated on it has only nonnegative weights.
pub fn delta_lower_bound(alpha: OscillatorStrength, n0: Event) -> Result<f64, LhvError> {
    let (a, b) = vacuum_form(n0)?;
    let a2 = alpha.alpha_sq();
    let d2 = (a as f64 - b as f64).powi(2);
    let bracket = ((PI - 2.0) * (-a2.exp()) + PI + 2.0) * d2 - (PI - 2.0) * a2 * a2.exp();
    Ok(delta_prefactor(alpha, a, b) * bracket)
}

/// Consistency term by direct truncated summation over the partner pairs
/// (c > d, c + d <= pair_cutoff), the cross-check route to [`delta`].
pub fn delta_by_summation(
    alpha: OscillatorStrength,
    n0: Event,
    pair_cutoff: u32,
) -> Result<f64, LhvError> {
    let (a, b) = vacuum_form(n0)?;
    if a + b + pair_cutoff > MAX_TOTAL {
        return Err(LhvError::PairCutoffTooLarge {
            pair_cutoff,
            max: MAX_TOTAL - a - b,
        });
    }
    let bob_side = n0.r == 0 && n0.s == 0;
    let mut acc = quantum::b_coefficient(alpha, n0);
    for c in 1..=pair_cutoff {
        for d in 0..c {
            if c + d > pair_cutoff {
                break;
            }
            let partner = if bob_side {
                Event::new(a, b, c, d)
            } else {
                Event::new(c, d, a, b)
            }
            .expect("within MAX_TOTAL by the cutoff check");
            acc -= (PI / 2.0 - 1.0) * quantum::b_coefficient(alpha, partner);
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LhvError {
    #[error("submodel index {0} is not strictly descending on both sides (k > l and r > s)")]
    IndexNotDescending(Event),
    #[error("outcome {outcome} is not in {party}'s outcome set for submodel {index}")]
    OutcomeNotAllowed {
        index: Event,
        party: Party,
        outcome: LocalOutcome,
    },
    #[error("the deterministic response of submodel {index} has no vacuum branch")]
    VacuumHasNoDeterministicBranch { index: Event },
    #[error("{0} is not a vacuum-class event with one strictly unbalanced side")]
    NotAVacuumClassIndex(Event),
    #[error("partner-pair cutoff {pair_cutoff} exceeds the supported {max}")]
    PairCutoffTooLarge { pair_cutoff: u32, max: u32 },
    #[error(
        "local model invalid at alpha^2 = {alpha_sq}: the consistency weight for event {event} \
         has certified lower bound {delta_lower_bound:e} < 0; the construction requires \
         alpha^2 <= {threshold:.6}"
    )]
    ModelInvalid {
        event: Event,
        alpha_sq: f64,
        delta_lower_bound: f64,
        threshold: f64,
    },
    #[error("event with total {event_total} lies beyond the model cutoff {cutoff}")]
    ModelCutoffExceeded { event_total: u32, cutoff: u32 },
    #[error("model cutoff {cutoff} exceeds the supported maximum {max}")]
    CutoffTooLarge { cutoff: u32, max: u32 },
    #[error("cannot certify the omitted submodel mass at cutoff {cutoff}: {source}")]
    TailNotCertifiable {
        cutoff: u32,
        #[source]
        source: TailBoundError,
    },
    #[error("model has no submodels with positive weight")]
    EmptyModel,
    #[error("submodel weights are inconsistent: {reason}")]
    WeightInconsistency { reason: String },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn ev(k: u32, l: u32, r: u32, s: u32) -> Event {
        Event::new(k, l, r, s).unwrap()
    }

    fn alpha_sq(a2: f64) -> OscillatorStrength {
        OscillatorStrength::from_alpha_sq(a2).unwrap()
    }

    fn settings(t1: f64, t2: f64) -> Settings {
        Settings::new(t1, t2).unwrap()
    }

    #[test]
    fn response_r_unit_visibility_extremes() {
        let n = ev(1, 0, 1, 0);
        // theta - lambda = pi/2: the index outcome is certain.
        let p = response_r(n, LocalOutcome::new(1, 0), FRAC_PI_2, 0.0).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        let vac = response_r(n, LocalOutcome::vacuum(), FRAC_PI_2, 0.0).unwrap();
        assert!(vac.abs() < 1e-15);
    }

    #[test]
    fn response_r_partial_visibility_at_zero_angle() {
        let n = ev(2, 0, 1, 0); // visibility 4/5
        let expected = 1.0 / (5.0 * PI);
        for outcome in [LocalOutcome::new(2, 0), LocalOutcome::new(0, 2)] {
            let p = response_r(n, outcome, 0.7, 0.7).unwrap();
            assert!((p - expected).abs() < 1e-15);
        }
        let vac = response_r(n, LocalOutcome::vacuum(), 0.7, 0.7).unwrap();
        assert!((vac - (1.0 - 2.0 / (5.0 * PI))).abs() < 1e-15);
    }

    #[test]
    fn response_r_rejects_foreign_outcomes() {
        let n = ev(2, 0, 1, 0);
        assert!(matches!(
            response_r(n, LocalOutcome::new(1, 0), 0.0, 0.0),
            Err(LhvError::OutcomeNotAllowed { .. })
        ));
        assert!(matches!(
            response_r(ev(1, 1, 2, 0), LocalOutcome::new(1, 1), 0.0, 0.0),
            Err(LhvError::IndexNotDescending(_))
        ));
    }

    #[test]
    fn response_r_rows_normalise_and_stay_in_range() {
        for n in [ev(1, 0, 1, 0), ev(2, 0, 1, 0), ev(3, 1, 2, 1)] {
            for i in 0..40 {
                let theta = 0.31 * i as f64;
                for j in 0..40 {
                    let lambda = 0.17 * j as f64;
                    let (k, l) = n.alice_pair();
                    let rows = [
                        response_r(n, LocalOutcome::new(k, l), theta, lambda).unwrap(),
                        response_r(n, LocalOutcome::new(l, k), theta, lambda).unwrap(),
                        response_r(n, LocalOutcome::vacuum(), theta, lambda).unwrap(),
                    ];
                    let sum: f64 = rows.iter().sum();
                    assert!((sum - 1.0).abs() < 1e-14);
                    for p in rows {
                        assert!((-1e-15..=1.0 + 1e-15).contains(&p));
                    }
                }
            }
        }
    }

    #[test]
    fn response_q_threshold_behaviour() {
        let n = ev(1, 0, 2, 1);
        let rs = LocalOutcome::new(2, 1);
        assert_eq!(response_q(n, rs, 0.9, 0.9).unwrap(), 1.0);
        assert_eq!(response_q(n, rs, 0.9 + PI, 0.9).unwrap(), 0.0);
        // Swap rows sum to 1 off the boundary, and split it on the boundary.
        let sr = LocalOutcome::new(1, 2);
        for lambda in [0.0, 0.4, 2.0] {
            let total =
                response_q(n, rs, 1.1, lambda).unwrap() + response_q(n, sr, 1.1, lambda).unwrap();
            assert_eq!(total, 1.0);
        }
        assert_eq!(response_q(n, rs, FRAC_PI_2, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn response_q_has_no_vacuum_branch() {
        assert!(matches!(
            response_q(ev(1, 0, 1, 0), LocalOutcome::vacuum(), 0.0, 0.0),
            Err(LhvError::VacuumHasNoDeterministicBranch { .. })
        ));
    }

    #[test]
    fn closed_form_examples() {
        let n = ev(1, 0, 1, 0);
        let p = joint_probability_closed(
            n,
            LocalOutcome::new(1, 0),
            LocalOutcome::new(1, 0),
            settings(FRAC_PI_2, 0.0),
        )
        .unwrap();
        assert!((p - 1.0 / PI).abs() < 1e-15);

        let m = ev(2, 0, 1, 0);
        let q = joint_probability_closed(
            m,
            LocalOutcome::new(2, 0),
            LocalOutcome::new(1, 0),
            settings(PI / 6.0, 0.0),
        )
        .unwrap();
        assert!((q - 1.4 / (2.0 * PI)).abs() < 1e-15);

        let vac = joint_probability_closed(
            n,
            LocalOutcome::vacuum(),
            LocalOutcome::new(1, 0),
            settings(0.3, 1.9),
        )
        .unwrap();
        assert!((vac - FLAT_VACUUM_PROBABILITY).abs() < 1e-15);
    }

    #[test]
    fn closed_form_outcomes_sum_to_one() {
        let n = ev(3, 1, 2, 0);
        let (k, l) = n.alice_pair();
        let (r, s) = n.bob_pair();
        for theta12 in [-2.0, 0.0, 0.9, 2.7] {
            let st = settings(theta12, 0.0);
            let alice = [
                LocalOutcome::new(k, l),
                LocalOutcome::new(l, k),
                LocalOutcome::vacuum(),
            ];
            let bob = [
                LocalOutcome::new(r, s),
                LocalOutcome::new(s, r),
                LocalOutcome::vacuum(),
            ];
            let mut total = 0.0;
            for a in alice {
                for b in bob {
                    total += joint_probability_closed(n, a, b, st).unwrap();
                }
            }
            assert!((total - 1.0).abs() < 1e-14, "theta12 = {theta12}");
        }
    }

    #[test]
    fn swapping_one_outcome_flips_the_interference_sign() {
        let n = ev(2, 0, 1, 0);
        let st = settings(0.8, 0.1);
        let direct = joint_probability_closed(
            n,
            LocalOutcome::new(2, 0),
            LocalOutcome::new(1, 0),
            st,
        )
        .unwrap();
        let swapped = joint_probability_closed(
            n,
            LocalOutcome::new(0, 2),
            LocalOutcome::new(1, 0),
            st,
        )
        .unwrap();
        let vis = 0.8;
        let sin = st.theta12().sin();
        assert!((direct - (1.0 + vis * sin) / (2.0 * PI)).abs() < 1e-15);
        assert!((swapped - (1.0 - vis * sin) / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn quadrature_matches_closed_form_on_a_settings_grid() {
        let n = ev(2, 0, 1, 0);
        let (k, l) = n.alice_pair();
        let (r, s) = n.bob_pair();
        let outcomes_a = [
            LocalOutcome::new(k, l),
            LocalOutcome::new(l, k),
            LocalOutcome::vacuum(),
        ];
        let outcomes_b = [
            LocalOutcome::new(r, s),
            LocalOutcome::new(s, r),
            LocalOutcome::vacuum(),
        ];
        for (t1, t2) in [(0.8, 0.3), (2.5, -1.2), (-0.4, 3.0), (5.9, 5.1)] {
            let st = settings(t1, t2);
            for a in outcomes_a {
                for b in outcomes_b {
                    let closed = joint_probability_closed(n, a, b, st).unwrap();
                    let quad = joint_probability_quadrature(n, a, b, st).unwrap();
                    assert!(
                        (closed - quad).abs() < 1e-9,
                        "outcomes {a}/{b} at ({t1}, {t2}): closed {closed}, quad {quad}"
                    );
                }
            }
        }
    }

    #[test]
    fn role_exchange_with_negated_phases_is_a_symmetry() {
        let n = ev(3, 1, 2, 0);
        let mirrored = ev(2, 0, 3, 1);
        let st = settings(1.1, 0.4);
        let st_mirror = settings(-0.4, -1.1);
        for (a, b) in [
            (LocalOutcome::new(3, 1), LocalOutcome::new(2, 0)),
            (LocalOutcome::new(1, 3), LocalOutcome::new(2, 0)),
            (LocalOutcome::vacuum(), LocalOutcome::new(0, 2)),
            (LocalOutcome::new(3, 1), LocalOutcome::vacuum()),
        ] {
            let p = joint_probability_closed(n, a, b, st).unwrap();
            let q = joint_probability_closed(mirrored, b, a, st_mirror).unwrap();
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn larsson_weight_reconstructs_the_quantum_probability() {
        let alpha = alpha_sq(0.3);
        let n = ev(1, 0, 1, 0);
        // Frozen from a 50-digit evaluation of 2 pi B(0.3, (1,0,1,0)).
        let w = larsson_weight(alpha, n).unwrap();
        assert!((w - 0.25862139062363827).abs() < 1e-15);
        for theta12 in [0.0, 0.7, -1.9] {
            let st = settings(theta12, 0.0);
            let outcome = joint_probability_closed(
                n,
                LocalOutcome::new(1, 0),
                LocalOutcome::new(1, 0),
                st,
            )
            .unwrap();
            let p = quantum::event_probability(alpha, st, n);
            assert!((w * outcome - p).abs() < 1e-16);
        }
    }

    #[test]
    fn larsson_weight_invariant_under_index_swaps_in_b() {
        let alpha = alpha_sq(0.45);
        let w = larsson_weight(alpha, ev(2, 1, 3, 0)).unwrap();
        let b_swapped = quantum::b_coefficient(alpha, ev(1, 2, 3, 0));
        assert!((w - 2.0 * PI * b_swapped).abs() < 1e-16);
        assert!(matches!(
            larsson_weight(alpha, ev(1, 2, 3, 0)),
            Err(LhvError::IndexNotDescending(_))
        ));
    }

    #[test]
    fn delta_closed_form_values() {
        let n0 = ev(1, 0, 0, 0);
        // Frozen from a 50-digit evaluation.
        let d = delta(alpha_sq(0.3), n0).unwrap();
        assert!((d - 0.10853222648707090).abs() < 1e-15);
        assert!(delta(alpha_sq(0.3), ev(0, 0, 2, 1)).unwrap() > 0.0);
        // Near the certified threshold the critical term is small.
        let d_thr = delta(alpha_sq(0.87), n0).unwrap();
        assert!(d_thr.abs() < 1e-2);
        assert!(d_thr > 0.0);
    }

    #[test]
    fn delta_matches_truncated_summation() {
        for &a2 in &[0.1, 0.3, 0.86] {
            let alpha = alpha_sq(a2);
            for n0 in [ev(1, 0, 0, 0), ev(2, 0, 0, 0), ev(0, 0, 2, 1)] {
                let closed = delta(alpha, n0).unwrap();
                let summed = delta_by_summation(alpha, n0, 40).unwrap();
                assert!((closed - summed).abs() < 1e-14, "a2={a2} n0={n0}");
            }
        }
    }

    #[test]
    fn delta_rejects_non_vacuum_class_indices() {
        for bad in [ev(1, 0, 1, 0), ev(1, 1, 0, 0), ev(0, 0, 0, 0)] {
            assert!(matches!(
                delta(alpha_sq(0.3), bad),
                Err(LhvError::NotAVacuumClassIndex(_))
            ));
        }
    }

    #[test]
    fn delta_lower_bound_is_a_lower_bound() {
        for &a2 in &[0.1, 0.5, 0.86, 0.88, 1.2] {
            let alpha = alpha_sq(a2);
            for n0 in [ev(1, 0, 0, 0), ev(3, 1, 0, 0), ev(0, 0, 2, 0)] {
                let exact = delta(alpha, n0).unwrap();
                let bound = delta_lower_bound(alpha, n0).unwrap();
                assert!(bound <= exact + 1e-18, "a2={a2} n0={n0}");
            }
        }
    }

    #[test]
    fn wider_imbalance_keeps_delta_positive_past_the_threshold() {
        let alpha = alpha_sq(0.95);
        assert!(delta(alpha, ev(2, 0, 0, 0)).unwrap() > 0.0);
        assert!(delta_lower_bound(alpha, ev(2, 0, 0, 0)).unwrap() > 0.0);
        assert!(delta_lower_bound(alpha, ev(1, 0, 0, 0)).unwrap() < 0.0);
    }
}
