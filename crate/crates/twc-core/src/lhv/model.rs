//! Assembly of the full model: a convex mixture of Larsson-like and trivial
//! submodels that reproduces every quantum event probability below the
//! cutoff.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use super::{
    delta, delta_lower_bound, larsson_weight, LhvError, FLAT_VACUUM_PROBABILITY,
};
use crate::numerics::{lambert_w0, poisson_weighted_tail, CompensatedSum, MAX_TOTAL};
use crate::quantum;
use crate::types::{events_up_to, Event, OscillatorStrength, Settings};

const WEIGHT_EPSILON: f64 = 1e-12;

/// Largest oscillator strength for which the construction is certified:
/// W((2e + e pi)/(pi - 2)) - 1, about 0.8759.
///
/// This is where the strict consistency bound for |k - l| = 1 crosses zero.
pub fn validity_threshold_alpha_sq() -> f64 {
    use std::sync::OnceLock;
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        let z = E * (2.0 + PI) / (PI - 2.0);
        lambert_w0(z).expect("argument is well inside the principal domain") - 1.0
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubmodelKind {
    /// Hidden-variable submodel with the interference response functions.
    Larsson,
    /// Deterministic submodel emitting its index event with certainty.
    Trivial,
}

/// One member of the mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Submodel {
    pub kind: SubmodelKind,
    pub index: Event,
    pub weight: f64,
}

/// The assembled model: all submodels with index total at most `cutoff`,
/// plus the exact residual weight of everything omitted.
#[derive(Debug, Clone, Serialize)]
#[serde(into = "ModelLayout")]
pub struct FullModel {
    alpha_sq: f64,
    cutoff: u32,
    submodels: Vec<Submodel>,
    weight_tail: f64,
    #[serde(skip)]
    larsson_weights: BTreeMap<Event, f64>,
    #[serde(skip)]
    trivial_weights: BTreeMap<Event, f64>,
}

/// Documented JSON layout of a serialized model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelLayout {
    pub alpha_sq: f64,
    pub cutoff: u32,
    pub weight_tail: f64,
    pub submodels: Vec<Submodel>,
}

impl From<FullModel> for ModelLayout {
    fn from(m: FullModel) -> Self {
        ModelLayout {
            alpha_sq: m.alpha_sq,
            cutoff: m.cutoff,
            weight_tail: m.weight_tail,
            submodels: m.submodels,
        }
    }
}

impl TryFrom<ModelLayout> for FullModel {
    type Error = LhvError;

    fn try_from(layout: ModelLayout) -> Result<Self, Self::Error> {
        let alpha = OscillatorStrength::from_alpha_sq(layout.alpha_sq).map_err(|_| {
            LhvError::WeightInconsistency {
                reason: format!("alpha_sq = {} is not positive", layout.alpha_sq),
            }
        })?;
        FullModel::from_submodels(alpha, layout.cutoff, layout.submodels)
    }
}

impl FullModel {
    /// Validate and index an explicit submodel list.
    pub fn from_submodels(
        alpha: OscillatorStrength,
        cutoff: u32,
        submodels: Vec<Submodel>,
    ) -> Result<Self, LhvError> {
        let mut larsson_weights = BTreeMap::new();
        let mut trivial_weights = BTreeMap::new();
        let mut total = CompensatedSum::new();
        for sub in &submodels {
            if sub.weight < -WEIGHT_EPSILON || !sub.weight.is_finite() {
                return Err(LhvError::WeightInconsistency {
                    reason: format!("submodel {} has weight {}", sub.index, sub.weight),
                });
            }
            total.add(sub.weight);
            match sub.kind {
                SubmodelKind::Larsson => {
                    let expected = larsson_weight(alpha, sub.index)?;
                    if (sub.weight - expected).abs() > 1e-12 {
                        return Err(LhvError::WeightInconsistency {
                            reason: format!(
                                "Larsson weight for {} is {} but 2 pi B gives {}",
                                sub.index, sub.weight, expected
                            ),
                        });
                    }
                    larsson_weights.insert(sub.index, sub.weight);
                }
                SubmodelKind::Trivial => {
                    trivial_weights.insert(sub.index, sub.weight);
                }
            }
        }
        let total = total.value();
        if total > 1.0 + 1e-9 {
            return Err(LhvError::WeightInconsistency {
                reason: format!("weights sum to {total} > 1"),
            });
        }
        if submodels.is_empty() {
            return Err(LhvError::EmptyModel);
        }
        Ok(Self {
            alpha_sq: alpha.alpha_sq(),
            cutoff,
            submodels,
            weight_tail: (1.0 - total).max(0.0),
            larsson_weights,
            trivial_weights,
        })
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha_sq
    }

    pub fn oscillator_strength(&self) -> OscillatorStrength {
        OscillatorStrength::from_alpha_sq(self.alpha_sq).expect("validated at construction")
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn submodels(&self) -> &[Submodel] {
        &self.submodels
    }

    /// Exact weight of the omitted (beyond-cutoff) part of the mixture.
    pub fn weight_tail(&self) -> f64 {
        self.weight_tail
    }

    pub fn larsson_weight_of(&self, index: &Event) -> Option<f64> {
        self.larsson_weights.get(index).copied()
    }

    pub fn trivial_weight_of(&self, index: &Event) -> Option<f64> {
        self.trivial_weights.get(index).copied()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.clone()).expect("model serialization cannot fail")
    }
}

/// Build the model at the given oscillator strength.
///
/// Larsson-like submodels get weight 2 pi B over the descending indices;
/// balanced-class events keep their quantum probability as a trivial
/// weight; vacuum-class events with one unbalanced side receive the exact
/// consistency term, gated on its strict lower bound so that an invalid
/// strength is rejected rather than silently patched.
pub fn build_full_model(
    alpha: OscillatorStrength,
    cutoff: u32,
) -> Result<FullModel, LhvError> {
    if cutoff > MAX_TOTAL {
        return Err(LhvError::CutoffTooLarge {
            cutoff,
            max: MAX_TOTAL,
        });
    }
    let threshold = validity_threshold_alpha_sq();
    let mut submodels = Vec::new();
    for n in events_up_to(cutoff) {
        if n.is_descending_index() {
            let weight = larsson_weight(alpha, n)?;
            submodels.push(Submodel {
                kind: SubmodelKind::Larsson,
                index: n,
                weight,
            });
        } else if n.is_one_side_vacuum() && !(n.alice_balanced() && n.bob_balanced()) {
            let bound = delta_lower_bound(alpha, n)?;
            if bound < -WEIGHT_EPSILON {
                return Err(LhvError::ModelInvalid {
                    event: n,
                    alpha_sq: alpha.alpha_sq(),
                    delta_lower_bound: bound,
                    threshold,
                });
            }
            let weight = delta(alpha, n)?;
            // A zero consistency term contributes nothing; omit it rather
            // than keep a dead category in the sampler.
            if weight > 0.0 {
                submodels.push(Submodel {
                    kind: SubmodelKind::Trivial,
                    index: n,
                    weight,
                });
            }
        } else if n.is_balanced_class() {
            let weight = quantum::b_coefficient(alpha, n);
            if weight > 0.0 {
                submodels.push(Submodel {
                    kind: SubmodelKind::Trivial,
                    index: n,
                    weight,
                });
            }
        }
        // Interference events outside the descending class are emitted by
        // the submodel of their sorted index; they carry no submodel.
    }
    let model = FullModel::from_submodels(alpha, cutoff, submodels)?;

    // The residual mass is the Appendix-style normalisation deficit of the
    // truncation; certify it against the Poisson envelope.
    let certified = (2.0 * PI + 1.0)
        * poisson_weighted_tail(2.0 * alpha.alpha_sq(), cutoff, 2).map_err(|source| {
            LhvError::TailNotCertifiable { cutoff, source }
        })?;
    if model.weight_tail > certified + 1e-9 {
        return Err(LhvError::WeightInconsistency {
            reason: format!(
                "residual weight {} exceeds the certified bound {}",
                model.weight_tail, certified
            ),
        });
    }
    Ok(model)
}

/// Total model probability of an event: the sum over submodels of their
/// weight times their probability of emitting it, resolved through the
/// reverse index (which submodels can emit which event).
pub fn lhv_event_probability(
    model: &FullModel,
    settings: Settings,
    n: Event,
) -> Result<f64, LhvError> {
    if n.total() > model.cutoff() {
        return Err(LhvError::ModelCutoffExceeded {
            event_total: n.total(),
            cutoff: model.cutoff(),
        });
    }
    let alice_unbalanced = !n.alice_balanced();
    let bob_unbalanced = !n.bob_balanced();

    if alice_unbalanced && bob_unbalanced {
        // Interference event: exactly one Larsson submodel emits it.
        let index = n.sorted_index();
        let Some(weight) = model.larsson_weight_of(&index) else {
            return Ok(0.0);
        };
        let vis = quantum::visibility(index).expect("descending index");
        let sign_a = if n.k > n.l { 1.0 } else { -1.0 };
        let sign_b = if n.r > n.s { 1.0 } else { -1.0 };
        let outcome = (1.0 + vis * sign_a * sign_b * settings.theta12().sin()) / (2.0 * PI);
        return Ok(weight * outcome);
    }

    let mut total = model.trivial_weight_of(&n).unwrap_or(0.0);
    if n.is_one_side_vacuum() && (alice_unbalanced || bob_unbalanced) {
        // Vacuum-class event: every Larsson submodel sharing the unbalanced
        // pair feeds it the flat probability.
        let bob_vacuum = n.r == 0 && n.s == 0;
        let (a, b) = if bob_vacuum {
            (n.k.max(n.l), n.k.min(n.l))
        } else {
            (n.r.max(n.s), n.r.min(n.s))
        };
        let budget = model.cutoff() - (a + b);
        let mut fed = CompensatedSum::new();
        for c in 1..=budget {
            for d in 0..c {
                if c + d > budget {
                    break;
                }
                let index = if bob_vacuum {
                    Event { k: a, l: b, r: c, s: d }
                } else {
                    Event { k: c, l: d, r: a, s: b }
                };
                if let Some(weight) = model.larsson_weight_of(&index) {
                    fed.add(weight * FLAT_VACUUM_PROBABILITY);
                }
            }
        }
        total += fed.value();
    }
    Ok(total)
}
