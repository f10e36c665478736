//! Numerical checks of the martingale identity, supermartingale decay, the
//! evidence lower-bound event and the prior-mass conditions.

mod conditions;
mod decay;
mod enumerate;
mod identity;

pub use conditions::{
    check_evidence_event, check_prior_ratio_condition, check_theorem1_conditions, EvidenceEventReport,
    EvidenceEventRow, PriorRatioRow, RateConditionParams, RateConditionReport, ENTROPY_CONDITION_NOTE,
};
pub use decay::{check_supermartingale_decay, DecayMode, DecayReport};
pub use enumerate::{
    exact_power_expectation, mc_power_curve, PowerCurveEstimate, EXACT_MAX_SEQUENCES, EXACT_MAX_STEPS,
};
pub use identity::{check_key_identity, IdentityForm, IdentityInstance, IdentityReport, KEY_IDENTITY_TOL};
