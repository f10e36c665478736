//! Exact sequential posterior over a finite prior, kept in likelihood-ratio form.
//!
//! The state stores `log R_n(p_i) = Σ_k log p_i(X_k) − log p*(X_k)` per member.
//! Posterior masses, restricted integrals `∫_A R_n dΠ` and predictive densities
//! are all derived from those ratios and the log prior by max-shifted sums.
//! Zero-probability members keep a `-inf` ratio and stay in the state.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_space::{FiniteDensity, IndexSet, ModelFamily, Prior};
use crate::scalar::{log_sum_exp, Scalar};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Per-member log likelihood ratios after `n` observations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorState<T> {
    log_ratios: Vec<T>,
    n: u64,
    /// FNV-1a over the observed symbols, in order.
    history_digest: u64,
}

impl<T: Scalar> PosteriorState<T> {
    pub fn log_ratios(&self) -> &[T] {
        &self.log_ratios
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn history_digest(&self) -> u64 {
        self.history_digest
    }
}

/// `log ∫_A R_n dΠ` together with the set it was taken over.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictedIntegral<T> {
    pub log_value: T,
    pub set_indices: IndexSet,
}

/// Predictive density `p_{nA}` with the conditional posterior weights that mix it.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictive<T> {
    pub density: FiniteDensity<T>,
    /// `Π^n_A(i)`, aligned with the family; zero outside `A`.
    pub weights: Vec<T>,
}

/// Family, prior and reference density `p*` that a posterior is computed against.
#[derive(Debug, Clone)]
pub struct PosteriorModel<'a, T> {
    family: &'a ModelFamily<T>,
    prior: &'a Prior<T>,
    pstar_index: usize,
    log_prior: Vec<T>,
    /// `log_members[i][x] = log p_i(x)`
    log_members: Vec<Vec<T>>,
}

impl<'a, T: Scalar> PosteriorModel<'a, T> {
    pub fn new(family: &'a ModelFamily<T>, prior: &'a Prior<T>, pstar_index: usize) -> Result<Self> {
        prior.check_aligned(family)?;
        family.check_index(pstar_index)?;
        Ok(Self {
            family,
            prior,
            pstar_index,
            log_prior: prior.weights().iter().map(|w| w.ln()).collect(),
            log_members: family
                .members()
                .iter()
                .map(|m| m.probs().iter().map(|p| p.ln()).collect())
                .collect(),
        })
    }

    pub fn family(&self) -> &'a ModelFamily<T> {
        self.family
    }

    pub fn prior(&self) -> &'a Prior<T> {
        self.prior
    }

    pub fn pstar_index(&self) -> usize {
        self.pstar_index
    }

    pub fn pstar(&self) -> &'a FiniteDensity<T> {
        self.family.member(self.pstar_index)
    }

    /// The `n = 0` state: every ratio is 1, so the posterior is the prior.
    pub fn init(&self) -> PosteriorState<T> {
        PosteriorState {
            log_ratios: vec![T::zero(); self.family.len()],
            n: 0,
            history_digest: FNV_OFFSET,
        }
    }

    pub fn update(&self, state: &PosteriorState<T>, x: usize) -> Result<PosteriorState<T>> {
        let mut next = state.clone();
        self.update_in_place(&mut next, x)?;
        Ok(next)
    }

    pub fn update_in_place(&self, state: &mut PosteriorState<T>, x: usize) -> Result<()> {
        let ref_log = self.reference_log_prob(x)?;
        for (l, lp) in state.log_ratios.iter_mut().zip(&self.log_members) {
            *l = *l + (lp[x] - ref_log);
        }
        state.n += 1;
        state.history_digest = (state.history_digest ^ x as u64).wrapping_mul(FNV_PRIME);
        Ok(())
    }

    fn reference_log_prob(&self, x: usize) -> Result<T> {
        if x >= self.family.alphabet_size() {
            return Err(Error::Domain(format!(
                "symbol {x} outside alphabet of size {}",
                self.family.alphabet_size()
            )));
        }
        let l = self.log_members[self.pstar_index][x];
        if l == T::neg_infinity() {
            return Err(Error::Domain(format!(
                "observed symbol {x} has probability 0 under p* (member {})",
                self.pstar_index
            )));
        }
        Ok(l)
    }

    /// `log p_i(x) − log p*(x)` for every member.
    pub fn log_ratio_increments(&self, x: usize) -> Result<Vec<T>> {
        let r = self.reference_log_prob(x)?;
        Ok(self.log_members.iter().map(|lp| lp[x] - r).collect())
    }

    #[inline]
    fn log_joint(&self, state: &PosteriorState<T>, i: usize) -> T {
        if self.log_prior[i] == T::neg_infinity() {
            T::neg_infinity()
        } else {
            self.log_prior[i] + state.log_ratios[i]
        }
    }

    pub(crate) fn log_integral(&self, state: &PosteriorState<T>, set: &IndexSet) -> T {
        log_sum_exp(set.iter().map(|&i| self.log_joint(state, i)))
    }

    /// `log ∫_A R_n dΠ`; `-inf` for the empty set or a null set.
    pub fn restricted_log_integral(
        &self,
        state: &PosteriorState<T>,
        set: &IndexSet,
    ) -> Result<RestrictedIntegral<T>> {
        self.family.check_indices(set)?;
        Ok(RestrictedIntegral {
            log_value: self.log_integral(state, set),
            set_indices: set.clone(),
        })
    }

    /// `log I_n = log ∫ R_n dΠ`.
    pub fn log_evidence(&self, state: &PosteriorState<T>) -> T {
        log_sum_exp((0..self.family.len()).map(|i| self.log_joint(state, i)))
    }

    /// `Π^n(B)`.
    pub fn posterior_mass(&self, state: &PosteriorState<T>, set: &IndexSet) -> Result<T> {
        self.family.check_indices(set)?;
        let total = self.log_evidence(state);
        if total == T::neg_infinity() {
            return Err(Error::UndefinedPosterior);
        }
        let part = self.log_integral(state, set);
        Ok((part - total).exp().min(T::one()))
    }

    /// Posterior weight of every member.
    pub fn posterior_weights(&self, state: &PosteriorState<T>) -> Result<Vec<T>> {
        let total = self.log_evidence(state);
        if total == T::neg_infinity() {
            return Err(Error::UndefinedPosterior);
        }
        Ok((0..self.family.len())
            .map(|i| (self.log_joint(state, i) - total).exp())
            .collect())
    }

    /// `p_{nA}(x) = Σ_{i∈A} p_i(x) Π^n_A(i)`.
    pub fn predictive_density(&self, state: &PosteriorState<T>, set: &IndexSet) -> Result<Predictive<T>> {
        self.family.check_indices(set)?;
        let log_a = self.log_integral(state, set);
        let (probs, weights) = self.predictive_parts(state, set, log_a)?;
        Ok(Predictive {
            density: FiniteDensity::new(probs)?,
            weights,
        })
    }

    /// Predictive probabilities and conditional weights given `log_a = log ∫_A R_n dΠ`,
    /// without validating the result as a density.
    pub(crate) fn predictive_parts(
        &self,
        state: &PosteriorState<T>,
        set: &IndexSet,
        log_a: T,
    ) -> Result<(Vec<T>, Vec<T>)> {
        if log_a == T::neg_infinity() {
            return Err(Error::NullConditioning);
        }
        let mut weights = vec![T::zero(); self.family.len()];
        for &i in set {
            weights[i] = (self.log_joint(state, i) - log_a).exp();
        }
        let total: T = weights.iter().copied().sum();
        weights.iter_mut().for_each(|w| *w = *w / total);

        let k = self.family.alphabet_size();
        let mut probs = vec![T::zero(); k];
        for &i in set {
            let w = weights[i];
            if w == T::zero() {
                continue;
            }
            for (p, &q) in probs.iter_mut().zip(self.family.member(i).probs()) {
                *p = *p + w * q;
            }
        }
        Ok((probs, weights))
    }

    pub fn snapshot(&self, state: &PosteriorState<T>) -> Result<StateSnapshot<T>> {
        Ok(StateSnapshot {
            n: state.n,
            log_ratios: state.log_ratios.clone(),
            posterior_weights: self.posterior_weights(state)?,
        })
    }
}

/// Exportable view of a state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSnapshot<T> {
    pub n: u64,
    pub log_ratios: Vec<T>,
    pub posterior_weights: Vec<T>,
}

/// Writes snapshots as tab-separated rows `n  index  label  log_ratio  weight`.
pub fn write_snapshots_tsv<T: Scalar, W: Write>(
    mut out: W,
    family: &ModelFamily<T>,
    snapshots: &[StateSnapshot<T>],
) -> io::Result<()> {
    writeln!(out, "n\tindex\tlabel\tlog_ratio\tposterior_weight")?;
    for s in snapshots {
        for (i, (l, w)) in s.log_ratios.iter().zip(&s.posterior_weights).enumerate() {
            writeln!(out, "{}\t{}\t{}\t{:e}\t{:e}", s.n, i, family.label(i), l, w)?;
        }
    }
    Ok(())
}
