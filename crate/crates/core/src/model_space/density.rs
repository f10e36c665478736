use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Normalization tolerance for densities and priors (absolute, on the sum).
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Ordered set of family-member indices.
pub type IndexSet = BTreeSet<usize>;

/// A probability mass function over the alphabet `{0, .., k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FiniteDensity<T> {
    probs: Vec<T>,
}

impl<T: Scalar> FiniteDensity<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        validate_simplex(&probs).map_err(|reason| Error::InvalidDensity {
            record: None,
            label: None,
            reason,
        })?;
        Ok(Self { probs })
    }

    /// Bernoulli(θ) on `{0, 1}`, with θ the mass of symbol 1.
    pub fn bernoulli(theta: T) -> Result<Self> {
        Self::new(vec![T::one() - theta, theta])
    }

    pub fn point_mass(alphabet_size: usize, symbol: usize) -> Result<Self> {
        if symbol >= alphabet_size {
            return Err(Error::IndexOutOfRange {
                index: symbol,
                len: alphabet_size,
            });
        }
        let mut probs = vec![T::zero(); alphabet_size];
        probs[symbol] = T::one();
        Self::new(probs)
    }

    pub fn uniform(alphabet_size: usize) -> Result<Self> {
        let k = T::from_usize(alphabet_size).unwrap_or_else(T::zero);
        Self::new(vec![T::one() / k; alphabet_size])
    }

    /// Convex combination `Σ_i weights[i] · components[i]`. Weights are
    /// renormalized to sum to one.
    pub fn mixture(components: &[&FiniteDensity<T>], weights: &[T]) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if components.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: components.len(),
                found: weights.len(),
            });
        }
        let k = components[0].alphabet_size();
        for c in components {
            check_alphabet(k, c)?;
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::Domain("mixture weights must be finite and nonnegative".into()));
        }
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::Domain("mixture weights sum to zero".into()));
        }
        let mut probs = vec![T::zero(); k];
        for (c, &w) in components.iter().zip(weights) {
            let w = w / total;
            for (p, &q) in probs.iter_mut().zip(&c.probs) {
                *p = *p + w * q;
            }
        }
        Self::new(probs)
    }

    #[inline]
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, symbol: usize) -> T {
        self.probs[symbol]
    }

    #[inline]
    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::zero())
            .map(|(x, _)| x)
    }
}

impl<'de> Deserialize<'de> for FiniteDensity<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(d)?;
        FiniteDensity::new(probs).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn validate_simplex<T: Scalar>(values: &[T]) -> std::result::Result<(), String> {
    if values.is_empty() {
        return Err("empty probability vector".into());
    }
    if let Some((i, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < T::zero())
    {
        return Err(format!("entry {i} = {v} is negative or not finite"));
    }
    let sum: T = values.iter().copied().sum();
    if (sum - T::one()).abs() > T::tol(NORMALIZATION_TOL) {
        return Err(format!("entries sum to {sum}, not 1"));
    }
    Ok(())
}

pub(crate) fn check_alphabet<T: Scalar>(expected: usize, d: &FiniteDensity<T>) -> Result<()> {
    if d.alphabet_size() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: d.alphabet_size(),
        });
    }
    Ok(())
}

/// A finite, indexed model family sharing one alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFamily<T> {
    members: Vec<FiniteDensity<T>>,
    labels: Vec<String>,
}

impl<T: Scalar> ModelFamily<T> {
    pub fn new(members: Vec<FiniteDensity<T>>) -> Result<Self> {
        let labels = (0..members.len()).map(|i| format!("m{i}")).collect();
        Self::with_labels(members, labels)
    }

    pub fn with_labels(members: Vec<FiniteDensity<T>>, labels: Vec<String>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyFamily)?;
        let k = first.alphabet_size();
        for (i, m) in members.iter().enumerate() {
            if m.alphabet_size() != k {
                return Err(Error::InvalidDensity {
                    record: Some(i),
                    label: labels.get(i).cloned(),
                    reason: format!("alphabet size {} differs from {k}", m.alphabet_size()),
                });
            }
        }
        if labels.len() != members.len() {
            return Err(Error::DimensionMismatch {
                expected: members.len(),
                found: labels.len(),
            });
        }
        Ok(Self { members, labels })
    }

    /// `{Bern(θ) : θ ∈ thetas}`, labelled by θ.
    pub fn bernoulli_grid(thetas: &[T]) -> Result<Self> {
        let members = thetas
            .iter()
            .map(|&t| FiniteDensity::bernoulli(t))
            .collect::<Result<Vec<_>>>()?;
        let labels = thetas.iter().map(|t| format!("{t}")).collect();
        Self::with_labels(members, labels)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[inline]
    pub fn alphabet_size(&self) -> usize {
        self.members[0].alphabet_size()
    }

    #[inline]
    pub fn member(&self, i: usize) -> &FiniteDensity<T> {
        &self.members[i]
    }

    pub fn members(&self) -> &[FiniteDensity<T>] {
        &self.members
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn all_indices(&self) -> IndexSet {
        (0..self.len()).collect()
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.len(),
            });
        }
        Ok(())
    }

    pub fn check_indices<'a>(&self, set: impl IntoIterator<Item = &'a usize>) -> Result<()> {
        set.into_iter().try_for_each(|&i| self.check_index(i))
    }
}

/// Prior weights aligned with a [`ModelFamily`].
#[derive(Debug, Clone, PartialEq)]
pub struct Prior<T> {
    weights: Vec<T>,
}

impl<T: Scalar> Prior<T> {
    pub fn new(weights: Vec<T>) -> Result<Self> {
        validate_simplex(&weights).map_err(Error::InvalidPrior)?;
        Ok(Self { weights })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        let n = T::from_usize(len).unwrap_or_else(T::zero);
        Self::new(vec![T::one() / n; len])
    }

    pub fn point_mass(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::IndexOutOfRange { index, len });
        }
        let mut w = vec![T::zero(); len];
        w[index] = T::one();
        Self::new(w)
    }

    #[inline]
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Prior mass `Π(B)`.
    pub fn mass<'a>(&self, set: impl IntoIterator<Item = &'a usize>) -> T {
        set.into_iter().map(|&i| self.weights[i]).sum()
    }

    pub fn check_aligned(&self, family: &ModelFamily<T>) -> Result<()> {
        if self.len() != family.len() {
            return Err(Error::DimensionMismatch {
                expected: family.len(),
                found: self.len(),
            });
        }
        Ok(())
    }
}
