//! α-coverings of `{P : d(P, P*) ≥ r}` and of distance shells.
//!
//! A cover element is the convex hull of a few family members. It is
//! certified by maximizing the α-affinity `E₀(p/p*)^α` over the whole hull
//! (concave in `p`) and checking `max ≤ e^{-t}`; the Frank-Wolfe gap bounds
//! the distance to the true maximum. Vertex checks alone would not be sound.

mod exact;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_space::{
    alpha_log_affinity, gen_hellinger_sq, ratio_column, FiniteDensity, IndexSet, ModelFamily,
};
use crate::scalar::Scalar;
use crate::simplex::{self, Concave, SimplexMax, DEFAULT_MAX_ITER};

pub use exact::{covering_number_exact, EXACT_MAX_TARGETS};

/// Duality-gap tolerance for hull certification.
pub const CERTIFY_GAP_TOL: f64 = 1e-9;

/// Optimizer evidence that a hull clears its threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate<T> {
    /// Largest α-affinity `E₀(mix/p*)^α` found on the hull.
    pub achieved_sup: T,
    /// Mixture weights attaining `achieved_sup`, aligned with the generators.
    pub maximizing_weights: Vec<T>,
    /// Upper bound on `true sup − achieved_sup`.
    pub optimality_gap: T,
    pub iterations: usize,
}

/// One convex covering piece: the hull of `generator_indices`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverElement<T> {
    generator_indices: Vec<usize>,
    alpha: T,
    certified_threshold: T,
    certificate: Certificate<T>,
}

impl<T: Scalar> CoverElement<T> {
    pub fn generator_indices(&self) -> &[usize] {
        &self.generator_indices
    }

    pub fn generators(&self) -> IndexSet {
        self.generator_indices.iter().copied().collect()
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn certified_threshold(&self) -> T {
        self.certified_threshold
    }

    pub fn certificate(&self) -> &Certificate<T> {
        &self.certificate
    }

    /// `-log achieved_sup`: the smallest `-log E₀(p/p*)^α` found on the hull.
    pub fn min_log_affinity(&self) -> T {
        -self.certificate.achieved_sup.ln()
    }

    /// Checks the certificate's internal consistency.
    pub fn validate(&self) -> Result<()> {
        let c = &self.certificate;
        if self.generator_indices.is_empty() {
            return Err(Error::InvalidCertificate("no generators".into()));
        }
        if c.maximizing_weights.len() != self.generator_indices.len() {
            return Err(Error::InvalidCertificate("weights do not match generators".into()));
        }
        if !(c.optimality_gap <= T::tol(CERTIFY_GAP_TOL)) {
            return Err(Error::InvalidCertificate(format!(
                "gap {} above {CERTIFY_GAP_TOL:e}",
                c.optimality_gap
            )));
        }
        if !(c.achieved_sup <= (-self.certified_threshold).exp()) {
            return Err(Error::InvalidCertificate(format!(
                "hull affinity {} exceeds exp(-{})",
                c.achieved_sup, self.certified_threshold
            )));
        }
        Ok(())
    }
}

/// Why a hull was not certified.
#[derive(Debug, Clone, PartialEq)]
pub enum Refusal<T> {
    /// A mixture in the hull has `-log E₀(mix/p*)^α` below the threshold.
    Violated {
        witness_weights: Vec<T>,
        witness_log_affinity: T,
    },
    /// The optimizer hit its iteration cap with the gap still open.
    NotConverged { gap: T, iterations: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certification<T> {
    Certified(CoverElement<T>),
    Refused(Refusal<T>),
}

impl<T> Certification<T> {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certification::Certified(_))
    }

    pub fn certified(self) -> Option<CoverElement<T>> {
        match self {
            Certification::Certified(e) => Some(e),
            Certification::Refused(_) => None,
        }
    }
}

fn check_alpha_open<T: Scalar>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

/// Maximizes the α-affinity `E₀(mix/p*)^α` over the hull of `generators`.
/// Weights in the result follow the set's iteration order.
pub fn hull_max_affinity<T: Scalar>(
    generators: &IndexSet,
    family: &ModelFamily<T>,
    p0: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
    alpha: T,
) -> Result<SimplexMax<T>> {
    if generators.is_empty() {
        return Err(Error::Domain("cover element needs at least one generator".into()));
    }
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    family.check_indices(generators)?;
    let cols = generators
        .iter()
        .map(|&i| ratio_column(p0, family.member(i), pstar))
        .collect::<Result<Vec<_>>>()?;
    Ok(simplex::maximize(
        p0.probs(),
        &cols,
        Concave::Power(alpha),
        T::tol(CERTIFY_GAP_TOL),
        DEFAULT_MAX_ITER,
    ))
}

/// Decides whether `inf_{p ∈ hull} -log E₀(p/p*)^α ≥ threshold`.
pub fn certify_element<T: Scalar>(
    generators: &IndexSet,
    family: &ModelFamily<T>,
    p0: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
    alpha: T,
    threshold: T,
) -> Result<Certification<T>> {
    check_alpha_open(alpha)?;
    let sol = hull_max_affinity(generators, family, p0, pstar, alpha)?;
    if sol.value > (-threshold).exp() {
        return Ok(Certification::Refused(Refusal::Violated {
            witness_log_affinity: -sol.value.ln(),
            witness_weights: sol.weights,
        }));
    }
    if !sol.converged {
        return Ok(Certification::Refused(Refusal::NotConverged {
            gap: sol.gap,
            iterations: sol.iterations,
        }));
    }
    Ok(Certification::Certified(CoverElement {
        generator_indices: generators.iter().copied().collect(),
        alpha,
        certified_threshold: threshold,
        certificate: Certificate {
            achieved_sup: sol.value,
            maximizing_weights: sol.weights,
            optimality_gap: sol.gap,
            iterations: sol.iterations,
        },
    }))
}

/// Indices `i` with `d(P_i, P*) ≥ threshold_distance`, compared on squares.
pub fn build_target_set<T: Scalar>(
    family: &ModelFamily<T>,
    pstar_index: usize,
    p0: &FiniteDensity<T>,
    threshold_distance: T,
) -> Result<IndexSet> {
    if !(threshold_distance >= T::zero()) {
        return Err(Error::Domain(format!(
            "threshold distance {threshold_distance} must be nonnegative"
        )));
    }
    let d2 = distances_sq(family, pstar_index, p0)?;
    let r2 = threshold_distance * threshold_distance;
    Ok(d2
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= r2)
        .map(|(i, _)| i)
        .collect())
}

/// `d²(P_i, P*)` for every member.
pub fn distances_sq<T: Scalar>(
    family: &ModelFamily<T>,
    pstar_index: usize,
    p0: &FiniteDensity<T>,
) -> Result<Vec<T>> {
    family.check_index(pstar_index)?;
    let pstar = family.member(pstar_index);
    family
        .members()
        .iter()
        .map(|p| gen_hellinger_sq(p, pstar, p0, pstar))
        .collect()
}

/// A certified α-covering of a target set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Covering<T> {
    pub elements: Vec<CoverElement<T>>,
    pub covered_indices: IndexSet,
    pub alpha: T,
    pub threshold: T,
}

impl<T: Scalar> Covering<T> {
    /// Number of elements: an upper bound on `N_t`.
    pub fn n_upper_bound(&self) -> usize {
        self.elements.len()
    }

    /// Every index of `target` sits in some element whose certificate holds.
    pub fn covers(&self, target: &IndexSet) -> bool {
        target.iter().all(|i| {
            self.elements
                .iter()
                .any(|e| e.generator_indices.contains(i) && e.validate().is_ok())
        })
    }

    pub fn report(&self, family: &ModelFamily<T>) -> CoveringReport<T> {
        CoveringReport {
            alpha: self.alpha,
            threshold: self.threshold,
            n_upper_bound: self.n_upper_bound(),
            elements: self
                .elements
                .iter()
                .map(|e| ElementReport {
                    generators: e.generator_indices.iter().map(|&i| family.label(i).to_string()).collect(),
                    generator_indices: e.generator_indices.clone(),
                    certified_threshold: e.certified_threshold,
                    achieved_sup: e.certificate.achieved_sup,
                    min_log_affinity: e.min_log_affinity(),
                    gap: e.certificate.optimality_gap,
                    iterations: e.certificate.iterations,
                })
                .collect(),
        }
    }
}

/// Serializable covering summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringReport<T> {
    pub alpha: T,
    pub threshold: T,
    pub n_upper_bound: usize,
    pub elements: Vec<ElementReport<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementReport<T> {
    pub generators: Vec<String>,
    pub generator_indices: Vec<usize>,
    pub certified_threshold: T,
    pub achieved_sup: T,
    pub min_log_affinity: T,
    pub gap: T,
    pub iterations: usize,
}

/// Certifies every target as a singleton, in parallel; the first failure
/// in target order is reported as uncoverable.
pub(crate) fn certify_singletons<T: Scalar>(
    targets: &[usize],
    family: &ModelFamily<T>,
    p0: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
    alpha: T,
    threshold: T,
) -> Result<Vec<CoverElement<T>>> {
    let results: Vec<Result<Certification<T>>> = targets
        .par_iter()
        .map(|&i| certify_element(&IndexSet::from([i]), family, p0, pstar, alpha, threshold))
        .collect();
    targets
        .iter()
        .zip(results)
        .map(|(&i, r)| match r? {
            Certification::Certified(e) => Ok(e),
            Certification::Refused(_) => Err(Error::Uncoverable {
                index: i,
                value: alpha_log_affinity(p0, family.member(i), pstar, alpha)?.to_f64_lossy(),
                threshold: threshold.to_f64_lossy(),
            }),
        })
        .collect()
}

/// Greedy α-covering of `target`.
///
/// Seeds are taken in order of increasing distance to `p*`. Each element
/// then tries the remaining uncovered targets nearest the seed first and
/// keeps every one whose addition still certifies.
pub fn build_cover<T: Scalar>(
    target: &IndexSet,
    family: &ModelFamily<T>,
    p0: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
    alpha: T,
    threshold: T,
) -> Result<Covering<T>> {
    check_alpha_open(alpha)?;
    family.check_indices(target)?;
    let targets: Vec<usize> = target.iter().copied().collect();
    let singles = certify_singletons(&targets, family, p0, pstar, alpha, threshold)?;

    let dist_to_ref = |i: usize| gen_hellinger_sq(family.member(i), pstar, p0, pstar);
    let mut order: Vec<(T, usize)> = targets
        .iter()
        .map(|&i| Ok((dist_to_ref(i)?, i)))
        .collect::<Result<_>>()?;
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut uncovered: Vec<usize> = order.into_iter().map(|(_, i)| i).collect();

    let mut elements = Vec::new();
    while let Some(&seed) = uncovered.first() {
        let pos = targets.binary_search(&seed).expect("seed is a target");
        let mut element = singles[pos].clone();
        let mut gens = IndexSet::from([seed]);

        let mut candidates: Vec<(T, usize)> = uncovered[1..]
            .iter()
            .map(|&c| Ok((gen_hellinger_sq(family.member(c), family.member(seed), p0, pstar)?, c)))
            .collect::<Result<_>>()?;
        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        for (_, c) in candidates {
            let mut trial = gens.clone();
            trial.insert(c);
            if let Certification::Certified(e) = certify_element(&trial, family, p0, pstar, alpha, threshold)? {
                gens = trial;
                element = e;
            }
        }
        uncovered.retain(|i| !gens.contains(i));
        elements.push(element);
    }

    Ok(Covering {
        elements,
        covered_indices: target.clone(),
        alpha,
        threshold,
    })
}

/// Distance annulus `inner ≤ d(P, P*) < outer` with `inner = M·J·ε`, `outer = 2·M·J·ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellSpec<T> {
    pub j: usize,
    pub inner_radius: T,
    pub outer_radius: T,
    pub member_indices: IndexSet,
}

/// Shells `J = 1..=j_max`. Adjacent shells overlap; a member may sit in several.
pub fn build_shells<T: Scalar>(
    family: &ModelFamily<T>,
    pstar_index: usize,
    p0: &FiniteDensity<T>,
    eps_n: T,
    m_n: T,
    j_max: usize,
) -> Result<Vec<ShellSpec<T>>> {
    if !(eps_n > T::zero() && m_n > T::zero()) || j_max == 0 {
        return Err(Error::Domain(format!(
            "shells need eps_n > 0, M_n > 0, J_max ≥ 1 (got {eps_n}, {m_n}, {j_max})"
        )));
    }
    let d2 = distances_sq(family, pstar_index, p0)?;
    Ok((1..=j_max)
        .map(|j| {
            let inner = m_n * T::from_usize(j).unwrap() * eps_n;
            let outer = inner * T::lit(2.0);
            let (i2, o2) = (inner * inner, outer * outer);
            ShellSpec {
                j,
                inner_radius: inner,
                outer_radius: outer,
                member_indices: d2
                    .iter()
                    .enumerate()
                    .filter(|(_, &d)| d >= i2 && d < o2)
                    .map(|(i, _)| i)
                    .collect(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_space::{alpha_affinity, Prior};

    fn grid() -> ModelFamily<f64> {
        let thetas: Vec<f64> = (1..=9).map(|k| k as f64 * 0.05).collect();
        ModelFamily::bernoulli_grid(&thetas).unwrap()
    }

    fn bern(t: f64) -> FiniteDensity<f64> {
        FiniteDensity::bernoulli(t).unwrap()
    }

    #[test]
    fn target_set_examples() {
        let fam = grid();
        let p0 = bern(0.5);
        assert_eq!(build_target_set(&fam, 8, &p0, 0.0).unwrap(), fam.all_indices());
        assert!(build_target_set(&fam, 8, &p0, 10.0).unwrap().is_empty());
        // per-member oracle: ½Σ(√p−√p*)² p0/p* over two symbols
        let oracle: IndexSet = (0..9)
            .filter(|&i| {
                let t = (i + 1) as f64 * 0.05;
                let d2 = 0.5
                    * ((((1.0 - t) as f64).sqrt() - 0.55f64.sqrt()).powi(2) * 0.5 / 0.55
                        + (t.sqrt() - 0.45f64.sqrt()).powi(2) * 0.5 / 0.45);
                d2.sqrt() >= 0.1
            })
            .collect();
        assert_eq!(build_target_set(&fam, 8, &p0, 0.1).unwrap(), oracle);
        assert_eq!(oracle, IndexSet::from([0, 1, 2, 3, 4, 5]));
        assert!(build_target_set(&fam, 8, &p0, -1.0).is_err());
    }

    #[test]
    fn singleton_certification_is_point_evaluation() {
        let fam = grid();
        let (p0, ps) = (bern(0.5), bern(0.45));
        for i in 0..8 {
            let v = alpha_log_affinity(&p0, fam.member(i), &ps, 0.5).unwrap();
            let below = certify_element(&IndexSet::from([i]), &fam, &p0, &ps, 0.5, v * 0.99).unwrap();
            let above = certify_element(&IndexSet::from([i]), &fam, &p0, &ps, 0.5, v * 1.01).unwrap();
            assert!(below.is_certified(), "member {i}");
            assert!(!above.is_certified(), "member {i}");
        }
    }

    #[test]
    fn hull_containing_reference_is_refused_with_reference_witness() {
        let fam = grid();
        let (p0, ps) = (bern(0.5), bern(0.45));
        match certify_element(&IndexSet::from([3, 8]), &fam, &p0, &ps, 0.5, 1e-3).unwrap() {
            Certification::Refused(Refusal::Violated { witness_weights, witness_log_affinity }) => {
                assert!(witness_log_affinity < 1e-3);
                assert!(witness_weights[1] > 0.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn certify_rejects_bad_alpha_and_empty_set() {
        let fam = grid();
        let (p0, ps) = (bern(0.5), bern(0.45));
        assert!(certify_element(&IndexSet::from([0]), &fam, &p0, &ps, 1.0, 0.1).is_err());
        assert!(certify_element(&IndexSet::from([0]), &fam, &p0, &ps, 0.0, 0.1).is_err());
        assert!(certify_element(&IndexSet::new(), &fam, &p0, &ps, 0.5, 0.1).is_err());
    }

    #[test]
    fn certificate_dominates_vertices() {
        let fam = grid();
        let (p0, ps) = (bern(0.5), bern(0.45));
        let gens = IndexSet::from([0, 1, 2]);
        let e = certify_element(&gens, &fam, &p0, &ps, 0.5, 0.05).unwrap().certified().unwrap();
        for &i in &gens {
            let a = alpha_affinity(&p0, fam.member(i), &ps, 0.5).unwrap();
            assert!(e.certificate().achieved_sup >= a - 1e-15);
        }
        e.validate().unwrap();
    }

    #[test]
    fn empty_target_gives_empty_cover() {
        let fam = grid();
        let c = build_cover(&IndexSet::new(), &fam, &bern(0.5), &bern(0.45), 0.5, 0.01).unwrap();
        assert_eq!(c.n_upper_bound(), 0);
    }

    #[test]
    fn cover_fails_on_uncoverable_index() {
        let fam = grid();
        let (p0, ps) = (bern(0.5), bern(0.45));
        let v = alpha_log_affinity(&p0, fam.member(6), &ps, 0.5).unwrap();
        match build_cover(&IndexSet::from([0, 6]), &fam, &p0, &ps, 0.5, v + 1e-3) {
            Err(Error::Uncoverable { index, value, .. }) => {
                assert_eq!(index, 6);
                assert!((value - v).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn whole_hull_certifiable_gives_one_element() {
        let fam = grid();
        let (p0, ps) = (bern(0.5), bern(0.45));
        let target = IndexSet::from([0, 1, 2, 3]);
        // the full hull certifies at its own minimum, so greedy must merge all four
        let hull = hull_max_affinity(&target, &fam, &p0, &ps, 0.5).unwrap();
        let t = -hull.value.ln() * 0.999;
        assert!(certify_element(&target, &fam, &p0, &ps, 0.5, t).unwrap().is_certified());
        let c = build_cover(&target, &fam, &p0, &ps, 0.5, t).unwrap();
        assert_eq!(c.n_upper_bound(), 1);
        assert!(c.covers(&target));
    }

    #[test]
    fn cover_report_lists_labels() {
        let fam = grid();
        let (p0, ps) = (bern(0.5), bern(0.45));
        let target = build_target_set(&fam, 8, &p0, 0.1).unwrap();
        let c = build_cover(&target, &fam, &p0, &ps, 0.5, 0.0025).unwrap();
        assert!(c.covers(&target));
        let r = c.report(&fam);
        assert_eq!(r.n_upper_bound, r.elements.len());
        assert!(r.elements.iter().all(|e| e.min_log_affinity >= 0.0025));
        let _ = Prior::<f64>::uniform(9);
    }

    #[test]
    fn shell_examples() {
        let fam = grid();
        let p0 = bern(0.5);
        // every member below M·ε
        let shells = build_shells(&fam, 8, &p0, 1.0, 1.0, 3).unwrap();
        assert!(shells.iter().all(|s| s.member_indices.is_empty()));
        // member θ=0.40 at distance d ≈ 0.03622; choose M·ε = d/1.5
        let d = distances_sq(&fam, 8, &p0).unwrap()[7].sqrt();
        let shells = build_shells(&fam, 8, &p0, d / 1.5, 1.0, 3).unwrap();
        assert!(shells[0].member_indices.contains(&7));
        assert!(!shells[1].member_indices.contains(&7));
        assert!(!shells[2].member_indices.contains(&7));
        assert!(build_shells(&fam, 8, &p0, 0.0, 1.0, 3).is_err());
        assert!(build_shells(&fam, 8, &p0, 0.1, 1.0, 0).is_err());
    }
}
