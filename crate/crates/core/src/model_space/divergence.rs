//! Divergences, α-affinities and the p0/p*-weighted Hellinger distance.
//!
//! Every expectation `E₀` is an exact finite sum over the alphabet under the
//! counting measure. Terms where `p0(x) = 0` contribute nothing.

use serde::Serialize;

use super::density::{check_alphabet, FiniteDensity, IndexSet, ModelFamily, Prior};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simplex::{self, Concave};

/// Absolute tie tolerance (nats) for KL projection uniqueness.
pub const PROJECTION_TIE_TOL: f64 = 1e-10;

/// `KL(p0 ‖ p) = Σ p0 log(p0/p)` in nats; `+inf` when `p` misses the support of `p0`.
pub fn kl_divergence<T: Scalar>(p0: &FiniteDensity<T>, p: &FiniteDensity<T>) -> Result<T> {
    check_alphabet(p0.alphabet_size(), p)?;
    let mut kl = T::zero();
    for (&a, &b) in p0.probs().iter().zip(p.probs()) {
        if a == T::zero() {
            continue;
        }
        if b == T::zero() {
            return Ok(T::infinity());
        }
        kl = kl + a * (a / b).ln();
    }
    // rounding can leave a tiny negative at p = p0
    Ok(kl.max(T::zero()))
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha = {alpha} must lie in (0, 1]")))
    }
}

/// Likelihood ratios `p(x)/p*(x)` on the support of `p0`, zero elsewhere.
pub(crate) fn ratio_column<T: Scalar>(
    p0: &FiniteDensity<T>,
    p: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
) -> Result<Vec<T>> {
    check_alphabet(p0.alphabet_size(), p)?;
    check_alphabet(p0.alphabet_size(), pstar)?;
    p0.probs()
        .iter()
        .zip(p.probs())
        .zip(pstar.probs())
        .enumerate()
        .map(|(x, ((&a, &b), &s))| {
            if a == T::zero() {
                Ok(T::zero())
            } else if s == T::zero() {
                Err(Error::Domain(format!(
                    "p* vanishes at symbol {x} where p0 has mass {a}"
                )))
            } else {
                Ok(b / s)
            }
        })
        .collect()
}

/// The α-affinity `E₀(p/p*)^α`.
pub fn alpha_affinity<T: Scalar>(
    p0: &FiniteDensity<T>,
    p: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
    alpha: T,
) -> Result<T> {
    check_alpha(alpha)?;
    let ratios = ratio_column(p0, p, pstar)?;
    Ok(power_mean(p0.probs(), &ratios, alpha))
}

fn power_mean<T: Scalar>(mass: &[T], ratios: &[T], alpha: T) -> T {
    mass.iter()
        .zip(ratios)
        .filter(|(&m, _)| m > T::zero())
        .map(|(&m, &r)| if alpha == T::one() { m * r } else { m * r.powf(alpha) })
        .sum()
}

/// `-log E₀(p/p*)^α`. Accepts α ∈ (0, 1]; α = 1 is the linear endpoint.
pub fn alpha_log_affinity<T: Scalar>(
    p0: &FiniteDensity<T>,
    p: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
    alpha: T,
) -> Result<T> {
    Ok(-alpha_affinity(p0, p, pstar, alpha)?.ln())
}

/// Supremum over α of the negative log α-affinity, and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupAlpha<T> {
    pub alpha: T,
    pub value: T,
}

/// `sup_{α∈(0,1)} -log E₀(p/p*)^α`.
///
/// `α ↦ log E₀(p/p*)^α` is convex, so its negative is maximized by golden
/// section. The open interval's endpoints enter as limits: at `α → 0` the
/// affinity tends to `P₀(p > 0)`, at `α → 1` to `E₀(p/p*)`. When the supremum
/// sits at an endpoint it is reported there even though it is not attained.
pub fn sup_alpha_log_affinity<T: Scalar>(
    p0: &FiniteDensity<T>,
    p: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
) -> Result<SupAlpha<T>> {
    let ratios = ratio_column(p0, p, pstar)?;
    let mass = p0.probs();
    let f = |a: T| -> T {
        if a == T::zero() {
            let support: T = mass
                .iter()
                .zip(&ratios)
                .filter(|(&m, &r)| m > T::zero() && r > T::zero())
                .map(|(&m, _)| m)
                .sum();
            -support.ln()
        } else {
            -power_mean(mass, &ratios, a).ln()
        }
    };

    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let (mut lo, mut hi) = (T::zero(), T::one());
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    let stop = T::tol(1e-12);
    for _ in 0..200 {
        if hi - lo <= stop {
            break;
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let mid = (lo + hi) / T::lit(2.0);
    let best = [(T::zero(), f(T::zero())), (mid, f(mid)), (T::one(), f(T::one()))]
        .into_iter()
        .fold((mid, T::neg_infinity()), |b, (a, v)| if v > b.1 { (a, v) } else { b });
    Ok(SupAlpha {
        alpha: best.0,
        value: best.1,
    })
}

/// Squared generalized Hellinger distance
/// `d²(P1, P2) = ½ Σ (√p1 − √p2)² p0/p*`.
pub fn gen_hellinger_sq<T: Scalar>(
    p1: &FiniteDensity<T>,
    p2: &FiniteDensity<T>,
    p0: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
) -> Result<T> {
    let k = p0.alphabet_size();
    check_alphabet(k, p1)?;
    check_alphabet(k, p2)?;
    check_alphabet(k, pstar)?;
    let mut acc = T::zero();
    for x in 0..k {
        let w0 = p0.prob(x);
        if w0 == T::zero() {
            continue;
        }
        let s = pstar.prob(x);
        if s == T::zero() {
            return Err(Error::Domain(format!(
                "p* vanishes at symbol {x} where p0 has mass {w0}"
            )));
        }
        let diff = p1.prob(x).sqrt() - p2.prob(x).sqrt();
        acc = acc + diff * diff * w0 / s;
    }
    Ok(acc / T::lit(2.0))
}

/// The KL minimizer over a finite family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KLProjection<T> {
    pub index: usize,
    pub kl_value: T,
    pub unique: bool,
    /// Second-smallest divergence minus the smallest; `+inf` if none.
    pub runner_up_gap: T,
    /// Every index within the tie tolerance of the minimum, `index` included.
    pub tied: Vec<usize>,
}

impl<T: Scalar> KLProjection<T> {
    /// Errors unless the minimizer is unique.
    pub fn require_unique(self) -> Result<Self> {
        if self.unique {
            Ok(self)
        } else {
            Err(Error::ProjectionTie {
                indices: self.tied,
                tolerance: PROJECTION_TIE_TOL,
            })
        }
    }
}

pub fn kl_projection<T: Scalar>(
    p0: &FiniteDensity<T>,
    family: &ModelFamily<T>,
) -> Result<KLProjection<T>> {
    let kls = family
        .members()
        .iter()
        .map(|p| kl_divergence(p0, p))
        .collect::<Result<Vec<T>>>()?;
    let (index, &kl_value) = kls
        .iter()
        .enumerate()
        .fold((0, &T::infinity()), |best, (i, v)| if *v < *best.1 { (i, v) } else { best });
    if kl_value == T::infinity() {
        return Err(Error::NoProjection);
    }
    let tol = T::tol(PROJECTION_TIE_TOL);
    let tied: Vec<usize> = kls
        .iter()
        .enumerate()
        .filter(|(_, &v)| v - kl_value <= tol)
        .map(|(i, _)| i)
        .collect();
    let runner_up = kls
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != index)
        .map(|(_, &v)| v)
        .fold(T::infinity(), T::min);
    Ok(KLProjection {
        index,
        kl_value,
        unique: tied.len() == 1,
        runner_up_gap: runner_up - kl_value,
        tied,
    })
}

/// KL projection of `p0` onto the convex hull of `generators`.
#[derive(Debug, Clone, PartialEq)]
pub struct HullProjection<T> {
    pub weights: Vec<T>,
    pub density: FiniteDensity<T>,
    pub kl_value: T,
    /// Frank-Wolfe gap: `max_i E₀(g_i/p*) − 1`, so `E₀(p/p*) ≤ 1 + gap` on the hull.
    pub gap: T,
    pub converged: bool,
}

/// Minimizes `KL(p0 ‖ Σ w_i g_i)` over the simplex of mixing weights.
pub fn kl_projection_onto_hull<T: Scalar>(
    p0: &FiniteDensity<T>,
    generators: &[&FiniteDensity<T>],
    tol: T,
) -> Result<HullProjection<T>> {
    if generators.is_empty() {
        return Err(Error::EmptyFamily);
    }
    for g in generators {
        check_alphabet(p0.alphabet_size(), g)?;
    }
    let cols: Vec<Vec<T>> = generators.iter().map(|g| g.probs().to_vec()).collect();
    let sol = simplex::maximize(p0.probs(), &cols, Concave::Log, tol, 100_000);
    if sol.value == T::neg_infinity() {
        return Err(Error::NoProjection);
    }
    let density = FiniteDensity::mixture(generators, &sol.weights)?;
    let kl_value = kl_divergence(p0, &density)?;
    Ok(HullProjection {
        weights: sol.weights,
        density,
        kl_value,
        gap: sol.gap,
        converged: sol.converged,
    })
}

/// First and second moments of `log(p/p*)` under `p0`: `(-E₀ log(p/p*), E₀ log²(p/p*))`.
/// `None` when `p` vanishes somewhere on the support of `p0`.
pub fn log_ratio_moments<T: Scalar>(
    p0: &FiniteDensity<T>,
    p: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
) -> Result<Option<(T, T)>> {
    let ratios = ratio_column(p0, p, pstar)?;
    let mut m1 = T::zero();
    let mut m2 = T::zero();
    for (&w, &r) in p0.probs().iter().zip(&ratios) {
        if w == T::zero() {
            continue;
        }
        if r == T::zero() {
            return Ok(None);
        }
        let l = r.ln();
        m1 = m1 - w * l;
        m2 = m2 + w * l * l;
    }
    Ok(Some((m1, m2)))
}

/// Members of the KL neighbourhood `B(ε, P*; P₀)`.
pub fn kl_neighborhood<T: Scalar>(
    family: &ModelFamily<T>,
    p0: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
    eps: T,
) -> Result<IndexSet> {
    if !(eps > T::zero()) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    let e2 = eps * eps;
    let mut out = IndexSet::new();
    for (i, p) in family.members().iter().enumerate() {
        if let Some((m1, m2)) = log_ratio_moments(p0, p, pstar)? {
            if m1 <= e2 && m2 <= e2 {
                out.insert(i);
            }
        }
    }
    Ok(out)
}

/// Prior mass `Π(B(ε, P*; P₀))`.
pub fn kl_neighborhood_mass<T: Scalar>(
    family: &ModelFamily<T>,
    prior: &Prior<T>,
    p0: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
    eps: T,
) -> Result<T> {
    prior.check_aligned(family)?;
    Ok(prior.mass(&kl_neighborhood(family, p0, pstar, eps)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(t: f64) -> FiniteDensity<f64> {
        FiniteDensity::bernoulli(t).unwrap()
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&bern(0.5), &bern(0.5)).unwrap(), 0.0);
        // 0.5 ln(0.5/0.3) + 0.5 ln(0.5/0.7)
        assert!((kl_divergence(&bern(0.5), &bern(0.3)).unwrap() - 0.087177).abs() < 1e-6);
        let pm = FiniteDensity::point_mass(2, 0).unwrap();
        assert_eq!(kl_divergence(&bern(0.5), &pm).unwrap(), f64::INFINITY);
        // support of p0 inside support of p: finite
        assert!(kl_divergence(&pm, &bern(0.5)).unwrap().is_finite());
    }

    #[test]
    fn kl_rejects_mismatched_alphabets() {
        let u3 = FiniteDensity::<f64>::uniform(3).unwrap();
        assert!(matches!(
            kl_divergence(&bern(0.5), &u3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn affinity_examples() {
        let h = bern(0.5);
        assert_eq!(alpha_log_affinity(&h, &h, &h, 0.37).unwrap(), 0.0);
        let v = alpha_log_affinity(&h, &bern(0.3), &h, 0.5).unwrap();
        assert!((v - 0.021320).abs() < 1e-6);
        let err = alpha_log_affinity(&h, &h, &FiniteDensity::point_mass(2, 1).unwrap(), 0.5);
        assert!(matches!(err, Err(Error::Domain(_))));
        assert!(alpha_log_affinity(&h, &h, &h, 0.0).is_err());
        assert!(alpha_log_affinity(&h, &h, &h, 1.5).is_err());
    }

    #[test]
    fn affinity_ignores_symbols_outside_truth_support() {
        // p*(1) = 0 is fine where p0(1) = 0
        let p0 = FiniteDensity::point_mass(2, 0).unwrap();
        let ps = FiniteDensity::point_mass(2, 0).unwrap();
        assert_eq!(alpha_log_affinity(&p0, &bern(0.5), &ps, 0.5).unwrap(), -(0.5f64.sqrt().ln()));
    }

    #[test]
    fn sup_alpha_constant_objective_and_dominance() {
        let h = bern(0.5);
        assert_eq!(sup_alpha_log_affinity(&h, &h, &h).unwrap().value, 0.0);
        let (p0, ps, p) = (bern(0.6), bern(0.45), bern(0.2));
        let sup = sup_alpha_log_affinity(&p0, &p, &ps).unwrap();
        assert!(sup.value >= alpha_log_affinity(&p0, &p, &ps, 0.5).unwrap());
    }

    #[test]
    fn hellinger_examples() {
        let h = bern(0.5);
        assert_eq!(gen_hellinger_sq(&bern(0.3), &bern(0.3), &h, &h).unwrap(), 0.0);
        let d = gen_hellinger_sq(&bern(0.3), &bern(0.5), &h, &h).unwrap();
        assert!((d - 0.021094).abs() < 1e-6);
        let classical = 0.5 * ((0.7f64.sqrt() - 0.5f64.sqrt()).powi(2) + (0.3f64.sqrt() - 0.5f64.sqrt()).powi(2));
        assert!((d - classical).abs() < 1e-15);
        let bad = FiniteDensity::point_mass(2, 0).unwrap();
        assert!(gen_hellinger_sq(&h, &h, &h, &bad).is_err());
    }

    #[test]
    fn projection_examples() {
        let fam = ModelFamily::bernoulli_grid(&[0.2, 0.3]).unwrap();
        let r = kl_projection(&bern(0.5), &fam).unwrap();
        assert_eq!(r.index, 1);
        assert!((r.kl_value - 0.087177).abs() < 1e-6);
        assert!((r.runner_up_gap - (0.223144 - 0.087177)).abs() < 1e-6);
        assert!(r.unique);

        let sym = ModelFamily::bernoulli_grid(&[0.4, 0.6]).unwrap();
        let r = kl_projection(&bern(0.5), &sym).unwrap();
        assert!(!r.unique);
        assert_eq!(r.tied, vec![0, 1]);
        assert!(matches!(r.require_unique(), Err(Error::ProjectionTie { .. })));

        let contains = ModelFamily::bernoulli_grid(&[0.1, 0.5, 0.9]).unwrap();
        let r = kl_projection(&bern(0.5), &contains).unwrap();
        assert_eq!((r.index, r.kl_value, r.unique), (1, 0.0, true));
    }

    #[test]
    fn projection_with_all_infinite_fails() {
        let fam = ModelFamily::new(vec![
            FiniteDensity::point_mass(2, 0).unwrap(),
            FiniteDensity::point_mass(2, 0).unwrap(),
        ])
        .unwrap();
        assert_eq!(kl_projection(&bern(0.5), &fam), Err(Error::NoProjection));
    }

    #[test]
    fn projection_skips_infinite_members() {
        let fam = ModelFamily::new(vec![FiniteDensity::point_mass(2, 0).unwrap(), bern(0.2)]).unwrap();
        let r = kl_projection(&bern(0.5), &fam).unwrap();
        assert_eq!(r.index, 1);
        assert!(r.unique);
    }

    #[test]
    fn neighborhood_grid_example() {
        // moments per member by direct two-term sums; only θ = 0.45 has both ≤ 0.01
        let thetas: Vec<f64> = (1..=9).map(|k| k as f64 * 0.05).collect();
        let fam = ModelFamily::bernoulli_grid(&thetas).unwrap();
        let prior = Prior::uniform(9).unwrap();
        let (p0, ps) = (bern(0.5), bern(0.45));
        let count = thetas
            .iter()
            .filter(|&&t| {
                let l0 = ((1.0 - t) / 0.55f64).ln();
                let l1 = (t / 0.45f64).ln();
                -(0.5 * l0 + 0.5 * l1) <= 0.01 && 0.5 * l0 * l0 + 0.5 * l1 * l1 <= 0.01
            })
            .count();
        assert_eq!(count, 1);
        let m = kl_neighborhood_mass(&fam, &prior, &p0, &ps, 0.1).unwrap();
        assert!((m - count as f64 / 9.0).abs() < 1e-15);

        let wide = kl_neighborhood_mass(&fam, &prior, &p0, &ps, 10.0).unwrap();
        assert!((wide - 1.0).abs() < 1e-12);
        assert!(kl_neighborhood_mass(&fam, &prior, &p0, &ps, 0.0).is_err());
    }

    #[test]
    fn neighborhood_excludes_unbounded_members() {
        let fam = ModelFamily::new(vec![FiniteDensity::point_mass(2, 0).unwrap(), bern(0.5)]).unwrap();
        let prior = Prior::uniform(2).unwrap();
        let m = kl_neighborhood_mass(&fam, &prior, &bern(0.5), &bern(0.5), 1e6).unwrap();
        assert_eq!(m, 0.5);
    }

    #[test]
    fn hull_projection_of_interior_truth_is_exact() {
        let (a, b) = (bern(0.2), bern(0.8));
        let r = kl_projection_onto_hull(&bern(0.5), &[&a, &b], 1e-14).unwrap();
        assert!(r.converged);
        assert!(r.kl_value < 1e-12);
        // truth outside the segment: projection is the nearest endpoint
        let (c, d) = (bern(0.1), bern(0.3));
        let r = kl_projection_onto_hull(&bern(0.5), &[&c, &d], 1e-14).unwrap();
        assert!((r.density.prob(1) - 0.3).abs() < 1e-9);
    }
}
