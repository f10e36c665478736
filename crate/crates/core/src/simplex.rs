//! Concave maximization over the probability simplex.
//!
//! Maximizes `Φ(w) = Σ_x mass(x) · ψ(m_w(x))` where `m_w(x) = Σ_i w_i · col_i(x)`
//! and `ψ` is either `t ↦ t^α` (α ∈ (0, 1]) or `ln`. Both are concave and
//! nondecreasing, so `Φ` is concave in `w`.
//!
//! The solver is pairwise Frank-Wolfe with exact line search. Each iterate
//! carries the Frank-Wolfe duality gap `max_i ∇_i Φ − ⟨∇Φ, w⟩`, which bounds
//! `max Φ − Φ(w)` from above, so a returned gap is a certificate.

use crate::scalar::Scalar;

/// Default iteration cap for certification runs.
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Concave<T> {
    Power(T),
    Log,
}

impl<T: Scalar> Concave<T> {
    #[inline]
    fn value(self, m: T) -> T {
        match self {
            Concave::Power(a) => m.max(T::zero()).powf(a),
            Concave::Log => m.ln(),
        }
    }

    #[inline]
    fn slope(self, m: T) -> T {
        let m = m.max(T::zero());
        match self {
            Concave::Power(a) if a == T::one() => T::one(),
            Concave::Power(a) => a * m.powf(a - T::one()),
            Concave::Log => m.recip(),
        }
    }
}

/// Outcome of a simplex maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMax<T> {
    /// Maximizing weights, one per column.
    pub weights: Vec<T>,
    /// Objective at `weights`.
    pub value: T,
    /// Frank-Wolfe duality gap at `weights`; `max Φ ≤ value + gap`.
    pub gap: T,
    pub iterations: usize,
    /// Gap reached the requested tolerance before the iteration cap.
    pub converged: bool,
}

/// Maximizes `Σ_x mass(x) ψ(Σ_i w_i col_i(x))` over the simplex.
///
/// Rows with zero mass are ignored. Under `Power`, a row on which every
/// column vanishes contributes nothing and is dropped; under `Log` it makes
/// the objective `-inf` everywhere and the result reports that directly.
pub(crate) fn maximize<T: Scalar>(
    mass: &[T],
    columns: &[Vec<T>],
    psi: Concave<T>,
    tol: T,
    max_iter: usize,
) -> SimplexMax<T> {
    let k = columns.len();
    assert!(k > 0, "simplex maximization needs at least one column");

    let mut rows: Vec<usize> = Vec::with_capacity(mass.len());
    for (x, &mx) in mass.iter().enumerate() {
        if mx <= T::zero() {
            continue;
        }
        let live = columns.iter().any(|c| c[x] > T::zero());
        match (live, psi) {
            (true, _) => rows.push(x),
            (false, Concave::Power(_)) => {}
            (false, Concave::Log) => {
                return SimplexMax {
                    weights: vec![T::one() / T::from_usize(k).unwrap(); k],
                    value: T::neg_infinity(),
                    gap: T::zero(),
                    iterations: 0,
                    converged: true,
                };
            }
        }
    }
    let mass: Vec<T> = rows.iter().map(|&x| mass[x]).collect();
    let cols: Vec<Vec<T>> = columns
        .iter()
        .map(|c| rows.iter().map(|&x| c[x]).collect())
        .collect();

    let objective = |m: &[T]| -> T {
        mass.iter()
            .zip(m)
            .map(|(&mx, &mm)| mx * psi.value(mm))
            .sum()
    };

    let mut w = vec![T::one() / T::from_usize(k).unwrap(); k];
    let mut m = vec![T::zero(); rows.len()];
    let mut grad = vec![T::zero(); k];
    let mut iterations = 0;

    loop {
        mix_into(&w, &cols, &mut m);
        for (g, col) in grad.iter_mut().zip(&cols) {
            *g = mass
                .iter()
                .zip(&m)
                .zip(col)
                .filter(|(_, &c)| c != T::zero())
                .map(|((&mx, &mm), &c)| mx * psi.slope(mm) * c)
                .sum();
        }
        let inner: T = w.iter().zip(&grad).map(|(&wi, &gi)| wi * gi).sum();
        let (s, g_s) = argmax(grad.iter().copied());
        let gap = (g_s - inner).max(T::zero());

        if gap <= tol || iterations >= max_iter {
            return SimplexMax {
                value: objective(&m),
                weights: w,
                gap,
                iterations,
                converged: gap <= tol,
            };
        }
        iterations += 1;

        // away vertex: worst active column
        let a = w
            .iter()
            .zip(&grad)
            .enumerate()
            .filter(|(_, (&wi, _))| wi > T::zero())
            .min_by(|x, y| x.1 .1.partial_cmp(y.1 .1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(s);
        if a == s {
            // only s is active, hence inner == g_s; numerically unreachable
            return SimplexMax {
                value: objective(&m),
                weights: w,
                gap: T::zero(),
                iterations,
                converged: true,
            };
        }

        let dm: Vec<T> = cols[s].iter().zip(&cols[a]).map(|(&cs, &ca)| cs - ca).collect();
        let step = line_search(&mass, &m, &dm, psi, w[a]);
        if step >= w[a] {
            w[s] = w[s] + w[a];
            w[a] = T::zero();
        } else {
            w[s] = w[s] + step;
            w[a] = w[a] - step;
        }
    }
}

fn mix_into<T: Scalar>(w: &[T], cols: &[Vec<T>], out: &mut [T]) {
    out.iter_mut().for_each(|v| *v = T::zero());
    for (&wi, col) in w.iter().zip(cols) {
        if wi == T::zero() {
            continue;
        }
        for (o, &c) in out.iter_mut().zip(col) {
            *o = *o + wi * c;
        }
    }
}

fn argmax<T: Scalar>(values: impl Iterator<Item = T>) -> (usize, T) {
    values
        .enumerate()
        .fold((0, T::neg_infinity()), |best, (i, v)| if v > best.1 { (i, v) } else { best })
}

/// Maximizes the concave `γ ↦ Σ mass ψ(m + γ dm)` on `[0, gamma_max]` by
/// bisection on its (decreasing) derivative.
fn line_search<T: Scalar>(mass: &[T], m: &[T], dm: &[T], psi: Concave<T>, gamma_max: T) -> T {
    let deriv = |g: T| -> T {
        mass.iter()
            .zip(m)
            .zip(dm)
            .filter(|(_, &d)| d != T::zero())
            .map(|((&mx, &mm), &d)| mx * psi.slope(mm + g * d) * d)
            .sum()
    };
    if deriv(gamma_max) >= T::zero() {
        return gamma_max;
    }
    let (mut lo, mut hi) = (T::zero(), gamma_max);
    let two = T::lit(2.0);
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if deriv(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
