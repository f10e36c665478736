mod common;

use approx::assert_abs_diff_eq;
use common::*;
use misrate_core::covering::{build_target_set, distances_sq};
use misrate_core::model_space::{
    alpha_log_affinity, gen_hellinger_sq, kl_divergence, kl_neighborhood, kl_neighborhood_mass, kl_projection,
    log_ratio_moments, FiniteDensity, ModelFamily, Prior,
};
use misrate_core::posterior::PosteriorModel;
use misrate_core::verify::exact_power_expectation;
use misrate_core::IndexSet;
use rand::Rng;

fn bern(t: f64) -> FiniteDensity<f64> {
    FiniteDensity::bernoulli(t).unwrap()
}

fn grid() -> ModelFamily<f64> {
    let thetas: Vec<f64> = (1..=9).map(|k| k as f64 * 0.05).collect();
    ModelFamily::bernoulli_grid(&thetas).unwrap()
}

#[test]
fn bernoulli_divergences_match_hand_values() {
    assert_abs_diff_eq!(kl_divergence(&bern(0.5), &bern(0.3)).unwrap(), 0.0871767, epsilon = 1e-7);
    assert_abs_diff_eq!(kl_divergence(&bern(0.5), &bern(0.2)).unwrap(), 0.2231436, epsilon = 1e-7);
    // truth and reference both Bern(0.5): d² is the classical Hellinger value
    let (p0, p) = (bern(0.5), bern(0.3));
    assert_abs_diff_eq!(alpha_log_affinity(&p0, &p, &p0, 0.5).unwrap(), 0.0213193, epsilon = 1e-7);
    assert_abs_diff_eq!(gen_hellinger_sq(&p, &p0, &p0, &p0).unwrap(), 0.0210937, epsilon = 1e-7);
}

#[test]
fn bernoulli_grid_distances_and_affinities() {
    // θ, d(P_θ, P*), -log E₀(p/p*)^{1/2} with truth 0.5 and p* = 0.45
    let table = [
        (0.05, 0.3685, 0.1938),
        (0.10, 0.2989, 0.1332),
        (0.15, 0.2438, 0.0940),
        (0.20, 0.1959, 0.0658),
        (0.25, 0.1525, 0.0444),
        (0.30, 0.1119, 0.0281),
        (0.35, 0.0734, 0.0156),
        (0.40, 0.0362, 0.0064),
    ];
    let fam = grid();
    let p0 = bern(0.5);
    let proj = kl_projection(&p0, &fam).unwrap();
    assert_eq!(proj.index, 8);
    let ps = fam.member(8);
    let d2 = distances_sq(&fam, 8, &p0).unwrap();
    for (i, &(t, d, a)) in table.iter().enumerate() {
        assert_abs_diff_eq!(d2[i].sqrt(), d, epsilon = 1e-4);
        assert_abs_diff_eq!(alpha_log_affinity(&p0, &bern(t), ps, 0.5).unwrap(), a, epsilon = 1e-4);
    }
    let (m1, m2) = log_ratio_moments(&p0, fam.member(7), ps).unwrap().unwrap();
    assert_abs_diff_eq!(m1, 0.01539, epsilon = 1e-5);
    assert_abs_diff_eq!(m2, 0.01072, epsilon = 1e-5);
    assert_eq!(kl_neighborhood(&fam, &p0, ps, 0.1).unwrap(), IndexSet::from([8]));
    let prior = Prior::uniform(9).unwrap();
    assert_abs_diff_eq!(kl_neighborhood_mass(&fam, &prior, &p0, ps, 0.1).unwrap(), 1.0 / 9.0, epsilon = 1e-15);
    assert_eq!(build_target_set(&fam, 8, &p0, 0.1).unwrap(), (0..6).collect::<IndexSet>());
    assert_eq!(build_target_set(&fam, 8, &p0, 0.05).unwrap(), (0..7).collect::<IndexSet>());
}

/// `E₀(∫_A R_n dΠ)^α` by walking every sequence in plain products.
fn brute_force_power(members: &[Vec<f64>], prior: &[f64], p0: &[f64], pstar: &[f64], a: &IndexSet, alpha: f64, n: usize) -> f64 {
    let k = p0.len();
    let mut total = 0.0;
    for code in 0..k.pow(n as u32) {
        let mut c = code;
        let mut prob = 1.0;
        let mut ratios: Vec<f64> = vec![1.0; members.len()];
        for _ in 0..n {
            let x = c % k;
            c /= k;
            prob *= p0[x];
            for (i, p) in members.iter().enumerate() {
                ratios[i] *= p[x] / pstar[x];
            }
        }
        let l: f64 = a.iter().map(|&i| prior[i] * ratios[i]).sum();
        total += prob * l.powf(alpha);
    }
    total
}

#[test]
fn exact_enumeration_matches_brute_force() {
    let mut r = rng(41);
    for case in 0..30 {
        let k = r.random_range(2..=3);
        let m = r.random_range(1..=5);
        let fam = random_family(&mut r, k, m, 0.0);
        let prior = random_prior(&mut r, m);
        let p0 = random_density(&mut r, k, 0.0);
        let model = PosteriorModel::new(&fam, &prior, 0).unwrap();
        let a: IndexSet = (0..m).filter(|_| r.random::<bool>()).collect();
        let alpha = r.random_range(0.05..=1.0);
        let n = r.random_range(0..=7);
        let members: Vec<Vec<f64>> = fam.members().iter().map(|p| p.probs().to_vec()).collect();
        let want = brute_force_power(&members, prior.weights(), p0.probs(), &members[0], &a, alpha, n);
        let got = exact_power_expectation(&model, &p0, &a, alpha, n).unwrap();
        assert!((got - want).abs() <= 1e-12 * (1.0 + want), "case {case}: {got} vs {want}");
    }
}

#[test]
fn exact_enumeration_agrees_with_monte_carlo() {
    let fam = ModelFamily::new(vec![
        FiniteDensity::new(vec![0.2, 0.5, 0.3]).unwrap(),
        FiniteDensity::new(vec![0.6, 0.1, 0.3]).unwrap(),
        FiniteDensity::new(vec![0.3, 0.3, 0.4]).unwrap(),
    ])
    .unwrap();
    let prior = Prior::new(vec![0.3, 0.3, 0.4]).unwrap();
    let p0 = FiniteDensity::new(vec![0.25, 0.35, 0.4]).unwrap();
    let model = PosteriorModel::new(&fam, &prior, 2).unwrap();
    let a = IndexSet::from([0, 1]);
    let (alpha, n) = (0.5, 6);
    let exact = exact_power_expectation(&model, &p0, &a, alpha, n).unwrap();

    let pstar = fam.member(2).probs();
    let cdf: Vec<f64> = p0.probs().iter().scan(0.0, |s, &p| { *s += p; Some(*s) }).collect();
    let mut r = rng(97);
    let samples = 1_000_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let mut ratios = [1.0f64; 2];
        for _ in 0..n {
            let u: f64 = r.random();
            let x = cdf.iter().position(|&c| u < c).unwrap_or(2);
            for (i, ratio) in ratios.iter_mut().enumerate() {
                *ratio *= fam.member(i).probs()[x] / pstar[x];
            }
        }
        let v = (0.3 * ratios[0] + 0.3 * ratios[1]).powf(alpha);
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / samples as f64;
    let se = ((sum_sq / samples as f64 - mean * mean) / samples as f64).sqrt();
    assert!((mean - exact).abs() <= 3.0 * se, "exact {exact}, MC {mean} ± {se}");
}
