//! Shared fixtures for the integration suite: seeded random instances
//! and an independent numeric-maximization oracle for the eight
//! closed-form zone statistics. The oracle maximizes the literal model
//! log-likelihood by golden-section search (nested for the forms with a
//! free intercept) and never touches the library's fitting code, so
//! agreement with it is evidence rather than tautology.
#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal, Poisson};

use regscan::data::RegionTable;
use regscan::stats::{Approach, Family};
use regscan::zones::Zone;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Instance {
    pub table: RegionTable,
    pub zone: Zone,
}

/// Random instance for one statistic: 3..=30 regions, continuous
/// baselines, outcomes drawn with real dispersion around the null.
/// Population-based Bernoulli instances are redrawn until the outcome
/// labels are mixed, which the statistic requires.
pub fn random_instance(rng: &mut ChaCha8Rng, family: Family, approach: Approach) -> Instance {
    let n = rng.random_range(3..=30usize);
    loop {
        let table = random_table(rng, n, family);
        if family == Family::Bernoulli && approach == Approach::Population {
            let s: f64 = table.outcome().iter().sum();
            if !(s > 0.0 && s < n as f64) {
                continue;
            }
        }
        let zone = random_zone(rng, n, approach);
        return Instance { table, zone };
    }
}

pub fn random_table(rng: &mut ChaCha8Rng, n: usize, family: Family) -> RegionTable {
    let ids = (0..n).map(|i| format!("r{i}")).collect::<Vec<_>>();
    let coords: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)])
        .collect();
    let baseline: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let outcome = random_outcome(rng, &baseline, family);
    let mut table = RegionTable::new(ids, coords, outcome)
        .unwrap()
        .with_baseline(baseline)
        .unwrap();
    if family == Family::GaussFixed && rng.random_bool(0.5) {
        let var: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        table = table.with_variance(var).unwrap();
    }
    table
}

fn random_outcome(rng: &mut ChaCha8Rng, baseline: &[f64], family: Family) -> Vec<f64> {
    let n = baseline.len();
    match family {
        // Redraw all-zero count vectors: every count statistic needs at
        // least one event somewhere.
        Family::Poisson => loop {
            let bump: Normal<f64> = Normal::new(0.0, 0.5).unwrap();
            let y: Vec<f64> = baseline
                .iter()
                .map(|&b| Poisson::new(b * bump.sample(rng).exp()).unwrap().sample(rng))
                .collect();
            if y.iter().sum::<f64>() > 0.0 {
                return y;
            }
        },
        Family::Bernoulli => {
            let coin = Bernoulli::new(rng.random_range(0.2..0.8)).unwrap();
            (0..n)
                .map(|_| if coin.sample(rng) { 1.0 } else { 0.0 })
                .collect()
        }
        Family::GaussFixed => {
            let noise = Normal::new(0.0, 0.5).unwrap();
            baseline.iter().map(|&b| b * (1.0 + noise.sample(rng))).collect()
        }
        Family::GaussUnknown => {
            let noise = Normal::new(1.0, 1.0).unwrap();
            (0..n).map(|_| noise.sample(rng)).collect()
        }
    }
}

/// Random non-empty zone; proper subset when the statistic carries an
/// intercept, since the all-regions zone is then rank deficient.
pub fn random_zone(rng: &mut ChaCha8Rng, n: usize, approach: Approach) -> Zone {
    let cap = match approach {
        Approach::Population => n - 1,
        Approach::Expectation => n,
    };
    let m = rng.random_range(1..=cap);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.truncate(m);
    Zone::new(idx).unwrap()
}

/// Golden-section maximum of a concave function on `[lo, hi]`.
/// 160 bisections shrink the bracket far below f64 resolution.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..160 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Two-parameter maximum by nesting golden sections: the outer search in
/// `t` evaluates the inner profile maximum over `a`. Both log-likelihood
/// surfaces here are concave, so partial maximization stays unimodal.
fn nested_max(f: impl Fn(f64, f64) -> f64, a_bounds: (f64, f64), t_bounds: (f64, f64)) -> f64 {
    let profile = |t: f64| golden_max(|a| f(a, t), a_bounds.0, a_bounds.1).1;
    golden_max(profile, t_bounds.0, t_bounds.1).1
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn poisson_ll(y: &[f64], b: &[f64], z: &[bool], alpha: f64, theta: f64) -> f64 {
    y.iter()
        .zip(b)
        .zip(z)
        .map(|((&yi, &bi), &zi)| {
            let mu = bi * (alpha + if zi { theta } else { 0.0 }).exp();
            if yi > 0.0 { yi * mu.ln() - mu } else { -mu }
        })
        .sum()
}

fn bernoulli_ll(y: &[f64], z: &[bool], alpha: f64, theta: f64) -> f64 {
    y.iter()
        .zip(z)
        .map(|(&yi, &zi)| {
            let eta = alpha + if zi { theta } else { 0.0 };
            yi * eta - softplus(eta)
        })
        .sum()
}

fn gauss_fixed_ll(y: &[f64], b: &[f64], w: &[f64], z: &[bool], alpha: f64, theta: f64) -> f64 {
    y.iter()
        .zip(b)
        .zip(w)
        .zip(z)
        .map(|(((&yi, &bi), &wi), &zi)| {
            let mu = bi * (1.0 + alpha + if zi { theta } else { 0.0 });
            -0.5 * wi * (yi - mu) * (yi - mu)
        })
        .sum()
}

fn rss(y: &[f64], z: &[bool], alpha: f64, theta: f64) -> f64 {
    y.iter()
        .zip(z)
        .map(|(&yi, &zi)| {
            let r = yi - alpha - if zi { theta } else { 0.0 };
            r * r
        })
        .sum()
}

/// Independent oracle for the log-likelihood ratio of one zone: direct
/// numeric maximization of each model's log-likelihood. Unknown-variance
/// Gaussian forms profile the variance analytically, which turns the
/// ratio into `(N/2) ln(RSS0/RSS1)` with both sums minimized numerically.
pub fn oracle_llr(table: &RegionTable, family: Family, approach: Approach, zone: &Zone) -> f64 {
    let y = table.outcome();
    let b = table.baseline();
    let n = y.len();
    let z = zone.indicator(n);
    let w: Vec<f64> = match table.variance() {
        Some(v) => v.iter().map(|&s| 1.0 / s).collect(),
        None => vec![1.0; n],
    };
    match (family, approach) {
        (Family::Poisson, Approach::Expectation) => {
            let ll = |t: f64| poisson_ll(y, b, &z, 0.0, t);
            golden_max(ll, -45.0, 45.0).1 - ll(0.0)
        }
        (Family::Poisson, Approach::Population) => {
            let ll = |a: f64, t: f64| poisson_ll(y, b, &z, a, t);
            nested_max(ll, (-60.0, 60.0), (-45.0, 45.0))
                - golden_max(|a| ll(a, 0.0), -60.0, 60.0).1
        }
        (Family::Bernoulli, Approach::Expectation) => {
            let ll = |t: f64| bernoulli_ll(y, &z, 0.0, t);
            golden_max(ll, -45.0, 45.0).1 - ll(0.0)
        }
        (Family::Bernoulli, Approach::Population) => {
            let ll = |a: f64, t: f64| bernoulli_ll(y, &z, a, t);
            nested_max(ll, (-45.0, 45.0), (-45.0, 45.0))
                - golden_max(|a| ll(a, 0.0), -45.0, 45.0).1
        }
        (Family::GaussFixed, Approach::Expectation) => {
            let ll = |t: f64| gauss_fixed_ll(y, b, &w, &z, 0.0, t);
            golden_max(ll, -1e4, 1e4).1 - ll(0.0)
        }
        (Family::GaussFixed, Approach::Population) => {
            let ll = |a: f64, t: f64| gauss_fixed_ll(y, b, &w, &z, a, t);
            nested_max(ll, (-1e4, 1e4), (-1e4, 1e4))
                - golden_max(|a| ll(a, 0.0), -1e4, 1e4).1
        }
        (Family::GaussUnknown, Approach::Expectation) => {
            let rss1 = -golden_max(|t| -rss(y, &z, 0.0, t), -1e3, 1e3).1;
            let rss0 = rss(y, &z, 0.0, 0.0);
            if rss1 <= 0.0 {
                return f64::INFINITY;
            }
            0.5 * n as f64 * (rss0 / rss1).ln()
        }
        (Family::GaussUnknown, Approach::Population) => {
            let neg = |a: f64, t: f64| -rss(y, &z, a, t);
            let rss1 = -nested_max(neg, (-1e3, 1e3), (-1e3, 1e3));
            let rss0 = -golden_max(|a| neg(a, 0.0), -1e3, 1e3).1;
            if rss1 <= 0.0 {
                return f64::INFINITY;
            }
            0.5 * n as f64 * (rss0 / rss1).ln()
        }
    }
}
