//! Monte Carlo hypothesis testing for the most likely cluster.
//!
//! The maximum log-likelihood ratio has no usable closed-form null
//! distribution, so significance comes from rank: generate `R` datasets
//! under the fitted null, rescan each with the same zones and model, and
//! report `p = (1 + #{r : T_r >= T_obs}) / (R + 1)`.
//!
//! Null generation follows each model's own null:
//!
//! * Poisson population: the observed total (rounded) redistributed over
//!   regions as a multinomial with probabilities proportional to the
//!   baselines, conditioning on the total.
//! * Poisson expectation: independent `Poisson(gamma_i)`.
//! * Bernoulli population: a permutation of the observed labels.
//! * Bernoulli expectation: independent fair coins.
//! * Known-variance Gaussian: `N(gamma_i * level, sigma_i^2)` with the
//!   fitted null level (population) or `N(gamma_i, sigma_i^2)`
//!   (expectation).
//! * Unknown-variance Gaussian: `N(ybar, s^2)` with the null maximum
//!   likelihood variance (population) or `N(0, sum(y^2)/N)`
//!   (expectation).
//! * Any GLM-engine model: a parametric bootstrap from the fitted null
//!   regression, so covariate structure survives into the replicates.
//!
//! Each replicate draws from its own counter-based RNG stream keyed by
//! the replicate index, making results identical at any thread count.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::RegionTable;
use crate::error::{Error, Result};
use crate::scan::{scan, ScanOptions};
use crate::stats::{Approach, Engine, Family, ModelSpec, NullFit};
use crate::zones::ZoneSet;

/// Monte Carlo test outcome.
#[derive(Debug, Clone, Serialize)]
pub struct McResult {
    /// Rank-based p-value in `(0, 1]`.
    pub p_value: f64,
    pub replicates: usize,
    /// Max log-likelihood ratio of each replicate scan, in replicate
    /// order.
    pub replicate_max_llr: Vec<f64>,
    pub observed_max_llr: f64,
    pub seed: u64,
}

enum Kind {
    /// Multinomial redistribution of a fixed total over the baselines.
    MultinomialTotal,
    /// Independent Poisson draws around per-region means.
    PoissonMeans,
    /// Permutation of the observed labels.
    PermuteLabels,
    /// Independent fair coins.
    FairCoin,
    /// Independent Bernoulli draws around per-region probabilities.
    BernoulliMeans,
    /// Independent normal draws around per-region means.
    NormalMeans,
}

/// Everything a replicate needs, computed once from the observed data.
struct Prep {
    kind: Kind,
    total: u64,
    means: Vec<f64>,
    sds: Vec<f64>,
}

fn sigmas(table: &RegionTable) -> Vec<f64> {
    table
        .variance()
        .map(|v| v.iter().map(|s2| s2.sqrt()).collect())
        .unwrap_or_else(|| vec![1.0; table.len()])
}

fn prepare(table: &RegionTable, spec: ModelSpec) -> Result<Prep> {
    let y = table.outcome();
    let n = table.len();
    let nf = n as f64;
    let mut prep = Prep {
        kind: Kind::FairCoin,
        total: 0,
        means: Vec::new(),
        sds: Vec::new(),
    };
    if spec.engine == Engine::Glm {
        let null = NullFit::fit(table, spec.family, spec.approach)?;
        prep.means = null.fitted.clone();
        prep.kind = match spec.family {
            Family::Poisson => Kind::PoissonMeans,
            Family::Bernoulli => Kind::BernoulliMeans,
            Family::GaussFixed => {
                prep.sds = sigmas(table);
                Kind::NormalMeans
            }
            Family::GaussUnknown => {
                let sd = null.sigma2_0.expect("unknown-variance null").sqrt();
                prep.sds = vec![sd; n];
                Kind::NormalMeans
            }
        };
        return Ok(prep);
    }
    prep.kind = match (spec.family, spec.approach) {
        (Family::Poisson, Approach::Population) => {
            prep.total = y.iter().sum::<f64>().round().max(0.0) as u64;
            Kind::MultinomialTotal
        }
        (Family::Poisson, Approach::Expectation) => {
            prep.means = table.baseline().to_vec();
            Kind::PoissonMeans
        }
        (Family::Bernoulli, Approach::Population) => Kind::PermuteLabels,
        (Family::Bernoulli, Approach::Expectation) => Kind::FairCoin,
        (Family::GaussFixed, approach) => {
            let s2: Vec<f64> = table
                .variance()
                .map(<[f64]>::to_vec)
                .unwrap_or_else(|| vec![1.0; n]);
            let level = match approach {
                Approach::Expectation => 1.0,
                Approach::Population => {
                    let a: f64 = (0..n).map(|i| y[i] * table.baseline()[i] / s2[i]).sum();
                    let b: f64 = (0..n)
                        .map(|i| table.baseline()[i].powi(2) / s2[i])
                        .sum();
                    a / b
                }
            };
            prep.means = table.baseline().iter().map(|g| g * level).collect();
            prep.sds = sigmas(table);
            Kind::NormalMeans
        }
        (Family::GaussUnknown, Approach::Population) => {
            let ybar = y.iter().sum::<f64>() / nf;
            let s2 = y.iter().map(|v| (v - ybar).powi(2)).sum::<f64>() / nf;
            prep.means = vec![ybar; n];
            prep.sds = vec![s2.sqrt(); n];
            Kind::NormalMeans
        }
        (Family::GaussUnknown, Approach::Expectation) => {
            let s2 = y.iter().map(|v| v * v).sum::<f64>() / nf;
            prep.means = vec![0.0; n];
            prep.sds = vec![s2.sqrt(); n];
            Kind::NormalMeans
        }
    };
    Ok(prep)
}

/// Sequential binomial splitting of a multinomial draw.
fn multinomial(rng: &mut ChaCha8Rng, total: u64, weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    let mut out = vec![0.0; n];
    let mut remaining = total;
    let mut rest: f64 = weights.iter().sum();
    for i in 0..n {
        if remaining == 0 {
            break;
        }
        if i == n - 1 {
            out[i] = remaining as f64;
            break;
        }
        let p = (weights[i] / rest).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, p)
            .expect("clamped probability")
            .sample(rng);
        out[i] = k as f64;
        remaining -= k;
        rest -= weights[i];
    }
    out
}

fn null_outcome(table: &RegionTable, prep: &Prep, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = table.len();
    match prep.kind {
        Kind::MultinomialTotal => multinomial(rng, prep.total, table.baseline()),
        Kind::PoissonMeans => prep
            .means
            .iter()
            .map(|&m| {
                Poisson::new(m)
                    .expect("positive mean")
                    .sample(rng)
            })
            .collect(),
        Kind::PermuteLabels => {
            let mut y = table.outcome().to_vec();
            y.shuffle(rng);
            y
        }
        Kind::FairCoin => (0..n).map(|_| f64::from(rng.random_bool(0.5))).collect(),
        Kind::BernoulliMeans => prep
            .means
            .iter()
            .map(|&p| f64::from(rng.random_bool(p.clamp(0.0, 1.0))))
            .collect(),
        Kind::NormalMeans => (0..n)
            .map(|i| {
                Normal::new(prep.means[i], prep.sds[i])
                    .expect("non-negative deviation")
                    .sample(rng)
            })
            .collect(),
    }
}

/// Monte Carlo p-value for the most likely cluster.
///
/// Scans the observed data, generates `replicates` null datasets, scans
/// each with the same zones, model and options, and ranks the observed
/// maximum among the replicate maxima. Deterministic for a fixed seed
/// regardless of thread count.
pub fn mc_test(
    table: &RegionTable,
    zones: &ZoneSet,
    spec: ModelSpec,
    options: &ScanOptions,
    replicates: usize,
    seed: u64,
) -> Result<McResult> {
    if replicates == 0 {
        return Err(Error::InvalidConfig("need at least one replicate".into()));
    }
    let observed = scan(table, zones, spec, options)?;
    if observed.mlc_id == 0 {
        return Err(Error::DegenerateOutcome(
            "observed scan found no cluster to test",
        ));
    }
    let observed_max_llr = observed.mlc_llr();
    let prep = prepare(table, spec)?;
    let maxima: Vec<Result<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1 + r as u64);
            let outcome = null_outcome(table, &prep, &mut rng);
            let replicate = table.with_outcome(outcome)?;
            Ok(scan(&replicate, zones, spec, options)?.mlc_llr())
        })
        .collect();
    let mut replicate_max_llr = Vec::with_capacity(replicates);
    for m in maxima {
        replicate_max_llr.push(m?);
    }
    let exceed = replicate_max_llr
        .iter()
        .filter(|&&t| t >= observed_max_llr)
        .count();
    Ok(McResult {
        p_value: (1 + exceed) as f64 / (replicates + 1) as f64,
        replicates,
        replicate_max_llr,
        observed_max_llr,
        seed,
    })
}
