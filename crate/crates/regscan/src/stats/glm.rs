//! Regression engine for covariate-adjusted zone statistics.
//!
//! The models mirror the closed forms, with covariate columns added to
//! both the null and the alternative design. Poisson and Bernoulli fits
//! use iteratively reweighted least squares; Gaussian fits reduce to
//! (weighted) least squares, with the unknown-variance family profiling
//! the variance out of the likelihood. Without covariates the results
//! agree with the closed forms to high accuracy, which the test suite
//! pins down.

use nalgebra::{DMatrix, DVector};

use crate::data::RegionTable;
use crate::error::{Error, Result};
use crate::stats::{Approach, Family, FitReport, ModelSpec};
use crate::zones::Zone;

const MAX_ITER: usize = 100;
const TOL: f64 = 1e-10;
/// Extra full steps taken after the convergence test first passes, to
/// push boundary-case fits to the accuracy the closed forms deliver.
const POLISH_STEPS: usize = 2;
/// Clamp on the non-offset part of the linear predictor.
const ETA_CLAMP: f64 = 35.0;
/// Relative floor for a collapsed Gaussian residual sum of squares.
const VAR_FLOOR: f64 = 1e-14;

fn xlogy(c: f64, r: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * r.ln()
    }
}

/// Design matrix for the standard-link families: optional intercept,
/// one indicator column per zone, then covariates.
fn design_std(table: &RegionTable, approach: Approach, zones: &[&Zone]) -> DMatrix<f64> {
    let n = table.len();
    let pop = approach == Approach::Population;
    let k = pop as usize + zones.len() + table.covariate_count();
    let mut x = DMatrix::zeros(n, k);
    let mut col = 0;
    if pop {
        x.column_mut(col).fill(1.0);
        col += 1;
    }
    for z in zones {
        for &i in z.members() {
            x[(i, col)] = 1.0;
        }
        col += 1;
    }
    for cov in table.covariates() {
        for i in 0..n {
            x[(i, col)] = cov[i];
        }
        col += 1;
    }
    x
}

/// Design for the known-variance Gaussian family, whose mean model is
/// `baseline * (1 + alpha + theta*Z + x'beta)`: every column of the
/// standard design scaled by the baseline, with the baseline itself as
/// offset.
fn design_scaled(table: &RegionTable, approach: Approach, zones: &[&Zone]) -> DMatrix<f64> {
    let mut x = design_std(table, approach, zones);
    for i in 0..table.len() {
        let g = table.baseline()[i];
        x.row_mut(i).scale_mut(g);
    }
    x
}

/// Least squares with observation weights, solved through the SVD.
/// `check_rank` turns structural collinearity into an error; otherwise a
/// minimum-norm solution is returned.
pub(crate) fn solve_wls(
    x: &DMatrix<f64>,
    weights: Option<&[f64]>,
    target: &[f64],
    check_rank: bool,
) -> Result<DVector<f64>> {
    let k = x.ncols();
    if k == 0 {
        return Ok(DVector::zeros(0));
    }
    let n = x.nrows();
    let mut a = x.clone();
    let mut b = DVector::from_column_slice(target);
    if let Some(w) = weights {
        for i in 0..n {
            let s = w[i].sqrt();
            a.row_mut(i).scale_mut(s);
            b[i] *= s;
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * (n.max(k) as f64) * f64::EPSILON;
    if check_rank && svd.rank(eps) < k {
        return Err(Error::RankDeficient);
    }
    svd.solve(&b, eps)
        .map_err(|e| Error::Internal(format!("svd solve: {e}")))
}

fn poisson_ll(y: &[f64], eta: &[f64], mu: &[f64]) -> f64 {
    (0..y.len()).map(|i| y[i] * eta[i] - mu[i]).sum()
}

fn bernoulli_ll(y: &[f64], mu: &[f64]) -> f64 {
    (0..y.len())
        .map(|i| xlogy(y[i], mu[i]) + xlogy(1.0 - y[i], 1.0 - mu[i]))
        .sum()
}

struct IrlsFit {
    beta: DVector<f64>,
    ll: f64,
    iterations: usize,
    converged: bool,
    fitted: Vec<f64>,
}

/// Fit a Poisson (log link, offset) or Bernoulli (logit link) model by
/// iteratively reweighted least squares from a zero start, with step
/// halving and a relative log-likelihood stopping rule.
fn irls(x: &DMatrix<f64>, y: &[f64], offset: &[f64], family: Family) -> Result<IrlsFit> {
    let n = x.nrows();
    let k = x.ncols();
    let eval = |beta: &DVector<f64>| -> (Vec<f64>, Vec<f64>, f64) {
        let s = if k == 0 {
            DVector::zeros(n)
        } else {
            x * beta
        };
        let mut eta = vec![0.0; n];
        let mut mu = vec![0.0; n];
        for i in 0..n {
            let si = s[i].clamp(-ETA_CLAMP, ETA_CLAMP);
            eta[i] = offset[i] + si;
            mu[i] = match family {
                Family::Poisson => eta[i].exp(),
                Family::Bernoulli => 1.0 / (1.0 + (-eta[i]).exp()),
                _ => unreachable!("irls only handles poisson and bernoulli"),
            };
        }
        let ll = match family {
            Family::Poisson => poisson_ll(y, &eta, &mu),
            Family::Bernoulli => bernoulli_ll(y, &mu),
            _ => unreachable!(),
        };
        (eta, mu, ll)
    };

    let mut beta = DVector::zeros(k);
    let (_, mut mu, mut ll) = eval(&beta);
    if k == 0 {
        return Ok(IrlsFit {
            beta,
            ll,
            iterations: 0,
            converged: true,
            fitted: mu,
        });
    }
    let mut converged = false;
    let mut polish = 0usize;
    let mut iterations = 0usize;
    for iter in 1..=MAX_ITER {
        iterations = iter;
        let mut w = vec![0.0; n];
        let mut target = vec![0.0; n];
        let s = x * &beta;
        for i in 0..n {
            let (wi, zi) = match family {
                Family::Poisson => (mu[i], s[i] + (y[i] - mu[i]) / mu[i]),
                Family::Bernoulli => {
                    let v = (mu[i] * (1.0 - mu[i])).max(1e-10);
                    (v, s[i] + (y[i] - mu[i]) / v)
                }
                _ => unreachable!(),
            };
            w[i] = wi.max(1e-290);
            target[i] = zi;
        }
        let proposal = solve_wls(x, Some(&w), &target, iter == 1)?;
        // Step halving: back off towards the current iterate if the full
        // step reduces the likelihood.
        let mut candidate = proposal;
        let (mut c_mu, mut c_ll);
        loop {
            let (_, m, l) = eval(&candidate);
            c_mu = m;
            c_ll = l;
            let tolerance = 1e-12 * (ll.abs() + 1.0);
            if c_ll >= ll - tolerance || (&candidate - &beta).amax() < 1e-14 {
                break;
            }
            candidate = (&candidate + &beta) * 0.5;
        }
        let previous_ll = ll;
        beta = candidate;
        mu = c_mu;
        ll = c_ll;
        if converged {
            polish += 1;
            if polish >= POLISH_STEPS {
                break;
            }
        } else if (ll - previous_ll).abs() <= TOL * (ll.abs() + 0.1) {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(MAX_ITER));
    }
    Ok(IrlsFit {
        beta,
        ll,
        iterations,
        converged,
        fitted: mu,
    })
}

/// Null-model fit, computed once per dataset and shared across zones.
pub(crate) struct NullFit {
    family: Family,
    approach: Approach,
    pub ll0: f64,
    /// Fitted null means, used by the parametric bootstrap.
    pub fitted: Vec<f64>,
    /// Null residual sum of squares (weighted for the known-variance
    /// family); Gaussian families only.
    pub rss0: f64,
    /// Profiled null variance, unknown-variance family only.
    pub sigma2_0: Option<f64>,
}

impl NullFit {
    pub fn fit(table: &RegionTable, family: Family, approach: Approach) -> Result<Self> {
        super::validate_dataset(table, family, approach)?;
        let y = table.outcome();
        let n = table.len();
        let nf = n as f64;
        match family {
            Family::Poisson | Family::Bernoulli => {
                let x = design_std(table, approach, &[]);
                let offset: Vec<f64> = match family {
                    Family::Poisson => table.baseline().iter().map(|g| g.ln()).collect(),
                    _ => vec![0.0; n],
                };
                let fit = irls(&x, y, &offset, family)?;
                Ok(Self {
                    family,
                    approach,
                    ll0: fit.ll,
                    fitted: fit.fitted,
                    rss0: f64::NAN,
                    sigma2_0: None,
                })
            }
            Family::GaussUnknown => {
                let x = design_std(table, approach, &[]);
                let beta = solve_wls(&x, None, y, true)?;
                let fitted: Vec<f64> = if x.ncols() == 0 {
                    vec![0.0; n]
                } else {
                    (&x * &beta).iter().copied().collect()
                };
                let rss0: f64 = (0..n).map(|i| (y[i] - fitted[i]).powi(2)).sum();
                let sy2: f64 = y.iter().map(|v| v * v).sum();
                if rss0 <= sy2 * VAR_FLOOR + nf * f64::MIN_POSITIVE {
                    return Err(Error::DegenerateVariance);
                }
                Ok(Self {
                    family,
                    approach,
                    ll0: -(nf / 2.0) * (rss0 / nf).ln(),
                    fitted,
                    rss0,
                    sigma2_0: Some(rss0 / nf),
                })
            }
            Family::GaussFixed => {
                let x = design_scaled(table, approach, &[]);
                let weights = gauss_fixed_weights(table);
                let target: Vec<f64> = (0..n).map(|i| y[i] - table.baseline()[i]).collect();
                let beta = solve_wls(&x, Some(&weights), &target, true)?;
                let fitted: Vec<f64> = if x.ncols() == 0 {
                    table.baseline().to_vec()
                } else {
                    let xb = &x * &beta;
                    (0..n).map(|i| table.baseline()[i] + xb[i]).collect()
                };
                let rss0: f64 = (0..n)
                    .map(|i| (y[i] - fitted[i]).powi(2) * weights[i])
                    .sum();
                Ok(Self {
                    family,
                    approach,
                    ll0: -rss0 / 2.0,
                    fitted,
                    rss0,
                    sigma2_0: None,
                })
            }
        }
    }
}

fn gauss_fixed_weights(table: &RegionTable) -> Vec<f64> {
    match table.variance() {
        Some(v) => v.iter().map(|s2| 1.0 / s2).collect(),
        None => vec![1.0; table.len()],
    }
}

/// Split a fitted coefficient vector into intercept, zone effects, and
/// covariate effects.
fn split_multi(beta: &DVector<f64>, approach: Approach, zones: usize) -> (Option<f64>, Vec<f64>, Vec<f64>) {
    let pop = approach == Approach::Population;
    let alpha = pop.then(|| beta[0]);
    let first = pop as usize;
    let thetas = (first..first + zones).map(|i| beta[i]).collect();
    let covs = beta.iter().skip(first + zones).copied().collect();
    (alpha, thetas, covs)
}

fn split_coords(beta: &DVector<f64>, approach: Approach) -> (Option<f64>, f64, Vec<f64>) {
    let (alpha, thetas, covs) = split_multi(beta, approach, 1);
    (alpha, thetas[0], covs)
}

fn finish_llr(llr: f64, scale: f64) -> Result<f64> {
    let scale = scale.max(1.0);
    if llr < -1e-9 * scale {
        return Err(Error::Internal(format!(
            "negative log-likelihood ratio {llr}"
        )));
    }
    if llr.abs() <= 1e-12 * scale {
        return Ok(0.0);
    }
    Ok(llr.max(0.0))
}

/// Fit the zone alternative against a prepared null fit.
pub(crate) fn fit_zone(
    table: &RegionTable,
    spec: ModelSpec,
    null: &NullFit,
    zone: &Zone,
) -> Result<FitReport> {
    debug_assert_eq!(spec.family, null.family);
    debug_assert_eq!(spec.approach, null.approach);
    let n = table.len();
    if zone.is_empty() {
        return Err(Error::DegenerateZone("empty zone"));
    }
    if zone.len() == n && spec.approach == Approach::Population {
        return Err(Error::DegenerateZone(
            "zone covers every region; intercept and effect are confounded",
        ));
    }
    let y = table.outcome();
    let nf = n as f64;
    match spec.family {
        Family::Poisson | Family::Bernoulli => {
            let x = design_std(table, spec.approach, &[zone]);
            let offset: Vec<f64> = match spec.family {
                Family::Poisson => table.baseline().iter().map(|g| g.ln()).collect(),
                _ => vec![0.0; n],
            };
            let fit = irls(&x, y, &offset, spec.family)?;
            let (alpha, theta, beta) = split_coords(&fit.beta, spec.approach);
            Ok(FitReport {
                llr: finish_llr(fit.ll - null.ll0, null.ll0.abs())?,
                theta,
                alpha,
                beta,
                iterations: fit.iterations,
                converged: fit.converged,
            })
        }
        Family::GaussUnknown => {
            let x = design_std(table, spec.approach, &[zone]);
            let beta = solve_wls(&x, None, y, true)?;
            let xb = &x * &beta;
            let rss1: f64 = (0..n).map(|i| (y[i] - xb[i]).powi(2)).sum();
            let sy2: f64 = y.iter().map(|v| v * v).sum();
            if rss1 <= sy2 * VAR_FLOOR + nf * f64::MIN_POSITIVE {
                return Err(Error::DegenerateVariance);
            }
            let llr = (nf / 2.0) * (null.rss0 / rss1).ln();
            let (alpha, theta, covs) = split_coords(&beta, spec.approach);
            Ok(FitReport {
                llr: finish_llr(llr, nf)?,
                theta,
                alpha,
                beta: covs,
                iterations: 0,
                converged: true,
            })
        }
        Family::GaussFixed => {
            let x = design_scaled(table, spec.approach, &[zone]);
            let weights = gauss_fixed_weights(table);
            let target: Vec<f64> = (0..n).map(|i| y[i] - table.baseline()[i]).collect();
            let beta = solve_wls(&x, Some(&weights), &target, true)?;
            let xb = &x * &beta;
            let rss1: f64 = (0..n)
                .map(|i| (target[i] - xb[i]).powi(2) * weights[i])
                .sum();
            let llr = (null.rss0 - rss1) / 2.0;
            let (alpha, theta, covs) = split_coords(&beta, spec.approach);
            Ok(FitReport {
                llr: finish_llr(llr, null.rss0 / 2.0)?,
                theta,
                alpha,
                beta: covs,
                iterations: 0,
                converged: true,
            })
        }
    }
}

/// Covariate-capable log-likelihood ratio for one zone: fits the null
/// and the zone alternative by the regression engine. For scans over
/// many zones prefer [`crate::stats::Evaluator`], which fits the null
/// once.
pub fn llr_glm(
    table: &RegionTable,
    family: Family,
    approach: Approach,
    zone: &Zone,
) -> Result<FitReport> {
    let null = NullFit::fit(table, family, approach)?;
    fit_zone(table, ModelSpec::glm(family, approach), &null, zone)
}

/// Joint fit over several zone effects at once.
pub(crate) struct MultiFit {
    /// Absolute maximized log-likelihood, on constant conventions shared
    /// with the `zones = []` null fit.
    pub ll: f64,
    pub thetas: Vec<f64>,
}

/// Fit a model with one effect column per zone (plus intercept and
/// covariates as usual). Zones may overlap; non-identifiable column
/// combinations surface as [`Error::RankDeficient`]. An unknown-variance
/// fit whose residuals collapse reports an infinite likelihood rather
/// than an error, except for the null fit itself.
pub(crate) fn fit_multi(
    table: &RegionTable,
    family: Family,
    approach: Approach,
    zones: &[&Zone],
) -> Result<MultiFit> {
    super::validate_dataset(table, family, approach)?;
    let n = table.len();
    if zones.iter().any(|z| z.is_empty()) {
        return Err(Error::DegenerateZone("empty zone"));
    }
    if approach == Approach::Population && !zones.is_empty() {
        let mut covered = vec![false; n];
        for z in zones {
            for &i in z.members() {
                covered[i] = true;
            }
        }
        if covered.iter().all(|&c| c) {
            return Err(Error::DegenerateZone(
                "zones cover every region; intercept and effects are confounded",
            ));
        }
    }
    let y = table.outcome();
    let nf = n as f64;
    match family {
        Family::Poisson | Family::Bernoulli => {
            let x = design_std(table, approach, zones);
            let offset: Vec<f64> = match family {
                Family::Poisson => table.baseline().iter().map(|g| g.ln()).collect(),
                _ => vec![0.0; n],
            };
            let fit = irls(&x, y, &offset, family)?;
            let (_, thetas, _) = split_multi(&fit.beta, approach, zones.len());
            Ok(MultiFit { ll: fit.ll, thetas })
        }
        Family::GaussUnknown => {
            let x = design_std(table, approach, zones);
            let beta = solve_wls(&x, None, y, true)?;
            let fitted = &x * &beta;
            let rss: f64 = (0..n).map(|i| (y[i] - fitted[i]).powi(2)).sum();
            let sy2: f64 = y.iter().map(|v| v * v).sum();
            let (_, thetas, _) = split_multi(&beta, approach, zones.len());
            if rss <= sy2 * VAR_FLOOR + nf * f64::MIN_POSITIVE {
                if zones.is_empty() {
                    return Err(Error::DegenerateVariance);
                }
                return Ok(MultiFit {
                    ll: f64::INFINITY,
                    thetas,
                });
            }
            Ok(MultiFit {
                ll: -(nf / 2.0) * (rss / nf).ln(),
                thetas,
            })
        }
        Family::GaussFixed => {
            let x = design_scaled(table, approach, zones);
            let weights = gauss_fixed_weights(table);
            let target: Vec<f64> = (0..n).map(|i| y[i] - table.baseline()[i]).collect();
            let beta = solve_wls(&x, Some(&weights), &target, true)?;
            let fitted = &x * &beta;
            let rss: f64 = (0..n)
                .map(|i| (target[i] - fitted[i]).powi(2) * weights[i])
                .sum();
            let (_, thetas, _) = split_multi(&beta, approach, zones.len());
            Ok(MultiFit { ll: -rss / 2.0, thetas })
        }
    }
}
