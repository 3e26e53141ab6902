//! Closed-form log-likelihood ratios for covariate-free models.
//!
//! Each statistic compares the best fit with a zone effect against the
//! best fit without one. Population-based forms fit a free intercept, so
//! they need a non-empty outside and reject the all-regions zone;
//! expectation-based forms have no intercept and accept any non-empty
//! zone. Throughout, `0 * ln 0` is taken as 0, and zone effects on the
//! boundary of the parameter space may be reported as infinite while the
//! ratio itself stays finite.
//!
//! Public functions take parallel slices plus a boolean zone indicator;
//! `pub(crate)` `*_totals` variants work from sufficient statistics and
//! back the scan evaluator, which precomputes whole-table totals once.

use crate::error::{Error, Result};
use crate::stats::FitReport;

/// `c * ln(r)` with the `0 * ln 0 = 0` convention.
fn xlogy(c: f64, r: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * r.ln()
    }
}

/// Absorb floating-point noise around zero and reject genuinely negative
/// ratios, which would indicate an internal inconsistency: the
/// alternative nests the null, so the true ratio is non-negative.
fn clamp_llr(llr: f64, scale: f64) -> Result<f64> {
    let scale = scale.max(1.0);
    if llr.abs() <= 1e-12 * scale {
        return Ok(0.0);
    }
    if llr < -1e-9 * scale {
        return Err(Error::Internal(format!(
            "negative log-likelihood ratio {llr}"
        )));
    }
    Ok(llr.max(0.0))
}

fn check_lengths(y: &[f64], z: &[bool]) -> Result<()> {
    if y.len() != z.len() || y.is_empty() {
        return Err(Error::InvalidData(
            "outcome and zone indicator must have equal non-zero length".into(),
        ));
    }
    Ok(())
}

fn check_zone(z: &[bool], population: bool) -> Result<()> {
    let n_in = z.iter().filter(|&&b| b).count();
    if n_in == 0 {
        return Err(Error::DegenerateZone("empty zone"));
    }
    if population && n_in == z.len() {
        return Err(Error::DegenerateZone(
            "zone covers every region; intercept and effect are confounded",
        ));
    }
    Ok(())
}

fn check_baseline(baseline: &[f64], n: usize) -> Result<()> {
    if baseline.len() != n {
        return Err(Error::InvalidData("baseline length mismatch".into()));
    }
    for (i, &b) in baseline.iter().enumerate() {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::NonPositiveBaseline { row: i + 1 });
        }
    }
    Ok(())
}

fn check_variance(sigma2: &[f64], n: usize) -> Result<()> {
    if sigma2.len() != n {
        return Err(Error::InvalidData("variance length mismatch".into()));
    }
    for (i, &v) in sigma2.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveVariance { row: i + 1 });
        }
    }
    Ok(())
}

fn check_counts(y: &[f64]) -> Result<()> {
    for (i, &v) in y.iter().enumerate() {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidData(format!(
                "negative outcome for a count model, row {}",
                i + 1
            )));
        }
    }
    Ok(())
}

fn check_binary(y: &[f64]) -> Result<()> {
    for (i, &v) in y.iter().enumerate() {
        if v != 0.0 && v != 1.0 {
            return Err(Error::InvalidData(format!(
                "outcome must be 0 or 1, row {}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Relative floor below which a fitted residual variance counts as
/// collapsed; such zones carry an infinite ratio and are reported as
/// [`Error::DegenerateVariance`] so callers can flag them.
const VAR_FLOOR: f64 = 1e-14;

// ---------------------------------------------------------------------
// Poisson
// ---------------------------------------------------------------------

/// Poisson counts against baselines, population-based: the null scales
/// all baselines by a common fitted factor, the alternative scales the
/// zone by an extra factor.
pub fn llr_poisson_pop(y: &[f64], baseline: &[f64], z: &[bool]) -> Result<FitReport> {
    check_lengths(y, z)?;
    check_counts(y)?;
    check_baseline(baseline, y.len())?;
    check_zone(z, true)?;
    let (mut c_in, mut b_in) = (0.0, 0.0);
    for i in 0..y.len() {
        if z[i] {
            c_in += y[i];
            b_in += baseline[i];
        }
    }
    poisson_pop_totals(c_in, b_in, y.iter().sum(), baseline.iter().sum())
}

pub(crate) fn poisson_pop_totals(c_in: f64, b_in: f64, c: f64, b: f64) -> Result<FitReport> {
    if c <= 0.0 {
        return Err(Error::ZeroTotal);
    }
    let c_out = (c - c_in).max(0.0);
    let b_out = b - b_in;
    let llr = xlogy(c_in, c_in / b_in) + xlogy(c_out, c_out / b_out) - xlogy(c, c / b);
    let rate_in = (c_in / b_in).ln();
    let rate_out = (c_out / b_out).ln();
    Ok(FitReport::closed(
        clamp_llr(llr, c)?,
        rate_in - rate_out,
        Some(rate_out),
    ))
}

/// Poisson counts against baselines, expectation-based: the null is the
/// baselines themselves, the alternative scales the zone.
pub fn llr_poisson_exp(y: &[f64], baseline: &[f64], z: &[bool]) -> Result<FitReport> {
    check_lengths(y, z)?;
    check_counts(y)?;
    check_baseline(baseline, y.len())?;
    check_zone(z, false)?;
    let (mut c_in, mut b_in) = (0.0, 0.0);
    for i in 0..y.len() {
        if z[i] {
            c_in += y[i];
            b_in += baseline[i];
        }
    }
    Ok(poisson_exp_totals(c_in, b_in))
}

pub(crate) fn poisson_exp_totals(c_in: f64, b_in: f64) -> FitReport {
    let llr = (xlogy(c_in, c_in / b_in) + b_in - c_in).max(0.0);
    FitReport::closed(llr, (c_in / b_in).ln(), None)
}

// ---------------------------------------------------------------------
// Gaussian, known variances
// ---------------------------------------------------------------------

/// Gaussian outcomes with known variances, population-based: means are
/// `baseline * (1 + alpha)` outside and `baseline * (1 + alpha + theta)`
/// inside the zone.
pub fn llr_gauss_fixed_pop(
    y: &[f64],
    baseline: &[f64],
    sigma2: &[f64],
    z: &[bool],
) -> Result<FitReport> {
    check_lengths(y, z)?;
    check_baseline(baseline, y.len())?;
    check_variance(sigma2, y.len())?;
    check_zone(z, true)?;
    let (mut a_in, mut b_in, mut a, mut b) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..y.len() {
        let ai = y[i] * baseline[i] / sigma2[i];
        let bi = baseline[i] * baseline[i] / sigma2[i];
        a += ai;
        b += bi;
        if z[i] {
            a_in += ai;
            b_in += bi;
        }
    }
    gauss_fixed_pop_totals(a_in, b_in, a, b)
}

pub(crate) fn gauss_fixed_pop_totals(a_in: f64, b_in: f64, a: f64, b: f64) -> Result<FitReport> {
    let a_out = a - a_in;
    let b_out = b - b_in;
    let llr = a_in * a_in / (2.0 * b_in) + a_out * a_out / (2.0 * b_out) - a * a / (2.0 * b);
    let scale_in = a_in / b_in;
    let scale_out = a_out / b_out;
    Ok(FitReport::closed(
        clamp_llr(llr, a * a / (2.0 * b))?,
        scale_in - scale_out,
        Some(scale_out - 1.0),
    ))
}

/// Gaussian outcomes with known variances, expectation-based: the null
/// mean is the baseline itself; the zone scales it by `1 + theta`.
pub fn llr_gauss_fixed_exp(
    y: &[f64],
    baseline: &[f64],
    sigma2: &[f64],
    z: &[bool],
) -> Result<FitReport> {
    check_lengths(y, z)?;
    check_baseline(baseline, y.len())?;
    check_variance(sigma2, y.len())?;
    check_zone(z, false)?;
    let (mut a_in, mut b_in) = (0.0, 0.0);
    for i in 0..y.len() {
        if z[i] {
            a_in += y[i] * baseline[i] / sigma2[i];
            b_in += baseline[i] * baseline[i] / sigma2[i];
        }
    }
    Ok(gauss_fixed_exp_totals(a_in, b_in))
}

pub(crate) fn gauss_fixed_exp_totals(a_in: f64, b_in: f64) -> FitReport {
    let dev = a_in - b_in;
    FitReport::closed(dev * dev / (2.0 * b_in), a_in / b_in - 1.0, None)
}

// ---------------------------------------------------------------------
// Gaussian, common unknown variance
// ---------------------------------------------------------------------

/// Gaussian outcomes with a common unknown variance, population-based:
/// constant mean outside, shifted mean inside, variance profiled out of
/// both models. Requires at least 3 observations. A collapsed residual
/// variance (the zone separates the data perfectly) is reported as
/// [`Error::DegenerateVariance`], standing in for an infinite ratio.
pub fn llr_gauss_unknown_pop(y: &[f64], z: &[bool]) -> Result<FitReport> {
    check_lengths(y, z)?;
    check_zone(z, true)?;
    if y.len() < 3 {
        return Err(Error::InvalidData(
            "unknown-variance statistic needs at least 3 regions".into(),
        ));
    }
    let n = y.len();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let mut sw2 = 0.0;
    let mut w_in = 0.0;
    let mut n_in = 0usize;
    for i in 0..n {
        let w = y[i] - ybar;
        sw2 += w * w;
        if z[i] {
            w_in += w;
            n_in += 1;
        }
    }
    gauss_unknown_pop_totals(w_in, n_in, sw2, ybar, n)
}

pub(crate) fn gauss_unknown_pop_totals(
    w_in: f64,
    n_in: usize,
    sw2: f64,
    ybar: f64,
    n: usize,
) -> Result<FitReport> {
    let nf = n as f64;
    let n_out = (n - n_in) as f64;
    let n_in = n_in as f64;
    // Centering makes the outside sum the negative of the inside sum, so
    // the alternative residual sum of squares has a cancellation-free
    // form and the whole statistic is shift-invariant by construction.
    let rss1 = sw2 - w_in * w_in * nf / (n_in * n_out);
    let m2 = sw2 / nf + ybar * ybar;
    let floor = m2 * VAR_FLOOR + f64::MIN_POSITIVE;
    if sw2 / nf <= floor || rss1 / nf <= floor {
        return Err(Error::DegenerateVariance);
    }
    let llr = (nf / 2.0) * (sw2 / rss1).ln();
    let theta = w_in * nf / (n_in * n_out);
    let alpha = ybar - w_in / n_out;
    Ok(FitReport::closed(llr.max(0.0), theta, Some(alpha)))
}

/// Gaussian outcomes with a common unknown variance, expectation-based:
/// zero mean outside, mean `theta` inside, variance profiled out. The
/// all-regions zone is a valid alternative here.
pub fn llr_gauss_unknown_exp(y: &[f64], z: &[bool]) -> Result<FitReport> {
    check_lengths(y, z)?;
    check_zone(z, false)?;
    let (mut s_in, mut n_in) = (0.0, 0usize);
    let mut sy2 = 0.0;
    for i in 0..y.len() {
        sy2 += y[i] * y[i];
        if z[i] {
            s_in += y[i];
            n_in += 1;
        }
    }
    gauss_unknown_exp_totals(s_in, n_in, sy2, y.len())
}

pub(crate) fn gauss_unknown_exp_totals(
    s_in: f64,
    n_in: usize,
    sy2: f64,
    n: usize,
) -> Result<FitReport> {
    if sy2 <= 0.0 {
        return Err(Error::DegenerateOutcome("all outcomes are zero"));
    }
    let nf = n as f64;
    let rss1 = sy2 - s_in * s_in / n_in as f64;
    let floor = (sy2 / nf) * VAR_FLOOR + f64::MIN_POSITIVE;
    if rss1 / nf <= floor {
        return Err(Error::DegenerateVariance);
    }
    let llr = (nf / 2.0) * (sy2 / rss1).ln();
    Ok(FitReport::closed(llr.max(0.0), s_in / n_in as f64, None))
}

// ---------------------------------------------------------------------
// Bernoulli
// ---------------------------------------------------------------------

/// Maximized Bernoulli log-likelihood of `c` successes in `n` trials.
fn bern_ll(c: f64, n: f64) -> f64 {
    xlogy(c, c / n) + xlogy(n - c, (n - c) / n)
}

/// Binary outcomes, population-based: one success probability outside,
/// another inside, both free. Requires at least one success and one
/// failure overall.
pub fn llr_bernoulli_pop(y: &[f64], z: &[bool]) -> Result<FitReport> {
    check_lengths(y, z)?;
    check_binary(y)?;
    check_zone(z, true)?;
    let (mut c_in, mut n_in) = (0.0, 0.0);
    for i in 0..y.len() {
        if z[i] {
            c_in += y[i];
            n_in += 1.0;
        }
    }
    bernoulli_pop_totals(c_in, n_in, y.iter().sum(), y.len() as f64)
}

pub(crate) fn bernoulli_pop_totals(c_in: f64, n_in: f64, c: f64, n: f64) -> Result<FitReport> {
    if c <= 0.0 || c >= n {
        return Err(Error::DegenerateOutcome(
            "outcomes are all zero or all one",
        ));
    }
    let c_out = c - c_in;
    let n_out = n - n_in;
    let llr = bern_ll(c_in, n_in) + bern_ll(c_out, n_out) - bern_ll(c, n);
    let logit_in = (c_in / (n_in - c_in)).ln();
    let logit_out = (c_out / (n_out - c_out)).ln();
    Ok(FitReport::closed(
        clamp_llr(llr, n)?,
        logit_in - logit_out,
        Some(logit_out),
    ))
}

/// Binary outcomes, expectation-based: success probability 1/2 outside
/// (and under the null), free inside the zone.
pub fn llr_bernoulli_exp(y: &[f64], z: &[bool]) -> Result<FitReport> {
    check_lengths(y, z)?;
    check_binary(y)?;
    check_zone(z, false)?;
    let (mut c_in, mut n_in) = (0.0, 0.0);
    for i in 0..y.len() {
        if z[i] {
            c_in += y[i];
            n_in += 1.0;
        }
    }
    Ok(bernoulli_exp_totals(c_in, n_in))
}

pub(crate) fn bernoulli_exp_totals(c_in: f64, n_in: f64) -> FitReport {
    let llr = bern_ll(c_in, n_in) + n_in * std::f64::consts::LN_2;
    // The ratio is a scaled entropy deficit, non-negative by definition;
    // snap the floating-point residue at a balanced zone to exact zero.
    let llr = if llr.abs() <= 1e-12 * n_in.max(1.0) {
        0.0
    } else {
        llr.max(0.0)
    };
    FitReport::closed(llr, (c_in / (n_in - c_in)).ln(), None)
}

// ---------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------

/// Mean outcome outside the zone: the intercept estimate of the
/// population-based unknown-variance Gaussian model. Under expectation-
/// based assumptions this should sit near zero; values far from zero
/// suggest the population-based form is the right one for the data.
pub fn intercept_estimate_gaussian(y: &[f64], z: &[bool]) -> Result<f64> {
    check_lengths(y, z)?;
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..y.len() {
        if !z[i] {
            sum += y[i];
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::DegenerateZone(
            "zone covers every region; intercept and effect are confounded",
        ));
    }
    Ok(sum / count as f64)
}
