//! Model specification and zone statistics.
//!
//! Every statistic is a log-likelihood ratio comparing an alternative
//! model, in which a candidate zone carries its own effect, against a
//! null model without the zone term. Models come in two forms: the
//! population-based form carries a free intercept fitted from the data,
//! the expectation-based form pins the background to the supplied
//! baselines and has no intercept. Covariate-free fits have closed
//! forms; the GLM engine handles the same models with covariates through
//! iteratively reweighted least squares.

mod closed;
mod glm;

pub use closed::{
    intercept_estimate_gaussian, llr_bernoulli_exp, llr_bernoulli_pop, llr_gauss_fixed_exp,
    llr_gauss_fixed_pop, llr_gauss_unknown_exp, llr_gauss_unknown_pop, llr_poisson_exp,
    llr_poisson_pop,
};
pub use glm::llr_glm;
pub(crate) use glm::{fit_multi, solve_wls, NullFit};

use serde::{Deserialize, Serialize};

use crate::data::RegionTable;
use crate::error::{Error, Result};
use crate::zones::Zone;

/// Outcome distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Poisson,
    Bernoulli,
    /// Gaussian outcomes with known per-region variances.
    GaussFixed,
    /// Gaussian outcomes with a common unknown variance, profiled out.
    GaussUnknown,
}

/// Whether the background carries a free intercept (population-based) or
/// is pinned to the baselines (expectation-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Population,
    Expectation,
}

/// How a fit is computed: closed form, or the IRLS engine (required for
/// covariate adjustment, available everywhere).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Closed,
    Glm,
}

/// A fully specified zone statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub family: Family,
    pub approach: Approach,
    pub engine: Engine,
}

impl ModelSpec {
    pub const fn closed(family: Family, approach: Approach) -> Self {
        Self {
            family,
            approach,
            engine: Engine::Closed,
        }
    }

    pub const fn glm(family: Family, approach: Approach) -> Self {
        Self {
            family,
            approach,
            engine: Engine::Glm,
        }
    }

    /// All eight closed-form statistics.
    pub fn all_closed() -> [ModelSpec; 8] {
        use Approach::*;
        use Family::*;
        [
            Self::closed(Poisson, Population),
            Self::closed(Poisson, Expectation),
            Self::closed(Bernoulli, Population),
            Self::closed(Bernoulli, Expectation),
            Self::closed(GaussFixed, Population),
            Self::closed(GaussFixed, Expectation),
            Self::closed(GaussUnknown, Population),
            Self::closed(GaussUnknown, Expectation),
        ]
    }

    /// Parse names like `poisson-pop`, `gauss-unknown-exp` or
    /// `glm-bernoulli-pop`.
    pub fn parse(name: &str) -> Result<Self> {
        let (engine, rest) = match name.strip_prefix("glm-") {
            Some(rest) => (Engine::Glm, rest),
            None => (Engine::Closed, name),
        };
        let (family_str, approach_str) = rest
            .rsplit_once('-')
            .ok_or_else(|| Error::InvalidConfig(format!("unknown statistic `{name}`")))?;
        let family = match family_str {
            "poisson" => Family::Poisson,
            "bernoulli" => Family::Bernoulli,
            "gauss-fixed" => Family::GaussFixed,
            "gauss-unknown" => Family::GaussUnknown,
            _ => return Err(Error::InvalidConfig(format!("unknown statistic `{name}`"))),
        };
        let approach = match approach_str {
            "pop" => Approach::Population,
            "exp" => Approach::Expectation,
            _ => return Err(Error::InvalidConfig(format!("unknown statistic `{name}`"))),
        };
        Ok(Self {
            family,
            approach,
            engine,
        })
    }

    pub fn name(&self) -> String {
        let family = match self.family {
            Family::Poisson => "poisson",
            Family::Bernoulli => "bernoulli",
            Family::GaussFixed => "gauss-fixed",
            Family::GaussUnknown => "gauss-unknown",
        };
        let approach = match self.approach {
            Approach::Population => "pop",
            Approach::Expectation => "exp",
        };
        let prefix = match self.engine {
            Engine::Closed => "",
            Engine::Glm => "glm-",
        };
        format!("{prefix}{family}-{approach}")
    }
}

impl std::fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ModelSpec::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Result of fitting one zone alternative against the null.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    /// Log-likelihood ratio, non-negative. Infinite under perfect
    /// separation in the unknown-variance Gaussian families.
    pub llr: f64,
    /// Estimated zone effect on the link scale. May be infinite when a
    /// zone count sits on the boundary of the parameter space.
    pub theta: f64,
    /// Estimated intercept; `None` for expectation-based fits.
    pub alpha: Option<f64>,
    /// Covariate coefficients, empty for closed-form fits.
    pub beta: Vec<f64>,
    /// IRLS iterations performed; 0 for closed forms.
    pub iterations: usize,
    pub converged: bool,
}

impl FitReport {
    pub(crate) fn closed(llr: f64, theta: f64, alpha: Option<f64>) -> Self {
        Self {
            llr,
            theta,
            alpha,
            beta: Vec::new(),
            iterations: 0,
            converged: true,
        }
    }
}

/// Check an outcome vector against a family's support.
pub(crate) fn validate_outcomes(table: &RegionTable, family: Family) -> Result<()> {
    match family {
        Family::Poisson => {
            for (i, &y) in table.outcome().iter().enumerate() {
                if y < 0.0 {
                    return Err(Error::InvalidData(format!(
                        "negative outcome for a count model, row {}",
                        i + 1
                    )));
                }
            }
        }
        Family::Bernoulli => {
            for (i, &y) in table.outcome().iter().enumerate() {
                if y != 0.0 && y != 1.0 {
                    return Err(Error::InvalidData(format!(
                        "outcome must be 0 or 1, row {}",
                        i + 1
                    )));
                }
            }
        }
        Family::GaussFixed | Family::GaussUnknown => {}
    }
    Ok(())
}

/// Dataset-level preconditions for a family and approach, shared by the
/// closed forms, the regression engine, and the penalized solvers.
pub(crate) fn validate_dataset(
    table: &RegionTable,
    family: Family,
    approach: Approach,
) -> Result<()> {
    validate_outcomes(table, family)?;
    let y = table.outcome();
    let n = table.len();
    match family {
        Family::Poisson => {
            if approach == Approach::Population && y.iter().sum::<f64>() <= 0.0 {
                return Err(Error::ZeroTotal);
            }
        }
        Family::Bernoulli => {
            if approach == Approach::Population {
                let c: f64 = y.iter().sum();
                if c <= 0.0 || c >= n as f64 {
                    return Err(Error::DegenerateOutcome(
                        "outcomes are all zero or all one",
                    ));
                }
            }
        }
        Family::GaussUnknown => {
            if approach == Approach::Population && n < 3 {
                return Err(Error::InvalidData(
                    "unknown-variance statistic needs at least 3 regions".into(),
                ));
            }
            if approach == Approach::Expectation
                && y.iter().map(|v| v * v).sum::<f64>() <= 0.0
            {
                return Err(Error::DegenerateOutcome("all outcomes are zero"));
            }
        }
        Family::GaussFixed => {}
    }
    Ok(())
}

/// Whether a zone of the given size can carry an effect under the
/// approach: non-empty, and not the whole study area when a free
/// intercept must also be identified. The scan and the penalized solvers
/// share this predicate so their candidate sets match exactly.
pub(crate) fn zone_admissible(approach: Approach, zone_len: usize, n: usize) -> bool {
    zone_len >= 1 && (approach == Approach::Expectation || zone_len < n)
}

/// Per-region fixed variances: the table's variance column, or 1.0.
fn variances(table: &RegionTable) -> Vec<f64> {
    table
        .variance()
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![1.0; table.len()])
}

enum Pre {
    Poisson {
        c_total: f64,
        b_total: f64,
    },
    Bernoulli {
        c_total: f64,
    },
    GaussFixed {
        /// Per-region y*gamma/sigma^2 and gamma^2/sigma^2.
        a: Vec<f64>,
        b: Vec<f64>,
        a_total: f64,
        b_total: f64,
    },
    GaussUnknown {
        /// Centered outcomes y - mean(y) and their sum of squares.
        w: Vec<f64>,
        sw2: f64,
        ybar: f64,
        /// Raw sum of squares, used by the expectation form.
        sy2: f64,
    },
    Glm {
        null: glm::NullFit,
    },
}

/// Reusable per-dataset state for evaluating many zones under one model.
///
/// Construction validates the data against the model and performs all
/// whole-table precomputation (totals, centered outcomes, the GLM null
/// fit), so that evaluating a zone costs time proportional to the zone
/// size for closed forms. `Evaluator` is immutable and safe to share
/// across threads.
pub struct Evaluator<'a> {
    table: &'a RegionTable,
    spec: ModelSpec,
    pre: Pre,
}

impl<'a> Evaluator<'a> {
    pub fn new(table: &'a RegionTable, spec: ModelSpec) -> Result<Self> {
        validate_dataset(table, spec.family, spec.approach)?;
        if spec.engine == Engine::Closed && table.covariate_count() > 0 {
            return Err(Error::InvalidConfig(
                "closed-form statistics ignore covariates; use the glm- engine".into(),
            ));
        }
        let y = table.outcome();
        let n = table.len() as f64;
        let pre = match (spec.engine, spec.family) {
            (Engine::Glm, _) => Pre::Glm {
                null: glm::NullFit::fit(table, spec.family, spec.approach)?,
            },
            (_, Family::Poisson) => Pre::Poisson {
                c_total: y.iter().sum(),
                b_total: table.baseline().iter().sum(),
            },
            (_, Family::Bernoulli) => Pre::Bernoulli {
                c_total: y.iter().sum(),
            },
            (_, Family::GaussFixed) => {
                let s2 = variances(table);
                let a: Vec<f64> = (0..table.len())
                    .map(|i| y[i] * table.baseline()[i] / s2[i])
                    .collect();
                let b: Vec<f64> = (0..table.len())
                    .map(|i| table.baseline()[i].powi(2) / s2[i])
                    .collect();
                Pre::GaussFixed {
                    a_total: a.iter().sum(),
                    b_total: b.iter().sum(),
                    a,
                    b,
                }
            }
            (_, Family::GaussUnknown) => {
                let ybar = y.iter().sum::<f64>() / n;
                let w: Vec<f64> = y.iter().map(|v| v - ybar).collect();
                Pre::GaussUnknown {
                    sw2: w.iter().map(|v| v * v).sum(),
                    sy2: y.iter().map(|v| v * v).sum(),
                    ybar,
                    w,
                }
            }
        };
        Ok(Self { table, spec, pre })
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn table(&self) -> &RegionTable {
        self.table
    }

    /// Fit the zone alternative. Errors mark zones that cannot carry this
    /// statistic (degenerate shape, collapsed variance) rather than
    /// dataset-level problems, which construction has already rejected.
    pub fn evaluate(&self, zone: &Zone) -> Result<FitReport> {
        let n = self.table.len();
        if zone.members().last().is_some_and(|&m| m >= n) {
            return Err(Error::InvalidData("zone member out of range".into()));
        }
        if !zone_admissible(self.spec.approach, zone.len(), n) {
            return Err(if zone.is_empty() {
                Error::DegenerateZone("empty zone")
            } else {
                Error::DegenerateZone(
                    "zone covers every region; intercept and effect are confounded",
                )
            });
        }
        let y = self.table.outcome();
        match &self.pre {
            Pre::Poisson { c_total, b_total } => {
                let (mut c_in, mut b_in) = (0.0, 0.0);
                for &i in zone.members() {
                    c_in += y[i];
                    b_in += self.table.baseline()[i];
                }
                match self.spec.approach {
                    Approach::Population => {
                        closed::poisson_pop_totals(c_in, b_in, *c_total, *b_total)
                    }
                    Approach::Expectation => Ok(closed::poisson_exp_totals(c_in, b_in)),
                }
            }
            Pre::Bernoulli { c_total } => {
                let c_in: f64 = zone.members().iter().map(|&i| y[i]).sum();
                let n_in = zone.len() as f64;
                match self.spec.approach {
                    Approach::Population => {
                        closed::bernoulli_pop_totals(c_in, n_in, *c_total, n as f64)
                    }
                    Approach::Expectation => Ok(closed::bernoulli_exp_totals(c_in, n_in)),
                }
            }
            Pre::GaussFixed { a, b, a_total, b_total } => {
                let (mut a_in, mut b_in) = (0.0, 0.0);
                for &i in zone.members() {
                    a_in += a[i];
                    b_in += b[i];
                }
                match self.spec.approach {
                    Approach::Population => {
                        closed::gauss_fixed_pop_totals(a_in, b_in, *a_total, *b_total)
                    }
                    Approach::Expectation => Ok(closed::gauss_fixed_exp_totals(a_in, b_in)),
                }
            }
            Pre::GaussUnknown { w, sw2, ybar, sy2 } => match self.spec.approach {
                Approach::Population => {
                    let w_in: f64 = zone.members().iter().map(|&i| w[i]).sum();
                    closed::gauss_unknown_pop_totals(w_in, zone.len(), *sw2, *ybar, n)
                }
                Approach::Expectation => {
                    let s_in: f64 = zone.members().iter().map(|&i| y[i]).sum();
                    closed::gauss_unknown_exp_totals(s_in, zone.len(), *sy2, n)
                }
            },
            Pre::Glm { null } => glm::fit_zone(self.table, self.spec, null, zone),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_names_round_trip() {
        for name in [
            "poisson-pop",
            "poisson-exp",
            "bernoulli-pop",
            "bernoulli-exp",
            "gauss-fixed-pop",
            "gauss-fixed-exp",
            "gauss-unknown-pop",
            "gauss-unknown-exp",
            "glm-poisson-pop",
            "glm-gauss-unknown-exp",
        ] {
            let spec = ModelSpec::parse(name).unwrap();
            assert_eq!(spec.name(), name);
        }
        assert!(ModelSpec::parse("poisson").is_err());
        assert!(ModelSpec::parse("gauss-pop").is_err());
        assert!(ModelSpec::parse("glm-").is_err());
    }

    #[test]
    fn evaluator_matches_slice_api() {
        let table = RegionTable::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            vec![3.0, 1.0, 2.0],
        )
        .unwrap()
        .with_baseline(vec![1.0, 1.0, 2.0])
        .unwrap();
        let ev = Evaluator::new(&table, ModelSpec::closed(Family::Poisson, Approach::Population))
            .unwrap();
        let zone = Zone::new(vec![0]).unwrap();
        let via_eval = ev.evaluate(&zone).unwrap();
        let via_slice =
            llr_poisson_pop(table.outcome(), table.baseline(), &zone.indicator(3)).unwrap();
        assert_eq!(via_eval.llr, via_slice.llr);
        assert_eq!(via_eval.theta, via_slice.theta);
    }

    #[test]
    fn population_rejects_full_zone() {
        let table = RegionTable::new(
            vec!["a".into(), "b".into()],
            vec![[0.0, 0.0], [1.0, 0.0]],
            vec![3.0, 1.0],
        )
        .unwrap();
        let ev = Evaluator::new(&table, ModelSpec::closed(Family::Poisson, Approach::Population))
            .unwrap();
        let zone = Zone::new(vec![0, 1]).unwrap();
        assert!(matches!(
            ev.evaluate(&zone),
            Err(Error::DegenerateZone(_))
        ));
        let ev = Evaluator::new(&table, ModelSpec::closed(Family::Poisson, Approach::Expectation))
            .unwrap();
        assert!(ev.evaluate(&zone).is_ok());
    }

    #[test]
    fn bernoulli_outcome_validation() {
        let table = RegionTable::new(
            vec!["a".into(), "b".into()],
            vec![[0.0, 0.0], [1.0, 0.0]],
            vec![0.5, 1.0],
        )
        .unwrap();
        let err =
            Evaluator::new(&table, ModelSpec::closed(Family::Bernoulli, Approach::Expectation))
                .map(|_| ())
                .unwrap_err();
        assert!(err.to_string().contains("0 or 1"));
    }
}
