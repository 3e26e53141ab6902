//! Sparse cluster selection as penalized regression.
//!
//! Selecting zone effects with an L0 penalty is equivalent to the scan:
//! with one active effect allowed, the penalized solution is exactly the
//! most likely cluster whenever its ratio clears the penalty. The
//! solvers here work from absolute maximized log-likelihoods assembled
//! group by group, a deliberately separate route from the scan's ratio
//! formulas; both must land on the same selection, and the test suite
//! checks that they do.
//!
//! The multi-cluster solver fits several disjoint zones at once (exact
//! enumeration for small families, greedy forward selection otherwise).
//! Overlapping selections fall back to joint regression fits and are
//! considerably slower.

use serde::Serialize;

use crate::data::RegionTable;
use crate::error::{Error, Result};
use crate::stats::{
    fit_multi, validate_dataset, zone_admissible, Approach, Engine, Family, ModelSpec,
};
use crate::zones::{Zone, ZoneSet};

const VAR_FLOOR: f64 = 1e-14;
/// Largest admissible family enumerated exactly in the disjoint
/// multi-cluster solver.
const EXACT_LIMIT: usize = 20;

fn xlogy(c: f64, r: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * r.ln()
    }
}

/// Whether selected zones may share regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Overlap {
    #[default]
    Disjoint,
    /// Experimental: joint regression fits over overlapping zones.
    Allow,
}

#[derive(Debug, Clone, Serialize)]
pub struct L0Config {
    /// Penalty charged per active zone effect.
    pub lambda: f64,
    /// Maximum number of active zone effects.
    pub budget: usize,
    pub overlap: Overlap,
}

impl Default for L0Config {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            budget: 1,
            overlap: Overlap::Disjoint,
        }
    }
}

/// A penalized selection: the active zones, their effect estimates, and
/// the objective actually attained.
#[derive(Debug, Clone, Serialize)]
pub struct L0Selection {
    /// Selected zone ids, empty when the null model wins.
    pub zone_ids: Vec<usize>,
    pub thetas: Vec<f64>,
    /// Maximized log-likelihood of the selection minus the penalty, on
    /// the same constant-dropping convention as `null_loglik`.
    pub objective: f64,
    pub null_loglik: f64,
}

/// Per-zone sufficient statistics: two numbers per zone regardless of
/// family (count-like and exposure-like).
struct Cand {
    id: usize,
    size: usize,
    u: f64,
    v: f64,
}

/// Group-decomposable absolute log-likelihoods for the closed families.
struct GroupLik {
    family: Family,
    approach: Approach,
    n: usize,
    u_tot: f64,
    v_tot: f64,
    /// Raw sum of squares, unknown-variance Gaussian only.
    sy2: f64,
}

impl GroupLik {
    fn new(table: &RegionTable, family: Family) -> (Self, Vec<f64>, Vec<f64>) {
        let y = table.outcome();
        let n = table.len();
        // Per-region (u, v) contributions by family.
        let (u, v): (Vec<f64>, Vec<f64>) = match family {
            Family::Poisson => (y.to_vec(), table.baseline().to_vec()),
            Family::Bernoulli => (y.to_vec(), vec![1.0; n]),
            Family::GaussFixed => {
                let s2: Vec<f64> = table
                    .variance()
                    .map(<[f64]>::to_vec)
                    .unwrap_or_else(|| vec![1.0; n]);
                (
                    (0..n).map(|i| y[i] * table.baseline()[i] / s2[i]).collect(),
                    (0..n)
                        .map(|i| table.baseline()[i].powi(2) / s2[i])
                        .collect(),
                )
            }
            Family::GaussUnknown => (y.to_vec(), vec![1.0; n]),
        };
        let lik = Self {
            family,
            approach: Approach::Population,
            n,
            u_tot: u.iter().sum(),
            v_tot: v.iter().sum(),
            sy2: y.iter().map(|x| x * x).sum(),
        };
        (lik, u, v)
    }

    /// Maximized log-likelihood of one group with its own free effect.
    fn fitted(&self, u: f64, v: f64) -> f64 {
        match self.family {
            Family::Poisson => xlogy(u, u / v) - u,
            Family::Bernoulli => xlogy(u, u / v) + xlogy(v - u, (v - u) / v),
            Family::GaussFixed => u * u / (2.0 * v),
            Family::GaussUnknown => unreachable!("handled through residual sums"),
        }
    }

    /// Log-likelihood of one group pinned to the baseline model.
    fn pinned(&self, u: f64, v: f64) -> f64 {
        match self.family {
            Family::Poisson => -v,
            Family::Bernoulli => -v * std::f64::consts::LN_2,
            Family::GaussFixed => u - v / 2.0,
            Family::GaussUnknown => unreachable!("handled through residual sums"),
        }
    }

    /// Absolute maximized log-likelihood of a model with free effects on
    /// the given disjoint groups. Infinite when the profiled variance
    /// collapses. `groups` lists (u, v, size) per active zone.
    fn ll(&self, groups: &[(f64, f64, usize)]) -> f64 {
        let nf = self.n as f64;
        let su: f64 = groups.iter().map(|g| g.0).sum();
        let sv: f64 = groups.iter().map(|g| g.1).sum();
        if self.family == Family::GaussUnknown {
            let mut rss = self.sy2;
            for &(u, _, size) in groups {
                rss -= u * u / size as f64;
            }
            if self.approach == Approach::Population {
                let rest: usize = self.n - groups.iter().map(|g| g.2).sum::<usize>();
                let ur = self.u_tot - su;
                rss -= ur * ur / rest as f64;
            }
            if rss <= self.sy2 * VAR_FLOOR + nf * f64::MIN_POSITIVE {
                return f64::INFINITY;
            }
            return -(nf / 2.0) * (rss / nf).ln();
        }
        let mut ll: f64 = groups.iter().map(|&(u, v, _)| self.fitted(u, v)).sum();
        let (ur, vr) = (self.u_tot - su, self.v_tot - sv);
        ll += match self.approach {
            Approach::Population => self.fitted(ur.max(0.0), vr),
            Approach::Expectation => self.pinned(ur, vr),
        };
        ll
    }

    fn ll_null(&self) -> f64 {
        self.ll(&[])
    }

    /// Effect estimate for a group against the rest of the selection's
    /// background.
    fn theta(&self, u: f64, v: f64, ur: f64, vr: f64) -> f64 {
        match (self.family, self.approach) {
            (Family::Poisson, Approach::Population) => (u / v).ln() - (ur / vr).ln(),
            (Family::Poisson, Approach::Expectation) => (u / v).ln(),
            (Family::Bernoulli, Approach::Population) => {
                (u / (v - u)).ln() - (ur / (vr - ur)).ln()
            }
            (Family::Bernoulli, Approach::Expectation) => (u / (v - u)).ln(),
            (Family::GaussFixed, Approach::Population) => u / v - ur / vr,
            (Family::GaussFixed, Approach::Expectation) => u / v - 1.0,
            (Family::GaussUnknown, Approach::Population) => u / v - ur / vr,
            (Family::GaussUnknown, Approach::Expectation) => u / v,
        }
    }
}

fn candidates(
    zones: &ZoneSet,
    approach: Approach,
    n: usize,
    u: &[f64],
    v: &[f64],
) -> Vec<Cand> {
    zones
        .iter()
        .filter(|(_, z)| zone_admissible(approach, z.len(), n))
        .map(|(id, z)| {
            let (mut cu, mut cv) = (0.0, 0.0);
            for &i in z.members() {
                cu += u[i];
                cv += v[i];
            }
            Cand {
                id,
                size: z.len(),
                u: cu,
                v: cv,
            }
        })
        .collect()
}

fn check_inputs(table: &RegionTable, zones: &ZoneSet, spec: ModelSpec, lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig(
            "penalty must be finite and non-negative".into(),
        ));
    }
    if zones.universe() != table.len() {
        return Err(Error::InvalidData(format!(
            "zone family is over {} regions but the table has {}",
            zones.universe(),
            table.len()
        )));
    }
    validate_dataset(table, spec.family, spec.approach)
}

/// Best single-zone selection under an L0 penalty `lambda`: the zone
/// maximizing the absolute model likelihood, kept only if it beats the
/// null by more than the penalty. With `lambda = 0` this selects exactly
/// the scan's most likely cluster.
pub fn solve_l0_single(
    table: &RegionTable,
    zones: &ZoneSet,
    spec: ModelSpec,
    lambda: f64,
) -> Result<L0Selection> {
    check_inputs(table, zones, spec, lambda)?;
    if spec.engine == Engine::Glm {
        let config = L0Config {
            lambda,
            budget: 1,
            overlap: Overlap::Disjoint,
        };
        return solve_l0_multi(table, zones, spec, &config);
    }
    let (mut lik, u, v) = GroupLik::new(table, spec.family);
    lik.approach = spec.approach;
    let n = table.len();
    let cands = candidates(zones, spec.approach, n, &u, &v);
    if cands.is_empty() {
        return Err(Error::EmptyResult);
    }
    let null_ll = lik.ll_null();
    let mut best: Option<(f64, &Cand)> = None;
    for cand in &cands {
        let ll = lik.ll(&[(cand.u, cand.v, cand.size)]);
        let better = match best {
            None => true,
            Some((bll, bc)) => match ll.total_cmp(&bll) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => (cand.size, cand.id) < (bc.size, bc.id),
            },
        };
        if better {
            best = Some((ll, cand));
        }
    }
    let (best_ll, best_cand) = best.expect("non-empty candidate list");
    if best_ll - lambda > null_ll {
        let theta = lik.theta(
            best_cand.u,
            best_cand.v,
            lik.u_tot - best_cand.u,
            lik.v_tot - best_cand.v,
        );
        Ok(L0Selection {
            zone_ids: vec![best_cand.id],
            thetas: vec![theta],
            objective: best_ll - lambda,
            null_loglik: null_ll,
        })
    } else {
        Ok(L0Selection {
            zone_ids: Vec::new(),
            thetas: Vec::new(),
            objective: null_ll,
            null_loglik: null_ll,
        })
    }
}

/// Multi-cluster L0 selection.
///
/// With `Overlap::Disjoint`, selected zones may not share regions and
/// the joint likelihood decomposes over groups; families of at most 20
/// admissible zones are solved by exact subset enumeration, larger ones
/// by greedy forward selection. With `Overlap::Allow`, zones may share
/// regions and every candidate step is scored through a joint regression
/// fit, which is far slower and treats non-identifiable combinations as
/// inadmissible.
pub fn solve_l0_multi(
    table: &RegionTable,
    zones: &ZoneSet,
    spec: ModelSpec,
    config: &L0Config,
) -> Result<L0Selection> {
    check_inputs(table, zones, spec, config.lambda)?;
    if config.budget == 0 {
        return Err(Error::InvalidConfig("budget must be positive".into()));
    }
    if config.overlap == Overlap::Allow || spec.engine == Engine::Glm {
        return greedy_joint(table, zones, spec, config);
    }
    let (mut lik, u, v) = GroupLik::new(table, spec.family);
    lik.approach = spec.approach;
    let n = table.len();
    let cands = candidates(zones, spec.approach, n, &u, &v);
    if cands.is_empty() {
        return Err(Error::EmptyResult);
    }
    let selection = if cands.len() <= EXACT_LIMIT {
        exact_disjoint(&lik, zones, &cands, config, n)
    } else {
        greedy_disjoint(&lik, zones, &cands, config, n)
    };
    Ok(finish(&lik, &cands, selection, config.lambda))
}

/// Turn chosen candidate indices into the reported selection.
fn finish(lik: &GroupLik, cands: &[Cand], chosen: Vec<usize>, lambda: f64) -> L0Selection {
    let groups: Vec<(f64, f64, usize)> = chosen
        .iter()
        .map(|&i| (cands[i].u, cands[i].v, cands[i].size))
        .collect();
    let ll = lik.ll(&groups);
    let su: f64 = groups.iter().map(|g| g.0).sum();
    let sv: f64 = groups.iter().map(|g| g.1).sum();
    let thetas = chosen
        .iter()
        .map(|&i| {
            lik.theta(
                cands[i].u,
                cands[i].v,
                lik.u_tot - su,
                lik.v_tot - sv,
            )
        })
        .collect();
    L0Selection {
        zone_ids: chosen.iter().map(|&i| cands[i].id).collect(),
        thetas,
        objective: ll - lambda * chosen.len() as f64,
        null_loglik: lik.ll_null(),
    }
}

/// Exhaustive search over disjoint subsets within the budget.
fn exact_disjoint(
    lik: &GroupLik,
    zones: &ZoneSet,
    cands: &[Cand],
    config: &L0Config,
    n: usize,
) -> Vec<usize> {
    let k = cands.len();
    // conflicts[i] marks candidates sharing at least one region with i.
    let mut conflicts = vec![0u32; k];
    for i in 0..k {
        let zi = zones.zone(cands[i].id).expect("candidate from family");
        for j in i + 1..k {
            let zj = zones.zone(cands[j].id).expect("candidate from family");
            if zi.intersects(zj) {
                conflicts[i] |= 1 << j;
                conflicts[j] |= 1 << i;
            }
        }
    }
    let pop = lik.approach == Approach::Population;
    let mut best: Vec<usize> = Vec::new();
    let mut best_key = (lik.ll_null(), 0usize);
    let mut stack_groups: Vec<(f64, f64, usize)> = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();

    fn dfs(
        start: usize,
        used: u32,
        total_size: usize,
        lik: &GroupLik,
        cands: &[Cand],
        conflicts: &[u32],
        config: &L0Config,
        n: usize,
        pop: bool,
        stack_groups: &mut Vec<(f64, f64, usize)>,
        chosen: &mut Vec<usize>,
        best: &mut Vec<usize>,
        best_key: &mut (f64, usize),
    ) {
        // Score the current subset.
        if !(pop && total_size >= n) {
            let ll = lik.ll(stack_groups);
            let obj = ll - config.lambda * chosen.len() as f64;
            let key = (obj, total_size);
            let better = match key.0.total_cmp(&best_key.0) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => {
                    key.1 < best_key.1 || (key.1 == best_key.1 && chosen.as_slice() < best.as_slice())
                }
            };
            if better {
                *best = chosen.clone();
                *best_key = key;
            }
        }
        if chosen.len() >= config.budget {
            return;
        }
        for i in start..cands.len() {
            // Skip zones intersecting anything already chosen.
            if conflicts[i] & used != 0 {
                continue;
            }
            chosen.push(i);
            stack_groups.push((cands[i].u, cands[i].v, cands[i].size));
            dfs(
                i + 1,
                used | (1 << i),
                total_size + cands[i].size,
                lik,
                cands,
                conflicts,
                config,
                n,
                pop,
                stack_groups,
                chosen,
                best,
                best_key,
            );
            stack_groups.pop();
            chosen.pop();
        }
    }

    dfs(
        0,
        0,
        0,
        lik,
        cands,
        &conflicts,
        config,
        n,
        pop,
        &mut stack_groups,
        &mut chosen,
        &mut best,
        &mut best_key,
    );
    best
}

/// Greedy forward selection over disjoint zones.
fn greedy_disjoint(
    lik: &GroupLik,
    zones: &ZoneSet,
    cands: &[Cand],
    config: &L0Config,
    n: usize,
) -> Vec<usize> {
    let pop = lik.approach == Approach::Population;
    let mut chosen: Vec<usize> = Vec::new();
    let mut groups: Vec<(f64, f64, usize)> = Vec::new();
    let mut total_size = 0usize;
    let mut current_ll = lik.ll_null();
    while chosen.len() < config.budget {
        let mut best: Option<(f64, usize)> = None;
        for (i, cand) in cands.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            if pop && total_size + cand.size >= n {
                continue;
            }
            let zi = zones.zone(cand.id).expect("candidate from family");
            if chosen.iter().any(|&j| {
                zones
                    .zone(cands[j].id)
                    .expect("candidate from family")
                    .intersects(zi)
            }) {
                continue;
            }
            groups.push((cand.u, cand.v, cand.size));
            let ll = lik.ll(&groups);
            groups.pop();
            let gain = ll - current_ll - config.lambda;
            let better = match best {
                None => gain > 0.0,
                Some((bg, bi)) => match gain.total_cmp(&bg) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => {
                        (cand.size, cand.id) < (cands[bi].size, cands[bi].id)
                    }
                },
            };
            if better && gain > 0.0 {
                best = Some((gain, i));
            }
        }
        let Some((gain, i)) = best else { break };
        chosen.push(i);
        groups.push((cands[i].u, cands[i].v, cands[i].size));
        total_size += cands[i].size;
        current_ll += gain + config.lambda;
    }
    chosen
}

/// Greedy forward selection scored by joint regression fits; the only
/// path that supports overlapping selections and covariates.
fn greedy_joint(
    table: &RegionTable,
    zones: &ZoneSet,
    spec: ModelSpec,
    config: &L0Config,
) -> Result<L0Selection> {
    let n = table.len();
    let admissible: Vec<(usize, &Zone)> = zones
        .iter()
        .filter(|(_, z)| zone_admissible(spec.approach, z.len(), n))
        .collect();
    if admissible.is_empty() {
        return Err(Error::EmptyResult);
    }
    let null = fit_multi(table, spec.family, spec.approach, &[])?;
    let mut chosen: Vec<(usize, &Zone)> = Vec::new();
    let mut current_ll = null.ll;
    let mut thetas: Vec<f64> = Vec::new();
    while chosen.len() < config.budget {
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for (pos, (id, zone)) in admissible.iter().enumerate() {
            if chosen.iter().any(|(cid, _)| cid == id) {
                continue;
            }
            if config.overlap == Overlap::Disjoint
                && chosen.iter().any(|(_, z)| z.intersects(zone))
            {
                continue;
            }
            let mut trial: Vec<&Zone> = chosen.iter().map(|(_, z)| *z).collect();
            trial.push(zone);
            let fit = match fit_multi(table, spec.family, spec.approach, &trial) {
                Ok(f) => f,
                // Non-identifiable combination: not a valid candidate.
                Err(Error::RankDeficient) | Err(Error::DegenerateZone(_)) => continue,
                Err(e) => return Err(e),
            };
            let gain = fit.ll - current_ll - config.lambda;
            if gain <= 0.0 {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bg, bpos, _)) => match gain.total_cmp(bg) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => {
                        let (bid, bzone) = admissible[*bpos];
                        (zone.len(), *id) < (bzone.len(), bid)
                    }
                },
            };
            if better {
                best = Some((gain, pos, fit.thetas));
            }
        }
        let Some((gain, pos, fit_thetas)) = best else { break };
        chosen.push(admissible[pos]);
        current_ll += gain + config.lambda;
        thetas = fit_thetas;
    }
    Ok(L0Selection {
        zone_ids: chosen.iter().map(|(id, _)| *id).collect(),
        thetas,
        objective: current_ll - config.lambda * chosen.len() as f64,
        null_loglik: null.ll,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::{scan, ScanOptions};
    use crate::zones::{circular_zones, singleton_zones, CircularConfig, Metric};

    fn line_table(y: Vec<f64>) -> RegionTable {
        let n = y.len();
        let ids = (0..n).map(|i| format!("r{i}")).collect();
        let coords = (0..n).map(|i| [i as f64, 0.0]).collect();
        RegionTable::new(ids, coords, y).unwrap()
    }

    fn no_caps() -> CircularConfig {
        CircularConfig {
            max_size: None,
            max_fraction: None,
            metric: Metric::Euclidean,
        }
    }

    #[test]
    fn single_matches_scan() {
        let table = line_table(vec![9.0, 8.0, 1.0, 1.0, 2.0, 1.0]);
        let zones = circular_zones(&table, &no_caps()).unwrap();
        for spec in [
            ModelSpec::parse("poisson-exp").unwrap(),
            ModelSpec::parse("poisson-pop").unwrap(),
            ModelSpec::parse("gauss-unknown-pop").unwrap(),
            ModelSpec::parse("gauss-unknown-exp").unwrap(),
        ] {
            let s = scan(&table, &zones, spec, &ScanOptions::default()).unwrap();
            let l0 = solve_l0_single(&table, &zones, spec, 0.0).unwrap();
            assert_eq!(l0.zone_ids, vec![s.mlc_id], "statistic {spec}");
        }
    }

    #[test]
    fn penalty_threshold_matches_ratio() {
        let table = line_table(vec![9.0, 8.0, 1.0, 1.0, 2.0, 1.0]);
        let zones = circular_zones(&table, &no_caps()).unwrap();
        let spec = ModelSpec::parse("poisson-exp").unwrap();
        let s = scan(&table, &zones, spec, &ScanOptions::default()).unwrap();
        let llr = s.mlc_llr();
        let below = solve_l0_single(&table, &zones, spec, llr - 0.05).unwrap();
        assert_eq!(below.zone_ids, vec![s.mlc_id]);
        let above = solve_l0_single(&table, &zones, spec, llr + 0.05).unwrap();
        assert!(above.zone_ids.is_empty());
        assert_eq!(above.objective, above.null_loglik);
    }

    #[test]
    fn multi_selects_disjoint_planted_pair() {
        // Two elevated blocks far apart on a line. The family is capped
        // at half the baseline so no single zone can swallow both blocks
        // and starve the greedy search.
        let table = line_table(vec![9.0, 8.0, 1.0, 1.0, 1.0, 1.0, 7.0, 9.0]);
        let zones = circular_zones(
            &table,
            &CircularConfig {
                max_size: None,
                max_fraction: Some(0.5),
                metric: Metric::Euclidean,
            },
        )
        .unwrap();
        let spec = ModelSpec::parse("poisson-exp").unwrap();
        let config = L0Config {
            lambda: 1.0,
            budget: 3,
            overlap: Overlap::Disjoint,
        };
        let sel = solve_l0_multi(&table, &zones, spec, &config).unwrap();
        assert_eq!(sel.zone_ids.len(), 2);
        let mut members: Vec<Vec<usize>> = sel
            .zone_ids
            .iter()
            .map(|&id| zones.zone(id).unwrap().members().to_vec())
            .collect();
        members.sort();
        assert_eq!(members, vec![vec![0, 1], vec![6, 7]]);
        assert_eq!(sel.thetas.len(), 2);
        assert!(sel.thetas.iter().all(|&t| t > 1.0));
    }

    #[test]
    fn budget_caps_the_selection() {
        let table = line_table(vec![9.0, 8.0, 1.0, 1.0, 1.0, 1.0, 7.0, 9.0]);
        let zones = circular_zones(&table, &no_caps()).unwrap();
        let spec = ModelSpec::parse("poisson-exp").unwrap();
        let config = L0Config {
            lambda: 0.5,
            budget: 1,
            overlap: Overlap::Disjoint,
        };
        let sel = solve_l0_multi(&table, &zones, spec, &config).unwrap();
        assert_eq!(sel.zone_ids.len(), 1);
        let s = scan(&table, &zones, spec, &ScanOptions::default()).unwrap();
        assert_eq!(sel.zone_ids[0], s.mlc_id);
    }

    #[test]
    fn huge_penalty_selects_nothing() {
        let table = line_table(vec![9.0, 8.0, 1.0, 1.0]);
        let zones = circular_zones(&table, &no_caps()).unwrap();
        let spec = ModelSpec::parse("poisson-exp").unwrap();
        let config = L0Config {
            lambda: 1e6,
            budget: 3,
            overlap: Overlap::Disjoint,
        };
        let sel = solve_l0_multi(&table, &zones, spec, &config).unwrap();
        assert!(sel.zone_ids.is_empty());
    }

    #[test]
    fn greedy_handles_large_families() {
        // More than 20 singleton zones forces the greedy path; elevated
        // regions are picked out one by one.
        let mut y = vec![1.0; 25];
        y[3] = 30.0;
        y[17] = 25.0;
        let table = line_table(y);
        let zones = singleton_zones(&table).unwrap();
        let spec = ModelSpec::parse("poisson-exp").unwrap();
        let config = L0Config {
            lambda: 2.0,
            budget: 2,
            overlap: Overlap::Disjoint,
        };
        let sel = solve_l0_multi(&table, &zones, spec, &config).unwrap();
        let mut ids = sel.zone_ids.clone();
        ids.sort_unstable();
        assert_eq!(ids, vec![4, 18]);
    }

    #[test]
    fn population_background_must_remain() {
        // Two zones that together cover everything cannot both be active
        // under a population-based model.
        let table = line_table(vec![9.0, 8.0, 1.0, 1.0]);
        let z1 = Zone::new(vec![0, 1]).unwrap();
        let z2 = Zone::new(vec![2, 3]).unwrap();
        let zones = ZoneSet::from_zones(4, vec![z1, z2]).unwrap();
        let spec = ModelSpec::parse("poisson-pop").unwrap();
        let config = L0Config {
            lambda: 0.0,
            budget: 2,
            overlap: Overlap::Disjoint,
        };
        let sel = solve_l0_multi(&table, &zones, spec, &config).unwrap();
        assert!(sel.zone_ids.len() <= 1);
    }

    #[test]
    fn overlapping_selection_through_joint_fits() {
        let table = line_table(vec![9.0, 8.0, 7.0, 1.0, 1.0, 1.0]);
        let z1 = Zone::new(vec![0, 1]).unwrap();
        let z2 = Zone::new(vec![1, 2]).unwrap();
        let zones = ZoneSet::from_zones(6, vec![z1, z2]).unwrap();
        let spec = ModelSpec::parse("poisson-exp").unwrap();
        let config = L0Config {
            lambda: 0.5,
            budget: 2,
            overlap: Overlap::Allow,
        };
        let sel = solve_l0_multi(&table, &zones, spec, &config).unwrap();
        assert_eq!(sel.zone_ids.len(), 2);
    }
}
