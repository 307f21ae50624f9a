//! Joint optimizer, comparators and proportional-fair weight updates.
//!
//! [`co_noma_solve`] alternates three steps on the same weighted objective:
//! power allocation for the current pairing and links, Hungarian re-pairing
//! for the resulting powers, and link selection for the new pairing. Each
//! accepted iterate improves the objective; the loop stops at a fixpoint,
//! when the gain falls under the relative tolerance, or after the iteration
//! cap.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assignment::{build_utility_matrix, hungarian_solve};
use crate::error::{Error, Result};
use crate::links::{build_s_matrix, select_links};
use crate::model::{Instance, LinkSelection, Pairing, Weights};
use crate::power::{allocate, PowerSolution};
use crate::rates::RateReport;

/// Largest pair count accepted by [`exhaustive_solve`].
pub const EXHAUSTIVE_MAX_PAIRS: usize = 6;

/// Floor on long-term average rates before taking reciprocals, bit/s.
pub const RATE_FLOOR: f64 = 1.0;

/// Factor that keeps a strong user's weight just below its partner's.
pub const STRONG_WEIGHT_FACTOR: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CoNoma,
    Noma,
    Baseline2,
    Exhaustive,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::CoNoma, Method::Noma, Method::Baseline2, Method::Exhaustive];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::CoNoma => "co-noma",
            Method::Noma => "noma",
            Method::Baseline2 => "baseline2",
            Method::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.as_str() == s.trim()).ok_or_else(|| {
            Error::Config(format!("unknown method `{s}` (expected co-noma, noma, baseline2 or exhaustive)"))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Minimum relative objective gain for another pass.
    pub tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_iterations: 50, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub pairing: Pairing,
    pub links: LinkSelection,
    pub power: PowerSolution,
    pub rates: RateReport,
    /// Rates indexed by original user id.
    pub user_rates: Vec<f64>,
    pub objective: f64,
    /// Objective of every accepted iterate, starting with the initial one.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Candidate iterates discarded because they lowered the objective.
    pub rejected: usize,
}

impl SolveReport {
    fn build(
        method: Method,
        inst: &Instance,
        weights: &Weights,
        pairing: Pairing,
        links: LinkSelection,
        power: PowerSolution,
    ) -> Result<Self> {
        let rates = RateReport::evaluate(inst, &pairing, &links, &power.powers, weights)?;
        let user_rates = rates.by_user(inst);
        let objective = rates.weighted;
        Ok(Self {
            method,
            pairing,
            links,
            power,
            rates,
            user_rates,
            objective,
            trace: vec![objective],
            iterations: 0,
            converged: true,
            rejected: 0,
        })
    }

    pub fn sum_rate(&self) -> f64 {
        self.rates.sum_rate()
    }

    /// Whether the recorded trace never decreases.
    pub fn trace_is_monotone(&self) -> bool {
        self.trace.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Opposite-rank pairing: the best strong user takes the worst weak user.
pub fn opposite_rank_pairing(k: usize) -> Pairing {
    Pairing::new((0..k).map(|i| k - 1 - i).collect()).expect("reversal is a permutation")
}

/// Power allocation that tolerates realizations without any optical coverage.
pub fn allocate_or_idle(
    inst: &Instance,
    pairing: &Pairing,
    links: &LinkSelection,
    weights: &Weights,
) -> Result<PowerSolution> {
    if inst.psi_strong.iter().all(|&p| p == 0.0) {
        log::debug!("no strong user has an optical channel; splitting power evenly");
        return Ok(PowerSolution::even_split(pairing, inst.p_max));
    }
    allocate(inst, pairing, links, weights)
}

/// Links of the baseline start: exactly the weak users without an optical
/// channel are relayed.
pub fn blocked_relay_links(inst: &Instance) -> LinkSelection {
    LinkSelection::new(inst.psi_weak.iter().map(|&p| p == 0.0).collect())
}

/// Alternating optimization from the opposite-rank pairing, relaying only
/// the weak users without an optical channel.
///
/// Starting such a user on the direct link would leave it with zero power,
/// and at zero power relaying shows no gain, so it would never be served.
pub fn co_noma_solve(inst: &Instance, weights: &Weights, opts: &SolveOptions) -> Result<SolveReport> {
    co_noma_from(inst, weights, opts, opposite_rank_pairing(inst.pair_count), blocked_relay_links(inst))
}

/// Alternating optimization from a given configuration.
pub fn co_noma_from(
    inst: &Instance,
    weights: &Weights,
    opts: &SolveOptions,
    pairing: Pairing,
    links: LinkSelection,
) -> Result<SolveReport> {
    alternate(Method::CoNoma, inst, weights, opts, pairing, links, true)
}

/// NOMA comparator: the same alternation with every link pinned to direct.
pub fn noma_solve(inst: &Instance, weights: &Weights, opts: &SolveOptions) -> Result<SolveReport> {
    let k = inst.pair_count;
    alternate(Method::Noma, inst, weights, opts, opposite_rank_pairing(k), LinkSelection::direct(k), false)
}

fn alternate(
    method: Method,
    inst: &Instance,
    weights: &Weights,
    opts: &SolveOptions,
    pairing: Pairing,
    links: LinkSelection,
    select: bool,
) -> Result<SolveReport> {
    let power = allocate_or_idle(inst, &pairing, &links, weights)?;
    let mut best = SolveReport::build(method, inst, weights, pairing, links, power)?;
    best.converged = false;
    for _ in 0..opts.max_iterations {
        best.iterations += 1;
        let powers = &best.power.powers;
        let pairing = hungarian_solve(&build_utility_matrix(inst, powers, &best.links, weights)?)?;
        let links = if select {
            select_links(&build_s_matrix(inst, &pairing, powers, weights)?, inst, &pairing, powers, weights)?
        } else {
            best.links.clone()
        };
        if pairing == best.pairing && links == best.links {
            best.converged = true;
            break;
        }
        let power = allocate_or_idle(inst, &pairing, &links, weights)?;
        let candidate = SolveReport::build(method, inst, weights, pairing, links, power)?;
        let gain = candidate.objective - best.objective;
        if gain < 0.0 {
            best.rejected += 1;
            best.converged = true;
            break;
        }
        let small = gain <= opts.tolerance * best.objective.abs();
        let mut trace = std::mem::take(&mut best.trace);
        trace.push(candidate.objective);
        let (iterations, rejected) = (best.iterations, best.rejected);
        best = SolveReport { trace, iterations, rejected, converged: small, ..candidate };
        if small {
            break;
        }
    }
    Ok(best)
}

/// Opposite-rank pairing, relaying exactly the weak users without an
/// optical channel, one power allocation.
pub fn baseline2_solve(inst: &Instance, weights: &Weights) -> Result<SolveReport> {
    let k = inst.pair_count;
    let pairing = opposite_rank_pairing(k);
    let links = blocked_relay_links(inst);
    let power = allocate_or_idle(inst, &pairing, &links, weights)?;
    SolveReport::build(Method::Baseline2, inst, weights, pairing, links, power)
}

/// Best configuration over every pairing and link vector, each with the
/// closed-form power allocation.
pub fn exhaustive_solve(inst: &Instance, weights: &Weights) -> Result<SolveReport> {
    let k = inst.pair_count;
    if k > EXHAUSTIVE_MAX_PAIRS {
        return Err(Error::TooLarge { pairs: k, max: EXHAUSTIVE_MAX_PAIRS });
    }
    let mut best: Option<SolveReport> = None;
    let mut evaluated = 0;
    for sigma in permutations(k) {
        let pairing = Pairing::new(sigma)?;
        for mask in 0..1u64 << k {
            let links = LinkSelection::from_mask(mask, k);
            let power = allocate_or_idle(inst, &pairing, &links, weights)?;
            let report = SolveReport::build(Method::Exhaustive, inst, weights, pairing.clone(), links, power)?;
            evaluated += 1;
            if best.as_ref().is_none_or(|b| report.objective > b.objective) {
                best = Some(report);
            }
        }
    }
    let mut best = best.expect("at least one configuration");
    best.iterations = evaluated;
    Ok(best)
}

/// Permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).expect("successor exists");
        current.swap(i - 1, j);
        current[i..].reverse();
    }
}

pub fn solve(method: Method, inst: &Instance, weights: &Weights, opts: &SolveOptions) -> Result<SolveReport> {
    match method {
        Method::CoNoma => co_noma_solve(inst, weights, opts),
        Method::Noma => noma_solve(inst, weights, opts),
        Method::Baseline2 => baseline2_solve(inst, weights),
        Method::Exhaustive => exhaustive_solve(inst, weights),
    }
}

/// Objective weights together with the long-term average rates behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub weights: Weights,
    pub average_strong: Vec<f64>,
    pub average_weak: Vec<f64>,
    /// Smoothing horizon of the moving average, in updates.
    pub horizon: f64,
    pub updates: usize,
}

impl WeightSet {
    pub fn new(k: usize, horizon: f64) -> Self {
        Self {
            weights: Weights::uniform(k),
            average_strong: vec![0.0; k],
            average_weak: vec![0.0; k],
            horizon,
            updates: 0,
        }
    }
}

/// Folds the rates of `report` into the averages and derives new weights.
/// The first update adopts the rates as the averages.
pub fn update_weights(inst: &Instance, report: &SolveReport, set: &WeightSet) -> WeightSet {
    let blend = |avg: &[f64], rates: &[f64]| -> Vec<f64> {
        if set.updates == 0 {
            return rates.to_vec();
        }
        let a = 1.0 / set.horizon;
        avg.iter().zip(rates).map(|(m, r)| (1.0 - a) * m + a * r).collect()
    };
    let average_strong = blend(&set.average_strong, &report.rates.strong);
    let average_weak = blend(&set.average_weak, &report.rates.weak);
    let mut weights = Weights {
        strong: average_strong.iter().map(|r| 1.0 / r.max(RATE_FLOOR)).collect(),
        weak: average_weak.iter().map(|r| 1.0 / r.max(RATE_FLOOR)).collect(),
    };
    for (i, j) in report.pairing.pairs() {
        let (w_s, w_w) = (weights.strong[j], weights.weak[i]);
        let (psi_s, psi_w) = (inst.psi_strong[j], inst.psi_weak[i]);
        let starved_strong = average_strong[j] < average_weak[i];
        let no_interior = !report.links.is_relayed(i) && psi_w > 0.0 && w_w / w_s >= psi_s / psi_w;
        if starved_strong || no_interior {
            weights.strong[j] = STRONG_WEIGHT_FACTOR * w_w;
        }
    }
    WeightSet { weights, average_strong, average_weak, horizon: set.horizon, updates: set.updates + 1 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FairnessOptions {
    pub max_updates: usize,
    /// Stop once no weight moves by more than this relative amount.
    pub tolerance: f64,
    pub horizon: f64,
}

impl Default for FairnessOptions {
    fn default() -> Self {
        Self { max_updates: 100, tolerance: 1e-6, horizon: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairReport {
    /// Solve at the last weight set.
    pub last: SolveReport,
    /// Per-user rates averaged over every solve of the run.
    pub mean_rates: Vec<f64>,
    pub solves: usize,
    pub converged: bool,
    /// Solves whose objective trace decreased somewhere.
    pub trace_violations: usize,
}

impl FairReport {
    pub fn sum_rate(&self) -> f64 {
        self.mean_rates.iter().sum()
    }
}

/// Repeated solves with proportional-fair weights, starting from unit weights.
pub fn solve_proportional_fair(
    method: Method,
    inst: &Instance,
    opts: &SolveOptions,
    fair: &FairnessOptions,
) -> Result<FairReport> {
    let mut set = WeightSet::new(inst.pair_count, fair.horizon);
    let mut totals = vec![0.0; inst.user_count()];
    let mut solves = 0;
    let mut violations = 0;
    let mut converged = false;
    let mut last = None;
    for _ in 0..fair.max_updates.max(1) {
        let report = solve(method, inst, &set.weights, opts)?;
        solves += 1;
        violations += usize::from(!report.trace_is_monotone());
        totals.iter_mut().zip(&report.user_rates).for_each(|(t, r)| *t += r);
        let next = update_weights(inst, &report, &set);
        let change = relative_change(&set.weights, &next.weights);
        last = Some(report);
        set = next;
        if change < fair.tolerance {
            converged = true;
            break;
        }
    }
    let mean_rates = totals.iter().map(|t| t / solves as f64).collect();
    Ok(FairReport {
        last: last.expect("at least one solve"),
        mean_rates,
        solves,
        converged,
        trace_violations: violations,
    })
}

fn relative_change(a: &Weights, b: &Weights) -> f64 {
    a.strong
        .iter()
        .zip(&b.strong)
        .chain(a.weak.iter().zip(&b.weak))
        .map(|(x, y)| (x - y).abs() / x.abs())
        .fold(0.0, f64::max)
}
