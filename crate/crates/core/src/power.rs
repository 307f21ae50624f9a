//! Closed-form power allocation for a fixed pairing and link selection.
//!
//! Each pair receives a budget `q` from a waterfilling rule
//! `q = [w·B_v/(2Kλ) − 1/Ψ_s]⁺` with the dual level `λ` set so the budgets
//! exhaust `P_max`. Inside a pair the budget is split between the strong and
//! the weak message:
//!
//! * relayed pairs use the equal-rate split `η₁`, or `η₂` when the RF hop
//!   cannot carry the equal-rate weak message;
//! * direct pairs use the stationary point `Ω` of the weighted pair rate when
//!   it is a valid interior maximum, and the best boundary point otherwise;
//! * a direct pair whose weak user has no optical channel gives everything to
//!   the strong user.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};
use crate::model::{Instance, LinkSelection, Pairing, Powers, Weights};
use crate::rates::{rate_strong, rate_weak_at_strong, rate_weak_direct};

/// How a pair's budget was split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairCase {
    /// Relayed, equal strong and weak rates (`η₁`).
    RelayedEqualRate,
    /// Relayed, weak rate pinned to the RF rate (`η₂`).
    RelayedRfCapped,
    /// Direct, interior stationary point `Ω`.
    DirectInterior,
    /// Direct, best of the boundary candidates.
    DirectBoundary,
    /// Direct with an unreachable weak user: `P_s = q`.
    BlockedAllToStrong,
    /// Zero budget from the waterfilling cut-off.
    Idle,
}

/// Equal-rate strong power `(−1 + √(1 + qΨ)) / Ψ`, written in a form that
/// does not cancel for small `qΨ`.
pub fn eta1(q: f64, psi_s: f64) -> f64 {
    q / (1.0 + (1.0 + q * psi_s).sqrt())
}

/// Strong power that makes the decode-at-strong weak rate equal `rf_rate`:
/// `(qΨ + 1 − A) / (AΨ)` with `A = 2^(2·rf_rate·K/B_v)`.
pub fn eta2(q: f64, psi_s: f64, rf_rate: f64, b_v: f64, k: usize) -> f64 {
    let a = (2.0 * rf_rate * k as f64 / b_v).exp2();
    (q * psi_s + 1.0 - a) / (a * psi_s)
}

/// Stationary point of `w_s·R_s + w_w·R_DL` in the strong power.
pub fn omega(psi_s: f64, psi_w: f64, w_s: f64, w_w: f64) -> f64 {
    (w_w * psi_w - w_s * psi_s) / (psi_s * psi_w * (w_s - w_w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Case1Split {
    pub strong: f64,
    pub weak: f64,
    /// Rate delivered to the weak user, `min(R_RF, R_{j→i})`.
    pub weak_rate: f64,
    pub case: PairCase,
    /// The closed form fell outside `[0, q/2]` and was clamped.
    pub clamped: bool,
}

/// Budget split for a relayed pair.
pub fn case1_split(q: f64, psi_s: f64, rf_rate: f64, b_v: f64, k: usize) -> Result<Case1Split> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(domain(format!("pair budget {q} must be finite and non-negative")));
    }
    if q == 0.0 {
        return Ok(Case1Split { strong: 0.0, weak: 0.0, weak_rate: 0.0, case: PairCase::Idle, clamped: false });
    }
    if !(psi_s > 0.0) {
        return Err(contract("relayed pair with a strong user that has no optical channel"));
    }
    let equal = eta1(q, psi_s);
    let equal_rate = rate_weak_at_strong(q - equal, equal, psi_s, b_v, k);
    if equal_rate <= rf_rate {
        return Ok(Case1Split {
            strong: equal,
            weak: q - equal,
            weak_rate: equal_rate,
            case: PairCase::RelayedEqualRate,
            clamped: false,
        });
    }
    let raw = eta2(q, psi_s, rf_rate, b_v, k);
    let strong = raw.clamp(0.0, q / 2.0);
    let clamped = strong != raw;
    if clamped {
        log::debug!("eta2 = {raw:e} clamped into [0, {:e}]", q / 2.0);
    }
    let weak = q - strong;
    let weak_rate = rf_rate.min(rate_weak_at_strong(weak, strong, psi_s, b_v, k));
    Ok(Case1Split { strong, weak, weak_rate, case: PairCase::RelayedRfCapped, clamped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Case2Split {
    pub strong: f64,
    pub weak: f64,
    pub case: PairCase,
}

/// Weighted rate of a direct pair when the strong message gets `p_s` of `q`.
#[allow(clippy::too_many_arguments)]
pub fn case2_objective(p_s: f64, q: f64, psi_s: f64, psi_w: f64, w_s: f64, w_w: f64, b_v: f64, k: usize) -> f64 {
    w_s * rate_strong(p_s, psi_s, b_v, k) + w_w * rate_weak_direct(q - p_s, p_s, psi_w, b_v, k)
}

/// Budget split for a direct pair.
#[allow(clippy::too_many_arguments)]
pub fn case2_split(q: f64, psi_s: f64, psi_w: f64, w_s: f64, w_w: f64, b_v: f64, k: usize) -> Result<Case2Split> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(domain(format!("pair budget {q} must be finite and non-negative")));
    }
    if q == 0.0 {
        return Ok(Case2Split { strong: 0.0, weak: 0.0, case: PairCase::Idle });
    }
    if psi_w == 0.0 {
        return Ok(Case2Split { strong: q, weak: 0.0, case: PairCase::BlockedAllToStrong });
    }
    if !(psi_s >= psi_w) {
        return Err(contract(format!("strong coefficient {psi_s:e} below weak coefficient {psi_w:e}")));
    }

    let root = omega(psi_s, psi_w, w_s, w_w);
    let valid = w_w / w_s < psi_s / psi_w && root.is_finite() && root >= 0.0 && q > 2.0 * root;
    if valid {
        return Ok(Case2Split { strong: root, weak: q - root, case: PairCase::DirectInterior });
    }

    let f = |p: f64| case2_objective(p, q, psi_s, psi_w, w_s, w_w, b_v, k);
    let mut candidates = vec![q / 2.0, 0.0];
    if root.is_finite() {
        candidates.push(root.clamp(0.0, q / 2.0));
    }
    let mut best = candidates[0];
    let mut best_val = f(best);
    for &p in &candidates[1..] {
        let v = f(p);
        if v > best_val {
            best = p;
            best_val = v;
        }
    }
    Ok(Case2Split { strong: best, weak: q - best, case: PairCase::DirectBoundary })
}

/// Input to the budget waterfilling: the pair's weight and strong coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaterfillEntry {
    pub weight: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBudgets {
    pub q: Vec<f64>,
    /// Dual level in the closed form `q = [w·B_v/(2Kλ) − 1/Ψ]⁺`.
    pub lambda: f64,
}

impl PairBudgets {
    /// Multiplier of the power constraint for the bit-rate objective; the
    /// closed form absorbs the `1/ln 2` of the log2 rates into `λ`.
    pub fn lambda_bits(&self) -> f64 {
        self.lambda / LN_2
    }
}

/// Solves `Σ [w_n·L − 1/Ψ_n]⁺ = P_max` for the water level `L = B_v/(2Kλ)`.
///
/// Pairs are activated in increasing order of their cut-off level
/// `1/(w_n Ψ_n)` (ties by index) and the level is solved in closed form for
/// each candidate active set. A bisection on the level backs this up if
/// rounding breaks the budget identity.
pub fn waterfill(entries: &[WaterfillEntry], b_v: f64, k: usize, p_max: f64) -> Result<PairBudgets> {
    if !(p_max > 0.0) || !p_max.is_finite() {
        return Err(domain(format!("power budget {p_max} must be positive")));
    }
    let serviceable: Vec<usize> = (0..entries.len())
        .filter(|&n| {
            let e = entries[n];
            e.psi > 0.0 && e.weight > 0.0 && e.psi.is_finite() && e.weight.is_finite()
        })
        .collect();
    if serviceable.is_empty() {
        return Err(contract("no pair has a serviceable strong user"));
    }

    let cutoff = |n: usize| 1.0 / (entries[n].weight * entries[n].psi);
    let mut order = serviceable;
    order.sort_by(|&a, &b| cutoff(a).total_cmp(&cutoff(b)).then(a.cmp(&b)));

    let mut inv_sum = 0.0;
    let mut w_sum = 0.0;
    let mut level = f64::NAN;
    for (m, &n) in order.iter().enumerate() {
        inv_sum += 1.0 / entries[n].psi;
        w_sum += entries[n].weight;
        let candidate = (p_max + inv_sum) / w_sum;
        if m + 1 == order.len() || candidate <= cutoff(order[m + 1]) {
            level = candidate;
            break;
        }
    }

    let budgets = |level: f64| -> Vec<f64> {
        entries
            .iter()
            .map(|e| if e.psi > 0.0 && e.weight > 0.0 { (e.weight * level - 1.0 / e.psi).max(0.0) } else { 0.0 })
            .collect()
    };
    let mut q = budgets(level);
    let total: f64 = q.iter().sum();
    if !((total - p_max).abs() <= 1e-12 * p_max) {
        log::debug!("active-set level off by {:e}; bisecting", total - p_max);
        level = bisect_level(&order, entries, p_max);
        q = budgets(level);
    }
    Ok(PairBudgets { q, lambda: b_v / (2.0 * k as f64 * level) })
}

fn bisect_level(active: &[usize], entries: &[WaterfillEntry], p_max: f64) -> f64 {
    let spent = |level: f64| -> f64 {
        active.iter().map(|&n| (entries[n].weight * level - 1.0 / entries[n].psi).max(0.0)).sum()
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while spent(hi) < p_max {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spent(mid) < p_max {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Weight used by the budget rule: the strong user's when the weak user is
/// relayed or unreachable, the weak user's otherwise.
pub fn budget_weight(relayed: bool, psi_w: f64, w_s: f64, w_w: f64) -> f64 {
    if relayed || psi_w == 0.0 {
        w_s
    } else {
        w_w
    }
}

pub fn waterfill_budgets(
    inst: &Instance,
    pairing: &Pairing,
    links: &LinkSelection,
    weights: &Weights,
) -> Result<PairBudgets> {
    let entries: Vec<WaterfillEntry> = pairing
        .pairs()
        .map(|(i, j)| WaterfillEntry {
            weight: budget_weight(links.is_relayed(i), inst.psi_weak[i], weights.strong[j], weights.weak[i]),
            psi: inst.psi_strong[j],
        })
        .collect();
    waterfill(&entries, inst.vlc_bandwidth, inst.pair_count, inst.p_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAllocation {
    pub weak: usize,
    pub strong: usize,
    pub budget: f64,
    pub strong_power: f64,
    pub weak_power: f64,
    pub case: PairCase,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSolution {
    /// One entry per weak user, in weak order.
    pub pairs: Vec<PairAllocation>,
    pub lambda: f64,
    pub powers: Powers,
}

impl PowerSolution {
    pub fn total_power(&self) -> f64 {
        self.pairs.iter().map(|p| p.strong_power + p.weak_power).sum()
    }

    /// Even split used when no strong user can be served at all; every rate is zero.
    pub fn even_split(pairing: &Pairing, p_max: f64) -> Self {
        let k = pairing.len();
        let q = p_max / k as f64;
        let mut powers = Powers::zeros(k);
        let pairs = pairing
            .pairs()
            .map(|(i, j)| {
                powers.weak[i] = q / 2.0;
                powers.strong[j] = q / 2.0;
                PairAllocation {
                    weak: i,
                    strong: j,
                    budget: q,
                    strong_power: q / 2.0,
                    weak_power: q / 2.0,
                    case: PairCase::Idle,
                    clamped: false,
                }
            })
            .collect();
        Self { pairs, lambda: f64::INFINITY, powers }
    }
}

/// Power allocation for a fixed pairing and link vector.
pub fn allocate(inst: &Instance, pairing: &Pairing, links: &LinkSelection, weights: &Weights) -> Result<PowerSolution> {
    let k = inst.pair_count;
    if pairing.len() != k || links.len() != k {
        return Err(contract("pairing or link vector does not match the pair count"));
    }
    let budgets = waterfill_budgets(inst, pairing, links, weights)?;
    let b_v = inst.vlc_bandwidth;
    let relayed = links.relayed_count();
    let mut powers = Powers::zeros(k);
    let mut pairs = Vec::with_capacity(k);
    for (i, j) in pairing.pairs() {
        let q = budgets.q[i];
        let (strong_power, weak_power, case, clamped) = if links.is_relayed(i) {
            let rf = inst.rf_rate(i, j, relayed)?;
            let s = case1_split(q, inst.psi_strong[j], rf, b_v, k)?;
            (s.strong, s.weak, s.case, s.clamped)
        } else {
            let s = case2_split(q, inst.psi_strong[j], inst.psi_weak[i], weights.strong[j], weights.weak[i], b_v, k)?;
            (s.strong, s.weak, s.case, false)
        };
        powers.strong[j] = strong_power;
        powers.weak[i] = weak_power;
        pairs.push(PairAllocation { weak: i, strong: j, budget: q, strong_power, weak_power, case, clamped });
    }
    Ok(PowerSolution { pairs, lambda: budgets.lambda, powers })
}
