//! Link selection for fixed powers and pairing.
//!
//! With powers and pairing held fixed, the objective only depends on which
//! weak users are relayed and on how many of them share the RF band. Row `k`
//! of the S matrix holds the weighted gain of relaying each weak user when
//! exactly `k + 1` links are relayed, so the best vector with `k + 1` relayed
//! links takes the top entries of that row.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Instance, LinkSelection, Pairing, Powers, Weights};
use crate::rates::{rate_relayed, rate_weak_direct, weighted_objective};

/// `rows[k][i]`: weighted relayed-minus-direct rate of weak `i` when `k + 1`
/// links share the RF band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SMatrix(pub Vec<Vec<f64>>);

impl SMatrix {
    /// Row for `relayed` simultaneous RF links (1-based).
    pub fn row(&self, relayed: usize) -> &[f64] {
        &self.0[relayed - 1]
    }
}

pub fn build_s_matrix(inst: &Instance, pairing: &Pairing, powers: &Powers, weights: &Weights) -> Result<SMatrix> {
    let k = inst.pair_count;
    let b_v = inst.vlc_bandwidth;
    let mut rows = Vec::with_capacity(k);
    for n_f in 1..=k {
        let mut row = vec![0.0; k];
        for (i, j) in pairing.pairs() {
            let (p_w, p_s) = (powers.weak[i], powers.strong[j]);
            let rf = inst.rf_rate(i, j, n_f)?;
            let relayed = rate_relayed(p_w, p_s, inst.psi_strong[j], b_v, k, rf);
            let direct = rate_weak_direct(p_w, p_s, inst.psi_weak[i], b_v, k);
            row[i] = weights.weak[i] * (relayed - direct);
        }
        rows.push(row);
    }
    Ok(SMatrix(rows))
}

/// Relays the `count` largest entries of `row`; ties go to the lower index.
pub fn top_k_candidate(row: &[f64], count: usize) -> LinkSelection {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    let mut x = vec![false; row.len()];
    for &i in &order[..count] {
        x[i] = true;
    }
    LinkSelection::new(x)
}

/// Best of the all-direct vector and the top-k candidate of every row under
/// the full weighted objective. Ties keep the candidate with fewer relayed
/// links.
pub fn select_links(
    s: &SMatrix,
    inst: &Instance,
    pairing: &Pairing,
    powers: &Powers,
    weights: &Weights,
) -> Result<LinkSelection> {
    let k = inst.pair_count;
    let mut best = LinkSelection::direct(k);
    let mut best_val = weighted_objective(inst, pairing, &best, powers, weights)?;
    for count in 1..=k {
        let candidate = top_k_candidate(s.row(count), count);
        let val = weighted_objective(inst, pairing, &candidate, powers, weights)?;
        if val > best_val {
            best = candidate;
            best_val = val;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ScenarioConfig;
    use crate::rates::PhyConstants;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_setup(rng: &mut ChaCha8Rng, users: usize, blockage: f64) -> (Instance, Pairing, Powers, Weights) {
        let cfg = ScenarioConfig { user_count: users, blockage_rate: blockage, ..Default::default() };
        let (_, inst) = Instance::sample(&cfg, &PhyConstants::default(), rng.random()).unwrap();
        let k = inst.pair_count;
        let mut sigma: Vec<usize> = (0..k).collect();
        sigma.shuffle(rng);
        let pairing = Pairing::new(sigma).unwrap();
        let mut powers = Powers::zeros(k);
        for (i, j) in pairing.pairs() {
            let q = inst.p_max / k as f64 * rng.random_range(0.2..1.8);
            let p_s = q * rng.random_range(0.0..0.5);
            powers.strong[j] = p_s;
            powers.weak[i] = q - p_s;
        }
        let weights = Weights {
            strong: (0..k).map(|_| rng.random_range(0.5..2.0)).collect(),
            weak: (0..k).map(|_| rng.random_range(0.5..2.0)).collect(),
        };
        (inst, pairing, powers, weights)
    }

    fn exhaustive(inst: &Instance, pairing: &Pairing, powers: &Powers, weights: &Weights) -> f64 {
        let k = inst.pair_count;
        (0..1u64 << k)
            .map(|m| weighted_objective(inst, pairing, &LinkSelection::from_mask(m, k), powers, weights).unwrap())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn single_pair_entry_and_choice() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (inst, pairing, powers, weights) = random_setup(&mut rng, 2, 0.0);
        let s = build_s_matrix(&inst, &pairing, &powers, &weights).unwrap();
        let rf = inst.rf_rate(0, 0, 1).unwrap();
        let relayed = rate_relayed(powers.weak[0], powers.strong[0], inst.psi_strong[0], inst.vlc_bandwidth, 1, rf);
        let direct = rate_weak_direct(powers.weak[0], powers.strong[0], inst.psi_weak[0], inst.vlc_bandwidth, 1);
        assert_eq!(s.0, vec![vec![weights.weak[0] * (relayed - direct)]]);
        let x = select_links(&s, &inst, &pairing, &powers, &weights).unwrap();
        assert_eq!(x.is_relayed(0), relayed > direct);
    }

    #[test]
    fn blocked_weak_users_have_non_negative_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let (mut inst, pairing, powers, weights) = random_setup(&mut rng, 6, 0.0);
            inst.psi_weak.iter_mut().for_each(|p| *p = 0.0);
            let s = build_s_matrix(&inst, &pairing, &powers, &weights).unwrap();
            assert!(s.0.iter().flatten().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn entries_match_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (inst, pairing, powers, weights) = random_setup(&mut rng, 6, 0.2);
        let s = build_s_matrix(&inst, &pairing, &powers, &weights).unwrap();
        let k = 3;
        for n_f in 1..=k {
            for (i, j) in pairing.pairs() {
                let with = {
                    let mut x = vec![false; k];
                    x[i] = true;
                    // pad the remaining relayed slots with other users so n_f links share the band
                    let mut others = (0..k).filter(|&o| o != i);
                    for _ in 1..n_f {
                        x[others.next().unwrap()] = true;
                    }
                    LinkSelection::new(x)
                };
                let report = crate::rates::RateReport::evaluate(&inst, &pairing, &with, &powers, &weights).unwrap();
                let direct =
                    rate_weak_direct(powers.weak[i], powers.strong[j], inst.psi_weak[i], inst.vlc_bandwidth, k);
                let expected = weights.weak[i] * (report.weak[i] - direct);
                assert!((s.row(n_f)[i] - expected).abs() <= 1e-9 * expected.abs().max(1.0));
            }
        }
    }

    #[test]
    fn candidates_have_k_ones() {
        let row = [3.0, -1.0, 3.0, 0.5, 0.5];
        for k in 0..=row.len() {
            assert_eq!(top_k_candidate(&row, k).relayed_count(), k);
        }
        assert_eq!(top_k_candidate(&row, 1).as_slice(), &[true, false, false, false, false]);
        assert_eq!(top_k_candidate(&row, 3).as_slice(), &[true, false, true, true, false]);
    }

    #[test]
    fn all_direct_when_direct_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (mut inst, pairing, powers, weights) = random_setup(&mut rng, 6, 0.0);
        inst.rf_gain.iter_mut().flatten().for_each(|g| *g = 0.0);
        let s = build_s_matrix(&inst, &pairing, &powers, &weights).unwrap();
        let x = select_links(&s, &inst, &pairing, &powers, &weights).unwrap();
        assert_eq!(x, LinkSelection::direct(3));
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..150 {
            let users = 2 * rng.random_range(1..=6);
            let blockage = rng.random_range(0.0..0.5);
            let (inst, pairing, powers, weights) = random_setup(&mut rng, users, blockage);
            let s = build_s_matrix(&inst, &pairing, &powers, &weights).unwrap();
            let x = select_links(&s, &inst, &pairing, &powers, &weights).unwrap();
            let got = weighted_objective(&inst, &pairing, &x, &powers, &weights).unwrap();
            assert_eq!(got, exhaustive(&inst, &pairing, &powers, &weights));
        }
    }

    #[test]
    fn permuting_pairs_permutes_the_choice() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let (inst, pairing, powers, weights) = random_setup(&mut rng, 8, 0.2);
            let k = inst.pair_count;
            let x = select_links(
                &build_s_matrix(&inst, &pairing, &powers, &weights).unwrap(),
                &inst,
                &pairing,
                &powers,
                &weights,
            )
            .unwrap();

            // relabel weak slots by a permutation pi: new slot a holds old weak pi[a]
            let mut pi: Vec<usize> = (0..k).collect();
            pi.shuffle(&mut rng);
            let mut permuted = inst.clone();
            permuted.psi_weak = pi.iter().map(|&o| inst.psi_weak[o]).collect();
            permuted.rf_gain = pi.iter().map(|&o| inst.rf_gain[o].clone()).collect();
            permuted.classes.weak = pi.iter().map(|&o| inst.classes.weak[o]).collect();
            let p2 = Pairing::new(pi.iter().map(|&o| pairing.strong_of(o)).collect()).unwrap();
            let pw2 = Powers { strong: powers.strong.clone(), weak: pi.iter().map(|&o| powers.weak[o]).collect() };
            let w2 = Weights { strong: weights.strong.clone(), weak: pi.iter().map(|&o| weights.weak[o]).collect() };
            let x2 =
                select_links(&build_s_matrix(&permuted, &p2, &pw2, &w2).unwrap(), &permuted, &p2, &pw2, &w2).unwrap();
            let expected: Vec<bool> = pi.iter().map(|&o| x.is_relayed(o)).collect();
            assert_eq!(x2.as_slice(), expected.as_slice());
        }
    }
}
