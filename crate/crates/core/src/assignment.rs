//! Weak-to-strong pairing as a linear assignment problem.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::model::{Instance, LinkSelection, Pairing, Powers, Weights};
use crate::rates::{rate_relayed, rate_strong, rate_weak_direct};

/// `U[i][j]`: objective contribution of pairing weak `i` with strong `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UtilityMatrix(pub Vec<Vec<f64>>);

impl UtilityMatrix {
    pub fn size(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self, pairing: &Pairing) -> f64 {
        pairing.pairs().map(|(i, j)| self.0[i][j]).sum()
    }
}

/// Pair utilities for fixed per-user powers and link vector.
pub fn build_utility_matrix(
    inst: &Instance,
    powers: &Powers,
    links: &LinkSelection,
    weights: &Weights,
) -> Result<UtilityMatrix> {
    let k = inst.pair_count;
    let b_v = inst.vlc_bandwidth;
    let relayed = links.relayed_count();
    let mut u = vec![vec![0.0; k]; k];
    for (i, row) in u.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let (p_w, p_s) = (powers.weak[i], powers.strong[j]);
            let strong = weights.strong[j] * rate_strong(p_s, inst.psi_strong[j], b_v, k);
            let weak = if links.is_relayed(i) {
                let rf = inst.rf_rate(i, j, relayed)?;
                rate_relayed(p_w, p_s, inst.psi_strong[j], b_v, k, rf)
            } else {
                rate_weak_direct(p_w, p_s, inst.psi_weak[i], b_v, k)
            };
            *cell = strong + weights.weak[i] * weak;
        }
    }
    Ok(UtilityMatrix(u))
}

/// Maximum-utility assignment. Among optimal assignments the
/// lexicographically smallest one is returned.
pub fn hungarian_solve(u: &UtilityMatrix) -> Result<Pairing> {
    let n = u.size();
    for (i, row) in u.0.iter().enumerate() {
        if row.len() != n {
            return Err(contract(format!("utility row {i} has {} entries, expected {n}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(contract(format!("utility row {i} has a non-finite entry")));
        }
    }
    if n == 0 {
        return Pairing::new(Vec::new());
    }

    let rows: Vec<usize> = (0..n).collect();
    let cols: Vec<usize> = (0..n).collect();
    let (_, best) = max_assignment(&u.0, &rows, &cols);
    let tol = 1e-12 * best.abs().max(1.0) * n as f64;

    let mut sigma = Vec::with_capacity(n);
    let mut fixed = 0.0;
    let mut free_cols: Vec<usize> = cols;
    for i in 0..n {
        let rest_rows: Vec<usize> = ((i + 1)..n).collect();
        let mut chosen = None;
        for (pos, &j) in free_cols.iter().enumerate() {
            let rest_cols: Vec<usize> = free_cols.iter().copied().filter(|&c| c != j).collect();
            let (_, rest) = max_assignment(&u.0, &rest_rows, &rest_cols);
            if fixed + u.0[i][j] + rest >= best - tol {
                chosen = Some(pos);
                break;
            }
        }
        // The optimal column always survives the tolerance test.
        let pos = chosen.expect("an optimal completion exists");
        let j = free_cols.remove(pos);
        fixed += u.0[i][j];
        sigma.push(j);
    }
    Pairing::new(sigma)
}

/// Hungarian algorithm with potentials on the sub-matrix `rows × cols`
/// (equal lengths). Returns the column picked for each row and the total.
fn max_assignment(u: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> (Vec<usize>, f64) {
    let n = rows.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    // Costs relative to each row's maximum keep every entry non-negative.
    let cost: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| {
            let m = cols.iter().map(|&c| u[r][c]).fold(f64::NEG_INFINITY, f64::max);
            cols.iter().map(|&c| m - u[r][c]).collect()
        })
        .collect();

    // 1-based arrays; index 0 is the virtual start column.
    let mut pot_row = vec![0.0; n + 1];
    let mut pot_col = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for r in 1..=n {
        row_of_col[0] = r;
        let mut col = 0usize;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col] = true;
            let r0 = row_of_col[col];
            let mut delta = f64::INFINITY;
            let mut next = 0usize;
            for c in 1..=n {
                if used[c] {
                    continue;
                }
                let reduced = cost[r0 - 1][c - 1] - pot_row[r0] - pot_col[c];
                if reduced < min_to[c] {
                    min_to[c] = reduced;
                    way[c] = col;
                }
                if min_to[c] < delta {
                    delta = min_to[c];
                    next = c;
                }
            }
            for c in 0..=n {
                if used[c] {
                    pot_row[row_of_col[c]] += delta;
                    pot_col[c] -= delta;
                } else {
                    min_to[c] -= delta;
                }
            }
            col = next;
            if row_of_col[col] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col];
            row_of_col[col] = row_of_col[prev];
            col = prev;
            if col == 0 {
                break;
            }
        }
    }

    let mut assign = vec![0usize; n];
    for c in 1..=n {
        assign[row_of_col[c] - 1] = c - 1;
    }
    let total = assign.iter().enumerate().map(|(r, &c)| u[rows[r]][cols[c]]).sum();
    (assign.iter().map(|&c| cols[c]).collect(), total)
}
