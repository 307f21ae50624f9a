//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use conoma::assignment::{hungarian_solve, UtilityMatrix};
use conoma::channel::ScenarioConfig;
use conoma::links::{build_s_matrix, select_links};
use conoma::model::{Instance, LinkSelection, Pairing, Powers, Weights};
use conoma::power::{case1_split, case2_objective, case2_split, eta1, omega, waterfill, PairCase, WaterfillEntry};
use conoma::rates::{rate_strong, rate_weak_at_strong, weighted_objective, PhyConstants};
use conoma::sim::{run_sweep, Axis, SweepConfig, SweepResult, Weighting};
use conoma::solver::{co_noma_solve, exhaustive_solve, Method, SolveOptions};

const BV: f64 = 20e6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: u32, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = out.pass && in_time;
    println!(
        "criterion {id:>2}: {} | {} | {:.2?} (limit {:?}{})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed,
        limit,
        if in_time { "" } else { ", exceeded" }
    );
    pass
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo..hi))
}

fn equal_rate() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let q = log_uniform(&mut rng, -5.0, -1.0);
        let psi = log_uniform(&mut rng, 2.0, 8.0);
        let k = rng.random_range(1..=8);
        let s = case1_split(q, psi, f64::INFINITY, BV, k).unwrap();
        let r_s = rate_strong(s.strong, psi, BV, k);
        let r_w = rate_weak_at_strong(s.weak, s.strong, psi, BV, k);
        worst = worst.max((r_s - r_w).abs() / r_s.max(r_w));
    }
    Outcome { pass: worst <= 1e-9, detail: format!("max relative gap {worst:.2e}") }
}

fn rf_cap() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    let mut triggered = 0;
    while triggered < 10_000 {
        let q = log_uniform(&mut rng, -5.0, -1.0);
        let psi = log_uniform(&mut rng, 2.0, 8.0);
        let k = rng.random_range(1..=8);
        let p1 = eta1(q, psi);
        let equal = rate_weak_at_strong(q - p1, p1, psi, BV, k);
        let half = rate_weak_at_strong(q / 2.0, q / 2.0, psi, BV, k);
        let rf = half + rng.random_range(0.0..1.0) * (equal - half);
        let s = case1_split(q, psi, rf, BV, k).unwrap();
        if s.case != PairCase::RelayedRfCapped || s.clamped {
            continue;
        }
        triggered += 1;
        let r = rate_weak_at_strong(s.weak, s.strong, psi, BV, k);
        worst = worst.max((r - rf).abs() / rf);
    }
    Outcome { pass: worst <= 1e-9, detail: format!("{triggered} capped draws, max relative gap {worst:.2e}") }
}

fn waterfilling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let p_max = 0.01;
    let (mut worst_sum, mut worst_q) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let k = rng.random_range(1..=8);
        let entries: Vec<WaterfillEntry> = (0..k)
            .map(|_| WaterfillEntry {
                weight: log_uniform(&mut rng, -8.5, -6.5),
                psi: if rng.random_bool(0.1) { 0.0 } else { log_uniform(&mut rng, 2.0, 7.0) },
            })
            .collect();
        if entries.iter().all(|e| e.psi == 0.0) {
            continue;
        }
        let got = waterfill(&entries, BV, k, p_max).unwrap();
        worst_sum = worst_sum.max((got.q.iter().sum::<f64>() - p_max).abs() / p_max);

        // bisection on the dual variable itself
        let c = BV / (2.0 * k as f64);
        let q_at = |lambda: f64| -> Vec<f64> {
            entries
                .iter()
                .map(|e| if e.psi > 0.0 { (e.weight * c / lambda - 1.0 / e.psi).max(0.0) } else { 0.0 })
                .collect()
        };
        let (mut lo, mut hi) = (1e-300f64, 1e300f64);
        for _ in 0..4000 {
            let mid = (lo * hi).sqrt();
            if q_at(mid).iter().sum::<f64>() > p_max {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        for (a, b) in got.q.iter().zip(q_at((lo * hi).sqrt())) {
            worst_q = worst_q.max((a - b).abs());
        }
    }
    Outcome {
        pass: worst_sum <= 1e-9 && worst_q <= 1e-9,
        detail: format!("budget gap {worst_sum:.2e}·P_max, max |q - oracle| {worst_q:.2e}"),
    }
}

fn case2_root() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let (mut worst_station, mut grid_losses, mut draws) = (0.0f64, 0, 0);
    while draws < 1000 {
        let psi_s = log_uniform(&mut rng, 4.0, 7.0);
        let psi_w = psi_s * rng.random_range(0.01..0.9);
        let w_s = rng.random_range(0.2..2.0);
        let w_w = w_s * rng.random_range(1.0..psi_s / psi_w);
        let root = omega(psi_s, psi_w, w_s, w_w);
        if !(root.is_finite() && root >= 0.0) {
            continue;
        }
        let q = 2.0 * root * rng.random_range(1.01..20.0);
        let k = rng.random_range(1..=8);
        let s = case2_split(q, psi_s, psi_w, w_s, w_w, BV, k).unwrap();
        if s.case != PairCase::DirectInterior {
            continue;
        }
        draws += 1;
        // derivative of the weighted pair rate in P_s, up to the common prelog
        let gain = w_s * psi_s / (1.0 + s.strong * psi_s);
        let loss = w_w * psi_w / (1.0 + s.strong * psi_w);
        worst_station = worst_station.max((gain - loss).abs() / gain.max(loss));
        let f = |p: f64| case2_objective(p, q, psi_s, psi_w, w_s, w_w, BV, k);
        let at_root = f(s.strong);
        let grid = (0..200).map(|g| f(q / 2.0 * g as f64 / 199.0)).fold(f64::NEG_INFINITY, f64::max);
        if at_root < grid - 1e-12 * grid.abs() {
            grid_losses += 1;
        }
    }
    Outcome {
        pass: worst_station <= 1e-8 && grid_losses == 0,
        detail: format!("max stationarity residual {worst_station:.2e}, {grid_losses} grid wins"),
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn hungarian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=6);
        let u = UtilityMatrix((0..k).map(|_| (0..k).map(|_| log_uniform(&mut rng, 5.0, 8.0)).collect()).collect());
        let got = u.total(&hungarian_solve(&u).unwrap());
        let best = permutations(k)
            .into_iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| u.0[i][j]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        mismatches += usize::from(got != best);
    }
    Outcome { pass: mismatches == 0, detail: format!("{mismatches} of 1000 differ from enumeration") }
}

fn random_instance(rng: &mut ChaCha8Rng, users: usize) -> Instance {
    let cfg = ScenarioConfig {
        user_count: users,
        blockage_rate: rng.random_range(0.0..0.5),
        rf: conoma::channel::RfParams { shadowing: true, ..Default::default() },
        ..Default::default()
    };
    Instance::sample(&cfg, &PhyConstants::default(), rng.random()).unwrap().1
}

fn link_selection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut mismatches = 0;
    for _ in 0..500 {
        let k = rng.random_range(1..=8);
        let inst = random_instance(&mut rng, 2 * k);
        let mut sigma: Vec<usize> = (0..k).collect();
        rand::seq::SliceRandom::shuffle(sigma.as_mut_slice(), &mut rng);
        let pairing = Pairing::new(sigma).unwrap();
        let mut powers = Powers::zeros(k);
        for (i, j) in pairing.pairs() {
            let q = inst.p_max / k as f64 * rng.random_range(0.1..1.9);
            let s = q * rng.random_range(0.0..0.5);
            powers.strong[j] = s;
            powers.weak[i] = q - s;
        }
        let weights = Weights {
            strong: (0..k).map(|_| rng.random_range(0.3..3.0)).collect(),
            weak: (0..k).map(|_| rng.random_range(0.3..3.0)).collect(),
        };
        let s = build_s_matrix(&inst, &pairing, &powers, &weights).unwrap();
        let x = select_links(&s, &inst, &pairing, &powers, &weights).unwrap();
        let got = weighted_objective(&inst, &pairing, &x, &powers, &weights).unwrap();
        let best = (0..1u64 << k)
            .map(|m| weighted_objective(&inst, &pairing, &LinkSelection::from_mask(m, k), &powers, &weights).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        mismatches += usize::from(got != best);
    }
    Outcome { pass: mismatches == 0, detail: format!("{mismatches} of 500 differ from enumeration") }
}

fn joint_quality(violations: &mut usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let opts = SolveOptions::default();
    let mut close = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let k = rng.random_range(1..=3);
        let cfg = ScenarioConfig {
            user_count: 2 * k,
            rf: conoma::channel::RfParams { shadowing: true, ..Default::default() },
            ..Default::default()
        };
        let (_, inst) = Instance::sample(&cfg, &PhyConstants::default(), rng.random()).unwrap();
        let w = Weights::uniform(k);
        let co = co_noma_solve(&inst, &w, &opts).unwrap();
        *violations += usize::from(!co.trace_is_monotone());
        let best = exhaustive_solve(&inst, &w).unwrap().objective;
        let ratio = if best > 0.0 { co.objective / best } else { 1.0 };
        worst = worst.min(ratio);
        close += usize::from(ratio >= 0.98);
    }
    Outcome { pass: close >= 190, detail: format!("{close}/200 within 2% of exhaustive, worst ratio {worst:.4}") }
}

fn sweep(axis: Axis, values: Vec<f64>, seed: u64) -> SweepResult {
    let cfg = SweepConfig {
        axis,
        values,
        trials: 500,
        methods: vec![Method::CoNoma, Method::Noma],
        seed,
        weighting: Weighting::ProportionalFair,
        ..Default::default()
    };
    run_sweep(&cfg).unwrap()
}

fn dominance(violations: &mut usize) -> Outcome {
    let r = sweep(Axis::Fov, vec![50.0], 108);
    *violations += r.trace_violations();
    let co = r.point(50.0, Method::CoNoma).unwrap();
    let noma = r.point(50.0, Method::Noma).unwrap();
    Outcome {
        pass: co.mean_sum_rate_bps > noma.mean_sum_rate_bps && co.mean_jain > noma.mean_jain,
        detail: format!(
            "sum-rate {:.2} vs {:.2} Mbit/s, Jain {:.4} vs {:.4}",
            co.mean_sum_rate_bps / 1e6,
            noma.mean_sum_rate_bps / 1e6,
            co.mean_jain,
            noma.mean_jain
        ),
    }
}

fn fov_trend(violations: &mut usize) -> Outcome {
    let r = sweep(Axis::Fov, vec![30.0, 55.0, 90.0], 109);
    *violations += r.trace_violations();
    let at = |v: f64| r.point(v, Method::CoNoma).unwrap().mean_sum_rate_bps;
    let (a, b, c) = (at(30.0), at(55.0), at(90.0));
    Outcome {
        pass: b > a && b > c,
        detail: format!("sum-rate at 30/55/90 deg: {:.2}/{:.2}/{:.2} Mbit/s", a / 1e6, b / 1e6, c / 1e6),
    }
}

fn blockage_trend(violations: &mut usize) -> Outcome {
    let r = sweep(Axis::Blockage, vec![0.0, 0.3], 110);
    *violations += r.trace_violations();
    let jain = |v: f64, m: Method| r.point(v, m).unwrap().mean_jain;
    let (co0, co3) = (jain(0.0, Method::CoNoma), jain(0.3, Method::CoNoma));
    let (no0, no3) = (jain(0.0, Method::Noma), jain(0.3, Method::Noma));
    let co_drop = co0 - co3;
    let noma_drop = no0 - no3;
    Outcome {
        pass: (co3 - co0).abs() <= 0.1 * co0 && noma_drop > co_drop,
        detail: format!("Jain co-noma {co0:.4} -> {co3:.4}, noma {no0:.4} -> {no3:.4}"),
    }
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= check(1, Duration::from_secs(1), equal_rate);
    ok &= check(2, Duration::from_secs(1), rf_cap);
    ok &= check(3, Duration::from_secs(5), waterfilling);
    ok &= check(4, Duration::from_secs(5), case2_root);
    ok &= check(5, Duration::from_secs(10), hungarian);
    ok &= check(6, Duration::from_secs(10), link_selection);
    let mut violations = 0;
    ok &= check(7, Duration::from_secs(60), || joint_quality(&mut violations));
    ok &= check(8, Duration::from_secs(300), || dominance(&mut violations));
    ok &= check(9, Duration::from_secs(600), || fov_trend(&mut violations));
    ok &= check(10, Duration::from_secs(600), || blockage_trend(&mut violations));
    ok &= check(11, Duration::from_secs(1), || Outcome {
        pass: violations == 0,
        detail: format!("{violations} decreasing objective traces in criteria 7-10"),
    });
    if ok {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}
