//! Monte-Carlo sweeps: configuration, per-trial evaluation, aggregation and
//! result files.
//!
//! Every trial draws its own realization from a seed mixed out of the master
//! seed, the axis point and the trial index, so results do not depend on how
//! trials are scheduled over workers and adding axis points leaves existing
//! trials untouched.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{dbm_per_hz_to_watts, RfParams, Scenario, ScenarioConfig, VlcParams};
use crate::error::{Error, Result};
use crate::model::{Instance, Weights};
use crate::rates::PhyConstants;
use crate::solver::{
    exhaustive_solve, solve, solve_proportional_fair, FairnessOptions, Method, SolveOptions, SolveReport,
    EXHAUSTIVE_MAX_PAIRS,
};

/// CSV header of sweep results.
pub const CSV_HEADER: &str = "axis,method,mean_sum_rate_bps,mean_jain,stderr_sum_rate,stderr_jain,trials";

/// `(Σr)² / (n·Σr²)`; zero, with a warning, when every rate is zero.
pub fn jain_index(rates: &[f64]) -> f64 {
    let j = jain_or_zero(rates);
    if j == 0.0 {
        log::warn!("fairness index undefined for all-zero rates; reporting 0");
    }
    j
}

fn jain_or_zero(rates: &[f64]) -> f64 {
    let sum: f64 = rates.iter().sum();
    let sq: f64 = rates.iter().map(|r| r * r).sum();
    if sq == 0.0 {
        return 0.0;
    }
    sum * sum / (rates.len() as f64 * sq)
}

/// Compensated sum.
fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Mean and standard error, independent of the order of `values`.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = neumaier_sum(sorted.iter().copied()) / n;
    if sorted.len() < 2 {
        return (mean, 0.0);
    }
    let ss = neumaier_sum(sorted.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of one trial at one axis point.
pub fn trial_seed(master: u64, point: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ point as u64) ^ trial as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Fov,
    Users,
    Blockage,
    Radius,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Fov => "fov",
            Axis::Users => "users",
            Axis::Blockage => "blockage",
            Axis::Radius => "radius",
        }
    }

    /// Scenario for one axis value.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        match self {
            Axis::Fov => cfg.vlc.fov_semiangle = value,
            Axis::Users => {
                if !(value >= 1.0) || value.fract() != 0.0 {
                    return Err(Error::Config(format!("user count {value} is not a positive integer")));
                }
                cfg.user_count = value as usize;
            }
            Axis::Blockage => cfg.blockage_rate = value,
            Axis::Radius => cfg.cell_radius = value,
        }
        cfg.validate().map_err(|e| Error::Config(format!("{} = {value}: {e}", self.as_str())))?;
        Ok(cfg)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fov" => Ok(Axis::Fov),
            "users" => Ok(Axis::Users),
            "blockage" => Ok(Axis::Blockage),
            "radius" => Ok(Axis::Radius),
            other => Err(Error::Config(format!("unknown axis `{other}` (expected fov, users, blockage or radius)"))),
        }
    }
}

/// How objective weights are chosen in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Repeated solves with weights from long-term average rates.
    ProportionalFair,
    /// One solve with unit weights (plain sum-rate).
    Uniform,
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "proportional-fair" => Ok(Weighting::ProportionalFair),
            "uniform" => Ok(Weighting::Uniform),
            other => Err(Error::Config(format!("unknown weighting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub scenario: ScenarioConfig,
    pub phy: PhyConstants,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub weighting: Weighting,
    pub solve: SolveOptions,
    pub fairness: FairnessOptions,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let mut scenario = ScenarioConfig::default();
        scenario.rf.shadowing = true;
        Self {
            scenario,
            phy: PhyConstants::default(),
            axis: Axis::Fov,
            values: vec![50.0],
            trials: 1000,
            methods: vec![Method::CoNoma, Method::Noma, Method::Baseline2],
            seed: 1,
            weighting: Weighting::ProportionalFair,
            solve: SolveOptions::default(),
            fairness: FairnessOptions::default(),
            workers: None,
            output: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let config = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.scenario.validate().map_err(config)?;
        self.phy.validate().map_err(config)?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("axis values must be finite".into()));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("axis values must be strictly ascending".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::Config(format!("method {m} listed twice")));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        for &v in &self.values {
            self.axis.apply(&self.scenario, v)?;
        }
        Ok(())
    }

    /// Parses a configuration file. Missing keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: FileConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = file.into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    vlc: VlcSection,
    rf: RfSection,
    sweep: SweepSection,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct VlcSection {
    ap_x: f64,
    ap_y: f64,
    led_height: f64,
    user_height: f64,
    photodetector_area: f64,
    half_intensity_angle: f64,
    optical_filter_gain: f64,
    refractive_index: f64,
    fov_semiangle: f64,
    bandwidth: f64,
    noise_psd: f64,
    responsivity: f64,
    conversion_factor: f64,
    fill_factor: f64,
    thermal_voltage: f64,
    dark_current: f64,
    bias_high: f64,
    bias_low: f64,
}

impl Default for VlcSection {
    fn default() -> Self {
        let v = VlcParams::default();
        let p = PhyConstants::default();
        Self {
            ap_x: v.ap_x,
            ap_y: v.ap_y,
            led_height: v.led_height,
            user_height: v.user_height,
            photodetector_area: v.photodetector_area,
            half_intensity_angle: v.half_intensity_angle,
            optical_filter_gain: v.optical_filter_gain,
            refractive_index: v.refractive_index,
            fov_semiangle: v.fov_semiangle,
            bandwidth: p.vlc_bandwidth,
            noise_psd: p.vlc_noise_psd,
            responsivity: p.responsivity,
            conversion_factor: p.conversion_factor,
            fill_factor: p.fill_factor,
            thermal_voltage: p.thermal_voltage,
            dark_current: p.dark_current,
            bias_high: p.bias_high,
            bias_low: p.bias_low,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RfSection {
    carrier_frequency: f64,
    breakpoint_distance: f64,
    shadow_sigma_before: f64,
    shadow_sigma_after: f64,
    bandwidth: f64,
    noise_psd_dbm_hz: f64,
    multipath_gain: f64,
    shadowing: bool,
}

impl Default for RfSection {
    fn default() -> Self {
        let r = RfParams::default();
        Self {
            carrier_frequency: r.carrier_frequency,
            breakpoint_distance: r.breakpoint_distance,
            shadow_sigma_before: r.shadow_sigma_before,
            shadow_sigma_after: r.shadow_sigma_after,
            bandwidth: r.bandwidth,
            noise_psd_dbm_hz: -174.0,
            multipath_gain: r.multipath_gain,
            shadowing: true,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepSection {
    axis: String,
    values: Vec<f64>,
    trials: usize,
    methods: Vec<String>,
    seed: u64,
    weighting: String,
    users: usize,
    radius: f64,
    blockage: f64,
    max_iterations: usize,
    tolerance: f64,
    fairness_updates: usize,
    fairness_tolerance: f64,
    fairness_horizon: f64,
    workers: Option<usize>,
    out: Option<PathBuf>,
}

impl Default for SweepSection {
    fn default() -> Self {
        let d = SweepConfig::default();
        Self {
            axis: d.axis.as_str().into(),
            values: d.values,
            trials: d.trials,
            methods: d.methods.iter().map(|m| m.as_str().into()).collect(),
            seed: d.seed,
            weighting: "proportional-fair".into(),
            users: d.scenario.user_count,
            radius: d.scenario.cell_radius,
            blockage: d.scenario.blockage_rate,
            max_iterations: d.solve.max_iterations,
            tolerance: d.solve.tolerance,
            fairness_updates: d.fairness.max_updates,
            fairness_tolerance: d.fairness.tolerance,
            fairness_horizon: d.fairness.horizon,
            workers: None,
            out: None,
        }
    }
}

impl FileConfig {
    fn into_config(self) -> Result<SweepConfig> {
        let (v, r, s) = (self.vlc, self.rf, self.sweep);
        let vlc = VlcParams {
            ap_x: v.ap_x,
            ap_y: v.ap_y,
            led_height: v.led_height,
            user_height: v.user_height,
            photodetector_area: v.photodetector_area,
            half_intensity_angle: v.half_intensity_angle,
            optical_filter_gain: v.optical_filter_gain,
            refractive_index: v.refractive_index,
            fov_semiangle: v.fov_semiangle,
        };
        let phy = PhyConstants {
            vlc_bandwidth: v.bandwidth,
            vlc_noise_psd: v.noise_psd,
            responsivity: v.responsivity,
            conversion_factor: v.conversion_factor,
            fill_factor: v.fill_factor,
            thermal_voltage: v.thermal_voltage,
            dark_current: v.dark_current,
            bias_high: v.bias_high,
            bias_low: v.bias_low,
        };
        let rf = RfParams {
            carrier_frequency: r.carrier_frequency,
            breakpoint_distance: r.breakpoint_distance,
            shadow_sigma_before: r.shadow_sigma_before,
            shadow_sigma_after: r.shadow_sigma_after,
            bandwidth: r.bandwidth,
            noise_psd: dbm_per_hz_to_watts(r.noise_psd_dbm_hz),
            multipath_gain: r.multipath_gain,
            shadowing: r.shadowing,
        };
        let methods = s.methods.iter().map(|m| m.parse()).collect::<Result<Vec<Method>>>()?;
        Ok(SweepConfig {
            scenario: ScenarioConfig { vlc, rf, cell_radius: s.radius, user_count: s.users, blockage_rate: s.blockage },
            phy,
            axis: s.axis.parse()?,
            values: s.values,
            trials: s.trials,
            methods,
            seed: s.seed,
            weighting: s.weighting.parse()?,
            solve: SolveOptions { max_iterations: s.max_iterations, tolerance: s.tolerance },
            fairness: FairnessOptions {
                max_updates: s.fairness_updates,
                tolerance: s.fairness_tolerance,
                horizon: s.fairness_horizon,
            },
            workers: s.workers,
            output: s.out,
        })
    }
}

/// Metrics of one method on one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub sum_rate: f64,
    pub jain: f64,
    /// Rates of the real users (the padding user of odd populations is dropped).
    pub user_rates: Vec<f64>,
    pub solves: usize,
    pub trace_violations: usize,
}

/// Runs `method` on one realization under the configured weighting.
pub fn evaluate_method(method: Method, inst: &Instance, real_users: usize, cfg: &SweepConfig) -> Result<MethodOutcome> {
    let (rates, solves, violations) = match cfg.weighting {
        Weighting::Uniform => {
            let r = solve(method, inst, &Weights::uniform(inst.pair_count), &cfg.solve)?;
            let v = usize::from(!r.trace_is_monotone());
            (r.user_rates, 1, v)
        }
        Weighting::ProportionalFair => {
            let r = solve_proportional_fair(method, inst, &cfg.solve, &cfg.fairness)?;
            (r.mean_rates, r.solves, r.trace_violations)
        }
    };
    // sampled users come first; the padding user, if any, is last
    let user_rates = rates[..real_users].to_vec();
    Ok(MethodOutcome {
        method,
        sum_rate: user_rates.iter().sum(),
        jain: jain_or_zero(&user_rates),
        user_rates,
        solves,
        trace_violations: violations,
    })
}

/// Every requested method on one trial of one axis point.
pub fn run_trial(
    cfg: &SweepConfig,
    scenario: &ScenarioConfig,
    methods: &[Method],
    seed: u64,
) -> Result<Vec<MethodOutcome>> {
    let (_, inst) = Instance::sample(scenario, &cfg.phy, seed)?;
    methods.iter().map(|&m| evaluate_method(m, &inst, scenario.user_count, cfg)).collect()
}

/// One method's full result on a single realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleOutcome {
    pub method: Method,
    pub sum_rate: f64,
    pub jain: f64,
    pub user_rates: Vec<f64>,
    /// Report of the last solve (the only one under unit weights).
    pub report: SolveReport,
    pub solves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleSolve {
    pub seed: u64,
    pub scenario: Scenario,
    pub instance: Instance,
    pub outcomes: Vec<SingleOutcome>,
    pub notices: Vec<String>,
}

/// Solves the base scenario drawn from `cfg.seed` with every requested method.
pub fn solve_single(cfg: &SweepConfig) -> Result<SingleSolve> {
    cfg.validate()?;
    let (scenario, inst) = Instance::sample(&cfg.scenario, &cfg.phy, cfg.seed)?;
    let real = cfg.scenario.user_count;
    let mut outcomes = Vec::new();
    let mut notices = Vec::new();
    for &method in &cfg.methods {
        if method == Method::Exhaustive && inst.pair_count > EXHAUSTIVE_MAX_PAIRS {
            let msg = format!(
                "exhaustive search skipped, {} pairs exceed the limit of {EXHAUSTIVE_MAX_PAIRS}",
                inst.pair_count
            );
            log::warn!("{msg}");
            notices.push(msg);
            continue;
        }
        let (report, rates, solves) = match cfg.weighting {
            Weighting::Uniform => {
                let r = solve(method, &inst, &Weights::uniform(inst.pair_count), &cfg.solve)?;
                let rates = r.user_rates.clone();
                (r, rates, 1)
            }
            Weighting::ProportionalFair => {
                let r = solve_proportional_fair(method, &inst, &cfg.solve, &cfg.fairness)?;
                (r.last, r.mean_rates, r.solves)
            }
        };
        let user_rates = rates[..real].to_vec();
        outcomes.push(SingleOutcome {
            method,
            sum_rate: user_rates.iter().sum(),
            jain: jain_index(&user_rates),
            user_rates,
            report,
            solves,
        });
    }
    Ok(SingleSolve { seed: cfg.seed, scenario, instance: inst, outcomes, notices })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub axis_value: f64,
    pub method: Method,
    pub mean_sum_rate_bps: f64,
    pub mean_jain: f64,
    pub stderr_sum_rate: f64,
    pub stderr_jain: f64,
    pub trials: usize,
    /// Trials in which every user had zero rate.
    pub zero_rate_trials: usize,
    pub trace_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub seed: u64,
    pub points: Vec<PointResult>,
    /// Methods skipped at some axis point, with the reason.
    pub notices: Vec<String>,
}

impl SweepResult {
    pub fn trace_violations(&self) -> usize {
        self.points.iter().map(|p| p.trace_violations).sum()
    }

    pub fn point(&self, axis_value: f64, method: Method) -> Option<&PointResult> {
        self.points.iter().find(|p| p.axis_value == axis_value && p.method == method)
    }
}

/// Runs every axis point, trial and method of `cfg`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let mut points = Vec::new();
    let mut notices = Vec::new();
    for (index, &value) in cfg.values.iter().enumerate() {
        let scenario = cfg.axis.apply(&cfg.scenario, value)?;
        let pairs = scenario.user_count.div_ceil(2);
        let methods: Vec<Method> = cfg
            .methods
            .iter()
            .copied()
            .filter(|&m| {
                let keep = m != Method::Exhaustive || pairs <= EXHAUSTIVE_MAX_PAIRS;
                if !keep {
                    let msg = format!(
                        "{} = {value}: exhaustive search skipped, {pairs} pairs exceed the limit of {EXHAUSTIVE_MAX_PAIRS}",
                        cfg.axis
                    );
                    log::warn!("{msg}");
                    notices.push(msg);
                }
                keep
            })
            .collect();
        if methods.is_empty() {
            continue;
        }
        let trials: Vec<Vec<MethodOutcome>> = pool.install(|| {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| run_trial(cfg, &scenario, &methods, trial_seed(cfg.seed, index, t)))
                .collect::<Result<_>>()
        })?;
        for (m, &method) in methods.iter().enumerate() {
            let sums: Vec<f64> = trials.iter().map(|t| t[m].sum_rate).collect();
            let jains: Vec<f64> = trials.iter().map(|t| t[m].jain).collect();
            let (mean_sum_rate_bps, stderr_sum_rate) = mean_and_stderr(&sums);
            let (mean_jain, stderr_jain) = mean_and_stderr(&jains);
            let zero_rate_trials = sums.iter().filter(|&&s| s == 0.0).count();
            if zero_rate_trials > 0 {
                log::warn!(
                    "{} = {value}, {method}: {zero_rate_trials} trials with all-zero rates count as fairness 0",
                    cfg.axis
                );
            }
            points.push(PointResult {
                axis_value: value,
                method,
                mean_sum_rate_bps,
                mean_jain,
                stderr_sum_rate,
                stderr_jain,
                trials: cfg.trials,
                zero_rate_trials,
                trace_violations: trials.iter().map(|t| t[m].trace_violations).sum(),
            });
        }
    }
    Ok(SweepResult { config: cfg.clone(), seed: cfg.seed, points, notices })
}

pub fn results_csv(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &result.points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.axis_value, p.method, p.mean_sum_rate_bps, p.mean_jain, p.stderr_sum_rate, p.stderr_jain, p.trials
        ));
    }
    out
}

/// Writes the CSV to `csv_path` and the JSON mirror next to it with a
/// `.json` extension. Returns the JSON path.
pub fn write_results(result: &SweepResult, csv_path: &Path) -> Result<PathBuf> {
    let json_path = csv_path.with_extension("json");
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| Error::Io { path, source }
    };
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    fs::write(csv_path, results_csv(result)).map_err(io(csv_path))?;
    let json = serde_json::to_string_pretty(result).expect("results serialize");
    fs::write(&json_path, json + "\n").map_err(io(&json_path))?;
    Ok(json_path)
}

pub fn read_results_json(path: &Path) -> Result<SweepResult> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Heuristic objective relative to the exhaustive optimum, one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTrial {
    pub seed: u64,
    pub exhaustive: f64,
    /// `(method, objective / exhaustive objective)`.
    pub ratios: Vec<(Method, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub method: Method,
    pub trials: usize,
    pub mean_ratio: f64,
    pub min_ratio: f64,
    /// Share of trials at or above 98% of the optimum.
    pub within_two_percent: f64,
}

/// Compares each non-exhaustive method with the exhaustive oracle under unit
/// weights on `cfg.trials` realizations of the base scenario.
pub fn run_oracle(cfg: &SweepConfig) -> Result<(Vec<OracleSummary>, Vec<OracleTrial>)> {
    cfg.validate()?;
    let pairs = cfg.scenario.user_count.div_ceil(2);
    if pairs > EXHAUSTIVE_MAX_PAIRS {
        return Err(Error::Config(format!(
            "oracle runs need at most {} users, got {}",
            2 * EXHAUSTIVE_MAX_PAIRS,
            cfg.scenario.user_count
        )));
    }
    let methods: Vec<Method> = cfg.methods.iter().copied().filter(|&m| m != Method::Exhaustive).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let trials: Vec<OracleTrial> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(cfg.seed, 0, t);
                let (_, inst) = Instance::sample(&cfg.scenario, &cfg.phy, seed)?;
                let w = Weights::uniform(inst.pair_count);
                let best = exhaustive_solve(&inst, &w)?.objective;
                let ratios = methods
                    .iter()
                    .map(|&m| {
                        let obj = solve(m, &inst, &w, &cfg.solve)?.objective;
                        Ok((m, if best > 0.0 { obj / best } else { 1.0 }))
                    })
                    .collect::<Result<_>>()?;
                Ok(OracleTrial { seed, exhaustive: best, ratios })
            })
            .collect::<Result<_>>()
    })?;
    let summaries = methods
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let r: Vec<f64> = trials.iter().map(|t| t.ratios[m].1).collect();
            OracleSummary {
                method,
                trials: r.len(),
                mean_ratio: mean_and_stderr(&r).0,
                min_ratio: r.iter().copied().fold(f64::INFINITY, f64::min),
                within_two_percent: r.iter().filter(|&&x| x >= 0.98).count() as f64 / r.len() as f64,
            }
        })
        .collect();
    Ok((summaries, trials))
}
