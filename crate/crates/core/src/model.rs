//! Shared problem data: the classified instance, pairings, link vectors,
//! per-user powers and weights.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::channel::{sample_scenario, ChannelState, RfParams, Scenario, ScenarioConfig};
use crate::error::{contract, Result};
use crate::rates::{self, PhyConstants};

/// Split of the population into strong and weak users by optical gain.
///
/// Both lists hold user indices in descending order of `h`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub strong: Vec<usize>,
    pub weak: Vec<usize>,
}

/// Ranks users by `h` (descending, ties by index); the top half is strong.
pub fn classify_users(h: &[f64]) -> Classification {
    let mut order: Vec<usize> = (0..h.len()).collect();
    order.sort_by(|&a, &b| h[b].partial_cmp(&h[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let half = h.len() / 2;
    Classification { strong: order[..half].to_vec(), weak: order[half..].to_vec() }
}

/// Everything the solvers need about one realization, indexed by pair slot:
/// strong user `j` and weak user `i` refer to positions in
/// [`Classification::strong`] and [`Classification::weak`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub pair_count: usize,
    pub vlc_bandwidth: f64,
    pub rf_bandwidth: f64,
    pub rf_noise_psd: f64,
    pub p_max: f64,
    pub classes: Classification,
    pub psi_strong: Vec<f64>,
    pub psi_weak: Vec<f64>,
    /// Harvested power available to each strong user for relaying.
    pub relay_power: Vec<f64>,
    /// RF power gain from strong user `j` to weak user `i`, as `rf_gain[i][j]`.
    pub rf_gain: Vec<Vec<f64>>,
}

impl Instance {
    pub fn new(channels: &ChannelState, phy: &PhyConstants, rf: &RfParams) -> Result<Self> {
        let n = channels.h.len();
        if n == 0 || n % 2 == 1 {
            return Err(contract(format!("user count must be even and positive, got {n}")));
        }
        if channels.rf_gain.len() != n || channels.rf_gain.iter().any(|r| r.len() != n) {
            return Err(contract("RF gain matrix does not match the user count"));
        }
        let k = n / 2;
        let classes = classify_users(&channels.h);
        let psi = |u: usize| rates::snr_coefficient(channels.h[u], phy, k);
        let psi_strong = classes.strong.iter().map(|&u| psi(u)).collect();
        let psi_weak = classes.weak.iter().map(|&u| psi(u)).collect();
        let relay_power = classes.strong.iter().map(|&u| rates::harvested_power(channels.h[u], phy)).collect();
        let rf_gain = classes
            .weak
            .iter()
            .map(|&wi| classes.strong.iter().map(|&sj| channels.rf_gain[wi][sj]).collect())
            .collect();
        Ok(Self {
            pair_count: k,
            vlc_bandwidth: phy.vlc_bandwidth,
            rf_bandwidth: rf.bandwidth,
            rf_noise_psd: rf.noise_psd,
            p_max: rates::p_max(phy.bias_high, phy.bias_low),
            classes,
            psi_strong,
            psi_weak,
            relay_power,
            rf_gain,
        })
    }

    /// Samples one realization and builds its instance.
    pub fn sample(config: &ScenarioConfig, phy: &PhyConstants, rng_seed: u64) -> Result<(Scenario, Self)> {
        phy.validate()?;
        let (scenario, channels) = sample_scenario(config, rng_seed)?;
        let inst = Self::new(&channels, phy, &config.rf)?;
        Ok((scenario, inst))
    }

    /// Optical pre-log factor `B_v / 2K` shared by all VLC rates.
    pub fn vlc_prelog(&self) -> f64 {
        self.vlc_bandwidth / (2.0 * self.pair_count as f64)
    }

    /// RF rate from strong `j` to weak `i` when `relayed` links share the band.
    pub fn rf_rate(&self, weak: usize, strong: usize, relayed: usize) -> Result<f64> {
        rates::rate_rf(
            self.rf_gain[weak][strong],
            self.relay_power[strong],
            self.rf_bandwidth,
            self.rf_noise_psd,
            relayed,
        )
    }

    pub fn user_count(&self) -> usize {
        2 * self.pair_count
    }
}

/// One-to-one assignment of weak users to strong users: `strong_of(i) = σ(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pairing(Vec<usize>);

impl Pairing {
    pub fn new(strong_of_weak: Vec<usize>) -> Result<Self> {
        let k = strong_of_weak.len();
        let mut seen = vec![false; k];
        for &j in &strong_of_weak {
            if j >= k || seen[j] {
                return Err(contract(format!("{strong_of_weak:?} is not a permutation")));
            }
            seen[j] = true;
        }
        Ok(Self(strong_of_weak))
    }

    pub fn identity(k: usize) -> Self {
        Self((0..k).collect())
    }

    /// Builds a pairing from a binary matrix with `z[i][j] = 1` when weak `i`
    /// is paired with strong `j`.
    pub fn from_matrix(z: &[Vec<u8>]) -> Result<Self> {
        let k = z.len();
        let mut sigma = Vec::with_capacity(k);
        for (i, row) in z.iter().enumerate() {
            if row.len() != k || row.iter().any(|&v| v > 1) {
                return Err(contract(format!("row {i} of Z is not a binary row of length {k}")));
            }
            let ones: Vec<usize> = (0..k).filter(|&j| row[j] == 1).collect();
            if ones.len() != 1 {
                return Err(contract(format!("row {i} of Z sums to {}", ones.len())));
            }
            sigma.push(ones[0]);
        }
        Self::new(sigma).map_err(|_| contract("a column of Z does not sum to 1"))
    }

    pub fn to_matrix(&self) -> Vec<Vec<u8>> {
        let k = self.0.len();
        self.0.iter().map(|&j| (0..k).map(|c| u8::from(c == j)).collect()).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn strong_of(&self, weak: usize) -> usize {
        self.0[weak]
    }

    /// `(weak, strong)` pairs in weak order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().copied().enumerate()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Serving link of every weak user: `true` means relayed over VLC/RF.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkSelection(Vec<bool>);

impl LinkSelection {
    pub fn new(relayed: Vec<bool>) -> Self {
        Self(relayed)
    }

    pub fn direct(k: usize) -> Self {
        Self(vec![false; k])
    }

    pub fn from_mask(mask: u64, k: usize) -> Self {
        Self((0..k).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn relayed_count(&self) -> usize {
        self.0.iter().filter(|&&x| x).count()
    }

    pub fn is_relayed(&self, weak: usize) -> bool {
        self.0[weak]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

/// Message powers per user slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Powers {
    pub strong: Vec<f64>,
    pub weak: Vec<f64>,
}

impl Powers {
    pub fn zeros(k: usize) -> Self {
        Self { strong: vec![0.0; k], weak: vec![0.0; k] }
    }

    pub fn total(&self) -> f64 {
        self.strong.iter().chain(&self.weak).sum()
    }
}

/// Objective weights per user slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub strong: Vec<f64>,
    pub weak: Vec<f64>,
}

impl Weights {
    pub fn uniform(k: usize) -> Self {
        Self { strong: vec![1.0; k], weak: vec![1.0; k] }
    }
}
