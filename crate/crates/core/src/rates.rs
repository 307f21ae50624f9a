//! Achievable-rate expressions for the strong user, the weak user over the
//! direct optical link, and the weak user over the relayed optical/RF link.
//!
//! Electrical powers are squared drive currents (A²). The SNR coefficient
//! `Ψ = ν²ρ²h²K / (B_v N_v)` absorbs every conversion constant, so each VLC
//! rate is `(B_v / 2K) · log2(1 + Ψ · signal / (1 + Ψ · interference))`.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::model::{Instance, LinkSelection, Pairing, Powers, Weights};

/// LED driver, photodetector and harvesting constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhyConstants {
    /// Modulation bandwidth B_v, Hz.
    pub vlc_bandwidth: f64,
    /// Receiver noise PSD N_v, A²/Hz.
    pub vlc_noise_psd: f64,
    /// Detector responsivity ρ, A/W.
    pub responsivity: f64,
    /// Electrical-to-optical conversion ν, W/A.
    pub conversion_factor: f64,
    pub fill_factor: f64,
    pub thermal_voltage: f64,
    pub dark_current: f64,
    pub bias_high: f64,
    pub bias_low: f64,
}

impl Default for PhyConstants {
    fn default() -> Self {
        Self {
            vlc_bandwidth: 20e6,
            vlc_noise_psd: 1e-21,
            responsivity: 0.53,
            conversion_factor: 10.0,
            fill_factor: 0.75,
            thermal_voltage: 0.025,
            dark_current: 1e-10,
            bias_high: 0.6,
            bias_low: 0.4,
        }
    }
}

impl PhyConstants {
    /// Fixed DC bias at the middle of the linear range.
    pub fn dc_bias(&self) -> f64 {
        (self.bias_high + self.bias_low) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.vlc_bandwidth,
            self.vlc_noise_psd,
            self.responsivity,
            self.conversion_factor,
            self.fill_factor,
            self.thermal_voltage,
            self.dark_current,
            self.bias_high,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || !(self.bias_low >= 0.0) {
            return Err(crate::error::domain("physical constants must be positive"));
        }
        if !(self.bias_high > self.bias_low) {
            return Err(crate::error::domain("bias_high must exceed bias_low"));
        }
        Ok(())
    }
}

/// Maximum drive power `((I_H − I_L) / 2)²`.
pub fn p_max(bias_high: f64, bias_low: f64) -> f64 {
    let a = (bias_high - bias_low) / 2.0;
    a * a
}

/// Power harvested from the DC part of the received light, used as the RF
/// relay transmit power (equal charge and discharge slots).
pub fn harvested_power(h: f64, c: &PhyConstants) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    let b = c.dc_bias();
    let rho = c.responsivity;
    let nu = c.conversion_factor;
    c.fill_factor * rho * nu * c.thermal_voltage * h * b * (rho * h * nu * b / c.dark_current).ln_1p()
}

pub fn snr_coefficient(h: f64, c: &PhyConstants, pair_count: usize) -> f64 {
    let g = c.conversion_factor * c.responsivity * h;
    g * g * pair_count as f64 / (c.vlc_bandwidth * c.vlc_noise_psd)
}

fn prelog(b_v: f64, k: usize) -> f64 {
    b_v / (2.0 * k as f64)
}

pub fn rate_strong(p_s: f64, psi_s: f64, b_v: f64, k: usize) -> f64 {
    prelog(b_v, k) * (psi_s * p_s).ln_1p() / std::f64::consts::LN_2
}

/// Weak message decoded at the strong user, before SIC.
pub fn rate_weak_at_strong(p_w: f64, p_s: f64, psi_s: f64, b_v: f64, k: usize) -> f64 {
    prelog(b_v, k) * (psi_s * p_w / (1.0 + psi_s * p_s)).ln_1p() / std::f64::consts::LN_2
}

/// Weak message at the weak user over the direct optical link.
pub fn rate_weak_direct(p_w: f64, p_s: f64, psi_w: f64, b_v: f64, k: usize) -> f64 {
    prelog(b_v, k) * (psi_w * p_w / (1.0 + psi_w * p_s)).ln_1p() / std::f64::consts::LN_2
}

/// Per-user RF relay rate when `relayed` links share the RF band equally.
pub fn rate_rf(g: f64, p_rf: f64, b_f: f64, n_rf: f64, relayed: usize) -> Result<f64> {
    if relayed == 0 {
        return Err(contract("RF rate requested with no relayed users"));
    }
    let share = b_f / relayed as f64;
    Ok(share / 2.0 * (g * p_rf / (share * n_rf)).ln_1p() / std::f64::consts::LN_2)
}

/// Relayed rate: the weaker of the RF hop and the decode-at-strong hop.
pub fn rate_relayed(p_w: f64, p_s: f64, psi_s: f64, b_v: f64, k: usize, rf_rate: f64) -> f64 {
    rf_rate.min(rate_weak_at_strong(p_w, p_s, psi_s, b_v, k))
}

/// Per-user and per-pair rates for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub strong: Vec<f64>,
    pub weak: Vec<f64>,
    pub pair_sums: Vec<f64>,
    pub weighted: f64,
}

impl RateReport {
    pub fn evaluate(
        inst: &Instance,
        pairing: &Pairing,
        links: &LinkSelection,
        powers: &Powers,
        weights: &Weights,
    ) -> Result<Self> {
        let k = inst.pair_count;
        if pairing.len() != k || links.len() != k {
            return Err(contract("pairing or link vector does not match the pair count"));
        }
        let b_v = inst.vlc_bandwidth;
        let relayed = links.relayed_count();
        let mut strong = vec![0.0; k];
        let mut weak = vec![0.0; k];
        let mut pair_sums = vec![0.0; k];
        let mut weighted = 0.0;
        for (i, j) in pairing.pairs() {
            let (p_w, p_s) = (powers.weak[i], powers.strong[j]);
            let r_s = rate_strong(p_s, inst.psi_strong[j], b_v, k);
            let r_w = if links.is_relayed(i) {
                let rf = inst.rf_rate(i, j, relayed)?;
                rate_relayed(p_w, p_s, inst.psi_strong[j], b_v, k, rf)
            } else {
                rate_weak_direct(p_w, p_s, inst.psi_weak[i], b_v, k)
            };
            strong[j] = r_s;
            weak[i] = r_w;
            pair_sums[i] = r_s + r_w;
            weighted += weights.strong[j] * r_s + weights.weak[i] * r_w;
        }
        Ok(Self { strong, weak, pair_sums, weighted })
    }

    pub fn sum_rate(&self) -> f64 {
        self.strong.iter().chain(&self.weak).sum()
    }

    /// Rates indexed by original user id.
    pub fn by_user(&self, inst: &Instance) -> Vec<f64> {
        let mut out = vec![0.0; inst.user_count()];
        for (slot, &u) in inst.classes.strong.iter().enumerate() {
            out[u] = self.strong[slot];
        }
        for (slot, &u) in inst.classes.weak.iter().enumerate() {
            out[u] = self.weak[slot];
        }
        out
    }
}

/// Weighted sum-rate of a configuration.
pub fn weighted_objective(
    inst: &Instance,
    pairing: &Pairing,
    links: &LinkSelection,
    powers: &Powers,
    weights: &Weights,
) -> Result<f64> {
    RateReport::evaluate(inst, pairing, links, powers, weights).map(|r| r.weighted)
}
