//! User placement and channel gains.
//!
//! The optical downlink is a line-of-sight Lambertian emitter with a receiver
//! concentrator that cuts off beyond the field of view. The LED faces straight
//! down and every photodetector faces straight up, so the radiance angle at
//! the LED equals the incidence angle at the receiver.
//!
//! The user-to-user RF link uses a two-slope indoor path loss: free space up
//! to the breakpoint distance, then an extra 35 dB per decade, with optional
//! log-normal shadowing.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// RF distances below this are clamped before evaluating the path loss.
pub const MIN_RF_DISTANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn horizontal_distance(&self, other: &Point3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Optical front end and access-point geometry.
///
/// Angles are in degrees, lengths in metres, the detector area in m².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VlcParams {
    /// Ground projection of the access point.
    pub ap_x: f64,
    pub ap_y: f64,
    pub led_height: f64,
    pub user_height: f64,
    pub photodetector_area: f64,
    pub half_intensity_angle: f64,
    pub optical_filter_gain: f64,
    pub refractive_index: f64,
    pub fov_semiangle: f64,
}

impl Default for VlcParams {
    fn default() -> Self {
        Self {
            ap_x: 0.0,
            ap_y: 0.0,
            led_height: 3.0,
            user_height: 0.85,
            photodetector_area: 1e-4,
            half_intensity_angle: 60.0,
            optical_filter_gain: 1.0,
            refractive_index: 1.5,
            fov_semiangle: 50.0,
        }
    }
}

impl VlcParams {
    pub fn ap_position(&self) -> Point3 {
        Point3::new(self.ap_x, self.ap_y, self.led_height)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.photodetector_area > 0.0) {
            return Err(domain("photodetector area must be positive"));
        }
        if !(self.half_intensity_angle > 0.0 && self.half_intensity_angle < 90.0) {
            return Err(domain("half-intensity angle must lie in (0, 90) degrees"));
        }
        if !(self.fov_semiangle > 0.0 && self.fov_semiangle <= 90.0) {
            return Err(domain("field of view must lie in (0, 90] degrees"));
        }
        if !(self.refractive_index >= 1.0) {
            return Err(domain("refractive index must be at least 1"));
        }
        if !(self.led_height > self.user_height) {
            return Err(domain("LED must be mounted above the receivers"));
        }
        Ok(())
    }
}

/// RF relay link parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
    pub carrier_frequency: f64,
    pub breakpoint_distance: f64,
    pub shadow_sigma_before: f64,
    pub shadow_sigma_after: f64,
    pub bandwidth: f64,
    /// Noise power spectral density in W/Hz.
    pub noise_psd: f64,
    /// Deterministic multipath power gain |H|².
    pub multipath_gain: f64,
    pub shadowing: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            carrier_frequency: 2.4e9,
            breakpoint_distance: 5.0,
            shadow_sigma_before: 3.0,
            shadow_sigma_after: 5.0,
            bandwidth: 16e6,
            noise_psd: dbm_per_hz_to_watts(-174.0),
            multipath_gain: 1.0,
            shadowing: false,
        }
    }
}

impl RfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.breakpoint_distance > 0.0) {
            return Err(domain("breakpoint distance must be positive"));
        }
        if !(self.bandwidth > 0.0) {
            return Err(domain("RF bandwidth must be positive"));
        }
        if !(self.carrier_frequency > 0.0) {
            return Err(domain("carrier frequency must be positive"));
        }
        if !(self.shadow_sigma_before >= 0.0 && self.shadow_sigma_after >= 0.0) {
            return Err(domain("shadowing deviations must be non-negative"));
        }
        if !(self.noise_psd > 0.0) || !(self.multipath_gain >= 0.0) {
            return Err(domain("noise PSD must be positive and multipath gain non-negative"));
        }
        Ok(())
    }
}

pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Lambertian emission order `m = -1 / log2(cos θ½)`.
pub fn lambertian_order(half_intensity_angle: f64) -> Result<f64> {
    if !(half_intensity_angle > 0.0 && half_intensity_angle < 90.0) {
        return Err(domain(format!("half-intensity angle {half_intensity_angle} outside (0, 90)")));
    }
    Ok(-1.0 / half_intensity_angle.to_radians().cos().log2())
}

/// Optical concentrator gain: `n² / sin²Θ` inside the field of view, zero outside.
pub fn concentrator_gain(incidence: f64, fov: f64, refractive_index: f64) -> Result<f64> {
    if !(incidence >= 0.0) {
        return Err(domain("incidence angle must be non-negative"));
    }
    let s = fov.to_radians().sin();
    if fov == 0.0 || s == 0.0 {
        return Err(domain("field of view of zero has no concentrator gain"));
    }
    if incidence <= fov {
        Ok(refractive_index * refractive_index / (s * s))
    } else {
        Ok(0.0)
    }
}

/// Line-of-sight optical gain between the access point and a receiver.
pub fn vlc_channel_gain(user: Point3, vlc: &VlcParams, blocked: bool) -> Result<f64> {
    let ap = vlc.ap_position();
    let dz = ap.z - user.z;
    if dz < 0.0 {
        return Err(domain("receiver above the access point"));
    }
    let d = ap.distance(&user);
    if d == 0.0 {
        return Err(domain("receiver coincides with the access point"));
    }
    if blocked {
        return Ok(0.0);
    }
    let cos_theta = (dz / d).clamp(0.0, 1.0);
    let theta = cos_theta.acos().to_degrees();
    let f = concentrator_gain(theta, vlc.fov_semiangle, vlc.refractive_index)?;
    if f == 0.0 {
        return Ok(0.0);
    }
    let m = lambertian_order(vlc.half_intensity_angle)?;
    Ok((m + 1.0) * vlc.photodetector_area / (2.0 * PI * d * d)
        * cos_theta.powf(m)
        * vlc.optical_filter_gain
        * cos_theta
        * f)
}

pub fn free_space_loss_db(distance: f64, carrier_frequency: f64) -> f64 {
    20.0 * (4.0 * PI * distance * carrier_frequency / SPEED_OF_LIGHT).log10()
}

/// Two-slope path loss in dB, without shadowing.
pub fn path_loss_db(distance: f64, rf: &RfParams) -> f64 {
    let d = distance.max(MIN_RF_DISTANCE);
    let bp = rf.breakpoint_distance;
    if d <= bp {
        free_space_loss_db(d, rf.carrier_frequency)
    } else {
        free_space_loss_db(bp, rf.carrier_frequency) + 35.0 * (d / bp).log10()
    }
}

/// RF power gain `|H|² · 10^(-L(d)/10)` between two receivers.
///
/// The generator is only consumed when shadowing is enabled.
pub fn rf_channel_gain<R: Rng + ?Sized>(pos_i: Point3, pos_j: Point3, rf: &RfParams, rng: &mut R) -> f64 {
    let mut d = pos_i.distance(&pos_j);
    if d < MIN_RF_DISTANCE {
        log::debug!("RF distance {d:.3} m clamped to {MIN_RF_DISTANCE} m");
        d = MIN_RF_DISTANCE;
    }
    let mut loss = path_loss_db(d, rf);
    if rf.shadowing {
        let sigma = if d <= rf.breakpoint_distance { rf.shadow_sigma_before } else { rf.shadow_sigma_after };
        let z: f64 = StandardNormal.sample(rng);
        loss += sigma * z;
    }
    rf.multipath_gain * 10f64.powf(-loss / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub position: Point3,
    pub blocked: bool,
    /// Padding user added to make the population even; it never receives service.
    #[serde(rename = "virtual")]
    pub virtual_user: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub vlc: VlcParams,
    pub rf: RfParams,
    pub cell_radius: f64,
    pub users: Vec<User>,
    pub blockage_rate: f64,
    pub rng_seed: u64,
}

/// Per-user optical gains and per-ordered-pair RF gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub h: Vec<f64>,
    pub rf_gain: Vec<Vec<f64>>,
}

impl ChannelState {
    pub fn user_count(&self) -> usize {
        self.h.len()
    }
}

/// Geometry and population parameters used to draw one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub vlc: VlcParams,
    pub rf: RfParams,
    pub cell_radius: f64,
    pub user_count: usize,
    pub blockage_rate: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self { vlc: VlcParams::default(), rf: RfParams::default(), cell_radius: 2.5, user_count: 6, blockage_rate: 0.1 }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.vlc.validate()?;
        self.rf.validate()?;
        if !(self.cell_radius >= 0.0) {
            return Err(Error::Config("cell radius must be non-negative".into()));
        }
        if self.user_count == 0 {
            return Err(Error::Config("at least one user is required".into()));
        }
        if !(0.0..=1.0).contains(&self.blockage_rate) {
            return Err(Error::Config("blockage rate must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Draws one realization: uniform positions over the cell disc, independent
/// blockage, and the resulting channel gains.
pub fn sample_scenario(config: &ScenarioConfig, rng_seed: u64) -> Result<(Scenario, ChannelState)> {
    config.validate()?;
    let vlc = &config.vlc;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut users: Vec<User> = (0..config.user_count)
        .map(|_| {
            let r = config.cell_radius * rng.random::<f64>().sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            let blocked = rng.random_bool(config.blockage_rate);
            User {
                position: Point3::new(vlc.ap_x + r * phi.cos(), vlc.ap_y + r * phi.sin(), vlc.user_height),
                blocked,
                virtual_user: false,
            }
        })
        .collect();
    if users.len() % 2 == 1 {
        users.push(User {
            position: Point3::new(vlc.ap_x, vlc.ap_y, vlc.user_height),
            blocked: false,
            virtual_user: true,
        });
    }

    let h = users
        .iter()
        .map(|u| if u.virtual_user { Ok(0.0) } else { vlc_channel_gain(u.position, vlc, u.blocked) })
        .collect::<Result<Vec<_>>>()?;

    let n = users.len();
    let mut rf_gain = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            // One draw per unordered pair keeps the link reciprocal.
            let g = rf_channel_gain(users[i].position, users[j].position, &config.rf, &mut rng);
            if !users[i].virtual_user && !users[j].virtual_user {
                rf_gain[i][j] = g;
                rf_gain[j][i] = g;
            }
        }
    }

    let scenario = Scenario {
        vlc: vlc.clone(),
        rf: config.rf.clone(),
        cell_radius: config.cell_radius,
        users,
        blockage_rate: config.blockage_rate,
        rng_seed,
    };
    Ok((scenario, ChannelState { h, rf_gain }))
}
