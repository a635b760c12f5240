//! Radio propagation and per-slot reception.
//!
//! Log-distance (Friis-like) path loss with reference distance 1 m, received
//! power in dBm and linear mW, and classification of what a listener makes of a
//! slot: a decoded packet, undecodable energy, or nothing at all.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Vec3;

/// Reference distance for `pl0`, in metres.
pub const REFERENCE_DISTANCE_M: f64 = 1.0;

/// Fixed headroom added on top of the SINR threshold when sizing the adapt
/// (formation-wide) transmit power.
pub const ADAPT_HEADROOM_DB: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    /// Carrier wavelength in metres (informational; `pl0` already encodes it).
    pub wavelength: f64,
    pub path_loss_exponent: f64,
    /// Path loss at the reference distance, dB.
    pub pl0: f64,
    /// Thermal noise power, dBm.
    pub noise_power: f64,
    /// Required SINR for a successful decode, dB.
    pub sinr_threshold: f64,
    /// Energy-detection floor above the noise power, dB.
    pub energy_detect_margin: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            wavelength: 0.125,
            path_loss_exponent: 2.0,
            pl0: 40.0,
            noise_power: -101.0,
            sinr_threshold: 15.0,
            energy_detect_margin: 3.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.path_loss_exponent > 0.0) {
            return Err(Error::Config("channel.path_loss_exponent must be > 0".into()));
        }
        if !(self.sinr_threshold > 0.0) {
            return Err(Error::Config("channel.sinr_threshold must be > 0 dB".into()));
        }
        if !(self.energy_detect_margin >= 0.0) {
            return Err(Error::Config("channel.energy_detect_margin must be >= 0 dB".into()));
        }
        if !self.noise_power.is_finite() || !self.pl0.is_finite() {
            return Err(Error::Config("channel.noise_power and channel.pl0 must be finite".into()));
        }
        Ok(())
    }

    pub fn noise_mw(&self) -> f64 {
        dbm_to_mw(self.noise_power)
    }

    pub fn sinr_threshold_linear(&self) -> f64 {
        db_to_linear(self.sinr_threshold)
    }

    /// Total received power below which a listener reports nothing.
    pub fn energy_floor_mw(&self) -> f64 {
        dbm_to_mw(self.noise_power + self.energy_detect_margin)
    }

    /// Linear received power for a transmitter at `tx_power_dbm` seen at squared
    /// distance `dist_sq`.
    pub fn rx_power_mw(&self, tx_power_dbm: f64, dist_sq: f64) -> f64 {
        let d = dist_sq.max(f64::MIN_POSITIVE);
        let spread = if self.path_loss_exponent == 2.0 {
            d.recip()
        } else {
            d.powf(-self.path_loss_exponent / 2.0)
        };
        dbm_to_mw(tx_power_dbm - self.pl0) * spread
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `pl0 + 10 γ log10(d / d0)`.
pub fn path_loss_db(distance_m: f64, params: &ChannelParams) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::Domain(format!("path loss needs a positive distance, got {distance_m}")));
    }
    Ok(params.pl0 + 10.0 * params.path_loss_exponent * (distance_m / REFERENCE_DISTANCE_M).log10())
}

pub fn rx_power_dbm(tx_power_dbm: f64, distance_m: f64, params: &ChannelParams) -> Result<f64> {
    Ok(tx_power_dbm - path_loss_db(distance_m, params)?)
}

/// Beacon power such that a lone transmitter is received at the safety radius
/// with SINR threshold plus `margin_db` to spare for co-slot interference.
pub fn beacon_tx_power(safety_radius: f64, params: &ChannelParams, margin_db: f64) -> Result<f64> {
    Ok(params.noise_power + params.sinr_threshold + margin_db + path_loss_db(safety_radius, params)?)
}

/// Management-slot power: reaches the farthest pair of the formation with
/// [`ADAPT_HEADROOM_DB`] above the SINR threshold.
pub fn adapt_tx_power(max_diameter: f64, params: &ChannelParams) -> Result<f64> {
    beacon_tx_power(max_diameter, params, ADAPT_HEADROOM_DB)
}

/// How slots with several simultaneous transmitters are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionModel {
    /// Full SINR evaluation; the strongest transmitter may be captured.
    Sinr,
    /// More than one transmitter is never decoded, only sensed as energy.
    #[default]
    #[serde(alias = "collision")]
    Pessimistic,
}

/// What a single listener gets out of a slot. `Decoded` carries the position of
/// the decoded transmitter in the list passed to [`slot_outcome`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reception {
    Nothing,
    Energy,
    Decoded(usize),
}

/// A transmitter as seen by the channel: where it is and how loud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emitter {
    pub position: Vec3,
    pub power_dbm: f64,
}

/// Classify one slot at one receiver. The receiver must not be among the
/// emitters.
pub fn slot_outcome(
    receiver: Vec3,
    emitters: &[Emitter],
    params: &ChannelParams,
    model: CollisionModel,
) -> Reception {
    if emitters.is_empty() {
        return Reception::Nothing;
    }
    let mut total = 0.0;
    let mut best = 0.0;
    let mut best_idx = 0;
    for (i, e) in emitters.iter().enumerate() {
        let p = params.rx_power_mw(e.power_dbm, receiver.dist_sq(&e.position));
        total += p;
        if p > best {
            best = p;
            best_idx = i;
        }
    }
    classify(total, best, best_idx, emitters.len(), params, model)
}

/// Classification from precomputed linear powers; shared by the engine's fast
/// path and [`slot_outcome`].
pub(crate) fn classify(
    total_mw: f64,
    best_mw: f64,
    best_idx: usize,
    emitter_count: usize,
    params: &ChannelParams,
    model: CollisionModel,
) -> Reception {
    if emitter_count == 0 {
        return Reception::Nothing;
    }
    let decodable = match model {
        CollisionModel::Pessimistic if emitter_count > 1 => false,
        _ => {
            let sinr = best_mw / (params.noise_mw() + (total_mw - best_mw).max(0.0));
            sinr >= params.sinr_threshold_linear()
        }
    };
    if decodable {
        Reception::Decoded(best_idx)
    } else if total_mw >= params.energy_floor_mw() {
        Reception::Energy
    } else {
        Reception::Nothing
    }
}

/// SINR (linear) of `wanted` at `receiver` with every other emitter as
/// interference.
pub fn sinr_linear(receiver: Vec3, wanted: usize, emitters: &[Emitter], params: &ChannelParams) -> f64 {
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (i, e) in emitters.iter().enumerate() {
        let p = params.rx_power_mw(e.power_dbm, receiver.dist_sq(&e.position));
        if i == wanted {
            signal = p;
        } else {
            interference += p;
        }
    }
    signal / (params.noise_mw() + interference)
}
