//! Block-fading MIMO channel realizations.
//!
//! Two models: `Flat` (one i.i.d. Rayleigh matrix per TTI shared by every
//! resource element) and `Tdl2` (two-tap tapped delay line, evaluated per
//! subcarrier as `H(k) = sum_l G_l exp(-j 2 pi k df tau_l)`).

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::SubbandSpec;
use crate::numerics::{complex_gaussian, SimRng};
use crate::{CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelModel {
    Flat,
    Tdl2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub n_tx: usize,
    pub n_rx: usize,
    pub model: ChannelModel,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing: f64,
    /// Tap delays in seconds.
    pub tap_delays: Vec<f64>,
    pub tap_powers_db: Vec<f64>,
}

impl ChannelSpec {
    /// Flat Rayleigh channel with 30 kHz subcarriers.
    pub fn flat(n_tx: usize, n_rx: usize) -> Self {
        Self {
            n_tx,
            n_rx,
            model: ChannelModel::Flat,
            subcarrier_spacing: 30e3,
            tap_delays: vec![0.0],
            tap_powers_db: vec![0.0],
        }
    }

    /// Two equal-power taps 400 ns apart, 30 kHz subcarriers.
    pub fn tdl2(n_tx: usize, n_rx: usize) -> Self {
        Self {
            n_tx,
            n_rx,
            model: ChannelModel::Tdl2,
            subcarrier_spacing: 30e3,
            tap_delays: vec![0.0, 400e-9],
            tap_powers_db: vec![0.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::Config("antenna counts must be >= 1".into()));
        }
        if self.tap_delays.len() != self.tap_powers_db.len() || self.tap_delays.is_empty() {
            return Err(Error::Config(
                "tap_delays and tap_powers_db must be nonempty and equally long".into(),
            ));
        }
        if self.model == ChannelModel::Tdl2 && self.tap_delays.len() != 2 {
            return Err(Error::Config("Tdl2 needs exactly two taps".into()));
        }
        if !(self.subcarrier_spacing > 0.0) {
            return Err(Error::Config("subcarrier_spacing must be > 0".into()));
        }
        if self
            .tap_delays
            .iter()
            .chain(&self.tap_powers_db)
            .any(|x| !x.is_finite())
        {
            return Err(Error::Config("tap profile must be finite".into()));
        }
        Ok(())
    }

    /// Linear tap powers normalized to unit total power.
    pub fn linear_tap_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self
            .tap_powers_db
            .iter()
            .map(|db| 10f64.powf(db / 10.0))
            .collect();
        let total: f64 = lin.iter().sum();
        lin.iter().map(|p| p / total).collect()
    }
}

/// One environment realization for one TTI.
///
/// `data_channels` holds one matrix per distinct data subcarrier; data RE `i`
/// of a TTI sees `data_channels[i % data_channels.len()]` (block fading keeps
/// a subcarrier's channel constant across the TTI's symbols).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub pilot_channels: Vec<CMat>,
    pub data_channels: Vec<CMat>,
    pub tti_index: u64,
    /// Delay-domain taps the frequency response was built from (empty for flat).
    pub taps: Vec<CMat>,
}

impl ChannelState {
    /// Flat state whose single matrix serves every pilot and data RE.
    pub fn from_flat(h: CMat) -> Self {
        Self {
            pilot_channels: vec![h.clone()],
            data_channels: vec![h],
            tti_index: 0,
            taps: Vec::new(),
        }
    }

    pub fn n_rx(&self) -> usize {
        self.pilot_channels[0].rows()
    }

    pub fn n_tx(&self) -> usize {
        self.pilot_channels[0].cols()
    }

    pub fn data_channel_for_re(&self, re: usize) -> &CMat {
        &self.data_channels[re % self.data_channels.len()]
    }
}

pub fn sample_flat(spec: &ChannelSpec, rng: &mut SimRng) -> Result<ChannelState> {
    spec.validate()?;
    if spec.model != ChannelModel::Flat {
        return Err(Error::Config(
            "sample_flat needs a Flat channel spec".into(),
        ));
    }
    let h = complex_gaussian(spec.n_rx, spec.n_tx, 1.0, rng)?;
    Ok(ChannelState::from_flat(h))
}

pub fn sample_tdl2(
    spec: &ChannelSpec,
    subband: &SubbandSpec,
    rng: &mut SimRng,
) -> Result<ChannelState> {
    spec.validate()?;
    subband.validate()?;
    if spec.model != ChannelModel::Tdl2 {
        return Err(Error::Config(
            "sample_tdl2 needs a Tdl2 channel spec".into(),
        ));
    }
    let taps = spec
        .linear_tap_powers()
        .into_iter()
        .map(|p| complex_gaussian(spec.n_rx, spec.n_tx, p, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(state_from_taps(spec, subband, taps))
}

/// Samples according to `spec.model`.
pub fn sample(spec: &ChannelSpec, subband: &SubbandSpec, rng: &mut SimRng) -> Result<ChannelState> {
    match spec.model {
        ChannelModel::Flat => sample_flat(spec, rng),
        ChannelModel::Tdl2 => sample_tdl2(spec, subband, rng),
    }
}

/// Evaluates the tap set at the subband's pilot and data subcarriers.
pub fn state_from_taps(spec: &ChannelSpec, subband: &SubbandSpec, taps: Vec<CMat>) -> ChannelState {
    let pilot_channels = subband
        .pilot_subcarrier_indices
        .iter()
        .map(|&k| frequency_response(&taps, &spec.tap_delays, spec.subcarrier_spacing, k))
        .collect();
    let data_channels = (0..subband.n_subcarriers())
        .map(|k| frequency_response(&taps, &spec.tap_delays, spec.subcarrier_spacing, k))
        .collect();
    ChannelState {
        pilot_channels,
        data_channels,
        tti_index: 0,
        taps,
    }
}

/// `H(k) = sum_l G_l exp(-j 2 pi k spacing delay_l)`.
pub fn frequency_response(taps: &[CMat], delays: &[f64], spacing: f64, k: usize) -> CMat {
    let (rows, cols) = (taps[0].rows(), taps[0].cols());
    let mut data = vec![C64::new(0.0, 0.0); rows * cols];
    for (g, &tau) in taps.iter().zip(delays) {
        let phase =
            Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 * spacing * tau);
        for (acc, &x) in data.iter_mut().zip(g.as_slice()) {
            *acc += x * phase;
        }
    }
    CMat::from_vec(rows, cols, data).expect("tap shapes agree")
}
