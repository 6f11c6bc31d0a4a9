//! Transceiver chain and environment semantics.
//!
//! Resource grid, precoding, MRC combining, soft demapping, experimental BER
//! and the reward signal derived from it, plus the state observation fed to
//! the agents.

mod modulation;

pub use modulation::{llr, LlrMode, Modulation, ModulationScheme};

use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::numerics::{check_unit, SimRng};
use crate::{CMat, CVec, C64};

/// Reward floor: `1 - ber` is clamped to at least this before the log.
pub const BIT_SUCCESS_FLOOR: f64 = 1.0 / 1024.0;

/// Resource layout of the band a single precoder serves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubbandSpec {
    pub n_prb: usize,
    pub subcarriers_per_prb: usize,
    pub symbols_per_tti: usize,
    pub pilot_symbol_count: usize,
    /// Pilot subcarriers, relative to the first subcarrier of the band.
    pub pilot_subcarrier_indices: Vec<usize>,
    /// Data REs simulated per TTI.
    pub data_re_budget: usize,
}

impl SubbandSpec {
    /// Wideband grid: 80 PRBs (960 subcarriers), one pilot, 2048 simulated REs.
    pub fn env1() -> Self {
        Self {
            n_prb: 80,
            subcarriers_per_prb: 12,
            symbols_per_tti: 14,
            pilot_symbol_count: 1,
            pilot_subcarrier_indices: vec![0],
            data_re_budget: 2048,
        }
    }

    /// 8-PRB subband with pilots on the first, middle and last subcarrier;
    /// every data RE of the subband is simulated.
    pub fn env2() -> Self {
        let mut s = Self {
            n_prb: 8,
            subcarriers_per_prb: 12,
            symbols_per_tti: 14,
            pilot_symbol_count: 1,
            pilot_subcarrier_indices: vec![0, 47, 95],
            data_re_budget: 0,
        };
        s.data_re_budget = s.full_data_re_count();
        s
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_prb * self.subcarriers_per_prb
    }

    pub fn full_data_re_count(&self) -> usize {
        self.n_subcarriers() * (self.symbols_per_tti - self.pilot_symbol_count)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_prb == 0 || self.subcarriers_per_prb == 0 {
            return Err(Error::Config("subband must contain subcarriers".into()));
        }
        if self.pilot_symbol_count == 0 || self.pilot_symbol_count >= self.symbols_per_tti {
            return Err(Error::Config(
                "pilot_symbol_count must be in [1, symbols_per_tti)".into(),
            ));
        }
        if self.pilot_subcarrier_indices.is_empty() {
            return Err(Error::Config(
                "at least one pilot subcarrier required".into(),
            ));
        }
        if self
            .pilot_subcarrier_indices
            .windows(2)
            .any(|w| w[0] >= w[1])
        {
            return Err(Error::Config(
                "pilot indices must be strictly increasing".into(),
            ));
        }
        if self.pilot_subcarrier_indices.last().copied().unwrap_or(0) >= self.n_subcarriers() {
            return Err(Error::Config("pilot index outside the subband".into()));
        }
        if self.data_re_budget == 0 {
            return Err(Error::Config("data_re_budget must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrecoderOrigin {
    CodebookIndex(usize),
    Continuous,
}

/// Unit-norm transmit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    w: CVec,
    origin: PrecoderOrigin,
}

impl Precoder {
    pub fn new(w: CVec, origin: PrecoderOrigin) -> Result<Self> {
        check_unit(&w)?;
        Ok(Self { w, origin })
    }

    pub fn continuous(w: CVec) -> Result<Self> {
        Self::new(w, PrecoderOrigin::Continuous)
    }

    /// Unpacks `2 n_tx` reals, real parts first, then normalizes.
    pub fn from_packed(values: &[f64]) -> Result<Self> {
        if !values.len().is_multiple_of(2) || values.is_empty() {
            return Err(Error::Dimension(format!(
                "packed precoder needs an even length, got {}",
                values.len()
            )));
        }
        let n = values.len() / 2;
        let w = CVec::new((0..n).map(|i| C64::new(values[i], values[n + i])).collect());
        let w = w.normalized().ok_or(Error::NonUnit(0.0))?;
        Self::continuous(w)
    }

    /// Real parts followed by imaginary parts.
    pub fn packed(&self) -> Vec<f64> {
        let s = self.w.as_slice();
        s.iter()
            .map(|z| z.re)
            .chain(s.iter().map(|z| z.im))
            .collect()
    }

    pub fn w(&self) -> &CVec {
        &self.w
    }

    pub fn origin(&self) -> PrecoderOrigin {
        self.origin
    }

    pub fn n_tx(&self) -> usize {
        self.w.len()
    }

    pub fn with_origin(mut self, origin: PrecoderOrigin) -> Self {
        self.origin = origin;
        self
    }
}

fn default_snr_db() -> f64 {
    10.0
}

fn default_modulation() -> Modulation {
    Modulation::Qam16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    #[serde(default = "default_snr_db")]
    pub snr_db: f64,
    #[serde(default = "default_modulation")]
    pub modulation: Modulation,
    #[serde(default)]
    pub llr_mode: LlrMode,
    /// Test mode: no noise, nearest-point decisions.
    #[serde(default)]
    pub noiseless: bool,
}

impl LinkConfig {
    pub fn new(snr_db: f64, modulation: Modulation) -> Self {
        Self {
            snr_db,
            modulation,
            llr_mode: LlrMode::ExactLogSum,
            noiseless: false,
        }
    }

    pub fn noiseless(modulation: Modulation) -> Self {
        Self {
            noiseless: true,
            ..Self::new(default_snr_db(), modulation)
        }
    }

    /// `sigma_n^2 = 10^(-snr_db / 10)`, zero in noiseless mode.
    pub fn noise_variance(&self) -> f64 {
        if self.noiseless {
            0.0
        } else {
            10f64.powf(-self.snr_db / 10.0)
        }
    }

    pub fn scheme(&self) -> ModulationScheme {
        ModulationScheme::new(self.modulation)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.noiseless && !self.snr_db.is_finite() {
            return Err(Error::Config(
                "snr_db must be finite unless noiseless".into(),
            ));
        }
        Ok(())
    }
}

/// Real-valued state vector: per pilot RE, `vec(Re H)` then `vec(Im H)`,
/// column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub values: Vec<f64>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn observation_len(n_tx: usize, n_rx: usize, pilots: usize) -> usize {
    pilots * 2 * n_tx * n_rx
}

pub fn observe(state: &ChannelState) -> Observation {
    let mut values = Vec::with_capacity(observation_len(
        state.n_tx(),
        state.n_rx(),
        state.pilot_channels.len(),
    ));
    for h in &state.pilot_channels {
        for c in 0..h.cols() {
            for r in 0..h.rows() {
                values.push(h[(r, c)].re);
            }
        }
        for c in 0..h.cols() {
            for r in 0..h.rows() {
                values.push(h[(r, c)].im);
            }
        }
    }
    Observation { values }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reward {
    pub value: f64,
    pub ber: f64,
}

impl Reward {
    pub fn from_ber(ber: f64) -> Result<Self> {
        Ok(Self {
            value: reward_from_ber(ber)?,
            ber,
        })
    }
}

/// `log2(max(1 - ber, 2^-10)) + 0.5`.
pub fn reward_from_ber(ber: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&ber) {
        return Err(Error::InvalidArgument(format!("BER {ber} outside [0, 1]")));
    }
    Ok((1.0 - ber).max(BIT_SUCCESS_FLOOR).log2() + 0.5)
}

/// Maximal-ratio combiner `Hw / |Hw|`.
pub fn mrc(h: &CMat, w: &Precoder) -> Result<CVec> {
    let hw = h.mul_vec(w.w())?;
    hw.normalized().ok_or(Error::DegenerateBeam)
}

/// `|w^dagger H^dagger H w| = |Hw|^2`.
pub fn effective_gain(h: &CMat, w: &Precoder) -> f64 {
    h.mul_vec(w.w())
        .expect("precoder length matches channel")
        .norm_sqr()
}

/// Mean effective gain across the subband's data channels.
pub fn mean_data_gain(state: &ChannelState, w: &Precoder) -> f64 {
    state
        .data_channels
        .iter()
        .map(|h| effective_gain(h, w))
        .sum::<f64>()
        / state.data_channels.len() as f64
}

/// Simulates one TTI of uncoded transmission with precoder `w` and returns
/// the experimental BER and its reward.
///
/// Every data RE carries uniformly drawn bits through `y = H w x + n`,
/// is MRC-combined and hard-decided from its LLRs. REs where `Hw = 0` get
/// coin-flip decisions.
pub fn measure_ber(
    state: &ChannelState,
    w: &Precoder,
    cfg: &LinkConfig,
    subband: &SubbandSpec,
    rng: &mut SimRng,
) -> Result<Reward> {
    if w.n_tx() != state.n_tx() {
        return Err(Error::Dimension(format!(
            "precoder has {} entries, channel has {} transmit antennas",
            w.n_tx(),
            state.n_tx()
        )));
    }
    let scheme = cfg.scheme();
    let bps = scheme.bits_per_symbol();
    let label_mask = scheme.order() - 1;
    let noise_variance = cfg.noise_variance();
    let noise_sd = (noise_variance / 2.0).sqrt();
    let n_rx = state.n_rx();

    // Per data channel: (Hw, MRC vector, r^dagger H w), or None when Hw = 0.
    let beams: Vec<Option<(CVec, CVec, C64)>> = state
        .data_channels
        .iter()
        .map(|h| {
            let hw = h.mul_vec(w.w()).expect("dimensions checked");
            hw.normalized().map(|r| {
                let h_eff = r.dot(&hw);
                (hw, r, h_eff)
            })
        })
        .collect();

    let mut metrics = vec![0.0; scheme.order()];
    let mut decisions = vec![false; bps];
    let mut noise = vec![C64::new(0.0, 0.0); n_rx];
    let mut errors = 0usize;
    for re in 0..subband.data_re_budget {
        let label = (rng.next_u32() as usize) & label_mask;
        let x = scheme.map(label);
        if !cfg.noiseless {
            for n in noise.iter_mut() {
                *n = C64::new(
                    rng.normal::<f64>() * noise_sd,
                    rng.normal::<f64>() * noise_sd,
                );
            }
        }
        let decided = match &beams[re % beams.len()] {
            Some((hw, r, h_eff)) => {
                let z = r
                    .as_slice()
                    .iter()
                    .zip(hw.as_slice())
                    .zip(&noise)
                    .fold(C64::new(0.0, 0.0), |acc, ((&ri, &hi), &ni)| {
                        acc + ri.conj() * (hi * x + ni)
                    });
                modulation::hard_decide(
                    z,
                    *h_eff,
                    noise_variance,
                    &scheme,
                    cfg.llr_mode,
                    &mut metrics,
                    &mut decisions,
                );
                decisions
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (m, &b)| acc | ((b as usize) << m))
            }
            None => (rng.next_u32() as usize) & label_mask,
        };
        errors += (label ^ decided).count_ones() as usize;
    }
    let ber = errors as f64 / (subband.data_re_budget * bps) as f64;
    Reward::from_ber(ber)
}
