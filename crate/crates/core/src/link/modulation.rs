//! Gray-mapped QAM constellations and soft demapping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "4-QAM", alias = "QPSK")]
    Qam4,
    #[serde(rename = "16-QAM")]
    Qam16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LlrMode {
    #[default]
    ExactLogSum,
    MaxLog,
}

/// Constellation `C` with its Gray labelling.
///
/// `points[label]` is the symbol whose bit `m` (0-based) is `(label >> m) & 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationScheme {
    kind: Modulation,
    bits_per_symbol: usize,
    points: Vec<C64>,
}

impl ModulationScheme {
    pub fn new(kind: Modulation) -> Self {
        let (bits_per_symbol, points) = match kind {
            Modulation::Qam4 => {
                let s = 1.0 / 2f64.sqrt();
                let points = (0..4usize)
                    .map(|label| {
                        let b0 = (label & 1) as f64;
                        let b1 = ((label >> 1) & 1) as f64;
                        C64::new((1.0 - 2.0 * b0) * s, (1.0 - 2.0 * b1) * s)
                    })
                    .collect();
                (2, points)
            }
            Modulation::Qam16 => {
                let s = 1.0 / 10f64.sqrt();
                let points = (0..16usize)
                    .map(|label| {
                        let b = |m: usize| ((label >> m) & 1) as f64;
                        let re = (1.0 - 2.0 * b(0)) * (2.0 - (1.0 - 2.0 * b(2)));
                        let im = (1.0 - 2.0 * b(1)) * (2.0 - (1.0 - 2.0 * b(3)));
                        C64::new(re * s, im * s)
                    })
                    .collect();
                (4, points)
            }
        };
        Self {
            kind,
            bits_per_symbol,
            points,
        }
    }

    pub fn kind(&self) -> Modulation {
        self.kind
    }

    /// Constellation size `M`.
    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn map(&self, label: usize) -> C64 {
        self.points[label]
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }
}

/// LLR of bit `bit` (0-based) given the combined sample `z`, effective gain
/// `h_eff` and noise variance. Positive favours bit 0.
pub fn llr(
    z: C64,
    h_eff: C64,
    noise_variance: f64,
    scheme: &ModulationScheme,
    bit: usize,
    mode: LlrMode,
) -> Result<f64> {
    if !(noise_variance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be > 0, got {noise_variance}"
        )));
    }
    if bit >= scheme.bits_per_symbol() {
        return Err(Error::InvalidArgument(format!(
            "bit index {bit} out of range for {}-QAM",
            scheme.order()
        )));
    }
    let metrics: Vec<f64> = scheme
        .points()
        .iter()
        .map(|&x| (z - h_eff * x).norm_sqr() / noise_variance)
        .collect();
    let (min0, min1) = set_minima(&metrics, bit);
    Ok(match mode {
        LlrMode::MaxLog => min1 - min0,
        LlrMode::ExactLogSum => {
            let (s0, s1) = shifted_sums(&metrics, bit, min0, min1);
            (min1 - min0) + s0.ln() - s1.ln()
        }
    })
}

fn set_minima(metrics: &[f64], bit: usize) -> (f64, f64) {
    let mut min = [f64::INFINITY; 2];
    for (label, &d) in metrics.iter().enumerate() {
        let b = (label >> bit) & 1;
        if d < min[b] {
            min[b] = d;
        }
    }
    (min[0], min[1])
}

/// `sum exp(-(d - min_b))` over each bit-value set. Both sums are >= 1.
fn shifted_sums(metrics: &[f64], bit: usize, min0: f64, min1: f64) -> (f64, f64) {
    let mut sums = [0.0f64; 2];
    let mins = [min0, min1];
    for (label, &d) in metrics.iter().enumerate() {
        let b = (label >> bit) & 1;
        let shifted = d - mins[b];
        // exp underflows to exactly 0 past this point
        if shifted < 746.0 {
            sums[b] += (-shifted).exp();
        }
    }
    (sums[0], sums[1])
}

/// Hard decisions for all bits of one received sample: `true` means bit 1.
///
/// Produces exactly `llr(..) <= 0` per bit. `noise_variance == 0` selects the
/// noiseless nearest-point rule.
pub(crate) fn hard_decide(
    z: C64,
    h_eff: C64,
    noise_variance: f64,
    scheme: &ModulationScheme,
    mode: LlrMode,
    metrics: &mut [f64],
    out: &mut [bool],
) {
    for (m, &x) in metrics.iter_mut().zip(scheme.points()) {
        let d = (z - h_eff * x).norm_sqr();
        *m = if noise_variance > 0.0 {
            d / noise_variance
        } else {
            d
        };
    }
    // ln of a shifted sum lies in [0, ln(M/2)]
    let slack = ((scheme.order() / 2) as f64).ln();
    for (bit, decision) in out.iter_mut().enumerate() {
        let (min0, min1) = set_minima(metrics, bit);
        let gap = min1 - min0;
        let llr = if noise_variance <= 0.0 || mode == LlrMode::MaxLog || gap.abs() > slack {
            gap
        } else {
            let (s0, s1) = shifted_sums(metrics, bit, min0, min1);
            gap + s0.ln() - s1.ln()
        };
        *decision = !(llr > 0.0);
    }
}
