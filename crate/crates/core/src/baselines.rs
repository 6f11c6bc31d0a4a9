//! Analytic reference precoders.
//!
//! Flat-fading optima come straight from the channel matrix; the
//! frequency-selective baselines only see the pilot channels and work from
//! their averaged covariance.

use crate::codebook::{exhaustive_search, Codebook};
use crate::error::{Error, Result};
use crate::link::{Precoder, PrecoderOrigin};
use crate::numerics::hermitian_evd;
use crate::CMat;

/// Pilot-averaged channel covariance `R = mean_j H_j^dagger H_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    r: CMat,
    pilot_count: usize,
}

impl CovarianceMatrix {
    pub fn r(&self) -> &CMat {
        &self.r
    }

    pub fn pilot_count(&self) -> usize {
        self.pilot_count
    }

    pub fn n_tx(&self) -> usize {
        self.r.rows()
    }
}

pub fn covariance(pilot_channels: &[CMat]) -> Result<CovarianceMatrix> {
    let first = pilot_channels
        .first()
        .ok_or_else(|| Error::InvalidArgument("covariance needs at least one pilot".into()))?;
    let (rows, cols) = (first.rows(), first.cols());
    let mut sum = CMat::zeros(cols, cols);
    for h in pilot_channels {
        if h.rows() != rows || h.cols() != cols {
            return Err(Error::Dimension(format!(
                "pilot channels must share shape {rows}x{cols}, got {}x{}",
                h.rows(),
                h.cols()
            )));
        }
        sum = sum.add(&h.gram())?;
    }
    let r = if pilot_channels.len() == 1 {
        sum
    } else {
        sum.scale(1.0 / pilot_channels.len() as f64)
    };
    Ok(CovarianceMatrix {
        r,
        pilot_count: pilot_channels.len(),
    })
}

/// Principal right singular vector of `H`, i.e. the principal eigenvector of
/// `H^dagger H`, phase-normalized.
pub fn svd_precoder(h: &CMat) -> Result<Precoder> {
    if h.frobenius_norm() == 0.0 {
        return Err(Error::InvalidArgument(
            "SVD precoder of a zero channel".into(),
        ));
    }
    principal(&h.gram())
}

/// Principal eigenvector of the covariance.
pub fn evd_precoder(cov: &CovarianceMatrix) -> Result<Precoder> {
    principal(cov.r())
}

fn principal(a: &CMat) -> Result<Precoder> {
    let eig = hermitian_evd(a)?;
    let (_, v) = eig.principal();
    Precoder::new(v.clone(), PrecoderOrigin::Continuous)
}

/// Best codeword for a known flat channel.
pub fn wideband_codebook_opt<'a>(h: &CMat, cb: &'a Codebook) -> Result<(usize, &'a Precoder)> {
    if h.cols() != cb.n_tx() {
        return Err(Error::Dimension(format!(
            "channel has {} transmit antennas, codebook {}",
            h.cols(),
            cb.n_tx()
        )));
    }
    exhaustive_search(&h.gram(), cb)
}

/// Best codeword for the pilot-averaged covariance of a subband.
pub fn subband_codebook_subopt<'a>(
    pilots: &[CMat],
    cb: &'a Codebook,
) -> Result<(usize, &'a Precoder)> {
    exhaustive_search(covariance(pilots)?.r(), cb)
}
