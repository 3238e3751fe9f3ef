use serde::{Deserialize, Serialize};

use super::{welch_psd, Band};

/// Uniformly sampled respiration waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespSignal {
    pub rate_hz: f64,
    pub samples: Vec<f64>,
}

const MIN_DURATION_S: f64 = 30.0;
const SEGMENT_S: f64 = 64.0;
const RESP_BAND: Band = Band::new(0.1, 0.5 + 1e-9);

/// Dominant breathing frequency (Hz) in 0.1–0.5 Hz.
///
/// Absent or too-short input (under 30 s) yields `None`, which the RSA
/// guardrail reports as unknown.
pub fn respiratory_frequency(resp: Option<&RespSignal>) -> Option<f64> {
    let resp = resp?;
    if resp.rate_hz <= 0.0 || !resp.samples.iter().all(|v| v.is_finite()) {
        return None;
    }
    if (resp.samples.len() as f64) / resp.rate_hz < MIN_DURATION_S {
        return None;
    }
    let segment = ((SEGMENT_S * resp.rate_hz).round() as usize).min(resp.samples.len());
    welch_psd(&resp.samples, resp.rate_hz, segment, 0.5).peak_in(&RESP_BAND)
}
