//! Hand-built panels for unit tests.

use crate::signal::{
    BandPowers, FeaturePanel, FrequencyFeatures, NonlinearFeatures, PoincareFeatures, QualityIndicators, TimeDomain,
};

/// A panel with every block present; only RMSSD and MeanHR vary.
pub(crate) fn panel_with(rmssd: f64, mean_hr: f64) -> FeaturePanel {
    FeaturePanel {
        subject_id: "S1".into(),
        trial_id: "T".into(),
        time: TimeDomain {
            mean_rr: 60000.0 / mean_hr,
            sdnn: 50.0,
            mean_hr,
            sdhr: 3.0,
            rmssd,
            nn50: 10,
            pnn50: 12.0,
            sdnn_index: 45.0,
        },
        freq: Some(FrequencyFeatures {
            peak_ulf: 0.02,
            peak_lf: 0.1,
            peak_hf: 0.25,
            ulf_ratio: 0.1,
            lf_ratio: 0.4,
            hf_ratio: 0.4,
            lf_hf: 1.0,
            band_powers: BandPowers {
                ulf: 100.0,
                lf: 400.0,
                hf: 400.0,
                total: 1000.0,
            },
            f_hf: 0.25,
            df_hz: 4.0 / 256.0,
            single_periodogram: false,
        }),
        nonlinear: Some(NonlinearFeatures {
            sd1: rmssd / std::f64::consts::SQRT_2,
            sd2: 60.0,
            sampen: 1.5,
            dfa_alpha: 1.0,
            sampen_counts: (100, 300),
            unstable: false,
        }),
        poincare: PoincareFeatures {
            n_points: 120,
            x_min: 700.0,
            x_max: 950.0,
            y_min: 700.0,
            y_max: 950.0,
            center_x: 820.0,
            center_y: 820.0,
        },
        f_resp: None,
        quality: QualityIndicators {
            artifact_rate: 0.0,
            valid_rr_ratio: 1.0,
            spectral_unreliable: false,
            nonlinear_unstable: false,
        },
    }
}
