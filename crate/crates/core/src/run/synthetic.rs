//! Seeded synthetic trials and a small literature corpus, so the whole
//! pipeline runs without a dataset, a model or an embedding service.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::io::write_atomic;
use crate::error::Result;
use crate::signal::trial::Trial;
use crate::signal::RespSignal;

/// Autonomic signature of one synthetic trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub subject: &'static str,
    pub trial: &'static str,
    pub valence: u8,
    pub arousal: u8,
    pub mean_rr_ms: f64,
    /// Respiratory sinus arrhythmia amplitude (ms).
    pub hf_amp_ms: f64,
    /// Baroreflex (0.1 Hz) amplitude (ms).
    pub lf_amp_ms: f64,
    /// Beat-to-beat jitter SD (ms); raises entropy.
    pub jitter_ms: f64,
    pub resp_hz: f64,
    pub with_eeg: bool,
}

const DURATION_S: f64 = 300.0;
const RESP_RATE_HZ: f64 = 4.0;

/// The bundled six-trial set: two subjects, three trials each. One trial is
/// neutral on valence, one breathes inside the LF band, one carries EEG.
pub fn default_specs() -> Vec<TrialSpec> {
    let spec = |subject, trial, valence, arousal, mean_rr_ms, hf_amp_ms, lf_amp_ms, jitter_ms, resp_hz, with_eeg| TrialSpec {
        subject,
        trial,
        valence,
        arousal,
        mean_rr_ms,
        hf_amp_ms,
        lf_amp_ms,
        jitter_ms,
        resp_hz,
        with_eeg,
    };
    vec![
        spec("S01", "T1", 4, 4, 720.0, 12.0, 18.0, 14.0, 0.25, true),
        spec("S01", "T2", 2, 2, 880.0, 40.0, 35.0, 5.0, 0.25, false),
        spec("S01", "T3", 5, 1, 900.0, 45.0, 15.0, 12.0, 0.25, false),
        spec("S02", "T1", 1, 5, 650.0, 10.0, 30.0, 4.0, 0.30, false),
        spec("S02", "T2", 3, 4, 700.0, 15.0, 25.0, 8.0, 0.25, false),
        spec("S02", "T3", 4, 2, 820.0, 30.0, 12.0, 11.0, 0.12, false),
    ]
}

/// RR intervals, respiration and optional EEG for one spec. Beats are placed
/// by integrating the modulated interval so oscillations sit at true times.
pub fn synthesize(spec: &TrialSpec, seed: u64) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv(spec.subject) ^ fnv(spec.trial).rotate_left(17));
    let jitter = Normal::new(0.0, spec.jitter_ms).expect("jitter SD is finite and non-negative");
    let phase = Normal::new(0.0, 1.0).expect("unit normal").sample(&mut rng);
    let mut rr = Vec::new();
    let mut t = 0.0;
    while t < DURATION_S {
        let x = spec.mean_rr_ms
            + spec.hf_amp_ms * (TAU * spec.resp_hz * t).sin()
            + spec.lf_amp_ms * (TAU * 0.1 * t + phase).sin()
            + jitter.sample(&mut rng);
        let x = (x * 100.0).round() / 100.0;
        rr.push(x);
        t += x / 1000.0;
    }
    let breath_noise = Normal::new(0.0, 0.05).expect("finite SD");
    let samples = (0..(DURATION_S * RESP_RATE_HZ) as usize)
        .map(|k| {
            let v = (TAU * spec.resp_hz * k as f64 / RESP_RATE_HZ).sin() + breath_noise.sample(&mut rng);
            (v * 1e4).round() / 1e4
        })
        .collect();
    let eeg = spec.with_eeg.then(|| {
        BTreeMap::from([
            ("alpha_power".to_string(), 8.5),
            ("beta_power".to_string(), if spec.arousal > 3 { 12.0 } else { 6.0 }),
        ])
    });
    Trial {
        subject_id: spec.subject.to_string(),
        trial_id: spec.trial.to_string(),
        rr_ms: rr,
        resp: Some(RespSignal {
            rate_hz: RESP_RATE_HZ,
            samples,
        }),
        valence: Some(spec.valence),
        arousal: Some(spec.arousal),
        eeg,
    }
}

fn fnv(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

pub fn synthetic_trials(seed: u64) -> Vec<Trial> {
    default_specs().iter().map(|s| synthesize(s, seed)).collect()
}

/// (relative path, manifest line, text) for each bundled document.
pub const CORPUS: [(&str, &str, &str); 6] = [
    (
        "vagal_tone.txt",
        r#"{"path":"vagal_tone.txt","study_design":"rct","topics":["rmssd","pnn50"],"primary_metric":"RMSSD"}"#,
        "RMSSD reflects vagal tone. An elevated RMSSD relative to the individual baseline indicates increased vagal activity and parasympathetic recovery.\n\nA reduced RMSSD marks parasympathetic withdrawal, which accompanies stress and sympathetic arousal. Within-subject change is more informative than population norms for short recordings.\n\x0cIn controlled trials, slow paced breathing raised vagal modulation and pNN50 while heart rate fell.",
    ),
    (
        "heart_rate_arousal.txt",
        r#"{"path":"heart_rate_arousal.txt","study_design":"observational","topics":["heart_rate","meanrr"],"primary_metric":"MeanHR"}"#,
        "Elevated heart rate during emotional stimuli tracks sympathetic arousal. A marked rise in MeanHR with a fall in RMSSD is the classic signature of high arousal.\n\nLowered heart rate and longer beat intervals accompany relaxation and low arousal states.",
    ),
    (
        "lfhf_limits.txt",
        r#"{"path":"lfhf_limits.txt","study_design":"opinion","topics":["lfhf","lfhf_unreliable","extreme_ratio","coactivation"],"primary_metric":"LF/HF"}"#,
        "The LF/HF ratio is not a reliable index of sympathovagal balance. Slow breathing moves respiratory power into the LF band and inflates the ratio.\n\nAn extreme LF/HF ratio above 3.0 or below 0.3 in short recordings usually reflects a respiratory artifact rather than autonomic state. Sympathetic-parasympathetic coactivation can raise both RMSSD and LF/HF.",
    ),
    (
        "complexity.txt",
        r#"{"path":"complexity.txt","study_design":"controlled","topics":["sampen","dfa","dfa_not_autonomic","geometry_vs_complexity"],"primary_metric":"SampEn"}"#,
        "Sample entropy quantifies signal complexity. Increased signal complexity is associated with adaptive regulation and positive affect, while reduced complexity and greater regularity appear under stress.\n\nDFA alpha describes fractal correlation and is not a direct autonomic measure. Poincare geometry and entropy capture different constructs.",
    ),
    (
        "respiration.txt",
        r#"{"path":"respiration.txt","study_design":"controlled","topics":["spectral","respiration","rsa"]}"#,
        "Respiratory sinus arrhythmia places HF power at the breathing frequency. When breathing falls below 0.15 Hz the respiratory peak enters the LF band and spectral indices lose their usual meaning.\n\nCompare the respiratory frequency with the HF peak before interpreting band powers.",
    ),
    (
        "short_recordings.txt",
        r#"{"path":"short_recordings.txt","study_design":"opinion","topics":["sdnn","poincare","spectral"],"primary_metric":"SDNN"}"#,
        "Short recordings under five minutes limit ULF estimates and nonlinear metrics. Reduced overall variability in SDNN should be read against the same subject's baseline.\n\nPoincare plots with fewer than 100 points do not support stable SD1/SD2 estimates.",
    ),
];

/// Writes `trials.json`, `corpus/*.txt` and `corpus/manifest.jsonl`.
pub fn write_synthetic(dir: &Path, seed: u64) -> Result<Vec<Trial>> {
    let trials = synthetic_trials(seed);
    let mut json = serde_json::to_vec_pretty(&trials)?;
    json.push(b'\n');
    write_atomic(&dir.join("trials.json"), &json)?;
    let corpus = dir.join("corpus");
    let mut manifest = String::new();
    for (path, line, text) in CORPUS {
        write_atomic(&corpus.join(path), text.as_bytes())?;
        manifest.push_str(line);
        manifest.push('\n');
    }
    write_atomic(&corpus.join("manifest.jsonl"), manifest.as_bytes())?;
    Ok(trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::construct_label;
    use crate::knowledge::parse_manifest;
    use crate::signal::{extract_features, FeatureConfig};

    #[test]
    fn seeded_and_reproducible() {
        assert_eq!(synthetic_trials(1), synthetic_trials(1));
        assert_ne!(synthetic_trials(1)[0].rr_ms, synthetic_trials(2)[0].rr_ms);
    }

    #[test]
    fn signatures_show_up_in_features() {
        let cfg = FeatureConfig::default();
        let trials = synthetic_trials(42);
        let panels: Vec<_> = trials
            .iter()
            .map(|t| extract_features(&t.rr_series(), t.resp.as_ref(), &cfg).unwrap())
            .collect();
        // S01_T2 is relaxed with strong RSA, S01_T1 aroused with weak RSA
        assert!(panels[1].time.rmssd > 1.5 * panels[0].time.rmssd);
        assert!(panels[0].time.mean_hr > panels[1].time.mean_hr);
        for p in &panels {
            assert!(p.freq.is_some() && p.nonlinear.is_some());
            assert!(p.poincare.n_points >= 100);
        }
        let f_resp = panels[5].f_resp.unwrap();
        assert!((f_resp - 0.12).abs() < 0.02, "{f_resp}");
    }

    #[test]
    fn labels_cover_all_quadrants_and_one_neutral() {
        let labels: Vec<_> = default_specs()
            .iter()
            .map(|s| construct_label(i64::from(s.valence), i64::from(s.arousal)).unwrap().label)
            .collect();
        assert_eq!(labels.iter().filter(|l| l.is_none()).count(), 1);
        let distinct: std::collections::BTreeSet<_> = labels.iter().flatten().collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn manifest_lines_parse() {
        let text: String = CORPUS.iter().map(|(_, l, _)| format!("{l}\n")).collect();
        let m = parse_manifest(&text).unwrap();
        assert_eq!(m.len(), CORPUS.len());
        for ((path, _, _), e) in CORPUS.iter().zip(&m) {
            assert_eq!(&e.path, path);
        }
    }
}
