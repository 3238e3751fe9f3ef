//! Named HRV metrics and their lookup in a feature panel.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::signal::FeaturePanel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    MeanRr,
    Sdnn,
    MeanHr,
    Sdhr,
    Rmssd,
    Nn50,
    Pnn50,
    SdnnIndex,
    UlfRatio,
    LfRatio,
    HfRatio,
    LfHf,
    PeakLf,
    PeakHf,
    Sd1,
    Sd2,
    Sd1Sd2,
    SampEn,
    DfaAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Time,
    Frequency,
    Nonlinear,
}

impl Metric {
    pub const ALL: [Metric; 19] = [
        Metric::MeanRr,
        Metric::Sdnn,
        Metric::MeanHr,
        Metric::Sdhr,
        Metric::Rmssd,
        Metric::Nn50,
        Metric::Pnn50,
        Metric::SdnnIndex,
        Metric::UlfRatio,
        Metric::LfRatio,
        Metric::HfRatio,
        Metric::LfHf,
        Metric::PeakLf,
        Metric::PeakHf,
        Metric::Sd1,
        Metric::Sd2,
        Metric::Sd1Sd2,
        Metric::SampEn,
        Metric::DfaAlpha,
    ];

    /// Metrics that receive z-scores and change states.
    pub const NORMALIZED: [Metric; 15] = [
        Metric::MeanRr,
        Metric::Sdnn,
        Metric::MeanHr,
        Metric::Sdhr,
        Metric::Rmssd,
        Metric::Pnn50,
        Metric::SdnnIndex,
        Metric::LfRatio,
        Metric::HfRatio,
        Metric::LfHf,
        Metric::Sd1,
        Metric::Sd2,
        Metric::Sd1Sd2,
        Metric::SampEn,
        Metric::DfaAlpha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::MeanRr => "MeanRR",
            Metric::Sdnn => "SDNN",
            Metric::MeanHr => "MeanHR",
            Metric::Sdhr => "SDHR",
            Metric::Rmssd => "RMSSD",
            Metric::Nn50 => "NN50",
            Metric::Pnn50 => "pNN50",
            Metric::SdnnIndex => "SDNN_index",
            Metric::UlfRatio => "ULF_ratio",
            Metric::LfRatio => "LF_ratio",
            Metric::HfRatio => "HF_ratio",
            Metric::LfHf => "LF/HF",
            Metric::PeakLf => "peak_LF",
            Metric::PeakHf => "peak_HF",
            Metric::Sd1 => "SD1",
            Metric::Sd2 => "SD2",
            Metric::Sd1Sd2 => "SD1/SD2",
            Metric::SampEn => "SampEn",
            Metric::DfaAlpha => "DFA_alpha",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Metric::MeanRr | Metric::Sdnn | Metric::Rmssd | Metric::SdnnIndex | Metric::Sd1 | Metric::Sd2 => "ms",
            Metric::MeanHr | Metric::Sdhr => "bpm",
            Metric::Pnn50 => "%",
            Metric::PeakLf | Metric::PeakHf => "Hz",
            _ => "",
        }
    }

    pub fn domain(self) -> Domain {
        match self {
            Metric::MeanRr
            | Metric::Sdnn
            | Metric::MeanHr
            | Metric::Sdhr
            | Metric::Rmssd
            | Metric::Nn50
            | Metric::Pnn50
            | Metric::SdnnIndex => Domain::Time,
            Metric::UlfRatio
            | Metric::LfRatio
            | Metric::HfRatio
            | Metric::LfHf
            | Metric::PeakLf
            | Metric::PeakHf => Domain::Frequency,
            _ => Domain::Nonlinear,
        }
    }

    /// Reads the metric from a panel; `None` when the owning block is missing.
    pub fn value(self, p: &FeaturePanel) -> Option<f64> {
        let t = &p.time;
        let v = match self {
            Metric::MeanRr => t.mean_rr,
            Metric::Sdnn => t.sdnn,
            Metric::MeanHr => t.mean_hr,
            Metric::Sdhr => t.sdhr,
            Metric::Rmssd => t.rmssd,
            Metric::Nn50 => t.nn50 as f64,
            Metric::Pnn50 => t.pnn50,
            Metric::SdnnIndex => t.sdnn_index,
            Metric::UlfRatio => p.freq.as_ref()?.ulf_ratio,
            Metric::LfRatio => p.freq.as_ref()?.lf_ratio,
            Metric::HfRatio => p.freq.as_ref()?.hf_ratio,
            Metric::LfHf => p.freq.as_ref()?.lf_hf,
            Metric::PeakLf => p.freq.as_ref()?.peak_lf,
            Metric::PeakHf => p.freq.as_ref()?.peak_hf,
            Metric::Sd1 => p.nonlinear.as_ref()?.sd1,
            Metric::Sd2 => p.nonlinear.as_ref()?.sd2,
            Metric::Sd1Sd2 => {
                let n = p.nonlinear.as_ref()?;
                if n.sd2 <= 0.0 {
                    return None;
                }
                n.sd1 / n.sd2
            }
            Metric::SampEn => p.nonlinear.as_ref()?.sampen,
            Metric::DfaAlpha => p.nonlinear.as_ref()?.dfa_alpha,
        };
        v.is_finite().then_some(v)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    /// Accepts canonical names plus common spellings ("LFHF", "DFA", "SD1SD2", "HR").
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        let m = match key.as_str() {
            "meanrr" | "rr" => Metric::MeanRr,
            "sdnn" | "sdrr" => Metric::Sdnn,
            "meanhr" | "hr" | "heartrate" => Metric::MeanHr,
            "sdhr" => Metric::Sdhr,
            "rmssd" => Metric::Rmssd,
            "nn50" => Metric::Nn50,
            "pnn50" => Metric::Pnn50,
            "sdnnindex" => Metric::SdnnIndex,
            "ulfratio" => Metric::UlfRatio,
            "lfratio" => Metric::LfRatio,
            "hfratio" => Metric::HfRatio,
            "lfhf" => Metric::LfHf,
            "peaklf" => Metric::PeakLf,
            "peakhf" | "fhf" => Metric::PeakHf,
            "sd1" => Metric::Sd1,
            "sd2" => Metric::Sd2,
            "sd1sd2" => Metric::Sd1Sd2,
            "sampen" | "sampleentropy" => Metric::SampEn,
            "dfa" | "dfaalpha" => Metric::DfaAlpha,
            _ => return Err(format!("unknown metric {s:?}")),
        };
        Ok(m)
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
