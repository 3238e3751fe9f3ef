use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::metric::Metric;

/// Circumplex quadrant of a report, or `Unknown` when none could be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StateLabel {
    Hvha,
    Hvla,
    Lvha,
    Lvla,
    #[serde(rename = "Unknown")]
    Unknown,
}

impl StateLabel {
    pub const QUADRANTS: [StateLabel; 4] = [StateLabel::Hvha, StateLabel::Hvla, StateLabel::Lvha, StateLabel::Lvla];

    pub fn as_str(self) -> &'static str {
        match self {
            StateLabel::Hvha => "HVHA",
            StateLabel::Hvla => "HVLA",
            StateLabel::Lvha => "LVHA",
            StateLabel::Lvla => "LVLA",
            StateLabel::Unknown => "Unknown",
        }
    }

    pub fn from_dims(high_valence: bool, high_arousal: bool) -> Self {
        match (high_valence, high_arousal) {
            (true, true) => StateLabel::Hvha,
            (true, false) => StateLabel::Hvla,
            (false, true) => StateLabel::Lvha,
            (false, false) => StateLabel::Lvla,
        }
    }

    pub fn is_known(self) -> bool {
        self != StateLabel::Unknown
    }

    pub fn high_valence(self) -> Option<bool> {
        match self {
            StateLabel::Hvha | StateLabel::Hvla => Some(true),
            StateLabel::Lvha | StateLabel::Lvla => Some(false),
            StateLabel::Unknown => None,
        }
    }

    pub fn high_arousal(self) -> Option<bool> {
        match self {
            StateLabel::Hvha | StateLabel::Lvha => Some(true),
            StateLabel::Hvla | StateLabel::Lvla => Some(false),
            StateLabel::Unknown => None,
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StateLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HVHA" => Ok(StateLabel::Hvha),
            "HVLA" => Ok(StateLabel::Hvla),
            "LVHA" => Ok(StateLabel::Lvha),
            "LVLA" => Ok(StateLabel::Lvla),
            "UNKNOWN" | "OTHER" => Ok(StateLabel::Unknown),
            _ => Err(format!("unknown state label {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Confidence {
    Low,
    Medium,
    High,
}

impl Confidence {
    pub fn downgrade(self) -> Self {
        match self {
            Confidence::High => Confidence::Medium,
            _ => Confidence::Low,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::High => "High",
            Confidence::Medium => "Medium",
            Confidence::Low => "Low",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredReport {
    pub state: StateLabel,
    /// Text after the `State:` label, present even when it names no quadrant.
    pub state_raw: Option<String>,
    pub confidence: Option<Confidence>,
    pub rationale: String,
    pub limitations: String,
    pub z_scores_cited: BTreeMap<Metric, f64>,
    pub rag_citations: Vec<String>,
    pub raw_text: String,
}

static STATE_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?im)^[\s*#>_-]*(?:final\s+)?state[*_\s]*[:=][*_\s]*(.*)$").expect("static regex"));
static QUADRANT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(HVHA|HVLA|LVHA|LVLA)\b").expect("static regex"));
static CONFIDENCE_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?im)^[\s*#>_-]*confidence(?:\s+level)?[*_\s]*[:=][*_\s]*(high|medium|low)\b").expect("static regex")
});
static SECTION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?im)^[\s*#>_-]*(state|confidence|rationale|limitations)(?:\s+level)?[*_\s]*[:=][*_\s]*").expect("static regex")
});
static Z_VALUE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bz(?:_?(?:Δ|delta|trad|s6|d))?\s*[=:]\s*([+\-−]?\d+(?:\.\d+)?)").expect("static regex")
});
static CITATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[RAG:\s*([^,\]]+?)\s*,\s*p\.\s*(\d+)\s*\]").expect("static regex"));

/// Metric spellings searched for ahead of a z-value, longest first so that
/// "SDNN_index" wins over "SDNN".
const METRIC_ALIASES: &[(&str, Metric)] = &[
    ("sdnn_index", Metric::SdnnIndex),
    ("dfa_alpha", Metric::DfaAlpha),
    ("dfa α", Metric::DfaAlpha),
    ("sd1/sd2", Metric::Sd1Sd2),
    ("lf_ratio", Metric::LfRatio),
    ("hf_ratio", Metric::HfRatio),
    ("ulf_ratio", Metric::UlfRatio),
    ("meanhr", Metric::MeanHr),
    ("meanrr", Metric::MeanRr),
    ("sampen", Metric::SampEn),
    ("rmssd", Metric::Rmssd),
    ("pnn50", Metric::Pnn50),
    ("lf/hf", Metric::LfHf),
    ("sdnn", Metric::Sdnn),
    ("sdhr", Metric::Sdhr),
    ("dfa", Metric::DfaAlpha),
    ("sd1", Metric::Sd1),
    ("sd2", Metric::Sd2),
];

const Z_WINDOW: usize = 40;

fn section(text: &str, name: &str) -> String {
    let heads: Vec<(usize, usize, String)> = SECTION
        .captures_iter(text)
        .map(|c| {
            let m = c.get(0).unwrap();
            (m.start(), m.end(), c[1].to_ascii_lowercase())
        })
        .collect();
    match heads.iter().position(|h| h.2 == name) {
        Some(i) => {
            let end = heads.get(i + 1).map_or(text.len(), |h| h.0);
            text[heads[i].1..end].trim().to_string()
        }
        None => String::new(),
    }
}

fn floor_char_boundary(s: &str, mut i: usize) -> usize {
    while !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}

/// Metric named closest before byte `at`, within the 40-character window.
fn metric_before(text: &str, at: usize) -> Option<Metric> {
    let start = text[..at].char_indices().rev().nth(Z_WINDOW - 1).map_or(0, |(i, _)| i);
    let window = text[floor_char_boundary(text, start)..at].to_lowercase();
    METRIC_ALIASES
        .iter()
        .filter_map(|(alias, m)| window.rfind(alias).map(|p| (p + alias.len(), alias.len(), *m)))
        .max_by_key(|(end, len, _)| (*end, *len))
        .map(|(_, _, m)| m)
}

/// Pulls every "<metric> … z = <value>" pair; the first value per metric wins.
pub fn extract_z_scores(text: &str) -> BTreeMap<Metric, f64> {
    let mut out = BTreeMap::new();
    for c in Z_VALUE.captures_iter(text) {
        let whole = c.get(0).unwrap();
        let Ok(v) = c[1].replace('−', "-").parse::<f64>() else { continue };
        if !v.is_finite() {
            continue;
        }
        if let Some(m) = metric_before(text, whole.start()) {
            out.entry(m).or_insert(v);
        }
    }
    out
}

pub fn extract_citations(text: &str) -> Vec<String> {
    CITATION
        .captures_iter(text)
        .map(|c| format!("[RAG: {}, p.{}]", c[1].trim(), &c[2]))
        .collect()
}

/// Total parser over the Step-8 template; anything missing stays empty.
pub fn parse_report(text: &str) -> StructuredReport {
    let state_raw = STATE_LINE.captures(text).map(|c| c[1].trim().trim_matches(['*', '_']).trim().to_string());
    let state = state_raw
        .as_deref()
        .and_then(|s| QUADRANT.captures(s))
        .and_then(|c| c[1].parse().ok())
        .unwrap_or(StateLabel::Unknown);
    let confidence = CONFIDENCE_LINE.captures(text).map(|c| match c[1].to_ascii_lowercase().as_str() {
        "high" => Confidence::High,
        "medium" => Confidence::Medium,
        _ => Confidence::Low,
    });
    StructuredReport {
        state,
        state_raw: state_raw.filter(|s| !s.is_empty()),
        confidence,
        rationale: section(text, "rationale"),
        limitations: section(text, "limitations"),
        z_scores_cited: extract_z_scores(text),
        rag_citations: extract_citations(text),
        raw_text: text.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_fields() {
        let r = parse_report(
            "State: HVHA\nConfidence: High\nRationale: RMSSD (z = -1.25) fell [RAG: a.txt, p.3].\nLimitations: short record.",
        );
        assert_eq!(r.state, StateLabel::Hvha);
        assert_eq!(r.confidence, Some(Confidence::High));
        assert_eq!(r.z_scores_cited[&Metric::Rmssd], -1.25);
        assert_eq!(r.rag_citations, vec!["[RAG: a.txt, p.3]".to_string()]);
        assert!(r.rationale.starts_with("RMSSD"));
        assert_eq!(r.limitations, "short record.");
    }

    #[test]
    fn markdown_decorations_are_tolerated() {
        let r = parse_report("**State:** lvla (low valence, low arousal)\n**Confidence level**: medium\n");
        assert_eq!(r.state, StateLabel::Lvla);
        assert_eq!(r.confidence, Some(Confidence::Medium));
    }

    #[test]
    fn missing_or_unlabelled_state_is_unknown() {
        let r = parse_report("The subject seems calm.");
        assert_eq!((r.state, r.state_raw.clone()), (StateLabel::Unknown, None));
        let r = parse_report("State: relaxed\n");
        assert_eq!(r.state, StateLabel::Unknown);
        assert_eq!(r.state_raw.as_deref(), Some("relaxed"));
    }

    #[test]
    fn z_pattern_needs_a_nearby_metric() {
        let z = extract_z_scores("SDNN_index z: 0.4, LF/HF (z_Δ = −2.0) and later z = 3");
        assert_eq!(z.get(&Metric::SdnnIndex), Some(&0.4));
        assert_eq!(z.get(&Metric::LfHf), Some(&-2.0));
        assert_eq!(z.len(), 2);
        let far = format!("RMSSD {} z = 1.0", "x".repeat(45));
        assert!(extract_z_scores(&far).is_empty());
        assert_eq!(extract_z_scores("MeanHR rose sharply (z = +1.8)")[&Metric::MeanHr], 1.8);
    }

    #[test]
    fn labels_round_trip() {
        for l in StateLabel::QUADRANTS {
            assert_eq!(l.as_str().parse::<StateLabel>().unwrap(), l);
            assert_eq!(StateLabel::from_dims(l.high_valence().unwrap(), l.high_arousal().unwrap()), l);
        }
        assert_eq!(serde_json::to_string(&StateLabel::Unknown).unwrap(), "\"Unknown\"");
        assert_eq!(serde_json::to_string(&StateLabel::Hvla).unwrap(), "\"HVLA\"");
    }
}
