use serde::{Deserialize, Serialize};

use crate::guardrails::{ContradictionFlag, ContradictionPattern};
use crate::metric::Metric;
use crate::normalization::{ChangeState, NormalizedPanel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryKind {
    State { metric: Metric, state: ChangeState, up: bool },
    Warning { pattern: ContradictionPattern },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    pub topics: Vec<String>,
    #[serde(flatten)]
    pub kind: QueryKind,
}

/// Topic tag used to match chunk topics against a metric.
pub fn metric_topic(m: Metric) -> &'static str {
    match m {
        Metric::MeanRr => "meanrr",
        Metric::Sdnn => "sdnn",
        Metric::MeanHr => "heart_rate",
        Metric::Sdhr => "sdhr",
        Metric::Rmssd => "rmssd",
        Metric::Nn50 | Metric::Pnn50 => "pnn50",
        Metric::SdnnIndex => "sdnn",
        Metric::UlfRatio | Metric::LfRatio | Metric::HfRatio | Metric::PeakLf | Metric::PeakHf => "spectral",
        Metric::LfHf => "lfhf",
        Metric::Sd1 | Metric::Sd2 | Metric::Sd1Sd2 => "poincare",
        Metric::SampEn => "sampen",
        Metric::DfaAlpha => "dfa",
    }
}

fn phrasing(m: Metric, up: bool) -> &'static str {
    match (m, up) {
        (Metric::Rmssd, true) => "elevated vagal tone",
        (Metric::Rmssd, false) => "reduced parasympathetic withdrawal",
        (Metric::Sdnn | Metric::SdnnIndex, true) => "increased overall variability",
        (Metric::Sdnn | Metric::SdnnIndex, false) => "reduced overall variability",
        (Metric::MeanHr, true) => "elevated heart rate sympathetic arousal",
        (Metric::MeanHr, false) => "lowered heart rate relaxation",
        (Metric::MeanRr, true) => "longer beat intervals slower heart rate",
        (Metric::MeanRr, false) => "shorter beat intervals faster heart rate",
        (Metric::Pnn50, true) => "increased vagal modulation",
        (Metric::Pnn50, false) => "decreased vagal modulation",
        (Metric::LfHf, true) => "increased ratio sympathovagal balance interpretation",
        (Metric::LfHf, false) => "decreased ratio respiratory influence",
        (Metric::SampEn, true) => "increased signal complexity",
        (Metric::SampEn, false) => "reduced complexity regularity",
        (Metric::DfaAlpha, true) => "increased fractal correlation",
        (Metric::DfaAlpha, false) => "reduced fractal correlation",
        (_, true) => "increased",
        (_, false) => "decreased",
    }
}

fn pattern_metrics(p: ContradictionPattern) -> &'static [Metric] {
    match p {
        ContradictionPattern::Coactivation => &[Metric::Rmssd, Metric::LfHf],
        ContradictionPattern::LfhfUnreliable => &[Metric::MeanHr, Metric::SampEn, Metric::LfHf],
        ContradictionPattern::DfaNotAutonomic => &[Metric::DfaAlpha, Metric::Rmssd],
        ContradictionPattern::GeometryVsComplexity => &[Metric::Sd1Sd2, Metric::SampEn],
        ContradictionPattern::ExtremeRatio => &[Metric::LfHf],
    }
}

/// One state query per non-baseline metric followed by one warning query per
/// contradiction flag. Pure template instantiation.
pub fn build_queries(panel: &NormalizedPanel, contradictions: &[ContradictionFlag]) -> Vec<Query> {
    let mut out = Vec::new();
    for e in &panel.entries {
        if e.state == ChangeState::Baseline {
            continue;
        }
        let up = e.is_up();
        if !up && !e.is_down() {
            continue;
        }
        out.push(Query {
            text: format!("{} {} {} change", e.metric.name(), phrasing(e.metric, up), e.state.as_str()),
            topics: vec![metric_topic(e.metric).to_string()],
            kind: QueryKind::State {
                metric: e.metric,
                state: e.state,
                up,
            },
        });
    }
    for c in contradictions {
        let mut topics = vec![c.pattern.id().to_string()];
        for m in pattern_metrics(c.pattern) {
            let t = metric_topic(*m).to_string();
            if !topics.contains(&t) {
                topics.push(t);
            }
        }
        out.push(Query {
            text: format!("warning: {}", c.injected_query_topic),
            topics,
            kind: QueryKind::Warning { pattern: c.pattern },
        });
    }
    out
}
