use std::collections::BTreeSet;

use super::store::attribution_order;
use super::{Chunk, RetrievalConfig, ScoredPassage};

/// w_domain = w_base · (1 + α_topic) · (1 + β_metric) · γ_design, times the
/// threshold penalty for threshold-heavy passages.
pub fn domain_weight(chunk: &Chunk, query_topics: &[String], cfg: &RetrievalConfig) -> f64 {
    let wanted: BTreeSet<String> = query_topics.iter().map(|t| t.to_lowercase()).collect();
    let overlap = chunk
        .topics
        .iter()
        .map(|t| t.to_lowercase())
        .collect::<BTreeSet<_>>()
        .intersection(&wanted)
        .count();
    let alpha = (cfg.topic_bonus_unit * overlap as f64).min(cfg.topic_bonus_cap);
    let beta = chunk
        .primary_metric
        .and_then(|m| cfg.metric_weights.get(&m).copied())
        .unwrap_or(0.0);
    let gamma = cfg.design_modifiers.get(&chunk.study_design).copied().unwrap_or(1.0);
    let mut w = cfg.w_base * (1.0 + alpha) * (1.0 + beta) * gamma;
    if chunk.threshold_heavy {
        w *= cfg.threshold_penalty;
    }
    w
}

/// Re-scores passages with s_adj = s_raw · w_domain and sorts best first.
/// Never adds or drops passages.
pub fn govern(mut passages: Vec<ScoredPassage>, query_topics: &[String], cfg: &RetrievalConfig) -> Vec<ScoredPassage> {
    for p in &mut passages {
        p.w_domain = domain_weight(&p.chunk, query_topics, cfg);
        p.s_adj = p.s_raw * p.w_domain;
    }
    passages.sort_by(|a, b| {
        b.s_adj
            .total_cmp(&a.s_adj)
            .then(b.s_raw.total_cmp(&a.s_raw))
            .then_with(|| attribution_order(a, b))
    });
    passages
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::StudyDesign;
    use crate::metric::Metric;
    use proptest::prelude::*;

    fn passage(id: &str, s_raw: f64, metric: Option<Metric>, design: StudyDesign, heavy: bool) -> ScoredPassage {
        ScoredPassage {
            chunk: Chunk {
                id: id.into(),
                text: String::new(),
                source_file: format!("{id}.txt"),
                page: 1,
                study_design: design,
                topics: vec![],
                primary_metric: metric,
                threshold_heavy: heavy,
            },
            s_raw,
            w_domain: 1.0,
            s_adj: s_raw,
        }
    }

    #[test]
    fn weight_examples() {
        let cfg = RetrievalConfig::default();
        let p = govern(vec![passage("a", 1.0, Some(Metric::Rmssd), StudyDesign::Rct, false)], &[], &cfg);
        assert!((p[0].s_adj - 2.052).abs() < 1e-12);
        let p = govern(vec![passage("a", 1.0, Some(Metric::Rmssd), StudyDesign::Rct, true)], &[], &cfg);
        assert!((p[0].s_adj - 1.7442).abs() < 1e-12);
        let p = govern(vec![passage("a", 0.42, None, StudyDesign::Unknown, false)], &[], &cfg);
        assert_eq!(p[0].s_adj, 0.42);
        assert_eq!(p[0].w_domain, 1.0);
    }

    #[test]
    fn topic_bonus_is_capped() {
        let cfg = RetrievalConfig::default();
        let mut c = passage("a", 1.0, None, StudyDesign::Unknown, false).chunk;
        c.topics = (0..8).map(|i| format!("t{i}")).collect();
        let topics: Vec<String> = (0..8).map(|i| format!("T{i}")).collect();
        assert!((domain_weight(&c, &topics, &cfg) - 1.5).abs() < 1e-12);
        assert!((domain_weight(&c, &topics[..2], &cfg) - 1.2).abs() < 1e-12);
    }

    #[test]
    fn rmssd_outranks_lfhf_at_equal_similarity() {
        let cfg = RetrievalConfig::default();
        let out = govern(
            vec![
                passage("a", 0.6, Some(Metric::LfHf), StudyDesign::Rct, false),
                passage("z", 0.6, Some(Metric::Rmssd), StudyDesign::Rct, false),
            ],
            &[],
            &cfg,
        );
        assert_eq!(out[0].chunk.primary_metric, Some(Metric::Rmssd));
    }

    proptest! {
        #[test]
        fn govern_preserves_multiset(raws in prop::collection::vec(0.0f64..1.0, 0..20)) {
            let cfg = RetrievalConfig::default();
            let input: Vec<ScoredPassage> = raws.iter().enumerate()
                .map(|(i, r)| passage(&format!("p{i:02}"), *r, Some(Metric::ALL[i % 19]), StudyDesign::Observational, i % 3 == 0))
                .collect();
            let out = govern(input.clone(), &[], &cfg);
            let mut a: Vec<String> = input.iter().map(|p| p.chunk.id.clone()).collect();
            let mut b: Vec<String> = out.iter().map(|p| p.chunk.id.clone()).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
            for p in &out {
                prop_assert_eq!(p.s_adj, p.s_raw * p.w_domain);
            }
        }

        #[test]
        fn monotone_in_beta_and_gamma(s in 0.01f64..1.0) {
            let cfg = RetrievalConfig::default();
            let w = |m, d| domain_weight(&passage("x", s, m, d, false).chunk, &[], &cfg);
            prop_assert!(w(Some(Metric::Rmssd), StudyDesign::Rct) > w(Some(Metric::Sdnn), StudyDesign::Rct));
            prop_assert!(w(Some(Metric::Sdnn), StudyDesign::Rct) > w(Some(Metric::Sdnn), StudyDesign::Observational));
            prop_assert!(w(Some(Metric::Sdnn), StudyDesign::Observational) > w(Some(Metric::Sdnn), StudyDesign::Opinion));
        }
    }
}
