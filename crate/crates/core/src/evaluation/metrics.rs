use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{corpus_crc, crc_report, AffectPoint, CorpusCrc, CrcConfig};
use crate::error::EvalError;
use crate::reasoning::{StateLabel, StructuredReport};

/// One scored trial. `gt` is `None` for neutral trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub subject: String,
    pub trial: String,
    pub gt: Option<StateLabel>,
    pub pred: StateLabel,
    /// Reference for the vagal reading of T3: high within-subject vagal tone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vagal_high: Option<bool>,
}

impl Pair {
    pub fn key(&self) -> String {
        format!("{}_{}", self.subject, self.trial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum T3Mode {
    /// Predicted valence half against self-reported valence.
    #[default]
    Valence,
    /// Predicted valence half against the trial's vagal-tone reference.
    Vagal,
}

fn scored(pairs: &[Pair]) -> Result<Vec<(StateLabel, StateLabel, Option<bool>)>, EvalError> {
    let v: Vec<_> = pairs.iter().filter_map(|p| p.gt.map(|g| (g, p.pred, p.vagal_high))).collect();
    if v.is_empty() {
        return Err(EvalError::EmptyEvaluationSet);
    }
    Ok(v)
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t3_mode: T3Mode,
    pub evaluated: usize,
    pub neutral_excluded: usize,
}

/// T1 exact match, T2 arousal half, T3 valence (or vagal) half, as
/// percentages over non-neutral trials. Unknown predictions are misses.
pub fn task_metrics(pairs: &[Pair], t3: T3Mode) -> Result<TaskMetrics, EvalError> {
    let s = scored(pairs)?;
    let n = s.len();
    let t1 = s.iter().filter(|(g, p, _)| g == p).count();
    let t2 = s.iter().filter(|(g, p, _)| p.high_arousal() == g.high_arousal()).count();
    let t3_hits = match t3 {
        T3Mode::Valence => s.iter().filter(|(g, p, _)| p.high_valence() == g.high_valence()).count(),
        T3Mode::Vagal => s
            .iter()
            .filter(|(_, p, vag)| vag.is_some() && p.high_valence() == *vag)
            .count(),
    };
    Ok(TaskMetrics {
        t1: pct(t1, n),
        t2: pct(t2, n),
        t3: pct(t3_hits, n),
        t3_mode: t3,
        evaluated: n,
        neutral_excluded: pairs.len() - n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityMetrics {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub reports: usize,
}

/// Q1 state line present, Q2 valid quadrant, Q3 citation marker, Q4 z-value.
pub fn quality_metrics(reports: &[&StructuredReport]) -> QualityMetrics {
    let n = reports.len();
    let count = |f: &dyn Fn(&StructuredReport) -> bool| reports.iter().filter(|r| f(r)).count();
    QualityMetrics {
        q1: pct(count(&|r| r.state_raw.is_some()), n),
        q2: pct(count(&|r| r.state.is_known()), n),
        q3: pct(count(&|r| !r.rag_citations.is_empty()), n),
        q4: pct(count(&|r| !r.z_scores_cited.is_empty()), n),
        reports: n,
    }
}

/// C1: percentage of trials (neutral included) with equal state labels.
pub fn agreement(a: &BTreeMap<String, StateLabel>, b: &BTreeMap<String, StateLabel>) -> Result<f64, EvalError> {
    let ka: BTreeSet<&String> = a.keys().collect();
    let kb: BTreeSet<&String> = b.keys().collect();
    let diff: Vec<String> = ka.symmetric_difference(&kb).map(|k| k.to_string()).collect();
    if !diff.is_empty() {
        return Err(EvalError::TrialSetMismatch(diff));
    }
    if a.is_empty() {
        return Err(EvalError::EmptyEvaluationSet);
    }
    let same = a.iter().filter(|(k, v)| b.get(*k) == Some(v)).count();
    Ok(pct(same, a.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WadSummary {
    pub mean: f64,
    pub normalized: f64,
    pub correct: usize,
    pub valence_only: usize,
    pub arousal_only: usize,
    pub both: usize,
    pub total: usize,
    pub unknown_excluded: usize,
}

/// Mean quadrant distance over non-neutral trials with a known prediction.
pub fn wad(pairs: &[Pair]) -> Result<WadSummary, EvalError> {
    let s = scored(pairs)?;
    let mut w = WadSummary {
        mean: 0.0,
        normalized: 0.0,
        correct: 0,
        valence_only: 0,
        arousal_only: 0,
        both: 0,
        total: 0,
        unknown_excluded: 0,
    };
    let mut sum = 0.0;
    for (g, p, _) in s {
        let (Some(pg), Some(pp)) = (AffectPoint::of(g), AffectPoint::of(p)) else {
            w.unknown_excluded += 1;
            continue;
        };
        sum += pg.distance(pp);
        w.total += 1;
        match (pg.v == pp.v, pg.a == pp.a) {
            (true, true) => w.correct += 1,
            (false, true) => w.valence_only += 1,
            (true, false) => w.arousal_only += 1,
            (false, false) => w.both += 1,
        }
    }
    if w.total == 0 {
        return Err(EvalError::EmptyEvaluationSet);
    }
    w.mean = sum / w.total as f64;
    w.normalized = w.mean / 8f64.sqrt();
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub label: StateLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Summary {
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassScore>,
    /// Rows: ground truth HVHA, HVLA, LVHA, LVLA. Columns: the same plus Unknown.
    pub confusion: [[usize; 5]; 4],
}

fn col(label: StateLabel) -> usize {
    match label {
        StateLabel::Hvha => 0,
        StateLabel::Hvla => 1,
        StateLabel::Lvha => 2,
        StateLabel::Lvla => 3,
        StateLabel::Unknown => 4,
    }
}

/// One-vs-rest F1 per ground-truth class; Unknown is a fifth prediction
/// column that can never be correct.
pub fn f1_and_confusion(pairs: &[Pair]) -> Result<F1Summary, EvalError> {
    let s = scored(pairs)?;
    let mut confusion = [[0usize; 5]; 4];
    for (g, p, _) in &s {
        confusion[col(*g)][col(*p)] += 1;
    }
    let total = s.len();
    let per_class: Vec<ClassScore> = StateLabel::QUADRANTS
        .iter()
        .map(|&label| {
            let i = col(label);
            let tp = confusion[i][i];
            let support: usize = confusion[i].iter().sum();
            let predicted: usize = confusion.iter().map(|row| row[i]).sum();
            let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
            let recall = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScore {
                label,
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / per_class.len() as f64;
    let weighted_f1 = per_class.iter().map(|c| c.f1 * c.support as f64).sum::<f64>() / total as f64;
    Ok(F1Summary {
        macro_f1,
        weighted_f1,
        per_class,
        confusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCollapse {
    pub label: StateLabel,
    pub share: f64,
}

/// Flags a prediction multiset with at least 90% of its mass on one label.
pub fn mode_collapse(preds: &[StateLabel]) -> Option<ModeCollapse> {
    if preds.is_empty() {
        return None;
    }
    let mut counts: BTreeMap<StateLabel, usize> = BTreeMap::new();
    for p in preds {
        *counts.entry(*p).or_default() += 1;
    }
    let (&label, &n) = counts.iter().max_by_key(|(l, n)| (**n, std::cmp::Reverse(**l)))?;
    let share = n as f64 / preds.len() as f64;
    (share >= 0.9).then_some(ModeCollapse { label, share })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub trials: usize,
    pub task: TaskMetrics,
    pub quality: Option<QualityMetrics>,
    pub c1: Option<f64>,
    pub f1: F1Summary,
    pub wad: WadSummary,
    pub crc: Option<CorpusCrc>,
    pub mode_collapse: Option<ModeCollapse>,
}

/// Full metric suite. Reports (keyed like the pairs) enable Q1–Q4 and CRC;
/// a baseline label map enables C1.
pub fn summarize(
    pairs: &[Pair],
    reports: Option<&BTreeMap<String, StructuredReport>>,
    baseline: Option<&BTreeMap<String, StateLabel>>,
    crc_cfg: &CrcConfig,
    t3: T3Mode,
) -> Result<MetricSummary, EvalError> {
    let preds: BTreeMap<String, StateLabel> = pairs.iter().map(|p| (p.key(), p.pred)).collect();
    let (quality, crc) = match reports {
        Some(r) => {
            let list: Vec<&StructuredReport> = r.values().collect();
            let crcs: Vec<_> = list.iter().map(|rep| crc_report(rep, crc_cfg)).collect();
            (Some(quality_metrics(&list)), Some(corpus_crc(&crcs)))
        }
        None => (None, None),
    };
    Ok(MetricSummary {
        trials: pairs.len(),
        task: task_metrics(pairs, t3)?,
        quality,
        c1: baseline.map(|b| agreement(&preds, b)).transpose()?,
        f1: f1_and_confusion(pairs)?,
        wad: wad(pairs)?,
        crc,
        mode_collapse: mode_collapse(&pairs.iter().map(|p| p.pred).collect::<Vec<_>>()),
    })
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.digits$}"))
}

impl MetricSummary {
    /// Aligned two-column text rendering.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("trials".into(), self.trials.to_string()),
            ("evaluated (non-neutral)".into(), self.task.evaluated.to_string()),
            ("T1 GT accuracy %".into(), format!("{:.1}", self.task.t1)),
            ("T2 arousal accuracy %".into(), format!("{:.1}", self.task.t2)),
            (
                match self.task.t3_mode {
                    T3Mode::Valence => "T3 vagal accuracy % (valence)".into(),
                    T3Mode::Vagal => "T3 vagal accuracy % (RMSSD)".into(),
                },
                format!("{:.1}", self.task.t3),
            ),
        ];
        if let Some(q) = &self.quality {
            rows.push(("Q1 state fill %".into(), format!("{:.1}", q.q1)));
            rows.push(("Q2 valid label %".into(), format!("{:.1}", q.q2)));
            rows.push(("Q3 RAG citation %".into(), format!("{:.1}", q.q3)));
            rows.push(("Q4 z-score cited %".into(), format!("{:.1}", q.q4)));
        }
        rows.push(("C1 state agreement %".into(), opt(self.c1, 1)));
        rows.push(("macro F1".into(), format!("{:.3}", self.f1.macro_f1)));
        rows.push(("weighted F1".into(), format!("{:.3}", self.f1.weighted_f1)));
        rows.push(("WAD mean".into(), format!("{:.3}", self.wad.mean)));
        rows.push(("WAD normalized".into(), format!("{:.3}", self.wad.normalized)));
        rows.push((
            "WAD correct/valence/arousal/both".into(),
            format!(
                "{}/{}/{}/{} of {}",
                self.wad.correct, self.wad.valence_only, self.wad.arousal_only, self.wad.both, self.wad.total
            ),
        ));
        rows.push(("Unknown excluded from WAD".into(), self.wad.unknown_excluded.to_string()));
        if let Some(c) = &self.crc {
            rows.push(("CRC report mean".into(), opt(c.report_mean, 3)));
            rows.push(("CRC check-weighted".into(), opt(c.check_weighted, 3)));
            rows.push((
                "CRC checks cons/incons/neutral/no_kw/tied".into(),
                format!(
                    "{}/{}/{}/{}/{}",
                    c.tally.consistent, c.tally.inconsistent, c.tally.neutral, c.tally.no_keywords, c.tally.tied
                ),
            ));
        }
        rows.push((
            "mode collapse".into(),
            self.mode_collapse
                .map_or("no".into(), |m| format!("{} ({:.1}%)", m.label, 100.0 * m.share)),
        ));
        let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use StateLabel::*;

    fn pair(i: usize, gt: Option<StateLabel>, pred: StateLabel) -> Pair {
        Pair {
            subject: "S".into(),
            trial: format!("{i:03}"),
            gt,
            pred,
            vagal_high: None,
        }
    }

    fn decomposition(correct: usize, val: usize, aro: usize, both: usize) -> Vec<Pair> {
        let mut v = Vec::new();
        let mut i = 0;
        for (n, pred) in [(correct, Hvha), (val, Lvha), (aro, Hvla), (both, Lvla)] {
            for _ in 0..n {
                v.push(pair(i, Some(Hvha), pred));
                i += 1;
            }
        }
        v
    }

    #[test]
    fn wad_table_rows() {
        let w = wad(&decomposition(87, 66, 37, 43)).unwrap();
        let oracle = (66.0 * 2.0 + 37.0 * 2.0 + 43.0 * 8f64.sqrt()) / 233.0;
        assert!((w.mean - oracle).abs() < 1e-12);
        assert!((w.mean - 1.41).abs() < 0.005);
        assert!((w.normalized - 0.50).abs() < 0.005);
        let t = task_metrics(&decomposition(87, 66, 37, 43), T3Mode::Valence).unwrap();
        assert!((t.t1 - 37.3).abs() < 0.05);
        let w = wad(&decomposition(56, 56, 67, 54)).unwrap();
        assert!((w.mean - 1.71).abs() < 0.005);
    }

    #[test]
    fn dimension_hits() {
        let p = vec![pair(0, Some(Hvla), Hvha)];
        let t = task_metrics(&p, T3Mode::Valence).unwrap();
        assert_eq!((t.t1, t.t2, t.t3), (0.0, 0.0, 100.0));
    }

    #[test]
    fn unknown_is_wrong_and_excluded_from_wad() {
        let p = vec![pair(0, Some(Hvha), Hvha), pair(1, Some(Lvla), Unknown), pair(2, None, Lvla)];
        let t = task_metrics(&p, T3Mode::Valence).unwrap();
        assert_eq!((t.t1, t.evaluated, t.neutral_excluded), (50.0, 2, 1));
        let w = wad(&p).unwrap();
        assert_eq!((w.total, w.unknown_excluded, w.mean), (1, 1, 0.0));
        let f = f1_and_confusion(&p).unwrap();
        assert_eq!(f.confusion[3][4], 1);
        assert_eq!(f.per_class[3].recall, 0.0);
    }

    #[test]
    fn empty_sets_error() {
        assert_eq!(task_metrics(&[pair(0, None, Hvha)], T3Mode::Valence), Err(EvalError::EmptyEvaluationSet));
        assert_eq!(wad(&[pair(0, Some(Hvha), Unknown)]), Err(EvalError::EmptyEvaluationSet));
    }

    #[test]
    fn collapse_f1_example() {
        let p: Vec<Pair> = (0..40).map(|i| pair(i, Some(StateLabel::QUADRANTS[i % 4]), Hvha)).collect();
        let f = f1_and_confusion(&p).unwrap();
        assert!((f.macro_f1 - 0.1).abs() < 1e-12);
        assert!((f.weighted_f1 - 0.1).abs() < 1e-12);
        let perfect: Vec<Pair> = (0..8).map(|i| pair(i, Some(StateLabel::QUADRANTS[i % 4]), StateLabel::QUADRANTS[i % 4])).collect();
        let f = f1_and_confusion(&perfect).unwrap();
        assert_eq!((f.macro_f1, f.weighted_f1), (1.0, 1.0));
        assert!(mode_collapse(&p.iter().map(|x| x.pred).collect::<Vec<_>>()).is_some());
    }

    #[test]
    fn mode_collapse_threshold() {
        let mut preds = vec![Lvla; 380];
        preds.extend(vec![Hvha; 34]);
        let m = mode_collapse(&preds).unwrap();
        assert_eq!(m.label, Lvla);
        assert!((m.share - 380.0 / 414.0).abs() < 1e-12);
        let mut preds = vec![Lvla; 89];
        preds.extend(vec![Hvha; 11]);
        assert!(mode_collapse(&preds).is_none());
    }

    #[test]
    fn agreement_cases() {
        let a: BTreeMap<String, StateLabel> = (0..414).map(|i| (format!("k{i}"), Hvha)).collect();
        assert_eq!(agreement(&a, &a).unwrap(), 100.0);
        let b: BTreeMap<String, StateLabel> = a.keys().enumerate().map(|(i, k)| (k.clone(), if i < 298 { Hvha } else { Lvla })).collect();
        assert!((agreement(&a, &b).unwrap() - 72.0).abs() < 0.05);
        let c: BTreeMap<String, StateLabel> = a.keys().map(|k| (k.clone(), Lvla)).collect();
        assert_eq!(agreement(&a, &c).unwrap(), 0.0);
        let mut d = a.clone();
        d.remove("k0");
        d.insert("zz".into(), Hvha);
        match agreement(&a, &d) {
            Err(EvalError::TrialSetMismatch(k)) => assert_eq!(k, vec!["k0".to_string(), "zz".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    fn label_strategy() -> impl Strategy<Value = StateLabel> {
        prop::sample::select(StateLabel::QUADRANTS.to_vec())
    }

    proptest! {
        #[test]
        fn wad_is_fixed_by_the_decomposition(gts in prop::collection::vec(label_strategy(), 1..60), preds in prop::collection::vec(label_strategy(), 60)) {
            let p: Vec<Pair> = gts.iter().zip(&preds).enumerate().map(|(i, (g, q))| pair(i, Some(*g), *q)).collect();
            let w = wad(&p).unwrap();
            let want = (2.0 * (w.valence_only + w.arousal_only) as f64 + 8f64.sqrt() * w.both as f64) / w.total as f64;
            prop_assert!((w.mean - want).abs() < 1e-12);
            let t = task_metrics(&p, T3Mode::Valence).unwrap();
            prop_assert!((t.t1 - 100.0 * w.correct as f64 / w.total as f64).abs() < 1e-9);
            prop_assert!(w.mean >= 0.0 && w.mean <= 8f64.sqrt());
        }

        #[test]
        fn macro_f1_is_permutation_invariant(gts in prop::collection::vec(label_strategy(), 1..60), preds in prop::collection::vec(label_strategy(), 60), perm in Just(StateLabel::QUADRANTS.to_vec()).prop_shuffle()) {
            let map = |l: StateLabel| perm[col(l)];
            let p: Vec<Pair> = gts.iter().zip(&preds).enumerate().map(|(i, (g, q))| pair(i, Some(*g), *q)).collect();
            let q: Vec<Pair> = gts.iter().zip(&preds).enumerate().map(|(i, (g, r))| pair(i, Some(map(*g)), map(*r))).collect();
            let a = f1_and_confusion(&p).unwrap().macro_f1;
            let b = f1_and_confusion(&q).unwrap().macro_f1;
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
