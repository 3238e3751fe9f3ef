//! Ground-truth labels and the metric suite: task accuracy, report quality,
//! agreement, F1, affective distance and reasoning consistency.

mod crc;
mod labels;
mod metrics;

pub use crc::{
    classify_check, corpus_crc, count_keywords, crc_report, normalize_text, CheckOutcome, CheckTally, CorpusCrc,
    CrcConfig, KeywordSet, Lexicon, MetricCheck, ReportCrc, CRC_METRICS,
};
pub use labels::{construct_label, gt_str, parse_gt, AffectPoint, GtLabel};
pub use metrics::{
    agreement, f1_and_confusion, mode_collapse, quality_metrics, summarize, task_metrics, wad, ClassScore, F1Summary,
    MetricSummary, ModeCollapse, Pair, QualityMetrics, T3Mode, TaskMetrics, WadSummary,
};
