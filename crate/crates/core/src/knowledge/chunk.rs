use std::sync::LazyLock;

use regex::Regex;

use super::RetrievalConfig;

/// A run of whitespace tokens `[start, end)` and the page of its first token.
#[derive(Debug, Clone, PartialEq)]
pub struct TextSpan {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub page: u32,
}

fn ends_sentence(token: &str) -> bool {
    let t = token.trim_end_matches(['"', '\'', ')', ']', '”', '’']);
    t.ends_with(['.', '!', '?'])
}

/// Splits text into overlapping windows of whitespace tokens. A window that
/// would cut mid-text is pulled back to the last sentence end within
/// `boundary_tolerance` tokens of its nominal end. Pages are delimited by
/// form feeds and numbered from 1.
pub fn chunk_document(text: &str, cfg: &RetrievalConfig) -> Vec<TextSpan> {
    let mut tokens: Vec<(&str, u32)> = Vec::new();
    for (i, page) in text.split('\x0c').enumerate() {
        tokens.extend(page.split_whitespace().map(|t| (t, i as u32 + 1)));
    }
    let n = tokens.len();
    let size = cfg.chunk_size.max(1);
    let overlap = cfg.chunk_overlap.min(size - 1);

    let mut spans = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = (start + size).min(n);
        if end < n {
            let floor = end.saturating_sub(cfg.boundary_tolerance).max(start + overlap + 1);
            if let Some(e) = (floor..=end).rev().find(|&e| e > start && ends_sentence(tokens[e - 1].0)) {
                end = e;
            }
        }
        spans.push(TextSpan {
            text: tokens[start..end].iter().map(|t| t.0).collect::<Vec<_>>().join(" "),
            start,
            end,
            page: tokens[start].1,
        });
        if end == n {
            break;
        }
        start = end - overlap;
    }
    spans
}

static THRESHOLD_CLAIM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?ix)
        (?: [<>≤≥]=? | \b(?:above|below|over|under|exceeding|exceeds|greater\ than|less\ than|at\ least|at\ most)\b )
        \s* \d+(?:\.\d+)? \s*
        (?: ms² | ms2 | ms | bpm | hz | % | beats )",
    )
    .expect("static regex")
});

/// Number of absolute-threshold claims such as "RMSSD > 40 ms".
pub fn count_threshold_claims(text: &str) -> usize {
    THRESHOLD_CLAIM.find_iter(text).count()
}

pub fn is_threshold_heavy(text: &str) -> bool {
    count_threshold_claims(text) >= 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn size_and_overlap_arithmetic() {
        let cfg = RetrievalConfig::default();
        assert_eq!(chunk_document(&words(1000), &cfg).len(), 1);
        let c = chunk_document(&words(1800), &cfg);
        assert_eq!(c.iter().map(|s| (s.start, s.end)).collect::<Vec<_>>(), vec![(0, 1000), (800, 1800)]);
        assert!(chunk_document("", &cfg).is_empty());
        assert!(chunk_document("  \n\t ", &cfg).is_empty());
    }

    #[test]
    fn prefers_sentence_boundary_inside_window() {
        let cfg = RetrievalConfig::default();
        let mut toks: Vec<String> = (0..1500).map(|i| format!("w{i}")).collect();
        toks[949] = "end.".into();
        let c = chunk_document(&toks.join(" "), &cfg);
        assert_eq!((c[0].start, c[0].end), (0, 950));
        assert_eq!(c[1].start, 750);
        // a boundary outside the 100-token window is ignored
        let mut toks: Vec<String> = (0..1500).map(|i| format!("w{i}")).collect();
        toks[850] = "end.".into();
        assert_eq!(chunk_document(&toks.join(" "), &cfg)[0].end, 1000);
    }

    #[test]
    fn pages_follow_form_feeds() {
        let cfg = RetrievalConfig {
            chunk_size: 4,
            chunk_overlap: 1,
            boundary_tolerance: 0,
            ..RetrievalConfig::default()
        };
        let c = chunk_document("a b c d\x0ce f g h\x0ci j", &cfg);
        assert_eq!(c.iter().map(|s| (s.start, s.end)).collect::<Vec<_>>(), vec![(0, 4), (3, 7), (6, 10)]);
        assert_eq!(c.iter().map(|s| s.page).collect::<Vec<_>>(), vec![1, 1, 2]);
        assert!(c.iter().all(|s| s.end - s.start <= 4));
    }

    #[test]
    fn threshold_claims() {
        assert_eq!(count_threshold_claims("RMSSD > 40 ms indicates good recovery"), 1);
        assert!(is_threshold_heavy("RMSSD above 40 ms is healthy while HR over 100 bpm is not."));
        assert!(!is_threshold_heavy("Vagal tone rises with slow breathing; 40 participants."));
        assert!(is_threshold_heavy("SDNN < 50ms and pNN50 ≥ 3 % mark risk"));
    }
}
