/// Runs longer than this many identical characters are cut.
pub const MAX_CHAR_RUN: usize = 50;
/// Token n-gram length for loop detection.
pub const NGRAM_TOKENS: usize = 10;
/// Consecutive occurrences of one n-gram allowed before the cut.
pub const MAX_NGRAM_REPEATS: usize = 3;

fn char_run_cut(text: &str) -> Option<usize> {
    let mut run_start = 0;
    let mut run_len = 0;
    let mut prev = None;
    for (i, c) in text.char_indices() {
        if Some(c) == prev {
            run_len += 1;
        } else {
            prev = Some(c);
            run_start = i;
            run_len = 1;
        }
        if run_len > MAX_CHAR_RUN {
            return Some(run_start);
        }
    }
    None
}

fn ngram_cut(text: &str) -> Option<usize> {
    let tokens: Vec<(usize, &str)> = text
        .split_whitespace()
        .map(|t| (t.as_ptr() as usize - text.as_ptr() as usize, t))
        .collect();
    let n = NGRAM_TOKENS;
    let need = n * (MAX_NGRAM_REPEATS + 1);
    if tokens.len() < need {
        return None;
    }
    let same = |a: usize, b: usize| (0..n).all(|k| tokens[a + k].1 == tokens[b + k].1);
    // the earliest fourth occurrence wins
    (0..=tokens.len() - need)
        .filter(|&i| (1..=MAX_NGRAM_REPEATS).all(|r| same(i, i + r * n)))
        .map(|i| tokens[i + MAX_NGRAM_REPEATS * n].0)
        .min()
}

fn truncate_once(text: &str) -> Option<usize> {
    match (char_run_cut(text), ngram_cut(text)) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// Cuts degenerate generation loops. Repeats until no rule fires, so the
/// result is a fixed point.
pub fn truncate_repetition(text: &str) -> (String, bool) {
    let mut out = text;
    let mut truncated = false;
    while let Some(cut) = truncate_once(out) {
        out = &out[..cut];
        truncated = true;
    }
    (out.to_string(), truncated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn char_run_boundary() {
        let head = "State: HVHA\n";
        let (t, cut) = truncate_repetition(&format!("{head}{}", "a".repeat(51)));
        assert!(cut);
        assert_eq!(t, head);
        let fifty = format!("{head}{}", "a".repeat(50));
        assert_eq!(truncate_repetition(&fifty), (fifty.clone(), false));
    }

    #[test]
    fn fourth_ngram_repeat_is_cut() {
        let phrase = "the vagal tone is elevated and the heart rate is low";
        let phrase10: Vec<&str> = phrase.split(' ').take(10).collect();
        let p = phrase10.join(" ");
        let three = format!("intro {p} {p} {p}");
        assert!(!truncate_repetition(&three).1);
        let four = format!("intro {p} {p} {p} {p} tail");
        let (t, cut) = truncate_repetition(&four);
        assert!(cut);
        assert_eq!(t, format!("intro {p} {p} {p} "));
    }

    #[test]
    fn multibyte_runs() {
        let (t, cut) = truncate_repetition(&format!("ok {}", "α".repeat(60)));
        assert!(cut);
        assert_eq!(t, "ok ");
    }

    proptest! {
        #[test]
        fn idempotent(words in prop::collection::vec(prop::sample::select(vec!["a", "b", "aaaaaaaaaaaaaaaaaaaaaaaaaaaaaa", "z", "α"]), 0..200)) {
            let text = words.join(" ");
            let (once, _) = truncate_repetition(&text);
            let (twice, again) = truncate_repetition(&once);
            prop_assert_eq!(&once, &twice);
            prop_assert!(!again);
            prop_assert!(text.starts_with(&once));
        }
    }
}
