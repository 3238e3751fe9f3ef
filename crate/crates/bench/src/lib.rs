//! Shared fixtures for the benchmarks.

use hrvguard_core::knowledge::{Chunk, Embedder, HashEmbedder, StudyDesign, VectorStore};
use hrvguard_core::Metric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// RR-like series: 800 ms mean with uniform jitter.
pub fn rr_series(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| 800.0 + rng.random_range(-60.0..60.0)).collect()
}

const WORDS: [&str; 12] = [
    "RMSSD", "vagal", "tone", "LF/HF", "entropy", "fractal", "stress", "respiration", "baseline", "arousal",
    "heart", "variability",
];

/// Store of `n` random-word chunks with mixed governance metadata.
pub fn store(n: usize, seed: u64) -> (VectorStore, HashEmbedder) {
    let e = HashEmbedder::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = VectorStore::new(e.dimension(), e.id());
    let metrics = [None, Some(Metric::Rmssd), Some(Metric::LfHf), Some(Metric::SampEn)];
    for i in 0..n {
        let text: Vec<&str> = (0..40).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
        let text = text.join(" ");
        let chunk = Chunk {
            id: format!("c{i}"),
            text: text.clone(),
            source_file: format!("doc{}.txt", i % 10),
            page: (i / 10) as u32 + 1,
            study_design: if i % 3 == 0 { StudyDesign::Rct } else { StudyDesign::Observational },
            topics: vec!["vagal".into()],
            primary_metric: metrics[i % metrics.len()],
            threshold_heavy: i % 5 == 0,
        };
        s.push(chunk, &e.embed(&text).expect("hash embedder is infallible")).expect("matching dimension");
    }
    (s, e)
}
