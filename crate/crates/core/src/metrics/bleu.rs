//! BLEU-4 with uniform weights and the standard brevity penalty.

use std::collections::HashMap;

pub const MAX_ORDER: usize = 4;

pub(crate) fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Sufficient statistics for one candidate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub candidate_len: usize,
    pub reference_len: usize,
}

impl BleuStats {
    pub fn of(candidate: &[String], references: &[Vec<String>]) -> Self {
        let mut stats = BleuStats {
            candidate_len: candidate.len(),
            reference_len: closest_ref_len(candidate.len(), references),
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            let cand = ngram_counts(candidate, n);
            let mut max_ref: HashMap<&[String], usize> = HashMap::new();
            for r in references {
                for (gram, c) in ngram_counts(r, n) {
                    let slot = max_ref.entry(gram).or_insert(0);
                    *slot = (*slot).max(c);
                }
            }
            stats.totals[n - 1] = candidate.len().saturating_sub(n - 1);
            stats.matches[n - 1] = cand
                .iter()
                .map(|(gram, c)| (*c).min(max_ref.get(gram).copied().unwrap_or(0)))
                .sum();
        }
        stats
    }

    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    fn brevity_penalty(&self) -> f64 {
        if self.candidate_len == 0 {
            0.0
        } else if self.candidate_len > self.reference_len {
            1.0
        } else {
            (1.0 - self.reference_len as f64 / self.candidate_len as f64).exp()
        }
    }

    /// Unsmoothed score: zero whenever any order has no match.
    pub fn score(&self) -> f64 {
        if (0..MAX_ORDER).any(|n| self.matches[n] == 0 || self.totals[n] == 0) {
            return 0.0;
        }
        let log_mean = (0..MAX_ORDER)
            .map(|n| (self.matches[n] as f64 / self.totals[n] as f64).ln())
            .sum::<f64>()
            / MAX_ORDER as f64;
        self.brevity_penalty() * log_mean.exp()
    }

    /// Score with zero match counts replaced by `epsilon`.
    pub fn smoothed_score(&self, epsilon: f64) -> f64 {
        if self.candidate_len == 0 {
            return 0.0;
        }
        let log_mean = (0..MAX_ORDER)
            .map(|n| {
                let total = self.totals[n].max(1) as f64;
                let m = if self.matches[n] == 0 { epsilon } else { self.matches[n] as f64 };
                (m / total).ln()
            })
            .sum::<f64>()
            / MAX_ORDER as f64;
        self.brevity_penalty() * log_mean.exp()
    }
}

/// Reference length closest to the candidate; ties go to the shorter one.
fn closest_ref_len(candidate_len: usize, references: &[Vec<String>]) -> usize {
    references
        .iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(candidate_len), r))
        .unwrap_or(0)
}

/// Corpus-level BLEU-4 over pre-tokenized `(candidate, references)` pairs.
pub fn corpus_bleu4_tokens(pairs: &[(Vec<String>, Vec<Vec<String>>)]) -> f64 {
    let mut total = BleuStats::default();
    for (c, refs) in pairs {
        total.add(&BleuStats::of(c, refs));
    }
    total.score()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn hand_case() {
        let stats = BleuStats::of(&toks("a b c d e"), &[toks("a b c d f")]);
        assert_eq!(stats.matches, [4, 3, 2, 1]);
        assert_eq!(stats.totals, [5, 4, 3, 2]);
        assert!((stats.score() - 0.2f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn clipping_and_brevity() {
        let stats = BleuStats::of(&toks("the the the"), &[toks("the cat")]);
        assert_eq!(stats.matches[0], 1);
        let short = BleuStats::of(&toks("a b c d"), &[toks("a b c d e f g h")]);
        assert!((short.score() - (1.0f64 - 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn smoothing_keeps_partial_credit() {
        let stats = BleuStats::of(&toks("a b x y"), &[toks("a b c d")]);
        assert_eq!(stats.score(), 0.0);
        assert!(stats.smoothed_score(0.1) > 0.0);
    }
}
