//! ROUGE-L from the longest common subsequence.

/// Weight of recall relative to precision, as in the common captioning toolkits.
pub const ROUGE_BETA: f64 = 1.2;

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn f_score(lcs: usize, candidate_len: usize, reference_len: usize) -> f64 {
    if lcs == 0 || candidate_len == 0 || reference_len == 0 {
        return 0.0;
    }
    let p = lcs as f64 / candidate_len as f64;
    let r = lcs as f64 / reference_len as f64;
    let b2 = ROUGE_BETA * ROUGE_BETA;
    (1.0 + b2) * p * r / (r + b2 * p)
}

/// Best F-score over the references.
pub fn rouge_l_tokens(candidate: &[String], references: &[Vec<String>]) -> f64 {
    references
        .iter()
        .map(|r| f_score(lcs_len(candidate, r), candidate.len(), r.len()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn hand_case() {
        assert_eq!(lcs_len(&toks("a b c"), &toks("a c b")), 2);
        assert!((rouge_l_tokens(&toks("a b c"), &[toks("a c b")]) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn extremes() {
        assert_eq!(rouge_l_tokens(&toks("a b"), &[toks("a b")]), 1.0);
        assert_eq!(rouge_l_tokens(&toks("a b"), &[toks("c d")]), 0.0);
        assert_eq!(rouge_l_tokens(&[], &[toks("c d")]), 0.0);
        assert_eq!(rouge_l_tokens(&toks("a b"), &[toks("c d"), toks("a b")]), 1.0);
    }
}
