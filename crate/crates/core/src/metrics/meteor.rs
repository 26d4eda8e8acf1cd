//! METEOR-lite: exact then stem-level unigram alignment with the
//! fragmentation penalty. No synonym or paraphrase stages.

use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

/// Porter-family English stem.
pub fn stem(token: &str) -> String {
    stemmer().stem(token).into_owned()
}

/// Unigram alignment as `(candidate_pos, reference_pos)` pairs, sorted by
/// candidate position.
pub fn align(candidate: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut cand_to_ref: Vec<Option<usize>> = vec![None; candidate.len()];
    let mut ref_used = vec![false; reference.len()];

    let cand_stems: Vec<String> = candidate.iter().map(|t| stem(t)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|t| stem(t)).collect();

    for stage in 0..2 {
        for i in 0..candidate.len() {
            if cand_to_ref[i].is_some() {
                continue;
            }
            let same = |j: usize| match stage {
                0 => candidate[i] == reference[j],
                _ => cand_stems[i] == ref_stems[j],
            };
            // Prefer continuing the previous token's chunk.
            let follow = i
                .checked_sub(1)
                .and_then(|p| cand_to_ref[p])
                .map(|j| j + 1)
                .filter(|&j| j < reference.len() && !ref_used[j] && same(j));
            let pick = follow.or_else(|| (0..reference.len()).find(|&j| !ref_used[j] && same(j)));
            if let Some(j) = pick {
                cand_to_ref[i] = Some(j);
                ref_used[j] = true;
            }
        }
    }
    cand_to_ref
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect()
}

/// Number of maximal runs contiguous in both candidate and reference.
pub fn chunks(alignment: &[(usize, usize)]) -> usize {
    if alignment.is_empty() {
        return 0;
    }
    1 + alignment
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count()
}

pub fn meteor_single(candidate: &[String], reference: &[String]) -> f64 {
    let alignment = align(candidate, reference);
    let m = alignment.len();
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f_mean = 10.0 * p * r / (r + 9.0 * p);
    let frag = chunks(&alignment) as f64 / m as f64;
    let penalty = 0.5 * frag.powi(3);
    f_mean * (1.0 - penalty)
}

/// Best score over the references.
pub fn meteor_lite_tokens(candidate: &[String], references: &[Vec<String>]) -> f64 {
    references
        .iter()
        .map(|r| meteor_single(candidate, r))
        .fold(0.0, f64::max)
}
