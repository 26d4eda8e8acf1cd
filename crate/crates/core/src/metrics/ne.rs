//! Named-entity precision and recall over case-insensitive surfaces.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::text::fold_surface;

/// Size of the multiset intersection of two surface lists.
pub fn surface_matches(candidate: &[String], reference: &[String]) -> usize {
    let mut pool: HashMap<String, usize> = HashMap::new();
    for r in reference {
        *pool.entry(fold_surface(r)).or_insert(0) += 1;
    }
    let mut matched = 0;
    for c in candidate {
        if let Some(n) = pool.get_mut(&fold_surface(c)) {
            if *n > 0 {
                *n -= 1;
                matched += 1;
            }
        }
    }
    matched
}

/// Micro-averaged scores. Zero denominators report 0 and are counted in the
/// `undefined_*` fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NeScores {
    pub precision: f64,
    pub recall: f64,
    pub matched: usize,
    pub candidate_total: usize,
    pub reference_total: usize,
    pub instances: usize,
    pub undefined_precision: usize,
    pub undefined_recall: usize,
}

/// `pairs` yields `(candidate_surfaces, reference_surfaces)`.
pub fn ne_pr_surfaces<'a, I>(pairs: I) -> NeScores
where
    I: IntoIterator<Item = (&'a [String], &'a [String])>,
{
    let mut s = NeScores::default();
    for (cand, reference) in pairs {
        s.instances += 1;
        s.matched += surface_matches(cand, reference);
        s.candidate_total += cand.len();
        s.reference_total += reference.len();
        s.undefined_precision += usize::from(cand.is_empty());
        s.undefined_recall += usize::from(reference.is_empty());
    }
    s.precision = ratio(s.matched, s.candidate_total);
    s.recall = ratio(s.matched, s.reference_total);
    s
}

pub(crate) fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
