use crate::decoder::TokenSequence;
use crate::error::{Error, Result};

/// Edit operations of a minimal unit-cost alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EditCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
}

impl EditCounts {
    pub fn total(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Levenshtein alignment of `hyp` against `reference`. The backtrace prefers
/// a diagonal step (match or substitution), then a deletion, then an
/// insertion, so the split of the cost is deterministic.
pub fn edit_distance(reference: &TokenSequence, hyp: &TokenSequence) -> EditCounts {
    let (r, h) = (reference.as_slice(), hyp.as_slice());
    let (n, m) = (r.len(), h.len());
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for i in 0..=n {
        d[i * w] = i;
    }
    for j in 0..=m {
        d[j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = d[(i - 1) * w + j - 1] + usize::from(r[i - 1] != h[j - 1]);
            let del = d[(i - 1) * w + j] + 1;
            let ins = d[i * w + j - 1] + 1;
            d[i * w + j] = diag.min(del).min(ins);
        }
    }

    let mut counts = EditCounts::default();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let sub = usize::from(r[i - 1] != h[j - 1]);
            if here == d[(i - 1) * w + j - 1] + sub {
                counts.substitutions += sub;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == d[(i - 1) * w + j] + 1 {
            counts.deletions += 1;
            i -= 1;
        } else {
            counts.insertions += 1;
            j -= 1;
        }
    }
    counts
}

/// Corpus-level error rate: total edits over total reference length, as a
/// percentage.
pub fn per_corpus(pairs: &[(TokenSequence, TokenSequence)]) -> Result<f64> {
    let ref_len: usize = pairs.iter().map(|(r, _)| r.len()).sum();
    if ref_len == 0 {
        return Err(Error::Undefined("error rate over empty references"));
    }
    let edits: usize = pairs.iter().map(|(r, h)| edit_distance(r, h).total()).sum();
    Ok(100.0 * edits as f64 / ref_len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[usize]) -> TokenSequence {
        TokenSequence(v.to_vec())
    }

    #[test]
    fn examples() {
        assert_eq!(edit_distance(&seq(&[0, 1, 2]), &seq(&[0, 1, 2])), EditCounts::default());
        assert_eq!(
            edit_distance(&seq(&[0, 1, 2]), &seq(&[0, 2])),
            EditCounts { substitutions: 0, deletions: 1, insertions: 0 }
        );
        assert_eq!(edit_distance(&seq(&[]), &seq(&[1, 1])).insertions, 2);
        assert_eq!(edit_distance(&seq(&[3]), &seq(&[4])).substitutions, 1);
    }

    #[test]
    fn corpus_rates() {
        let same = vec![(seq(&[1, 2]), seq(&[1, 2])), (seq(&[3]), seq(&[3]))];
        assert_eq!(per_corpus(&same).unwrap(), 0.0);
        let empty = vec![(seq(&[1, 2]), seq(&[])), (seq(&[3, 3, 3]), seq(&[]))];
        assert_eq!(per_corpus(&empty).unwrap(), 100.0);
        // One substitution in a 4-token reference, then two deletions and an
        // insertion in a 6-token reference.
        let pairs = vec![
            (seq(&[0, 1, 2, 3]), seq(&[0, 1, 2, 0])),
            (seq(&[0, 1, 2, 3, 4, 5]), seq(&[0, 1, 2, 3, 2])),
        ];
        assert_eq!(edit_distance(&pairs[0].0, &pairs[0].1).total(), 1);
        assert_eq!(edit_distance(&pairs[1].0, &pairs[1].1).total(), 2);
        let pairs = vec![
            (seq(&[0, 1, 2, 3]), seq(&[0, 1, 2, 0])),
            (seq(&[0, 1, 2, 3, 4, 5]), seq(&[9, 0, 1, 2, 3])),
        ];
        let c = edit_distance(&pairs[1].0, &pairs[1].1);
        assert_eq!(c, EditCounts { substitutions: 0, deletions: 2, insertions: 1 });
        assert_eq!(per_corpus(&pairs).unwrap(), 40.0);
        assert!(per_corpus(&[(seq(&[]), seq(&[1]))]).is_err());
    }
}
