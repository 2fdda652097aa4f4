//! Sentence-level BLEU with a single reference.
//!
//! Modified n-gram precisions for `n = 1..=min(max_order, |hyp|)`, a zero
//! precision replaced by `epsilon`, geometric mean with uniform weights,
//! times the brevity penalty `exp(1 - |ref|/|hyp|)` when `|hyp| <= |ref|`.

use std::collections::HashMap;

pub const DEFAULT_MAX_ORDER: usize = 4;
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// BLEU of `hypothesis` against one `reference`.
pub fn bleu<S: AsRef<str>>(
    hypothesis: &[S],
    reference: &[S],
    max_order: usize,
    epsilon: f64,
) -> f64 {
    let hyp: Vec<&str> = hypothesis.iter().map(AsRef::as_ref).collect();
    let refr: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    let order = max_order.min(hyp.len());
    if order == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=order {
        let mut ref_counts: HashMap<&[&str], usize> = HashMap::new();
        for g in refr.windows(n) {
            *ref_counts.entry(g).or_default() += 1;
        }
        let mut hyp_counts: HashMap<&[&str], usize> = HashMap::new();
        for g in hyp.windows(n) {
            *hyp_counts.entry(g).or_default() += 1;
        }
        let matches: usize = hyp_counts
            .iter()
            .map(|(g, c)| (*c).min(ref_counts.get(g).copied().unwrap_or(0)))
            .sum();
        let total = hyp.len() - n + 1;
        log_sum += precision(matches, total, epsilon).ln();
    }
    brevity_penalty(hyp.len(), refr.len()) * (log_sum / order as f64).exp()
}

pub(crate) fn precision(matches: usize, total: usize, epsilon: f64) -> f64 {
    if matches == 0 {
        epsilon
    } else {
        matches as f64 / total as f64
    }
}

pub(crate) fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

/// Per-document n-gram counts over corpus-wide gram ids, kept sorted so a
/// clipped match count is a linear merge.
pub(crate) struct BleuTable {
    /// `counts[doc][n - 1]` = sorted `(gram id, count)`.
    counts: Vec<Vec<Vec<(u32, u32)>>>,
    lens: Vec<usize>,
    max_order: usize,
    epsilon: f64,
}

impl BleuTable {
    pub fn new(docs: &[Vec<u32>], max_order: usize, epsilon: f64) -> Self {
        let mut counts: Vec<Vec<Vec<(u32, u32)>>> = vec![Vec::with_capacity(max_order); docs.len()];
        for n in 1..=max_order {
            let mut ids: HashMap<&[u32], u32> = HashMap::new();
            for (d, doc) in docs.iter().enumerate() {
                let mut local: HashMap<u32, u32> = HashMap::new();
                for g in doc.windows(n) {
                    let next = ids.len() as u32;
                    let id = *ids.entry(g).or_insert(next);
                    *local.entry(id).or_default() += 1;
                }
                let mut v: Vec<(u32, u32)> = local.into_iter().collect();
                v.sort_unstable();
                counts[d].push(v);
            }
        }
        Self {
            counts,
            lens: docs.iter().map(Vec::len).collect(),
            max_order,
            epsilon,
        }
    }

    /// BLEU with document `h` as hypothesis and `r` as reference.
    pub fn score(&self, h: usize, r: usize) -> f64 {
        let hyp_len = self.lens[h];
        let order = self.max_order.min(hyp_len);
        if order == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 1..=order {
            let matches = clipped(&self.counts[h][n - 1], &self.counts[r][n - 1]);
            log_sum += precision(matches, hyp_len - n + 1, self.epsilon).ln();
        }
        brevity_penalty(hyp_len, self.lens[r]) * (log_sum / order as f64).exp()
    }
}

fn clipped(a: &[(u32, u32)], b: &[(u32, u32)]) -> usize {
    let (mut i, mut j, mut sum) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                sum += a[i].1.min(b[j].1) as usize;
                i += 1;
                j += 1;
            }
        }
    }
    sum
}
