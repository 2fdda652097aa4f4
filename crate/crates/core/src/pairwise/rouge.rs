//! ROUGE-L: longest-common-subsequence F-measure.

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `P = lcs/|a|`, `R = lcs/|b|`, `F = (1+β²)PR / (R + β²P)`; zero when the
/// LCS is empty.
pub fn rouge_l_tokens<T: PartialEq>(a: &[T], b: &[T], beta: f64) -> f64 {
    let lcs = lcs_len(a, b);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / a.len() as f64;
    let r = lcs as f64 / b.len() as f64;
    let b2 = beta * beta;
    (1.0 + b2) * p * r / (r + b2 * p)
}
