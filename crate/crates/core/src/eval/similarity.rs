/// Weighted blend of token-level LCS ratio, word-count ratio and
/// character-count ratio, in `[0, 1]`.
pub fn structural_similarity(a: &str, b: &str) -> f64 {
    let ta: Vec<&str> = a.split_whitespace().collect();
    let tb: Vec<&str> = b.split_whitespace().collect();
    let (ca, cb) = (a.chars().count(), b.chars().count());
    match (ca == 0, cb == 0) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let seq = if ta.is_empty() && tb.is_empty() {
        1.0
    } else {
        2.0 * lcs_len(&ta, &tb) as f64 / (ta.len() + tb.len()) as f64
    };
    0.5 * seq + 0.3 * count_ratio(ta.len(), tb.len()) + 0.2 * count_ratio(ca, cb)
}

fn count_ratio(x: usize, y: usize) -> f64 {
    if x.max(y) == 0 {
        1.0
    } else {
        x.min(y) as f64 / x.max(y) as f64
    }
}

fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
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
