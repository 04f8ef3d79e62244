//! Work splitting that does not depend on scheduling order.

use std::ops::Range;

/// Splits `0..n` into one contiguous block per rayon worker.
///
/// Partial results computed per block and reduced in block order are
/// reproducible for a fixed thread count; one thread yields a single block,
/// which is the sequential reference path.
pub fn chunk_ranges(n: usize) -> Vec<Range<usize>> {
    let workers = rayon::current_num_threads().max(1).min(n.max(1));
    let base = n / workers;
    let extra = n % workers;
    let mut out = Vec::with_capacity(workers);
    let mut start = 0;
    for w in 0..workers {
        let len = base + usize::from(w < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_cover_everything_once() {
        for n in [0usize, 1, 7, 64, 129] {
            let r = chunk_ranges(n);
            let total: usize = r.iter().map(|r| r.len()).sum();
            assert_eq!(total, n);
            for w in r.windows(2) {
                assert_eq!(w[0].end, w[1].start);
            }
        }
    }
}
