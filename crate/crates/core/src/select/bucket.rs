//! Equal-width similarity buckets with minimum-occupancy repair.
//!
//! Buckets are built from the highest similarity downwards. The range still
//! to be split, `[s_min, hi]`, is divided into `r` equal widths (where `r` is
//! the number of buckets not yet built) and the top slice becomes the next
//! candidate bucket `[lo, hi)`. If it holds fewer than `n_min` records its
//! lower boundary drops to the similarity of the `n_min`-th highest record
//! still unassigned, absorbing ties. The remaining range is then re-split
//! among the remaining bucket count. When fewer records than buckets remain,
//! or only one bucket is left, the remainder becomes a single final bucket.
//! Finally, a lowest bucket left with fewer than `n_min` records is merged
//! into the bucket above it, so every bucket ends with at least
//! `min(n_min, retained)` members.
//!
//! Without any repair this reproduces plain equal-width binning over
//! `[s_min, s_max]`.

use crate::similarity::ScoredRecord;

/// A similarity interval `[lo, hi)`; the highest bucket is closed, `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    /// Class record indices, ascending.
    pub members: Vec<usize>,
}

impl Bucket {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, similarity: f64, is_top: bool) -> bool {
        similarity >= self.lo && (similarity < self.hi || (is_top && similarity == self.hi))
    }
}

/// Lower edge of the top slice when `[s_min, hi]` is cut into `parts` equal widths.
fn top_slice_lo(s_min: f64, hi: f64, parts: usize) -> f64 {
    s_min + (hi - s_min) * (parts - 1) as f64 / parts as f64
}

/// Buckets ordered by ascending `lo`.
pub fn bucketize(retained: &[ScoredRecord], k: usize, n_min: usize) -> Vec<Bucket> {
    if retained.is_empty() {
        return Vec::new();
    }
    let k = k.max(1);
    let n_min = n_min.max(1);

    let mut order = retained.to_vec();
    order.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.record_index.cmp(&b.record_index))
    });
    let n = order.len();
    let s_max = order[0].similarity;
    let s_min = order[n - 1].similarity;

    // (lo, hi, start, end) into `order`, highest bucket first.
    let mut spans: Vec<(f64, f64, usize, usize)> = Vec::with_capacity(k);

    if s_min == s_max {
        spans.push((s_min, s_max, 0, n));
    } else {
        let mut hi = s_max;
        let mut start = 0;
        let mut buckets_left = k;
        while start < n {
            let left = n - start;
            if buckets_left == 1 || left < buckets_left {
                spans.push((s_min, hi, start, n));
                break;
            }
            let mut lo = top_slice_lo(s_min, hi, buckets_left);
            let mut end = start + order[start..].partition_point(|r| r.similarity >= lo);
            if end - start < n_min {
                end = (start + n_min).min(n);
                lo = order[end - 1].similarity;
                while end < n && order[end].similarity >= lo {
                    end += 1;
                }
            }
            if end == n {
                spans.push((s_min, hi, start, n));
                break;
            }
            spans.push((lo, hi, start, end));
            start = end;
            hi = lo;
            buckets_left -= 1;
        }

        if spans.len() >= 2 {
            let (_, _, start, end) = spans[spans.len() - 1];
            if end - start < n_min {
                spans.pop();
                let above = spans.last_mut().unwrap();
                above.0 = s_min;
                above.3 = end;
            }
        }
    }

    spans
        .iter()
        .rev()
        .enumerate()
        .map(|(index, &(lo, hi, start, end))| {
            let mut members: Vec<usize> = order[start..end].iter().map(|r| r.record_index).collect();
            members.sort_unstable();
            Bucket {
                index,
                lo,
                hi,
                members,
            }
        })
        .collect()
}
