//! Class centroids and cosine similarity to them.
//!
//! Storage is `f32`; every sum here is accumulated in `f64`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::store::EmbeddingRecord;

/// Floating-point slack tolerated outside [-1, 1] before clamping.
pub const COSINE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassCentroid {
    pub label: String,
    pub vector: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredRecord {
    /// Position in the class's record list.
    pub record_index: usize,
    pub similarity: f64,
}

/// Component-wise arithmetic mean of the records' vectors.
pub fn centroid(records: &[&EmbeddingRecord]) -> Result<ClassCentroid> {
    let first = records
        .first()
        .ok_or_else(|| Error::EmptyClass(String::new()))?;
    let dim = first.vector.len();
    let mut sum = vec![0.0f64; dim];
    for r in records {
        if r.vector.len() != dim {
            return Err(Error::LengthMismatch(dim, r.vector.len()));
        }
        for (acc, &x) in sum.iter_mut().zip(&r.vector) {
            *acc += f64::from(x);
        }
    }
    let n = records.len() as f64;
    sum.iter_mut().for_each(|x| *x /= n);
    Ok(ClassCentroid {
        label: first.label.clone(),
        vector: sum,
        count: records.len(),
    })
}

fn norm<T: Copy + Into<f64>>(x: &[T]) -> f64 {
    x.iter()
        .map(|&a| {
            let a: f64 = a.into();
            a * a
        })
        .sum::<f64>()
        .sqrt()
}

fn dot<A: Copy + Into<f64>, B: Copy + Into<f64>>(a: &[A], b: &[B]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| x.into() * y.into())
        .sum()
}

fn cosine_with_norms<A, B>(a: &[A], norm_a: f64, b: &[B], norm_b: f64) -> f64
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    let s = dot(a, b) / (norm_a * norm_b);
    debug_assert!(s.abs() <= 1.0 + COSINE_SLACK, "cosine {s} out of range");
    s.clamp(-1.0, 1.0)
}

/// Cosine of the angle between `a` and `b`, clamped to [-1, 1].
///
/// A zero vector on either side is an error: it usually means the upstream
/// feature extraction failed.
pub fn cosine<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm { id: String::new() });
    }
    Ok(cosine_with_norms(a, na, b, nb))
}

/// Similarity of every record to `centroid`, in input order.
pub fn score_class(records: &[&EmbeddingRecord], centroid: &ClassCentroid) -> Result<Vec<ScoredRecord>> {
    let centroid_norm = norm(&centroid.vector);
    if centroid_norm == 0.0 {
        return Err(Error::ZeroNorm {
            id: format!("<centroid of {}>", centroid.label),
        });
    }
    records
        .par_iter()
        .enumerate()
        .map(|(record_index, r)| {
            if r.vector.len() != centroid.vector.len() {
                return Err(Error::LengthMismatch(r.vector.len(), centroid.vector.len()));
            }
            let n = norm(&r.vector);
            if n == 0.0 {
                return Err(Error::ZeroNorm { id: r.id.clone() });
            }
            Ok(ScoredRecord {
                record_index,
                similarity: cosine_with_norms(&r.vector, n, &centroid.vector, centroid_norm),
            })
        })
        .collect()
}
