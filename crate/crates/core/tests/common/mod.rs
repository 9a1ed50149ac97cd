//! Test-only oracles. Nothing here calls into the selection, similarity or
//! bucketing code under test; only the record type and the shared per-class
//! random stream are reused.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varpedis::bias::{ClassSpec, PopulationSpec, SubgroupSpec};
use varpedis::select::ClassRng;
use varpedis::{Dataset, EmbeddingRecord};

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Two-pass mean: compensated mean, then a compensated residual correction.
pub fn oracle_centroid(vectors: &[Vec<f32>]) -> Vec<f64> {
    let n = vectors.len() as f64;
    let dim = vectors[0].len();
    (0..dim)
        .map(|d| {
            let first = compensated_sum(vectors.iter().map(|v| f64::from(v[d]))) / n;
            let residual = compensated_sum(vectors.iter().map(|v| f64::from(v[d]) - first)) / n;
            first + residual
        })
        .collect()
}

pub fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Straight-line reference of the per-class selection.
#[derive(Debug, Clone, PartialEq)]
pub struct RefSelection {
    pub passthrough: bool,
    pub similarities: Vec<f64>,
    pub discarded: Vec<usize>,
    /// Ascending by similarity; members ascending.
    pub buckets: Vec<Vec<usize>>,
    pub selected: Vec<usize>,
}

pub struct RefConfig {
    pub theta: f64,
    pub k: usize,
    pub n_min: usize,
    pub n1: usize,
    pub small_class_max: usize,
    pub seed: u64,
}

pub fn ref_similarities(vectors: &[Vec<f32>]) -> Vec<f64> {
    let n = vectors.len();
    let dim = vectors[0].len();
    let mut centroid = vec![0.0f64; dim];
    for v in vectors {
        for d in 0..dim {
            centroid[d] += f64::from(v[d]);
        }
    }
    for c in centroid.iter_mut() {
        *c /= n as f64;
    }
    let mut cn = 0.0;
    for c in &centroid {
        cn += c * c;
    }
    let cn = cn.sqrt();
    vectors
        .iter()
        .map(|v| {
            let mut dot = 0.0;
            let mut vn = 0.0;
            for d in 0..dim {
                let x = f64::from(v[d]);
                dot += x * centroid[d];
                vn += x * x;
            }
            let s = dot / (vn.sqrt() * cn);
            s.clamp(-1.0, 1.0)
        })
        .collect()
}

/// Buckets over `(record, similarity)` pairs, lowest similarity first.
pub fn ref_buckets(items: &[(usize, f64)], k: usize, n_min: usize) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![];
    }
    let mut s_min = f64::INFINITY;
    let mut s_max = f64::NEG_INFINITY;
    for &(_, s) in items {
        s_min = s_min.min(s);
        s_max = s_max.max(s);
    }
    let all = || {
        let mut v: Vec<usize> = items.iter().map(|p| p.0).collect();
        v.sort();
        v
    };
    if s_min == s_max {
        return vec![all()];
    }

    let mut unassigned: Vec<(usize, f64)> = items.to_vec();
    let mut top_first: Vec<Vec<(usize, f64)>> = vec![];
    let mut hi = s_max;
    let mut left = k;
    loop {
        if unassigned.is_empty() {
            break;
        }
        if left == 1 || unassigned.len() < left {
            top_first.push(std::mem::take(&mut unassigned));
            break;
        }
        let mut lo = s_min + (hi - s_min) * (left - 1) as f64 / left as f64;
        let count = unassigned.iter().filter(|p| p.1 >= lo).count();
        if count < n_min {
            let mut desc: Vec<f64> = unassigned.iter().map(|p| p.1).collect();
            desc.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let take = n_min.min(desc.len());
            lo = desc[take - 1];
        }
        let (bucket, rest): (Vec<_>, Vec<_>) = unassigned.iter().partition(|p| p.1 >= lo);
        top_first.push(bucket);
        unassigned = rest;
        hi = lo;
        left -= 1;
    }
    if top_first.len() >= 2 && top_first.last().unwrap().len() < n_min {
        let tail = top_first.pop().unwrap();
        top_first.last_mut().unwrap().extend(tail);
    }
    top_first
        .into_iter()
        .rev()
        .map(|b| {
            let mut m: Vec<usize> = b.into_iter().map(|p| p.0).collect();
            m.sort();
            m
        })
        .collect()
}

pub fn ref_select(label: &str, vectors: &[Vec<f32>], c: &RefConfig) -> RefSelection {
    let n = vectors.len();
    if n <= c.small_class_max {
        return RefSelection {
            passthrough: true,
            similarities: vec![],
            discarded: vec![],
            buckets: vec![],
            selected: (0..n).collect(),
        };
    }
    let sims = ref_similarities(vectors);
    let mut retained = vec![];
    let mut discarded = vec![];
    for (i, &s) in sims.iter().enumerate() {
        if s >= c.theta {
            retained.push((i, s));
        } else {
            discarded.push(i);
        }
    }
    let buckets = ref_buckets(&retained, c.k, c.n_min);
    let mut rng = ClassRng::for_class(c.seed, label);
    let mut selected = vec![];
    for b in &buckets {
        if b.len() <= c.n1 {
            selected.extend_from_slice(b);
            continue;
        }
        let mut pool = b.clone();
        for i in 0..c.n1 {
            let j = i + rng.below(pool.len() - i);
            pool.swap(i, j);
        }
        selected.extend_from_slice(&pool[..c.n1]);
    }
    selected.sort();
    RefSelection {
        passthrough: false,
        similarities: sims,
        discarded,
        buckets,
        selected,
    }
}

pub fn records(label: &str, vectors: &[Vec<f32>]) -> Vec<EmbeddingRecord> {
    vectors
        .iter()
        .enumerate()
        .map(|(i, v)| EmbeddingRecord::new(format!("{label}-{i}"), label, v.clone()))
        .collect()
}

pub fn random_vectors(rng: &mut ChaCha8Rng, n: usize, dim: usize, offset: f32) -> Vec<Vec<f32>> {
    (0..n)
        .map(|_| {
            let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0) + offset).collect();
            if v.iter().all(|&x| x == 0.0) {
                vec![1.0; dim]
            } else {
                v
            }
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `large` classes of `large_size` plus one class of `small_size`, dimension `dim`.
pub fn multi_class_spec(large: usize, large_size: usize, small_size: usize, dim: usize, seed: u64) -> PopulationSpec {
    let center = |class: usize, phase: f64| -> Vec<f64> {
        (0..dim)
            .map(|i| ((class * 31 + i) as f64 * 0.37 + phase).sin())
            .collect()
    };
    let mut classes: Vec<ClassSpec> = (0..large)
        .map(|c| ClassSpec {
            label: format!("finding-{c:02}"),
            size: large_size,
            subgroups: vec![
                SubgroupSpec {
                    name: "a".into(),
                    proportion: 0.8,
                    center: center(c, 0.0),
                    spread: 0.6,
                },
                SubgroupSpec {
                    name: "b".into(),
                    proportion: 0.2,
                    center: center(c, 1.3),
                    spread: 0.6,
                },
            ],
        })
        .collect();
    classes.push(ClassSpec {
        label: "COVID-19".into(),
        size: small_size,
        subgroups: vec![SubgroupSpec {
            name: "all".into(),
            proportion: 1.0,
            center: center(99, 0.5),
            spread: 0.6,
        }],
    });
    PopulationSpec { dim, seed, classes }
}

pub fn rescale(dataset: &Dataset, alpha: f32) -> Dataset {
    Dataset::from_records(
        dataset.dim(),
        dataset.records().iter().map(|r| {
            EmbeddingRecord::new(
                r.id.clone(),
                r.label.clone(),
                r.vector.iter().map(|x| x * alpha).collect(),
            )
        }),
    )
    .unwrap()
}
