//! Synthetic populations with hidden subgroups, and metrics for how a
//! selection treats them.
//!
//! Each class is a mixture of isotropic Gaussians, one per subgroup. The
//! subgroup is the "hidden" attribute: selection never sees it, but the
//! report compares subgroup shares before and after selection.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::select::{sample_without_replacement, ClassRng};
use crate::store::{Dataset, EmbeddingRecord, SelectionManifest};

const PROPORTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupSpec {
    pub name: String,
    pub proportion: f64,
    pub center: Vec<f64>,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub label: String,
    pub size: usize,
    pub subgroups: Vec<SubgroupSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub dim: usize,
    pub seed: u64,
    pub classes: Vec<ClassSpec>,
}

impl PopulationSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("population dim must be positive".into()));
        }
        let mut labels = std::collections::HashSet::new();
        for class in &self.classes {
            if !labels.insert(class.label.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate class {:?}", class.label)));
            }
            let bad = |msg: String| Err(Error::InvalidConfig(format!("class {:?}: {msg}", class.label)));
            if class.size == 0 {
                return bad("size must be positive".into());
            }
            if class.subgroups.is_empty() {
                return bad("needs at least one subgroup".into());
            }
            for g in &class.subgroups {
                if !(g.proportion > 0.0 && g.proportion <= 1.0) {
                    return bad(format!("subgroup {:?} proportion must be in (0, 1]", g.name));
                }
                if g.center.len() != self.dim {
                    return bad(format!(
                        "subgroup {:?} center has {} components, expected {}",
                        g.name,
                        g.center.len(),
                        self.dim
                    ));
                }
                if !(g.spread >= 0.0 && g.spread.is_finite()) || g.center.iter().any(|c| !c.is_finite()) {
                    return bad(format!("subgroup {:?} has a non-finite center or negative spread", g.name));
                }
            }
            let sum: f64 = class.subgroups.iter().map(|g| g.proportion).sum();
            if (sum - 1.0).abs() > PROPORTION_TOLERANCE {
                return Err(Error::ProportionSum {
                    label: class.label.clone(),
                    sum,
                });
            }
        }
        Ok(())
    }
}

/// Splits `size` by `proportions` using the largest-remainder rule; ties in
/// the remainder go to the earlier subgroup.
pub fn subgroup_counts(size: usize, proportions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = proportions.iter().map(|p| p * size as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(size.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Shift added to every component of a class so its vectors are (almost
/// surely) non-negative: the largest |center component| plus four spreads.
pub fn nonnegative_offset(class: &ClassSpec) -> f64 {
    let center_max = class
        .subgroups
        .iter()
        .flat_map(|g| g.center.iter().map(|c| c.abs()))
        .fold(0.0, f64::max);
    let spread_max = class.subgroups.iter().map(|g| g.spread).fold(0.0, f64::max);
    center_max + 4.0 * spread_max
}

/// Ground-truth subgroup of every record, aligned with dataset order.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgroupTags {
    names: BTreeMap<String, Vec<String>>,
    tags: Vec<usize>,
}

impl SubgroupTags {
    pub fn subgroup_names(&self, label: &str) -> Option<&[String]> {
        self.names.get(label).map(Vec::as_slice)
    }

    /// Subgroup index (into [`Self::subgroup_names`]) of dataset record `i`.
    pub fn tag(&self, i: usize) -> usize {
        self.tags[i]
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn subgroup_name(&self, label: &str, i: usize) -> &str {
        &self.names[label][self.tags[i]]
    }
}

fn generate_class(spec: &PopulationSpec, class: &ClassSpec) -> (Vec<EmbeddingRecord>, Vec<usize>) {
    let proportions: Vec<f64> = class.subgroups.iter().map(|g| g.proportion).collect();
    let counts = subgroup_counts(class.size, &proportions);
    let mut rng = ClassRng::for_class(spec.seed, &format!("population/{}", class.label));

    let mut tags: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(g, &n)| std::iter::repeat_n(g, n))
        .collect();
    for i in (1..tags.len()).rev() {
        let j = rng.below(i + 1);
        tags.swap(i, j);
    }

    let offset = nonnegative_offset(class);
    let records = tags
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let sub = &class.subgroups[g];
            let vector = sub
                .center
                .iter()
                .map(|&c| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (c + sub.spread * z + offset) as f32
                })
                .collect();
            EmbeddingRecord::new(format!("{}-{i:06}", class.label), class.label.clone(), vector)
        })
        .collect();
    (records, tags)
}

/// Draws the population. Classes appear in spec order; within a class the
/// subgroups are shuffled together. Deterministic per `spec.seed`.
pub fn generate_population(spec: &PopulationSpec) -> Result<(Dataset, SubgroupTags)> {
    spec.validate()?;
    let generated: Vec<_> = spec
        .classes
        .par_iter()
        .map(|class| generate_class(spec, class))
        .collect();

    let mut dataset = Dataset::new(spec.dim)?;
    let mut tags = Vec::new();
    for (records, class_tags) in generated {
        for r in records {
            dataset.push(r)?;
        }
        tags.extend(class_tags);
    }
    let names = spec
        .classes
        .iter()
        .map(|c| (c.label.clone(), c.subgroups.iter().map(|g| g.name.clone()).collect()))
        .collect();
    Ok((dataset, SubgroupTags { names, tags }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupShare {
    pub name: String,
    pub original: f64,
    pub selected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBiasReport {
    pub label: String,
    pub original_count: usize,
    pub selected_count: usize,
    pub subgroups: Vec<SubgroupShare>,
    /// Selected records per bucket id.
    pub bucket_occupancy: Vec<usize>,
    /// Max |selected_b - n1| over buckets with at least n1 members; 0 if none.
    pub occupancy_max_dev: usize,
    /// trace(cov(selected)) / trace(cov(original)).
    pub variance_retention: f64,
    pub minority_subgroup: String,
    /// Minority share in the selection minus its share in the class.
    pub minority_share_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub n1: usize,
    pub classes: Vec<ClassBiasReport>,
    /// Same metrics for a uniform random sample of equal size per class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_baseline: Option<Vec<ClassBiasReport>>,
}

/// Sum of per-component population variances of the given records.
pub fn covariance_trace(dataset: &Dataset, indices: &[usize]) -> f64 {
    if indices.is_empty() {
        return 0.0;
    }
    let dim = dataset.dim();
    let n = indices.len() as f64;
    let mut mean = vec![0.0f64; dim];
    for &i in indices {
        for (m, &x) in mean.iter_mut().zip(&dataset.records()[i].vector) {
            *m += f64::from(x);
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut total = 0.0;
    for &i in indices {
        for (m, &x) in mean.iter().zip(&dataset.records()[i].vector) {
            let d = f64::from(x) - m;
            total += d * d;
        }
    }
    total / n
}

/// Which records are kept, and the bucket of each record if it has one.
struct SelectionView<'a> {
    kept: &'a [bool],
    bucket: &'a [Option<u32>],
    n1: usize,
}

fn class_report(
    dataset: &Dataset,
    tags: &SubgroupTags,
    label: &str,
    indices: &[usize],
    view: &SelectionView<'_>,
) -> ClassBiasReport {
    let names = tags.subgroup_names(label).unwrap_or_default();
    let selected: Vec<usize> = indices.iter().copied().filter(|&i| view.kept[i]).collect();

    let mut original_counts = vec![0usize; names.len()];
    let mut selected_counts = vec![0usize; names.len()];
    for &i in indices {
        original_counts[tags.tag(i)] += 1;
    }
    for &i in &selected {
        selected_counts[tags.tag(i)] += 1;
    }
    let share = |count: usize, total: usize| if total == 0 { 0.0 } else { count as f64 / total as f64 };
    let subgroups: Vec<SubgroupShare> = names
        .iter()
        .enumerate()
        .map(|(g, name)| SubgroupShare {
            name: name.clone(),
            original: share(original_counts[g], indices.len()),
            selected: share(selected_counts[g], selected.len()),
        })
        .collect();

    let n_buckets = indices
        .iter()
        .filter_map(|&i| view.bucket[i])
        .max()
        .map_or(0, |b| b as usize + 1);
    let mut members = vec![0usize; n_buckets];
    let mut occupancy = vec![0usize; n_buckets];
    for &i in indices {
        if let Some(b) = view.bucket[i] {
            members[b as usize] += 1;
            if view.kept[i] {
                occupancy[b as usize] += 1;
            }
        }
    }
    let occupancy_max_dev = members
        .iter()
        .zip(&occupancy)
        .filter(|(&m, _)| m >= view.n1)
        .map(|(_, &o)| o.abs_diff(view.n1))
        .max()
        .unwrap_or(0);

    let original_trace = covariance_trace(dataset, indices);
    let variance_retention = if original_trace == 0.0 {
        // Zero-spread class: nothing to lose unless nothing was kept.
        if selected.is_empty() { 0.0 } else { 1.0 }
    } else {
        covariance_trace(dataset, &selected) / original_trace
    };

    let minority = (0..names.len())
        .min_by_key(|&g| original_counts[g])
        .unwrap_or(0);
    let (minority_subgroup, minority_share_delta) = match subgroups.get(minority) {
        Some(s) => (s.name.clone(), s.selected - s.original),
        None => (String::new(), 0.0),
    };

    ClassBiasReport {
        label: label.to_owned(),
        original_count: indices.len(),
        selected_count: selected.len(),
        subgroups,
        bucket_occupancy: occupancy,
        occupancy_max_dev,
        variance_retention,
        minority_subgroup,
        minority_share_delta,
    }
}

fn check_alignment(manifest: &SelectionManifest, dataset: &Dataset, tags: &SubgroupTags) -> Result<()> {
    if manifest.entries.len() != dataset.len() || tags.len() != dataset.len() {
        return Err(Error::ManifestMismatch(format!(
            "{} manifest entries, {} records, {} tags",
            manifest.entries.len(),
            dataset.len(),
            tags.len()
        )));
    }
    for (i, (e, r)) in manifest.entries.iter().zip(dataset.records()).enumerate() {
        if e.id != r.id || e.label != r.label {
            return Err(Error::ManifestMismatch(format!(
                "entry {i} is ({}, {}), dataset record is ({}, {})",
                e.id, e.label, r.id, r.label
            )));
        }
    }
    Ok(())
}

fn report_for(
    dataset: &Dataset,
    tags: &SubgroupTags,
    view: &SelectionView<'_>,
) -> Vec<ClassBiasReport> {
    dataset
        .classes()
        .map(|(label, indices)| class_report(dataset, tags, label, indices, view))
        .collect()
}

pub fn evaluate_selection(
    manifest: &SelectionManifest,
    dataset: &Dataset,
    tags: &SubgroupTags,
) -> Result<BiasReport> {
    check_alignment(manifest, dataset, tags)?;
    let kept: Vec<bool> = manifest.entries.iter().map(|e| e.status.is_kept()).collect();
    let bucket: Vec<Option<u32>> = manifest.entries.iter().map(|e| e.bucket).collect();
    let n1 = manifest.header.config.n1;
    let view = SelectionView {
        kept: &kept,
        bucket: &bucket,
        n1,
    };
    Ok(BiasReport {
        n1,
        classes: report_for(dataset, tags, &view),
        uniform_baseline: None,
    })
}

/// Per class, a uniform random sample (over the whole class) of the same
/// size as the manifest's selection. Returns the kept mask in dataset order.
pub fn uniform_sample_mask(manifest: &SelectionManifest, dataset: &Dataset, seed: u64) -> Vec<bool> {
    let mut kept = vec![false; dataset.len()];
    for (label, indices) in dataset.classes() {
        let size = indices
            .iter()
            .filter(|&&i| manifest.entries[i].status.is_kept())
            .count();
        let mut rng = ClassRng::for_class(seed, &format!("uniform/{label}"));
        for i in sample_without_replacement(indices, size, &mut rng) {
            kept[i] = true;
        }
    }
    kept
}

/// [`evaluate_selection`] plus the same metrics for a size-matched uniform
/// random sample, measured against the manifest's buckets.
pub fn evaluate_with_baseline(
    manifest: &SelectionManifest,
    dataset: &Dataset,
    tags: &SubgroupTags,
    baseline_seed: u64,
) -> Result<BiasReport> {
    let mut report = evaluate_selection(manifest, dataset, tags)?;
    let kept = uniform_sample_mask(manifest, dataset, baseline_seed);
    let bucket: Vec<Option<u32>> = manifest.entries.iter().map(|e| e.bucket).collect();
    let view = SelectionView {
        kept: &kept,
        bucket: &bucket,
        n1: report.n1,
    };
    report.uniform_baseline = Some(report_for(dataset, tags, &view));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::select::{select_dataset, SelectionConfig};

    fn two_group_spec(size: usize, seed: u64) -> PopulationSpec {
        PopulationSpec {
            dim: 4,
            seed,
            classes: vec![ClassSpec {
                label: "a".into(),
                size,
                subgroups: vec![
                    SubgroupSpec {
                        name: "tall".into(),
                        proportion: 0.9,
                        center: vec![1.0, 0.0, 0.0, 0.0],
                        spread: 0.3,
                    },
                    SubgroupSpec {
                        name: "short".into(),
                        proportion: 0.1,
                        center: vec![0.0, 1.0, 0.0, 0.0],
                        spread: 0.3,
                    },
                ],
            }],
        }
    }

    #[test]
    fn largest_remainder() {
        assert_eq!(subgroup_counts(5000, &[0.9, 0.1]), vec![4500, 500]);
        assert_eq!(subgroup_counts(10, &[1.0 / 3.0; 3]), vec![4, 3, 3]);
        assert_eq!(subgroup_counts(7, &[0.5, 0.5]), vec![4, 3]);
        assert_eq!(subgroup_counts(3, &[0.15, 0.15, 0.7]), vec![1, 0, 2]);
        for n in [1, 13, 999] {
            assert_eq!(subgroup_counts(n, &[0.2, 0.3, 0.5]).iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn zero_spread_gives_identical_records() {
        let spec = PopulationSpec {
            dim: 3,
            seed: 9,
            classes: vec![ClassSpec {
                label: "c".into(),
                size: 20,
                subgroups: vec![SubgroupSpec {
                    name: "only".into(),
                    proportion: 1.0,
                    center: vec![1.0, -2.0, 0.5],
                    spread: 0.0,
                }],
            }],
        };
        let (ds, _) = generate_population(&spec).unwrap();
        // offset = 2: center + 2.
        for r in ds.records() {
            assert_eq!(r.vector, vec![3.0, 0.0, 2.5]);
        }
        let v = &ds.records()[0].vector;
        for r in ds.records() {
            assert!((crate::similarity::cosine(v, &r.vector).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tag_counts_and_seed_dependence() {
        let (ds1, t1) = generate_population(&two_group_spec(5000, 1)).unwrap();
        let (ds2, t2) = generate_population(&two_group_spec(5000, 2)).unwrap();
        let count = |t: &SubgroupTags| (0..t.len()).filter(|&i| t.tag(i) == 1).count();
        assert_eq!(count(&t1), 500);
        assert_eq!(count(&t2), 500);
        assert_ne!(ds1, ds2);
        assert_eq!(t1.subgroup_name("a", 0), ["tall", "short"][t1.tag(0)]);
        let (again, _) = generate_population(&two_group_spec(5000, 1)).unwrap();
        assert_eq!(ds1, again);
    }

    #[test]
    fn vectors_are_nonnegative() {
        let (ds, _) = generate_population(&two_group_spec(2000, 3)).unwrap();
        assert!(ds.records().iter().flat_map(|r| &r.vector).all(|&x| x >= 0.0));
    }

    #[test]
    fn proportion_sum_is_checked() {
        let mut spec = two_group_spec(10, 0);
        spec.classes[0].subgroups[1].proportion = 0.2;
        assert!(matches!(generate_population(&spec), Err(Error::ProportionSum { .. })));
        let mut spec = two_group_spec(10, 0);
        spec.classes[0].subgroups[0].center.pop();
        assert!(generate_population(&spec).is_err());
    }

    #[test]
    fn select_all_is_identity() {
        let (ds, tags) = generate_population(&two_group_spec(300, 4)).unwrap();
        let m = select_dataset(&ds, &SelectionConfig::default()).unwrap();
        let r = evaluate_selection(&m, &ds, &tags).unwrap();
        let c = &r.classes[0];
        assert_eq!(c.variance_retention, 1.0);
        assert_eq!(c.minority_share_delta, 0.0);
        assert_eq!(c.minority_subgroup, "short");
        assert_eq!(c.selected_count, 300);
        assert!(c.bucket_occupancy.is_empty());
        assert_eq!(c.occupancy_max_dev, 0);
    }

    #[test]
    fn full_buckets_hold_exactly_n1() {
        let (ds, tags) = generate_population(&two_group_spec(3000, 5)).unwrap();
        let config = SelectionConfig {
            theta: 0.5,
            k: 3,
            n_min: 100,
            n1: 100,
            small_class_max: 10,
            seed: 5,
        };
        let m = select_dataset(&ds, &config).unwrap();
        let r = evaluate_selection(&m, &ds, &tags).unwrap();
        let c = &r.classes[0];
        assert_eq!(c.occupancy_max_dev, 0);
        assert!(c.bucket_occupancy.iter().all(|&o| o == 100));
        assert!(c.variance_retention > 0.0);
        for s in &c.subgroups {
            assert!((0.0..=1.0).contains(&s.original) && (0.0..=1.0).contains(&s.selected));
        }
    }

    #[test]
    fn mismatched_manifest_is_rejected() {
        let (ds, tags) = generate_population(&two_group_spec(50, 6)).unwrap();
        let mut m = select_dataset(&ds, &SelectionConfig::default()).unwrap();
        m.entries.swap(0, 1);
        assert!(matches!(evaluate_selection(&m, &ds, &tags), Err(Error::ManifestMismatch(_))));
        m.entries.pop();
        assert!(matches!(evaluate_selection(&m, &ds, &tags), Err(Error::ManifestMismatch(_))));
    }

    #[test]
    fn baseline_matches_selection_size() {
        let (ds, tags) = generate_population(&two_group_spec(3000, 7)).unwrap();
        let config = SelectionConfig {
            small_class_max: 10,
            k: 3,
            n_min: 100,
            n1: 100,
            theta: 0.5,
            seed: 1,
        };
        let m = select_dataset(&ds, &config).unwrap();
        let r = evaluate_with_baseline(&m, &ds, &tags, 99).unwrap();
        let base = &r.uniform_baseline.as_ref().unwrap()[0];
        assert_eq!(base.selected_count, r.classes[0].selected_count);
    }
}
