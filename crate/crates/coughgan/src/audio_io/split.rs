//! Deterministic stratified train/validation/test splitting.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rng::Rng;

use super::manifest::ManifestRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<ManifestRecord>,
    pub validation: Vec<ManifestRecord>,
    pub test: Vec<ManifestRecord>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn total(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }
}

/// Largest-remainder apportionment of `n` into three parts.
fn apportion(n: usize, ratios: (f64, f64, f64)) -> [usize; 3] {
    let r = [ratios.0, ratios.1, ratios.2];
    let exact: Vec<f64> = r.iter().map(|&x| x * n as f64).collect();
    let mut parts: Vec<usize> = exact.iter().map(|&x| x.floor() as usize).collect();
    let mut remainder = n - parts.iter().sum::<usize>();
    // hand out leftovers by descending fractional part, ties by part order
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in &order {
        if remainder == 0 {
            break;
        }
        parts[i] += 1;
        remainder -= 1;
    }
    [parts[0], parts[1], parts[2]]
}

/// Per-class shuffle followed by contiguous partition. Classes with fewer
/// than 3 records go wholly to train, with a warning. Deterministic for a
/// given seed.
pub fn stratified_split(
    records: &[ManifestRecord],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(DatasetSplit, Vec<String>)> {
    if ratios.0 <= 0.0 || ratios.1 <= 0.0 || ratios.2 <= 0.0 {
        return Err(Error::Domain("split ratios must be positive".into()));
    }
    if (ratios.0 + ratios.1 + ratios.2 - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "split ratios must sum to 1, got {}",
            ratios.0 + ratios.1 + ratios.2
        )));
    }
    let mut by_class: BTreeMap<&str, Vec<&ManifestRecord>> = BTreeMap::new();
    for r in records {
        let label = r
            .class_label()
            .ok_or_else(|| Error::Data(format!("record {} has no class label", r.uuid)))?;
        by_class.entry(label).or_default().push(r);
    }

    let mut rng = Rng::seed_from_u64(seed);
    let mut warnings = Vec::new();
    let mut split = DatasetSplit {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        seed,
    };
    for (label, mut members) in by_class {
        rng.shuffle(&mut members);
        if members.len() < 3 {
            warnings.push(format!(
                "class {label} has only {} record(s); placed wholly in train",
                members.len()
            ));
            split.train.extend(members.into_iter().cloned());
            continue;
        }
        let [n_train, n_val, _] = apportion(members.len(), ratios);
        for (i, r) in members.into_iter().enumerate() {
            if i < n_train {
                split.train.push(r.clone());
            } else if i < n_train + n_val {
                split.validation.push(r.clone());
            } else {
                split.test.push(r.clone());
            }
        }
    }
    Ok((split, warnings))
}

/// Downsamples every class to the minority-class count. Selection is seeded;
/// surviving records keep their original manifest order.
pub fn balance_classes(records: &[ManifestRecord], seed: u64) -> Result<Vec<ManifestRecord>> {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let label = r
            .class_label()
            .ok_or_else(|| Error::Data(format!("record {} has no class label", r.uuid)))?;
        by_class.entry(label).or_default().push(i);
    }
    let Some(minority) = by_class.values().map(Vec::len).min() else {
        return Ok(Vec::new());
    };
    let mut rng = Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    for indices in by_class.values() {
        let mut idx = indices.clone();
        rng.shuffle(&mut idx);
        idx.truncate(minority);
        keep.extend(idx);
    }
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| records[i].clone()).collect())
}
