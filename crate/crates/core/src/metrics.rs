//! Pose error metrics: ADD, ADI, threshold recalls and AUC.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::geometry::{KdTree, PointCloud, RigidTransform, Vec3};
use crate::{Error, Result};

/// Recall thresholds reported relative to the object diameter.
pub const RECALL_FRACTIONS: [f64; 3] = [0.10, 0.05, 0.02];
/// Absolute maximum threshold of the reported AUC, in meters.
pub const AUC_MAX_THRESHOLD: f64 = 0.10;
pub const DEFAULT_AUC_BINS: usize = 1000;

fn check(model: &PointCloud) -> Result<()> {
    if model.is_empty() {
        Err(Error::EmptyCloud)
    } else {
        Ok(())
    }
}

/// Mean distance between corresponding model points under the two poses.
pub fn add_distance(model: &PointCloud, gt: &RigidTransform, est: &RigidTransform) -> Result<f64> {
    check(model)?;
    let sum: f64 = model.points.iter().map(|m| (est.apply(m) - gt.apply(m)).norm()).sum();
    Ok(sum / model.len() as f64)
}

/// Mean distance from each estimated model point to the closest ground-truth model point.
pub fn adi_distance(model: &PointCloud, gt: &RigidTransform, est: &RigidTransform) -> Result<f64> {
    check(model)?;
    let gt_points: Vec<Vec3> = model.points.iter().map(|m| gt.apply(m)).collect();
    let tree = KdTree::new(&gt_points);
    let sum: f64 = model
        .points
        .iter()
        .map(|m| tree.nearest(&est.apply(m)).expect("non-empty tree").1)
        .sum();
    Ok(sum / model.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub scene: String,
    pub object: usize,
    pub class_id: u32,
    pub add: f64,
    pub adi: f64,
    pub diameter: f64,
    pub symmetric: bool,
}

impl EvalRecord {
    pub fn compute(
        scene: impl Into<String>,
        object: usize,
        class_id: u32,
        model: &PointCloud,
        diameter: f64,
        symmetric: bool,
        gt: &RigidTransform,
        est: &RigidTransform,
    ) -> Result<Self> {
        Ok(Self {
            scene: scene.into(),
            object,
            class_id,
            add: add_distance(model, gt, est)?,
            adi: adi_distance(model, gt, est)?,
            diameter,
            symmetric,
        })
    }

    /// ADI for symmetric objects, ADD otherwise.
    pub fn ad(&self) -> f64 {
        if self.symmetric {
            self.adi
        } else {
            self.add
        }
    }
}

fn non_empty(records: &[EvalRecord]) -> Result<()> {
    if records.is_empty() {
        Err(Error::InvalidArgument("no evaluation records".into()))
    } else {
        Ok(())
    }
}

/// Fraction of records with `AD <= fraction * diameter`.
pub fn recall_at(records: &[EvalRecord], fraction: f64) -> Result<f64> {
    non_empty(records)?;
    let hits = records.iter().filter(|r| r.ad() <= fraction * r.diameter).count();
    Ok(hits as f64 / records.len() as f64)
}

/// Fraction of records with `AD <= threshold` meters.
pub fn recall_at_absolute(records: &[EvalRecord], threshold: f64) -> Result<f64> {
    non_empty(records)?;
    let hits = records.iter().filter(|r| r.ad() <= threshold).count();
    Ok(hits as f64 / records.len() as f64)
}

/// Area under the recall curve over absolute thresholds `j * max / bins`, `j = 1..=bins`,
/// normalized to `[0, 1]`.
pub fn auc(records: &[EvalRecord], max_threshold: f64, bins: usize) -> Result<f64> {
    non_empty(records)?;
    if bins == 0 || !(max_threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("auc needs bins >= 1 and a positive threshold, got {bins}, {max_threshold}")));
    }
    let mut errors: Vec<f64> = records.iter().map(EvalRecord::ad).collect();
    errors.sort_by(f64::total_cmp);
    let n = errors.len() as f64;
    let total: f64 = (1..=bins)
        .map(|j| {
            let th = j as f64 * max_threshold / bins as f64;
            errors.partition_point(|&e| e <= th) as f64 / n
        })
        .sum();
    Ok(total / bins as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecallSummary {
    pub count: usize,
    pub add_recall: BTreeMap<String, f64>,
    pub adi_recall: BTreeMap<String, f64>,
    pub ad_recall: BTreeMap<String, f64>,
    pub auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub auc_max_threshold: f64,
    pub auc_bins: usize,
    pub overall: RecallSummary,
    pub per_class: BTreeMap<u32, RecallSummary>,
}

fn summarize_group(records: &[EvalRecord], bins: usize) -> Result<RecallSummary> {
    let mut add_recall = BTreeMap::new();
    let mut adi_recall = BTreeMap::new();
    let mut ad_recall = BTreeMap::new();
    let n = records.len() as f64;
    for f in RECALL_FRACTIONS {
        let key = format!("{f:.2}d");
        add_recall.insert(key.clone(), records.iter().filter(|r| r.add <= f * r.diameter).count() as f64 / n);
        adi_recall.insert(key.clone(), records.iter().filter(|r| r.adi <= f * r.diameter).count() as f64 / n);
        ad_recall.insert(key, recall_at(records, f)?);
    }
    Ok(RecallSummary { count: records.len(), add_recall, adi_recall, ad_recall, auc: auc(records, AUC_MAX_THRESHOLD, bins)? })
}

/// Overall and per-class recalls at the reported thresholds and AUC up to 10 cm.
pub fn summarize(records: &[EvalRecord], bins: usize) -> Result<EvalSummary> {
    non_empty(records)?;
    let mut by_class: BTreeMap<u32, Vec<EvalRecord>> = BTreeMap::new();
    for r in records {
        by_class.entry(r.class_id).or_default().push(r.clone());
    }
    let per_class = by_class
        .iter()
        .map(|(c, rs)| Ok((*c, summarize_group(rs, bins)?)))
        .collect::<Result<_>>()?;
    Ok(EvalSummary { auc_max_threshold: AUC_MAX_THRESHOLD, auc_bins: bins, overall: summarize_group(records, bins)?, per_class })
}

/// Per-object rows: `scene,object,class_id,add,adi,ad,diameter,symmetric`.
pub fn write_records_csv<W: Write>(records: &[EvalRecord], mut out: W) -> Result<()> {
    writeln!(out, "scene,object,class_id,add,adi,ad,diameter,symmetric")?;
    for r in records {
        writeln!(out, "{},{},{},{},{},{},{},{}", r.scene, r.object, r.class_id, r.add, r.adi, r.ad(), r.diameter, r.symmetric)?;
    }
    Ok(())
}
