//! Imitation-learning export: a JSON-lines file whose first line is a header and every
//! following line one `(observation, expert action, rewards)` record.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::{ActionSpace, PointRow, RewardSet, Trajectory, POINT_FEATURES};

pub const IL_SCHEMA_VERSION: u32 = 1;
const IL_FORMAT: &str = "scenefit-il";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IlHeader {
    pub format: String,
    pub schema_version: u32,
    pub step_sizes: ActionSpace,
    pub point_features: usize,
    pub num_classes: usize,
    pub episodes: usize,
    pub records: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IlRecord {
    pub episode: usize,
    pub iteration: usize,
    pub object_id: u32,
    pub class_id: u32,
    pub class_one_hot: Vec<f32>,
    pub source: Vec<PointRow>,
    pub target: Vec<PointRow>,
    pub foreground: Vec<bool>,
    /// Action classes in `0..space.choices()`: rotation x, y, z then translation x, y, z.
    pub action: [usize; 6],
    pub rewards: RewardSet,
}

/// Flattens trajectories (with recorded observations) into records; episode numbers
/// follow the input order.
pub fn il_records(trajectories: &[Trajectory], space: &ActionSpace) -> Result<Vec<IlRecord>> {
    let mut out = Vec::new();
    for (episode, t) in trajectories.iter().enumerate() {
        for s in &t.steps {
            let obs = s
                .observation
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument(format!("episode {episode} step {} has no recorded observation", s.iteration)))?;
            s.action.validate(space)?;
            out.push(IlRecord {
                episode,
                iteration: s.iteration,
                object_id: t.object_id,
                class_id: t.class_id,
                class_one_hot: obs.class_one_hot.clone(),
                source: obs.source.clone(),
                target: obs.target.clone(),
                foreground: obs.foreground.clone(),
                action: s.action.indices().map(|i| space.to_class(i)),
                rewards: s.rewards,
            });
        }
    }
    Ok(out)
}

pub fn export_il_dataset(trajectories: &[Trajectory], space: &ActionSpace, num_classes: usize, path: &Path) -> Result<IlHeader> {
    if trajectories.is_empty() {
        return Err(Error::InvalidArgument("no trajectories to export".into()));
    }
    let records = il_records(trajectories, space)?;
    let header = IlHeader {
        format: IL_FORMAT.into(),
        schema_version: IL_SCHEMA_VERSION,
        step_sizes: space.clone(),
        point_features: POINT_FEATURES,
        num_classes,
        episodes: trajectories.len(),
        records: records.len(),
    };
    let mut out = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for r in &records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(header)
}

pub fn import_il_dataset(path: &Path) -> Result<(IlHeader, Vec<IlRecord>)> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines();
    let parse_err = |msg: String| Error::Parse { path: path.to_path_buf(), msg };
    let first = lines.next().ok_or_else(|| parse_err("empty file".into()))??;
    let header: IlHeader = serde_json::from_str(&first).map_err(|e| parse_err(format!("header: {e}")))?;
    if header.format != IL_FORMAT || header.schema_version != IL_SCHEMA_VERSION {
        return Err(parse_err(format!("unsupported dataset {} v{}", header.format, header.schema_version)));
    }
    let mut records = Vec::with_capacity(header.records);
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let r: IlRecord = serde_json::from_str(&line).map_err(|e| parse_err(format!("record {}: {e}", n + 1)))?;
        if r.action.iter().any(|&a| a >= header.step_sizes.choices()) {
            return Err(parse_err(format!("record {} has an action outside the space", n + 1)));
        }
        records.push(r);
    }
    if records.len() != header.records {
        return Err(parse_err(format!("header announces {} records, found {}", header.records, records.len())));
    }
    Ok((header, records))
}
