use std::path::Path;

use serde_json::{Map, Value};

use super::{DatasetError, Split, TrajectoryDataset, TrajectoryMeta};
use crate::container::{self, ArrayValues, FormatError, NamedArray};
use crate::spectral::Grid2;

pub const DATASET_MAGIC: &[u8; 8] = b"FFNODS1\0";

pub fn to_bytes(ds: &TrajectoryDataset) -> Result<Vec<u8>, DatasetError> {
    ds.validate()?;
    let mut meta = Map::new();
    meta.insert("grid".into(), serde_json::to_value(ds.grid).expect("grid serializes"));
    meta.insert("record_dt".into(), Value::from(ds.record_dt));
    meta.insert("start_time".into(), Value::from(ds.start_time));
    meta.insert("split".into(), serde_json::to_value(ds.split).expect("split serializes"));
    meta.insert("seed".into(), Value::from(ds.seed));
    meta.insert("trajectories".into(), serde_json::to_value(&ds.trajectories).expect("meta serializes"));
    meta.insert("provenance".into(), ds.provenance.clone());
    let arrays = [NamedArray {
        name: "vorticity".into(),
        shape: ds.shape().to_vec(),
        values: ArrayValues::F32(ds.vorticity.clone()),
    }];
    Ok(container::encode(DATASET_MAGIC, &meta, &arrays)?)
}

pub fn from_bytes(bytes: &[u8]) -> Result<TrajectoryDataset, DatasetError> {
    let mut c = container::decode(DATASET_MAGIC, bytes)?;
    let grid: Grid2 = c.field("grid")?;
    let trajectories: Vec<TrajectoryMeta> = c.field("trajectories")?;
    let arr = c.take_array("vorticity")?;
    let ArrayValues::F32(vorticity) = arr.values else {
        return Err(FormatError::Header("vorticity must be stored as f32".into()).into());
    };
    let expected = [trajectories.len(), arr.shape.get(1).copied().unwrap_or(0), grid.ny(), grid.nx()];
    if arr.shape.len() != 4 || arr.shape[..] != expected[..] {
        return Err(DatasetError::Invalid(format!(
            "vorticity shape {:?} disagrees with header (expected [{}, T, {}, {}])",
            arr.shape,
            trajectories.len(),
            grid.ny(),
            grid.nx()
        )));
    }
    let ds = TrajectoryDataset {
        grid,
        record_dt: c.field("record_dt")?,
        start_time: c.field("start_time")?,
        split: c.field::<Split>("split")?,
        seed: c.field("seed")?,
        trajectories,
        frames: arr.shape[1],
        vorticity,
        provenance: c.meta.remove("provenance").unwrap_or(Value::Null),
    };
    ds.validate()?;
    Ok(ds)
}

pub fn save(ds: &TrajectoryDataset, path: &Path) -> Result<(), DatasetError> {
    Ok(container::write_atomic(path, &to_bytes(ds)?)?)
}

pub fn load(path: &Path) -> Result<TrajectoryDataset, DatasetError> {
    let bytes = std::fs::read(path).map_err(FormatError::Io)?;
    from_bytes(&bytes)
}
