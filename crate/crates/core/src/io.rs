//! On-disk containers: a JSON sidecar plus raw little-endian `f64` payloads.
//!
//! Snapshot directories hold `meta.json`, `data.f64le` with the `M+1`
//! snapshots one after another, and `gram.f64le` (row-major) when the Gram
//! operator is not the identity. Basis directories hold `meta.json`,
//! `modes.f64le` (mode-contiguous), optional `mean.f64le` and `gram.f64le`,
//! and `discarded.f64le` with the modes below the rank cutoff when there are
//! any.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{TimeGrid, Trajectory};
use crate::pod::{PodBasis, SnapshotOptions};
use crate::space::{GramKind, HilbertSpace};

pub const SNAPSHOT_SCHEMA: &str = "podkit-snapshots-v1";
pub const BASIS_SCHEMA: &str = "podkit-basis-v1";

const META: &str = "meta.json";
const DATA: &str = "data.f64le";
const GRAM: &str = "gram.f64le";
const MODES: &str = "modes.f64le";
const MEAN: &str = "mean.f64le";
const DISCARDED: &str = "discarded.f64le";

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GramMeta {
    pub kind: GramKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub file: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub schema: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub periodic: bool,
    pub gram: GramMeta,
    pub mean_subtracted: bool,
    pub byte_order: String,
    pub layout: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisMeta {
    pub schema: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "J")]
    pub j: usize,
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub discarded_sigma: Vec<f64>,
    pub weight: f64,
    pub source_count: usize,
    pub drop_first: bool,
    pub subtract_mean: bool,
    pub has_mean: bool,
    pub gram: GramMeta,
    pub byte_order: String,
    pub layout: String,
}

/// Little-endian bytes of a slice.
pub fn encode_f64(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Inverse of [`encode_f64`]; the length must be exactly `8 · expected`.
pub fn decode_f64(bytes: &[u8], expected: usize, what: &str) -> Result<Vec<f64>> {
    if bytes.len() != 8 * expected {
        return format_err(format!(
            "{what}: payload has {} bytes, expected {}",
            bytes.len(),
            8 * expected
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of 8")))
        .collect())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_gram(dir: &Path, space: &HilbertSpace) -> Result<GramMeta> {
    let kind = space.kind();
    match space.gram() {
        None => Ok(GramMeta { kind, file: None }),
        Some(g) => {
            // Symmetric, so column-major storage is also row-major.
            fs::write(dir.join(GRAM), encode_f64(g.as_slice()))?;
            Ok(GramMeta {
                kind,
                file: Some(GRAM.to_string()),
            })
        }
    }
}

fn read_gram(dir: &Path, meta: &GramMeta, n: usize) -> Result<HilbertSpace> {
    match (&meta.file, meta.kind) {
        (None, GramKind::Identity) => Ok(HilbertSpace::identity(n)),
        (None, kind) => format_err(format!("{} gram without a payload file", kind.as_str())),
        (Some(file), kind) => {
            if file.contains('/') || file.contains('\\') {
                return format_err(format!("gram file {file:?} must be a plain file name"));
            }
            let bytes = fs::read(dir.join(file))?;
            let vals = decode_f64(&bytes, n * n, "gram")?;
            let g = DMatrix::from_row_slice(n, n, &vals);
            HilbertSpace::with_gram(kind, g)
        }
    }
}

fn check_common(
    schema: &str,
    expected: &str,
    byte_order: &str,
    layout: &str,
    want_layout: &str,
) -> Result<()> {
    if schema != expected {
        return format_err(format!("schema {schema:?}, expected {expected:?}"));
    }
    if byte_order != "little" {
        return format_err(format!("byte order {byte_order:?} unsupported"));
    }
    if layout != want_layout {
        return format_err(format!("layout {layout:?}, expected {want_layout:?}"));
    }
    Ok(())
}

/// Writes a trajectory container into `dir`, creating it if needed.
pub fn write_snapshots(
    dir: &Path,
    traj: &Trajectory,
    mean_subtracted: bool,
) -> Result<SnapshotMeta> {
    fs::create_dir_all(dir)?;
    let gram = write_gram(dir, traj.space())?;
    fs::write(dir.join(DATA), encode_f64(traj.values().as_slice()))?;
    let meta = SnapshotMeta {
        schema: SNAPSHOT_SCHEMA.to_string(),
        n: traj.dim(),
        m: traj.grid().intervals(),
        t: traj.grid().duration(),
        periodic: traj.periodic(),
        gram,
        mean_subtracted,
        byte_order: "little".to_string(),
        layout: "time-major".to_string(),
    };
    write_json(&dir.join(META), &meta)?;
    Ok(meta)
}

/// Reads a trajectory container written by [`write_snapshots`].
pub fn read_snapshots(dir: &Path) -> Result<(Trajectory, SnapshotMeta)> {
    let meta: SnapshotMeta = serde_json::from_slice(&fs::read(dir.join(META))?)?;
    check_common(
        &meta.schema,
        SNAPSHOT_SCHEMA,
        &meta.byte_order,
        &meta.layout,
        "time-major",
    )?;
    if meta.n == 0 {
        return format_err("N must be at least 1");
    }
    let bytes = fs::read(dir.join(DATA))?;
    let vals = decode_f64(&bytes, meta.n * (meta.m + 1), "snapshots")?;
    let space = read_gram(dir, &meta.gram, meta.n)?;
    let grid = TimeGrid::new(meta.t, meta.m)?;
    let values = DMatrix::from_column_slice(meta.n, meta.m + 1, &vals);
    let traj = Trajectory::new(grid, space, values, meta.periodic)?;
    Ok((traj, meta))
}

/// Writes a POD basis container into `dir`.
pub fn write_basis(dir: &Path, basis: &PodBasis) -> Result<BasisMeta> {
    fs::create_dir_all(dir)?;
    let gram = write_gram(dir, basis.space())?;
    fs::write(dir.join(MODES), encode_f64(basis.modes().as_slice()))?;
    if let Some(mean) = basis.mean() {
        fs::write(dir.join(MEAN), encode_f64(mean.as_slice()))?;
    }
    if !basis.discarded_sigma().is_empty() {
        fs::write(
            dir.join(DISCARDED),
            encode_f64(basis.discarded_modes().as_slice()),
        )?;
    }
    let opts = basis.options();
    let meta = BasisMeta {
        schema: BASIS_SCHEMA.to_string(),
        n: basis.space().dim(),
        j: basis.rank(),
        sigma: basis.sigma().to_vec(),
        discarded_sigma: basis.discarded_sigma().to_vec(),
        weight: basis.weight(),
        source_count: basis.source_count(),
        drop_first: opts.drop_first,
        subtract_mean: opts.subtract_mean,
        has_mean: basis.mean().is_some(),
        gram,
        byte_order: "little".to_string(),
        layout: "mode-major".to_string(),
    };
    write_json(&dir.join(META), &meta)?;
    Ok(meta)
}

/// Reads a basis container written by [`write_basis`].
pub fn read_basis(dir: &Path) -> Result<PodBasis> {
    let meta: BasisMeta = serde_json::from_slice(&fs::read(dir.join(META))?)?;
    check_common(
        &meta.schema,
        BASIS_SCHEMA,
        &meta.byte_order,
        &meta.layout,
        "mode-major",
    )?;
    if meta.sigma.len() != meta.j {
        return format_err(format!(
            "{} singular values for J = {}",
            meta.sigma.len(),
            meta.j
        ));
    }
    let space = read_gram(dir, &meta.gram, meta.n)?;
    let modes = decode_f64(&fs::read(dir.join(MODES))?, meta.n * meta.j, "modes")?;
    let modes = DMatrix::from_column_slice(meta.n, meta.j, &modes);
    let mean = if meta.has_mean {
        let v = decode_f64(&fs::read(dir.join(MEAN))?, meta.n, "mean")?;
        Some(DVector::from_vec(v))
    } else {
        None
    };
    let d = meta.discarded_sigma.len();
    let discarded = if d > 0 {
        decode_f64(
            &fs::read(dir.join(DISCARDED))?,
            meta.n * d,
            "discarded modes",
        )?
    } else {
        Vec::new()
    };
    PodBasis::from_parts(
        space,
        meta.sigma,
        modes,
        meta.weight,
        meta.source_count,
        SnapshotOptions::new(meta.drop_first, meta.subtract_mean),
        mean,
    )?
    .with_discarded(
        meta.discarded_sigma,
        DMatrix::from_column_slice(meta.n, d, &discarded),
    )
}
