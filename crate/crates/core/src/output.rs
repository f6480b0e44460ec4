//! JSON report envelopes and two-column CSV plot series.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grids::{TimeGrid, TimeSampler, Trajectory};
use crate::pod::{mode_norms, projection_error_profile, PodBasis};
use crate::space::HilbertSpace;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Report kinds and the payload keys each must carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    Constants,
    Lemmas,
    Generate,
    Pod,
    ProjErrors,
    Rom,
    Bounds,
    Sweep,
}

impl ReportKind {
    pub fn schema(self) -> &'static str {
        match self {
            ReportKind::Constants => "podkit-constants-v1",
            ReportKind::Lemmas => "podkit-lemmas-v1",
            ReportKind::Generate => "podkit-gen-v1",
            ReportKind::Pod => "podkit-pod-v1",
            ReportKind::ProjErrors => "podkit-proj-errors-v1",
            ReportKind::Rom => "podkit-rom-v1",
            ReportKind::Bounds => "podkit-bounds-v1",
            ReportKind::Sweep => "podkit-sweep-v1",
        }
    }

    fn required(self) -> &'static [(&'static str, JsonType)] {
        use JsonType::*;
        match self {
            ReportKind::Constants => &[
                ("c_a", Number),
                ("c_a1", Number),
                ("c_b1", Number),
                ("c_m", Array),
            ],
            ReportKind::Lemmas => &[("runs", Array), ("violations", Number), ("pass", Bool)],
            ReportKind::Generate => &[
                ("N", Number),
                ("M", Number),
                ("T", Number),
                ("periodic", Bool),
            ],
            ReportKind::Pod => &[
                ("rank", Number),
                ("sigma", Array),
                ("energy_identity", Object),
            ],
            ReportKind::ProjErrors => &[("r", Number), ("errors", Array), ("max", Number)],
            ReportKind::Rom => &[
                ("scheme", String),
                ("r", Number),
                ("errors", Array),
                ("max_error", Number),
            ],
            ReportKind::Bounds => &[("reports", Array), ("pass", Bool)],
            ReportKind::Sweep => &[("table", String), ("rows", Array), ("pass", Bool)],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum JsonType {
    Number,
    String,
    Bool,
    Array,
    Object,
}

impl JsonType {
    fn matches(self, v: &Value) -> bool {
        match self {
            // Non-finite numbers serialize as strings.
            JsonType::Number => v.is_number() || matches!(v.as_str(), Some("inf" | "-inf" | "nan")),
            JsonType::String => v.is_string(),
            JsonType::Bool => v.is_boolean(),
            JsonType::Array => v.is_array(),
            JsonType::Object => v.is_object(),
        }
    }
}

/// Common wrapper of every emitted report.
#[derive(Clone, Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub seed: u64,
    /// Input name → SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub payload: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(kind: ReportKind, seed: u64, payload: T) -> Self {
        Envelope {
            schema: kind.schema(),
            tool_version: TOOL_VERSION,
            seed,
            inputs: BTreeMap::new(),
            payload,
        }
    }

    pub fn with_input(mut self, name: impl Into<String>, digest: String) -> Self {
        self.inputs.insert(name.into(), digest);
        self
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of a file, or of every file of a directory in name order.
pub fn digest_path(path: &Path) -> Result<String> {
    if path.is_dir() {
        let mut names: Vec<_> = fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        names.sort();
        let mut h = Sha256::new();
        for p in names.into_iter().filter(|p| p.is_file()) {
            h.update(
                p.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
            );
            h.update([0u8]);
            h.update(fs::read(&p)?);
        }
        Ok(hex::encode(h.finalize()))
    } else {
        Ok(sha256_hex(&fs::read(path)?))
    }
}

fn schema_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

/// Checks a serialized envelope against its report kind.
pub fn validate_report(kind: ReportKind, value: &Value) -> Result<()> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Format("report is not an object".into()))?;
    let field = |name: &str| {
        obj.get(name)
            .ok_or_else(|| Error::Format(format!("report lacks {name:?}")))
    };
    if field("schema")?.as_str() != Some(kind.schema()) {
        return schema_err(format!("schema must be {:?}", kind.schema()));
    }
    if !field("tool_version")?.is_string() {
        return schema_err("tool_version must be a string");
    }
    if !field("seed")?.is_u64() {
        return schema_err("seed must be an unsigned integer");
    }
    let inputs = field("inputs")?
        .as_object()
        .ok_or_else(|| Error::Format("inputs must be an object".into()))?;
    for (k, v) in inputs {
        let ok = v
            .as_str()
            .is_some_and(|s| s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit()));
        if !ok {
            return schema_err(format!("input {k:?} must map to a sha256 hex digest"));
        }
    }
    let payload: &Map<String, Value> = field("payload")?
        .as_object()
        .ok_or_else(|| Error::Format("payload must be an object".into()))?;
    for (key, ty) in kind.required() {
        match payload.get(*key) {
            Some(v) if ty.matches(v) => {}
            Some(_) => return schema_err(format!("payload field {key:?} must be {ty:?}")),
            None => return schema_err(format!("payload lacks {key:?}")),
        }
    }
    Ok(())
}

/// Serializes, validates and writes an envelope as pretty JSON.
pub fn write_report<T: Serialize>(path: &Path, kind: ReportKind, env: &Envelope<T>) -> Result<()> {
    let value = serde_json::to_value(env)?;
    validate_report(kind, &value)?;
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// Which figure a series feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    DerivNorms,
    ModeNorms,
    SigmaTail,
    ErrorVsR,
}

impl PlotKind {
    pub fn file_name(self) -> &'static str {
        match self {
            PlotKind::DerivNorms => "deriv_norms.csv",
            PlotKind::ModeNorms => "mode_norms.csv",
            PlotKind::SigmaTail => "sigma_tail.csv",
            PlotKind::ErrorVsR => "error_vs_r.csv",
        }
    }
}

/// Ordered `(x, y)` points with column names.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSeries {
    pub kind: PlotKind,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub points: Vec<(f64, f64)>,
}

impl PlotSeries {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.x_label, self.y_label);
        for (x, y) in &self.points {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// `‖∂_t^order u(t_n)‖` at the grid nodes.
pub fn deriv_norm_series(
    sampler: &dyn TimeSampler,
    space: &HilbertSpace,
    grid: &TimeGrid,
    order: usize,
) -> Result<PlotSeries> {
    space.check_dim(sampler.dim(), "sampler")?;
    let points = grid
        .nodes()
        .into_iter()
        .map(|t| Ok((t, space.norm(&sampler.sample(t, order)?))))
        .collect::<Result<_>>()?;
    Ok(PlotSeries {
        kind: PlotKind::DerivNorms,
        x_label: "t",
        y_label: "norm",
        points,
    })
}

/// `(k, ‖φ^k‖)` with the norm of `other`.
pub fn mode_norm_series(basis: &PodBasis, other: &HilbertSpace) -> Result<PlotSeries> {
    let norms = mode_norms(basis, other)?;
    Ok(PlotSeries {
        kind: PlotKind::ModeNorms,
        x_label: "k",
        y_label: "norm",
        points: norms
            .into_iter()
            .enumerate()
            .map(|(i, n)| ((i + 1) as f64, n))
            .collect(),
    })
}

/// `(r, γ_r)` for `r = 0..J`.
pub fn sigma_tail_series(basis: &PodBasis) -> PlotSeries {
    PlotSeries {
        kind: PlotKind::SigmaTail,
        x_label: "r",
        y_label: "gamma",
        points: (0..=basis.rank())
            .map(|r| (r as f64, basis.gamma(r)))
            .collect(),
    }
}

/// `(r, max_n ‖u^n − P_X^r u^n‖)` in the norm of `measure`.
pub fn error_vs_r_series(
    basis: &PodBasis,
    traj: &Trajectory,
    measure: &HilbertSpace,
) -> Result<PlotSeries> {
    let points = projection_error_profile(basis, traj, measure)?
        .into_iter()
        .enumerate()
        .map(|(r, e)| (r as f64, e.max))
        .collect();
    Ok(PlotSeries {
        kind: PlotKind::ErrorVsR,
        x_label: "r",
        y_label: "max_error",
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::FnSampler;
    use crate::pod::{pod, SnapshotOptions, DEFAULT_RANK_TOL};
    use crate::random::{random_trajectory, trial_rng, RandomSpec};
    use nalgebra::DVector;
    use serde_json::json;
    use std::f64::consts::PI;

    #[test]
    fn envelope_validates() {
        let env = Envelope::new(
            ReportKind::Sweep,
            7,
            json!({"table": "t", "rows": [], "pass": true}),
        )
        .with_input("snapshots", sha256_hex(b"abc"));
        let v = serde_json::to_value(&env).unwrap();
        validate_report(ReportKind::Sweep, &v).unwrap();
        assert_eq!(
            v["inputs"]["snapshots"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(validate_report(ReportKind::Bounds, &v).is_err());
        let bad = Envelope::new(
            ReportKind::Sweep,
            7,
            json!({"table": "t", "rows": 3, "pass": true}),
        );
        assert!(validate_report(ReportKind::Sweep, &serde_json::to_value(&bad).unwrap()).is_err());
        let bad = Envelope::new(ReportKind::Sweep, 7, json!({"table": "t", "rows": []}))
            .with_input("x", "zz".into());
        assert!(validate_report(ReportKind::Sweep, &serde_json::to_value(&bad).unwrap()).is_err());
    }

    #[test]
    fn identity_mode_norms_are_one() {
        let traj = random_trajectory(&mut trial_rng(1, 0), &RandomSpec::new(5, 7), None).unwrap();
        let basis = pod(
            &traj,
            traj.space(),
            SnapshotOptions::default(),
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        let s = mode_norm_series(&basis, traj.space()).unwrap();
        assert_eq!(s.points.len(), basis.rank());
        assert!(s.points.iter().all(|(_, y)| (y - 1.0).abs() < 1e-12));
        let tail = sigma_tail_series(&basis);
        assert!(tail.points.windows(2).all(|w| w[1].1 < w[0].1));
        assert_eq!(tail.points.last().unwrap().1, 0.0);
        let err = error_vs_r_series(&basis, &traj, traj.space()).unwrap();
        assert!(err.points.last().unwrap().1 < 1e-12);
    }

    #[test]
    fn deriv_norms_of_a_sine() {
        let period = 2.0;
        let w = 2.0 * PI / period;
        let e = DVector::from_vec(vec![0.6, 0.8]);
        let f = FnSampler::new(2, 3, move |t, k| {
            Ok(&e * (w.powi(k as i32) * (w * t + k as f64 * PI / 2.0).sin()))
        });
        let grid = TimeGrid::new(period, 20).unwrap();
        let s = deriv_norm_series(&f, &HilbertSpace::identity(2), &grid, 1).unwrap();
        for (t, y) in &s.points {
            assert!((y - w * (w * t).cos().abs()).abs() < 1e-8);
        }
        let csv = s.to_csv();
        assert!(csv.starts_with("t,norm\n"));
        assert_eq!(csv.lines().count(), 22);
    }

    #[test]
    fn directory_digest_is_order_stable() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b"), b"2").unwrap();
        fs::write(dir.path().join("a"), b"1").unwrap();
        let d1 = digest_path(dir.path()).unwrap();
        let d2 = digest_path(dir.path()).unwrap();
        assert_eq!(d1, d2);
        fs::write(dir.path().join("a"), b"3").unwrap();
        assert_ne!(d1, digest_path(dir.path()).unwrap());
    }
}
