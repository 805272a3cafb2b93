//! Deterministic CSV/JSON serialization of fields, distributions, and
//! trajectories.
//!
//! Every float prints through one fixed 17-significant-digit scientific
//! format and every writer emits rows in one fixed order, so identical
//! inputs produce byte-identical files.  Each CSV carries a JSON sidecar
//! (`<name>.meta.json`) describing the grid and provenance, which is enough
//! to reload or recompute the field without guessing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::numerics::{ComplexField, PhaseSpaceGrid, RealField};
use crate::states::{EPSState, WavefunctionSpec};
use crate::transforms::{DistributionKind, QuasiDistribution};

/// One float, 17 significant digits, scientific - enough to round-trip any
/// f64 and stable across runs.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

fn io_err(context: String, e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(format!("{context}: {e}")))
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| io_err(format!("creating {}", parent.display()), e))?;
    }
    // write to a sibling then rename so a failed run leaves no partial file
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| io_err(format!("writing {}", tmp.display()), e))?;
    fs::rename(&tmp, path)
        .map_err(|e| io_err(format!("renaming into {}", path.display()), e))?;
    Ok(())
}

/// Serializes any reportable value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| io_err(format!("serializing {}", path.display()), e))?;
    text.push('\n');
    write_atomic(path, &text)
}

/// Sidecar metadata written next to every field CSV.
#[derive(Debug, Clone, Serialize)]
pub struct FieldMeta {
    pub label: String,
    pub grid: PhaseSpaceGrid,
    pub columns: Vec<String>,
    /// Distribution kind and smoothing width, when the field is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<DistributionKind>,
    /// The state the field was built from, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<WavefunctionSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

fn meta_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

/// Writes `q,p,value` rows (p outer, q inner) plus the JSON sidecar.
pub fn write_real_field(path: &Path, field: &RealField, meta: FieldMeta) -> Result<()> {
    let g = field.grid;
    let mut out = String::with_capacity(g.n_p * g.n_q * 32);
    out.push_str("q,p,value\n");
    for ip in 0..g.n_p {
        let p = g.p(ip);
        for iq in 0..g.n_q {
            out.push_str(&fmt_f64(g.q(iq)));
            out.push(',');
            out.push_str(&fmt_f64(p));
            out.push(',');
            out.push_str(&fmt_f64(field.values[[ip, iq]]));
            out.push('\n');
        }
    }
    write_atomic(path, &out)?;
    write_json(&meta_path(path), &meta)
}

/// Writes `q,p,re,im` rows (p outer, q inner) plus the JSON sidecar.
pub fn write_complex_field(path: &Path, field: &ComplexField, meta: FieldMeta) -> Result<()> {
    let g = field.grid;
    let mut out = String::with_capacity(g.n_p * g.n_q * 48);
    out.push_str("q,p,re,im\n");
    for ip in 0..g.n_p {
        let p = g.p(ip);
        for iq in 0..g.n_q {
            let v = field.values[[ip, iq]];
            out.push_str(&fmt_f64(g.q(iq)));
            out.push(',');
            out.push_str(&fmt_f64(p));
            out.push(',');
            out.push_str(&fmt_f64(v.re));
            out.push(',');
            out.push_str(&fmt_f64(v.im));
            out.push('\n');
        }
    }
    write_atomic(path, &out)?;
    write_json(&meta_path(path), &meta)
}

/// Writes a sampled one-dimensional wavefunction as `x,re,im`.
pub fn write_wavefunction(
    path: &Path,
    axis_name: &str,
    axis: impl Iterator<Item = f64>,
    values: &[num_complex::Complex64],
) -> Result<()> {
    let mut out = String::with_capacity(values.len() * 40);
    out.push_str(&format!("{axis_name},re,im\n"));
    for (x, v) in axis.zip(values) {
        out.push_str(&fmt_f64(x));
        out.push(',');
        out.push_str(&fmt_f64(v.re));
        out.push(',');
        out.push_str(&fmt_f64(v.im));
        out.push('\n');
    }
    write_atomic(path, &out)
}

/// Writes the three factors of a state: `chi.csv`, `psi.csv`, `phi.csv`
/// with sidecars for the field.
pub fn write_state(dir: &Path, state: &EPSState) -> Result<()> {
    let g = state.grid;
    write_complex_field(
        &dir.join("chi.csv"),
        &state.chi,
        FieldMeta {
            label: "chi".into(),
            grid: g,
            columns: vec!["q".into(), "p".into(), "re".into(), "im".into()],
            kind: None,
            source: Some(state.spec.clone()),
            t: Some(state.t),
        },
    )?;
    write_wavefunction(&dir.join("psi.csv"), "q", (0..g.n_q).map(|i| g.q(i)), &state.psi)?;
    write_wavefunction(&dir.join("phi.csv"), "p", (0..g.n_p).map(|i| g.p(i)), &state.phi)
}

/// Writes a distribution CSV plus a sidecar recording kind, width, source
/// state, and time.
pub fn write_distribution(path: &Path, dist: &QuasiDistribution) -> Result<()> {
    write_real_field(
        path,
        &dist.field,
        FieldMeta {
            label: dist.field.label.clone(),
            grid: dist.field.grid,
            columns: vec!["q".into(), "p".into(), "value".into()],
            kind: Some(dist.kind),
            source: Some(dist.source.clone()),
            t: Some(dist.t),
        },
    )
}

/// Trajectory CSV: a `time` column then `<label>_re,<label>_im` pairs in
/// alphabetical label order, one row per recorded time.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let labels: Vec<&String> = traj.expectations.keys().collect();
    for (label, series) in &traj.expectations {
        if series.len() != traj.times.len() {
            return Err(Error::invalid(format!(
                "column {label} has {} entries for {} times",
                series.len(),
                traj.times.len()
            )));
        }
    }
    let mut out = String::new();
    out.push_str("time");
    for label in &labels {
        out.push_str(&format!(",{label}_re,{label}_im"));
    }
    out.push('\n');
    for (i, t) in traj.times.iter().enumerate() {
        out.push_str(&fmt_f64(*t));
        for label in &labels {
            let v = traj.expectations[*label][i];
            out.push(',');
            out.push_str(&fmt_f64(v[0]));
            out.push(',');
            out.push_str(&fmt_f64(v[1]));
        }
        out.push('\n');
    }
    write_atomic(path, &out)?;
    write_json(&meta_path(path), traj)
}

/// Reads back a `q,p,value` CSV written by [`write_real_field`].
pub fn read_real_field(path: &Path) -> Result<RealField> {
    let meta_text = fs::read_to_string(meta_path(path))
        .map_err(|e| io_err(format!("reading {}", meta_path(path).display()), e))?;
    let meta: serde_json::Value = serde_json::from_str(&meta_text)
        .map_err(|e| io_err(format!("parsing {}", meta_path(path).display()), e))?;
    let grid: PhaseSpaceGrid = serde_json::from_value(
        meta.get("grid").cloned().ok_or_else(|| Error::invalid("sidecar missing grid"))?,
    )
    .map_err(|e| io_err("grid in sidecar".into(), e))?;
    let label = meta.get("label").and_then(|v| v.as_str()).unwrap_or("field").to_string();
    let text = fs::read_to_string(path)
        .map_err(|e| io_err(format!("reading {}", path.display()), e))?;
    let mut values = ndarray::Array2::zeros((grid.n_p, grid.n_q));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::invalid("empty CSV"))?;
    if header != "q,p,value" {
        return Err(Error::invalid(format!("unexpected CSV header `{header}`")));
    }
    let mut count = 0usize;
    for (row, line) in lines.enumerate() {
        let mut parts = line.split(',');
        let _q = parts.next();
        let _p = parts.next();
        let v: f64 = parts
            .next()
            .ok_or_else(|| Error::invalid(format!("row {row}: missing value column")))?
            .parse()
            .map_err(|e| Error::invalid(format!("row {row}: {e}")))?;
        let ip = row / grid.n_q;
        let iq = row % grid.n_q;
        if ip >= grid.n_p {
            return Err(Error::invalid("CSV has more rows than the sidecar grid"));
        }
        values[[ip, iq]] = v;
        count += 1;
    }
    if count != grid.n_p * grid.n_q {
        return Err(Error::invalid(format!(
            "CSV has {count} rows for a {}x{} grid",
            grid.n_p, grid.n_q
        )));
    }
    RealField::new(grid, values, label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_2d;
    use crate::states::{build_eps_state, OscillatorParams};
    use crate::transforms::build_wigner;

    fn tdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn float_format_round_trips_and_is_fixed_width() {
        for &x in &[0.0, 1.0, -1.5, 1.0 / 3.0, 6.02e23, -2.5e-19] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "`{s}`");
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn real_field_round_trips_through_csv() {
        let dir = tdir();
        let spec =
            WavefunctionSpec::eigenstate(1, OscillatorParams::natural()).unwrap();
        let grid = PhaseSpaceGrid::square(8.0, 64).unwrap();
        let dist = build_wigner(&spec, grid, 0.0).unwrap();
        let path = dir.path().join("wigner.csv");
        write_distribution(&path, &dist).unwrap();
        let back = read_real_field(&path).unwrap();
        assert_eq!(back.grid, grid);
        for (a, b) in back.values.iter().zip(dist.field.values.iter()) {
            assert_eq!(a, b, "values must survive the text round trip bit-for-bit");
        }
        let mass = integrate_2d(&back).unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "reloaded mass {mass}");
    }

    #[test]
    fn identical_inputs_give_byte_identical_files() {
        let dir = tdir();
        let spec =
            WavefunctionSpec::coherent(1.0, 0.5, OscillatorParams::natural()).unwrap();
        let grid = PhaseSpaceGrid::square(8.0, 32).unwrap();
        let state = build_eps_state(&spec, grid, 0.3).unwrap();
        write_state(&dir.path().join("a"), &state).unwrap();
        write_state(&dir.path().join("b"), &state).unwrap();
        for name in ["chi.csv", "chi.meta.json", "psi.csv", "phi.csv"] {
            let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
            let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn trajectory_csv_has_time_then_sorted_labels() {
        let dir = tdir();
        let spec =
            WavefunctionSpec::eigenstate(0, OscillatorParams::natural()).unwrap();
        let cfg = crate::evolution::EvolutionConfig {
            t_final: 0.2,
            dt: 0.1,
            method: crate::evolution::EvolutionMethod::Eigenbasis,
            record_stride: 1,
        };
        let traj = crate::evolution::evolve_wavefunctions(
            &spec,
            PhaseSpaceGrid::square(8.0, 64).unwrap(),
            &cfg,
        )
        .unwrap();
        let path = dir.path().join("trajectory.csv");
        write_trajectory(&path, &traj).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "time,H_re,H_im,norm_re,norm_im,p_re,p_im,q_re,q_im");
        assert_eq!(text.lines().count(), 1 + traj.times.len());
    }

    #[test]
    fn no_partial_file_on_unwritable_target() {
        let out = write_real_field(
            Path::new("/proc/nonexistent-dir/field.csv"),
            &RealField::zeros(PhaseSpaceGrid::square(8.0, 16).unwrap(), "z"),
            FieldMeta {
                label: "z".into(),
                grid: PhaseSpaceGrid::square(8.0, 16).unwrap(),
                columns: vec!["q".into(), "p".into(), "value".into()],
                kind: None,
                source: None,
                t: None,
            },
        );
        assert!(matches!(out, Err(Error::Io(_))));
    }
}
