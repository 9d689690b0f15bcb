//! File formats: trajectory / map / velocity CSVs and detector image files.
//!
//! Numbers are serialized in scientific notation with 17 significant digits so
//! every write-read round trip is lossless; missing values are empty fields.
//! All writes go through a temp-file-then-rename so readers never observe a
//! partial file.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::state::Outcome;
use crate::trajectory::{Trajectory, VelocityChangeMap};
use crate::weakmeas::{DetectorImage, WINDOW_WIDTH};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path} line {line}: {reason}")]
    Format {
        path: String,
        line: usize,
        reason: String,
    },
}

/// Format with 17 significant digits; round-trips f64 exactly.
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File { path: path.display().to_string(), source }
}

fn format_err(path: &Path, line: usize, reason: impl Into<String>) -> IoError {
    IoError::Format {
        path: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

/// Whole-file atomic write: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(|e| file_err(path, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| file_err(path, e))?;
    tmp.persist(path)
        .map_err(|e| file_err(path, e.error))?;
    Ok(())
}

pub const TRAJECTORY_HEADER: &str = "trajectory_id,z_m,x_m,branch_flag,theta_deg,outcome";
pub const MAP_HEADER: &str = "x_m,z_m,dv_over_c";
pub const VELOCITY_HEADER: &str = "x_m,z_m,v_over_c";

/// One CSV row of a trajectory table.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub trajectory_id: u64,
    pub z_m: f64,
    pub x_m: f64,
    /// 1 once the projected (steered) field governs the step, 0 before
    pub branch_flag: u8,
    pub theta_deg: Option<f64>,
    pub outcome: Option<Outcome>,
}

/// Flatten traced trajectories into table rows, ids assigned in order.
pub fn trajectory_rows(trajectories: &[Trajectory]) -> Vec<TrajectoryRow> {
    let mut rows = Vec::new();
    for (id, t) in trajectories.iter().enumerate() {
        for &(x, z) in &t.points {
            let steered = t.branch_z.is_some_and(|zs| z >= zs - 1e-12);
            rows.push(TrajectoryRow {
                trajectory_id: id as u64,
                z_m: z,
                x_m: x,
                branch_flag: u8::from(steered),
                theta_deg: t.outcome_label.map(|l| l.theta.to_degrees()),
                outcome: t.outcome_label.map(|l| l.outcome),
            });
        }
    }
    rows
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for r in rows {
        let theta = r.theta_deg.map(fmt_g17).unwrap_or_default();
        let outcome = r.outcome.map(|o| o.label()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.trajectory_id,
            fmt_g17(r.z_m),
            fmt_g17(r.x_m),
            r.branch_flag,
            theta,
            outcome
        ));
    }
    out
}

pub fn write_trajectories(path: &Path, rows: &[TrajectoryRow]) -> Result<(), IoError> {
    write_atomic(path, &trajectory_csv(rows))
}

pub fn read_trajectories(path: &Path) -> Result<Vec<TrajectoryRow>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TRAJECTORY_HEADER => {}
        _ => return Err(format_err(path, 1, "bad or missing trajectory header")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(format_err(path, idx + 1, "expected 6 fields"));
        }
        let parse = |s: &str, what: &str| -> Result<f64, IoError> {
            s.parse()
                .map_err(|e| format_err(path, idx + 1, format!("{what}: {e}")))
        };
        rows.push(TrajectoryRow {
            trajectory_id: fields[0]
                .parse()
                .map_err(|e| format_err(path, idx + 1, format!("trajectory_id: {e}")))?,
            z_m: parse(fields[1], "z_m")?,
            x_m: parse(fields[2], "x_m")?,
            branch_flag: fields[3]
                .parse()
                .map_err(|e| format_err(path, idx + 1, format!("branch_flag: {e}")))?,
            theta_deg: if fields[4].is_empty() {
                None
            } else {
                Some(parse(fields[4], "theta_deg")?)
            },
            outcome: if fields[5].is_empty() {
                None
            } else {
                Some(
                    fields[5]
                        .parse()
                        .map_err(|e| format_err(path, idx + 1, e))?,
                )
            },
        });
    }
    Ok(rows)
}

pub fn map_csv(map: &VelocityChangeMap) -> String {
    let mut out = String::from(MAP_HEADER);
    out.push('\n');
    for (iz, &z) in map.zs.iter().enumerate() {
        for (ix, &x) in map.xs.iter().enumerate() {
            let dv = map.get(ix, iz).map(fmt_g17).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", fmt_g17(x), fmt_g17(z), dv));
        }
    }
    out
}

pub fn write_map(path: &Path, map: &VelocityChangeMap) -> Result<(), IoError> {
    write_atomic(path, &map_csv(map))
}

/// Generic (x, z, value) triples with optional values; shared by map and
/// velocity CSV readers.
pub fn read_xz_values(
    path: &Path,
    expected_header: &str,
) -> Result<Vec<(f64, f64, Option<f64>)>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == expected_header => {}
        _ => {
            return Err(format_err(
                path,
                1,
                format!("bad or missing header, expected {expected_header:?}"),
            ))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(format_err(path, idx + 1, "expected 3 fields"));
        }
        let parse = |s: &str| -> Result<f64, IoError> {
            s.parse()
                .map_err(|e| format_err(path, idx + 1, format!("{e}")))
        };
        let value = if fields[2].is_empty() {
            None
        } else {
            Some(parse(fields[2])?)
        };
        rows.push((parse(fields[0])?, parse(fields[1])?, value));
    }
    Ok(rows)
}

/// Velocity samples (x, z, v/c) with missing values for nodes.
pub fn velocity_csv(rows: &[(f64, f64, Option<f64>)]) -> String {
    let mut out = String::from(VELOCITY_HEADER);
    out.push('\n');
    for &(x, z, v) in rows {
        let v = v.map(fmt_g17).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", fmt_g17(x), fmt_g17(z), v));
    }
    out
}

pub fn write_velocities(path: &Path, rows: &[(f64, f64, Option<f64>)]) -> Result<(), IoError> {
    write_atomic(path, &velocity_csv(rows))
}

/// Detector image file: five header lines (`key value`), then the 321 counts
/// whitespace-separated. Bit-exact round trip.
pub fn detector_image_text(image: &DetectorImage) -> String {
    let mut out = String::new();
    out.push_str(&format!("plane_z {}\n", fmt_g17(image.plane_z)));
    out.push_str(&format!("pixel_pitch_mm {}\n", fmt_g17(image.pixel_pitch_mm)));
    out.push_str(&format!("beta {}\n", fmt_g17(image.magnification_beta)));
    out.push_str(&format!("center_offset {}\n", fmt_g17(image.center_offset)));
    out.push_str(&format!("seed {}\n", image.seed));
    let counts: Vec<String> = image.counts.iter().map(|c| c.to_string()).collect();
    out.push_str(&counts.join(" "));
    out.push('\n');
    out
}

pub fn write_detector_image(path: &Path, image: &DetectorImage) -> Result<(), IoError> {
    write_atomic(path, &detector_image_text(image))
}

pub fn read_detector_image(path: &Path) -> Result<DetectorImage, IoError> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    let mut lines = text.lines().enumerate();
    let mut header = |key: &str| -> Result<String, IoError> {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| format_err(path, 0, "truncated header"))?;
        let (k, v) = line
            .split_once(' ')
            .ok_or_else(|| format_err(path, idx + 1, "expected `key value`"))?;
        if k != key {
            return Err(format_err(
                path,
                idx + 1,
                format!("expected header key {key:?}, got {k:?}"),
            ));
        }
        Ok(v.to_string())
    };
    let parse_f = |v: String, line: usize| -> Result<f64, IoError> {
        v.parse().map_err(|e| format_err(path, line, format!("{e}")))
    };
    let plane_z = parse_f(header("plane_z")?, 1)?;
    let pixel_pitch_mm = parse_f(header("pixel_pitch_mm")?, 2)?;
    let magnification_beta = parse_f(header("beta")?, 3)?;
    let center_offset = parse_f(header("center_offset")?, 4)?;
    let seed: u64 = header("seed")?
        .parse()
        .map_err(|e| format_err(path, 5, format!("{e}")))?;
    let mut counts = Vec::with_capacity(WINDOW_WIDTH);
    for (idx, line) in lines {
        for token in line.split_whitespace() {
            counts.push(
                token
                    .parse()
                    .map_err(|e| format_err(path, idx + 1, format!("{e}")))?,
            );
        }
    }
    if counts.len() != WINDOW_WIDTH {
        return Err(format_err(
            path,
            0,
            format!("expected {WINDOW_WIDTH} counts, got {}", counts.len()),
        ));
    }
    Ok(DetectorImage {
        counts,
        pixel_pitch_mm,
        magnification_beta,
        center_offset,
        plane_z,
        seed,
    })
}
