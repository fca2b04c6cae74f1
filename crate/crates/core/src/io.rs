//! CSV and JSON files exchanged between commands and with plotting scripts.
//! Every CSV has a one-line header; readers check it before parsing rows.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::{CrooksPoint, ThermoReport};
use crate::ensemble::{Histogram, WorkSample};
use crate::error::{Error, Result};
use crate::model::Direction;
use crate::sde::Trajectory;

pub const WORK_SAMPLES_HEADER: &[&str] = &["traj_id", "direction", "W"];
pub const TRAJECTORIES_HEADER: &[&str] = &["traj_id", "direction", "t", "lambda", "x", "work"];
pub const HISTOGRAM_HEADER: &[&str] = &["direction", "bin_lo", "bin_hi", "count", "density"];
pub const CROOKS_HEADER: &[&str] = &["W", "log_ratio", "weight"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct WorkRow {
    traj_id: u64,
    direction: Direction,
    #[serde(rename = "W")]
    w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub traj_id: u64,
    pub direction: Direction,
    pub t: f64,
    pub lambda: f64,
    pub x: f64,
    pub work: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub direction: Direction,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: u64,
    pub density: f64,
}

/// Writes `rows` under a header taken from the row type's field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows after checking the header matches `expected` column by column.
pub fn read_csv<T: DeserializeOwned>(path: &Path, expected: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    for (i, want) in expected.iter().enumerate() {
        match header.get(i) {
            Some(got) if got.trim() == *want => {}
            Some(got) => {
                return Err(Error::Schema {
                    path: path.to_path_buf(),
                    detail: format!("column {} is `{got}`, expected `{want}`", i + 1),
                })
            }
            None => {
                return Err(Error::Schema {
                    path: path.to_path_buf(),
                    detail: format!("missing column `{want}`"),
                })
            }
        }
    }
    if header.len() > expected.len() {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            detail: format!("unexpected column `{}`", &header[expected.len()]),
        });
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Schema {
                path: path.to_path_buf(),
                detail: format!("row {}: {e}", i + 2),
            })
        })
        .collect()
}

pub fn write_work_samples(path: &Path, samples: impl IntoIterator<Item = WorkSample>) -> Result<()> {
    write_csv(
        path,
        samples.into_iter().map(|s| WorkRow {
            traj_id: s.traj_id,
            direction: s.direction,
            w: s.work,
        }),
    )
}

pub fn read_work_samples(path: &Path) -> Result<Vec<WorkSample>> {
    let rows: Vec<WorkRow> = read_csv(path, WORK_SAMPLES_HEADER)?;
    Ok(rows
        .into_iter()
        .map(|r| WorkSample {
            traj_id: r.traj_id,
            direction: r.direction,
            work: r.w,
        })
        .collect())
}

pub fn trajectory_rows(trajectory: &Trajectory) -> impl Iterator<Item = TrajectoryRow> + '_ {
    trajectory
        .samples
        .iter()
        .zip(&trajectory.lambda)
        .map(|(s, &lambda)| TrajectoryRow {
            traj_id: trajectory.stream_id,
            direction: trajectory.direction,
            t: s.t,
            lambda,
            x: s.x,
            work: s.work,
        })
}

pub fn write_trajectories(path: &Path, trajectories: &[Trajectory]) -> Result<()> {
    write_csv(path, trajectories.iter().flat_map(trajectory_rows))
}

pub fn read_trajectories(path: &Path) -> Result<Vec<TrajectoryRow>> {
    read_csv(path, TRAJECTORIES_HEADER)
}

pub fn histogram_rows(direction: Direction, h: &Histogram) -> impl Iterator<Item = HistogramRow> + '_ {
    (0..h.n_bins()).map(move |i| HistogramRow {
        direction,
        bin_lo: h.edges[i],
        bin_hi: h.edges[i + 1],
        count: h.counts[i],
        density: h.density[i],
    })
}

pub fn write_histograms(path: &Path, histograms: &[(Direction, &Histogram)]) -> Result<()> {
    write_csv(path, histograms.iter().flat_map(|(d, h)| histogram_rows(*d, h)))
}

pub fn read_histograms(path: &Path) -> Result<Vec<HistogramRow>> {
    read_csv(path, HISTOGRAM_HEADER)
}

pub fn write_crooks_points(path: &Path, points: &[CrooksPoint]) -> Result<()> {
    write_csv(path, points.iter().copied())
}

pub fn read_crooks_points(path: &Path) -> Result<Vec<CrooksPoint>> {
    read_csv(path, CROOKS_HEADER)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_report(path: &Path, report: &ThermoReport) -> Result<()> {
    write_json(path, report)
}

pub fn read_report(path: &Path) -> Result<ThermoReport> {
    let file = File::open(path)?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn work_samples_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("work_samples.csv");
        let samples = vec![
            WorkSample { traj_id: 0, direction: Direction::Forward, work: 3.25 },
            WorkSample { traj_id: 0, direction: Direction::Backward, work: -0.1 + 0.2 },
        ];
        write_work_samples(&path, samples.clone()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("traj_id,direction,W\n0,forward,3.25\n"));
        assert_eq!(read_work_samples(&path).unwrap(), samples);
    }

    #[test]
    fn wrong_header_names_the_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "traj_id,dir,W\n0,forward,1\n").unwrap();
        let err = read_work_samples(&path).unwrap_err();
        assert!(matches!(err, Error::Schema { .. }));
        assert!(err.to_string().contains("`dir`"), "{err}");
        assert_eq!(err.exit_code(), 2);

        std::fs::write(&path, "traj_id,direction\n0,forward\n").unwrap();
        assert!(read_work_samples(&path).unwrap_err().to_string().contains("missing column `W`"));

        std::fs::write(&path, "traj_id,direction,W\n0,sideways,1\n").unwrap();
        assert!(read_work_samples(&path).unwrap_err().to_string().contains("row 2"));
    }
}
