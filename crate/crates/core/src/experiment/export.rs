//! CSV time series and JSON summaries.
//!
//! Floats are written in Rust's shortest round-trip form, so a written file
//! parses back to the identical values and repeated runs give identical
//! bytes.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::scenario::{Scenario, ScenarioRun};
use crate::experiment::study::{ExperimentResult, GainCurve, SweepGrid};
use crate::grid::SimulationOutput;
use crate::pod::PodRecord;

/// Named columns of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new() -> Self {
        Self {
            header: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.header.push(name.into());
        self.columns.push(values);
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(&self.columns[i])
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        if self.columns.iter().any(|c| c.len() != self.rows()) {
            return Err(Error::Dimension("table columns differ in length".into()));
        }
        let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_error)?;
        w.write_record(&self.header).map_err(csv_error)?;
        for r in 0..self.rows() {
            w.write_record(self.columns.iter().map(|c| c[r].to_string()))
                .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path.as_ref()).map_err(csv_error)?;
        let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
        let mut columns = vec![Vec::new(); header.len()];
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_error)?;
            for (c, field) in rec.iter().enumerate() {
                let v = field
                    .parse::<f64>()
                    .map_err(|e| Error::Scenario(format!("row {}: column {}: {e}", line + 2, header[c])))?;
                columns[c].push(v);
            }
        }
        Ok(Self { header, columns })
    }
}

impl Default for Table {
    fn default() -> Self {
        Self::new()
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Scenario(format!("csv: {other:?}")),
    }
}

/// Integrator-rate signals: `t, y, u, speed_<machine>...`
pub fn series_table(out: &SimulationOutput, machines: &[String]) -> Table {
    let mut t = Table::new();
    t.push("t", out.t.clone());
    t.push("y", out.y.clone());
    t.push("u", out.u.clone());
    for (name, s) in machines.iter().zip(&out.speed) {
        t.push(format!("speed_{name}"), s.clone());
    }
    t
}

/// Controller-rate log: `t, y, mean, d, q, innovation, u`.
pub fn ticks_table(log: &[PodRecord]) -> Table {
    let mut t = Table::new();
    let col = |f: fn(&PodRecord) -> f64| log.iter().map(f).collect::<Vec<_>>();
    t.push("t", col(|r| r.t));
    t.push("y", col(|r| r.y));
    t.push("mean", col(|r| r.mean));
    t.push("d", col(|r| r.d));
    t.push("q", col(|r| r.q));
    t.push("innovation", col(|r| r.innovation));
    t.push("u", col(|r| r.u));
    t
}

/// One row per gain: cost and performance of each controller (NaN where a
/// run diverged).
pub fn gain_sweep_table(curves: &[GainCurve]) -> Table {
    let mut t = Table::new();
    if let Some(first) = curves.first() {
        t.push("gain", first.points.iter().map(|p| p.gain).collect());
    }
    for c in curves {
        let label = c.kind.label();
        t.push(format!("cost_{label}"), c.points.iter().map(|p| p.cost.unwrap_or(f64::NAN)).collect());
        t.push(
            format!("performance_{label}"),
            c.points.iter().map(|p| p.performance.unwrap_or(f64::NAN)).collect(),
        );
    }
    t
}

/// One row per grid cell (NaN where the target cost is unreachable).
pub fn residue_grid_table(grid: &SweepGrid) -> Table {
    let mut t = Table::new();
    let col = |f: &dyn Fn(&crate::experiment::study::GridCell) -> f64| grid.cells.iter().map(f).collect::<Vec<_>>();
    t.push("scale", col(&|c| c.scale));
    t.push("angle_deg", col(&|c| c.angle_deg));
    t.push("performance_baseline", col(&|c| c.baseline.unwrap_or(f64::NAN)));
    t.push("performance_cim", col(&|c| c.cim.unwrap_or(f64::NAN)));
    t.push("advantage_pct", col(&|c| c.advantage_pct.unwrap_or(f64::NAN)));
    t
}

pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// `series.csv`, `ticks.csv` (closed loop only) and `summary.json` in `dir`.
pub fn write_scenario(dir: impl AsRef<Path>, scenario: &Scenario, run: &ScenarioRun) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    series_table(&run.series, &run.machines).write_csv(dir.join("series.csv"))?;
    if run.controller.is_some() {
        ticks_table(&run.log).write_csv(dir.join("ticks.csv"))?;
    }
    write_json(dir.join("summary.json"), &run.summary(scenario))
}

/// `<stem>_series.csv` and `<stem>_ticks.csv` for one study run.
pub fn write_experiment(dir: impl AsRef<Path>, stem: &str, result: &ExperimentResult, machines: &[String]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    series_table(&result.series, machines).write_csv(dir.join(format!("{stem}_series.csv")))?;
    ticks_table(&result.log).write_csv(dir.join(format!("{stem}_ticks.csv")))
}
