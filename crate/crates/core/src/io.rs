//! File formats: field JSON, energy-trace CSV and per-node diagnostics CSV.
//!
//! Numbers are written in shortest round-trip form, so `f64` values survive a
//! write/read cycle bit for bit.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::domain::{Field, Grid};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point};
use crate::scalar::Real;
use crate::solver::{SolveReport, Stage};

/// On-disk field: `{"manifold": spec, "grid": spec, "values": [[..], ..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldFile {
    pub manifold: String,
    pub grid: String,
    pub values: Vec<Vec<f64>>,
}

impl FieldFile {
    pub fn new<T: Real>(m: &Manifold<T>, grid: &Grid<T>, field: &Field<T>) -> Self {
        Self {
            manifold: m.to_string(),
            grid: grid.to_string(),
            values: field.values.iter().map(|p| p.coords.iter().map(|x| x.f64()).collect()).collect(),
        }
    }

    /// Parses the specs and checks every value against the manifold and grid.
    pub fn decode<T: Real>(&self) -> Result<(Manifold<T>, Grid<T>, Field<T>)> {
        let m: Manifold<T> = self.manifold.parse()?;
        let grid: Grid<T> = self.grid.parse()?;
        let field =
            Field::new(self.values.iter().map(|v| Point::new(v.iter().map(|&x| T::lit(x)).collect())).collect());
        field.validate(&m, &grid)?;
        Ok((m, grid, field))
    }
}

pub fn field_to_json<T: Real>(m: &Manifold<T>, grid: &Grid<T>, field: &Field<T>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&FieldFile::new(m, grid, field))? + "\n")
}

pub fn field_from_json<T: Real>(s: &str) -> Result<(Manifold<T>, Grid<T>, Field<T>)> {
    let file: FieldFile = serde_json::from_str(s).map_err(|e| Error::Parse(format!("field file: {e}")))?;
    file.decode()
}

pub fn schedule_from_json(s: &str) -> Result<Vec<Stage<f64>>> {
    serde_json::from_str(s).map_err(|e| Error::Parse(format!("schedule: {e}")))
}

/// Energy traces of consecutive solves in one table, rows numbered
/// continuously. Every stage contributes its initial evaluation too.
pub fn trace_csv<T: Real>(reports: &[SolveReport<T>]) -> String {
    let mut out = String::from("iter,tv,fidelity,dirichlet,total\n");
    let mut iter = 0usize;
    for r in reports {
        for e in &r.energy_trace {
            let _ = writeln!(out, "{iter},{},{},{},{}", e.tv.f64(), e.fidelity.f64(), e.dirichlet.f64(), e.total.f64());
            iter += 1;
        }
    }
    out
}

/// `node,x1,x2,value0,...` with the domain position of every node.
pub fn node_csv<T: Real>(grid: &Grid<T>, field: &Field<T>) -> Result<String> {
    if field.len() != grid.len() {
        return Err(Error::GridMismatch(format!("field has {} values, grid has {} nodes", field.len(), grid.len())));
    }
    let width = field.values.first().map_or(0, |p| p.coords.len());
    let mut out = String::from("node,x1,x2");
    for k in 0..width {
        let _ = write!(out, ",value{k}");
    }
    out.push('\n');
    for (i, p) in field.values.iter().enumerate() {
        let [x1, x2] = grid.position(i);
        let _ = write!(out, "{i},{},{}", x1.f64(), x2.f64());
        for c in &p.coords {
            let _ = write!(out, ",{}", c.f64());
        }
        out.push('\n');
    }
    Ok(out)
}
