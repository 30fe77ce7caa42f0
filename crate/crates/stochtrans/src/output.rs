//! CSV tables, the binary grid-function dump and the JSON metadata sidecar.

use std::io::{self, Read, Write};
use std::path::Path;

use serde_json::{json, Value};
use stochtrans_core::norms::MomentTable;
use stochtrans_core::stability::{DemoReport, StabilityRecord};
use stochtrans_core::weakform::ResidualReport;
use stochtrans_core::{Grid, GridFunction};

use crate::config::{ExperimentConfig, RawConfig};

pub const FORMAT_VERSION: u32 = 1;

/// Magic bytes opening a binary grid-function dump.
pub const GRID_MAGIC: [u8; 8] = *b"STGRIDF\0";

/// Shortest round-trip decimal, so equal values always print identically.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn from_reader(r: impl Read) -> Result<Self, csv::Error> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.iter().map(str::to_string).collect();
        let rows = rd.records().map(|r| r.map(|rec| rec.iter().map(str::to_string).collect())).collect::<Result<_, _>>()?;
        Ok(Table { header, rows })
    }

    /// Column `name` parsed as numbers; empty cells become NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j].parse().unwrap_or(f64::NAN)).collect())
    }
}

pub const RESIDUAL_HEADER: [&str; 6] = ["path_index", "t", "residual", "drift_term", "martingale_term", "laplacian_term"];
pub const MOMENT_HEADER: [&str; 6] = ["epsilon_or_n", "statistic", "value", "std_error", "n_paths", "grid_id"];
pub const STABILITY_HEADER: [&str; 8] = [
    "index",
    "input_distance",
    "l2p_distance",
    "l2p_std_error",
    "sobolev_distance",
    "sobolev_std_error",
    "ratio",
    "ratio_std_error",
];
pub const DEMO_HEADER: [&str; 3] = ["t", "stochastic_seminorm", "deterministic_seminorm"];

pub fn residual_table(reports: &ResidualReport) -> Table {
    let mut t = Table::new(&RESIDUAL_HEADER);
    for (i, r) in reports.residuals.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            format_f64(reports.t),
            format_f64(r.total()),
            format_f64(r.drift_term),
            format_f64(r.martingale_term),
            format_f64(r.laplacian_term),
        ]);
    }
    t
}

pub fn moment_table(m: &MomentTable) -> Table {
    let mut t = Table::new(&MOMENT_HEADER);
    for r in &m.rows {
        t.push(vec![
            format_f64(r.epsilon),
            r.statistic.name().to_string(),
            format_f64(r.value),
            format_f64(r.std_error),
            r.n_paths.to_string(),
            r.grid_id.clone(),
        ]);
    }
    t
}

pub fn stability_table(records: &[StabilityRecord]) -> Table {
    let opt = |x: Option<f64>| x.map(format_f64).unwrap_or_default();
    let mut t = Table::new(&STABILITY_HEADER);
    for r in records {
        t.push(vec![
            r.index.to_string(),
            format_f64(r.input_distance),
            format_f64(r.l2p_distance),
            format_f64(r.l2p_std_error),
            format_f64(r.sobolev_distance),
            format_f64(r.sobolev_std_error),
            opt(r.ratio),
            opt(r.ratio_std_error),
        ]);
    }
    t
}

pub fn demo_table(d: &DemoReport) -> Table {
    let mut t = Table::new(&DEMO_HEADER);
    for j in 0..d.times.len() {
        t.push(vec![format_f64(d.times[j]), format_f64(d.stochastic[j]), format_f64(d.deterministic[j])]);
    }
    t
}

/// Node coordinates `x0 … x{d-1}` followed by `value`.
pub fn grid_function_table(f: &GridFunction) -> Table {
    let grid = f.grid();
    let mut header: Vec<String> = (0..grid.dim()).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    let mut t = Table { header, rows: Vec::with_capacity(grid.len()) };
    for (i, v) in f.values().iter().enumerate() {
        let x = grid.point(i);
        let mut row: Vec<String> = x.as_slice().iter().map(|c| format_f64(*c)).collect();
        row.push(format_f64(*v));
        t.rows.push(row);
    }
    t
}

/// Little-endian dump: magic, format version (u32), dim (u32), half-width
/// and step (f64), node count (u64), then the node values (f64).
pub fn write_grid_function(f: &GridFunction, mut w: impl Write) -> io::Result<()> {
    let g = f.grid();
    w.write_all(&GRID_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&g.half_width().to_le_bytes())?;
    w.write_all(&g.step().to_le_bytes())?;
    w.write_all(&(g.len() as u64).to_le_bytes())?;
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_grid_function(mut r: impl Read) -> io::Result<GridFunction> {
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != GRID_MAGIC {
        return Err(bad("not a grid-function dump"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let half_width = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let step = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let grid = Grid::new(dim, half_width, step).map_err(|e| bad(&e.to_string()))?;
    if grid.len() != n {
        return Err(bad("node count does not match the grid"));
    }
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    GridFunction::new(grid, values).map_err(|e| bad(&e.to_string()))
}

pub fn metadata(
    raw: &RawConfig,
    cfg: &ExperimentConfig,
    threads: usize,
    wall_time_seconds: f64,
    files: &[String],
) -> Value {
    json!({
        "format_version": FORMAT_VERSION,
        "experiment": cfg.experiment.name(),
        "config_hash": raw.hash(),
        "config": raw.entries(),
        "resolved": {
            "dim": cfg.dim,
            "p": cfg.p(),
            "q": cfg.norms.q(),
            "T": cfg.horizon,
            "n_steps": cfg.n_steps,
            "n_paths": cfg.n_paths,
            "output_stride": cfg.output_stride,
        },
        "seed": cfg.seed,
        "grid": {
            "dim": cfg.grid.dim(),
            "L": cfg.half_width,
            "h": cfg.step,
            "nodes": cfg.grid.len(),
        },
        "threads": threads,
        "wall_time_seconds": wall_time_seconds,
        "files": files,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> io::Result<()> {
    std::fs::write(path, bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use stochtrans_core::Vector;

    #[test]
    fn binary_dump_round_trips() {
        let grid = Grid::new(2, 1.0, 0.5).unwrap();
        let f = GridFunction::sample(grid, &|x: &Vector| x[0] - 3.0 * x[1] + 0.1);
        let mut bytes = Vec::new();
        write_grid_function(&f, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 8 + 4 + 4 + 8 + 8 + 8 + 8 * grid.len());
        assert_eq!(read_grid_function(bytes.as_slice()).unwrap(), f);
        bytes[0] = b'X';
        assert!(read_grid_function(bytes.as_slice()).is_err());
    }

    #[test]
    fn grid_function_csv_has_coordinates() {
        let grid = Grid::new(1, 1.0, 0.5).unwrap();
        let f = GridFunction::sample(grid, &|x: &Vector| 2.0 * x[0]);
        let t = grid_function_table(&f);
        assert_eq!(t.header, ["x0", "value"]);
        let text = String::from_utf8(t.to_bytes()).unwrap();
        assert_eq!(text, "x0,value\n-1.0,-2.0\n-0.5,-1.0\n0.0,0.0\n0.5,1.0\n1.0,2.0\n");
        let back = Table::from_reader(text.as_bytes()).unwrap();
        assert_eq!(back.column("value").unwrap(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }
}
