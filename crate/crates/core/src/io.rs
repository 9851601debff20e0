//! File formats: solution text files, records tables and result CSVs.
//!
//! A solution file holds `n R` on its first line followed by one `x y z` line
//! per sphere. Numbers are written with 17 significant digits so a file read
//! back reproduces the solution bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{PessError, Result};
use crate::geometry::{Layout, Solution};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PessError + '_ {
    move |source| PessError::Io { path: path.to_path_buf(), source }
}

/// Renders a solution in the text format.
pub fn format_solution(s: &Solution) -> String {
    let mut out = String::new();
    writeln!(out, "{} {:.16e}", s.n(), s.radius()).unwrap();
    for [x, y, z] in s.layout.centers() {
        writeln!(out, "{x:.16e} {y:.16e} {z:.16e}").unwrap();
    }
    out
}

pub fn write_solution(path: &Path, s: &Solution) -> Result<()> {
    fs::write(path, format_solution(s)).map_err(io_err(path))
}

/// Parses the text format. `path` is only used in error messages.
pub fn parse_solution(text: &str, path: &Path) -> Result<Solution> {
    let err = |line: usize, message: String| PessError::Parse { path: path.to_path_buf(), line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(err(1, format!("expected `n R`, found {} fields", fields.len())));
    }
    let n: usize = fields[0].parse().map_err(|e| err(1, format!("bad sphere count {:?}: {e}", fields[0])))?;
    let radius: f64 = fields[1].parse().map_err(|e| err(1, format!("bad radius {:?}: {e}", fields[1])))?;
    if n == 0 {
        return Err(err(1, "sphere count must be positive".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(err(1, format!("radius must be positive and finite, got {radius}")));
    }

    let mut coords = Vec::with_capacity(3 * n);
    for k in 0..n {
        let (line, text) = lines.next().ok_or_else(|| err(k + 2, format!("expected {n} centers, found {k}")))?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(line, format!("expected `x y z`, found {} fields", fields.len())));
        }
        for f in fields {
            let v: f64 = f.parse().map_err(|e| err(line, format!("bad coordinate {f:?}: {e}")))?;
            if !v.is_finite() {
                return Err(err(line, format!("non-finite coordinate {f:?}")));
            }
            coords.push(v);
        }
    }
    if let Some((line, _)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(err(line, format!("unexpected content after {n} centers")));
    }
    Solution::new(Layout::from_flat(coords)?, radius)
}

pub fn read_solution(path: &Path) -> Result<Solution> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_solution(&text, path)
}

/// Best-known radius per sphere count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordsTable {
    radii: BTreeMap<usize, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    n: usize,
    radius: f64,
}

impl RecordsTable {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut radii = BTreeMap::new();
        for (n, r) in pairs {
            if !(r > 0.0 && r.is_finite()) {
                return Err(PessError::InvalidArgument(format!("record for n={n} has radius {r}")));
            }
            if radii.insert(n, r).is_some() {
                return Err(PessError::InvalidArgument(format!("duplicate record for n={n}")));
            }
        }
        Ok(Self { radii })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut pairs = Vec::new();
        for row in rdr.deserialize() {
            let row: RecordRow = row?;
            pairs.push((row.n, row.radius));
        }
        Self::from_pairs(pairs)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for (&n, &radius) in &self.radii {
            w.serialize(RecordRow { n, radius })?;
        }
        w.flush().map_err(io_err(path))
    }

    pub fn get(&self, n: usize) -> Option<f64> {
        self.radii.get(&n).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.radii.iter().map(|(&n, &r)| (n, r))
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

/// One line of the run summary CSV. Missing reference data leaves the
/// corresponding fields empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub r_best: f64,
    pub r_avg: f64,
    pub delta_best: Option<f64>,
    pub delta_avg: Option<f64>,
    pub hr: f64,
    pub rr: Option<f64>,
    pub density_best: f64,
    pub time_to_best_s: f64,
    pub seed_base: u64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnmExperimentRow {
    pub n: usize,
    pub runs: usize,
    pub avg_runtime_anm_s: f64,
    pub avg_runtime_brute_s: f64,
    pub runtime_ratio: f64,
    pub avg_deferring_ratio: f64,
}

/// Appends rows to a CSV file, writing the header only when the file is new
/// or empty.
pub fn append_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes rows to a fresh CSV file with a header.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(PessError::from)).collect()
}

/// File name used for the best solution of one run.
pub fn solution_file_name(dir: &Path, n: usize, seed: u64) -> PathBuf {
    dir.join(format!("n{n:04}_seed{seed}.txt"))
}
