//! CSV writers and readers. Every real number is written in scientific
//! notation with 17 significant digits; files are comma separated, carry a
//! header row (except field snapshots) and end with a newline.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagRecord;
use crate::error::{PnpError, Result};
use crate::grid::{Field, GridSpec};
use crate::stepper::{RunObserver, StepState};

/// 17 significant digits, e.g. `1.2345678901234567e-3`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

pub const DIAGNOSTICS_HEADER: &str = "t,step,min_p,min_n,mass_p_drift,mass_n_drift,energy,modified_energy";

pub fn diagnostics_row(r: &DiagRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        fmt_real(r.time),
        r.step,
        fmt_real(r.min_p),
        fmt_real(r.min_n),
        fmt_real(r.mass_p_drift),
        fmt_real(r.mass_n_drift),
        fmt_real(r.energy),
        fmt_opt(r.modified_energy),
    )
}

/// One row per `j` (y index), one column per `i` (x index).
pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = field.spec().n();
    for j in 0..n {
        let row: Vec<String> = (0..n).map(|i| fmt_real(field.get(i, j))).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot written by [`write_field`] onto a square grid with the
/// given domain.
pub fn read_field(path: &Path, length: f64, origin: (f64, f64)) -> Result<Field> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| PnpError::Csv(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        rows.push(row);
    }
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PnpError::Csv(format!("{}: field snapshot is not square", path.display())));
    }
    let spec = GridSpec::new(n, length, origin)?;
    Field::from_values(spec, rows.into_iter().flatten().collect())
}

pub fn snapshot_name(prefix: &str, time: f64) -> String {
    format!("{prefix}_t{time}.csv")
}

/// Streams diagnostics to `diagnostics.csv` and writes snapshot triples
/// into an output directory.
pub struct CsvObserver {
    dir: PathBuf,
    diagnostics: BufWriter<File>,
    pub records: Vec<DiagRecord>,
    pub snapshots: Vec<PathBuf>,
}

impl CsvObserver {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut diagnostics = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
        writeln!(diagnostics, "{DIAGNOSTICS_HEADER}")?;
        Ok(Self { dir: dir.to_path_buf(), diagnostics, records: Vec::new(), snapshots: Vec::new() })
    }

    pub fn finish(mut self) -> Result<(Vec<DiagRecord>, Vec<PathBuf>)> {
        self.diagnostics.flush()?;
        Ok((self.records, self.snapshots))
    }
}

impl RunObserver for CsvObserver {
    fn on_record(&mut self, record: &DiagRecord) -> Result<()> {
        writeln!(self.diagnostics, "{}", diagnostics_row(record))?;
        self.records.push(record.clone());
        Ok(())
    }

    fn on_snapshot(&mut self, requested_time: f64, state: &StepState) -> Result<()> {
        for (prefix, field) in [("p", &state.p_curr), ("n", &state.n_curr), ("phi", &state.phi_curr)] {
            let path = self.dir.join(snapshot_name(prefix, requested_time));
            write_field(&path, field)?;
            self.snapshots.push(path);
        }
        Ok(())
    }
}
