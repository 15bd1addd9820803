//! Atomic artifact writers and snapshot series.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sqglab_core::dynamics::Trajectory;
use sqglab_core::{snapshot, SpectralField};

use crate::error::CliError;

/// 17 significant digits, `.` separator, no locale.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `path.partial` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = snapshot::partial_path(path);
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    res.map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

pub struct Csv {
    header: Vec<String>,
    body: String,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|s| s.as_ref().to_string()).collect(), body: String::new() }
    }

    /// Numeric row; non-finite values are refused.
    pub fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CliError::Input(format!("non-finite value in column {}", self.header[i])));
        }
        self.text_row(&values.iter().map(|&v| num(v)).collect::<Vec<_>>());
        Ok(())
    }

    pub fn text_row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let cells: Vec<&str> = cells.iter().map(|c| c.as_ref()).collect();
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = format!("{}\n{}", self.header.join(","), self.body);
        write_atomic(path, text.as_bytes())
    }
}

/// Pretty JSON; non-finite numbers become `null`.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_snapshot(path: &Path, f: &SpectralField) -> Result<(), CliError> {
    snapshot::write(path, f).map_err(|e| match e {
        sqglab_core::Error::Io(io) => CliError::io(path, io),
        other => CliError::Core(other),
    })
}

pub fn read_snapshot(path: &Path) -> Result<SpectralField, CliError> {
    snapshot::read(path).map_err(|e| match e {
        sqglab_core::Error::Io(io) => CliError::io(path, io),
        other => CliError::Input(format!("{}: {other}", path.display())),
    })
}

/// A directory of `SQGF` files plus `index.csv` with `index,t,file`.
pub struct Series {
    dir: PathBuf,
    index: Csv,
    count: usize,
    last: Option<PathBuf>,
}

impl Series {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        create_dir(dir)?;
        Ok(Self { dir: dir.to_path_buf(), index: Csv::new(&["index", "t", "file"]), count: 0, last: None })
    }

    pub fn push(&mut self, t: f64, f: &SpectralField) -> Result<(), CliError> {
        let name = format!("snap_{:06}.sqgf", self.count);
        let path = self.dir.join(&name);
        write_snapshot(&path, f)?;
        self.index.text_row(&[self.count.to_string(), num(t), name]);
        self.count += 1;
        self.last = Some(path);
        // the index always lists exactly the files that are complete
        self.index.write(&self.dir.join("index.csv"))
    }

    pub fn push_all(&mut self, tr: &Trajectory) -> Result<(), CliError> {
        for (i, f) in tr.samples.iter().enumerate() {
            self.push(tr.time(i), f)?;
        }
        Ok(())
    }

    pub fn last(&self) -> Option<PathBuf> {
        self.last.clone()
    }
}

/// Loads a series written by [`Series`]; samples must be equally spaced.
pub fn read_series(dir: &Path) -> Result<Trajectory, CliError> {
    let index = dir.join("index.csv");
    let text = fs::read_to_string(&index).map_err(|e| CliError::io(&index, e))?;
    let mut times = Vec::new();
    let mut fields = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(CliError::Input(format!("{}: malformed row {line:?}", index.display())));
        }
        let t: f64 = cells[1].parse().map_err(|_| CliError::Input(format!("{}: bad time {:?}", index.display(), cells[1])))?;
        times.push(t);
        fields.push(read_snapshot(&dir.join(cells[2]))?);
    }
    if fields.is_empty() {
        return Err(CliError::Input(format!("{}: no snapshots", index.display())));
    }
    let dt = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
            return Err(CliError::Input(format!("{}: samples are not equally spaced", index.display())));
        }
    }
    Trajectory::new(times[0], dt, fields).map_err(CliError::Core)
}
