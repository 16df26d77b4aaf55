//! Tab-separated output with `#` headers.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use exciton_spectra::pseudomode::LadderRung;
use exciton_spectra::{Spectrum64, Trace64};

use crate::CliError;

/// 17 significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn finish(path: &Path, result: std::io::Result<()>) -> Result<PathBuf, CliError> {
    result
        .map(|_| path.to_path_buf())
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn write_spectrum(path: &Path, spectrum: &Spectrum64) -> Result<PathBuf, CliError> {
    let mut w = create(path)?;
    let result = (|| {
        writeln!(w, "# nu A")?;
        for (nu, a) in spectrum.nu().iter().zip(spectrum.values()) {
            writeln!(w, "{}\t{}", num(*nu), num(*a))?;
        }
        w.flush()
    })();
    finish(path, result)
}

pub fn write_trace(path: &Path, trace: &Trace64) -> Result<PathBuf, CliError> {
    let mut w = create(path)?;
    let result = (|| {
        writeln!(w, "# t ReM ImM")?;
        for (t, m) in trace.times().zip(trace.samples()) {
            writeln!(w, "{}\t{}\t{}", num(t), num(m.re), num(m.im))?;
        }
        w.flush()
    })();
    finish(path, result)
}

/// Rows of `V` and overlap percent; failed points are written as `nan`.
pub fn write_overlap(path: &Path, rows: &[(f64, Option<f64>)]) -> Result<PathBuf, CliError> {
    let mut w = create(path)?;
    let result = (|| {
        writeln!(w, "# V overlap")?;
        for (v, o) in rows {
            match o {
                Some(o) => writeln!(w, "{}\t{}", num(*v), num(*o))?,
                None => writeln!(w, "{}\tnan", num(*v))?,
            }
        }
        w.flush()
    })();
    finish(path, result)
}

pub fn write_ladder(path: &Path, ladder: &[LadderRung<f64>]) -> Result<PathBuf, CliError> {
    let mut w = create(path)?;
    let result = (|| {
        writeln!(w, "# total per_mode dimension overlap_with_previous")?;
        for rung in ladder {
            let o = rung
                .overlap_with_previous
                .map_or_else(|| "nan".to_string(), num);
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                rung.caps.total, rung.caps.per_mode, rung.dimension, o
            )?;
        }
        w.flush()
    })();
    finish(path, result)
}
