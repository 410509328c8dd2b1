//! CSV dumps of channels and beamformers for debugging.
//!
//! Every matrix row becomes one CSV line: the index columns, then the
//! entries as interleaved `re,im` pairs in column order. Tap-domain
//! channels are written tap-major (all rows of tap 0, then tap 1, …);
//! per-subcarrier matrices are written subcarrier-major the same way.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::beamforming::BeamformerSet;
use crate::channel::{FreqChannel, TapChannel};
use crate::error::{Error, Result};
use crate::linalg::CMat;

fn write_rows<W: Write>(out: &mut W, index: usize, m: &CMat) -> io::Result<()> {
    for r in 0..m.nrows() {
        write!(out, "{index},{r}")?;
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            write!(out, ",{},{}", z.re, z.im)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn header<W: Write>(out: &mut W, index: &str, cols: usize) -> io::Result<()> {
    write!(out, "{index},row")?;
    for c in 0..cols {
        write!(out, ",re{c},im{c}")?;
    }
    writeln!(out)
}

/// Writes a stack of equally shaped matrices, indexed by `index`.
pub fn write_stack<W: Write>(mut out: W, index: &str, mats: &[CMat]) -> io::Result<()> {
    header(&mut out, index, mats.first().map_or(0, |m| m.ncols()))?;
    for (i, m) in mats.iter().enumerate() {
        write_rows(&mut out, i, m)?;
    }
    out.flush()
}

pub fn write_taps<W: Write>(out: W, taps: &TapChannel) -> io::Result<()> {
    write_stack(out, "tap", &taps.taps)
}

pub fn write_subcarriers<W: Write>(out: W, ch: &FreqChannel) -> io::Result<()> {
    write_stack(out, "subcarrier", &ch.subcarriers)
}

fn to_file(path: &Path, f: impl FnOnce(io::BufWriter<fs::File>) -> io::Result<()>) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::create(path).map_err(io)?;
    f(io::BufWriter::new(file)).map_err(io)
}

/// Writes the RF matrices (as single-entry stacks) and the per-subcarrier
/// baseband matrices of `beams` into `dir`, one file each.
pub fn dump_beamformers(dir: &Path, beams: &BeamformerSet) -> Result<()> {
    let rf = [
        ("f_rf_gnb", &beams.f_rf_gnb),
        ("f_rf_iab", &beams.f_rf_iab),
        ("w_rf_iab", &beams.w_rf_iab),
        ("w_rf_ue", &beams.w_rf_ue),
    ];
    for (name, m) in rf {
        to_file(&dir.join(format!("{name}.csv")), |w| {
            write_stack(w, "index", std::slice::from_ref(m))
        })?;
    }
    let bb = [
        ("f_bb_gnb", &beams.f_bb_gnb),
        ("f_bb_iab", &beams.f_bb_iab),
        ("w_bb_iab", &beams.w_bb_iab),
        ("w_bb_ue", &beams.w_bb_ue),
    ];
    for (name, m) in bb {
        to_file(&dir.join(format!("{name}.csv")), |w| {
            write_stack(w, "subcarrier", m)
        })?;
    }
    Ok(())
}

/// Writes tap-domain channels `(backhaul, access, si)` into `dir`.
pub fn dump_taps(dir: &Path, taps: [(&str, &TapChannel); 3]) -> Result<()> {
    for (name, t) in taps {
        to_file(&dir.join(format!("{name}_taps.csv")), |w| write_taps(w, t))?;
    }
    Ok(())
}
