//! Greedy hybrid factorization of wideband beamformers.
//!
//! The all-digital beamformers of every subcarrier are packed side by side
//! and projected onto `N_RF` dictionary columns by an orthogonal matching
//! pursuit: pick the codeword most correlated with the residual, refit the
//! baseband by least squares, repeat.

use crate::channel::array_response;
use crate::error::{invalid, Error, Result};
use crate::linalg::{frobenius_sq, pinv_solve, CMat};

/// Dictionary of unit-norm analog beam candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub columns: CMat,
}

impl Codebook {
    /// Oversampled DFT codebook of half-wavelength array responses with
    /// spatial frequencies `sin θ_i = −1 + 2i/M`, `M = n·oversampling`.
    /// With `oversampling = 1` the columns form a unitary basis.
    pub fn dft(n: usize, oversampling: usize) -> Result<Self> {
        if n == 0 || oversampling == 0 {
            return Err(invalid("codebook size and oversampling must be ≥ 1"));
        }
        let m = n * oversampling;
        let mut columns = CMat::zeros(n, m);
        for i in 0..m {
            let u: f64 = -1.0 + 2.0 * i as f64 / m as f64;
            columns.set_column(i, &array_response(n, u.asin(), 0.5));
        }
        Ok(Codebook { columns })
    }

    pub fn from_columns(columns: CMat) -> Result<Self> {
        for (j, c) in columns.column_iter().enumerate() {
            let n: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            if (n - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("codebook column {j} is not unit norm")));
            }
        }
        Ok(Codebook { columns })
    }

    pub fn antennas(&self) -> usize {
        self.columns.nrows()
    }

    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }
}

/// Horizontal concatenation `[X[0] X[1] … X[K−1]]`.
pub fn pack(mats: &[CMat]) -> Result<CMat> {
    let first = mats
        .first()
        .ok_or_else(|| invalid("pack needs at least one matrix"))?;
    let rows = first.nrows();
    if mats.iter().any(|m| m.nrows() != rows) {
        return Err(Error::DimensionMismatch("pack: ragged row counts".into()));
    }
    let cols: usize = mats.iter().map(|m| m.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for m in mats {
        out.columns_mut(at, m.ncols()).copy_from(m);
        at += m.ncols();
    }
    Ok(out)
}

/// Splits a packed matrix back into `k` blocks of equal width.
pub fn unpack(packed: &CMat, k: usize) -> Result<Vec<CMat>> {
    if k == 0 || packed.ncols() % k != 0 {
        return Err(Error::DimensionMismatch(format!(
            "cannot split {} columns into {k} blocks",
            packed.ncols()
        )));
    }
    let w = packed.ncols() / k;
    Ok((0..k)
        .map(|i| packed.columns(i * w, w).into_owned())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridFactor {
    /// Selected codebook columns (antennas × N_RF).
    pub rf: CMat,
    /// Least-squares baseband (N_RF × packed width).
    pub baseband: CMat,
    /// Codebook indices in selection order.
    pub selected: Vec<usize>,
}

impl HybridFactor {
    pub fn residual(&self, target: &CMat) -> f64 {
        frobenius_sq(&(target - &self.rf * &self.baseband)).sqrt()
    }
}

/// Greedy (OMP) projection of `target` onto `n_rf` codebook columns.
/// Ties go to the lowest codebook index.
pub fn greedy_hybrid(target: &CMat, n_rf: usize, codebook: &Codebook) -> Result<HybridFactor> {
    if n_rf == 0 {
        return Err(invalid("n_rf must be ≥ 1"));
    }
    if n_rf > codebook.len() {
        return Err(invalid(format!(
            "n_rf = {n_rf} exceeds codebook size {}",
            codebook.len()
        )));
    }
    if target.nrows() != codebook.antennas() {
        return Err(Error::DimensionMismatch(format!(
            "target has {} rows, codebook {} antennas",
            target.nrows(),
            codebook.antennas()
        )));
    }
    let dict_h = codebook.columns.adjoint();
    let mut residual = target.clone();
    let mut selected: Vec<usize> = Vec::with_capacity(n_rf);
    let mut rf = CMat::zeros(target.nrows(), 0);
    let mut baseband = CMat::zeros(0, target.ncols());

    for _ in 0..n_rf {
        let corr = &dict_h * &residual;
        let mut best = None::<(usize, f64)>;
        for (j, row) in corr.row_iter().enumerate() {
            if selected.contains(&j) {
                continue;
            }
            let score: f64 = row.iter().map(|z| z.norm_sqr()).sum();
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let (j, _) = best.expect("n_rf ≤ codebook size");
        selected.push(j);
        rf = CMat::from_fn(target.nrows(), selected.len(), |r, c| {
            codebook.columns[(r, selected[c])]
        });
        baseband = pinv_solve(&rf, target)?;
        residual = target - &rf * &baseband;
    }
    Ok(HybridFactor {
        rf,
        baseband,
        selected,
    })
}
