//! Digital LMMSE (Wiener) combiners for quantized receivers.
//!
//! Both receivers solve
//! `W = (1/α)·(H̄H̄^H + (1/SIR)·H̄_SI H̄_SI^H + (N_RF/SNR)·I + R_q/(α²ρ))^{-1} H̄`
//! and keep the first `N_s` columns; the UE has no self-interference term.

use log::warn;

use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_solve, is_finite, CMat, C64};

/// Interference seen by the IAB receiver: its effective SI channel and the
/// signal-to-interference ratio `ρ_a/ρ_s`.
#[derive(Debug, Clone, Copy)]
pub struct Interference<'a> {
    pub h_bar_si: &'a CMat,
    pub sir: f64,
}

/// Normalized receive covariance of the LMMSE problem (unit-power
/// symbols), up to the factor `α²`.
fn receive_covariance(
    h_bar: &CMat,
    interference: Option<Interference<'_>>,
    snr: f64,
    alpha: f64,
    n_rf: usize,
    r_q: &CMat,
    rho: f64,
) -> Result<CMat> {
    let n = h_bar.nrows();
    if r_q.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "R_q is {:?}, expected {n}×{n}",
            r_q.shape()
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!(
            "AQNM gain must lie in (0, 1], got {alpha}"
        )));
    }
    if !(snr > 0.0) || !(rho > 0.0) {
        return Err(invalid("SNR and transmit power must be > 0"));
    }
    if !is_finite(h_bar) || !is_finite(r_q) {
        return Err(Error::NonFinite("lmmse"));
    }
    let mut m = h_bar * h_bar.adjoint();
    if let Some(i) = interference {
        if i.h_bar_si.nrows() != n {
            return Err(Error::DimensionMismatch(
                "SI effective channel row count differs from backhaul".into(),
            ));
        }
        if !is_finite(i.h_bar_si) {
            return Err(Error::NonFinite("lmmse"));
        }
        if i.sir.is_finite() {
            if !(i.sir > 0.0) {
                return Err(invalid("SIR must be > 0"));
            }
            m += (i.h_bar_si * i.h_bar_si.adjoint()) * C64::new(1.0 / i.sir, 0.0);
        }
    }
    let noise = n_rf as f64 / snr;
    for d in 0..n {
        m[(d, d)] += noise;
    }
    m += r_q * C64::new(1.0 / (alpha * alpha * rho), 0.0);
    Ok(m)
}

fn solve_combiner(m: &CMat, h_bar: &CMat, alpha: f64, n_s: usize, who: &str) -> Result<CMat> {
    let (x, fallback) = hermitian_solve(m, h_bar)?;
    if fallback {
        warn!("{who} LMMSE system is singular; using the pseudo-inverse");
    }
    let keep = n_s.min(x.ncols());
    Ok(x.columns(0, keep).into_owned() * C64::new(1.0 / alpha, 0.0))
}

/// Baseband LMMSE combiner at the UE.
#[allow(clippy::too_many_arguments)]
pub fn lmmse_ue(
    h_bar_a: &CMat,
    snr_a: f64,
    alpha_a: f64,
    n_rf_ue: usize,
    r_q_ue: &CMat,
    rho_a: f64,
    n_s_ue: usize,
) -> Result<CMat> {
    let m = receive_covariance(h_bar_a, None, snr_a, alpha_a, n_rf_ue, r_q_ue, rho_a)?;
    solve_combiner(&m, h_bar_a, alpha_a, n_s_ue, "UE")
}

/// Baseband LMMSE combiner at the IAB node, suppressing the
/// self-interference of its own access transmission.
#[allow(clippy::too_many_arguments)]
pub fn lmmse_iab(
    h_bar_b: &CMat,
    h_bar_si: &CMat,
    sir: f64,
    snr_b: f64,
    alpha_b: f64,
    n_rf_iab: usize,
    r_q_iab: &CMat,
    rho_b: f64,
    n_s_iab: usize,
) -> Result<CMat> {
    let m = receive_covariance(
        h_bar_b,
        Some(Interference { h_bar_si, sir }),
        snr_b,
        alpha_b,
        n_rf_iab,
        r_q_iab,
        rho_b,
    )?;
    solve_combiner(&m, h_bar_b, alpha_b, n_s_iab, "IAB")
}

/// Mean squared symbol error `E‖s − W^H ỹ‖²` under the normalized model
/// `ỹ = α(H̄s + n + i) + q` that the combiners above minimize, with unit
/// symbol power, `E[nn^H] = (N_RF/SNR)·I`, `E[ii^H] = (1/SIR)·H̄_SI H̄_SI^H`
/// and `E[qq^H] = R_q/ρ`. Only the first `w.ncols()` streams are scored.
#[allow(clippy::too_many_arguments)]
pub fn combiner_mse(
    w: &CMat,
    h_bar: &CMat,
    interference: Option<Interference<'_>>,
    snr: f64,
    alpha: f64,
    n_rf: usize,
    r_q: &CMat,
    rho: f64,
) -> Result<f64> {
    let m = receive_covariance(h_bar, interference, snr, alpha, n_rf, r_q, rho)?;
    let cov = m * C64::new(alpha * alpha, 0.0);
    let cross = h_bar.columns(0, w.ncols()) * C64::new(alpha, 0.0);
    let wh_cross = w.adjoint() * &cross;
    let quad = w.adjoint() * cov * w;
    let mut mse = 0.0;
    for i in 0..w.ncols() {
        mse += 1.0 - 2.0 * wh_cross[(i, i)].re + quad[(i, i)].re;
    }
    Ok(mse)
}
