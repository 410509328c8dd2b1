//! Additive quantization noise model (AQNM) for low-resolution ADCs.
//!
//! A `b`-bit quantizer is replaced by a linear gain `α = 1 − η` plus an
//! uncorrelated Gaussian noise term whose covariance follows the ADC input
//! power.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::{gram_diag, is_finite, real_diag, sandwich_diag, CMat, C64};

/// Lloyd-Max distortion factors for 1 to 5 bits.
pub const ETA_TABLE: [f64; 5] = [0.3634, 0.1175, 0.03454, 0.009497, 0.002499];

/// ADC bit depth, or an ideal converter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Resolution {
    Bits(u32),
    Infinite,
}

impl Resolution {
    pub fn is_infinite(self) -> bool {
        matches!(self, Resolution::Infinite)
    }

    /// Bit count as a float, `inf` for the ideal converter.
    pub fn as_f64(self) -> f64 {
        match self {
            Resolution::Bits(b) => b as f64,
            Resolution::Infinite => f64::INFINITY,
        }
    }

    pub fn from_f64(v: f64) -> Result<Self> {
        if v.is_infinite() && v > 0.0 {
            Ok(Resolution::Infinite)
        } else if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
            Ok(Resolution::Bits(v as u32))
        } else {
            Err(invalid(format!(
                "bits must be a positive integer or inf, got {v}"
            )))
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Bits(b) => write!(f, "{b}"),
            Resolution::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Resolution::Infinite);
        }
        let b: u32 = s
            .parse()
            .map_err(|_| invalid(format!("bits must be a positive integer or inf, got {s:?}")))?;
        if b == 0 {
            return Err(invalid("bits must be ≥ 1"));
        }
        Ok(Resolution::Bits(b))
    }
}

/// Distortion factor `η` for a given resolution: tabulated for `b ≤ 5`,
/// `(π√3/2)·2^{−2b}` above, zero for an ideal converter.
pub fn eta_of_bits(res: Resolution) -> Result<f64> {
    match res {
        Resolution::Infinite => Ok(0.0),
        Resolution::Bits(0) => Err(invalid("bits must be ≥ 1")),
        Resolution::Bits(b) if b <= 5 => Ok(ETA_TABLE[b as usize - 1]),
        Resolution::Bits(b) => {
            Ok(std::f64::consts::PI * 3f64.sqrt() / 2.0 * 2f64.powi(-2 * b.min(600) as i32))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcModel {
    pub resolution: Resolution,
    pub eta: f64,
    pub alpha: f64,
}

impl AdcModel {
    pub fn new(resolution: Resolution) -> Result<Self> {
        let eta = eta_of_bits(resolution)?;
        Ok(AdcModel {
            resolution,
            eta,
            alpha: 1.0 - eta,
        })
    }

    pub fn ideal() -> Self {
        AdcModel {
            resolution: Resolution::Infinite,
            eta: 0.0,
            alpha: 1.0,
        }
    }
}

/// Input power that loads the quantizer in the AQNM covariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuantizerLoad {
    /// Actual received covariance with symbol power `1/(K·N_s)`, so `ρ`
    /// enters the covariance as `ρ/(K·N_s)`.
    #[default]
    Symbol,
    /// Unit-power symbols: `ρ` enters the covariance unscaled.
    Unit,
}

/// How the self-interference term of the IAB covariance is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SiCoupling {
    /// `H_SI^eff H_SI^eff*`, the SI effective channel already carrying the
    /// access precoder.
    #[default]
    Cascade,
    /// `H_SI^eff (H_a^eff* H_a^eff) H_SI^eff*`, weighting the SI by the
    /// access-link Gram matrix.
    AccessGram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AqnmOptions {
    pub load: QuantizerLoad,
    pub si_coupling: SiCoupling,
}

impl AqnmOptions {
    /// Factor applied to transmit powers before they enter a covariance.
    pub fn power_scale(&self, subcarriers: usize, streams: usize) -> f64 {
        match self.load {
            QuantizerLoad::Symbol => 1.0 / (subcarriers * streams).max(1) as f64,
            QuantizerLoad::Unit => 1.0,
        }
    }
}

impl FromStr for QuantizerLoad {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symbol" => Ok(QuantizerLoad::Symbol),
            "unit" => Ok(QuantizerLoad::Unit),
            _ => Err(invalid(format!(
                "quantizer load must be symbol or unit, got {s:?}"
            ))),
        }
    }
}

impl FromStr for SiCoupling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cascade" => Ok(SiCoupling::Cascade),
            "access-gram" => Ok(SiCoupling::AccessGram),
            _ => Err(invalid(format!(
                "SI coupling must be cascade or access-gram, got {s:?}"
            ))),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!(
            "AQNM gain must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// UE-side AQNM covariance `α(1−α)·diag(ρ·H H^H + I)`.
pub fn aqnm_cov_ue(h_eff: &CMat, rho: f64, alpha: f64) -> Result<CMat> {
    if !is_finite(h_eff) || !rho.is_finite() || !alpha.is_finite() {
        return Err(Error::NonFinite("aqnm_cov_ue"));
    }
    check_alpha(alpha)?;
    let scale = alpha * (1.0 - alpha);
    let d: Vec<f64> = gram_diag(h_eff)
        .into_iter()
        .map(|g| scale * (rho * g + 1.0))
        .collect();
    Ok(real_diag(&d))
}

fn iab_cov(backhaul: Vec<f64>, si: Vec<f64>, rho_b: f64, rho_s: f64, alpha_b: f64) -> CMat {
    let scale = alpha_b * (1.0 - alpha_b);
    let d: Vec<f64> = backhaul
        .iter()
        .zip(&si)
        .map(|(b, s)| scale * (rho_b * b + rho_s * alpha_b * alpha_b * s + 1.0))
        .collect();
    real_diag(&d)
}

fn check_iab_inputs(
    h_b_eff: &CMat,
    h_si_eff: &CMat,
    rho_b: f64,
    rho_s: f64,
    alpha_b: f64,
) -> Result<()> {
    if !is_finite(h_b_eff)
        || !is_finite(h_si_eff)
        || !rho_b.is_finite()
        || !rho_s.is_finite()
        || !alpha_b.is_finite()
    {
        return Err(Error::NonFinite("aqnm_cov_iab"));
    }
    check_alpha(alpha_b)?;
    if h_si_eff.nrows() != h_b_eff.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "SI effective channel {:?} incompatible with backhaul {:?}",
            h_si_eff.shape(),
            h_b_eff.shape()
        )));
    }
    Ok(())
}

/// IAB-side AQNM covariance
/// `α(1−α)·diag(ρ_b·H_b H_b^H + ρ_s·α²·H_SI (H_a^H H_a) H_SI^H + I)`.
///
/// The access effective channel enters through its Gram matrix so that the
/// coupling term is defined for any RF-chain count at the UE; for scalar
/// channels this coincides with `H_SI H_a H_a^* H_SI^*`.
pub fn aqnm_cov_iab(
    h_b_eff: &CMat,
    h_si_eff: &CMat,
    h_a_eff: &CMat,
    rho_b: f64,
    rho_s: f64,
    alpha_b: f64,
) -> Result<CMat> {
    check_iab_inputs(h_b_eff, h_si_eff, rho_b, rho_s, alpha_b)?;
    if !is_finite(h_a_eff) {
        return Err(Error::NonFinite("aqnm_cov_iab"));
    }
    if h_si_eff.ncols() != h_a_eff.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "SI effective channel {:?} incompatible with access {:?}",
            h_si_eff.shape(),
            h_a_eff.shape()
        )));
    }
    let backhaul = gram_diag(h_b_eff);
    let si = if rho_s == 0.0 {
        vec![0.0; backhaul.len()]
    } else {
        sandwich_diag(h_si_eff, &(h_a_eff.adjoint() * h_a_eff))
    };
    Ok(iab_cov(backhaul, si, rho_b, rho_s, alpha_b))
}

/// IAB-side AQNM covariance with the SI entering through its own effective
/// channel: `α(1−α)·diag(ρ_b·H_b H_b^H + ρ_s·α²·H_SI H_SI^H + I)`.
pub fn aqnm_cov_iab_cascade(
    h_b_eff: &CMat,
    h_si_eff: &CMat,
    rho_b: f64,
    rho_s: f64,
    alpha_b: f64,
) -> Result<CMat> {
    check_iab_inputs(h_b_eff, h_si_eff, rho_b, rho_s, alpha_b)?;
    Ok(iab_cov(
        gram_diag(h_b_eff),
        gram_diag(h_si_eff),
        rho_b,
        rho_s,
        alpha_b,
    ))
}

/// Draws a quantized observation `α·y + q` with `q ~ CN(0, diag(r_q))`.
pub fn apply_aqnm<R: Rng + ?Sized>(
    y: &[C64],
    alpha: f64,
    r_q_diag: &[f64],
    rng: &mut R,
) -> Result<Vec<C64>> {
    if y.len() != r_q_diag.len() {
        return Err(Error::DimensionMismatch(
            "signal and quantization covariance lengths differ".into(),
        ));
    }
    let half = std::f64::consts::FRAC_1_SQRT_2;
    Ok(y.iter()
        .zip(r_q_diag)
        .map(|(v, &var)| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            v * alpha + C64::new(re, im) * (half * var.max(0.0).sqrt())
        })
        .collect())
}
