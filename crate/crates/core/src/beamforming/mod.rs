//! Beamforming design for the full-duplex IAB link.
//!
//! The design runs in three stages:
//!
//! 1. per-subcarrier SVD beamformers for the backhaul and access channels
//!    ([`svd_digital_design`]);
//! 2. an analog stage: for the hybrid architecture each node's wideband
//!    beamformer is packed and factored by [`greedy_hybrid`] into a
//!    frequency-flat RF matrix and per-subcarrier baseband matrices, and the
//!    precoders are renormalized to `‖F_RF F_BB[k]‖²_F = N_s`
//!    ([`design_analog`]);
//! 3. LMMSE baseband combiners at the UE and the IAB node computed on the
//!    effective channels seen through the RF stage ([`design_combiners`]).
//!
//! Stages 1 and 2 do not depend on the transmit powers or the ADC
//! resolution, so a Monte Carlo trial reuses them across a sweep.

mod ghb;
mod lmmse;

use std::fmt;
use std::str::FromStr;

use log::warn;

pub use ghb::{greedy_hybrid, pack, unpack, Codebook, HybridFactor};
pub use lmmse::{combiner_mse, lmmse_iab, lmmse_ue, Interference};

use crate::channel::{FreqChannel, LinkChannels};
use crate::error::{invalid, Error, Result};
use crate::linalg::{frobenius_sq, sorted_svd, CMat, C64};
use crate::metrics::LinkPowers;
use crate::quantization::{
    aqnm_cov_iab, aqnm_cov_iab_cascade, aqnm_cov_ue, AdcModel, AqnmOptions, SiCoupling,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Architecture {
    AllDigital,
    Hybrid,
}

impl Architecture {
    pub fn tag(self) -> &'static str {
        match self {
            Architecture::AllDigital => "digital",
            Architecture::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "digital" | "dig" | "all-digital" => Ok(Architecture::AllDigital),
            "hybrid" | "hyb" => Ok(Architecture::Hybrid),
            _ => Err(invalid(format!("unknown architecture {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Duplex {
    Full,
    Half,
}

impl Duplex {
    pub fn tag(self) -> &'static str {
        match self {
            Duplex::Full => "FD",
            Duplex::Half => "HD",
        }
    }
}

impl fmt::Display for Duplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Stream and RF-chain counts of the four nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub ns_gnb: usize,
    pub ns_iab: usize,
    pub ns_ue: usize,
    pub rf_gnb: usize,
    pub rf_iab_tx: usize,
    pub rf_iab_rx: usize,
    pub rf_ue: usize,
    /// Oversampling of the DFT codebooks used by the greedy factorization.
    pub oversampling: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            ns_gnb: 2,
            ns_iab: 2,
            ns_ue: 2,
            rf_gnb: 4,
            rf_iab_tx: 4,
            rf_iab_rx: 4,
            rf_ue: 4,
            oversampling: 4,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            (self.ns_gnb, "streams at gNB"),
            (self.ns_iab, "streams at IAB"),
            (self.ns_ue, "streams at UE"),
            (self.rf_gnb, "RF chains at gNB"),
            (self.rf_iab_tx, "RF chains at IAB TX"),
            (self.rf_iab_rx, "RF chains at IAB RX"),
            (self.rf_ue, "RF chains at UE"),
            (self.oversampling, "codebook oversampling"),
        ];
        for (v, name) in all {
            if v < 1 {
                return Err(invalid(format!("{name} must be ≥ 1")));
            }
        }
        if self.rf_gnb < self.ns_gnb
            || self.rf_iab_tx < self.ns_iab
            || self.rf_iab_rx < self.ns_iab
            || self.rf_ue < self.ns_ue
        {
            return Err(invalid(
                "each node needs at least as many RF chains as streams",
            ));
        }
        Ok(())
    }

    /// Degrees of freedom needed by the IAB combiner to null the SI.
    pub fn iab_has_dof(&self) -> bool {
        self.rf_iab_rx >= self.ns_iab + self.ns_gnb
    }
}

/// Per-subcarrier all-digital SVD beamformers plus the singular values
/// they were cut from.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalDesign {
    pub f_gnb: Vec<CMat>,
    pub w_iab: Vec<CMat>,
    pub f_iab: Vec<CMat>,
    pub w_ue: Vec<CMat>,
    pub sv_backhaul: Vec<Vec<f64>>,
    pub sv_access: Vec<Vec<f64>>,
}

pub fn svd_digital_design(
    h_b: &FreqChannel,
    h_a: &FreqChannel,
    ns_gnb: usize,
    ns_iab: usize,
    ns_ue: usize,
) -> Result<DigitalDesign> {
    if h_b.len() != h_a.len() || h_b.is_empty() {
        return Err(Error::DimensionMismatch(
            "backhaul and access need the same nonzero subcarrier count".into(),
        ));
    }
    let min_b = h_b.n_rx().min(h_b.n_tx());
    let min_a = h_a.n_rx().min(h_a.n_tx());
    if ns_gnb.max(ns_iab) > min_b || ns_iab.max(ns_ue) > min_a {
        return Err(invalid("stream count exceeds channel rank dimension"));
    }
    if h_a.n_tx() == 0 {
        return Err(invalid("empty access channel"));
    }
    let mut d = DigitalDesign {
        f_gnb: Vec::with_capacity(h_b.len()),
        w_iab: Vec::with_capacity(h_b.len()),
        f_iab: Vec::with_capacity(h_b.len()),
        w_ue: Vec::with_capacity(h_b.len()),
        sv_backhaul: Vec::with_capacity(h_b.len()),
        sv_access: Vec::with_capacity(h_b.len()),
    };
    for (hb, ha) in h_b.subcarriers.iter().zip(&h_a.subcarriers) {
        let sb = sorted_svd(hb)?;
        let sa = sorted_svd(ha)?;
        d.f_gnb.push(sb.v.columns(0, ns_gnb).into_owned());
        d.w_iab.push(sb.u.columns(0, ns_iab).into_owned());
        d.f_iab.push(sa.v.columns(0, ns_iab).into_owned());
        d.w_ue.push(sa.u.columns(0, ns_ue).into_owned());
        d.sv_backhaul.push(sb.singular_values);
        d.sv_access.push(sa.singular_values);
    }
    Ok(d)
}

/// Codebooks for each array size in the link.
#[derive(Debug, Clone)]
pub struct Codebooks {
    pub gnb: Codebook,
    pub iab_tx: Codebook,
    pub iab_rx: Codebook,
    pub ue: Codebook,
}

impl Codebooks {
    pub fn dft(
        n_gnb: usize,
        n_iab_tx: usize,
        n_iab_rx: usize,
        n_ue: usize,
        oversampling: usize,
    ) -> Result<Self> {
        Ok(Codebooks {
            gnb: Codebook::dft(n_gnb, oversampling)?,
            iab_tx: Codebook::dft(n_iab_tx, oversampling)?,
            iab_rx: Codebook::dft(n_iab_rx, oversampling)?,
            ue: Codebook::dft(n_ue, oversampling)?,
        })
    }
}

/// RF matrices and normalized baseband precoders; combiner basebands are
/// added by [`design_combiners`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogDesign {
    pub architecture: Architecture,
    pub f_rf_gnb: CMat,
    pub f_rf_iab: CMat,
    pub w_rf_iab: CMat,
    pub w_rf_ue: CMat,
    pub f_bb_gnb: Vec<CMat>,
    pub f_bb_iab: Vec<CMat>,
}

fn normalize_precoders(rf: &CMat, bb: Vec<CMat>, n_s: usize) -> Vec<CMat> {
    bb.into_iter()
        .map(|b| {
            let p = frobenius_sq(&(rf * &b));
            if p > 0.0 {
                b * C64::new((n_s as f64 / p).sqrt(), 0.0)
            } else {
                b
            }
        })
        .collect()
}

fn factor(per_k: &[CMat], n_rf: usize, codebook: &Codebook) -> Result<(CMat, Vec<CMat>)> {
    let packed = pack(per_k)?;
    let f = greedy_hybrid(&packed, n_rf, codebook)?;
    let bb = unpack(&f.baseband, per_k.len())?;
    Ok((f.rf, bb))
}

pub fn design_analog(
    digital: &DigitalDesign,
    architecture: Architecture,
    cfg: &LinkConfig,
    codebooks: &Codebooks,
) -> Result<AnalogDesign> {
    cfg.validate()?;
    match architecture {
        Architecture::AllDigital => {
            let eye = |n: usize| CMat::identity(n, n);
            let n_gnb = digital.f_gnb[0].nrows();
            let n_iab_tx = digital.f_iab[0].nrows();
            Ok(AnalogDesign {
                architecture,
                f_rf_gnb: eye(n_gnb),
                f_rf_iab: eye(n_iab_tx),
                w_rf_iab: eye(digital.w_iab[0].nrows()),
                w_rf_ue: eye(digital.w_ue[0].nrows()),
                f_bb_gnb: normalize_precoders(&eye(n_gnb), digital.f_gnb.clone(), cfg.ns_gnb),
                f_bb_iab: normalize_precoders(&eye(n_iab_tx), digital.f_iab.clone(), cfg.ns_iab),
            })
        }
        Architecture::Hybrid => {
            let (f_rf_gnb, f_bb_gnb) = factor(&digital.f_gnb, cfg.rf_gnb, &codebooks.gnb)?;
            let (w_rf_ue, _) = factor(&digital.w_ue, cfg.rf_ue, &codebooks.ue)?;
            let (w_rf_iab, _) = factor(&digital.w_iab, cfg.rf_iab_rx, &codebooks.iab_rx)?;
            let (f_rf_iab, f_bb_iab) = factor(&digital.f_iab, cfg.rf_iab_tx, &codebooks.iab_tx)?;
            let f_bb_gnb = normalize_precoders(&f_rf_gnb, f_bb_gnb, cfg.ns_gnb);
            let f_bb_iab = normalize_precoders(&f_rf_iab, f_bb_iab, cfg.ns_iab);
            Ok(AnalogDesign {
                architecture,
                f_rf_gnb,
                f_rf_iab,
                w_rf_iab,
                w_rf_ue,
                f_bb_gnb,
                f_bb_iab,
            })
        }
    }
}

/// Channels seen by the baseband through the analog stage:
/// `H̄ = W_RF^H·H·F_RF·F_BB` for the backhaul, access and SI links, plus
/// the RF combiner Gram matrices `W_RF^H W_RF`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels {
    pub backhaul: Vec<CMat>,
    pub access: Vec<CMat>,
    pub si: Vec<CMat>,
    pub gram_iab: CMat,
    pub gram_ue: CMat,
}

fn through(w_rf: &CMat, h: &CMat, f: &CMat, identity_rf: bool) -> CMat {
    let hf = h * f;
    if identity_rf {
        hf
    } else {
        w_rf.adjoint() * hf
    }
}

impl EffectiveChannels {
    pub fn new(analog: &AnalogDesign, channels: &LinkChannels) -> Result<Self> {
        channels.validate()?;
        let k = channels.backhaul.len();
        if analog.f_bb_gnb.len() != k || analog.f_bb_iab.len() != k {
            return Err(Error::DimensionMismatch(
                "beamformers and channels differ in subcarrier count".into(),
            ));
        }
        let digital = analog.architecture == Architecture::AllDigital;
        let f_gnb: Vec<CMat> = analog
            .f_bb_gnb
            .iter()
            .map(|b| &analog.f_rf_gnb * b)
            .collect();
        let f_iab: Vec<CMat> = analog
            .f_bb_iab
            .iter()
            .map(|b| &analog.f_rf_iab * b)
            .collect();
        let mut eff = EffectiveChannels {
            backhaul: Vec::with_capacity(k),
            access: Vec::with_capacity(k),
            si: Vec::with_capacity(k),
            gram_iab: analog.w_rf_iab.adjoint() * &analog.w_rf_iab,
            gram_ue: analog.w_rf_ue.adjoint() * &analog.w_rf_ue,
        };
        for i in 0..k {
            eff.backhaul.push(through(
                &analog.w_rf_iab,
                &channels.backhaul.subcarriers[i],
                &f_gnb[i],
                digital,
            ));
            eff.access.push(through(
                &analog.w_rf_ue,
                &channels.access.subcarriers[i],
                &f_iab[i],
                digital,
            ));
            eff.si.push(through(
                &analog.w_rf_iab,
                &channels.si.subcarriers[i],
                &f_iab[i],
                digital,
            ));
        }
        Ok(eff)
    }
}

/// AQNM covariances at the UE and the IAB node per subcarrier. With
/// half duplex the SI-coupled term is dropped.
pub fn aqnm_covariances(
    eff: &EffectiveChannels,
    powers: &LinkPowers,
    adc_iab: &AdcModel,
    adc_ue: &AdcModel,
    duplex: Duplex,
    options: &AqnmOptions,
) -> Result<(Vec<CMat>, Vec<CMat>)> {
    let k = eff.backhaul.len();
    let rho_s = match duplex {
        Duplex::Full => powers.rho_s,
        Duplex::Half => 0.0,
    };
    let mut r_iab = Vec::with_capacity(k);
    let mut r_ue = Vec::with_capacity(k);
    for i in 0..k {
        let scale_a = options.power_scale(k, eff.access[i].ncols());
        let scale_b = options.power_scale(k, eff.backhaul[i].ncols());
        let scale_s = options.power_scale(k, eff.si[i].ncols());
        r_ue.push(aqnm_cov_ue(
            &eff.access[i],
            powers.rho_a * scale_a,
            adc_ue.alpha,
        )?);
        r_iab.push(match options.si_coupling {
            SiCoupling::Cascade => aqnm_cov_iab_cascade(
                &eff.backhaul[i],
                &eff.si[i],
                powers.rho_b * scale_b,
                rho_s * scale_s,
                adc_iab.alpha,
            )?,
            SiCoupling::AccessGram => aqnm_cov_iab(
                &eff.backhaul[i],
                &eff.si[i],
                &eff.access[i],
                powers.rho_b * scale_b,
                rho_s * scale_s,
                adc_iab.alpha,
            )?,
        });
    }
    Ok((r_iab, r_ue))
}

/// Baseband combiners `(W_BB_IAB[k], W_BB_UE[k])`.
#[allow(clippy::too_many_arguments)]
pub fn design_combiners(
    eff: &EffectiveChannels,
    r_q_iab: &[CMat],
    r_q_ue: &[CMat],
    powers: &LinkPowers,
    adc_iab: &AdcModel,
    adc_ue: &AdcModel,
    duplex: Duplex,
    cfg: &LinkConfig,
) -> Result<(Vec<CMat>, Vec<CMat>)> {
    let n_rf_iab = eff.gram_iab.nrows();
    let n_rf_ue = eff.gram_ue.nrows();
    let sir = match duplex {
        Duplex::Full => powers.sir(),
        Duplex::Half => f64::INFINITY,
    };
    let mut w_iab = Vec::with_capacity(eff.backhaul.len());
    let mut w_ue = Vec::with_capacity(eff.backhaul.len());
    for k in 0..eff.backhaul.len() {
        w_iab.push(lmmse_iab(
            &eff.backhaul[k],
            &eff.si[k],
            sir,
            powers.snr_b(),
            adc_iab.alpha,
            n_rf_iab,
            &r_q_iab[k],
            powers.rho_b,
            cfg.ns_iab,
        )?);
        w_ue.push(lmmse_ue(
            &eff.access[k],
            powers.snr_a(),
            adc_ue.alpha,
            n_rf_ue,
            &r_q_ue[k],
            powers.rho_a,
            cfg.ns_ue,
        )?);
    }
    Ok((w_iab, w_ue))
}

/// Complete set of beamformers for one channel realization. In the
/// all-digital architecture the RF matrices are identities.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub architecture: Architecture,
    pub f_rf_gnb: CMat,
    pub f_rf_iab: CMat,
    pub w_rf_iab: CMat,
    pub w_rf_ue: CMat,
    pub f_bb_gnb: Vec<CMat>,
    pub f_bb_iab: Vec<CMat>,
    pub w_bb_iab: Vec<CMat>,
    pub w_bb_ue: Vec<CMat>,
}

impl BeamformerSet {
    pub fn from_parts(analog: AnalogDesign, w_bb_iab: Vec<CMat>, w_bb_ue: Vec<CMat>) -> Self {
        BeamformerSet {
            architecture: analog.architecture,
            f_rf_gnb: analog.f_rf_gnb,
            f_rf_iab: analog.f_rf_iab,
            w_rf_iab: analog.w_rf_iab,
            w_rf_ue: analog.w_rf_ue,
            f_bb_gnb: analog.f_bb_gnb,
            f_bb_iab: analog.f_bb_iab,
            w_bb_iab,
            w_bb_ue,
        }
    }

    pub fn analog(&self) -> AnalogDesign {
        AnalogDesign {
            architecture: self.architecture,
            f_rf_gnb: self.f_rf_gnb.clone(),
            f_rf_iab: self.f_rf_iab.clone(),
            w_rf_iab: self.w_rf_iab.clone(),
            w_rf_ue: self.w_rf_ue.clone(),
            f_bb_gnb: self.f_bb_gnb.clone(),
            f_bb_iab: self.f_bb_iab.clone(),
        }
    }
}

/// Runs the whole design: SVD, greedy hybrid factorization (hybrid only),
/// and LMMSE baseband combiners.
#[allow(clippy::too_many_arguments)]
pub fn design_all(
    channels: &LinkChannels,
    cfg: &LinkConfig,
    architecture: Architecture,
    codebooks: &Codebooks,
    powers: &LinkPowers,
    adc_iab: &AdcModel,
    adc_ue: &AdcModel,
    duplex: Duplex,
    aqnm: &AqnmOptions,
) -> Result<BeamformerSet> {
    cfg.validate()?;
    if architecture == Architecture::Hybrid && !cfg.iab_has_dof() {
        warn!(
            "IAB has {} RF chains but needs {} to cancel self-interference",
            cfg.rf_iab_rx,
            cfg.ns_iab + cfg.ns_gnb
        );
    }
    let digital = svd_digital_design(
        &channels.backhaul,
        &channels.access,
        cfg.ns_gnb,
        cfg.ns_iab,
        cfg.ns_ue,
    )?;
    let analog = design_analog(&digital, architecture, cfg, codebooks)?;
    let eff = EffectiveChannels::new(&analog, channels)?;
    let (r_iab, r_ue) = aqnm_covariances(&eff, powers, adc_iab, adc_ue, duplex, aqnm)?;
    let (w_iab, w_ue) =
        design_combiners(&eff, &r_iab, &r_ue, powers, adc_iab, adc_ue, duplex, cfg)?;
    Ok(BeamformerSet::from_parts(analog, w_iab, w_ue))
}
