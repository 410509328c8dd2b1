//! Spectral efficiency, the SVD upper bound, receiver power consumption,
//! energy efficiency and outage statistics.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::beamforming::{
    aqnm_covariances, Architecture, BeamformerSet, Duplex, EffectiveChannels,
};
use crate::channel::{FreqChannel, LinkChannels};
use crate::error::{invalid, Error, Result};
use crate::linalg::{logdet_hpd, sorted_svd, CMat, C64};
use crate::quantization::{AdcModel, AqnmOptions, Resolution};

/// Transmit powers and noise variance of the link. With the default
/// `σ² = 1`, `ρ` equals the SNR in linear units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPowers {
    pub rho_a: f64,
    pub rho_b: f64,
    pub rho_s: f64,
    pub noise_var: f64,
}

impl LinkPowers {
    /// Equal access and backhaul power at `snr_db`; SI power set from
    /// `sir_db = 10·log10(ρ_a/ρ_s)`.
    pub fn from_db(snr_db: f64, sir_db: f64, noise_var: f64) -> Self {
        let rho = noise_var * 10f64.powf(snr_db / 10.0);
        LinkPowers {
            rho_a: rho,
            rho_b: rho,
            rho_s: rho / 10f64.powf(sir_db / 10.0),
            noise_var,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_a >= 0.0 && self.rho_b >= 0.0 && self.rho_s >= 0.0) {
            return Err(invalid("powers must be ≥ 0"));
        }
        if !(self.noise_var > 0.0) {
            return Err(invalid("noise variance must be > 0"));
        }
        Ok(())
    }

    pub fn snr_a(&self) -> f64 {
        self.rho_a / self.noise_var
    }

    pub fn snr_b(&self) -> f64 {
        self.rho_b / self.noise_var
    }

    pub fn sir(&self) -> f64 {
        if self.rho_s == 0.0 {
            f64::INFINITY
        } else {
            self.rho_a / self.rho_s
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Backhaul,
    Access,
}

/// Spectral efficiencies of one channel realization under one scenario.
///
/// Half-duplex link values are already scaled by their 1/2 time share, so
/// `se_sum = se_backhaul + se_access` for both duplex modes. Bounds are the
/// per-link SVD bounds and do not depend on the duplex mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub se_backhaul: f64,
    pub se_access: f64,
    pub se_sum: f64,
    pub se_bound_backhaul: f64,
    pub se_bound_access: f64,
    pub duplex: Duplex,
    pub architecture: Architecture,
    pub resolution: Resolution,
}

impl TrialResult {
    pub fn bound_sum(&self) -> f64 {
        self.se_bound_backhaul + self.se_bound_access
    }
}

/// Per-subcarrier rate `log2 det(I + C^{-1} S)` of a combined link.
#[allow(clippy::too_many_arguments)]
fn subcarrier_rate(
    h_bar: &CMat,
    w_bb: &CMat,
    gram_rf: &CMat,
    r_q: &CMat,
    si: Option<(&CMat, f64)>,
    rho: f64,
    alpha: f64,
    noise_var: f64,
    k: usize,
) -> f64 {
    let n_s = h_bar.ncols().max(1);
    let wh = w_bb.adjoint();
    let a = &wh * h_bar;
    let signal = (&a * a.adjoint()) * C64::new(rho * alpha * alpha / (k * n_s) as f64, 0.0);
    let mut noise =
        (&wh * gram_rf * w_bb) * C64::new(alpha * alpha * noise_var, 0.0) + &wh * r_q * w_bb;
    if let Some((h_bar_si, rho_s)) = si {
        if rho_s > 0.0 {
            let n_si = h_bar_si.ncols().max(1);
            let b = &wh * h_bar_si;
            noise += (&b * b.adjoint()) * C64::new(rho_s * alpha * alpha / (k * n_si) as f64, 0.0);
        }
    }
    let total = &noise + &signal;
    match (logdet_hpd(&total), logdet_hpd(&noise)) {
        (Some(t), Some(n)) => ((t - n) / LN_2).max(0.0),
        _ => {
            warn!("singular effective noise covariance; regularizing with 1e-12·I");
            let eye = CMat::identity(noise.nrows(), noise.nrows()) * C64::new(1e-12, 0.0);
            let t = logdet_hpd(&(total + &eye));
            let n = logdet_hpd(&(noise + eye));
            match (t, n) {
                (Some(t), Some(n)) => ((t - n) / LN_2).max(0.0),
                _ => 0.0,
            }
        }
    }
}

/// Link spectral efficiency from precomputed effective channels,
/// combiners and AQNM covariances of that link's receiver.
#[allow(clippy::too_many_arguments)]
pub fn link_spectral_efficiency(
    link: Link,
    eff: &EffectiveChannels,
    w_bb: &[CMat],
    r_q: &[CMat],
    powers: &LinkPowers,
    adc: &AdcModel,
    duplex: Duplex,
) -> Result<f64> {
    let k = eff.backhaul.len();
    if w_bb.len() != k || r_q.len() != k || k == 0 {
        return Err(Error::DimensionMismatch(
            "combiners, covariances and channels differ in subcarrier count".into(),
        ));
    }
    let mut acc = 0.0;
    for i in 0..k {
        acc += match link {
            Link::Access => subcarrier_rate(
                &eff.access[i],
                &w_bb[i],
                &eff.gram_ue,
                &r_q[i],
                None,
                powers.rho_a,
                adc.alpha,
                powers.noise_var,
                k,
            ),
            Link::Backhaul => {
                let si = match duplex {
                    Duplex::Full => Some((&eff.si[i], powers.rho_s)),
                    Duplex::Half => None,
                };
                subcarrier_rate(
                    &eff.backhaul[i],
                    &w_bb[i],
                    &eff.gram_iab,
                    &r_q[i],
                    si,
                    powers.rho_b,
                    adc.alpha,
                    powers.noise_var,
                    k,
                )
            }
        };
    }
    Ok(acc / k as f64)
}

/// Gaussian-signaling spectral efficiency of one link in bits/s/Hz,
/// averaged over subcarriers. `adc` is the ADC of that link's receiver.
/// The half-duplex time share is not applied here.
pub fn spectral_efficiency(
    link: Link,
    beams: &BeamformerSet,
    channels: &LinkChannels,
    powers: &LinkPowers,
    adc: &AdcModel,
    duplex: Duplex,
    aqnm: &AqnmOptions,
) -> Result<f64> {
    powers.validate()?;
    let eff = EffectiveChannels::new(&beams.analog(), channels)?;
    let (r_iab, r_ue) = aqnm_covariances(&eff, powers, adc, adc, duplex, aqnm)?;
    match link {
        Link::Backhaul => {
            link_spectral_efficiency(link, &eff, &beams.w_bb_iab, &r_iab, powers, adc, duplex)
        }
        Link::Access => {
            link_spectral_efficiency(link, &eff, &beams.w_bb_ue, &r_ue, powers, adc, duplex)
        }
    }
}

/// SVD bound from precomputed per-subcarrier singular values (decreasing).
pub fn upper_bound_from_singular_values(singular_values: &[Vec<f64>], snr: f64, n_s: usize) -> f64 {
    let k = singular_values.len();
    if k == 0 {
        return 0.0;
    }
    let scale = snr / (k * n_s) as f64;
    let total: f64 = singular_values
        .iter()
        .map(|sv| {
            sv.iter()
                .take(n_s)
                .map(|s| (1.0 + scale * s * s).log2())
                .sum::<f64>()
        })
        .sum();
    total / k as f64
}

/// Interference-free, infinite-resolution bound with a uniform
/// `SNR/(K·N_s)` split over the `N_s` strongest modes of each subcarrier.
pub fn upper_bound(channel: &FreqChannel, snr: f64, n_s: usize) -> Result<f64> {
    if n_s > channel.n_rx().min(channel.n_tx()) {
        return Err(invalid("n_s exceeds the channel's minimum dimension"));
    }
    let sv = channel
        .subcarriers
        .iter()
        .map(|h| sorted_svd(h).map(|s| s.singular_values))
        .collect::<Result<Vec<_>>>()?;
    Ok(upper_bound_from_singular_values(&sv, snr, n_s))
}

/// ADC figure of merit `c` in J/step/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdcPowerClass {
    /// Ideal future value, 5 fJ/step/Hz.
    Low,
    /// 65 fJ/step/Hz.
    Intermediate,
    /// State of the art, 494 fJ/step/Hz.
    High,
}

impl AdcPowerClass {
    pub fn energy_per_step(self) -> f64 {
        match self {
            AdcPowerClass::Low => 5e-15,
            AdcPowerClass::Intermediate => 65e-15,
            AdcPowerClass::High => 494e-15,
        }
    }
}

impl FromStr for AdcPowerClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lp" | "lpadc" | "low" => Ok(AdcPowerClass::Low),
            "ip" | "ipadc" | "intermediate" => Ok(AdcPowerClass::Intermediate),
            "hp" | "hpadc" | "high" => Ok(AdcPowerClass::High),
            _ => Err(invalid(format!("unknown ADC power class {s:?}"))),
        }
    }
}

/// Receiver device powers in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    pub lna: f64,
    pub splitter: f64,
    pub combiner: f64,
    pub phase_shifter: f64,
    pub mixer: f64,
    pub local_oscillator: f64,
    pub low_pass_filter: f64,
    pub baseband_amp: f64,
    /// ADC energy per conversion step per Hz.
    pub adc_energy: f64,
    /// Sampling bandwidth in Hz.
    pub bandwidth: f64,
    pub resolution: Resolution,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            lna: 39e-3,
            splitter: 19.5e-3,
            combiner: 19.5e-3,
            phase_shifter: 2e-3,
            mixer: 16.8e-3,
            local_oscillator: 5e-3,
            low_pass_filter: 14e-3,
            baseband_amp: 5e-3,
            adc_energy: AdcPowerClass::Low.energy_per_step(),
            bandwidth: 850e6,
            resolution: Resolution::Bits(4),
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lna,
            self.splitter,
            self.combiner,
            self.phase_shifter,
            self.mixer,
            self.local_oscillator,
            self.low_pass_filter,
            self.baseband_amp,
            self.adc_energy,
            self.bandwidth,
        ];
        if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid("power model entries must be finite and ≥ 0"));
        }
        Ok(())
    }

    /// Per-RF-chain power: mixer, LO, low-pass filter and baseband amplifier.
    pub fn rho_rf(&self) -> f64 {
        self.mixer + self.local_oscillator + self.low_pass_filter + self.baseband_amp
    }

    /// `c·B·2^b`; unbounded for an ideal converter.
    pub fn rho_adc(&self) -> f64 {
        match self.resolution {
            Resolution::Bits(b) => self.adc_energy * self.bandwidth * 2f64.powi(b as i32),
            Resolution::Infinite => f64::INFINITY,
        }
    }

    pub fn with_resolution(self, resolution: Resolution) -> Self {
        PowerModel { resolution, ..self }
    }
}

/// Total receiver power in watts for `n_rx` antennas and `n_rf` RF chains.
/// The all-digital receiver has one RF chain and an I/Q ADC pair per
/// antenna; `n_rf` is ignored there.
pub fn power_total(arch: Architecture, n_rx: usize, n_rf: usize, model: &PowerModel) -> f64 {
    let n_rx = n_rx as f64;
    let n_rf = n_rf as f64;
    match arch {
        Architecture::AllDigital => n_rx * (model.lna + model.rho_rf() + 2.0 * model.rho_adc()),
        Architecture::Hybrid => {
            n_rx * (model.lna + model.splitter + n_rf * model.phase_shifter)
                + n_rf * (model.rho_rf() + model.combiner + 2.0 * model.rho_adc())
        }
    }
}

pub fn energy_efficiency(se: f64, p_total: f64) -> Result<f64> {
    if !(p_total > 0.0) {
        return Err(invalid("total power must be > 0"));
    }
    Ok(se / p_total)
}

/// Fraction of samples strictly below `rate`.
pub fn outage_probability(se_samples: &[f64], rate: f64) -> Result<f64> {
    if se_samples.is_empty() {
        return Err(Error::EmptySamples("outage_probability"));
    }
    let below = se_samples.iter().filter(|&&s| s < rate).count();
    Ok(below as f64 / se_samples.len() as f64)
}

/// Largest sampled rate whose empirical outage does not exceed `epsilon`.
pub fn epsilon_rate(se_samples: &[f64], epsilon: f64) -> Result<f64> {
    if se_samples.is_empty() {
        return Err(Error::EmptySamples("epsilon_rate"));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(invalid("epsilon must lie in [0, 1)"));
    }
    let mut sorted = se_samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    // P_out(sorted[j]) = (#samples strictly below sorted[j]) / n
    let mut best = sorted[0];
    let mut below = 0usize;
    for j in 0..sorted.len() {
        if j > 0 && sorted[j] > sorted[j - 1] {
            below = j;
        }
        if below as f64 / n <= epsilon {
            best = sorted[j];
        } else {
            break;
        }
    }
    Ok(best)
}

impl fmt::Display for TrialResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{} b={}: backhaul {:.4} access {:.4} sum {:.4} (bound {:.4} + {:.4})",
            self.duplex,
            self.architecture,
            self.resolution,
            self.se_backhaul,
            self.se_access,
            self.se_sum,
            self.se_bound_backhaul,
            self.se_bound_access
        )
    }
}
