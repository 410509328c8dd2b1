//! Seeded Monte Carlo trials and sweeps.
//!
//! Each trial index maps to one channel seed, independent of the scenario,
//! so every scenario and axis value is evaluated on the same (paired)
//! channel realizations. Trials are independent and may run on any number
//! of workers; results are reduced in trial-index order.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::beamforming::{
    aqnm_covariances, design_analog, design_combiners, svd_digital_design, AnalogDesign,
    Architecture, Codebooks, DigitalDesign, Duplex, EffectiveChannels, LinkConfig,
};
use crate::channel::{
    draw_tap_channel, si_channel, taps_to_subcarriers, ChannelConfig, FreqChannel, LinkChannels,
    SiGeometry, TapChannel, SPEED_OF_LIGHT,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::CMat;
use crate::metrics::{
    energy_efficiency, epsilon_rate, link_spectral_efficiency, outage_probability, power_total,
    upper_bound_from_singular_values, Link, LinkPowers, PowerModel, TrialResult,
};
use crate::quantization::{AdcModel, AqnmOptions, Resolution};

/// Every parameter of a simulated link.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Shared channel parameters; antenna counts are filled per link.
    pub channel: ChannelConfig,
    pub n_gnb: usize,
    pub n_iab_tx: usize,
    pub n_iab_rx: usize,
    pub n_ue: usize,
    pub link: LinkConfig,
    pub carrier_hz: f64,
    /// TX/RX array separation at the IAB node, in wavelengths.
    pub si_separation: f64,
    /// Angle between the IAB arrays, radians.
    pub si_angle: f64,
    pub rician_k: f64,
    pub los_all_taps: bool,
    /// Set to `false` to zero the self-interference channel.
    pub si_enabled: bool,
    pub snr_db: f64,
    /// `10·log10(ρ_a/ρ_s)`.
    pub sir_db: f64,
    pub noise_var: f64,
    pub power: PowerModel,
    /// ADC resolution used by scenarios that do not name one.
    pub adc_bits: Resolution,
    pub aqnm: AqnmOptions,
}

impl Default for SimConfig {
    fn default() -> Self {
        let channel = ChannelConfig::default();
        SimConfig {
            channel,
            n_gnb: 64,
            n_iab_tx: 64,
            n_iab_rx: 64,
            n_ue: 8,
            link: LinkConfig::default(),
            carrier_hz: 28e9,
            si_separation: 2.0,
            si_angle: std::f64::consts::FRAC_PI_2,
            rician_k: 10.0,
            los_all_taps: false,
            si_enabled: true,
            snr_db: 10.0,
            sir_db: -40.0,
            noise_var: 1.0,
            power: PowerModel::default(),
            adc_bits: Resolution::Bits(4),
            aqnm: AqnmOptions::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.backhaul_channel().validate()?;
        self.access_channel().validate()?;
        self.link.validate()?;
        self.si_geometry().validate()?;
        self.power.validate()?;
        if !(self.carrier_hz > 0.0) {
            return Err(invalid("carrier frequency must be > 0"));
        }
        if !(self.noise_var > 0.0) {
            return Err(invalid("noise variance must be > 0"));
        }
        if !self.snr_db.is_finite() || self.sir_db.is_nan() {
            return Err(invalid("snr_db must be finite"));
        }
        let min_b = self.n_iab_rx.min(self.n_gnb);
        let min_a = self.n_ue.min(self.n_iab_tx);
        let l = &self.link;
        if l.ns_gnb.max(l.ns_iab) > min_b || l.ns_iab.max(l.ns_ue) > min_a {
            return Err(invalid("stream count exceeds an array size"));
        }
        if l.rf_gnb > self.n_gnb * l.oversampling
            || l.rf_iab_tx > self.n_iab_tx * l.oversampling
            || l.rf_iab_rx > self.n_iab_rx * l.oversampling
            || l.rf_ue > self.n_ue * l.oversampling
        {
            return Err(invalid("RF chain count exceeds the codebook size"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    fn with_arrays(&self, n_rx: usize, n_tx: usize) -> ChannelConfig {
        ChannelConfig {
            n_rx,
            n_tx,
            ..self.channel.clone()
        }
    }

    pub fn backhaul_channel(&self) -> ChannelConfig {
        self.with_arrays(self.n_iab_rx, self.n_gnb)
    }

    pub fn access_channel(&self) -> ChannelConfig {
        self.with_arrays(self.n_ue, self.n_iab_tx)
    }

    pub fn si_channel(&self) -> ChannelConfig {
        self.with_arrays(self.n_iab_rx, self.n_iab_tx)
    }

    pub fn si_geometry(&self) -> SiGeometry {
        let lambda = self.wavelength();
        SiGeometry {
            separation: self.si_separation * lambda,
            angle: self.si_angle,
            wavelength: lambda,
            antenna_pitch: self.channel.pitch_over_lambda * lambda,
            rician_k: self.rician_k,
            los_all_taps: self.los_all_taps,
        }
    }

    pub fn powers(&self, snr_db: f64) -> LinkPowers {
        LinkPowers::from_db(snr_db, self.sir_db, self.noise_var)
    }

    /// Receive power of the IAB node plus the UE for an architecture.
    pub fn receiver_power(&self, arch: Architecture, resolution: Resolution) -> f64 {
        let model = self.power.with_resolution(resolution);
        power_total(arch, self.n_iab_rx, self.link.rf_iab_rx, &model)
            + power_total(arch, self.n_ue, self.link.rf_ue, &model)
    }
}

/// One compared configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub duplex: Duplex,
    pub architecture: Architecture,
    pub resolution: Resolution,
    pub include_bound: bool,
}

impl Scenario {
    pub fn new(duplex: Duplex, architecture: Architecture, resolution: Resolution) -> Self {
        Scenario {
            duplex,
            architecture,
            resolution,
            include_bound: true,
        }
    }

    pub fn tag(&self) -> String {
        format!("{}-{}-{}", self.duplex, self.architecture, self.resolution)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// Parses `fd-hyb`, `hd-dig@inf`, `fd-hybrid@4`. Without `@bits` the
/// resolution defaults to 4 bits; callers usually override it from config.
impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (body, bits) = match s.split_once('@') {
            Some((b, r)) => (b, Some(r.parse::<Resolution>()?)),
            None => (s, None),
        };
        let (dup, arch) = body.split_once('-').ok_or_else(|| {
            invalid(format!(
                "scenario {s:?} must look like fd-hyb or hd-dig@inf"
            ))
        })?;
        let duplex = match dup.to_ascii_lowercase().as_str() {
            "fd" => Duplex::Full,
            "hd" => Duplex::Half,
            _ => return Err(invalid(format!("unknown duplex mode in scenario {s:?}"))),
        };
        let architecture = arch.to_ascii_lowercase().parse()?;
        Ok(Scenario::new(
            duplex,
            architecture,
            bits.unwrap_or(Resolution::Bits(4)),
        ))
    }
}

/// Stable per-trial seed from the sweep seed and the trial index.
pub fn trial_seed(base_seed: u64, index: u64) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix64(base_seed ^ splitmix64(index))
}

/// Shared state of a simulation: validated config and codebooks.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimConfig,
    codebooks: Codebooks,
}

struct Stage {
    analog: AnalogDesign,
    eff: EffectiveChannels,
}

/// One channel realization with its SNR-independent design stages cached.
pub struct Trial<'a> {
    sim: &'a Simulator,
    pub seed: u64,
    pub channels: LinkChannels,
    pub digital: DigitalDesign,
    stages: [Option<Stage>; 2],
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let codebooks = Codebooks::dft(
            cfg.n_gnb,
            cfg.n_iab_tx,
            cfg.n_iab_rx,
            cfg.n_ue,
            cfg.link.oversampling,
        )?;
        Ok(Simulator { cfg, codebooks })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn codebooks(&self) -> &Codebooks {
        &self.codebooks
    }

    /// Tap-domain channels `(backhaul, access, SI)` for a seed.
    pub fn draw_taps(&self, seed: u64) -> Result<(TapChannel, TapChannel, TapChannel)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hb = draw_tap_channel(&self.cfg.backhaul_channel(), &mut rng)?;
        let ha = draw_tap_channel(&self.cfg.access_channel(), &mut rng)?;
        let nlos = draw_tap_channel(&self.cfg.si_channel(), &mut rng)?;
        let si = if self.cfg.si_enabled {
            si_channel(&self.cfg.si_geometry(), &nlos)?
        } else {
            TapChannel::zeros(
                nlos.n_rx(),
                nlos.n_tx(),
                nlos.taps.len(),
                nlos.sample_interval,
            )
        };
        Ok((hb, ha, si))
    }

    pub fn draw_channels(&self, seed: u64) -> Result<LinkChannels> {
        let (hb, ha, si) = self.draw_taps(seed)?;
        let k = self.cfg.channel.subcarriers;
        Ok(LinkChannels {
            backhaul: taps_to_subcarriers(&hb, k)?,
            access: taps_to_subcarriers(&ha, k)?,
            si: taps_to_subcarriers(&si, k)?,
        })
    }

    pub fn trial(&self, seed: u64) -> Result<Trial<'_>> {
        let channels = self.draw_channels(seed)?;
        self.trial_with_channels(seed, channels)
    }

    pub fn trial_with_channels(&self, seed: u64, channels: LinkChannels) -> Result<Trial<'_>> {
        channels.validate()?;
        let l = &self.cfg.link;
        let digital = svd_digital_design(
            &channels.backhaul,
            &channels.access,
            l.ns_gnb,
            l.ns_iab,
            l.ns_ue,
        )?;
        Ok(Trial {
            sim: self,
            seed,
            channels,
            digital,
            stages: [None, None],
        })
    }
}

impl Trial<'_> {
    fn stage(&mut self, arch: Architecture) -> Result<&Stage> {
        let slot = match arch {
            Architecture::AllDigital => 0,
            Architecture::Hybrid => 1,
        };
        if self.stages[slot].is_none() {
            let analog =
                design_analog(&self.digital, arch, &self.sim.cfg.link, &self.sim.codebooks)?;
            let eff = EffectiveChannels::new(&analog, &self.channels)?;
            self.stages[slot] = Some(Stage { analog, eff });
        }
        Ok(self.stages[slot].as_ref().expect("stage just built"))
    }

    pub fn analog(&mut self, arch: Architecture) -> Result<&AnalogDesign> {
        Ok(&self.stage(arch)?.analog)
    }

    /// Bounds for the backhaul and access links at `snr_db`.
    pub fn bounds(&self, snr_db: f64) -> (f64, f64) {
        let p = self.sim.cfg.powers(snr_db);
        let l = &self.sim.cfg.link;
        (
            upper_bound_from_singular_values(&self.digital.sv_backhaul, p.snr_b(), l.ns_gnb),
            upper_bound_from_singular_values(&self.digital.sv_access, p.snr_a(), l.ns_iab),
        )
    }

    /// Designs the combiners for `scenario` at `snr_db` and evaluates both
    /// links.
    pub fn evaluate(&mut self, scenario: &Scenario, snr_db: f64) -> Result<TrialResult> {
        let powers = self.sim.cfg.powers(snr_db);
        let adc = AdcModel::new(scenario.resolution)?;
        let link_cfg = self.sim.cfg.link.clone();
        let aqnm = self.sim.cfg.aqnm;
        let stage = self.stage(scenario.architecture)?;
        let eff = &stage.eff;
        let (r_iab, r_ue) = aqnm_covariances(eff, &powers, &adc, &adc, scenario.duplex, &aqnm)?;
        let (w_iab, w_ue) = design_combiners(
            eff,
            &r_iab,
            &r_ue,
            &powers,
            &adc,
            &adc,
            scenario.duplex,
            &link_cfg,
        )?;
        let mut se_b = link_spectral_efficiency(
            Link::Backhaul,
            eff,
            &w_iab,
            &r_iab,
            &powers,
            &adc,
            scenario.duplex,
        )?;
        let mut se_a = link_spectral_efficiency(
            Link::Access,
            eff,
            &w_ue,
            &r_ue,
            &powers,
            &adc,
            scenario.duplex,
        )?;
        if scenario.duplex == Duplex::Half {
            se_b *= 0.5;
            se_a *= 0.5;
        }
        let (bb, ba) = if scenario.include_bound {
            self.bounds(snr_db)
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(TrialResult {
            se_backhaul: se_b,
            se_access: se_a,
            se_sum: se_b + se_a,
            se_bound_backhaul: bb,
            se_bound_access: ba,
            duplex: scenario.duplex,
            architecture: scenario.architecture,
            resolution: scenario.resolution,
        })
    }
}

/// Runs a single trial of `scenario` at the configured SNR.
pub fn run_trial(seed: u64, scenario: &Scenario, cfg: &SimConfig) -> Result<TrialResult> {
    let wrap = |e: Error| Error::Trial {
        seed,
        source: Box::new(e),
    };
    let sim = Simulator::new(cfg.clone()).map_err(wrap)?;
    let mut trial = sim.trial(seed).map_err(wrap)?;
    trial.evaluate(scenario, cfg.snr_db).map_err(wrap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    SnrDb,
    Bits,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::Bits => "bits",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// SNR values in dB, or bit counts (`inf` for an ideal ADC).
    pub values: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    /// Worker threads; 0 picks the default, 1 runs sequentially.
    pub workers: usize,
    /// Rate threshold for the empirical outage probability, bits/s/Hz.
    pub outage_rate: f64,
    /// Target outage for the ε-rate.
    pub epsilon: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(invalid("trials must be ≥ 1"));
        }
        if self.values.is_empty() {
            return Err(invalid("sweep values must be nonempty"));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("sweep values must be strictly increasing"));
        }
        if self.axis == SweepAxis::Bits {
            for v in &self.values {
                Resolution::from_f64(*v)?;
            }
        } else if self.values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("SNR values must be finite"));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(invalid("epsilon must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Aggregate of all trials of one (axis value, scenario) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub scenario: Scenario,
    pub samples: Vec<TrialResult>,
    pub mean_se_sum: f64,
    pub mean_se_backhaul: f64,
    pub mean_se_access: f64,
    /// Standard error of `mean_se_sum`.
    pub stderr: f64,
    pub bound_sum: f64,
    pub ee_bits_per_joule: f64,
    pub outage_p: f64,
    pub eps_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

fn mean(xs: impl Iterator<Item = f64>) -> (f64, usize) {
    let mut acc = 0.0;
    let mut n = 0;
    for x in xs {
        acc += x;
        n += 1;
    }
    (acc / n.max(1) as f64, n)
}

/// Aggregates per-trial results into a sweep row.
pub fn aggregate(
    axis_value: f64,
    scenario: Scenario,
    samples: Vec<TrialResult>,
    cfg: &SimConfig,
    spec: &SweepSpec,
) -> Result<SweepRow> {
    let sums: Vec<f64> = samples.iter().map(|t| t.se_sum).collect();
    let (mean_sum, n) = mean(sums.iter().copied());
    let (mean_b, _) = mean(samples.iter().map(|t| t.se_backhaul));
    let (mean_a, _) = mean(samples.iter().map(|t| t.se_access));
    let (bound, _) = mean(samples.iter().map(|t| t.bound_sum()));
    let stderr = if n > 1 {
        let var = sums.iter().map(|s| (s - mean_sum).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    let p_total = cfg.receiver_power(scenario.architecture, scenario.resolution);
    let ee = energy_efficiency(mean_sum, p_total)? * cfg.power.bandwidth;
    Ok(SweepRow {
        axis_value,
        scenario,
        mean_se_sum: mean_sum,
        mean_se_backhaul: mean_b,
        mean_se_access: mean_a,
        stderr,
        bound_sum: bound,
        ee_bits_per_joule: ee,
        outage_p: outage_probability(&sums, spec.outage_rate)?,
        eps_rate: epsilon_rate(&sums, spec.epsilon)?,
        samples,
    })
}

/// Evaluates every (axis value, scenario) pair on one trial.
fn sweep_trial(
    sim: &Simulator,
    spec: &SweepSpec,
    scenarios: &[Scenario],
    index: usize,
) -> Result<Vec<TrialResult>> {
    let seed = trial_seed(spec.base_seed, index as u64);
    let cfg = sim.config();
    let mut trial = sim.trial(seed).map_err(|e| Error::Trial {
        seed,
        source: Box::new(e),
    })?;
    let mut out = Vec::with_capacity(spec.values.len() * scenarios.len());
    for &v in &spec.values {
        for sc in scenarios {
            let (scenario, snr_db) = match spec.axis {
                SweepAxis::SnrDb => (*sc, v),
                SweepAxis::Bits => (
                    Scenario {
                        resolution: Resolution::from_f64(v)?,
                        ..*sc
                    },
                    cfg.snr_db,
                ),
            };
            let r = trial
                .evaluate(&scenario, snr_db)
                .map_err(|e| Error::Sweep {
                    axis_value: v,
                    scenario: scenario.tag(),
                    seed,
                    source: Box::new(e),
                })?;
            out.push(r);
        }
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
fn run_trials(
    sim: &Simulator,
    spec: &SweepSpec,
    scenarios: &[Scenario],
) -> Result<Vec<Vec<TrialResult>>> {
    use rayon::prelude::*;
    if spec.workers == 1 {
        return (0..spec.trials)
            .map(|i| sweep_trial(sim, spec, scenarios, i))
            .collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        (0..spec.trials)
            .into_par_iter()
            .map(|i| sweep_trial(sim, spec, scenarios, i))
            .collect()
    })
}

#[cfg(not(feature = "parallel"))]
fn run_trials(
    sim: &Simulator,
    spec: &SweepSpec,
    scenarios: &[Scenario],
) -> Result<Vec<Vec<TrialResult>>> {
    (0..spec.trials)
        .map(|i| sweep_trial(sim, spec, scenarios, i))
        .collect()
}

/// Runs all trials and aggregates one row per axis value and scenario,
/// axis-major.
pub fn run_sweep(spec: &SweepSpec, scenarios: &[Scenario], cfg: &SimConfig) -> Result<SweepResult> {
    spec.validate()?;
    if scenarios.is_empty() {
        return Err(invalid("at least one scenario is required"));
    }
    let sim = Simulator::new(cfg.clone())?;
    let per_trial = run_trials(&sim, spec, scenarios)?;
    let mut rows = Vec::with_capacity(spec.values.len() * scenarios.len());
    for (vi, &v) in spec.values.iter().enumerate() {
        for (si, sc) in scenarios.iter().enumerate() {
            let idx = vi * scenarios.len() + si;
            let samples: Vec<TrialResult> = per_trial.iter().map(|t| t[idx]).collect();
            let scenario = match spec.axis {
                SweepAxis::SnrDb => *sc,
                SweepAxis::Bits => Scenario {
                    resolution: Resolution::from_f64(v)?,
                    ..*sc
                },
            };
            rows.push(aggregate(v, scenario, samples, cfg, spec)?);
        }
    }
    Ok(SweepResult {
        axis: spec.axis,
        rows,
    })
}

/// Frequency channel assembled from explicit per-subcarrier matrices; used
/// to run the design on hand-built channels.
pub fn flat_links(backhaul: CMat, access: CMat, si: CMat, k: usize) -> LinkChannels {
    LinkChannels {
        backhaul: FreqChannel::flat(backhaul, k),
        access: FreqChannel::flat(access, k),
        si: FreqChannel::flat(si, k),
    }
}
