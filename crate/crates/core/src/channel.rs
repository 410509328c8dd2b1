//! Wideband clustered geometric MIMO channels and the full-duplex
//! self-interference channel.
//!
//! Rays are drawn per cluster, sampled through a raised-cosine pulse into
//! `L` delay taps, and transformed to `K` subcarriers with a DFT. The
//! self-interference channel combines a near-field line-of-sight leakage
//! matrix (from the transmit/receive array geometry) with a far-field
//! geometric component through a Rician factor.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::linalg::{CMat, C64};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub gain: C64,
    /// Delay in seconds.
    pub delay: f64,
    /// Angle of arrival in radians.
    pub aoa: f64,
    /// Angle of departure in radians.
    pub aod: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayCluster {
    pub rays: Vec<Ray>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TapChannel {
    pub taps: Vec<CMat>,
    /// Sampling interval `T_s` in seconds.
    pub sample_interval: f64,
}

impl TapChannel {
    pub fn n_rx(&self) -> usize {
        self.taps.first().map_or(0, |t| t.nrows())
    }

    pub fn n_tx(&self) -> usize {
        self.taps.first().map_or(0, |t| t.ncols())
    }

    pub fn zeros(n_rx: usize, n_tx: usize, taps: usize, sample_interval: f64) -> Self {
        TapChannel {
            taps: vec![CMat::zeros(n_rx, n_tx); taps],
            sample_interval,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreqChannel {
    pub subcarriers: Vec<CMat>,
}

impl FreqChannel {
    pub fn len(&self) -> usize {
        self.subcarriers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subcarriers.is_empty()
    }

    pub fn n_rx(&self) -> usize {
        self.subcarriers.first().map_or(0, |h| h.nrows())
    }

    pub fn n_tx(&self) -> usize {
        self.subcarriers.first().map_or(0, |h| h.ncols())
    }

    /// A frequency-flat channel repeating `h` on every subcarrier.
    pub fn flat(h: CMat, k: usize) -> Self {
        FreqChannel {
            subcarriers: vec![h; k],
        }
    }
}

/// Frequency responses of the three links around the IAB node: gNB → IAB
/// (backhaul), IAB → UE (access) and IAB TX → IAB RX (self-interference).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannels {
    pub backhaul: FreqChannel,
    pub access: FreqChannel,
    pub si: FreqChannel,
}

impl LinkChannels {
    pub fn validate(&self) -> Result<()> {
        let k = self.backhaul.len();
        if k == 0 || self.access.len() != k || self.si.len() != k {
            return Err(Error::DimensionMismatch(
                "links must share a nonzero subcarrier count".into(),
            ));
        }
        if self.si.n_rx() != self.backhaul.n_rx() || self.si.n_tx() != self.access.n_tx() {
            return Err(Error::DimensionMismatch(format!(
                "SI channel is {}×{}, expected {}×{}",
                self.si.n_rx(),
                self.si.n_tx(),
                self.backhaul.n_rx(),
                self.access.n_tx()
            )));
        }
        Ok(())
    }
}

/// Geometry of the co-located transmit and receive arrays of a
/// full-duplex node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiGeometry {
    /// TX/RX array separation in meters.
    pub separation: f64,
    /// Angle between the two arrays in radians.
    pub angle: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
    /// Element spacing in meters.
    pub antenna_pitch: f64,
    /// Rician factor (linear).
    pub rician_k: f64,
    /// Add the static LOS term to every tap instead of only tap 0.
    pub los_all_taps: bool,
}

impl SiGeometry {
    /// Arrays `2λ` apart at a right angle, `λ/2` pitch, `κ = 10`.
    pub fn with_wavelength(wavelength: f64) -> Self {
        SiGeometry {
            separation: 2.0 * wavelength,
            angle: PI / 2.0,
            wavelength,
            antenna_pitch: wavelength / 2.0,
            rician_k: 10.0,
            los_all_taps: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.separation > 0.0) {
            return Err(invalid("si separation must be > 0"));
        }
        if !(self.angle > 0.0 && self.angle < PI) {
            return Err(invalid("si angle must lie in (0, π)"));
        }
        if !(self.wavelength > 0.0) || !(self.antenna_pitch > 0.0) {
            return Err(invalid("si wavelength and antenna pitch must be > 0"));
        }
        if !(self.rician_k >= 0.0) {
            return Err(invalid("si rician factor must be ≥ 0"));
        }
        Ok(())
    }

    /// Antenna-pair distance `d_pq` (1-based indices) from the law of
    /// cosines on two arrays meeting at `angle`. `p` indexes rows of the
    /// leakage matrix and `q` its columns.
    pub fn distance(&self, p: usize, q: usize) -> f64 {
        let d = self.separation;
        let w = self.angle;
        let a = d / w.tan() + (q as f64 - 1.0) * self.antenna_pitch;
        let b = d / w.sin() + (p as f64 - 1.0) * self.antenna_pitch;
        (a * a + b * b - 2.0 * a * b * w.cos()).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub n_rx: usize,
    pub n_tx: usize,
    pub clusters: usize,
    pub rays_per_cluster: usize,
    pub taps: usize,
    pub subcarriers: usize,
    pub roll_off: f64,
    pub sample_interval: f64,
    /// Maximum delay spread in seconds; `None` means `(L − 1)·T_s`.
    pub max_delay: Option<f64>,
    /// Laplacian scale of the per-ray angle offsets, radians.
    pub angle_spread: f64,
    /// Antenna pitch over wavelength.
    pub pitch_over_lambda: f64,
    /// Cyclic prefix length in samples.
    pub cp_len: usize,
    /// Cap the delay spread at the cyclic prefix.
    pub enforce_cp: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            n_rx: 64,
            n_tx: 64,
            clusters: 4,
            rays_per_cluster: 5,
            taps: 20,
            subcarriers: 64,
            roll_off: 1.0,
            sample_interval: 1.0 / 850e6,
            max_delay: None,
            angle_spread: 5f64.to_radians(),
            pitch_over_lambda: 0.5,
            cp_len: 5,
            enforce_cp: false,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            (self.n_rx, "n_rx"),
            (self.n_tx, "n_tx"),
            (self.clusters, "clusters"),
            (self.rays_per_cluster, "rays_per_cluster"),
            (self.taps, "L"),
            (self.subcarriers, "K"),
        ];
        for (v, name) in counts {
            if v < 1 {
                return Err(invalid(format!("{name} must be ≥ 1")));
            }
        }
        if self.subcarriers < self.taps {
            return Err(invalid("K must be ≥ L"));
        }
        if !(0.0..=1.0).contains(&self.roll_off) {
            return Err(invalid("roll_off must lie in [0, 1]"));
        }
        if !(self.sample_interval > 0.0) {
            return Err(invalid("sample interval must be > 0"));
        }
        if let Some(t) = self.max_delay {
            if !(t >= 0.0) {
                return Err(invalid("max delay must be ≥ 0"));
            }
        }
        if !(self.angle_spread >= 0.0) {
            return Err(invalid("angle spread must be ≥ 0"));
        }
        Ok(())
    }

    /// Effective maximum delay spread after the optional CP cap.
    pub fn tau_max(&self) -> f64 {
        let t = self
            .max_delay
            .unwrap_or((self.taps as f64 - 1.0) * self.sample_interval);
        if self.enforce_cp {
            t.min(self.cp_len as f64 * self.sample_interval)
        } else {
            t
        }
    }

    pub fn gamma(&self) -> f64 {
        ((self.n_rx * self.n_tx) as f64 / (self.clusters * self.rays_per_cluster) as f64).sqrt()
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Raised-cosine pulse with roll-off `beta` and symbol interval `ts`.
pub fn raised_cosine(t: f64, beta: f64, ts: f64) -> f64 {
    let x = t / ts;
    if beta == 0.0 {
        return sinc(x);
    }
    let denom = 1.0 - (2.0 * beta * x).powi(2);
    if denom.abs() < 1e-12 {
        // limit at |t| = T_s / (2β)
        return PI / 4.0 * sinc(1.0 / (2.0 * beta));
    }
    sinc(x) * (PI * beta * x).cos() / denom
}

/// Uniform linear array response with `1/√n` normalization.
pub fn array_response(n: usize, angle: f64, pitch_over_lambda: f64) -> DVector<C64> {
    let scale = 1.0 / (n as f64).sqrt();
    let phase = 2.0 * PI * pitch_over_lambda * angle.sin();
    DVector::from_fn(n, |m, _| C64::from_polar(scale, phase * m as f64))
}

fn laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

/// Draws `C` clusters of `R_c` rays: unit-variance circularly-symmetric
/// Gaussian gains, uniform cluster centers on `[−π/2, π/2]`, Laplacian ray
/// offsets, and a single uniform delay per cluster.
pub fn draw_clusters<R: Rng + ?Sized>(cfg: &ChannelConfig, rng: &mut R) -> Result<Vec<RayCluster>> {
    cfg.validate()?;
    let tau_max = cfg.tau_max();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let clusters = (0..cfg.clusters)
        .map(|_| {
            let center_aoa = rng.random_range(-PI / 2.0..=PI / 2.0);
            let center_aod = rng.random_range(-PI / 2.0..=PI / 2.0);
            let delay = rng.random::<f64>() * tau_max;
            let rays = (0..cfg.rays_per_cluster)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    Ray {
                        gain: C64::new(re * half, im * half),
                        delay,
                        aoa: center_aoa + laplace(rng, cfg.angle_spread),
                        aod: center_aod + laplace(rng, cfg.angle_spread),
                    }
                })
                .collect();
            RayCluster { rays }
        })
        .collect();
    Ok(clusters)
}

/// Samples the clustered rays into `L` delay taps through the
/// raised-cosine pulse, scaled by `γ = √(N_RX·N_TX/(C·R_c))`.
pub fn assemble_taps(clusters: &[RayCluster], cfg: &ChannelConfig) -> Result<TapChannel> {
    cfg.validate()?;
    if clusters.is_empty() {
        return Err(invalid("at least one cluster is required"));
    }
    if clusters.len() != cfg.clusters
        || clusters
            .iter()
            .any(|c| c.rays.len() != cfg.rays_per_cluster)
    {
        return Err(Error::DimensionMismatch(format!(
            "expected {} clusters of {} rays",
            cfg.clusters, cfg.rays_per_cluster
        )));
    }
    let gamma = cfg.gamma();
    let ts = cfg.sample_interval;
    let mut taps = vec![CMat::zeros(cfg.n_rx, cfg.n_tx); cfg.taps];
    for ray in clusters.iter().flat_map(|c| c.rays.iter()) {
        let a_rx = array_response(cfg.n_rx, ray.aoa, cfg.pitch_over_lambda);
        let a_tx = array_response(cfg.n_tx, ray.aod, cfg.pitch_over_lambda);
        for (l, tap) in taps.iter_mut().enumerate() {
            let p = raised_cosine(l as f64 * ts - ray.delay, cfg.roll_off, ts);
            if p == 0.0 {
                continue;
            }
            tap.gerc(ray.gain * (gamma * p), &a_rx, &a_tx, C64::new(1.0, 0.0));
        }
    }
    Ok(TapChannel {
        taps,
        sample_interval: ts,
    })
}

/// `H[k] = Σ_ℓ H[ℓ]·exp(−j2πkℓ/K)`, evaluated with a `K`-point FFT per
/// matrix entry.
pub fn taps_to_subcarriers(taps: &TapChannel, k: usize) -> Result<FreqChannel> {
    let l = taps.taps.len();
    if l == 0 {
        return Err(invalid("tap channel is empty"));
    }
    if k < l {
        return Err(invalid(format!("K must be ≥ L (K = {k}, L = {l})")));
    }
    let (n_rx, n_tx) = (taps.n_rx(), taps.n_tx());
    if taps.taps.iter().any(|t| t.shape() != (n_rx, n_tx)) {
        return Err(Error::DimensionMismatch("taps differ in shape".into()));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(k);
    let mut out = vec![CMat::zeros(n_rx, n_tx); k];
    let mut buf = vec![C64::new(0.0, 0.0); k];
    for j in 0..n_tx {
        for i in 0..n_rx {
            buf.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for (b, tap) in buf.iter_mut().zip(&taps.taps) {
                *b = tap[(i, j)];
            }
            fft.process(&mut buf);
            for (h, z) in out.iter_mut().zip(&buf) {
                h[(i, j)] = *z;
            }
        }
    }
    Ok(FreqChannel { subcarriers: out })
}

/// Near-field LOS leakage `[H]_pq = exp(−j2π d_pq/λ)/d_pq`.
pub fn los_si_matrix(geom: &SiGeometry, n_rx: usize, n_tx: usize) -> Result<CMat> {
    geom.validate()?;
    let m = CMat::from_fn(n_rx, n_tx, |r, c| {
        let d = geom.distance(r + 1, c + 1);
        C64::from_polar(1.0 / d, -2.0 * PI * d / geom.wavelength)
    });
    Ok(m)
}

/// Rician aggregation of the static LOS leakage with the far-field taps.
pub fn si_channel(geom: &SiGeometry, nlos: &TapChannel) -> Result<TapChannel> {
    geom.validate()?;
    if nlos.taps.is_empty() {
        return Err(invalid("nlos tap channel is empty"));
    }
    let (n_rx, n_tx) = (nlos.n_rx(), nlos.n_tx());
    if nlos.taps.iter().any(|t| t.shape() != (n_rx, n_tx)) {
        return Err(Error::DimensionMismatch("nlos taps differ in shape".into()));
    }
    let kappa = geom.rician_k;
    let (w_los, w_nlos) = if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
    };
    let los = los_si_matrix(geom, n_rx, n_tx)?;
    let taps = nlos
        .taps
        .iter()
        .enumerate()
        .map(|(l, h)| {
            let mut out = h * C64::new(w_nlos, 0.0);
            if w_los > 0.0 && (l == 0 || geom.los_all_taps) {
                out += &los * C64::new(w_los, 0.0);
            }
            out
        })
        .collect();
    Ok(TapChannel {
        taps,
        sample_interval: nlos.sample_interval,
    })
}

/// Draws clusters and assembles the tap channel in one step.
pub fn draw_tap_channel<R: Rng + ?Sized>(cfg: &ChannelConfig, rng: &mut R) -> Result<TapChannel> {
    let clusters = draw_clusters(cfg, rng)?;
    assemble_taps(&clusters, cfg)
}
