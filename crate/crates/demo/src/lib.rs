//! Browser bindings for the simulator on a reduced array and band so that
//! a sweep finishes in a few seconds single-threaded.
//!
//! Results are returned as flat `f64` arrays, row-major, with the column
//! order given in each function's documentation.

use iab_sim::beamforming::{Architecture, Duplex};
use iab_sim::metrics::power_total;
use iab_sim::montecarlo::{run_sweep, Scenario, SimConfig, SweepAxis, SweepSpec};
use iab_sim::quantization::{eta_of_bits, Resolution};
use wasm_bindgen::prelude::*;

/// Scenario order of the sweep outputs.
pub const SCENARIOS: [(Duplex, Architecture); 4] = [
    (Duplex::Full, Architecture::Hybrid),
    (Duplex::Half, Architecture::Hybrid),
    (Duplex::Full, Architecture::AllDigital),
    (Duplex::Half, Architecture::AllDigital),
];

/// Small configuration: 16 antennas at gNB/IAB, 4 at the UE, 16
/// subcarriers, 4 taps, 4 RF chains, 2 streams.
pub fn demo_config(sir_db: f64) -> SimConfig {
    let mut cfg = SimConfig {
        n_gnb: 16,
        n_iab_tx: 16,
        n_iab_rx: 16,
        n_ue: 4,
        sir_db,
        ..SimConfig::default()
    };
    cfg.channel.subcarriers = 16;
    cfg.channel.taps = 4;
    cfg.channel.cp_len = 2;
    cfg
}

fn sweep(
    axis: SweepAxis,
    values: Vec<f64>,
    bits: Resolution,
    cfg: SimConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let scenarios: Vec<Scenario> = SCENARIOS
        .iter()
        .map(|&(d, a)| Scenario::new(d, a, bits))
        .collect();
    let spec = SweepSpec {
        axis,
        values: values.clone(),
        trials,
        base_seed: seed,
        workers: 1,
        outage_rate: 1.0,
        epsilon: 0.1,
    };
    let result = run_sweep(&spec, &scenarios, &cfg).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(values.len() * 6);
    for (i, v) in values.iter().enumerate() {
        let rows = &result.rows[i * scenarios.len()..(i + 1) * scenarios.len()];
        out.push(*v);
        out.extend(rows.iter().map(|r| r.mean_se_sum));
        out.push(rows[0].bound_sum);
    }
    Ok(out)
}

/// Mean sum SE against SNR. Rows: `snr_db, fd_hyb, hd_hyb, fd_dig, hd_dig,
/// bound`.
pub fn se_vs_snr(
    snr_min: f64,
    snr_max: f64,
    step: f64,
    bits: u32,
    sir_db: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if !(step > 0.0) || !(snr_max >= snr_min) {
        return Err("need snr_min ≤ snr_max and step > 0".into());
    }
    let n = ((snr_max - snr_min) / step).floor() as usize + 1;
    let values: Vec<f64> = (0..n).map(|i| snr_min + step * i as f64).collect();
    let res = if bits == 0 {
        Resolution::Infinite
    } else {
        Resolution::Bits(bits)
    };
    sweep(
        SweepAxis::SnrDb,
        values,
        res,
        demo_config(sir_db),
        trials,
        seed,
    )
}

/// Mean sum SE against ADC bits `1..=max_bits` followed by the ideal
/// converter (encoded as `Infinity` in the first column). Columns as in
/// [`se_vs_snr`].
pub fn se_vs_bits(
    max_bits: u32,
    snr_db: f64,
    sir_db: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if max_bits == 0 {
        return Err("max_bits must be ≥ 1".into());
    }
    let mut values: Vec<f64> = (1..=max_bits).map(f64::from).collect();
    values.push(f64::INFINITY);
    let mut cfg = demo_config(sir_db);
    cfg.snr_db = snr_db;
    sweep(
        SweepAxis::Bits,
        values,
        Resolution::Bits(1),
        cfg,
        trials,
        seed,
    )
}

/// Distortion factor and receiver power per bit depth for the full-size
/// arrays (64 IAB antennas, 8 UE antennas, 4 RF chains). Rows: `bits, eta,
/// iab_digital_w, iab_hybrid_w, ue_digital_w, ue_hybrid_w`.
pub fn power_table(max_bits: u32) -> Vec<f64> {
    let cfg = SimConfig::default();
    let mut out = Vec::new();
    for b in 1..=max_bits {
        let r = Resolution::Bits(b);
        let m = cfg.power.with_resolution(r);
        out.extend([
            b as f64,
            eta_of_bits(r).expect("b ≥ 1"),
            power_total(
                Architecture::AllDigital,
                cfg.n_iab_rx,
                cfg.link.rf_iab_rx,
                &m,
            ),
            power_total(Architecture::Hybrid, cfg.n_iab_rx, cfg.link.rf_iab_rx, &m),
            power_total(Architecture::AllDigital, cfg.n_ue, cfg.link.rf_ue, &m),
            power_total(Architecture::Hybrid, cfg.n_ue, cfg.link.rf_ue, &m),
        ]);
    }
    out
}

#[wasm_bindgen(js_name = seVsSnr)]
pub fn se_vs_snr_js(
    snr_min: f64,
    snr_max: f64,
    step: f64,
    bits: u32,
    sir_db: f64,
    trials: u32,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    se_vs_snr(
        snr_min,
        snr_max,
        step,
        bits,
        sir_db,
        trials as usize,
        seed as u64,
    )
    .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = seVsBits)]
pub fn se_vs_bits_js(
    max_bits: u32,
    snr_db: f64,
    sir_db: f64,
    trials: u32,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    se_vs_bits(max_bits, snr_db, sir_db, trials as usize, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = powerTable)]
pub fn power_table_js(max_bits: u32) -> Vec<f64> {
    power_table(max_bits)
}
