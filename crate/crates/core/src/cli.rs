//! Run configuration and CSV output.
//!
//! Configuration files are TOML. Tables are flattened to dotted keys
//! (`[channel] K = 32` is the same as `channel.K = 32`), and `--set`
//! overrides use the same keys. Unknown keys are rejected. An empty file
//! gives the defaults below.
//!
//! | key | default |
//! |---|---|
//! | `system.bandwidth_hz` | 850e6 (also sets `T_s = 1/B`) |
//! | `system.carrier_hz` | 28e9 |
//! | `antennas.gnb`, `antennas.iab_tx`, `antennas.iab_rx`, `antennas.ue` | 64, 64, 64, 8 |
//! | `link.ns_gnb`, `link.ns_iab`, `link.ns_ue` | 2 |
//! | `link.rf_gnb`, `link.rf_iab_tx`, `link.rf_iab_rx`, `link.rf_ue` | 4 |
//! | `link.oversampling` | 4 |
//! | `channel.K`, `channel.L`, `channel.cp_len` | 64, 20, 5 |
//! | `channel.roll_off` | 1.0 |
//! | `channel.clusters`, `channel.rays_per_cluster` | 4, 5 |
//! | `channel.angle_spread_deg` | 5.0 |
//! | `channel.max_delay_s` | (L−1)·T_s |
//! | `channel.enforce_cp` | false |
//! | `si.enabled` | true |
//! | `si.separation_wavelengths`, `si.angle_deg` | 2.0, 90.0 |
//! | `si.kappa` | 10.0 (linear) |
//! | `si.los_all_taps` | false |
//! | `power.snr_db`, `power.sir_db`, `power.noise_var` | 10, −40, 1 |
//! | `adc.bits` | 4 (`"inf"` for ideal) |
//! | `adc.power_class` | `"lp"` (`lp`, `ip`, `hp`) |
//! | `aqnm.load` | `"symbol"` (`symbol`, `unit`) |
//! | `aqnm.si_coupling` | `"cascade"` (`cascade`, `access-gram`) |
//! | `devices.lna_mw` … `devices.baseband_amp_mw` | device table |
//! | `sweep.trials`, `sweep.seed`, `sweep.workers` | 500, 0, 0 |
//! | `sweep.snr_db` | [−10, −5, 0, 5, 10, 15, 20] |
//! | `sweep.bits` | [1 … 10, "inf"] |
//! | `sweep.outage_rate`, `sweep.epsilon` | 5.0, 0.1 |
//! | `sweep.scenarios` | `"fd-hyb,fd-dig,hd-hyb,hd-dig,bound"` |

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use toml::Value;

use crate::error::{invalid, Error, Result};
use crate::metrics::AdcPowerClass;
use crate::montecarlo::{Scenario, SimConfig, SweepAxis, SweepResult, SweepSpec};
use crate::quantization::{AdcModel, Resolution};

/// Schema tag written as the first CSV line.
pub const CSV_SCHEMA: &str = "# schema: iab-sim-sweep/1";

pub const CSV_COLUMNS: [&str; 13] = [
    "axis_name",
    "axis_value",
    "duplex",
    "architecture",
    "bits",
    "mean_se_sum",
    "mean_se_backhaul",
    "mean_se_access",
    "stderr",
    "bound_sum",
    "ee_bits_per_joule",
    "outage_p",
    "eps_rate",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
    pub snr_values: Vec<f64>,
    pub bits_values: Vec<Resolution>,
    pub outage_rate: f64,
    pub epsilon: f64,
    /// Comma list as accepted by [`parse_scenarios`].
    pub scenario_list: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        let mut bits_values: Vec<Resolution> = (1..=10).map(Resolution::Bits).collect();
        bits_values.push(Resolution::Infinite);
        RunConfig {
            sim,
            trials: 500,
            seed: 0,
            workers: 0,
            snr_values: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            bits_values,
            outage_rate: 5.0,
            epsilon: 0.1,
            scenario_list: "fd-hyb,fd-dig,hd-hyb,hd-dig,bound".into(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.sweep_spec(SweepAxis::SnrDb).validate()?;
        self.sweep_spec(SweepAxis::Bits).validate()?;
        self.scenarios()?;
        Ok(())
    }

    /// Scenarios to run; those without an explicit `@bits` use `adc.bits`.
    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        parse_scenarios(&self.scenario_list, self.sim.adc_bits)
            .map_err(|e| invalid(format!("sweep.scenarios: {}", strip_prefix(&e))))
    }

    pub fn adc(&self) -> Result<AdcModel> {
        AdcModel::new(self.sim.adc_bits)
    }

    pub fn sweep_spec(&self, axis: SweepAxis) -> SweepSpec {
        let values = match axis {
            SweepAxis::SnrDb => self.snr_values.clone(),
            SweepAxis::Bits => self.bits_values.iter().map(|b| b.as_f64()).collect(),
        };
        SweepSpec {
            axis,
            values,
            trials: self.trials,
            base_seed: self.seed,
            workers: self.workers,
            outage_rate: self.outage_rate,
            epsilon: self.epsilon,
        }
    }

    /// Applies one dotted key. Errors name the key.
    pub fn set(&mut self, key: &str, value: &Value) -> Result<()> {
        self.apply(key, value)
            .map_err(|e| invalid(format!("{key}: {}", strip_prefix(&e))))
    }

    fn apply(&mut self, key: &str, v: &Value) -> Result<()> {
        let s = &mut self.sim;
        match key {
            "system.bandwidth_hz" => {
                let b = float(v)?;
                if !(b > 0.0) {
                    return Err(invalid("bandwidth must be > 0"));
                }
                s.power.bandwidth = b;
                s.channel.sample_interval = 1.0 / b;
            }
            "system.carrier_hz" => s.carrier_hz = float(v)?,
            "antennas.gnb" => s.n_gnb = positive(v)?,
            "antennas.iab_tx" => s.n_iab_tx = positive(v)?,
            "antennas.iab_rx" => s.n_iab_rx = positive(v)?,
            "antennas.ue" => s.n_ue = positive(v)?,
            "link.ns_gnb" => s.link.ns_gnb = positive(v)?,
            "link.ns_iab" => s.link.ns_iab = positive(v)?,
            "link.ns_ue" => s.link.ns_ue = positive(v)?,
            "link.rf_gnb" => s.link.rf_gnb = positive(v)?,
            "link.rf_iab_tx" => s.link.rf_iab_tx = positive(v)?,
            "link.rf_iab_rx" => s.link.rf_iab_rx = positive(v)?,
            "link.rf_ue" => s.link.rf_ue = positive(v)?,
            "link.oversampling" => s.link.oversampling = positive(v)?,
            "channel.K" => s.channel.subcarriers = positive(v)?,
            "channel.L" => s.channel.taps = positive(v)?,
            "channel.cp_len" => s.channel.cp_len = count(v)?,
            "channel.roll_off" => s.channel.roll_off = float(v)?,
            "channel.clusters" => s.channel.clusters = positive(v)?,
            "channel.rays_per_cluster" => s.channel.rays_per_cluster = positive(v)?,
            "channel.angle_spread_deg" => s.channel.angle_spread = float(v)?.to_radians(),
            "channel.max_delay_s" => s.channel.max_delay = Some(float(v)?),
            "channel.enforce_cp" => s.channel.enforce_cp = boolean(v)?,
            "si.enabled" => s.si_enabled = boolean(v)?,
            "si.separation_wavelengths" => s.si_separation = float(v)?,
            "si.angle_deg" => s.si_angle = float(v)?.to_radians(),
            "si.kappa" => s.rician_k = float(v)?,
            "si.los_all_taps" => s.los_all_taps = boolean(v)?,
            "power.snr_db" => s.snr_db = float(v)?,
            "power.sir_db" => s.sir_db = float(v)?,
            "power.noise_var" => s.noise_var = float(v)?,
            "adc.bits" => {
                let r = resolution(v)?;
                s.adc_bits = r;
                s.power.resolution = r;
            }
            "adc.power_class" => {
                s.power.adc_energy = string(v)?.parse::<AdcPowerClass>()?.energy_per_step()
            }
            "aqnm.load" => s.aqnm.load = string(v)?.parse()?,
            "aqnm.si_coupling" => s.aqnm.si_coupling = string(v)?.parse()?,
            "devices.lna_mw" => s.power.lna = milliwatts(v)?,
            "devices.splitter_mw" => s.power.splitter = milliwatts(v)?,
            "devices.combiner_mw" => s.power.combiner = milliwatts(v)?,
            "devices.phase_shifter_mw" => s.power.phase_shifter = milliwatts(v)?,
            "devices.mixer_mw" => s.power.mixer = milliwatts(v)?,
            "devices.local_oscillator_mw" => s.power.local_oscillator = milliwatts(v)?,
            "devices.low_pass_filter_mw" => s.power.low_pass_filter = milliwatts(v)?,
            "devices.baseband_amp_mw" => s.power.baseband_amp = milliwatts(v)?,
            "sweep.trials" => self.trials = positive(v)?,
            "sweep.seed" => self.seed = unsigned(v)?,
            "sweep.workers" => self.workers = count(v)?,
            "sweep.snr_db" => {
                self.snr_values = list(v)?.iter().map(float).collect::<Result<_>>()?;
                increasing(&self.snr_values)?;
            }
            "sweep.bits" => {
                self.bits_values = list(v)?.iter().map(resolution).collect::<Result<_>>()?;
                increasing(&self.bits_values)?;
            }
            "sweep.outage_rate" => self.outage_rate = float(v)?,
            "sweep.epsilon" => self.epsilon = float(v)?,
            "sweep.scenarios" => {
                let list = string(v)?;
                parse_scenarios(&list, s.adc_bits)?;
                self.scenario_list = list;
            }
            _ => return Err(invalid("unknown key")),
        }
        Ok(())
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::InvalidConfig(m) => m.clone(),
        other => other.to_string(),
    }
}

fn float(v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        Value::String(s) => s
            .trim()
            .parse()
            .map_err(|_| invalid(format!("expected a number, got {s:?}"))),
        _ => Err(invalid(format!("expected a number, got {v}"))),
    }
}

fn unsigned(v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(invalid(format!("expected a nonnegative integer, got {v}"))),
    }
}

fn count(v: &Value) -> Result<usize> {
    unsigned(v).map(|u| u as usize)
}

fn positive(v: &Value) -> Result<usize> {
    match count(v)? {
        0 => Err(invalid("must be ≥ 1")),
        n => Ok(n),
    }
}

fn increasing<T: PartialOrd>(values: &[T]) -> Result<()> {
    if values.is_empty() {
        return Err(invalid("list must not be empty"));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("values must be strictly increasing"));
    }
    Ok(())
}

fn boolean(v: &Value) -> Result<bool> {
    v.as_bool()
        .ok_or_else(|| invalid(format!("expected true or false, got {v}")))
}

fn string(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        _ => Err(invalid(format!("expected a string, got {v}"))),
    }
}

fn list(v: &Value) -> Result<&Vec<Value>> {
    v.as_array()
        .ok_or_else(|| invalid(format!("expected a list, got {v}")))
}

fn milliwatts(v: &Value) -> Result<f64> {
    Ok(float(v)? * 1e-3)
}

fn resolution(v: &Value) -> Result<Resolution> {
    match v {
        Value::Integer(i) if *i >= 1 => Ok(Resolution::Bits(*i as u32)),
        Value::Integer(_) => Err(invalid("bits must be ≥ 1")),
        Value::Float(f) => Resolution::from_f64(*f),
        Value::String(s) => s.parse(),
        _ => Err(invalid(format!("expected a bit count or \"inf\", got {v}"))),
    }
}

/// Parses a comma list such as `fd-hyb,hd-dig,bound`. `bound` toggles the
/// upper-bound column; it is on only when listed.
pub fn parse_scenarios(list: &str, bits: Resolution) -> Result<Vec<Scenario>> {
    let mut include_bound = false;
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("bound") {
            include_bound = true;
            continue;
        }
        let mut sc: Scenario = item.parse()?;
        if !item.contains('@') {
            sc.resolution = bits;
        }
        out.push(sc);
    }
    if out.is_empty() {
        return Err(invalid(format!("no scenarios in {list:?}")));
    }
    for sc in &mut out {
        sc.include_bound = include_bound;
    }
    Ok(out)
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            _ => {
                out.insert(key, v.clone());
            }
        }
    }
}

/// Parses one `key=value` override. The value is read as a TOML value and
/// falls back to a bare string.
pub fn parse_override(item: &str) -> Result<(String, Value)> {
    let (k, v) = item
        .split_once('=')
        .ok_or_else(|| invalid(format!("override {item:?} must look like key=value")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(invalid(format!("override {item:?} has an empty key")));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {}", v.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(v.trim().to_string()));
    Ok((k.to_string(), value))
}

/// Builds a configuration from TOML text and overrides.
pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let table: toml::Table =
        toml::from_str(text).map_err(|e| invalid(format!("config parse error: {e}")))?;
    let mut flat = BTreeMap::new();
    flatten("", &table, &mut flat);
    let mut cfg = RunConfig::default();
    for (k, v) in &flat {
        cfg.set(k, v)?;
    }
    for item in overrides {
        let (k, v) = parse_override(item)?;
        cfg.set(&k, &v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a configuration file (or defaults when `path` is `None`) and
/// applies overrides.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        })?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}

/// Writes a sweep result: schema comment, header, one row per
/// (axis value, scenario).
pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> std::io::Result<()> {
    let mut out = out;
    writeln!(out, "{CSV_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in &result.rows {
        let axis_value = match result.axis {
            SweepAxis::Bits => Resolution::from_f64(row.axis_value)
                .map(|r| r.to_string())
                .unwrap_or_else(|_| row.axis_value.to_string()),
            SweepAxis::SnrDb => row.axis_value.to_string(),
        };
        w.write_record([
            result.axis.name().to_string(),
            axis_value,
            row.scenario.duplex.to_string(),
            row.scenario.architecture.to_string(),
            row.scenario.resolution.to_string(),
            row.mean_se_sum.to_string(),
            row.mean_se_backhaul.to_string(),
            row.mean_se_access.to_string(),
            row.stderr.to_string(),
            row.bound_sum.to_string(),
            row.ee_bits_per_joule.to_string(),
            row.outage_p.to_string(),
            row.eps_rate.to_string(),
        ])?;
    }
    w.flush()
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::create(path).map_err(io)?;
    write_csv(result, std::io::BufWriter::new(file)).map_err(io)
}
