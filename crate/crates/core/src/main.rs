use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use iab_sim::beamforming::{design_all, Architecture, Duplex};
use iab_sim::channel::taps_to_subcarriers;
use iab_sim::channel::LinkChannels;
use iab_sim::cli::{emit_csv, parse_config, write_csv, RunConfig};
use iab_sim::dump::{dump_beamformers, dump_taps};
use iab_sim::metrics::power_total;
use iab_sim::montecarlo::{run_sweep, Simulator, SweepAxis};
use iab_sim::quantization::{eta_of_bits, AdcModel};
use iab_sim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "iab-sim",
    version,
    about = "Full-duplex wideband mmWave IAB link simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set channel.K=32`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output path (CSV file; a directory for `single`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores, 1 runs sequentially.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Comma list from fd-hyb, fd-dig, hd-hyb, hd-dig, bound; `@bits`
    /// pins a resolution, e.g. `fd-hyb@inf`.
    #[arg(long, global = true)]
    scenarios: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sum spectral efficiency against SNR.
    SweepSnr(Common),
    /// Sum spectral efficiency against ADC resolution.
    SweepBits(Common),
    /// One channel realization with a full dump of channels and beamformers.
    Single(Common),
    /// Receiver power model per ADC resolution.
    Power(Common),
}

fn load(c: &Common) -> Result<RunConfig> {
    let mut overrides = c.overrides.clone();
    if let Some(t) = c.trials {
        overrides.push(format!("sweep.trials={t}"));
    }
    if let Some(s) = c.seed {
        overrides.push(format!("sweep.seed={s}"));
    }
    if let Some(w) = c.workers {
        overrides.push(format!("sweep.workers={w}"));
    }
    if let Some(s) = &c.scenarios {
        overrides.push(format!("sweep.scenarios=\"{s}\""));
    }
    parse_config(c.config.as_deref(), &overrides)
}

fn sweep(c: &Common, axis: SweepAxis) -> Result<()> {
    let cfg = load(c)?;
    let spec = cfg.sweep_spec(axis);
    let scenarios = cfg.scenarios()?;
    info!(
        "{} sweep: {} values × {} scenarios × {} trials",
        axis.name(),
        spec.values.len(),
        scenarios.len(),
        spec.trials
    );
    let result = run_sweep(&spec, &scenarios, &cfg.sim)?;
    match &c.out {
        Some(path) => emit_csv(&result, path),
        None => write_csv(&result, io::stdout().lock()).map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn single(c: &Common) -> Result<()> {
    let cfg = load(c)?;
    let sim = Simulator::new(cfg.sim.clone())?;
    let (hb, ha, hsi) = sim.draw_taps(cfg.seed)?;
    let k = cfg.sim.channel.subcarriers;
    let channels = LinkChannels {
        backhaul: taps_to_subcarriers(&hb, k)?,
        access: taps_to_subcarriers(&ha, k)?,
        si: taps_to_subcarriers(&hsi, k)?,
    };
    let mut trial = sim.trial_with_channels(cfg.seed, channels.clone())?;
    let mut stdout = io::stdout().lock();
    let io_err = |source| Error::Io {
        path: "<stdout>".into(),
        source,
    };
    for sc in cfg.scenarios()? {
        let r = trial.evaluate(&sc, cfg.sim.snr_db)?;
        writeln!(stdout, "{r}").map_err(io_err)?;
    }
    if let Some(dir) = &c.out {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        dump_taps(dir, [("backhaul", &hb), ("access", &ha), ("si", &hsi)])?;
        let powers = cfg.sim.powers(cfg.sim.snr_db);
        let adc = AdcModel::new(cfg.sim.adc_bits)?;
        for arch in [Architecture::Hybrid, Architecture::AllDigital] {
            let beams = design_all(
                &channels,
                &cfg.sim.link,
                arch,
                sim.codebooks(),
                &powers,
                &adc,
                &adc,
                Duplex::Full,
                &cfg.sim.aqnm,
            )?;
            let sub = dir.join(arch.tag());
            fs::create_dir_all(&sub).map_err(|source| Error::Io {
                path: sub.display().to_string(),
                source,
            })?;
            dump_beamformers(&sub, &beams)?;
        }
        info!("dumped channels and beamformers to {}", dir.display());
    }
    Ok(())
}

fn power(c: &Common) -> Result<()> {
    let cfg = load(c)?;
    let s = &cfg.sim;
    let mut out =
        String::from("bits,eta,rho_adc_w,iab_digital_w,iab_hybrid_w,ue_digital_w,ue_hybrid_w\n");
    for &b in &cfg.bits_values {
        let m = s.power.with_resolution(b);
        out.push_str(&format!(
            "{b},{},{},{},{},{},{}\n",
            eta_of_bits(b)?,
            m.rho_adc(),
            power_total(Architecture::AllDigital, s.n_iab_rx, s.link.rf_iab_rx, &m),
            power_total(Architecture::Hybrid, s.n_iab_rx, s.link.rf_iab_rx, &m),
            power_total(Architecture::AllDigital, s.n_ue, s.link.rf_ue, &m),
            power_total(Architecture::Hybrid, s.n_ue, s.link.rf_ue, &m),
        ));
    }
    match &c.out {
        Some(p) => fs::write(p, out).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        }),
        None => io::stdout()
            .write_all(out.as_bytes())
            .map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SweepSnr(c) => sweep(c, SweepAxis::SnrDb),
        Command::SweepBits(c) => sweep(c, SweepAxis::Bits),
        Command::Single(c) => single(c),
        Command::Power(c) => power(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
