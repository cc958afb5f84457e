use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nrlight_core::model::{bandwidth_sweep_campaign, summary_campaign};
use nrlight_core::{
    campaign, named_profile, CampaignOptions, DeviceProfile, Error, InfVariant, ProfileName, Result,
    SimConfig,
};

#[derive(Parser)]
#[command(name = "nrlight", version, about = "Uplink system-level simulator for reduced-capability NR devices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one profile in one factory variant.
    Run {
        #[command(flatten)]
        common: Common,
        /// Built-in profile (nr-l-low, nr-l-mid, nr) or a label from the config.
        #[arg(long)]
        profile: String,
        #[arg(long, default_value = "dh")]
        variant: InfVariant,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        drops: Option<u32>,
        /// Simulated seconds per drop.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Run a multi-profile campaign over both factory variants.
    Campaign {
        #[command(flatten)]
        common: Common,
        /// Baseline plus the single-knob sweeps.
        #[arg(long, conflicts_with = "paper_fig3")]
        paper_fig2: bool,
        /// NR-L-Low, NR-L-Mid and NR side by side.
        #[arg(long)]
        paper_fig3: bool,
        #[arg(long)]
        drops: Option<u32>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Check a configuration file without running it.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores, 1 = serial).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Also write the per-device link budget to links.csv.
    #[arg(long)]
    link_dump: bool,
    /// Also write the per-slot transmission trace to slot_trace.csv.
    #[arg(long)]
    trace: bool,
}

impl Common {
    fn options(&self) -> CampaignOptions {
        CampaignOptions {
            workers: self.workers,
            link_dump: self.link_dump,
            slot_trace: self.trace,
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<SimConfig> {
    match path {
        Some(p) => SimConfig::load(p),
        None => Ok(SimConfig::default()),
    }
}

fn resolve_profile(cfg: &SimConfig, name: &str) -> Result<DeviceProfile> {
    if let Some(p) = cfg.profiles.iter().find(|p| p.label == name) {
        return Ok(p.clone());
    }
    name.parse::<ProfileName>()
        .map(named_profile)
        .map_err(|_| Error::config(format!("unknown profile '{name}'")))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, profile, variant, seed, drops, duration } => {
            let mut cfg = load_config(common.config.as_deref())?;
            if let Some(s) = seed {
                cfg.scenario.seed = s;
            }
            if let Some(d) = drops {
                cfg.scenario.num_drops = d;
            }
            if let Some(d) = duration {
                cfg.scenario.sim_duration_s = d;
            }
            let profile = resolve_profile(&cfg, &profile)?;
            let results = campaign(&cfg, &[profile], &[variant], &common.options())?;
            results.write_bundle(&common.out)?;
            for r in &results.summary {
                log::info!(
                    "{} {}: video {:.2} Mbps, data PRR {:.4}",
                    r.label,
                    r.inf_variant,
                    r.video.throughput_bps / 1e6,
                    r.data.prr
                );
            }
        }
        Command::Campaign { common, paper_fig2, paper_fig3, drops, duration } => {
            let mut cfg = load_config(common.config.as_deref())?;
            if let Some(d) = drops {
                cfg.scenario.num_drops = d;
            }
            if let Some(d) = duration {
                cfg.scenario.sim_duration_s = d;
            }
            let profiles = if paper_fig2 {
                bandwidth_sweep_campaign()
            } else if paper_fig3 {
                summary_campaign()
            } else if !cfg.profiles.is_empty() {
                cfg.profiles.clone()
            } else {
                return Err(Error::config(
                    "no profiles: pass --paper-fig2, --paper-fig3 or list [[profiles]] in the config",
                ));
            };
            let results = campaign(&cfg, &profiles, &InfVariant::ALL, &common.options())?;
            results.write_bundle(&common.out)?;
            log::info!("wrote {} runs to {}", results.runs.len(), common.out.display());
        }
        Command::Validate { config } => {
            let cfg = load_config(config.as_deref())?;
            for w in cfg.validate()? {
                println!("warning: {w}");
            }
            println!("ok (config hash {})", cfg.hash());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
