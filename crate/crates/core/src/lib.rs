//! Slot-level uplink simulator for reduced-capability NR devices at 28 GHz
//! in an indoor factory.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: device profiles, scenario geometry and network drops
//! - [`channel`]: InF LOS probability, pathloss, shadowing and fast fading
//! - [`phy`]: link budget, MCS tables, link adaptation, TBS and BLER
//! - [`mac`]: slot clock, queues, round-robin TDMA scheduling and HARQ
//! - [`traffic`]: CBR video and Poisson FTP sources
//! - [`energy`]: device power model and energy ledgers
//! - [`engine`]: the discrete-event loop for one drop
//! - [`metrics`], [`campaign`]: aggregation and the results bundle

pub mod campaign;
pub mod channel;
pub mod config;
pub mod energy;
pub mod engine;
pub mod error;
pub mod mac;
pub mod metrics;
pub mod model;
pub mod phy;
pub mod rng;
pub mod time;
pub mod traffic;

pub use campaign::{campaign, CampaignOptions, CampaignResults, Manifest, ResultRow};
pub use config::{MetricsConfig, SimConfig};
pub use engine::{run, run_detailed, RunOptions, RunOutput};
pub use error::{Error, Result};
pub use metrics::{aggregate, MetricsRecord, RoleMetrics};
pub use model::{
    build_drop, named_profile, sweep_variants, DeviceProfile, Drop, InfVariant, ProfileName, Role, Scenario,
};
pub use time::SimTime;
