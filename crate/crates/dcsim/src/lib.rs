//! Scenario files, CSV/JSON reports and the experiment commands around
//! [`dcsim_core`].

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

pub use error::CliError;

/// Scenarios shipped with the crate.
pub mod golden {
    pub const TABLE1_PLACEMENT: &str = include_str!("../scenarios/table1-placement.json");
    pub const CONSOLIDATION_DEMO: &str = include_str!("../scenarios/consolidation-demo.json");
    /// The demo with 9192 MB hosts, where a whole-VM drain fits.
    pub const CONSOLIDATION_DEMO_9192: &str =
        include_str!("../scenarios/consolidation-demo-9192.json");
}
