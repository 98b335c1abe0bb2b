//! Config files, scenario runs, sweeps and export.

pub mod config;
pub mod output;
pub mod phase;
pub mod probe;
pub mod scenario;
pub mod sweep;

pub use config::{
    load_config, parse_config, write_config, Config, ConfigError, Format, LoadedConfig,
    ParamName, ScenarioConfig, SweepAxis, SweepConfig, Target,
};
pub use output::{write_scenario, EquilibriaReport, Meta};
pub use phase::{phase_plot, PhasePlot};
pub use probe::{self_check, ProbeReport};
pub use scenario::{run_scenario, Match, RunResult, RunStatus, ScenarioResult, MATCH_TOL};
pub use sweep::{run_sweep, SweepCell, SweepResult};
