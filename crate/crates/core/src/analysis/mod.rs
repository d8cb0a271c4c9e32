//! Experiment harness: bandwidth, energy per computation, parameter sweeps
//! and behavioral Monte Carlo over crossbar instances.

mod bandwidth;
mod energy;
mod montecarlo;
mod sweep;

pub use bandwidth::{compute_bandwidth, Bandwidth, BandwidthOptions};
pub use energy::{compute_energy, EnergyOptions, EnergyReport, EnergyWindow};
pub use montecarlo::{monte_carlo, McObservable, McParameter, McStats, Perturbation};
pub use sweep::{run_sweep, Metric, MetricColumn, SweepAxis, SweepMetadata, SweepOptions, SweepParam, SweepResult};

use crate::error::Result;
use crate::ideal::{dot_product_error, ideal_current_mode, ideal_voltage_mode, IdealOutput};
use crate::network::{build_system, CrossbarConfig, DriveMode};
use crate::solver::solve_dc;

/// DC column currents of the physical crossbar.
pub fn simulate_columns(cfg: &CrossbarConfig, drive: &[f64]) -> Result<IdealOutput> {
    let sys = build_system(cfg, drive)?;
    IdealOutput::new(solve_dc(&sys)?.column_currents)
}

/// The closed-form output matching the configuration's drive mode.
pub fn ideal_columns(cfg: &CrossbarConfig, drive: &[f64]) -> Result<IdealOutput> {
    match cfg.mode {
        DriveMode::Voltage => ideal_voltage_mode(&cfg.conductances, drive),
        DriveMode::Current => ideal_current_mode(&cfg.conductances, drive),
    }
}

/// Relative dot-product error of the physical crossbar against its ideal.
pub fn circuit_error(cfg: &CrossbarConfig, drive: &[f64]) -> Result<f64> {
    dot_product_error(&simulate_columns(cfg, drive)?, &ideal_columns(cfg, drive)?)
}
