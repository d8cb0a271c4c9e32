//! Memristor crossbar dot-product engines with wire parasitics, terminal
//! resistance and behavioral sigmoid neurons.
//!
//! The pieces compose in one direction: a [`CrossbarConfig`] is laid out into
//! a netlist and assembled into a [`NodalSystem`], the [`solver`] turns that
//! into DC, AC or transient waveforms, and [`analysis`] builds bandwidth,
//! energy, sweeps and Monte Carlo on top. [`ideal`] holds the closed-form
//! references the circuit results are judged against.
//!
//! ```
//! use memxbar_core::{ideal, CrossbarConfig, DriveMode, Grid, MemristorDevice, Parasitics};
//! use memxbar_core::network::build_system;
//! use memxbar_core::solver::solve_dc;
//!
//! let g = Grid::from_rows(vec![vec![1e-4, 2e-4], vec![3e-4, 4e-4]])?;
//! let device = MemristorDevice::new(1e-6, 1e-3, 1.0, 1e4)?;
//! let cfg = CrossbarConfig::new(device, g.clone(), Parasitics::IDEAL, DriveMode::Voltage)?;
//! let dc = solve_dc(&build_system(&cfg, &[1.0, 0.5])?)?;
//! let reference = ideal::ideal_voltage_mode(&g, &[1.0, 0.5])?;
//! assert!((dc.column_currents[0] - reference.column_currents[0]).abs() < 1e-15);
//! # Ok::<(), memxbar_core::Error>(())
//! ```

pub mod analysis;
pub mod device;
pub mod error;
pub mod grid;
pub mod ideal;
pub mod network;
pub mod neuron;
pub mod solver;

pub use device::{DeviceState, MemristorDevice, Waveform};
pub use error::{Error, ErrorKind, Result};
pub use grid::Grid;
pub use ideal::IdealOutput;
pub use network::{CrossbarConfig, DriveMode, NodalSystem, Parasitics};
pub use neuron::{NeuronPreset, OutputUnit, SigmoidParams};
