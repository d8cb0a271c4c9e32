mod common;

use common::*;
use memxbar_core::analysis::{
    circuit_error, run_sweep, simulate_columns, Metric, SweepAxis, SweepOptions, SweepParam,
};
use memxbar_core::network::build_system;
use memxbar_core::neuron::{find_preset, neuron_transfer};
use memxbar_core::solver::solve_ac;
use memxbar_core::{DriveMode, Grid, MemristorDevice, Parasitics};

#[test]
fn neuron_output_is_monotone_in_each_input() {
    let cfg = trend_config(trend_parasitics(), DriveMode::Voltage);
    let preset = find_preset("cm-1.8").unwrap();
    let base = trend_drive();
    // centre the neuron on the column's operating range
    let scale = preset.params.c / simulate_columns(&cfg, &base).unwrap().column_currents[3];
    for row in [0, 4, 7] {
        let mut outputs = Vec::new();
        for k in 0..25 {
            let mut d: Vec<f64> = base.iter().map(|v| v * scale * 0.5).collect();
            d[row] = base[row] * scale * (0.2 + 0.1 * k as f64);
            let i = simulate_columns(&cfg, &d).unwrap().column_currents[3];
            outputs.push(neuron_transfer(&preset, i));
        }
        // b < 0: output rises with the column current
        assert!(outputs.windows(2).all(|w| w[1] >= w[0]), "row {row}: {outputs:?}");
        assert!(outputs.last() > outputs.first());
    }
}

#[test]
fn sweep_reruns_from_its_metadata() {
    let cfg = trend_config(trend_parasitics(), DriveMode::Voltage);
    let axis = SweepAxis { param: SweepParam::RT, values: log_space(10.0, 1e3, 4) };
    let first = run_sweep(&cfg, &trend_drive(), &axis, &[Metric::ErrorVm, Metric::Energy], &SweepOptions::default()).unwrap();
    let m = &first.metadata;
    let again = run_sweep(&m.config, &m.drive, &m.axis, &m.metrics, &m.options).unwrap();
    assert_eq!(first, again);
}

#[test]
fn single_pole_response_falls_with_frequency() {
    let cfg = config(
        MemristorDevice::new(1e-9, 1e-2, 1.0, 1e4).unwrap(),
        Grid::filled(1, 1, 1e-4).unwrap(),
        Parasitics { r_p: 0.0, c_p: 1e-12, r_t: 0.0 },
        DriveMode::Current,
    );
    let sys = build_system(&cfg, &[1e-6]).unwrap();
    let mags: Vec<f64> = log_space(1.0, 1e12, 40)
        .into_iter()
        .map(|f| solve_ac(&sys, f).unwrap().column_phasors[0].norm())
        .collect();
    assert!(mags.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn error_grows_with_terminal_resistance() {
    let base = trend_config(trend_parasitics(), DriveMode::Voltage);
    let errs: Vec<f64> = log_space(1.0, 1e4, 9)
        .into_iter()
        .map(|r| circuit_error(&SweepParam::RT.apply(&base, r).unwrap(), &trend_drive()).unwrap())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] > w[0]), "{errs:?}");
}

#[test]
fn current_mode_error_vanishes_without_parasitics() {
    let device = keystone_device();
    let mut r = rng(3);
    for n in SIZES {
        let g = normalized_grid(&mut r, n, &device);
        let cfg = config(device, g, Parasitics::IDEAL, DriveMode::Current);
        let d = random_drive(&mut r, n, 1e-6);
        assert!(circuit_error(&cfg, &d).unwrap() < 1e-12);
    }
}
