use std::path::Path;

use memxbar_core::analysis::{
    compute_bandwidth, compute_energy, ideal_columns, monte_carlo, run_sweep, simulate_columns, Bandwidth,
    SweepOptions,
};
use memxbar_core::ideal::dot_product_error;
use memxbar_core::neuron::{builtin_presets, fit_sigmoid, sigmoid};
use memxbar_core::{CrossbarConfig, OutputUnit};

use crate::config::{Conductance, Resolved, RunConfig};
use crate::output::{Cell, Report};
use crate::CliError;

pub fn execute(command: &str, cfg: &RunConfig, r: &Resolved) -> Result<Report, CliError> {
    match command {
        "dotprod" => dotprod(r),
        "sweep" => sweep(cfg, r),
        "bandwidth" => bandwidth(cfg, r),
        "energy" => energy(cfg, r),
        "montecarlo" => montecarlo(cfg, r),
        "fit-sigmoid" => fit(cfg),
        "neuron-transfer" => transfer(cfg, r),
        "presets" => Ok(presets()),
        other => unreachable!("unknown subcommand {other}"),
    }
}

fn crossbar(r: &Resolved) -> Result<(&CrossbarConfig, &[f64]), CliError> {
    r.crossbar
        .as_ref()
        .map(|(c, d)| (c, d.as_slice()))
        .ok_or_else(|| CliError::Missing("this subcommand needs a [crossbar] block in the config".into()))
}

fn unit_suffix(unit: OutputUnit) -> &'static str {
    match unit {
        OutputUnit::Volts => "v",
        OutputUnit::Amperes => "a",
    }
}

fn dotprod(r: &Resolved) -> Result<Report, CliError> {
    let (cfg, drive) = crossbar(r)?;
    let ideal = ideal_columns(cfg, drive)?;
    let sim = simulate_columns(cfg, drive)?;
    let mut rep = Report::new(&["column", "ideal_a", "simulated_a", "rel_diff"]);
    for (j, (&i, &s)) in ideal.column_currents.iter().zip(&sim.column_currents).enumerate() {
        let rel = if i == 0.0 { (s - i).abs() } else { ((s - i) / i).abs() };
        rep.row(vec![j.into(), i.into(), s.into(), rel.into()]);
    }
    rep.scalar("mode", cfg.mode.to_string());
    rep.scalar("error", dot_product_error(&sim, &ideal)?);
    Ok(rep)
}

fn sweep(cfg: &RunConfig, r: &Resolved) -> Result<Report, CliError> {
    let (xb, drive) = crossbar(r)?;
    let (axis, metrics) = r
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Missing("sweep needs [analysis.sweep] or --param/--values".into()))?;
    let opts = SweepOptions {
        bandwidth: cfg.analysis.bandwidth.options,
        energy: cfg.analysis.energy,
    };
    let seed = matches!(
        cfg.crossbar.as_ref().map(|c| &c.conductance),
        Some(Conductance::Random { .. })
    )
    .then_some(cfg.analysis.seed);
    let res = run_sweep(xb, drive, axis, metrics, &opts)?.with_seed(seed);

    let mut headers = vec![axis.param.header()];
    headers.extend(res.metrics.iter().map(|c| c.metric.header().to_string()));
    let mut rep = Report {
        headers,
        ..Report::default()
    };
    for (k, &x) in res.axis_values.iter().enumerate() {
        let mut row = vec![Cell::Num(x)];
        row.extend(res.metrics.iter().map(|c| Cell::Num(c.values[k])));
        rep.row(row);
    }
    rep.scalar("points", res.axis_values.len());
    rep.warnings = res.warnings;
    Ok(rep)
}

fn bandwidth(cfg: &RunConfig, r: &Resolved) -> Result<Report, CliError> {
    let (xb, drive) = crossbar(r)?;
    let cols: Vec<usize> = match cfg.analysis.bandwidth.column {
        Some(c) => vec![c],
        None => (0..xb.n_cols()).collect(),
    };
    let mut rep = Report::new(&["column", "bandwidth_hz", "bounded", "multi_pole"]);
    for j in cols {
        let bw = compute_bandwidth(xb, drive, j, &cfg.analysis.bandwidth.options)?;
        if bw.multi_pole() {
            rep.warnings
                .push(format!("column {j}: multi-pole response, first crossing used"));
        }
        let bounded = matches!(bw, Bandwidth::Finite { .. });
        rep.row(vec![j.into(), bw.hz().into(), bounded.into(), bw.multi_pole().into()]);
    }
    Ok(rep)
}

fn energy(cfg: &RunConfig, r: &Resolved) -> Result<Report, CliError> {
    let (xb, drive) = crossbar(r)?;
    let e = compute_energy(xb, drive, &cfg.analysis.energy)?;
    let mut rep = Report::new(&["energy_j", "duration_s", "settle_time_s", "dt_s", "steps"]);
    rep.row(vec![
        e.energy.into(),
        e.duration.into(),
        e.settle_time.into(),
        e.dt.into(),
        e.steps.into(),
    ]);
    Ok(rep)
}

fn montecarlo(cfg: &RunConfig, r: &Resolved) -> Result<Report, CliError> {
    let (xb, drive) = crossbar(r)?;
    let (perturbation, observable) = &r.montecarlo;
    let observable = observable.as_ref().ok_or_else(|| {
        CliError::Missing("montecarlo observable fitted_sigmoid needs a [neuron] block".into())
    })?;
    let mc = &cfg.analysis.montecarlo;
    let stats = monte_carlo(xb, drive, perturbation, mc.n_samples, cfg.analysis.seed, observable)?;
    let mut rep = Report::new(&["parameter", "nominal", "mean", "std"]);
    for p in &stats.parameters {
        rep.row(vec![p.name.as_str().into(), p.nominal.into(), p.mean.into(), p.std.into()]);
    }
    rep.scalar("n_samples", stats.n_samples);
    rep.scalar("seed", stats.seed);
    rep.scalar("clamped_fraction", stats.clamped_fraction);
    rep.warnings.extend(stats.warning);
    Ok(rep)
}

fn read_samples(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Missing(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Invariant(format!("{}: {e}", path.display())))?;
        let parsed = (rec.len() == 2)
            .then(|| Some((rec[0].parse::<f64>().ok()?, rec[1].parse::<f64>().ok()?)))
            .flatten();
        match parsed {
            Some(p) => out.push(p),
            None if k == 0 => {} // header
            None => {
                let line = rec.position().map_or(0, |p| p.line());
                return Err(CliError::Invariant(format!(
                    "{} line {line}: expected two numbers, got {:?}",
                    path.display(),
                    rec.iter().collect::<Vec<_>>()
                )));
            }
        }
    }
    Ok(out)
}

fn fit(cfg: &RunConfig) -> Result<Report, CliError> {
    let block = cfg
        .analysis
        .fit
        .as_ref()
        .ok_or_else(|| CliError::Missing("fit-sigmoid needs --input or [analysis.fit] input".into()))?;
    let samples = read_samples(&block.input)?;
    let f = fit_sigmoid(&samples, block.unit)?;
    let mut rep = Report::new(&["a", "b", "c", "rmse", "unit"]);
    rep.row(vec![
        f.params.a.into(),
        f.params.b.into(),
        f.params.c.into(),
        f.params.rmse.into(),
        f.params.unit.to_string().into(),
    ]);
    rep.scalar("samples", samples.len());
    rep.scalar("initial_rmse", f.initial_rmse);
    rep.scalar("iterations", f.iterations);
    rep.scalar("converged", f.converged);
    if !f.converged {
        rep.warnings.push("iteration budget ran out before convergence".into());
    }
    Ok(rep)
}

fn transfer(cfg: &RunConfig, r: &Resolved) -> Result<Report, CliError> {
    let neuron = r
        .neuron
        .ok_or_else(|| CliError::Missing("neuron-transfer needs a [neuron] block or --preset".into()))?;
    let currents = match cfg.analysis.transfer.as_ref().and_then(|t| t.currents.clone()) {
        Some(c) => c,
        None => {
            let (xb, drive) = crossbar(r)?;
            simulate_columns(xb, drive)?.column_currents
        }
    };
    let out = format!("output_{}", unit_suffix(neuron.unit));
    let mut rep = Report::new(&["index", "current_a", &out]);
    for (k, &i) in currents.iter().enumerate() {
        rep.row(vec![k.into(), i.into(), sigmoid(&neuron, i).into()]);
    }
    if let Some(p) = &r.preset {
        rep.scalar("preset", p.as_str());
    }
    Ok(rep)
}

fn presets() -> Report {
    let mut rep = Report::new(&[
        "label",
        "a",
        "b",
        "c",
        "rmse",
        "unit",
        "z_in_ohm",
        "bandwidth_hz",
        "power_w",
        "vdd_v",
    ]);
    for p in builtin_presets() {
        rep.row(vec![
            p.label.as_str().into(),
            p.params.a.into(),
            p.params.b.into(),
            p.params.c.into(),
            p.params.rmse.into(),
            p.params.unit.to_string().into(),
            p.z_in.into(),
            p.bandwidth.into(),
            p.power.into(),
            p.vdd.into(),
        ]);
    }
    rep
}
