#![allow(dead_code)]

use memxbar_core::ideal::normalize_row_conductances;
use memxbar_core::{CrossbarConfig, DriveMode, Grid, MemristorDevice, Parasitics};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SIZES: [usize; 4] = [1, 2, 4, 8];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn keystone_device() -> MemristorDevice {
    MemristorDevice::new(1e-5, 1e-3, 1.0, 1e4).unwrap()
}

pub fn random_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Grid {
    let data = (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect();
    Grid::new(rows, cols, data).unwrap()
}

pub fn random_drive(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.random_range(0.05..1.0)).collect()
}

/// Random conductances with every row renormalized to a common sum through
/// its last cell. Redraws until the common sum is reachable in every row.
pub fn normalized_grid(rng: &mut ChaCha8Rng, n: usize, device: &MemristorDevice) -> Grid {
    loop {
        let g = random_grid(rng, n, n, device.g_off, device.g_on);
        let fixed: Vec<f64> = (0..n).map(|i| g.row(i)[..n - 1].iter().sum()).collect();
        let lo = fixed.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + device.g_off;
        let hi = fixed.iter().cloned().fold(f64::INFINITY, f64::min) + device.g_on;
        if lo < hi {
            return normalize_row_conductances(&g, 0.5 * (lo + hi), n - 1, device).unwrap();
        }
    }
}

/// `count` keystone instances cycling through the sizes 1, 2, 4, 8.
pub fn keystone_configs(seed: u64, count: usize) -> Vec<(Grid, Vec<f64>)> {
    let mut r = rng(seed);
    (0..count)
        .map(|k| {
            let n = SIZES[k % SIZES.len()];
            let g = random_grid(&mut r, n, n, 1e-5, 1e-3);
            let v = random_drive(&mut r, n, 1.0);
            (g, v)
        })
        .collect()
}

pub fn config(device: MemristorDevice, g: Grid, p: Parasitics, mode: DriveMode) -> CrossbarConfig {
    CrossbarConfig::new(device, g, p, mode).unwrap()
}

/// Fixed 8×8 instance for the trend checks: conductances spread over a
/// decade, with room for a 10× scale in either direction inside the device
/// range.
pub fn trend_device() -> MemristorDevice {
    MemristorDevice::new(1e-9, 1e-3, 1.0, 1e4).unwrap()
}

pub fn trend_config(p: Parasitics, mode: DriveMode) -> CrossbarConfig {
    let g = random_grid(&mut rng(2024), 8, 8, 1e-7, 1e-6);
    config(trend_device(), g, p, mode)
}

pub fn trend_parasitics() -> Parasitics {
    Parasitics { r_p: 2.5, c_p: 1e-15, r_t: 1e3 }
}

pub fn trend_drive() -> Vec<f64> {
    random_drive(&mut rng(7), 8, 0.1)
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
        .collect()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 { 0.0 } else { (a - b).abs() / scale }
}

/// Largest deviation relative to the largest reference entry.
pub fn vec_rel_err(actual: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(actual.len(), reference.len());
    let scale = reference.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = actual
        .iter()
        .zip(reference)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale == 0.0 { diff } else { diff / scale }
}
