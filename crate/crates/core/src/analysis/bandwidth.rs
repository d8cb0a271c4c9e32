use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{build_system, CrossbarConfig, NodalSystem};
use crate::solver::{dominant_time_constant, solve_ac};

/// −3 dB bandwidth of one column current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bandwidth {
    Finite {
        hz: f64,
        /// The magnitude response rose somewhere below the crossing, so
        /// more than one pole (or a zero) shapes it; `hz` is the first
        /// crossing.
        multi_pole: bool,
    },
    /// No capacitance reaches the column, or the response never falls
    /// 3 dB within the search range.
    Unbounded,
}

impl Bandwidth {
    /// Hertz, with `Unbounded` as infinity.
    pub fn hz(&self) -> f64 {
        match *self {
            Bandwidth::Finite { hz, .. } => hz,
            Bandwidth::Unbounded => f64::INFINITY,
        }
    }

    pub fn multi_pole(&self) -> bool {
        matches!(self, Bandwidth::Finite { multi_pole: true, .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandwidthOptions {
    /// Relative width of the final bracket around the crossing.
    pub rel_tol: f64,
    /// Decades searched upward from three decades below the slowest pole.
    pub decades: u32,
}

impl Default for BandwidthOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-3,
            decades: 18,
        }
    }
}

fn magnitude(sys: &NodalSystem, f: f64, column: usize) -> Result<f64> {
    Ok(solve_ac(sys, f)?.column_phasors[column].norm())
}

/// Finds the first frequency where `|I_col(f)| / |I_col(0)|` drops to
/// `1/√2`: decade steps to bracket it, then geometric bisection.
pub fn compute_bandwidth(
    cfg: &CrossbarConfig,
    drive: &[f64],
    column: usize,
    options: &BandwidthOptions,
) -> Result<Bandwidth> {
    if column >= cfg.n_cols() {
        return Err(Error::invalid(format!(
            "column {column} out of range for {} columns",
            cfg.n_cols()
        )));
    }
    if !(options.rel_tol > 0.0 && options.rel_tol < 1.0) {
        return Err(Error::invalid(format!(
            "bandwidth rel_tol must lie in (0, 1), got {}",
            options.rel_tol
        )));
    }
    if cfg.parasitics.c_p == 0.0 {
        return Ok(Bandwidth::Unbounded);
    }
    let sys = build_system(cfg, drive)?;
    let Some(tau) = dominant_time_constant(&sys)? else {
        return Ok(Bandwidth::Unbounded);
    };
    let dc = magnitude(&sys, 0.0, column)?;
    if dc.is_nan() || dc <= 0.0 {
        return Err(Error::invalid(format!(
            "column {column} carries no DC current, its bandwidth is undefined"
        )));
    }
    let target = std::f64::consts::FRAC_1_SQRT_2;
    let ratio = |f: f64| -> Result<f64> { Ok(magnitude(&sys, f, column)? / dc) };

    let mut lo = 1e-3 / (2.0 * std::f64::consts::PI * tau);
    let mut prev = ratio(lo)?;
    let mut multi_pole = prev > 1.0 + 1e-9;
    if prev <= target {
        // a fast zero or resonance pulled the response down early
        multi_pole = true;
    }
    let mut hi = None;
    if prev > target {
        for _ in 0..options.decades {
            let f = lo * 10.0;
            let r = ratio(f)?;
            if r > prev * (1.0 + 1e-9) {
                multi_pole = true;
            }
            if r <= target {
                hi = Some(f);
                break;
            }
            lo = f;
            prev = r;
        }
    } else {
        hi = Some(lo);
        lo /= 10.0;
    }
    let Some(mut hi) = hi else {
        return Ok(Bandwidth::Unbounded);
    };

    while hi / lo - 1.0 > options.rel_tol {
        let mid = (lo * hi).sqrt();
        if ratio(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bandwidth::Finite {
        hz: (lo * hi).sqrt(),
        multi_pole,
    })
}
