//! Empirical constant of the asymptotic remainder.
//!
//! `|j_α(x) - j̃_α(x)| ≤ K(α) x^{-α-3/2}`: the `O(·)` constant is measured as
//! the maximum of `x^{α+3/2} |j_α - j̃_α|` over a log-spaced grid on
//! `[5, 200]`, with `j_α` from the extended-precision series, and inflated
//! by 1% to cover values between grid points.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::hiprec::j_reference;
use super::{j_tilde, BesselOrder};
use crate::error::Result;

pub const CALIBRATION_RANGE: (f64, f64) = (5.0, 200.0);
const GRID_POINTS: usize = 2001;
const MARGIN: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// Crossover into the large-argument representation of the evaluator.
    pub x0: f64,
}

impl Calibration {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Log-spaced calibration abscissae.
pub fn calibration_grid() -> Vec<f64> {
    let (lo, hi) = CALIBRATION_RANGE;
    let ratio = (hi / lo).ln();
    (0..GRID_POINTS)
        .map(|i| lo * (ratio * i as f64 / (GRID_POINTS - 1) as f64).exp())
        .collect()
}

/// Compute the calibration for one order (uncached).
pub fn calibrate(alpha: f64) -> Result<Calibration> {
    let order = BesselOrder::new(alpha)?;
    let mut worst: f64 = 0.0;
    for x in calibration_grid() {
        let diff = (j_reference(alpha, x) - j_tilde(&order, x)?).abs();
        worst = worst.max(diff * x.powf(alpha + 1.5));
    }
    Ok(Calibration {
        alpha,
        k: MARGIN * worst,
        x0: order.crossover(),
    })
}

fn cache() -> &'static Mutex<HashMap<u64, Calibration>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Calibration>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Calibration for `alpha`, computed once per process and then shared.
pub fn calibration(alpha: f64) -> Result<Calibration> {
    if let Some(c) = cache().lock().expect("cache lock").get(&alpha.to_bits()) {
        return Ok(*c);
    }
    let cal = calibrate(alpha)?;
    cache()
        .lock()
        .expect("cache lock")
        .entry(alpha.to_bits())
        .or_insert(cal);
    Ok(cal)
}

/// Calibration table for several orders as a JSON array.
pub fn table_json(alphas: &[f64]) -> Result<String> {
    let table = alphas
        .iter()
        .map(|&a| calibration(a))
        .collect::<Result<Vec<_>>>()?;
    Ok(serde_json::to_string_pretty(&table)?)
}
