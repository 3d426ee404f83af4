//! Blockade radius and gate-photon bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::AngularFreq;

/// Effective van der Waals coefficient and coupling-field settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockadeInput {
    /// C̄6 in 2π×GHz·μm⁶.
    pub c6: f64,
    pub delta_c: AngularFreq,
    pub omega_c: AngularFreq,
}

impl BlockadeInput {
    pub fn validate(&self) -> Result<()> {
        if !(self.c6.is_finite() && self.c6 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "c6 must be > 0, got {}",
                self.c6
            )));
        }
        if !(self.omega_c.0.is_finite() && self.omega_c.0 >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "omega_c must be >= 0, got {}",
                self.omega_c.0
            )));
        }
        if !self.delta_c.0.is_finite() {
            return Err(Error::InvalidParams("delta_c is not finite".into()));
        }
        Ok(())
    }

    /// `sqrt((2Δc)² + Ωc²)` in 2π×MHz.
    pub fn linewidth_scale(&self) -> f64 {
        (4.0 * self.delta_c.0 * self.delta_c.0 + self.omega_c.0 * self.omega_c.0).sqrt()
    }
}

/// Blockade radius `|C6 / sqrt((2Δc)² + Ωc²)|^{1/6}` in μm.
pub fn blockade_radius(b: &BlockadeInput) -> Result<f64> {
    b.validate()?;
    let scale = b.linewidth_scale();
    if scale < 1e-12 {
        return Err(Error::DegenerateDenominator { value: scale });
    }
    // GHz → MHz
    Ok((b.c6 * 1e3 / scale).abs().powf(1.0 / 6.0))
}

/// `c6_ref·(n/n_ref)¹¹`.
///
/// Approximate: the n¹¹ law ignores quantum-defect and Förster-resonance
/// structure, so per-state C6 values should be preferred when known.
pub fn c6_scaled(n: u32, c6_ref: f64, n_ref: u32) -> Result<f64> {
    if n < 20 || n_ref < 20 {
        return Err(Error::InvalidParams(format!(
            "principal quantum numbers must be >= 20 (n={n}, n_ref={n_ref})"
        )));
    }
    Ok(c6_ref * (n as f64 / n_ref as f64).powi(11))
}

/// Expected number of gate photons inside one blockade sphere.
///
/// Slow-light transit model: photons arriving at `flux` (per μs) spend
/// `2·r_b·group_delay_per_length` (ns) crossing a sphere of radius `r_b` (μm).
pub fn photons_per_sphere(flux: f64, r_b: f64, group_delay_per_length: f64) -> Result<f64> {
    for (name, v) in [
        ("flux", flux),
        ("r_b", r_b),
        ("group_delay_per_length", group_delay_per_length),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
        }
    }
    let transit_us = 2.0 * r_b * group_delay_per_length * 1e-3;
    Ok(flux * transit_us)
}
