//! Analytic EIT susceptibility, transmission spectra and the complex
//! amplitude transfer function of the medium.
//!
//! The physical susceptibility is `χ = (α0/k0)·f` with the dimensionless
//! factor
//!
//! ```text
//! f(Δw) = 4(x + iγrg)γeg / (Ωc² − 4(x + iγrg)(x + iγeg)),   x = Δw + δΔ
//! ```
//!
//! Since `α0 = OD/L` and `k0 = w/c`, the propagation exponent
//! `(w/c)·Im χ·L` reduces to `OD·Im f`; the atom density, dipole moment and
//! wave vector never need to be evaluated.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{inverse_freq_to_ns, AngularFreq, LadderParams};

/// Dimensionless susceptibility factor `f = χ·k0/α0`.
pub fn chi_dimensionless(dw: AngularFreq, p: &LadderParams) -> Result<Complex64> {
    let geg = p.gamma_eg();
    let grg = p.gamma_rg();
    if !(geg > 0.0) {
        return Err(Error::InvalidParams(
            "gamma_eg = gamma_e + gamma_de must be > 0".into(),
        ));
    }
    let x = dw.0 + p.delta_shift.0;
    let a = Complex64::new(x, grg);
    let b = Complex64::new(x, geg);
    let oc = p.omega_c.0;
    let den = Complex64::new(oc * oc, 0.0) - 4.0 * a * b;
    if den.norm() < 1e-12 * geg * geg {
        return Err(Error::DividedPole {
            magnitude: den.norm(),
        });
    }
    Ok(4.0 * a * geg / den)
}

/// Signal transmission `exp(−OD·Im f) + a0`.
pub fn transmission(dw: AngularFreq, p: &LadderParams) -> Result<f64> {
    let f = chi_dimensionless(dw, p)?;
    Ok((-p.od * f.im).exp() + p.a0)
}

/// Detuning grid with per-point susceptibility and transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub detunings: Vec<AngularFreq>,
    pub chi_dimensionless: Vec<Complex64>,
    pub transmission: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// Index of the largest transmission value.
    pub fn argmax(&self) -> usize {
        self.transmission
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Indices of strict interior local minima of the transmission.
    pub fn local_minima(&self) -> Vec<usize> {
        let t = &self.transmission;
        (1..t.len().saturating_sub(1))
            .filter(|&i| t[i] < t[i - 1] && t[i] <= t[i + 1])
            .collect()
    }
}

/// `points` evenly spaced detunings from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, points: usize) -> Vec<AngularFreq> {
    if points == 1 {
        return vec![AngularFreq(start)];
    }
    let step = (stop - start) / (points - 1) as f64;
    (0..points)
        .map(|i| AngularFreq(start + step * i as f64))
        .collect()
}

pub fn check_grid(grid: &[AngularFreq]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::BadGrid(format!(
            "need at least 2 points, got {}",
            grid.len()
        )));
    }
    if let Some(i) = grid.iter().position(|w| !w.0.is_finite()) {
        return Err(Error::BadGrid(format!("point {i} is not finite")));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1].0 <= w[0].0) {
        return Err(Error::BadGrid(format!(
            "grid not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

/// Evaluates susceptibility and transmission on a strictly increasing grid.
pub fn spectrum(grid: &[AngularFreq], p: &LadderParams) -> Result<Spectrum> {
    check_grid(grid)?;
    p.validate()?;
    let mut chi = Vec::with_capacity(grid.len());
    let mut trans = Vec::with_capacity(grid.len());
    for &dw in grid {
        let f = chi_dimensionless(dw, p)?;
        chi.push(f);
        trans.push((-p.od * f.im).exp() + p.a0);
    }
    Ok(Spectrum {
        detunings: grid.to_vec(),
        chi_dimensionless: chi,
        transmission: trans,
    })
}

/// Amplitude transmission at one detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferSample {
    pub detuning: AngularFreq,
    pub amplitude: Complex64,
}

/// Field transfer `t = exp(i·OD·f/2)`, so `|t|² = exp(−OD·Im f)` and the
/// phase is `(OD/2)·Re f`. The background `a0` is not part of the coherent
/// response and is excluded.
pub fn transfer_amplitude(dw: AngularFreq, p: &LadderParams) -> Result<TransferSample> {
    if p.od == 0.0 {
        return Ok(TransferSample {
            detuning: dw,
            amplitude: Complex64::new(1.0, 0.0),
        });
    }
    let f = chi_dimensionless(dw, p)?;
    Ok(TransferSample {
        detuning: dw,
        amplitude: (Complex64::new(0.0, 0.5 * p.od) * f).exp(),
    })
}

/// Finite-difference step for [`group_delay`], 2π×0.001 MHz.
pub const GROUP_DELAY_STEP: f64 = 1e-3;

/// Group delay `τg = (OD/2)·d(Re f)/dΔw` in ns, by central difference.
pub fn group_delay(p: &LadderParams, dw: AngularFreq) -> Result<f64> {
    if p.od == 0.0 {
        return Ok(0.0);
    }
    let h = GROUP_DELAY_STEP;
    let fp = chi_dimensionless(AngularFreq(dw.0 + h), p)?;
    let fm = chi_dimensionless(AngularFreq(dw.0 - h), p)?;
    let slope = (fp.re - fm.re) / (2.0 * h);
    Ok(inverse_freq_to_ns(0.5 * p.od * slope))
}
