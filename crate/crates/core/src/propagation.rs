//! Single-photon wavepacket propagation through the EIT medium.
//!
//! A pulse is a uniformly sampled complex envelope `a(t)` (time in ns). It is
//! filtered in the frequency domain by the medium's amplitude transfer
//! function. With rustfft's forward transform `Σ a e^{−iνt}`, a component at
//! FFT frequency `ν` evolves as `e^{+iνt}`, i.e. it sits at optical detuning
//! `Δ = −ν` relative to the carrier. The transfer function is evaluated there.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optical_response::transfer_amplitude;
use crate::types::{AngularFreq, LadderParams};

pub const MIN_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    /// Time of the first sample (ns).
    pub t0: f64,
    /// Sample spacing (ns).
    pub dt: f64,
    pub amplitude: Vec<Complex64>,
}

impl Pulse {
    pub fn new(t0: f64, dt: f64, amplitude: Vec<Complex64>) -> Result<Self> {
        let n = amplitude.len();
        if n < MIN_SAMPLES || !n.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "pulse length must be a power of two >= {MIN_SAMPLES}, got {n}"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) || !t0.is_finite() {
            return Err(Error::InvalidParams(format!(
                "bad time axis t0={t0}, dt={dt}"
            )));
        }
        if amplitude
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidParams("pulse amplitude is not finite".into()));
        }
        Ok(Pulse { t0, dt, amplitude })
    }

    pub fn len(&self) -> usize {
        self.amplitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitude.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `Σ |a|² dt`.
    pub fn energy(&self) -> f64 {
        self.amplitude.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt
    }

    /// Total time window `N·dt` (ns).
    pub fn window(&self) -> f64 {
        self.dt * self.len() as f64
    }

    /// Intensity-weighted mean time (ns).
    pub fn centroid(&self) -> f64 {
        let w: f64 = self.amplitude.iter().map(|z| z.norm_sqr()).sum();
        self.amplitude
            .iter()
            .enumerate()
            .map(|(i, z)| z.norm_sqr() * self.time(i))
            .sum::<f64>()
            / w
    }

    /// FFT frequency spacing expressed as an angular frequency in 2π×MHz.
    pub fn frequency_resolution(&self) -> AngularFreq {
        AngularFreq::from_rad_per_ns(TAU / self.window())
    }

    /// Optical detuning of each FFT bin (in FFT order).
    pub fn bin_detunings(&self) -> Vec<AngularFreq> {
        let n = self.len();
        let dnu = TAU / self.window();
        (0..n)
            .map(|k| {
                let kk = if k < n / 2 {
                    k as f64
                } else {
                    k as f64 - n as f64
                };
                AngularFreq::from_rad_per_ns(-kk * dnu)
            })
            .collect()
    }

    /// Unnormalised forward spectrum (FFT order).
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.amplitude.clone();
        FftPlanner::new()
            .plan_fft_forward(buf.len())
            .process(&mut buf);
        buf
    }

    /// `(detuning, |A|²·dt/N)` pairs sorted by detuning. The normalisation
    /// makes the sum equal the time-domain energy.
    pub fn power_spectrum(&self) -> Vec<(AngularFreq, f64)> {
        let n = self.len() as f64;
        let mut out: Vec<(AngularFreq, f64)> = self
            .bin_detunings()
            .into_iter()
            .zip(self.spectrum())
            .map(|(d, a)| (d, a.norm_sqr() * self.dt / n))
            .collect();
        out.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0));
        out
    }
}

/// Heralded signal photon with a one-sided exponential envelope
/// `a(t) = exp(−Γ(t − t_rise)/2)` for `t ≥ t_rise`, whose power spectrum is a
/// Lorentzian of FWHM `bandwidth`. The rise sits at 10 % of the window and the
/// peak amplitude is 1.
pub fn biphoton_pulse(bandwidth: AngularFreq, n: usize, dt: f64) -> Result<Pulse> {
    if !(bandwidth.0 > 0.0 && bandwidth.0.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "bandwidth must be > 0, got {}",
            bandwidth.0
        )));
    }
    let rise = n / 10;
    let rate = bandwidth.rad_per_ns();
    let amplitude = (0..n)
        .map(|i| {
            if i < rise {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new((-0.5 * rate * dt * (i - rise) as f64).exp(), 0.0)
            }
        })
        .collect();
    Pulse::new(0.0, dt, amplitude)
}

/// Time at which `|a|²` of a [`biphoton_pulse`] has fallen to 1/e² of its
/// peak, measured from the rise (ns).
pub fn biphoton_decay_time(bandwidth: AngularFreq) -> f64 {
    2.0 / bandwidth.rad_per_ns()
}

/// Shortest window (ns) that resolves the EIT feature, i.e. whose frequency
/// spacing is at most γrg/5. `None` when γrg = 0 (no constraint).
pub fn required_window_ns(p: &LadderParams) -> Option<f64> {
    let grg = p.gamma_rg();
    if grg > 0.0 {
        Some(TAU / AngularFreq(grg / 5.0).rad_per_ns())
    } else {
        None
    }
}

/// Checks that the pulse window resolves the narrowest EIT feature.
pub fn check_resolution(pulse: &Pulse, p: &LadderParams) -> Result<()> {
    let grg = p.gamma_rg();
    if grg > 0.0 {
        let resolution = pulse.frequency_resolution().0;
        let limit = grg / 5.0;
        if resolution > limit * (1.0 + 1e-12) {
            return Err(Error::ResolutionTooCoarse {
                resolution,
                limit,
                min_window_ns: required_window_ns(p).unwrap_or(0.0),
            });
        }
    }
    Ok(())
}

/// Filters the pulse through the medium: `out(ω) = t(ω)·in(ω)`.
///
/// The incoherent offset `a0` does not enter. See [`check_resolution`] for
/// the window needed to resolve narrow transparency windows.
pub fn propagate(pulse: &Pulse, p: &LadderParams) -> Result<Pulse> {
    p.validate()?;
    let n = pulse.len();
    let mut buf = pulse.spectrum();
    for (a, dw) in buf.iter_mut().zip(pulse.bin_detunings()) {
        *a *= transfer_amplitude(dw, p)?.amplitude;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for a in buf.iter_mut() {
        *a *= scale;
    }
    Ok(Pulse {
        t0: pulse.t0,
        dt: pulse.dt,
        amplitude: buf,
    })
}

/// Coincidence counts binned in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_start: f64,
    pub bin_width: f64,
    pub counts: Vec<f64>,
}

impl Histogram {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|i| self.bin_start + self.bin_width * (i as f64 + 0.5))
            .collect()
    }
}

/// Distributes `total_counts` over time bins in proportion to `∫|a|² dt`.
/// Each sample is treated as constant over `[t_i, t_i + dt)`; bins start at
/// the first sample and cover the whole window.
pub fn coincidence_histogram(
    pulse: &Pulse,
    total_counts: f64,
    bin_width: f64,
) -> Result<Histogram> {
    if !(total_counts > 0.0) {
        return Err(Error::InvalidParams("total_counts must be > 0".into()));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "bin_width must be > 0, got {bin_width}"
        )));
    }
    let energy = pulse.energy();
    if !(energy > 0.0) {
        return Err(Error::InvalidParams("pulse carries no energy".into()));
    }
    let window = pulse.window();
    let nbins = ((window / bin_width) - 1e-9).ceil().max(1.0) as usize;
    let mut counts = vec![0.0; nbins];
    for (i, z) in pulse.amplitude.iter().enumerate() {
        let w = z.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let (lo, hi) = (i as f64 * pulse.dt, (i + 1) as f64 * pulse.dt);
        let first = ((lo / bin_width).floor() as usize).min(nbins - 1);
        let last = (((hi / bin_width).ceil() as usize).max(first + 1)).min(nbins);
        for (b, c) in counts.iter_mut().enumerate().take(last).skip(first) {
            let (blo, bhi) = (b as f64 * bin_width, (b + 1) as f64 * bin_width);
            let bhi = if b == nbins - 1 { bhi.max(window) } else { bhi };
            let overlap = (hi.min(bhi) - lo.max(blo)).max(0.0);
            *c += w * overlap;
        }
    }
    let scale = total_counts / counts.iter().sum::<f64>();
    for c in counts.iter_mut() {
        *c *= scale;
    }
    Ok(Histogram {
        bin_start: pulse.t0,
        bin_width,
        counts,
    })
}

/// Waveform-level switch contrast `1 − E_gate/E_eit`, where `E_x` is the
/// transmitted energy with parameters `x`.
pub fn waveform_switch_contrast(
    pulse: &Pulse,
    p_eit: &LadderParams,
    p_gate: &LadderParams,
) -> Result<f64> {
    let e_eit = propagate(pulse, p_eit)?.energy();
    if e_eit < 1e-15 {
        return Err(Error::ZeroReference);
    }
    let e_gate = propagate(pulse, p_gate)?.energy();
    Ok(1.0 - e_gate / e_eit)
}
