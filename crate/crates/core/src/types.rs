//! Physical parameter types.
//!
//! Every frequency-like quantity (Rabi frequency, detuning, linewidth, decay
//! rate) is an [`AngularFreq`] whose numeric value is in units of 2π×MHz, so
//! `AngularFreq(11.0)` is 2π×11 MHz. Conversion to rad/ns or rad/s happens
//! only where time enters (pulse propagation, group delay).

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angular frequency in units of 2π×MHz.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngularFreq(pub f64);

impl AngularFreq {
    pub const ZERO: AngularFreq = AngularFreq(0.0);

    /// `value` in 2π×MHz.
    pub const fn mhz(value: f64) -> Self {
        AngularFreq(value)
    }

    pub const fn value(self) -> f64 {
        self.0
    }

    /// Angular frequency in rad/ns.
    pub fn rad_per_ns(self) -> f64 {
        self.0 * TAU * 1e-3
    }

    pub fn from_rad_per_ns(w: f64) -> Self {
        AngularFreq(w / (TAU * 1e-3))
    }

    /// Angular frequency in rad/s.
    pub fn rad_per_s(self) -> f64 {
        self.0 * TAU * 1e6
    }
}

/// Converts a time expressed in units of 1/(2π×MHz) into nanoseconds.
pub fn inverse_freq_to_ns(t: f64) -> f64 {
    t * 1e3 / TAU
}

impl fmt::Display for AngularFreq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2π×{} MHz", self.0)
    }
}

impl Add for AngularFreq {
    type Output = AngularFreq;
    fn add(self, rhs: Self) -> Self {
        AngularFreq(self.0 + rhs.0)
    }
}

impl Sub for AngularFreq {
    type Output = AngularFreq;
    fn sub(self, rhs: Self) -> Self {
        AngularFreq(self.0 - rhs.0)
    }
}

impl Neg for AngularFreq {
    type Output = AngularFreq;
    fn neg(self) -> Self {
        AngularFreq(-self.0)
    }
}

impl Mul<f64> for AngularFreq {
    type Output = AngularFreq;
    fn mul(self, rhs: f64) -> Self {
        AngularFreq(self.0 * rhs)
    }
}

/// Optical and atomic rates of the g–e–r ladder system.
///
/// `gamma_e`/`gamma_r` are population decay rates of |e⟩ and |r⟩;
/// `gamma_de`/`gamma_dr` are pure coherence losses (collisions, stray fields,
/// and the interaction-induced dephasing that realises blockade).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LadderParams {
    pub omega_p: AngularFreq,
    pub omega_c: AngularFreq,
    pub delta_p: AngularFreq,
    pub delta_c: AngularFreq,
    pub gamma_e: AngularFreq,
    pub gamma_r: AngularFreq,
    pub gamma_de: AngularFreq,
    pub gamma_dr: AngularFreq,
    /// Optical depth (dimensionless).
    pub od: f64,
    /// Additive transmission offset (incoherent background).
    pub a0: f64,
    /// Frequency shift applied to the signal detuning.
    pub delta_shift: AngularFreq,
    /// Medium length in mm.
    pub length: f64,
}

impl Default for LadderParams {
    fn default() -> Self {
        LadderParams {
            omega_p: AngularFreq::ZERO,
            omega_c: AngularFreq::ZERO,
            delta_p: AngularFreq::ZERO,
            delta_c: AngularFreq::ZERO,
            gamma_e: AngularFreq::ZERO,
            gamma_r: AngularFreq::ZERO,
            gamma_de: AngularFreq::ZERO,
            gamma_dr: AngularFreq::ZERO,
            od: 0.0,
            a0: 0.0,
            delta_shift: AngularFreq::ZERO,
            length: 1.0,
        }
    }
}

impl LadderParams {
    /// Decay rate of the g–e coherence, Γe + γde.
    pub fn gamma_eg(&self) -> f64 {
        self.gamma_e.0 + self.gamma_de.0
    }

    /// Decay rate of the g–r coherence, Γr + γdr.
    pub fn gamma_rg(&self) -> f64 {
        self.gamma_r.0 + self.gamma_dr.0
    }

    /// Absorption coefficient without coupling field, OD/L (1/mm).
    pub fn alpha0(&self) -> f64 {
        self.od / self.length
    }

    /// Returns a copy with the probe tuned so that its Hamiltonian detuning
    /// corresponds to the signal detuning `dw` (including `delta_shift`), with
    /// the coupling field on resonance.
    ///
    /// The ladder Hamiltonian carries `+Δp` on |e⟩, so a signal detuned by
    /// `Δw` maps to `Δp = −(Δw + δΔ)`.
    pub fn probe_at(&self, dw: AngularFreq) -> LadderParams {
        LadderParams {
            delta_p: -(dw + self.delta_shift),
            delta_c: AngularFreq::ZERO,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let freqs = [
            ("omega_p", self.omega_p),
            ("omega_c", self.omega_c),
            ("delta_p", self.delta_p),
            ("delta_c", self.delta_c),
            ("gamma_e", self.gamma_e),
            ("gamma_r", self.gamma_r),
            ("gamma_de", self.gamma_de),
            ("gamma_dr", self.gamma_dr),
            ("delta_shift", self.delta_shift),
        ];
        for (name, f) in freqs {
            if !f.0.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        for (name, f) in &freqs[4..8] {
            if f.0 < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be >= 0, got {}",
                    f.0
                )));
            }
        }
        if !(self.od.is_finite() && self.od >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "od must be >= 0, got {}",
                self.od
            )));
        }
        if !(self.a0.is_finite() && self.a0 >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "a0 must be >= 0, got {}",
                self.a0
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::InvalidParams(format!(
                "length must be > 0, got {}",
                self.length
            )));
        }
        Ok(())
    }

    pub fn get(&self, field: LadderField) -> f64 {
        match field {
            LadderField::OmegaP => self.omega_p.0,
            LadderField::OmegaC => self.omega_c.0,
            LadderField::DeltaP => self.delta_p.0,
            LadderField::DeltaC => self.delta_c.0,
            LadderField::GammaE => self.gamma_e.0,
            LadderField::GammaR => self.gamma_r.0,
            LadderField::GammaDe => self.gamma_de.0,
            LadderField::GammaDr => self.gamma_dr.0,
            LadderField::Od => self.od,
            LadderField::A0 => self.a0,
            LadderField::DeltaShift => self.delta_shift.0,
            LadderField::Length => self.length,
        }
    }

    pub fn set(&mut self, field: LadderField, value: f64) {
        match field {
            LadderField::OmegaP => self.omega_p.0 = value,
            LadderField::OmegaC => self.omega_c.0 = value,
            LadderField::DeltaP => self.delta_p.0 = value,
            LadderField::DeltaC => self.delta_c.0 = value,
            LadderField::GammaE => self.gamma_e.0 = value,
            LadderField::GammaR => self.gamma_r.0 = value,
            LadderField::GammaDe => self.gamma_de.0 = value,
            LadderField::GammaDr => self.gamma_dr.0 = value,
            LadderField::Od => self.od = value,
            LadderField::A0 => self.a0 = value,
            LadderField::DeltaShift => self.delta_shift.0 = value,
            LadderField::Length => self.length = value,
        }
    }
}

/// Names a single scalar field of [`LadderParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderField {
    OmegaP,
    OmegaC,
    DeltaP,
    DeltaC,
    GammaE,
    GammaR,
    GammaDe,
    GammaDr,
    Od,
    A0,
    DeltaShift,
    Length,
}

impl LadderField {
    pub const ALL: [LadderField; 12] = [
        LadderField::OmegaP,
        LadderField::OmegaC,
        LadderField::DeltaP,
        LadderField::DeltaC,
        LadderField::GammaE,
        LadderField::GammaR,
        LadderField::GammaDe,
        LadderField::GammaDr,
        LadderField::Od,
        LadderField::A0,
        LadderField::DeltaShift,
        LadderField::Length,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LadderField::OmegaP => "omega_p",
            LadderField::OmegaC => "omega_c",
            LadderField::DeltaP => "delta_p",
            LadderField::DeltaC => "delta_c",
            LadderField::GammaE => "gamma_e",
            LadderField::GammaR => "gamma_r",
            LadderField::GammaDe => "gamma_de",
            LadderField::GammaDr => "gamma_dr",
            LadderField::Od => "od",
            LadderField::A0 => "a0",
            LadderField::DeltaShift => "delta_shift",
            LadderField::Length => "length",
        }
    }

    /// Rates, optical depth and offsets cannot be negative.
    pub fn is_non_negative(self) -> bool {
        matches!(
            self,
            LadderField::GammaE
                | LadderField::GammaR
                | LadderField::GammaDe
                | LadderField::GammaDr
                | LadderField::Od
                | LadderField::A0
                | LadderField::Length
        )
    }
}

impl fmt::Display for LadderField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameter sets taken from the measured spectra of the switch experiment
/// (rubidium, n = 50 Rydberg D state).
pub mod presets {
    use super::{AngularFreq, LadderParams};

    /// Natural coherence decay of the 5P3/2 transition used where the
    /// measured fit omits it.
    pub const GAMMA_E_DEFAULT: f64 = 3.0;

    /// Signal absorption with no coupling field (OD 20, 4 % background).
    pub fn bare_absorption() -> LadderParams {
        LadderParams {
            gamma_e: AngularFreq(3.0),
            gamma_dr: AngularFreq(1.0),
            od: 20.0,
            a0: 0.04,
            ..LadderParams::default()
        }
    }

    /// Strong-coupling EIT spectrum (Ωc = 2π×11 MHz, shifted by −2π×3.2 MHz).
    pub fn strong_coupling_eit() -> LadderParams {
        LadderParams {
            omega_c: AngularFreq(11.0),
            gamma_e: AngularFreq(3.0),
            gamma_dr: AngularFreq(0.1),
            od: 20.0,
            a0: 0.04,
            delta_shift: AngularFreq(-3.2),
            ..LadderParams::default()
        }
    }

    /// Rydberg-EIT without the gate field.
    pub fn gate_off() -> LadderParams {
        LadderParams {
            omega_c: AngularFreq(6.8),
            gamma_e: AngularFreq(GAMMA_E_DEFAULT),
            gamma_de: AngularFreq(0.07),
            gamma_dr: AngularFreq(0.03),
            od: 8.0,
            ..LadderParams::default()
        }
    }

    /// Rydberg-EIT with the gate field on: blockade appears as a large
    /// Rydberg dephasing.
    pub fn gate_on() -> LadderParams {
        LadderParams {
            omega_c: AngularFreq(5.0),
            gamma_e: AngularFreq(GAMMA_E_DEFAULT),
            gamma_de: AngularFreq(0.07),
            gamma_dr: AngularFreq(2.5),
            od: 8.0,
            delta_shift: AngularFreq(0.5),
            ..LadderParams::default()
        }
    }
}
