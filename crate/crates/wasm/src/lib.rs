//! Browser bindings for the static demo page in `www/`.
//!
//! Three operations back the page's sliders: an EIT transmission spectrum,
//! gate-off/gate-on biphoton waveforms with their switch contrast, and the
//! blockade radius. Frequencies are numeric values in 2π×MHz.

use rydswitch::blockade::{blockade_radius, BlockadeInput};
use rydswitch::optical_response::{linear_grid, spectrum};
use rydswitch::propagation::{biphoton_pulse, propagate, Pulse};
use rydswitch::{presets, AngularFreq, LadderParams};
use wasm_bindgen::prelude::*;

const SAMPLES: usize = 1 << 16;
const DT_NS: f64 = 4.0;

fn ladder(omega_c: f64, gamma_dr: f64, od: f64) -> LadderParams {
    LadderParams {
        omega_c: AngularFreq(omega_c),
        gamma_e: AngularFreq(presets::GAMMA_E_DEFAULT),
        gamma_de: AngularFreq(0.07),
        gamma_dr: AngularFreq(gamma_dr),
        od,
        ..LadderParams::default()
    }
}

fn spectrum_values(
    omega_c: f64,
    gamma_dr: f64,
    od: f64,
    span: f64,
    points: usize,
) -> rydswitch::Result<Vec<f64>> {
    let grid = linear_grid(-span, span, points);
    Ok(spectrum(&grid, &ladder(omega_c, gamma_dr, od))?.transmission)
}

/// Signal transmission on `points` detunings evenly covering `[-span, span]`.
#[wasm_bindgen]
pub fn transmission_spectrum(
    omega_c: f64,
    gamma_dr: f64,
    od: f64,
    span: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    spectrum_values(omega_c, gamma_dr, od, span, points).map_err(|e| JsError::new(&e.to_string()))
}

/// Output intensities for the gate-off and gate-on media, cropped to a
/// window around the pulse.
#[wasm_bindgen]
pub struct Waveforms {
    start_ns: f64,
    dt_ns: f64,
    eit: Vec<f64>,
    gate: Vec<f64>,
    contrast: f64,
}

#[wasm_bindgen]
impl Waveforms {
    #[wasm_bindgen(getter)]
    pub fn start_ns(&self) -> f64 {
        self.start_ns
    }

    #[wasm_bindgen(getter)]
    pub fn dt_ns(&self) -> f64 {
        self.dt_ns
    }

    #[wasm_bindgen(getter)]
    pub fn eit(&self) -> Vec<f64> {
        self.eit.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn gate(&self) -> Vec<f64> {
        self.gate.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn contrast(&self) -> f64 {
        self.contrast
    }
}

fn crop(p: &Pulse, from: usize, to: usize) -> Vec<f64> {
    p.amplitude[from..to].iter().map(|a| a.norm_sqr()).collect()
}

fn waveforms(bandwidth: f64, gate_dephasing: f64, span_ns: f64) -> rydswitch::Result<Waveforms> {
    let pulse = biphoton_pulse(AngularFreq(bandwidth), SAMPLES, DT_NS)?;
    let off = presets::gate_off();
    let on = LadderParams {
        gamma_dr: AngularFreq(gate_dephasing),
        ..presets::gate_on()
    };
    let eit = propagate(&pulse, &off)?;
    let gate = propagate(&pulse, &on)?;
    let e_eit = eit.energy();
    if e_eit < 1e-15 {
        return Err(rydswitch::Error::ZeroReference);
    }
    let rise = SAMPLES / 10;
    let span = (span_ns.max(DT_NS) / DT_NS) as usize;
    let from = rise.saturating_sub(span / 5);
    let to = (rise + span).min(SAMPLES);
    Ok(Waveforms {
        start_ns: pulse.time(from) - pulse.time(rise),
        dt_ns: DT_NS,
        eit: crop(&eit, from, to),
        gate: crop(&gate, from, to),
        contrast: 1.0 - gate.energy() / e_eit,
    })
}

/// Propagates a biphoton of the given bandwidth through the gate-off medium
/// and through the gate-on medium with Rydberg dephasing `gate_dephasing`.
#[wasm_bindgen]
pub fn switch_waveforms(
    bandwidth: f64,
    gate_dephasing: f64,
    span_ns: f64,
) -> Result<Waveforms, JsError> {
    waveforms(bandwidth, gate_dephasing, span_ns).map_err(|e| JsError::new(&e.to_string()))
}

/// Blockade radius in μm for C̄6 in 2π×GHz·μm⁶.
#[wasm_bindgen]
pub fn blockade_radius_um(c6: f64, delta_c: f64, omega_c: f64) -> Result<f64, JsError> {
    let input = BlockadeInput {
        c6,
        delta_c: AngularFreq(delta_c),
        omega_c: AngularFreq(omega_c),
    };
    blockade_radius(&input).map_err(|e| JsError::new(&e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_is_transparent_on_resonance() {
        let t = spectrum_values(11.0, 0.1, 20.0, 20.0, 401).unwrap();
        assert_eq!(t.len(), 401);
        let geg = presets::GAMMA_E_DEFAULT + 0.07;
        let centre = (-20.0 * 4.0 * 0.1 * geg / (121.0 + 4.0 * 0.1 * geg)).exp();
        assert!((t[200] - centre).abs() < 1e-12);
        assert!(t[200] > t[0]);
        assert!(spectrum_values(11.0, 0.1, 20.0, 20.0, 1).is_err());
    }

    #[test]
    fn waveforms_show_switching() {
        let w = waveforms(5.0, 2.5, 1000.0).unwrap();
        assert_eq!(w.eit.len(), w.gate.len());
        assert_eq!(w.eit.len(), 300);
        assert_eq!(w.start_ns, -200.0);
        assert!(w.contrast > 0.0 && w.contrast < 1.0);
        let same = waveforms(5.0, presets::gate_off().gamma_dr.0, 1000.0).unwrap();
        assert!(same.contrast < w.contrast);
    }
}
