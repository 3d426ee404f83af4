use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rydswitch::blockade::{blockade_radius, photons_per_sphere};
use rydswitch::fit::{lm_fit, EitModel};
use rydswitch::optical_response::{spectrum, transmission};
use rydswitch::propagation::{
    biphoton_pulse, check_resolution, propagate, waveform_switch_contrast,
};
use rydswitch::quantum_state::{
    bell_density, linear_inversion, mle_reconstruct, simulate_counts, BellState, Noise,
    TomographyRecord, TomographyRow,
};
use rydswitch::{AngularFreq, ComplexMatrix};
use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::error::{CliError, CliResult, Context};
use crate::table::{read_rows, render_csv, write_text};

const UNITS: &str = "frequencies and detunings in 2π×MHz (11 means 2π×11 MHz)";

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn spectrum_cmd(sc: &Scenario, out: &Path) -> CliResult<()> {
    let p = sc.params()?;
    let grid = sc.grid()?;
    let s = spectrum(&grid, &p).context("spectrum")?;
    let rows: Vec<Vec<f64>> = s
        .detunings
        .iter()
        .zip(&s.chi_dimensionless)
        .zip(&s.transmission)
        .map(|((w, f), t)| vec![w.0, f.re, f.im, *t])
        .collect();
    let comments = [
        UNITS.to_string(),
        "re_chi, im_chi: dimensionless susceptibility χ·k0/α0; transmission = exp(−OD·im_chi) + a0"
            .into(),
    ];
    let text = render_csv(
        &comments,
        &["detuning_2pi_mhz", "re_chi", "im_chi", "transmission"],
        &rows,
    )?;
    write_text(out, &text)
}

#[derive(Debug, Deserialize)]
struct DataRow {
    detuning_2pi_mhz: f64,
    transmission: f64,
    #[serde(default)]
    sigma: Option<f64>,
}

#[derive(Debug, Serialize)]
struct FitReport {
    free: Vec<String>,
    params: BTreeMap<String, f64>,
    uncertainties: BTreeMap<String, f64>,
    chi2: f64,
    reduced_chi2: f64,
    iterations: usize,
    converged: bool,
    points: usize,
}

type FitData = (Vec<f64>, Vec<f64>, Option<Vec<f64>>);

fn load_fit_data(path: &Path) -> CliResult<FitData> {
    let rows: Vec<(u64, DataRow)> = read_rows(path)?;
    let with_sigma = rows.iter().filter(|(_, r)| r.sigma.is_some()).count();
    if with_sigma != 0 && with_sigma != rows.len() {
        return Err(CliError::Input(format!(
            "{}: sigma must be given on every row or none",
            path.display()
        )));
    }
    for (line, r) in &rows {
        let ok = r.detuning_2pi_mhz.is_finite()
            && r.transmission.is_finite()
            && r.sigma.is_none_or(|s| s.is_finite() && s > 0.0);
        if !ok {
            return Err(CliError::Input(format!(
                "{}: line {line}: non-finite value or non-positive sigma",
                path.display()
            )));
        }
    }
    let x = rows.iter().map(|(_, r)| r.detuning_2pi_mhz).collect();
    let y = rows.iter().map(|(_, r)| r.transmission).collect();
    let sigma = (with_sigma > 0).then(|| rows.iter().filter_map(|(_, r)| r.sigma).collect());
    Ok((x, y, sigma))
}

/// Noiseless model curve on the config grid, plus seeded Gaussian noise.
fn synthetic_fit_data(sc: &Scenario, noise: f64, seed: u64) -> CliResult<FitData> {
    let p = sc.params()?;
    let grid = sc.grid()?;
    let clean = spectrum(&grid, &p).context("spectrum")?.transmission;
    let y = if noise > 0.0 {
        let normal =
            Normal::new(0.0, noise).map_err(|e| CliError::physics("fit.noise", e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        clean.iter().map(|v| v + normal.sample(&mut rng)).collect()
    } else {
        clean
    };
    let sigma = (noise > 0.0).then(|| vec![noise; grid.len()]);
    Ok((grid.iter().map(|w| w.0).collect(), y, sigma))
}

pub fn fit_cmd(
    sc: &Scenario,
    data: Option<&Path>,
    out: &Path,
    curve: &Path,
    seed: u64,
) -> CliResult<()> {
    let cfg = sc
        .fit
        .clone()
        .ok_or_else(|| CliError::Input("config has no `fit` section".into()))?;
    if !(cfg.noise.is_finite() && cfg.noise >= 0.0) {
        return Err(CliError::physics(
            "fit.noise",
            format!("must be >= 0, got {}", cfg.noise),
        ));
    }
    let (x, y, sigma) = match data {
        Some(path) => load_fit_data(path)?,
        None => synthetic_fit_data(sc, cfg.noise, seed)?,
    };
    let mut start = sc.params()?;
    for (&field, &v) in &cfg.start {
        start.set(field, v);
    }
    start.validate().context("fit.start")?;
    let model = EitModel::new(start, cfg.free.clone()).context("fit.free")?;
    let n = x.len();
    let result = {
        let problem = model.problem(x.clone(), y.clone(), sigma);
        lm_fit(&problem).context("fit")?
    };

    let names: Vec<String> = cfg.free.iter().map(|f| f.name().to_string()).collect();
    let report = FitReport {
        params: names
            .iter()
            .cloned()
            .zip(result.params.iter().copied())
            .collect(),
        uncertainties: names.iter().cloned().zip(result.uncertainties()).collect(),
        free: names,
        chi2: result.chi2,
        reduced_chi2: result.reduced_chi2(n),
        iterations: result.iterations,
        converged: result.converged,
        points: n,
    };
    let best = model.with_values(&result.params);
    let mut rows = Vec::with_capacity(n);
    for (&xi, &yi) in x.iter().zip(&y) {
        let fit = transmission(AngularFreq(xi), &best).context("fit curve")?;
        rows.push(vec![xi, yi, fit]);
    }
    let text = render_csv(
        &[UNITS.to_string()],
        &["detuning_2pi_mhz", "transmission", "transmission_fit"],
        &rows,
    )?;
    write_json(out, &report)?;
    write_text(curve, &text)
}

#[derive(Debug, Serialize)]
struct PropagateReport {
    switch_contrast: f64,
    energy_in: f64,
    energy_eit: f64,
    energy_gate: f64,
}

pub fn propagate_cmd(sc: &Scenario, out: &Path, summary: &Path) -> CliResult<()> {
    let p_eit = sc.params()?;
    let p_gate = sc.gate_params()?;
    let cfg = sc.pulse()?;
    let pulse = biphoton_pulse(cfg.bandwidth, cfg.samples, cfg.dt).context("pulse")?;
    check_resolution(&pulse, &p_eit).context("params")?;
    check_resolution(&pulse, &p_gate).context("gate_params")?;
    let eit = propagate(&pulse, &p_eit).context("params")?;
    let gate = propagate(&pulse, &p_gate).context("gate_params")?;
    let contrast = waveform_switch_contrast(&pulse, &p_eit, &p_gate).context("switch contrast")?;

    let rows: Vec<Vec<f64>> = eit
        .times()
        .into_iter()
        .zip(eit.intensity().into_iter().zip(gate.intensity()))
        .map(|(t, (a, b))| vec![t, a, b])
        .collect();
    let comments = [
        UNITS.to_string(),
        format!(
            "time in ns; intensities |a(t)|² of a biphoton with bandwidth 2π×{} MHz (peak input 1)",
            cfg.bandwidth.0
        ),
    ];
    let text = render_csv(
        &comments,
        &["time_ns", "intensity_eit", "intensity_gate"],
        &rows,
    )?;
    write_text(out, &text)?;
    write_json(
        summary,
        &PropagateReport {
            switch_contrast: contrast,
            energy_in: pulse.energy(),
            energy_eit: eit.energy(),
            energy_gate: gate.energy(),
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mle,
    Linear,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Mle => "mle",
            Method::Linear => "linear",
        }
    }
}

#[derive(Debug, Serialize)]
struct TomoReport {
    rho_real: Vec<Vec<f64>>,
    rho_imag: Vec<Vec<f64>>,
    fidelity_vs_ideal_bell_theta0: f64,
    purity: f64,
    method: &'static str,
}

fn load_counts(path: &Path) -> CliResult<TomographyRecord> {
    let rows: Vec<TomographyRow> = read_rows(path)?.into_iter().map(|(_, r)| r).collect();
    TomographyRecord::new(&rows).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn tomo_cmd(
    sc: Option<&Scenario>,
    counts: Option<&Path>,
    method: Method,
    out: &Path,
    seed: u64,
) -> CliResult<()> {
    let record = match (counts, sc.and_then(|s| s.tomography)) {
        (Some(path), _) => load_counts(path)?,
        (None, Some(t)) => {
            if !(t.total_per_setting.is_finite() && t.total_per_setting > 0.0) {
                return Err(CliError::physics(
                    "tomography.total_per_setting",
                    format!("must be > 0, got {}", t.total_per_setting),
                ));
            }
            let noise = if t.poisson {
                Noise::Poisson(seed)
            } else {
                Noise::None
            };
            simulate_counts(&bell_density(t.theta), t.total_per_setting, noise)
                .context("tomography")?
        }
        (None, None) => {
            return Err(CliError::Input(
                "tomo needs --counts or a config with a `tomography` section".into(),
            ))
        }
    };
    let rho: ComplexMatrix = match method {
        Method::Mle => mle_reconstruct(&record).context("mle")?.into_matrix(),
        Method::Linear => linear_inversion(&record).context("linear inversion")?,
    };
    // the ideal state is pure, so F = ⟨ψ|ρ|ψ⟩; this also stays defined for
    // a non-positive linear estimate
    let psi = BellState { theta: 0.0 }.ket();
    let mut overlap = Complex64::new(0.0, 0.0);
    let mut purity = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            overlap += psi[i].conj() * rho.get(i, j) * psi[j];
            purity += rho.get(i, j).norm_sqr();
        }
    }
    let grid = |f: fn(Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..4)
            .map(|i| (0..4).map(|j| f(rho.get(i, j))).collect())
            .collect()
    };
    write_json(
        out,
        &TomoReport {
            rho_real: grid(|z| z.re),
            rho_imag: grid(|z| z.im),
            fidelity_vs_ideal_bell_theta0: overlap.re,
            purity,
            method: method.name(),
        },
    )
}

#[derive(Debug, Serialize)]
struct BlockadeReport {
    radius_um: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    photons_per_sphere: Option<f64>,
}

pub fn blockade_cmd(sc: &Scenario, out: &Path) -> CliResult<()> {
    let b = sc.blockade()?;
    let radius = blockade_radius(&b.input()).context("blockade")?;
    let photons = match (b.flux, b.group_delay_per_length) {
        (Some(flux), Some(delay)) => {
            Some(photons_per_sphere(flux, radius, delay).context("blockade")?)
        }
        _ => None,
    };
    write_json(
        out,
        &BlockadeReport {
            radius_um: radius,
            photons_per_sphere: photons,
        },
    )
}
