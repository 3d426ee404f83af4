//! Two-photon polarization states: Bell states, 16-setting tomography
//! (forward simulation, linear inversion, maximum likelihood), fidelity,
//! interference visibility and the switch/EIT contrasts.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{lm_fit, nelder_mead, FitProblem, SimplexOptions};
use crate::linalg::{hermitian_sqrt, ComplexMatrix, DensityMatrix};

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Analyzer setting for one photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolarizationBasis {
    H,
    V,
    /// (|H⟩ − i|V⟩)/√2
    R,
    /// (|H⟩ + |V⟩)/√2
    D,
}

impl PolarizationBasis {
    pub const ALL: [PolarizationBasis; 4] = [
        PolarizationBasis::H,
        PolarizationBasis::V,
        PolarizationBasis::R,
        PolarizationBasis::D,
    ];

    pub fn ket(self) -> [Complex64; 2] {
        let s = FRAC_1_SQRT_2;
        match self {
            PolarizationBasis::H => [C1, C0],
            PolarizationBasis::V => [C0, C1],
            PolarizationBasis::R => [Complex64::new(s, 0.0), Complex64::new(0.0, -s)],
            PolarizationBasis::D => [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PolarizationBasis::H => "H",
            PolarizationBasis::V => "V",
            PolarizationBasis::R => "R",
            PolarizationBasis::D => "D",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PolarizationBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PolarizationBasis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" | "h" => Ok(PolarizationBasis::H),
            "V" | "v" => Ok(PolarizationBasis::V),
            "R" | "r" => Ok(PolarizationBasis::R),
            "D" | "d" => Ok(PolarizationBasis::D),
            other => Err(Error::BadRecord(format!("unknown basis label {other:?}"))),
        }
    }
}

/// Two-photon product ket `|a⟩⊗|b⟩` in the order (HH, HV, VH, VV).
pub fn product_ket(a: PolarizationBasis, b: PolarizationBasis) -> [Complex64; 4] {
    let (x, y) = (a.ket(), b.ket());
    [x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1]]
}

fn projector(a: PolarizationBasis, b: PolarizationBasis) -> ComplexMatrix {
    let k = product_ket(a, b);
    ComplexMatrix::outer(&k, &k)
}

/// Expectation `⟨a⊗b|ρ|a⊗b⟩`.
pub fn setting_probability(rho: &DensityMatrix, a: PolarizationBasis, b: PolarizationBasis) -> f64 {
    let k = product_ket(a, b);
    let m = rho.matrix();
    let mut s = C0;
    for i in 0..4 {
        for j in 0..4 {
            s += k[i].conj() * m.get(i, j) * k[j];
        }
    }
    s.re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographyRow {
    pub basis_s1: PolarizationBasis,
    pub basis_s2: PolarizationBasis,
    pub counts: f64,
}

/// Coincidence counts for all 16 ordered analyzer pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRecord {
    counts: [f64; 16],
}

impl TomographyRecord {
    /// Checks that every ordered pair appears exactly once with finite,
    /// non-negative counts.
    pub fn new(rows: &[TomographyRow]) -> Result<Self> {
        let mut counts = [f64::NAN; 16];
        for row in rows {
            let k = 4 * row.basis_s1.index() + row.basis_s2.index();
            if !counts[k].is_nan() {
                return Err(Error::BadRecord(format!(
                    "duplicate pair ({},{})",
                    row.basis_s1, row.basis_s2
                )));
            }
            if !(row.counts.is_finite() && row.counts >= 0.0) {
                return Err(Error::BadRecord(format!(
                    "pair ({},{}) has invalid counts {}",
                    row.basis_s1, row.basis_s2, row.counts
                )));
            }
            counts[k] = row.counts;
        }
        if let Some(k) = counts.iter().position(|c| c.is_nan()) {
            return Err(Error::BadRecord(format!(
                "missing pair ({},{})",
                PolarizationBasis::ALL[k / 4],
                PolarizationBasis::ALL[k % 4]
            )));
        }
        Ok(TomographyRecord { counts })
    }

    pub fn counts(&self, a: PolarizationBasis, b: PolarizationBasis) -> f64 {
        self.counts[4 * a.index() + b.index()]
    }

    /// Rows in canonical order (s1 major, H V R D).
    pub fn rows(&self) -> Vec<TomographyRow> {
        settings()
            .map(|(a, b)| TomographyRow {
                basis_s1: a,
                basis_s2: b,
                counts: self.counts(a, b),
            })
            .collect()
    }

    /// Counts in the complete {H,V}×{H,V} block.
    pub fn hv_total(&self) -> f64 {
        use PolarizationBasis::{H, V};
        self.counts(H, H) + self.counts(H, V) + self.counts(V, H) + self.counts(V, V)
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

fn settings() -> impl Iterator<Item = (PolarizationBasis, PolarizationBasis)> {
    PolarizationBasis::ALL
        .into_iter()
        .flat_map(|a| PolarizationBasis::ALL.into_iter().map(move |b| (a, b)))
}

/// `(|HV⟩ + e^{iθ}|VH⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellState {
    pub theta: f64,
}

impl BellState {
    pub fn ket(&self) -> [Complex64; 4] {
        let s = FRAC_1_SQRT_2;
        [
            C0,
            Complex64::new(s, 0.0),
            Complex64::from_polar(s, self.theta),
            C0,
        ]
    }

    pub fn density(&self) -> DensityMatrix {
        bell_density(self.theta)
    }
}

pub fn bell_density(theta: f64) -> DensityMatrix {
    let k = BellState { theta }.ket();
    DensityMatrix::pure(&k).expect("Bell ket is normalised")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    None,
    /// Poisson sampling from a ChaCha8 stream seeded with the value.
    Poisson(u64),
}

/// Expected (or Poisson-sampled) counts for every setting.
pub fn simulate_counts(
    rho: &DensityMatrix,
    total_per_setting: f64,
    noise: Noise,
) -> Result<TomographyRecord> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho.dim(),
        });
    }
    if !(total_per_setting.is_finite() && total_per_setting >= 0.0) {
        return Err(Error::BadInput(format!(
            "total_per_setting must be >= 0, got {total_per_setting}"
        )));
    }
    let mut rng = match noise {
        Noise::Poisson(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Noise::None => None,
    };
    let rows: Vec<TomographyRow> = settings()
        .map(|(a, b)| {
            let mean = total_per_setting * setting_probability(rho, a, b).max(0.0);
            let counts = match rng.as_mut() {
                Some(rng) if mean > 0.0 => Poisson::new(mean).expect("positive mean").sample(rng),
                Some(_) => 0.0,
                None => mean,
            };
            TomographyRow {
                basis_s1: a,
                basis_s2: b,
                counts,
            }
        })
        .collect();
    TomographyRecord::new(&rows)
}

/// Complex 16×16 map from row-major `vec(ρ)` to setting probabilities.
fn design_matrix() -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(16, 16);
    for (k, (s1, s2)) in settings().enumerate() {
        let p = projector(s1, s2);
        // tr(P ρ) = Σ_ij P_ji ρ_ij
        for i in 0..4 {
            for j in 0..4 {
                a[(k, 4 * i + j)] = p.get(j, i);
            }
        }
    }
    a
}

/// Solves the linear tomography equations. The result is Hermitian with unit
/// trace but may have negative eigenvalues.
pub fn linear_inversion(rec: &TomographyRecord) -> Result<ComplexMatrix> {
    let norm = rec.hv_total();
    if norm <= 0.0 {
        return Err(Error::BadRecord(
            "no counts in the {H,V}x{H,V} block".into(),
        ));
    }
    let a = design_matrix();
    let sv = a.clone().singular_values();
    let ratio = sv.min() / sv.max();
    if ratio < 1e-12 {
        return Err(Error::SingularDesign);
    }
    let b = DVector::from_iterator(
        16,
        settings().map(|(s1, s2)| Complex64::new(rec.counts(s1, s2) / norm, 0.0)),
    );
    let x = a.lu().solve(&b).ok_or(Error::SingularDesign)?;
    Ok(ComplexMatrix::from_row_major(4, x.as_slice())?.hermitize())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    /// Budget for the final simplex search.
    pub max_evaluations: usize,
    /// Iteration cap for the projected-gradient stage.
    pub max_descent_iterations: usize,
    /// Weight of `I/4` mixed into the simplex start so its Cholesky factor
    /// exists.
    pub start_mixing: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            max_evaluations: 20_000,
            max_descent_iterations: 5_000,
            start_mixing: 1e-10,
        }
    }
}

/// Lower-triangular `T` from 16 reals: 4 diagonal entries then the real and
/// imaginary parts of the 6 sub-diagonal entries.
fn t_from_params(t: &[f64]) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(4, 4);
    for i in 0..4 {
        m[(i, i)] = Complex64::new(t[i], 0.0);
    }
    let mut k = 4;
    for i in 1..4 {
        for j in 0..i {
            m[(i, j)] = Complex64::new(t[k], t[k + 1]);
            k += 2;
        }
    }
    m
}

fn params_from_t(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut t: Vec<f64> = (0..4).map(|i| m[(i, i)].re).collect();
    for i in 1..4 {
        for j in 0..i {
            t.push(m[(i, j)].re);
            t.push(m[(i, j)].im);
        }
    }
    t
}

/// Lower-triangular `T` with `T†T = ρ` for positive-definite `ρ`.
fn lower_factor(rho: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    // with J the reversal permutation, JρJ = L L† gives T = J L† J
    let n = rho.nrows();
    let flip = |m: &DMatrix<Complex64>| DMatrix::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)]);
    let l = flip(rho).cholesky()?.l();
    Some(flip(&l.adjoint()))
}

/// Poisson likelihood of the 16 settings with means `μ_k = N·⟨φ_k|W|φ_k⟩`
/// for an unnormalised state `W`.
struct Likelihood {
    kets: Vec<DVector<Complex64>>,
    observed: Vec<f64>,
    scale: f64,
}

impl Likelihood {
    fn new(rec: &TomographyRecord, scale: f64) -> Self {
        Likelihood {
            kets: settings()
                .map(|(a, b)| DVector::from_column_slice(&product_ket(a, b)))
                .collect(),
            observed: settings().map(|(a, b)| rec.counts(a, b)).collect(),
            scale,
        }
    }

    fn mean(&self, w: &DMatrix<Complex64>, phi: &DVector<Complex64>) -> f64 {
        self.scale * phi.dotc(&(w * phi)).re
    }

    /// Poisson deviance `Σ μ − c + c·ln(c/μ)`, zero at a perfect fit.
    fn deviance(&self, w: &DMatrix<Complex64>) -> f64 {
        let mut d = 0.0;
        for (phi, &c) in self.kets.iter().zip(&self.observed) {
            let mu = self.mean(w, phi);
            if c > 0.0 {
                if mu <= 0.0 {
                    return f64::INFINITY;
                }
                d += mu - c + c * (c / mu).ln();
            } else {
                d += mu;
            }
        }
        d
    }

    fn gradient(&self, w: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut g = DMatrix::zeros(4, 4);
        for (phi, &c) in self.kets.iter().zip(&self.observed) {
            let weight = if c > 0.0 {
                1.0 - c / self.mean(w, phi)
            } else {
                1.0
            };
            g += phi * phi.adjoint() * Complex64::new(self.scale * weight, 0.0);
        }
        g
    }
}

fn psd_projection(w: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let h = (w + w.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let clipped = eig.eigenvalues.map(|l| Complex64::new(l.max(0.0), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.adjoint()
}

/// Accelerated projected gradient on the positive-semidefinite cone. The
/// deviance is convex in `W`, so this reaches the global optimum even when it
/// is rank-deficient and the Cholesky parameterisation degenerates.
fn descend(lik: &Likelihood, w0: DMatrix<Complex64>, max_iterations: usize) -> DMatrix<Complex64> {
    let mut w = w0;
    let mut fw = lik.deviance(&w);
    let mut y = w.clone();
    let mut momentum = 1.0f64;
    let mut lipschitz = lik.scale;
    let mut quiet = 0;
    for _ in 0..max_iterations {
        let fy = lik.deviance(&y);
        let g = lik.gradient(&y);
        let (z, fz) = loop {
            let z = psd_projection(&(&y - &g * Complex64::new(1.0 / lipschitz, 0.0)));
            let fz = lik.deviance(&z);
            let d = &z - &y;
            let bound = fy + g.dotc(&d).re + 0.5 * lipschitz * d.norm_squared();
            if fz <= bound || lipschitz > 1e30 {
                break (z, fz);
            }
            lipschitz *= 2.0;
        };
        if fz > fw {
            // overshoot: drop the momentum and retry from the last iterate
            y = w.clone();
            momentum = 1.0;
            continue;
        }
        let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        y = &z + (&z - &w) * Complex64::new((momentum - 1.0) / next, 0.0);
        momentum = next;
        lipschitz /= 1.5;
        let gain = fw - fz;
        w = z;
        fw = fz;
        if gain <= 1e-14 * fw.max(1.0) {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    w
}

/// Poisson maximum-likelihood state, `ρ = T†T / tr(T†T)`.
pub fn mle_reconstruct(rec: &TomographyRecord) -> Result<DensityMatrix> {
    mle_reconstruct_with(rec, &MleOptions::default())
}

/// Projected-gradient descent from the clipped linear inversion finds the
/// likelihood optimum. A simplex search over the 16 Cholesky parameters then
/// polishes it and certifies convergence.
pub fn mle_reconstruct_with(rec: &TomographyRecord, opts: &MleOptions) -> Result<DensityMatrix> {
    if rec.total() <= 0.0 {
        return Err(Error::BadRecord("all counts are zero".into()));
    }
    let norm = rec.hv_total();
    let scale = if norm > 0.0 { norm } else { rec.total() / 4.0 };
    let lik = Likelihood::new(rec, scale);

    let start = match linear_inversion(rec) {
        Ok(m) => DensityMatrix::project(&m).ok(),
        Err(_) => None,
    }
    .unwrap_or_else(|| DensityMatrix::maximally_mixed(4));
    let mut w0 = start.into_matrix().into_nalgebra();
    if !lik.deviance(&w0).is_finite() {
        w0 = DMatrix::identity(4, 4) * Complex64::new(0.25, 0.0);
    }
    let w = descend(&lik, w0, opts.max_descent_iterations);

    let tr = w.trace().re;
    if !(tr > 0.0) {
        return Err(Error::NoConvergence(
            "likelihood search collapsed to zero".into(),
        ));
    }
    let eps = opts.start_mixing;
    let mixed = &w * Complex64::new((1.0 - eps) / tr, 0.0)
        + DMatrix::<Complex64>::identity(4, 4) * Complex64::new(eps / 4.0, 0.0);
    let t0 = lower_factor(&mixed).ok_or(Error::NotPsd {
        min_eigenvalue: 0.0,
    })?;
    // the overall intensity rides on tr(T†T)
    let x0: Vec<f64> = params_from_t(&t0)
        .into_iter()
        .map(|v| v * tr.sqrt())
        .collect();

    let deviance = |x: &[f64]| {
        let t = t_from_params(x);
        lik.deviance(&(t.adjoint() * t))
    };
    let simplex = SimplexOptions {
        max_evaluations: opts.max_evaluations,
        initial_step: 1e-3,
        ftol: 1e-10,
        ..SimplexOptions::default()
    };
    let m = nelder_mead(deviance, &x0, &simplex);
    if !m.converged {
        return Err(Error::NoConvergence(format!(
            "maximum-likelihood search used {} evaluations (deviance {:.3e})",
            m.evaluations, m.value
        )));
    }
    let t = t_from_params(&m.x);
    let w = t.adjoint() * &t;
    let tr = w.trace().re;
    let rho = ComplexMatrix::from_nalgebra(w * Complex64::new(1.0 / tr, 0.0))?;
    DensityMatrix::new(rho.hermitize())
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    // tr√(√ρ σ √ρ) is the trace norm of √ρ√σ; singular values avoid the
    // square root of rounding-level eigenvalues and are symmetric in the
    // arguments
    let a = hermitian_sqrt(rho.matrix())?;
    let b = hermitian_sqrt(sigma.matrix())?;
    let root: f64 = (&a * &b).into_nalgebra().singular_values().sum();
    Ok((root * root).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityFit {
    pub visibility: f64,
    pub theta0: f64,
    pub amplitude: f64,
    pub offset: f64,
}

/// Fits `CC(θ) = B + A·cos²(θ − θ0)` with `A, B ≥ 0`.
pub fn visibility_fit(angles: &[f64], counts: &[f64]) -> Result<VisibilityFit> {
    if angles.len() != counts.len() {
        return Err(Error::BadInput(format!(
            "{} angles but {} count values",
            angles.len(),
            counts.len()
        )));
    }
    if angles.len() < 6 {
        return Err(Error::BadInput(
            "visibility fit needs at least 6 points".into(),
        ));
    }
    let lo = angles.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = angles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo >= std::f64::consts::PI - 1e-9) {
        return Err(Error::BadInput(
            "analyzer angles must span at least π".into(),
        ));
    }

    // linear start: c0 + a·cos2θ + b·sin2θ
    let design = DMatrix::from_fn(angles.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => (2.0 * angles[i]).cos(),
        _ => (2.0 * angles[i]).sin(),
    });
    let y = DVector::from_column_slice(counts);
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::BadInput(e.into()))?;
    let amp0 = 2.0 * coef[1].hypot(coef[2]);
    let theta_start = 0.5 * coef[2].atan2(coef[1]);
    let offset0 = coef[0] - amp0 / 2.0;
    let peak = counts.iter().copied().fold(0.0, f64::max).max(1e-300);

    let model = |p: &[f64], th: f64| p[2] + p[0] * (th - p[1]).cos().powi(2);
    let problem = FitProblem::new(
        model,
        angles.to_vec(),
        counts.to_vec(),
        vec![amp0.max(1e-9 * peak), theta_start, offset0.max(1e-9 * peak)],
    )
    .with_bounds(
        vec![0.0, f64::NEG_INFINITY, 0.0],
        vec![f64::INFINITY, f64::INFINITY, f64::INFINITY],
    );
    let r = lm_fit(&problem)?;
    let (a, b) = (r.params[0], r.params[2]);
    let visibility = if a + 2.0 * b > 0.0 {
        a / (a + 2.0 * b)
    } else {
        0.0
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let theta0 = r.params[1]
        - std::f64::consts::PI * ((r.params[1] + half_pi) / std::f64::consts::PI).floor();
    Ok(VisibilityFit {
        visibility,
        theta0,
        amplitude: a,
        offset: b,
    })
}

/// `(CC_EIT − CC_gate) / CC_EIT`.
pub fn switch_contrast(cc_eit: f64, cc_gate: f64) -> Result<f64> {
    if !(cc_eit > 0.0) {
        return Err(Error::ZeroReference);
    }
    if !(cc_gate >= 0.0) {
        return Err(Error::BadInput(format!(
            "gated counts must be >= 0, got {cc_gate}"
        )));
    }
    Ok((cc_eit - cc_gate) / cc_eit)
}

/// `(CC_no_atom − CC_EIT) / CC_no_atom`.
pub fn eit_contrast(cc_no_atom: f64, cc_eit: f64) -> Result<f64> {
    if !(cc_no_atom > 0.0) {
        return Err(Error::ZeroReference);
    }
    if !(cc_eit >= 0.0) {
        return Err(Error::BadInput(format!(
            "EIT counts must be >= 0, got {cc_eit}"
        )));
    }
    Ok((cc_no_atom - cc_eit) / cc_no_atom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use PolarizationBasis::{D, H, V};

    #[test]
    fn kets_are_normalised() {
        for b in PolarizationBasis::ALL {
            let n: f64 = b.ket().iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert_eq!("d".parse::<PolarizationBasis>().unwrap(), D);
        assert!("X".parse::<PolarizationBasis>().is_err());
    }

    #[test]
    fn bell_entries() {
        let r = bell_density(0.0);
        for (i, j) in [(1, 1), (2, 2), (1, 2), (2, 1)] {
            assert!((r.get(i, j) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
        assert!(
            r.get(0, 0).norm() < 1e-15 && r.get(3, 3).norm() < 1e-15 && r.get(0, 1).norm() < 1e-15
        );
        let r = bell_density(PI);
        assert!((r.get(1, 2).re + 0.5).abs() < 1e-15);
        assert!((r.get(2, 1).re + 0.5).abs() < 1e-15);
        for th in [0.0, 0.3, 1.0, PI, 5.0] {
            assert!((bell_density(th).purity() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn setting_probabilities() {
        let b = bell_density(0.0);
        assert!((setting_probability(&b, H, V) - 0.5).abs() < 1e-15);
        assert!(setting_probability(&b, H, H).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(4);
        for (a, c) in settings() {
            assert!((setting_probability(&mixed, a, c) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn record_validation() {
        let rec = simulate_counts(&bell_density(0.0), 100.0, Noise::None).unwrap();
        let mut rows = rec.rows();
        assert_eq!(rows.len(), 16);
        rows.pop();
        match TomographyRecord::new(&rows) {
            Err(Error::BadRecord(m)) => assert!(m.contains("(D,D)"), "{m}"),
            other => panic!("{other:?}"),
        }
        let mut rows = rec.rows();
        rows[15] = rows[3];
        match TomographyRecord::new(&rows) {
            Err(Error::BadRecord(m)) => assert!(m.contains("duplicate pair (H,D)"), "{m}"),
            other => panic!("{other:?}"),
        }
        let mut rows = rec.rows();
        rows[0].counts = -1.0;
        assert!(TomographyRecord::new(&rows).is_err());
    }

    #[test]
    fn poisson_counts_are_seeded() {
        let rho = bell_density(0.4);
        let a = simulate_counts(&rho, 1e4, Noise::Poisson(7)).unwrap();
        let b = simulate_counts(&rho, 1e4, Noise::Poisson(7)).unwrap();
        let c = simulate_counts(&rho, 1e4, Noise::Poisson(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.counts(H, H), 0.0);
        assert!(a.rows().iter().all(|r| r.counts.fract() == 0.0));
    }

    #[test]
    fn linear_inversion_round_trips() {
        let bell = bell_density(0.0);
        let rec = simulate_counts(&bell, 1000.0, Noise::None).unwrap();
        let m = linear_inversion(&rec).unwrap();
        assert!(m.max_abs_diff(bell.matrix()) < 1e-10);

        let mixed = DensityMatrix::maximally_mixed(4);
        let rec = simulate_counts(&mixed, 400.0, Noise::None).unwrap();
        assert!(linear_inversion(&rec).unwrap().max_abs_diff(mixed.matrix()) < 1e-12);

        let flat: Vec<TomographyRow> = settings()
            .map(|(a, b)| TomographyRow {
                basis_s1: a,
                basis_s2: b,
                counts: 37.0,
            })
            .collect();
        let m = linear_inversion(&TomographyRecord::new(&flat).unwrap()).unwrap();
        assert!(m.max_abs_diff(mixed.matrix()) < 1e-12);
    }

    #[test]
    fn lower_factor_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = DensityMatrix::random(&mut rng, 4, 4);
        let t = lower_factor(rho.matrix().as_nalgebra()).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_eq!(t[(i, j)], C0);
            }
        }
        let back = t.adjoint() * &t;
        assert!((back - rho.matrix().as_nalgebra())
            .iter()
            .all(|z| z.norm() < 1e-12));
        assert_eq!(
            params_from_t(&t_from_params(&params_from_t(&t))),
            params_from_t(&t)
        );
    }

    #[test]
    fn mle_noiseless_bell() {
        let bell = bell_density(0.0);
        let rec = simulate_counts(&bell, 1e4, Noise::None).unwrap();
        let rho = mle_reconstruct(&rec).unwrap();
        assert!(rho.trace_distance(&bell).unwrap() < 1e-6);
    }

    #[test]
    fn mle_product_state_on_boundary() {
        // |HV⟩ leaves 7 of the 16 settings empty
        let hv =
            DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.0, 1.0, 0.0, 0.0])).unwrap();
        let rec = simulate_counts(&hv, 500.0, Noise::None).unwrap();
        assert_eq!(rec.rows().iter().filter(|r| r.counts == 0.0).count(), 7);
        let rho = mle_reconstruct(&rec).unwrap();
        assert!(rho.matrix().max_abs_diff(hv.matrix()) < 1e-4, "{:?}", rho);
    }

    #[test]
    fn mle_inconsistent_record_stays_physical() {
        // only (H,V) populated: no state reproduces this, but the estimate
        // must still be a valid state favouring |HV⟩
        let rows: Vec<TomographyRow> = settings()
            .map(|(a, b)| TomographyRow {
                basis_s1: a,
                basis_s2: b,
                counts: if (a, b) == (H, V) { 500.0 } else { 0.0 },
            })
            .collect();
        let rho = mle_reconstruct(&TomographyRecord::new(&rows).unwrap()).unwrap();
        assert!(rho.get(1, 1).re > 0.5);
        assert!(rho.matrix().eigenvalues_hermitian()[0] > -1e-9);
    }

    #[test]
    fn mle_rejects_empty_record() {
        let rows: Vec<TomographyRow> = settings()
            .map(|(a, b)| TomographyRow {
                basis_s1: a,
                basis_s2: b,
                counts: 0.0,
            })
            .collect();
        assert!(mle_reconstruct(&TomographyRecord::new(&rows).unwrap()).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let bell = bell_density(0.0);
        let mixed = DensityMatrix::maximally_mixed(4);
        assert!((fidelity(&bell, &bell).unwrap() - 1.0).abs() < 1e-9);
        assert!((fidelity(&mixed, &bell).unwrap() - 0.25).abs() < 1e-9);
        assert!(fidelity(&bell, &bell_density(PI)).unwrap() < 1e-9);
        let q = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            fidelity(&bell, &q),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn cos2_data(v: f64, theta0: f64, peak: f64) -> (Vec<f64>, Vec<f64>) {
        // V = A/(A+2B) with A + B = peak
        let b = peak * (1.0 - v) / (1.0 + v);
        let a = peak - b;
        let th: Vec<f64> = (0..24).map(|i| i as f64 * PI / 16.0).collect();
        let cc = th
            .iter()
            .map(|t| b + a * (t - theta0).cos().powi(2))
            .collect();
        (th, cc)
    }

    #[test]
    fn visibility_recovery() {
        let (th, cc) = cos2_data(0.87, 0.4, 1000.0);
        let f = visibility_fit(&th, &cc).unwrap();
        assert!((f.visibility - 0.87).abs() < 0.005, "{f:?}");
        assert!((f.theta0 - 0.4).abs() < 1e-6, "{f:?}");
        let maxmin = (1000.0 - f.offset) / (1000.0 + f.offset);
        assert!((maxmin - f.visibility).abs() < 1e-6);
    }

    #[test]
    fn visibility_limits() {
        let (th, cc) = cos2_data(1.0, -0.2, 500.0);
        assert!((visibility_fit(&th, &cc).unwrap().visibility - 1.0).abs() < 1e-6);
        let flat = vec![250.0; th.len()];
        assert!(visibility_fit(&th, &flat).unwrap().visibility < 1e-6);
        assert!(visibility_fit(&th[..5], &cc[..5]).is_err());
        let narrow: Vec<f64> = th.iter().map(|t| t / 4.0).collect();
        assert!(visibility_fit(&narrow, &cc).is_err());
    }

    #[test]
    fn contrasts() {
        assert_eq!(switch_contrast(1000.0, 1000.0).unwrap(), 0.0);
        assert_eq!(switch_contrast(1000.0, 0.0).unwrap(), 1.0);
        assert!((switch_contrast(1000.0, 224.0).unwrap() - 0.776).abs() < 1e-12);
        assert!(matches!(
            switch_contrast(0.0, 1.0),
            Err(Error::ZeroReference)
        ));
        assert_eq!(eit_contrast(800.0, 800.0).unwrap(), 0.0);
        assert_eq!(eit_contrast(800.0, 0.0).unwrap(), 1.0);
        assert_eq!(eit_contrast(2000.0, 1500.0).unwrap(), 0.25);
        assert!(matches!(eit_contrast(0.0, 1.0), Err(Error::ZeroReference)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hv_block_is_complete(seed in any::<u64>(), rank in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = DensityMatrix::random(&mut rng, 4, rank);
            let s: f64 = [(H, H), (H, V), (V, H), (V, V)]
                .iter()
                .map(|&(a, b)| setting_probability(&rho, a, b))
                .sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            // single-arm completeness: H + V projectors sum to identity
            for other in PolarizationBasis::ALL {
                let k = other.ket();
                let mut reduced = 0.0;
                for first in [H, V] {
                    reduced += setting_probability(&rho, first, other);
                }
                let arm: f64 = (0..2)
                    .map(|x| {
                        let mut v = C0;
                        for i in 0..2 {
                            for j in 0..2 {
                                v += k[i].conj() * rho.get(2 * x + i, 2 * x + j) * k[j];
                            }
                        }
                        v.re
                    })
                    .sum();
                prop_assert!((reduced - arm).abs() < 1e-12);
            }
        }

        #[test]
        fn fidelity_is_bounded_and_symmetric(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DensityMatrix::random(&mut rng, 4, 4);
            let b = DensityMatrix::random(&mut rng, 4, 2);
            let f = fidelity(&a, &b).unwrap();
            prop_assert!((0.0..=1.0 + 1e-9).contains(&f));
            prop_assert!((f - fidelity(&b, &a).unwrap()).abs() < 1e-9);
            prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        }
    }
}
