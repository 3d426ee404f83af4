//! Ladder-system master equation: Hamiltonian, dissipator, vectorised
//! generator and steady state.
//!
//! Basis order is (g, e, r) throughout; ħ = 1 and all rates are in 2π×MHz.
//! Density matrices are vectorised row-major: `vec(ρ)[3i + j] = ρ[i][j]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix};
use crate::types::LadderParams;

pub const G: usize = 0;
pub const E: usize = 1;
pub const R: usize = 2;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Single-atom Hamiltonian in the rotating frame,
/// `H = −½ [[0, Ωp, 0], [Ωp, −2Δp, Ωc], [0, Ωc, −2(Δp+Δc)]]`.
pub fn hamiltonian(p: &LadderParams) -> ComplexMatrix {
    let (op, oc) = (p.omega_p.0, p.omega_c.0);
    let (dp, dc) = (p.delta_p.0, p.delta_c.0);
    let entries = [
        0.0,
        -0.5 * op,
        0.0,
        -0.5 * op,
        dp,
        -0.5 * oc,
        0.0,
        -0.5 * oc,
        dp + dc,
    ];
    let entries: Vec<Complex64> = entries.iter().map(|&x| re(x)).collect();
    ComplexMatrix::from_row_major(3, &entries).expect("3x3")
}

/// Coherence decay rates `(ge, gr, er)`.
fn coherence_rates(p: &LadderParams) -> [(usize, usize, f64); 3] {
    let (ge, gr) = (p.gamma_e.0, p.gamma_r.0);
    let (dde, ddr) = (p.gamma_de.0, p.gamma_dr.0);
    [
        (G, E, ge + dde),
        (G, R, gr + ddr),
        (E, R, ge + gr + dde + ddr),
    ]
}

/// Dissipative part of dρ/dt for an arbitrary 3×3 matrix.
///
/// Populations cascade r → e → g at Γr and Γe. Coherences decay at
/// Γe+γde (ge), Γr+γdr (gr) and Γe+Γr+γde+γdr (er).
pub fn dissipator(rho: &ComplexMatrix, p: &LadderParams) -> ComplexMatrix {
    let (ge, gr) = (p.gamma_e.0, p.gamma_r.0);
    let mut d = ComplexMatrix::zeros(3);
    let ree = rho.get(E, E);
    let rrr = rho.get(R, R);
    d.set(G, G, ree * ge);
    d.set(E, E, -ree * ge + rrr * gr);
    d.set(R, R, -rrr * gr);
    for (a, b, rate) in coherence_rates(p) {
        d.set(a, b, -rho.get(a, b) * rate);
        d.set(b, a, -rho.get(b, a) * rate);
    }
    d
}

/// Dissipator evaluated on a validated 3×3 state.
pub fn lindblad_dissipator(rho: &DensityMatrix, p: &LadderParams) -> Result<ComplexMatrix> {
    if rho.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: rho.dim(),
        });
    }
    Ok(dissipator(rho.matrix(), p))
}

/// Full right-hand side `−i[H, ρ] + D(ρ)` evaluated directly.
pub fn master_rhs(rho: &ComplexMatrix, p: &LadderParams) -> ComplexMatrix {
    let h = hamiltonian(p);
    let comm = &(&h * rho) - &(rho * &h);
    &comm.scale(-I) + &dissipator(rho, p)
}

/// Vectorised master equation, `d vec(ρ)/dt = generator · vec(ρ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    generator: DMatrix<Complex64>,
}

impl Liouvillian {
    pub fn dimension(&self) -> usize {
        self.generator.nrows()
    }

    pub fn generator(&self) -> &DMatrix<Complex64> {
        &self.generator
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let v = &self.generator * vectorize(rho);
        unvectorize(&v)
    }
}

pub fn vectorize(rho: &ComplexMatrix) -> DVector<Complex64> {
    DVector::from_vec(rho.to_row_major())
}

pub fn unvectorize(v: &DVector<Complex64>) -> ComplexMatrix {
    let n = (v.len() as f64).sqrt().round() as usize;
    ComplexMatrix::from_row_major(n, v.as_slice()).expect("square vector length")
}

fn basis_matrix(k: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(3);
    m.set(k / 3, k % 3, re(1.0));
    m
}

/// Builds the 9×9 generator column by column from the action of the master
/// equation on the matrix units `|i⟩⟨j|`.
pub fn build_liouvillian(p: &LadderParams) -> Liouvillian {
    let mut generator = DMatrix::zeros(9, 9);
    for k in 0..9 {
        let col = master_rhs(&basis_matrix(k), p).to_row_major();
        for (row, value) in col.into_iter().enumerate() {
            generator[(row, k)] = value;
        }
    }
    Liouvillian { generator }
}

/// Ratio of smallest to largest singular value below which the constrained
/// steady-state system is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-10;

fn ground_state() -> DensityMatrix {
    DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0])).expect("pure state")
}

/// Steady state of the master equation (`dρ/dt = 0`, `tr ρ = 1`).
///
/// The redundant ρgg equation of the generator is replaced by the trace
/// constraint and the dense system is solved directly. With no probe the
/// answer is |g⟩⟨g|; with no coupling field |r⟩ is decoupled and only the
/// {g, e} block is solved.
pub fn steady_state(p: &LadderParams) -> Result<DensityMatrix> {
    p.validate()?;
    if p.omega_p.0 == 0.0 {
        return Ok(ground_state());
    }
    if p.gamma_e.0 <= 0.0 && p.gamma_de.0 <= 0.0 {
        return Err(Error::InvalidParams(
            "steady state needs gamma_e > 0 or gamma_de > 0".into(),
        ));
    }

    let levels: &[usize] = if p.omega_c.0 == 0.0 {
        &[G, E]
    } else {
        &[G, E, R]
    };
    let idx: Vec<usize> = levels
        .iter()
        .flat_map(|&a| levels.iter().map(move |&b| 3 * a + b))
        .collect();
    let n = idx.len();
    let full = build_liouvillian(p);
    let mut a = DMatrix::from_fn(n, n, |i, j| full.generator[(idx[i], idx[j])]);
    // row 0 is the ρgg equation; replace it with tr ρ = 1
    for j in 0..n {
        let (r, c) = (idx[j] / 3, idx[j] % 3);
        a[(0, j)] = if r == c { re(1.0) } else { re(0.0) };
    }
    let mut b = DVector::zeros(n);
    b[0] = re(1.0);

    let sv = a.clone().singular_values();
    let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), &s| {
        (hi.max(s), lo.min(s))
    });
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if ratio < SINGULAR_TOL {
        return Err(Error::SingularSystem { ratio });
    }
    let x = a.lu().solve(&b).ok_or(Error::SingularSystem { ratio })?;

    let mut rho = ComplexMatrix::zeros(3);
    for (&k, &v) in idx.iter().zip(x.iter()) {
        rho.set(k / 3, k % 3, v);
    }
    let rho = rho.hermitize();
    let tr = rho.trace().re;
    DensityMatrix::new(rho.scale_real(1.0 / tr))
}

/// Maximum number of probe halvings in [`weak_probe_coherence`].
pub const MAX_HALVINGS: usize = 20;

/// Probe-normalised steady-state coherence ρeg/Ωp in the linear-response
/// limit.
///
/// Starting from `p.omega_p`, the probe is halved until one more halving
/// changes the result by less than 1e−4 relative.
pub fn weak_probe_coherence(p: &LadderParams) -> Result<Complex64> {
    if !(p.omega_p.0 > 0.0) {
        return Err(Error::InvalidParams("omega_p must be > 0".into()));
    }
    let coherence = |omega_p: f64| -> Result<Complex64> {
        let mut q = *p;
        q.omega_p.0 = omega_p;
        Ok(steady_state(&q)?.get(E, G) / omega_p)
    };
    let mut omega = p.omega_p.0;
    let mut prev = coherence(omega)?;
    let floor = 1e-14 / p.gamma_eg().max(1e-300);
    for _ in 0..MAX_HALVINGS {
        omega *= 0.5;
        let cur = coherence(omega)?;
        if (cur - prev).norm() <= 1e-4 * cur.norm() + floor {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence(format!(
        "linear-response limit not reached after {MAX_HALVINGS} probe halvings"
    )))
}

/// Explicit time propagation of the master equation with classical RK4.
///
/// This path evaluates `−i[H, ρ] + D(ρ)` directly and never touches the
/// vectorised generator, so it doubles as a check on [`steady_state`].
pub mod dynamics {
    use super::*;

    /// A step size inside the RK4 stability region: `h·|λ| ≤ ½` for every
    /// eigenvalue of the generator.
    pub fn stable_step(p: &LadderParams) -> f64 {
        let bound = p.omega_p.0.abs()
            + p.omega_c.0.abs()
            + 2.0 * p.delta_p.0.abs()
            + 2.0 * (p.delta_p.0 + p.delta_c.0).abs()
            + 2.0 * (p.gamma_e.0 + p.gamma_r.0 + p.gamma_de.0 + p.gamma_dr.0);
        if bound > 0.0 {
            0.5 / bound
        } else {
            1.0
        }
    }

    pub fn rk4_step(rho: &ComplexMatrix, p: &LadderParams, h: f64) -> ComplexMatrix {
        let k1 = master_rhs(rho, p);
        let k2 = master_rhs(&(rho + &k1.scale_real(0.5 * h)), p);
        let k3 = master_rhs(&(rho + &k2.scale_real(0.5 * h)), p);
        let k4 = master_rhs(&(rho + &k3.scale_real(h)), p);
        let incr = &(&k1 + &k2.scale_real(2.0)) + &(&k3.scale_real(2.0) + &k4);
        rho + &incr.scale_real(h / 6.0)
    }

    /// Evolves `rho0` for `steps` RK4 steps of size `h`.
    pub fn evolve(rho0: &ComplexMatrix, p: &LadderParams, h: f64, steps: usize) -> ComplexMatrix {
        let mut rho = rho0.clone();
        for _ in 0..steps {
            rho = rk4_step(&rho, p, h);
        }
        rho
    }

    /// Long-time limit of RK4 propagation from |g⟩⟨g|.
    ///
    /// One RK4 step is a fixed linear map `P`; the state after `2^k` steps is
    /// obtained by repeated squaring of `P`. Iteration stops once doubling
    /// the elapsed time changes the state by less than 1e−14 and
    /// `‖dρ/dt‖ < 1e−12`.
    pub fn relax(p: &LadderParams) -> Result<DensityMatrix> {
        let h = stable_step(p);
        let mut prop = DMatrix::<Complex64>::zeros(9, 9);
        for k in 0..9 {
            let col = rk4_step(&basis_matrix(k), p, h).to_row_major();
            for (row, v) in col.into_iter().enumerate() {
                prop[(row, k)] = v;
            }
        }
        let x0 = vectorize(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0]));
        let normalize = |v: DVector<Complex64>| {
            let tr = v[0] + v[4] + v[8];
            v / tr
        };
        let mut x = normalize(&prop * &x0);
        for _ in 0..64 {
            prop = &prop * &prop;
            let next = normalize(&prop * &x0);
            let change = (&next - &x).norm();
            x = next;
            let rho = unvectorize(&x).hermitize();
            if change < 1e-14 && master_rhs(&rho, p).norm() < 1e-12 {
                return DensityMatrix::new(rho);
            }
        }
        let rho = unvectorize(&x).hermitize();
        let residual = master_rhs(&rho, p).norm();
        if residual < 1e-10 {
            DensityMatrix::new(rho)
        } else {
            Err(Error::NoConvergence(format!(
                "RK4 relaxation stalled with ‖dρ/dt‖ = {residual:.3e}"
            )))
        }
    }
}
