//! Nonlinear least squares: Levenberg–Marquardt with numeric Jacobians,
//! a Nelder–Mead simplex minimiser, and the model functions used to
//! describe the measured spectra and guide curves.
//!
//! Bounded parameters are mapped to an unconstrained internal coordinate:
//! logistic for two-sided bounds, softplus for one-sided bounds. Both
//! optimisers work in the internal coordinates; results and covariances are
//! reported for the external parameters.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::optical_response::transmission;
use crate::types::{AngularFreq, LadderField, LadderParams};

type ModelFn<'a> = Box<dyn Fn(&[f64], f64) -> f64 + Send + Sync + 'a>;

pub struct FitProblem<'a> {
    model: ModelFn<'a>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
    pub initial: Vec<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    /// Treat `sigma` as absolute: the covariance is not rescaled by the
    /// reduced χ².
    pub absolute_sigma: bool,
}

impl<'a> FitProblem<'a> {
    pub fn new(
        model: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'a,
        x: Vec<f64>,
        y: Vec<f64>,
        initial: Vec<f64>,
    ) -> Self {
        FitProblem {
            model: Box::new(model),
            x,
            y,
            sigma: None,
            initial,
            lower: None,
            upper: None,
            absolute_sigma: false,
        }
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Self {
        self.sigma = Some(sigma);
        self
    }

    /// Infinite entries leave that side unbounded.
    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = Some(lower);
        self.upper = Some(upper);
        self
    }

    pub fn with_absolute_sigma(mut self, absolute: bool) -> Self {
        self.absolute_sigma = absolute;
        self
    }

    pub fn eval(&self, params: &[f64], x: f64) -> f64 {
        (self.model)(params, x)
    }

    pub fn n_params(&self) -> usize {
        self.initial.len()
    }

    pub fn chi2(&self, params: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.x.len() {
            let r = (self.y[i] - self.eval(params, self.x[i])) / self.sigma_at(i);
            s += r * r;
        }
        if s.is_finite() {
            s
        } else {
            f64::INFINITY
        }
    }

    fn sigma_at(&self, i: usize) -> f64 {
        self.sigma.as_ref().map_or(1.0, |s| s[i])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.len();
        let p = self.n_params();
        if p == 0 {
            return Err(Error::BadInput("no parameters".into()));
        }
        if self.y.len() != n {
            return Err(Error::BadInput(format!(
                "x has {n} points but y has {}",
                self.y.len()
            )));
        }
        if n < p + 1 {
            return Err(Error::BadInput(format!(
                "{n} points cannot constrain {p} parameters"
            )));
        }
        if let Some(i) = self.x.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadInput(format!("x[{i}] is not finite")));
        }
        if let Some(i) = self.y.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadInput(format!("y[{i}] is not finite")));
        }
        if let Some(s) = &self.sigma {
            if s.len() != n {
                return Err(Error::BadInput(format!(
                    "sigma has {} entries, expected {n}",
                    s.len()
                )));
            }
            if let Some(i) = s.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::BadInput(format!(
                    "sigma[{i}] must be finite and > 0"
                )));
            }
        }
        if let Some(i) = self.initial.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadInput(format!("initial[{i}] is not finite")));
        }
        for (name, b) in [("lower", &self.lower), ("upper", &self.upper)] {
            if let Some(b) = b {
                if b.len() != p {
                    return Err(Error::BadInput(format!(
                        "{name} bounds have {} entries, expected {p}",
                        b.len()
                    )));
                }
            }
        }
        for (j, t) in self.transforms().iter().enumerate() {
            let v = self.initial[j];
            let (lo, hi) = t.range();
            if lo >= hi {
                return Err(Error::BadInput(format!(
                    "parameter {j}: lower bound >= upper bound"
                )));
            }
            if v < lo || v > hi {
                return Err(Error::BadInput(format!(
                    "initial[{j}] = {v} outside bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    fn transforms(&self) -> Vec<Transform> {
        (0..self.n_params())
            .map(|j| {
                let lo = self.lower.as_ref().map_or(f64::NEG_INFINITY, |b| b[j]);
                let hi = self.upper.as_ref().map_or(f64::INFINITY, |b| b[j]);
                Transform::new(lo, hi)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum Transform {
    Free,
    Lower(f64),
    Upper(f64),
    Both(f64, f64),
}

fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn softplus_inv(v: f64) -> f64 {
    // v > 0
    v + (-(-v).exp_m1()).ln()
}

impl Transform {
    fn new(lo: f64, hi: f64) -> Self {
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => Transform::Free,
            (true, false) => Transform::Lower(lo),
            (false, true) => Transform::Upper(hi),
            (true, true) => Transform::Both(lo, hi),
        }
    }

    fn range(self) -> (f64, f64) {
        match self {
            Transform::Free => (f64::NEG_INFINITY, f64::INFINITY),
            Transform::Lower(lo) => (lo, f64::INFINITY),
            Transform::Upper(hi) => (f64::NEG_INFINITY, hi),
            Transform::Both(lo, hi) => (lo, hi),
        }
    }

    fn to_external(self, u: f64) -> f64 {
        match self {
            Transform::Free => u,
            Transform::Lower(lo) => lo + softplus(u),
            Transform::Upper(hi) => hi - softplus(u),
            Transform::Both(lo, hi) => lo + (hi - lo) / (1.0 + (-u).exp()),
        }
    }

    fn to_internal(self, p: f64) -> f64 {
        const EDGE: f64 = 1e-12;
        match self {
            Transform::Free => p,
            Transform::Lower(lo) => softplus_inv((p - lo).max(EDGE * (1.0 + lo.abs()))),
            Transform::Upper(hi) => softplus_inv((hi - p).max(EDGE * (1.0 + hi.abs()))),
            Transform::Both(lo, hi) => {
                let s = ((p - lo) / (hi - lo)).clamp(EDGE, 1.0 - EDGE);
                (s / (1.0 - s)).ln()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Parameter covariance, `(JᵀJ)⁻¹` scaled by the reduced χ² unless the
    /// problem uses absolute sigmas.
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    /// One-standard-deviation uncertainties from the covariance diagonal.
    pub fn uncertainties(&self) -> Vec<f64> {
        (0..self.params.len())
            .map(|j| self.covariance[(j, j)].max(0.0).sqrt())
            .collect()
    }

    pub fn reduced_chi2(&self, n_points: usize) -> f64 {
        self.chi2 / (n_points.saturating_sub(self.params.len())).max(1) as f64
    }
}

fn fd_step(v: f64) -> f64 {
    (1e-6 * v.abs()).max(1e-9)
}

struct Internal<'p, 'a> {
    problem: &'p FitProblem<'a>,
    transforms: Vec<Transform>,
}

impl<'p, 'a> Internal<'p, 'a> {
    fn new(problem: &'p FitProblem<'a>) -> Self {
        Internal {
            transforms: problem.transforms(),
            problem,
        }
    }

    fn external(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.transforms)
            .map(|(&v, t)| t.to_external(v))
            .collect()
    }

    fn internal(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(&self.transforms)
            .map(|(&v, t)| t.to_internal(v))
            .collect()
    }

    fn residuals(&self, u: &[f64]) -> DVector<f64> {
        let p = self.external(u);
        let pr = self.problem;
        DVector::from_fn(pr.x.len(), |i, _| {
            (pr.y[i] - pr.eval(&p, pr.x[i])) / pr.sigma_at(i)
        })
    }

    fn chi2(&self, u: &[f64]) -> f64 {
        self.problem.chi2(&self.external(u))
    }
}

/// Covariance of the external parameters at `params`.
fn covariance(problem: &FitProblem, params: &[f64], chi2: f64) -> DMatrix<f64> {
    let n = problem.x.len();
    let p = params.len();
    let mut jac = DMatrix::zeros(n, p);
    let mut q = params.to_vec();
    for j in 0..p {
        let h = fd_step(params[j]);
        q[j] = params[j] + h;
        let mp: Vec<f64> = problem.x.iter().map(|&x| problem.eval(&q, x)).collect();
        q[j] = params[j] - h;
        let mm: Vec<f64> = problem.x.iter().map(|&x| problem.eval(&q, x)).collect();
        q[j] = params[j];
        for i in 0..n {
            jac[(i, j)] = (mp[i] - mm[i]) / (2.0 * h * problem.sigma_at(i));
        }
    }
    let jtj = jac.transpose() * &jac;
    let inv = match jtj.clone().try_inverse() {
        Some(inv) if inv.iter().all(|v| v.is_finite()) => inv,
        _ => jtj
            .pseudo_inverse(1e-14)
            .unwrap_or_else(|_| DMatrix::zeros(p, p)),
    };
    let scale = if problem.absolute_sigma {
        1.0
    } else {
        chi2 / (n - p).max(1) as f64
    };
    let c = inv * scale;
    (&c + c.transpose()) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative χ² decrease regarded as negligible.
    pub ftol: f64,
    /// Number of consecutive negligible decreases that ends the fit.
    pub patience: usize,
    pub gtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 500,
            ftol: 1e-10,
            patience: 3,
            gtol: 1e-12,
        }
    }
}

/// Levenberg–Marquardt fit with default options.
pub fn lm_fit(problem: &FitProblem) -> Result<FitResult> {
    lm_fit_with(problem, &LmOptions::default())
}

pub fn lm_fit_with(problem: &FitProblem, opts: &LmOptions) -> Result<FitResult> {
    problem.validate()?;
    let ctx = Internal::new(problem);
    let u0 = ctx.internal(&problem.initial);
    if !ctx.chi2(&u0).is_finite() {
        return Err(Error::BadInput(
            "model is not finite at the initial parameters".into(),
        ));
    }
    let m = least_squares(|u| ctx.residuals(u), &u0, opts)?;
    if !m.converged {
        return Err(Error::FitFailure {
            chi2: m.value,
            iterations: m.evaluations,
        });
    }
    let params = ctx.external(&m.x);
    let covariance = covariance(problem, &params, m.value);
    Ok(FitResult {
        params,
        covariance,
        chi2: m.value,
        iterations: m.evaluations,
        converged: true,
    })
}

fn sum_sq(r: &DVector<f64>) -> f64 {
    let s = r.norm_squared();
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

fn numeric_jacobian(f: &impl Fn(&[f64]) -> DVector<f64>, x: &[f64], rows: usize) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(rows, x.len());
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let h = fd_step(x[j]);
        xp[j] = x[j] + h;
        let rp = f(&xp);
        xp[j] = x[j] - h;
        let rm = f(&xp);
        xp[j] = x[j];
        for i in 0..rows {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Minimises `Σ r_i(x)²` by Levenberg–Marquardt with a central-difference
/// Jacobian. `evaluations` in the result counts iterations; when the
/// iteration budget runs out the best point so far is returned with
/// `converged == false`.
pub fn least_squares(
    residuals: impl Fn(&[f64]) -> DVector<f64>,
    x0: &[f64],
    opts: &LmOptions,
) -> Result<Minimum> {
    let mut u = x0.to_vec();
    let mut r = residuals(&u);
    let mut chi2 = sum_sq(&r);
    if !chi2.is_finite() {
        return Err(Error::BadInput(
            "residuals are not finite at the start point".into(),
        ));
    }
    let mut lambda = 1e-3;
    let mut quiet = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = numeric_jacobian(&residuals, &u, r.len());
        let grad = jac.transpose() * &r;
        if grad.amax() < opts.gtol || chi2 == 0.0 {
            converged = true;
            break;
        }
        let jtj = jac.transpose() * &jac;
        let dmax = jtj.diagonal().max().max(f64::MIN_POSITIVE);

        let mut accepted = None;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..a.nrows() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12 * dmax);
            }
            // (JᵀJ + λD)δ = −Jᵀr
            let step = a.cholesky().map(|c| c.solve(&(-&grad)));
            if let Some(step) = step {
                let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let rt = residuals(&trial);
                let c = sum_sq(&rt);
                if c < chi2 {
                    accepted = Some((trial, rt, c));
                    lambda = (lambda / 10.0).max(1e-12);
                    break;
                }
            }
            lambda *= 10.0;
        }
        match accepted {
            Some((trial, rt, c)) => {
                let rel = (chi2 - c) / chi2.max(f64::MIN_POSITIVE);
                u = trial;
                r = rt;
                chi2 = c;
                if rel < opts.ftol {
                    quiet += 1;
                    if quiet >= opts.patience {
                        converged = true;
                        break;
                    }
                } else {
                    quiet = 0;
                }
            }
            None => {
                // no descent direction left at working precision
                converged = true;
                break;
            }
        }
    }
    Ok(Minimum {
        x: u,
        value: chi2,
        evaluations: iterations,
        converged,
    })
}

/// Runs [`lm_fit`] from several starting points in parallel and keeps the
/// lowest χ²; ties go to the earliest start.
pub fn lm_fit_multistart(problem: &FitProblem, starts: &[Vec<f64>]) -> Result<FitResult> {
    let outcomes: Vec<Result<FitResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = starts
            .iter()
            .map(|start| {
                scope.spawn(move || {
                    let trial = FitProblem {
                        model: Box::new(|p: &[f64], x: f64| problem.eval(p, x)),
                        x: problem.x.clone(),
                        y: problem.y.clone(),
                        sigma: problem.sigma.clone(),
                        initial: start.clone(),
                        lower: problem.lower.clone(),
                        upper: problem.upper.clone(),
                        absolute_sigma: problem.absolute_sigma,
                    };
                    lm_fit(&trial)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fit worker panicked"))
            .collect()
    });
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for outcome in outcomes {
        match outcome {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.chi2 < b.chi2) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::BadInput("no starting points".into())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_evaluations: usize,
    /// Simplex diameter, relative to `max(1, |best|)`, that ends a run.
    pub xtol: f64,
    /// Spread of vertex values, relative to `max(|f_best|, tiny)`, that
    /// also ends a run. Zero disables the test.
    pub ftol: f64,
    /// Initial step relative to each coordinate (absolute 2.5e−4 at zero).
    pub initial_step: f64,
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_evaluations: 20_000,
            xtol: 1e-10,
            ftol: 0.0,
            initial_step: 0.05,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead minimisation with reflection 1, expansion 2, contraction ½
/// and shrink ½. After convergence the search restarts from the best vertex
/// `opts.restarts` times.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &SimplexOptions) -> Minimum {
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let n = x0.len();
    let (expand, contract, shrink) = (2.0, 0.5, 0.5);
    let mut best = x0.to_vec();
    let mut best_val = eval(x0, &mut evals);
    let mut converged = false;

    for _run in 0..=opts.restarts {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best.clone(), best_val));
        for j in 0..n {
            let mut v = best.clone();
            v[j] += if v[j] != 0.0 {
                opts.initial_step * v[j]
            } else {
                2.5e-4
            };
            let fv = eval(&v, &mut evals);
            simplex.push((v, fv));
        }
        converged = false;
        while evals < opts.max_evaluations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let scale = simplex[0].0.iter().map(|v| v.abs()).fold(1.0, f64::max);
            let diameter = simplex[1..]
                .iter()
                .map(|(v, _)| {
                    v.iter()
                        .zip(&simplex[0].0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            let spread = simplex[n].1 - simplex[0].1;
            if diameter < opts.xtol * scale
                || (opts.ftol > 0.0 && spread <= opts.ftol * simplex[0].1.abs().max(1e-300))
            {
                converged = true;
                break;
            }
            let centroid: Vec<f64> = (0..n)
                .map(|k| simplex[..n].iter().map(|(v, _)| v[k]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let xr = along(1.0);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(expand);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let xc = along(contract);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = along(-contract);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x_best = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let v: Vec<f64> = vertex
                            .0
                            .iter()
                            .zip(&x_best)
                            .map(|(a, b)| b + shrink * (a - b))
                            .collect();
                        let fv = eval(&v, &mut evals);
                        *vertex = (v, fv);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 <= best_val {
            best = simplex[0].0.clone();
            best_val = simplex[0].1;
        }
        if !converged {
            break;
        }
    }
    Minimum {
        x: best,
        value: best_val,
        evaluations: evals,
        converged,
    }
}

/// Least-squares fit by Nelder–Mead on χ².
pub fn simplex_fit(problem: &FitProblem) -> Result<FitResult> {
    simplex_fit_with(problem, &SimplexOptions::default())
}

pub fn simplex_fit_with(problem: &FitProblem, opts: &SimplexOptions) -> Result<FitResult> {
    problem.validate()?;
    let ctx = Internal::new(problem);
    let u0 = ctx.internal(&problem.initial);
    let m = nelder_mead(|u| ctx.chi2(u), &u0, opts);
    if !m.converged {
        return Err(Error::FitFailure {
            chi2: m.value,
            iterations: m.evaluations,
        });
    }
    let params = ctx.external(&m.x);
    let covariance = covariance(problem, &params, m.value);
    Ok(FitResult {
        params,
        covariance,
        chi2: m.value,
        iterations: m.evaluations,
        converged: true,
    })
}

/// Guide curve `A·exp(−x/t) + y0` with `params = [A, t, y0]`. Negative `t`
/// (growth) is allowed.
pub fn exp_decay(params: &[f64], x: f64) -> f64 {
    let (a, t, y0) = (params[0], params[1], params[2]);
    a * (-x / t).exp() + y0
}

/// EIT transmission model with a subset of [`LadderParams`] free.
#[derive(Debug, Clone, PartialEq)]
pub struct EitModel {
    pub fixed: LadderParams,
    pub free: Vec<LadderField>,
}

impl EitModel {
    pub fn new(fixed: LadderParams, free: Vec<LadderField>) -> Result<Self> {
        for (i, f) in free.iter().enumerate() {
            if free[..i].contains(f) {
                return Err(Error::BadInput(format!("free parameter {f} listed twice")));
            }
        }
        Ok(EitModel { fixed, free })
    }

    /// Current values of the free parameters.
    pub fn initial(&self) -> Vec<f64> {
        self.free.iter().map(|&f| self.fixed.get(f)).collect()
    }

    pub fn with_values(&self, values: &[f64]) -> LadderParams {
        let mut p = self.fixed;
        for (&f, &v) in self.free.iter().zip(values) {
            p.set(f, v);
        }
        p
    }

    pub fn eval(&self, values: &[f64], dw: f64) -> Result<f64> {
        transmission(AngularFreq(dw), &self.with_values(values))
    }

    /// Lower bound 0 for rates, optical depth and offsets.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lower = self
            .free
            .iter()
            .map(|f| {
                if f.is_non_negative() {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        (lower, vec![f64::INFINITY; self.free.len()])
    }

    /// Builds a bounded fit problem starting from the model's current values.
    pub fn problem<'a>(
        &'a self,
        x: Vec<f64>,
        y: Vec<f64>,
        sigma: Option<Vec<f64>>,
    ) -> FitProblem<'a> {
        let (lo, hi) = self.bounds();
        let mut prob = FitProblem::new(
            move |v: &[f64], dw: f64| self.eval(v, dw).unwrap_or(f64::NAN),
            x,
            y,
            self.initial(),
        )
        .with_bounds(lo, hi);
        if let Some(s) = sigma {
            prob = prob.with_sigma(s);
        }
        prob
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::presets;

    #[test]
    fn exact_linear_fit() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 * x + 1.0).collect();
        let prob = FitProblem::new(|p, x| p[0] * x + p[1], x, y, vec![0.0, 0.0]);
        let r = lm_fit(&prob).unwrap();
        assert!((r.params[0] - 2.0).abs() < 1e-9);
        assert!((r.params[1] - 1.0).abs() < 1e-9);
        assert!(r.converged);
        assert!(r.chi2 >= 0.0);
    }

    #[test]
    fn exp_decay_values() {
        let p = [0.73481, 2.45, 0.07865];
        assert!((exp_decay(&p, 0.0) - (0.73481 + 0.07865)).abs() < 1e-15);
        assert!((exp_decay(&p, 1e6) - 0.07865).abs() < 1e-15);
        let v = exp_decay(&p, 2.45);
        assert!((v - (0.73481 / std::f64::consts::E + 0.07865)).abs() < 1e-15);
        assert!((v - 0.3490).abs() < 1e-4);
    }

    fn decay_problem(x: Vec<f64>, truth: [f64; 3], start: Vec<f64>) -> FitProblem<'static> {
        let y = x.iter().map(|&x| exp_decay(&truth, x)).collect();
        FitProblem::new(exp_decay, x, y, start)
    }

    #[test]
    fn recovers_decay_guide_curve() {
        let truth = [0.73481, 2.45, 0.07865];
        let x: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let prob = decay_problem(x, truth, vec![0.5, 3.0, 0.1]);
        let r = lm_fit(&prob).unwrap();
        for (a, b) in r.params.iter().zip(truth) {
            assert!((a - b).abs() < 1e-6, "{:?}", r.params);
        }
    }

    #[test]
    fn simplex_quadratic_bowl() {
        let m = nelder_mead(
            |p| (p[0] - 3.0).powi(2) + (p[1] + 1.0).powi(2),
            &[0.0, 0.0],
            &SimplexOptions::default(),
        );
        assert!(m.converged);
        assert!((m.x[0] - 3.0).abs() < 1e-6 && (m.x[1] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn simplex_agrees_with_lm() {
        let truth = [0.73481, 2.45, 0.07865];
        let x: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let prob = decay_problem(x, truth, vec![0.6, 2.8, 0.1]);
        let a = lm_fit(&prob).unwrap();
        let b = simplex_fit(&prob).unwrap();
        for (p, q) in a.params.iter().zip(&b.params) {
            assert!((p - q).abs() < 1e-4, "{:?} vs {:?}", a.params, b.params);
        }
    }

    #[test]
    fn simplex_growth_guide_curve() {
        let truth = [-198.23, 7.0, 0.87];
        let x: Vec<f64> = (40..=60).map(|i| i as f64).collect();
        let prob = decay_problem(x, truth, vec![-150.0, 6.5, 0.8]);
        let r = simplex_fit(&prob).unwrap();
        for (a, b) in r.params.iter().zip(truth) {
            assert!(((a - b) / b).abs() < 1e-3, "{:?}", r.params);
        }
    }

    #[test]
    fn bounds_are_respected() {
        // best unconstrained slope is 2; bound it to [0, 1]
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 * x).collect();
        let prob =
            FitProblem::new(|p, x| p[0] * x, x, y, vec![0.5]).with_bounds(vec![0.0], vec![1.0]);
        let r = lm_fit(&prob).unwrap();
        assert!(r.params[0] <= 1.0 && r.params[0] > 0.99);
    }

    #[test]
    fn rejects_bad_input() {
        let prob = FitProblem::new(
            |p, x| p[0] * x,
            vec![0.0, 1.0, f64::NAN],
            vec![0.0, 1.0, 2.0],
            vec![1.0],
        );
        assert!(matches!(lm_fit(&prob), Err(Error::BadInput(m)) if m.contains("x[2]")));
        let prob = FitProblem::new(
            |p, x| p[0] * x + p[1],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        );
        assert!(matches!(lm_fit(&prob), Err(Error::BadInput(_))));
        let prob = FitProblem::new(|p, x| p[0] * x, vec![0.0, 1.0], vec![0.0, 1.0], vec![2.0])
            .with_bounds(vec![0.0], vec![1.0]);
        assert!(matches!(lm_fit(&prob), Err(Error::BadInput(_))));
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let x: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let prob = decay_problem(x, [0.73481, 2.45, 0.07865], vec![0.1, 9.0, 0.5]);
        let opts = LmOptions {
            max_iterations: 1,
            ..LmOptions::default()
        };
        assert!(matches!(
            lm_fit_with(&prob, &opts),
            Err(Error::FitFailure { .. })
        ));
    }

    #[test]
    fn fits_are_deterministic() {
        let truth = [0.73481, 2.45, 0.07865];
        let x: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let a = lm_fit(&decay_problem(x.clone(), truth, vec![0.5, 3.0, 0.1])).unwrap();
        let b = lm_fit(&decay_problem(x, truth, vec![0.5, 3.0, 0.1])).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn covariance_shrinks_with_more_points() {
        let truth = [1.0, 2.0, 0.1];
        // the same 20-point grid repeated once and four times
        let grid: Vec<f64> = (0..20).map(|i| 10.0 * i as f64 / 19.0).collect();
        let errs: Vec<f64> = [1usize, 4]
            .iter()
            .map(|&reps| {
                let x: Vec<f64> = grid.iter().copied().cycle().take(20 * reps).collect();
                let n = x.len();
                let prob = decay_problem(x, truth, vec![0.9, 2.1, 0.12])
                    .with_sigma(vec![0.01; n])
                    .with_absolute_sigma(true);
                let r = lm_fit(&prob).unwrap();
                let c = &r.covariance;
                assert!((c - c.transpose()).amax() < 1e-8);
                assert!(c.clone().symmetric_eigen().eigenvalues.min() > -1e-8);
                r.uncertainties()[1]
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!((ratio - 2.0).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn eit_model_delegates() {
        let p = presets::gate_off();
        let m = EitModel::new(p, vec![]).unwrap();
        for dw in [-10.0, -1.0, 0.0, 2.5] {
            assert_eq!(
                m.eval(&[], dw).unwrap(),
                transmission(AngularFreq(dw), &p).unwrap()
            );
        }
        assert!(EitModel::new(p, vec![LadderField::OmegaC, LadderField::OmegaC]).is_err());
    }

    #[test]
    fn eit_model_recovers_coupling() {
        let truth = presets::strong_coupling_eit();
        let x: Vec<f64> = (0..201).map(|i| -30.0 + 0.3 * i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&dw| transmission(AngularFreq(dw), &truth).unwrap())
            .collect();
        let start = LadderParams {
            omega_c: AngularFreq(8.0),
            ..truth
        };
        let model = EitModel::new(start, vec![LadderField::OmegaC]).unwrap();
        let r = lm_fit(&model.problem(x, y, None)).unwrap();
        assert!(((r.params[0] - 11.0) / 11.0).abs() < 0.01, "{:?}", r.params);
    }

    #[test]
    fn eit_model_degenerate_coupling() {
        let truth = LadderParams {
            omega_c: AngularFreq(0.0),
            ..presets::bare_absorption()
        };
        let x: Vec<f64> = (0..101).map(|i| -20.0 + 0.4 * i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&dw| transmission(AngularFreq(dw), &truth).unwrap())
            .collect();
        let start = LadderParams {
            omega_c: AngularFreq(8.0),
            ..truth
        };
        let model = EitModel::new(start, vec![LadderField::OmegaC]).unwrap();
        let outcome = lm_fit(&model.problem(x, y, None));
        match outcome {
            Ok(r) => {
                assert!(r.params[0].is_finite());
                assert!(r.params[0].abs() < 0.1, "{:?}", r.params);
            }
            Err(e) => assert!(matches!(e, Error::FitFailure { .. })),
        }
    }
}
