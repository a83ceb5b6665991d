//! Quantitative indicators: ℓ1 distance and sensitivity, Wigner
//! negativity, Bhattacharyya coefficient, and the empirical sensitivity
//! scaling law (evaluation and refit).

use crate::error::{EngineError, Result};
use crate::evaluate::{quad_fold1, quad_fold2};
use crate::grid::{GridHeuristic, GridSpec, WignerGrid};
use crate::lsq::{levenberg_marquardt, FitOptions};
use crate::real::Real;
use crate::state::WignerSource;
use num_complex::Complex;

/// Displacement direction for sensitivity scans.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Direction<T> {
    Position,
    Momentum,
    Angle(T),
}

impl<T: Real> Direction<T> {
    pub fn angle(self) -> T {
        match self {
            Direction::Position => T::zero(),
            Direction::Momentum => T::FRAC_PI_2(),
            Direction::Angle(a) => a,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Direction::Position => "position".into(),
            Direction::Momentum => "momentum".into(),
            Direction::Angle(a) => format!("angle{a}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SensitivityResult<T> {
    pub direction: Direction<T>,
    /// dℓ1/dσ estimate (dimensionless per ground-state width).
    pub value: T,
    /// The finite-difference step the estimate was accepted at.
    pub sigma_step: T,
    pub grid_spec: GridSpec<T>,
    /// Relative change of the quotient under the final step halving.
    pub step_residual: T,
}

#[derive(Clone, Copy, Debug)]
pub struct SensitivityOptions<T> {
    pub sigma_step: Option<T>,
    pub max_halvings: usize,
    /// Accept when halving σ moves the quotient by less than this.
    pub step_rel_tol: T,
    pub heuristic: GridHeuristic<T>,
}

impl<T: Real> Default for SensitivityOptions<T> {
    fn default() -> Self {
        SensitivityOptions {
            sigma_step: None,
            max_halvings: 10,
            step_rel_tol: T::of(0.01),
            heuristic: GridHeuristic::metric(),
        }
    }
}

/// ℓ1 distance Σ|W₁ − W₂|·ΔxΔp between two grids with identical specs.
pub fn l1_distance<T: Real>(a: &WignerGrid<T>, b: &WignerGrid<T>) -> Result<T> {
    if a.spec != b.spec {
        return Err(EngineError::GridMismatch(format!("{:?} vs {:?}", a.spec, b.spec)));
    }
    let s: T = a.values.iter().zip(&b.values).map(|(&x, &y)| (x - y).abs()).sum();
    Ok(s * a.spec.cell_area())
}

/// ℓ1 distance between two states evaluated on `spec`, streamed row by
/// row (no grids materialized).
pub fn l1_between<T: Real, S: WignerSource<T>>(a: &S, b: &S, spec: &GridSpec<T>) -> T {
    let ea = a.prepare(spec);
    let eb = b.prepare(spec);
    quad_fold2(spec, ea.as_ref(), eb.as_ref(), |x, y| (x - y).abs())
}

/// Default finite-difference step: 1e−3 × min(1, fringe wavelength/4);
/// the ℓ1 quotient at σ converges from below, so the step-halving guard
/// in [`l1_sensitivity`] checks it.
pub fn default_sigma_step<T: Real>(max_sep: T) -> T {
    let base = T::of(1e-3);
    if max_sep > T::zero() {
        let fringe = T::of(2.0) * T::PI() / (T::SQRT_2() * max_sep);
        base * T::one().min(fringe / T::of(4.0))
    } else {
        base
    }
}

/// dℓ1/dσ at σ = 0 via the central-symmetric quotient
/// ℓ1(ρ_{+σ/2}, ρ_{−σ/2})/σ, with adaptive step halving until the
/// quotient is stable to `step_rel_tol`.
///
/// The displaced copies are produced analytically on the state
/// representation (never by grid interpolation).
pub fn l1_sensitivity<T: Real, S: WignerSource<T>>(
    state: &S,
    direction: Direction<T>,
    opts: &SensitivityOptions<T>,
) -> Result<SensitivityResult<T>> {
    let (radius, sep) = state.extent_hints();
    let mut sigma = opts.sigma_step.unwrap_or_else(|| default_sigma_step(sep));
    if !(sigma > T::zero()) {
        return Err(EngineError::InvalidInput("sigma_step must be positive".into()));
    }
    let mut heur = opts.heuristic;
    heur.extra_extent = heur.extra_extent + sigma;
    let spec = heur.build(radius, sep, state.nbar());
    let dgamma = Complex::from_polar(T::one() / T::SQRT_2(), direction.angle());
    let quotient = |sig: T| -> T {
        let half = sig / T::of(2.0);
        let sp = state.displaced(dgamma * half);
        let sm = state.displaced(-(dgamma * half));
        l1_between(&sp, &sm, &spec) / sig
    };
    let mut q = quotient(sigma);
    for _ in 0..opts.max_halvings {
        let q_half = quotient(sigma / T::of(2.0));
        let change = (q_half - q).abs() / q_half.abs().max(T::of(1e-300));
        if change < opts.step_rel_tol {
            return Ok(SensitivityResult {
                direction,
                value: q_half,
                sigma_step: sigma / T::of(2.0),
                grid_spec: spec,
                step_residual: change,
            });
        }
        sigma = sigma / T::of(2.0);
        q = q_half;
    }
    Err(EngineError::NumericalInstability {
        halvings: opts.max_halvings,
        last_change: T::to_f64(&q).unwrap_or(f64::NAN),
    })
}

/// Volume of Wigner negativity Σ(|W| − W)/2 · ΔxΔp on a grid.
pub fn negativity_volume<T: Real>(w: &WignerGrid<T>) -> T {
    let s: T = w.values.iter().map(|&v| v.abs() - v).sum();
    s * w.spec.cell_area() / T::of(2.0)
}

/// Streaming negativity volume and minimum for a state on an automatic
/// metric-resolution grid; returns (volume, min W, grid).
pub fn negativity_of<T: Real, S: WignerSource<T>>(
    state: &S,
    heuristic: &GridHeuristic<T>,
) -> (T, T, GridSpec<T>) {
    let (radius, sep) = state.extent_hints();
    let spec = heuristic.build(radius, sep, state.nbar());
    let eval = state.prepare(&spec);
    let (vol2, min) = quad_fold1(&spec, eval.as_ref(), |v| v.abs() - v);
    (vol2 / T::of(2.0), min, spec)
}

/// Minimum grid value.
pub fn min_wigner<T: Real>(w: &WignerGrid<T>) -> T {
    w.min_value()
}

/// Bhattacharyya coefficient Σ√(p·q)·ΔxΔp of two normalized densities on
/// identical grids. Rejects genuinely negative inputs; rounding-level
/// negatives (|v| below 1e−12 of the peak) are clamped to zero.
pub fn bhattacharyya<T: Real>(p: &WignerGrid<T>, q: &WignerGrid<T>) -> Result<T> {
    if p.spec != q.spec {
        return Err(EngineError::GridMismatch(format!("{:?} vs {:?}", p.spec, q.spec)));
    }
    let floor_p = -T::of(1e-12) * p.max_abs();
    let floor_q = -T::of(1e-12) * q.max_abs();
    let mut s = T::zero();
    for (i, (&a, &b)) in p.values.iter().zip(&q.values).enumerate() {
        if a < floor_p {
            return Err(EngineError::NegativeDensity { value: a.to_f64().unwrap_or(f64::NAN), index: i });
        }
        if b < floor_q {
            return Err(EngineError::NegativeDensity { value: b.to_f64().unwrap_or(f64::NAN), index: i });
        }
        s += (a.max(T::zero()) * b.max(T::zero())).sqrt();
    }
    Ok(s * p.spec.cell_area())
}

/// The 12 constants of the empirical dℓ1/dσ scaling law, plus the fit
/// quality it was obtained with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub d1: f64,
    pub d2: f64,
    pub e1: f64,
    pub f1: f64,
    pub f2: f64,
    /// Sum of squared residuals of the fit that produced these values.
    pub chi2: f64,
}

/// Published values of the scaling-law constants.
pub const PAPER_SCALING: ScalingCoefficients = ScalingCoefficients {
    a1: 1.164,
    a2: 0.046,
    b1: -0.526,
    b2: 0.248,
    c1: -0.795,
    c2: 2.076,
    c3: -1.377,
    d1: -0.485,
    d2: 0.698,
    e1: -0.807,
    f1: -0.063,
    f2: -0.776,
    chi2: 0.29,
};

/// dℓ1/dσ ≈ (a1·n + a2)·e^{(b1·n+b2)·n̄} + e^{c1·μ}(c2 + c3·n)μ²
///          + (d1 + d2·n)μ + e^{e1·μ} + f1·n + f2.
pub fn scaling_formula(n: usize, nbar: f64, mu: f64, c: &ScalingCoefficients) -> f64 {
    let nf = n as f64;
    (c.a1 * nf + c.a2) * ((c.b1 * nf + c.b2) * nbar).exp()
        + (c.c1 * mu).exp() * (c.c2 + c.c3 * nf) * mu * mu
        + (c.d1 + c.d2 * nf) * mu
        + (c.e1 * mu).exp()
        + c.f1 * nf
        + c.f2
}

/// One measured sensitivity sample for the scaling refit.
#[derive(Clone, Copy, Debug)]
pub struct ScalingSample {
    pub n: usize,
    pub nbar: f64,
    pub mu: f64,
    pub value: f64,
}

fn pack(c: &ScalingCoefficients) -> [f64; 12] {
    [c.a1, c.a2, c.b1, c.b2, c.c1, c.c2, c.c3, c.d1, c.d2, c.e1, c.f1, c.f2]
}

fn unpack(p: &[f64], chi2: f64) -> ScalingCoefficients {
    ScalingCoefficients {
        a1: p[0],
        a2: p[1],
        b1: p[2],
        b2: p[3],
        c1: p[4],
        c2: p[5],
        c3: p[6],
        d1: p[7],
        d2: p[8],
        e1: p[9],
        f1: p[10],
        f2: p[11],
        chi2,
    }
}

fn eval_params(p: &[f64], n: f64, nbar: f64, mu: f64) -> f64 {
    (p[0] * n + p[1]) * ((p[2] * n + p[3]) * nbar).exp()
        + (p[4] * mu).exp() * (p[5] + p[6] * n) * mu * mu
        + (p[7] + p[8] * n) * mu
        + (p[9] * mu).exp()
        + p[10] * n
        + p[11]
}

/// Least-squares fit of the scaling form. Returns the coefficients with
/// `chi2` = SSE, and the per-coefficient standard errors when the
/// normal matrix is invertible.
pub fn fit_scaling_detailed(
    samples: &[ScalingSample],
) -> Result<(ScalingCoefficients, Option<Vec<f64>>)> {
    if samples.len() < 30 {
        return Err(EngineError::DegenerateSamples(format!(
            "need at least 30 samples, got {}",
            samples.len()
        )));
    }
    for n in [2usize, 3, 4] {
        if !samples.iter().any(|s| s.n == n) {
            return Err(EngineError::DegenerateSamples(format!("no samples with n = {n}")));
        }
    }
    let mean = samples.iter().map(|s| s.value).sum::<f64>() / samples.len() as f64;
    let var =
        samples.iter().map(|s| (s.value - mean).powi(2)).sum::<f64>() / samples.len() as f64;
    if var < 1e-16 * mean.abs().max(1e-12).powi(2) {
        return Err(EngineError::DegenerateSamples("samples are constant".into()));
    }
    let residuals = |p: &[f64]| -> Vec<f64> {
        samples
            .iter()
            .map(|s| eval_params(p, s.n as f64, s.nbar, s.mu) - s.value)
            .collect()
    };
    // separable warm start: for a few nonlinear seeds (b1, b2, c1, e1),
    // solve the linear subproblem exactly, then polish everything with LM
    let mut best: Option<FitBest> = None;
    for &(b1, b2) in &[(-0.3, 0.0), (-0.6, 0.2), (-1.0, 0.0)] {
        for &(c1, e1) in &[(-0.5, -0.5), (-1.0, -1.0)] {
            let lin = match solve_linear_part(samples, b1, b2, c1, e1) {
                Some(l) => l,
                None => continue,
            };
            let p0 = [lin[0], lin[1], b1, b2, c1, lin[2], lin[3], lin[4], lin[5], e1, lin[6], lin[7]];
            if let Ok(out) = levenberg_marquardt(&residuals, &p0, &FitOptions::default()) {
                if best.as_ref().map_or(true, |b| out.cost < b.cost) {
                    best = Some(FitBest { params: out.params, cost: out.cost, variance: out.variance });
                }
            }
        }
    }
    let best = best.ok_or_else(|| EngineError::DegenerateSamples("no seed converged".into()))?;
    let stderr = best.variance.map(|v| v.into_iter().map(|x| x.max(0.0).sqrt()).collect());
    Ok((unpack(&best.params, best.cost), stderr))
}

struct FitBest {
    params: Vec<f64>,
    cost: f64,
    variance: Option<Vec<f64>>,
}

/// Least-squares fit of the scaling form (see [`fit_scaling_detailed`]).
pub fn fit_scaling(samples: &[ScalingSample]) -> Result<ScalingCoefficients> {
    fit_scaling_detailed(samples).map(|(c, _)| c)
}

/// Linear subproblem: with (b1,b2,c1,e1) fixed, the model is linear in
/// (a1,a2,c2,c3,d1,d2,f1,f2).
fn solve_linear_part(
    samples: &[ScalingSample],
    b1: f64,
    b2: f64,
    c1: f64,
    e1: f64,
) -> Option<Vec<f64>> {
    const K: usize = 8;
    let mut ata = vec![0.0; K * K];
    let mut atb = vec![0.0; K];
    for s in samples {
        let n = s.n as f64;
        let e = ((b1 * n + b2) * s.nbar).exp();
        let g = (c1 * s.mu).exp() * s.mu * s.mu;
        let row = [n * e, e, g, n * g, s.mu, n * s.mu, n, 1.0];
        let y = s.value - (e1 * s.mu).exp();
        for a in 0..K {
            atb[a] += row[a] * y;
            for b in 0..K {
                ata[a * K + b] += row[a] * row[b];
            }
        }
    }
    crate::lsq::solve_dense(&ata, &atb, K)
}
