//! Modelling of the hot-regime experiment: homodyne-trace fitting,
//! Chi-distributed drive sampling, semiclassical heralding weights,
//! interferometer drift and timing-jitter averaging, and Poissonian
//! counting statistics.

use crate::error::{EngineError, Result};
use crate::grid::{GridSpec, WignerGrid};
use crate::hypercube::{self, KrausSpec};
use crate::lsq::{levenberg_marquardt, FitOptions};
use crate::state::PhaseSpaceState;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

/// Membrane resonance frequency (Hz) of the device the datasets model.
pub const DEFAULT_F_M: f64 = 105.64e3;
/// Readout unit λ_R/4 in nanometers (axis unit of the measured densities).
pub const READOUT_UNIT_NM: f64 = 158.2;
/// Measured inter-photon delays (seconds) for n = 2, 3, 4 heralding.
pub const MEASURED_DELAYS_N2: [f64; 1] = [2.36e-6];
pub const MEASURED_DELAYS_N3: [f64; 2] = [1.57e-6, 1.57e-6];
pub const MEASURED_DELAYS_N4: [f64; 3] = [1.24e-6, 1.12e-6, 1.18e-6];
/// Paper's timing uncertainty between photon detections (seconds).
pub const DEFAULT_JITTER_S: f64 = 15e-9;

/// Parameters of the homodyne trace model
/// `(1 − d·|cos(ω_M t + atan2(X, P) − π/4)|) · A·cos(X·cos(ω_M t) + P·sin(ω_M t) + φ + c)`.
#[derive(Clone, Copy, Debug)]
pub struct TraceModelParams {
    /// Signal amplitude A (arbitrary units), fixed during fits.
    pub amplitude: f64,
    /// Mechanical angular frequency ω_M (rad/s), fixed during fits.
    pub omega_m: f64,
    /// Phase-space coordinates in readout units (λ_R/4).
    pub x: f64,
    pub p: f64,
    /// Interferometer phase φ.
    pub phi: f64,
    /// DC offset c, fixed during fits.
    pub offset: f64,
    /// Amplitude-modulation strength d ∈ [0, 1), fixed during fits.
    pub mod_depth: f64,
}

impl TraceModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0) {
            return Err(EngineError::InvalidInput("amplitude must be positive".into()));
        }
        if !(self.omega_m > 0.0) {
            return Err(EngineError::InvalidInput("omega_m must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.mod_depth) {
            return Err(EngineError::InvalidInput("mod_depth must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Evaluate the trace model at time `t`. The printed arctan(X/P) is
/// implemented as the two-argument arctangent atan2(X, P), which agrees
/// where P > 0 and removes the P = 0 singularity.
pub fn trace_model(params: &TraceModelParams, t: f64) -> f64 {
    let wt = params.omega_m * t;
    let envelope = 1.0 - params.mod_depth * (wt + params.x.atan2(params.p) - std::f64::consts::FRAC_PI_4).cos().abs();
    envelope
        * params.amplitude
        * (params.x * wt.cos() + params.p * wt.sin() + params.phi + params.offset).cos()
}

/// Fit (X, P, φ) to homodyne samples `(t, value)` by damped least
/// squares; A, ω_M, c, d are taken from `guess` and held fixed.
pub fn fit_trace(samples: &[(f64, f64)], guess: &TraceModelParams) -> Result<TraceModelParams> {
    guess.validate()?;
    if samples.len() < 100 {
        return Err(EngineError::InvalidInput(format!(
            "need at least 100 samples, got {}",
            samples.len()
        )));
    }
    let (tmin, tmax) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(t, _)| (lo.min(t), hi.max(t)));
    let period = 2.0 * std::f64::consts::PI / guess.omega_m;
    if tmax - tmin < 2.0 * period {
        return Err(EngineError::InvalidInput(format!(
            "samples span {:.3e}s, need at least two periods ({:.3e}s)",
            tmax - tmin,
            2.0 * period
        )));
    }
    let mean = samples.iter().map(|&(_, v)| v).sum::<f64>() / samples.len() as f64;
    let rms = (samples.iter().map(|&(_, v)| (v - mean).powi(2)).sum::<f64>()
        / samples.len() as f64)
        .sqrt();
    let threshold = 1e-9 * guess.amplitude.max(1.0);
    if rms < threshold {
        return Err(EngineError::DegenerateTrace { amplitude: rms, threshold });
    }
    let base = *guess;
    let residuals = |p: &[f64]| -> Vec<f64> {
        let trial = TraceModelParams { x: p[0], p: p[1], phi: p[2], ..base };
        samples.iter().map(|&(t, v)| trace_model(&trial, t) - v).collect()
    };
    let out = levenberg_marquardt(&residuals, &[guess.x, guess.p, guess.phi], &FitOptions::default())?;
    Ok(TraceModelParams { x: out.params[0], p: out.params[1], phi: out.params[2], ..base })
}

/// Heralding recipe for the semiclassical hot-regime model.
#[derive(Clone, Debug)]
pub struct HeraldConfig {
    pub order: usize,
    pub mu: f64,
    /// Effective occupation of the driven state.
    pub nbar_drive: f64,
    pub sample_count: usize,
    pub rng_seed: u64,
    /// n−1 inter-photon delays (seconds); `None` means T/2n each.
    pub delays: Option<Vec<f64>>,
    /// Mechanical frequency (Hz).
    pub f_m: f64,
}

impl HeraldConfig {
    pub fn new(order: usize, mu: f64, nbar_drive: f64) -> Self {
        HeraldConfig {
            order,
            mu,
            nbar_drive,
            sample_count: 400_000,
            rng_seed: 0,
            delays: None,
            f_m: DEFAULT_F_M,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(EngineError::InvalidInput("order must be >= 1".into()));
        }
        if self.sample_count == 0 {
            return Err(EngineError::InvalidInput("sample_count must be >= 1".into()));
        }
        if let Some(d) = &self.delays {
            if d.len() + 1 != self.order {
                return Err(EngineError::InvalidInput(format!(
                    "{} delays given for order {} (need n−1)",
                    d.len(),
                    self.order
                )));
            }
        }
        Ok(())
    }

    /// Absolute detection times, first photon at t = 0.
    pub fn detection_times(&self) -> Vec<f64> {
        let period = 1.0 / self.f_m;
        let default = period / (2.0 * self.order as f64);
        let mut t = 0.0;
        let mut out = vec![0.0];
        for k in 1..self.order {
            t += match &self.delays {
                Some(d) => d[k - 1],
                None => default,
            };
            out.push(t);
        }
        out
    }
}

/// Batched, stream-split sampling: batch b draws from ChaCha8 stream b
/// of the given seed, so the result is independent of the thread count.
const SAMPLE_BATCH: usize = 8192;

/// I.i.d. symmetric Gaussian (X, P) samples with per-quadrature variance
/// (2·n̄_drive + 1)/2; the radius √(X²+P²) is then Chi-distributed, which
/// is how the piezo drive voltage enters.
pub fn chi_drive_sample(nbar_drive: f64, count: usize, seed: u64) -> Vec<(f64, f64)> {
    let sigma = ((2.0 * nbar_drive + 1.0) / 2.0).sqrt();
    let normal = Normal::new(0.0, sigma).expect("valid normal");
    let batches = count.div_ceil(SAMPLE_BATCH);
    let mut out = vec![(0.0f64, 0.0f64); count];
    out.par_chunks_mut(SAMPLE_BATCH).enumerate().for_each(|(b, chunk)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        for slot in chunk.iter_mut() {
            *slot = (normal.sample(&mut rng), normal.sample(&mut rng));
        }
    });
    debug_assert_eq!(batches, count.div_ceil(SAMPLE_BATCH));
    out
}

/// Heralding weight of one phase-space point at φ = π:
/// ∏ₖ sin²(μ·X_k/2) with X_k = X·cos(ω_M t_k) + P·sin(ω_M t_k) at the
/// configured detection times.
pub fn herald_weights(config: &HeraldConfig, points: &[(f64, f64)]) -> Result<Vec<f64>> {
    config.validate()?;
    let times = config.detection_times();
    let omega = 2.0 * std::f64::consts::PI * config.f_m;
    Ok(points
        .iter()
        .map(|&(x, p)| weight_at(x, p, config.mu, std::f64::consts::PI, &times, omega, 0.0))
        .collect())
}

/// General-φ, time-shifted weight: ∏ₖ (1 + cos(μ·X_k − φ))/2, where a
/// timing offset δt shifts detection k by k·δt (successive delays all
/// off by δt, as in the quantum-side jitter model).
fn weight_at(x: f64, p: f64, mu: f64, phi: f64, times: &[f64], omega: f64, dt: f64) -> f64 {
    let mut w = 1.0;
    for (k, &tk) in times.iter().enumerate() {
        let t = tk + k as f64 * dt;
        let xk = x * (omega * t).cos() + p * (omega * t).sin();
        w *= 0.5 * (1.0 + (mu * xk - phi).cos());
    }
    w
}

const PHI_DRIFT_CUT_DEG: f64 = 10.0;

/// Uniform mixture of `build_state` over recorded φ samples, mirroring
/// the experiment's averaging; samples drifting more than 10° from π are
/// rejected, like the experiment's dataset cut.
pub fn phi_drift_average<
    T: crate::real::Real,
>(spec: &KrausSpec<T>, phi_samples: &[T]) -> Result<PhaseSpaceState<T>> {
    let cut = T::of(PHI_DRIFT_CUT_DEG.to_radians());
    let kept: Vec<T> = phi_samples
        .iter()
        .copied()
        .filter(|&phi| (phi - T::PI()).abs() <= cut)
        .collect();
    if kept.is_empty() {
        return Err(EngineError::EmptyAfterRejection { max_drift_deg: PHI_DRIFT_CUT_DEG });
    }
    let parts: Result<Vec<(PhaseSpaceState<T>, T)>> = kept
        .into_iter()
        .map(|phi| {
            let mut s = spec.clone();
            s.phi = phi;
            hypercube::build_state(&s).map(|st| (st, T::one()))
        })
        .collect();
    PhaseSpaceState::mixture(&parts?)
}

/// Equal mixture of the two states with per-step angles π/n ± 2π·δt/T,
/// the paper's approximation of ±δt timing uncertainty.
pub fn timing_jitter_average<T: crate::real::Real>(
    spec: &KrausSpec<T>,
    delta_t: T,
    period: T,
) -> Result<PhaseSpaceState<T>> {
    if !(delta_t >= T::zero()) || !(period > T::zero()) {
        return Err(EngineError::InvalidInput("delta_t >= 0 and period > 0 required".into()));
    }
    let dtheta = T::of(2.0) * T::PI() * delta_t / period;
    let base = spec.angles();
    let mut parts = Vec::with_capacity(2);
    for sign in [T::one(), -T::one()] {
        let mut s = spec.clone();
        s.step_angles = Some(base.iter().map(|&a| a + sign * dtheta).collect());
        parts.push((hypercube::build_state(&s)?, T::one()));
    }
    PhaseSpaceState::mixture(&parts)
}

/// Per-cell independent Poisson draws with mean `total_counts · p_cell`,
/// renormalized to an empirical density; deterministic per seed.
pub fn poisson_resample(
    density: &WignerGrid<f64>,
    total_counts: u64,
    seed: u64,
) -> Result<WignerGrid<f64>> {
    let norm = density.quadrature_sum();
    if !(norm > 0.0) {
        return Err(EngineError::InvalidInput("density must have positive mass".into()));
    }
    for (i, &v) in density.values.iter().enumerate() {
        if v < -1e-12 * density.max_abs() {
            return Err(EngineError::NegativeDensity { value: v, index: i });
        }
    }
    let cell = density.spec.cell_area();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn = Vec::with_capacity(density.values.len());
    let mut total = 0.0f64;
    for &v in &density.values {
        let lambda = (v.max(0.0) * cell / norm) * total_counts as f64;
        let k = if lambda > 0.0 {
            Poisson::new(lambda).map_err(|e| EngineError::InvalidInput(e.to_string()))?.sample(&mut rng)
        } else {
            0.0
        };
        total += k;
        drawn.push(k);
    }
    if total <= 0.0 {
        return Err(EngineError::EmptyResample(total_counts));
    }
    let scale = 1.0 / (total * cell);
    let values = drawn.into_iter().map(|k| k * scale).collect();
    WignerGrid::new(density.spec, values)
}

/// Full hot-regime model: drive sampling → heralding weights (with φ
/// drift and timing jitter folded into the weights) → density histogram
/// → Poissonian resampling.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub herald: HeraldConfig,
    /// Maximum interferometer drift amplitude in degrees; the weight is
    /// averaged over `drift_samples` values spread uniformly in
    /// [−max, +max]. Zero disables drift.
    pub phi_drift_deg: f64,
    pub drift_samples: usize,
    /// Timing uncertainty δt (seconds); zero disables jitter.
    pub jitter_s: f64,
    /// Poissonian counting statistics; zero disables resampling.
    pub total_counts: u64,
    pub grid_bins: usize,
    /// Histogram half-extent in units of the drive's thermal width.
    pub extent_sigmas: f64,
}

impl PipelineConfig {
    pub fn ideal(herald: HeraldConfig) -> Self {
        PipelineConfig {
            herald,
            phi_drift_deg: 0.0,
            drift_samples: 1,
            jitter_s: 0.0,
            total_counts: 0,
            grid_bins: 40,
            extent_sigmas: 4.0,
        }
    }

    /// Imperfection settings of the kind the experiment reports: drift
    /// within the 10° cut, ±15 ns jitter, finite counting statistics.
    pub fn paper_like(herald: HeraldConfig) -> Self {
        PipelineConfig {
            phi_drift_deg: 5.0,
            drift_samples: 5,
            jitter_s: DEFAULT_JITTER_S,
            total_counts: 20_000,
            ..Self::ideal(herald)
        }
    }

    /// Cell-centered histogram grid.
    pub fn grid_spec(&self) -> GridSpec<f64> {
        let sigma = ((2.0 * self.herald.nbar_drive + 1.0) / 2.0).sqrt();
        let extent = self.extent_sigmas * sigma;
        let h = 2.0 * extent / self.grid_bins as f64;
        GridSpec {
            x_min: -extent + h / 2.0,
            x_max: extent - h / 2.0,
            p_min: -extent + h / 2.0,
            p_max: extent - h / 2.0,
            nx: self.grid_bins,
            ny: self.grid_bins,
        }
    }
}

/// Weighted histogram → empirical probability density (normalized).
pub fn model_pipeline(config: &PipelineConfig) -> Result<WignerGrid<f64>> {
    config.herald.validate()?;
    if config.grid_bins < 2 {
        return Err(EngineError::GridTooSmall { nx: config.grid_bins, ny: config.grid_bins });
    }
    let pts = chi_drive_sample(config.herald.nbar_drive, config.herald.sample_count, config.herald.rng_seed);
    let times = config.herald.detection_times();
    let omega = 2.0 * std::f64::consts::PI * config.herald.f_m;
    let mut phis = Vec::new();
    if config.phi_drift_deg > 0.0 && config.drift_samples > 1 {
        for i in 0..config.drift_samples {
            let frac = 2.0 * i as f64 / (config.drift_samples - 1) as f64 - 1.0;
            phis.push(std::f64::consts::PI + frac * config.phi_drift_deg.to_radians());
        }
    } else {
        phis.push(std::f64::consts::PI);
    }
    let jitters: &[f64] =
        if config.jitter_s > 0.0 { &[1.0, -1.0] } else { &[0.0] };
    let spec = config.grid_spec();
    let h = spec.dx();
    let (x0, p0) = (spec.x_min - h / 2.0, spec.p_min - h / 2.0);
    let mut hist = vec![0.0f64; spec.len()];
    for &(x, p) in &pts {
        let i = ((x - x0) / h).floor();
        let j = ((p - p0) / h).floor();
        if i < 0.0 || j < 0.0 || i >= spec.nx as f64 || j >= spec.ny as f64 {
            continue;
        }
        let mut w = 0.0;
        for &phi in &phis {
            for &sgn in jitters {
                w += weight_at(x, p, config.herald.mu, phi, &times, omega, sgn * config.jitter_s);
            }
        }
        hist[i as usize * spec.ny + j as usize] += w / (phis.len() * jitters.len()) as f64;
    }
    let density = WignerGrid::new(spec, hist)?.normalized()?;
    if config.total_counts > 0 {
        poisson_resample(&density, config.total_counts, config.herald.rng_seed ^ 0x9e37_79b9)
    } else {
        Ok(density)
    }
}

/// Analytic ideal density (no imperfections, no sampling): heralding
/// weight times the drive Gaussian on the same grid, normalized.
pub fn ideal_density(herald: &HeraldConfig, spec: &GridSpec<f64>) -> Result<WignerGrid<f64>> {
    herald.validate()?;
    spec.validate()?;
    let times = herald.detection_times();
    let omega = 2.0 * std::f64::consts::PI * herald.f_m;
    let s = 2.0 * herald.nbar_drive + 1.0;
    let mut values = vec![0.0f64; spec.len()];
    for i in 0..spec.nx {
        let x = spec.x_at(i);
        for j in 0..spec.ny {
            let p = spec.p_at(j);
            let w = weight_at(x, p, herald.mu, std::f64::consts::PI, &times, omega, 0.0);
            values[i * spec.ny + j] = w * (-(x * x + p * p) / s).exp();
        }
    }
    WignerGrid::new(*spec, values)?.normalized()
}

/// Angular marginal of a density grid: mass per angle bin of the cell
/// centers, for lobe counting.
pub fn angular_marginal(density: &WignerGrid<f64>, bins: usize) -> Vec<f64> {
    let spec = &density.spec;
    let mut out = vec![0.0f64; bins];
    for i in 0..spec.nx {
        let x = spec.x_at(i);
        for j in 0..spec.ny {
            let p = spec.p_at(j);
            let theta = p.atan2(x);
            let mut b = ((theta + std::f64::consts::PI) / (2.0 * std::f64::consts::PI)
                * bins as f64) as usize;
            if b >= bins {
                b = bins - 1;
            }
            out[b] += density.at(i, j).max(0.0);
        }
    }
    out
}

/// Count contiguous arcs of the (circularly smoothed) angular marginal
/// above `frac` of its maximum.
pub fn count_lobes(marginal: &[f64], frac: f64) -> usize {
    let n = marginal.len();
    if n == 0 {
        return 0;
    }
    let width = (n / 16).max(1);
    let mut smooth = vec![0.0f64; n];
    for i in 0..n {
        let mut s = 0.0;
        for k in 0..width {
            s += marginal[(i + n + k - width / 2) % n];
        }
        smooth[i] = s / width as f64;
    }
    let max = smooth.iter().copied().fold(f64::MIN, f64::max);
    if !(max > 0.0) {
        return 0;
    }
    let thr = frac * max;
    let mut arcs = 0;
    for i in 0..n {
        let prev = smooth[(i + n - 1) % n] > thr;
        if smooth[i] > thr && !prev {
            arcs += 1;
        }
    }
    if arcs == 0 && smooth.iter().all(|&v| v > thr) {
        1
    } else {
        arcs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn om() -> f64 {
        2.0 * std::f64::consts::PI * DEFAULT_F_M
    }

    #[test]
    fn trace_model_special_cases() {
        // d=0, X=σ, P=0, φ=0, c=0 → A·cos(σ·cos(ω t))
        let p = TraceModelParams {
            amplitude: 2.0,
            omega_m: om(),
            x: 1.3,
            p: 0.0,
            phi: 0.0,
            offset: 0.0,
            mod_depth: 0.0,
        };
        for t in [0.0, 1e-6, 3.7e-6] {
            let expect = 2.0 * (1.3 * (om() * t).cos()).cos();
            assert!((trace_model(&p, t) - expect).abs() < 1e-12);
        }
        // d=0, X=P=0 → constant A·cos(φ+c)
        let q = TraceModelParams { x: 0.0, p: 0.0, phi: 0.8, offset: 0.1, ..p };
        for t in [0.0, 2e-6, 9e-6] {
            assert!((trace_model(&q, t) - 2.0 * (0.9f64).cos()).abs() < 1e-12);
        }
    }

    fn sample_trace(truth: &TraceModelParams, noise: f64, seed: u64) -> Vec<(f64, f64)> {
        // 2500 points at 100 MS/s: a 25 μs window
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise.max(1e-300)).unwrap();
        (0..2500)
            .map(|i| {
                let t = i as f64 / 100e6;
                let mut v = trace_model(truth, t);
                if noise > 0.0 {
                    v += normal.sample(&mut rng);
                }
                (t, v)
            })
            .collect()
    }

    #[test]
    fn fit_trace_noiseless_round_trip() {
        let truth = TraceModelParams {
            amplitude: 1.0,
            omega_m: om(),
            x: 1.3,
            p: -0.8,
            phi: 0.45,
            offset: 0.0,
            mod_depth: 0.35,
        };
        let samples = sample_trace(&truth, 0.0, 0);
        let guess = TraceModelParams { x: 1.0, p: -0.5, phi: 0.2, ..truth };
        let fit = fit_trace(&samples, &guess).unwrap();
        for (got, want) in [(fit.x, truth.x), (fit.p, truth.p), (fit.phi, truth.phi)] {
            assert!((got / want - 1.0).abs() < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn fit_trace_rejects_zero_amplitude() {
        let truth = TraceModelParams {
            amplitude: 1.0,
            omega_m: om(),
            x: 0.0,
            p: 0.0,
            phi: std::f64::consts::FRAC_PI_2,
            offset: 0.0,
            mod_depth: 0.0,
        };
        // X=P=0 and cos(φ)=0: identically zero trace
        let samples = sample_trace(&truth, 0.0, 0);
        match fit_trace(&samples, &truth) {
            Err(EngineError::DegenerateTrace { .. }) => {}
            other => panic!("expected DegenerateTrace, got {other:?}"),
        }
    }

    #[test]
    fn fit_trace_preconditions() {
        let truth = TraceModelParams {
            amplitude: 1.0,
            omega_m: om(),
            x: 1.0,
            p: 0.5,
            phi: 0.0,
            offset: 0.0,
            mod_depth: 0.0,
        };
        let short: Vec<(f64, f64)> =
            (0..120).map(|i| (i as f64 * 1e-8, trace_model(&truth, i as f64 * 1e-8))).collect();
        assert!(fit_trace(&short, &truth).is_err());
    }

    #[test]
    fn chi_drive_statistics_and_determinism() {
        let nbar = 3.0;
        let pts = chi_drive_sample(nbar, 40_000, 7);
        let again = chi_drive_sample(nbar, 40_000, 7);
        assert_eq!(pts, again);
        let n = pts.len() as f64;
        let (mx, mp) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, p)| (a + x, b + p));
        let sigma = ((2.0 * nbar + 1.0) / 2.0).sqrt();
        let bound = 5.0 * sigma / n.sqrt();
        assert!((mx / n).abs() < bound && (mp / n).abs() < bound);
        // Kolmogorov–Smirnov against the Rayleigh radial CDF
        let mut r: Vec<f64> = pts.iter().map(|&(x, p)| (x * x + p * p).sqrt()).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d: f64 = 0.0;
        for (i, &ri) in r.iter().enumerate() {
            let cdf = 1.0 - (-(ri * ri) / (2.0 * sigma * sigma)).exp();
            let emp_hi = (i + 1) as f64 / n;
            let emp_lo = i as f64 / n;
            d = d.max((cdf - emp_lo).abs()).max((emp_hi - cdf).abs());
        }
        // asymptotic Kolmogorov p-value
        let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
        let p: f64 = (1..100)
            .map(|k| 2.0 * (-1.0f64).powi(k as i32 + 1) * (-2.0 * (k as f64).powi(2) * lambda * lambda).exp())
            .sum();
        assert!(p > 0.01, "KS p-value {p} (D = {d})");
    }

    #[test]
    fn herald_weight_small_mu_limit() {
        // series regime: μ·X_k ≪ 1 so sin²(μX/2) → (μX/2)²
        let cfg = HeraldConfig::new(2, 1e-6, 1e15);
        let pts = [(3e3, -2e3), (1e3, 5e3)];
        let w = herald_weights(&cfg, &pts).unwrap();
        let times = cfg.detection_times();
        let omega = 2.0 * std::f64::consts::PI * cfg.f_m;
        for (k, &(x, p)) in pts.iter().enumerate() {
            let mut expect = 1.0;
            for &t in &times {
                let xk = x * (omega * t).cos() + p * (omega * t).sin();
                expect *= (cfg.mu * xk / 2.0).powi(2);
            }
            assert!((w[k] / expect - 1.0).abs() < 1e-4, "{} vs {}", w[k], expect);
        }
    }

    #[test]
    fn herald_weight_vanishes_on_axes_for_n2() {
        let cfg = HeraldConfig::new(2, 1e-8, 1e15);
        let w = herald_weights(&cfg, &[(0.0, 1e7), (1e7, 0.0), (1e7, 1e7)]).unwrap();
        assert!(w[0] < 1e-30 && w[1] < 1e-30);
        assert!(w[2] > 0.0);
    }

    #[test]
    fn phi_drift_average_cases() {
        let spec = KrausSpec::new(1, 2.0);
        // single sample at π → identical to build_state
        let single = phi_drift_average(&spec, &[std::f64::consts::PI]).unwrap();
        let direct = hypercube::build_state(&spec).unwrap();
        let g = GridSpec::square(6.0, 101);
        let w1 = crate::evaluate::evaluate_grid(&single, &g).unwrap();
        let w2 = crate::evaluate::evaluate_grid(&direct, &g).unwrap();
        assert!(w1.max_abs_diff(&w2).unwrap() < 1e-12);
        // 11° drift → rejected
        let off = std::f64::consts::PI + 11f64.to_radians();
        assert!(matches!(
            phi_drift_average(&spec, &[off]),
            Err(EngineError::EmptyAfterRejection { .. })
        ));
        // symmetric pair π ± δ (n = 1): mixture symmetric under x → −x
        let d = 6f64.to_radians();
        let mix = phi_drift_average(
            &spec,
            &[std::f64::consts::PI - d, std::f64::consts::PI + d],
        )
        .unwrap();
        let w = crate::evaluate::evaluate_grid(&mix, &g).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..g.nx {
            for j in 0..g.ny {
                worst = worst.max((w.at(i, j) - w.at(g.nx - 1 - i, j)).abs());
            }
        }
        assert!(worst < 1e-10, "reflection residual {worst}");
        assert!((w.quadrature_sum() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn timing_jitter_cases() {
        let spec = KrausSpec::new(2, 2.0);
        let zero = timing_jitter_average(&spec, 0.0, 1.0 / DEFAULT_F_M).unwrap();
        let direct = hypercube::build_state(&spec).unwrap();
        let g = GridSpec::square(8.0, 101);
        let w1 = crate::evaluate::evaluate_grid(&zero, &g).unwrap();
        let w2 = crate::evaluate::evaluate_grid(&direct, &g).unwrap();
        assert!(w1.max_abs_diff(&w2).unwrap() < 1e-12);
        // ±15 ns at the membrane period: δθ ≈ 1e−2 rad; mixture normalized
        let t = 1.0 / DEFAULT_F_M;
        let jit = timing_jitter_average(&spec, 15e-9, t).unwrap();
        let dtheta = 2.0 * std::f64::consts::PI * 15e-9 / t;
        assert!((dtheta - 9.96e-3).abs() < 1e-4);
        let w3 = crate::evaluate::evaluate_grid(&jit, &g).unwrap();
        assert!((w3.quadrature_sum() - 1.0).abs() < 1e-4);
        assert!(w3.max_abs_diff(&w2).unwrap() > 1e-6, "jitter must move the state");
    }

    #[test]
    fn poisson_resample_cases() {
        let spec = GridSpec::square(4.0, 21);
        let base = crate::evaluate::evaluate_grid(&crate::gaussian_ref::GaussianReferenceState::thermal(1.0), &spec)
            .unwrap();
        let r1 = poisson_resample(&base, 5000, 3).unwrap();
        let r2 = poisson_resample(&base, 5000, 3).unwrap();
        assert_eq!(r1.values, r2.values);
        assert!((r1.quadrature_sum() - 1.0).abs() < 1e-10);
        // huge counts → converges to the input
        let big = poisson_resample(&base, 10_000_000, 4).unwrap();
        let bc = crate::metrics::bhattacharyya(&big, &base).unwrap();
        assert!(bc >= 0.999, "{bc}");
        assert!(matches!(poisson_resample(&base, 0, 5), Err(EngineError::EmptyResample(0))));
    }

    #[test]
    fn pipeline_deterministic_and_lobed() {
        let herald = HeraldConfig {
            sample_count: 60_000,
            ..HeraldConfig::new(2, 0.5 / (2.0 * 1e15f64 + 1.0).sqrt(), 1e15)
        };
        let cfg = PipelineConfig::paper_like(herald);
        let d1 = model_pipeline(&cfg).unwrap();
        let d2 = model_pipeline(&cfg).unwrap();
        assert_eq!(d1.values, d2.values);
        let marg = angular_marginal(&d1, 72);
        assert_eq!(count_lobes(&marg, 0.5), 4);
    }
}
