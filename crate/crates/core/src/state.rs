//! Normalized states as finite sums of Gaussian cross terms.

use crate::amplitude::compose_displacements;
use crate::error::{EngineError, Result};
use crate::grid::GridSpec;
use crate::limit::LimitState;
use crate::real::Real;
use crate::term::{GaussianTerm, SeparableTerm};
use num_complex::Complex;

/// Row-wise Wigner evaluator prepared for one grid spec. Summation
/// order within a row is fixed, so results are bitwise deterministic
/// regardless of how rows are distributed over workers.
pub trait RowEval<T>: Sync {
    fn fill_row(&self, i: usize, out: &mut [T]);
}

/// Anything whose Wigner function the metrics layer can consume.
pub trait WignerSource<T: Real>: Sync + Sized {
    fn prepare<'a>(&'a self, spec: &GridSpec<T>) -> Box<dyn RowEval<T> + 'a>;
    /// The state rigidly displaced by δ (in complex units; x-shift of σ
    /// ground-state widths is δ = σ/√2).
    fn displaced(&self, delta: Complex<T>) -> Self;
    fn nbar(&self) -> T;
    /// (outermost center radius in xp units, max |γ_j − γ_k|) for grid sizing.
    fn extent_hints(&self) -> (T, T);
}

/// A normalized state ρ = Σ coeff·D(γ_L)ρ_th(n̄)D(γ_R)†.
///
/// Invariant: every off-diagonal term's conjugate partner is present, so
/// summed Wigner values are real up to rounding.
#[derive(Clone, Debug)]
pub struct PhaseSpaceState<T> {
    pub terms: Vec<GaussianTerm<T>>,
    pub nbar: T,
    /// Trace of the unnormalized operator sum this state was built from.
    pub trace_norm: T,
}

impl<T: Real> PhaseSpaceState<T> {
    /// Normalize a raw term list by its closed-form trace.
    pub fn from_terms(terms: Vec<GaussianTerm<T>>, nbar: T) -> Result<Self> {
        if terms.is_empty() {
            return Err(EngineError::InvalidInput("state needs at least one term".into()));
        }
        if !(nbar >= T::zero()) {
            return Err(EngineError::InvalidInput(format!("nbar must be >= 0, got {nbar}")));
        }
        let tr = trace_of(&terms, nbar);
        let tol = T::of(1e-9) * tr.norm().max(T::of(1e-300));
        if tr.im.abs() > tol {
            return Err(EngineError::InvalidInput(format!(
                "trace has non-negligible imaginary part {:?}",
                tr
            )));
        }
        if !(tr.re > T::of(1e-30)) {
            return Err(EngineError::ZeroNormState(tr.re.to_f64().unwrap_or(0.0)));
        }
        let ln_tr = tr.re.ln();
        let mut terms = terms;
        for t in &mut terms {
            t.coeff = t.coeff.div_ln(ln_tr);
        }
        Ok(PhaseSpaceState { terms, nbar, trace_norm: tr.re })
    }

    /// Single coherent/thermal blob at `center`.
    pub fn displaced_thermal(center: Complex<T>, nbar: T) -> Self {
        let t = GaussianTerm::new(Complex::new(T::one(), T::zero()), center, center);
        PhaseSpaceState { terms: vec![t], nbar, trace_norm: T::one() }
    }

    /// Closed-form trace of the current (normalized) term sum; 1 up to
    /// rounding for any state produced by this module.
    pub fn trace(&self) -> Complex<T> {
        trace_of(&self.terms, self.nbar)
    }

    /// Rigid phase-space rotation γ → γ·e^{iθ} applied to every term.
    pub fn rotated(&self, theta: T) -> Self {
        let rot = Complex::from_polar(T::one(), theta);
        let terms = self
            .terms
            .iter()
            .map(|t| GaussianTerm { coeff: t.coeff, gamma_l: t.gamma_l * rot, gamma_r: t.gamma_r * rot })
            .collect();
        PhaseSpaceState { terms, nbar: self.nbar, trace_norm: self.trace_norm }
    }

    /// Convex mixture of normalized states sharing one n̄ (weights must
    /// be positive; they are renormalized to sum to 1).
    pub fn mixture(parts: &[(Self, T)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(EngineError::InvalidInput("mixture of zero states".into()));
        }
        let nbar = parts[0].0.nbar;
        for (s, w) in parts {
            if (s.nbar - nbar).abs() > T::of(1e-12) * (T::one() + nbar) {
                return Err(EngineError::InvalidInput("mixture components must share nbar".into()));
            }
            if !(*w > T::zero()) {
                return Err(EngineError::InvalidInput("mixture weights must be positive".into()));
            }
        }
        let wsum: T = parts.iter().map(|(_, w)| *w).sum();
        let mut terms = Vec::with_capacity(parts.iter().map(|(s, _)| s.terms.len()).sum());
        for (s, w) in parts {
            let ln_w = (*w / wsum).ln();
            for t in &s.terms {
                let mut t = *t;
                t.coeff.ln_mag = t.coeff.ln_mag + ln_w;
                terms.push(t);
            }
        }
        Ok(PhaseSpaceState { terms, nbar, trace_norm: T::one() })
    }

    /// Max |Im| of the summed Wigner value over a probe set; the
    /// conjugate-pair invariant keeps this at rounding level.
    pub fn hermiticity_residual(&self, probes: &[(T, T)]) -> T {
        probes.iter().fold(T::zero(), |m, &(x, p)| {
            let v: Complex<T> = self
                .terms
                .iter()
                .map(|t| t.wigner_at(self.nbar, x, p))
                .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b);
            m.max(v.im.abs())
        })
    }
}

fn trace_of<T: Real>(terms: &[GaussianTerm<T>], nbar: T) -> Complex<T> {
    // Neumaier-compensated sum: traces cancel deeply at small μ.
    let mut sum = Complex::new(T::zero(), T::zero());
    let mut comp = Complex::new(T::zero(), T::zero());
    for t in terms {
        let v = t.trace(nbar);
        for (s, c, x) in [(&mut sum.re, &mut comp.re, v.re), (&mut sum.im, &mut comp.im, v.im)] {
            let t1 = *s + x;
            if s.abs() >= x.abs() {
                *c = *c + ((*s - t1) + x);
            } else {
                *c = *c + ((x - t1) + *s);
            }
            *s = t1;
        }
    }
    sum + comp
}

impl<T: Real> WignerSource<T> for PhaseSpaceState<T> {
    fn prepare<'a>(&'a self, spec: &GridSpec<T>) -> Box<dyn RowEval<T> + 'a> {
        Box::new(crate::evaluate::PreparedState::new(self, spec, true))
    }

    fn displaced(&self, delta: Complex<T>) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let (ph_l, gl) = compose_displacements(delta, t.gamma_l);
                let (ph_r, gr) = compose_displacements(delta, t.gamma_r);
                let mut coeff = t.coeff.mul_complex(ph_l * ph_r.conj());
                coeff.ln_mag = t.coeff.ln_mag; // unit-modulus phases only
                GaussianTerm { coeff, gamma_l: gl, gamma_r: gr }
            })
            .collect();
        PhaseSpaceState { terms, nbar: self.nbar, trace_norm: self.trace_norm }
    }

    fn nbar(&self) -> T {
        self.nbar
    }

    fn extent_hints(&self) -> (T, T) {
        let mut radius = T::zero();
        let mut sep = T::zero();
        for t in &self.terms {
            radius = radius.max(t.gamma_l.norm()).max(t.gamma_r.norm());
            sep = sep.max(t.separation().norm());
        }
        (T::SQRT_2() * radius, sep)
    }
}

/// A built hypercube state: exact Gaussian terms where f64 can carry the
/// 4ⁿ-term cancellation, the analytic μ→0 limit where it cannot
/// (μ·√(2n̄+1) below ~1e−4; see `hypercube::build`).
#[derive(Clone, Debug)]
pub enum HypercubeState<T> {
    Terms(PhaseSpaceState<T>),
    Limit(LimitState<T>),
}

impl<T: Real> HypercubeState<T> {
    pub fn term_count(&self) -> usize {
        match self {
            HypercubeState::Terms(s) => s.terms.len(),
            HypercubeState::Limit(_) => 0,
        }
    }

    pub fn as_terms(&self) -> Option<&PhaseSpaceState<T>> {
        match self {
            HypercubeState::Terms(s) => Some(s),
            HypercubeState::Limit(_) => None,
        }
    }
}

impl<T: Real> WignerSource<T> for HypercubeState<T> {
    fn prepare<'a>(&'a self, spec: &GridSpec<T>) -> Box<dyn RowEval<T> + 'a> {
        match self {
            HypercubeState::Terms(s) => s.prepare(spec),
            HypercubeState::Limit(s) => s.prepare(spec),
        }
    }

    fn displaced(&self, delta: Complex<T>) -> Self {
        match self {
            HypercubeState::Terms(s) => HypercubeState::Terms(s.displaced(delta)),
            HypercubeState::Limit(s) => HypercubeState::Limit(s.displaced(delta)),
        }
    }

    fn nbar(&self) -> T {
        match self {
            HypercubeState::Terms(s) => s.nbar(),
            HypercubeState::Limit(s) => s.nbar(),
        }
    }

    fn extent_hints(&self) -> (T, T) {
        match self {
            HypercubeState::Terms(s) => s.extent_hints(),
            HypercubeState::Limit(s) => s.extent_hints(),
        }
    }
}

/// Shared helper for separable-term row evaluation (used by the
/// evaluation engine; see `evaluate`).
pub(crate) struct TermColumns<T> {
    pub sep: SeparableTerm<T>,
    /// 1 for unpaired terms, 2 for a merged conjugate pair.
    pub weight: T,
    pub fp: Vec<Complex<T>>,
}
