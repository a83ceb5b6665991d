//! Expansion of the heralded Kraus product into Gaussian cross terms.
//!
//! The n-th order map is 𝒴ₙ = ∏ₖ [R(θₖ)·Υ] with Υ = D(iμ/√2) + e^{iφ}
//! and θₖ = π/n by default; the product is applied with Υ acting first
//! and the final rotation retained. Pushing every rotation to the right
//! turns the k-th slot's displacement into D(β·e^{iΘₖ}) with
//! Θₖ = θₖ + θₖ₊₁ + … + θₙ, and leaves one overall R(Σθ) acting on the
//! initial center. Expanding the n binomials gives 2ⁿ displacement
//! branches whose pairwise cross terms are the 4ⁿ Gaussian terms of the
//! state (16 for n = 2, 64 for n = 3, 256 for n = 4).

use crate::amplitude::compose_displacements;
use crate::error::{EngineError, Result};
use crate::limit::LimitState;
use crate::real::Real;
use crate::state::{HypercubeState, PhaseSpaceState};
use crate::term::GaussianTerm;
use num_complex::Complex;

/// Recipe for a hypercube state.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSpec<T> {
    /// Hypercube order n ≥ 1 (number of heralded interactions).
    pub order: usize,
    /// Interaction strength μ = 4π·x₀/λ (dimensionless).
    pub mu: T,
    /// Interferometer phase φ; the experiment sits at φ = π.
    pub phi: T,
    /// Initial thermal occupation n̄ ≥ 0.
    pub nbar: T,
    /// Per-step rotation angles; `None` means π/n each.
    pub step_angles: Option<Vec<T>>,
    /// Center of the initial (displaced-)thermal state.
    pub initial_center: Complex<T>,
}

impl<T: Real> KrausSpec<T> {
    pub fn new(order: usize, mu: T) -> Self {
        KrausSpec {
            order,
            mu,
            phi: T::PI(),
            nbar: T::zero(),
            step_angles: None,
            initial_center: Complex::new(T::zero(), T::zero()),
        }
    }

    pub fn with_nbar(mut self, nbar: T) -> Self {
        self.nbar = nbar;
        self
    }

    pub fn with_phi(mut self, phi: T) -> Self {
        self.phi = phi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(EngineError::InvalidInput("order must be >= 1".into()));
        }
        if self.order > 16 {
            return Err(EngineError::InvalidInput(format!(
                "order {} would expand to 4^{} cross terms",
                self.order, self.order
            )));
        }
        if !(self.mu >= T::zero()) || !self.mu.is_finite() {
            return Err(EngineError::InvalidInput(format!("mu must be finite and >= 0, got {}", self.mu)));
        }
        if !(self.nbar >= T::zero()) {
            return Err(EngineError::InvalidInput(format!("nbar must be >= 0, got {}", self.nbar)));
        }
        if let Some(a) = &self.step_angles {
            if a.len() != self.order {
                return Err(EngineError::InvalidInput(format!(
                    "step_angles has {} entries for order {}",
                    a.len(),
                    self.order
                )));
            }
        }
        Ok(())
    }

    pub fn angles(&self) -> Vec<T> {
        match &self.step_angles {
            Some(a) => a.clone(),
            None => vec![T::PI() / T::of_usize(self.order); self.order],
        }
    }

    /// Initial center after the collected rotation R(Σθ).
    pub fn rotated_center(&self) -> Complex<T> {
        let total: T = self.angles().into_iter().sum();
        self.initial_center * Complex::from_polar(T::one(), total)
    }

    /// Effective displacement of each slot after pushing rotations
    /// through: β·e^{iΘₖ} with Θₖ the tail sum of angles, slot 0 first.
    pub fn effective_displacements(&self) -> Vec<Complex<T>> {
        let beta = Complex::new(T::zero(), self.mu / T::SQRT_2());
        let angles = self.angles();
        let mut tail = T::zero();
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.order];
        for k in (0..self.order).rev() {
            tail += angles[k];
            out[k] = beta * Complex::from_polar(T::one(), tail);
        }
        out
    }
}

/// One branch of the 2ⁿ-fold expansion: `amplitude · D(gamma)` acting on
/// the rotated initial state; `selector` bit k set means slot k applied
/// its displacement.
#[derive(Clone, Copy, Debug)]
pub struct BranchTerm<T> {
    pub amplitude: Complex<T>,
    pub gamma: Complex<T>,
    pub selector: u32,
}

/// Interaction strength from physical parameters: μ = 4π·x₀/λ.
pub fn mu_from_physical<T: Real>(x0_meters: T, lambda_meters: T) -> Result<T> {
    if !(x0_meters > T::zero()) || !(lambda_meters > T::zero()) {
        return Err(EngineError::InvalidInput(
            "zero-point motion and wavelength must be positive".into(),
        ));
    }
    Ok(T::of(4.0) * T::PI() * x0_meters / lambda_meters)
}

/// Expand 𝒴ₙ into its 2ⁿ displacement branches. Amplitudes carry the
/// e^{iφ} identity factors and all displacement-composition phases;
/// the common final rotation is retained via [`KrausSpec::rotated_center`].
pub fn expand_branches<T: Real>(spec: &KrausSpec<T>) -> Result<Vec<BranchTerm<T>>> {
    spec.validate()?;
    let eff = spec.effective_displacements();
    let id_amp = Complex::from_polar(T::one(), spec.phi);
    let n = spec.order;
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0u32..(1u32 << n) {
        let mut amp = Complex::new(T::one(), T::zero());
        let mut gamma = Complex::new(T::zero(), T::zero());
        for k in 0..n {
            if mask >> k & 1 == 1 {
                let (phase, sum) = compose_displacements(eff[k], gamma);
                amp = amp * phase;
                gamma = sum;
            } else {
                amp = amp * id_amp;
            }
        }
        out.push(BranchTerm { amplitude: amp, gamma, selector: mask });
    }
    Ok(out)
}

/// Build the normalized state as 4ⁿ Gaussian cross terms.
pub fn build_state<T: Real>(spec: &KrausSpec<T>) -> Result<PhaseSpaceState<T>> {
    let branches = expand_branches(spec)?;
    let c0 = spec.rotated_center();
    let decorated: Vec<(Complex<T>, Complex<T>)> = branches
        .iter()
        .map(|b| {
            let (phase, gamma) = compose_displacements(b.gamma, c0);
            (b.amplitude * phase, gamma)
        })
        .collect();
    let mut terms = Vec::with_capacity(decorated.len() * decorated.len());
    for (aj, gj) in &decorated {
        for (ak, gk) in &decorated {
            terms.push(GaussianTerm::new(aj * ak.conj(), *gj, *gk));
        }
    }
    PhaseSpaceState::from_terms(terms, spec.nbar)
}

/// Threshold on μ·√(2n̄+1) below which the 4ⁿ-term sum has lost too many
/// digits to cancellation for f64 and the exact μ→0 limit form is used
/// instead (its model error is O(μ·√(2n̄+1)), i.e. below 1e−4 here).
pub fn limit_route_threshold<T: Real>() -> T {
    T::of(1e-4)
}

/// Build a hypercube state, routing to the analytic small-μ limit when
/// the Gaussian-term representation cannot hold its precision.
pub fn build<T: Real>(spec: &KrausSpec<T>) -> Result<HypercubeState<T>> {
    spec.validate()?;
    let s = T::of(2.0) * spec.nbar + T::one();
    let chi = spec.mu * (s.sqrt() + spec.initial_center.norm());
    let at_pi = (spec.phi - T::PI()).abs() < T::of(1e-12);
    if at_pi && chi < limit_route_threshold() {
        Ok(HypercubeState::Limit(LimitState::build(spec)?))
    } else {
        Ok(HypercubeState::Terms(build_state(spec)?))
    }
}

/// Branch centers clustered within `tol`; multiplicities sum to 2ⁿ.
pub fn distinct_centers<T: Real>(
    spec: &KrausSpec<T>,
    tol: T,
) -> Result<Vec<(Complex<T>, usize)>> {
    let branches = expand_branches(spec)?;
    let c0 = spec.rotated_center();
    let mut clusters: Vec<(Complex<T>, usize)> = Vec::new();
    for b in &branches {
        let g = b.gamma + c0;
        match clusters.iter_mut().find(|(c, _)| (*c - g).norm() <= tol) {
            Some((_, m)) => *m += 1,
            None => clusters.push((g, 1)),
        }
    }
    Ok(clusters)
}

/// Default clustering tolerance: centers are exact sums of
/// machine-precision rotations.
pub fn default_center_tol<T: Real>(mu: T) -> T {
    T::of(1e-9) * T::one().max(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn mu_formula() {
        let lambda = 795e-9;
        assert!((mu_from_physical(lambda / (4.0 * std::f64::consts::PI), lambda).unwrap() - 1.0).abs() < 1e-12);
        assert!((mu_from_physical(2.0 * lambda / (4.0 * std::f64::consts::PI), lambda).unwrap() - 2.0).abs() < 1e-12);
        // the paper's hot-regime coupling: x0 = 5.06e-16 m at 795 nm → ~8e-9
        let mu: f64 = mu_from_physical(5.06e-16, 795e-9).unwrap();
        assert!((mu / 8e-9 - 1.0).abs() < 5e-3, "mu = {mu}");
        assert!(mu_from_physical(-1.0, lambda).is_err());
        assert!(mu_from_physical(1.0, 0.0).is_err());
    }

    #[test]
    fn schroedinger_cat_branches() {
        // n=1, φ=π: Υ = D(iμ/√2) − 1 after the (retained) rotation:
        // gammas {0, βe^{iπ}} with amplitudes {e^{iπ}, 1} = {−1, 1}.
        let spec = KrausSpec::new(1, 1.0);
        let b = expand_branches(&spec).unwrap();
        assert_eq!(b.len(), 2);
        let beta_rot = C64::new(0.0, 1.0 / SQRT2) * C64::from_polar(1.0, std::f64::consts::PI);
        assert!((b[0].gamma).norm() < 1e-15);
        assert!((b[0].amplitude - C64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((b[1].gamma - beta_rot).norm() < 1e-12);
        assert!((b[1].amplitude - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn mu_zero_amplitude_sum() {
        // D(0) = 1, so the branch amplitudes sum to (1 + e^{iφ})ⁿ: the
        // zero operator at φ = π, (1+e^{iφ})² in general.
        let spec = KrausSpec::new(2, 0.0);
        let b = expand_branches(&spec).unwrap();
        let sum: C64 = b.iter().map(|t| t.amplitude).sum();
        assert!(sum.norm() < 1e-12);
        let spec3 = KrausSpec::new(2, 0.0).with_phi(std::f64::consts::FRAC_PI_3);
        let b3 = expand_branches(&spec3).unwrap();
        let sum3: C64 = b3.iter().map(|t| t.amplitude).sum();
        let expect = (C64::new(1.0, 0.0) + C64::from_polar(1.0, std::f64::consts::FRAC_PI_3)).powi(2);
        assert!((sum3 - expect).norm() < 1e-12);
    }

    #[test]
    fn mu_zero_is_zero_operator_at_phi_pi() {
        let spec = KrausSpec::new(2, 0.0);
        match build_state(&spec) {
            Err(EngineError::ZeroNormState(_)) => {}
            other => panic!("expected ZeroNormState, got {other:?}"),
        }
    }

    #[test]
    fn branch_gamma_bound() {
        let spec = KrausSpec::new(4, 3.0);
        for b in expand_branches(&spec).unwrap() {
            assert!(b.gamma.norm() <= 4.0 * 3.0 / SQRT2 + 1e-12);
        }
    }

    #[test]
    fn compass_square_geometry() {
        // n=2, μ=6: centers {0, (0,−6), (−6,0), (−6,−6)} in (x,p) — a
        // square of side 6 congruent to the Petrie projection of a square.
        let spec = KrausSpec::new(2, 6.0);
        let centers = distinct_centers(&spec, default_center_tol(6.0)).unwrap();
        assert_eq!(centers.len(), 4);
        let mut pts: Vec<(f64, f64)> = centers
            .iter()
            .map(|(c, m)| {
                assert_eq!(*m, 1);
                (SQRT2 * c.re, SQRT2 * c.im)
            })
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [(-6.0, -6.0), (-6.0, 0.0), (0.0, -6.0), (0.0, 0.0)];
        for ((x, p), (ex, ep)) in pts.iter().zip(expect) {
            assert!((x - ex).abs() < 1e-9 && (p - ep).abs() < 1e-9, "({x},{p}) vs ({ex},{ep})");
        }
    }

    #[test]
    fn petrie_hexagon_for_n3() {
        // brute-force enumeration: the 8 branch sums form a regular
        // hexagon of radius μ/√2 around a doubly-occupied centroid.
        let mu = 8.0;
        let spec = KrausSpec::new(3, mu);
        let centers = distinct_centers(&spec, default_center_tol(mu)).unwrap();
        assert_eq!(centers.iter().map(|(_, m)| m).sum::<usize>(), 8);
        assert_eq!(centers.len(), 7);
        let centroid: C64 = centers
            .iter()
            .map(|(c, m)| c * (*m as f64))
            .sum::<C64>()
            / 8.0;
        let mut mult2 = 0;
        for (c, m) in &centers {
            let r = (c - centroid).norm();
            if *m == 2 {
                mult2 += 1;
                assert!(r < 1e-9, "doubled point must be the centroid");
            } else {
                assert!((r - mu / SQRT2).abs() < 1e-9, "hexagon radius off: {r}");
            }
        }
        assert_eq!(mult2, 1);
    }

    #[test]
    fn tesseract_vertices_for_n4() {
        let mu = 8.0;
        let spec = KrausSpec::new(4, mu);
        let centers = distinct_centers(&spec, default_center_tol(mu)).unwrap();
        assert_eq!(centers.len(), 16);
        let centroid: C64 =
            centers.iter().map(|(c, m)| c * (*m as f64)).sum::<C64>() / 16.0;
        let mut radii: Vec<f64> = centers.iter().map(|(c, _)| (c - centroid).norm()).collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // two octagons: 8 inner, 8 outer
        for r in &radii[..8] {
            assert!((r - radii[0]).abs() < 1e-9);
        }
        for r in &radii[8..] {
            assert!((r - radii[15]).abs() < 1e-9);
        }
        assert!(radii[15] > radii[0] * 2.0);
    }

    #[test]
    fn term_counts_are_4_to_n() {
        for (n, count) in [(2usize, 16usize), (3, 64), (4, 256)] {
            let s = build_state(&KrausSpec::new(n, 6.0)).unwrap();
            assert_eq!(s.terms.len(), count);
        }
    }

    #[test]
    fn displaced_spec_displaces_centers() {
        let mut spec = KrausSpec::new(2, 3.0);
        let base = distinct_centers(&spec, 1e-9).unwrap();
        let delta = C64::new(0.4, -0.9);
        spec.initial_center = delta;
        let moved = distinct_centers(&spec, 1e-9).unwrap();
        // the initial center is carried through the full rotation R(Σθ)
        let rot = C64::from_polar(1.0, std::f64::consts::PI);
        for ((c0, m0), (c1, m1)) in base.iter().zip(&moved) {
            assert_eq!(m0, m1);
            assert!((c1 - (c0 + delta * rot)).norm() < 1e-12);
        }
    }

    #[test]
    fn routes_to_limit_at_tiny_mu() {
        let spec = KrausSpec::new(2, 8e-9);
        assert!(matches!(build(&spec).unwrap(), HypercubeState::Limit(_)));
        let spec2 = KrausSpec::new(2, 0.5);
        assert!(matches!(build(&spec2).unwrap(), HypercubeState::Terms(_)));
        // hot small-coupling regime stays on the exact Gaussian route
        let spec3 = KrausSpec::new(2, 8e-9).with_nbar(1e15);
        assert!(matches!(build(&spec3).unwrap(), HypercubeState::Terms(_)));
    }
}
