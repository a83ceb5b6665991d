//! Reference Gaussian states: coherent, thermal, squeezed-thermal.

use crate::error::{EngineError, Result};
use crate::grid::GridSpec;
use crate::real::Real;
use crate::state::{PhaseSpaceState, RowEval, WignerSource};
use num_complex::Complex;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaussianKind {
    Coherent,
    Thermal,
    SqueezedThermal,
}

/// A Gaussian comparison state. `squeeze_db = 0` reduces exactly to
/// thermal; `nbar = 0` and `squeeze_db = 0` to coherent. Squeezing by
/// `s` dB scales the variance along `squeeze_angle` by 10^{−s/10} and
/// the conjugate quadrature by 10^{+s/10}.
#[derive(Clone, Copy, Debug)]
pub struct GaussianReferenceState<T> {
    pub kind: GaussianKind,
    pub center: Complex<T>,
    pub nbar: T,
    pub squeeze_db: T,
    pub squeeze_angle: T,
}

impl<T: Real> GaussianReferenceState<T> {
    pub fn coherent(center: Complex<T>) -> Self {
        GaussianReferenceState {
            kind: GaussianKind::Coherent,
            center,
            nbar: T::zero(),
            squeeze_db: T::zero(),
            squeeze_angle: T::zero(),
        }
    }

    pub fn thermal(nbar: T) -> Self {
        GaussianReferenceState {
            kind: GaussianKind::Thermal,
            center: Complex::new(T::zero(), T::zero()),
            nbar,
            squeeze_db: T::zero(),
            squeeze_angle: T::zero(),
        }
    }

    pub fn squeezed_thermal(nbar: T, squeeze_db: T, squeeze_angle: T) -> Self {
        GaussianReferenceState {
            kind: GaussianKind::SqueezedThermal,
            center: Complex::new(T::zero(), T::zero()),
            nbar,
            squeeze_db,
            squeeze_angle,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nbar >= T::zero()) {
            return Err(EngineError::InvalidInput("nbar must be >= 0".into()));
        }
        if self.kind == GaussianKind::Coherent
            && (self.nbar != T::zero() || self.squeeze_db != T::zero())
        {
            return Err(EngineError::InvalidInput(
                "coherent kind cannot carry nbar or squeezing".into(),
            ));
        }
        Ok(())
    }

    /// (variance along squeeze axis, conjugate variance).
    pub fn variances(&self) -> (T, T) {
        let base = (T::of(2.0) * self.nbar + T::one()) / T::of(2.0);
        let ten = T::of(10.0);
        let factor = ten.powf(-self.squeeze_db / ten);
        (base * factor, base / factor)
    }

    pub fn wigner_at(&self, x: T, p: T) -> T {
        let (v1, v2) = self.variances();
        let cx = T::SQRT_2() * self.center.re;
        let cp = T::SQRT_2() * self.center.im;
        let (ca, sa) = (self.squeeze_angle.cos(), self.squeeze_angle.sin());
        let u1 = (x - cx) * ca + (p - cp) * sa;
        let u2 = -(x - cx) * sa + (p - cp) * ca;
        let two = T::of(2.0);
        let norm = two * T::PI() * (v1 * v2).sqrt();
        (-(u1 * u1 / (two * v1)) - u2 * u2 / (two * v2)).exp() / norm
    }

    /// Coherent and thermal kinds as a single diagonal Gaussian term
    /// (squeezed states are not displaced-thermal and have no term form).
    pub fn to_phase_space(&self) -> Option<PhaseSpaceState<T>> {
        if self.squeeze_db == T::zero() {
            Some(PhaseSpaceState::displaced_thermal(self.center, self.nbar))
        } else {
            None
        }
    }
}

struct RefRows<'a, T> {
    state: &'a GaussianReferenceState<T>,
    spec: GridSpec<T>,
}

impl<'a, T: Real> RowEval<T> for RefRows<'a, T> {
    fn fill_row(&self, i: usize, out: &mut [T]) {
        let x = self.spec.x_at(i);
        for (j, v) in out.iter_mut().enumerate() {
            *v = self.state.wigner_at(x, self.spec.p_at(j));
        }
    }
}

impl<T: Real> WignerSource<T> for GaussianReferenceState<T> {
    fn prepare<'a>(&'a self, spec: &GridSpec<T>) -> Box<dyn RowEval<T> + 'a> {
        Box::new(RefRows { state: self, spec: *spec })
    }

    fn displaced(&self, delta: Complex<T>) -> Self {
        let mut out = *self;
        out.center += delta;
        out
    }

    fn nbar(&self) -> T {
        self.nbar
    }

    fn extent_hints(&self) -> (T, T) {
        // widen the envelope for the anti-squeezed axis
        let (v1, v2) = self.variances();
        let two = T::of(2.0);
        let base = (two * self.nbar + T::one()) / two;
        let blowup = (v1.max(v2) / base).sqrt();
        (T::SQRT_2() * self.center.norm() * blowup.max(T::one()), T::zero())
    }
}
