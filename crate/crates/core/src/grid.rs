//! Rectangular phase-space sampling grids.

use crate::error::{EngineError, Result};
use crate::real::Real;

/// Extents and resolution of a rectangular (x, p) grid. Points are
/// endpoint-inclusive: `x_i = x_min + i·(x_max−x_min)/(nx−1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<T> {
    pub x_min: T,
    pub x_max: T,
    pub p_min: T,
    pub p_max: T,
    pub nx: usize,
    pub ny: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn square(extent: T, n: usize) -> Self {
        GridSpec { x_min: -extent, x_max: extent, p_min: -extent, p_max: extent, nx: n, ny: n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(EngineError::GridTooSmall { nx: self.nx, ny: self.ny });
        }
        if !(self.x_max > self.x_min) || !(self.p_max > self.p_min) {
            return Err(EngineError::InvalidInput("grid extents must be increasing".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> T {
        (self.x_max - self.x_min) / T::of_usize(self.nx - 1)
    }

    pub fn dp(&self) -> T {
        (self.p_max - self.p_min) / T::of_usize(self.ny - 1)
    }

    pub fn cell_area(&self) -> T {
        self.dx() * self.dp()
    }

    pub fn x_at(&self, i: usize) -> T {
        self.x_min + self.dx() * T::of_usize(i)
    }

    pub fn p_at(&self, j: usize) -> T {
        self.p_min + self.dp() * T::of_usize(j)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Wigner values sampled on a [`GridSpec`], row-major with x as the
/// slow index: `values[i*ny + j] = W(x_i, p_j)`.
#[derive(Clone, Debug)]
pub struct WignerGrid<T> {
    pub spec: GridSpec<T>,
    pub values: Vec<T>,
}

impl<T: Real> WignerGrid<T> {
    pub fn new(spec: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(EngineError::InvalidInput(format!(
                "value count {} does not match grid {}x{}",
                values.len(),
                spec.nx,
                spec.ny
            )));
        }
        Ok(WignerGrid { spec, values })
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[i * self.spec.ny + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.spec.ny..(i + 1) * self.spec.ny]
    }

    /// Rectangle-rule quadrature Σ values · ΔxΔp.
    pub fn quadrature_sum(&self) -> T {
        let s: T = self.values.iter().copied().sum();
        s * self.spec.cell_area()
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest |a − b| over two grids with identical specs.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if self.spec != other.spec {
            return Err(EngineError::GridMismatch(format!("{:?} vs {:?}", self.spec, other.spec)));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }

    /// Renormalize so the quadrature sum is exactly 1 (used for
    /// empirical probability densities).
    pub fn normalized(mut self) -> Result<Self> {
        let s = self.quadrature_sum();
        if !(s > T::zero()) {
            return Err(EngineError::InvalidInput("cannot normalize an empty grid".into()));
        }
        for v in &mut self.values {
            *v = *v / s;
        }
        Ok(self)
    }
}

/// Tuning for the automatic grid heuristic.
#[derive(Clone, Copy, Debug)]
pub struct GridHeuristic<T> {
    /// Points per finest interference fringe (spec default ≥ 8).
    pub points_per_fringe: T,
    /// Thermal-envelope standard deviations per sample step.
    pub env_steps_per_sigma: T,
    /// Padding around the outermost center, in envelope sigmas.
    pub pad_sigmas: T,
    /// Hard per-axis cap on point count.
    pub max_points: usize,
    /// Extra symmetric extent (e.g. to cover displaced copies).
    pub extra_extent: T,
}

impl<T: Real> Default for GridHeuristic<T> {
    fn default() -> Self {
        GridHeuristic {
            points_per_fringe: T::of(8.0),
            env_steps_per_sigma: T::of(4.0),
            pad_sigmas: T::of(6.0),
            max_points: 4096,
            extra_extent: T::zero(),
        }
    }
}

impl<T: Real> GridHeuristic<T> {
    /// Denser sampling for metric quadrature (|·| integrands have kinks).
    pub fn metric() -> Self {
        GridHeuristic {
            points_per_fringe: T::of(16.0),
            env_steps_per_sigma: T::of(8.0),
            ..Self::default()
        }
    }

    /// Square grid sized from phase-space hints: the outermost center
    /// radius (xp units), the largest center separation |γ_j − γ_k|
    /// (complex units, sets the finest fringe 2π/(√2·Δ)), and n̄.
    pub fn build(&self, center_radius_xp: T, max_sep: T, nbar: T) -> GridSpec<T> {
        let two = T::of(2.0);
        let sigma = ((two * nbar + T::one()) / two).sqrt();
        let extent =
            T::of(6.0).max(center_radius_xp + self.pad_sigmas * sigma) + self.extra_extent;
        let env_step = sigma / self.env_steps_per_sigma;
        let step = if max_sep > T::zero() {
            let fringe = two * T::PI() / (T::SQRT_2() * max_sep);
            env_step.min(fringe / self.points_per_fringe)
        } else {
            env_step
        };
        let n = ((two * extent / step).ceil().to_usize().unwrap_or(self.max_points) + 1)
            .clamp(33, self.max_points);
        GridSpec::square(extent, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::<f64>::square(5.0, 1).validate().is_err());
        assert!(GridSpec::<f64>::square(5.0, 2).validate().is_ok());
        let bad = GridSpec { x_min: 1.0, x_max: -1.0, p_min: -1.0, p_max: 1.0, nx: 8, ny: 8 };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn quadrature_of_constant() {
        let spec = GridSpec::<f64>::square(1.0, 11);
        let w = WignerGrid::new(spec, vec![0.25; spec.len()]).unwrap();
        // area (2.0)^2 sampled by 11 points per axis with dx = 0.2
        let expect = 0.25 * (0.2 * 0.2) * 121.0;
        assert!((w.quadrature_sum() - expect).abs() < 1e-12);
    }

    #[test]
    fn heuristic_resolves_fringes() {
        let h = GridHeuristic::<f64>::default();
        let spec = h.build(8.49 * std::f64::consts::SQRT_2, 17.0, 0.0);
        // fringe wavelength 2π/(√2·17) ≈ 0.2614, want ≥ 8 points per fringe
        let fringe = 2.0 * std::f64::consts::PI / (std::f64::consts::SQRT_2 * 17.0);
        assert!(spec.dx() <= fringe / 8.0 * 1.0001);
        // extents: |γ|max + 6·√((2n̄+1)/2)
        assert!(spec.x_max >= 8.49 * std::f64::consts::SQRT_2 + 6.0 * 0.5f64.sqrt() - 1e-12);
    }
}
