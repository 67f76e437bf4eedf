use crate::error::{Error, Result};
use crate::geometry::{connection_coefficients, Connection, ConeGeometry, SigmaChart};

/// Smallest inner radius a verification grid may use.
pub const MIN_INNER_RADIUS: f64 = 0.05;
/// Deepest derivative nesting used by the identities (E′ of δ*α).
pub const STENCIL_DEPTH: usize = 3;
/// Default finite-difference step as a fraction of the node spacing.
///
/// The nodes only carry the quadrature, which is spectrally accurate on the
/// compactly supported samples, so they can stay coarse while the stencils sit
/// in the asymptotic `h²` regime.
pub const STEP_DIVISOR: f64 = 128.0;

/// Annular chart region with quadrature nodes and finite-difference steps.
///
/// Steps default to the node spacing divided by [`STEP_DIVISOR`].
///
/// Coordinates are `(r, θ, z)` for the circle cross-section and `(r, θ, x, y)`
/// for the half-plane one. `θ` is periodic modulo `α` and `z` modulo the circle
/// length; `x, y` are bounded and not periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartGrid {
    geom: ConeGeometry<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    periodic: Vec<bool>,
    resolution: Vec<usize>,
    steps: Vec<f64>,
}

impl ChartGrid {
    /// `sigma_bounds` is ignored for the circle (the whole period is used).
    pub fn new(
        geom: &ConeGeometry<f64>,
        r_bounds: (f64, f64),
        sigma_bounds: (f64, f64),
        resolution: &[usize],
    ) -> Result<Self> {
        let chart = geom
            .sigma_chart()
            .ok_or_else(|| Error::Validation("verification needs an explicit cross-section chart".into()))?;
        let n = geom.n();
        if resolution.len() != n || resolution.iter().any(|&k| k < 2) {
            return Err(Error::Validation(format!("need {n} resolutions of at least 2")));
        }
        let (r0, r1) = r_bounds;
        if !(r0 >= MIN_INNER_RADIUS && r1 > r0 && r1 <= geom.tube_radius()) {
            return Err(Error::Validation(format!(
                "annulus [{r0}, {r1}] must satisfy {MIN_INNER_RADIUS} <= r0 < r1 <= a = {}",
                geom.tube_radius()
            )));
        }
        let mut lower = vec![r0, 0.0];
        let mut upper = vec![r1, geom.alpha()];
        let mut periodic = vec![false, true];
        match chart {
            SigmaChart::Circle => {
                lower.push(0.0);
                upper.push(geom.circle_length().expect("circle chart has a length"));
                periodic.push(true);
            }
            SigmaChart::HalfPlane => {
                if sigma_bounds.1 <= sigma_bounds.0 {
                    return Err(Error::Validation("empty cross-section box".into()));
                }
                for _ in 0..2 {
                    lower.push(sigma_bounds.0);
                    upper.push(sigma_bounds.1);
                    periodic.push(false);
                }
            }
        }
        let steps = (0..n).map(|i| (upper[i] - lower[i]) / resolution[i] as f64 / STEP_DIVISOR).collect();
        let g = Self { geom: geom.clone(), lower, upper, periodic, resolution: resolution.to_vec(), steps };
        g.check_stencil()?;
        Ok(g)
    }

    fn check_stencil(&self) -> Result<()> {
        if self.lower[0] - (STENCIL_DEPTH as f64) * self.steps[0] <= 0.0 {
            return Err(Error::Validation(format!(
                "radial stencil of depth {STENCIL_DEPTH} with step {} crosses the axis",
                self.steps[0]
            )));
        }
        Ok(())
    }

    /// Same nodes, finite-difference steps scaled by `factor`.
    pub fn with_step_factor(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::Validation("step factor must lie in (0, 1]".into()));
        }
        let mut g = self.clone();
        for h in &mut g.steps {
            *h *= factor;
        }
        Ok(g)
    }

    /// Doubles every resolution.
    pub fn refined(&self) -> Self {
        let mut g = self.clone();
        for i in 0..g.dim() {
            g.resolution[i] *= 2;
            g.steps[i] *= 0.5;
        }
        g
    }

    pub fn geometry(&self) -> &ConeGeometry<f64> {
        &self.geom
    }

    pub fn dim(&self) -> usize {
        self.geom.n()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// Frame scales: `e_i = s_i ∂_i`.
    pub fn scales(&self, x: &[f64]) -> Vec<f64> {
        let r = x[0];
        let mut s = vec![1.0, 1.0 / r.sinh(), 1.0 / r.cosh()];
        if self.dim() == 4 {
            s.push((-x[2]).exp() / r.cosh());
        }
        s
    }

    /// `√det g` in chart coordinates.
    pub fn sqrt_det(&self, x: &[f64]) -> f64 {
        let r = x[0];
        let w = r.sinh() * r.cosh().powi(self.dim() as i32 - 2);
        if self.dim() == 4 {
            w * x[2].exp()
        } else {
            w
        }
    }

    pub fn connection(&self, x: &[f64]) -> Connection<f64> {
        connection_coefficients(&self.geom, x[0]).expect("grid radii are positive")
    }

    fn cell(&self, i: usize) -> f64 {
        (self.upper[i] - self.lower[i]) / self.resolution[i] as f64
    }

    /// Quadrature nodes with weights `√det g · cell volume`.
    ///
    /// Periodic coordinates use the uniform rule, bounded ones the midpoint rule;
    /// both are spectrally accurate on compactly supported smooth integrands.
    pub fn quadrature(&self) -> Vec<(Vec<f64>, f64)> {
        let n = self.dim();
        let coords: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let h = self.cell(i);
                let off = if self.periodic[i] { 0.0 } else { 0.5 };
                (0..self.resolution[i]).map(|k| self.lower[i] + (k as f64 + off) * h).collect()
            })
            .collect();
        let vol: f64 = (0..n).map(|i| self.cell(i)).product();
        let total: usize = self.resolution.iter().product();
        (0..total)
            .map(|flat| {
                let mut rem = flat;
                let mut x = vec![0.0; n];
                for i in (0..n).rev() {
                    x[i] = coords[i][rem % self.resolution[i]];
                    rem /= self.resolution[i];
                }
                let w = self.sqrt_det(&x) * vol;
                (x, w)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Angle, CrossSection};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn circle() -> ConeGeometry<f64> {
        ConeGeometry::new(3, Angle::Beta(2.0), 1.0, CrossSection::Circle { length: 2.0 * PI }).unwrap()
    }

    #[test]
    fn rejects_axis_and_thin_stencils() {
        let g = circle();
        assert!(ChartGrid::new(&g, (0.01, 0.9), (0.0, 0.0), &[8, 8, 8]).is_err());
        assert!(ChartGrid::new(&g, (0.05, 0.9), (0.0, 0.0), &[1, 8, 8]).is_err());
        assert!(ChartGrid::new(&g, (0.2, 1.1), (0.0, 0.0), &[8, 8, 8]).is_err());
        assert!(ChartGrid::new(&g, (0.2, 0.9), (0.0, 0.0), &[16, 8, 8]).is_ok());
    }

    #[test]
    fn quadrature_integrates_volume() {
        let g = circle();
        let grid = ChartGrid::new(&g, (0.2, 0.9), (0.0, 0.0), &[64, 4, 4]).unwrap();
        let vol: f64 = grid.quadrature().iter().map(|(_, w)| w).sum();
        // ∫ sinh r cosh r dr dθ dz = α ℓ (cosh² r₁ − cosh² r₀) / 2.
        let exact = PI * 2.0 * PI * ((0.9f64).cosh().powi(2) - (0.2f64).cosh().powi(2)) / 2.0;
        assert_relative_eq!(vol, exact, max_relative = 1e-4);
    }

    #[test]
    fn half_plane_scales() {
        let g = ConeGeometry::half_plane(Angle::Beta(1.5), 1.0).unwrap();
        let grid = ChartGrid::new(&g, (0.3, 0.9), (-0.5, 0.5), &[16, 8, 8, 8]).unwrap();
        let x = [0.5, 0.1, 0.2, -0.3];
        let s = grid.scales(&x);
        assert_relative_eq!(s[3], (-0.2f64).exp() / (0.5f64).cosh());
        let prod: f64 = s.iter().product();
        assert_relative_eq!(prod * grid.sqrt_det(&x), 1.0, max_relative = 1e-14);
    }
}
