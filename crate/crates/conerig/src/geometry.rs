//! Model hyperbolic cone tube `dr² + sinh²r dθ² + cosh²r g_Σ`, θ taken modulo α.
//!
//! Frame index convention used throughout the crate: `0 = e_r`, `1 = e_θ`,
//! `2.. = e_k` (orthonormal frame of the cross-section, rescaled by `1/cosh r`).

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use nalgebra::{DMatrix, DVector};
use std::path::PathBuf;

pub const R: usize = 0;
pub const THETA: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum CrossSection<T> {
    /// Flat circle of the given length (n = 3 only).
    Circle { length: T },
    /// Cross-section known through an eigendata file.
    Tabulated { source: Option<PathBuf> },
}

/// Explicit chart of the cross-section used by the verification grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaChart {
    /// Flat circle, coordinate z modulo the length.
    Circle,
    /// Hyperbolic plane as `dx² + e^{2x} dy²` (n = 4).
    HalfPlane,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle<T> {
    Alpha(T),
    Beta(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeGeometry<T> {
    n: usize,
    alpha: T,
    beta: T,
    tube_radius: T,
    cross_section: CrossSection<T>,
    sigma_chart: Option<SigmaChart>,
}

impl<T: Real> ConeGeometry<T> {
    pub fn new(n: usize, angle: Angle<T>, tube_radius: T, cross_section: CrossSection<T>) -> Result<Self> {
        if n < 3 {
            return Err(Error::Validation(format!("dimension n = {n} must be at least 3")));
        }
        let two_pi = T::PI() + T::PI();
        let (alpha, beta) = match angle {
            Angle::Alpha(a) => (a, two_pi / a),
            Angle::Beta(b) => (two_pi / b, b),
        };
        if !(alpha > T::zero() && alpha.is_finite() && beta > T::zero() && beta.is_finite()) {
            return Err(Error::Validation("cone angle must be positive and finite".into()));
        }
        if !(tube_radius > T::zero() && tube_radius.is_finite()) {
            return Err(Error::Validation("tube radius must be positive".into()));
        }
        let sigma_chart = match &cross_section {
            CrossSection::Circle { length } => {
                if n != 3 {
                    return Err(Error::Validation("circle cross-section requires n = 3".into()));
                }
                if !(*length > T::zero() && length.is_finite()) {
                    return Err(Error::Validation("circle length must be positive".into()));
                }
                Some(SigmaChart::Circle)
            }
            CrossSection::Tabulated { .. } => None,
        };
        Ok(Self { n, alpha, beta, tube_radius, cross_section, sigma_chart })
    }

    /// n = 4 geometry whose cross-section is the hyperbolic half-plane chart.
    pub fn half_plane(angle: Angle<T>, tube_radius: T) -> Result<Self> {
        let mut g = Self::new(4, angle, tube_radius, CrossSection::Tabulated { source: None })?;
        g.sigma_chart = Some(SigmaChart::HalfPlane);
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn beta(&self) -> T {
        self.beta
    }
    pub fn tube_radius(&self) -> T {
        self.tube_radius
    }
    pub fn cross_section(&self) -> &CrossSection<T> {
        &self.cross_section
    }
    pub fn sigma_chart(&self) -> Option<SigmaChart> {
        self.sigma_chart
    }

    pub fn circle_length(&self) -> Option<T> {
        match self.cross_section {
            CrossSection::Circle { length } => Some(length),
            CrossSection::Tabulated { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricData<T> {
    pub warp_theta: T,
    pub warp_sigma: T,
    pub volume_weight: T,
}

fn check_radius<T: Real>(r: T) -> Result<()> {
    if r > T::zero() && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius must be positive, got {r}")))
    }
}

pub fn metric_data<T: Real>(geom: &ConeGeometry<T>, r: T) -> Result<MetricData<T>> {
    check_radius(r)?;
    let (s, c) = (r.sinh(), r.cosh());
    Ok(MetricData { warp_theta: s, warp_sigma: c, volume_weight: s * c.powi(geom.n as i32 - 2) })
}

/// `sinh r · cosh^{n−2} r` without the geometry wrapper.
pub fn volume_weight<T: Real>(n: usize, r: T) -> T {
    r.sinh() * r.cosh().powi(n as i32 - 2)
}

/// Frame connection coefficients `Γ[i][j][k] = g(∇_{e_i} e_j, e_k)` at one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection<T> {
    n: usize,
    gamma: Vec<T>,
}

impl<T: Real> Connection<T> {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.gamma[(i * self.n + j) * self.n + k]
    }

    fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        let n = self.n;
        self.gamma[(i * n + j) * n + k] = v;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Frame components of `∇_{e_i} e_j`.
    pub fn nabla_frame(&self, i: usize, j: usize) -> Vec<T> {
        (0..self.n).map(|k| self.get(i, j, k)).collect()
    }

    /// Coframe components of `∇_{e_i} e^j`.
    pub fn nabla_coframe(&self, i: usize, j: usize) -> Vec<T> {
        (0..self.n).map(|k| -self.get(i, k, j)).collect()
    }

    /// Largest violation of `Γ[i][j][k] = −Γ[i][k][j]`.
    pub fn compatibility_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    worst = worst.max((self.get(i, j, k) + self.get(i, k, j)).abs());
                }
            }
        }
        worst
    }
}

/// All nonzero frame covariant derivatives at radius `r`.
///
/// The cross-section's own connection is included when the geometry carries an
/// explicit chart; for tabulated cross-sections only the warped-product terms
/// are known.
pub fn connection_coefficients<T: Real>(geom: &ConeGeometry<T>, r: T) -> Result<Connection<T>> {
    check_radius(r)?;
    let n = geom.n;
    let mut c = Connection { n, gamma: vec![T::zero(); n * n * n] };
    let coth = r.cosh() / r.sinh();
    let tanh = r.tanh();
    c.set(THETA, THETA, R, -coth);
    c.set(THETA, R, THETA, coth);
    for k in 2..n {
        c.set(k, k, R, -tanh);
        c.set(k, R, k, tanh);
    }
    if geom.sigma_chart == Some(SigmaChart::HalfPlane) {
        // ∇_{E2}E2 = −E1, ∇_{E2}E1 = E2 on the half-plane, rescaled by 1/cosh r.
        let s = T::one() / r.cosh();
        c.set(3, 3, 2, -s);
        c.set(3, 2, 3, s);
    }
    Ok(c)
}

/// A point of the tube in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePoint<T> {
    pub r: T,
    pub theta: T,
    pub sigma: Vec<T>,
}

impl<T: Real> FramePoint<T> {
    pub fn new(geom: &ConeGeometry<T>, r: T, theta: T, sigma: Vec<T>) -> Result<Self> {
        check_radius(r)?;
        if r > geom.tube_radius {
            return Err(Error::Domain(format!("radius {r} exceeds tube radius {}", geom.tube_radius)));
        }
        if sigma.len() != geom.n - 2 {
            return Err(Error::Validation("cross-section coordinate count must be n − 2".into()));
        }
        let a = geom.alpha;
        let mut t = theta % a;
        if t < T::zero() {
            t += a;
        }
        Ok(Self { r, theta: t, sigma })
    }
}

/// Curvature action `R̊h = h − (tr_g h) g` of the hyperbolic metric.
///
/// `g` is the metric's diagonal in an orthogonal coframe (all coframes of the
/// model are orthogonal); in the orthonormal frame it is all ones.
pub fn curvature_action<T: Real>(h: &DMatrix<T>, g: &DVector<T>) -> DMatrix<T> {
    debug_assert!(h.is_square() && h.nrows() == g.len());
    let tr = (0..g.len()).fold(T::zero(), |acc, i| acc + h[(i, i)] / g[i]);
    let mut out = h.clone();
    for i in 0..g.len() {
        out[(i, i)] -= tr * g[i];
    }
    out
}

/// Orthonormal frame metric, all ones.
pub fn frame_metric<T: Real>(n: usize) -> DVector<T> {
    DVector::from_element(n, T::one())
}

pub(crate) fn two_pi<T: Real>() -> T {
    lit::<T>(2.0) * T::PI()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn circle(beta: f64) -> ConeGeometry<f64> {
        ConeGeometry::new(3, Angle::Beta(beta), 1.0, CrossSection::Circle { length: 2.0 * std::f64::consts::PI }).unwrap()
    }

    #[test]
    fn flat_cone_limit() {
        let g = circle(2.0);
        let m = metric_data(&g, 1e-6).unwrap();
        assert_relative_eq!(m.warp_theta / 1e-6, 1.0, epsilon = 1e-10);
        let m1 = metric_data(&g, 1.0).unwrap();
        assert_relative_eq!(m1.volume_weight, 1f64.sinh() * 1f64.cosh(), epsilon = 1e-15);
    }

    #[test]
    fn nonpositive_radius_rejected() {
        let g = circle(2.0);
        assert!(matches!(metric_data(&g, 0.0), Err(Error::Domain(_))));
        assert!(connection_coefficients(&g, -1.0).is_err());
    }

    #[test]
    fn angle_roundtrip() {
        let g = ConeGeometry::new(3, Angle::Alpha(std::f64::consts::PI), 1.0, CrossSection::Circle { length: 1.0 }).unwrap();
        assert_relative_eq!(g.beta(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(g.alpha() * g.beta(), 2.0 * std::f64::consts::PI, epsilon = 1e-15);
    }

    #[test]
    fn circle_needs_n3() {
        assert!(ConeGeometry::new(4, Angle::Beta(2.0), 1.0, CrossSection::Circle { length: 1.0 }).is_err());
        assert!(ConeGeometry::new(2, Angle::Beta(2.0), 1.0, CrossSection::<f64>::Tabulated { source: None }).is_err());
        assert!(ConeGeometry::new(3, Angle::Beta(-2.0), 1.0, CrossSection::Circle { length: 1.0 }).is_err());
    }

    #[test]
    fn listed_coefficients() {
        let g = circle(2.0);
        let r = 0.7f64;
        let c = connection_coefficients(&g, r).unwrap();
        assert_eq!(c.nabla_frame(R, R), vec![0.0; 3]);
        assert_relative_eq!(c.get(THETA, THETA, R), -1.0 / r.tanh(), epsilon = 1e-15);
        assert_relative_eq!(c.get(2, 2, R), -r.tanh(), epsilon = 1e-15);
        assert_relative_eq!(c.get(2, R, 2), r.tanh(), epsilon = 1e-15);
        assert_relative_eq!(c.nabla_coframe(THETA, THETA)[R], -1.0 / r.tanh(), epsilon = 1e-15);
    }

    #[test]
    fn frame_point_wraps_theta() {
        let g = circle(2.0);
        let p = FramePoint::new(&g, 0.5, -0.5, vec![0.0]).unwrap();
        assert_relative_eq!(p.theta, std::f64::consts::PI - 0.5, epsilon = 1e-15);
        assert!(FramePoint::new(&g, 1.5, 0.0, vec![0.0]).is_err());
    }

    #[test]
    fn curvature_action_cases() {
        let g = frame_metric::<f64>(3);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_relative_eq!(curvature_action(&id, &g), id.clone() * -2.0, epsilon = 1e-15);
        let tf = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 2.0, -1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(curvature_action(&tf, &g), tf.clone(), epsilon = 1e-15);
        let mut e = DMatrix::zeros(3, 3);
        e[(0, 0)] = 1.0;
        assert_relative_eq!(curvature_action(&e, &g), e.clone() - id, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn metric_compatible(r in 1e-3f64..3.0, beta in 0.3f64..6.0) {
            let g3 = circle(beta);
            let g4 = ConeGeometry::half_plane(Angle::Beta(beta), 3.0).unwrap();
            prop_assert!(connection_coefficients(&g3, r).unwrap().compatibility_defect() <= 1e-14);
            prop_assert!(connection_coefficients(&g4, r).unwrap().compatibility_defect() <= 1e-14);
        }

        #[test]
        fn weight_is_linear_at_axis(r in 1e-6f64..1e-3, n in 3usize..7) {
            prop_assert!((volume_weight(n, r) / r - 1.0).abs() <= 2.0 * r * r * n as f64);
        }
    }
}
