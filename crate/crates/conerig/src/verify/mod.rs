//! Finite-difference checks of the tensor identities on the smooth part of the
//! hyperbolic chart.

pub mod field;
pub mod grid;
pub mod ops;

pub use field::{bump, random_sample, TensorField, Valence};
pub use grid::{ChartGrid, MIN_INNER_RADIUS};
pub use ops::{covariant_apply, CovariantOp};

use crate::error::{Error, Result};
use ops::{
    bianchi, curvature_term, d_nabla, delta, delta_star, ext_d, laplace_beltrami, lin_einstein, nabla, nabla_star,
    rough_laplacian, rough_shifted, trace,
};

/// Slack allowed on the Poincaré inequality for quadrature and stencil error.
pub const POINCARE_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Identity {
    /// `(dδ + δd)α = ∇*∇α − (n−1)α` on 1-forms.
    W1,
    /// `∇*∇ω = (dδ + δd)ω + 2(n−2)ω` on 2-forms.
    W2,
    /// `∇*∇h = (δ∇d∇ + d∇δ∇)h + n h − (tr h) g` on symmetric 2-tensors.
    WS,
    /// `2β(δ*α) = ∇*∇α + (n−1)α`.
    BianchiNorm,
    /// `E′(2δ*α) = 0`.
    EprimeTrivial,
    /// `tr(∇*∇h − 2R̊h) = Δ tr h + 2(n−1) tr h`.
    TraceId,
}

impl Identity {
    pub const ALL: [Identity; 6] =
        [Identity::W1, Identity::W2, Identity::WS, Identity::BianchiNorm, Identity::EprimeTrivial, Identity::TraceId];

    pub fn name(self) -> &'static str {
        match self {
            Identity::W1 => "W1",
            Identity::W2 => "W2",
            Identity::WS => "WS",
            Identity::BianchiNorm => "BIANCHI_NORM",
            Identity::EprimeTrivial => "EPRIME_TRIVIAL",
            Identity::TraceId => "TRACE_ID",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|i| i.name().eq_ignore_ascii_case(s))
    }

    pub fn sample_valence(self) -> Valence {
        match self {
            Identity::W1 | Identity::BianchiNorm | Identity::EprimeTrivial => Valence::OneForm,
            Identity::W2 => Valence::TwoForm,
            Identity::WS | Identity::TraceId => Valence::Symmetric,
        }
    }

    /// Difference of the two sides, zero in the continuum.
    pub fn residual_field(self, sample: &TensorField, grid: &ChartGrid) -> Result<TensorField> {
        if sample.valence() != self.sample_valence() || sample.n() != grid.dim() {
            return Err(Error::Validation(format!(
                "{} needs a {:?} sample of dimension {}, got {:?} of dimension {}",
                self.name(),
                self.sample_valence(),
                grid.dim(),
                sample.valence(),
                sample.n()
            )));
        }
        let n1 = (grid.dim() - 1) as f64;
        match self {
            Identity::W1 | Identity::W2 => {
                let hodge = ext_d(&delta(sample, grid)?, grid)?.add(&delta(&ext_d(sample, grid)?, grid)?)?;
                let rough = rough_laplacian(sample, grid)?;
                let curv = if self == Identity::W1 { n1 } else { 2.0 * (n1 - 1.0) };
                rough.sub(&hodge)?.combine(1.0, sample, -curv)
            }
            Identity::WS => {
                let a = nabla_star(&d_nabla(sample, grid)?, grid)?;
                let b = d_nabla(&nabla_star(sample, grid)?, grid)?;
                let tr = trace(sample)?;
                let n = grid.dim();
                let trg = TensorField::new(Valence::Symmetric, n, {
                    let t = tr.clone();
                    move |x| {
                        let v = t.at(x)[0];
                        (0..n * n).map(|k| if k % (n + 1) == 0 { v } else { 0.0 }).collect()
                    }
                });
                rough_laplacian(sample, grid)?
                    .sub(&a.add(&b)?)?
                    .combine(1.0, sample, -(n as f64))?
                    .add(&trg)
            }
            Identity::BianchiNorm => {
                let lhs = bianchi(&delta_star(sample, grid)?, grid)?.scale(2.0);
                lhs.sub(&rough_shifted(sample, grid)?)
            }
            Identity::EprimeTrivial => lin_einstein(&delta_star(sample, grid)?.scale(2.0), grid),
            Identity::TraceId => {
                let lhs = trace(&rough_laplacian(sample, grid)?.combine(1.0, &curvature_term(sample)?, -2.0)?)?;
                let tr = trace(sample)?;
                let rhs = laplace_beltrami(&tr, grid)?.combine(1.0, &tr, 2.0 * n1)?;
                lhs.sub(&rhs)
            }
        }
    }
}

/// Quadrature `L²` norm with the frame tensor norm `Σ |T_J|²`.
pub fn l2_norm(field: &TensorField, grid: &ChartGrid) -> f64 {
    grid.quadrature().iter().map(|(x, w)| w * field.at(x).iter().map(|v| v * v).sum::<f64>()).sum::<f64>().sqrt()
}

pub fn l2_inner(a: &TensorField, b: &TensorField, grid: &ChartGrid) -> Result<f64> {
    if a.rank() != b.rank() || a.n() != b.n() {
        return Err(Error::Validation("inner product of fields with different shapes".into()));
    }
    Ok(grid.quadrature().iter().map(|(x, w)| w * a.at(x).iter().zip(b.at(x)).map(|(u, v)| u * v).sum::<f64>()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityRecord {
    pub id: Identity,
    /// Residual norm with the grid's finite-difference steps.
    pub residual: f64,
    /// Residual norm with half the steps.
    pub residual_refined: f64,
    /// `log2(residual / residual_refined)`; absent when both vanish.
    pub order: Option<f64>,
}

pub fn identity_residual(id: Identity, sample: &TensorField, grid: &ChartGrid) -> Result<IdentityRecord> {
    let fine = grid.with_step_factor(0.5)?;
    let residual = l2_norm(&id.residual_field(sample, grid)?, grid);
    // Same quadrature nodes, halved stencil.
    let residual_refined = l2_norm(&id.residual_field(sample, &fine)?, &fine);
    let order = (residual > 0.0 && residual_refined > 0.0).then(|| (residual / residual_refined).log2());
    Ok(IdentityRecord { id, residual, residual_refined, order })
}

fn check_support(field: &TensorField, grid: &ChartGrid) -> Result<()> {
    let support = field
        .support()
        .ok_or_else(|| Error::Validation("field support unknown; a compactly supported sample is required".into()))?;
    for (i, &(lo, hi)) in support.iter().enumerate() {
        if grid.periodic()[i] {
            continue;
        }
        if !(lo > grid.lower()[i] && hi < grid.upper()[i]) {
            return Err(Error::Validation(format!(
                "support [{lo}, {hi}] in coordinate {i} touches the annulus boundary [{}, {}]",
                grid.lower()[i],
                grid.upper()[i]
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareRecord {
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub satisfied: bool,
}

pub fn poincare_constant(n: usize) -> f64 {
    (2.0 * (n as f64 - 2.0)).powf(-0.5)
}

/// `‖ω‖ ≤ c ‖∇ω‖` with `c = (2(n−2))^{−1/2}` for compactly supported 2-forms.
pub fn poincare_2form_check(omega: &TensorField, grid: &ChartGrid) -> Result<PoincareRecord> {
    if omega.valence() != Valence::TwoForm {
        return Err(Error::Validation(format!("2-form expected, got {:?}", omega.valence())));
    }
    check_support(omega, grid)?;
    let c = poincare_constant(grid.dim());
    let lhs = l2_norm(omega, grid);
    let rhs = c * l2_norm(&nabla(omega, grid), grid);
    Ok(PoincareRecord { lhs, rhs, constant: c, satisfied: lhs <= rhs * (1.0 + POINCARE_TOL) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointnessRecord {
    /// `⟨∇u, v⟩`.
    pub lhs: f64,
    /// `⟨u, ∇*v⟩`.
    pub rhs: f64,
    pub relative_gap: f64,
}

pub fn adjointness_check(u: &TensorField, v: &TensorField, grid: &ChartGrid) -> Result<AdjointnessRecord> {
    if v.rank() != u.rank() + 1 {
        return Err(Error::Validation("v must have rank one more than u".into()));
    }
    check_support(u, grid)?;
    check_support(v, grid)?;
    let lhs = l2_inner(&nabla(u, grid), v, grid)?;
    let rhs = l2_inner(u, &nabla_star(v, grid)?, grid)?;
    let scale = lhs.abs().max(rhs.abs());
    let relative_gap = if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 };
    Ok(AdjointnessRecord { lhs, rhs, relative_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Angle, ConeGeometry, CrossSection};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid3(res: [usize; 3]) -> ChartGrid {
        let g = ConeGeometry::new(3, Angle::Beta(2.0), 1.0, CrossSection::Circle { length: 2.0 * PI }).unwrap();
        ChartGrid::new(&g, (0.2, 0.9), (0.0, 0.0), &res).unwrap()
    }

    #[test]
    fn trace_of_metric_and_metric_compatibility() {
        let grid = grid3([16, 8, 8]);
        let g = TensorField::metric(3);
        let x = [0.4, 1.0, 2.0];
        assert_relative_eq!(trace(&g).unwrap().at(&x)[0], 3.0);
        assert!(nabla(&g, &grid).at(&x).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn delta_star_is_symmetric() {
        let grid = grid3([16, 8, 8]);
        let a = random_sample(Valence::OneForm, &grid, &mut ChaCha8Rng::seed_from_u64(5));
        let s = delta_star(&a, &grid).unwrap();
        for x in [[0.5, 0.3, 1.0], [0.6, 2.0, 4.0]] {
            let v = s.at(&x);
            let anti: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| (v[i * 3 + j] - v[j * 3 + i]).abs()).sum();
            assert_eq!(anti, 0.0);
        }
    }

    #[test]
    fn zero_sample_gives_zero_residual() {
        let grid = grid3([16, 4, 4]);
        for id in Identity::ALL {
            let rec = identity_residual(id, &TensorField::zero(id.sample_valence(), 3), &grid).unwrap();
            assert_eq!(rec.residual, 0.0);
            assert!(rec.order.is_none());
        }
    }

    #[test]
    fn valence_mismatch_rejected() {
        let grid = grid3([16, 4, 4]);
        let h = TensorField::zero(Valence::Symmetric, 3);
        assert!(Identity::W1.residual_field(&h, &grid).is_err());
        assert!(covariant_apply(CovariantOp::DeltaStar, &h, &grid).is_err());
        assert!(covariant_apply(CovariantOp::LaplaceBeltrami, &h, &grid).is_err());
    }

    #[test]
    fn poincare_constants() {
        assert_relative_eq!(poincare_constant(3), 1.0 / 2f64.sqrt());
        assert_relative_eq!(poincare_constant(4), 0.5);
        let grid = grid3([16, 4, 4]);
        let rec = poincare_2form_check(&TensorField::zero(Valence::TwoForm, 3), &grid).unwrap();
        assert_eq!((rec.lhs, rec.rhs), (0.0, 0.0));
        assert!(rec.satisfied);
        let unknown = TensorField::new(Valence::TwoForm, 3, |_| vec![0.0; 9]);
        assert!(poincare_2form_check(&unknown, &grid).is_err());
    }

    #[test]
    fn op_names_round_trip() {
        for k in CovariantOp::ALL {
            assert_eq!(CovariantOp::from_name(k.name()), Some(k));
        }
        for id in Identity::ALL {
            assert_eq!(Identity::from_name(id.name()), Some(id));
        }
    }
}
