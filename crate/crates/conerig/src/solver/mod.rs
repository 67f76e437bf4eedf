//! Mode-by-mode solves of `L u = φ` on the tube `(0, a]`.
//!
//! The form `∫ w (|u′|² + u*Qu) dr`, `w = volume_weight`, is discretized by a
//! symmetric three-point scheme with lumped weighted mass. The segment
//! `(0, r₁)` is condensed into the boundary term `w(r₁) u₁* D u₁`,
//! `D = Φ′Φ⁻¹`, with `Φ` the admissible Frobenius branches at `r₁`; the solution
//! is thereby matched to the admissible span at the first node. The outer
//! condition is Dirichlet at `r = a`.

pub mod blocktri;
pub mod mesh;

pub use blocktri::{BlockLdl, BlockTridiagonal};
pub use mesh::{graded_mesh, mesh_nodes, RadialMesh, DEFAULT_GAMMA, MIN_POINTS};

use crate::error::{Error, Result};
use crate::frobenius::evaluate_branch;
use crate::geometry::{volume_weight, ConeGeometry};
use crate::indicial::Family;
use crate::l2class::{admissible_basis, AdmissibleBasis};
use crate::modes::{CMat, CVec, Form, ModeBlock, RadialOperator};
use num_complex::Complex;

pub const EIGMIN_TOL: f64 = 1e-2;
pub const SOLVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub points: usize,
    pub gamma: f64,
    /// Frobenius truncation order for the inner condition.
    pub order: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { points: 512, gamma: DEFAULT_GAMMA, order: 16 }
    }
}

fn refuse_wide_angle(beta: f64) -> Result<()> {
    if beta > 1.0 {
        Ok(())
    } else {
        Err(Error::Refused(format!(
            "beta = {beta} <= 1: admissibility no longer controls the gradient, so the solve is not certified; \
             run the audit in witness mode to list the branches with u, du in L2 but grad u not in L2"
        )))
    }
}

/// Admissible inner behaviour at the first node.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerCondition {
    pub r1: f64,
    /// Hermitian part of `Φ′Φ⁻¹`.
    pub d: CMat<f64>,
    /// Column-normalized `Φ(r₁)`.
    pub phi: CMat<f64>,
    pub exponents: Vec<f64>,
    /// `‖D − D*‖ / ‖D‖` before symmetrization.
    pub skew_defect: f64,
}

pub fn inner_condition(basis: &AdmissibleBasis<f64>, r1: f64) -> Result<InnerCondition> {
    let m = basis.branches.first().map(|b| b.size()).unwrap_or(0);
    let d = basis.dimension();
    if d != m {
        return Err(Error::Unsupported(format!("admissible dimension {d} differs from block size {m}")));
    }
    let mut phi = CMat::<f64>::zeros(m, m);
    let mut dphi = CMat::<f64>::zeros(m, m);
    for (j, br) in basis.admissible_branches().enumerate() {
        let v = evaluate_branch(br, r1);
        if v.beyond_validity {
            return Err(Error::Domain(format!("first node {r1} lies beyond the series validity radius")));
        }
        let s = Complex::from(v.values.norm().recip());
        phi.set_column(j, &(&v.values * s));
        dphi.set_column(j, &(&v.derivatives * s));
    }
    let inv = phi
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Inconsistency(format!("admissible branches are dependent at r = {r1}")))?;
    let raw = &dphi * inv;
    let skew = (&raw - raw.adjoint()).norm() / raw.norm().max(f64::MIN_POSITIVE);
    let d = (&raw + raw.adjoint()) * Complex::from(0.5);
    Ok(InnerCondition { r1, d, phi, exponents: basis.admissible_exponents(), skew_defect: skew })
}

#[derive(Debug, Clone, PartialEq)]
pub enum OuterCondition {
    /// Prescribed value at `r = a`.
    Dirichlet(CVec<f64>),
}

impl OuterCondition {
    pub fn homogeneous(m: usize) -> Self {
        OuterCondition::Dirichlet(CVec::<f64>::zeros(m))
    }
}

/// The assembled discrete problem on the unknown nodes `r₁..r_{M−1}`.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub matrix: BlockTridiagonal,
    pub mass: Vec<f64>,
    /// Conductance between the last unknown and the Dirichlet node.
    pub boundary_coupling: f64,
}

pub fn assemble(op: &RadialOperator<f64>, mesh: &RadialMesh, inner: &InnerCondition, shift: f64) -> Result<Discretization> {
    if op.form() != Form::L {
        return Err(Error::Validation("the solver expects the radial operator in L form".into()));
    }
    let m = op.size();
    if inner.d.nrows() != m || (inner.r1 - mesh.r(0)).abs() > 1e-14 * mesh.a() {
        return Err(Error::Validation("inner condition does not match the block or the mesh".into()));
    }
    let n = op.n();
    let r = mesh.nodes();
    let unknowns = r.len() - 1;
    let cond: Vec<f64> = r.windows(2).map(|s| volume_weight(n, 0.5 * (s[0] + s[1])) / (s[1] - s[0])).collect();
    let mass: Vec<f64> = (0..unknowns)
        .map(|j| {
            let left = if j == 0 { 0.0 } else { r[j] - r[j - 1] };
            volume_weight(n, r[j]) * 0.5 * (left + r[j + 1] - r[j])
        })
        .collect();
    let eye = CMat::<f64>::identity(m, m);
    let diag = (0..unknowns)
        .map(|j| {
            let mut d = &eye * Complex::from(cond[j]);
            if j == 0 {
                d += &inner.d * Complex::from(volume_weight(n, r[0]));
            } else {
                d += &eye * Complex::from(cond[j - 1]);
            }
            d + (op.q(r[j]) + &eye * Complex::from(shift)) * Complex::from(mass[j])
        })
        .collect();
    let off = cond[..unknowns - 1].iter().map(|c| -c).collect();
    Ok(Discretization { matrix: BlockTridiagonal::new(diag, off), mass, boundary_coupling: cond[unknowns - 1] })
}

fn weighted_norm(mass: &[f64], v: &[CVec<f64>]) -> f64 {
    mass.iter().zip(v).map(|(m, x)| m * x.norm_squared()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BVPSolution {
    pub mesh: RadialMesh,
    /// Nodal values at every mesh node, the Dirichlet node included.
    pub values: Vec<CVec<f64>>,
    pub norm_u: f64,
    pub norm_rhs: f64,
    /// Weighted norm of `L u − φ` at interior nodes, with `u′, u″` by finite differences.
    pub residual: f64,
    /// `‖A u − f‖ / ‖f‖` of the linear solve.
    pub algebraic_residual: f64,
    /// Coefficients of `u(r₁)` against the column-normalized admissible branches.
    pub inner_coefficients: CVec<f64>,
}

pub fn solve_mode(
    op: &RadialOperator<f64>,
    rhs: &dyn Fn(f64) -> CVec<f64>,
    mesh: &RadialMesh,
    inner: &InnerCondition,
    outer: &OuterCondition,
) -> Result<BVPSolution> {
    refuse_wide_angle(op.beta())?;
    let disc = assemble(op, mesh, inner, 0.0)?;
    let r = mesh.nodes();
    let unknowns = r.len() - 1;
    let OuterCondition::Dirichlet(g) = outer;
    let phi: Vec<CVec<f64>> = r[..unknowns].iter().map(|&x| rhs(x)).collect();
    let mut f: Vec<CVec<f64>> = phi.iter().zip(&disc.mass).map(|(p, &m)| p * Complex::from(m)).collect();
    f[unknowns - 1] += g * Complex::from(disc.boundary_coupling);

    let ldl = disc.matrix.factor()?;
    let mut u = ldl.solve(&f);
    let au = disc.matrix.apply(&u);
    let fnorm = f.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
    let rnorm = au.iter().zip(&f).map(|(a, b)| (a - b).norm_squared()).sum::<f64>().sqrt();
    let algebraic_residual = if fnorm > 0.0 { rnorm / fnorm } else { rnorm };
    if algebraic_residual > SOLVE_TOL {
        return Err(Error::Inconsistency(format!("linear solve residual {algebraic_residual:e} exceeds {SOLVE_TOL:e}")));
    }
    let norm_u = weighted_norm(&disc.mass, &u);
    let norm_rhs = weighted_norm(&disc.mass, &phi);
    u.push(g.clone());

    // Nonuniform three-point derivatives at interior nodes.
    let mut res_mass = Vec::new();
    let mut res = Vec::new();
    for j in 1..unknowns {
        let (h0, h1) = (r[j] - r[j - 1], r[j + 1] - r[j]);
        let d1 = (&u[j + 1] * Complex::from(h0 / (h1 * (h0 + h1))) - &u[j - 1] * Complex::from(h1 / (h0 * (h0 + h1))))
            + &u[j] * Complex::from((h1 - h0) / (h0 * h1));
        let d2 = (&u[j + 1] * Complex::from(h0) + &u[j - 1] * Complex::from(h1) - &u[j] * Complex::from(h0 + h1))
            * Complex::from(2.0 / (h0 * h1 * (h0 + h1)));
        res.push(op.apply(r[j], &u[j], &d1, &d2) - &phi[j]);
        res_mass.push(disc.mass[j]);
    }
    let residual = weighted_norm(&res_mass, &res);

    let inner_coefficients = inner.phi.clone().try_inverse().map(|p| p * &u[0]).unwrap_or_else(|| CVec::<f64>::zeros(op.size()));
    Ok(BVPSolution { mesh: mesh.clone(), values: u, norm_u, norm_rhs, residual, algebraic_residual, inner_coefficients })
}

/// Smallest eigenvalue of the discrete form `A − λ M`, by bisection on inertia.
pub fn mode_eigmin_shifted(op: &RadialOperator<f64>, mesh: &RadialMesh, inner: &InnerCondition, shift: f64) -> Result<f64> {
    let disc = assemble(op, mesh, inner, shift)?;
    let count = |sigma: f64| -> Result<usize> {
        match disc.matrix.factor_shifted(sigma, &disc.mass) {
            Ok(f) => Ok(f.negative_count()),
            // Landing exactly on an eigenvalue: nudge.
            Err(_) => disc.matrix.factor_shifted(sigma * (1.0 + 1e-13) + 1e-300, &disc.mass).map(|f| f.negative_count()),
        }
    };
    let base = (op.n() - 1) as f64 + shift;
    let mut lo = 0.5 * base;
    while count(lo)? > 0 {
        lo -= lo.abs() + 1.0;
    }
    let mut hi = base + 1.0;
    while count(hi)? == 0 {
        hi = 2.0 * hi + 1.0;
        if hi > 1e300 {
            return Err(Error::Inconsistency("no eigenvalue bracket found".into()));
        }
    }
    while hi - lo > 1e-11 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if count(mid)? > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn mode_eigmin(op: &RadialOperator<f64>, mesh: &RadialMesh, inner: &InnerCondition, outer: &OuterCondition) -> Result<f64> {
    refuse_wide_angle(op.beta())?;
    // The spectrum is that of the homogeneous problem.
    let OuterCondition::Dirichlet(_) = outer;
    mode_eigmin_shifted(op, mesh, inner, 0.0)
}

/// Everything one block needs for a solve.
#[derive(Debug, Clone)]
pub struct ModeSetup {
    pub op: RadialOperator<f64>,
    pub mesh: RadialMesh,
    pub basis: AdmissibleBasis<f64>,
    pub inner: InnerCondition,
}

pub fn mode_setup(geom: &ConeGeometry<f64>, block: ModeBlock<f64>, settings: &SolverSettings) -> Result<ModeSetup> {
    refuse_wide_angle(geom.beta())?;
    let op = RadialOperator::new(geom.n(), geom.beta(), block, Form::L, settings.order + 4)?;
    let mesh = graded_mesh(geom.tube_radius(), settings.points, settings.gamma)?;
    let basis = admissible_basis(block, geom, settings.order)?;
    let inner = inner_condition(&basis, mesh.r(0))?;
    Ok(ModeSetup { op, mesh, basis, inner })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditMode {
    /// `β > 1`: positivity certified block by block.
    Certified,
    /// `β < 1`: admissibility no longer implies `∇u ∈ L²`; witnesses listed.
    Witness,
    /// `β = 1`: boundary case, strict inequality required.
    Refused,
}

impl AuditMode {
    pub fn name(self) -> &'static str {
        match self {
            AuditMode::Certified => "certified",
            AuditMode::Witness => "witness",
            AuditMode::Refused => "refused",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockAudit {
    pub block: ModeBlock<f64>,
    pub admissible_dimension: usize,
    pub total_dimension: usize,
    pub eigmin: Option<f64>,
    pub kernel_empty: Option<bool>,
    /// Exponents of log branches with `u ∈ L²` but `du ∉ L²`, kept out by admissibility.
    pub excluded_log_modes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub block: ModeBlock<f64>,
    pub k: f64,
    pub family: Family,
    pub du_exponent: f64,
    pub grad_u_exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub n: usize,
    pub beta: f64,
    pub mode: AuditMode,
    pub blocks: Vec<BlockAudit>,
    pub witnesses: Vec<Witness>,
    /// Set in certified mode: every block kernel-empty.
    pub no_admissible_kernel: Option<bool>,
    pub message: String,
}

pub fn kernel_audit(geom: &ConeGeometry<f64>, blocks: &[ModeBlock<f64>], settings: &SolverSettings) -> Result<AuditReport> {
    let (n, beta) = (geom.n(), geom.beta());
    let mode = if beta > 1.0 {
        AuditMode::Certified
    } else if (beta - 1.0).abs() <= 1e-12 {
        AuditMode::Refused
    } else {
        AuditMode::Witness
    };
    let floor = (n - 1) as f64 - EIGMIN_TOL;
    let mut out = Vec::with_capacity(blocks.len());
    let mut witnesses = Vec::new();
    for &block in blocks {
        let basis = admissible_basis(block, geom, settings.order)?;
        let excluded_log_modes =
            basis.reports.iter().filter(|r| r.log_seed && r.u.in_l2 && !r.du.in_l2).map(|r| r.k).collect();
        witnesses.extend(basis.witnesses().map(|r| Witness {
            block,
            k: r.k,
            family: r.family,
            du_exponent: r.du.exponent,
            grad_u_exponent: r.grad_u.exponent,
        }));
        let eigmin = if mode == AuditMode::Certified {
            let s = mode_setup(geom, block, settings)?;
            Some(mode_eigmin(&s.op, &s.mesh, &s.inner, &OuterCondition::homogeneous(block.size()))?)
        } else {
            None
        };
        out.push(BlockAudit {
            block,
            admissible_dimension: basis.dimension(),
            total_dimension: basis.total(),
            eigmin,
            kernel_empty: eigmin.map(|e| e >= floor),
            excluded_log_modes,
        });
    }
    let (no_kernel, message) = match mode {
        AuditMode::Certified => {
            let ok = out.iter().all(|b| b.kernel_empty == Some(true));
            (Some(ok), if ok { "no admissible kernel mode".to_string() } else { "admissible kernel candidate found".to_string() })
        }
        AuditMode::Witness => (None, format!("beta < 1: {} branch(es) with u, du in L2 but grad u not in L2", witnesses.len())),
        AuditMode::Refused => (None, "beta = 1 is the boundary case; the certificate needs beta > 1".to_string()),
    };
    Ok(AuditReport { n, beta, mode, blocks: out, witnesses, no_admissible_kernel: no_kernel, message })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub solutions: Vec<BVPSolution>,
    /// Root-sum-of-squares of the mode norms.
    pub norm_u: f64,
    pub norm_rhs: f64,
    /// `‖u‖ ≤ ‖φ‖ / (n − 1)` up to a relative `1e−6`.
    pub bound_holds: bool,
}

pub type ModeRhs<'a> = &'a dyn Fn(f64) -> CVec<f64>;

/// Independent per-mode solves with homogeneous Dirichlet data.
pub fn solve_field(
    geom: &ConeGeometry<f64>,
    blocks: &[ModeBlock<f64>],
    rhs: &[ModeRhs<'_>],
    settings: &SolverSettings,
) -> Result<FieldSolution> {
    if rhs.len() != blocks.len() {
        return Err(Error::Validation(format!("{} rhs functions for {} blocks", rhs.len(), blocks.len())));
    }
    let mut solutions = Vec::with_capacity(blocks.len());
    for (&block, f) in blocks.iter().zip(rhs) {
        let s = mode_setup(geom, block, settings)?;
        solutions.push(solve_mode(&s.op, *f, &s.mesh, &s.inner, &OuterCondition::homogeneous(block.size()))?);
    }
    let norm_u = solutions.iter().map(|s| s.norm_u * s.norm_u).sum::<f64>().sqrt();
    let norm_rhs = solutions.iter().map(|s| s.norm_rhs * s.norm_rhs).sum::<f64>().sqrt();
    let bound_holds = norm_u <= norm_rhs / (geom.n() - 1) as f64 * (1.0 + 1e-6);
    Ok(FieldSolution { solutions, norm_u, norm_rhs, bound_holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Angle, CrossSection};
    use approx::assert_relative_eq;

    fn geom(beta: f64) -> ConeGeometry<f64> {
        ConeGeometry::new(3, Angle::Beta(beta), 1.0, CrossSection::Circle { length: 2.0 * std::f64::consts::PI }).unwrap()
    }

    fn settings(points: usize) -> SolverSettings {
        SolverSettings { points, ..SolverSettings::default() }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let s = mode_setup(&geom(2.0), ModeBlock::Coupled2 { p: 1 }, &settings(64)).unwrap();
        let zero = |_: f64| CVec::<f64>::zeros(2);
        let sol = solve_mode(&s.op, &zero, &s.mesh, &s.inner, &OuterCondition::homogeneous(2)).unwrap();
        assert!(sol.values.iter().all(|v| v.norm() == 0.0));
        assert_eq!(sol.norm_u, 0.0);
    }

    #[test]
    fn wide_angle_refused() {
        assert!(matches!(mode_setup(&geom(0.8), ModeBlock::Coupled2 { p: 1 }, &settings(64)), Err(Error::Refused(_))));
        let s = mode_setup(&geom(2.0), ModeBlock::Coupled2 { p: 1 }, &settings(64)).unwrap();
        let op = RadialOperator::new(3, 0.8, ModeBlock::Coupled2 { p: 1 }, Form::L, 20).unwrap();
        let f = |_: f64| CVec::<f64>::zeros(2);
        assert!(matches!(solve_mode(&op, &f, &s.mesh, &s.inner, &OuterCondition::homogeneous(2)), Err(Error::Refused(_))));
    }

    #[test]
    fn matrix_is_hermitian_and_inner_condition_nearly_so() {
        for block in [ModeBlock::Coupled3 { lambda_prime: 1.0, p: 1 }, ModeBlock::Scalar { mu_prime: 2.0, p_prime: 0 }] {
            let s = mode_setup(&geom(1.5), block, &settings(128)).unwrap();
            let d = assemble(&s.op, &s.mesh, &s.inner, 0.0).unwrap();
            assert!(d.matrix.hermitian_defect() <= 1e-12 * d.matrix.diagonal()[0].iter().map(|z| z.norm()).fold(1.0, f64::max));
            assert!(s.inner.skew_defect < 1e-6, "{}", s.inner.skew_defect);
        }
    }

    #[test]
    fn shift_moves_eigmin_exactly() {
        let s = mode_setup(&geom(2.0), ModeBlock::Coupled3 { lambda_prime: 1.0, p: 0 }, &settings(64)).unwrap();
        let e0 = mode_eigmin_shifted(&s.op, &s.mesh, &s.inner, 0.0).unwrap();
        let e1 = mode_eigmin_shifted(&s.op, &s.mesh, &s.inner, 0.75).unwrap();
        assert_relative_eq!(e1 - e0, 0.75, epsilon = 1e-9);
    }

    #[test]
    fn eigmin_matches_dense_oracle() {
        for block in [ModeBlock::Coupled3 { lambda_prime: 4.0, p: -1 }, ModeBlock::Coupled2 { p: 2 }, ModeBlock::Scalar { mu_prime: 0.0, p_prime: 1 }] {
            let s = mode_setup(&geom(1.5), block, &settings(24)).unwrap();
            let e = mode_eigmin_shifted(&s.op, &s.mesh, &s.inner, 0.0).unwrap();
            let d = assemble(&s.op, &s.mesh, &s.inner, 0.0).unwrap();
            let m = block.size();
            let a = d.matrix.to_dense();
            let scale = CVec::<f64>::from_iterator(a.nrows(), (0..a.nrows()).map(|i| Complex::from(d.mass[i / m].sqrt().recip())));
            let sym = CMat::<f64>::from_diagonal(&scale) * a * CMat::<f64>::from_diagonal(&scale);
            let dense = sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
            assert_relative_eq!(e, dense, max_relative = 1e-9);
            assert!(e >= 2.0 - EIGMIN_TOL);
        }
    }

    #[test]
    fn field_norms_add_in_quadrature() {
        let g = geom(2.0);
        let blocks = [ModeBlock::Coupled2 { p: 1 }, ModeBlock::Scalar { mu_prime: 0.0, p_prime: 1 }];
        let set = settings(64);
        let f1 = |r: f64| CVec::<f64>::from_element(2, Complex::from(r * (1.0 - r)));
        let f2 = |r: f64| CVec::<f64>::from_element(1, Complex::from(r * r));
        let both = solve_field(&g, &blocks, &[&f1, &f2], &set).unwrap();
        let one = solve_field(&g, &blocks[..1], &[&f1], &set).unwrap();
        assert_relative_eq!(one.norm_u, both.solutions[0].norm_u, max_relative = 1e-14);
        assert_relative_eq!(both.norm_u, (one.norm_u.powi(2) + both.solutions[1].norm_u.powi(2)).sqrt(), max_relative = 1e-14);
        assert!(both.bound_holds && one.bound_holds);
    }
}
