//! Leading exponents of `u, du, ∇u, ∇du` near the axis and weighted-L² membership.
//!
//! Exponents are read off series assembled in a model frame `(e_r, e_θ, e_σ)`
//! with one cross-section direction. The coupled block sits there as
//! `u = f e^r + g e^θ − iω e^σ`, the scalar block as `u = ϖ e^σ`. The
//! cross-section curvature only enters through bounded `tanh`/`sech` factors; the
//! extra `√μ′ ϖ / cosh r` component of a scalar `du` is carried separately.
//!
//! A second path recomputes every exponent from the closed rule table
//! (`k′ = k − 1` except where the leading `du` coefficient cancels) and the two
//! must agree.

use crate::error::{Error, Result};
use crate::frobenius::{all_branches, evaluate_branch, FrobeniusBranch, VALIDITY_RADIUS};
use crate::geometry::{volume_weight, ConeGeometry};
use crate::indicial::{cnorm, Family};
use crate::modes::{BlockKind, Form, ModeBlock, RadialOperator};
use crate::scalar::{im, int, lit, re, Real};
use crate::series::{expansion, Expansion, TruncatedSeries};
use num_complex::Complex;

pub const MIN_ORDER: usize = 6;
const ZERO_TOL: f64 = 1e-10;

/// `r^k (analytic + ln r · log)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSeries<T> {
    pub k: T,
    pub analytic: TruncatedSeries<T>,
    pub log: TruncatedSeries<T>,
}

/// Leading behaviour `r^exponent (ln r)^{log}`; unresolved when nothing nonzero
/// was found in the known range, in which case `exponent` is a lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesExponent<T> {
    pub exponent: T,
    pub log: bool,
    pub resolved: bool,
}

impl<T: Real> LogSeries<T> {
    pub fn zero(k: T, order: usize) -> Self {
        Self { k, analytic: TruncatedSeries::zero(0, order), log: TruncatedSeries::zero(0, order) }
    }

    pub fn top(&self) -> i32 {
        self.analytic.top().min(self.log.top())
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert!(self.k == o.k);
        Self { k: self.k, analytic: self.analytic.add(&o.analytic), log: self.log.add(&o.log) }
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self { k: self.k, analytic: self.analytic.scale(c), log: self.log.scale(c) }
    }

    pub fn mul(&self, s: &TruncatedSeries<T>) -> Self {
        Self { k: self.k, analytic: self.analytic.mul(s), log: self.log.mul(s) }
    }

    pub fn d_dr(&self) -> Result<Self> {
        let k = re(self.k);
        let analytic = self.analytic.shift(-1).scale(k).add(&self.analytic.differentiate()?).add(&self.log.shift(-1));
        let log = self.log.shift(-1).scale(k).add(&self.log.differentiate()?);
        Ok(Self { k: self.k, analytic, log })
    }

    pub fn eval(&self, r: T) -> Complex<T> {
        (self.analytic.eval(r) + self.log.eval(r) * r.ln()) * r.powf(self.k)
    }

    pub fn leading(&self, threshold: T) -> SeriesExponent<T> {
        let top = self.top();
        let find = |s: &TruncatedSeries<T>| s.leading_nonzero(threshold).map(|(p, _)| p).filter(|&p| p <= top);
        let (a, l) = (find(&self.analytic), find(&self.log));
        let (p, log, resolved) = match (a, l) {
            (None, None) => (top + 1, false, false),
            (Some(a), None) => (a, false, true),
            (None, Some(l)) => (l, true, true),
            (Some(a), Some(l)) => (a.min(l), l <= a, true),
        };
        SeriesExponent { exponent: self.k + int::<T>(p as i64), log, resolved }
    }
}

fn leading_of<T: Real>(comps: &[LogSeries<T>], threshold: T) -> SeriesExponent<T> {
    let lead: Vec<_> = comps.iter().map(|c| c.leading(threshold)).collect();
    let resolved: Vec<_> = lead.iter().filter(|e| e.resolved).collect();
    if resolved.is_empty() {
        let bound = lead.iter().map(|e| e.exponent).fold(T::infinity(), T::min);
        return SeriesExponent { exponent: bound, log: false, resolved: false };
    }
    let e = resolved.iter().map(|e| e.exponent).fold(T::infinity(), T::min);
    let log = resolved.iter().any(|x| x.exponent == e && x.log);
    SeriesExponent { exponent: e, log, resolved: true }
}

/// Series of the derived quantities of one branch, component by component.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFields<T> {
    /// Model-frame components `(u_r, u_θ, u_σ)`.
    pub u: Vec<LogSeries<T>>,
    /// `(a, b, c)` for coupled blocks (only `a` for the 2-component block);
    /// `(ϖ′ + tanh ϖ, ip′βϖ/sinh, √μ′ϖ/cosh)` for scalar ones.
    pub du: Vec<LogSeries<T>>,
    /// `grad_u[i*3 + j] = (∇_{e_i} u)(e_j)`.
    pub grad_u: Vec<LogSeries<T>>,
    /// `(∇_{e_i} du)(e_j, e_k)` for `j < k`, plus derivatives of any extra scalar component.
    pub grad_du: Vec<LogSeries<T>>,
    pub delta_u: LogSeries<T>,
}

struct Coefficients<T> {
    coth: TruncatedSeries<T>,
    tanh: TruncatedSeries<T>,
    inv_sinh: TruncatedSeries<T>,
    sech: TruncatedSeries<T>,
}

struct ModelFrame<T> {
    c: Coefficients<T>,
    /// `e_θ` acts as multiplication by `i p β / sinh r`.
    theta_freq: T,
    /// `e_σ` acts as multiplication by `i √λ′ / cosh r`.
    sigma_freq: T,
}

impl<T: Real> ModelFrame<T> {
    fn derive(&self, i: usize, s: &LogSeries<T>) -> Result<LogSeries<T>> {
        match i {
            0 => s.d_dr(),
            1 => Ok(s.mul(&self.c.inv_sinh).scale(im(self.theta_freq))),
            _ => Ok(s.mul(&self.c.sech).scale(im(self.sigma_freq))),
        }
    }

    /// `Γ[i][j][l] = ⟨∇_{e_i} e_j, e_l⟩`.
    fn gamma(&self, i: usize, j: usize, l: usize) -> Option<(T, &TruncatedSeries<T>)> {
        match (i, j, l) {
            (1, 1, 0) => Some((-T::one(), &self.c.coth)),
            (1, 0, 1) => Some((T::one(), &self.c.coth)),
            (2, 2, 0) => Some((-T::one(), &self.c.tanh)),
            (2, 0, 2) => Some((T::one(), &self.c.tanh)),
            _ => None,
        }
    }

    fn grad_one_form(&self, u: &[LogSeries<T>]) -> Result<Vec<LogSeries<T>>> {
        let mut out = Vec::with_capacity(9);
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = self.derive(i, &u[j])?;
                for (l, ul) in u.iter().enumerate() {
                    if let Some((sgn, g)) = self.gamma(i, j, l) {
                        acc = acc.add(&ul.mul(g).scale(re(-sgn)));
                    }
                }
                out.push(acc);
            }
        }
        Ok(out)
    }

    /// `w[j][k]` antisymmetric, indices in the model frame.
    fn grad_two_form(&self, w: &[[LogSeries<T>; 3]; 3]) -> Result<Vec<LogSeries<T>>> {
        let mut out = Vec::with_capacity(9);
        for i in 0..3 {
            for j in 0..3 {
                for k in j + 1..3 {
                    let mut acc = self.derive(i, &w[j][k])?;
                    for l in 0..3 {
                        if let Some((sgn, g)) = self.gamma(i, j, l) {
                            acc = acc.add(&w[l][k].mul(g).scale(re(-sgn)));
                        }
                        if let Some((sgn, g)) = self.gamma(i, k, l) {
                            acc = acc.add(&w[j][l].mul(g).scale(re(-sgn)));
                        }
                    }
                    out.push(acc);
                }
            }
        }
        Ok(out)
    }
}

fn branch_component<T: Real>(b: &FrobeniusBranch<T>, c: usize) -> LogSeries<T> {
    let analytic = b.series[0][c].clone();
    let log = if b.log_degree == 1 { b.series[1][c].clone() } else { TruncatedSeries::zero(0, b.order) };
    LogSeries { k: b.k, analytic, log }
}

fn p_beta<T: Real>(b: &FrobeniusBranch<T>) -> T {
    int::<T>(b.block.frequency()) * b.beta
}

/// Size factor of the frame derivatives, used to scale the zero threshold.
fn derivative_scale<T: Real>(b: &FrobeniusBranch<T>) -> T {
    T::one() + p_beta(b).abs() + b.block.eigenvalue().sqrt() + b.k.abs()
}

pub fn derived_field_series<T: Real>(branch: &FrobeniusBranch<T>, geom: &ConeGeometry<T>) -> Result<DerivedFields<T>> {
    check_geometry(branch, geom)?;
    if branch.order < MIN_ORDER {
        return Err(Error::Validation(format!(
            "branch order {} is too low for derived fields (need {MIN_ORDER})",
            branch.order
        )));
    }
    let order = branch.order;
    let c = Coefficients {
        coth: expansion(Expansion::Coth, order)?,
        tanh: expansion(Expansion::Tanh, order)?,
        inv_sinh: expansion(Expansion::InvSinh, order)?,
        sech: expansion(Expansion::Sech, order)?,
    };
    let pb = p_beta(branch);
    let lam = branch.block.eigenvalue();
    let sl = lam.sqrt();
    let kind = branch.block.kind();
    let frame = ModelFrame { c, theta_freq: pb, sigma_freq: if kind == BlockKind::Coupled3 { sl } else { T::zero() } };
    let zero = LogSeries::zero(branch.k, order);
    let mi = im(-T::one());

    let u: Vec<LogSeries<T>> = match kind {
        BlockKind::Coupled3 => vec![branch_component(branch, 0), branch_component(branch, 1), branch_component(branch, 2).scale(mi)],
        BlockKind::Coupled2 => vec![branch_component(branch, 0), branch_component(branch, 1), zero.clone()],
        BlockKind::Scalar => vec![zero.clone(), zero.clone(), branch_component(branch, 0)],
    };
    let grad_u = frame.grad_one_form(&u)?;
    let delta_u = grad_u[0].add(&grad_u[4]).add(&grad_u[8]).scale(re(-T::one()));

    let c = &frame.c;
    let (du, model, extra) = match kind {
        BlockKind::Coupled3 | BlockKind::Coupled2 => {
            let f = branch_component(branch, 0);
            let g = branch_component(branch, 1);
            let a = g.d_dr()?.add(&g.mul(&c.coth)).add(&f.mul(&c.inv_sinh).scale(im(-pb)));
            if kind == BlockKind::Coupled2 {
                (vec![a.clone()], [a, zero.clone(), zero.clone()], None)
            } else {
                let w = branch_component(branch, 2);
                let b = w.d_dr()?.add(&w.mul(&c.tanh)).add(&f.mul(&c.sech).scale(re(sl)));
                let cc = w.mul(&c.inv_sinh).scale(im(pb)).add(&g.mul(&c.sech).scale(re(sl)));
                let model = [a.clone(), b.scale(mi), cc.scale(mi)];
                (vec![a, b, cc], model, None)
            }
        }
        BlockKind::Scalar => {
            let w = branch_component(branch, 0);
            let b = w.d_dr()?.add(&w.mul(&c.tanh));
            let cc = w.mul(&c.inv_sinh).scale(im(pb));
            let extra = w.mul(&c.sech).scale(re(sl));
            (vec![b.clone(), cc.clone(), extra.clone()], [zero.clone(), b, cc], Some(extra))
        }
    };
    // model = (rθ, rσ, θσ)
    let neg = |s: &LogSeries<T>| s.scale(re(-T::one()));
    let [w01, w02, w12] = model;
    let w = [
        [zero.clone(), w01.clone(), w02.clone()],
        [neg(&w01), zero.clone(), w12.clone()],
        [neg(&w02), neg(&w12), zero.clone()],
    ];
    let mut grad_du = frame.grad_two_form(&w)?;
    if let Some(x) = extra {
        for i in 0..3 {
            grad_du.push(frame.derive(i, &x)?);
        }
    }
    Ok(DerivedFields { u, du, grad_u, grad_du, delta_u })
}

/// Two-form `du` recovered by antisymmetrizing `∇u`, as `(rθ, rσ, θσ)`.
pub fn antisymmetrized_du<T: Real>(fields: &DerivedFields<T>) -> [LogSeries<T>; 3] {
    let g = &fields.grad_u;
    let anti = |i: usize, j: usize| g[i * 3 + j].add(&g[j * 3 + i].scale(re(-T::one())));
    [anti(0, 1), anti(0, 2), anti(1, 2)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleExponent<T> {
    Exact(T),
    AtLeast(T),
}

impl<T: Real> RuleExponent<T> {
    pub fn value(&self) -> T {
        match *self {
            RuleExponent::Exact(v) | RuleExponent::AtLeast(v) => v,
        }
    }
    pub fn is_exact(&self) -> bool {
        matches!(self, RuleExponent::Exact(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleTable<T> {
    pub u: RuleExponent<T>,
    pub du: RuleExponent<T>,
    pub grad_u: RuleExponent<T>,
    pub grad_du: RuleExponent<T>,
}

fn near<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= lit::<T>(1e-9) * (T::one() + a.abs().max(b.abs()))
}

/// Whether the leading `du` coefficient `w₀` vanishes for this branch.
fn du_cancels<T: Real>(b: &FrobeniusBranch<T>) -> bool {
    let (k, pb) = (b.k, p_beta(b));
    match b.family {
        Family::Plus => near(k, -pb - T::one()),
        Family::Minus => near(k, pb - T::one()),
        Family::Omega | Family::Scalar => near(k, T::zero()) && near(pb, T::zero()),
    }
}

/// Exponents predicted by the rule table alone.
pub fn rule_exponents<T: Real>(b: &FrobeniusBranch<T>) -> RuleTable<T> {
    use RuleExponent::{AtLeast, Exact};
    let one = T::one();
    if b.log_seed {
        return RuleTable { u: Exact(b.k), du: Exact(b.k - one), grad_u: Exact(b.k - one), grad_du: Exact(b.k - one - one) };
    }
    let du = if du_cancels(b) { AtLeast(b.k) } else { Exact(b.k - one) };
    let grad_u = if near(b.k, T::zero()) { AtLeast(T::zero()) } else { Exact(b.k - one) };
    let grad_du = match du {
        Exact(e) if near(e, T::zero()) => AtLeast(T::zero()),
        Exact(e) => Exact(e - one),
        AtLeast(e) if near(e, T::zero()) => AtLeast(T::zero()),
        AtLeast(e) => AtLeast(e - one),
    };
    RuleTable { u: Exact(b.k), du, grad_u, grad_du }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantityReport<T> {
    pub exponent: T,
    pub log: bool,
    pub resolved: bool,
    pub in_l2: bool,
}

/// Weighted-L² membership near the axis: `∫ r^{2e} r dr < ∞` iff `e > −1`.
pub fn in_l2<T: Real>(exponent: T) -> bool {
    exponent > -T::one() + lit::<T>(1e-9)
}

impl<T: Real> QuantityReport<T> {
    fn from_series(e: SeriesExponent<T>) -> Self {
        Self { exponent: e.exponent, log: e.log, resolved: e.resolved, in_l2: in_l2(e.exponent) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct L2Report<T> {
    pub block: ModeBlock<T>,
    pub beta: T,
    pub k: T,
    pub family: Family,
    pub sign: i8,
    pub log_seed: bool,
    pub log_degree: usize,
    pub u: QuantityReport<T>,
    pub du: QuantityReport<T>,
    pub grad_u: QuantityReport<T>,
    pub grad_du: QuantityReport<T>,
    pub delta_u: QuantityReport<T>,
    pub rule: RuleTable<T>,
    /// `u` and `du` both in L².
    pub admissible: bool,
}

impl<T: Real> L2Report<T> {
    /// `u, du, δu ∈ L²`.
    pub fn hodge_admissible(&self) -> bool {
        self.u.in_l2 && self.du.in_l2 && self.delta_u.in_l2
    }
    /// `u, ∇u ∈ L²`.
    pub fn rough_admissible(&self) -> bool {
        self.u.in_l2 && self.grad_u.in_l2
    }
    /// Admissible for `(u, du)` while `∇u ∉ L²`.
    pub fn is_witness(&self) -> bool {
        self.admissible && !self.grad_u.in_l2
    }
}

fn check_geometry<T: Real>(b: &FrobeniusBranch<T>, geom: &ConeGeometry<T>) -> Result<()> {
    if !near(b.beta, geom.beta()) {
        return Err(Error::Validation(format!("branch built for beta {} but geometry has beta {}", b.beta, geom.beta())));
    }
    Ok(())
}

fn agree<T: Real>(what: &str, b: &FrobeniusBranch<T>, s: &QuantityReport<T>, rule: RuleExponent<T>) -> Result<()> {
    let ok = match rule {
        RuleExponent::Exact(e) => s.resolved && near(s.exponent, e),
        RuleExponent::AtLeast(e) => s.exponent >= e - lit::<T>(1e-9) * (T::one() + e.abs()),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Inconsistency(format!(
            "{what} exponent of {} branch k = {} ({}): series gives {}{}, rule table {:?}",
            b.block.label(),
            b.k,
            b.family.name(),
            s.exponent,
            if s.resolved { "" } else { " (bound)" },
            rule
        )))
    }
}

pub fn classify<T: Real>(branch: &FrobeniusBranch<T>, geom: &ConeGeometry<T>) -> Result<L2Report<T>> {
    let fields = derived_field_series(branch, geom)?;
    let th0 = lit::<T>(ZERO_TOL) * branch.scale();
    let d = derivative_scale(branch);
    let (th1, th2) = (th0 * d, th0 * d * d);
    let u = QuantityReport::from_series(leading_of(&fields.u, th0));
    let du = QuantityReport::from_series(leading_of(&fields.du, th1));
    let grad_u = QuantityReport::from_series(leading_of(&fields.grad_u, th1));
    let grad_du = QuantityReport::from_series(leading_of(&fields.grad_du, th2));
    let delta_u = QuantityReport::from_series(leading_of(std::slice::from_ref(&fields.delta_u), th1));
    let rule = rule_exponents(branch);
    agree("u", branch, &u, rule.u)?;
    agree("du", branch, &du, rule.du)?;
    agree("grad u", branch, &grad_u, rule.grad_u)?;
    agree("grad du", branch, &grad_du, rule.grad_du)?;
    Ok(L2Report {
        block: branch.block,
        beta: branch.beta,
        k: branch.k,
        family: branch.family,
        sign: branch.sign,
        log_seed: branch.log_seed,
        log_degree: branch.log_degree,
        u,
        du,
        grad_u,
        grad_du,
        delta_u,
        rule,
        admissible: u.in_l2 && du.in_l2,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleBasis<T> {
    pub branches: Vec<FrobeniusBranch<T>>,
    pub reports: Vec<L2Report<T>>,
    /// Indices into `branches` of the admissible ones.
    pub admissible: Vec<usize>,
}

impl<T: Real> AdmissibleBasis<T> {
    pub fn dimension(&self) -> usize {
        self.admissible.len()
    }
    pub fn total(&self) -> usize {
        self.branches.len()
    }
    pub fn admissible_branches(&self) -> impl Iterator<Item = &FrobeniusBranch<T>> {
        self.admissible.iter().map(move |&i| &self.branches[i])
    }
    pub fn admissible_exponents(&self) -> Vec<T> {
        self.admissible_branches().map(|b| b.k).collect()
    }
    pub fn witnesses(&self) -> impl Iterator<Item = &L2Report<T>> {
        self.reports.iter().filter(|r| r.is_witness())
    }
}

/// All branches of a block with their classification (radial operator in `L` form).
pub fn admissible_basis<T: Real>(block: ModeBlock<T>, geom: &ConeGeometry<T>, order: usize) -> Result<AdmissibleBasis<T>> {
    block.validate()?;
    let op = RadialOperator::new(geom.n(), geom.beta(), block, Form::L, order + 4)?;
    let branches = all_branches(&op, order)?;
    let reports = branches.iter().map(|b| classify(b, geom)).collect::<Result<Vec<_>>>()?;
    let admissible = reports.iter().enumerate().filter(|(_, r)| r.admissible).map(|(i, _)| i).collect();
    Ok(AdmissibleBasis { branches, reports, admissible })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayProbe<T> {
    /// `(t, I(t))` with `I(t) = ∫_{Σ_t} |u|²`.
    pub samples: Vec<(T, T)>,
    /// Least-squares slope of `ln I` against `ln t`; `None` when some `I(t)` vanishes.
    pub slope: Option<T>,
}

/// Cross-section integrals `I(t) = α · volume_weight(t) · |u(t)|²` for a unit-volume cross-section.
pub fn boundary_decay_probe<T: Real>(branch: &FrobeniusBranch<T>, geom: &ConeGeometry<T>, t_values: &[T]) -> Result<DecayProbe<T>> {
    check_geometry(branch, geom)?;
    let mut samples = Vec::with_capacity(t_values.len());
    for &t in t_values {
        if !(t > T::zero() && t <= lit::<T>(VALIDITY_RADIUS)) {
            return Err(Error::Domain(format!("probe radius {t} outside (0, {VALIDITY_RADIUS}]")));
        }
        let u = evaluate_branch(branch, t).values;
        let n = cnorm(&u);
        samples.push((t, geom.alpha() * volume_weight(geom.n(), t) * n * n));
    }
    let slope = if samples.len() >= 2 && samples.iter().all(|&(_, i)| i > T::zero()) {
        let pts: Vec<(T, T)> = samples.iter().map(|&(t, i)| (t.ln(), i.ln())).collect();
        Some(fit_slope(&pts))
    } else {
        None
    };
    Ok(DecayProbe { samples, slope })
}

pub(crate) fn fit_slope<T: Real>(pts: &[(T, T)]) -> T {
    let n = int::<T>(pts.len() as i64);
    let mx = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let my = pts.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let (sxy, sxx) = pts.iter().fold((T::zero(), T::zero()), |(sxy, sxx), &(x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx) * (x - mx))
    });
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Angle, CrossSection};
    use proptest::prelude::*;

    fn geom(beta: f64) -> ConeGeometry<f64> {
        ConeGeometry::new(3, Angle::Beta(beta), 1.0, CrossSection::Circle { length: 2.0 * std::f64::consts::PI }).unwrap()
    }

    fn basis(block: ModeBlock<f64>, beta: f64) -> AdmissibleBasis<f64> {
        admissible_basis(block, &geom(beta), 16).unwrap()
    }

    fn report(b: &AdmissibleBasis<f64>, k: f64, log: bool) -> &L2Report<f64> {
        b.reports.iter().find(|r| (r.k - k).abs() < 1e-12 && r.log_seed == log).unwrap()
    }

    fn exps(r: &L2Report<f64>) -> [f64; 4] {
        [r.u.exponent, r.du.exponent, r.grad_u.exponent, r.grad_du.exponent]
    }

    #[test]
    fn coupled3_exponents_at_k3() {
        let b = basis(ModeBlock::Coupled3 { lambda_prime: 1.0, p: 1 }, 2.0);
        let r = report(&b, 3.0, false);
        assert_eq!(exps(r), [3.0, 2.0, 2.0, 1.0]);
        assert!(r.u.in_l2 && r.du.in_l2 && r.grad_u.in_l2 && r.grad_du.in_l2);
    }

    #[test]
    fn minus_branch_du_cancels() {
        // k = pβ − 1 with v₀ = (1, i, 0): w₀ = ((k+1)g₀ − ipβ f₀, kω₀, ipβω₀) = 0.
        let b = basis(ModeBlock::Coupled3 { lambda_prime: 1.0, p: 1 }, 2.0);
        let r = report(&b, 1.0, false);
        assert_eq!(r.family, Family::Minus);
        assert!(r.du.exponent > 0.5, "du exponent {}", r.du.exponent);
        assert!(!r.rule.du.is_exact());
    }

    #[test]
    fn scalar_du_is_k_minus_one() {
        let b = basis(ModeBlock::Scalar { mu_prime: 0.0, p_prime: 1 }, 2.0);
        let r = report(&b, 2.0, false);
        assert_eq!(r.du.exponent, 1.0);
        assert!(r.du.resolved && !r.du.log);
    }

    #[test]
    fn log_branch_du_has_inverse_r() {
        // pβ = 1 makes the minus pair a double root at 0.
        let b = basis(ModeBlock::Coupled3 { lambda_prime: 1.0, p: 1 }, 1.0);
        let r = report(&b, 0.0, true);
        assert_eq!(r.du.exponent, -1.0);
        let p0 = basis(ModeBlock::Coupled3 { lambda_prime: 1.0, p: 0 }, 2.0);
        let r = report(&p0, 0.0, true);
        assert!(r.u.in_l2 && r.u.log && r.u.exponent == 0.0);
        assert!(!r.du.in_l2 && r.du.exponent == -1.0);
        assert!(!r.admissible);
    }

    #[test]
    fn wide_angle_witness() {
        let b = basis(ModeBlock::Coupled3 { lambda_prime: 1.0, p: 1 }, 0.8);
        let r = report(&b, 0.8 - 1.0, false);
        assert!(r.u.in_l2 && r.du.in_l2);
        assert!((r.grad_u.exponent + 1.2).abs() < 1e-12 && !r.grad_u.in_l2);
        assert!(r.is_witness());
    }

    #[test]
    fn admissible_sets() {
        let b = basis(ModeBlock::Coupled3 { lambda_prime: 1.0, p: 1 }, 2.0);
        let mut e = b.admissible_exponents();
        e.sort_by(f64::total_cmp);
        assert_eq!((e, b.total()), (vec![1.0, 2.0, 3.0], 6));

        let b = basis(ModeBlock::Scalar { mu_prime: 0.0, p_prime: 0 }, 2.0);
        assert_eq!((b.dimension(), b.total()), (1, 2));
        assert!(!b.branches[b.admissible[0]].log_seed);

        let b = basis(ModeBlock::Coupled2 { p: 3 }, 2.0);
        let mut e = b.admissible_exponents();
        e.sort_by(f64::total_cmp);
        assert_eq!((e, b.total()), (vec![5.0, 7.0], 4));
    }

    #[test]
    fn du_matches_antisymmetrized_gradient() {
        let g = geom(1.7);
        for block in [
            ModeBlock::Coupled3 { lambda_prime: 2.0, p: 1 },
            ModeBlock::Coupled2 { p: -2 },
            ModeBlock::Scalar { mu_prime: 0.0, p_prime: 1 },
        ] {
            let op = RadialOperator::new(3, 1.7, block, Form::L, 20).unwrap();
            for br in all_branches(&op, 12).unwrap() {
                let f = derived_field_series(&br, &g).unwrap();
                let anti = antisymmetrized_du(&f);
                let closed: [Complex<f64>; 3] = match block.kind() {
                    BlockKind::Coupled3 => {
                        let x = 0.03;
                        [f.du[0].eval(x), -Complex::<f64>::i() * f.du[1].eval(x), -Complex::<f64>::i() * f.du[2].eval(x)]
                    }
                    BlockKind::Coupled2 => [f.du[0].eval(0.03), Complex::<f64>::new(0.0, 0.0), Complex::<f64>::new(0.0, 0.0)],
                    BlockKind::Scalar => [Complex::<f64>::new(0.0, 0.0), f.du[0].eval(0.03), f.du[1].eval(0.03)],
                };
                for (x, y) in anti.iter().zip(closed) {
                    let v = x.eval(0.03);
                    assert!((v - y).norm() <= 1e-9 * (1.0 + y.norm()), "{block:?} k={} {v} vs {y}", br.k);
                }
            }
        }
    }

    #[test]
    fn decay_probe_slopes() {
        let g = geom(2.0);
        let ts: Vec<f64> = (0..9).map(|i| 1e-4 * 10f64.powf(i as f64 / 4.0)).collect();
        let b = basis(ModeBlock::Scalar { mu_prime: 0.0, p_prime: 0 }, 2.0);
        let nonlog = &b.branches[b.admissible[0]];
        let slope = boundary_decay_probe(nonlog, &g, &ts).unwrap().slope.unwrap();
        assert!((slope - 1.0).abs() < 0.05, "{slope}");

        let log = b.branches.iter().find(|x| x.log_seed).unwrap();
        let probe = boundary_decay_probe(log, &g, &ts).unwrap();
        for &(t, i) in &probe.samples {
            let model = g.alpha() * t * t.ln().powi(2);
            assert!((i / model - 1.0).abs() < 0.2, "t={t} I={i} model={model}");
        }

        let z = FrobeniusBranch::zero(ModeBlock::Coupled2 { p: 1 }, 2.0, 8);
        let probe = boundary_decay_probe(&z, &g, &ts).unwrap();
        assert!(probe.samples.iter().all(|s| s.1 == 0.0) && probe.slope.is_none());
        assert!(boundary_decay_probe(&z, &g, &[0.7]).is_err());
    }

    #[test]
    fn low_order_rejected() {
        let op = RadialOperator::new(3, 2.0, ModeBlock::Coupled2 { p: 1 }, Form::L, 20).unwrap();
        let br = all_branches(&op, 5).unwrap().remove(0);
        assert!(derived_field_series(&br, &geom(2.0)).is_err());
        assert!(classify(&br, &geom(3.0)).is_err());
    }

    fn any_block() -> impl Strategy<Value = ModeBlock<f64>> {
        prop_oneof![
            (prop_oneof![Just(1.0), Just(4.0), 0.1f64..6.0], -3i64..=3).prop_map(|(l, p)| ModeBlock::Coupled3 { lambda_prime: l, p }),
            (-3i64..=3).prop_map(|p| ModeBlock::Coupled2 { p }),
            (prop_oneof![Just(0.0), 0.1f64..6.0], -3i64..=3).prop_map(|(m, p)| ModeBlock::Scalar { mu_prime: m, p_prime: p }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn membership_threshold_and_paths_agree(block in any_block(), beta in prop_oneof![Just(0.8), Just(1.1), Just(2.0), Just(3.0), 0.3f64..6.0]) {
            // classify already fails on any rule/series disagreement.
            let b = admissible_basis(block, &geom(beta), 16).unwrap();
            for r in &b.reports {
                for q in [r.u, r.du, r.grad_u, r.grad_du, r.delta_u] {
                    prop_assert_eq!(q.in_l2, q.exponent > -1.0 + 1e-9);
                }
                prop_assert_eq!(r.admissible, r.u.in_l2 && r.du.in_l2);
                if beta > 1.0 && r.admissible {
                    prop_assert!(r.grad_u.in_l2 && r.grad_du.in_l2);
                    prop_assert_eq!(r.hodge_admissible(), r.rough_admissible());
                }
            }
        }
    }
}
