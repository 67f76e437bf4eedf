//! Truncated Frobenius solutions `r^k Σ_ℓ (ln r)^ℓ S_ℓ(r)` of the radial systems.
//!
//! With `r P = Σ p_j r^j` and `r² Q = Σ Q_j r^j`, the coefficients of the
//! analytic part obey `M(k+s) v_s = Σ_{j≥1} (p_j (k+s−j) − Q_j) v_{s−j}`.
//! A log part `ln r · A` feeds `2(k+s) a_s + Σ_{j≥1} p_j a_{s−j}` into that
//! right-hand side.

use crate::error::{Error, Result};
use crate::indicial::{cnorm, indicial_system, Family, IndicialRoot, IndicialSystem};
use crate::modes::{CVec, ModeBlock, RadialOperator};
use crate::scalar::{int, lit, re, Real};
use crate::series::TruncatedSeries;

pub const VALIDITY_RADIUS: f64 = 0.5;

/// Relative size below which the kernel part of a resonant right-hand side
/// counts as zero.
const RESONANCE_TOL: f64 = 1e-9;

/// Starting data for one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSeed<T> {
    pub k: T,
    pub family: Family,
    pub sign: i8,
    pub v0: CVec<T>,
    /// Second solution of a double root, `ln r (v₀ + …) + (…)`.
    pub log: bool,
}

/// Branch seeds of a root: one per leading vector, plus the log branch of a double root.
pub fn branch_seeds<T: Real>(root: &IndicialRoot<T>) -> Vec<BranchSeed<T>> {
    let mut out: Vec<_> = root
        .leading_space
        .iter()
        .zip(&root.families)
        .zip(&root.signs)
        .map(|((v, &family), &sign)| BranchSeed { k: root.k, family, sign, v0: v.clone(), log: false })
        .collect();
    if root.log_required {
        let mut s = out[0].clone();
        s.log = true;
        s.sign = -s.sign;
        out.push(s);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance<T> {
    pub order: usize,
    pub exponent: T,
    pub log_introduced: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusBranch<T> {
    pub block: ModeBlock<T>,
    pub beta: T,
    pub k: T,
    pub family: Family,
    pub sign: i8,
    pub v0: CVec<T>,
    pub log_seed: bool,
    pub log_degree: usize,
    /// `series[ℓ][component]`; value is `r^k Σ_ℓ (ln r)^ℓ series[ℓ]`.
    pub series: Vec<Vec<TruncatedSeries<T>>>,
    pub order: usize,
    pub resonances: Vec<Resonance<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchValue<T> {
    pub values: CVec<T>,
    pub derivatives: CVec<T>,
    pub second_derivatives: CVec<T>,
    /// Set when `r` lies beyond the series validity radius.
    pub beyond_validity: bool,
}

fn zeros<T: Real>(m: usize) -> CVec<T> {
    CVec::<T>::zeros(m)
}

/// Operator whose series reach at least `order + 1` recurrence coefficients.
fn series_ready<T: Real>(op: &RadialOperator<T>, order: usize) -> Result<RadialOperator<T>> {
    if op.recurrence_depth() > order {
        Ok(op.clone())
    } else {
        RadialOperator::new(op.n(), op.beta(), op.block(), op.form(), order + 4)
    }
}

pub fn frobenius_branch<T: Real>(op: &RadialOperator<T>, seed: &BranchSeed<T>, order: usize) -> Result<FrobeniusBranch<T>> {
    if order < 4 {
        return Err(Error::Validation(format!("truncation order {order} must be at least 4")));
    }
    let op = series_ready(op, order)?;
    let m = op.size();
    let sys: IndicialSystem<T> = indicial_system(&op.block(), op.beta());
    let k = seed.k;
    let p: Vec<T> = (0..=order).map(|j| op.rp_coeff(j).expect("depth checked")).collect();
    let q: Vec<_> = (0..=order).map(|j| op.r2q_coeff(j).expect("depth checked")).collect();

    let mut a: Vec<CVec<T>> = Vec::with_capacity(order + 1);
    let mut b: Vec<CVec<T>> = Vec::with_capacity(order + 1);
    if seed.log {
        a.push(seed.v0.clone());
        b.push(zeros(m));
    } else {
        a.push(zeros(m));
        b.push(seed.v0.clone());
    }
    let mut log_degree = usize::from(seed.log);
    let mut resonances = Vec::new();
    let tol = lit::<T>(RESONANCE_TOL);

    for s in 1..=order {
        let kappa = k + int::<T>(s as i64);
        let mut ra = zeros::<T>(m);
        let mut rb = zeros::<T>(m);
        let (mut mag_a, mut mag_b) = (T::zero(), T::zero());
        for j in 1..=s {
            let km = k + int::<T>((s - j) as i64);
            let coef = crate::modes::CMat::<T>::identity(m, m) * re(p[j] * km) - &q[j];
            let ta = &coef * &a[s - j];
            let tb = &coef * &b[s - j] + &a[s - j] * re(p[j]);
            mag_a += cnorm(&ta);
            mag_b += cnorm(&tb);
            ra += ta;
            rb += tb;
        }
        let resonant = !sys.kernel(kappa).is_empty();
        let (mut a_s, ker_a) = sys.solve(kappa, &ra);
        if resonant && cnorm(&ker_a) > tol * mag_a {
            return Err(Error::Unsupported(format!(
                "resonance at exponent {kappa} needs a log ladder of degree 2 ({:?} branch k = {k})",
                seed.family
            )));
        }
        let two_kappa = re(lit::<T>(2.0) * kappa);
        let mut rhs = &rb + &a_s * two_kappa;
        mag_b += cnorm(&a_s) * two_kappa.norm();
        let (mut b_s, ker_b) = sys.solve(kappa, &rhs);
        let mut introduced = false;
        if resonant && cnorm(&ker_b) > tol * mag_b {
            if two_kappa.norm() <= tol {
                return Err(Error::Unsupported(format!(
                    "resonance at exponent 0 from k = {k} needs a log ladder of degree 2"
                )));
            }
            let delta = &ker_b / -two_kappa;
            a_s += &delta;
            rhs = &rb + &a_s * two_kappa;
            b_s = sys.solve(kappa, &rhs).0;
            log_degree = 1;
            introduced = true;
        }
        if resonant {
            resonances.push(Resonance { order: s, exponent: kappa, log_introduced: introduced });
        }
        a.push(a_s);
        b.push(b_s);
    }

    let to_series = |coefs: &[CVec<T>]| -> Vec<TruncatedSeries<T>> {
        (0..m).map(|c| TruncatedSeries::new(0, coefs.iter().map(|v| v[c]).collect())).collect()
    };
    let mut series = vec![to_series(&b)];
    if log_degree == 1 {
        series.push(to_series(&a));
    }
    Ok(FrobeniusBranch {
        block: op.block(),
        beta: op.beta(),
        k,
        family: seed.family,
        sign: seed.sign,
        v0: seed.v0.clone(),
        log_seed: seed.log,
        log_degree,
        series,
        order,
        resonances,
    })
}

/// First series order beyond `order` that the truncation can actually omit.
///
/// When `rP` and `r²Q` have no odd powers, odd coefficients vanish identically
/// and the leading omitted term moves from `order + 1` to the next even order.
pub fn first_omitted_order<T: Real>(op: &RadialOperator<T>, order: usize) -> usize {
    let depth = op.recurrence_depth();
    let odd = (1..depth).step_by(2).any(|j| {
        op.rp_coeff(j).is_some_and(|c| c != T::zero()) || op.r2q_coeff(j).is_some_and(|q| q.iter().any(|z| z.norm() != T::zero()))
    });
    if odd || order % 2 == 1 {
        order + 1
    } else {
        order + 2
    }
}

/// Every branch of the block, `2m` in total.
pub fn all_branches<T: Real>(op: &RadialOperator<T>, order: usize) -> Result<Vec<FrobeniusBranch<T>>> {
    let roots = crate::indicial::indicial_roots(&op.block(), op.beta());
    let mut out = Vec::new();
    for root in &roots {
        for seed in branch_seeds(root) {
            out.push(frobenius_branch(op, &seed, order)?);
        }
    }
    Ok(out)
}

impl<T: Real> FrobeniusBranch<T> {
    pub fn size(&self) -> usize {
        self.v0.len()
    }

    /// The identically zero solution, useful as a degenerate probe.
    pub fn zero(block: ModeBlock<T>, beta: T, order: usize) -> Self {
        let m = block.size();
        Self {
            block,
            beta,
            k: T::zero(),
            family: crate::indicial::Family::Scalar,
            sign: 1,
            v0: zeros(m),
            log_seed: false,
            log_degree: 0,
            series: vec![(0..m).map(|_| TruncatedSeries::zero(0, order)).collect()],
            order,
            resonances: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.series.iter().all(|l| l.iter().all(|s| s.is_zero()))
    }

    /// Largest coefficient modulus over all retained series.
    pub fn scale(&self) -> T {
        self.series.iter().flatten().fold(T::zero(), |m, s| m.max(s.max_abs()))
    }

    /// Leading vector of the highest log power.
    pub fn top_leading_vector(&self) -> CVec<T> {
        let top = &self.series[self.log_degree];
        let lead = top.iter().map(|s| s.leading_power()).min().unwrap_or(0);
        CVec::from_iterator(top.len(), top.iter().map(|s| s.coeff(lead).unwrap_or_else(|| re(T::zero()))))
    }

    pub fn has_log(&self) -> bool {
        self.log_degree > 0
    }
}

pub fn evaluate_branch<T: Real>(branch: &FrobeniusBranch<T>, r: T) -> BranchValue<T> {
    let m = branch.size();
    let (k, lnr) = (branch.k, r.ln());
    let rk = r.powf(k);
    let mut values = zeros::<T>(m);
    let mut derivatives = zeros::<T>(m);
    let mut second = zeros::<T>(m);
    for c in 0..m {
        // F = S0 + ln r · S1; u = r^k F.
        let s0 = &branch.series[0][c];
        let (f0, f0d, f0dd) = (s0.eval(r), s0.eval_derivative(r), s0.eval_second_derivative(r));
        let (mut f, mut fd, mut fdd) = (f0, f0d, f0dd);
        if branch.log_degree == 1 {
            let s1 = &branch.series[1][c];
            let (g, gd, gdd) = (s1.eval(r), s1.eval_derivative(r), s1.eval_second_derivative(r));
            f += g * lnr;
            fd += gd * lnr + g / r;
            fdd += gdd * lnr + gd * (lit::<T>(2.0) / r) - g / (r * r);
        }
        values[c] = f * rk;
        derivatives[c] = (f * (k / r) + fd) * rk;
        second[c] = (f * (k * (k - T::one()) / (r * r)) + fd * (lit::<T>(2.0) * k / r) + fdd) * rk;
    }
    BranchValue { values, derivatives, second_derivatives: second, beyond_validity: r > lit::<T>(VALIDITY_RADIUS) }
}

/// `|−u″ − P u′ + Q u|` with closed-form coefficients.
pub fn branch_residual<T: Real>(branch: &FrobeniusBranch<T>, op: &RadialOperator<T>, r: T) -> T {
    let v = evaluate_branch(branch, r);
    cnorm(&op.apply(r, &v.values, &v.derivatives, &v.second_derivatives))
}

/// Value and derivatives of the log-free part `r^k S_ℓ` of one log power.
fn part_value<T: Real>(branch: &FrobeniusBranch<T>, l: usize, r: T) -> BranchValue<T> {
    let m = branch.size();
    let k = branch.k;
    let rk = r.powf(k);
    let mut v = BranchValue { values: zeros(m), derivatives: zeros(m), second_derivatives: zeros(m), beyond_validity: r > lit::<T>(VALIDITY_RADIUS) };
    for c in 0..m {
        let s = &branch.series[l][c];
        let (f, fd, fdd) = (s.eval(r), s.eval_derivative(r), s.eval_second_derivative(r));
        v.values[c] = f * rk;
        v.derivatives[c] = (f * (k / r) + fd) * rk;
        v.second_derivatives[c] = (f * (k * (k - T::one()) / (r * r)) + fd * (lit::<T>(2.0) * k / r) + fdd) * rk;
    }
    v
}

/// Residual split by powers of `ln r`: entry `ℓ` is the norm of the coefficient of `(ln r)^ℓ`.
///
/// With `u = u₀ + ln r · u₁` the residual is
/// `L u₀ − 2u₁′/r + u₁/r² − P u₁/r + ln r · L u₁`.
pub fn branch_residual_parts<T: Real>(branch: &FrobeniusBranch<T>, op: &RadialOperator<T>, r: T) -> Vec<T> {
    let u0 = part_value(branch, 0, r);
    let mut r0 = op.apply(r, &u0.values, &u0.derivatives, &u0.second_derivatives);
    if branch.log_degree == 0 {
        return vec![cnorm(&r0)];
    }
    let u1 = part_value(branch, 1, r);
    let r1 = op.apply(r, &u1.values, &u1.derivatives, &u1.second_derivatives);
    let two = lit::<T>(2.0);
    r0 -= &u1.derivatives * re(two / r);
    r0 += &u1.values * re((T::one() - op.p(r) * r) / (r * r));
    vec![cnorm(&r0), cnorm(&r1)]
}

/// Residual divided by the branch magnitude `|u(r)|`.
pub fn relative_residual<T: Real>(branch: &FrobeniusBranch<T>, op: &RadialOperator<T>, r: T) -> T {
    let v = evaluate_branch(branch, r);
    let mag = cnorm(&v.values);
    if mag == T::zero() {
        return T::zero();
    }
    cnorm(&op.apply(r, &v.values, &v.derivatives, &v.second_derivatives)) / mag
}
