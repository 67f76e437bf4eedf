//! Indicial matrices, roots and leading vectors at the singular axis `r = 0`.

use crate::modes::{BlockKind, CMat, CVec, ModeBlock};
use crate::scalar::{im, int, lit, re, Real};
use num_complex::Complex;

/// Root family: which eigendirection of the indicial constant part a root belongs to.
///
/// `Plus`: `k = ±(pβ+1)`, `v₀ = (1,−i,0)`. `Minus`: `k = ±(pβ−1)`, `v₀ = (1,i,0)`.
/// `Omega`: `k = ±pβ`, `v₀ = (0,0,1)`. `Scalar`: `k = ±p′β`, `v₀ = (1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Plus,
    Minus,
    Omega,
    Scalar,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Plus => "plus",
            Family::Minus => "minus",
            Family::Omega => "omega",
            Family::Scalar => "scalar",
        }
    }
}

/// One exponent of the closed-form root list, before grouping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootCandidate<T> {
    pub k: T,
    pub family: Family,
    /// `+1` for the `+(…)` member of the `±` pair.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicialRoot<T> {
    pub k: T,
    pub leading_space: Vec<CVec<T>>,
    /// Family of each vector of `leading_space`.
    pub families: Vec<Family>,
    /// Sign of the `±` member each vector came from (first occurrence).
    pub signs: Vec<i8>,
    pub multiplicity: usize,
    pub log_required: bool,
}

/// Eigen-decomposition of the indicial constant part: `M(κ) = Σ (μ_i − κ²) e_i e_iᴴ`.
#[derive(Debug, Clone)]
pub struct IndicialSystem<T> {
    pub mu: Vec<T>,
    /// Orthonormal eigenvectors.
    pub basis: Vec<CVec<T>>,
    pub families: Vec<Family>,
}

fn vector<T: Real>(family: Family, m: usize) -> CVec<T> {
    let one = re(T::one());
    let mut v = CVec::<T>::zeros(m);
    match family {
        Family::Plus => {
            v[0] = one;
            v[1] = im(-T::one());
        }
        Family::Minus => {
            v[0] = one;
            v[1] = im(T::one());
        }
        Family::Omega => v[2] = one,
        Family::Scalar => v[0] = one,
    }
    v
}

/// Unnormalized leading vector of a family for a block of size `m`.
pub fn family_vector<T: Real>(family: Family, m: usize) -> CVec<T> {
    vector(family, m)
}

fn families(kind: BlockKind) -> &'static [Family] {
    match kind {
        BlockKind::Coupled3 => &[Family::Plus, Family::Minus, Family::Omega],
        BlockKind::Coupled2 => &[Family::Plus, Family::Minus],
        BlockKind::Scalar => &[Family::Scalar],
    }
}

fn family_mu<T: Real>(family: Family, pb: T) -> T {
    match family {
        Family::Plus => (pb + T::one()) * (pb + T::one()),
        Family::Minus => (pb - T::one()) * (pb - T::one()),
        Family::Omega | Family::Scalar => pb * pb,
    }
}

fn family_root<T: Real>(family: Family, pb: T) -> T {
    match family {
        Family::Plus => pb + T::one(),
        Family::Minus => pb - T::one(),
        Family::Omega | Family::Scalar => pb,
    }
}

pub fn indicial_system<T: Real>(block: &ModeBlock<T>, beta: T) -> IndicialSystem<T> {
    let pb = int::<T>(block.frequency()) * beta;
    let m = block.size();
    let fams = families(block.kind());
    let basis = fams
        .iter()
        .map(|&f| {
            let v = vector::<T>(f, m);
            let nrm = v.iter().fold(T::zero(), |a, c| a + c.norm_sqr()).sqrt();
            v.map(|c| c / nrm)
        })
        .collect();
    IndicialSystem { mu: fams.iter().map(|&f| family_mu(f, pb)).collect(), basis, families: fams.to_vec() }
}

pub fn indicial_matrix<T: Real>(block: &ModeBlock<T>, beta: T, k: T) -> CMat<T> {
    let pb = int::<T>(block.frequency()) * beta;
    let m = block.size();
    let k2 = k * k;
    let mut out = CMat::<T>::zeros(m, m);
    match block.kind() {
        BlockKind::Scalar => out[(0, 0)] = re(pb * pb - k2),
        _ => {
            let d = re(T::one() + pb * pb - k2);
            out[(0, 0)] = d;
            out[(1, 1)] = d;
            out[(0, 1)] = im(lit::<T>(2.0) * pb);
            out[(1, 0)] = im(-lit::<T>(2.0) * pb);
            if m == 3 {
                out[(2, 2)] = re(pb * pb - k2);
            }
        }
    }
    out
}

/// Closed-form exponent list, one entry per `±` member of each family.
pub fn root_candidates<T: Real>(block: &ModeBlock<T>, beta: T) -> Vec<RootCandidate<T>> {
    let pb = int::<T>(block.frequency()) * beta;
    let mut out = Vec::new();
    for &f in families(block.kind()) {
        let k = family_root(f, pb);
        out.push(RootCandidate { k, family: f, sign: 1 });
        out.push(RootCandidate { k: -k, family: f, sign: -1 });
    }
    out
}

/// Exponents closer than this are treated as one root.
pub fn coincidence_tol<T: Real>(k: T) -> T {
    lit::<T>(1e-9) * (T::one() + k.abs())
}

/// Roots grouped by value, sorted by descending `k`.
///
/// Two coincident members of the same family form a double root with a single
/// leading vector and need a logarithmic second branch; coincident members of
/// different families just span a two-dimensional leading space.
pub fn indicial_roots<T: Real>(block: &ModeBlock<T>, beta: T) -> Vec<IndicialRoot<T>> {
    let m = block.size();
    let mut cands = root_candidates(block, beta);
    cands.sort_by(|a, b| b.k.partial_cmp(&a.k).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<IndicialRoot<T>> = Vec::new();
    for c in cands {
        if let Some(last) = out.last_mut() {
            if (last.k - c.k).abs() <= coincidence_tol(c.k) {
                last.multiplicity += 1;
                if last.families.contains(&c.family) {
                    last.log_required = true;
                } else {
                    last.families.push(c.family);
                    last.signs.push(c.sign);
                    last.leading_space.push(vector(c.family, m));
                }
                continue;
            }
        }
        out.push(IndicialRoot {
            k: c.k,
            leading_space: vec![vector(c.family, m)],
            families: vec![c.family],
            signs: vec![c.sign],
            multiplicity: 1,
            log_required: false,
        });
    }
    out
}

fn det_small<T: Real>(a: &CMat<T>) -> Complex<T> {
    match a.nrows() {
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        3 => {
            a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
                - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
                + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)])
        }
        _ => unreachable!("blocks have at most three components"),
    }
}

/// Determinant of the indicial matrix, used to confirm the closed-form list.
pub fn indicial_determinant<T: Real>(block: &ModeBlock<T>, beta: T, k: T) -> Complex<T> {
    det_small(&indicial_matrix(block, beta, k))
}

/// Largest `|M(k) v₀|` over all roots and leading vectors, relative to `|M(k)|`.
pub fn annihilation_defect<T: Real>(block: &ModeBlock<T>, beta: T, roots: &[IndicialRoot<T>]) -> T {
    let mut worst = T::zero();
    for root in roots {
        let mk = indicial_matrix(block, beta, root.k);
        let scale = T::one() + mk.iter().fold(T::zero(), |a, c| a.max(c.norm()));
        for v in &root.leading_space {
            let r = &mk * v;
            worst = worst.max(r.iter().fold(T::zero(), |a, c| a.max(c.norm())) / scale);
        }
        let det = indicial_determinant(block, beta, root.k).norm() / scale.powi(block.size() as i32);
        worst = worst.max(det);
    }
    worst
}

impl<T: Real> IndicialSystem<T> {
    fn tol(k: T) -> T {
        lit::<T>(1e-9) * (T::one() + k * k)
    }

    /// Indices of eigendirections on which `M(κ)` vanishes.
    pub fn kernel(&self, kappa: T) -> Vec<usize> {
        (0..self.mu.len()).filter(|&i| (self.mu[i] - kappa * kappa).abs() <= Self::tol(kappa)).collect()
    }

    /// Solves `M(κ) x = y` on the range, returning `(x, kernel part of y)`.
    pub fn solve(&self, kappa: T, y: &CVec<T>) -> (CVec<T>, CVec<T>) {
        let m = y.len();
        let mut x = CVec::<T>::zeros(m);
        let mut ker = CVec::<T>::zeros(m);
        for (i, e) in self.basis.iter().enumerate() {
            let c = e.iter().zip(y.iter()).fold(re(T::zero()), |acc, (a, b)| acc + a.conj() * b);
            let d = self.mu[i] - kappa * kappa;
            if d.abs() <= Self::tol(kappa) {
                ker += e * c;
            } else {
                x += e * (c / d);
            }
        }
        (x, ker)
    }
}

pub(crate) fn cnorm<T: Real>(v: &CVec<T>) -> T {
    v.iter().fold(T::zero(), |a, c| a + c.norm_sqr()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c3(p: i64) -> ModeBlock<f64> {
        ModeBlock::Coupled3 { lambda_prime: 1.0, p }
    }

    fn ks(roots: &[IndicialRoot<f64>]) -> Vec<f64> {
        roots.iter().map(|r| r.k).collect()
    }

    #[test]
    fn scalar_matrix_vanishes_on_root() {
        let b = ModeBlock::Scalar { mu_prime: 0.0, p_prime: 1 };
        assert_eq!(indicial_matrix(&b, 2.0, 2.0)[(0, 0)].norm(), 0.0);
    }

    #[test]
    fn coupled_matrix_examples() {
        let m = indicial_matrix(&c3(1), 2.0, 3.0);
        let v = family_vector::<f64>(Family::Plus, 3);
        assert!(cnorm(&(m * v)) == 0.0);
        let b = ModeBlock::<f64>::Coupled2 { p: 1 };
        let m = indicial_matrix(&b, 2.0, 0.0);
        assert_eq!(m[(0, 0)].re, 5.0);
        assert_eq!(m[(0, 1)].im, 4.0);
        assert_eq!(m[(1, 0)].im, -4.0);
        assert!((indicial_determinant(&b, 2.0, 0.0).re - 9.0).abs() < 1e-14);
    }

    #[test]
    fn generic_root_table() {
        let roots = indicial_roots(&c3(1), 2.0);
        assert_eq!(ks(&roots), vec![3.0, 2.0, 1.0, -1.0, -2.0, -3.0]);
        assert!(roots.iter().all(|r| !r.log_required && r.multiplicity == 1));
        assert_eq!(roots[0].families, vec![Family::Plus]);
        assert_eq!(roots[1].families, vec![Family::Omega]);
        assert_eq!(roots[2].families, vec![Family::Minus]);
    }

    #[test]
    fn zero_frequency_roots() {
        let roots = indicial_roots(&c3(0), 2.0);
        assert_eq!(ks(&roots), vec![1.0, 0.0, -1.0]);
        assert_eq!(roots[0].leading_space.len(), 2);
        assert!(roots[1].log_required && roots[1].multiplicity == 2);
        assert_eq!(roots[1].families, vec![Family::Omega]);
        assert_eq!(roots[2].leading_space.len(), 2);
        // Without the ω component the double root at 0 disappears.
        let r2 = indicial_roots(&ModeBlock::<f64>::Coupled2 { p: 0 }, 2.0);
        assert!(r2.iter().all(|r| !r.log_required));
    }

    #[test]
    fn half_integer_coincidence_needs_no_log() {
        let roots = indicial_roots(&c3(1), 0.5);
        let half = roots.iter().find(|r| (r.k - 0.5).abs() < 1e-12).unwrap();
        assert_eq!(half.leading_space.len(), 2);
        assert!(!half.log_required);
        assert!(roots.iter().all(|r| !r.log_required));
    }

    #[test]
    fn unit_frequency_log() {
        for (p, beta) in [(1i64, 1.0), (-1, 1.0), (2, 0.5)] {
            let roots = indicial_roots(&ModeBlock::<f64>::Coupled2 { p }, beta);
            let zero = roots.iter().find(|r| r.k.abs() < 1e-12).unwrap();
            assert!(zero.log_required);
        }
        let s = indicial_roots(&ModeBlock::<f64>::Scalar { mu_prime: 0.0, p_prime: 0 }, 1.7);
        assert_eq!(s.len(), 1);
        assert!(s[0].log_required && s[0].multiplicity == 2);
    }

    fn arb_block() -> impl Strategy<Value = ModeBlock<f64>> {
        prop_oneof![
            (0.1f64..9.0, -3i64..=3).prop_map(|(l, p)| ModeBlock::Coupled3 { lambda_prime: l, p }),
            (-3i64..=3).prop_map(|p| ModeBlock::Coupled2 { p }),
            (0.0f64..9.0, -3i64..=3).prop_map(|(m, p)| ModeBlock::Scalar { mu_prime: m, p_prime: p }),
        ]
    }

    proptest! {
        #[test]
        fn roots_annihilate(block in arb_block(), beta in prop_oneof![Just(0.5), Just(1.0), 0.2f64..6.0]) {
            let roots = indicial_roots(&block, beta);
            prop_assert!(annihilation_defect(&block, beta, &roots) <= 1e-12);
            let total: usize = roots.iter().map(|r| r.multiplicity).sum();
            prop_assert_eq!(total, 2 * block.size());
            for w in roots.windows(2) {
                prop_assert!(w[0].k > w[1].k);
            }
        }

        #[test]
        fn roots_symmetric(block in arb_block(), beta in 0.2f64..6.0) {
            let roots = indicial_roots(&block, beta);
            for r in &roots {
                let mirror = roots.iter().find(|s| (s.k + r.k).abs() <= 1e-9 * (1.0 + r.k.abs()));
                prop_assert!(mirror.map(|s| s.multiplicity) == Some(r.multiplicity));
            }
        }

        #[test]
        fn system_reconstructs_matrix(block in arb_block(), beta in 0.2f64..6.0, k in -5.0f64..5.0) {
            let sys = indicial_system(&block, beta);
            let m = block.size();
            let mut rebuilt = CMat::<f64>::zeros(m, m);
            for (i, e) in sys.basis.iter().enumerate() {
                rebuilt += e * e.adjoint() * Complex::new(sys.mu[i] - k * k, 0.0);
            }
            let direct = indicial_matrix(&block, beta, k);
            prop_assert!((rebuilt - direct).norm() <= 1e-12 * (1.0 + k * k + 50.0));
        }
    }
}
