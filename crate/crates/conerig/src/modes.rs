//! Frequency blocks of the 1-form decomposition and their radial operators.
//!
//! A coupled block carries the components `(f, g, ω)` of
//! `u = f ψ e^r + g ψ e^θ + ω φ` where `ψ = e^{ipβθ}·ψ_Σ` and `φ` is the unit
//! form along `d_Σ ψ_Σ`, oriented so the f/ω coupling reads `+2 tanh r √λ′ / cosh r`.

use crate::error::{Error, Result};
use crate::geometry::{two_pi, ConeGeometry};
use crate::scalar::{im, int, lit, re, Real};
use crate::series::{expansion, Expansion, TruncatedSeries, DEFAULT_ORDER};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeBlock<T> {
    Coupled3 { lambda_prime: T, p: i64 },
    Coupled2 { p: i64 },
    Scalar { mu_prime: T, p_prime: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockKind {
    Coupled3,
    Coupled2,
    Scalar,
}

impl BlockKind {
    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Coupled3 => "coupled3",
            BlockKind::Coupled2 => "coupled2",
            BlockKind::Scalar => "scalar",
        }
    }
}

impl std::str::FromStr for BlockKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled3" => Ok(BlockKind::Coupled3),
            "coupled2" => Ok(BlockKind::Coupled2),
            "scalar" => Ok(BlockKind::Scalar),
            other => Err(Error::Validation(format!("unknown block kind '{other}'"))),
        }
    }
}

impl<T: Real> ModeBlock<T> {
    pub fn kind(&self) -> BlockKind {
        match self {
            ModeBlock::Coupled3 { .. } => BlockKind::Coupled3,
            ModeBlock::Coupled2 { .. } => BlockKind::Coupled2,
            ModeBlock::Scalar { .. } => BlockKind::Scalar,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            ModeBlock::Coupled3 { .. } => 3,
            ModeBlock::Coupled2 { .. } => 2,
            ModeBlock::Scalar { .. } => 1,
        }
    }

    /// Angular frequency index (`p` or `p′`).
    pub fn frequency(&self) -> i64 {
        match *self {
            ModeBlock::Coupled3 { p, .. } | ModeBlock::Coupled2 { p } => p,
            ModeBlock::Scalar { p_prime, .. } => p_prime,
        }
    }

    /// `λ′` for coupled blocks (zero for the 2-component block), `μ′` for scalar ones.
    pub fn eigenvalue(&self) -> T {
        match *self {
            ModeBlock::Coupled3 { lambda_prime, .. } => lambda_prime,
            ModeBlock::Coupled2 { .. } => T::zero(),
            ModeBlock::Scalar { mu_prime, .. } => mu_prime,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModeBlock::Coupled3 { lambda_prime, .. } if !(lambda_prime > T::zero() && lambda_prime.is_finite()) => {
                Err(Error::Validation(format!("coupled3 block needs lambda_prime > 0, got {lambda_prime}")))
            }
            ModeBlock::Scalar { mu_prime, .. } if !(mu_prime >= T::zero() && mu_prime.is_finite()) => {
                Err(Error::Validation(format!("scalar block needs mu_prime >= 0, got {mu_prime}")))
            }
            _ => Ok(()),
        }
    }

    /// Deterministic ordering key: kind, eigenvalue, frequency.
    pub fn sort_key(&self) -> (BlockKind, T, i64) {
        (self.kind(), self.eigenvalue(), self.frequency())
    }

    pub fn label(&self) -> String {
        match *self {
            ModeBlock::Coupled3 { lambda_prime, p } => format!("coupled3(lambda'={lambda_prime}, p={p})"),
            ModeBlock::Coupled2 { p } => format!("coupled2(p={p})"),
            ModeBlock::Scalar { mu_prime, p_prime } => format!("scalar(mu'={mu_prime}, p'={p_prime})"),
        }
    }
}

/// Sorts blocks by [`ModeBlock::sort_key`].
pub fn sort_blocks<T: Real>(blocks: &mut [ModeBlock<T>]) {
    blocks.sort_by(|a, b| {
        let (ka, ea, pa) = a.sort_key();
        let (kb, eb, pb) = b.sort_key();
        ka.cmp(&kb).then(ea.partial_cmp(&eb).unwrap_or(std::cmp::Ordering::Equal)).then(pa.cmp(&pb))
    });
}

pub fn circle_cross_section_modes<T: Real>(geom: &ConeGeometry<T>, p_max: u32, q_max: u32) -> Result<Vec<ModeBlock<T>>> {
    let length = match (geom.n(), geom.circle_length()) {
        (3, Some(l)) => l,
        _ => return Err(Error::Validation("circle modes need an n = 3 geometry with a circle cross-section".into())),
    };
    let (pm, qm) = (p_max as i64, q_max as i64);
    let mut out = Vec::new();
    for p in -pm..=pm {
        for q in -qm..=qm {
            if q == 0 {
                out.push(ModeBlock::Coupled2 { p });
                out.push(ModeBlock::Scalar { mu_prime: T::zero(), p_prime: p });
            } else {
                let k = two_pi::<T>() * int::<T>(q) / length;
                out.push(ModeBlock::Coupled3 { lambda_prime: k * k, p });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    kind: String,
    lambda_prime: Option<f64>,
    mu_prime: Option<f64>,
    p: Option<i64>,
    p_prime: Option<i64>,
}

/// Parses eigendata (one JSON object per line). Returns the blocks and warnings.
pub fn parse_cross_section_modes<T: Real>(text: &str) -> Result<(Vec<ModeBlock<T>>, Vec<String>)> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record =
            serde_json::from_str(line).map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
        let need = |v: Option<f64>, field: &str| {
            v.ok_or_else(|| Error::Parse { line: line_no, msg: format!("missing field '{field}'") })
        };
        let need_int = |v: Option<i64>, field: &str| {
            v.ok_or_else(|| Error::Parse { line: line_no, msg: format!("missing field '{field}'") })
        };
        let cvt = |x: f64| T::from_f64(x).ok_or_else(|| Error::Parse { line: line_no, msg: "value out of range".into() });
        let block = match rec.kind.as_str() {
            "coupled3" => ModeBlock::Coupled3 { lambda_prime: cvt(need(rec.lambda_prime, "lambda_prime")?)?, p: need_int(rec.p, "p")? },
            "coupled2" => ModeBlock::Coupled2 { p: need_int(rec.p, "p")? },
            "scalar" => ModeBlock::Scalar { mu_prime: cvt(need(rec.mu_prime, "mu_prime")?)?, p_prime: need_int(rec.p_prime, "p_prime")? },
            other => return Err(Error::Parse { line: line_no, msg: format!("unknown kind '{other}'") }),
        };
        block.validate().map_err(|e| match e {
            Error::Validation(m) => Error::Validation(format!("line {line_no}: {m}")),
            other => other,
        })?;
        out.push(block);
    }
    let mut warnings = Vec::new();
    if out.is_empty() {
        let w = "eigendata file contains no records".to_string();
        log::warn!("{w}");
        warnings.push(w);
    }
    Ok((out, warnings))
}

pub fn load_cross_section_modes<T: Real>(path: &Path) -> Result<(Vec<ModeBlock<T>>, Vec<String>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_cross_section_modes(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    NablaStarNabla,
    L,
}

/// `−u″ − P(r) u′ + Q(r) u` for one block, optionally shifted by `(n−1)`.
#[derive(Debug, Clone)]
pub struct RadialOperator<T> {
    block: ModeBlock<T>,
    n: usize,
    beta: T,
    form: Form,
    order: usize,
    p_series: TruncatedSeries<T>,
    q_series: Vec<TruncatedSeries<T>>,
}

pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVec<T> = DVector<Complex<T>>;

pub fn radial_operator<T: Real>(geom: &ConeGeometry<T>, block: ModeBlock<T>, form: Form) -> Result<RadialOperator<T>> {
    RadialOperator::new(geom.n(), geom.beta(), block, form, DEFAULT_ORDER)
}

impl<T: Real> RadialOperator<T> {
    pub fn new(n: usize, beta: T, block: ModeBlock<T>, form: Form, order: usize) -> Result<Self> {
        block.validate()?;
        if n < 3 {
            return Err(Error::Validation("n must be at least 3".into()));
        }
        let (q_series, p_series) = Self::build_series(n, beta, &block, form, order)?;
        Ok(Self { block, n, beta, form, order, p_series, q_series })
    }

    fn build_series(
        n: usize,
        beta: T,
        block: &ModeBlock<T>,
        form: Form,
        order: usize,
    ) -> Result<(Vec<TruncatedSeries<T>>, TruncatedSeries<T>)> {
        let e = |w| expansion::<T>(w, order);
        let (coth, tanh, csch2, sech2) = (e(Expansion::Coth)?, e(Expansion::Tanh)?, e(Expansion::Csch2)?, e(Expansion::Sech2)?);
        let nm2 = int::<T>(n as i64 - 2);
        let p_series = coth.add(&tanh.scale(re(nm2)));
        let coth2 = coth.mul(&coth);
        let tanh2 = tanh.mul(&tanh);
        let pb = int::<T>(block.frequency()) * beta;
        let ang = csch2.scale(re(pb * pb));
        let shift = match form {
            Form::NablaStarNabla => T::zero(),
            Form::L => int::<T>(n as i64 - 1),
        };
        let konst = |c: T| TruncatedSeries::constant(re(c), order);
        let zero = TruncatedSeries::zero(0, order);
        let two = lit::<T>(2.0);
        let fg = coth.mul(&e(Expansion::InvSinh)?).scale(im(two * pb));
        let lam = block.eigenvalue();
        let q = match block.kind() {
            BlockKind::Coupled3 | BlockKind::Coupled2 => {
                let fdiag = coth2.add(&tanh2.scale(re(nm2))).add(&ang).add(&sech2.scale(re(lam))).add(&konst(shift));
                let gdiag = coth2.add(&ang).add(&sech2.scale(re(lam))).add(&konst(shift));
                let gf = fg.scale(re(-T::one()));
                if block.kind() == BlockKind::Coupled2 {
                    vec![fdiag, fg, gf, gdiag]
                } else {
                    let fw = e(Expansion::TanhSech)?.scale(re(two * lam.sqrt()));
                    let wdiag = tanh2.add(&ang).add(&sech2.scale(re(lam + int::<T>(n as i64 - 3)))).add(&konst(shift));
                    vec![fdiag, fg, fw.clone(), gf, gdiag, zero.clone(), fw, zero, wdiag]
                }
            }
            BlockKind::Scalar => vec![tanh2.add(&ang).add(&sech2.scale(re(lam))).add(&konst(shift))],
        };
        Ok((q, p_series))
    }

    pub fn block(&self) -> ModeBlock<T> {
        self.block
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn beta(&self) -> T {
        self.beta
    }
    pub fn form(&self) -> Form {
        self.form
    }
    pub fn size(&self) -> usize {
        self.block.size()
    }
    pub fn series_order(&self) -> usize {
        self.order
    }
    pub fn include_shift(&self) -> bool {
        self.form == Form::L
    }
    pub fn shift(&self) -> T {
        if self.include_shift() {
            int::<T>(self.n as i64 - 1)
        } else {
            T::zero()
        }
    }

    /// `pβ` (or `p′β`).
    pub fn p_beta(&self) -> T {
        int::<T>(self.block.frequency()) * self.beta
    }

    /// Same operator in the other form.
    pub fn with_form(&self, form: Form) -> Result<Self> {
        Self::new(self.n, self.beta, self.block, form, self.order)
    }

    pub fn p(&self, r: T) -> T {
        r.cosh() / r.sinh() + int::<T>(self.n as i64 - 2) * r.tanh()
    }

    /// Closed-form coefficient matrix, shift included in the L form.
    pub fn q(&self, r: T) -> CMat<T> {
        let (s, c) = (r.sinh(), r.cosh());
        let (coth, tanh) = (c / s, s / c);
        let nm2 = int::<T>(self.n as i64 - 2);
        let pb = self.p_beta();
        let ang = pb * pb / (s * s);
        let lam = self.block.eigenvalue();
        let sech2 = (c * c).recip();
        let shift = self.shift();
        let m = self.size();
        let mut q = CMat::<T>::zeros(m, m);
        match self.block.kind() {
            BlockKind::Scalar => q[(0, 0)] = re(tanh * tanh + ang + lam * sech2 + shift),
            _ => {
                q[(0, 0)] = re(coth * coth + nm2 * tanh * tanh + ang + lam * sech2 + shift);
                q[(1, 1)] = re(coth * coth + ang + lam * sech2 + shift);
                let fg = lit::<T>(2.0) * pb * c / (s * s);
                q[(0, 1)] = im(fg);
                q[(1, 0)] = im(-fg);
                if m == 3 {
                    let fw = lit::<T>(2.0) * tanh * lam.sqrt() / c;
                    q[(0, 2)] = re(fw);
                    q[(2, 0)] = re(fw);
                    q[(2, 2)] = re(tanh * tanh + ang + (lam + int::<T>(self.n as i64 - 3)) * sech2 + shift);
                }
            }
        }
        q
    }

    /// `−u″ − P u′ + Q u` from pointwise data.
    pub fn apply(&self, r: T, u: &CVec<T>, du: &CVec<T>, d2u: &CVec<T>) -> CVec<T> {
        let p = re(self.p(r));
        -d2u - du * p + self.q(r) * u
    }

    pub fn p_series(&self) -> &TruncatedSeries<T> {
        &self.p_series
    }

    /// Series of entry `(i, j)` of Q (shift included in the L form).
    pub fn q_series(&self, i: usize, j: usize) -> &TruncatedSeries<T> {
        &self.q_series[i * self.size() + j]
    }

    /// Coefficient of `r^j` in `r P(r)`.
    pub fn rp_coeff(&self, j: usize) -> Option<T> {
        self.p_series.coeff(j as i32 - 1).map(|c| c.re)
    }

    /// Coefficient matrix of `r^j` in `r² Q(r)`.
    pub fn r2q_coeff(&self, j: usize) -> Option<CMat<T>> {
        let m = self.size();
        let mut out = CMat::<T>::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                out[(a, b)] = self.q_series(a, b).coeff(j as i32 - 2)?;
            }
        }
        Some(out)
    }

    /// Number of consecutive `r P` / `r² Q` coefficients available.
    pub fn recurrence_depth(&self) -> usize {
        let mut top = self.p_series.top() + 1;
        for s in &self.q_series {
            top = top.min(s.top() + 2);
        }
        top.max(0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Angle, CrossSection};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn geom(beta: f64, length: f64) -> ConeGeometry<f64> {
        ConeGeometry::new(3, Angle::Beta(beta), 1.0, CrossSection::Circle { length }).unwrap()
    }

    #[test]
    fn trivial_circle_modes() {
        let g = geom(2.0, 2.0 * PI);
        let b = circle_cross_section_modes(&g, 0, 0).unwrap();
        assert_eq!(b, vec![ModeBlock::Coupled2 { p: 0 }, ModeBlock::Scalar { mu_prime: 0.0, p_prime: 0 }]);
    }

    #[test]
    fn circle_mode_eigenvalues() {
        // Flat torus sinh²a dθ² + cosh²a dz²: e^{2πiqz/ℓ} has λ′ = (2πq/ℓ)².
        let b = circle_cross_section_modes(&geom(2.0, 2.0 * PI), 0, 1).unwrap();
        assert!(b.iter().any(|m| matches!(m, ModeBlock::Coupled3 { lambda_prime, p: 0 } if (lambda_prime - 1.0).abs() < 1e-14)));
        let b = circle_cross_section_modes(&geom(2.0, PI), 1, 1).unwrap();
        assert!(b.iter().any(|m| matches!(m, ModeBlock::Coupled3 { lambda_prime, p: 1 } if (lambda_prime - 4.0).abs() < 1e-13)));
        assert_eq!(b.len(), 3 * (2 + 2));
    }

    #[test]
    fn circle_modes_need_circle() {
        let g = ConeGeometry::<f64>::half_plane(Angle::Beta(2.0), 1.0).unwrap();
        assert!(circle_cross_section_modes(&g, 1, 1).is_err());
    }

    #[test]
    fn eigendata_records() {
        let (b, w) = parse_cross_section_modes::<f64>("{\"kind\":\"coupled3\",\"lambda_prime\":2.5,\"p\":-1}\n").unwrap();
        assert_eq!(b, vec![ModeBlock::Coupled3 { lambda_prime: 2.5, p: -1 }]);
        assert!(w.is_empty());
        let e = parse_cross_section_modes::<f64>("{\"kind\":\"coupled3\",\"lambda_prime\":0.0,\"p\":1}").unwrap_err();
        assert!(matches!(e, Error::Validation(_)));
        let e = parse_cross_section_modes::<f64>("{\"kind\":\"scalar\",\"mu_prime\":-1.0,\"p_prime\":1}").unwrap_err();
        assert!(matches!(e, Error::Validation(_)));
        let e = parse_cross_section_modes::<f64>("{\"kind\":\"coupled2\",\"p\":1}\n{oops").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let (b, w) = parse_cross_section_modes::<f64>("").unwrap();
        assert!(b.is_empty() && w.len() == 1);
    }

    #[test]
    fn scalar_l_form_example() {
        let op = RadialOperator::new(3, 2.0, ModeBlock::Scalar { mu_prime: 0.0, p_prime: 1 }, Form::L, 20).unwrap();
        for r in [0.05f64, 0.3, 0.9] {
            let want = r.tanh().powi(2) + 4.0 / r.sinh().powi(2) + 2.0;
            assert_relative_eq!(op.q(r)[(0, 0)].re, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn coupling_entries() {
        let op = RadialOperator::new(3, 1.5, ModeBlock::Coupled3 { lambda_prime: 2.0, p: 1 }, Form::NablaStarNabla, 20).unwrap();
        let r = 0.4f64;
        let q = op.q(r);
        assert_relative_eq!(q[(0, 2)].re, 2.0 * r.tanh() * 2f64.sqrt() / r.cosh(), epsilon = 1e-14);
        assert_relative_eq!(q[(0, 1)].im, 2.0 * 1.5 / (r.sinh() * r.tanh()), epsilon = 1e-13);
        let op2 = RadialOperator::new(3, 1.5, ModeBlock::Coupled2 { p: 0 }, Form::L, 20).unwrap();
        assert_eq!(op2.q(r)[(0, 1)], Complex::new(0.0, 0.0));
    }

    #[test]
    fn leading_laurent_part_is_indicial_constant() {
        let op = RadialOperator::new(3, 2.0, ModeBlock::Coupled3 { lambda_prime: 3.0, p: 1 }, Form::L, 20).unwrap();
        let q0 = op.r2q_coeff(0).unwrap();
        assert_relative_eq!(q0[(0, 0)].re, 5.0, epsilon = 1e-14);
        assert_relative_eq!(q0[(0, 1)].im, 4.0, epsilon = 1e-14);
        assert_relative_eq!(q0[(2, 2)].re, 4.0, epsilon = 1e-14);
        assert_eq!(q0[(0, 2)], Complex::new(0.0, 0.0));
        assert_relative_eq!(op.rp_coeff(0).unwrap(), 1.0, epsilon = 1e-15);
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
        fn series_matches_closed_form(block in arb_block(), beta in 0.5f64..4.0, n in 3usize..6, l in any::<bool>()) {
            let form = if l { Form::L } else { Form::NablaStarNabla };
            let op = RadialOperator::new(n, beta, block, form, 20).unwrap();
            for r in [1e-2, 5e-2, 1e-1] {
                let q = op.q(r);
                let ps = op.p_series().eval(r).re;
                prop_assert!((ps - op.p(r)).abs() <= 1e-9 * op.p(r).abs());
                for i in 0..op.size() {
                    for j in 0..op.size() {
                        let s = op.q_series(i, j).eval(r);
                        prop_assert!((s - q[(i, j)]).norm() <= 1e-9 * q[(i, j)].norm().max(1.0));
                    }
                }
            }
        }

        #[test]
        fn q_is_hermitian_with_skew_fg(block in arb_block(), beta in 0.5f64..4.0, r in 1e-3f64..2.0) {
            let op = RadialOperator::new(3, beta, block, Form::L, 20).unwrap();
            let q = op.q(r);
            let dev = (&q - q.adjoint()).iter().fold(0.0f64, |m, x| m.max(x.norm()));
            prop_assert!(dev <= 1e-12 * q.norm());
            if op.size() > 1 {
                prop_assert!((q[(0, 1)] + q[(1, 0)]).norm() <= 1e-12 * q[(0, 1)].norm().max(1.0));
                prop_assert!(q[(0, 1)].re == 0.0);
            }
        }

        #[test]
        fn coupled2_is_subblock(p in -3i64..=3, beta in 0.5f64..4.0, r in 1e-3f64..2.0, n in 3usize..6) {
            let a = RadialOperator::new(n, beta, ModeBlock::Coupled2 { p }, Form::L, 20).unwrap().q(r);
            // λ′ = 0 limit of the 3-component block.
            let tiny = 1e-300;
            let b = RadialOperator::new(n, beta, ModeBlock::Coupled3 { lambda_prime: tiny, p }, Form::L, 20).unwrap().q(r);
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((a[(i, j)] - b[(i, j)]).norm() <= 1e-14 * a[(i, j)].norm().max(1.0));
                }
            }
        }
    }
}
