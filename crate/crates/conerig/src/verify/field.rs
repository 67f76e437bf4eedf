use super::grid::ChartGrid;
use crate::error::{Error, Result};
use rand::Rng;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valence {
    Function,
    OneForm,
    TwoForm,
    Symmetric,
    ThreeForm,
    /// General covariant tensor of the given rank (first slots are form slots
    /// for bundle-valued forms).
    Tensor(usize),
}

impl Valence {
    pub fn rank(self) -> usize {
        match self {
            Valence::Function => 0,
            Valence::OneForm => 1,
            Valence::TwoForm | Valence::Symmetric => 2,
            Valence::ThreeForm => 3,
            Valence::Tensor(k) => k,
        }
    }

    pub fn of_rank(k: usize) -> Self {
        match k {
            0 => Valence::Function,
            1 => Valence::OneForm,
            k => Valence::Tensor(k),
        }
    }

    pub fn is_form(self) -> bool {
        matches!(self, Valence::Function | Valence::OneForm | Valence::TwoForm | Valence::ThreeForm)
    }
}

pub type Eval = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Lazily evaluated tensor field in orthonormal frame components.
///
/// Components are stored row-major over the frame indices, `n^rank` of them.
#[derive(Clone)]
pub struct TensorField {
    valence: Valence,
    n: usize,
    eval: Eval,
    /// Coordinate box outside of which the field vanishes, if known.
    support: Option<Vec<(f64, f64)>>,
}

impl fmt::Debug for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorField").field("valence", &self.valence).field("n", &self.n).finish_non_exhaustive()
    }
}

impl TensorField {
    pub fn new(valence: Valence, n: usize, eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self { valence, n, eval: Arc::new(eval), support: None }
    }

    pub fn with_support(mut self, support: Vec<(f64, f64)>) -> Self {
        self.support = Some(support);
        self
    }

    /// Identically zero; its support is the empty box list.
    pub fn zero(valence: Valence, n: usize) -> Self {
        let len = n.pow(valence.rank() as u32);
        Self::new(valence, n, move |_| vec![0.0; len]).with_support(Vec::new())
    }

    pub fn metric(n: usize) -> Self {
        Self::new(Valence::Symmetric, n, move |_| {
            let mut g = vec![0.0; n * n];
            for i in 0..n {
                g[i * n + i] = 1.0;
            }
            g
        })
    }

    pub fn valence(&self) -> Valence {
        self.valence
    }

    pub fn rank(&self) -> usize {
        self.valence.rank()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.rank() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn support(&self) -> Option<&[(f64, f64)]> {
        self.support.as_deref()
    }

    pub fn at(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    pub(crate) fn eval_fn(&self) -> Eval {
        self.eval.clone()
    }

    /// Reinterprets the components under another valence tag of the same rank.
    pub fn retag(mut self, valence: Valence) -> Result<Self> {
        if valence.rank() != self.rank() {
            return Err(Error::Validation(format!("cannot retag rank {} as {valence:?}", self.rank())));
        }
        self.valence = valence;
        Ok(self)
    }

    pub fn scale(&self, c: f64) -> Self {
        let f = self.eval.clone();
        Self { valence: self.valence, n: self.n, eval: Arc::new(move |x| f(x).into_iter().map(|v| c * v).collect()), support: self.support.clone() }
    }

    /// `a·self + b·other`; the valence is kept when both agree.
    pub fn combine(&self, a: f64, other: &TensorField, b: f64) -> Result<Self> {
        if self.rank() != other.rank() || self.n != other.n {
            return Err(Error::Validation(format!("cannot combine {:?} with {:?}", self.valence, other.valence)));
        }
        let valence = if self.valence == other.valence { self.valence } else { Valence::of_rank(self.rank()) };
        let (f, g) = (self.eval.clone(), other.eval.clone());
        Ok(Self::new(valence, self.n, move |x| f(x).iter().zip(g(x)).map(|(u, v)| a * u + b * v).collect()))
    }

    pub fn add(&self, other: &TensorField) -> Result<Self> {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &TensorField) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    /// Largest violation of the symmetry its valence tag promises, at `x`.
    pub fn symmetry_defect(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let v = self.at(x);
        let sign = match self.valence {
            Valence::TwoForm => -1.0,
            Valence::Symmetric => 1.0,
            _ => return 0.0,
        };
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((v[i * n + j] - sign * v[j * n + i]).abs());
            }
        }
        worst
    }
}

/// Smooth bump on `(lo, hi)`, `exp(1 − 1/(1 − s²))` in the centered variable.
pub fn bump(t: f64, lo: f64, hi: f64) -> f64 {
    let s = (2.0 * t - lo - hi) / (hi - lo);
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

#[derive(Debug, Clone, Copy)]
struct Term {
    coeff: f64,
    freq: [f64; 3],
    phase: [f64; 3],
}

/// Random smooth field compactly supported inside the grid's annulus.
///
/// Each component is a short sum of a radial bump times low-frequency
/// harmonics in the periodic coordinates; bounded cross-section coordinates
/// get a bump as well. Symmetric and two-form tags are enforced by
/// symmetrizing.
pub fn random_sample<R: Rng + ?Sized>(valence: Valence, grid: &ChartGrid, rng: &mut R) -> TensorField {
    let n = grid.dim();
    let len = n.pow(valence.rank() as u32);
    let (lo, hi) = (grid.lower().to_vec(), grid.upper().to_vec());
    let periodic = grid.periodic().to_vec();
    // Keep the support a margin away from the annulus edges.
    let margin = |i: usize| 0.1 * (hi[i] - lo[i]);
    let support: Vec<(f64, f64)> = (0..n)
        .map(|i| if periodic[i] { (lo[i], hi[i]) } else { (lo[i] + margin(i), hi[i] - margin(i)) })
        .collect();
    let terms: Vec<Vec<Term>> = (0..len)
        .map(|_| {
            (0..2)
                .map(|_| {
                    let mut freq = [0.0; 3];
                    let mut phase = [0.0; 3];
                    for d in 1..n {
                        if periodic[d] {
                            let k = rng.random_range(0..=2) as f64;
                            freq[d - 1] = 2.0 * std::f64::consts::PI * k / (hi[d] - lo[d]);
                        } else {
                            freq[d - 1] = rng.random_range(0.0..2.0);
                        }
                        phase[d - 1] = rng.random_range(0.0..std::f64::consts::TAU);
                    }
                    Term { coeff: rng.random_range(-1.0..1.0), freq, phase }
                })
                .collect()
        })
        .collect();
    let sup = support.clone();
    let raw = move |x: &[f64]| -> Vec<f64> {
        let mut envelope = bump(x[0], sup[0].0, sup[0].1);
        for d in 1..n {
            if !periodic[d] {
                envelope *= bump(x[d], sup[d].0, sup[d].1);
            }
        }
        if envelope == 0.0 {
            return vec![0.0; len];
        }
        terms
            .iter()
            .map(|ts| {
                envelope
                    * ts.iter()
                        .map(|t| {
                            let mut v = t.coeff * (1.0 + 0.5 * (x[0] * 3.0 + t.phase[0]).sin());
                            for d in 1..n {
                                v *= (t.freq[d - 1] * x[d] + t.phase[d - 1]).cos();
                            }
                            v
                        })
                        .sum::<f64>()
            })
            .collect()
    };
    let sign = match valence {
        Valence::Symmetric => Some(1.0),
        Valence::TwoForm => Some(-1.0),
        _ => None,
    };
    let field = match sign {
        None => TensorField::new(valence, n, raw),
        Some(s) => TensorField::new(valence, n, move |x| {
            let v = raw(x);
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = 0.5 * (v[i * n + j] + s * v[j * n + i]);
                }
            }
            out
        }),
    };
    field.with_support(support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Angle, ConeGeometry, CrossSection};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> ChartGrid {
        let g = ConeGeometry::new(3, Angle::Beta(2.0), 1.0, CrossSection::Circle { length: 2.0 * std::f64::consts::PI }).unwrap();
        ChartGrid::new(&g, (0.2, 0.9), (0.0, 0.0), &[16, 8, 8]).unwrap()
    }

    #[test]
    fn samples_respect_valence_and_support() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_sample(Valence::Symmetric, &g, &mut rng);
        let w = random_sample(Valence::TwoForm, &g, &mut rng);
        for x in [[0.5, 0.3, 1.0], [0.7, 2.0, 5.0]] {
            assert_eq!(h.symmetry_defect(&x), 0.0);
            assert_eq!(w.symmetry_defect(&x), 0.0);
        }
        assert!(h.at(&[0.25, 0.3, 1.0]).iter().all(|&v| v == 0.0));
        assert!(h.at(&[0.5, 0.3, 1.0]).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn samples_are_reproducible() {
        let g = grid();
        let a = random_sample(Valence::OneForm, &g, &mut ChaCha8Rng::seed_from_u64(11));
        let b = random_sample(Valence::OneForm, &g, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a.at(&[0.55, 1.0, 2.0]), b.at(&[0.55, 1.0, 2.0]));
    }

    #[test]
    fn bump_is_compact() {
        assert_eq!(bump(0.0, 0.0, 1.0), 0.0);
        assert_eq!(bump(0.5, 0.0, 1.0), 1.0);
        assert!(bump(0.99, 0.0, 1.0) > 0.0);
    }
}
