//! Hermitian block-tridiagonal matrices whose off-diagonal blocks are real
//! multiples of the identity, as produced by the three-point radial scheme.

use crate::error::{Error, Result};
use crate::modes::{CMat, CVec};
use num_complex::Complex;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonal {
    m: usize,
    diag: Vec<CMat<f64>>,
    /// `off[i]` multiplies the identity coupling unknowns `i` and `i + 1`.
    off: Vec<f64>,
}

/// Block `LDL*` factorization; `D` blocks are kept with their inverses.
#[derive(Debug, Clone)]
pub struct BlockLdl {
    pivots_inv: Vec<CMat<f64>>,
    off: Vec<f64>,
    negative: usize,
}

fn hermitian_part(a: &CMat<f64>) -> CMat<f64> {
    (a + a.adjoint()) * Complex::from(0.5)
}

impl BlockTridiagonal {
    pub fn new(diag: Vec<CMat<f64>>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty() && off.len() + 1 == diag.len());
        let m = diag[0].nrows();
        Self { m, diag, off }
    }

    pub fn block_size(&self) -> usize {
        self.m
    }
    pub fn blocks(&self) -> usize {
        self.diag.len()
    }
    pub fn diagonal(&self) -> &[CMat<f64>] {
        &self.diag
    }
    pub fn off_diagonal(&self) -> &[f64] {
        &self.off
    }

    /// Largest entry of `A − A*` over all diagonal blocks (off-diagonals are real scalars).
    pub fn hermitian_defect(&self) -> f64 {
        self.diag.iter().map(|d| (d - d.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max)
    }

    pub fn apply(&self, x: &[CVec<f64>]) -> Vec<CVec<f64>> {
        let n = self.blocks();
        (0..n)
            .map(|i| {
                let mut y = &self.diag[i] * &x[i];
                if i > 0 {
                    y += &x[i - 1] * Complex::from(self.off[i - 1]);
                }
                if i + 1 < n {
                    y += &x[i + 1] * Complex::from(self.off[i]);
                }
                y
            })
            .collect()
    }

    /// Factorizes `A − σ diag(mass) ⊗ I`.
    pub fn factor_shifted(&self, sigma: f64, mass: &[f64]) -> Result<BlockLdl> {
        let n = self.blocks();
        let eye = CMat::<f64>::identity(self.m, self.m);
        let mut pivots_inv = Vec::with_capacity(n);
        let mut negative = 0;
        let mut prev_inv: Option<CMat<f64>> = None;
        for i in 0..n {
            let mut d = &self.diag[i] - &eye * Complex::from(sigma * mass[i]);
            if let Some(pinv) = &prev_inv {
                let b = self.off[i - 1];
                d -= pinv * Complex::from(b * b);
            }
            let d = hermitian_part(&d);
            negative += d.clone().symmetric_eigenvalues().iter().filter(|&&e| e < 0.0).count();
            let inv = d
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Inconsistency(format!("singular pivot block {i} at shift {sigma}")))?;
            let inv = hermitian_part(&inv);
            pivots_inv.push(inv.clone());
            prev_inv = Some(inv);
        }
        Ok(BlockLdl { pivots_inv, off: self.off.clone(), negative })
    }

    pub fn factor(&self) -> Result<BlockLdl> {
        self.factor_shifted(0.0, &vec![0.0; self.blocks()])
    }

    /// Dense copy, for small oracles.
    pub fn to_dense(&self) -> CMat<f64> {
        let (n, m) = (self.blocks(), self.m);
        let mut a = CMat::<f64>::zeros(n * m, n * m);
        for i in 0..n {
            a.view_mut((i * m, i * m), (m, m)).copy_from(&self.diag[i]);
            if i + 1 < n {
                for c in 0..m {
                    a[(i * m + c, (i + 1) * m + c)] = Complex::from(self.off[i]);
                    a[((i + 1) * m + c, i * m + c)] = Complex::from(self.off[i]);
                }
            }
        }
        a
    }
}

impl BlockLdl {
    /// Number of negative eigenvalues of the factorized matrix (Sylvester inertia).
    pub fn negative_count(&self) -> usize {
        self.negative
    }

    pub fn solve(&self, f: &[CVec<f64>]) -> Vec<CVec<f64>> {
        let n = self.pivots_inv.len();
        let mut z: Vec<CVec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut zi = f[i].clone();
            if i > 0 {
                zi -= &self.pivots_inv[i - 1] * &z[i - 1] * Complex::from(self.off[i - 1]);
            }
            z.push(zi);
        }
        let mut u = vec![CVec::<f64>::zeros(0); n];
        for i in (0..n).rev() {
            let mut rhs = z[i].clone();
            if i + 1 < n {
                rhs -= &u[i + 1] * Complex::from(self.off[i]);
            }
            u[i] = &self.pivots_inv[i] * rhs;
        }
        u
    }
}
