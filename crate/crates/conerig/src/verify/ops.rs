//! Frame-component covariant operators by centered differences.
//!
//! `∇` and everything built on it use the frame connection coefficients. The
//! exterior derivative `d`, the codifferential `δ` on forms and the
//! Laplace–Beltrami operator go through coordinate components instead and never
//! touch `Γ`, so identities mixing the two routes are genuine checks.

use super::field::{Eval, TensorField, Valence};
use super::grid::ChartGrid;
use crate::error::{Error, Result};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovariantOp {
    Nabla,
    NablaStar,
    D,
    Delta,
    DeltaStar,
    DNabla,
    DeltaNabla,
    Trace,
    LaplaceBeltrami,
    Bianchi,
    LinEinstein,
    RoughShifted,
}

impl CovariantOp {
    pub const ALL: [CovariantOp; 12] = [
        CovariantOp::Nabla,
        CovariantOp::NablaStar,
        CovariantOp::D,
        CovariantOp::Delta,
        CovariantOp::DeltaStar,
        CovariantOp::DNabla,
        CovariantOp::DeltaNabla,
        CovariantOp::Trace,
        CovariantOp::LaplaceBeltrami,
        CovariantOp::Bianchi,
        CovariantOp::LinEinstein,
        CovariantOp::RoughShifted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CovariantOp::Nabla => "nabla",
            CovariantOp::NablaStar => "nabla_star",
            CovariantOp::D => "d",
            CovariantOp::Delta => "delta",
            CovariantOp::DeltaStar => "delta_star",
            CovariantOp::DNabla => "d_nabla",
            CovariantOp::DeltaNabla => "delta_nabla",
            CovariantOp::Trace => "trace",
            CovariantOp::LaplaceBeltrami => "laplace_beltrami",
            CovariantOp::Bianchi => "bianchi",
            CovariantOp::LinEinstein => "lin_einstein",
            CovariantOp::RoughShifted => "rough_shifted",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

pub fn covariant_apply(kind: CovariantOp, field: &TensorField, grid: &ChartGrid) -> Result<TensorField> {
    check_dim(field, grid)?;
    match kind {
        CovariantOp::Nabla => Ok(nabla(field, grid)),
        CovariantOp::NablaStar => nabla_star(field, grid),
        CovariantOp::D => ext_d(field, grid),
        CovariantOp::Delta => delta(field, grid),
        CovariantOp::DeltaStar => delta_star(field, grid),
        CovariantOp::DNabla => d_nabla(field, grid),
        CovariantOp::DeltaNabla => nabla_star(field, grid),
        CovariantOp::Trace => trace(field),
        CovariantOp::LaplaceBeltrami => laplace_beltrami(field, grid),
        CovariantOp::Bianchi => bianchi(field, grid),
        CovariantOp::LinEinstein => lin_einstein(field, grid),
        CovariantOp::RoughShifted => rough_shifted(field, grid),
    }
}

fn check_dim(field: &TensorField, grid: &ChartGrid) -> Result<()> {
    if field.n() == grid.dim() {
        Ok(())
    } else {
        Err(Error::Validation(format!("field of dimension {} on a {}-dimensional grid", field.n(), grid.dim())))
    }
}

fn expect(field: &TensorField, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Validation(format!("{what} expected, got {:?}", field.valence())))
    }
}

fn digits(mut flat: usize, n: usize, rank: usize) -> Vec<usize> {
    let mut d = vec![0; rank];
    for slot in d.iter_mut().rev() {
        *slot = flat % n;
        flat /= n;
    }
    d
}

fn flat(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// Centered difference of every component along coordinate `i`.
fn partial(f: &Eval, x: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    f(&xp).into_iter().zip(f(&xm)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

pub fn nabla(field: &TensorField, grid: &ChartGrid) -> TensorField {
    let n = field.n();
    let k = field.rank();
    let len = n.pow(k as u32);
    let f = field.eval_fn();
    let grid = Arc::new(grid.clone());
    TensorField::new(Valence::Tensor(k + 1), n, move |x| {
        let t0 = f(x);
        let s = grid.scales(x);
        let conn = grid.connection(x);
        let mut out = vec![0.0; n * len];
        for i in 0..n {
            let d = partial(&f, x, i, grid.steps()[i]);
            for j in 0..len {
                let idx = digits(j, n, k);
                let mut v = s[i] * d[j];
                for (m, &jm) in idx.iter().enumerate() {
                    let p = n.pow((k - 1 - m) as u32);
                    for l in 0..n {
                        let g = conn.get(i, jm, l);
                        if g != 0.0 {
                            v -= g * t0[j + l * p - jm * p];
                        }
                    }
                }
                out[i * len + j] = v;
            }
        }
        out
    })
}

/// `(∇*T)(X, …) = −Σ (∇_{e_i} T)(e_i, X, …)`.
pub fn nabla_star(field: &TensorField, grid: &ChartGrid) -> Result<TensorField> {
    let k = field.rank();
    expect(field, k >= 1, "tensor of rank >= 1")?;
    let n = field.n();
    let inner = nabla(field, grid).eval_fn();
    let len = n.pow(k as u32 - 1);
    Ok(TensorField::new(Valence::of_rank(k - 1), n, move |x| {
        let g = inner(x);
        (0..len).map(|j| -(0..n).map(|i| g[i * n * len + i * len + j]).sum::<f64>()).collect()
    }))
}

/// `∇*∇`, keeping the valence tag.
pub fn rough_laplacian(field: &TensorField, grid: &ChartGrid) -> Result<TensorField> {
    let d = nabla(field, grid);
    nabla_star(&d, grid)?.retag(field.valence())
}

/// Exterior derivative through coordinate components.
pub fn ext_d(field: &TensorField, grid: &ChartGrid) -> Result<TensorField> {
    expect(field, field.valence().is_form(), "differential form")?;
    let n = field.n();
    let k = field.rank();
    let f = field.eval_fn();
    let g = Arc::new(grid.clone());
    let gc = g.clone();
    let coord: Eval = Arc::new(move |x: &[f64]| {
        let s = gc.scales(x);
        f(x).into_iter()
            .enumerate()
            .map(|(j, v)| v / digits(j, n, k).iter().map(|&i| s[i]).product::<f64>())
            .collect()
    });
    let out_valence = match k {
        0 => Valence::OneForm,
        1 => Valence::TwoForm,
        2 => Valence::ThreeForm,
        _ => Valence::Tensor(k + 1),
    };
    let out_len = n.pow(k as u32 + 1);
    Ok(TensorField::new(out_valence, n, move |x| {
        let s = g.scales(x);
        let d: Vec<Vec<f64>> = (0..n).map(|i| partial(&coord, x, i, g.steps()[i])).collect();
        (0..out_len)
            .map(|j| {
                let idx = digits(j, n, k + 1);
                let mut v = 0.0;
                for m in 0..=k {
                    let rest: Vec<usize> = idx.iter().enumerate().filter(|&(q, _)| q != m).map(|(_, &i)| i).collect();
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    v += sign * d[idx[m]][flat(&rest, n)];
                }
                v * idx.iter().map(|&i| s[i]).product::<f64>()
            })
            .collect()
    }))
}

/// Codifferential of a form through the coordinate divergence
/// `(δω)^J = −|g|^{−1/2} ∂_i(|g|^{1/2} ω^{iJ})`.
fn coordinate_delta(field: &TensorField, grid: &ChartGrid) -> TensorField {
    let n = field.n();
    let k = field.rank();
    let f = field.eval_fn();
    let g = Arc::new(grid.clone());
    let gc = g.clone();
    let densitized: Eval = Arc::new(move |x: &[f64]| {
        let s = gc.scales(x);
        let w = gc.sqrt_det(x);
        f(x).into_iter()
            .enumerate()
            .map(|(j, v)| w * v * digits(j, n, k).iter().map(|&i| s[i]).product::<f64>())
            .collect()
    });
    let out_len = n.pow(k as u32 - 1);
    TensorField::new(Valence::of_rank(k - 1), n, move |x| {
        let s = g.scales(x);
        let w = g.sqrt_det(x);
        let d: Vec<Vec<f64>> = (0..n).map(|i| partial(&densitized, x, i, g.steps()[i])).collect();
        (0..out_len)
            .map(|j| {
                let div: f64 = (0..n).map(|i| d[i][i * out_len + j]).sum();
                -div / w / digits(j, n, k - 1).iter().map(|&i| s[i]).product::<f64>()
            })
            .collect()
    })
}

/// `δ`: coordinate codifferential on forms, `∇*` on symmetric tensors.
pub fn delta(field: &TensorField, grid: &ChartGrid) -> Result<TensorField> {
    match field.valence() {
        Valence::OneForm => Ok(coordinate_delta(field, grid)),
        Valence::TwoForm => coordinate_delta(field, grid).retag(Valence::OneForm),
        Valence::ThreeForm => coordinate_delta(field, grid).retag(Valence::TwoForm),
        Valence::Symmetric => nabla_star(field, grid),
        _ => Err(Error::Validation(format!("delta needs a form or symmetric tensor, got {:?}", field.valence()))),
    }
}

/// `(δ*α)(x, y) = ½((∇_x α)(y) + (∇_y α)(x))`.
pub fn delta_star(field: &TensorField, grid: &ChartGrid) -> Result<TensorField> {
    expect(field, field.valence() == Valence::OneForm, "1-form")?;
    let n = field.n();
    let g = nabla(field, grid).eval_fn();
    Ok(TensorField::new(Valence::Symmetric, n, move |x| {
        let v = g(x);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = 0.5 * (v[i * n + j] + v[j * n + i]);
            }
        }
        out
    }))
}

/// Exterior covariant derivative of a `T*M`-valued `p`-form stored with the
/// value slot last (rank `p + 1`).
pub fn d_nabla(field: &TensorField, grid: &ChartGrid) -> Result<TensorField> {
    let rank = field.rank();
    expect(field, rank >= 1, "bundle-valued form of rank >= 1")?;
    let n = field.n();
    let p = rank - 1;
    let g = nabla(field, grid).eval_fn();
    let out_len = n.pow(rank as u32 + 1);
    Ok(TensorField::new(Valence::Tensor(rank + 1), n, move |x| {
        let v = g(x);
        (0..out_len)
            .map(|j| {
                let idx = digits(j, n, rank + 1);
                let (form, value) = idx.split_at(p + 1);
                (0..=p)
                    .map(|m| {
                        let mut arg = vec![form[m]];
                        arg.extend(form.iter().enumerate().filter(|&(q, _)| q != m).map(|(_, &i)| i));
                        arg.push(value[0]);
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        sign * v[flat(&arg, n)]
                    })
                    .sum()
            })
            .collect()
    }))
}

pub fn trace(field: &TensorField) -> Result<TensorField> {
    expect(field, field.rank() == 2, "2-tensor")?;
    let n = field.n();
    let f = field.eval_fn();
    Ok(TensorField::new(Valence::Function, n, move |x| {
        let v = f(x);
        vec![(0..n).map(|i| v[i * n + i]).sum()]
    }))
}

/// `Δf = −|g|^{−1/2} ∂_i(|g|^{1/2} g^{ij} ∂_j f)`, built as coordinate `δ d f`.
pub fn laplace_beltrami(field: &TensorField, grid: &ChartGrid) -> Result<TensorField> {
    expect(field, field.valence() == Valence::Function, "function")?;
    Ok(coordinate_delta(&ext_d(field, grid)?, grid))
}

/// `R̊h = h − (tr h) g` for the hyperbolic metric.
pub fn curvature_term(field: &TensorField) -> Result<TensorField> {
    expect(field, field.rank() == 2, "2-tensor")?;
    let n = field.n();
    let f = field.eval_fn();
    Ok(TensorField::new(field.valence(), n, move |x| {
        let mut v = f(x);
        let tr: f64 = (0..n).map(|i| v[i * n + i]).sum();
        for i in 0..n {
            v[i * n + i] -= tr;
        }
        v
    }))
}

/// `β(h) = δh + ½ d tr h`.
pub fn bianchi(field: &TensorField, grid: &ChartGrid) -> Result<TensorField> {
    expect(field, field.valence() == Valence::Symmetric, "symmetric 2-tensor")?;
    let dtr = ext_d(&trace(field)?, grid)?;
    nabla_star(field, grid)?.combine(1.0, &dtr, 0.5)
}

/// `E′(h) = ∇*∇h − 2R̊h − δ*(2δh + d tr h)`.
pub fn lin_einstein(field: &TensorField, grid: &ChartGrid) -> Result<TensorField> {
    expect(field, field.valence() == Valence::Symmetric, "symmetric 2-tensor")?;
    let gauge = nabla_star(field, grid)?.combine(2.0, &ext_d(&trace(field)?, grid)?, 1.0)?;
    let rough = rough_laplacian(field, grid)?;
    rough.combine(1.0, &curvature_term(field)?, -2.0)?.sub(&delta_star(&gauge.retag(Valence::OneForm)?, grid)?)
}

/// `L = ∇*∇ + (n − 1)`.
pub fn rough_shifted(field: &TensorField, grid: &ChartGrid) -> Result<TensorField> {
    let shift = (field.n() - 1) as f64;
    rough_laplacian(field, grid)?.combine(1.0, field, shift)
}
