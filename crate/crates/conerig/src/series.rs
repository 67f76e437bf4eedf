//! Truncated Laurent series `Σ_{m=0}^{N} c_m r^{lead+m}` with complex coefficients.

use crate::error::{Error, Result};
use crate::scalar::{int, Real};
use num_complex::Complex;
use std::str::FromStr;

pub const DEFAULT_ORDER: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<T> {
    lead: i32,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> TruncatedSeries<T> {
    /// Builds a series and strips exact leading zeros (the known range is kept).
    pub fn new(lead: i32, coeffs: Vec<Complex<T>>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least one coefficient");
        let mut s = Self { lead, coeffs };
        s.normalize();
        s
    }

    pub fn from_real(lead: i32, coeffs: &[T]) -> Self {
        Self::new(lead, coeffs.iter().map(|&c| Complex::new(c, T::zero())).collect())
    }

    /// The zero series known on powers `lead..=lead+order`.
    pub fn zero(lead: i32, order: usize) -> Self {
        Self { lead, coeffs: vec![Complex::new(T::zero(), T::zero()); order + 1] }
    }

    pub fn monomial(power: i32, c: Complex<T>, order: usize) -> Self {
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); order + 1];
        coeffs[0] = c;
        Self::new(power, coeffs)
    }

    pub fn constant(c: Complex<T>, order: usize) -> Self {
        Self::monomial(0, c, order)
    }

    fn normalize(&mut self) {
        let first = self.coeffs.iter().position(|c| *c != Complex::new(T::zero(), T::zero()));
        match first {
            Some(0) | None => {}
            Some(k) => {
                self.coeffs.drain(..k);
                self.lead += k as i32;
            }
        }
    }

    pub fn leading_power(&self) -> i32 {
        self.lead
    }
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }
    /// Highest power whose coefficient is reliable.
    pub fn top(&self) -> i32 {
        self.lead + self.order() as i32
    }
    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coeffs
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == T::zero() && c.im == T::zero())
    }

    /// Coefficient of `r^power`; `None` beyond the truncation.
    pub fn coeff(&self, power: i32) -> Option<Complex<T>> {
        if power > self.top() {
            None
        } else if power < self.lead {
            Some(Complex::new(T::zero(), T::zero()))
        } else {
            Some(self.coeffs[(power - self.lead) as usize])
        }
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    /// First power whose coefficient exceeds `threshold` in modulus.
    pub fn leading_nonzero(&self, threshold: T) -> Option<(i32, Complex<T>)> {
        self.coeffs
            .iter()
            .enumerate()
            .find(|(_, c)| c.norm() > threshold)
            .map(|(m, c)| (self.lead + m as i32, *c))
    }

    pub fn truncate(&self, order: usize) -> Result<Self> {
        if order > self.order() {
            return Err(Error::Domain(format!("cannot extend order {} to {order}", self.order())));
        }
        Ok(Self { lead: self.lead, coeffs: self.coeffs[..=order].to_vec() })
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self::new(self.lead, self.coeffs.iter().map(|x| *x * c).collect())
    }

    /// Multiplies by `r^k`.
    pub fn shift(&self, k: i32) -> Self {
        Self { lead: self.lead + k, coeffs: self.coeffs.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let lead = self.lead.min(other.lead);
        let top = self.top().min(other.top());
        let coeffs = (lead..=top)
            .map(|p| self.coeff(p).unwrap() + other.coeff(p).unwrap())
            .collect();
        Self::new(lead, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex::new(-T::one(), T::zero())))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); order + 1];
        for (i, a) in self.coeffs.iter().take(order + 1).enumerate() {
            for (j, b) in other.coeffs.iter().take(order + 1 - i).enumerate() {
                coeffs[i + j] += *a * *b;
            }
        }
        Self::new(self.lead + other.lead, coeffs)
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Domain("division by an identically zero series".into()));
        }
        let n = self.order();
        let c0 = self.coeffs[0];
        let mut out = vec![Complex::new(T::zero(), T::zero()); n + 1];
        out[0] = c0.inv();
        for m in 1..=n {
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in 1..=m {
                acc += self.coeffs[j] * out[m - j];
            }
            out[m] = -acc / c0;
        }
        Ok(Self::new(-self.lead, out))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn differentiate(&self) -> Result<Self> {
        let coeffs: Vec<_> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| *c * int::<T>((self.lead + m as i32) as i64))
            .collect();
        let s = Self::new(self.lead - 1, coeffs);
        if s.top() < s.lead {
            return Err(Error::Domain("series order underflow".into()));
        }
        Ok(s)
    }

    /// Antiderivative with zero constant; undefined when `r^{-1}` is present.
    pub fn integrate(&self) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (m, c) in self.coeffs.iter().enumerate() {
            let p = self.lead + m as i32 + 1;
            if p == 0 {
                if c.norm() != T::zero() {
                    return Err(Error::Domain("r^-1 has no Laurent antiderivative".into()));
                }
                coeffs.push(*c);
            } else {
                coeffs.push(*c / int::<T>(p as i64));
            }
        }
        Ok(Self::new(self.lead + 1, coeffs))
    }

    pub fn eval(&self, r: T) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for c in self.coeffs.iter().rev() {
            acc = acc * r + *c;
        }
        acc * r.powi(self.lead)
    }

    /// Value of the first derivative at `r`.
    pub fn eval_derivative(&self, r: T) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (m, c) in self.coeffs.iter().enumerate().rev() {
            acc = acc * r + *c * int::<T>((self.lead + m as i32) as i64);
        }
        acc * r.powi(self.lead - 1)
    }

    /// Value of the second derivative at `r`.
    pub fn eval_second_derivative(&self, r: T) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (m, c) in self.coeffs.iter().enumerate().rev() {
            let p = (self.lead + m as i32) as i64;
            acc = acc * r + *c * int::<T>(p * (p - 1));
        }
        acc * r.powi(self.lead - 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Mul,
    Div,
    Differentiate,
}

/// Dispatching entry point; `b` is ignored for differentiation.
pub fn series_arithmetic<T: Real>(a: &TruncatedSeries<T>, b: &TruncatedSeries<T>, op: Op) -> Result<TruncatedSeries<T>> {
    match op {
        Op::Add => Ok(a.add(b)),
        Op::Mul => Ok(a.mul(b)),
        Op::Div => a.div(b),
        Op::Differentiate => a.differentiate(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Expansion {
    Sinh,
    Cosh,
    Coth,
    Tanh,
    Csch2,
    Sech2,
    InvSinh,
    Sech,
    TanhSech,
}

impl Expansion {
    pub const ALL: [Expansion; 9] = [
        Expansion::Sinh,
        Expansion::Cosh,
        Expansion::Coth,
        Expansion::Tanh,
        Expansion::Csch2,
        Expansion::Sech2,
        Expansion::InvSinh,
        Expansion::Sech,
        Expansion::TanhSech,
    ];

    pub fn closed_form<T: Real>(self, r: T) -> T {
        let (s, c) = (r.sinh(), r.cosh());
        match self {
            Expansion::Sinh => s,
            Expansion::Cosh => c,
            Expansion::Coth => c / s,
            Expansion::Tanh => s / c,
            Expansion::Csch2 => (s * s).recip(),
            Expansion::Sech2 => (c * c).recip(),
            Expansion::InvSinh => s.recip(),
            Expansion::Sech => c.recip(),
            Expansion::TanhSech => s / (c * c),
        }
    }
}

impl FromStr for Expansion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sinh" => Expansion::Sinh,
            "cosh" => Expansion::Cosh,
            "coth" => Expansion::Coth,
            "tanh" => Expansion::Tanh,
            "csch2" => Expansion::Csch2,
            "sech2" => Expansion::Sech2,
            "inv_sinh" => Expansion::InvSinh,
            "sech" => Expansion::Sech,
            "tanh_sech" => Expansion::TanhSech,
            other => return Err(Error::Validation(format!("unknown expansion '{other}'"))),
        })
    }
}

fn sinh_cosh<T: Real>(order: usize) -> (TruncatedSeries<T>, TruncatedSeries<T>) {
    // Factorials in T, built incrementally to stay exact as long as T allows.
    let mut fact = vec![T::one(); order + 2];
    for m in 1..order + 2 {
        fact[m] = fact[m - 1] * int::<T>(m as i64);
    }
    let sinh: Vec<T> = (0..=order).map(|m| if m % 2 == 0 { fact[m + 1].recip() } else { T::zero() }).collect();
    let cosh: Vec<T> = (0..=order).map(|m| if m % 2 == 0 { fact[m].recip() } else { T::zero() }).collect();
    (TruncatedSeries::from_real(1, &sinh), TruncatedSeries::from_real(0, &cosh))
}

/// Expansion around `r = 0`, derived from the sinh/cosh series by series division.
pub fn expansion<T: Real>(which: Expansion, order: usize) -> Result<TruncatedSeries<T>> {
    if order < 2 {
        return Err(Error::Validation(format!("expansion order {order} must be at least 2")));
    }
    let (s, c) = sinh_cosh::<T>(order);
    Ok(match which {
        Expansion::Sinh => s,
        Expansion::Cosh => c,
        Expansion::Coth => c.div(&s)?,
        Expansion::Tanh => s.div(&c)?,
        Expansion::Csch2 => s.mul(&s).recip()?,
        Expansion::Sech2 => c.mul(&c).recip()?,
        Expansion::InvSinh => s.recip()?,
        Expansion::Sech => c.recip()?,
        Expansion::TanhSech => s.div(&c.mul(&c))?,
    })
}

pub fn coefficient_expansion<T: Real>(name: &str, order: usize) -> Result<TruncatedSeries<T>> {
    expansion(name.parse()?, order)
}
