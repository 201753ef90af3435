//! Truncated bivariate Taylor jets.
//!
//! A [`Jet2`] of degree `d` stores the true Taylor coefficients
//! `c[i][j] = ∂₁^i ∂₂^j f / (i! j!)` of a field at a base point for `i + j ≤ d`.
//! Arithmetic keeps the degree; only [`Jet2::deriv`] and [`Jet2::truncate`]
//! change it, and they say so in their signatures.

use crate::error::{Error, Result};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Default jet degree: ∂ₓ⁵ of a shift derivative plus one guard order.
pub const DEFAULT_DEGREE: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    deg: usize,
    c: Vec<f64>,
}

#[inline]
fn idx(i: usize, j: usize) -> usize {
    let n = i + j;
    n * (n + 1) / 2 + j
}

#[inline]
fn n_coeffs(deg: usize) -> usize {
    (deg + 1) * (deg + 2) / 2
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Outer functions available for composition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outer {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Atan,
    Exp,
    Sqrt,
    Powi(i32),
}

impl Jet2 {
    pub fn zero(deg: usize) -> Self {
        Jet2 { deg, c: vec![0.0; n_coeffs(deg)] }
    }

    pub fn constant(value: f64, deg: usize) -> Self {
        let mut j = Self::zero(deg);
        j.c[0] = value;
        j
    }

    /// The coordinate `y_k = at + h_k` (k = 0 for y₁, 1 for y₂).
    pub fn variable(k: usize, at: f64, deg: usize) -> Self {
        assert!(k < 2, "Jet2 has two variables");
        let mut j = Self::constant(at, deg);
        if deg > 0 {
            if k == 0 {
                j.c[idx(1, 0)] = 1.0;
            } else {
                j.c[idx(0, 1)] = 1.0;
            }
        }
        j
    }

    /// Build from a coefficient function `c(i, j)`.
    pub fn from_fn(deg: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut j = Self::zero(deg);
        for n in 0..=deg {
            for b in 0..=n {
                j.c[idx(n - b, b)] = f(n - b, b);
            }
        }
        j
    }

    pub fn deg(&self) -> usize {
        self.deg
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient `c[i][j]`; zero beyond the degree.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + j > self.deg {
            0.0
        } else {
            self.c[idx(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i + j <= self.deg, "coefficient ({i},{j}) beyond degree {}", self.deg);
        self.c[idx(i, j)] = v;
    }

    /// Raw partial derivative `∂₁^i ∂₂^j f`.
    pub fn partial(&self, i: usize, j: usize) -> f64 {
        self.get(i, j) * factorial(i) * factorial(j)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, s: f64) -> Self {
        Jet2 { deg: self.deg, c: self.c.iter().map(|v| v * s).collect() }
    }

    pub fn add_const(&self, s: f64) -> Self {
        let mut j = self.clone();
        j.c[0] += s;
        j
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.deg != other.deg {
            Err(Error::DegreeMismatch(self.deg, other.deg))
        } else {
            Ok(())
        }
    }

    fn mul_unchecked(&self, b: &Self) -> Self {
        let d = self.deg;
        let mut out = Self::zero(d);
        for n in 0..=d {
            for j in 0..=n {
                let i = n - j;
                let mut s = 0.0;
                for p in 0..=i {
                    for q in 0..=j {
                        s += self.c[idx(p, q)] * b.c[idx(i - p, j - q)];
                    }
                }
                out.c[idx(i, j)] = s;
            }
        }
        out
    }

    /// Multiplicative inverse; fails when the constant term vanishes.
    pub fn recip(&self) -> Result<Self> {
        let b0 = self.c[0];
        if b0 == 0.0 || !b0.is_finite() {
            return Err(Error::Singular("reciprocal of a jet with zero constant term"));
        }
        let d = self.deg;
        let mut r = Self::zero(d);
        r.c[0] = 1.0 / b0;
        for n in 1..=d {
            for j in 0..=n {
                let i = n - j;
                let mut s = 0.0;
                for p in 0..=i {
                    for q in 0..=j {
                        if p == 0 && q == 0 {
                            continue;
                        }
                        s += self.c[idx(p, q)] * r.c[idx(i - p, j - q)];
                    }
                }
                r.c[idx(i, j)] = -s / b0;
            }
        }
        Ok(r)
    }

    pub fn div(&self, b: &Self) -> Result<Self> {
        self.check(b)?;
        Ok(self.mul_unchecked(&b.recip()?))
    }

    /// Compose a univariate Taylor table `t_k = g^{(k)}(c₀)/k!` with this jet,
    /// where `c₀` is this jet's constant term.
    pub fn compose_series(&self, table: &[f64]) -> Self {
        let d = self.deg;
        let mut h = self.clone();
        h.c[0] = 0.0;
        let top = d.min(table.len().saturating_sub(1));
        let mut r = Self::constant(table[top], d);
        for k in (0..top).rev() {
            r = r.mul_unchecked(&h);
            r.c[0] += table[k];
        }
        r
    }

    pub fn compose(&self, outer: Outer) -> Result<Self> {
        let c0 = self.c[0];
        let d = self.deg;
        let table = match outer {
            Outer::Powi(n) => return self.powi(n),
            Outer::Sqrt => {
                if c0 <= 0.0 {
                    return Err(Error::Singular("sqrt of a jet with nonpositive constant term"));
                }
                sqrt_table(c0, d)
            }
            Outer::Sin => trig_table(c0, d, false),
            Outer::Cos => trig_table(c0, d, true),
            Outer::Sinh => hyp_table(c0, d, false),
            Outer::Cosh => hyp_table(c0, d, true),
            Outer::Exp => {
                let e = c0.exp();
                (0..=d).map(|k| e / factorial(k)).collect()
            }
            Outer::Tanh => tanh_table(c0, d),
            Outer::Atan => atan_table(c0, d),
        };
        Ok(self.compose_series(&table))
    }

    pub fn sin(&self) -> Self {
        self.compose_series(&trig_table(self.c[0], self.deg, false))
    }

    pub fn cos(&self) -> Self {
        self.compose_series(&trig_table(self.c[0], self.deg, true))
    }

    pub fn sinh(&self) -> Self {
        self.compose_series(&hyp_table(self.c[0], self.deg, false))
    }

    pub fn cosh(&self) -> Self {
        self.compose_series(&hyp_table(self.c[0], self.deg, true))
    }

    pub fn tanh(&self) -> Self {
        self.compose_series(&tanh_table(self.c[0], self.deg))
    }

    pub fn atan(&self) -> Self {
        self.compose_series(&atan_table(self.c[0], self.deg))
    }

    pub fn exp(&self) -> Self {
        let e = self.c[0].exp();
        let t: Vec<f64> = (0..=self.deg).map(|k| e / factorial(k)).collect();
        self.compose_series(&t)
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.compose(Outer::Sqrt)
    }

    pub fn powi(&self, n: i32) -> Result<Self> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut base = self.clone();
        let mut acc = Self::constant(1.0, self.deg);
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        Ok(acc)
    }

    pub fn square(&self) -> Self {
        self.mul_unchecked(self)
    }

    /// Derivative in variable `k`; the result has degree `deg − 1`.
    pub fn deriv(&self, k: usize) -> Result<Self> {
        if self.deg == 0 {
            return Err(Error::InsufficientDegree { need: 1, have: 0 });
        }
        let d = self.deg - 1;
        Ok(Self::from_fn(d, |i, j| {
            if k == 0 {
                (i + 1) as f64 * self.c[idx(i + 1, j)]
            } else {
                (j + 1) as f64 * self.c[idx(i, j + 1)]
            }
        }))
    }

    /// Directional derivative `w₀∂₁ + w₁∂₂`; degree drops by one.
    pub fn deriv_dir(&self, w: [f64; 2]) -> Result<Self> {
        let a = self.deriv(0)?;
        let b = self.deriv(1)?;
        Ok(&a.scale(w[0]) + &b.scale(w[1]))
    }

    pub fn truncate(&self, d: usize) -> Self {
        assert!(d <= self.deg, "truncate to {d} above degree {}", self.deg);
        Self::from_fn(d, |i, j| self.c[idx(i, j)])
    }

    /// Change variables to `s` with `h_k = m[k][0] s₁ + m[k][1] s₂`.
    pub fn linear_map(&self, m: [[f64; 2]; 2]) -> Self {
        let d = self.deg;
        let mut h1 = Self::zero(d);
        let mut h2 = Self::zero(d);
        if d > 0 {
            h1.c[idx(1, 0)] = m[0][0];
            h1.c[idx(0, 1)] = m[0][1];
            h2.c[idx(1, 0)] = m[1][0];
            h2.c[idx(0, 1)] = m[1][1];
        }
        let mut p1 = vec![Self::constant(1.0, d)];
        let mut p2 = vec![Self::constant(1.0, d)];
        for _ in 0..d {
            p1.push(p1.last().unwrap().mul_unchecked(&h1));
            p2.push(p2.last().unwrap().mul_unchecked(&h2));
        }
        let mut out = Self::zero(d);
        for n in 0..=d {
            for j in 0..=n {
                let i = n - j;
                let cij = self.c[idx(i, j)];
                if cij == 0.0 {
                    continue;
                }
                let t = p1[i].mul_unchecked(&p2[j]);
                for (o, v) in out.c.iter_mut().zip(&t.c) {
                    *o += cij * v;
                }
            }
        }
        out
    }

    /// Evaluate the Taylor polynomial at the offset `(h₁, h₂)`.
    pub fn eval_offset(&self, h1: f64, h2: f64) -> f64 {
        let mut s = 0.0;
        for n in 0..=self.deg {
            for j in 0..=n {
                let i = n - j;
                s += self.c[idx(i, j)] * h1.powi(i as i32) * h2.powi(j as i32);
            }
        }
        s
    }
}

/// Checked arithmetic entry point.
pub fn jet_arith(a: &Jet2, b: &Jet2, op: ArithOp) -> Result<Jet2> {
    a.check(b)?;
    Ok(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a.mul_unchecked(b),
        ArithOp::Div => a.div(b)?,
    })
}

pub fn jet_compose(outer: Outer, a: &Jet2) -> Result<Jet2> {
    a.compose(outer)
}

fn trig_table(c: f64, d: usize, cosine: bool) -> Vec<f64> {
    let (s, co) = c.sin_cos();
    let cycle = if cosine { [co, -s, -co, s] } else { [s, co, -s, -co] };
    (0..=d).map(|k| cycle[k % 4] / factorial(k)).collect()
}

fn hyp_table(c: f64, d: usize, cosh: bool) -> Vec<f64> {
    let (s, ch) = (c.sinh(), c.cosh());
    (0..=d)
        .map(|k| {
            let even = k % 2 == 0;
            let v = if even == cosh { ch } else { s };
            v / factorial(k)
        })
        .collect()
}

fn tanh_table(c: f64, d: usize) -> Vec<f64> {
    let mut t = vec![0.0; d + 1];
    t[0] = c.tanh();
    for n in 0..d {
        let conv: f64 = (0..=n).map(|i| t[i] * t[n - i]).sum();
        let rhs = if n == 0 { 1.0 } else { 0.0 } - conv;
        t[n + 1] = rhs / (n + 1) as f64;
    }
    t
}

fn atan_table(c: f64, d: usize) -> Vec<f64> {
    // atan' = 1/(1 + (c+h)²); invert the quadratic series, then integrate.
    let g = [1.0 + c * c, 2.0 * c, 1.0];
    let mut r = vec![0.0; d + 1];
    r[0] = 1.0 / g[0];
    for n in 1..=d {
        let mut s = 0.0;
        for (p, gp) in g.iter().enumerate().skip(1) {
            if p <= n {
                s += gp * r[n - p];
            }
        }
        r[n] = -s / g[0];
    }
    let mut t = vec![0.0; d + 1];
    t[0] = c.atan();
    for k in 1..=d {
        t[k] = r[k - 1] / k as f64;
    }
    t
}

fn sqrt_table(c: f64, d: usize) -> Vec<f64> {
    let mut t = vec![0.0; d + 1];
    t[0] = c.sqrt();
    for k in 1..=d {
        t[k] = t[k - 1] * (0.5 - (k - 1) as f64) / (k as f64 * c);
    }
    t
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&Jet2> for &Jet2 {
            type Output = Jet2;
            fn $f(self, b: &Jet2) -> Jet2 {
                assert_eq!(self.deg, b.deg, "jet degree mismatch");
                Jet2 { deg: self.deg, c: self.c.iter().zip(&b.c).map(|(x, y)| x $op y).collect() }
            }
        }
        impl $tr<Jet2> for Jet2 {
            type Output = Jet2;
            fn $f(self, b: Jet2) -> Jet2 {
                (&self).$f(&b)
            }
        }
        impl $tr<&Jet2> for Jet2 {
            type Output = Jet2;
            fn $f(self, b: &Jet2) -> Jet2 {
                (&self).$f(b)
            }
        }
        impl $tr<Jet2> for &Jet2 {
            type Output = Jet2;
            fn $f(self, b: Jet2) -> Jet2 {
                self.$f(&b)
            }
        }
    };
}
binop!(Add, add, +);
binop!(Sub, sub, -);

impl Mul<&Jet2> for &Jet2 {
    type Output = Jet2;
    fn mul(self, b: &Jet2) -> Jet2 {
        assert_eq!(self.deg, b.deg, "jet degree mismatch");
        self.mul_unchecked(b)
    }
}
impl Mul<Jet2> for Jet2 {
    type Output = Jet2;
    fn mul(self, b: Jet2) -> Jet2 {
        &self * &b
    }
}
impl Mul<&Jet2> for Jet2 {
    type Output = Jet2;
    fn mul(self, b: &Jet2) -> Jet2 {
        &self * b
    }
}
impl Mul<Jet2> for &Jet2 {
    type Output = Jet2;
    fn mul(self, b: Jet2) -> Jet2 {
        self * &b
    }
}
impl Mul<f64> for &Jet2 {
    type Output = Jet2;
    fn mul(self, s: f64) -> Jet2 {
        self.scale(s)
    }
}
impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, s: f64) -> Jet2 {
        self.scale(s)
    }
}
impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, j: Jet2) -> Jet2 {
        j.scale(self)
    }
}
impl Mul<&Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, j: &Jet2) -> Jet2 {
        j.scale(self)
    }
}
impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(self, s: f64) -> Jet2 {
        self.add_const(s)
    }
}
impl Add<f64> for &Jet2 {
    type Output = Jet2;
    fn add(self, s: f64) -> Jet2 {
        self.add_const(s)
    }
}
impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(self, s: f64) -> Jet2 {
        self.add_const(-s)
    }
}
impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}
impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}
impl AddAssign<&Jet2> for Jet2 {
    fn add_assign(&mut self, b: &Jet2) {
        assert_eq!(self.deg, b.deg, "jet degree mismatch");
        for (x, y) in self.c.iter_mut().zip(&b.c) {
            *x += y;
        }
    }
}
