//! Elliptic integrals, Jacobi elliptic functions and the Galerkin bases.
//!
//! All elliptic quantities use the parameter convention:
//! `K(m) = ∫₀^{π/2} (1 − m sin²s)^{−1/2} ds`, `dn² + m sn² = 1`.

use crate::error::{domain, Error, Result};
use crate::jets::Jet2;
use std::f64::consts::{FRAC_PI_2, PI};

const AGM_TOL: f64 = 1e-16;

struct Agm {
    a: Vec<f64>,
    c: Vec<f64>,
}

fn agm(m: f64) -> Agm {
    let mut a = vec![1.0];
    let mut b = (1.0 - m).sqrt();
    let mut c = vec![m.sqrt()];
    for _ in 0..64 {
        let an = *a.last().unwrap();
        if (c.last().unwrap()).abs() <= AGM_TOL * an {
            break;
        }
        let (a1, b1, c1) = ((an + b) / 2.0, (an * b).sqrt(), (an - b) / 2.0);
        a.push(a1);
        b = b1;
        c.push(c1);
    }
    Agm { a, c }
}

/// Complete elliptic integral of the first kind.
pub fn ellip_k(m: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&m) {
        return domain(format!("K(m) requires 0 <= m < 1, got {m}"));
    }
    let g = agm(m);
    Ok(PI / (2.0 * g.a.last().unwrap()))
}

/// Complete elliptic integral of the second kind.
pub fn ellip_e(m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return domain(format!("E(m) requires 0 <= m <= 1, got {m}"));
    }
    if m == 1.0 {
        return Ok(1.0);
    }
    let g = agm(m);
    let k = PI / (2.0 * g.a.last().unwrap());
    let mut s = 0.0;
    let mut p = 0.5;
    for cn in &g.c {
        s += p * cn * cn;
        p *= 2.0;
    }
    Ok(k * (1.0 - s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Sn,
    Cn,
    Dn,
    Nd,
    Sd,
    Cd,
}

/// `(sn, cn, dn, am)` at real `u` by descending Landen/AGM.
pub fn jacobi_all(u: f64, m: f64) -> Result<(f64, f64, f64, f64)> {
    if !(0.0..=1.0).contains(&m) {
        return domain(format!("Jacobi functions require 0 <= m <= 1, got {m}"));
    }
    if m == 0.0 {
        return Ok((u.sin(), u.cos(), 1.0, u));
    }
    if m == 1.0 {
        let s = 1.0 / u.cosh();
        return Ok((u.tanh(), s, s, 2.0 * u.exp().atan() - FRAC_PI_2));
    }
    let g = agm(m);
    let n = g.a.len() - 1;
    let mut phi = 2f64.powi(n as i32) * g.a[n] * u;
    for k in (1..=n).rev() {
        phi = 0.5 * (phi + (g.c[k] / g.a[k] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    let dn = (1.0 - m * sn * sn).sqrt();
    Ok((sn, cn, dn, phi))
}

pub fn jacobi(u: f64, m: f64, which: Which) -> Result<f64> {
    let (sn, cn, dn, _) = jacobi_all(u, m)?;
    if matches!(which, Which::Nd | Which::Sd | Which::Cd) && dn == 0.0 {
        return Err(Error::Singular("dn = 0 in a dn-quotient"));
    }
    Ok(match which {
        Which::Sn => sn,
        Which::Cn => cn,
        Which::Dn => dn,
        Which::Nd => 1.0 / dn,
        Which::Sd => sn / dn,
        Which::Cd => cn / dn,
    })
}

/// Jets of `(sn, cn, dn)` of a jet argument, from the derivative relations
/// `sn' = cn dn`, `cn' = −sn dn`, `dn' = −m sn cn`.
pub fn jacobi_jets(u: &Jet2, m: f64) -> Result<(Jet2, Jet2, Jet2)> {
    let d = u.deg();
    let (s0, c0, d0, _) = jacobi_all(u.value(), m)?;
    let (mut s, mut c, mut dn) = (vec![0.0; d + 1], vec![0.0; d + 1], vec![0.0; d + 1]);
    s[0] = s0;
    c[0] = c0;
    dn[0] = d0;
    let conv = |x: &[f64], y: &[f64], n: usize| (0..=n).map(|i| x[i] * y[n - i]).sum::<f64>();
    for n in 0..d {
        let k = (n + 1) as f64;
        let cd = conv(&c, &dn, n);
        let sd = conv(&s, &dn, n);
        let sc = conv(&s, &c, n);
        s[n + 1] = cd / k;
        c[n + 1] = -sd / k;
        dn[n + 1] = -m * sc / k;
    }
    Ok((u.compose_series(&s), u.compose_series(&c), u.compose_series(&dn)))
}

pub fn jacobi_jet(u: &Jet2, m: f64, which: Which) -> Result<Jet2> {
    let (s, c, d) = jacobi_jets(u, m)?;
    Ok(match which {
        Which::Sn => s,
        Which::Cn => c,
        Which::Dn => d,
        Which::Nd => d.recip()?,
        Which::Sd => s.div(&d)?,
        Which::Cd => c.div(&d)?,
    })
}

/// Jacobi amplitude `A(x, m) = ∫₀ˣ dn(s, m) ds`.
pub fn jacobi_amplitude(x: f64, m: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&m) {
        return domain(format!("amplitude requires 0 <= m < 1, got {m}"));
    }
    Ok(jacobi_all(x, m)?.3)
}

/// Normalized Hermite functions `f_0..=f_nmax` at `x`.
pub fn hermite_values(nmax: usize, x: f64) -> Vec<f64> {
    let mut f = vec![0.0; nmax + 1];
    f[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if nmax >= 1 {
        f[1] = 2f64.sqrt() * x * f[0];
    }
    for n in 1..nmax {
        let nf = n as f64;
        f[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * f[n] - (nf / (nf + 1.0)).sqrt() * f[n - 1];
    }
    f
}

fn ladder(f: &[f64]) -> Vec<f64> {
    (0..f.len() - 1)
        .map(|n| {
            let nf = n as f64;
            let down = if n > 0 { (nf / 2.0).sqrt() * f[n - 1] } else { 0.0 };
            down - ((nf + 1.0) / 2.0).sqrt() * f[n + 1]
        })
        .collect()
}

/// `(f_n(x), f_n'(x))`.
pub fn hermite_f(n: usize, x: f64) -> (f64, f64) {
    let f = hermite_values(n + 1, x);
    let d = ladder(&f);
    (f[n], d[n])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HermiteBasis {
    pub count: usize,
}

impl HermiteBasis {
    /// `out[k][n] = f_n^{(k)}(x)` for `k ≤ nderiv`, `n < count`.
    pub fn eval(&self, x: f64, nderiv: usize) -> Vec<Vec<f64>> {
        let mut cur = hermite_values(self.count - 1 + nderiv, x);
        let mut out = Vec::with_capacity(nderiv + 1);
        out.push(cur[..self.count].to_vec());
        for _ in 0..nderiv {
            cur = ladder(&cur);
            out.push(cur[..self.count].to_vec());
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierBasis {
    pub period: f64,
    /// Highest wavenumber index; the basis has `2n + 1` functions.
    pub n: usize,
}

impl FourierBasis {
    pub fn count(&self) -> usize {
        2 * self.n + 1
    }

    /// `out[k][i]` = k-th derivative of basis function i at x.
    pub fn eval(&self, x: f64, nderiv: usize) -> Vec<Vec<f64>> {
        let l = self.period;
        let amp = (2.0 / l).sqrt();
        (0..=nderiv)
            .map(|k| {
                let mut row = Vec::with_capacity(self.count());
                row.push(if k == 0 { 1.0 / l.sqrt() } else { 0.0 });
                for j in 1..=self.n {
                    let w = 2.0 * PI * j as f64 / l;
                    let ph = w * x + k as f64 * FRAC_PI_2;
                    let s = amp * w.powi(k as i32);
                    row.push(s * ph.cos());
                    row.push(s * ph.sin());
                }
                row
            })
            .collect()
    }
}
