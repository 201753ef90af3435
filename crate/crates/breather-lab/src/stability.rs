//! Periodic-breather parameter machinery: commensurability, mass, variational
//! coefficients, discriminant and the generalized Weinstein function.

use crate::error::{domain, Error, Result};
use crate::specfun::{ellip_e, ellip_k};
use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

fn bisect(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, what: &'static str) -> Result<f64> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoRoot(what));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `(1 − m) K(m)⁴`, continuous up to `m = 1`.
fn reduced_quartic(m: f64) -> Result<f64> {
    if m >= 1.0 {
        Ok(0.0)
    } else {
        Ok((1.0 - m) * ellip_k(m)?.powi(4))
    }
}

fn k_quartic(k: f64) -> Result<f64> {
    Ok(16.0 * k * ellip_k(k)?.powi(4))
}

/// `k/(1−m) − K(m)⁴/(16 K(k)⁴)`.
pub fn commensurability_residual(k: f64, m: f64) -> Result<f64> {
    Ok(k / (1.0 - m) - ellip_k(m)?.powi(4) / (16.0 * ellip_k(k)?.powi(4)))
}

/// Upper end `k*` of the commensurable range, the `m → 0` limit.
pub fn find_kstar_commensurability() -> Result<f64> {
    static KSTAR: OnceLock<f64> = OnceLock::new();
    if let Some(k) = KSTAR.get() {
        return Ok(*k);
    }
    let target = FRAC_PI_2.powi(4);
    let k = bisect(|k| Ok(k_quartic(k)? - target), 1e-6, 0.5, "k* bracket")?;
    Ok(*KSTAR.get_or_init(|| k))
}

/// `m(k)` on `(0, k*)`.
pub fn commensurate_m(k: f64) -> Result<f64> {
    let kstar = find_kstar_commensurability()?;
    if !(k > 0.0 && k < kstar) {
        return domain(format!("commensurability requires 0 < k < k* = {kstar:.8}, got {k}"));
    }
    let lhs = k_quartic(k)?;
    bisect(|m| Ok(lhs - reduced_quartic(m)?), 0.0, 1.0, "m(k) bracket")
}

/// `k(m)` on `(0, 1)`.
pub fn commensurate_k(m: f64) -> Result<f64> {
    if !(m > 0.0 && m < 1.0) {
        return domain(format!("commensurability requires 0 < m < 1, got {m}"));
    }
    let rhs = reduced_quartic(m)?;
    let kstar = find_kstar_commensurability()?;
    bisect(|k| Ok(k_quartic(k)? - rhs), 0.0, kstar, "k(m) bracket")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommensuratePair {
    pub beta: f64,
    pub k: f64,
    pub m: f64,
    pub alpha: f64,
    pub period: f64,
}

impl CommensuratePair {
    fn build(beta: f64, k: f64, m: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return domain(format!("beta must be positive, got {beta}"));
        }
        let alpha = beta * ((1.0 - m) / k).powf(0.25);
        Ok(CommensuratePair { beta, k, m, alpha, period: 2.0 * ellip_k(m)? / beta })
    }

    /// The other expression of the period, `4K(k)/α`.
    pub fn period_from_k(&self) -> Result<f64> {
        Ok(4.0 * ellip_k(self.k)? / self.alpha)
    }
}

pub fn solve_commensurability(beta: f64, k: f64) -> Result<CommensuratePair> {
    CommensuratePair::build(beta, k, commensurate_m(k)?)
}

pub fn commensurability_from_m(beta: f64, m: f64) -> Result<CommensuratePair> {
    CommensuratePair::build(beta, commensurate_k(m)?, m)
}

/// Variational coefficients `(a₁, a₂)` at explicit `(β, k, m)` with
/// `α = β((1−m)/k)^{1/4}`.
pub fn coeffs_a1a2_at(beta: f64, k: f64, m: f64) -> (f64, f64) {
    let alpha = beta * ((1.0 - m) / k).powf(0.25);
    let (a2_, b2) = (alpha * alpha, beta * beta);
    let a1 = 2.0 * (b2 * (2.0 - m) - a2_ * (1.0 + k));
    let a2 = a2_ * a2_ * (1.0 + k * k - 26.0 * k) + 2.0 * a2_ * b2 * (2.0 - m) * (1.0 + k) + b2 * b2 * m * m;
    (a1, a2)
}

pub fn coeffs_a1a2(beta: f64, k: f64) -> Result<(f64, f64)> {
    let p = solve_commensurability(beta, k)?;
    Ok(coeffs_a1a2_at(beta, k, p.m))
}

/// Closed-form mass `4β(E(m) + 4 K(k)/K(m) (E(k) − K(k)))` at explicit `m`.
pub fn periodic_mass_at(beta: f64, k: f64, m: f64) -> Result<f64> {
    let (kk, km) = (ellip_k(k)?, ellip_k(m)?);
    Ok(4.0 * beta * (ellip_e(m)? + 4.0 * kk / km * (ellip_e(k)? - kk)))
}

pub fn periodic_mass(beta: f64, k: f64) -> Result<f64> {
    periodic_mass_at(beta, k, commensurate_m(k)?)
}

/// How `m` moves in the `k`-partial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KPartial {
    /// `m` held at `m(k)`; only the first commensurability condition is kept.
    #[default]
    FrozenM,
    /// `m(k ± h)` re-solved.
    Resolved,
}

/// Step sizes for the parameter partials.
pub const H_K: f64 = 1e-6;
pub const H_BETA: f64 = 1e-6;

/// `(a₁, a₂, M_#)` at `(β, k)` under `mode`; `m0` is the frozen value.
fn triple(beta: f64, k: f64, m0: f64, mode: KPartial) -> Result<[f64; 3]> {
    let m = match mode {
        KPartial::FrozenM => m0,
        KPartial::Resolved => commensurate_m(k)?,
    };
    let (a1, a2) = coeffs_a1a2_at(beta, k, m);
    Ok([a1, a2, periodic_mass_at(beta, k, m)?])
}

fn central(f: impl Fn(f64) -> Result<[f64; 3]>, h: f64) -> Result<[f64; 3]> {
    let d = |h: f64| -> Result<[f64; 3]> {
        let (p, q) = (f(h)?, f(-h)?);
        Ok([0, 1, 2].map(|i| (p[i] - q[i]) / (2.0 * h)))
    };
    let (coarse, fine) = (d(h)?, d(0.5 * h)?);
    Ok([0, 1, 2].map(|i| (4.0 * fine[i] - coarse[i]) / 3.0))
}

/// Partials `[∂a₁, ∂a₂, ∂M_#]` in `β` and in `k`.
pub fn parameter_partials(beta: f64, k: f64, mode: KPartial, hb: f64, hk: f64) -> Result<([f64; 3], [f64; 3])> {
    let m0 = commensurate_m(k)?;
    let db = central(|h| triple(beta + h, k, m0, KPartial::FrozenM), hb)?;
    let dk = central(|h| triple(beta, k + h, m0, mode), hk)?;
    Ok((db, dk))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Discriminant {
    pub d: f64,
    pub hg: f64,
    pub scale: f64,
}

pub const DEGENERACY_TOL: f64 = 1e-10;

fn discriminant_with(beta: f64, k: f64, mode: KPartial, hb: f64, hk: f64) -> Result<Discriminant> {
    let (db, dk) = parameter_partials(beta, k, mode, hb, hk)?;
    let d = dk[0] * db[1] - dk[1] * db[0];
    let scale = (dk[0] * db[1]).abs() + (dk[1] * db[0]).abs();
    let hg = (dk[0] * db[2] - db[0] * dk[2]) / d;
    Ok(Discriminant { d, hg, scale })
}

/// `D = ∂ₖa₁ ∂_βa₂ − ∂ₖa₂ ∂_βa₁` and
/// `HG = (∂ₖa₁ ∂_βM_# − ∂_βa₁ ∂ₖM_#)/D`.
pub fn discriminant_and_hg(beta: f64, k: f64, mode: KPartial) -> Result<(f64, f64)> {
    let r = discriminant_with(beta, k, mode, H_BETA, H_K)?;
    if r.d.abs() < DEGENERACY_TOL * r.scale.max(1.0) {
        return Err(Error::Degenerate(r.d));
    }
    Ok((r.d, r.hg))
}

/// Same quantities at halved steps, for step-robustness checks.
pub fn discriminant_and_hg_steps(beta: f64, k: f64, mode: KPartial, hb: f64, hk: f64) -> Result<(f64, f64)> {
    let r = discriminant_with(beta, k, mode, hb, hk)?;
    Ok((r.d, r.hg))
}

/// Root of `D(β, ·)` in `[lo, hi]`.
pub fn discriminant_root(beta: f64, lo: f64, hi: f64, mode: KPartial) -> Result<f64> {
    let f = |k: f64| Ok(discriminant_with(beta, k, mode, H_BETA, H_K)?.d);
    bisect(f, lo, hi, "D(beta, k) has no sign change on the interval")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    StableCandidate,
    UnstableCandidate,
    Degenerate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::StableCandidate => "stable-candidate",
            Verdict::UnstableCandidate => "unstable-candidate",
            Verdict::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct StabilityReport {
    pub beta: f64,
    pub k: f64,
    pub m: f64,
    pub alpha: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub mass: f64,
    pub a1: f64,
    pub a2: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "HG")]
    pub hg: f64,
    pub verdict: Verdict,
}

pub fn stability_report(beta: f64, k: f64, mode: KPartial) -> Result<StabilityReport> {
    let p = solve_commensurability(beta, k)?;
    let (a1, a2) = coeffs_a1a2_at(beta, k, p.m);
    let r = discriminant_with(beta, k, mode, H_BETA, H_K)?;
    let degenerate = r.d.abs() < DEGENERACY_TOL * r.scale.max(1.0);
    let verdict = if degenerate {
        Verdict::Degenerate
    } else if r.hg > 0.0 {
        Verdict::StableCandidate
    } else {
        Verdict::UnstableCandidate
    };
    Ok(StabilityReport {
        beta,
        k,
        m: p.m,
        alpha: p.alpha,
        l: p.period,
        mass: periodic_mass_at(beta, k, p.m)?,
        a1,
        a2,
        d: r.d,
        hg: if degenerate { f64::NAN } else { r.hg },
        verdict,
    })
}

/// SG Weinstein quantity `−∫(B₀, B̃₀)·𝓛(B₀, B̃₀)` by quadrature, with its
/// closed form `8(1 + 3v²)/β`.
pub fn sg_weinstein_check(beta: f64, v: f64) -> Result<(f64, f64)> {
    let sg = crate::breathers::Sg::new(beta, v, 0.0, 0.0)?;
    let (q, _) = crate::linops::sg_scaling_form(&sg)?;
    Ok((-q / (4.0 * beta * beta), 8.0 * (1.0 + 3.0 * v * v) / beta))
}
