//! Conserved quantities, Lyapunov functionals, stationary-equation residuals
//! and the quadratic expansion of the SG Lyapunov functional.

use crate::breathers::{Family, FieldJet, Sg};
use crate::error::{domain, Result};
use crate::jets::Jet2;
use crate::linops::{LinearizedOperator, TestField};
use crate::quadrature::QuadraturePlan;
use crate::stability;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionalKind {
    Mass,
    Energy,
    Momentum,
    FMkdv,
    FGardner,
    FSg,
    FNonzero,
    Lyapunov,
}

impl FunctionalKind {
    pub fn tag(&self) -> &'static str {
        match self {
            FunctionalKind::Mass => "mass",
            FunctionalKind::Energy => "energy",
            FunctionalKind::Momentum => "momentum",
            FunctionalKind::FMkdv => "f-mkdv",
            FunctionalKind::FGardner => "f-gardner",
            FunctionalKind::FSg => "f-sg",
            FunctionalKind::FNonzero => "f-nonzero",
            FunctionalKind::Lyapunov => "lyapunov",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "mass" => FunctionalKind::Mass,
            "energy" => FunctionalKind::Energy,
            "momentum" => FunctionalKind::Momentum,
            "f-mkdv" => FunctionalKind::FMkdv,
            "f-gardner" => FunctionalKind::FGardner,
            "f-sg" => FunctionalKind::FSg,
            "f-nonzero" => FunctionalKind::FNonzero,
            "lyapunov" | "h" => FunctionalKind::Lyapunov,
            _ => return None,
        })
    }
}

/// Pointwise field values entering the densities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sample {
    pub u: f64,
    pub ux: f64,
    pub uxx: f64,
    pub ut: f64,
    pub utx: f64,
}

impl Sample {
    pub fn from_jet(j: &FieldJet) -> Self {
        let (ut, utx) = match j.bt() {
            Some(b) => (b.partial(0, 0), b.partial(0, 1)),
            None => (j.d(1, 0), j.d(1, 1)),
        };
        Sample { u: j.d(0, 0), ux: j.d(0, 1), uxx: j.d(0, 2), ut, utx }
    }

    /// `self + ε (z, w)`.
    pub fn perturbed(&self, eps: f64, z: &[f64; 5], w: &[f64; 5]) -> Self {
        Sample {
            u: self.u + eps * z[0],
            ux: self.ux + eps * z[1],
            uxx: self.uxx + eps * z[2],
            ut: self.ut + eps * w[0],
            utx: self.utx + eps * w[1],
        }
    }
}

fn mkdv_energy(s: &Sample) -> f64 {
    0.5 * s.ux * s.ux - 0.25 * s.u.powi(4)
}

fn mkdv_f(s: &Sample) -> f64 {
    0.5 * s.uxx * s.uxx - 2.5 * s.u * s.u * s.ux * s.ux + 0.25 * s.u.powi(6)
}

fn gardner_energy(mu: f64, s: &Sample) -> f64 {
    0.5 * s.ux * s.ux - mu / 3.0 * s.u.powi(3) - 0.25 * s.u.powi(4)
}

fn gardner_f(mu: f64, s: &Sample) -> f64 {
    let (w, wx) = (s.u, s.ux);
    0.5 * s.uxx * s.uxx - 5.0 / 3.0 * mu * w * wx * wx + 5.0 / 18.0 * mu * mu * w.powi(4) - 2.5 * w * w * wx * wx
        + 0.5 * mu * w.powi(5)
        + 0.25 * w.powi(6)
}

fn sg_energy(s: &Sample) -> f64 {
    0.5 * (s.ux * s.ux + s.ut * s.ut) + (1.0 - s.u.cos())
}

fn sg_momentum(s: &Sample) -> f64 {
    0.5 * s.ut * s.ux
}

fn sg_f(s: &Sample) -> f64 {
    let (c, sn) = (s.u.cos(), s.u.sin());
    0.5 * (s.uxx * s.uxx + s.utx * s.utx) - (s.ut.powi(4) + s.ux.powi(4)) / 32.0 - 3.0 / 16.0 * s.ut * s.ut * s.ux * s.ux
        + 0.625 * s.ux * s.ux * c
        + 0.125 * (sn * sn + s.ut * s.ut * c)
}

/// SG Lyapunov density `F + aE + bP`.
pub fn sg_lyapunov_density(a: f64, b: f64, s: &Sample) -> f64 {
    sg_f(s) + a * sg_energy(s) + b * sg_momentum(s)
}

fn nz_mass(mu: f64, s: &Sample) -> f64 {
    0.5 * (s.u - mu).powi(2)
}

fn nz_energy(mu: f64, s: &Sample) -> f64 {
    let d = s.u - mu;
    0.5 * s.ux * s.ux - mu * d.powi(3) - 0.25 * d.powi(4)
}

fn nz_f(mu: f64, s: &Sample) -> f64 {
    let (d, wx) = (s.u - mu, s.ux);
    0.5 * s.uxx * s.uxx - 5.0 * mu * d * wx * wx + 2.5 * mu * mu * d.powi(4) - 2.5 * d * d * wx * wx
        + 1.5 * mu * d.powi(5)
        + 0.25 * d.powi(6)
}

fn unsupported<T>(kind: FunctionalKind, family: &Family) -> Result<T> {
    domain(format!("functional {} is not defined for family {}", kind.tag(), family.tag()))
}

/// Pointwise density of `kind` for `family`.
pub fn density(kind: FunctionalKind, family: &Family, s: &Sample) -> Result<f64> {
    use FunctionalKind as K;
    let mass = 0.5 * s.u * s.u;
    Ok(match (family, kind) {
        (Family::Mkdv(_) | Family::Kksh(_) | Family::MkdvSoliton(_), K::Mass) => mass,
        (Family::Mkdv(_) | Family::Kksh(_) | Family::MkdvSoliton(_), K::Energy) => mkdv_energy(s),
        (Family::Mkdv(_) | Family::Kksh(_) | Family::MkdvSoliton(_), K::FMkdv) => mkdv_f(s),
        (Family::Mkdv(m), K::Lyapunov) => {
            let (a, b) = (m.alpha(), m.beta());
            mkdv_f(s) + 2.0 * (b * b - a * a) * mkdv_energy(s) + (a * a + b * b).powi(2) * mass
        }
        (Family::Kksh(k), K::Lyapunov) => {
            let (a1, a2) = stability::coeffs_a1a2_at(k.beta(), k.k(), k.m());
            mkdv_f(s) + a1 * mkdv_energy(s) + a2 * mass
        }
        (Family::Gardner(_) | Family::GardnerSoliton(_), K::Mass) => mass,
        (Family::Gardner(g), K::Energy) => gardner_energy(g.mu(), s),
        (Family::GardnerSoliton(g), K::Energy) => gardner_energy(g.mu(), s),
        (Family::Gardner(g), K::FGardner) => gardner_f(g.mu(), s),
        (Family::GardnerSoliton(g), K::FGardner) => gardner_f(g.mu(), s),
        (Family::Gardner(g), K::Lyapunov) => {
            let (a, b) = (g.alpha(), g.beta());
            gardner_f(g.mu(), s) + 2.0 * (b * b - a * a) * gardner_energy(g.mu(), s) + (a * a + b * b).powi(2) * mass
        }
        (Family::Sg(_) | Family::SgKink(_), K::Energy) => sg_energy(s),
        (Family::Sg(_) | Family::SgKink(_), K::Momentum) => sg_momentum(s),
        (Family::Sg(_) | Family::SgKink(_), K::FSg) => sg_f(s),
        (Family::Sg(g), K::Lyapunov) => sg_lyapunov_density(g.a(), g.b(), s),
        (Family::NonzeroMean(n), K::Mass) => nz_mass(n.mu(), s),
        (Family::NonzeroMean(n), K::Energy) => nz_energy(n.mu(), s),
        (Family::NonzeroMean(n), K::FNonzero) => nz_f(n.mu(), s),
        (Family::NonzeroMean(n), K::Lyapunov) => {
            let (mu2, c1, c2) = (n.mu() * n.mu(), n.c1(), n.c2());
            nz_f(n.mu(), s) + (c1 + c2 - 4.0 * mu2) * nz_energy(n.mu(), s) + (c1 - 2.0 * mu2) * (c2 - 2.0 * mu2) * nz_mass(n.mu(), s)
        }
        _ => return unsupported(kind, family),
    })
}

/// Position of the envelope centre of a line family at time `t`.
pub fn envelope_center(family: &Family, t: f64) -> f64 {
    let (_, x2) = family.shifts();
    match family {
        Family::Mkdv(m) => -m.gamma() * t - x2,
        Family::Gardner(g) => -g.gamma() * t - x2,
        Family::Sg(s) => s.v() * t - x2,
        Family::MkdvSoliton(m) => m.c() * t,
        Family::GardnerSoliton(g) => g.c() * t,
        Family::SgKink(k) => k.v() * t + x2,
        _ => 0.0,
    }
}

/// Default plan: trapezoid over one period, or composite Gauss–Legendre
/// around the envelope centre.
pub fn default_plan(family: &Family, t: f64) -> Result<(QuadraturePlan, f64)> {
    if let Some(l) = family.period() {
        return Ok((QuadraturePlan::torus(l, 4096), 0.0));
    }
    let beta = family.decay_rate().expect("line family");
    let c = envelope_center(family, t);
    let (_, x2) = family.shifts();
    let density = (8.0 * family.spatial_frequency()).max(24.0);
    Ok((QuadraturePlan::for_line(beta, x2, density), c))
}

/// Value and doubling drift of a functional at time `t`.
pub fn evaluate_functional_with(kind: FunctionalKind, family: &Family, t: f64) -> Result<(f64, f64)> {
    let (plan, c) = default_plan(family, t)?;
    let f = |x: f64| -> f64 {
        let s = family.eval(t, x + c, 2).map(|j| Sample::from_jet(&j));
        match s {
            Ok(s) => density(kind, family, &s).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    };
    // surface domain errors before integrating
    density(kind, family, &Sample::default())?;
    plan.integrate_with_drift(f)
}

pub fn evaluate_functional(kind: FunctionalKind, family: &Family, t: f64) -> Result<f64> {
    Ok(evaluate_functional_with(kind, family, t)?.0)
}

/// Max `|value(tᵢ) − value(t₀)|`.
pub fn conservation_in_time(kind: FunctionalKind, family: &Family, times: &[f64]) -> Result<f64> {
    conservation_with_shifts(kind, family, times, |_| family.shifts())
}

/// As [`conservation_in_time`] with shifts `(x₁(t), x₂(t))` moving in time.
pub fn conservation_with_shifts(kind: FunctionalKind, family: &Family, times: &[f64], shifts: impl Fn(f64) -> (f64, f64)) -> Result<f64> {
    if times.len() < 3 {
        return domain("conservation check needs at least 3 times");
    }
    let at = |t: f64| -> Result<f64> {
        let (x1, x2) = shifts(t);
        let fam = if (x1, x2) == family.shifts() { *family } else { family.with_shifts(x1, x2)? };
        evaluate_functional(kind, &fam, t)
    };
    let v0 = at(times[0])?;
    let mut worst = 0.0f64;
    for &t in &times[1..] {
        worst = worst.max((at(t)? - v0).abs());
    }
    Ok(worst)
}

/// Residuals of the stationary equation(s), each relative to the largest
/// single term at its point; SG families report both equations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationaryResidual {
    pub primary: f64,
    pub secondary: Option<f64>,
}

fn point_scale(terms: &[f64]) -> f64 {
    terms.iter().fold(0.0f64, |a, t| a.max(t.abs()))
}

/// Relative residuals over a grid; the per-point scale is floored at
/// `REL_FLOOR` times the largest term on the grid so that points where every
/// term vanishes do not report pure rounding noise.
fn rel_max(rows: &[Vec<f64>]) -> f64 {
    let global = rows.iter().map(|r| point_scale(r)).fold(0.0f64, f64::max);
    if global == 0.0 {
        return 0.0;
    }
    rows.iter()
        .map(|r| r.iter().sum::<f64>().abs() / point_scale(r).max(REL_FLOOR * global))
        .fold(0.0f64, f64::max)
}

pub const REL_FLOOR: f64 = 1e-6;

/// Terms of the two SG stationary equations at one point.
pub fn sg_stationary_terms(j: &FieldJet, a: f64, b: f64) -> ([f64; 6], [f64; 11]) {
    let bt = j.bt().expect("SG family");
    let (u, ux, uxx, u4) = (j.dx(0), j.dx(1), j.dx(2), j.dx(4));
    let (w, wx, wxx) = (bt.partial(0, 0), bt.partial(0, 1), bt.partial(0, 2));
    let (s, c) = (u.sin(), u.cos());
    let e35 = [wxx, w.powi(3) / 8.0, 0.375 * ux * ux * w, -0.25 * w * c, -a * w, -0.5 * b * ux];
    let e36 = [
        u4,
        0.375 * ux * ux * uxx,
        0.75 * w * wx * ux,
        0.375 * w * w * uxx,
        0.625 * ux * ux * s,
        -1.25 * uxx * c,
        0.25 * s * c,
        -0.125 * w * w * s,
        -a * uxx,
        a * s,
        -0.5 * b * wx,
    ];
    (e35, e36)
}

fn scalar_terms(family: &Family, j: &FieldJet) -> Result<Vec<f64>> {
    let (u, ux, uxx, u4) = (j.dx(0), j.dx(1), j.dx(2), j.dx(4));
    Ok(match family {
        Family::Mkdv(m) => {
            let (a, b) = (m.alpha(), m.beta());
            let s2 = 2.0 * (b * b - a * a);
            vec![u4, -s2 * uxx, -s2 * u.powi(3), (a * a + b * b).powi(2) * u, 5.0 * u * ux * ux, 5.0 * u * u * uxx, 1.5 * u.powi(5)]
        }
        Family::Gardner(g) => {
            let (a, b, mu) = (g.alpha(), g.beta(), g.mu());
            let s2 = 2.0 * (b * b - a * a);
            vec![
                u4,
                -s2 * uxx,
                -s2 * mu * u * u,
                -s2 * u.powi(3),
                (a * a + b * b).powi(2) * u,
                5.0 * u * ux * ux,
                5.0 * u * u * uxx,
                1.5 * u.powi(5),
                5.0 / 3.0 * mu * ux * ux,
                10.0 / 3.0 * mu * u * uxx,
                10.0 / 9.0 * mu * mu * u.powi(3),
                2.5 * mu * u.powi(4),
            ]
        }
        Family::Kksh(k) => {
            let (a1, a2) = stability::coeffs_a1a2_at(k.beta(), k.k(), k.m());
            vec![u4, 5.0 * u * ux * ux, 5.0 * u * u * uxx, 1.5 * u.powi(5), -a1 * uxx, -a1 * u.powi(3), a2 * u]
        }
        Family::NonzeroMean(n) => {
            let mu = n.mu();
            let d = u - mu;
            let ab = n.c1() + n.c2() - 4.0 * mu * mu;
            let pr = (n.c1() - 2.0 * mu * mu) * (n.c2() - 2.0 * mu * mu);
            vec![
                u4,
                -ab * uxx,
                -3.0 * ab * mu * d * d,
                -ab * d.powi(3),
                pr * d,
                5.0 * d * ux * ux,
                5.0 * d * d * uxx,
                1.5 * d.powi(5),
                5.0 * mu * ux * ux,
                7.5 * mu * d.powi(4),
                10.0 * mu * d * uxx,
                10.0 * mu * mu * d.powi(3),
            ]
        }
        Family::MkdvSoliton(s) => vec![uxx, -s.c() * u, u.powi(3)],
        Family::GardnerSoliton(s) => vec![uxx, -s.c() * u, s.mu() * u * u, u.powi(3)],
        _ => return domain(format!("{} has no scalar stationary equation", family.tag())),
    })
}

/// Stationary residual over `xs` at time `t`; SG families use their own `(a, b)`
/// and kinks use `(0, 0)` (see [`stationary_residual_sg`]).
pub fn stationary_residual(family: &Family, xs: &[f64], t: f64) -> Result<StationaryResidual> {
    match family {
        Family::Sg(s) => stationary_residual_sg(family, s.a(), s.b(), xs, t),
        Family::SgKink(_) => stationary_residual_sg(family, 0.0, 0.0, xs, t),
        _ => {
            let mut rows = Vec::with_capacity(xs.len());
            for &x in xs {
                rows.push(scalar_terms(family, &family.eval(t, x, 4)?)?);
            }
            Ok(StationaryResidual { primary: rel_max(&rows), secondary: None })
        }
    }
}

/// Both SG stationary equations with an explicit `(a, b)` pair.
pub fn stationary_residual_sg(family: &Family, a: f64, b: f64, xs: &[f64], t: f64) -> Result<StationaryResidual> {
    if !family.is_sg() {
        return domain(format!("{} is not an SG family", family.tag()));
    }
    let (mut r1, mut r2) = (Vec::new(), Vec::new());
    for &x in xs {
        let (e35, e36) = sg_stationary_terms(&family.eval(t, x, 4)?, a, b);
        r1.push(e35.to_vec());
        r2.push(e36.to_vec());
    }
    Ok(StationaryResidual { primary: rel_max(&r1), secondary: Some(rel_max(&r2)) })
}

/// Central-difference step for SG `β`-derivatives.
pub fn sg_beta_step(beta: f64) -> f64 {
    1e-5 * beta.max(1.0)
}

/// `(ΛB, ΛB_t)` as `(t, x)` jets: central differences in `β` with `v, x₁, x₂` fixed.
pub fn sg_scaling_direction(sg: &Sg, t: f64, x: f64, deg: usize) -> Result<(Jet2, Jet2)> {
    let h = sg_beta_step(sg.beta());
    let p = Family::Sg(sg.with_beta(sg.beta() + h)?).eval(t, x, deg)?;
    let m = Family::Sg(sg.with_beta(sg.beta() - h)?).eval(t, x, deg)?;
    let s = 0.5 / h;
    let db = (p.tx() - m.tx()).scale(s);
    let dbt = (p.bt().expect("SG") - m.bt().expect("SG")).scale(s);
    Ok((db, dbt))
}

/// Result of the quadratic expansion of `H` around an SG breather.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionCheck {
    /// `H[B + εz, B_t + εw] − H[B, B_t] − (ε²/2) Q[z, w]`.
    pub remainder: f64,
    /// The printed cubic-and-quartic formula at `(εz, εw)`.
    pub printed_n: f64,
    /// Exact `ε³` coefficient of the remainder, times `ε³`.
    pub exact_cubic: f64,
    pub drift: f64,
}

/// Printed remainder density `N[z, w]`.
pub fn printed_n_density(s: &Sample, z: &[f64; 5], w: &[f64; 5]) -> f64 {
    let (bt, bx, u) = (s.ut, s.ux, s.u);
    let (z0, zx, w0) = (z[0], z[1], w[0]);
    let (sb, cb) = (u.sin(), u.cos());
    -0.125
        * (bt * w0.powi(3) + bx * zx.powi(3) + 0.25 * (w0.powi(4) + zx.powi(4)) + 3.0 * bt * w0 * zx * zx + 3.0 * bx * zx * w0 * w0
            + 1.5 * w0 * w0 * zx * zx
            + 2.5 * cb * z0 * z0 * zx * zx
            + 5.0 * sb * z0 * zx * zx
            - 0.25 * sb * sb * z0.powi(4)
            + sb * cb * z0.powi(3)
            + 0.5 * cb * w0 * w0 * z0 * z0
            + bt * w0 * z0 * z0
            + sb * z0 * w0 * w0)
}

/// Exact cubic term of the expansion of the SG Lyapunov density.
pub fn exact_cubic_density(a: f64, s: &Sample, z: &[f64; 5], w: &[f64; 5]) -> f64 {
    let (bt, bx, u) = (s.ut, s.ux, s.u);
    let (z0, zx, w0) = (z[0], z[1], w[0]);
    let (sb, cb) = (u.sin(), u.cos());
    bt * bt * z0.powi(3) * sb / 48.0 - bt * w0.powi(3) / 8.0 - bt * w0 * z0 * z0 * cb / 8.0 - 3.0 * bt * w0 * zx * zx / 8.0
        + 5.0 * bx * bx * z0.powi(3) * sb / 48.0
        - 3.0 * bx * w0 * w0 * zx / 8.0
        - 5.0 * bx * z0 * z0 * zx * cb / 8.0
        - bx * zx.powi(3) / 8.0
        - a * z0.powi(3) * sb / 6.0
        - w0 * w0 * z0 * sb / 8.0
        - z0.powi(3) * sb * cb / 6.0
        - 5.0 * z0 * zx * zx * sb / 8.0
}

/// Expansion of `H` at the `t = 0` snapshot along `(z, w)`.
pub fn expansion_check(sg: &Sg, z: &TestField, w: &TestField, eps: f64) -> Result<ExpansionCheck> {
    let fam = Family::Sg(*sg);
    let op = LinearizedOperator::for_family(&fam)?;
    let plan = op.default_plan(0)?;
    let (a, b) = (sg.a(), sg.b());
    let parts = |x: f64| -> Result<[f64; 3]> {
        let s = Sample::from_jet(&fam.eval(0.0, x, 2)?);
        let (zv, wv) = (z(x)?, w(x)?);
        let hp = sg_lyapunov_density(a, b, &s.perturbed(eps, &zv, &wv));
        let h0 = sg_lyapunov_density(a, b, &s);
        let q = op.quadratic_density(x, &zv, Some(&wv))?;
        let ez: [f64; 5] = zv.map(|v| eps * v);
        let ew: [f64; 5] = wv.map(|v| eps * v);
        Ok([(hp - h0) - 0.5 * eps * eps * q, printed_n_density(&s, &ez, &ew), exact_cubic_density(a, &s, &ez, &ew)])
    };
    let pick = |i: usize| move |x: f64| parts(x).map(|p| p[i]).unwrap_or(f64::NAN);
    let (remainder, drift) = match plan.integrate_with_drift(pick(0)) {
        Ok(v) => v,
        // a vanishing remainder has no meaningful relative drift
        Err(crate::error::Error::Quadrature { .. }) if eps == 0.0 => (0.0, 0.0),
        Err(e) => return Err(e),
    };
    let printed_n = plan.refined().integrate(pick(1));
    let exact_cubic = plan.refined().integrate(pick(2));
    Ok(ExpansionCheck { remainder, printed_n, exact_cubic, drift })
}

/// Smooth, rapidly decaying test profile `A exp(−((x−c)/s)²) cos(ω(x−c))`
/// with four derivatives.
pub fn gaussian_bump(amp: f64, center: f64, width: f64, freq: f64) -> impl Fn(f64) -> Result<[f64; 5]> + Sync {
    move |x: f64| {
        let y = Jet2::variable(0, x - center, 4);
        let g = (&y * (1.0 / width)).square().scale(-1.0).exp();
        let f = (&g * &(&y * freq).cos()).scale(amp);
        Ok([0, 1, 2, 3, 4].map(|k| f.partial(k, 0)))
    }
}
