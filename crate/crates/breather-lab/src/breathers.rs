//! Solution families evaluated as jets in their phase variables and
//! chain-ruled to `(t, x)`.
//!
//! Every family is immutable after construction; derived constants are
//! recomputed from the defining parameters on demand.

use crate::error::{domain, Error, Result};
use crate::jets::Jet2;
use crate::specfun::{ellip_k, jacobi_jets};
use crate::stability;
use std::f64::consts::{PI, SQRT_2};

const TWO_SQRT2: f64 = 2.0 * SQRT_2;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive and finite, got {v}"))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be finite, got {v}"))
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mkdv {
    alpha: f64,
    beta: f64,
    x1: f64,
    x2: f64,
}

impl Mkdv {
    pub fn new(alpha: f64, beta: f64, x1: f64, x2: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        finite("x1", x1)?;
        finite("x2", x2)?;
        Ok(Mkdv { alpha, beta, x1, x2 })
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn delta(&self) -> f64 {
        self.alpha * self.alpha - 3.0 * self.beta * self.beta
    }
    pub fn gamma(&self) -> f64 {
        3.0 * self.alpha * self.alpha - self.beta * self.beta
    }
    /// Time period `T` of `B(t + T, x) = B(t, x − L)`.
    pub fn period_t(&self) -> f64 {
        2.0 * PI / (self.alpha * (self.gamma() - self.delta()))
    }
    pub fn shift_l(&self) -> f64 {
        -self.gamma() * self.period_t()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gardner {
    alpha: f64,
    beta: f64,
    mu: f64,
    x1: f64,
    x2: f64,
}

impl Gardner {
    pub fn new(alpha: f64, beta: f64, mu: f64, x1: f64, x2: f64) -> Result<Self> {
        for (n, v) in [("alpha", alpha), ("beta", beta), ("mu", mu)] {
            if v == 0.0 || !v.is_finite() {
                return domain(format!("{n} must be finite and nonzero, got {v}"));
            }
        }
        finite("x1", x1)?;
        finite("x2", x2)?;
        let g = Gardner { alpha, beta, mu, x1, x2 };
        if g.discriminant() <= 0.0 {
            return domain(format!("Gardner breather requires alpha^2 + beta^2 - 2 mu^2/9 > 0, got {}", g.discriminant()));
        }
        Ok(g)
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    /// `Δ = α² + β² − 2μ²/9`.
    pub fn discriminant(&self) -> f64 {
        self.alpha * self.alpha + self.beta * self.beta - 2.0 * self.mu * self.mu / 9.0
    }
    pub fn delta(&self) -> f64 {
        self.alpha * self.alpha - 3.0 * self.beta * self.beta
    }
    pub fn gamma(&self) -> f64 {
        3.0 * self.alpha * self.alpha - self.beta * self.beta
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sg {
    beta: f64,
    v: f64,
    x1: f64,
    x2: f64,
}

impl Sg {
    pub fn new(beta: f64, v: f64, x1: f64, x2: f64) -> Result<Self> {
        if !(v.abs() < 1.0) {
            return domain(format!("SG breather requires |v| < 1, got {v}"));
        }
        let gl = 1.0 / (1.0 - v * v).sqrt();
        if !(beta > 0.0 && beta < gl) {
            return domain(format!("SG breather requires 0 < beta < gamma = {gl}, got {beta}"));
        }
        finite("x1", x1)?;
        finite("x2", x2)?;
        Ok(Sg { beta, v, x1, x2 })
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn v(&self) -> f64 {
        self.v
    }
    /// Lorentz factor `(1 − v²)^{−1/2}`.
    pub fn gamma_l(&self) -> f64 {
        1.0 / (1.0 - self.v * self.v).sqrt()
    }
    pub fn alpha(&self) -> f64 {
        let g = self.gamma_l();
        (g * g - self.beta * self.beta).sqrt()
    }
    pub fn a(&self) -> f64 {
        let (g, b, v) = (self.gamma_l(), self.beta, self.v);
        -0.25 + b * b + v * v * (2.0 * g.powi(4) - g * g + b * b)
    }
    pub fn b(&self) -> f64 {
        4.0 * self.v * (self.gamma_l().powi(4) - self.beta * self.beta)
    }
    pub fn period_t(&self) -> f64 {
        2.0 * PI / (self.alpha() * (1.0 - self.v * self.v))
    }
    pub fn shift_l(&self) -> f64 {
        self.v * self.period_t()
    }
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Sg::new(beta, self.v, self.x1, self.x2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kksh {
    beta: f64,
    k: f64,
    m: f64,
    alpha: f64,
    x1: f64,
    x2: f64,
}

impl Kksh {
    /// `m(k)` and `α(β, k)` from the commensurability conditions.
    pub fn new(beta: f64, k: f64, x1: f64, x2: f64) -> Result<Self> {
        let p = stability::solve_commensurability(beta, k)?;
        Self::from_pair(p, x1, x2)
    }
    pub fn from_m(beta: f64, m: f64, x1: f64, x2: f64) -> Result<Self> {
        let p = stability::commensurability_from_m(beta, m)?;
        Self::from_pair(p, x1, x2)
    }
    pub fn from_pair(p: stability::CommensuratePair, x1: f64, x2: f64) -> Result<Self> {
        finite("x1", x1)?;
        finite("x2", x2)?;
        Ok(Kksh { beta: p.beta, k: p.k, m: p.m, alpha: p.alpha, x1, x2 })
    }
    /// Both conditions of the commensurability relaxed to the first one only,
    /// with `(β, k, m)` given; used for parameter partials at frozen `m`.
    pub fn unconstrained(beta: f64, k: f64, m: f64, x1: f64, x2: f64) -> Result<Self> {
        positive("beta", beta)?;
        if !(k > 0.0 && k < 1.0 && m > 0.0 && m < 1.0) {
            return domain(format!("need 0 < k, m < 1, got k={k}, m={m}"));
        }
        Ok(Kksh { beta, k, m, alpha: beta * ((1.0 - m) / k).powf(0.25), x1, x2 })
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn delta(&self) -> f64 {
        self.alpha.powi(2) * (1.0 + self.k) + 3.0 * self.beta.powi(2) * (self.m - 2.0)
    }
    pub fn gamma(&self) -> f64 {
        3.0 * self.alpha.powi(2) * (1.0 + self.k) + self.beta.powi(2) * (self.m - 2.0)
    }
    /// Spatial period `4K(k)/α`.
    pub fn period(&self) -> f64 {
        4.0 * ellip_k(self.k).expect("k validated") / self.alpha
    }
    pub fn pair(&self) -> stability::CommensuratePair {
        stability::CommensuratePair {
            beta: self.beta,
            k: self.k,
            m: self.m,
            alpha: self.alpha,
            period: 2.0 * ellip_k(self.m).expect("m validated") / self.beta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonzeroMean {
    mu: f64,
    c1: f64,
    c2: f64,
    p: u64,
    q: u64,
}

impl NonzeroMean {
    /// `c₂` from the commensurability of the two phases,
    /// `(2μ² − c₁)/(2μ² − c₂) = q²/p²`.
    pub fn new(mu: f64, c1: f64, p: u64, q: u64) -> Result<Self> {
        positive("mu", mu)?;
        Self::check_pq(p, q)?;
        let two_mu2 = 2.0 * mu * mu;
        if !(c1 > 0.0 && c1 < two_mu2) {
            return domain(format!("need 0 < c1 < 2 mu^2 = {two_mu2}, got {c1}"));
        }
        let r = (p as f64 / q as f64).powi(2);
        let c2 = two_mu2 - r * (two_mu2 - c1);
        if !(c2 > 0.0 && c2 < two_mu2) {
            return domain(format!("(p, q, c1) = ({p}, {q}, {c1}) gives c2 = {c2} outside (0, 2 mu^2)"));
        }
        Ok(NonzeroMean { mu, c1, c2, p, q })
    }

    /// The `μ` compatible with given speeds `(c₁, c₂)` and integers `(p, q)`.
    pub fn from_speeds(c1: f64, c2: f64, p: u64, q: u64) -> Result<Self> {
        Self::check_pq(p, q)?;
        let (p2, q2) = ((p as f64).powi(2), (q as f64).powi(2));
        let two_mu2 = (q2 * c2 - p2 * c1) / (q2 - p2);
        if !(two_mu2 > c1.max(c2)) {
            return domain(format!("speeds ({c1}, {c2}) with (p, q) = ({p}, {q}) admit no mu"));
        }
        let nz = Self::new((0.5 * two_mu2).sqrt(), c1, p, q)?;
        Ok(NonzeroMean { c2, ..nz })
    }

    fn check_pq(p: u64, q: u64) -> Result<()> {
        if p == 0 || q == 0 || p == q || gcd(p, q) != 1 {
            return domain(format!("p, q must be distinct coprime positive integers, got ({p}, {q})"));
        }
        Ok(())
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn c1(&self) -> f64 {
        self.c1
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }
    pub fn pq(&self) -> (u64, u64) {
        (self.p, self.q)
    }
    /// `s_i = √(2μ² − c_i)`.
    pub fn s(&self) -> (f64, f64) {
        let t = 2.0 * self.mu * self.mu;
        ((t - self.c1).sqrt(), (t - self.c2).sqrt())
    }
    pub fn rho(&self) -> f64 {
        let (r1, r2) = (self.c1.sqrt(), self.c2.sqrt());
        (r1 + r2) / (r1 - r2)
    }
    pub fn delta(&self) -> f64 {
        self.mu * self.mu + self.c1
    }
    pub fn gamma(&self) -> f64 {
        self.mu * self.mu + self.c2
    }
    pub fn period(&self) -> f64 {
        2.0 * PI * self.q as f64 / self.s().0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MkdvSoliton {
    c: f64,
}

impl MkdvSoliton {
    pub fn new(c: f64) -> Result<Self> {
        positive("c", c)?;
        Ok(MkdvSoliton { c })
    }
    pub fn c(&self) -> f64 {
        self.c
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GardnerSoliton {
    c: f64,
    mu: f64,
}

impl GardnerSoliton {
    pub fn new(c: f64, mu: f64) -> Result<Self> {
        positive("c", c)?;
        positive("mu", mu)?;
        Ok(GardnerSoliton { c, mu })
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgKink {
    v: f64,
    x0: f64,
}

impl SgKink {
    pub fn new(v: f64, x0: f64) -> Result<Self> {
        if !(v.abs() < 1.0) {
            return domain(format!("kink requires |v| < 1, got {v}"));
        }
        finite("x0", x0)?;
        Ok(SgKink { v, x0 })
    }
    pub fn v(&self) -> f64 {
        self.v
    }
    pub fn gamma_l(&self) -> f64 {
        1.0 / (1.0 - self.v * self.v).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    Mkdv(Mkdv),
    Gardner(Gardner),
    Sg(Sg),
    Kksh(Kksh),
    NonzeroMean(NonzeroMean),
    MkdvSoliton(MkdvSoliton),
    GardnerSoliton(GardnerSoliton),
    SgKink(SgKink),
}

/// Jets of a field at one point: the phase-variable jet, the map to `(t, x)`
/// and the resulting `(t, x)` jet; SG families also carry `B_t`.
#[derive(Clone, Debug)]
pub struct FieldJet {
    phase: Jet2,
    map: [[f64; 2]; 2],
    tx: Jet2,
    bt_phase: Option<Jet2>,
    bt: Option<Jet2>,
}

impl FieldJet {
    fn new(phase: Jet2, map: [[f64; 2]; 2], bt_phase: Option<Jet2>) -> Self {
        let tx = phase.linear_map(map);
        let bt = bt_phase.as_ref().map(|j| j.linear_map(map));
        FieldJet { phase, map, tx, bt_phase, bt }
    }
    pub fn deg(&self) -> usize {
        self.tx.deg()
    }
    pub fn value(&self) -> f64 {
        self.tx.value()
    }
    /// `∂ₜ^i ∂ₓ^j B`.
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.tx.partial(i, j)
    }
    pub fn dx(&self, j: usize) -> f64 {
        self.tx.partial(0, j)
    }
    /// Jet in `(t, x)`.
    pub fn tx(&self) -> &Jet2 {
        &self.tx
    }
    /// Jet in the phase variables `(y₁, y₂)`.
    pub fn phase(&self) -> &Jet2 {
        &self.phase
    }
    pub fn map(&self) -> [[f64; 2]; 2] {
        self.map
    }
    /// `(t, x)` jet of the shift derivative `∂_{x_k} B` (`k` = 0, 1); degree drops by one.
    pub fn shift(&self, k: usize) -> Result<Jet2> {
        Ok(self.phase.deriv(k)?.linear_map(self.map))
    }
    /// `(t, x)` jet of the SG momentum field `B_t`.
    pub fn bt(&self) -> Option<&Jet2> {
        self.bt.as_ref()
    }
    pub fn bt_dx(&self, j: usize) -> f64 {
        self.bt.as_ref().map_or(f64::NAN, |b| b.partial(0, j))
    }
    pub fn bt_shift(&self, k: usize) -> Result<Jet2> {
        match &self.bt_phase {
            Some(b) => Ok(b.deriv(k)?.linear_map(self.map)),
            None => domain("family has no B_t field"),
        }
    }
}

/// `2√2 ∂ arctan(num/den)` along `w`; inputs at degree `d + 1`, result at `d`.
fn atan_rational(num: &Jet2, den: &Jet2, w: [f64; 2]) -> Result<Jet2> {
    let d = num.deg() - 1;
    let dn = num.deriv_dir(w)?;
    let dd = den.deriv_dir(w)?;
    let (n, de) = (num.truncate(d), den.truncate(d));
    let top = &(&de * &dn) - &(&n * &dd);
    let bot = &(&n * &n) + &(&de * &de);
    Ok(top.div(&bot)?.scale(TWO_SQRT2))
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Mkdv(_) => "mkdv",
            Family::Gardner(_) => "gardner",
            Family::Sg(_) => "sg",
            Family::Kksh(_) => "kksh",
            Family::NonzeroMean(_) => "nonzero-mean",
            Family::MkdvSoliton(_) => "mkdv-soliton",
            Family::GardnerSoliton(_) => "gardner-soliton",
            Family::SgKink(_) => "sg-kink",
        }
    }

    /// SG-type families carry the pair `(B, B_t)`.
    pub fn is_sg(&self) -> bool {
        matches!(self, Family::Sg(_) | Family::SgKink(_))
    }

    pub fn is_breather(&self) -> bool {
        matches!(self, Family::Mkdv(_) | Family::Gardner(_) | Family::Sg(_) | Family::Kksh(_) | Family::NonzeroMean(_))
    }

    /// Spatial period for the periodic families.
    pub fn period(&self) -> Option<f64> {
        match self {
            Family::Kksh(k) => Some(k.period()),
            Family::NonzeroMean(n) => Some(n.period()),
            _ => None,
        }
    }

    /// Spatial decay rate of line families.
    pub fn decay_rate(&self) -> Option<f64> {
        match self {
            Family::Mkdv(f) => Some(f.beta),
            Family::Gardner(f) => Some(f.beta.abs()),
            Family::Sg(f) => Some(f.beta),
            Family::MkdvSoliton(f) => Some(f.c.sqrt()),
            Family::GardnerSoliton(f) => Some(f.c.sqrt()),
            Family::SgKink(f) => Some(f.gamma_l()),
            _ => None,
        }
    }

    /// Largest spatial oscillation frequency of the profile.
    pub fn spatial_frequency(&self) -> f64 {
        match self {
            Family::Mkdv(f) => f.alpha.max(f.beta),
            Family::Gardner(f) => f.alpha.abs().max(f.beta.abs()),
            Family::Sg(f) => (f.alpha() * f.v.abs()).max(f.beta),
            Family::Kksh(f) => f.alpha.max(f.beta),
            Family::NonzeroMean(n) => n.s().0.max(n.s().1),
            Family::MkdvSoliton(f) => f.c.sqrt(),
            Family::GardnerSoliton(f) => f.c.sqrt(),
            Family::SgKink(f) => f.gamma_l(),
        }
    }

    pub fn shifts(&self) -> (f64, f64) {
        match self {
            Family::Mkdv(f) => (f.x1, f.x2),
            Family::Gardner(f) => (f.x1, f.x2),
            Family::Sg(f) => (f.x1, f.x2),
            Family::Kksh(f) => (f.x1, f.x2),
            Family::SgKink(f) => (0.0, f.x0),
            _ => (0.0, 0.0),
        }
    }

    /// Same family with the shift parameters replaced.
    pub fn with_shifts(&self, x1: f64, x2: f64) -> Result<Family> {
        finite("x1", x1)?;
        finite("x2", x2)?;
        Ok(match *self {
            Family::Mkdv(f) => Family::Mkdv(Mkdv { x1, x2, ..f }),
            Family::Gardner(f) => Family::Gardner(Gardner { x1, x2, ..f }),
            Family::Sg(f) => Family::Sg(Sg { x1, x2, ..f }),
            Family::Kksh(f) => Family::Kksh(Kksh { x1, x2, ..f }),
            Family::SgKink(f) => Family::SgKink(SgKink { x0: x2, ..f }),
            _ => return domain(format!("{} has no shift parameters", self.tag())),
        })
    }

    /// All partials to order `deg` at `(t, x)`.
    pub fn eval(&self, t: f64, x: f64, deg: usize) -> Result<FieldJet> {
        let d1 = deg + 1;
        match *self {
            Family::Mkdv(f) => {
                let (a, b) = (f.alpha, f.beta);
                let y1 = Jet2::variable(0, x + f.delta() * t + f.x1, d1);
                let y2 = Jet2::variable(1, x + f.gamma() * t + f.x2, d1);
                let g = (&y1 * a).sin().scale(b / a);
                let fden = (&y2 * b).cosh();
                let p = atan_rational(&g, &fden, [1.0, 1.0])?;
                Ok(FieldJet::new(p, [[f.delta(), 1.0], [f.gamma(), 1.0]], None))
            }
            Family::Gardner(f) => {
                let (a, b, mu, dl) = (f.alpha, f.beta, f.mu, f.discriminant());
                let r = (a * a + b * b).sqrt();
                let y1 = Jet2::variable(0, x + f.delta() * t + f.x1, d1);
                let y2 = Jet2::variable(1, x + f.gamma() * t + f.x2, d1);
                let (s1, c1) = ((&y1 * a).sin(), (&y1 * a).cos());
                let e2 = (&y2 * b).exp();
                let ch = (&y2 * b).cosh();
                let g = &s1.scale(b * r / (a * dl.sqrt())) - &e2.scale(SQRT_2 * mu * b / (3.0 * dl));
                let fden = &ch - &(&c1.scale(a) - &s1.scale(b)).scale(SQRT_2 * mu * b / (3.0 * a * r * dl.sqrt()));
                let p = atan_rational(&g, &fden, [1.0, 1.0])?;
                Ok(FieldJet::new(p, [[f.delta(), 1.0], [f.gamma(), 1.0]], None))
            }
            Family::Sg(f) => {
                let (a, b, v) = (f.alpha(), f.beta, f.v);
                let y1 = Jet2::variable(0, t - v * x + f.x1, deg);
                let y2 = Jet2::variable(1, x - v * t + f.x2, deg);
                let (s1, c1) = ((&y1 * a).sin(), (&y1 * a).cos());
                let (sh, ch) = ((&y2 * b).sinh(), (&y2 * b).cosh());
                let ratio = c1.scale(b).div(&ch.scale(a))?;
                let bj = ratio.atan().scale(4.0);
                let num = &(&s1 * &ch).scale(a) - &(&c1 * &sh).scale(b * v);
                let den = &(&ch * &ch).scale(a * a) + &(&c1 * &c1).scale(b * b);
                let bt = num.div(&den)?.scale(-4.0 * a * b);
                Ok(FieldJet::new(bj, [[1.0, -v], [-v, 1.0]], Some(bt)))
            }
            Family::Kksh(f) => {
                let (a, b) = (f.alpha, f.beta);
                let y1 = Jet2::variable(0, x + f.delta() * t + f.x1, d1);
                let y2 = Jet2::variable(1, x + f.gamma() * t + f.x2, d1);
                let (sn1, _, _) = jacobi_jets(&(&y1 * a), f.k)?;
                let (_, _, dn2) = jacobi_jets(&(&y2 * b), f.m)?;
                let g = (&sn1 * &dn2).scale(b);
                let p = atan_rational(&g, &Jet2::constant(a, d1), [1.0, 1.0])?;
                Ok(FieldJet::new(p, [[f.delta(), 1.0], [f.gamma(), 1.0]], None))
            }
            Family::NonzeroMean(n) => {
                let (s1, s2) = n.s();
                let (r1, r2) = (n.c1.sqrt(), n.c2.sqrt());
                let mu = n.mu;
                let y1 = Jet2::variable(0, 0.5 * s1 * (x - n.delta() * t), d1);
                let y2 = Jet2::variable(1, 0.5 * s2 * (x - n.gamma() * t), d1);
                let (sa, ca) = (y1.sin(), y1.cos());
                let (sb, cb) = (y2.sin(), y2.cos());
                let f = (&(&(&ca * &cb).scale(r1 - r2) + &(&ca * &sb).scale(s2)) - &(&sa * &cb).scale(s1))
                    .scale(-SQRT_2 * mu * n.rho());
                let g = &(&ca * &cb).scale(2.0 * mu * mu) + &(&(&sa.scale(s1) - &ca.scale(r1)) * &(&sb.scale(s2) - &cb.scale(r2)));
                let p = atan_rational(&f, &g, [0.5 * s1, 0.5 * s2])?.add_const(mu);
                let map = [[-0.5 * s1 * n.delta(), 0.5 * s1], [-0.5 * s2 * n.gamma(), 0.5 * s2]];
                Ok(FieldJet::new(p, map, None))
            }
            Family::MkdvSoliton(f) => {
                let c = f.c;
                let y = Jet2::variable(0, x - c * t, deg);
                let p = (&y * c.sqrt()).cosh().recip()?.scale((2.0 * c).sqrt());
                Ok(FieldJet::new(p, [[-c, 1.0], [0.0, 0.0]], None))
            }
            Family::GardnerSoliton(f) => {
                let (c, mu) = (f.c, f.mu);
                let y = Jet2::variable(0, x - c * t, deg);
                let den = (&y * c.sqrt()).cosh().scale((mu * mu / 9.0 + 0.5 * c).sqrt()).add_const(mu / 3.0);
                let p = den.recip()?.scale(c);
                Ok(FieldJet::new(p, [[-c, 1.0], [0.0, 0.0]], None))
            }
            Family::SgKink(f) => {
                let (v, g) = (f.v, f.gamma_l());
                let y2 = Jet2::variable(1, g * (x - v * t - f.x0), d1);
                let b1 = y2.exp().atan().scale(4.0);
                let map = [[1.0, -v], [-g * v, g]];
                let bt = b1.deriv_dir([1.0, -g * v])?;
                Ok(FieldJet::new(b1.truncate(deg), map, Some(bt)))
            }
        }
    }

    /// `B_t` of SG-type families, or `∂ₜB` otherwise, as a `(t, x)` jet.
    pub fn momentum_jet(&self, t: f64, x: f64, deg: usize) -> Result<Jet2> {
        let fj = self.eval(t, x, deg)?;
        match fj.bt() {
            Some(b) => Ok(b.clone()),
            None => {
                let hi = self.eval(t, x, deg + 1)?;
                hi.tx().deriv(0)
            }
        }
    }
}

/// Absolute residual of the evolution equation at one point.
pub fn pde_residual(family: &Family, t: f64, x: f64) -> Result<f64> {
    let j = family.eval(t, x, 4)?;
    let (u, ux, uxxx, ut) = (j.d(0, 0), j.d(0, 1), j.d(0, 3), j.d(1, 0));
    Ok(match family {
        Family::Mkdv(_) | Family::Kksh(_) | Family::NonzeroMean(_) | Family::MkdvSoliton(_) => ut + uxxx + 3.0 * u * u * ux,
        Family::Gardner(g) => ut + uxxx + 2.0 * g.mu * u * ux + 3.0 * u * u * ux,
        Family::GardnerSoliton(g) => ut + uxxx + 2.0 * g.mu * u * ux + 3.0 * u * u * ux,
        Family::Sg(_) | Family::SgKink(_) => j.d(2, 0) - j.d(0, 2) + u.sin(),
    })
}

/// Snapshot at `t = 0` with `x̃₂ = 0` and `x̃₁` reduced to one period of the
/// internal oscillation; spectra are invariant under this change.
pub fn normal_form(family: &Family, t: f64) -> Result<Family> {
    let (x1, x2) = family.shifts();
    let (s, per) = match family {
        Family::Mkdv(f) => (x1 + (f.delta() - f.gamma()) * t - x2, 2.0 * PI / f.alpha),
        Family::Gardner(f) => (x1 + (f.delta() - f.gamma()) * t - x2, 2.0 * PI / f.alpha.abs()),
        Family::Sg(f) => (x1 + t + f.v * (x2 - f.v * t), 2.0 * PI / f.alpha()),
        Family::Kksh(f) => (x1 + (f.delta() - f.gamma()) * t - x2, 4.0 * ellip_k(f.k)? / f.alpha),
        _ => return domain(format!("{} has no normal form", family.tag())),
    };
    family.with_shifts(s.rem_euclid(per), 0.0)
}

/// Max defect of `B(t + T, x) = B(t, x − L)` (line breathers) or of
/// `B(t, x + L) = B(t, x)` (periodic families) on a sample grid.
pub fn periodicity_check(family: &Family) -> Result<f64> {
    let b = |t: f64, x: f64| -> Result<f64> { Ok(family.eval(t, x, 0)?.value()) };
    let ts = [0.0, 0.37, 1.1];
    let mut worst = 0.0f64;
    match family {
        Family::Mkdv(_) | Family::Sg(_) => {
            let (tp, l) = match family {
                Family::Mkdv(f) => (f.period_t(), f.shift_l()),
                Family::Sg(f) => (f.period_t(), f.shift_l()),
                _ => unreachable!(),
            };
            for &t in &ts {
                for i in 0..=80 {
                    let x = -10.0 + 0.25 * i as f64;
                    worst = worst.max((b(t + tp, x)? - b(t, x - l)?).abs());
                }
            }
        }
        Family::Kksh(_) | Family::NonzeroMean(_) => {
            let l = family.period().expect("periodic");
            for &t in &ts {
                for i in 0..=80 {
                    let x = l * i as f64 / 80.0 - 0.3 * l;
                    worst = worst.max((b(t, x + l)? - b(t, x)?).abs());
                }
            }
        }
        _ => return domain(format!("{} is not a breather", family.tag())),
    }
    Ok(worst)
}

/// `w_i` of the Bäcklund components as a jet in `x` at fixed `t`.
fn backlund_w(n: &NonzeroMean, i: usize, t: f64, x: f64, deg: usize) -> Result<Jet2> {
    let (c, s) = if i == 0 { (n.c1, n.s().0) } else { (n.c2, n.s().1) };
    let th = (Jet2::variable(0, x, deg).add_const(-(n.mu * n.mu + c) * t)).scale(0.5 * s);
    let tan = th.sin().div(&th.cos())?;
    Ok(tan.scale(SQRT_2 * s).add_const(-(2.0 * c).sqrt()).scale(0.5 / n.mu))
}

/// Whether `x` is close to a pole of either Bäcklund component.
pub fn near_pole(n: &NonzeroMean, t: f64, x: f64) -> bool {
    let (s1, s2) = n.s();
    let c1 = (0.5 * s1 * (x - n.delta() * t)).cos().abs();
    let c2 = (0.5 * s2 * (x - n.gamma() * t)).cos().abs();
    c1 < 0.05 || c2 < 0.05
}

/// Residual of the spatial Bäcklund relation
/// `u_i − μ = √(2c_i) sin((ũ_i + μx)/√2)` with `u_i = ∂ₓũ_i`.
pub fn backlund_residual(n: &NonzeroMean, i: usize, t: f64, x: f64) -> Result<f64> {
    let w = backlund_w(n, i, t, x, 1)?;
    let c = if i == 0 { n.c1 } else { n.c2 };
    let (w0, w1) = (w.get(0, 0), w.get(1, 0));
    let ui = -n.mu + TWO_SQRT2 * w1 / (1.0 + w0 * w0);
    let arg = 2.0 * w0.atan();
    Ok(ui - n.mu - (2.0 * c).sqrt() * arg.sin())
}

/// `B` through the permutability relation with `ũ₀ = μx`.
pub fn permutability_profile(n: &NonzeroMean, t: f64, x: f64) -> Result<f64> {
    let w1 = backlund_w(n, 0, t, x, 1)?;
    let w2 = backlund_w(n, 1, t, x, 1)?;
    let r = (&w2 - &w1).scale(-n.rho()).div(&(&w1 * &w2).add_const(1.0))?;
    let (r0, r1) = (r.get(0, 0), r.get(1, 0));
    Ok(n.mu + TWO_SQRT2 * r1 / (1.0 + r0 * r0))
}

/// Nonzero-mean breather from `(μ, c₁, p, q)`, checked against the
/// permutability construction on a sample grid.
pub fn backlund_construct(mu: f64, c1: f64, p: u64, q: u64) -> Result<Family> {
    let n = NonzeroMean::new(mu, c1, p, q)?;
    let fam = Family::NonzeroMean(n);
    let l = n.period();
    let mut worst = 0.0f64;
    for &t in &[0.0, 0.3] {
        for i in 0..97 {
            let x = l * i as f64 / 96.0;
            if near_pole(&n, t, x) {
                continue;
            }
            let closed = fam.eval(t, x, 0)?.value();
            let perm = permutability_profile(&n, t, x)?;
            worst = worst.max((closed - perm).abs() / (1.0 + closed.abs()));
        }
    }
    if worst > 1e-10 {
        return Err(Error::Domain(format!("permutability and closed form disagree by {worst:.3e}")));
    }
    Ok(fam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line_families() -> Vec<Family> {
        vec![
            Family::Mkdv(Mkdv::new(2.5, 1.0, 0.3, -0.2).unwrap()),
            Family::Mkdv(Mkdv::new(0.5, 1.3, 0.0, 0.0).unwrap()),
            Family::Gardner(Gardner::new(0.5, 1.0, 0.1, 0.2, 0.0).unwrap()),
            Family::Gardner(Gardner::new(1.2, 0.7, 0.9, 0.0, 0.4).unwrap()),
            Family::Sg(Sg::new(0.5, 0.7, 0.1, 0.0).unwrap()),
            Family::Sg(Sg::new(0.8, -0.3, 1.0, 0.5).unwrap()),
            Family::MkdvSoliton(MkdvSoliton::new(1.7).unwrap()),
            Family::GardnerSoliton(GardnerSoliton::new(0.9, 0.6).unwrap()),
            Family::SgKink(SgKink::new(0.4, 0.2).unwrap()),
        ]
    }

    fn periodic_families() -> Vec<Family> {
        vec![
            Family::Kksh(Kksh::from_m(1.0, 0.5, 0.0, 0.0).unwrap()),
            Family::Kksh(Kksh::new(0.8, 0.03, 0.2, 0.1).unwrap()),
            Family::NonzeroMean(NonzeroMean::from_speeds(1.65, 2.95, 22, 23).unwrap()),
            Family::NonzeroMean(NonzeroMean::new(1.0, 0.5, 2, 3).unwrap()),
        ]
    }

    #[test]
    fn pde_residuals_vanish() {
        for fam in line_families().into_iter().chain(periodic_families()) {
            for i in 0..40 {
                let t = -0.7 + 0.037 * i as f64;
                let x = -6.0 + 0.31 * i as f64;
                let r = pde_residual(&fam, t, x).unwrap();
                assert!(r.abs() < 1e-9, "{} residual {r:e} at ({t}, {x})", fam.tag());
            }
        }
    }

    #[test]
    fn origin_values() {
        let m = Family::Mkdv(Mkdv::new(1.7, 1.0, 0.0, 0.0).unwrap());
        assert!((m.eval(0.0, 0.0, 0).unwrap().value() - 2.0 * SQRT_2).abs() < 1e-14);
        let s = Sg::new(0.5, 0.7, 0.0, 0.0).unwrap();
        let v = Family::Sg(s).eval(0.0, 0.0, 0).unwrap().value();
        assert!((v - 4.0 * (0.5 / s.alpha()).atan()).abs() < 1e-14);
    }

    #[test]
    fn kksh_center_values() {
        for fam in periodic_families().into_iter().take(2) {
            let Family::Kksh(k) = fam.with_shifts(0.0, 0.0).unwrap() else { unreachable!() };
            let j = Family::Kksh(k).eval(0.0, 0.0, 2).unwrap();
            let (b, a, m, kk) = (k.beta(), k.alpha(), k.m(), k.k());
            assert!((j.value() - 2.0 * SQRT_2 * b).abs() < 1e-12);
            let bxx = -2.0 * SQRT_2 * b * ((2.0 + 3.0 * m) * b * b + (1.0 + kk) * a * a);
            assert!((j.dx(2) - bxx).abs() < 1e-10 * bxx.abs());
        }
    }

    #[test]
    fn sg_momentum_matches_time_derivative() {
        let s = Family::Sg(Sg::new(0.6, 0.45, 0.3, -0.4).unwrap());
        for i in 0..100 {
            let (t, x) = (-2.0 + 0.041 * i as f64, -8.0 + 0.163 * i as f64);
            let j = s.eval(t, x, 2).unwrap();
            assert!((j.bt().unwrap().value() - j.d(1, 0)).abs() < 1e-11);
            assert!((j.bt_dx(1) - j.d(1, 1)).abs() < 1e-11);
        }
    }

    #[test]
    fn sg_cosine_rational_form() {
        let s = Sg::new(0.5, 0.7, 0.1, 0.0).unwrap();
        let (a, b, v) = (s.alpha(), s.beta(), s.v());
        for i in 0..50 {
            let (t, x) = (0.13 * i as f64, -5.0 + 0.2 * i as f64);
            let bv = Family::Sg(s).eval(t, x, 0).unwrap().value();
            let (c, ch) = ((a * (t - v * x + 0.1)).cos(), (b * (x - v * t)).cosh());
            let den = (a * a * ch * ch + b * b * c * c).powi(2);
            let num = b.powi(4) * c.powi(4) - 6.0 * a * a * b * b * ch * ch * c * c + a.powi(4) * ch.powi(4);
            assert!((bv.cos() - num / den).abs() < 1e-11);
        }
    }

    #[test]
    fn sg_shift_derivatives_relation() {
        let s = Family::Sg(Sg::new(0.5, 0.7, 0.1, 0.2).unwrap());
        let v = 0.7;
        for i in 0..30 {
            let (t, x) = (0.1 * i as f64, -3.0 + 0.2 * i as f64);
            let j = s.eval(t, x, 2).unwrap();
            let (b1, b2) = (j.shift(0).unwrap().value(), j.shift(1).unwrap().value());
            assert!((j.d(1, 0) - (b1 - v * b2)).abs() < 1e-11);
            assert!((j.d(0, 1) - (-v * b1 + b2)).abs() < 1e-11);
            let (a, be) = ((1.0 / (1.0 - v * v) - 0.25f64).sqrt(), 0.5);
            let (y1, y2) = (t - v * x + 0.1, x - v * t + 0.2);
            let g = a * a * (be * y2).cosh().powi(2) + be * be * (a * y1).cos().powi(2);
            let b1c = -4.0 * a * a * be * (a * y1).sin() * (be * y2).cosh() / g;
            let b2c = -4.0 * a * be * be * (a * y1).cos() * (be * y2).sinh() / g;
            assert!((b1 - b1c).abs() < 1e-11 && (b2 - b2c).abs() < 1e-11);
        }
    }

    #[test]
    fn lorentz_covariance() {
        let (beta, v, x1, x2) = (0.6f64, 0.5f64, 0.3, -0.2);
        let g = 1.0 / (1.0 - v * v).sqrt();
        let moving = Family::Sg(Sg::new(beta, v, x1, x2).unwrap());
        let rest = Family::Sg(Sg::new(beta / g, 0.0, g * x1, g * x2).unwrap());
        for i in 0..40 {
            let (t, x) = (-1.0 + 0.07 * i as f64, -6.0 + 0.3 * i as f64);
            let a = moving.eval(t, x, 0).unwrap().value();
            let b = rest.eval(g * (t - v * x), g * (x - v * t), 0).unwrap().value();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn periodicity() {
        let fams = [
            Family::Mkdv(Mkdv::new(2.5, 1.0, 0.0, 0.0).unwrap()),
            Family::Sg(Sg::new(0.5, 0.7, 0.0, 0.0).unwrap()),
            Family::Kksh(Kksh::new(1.0, 0.03, 0.0, 0.0).unwrap()),
            Family::NonzeroMean(NonzeroMean::from_speeds(1.65, 2.95, 22, 23).unwrap()),
        ];
        for f in fams {
            assert!(periodicity_check(&f).unwrap() < 1e-10, "{}", f.tag());
        }
    }

    #[test]
    fn kksh_period_expressions_agree() {
        let k = Kksh::new(1.0, 0.03, 0.0, 0.0).unwrap();
        assert!((k.period() - k.pair().period).abs() < 1e-10 * k.period());
    }

    #[test]
    fn kksh_tends_to_mkdv() {
        let k = Kksh::new(1.0, 1e-4, 0.0, 0.0).unwrap();
        let m = Family::Mkdv(Mkdv::new(k.alpha(), k.beta(), 0.0, 0.0).unwrap());
        for i in 0..=100 {
            let x = -5.0 + 0.1 * i as f64;
            let a = Family::Kksh(k).eval(0.0, x, 0).unwrap().value();
            let b = m.eval(0.0, x, 0).unwrap().value();
            assert!((a - b).abs() < 1e-2, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn nonzero_mean_data() {
        let n = NonzeroMean::from_speeds(1.65, 2.95, 22, 23).unwrap();
        assert!((n.mu() - 2.909_658_246).abs() < 1e-8);
        assert!((n.period() - 36.967).abs() < 1e-3);
        let l = n.period();
        let plan = crate::quadrature::QuadraturePlan::torus(l, 4096);
        let fam = Family::NonzeroMean(n);
        let mean = plan.integrate_verified(|x| fam.eval(0.0, x, 0).unwrap().value()).unwrap() / l;
        assert!((mean - (n.mu() - 2.0 * SQRT_2 * PI / l)).abs() < 1e-8);
    }

    #[test]
    fn backlund_relations() {
        let n = NonzeroMean::from_speeds(1.65, 2.95, 22, 23).unwrap();
        let fam = backlund_construct(n.mu(), 1.65, 22, 23).unwrap();
        let Family::NonzeroMean(m) = fam else { unreachable!() };
        assert!((m.c2() - 2.95).abs() < 1e-12);
        let mut rng = 12345u64;
        let mut next = || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut count = 0;
        while count < 50 {
            let (t, x) = (next(), 40.0 * next());
            if near_pole(&m, t, x) {
                continue;
            }
            for i in 0..2 {
                assert!(backlund_residual(&m, i, t, x).unwrap().abs() < 1e-10);
            }
            count += 1;
        }
    }

    #[test]
    fn constructor_guards() {
        assert!(Gardner::new(0.1, 0.1, 1.0, 0.0, 0.0).is_err());
        assert!(Sg::new(0.5, 1.0, 0.0, 0.0).is_err());
        assert!(Sg::new(1.2, 0.0, 0.0, 0.0).is_err());
        assert!(Kksh::new(1.0, 0.06, 0.0, 0.0).is_err());
        assert!(Kksh::new(1.0, 0.0, 0.0, 0.0).is_err());
        let mu = 0.5 * SQRT_2;
        assert!(NonzeroMean::new(mu, 0.5, 3, 3).is_err());
        assert!(NonzeroMean::new(mu, 0.5, 2, 4).is_err());
        assert!(NonzeroMean::new(mu, 1.5, 2, 3).is_err());
        assert!(backlund_construct(mu, 0.5, 1, 1).is_err());
    }

    #[test]
    fn normal_form_preserves_profile() {
        let f = Family::Mkdv(Mkdv::new(0.9, 1.0, 0.4, 0.7).unwrap());
        let Family::Mkdv(m) = f else { unreachable!() };
        let t = 0.8;
        let nf = normal_form(&f, t).unwrap();
        let xs = m.gamma() * t + 0.7;
        for i in 0..20 {
            let x = -4.0 + 0.4 * i as f64;
            let a = f.eval(t, x, 0).unwrap().value();
            let b = nf.eval(0.0, x + xs, 0).unwrap().value();
            assert!((a - b).abs() < 1e-10);
        }
        let s = Family::Sg(Sg::new(0.5, 0.7, 0.3, 0.4).unwrap());
        let nf = normal_form(&s, 1.3).unwrap();
        for i in 0..20 {
            let x = -4.0 + 0.4 * i as f64;
            let a = s.eval(1.3, x, 0).unwrap();
            let b = nf.eval(0.0, x - 0.7 * 1.3 + 0.4, 0).unwrap();
            assert!((a.value() - b.value()).abs() < 1e-10);
            assert!((a.bt().unwrap().value() - b.bt().unwrap().value()).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn mkdv_residual_random(alpha in 0.3f64..2.5, beta in 0.5f64..1.5, t in -1.0f64..1.0, x in -8.0f64..8.0) {
            let f = Family::Mkdv(Mkdv::new(alpha, beta, 0.1, -0.1).unwrap());
            prop_assert!(pde_residual(&f, t, x).unwrap().abs() < 1e-9);
        }

        #[test]
        fn sg_residual_random(beta in 0.2f64..0.9, v in -0.8f64..0.8, t in -2.0f64..2.0, x in -8.0f64..8.0) {
            let f = Family::Sg(Sg::new(beta, v, 0.0, 0.0).unwrap());
            prop_assert!(pde_residual(&f, t, x).unwrap().abs() < 1e-9);
        }
    }
}
