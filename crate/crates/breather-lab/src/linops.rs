//! Linearized operators around a frozen breather snapshot.
//!
//! Scalar families: `𝓛z = z⁗ + c₂z″ + c₁z′ + c₀z` with `c₁ = c₂′`.
//! Sine-Gordon: a 2×2 block acting on `(z, w)`.

use crate::breathers::{Family, FieldJet, Kksh, Sg};
use crate::error::{domain, Error, Result};
use crate::functionals::{default_plan, sg_scaling_direction};
use crate::jets::Jet2;
use crate::quadrature::QuadraturePlan;
use crate::stability::{self, KPartial};

/// A test field: value and four derivatives at a point.
pub type TestField = dyn Fn(f64) -> Result<[f64; 5]> + Sync;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OpKind {
    /// Shifted-mKdV type operator with constants `(A₁, A₂)` and Gardner mean `μ`.
    Scalar { a1: f64, a2: f64, mu: f64 },
    SgBlock { a: f64, b: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarCoeffs {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgCoeffs {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub beta0: f64,
    pub beta1: f64,
    /// Coefficient of `z` in the second row.
    pub gamma0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coeffs {
    Scalar(ScalarCoeffs),
    Sg(SgCoeffs),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearizedOperator {
    family: Family,
    t: f64,
    kind: OpKind,
}

fn mkdv_consts(alpha: f64, beta: f64) -> (f64, f64) {
    (2.0 * (beta * beta - alpha * alpha), (alpha * alpha + beta * beta).powi(2))
}

impl LinearizedOperator {
    /// Operator at the `t = 0` snapshot of `family`.
    pub fn for_family(family: &Family) -> Result<Self> {
        Self::at_time(family, 0.0)
    }

    pub fn at_time(family: &Family, t: f64) -> Result<Self> {
        let kind = match family {
            Family::Mkdv(m) => {
                let (a1, a2) = mkdv_consts(m.alpha(), m.beta());
                OpKind::Scalar { a1, a2, mu: 0.0 }
            }
            Family::Gardner(g) => {
                let (a1, a2) = mkdv_consts(g.alpha(), g.beta());
                OpKind::Scalar { a1, a2, mu: g.mu() }
            }
            Family::Kksh(k) => {
                let (a1, a2) = stability::coeffs_a1a2_at(k.beta(), k.k(), k.m());
                OpKind::Scalar { a1, a2, mu: 0.0 }
            }
            Family::Sg(s) => OpKind::SgBlock { a: s.a(), b: s.b() },
            _ => return domain(format!("no linearized operator for {}", family.tag())),
        };
        Ok(LinearizedOperator { family: *family, t, kind })
    }

    /// Scalar operator around `family` with explicit constants.
    pub fn scalar(family: &Family, a1: f64, a2: f64, mu: f64) -> Result<Self> {
        if family.is_sg() || family.period().is_none() && family.decay_rate().is_none() {
            return domain("scalar operator needs a scalar family");
        }
        Ok(LinearizedOperator { family: *family, t: 0.0, kind: OpKind::Scalar { a1, a2, mu } })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }
    pub fn kind(&self) -> OpKind {
        self.kind
    }
    pub fn is_block(&self) -> bool {
        matches!(self.kind, OpKind::SgBlock { .. })
    }
    pub fn time(&self) -> f64 {
        self.t
    }

    fn snapshot(&self, x: f64) -> Result<FieldJet> {
        self.family.eval(self.t, x, 2)
    }

    pub fn coeffs(&self, x: f64) -> Result<Coeffs> {
        let j = self.snapshot(x)?;
        Ok(match self.kind {
            OpKind::Scalar { a1, a2, mu } => {
                let (b, bx, bxx) = (j.dx(0), j.dx(1), j.dx(2));
                let t3 = 10.0 / 3.0;
                let c2 = 5.0 * b * b - a1 + t3 * mu * b;
                let c1 = 10.0 * b * bx + t3 * mu * bx;
                let c0 = a2 + 5.0 * bx * bx + 10.0 * b * bxx + 7.5 * b.powi(4) - 3.0 * a1 * b * b
                    + mu * (10.0 * b.powi(3) - 2.0 * a1 * b + t3 * bxx + t3 * mu * b * b);
                Coeffs::Scalar(ScalarCoeffs { c2, c1, c0 })
            }
            OpKind::SgBlock { a, b } => {
                let bt = j.bt().expect("SG family");
                let (u, ux, uxx) = (j.dx(0), j.dx(1), j.dx(2));
                let (w, wx) = (bt.partial(0, 0), bt.partial(0, 1));
                let (sn, cs) = (u.sin(), u.cos());
                let p = a - 0.375 * (ux * ux + w * w) + 1.25 * cs;
                let q = 0.75 * ux * uxx + 0.75 * w * wx + 1.25 * sn * ux;
                let r = a * cs + 0.625 * ux * ux * cs + 1.25 * uxx * sn + 0.25 * (cs * cs - sn * sn) - 0.125 * w * w * cs;
                let s = 0.25 * (4.0 * a + cs - 1.5 * (w * w + ux * ux));
                let beta0 = 0.25 * (3.0 * wx * ux + 3.0 * w * uxx - w * sn);
                let beta1 = 0.25 * (3.0 * w * ux - 2.0 * b);
                Coeffs::Sg(SgCoeffs { p, q, r, s, beta0, beta1, gamma0: -0.25 * w * sn })
            }
        })
    }

    /// `𝓛` applied at `x` to derivative stacks `z = [z, z′, …, z⁗]` and
    /// (SG only) `w = [w, w′, w″, …]`; the second component is 0 for scalars.
    pub fn apply(&self, x: f64, z: &[f64], w: Option<&[f64]>) -> Result<(f64, f64)> {
        apply_coeffs(&self.coeffs(x)?, z, w)
    }

    /// As [`apply`](Self::apply) with `x`-jets of the perturbation.
    pub fn apply_jets(&self, x: f64, z: &Jet2, w: Option<&Jet2>) -> Result<(f64, f64)> {
        let stack = |j: &Jet2, n: usize| -> Result<Vec<f64>> {
            if j.deg() < n {
                return Err(Error::InsufficientDegree { need: n, have: j.deg() });
            }
            Ok((0..=n).map(|k| j.partial(0, k)).collect())
        };
        let zs = stack(z, 4)?;
        let ws = match w {
            Some(w) => Some(stack(w, 2)?),
            None => None,
        };
        self.apply(x, &zs, ws.as_deref())
    }

    /// Integrated-form density of the quadratic form.
    pub fn quadratic_density(&self, x: f64, z: &[f64; 5], w: Option<&[f64; 5]>) -> Result<f64> {
        Ok(match self.coeffs(x)? {
            Coeffs::Scalar(c) => z[2] * z[2] - c.c2 * z[1] * z[1] + c.c0 * z[0] * z[0],
            Coeffs::Sg(c) => {
                let w = w.ok_or_else(|| Error::Domain("SG operator needs a w component".into()))?;
                z[2] * z[2] + c.p * z[1] * z[1] + c.r * z[0] * z[0] + w[1] * w[1] + c.s * w[0] * w[0]
                    + 2.0 * c.beta0 * z[0] * w[0]
                    + 2.0 * c.beta1 * z[0] * w[1]
            }
        })
    }

    /// Plan with `refine` doublings of the default one, centred on the snapshot.
    pub fn default_plan(&self, refine: usize) -> Result<QuadraturePlan> {
        let (mut p, _) = default_plan(&self.family, self.t)?;
        for _ in 0..refine {
            p = p.refined();
        }
        Ok(p)
    }

    fn integrate(&self, plan: &QuadraturePlan, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
        let (xs, ws) = plan.nodes();
        let mut vals = Vec::with_capacity(xs.len());
        for (x, w) in xs.iter().zip(&ws) {
            vals.push(w * f(*x)?);
        }
        Ok(crate::quadrature::neumaier_sum(vals))
    }

    /// `Q[z, w]` in integrated form.
    pub fn quadratic_form(&self, z: &TestField, w: Option<&TestField>, plan: &QuadraturePlan) -> Result<f64> {
        self.integrate(plan, |x| {
            let zv = z(x)?;
            let wv = match w {
                Some(w) => Some(w(x)?),
                None => None,
            };
            self.quadratic_density(x, &zv, wv.as_ref())
        })
    }

    /// `⟨(z, w), 𝓛(z, w)⟩`.
    pub fn quadratic_form_applied(&self, z: &TestField, w: Option<&TestField>, plan: &QuadraturePlan) -> Result<f64> {
        self.integrate(plan, |x| {
            let zv = z(x)?;
            let wv = match w {
                Some(w) => Some(w(x)?),
                None => None,
            };
            let (r1, r2) = self.apply(x, &zv, wv.as_ref().map(|v| &v[..]))?;
            Ok(zv[0] * r1 + wv.map_or(0.0, |v| v[0] * r2))
        })
    }
}

/// `𝓛` with precomputed coefficients; see [`LinearizedOperator::apply`].
pub fn apply_coeffs(c: &Coeffs, z: &[f64], w: Option<&[f64]>) -> Result<(f64, f64)> {
    if z.len() < 5 {
        return Err(Error::InsufficientDegree { need: 4, have: z.len().saturating_sub(1) });
    }
    match c {
        Coeffs::Scalar(c) => Ok((z[4] + c.c2 * z[2] + c.c1 * z[1] + c.c0 * z[0], 0.0)),
        Coeffs::Sg(c) => {
            let w = w.ok_or_else(|| Error::Domain("SG operator needs a w component".into()))?;
            if w.len() < 3 {
                return Err(Error::InsufficientDegree { need: 2, have: w.len().saturating_sub(1) });
            }
            let r1 = z[4] - c.p * z[2] + c.q * z[1] + c.r * z[0] + c.beta0 * w[0] + c.beta1 * w[1];
            let r2 = -c.beta1 * z[1] + c.gamma0 * z[0] - w[2] + c.s * w[0];
            Ok((r1, r2))
        }
    }
}

fn x_stack(j: &Jet2) -> [f64; 5] {
    [0, 1, 2, 3, 4].map(|k| if k <= j.deg() { j.partial(0, k) } else { f64::NAN })
}

/// Residuals of the SG spectral relations at the `t = 0` snapshot:
/// `[kernel ∂x₁, kernel ∂x₂, 𝓛(ΛB, ΛB_t) − rhs]`, each a max-abs over `xs`.
pub fn sg_eigen_relations(sg: &Sg, xs: &[f64]) -> Result<[f64; 3]> {
    let fam = Family::Sg(*sg);
    let op = LinearizedOperator::for_family(&fam)?;
    let (beta, v) = (sg.beta(), sg.v());
    let (ap, bp) = (2.0 * (1.0 + v * v) * beta, -8.0 * v * beta);
    let mut out = [0.0f64; 3];
    for &x in xs {
        let j = fam.eval(0.0, x, 5)?;
        for k in 0..2 {
            let (z, w) = (j.shift(k)?, j.bt_shift(k)?);
            let (r1, r2) = op.apply_jets(x, &z, Some(&w))?;
            out[k] = out[k].max(r1.abs()).max(r2.abs());
        }
        let (lb, lbt) = sg_scaling_direction(sg, 0.0, x, 4)?;
        let (r1, r2) = op.apply_jets(x, &lb, Some(&lbt))?;
        let bt = j.bt().expect("SG");
        let e1 = ap * (j.dx(2) - j.dx(0).sin()) + 0.5 * bp * bt.partial(0, 1);
        let e2 = -ap * bt.partial(0, 0) - 0.5 * bp * j.dx(1);
        out[2] = out[2].max((r1 - e1).abs()).max((r2 - e2).abs());
    }
    Ok(out)
}

/// `(B₀, B̃₀) = −(ΛB, ΛB_t)/(2β)` as derivative stacks at `x`.
pub fn sg_b0(sg: &Sg, x: f64) -> Result<([f64; 5], [f64; 5])> {
    let (lb, lbt) = sg_scaling_direction(sg, 0.0, x, 4)?;
    let s = -0.5 / sg.beta();
    Ok((x_stack(&lb).map(|v| s * v), x_stack(&lbt).map(|v| s * v)))
}

/// Max-abs defect of `𝓛(B₀, B̃₀) = (−(1+v²)(B_xx − sin B) + 2v B_tx, (1+v²)B_t − 2v B_x)`.
pub fn sg_b0_relation(sg: &Sg, xs: &[f64]) -> Result<f64> {
    let fam = Family::Sg(*sg);
    let op = LinearizedOperator::for_family(&fam)?;
    let v = sg.v();
    let k = 1.0 + v * v;
    let mut worst = 0.0f64;
    for &x in xs {
        let j = fam.eval(0.0, x, 2)?;
        let bt = j.bt().expect("SG");
        let (z, w) = sg_b0(sg, x)?;
        let (r1, r2) = op.apply(x, &z, Some(&w))?;
        let e1 = -k * (j.dx(2) - j.dx(0).sin()) + 2.0 * v * bt.partial(0, 1);
        let e2 = k * bt.partial(0, 0) - 2.0 * v * j.dx(1);
        worst = worst.max((r1 - e1).abs()).max((r2 - e2).abs());
    }
    Ok(worst)
}

/// `Q[ΛB, ΛB_t]` by quadrature, with its closed form `−32(1+3v²)β`.
pub fn sg_scaling_form(sg: &Sg) -> Result<(f64, f64)> {
    let fam = Family::Sg(*sg);
    let op = LinearizedOperator::for_family(&fam)?;
    let plan = op.default_plan(0)?;
    let s = *sg;
    let z = move |x: f64| sg_scaling_direction(&s, 0.0, x, 4).map(|(b, _)| x_stack(&b));
    let w = move |x: f64| sg_scaling_direction(&s, 0.0, x, 4).map(|(_, b)| x_stack(&b));
    let q = op.quadratic_form(&z, Some(&w), &plan)?;
    let v = sg.v();
    Ok((q, -32.0 * (1.0 + 3.0 * v * v) * sg.beta()))
}

fn kksh_variant(k: &Kksh, db: f64, dk: f64, mode: KPartial) -> Result<Family> {
    let (x1, x2) = (0.0, 0.0);
    Ok(Family::Kksh(match mode {
        KPartial::FrozenM => Kksh::unconstrained(k.beta() + db, k.k() + dk, k.m(), x1, x2)?,
        KPartial::Resolved => Kksh::new(k.beta() + db, k.k() + dk, x1, x2)?,
    }))
}

/// `B₀# = (∂ₖa₁ ∂_βB − ∂_βa₁ ∂ₖB)/D` as an `x`-jet at the `t = 0` snapshot
/// of the unshifted periodic breather.
pub fn kksh_b0(k: &Kksh, mode: KPartial, x: f64) -> Result<Jet2> {
    let (hb, hk) = (stability::H_BETA, stability::H_K);
    let (db, dk) = stability::parameter_partials(k.beta(), k.k(), mode, hb, hk)?;
    let d = dk[0] * db[1] - dk[1] * db[0];
    let diff = |b: f64, kk: f64| -> Result<Jet2> {
        let p = kksh_variant(k, b, kk, mode)?.eval(0.0, x, 4)?;
        let m = kksh_variant(k, -b, -kk, mode)?.eval(0.0, x, 4)?;
        Ok((p.tx() - m.tx()).scale(0.5 / (b + kk)))
    };
    let bb = diff(hb, 0.0)?;
    let bk = diff(0.0, hk)?;
    Ok((&bb * dk[0] - &bk * db[0]).scale(1.0 / d))
}

/// Max-abs of `𝓛#B₀# + B` over `xs`.
pub fn kksh_b0_relation(k: &Kksh, mode: KPartial, xs: &[f64]) -> Result<f64> {
    let base = Kksh::unconstrained(k.beta(), k.k(), k.m(), 0.0, 0.0)?;
    let fam = Family::Kksh(base);
    let op = LinearizedOperator::for_family(&fam)?;
    let mut worst = 0.0f64;
    for &x in xs {
        let b0 = kksh_b0(&base, mode, x)?;
        let (r, _) = op.apply_jets(x, &b0, None)?;
        worst = worst.max((r + fam.eval(0.0, x, 0)?.value()).abs());
    }
    Ok(worst)
}
