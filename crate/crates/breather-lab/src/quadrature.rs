//! Composite Gauss–Legendre rules on the line and trapezoid rules on the torus.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Compensated sum in a fixed order, so results do not depend on threading.
pub fn neumaier_sum(it: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in it {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

#[derive(Clone, Debug, PartialEq)]
pub enum QuadraturePlan {
    Line { a: f64, b: f64, panels: usize, order: usize },
    Torus { period: f64, nodes: usize },
}

pub const DRIFT_TOL: f64 = 1e-9;

impl QuadraturePlan {
    /// `[−X, X]` with `order`-point panels at roughly `density` nodes per unit.
    pub fn line(half_width: f64, order: usize, density: f64) -> Self {
        Self::interval(-half_width, half_width, order, density)
    }

    pub fn interval(a: f64, b: f64, order: usize, density: f64) -> Self {
        let panels = (((b - a) * density) / order as f64).ceil().max(1.0) as usize;
        QuadraturePlan::Line { a, b, panels, order }
    }

    pub fn torus(period: f64, nodes: usize) -> Self {
        QuadraturePlan::Torus { period, nodes }
    }

    /// Default plan for a line family: `X = 30/β + |x₂| + 10`, 16-point panels.
    pub fn for_line(beta_eff: f64, x2: f64, density: f64) -> Self {
        Self::line(30.0 / beta_eff + x2.abs() + 10.0, 16, density.max(8.0))
    }

    pub fn refined(&self) -> Self {
        match *self {
            QuadraturePlan::Line { a, b, panels, order } => QuadraturePlan::Line { a, b, panels: 2 * panels, order },
            QuadraturePlan::Torus { period, nodes } => QuadraturePlan::Torus { period, nodes: 2 * nodes },
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            QuadraturePlan::Line { panels, order, .. } => panels * order,
            QuadraturePlan::Torus { nodes, .. } => nodes,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        match *self {
            QuadraturePlan::Line { a, b, panels, order } => {
                let (g, gw) = gauss_legendre(order);
                let h = (b - a) / panels as f64;
                let mut xs = Vec::with_capacity(panels * order);
                let mut ws = Vec::with_capacity(panels * order);
                for p in 0..panels {
                    let c = a + (p as f64 + 0.5) * h;
                    for (t, w) in g.iter().zip(&gw) {
                        xs.push(c + 0.5 * h * t);
                        ws.push(0.5 * h * w);
                    }
                }
                (xs, ws)
            }
            QuadraturePlan::Torus { period, nodes } => {
                let h = period / nodes as f64;
                ((0..nodes).map(|i| i as f64 * h).collect(), vec![h; nodes])
            }
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let (xs, ws) = self.nodes();
        neumaier_sum(xs.iter().zip(&ws).map(|(&x, &w)| w * f(x)))
    }

    /// Integrate and check that doubling the nodes moves the value by less
    /// than `DRIFT_TOL` relative to `∫|f|`.
    pub fn integrate_verified(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let (v, _) = self.integrate_with_drift(&f)?;
        Ok(v)
    }

    pub fn integrate_with_drift(&self, f: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
        let coarse = self.integrate(&f);
        let fine_plan = self.refined();
        let fine = fine_plan.integrate(&f);
        let scale = fine_plan.integrate(|x| f(x).abs()).max(f64::MIN_POSITIVE);
        let drift = (fine - coarse).abs() / scale;
        if drift > DRIFT_TOL {
            return Err(Error::Quadrature { drift, tol: DRIFT_TOL });
        }
        Ok((fine, drift))
    }
}
