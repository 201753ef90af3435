//! Galerkin matrices `Mᵢⱼ = ∫ fᵢ 𝓛 fⱼ`, dense symmetric eigensolves and
//! spectrum classification.

use crate::error::{domain, Error, Result};
use crate::linops::{apply_coeffs, Coeffs, LinearizedOperator, ScalarCoeffs};
use crate::quadrature::{neumaier_sum, QuadraturePlan, DRIFT_TOL};
use crate::specfun::{FourierBasis, HermiteBasis};
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use std::sync::OnceLock;

/// Pre-symmetrization asymmetry above this (relative to `max(1, ‖M‖max)`)
/// is reported as an operator or quadrature bug.
pub const ASYMMETRY_TOL: f64 = 1e-6;
pub const HERMITE_KERNEL_TOL: f64 = 0.1;
pub const FOURIER_KERNEL_TOL: f64 = 1e-5;

static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();

/// Thread cap from `BREATHER_THREADS`; unset or unparsable means rayon's default.
pub fn thread_cap() -> Option<usize> {
    std::env::var("BREATHER_THREADS").ok()?.trim().parse::<usize>().ok().filter(|&n| n > 0)
}

/// Shared worker pool honouring `BREATHER_THREADS`.
pub fn pool() -> &'static rayon::ThreadPool {
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_cap() {
            b = b.num_threads(n);
        }
        b.build().expect("thread pool")
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Basis {
    Hermite(HermiteBasis),
    Fourier(FourierBasis),
}

impl Basis {
    pub fn count(&self) -> usize {
        match self {
            Basis::Hermite(h) => h.count,
            Basis::Fourier(f) => f.count(),
        }
    }
    /// Truncation index: highest Hermite degree, or highest Fourier mode.
    pub fn order(&self) -> usize {
        match self {
            Basis::Hermite(h) => h.count.saturating_sub(1),
            Basis::Fourier(f) => f.count() / 2,
        }
    }
    fn eval(&self, x: f64) -> Vec<Vec<f64>> {
        match self {
            Basis::Hermite(h) => h.eval(x, 4),
            Basis::Fourier(f) => f.eval(x, 4),
        }
    }
    pub fn tag(&self) -> &'static str {
        match self {
            Basis::Hermite(_) => "hermite",
            Basis::Fourier(_) => "fourier",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GalerkinOperator {
    Linearized(LinearizedOperator),
    /// `d4 z⁗ + c2 z″ + c0 z`.
    Constant { d4: f64, c2: f64, c0: f64 },
}

impl GalerkinOperator {
    fn is_block(&self) -> bool {
        matches!(self, GalerkinOperator::Linearized(op) if op.is_block())
    }
    fn coeffs(&self, x: f64) -> Result<Coeffs> {
        match self {
            GalerkinOperator::Linearized(op) => op.coeffs(x),
            GalerkinOperator::Constant { c2, c0, .. } => Ok(Coeffs::Scalar(ScalarCoeffs { c2: *c2, c1: 0.0, c0: *c0 })),
        }
    }
    fn apply(&self, c: &Coeffs, z: &[f64], w: &[f64]) -> Result<(f64, f64)> {
        match self {
            GalerkinOperator::Linearized(op) => apply_coeffs(c, z, if op.is_block() { Some(w) } else { None }),
            GalerkinOperator::Constant { d4, c2, c0 } => Ok((d4 * z[4] + c2 * z[2] + c0 * z[0], 0.0)),
        }
    }
    pub fn tag(&self) -> &'static str {
        match self {
            GalerkinOperator::Linearized(op) => op.family().tag(),
            GalerkinOperator::Constant { .. } => "constant",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GalerkinProblem {
    pub operator: GalerkinOperator,
    pub basis: Basis,
    pub quadrature: QuadraturePlan,
}

/// Composite Gauss–Legendre plan for `count` Hermite functions around a
/// profile decaying at rate `beta_eff` and oscillating at `freq`.
pub fn hermite_plan(count: usize, beta_eff: f64, freq: f64) -> QuadraturePlan {
    let n = count.saturating_sub(1) as f64;
    let x = (2.0 * (n + 5.0)).sqrt() + 40.0 / beta_eff;
    let density = 8.0f64.max(4.0 * freq).max(1.2 * (4.0 * n + 18.0).sqrt());
    QuadraturePlan::line(x, 16, density)
}

/// Trapezoid plan on one period for a Fourier basis of `count` functions.
pub fn fourier_plan(period: f64, count: usize) -> QuadraturePlan {
    QuadraturePlan::torus(period, (16 * count).max(1024).next_power_of_two())
}

impl GalerkinProblem {
    /// `n + 1` Hermite functions per component (SG blocks use twice as many in total).
    pub fn hermite(op: LinearizedOperator, n: usize) -> Result<Self> {
        let fam = op.family();
        let Some(beta) = fam.decay_rate() else {
            return domain(format!("Hermite basis needs a line family, got {}", fam.tag()));
        };
        let count = n + 1;
        Ok(GalerkinProblem {
            operator: GalerkinOperator::Linearized(op),
            basis: Basis::Hermite(HermiteBasis { count }),
            quadrature: hermite_plan(count, beta, fam.spatial_frequency()),
        })
    }

    /// Hermite problem by total matrix dimension (split evenly for SG blocks).
    pub fn hermite_total(op: LinearizedOperator, dim_total: usize) -> Result<Self> {
        if op.is_block() && !dim_total.is_multiple_of(2) {
            return domain(format!("block dimension must be even, got {dim_total}"));
        }
        let per = if op.is_block() { dim_total / 2 } else { dim_total };
        if per == 0 {
            return domain("empty basis");
        }
        Self::hermite(op, per - 1)
    }

    /// `2n + 1` Fourier modes on one period of a periodic family.
    pub fn fourier(op: LinearizedOperator, n: usize) -> Result<Self> {
        let fam = op.family();
        let Some(l) = fam.period() else {
            return domain(format!("Fourier basis needs a periodic family, got {}", fam.tag()));
        };
        if op.is_block() {
            return domain("Fourier basis supports scalar operators only");
        }
        let basis = FourierBasis { period: l, n };
        Ok(GalerkinProblem { operator: GalerkinOperator::Linearized(op), basis: Basis::Fourier(basis), quadrature: fourier_plan(l, basis.count()) })
    }

    pub fn constant(d4: f64, c2: f64, c0: f64, basis: Basis, quadrature: QuadraturePlan) -> Self {
        GalerkinProblem { operator: GalerkinOperator::Constant { d4, c2, c0 }, basis, quadrature }
    }

    pub fn with_quadrature(mut self, plan: QuadraturePlan) -> Self {
        self.quadrature = plan;
        self
    }

    pub fn block(&self) -> bool {
        self.operator.is_block()
    }
    pub fn per_component(&self) -> usize {
        self.basis.count()
    }
    pub fn dim(&self) -> usize {
        self.per_component() * if self.block() { 2 } else { 1 }
    }
    pub fn default_kernel_tol(&self) -> f64 {
        match self.basis {
            Basis::Hermite(_) => HERMITE_KERNEL_TOL,
            Basis::Fourier(_) => FOURIER_KERNEL_TOL,
        }
    }

    /// Coefficients of a field in the basis: `cᵢ = ∫ fᵢ z` (and the `w` block).
    pub fn project(&self, field: &(dyn Fn(f64) -> Result<(f64, f64)> + Sync)) -> Result<Vec<f64>> {
        let (xs, ws) = self.quadrature.refined().nodes();
        let n = self.per_component();
        let mut cz = vec![Vec::with_capacity(xs.len()); n];
        let mut cw = vec![Vec::with_capacity(xs.len()); n];
        for (x, w) in xs.iter().zip(&ws) {
            let (z, v) = field(*x)?;
            let f = self.basis.eval(*x);
            for i in 0..n {
                cz[i].push(w * f[0][i] * z);
                cw[i].push(w * f[0][i] * v);
            }
        }
        let mut c: Vec<f64> = cz.into_iter().map(neumaier_sum).collect();
        if self.block() {
            c.extend(cw.into_iter().map(neumaier_sum));
        }
        Ok(c)
    }
}

/// An assembled matrix with its quality diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Assembled {
    /// Symmetrized matrix.
    pub matrix: DMatrix<f64>,
    /// `max|M − Mᵀ|` before symmetrization.
    pub asymmetry: f64,
    /// `max|M(2n nodes) − M(n nodes)| / max(1, max|M|)`.
    pub quadrature_drift: f64,
}

impl Assembled {
    /// Error if a diagnostic is out of bounds.
    pub fn check(&self) -> Result<()> {
        let scale = self.matrix.amax().max(1.0);
        if self.asymmetry > ASYMMETRY_TOL * scale {
            return Err(Error::Asymmetry(self.asymmetry));
        }
        if self.quadrature_drift > DRIFT_TOL {
            return Err(Error::Quadrature { drift: self.quadrature_drift, tol: DRIFT_TOL });
        }
        Ok(())
    }
}

fn assemble_raw(p: &GalerkinProblem, plan: &QuadraturePlan) -> Result<DMatrix<f64>> {
    let (xs, ws) = plan.nodes();
    let nq = xs.len();
    let n = p.per_component();
    let block = p.block();
    let dim = p.dim();
    // basis[q] = all derivatives of all functions at node q
    let basis: Vec<Vec<Vec<f64>>> = xs.par_iter().map(|&x| p.basis.eval(x)).collect();
    let coeffs: Vec<Coeffs> = xs.par_iter().map(|&x| p.operator.coeffs(x)).collect::<Result<_>>()?;
    // images[c] = (row-1, row-2) of 𝓛 applied to column c, at every node
    let zero = [0.0f64; 5];
    let images: Vec<(Vec<f64>, Vec<f64>)> = (0..dim)
        .into_par_iter()
        .map(|c| -> Result<(Vec<f64>, Vec<f64>)> {
            let (j, on_w) = (c % n, c >= n);
            let mut r1 = Vec::with_capacity(nq);
            let mut r2 = Vec::with_capacity(nq);
            for q in 0..nq {
                let st: [f64; 5] = [0, 1, 2, 3, 4].map(|k| basis[q][k][j]);
                let (z, w) = if on_w { (&zero, &st) } else { (&st, &zero) };
                let (a, b) = p.operator.apply(&coeffs[q], z, w)?;
                r1.push(a);
                r2.push(b);
            }
            Ok((r1, r2))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|r| {
            let (i, on_w) = (r % n, r >= n);
            (0..dim)
                .map(|c| {
                    let img = if on_w { &images[c].1 } else { &images[c].0 };
                    neumaier_sum((0..nq).map(|q| ws[q] * basis[q][0][i] * img[q]))
                })
                .collect()
        })
        .collect();
    debug_assert!(!block || dim == 2 * n);
    Ok(DMatrix::from_fn(dim, dim, |r, c| rows[r][c]))
}

/// Assemble on the problem's plan and on its doubling; the finer matrix is
/// kept, symmetrized after its asymmetry is recorded.
pub fn assemble(p: &GalerkinProblem) -> Result<Assembled> {
    pool().install(|| {
        let coarse = assemble_raw(p, &p.quadrature)?;
        let fine = assemble_raw(p, &p.quadrature.refined())?;
        let scale = fine.amax().max(1.0);
        let drift = (&fine - &coarse).amax() / scale;
        let asymmetry = (&fine - fine.transpose()).amax();
        if asymmetry > ASYMMETRY_TOL * scale {
            return Err(Error::Asymmetry(asymmetry));
        }
        let matrix = (&fine + fine.transpose()) * 0.5;
        Ok(Assembled { matrix, asymmetry, quadrature_drift: drift })
    })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Classification {
    pub n_neg: usize,
    pub kernel_dim: usize,
    pub gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns match `eigenvalues`.
    pub eigenvectors: Option<DMatrix<f64>>,
    pub kernel_tol: f64,
    pub classification: Classification,
}

impl Spectrum {
    /// Role of eigenvalue `i`: negative, kernel, gap edge or discretized continuum.
    pub fn label(&self, i: usize) -> &'static str {
        let l = self.eigenvalues[i];
        if l < -self.kernel_tol {
            "negative"
        } else if l.abs() <= self.kernel_tol {
            "kernel"
        } else if Some(l) == self.classification.gap {
            "gap"
        } else {
            "discretized-continuum"
        }
    }
}

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 100_000;

/// Dense symmetric eigensolve; eigenvalues ascending.
pub fn eig_sym(m: &DMatrix<f64>, vectors: bool, kernel_tol: f64) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::Eigen(format!("matrix is {}×{}", m.nrows(), m.ncols())));
    }
    let e = SymmetricEigen::try_new(m.clone(), EIG_EPS, EIG_MAX_ITER).ok_or_else(|| Error::Eigen("no convergence".into()))?;
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let eigenvectors = if vectors {
        let v = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| e.eigenvectors[(r, order[c])]);
        let norm = m.amax().max(f64::MIN_POSITIVE) * m.nrows() as f64;
        for (c, &l) in eigenvalues.iter().enumerate() {
            let col = v.column(c);
            let res = (m * col - col * l).amax();
            if res > 1e-9 * norm {
                return Err(Error::Eigen(format!("eigenpair {c} residual {res:e}")));
            }
        }
        Some(v)
    } else {
        None
    };
    let classification = classify(&eigenvalues, kernel_tol);
    Ok(Spectrum { eigenvalues, eigenvectors, kernel_tol, classification })
}

pub fn classify(eigenvalues: &[f64], kernel_tol: f64) -> Classification {
    let n_neg = eigenvalues.iter().filter(|&&l| l < -kernel_tol).count();
    let kernel_dim = eigenvalues.iter().filter(|&&l| l.abs() <= kernel_tol).count();
    let gap = eigenvalues.iter().copied().filter(|&l| l > kernel_tol).reduce(f64::min);
    Classification { n_neg, kernel_dim, gap }
}

/// Assemble, check diagnostics and solve.
pub fn solve(p: &GalerkinProblem, kernel_tol: Option<f64>) -> Result<(Assembled, Spectrum)> {
    let a = assemble(p)?;
    let s = eig_sym(&a.matrix, false, kernel_tol.unwrap_or_else(|| p.default_kernel_tol()))?;
    Ok((a, s))
}

/// Rayleigh quotient `cᵀMc / cᵀc`.
pub fn rayleigh(m: &DMatrix<f64>, c: &[f64]) -> f64 {
    let v = nalgebra::DVector::from_column_slice(c);
    (v.transpose() * m * &v)[(0, 0)] / v.norm_squared()
}

/// Matrix dump with header `# galerkin N=<n> family=<tag>`.
pub fn write_matrix_csv(w: &mut impl std::io::Write, p: &GalerkinProblem, m: &DMatrix<f64>) -> Result<()> {
    writeln!(w, "# galerkin N={} family={}", p.basis.order(), p.operator.tag())?;
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:.17e}", m[(r, c)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::breathers::{normal_form, Family, Kksh, Mkdv, Sg};
    use rand::{Rng, SeedableRng};

    fn mkdv_problem(alpha: f64, x1: f64, n: usize) -> GalerkinProblem {
        let f = normal_form(&Family::Mkdv(Mkdv::new(alpha, 1.0, x1, 0.0).unwrap()), 0.0).unwrap();
        GalerkinProblem::hermite(LinearizedOperator::for_family(&f).unwrap(), n).unwrap()
    }

    #[test]
    fn trivial_eigs() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        assert_eq!(eig_sym(&d, true, 0.1).unwrap().eigenvalues, vec![1.0, 2.0, 3.0]);
        let s = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = eig_sym(&s, true, 0.1).unwrap().eigenvalues;
        assert!((e[0] + 1.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trace_identity() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let a = DMatrix::from_fn(50, 50, |_, _| rng.random_range(-1.0..1.0));
        let m = (&a + a.transpose()) * 0.5;
        let e = eig_sym(&m, true, 1e-9).unwrap();
        let s: f64 = e.eigenvalues.iter().sum();
        assert!((s - m.trace()).abs() < 1e-10 * m.trace().abs().max(1.0));
        assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn classification_counts() {
        let c = classify(&[-4.0, -0.01, 0.02, 1.5, 3.0], 0.1);
        assert_eq!(c, Classification { n_neg: 1, kernel_dim: 2, gap: Some(1.5) });
        assert_eq!(classify(&[-1.0], 0.1).gap, None);
    }

    #[test]
    fn constant_operator_matches_ladder() {
        let n = 12;
        let (c2, c0) = (-1.3, 2.2);
        let p = GalerkinProblem::constant(1.0, c2, c0, Basis::Hermite(HermiteBasis { count: n }), QuadraturePlan::line(14.0, 16, 12.0));
        let a = assemble(&p).unwrap();
        let e = n + 4;
        let d = DMatrix::from_fn(e, e, |i, j| {
            let jf = j as f64;
            if i + 1 == j {
                (jf / 2.0).sqrt()
            } else if i == j + 1 {
                -((jf + 1.0) / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let d2 = &d * &d;
        let full = &d2 * &d2 + &d2 * c2 + DMatrix::identity(e, e) * c0;
        for i in 0..n {
            for j in 0..n {
                assert!((a.matrix[(i, j)] - full[(i, j)]).abs() < 1e-10, "{i},{j}");
            }
        }
    }

    #[test]
    fn free_symbol_bound() {
        let alpha: f64 = 0.5;
        let (c2, c0) = (2.0 * (alpha * alpha - 1.0), (1.0 + alpha * alpha).powi(2));
        let p = GalerkinProblem::constant(1.0, c2, c0, Basis::Hermite(HermiteBasis { count: 121 }), hermite_plan(121, 1.0, alpha));
        let (_, s) = solve(&p, None).unwrap();
        // symbol ξ⁴ − c₂ξ² + c₀ has its minimum c₀ at ξ = 0 for α < 1
        assert!(s.eigenvalues[0] >= 0.95 * c0, "{}", s.eigenvalues[0]);
    }

    #[test]
    fn torus_laplacian() {
        let l = 7.3;
        let b = FourierBasis { period: l, n: 6 };
        let p = GalerkinProblem::constant(0.0, -1.0, 0.0, Basis::Fourier(b), fourier_plan(l, b.count()));
        let (_, s) = solve(&p, Some(1e-12)).unwrap();
        let mut want = vec![0.0];
        for k in 1..=6 {
            let v = (2.0 * std::f64::consts::PI * k as f64 / l).powi(2);
            want.extend([v, v]);
        }
        for (a, b) in s.eigenvalues.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn monotone_in_n() {
        let mut prev = f64::INFINITY;
        for n in [40, 80, 120, 160] {
            let (a, s) = solve(&mkdv_problem(0.5, 0.09, n), None).unwrap();
            a.check().unwrap();
            assert!(s.eigenvalues[0] <= prev + 1e-9, "N={n}");
            prev = s.eigenvalues[0];
        }
    }

    #[test]
    fn shift_periodicity() {
        let alpha: f64 = 0.5;
        let per = 2.0 * std::f64::consts::PI / alpha;
        let a = solve(&mkdv_problem(alpha, 0.4, 60), None).unwrap().1;
        let b = solve(&mkdv_problem(alpha, 0.4 + per, 60), None).unwrap().1;
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn sg_reflection() {
        let mk = |x1| {
            let f = Family::Sg(Sg::new(0.5, 0.0, x1, 0.0).unwrap());
            solve(&GalerkinProblem::hermite_total(LinearizedOperator::for_family(&f).unwrap(), 40).unwrap(), None).unwrap().1
        };
        let (a, b) = (mk(0.3), mk(-0.3));
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn thread_count_independent() {
        let p = mkdv_problem(0.5, 0.3, 30);
        let a = assemble(&p).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = single.install(|| assemble_raw(&p, &p.quadrature.refined())).unwrap();
        assert_eq!(a.matrix, (&b + b.transpose()) * 0.5);
    }

    #[test]
    fn kernel_capture() {
        let f = Family::Mkdv(Mkdv::new(0.5, 1.0, 0.09, 0.0).unwrap());
        let mut prev = [f64::INFINITY; 2];
        for n in [120, 160] {
            let p = GalerkinProblem::hermite(LinearizedOperator::for_family(&f).unwrap(), n).unwrap();
            let a = assemble(&p).unwrap();
            for k in 0..2 {
                let c = p.project(&|x| Ok((f.eval(0.0, x, 1)?.shift(k)?.value(), 0.0))).unwrap();
                let q = rayleigh(&a.matrix, &c).abs();
                assert!(q < prev[k], "k={k}");
                prev[k] = q;
            }
        }
        assert!(prev.iter().all(|&q| q <= 1e-3), "{prev:?}");
        let kk = Family::Kksh(Kksh::new(1.0, 0.03, 0.0, 0.0).unwrap());
        let p = GalerkinProblem::fourier(LinearizedOperator::for_family(&kk).unwrap(), 40).unwrap();
        let a = assemble(&p).unwrap();
        let c = p.project(&|x| Ok((kk.eval(0.0, x, 1)?.shift(1)?.value(), 0.0))).unwrap();
        assert!(rayleigh(&a.matrix, &c).abs() <= 1e-8);
    }

    proptest::proptest! {
        #[test]
        fn classification_partitions(mut v in proptest::collection::vec(-5.0f64..5.0, 1..40), tol in 1e-6f64..0.5) {
            v.sort_by(f64::total_cmp);
            let c = classify(&v, tol);
            let above = v.iter().filter(|l| **l > tol).count();
            proptest::prop_assert_eq!(c.n_neg + c.kernel_dim + above, v.len());
            proptest::prop_assert_eq!(c.gap, v.iter().copied().find(|l| *l > tol));
        }

        #[test]
        fn eigenvalues_sorted_with_trace(seed in 0u64..1000, n in 2usize..20) {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let m = (&a + a.transpose()) * 0.5;
            let e = eig_sym(&m, false, 1e-9).unwrap().eigenvalues;
            proptest::prop_assert!(e.windows(2).all(|w| w[0] <= w[1]));
            proptest::prop_assert!((e.iter().sum::<f64>() - m.trace()).abs() < 1e-10 * n as f64);
        }
    }
}
