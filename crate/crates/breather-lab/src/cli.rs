//! Batch front end: free-form runs, parameter sweeps and named presets with
//! CSV/JSON output.

use crate::breathers::{
    self, backlund_construct, normal_form, Family, Gardner, GardnerSoliton, Kksh, Mkdv, MkdvSoliton, NonzeroMean, Sg, SgKink,
};
use crate::error::{Error, Result};
use crate::functionals::{evaluate_functional_with, stationary_residual, stationary_residual_sg, FunctionalKind};
use crate::galerkin::{self, write_matrix_csv, Assembled, GalerkinProblem, Spectrum};
use crate::linops::LinearizedOperator;
use crate::stability::{self, KPartial, StabilityReport};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "breather", version, about = "Breather profiles, variational identities and linearized spectra", args_override_self = true)]
pub struct Cli {
    /// key=value file mirroring the flags; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout if absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Stationary-equation and PDE residuals on a grid.
    #[command(args_override_self = true)]
    Residual(ResidualArgs),
    /// Conserved functionals at a list of times.
    #[command(args_override_self = true)]
    Conserved(ConservedArgs),
    /// Galerkin spectrum of the linearized operator.
    #[command(args_override_self = true)]
    Spectrum(SpectrumArgs),
    /// Leading eigenvalues over a parameter range.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Periodic-breather stability report over k (or m).
    #[command(args_override_self = true)]
    Stability(StabilityArgs),
    /// Nonzero-mean breather from the Bäcklund construction.
    #[command(args_override_self = true)]
    Backlund(BacklundArgs),
    /// Named tables.
    #[command(args_override_self = true)]
    Table(TableArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyTag {
    Mkdv,
    Gardner,
    Sg,
    Kksh,
    NonzeroMean,
    MkdvSoliton,
    GardnerSoliton,
    SgKink,
}

#[derive(Args, Debug, Clone, Default)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyTag>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub v: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x2: Option<f64>,
    /// Soliton speed.
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub q: Option<u64>,
    /// Kink centre.
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ResidualArgs {
    #[command(flatten)]
    pub fam: FamilyArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub xmin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub xmax: Option<f64>,
    /// SG pair override (kinks default to (0, 0)).
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub pde_tol: f64,
}

#[derive(Args, Debug)]
pub struct ConservedArgs {
    #[command(flatten)]
    pub fam: FamilyArgs,
    /// Comma list or a:b:step.
    #[arg(long, default_value = "0")]
    pub times: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BasisTag {
    Hermite,
    Fourier,
}

#[derive(Args, Debug, Clone, Default)]
pub struct BasisArgs {
    /// Hermite: N (N+1 functions per component); Fourier: n (2n+1 modes).
    #[arg(long)]
    pub n: Option<usize>,
    /// Total matrix dimension (Hermite; SG splits it over both components).
    #[arg(long)]
    pub dim_total: Option<usize>,
    #[arg(long, value_enum)]
    pub basis: Option<BasisTag>,
    #[arg(long)]
    pub kernel_tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub fam: FamilyArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    /// Also write the assembled matrix as CSV.
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    X1,
    X2,
    Alpha,
    Beta,
    Mu,
    V,
    K,
    M,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub fam: FamilyArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma list or a:b:step.
    #[arg(long, allow_negative_numbers = true)]
    pub range: String,
    /// Number of leading eigenvalues per row.
    #[arg(long, default_value_t = 4)]
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KPartialTag {
    FrozenM,
    Resolved,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Comma list or a:b:step of k values.
    #[arg(long)]
    pub k: Option<String>,
    /// Comma list or a:b:step of m values (alternative to k).
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long, value_enum, default_value_t = KPartialTag::FrozenM)]
    pub k_partial: KPartialTag,
}

#[derive(Args, Debug)]
pub struct BacklundArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub q: u64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig2,
    Fig4,
    Fig8,
    #[value(name = "fig14-left")]
    Fig14Left,
    #[value(name = "fig14-right")]
    Fig14Right,
    Fig20,
    Fig22,
    Fig24,
    #[value(name = "table-6-9")]
    Table69,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
}

/// Formatting rule for every numeric output cell.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if !x.is_finite() {
        format!("{x}")
    } else if x.abs() < 1e-3 {
        format!("{x:.10e}")
    } else {
        format!("{x:.10}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// A CSV artifact: `#` header lines (config echo and column definitions),
/// then a header row and data rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub title: String,
    pub config: Vec<(String, String)>,
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl Table {
    fn new(title: impl Into<String>) -> Self {
        Table { title: title.into(), ..Default::default() }
    }
    fn col(&mut self, name: &str, def: &str) {
        self.columns.push((name.into(), def.into()));
    }
    fn cfg(&mut self, k: &str, v: impl Into<String>) {
        self.config.push((k.into(), v.into()));
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# {}", self.title)?;
        let cfg: Vec<String> = self.config.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(w, "# config {}", cfg.join(" "))?;
        for (n, d) in &self.columns {
            writeln!(w, "# column {n}: {d}")?;
        }
        for n in &self.notes {
            writeln!(w, "# note {n}")?;
        }
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(self.columns.iter().map(|c| c.0.as_str()))?;
        for r in &self.rows {
            cw.write_record(r.iter().map(Cell::render))?;
        }
        cw.flush()?;
        Ok(())
    }
}

fn need(v: Option<f64>, name: &str, fam: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("--{name} is required for family {fam}")))
}

impl FamilyArgs {
    pub fn build(&self) -> Result<Family> {
        let tag = self.family.ok_or_else(|| Error::Config("--family is required".into()))?;
        let (x1, x2) = (self.x1.unwrap_or(0.0), self.x2.unwrap_or(0.0));
        let name = tag.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
        let n = name.as_str();
        Ok(match tag {
            FamilyTag::Mkdv => Family::Mkdv(Mkdv::new(need(self.alpha, "alpha", n)?, need(self.beta, "beta", n)?, x1, x2)?),
            FamilyTag::Gardner => {
                Family::Gardner(Gardner::new(need(self.alpha, "alpha", n)?, need(self.beta, "beta", n)?, need(self.mu, "mu", n)?, x1, x2)?)
            }
            FamilyTag::Sg => Family::Sg(Sg::new(need(self.beta, "beta", n)?, need(self.v, "v", n)?, x1, x2)?),
            FamilyTag::Kksh => {
                let beta = need(self.beta, "beta", n)?;
                match (self.k, self.m) {
                    (Some(k), None) => Family::Kksh(Kksh::new(beta, k, x1, x2)?),
                    (None, Some(m)) => Family::Kksh(Kksh::from_m(beta, m, x1, x2)?),
                    _ => return Err(Error::Config("kksh needs exactly one of --k, --m".into())),
                }
            }
            FamilyTag::NonzeroMean => {
                let (c1, p, q) = (need(self.c1, "c1", n)?, self.p, self.q);
                let (Some(p), Some(q)) = (p, q) else {
                    return Err(Error::Config("nonzero-mean needs --p and --q".into()));
                };
                match (self.mu, self.c2) {
                    (Some(mu), None) => Family::NonzeroMean(NonzeroMean::new(mu, c1, p, q)?),
                    (None, Some(c2)) => Family::NonzeroMean(NonzeroMean::from_speeds(c1, c2, p, q)?),
                    _ => return Err(Error::Config("nonzero-mean needs exactly one of --mu, --c2".into())),
                }
            }
            FamilyTag::MkdvSoliton => Family::MkdvSoliton(MkdvSoliton::new(need(self.c, "c", n)?)?),
            FamilyTag::GardnerSoliton => Family::GardnerSoliton(GardnerSoliton::new(need(self.c, "c", n)?, need(self.mu, "mu", n)?)?),
            FamilyTag::SgKink => Family::SgKink(SgKink::new(need(self.v, "v", n)?, self.x0.unwrap_or(0.0))?),
        })
    }
}

/// Resolved parameters, including derived constants, in a fixed order.
pub fn family_echo(f: &Family) -> Vec<(String, f64)> {
    let mut e: Vec<(&str, f64)> = Vec::new();
    let (x1, x2) = f.shifts();
    match f {
        Family::Mkdv(m) => e.extend([("alpha", m.alpha()), ("beta", m.beta()), ("delta", m.delta()), ("gamma", m.gamma())]),
        Family::Gardner(g) => e.extend([("alpha", g.alpha()), ("beta", g.beta()), ("mu", g.mu()), ("delta", g.delta()), ("gamma", g.gamma())]),
        Family::Sg(s) => e.extend([("beta", s.beta()), ("v", s.v()), ("alpha", s.alpha()), ("a", s.a()), ("b", s.b())]),
        Family::Kksh(k) => {
            let (a1, a2) = stability::coeffs_a1a2_at(k.beta(), k.k(), k.m());
            e.extend([("beta", k.beta()), ("k", k.k()), ("m", k.m()), ("alpha", k.alpha()), ("L", k.period()), ("a1", a1), ("a2", a2)])
        }
        Family::NonzeroMean(n) => {
            let (p, q) = n.pq();
            e.extend([("mu", n.mu()), ("c1", n.c1()), ("c2", n.c2()), ("p", p as f64), ("q", q as f64), ("L", n.period())])
        }
        Family::MkdvSoliton(s) => e.push(("c", s.c())),
        Family::GardnerSoliton(s) => e.extend([("c", s.c()), ("mu", s.mu())]),
        Family::SgKink(k) => e.push(("v", k.v())),
    }
    if f.is_breather() || matches!(f, Family::SgKink(_)) {
        e.extend([("x1", x1), ("x2", x2)]);
    }
    e.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn echo_family(t: &mut Table, f: &Family) {
    t.cfg("family", f.tag());
    for (k, v) in family_echo(f) {
        t.cfg(&k, num(v));
    }
}

/// Comma list or `a:b:step` (inclusive, step count rounded).
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("bad range '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        let (a, b, h) = (v[0], v[1], v[2]);
        if !(h > 0.0) || b < a {
            return Err(bad());
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + i as f64 * h).collect());
    }
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    if v.is_empty() {
        return Err(bad());
    }
    Ok(v)
}

fn grid(n: usize, a: f64, b: f64) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Outcome of one command: a table plus whether a numerical-quality limit
/// was breached.
pub struct Outcome {
    pub table: Table,
    pub json: Option<serde_json::Value>,
    pub quality_failure: Option<String>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Outcome { table, json: None, quality_failure: None }
    }
}

pub fn residual(a: &ResidualArgs) -> Result<Outcome> {
    let f = a.fam.build()?;
    let (lo, hi) = match f.period() {
        Some(l) => (a.xmin.unwrap_or(0.0), a.xmax.unwrap_or(l)),
        None => (a.xmin.unwrap_or(-10.0), a.xmax.unwrap_or(10.0)),
    };
    let xs = grid(a.grid, lo, hi);
    let r = match (a.a, a.b) {
        (None, None) => stationary_residual(&f, &xs, a.t)?,
        (aa, bb) => {
            let (da, db) = match &f {
                Family::Sg(s) => (s.a(), s.b()),
                _ => (0.0, 0.0),
            };
            stationary_residual_sg(&f, aa.unwrap_or(da), bb.unwrap_or(db), &xs, a.t)?
        }
    };
    let mut pde = 0.0f64;
    for &x in &xs {
        pde = pde.max(breathers::pde_residual(&f, a.t, x)?.abs());
    }
    let mut t = Table::new("breather residual");
    echo_family(&mut t, &f);
    t.cfg("t", num(a.t));
    t.cfg("grid", a.grid.to_string());
    t.cfg("xmin", num(lo));
    t.cfg("xmax", num(hi));
    t.col("quantity", "residual name");
    t.col("value", "max over grid; stationary residuals relative to the largest term per point, PDE residual absolute");
    t.rows.push(vec![Cell::Text("stationary".into()), Cell::Num(r.primary)]);
    if let Some(s) = r.secondary {
        t.rows.push(vec![Cell::Text("stationary-second".into()), Cell::Num(s)]);
    }
    t.rows.push(vec![Cell::Text("pde".into()), Cell::Num(pde)]);
    let worst = r.primary.max(r.secondary.unwrap_or(0.0));
    let quality_failure = if worst > a.tol {
        Some(format!("stationary residual {worst:e} > {:e}", a.tol))
    } else if pde > a.pde_tol {
        Some(format!("PDE residual {pde:e} > {:e}", a.pde_tol))
    } else {
        None
    };
    Ok(Outcome { table: t, json: None, quality_failure })
}

const ALL_KINDS: [FunctionalKind; 8] = [
    FunctionalKind::Mass,
    FunctionalKind::Energy,
    FunctionalKind::Momentum,
    FunctionalKind::FMkdv,
    FunctionalKind::FGardner,
    FunctionalKind::FSg,
    FunctionalKind::FNonzero,
    FunctionalKind::Lyapunov,
];

pub fn conserved(a: &ConservedArgs) -> Result<Outcome> {
    let f = a.fam.build()?;
    let times = parse_range(&a.times)?;
    let mut t = Table::new("breather conserved");
    echo_family(&mut t, &f);
    t.cfg("times", a.times.clone());
    t.col("t", "time");
    t.col("functional", "functional name");
    t.col("value", "integral over the line, or over one period for periodic families");
    t.col("drift", "relative change of the value under quadrature node doubling");
    t.col("deviation", "value minus its value at the first time");
    let mut quality = None;
    for kind in ALL_KINDS {
        let mut first = None;
        for &tt in &times {
            let (v, d) = match evaluate_functional_with(kind, &f, tt) {
                Ok(v) => v,
                Err(Error::Domain(_)) => break,
                Err(e @ Error::Quadrature { .. }) => {
                    quality.get_or_insert_with(|| e.to_string());
                    (f64::NAN, f64::NAN)
                }
                Err(e) => return Err(e),
            };
            let v0 = *first.get_or_insert(v);
            t.rows.push(vec![Cell::Num(tt), Cell::Text(kind.tag().into()), Cell::Num(v), Cell::Num(d), Cell::Num(v - v0)]);
        }
    }
    Ok(Outcome { table: t, json: None, quality_failure: quality })
}

/// Galerkin problem for a family at its `t = 0` normal form.
pub fn build_problem(f: &Family, b: &BasisArgs) -> Result<GalerkinProblem> {
    let nf = normal_form(f, 0.0).unwrap_or(*f);
    let op = LinearizedOperator::for_family(&nf)?;
    let basis = b.basis.unwrap_or(if nf.period().is_some() { BasisTag::Fourier } else { BasisTag::Hermite });
    match basis {
        BasisTag::Fourier => GalerkinProblem::fourier(op, b.n.unwrap_or(40)),
        BasisTag::Hermite => match (b.n, b.dim_total) {
            (Some(_), Some(_)) => Err(Error::Config("give --n or --dim-total, not both".into())),
            (_, Some(d)) => GalerkinProblem::hermite_total(op, d),
            (n, None) => GalerkinProblem::hermite(op, n.unwrap_or(if op.is_block() { 24 } else { 160 })),
        },
    }
}

fn problem_echo(t: &mut Table, p: &GalerkinProblem, tol: f64) {
    t.cfg("basis", p.basis.tag());
    t.cfg("N", p.basis.order().to_string());
    t.cfg("dim", p.dim().to_string());
    t.cfg("kernel_tol", num(tol));
    t.cfg("quadrature_nodes", p.quadrature.len().to_string());
}

fn quality(a: &Assembled) -> Option<String> {
    a.check().err().map(|e| e.to_string())
}

#[derive(Serialize)]
struct SpectrumJson<'a> {
    config: BTreeMap<String, serde_json::Value>,
    eigenvalues: &'a [f64],
    classification: galerkin::Classification,
    diagnostics: Diagnostics,
}

#[derive(Serialize)]
struct Diagnostics {
    asymmetry: f64,
    quadrature_drift: f64,
}

pub fn spectrum(a: &SpectrumArgs) -> Result<Outcome> {
    let f = a.fam.build()?;
    let p = build_problem(&f, &a.basis)?;
    let (asm, s) = galerkin::solve(&p, a.basis.kernel_tol)?;
    if let Some(path) = &a.dump_matrix {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_matrix_csv(&mut w, &p, &asm.matrix)?;
        w.flush()?;
    }
    let mut t = Table::new("breather spectrum");
    echo_family(&mut t, &f);
    problem_echo(&mut t, &p, s.kernel_tol);
    t.cfg("asymmetry", num(asm.asymmetry));
    t.cfg("quadrature_drift", num(asm.quadrature_drift));
    let c = s.classification;
    t.cfg("n_neg", c.n_neg.to_string());
    t.cfg("kernel_dim", c.kernel_dim.to_string());
    t.cfg("gap", c.gap.map_or("none".into(), num));
    t.col("index", "1-based position in ascending order");
    t.col("eigenvalue", "Galerkin eigenvalue of the linearized operator");
    t.col("label", "negative | kernel (|lambda| <= kernel_tol) | gap | discretized-continuum");
    for (i, l) in s.eigenvalues.iter().enumerate() {
        t.rows.push(vec![Cell::Int(i as i64 + 1), Cell::Num(*l), Cell::Text(s.label(i).into())]);
    }
    let config: BTreeMap<String, serde_json::Value> = t
        .config
        .iter()
        .map(|(k, v)| (k.clone(), v.parse::<f64>().map(serde_json::Value::from).unwrap_or_else(|_| serde_json::Value::from(v.clone()))))
        .collect();
    let json = serde_json::to_value(SpectrumJson {
        config,
        eigenvalues: &s.eigenvalues,
        classification: c,
        diagnostics: Diagnostics { asymmetry: asm.asymmetry, quadrature_drift: asm.quadrature_drift },
    })?;
    Ok(Outcome { table: t, json: Some(json), quality_failure: quality(&asm) })
}

fn with_param(base: &FamilyArgs, p: SweepParam, v: f64) -> FamilyArgs {
    let mut f = base.clone();
    match p {
        SweepParam::X1 => f.x1 = Some(v),
        SweepParam::X2 => f.x2 = Some(v),
        SweepParam::Alpha => f.alpha = Some(v),
        SweepParam::Beta => f.beta = Some(v),
        SweepParam::Mu => f.mu = Some(v),
        SweepParam::V => f.v = Some(v),
        SweepParam::K => {
            f.k = Some(v);
            f.m = None;
        }
        SweepParam::M => {
            f.m = Some(v);
            f.k = None;
        }
    }
    f
}

struct SpectralRow {
    family: Family,
    problem: GalerkinProblem,
    assembled: Assembled,
    spectrum: Spectrum,
}

fn spectral_row(f: &Family, b: &BasisArgs) -> Result<SpectralRow> {
    let problem = build_problem(f, b)?;
    let (assembled, spectrum) = galerkin::solve(&problem, b.kernel_tol)?;
    Ok(SpectralRow { family: *f, problem, assembled, spectrum })
}

fn is_validation(e: &Error) -> bool {
    matches!(e, Error::Domain(_) | Error::Config(_) | Error::NoRoot(_) | Error::DegreeMismatch(..) | Error::InsufficientDegree { .. })
}

/// Eigenvalue table over a list of family configurations; rows that fail
/// validation are kept with an `error` note so tables keep their shape.
fn spectral_table(
    title: &str,
    key: &str,
    points: &[(f64, FamilyArgs)],
    b: &BasisArgs,
    count: usize,
    t_cfg: impl FnOnce(&mut Table),
) -> Result<Outcome> {
    let mut t = Table::new(title);
    t_cfg(&mut t);
    let mut derived_cols: Vec<String> = Vec::new();
    let mut first_problem = None;
    let mut rows = Vec::new();
    let mut quality_failure = None;
    for (v, fa) in points {
        let res = fa.build().and_then(|f| spectral_row(&f, b));
        match res {
            Ok(r) => {
                if first_problem.is_none() {
                    first_problem = Some((r.problem.clone(), r.spectrum.kernel_tol));
                }
                if let Some(q) = quality(&r.assembled) {
                    quality_failure.get_or_insert(q);
                }
                rows.push((*v, Ok(r)));
            }
            Err(e) if is_validation(&e) => rows.push((*v, Err(e.to_string()))),
            Err(e) => return Err(e),
        }
    }
    if let Some((p, tol)) = &first_problem {
        problem_echo(&mut t, p, *tol);
    }
    // derived quantities worth a column: those that vary across rows
    if let Some((_, Ok(r))) = rows.iter().find(|r| r.1.is_ok()) {
        if let Family::Kksh(_) = r.family {
            derived_cols = vec!["m".into(), "alpha".into(), "L".into()];
        }
    }
    t.col(key, "swept parameter");
    derived_cols.retain(|d| d != key);
    for d in &derived_cols {
        t.col(d, "derived parameter of the periodic breather");
    }
    for i in 1..=count {
        t.col(&format!("lambda{i}"), &format!("{i}-th smallest Galerkin eigenvalue"));
    }
    t.col("n_neg", "eigenvalues below -kernel_tol");
    t.col("kernel_dim", "eigenvalues with |lambda| <= kernel_tol");
    t.col("gap", "smallest eigenvalue above kernel_tol");
    t.col("asymmetry", "max |M - M^T| before symmetrization");
    t.col("quadrature_drift", "relative matrix change under node doubling");
    t.col("error", "validation error for this row, empty if none");
    for (v, r) in rows {
        let mut row = vec![Cell::Num(v)];
        match r {
            Ok(r) => {
                let echo: BTreeMap<String, f64> = family_echo(&r.family).into_iter().collect();
                for d in &derived_cols {
                    row.push(echo.get(d).map_or(Cell::Empty, |x| Cell::Num(*x)));
                }
                for i in 0..count {
                    row.push(r.spectrum.eigenvalues.get(i).map_or(Cell::Empty, |x| Cell::Num(*x)));
                }
                let c = r.spectrum.classification;
                row.extend([
                    Cell::Int(c.n_neg as i64),
                    Cell::Int(c.kernel_dim as i64),
                    c.gap.map_or(Cell::Empty, Cell::Num),
                    Cell::Num(r.assembled.asymmetry),
                    Cell::Num(r.assembled.quadrature_drift),
                    Cell::Empty,
                ]);
            }
            Err(msg) => {
                row.extend((0..derived_cols.len() + count + 5).map(|_| Cell::Empty));
                row.push(Cell::Text(msg));
            }
        }
        t.rows.push(row);
    }
    Ok(Outcome { table: t, json: None, quality_failure })
}

pub fn sweep(a: &SweepArgs) -> Result<Outcome> {
    let tag = a.fam.family.ok_or_else(|| Error::Config("--family is required".into()))?;
    let values = parse_range(&a.range)?;
    let key = a.param.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let points: Vec<(f64, FamilyArgs)> = values.iter().map(|&v| (v, with_param(&a.fam, a.param, v))).collect();
    // validate the fixed parameters up front
    points[0].1.build()?;
    let fam_name = tag.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let base = points[0].1.build()?;
    spectral_table("breather sweep", &key, &points, &a.basis, a.count, |t| {
        t.cfg("family", fam_name);
        for (k, v) in family_echo(&base) {
            if k != key {
                t.cfg(&k, num(v));
            }
        }
        t.cfg("param", key.clone());
        t.cfg("range", a.range.clone());
    })
}

fn k_partial(t: KPartialTag) -> KPartial {
    match t {
        KPartialTag::FrozenM => KPartial::FrozenM,
        KPartialTag::Resolved => KPartial::Resolved,
    }
}

pub fn stability_table(beta: f64, ks: &[f64], mode: KPartial) -> Result<Table> {
    let reports: Vec<Result<StabilityReport>> = galerkin::pool().install(|| ks.par_iter().map(|&k| stability::stability_report(beta, k, mode)).collect());
    let mut t = Table::new("breather stability");
    t.cfg("beta", num(beta));
    t.cfg("k_partial", if mode == KPartial::FrozenM { "frozen-m" } else { "resolved" });
    t.cfg("h_beta", num(stability::H_BETA));
    t.cfg("h_k", num(stability::H_K));
    for (n, d) in [
        ("beta", "scaling parameter"),
        ("k", "elliptic parameter of the periodic breather"),
        ("m", "elliptic parameter from the commensurability condition"),
        ("alpha", "derived oscillation parameter"),
        ("L", "spatial period"),
        ("mass", "periodic mass over one period"),
        ("a1", "first variational coefficient"),
        ("a2", "second variational coefficient"),
        ("D", "discriminant of the (a1, a2) parameter map"),
        ("HG", "Weinstein-type sign quantity"),
        ("verdict", "stable-candidate (D > 0, HG > 0) | unstable-candidate | degenerate"),
    ] {
        t.col(n, d);
    }
    for r in reports {
        let r = r?;
        t.rows.push(vec![
            Cell::Num(r.beta),
            Cell::Num(r.k),
            Cell::Num(r.m),
            Cell::Num(r.alpha),
            Cell::Num(r.l),
            Cell::Num(r.mass),
            Cell::Num(r.a1),
            Cell::Num(r.a2),
            Cell::Num(r.d),
            Cell::Num(r.hg),
            Cell::Text(r.verdict.as_str().into()),
        ]);
    }
    Ok(t)
}

pub fn stability_cmd(a: &StabilityArgs) -> Result<Outcome> {
    let ks = match (&a.k, &a.m) {
        (Some(k), None) => parse_range(k)?,
        (None, Some(m)) => parse_range(m)?.into_iter().map(stability::commensurate_k).collect::<Result<_>>()?,
        _ => return Err(Error::Config("stability needs exactly one of --k, --m".into())),
    };
    Ok(stability_table(a.beta, &ks, k_partial(a.k_partial))?.into())
}

pub fn backlund(a: &BacklundArgs) -> Result<Outcome> {
    let mu = match (a.mu, a.c2) {
        (Some(mu), None) => mu,
        (None, Some(c2)) => NonzeroMean::from_speeds(a.c1, c2, a.p, a.q)?.mu(),
        _ => return Err(Error::Config("backlund needs exactly one of --mu, --c2".into())),
    };
    let f = backlund_construct(mu, a.c1, a.p, a.q)?;
    let Family::NonzeroMean(n) = f else { unreachable!("construction yields a nonzero-mean breather") };
    let xs = grid(64, 0.0, n.period());
    let (mut r1, mut r2, mut perm) = (0.0f64, 0.0f64, 0.0f64);
    for &x in &xs {
        for tt in [0.0, 0.3] {
            if breathers::near_pole(&n, tt, x) {
                continue;
            }
            r1 = r1.max(breathers::backlund_residual(&n, 0, tt, x)?.abs());
            r2 = r2.max(breathers::backlund_residual(&n, 1, tt, x)?.abs());
            perm = perm.max((breathers::permutability_profile(&n, tt, x)? - f.eval(tt, x, 0)?.value()).abs());
        }
    }
    let per = breathers::periodicity_check(&f)?;
    let stat = stationary_residual(&f, &xs, 0.0)?.primary;
    let mut t = Table::new("breather backlund");
    echo_family(&mut t, &f);
    t.col("quantity", "check name");
    t.col("value", "max-abs over one period at t in {0, 0.3}, component poles excluded; stationary residual relative");
    for (q, v) in [("backlund-1", r1), ("backlund-2", r2), ("permutability", perm), ("periodicity", per), ("stationary", stat)] {
        t.rows.push(vec![Cell::Text(q.into()), Cell::Num(v)]);
    }
    let worst = r1.max(r2).max(perm).max(per).max(stat);
    let quality_failure = (worst > a.tol).then(|| format!("Bäcklund check {worst:e} > {:e}", a.tol));
    Ok(Outcome { table: t, json: None, quality_failure })
}

fn mk(family: FamilyTag) -> FamilyArgs {
    FamilyArgs { family: Some(family), ..Default::default() }
}

/// Parameter sets of the named tables.
#[allow(clippy::approx_constant)]
pub fn preset(p: Preset) -> Result<Outcome> {
    let hermite = |n: usize| BasisArgs { n: Some(n), ..Default::default() };
    let total = |d: usize| BasisArgs { dim_total: Some(d), ..Default::default() };
    let fourier = |n: usize| BasisArgs { n: Some(n), basis: Some(BasisTag::Fourier), ..Default::default() };
    let name = p.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let title = format!("breather table preset={name}");
    let mkdv = |alpha: f64, x1s: &[f64]| -> Vec<(f64, FamilyArgs)> {
        x1s.iter()
            .map(|&x1| (x1, FamilyArgs { alpha: Some(alpha), beta: Some(1.0), x1: Some(x1), ..mk(FamilyTag::Mkdv) }))
            .collect()
    };
    let kksh = |ks: &[f64]| -> Vec<(f64, FamilyArgs)> {
        ks.iter().map(|&k| (k, FamilyArgs { beta: Some(1.0), k: Some(k), x1: Some(0.1), ..mk(FamilyTag::Kksh) })).collect()
    };
    match p {
        Preset::Fig2 => spectral_table(&title, "x1", &mkdv(0.5, &[0.09, 0.81, 1.53, 2.15, 3.14]), &hermite(160), 4, |t| {
            t.cfg("family", "mkdv");
            t.cfg("alpha", num(0.5));
            t.cfg("beta", num(1.0));
        }),
        Preset::Fig4 => spectral_table(&title, "x1", &mkdv(1.5, &[0.0, 0.99, 1.57, 2.51, 3.14]), &hermite(164), 4, |t| {
            t.cfg("family", "mkdv");
            t.cfg("alpha", num(1.5));
            t.cfg("beta", num(1.0));
        }),
        Preset::Fig8 => {
            let mut out: Option<Outcome> = None;
            for mu in [0.01, 0.1] {
                let pts: Vec<(f64, FamilyArgs)> = (-4..=4)
                    .map(|i| {
                        let x1 = i as f64 * 0.01;
                        (x1, FamilyArgs { alpha: Some(0.5), beta: Some(1.0), mu: Some(mu), x1: Some(x1), ..mk(FamilyTag::Gardner) })
                    })
                    .collect();
                let o = spectral_table(&title, "x1", &pts, &hermite(50), 4, |t| {
                    t.cfg("family", "gardner");
                    t.cfg("alpha", num(0.5));
                    t.cfg("beta", num(1.0));
                    t.cfg("mu", "0.01,0.1");
                })?;
                out = Some(match out {
                    None => prepend_column(o, "mu", "Gardner mean parameter", mu),
                    Some(mut acc) => {
                        let o = prepend_column(o, "mu", "", mu);
                        acc.table.rows.extend(o.table.rows);
                        acc.quality_failure = acc.quality_failure.or(o.quality_failure);
                        acc
                    }
                });
            }
            Ok(out.expect("two blocks"))
        }
        Preset::Fig14Left => {
            let pts: Vec<(f64, FamilyArgs)> = (0..=7)
                .map(|i| {
                    let v = i as f64 * 0.1;
                    (v, FamilyArgs { beta: Some(0.5), v: Some(v), x1: Some(0.1), ..mk(FamilyTag::Sg) })
                })
                .collect();
            spectral_table(&title, "v", &pts, &total(50), 4, |t| {
                t.cfg("family", "sg");
                t.cfg("beta", num(0.5));
                t.cfg("x1", num(0.1));
                t.cfg("x2", "0");
            })
        }
        Preset::Fig14Right => {
            let pts: Vec<(f64, FamilyArgs)> = (-4..=3)
                .map(|i| {
                    let x1 = i as f64 * 0.1;
                    (x1, FamilyArgs { beta: Some(0.8), v: Some(0.7), x1: Some(x1), ..mk(FamilyTag::Sg) })
                })
                .collect();
            spectral_table(&title, "x1", &pts, &total(50), 4, |t| {
                t.cfg("family", "sg");
                t.cfg("beta", num(0.8));
                t.cfg("v", num(0.7));
                t.cfg("x2", "0");
            })
        }
        Preset::Fig20 => {
            let ks: Vec<f64> = (0..8).map(|i| 0.058836240 + 2e-9 * i as f64).collect();
            spectral_table(&title, "k", &kksh(&ks), &fourier(40), 4, kksh_cfg)
        }
        Preset::Fig22 => spectral_table(&title, "k", &kksh(&[0.01, 0.02, 0.03, 0.04, 0.05]), &fourier(50), 4, kksh_cfg),
        Preset::Fig24 => {
            let ks: Vec<f64> = (0..10).map(|i| 0.0095 - 0.001 * i as f64).collect();
            spectral_table(&title, "k", &kksh(&ks), &fourier(50), 4, kksh_cfg)
        }
        Preset::Table69 => {
            let pair = stability::commensurability_from_m(1.0, 0.5)?;
            let pts = vec![(0.5, FamilyArgs { beta: Some(1.0), m: Some(0.5), ..mk(FamilyTag::Kksh) })];
            let mut o = spectral_table(&title, "m", &pts, &fourier(40), 4, |t| {
                t.cfg("family", "kksh");
                t.cfg("beta", num(1.0));
                t.cfg("k", num(pair.k));
            })?;
            o.table.notes.push("k solved from the commensurability condition at m = 0.5".into());
            Ok(o)
        }
    }
}

fn kksh_cfg(t: &mut Table) {
    t.cfg("family", "kksh");
    t.cfg("beta", num(1.0));
    t.cfg("x1", num(0.1));
    t.cfg("x2", "0");
}

fn prepend_column(mut o: Outcome, name: &str, def: &str, v: f64) -> Outcome {
    o.table.columns.insert(0, (name.into(), def.into()));
    for r in &mut o.table.rows {
        r.insert(0, Cell::Num(v));
    }
    o
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Residual(a) => residual(a),
        Command::Conserved(a) => conserved(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Sweep(a) => sweep(a),
        Command::Stability(a) => stability_cmd(a),
        Command::Backlund(a) => backlund(a),
        Command::Table(a) => preset(a.preset),
    }
}

/// Parse a key=value config file into `--key value` pairs.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("config line {}: expected key=value", i + 1)))?;
        let k = k.trim().replace('_', "-");
        if k.is_empty() {
            return Err(Error::Config(format!("config line {}: empty key", i + 1)));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Splice config-file entries in front of the command-line flags so that
/// flags win.
pub fn expand_args(args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            path = args.get(i + 1).cloned();
            break;
        }
        if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            break;
        }
        i += 1;
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read config {path}: {e}")))?;
    let mut entries = parse_config(&text)?;
    let mut command = None;
    entries.retain(|(k, v)| {
        if k == "command" {
            command = Some(v.clone());
            false
        } else {
            true
        }
    });
    let mut rest: Vec<String> = args[1..].to_vec();
    let has_cmd = rest.first().is_some_and(|a| !a.starts_with('-'));
    if !has_cmd {
        let c = command.ok_or_else(|| Error::Config("no command given on the command line or in the config file".into()))?;
        rest.insert(0, c);
    }
    let mut out = vec![args[0].clone(), rest[0].clone()];
    for (k, v) in entries {
        out.push(format!("--{k}"));
        out.push(v);
    }
    out.extend(rest.into_iter().skip(1));
    Ok(out)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Quadrature { .. } | Error::Asymmetry(_) | Error::Eigen(_) | Error::Singular(_) | Error::Degenerate(_) => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

fn emit(cli: &Cli, o: &Outcome) -> Result<()> {
    let ext_json = cli.out.as_ref().and_then(|p| p.extension()).is_some_and(|e| e == "json");
    let json = match cli.format {
        Some(Format::Json) => true,
        Some(Format::Csv) => false,
        None => ext_json,
    };
    let mut buf = Vec::new();
    if json {
        let v = o.json.as_ref().ok_or_else(|| Error::Config("JSON output is available for `spectrum` only".into()))?;
        serde_json::to_writer_pretty(&mut buf, v)?;
        buf.push(b'\n');
    } else {
        o.table.write_csv(&mut buf)?;
    }
    match &cli.out {
        Some(p) => std::fs::write(p, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

/// Run with explicit arguments (including the program name); returns the exit code.
pub fn run(args: Vec<String>) -> i32 {
    let args = match expand_args(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match dispatch(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cfg: Vec<String> = outcome.table.config.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!("resolved config: {}", cfg.join(" "));
    if let Err(e) = emit(&cli, &outcome) {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    match &outcome.quality_failure {
        Some(msg) => {
            eprintln!("numerical-quality failure: {msg}");
            EXIT_NUMERICAL
        }
        None => EXIT_OK,
    }
}
