//! Batch front end: `check`, `run` and `gn` driven by one JSON document.
//!
//! Exit codes: 0 success, 1 a checked condition failed, 2 configuration or
//! input error, 3 linear solver failure, 4 blow-up flag.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{bmo_norm, gn_global_ratio, gn_terms, BallFamily, GnWeights};
use crate::error::{LabError, Result};
use crate::grid::{BoundaryKind, Grid, GridFunction};
use crate::model::{
    check_growth, check_uniform_ellipticity, check_weight_condition, max_admissible_p,
    ratio_report, structural_constants, xi_samples, BuiltinModel, ConditionId, ConditionReport,
    ModelSpec, SampleBox, Witness,
};
use crate::scheme::{default_p_energy, iterate, IterationStatus, SchemeConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONDITION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_BLOWUP: i32 = 4;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Checked against `extents.len()` when given.
    #[serde(default)]
    pub dim: Option<usize>,
    pub extents: Vec<f64>,
    pub shape: Vec<usize>,
    /// One entry per component, or a single entry for all of them.
    #[serde(default = "default_bc")]
    pub bc: Vec<BoundaryKind>,
}

fn default_bc() -> Vec<BoundaryKind> {
    vec![BoundaryKind::Neumann]
}

impl GridSpec {
    pub fn build(&self, m: usize) -> Result<Grid> {
        if let Some(d) = self.dim {
            if d != self.extents.len() {
                return Err(LabError::Config(format!(
                    "grid.dim = {d} but {} extents given",
                    self.extents.len()
                )));
            }
        }
        let bc = match self.bc.len() {
            1 => vec![self.bc[0]; m],
            k if k == m => self.bc.clone(),
            k => {
                return Err(LabError::Config(format!(
                    "{k} boundary conditions for {m} components"
                )))
            }
        };
        Ok(Grid::new(&self.extents, &self.shape)?.with_bc(bc))
    }

    /// The same box with every spacing halved.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            shape: self.shape.iter().map(|n| 2 * (n - 1) + 1).collect(),
            ..self.clone()
        }
    }
}

/// Initial data `U₀`; every vector holds one entry per component or a
/// single entry for all of them.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Constant {
        value: Vec<f64>,
    },
    /// `offset + amplitude · Π_d cos(k π x_d / L_d)`.
    Cosine {
        #[serde(default)]
        offset: Vec<f64>,
        amplitude: Vec<f64>,
        #[serde(default = "one")]
        wavenumber: f64,
    },
    /// `offset + amplitude · Π_d sin(k π x_d / L_d)`.
    Sine {
        #[serde(default)]
        offset: Vec<f64>,
        amplitude: Vec<f64>,
        #[serde(default = "one")]
        wavenumber: f64,
    },
    /// `offset + height · exp(−|x − center|² / width²)`.
    Bump {
        #[serde(default)]
        offset: Vec<f64>,
        height: Vec<f64>,
        center: Vec<f64>,
        width: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn component(v: &[f64], c: usize) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        _ => v[c],
    }
}

impl InitialSpec {
    pub fn build(&self, grid: Arc<Grid>, m: usize) -> Result<GridFunction> {
        let lens: Vec<usize> = match self {
            InitialSpec::Constant { value } => vec![value.len().max(1)],
            InitialSpec::Cosine {
                offset, amplitude, ..
            }
            | InitialSpec::Sine {
                offset, amplitude, ..
            } => {
                vec![offset.len(), amplitude.len()]
            }
            InitialSpec::Bump { offset, height, .. } => vec![offset.len(), height.len()],
        };
        if lens.iter().any(|&l| l > 1 && l != m) {
            return Err(LabError::Config(format!(
                "initial data vectors must have 1 or {m} entries"
            )));
        }
        let dim = grid.dim();
        let ext = grid.extents().to_vec();
        let org = grid.origin().to_vec();
        let field = match self.clone() {
            InitialSpec::Constant { value } => GridFunction::from_fn(grid, m, |_, out| {
                for (c, o) in out.iter_mut().enumerate() {
                    *o = component(&value, c);
                }
            }),
            InitialSpec::Cosine {
                offset,
                amplitude,
                wavenumber,
            }
            | InitialSpec::Sine {
                offset,
                amplitude,
                wavenumber,
            } => {
                let sine = matches!(self, InitialSpec::Sine { .. });
                GridFunction::from_fn(grid, m, |x, out| {
                    let shape: f64 = (0..dim)
                        .map(|d| {
                            let a = wavenumber * PI * (x[d] - org[d]) / ext[d];
                            if sine {
                                a.sin()
                            } else {
                                a.cos()
                            }
                        })
                        .product();
                    for (c, o) in out.iter_mut().enumerate() {
                        *o = component(&offset, c) + component(&amplitude, c) * shape;
                    }
                })
            }
            InitialSpec::Bump {
                offset,
                height,
                center,
                width,
            } => {
                if center.len() != dim || !(width > 0.0) {
                    return Err(LabError::Config(
                        "bump needs a center per axis and a positive width".into(),
                    ));
                }
                GridFunction::from_fn(grid, m, |x, out| {
                    let r2: f64 = (0..dim).map(|d| (x[d] - center[d]).powi(2)).sum();
                    let g = (-r2 / (width * width)).exp();
                    for (c, o) in out.iter_mut().enumerate() {
                        *o = component(&offset, c) + component(&height, c) * g;
                    }
                })
            }
        };
        Ok(field)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GnWeightChoice {
    /// `Φ ≡ Φ₀ ≡ 1`.
    Unit,
    /// `Φ`, `Φ₀` of the configured model.
    Model,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSpec {
    /// Stride of the BMO family centers on the coarse grid.
    pub bmo_center_stride: Option<usize>,
    pub p_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub gn_family: String,
    pub gn_weights: GnWeightChoice,
    /// `n` in the ratio condition; the grid dimension (at least 2) when
    /// absent.
    pub ratio_dimension: Option<usize>,
    /// Overrides the model's sampling box.
    pub sample_box: Option<SampleBox>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            bmo_center_stride: None,
            p_list: vec![1.0, 2.0],
            eps_list: vec![0.1],
            gn_family: "sine".into(),
            gn_weights: GnWeightChoice::Unit,
            ratio_dimension: None,
            sample_box: None,
            samples: 256,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: BuiltinModel,
    pub grid: GridSpec,
    #[serde(default = "default_initial")]
    pub initial: InitialSpec,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_initial() -> InitialSpec {
    InitialSpec::Cosine {
        offset: vec![0.0],
        amplitude: vec![0.1],
        wavenumber: 1.0,
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.scheme.validate()?;
        if cfg.diagnostics.p_list.iter().any(|p| !(*p >= 1.0)) {
            return Err(LabError::Config(
                "every p in p_list must be at least 1".into(),
            ));
        }
        if cfg.diagnostics.eps_list.iter().any(|e| !(*e > 0.0)) {
            return Err(LabError::Config(
                "every eps in eps_list must be positive".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_json(&text)
    }

    /// The model with the configured sample box applied.
    pub fn model(&self) -> Result<ModelSpec> {
        let model = self.model.build()?;
        Ok(match &self.diagnostics.sample_box {
            Some(b) => {
                if b.dim() != model.m {
                    return Err(LabError::Config(format!(
                        "sample box has {} axes for m = {}",
                        b.dim(),
                        model.m
                    )));
                }
                model.with_box(b.clone())
            }
            None => model,
        })
    }

    fn bmo_family(&self, grid: &Grid, level: usize) -> BallFamily {
        let base = self
            .diagnostics
            .bmo_center_stride
            .unwrap_or_else(|| (grid_span(grid) >> level) / 16)
            .max(1);
        BallFamily::dyadic_strided(grid, base << level)
    }
}

fn grid_span(grid: &Grid) -> usize {
    grid.shape()
        .iter()
        .copied()
        .max()
        .unwrap_or(1)
        .saturating_sub(1)
}

/// Everything `check` computed.
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub model: String,
    pub sample_box: SampleBox,
    pub reports: Vec<ConditionReport>,
    pub admissible_p: crate::model::AdmissibleP,
    pub pass: bool,
}

/// Runs every structural check. `A3` is report-only.
pub fn cmd_check(cfg: &RunConfig) -> Result<CheckOutcome> {
    let model = cfg.model()?;
    let grid = Arc::new(cfg.grid.build(model.m)?);
    let dim = grid.dim();
    let d = &cfg.diagnostics;
    let samples = model.sample_box.samples(d.samples, d.seed);
    let n = d.ratio_dimension.unwrap_or(dim.max(2));

    let mut reports = vec![check_uniform_ellipticity(
        &model,
        &samples,
        &xi_samples(model.m * dim, d.samples.max(8), d.seed ^ 0x5eed),
        dim,
    )];
    reports.push(match structural_constants(&model, &samples, dim) {
        Ok(k) => k.report(),
        Err(LabError::InvalidStructure(msg)) => {
            let zero = samples.iter().all(|u| model.phi(u, dim) == 0.0);
            let mut rep = ConditionReport::new(ConditionId::A2);
            if zero {
                rep.pass = true;
                rep.note = Some("Phi vanishes on every sample; the GN weights are trivial".into());
            } else {
                let at = samples
                    .iter()
                    .find(|u| !(model.phi(u, dim) > 0.0))
                    .cloned()
                    .unwrap_or_default();
                rep.witnesses.push(Witness {
                    value: model.phi(&at, dim),
                    point: at,
                    violates: true,
                });
                rep.note = Some(msg);
            }
            rep
        }
        Err(e) => return Err(e),
    });
    let u0 = cfg.initial.build(grid.clone(), model.m)?;
    let p = match cfg.scheme.p_energy {
        Some(p) => p,
        None => default_p_energy(&model, dim)?,
    };
    let mut a3 = check_weight_condition(&model, &u0, &cfg.bmo_family(&grid, 0), p)?;
    a3.note.get_or_insert_with(|| "report only".into());
    reports.push(a3);
    reports.push(ratio_report(&model, n, &samples)?.report());
    let p_samples = xi_samples(model.m * dim, 32, d.seed ^ 0xf00d)
        .into_iter()
        .flat_map(|v| [0.5, 4.0].map(|s| v.iter().map(|x| x * s).collect::<Vec<_>>()))
        .collect::<Vec<_>>();
    reports.push(check_growth(&model, &samples, &p_samples));
    let pass = reports
        .iter()
        .filter(|r| r.condition != ConditionId::A3)
        .all(|r| r.pass);
    Ok(CheckOutcome {
        model: model.name.clone(),
        sample_box: model.sample_box.clone(),
        admissible_p: max_admissible_p(&model, &samples, n)?,
        reports,
        pass,
    })
}

/// Summary of a scheme run.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub model: String,
    pub status: IterationStatus,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub increments: Vec<f64>,
    pub p_energy: f64,
    pub bmo_bound: f64,
    pub local_radius: f64,
    pub blowup_flag: bool,
    pub time_slices: usize,
}

/// Runs the outer iteration and renders the per-slice CSV.
pub fn cmd_run(cfg: &RunConfig) -> Result<(RunSummary, String)> {
    let model = cfg.model()?;
    let grid = Arc::new(cfg.grid.build(model.m)?);
    let u0 = cfg.initial.build(grid.clone(), model.m)?;
    let mut scheme = cfg.scheme.clone();
    scheme.bmo_eps = cfg
        .diagnostics
        .eps_list
        .first()
        .copied()
        .unwrap_or(scheme.bmo_eps);
    scheme.bmo_center_stride = scheme
        .bmo_center_stride
        .or(cfg.diagnostics.bmo_center_stride);
    let out = iterate(&model, &u0, None, &scheme)?;
    let mut csv =
        String::from("k,t,bmo_norm,local_bmo_R,uf_ratio,w1n_norm,increment_sup,energy_2p,flag\n");
    for r in &out.reports {
        for s in &r.slices {
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{}",
                r.k,
                s.t,
                s.bmo_norm,
                s.local_bmo_r,
                s.uf_ratio,
                s.w1n_norm,
                r.increment_sup,
                s.energy_2p,
                u8::from(s.flag || r.monitor_flag)
            )
            .unwrap();
        }
    }
    let last = out.reports.last();
    let summary = RunSummary {
        model: model.name.clone(),
        status: out.status,
        iterations: out.iterations,
        final_residual: out.final_residual,
        increments: out.increments(),
        p_energy: out.p_energy,
        bmo_bound: last.map_or(f64::NAN, |r| r.bmo_bound),
        local_radius: last.map_or(f64::NAN, |r| r.local_radius),
        blowup_flag: out.status == IterationStatus::Diverged
            || last.is_some_and(|r| r.monitor_flag),
        time_slices: out.trajectory.times().len(),
    };
    Ok((summary, csv))
}

/// Named test families for the GN tables, sampled on `grid` (scalar).
pub fn gn_test_family(name: &str, grid: &Arc<Grid>) -> Result<Vec<(String, GridFunction)>> {
    let ext = grid.extents().to_vec();
    let dim = grid.dim();
    let prod = move |x: &[f64], f: &dyn Fn(f64) -> f64| {
        (0..dim).map(|d| f(x[d] / ext[d])).product::<f64>()
    };
    let mut out = Vec::new();
    match name {
        "constant" => {
            for c in [1.0, -2.5] {
                out.push((
                    format!("const_{c}"),
                    GridFunction::scalar(grid.clone(), |_| c),
                ));
            }
        }
        "sine" => {
            for k in 1..=3 {
                let kf = k as f64;
                out.push((
                    format!("sin_{k}"),
                    GridFunction::scalar(grid.clone(), |x| prod(x, &|s| (kf * PI * s).sin())),
                ));
            }
            out.push((
                "sin_mix".into(),
                GridFunction::scalar(grid.clone(), |x| {
                    prod(x, &|s| (PI * s).sin() + 0.4 * (3.0 * PI * s).sin())
                }),
            ));
        }
        "bump" => {
            for w in [0.15, 0.25, 0.4] {
                out.push((
                    format!("bump_{w}"),
                    GridFunction::scalar(grid.clone(), |x| {
                        let r2: f64 = (0..dim)
                            .map(|d| (x[d] / grid.extents()[d] - 0.5).powi(2))
                            .sum();
                        (-r2 / (w * w)).exp()
                    }),
                ));
            }
        }
        "polynomial" => {
            out.push((
                "cubic".into(),
                GridFunction::scalar(grid.clone(), |x| prod(x, &|s| s * s * (1.5 - s))),
            ));
            out.push((
                "quartic".into(),
                GridFunction::scalar(grid.clone(), |x| {
                    prod(x, &|s| s * s * (1.0 - s) * (1.0 - s) * 16.0)
                }),
            ));
        }
        _ => return Err(LabError::Config(format!("unknown GN test family '{name}'"))),
    }
    Ok(out)
}

/// One row of the GN table.
#[derive(Clone, Debug, Serialize)]
pub struct GnRow {
    pub function: String,
    pub level: usize,
    pub h: f64,
    pub p: f64,
    pub i1: f64,
    pub i1_hat: f64,
    pub i2: f64,
    pub bmo: f64,
    /// `None` on degenerate input.
    pub ratio: Option<f64>,
}

/// GN terms and ratios of the configured family at the configured grid and
/// its refinement.
pub fn cmd_gn(cfg: &RunConfig) -> Result<(Vec<GnRow>, String)> {
    let d = &cfg.diagnostics;
    let model = cfg.model()?;
    let mut rows = Vec::new();
    for (level, spec) in [cfg.grid.clone(), cfg.grid.refined()].iter().enumerate() {
        let grid = Arc::new(spec.build(1)?);
        let family = cfg.bmo_family(&grid, level);
        let funcs = gn_test_family(&d.gn_family, &grid)?;
        let weights = match d.gn_weights {
            GnWeightChoice::Unit => GnWeights::unit(),
            GnWeightChoice::Model => {
                if model.m != 1 {
                    return Err(LabError::Config(
                        "model GN weights need a scalar model".into(),
                    ));
                }
                model.gn_weights(&model.sample_box.samples(d.samples, d.seed), grid.dim())?
            }
        };
        for (id, u) in &funcs {
            let bmo = bmo_norm(u, &family)?;
            for &p in &d.p_list {
                let t = gn_terms(u, u, &weights, p, None)?;
                let ratio = match gn_global_ratio(u, u, &weights, p, &family) {
                    Ok(r) => Some(r),
                    Err(LabError::DegenerateInput(_)) => None,
                    Err(e) => return Err(e),
                };
                rows.push(GnRow {
                    function: id.clone(),
                    level,
                    h: grid.min_spacing(),
                    p,
                    i1: t.i1,
                    i1_hat: t.i1_hat,
                    i2: t.i2,
                    bmo,
                    ratio,
                });
            }
        }
    }
    let mut csv = String::from("function,level,h,p,i1,i1_hat,i2,bmo,ratio\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.function,
            r.level,
            r.h,
            r.p,
            r.i1,
            r.i1_hat,
            r.i2,
            r.bmo,
            r.ratio.map_or(String::new(), |v| v.to_string())
        )
        .unwrap();
    }
    Ok((rows, csv))
}

#[derive(Debug, Parser)]
#[command(
    name = "coupled-lab",
    version,
    about = "Linearized iteration lab for coupled parabolic systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structural conditions of the configured model.
    Check(CommonArgs),
    /// Run the outer iteration and write diagnostics.
    Run(CommonArgs),
    /// Tabulate Gagliardo-Nirenberg terms on a test family.
    Gn(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run even if the condition check fails.
    #[arg(long)]
    pub force: bool,
}

fn exit_code(e: &LabError) -> i32 {
    match e {
        LabError::SolverFailed { .. } => EXIT_SOLVER,
        LabError::BlowUpSuspected { .. } => EXIT_BLOWUP,
        _ => EXIT_CONFIG,
    }
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<i32> {
    let (Command::Check(args) | Command::Run(args) | Command::Gn(args)) = &cli.command;
    let cfg = RunConfig::load(&args.config)?;
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)?;
    match &cli.command {
        Command::Check(_) => {
            let check = cmd_check(&cfg)?;
            write_json(&dir, "check.json", &check)?;
            for r in &check.reports {
                eprintln!(
                    "{:?}: {}",
                    r.condition,
                    if r.pass { "pass" } else { "FAIL" }
                );
            }
            Ok(if check.pass { EXIT_OK } else { EXIT_CONDITION })
        }
        Command::Run(args) => {
            let check = cmd_check(&cfg)?;
            write_json(&dir, "check.json", &check)?;
            if !check.pass && !args.force {
                eprintln!("condition check failed; rerun with --force to iterate anyway");
                return Ok(EXIT_CONDITION);
            }
            let (summary, csv) = cmd_run(&cfg)?;
            fs::write(dir.join("diagnostics.csv"), csv)?;
            write_json(
                &dir,
                "summary.json",
                &json!({
                    "status": summary.status,
                    "iterations": summary.iterations,
                    "final_residual": summary.final_residual,
                    "run": summary,
                    "version": env!("CARGO_PKG_VERSION"),
                }),
            )?;
            eprintln!("{:?} after {} iterates", summary.status, summary.iterations);
            Ok(if summary.blowup_flag {
                EXIT_BLOWUP
            } else {
                EXIT_OK
            })
        }
        Command::Gn(_) => {
            let (_, csv) = cmd_gn(&cfg)?;
            fs::write(dir.join("gn.csv"), csv)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Some(n) = std::env::var("COUPLED_LAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
