//! Scenario configuration and the end-to-end pipeline
//! mesh → forward → boundary data → inversion → estimate checks.
//!
//! Every stage writes its artifacts as soon as it finishes, so a failure
//! later in the pipeline leaves the earlier files in place.

use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{synth_chi, ChiData, NoiseSpec};
use crate::error::{Error, Result};
use crate::estimates::{self, EstimateReport};
use crate::forward::{assemble_r, cgo_fields, pde_residual, resolution_limit, solve_mu, Sigma, SolveMethod, SIGMA_FLOOR};
use crate::geometry::{CurveDef, CurveFile, C64};
use crate::inverse::{invert, InversionReport};
use crate::mesh::{build_mesh, fmt17, write_field_csv, CurveMesh, MeshOptions};
use crate::report::write_json;
use crate::stencil::{build_stencils, Stencils};

/// Where the curve comes from: a separate file or an inline definition.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurveRef {
    File { file: PathBuf },
    Inline(CurveFile),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaConfig {
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_sigma_radius")]
    pub radius: f64,
}

impl Default for SigmaConfig {
    fn default() -> Self {
        SigmaConfig { preset: default_preset(), amplitude: default_amplitude(), radius: default_sigma_radius() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stages {
    #[serde(default = "yes")]
    pub forward: bool,
    #[serde(default = "yes")]
    pub synth_data: bool,
    #[serde(default = "yes")]
    pub invert: bool,
    #[serde(default = "yes")]
    pub recover_sigma: bool,
    #[serde(default)]
    pub validate: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Stages { forward: true, synth_data: true, invert: true, recover_sigma: true, validate: false }
    }
}

/// Checks that decide the exit status of `run`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertions {
    /// Upper bound on `q_error_rel` at the finest resolution.
    #[serde(default)]
    pub q_error_max: Option<f64>,
    /// `q_error_rel` must decrease along the resolution ladder.
    #[serde(default)]
    pub q_error_monotone: bool,
    /// Every estimate report must pass.
    #[serde(default = "yes")]
    pub estimates: bool,
}

impl Default for Assertions {
    fn default() -> Self {
        Assertions { q_error_max: None, q_error_monotone: false, estimates: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default = "default_identity_samples")]
    pub identity_samples: usize,
    #[serde(default = "default_gamma_samples")]
    pub gamma_samples: usize,
    /// Mesh step and radius of the Fermat cubic used for the area check.
    #[serde(default = "default_area_h")]
    pub area_h: f64,
    #[serde(default = "default_fermat_radius")]
    pub fermat_radius: f64,
    #[serde(default = "default_area_centers")]
    pub area_centers: usize,
    #[serde(default = "default_kernel_pairs")]
    pub kernel_pairs: usize,
    #[serde(default = "default_zero_limit_centers")]
    pub zero_limit_centers: usize,
    /// `|λ|` values along `e^{iπ/4}` for the contraction and envelope checks.
    #[serde(default = "default_lambda_sweep")]
    pub lambda_sweep: Vec<f64>,
    #[serde(default = "default_contraction_h")]
    pub contraction_h: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            identity_samples: default_identity_samples(),
            gamma_samples: default_gamma_samples(),
            area_h: default_area_h(),
            fermat_radius: default_fermat_radius(),
            area_centers: default_area_centers(),
            kernel_pairs: default_kernel_pairs(),
            zero_limit_centers: default_zero_limit_centers(),
            lambda_sweep: default_lambda_sweep(),
            contraction_h: default_contraction_h(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_curve")]
    pub curve: CurveRef,
    /// Mesh steps, coarse to fine.
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<f64>,
    /// Collar width in units of `h`.
    #[serde(default = "default_collar_cells")]
    pub collar_cells: f64,
    #[serde(default)]
    pub sigma: SigmaConfig,
    /// `λ` as `[re, im]`.
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<[f64; 2]>,
    /// Relative noise level on the boundary data.
    #[serde(default)]
    pub noise: f64,
    /// Noise levels visited by `sweep noise`.
    #[serde(default = "default_noise_levels")]
    pub noise_levels: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub stages: Stages,
    #[serde(default)]
    pub assertions: Assertions,
    #[serde(default)]
    pub validate: ValidateConfig,
}

fn yes() -> bool {
    true
}
fn default_preset() -> String {
    "bump".into()
}
fn default_amplitude() -> f64 {
    0.3
}
fn default_sigma_radius() -> f64 {
    0.25
}
fn default_identity_samples() -> usize {
    200
}
fn default_gamma_samples() -> usize {
    10_000
}
fn default_area_h() -> f64 {
    0.05
}
fn default_fermat_radius() -> f64 {
    1.5
}
fn default_area_centers() -> usize {
    6
}
fn default_kernel_pairs() -> usize {
    300
}
fn default_zero_limit_centers() -> usize {
    4
}
fn default_lambda_sweep() -> Vec<f64> {
    vec![5.0, 10.0, 20.0, 40.0]
}
fn default_contraction_h() -> f64 {
    0.04
}
fn default_curve() -> CurveRef {
    CurveRef::Inline(CurveFile {
        name: None,
        preset: Some("graph-cubic".into()),
        degree: None,
        terms: Vec::new(),
        radius: Some(0.6),
        tolerance: None,
        c0: None,
        epsilon: Some(0.3),
        delta: Some(0.05),
    })
}
fn default_resolutions() -> Vec<f64> {
    vec![0.08, 0.04]
}
fn default_collar_cells() -> f64 {
    5.0
}
fn default_lambdas() -> Vec<[f64; 2]> {
    vec![[5.0 * FRAC_PI_4.cos(), 5.0 * FRAC_PI_4.sin()]]
}
fn default_noise_levels() -> Vec<f64> {
    vec![0.0, 1e-3, 1e-2]
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            curve: default_curve(),
            resolutions: default_resolutions(),
            collar_cells: default_collar_cells(),
            sigma: SigmaConfig::default(),
            lambdas: default_lambdas(),
            noise: 0.0,
            noise_levels: default_noise_levels(),
            seed: 0,
            out: default_out(),
            stages: Stages::default(),
            assertions: Assertions::default(),
            validate: ValidateConfig::default(),
        }
    }
}

fn parse_text<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T> {
    let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    if is_json {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

impl ScenarioConfig {
    /// Read a TOML (or JSON) scenario file.
    pub fn read(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        parse_text(path, &text)
    }

    pub fn lambdas(&self) -> Vec<C64> {
        self.lambdas.iter().map(|l| C64::new(l[0], l[1])).collect()
    }

    /// Static checks that need no mesh.
    pub fn check(&self) -> Result<()> {
        let r = &self.resolutions;
        if r.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::Config(format!("resolutions must be positive, got {r:?}")));
        }
        let down = r.windows(2).all(|w| w[1] < w[0]);
        let up = r.windows(2).all(|w| w[1] > w[0]);
        if !(down || up) {
            return Err(Error::Config(format!("resolutions must be strictly sorted, got {r:?}")));
        }
        if self.lambdas.iter().any(|l| !(l[0].is_finite() && l[1].is_finite()) || l[0] == 0.0 && l[1] == 0.0) {
            return Err(Error::Config("every lambda must be finite and nonzero".into()));
        }
        if !(self.noise >= 0.0) || self.noise_levels.iter().any(|n| !(*n >= 0.0)) {
            return Err(Error::Config("noise levels must be non-negative".into()));
        }
        if !(self.collar_cells >= 0.0) {
            return Err(Error::Config("collar_cells must be non-negative".into()));
        }
        if self.stages.synth_data && self.collar_cells < 3.0 {
            return Err(Error::Config(format!(
                "boundary data needs a collar of at least 3 cells, got {}",
                self.collar_cells
            )));
        }
        let sigma = Sigma::preset(&self.sigma.preset, self.sigma.amplitude, self.sigma.radius)?;
        let low = 1.0 + sigma.bumps.iter().map(|b| b.amplitude.min(0.0)).sum::<f64>();
        if low < SIGMA_FLOOR {
            return Err(Error::SigmaBelowFloor(low));
        }
        if !(self.sigma.radius > 0.0) {
            return Err(Error::Config("sigma radius must be positive".into()));
        }
        Ok(())
    }
}

/// A checked configuration with its curve and conductivity resolved.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub curve: CurveDef,
    pub sigma: Sigma,
}

impl Scenario {
    /// Resolve and check a configuration; relative curve paths are taken
    /// from `base`.
    pub fn new(config: ScenarioConfig, base: &Path) -> Result<Scenario> {
        config.check()?;
        let file = match &config.curve {
            CurveRef::Inline(f) => f.clone(),
            CurveRef::File { file } => {
                let p = if file.is_absolute() { file.clone() } else { base.join(file) };
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| Error::InvalidCurve(format!("cannot read {}: {e}", p.display())))?;
                parse_text(&p, &text)?
            }
        };
        let curve = CurveDef::from_file(&file)?;
        let sigma = Sigma::preset(&config.sigma.preset, config.sigma.amplitude, config.sigma.radius)?;
        Ok(Scenario { config, curve, sigma })
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let config = ScenarioConfig::read(path)?;
        Scenario::new(config, path.parent().unwrap_or(Path::new(".")))
    }
}

/// A stage failure with the pipeline position it happened at.
#[derive(Debug)]
pub struct StageError {
    pub stage: String,
    pub error: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {}

fn tag<T>(stage: impl Into<String>, r: Result<T>) -> std::result::Result<T, StageError> {
    r.map_err(|error| StageError { stage: stage.into(), error })
}

/// Mesh and stencils at one resolution.
pub struct Discretization {
    pub h: f64,
    pub mesh: CurveMesh,
    pub stencils: Stencils,
}

pub fn discretize(sc: &Scenario, h: f64) -> Result<Discretization> {
    let mesh = build_mesh(&sc.curve, &MeshOptions::with_collar_cells(h, sc.config.collar_cells))?;
    let stencils = build_stencils(&mesh);
    Ok(Discretization { h, mesh, stencils })
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverReport {
    pub lambda: [f64; 2],
    pub h: f64,
    pub nodes: usize,
    pub support: usize,
    pub norm_r_estimate: f64,
    pub neumann_terms: Option<usize>,
    pub direct_condition: Option<f64>,
    pub residual_inf: f64,
    pub pde_residual: f64,
    pub resolution_limit: f64,
    pub under_resolved: bool,
}

pub struct ForwardRun {
    pub q: Vec<C64>,
    pub cgo: crate::forward::CgoSolution,
    pub report: SolverReport,
}

pub fn forward(sc: &Scenario, d: &Discretization, lambda: C64) -> Result<ForwardRun> {
    let q = sc.sigma.potential(&d.mesh)?;
    let op = assemble_r(&sc.curve, &d.mesh, lambda, &q)?;
    let sol = solve_mu(&op)?;
    let cgo = cgo_fields(&d.mesh, &d.stencils, &op, &sol);
    let (neumann_terms, direct_condition) = match sol.method {
        SolveMethod::Trivial => (Some(0), None),
        SolveMethod::Neumann { terms } => (Some(terms), None),
        SolveMethod::Direct { condition } => (None, Some(condition)),
    };
    let limit = resolution_limit(lambda);
    let report = SolverReport {
        lambda: [lambda.re, lambda.im],
        h: d.h,
        nodes: d.mesh.nodes.len(),
        support: op.support.len(),
        norm_r_estimate: sol.norm_estimate,
        neumann_terms,
        direct_condition,
        residual_inf: sol.residual_inf,
        pde_residual: pde_residual(&d.mesh, &d.stencils, lambda, &cgo.mu, &q),
        resolution_limit: limit,
        under_resolved: d.h > limit,
    };
    Ok(ForwardRun { q, cgo, report })
}

/// One `(h, λ, noise)` point of the pipeline as it appears in summaries.
#[derive(Clone, Debug, Serialize)]
pub struct PointSummary {
    pub h: f64,
    pub lambda: [f64; 2],
    pub noise: f64,
    pub dir: String,
    pub norm_r_estimate: Option<f64>,
    pub pde_residual: Option<f64>,
    pub q_error_rel: Option<f64>,
    pub sigma_error_rel: Option<f64>,
    pub inversion: Option<InversionReport>,
    pub error: Option<String>,
}

/// Console output, silenced by `--quiet`.
#[derive(Clone, Copy, Debug)]
pub struct Log {
    pub quiet: bool,
}

impl Log {
    pub fn info(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

/// Point directory relative to the output root.
fn point_dir(h: f64, k: usize) -> String {
    format!("h{h}/lambda{k}")
}

fn all_nodes(mesh: &CurveMesh) -> Vec<usize> {
    (0..mesh.nodes.len()).collect()
}

/// Forward, boundary data and inversion at one point; artifacts go to
/// `out/rel`. Stage failures end the point and are recorded in the summary.
pub fn run_point(
    sc: &Scenario,
    d: &Discretization,
    lambda: C64,
    noise: f64,
    out: &Path,
    rel: &str,
    log: Log,
) -> PointSummary {
    let dir = &out.join(rel);
    let mut s = PointSummary {
        h: d.h,
        lambda: [lambda.re, lambda.im],
        noise,
        dir: rel.to_string(),
        norm_r_estimate: None,
        pde_residual: None,
        q_error_rel: None,
        sigma_error_rel: None,
        inversion: None,
        error: None,
    };
    if let Err(e) = run_point_inner(sc, d, lambda, noise, dir, log, &mut s) {
        log.info(&format!("error: {e}"));
        s.error = Some(e.to_string());
    }
    s
}

fn run_point_inner(
    sc: &Scenario,
    d: &Discretization,
    lambda: C64,
    noise: f64,
    dir: &Path,
    log: Log,
    s: &mut PointSummary,
) -> std::result::Result<(), StageError> {
    let stages = &sc.config.stages;
    if !stages.forward {
        return Ok(());
    }
    let at = format!("h={} lambda={}{:+}i", d.h, lambda.re, lambda.im);
    tag(format!("io {at}"), std::fs::create_dir_all(dir).map_err(Error::from))?;
    let limit = resolution_limit(lambda);
    if d.h > limit {
        log.info(&format!(
            "warning: h = {} exceeds the resolution limit pi/(8|lambda|) = {limit:.4} at |lambda| = {}",
            d.h,
            lambda.norm()
        ));
    }
    let fw = tag(format!("forward {at}"), forward(sc, d, lambda))?;
    let ids = all_nodes(&d.mesh);
    let write = |name: &str, v: &[C64]| write_field_csv(&dir.join(name), &ids, v);
    tag(format!("forward {at}"), (|| {
        write("mu.csv", &fw.cgo.mu)?;
        write("f.csv", &fw.cgo.f)?;
        write("h.csv", &fw.cgo.h)?;
        write("dh.csv", &fw.cgo.dh)?;
        write("q_true.csv", &fw.q)?;
        write_json(&dir.join("solver_report.json"), &fw.report)
    })())?;
    s.norm_r_estimate = Some(fw.report.norm_r_estimate);
    s.pde_residual = Some(fw.report.pde_residual);
    log.info(&format!(
        "forward {at}: |R| ~ {:.3e}, pde residual {:.3e}",
        fw.report.norm_r_estimate, fw.report.pde_residual
    ));
    if !stages.synth_data {
        return Ok(());
    }
    let spec = (noise > 0.0).then_some(NoiseSpec { level: noise, seed: sc.config.seed });
    let chi = tag(format!("synth-data {at}"), synth_chi(&d.mesh, &fw.cgo, spec))?;
    tag(format!("synth-data {at}"), write_json(&dir.join("boundary_data.json"), &chi.to_file()))?;
    if !stages.invert {
        return Ok(());
    }
    invert_point(sc, d, &chi, dir, &at, log, s)
}

/// Inversion from boundary data already in hand; the truth for error
/// reporting comes from the scenario's conductivity.
fn invert_point(
    sc: &Scenario,
    d: &Discretization,
    chi: &ChiData,
    dir: &Path,
    at: &str,
    log: Log,
    s: &mut PointSummary,
) -> std::result::Result<(), StageError> {
    let stage = format!("invert {at}");
    let q_true = tag(stage.clone(), sc.sigma.potential(&d.mesh))?;
    let sigma_true = sc.sigma.on_mesh(&d.mesh);
    let inv = tag(
        stage.clone(),
        invert(
            &sc.curve,
            &d.mesh,
            &d.stencils,
            chi,
            Some((&q_true, &sigma_true)),
            sc.config.stages.recover_sigma,
        ),
    )?;
    let ids = all_nodes(&d.mesh);
    tag(stage.clone(), (|| {
        write_field_csv(&dir.join("h_rec.csv"), &ids, &inv.h)?;
        write_field_csv(&dir.join("q_rec.csv"), &ids, &inv.q)?;
        if let Some(sig) = &inv.sigma {
            let v: Vec<C64> = sig.iter().map(|&x| C64::new(x, 0.0)).collect();
            write_field_csv(&dir.join("sigma_rec.csv"), &ids, &v)?;
        }
        write_json(&dir.join("inversion_report.json"), &inv.report)
    })())?;
    log.info(&format!("invert {at}: q error {:?}", inv.report.q_error_rel));
    s.q_error_rel = inv.report.q_error_rel;
    s.sigma_error_rel = inv.report.sigma_error_rel;
    s.inversion = Some(inv.report);
    Ok(())
}

/// Re-run only the inversion from `boundary_data.json` files under `out`.
pub fn invert_from_files(sc: &Scenario, out: &Path, log: Log) -> Vec<PointSummary> {
    let mut rows = Vec::new();
    for &h in &sc.config.resolutions {
        let d = match discretize(sc, h) {
            Ok(d) => d,
            Err(e) => {
                rows.push(failed_point(h, C64::new(0.0, 0.0), sc.config.noise, "", format!("[mesh h={h}] {e}")));
                continue;
            }
        };
        for (k, lambda) in sc.config.lambdas().into_iter().enumerate() {
            let rel = point_dir(h, k);
            let dir = out.join(&rel);
            let at = format!("h={h} lambda={}{:+}i", lambda.re, lambda.im);
            let mut s = failed_point(h, lambda, sc.config.noise, &rel, String::new());
            s.error = None;
            let r = tag(format!("invert {at}"), ChiData::read(&d.mesh, &dir.join("boundary_data.json")))
                .and_then(|chi| invert_point(sc, &d, &chi, &dir, &at, log, &mut s));
            if let Err(e) = r {
                log.info(&format!("error: {e}"));
                s.error = Some(e.to_string());
            }
            rows.push(s);
        }
    }
    rows
}

fn failed_point(h: f64, lambda: C64, noise: f64, rel: &str, error: String) -> PointSummary {
    PointSummary {
        h,
        lambda: [lambda.re, lambda.im],
        noise,
        dir: rel.to_string(),
        norm_r_estimate: None,
        pde_residual: None,
        q_error_rel: None,
        sigma_error_rel: None,
        inversion: None,
        error: Some(error),
    }
}

/// Write each mesh of the ladder as `h<h>/mesh.csv`.
pub fn write_meshes(sc: &Scenario, out: &Path, log: Log) -> std::result::Result<Vec<Discretization>, StageError> {
    let mut ds = Vec::new();
    for &h in &sc.config.resolutions {
        let d = tag(format!("mesh h={h}"), discretize(sc, h))?;
        let dir = out.join(format!("h{h}"));
        tag(format!("mesh h={h}"), std::fs::create_dir_all(&dir).map_err(Error::from))?;
        tag(format!("mesh h={h}"), d.mesh.write_csv(&dir.join("mesh.csv")))?;
        log.info(&format!(
            "mesh h={h}: {} nodes ({} interior, {} border, {} collar)",
            d.mesh.nodes.len(),
            d.mesh.interior.len(),
            d.mesh.boundary.len(),
            d.mesh.collar_nodes.len()
        ));
        ds.push(d);
    }
    Ok(ds)
}

/// The pipeline over the full `(h, λ)` ladder.
pub fn run_ladder(sc: &Scenario, out: &Path, log: Log) -> std::result::Result<Vec<PointSummary>, StageError> {
    let ds = write_meshes(sc, out, log)?;
    let mut rows = Vec::new();
    for d in &ds {
        for (k, lambda) in sc.config.lambdas().into_iter().enumerate() {
            rows.push(run_point(sc, d, lambda, sc.config.noise, out, &point_dir(d.h, k), log));
        }
    }
    Ok(rows)
}

/// `(x, y)` plot data and a gnuplot script for the convergence curves.
pub fn write_plot_data(out: &Path, rows: &[PointSummary]) -> Result<()> {
    let mut lambdas: Vec<[f64; 2]> = Vec::new();
    for r in rows {
        if !lambdas.contains(&r.lambda) {
            lambdas.push(r.lambda);
        }
    }
    let mut script = String::from("set logscale xy\nset xlabel 'h'\nset key left top\n");
    let mut plots = Vec::new();
    for (k, l) in lambdas.iter().enumerate() {
        for (name, get) in [
            ("pde_residual", (|r: &PointSummary| r.pde_residual) as fn(&PointSummary) -> Option<f64>),
            ("q_error", |r: &PointSummary| r.q_error_rel),
        ] {
            let file = format!("convergence_{name}_lambda{k}.csv");
            let mut text = String::from("h,value\n");
            for r in rows.iter().filter(|r| r.lambda == *l) {
                if let Some(v) = get(r) {
                    let _ = writeln!(text, "{},{}", fmt17(r.h), fmt17(v));
                }
            }
            std::fs::write(out.join(&file), text)?;
            plots.push(format!(
                "'{file}' using 1:2 with linespoints title '{name} |lambda|={:.3}'",
                (l[0] * l[0] + l[1] * l[1]).sqrt()
            ));
        }
    }
    if !plots.is_empty() {
        let _ = writeln!(script, "set datafile separator ','\nplot {}", plots.join(", \\\n     "));
    }
    std::fs::write(out.join("plot.gp"), script)?;
    Ok(())
}

/// Every estimate check, in a fixed order.
pub fn validate(sc: &Scenario, log: Log) -> Result<Vec<EstimateReport>> {
    let v = &sc.config.validate;
    let seed = sc.config.seed;
    let mut reps = Vec::new();
    log.info("validate: algebraic identities");
    reps.push(estimates::check_algebraic_identities(&sc.curve, v.identity_samples, seed));
    log.info("validate: gamma neighbourhoods");
    reps.push(estimates::check_gamma_bound(v.gamma_samples, seed.wrapping_add(1)));
    let fermat = CurveDef::fermat_cubic(v.fermat_radius);
    log.info("validate: area scaling");
    let fm = build_mesh(&fermat, &MeshOptions::new(v.area_h))?;
    let centers = estimates::area_centers(&fm, 0.3, v.area_centers, seed.wrapping_add(2));
    let deltas: Vec<f64> = (0..8).map(|k| 2e-3 * 10f64.powf(k as f64 / 7.0)).collect();
    let mut area = estimates::check_area_scaling(&fermat, &fm, &centers, &deltas, 16);
    area.detail_planar_model(&deltas);
    reps.push(area);
    log.info("validate: kernel envelopes and differences");
    let lams: Vec<C64> = v.lambda_sweep.iter().map(|a| C64::from_polar(*a, FRAC_PI_4)).collect();
    if !lams.is_empty() {
        reps.extend(estimates::check_kernel_decay(&fermat, &lams, v.kernel_pairs, seed.wrapping_add(3)));
    }
    log.info("validate: zero limit");
    reps.push(estimates::check_zero_limit(&fermat, v.zero_limit_centers, &[1e-3, 3e-3, 1e-2], seed.wrapping_add(4)));
    log.info("validate: contraction");
    let d = discretize(sc, v.contraction_h)?;
    let q = sc.sigma.potential(&d.mesh)?;
    let mut norms = Vec::new();
    for l in &lams {
        norms.push(assemble_r(&sc.curve, &d.mesh, *l, &q)?.norm_estimate());
    }
    reps.push(estimates::check_contraction(&v.lambda_sweep, &norms));
    reps.sort_by(|a, b| a.estimate_id.cmp(&b.estimate_id));
    Ok(reps)
}

/// `estimates_report.json` plus one raw-sample CSV per check.
pub fn write_estimates(out: &Path, reps: &[EstimateReport]) -> Result<()> {
    let dir = out.join("estimates");
    std::fs::create_dir_all(&dir)?;
    for r in reps {
        r.write_samples(&dir.join(format!("{}.csv", r.estimate_id)))?;
    }
    write_json(&out.join("estimates_report.json"), reps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Lambda,
    Resolution,
    Noise,
}

/// One pipeline point per axis value; failures are recorded and the sweep
/// continues. Writes `sweep_<axis>.csv` and `sweep_<axis>.json`.
pub fn sweep(sc: &Scenario, axis: SweepAxis, out: &Path, log: Log) -> Result<Vec<PointSummary>> {
    std::fs::create_dir_all(out)?;
    let cfg = &sc.config;
    let h0 = cfg.resolutions.first().copied();
    let l0 = cfg.lambdas().first().copied();
    let points: Vec<(f64, C64, f64)> = match axis {
        SweepAxis::Lambda => h0.map_or(Vec::new(), |h| cfg.lambdas().into_iter().map(|l| (h, l, cfg.noise)).collect()),
        SweepAxis::Resolution => l0.map_or(Vec::new(), |l| cfg.resolutions.iter().map(|&h| (h, l, cfg.noise)).collect()),
        SweepAxis::Noise => match (h0, l0) {
            (Some(h), Some(l)) => cfg.noise_levels.iter().map(|&n| (h, l, n)).collect(),
            _ => Vec::new(),
        },
    };
    let name = serde_json::to_value(axis).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let mut rows = Vec::new();
    let mut cache: Option<Discretization> = None;
    for (k, (h, lambda, noise)) in points.into_iter().enumerate() {
        if cache.as_ref().is_none_or(|d| d.h != h) {
            cache = match discretize(sc, h) {
                Ok(d) => Some(d),
                Err(e) => {
                    rows.push(failed_point(h, lambda, noise, "", format!("[mesh h={h}] {e}")));
                    None
                }
            };
        }
        let Some(d) = cache.as_ref() else { continue };
        rows.push(run_point(sc, d, lambda, noise, out, &format!("sweep_{name}/point{k}"), log));
    }
    let mut text = String::from("index,h,lambda_re,lambda_im,noise,norm_r_estimate,pde_residual,q_error_rel,sigma_error_rel,error\n");
    let opt = |x: Option<f64>| x.map(fmt17).unwrap_or_default();
    for (k, r) in rows.iter().enumerate() {
        let _ = writeln!(
            text,
            "{k},{},{},{},{},{},{},{},{},\"{}\"",
            fmt17(r.h),
            fmt17(r.lambda[0]),
            fmt17(r.lambda[1]),
            fmt17(r.noise),
            opt(r.norm_r_estimate),
            opt(r.pde_residual),
            opt(r.q_error_rel),
            opt(r.sigma_error_rel),
            r.error.as_deref().unwrap_or("").replace('"', "'")
        );
    }
    std::fs::write(out.join(format!("sweep_{name}.csv")), text)?;
    write_json(&out.join(format!("sweep_{name}.json")), &rows)?;
    Ok(rows)
}

/// Outcome of the configured assertions over a finished run.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub stage_errors: Vec<String>,
    pub failed_assertions: Vec<String>,
}

impl Verdict {
    pub fn ok(&self) -> bool {
        self.stage_errors.is_empty() && self.failed_assertions.is_empty()
    }
}

pub fn judge(sc: &Scenario, rows: &[PointSummary], estimates: Option<&[EstimateReport]>) -> Verdict {
    let a = &sc.config.assertions;
    let stage_errors: Vec<String> = rows.iter().filter_map(|r| r.error.clone()).collect();
    let mut failed = Vec::new();
    for l in &sc.config.lambdas {
        let ladder: Vec<&PointSummary> = rows.iter().filter(|r| r.lambda == *l).collect();
        let errs: Vec<Option<f64>> = ladder.iter().map(|r| r.q_error_rel).collect();
        if let Some(max) = a.q_error_max {
            match ladder.last().and_then(|r| r.q_error_rel) {
                Some(e) if e <= max => {}
                other => failed.push(format!("q_error_rel {other:?} above {max:e} at lambda {l:?}")),
            }
        }
        if a.q_error_monotone {
            let mono = errs.windows(2).all(|w| matches!((w[0], w[1]), (Some(x), Some(y)) if y < x));
            if !mono {
                failed.push(format!("q_error_rel not decreasing along the ladder at lambda {l:?}: {errs:?}"));
            }
        }
    }
    if a.estimates {
        for r in estimates.unwrap_or(&[]) {
            if !r.pass && !r.inconclusive {
                failed.push(format!("estimate {} failed", r.estimate_id));
            }
        }
    }
    Verdict { stage_errors, failed_assertions: failed }
}

/// The whole pipeline as configured; returns the verdict after writing
/// `summary.json`, plot data and (when enabled) the estimate reports.
pub fn run(sc: &Scenario, out: &Path, log: Log) -> Result<Verdict> {
    std::fs::create_dir_all(out)?;
    write_json(&out.join("config.json"), &sc.config)?;
    let mut verdict_rows = Vec::new();
    let mut errors = Vec::new();
    match run_ladder(sc, out, log) {
        Ok(rows) => verdict_rows = rows,
        Err(e) => errors.push(e.to_string()),
    }
    write_json(&out.join("summary.json"), &verdict_rows)?;
    write_plot_data(out, &verdict_rows)?;
    let reps = if sc.config.stages.validate {
        match validate(sc, log) {
            Ok(reps) => {
                write_estimates(out, &reps)?;
                Some(reps)
            }
            Err(e) => {
                errors.push(format!("[validate] {e}"));
                None
            }
        }
    } else {
        None
    };
    let mut verdict = judge(sc, &verdict_rows, reps.as_deref());
    verdict.stage_errors.extend(errors);
    write_json(&out.join("verdict.json"), &verdict)?;
    Ok(verdict)
}
