//! Command-line surface: system ingestion, single certificate runs,
//! experiment orchestration, reference ROA computation, and plot
//! emission. Everything here is f64-concrete and file-oriented; outputs
//! carry no timestamps so reruns are byte-identical.
//!
//! Exit codes are a stable contract: 0 success, 1 infeasible, 2 unknown
//! or runtime failure, 64 usage.

use std::collections::HashSet;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::odesim::{reference_roa, BoundingBox, IntegrateOptions, ReferenceRoa};
use crate::poly::{Polynomial, VectorField};
use crate::roa::{
    estimate_roa, h_oracle, polynomial_json, sample_ball, sampled_hypothesis_margins,
    EstimateConfig, OracleOutcome, RoaError, RoaEstimate, COMPONENT_BOX_MARGIN,
};
use crate::setgeom::PointSet;
use crate::sos::{CertificateParams, SosCertificate, SosError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {detail}")]
    Input { path: String, detail: String },
    #[error("cannot write {path}: {detail}")]
    Output { path: String, detail: String },
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input { .. } => 64,
            CliError::Output { .. } | CliError::Numerical(_) => 2,
        }
    }
}

/// Configuration mistakes are usage errors; solver trouble is not.
fn map_roa(e: RoaError<f64>) -> CliError {
    match e {
        RoaError::BadConfig(msg) => CliError::Usage(msg),
        RoaError::Sos(SosError::InvalidParameter(msg)) => CliError::Usage(msg),
        other => CliError::Numerical(other.to_string()),
    }
}

/// On-disk description of a dynamical system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemSpec {
    pub name: String,
    pub nvars: usize,
    /// One polynomial per state in parser syntax (variables x1..xn).
    pub components: Vec<String>,
    /// Optional coordinate scale: the study runs on y = rescale·x, which
    /// maps the region of interest into the unit ball. Recorded in every
    /// output so downstream consumers can undo it.
    #[serde(default)]
    pub rescale: Option<f64>,
    #[serde(default)]
    pub notes: String,
}

impl SystemSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Input {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        let spec: SystemSpec = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.nvars == 0 {
            return Err(CliError::Usage(format!("system {}: nvars must be positive", self.name)));
        }
        if self.components.len() != self.nvars {
            return Err(CliError::Usage(format!(
                "system {}: {} components for {} variables",
                self.name,
                self.components.len(),
                self.nvars
            )));
        }
        if let Some(s) = self.rescale {
            if !s.is_finite() || s <= 0.0 {
                return Err(CliError::Usage(format!(
                    "system {}: rescale factor {s} must be positive",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Parses the field and applies the rescale. The origin must be an
    /// equilibrium.
    pub fn vector_field(&self) -> Result<VectorField<f64>, CliError> {
        let comps = self
            .components
            .iter()
            .enumerate()
            .map(|(i, src)| {
                Polynomial::parse(src, self.nvars).map_err(|e| {
                    CliError::Usage(format!("system {}, component {}: {e}", self.name, i + 1))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let f = VectorField::new(comps);
        if !f.origin_equilibrium() {
            return Err(CliError::Usage(format!(
                "system {}: the origin is not an equilibrium (f(0) != 0)",
                self.name
            )));
        }
        Ok(match self.rescale {
            Some(s) => f.rescale(s),
            None => f,
        })
    }
}

/// Experiment settings for `estimate` and `reference`. All coordinates
/// are in the (possibly rescaled) study frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub degrees: Vec<u32>,
    pub r_min: f64,
    pub r_max: f64,
    pub r_tol: f64,
    pub a_tol: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Reference grid covers the box [-grid_half_width, grid_half_width]^n.
    pub grid_half_width: f64,
    pub grid_resolution: usize,
    pub t_max: f64,
    pub converge_eps: f64,
    pub escape_radius: f64,
    /// Verification grid resolution for certified components.
    pub component_resolution: usize,
    /// Gram degree of the level-program multiplier.
    pub level_degree: u32,
    /// Ball sample count for the sampled-hypotheses report.
    pub samples: usize,
    pub seed: u64,
    pub output_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            degrees: vec![4, 6, 8],
            r_min: 0.0,
            r_max: 1.0,
            r_tol: 1e-2,
            a_tol: 1e-3,
            beta: 1e-3,
            gamma: 1e3,
            delta: 1e-3,
            grid_half_width: 1.0,
            grid_resolution: 301,
            t_max: 100.0,
            converge_eps: 1e-3,
            escape_radius: 10.0,
            component_resolution: 401,
            level_degree: 2,
            samples: 10_000,
            seed: 17,
            output_dir: "out".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Input {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let positives = [
            ("r_tol", self.r_tol),
            ("a_tol", self.a_tol),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("grid_half_width", self.grid_half_width),
            ("t_max", self.t_max),
            ("escape_radius", self.escape_radius),
        ];
        for (name, v) in positives {
            if !v.is_finite() || v <= 0.0 {
                return Err(CliError::Usage(format!("config: {name} = {v} must be positive")));
            }
        }
        if !self.r_min.is_finite() || self.r_min < 0.0 || self.r_min >= self.r_max {
            return Err(CliError::Usage(format!(
                "config: need 0 <= r_min < r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if self.grid_resolution == 0 || self.component_resolution == 0 {
            return Err(CliError::Usage("config: grid resolutions must be at least 1".into()));
        }
        Ok(())
    }

    fn params(&self) -> CertificateParams<f64> {
        CertificateParams { beta: self.beta, gamma: self.gamma, delta: self.delta }
    }

    fn estimate_config(&self) -> EstimateConfig<f64> {
        EstimateConfig {
            r_min: self.r_min,
            r_max: self.r_max,
            r_tol: self.r_tol,
            a_tol: self.a_tol,
            params: self.params(),
            resolution: self.component_resolution,
            level_degree: self.level_degree,
        }
    }

    fn integrate_options(&self) -> IntegrateOptions<f64> {
        IntegrateOptions {
            t_max: self.t_max,
            converge_eps: self.converge_eps,
            escape_radius: self.escape_radius,
            ..IntegrateOptions::default()
        }
    }
}

#[derive(Parser)]
#[command(
    name = "sosroa",
    version,
    about = "Certified region-of-attraction estimation with SOS Lyapunov certificates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Search for a degree-d Lyapunov certificate on the ball of radius r.
    Certify {
        /// SystemSpec JSON path.
        system: PathBuf,
        /// Certificate degree (odd values round up).
        #[arg(long)]
        d: u32,
        /// Ball radius in the study frame.
        #[arg(long)]
        r: f64,
        /// Write the JSON artifact here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        beta: f64,
        #[arg(long, default_value_t = 1e3)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
    },
    /// Run the full estimation pipeline for every degree in the config.
    Estimate {
        /// SystemSpec JSON path.
        system: PathBuf,
        /// ExperimentConfig JSON path.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's random seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Classify a grid by forward integration and export the reference ROA.
    Reference {
        /// SystemSpec JSON path.
        system: PathBuf,
        /// ExperimentConfig JSON path (defaults apply when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (overrides the config's).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's grid resolution.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Overlay estimates (and optionally a reference boundary) as SVG + CSV.
    Plot {
        /// estimate_d*.json artifacts produced by `estimate`.
        estimates: Vec<PathBuf>,
        /// reference_boundary.csv produced by `reference` or `estimate`.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Output SVG path; the CSV lands beside it with extension .csv.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Top-level entry point used by the binary: parse, dispatch, map errors
/// to the exit-code contract.
pub fn run() -> i32 {
    let env = env_logger::Env::new().filter_or("ROA_LOG", "info");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cmd: Cmd) -> Result<i32, CliError> {
    match cmd {
        Cmd::Certify { system, d, r, out, beta, gamma, delta } => {
            cmd_certify(&system, d, r, out.as_deref(), CertificateParams { beta, gamma, delta })
        }
        Cmd::Estimate { system, config, out, seed } => {
            cmd_estimate(&system, &config, out.as_deref(), seed)
        }
        Cmd::Reference { system, config, out, resolution } => {
            cmd_reference(&system, config.as_deref(), out.as_deref(), resolution)
        }
        Cmd::Plot { estimates, reference, out } => {
            cmd_plot(&estimates, reference.as_deref(), &out)
        }
    }
}

/// Number of ball samples behind `certify`'s sampled-hypotheses report.
const CERTIFY_SAMPLES: usize = 10_000;
const CERTIFY_SEED: u64 = 17;

pub fn cmd_certify(
    system: &Path,
    d: u32,
    r: f64,
    out: Option<&Path>,
    params: CertificateParams<f64>,
) -> Result<i32, CliError> {
    let spec = SystemSpec::load(system)?;
    let f = spec.vector_field()?;
    let outcome = h_oracle(&f, d, r, &params).map_err(map_roa)?;
    let (verdict, code, certificate) = match outcome {
        OracleOutcome::Feasible(cert) => {
            let points = sample_ball(f.nvars(), r, CERTIFY_SAMPLES, CERTIFY_SEED);
            let margins = sampled_hypothesis_margins(&f, &cert, &points);
            ("feasible", 0, Some(certificate_json(&cert, margins)))
        }
        OracleOutcome::Infeasible => ("infeasible", 1, None),
        OracleOutcome::Unknown => ("unknown", 2, None),
    };
    let doc = serde_json::json!({
        "system": spec.name,
        "rescale": spec.rescale,
        "degree": d,
        "radius": r,
        "verdict": verdict,
        "certificate": certificate,
    });
    emit_json(&doc, out)?;
    Ok(code)
}

fn certificate_json(cert: &SosCertificate<f64>, margins: [f64; 3]) -> serde_json::Value {
    serde_json::json!({
        "requested_degree": cert.meta.requested_degree,
        "effective_degree": cert.meta.effective_degree,
        "beta": cert.meta.beta,
        "gamma": cert.meta.gamma,
        "delta": cert.meta.delta,
        "r": cert.meta.r,
        "lyapunov": polynomial_json(&cert.p),
        "multipliers": cert.multipliers.iter()
            .map(|m| polynomial_json(&m.poly))
            .collect::<Vec<_>>(),
        "max_identity_residual": cert.max_identity_residual,
        "min_gram_eigenvalue": cert.min_gram_eigenvalue,
        "sampled_margins": margins_json(margins),
    })
}

fn margins_json(margins: [f64; 3]) -> serde_json::Value {
    serde_json::json!({
        "lower_bound": margins[0],
        "upper_bound": margins[1],
        "decay": margins[2],
    })
}

pub fn cmd_reference(
    system: &Path,
    config: Option<&Path>,
    out: Option<&Path>,
    resolution: Option<usize>,
) -> Result<i32, CliError> {
    let spec = SystemSpec::load(system)?;
    let f = spec.vector_field()?;
    let cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let res = resolution.unwrap_or(cfg.grid_resolution);
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    let reference = compute_reference(&f, &cfg, res)?;
    let (grid_csv, boundary_csv) = write_reference(&reference, &dir)?;
    let doc = serde_json::json!({
        "system": spec.name,
        "rescale": spec.rescale,
        "resolution": res,
        "inside": reference.grid.inside_count(),
        "undecided": reference.grid.undecided_count(),
        "half_cell_diagonal": reference.grid.cell_diagonal() / 2.0,
        "grid_csv": grid_csv,
        "boundary_csv": boundary_csv,
    });
    emit_json(&doc, None)?;
    Ok(0)
}

fn compute_reference(
    f: &VectorField<f64>,
    cfg: &ExperimentConfig,
    resolution: usize,
) -> Result<ReferenceRoa<f64>, CliError> {
    if resolution == 1 {
        log::warn!("grid resolution 1 produces a single-cell degenerate reference");
    }
    let bbox = BoundingBox::symmetric(cfg.grid_half_width, f.nvars());
    reference_roa(f, bbox, resolution, &cfg.integrate_options())
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn write_reference(
    reference: &ReferenceRoa<f64>,
    dir: &Path,
) -> Result<(String, String), CliError> {
    let grid_name = "reference_grid.csv";
    let boundary_name = "reference_boundary.csv";
    let mut grid_bytes = Vec::new();
    reference.grid.write_csv(&mut grid_bytes).expect("vec write cannot fail");
    write_file(&dir.join(grid_name), &grid_bytes)?;
    let mut boundary_bytes = Vec::new();
    reference.boundary.write_csv(&mut boundary_bytes).expect("vec write cannot fail");
    write_file(&dir.join(boundary_name), &boundary_bytes)?;
    Ok((grid_name.into(), boundary_name.into()))
}

pub fn cmd_estimate(
    system: &Path,
    config: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<i32, CliError> {
    let spec = SystemSpec::load(system)?;
    let f = spec.vector_field()?;
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o.display().to_string();
    }
    if cfg.degrees.is_empty() {
        log::warn!("no degrees configured; nothing to do");
        return Ok(0);
    }
    let dir = PathBuf::from(&cfg.output_dir);

    log::info!(
        "computing reference ROA on a {}^{} grid",
        cfg.grid_resolution,
        f.nvars()
    );
    let reference = compute_reference(&f, &cfg, cfg.grid_resolution)?;
    let (grid_csv, boundary_csv) = write_reference(&reference, &dir)?;
    let inside = reference.grid.inside_points();
    let ref_half_diag = reference.grid.cell_diagonal() / 2.0;

    let mut rows = Vec::new();
    println!("degree  r_best   level      |D|     Hausdorff-to-reference");
    for &d in &cfg.degrees {
        log::info!("estimating at degree {d}");
        match estimate_roa(&f, d, &cfg.estimate_config()) {
            Ok(mut est) => {
                est.hausdorff_to_reference = match inside.len() {
                    0 => None,
                    _ => Some(
                        est.component
                            .hausdorff(&inside)
                            .map_err(|e| CliError::Numerical(e.to_string()))?,
                    ),
                };
                let points = sample_ball(f.nvars(), est.r_best, cfg.samples, cfg.seed);
                let margins = sampled_hypothesis_margins(&f, &est.certificate, &points);

                let comp_name = format!("component_d{d}.csv");
                let mut comp_bytes = Vec::new();
                est.component.write_csv(&mut comp_bytes).expect("vec write cannot fail");
                write_file(&dir.join(&comp_name), &comp_bytes)?;

                let bnd_name = format!("boundary_d{d}.csv");
                let boundary = component_boundary(&est);
                let mut bnd_bytes = Vec::new();
                boundary.write_csv(&mut bnd_bytes).expect("vec write cannot fail");
                write_file(&dir.join(&bnd_name), &bnd_bytes)?;

                let w = 2.0 * COMPONENT_BOX_MARGIN * est.r_best / est.resolution as f64;
                let mut doc = est.to_json();
                let extra = serde_json::json!({
                    "system": spec.name,
                    "rescale": spec.rescale,
                    "samples": cfg.samples,
                    "seed": cfg.seed,
                    "sampled_margins": margins_json(margins),
                    "component_csv": comp_name,
                    "boundary_csv": bnd_name,
                    "component_half_cell_diagonal": w * (f.nvars() as f64).sqrt() / 2.0,
                });
                for (k, v) in extra.as_object().expect("literal object").iter() {
                    doc[k.as_str()] = v.clone();
                }
                let est_name = format!("estimate_d{d}.json");
                emit_json(&doc, Some(&dir.join(&est_name)))?;

                println!(
                    "{:>6}  {:<7.4}  {:<9.4}  {:>6}  {}",
                    d,
                    est.r_best,
                    est.level,
                    est.component.len(),
                    est.hausdorff_to_reference
                        .map(|h| format!("{h:.4}"))
                        .unwrap_or_else(|| "n/a".into()),
                );
                rows.push(serde_json::json!({
                    "degree": d,
                    "status": "ok",
                    "r_best": est.r_best,
                    "r_star_estimate": est.r_star_estimate,
                    "level": est.level,
                    "component_size": est.component.len(),
                    "hausdorff_to_reference": est.hausdorff_to_reference,
                    "sampled_margins": margins_json(margins),
                    "estimate_json": est_name,
                }));
            }
            Err(e @ (RoaError::NoFeasibleRadius { .. } | RoaError::AnchorInfeasible { .. })) => {
                log::warn!("degree {d}: {e}");
                println!("{d:>6}  no certifiable radius");
                rows.push(serde_json::json!({
                    "degree": d,
                    "status": "no_feasible_radius",
                    "detail": e.to_string(),
                }));
            }
            Err(other) => return Err(map_roa(other)),
        }
    }

    let summary = serde_json::json!({
        "system": spec.name,
        "rescale": spec.rescale,
        "seed": cfg.seed,
        "reference": {
            "grid_csv": grid_csv,
            "boundary_csv": boundary_csv,
            "resolution": cfg.grid_resolution,
            "inside": reference.grid.inside_count(),
            "undecided": reference.grid.undecided_count(),
            "half_cell_diagonal": ref_half_diag,
        },
        "estimates": rows,
    });
    emit_json(&summary, Some(&dir.join("summary.json")))?;
    Ok(0)
}

/// Cells of the component grid with at least one face neighbor missing,
/// reconstructed from the stored cell centers. Order follows the
/// component's own (row-major) order, so output is deterministic.
fn component_boundary(est: &RoaEstimate<f64>) -> PointSet<f64> {
    let n = est.component.dim();
    let res = est.resolution as isize;
    let half = COMPONENT_BOX_MARGIN * est.certificate.meta.r;
    let w = 2.0 * half / est.resolution as f64;
    let digits = |x: &[f64]| -> Vec<isize> {
        x.iter().map(|&v| ((v + half) / w - 0.5).round() as isize).collect()
    };
    let occupied: HashSet<Vec<isize>> = est.component.iter().map(digits).collect();
    let mut boundary = PointSet::new(n);
    for x in est.component.iter() {
        let d = digits(x);
        let exposed = (0..n).any(|axis| {
            [-1isize, 1].iter().any(|&step| {
                let mut nb = d.clone();
                nb[axis] += step;
                nb[axis] < 0 || nb[axis] >= res || !occupied.contains(&nb)
            })
        });
        if exposed {
            boundary.push(x);
        }
    }
    boundary
}

/// Series palette for SVG output; the reference set is drawn gray.
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct PlotSeries {
    label: String,
    points: PointSet<f64>,
    /// Dashed circle radius for estimate series (r_best), None for the
    /// reference.
    circle: Option<f64>,
}

pub fn cmd_plot(
    estimates: &[PathBuf],
    reference: Option<&Path>,
    out: &Path,
) -> Result<i32, CliError> {
    if estimates.is_empty() {
        return Err(CliError::Usage("at least one estimate JSON is required".into()));
    }
    let mut series = Vec::new();
    if let Some(path) = reference {
        match load_points(path)? {
            Some(points) => {
                series.push(PlotSeries { label: "reference".into(), points, circle: None })
            }
            None => log::warn!("{}: empty reference boundary, skipping", path.display()),
        }
    }
    for path in estimates {
        let text = fs::read_to_string(path).map_err(|e| CliError::Input {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        let v: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let bad = |field: &str| {
            CliError::Usage(format!("{}: missing field {field} (not an estimate artifact?)", path.display()))
        };
        let d = v["requested_degree"].as_u64().ok_or_else(|| bad("requested_degree"))?;
        let r_best = v["r_best"].as_f64().ok_or_else(|| bad("r_best"))?;
        let bnd = v["boundary_csv"].as_str().ok_or_else(|| bad("boundary_csv"))?;
        let bnd_path = path.parent().unwrap_or(Path::new(".")).join(bnd);
        let Some(points) = load_points(&bnd_path)? else {
            log::warn!("{}: empty boundary, skipping", bnd_path.display());
            continue;
        };
        series.push(PlotSeries { label: format!("d{d}"), points, circle: Some(r_best) });
    }
    if series.is_empty() {
        return Err(CliError::Usage("every input series was empty".into()));
    }
    let n = series[0].points.dim();
    if series.iter().any(|s| s.points.dim() != n) {
        return Err(CliError::Usage("input point sets have mixed dimensions".into()));
    }

    let csv_path = out.with_extension("csv");
    write_file(&csv_path, overlay_csv(&series, n).as_bytes())?;
    if n == 2 {
        write_file(out, render_svg(&series).as_bytes())?;
        log::info!("wrote {} and {}", out.display(), csv_path.display());
    } else {
        log::warn!("SVG output supports 2-D systems only; emitted CSV alone");
    }
    Ok(0)
}

/// Reads a PointSet CSV; `Ok(None)` for an empty (all-interior) boundary.
fn load_points(path: &Path) -> Result<Option<PointSet<f64>>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    let meta_empty = file.metadata().map(|m| m.len() == 0).unwrap_or(false);
    if meta_empty {
        return Ok(None);
    }
    PointSet::read_csv(BufReader::new(file))
        .map(Some)
        .map_err(|e| CliError::Input { path: path.display().to_string(), detail: e.to_string() })
}

fn overlay_csv(series: &[PlotSeries], n: usize) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for i in 1..=n {
        let _ = write!(out, "x{i},");
    }
    out.push_str("series\n");
    let push_point = |x: &[f64], label: &str, out: &mut String| {
        for v in x {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{label}");
    };
    for s in series {
        for x in s.points.iter() {
            push_point(x, &s.label, &mut out);
        }
    }
    // Dashed certified-radius circles, sampled so the CSV stands alone.
    if n == 2 {
        for s in series {
            if let Some(r) = s.circle {
                for k in 0..256 {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / 256.0;
                    push_point(&[r * th.cos(), r * th.sin()], &format!("circle_{}", s.label), &mut out);
                }
            }
        }
    }
    out
}

fn render_svg(series: &[PlotSeries]) -> String {
    use std::fmt::Write as _;
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        for p in s.points.iter() {
            xmin = xmin.min(p[0]);
            xmax = xmax.max(p[0]);
            ymin = ymin.min(p[1]);
            ymax = ymax.max(p[1]);
        }
        if let Some(r) = s.circle {
            xmin = xmin.min(-r);
            xmax = xmax.max(r);
            ymin = ymin.min(-r);
            ymax = ymax.max(r);
        }
    }
    let pad = 0.05 * (xmax - xmin).max(ymax - ymin).max(1e-9);
    xmin -= pad;
    xmax += pad;
    ymin -= pad;
    ymax += pad;
    let width = 640.0;
    let scale = width / (xmax - xmin);
    let height = (ymax - ymin) * scale;
    let px = |x: f64| (x - xmin) * scale;
    let py = |y: f64| (ymax - y) * scale;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width:.1} {height:.1}\" \
         font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let mut palette_idx = 0;
    for (row, s) in series.iter().enumerate() {
        let color = if s.circle.is_none() {
            "#999999"
        } else {
            let c = PALETTE[palette_idx % PALETTE.len()];
            palette_idx += 1;
            c
        };
        for p in s.points.iter() {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.4\" fill=\"{color}\"/>",
                px(p[0]),
                py(p[1])
            );
        }
        if let Some(r) = s.circle {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"none\" \
                 stroke=\"{color}\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>",
                px(0.0),
                py(0.0),
                r * scale
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"10\" y=\"{:.1}\" fill=\"{color}\">{}</text>",
            18.0 + 18.0 * row as f64,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn emit_json(doc: &serde_json::Value, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).expect("json serialization cannot fail");
    text.push('\n');
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::Output {
                path: parent.display().to_string(),
                detail: e.to_string(),
            })?;
        }
    }
    fs::write(path, bytes)
        .map_err(|e| CliError::Output { path: path.display().to_string(), detail: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::reverse_van_der_pol;

    fn write_system(dir: &Path, name: &str, components: &[&str]) -> PathBuf {
        let spec = serde_json::json!({
            "name": name,
            "nvars": components.len(),
            "components": components,
        });
        let path = dir.join(format!("{name}.json"));
        fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
        path
    }

    #[test]
    fn system_spec_requires_equilibrium_at_origin() {
        let spec = SystemSpec {
            name: "offset".into(),
            nvars: 2,
            components: vec!["x1 + 1".into(), "-x2".into()],
            rescale: None,
            notes: String::new(),
        };
        let err = spec.vector_field().unwrap_err();
        assert_eq!(err.exit_code(), 64);
        assert!(err.to_string().contains("equilibrium"), "{err}");
    }

    #[test]
    fn system_spec_rescale_matches_library_rescale() {
        let spec = SystemSpec {
            name: "vdp".into(),
            nvars: 2,
            components: vec!["-x2".into(), "x1 + x2*(x1^2 - 1)".into()],
            rescale: Some(1.0 / 3.0),
            notes: String::new(),
        };
        let f = spec.vector_field().unwrap();
        let expected = reverse_van_der_pol::<f64>().rescale(1.0 / 3.0);
        for i in 0..2 {
            let diff = f.component(i).coeff_max_abs_diff(expected.component(i));
            assert!(diff <= 1e-15, "component {i} differs by {diff}");
        }
    }

    #[test]
    fn config_validation_rejects_bad_tolerances() {
        let cfg = ExperimentConfig { r_tol: 0.0, ..ExperimentConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { r_min: 2.0, ..ExperimentConfig::default() };
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }

    #[test]
    fn certify_verdicts_map_to_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let stable = write_system(dir.path(), "stable", &["-x1", "-x2"]);
        let anti = write_system(dir.path(), "anti", &["x1", "x2"]);
        let out = dir.path().join("cert.json");

        let code =
            cmd_certify(&stable, 2, 1.0, Some(&out), CertificateParams::default()).unwrap();
        assert_eq!(code, 0);
        let doc: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(doc["verdict"], "feasible");
        assert!(doc["certificate"]["max_identity_residual"].as_f64().unwrap() <= 1e-6);
        for (_, v) in doc["certificate"]["sampled_margins"].as_object().unwrap() {
            assert!(v.as_f64().unwrap() <= 1e-6);
        }

        let code = cmd_certify(&anti, 2, 0.5, Some(&out), CertificateParams::default()).unwrap();
        assert_eq!(code, 1);
        let doc: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(doc["verdict"], "infeasible");
        assert!(doc["certificate"].is_null());
    }

    #[test]
    fn malformed_system_json_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.json");
        fs::write(&path, "{ not json").unwrap();
        let err = SystemSpec::load(&path).unwrap_err();
        assert_eq!(err.exit_code(), 64);
    }

    #[test]
    fn reference_writes_grid_and_boundary() {
        let dir = tempfile::tempdir().unwrap();
        let stable = write_system(dir.path(), "stable", &["-x1", "-x2"]);
        let cfg = ExperimentConfig {
            grid_resolution: 15,
            t_max: 20.0,
            ..ExperimentConfig::default()
        };
        let cfg_path = dir.path().join("cfg.json");
        fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
        let out = dir.path().join("ref");
        let code = cmd_reference(&stable, Some(&cfg_path), Some(&out), None).unwrap();
        assert_eq!(code, 0);
        let grid = fs::read_to_string(out.join("reference_grid.csv")).unwrap();
        assert!(grid.lines().count() == 15 * 15 + 1, "header plus one row per cell");
        assert!(grid.contains("inside"));
        // Globally stable: no boundary cells on an interior box.
        assert_eq!(fs::read_to_string(out.join("reference_boundary.csv")).unwrap(), "");
    }

    fn small_experiment(dir: &Path) -> PathBuf {
        let cfg = ExperimentConfig {
            degrees: vec![2],
            r_max: 0.6,
            r_tol: 0.1,
            a_tol: 1e-2,
            grid_half_width: 1.0,
            grid_resolution: 41,
            t_max: 20.0,
            component_resolution: 61,
            samples: 500,
            output_dir: dir.join("out").display().to_string(),
            ..ExperimentConfig::default()
        };
        let path = dir.join("experiment.json");
        fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
        path
    }

    #[test]
    fn estimate_pipeline_produces_artifacts_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let stable = write_system(dir.path(), "stable", &["-x1", "-x2"]);
        let cfg_path = small_experiment(dir.path());

        let out1 = dir.path().join("run1");
        let code = cmd_estimate(&stable, &cfg_path, Some(&out1), None).unwrap();
        assert_eq!(code, 0);

        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out1.join("summary.json")).unwrap())
                .unwrap();
        let est = &summary["estimates"][0];
        assert_eq!(est["status"], "ok");
        assert!(est["r_best"].as_f64().unwrap() >= 0.5);
        assert!(est["level"].as_f64().unwrap() > 0.0);
        assert!(est["hausdorff_to_reference"].as_f64().is_some());
        assert!(est["component_size"].as_u64().unwrap() > 0);

        let detail: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out1.join("estimate_d2.json")).unwrap())
                .unwrap();
        assert_eq!(detail["system"], "stable");
        assert!(detail["radius_trace"]["queries"].as_array().unwrap().len() >= 2);
        assert!(out1.join("component_d2.csv").exists());
        assert!(out1.join("boundary_d2.csv").exists());

        // Reruns are byte-identical.
        let out2 = dir.path().join("run2");
        assert_eq!(cmd_estimate(&stable, &cfg_path, Some(&out2), None).unwrap(), 0);
        for name in
            ["summary.json", "estimate_d2.json", "component_d2.csv", "boundary_d2.csv"]
        {
            let a = fs::read(out1.join(name)).unwrap();
            let b = fs::read(out2.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn estimate_with_no_degrees_is_a_warned_noop() {
        let dir = tempfile::tempdir().unwrap();
        let stable = write_system(dir.path(), "stable", &["-x1", "-x2"]);
        let cfg = ExperimentConfig { degrees: vec![], ..ExperimentConfig::default() };
        let cfg_path = dir.path().join("cfg.json");
        fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
        let code = cmd_estimate(&stable, &cfg_path, None, None).unwrap();
        assert_eq!(code, 0);
    }

    #[test]
    fn estimate_records_infeasible_degrees_and_continues() {
        let dir = tempfile::tempdir().unwrap();
        let anti = write_system(dir.path(), "anti", &["x1", "x2"]);
        let cfg_path = small_experiment(dir.path());
        let out = dir.path().join("anti_out");
        let code = cmd_estimate(&anti, &cfg_path, Some(&out), None).unwrap();
        assert_eq!(code, 0);
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["estimates"][0]["status"], "no_feasible_radius");
    }

    #[test]
    fn plot_emits_svg_and_csv_overlay() {
        let dir = tempfile::tempdir().unwrap();
        let stable = write_system(dir.path(), "stable", &["-x1", "-x2"]);
        let cfg_path = small_experiment(dir.path());
        let out = dir.path().join("plot_run");
        cmd_estimate(&stable, &cfg_path, Some(&out), None).unwrap();

        let svg_path = dir.path().join("fig.svg");
        let code = cmd_plot(
            &[out.join("estimate_d2.json")],
            Some(&out.join("reference_boundary.csv")),
            &svg_path,
        )
        .unwrap();
        assert_eq!(code, 0);
        let svg = fs::read_to_string(&svg_path).unwrap();
        assert!(svg.contains("stroke-dasharray"), "dashed r_best circle missing");
        assert!(svg.contains("d2"));
        let csv = fs::read_to_string(dir.path().join("fig.csv")).unwrap();
        assert!(csv.starts_with("x1,x2,series"));
        assert!(csv.contains(",d2"));
        assert!(csv.contains(",circle_d2"));
    }

    #[test]
    fn component_boundary_traces_the_disk_rim() {
        use crate::roa::verify_component;
        use crate::sos::HMeta;
        let cert = SosCertificate {
            p: Polynomial::parse("x1^2 + x2^2", 2).unwrap(),
            multipliers: vec![],
            meta: HMeta {
                beta: 1e-3,
                gamma: 1e3,
                delta: 1e-3,
                r: 0.6,
                requested_degree: 2,
                effective_degree: 2,
                multiplier_degrees: [0; 6],
            },
            max_identity_residual: 0.0,
            min_gram_eigenvalue: 0.0,
        };
        let f = VectorField::new(vec![
            Polynomial::parse("-x1", 2).unwrap(),
            Polynomial::parse("-x2", 2).unwrap(),
        ]);
        let est = verify_component(&f, &cert, 0.25, 101).unwrap();
        let boundary = component_boundary(&est);
        assert!(!boundary.is_empty());
        assert!(boundary.len() < est.component.len());
        let w = 2.0 * COMPONENT_BOX_MARGIN * 0.6 / 101.0;
        for x in boundary.iter() {
            let norm = (x[0] * x[0] + x[1] * x[1]).sqrt();
            // Rim of the a = 0.25 disk, within one cell diagonal.
            assert!(
                (norm - 0.5).abs() <= w * 2.0_f64.sqrt(),
                "boundary point at norm {norm}"
            );
        }
    }
}
