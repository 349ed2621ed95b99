//! End-to-end runs: potential, frame, surfaces, verification and files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{self, front_from_normal, geometry_report, recover_boundary_angles, Breaks, GeometryOptions, GeometryReport, Stat};
use crate::config::{ConfigError, MeshFormat, RunConfig};
use crate::export;
use crate::frame::{extract_connection, frame_field, wrap_pi, zcc_residual, ConnectionField, FrameError, FrameField, FrameOptions};
use crate::grid::{Field, Grid2};
use crate::oracle::{goursat_from_spec, OracleError};
use crate::potentials::PotentialSpec;
use crate::sym::{analytic_derivatives, max_distance_up_to_translation, sym_immersion, Derivatives, SurfaceGrid, SymError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("frame stage: {0}")]
    Frame(#[from] FrameError),
    #[error("surface stage: {0}")]
    Sym(#[from] SymError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Frame and connection for one configuration.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub config: RunConfig,
    pub label: String,
    pub spec: PotentialSpec,
    pub grid: Grid2,
    pub breaks: Breaks,
    pub frame: FrameField,
    pub conn: ConnectionField,
    pub elapsed: Duration,
}

/// Surface at one spectral value with its analytic derivatives.
#[derive(Clone, Debug)]
pub struct LambdaSurface {
    pub lambda: f64,
    pub surface: SurfaceGrid,
    pub derivs: Derivatives,
}

impl Pipeline {
    pub fn build(config: &RunConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let start = Instant::now();
        let spec = config.spec()?;
        let grid = config.grid()?;
        let frame = frame_field(&spec, grid, config.trunc, FrameOptions { keep_factors: false })?;
        let conn = extract_connection(&frame, &spec)?;
        let breaks = Breaks::from_spec(&spec, &grid);
        Ok(Self {
            config: config.clone(),
            label: spec.name.clone(),
            spec,
            grid,
            breaks,
            frame,
            conn,
            elapsed: start.elapsed(),
        })
    }

    pub fn surface(&self, lambda: f64) -> Result<LambdaSurface, PipelineError> {
        let surface = sym_immersion(&self.frame, lambda)?;
        let derivs = analytic_derivatives(&self.frame, &self.conn, lambda)?;
        Ok(LambdaSurface { lambda, surface, derivs })
    }

    pub fn geometry_options(&self) -> GeometryOptions {
        GeometryOptions {
            order: self.config.fd_order,
            breaks: self.breaks.clone(),
            ..GeometryOptions::default()
        }
    }

    fn file(&self, lambda: f64, suffix: &str) -> PathBuf {
        self.config.out.join(format!("{}_lambda{}{}", self.label, lambda, suffix))
    }
}

/// One checked identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Invariant {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Invariant {
    fn new(name: &str, value: f64, tol: f64) -> Self {
        Self { name: name.to_string(), value, tol, pass: value <= tol }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaReport {
    pub lambda: f64,
    /// Nodes with regular forms and `|sin ω| > 0.1`.
    pub regular_nodes: usize,
    pub origin_ambiguous: bool,
    pub torsion_samples: usize,
    pub warnings: Vec<String>,
    pub invariants: Vec<Invariant>,
    pub summary: Vec<Stat>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub label: String,
    pub domain: [f64; 4],
    pub resolution: usize,
    pub trunc: usize,
    pub lambdas: Vec<LambdaReport>,
    pub passed: bool,
    /// `"<invariant> (lambda = <λ>)"` for the first failure.
    pub first_failure: Option<String>,
}

fn sup(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m: f64, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

/// Grid nodes at least `gap` nodes away from every break line.
fn away_from_breaks(grid: &Grid2, breaks: &Breaks, gap: usize) -> Vec<bool> {
    (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            breaks.x.iter().all(|&b| i.abs_diff(b) >= gap) && breaks.y.iter().all(|&b| j.abs_diff(b) >= gap)
        })
        .collect()
}

/// Checks every geometric identity of one surface against the tolerances.
pub fn verify_lambda(p: &Pipeline, ls: &LambdaSurface) -> (LambdaReport, GeometryReport) {
    let tol = &p.config.tolerances;
    let g = p.grid;
    let d = &ls.derivs;
    let geo = geometry_report(&ls.surface, &d.fx, &d.fy, None, &p.geometry_options());
    let angle = p.conn.angle_field();
    let sin_ok: Vec<bool> = angle.data.iter().map(|w| w.sin().abs() > analysis::SIN_CUT).collect();
    // Derivatives of the angle are only weak across kink lines: FD-based
    // residuals are reported there but not asserted.
    let smooth = away_from_breaks(&g, &p.breaks, p.config.fd_order);
    let all = 0..g.len();
    let lam = ls.lambda;
    let f = &geo.forms;

    let k_res = sup(all.clone().filter(|&k| sin_ok[k] && f.regular[k] && smooth[k]).map(|k| f.k[k] + 1.0));
    let e_res = sup(all.clone().map(|k| f.e[k] - lam * lam));
    let g_res = sup(all.clone().map(|k| f.g[k] - 1.0 / (lam * lam)));
    let fcos = sup(all.clone().map(|k| f.f[k] - angle.data[k].cos()));
    let l_res = sup(f.l.iter().copied());
    let n_res = sup(f.n.iter().copied());
    let msin = sup(all.clone().map(|k| f.m[k] - angle.data[k].sin()));
    let ang = sup(all.clone().map(|k| wrap_pi(geo.omega.data[k] - angle.data[k])));
    let sg = sup(all.clone().filter(|&k| smooth[k]).map(|k| geo.sine_gordon[k]));
    let harm = sup(all.clone().filter(|&k| smooth[k]).map(|k| geo.harmonicity[k]));
    let cross = sup(geo.cross.iter().copied());
    let torsion_ok: Vec<_> = geo
        .torsion
        .iter()
        .filter(|s| angle.at(s.i, s.j).sin().abs() > 0.3 && s.kappa > analysis::TORSION_MIN_KAPPA && smooth[g.idx(s.i, s.j)])
        .collect();
    let tors = sup(torsion_ok.iter().map(|s| s.tau.abs() - 1.0));
    let front = front_from_normal(&ls.surface.n_field(), p.config.fd_order, &p.breaks);
    let front_res = max_distance_up_to_translation(&front.f, &ls.surface.f);
    let bnd = recover_boundary_angles(&geo.omega);
    let (i0, _) = g.origin();
    let a0 = p.conn.alpha[i0];
    let b_res = sup(
        (0..g.nx())
            .map(|i| bnd.alpha[i] - (p.conn.alpha[i] - a0))
            .chain((0..g.ny()).map(|j| bnd.beta[j] - (p.conn.beta[j] + a0))),
    );
    let unit = p.frame.unitarity(&[lam]).max();
    let split = p.frame.max_split_residual();
    let zcc = zcc_residual(&p.conn, p.config.fd_order).max(Some(&smooth));

    let invariants = vec![
        Invariant::new("K+1 residual", k_res, tol.curvature),
        Invariant::new("E-lambda^2 residual", e_res, tol.first_form),
        Invariant::new("G-lambda^-2 residual", g_res, tol.first_form),
        Invariant::new("F-cos residual", fcos, tol.f_cos),
        Invariant::new("l residual", l_res, tol.second_form),
        Invariant::new("n residual", n_res, tol.second_form),
        Invariant::new("m-sin residual", msin, tol.second_form),
        Invariant::new("angle residual", ang, tol.angle),
        Invariant::new("sine-Gordon residual", sg, tol.sine_gordon),
        Invariant::new("harmonicity residual", harm, tol.harmonicity),
        Invariant::new("cross-product residual", cross, tol.f_cos),
        Invariant::new("torsion residual", tors, tol.torsion),
        Invariant::new("front-from-normal residual", front_res, tol.front),
        Invariant::new("cell closure residual", front.max_closure, tol.closure),
        Invariant::new("boundary-angle residual", b_res, tol.boundary),
        Invariant::new("unitarity residual", unit, tol.unitarity),
        Invariant::new("split residual", split, tol.split),
        Invariant::new("ZCC residual", zcc, tol.zcc),
    ];
    let regular_nodes = geo.regular_count();
    let mut warnings = Vec::new();
    if regular_nodes == 0 {
        warnings.push(format!("surface at lambda = {lam} is not regular: no node with |sin ω| > {}", analysis::SIN_CUT));
    }
    if geo.origin_ambiguous {
        warnings.push("sin ω(0,0) = 0: orientation of the angle branch is ambiguous".to_string());
    }
    let report = LambdaReport {
        lambda: lam,
        regular_nodes,
        origin_ambiguous: geo.origin_ambiguous,
        torsion_samples: torsion_ok.len(),
        warnings,
        invariants,
        summary: geo.summary.clone(),
    };
    (report, geo)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn write_mesh(path: &Path, s: &SurfaceGrid, format: MeshFormat) -> Result<(), PipelineError> {
    write_file(path, |w| match format {
        MeshFormat::Obj => export::write_obj(w, s),
        MeshFormat::Ply => export::write_ply(w, s),
        MeshFormat::Csv => export::write_surface_csv(w, s),
    })
}

/// Output of a `generate` run.
#[derive(Clone, Debug)]
pub struct GenerateOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Builds every surface of the configuration and writes one mesh per λ and format.
pub fn generate(config: &RunConfig) -> Result<GenerateOutput, PipelineError> {
    let p = Pipeline::build(config)?;
    let mut out = GenerateOutput { files: Vec::new(), warnings: Vec::new() };
    let regular = p.conn.angle_field().data.iter().any(|w| w.sin().abs() > analysis::SIN_CUT);
    for &lambda in &config.lambdas {
        let ls = p.surface(lambda)?;
        if !regular {
            out.warnings.push(format!("surface at lambda = {lambda} is not regular: no node with |sin ω| > {}", analysis::SIN_CUT));
        }
        for &fmt in &config.formats {
            let path = p.file(lambda, &format!(".{}", fmt.extension()));
            write_mesh(&path, &ls.surface, fmt)?;
            out.files.push(path);
        }
    }
    Ok(out)
}

/// Verifies every λ; writes `<label>_verify.json` and per-node CSV reports.
pub fn verify(config: &RunConfig) -> Result<(VerifyReport, PathBuf), PipelineError> {
    let p = Pipeline::build(config)?;
    let mut lambdas = Vec::new();
    for &lambda in &config.lambdas {
        let ls = p.surface(lambda)?;
        let (r, geo) = verify_lambda(&p, &ls);
        write_file(&p.file(lambda, "_report.csv"), |w| export::write_report_csv(w, &geo))?;
        lambdas.push(r);
    }
    let first_failure = lambdas
        .iter()
        .flat_map(|r| r.invariants.iter().map(move |i| (r.lambda, i)))
        .find(|(_, i)| !i.pass)
        .map(|(l, i)| format!("{} (lambda = {l})", i.name));
    let report = VerifyReport {
        label: p.label.clone(),
        domain: config.domain,
        resolution: config.resolution,
        trunc: config.trunc,
        passed: first_failure.is_none(),
        first_failure,
        lambdas,
    };
    let path = config.out.join(format!("{}_verify.json", p.label));
    write_file(&path, |w| {
        serde_json::to_writer_pretty(&mut *w, &report).map_err(std::io::Error::other)?;
        writeln!(w)
    })?;
    Ok((report, path))
}

/// Extra artifacts for `export`.
#[derive(Clone, Debug, Default)]
pub struct ExportOptions {
    /// Write every `n`-th coordinate curve as OBJ polylines.
    pub curves: Option<usize>,
    /// Write frame glyphs along the `x`-curve nearest to this `y`.
    pub glyph_row: Option<f64>,
}

pub fn export(config: &RunConfig, opts: &ExportOptions) -> Result<Vec<PathBuf>, PipelineError> {
    let p = Pipeline::build(config)?;
    let mut files = Vec::new();
    for &lambda in &config.lambdas {
        let ls = p.surface(lambda)?;
        for &fmt in &config.formats {
            let path = p.file(lambda, &format!(".{}", fmt.extension()));
            write_mesh(&path, &ls.surface, fmt)?;
            files.push(path);
        }
        if let Some(every) = opts.curves {
            let path = p.file(lambda, "_curves.obj");
            write_file(&path, |w| export::write_curves_obj(w, &ls.surface, every))?;
            files.push(path);
        }
        if let Some(y) = opts.glyph_row {
            let omega = analysis::angle_field(&ls.surface, &ls.derivs.fx, &ls.derivs.fy).omega;
            let frames = analysis::frames(&ls.surface, &ls.derivs.fx, &omega);
            let glyphs = export::glyphs_along_row(&ls.surface, &frames, p.grid.y.nearest(y));
            let path = p.file(lambda, "_frames.csv");
            write_file(&path, |w| export::write_glyphs_csv(w, &glyphs))?;
            files.push(path);
        }
    }
    Ok(files)
}

/// Pipeline angle against the Goursat solution on the same grid.
#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub label: String,
    pub iterations: usize,
    pub contraction: f64,
    pub weak_form_residual: f64,
    /// `sup |φ̂ + α − φ̃|`.
    pub sup_error: f64,
}

pub fn oracle_sg(config: &RunConfig) -> Result<(OracleReport, PathBuf), PipelineError> {
    let p = Pipeline::build(config)?;
    let sol = goursat_from_spec(&p.spec, p.grid, 1e-12, 200)?;
    let angle = p.conn.angle_field();
    let sup_error = sup(angle.data.iter().zip(&sol.phi.data).map(|(a, b)| a - b));
    let report = OracleReport {
        label: p.label.clone(),
        iterations: sol.iterations,
        contraction: sol.contraction,
        weak_form_residual: sol.weak_form_residual(),
        sup_error,
    };
    let path = config.out.join(format!("{}_goursat.csv", p.label));
    write_file(&path, |w| write_angles(w, &angle, &sol.phi))?;
    Ok((report, path))
}

fn write_angles<W: Write>(w: &mut W, pipeline: &Field<f64>, goursat: &Field<f64>) -> std::io::Result<()> {
    writeln!(w, "i,j,x,y,pipeline,goursat")?;
    let g = pipeline.grid;
    for k in 0..g.len() {
        let (i, j) = g.ij(k);
        let (x, y) = g.point(i, j);
        let vals = [x, y, pipeline.data[k], goursat.data[k]].map(export::num).join(",");
        writeln!(w, "{i},{j},{vals}")?;
    }
    Ok(())
}
