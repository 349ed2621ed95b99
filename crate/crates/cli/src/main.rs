use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use toda_ps::config::{MeshFormat, RunConfig, Tolerances};
use toda_ps::pipeline::{self, ExportOptions, VerifyReport};
use toda_ps::potentials::{PotentialConfig, Preset};

#[derive(Parser)]
#[command(name = "toda-ps", version, about = "Pseudo-spherical surfaces from C0 boundary potentials")]
struct Cli {
    /// Worker threads for the parallel stages (default: all cores).
    #[arg(long, global = true, env = "TODA_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the surfaces and write one mesh per lambda and format.
    Generate(Common),
    /// Check every geometric invariant; exit 1 on the first violation.
    Verify(Common),
    /// Write meshes plus coordinate curves and frame glyphs.
    Export {
        #[command(flatten)]
        common: Common,
        /// Write every n-th coordinate curve as OBJ polylines.
        #[arg(long, value_name = "N")]
        curves: Option<usize>,
        /// Write (e1, e2, N) glyphs along the x-curve nearest to this y.
        #[arg(long, value_name = "Y", allow_hyphen_values = true)]
        glyph_row: Option<f64>,
    },
    /// Generate and verify over the lambda list, one summary row per lambda.
    Sweep(Common),
    /// Compare the pipeline angle with an independent sine-Gordon solve.
    OracleSg(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, value_name = "JSON")]
    config: Option<PathBuf>,
    /// pseudosphere, vacuum or c0_kink.
    #[arg(long)]
    preset: Option<String>,
    /// Amplitude of the c0_kink preset.
    #[arg(long, allow_hyphen_values = true)]
    amplitude: Option<f64>,
    /// Comma-separated spectral parameters.
    #[arg(long, value_delimiter = ',', value_name = "L1,L2,..")]
    lambda: Option<Vec<f64>>,
    /// Nodes per side.
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    /// Truncation degree of the loop series.
    #[arg(long, value_name = "K")]
    trunc: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Set every verification tolerance to this value.
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,
    /// Comma-separated mesh formats: obj, ply, csv.
    #[arg(long, value_delimiter = ',', value_parser = parse_format)]
    format: Option<Vec<MeshFormat>>,
}

fn parse_format(s: &str) -> Result<MeshFormat, String> {
    match s {
        "obj" => Ok(MeshFormat::Obj),
        "ply" => Ok(MeshFormat::Ply),
        "csv" => Ok(MeshFormat::Csv),
        _ => Err(format!("unknown format `{s}` (expected obj, ply or csv)")),
    }
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(_)) => RunConfig::from_preset(Preset::Vacuum),
            (None, None) => bail!("either --config or --preset is required"),
        };
        if let Some(name) = &self.preset {
            c.potential = PotentialConfig::from_preset(Preset::parse(name, self.amplitude)?);
        } else if self.amplitude.is_some() {
            bail!("--amplitude needs --preset c0_kink");
        }
        if let Some(l) = &self.lambda {
            c.lambdas = l.clone();
        }
        if let Some(n) = self.grid {
            c.resolution = n;
        }
        if let Some(k) = self.trunc {
            c.trunc = k;
        }
        if let Some(out) = &self.out {
            c.out = out.clone();
        }
        if let Some(t) = self.tol {
            c.tolerances = Tolerances::uniform(t);
        }
        if let Some(f) = &self.format {
            c.formats = f.clone();
        }
        c.validate().context("invalid configuration")?;
        std::fs::create_dir_all(&c.out).with_context(|| format!("creating {}", c.out.display()))?;
        Ok(c)
    }
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn print_warnings(report: &VerifyReport) {
    for l in &report.lambdas {
        for w in &l.warnings {
            eprintln!("warning: {w}");
        }
    }
}

fn verdict(report: &VerifyReport) -> ExitCode {
    match &report.first_failure {
        None => ExitCode::SUCCESS,
        Some(name) => {
            eprintln!("verification failed: {name}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    match cli.command {
        Command::Generate(common) => {
            let c = common.resolve()?;
            let out = pipeline::generate(&c)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            print_files(&out.files);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(common) => {
            let c = common.resolve()?;
            let (report, path) = pipeline::verify(&c)?;
            print_warnings(&report);
            for l in &report.lambdas {
                println!("lambda = {}: {} regular nodes", l.lambda, l.regular_nodes);
                for i in &l.invariants {
                    let mark = if i.pass { "ok  " } else { "FAIL" };
                    println!("  {mark} {:<24} {:.3e} (tol {:.1e})", i.name, i.value, i.tol);
                }
            }
            println!("wrote {}", path.display());
            Ok(verdict(&report))
        }
        Command::Export { common, curves, glyph_row } => {
            if curves == Some(0) {
                bail!("--curves must be at least 1");
            }
            let c = common.resolve()?;
            let files = pipeline::export(&c, &ExportOptions { curves, glyph_row })?;
            print_files(&files);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(common) => {
            let c = common.resolve()?;
            let gen = pipeline::generate(&c)?;
            print_files(&gen.files);
            let (report, path) = pipeline::verify(&c)?;
            print_warnings(&report);
            println!("{:>10} {:>8} {:>12} {:>12} {:>12}  status", "lambda", "regular", "K+1", "sine-gordon", "harmonicity");
            for l in &report.lambdas {
                let value = |name: &str| l.invariants.iter().find(|i| i.name == name).map_or(f64::NAN, |i| i.value);
                let status = if l.invariants.iter().all(|i| i.pass) { "pass" } else { "FAIL" };
                println!(
                    "{:>10} {:>8} {:>12.3e} {:>12.3e} {:>12.3e}  {status}",
                    l.lambda,
                    l.regular_nodes,
                    value("K+1 residual"),
                    value("sine-Gordon residual"),
                    value("harmonicity residual"),
                );
            }
            println!("wrote {}", path.display());
            Ok(verdict(&report))
        }
        Command::OracleSg(common) => {
            let c = common.resolve()?;
            let (r, path) = pipeline::oracle_sg(&c)?;
            println!("{}: {} Picard iterations, contraction {:.3e}", r.label, r.iterations, r.contraction);
            println!("weak-form residual {:.3e}", r.weak_form_residual);
            println!("sup |pipeline - goursat| {:.3e}", r.sup_error);
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
