//! `lpiso`: reproducible runs of every computation and verification, with
//! machine-readable reports.
//!
//! Exit codes: 0 all checks passed, 1 a verification failed (the report is
//! still written), 2 usage or input error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::Format;

#[derive(Debug, Parser, Serialize)]
#[command(name = "lpiso", version, about = "Linear-programming certificates for isoperimetric inequalities")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Dimension n.
    #[arg(long, global = true, default_value_t = 2)]
    pub dim: usize,
    /// Curvature κ (any real).
    #[arg(long, global = true, default_value_t = 0.0, allow_negative_numbers = true)]
    pub kappa: f64,
    /// Volume of the comparison ball.
    #[arg(long, global = true, conflicts_with = "radius")]
    pub volume: Option<f64>,
    /// Radius of the comparison ball.
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Number of geodesics allowed between two points.
    #[arg(long, global = true, default_value_t = 1)]
    pub m: usize,
    /// Grid size; its meaning depends on the subcommand.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Monte Carlo sample count (requires --seed).
    #[arg(long, global = true)]
    pub mc_samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Pass tolerance of the subcommand's main check.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Tabulate the ball's boundary area A_B(V) over a volume range.
    Profile(ProfileArgs),
    /// Build and verify the dual certificate of a model ball.
    Certificate(CertificateArgs),
    /// Build and solve the discretized isoperimetric (table 1) or relative
    /// (table 2) program.
    Lp(LpArgs),
    /// Santaló and Croke residuals of a chord measure.
    MeasureCheck(MeasureCheckArgs),
    /// Verify the two-variable inequalities behind the closed-form f.
    Lemma(LemmaArgs),
    /// Negative curvature: smallness, the combined inequality, and the
    /// Jacobian question on the complex hyperbolic plane.
    Negbound(NegboundArgs),
    /// Boundary gravity of a planar domain against the disk.
    Prince(PrinceArgs),
    /// Domains joined by at most m geodesics.
    Relative(RelativeArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ProfileArgs {
    #[arg(long)]
    pub vmin: f64,
    #[arg(long)]
    pub vmax: f64,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Geometric instead of uniform spacing.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SetChoice {
    /// Signed coefficients for κ < 0, nonnegative otherwise.
    Auto,
    Table1,
    Signed,
}

#[derive(Debug, Args, Serialize)]
pub struct CertificateArgs {
    #[arg(long, value_enum, default_value_t = SetChoice::Auto)]
    pub constraint_set: SetChoice,
    /// Collocation nodes of the consistency solve.
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct LpArgs {
    /// 1: isoperimetric program; 2: relative program (uses --m).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub table: u8,
    /// Uniform ℓ-nodes added to the curve-aligned ones (default 2·grid).
    #[arg(long)]
    pub ell_nodes: Option<usize>,
    /// Leave the certificate's f out of the family.
    #[arg(long)]
    pub products_only: bool,
    /// Also write the program in the plain-text format.
    #[arg(long)]
    pub lp_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MeasureCheckArgs {
    /// Check this measure (CSV `ell,alpha,beta,mass` or JSON) instead of the
    /// ball's quadrature measure.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Write the quadrature measure (CSV, or JSON for a `.json` path).
    #[arg(long)]
    pub measure_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CaseChoice {
    Spherical,
    Hyperbolic,
    Both,
}

#[derive(Debug, Args, Serialize)]
pub struct LemmaArgs {
    #[arg(long, value_enum, default_value_t = CaseChoice::Both)]
    pub case: CaseChoice,
    /// Multistart count for the critical-point systems.
    #[arg(long, default_value_t = 2000)]
    pub starts: usize,
    /// Random points for the factorization identity.
    #[arg(long, default_value_t = 10_000)]
    pub factorization_points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct NegboundArgs {
    /// Longest geodesic L for the smallness condition (default 2r).
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 10.0)]
    pub ell_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Disk,
    Ellipse,
    Square,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct PrinceArgs {
    #[arg(long, value_enum)]
    pub shape: Shape,
    /// Disk radius.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    /// Ellipse semi-axis towards the observer.
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    /// Ellipse semi-axis across.
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    /// Square side.
    #[arg(long, default_value_t = 1.0)]
    pub side: f64,
    /// `alpha,L` table for --shape csv.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RelativeArgs {
    /// Quadrature nodes of the orbifold measure.
    #[arg(long, default_value_t = 128)]
    pub nodes: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Ok(s) = std::env::var("LPISO_THREADS") {
        match s.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: LPISO_THREADS must be a positive integer, got {s:?}");
                return ExitCode::from(2);
            }
        }
    }
    let g = &cli.global;
    let run = match &cli.command {
        Command::Profile(a) => commands::profile(g, a),
        Command::Certificate(a) => commands::certificate(g, a),
        Command::Lp(a) => commands::lp(g, a),
        Command::MeasureCheck(a) => commands::measure_check(g, a),
        Command::Lemma(a) => commands::lemma(g, a),
        Command::Negbound(a) => commands::negbound(g, a),
        Command::Prince(a) => commands::prince(g, a),
        Command::Relative(a) => commands::relative(g, a),
    };
    let outcome = match run {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let config = serde_json::to_value(&cli).expect("configuration serializes");
    let name = config["command"].as_object().and_then(|m| m.keys().next().cloned()).unwrap_or_default();
    let report = output::envelope(&name, config, &outcome);
    let bytes = match output::render(g.format, &report, outcome.table.as_ref()) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = output::write(&bytes, g.out.as_deref()) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(if outcome.passed { 0 } else { 1 })
}
