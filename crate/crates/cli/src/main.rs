//! `rbl`: evaluate reduced Bergman kernels and run convergence experiments.

mod config;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use config::{parse_complex, parse_hole, parse_quad, Backend, ConfigError, ExperimentConfig, ExperimentKind};
use rbl_core::basis::{gram_matrix, Basis, BasisSet, GramOptions};
use rbl_core::experiments::{
    run_boundary_asymptotics, run_localization, run_ramadanov_decreasing, run_ramadanov_increasing, run_scaling,
    BoundaryBackend, BoundarySpec, ConvergenceReport, LocalizationSpec, RamadanovFamily, RamadanovSpec,
};
use rbl_core::extremal::{solve_extremal, ExtremalProblem};
use rbl_core::kernel::{disc_kernel_n, KernelConfig, KernelEvaluator, KernelSource, UnitDiscKernel};
use rbl_core::quadrature::build_rule;
use rbl_core::transform::{half_plane_constant, half_plane_diag};
use rbl_core::weight::WeightFamily;
use rbl_core::{CircleDomain, Weight};

#[derive(Parser)]
#[command(name = "rbl", about = "Weighted higher-order reduced Bergman kernels on circle domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a kernel derivative at one point pair.
    Eval(EvalArgs),
    /// Run a convergence experiment and write its report.
    Experiment(ExperimentArgs),
    /// Quick self-consistency checks.
    Check(CommonArgs),
    /// Print the version.
    Version,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// `disc`, `disc:cx,cy,r` or `annulus:inner`.
    #[arg(long)]
    domain: Option<String>,
    /// Extra hole `cx,cy,r`; repeatable.
    #[arg(long = "holes")]
    holes: Vec<String>,
    /// `const:c`, `rpow:cx,cy,alpha` or `cont:name`.
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "basis-cap")]
    basis_cap: Option<usize>,
    /// Quadrature orders `radial,angular`.
    #[arg(long)]
    quad: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    zeta: Option<String>,
    /// `n-1` or a derivative order of `K_n` in `z`.
    #[arg(long)]
    deriv: Option<String>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// ramadanov-inc | ramadanov-dec | localization | boundary | scaling | eval | check
    kind: String,
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] rbl_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let core = match self {
            CliError::Core(e) | CliError::Config(ConfigError::Core(e)) => Some(e),
            _ => None,
        };
        match core {
            Some(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Version => {
            println!("rbl {}", env!("CARGO_PKG_VERSION"));
            Ok(true)
        }
        Command::Eval(args) => merged(&args.common, None)
            .and_then(|mut c| {
                c.z = args.z.as_deref().map(parse_complex).transpose()?.map(Into::into).or(c.z);
                c.zeta = args.zeta.as_deref().map(parse_complex).transpose()?.map(Into::into).or(c.zeta);
                c.deriv = args.deriv.clone().or(c.deriv);
                Ok(c)
            })
            .map_err(CliError::from)
            .and_then(|c| run_eval(&c)),
        Command::Check(common) => merged(&common, None).map_err(CliError::from).and_then(|c| run_check(&c)),
        Command::Experiment(args) => ExperimentKind::parse(&args.kind)
            .and_then(|kind| merged(&args.common, Some(kind)))
            .map_err(CliError::from)
            .and_then(|c| run_experiment(&c, args.out.as_ref(), args.format)),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("RBL_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("RBL_THREADS must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err("RBL_THREADS must be >= 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

/// Config file first, command-line flags on top.
fn merged(common: &CommonArgs, kind: Option<ExperimentKind>) -> Result<ExperimentConfig, ConfigError> {
    let mut c = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let (Some(kind), Some(declared)) = (kind, c.experiment) {
        if kind != declared {
            return Err(ConfigError::Invalid(format!("config declares experiment {declared:?}, command asks for {kind:?}")));
        }
    }
    c.experiment = kind.or(c.experiment);
    c.domain = common.domain.clone().or(c.domain);
    for h in &common.holes {
        let d = parse_hole(h)?;
        c.holes.push(config::HoleSpec { center: d.center.into(), radius: d.radius });
    }
    c.weight = common.weight.clone().or(c.weight);
    c.n = common.n.or(c.n);
    c.basis_cap = common.basis_cap.or(c.basis_cap);
    if let Some(q) = &common.quad {
        let (r, a) = parse_quad(q)?;
        c.quad_radial = Some(r);
        c.quad_angular = Some(a);
    }
    c.validate()?;
    if c.under_resolved() {
        eprintln!("warning: basis cap {} is below {}; results will be under-resolved", c.basis_cap.unwrap(), config::RECOMMENDED_MIN_CAP);
    }
    Ok(c)
}

fn kernel_config(c: &ExperimentConfig, domain: &CircleDomain) -> KernelConfig {
    let mut k = KernelConfig::for_domain(domain);
    if let Some(n) = c.basis_cap {
        k.outer_cap = n;
        k.hole_cap = n;
    }
    if let Some(h) = c.hole_cap {
        k.hole_cap = h;
    }
    k.radial_order = c.quad_radial.unwrap_or(k.radial_order);
    k.angular_order = c.quad_angular.unwrap_or(k.angular_order);
    k.max_derivative = k.max_derivative.max(c.n());
    k
}

fn is_unit_disc(d: &CircleDomain) -> bool {
    d.holes().is_empty() && d.outer().center.norm() == 0.0 && d.outer().radius == 1.0
}

fn use_closed_form(c: &ExperimentConfig, d: &CircleDomain, w: &Weight) -> Result<bool, ConfigError> {
    let eligible = is_unit_disc(d) && w.is_constant();
    match c.backend.unwrap_or_default() {
        Backend::Auto => Ok(eligible && c.basis_cap.is_none()),
        Backend::Gram => Ok(false),
        Backend::ClosedForm if eligible => Ok(true),
        Backend::ClosedForm => Err(ConfigError::Invalid("closed form needs the unit disc with a constant weight".into())),
    }
}

fn run_eval(c: &ExperimentConfig) -> Result<bool, CliError> {
    let domain = c.domain()?;
    let weight = c.weight()?;
    let n = c.n();
    let zero = Complex64::new(0.0, 0.0);
    let z: Complex64 = c.z.map(Into::into).unwrap_or(zero);
    let zeta: Complex64 = c.zeta.map(Into::into).unwrap_or(zero);
    let p = match c.deriv.as_deref() {
        None | Some("n-1") => n - 1,
        Some(s) => s.parse().map_err(|_| ConfigError::Invalid(format!("--deriv expects 'n-1' or an integer, got '{s}'")))?,
    };
    let value = if use_closed_form(c, &domain, &weight)? {
        let scale = match weight.family() {
            WeightFamily::Constant(k) => *k,
            _ => 1.0,
        };
        UnitDiscKernel.kernel_z_deriv(z, zeta, n, p)? / scale
    } else {
        let mut k = kernel_config(c, &domain);
        k.max_derivative = k.max_derivative.max(p);
        KernelEvaluator::for_domain(&domain, &weight, &k)?.kernel_z_deriv(z, zeta, n, p)?
    };
    println!("{}", report::format_complex(value));
    Ok(true)
}

fn run_check(c: &ExperimentConfig) -> Result<bool, CliError> {
    let domain = c.domain()?;
    let weight = c.weight()?;
    let k = kernel_config(c, &domain);
    let ev = KernelEvaluator::for_domain(&domain, &weight, &k)?;
    let zeta = domain.reference_point();
    let mut all = true;
    let mut line = |name: &str, ok: bool, detail: String| {
        all &= ok;
        println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    };

    let a = ev.eval(zeta, zeta + 0.01, 0, 0)?;
    let b = ev.eval(zeta + 0.01, zeta, 0, 0)?;
    line("hermitian symmetry", (a - b.conj()).norm() <= 1e-10 * a.norm(), format!("{:.1e}", (a - b.conj()).norm()));

    let basis: Arc<dyn Basis> = Arc::new(BasisSet::with_caps(&domain, k.outer_cap, k.hole_cap, k.max_derivative)?);
    let rule = build_rule(&domain, k.radial_order, k.angular_order)?;
    let gram = gram_matrix(basis.as_ref(), &weight, &rule, GramOptions::default())?;
    for n in 1..=2 {
        let s = solve_extremal(&ExtremalProblem::new(basis.clone(), zeta, n)?, &gram)?;
        let kd = ev.kernel_diag_deriv(n, zeta)?;
        let e = (s.min_norm_sq * kd - 1.0).abs();
        line(&format!("extremal identity n={n}"), e < 1e-10, format!("{e:.1e}"));
    }

    if is_unit_disc(&domain) && weight.is_constant() {
        let scale = weight.eval(zeta);
        let z = Complex64::new(0.3, -0.2);
        let e = (ev.eval(z, zeta, 0, 0)? * scale - disc_kernel_n(z, zeta, 1)?).norm();
        line("disc closed form", e < 1e-6, format!("{e:.1e}"));
    }
    let e = (1..=3).map(|n| Ok((half_plane_diag(n)? - half_plane_constant(n)).abs())).collect::<Result<Vec<f64>, rbl_core::Error>>()?;
    let worst = e.iter().cloned().fold(0.0, f64::max);
    line("half-plane diagonal", worst < 1e-12, format!("{worst:.1e}"));
    Ok(all)
}

fn run_experiment(c: &ExperimentConfig, out: Option<&PathBuf>, format: Format) -> Result<bool, CliError> {
    let kind = c.experiment.expect("kind is set by the command");
    let reports: Vec<ConvergenceReport> = match kind {
        ExperimentKind::Eval => return run_eval(c),
        ExperimentKind::Check => return run_check(c),
        ExperimentKind::RamadanovInc | ExperimentKind::RamadanovDec => {
            let count = c.count.unwrap_or(8);
            let family = match (&c.weight_scales, &c.radii) {
                (Some(w), _) => RamadanovFamily::WeightScales(w.clone()),
                (None, Some(r)) => RamadanovFamily::Radii(r.clone()),
                (None, None) if kind == ExperimentKind::RamadanovInc => RamadanovFamily::increasing_radii(count),
                (None, None) => RamadanovFamily::decreasing_radii(count),
            };
            let probes = c.probes.as_ref().map(|v| v.iter().map(|&p| p.into()).collect()).unwrap_or(vec![Complex64::new(0.0, 0.0)]);
            let spec = RamadanovSpec { family, probes, n: c.n() };
            vec![if kind == ExperimentKind::RamadanovInc { run_ramadanov_increasing(&spec)? } else { run_ramadanov_decreasing(&spec)? }]
        }
        ExperimentKind::Boundary => {
            let domain = c.domain()?;
            let weight = c.weight()?;
            let backend = if use_closed_form(c, &domain, &weight)? {
                BoundaryBackend::ClosedForm
            } else {
                BoundaryBackend::Gram(kernel_config(c, &domain))
            };
            let spec = BoundarySpec::new(domain, c.anchor(), c.n(), backend).with_weight(weight).with_approach(
                c.t0.unwrap_or(0.2),
                c.ratio.unwrap_or(0.5),
                c.count.unwrap_or(8),
            );
            let r = run_boundary_asymptotics(&spec)?;
            // the hole normalization leads when present
            match r.inversion {
                Some(inv) => vec![inv, r.psi],
                None => vec![r.psi],
            }
        }
        ExperimentKind::Localization => {
            let domain = c.domain()?;
            let mut spec = LocalizationSpec::new(domain.clone(), c.anchor(), c.cap_height.unwrap_or(0.3), c.n());
            spec.weight = c.weight()?;
            spec.t0 = c.t0.unwrap_or(spec.t0);
            spec.ratio = c.ratio.unwrap_or(spec.ratio);
            spec.count = c.count.unwrap_or(spec.count);
            spec.cap_degree = c.cap_degree.unwrap_or(spec.cap_degree);
            spec.cap_radial = c.cap_radial.unwrap_or(spec.cap_radial);
            spec.cap_angular = c.cap_angular.unwrap_or(spec.cap_angular);
            spec.domain_config = kernel_config(c, &domain);
            vec![run_localization(&spec)?]
        }
        ExperimentKind::Scaling => vec![run_scaling(c.anchor(), c.n(), c.count.unwrap_or(8))?],
    };
    let reports: Vec<ConvergenceReport> = match c.tolerance {
        Some(t) => reports.into_iter().map(|r| r.with_tolerance(t)).collect(),
        None => reports,
    };
    let primary = &reports[0];
    let records = report::records(primary);
    let csv = report::to_csv(&records);
    let json = report::to_json(&records);
    let svg = || report::to_svg(&primary.name, &records);

    let text = match format {
        Format::Csv => csv.clone(),
        Format::Json => json.clone() + "\n",
        Format::Svg => svg(),
    };
    match out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    if let Some(p) = &c.csv_out {
        write(p, &csv)?;
    }
    if let Some(p) = &c.json_out {
        write(p, &(json.clone() + "\n"))?;
    }
    if let Some(p) = &c.svg_out {
        write(p, &svg())?;
    }
    for r in &reports {
        eprintln!(
            "{}: {} (final error {:.3e}, tolerance {:.1e}, monotone {}){}",
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.final_error,
            r.tolerance,
            r.monotone,
            r.checks.iter().filter(|c| !c.passed).map(|c| format!("; failed check: {}", c.name)).collect::<String>()
        );
    }
    Ok(reports.iter().all(|r| r.passed))
}

fn write(path: &PathBuf, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.clone(), source })
}
