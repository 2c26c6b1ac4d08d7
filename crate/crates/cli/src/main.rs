use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qsvt_interp::chebpoly::{build_step_approx, degree_constant, min_eta_for_degree, verify_bounds, StepSpec};
use qsvt_interp::estimator::{estimate_ee_with_schedule, AlphaSchedule, ProbabilityPath, ThresholdRule, DEFAULT_MAX_DEGREE};
use qsvt_interp::experiment::{fit_scaling, read_sweep_csv, sweep, write_sweep_csv, InstanceSpec, SweepConfig};
use qsvt_interp::io::{format_poly, write_curve};
use qsvt_interp::reductions::{solve_ae_via_ee, solve_pe_via_ee, AEInstance, PEInstance, StagedLedger};
use qsvt_interp::Error;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

/// Statistical or capacity failure.
const EXIT_FAILURE: u8 = 1;
/// Malformed input.
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "qsvt-interp", version, about = "Depth/time interpolating eigenvalue estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a step polynomial, or report the minimal eta per degree.
    Poly(PolyArgs),
    /// Estimate one eigenvalue.
    Estimate(EstimateArgs),
    /// Run an alpha/eps grid and write one CSV row per run.
    Sweep(SweepArgs),
    /// Fit depth and time scaling exponents from a sweep CSV.
    Fit(FitArgs),
    /// Solve phase or amplitude estimation through eigenvalue estimation.
    Reduce(ReduceArgs),
}

#[derive(Args)]
struct PolyArgs {
    #[arg(long)]
    delta: f64,
    #[arg(long, conflicts_with = "degree", required_unless_present = "degree")]
    eta: Option<f64>,
    /// Comma-separated degrees; prints the smallest reachable eta for each.
    #[arg(long, value_delimiter = ',')]
    degree: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_MAX_DEGREE)]
    max_degree: usize,
    /// Write the `x,P(x)` curve here.
    #[arg(long)]
    emit: Option<PathBuf>,
    /// Write the Chebyshev coefficients here.
    #[arg(long)]
    emit_coeffs: Option<PathBuf>,
}

#[derive(Args)]
struct InstanceArgs {
    /// Matrix file (`dim n` then n rows of `re+imj` entries).
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    matrix: Option<PathBuf>,
    /// Eigenvector used from a matrix file, by ascending eigenvalue.
    #[arg(long, default_value_t = 0, requires = "matrix")]
    eigen_index: usize,
    /// Builtin instance such as `diag:0.5,-0.25` (psi = e_1).
    #[arg(long)]
    builtin: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

impl InstanceArgs {
    fn spec(&self) -> anyhow::Result<InstanceSpec> {
        match (&self.matrix, &self.builtin) {
            (Some(path), _) => Ok(InstanceSpec::MatrixFile {
                path: path.clone(),
                eigen_index: self.eigen_index,
            }),
            (None, Some(b)) => Ok(InstanceSpec::parse_builtin(b)?),
            (None, None) => Err(Error::Domain("an instance is required".into()).into()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Threshold {
    Midpoint,
    Verbatim,
}

impl From<Threshold> for ThresholdRule {
    fn from(t: Threshold) -> Self {
        match t {
            Threshold::Midpoint => ThresholdRule::Midpoint,
            Threshold::Verbatim => ThresholdRule::Verbatim,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Threshold::Midpoint)]
    threshold: Threshold,
    /// Compute RIGHT probabilities from the transformed matrix.
    #[arg(long)]
    statevector: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    alphas: Vec<f64>,
    #[arg(long = "eps", value_delimiter = ',', required = true)]
    eps_list: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    csv: PathBuf,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(subcommand)]
    mode: ReduceMode,
}

#[derive(Subcommand)]
enum ReduceMode {
    /// Phase estimation of a random unitary with the given eigenphase.
    Pe {
        #[arg(long)]
        phi: f64,
        /// System dimension of the unitary.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[command(flatten)]
        common: ReduceCommon,
    },
    /// Amplitude estimation of a single-qubit rotation.
    Ae {
        #[arg(long)]
        amp: f64,
        #[command(flatten)]
        common: ReduceCommon,
    },
}

#[derive(Args)]
struct ReduceCommon {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn cmd_poly(args: &PolyArgs) -> anyhow::Result<u8> {
    let mut out = std::io::stdout().lock();
    if let Some(eta) = args.eta {
        let spec = StepSpec::new(args.delta, eta)?;
        let poly = build_step_approx(&spec, args.max_degree)?;
        let report = verify_bounds(&poly, &spec);
        writeln!(out, "degree {}", poly.degree())?;
        writeln!(out, "parity {}", poly.parity())?;
        writeln!(out, "bounds {report}")?;
        writeln!(out, "C {:.6}", degree_constant(args.delta, eta, poly.degree()))?;
        if let Some(path) = &args.emit {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_curve(&poly, BufWriter::new(file))?;
        }
        if let Some(path) = &args.emit_coeffs {
            std::fs::write(path, format_poly(&poly)).with_context(|| format!("writing {}", path.display()))?;
        }
    } else {
        if args.emit.is_some() || args.emit_coeffs.is_some() {
            bail!(Error::Domain("--emit needs --eta".into()));
        }
        writeln!(out, "degree,eta_min")?;
        for &d in &args.degree {
            writeln!(out, "{d},{:.6e}", min_eta_for_degree(args.delta, d)?)?;
        }
    }
    Ok(0)
}

fn cmd_estimate(args: &EstimateArgs) -> anyhow::Result<u8> {
    let inst = args.instance.spec()?.resolve(args.instance.gamma)?;
    let sched = AlphaSchedule::with_options(args.alpha, args.eps, args.instance.gamma, args.threshold.into(), DEFAULT_MAX_DEGREE)?;
    let path = if args.statevector {
        ProbabilityPath::Statevector
    } else {
        ProbabilityPath::Eigenstate
    };
    let est = estimate_ee_with_schedule(&inst, &sched, args.seed, path)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "mu_hat {:.16e}", est.mu_hat)?;
    writeln!(out, "true_mu {:.16e}", inst.true_mu)?;
    writeln!(out, "T {}", est.ledger.total_queries)?;
    writeln!(out, "D {}", est.ledger.max_depth)?;
    writeln!(out, "degree {}", sched.degree())?;
    writeln!(out, "n_samples {}", sched.n_samples)?;
    writeln!(out, "iterations {}", est.iterations)?;
    writeln!(out, "eta {:.16e}", sched.eta)?;
    writeln!(out, "threshold {:.16e}", sched.threshold)?;
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<u8> {
    let config = SweepConfig {
        alphas: args.alphas.clone(),
        eps_list: args.eps_list.clone(),
        gamma: args.instance.gamma,
        runs: args.runs,
        seed: args.seed,
        instance: args.instance.spec()?,
    };
    let report = sweep(&config)?;
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_sweep_csv(&report.rows, BufWriter::new(file))?;
        }
        None => write_sweep_csv(&report.rows, std::io::stdout().lock())?,
    }
    for (alpha, eps) in &report.failed_cells {
        eprintln!("cell alpha={alpha} eps={eps} failed in every run");
    }
    Ok(if report.failed_cells.is_empty() { 0 } else { EXIT_FAILURE })
}

fn cmd_fit(args: &FitArgs) -> anyhow::Result<u8> {
    let file = File::open(&args.csv).with_context(|| format!("opening {}", args.csv.display()))?;
    let rows = read_sweep_csv(file)?;
    let fits = fit_scaling(&rows)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "alpha,n_eps,depth_slope,depth_residual,time_slope,time_residual")?;
    for f in fits {
        writeln!(
            out,
            "{},{},{:.6},{:.3e},{:.6},{:.3e}",
            f.alpha, f.eps_count, f.depth.slope, f.depth.residual, f.time.slope, f.time.residual
        )?;
    }
    Ok(0)
}

fn print_ledgers(out: &mut impl Write, ledgers: &StagedLedger, pe_level: bool) -> std::io::Result<()> {
    writeln!(out, "ledger_ee T={} D={} shots={}", ledgers.ee.total_queries, ledgers.ee.max_depth, ledgers.ee.shots)?;
    writeln!(out, "ledger_ae T={} D={} shots={}", ledgers.ae.total_queries, ledgers.ae.max_depth, ledgers.ae.shots)?;
    if pe_level {
        writeln!(out, "ledger_pe T={} D={} shots={}", ledgers.pe.total_queries, ledgers.pe.max_depth, ledgers.pe.shots)?;
    }
    Ok(())
}

fn cmd_reduce(args: &ReduceArgs) -> anyhow::Result<u8> {
    let mut out = std::io::stdout().lock();
    match &args.mode {
        ReduceMode::Pe { phi, dim, common } => {
            let inst = PEInstance::from_phase(*phi, *dim, common.seed)?;
            let sol = solve_pe_via_ee(&inst, common.eps, common.alpha, common.seed)?;
            writeln!(out, "phi_hat {:.16e}", sol.phi_hat)?;
            writeln!(out, "phi_true {:.16e}", inst.true_phi)?;
            writeln!(out, "tolerance {:.16e}", sol.tolerance)?;
            writeln!(out, "mu_hat {:.16e}", sol.mu_hat)?;
            writeln!(out, "amp_hat {:.16e}", sol.amp_hat)?;
            writeln!(out, "multiplier_ae_to_ee {}", sol.ee_multiplier)?;
            writeln!(out, "multiplier_pe_to_ae {}", sol.pe_multiplier)?;
            print_ledgers(&mut out, &sol.ledgers, true)?;
        }
        ReduceMode::Ae { amp, common } => {
            let inst = AEInstance::from_amplitude(*amp)?;
            let sol = solve_ae_via_ee(&inst, common.eps, common.alpha, common.seed)?;
            writeln!(out, "p_hat {:.16e}", sol.p_hat)?;
            writeln!(out, "p_true {:.16e}", inst.true_amp * inst.true_amp)?;
            writeln!(out, "amp_hat {:.16e}", sol.amp_hat)?;
            writeln!(out, "mu_hat {:.16e}", sol.mu_hat)?;
            writeln!(out, "multiplier_ae_to_ee {}", sol.ee_multiplier)?;
            print_ledgers(&mut out, &sol.ledgers, false)?;
        }
    }
    Ok(0)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Capacity { .. } | Error::Construction(_)) => EXIT_FAILURE,
        Some(_) => EXIT_INPUT,
        None if err.chain().any(|e| e.is::<std::io::Error>()) => EXIT_INPUT,
        None => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Poly(a) => cmd_poly(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Reduce(a) => cmd_reduce(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

