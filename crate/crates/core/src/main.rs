use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use adp::deep_prior::{DescentConfig, DescentMode};
use adp::filters::logspace;
use adp::harness::{
    export_filter_response, filter_sigma_grid, gradcheck, landweber_table, optimality_table,
    run_experiment, ExperimentConfig, HarnessError, NoiseSpec, XDaggerKind,
};
use adp::operators::make_integration;
use adp::prox::ProxKind;
use adp::solvers::default_step;

/// Analytic deep prior experiments on the integration operator.
///
/// Every flag may also be given in a file passed with `--config FILE`, one
/// `key = value` per line (`#` starts a comment). Flags on the command line
/// override the file.
#[derive(Parser, Debug)]
#[command(name = "adp", version, args_override_self = true)]
struct Cli {
    /// key=value file with default flags for the subcommand
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gradient descent on B for a sweep of regularization parameters
    Experiment(ExperimentArgs),
    /// Tikhonov, TSVD and Soft-TSVD filter responses
    Filters(FiltersArgs),
    /// Compare the analytic gradients with finite differences
    Gradcheck(GradcheckArgs),
    /// Landweber iteration trace
    Landweber(LandweberArgs),
    /// Order-optimality conditions of the filter families
    Optimality(OptimalityArgs),
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "1e-3,1e-2")]
    alphas: Vec<f64>,
    /// noise scale δ
    #[arg(long, overrides_with = "target_snr_db")]
    delta: Option<f64>,
    /// choose δ to reach this SNR [default: 17.06]
    #[arg(long, overrides_with = "delta")]
    target_snr_db: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 0-based index of the singular vector used as true solution
    #[arg(long, default_value_t = 4)]
    index: usize,
    /// read the true solution from a file instead
    #[arg(long, value_name = "FILE")]
    x_dagger: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value = "exact")]
    mode: DescentMode,
    /// unroll depth
    #[arg(long = "L", default_value_t = 10)]
    layers: usize,
    /// learning rate
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    /// regularizer of the unrolled network (l2, l1, nonneg)
    #[arg(long, default_value = "l2")]
    prox: ProxKind,
    /// standard deviation of the random network input
    #[arg(long, default_value_t = 1e-3)]
    z_scale: f64,
    /// standard deviation of Gaussian noise added to the initial B = A
    #[arg(long, default_value_t = 0.0)]
    b0_noise: f64,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FiltersArgs {
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "1e-3,1e-2")]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 1e-6)]
    sigma_min: f64,
    #[arg(long, default_value_t = 10.0)]
    sigma_max: f64,
    #[arg(long, default_value_t = 2000)]
    points: usize,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

#[derive(Args, Debug)]
struct LandweberArgs {
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// step size [default: 1/‖A‖²]
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 4)]
    index: usize,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct OptimalityArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "0.5,1,2")]
    nu: Vec<f64>,
    #[arg(long, default_value_t = 1e-6)]
    sigma_min: f64,
    #[arg(long, default_value_t = 10.0)]
    sigma_max: f64,
    #[arg(long, default_value_t = 2000)]
    points: usize,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{0}")]
    Usage(String),
    #[error("gradient check failed")]
    GradcheckFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Harness(e) => e.exit_code() as u8,
            CliError::Usage(_) => 1,
            CliError::GradcheckFailed => 2,
        }
    }
}

/// Reads `key = value` lines into `--key value` arguments.
fn config_args(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut args = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "{}:{}: expected key = value",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim().trim_start_matches("--");
        args.push(format!("--{key}"));
        args.push(value.trim().to_string());
    }
    Ok(args)
}

/// Splices the contents of `--config FILE` in right after the subcommand so
/// that flags given on the command line take precedence.
fn expand_config(raw: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut args = Vec::with_capacity(raw.len());
    let mut config = None;
    let mut iter = raw.into_iter();
    while let Some(arg) = iter.next() {
        if arg == "--config" {
            config = Some(
                iter.next()
                    .ok_or_else(|| CliError::Usage("--config needs a file".into()))?,
            );
        } else if let Some(path) = arg.strip_prefix("--config=") {
            config = Some(path.to_string());
        } else {
            args.push(arg);
        }
    }
    let Some(config) = config else {
        return Ok(args);
    };
    let extra = config_args(Path::new(&config))?;
    let position = args
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|p| p + 2)
        .unwrap_or(args.len());
    args.splice(position..position, extra);
    Ok(args)
}

fn experiment(a: ExperimentArgs) -> Result<(), CliError> {
    let noise = match (a.delta, a.target_snr_db) {
        (Some(d), _) => NoiseSpec::Delta(d),
        (None, Some(s)) => NoiseSpec::TargetSnrDb(s),
        (None, None) => NoiseSpec::TargetSnrDb(17.06),
    };
    let cfg = ExperimentConfig {
        n: a.n,
        alphas: a.alphas,
        noise,
        seed: a.seed,
        x_dagger: match a.x_dagger {
            Some(path) => XDaggerKind::Custom(path),
            None => XDaggerKind::SingularVector(a.index),
        },
        prox: a.prox,
        descent: DescentConfig {
            eta: a.lr,
            iters: a.iters,
            layers: a.layers,
            mode: a.mode,
            seed: a.seed,
            z_scale: a.z_scale,
            b0_noise: a.b0_noise,
        },
    };
    let rows = run_experiment(&cfg, &a.out)?;
    println!("alpha\tfinal_true_error\ttikhonov_true_error\tsnr_db");
    for r in rows {
        println!(
            "{:e}\t{:.6e}\t{:.6e}\t{:.2}",
            r.alpha, r.final_true_error, r.tikhonov_true_error, r.snr_db
        );
    }
    Ok(())
}

fn filters(a: FiltersArgs) -> Result<(), CliError> {
    if !(a.sigma_min > 0.0 && a.sigma_max > a.sigma_min) || a.points < 2 {
        return Err(CliError::Usage(
            "need 0 < sigma-min < sigma-max and at least 2 points".into(),
        ));
    }
    let grid = filter_sigma_grid(&a.alphas, a.sigma_min, a.sigma_max, a.points);
    let table = export_filter_response(&a.alphas, &grid, Some(&a.out))?;
    println!("wrote {} rows to {}", table.len(), a.out.display());
    Ok(())
}

fn gradcheck_cmd(a: GradcheckArgs) -> Result<(), CliError> {
    let r = gradcheck(a.n, a.seed, a.tol)?;
    println!(
        "n={} seed={} alpha={:.4e} grad_f={:.3e} grad_f_at_a={:.3e} tol={:e}",
        r.n, r.seed, r.alpha, r.grad_f_error, r.grad_f_at_a_error, r.tol
    );
    if r.passed() {
        println!("pass");
        Ok(())
    } else {
        println!("fail");
        Err(CliError::GradcheckFailed)
    }
}

fn landweber_cmd(a: LandweberArgs) -> Result<(), CliError> {
    let eta = match a.eta {
        Some(eta) => eta,
        None => {
            let op = make_integration(a.n).map_err(|e| CliError::Usage(e.to_string()))?;
            default_step(&op.matrix)
        }
    };
    let table = landweber_table(a.n, eta, a.iters, a.index, a.delta, a.seed)?;
    table.write_path(&a.out)?;
    println!("wrote {} rows to {}", table.len(), a.out.display());
    Ok(())
}

fn optimality(a: OptimalityArgs) -> Result<(), CliError> {
    if !(a.sigma_min > 0.0 && a.sigma_max > a.sigma_min) || a.points < 2 {
        return Err(CliError::Usage(
            "need 0 < sigma-min < sigma-max and at least 2 points".into(),
        ));
    }
    let grid = logspace(a.sigma_min, a.sigma_max, a.points);
    let table = optimality_table(a.alpha, &a.nu, &grid)?;
    table.write_path(&a.out)?;
    let names = ["tikhonov", "tsvd", "soft_tsvd"];
    for row in table.rows() {
        let ok: Vec<&str> = row[16..19]
            .iter()
            .map(|&v| if v == 1.0 { "ok" } else { "FAIL" })
            .collect();
        println!(
            "{:<10} nu={:<4} {}",
            names[row[0] as usize],
            row[2],
            ok.join(" ")
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Experiment(a) => experiment(a),
        Command::Filters(a) => filters(a),
        Command::Gradcheck(a) => gradcheck_cmd(a),
        Command::Landweber(a) => landweber_cmd(a),
        Command::Optimality(a) => optimality(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match expand_config(std::env::args().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
