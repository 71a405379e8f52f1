mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Invalid user input (flags, config, parameter ranges). Exit code 1.
#[derive(Debug)]
pub struct InvalidInput(pub String);

impl std::fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidInput {}

/// Some property-suite check failed. Exit code 3.
#[derive(Debug)]
pub struct PropertyFailure(pub usize);

impl std::fmt::Display for PropertyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} property check(s) failed", self.0)
    }
}

impl std::error::Error for PropertyFailure {}

pub const THREADS_ENV: &str = "TRANSVERSE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "transverse", version, about = "Transverse instability of line solitary waves")]
pub struct Cli {
    /// Key-value config file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for CSV/JSON artifacts and manifests.
    #[arg(long, global = true, default_value = "transverse-out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// gkp1, nls, boussinesq, zk or kpbbm.
    #[arg(long)]
    pub model: Option<String>,
    /// Nonlinearity power (gkp1, kpbbm).
    #[arg(long)]
    pub p: Option<u32>,
    /// Wave speed (boussinesq, kpbbm).
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct EvansArgs {
    /// Relative tolerance of the Evans-function integration.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Truncation length of the line (default: model dependent).
    #[arg(long)]
    pub x_inf: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RectArgs {
    #[arg(long)]
    pub re_min: Option<f64>,
    #[arg(long)]
    pub re_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub im_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub im_max: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Model registry.
    Models {
        #[arg(default_value = "list")]
        action: String,
    },
    /// Soliton profile on a grid.
    Profile {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        half_length: Option<f64>,
    },
    /// Evans function at one point.
    Evans {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        evans: EvansArgs,
        #[arg(long)]
        sigma_re: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        sigma_im: Option<f64>,
        #[arg(long)]
        k: Option<f64>,
    },
    /// Evans function on a rectangular σ grid for one or several k.
    EvansGrid {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        evans: EvansArgs,
        #[command(flatten)]
        rect: RectArgs,
        #[arg(long)]
        nre: Option<usize>,
        #[arg(long)]
        nim: Option<usize>,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        kmin: Option<f64>,
        #[arg(long)]
        kmax: Option<f64>,
        #[arg(long)]
        nk: Option<usize>,
    },
    /// Unstable eigenvalue σ(k) over a range of transverse frequencies.
    Dispersion {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        evans: EvansArgs,
        #[command(flatten)]
        rect: RectArgs,
        #[arg(long)]
        kmin: Option<f64>,
        #[arg(long)]
        kmax: Option<f64>,
        #[arg(long)]
        nk: Option<usize>,
        #[arg(long)]
        jump_tol: Option<f64>,
        #[arg(long)]
        fit_half_width: Option<f64>,
    },
    /// Kernel criterion: top eigenvalue of M_k and its zero crossing.
    Criterion {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        half_length: Option<f64>,
        #[arg(long)]
        kmin: Option<f64>,
        #[arg(long)]
        kmax: Option<f64>,
        #[arg(long)]
        nk: Option<usize>,
        #[arg(long)]
        k_tol: Option<f64>,
        #[arg(long)]
        fd_step: Option<f64>,
    },
    /// Reconstruct the unstable eigenmode at one k.
    Mode {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        evans: EvansArgs,
        #[command(flatten)]
        rect: RectArgs,
        #[arg(long)]
        k: Option<f64>,
        /// Initial guess for σ; without it the search rectangle is scanned.
        #[arg(long)]
        sigma_re: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        sigma_im: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        half_length: Option<f64>,
    },
    /// Nonlinear instability experiment (usually driven by --config).
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        #[arg(long)]
        lx: Option<f64>,
        #[arg(long)]
        ly: Option<f64>,
        /// Transverse frequency of the seeded eigenmode; sets ly = 2π/k unless ly is given.
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// eigenmode or none.
        #[arg(long)]
        perturbation: Option<String>,
        /// nonlinear or linearized.
        #[arg(long)]
        dynamics: Option<String>,
        #[arg(long)]
        dealias: Option<bool>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        fit_lo_factor: Option<f64>,
        #[arg(long)]
        fit_hi: Option<f64>,
        #[arg(long)]
        record_every: Option<usize>,
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Linear wave packet over an interval of unstable k and its growth bounds.
    Packet {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        evans: EvansArgs,
        /// Packet interval I = (kmin, kmax); default k0 ± 0.1 clipped to the band.
        #[arg(long)]
        kmin: Option<f64>,
        #[arg(long)]
        kmax: Option<f64>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        lx: Option<f64>,
        #[arg(long)]
        trace_kmin: Option<f64>,
        #[arg(long)]
        trace_kmax: Option<f64>,
        #[arg(long)]
        trace_nk: Option<usize>,
        /// Final time; default 3/Re σ0.
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        nt: Option<usize>,
    },
    /// Run the property suite and print a pass/fail table.
    Verify {
        /// Skip the time-evolution checks.
        #[arg(long)]
        quick: bool,
    },
}

fn init_threads() -> Result<(), InvalidInput> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| InvalidInput(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| InvalidInput(e.to_string()))?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<PropertyFailure>().is_some() {
        3
    } else if let Some(e) = err.downcast_ref::<transverse_core::Error>() {
        if e.is_invalid_input() {
            1
        } else {
            2
        }
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            if code == 2 {
                let diag = serde_json::json!({
                    "status": "numerical_failure",
                    "command": commands::name(&cli.command),
                    "error": format!("{e:#}"),
                });
                eprintln!("{}", serde_json::to_string_pretty(&diag).unwrap_or_default());
                let _ = std::fs::create_dir_all(&cli.out);
                let _ = std::fs::write(
                    cli.out.join(format!("{}.error.json", commands::name(&cli.command))),
                    serde_json::to_vec_pretty(&diag).unwrap_or_default(),
                );
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(code)
        }
    }
}
