mod config;
mod experiments;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{budget, pick, pick_list, require, CliError, FileConfig, Format};
use experiments::Outcome;

#[derive(Parser)]
#[command(name = "catsim", version, about = "Coherent-state superposition simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file with defaults for any flag; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Bell-cat outcome probabilities and sampled frequencies.
    BellStats {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Phase and fidelity checks of the gate set.
    GateCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        /// Rotation strength `θα²`.
        #[arg(long, value_delimiter = ',')]
        strength: Vec<f64>,
    },
    /// Displacement sensing with cat probes.
    WeakForce {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        /// Number of modes.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        /// Defaults to the steepest point of the readout.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        shots: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Phase-scan fringes of a cat probe.
    Ruler {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        /// Wavelength in metres.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        theta_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        theta_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Also print every scan point.
        #[arg(long)]
        scan: bool,
    },
    /// Fisher information of product and entangled Ramsey probes.
    Ramsey {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Vec<f64>,
    },
    /// Compares the coherent-state engine against the Fock-basis oracle.
    OracleAudit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha_max: Option<f64>,
        /// Random cases per check.
        #[arg(long)]
        cases: Option<usize>,
        /// Also print one row per case.
        #[arg(long)]
        detail: bool,
    },
}

const DEFAULT_SEED: u64 = 1;
const MAX_POINTS: usize = 256;

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::BellStats { common, .. } => ("bell-stats", common),
            Command::GateCheck { common, .. } => ("gate-check", common),
            Command::WeakForce { common, .. } => ("weak-force", common),
            Command::Ruler { common, .. } => ("ruler", common),
            Command::Ramsey { common, .. } => ("ramsey", common),
            Command::OracleAudit { common, .. } => ("oracle-audit", common),
        }
    }
}

fn finite(values: &[f64], name: &str) -> Result<(), CliError> {
    require(values.iter().all(|x| x.is_finite()), format!("{name} must be finite"))
}

fn run(cmd: Command, file: FileConfig, seed: u64) -> Result<Outcome, CliError> {
    match cmd {
        Command::BellStats { alpha, trials, .. } => {
            let alphas = pick_list(alpha, file.alpha, (4..=12).map(|i| i as f64 * 0.25).collect());
            let trials = pick(trials, file.trials, 10_000);
            finite(&alphas, "alpha")?;
            require(alphas.iter().all(|&a| a > 0.0), "alpha must be positive")?;
            budget(alphas.iter().all(|&a| a <= 8.0), "alpha above 8")?;
            budget(alphas.len() <= MAX_POINTS, format!("more than {MAX_POINTS} alpha values"))?;
            budget(trials <= 10_000_000, "trials above 1e7")?;
            experiments::bell_stats(&experiments::BellStats { seed, alphas, trials })
        }
        Command::GateCheck { alpha, strength, .. } => {
            let alphas = pick_list(alpha, file.alpha, vec![1.5, 2.0, 2.5, 3.0]);
            let strengths = pick_list(strength, file.strength, vec![0.005, 0.01, 0.02]);
            finite(&alphas, "alpha")?;
            finite(&strengths, "strength")?;
            require(alphas.iter().all(|&a| a > 0.0), "alpha must be positive")?;
            budget(alphas.iter().all(|&a| a <= 6.0), "alpha above 6")?;
            budget(alphas.len() * strengths.len() <= MAX_POINTS, format!("more than {MAX_POINTS} points"))?;
            experiments::gate_check(&experiments::GateCheck { seed, alphas, strengths })
        }
        Command::WeakForce { alpha, n, epsilon, shots, repeats, .. } => {
            let alphas = pick_list(alpha, file.alpha, vec![2.0]);
            let modes = pick_list(n, file.n, vec![1, 2, 4]);
            let epsilon = epsilon.or(file.epsilon);
            let shots = pick(shots, file.shots, 10_000);
            let repeats = pick(repeats, file.repeats, 200);
            finite(&alphas, "alpha")?;
            require(epsilon.is_none_or(|e| e.is_finite() && e >= 0.0), "epsilon must be finite and non-negative")?;
            require(alphas.iter().all(|&a| a > 0.0), "alpha must be positive")?;
            require(modes.iter().all(|&m| m >= 1), "n must be at least 1")?;
            require(shots >= 1 && repeats >= 2, "need shots >= 1 and repeats >= 2")?;
            budget(alphas.iter().all(|&a| a <= 10.0), "alpha above 10")?;
            budget(modes.iter().all(|&m| m <= 64), "n above 64")?;
            let points = alphas.len() * modes.len();
            budget(points <= MAX_POINTS, format!("more than {MAX_POINTS} points"))?;
            budget(shots <= 1_000_000_000, "shots above 1e9")?;
            budget(points * repeats <= 100_000_000, "points x repeats above 1e8")?;
            experiments::weak_force(&experiments::WeakForce { seed, alphas, modes, epsilon, shots, repeats })
        }
        Command::Ruler { alpha, lambda, theta_min, theta_max, points, scan, .. } => {
            let cfg = experiments::Ruler {
                alphas: pick_list(alpha, file.alpha, vec![4.0, 6.0, 8.0, 10.0]),
                lambda: pick(lambda, file.lambda, 10e-6),
                theta_min: pick(theta_min, file.theta_min, -0.5),
                theta_max: pick(theta_max, file.theta_max, 3.6),
                points: pick(points, file.points, 20_001),
                scan,
            };
            finite(&cfg.alphas, "alpha")?;
            finite(&[cfg.lambda, cfg.theta_min, cfg.theta_max], "lambda and theta range")?;
            require(cfg.alphas.iter().all(|&a| a > 0.0), "alpha must be positive")?;
            require(cfg.lambda > 0.0, "lambda must be positive")?;
            require(cfg.theta_max > cfg.theta_min, "theta-max must exceed theta-min")?;
            require(cfg.points >= 3, "need at least 3 points")?;
            budget(cfg.alphas.iter().all(|&a| a <= 30.0), "alpha above 30")?;
            budget(cfg.alphas.len() * cfg.points <= 10_000_000, "alpha values x points above 1e7")?;
            experiments::ruler(&cfg, seed)
        }
        Command::Ramsey { n, theta, .. } => {
            let ns = pick_list(n, file.n, (1..=10).collect());
            let thetas = pick_list(theta, file.theta, vec![0.05]);
            finite(&thetas, "theta")?;
            require(ns.iter().all(|&k| k >= 1), "n must be at least 1")?;
            budget(ns.iter().all(|&k| k <= 20), "n above 20")?;
            budget(ns.len() * thetas.len() <= 4096, "more than 4096 points")?;
            experiments::ramsey(&experiments::Ramsey { ns, thetas }, seed)
        }
        Command::OracleAudit { alpha_max, cases, detail, .. } => {
            let alpha_max = pick(alpha_max, file.alpha_max, 3.0);
            let cases = pick(cases, file.cases, 30);
            finite(&[alpha_max], "alpha-max")?;
            require(alpha_max > 0.0, "alpha-max must be positive")?;
            require(cases >= 1, "need at least one case")?;
            budget(alpha_max <= 3.5, "alpha-max above 3.5 makes the Fock oracle too large")?;
            budget(cases <= 10_000, "cases above 1e4")?;
            experiments::oracle_audit(&experiments::OracleAudit { seed, alpha_max, cases, detail })
        }
    }
}

fn main_inner() -> Result<(), CliError> {
    let cli = Cli::parse();
    let (name, common) = cli.command.parts();
    let file = match &common.config {
        Some(path) => FileConfig::load(path, name)?,
        None => FileConfig::default(),
    };
    let seed = pick(common.seed, file.seed, DEFAULT_SEED);
    let format = pick(common.format, file.format, Format::Csv);
    let target = common.output.clone().or(file.output.clone());
    let outcome = run(cli.command, file, seed)?;
    let text = outcome.report.render(format);
    match target {
        Some(path) => std::fs::write(&path, text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            // a closed pipe is not worth an error
            let _ = out.write_all(text.as_bytes());
        }
    }
    match outcome.failure {
        Some(msg) => Err(CliError::Property(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("catsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
