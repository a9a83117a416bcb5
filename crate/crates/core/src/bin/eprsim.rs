use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eprsim::circuits::Circuit;
use eprsim::elements::{apply_cross_kerr, KerrSite};
use eprsim::experiment::{run_experiment, sweep, ExperimentConfig, OutputFormat, STATS_CSV_HEADER};
use eprsim::fock::{default_truncation, validate_phase_label_model};
use eprsim::homodyne::outcome_density;
use eprsim::state::{HybridState, Pol};

#[derive(Parser)]
#[command(name = "eprsim", about = "Four-photon entangled-state generation simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CircuitArg {
    Chi,
    Cluster,
}

impl From<CircuitArg> for Circuit {
    fn from(c: CircuitArg) -> Circuit {
        match c {
            CircuitArg::Chi => Circuit::Chi,
            CircuitArg::Cluster => Circuit::Cluster,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct ProbeArgs {
    /// Probe coherent amplitude
    #[arg(long, default_value_t = 400.0)]
    alpha: f64,
    /// Kerr phase per photon (radians)
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment on one circuit
    Run {
        #[arg(long, value_enum)]
        circuit: CircuitArg,
        #[command(flatten)]
        probe: ProbeArgs,
        #[arg(long, default_value_t = 1000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Disable feed-forward corrections (strict post-selection)
        #[arg(long)]
        no_feed_forward: bool,
        /// Output file (stdout if omitted)
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
    },
    /// Sweep a grid of (alpha, theta) operating points
    Sweep {
        #[arg(long, value_enum, default_value = "chi")]
        circuit: CircuitArg,
        /// Comma-separated alpha values
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        /// Comma-separated theta values
        #[arg(long, value_delimiter = ',', required = true)]
        thetas: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_feed_forward: bool,
        #[arg(long)]
        out: Option<String>,
    },
    /// Emit the two-peak homodyne outcome density of one entangler as CSV
    Density {
        #[command(flatten)]
        probe: ProbeArgs,
        /// Grid step
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Certify the phase-label probe model against the truncated-Fock oracle
    Validate {
        #[arg(long)]
        out: Option<String>,
    },
}

fn write_output(out: &Option<String>, content: &str) -> eprsim::Result<()> {
    match out {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(content.as_bytes())?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> eprsim::Result<()> {
    match cli.command {
        Command::Run {
            circuit,
            probe,
            shots,
            seed,
            no_feed_forward,
            out,
            format,
        } => {
            let config = ExperimentConfig {
                circuit: circuit.into(),
                alpha: probe.alpha,
                theta: probe.theta,
                shots,
                seed,
                feed_forward: !no_feed_forward,
                output_path: out.clone(),
                format: match format {
                    FormatArg::Json => OutputFormat::Json,
                    FormatArg::Csv => OutputFormat::Csv,
                },
            };
            let stats = run_experiment(&config)?;
            let content = match config.format {
                OutputFormat::Json => format!("{}\n", serde_json::to_string_pretty(&stats)?),
                OutputFormat::Csv => format!("{}\n{}\n", STATS_CSV_HEADER, stats.to_csv_row()),
            };
            write_output(&out, &content)
        }
        Command::Sweep {
            circuit,
            alphas,
            thetas,
            shots,
            seed,
            no_feed_forward,
            out,
        } => {
            let rows = sweep(
                circuit.into(),
                &alphas,
                &thetas,
                shots,
                seed,
                !no_feed_forward,
            )?;
            let mut content = format!("{STATS_CSV_HEADER}\n");
            for row in &rows {
                content.push_str(&row.to_csv_row());
                content.push('\n');
            }
            write_output(&out, &content)
        }
        Command::Density { probe, step, out } => {
            let state = HybridState::new_plus_product(2, probe.alpha, probe.theta)?;
            let state = apply_cross_kerr(&state, KerrSite { mode: 0, pol: Pol::H, sign: 1 })?;
            let state = apply_cross_kerr(&state, KerrSite { mode: 1, pol: Pol::H, sign: -1 })?;
            let lo = 2.0 * probe.alpha * probe.theta.cos() - 8.0;
            let hi = 2.0 * probe.alpha + 8.0;
            let mut content = String::from("x,density\n");
            let n = ((hi - lo) / step).ceil() as usize + 1;
            for i in 0..n {
                let x = lo + i as f64 * step;
                content.push_str(&format!("{},{}\n", x, outcome_density(&state, x)?));
            }
            write_output(&out, &content)
        }
        Command::Validate { out } => {
            let mut content = String::from("alpha,theta,n_trunc,max_deviation\n");
            let mut worst = 0.0f64;
            for &alpha in &[0.5, 1.0, 2.0, 4.0] {
                for &theta in &[0.1, 0.3, 0.6] {
                    let n = default_truncation(alpha);
                    let dev = validate_phase_label_model(alpha, theta, n)?;
                    worst = worst.max(dev);
                    content.push_str(&format!("{alpha},{theta},{n},{dev:e}\n"));
                }
            }
            write_output(&out, &content)?;
            if worst >= 1e-6 {
                return Err(eprsim::SimError::InvalidParameter(format!(
                    "phase-label model deviation {worst:e} exceeds 1e-6"
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
