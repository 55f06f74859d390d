use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mzinet::network::{self, NetworkConfig, Topology};
use mzinet::optimizer::OperatingPoint;
use mzinet::scenario::{self, fmt_num, ScenarioOutput};
use mzinet::trace::{self, AnalyzerSettings, TraceTiming};
use mzinet::verify::{self, Fault, Suite};
use mzinet::{laws, read_json, units, Error};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "mzinet",
    version,
    about = "Distributed phase sensing with a squeezed MZI network"
)]
struct Cli {
    /// Output format for single-point results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Sensitivity of a fully specified network (JSON network config).
    Sensitivity {
        #[arg(long)]
        config: PathBuf,
    },
    /// Optimal allocation and variance of an operating point (JSON).
    Optimize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a scenario file and write its CSV tables.
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the bundled scenario of a figure panel.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(scenario::FIGURES))]
        figure: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cross-engine consistency checks.
    Verify {
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Corrupt the noise matrix to demonstrate a failing report.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Synthesize or analyze homodyne time series.
    #[command(subcommand)]
    Trace(TraceCommand),
    /// Photon flux of a continuous beam.
    Flux {
        /// Optical power, W.
        #[arg(long)]
        power: f64,
        /// Wavelength, m.
        #[arg(long, default_value_t = 895e-9)]
        wavelength: f64,
    },
}

#[derive(Args)]
struct TimingArgs {
    #[arg(long, default_value_t = TraceTiming::default().sample_rate)]
    sample_rate: f64,
    #[arg(long, default_value_t = TraceTiming::default().n_cycles)]
    cycles: usize,
    #[arg(long, default_value_t = TraceTiming::default().drive_freq)]
    drive_freq: f64,
}

#[derive(Subcommand)]
enum TraceCommand {
    /// Write a synthetic trace file for a network config.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Phase drive amplitude per sensor, rad.
        #[arg(long, default_value_t = 1e-8)]
        drive: f64,
        #[command(flatten)]
        timing: TimingArgs,
    },
    /// Joint noise and SNR of a trace file against its reference run.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        drive: f64,
        #[arg(long, default_value_t = AnalyzerSettings::default().rbw)]
        rbw: f64,
        #[arg(long, default_value_t = AnalyzerSettings::default().vbw)]
        vbw: f64,
    },
}

enum Failure {
    Error(Error),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn emit(format: Format, fields: &[(&str, String)]) {
    match format {
        Format::Text => {
            let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in fields {
                println!("{k:width$}  {v}");
            }
        }
        Format::Csv => {
            let keys: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
            let values: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
            println!("{}", keys.join(","));
            println!("{}", values.join(","));
        }
    }
}

fn sensitivity(path: &Path, format: Format) -> Result<(), Failure> {
    let config: NetworkConfig = read_json(path)?;
    config.validate()?;
    let nu = config.weights.clone();
    let (variance, closed) = match config.topology {
        Topology::Entangled => (
            network::sensitivity_numeric(&config, &nu)?,
            network::sensitivity_closed_form(&config, &nu).ok(),
        ),
        Topology::Separable => {
            let v = network::sensitivity_separable(&config, &nu)?;
            (v, Some(v))
        }
    };
    let n_total = config.coherent_photons() + config.squeezed_photons();
    let sql = laws::sql_variance(n_total, &nu)?;
    emit(
        format,
        &[
            ("variance", fmt_num(variance)),
            ("std", fmt_num(variance.sqrt())),
            (
                "variance_closed_form",
                closed.map(fmt_num).unwrap_or_default(),
            ),
            ("sql", fmt_num(sql)),
            ("db_below_sql", fmt_num(10.0 * (sql / variance).log10())),
            ("n_total", fmt_num(n_total)),
            ("lambda", fmt_num(config.lambda())),
            ("k", fmt_num(config.enhancement())),
        ],
    );
    Ok(())
}

fn optimize(path: &Path, format: Format) -> Result<(), Failure> {
    let point: OperatingPoint = read_json(path)?;
    let res = point.resolve()?;
    let numeric = network::sensitivity_numeric(&res.config, &res.nu)?;
    let n_s = laws::r_to_ns(res.r)?;
    let sql = laws::sql_variance(res.n_c + n_s, &res.nu)?;
    let join = |v: Vec<f64>| v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(" ");
    emit(
        format,
        &[
            ("n_c", fmt_num(res.n_c)),
            ("n_s", fmt_num(n_s)),
            ("r", fmt_num(res.r)),
            ("lambda", fmt_num(res.lambda)),
            ("k", fmt_num(res.k)),
            ("variance_numeric", fmt_num(numeric)),
            ("variance_closed_form", fmt_num(res.closed_form)),
            ("std", fmt_num(numeric.sqrt())),
            ("sql", fmt_num(sql)),
            ("db_below_sql", fmt_num(10.0 * (sql / numeric).log10())),
            ("split", join(res.config.split.clone())),
            (
                "amplitudes",
                join(res.config.alphas.iter().map(|a| a.amplitude).collect()),
            ),
            (
                "phases",
                join(res.config.alphas.iter().map(|a| a.phase).collect()),
            ),
        ],
    );
    Ok(())
}

fn write_output(output: &ScenarioOutput, out: &Path) -> Result<(), Failure> {
    for path in output.write(out)? {
        println!("wrote {}", path.display());
    }
    if output.failed_rows > 0 {
        eprintln!(
            "{} row(s) failed; see the status column",
            output.failed_rows
        );
    }
    Ok(())
}

fn trace_command(cmd: TraceCommand, format: Format) -> Result<(), Failure> {
    match cmd {
        TraceCommand::Synth {
            config,
            out,
            seed,
            drive,
            timing,
        } => {
            let config: NetworkConfig = read_json(&config)?;
            let timing = TraceTiming {
                sample_rate: timing.sample_rate,
                n_cycles: timing.cycles,
                drive_freq: timing.drive_freq,
                ..TraceTiming::default()
            };
            let traces = trace::synthesize(&config, &vec![drive; config.d], &timing, seed)?;
            trace::write_traces(&out, &traces)?;
            println!("wrote {}", out.display());
        }
        TraceCommand::Analyze {
            input,
            config,
            drive,
            rbw,
            vbw,
        } => {
            let config: NetworkConfig = read_json(&config)?;
            let traces = trace::read_traces(&input, None)?;
            let nu = config.weights.clone();
            let settings = AnalyzerSettings { rbw, vbw };
            let j = trace::joint_noise_analysis(
                &traces,
                &nu,
                &config,
                &vec![drive; config.d],
                &settings,
            )?;
            emit(
                format,
                &[
                    ("db_below_sql", fmt_num(j.db_below_sql)),
                    ("snr_db", fmt_num(j.snr_db)),
                    ("snr_reference_db", fmt_num(j.snr_reference_db)),
                    ("snr_gain_db", fmt_num(j.snr_gain_db)),
                    ("recovered_drive", fmt_num(j.recovered_drive)),
                ],
            );
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let format = cli.format;
    match cli.command {
        Command::Sensitivity { config } => sensitivity(&config, format),
        Command::Optimize { config } => optimize(&config, format),
        Command::Scan { config, out, seed } => {
            let s = scenario::load_scenario(&config)?;
            write_output(&scenario::run_scenario(&s, seed)?, &out)
        }
        Command::Reproduce { figure, out, seed } => {
            write_output(&scenario::reproduce(&figure, seed)?, &out)
        }
        Command::Verify {
            full,
            seed,
            inject_fault,
        } => {
            let suite = if full { Suite::Full } else { Suite::Quick };
            let fault = inject_fault.then_some(Fault::FlipGammaOffDiagonal);
            let report = verify::verify(suite, seed, fault)?;
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::Trace(cmd) => trace_command(cmd, format),
        Command::Flux { power, wavelength } => {
            let f = units::photon_flux(power, wavelength)?;
            emit(format, &[("photons_per_second", fmt_num(f))]);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(EXIT_VERIFY),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() {
                EXIT_CONFIG
            } else {
                EXIT_NUMERIC
            })
        }
    }
}
