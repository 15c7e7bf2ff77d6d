//! `radio-energy`: file-based front end for the estimators, calibration,
//! trace tools and sweeps.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 I/O error.
//! Data goes to stdout (or `--out`), diagnostics to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use radio_energy::analysis::{demo_sensor_sweep, run_sweep, SweepConfig};
use radio_energy::calibration::fit_ols;
use radio_energy::formats::{self, parse_model, read_to_string, write_string};
use radio_energy::trace::{
    detect_periodic_peaks, integrate_energy, segment_trace, synthesize_trace, SynthesisSpec, TransitionShape,
};
use radio_energy::workload::{gen_sensor_workload, gen_wifi_psm_workload, SensorWorkloadParams, WifiWorkloadParams};
use radio_energy::{estimate_basic, estimate_with_events, estimate_with_transitions, CurrentTrace, Error, Timeline};

#[derive(Debug, Parser)]
#[command(name = "radio-energy", version, about = "State-based radio energy estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Basic,
    Transitions,
    Events,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Shape {
    Rectangular,
    LinearRamp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WorkloadKind {
    Sensor,
    Wifi,
}

#[derive(Debug, clap::Args)]
struct TraceArgs {
    /// Trace CSV (`time_s,current_a`)
    #[arg(long)]
    trace: PathBuf,
    /// Supply voltage in volts; overrides any sidecar
    #[arg(long)]
    voltage: Option<f64>,
    /// JSON sidecar with `supply_voltage_v` (default: `<trace>.json` if present)
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate energy of a timeline under a model; prints a JSON report
    Estimate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        timeline: PathBuf,
        /// Events CSV (`kind,timestamp_s`)
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "events")]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit state currents and transition/event charges by least squares
    Calibrate {
        /// Observations CSV, one row per run
        #[arg(long)]
        observations: PathBuf,
        /// Skeleton model naming the unknowns
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover a state timeline from a current trace; prints timeline CSV
    Segment {
        #[command(flatten)]
        trace: TraceArgs,
        #[arg(long)]
        model: PathBuf,
        /// Hysteresis in amperes
        #[arg(long)]
        hysteresis: f64,
        /// Minimum dwell in seconds
        #[arg(long = "min-dwell")]
        min_dwell: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect periodic current peaks (beacons); prints a JSON report
    Peaks {
        #[command(flatten)]
        trace: TraceArgs,
        /// Rolling-median baseline window in seconds
        #[arg(long = "baseline-window")]
        baseline_window: f64,
        /// Threshold above baseline in amperes
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a trace to joules; prints `{"energy_j": ..}`
    Integrate {
        #[command(flatten)]
        trace: TraceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize a ground-truth current trace; prints trace CSV
    Synth {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        timeline: PathBuf,
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Noise standard deviation in amperes
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Sample rate in Hz
        #[arg(long, default_value_t = 10_000.0)]
        rate: f64,
        #[arg(long, value_enum, default_value = "rectangular")]
        shape: Shape,
        /// Width of event pulses in seconds
        #[arg(long = "pulse-width", default_value_t = 2e-3)]
        pulse_width: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a voltage sidecar JSON here
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Run an error-vs-traffic-rate sweep; prints error curve CSV
    Sweep {
        /// Sweep config JSON
        #[arg(long, required_unless_present = "demo")]
        config: Option<PathBuf>,
        /// Use the built-in synthetic demo scenario
        #[arg(long, conflicts_with = "config")]
        demo: bool,
        /// Print the config as JSON instead of running it
        #[arg(long = "print-config")]
        print_config: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a workload timeline from a parameter JSON
    Workload {
        #[arg(long, value_enum)]
        kind: WorkloadKind,
        #[arg(long)]
        params: PathBuf,
        /// Timeline CSV destination (default stdout)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Events CSV destination
        #[arg(long = "events-out")]
        events_out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => write_string(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_timeline(path: &Path, events: Option<&Path>) -> Result<Timeline, Error> {
    let intervals = read_to_string(path)?;
    let events = events.map(read_to_string).transpose()?;
    formats::parse_timeline_csv(&intervals, events.as_deref())
}

fn load_trace(args: &TraceArgs, fallback_voltage: Option<f64>) -> Result<CurrentTrace, Error> {
    let voltage = match (args.voltage, &args.sidecar) {
        (Some(v), _) => v,
        (None, Some(p)) => formats::parse_sidecar(&read_to_string(p)?)?,
        (None, None) => {
            let mut default = args.trace.clone().into_os_string();
            default.push(".json");
            let default = PathBuf::from(default);
            if default.exists() {
                formats::parse_sidecar(&read_to_string(&default)?)?
            } else {
                fallback_voltage.ok_or_else(|| {
                    Error::InvalidParams("supply voltage unknown: pass --voltage or --sidecar".into())
                })?
            }
        }
    };
    formats::parse_trace_csv(&read_to_string(&args.trace)?, voltage)
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Estimate {
            model,
            timeline,
            events,
            mode,
            out,
        } => {
            let model = parse_model(&read_to_string(&model)?)?;
            let timeline = load_timeline(&timeline, events.as_deref())?;
            let report = match mode {
                Mode::Basic => estimate_basic(&model, &timeline)?,
                Mode::Transitions => estimate_with_transitions(&model, &timeline)?,
                Mode::Events => estimate_with_events(&model, &timeline)?,
            };
            emit(out.as_deref(), &formats::to_json(&report))
        }
        Command::Calibrate { observations, model, out } => {
            let skeleton = parse_model(&read_to_string(&model)?)?;
            let obs = formats::parse_observations_csv(&read_to_string(&observations)?)?;
            let result = fit_ols(&obs, &skeleton)?;
            emit(out.as_deref(), &formats::calibration_json(&result, &skeleton))
        }
        Command::Segment {
            trace,
            model,
            hysteresis,
            min_dwell,
            out,
        } => {
            let model = parse_model(&read_to_string(&model)?)?;
            let trace = load_trace(&trace, Some(model.supply_voltage))?;
            let timeline = segment_trace(&trace, &model, hysteresis, min_dwell)?;
            emit(out.as_deref(), &formats::timeline_csv(&timeline))
        }
        Command::Peaks {
            trace,
            baseline_window,
            threshold,
            out,
        } => {
            // voltage does not enter peak detection
            let trace = load_trace(&trace, Some(1.0))?;
            let report = detect_periodic_peaks(&trace, baseline_window, threshold)?;
            emit(out.as_deref(), &formats::to_json(&report))
        }
        Command::Integrate { trace, out } => {
            let trace = load_trace(&trace, None)?;
            let energy = integrate_energy(&trace)?;
            emit(out.as_deref(), &formats::to_json(&serde_json::json!({ "energy_j": energy })))
        }
        Command::Synth {
            model,
            timeline,
            events,
            seed,
            noise,
            rate,
            shape,
            pulse_width,
            out,
            sidecar,
        } => {
            let model = parse_model(&read_to_string(&model)?)?;
            let timeline = load_timeline(&timeline, events.as_deref())?;
            if !(rate.is_finite() && rate > 0.0) {
                return Err(Error::InvalidParams(format!("sample rate {rate} Hz must be > 0")));
            }
            let mut spec = SynthesisSpec::new(1.0 / rate).with_noise(noise, seed);
            spec.transition_shape = match shape {
                Shape::Rectangular => TransitionShape::Rectangular,
                Shape::LinearRamp => TransitionShape::LinearRamp,
            };
            spec.default_pulse_width = pulse_width;
            let trace = synthesize_trace(&model, &timeline, &spec)?;
            if let Some(p) = sidecar {
                write_string(&p, &formats::sidecar_json(trace.supply_voltage()))?;
            }
            emit(out.as_deref(), &formats::trace_csv(&trace))
        }
        Command::Sweep {
            config,
            demo,
            print_config,
            out,
        } => {
            let config: SweepConfig = match config {
                Some(p) if !demo => formats::from_json(&read_to_string(&p)?, "sweep config JSON")?,
                _ => demo_sensor_sweep(),
            };
            if print_config {
                return emit(out.as_deref(), &formats::to_json(&config));
            }
            let curve = run_sweep(&config)?;
            emit(out.as_deref(), &formats::error_curve_csv(&curve))
        }
        Command::Workload {
            kind,
            params,
            out,
            events_out,
        } => {
            let text = read_to_string(&params)?;
            let timeline = match kind {
                WorkloadKind::Sensor => {
                    gen_sensor_workload(&formats::from_json::<SensorWorkloadParams>(&text, "sensor params JSON")?)?
                }
                WorkloadKind::Wifi => {
                    gen_wifi_psm_workload(&formats::from_json::<WifiWorkloadParams>(&text, "wifi params JSON")?)?
                }
            };
            if let Some(p) = events_out {
                write_string(&p, &formats::events_csv(&timeline))?;
            }
            emit(out.as_deref(), &formats::timeline_csv(&timeline))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
