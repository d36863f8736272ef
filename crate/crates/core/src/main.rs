use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gridfreq::analysis::{compute_metrics, sweep_study, SweepResult};
use gridfreq::output::{self, Series};
use gridfreq::scenario::{preset_fleet, preset_scenario, preset_table, ConfigFile, ControlMode, Preset, Study, SweepSpec};
use gridfreq::{run_simulation, Error, StorageKind, Trace};

#[derive(Parser)]
#[command(name = "gridfreq", version, about = "Grid frequency response with energy-storage primary control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one contingency and write trace.csv and metrics.csv.
    Run(StudyArgs),
    /// Run a parameter sweep and write sweep.csv next to the base-case files.
    Sweep {
        #[command(flatten)]
        study: StudyArgs,
        /// Sweep kind when no config file supplies one.
        #[arg(long, value_enum)]
        kind: Option<SweepKind>,
        /// Comma-separated sweep values (MW*s, s, or penetration fraction).
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// List the built-in presets.
    PresetList,
}

#[derive(Args)]
struct StudyArgs {
    /// JSON study configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long, value_enum)]
    control: Option<ControlArg>,
    #[arg(long, value_enum)]
    storage_kind: Option<KindArg>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Ei,
    Ercot,
}

#[derive(Clone, Copy, ValueEnum)]
enum ControlArg {
    Droop,
    Step,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Hees,
    Hpes,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Capacity,
    Duration,
    Penetration,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Ei => Preset::Ei,
            PresetArg::Ercot => Preset::Ercot,
        }
    }
}

impl From<ControlArg> for ControlMode {
    fn from(c: ControlArg) -> Self {
        match c {
            ControlArg::Droop => ControlMode::Droop,
            ControlArg::Step => ControlMode::Step,
            ControlArg::None => ControlMode::None,
        }
    }
}

impl From<KindArg> for StorageKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Hees => StorageKind::Hees,
            KindArg::Hpes => StorageKind::Hpes,
        }
    }
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SimulationAborted { .. } | Error::NumericDomain(_) => 2,
        Error::Sweep { source, .. } => exit_code(source),
        _ => 1,
    }
}

fn load_study(args: &StudyArgs) -> Result<Study, Failure> {
    let mut config = match (&args.config, args.preset) {
        (Some(path), None) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    return Err(Error::ConfigNotFound(path.clone()).into());
                }
                Err(e) => return Err(Error::Io(e).into()),
            };
            ConfigFile::parse(&text)?
        }
        (None, Some(p)) => ConfigFile::parse(&format!("{{\"preset\": \"{}\"}}", Preset::from(p)))?,
        (None, None) => return Err(Failure::Usage("one of --config or --preset is required".into())),
        (Some(_), Some(_)) => return Err(Failure::Usage("--config and --preset are mutually exclusive".into())),
    };
    if let Some(c) = args.control {
        config.control = Some(c.into());
    }
    if let Some(k) = args.storage_kind {
        config.storage_kind = Some(k.into());
    }
    Ok(config.into_study()?)
}

fn default_values(kind: SweepKind, study: &Study) -> Vec<f64> {
    match kind {
        SweepKind::Capacity => {
            let e = study.devices.first().map_or(1.0, |d| d.e_max_mws);
            [0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.5, 2.0, 4.0]
                .iter()
                .map(|f| f * e)
                .collect()
        }
        SweepKind::Duration => (1..=30).map(|i| 2.0 * i as f64).collect(),
        SweepKind::Penetration => vec![0.2, 0.4, 0.6, 0.8],
    }
}

fn write_base_case(study: &Study, args: &StudyArgs) -> Result<Trace, Failure> {
    std::fs::create_dir_all(&args.out).map_err(Error::from)?;
    let trace = run_simulation(&study.model()?, &study.scenario, &study.devices)?;
    let metrics = compute_metrics(&trace)?;
    output::write_trace_file(&trace, &args.out.join("trace.csv"))?;
    output::write_metrics_file(&metrics, &args.out.join("metrics.csv"))?;
    println!(
        "{}: nadir {:.4} Hz at {:.2} s, settling {:.4} Hz, storage energy {:.1} MW*s",
        study.scenario.name, metrics.nadir_hz, metrics.nadir_time_s, metrics.settling_hz, metrics.energy_used_mws
    );
    if args.plot {
        plot_trace(&trace, &study.scenario.name, &args.out)?;
    }
    Ok(trace)
}

fn plot_trace(trace: &Trace, name: &str, out: &Path) -> Result<(), Error> {
    output::emit_svg_plot(
        &out.join("frequency.svg"),
        name,
        "time (s)",
        "frequency (Hz)",
        &[Series { x: &trace.t_s, y: &trace.freq_hz }],
        &["frequency"],
    )?;
    if !trace.device_power_mw.is_empty() {
        let power: Vec<f64> = (0..trace.len()).map(|i| trace.es_power_mw(i)).collect();
        output::emit_svg_plot(
            &out.join("storage_power.svg"),
            name,
            "time (s)",
            "storage output (MW)",
            &[Series { x: &trace.t_s, y: &power }],
            &["storage"],
        )?;
    }
    Ok(())
}

fn plot_sweep(sweep: &SweepResult, out: &Path) -> Result<(), Error> {
    let x = sweep.values();
    let column = sweep.parameter.column();
    output::emit_svg_plot(
        &out.join("sweep_nadir.svg"),
        "nadir",
        column,
        "nadir (Hz)",
        &[Series { x: &x, y: &sweep.nadirs() }],
        &["nadir"],
    )?;
    output::emit_svg_plot(
        &out.join("sweep_nadir_time.svg"),
        "nadir time",
        column,
        "nadir time (s)",
        &[Series { x: &x, y: &sweep.nadir_times() }],
        &["nadir time"],
    )
}

fn preset_list() -> Result<(), Failure> {
    println!("preset  load_mw   loss_mw  p_max_mw  e_max_mws  droop  activation_hz  H_base_s  pv+wind");
    for p in [Preset::Ei, Preset::Ercot] {
        let t = preset_table(p)?;
        let f = preset_fleet(p)?;
        let s = preset_scenario(p)?;
        println!(
            "{:<7} {:<9} {:<8} {:<9} {:<10} {:<6} {:<14} {:<9} {:.0}%+{:.0}%",
            p.to_string(),
            t.load_mw,
            t.loss_mw,
            t.p_max_mw,
            t.e_max_mws,
            t.droop_ratio,
            t.activation_hz,
            f.base_inertia_s,
            100.0 * s.pv_fraction,
            100.0 * s.wind_fraction
        );
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => {
            let study = load_study(&args)?;
            write_base_case(&study, &args)?;
        }
        Command::Sweep { study: args, kind, values } => {
            let study = load_study(&args)?;
            let spec = match (kind, &study.sweep) {
                (Some(k), _) => {
                    let values = values.unwrap_or_else(|| default_values(k, &study));
                    match k {
                        SweepKind::Capacity => SweepSpec::Capacity { values },
                        SweepKind::Duration => SweepSpec::Duration { values },
                        SweepKind::Penetration => SweepSpec::Penetration { values },
                    }
                }
                (None, Some(spec)) if values.is_none() => spec.clone(),
                (None, Some(_)) => return Err(Failure::Usage("--values requires --kind".into())),
                (None, None) => {
                    return Err(Failure::Usage("no sweep in the config; pass --kind".into()));
                }
            };
            write_base_case(&study, &args)?;
            let sweep = sweep_study(&study, &spec)?;
            output::write_sweep_file(&sweep, &args.out.join("sweep.csv"))?;
            if let Some(i) = sweep.argmax() {
                let p = &sweep.points[i];
                println!(
                    "{} sweep: {} points, best nadir {:.4} Hz at {} = {}",
                    sweep.parameter.column(),
                    sweep.points.len(),
                    p.metrics.nadir_hz,
                    sweep.parameter.column(),
                    p.value
                );
            }
            if args.plot {
                plot_sweep(&sweep, &args.out)?;
            }
        }
        Command::PresetList => preset_list()?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
