//! `podlab`: modal analysis, scenario simulation and the comparative
//! damping-controller studies.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad case or scenario,
//! 3 simulation divergence. `PODLAB_WORKERS` caps the worker threads.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use podlab::experiment::export::{
    gain_sweep_table, residue_grid_table, write_experiment, write_json, write_scenario,
};
use podlab::experiment::{
    default_angles, default_gains, default_scales, gain_sweep, ieee39_degraded, residue_sweep,
    run_ieee39_on, run_pair, Scenario, StudySetup,
};
use podlab::grid::CaseData;
use podlab::modal::{analyze, mode_table_csv};
use podlab::{Error, PowerSystemModel};

const WORKERS_ENV: &str = "PODLAB_WORKERS";

#[derive(Parser)]
#[command(name = "podlab", version, about = "Phasor POD with a control-input model: studies and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Electromechanical modes and residues of a case (CSV on stdout).
    Modes {
        /// `smib`, `ieee39` or a case file.
        case: String,
        /// Apply the degraded 39-bus operating condition.
        #[arg(long)]
        degraded: bool,
        /// Frequency band, Hz.
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.1, 3.0])]
        band: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Also write the table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario file; writes series.csv, ticks.csv and summary.json.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value = "results/simulate")]
        out: PathBuf,
    },
    /// Single-machine comparison of both controllers.
    SmibStudy {
        #[arg(long, default_value_t = 15.0)]
        gain: f64,
        /// Gain of the control-input-model controller (default: `--gain`).
        #[arg(long)]
        gain_cim: Option<f64>,
        #[arg(long, default_value = "results/smib")]
        out: PathBuf,
    },
    /// Cost/performance curves of both controllers over a gain list.
    GainSweep {
        #[arg(long, default_value = "smib", value_parser = ["smib", "ieee39"])]
        case: String,
        #[arg(long, value_delimiter = ',')]
        gains: Option<Vec<f64>>,
        #[arg(long, default_value = "results/gain-sweep")]
        out: PathBuf,
    },
    /// Performance advantage at fixed cost over residue scale and angle
    /// errors (single machine).
    ResidueSweep {
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        angles: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        gains: Option<Vec<f64>>,
        /// Default: baseline cost at gain 28 with the exact residue.
        #[arg(long)]
        target_cost: Option<f64>,
        #[arg(long, default_value = "results/residue-sweep")]
        out: PathBuf,
    },
    /// Degraded 39-bus system, both controllers at one gain.
    Ieee39Study {
        #[arg(long, default_value_t = 20.0)]
        gain: f64,
        /// Skip the uncontrolled reference run.
        #[arg(long)]
        no_open_loop: bool,
        #[arg(long, default_value = "results/ieee39")]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } | Error::NonFiniteDerivative { .. } => 3,
        Error::Io(_) | Error::Json(_) => 1,
        _ => 2,
    }
}

fn init_workers() -> Result<(), String> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn machine_names(model: &PowerSystemModel) -> Vec<String> {
    model.machines.iter().map(|m| m.name.clone()).collect()
}

fn modes(case: &str, degraded: bool, band: &[f64], top: usize, out: Option<&Path>) -> podlab::Result<()> {
    let data = if degraded {
        if case != "ieee39" {
            return Err(Error::Scenario("--degraded applies to the ieee39 case only".into()));
        }
        ieee39_degraded()?
    } else {
        CaseData::from_name_or_path(case)?
    };
    let model = PowerSystemModel::from_case(&data)?;
    let pod = data
        .pod
        .as_ref()
        .ok_or_else(|| Error::Case("case has no [pod] table naming the measurement and TCSC".into()))?;
    let probe = model.resolve_measurement(&pod.measurement)?;
    let actuator = model.tcsc_index(pod.tcsc[0], pod.tcsc[1])?;
    let report = analyze(&model, model.base_conditions(), probe, actuator, (band[0], band[1]), top)?;
    let table = mode_table_csv(&report.rows());
    print!("{table}");
    if let Some(path) = out {
        std::fs::write(path, table)?;
    }
    Ok(())
}

fn simulate(path: &Path, out: &Path) -> podlab::Result<()> {
    let scenario = Scenario::load(path)?;
    let run = scenario.run()?;
    write_scenario(out, &scenario, &run)?;
    println!("{}", serde_json::to_string_pretty(&run.summary(&scenario))?);
    Ok(())
}

fn smib_study(gain: f64, gain_cim: f64, out: &Path) -> podlab::Result<()> {
    let setup = StudySetup::smib()?;
    let pair = run_pair(&setup, gain, gain_cim)?;
    let names = machine_names(&setup.model);
    write_experiment(out, "baseline", &pair.baseline, &names)?;
    write_experiment(out, "cim", &pair.cim, &names)?;
    let summary = pair.summary();
    write_json(out.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn gain_sweep_cmd(case: &str, gains: &[f64], out: &Path) -> podlab::Result<()> {
    let setup = match case {
        "ieee39" => StudySetup::ieee39()?,
        _ => StudySetup::smib()?,
    };
    let curves = gain_sweep(&setup, gains)?;
    std::fs::create_dir_all(out)?;
    gain_sweep_table(&curves).write_csv(out.join("gain_sweep.csv"))?;
    write_json(out.join("gain_sweep.json"), &curves)?;
    println!("{}", serde_json::to_string_pretty(&curves)?);
    Ok(())
}

fn residue_sweep_cmd(
    scales: &[f64],
    angles: &[f64],
    gains: &[f64],
    target: Option<f64>,
    out: &Path,
) -> podlab::Result<()> {
    let setup = StudySetup::smib()?;
    let grid = residue_sweep(&setup, scales, angles, gains, target)?;
    std::fs::create_dir_all(out)?;
    residue_grid_table(&grid).write_csv(out.join("residue_grid.csv"))?;
    write_json(out.join("residue_grid.json"), &grid)?;
    println!(
        "target cost {:.6}, positive advantage at unit scale over {:?} deg",
        grid.target_cost, grid.advantage_range_deg
    );
    Ok(())
}

fn ieee39_study(gain: f64, open_loop: bool, out: &Path) -> podlab::Result<()> {
    let setup = StudySetup::ieee39()?;
    let study = run_ieee39_on(&setup, gain, open_loop)?;
    let names = machine_names(&setup.model);
    write_experiment(out, "baseline", &study.pair.baseline, &names)?;
    write_experiment(out, "cim", &study.pair.cim, &names)?;
    if let Some(ol) = &study.open_loop {
        podlab::experiment::export::series_table(ol, &names).write_csv(out.join("open_loop_series.csv"))?;
    }
    write_json(out.join("summary.json"), &study.report)?;
    println!("{}", serde_json::to_string_pretty(&study.report)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_workers() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Modes {
            case,
            degraded,
            band,
            top,
            out,
        } => modes(&case, degraded, &band, top, out.as_deref()),
        Command::Simulate { scenario, out } => simulate(&scenario, &out),
        Command::SmibStudy { gain, gain_cim, out } => smib_study(gain, gain_cim.unwrap_or(gain), &out),
        Command::GainSweep { case, gains, out } => {
            gain_sweep_cmd(&case, &gains.unwrap_or_else(default_gains), &out)
        }
        Command::ResidueSweep {
            scales,
            angles,
            gains,
            target_cost,
            out,
        } => residue_sweep_cmd(
            &scales.unwrap_or_else(default_scales),
            &angles.unwrap_or_else(default_angles),
            &gains.unwrap_or_else(default_gains),
            target_cost,
            &out,
        ),
        Command::Ieee39Study {
            gain,
            no_open_loop,
            out,
        } => ieee39_study(gain, !no_open_loop, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
