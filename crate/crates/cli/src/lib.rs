//! `cqed` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 fit
//! non-convergence. Errors go to stderr as `ERROR[code]: message`.

pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use cqed_core::experiment::{
    calibrate_coupling_phases, calibrate_p_error, gate_fidelity, gate_matrix, ideal_gate, master_scan, run_ideal,
    run_monte_carlo, scan_grid, scan_windows,
};
use cqed_core::schedule::{compile_phase_gate_plan, detuning_from_field};
use cqed_core::{fit_beat, Error, RunDataset, ScanPoint};

pub use config::Config;

#[derive(Parser, Debug)]
#[command(name = "cqed", version, about = "Two-mode cavity QED entanglement simulator")]
struct Cli {
    /// `key = value` configuration file (defaults when absent).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ScanArgs {
    /// Single-window scan start (μs).
    #[arg(long)]
    t_start_us: Option<f64>,
    #[arg(long)]
    t_end_us: Option<f64>,
    /// Grid step (μs).
    #[arg(long)]
    t_step_us: Option<f64>,
    /// Comma-separated windows in μs, e.g. "70..110,230..270".
    #[arg(long)]
    windows: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pure-state sequence with constant coupling and mode isolation.
    Ideal {
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Master-equation P_e(T), conditioned on the source read in g.
    Master {
        #[command(flatten)]
        scan: ScanArgs,
        /// Leave the source atom out.
        #[arg(long)]
        no_source: bool,
    },
    /// Simulated detection record.
    Mc {
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long)]
        no_source: bool,
        #[arg(long)]
        n_sequences: Option<u64>,
    },
    /// Shared-phase beat fit of a dataset CSV ("-" reads stdin).
    Fit {
        input: PathBuf,
        /// Also write fit.svg (requires --out).
        #[arg(long)]
        svg: bool,
    },
    /// Realized two-mode phase gate.
    Gate {
        #[arg(long, allow_hyphen_values = true)]
        phase: Option<f64>,
    },
    /// Coupling-phase and detector calibration, as a config fragment.
    Calibrate,
    /// Compiled pulse plans.
    Schedule,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Parse(_) | Error::Io(_) => 1,
        Error::Numerical(_) => 2,
        Error::NonConvergence(_) => 3,
    }
}

fn fail(code: i32, msg: impl std::fmt::Display) -> i32 {
    eprintln!("ERROR[{code}]: {msg}");
    code
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => return fail(1, e.to_string().lines().next().unwrap_or("invalid arguments")),
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => fail(exit_code(&e), e),
    }
}

fn load_config(path: Option<&Path>) -> cqed_core::Result<Config> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", p.display())))?;
            Config::parse(&text)
        }
        None => Ok(Config::default()),
    }
}

fn execute(cli: Cli) -> cqed_core::Result<i32> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let source = cli.config.as_ref().map_or("built-in defaults".to_string(), |p| p.display().to_string());
    eprintln!("# parameter set ({source})");
    for line in cfg.serialize().lines() {
        eprintln!("#   {line}");
    }
    let out = Output::new(cli.out)?;

    match cli.command {
        Command::Ideal { scan } => {
            let setup = cfg.setup(true)?;
            let points = grid(&cfg, &scan)?;
            let p = points
                .par_iter()
                .map(|pt| run_ideal(pt.t, &setup).map(|r| r.p_e))
                .collect::<cqed_core::Result<Vec<_>>>()?;
            out.emit("ideal.csv", &RunDataset::from_exact(&points, &p, cfg.nominal_n).to_csv())?;
        }
        Command::Master { scan, no_source } => {
            let setup = cfg.setup(false)?;
            let points = grid(&cfg, &scan)?;
            let times: Vec<f64> = points.iter().map(|p| p.t).collect();
            let p: Vec<f64> = master_scan(&times, &setup, !no_source)?.iter().map(|b| b.pe_given_g).collect();
            out.emit("master.csv", &RunDataset::from_exact(&points, &p, cfg.nominal_n).to_csv())?;
        }
        Command::Mc { scan, no_source, n_sequences } => {
            let setup = cfg.setup(false)?;
            let points = grid(&cfg, &scan)?;
            let n = n_sequences.unwrap_or(cfg.n_sequences);
            let data = run_monte_carlo(&points, n, &setup, &cfg.detector(), &cfg.samples(), cfg.seed, !no_source)?;
            let samples = n * points.len() as u64 * if no_source { 1 } else { 2 };
            eprintln!("# equivalent acquisition time {:.1} s", cfg.samples().acquisition_time(samples));
            out.emit("mc.csv", &data.to_csv())?;
        }
        Command::Fit { input, svg } => {
            let data = read_dataset(&input)?;
            let delta = cfg.params().delta;
            let report = fit_beat(&data, delta)?;
            out.emit("fit.json", &(report.to_json() + "\n"))?;
            if svg {
                out.file("fit.svg", &svg::beat_plot(&data, Some(&report), delta))?;
            }
            eprintln!("# chi2/dof = {:.4}, phi = {:.6} rad", report.chi2_per_dof(), report.phi);
            if !report.converged {
                return Ok(fail(3, format!("fit did not converge (gradient {:.3e})", report.gradient)));
            }
        }
        Command::Gate { phase } => {
            let setup = cfg.setup(true)?;
            let phi = phase.unwrap_or(cfg.gate_phase);
            let u = gate_matrix(phi, &setup)?;
            let mut text = format!("# gate_phase = {phi}\n# basis |0a0b>, |0a1b>, |1a0b>, |1a1b>; columns are images\n");
            for r in 0..4 {
                let row: Vec<String> = (0..4).map(|c| format!("{:+.6}{:+.6}i", u[(r, c)].re, u[(r, c)].im)).collect();
                text.push_str(&row.join(" "));
                text.push('\n');
            }
            text.push_str(&format!("fidelity = {:.9}\n", gate_fidelity(&u, &ideal_gate(phi))));
            out.emit("gate.txt", &text)?;
        }
        Command::Calibrate => {
            let phases = calibrate_coupling_phases(&cfg.setup(true)?)?;
            let det = calibrate_p_error(&cfg.setup(false)?, 0.86)?;
            let text = format!(
                "# coupling phases from the idealized sequence; p_error brings the\n\
                 # simulated source g-rate {:.6} down to 0.86\n\
                 coupling_phase_a = {}\ncoupling_phase_b = {}\np_error = {}\n",
                det.source_g, phases.theta_a, phases.theta_b, det.p_error
            );
            out.emit("calibration.conf", &text)?;
        }
        Command::Schedule => {
            let setup = cfg.setup(false)?;
            let mut text = String::new();
            text.push_str(&setup.source_plan()?.listing());
            text.push_str(&setup.probe_plan(0.0)?.listing());
            match compile_phase_gate_plan(&setup.params, &setup.plan_config(), cfg.gate_phase) {
                Ok(plan) => text.push_str(&plan.listing()),
                Err(Error::Domain(why)) => text.push_str(&format!("# gate plan not realizable: {why}\n")),
                Err(e) => return Err(e),
            }
            let stark = cfg.stark();
            stark.validate()?;
            let fields = [
                ("resonant with M_a", 0.0),
                ("resonant with M_b", -setup.params.delta),
                ("freeze", setup.plan.freeze_detuning),
            ];
            text.push_str("# stark fields (V/cm)\n");
            for (what, det) in fields {
                match stark.field_for(det) {
                    Some(e) => {
                        let back = detuning_from_field(e, &stark)?;
                        text.push_str(&format!("{what}: {e:.6} (detuning {:.3} kHz)\n", back / (2e3 * std::f64::consts::PI)));
                    }
                    None => text.push_str(&format!("{what}: unreachable\n")),
                }
            }
            out.emit("schedule.txt", &text)?;
        }
    }
    Ok(0)
}

fn grid(cfg: &Config, scan: &ScanArgs) -> cqed_core::Result<Vec<ScanPoint>> {
    let step = scan.t_step_us.unwrap_or(cfg.t_step_us);
    let us = |x: f64| x * 1e-6;
    match (scan.t_start_us, scan.t_end_us, &scan.windows) {
        (Some(_), _, Some(_)) | (_, Some(_), Some(_)) => {
            Err(Error::Domain("give either --windows or --t-start-us/--t-end-us, not both".into()))
        }
        (Some(a), Some(b), None) => scan_grid(us(a), us(b), us(step), 0),
        (Some(_), None, None) | (None, Some(_), None) => {
            Err(Error::Domain("--t-start-us and --t-end-us go together".into()))
        }
        (None, None, w) => {
            let windows = match w {
                Some(w) => config::parse_windows(w)?,
                None => cfg.windows.clone(),
            };
            let si: Vec<(f64, f64)> = windows.iter().map(|&(a, b)| (us(a), us(b))).collect();
            scan_windows(&si, us(step))
        }
    }
}

fn read_dataset(input: &Path) -> cqed_core::Result<RunDataset> {
    if input.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        RunDataset::from_csv(&text)
    } else {
        RunDataset::read_csv(input)
    }
}

/// Where results go: a directory given by `--out`, or stdout.
struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    fn new(dir: Option<PathBuf>) -> cqed_core::Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self { dir })
    }

    fn emit(&self, name: &str, text: &str) -> cqed_core::Result<()> {
        match &self.dir {
            Some(_) => self.file(name, text),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                stdout.flush()?;
                Ok(())
            }
        }
    }

    fn file(&self, name: &str, text: &str) -> cqed_core::Result<()> {
        let dir = self
            .dir
            .as_ref()
            .ok_or_else(|| Error::Domain(format!("{name} needs an output directory (--out)")))?;
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        eprintln!("# wrote {}", path.display());
        Ok(())
    }
}
