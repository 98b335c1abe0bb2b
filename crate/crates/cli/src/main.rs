use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use bivirus_core::harness::{
    self, load_config, phase_plot, run_scenario, run_sweep, self_check, write_scenario, Config,
    EquilibriaReport, Format, LoadedConfig, Meta, RunStatus, ScenarioResult,
};
use bivirus_core::{reproduction_numbers, R0_REL_TOL};

/// Bi-virus SIS epidemic with replicator-dynamics social distancing.
#[derive(Debug, Parser)]
#[command(name = "bivirus", version)]
struct Cli {
    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output formats, comma separated or repeated (overrides `formats`).
    #[arg(long = "format", global = true, value_delimiter = ',', value_parser = parse_format)]
    formats: Vec<Format>,
    /// Treat violations of r1 < r2 and c_i > c_d as errors.
    #[arg(long, global = true)]
    strict: bool,
    /// Seed for the randomized self-check in `validate`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a config and probe the model at random points.
    Validate { config: PathBuf },
    /// Integrate every initial state and match the end points.
    Run { config: PathBuf },
    /// Tabulate fixed points, lines and their stability.
    Equilibria { config: PathBuf },
    /// Existence and stability over a parameter grid.
    Sweep { config: PathBuf },
    /// Run a scenario and export its (y1, y2) projection.
    Phase { config: PathBuf },
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

const PROBE_POINTS: usize = 100;

enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
    Unmatched(usize),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(anyhow::Error::new(e).context("writing output"))
    }
}

struct Ctx {
    cli_out: Option<PathBuf>,
    cli_formats: Vec<Format>,
    strict: bool,
    seed: u64,
}

impl Ctx {
    fn load(&self, path: &Path) -> Result<LoadedConfig, Failure> {
        let loaded = load_config(path, self.strict)
            .with_context(|| format!("loading {}", path.display()))
            .map_err(Failure::Config)?;
        for w in loaded.validation.warnings() {
            eprintln!("warning: assumption not met: {}", w.description);
        }
        Ok(loaded)
    }

    fn out_dir(&self, config: &Config) -> PathBuf {
        self.cli_out
            .clone()
            .unwrap_or_else(|| config.scenario().outputs.clone())
    }

    fn formats(&self, config: &Config) -> BTreeSet<Format> {
        if self.cli_formats.is_empty() {
            config.scenario().formats.clone()
        } else {
            self.cli_formats.iter().copied().collect()
        }
    }
}

fn report_runs(result: &ScenarioResult) -> Result<(), Failure> {
    for (k, run) in result.runs.iter().enumerate() {
        match (&run.trajectory, &run.nearest) {
            (Err(e), _) => println!("run {k}: failed: {e}"),
            (Ok(_), None) => println!("run {k}: no candidate equilibrium exists"),
            (Ok(t), Some(m)) => {
                let verdict = match &run.stability {
                    Some(Ok(r)) => format!(", {}", r.numeric_verdict),
                    Some(Err(e)) => format!(", stability unavailable: {e}"),
                    None => String::new(),
                };
                let x = t.terminal_state().unwrap();
                let conv = match t.converged_at {
                    Some(at) => format!("converged at t = {at:.3}"),
                    None => format!("not converged by t = {:.3}", t.final_time().unwrap_or(0.0)),
                };
                println!(
                    "run {k}: {} {} (distance {:.2e}{verdict}); {conv}; terminal {x}",
                    run.status(),
                    m.target,
                    m.distance,
                );
            }
        }
    }
    let failed = result.count(RunStatus::Failed);
    if failed > 0 {
        return Err(Failure::Numerical(anyhow::anyhow!("{failed} trajectories failed")));
    }
    match result.count(RunStatus::Unmatched) {
        0 => Ok(()),
        n => Err(Failure::Unmatched(n)),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serializing to memory");
    std::fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let ctx = Ctx {
        cli_out: cli.out,
        cli_formats: cli.formats,
        strict: cli.strict,
        seed: cli.seed,
    };
    match cli.command {
        Command::Validate { config } => {
            let loaded = ctx.load(&config)?;
            let cfg = &loaded.config;
            let s = cfg.scenario();
            let r0 = reproduction_numbers(&s.model, R0_REL_TOL);
            println!("config ok: {} initial state(s)", s.initial_states.len());
            if let Config::Sweep(sw) = cfg {
                let cells: usize = sw.axes.iter().map(|a| a.steps).product();
                println!("sweep over {} axis/axes, {cells} cells", sw.axes.len());
            }
            println!("R1 = {:.6}, R2 = {:.6}{}", r0.rho1, r0.rho2, if r0.equal { " (equal)" } else { "" });
            let probe = self_check(&s.model, ctx.seed, PROBE_POINTS);
            println!(
                "self-check (seed {}): jacobian error {:.2e} over {} points, max residual {:.2e} over {} fixed points",
                probe.seed, probe.max_jacobian_error, probe.points, probe.max_residual, probe.fixed_points
            );
            if !probe.passed() {
                return Err(Failure::Numerical(anyhow::anyhow!("self-check failed")));
            }
            Ok(())
        }
        Command::Run { config } => {
            let loaded = ctx.load(&config)?;
            let cfg = &loaded.config;
            let result = run_scenario(cfg.scenario());
            let dir = ctx.out_dir(cfg);
            for path in write_scenario(&result, cfg, &dir, &ctx.formats(cfg))? {
                println!("wrote {}", path.display());
            }
            report_runs(&result)
        }
        Command::Equilibria { config } => {
            let loaded = ctx.load(&config)?;
            let cfg = &loaded.config;
            let report = EquilibriaReport::new(&cfg.scenario().model);
            print!("{report}");
            let formats = ctx.formats(cfg);
            let dir = ctx.out_dir(cfg);
            std::fs::create_dir_all(&dir)?;
            if formats.contains(&Format::Csv) {
                write_text(&dir.join("equilibria.csv"), &report.to_csv())?;
            }
            if formats.contains(&Format::Json) {
                write_json(&dir.join("equilibria.json"), &report.to_json(&Meta::new(cfg)))?;
            }
            match report.failures() {
                0 => Ok(()),
                n => Err(Failure::Numerical(anyhow::anyhow!("{n} stability classifications failed"))),
            }
        }
        Command::Sweep { config } => {
            let loaded = ctx.load(&config)?;
            let Config::Sweep(sweep) = &loaded.config else {
                return Err(Failure::Config(anyhow::anyhow!(
                    "{} has no `sweep` axis",
                    config.display()
                )));
            };
            let result = run_sweep(sweep);
            let dir = ctx.out_dir(&loaded.config);
            std::fs::create_dir_all(&dir)?;
            write_text(&dir.join("sweep.csv"), &result.to_csv())?;
            if ctx.formats(&loaded.config).contains(&Format::Json) {
                write_json(&dir.join("sweep.json"), &result.to_json(&Meta::new(&loaded.config)))?;
            }
            let errors = result.cells.iter().filter(|c| c.error.is_some()).count();
            println!(
                "{} cells, {} with errors, {} closed-form disagreements",
                result.cells.len(),
                errors,
                result.disagreements()
            );
            Ok(())
        }
        Command::Phase { config } => {
            let loaded = ctx.load(&config)?;
            let cfg = &loaded.config;
            let result = run_scenario(cfg.scenario());
            let plot = phase_plot(&result);
            for w in &plot.warnings {
                eprintln!("warning: {w}");
            }
            let dir = ctx.out_dir(cfg);
            std::fs::create_dir_all(&dir)?;
            let formats = ctx.formats(cfg);
            write_text(&dir.join("phase.csv"), &plot.to_csv())?;
            if formats.contains(&Format::Svg) {
                write_text(&dir.join("phase.svg"), &plot.to_svg())?;
            }
            if formats.contains(&Format::Json) {
                let value = serde_json::json!({ "meta": Meta::new(cfg), "phase": plot });
                write_json(&dir.join("phase.json"), &value)?;
            }
            report_runs(&result)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Unmatched(n)) => {
            eprintln!(
                "{n} terminal state(s) farther than {} from every known equilibrium",
                harness::MATCH_TOL
            );
            ExitCode::from(3)
        }
    }
}
