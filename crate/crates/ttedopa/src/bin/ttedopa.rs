use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use ttedopa::config::RunConfig;
use ttedopa::error::{Error, Result};
use ttedopa::pipeline;

#[derive(Parser)]
#[command(name = "ttedopa", version, about = "Thermalized chain-mapped open-system dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute chain coefficients and write coeffs.csv
    Coeffs(Common),
    /// Integrate the dynamics, logging time series and snapshot checkpoints
    Evolve(Common),
    /// Measure snapshot correlators and spectra from checkpoints
    Measure(Common),
    /// Back-map snapshot spectra onto physical occupations
    Backmap(Common),
    /// Build analysis_report.json from an existing run directory
    Analyze(Common),
    /// Full pipeline: coeffs, evolve, measure, backmap, analyze, manifest
    Run(Common),
    /// Self-check suites: balance, moments, oracle, thermofield, all
    Validate {
        #[arg(default_value = "all")]
        suite: String,
    },
}

#[derive(Args)]
struct Common {
    /// Config file of flat `section.key = value` lines
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Apply the reduced desk profile on top of the config
    #[arg(long)]
    desk: bool,
    /// Run directory (default: config `output.dir`, else ./run)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Extra snapshot time, repeatable
    #[arg(long = "snapshot", value_name = "T")]
    snapshot: Vec<f64>,
}

impl Common {
    fn resolve(&self) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if self.desk {
            cfg.apply_desk();
        }
        if !self.snapshot.is_empty() {
            cfg.snapshots.extend(self.snapshot.iter().copied());
            cfg.snapshots.sort_by(|a, b| a.partial_cmp(b).expect("finite snapshot times"));
            cfg.snapshots.dedup();
        }
        cfg.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("run"));
        Ok((cfg, out))
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Coeffs(c) => {
            let (cfg, out) = c.resolve()?;
            let coeffs = pipeline::stage_coeffs(&cfg, &out).map_err(|e| e.with_stage("coeffs"))?;
            println!(
                "coeffs: {} modes, g0 = {:.6e}, wrote {}",
                coeffs.n_modes(),
                coeffs.g0,
                out.join("coeffs.csv").display()
            );
        }
        Command::Evolve(c) => {
            let (cfg, out) = c.resolve()?;
            let coeffs = pipeline::stage_coeffs(&cfg, &out).map_err(|e| e.with_stage("coeffs"))?;
            let summary =
                pipeline::stage_evolve(&cfg, &coeffs, &out).map_err(|e| e.with_stage("evolve"))?;
            println!(
                "evolve: {} steps to t = {}, max chi = {}, {} checkpoints in {}",
                (cfg.t_final / cfg.dt).round() as u64,
                cfg.t_final,
                summary.max_chi,
                summary.snapshots.len(),
                out.display()
            );
        }
        Command::Measure(c) => {
            let (cfg, out) = c.resolve()?;
            let coeffs = cfg
                .thermal_model()
                .and_then(|m| ttedopa::chainmap::compute_chain_coefficients(&m, cfg.n_modes, cfg.n_quad))
                .map_err(|e| e.with_stage("coeffs"))?;
            let mut snaps = pipeline::load_snapshots(&cfg, &out)?;
            let spectra = pipeline::stage_measure(&cfg, &coeffs, &mut snaps, &out)
                .map_err(|e| e.with_stage("measure"))?;
            println!("measure: {} snapshots onto {} star modes", spectra.len(), cfg.m_pad);
        }
        Command::Backmap(c) => {
            let (cfg, out) = c.resolve()?;
            let coeffs = cfg
                .thermal_model()
                .and_then(|m| ttedopa::chainmap::compute_chain_coefficients(&m, cfg.n_modes, cfg.n_quad))
                .map_err(|e| e.with_stage("coeffs"))?;
            let mut snaps = pipeline::load_snapshots(&cfg, &out)?;
            let spectra = pipeline::stage_measure(&cfg, &coeffs, &mut snaps, &out)
                .map_err(|e| e.with_stage("measure"))?;
            let physical = pipeline::stage_backmap(&cfg, &spectra, &out)
                .map_err(|e| e.with_stage("backmap"))?;
            println!("backmap: {} physical spectra written", physical.len());
        }
        Command::Analyze(c) => {
            let (cfg, out) = c.resolve()?;
            let coeffs = cfg
                .thermal_model()
                .and_then(|m| ttedopa::chainmap::compute_chain_coefficients(&m, cfg.n_modes, cfg.n_quad))
                .map_err(|e| e.with_stage("coeffs"))?;
            let mut snaps = pipeline::load_snapshots(&cfg, &out)?;
            let spectra = pipeline::stage_measure(&cfg, &coeffs, &mut snaps, &out)
                .map_err(|e| e.with_stage("measure"))?;
            let physical = pipeline::stage_backmap(&cfg, &spectra, &out)
                .map_err(|e| e.with_stage("backmap"))?;
            let spin = pipeline::read_spin_csv(&out.join("spin.csv"))
                .map_err(|e| e.with_stage("analyze"))?;
            let report =
                pipeline::stage_analyze(&cfg, &spin, &spectra, &physical, &coeffs, None, &out)
                    .map_err(|e| e.with_stage("analyze"))?;
            println!(
                "analyze: report at {} (thermal cycle {})",
                out.join("analysis_report.json").display(),
                match &report.thermal_cycle {
                    Some(tc) if !tc.flagged => "resolved",
                    Some(_) => "flagged",
                    None => "skipped",
                }
            );
        }
        Command::Run(c) => {
            let (cfg, out) = c.resolve()?;
            let manifest = pipeline::run_pipeline(&cfg, &out)?;
            println!(
                "run: {} in {:.1}s, max chi = {}, top Fock population {:.2e}, manifest at {}",
                manifest.status,
                manifest.wall_clock_seconds,
                manifest.max_chi,
                manifest.top_fock_max,
                out.join("manifest.json").display()
            );
        }
        Command::Validate { suite } => {
            let lines = pipeline::run_validation(&suite)?;
            let mut failed = false;
            for l in &lines {
                println!("{} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail);
                failed |= !l.passed;
            }
            if failed {
                return Err(Error::validation(format!("suite `{suite}` has failures")));
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
