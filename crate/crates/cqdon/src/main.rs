use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cqdon::config::{preset_names, ExperimentConfig, PRESETS};
use cqdon::io::{self, CalibrationFile, Checkpoint, CALIBRATION_FILE, CHECKPOINT_FILE, DATASET_FILE, RESOURCES_FILE};
use cqdon::pipeline::{self, Inference};
use cqdon::{HarnessError, Result};
use cqdon_core::data::Split;

#[derive(Parser)]
#[command(name = "cqdon", version, about = "Conformalized quantum-orthogonal DeepONet ensembles")]
struct Cli {
    /// Directory for every artifact; defaults to the config's `output_dir`, then `runs/<name>`.
    #[arg(long, global = true, env = "CQDON_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// Worker threads for member training and sweep cells (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Experiment TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled experiment preset.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct NoisyCell {
    /// Depolarizing strength of the noisy cell (two-qubit gates get the configured fraction).
    #[arg(long, requires = "shots")]
    lambda: Option<f64>,
    /// Shots per circuit for the noisy cell; `inf` or 0 for the infinite-shot limit.
    #[arg(long, requires = "lambda", value_parser = parse_shots)]
    shots: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// List the bundled presets, or print one as TOML.
    Presets { name: Option<String> },
    /// Generate the dataset.
    GenData {
        #[command(flatten)]
        source: Source,
    },
    /// Train the ensemble and write the checkpoint and loss traces.
    Train {
        #[command(flatten)]
        source: Source,
    },
    /// Fit the conformal threshold on the calibration split.
    Calibrate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        cell: NoisyCell,
    },
    /// Score the test split with the stored calibration.
    Evaluate {
        #[command(flatten)]
        source: Source,
        /// Run every layer through the full-register circuit simulator instead of the classical fast path.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        cell: NoisyCell,
    },
    /// Metrics over the configured noise x shots grid.
    NoiseSweep {
        #[command(flatten)]
        source: Source,
    },
    /// Hybrid configurations and superposed execution side by side, plus circuit resources.
    Compare {
        #[command(flatten)]
        source: Source,
    },
}

fn parse_shots(s: &str) -> std::result::Result<u64, String> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(0);
    }
    s.parse().map_err(|_| format!("`{s}` is neither a shot count nor `inf`"))
}

fn load_config(source: &Source) -> Result<ExperimentConfig> {
    match (&source.config, &source.preset) {
        (Some(path), _) => ExperimentConfig::load(path),
        (None, Some(name)) => ExperimentConfig::preset(name),
        (None, None) => Err(HarnessError::Config("pass --config or --preset".into())),
    }
}

fn output_dir(cli: &Option<PathBuf>, cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cli.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| Path::new("runs").join(&cfg.name));
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::Io { path: dir.clone(), source: e })?;
    Ok(dir)
}

fn require(path: PathBuf, producer: &'static str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(HarnessError::Missing { path, producer })
    }
}

fn noisy_inference(cfg: &ExperimentConfig, cell: &NoisyCell) -> Result<Option<Inference>> {
    match (cell.lambda, cell.shots) {
        (Some(l), Some(s)) => Ok(Some(Inference::Noisy { exec: cfg.noise.execution(l, s)?, mode: cfg.ensemble.mode })),
        _ => Ok(None),
    }
}

fn cell_label(cell: &NoisyCell) -> String {
    match (cell.lambda, cell.shots) {
        (Some(l), Some(0)) => format!("lambda={l},shots=inf"),
        (Some(l), Some(s)) => format!("lambda={l},shots={s}"),
        _ => "exact".into(),
    }
}

fn print_rows(rows: &[io::MetricsRow]) {
    println!("mode,lambda,shots,replicate,rel_l2_percent,coverage_percent,avg_width,peak_uncertainty,retained_fraction,wall_time");
    for r in rows {
        let shots = r.shots.map_or("inf".to_string(), |s| s.to_string());
        println!(
            "{},{},{},{},{:.4},{:.2},{:.6},{:.6},{:.4},{:.2}",
            r.mode, r.lambda, shots, r.replicate, r.rel_l2_percent, r.coverage_percent, r.avg_width, r.peak_uncertainty, r.retained_fraction, r.wall_time
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::Config(format!("--threads: {e}")))?;
    }
    let source = match &cli.command {
        Command::Presets { name: None } => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
            return Ok(());
        }
        Command::Presets { name: Some(name) } => {
            let (_, text) = PRESETS
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| HarnessError::Config(format!("unknown preset `{name}`; known: {}", preset_names())))?;
            print!("{text}");
            return Ok(());
        }
        Command::GenData { source }
        | Command::Train { source }
        | Command::Calibrate { source, .. }
        | Command::Evaluate { source, .. }
        | Command::NoiseSweep { source }
        | Command::Compare { source } => source,
    };
    let cfg = load_config(source)?;
    let dir = output_dir(&cli.output_dir, &cfg)?;
    let dataset_path = dir.join(DATASET_FILE);

    if let Command::GenData { .. } = cli.command {
        let ds = pipeline::generate(&cfg)?;
        let meta = io::save_dataset(&ds, pipeline::data_seed(&cfg), Some(&cfg.task), &dataset_path)?;
        eprintln!(
            "{}: {} scenarios ({} train / {} cal / {} test), {} points -> {}",
            meta.task,
            meta.scenarios,
            meta.splits.train,
            meta.splits.cal,
            meta.splits.test,
            meta.points,
            dataset_path.display()
        );
        return Ok(());
    }

    let (ds, _) = io::load_dataset(&require(dataset_path, "cqdon gen-data")?)?;
    if let Command::Train { .. } = cli.command {
        let (ckpt, traces) = pipeline::train_ensemble(&cfg, &ds)?;
        for (m, t) in traces.iter().enumerate() {
            io::write_trace(&dir.join(io::trace_file(m)), t)?;
            if let Some(last) = t.last() {
                eprintln!("member {m}: final loss {:.4e}", last.loss);
            }
        }
        ckpt.save(&dir.join(CHECKPOINT_FILE))?;
        return Ok(());
    }

    let ckpt = Checkpoint::load(&require(dir.join(CHECKPOINT_FILE), "cqdon train")?)?;
    let ens = &ckpt.ensemble;
    match &cli.command {
        Command::Calibrate { cell, .. } => {
            let cal = pipeline::split_batch(&ds, Split::Cal, None);
            let inference = noisy_inference(&cfg, cell)?.unwrap_or(Inference::Exact);
            let seed = pipeline::noise_seed(&cfg, usize::MAX, 0, 0);
            let (pred, _) = pipeline::predict(ens, &cal, &inference, seed)?;
            let c = pipeline::calibrate(&cfg, &cal, &pred)?;
            CalibrationFile::new(&cfg.name, &cell_label(cell), &c).save(&dir.join(CALIBRATION_FILE))?;
            eprintln!("q_hat = {} from {} calibration points", c.q_hat, c.n_cal);
        }
        Command::Evaluate { oracle, cell, .. } => {
            let c = CalibrationFile::load(&require(dir.join(CALIBRATION_FILE), "cqdon calibrate")?)?.calibration();
            let mut rows = vec![pipeline::evaluate_exact(&cfg, ens, &ds, &c, *oracle)?];
            if let Some(inference) = noisy_inference(&cfg, cell)? {
                let cal = pipeline::split_batch(&ds, Split::Cal, None);
                let test = pipeline::split_batch(&ds, Split::Test, None);
                rows.push(pipeline::evaluate_cell(&cfg, ens, &cal, &test, &inference, Some(&c), usize::MAX, 0)?);
            }
            io::append_metrics(&dir, &rows)?;
            print_rows(&rows);
        }
        Command::NoiseSweep { .. } => {
            let rows = pipeline::noise_sweep(&cfg, ens, &ds, cfg.ensemble.mode)?;
            io::append_metrics(&dir, &rows)?;
            print_rows(&rows);
        }
        Command::Compare { .. } => {
            let res = pipeline::resources(ens)?;
            io::save_json(&dir.join(RESOURCES_FILE), &res)?;
            for r in &res {
                eprintln!(
                    "{} layer {}: standard {} qubits, depth {}; superposed x{} {} qubits, depth {} (sequential {})",
                    r.network, r.layer, r.standard.qubits, r.standard.tally.depth, r.spqc.members, r.spqc.qubits, r.spqc.tally.depth, r.sequential_depth
                );
            }
            let rows = pipeline::compare(&cfg, ens, &ds)?;
            io::append_metrics(&dir, &rows)?;
            print_rows(&rows);
        }
        Command::Presets { .. } | Command::GenData { .. } | Command::Train { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(1),
    }
}
