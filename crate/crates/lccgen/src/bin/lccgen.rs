//! Command-line front end over the pipeline stages. Exit codes: 0 on
//! success, 2 for configuration problems, 3 for a failing stage.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lccgen::config::ExperimentConfig;
use lccgen::error::LccError;
use lccgen::pipeline::{
    run_pipeline, stage_eval, stage_gap, stage_learn_lcc, stage_sample, stage_train_ae,
    stage_train_gan, SAMPLES_CSV_FILE,
};

#[derive(Parser)]
#[command(name = "lccgen", about = "Generative modeling on learned latent manifolds")]
struct Cli {
    /// Experiment configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs all stages in order: train-ae, learn-lcc, train-gan, eval.
    Run,
    /// Trains the autoencoder and writes its checkpoint.
    TrainAe,
    /// Learns the anchor dictionary on the embedded train split.
    LearnLcc,
    /// Trains the adversarial pair on codings drawn around the anchors.
    TrainGan,
    /// Draws generator samples into a CSV (and a PGM sheet for image data).
    Sample {
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Computes the evaluation metrics for the trained model.
    Eval,
    /// Measures the train/heldout distance gap against its bound.
    Gap,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, LccError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn threads_from_env() -> Result<usize, LccError> {
    match std::env::var("LCCGEN_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&t| t >= 1)
            .ok_or_else(|| LccError::Config(format!("LCCGEN_THREADS must be a positive integer, got {v}"))),
    }
}

fn run(cli: &Cli) -> Result<(), LccError> {
    // all stages are deterministic single-pass computations; the requested
    // thread count is validated but never changes results
    let _threads = threads_from_env()?;
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Run => {
            run_pipeline(&cfg)?;
            println!("pipeline finished; artifacts in {}", cfg.out.display());
        }
        Command::TrainAe => {
            stage_train_ae(&cfg)?;
            println!("autoencoder trained; checkpoint in {}", cfg.out.display());
        }
        Command::LearnLcc => {
            stage_learn_lcc(&cfg)?;
            println!("dictionary learned; checkpoint in {}", cfg.out.display());
        }
        Command::TrainGan => {
            stage_train_gan(&cfg)?;
            println!("adversarial pair trained; checkpoint in {}", cfg.out.display());
        }
        Command::Sample { n } => {
            let samples = stage_sample(&cfg, n)?;
            println!(
                "{} samples written to {}",
                samples.rows(),
                cfg.out.join(SAMPLES_CSV_FILE).display()
            );
        }
        Command::Eval => {
            let m = stage_eval(&cfg)?;
            println!("reconstruction mse (train): {}", m.reconstruction_mse_train);
            println!("reconstruction mse (heldout): {}", m.reconstruction_mse_heldout);
            println!("nn distance generated vs train: {}", m.nn_distance_generated_vs_train);
            if let Some(c) = &m.coverage {
                println!("mode coverage: {}/{}", c.covered, c.total_modes);
            }
            if let Some(d) = m.diversity_msssim {
                println!("mean pairwise ms-ssim: {d}");
            }
        }
        Command::Gap => {
            let r = stage_gap(&cfg)?;
            println!("train distance: {}", r.train_distance);
            println!("heldout distance: {}", r.heldout_distance);
            println!("gap: {}", r.gap);
            println!("bound: {}", r.bound_value);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ LccError::Config(_)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("stage failed: {e}");
            ExitCode::from(3)
        }
    }
}
