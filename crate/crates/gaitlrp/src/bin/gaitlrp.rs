//! Command-line front end: synthesize cohorts, run cross-validation, train a
//! single model, explain one trial, and regenerate figures.
//!
//! Exit codes: 0 success, 1 internal error, 2 input error, 3 training
//! divergence.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gaitlrp::config::RunConfig;
use gaitlrp::data::{
    fit_norm_params, load_dataset, save_dataset, synth_generate, trial_input_tensor, SynthSpec,
    NUM_CLASSES,
};
use gaitlrp::error::{Error, Result};
use gaitlrp::eval::{
    export_figures, export_report, parse_relevance_csv, render_metrics, run_cross_validation,
};
use gaitlrp::lrp::{conservation_report, lrp_explain};
use gaitlrp::nn::{load_network, save_network, train, Network};

#[derive(Parser)]
#[command(name = "gaitlrp", version, about = "Explainable GRF age-group classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON run configuration; omitted keys use defaults, flags override.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => RunConfig::load(path),
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic GRF cohort and write it as a CSV dataset.
    Synth {
        /// Subjects per age group.
        #[arg(long = "per-class")]
        per_class: usize,
        /// Trials per subject.
        #[arg(long)]
        trials: usize,
        /// Samples per stance-phase curve.
        #[arg(long, default_value_t = 100)]
        t: usize,
        /// Additive Gaussian noise level.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Subject-stratified k-fold cross-validation with LRP explanations.
    Crossval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        config: ConfigArg,
        /// Report directory (metrics, relevance CSV, SVG figures).
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one network on a full dataset and save a checkpoint.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        config: ConfigArg,
        /// Checkpoint file (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Explain a single trial with LRP and print the conservation report.
    Explain {
        #[arg(long)]
        data: PathBuf,
        /// Checkpoint produced by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Trial index into the dataset.
        #[arg(long)]
        trial: usize,
        /// Class index to explain (default: the trial's ground-truth label).
        #[arg(long = "class")]
        class: Option<usize>,
        #[command(flatten)]
        config: ConfigArg,
        /// Relevance CSV for this trial.
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate SVG figures from a relevance export file.
    Plot {
        /// `relevance.csv` produced by `crossval` or `explain`.
        #[arg(long)]
        relevance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth {
            per_class,
            trials,
            t,
            noise,
            seed,
            out,
        } => {
            let spec = SynthSpec {
                subjects_per_class: per_class,
                trials_per_subject: trials,
                samples_per_curve: t,
                noise,
            };
            let dataset = synth_generate(&spec, seed)?;
            save_dataset(&dataset, &out)?;
            println!("subjects={}", dataset.subject_ids().count());
            println!("trials={}", dataset.len());
            println!("samples_per_curve={}", dataset.samples_per_curve());
            Ok(())
        }
        Command::Crossval {
            data,
            k,
            seed,
            config,
            out,
        } => {
            if k < 2 {
                return Err(Error::InvalidConfig("k must be >= 2".into()));
            }
            let cfg = config.load()?;
            let dataset = load_dataset(&data, cfg.t)?;
            let result = run_cross_validation(
                &dataset,
                k,
                &cfg.train_config(seed)?,
                &cfg.lrp_config()?,
                &cfg.pipeline_config(),
                seed,
            )?;
            export_report(&result, &out)?;
            print!("{}", render_metrics(&result));
            Ok(())
        }
        Command::Train {
            data,
            seed,
            config,
            out,
        } => {
            let cfg = config.load()?;
            let dataset = load_dataset(&data, cfg.t)?;
            let pipeline = cfg.pipeline_config();
            let subjects: Vec<String> = dataset.subject_ids().map(String::from).collect();
            let params = fit_norm_params(&dataset, &subjects, pipeline.layout)?;
            let xs: Vec<_> = dataset
                .trials()
                .iter()
                .map(|tr| trial_input_tensor(tr, &params, pipeline.flat_input))
                .collect();
            let ys: Vec<usize> = dataset.labels().iter().map(|l| l.index()).collect();
            let mut network = Network::default_architecture(
                pipeline.input_channels(cfg.t),
                pipeline.input_len(cfg.t),
                seed,
            );
            let history = train(&mut network, &xs, &ys, &cfg.train_config(seed)?)?;
            save_network(&network, &out)?;
            println!("epochs={}", history.len());
            println!("final_loss={}", history.last().unwrap());
            Ok(())
        }
        Command::Explain {
            data,
            model,
            trial,
            class,
            config,
            out,
        } => {
            let cfg = config.load()?;
            if let Some(c) = class {
                if c >= NUM_CLASSES {
                    return Err(Error::InvalidConfig(format!(
                        "class {c} out of range (0..{NUM_CLASSES})"
                    )));
                }
            }
            let dataset = load_dataset(&data, cfg.t)?;
            if trial >= dataset.len() {
                return Err(Error::InvalidConfig(format!(
                    "trial {trial} out of range ({} trials)",
                    dataset.len()
                )));
            }
            let network = load_network(&model)?;
            let pipeline = cfg.pipeline_config();
            let subjects: Vec<String> = dataset.subject_ids().map(String::from).collect();
            let params = fit_norm_params(&dataset, &subjects, pipeline.layout)?;
            let input = trial_input_tensor(&dataset.trials()[trial], &params, pipeline.flat_input);
            let truth = dataset.labels()[trial];
            let target = class.unwrap_or_else(|| truth.index());
            let trace = network.forward(&input)?;
            let map = lrp_explain(&network, &trace, target, &cfg.lrp_config()?)?;

            let report = conservation_report(&map);
            for (i, sum) in report.layer_sums.iter().enumerate() {
                println!("layer_{i}_relevance_sum={sum}");
            }
            println!("explained_logit={}", report.explained_logit);
            println!("total_absorbed={}", report.total_absorbed);
            println!("conservation_relative_error={}", report.relative_error());

            fs::write(&out, single_trial_csv(&cfg, &input, &map, truth.name()))?;
            Ok(())
        }
        Command::Plot { relevance, out } => {
            let text = fs::read_to_string(&relevance)?;
            let export = parse_relevance_csv(&text)?;
            export_figures(&export, &out)?;
            Ok(())
        }
    }
}

/// Single-trial relevance export: one row per (channel, t), same columns as
/// the aggregate export, sd fixed at 0.
fn single_trial_csv(
    cfg: &RunConfig,
    input: &gaitlrp::Tensor,
    map: &gaitlrp::lrp::RelevanceMap,
    class_name: &str,
) -> String {
    use std::fmt::Write as _;
    let layout = cfg.pipeline_config().layout;
    let channels = layout.channels();
    let t = input.len() / channels.len();
    let mut out = String::from("class,side,component,t,mean_signal,sd_signal,mean_relevance\n");
    let rel = map.input_relevance().data();
    let sig = input.data();
    for (ch, (side, comp)) in channels.iter().enumerate() {
        let side = side.map(|s| s.code()).unwrap_or("-");
        for i in 0..t {
            let _ = writeln!(
                out,
                "{},{},{},{},{},0,{}",
                class_name,
                side,
                comp.code(),
                i,
                sig[ch * t + i],
                rel[ch * t + i]
            );
        }
    }
    out
}
