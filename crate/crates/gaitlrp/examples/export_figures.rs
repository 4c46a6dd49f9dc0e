//! Run a small cross-validation and export the full report: metrics,
//! relevance CSV, and the per-class SVG panels with relevance-colored bands.
//!
//! ```bash
//! cargo run --release --example export_figures
//! ```

use gaitlrp::data::{synth_generate, SynthSpec};
use gaitlrp::eval::{export_report, run_cross_validation, PipelineConfig};
use gaitlrp::lrp::LrpConfig;
use gaitlrp::nn::TrainConfig;

fn main() -> gaitlrp::Result<()> {
    let spec = SynthSpec {
        subjects_per_class: 8,
        trials_per_subject: 3,
        samples_per_curve: 100,
        noise: 0.05,
    };
    let dataset = synth_generate(&spec, 11)?;

    let train_cfg = TrainConfig { epochs: 60, ..TrainConfig::default() };
    let result = run_cross_validation(
        &dataset,
        4,
        &train_cfg,
        &LrpConfig::default(),
        &PipelineConfig::default(),
        2,
    )?;

    let out = std::env::temp_dir().join("gaitlrp_figures");
    export_report(&result, &out)?;

    println!("report written to {}", out.display());
    for entry in std::fs::read_dir(&out)? {
        println!("  {}", entry?.file_name().to_string_lossy());
    }
    Ok(())
}
