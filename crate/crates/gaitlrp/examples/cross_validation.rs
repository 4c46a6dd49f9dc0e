//! Subject-stratified 10-fold cross-validation against a zero-rule baseline
//! on a small synthetic cohort.
//!
//! ```bash
//! cargo run --release --example cross_validation
//! ```

use gaitlrp::data::{synth_generate, SynthSpec};
use gaitlrp::eval::{render_metrics, run_cross_validation, PipelineConfig};
use gaitlrp::lrp::LrpConfig;
use gaitlrp::nn::TrainConfig;

fn main() -> gaitlrp::Result<()> {
    let spec = SynthSpec {
        subjects_per_class: 10,
        trials_per_subject: 3,
        samples_per_curve: 100,
        noise: 0.05,
    };
    let dataset = synth_generate(&spec, 7)?;

    let result = run_cross_validation(
        &dataset,
        10,
        &TrainConfig::default(),
        &LrpConfig::default(),
        &PipelineConfig::default(),
        1,
    )?;

    print!("{}", render_metrics(&result));
    println!(
        "improvement over zero-rule: {:+.3}",
        result.accuracy_mean - result.zero_rule
    );
    Ok(())
}
