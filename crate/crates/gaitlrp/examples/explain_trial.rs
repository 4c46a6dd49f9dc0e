//! Explain one trial with layer-wise relevance propagation and print the
//! conservation report.
//!
//! ```bash
//! cargo run --release --example explain_trial
//! ```

use gaitlrp::data::{fit_norm_params, synth_generate, trial_input_tensor, ChannelLayout, SynthSpec};
use gaitlrp::lrp::{conservation_report, lrp_explain, LrpConfig};
use gaitlrp::nn::{train, Network, TrainConfig};

fn main() -> gaitlrp::Result<()> {
    let spec = SynthSpec {
        subjects_per_class: 6,
        trials_per_subject: 3,
        samples_per_curve: 100,
        noise: 0.05,
    };
    let dataset = synth_generate(&spec, 3)?;
    let subjects: Vec<String> = dataset.subject_ids().map(String::from).collect();
    let params = fit_norm_params(&dataset, &subjects, ChannelLayout::SixChannel)?;
    let inputs: Vec<_> = dataset
        .trials()
        .iter()
        .map(|t| trial_input_tensor(t, &params, false))
        .collect();
    let labels: Vec<usize> = dataset.labels().iter().map(|l| l.index()).collect();

    let mut network = Network::default_architecture(6, 100, 1);
    let config = TrainConfig { epochs: 60, ..TrainConfig::default() };
    train(&mut network, &inputs, &labels, &config)?;

    // explain the first trial at its ground-truth class
    let trace = network.forward(&inputs[0])?;
    let map = lrp_explain(&network, &trace, labels[0], &LrpConfig::default())?;
    let report = conservation_report(&map);

    println!("explained logit: {:.6}", report.explained_logit);
    for (i, sum) in report.layer_sums.iter().enumerate() {
        println!("relevance sum at layer {i} input: {sum:.6}");
    }
    println!("absorbed by biases/epsilon: {:.6}", report.total_absorbed);
    println!("accounting relative error:  {:.3e}", report.relative_error());

    // strongest input positions, mapped back to (channel, time)
    let rel = map.input_relevance().data();
    let t = dataset.samples_per_curve();
    let mut ranked: Vec<(usize, f64)> = rel.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap());
    println!("top relevance positions:");
    for (idx, value) in ranked.into_iter().take(5) {
        println!("  channel {}, t={}: {:+.5}", idx / t, idx % t, value);
    }
    Ok(())
}
