//! Train the default 1D CNN on a synthetic cohort and save a checkpoint.
//!
//! ```bash
//! cargo run --release --example train_classifier
//! ```

use gaitlrp::data::{fit_norm_params, synth_generate, trial_input_tensor, ChannelLayout, SynthSpec};
use gaitlrp::nn::{save_network, train, Network, TrainConfig};

fn main() -> gaitlrp::Result<()> {
    let spec = SynthSpec {
        subjects_per_class: 10,
        trials_per_subject: 3,
        samples_per_curve: 100,
        noise: 0.05,
    };
    let dataset = synth_generate(&spec, 7)?;

    let subjects: Vec<String> = dataset.subject_ids().map(String::from).collect();
    let params = fit_norm_params(&dataset, &subjects, ChannelLayout::SixChannel)?;
    let inputs: Vec<_> = dataset
        .trials()
        .iter()
        .map(|t| trial_input_tensor(t, &params, false))
        .collect();
    let labels: Vec<usize> = dataset.labels().iter().map(|l| l.index()).collect();

    let mut network = Network::default_architecture(6, 100, 0);
    let history = train(&mut network, &inputs, &labels, &TrainConfig::default())?;
    println!("loss: {:.4} -> {:.4}", history[0], history.last().unwrap());

    let correct = inputs
        .iter()
        .zip(&labels)
        .filter(|(x, &y)| network.predict(x).unwrap().0 == y)
        .count();
    println!("training accuracy: {:.1}%", 100.0 * correct as f64 / labels.len() as f64);

    let path = std::env::temp_dir().join("gaitlrp_model.json");
    save_network(&network, &path)?;
    println!("checkpoint: {}", path.display());
    Ok(())
}
