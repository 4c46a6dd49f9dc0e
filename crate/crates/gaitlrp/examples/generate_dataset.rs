//! Generate a synthetic GRF cohort and write it in the CSV dataset format.
//!
//! ```bash
//! cargo run --example generate_dataset
//! ```

use gaitlrp::data::{save_dataset, synth_generate, SynthSpec};

fn main() -> gaitlrp::Result<()> {
    let spec = SynthSpec {
        subjects_per_class: 10,
        trials_per_subject: 5,
        samples_per_curve: 100,
        noise: 0.05,
    };
    let dataset = synth_generate(&spec, 42)?;
    let path = std::env::temp_dir().join("gaitlrp_cohort.csv");
    save_dataset(&dataset, &path)?;

    println!("wrote {}", path.display());
    println!("subjects: {}", dataset.subject_ids().count());
    println!("trials:   {}", dataset.len());
    for (trial, label) in dataset.trials().iter().zip(dataset.labels()).take(3) {
        println!(
            "  {} (age {}) -> {}",
            trial.subject_id, trial.age_years, label
        );
    }
    Ok(())
}
