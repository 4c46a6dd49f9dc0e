//! Synthetic GRF cohort generator. Produces stance-phase curves with the
//! canonical shapes (M-shaped vertical force, S-shaped anterior-posterior
//! force, low-amplitude medio-lateral oscillation) and plants an age effect:
//! older subjects show a reduced second vertical peak and reduced late-stance
//! AP amplitude. Middle-aged parameters sit halfway between young and older
//! with widened within-class variance.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{AgeGroup, Dataset, GrfTrial};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub subjects_per_class: usize,
    pub trials_per_subject: usize,
    pub samples_per_curve: usize,
    pub noise: f64,
}

/// Class-level curve parameters. The planted discriminative signal lives in
/// `v_peak2` (second vertical peak) and `ap_late` (late-stance AP amplitude).
#[derive(Debug, Clone, Copy)]
struct ClassParams {
    v_peak1: f64,
    v_peak2: f64,
    ap_early: f64,
    ap_late: f64,
    ml_amp: f64,
    /// Standard deviation of per-subject offsets on the amplitudes above.
    subject_sd: f64,
}

fn class_params(group: AgeGroup) -> ClassParams {
    let young = ClassParams {
        v_peak1: 1.10,
        v_peak2: 1.20,
        ap_early: 0.22,
        ap_late: 0.26,
        ml_amp: 0.06,
        subject_sd: 0.03,
    };
    let older = ClassParams {
        v_peak1: 1.00,
        v_peak2: 0.72,
        ap_early: 0.18,
        ap_late: 0.10,
        ml_amp: 0.06,
        subject_sd: 0.03,
    };
    match group {
        AgeGroup::Young => young,
        AgeGroup::Older => older,
        AgeGroup::MiddleAged => ClassParams {
            v_peak1: 0.5 * (young.v_peak1 + older.v_peak1),
            v_peak2: 0.5 * (young.v_peak2 + older.v_peak2),
            ap_early: 0.5 * (young.ap_early + older.ap_early),
            ap_late: 0.5 * (young.ap_late + older.ap_late),
            ml_amp: 0.06,
            subject_sd: 1.5 * young.subject_sd,
        },
    }
}

fn gaussian_bump(t: f64, center: f64, width: f64) -> f64 {
    let d = (t - center) / width;
    (-0.5 * d * d).exp()
}

/// Standard normal via Box-Muller, driven by the shared stream.
fn randn(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

struct SubjectParams {
    v_peak1: f64,
    v_peak2: f64,
    ap_early: f64,
    ap_late: f64,
    ml_amp: f64,
}

fn curves_for_trial(
    p: &SubjectParams,
    samples: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> [Vec<f64>; 3] {
    let mut ap = Vec::with_capacity(samples);
    let mut ml = Vec::with_capacity(samples);
    let mut v = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = i as f64 / (samples - 1) as f64;
        // M-shape: bumps near 25% and 75% of stance
        let v_val = p.v_peak1 * gaussian_bump(t, 0.25, 0.11) + p.v_peak2 * gaussian_bump(t, 0.75, 0.11);
        // negative (braking) then positive (propulsive) S-curve
        let ap_amp = if t < 0.5 { p.ap_early } else { p.ap_late };
        let ap_val = -ap_amp * (std::f64::consts::TAU * t).sin();
        let ml_val = p.ml_amp * (3.0 * std::f64::consts::TAU * t).sin();
        ap.push(ap_val + noise * randn(rng));
        ml.push(ml_val + noise * randn(rng));
        v.push(v_val + noise * randn(rng));
    }
    [ap, ml, v]
}

/// Deterministic in `(spec, seed)`: the same pair always yields a
/// bit-identical dataset.
pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<Dataset> {
    if spec.subjects_per_class == 0 || spec.trials_per_subject == 0 {
        return Err(Error::InvalidConfig(
            "subjects_per_class and trials_per_subject must be >= 1".to_string(),
        ));
    }
    if spec.samples_per_curve < 2 {
        return Err(Error::InvalidConfig(
            "samples_per_curve must be >= 2".to_string(),
        ));
    }
    if !(spec.noise >= 0.0) {
        return Err(Error::InvalidConfig("noise must be >= 0".to_string()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::new();
    for group in AgeGroup::ALL {
        let cp = class_params(group);
        let (age_lo, age_hi) = group.age_range();
        for s in 0..spec.subjects_per_class {
            let subject_id = format!("{}{:03}", group.name(), s);
            let age = rng.gen_range(age_lo..=age_hi);
            let sp = SubjectParams {
                v_peak1: cp.v_peak1 + cp.subject_sd * randn(&mut rng),
                v_peak2: cp.v_peak2 + cp.subject_sd * randn(&mut rng),
                ap_early: cp.ap_early + 0.5 * cp.subject_sd * randn(&mut rng),
                ap_late: cp.ap_late + 0.5 * cp.subject_sd * randn(&mut rng),
                ml_amp: cp.ml_amp + 0.2 * cp.subject_sd * randn(&mut rng),
            };
            for _ in 0..spec.trials_per_subject {
                let left = curves_for_trial(&sp, spec.samples_per_curve, spec.noise, &mut rng);
                let right = curves_for_trial(&sp, spec.samples_per_curve, spec.noise, &mut rng);
                trials.push(GrfTrial {
                    subject_id: subject_id.clone(),
                    age_years: age,
                    curves: [left, right],
                });
            }
        }
    }
    Dataset::new(trials)
}
