//! Cross-validation harness, accuracy metrics, confusion matrix, and report
//! export.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{
    fit_norm_params, stratified_subject_kfold, trial_input_tensor, AgeGroup, ChannelLayout,
    Dataset, NUM_CLASSES,
};
use crate::error::{Error, Result};
use crate::lrp::{
    aggregate_class_relevance, lrp_explain, total_relevance, ClassProfiles, ExplainTarget,
    LrpConfig, RelevanceMap,
};
use crate::nn::{train, Network, TrainConfig};
use crate::plot;
use crate::tensor::Tensor;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum()
    }
}

/// trace / total of the confusion matrix.
pub fn accuracy(matrix: &ConfusionMatrix) -> Result<f64> {
    let total = matrix.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(matrix.diagonal() as f64 / total as f64)
}

/// Majority-class share: accuracy of the constant classifier.
pub fn zero_rule(dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut counts = [0u64; NUM_CLASSES];
    for label in dataset.labels() {
        counts[label.index()] += 1;
    }
    let max = *counts.iter().max().unwrap();
    Ok(max as f64 / dataset.len() as f64)
}

/// Dataset/model choices that shape the network input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub layout: ChannelLayout,
    /// Feed the literal `[1, C*T]` concatenated vector instead of `[C, T]`.
    pub flat_input: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            layout: ChannelLayout::SixChannel,
            flat_input: false,
        }
    }
}

impl PipelineConfig {
    pub fn input_channels(&self, _t: usize) -> usize {
        if self.flat_input {
            1
        } else {
            self.layout.num_channels()
        }
    }

    pub fn input_len(&self, t: usize) -> usize {
        if self.flat_input {
            self.layout.num_channels() * t
        } else {
            t
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub fold_accuracies: Vec<f64>,
    pub accuracy_mean: f64,
    /// Population SD over folds (divisor k).
    pub accuracy_sd: f64,
    pub confusion: ConfusionMatrix,
    pub profiles: ClassProfiles,
    pub total_relevance: Vec<Vec<f64>>,
    pub zero_rule: f64,
    /// Majority vote over each subject's trials; reported, not acceptance.
    pub subject_vote_accuracy: f64,
    pub layout: ChannelLayout,
    pub samples_per_curve: usize,
}

/// Subject-stratified k-fold cross-validation. Per fold: fit normalization on
/// the other folds, train a fresh network (seed `seed ^ fold`), evaluate the
/// held-out trials, and explain each at its ground-truth class. Every trial is
/// explained exactly once across the whole run.
pub fn run_cross_validation(
    dataset: &Dataset,
    k: usize,
    train_cfg: &TrainConfig,
    lrp_cfg: &LrpConfig,
    pipeline: &PipelineConfig,
    seed: u64,
) -> Result<CvResult> {
    train_cfg.validate()?;
    lrp_cfg.validate()?;
    let split = stratified_subject_kfold(dataset, k, seed)?;
    let t = dataset.samples_per_curve();
    let channels = pipeline.layout.num_channels();

    let mut confusion = ConfusionMatrix::default();
    let mut fold_accuracies = Vec::with_capacity(k);
    // (relevance, class, normalized input) per explained trial
    let mut explained: Vec<(RelevanceMap, AgeGroup, Tensor)> = Vec::with_capacity(dataset.len());
    // subject -> per-class vote counts, for the subject-majority metric
    let mut votes: BTreeMap<String, [u64; NUM_CLASSES]> = BTreeMap::new();

    // Folds are independent; run them on up to GAITLRP_THREADS workers and
    // assemble strictly in fold order so parallelism never changes output.
    let outcomes = run_folds(dataset, &split, train_cfg, lrp_cfg, pipeline, seed);

    for (fold, outcome) in outcomes.into_iter().enumerate() {
        let fold_result = outcome.map_err(|e| Error::Fold {
            fold,
            source: Box::new(e),
        })?;

        let mut fold_conf = ConfusionMatrix::default();
        for (sid, truth, predicted, map, input) in fold_result {
            fold_conf.record(truth.index(), predicted);
            confusion.record(truth.index(), predicted);
            votes.entry(sid).or_insert([0; NUM_CLASSES])[predicted] += 1;
            explained.push((map, truth, input));
        }
        fold_accuracies.push(accuracy(&fold_conf)?);
    }

    let mean = fold_accuracies.iter().sum::<f64>() / k as f64;
    let var = fold_accuracies
        .iter()
        .map(|a| (a - mean) * (a - mean))
        .sum::<f64>()
        / k as f64;

    let items: Vec<(&RelevanceMap, AgeGroup, &Tensor)> =
        explained.iter().map(|(m, c, x)| (m, *c, x)).collect();
    let profiles = aggregate_class_relevance(&items, channels)?;
    let total = total_relevance(&profiles)?;

    let mut subject_correct = 0usize;
    let mut subject_total = 0usize;
    for (sid, counts) in &votes {
        let truth = dataset.subject_label(sid).expect("indexed subject");
        let vote = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap();
        subject_total += 1;
        if vote == truth.index() {
            subject_correct += 1;
        }
    }

    Ok(CvResult {
        fold_accuracies,
        accuracy_mean: mean,
        accuracy_sd: var.sqrt(),
        confusion,
        profiles,
        total_relevance: total,
        zero_rule: zero_rule(dataset)?,
        subject_vote_accuracy: subject_correct as f64 / subject_total as f64,
        layout: pipeline.layout,
        samples_per_curve: t,
    })
}

type FoldOutcome = Vec<(String, AgeGroup, usize, RelevanceMap, Tensor)>;

/// Worker threads capped by the `GAITLRP_THREADS` env var (default: available
/// cores). Outcomes are returned indexed by fold.
fn run_folds(
    dataset: &Dataset,
    split: &crate::data::FoldSplit,
    train_cfg: &TrainConfig,
    lrp_cfg: &LrpConfig,
    pipeline: &PipelineConfig,
    seed: u64,
) -> Vec<Result<FoldOutcome>> {
    let k = split.k();
    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let threads = std::env::var("GAITLRP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(available)
        .min(k);

    let run = |fold: usize| {
        run_fold(
            dataset,
            &split.complement(fold),
            split.fold(fold),
            train_cfg,
            lrp_cfg,
            pipeline,
            seed ^ fold as u64,
        )
    };

    if threads <= 1 {
        return (0..k).map(run).collect();
    }

    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<FoldOutcome>>>> =
        (0..k).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let fold = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if fold >= k {
                    break;
                }
                *slots[fold].lock().unwrap() = Some(run(fold));
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every fold ran"))
        .collect()
}

fn run_fold(
    dataset: &Dataset,
    train_subjects: &[String],
    test_subjects: &[String],
    train_cfg: &TrainConfig,
    lrp_cfg: &LrpConfig,
    pipeline: &PipelineConfig,
    seed: u64,
) -> Result<FoldOutcome> {
    let t = dataset.samples_per_curve();
    let params = fit_norm_params(dataset, train_subjects, pipeline.layout)?;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for sid in train_subjects {
        for &ti in dataset.trials_of_subject(sid) {
            xs.push(trial_input_tensor(&dataset.trials()[ti], &params, pipeline.flat_input));
            ys.push(dataset.labels()[ti].index());
        }
    }

    let mut network = Network::default_architecture(
        pipeline.input_channels(t),
        pipeline.input_len(t),
        seed,
    );
    let cfg = TrainConfig { seed, ..*train_cfg };
    train(&mut network, &xs, &ys, &cfg)?;

    let mut out = Vec::new();
    for sid in test_subjects {
        for &ti in dataset.trials_of_subject(sid) {
            let input = trial_input_tensor(&dataset.trials()[ti], &params, pipeline.flat_input);
            let truth = dataset.labels()[ti];
            let trace = network.forward(&input)?;
            let predicted = crate::nn::argmax(trace.logits().data());
            let target = match lrp_cfg.target {
                ExplainTarget::GroundTruth => truth.index(),
                ExplainTarget::Predicted => predicted,
            };
            let map = lrp_explain(&network, &trace, target, lrp_cfg)?;
            out.push((sid.clone(), truth, predicted, map, input));
        }
    }
    Ok(out)
}

/// Channel label for file names and CSV rows, e.g. `L,AP` or `-,V`.
fn channel_label(layout: ChannelLayout, ch: usize) -> (String, String) {
    let (side, comp) = layout.channels()[ch];
    (
        side.map(|s| s.code().to_string()).unwrap_or_else(|| "-".to_string()),
        comp.code().to_string(),
    )
}

/// Write `metrics.txt`, `relevance.csv`, and one SVG per (class, channel)
/// plus the total-relevance panel into `dir`.
pub fn export_report(result: &CvResult, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.txt"), render_metrics(result))?;
    fs::write(dir.join("relevance.csv"), render_relevance_csv(result))?;

    for (ci, profile) in result.profiles.per_class.iter().enumerate() {
        let Some(profile) = profile else { continue };
        let class = AgeGroup::from_index(ci).unwrap();
        for ch in 0..result.layout.num_channels() {
            let (side, comp) = channel_label(result.layout, ch);
            let svg = plot::class_panel_svg(
                &profile.mean_signal[ch],
                &profile.sd_signal[ch],
                &profile.mean_relevance[ch],
                &format!("{} {} {}", class.name(), side, comp),
            );
            let name = format!(
                "class_{}_{}_{}.svg",
                class.name(),
                side.to_lowercase(),
                comp.to_lowercase()
            );
            fs::write(dir.join(name), svg)?;
        }
    }

    let labels: Vec<String> = (0..result.layout.num_channels())
        .map(|ch| {
            let (side, comp) = channel_label(result.layout, ch);
            format!("{side} {comp}")
        })
        .collect();
    let svg = plot::total_relevance_svg(&result.total_relevance, &labels);
    fs::write(dir.join("total_relevance.svg"), svg)?;
    Ok(())
}

pub fn render_metrics(result: &CvResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "accuracy_mean={}", result.accuracy_mean);
    let _ = writeln!(out, "accuracy_sd={}", result.accuracy_sd);
    let _ = writeln!(out, "zero_rule={}", result.zero_rule);
    let _ = writeln!(out, "subject_vote_accuracy={}", result.subject_vote_accuracy);
    let folds: Vec<String> = result.fold_accuracies.iter().map(|a| a.to_string()).collect();
    let _ = writeln!(out, "fold_accuracies={}", folds.join(","));
    let _ = writeln!(out, "confusion_matrix=");
    for i in 0..NUM_CLASSES {
        let row: Vec<String> = (0..NUM_CLASSES)
            .map(|j| result.confusion.count(i, j).to_string())
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// `class,side,component,t,mean_signal,sd_signal,mean_relevance`; the TOTAL
/// pseudo-class rows carry the total-relevance curve with zero signal columns.
pub fn render_relevance_csv(result: &CvResult) -> String {
    let mut out = String::from("class,side,component,t,mean_signal,sd_signal,mean_relevance\n");
    for (ci, profile) in result.profiles.per_class.iter().enumerate() {
        let Some(profile) = profile else { continue };
        let class = AgeGroup::from_index(ci).unwrap();
        for ch in 0..result.layout.num_channels() {
            let (side, comp) = channel_label(result.layout, ch);
            for t in 0..result.samples_per_curve {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    class.name(),
                    side,
                    comp,
                    t,
                    profile.mean_signal[ch][t],
                    profile.sd_signal[ch][t],
                    profile.mean_relevance[ch][t]
                );
            }
        }
    }
    for ch in 0..result.layout.num_channels() {
        let (side, comp) = channel_label(result.layout, ch);
        for t in 0..result.samples_per_curve {
            let _ = writeln!(
                out,
                "TOTAL,{},{},{},0,0,{}",
                side, comp, t, result.total_relevance[ch][t]
            );
        }
    }
    out
}

/// Parsed relevance export, sufficient to regenerate the SVG figures.
#[derive(Debug, Clone, Default)]
pub struct RelevanceExport {
    /// `(class, side, component) -> (mean_signal, sd_signal, mean_relevance)`.
    pub class_curves: BTreeMap<(String, String, String), (Vec<f64>, Vec<f64>, Vec<f64>)>,
    /// `(side, component) -> total relevance curve`.
    pub total_curves: BTreeMap<(String, String), Vec<f64>>,
}

pub fn parse_relevance_csv(text: &str) -> Result<RelevanceExport> {
    let mut export = RelevanceExport::default();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::EmptyDataset)?;
    if !header.starts_with("class,side,component,t,") {
        return Err(Error::Parse {
            line: 1,
            msg: "not a relevance export file".into(),
        });
    }
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected 7 fields, got {}", f.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad number `{s}`"),
            })
        };
        let (sig, sd, rel) = (parse(f[4])?, parse(f[5])?, parse(f[6])?);
        if f[0] == "TOTAL" {
            export
                .total_curves
                .entry((f[1].to_string(), f[2].to_string()))
                .or_default()
                .push(rel);
        } else {
            let entry = export
                .class_curves
                .entry((f[0].to_string(), f[1].to_string(), f[2].to_string()))
                .or_default();
            entry.0.push(sig);
            entry.1.push(sd);
            entry.2.push(rel);
        }
    }
    Ok(export)
}

/// Regenerate the SVG figure set from a parsed relevance export.
pub fn export_figures(export: &RelevanceExport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for ((class, side, comp), (sig, sd, rel)) in &export.class_curves {
        let svg = plot::class_panel_svg(sig, sd, rel, &format!("{class} {side} {comp}"));
        let name = format!(
            "class_{}_{}_{}.svg",
            class,
            side.to_lowercase(),
            comp.to_lowercase()
        );
        fs::write(dir.join(name), svg)?;
    }
    let labels: Vec<String> = export
        .total_curves
        .keys()
        .map(|(s, c)| format!("{s} {c}"))
        .collect();
    let curves: Vec<Vec<f64>> = export.total_curves.values().cloned().collect();
    fs::write(dir.join("total_relevance.svg"), plot::total_relevance_svg(&curves, &labels))?;
    Ok(())
}
