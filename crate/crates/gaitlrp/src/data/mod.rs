//! Dataset model: GRF trials, age-group labels, channel layout, min-max
//! normalization, and time resampling.

mod csv;
mod split;
mod synth;

pub use csv::{load_dataset, save_dataset};
pub use split::{stratified_subject_kfold, FoldSplit};
pub use synth::{synth_generate, SynthSpec};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const NUM_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn code(self) -> &'static str {
        match self {
            Side::Left => "L",
            Side::Right => "R",
        }
    }
}

/// Force component axes: anterior-posterior, medio-lateral, vertical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Ap,
    Ml,
    V,
}

impl Component {
    pub fn code(self) -> &'static str {
        match self {
            Component::Ap => "AP",
            Component::Ml => "ML",
            Component::V => "V",
        }
    }
}

/// Age classes with fixed indices: Young = 0, MiddleAged = 1, Older = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeGroup {
    Young,
    MiddleAged,
    Older,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; NUM_CLASSES] = [AgeGroup::Young, AgeGroup::MiddleAged, AgeGroup::Older];

    pub fn index(self) -> usize {
        match self {
            AgeGroup::Young => 0,
            AgeGroup::MiddleAged => 1,
            AgeGroup::Older => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<AgeGroup> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            AgeGroup::Young => "young",
            AgeGroup::MiddleAged => "middle_aged",
            AgeGroup::Older => "older",
        }
    }

    /// Inclusive age range in years covered by this group.
    pub fn age_range(self) -> (i64, i64) {
        match self {
            AgeGroup::Young => (20, 39),
            AgeGroup::MiddleAged => (40, 64),
            AgeGroup::Older => (65, 79),
        }
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Young: 20-39, middle-aged: 40-64, older: 65-79. Anything else is an error.
pub fn assign_age_group(age_years: i64) -> Result<AgeGroup> {
    match age_years {
        20..=39 => Ok(AgeGroup::Young),
        40..=64 => Ok(AgeGroup::MiddleAged),
        65..=79 => Ok(AgeGroup::Older),
        other => Err(Error::OutOfRangeAge(other)),
    }
}

/// One walking trial: six stance-phase force curves plus subject metadata.
/// Curves are indexed `[side][component]` and share a common length.
#[derive(Debug, Clone, PartialEq)]
pub struct GrfTrial {
    pub subject_id: String,
    pub age_years: i64,
    pub curves: [[Vec<f64>; 3]; 2],
}

impl GrfTrial {
    pub fn curve(&self, side: Side, component: Component) -> &[f64] {
        let s = match side {
            Side::Left => 0,
            Side::Right => 1,
        };
        let c = match component {
            Component::Ap => 0,
            Component::Ml => 1,
            Component::V => 2,
        };
        &self.curves[s][c]
    }

    pub fn samples_per_curve(&self) -> usize {
        self.curves[0][0].len()
    }

    fn validate(&self) -> Result<()> {
        let t = self.samples_per_curve();
        if t < 2 {
            return Err(Error::DegenerateCurve);
        }
        for side in &self.curves {
            for curve in side {
                if curve.len() != t {
                    return Err(Error::InvalidConfig(format!(
                        "trial of subject {} has mixed curve lengths",
                        self.subject_id
                    )));
                }
                if curve.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "trial of subject {} contains a non-finite sample",
                        self.subject_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Network input layout. `SixChannel` keeps left/right separate; `SideAveraged`
/// averages the two sides into three channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ChannelLayout {
    #[default]
    SixChannel,
    SideAveraged,
}

impl ChannelLayout {
    pub fn num_channels(self) -> usize {
        match self {
            ChannelLayout::SixChannel => 6,
            ChannelLayout::SideAveraged => 3,
        }
    }

    /// Channel labels in concatenation order. Side is `None` in averaged mode.
    pub fn channels(self) -> Vec<(Option<Side>, Component)> {
        match self {
            ChannelLayout::SixChannel => vec![
                (Some(Side::Left), Component::Ap),
                (Some(Side::Left), Component::Ml),
                (Some(Side::Left), Component::V),
                (Some(Side::Right), Component::Ap),
                (Some(Side::Right), Component::Ml),
                (Some(Side::Right), Component::V),
            ],
            ChannelLayout::SideAveraged => vec![
                (None, Component::Ap),
                (None, Component::Ml),
                (None, Component::V),
            ],
        }
    }

    /// Extract this layout's channel curves from a trial, in order.
    pub fn extract(self, trial: &GrfTrial) -> Vec<Vec<f64>> {
        match self {
            ChannelLayout::SixChannel => vec![
                trial.curve(Side::Left, Component::Ap).to_vec(),
                trial.curve(Side::Left, Component::Ml).to_vec(),
                trial.curve(Side::Left, Component::V).to_vec(),
                trial.curve(Side::Right, Component::Ap).to_vec(),
                trial.curve(Side::Right, Component::Ml).to_vec(),
                trial.curve(Side::Right, Component::V).to_vec(),
            ],
            ChannelLayout::SideAveraged => [Component::Ap, Component::Ml, Component::V]
                .iter()
                .map(|&c| {
                    trial
                        .curve(Side::Left, c)
                        .iter()
                        .zip(trial.curve(Side::Right, c))
                        .map(|(l, r)| 0.5 * (l + r))
                        .collect()
                })
                .collect(),
        }
    }
}

/// Labeled trial collection with a subject -> trial-index map.
#[derive(Debug, Clone)]
pub struct Dataset {
    trials: Vec<GrfTrial>,
    labels: Vec<AgeGroup>,
    subject_index: BTreeMap<String, Vec<usize>>,
    samples_per_curve: usize,
}

impl Dataset {
    pub fn new(trials: Vec<GrfTrial>) -> Result<Dataset> {
        if trials.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let t = trials[0].samples_per_curve();
        let mut labels = Vec::with_capacity(trials.len());
        let mut subject_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, trial) in trials.iter().enumerate() {
            trial.validate()?;
            if trial.samples_per_curve() != t {
                return Err(Error::InvalidConfig(format!(
                    "trial {} has {} samples per curve, expected {}",
                    i,
                    trial.samples_per_curve(),
                    t
                )));
            }
            labels.push(assign_age_group(trial.age_years)?);
            subject_index
                .entry(trial.subject_id.clone())
                .or_default()
                .push(i);
        }
        // All trials of one subject must carry one label.
        for indices in subject_index.values() {
            let first = labels[indices[0]];
            if indices.iter().any(|&i| labels[i] != first) {
                return Err(Error::InvalidConfig(format!(
                    "subject {} has trials in different age groups",
                    trials[indices[0]].subject_id
                )));
            }
        }
        Ok(Dataset {
            trials,
            labels,
            subject_index,
            samples_per_curve: t,
        })
    }

    pub fn trials(&self) -> &[GrfTrial] {
        &self.trials
    }

    pub fn labels(&self) -> &[AgeGroup] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn samples_per_curve(&self) -> usize {
        self.samples_per_curve
    }

    pub fn subject_ids(&self) -> impl Iterator<Item = &str> {
        self.subject_index.keys().map(|s| s.as_str())
    }

    pub fn trials_of_subject(&self, subject_id: &str) -> &[usize] {
        self.subject_index
            .get(subject_id)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn subject_label(&self, subject_id: &str) -> Option<AgeGroup> {
        self.subject_index
            .get(subject_id)
            .map(|idx| self.labels[idx[0]])
    }
}

/// Per-channel min/max fitted on training-fold data only.
#[derive(Debug, Clone, PartialEq)]
pub struct NormParams {
    pub layout: ChannelLayout,
    /// `(min, max)` per channel, in layout order.
    pub ranges: Vec<(f64, f64)>,
}

/// Fit per-channel extrema over all trials of the given subjects.
pub fn fit_norm_params<S: AsRef<str>>(
    dataset: &Dataset,
    subject_ids: &[S],
    layout: ChannelLayout,
) -> Result<NormParams> {
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); layout.num_channels()];
    let mut seen = false;
    for sid in subject_ids {
        for &ti in dataset.trials_of_subject(sid.as_ref()) {
            seen = true;
            for (ch, curve) in layout.extract(&dataset.trials[ti]).iter().enumerate() {
                for &v in curve {
                    let (lo, hi) = &mut ranges[ch];
                    *lo = lo.min(v);
                    *hi = hi.max(v);
                }
            }
        }
    }
    if !seen {
        return Err(Error::EmptySelection);
    }
    Ok(NormParams { layout, ranges })
}

/// Min-max normalize each channel and concatenate in layout order.
/// Degenerate channels (max == min) map every sample to 0.5. Values outside
/// the fitted range are not clipped.
pub fn normalize_and_concatenate(trial: &GrfTrial, params: &NormParams) -> Vec<f64> {
    let mut out = Vec::with_capacity(params.layout.num_channels() * trial.samples_per_curve());
    for (ch, curve) in params.layout.extract(trial).iter().enumerate() {
        let (lo, hi) = params.ranges[ch];
        let span = hi - lo;
        if span == 0.0 {
            out.extend(curve.iter().map(|_| 0.5));
        } else {
            out.extend(curve.iter().map(|v| (v - lo) / span));
        }
    }
    out
}

/// Normalized trial as a network input tensor: `[C, T]`, or `[1, C*T]` when
/// `flat_input` is set.
pub fn trial_input_tensor(
    trial: &GrfTrial,
    params: &NormParams,
    flat_input: bool,
) -> Tensor {
    let t = trial.samples_per_curve();
    let c = params.layout.num_channels();
    let data = normalize_and_concatenate(trial, params);
    if flat_input {
        Tensor::from_vec(&[1, c * t], data)
    } else {
        Tensor::from_vec(&[c, t], data)
    }
}

/// Linear interpolation of `curve` onto `target` equidistant points over the
/// original support. Endpoints are preserved exactly; `L == target` is the
/// identity.
pub fn resample_curve(curve: &[f64], target: usize) -> Result<Vec<f64>> {
    if curve.len() < 2 || target < 2 {
        return Err(Error::DegenerateCurve);
    }
    if curve.len() == target {
        return Ok(curve.to_vec());
    }
    let l = curve.len();
    let scale = (l - 1) as f64 / (target - 1) as f64;
    let mut out = Vec::with_capacity(target);
    for i in 0..target {
        if i == target - 1 {
            out.push(curve[l - 1]);
            continue;
        }
        let pos = i as f64 * scale;
        let j = pos.floor() as usize;
        let frac = pos - j as f64;
        out.push(curve[j] + frac * (curve[j + 1] - curve[j]));
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn trial(subject: &str, age: i64, curves: [[Vec<f64>; 3]; 2]) -> GrfTrial {
        GrfTrial {
            subject_id: subject.to_string(),
            age_years: age,
            curves,
        }
    }

    pub(crate) fn flat_trial(subject: &str, age: i64, value: f64, t: usize) -> GrfTrial {
        let c = || vec![value; t];
        trial(subject, age, [[c(), c(), c()], [c(), c(), c()]])
    }

    #[test]
    fn age_group_boundaries() {
        assert_eq!(assign_age_group(20).unwrap(), AgeGroup::Young);
        assert_eq!(assign_age_group(39).unwrap(), AgeGroup::Young);
        assert_eq!(assign_age_group(40).unwrap(), AgeGroup::MiddleAged);
        assert_eq!(assign_age_group(64).unwrap(), AgeGroup::MiddleAged);
        assert_eq!(assign_age_group(65).unwrap(), AgeGroup::Older);
        assert_eq!(assign_age_group(79).unwrap(), AgeGroup::Older);
        assert!(matches!(assign_age_group(19), Err(Error::OutOfRangeAge(19))));
        assert!(matches!(assign_age_group(80), Err(Error::OutOfRangeAge(80))));
    }

    #[test]
    fn resample_linear_midpoint() {
        assert_eq!(resample_curve(&[0.0, 1.0], 3).unwrap(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn resample_identity_when_lengths_match() {
        let c = vec![1.0, 4.0, 2.0, 8.0];
        assert_eq!(resample_curve(&c, 4).unwrap(), c);
    }

    #[test]
    fn resample_preserves_endpoints() {
        assert_eq!(resample_curve(&[0.0, 2.0, 4.0, 6.0], 2).unwrap(), vec![0.0, 6.0]);
    }

    #[test]
    fn resample_rejects_degenerate() {
        assert!(matches!(resample_curve(&[1.0], 3), Err(Error::DegenerateCurve)));
    }

    #[test]
    fn norm_params_global_extrema() {
        let t1 = flat_trial("a", 25, 0.0, 4);
        let mut t1 = t1;
        t1.curves[0][0] = vec![0.0, 5.0, 10.0, 5.0];
        let ds = Dataset::new(vec![t1]).unwrap();
        let p = fit_norm_params(&ds, &["a"], ChannelLayout::SixChannel).unwrap();
        assert_eq!(p.ranges[0], (0.0, 10.0));
        assert_eq!(p.ranges[1], (0.0, 0.0));
    }

    #[test]
    fn norm_params_across_subjects() {
        let mut a = flat_trial("a", 25, 0.0, 2);
        a.curves[0][0] = vec![-1.0, 4.0];
        let mut b = flat_trial("b", 30, 0.0, 2);
        b.curves[0][0] = vec![2.0, 7.0];
        let ds = Dataset::new(vec![a, b]).unwrap();
        let p = fit_norm_params(&ds, &["a", "b"], ChannelLayout::SixChannel).unwrap();
        assert_eq!(p.ranges[0], (-1.0, 7.0));
    }

    #[test]
    fn norm_rejects_empty_selection() {
        let ds = Dataset::new(vec![flat_trial("a", 25, 1.0, 3)]).unwrap();
        let err = fit_norm_params(&ds, &[] as &[&str], ChannelLayout::SixChannel);
        assert!(matches!(err, Err(Error::EmptySelection)));
    }

    #[test]
    fn normalization_maps_extrema_and_degenerates() {
        let mut a = flat_trial("a", 25, 3.0, 3);
        a.curves[0][0] = vec![0.0, 5.0, 10.0];
        let ds = Dataset::new(vec![a.clone()]).unwrap();
        let p = fit_norm_params(&ds, &["a"], ChannelLayout::SixChannel).unwrap();
        let v = normalize_and_concatenate(&a, &p);
        assert_eq!(&v[0..3], &[0.0, 0.5, 1.0]);
        // degenerate channels map to 0.5
        assert!(v[3..].iter().all(|&x| x == 0.5));
    }

    #[test]
    fn side_averaged_layout_halves_channels() {
        let mut a = flat_trial("a", 25, 0.0, 2);
        a.curves[0][0] = vec![0.0, 2.0];
        a.curves[1][0] = vec![4.0, 6.0];
        let ext = ChannelLayout::SideAveraged.extract(&a);
        assert_eq!(ext.len(), 3);
        assert_eq!(ext[0], vec![2.0, 4.0]);
    }

    #[test]
    fn dataset_rejects_mixed_subject_labels() {
        let a = flat_trial("a", 25, 1.0, 3);
        let b = flat_trial("a", 70, 1.0, 3);
        assert!(Dataset::new(vec![a, b]).is_err());
    }
}
