//! Layer-wise relevance propagation: propagate a target logit backwards
//! through a cached activation trace, track relevance absorbed by biases and
//! the epsilon stabilizer, and aggregate relevance across trials and classes.

use serde::{Deserialize, Serialize};

use crate::data::{AgeGroup, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::nn::{Conv1D, Dense, Layer, Network, Trace};
use crate::tensor::Tensor;

/// Propagation rule for Dense/Conv1D layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LrpRule {
    Epsilon { epsilon: f64 },
    AlphaBeta { alpha: f64, beta: f64 },
}

impl Default for LrpRule {
    fn default() -> Self {
        LrpRule::Epsilon { epsilon: 1e-6 }
    }
}

/// Which logit to explain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExplainTarget {
    #[default]
    GroundTruth,
    Predicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LrpConfig {
    #[serde(flatten)]
    pub rule: LrpRule,
    pub target: ExplainTarget,
}

impl LrpConfig {
    pub fn validate(&self) -> Result<()> {
        match self.rule {
            LrpRule::Epsilon { epsilon } => {
                if !(epsilon >= 0.0) {
                    return Err(Error::InvalidConfig("epsilon must be >= 0".into()));
                }
            }
            LrpRule::AlphaBeta { alpha, beta } => {
                if (alpha - beta - 1.0).abs() > 1e-12 || beta < 0.0 {
                    return Err(Error::InvalidConfig(
                        "alpha-beta rule requires alpha - beta = 1 and beta >= 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Relevance absorbed at one layer, split by sink.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Absorbed {
    pub bias: f64,
    pub epsilon: f64,
}

impl Absorbed {
    pub fn total(&self) -> f64 {
        self.bias + self.epsilon
    }
}

/// Per-layer relevance for one (input, target class) pair. `layer_relevance[i]`
/// is the relevance at layer `i`'s input; index 0 is the network input.
#[derive(Debug, Clone)]
pub struct RelevanceMap {
    pub layer_relevance: Vec<Tensor>,
    pub absorbed: Vec<Absorbed>,
    pub explained_logit: f64,
    pub target_class: usize,
}

impl RelevanceMap {
    pub fn input_relevance(&self) -> &Tensor {
        &self.layer_relevance[0]
    }

    pub fn total_absorbed(&self) -> f64 {
        self.absorbed.iter().map(Absorbed::total).sum()
    }
}

fn stab_sign(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Explain `target_class`'s pre-softmax logit. Output-layer relevance is the
/// one-hot logit; Dense/Conv1D redistribute by signed contribution shares,
/// ReLU and Flatten pass through, max-pool routes winner-take-all. Bias and
/// epsilon shares are dropped from the flow but reported as absorbed.
pub fn lrp_explain(
    network: &Network,
    trace: &Trace,
    target_class: usize,
    config: &LrpConfig,
) -> Result<RelevanceMap> {
    let seed = trace.logits().data().get(target_class).copied();
    match seed {
        Some(s) => lrp_explain_seeded(network, trace, target_class, s, config),
        None => Err(Error::InvalidConfig(format!(
            "target class {target_class} out of range for {} logits",
            trace.logits().len()
        ))),
    }
}

/// Same propagation with an explicit output-layer seed instead of the logit
/// value. All rules are degree-1 homogeneous in the seed.
pub fn lrp_explain_seeded(
    network: &Network,
    trace: &Trace,
    target_class: usize,
    seed_value: f64,
    config: &LrpConfig,
) -> Result<RelevanceMap> {
    config.validate()?;
    let n = network.layers().len();
    let logits = trace.logits();
    if target_class >= logits.len() {
        return Err(Error::InvalidConfig(format!(
            "target class {target_class} out of range for {} logits",
            logits.len()
        )));
    }
    let explained_logit = seed_value;
    let mut relevance = Tensor::zeros(logits.shape());
    relevance.data_mut()[target_class] = explained_logit;

    let mut layer_relevance = vec![Tensor::zeros(&[0]); n];
    let mut absorbed = vec![Absorbed::default(); n];

    for i in (0..n).rev() {
        let x = trace.input(i);
        let matches = match &network.layers()[i] {
            Layer::Dense(d) => x.len() == d.in_features,
            Layer::Conv1D(c) => x.shape().len() == 2 && x.shape()[0] == c.in_channels,
            _ => true,
        };
        if !matches {
            return Err(Error::Shape {
                layer: i,
                msg: "trace does not match network".into(),
            });
        }
        let (r_in, abs) = match &network.layers()[i] {
            Layer::Dense(d) => dense_rule(d, x, &relevance, &config.rule),
            Layer::Conv1D(c) => conv_rule(c, x, trace.output(i), &relevance, &config.rule),
            Layer::ReLU => (relevance.clone(), Absorbed::default()),
            Layer::Flatten => (relevance.reshaped(x.shape()), Absorbed::default()),
            Layer::MaxPool1D { window, stride } => {
                (pool_rule(*window, *stride, x, &relevance), Absorbed::default())
            }
        };
        absorbed[i] = abs;
        layer_relevance[i] = r_in.clone();
        relevance = r_in;
    }

    Ok(RelevanceMap {
        layer_relevance,
        absorbed,
        explained_logit,
        target_class,
    })
}

/// Shared contribution-share redistribution for one linear unit. `contribs`
/// holds `(input_index, z_ij)`; returns absorbed (bias, epsilon) shares.
fn distribute_unit(
    r_j: f64,
    bias: f64,
    contribs: &[(usize, f64)],
    rule: &LrpRule,
    r_in: &mut [f64],
) -> Absorbed {
    if r_j == 0.0 {
        return Absorbed::default();
    }
    match *rule {
        LrpRule::Epsilon { epsilon } => {
            let z_j: f64 = contribs.iter().map(|&(_, z)| z).sum::<f64>() + bias;
            let denom = z_j + epsilon * stab_sign(z_j);
            if denom == 0.0 {
                // no usable denominator: the whole unit relevance is absorbed
                return Absorbed {
                    bias: 0.0,
                    epsilon: r_j,
                };
            }
            let factor = r_j / denom;
            for &(i, z) in contribs {
                r_in[i] += z * factor;
            }
            Absorbed {
                bias: bias * factor,
                epsilon: r_j * epsilon * stab_sign(z_j) / denom,
            }
        }
        LrpRule::AlphaBeta { alpha, beta } => {
            let mut zp = bias.max(0.0);
            let mut zn = bias.min(0.0);
            for &(_, z) in contribs {
                if z > 0.0 {
                    zp += z;
                } else {
                    zn += z;
                }
            }
            let mut abs = Absorbed::default();
            if zp != 0.0 {
                let f = alpha * r_j / zp;
                for &(i, z) in contribs {
                    if z > 0.0 {
                        r_in[i] += z * f;
                    }
                }
                abs.bias += bias.max(0.0) * f;
            } else {
                abs.epsilon += alpha * r_j;
            }
            if beta != 0.0 {
                if zn != 0.0 {
                    let f = -beta * r_j / zn;
                    for &(i, z) in contribs {
                        if z < 0.0 {
                            r_in[i] += z * f;
                        }
                    }
                    abs.bias += bias.min(0.0) * f;
                } else {
                    abs.epsilon -= beta * r_j;
                }
            }
            abs
        }
    }
}

fn dense_rule(d: &Dense, x: &Tensor, r_out: &Tensor, rule: &LrpRule) -> (Tensor, Absorbed) {
    let xd = x.data();
    let w = d.weight.data();
    let mut r_in = vec![0.0; d.in_features];
    let mut absorbed = Absorbed::default();
    let mut contribs = Vec::with_capacity(d.in_features);
    for j in 0..d.out_features {
        let r_j = r_out.data()[j];
        if r_j == 0.0 {
            continue;
        }
        contribs.clear();
        let row = &w[j * d.in_features..(j + 1) * d.in_features];
        for (i, (&wi, &xi)) in row.iter().zip(xd).enumerate() {
            contribs.push((i, xi * wi));
        }
        let a = distribute_unit(r_j, d.bias.data()[j], &contribs, rule, &mut r_in);
        absorbed.bias += a.bias;
        absorbed.epsilon += a.epsilon;
    }
    (Tensor::from_vec(x.shape(), r_in), absorbed)
}

fn conv_rule(
    c: &Conv1D,
    x: &Tensor,
    out: &Tensor,
    r_out: &Tensor,
    rule: &LrpRule,
) -> (Tensor, Absorbed) {
    let [cin, l] = *x.shape() else { unreachable!("validated in forward") };
    let lout = out.shape()[1];
    let xd = x.data();
    let w = c.weight.data();
    let k = c.kernel_size;
    let mut r_in = vec![0.0; xd.len()];
    let mut absorbed = Absorbed::default();
    let mut contribs = Vec::with_capacity(cin * k);
    for o in 0..c.out_channels {
        for p in 0..lout {
            let r_j = r_out.data()[o * lout + p];
            if r_j == 0.0 {
                continue;
            }
            contribs.clear();
            let base = (p * c.stride) as isize - c.padding as isize;
            let k_lo = (-base).max(0) as usize;
            let k_hi = k.min((l as isize - base).max(0) as usize);
            for ci in 0..cin {
                let woff = (o * cin + ci) * k;
                for kk in k_lo..k_hi {
                    let xi_idx = ci * l + (base + kk as isize) as usize;
                    contribs.push((xi_idx, xd[xi_idx] * w[woff + kk]));
                }
            }
            let a = distribute_unit(r_j, c.bias.data()[o], &contribs, rule, &mut r_in);
            absorbed.bias += a.bias;
            absorbed.epsilon += a.epsilon;
        }
    }
    (Tensor::from_vec(x.shape(), r_in), absorbed)
}

fn pool_rule(window: usize, stride: usize, x: &Tensor, r_out: &Tensor) -> Tensor {
    let [ch, l] = *x.shape() else { unreachable!("validated in forward") };
    let lout = r_out.shape()[1];
    let xd = x.data();
    let mut r_in = vec![0.0; xd.len()];
    for c in 0..ch {
        for p in 0..lout {
            let start = c * l + p * stride;
            let mut best = 0;
            for off in 1..window {
                if xd[start + off] > xd[start + best] {
                    best = off;
                }
            }
            r_in[start + best] += r_out.data()[c * lout + p];
        }
    }
    Tensor::from_vec(x.shape(), r_in)
}

/// Per-layer relevance sums plus the absorbed-relevance accounting.
#[derive(Debug, Clone)]
pub struct ConservationReport {
    /// Sum of relevance at each layer's input, index 0 = network input.
    pub layer_sums: Vec<f64>,
    pub absorbed: Vec<Absorbed>,
    pub total_absorbed: f64,
    pub explained_logit: f64,
}

impl ConservationReport {
    /// `|sum(input relevance) + total absorbed - logit| / |logit|`.
    pub fn relative_error(&self) -> f64 {
        let recovered = self.layer_sums[0] + self.total_absorbed;
        (recovered - self.explained_logit).abs() / self.explained_logit.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn conservation_report(map: &RelevanceMap) -> ConservationReport {
    ConservationReport {
        layer_sums: map.layer_relevance.iter().map(Tensor::sum).collect(),
        absorbed: map.absorbed.clone(),
        total_absorbed: map.total_absorbed(),
        explained_logit: map.explained_logit,
    }
}

/// Per-class aggregate: mean relevance curve per channel plus mean and
/// population-SD signal curves, all over that class's trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassRelevanceProfile {
    /// `[channel][t]` pointwise mean input relevance.
    pub mean_relevance: Vec<Vec<f64>>,
    /// `[channel][t]` pointwise mean normalized signal.
    pub mean_signal: Vec<Vec<f64>>,
    /// `[channel][t]` pointwise population standard deviation of the signal.
    pub sd_signal: Vec<Vec<f64>>,
    pub trial_count: usize,
}

/// Aggregation result: a profile per class, `None` where a class had no
/// trials (flagged, not an error).
#[derive(Debug, Clone)]
pub struct ClassProfiles {
    pub per_class: Vec<Option<ClassRelevanceProfile>>,
    /// `[channels, t]` expected of every input.
    pub curve_shape: (usize, usize),
}

impl ClassProfiles {
    pub fn missing_classes(&self) -> Vec<AgeGroup> {
        self.per_class
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_none())
            .map(|(i, _)| AgeGroup::from_index(i).unwrap())
            .collect()
    }
}

/// Reshape an input-relevance or input tensor to `[channels][t]` curves.
/// Accepts both the `[C, T]` layout and the flat `[1, C*T]` layout.
pub fn as_channel_curves(t: &Tensor, channels: usize) -> Result<Vec<Vec<f64>>> {
    if t.len() % channels != 0 {
        return Err(Error::InvalidConfig(format!(
            "tensor of {} values is not divisible into {channels} channels",
            t.len()
        )));
    }
    let per = t.len() / channels;
    Ok(t.data().chunks(per).map(<[f64]>::to_vec).collect())
}

/// Pointwise mean/SD aggregation of `(relevance map, ground-truth class,
/// normalized input)` triples, grouped by class.
pub fn aggregate_class_relevance(
    items: &[(&RelevanceMap, AgeGroup, &Tensor)],
    channels: usize,
) -> Result<ClassProfiles> {
    if items.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let len = items[0].2.len();
    let per = len / channels;
    let mut sums_r = vec![vec![0.0; len]; NUM_CLASSES];
    let mut sums_x = vec![vec![0.0; len]; NUM_CLASSES];
    let mut sums_x2 = vec![vec![0.0; len]; NUM_CLASSES];
    let mut counts = [0usize; NUM_CLASSES];
    for (map, class, input) in items {
        let r = map.input_relevance();
        if r.len() != len || input.len() != len {
            return Err(Error::InvalidConfig(
                "all aggregated inputs must share one shape".into(),
            ));
        }
        let ci = class.index();
        counts[ci] += 1;
        for (acc, v) in sums_r[ci].iter_mut().zip(r.data()) {
            *acc += v;
        }
        for ((acc, acc2), v) in sums_x[ci].iter_mut().zip(&mut sums_x2[ci]).zip(input.data()) {
            *acc += v;
            *acc2 += v * v;
        }
    }
    let chunk = |v: &[f64]| -> Vec<Vec<f64>> { v.chunks(per).map(<[f64]>::to_vec).collect() };
    let per_class = (0..NUM_CLASSES)
        .map(|ci| {
            if counts[ci] == 0 {
                return None;
            }
            let n = counts[ci] as f64;
            let mean_r: Vec<f64> = sums_r[ci].iter().map(|s| s / n).collect();
            let mean_x: Vec<f64> = sums_x[ci].iter().map(|s| s / n).collect();
            let sd_x: Vec<f64> = sums_x2[ci]
                .iter()
                .zip(&mean_x)
                .map(|(s2, m)| (s2 / n - m * m).max(0.0).sqrt())
                .collect();
            Some(ClassRelevanceProfile {
                mean_relevance: chunk(&mean_r),
                mean_signal: chunk(&mean_x),
                sd_signal: chunk(&sd_x),
                trial_count: counts[ci],
            })
        })
        .collect();
    Ok(ClassProfiles {
        per_class,
        curve_shape: (channels, per),
    })
}

/// Pointwise sum over classes of `|mean relevance|`, per channel. All three
/// classes must be present.
pub fn total_relevance(profiles: &ClassProfiles) -> Result<Vec<Vec<f64>>> {
    let missing = profiles.missing_classes();
    if let Some(class) = missing.first() {
        return Err(Error::MissingClass(class.name().to_string()));
    }
    let (channels, t) = profiles.curve_shape;
    let mut out = vec![vec![0.0; t]; channels];
    for profile in profiles.per_class.iter().flatten() {
        for (ch, curve) in profile.mean_relevance.iter().enumerate() {
            for (acc, v) in out[ch].iter_mut().zip(curve) {
                *acc += v.abs();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Layer;

    fn single_dense_example() -> (Network, Tensor) {
        let d = Dense {
            in_features: 2,
            out_features: 1,
            weight: Tensor::from_vec(&[1, 2], vec![0.5, 0.25]),
            bias: Tensor::zeros(&[1]),
        };
        (
            Network::new(vec![Layer::Dense(d)]),
            Tensor::from_vec(&[2], vec![1.0, 2.0]),
        )
    }

    #[test]
    fn single_dense_hand_computation() {
        // z_1 = 1*0.5 = 0.5, z_2 = 2*0.25 = 0.5, logit = 1.0
        let (net, x) = single_dense_example();
        let trace = net.forward(&x).unwrap();
        let cfg = LrpConfig {
            rule: LrpRule::Epsilon { epsilon: 0.0 },
            target: ExplainTarget::GroundTruth,
        };
        let map = lrp_explain(&net, &trace, 0, &cfg).unwrap();
        assert_eq!(map.explained_logit, 1.0);
        assert_eq!(map.input_relevance().data(), &[0.5, 0.5]);
        assert_eq!(map.total_absorbed(), 0.0);
    }

    #[test]
    fn pass_through_layers_route_seed_unchanged() {
        let net = Network::new(vec![Layer::Flatten, Layer::ReLU]);
        let x = Tensor::from_vec(&[1, 3], vec![0.2, 0.4, 0.6]);
        let trace = net.forward(&x).unwrap();
        let cfg = LrpConfig::default();
        let map = lrp_explain(&net, &trace, 1, &cfg).unwrap();
        let report = conservation_report(&map);
        assert_eq!(map.explained_logit, 0.4);
        for s in &report.layer_sums {
            assert_eq!(*s, 0.4);
        }
        assert_eq!(report.total_absorbed, 0.0);
    }

    #[test]
    fn alpha_beta_validation() {
        let bad = LrpConfig {
            rule: LrpRule::AlphaBeta { alpha: 2.0, beta: 0.5 },
            target: ExplainTarget::GroundTruth,
        };
        assert!(bad.validate().is_err());
        let good = LrpConfig {
            rule: LrpRule::AlphaBeta { alpha: 2.0, beta: 1.0 },
            target: ExplainTarget::GroundTruth,
        };
        assert!(good.validate().is_ok());
    }

    #[test]
    fn alpha1_beta0_yields_nonnegative_map_for_positive_input() {
        let net = Network::default_architecture(2, 16, 5);
        let x = Tensor::from_vec(&[2, 16], (0..32).map(|i| 0.1 + (i as f64 * 0.7).sin().abs()).collect());
        let trace = net.forward(&x).unwrap();
        let cfg = LrpConfig {
            rule: LrpRule::AlphaBeta { alpha: 1.0, beta: 0.0 },
            target: ExplainTarget::GroundTruth,
        };
        let map = lrp_explain(&net, &trace, 0, &cfg).unwrap();
        // positive inputs and alpha-only pools never produce negative shares
        // when the seed is positive; with a possibly negative logit the map
        // sign follows the seed sign
        let seed = map.explained_logit;
        for &r in map.input_relevance().data() {
            if seed >= 0.0 {
                assert!(r >= -1e-12);
            } else {
                assert!(r <= 1e-12);
            }
        }
    }

    #[test]
    fn pool_relevance_lands_on_maxima_only() {
        let net = Network::new(vec![Layer::MaxPool1D { window: 2, stride: 2 }, Layer::Flatten]);
        let x = Tensor::from_vec(&[1, 4], vec![1.0, 7.0, 7.0, 2.0]);
        let trace = net.forward(&x).unwrap();
        let map = lrp_explain(&net, &trace, 0, &LrpConfig::default()).unwrap();
        // first window max at index 1; second window tie resolved to index 2
        assert_eq!(map.input_relevance().data(), &[0.0, 7.0, 0.0, 0.0]);
    }

    #[test]
    fn seed_scaling_is_linear() {
        let net = Network::default_architecture(2, 12, 8);
        let x = Tensor::from_vec(&[2, 12], (0..24).map(|i| ((i * 13 % 7) as f64 - 3.0) * 0.2).collect());
        let trace = net.forward(&x).unwrap();
        let cfg = LrpConfig {
            rule: LrpRule::Epsilon { epsilon: 1e-6 },
            target: ExplainTarget::GroundTruth,
        };
        let base = lrp_explain_seeded(&net, &trace, 1, 1.0, &cfg).unwrap();
        let scaled = lrp_explain_seeded(&net, &trace, 1, 3.0, &cfg).unwrap();
        for (r1, r3) in base.input_relevance().data().iter().zip(scaled.input_relevance().data()) {
            assert!((3.0 * r1 - r3).abs() <= 1e-12 * r3.abs().max(1.0));
        }
        assert!((3.0 * base.total_absorbed() - scaled.total_absorbed()).abs() < 1e-12);
    }

    #[test]
    fn aggregate_means_and_total() {
        let r1 = RelevanceMap {
            layer_relevance: vec![Tensor::from_vec(&[1, 2], vec![1.0, 0.0])],
            absorbed: vec![Absorbed::default()],
            explained_logit: 1.0,
            target_class: 0,
        };
        let r2 = RelevanceMap {
            layer_relevance: vec![Tensor::from_vec(&[1, 2], vec![0.0, 1.0])],
            absorbed: vec![Absorbed::default()],
            explained_logit: 1.0,
            target_class: 0,
        };
        let x = Tensor::from_vec(&[1, 2], vec![0.5, 0.5]);
        let items = vec![
            (&r1, AgeGroup::Young, &x),
            (&r2, AgeGroup::Young, &x),
        ];
        let profiles = aggregate_class_relevance(&items, 1).unwrap();
        let young = profiles.per_class[0].as_ref().unwrap();
        assert_eq!(young.mean_relevance[0], vec![0.5, 0.5]);
        assert_eq!(young.sd_signal[0], vec![0.0, 0.0]);
        assert_eq!(young.trial_count, 2);
        assert_eq!(profiles.missing_classes().len(), 2);
        assert!(matches!(total_relevance(&profiles), Err(Error::MissingClass(_))));
    }

    #[test]
    fn single_trial_profile_has_zero_sd() {
        let r = RelevanceMap {
            layer_relevance: vec![Tensor::from_vec(&[1, 2], vec![0.3, -0.1])],
            absorbed: vec![Absorbed::default()],
            explained_logit: 0.2,
            target_class: 2,
        };
        let x = Tensor::from_vec(&[1, 2], vec![0.25, 0.75]);
        let items = vec![(&r, AgeGroup::Older, &x)];
        let profiles = aggregate_class_relevance(&items, 1).unwrap();
        let older = profiles.per_class[2].as_ref().unwrap();
        assert_eq!(older.mean_signal[0], vec![0.25, 0.75]);
        assert_eq!(older.sd_signal[0], vec![0.0, 0.0]);
    }

    #[test]
    fn total_relevance_sums_absolute_values() {
        let mk = |vals: Vec<f64>, class: AgeGroup| -> (RelevanceMap, AgeGroup, Tensor) {
            (
                RelevanceMap {
                    layer_relevance: vec![Tensor::from_vec(&[1, 1], vals)],
                    absorbed: vec![Absorbed::default()],
                    explained_logit: 1.0,
                    target_class: class.index(),
                },
                class,
                Tensor::from_vec(&[1, 1], vec![0.0]),
            )
        };
        let triples = vec![
            mk(vec![0.2], AgeGroup::Young),
            mk(vec![-0.1], AgeGroup::MiddleAged),
            mk(vec![0.3], AgeGroup::Older),
        ];
        let items: Vec<(&RelevanceMap, AgeGroup, &Tensor)> =
            triples.iter().map(|(m, c, x)| (m, *c, x)).collect();
        let profiles = aggregate_class_relevance(&items, 1).unwrap();
        let tot = total_relevance(&profiles).unwrap();
        assert!((tot[0][0] - 0.6).abs() < 1e-15);
    }
}
