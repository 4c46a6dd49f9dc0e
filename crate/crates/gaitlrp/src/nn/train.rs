//! Mini-batch gradient descent, deterministic per seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{backward, softmax_cross_entropy, Network};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 16,
            epochs: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) {
            return Err(Error::InvalidConfig("learning rate must be >= 0".into()));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig(
                "batch size and epochs must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Train in place; returns the mean loss per epoch. A non-finite loss aborts
/// with the epoch index.
pub fn train(
    network: &mut Network,
    samples: &[Tensor],
    labels: &[usize],
    config: &TrainConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if samples.is_empty() || samples.len() != labels.len() {
        return Err(Error::InvalidConfig(
            "need at least one sample and matching labels".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut acc: Vec<Option<(Tensor, Tensor)>> = vec![None; network.layers().len()];
            for &i in batch {
                let trace = network.forward(&samples[i])?;
                let (loss, logit_grad) = softmax_cross_entropy(trace.logits().data(), labels[i])?;
                if !loss.is_finite() {
                    return Err(Error::Divergence { epoch });
                }
                epoch_loss += loss;
                let grads = backward(
                    network,
                    &trace,
                    &Tensor::from_vec(trace.logits().shape(), logit_grad),
                )?;
                for (slot, g) in acc.iter_mut().zip(grads.per_layer) {
                    match (slot.as_mut(), g) {
                        (Some((aw, ab)), Some((gw, gb))) => {
                            for (a, b) in aw.data_mut().iter_mut().zip(gw.data()) {
                                *a += b;
                            }
                            for (a, b) in ab.data_mut().iter_mut().zip(gb.data()) {
                                *a += b;
                            }
                        }
                        (None, Some(g)) => *slot = Some(g),
                        _ => {}
                    }
                }
            }
            let scale = config.learning_rate / batch.len() as f64;
            for (layer, g) in network.layers_mut().iter_mut().zip(&acc) {
                if let (Some((w, b)), Some((gw, gb))) = (layer.params_mut(), g.as_ref()) {
                    for (p, gp) in w.data_mut().iter_mut().zip(gw.data()) {
                        *p -= scale * gp;
                    }
                    for (p, gp) in b.data_mut().iter_mut().zip(gb.data()) {
                        *p -= scale * gp;
                    }
                }
            }
        }
        history.push(epoch_loss / samples.len() as f64);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Dense, Layer};
    use rand::Rng;

    fn two_clouds(seed: u64) -> (Vec<Tensor>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..40 {
            let class = i % 2;
            let center = if class == 0 { -2.0 } else { 2.0 };
            let x = center + rng.gen_range(-0.5..0.5);
            let y = center + rng.gen_range(-0.5..0.5);
            xs.push(Tensor::from_vec(&[2], vec![x, y]));
            ys.push(class);
        }
        (xs, ys)
    }

    fn dense_net(seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Network::new(vec![Layer::Dense(Dense::new(2, 2, &mut rng))])
    }

    #[test]
    fn separable_clouds_reach_full_training_accuracy() {
        let (xs, ys) = two_clouds(5);
        let mut net = dense_net(1);
        let cfg = TrainConfig {
            learning_rate: 0.1,
            batch_size: 8,
            epochs: 50,
            seed: 2,
        };
        train(&mut net, &xs, &ys, &cfg).unwrap();
        let correct = xs
            .iter()
            .zip(&ys)
            .filter(|(x, &y)| net.predict(x).unwrap().0 == y)
            .count();
        assert_eq!(correct, xs.len());
    }

    #[test]
    fn same_seed_trains_identically() {
        let (xs, ys) = two_clouds(9);
        let cfg = TrainConfig {
            learning_rate: 0.05,
            batch_size: 4,
            epochs: 5,
            seed: 11,
        };
        let mut a = dense_net(3);
        let mut b = dense_net(3);
        let la = train(&mut a, &xs, &ys, &cfg).unwrap();
        let lb = train(&mut b, &xs, &ys, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let (xs, ys) = two_clouds(1);
        let mut net = dense_net(7);
        let before = net.clone();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            batch_size: 8,
            epochs: 3,
            seed: 0,
        };
        train(&mut net, &xs, &ys, &cfg).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn negative_learning_rate_is_rejected() {
        let (xs, ys) = two_clouds(1);
        let mut net = dense_net(1);
        let cfg = TrainConfig {
            learning_rate: -0.1,
            ..TrainConfig::default()
        };
        assert!(train(&mut net, &xs, &ys, &cfg).is_err());
    }
}
