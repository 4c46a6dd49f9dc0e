//! Property tests for the spec-level invariants that hold for all inputs.

use proptest::prelude::*;

use gaitlrp::data::{
    fit_norm_params, normalize_and_concatenate, resample_curve, stratified_subject_kfold,
    ChannelLayout, Dataset, GrfTrial,
};
use gaitlrp::lrp::{lrp_explain, LrpConfig};
use gaitlrp::nn::Network;
use gaitlrp::Tensor;

fn finite_curve(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-100.0f64..100.0, len..=len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resample_preserves_endpoints(curve in finite_curve(2).prop_union(finite_curve(17)), target in 2usize..40) {
        let out = resample_curve(&curve, target).unwrap();
        prop_assert_eq!(out.len(), target);
        prop_assert_eq!(out[0], curve[0]);
        prop_assert_eq!(out[target - 1], *curve.last().unwrap());
    }

    #[test]
    fn resample_identity(curve in finite_curve(9)) {
        prop_assert_eq!(resample_curve(&curve, 9).unwrap(), curve);
    }

    #[test]
    fn normalization_maps_training_channels_into_unit_interval(
        raw in proptest::collection::vec(finite_curve(8), 6),
    ) {
        let trial = GrfTrial {
            subject_id: "s".into(),
            age_years: 30,
            curves: [
                [raw[0].clone(), raw[1].clone(), raw[2].clone()],
                [raw[3].clone(), raw[4].clone(), raw[5].clone()],
            ],
        };
        let ds = Dataset::new(vec![trial.clone()]).unwrap();
        let params = fit_norm_params(&ds, &["s"], ChannelLayout::SixChannel).unwrap();
        let v = normalize_and_concatenate(&trial, &params);
        for (ch, chunk) in v.chunks(8).enumerate() {
            let (lo, hi) = params.ranges[ch];
            if lo == hi {
                prop_assert!(chunk.iter().all(|&x| x == 0.5));
            } else {
                prop_assert!(chunk.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
                let min = chunk.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = chunk.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(min.abs() < 1e-12, "channel min must map to 0");
                prop_assert!((max - 1.0).abs() < 1e-12, "channel max must map to 1");
            }
        }
    }

    #[test]
    fn kfold_invariants(seed in any::<u64>(), k in 2usize..5, extra in 0usize..7) {
        let mut trials = Vec::new();
        for (ci, age) in [25, 50, 70].iter().enumerate() {
            for s in 0..(k + extra) {
                for t in 0..2 {
                    let c = |v: f64| vec![v, v + 1.0];
                    trials.push(GrfTrial {
                        subject_id: format!("c{ci}s{s}"),
                        age_years: *age,
                        curves: [
                            [c(t as f64), c(1.0), c(2.0)],
                            [c(3.0), c(4.0), c(5.0)],
                        ],
                    });
                }
            }
        }
        let ds = Dataset::new(trials).unwrap();
        let split = stratified_subject_kfold(&ds, k, seed).unwrap();

        let mut seen = std::collections::BTreeSet::new();
        for fold in split.folds() {
            for sid in fold {
                prop_assert!(seen.insert(sid.clone()));
            }
        }
        prop_assert_eq!(seen.len(), ds.subject_ids().count());
        let sizes: Vec<usize> = split.folds().iter().map(Vec::len).collect();
        let lo = sizes.iter().min().unwrap();
        let hi = sizes.iter().max().unwrap();
        prop_assert!(hi - lo <= 3); // <=1 per class, 3 classes
    }

    #[test]
    fn softmax_probabilities_form_a_simplex(
        logits in proptest::collection::vec(-50.0f64..50.0, 4),
    ) {
        let d = gaitlrp::nn::Dense {
            in_features: 4,
            out_features: 4,
            weight: Tensor::from_vec(&[4, 4], {
                let mut w = vec![0.0; 16];
                for i in 0..4 { w[i * 4 + i] = 1.0; }
                w
            }),
            bias: Tensor::zeros(&[4]),
        };
        let net = Network::new(vec![gaitlrp::nn::Layer::Dense(d)]);
        let (_, probs) = net.predict(&Tensor::from_vec(&[4], logits)).unwrap();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn lrp_accounting_identity_holds_for_random_inputs(seed in any::<u64>(), scale in 0.1f64..2.0) {
        let net = Network::default_architecture(2, 16, seed);
        let data: Vec<f64> = (0..32).map(|i| scale * ((i as f64 * 0.37).sin())).collect();
        let x = Tensor::from_vec(&[2, 16], data);
        let trace = net.forward(&x).unwrap();
        let target = (seed % 3) as usize;
        let logit = trace.logits().data()[target];
        prop_assume!(logit.abs() > 1e-9);
        let map = lrp_explain(&net, &trace, target, &LrpConfig::default()).unwrap();
        let recovered = map.input_relevance().sum() + map.total_absorbed();
        prop_assert!((recovered - logit).abs() / logit.abs() < 1e-9);
    }
}
